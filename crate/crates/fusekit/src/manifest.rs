//! Augmentation manifests: `output_id,source_id,class,op`, one row per
//! output image, in plan order.

use std::path::Path;

use fusekit_core::augmentation::ManifestRow;

use crate::error::Result;
use crate::text::{csv_lines, write_file};

pub const MANIFEST_HEADER: [&str; 4] = ["output_id", "source_id", "class", "op"];

pub fn format_manifest(rows: &[ManifestRow]) -> String {
    csv_lines(
        &MANIFEST_HEADER,
        rows.iter().map(|r| {
            [
                r.output_id.clone(),
                r.source_id.clone(),
                r.class.to_string(),
                r.op.to_string(),
            ]
        }),
    )
}

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    write_file(path, &format_manifest(rows))
}
