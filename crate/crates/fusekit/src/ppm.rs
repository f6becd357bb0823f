//! Binary portable pixmap (`P6`, max value 255) reader and writer, and
//! directory-backed image source/sink keyed by `<id>.ppm`.

use std::path::{Path, PathBuf};

use fusekit_core::augmentation::{ImageBuffer, ImageSink, ImageSource};

use crate::error::{FormatError, Result};

pub fn encode_ppm(img: &ImageBuffer) -> Result<Vec<u8>> {
    let rgb: Vec<u8> = match img.channels() {
        3 => img.pixels().to_vec(),
        1 => img.pixels().iter().flat_map(|&v| [v, v, v]).collect(),
        c => {
            return Err(fusekit_core::Error::Augmentation(format!(
                "cannot store a {c}-channel image as PPM"
            ))
            .into())
        }
    };
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(&rgb);
    Ok(out)
}

pub fn decode_ppm(path: &Path, bytes: &[u8]) -> Result<ImageBuffer> {
    let bad = |msg: &str| FormatError::parse(path, 0, format!("PPM: {msg}"));
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?);
    }
    if fields[0] != "P6" {
        return Err(bad("expected magic `P6`"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("invalid number in header"));
    let (width, height, max) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if max != 255 {
        return Err(bad("only max value 255 is supported"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let raster = bytes.get(pos..).unwrap_or_default();
    if raster.len() != width * height * 3 {
        return Err(bad("raster size does not match dimensions"));
    }
    Ok(ImageBuffer::new(height, width, 3, raster.to_vec())?)
}

pub fn read_ppm(path: &Path) -> Result<ImageBuffer> {
    let bytes = std::fs::read(path).map_err(|e| FormatError::io(path, e))?;
    decode_ppm(path, &bytes)
}

pub fn write_ppm(path: &Path, img: &ImageBuffer) -> Result<()> {
    std::fs::write(path, encode_ppm(img)?).map_err(|e| FormatError::io(path, e))
}

pub struct PpmDirectory {
    dir: PathBuf,
}

impl PpmDirectory {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        PpmDirectory { dir: dir.into() }
    }

    pub fn path_for(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.ppm"))
    }
}

impl ImageSource for PpmDirectory {
    fn load(&mut self, id: &str) -> fusekit_core::Result<ImageBuffer> {
        let path = self.path_for(id);
        if !path.is_file() {
            return Err(fusekit_core::Error::ImageNotFound(path.display().to_string()));
        }
        read_ppm(&path).map_err(|e| fusekit_core::Error::Augmentation(e.to_string()))
    }
}

impl ImageSink for PpmDirectory {
    fn store(&mut self, output_id: &str, image: &ImageBuffer) -> fusekit_core::Result<()> {
        write_ppm(&self.path_for(output_id), image).map_err(|e| fusekit_core::Error::Sink(e.to_string()))
    }
}
