//! File formats, image IO and the `fusekit` command line on top of
//! [`fusekit_core`].

pub mod cli;
pub mod error;
pub mod labels;
pub mod manifest;
pub mod ppm;
pub mod predictions;
pub mod report;
mod text;
pub mod weights;

pub use error::{FormatError, Result};
