//! Big-endian IDX files (MNIST layout): `u8` images of rank 3 and `u8` labels.

use std::fs;
use std::path::Path;

use last_core::grad::Tensor;
use last_core::{Dataset, InputLayout};
use thiserror::Error;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum IdxError {
    #[error("bad IDX magic {found:#010x}, expected {expected:#010x}")]
    BadMagic { expected: u32, found: u32 },
    #[error("IDX payload truncated: need {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error(transparent)]
    Data(#[from] last_core::data::DataError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32, IdxError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or(IdxError::Truncated {
            expected: at + 4,
            found: bytes.len(),
        })
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<(), IdxError> {
    let found = read_u32(bytes, 0)?;
    if found != expected {
        return Err(IdxError::BadMagic { expected, found });
    }
    Ok(())
}

fn payload(bytes: &[u8], offset: usize, len: usize) -> Result<&[u8], IdxError> {
    bytes.get(offset..offset + len).ok_or(IdxError::Truncated {
        expected: offset + len,
        found: bytes.len(),
    })
}

/// Parses an image file and a label file already in memory. Pixels are
/// divided by 255.
pub fn parse_idx(images: &[u8], labels: &[u8], num_classes: usize) -> Result<Dataset, IdxError> {
    check_magic(images, IMAGES_MAGIC)?;
    check_magic(labels, LABELS_MAGIC)?;
    let n = read_u32(images, 4)? as usize;
    let (h, w) = (read_u32(images, 8)? as usize, read_u32(images, 12)? as usize);
    let n_labels = read_u32(labels, 4)? as usize;
    if n != n_labels {
        return Err(IdxError::CountMismatch {
            images: n,
            labels: n_labels,
        });
    }
    let pixels = payload(images, 16, n * h * w)?;
    let label_bytes = payload(labels, 8, n)?;
    let data = pixels.iter().map(|&b| b as f64 / 255.0).collect();
    let inputs = Tensor::new(vec![n, h * w], data).expect("sized from header");
    let layout = InputLayout::Image {
        channels: 1,
        height: h,
        width: w,
    };
    let labels = label_bytes.iter().map(|&b| b as usize).collect();
    Ok(Dataset::new(inputs, labels, num_classes, layout, "idx")?)
}

/// Ten-class IDX pair from disk.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset, IdxError> {
    parse_idx(&fs::read(images_path)?, &fs::read(labels_path)?, 10)
}
