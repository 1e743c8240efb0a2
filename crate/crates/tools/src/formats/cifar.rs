//! CIFAR-10 binary batches: records of one label byte followed by 3072
//! channel-major pixel bytes.

use std::fs;
use std::path::Path;

use last_core::grad::Tensor;
use last_core::{Dataset, InputLayout};
use thiserror::Error;

pub const CIFAR_RECORD: usize = 3073;
const CLASSES: usize = 10;

#[derive(Debug, Error)]
pub enum CifarError {
    #[error("file length {0} is not a multiple of {CIFAR_RECORD}")]
    Length(usize),
    #[error("record {record} has label {label}, expected < {CLASSES}")]
    Label { record: usize, label: u8 },
    #[error("no records")]
    Empty,
    #[error(transparent)]
    Data(#[from] last_core::data::DataError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn parse_cifar(files: &[&[u8]]) -> Result<Dataset, CifarError> {
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for bytes in files {
        if bytes.len() % CIFAR_RECORD != 0 {
            return Err(CifarError::Length(bytes.len()));
        }
        for record in bytes.chunks_exact(CIFAR_RECORD) {
            let label = record[0];
            if label as usize >= CLASSES {
                return Err(CifarError::Label {
                    record: labels.len(),
                    label,
                });
            }
            labels.push(label as usize);
            data.extend(record[1..].iter().map(|&b| b as f64 / 255.0));
        }
    }
    if labels.is_empty() {
        return Err(CifarError::Empty);
    }
    let inputs = Tensor::new(vec![labels.len(), CIFAR_RECORD - 1], data).expect("sized from records");
    let layout = InputLayout::Image {
        channels: 3,
        height: 32,
        width: 32,
    };
    Ok(Dataset::new(inputs, labels, CLASSES, layout, "cifar10")?)
}

pub fn load_cifar_binary(paths: &[&Path]) -> Result<Dataset, CifarError> {
    let files = paths.iter().map(fs::read).collect::<Result<Vec<_>, _>>()?;
    let views: Vec<&[u8]> = files.iter().map(Vec::as_slice).collect();
    parse_cifar(&views)
}
