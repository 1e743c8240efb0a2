//! On-disk formats: the checkpoint container and the two dataset encodings.

mod checkpoint;
mod cifar;
mod idx;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CheckpointError, MAGIC};
pub use cifar::{load_cifar_binary, parse_cifar, CifarError, CIFAR_RECORD};
pub use idx::{load_idx, parse_idx, IdxError, IMAGES_MAGIC, LABELS_MAGIC};
