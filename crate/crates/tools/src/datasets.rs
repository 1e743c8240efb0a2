//! Resolves the `[data]` section into train and test sets.

use last_core::data::synth_blobs;
use last_core::seed::{self, Stream};
use last_core::Dataset;
use thiserror::Error;

use crate::config::{DataSource, RunConfig};
use crate::formats::{load_cifar_binary, load_idx, CifarError, IdxError};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("data.{0} is required for this source")]
    Missing(&'static str),
    #[error(transparent)]
    Idx(#[from] IdxError),
    #[error(transparent)]
    Cifar(#[from] CifarError),
    #[error(transparent)]
    Data(#[from] last_core::data::DataError),
}

impl LoadError {
    /// Whether the failure comes from reading files rather than from the config.
    pub fn is_io(&self) -> bool {
        matches!(self, LoadError::Idx(IdxError::Io(_)) | LoadError::Cifar(CifarError::Io(_)))
    }
}

fn limit(d: Dataset, n: usize) -> Result<Dataset, LoadError> {
    if n == 0 || n >= d.len() {
        Ok(d)
    } else {
        Ok(d.truncate(n)?)
    }
}

/// `(train, test)`.
pub fn load_datasets(cfg: &RunConfig) -> Result<(Dataset, Dataset), LoadError> {
    let d = &cfg.data;
    let (train, test) = match d.source {
        DataSource::Blobs => (
            synth_blobs(d.classes, d.per_class, d.dim, d.margin, seed::derive(d.seed, Stream::Data, 0))?,
            synth_blobs(d.classes, d.test_per_class, d.dim, d.margin, seed::derive(d.seed, Stream::Data, 1))?,
        ),
        DataSource::Idx => {
            let path = |p: &Option<std::path::PathBuf>, key| p.clone().ok_or(LoadError::Missing(key));
            (
                load_idx(&path(&d.train_images, "train_images")?, &path(&d.train_labels, "train_labels")?)?,
                load_idx(&path(&d.test_images, "test_images")?, &path(&d.test_labels, "test_labels")?)?,
            )
        }
        DataSource::Cifar => {
            if d.cifar_train.is_empty() {
                return Err(LoadError::Missing("cifar_train"));
            }
            if d.cifar_test.is_empty() {
                return Err(LoadError::Missing("cifar_test"));
            }
            let train: Vec<&std::path::Path> = d.cifar_train.iter().map(|p| p.as_path()).collect();
            let test: Vec<&std::path::Path> = d.cifar_test.iter().map(|p| p.as_path()).collect();
            (load_cifar_binary(&train)?, load_cifar_binary(&test)?)
        }
    };
    Ok((limit(train, d.train_limit)?, limit(test, d.test_limit)?))
}
