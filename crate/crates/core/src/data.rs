//! In-memory datasets, seeded synthetic blobs and deterministic batching.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::grad::Tensor;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("dataset is empty")]
    Empty,
    #[error("{inputs} inputs but {labels} labels")]
    CountMismatch { inputs: usize, labels: usize },
    #[error("label {label} outside [0, {classes})")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("input value {value} outside [0, 1]")]
    ValueOutOfRange { value: f64 },
    #[error("layout {layout:?} does not describe {dim} features")]
    Layout { layout: InputLayout, dim: usize },
    #[error("synthetic geometry infeasible: {0}")]
    Geometry(&'static str),
    #[error("batch size must be at least 1")]
    BatchSize,
}

/// How the flat feature vector of an example is arranged.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputLayout {
    Flat,
    /// Channel-major `(channels, height, width)`.
    Image {
        channels: usize,
        height: usize,
        width: usize,
    },
}

impl InputLayout {
    pub fn channels(&self) -> usize {
        match *self {
            InputLayout::Flat => 1,
            InputLayout::Image { channels, .. } => channels,
        }
    }
}

/// A labelled set of examples with features in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    inputs: Tensor,
    labels: Vec<usize>,
    num_classes: usize,
    layout: InputLayout,
    pub split: String,
}

/// A contiguous slice of a permuted dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub inputs: Tensor,
    pub labels: Vec<usize>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

impl Dataset {
    pub fn new(
        inputs: Tensor,
        labels: Vec<usize>,
        num_classes: usize,
        layout: InputLayout,
        split: impl Into<String>,
    ) -> Result<Self, DataError> {
        if labels.is_empty() {
            return Err(DataError::Empty);
        }
        if inputs.rank() != 2 || inputs.shape()[0] != labels.len() {
            return Err(DataError::CountMismatch {
                inputs: inputs.rows(),
                labels: labels.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(DataError::LabelOutOfRange {
                label,
                classes: num_classes,
            });
        }
        if let Some(&value) = inputs.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(DataError::ValueOutOfRange { value });
        }
        let dim = inputs.shape()[1];
        if let InputLayout::Image {
            channels,
            height,
            width,
        } = layout
        {
            if channels * height * width != dim {
                return Err(DataError::Layout { layout, dim });
            }
        }
        Ok(Dataset {
            inputs,
            labels,
            num_classes,
            layout,
            split: split.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.shape()[1]
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn layout(&self) -> InputLayout {
        self.layout
    }

    pub fn inputs(&self) -> &Tensor {
        &self.inputs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn select(&self, indices: &[usize]) -> Batch {
        Batch {
            inputs: self.inputs.gather_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Examples `start..end` in stored order.
    pub fn range(&self, start: usize, end: usize) -> Batch {
        let idx: Vec<usize> = (start..end.min(self.len())).collect();
        self.select(&idx)
    }

    pub fn example(&self, i: usize) -> Batch {
        self.select(&[i])
    }

    /// The whole dataset as one batch.
    pub fn as_batch(&self) -> Batch {
        Batch {
            inputs: self.inputs.clone(),
            labels: self.labels.clone(),
        }
    }

    /// First `n` examples.
    pub fn truncate(&self, n: usize) -> Result<Dataset, DataError> {
        let b = self.range(0, n);
        Dataset::new(b.inputs, b.labels, self.num_classes, self.layout, self.split.clone())
    }
}

/// Gaussian blobs around axis-aligned class means in `[0, 1]^dim`.
///
/// Class `c` has mean `lo·1 + margin·e_c` with `lo = (1 − margin)/2`, so any
/// two means are `margin·√2` apart. Noise has standard deviation `margin/6`
/// and samples are clamped to the unit box. Examples are grouped by class.
pub fn synth_blobs(
    num_classes: usize,
    per_class: usize,
    dim: usize,
    margin: f64,
    seed: u64,
) -> Result<Dataset, DataError> {
    if per_class == 0 {
        return Err(DataError::Empty);
    }
    if !(margin > 0.0 && margin <= 1.0) {
        return Err(DataError::Geometry("margin must lie in (0, 1]"));
    }
    if num_classes < 2 {
        return Err(DataError::Geometry("need at least two classes"));
    }
    if num_classes > dim {
        return Err(DataError::Geometry("more classes than coordinate axes"));
    }
    let lo = (1.0 - margin) / 2.0;
    let noise = Normal::new(0.0, margin / 6.0).expect("finite std");
    let mut rng = seed::rng(seed);
    let n = num_classes * per_class;
    let mut data = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for class in 0..num_classes {
        for _ in 0..per_class {
            for d in 0..dim {
                let mean = if d == class { lo + margin } else { lo };
                data.push((mean + noise.sample(&mut rng)).clamp(0.0, 1.0));
            }
            labels.push(class);
        }
    }
    let inputs = Tensor::new(alloc::vec![n, dim], data).expect("n × dim values");
    Dataset::new(inputs, labels, num_classes, InputLayout::Flat, "synthetic")
}

/// Batches of a `(seed, epoch)`-seeded permutation; the last batch may be short.
pub fn batch_iter(dataset: &Dataset, batch_size: usize, seed: u64, epoch: u64) -> Result<BatchIter<'_>, DataError> {
    if batch_size == 0 {
        return Err(DataError::BatchSize);
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut seed::rng(seed::mix(seed, epoch)));
    Ok(BatchIter {
        dataset,
        order,
        batch_size,
        next: 0,
    })
}

pub struct BatchIter<'a> {
    dataset: &'a Dataset,
    order: Vec<usize>,
    batch_size: usize,
    next: usize,
}

impl BatchIter<'_> {
    /// The permutation this iterator walks through.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Number of batches per epoch, `⌈N / B⌉`.
    pub fn num_batches(&self) -> usize {
        self.order.len().div_ceil(self.batch_size)
    }
}

impl Iterator for BatchIter<'_> {
    type Item = Batch;

    fn next(&mut self) -> Option<Batch> {
        if self.next >= self.order.len() {
            return None;
        }
        let end = (self.next + self.batch_size).min(self.order.len());
        let batch = self.dataset.select(&self.order[self.next..end]);
        self.next = end;
        Some(batch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn tiny() -> Dataset {
        let x = Tensor::new(vec![5, 1], vec![0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        Dataset::new(x, vec![0, 1, 0, 1, 0], 2, InputLayout::Flat, "t").unwrap()
    }

    #[test]
    fn validation() {
        let x = Tensor::new(vec![2, 1], vec![0.0, 1.5]).unwrap();
        assert!(matches!(
            Dataset::new(x, vec![0, 0], 2, InputLayout::Flat, ""),
            Err(DataError::ValueOutOfRange { .. })
        ));
        let x = Tensor::new(vec![2, 1], vec![0.0, 0.5]).unwrap();
        assert!(matches!(
            Dataset::new(x.clone(), vec![0, 2], 2, InputLayout::Flat, ""),
            Err(DataError::LabelOutOfRange { .. })
        ));
        assert!(matches!(
            Dataset::new(x, vec![0], 2, InputLayout::Flat, ""),
            Err(DataError::CountMismatch { .. })
        ));
    }

    #[test]
    fn synth_blobs_is_seeded() {
        let a = synth_blobs(3, 20, 5, 0.5, 9).unwrap();
        assert_eq!(a, synth_blobs(3, 20, 5, 0.5, 9).unwrap());
        assert_ne!(a, synth_blobs(3, 20, 5, 0.5, 10).unwrap());
        assert_eq!(a.len(), 60);
        assert!(a.inputs().data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn synth_blobs_rejects_degenerate_geometry() {
        assert_eq!(synth_blobs(2, 0, 4, 0.5, 0), Err(DataError::Empty));
        assert!(matches!(synth_blobs(5, 10, 4, 0.5, 0), Err(DataError::Geometry(_))));
        assert!(matches!(synth_blobs(2, 10, 4, 0.0, 0), Err(DataError::Geometry(_))));
    }

    #[test]
    fn one_batch_when_size_covers_dataset() {
        let d = tiny();
        let batches: Vec<_> = batch_iter(&d, 5, 1, 0).unwrap().collect();
        assert_eq!(batches.len(), 1);
        let mut seen: Vec<f64> = batches[0].inputs.data().to_vec();
        seen.sort_by(f64::total_cmp);
        assert_eq!(seen, d.inputs().data());
    }

    #[test]
    fn short_final_batch_is_kept() {
        let d = tiny();
        let it = batch_iter(&d, 2, 1, 0).unwrap();
        assert_eq!(it.num_batches(), 3);
        let sizes: Vec<usize> = it.map(|b| b.len()).collect();
        assert_eq!(sizes, vec![2, 2, 1]);
        assert_eq!(batch_iter(&d, 0, 1, 0).err(), Some(DataError::BatchSize));
    }

    #[test]
    fn epochs_reshuffle_deterministically() {
        let d = synth_blobs(2, 50, 3, 0.5, 0).unwrap();
        let a = batch_iter(&d, 7, 3, 0).unwrap().order().to_vec();
        let b = batch_iter(&d, 7, 3, 0).unwrap().order().to_vec();
        let c = batch_iter(&d, 7, 3, 1).unwrap().order().to_vec();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
