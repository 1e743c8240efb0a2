//! Proxy-guided adversarial training.
//!
//! The crate is `no_std` and only needs an allocator. It carries the whole
//! algorithmic side of the toolkit:
//!
//! - [`grad`]: dense tensors and a small reverse-mode differentiation graph,
//! - [`net`]: feedforward relu classifiers and flat parameter vectors,
//! - [`attack`]: ℓ∞ FGSM / PGD-K perturbations with restarts,
//! - [`objective`]: cross-entropy, temperature KL, self-distillation and mixup,
//! - [`trainer`]: the standard adversarial trainer, the proxy-guided trainer,
//!   SWA, SGD with momentum, schedules and a convergence harness,
//! - [`evaluator`]: accuracy, transfer matrices, loss landscapes, gradient maps,
//! - [`data`]: in-memory datasets, seeded synthetic blobs and batching.
//!
//! File formats, dataset loaders and the command line live in `last-tools`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod attack;
pub mod data;
pub mod evaluator;
pub mod grad;
pub mod net;
pub mod objective;
pub mod seed;
pub mod trainer;

pub use attack::{AttackConfig, AttackInit, Perturbation};
pub use data::{Batch, Dataset, InputLayout};
pub use grad::{Graph, NodeId, Tensor};
pub use net::{Checkpoint, NetworkSpec, ParamVector};
pub use objective::SdConfig;
pub use trainer::{MetricsRecord, Mode, TrainConfig, TrainerState};
