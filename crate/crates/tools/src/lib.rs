//! File formats, dataset loaders, exports and the `last` command line built
//! on `last-core`.

pub mod cli;
pub mod config;
pub mod datasets;
pub mod exports;
pub mod formats;
pub mod parallel;
