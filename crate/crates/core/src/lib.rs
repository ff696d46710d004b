//! LightWaveS: multivariate time-series classification with a reduced
//! two-level scattering transform over a fixed bank of 84 kernels, two-phase
//! (optionally distributed) feature selection and a ridge classifier.
//!
//! Training keeps only the selected features, so inference convolves just the
//! channel/kernel/dilation paths those features need.
//!
//! ```no_run
//! use lightwaves::distrib::{train_in_process, TrainConfig};
//! use lightwaves::inference::Predictor;
//! use lightwaves::io::load_dataset;
//!
//! let train = load_dataset("train.ts")?;
//! let outcome = train_in_process(&TrainConfig::default(), &train)?;
//! let test = load_dataset("test.ts")?;
//! let predicted = Predictor::new(&outcome.model, test.n_channels())?.predict_dataset(&test)?;
//! # Ok::<(), lightwaves::Error>(())
//! ```

pub mod classifier;
pub mod cli;
pub mod distrib;
pub mod error;
pub mod inference;
pub mod io;
pub mod kernels;
pub mod macs;
pub mod scattering;
pub mod selection;

pub use error::{Error, Result};
