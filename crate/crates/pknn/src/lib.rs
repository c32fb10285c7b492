//! Integer-only training and inference of fully connected neural
//! networks.
//!
//! Everything on the training path is fixed-width signed-integer
//! arithmetic: values with 8-bit semantics in [-127, 127], 32-bit
//! accumulation, truncating division. Learning uses direct feedback
//! alignment — each layer receives the output error through its own
//! fixed random feedback matrix — which keeps error magnitudes bounded
//! independent of depth, unlike integer backpropagation whose deltas
//! grow with every weight multiplication. An instrumented BP mode and a
//! closed-form bit-bound auditor make that difference observable, and a
//! small floating-point reference exists for accuracy comparison.
//!
//! ```no_run
//! use pknn::activations::ActivationKind;
//! use pknn::data::Dataset;
//! use pknn::network::Network;
//! use pknn::rng::Rng;
//! use pknn::trainer::{self, TrainConfig};
//!
//! # fn main() -> pknn::Result<()> {
//! let train = Dataset::from_idx_files("train-images-idx3-ubyte", "train-labels-idx1-ubyte")?;
//! let val = Dataset::from_idx_files("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")?;
//! let mut rng = Rng::seed_from_u64(1);
//! let mut net = Network::build(&[784, 100, 50, 10], ActivationKind::PocketTanh, 1, &mut rng, (-8, 8))?;
//! let metrics = trainer::train(&mut net, &train, &val, &TrainConfig::default())?;
//! println!("best val acc {:.4}", metrics.iter().map(|m| m.val_accuracy).fold(0.0, f64::max));
//! # Ok(())
//! # }
//! ```

pub mod activations;
pub mod baseline;
pub mod data;
pub mod error;
pub mod loss;
pub mod matrix;
pub mod network;
pub mod overflow;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
