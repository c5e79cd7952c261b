//! Dense feed-forward inference for tiny pre-trained networks.
//!
//! The crate covers the whole path from published weight tables to a
//! microcontroller:
//!
//! - [`linalg`]: row-major matrices and vectors with explicit shapes.
//! - [`activations`]: sigmoid, ReLU, leaky ReLU, tanh and softmax, plus the
//!   dispatch modes that decide which of them a layer actually runs.
//! - [`network`]: layer and model types, validation, the two built-in Iris
//!   classifiers and the JSON model document.
//! - [`inference`]: neuron, dense layer and whole-network forward pass.
//! - [`eval`]: CSV ingestion, confusion matrix, accuracy and reports.
//! - [`codegen`]: self-contained MicroPython emission and model cards.
//! - [`selftest`]: the fixed-seed invariant suite behind `tinydense selftest`.
//!
//! ```
//! use tinydense::{builtin, forward, Batch};
//!
//! let spec = builtin("iris-6").unwrap();
//! let batch = Batch::from_rows(&[[6.3, 2.9, 5.6, 1.8]]).unwrap();
//! let out = forward(&spec, &batch).unwrap();
//! assert_eq!(out.shape(), (1, 1));
//! ```

pub mod activations;
pub mod codegen;
pub mod error;
pub mod eval;
pub mod inference;
pub mod linalg;
pub mod network;
pub mod pyfloat;
pub mod selftest;

pub use activations::{Activation, DispatchMode};
pub use codegen::{emit_micropython, emit_model_card, EmitOptions, ModelCard};
pub use error::{Error, Result};
pub use eval::{accuracy, confusion, evaluate, ConfusionMatrix, EvaluationReport, LabeledDataset, Scaling};
pub use inference::{dense, forward, neuron, predict, Batch};
pub use linalg::{Matrix, Vector};
pub use network::{builtin, load, save, validate, LayerSpec, NetworkSpec, ValidationReport};
