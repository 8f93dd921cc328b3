//! Minimal dense-array math with reverse-mode automatic differentiation.
//!
//! A [`Graph`] records operations over [`Array`] values in topological order
//! and replays them backwards to produce gradients for the trainable arrays
//! held in a [`ParamSet`]. On top of that sit the recurrent kernels
//! ([`LstmParams`], [`bilstm`]) and the training primitives used by the
//! tagger and the lemmatizer: [`Adam`], [`clip_by_global_norm`] and inverted
//! [`dropout`].

mod array;
mod dropout;
mod error;
pub mod gradcheck;
mod graph;
mod lstm;
pub mod ops;
mod optim;
mod params;

pub use array::Array;
pub use dropout::{dropout, Mode};
pub use error::{AutodiffError, Result};
pub use graph::{evaluate_with_gradients, Graph, NodeId};
pub use lstm::{bilstm, bilstm_values, lstm_sequence, lstm_sequence_values, LstmParams, LstmState};
pub use optim::{clip_by_global_norm, global_norm, Adam, AdamConfig};
pub use params::{Gradients, ParamId, ParamSet};
