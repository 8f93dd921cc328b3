//! Joint morphological tagging and lemmatization.
//!
//! The tagger predicts one morphological tag per word from a character-level
//! word embedder and a word-level biLSTM. The lemmatizer is a character
//! encoder-decoder with hard monotonic attention whose alignment is summed
//! out exactly with a log-space forward recursion. [`pipeline`] combines the
//! two with jackknifed training and greedy or crunching decoding, and
//! [`eval`] holds the measurement and analysis tools.

pub mod data;
mod error;
pub mod eval;
pub mod lemmatizer;
pub mod pipeline;
pub mod synthetic;
pub mod tagger;
pub mod training;

pub use error::{Error, Result};
