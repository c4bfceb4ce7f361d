//! Cross-modal adapter from speech features to text embeddings, with its
//! staged training, EOS-thresholded inference and the evaluation tools
//! around it (WER, ROUGE, CCA/PWCCA, an extractive baseline).
//!
//! The crate is `no_std` and only needs `alloc`. File formats and the
//! command-line tool live in the `xmodal` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adapter;
pub mod analysis;
pub mod corpus;
pub mod inference;
pub mod numerics;
pub mod rng;
pub mod texteval;
pub mod training;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
