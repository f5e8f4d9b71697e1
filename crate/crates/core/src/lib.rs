//! Temporal graph network for multiparty social interaction.
//!
//! Gaze events between seated subjects form a continuous-time directed graph.
//! Each event carries a 14-element one-hot message (speaking status, relative
//! seating, roles). A memory-based temporal graph network learns next-gaze
//! link prediction (phase 1) and next-speaker node prediction (phase 2).
//!
//! Layout:
//! - [`tensor`], [`autograd`], [`gradcheck`]: f64 tensors with a reverse-mode tape.
//! - [`session`]: sessions, event streams, file formats and splits.
//! - [`datagen`]: seeded synthetic sessions.
//! - [`features`]: message encoding and time encoding.
//! - [`tgn`]: memory, neighbor store, embeddings, decoders, batch processing.
//! - [`negatives`]: session-aware negative sampling.
//! - [`optim`], [`train`]: Adam and the two-phase training loop.
//! - [`baseline`]: the history (persistence) model.
//! - [`eval`]: metrics and the model-vs-history evaluation protocol.
//! - [`experiments`]: variant ablation and message-encoding comparison.
//! - [`config`]: the run configuration shared by the CLI.

pub mod autograd;
pub mod baseline;
pub mod config;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod experiments;
pub mod features;
pub mod gradcheck;
pub mod negatives;
pub mod optim;
pub mod rng;
pub mod session;
pub mod tensor;
pub mod tgn;
pub mod train;

pub use error::{Error, Result};
