//! Inference of nonverbal communication events and five-minds belief
//! dynamics from symbolic two-agent traces.
//!
//! The crate is organized bottom-up: [`world`] simulates scripted scenes and
//! derives ground truth, [`features`] turns frames into feature streams and
//! attention graphs, [`segments`] proposes interactive segments, [`events`]
//! and [`beliefs`] hold the energy terms, [`parser`] searches for the
//! minimum-energy parse graph, and [`eval`] scores predictions.

pub mod beliefs;
pub mod error;
pub mod eval;
pub mod events;
pub mod features;
pub mod geom;
pub mod parser;
pub mod segments;
pub mod softmax;
pub mod world;

pub use error::{Error, Result};
