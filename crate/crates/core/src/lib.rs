//! Commit-message quality toolkit.
//!
//! Mines commit histories, drops bot-generated messages, normalizes message
//! text, detects whether a message explains why a change was made and what
//! it changes, evaluates those detectors with cross-validation and curates
//! well-written messages into a dataset.

pub mod bots;
pub mod classify;
pub mod config;
pub mod corpus;
pub mod embed;
pub mod evaluate;
pub mod normalize;
pub mod report;
pub mod sampling;
pub mod taxonomy;
pub mod tensor;
