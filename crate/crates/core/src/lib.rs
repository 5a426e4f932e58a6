//! Machine-generated text detection from token surprisal diversity.
//!
//! Texts are scored by a language model into per-token surprisal sequences
//! ([`provider`]), summarized by nine diversity statistics ([`features`]),
//! and classified by gradient-boosted trees ([`gbdt`]). The [`pipeline`]
//! module wires these together, optionally fusing the features with scores
//! from other detectors, and [`eval`] reports accuracy, AUROC and F1.

pub mod cli;
pub mod eval;
pub mod features;
pub mod gbdt;
pub mod pipeline;
pub mod provider;
pub mod synthetic;
