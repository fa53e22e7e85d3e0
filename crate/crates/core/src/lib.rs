//! Curation pipeline for ultra-high-resolution image corpora and the
//! frequency-aware training math used to post-train on them.
//!
//! * [`metrics`]: per-image sharpness, edge, texture and entropy measures.
//! * [`curation`]: corpus scanning, scoring, percentile selection, manifests.
//! * [`spectral`]: orthonormal DFT and the soft-weighted spectral loss.
//! * [`dots`]: Beta timestep sampling and its special functions.
//! * [`toy`]: a small rectified-flow trainer exercising both.

pub mod config;
pub mod curation;
pub mod dots;
pub mod error;
pub mod metrics;
pub mod spectral;
pub mod toy;

pub use error::{Error, Result};
