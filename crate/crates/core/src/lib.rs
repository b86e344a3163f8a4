//! Blur simulation, Laplacian-variance sharpness routing and multi-model
//! evaluation for tiled slide images.
//!
//! The pipeline: tile rasters ([`imgcore`]), blur them in controlled amounts
//! ([`blursim`]), map sharpness to blur bands ([`calib`]), score tiles with
//! per-band predictors ([`predict`]) and compare routed and single-model
//! AUCs at tile and slide level ([`routeval`]).

pub mod blursim;
pub mod calib;
pub mod commands;
pub mod config;
pub mod corpus;
pub mod error;
pub mod imgcore;
pub mod predict;
pub mod rng;
pub mod routeval;
pub mod synth;

pub use error::{Error, Result};
