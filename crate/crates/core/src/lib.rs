//! Subject-normalized PPG pipeline for binary cognitive-load classification.

pub mod classify;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod features;
pub mod io;
pub mod normalize;
pub mod pipeline;
pub mod signal;
pub mod synth;
pub mod wavelet;

pub use config::{PipelineConfig, Strategy};
pub use error::{Category, Error, Result};
