//! Transient-evoked otoacoustic emission (TEOAE) analysis.
//!
//! The pipeline turns raw click-response epochs into denoised emission
//! waveforms, extracts spectral features (energy, phase-gradient group
//! delay) and principal-component scores, compares outcome groups with
//! Welch's t-test, and estimates prognosis accuracy with a sigmoid-kernel
//! SVM under grid-searched stratified cross-validation. The `synth` module
//! produces cohorts with known ground truth for every stage.

pub mod cohort;
pub mod epoching;
pub mod error;
pub mod io;
pub mod par;
pub mod spectral;
pub mod stats;
pub mod pca;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};
