//! Combines N OCR hypotheses of the same text line into a single, more
//! accurate output.
//!
//! The pieces fit together as a small pipeline:
//!
//! 1. [`llocs`] reads and writes per-character recognition records
//!    (character, pixel span, confidence, alternatives).
//! 2. [`alignment`] aligns N hypotheses into equal-width columns and cuts
//!    out maximal disagreement regions.
//! 3. [`voting`] resolves each region: a majority vote over region lengths
//!    first, then per-slot character selection by plain majority or by
//!    summed confidences including alternatives.
//! 4. [`evaluation`] scores the result (edit distance, CER, improvement
//!    rates, chi-square significance).
//! 5. [`folds`] plans leave-one-fold-out train/test splits over a ground
//!    truth pool and picks the best model per fold.
//! 6. [`synth`] simulates imperfect OCR models over known ground truth so
//!    the whole pipeline can be exercised without an OCR engine.
//!
//! Everything here is pure and deterministic; the companion CLI crate adds
//! file IO and orchestration.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod alignment;
pub mod error;
pub mod evaluation;
pub mod folds;
pub mod llocs;
pub mod synth;
pub mod voting;

pub use error::Error;

pub type Result<T> = core::result::Result<T, Error>;
