//! Core building blocks for evaluating visual-privacy protection methods.
//!
//! The crate is `no_std` (plus `alloc`) and fully deterministic: it contains
//! the region anonymization operators and the metric math for the three
//! evaluation dimensions — privacy (per-attribute average precision and its
//! classwise mean), utility (IoU matching, precision/recall/F1, PR curves)
//! and practicality (throughput, robustness, intelligibility, fused by a
//! weighted sum of min-max normalized components) — along with report
//! assembly and re-weighting.
//!
//! File formats, image codecs and the CLI live in the companion `privlens`
//! crate; everything here operates on in-memory values.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod anonymize;
pub mod error;
pub mod imageops;
pub mod model;
pub mod practicality;
pub mod privacy;
pub mod report;
pub mod utility;

pub use error::{Error, Result};
