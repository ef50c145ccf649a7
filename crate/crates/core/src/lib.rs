//! Step-up and step-down multiple testing under dependence.
//!
//! The crate builds critical-value schedules (truncated, adaptive,
//! early-stopped, sparsity-oriented), applies the procedure and dependence
//! correction factors that keep them FDR-valid without independence
//! assumptions, evaluates the matching FDR bounds, and verifies everything
//! with a reproducible Monte-Carlo harness.
//!
//! Entry points:
//! - [`pvalues::PValueSet`] and [`stepup::step_up`] / [`stepup::step_down`]
//!   for running a procedure,
//! - [`schedules`] for every schedule constructor,
//! - [`corrections`] for harmonic sums and the `C_k`/`D_k` factors,
//! - [`bounds`] for FDR bounds with applicability verdicts,
//! - [`sim`] for Monte-Carlo verification.
//!
//! ```
//! use fdr_control::schedules::truncated_bh_schedule;
//! use fdr_control::{step_up, PValueSet};
//!
//! let p = PValueSet::new(vec![0.001, 0.008, 0.039, 0.041, 0.27, 0.60])?;
//! let schedule = truncated_bh_schedule(p.m(), 3, 0.05)?;
//! let result = step_up(&p, &schedule)?;
//! assert_eq!(result.r(), 2);
//! # Ok::<(), fdr_control::Error>(())
//! ```

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod corrections;
pub mod error;
pub mod estimators;
pub mod normal;
pub mod pvalues;
pub mod schedules;
pub mod sim;
pub mod stepup;

pub use error::{Error, Result};
pub use pvalues::{GroundTruth, PValueSet};
pub use schedules::{CriticalSchedule, GeneratorFamily, GeneratorSpec, ScheduleMeta};
pub use stepup::{step_down, step_up, RejectionResult, TestMode};
