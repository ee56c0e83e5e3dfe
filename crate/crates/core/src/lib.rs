//! Trimmed-mean estimation of many means at once, with Gaussian and bootstrap
//! approximations for the sup-statistic, robustness to adversarial
//! contamination, and a seeded Monte Carlo harness that checks all of it.
//!
//! The function family is always a finite set of coordinate projections, so
//! a data set is an `n x d` [`SampleMatrix`].

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bootstrap;
pub mod cli;
pub mod contamination;
pub mod diagnostics;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod gaussian;
pub mod lp;
pub mod matrix;
pub mod numeric;
pub mod plot;
pub mod rng;
pub mod vecmean;

pub use contamination::{contaminate, AdversaryKind, AdversaryPolicy, ContaminatedSample, TargetRows};
pub use distributions::{DistributionSpec, Family, Moments, Scale};
pub use error::{Error, Result};
pub use estimators::{plan_bootstrap, plan_gaussian, trimmed_mean, trimmed_mean_matrix, truncated_mean, TrimPlan};
pub use matrix::SampleMatrix;
pub use rng::Stream;
