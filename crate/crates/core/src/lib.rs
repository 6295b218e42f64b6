//! Sublinear-time recovery of a near-optimal `B`-term Fourier representation
//! from an incomplete set of equispaced samples.
//!
//! The signal model is a length-`N` periodic complex signal (`N` a power of
//! two) of which only the samples flagged in an [`AvailabilityMask`] can be
//! read. [`pursuit::recover`] runs a randomized greedy pursuit: each
//! iteration isolates a dominant frequency of the residual with random
//! dilation/modulation filters, identifies it by group testing on band
//! energies, and estimates its coefficient with a median of means over
//! available samples. Missing samples needed by the filters are either
//! skipped (greedy mode) or filled by quadratic Lagrange interpolation.
//!
//! Nothing on the recovery path touches more than a polylogarithmic number
//! of samples; the dense routines in [`oracle`] exist for verification.

pub mod error;
pub mod estimators;
pub mod filters;
pub mod group_test;
pub mod interpolation;
pub mod io;
pub mod isolation;
pub mod oracle;
pub mod pursuit;
pub mod rng;
pub mod signal;

pub use error::{Error, Result};
pub use estimators::{EstimatorConfig, NormEstimate};
pub use filters::FilterChain;
pub use pursuit::{NormMode, PursuitConfig, PursuitReport};
pub use signal::{
    AvailabilityMask, FullSignal, ModeSpec, Probe, Representation, SampledSignal, Source,
    Twiddles,
};

pub use num_complex::Complex64;
