//! Experiment harness for `nusfft`: synthetic workloads, benchmark tables
//! and Monte-Carlo checks of the estimator guarantees.

pub mod bench;
pub mod lemmas;
pub mod workload;

use anyhow::Result;
use nusfft::rng::StreamRng;
use nusfft::signal::synthesize;
use nusfft::FullSignal;

use crate::workload::random_modes;

/// `b` unit modes with random phases on top of a white Gaussian tail of
/// total energy `σ²`: a signal with no exact sparse representation.
pub fn dense_signal(n: u64, b: usize, sigma: f64, rng: &mut StreamRng) -> Result<FullSignal> {
    let modes = random_modes(n, b, None, rng)?;
    Ok(synthesize(&modes, n, sigma, rng)?)
}
