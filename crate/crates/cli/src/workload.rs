//! Synthetic test signals and single recovery runs with scoring.

use std::time::Duration;

use anyhow::{ensure, Result};
use num_complex::Complex64;
use nusfft::oracle::relative_coefficient_error;
use nusfft::pursuit::{recover, PursuitConfig};
use nusfft::rng::{substream, StreamRng};
use nusfft::signal::{bernoulli_mask, synthesize};
use nusfft::{FullSignal, ModeSpec, Representation, SampledSignal};
use rand::Rng;

/// `b` distinct unit-modulus modes with uniform random phases.
///
/// Frequencies are uniform on `[0, n)`, or on `[-band, band]` (wrapped)
/// when `band` is set.
pub fn random_modes<R: Rng + ?Sized>(n: u64, b: usize, band: Option<u64>, rng: &mut R) -> Result<Vec<ModeSpec>> {
    let pool = band.map_or(n, |w| (2 * w + 1).min(n));
    ensure!(b as u64 <= pool, "cannot draw {b} distinct frequencies from {pool}");
    let mut modes: Vec<ModeSpec> = Vec::with_capacity(b);
    while modes.len() < b {
        let f = match band {
            Some(w) => (rng.random_range(-(w as i64)..=w as i64)).rem_euclid(n as i64) as u64,
            None => rng.random_range(0..n),
        };
        if modes.iter().any(|m| m.frequency == f) {
            continue;
        }
        let phase = rng.random::<f64>() * std::f64::consts::TAU;
        modes.push(ModeSpec::new(f, Complex64::from_polar(1.0, phase)));
    }
    Ok(modes)
}

/// Signal-to-noise ratio in dB, defined on energies:
/// `20·log₁₀(‖S‖²/σ²)`.
pub fn snr_db(signal_energy: f64, sigma: f64) -> Option<f64> {
    (sigma > 0.0).then(|| 20.0 * (signal_energy / (sigma * sigma)).log10())
}

/// One synthetic recovery problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    pub n: u64,
    pub b: usize,
    pub p: f64,
    pub sigma: f64,
    /// Restrict frequencies to `|ω| ≤ band`.
    pub band: Option<u64>,
}

/// A generated problem: the full signal, what the solver sees, and the
/// planted modes.
#[derive(Debug, Clone)]
pub struct Instance {
    pub full: FullSignal,
    pub data: SampledSignal,
    pub truth: Representation,
}

impl Workload {
    pub fn instance(&self, rng: &mut StreamRng) -> Result<Instance> {
        let modes = random_modes(self.n, self.b, self.band, rng)?;
        let full = synthesize(&modes, self.n, self.sigma, rng)?;
        let mask = bernoulli_mask(self.n, self.p, rng)?;
        let data = SampledSignal::from_full(&full, mask)?;
        let truth = Representation::from_terms(self.n, modes.iter().map(|m| (m.frequency, m.amplitude)).collect())?;
        Ok(Instance { full, data, truth })
    }
}

/// Scored result of one recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Every planted frequency is in the output.
    pub success: bool,
    /// `‖c_true − c_R‖/‖c_true‖`.
    pub relative_error: f64,
    /// Largest coefficient error over the planted modes.
    pub max_coefficient_error: f64,
    pub iterations: usize,
    pub samples_touched: u64,
    pub time_total: Duration,
    pub time_wo_sampling: Duration,
    pub representation: Representation,
}

pub fn score(truth: &Representation, report: &nusfft::PursuitReport) -> RunOutcome {
    let rep = &report.representation;
    let success = truth.terms().iter().all(|&(f, _)| rep.coefficient(f).is_some());
    let max_coefficient_error = truth
        .terms()
        .iter()
        .map(|&(f, c)| (c - rep.coefficient(f).unwrap_or_default()).norm())
        .fold(0.0, f64::max);
    RunOutcome {
        success,
        relative_error: relative_coefficient_error(truth, rep),
        max_coefficient_error,
        iterations: report.iterations,
        samples_touched: report.samples_touched,
        time_total: report.time_total,
        time_wo_sampling: report.time_wo_sampling,
        representation: rep.clone(),
    }
}

/// Generate run `index` of a cell from `seed` and recover it. The problem
/// and the solver draw from separate sub-streams.
pub fn run_one(workload: &Workload, cfg: &PursuitConfig, seed: u64, index: u64) -> Result<RunOutcome> {
    let inst = workload.instance(&mut substream(seed, 2 * index))?;
    let report = recover(&inst.data, cfg, &mut substream(seed, 2 * index + 1))?;
    Ok(score(&inst.truth, &report))
}
