//! The greedy pursuit loop: isolate, identify, estimate, subtract.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::estimators::{
    estimate_coefficient, estimate_energy_mom, BandEnergies, EstimatorConfig, GreedyEnergies,
    InterpolatedEnergies,
};
use crate::group_test::group_test;
use crate::interpolation::default_window;
use crate::isolation::build_isolation_family;
use crate::rng::fork;
use crate::signal::{Probe, Representation, Residual, SampledSignal, Twiddles};

/// How filtered energies cope with missing samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormMode {
    /// Only evaluate filters whose whole support is available.
    Greedy,
    /// Fill missing support samples by quadratic interpolation.
    Interpolated,
}

impl NormMode {
    /// Default wide-filter half-width. The greedy search needs every support
    /// sample present, which is hopeless for wide filters at moderate
    /// availability, so it uses the narrowest filter.
    pub fn default_q1(self) -> u32 {
        match self {
            NormMode::Greedy => 1,
            NormMode::Interpolated => 10,
        }
    }
}

impl fmt::Display for NormMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormMode::Greedy => "greedy",
            NormMode::Interpolated => "interpolated",
        })
    }
}

impl FromStr for NormMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(NormMode::Greedy),
            "interpolated" => Ok(NormMode::Interpolated),
            other => Err(Error::InvalidParameter(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PursuitConfig {
    /// Number of terms in the output.
    pub b: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub mode: NormMode,
    /// Iteration budget; `None` uses [`iteration_budget`].
    pub iter_budget: Option<usize>,
    /// Extra cap on iterations, applied on top of the budget.
    pub iteration_cap: Option<usize>,
    /// Absolute stopping threshold `ι`.
    pub stop_threshold: Option<f64>,
    /// When no absolute threshold is set, `ι` is this fraction of the
    /// initial residual energy estimate.
    pub stop_relative: f64,
    /// Isolation family members per iteration.
    pub family_size: usize,
    /// Wide-filter half-width; `None` picks [`NormMode::default_q1`].
    pub q1: Option<u32>,
    /// Group-testing bands per level.
    pub bands: u32,
    /// Accuracy of the cheap estimates used to rank candidates.
    pub coarse_epsilon: f64,
    /// Interpolation search half-window; `None` picks [`default_window`].
    pub interp_window: Option<u64>,
}

impl PursuitConfig {
    pub fn new(b: usize, epsilon: f64, delta: f64, mode: NormMode) -> Self {
        Self {
            b,
            epsilon,
            delta,
            mode,
            iter_budget: None,
            iteration_cap: None,
            stop_threshold: None,
            stop_relative: epsilon,
            family_size: 4,
            q1: None,
            bands: 16,
            coarse_epsilon: 0.3,
            interp_window: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.b == 0 {
            return Err(Error::InvalidParameter("B must be ≥ 1".into()));
        }
        if self.family_size == 0 {
            return Err(Error::InvalidParameter("family size must be ≥ 1".into()));
        }
        if !(3..=16).contains(&self.bands) {
            return Err(Error::InvalidParameter(format!("band count {} outside 3..=16", self.bands)));
        }
        if self.iter_budget == Some(0) || self.iteration_cap == Some(0) {
            return Err(Error::InvalidParameter("iteration budget must be ≥ 1".into()));
        }
        let bad = |x: f64| x.is_nan() || x < 0.0;
        if bad(self.stop_relative) || self.stop_threshold.is_some_and(bad) {
            return Err(Error::InvalidParameter("stopping threshold must be ≥ 0".into()));
        }
        EstimatorConfig::new(self.epsilon, self.delta)?;
        EstimatorConfig::new(self.coarse_epsilon, self.delta)?;
        Ok(())
    }

    /// Iterations allowed for length `n`.
    pub fn effective_budget(&self, n: u64) -> usize {
        let base = self
            .iter_budget
            .unwrap_or_else(|| iteration_budget(self.b, n as f64, self.delta, self.epsilon));
        self.iteration_cap.map_or(base, |cap| base.min(cap))
    }
}

/// `⌈B·ln N·ln(1/δ)/ε²⌉`, at least 1.
pub fn iteration_budget(b: usize, n: f64, delta: f64, epsilon: f64) -> usize {
    let raw = b as f64 * n.ln() * (1.0 / delta).ln() / (epsilon * epsilon);
    // tolerate rounding noise in products that are integral in exact arithmetic
    let snapped = if (raw - raw.round()).abs() < 1e-9 { raw.round() } else { raw.ceil() };
    (snapped as usize).max(1)
}

/// True iff the residual energy estimate is below `ι`.
pub fn stopping_test(residual_estimate: f64, iota: f64) -> bool {
    residual_estimate < iota
}

/// What one iteration did.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Residual energy estimate at the start of the iteration.
    pub residual_estimate: f64,
    /// Distinct candidate frequencies returned by the family.
    pub candidates: usize,
    /// Frequency added to the representation, if any.
    pub frequency: Option<u64>,
    pub coefficient: Option<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PursuitReport {
    pub representation: Representation,
    pub iterations: usize,
    /// Every availability probe and value read, rejected draws included.
    pub samples_touched: u64,
    pub time_total: Duration,
    /// `time_total` minus time spent searching for available data.
    pub time_wo_sampling: Duration,
    pub trace: Vec<IterationRecord>,
    /// The stopping test fired.
    pub converged: bool,
}

impl PursuitReport {
    /// The budget ran out before the stopping test fired.
    pub fn incomplete(&self) -> bool {
        !self.converged
    }
}

/// Recover a `B`-term representation of the signal behind `data`.
pub fn recover<R: Rng + ?Sized>(data: &SampledSignal, cfg: &PursuitConfig, rng: &mut R) -> Result<PursuitReport> {
    cfg.validate()?;
    let start = Instant::now();
    let n = data.n();
    let tw = Twiddles::new(n)?;
    let probe = Probe::new(data);
    let density = data.mask().density();
    let fine = EstimatorConfig::new(cfg.epsilon, cfg.delta)?;
    let coarse = fine.with_epsilon(cfg.coarse_epsilon)?;
    let q1 = cfg.q1.unwrap_or_else(|| cfg.mode.default_q1());
    let window = cfg.interp_window.unwrap_or_else(|| default_window(density));
    let budget = cfg.effective_budget(n);
    let mut stream = fork(rng);

    let mut rep = Representation::new(n);
    let mut trace = Vec::new();
    let mut iota = cfg.stop_threshold;
    let mut converged = false;

    for _ in 0..budget {
        let residual = Residual::new(&probe, &rep, &tw);
        let e_res = estimate_energy_mom(&residual, &fine, rng)?;
        let threshold = *iota.get_or_insert(cfg.stop_relative * e_res);
        if stopping_test(e_res, threshold) {
            converged = true;
            break;
        }

        let family = build_isolation_family(n, cfg.family_size, q1, cfg.bands, rng)?;
        let greedy = GreedyEnergies { source: &residual, cfg: &fine, density };
        let interpolated = InterpolatedEnergies { source: &residual, cfg: &fine, window };
        let energies: &dyn BandEnergies = match cfg.mode {
            NormMode::Greedy => &greedy,
            NormMode::Interpolated => &interpolated,
        };
        let mut candidates: Vec<u64> = Vec::with_capacity(family.len());
        for member in &family {
            if let Ok(out) = group_test(member.chain(), energies, &mut stream) {
                let omega = member.residual_frequency(out.frequency);
                if !candidates.contains(&omega) {
                    candidates.push(omega);
                }
            }
        }

        let mut best: Option<(u64, Complex64)> = None;
        for &omega in &candidates {
            let a = estimate_coefficient(&residual, omega, &coarse, &tw, rng)?;
            if best.is_none_or(|(_, b)| a.norm_sqr() > b.norm_sqr()) {
                best = Some((omega, a));
            }
        }
        // a term this small relative to the residual is estimator noise
        let gate = cfg.epsilon / cfg.b as f64 * e_res;
        let update = match best {
            Some((omega, a)) if a.norm_sqr() >= gate => {
                let c = estimate_coefficient(&residual, omega, &fine, &tw, rng)?;
                (c.norm_sqr() >= gate).then_some((omega, c))
            }
            _ => None,
        };
        trace.push(IterationRecord {
            residual_estimate: e_res,
            candidates: candidates.len(),
            frequency: update.map(|(w, _)| w),
            coefficient: update.map(|(_, c)| c),
        });
        if let Some((omega, c)) = update {
            rep.add(omega, c);
        }
    }

    rep.prune(cfg.b);
    let time_total = start.elapsed();
    Ok(PursuitReport {
        representation: rep,
        iterations: trace.len(),
        samples_touched: probe.touched(),
        time_total,
        time_wo_sampling: time_total.saturating_sub(probe.sampling_time()),
        trace,
        converged,
    })
}
