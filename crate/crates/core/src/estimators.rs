//! Randomized coefficient and energy estimators.
//!
//! Coefficients are estimated by a median of means of the kernel
//! `√n·r(t)·e^{-2πiωt/n}` over uniformly drawn available samples. Energies
//! of filtered signals are the 60th percentile of `n|H(t_k)|²` over a few
//! random `t_k`; the greedy variant only accepts `t_k` whose whole filter
//! support is available, the interpolated variant fills the gaps.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::filters::{ChainKernel, FilterChain};
use crate::interpolation::interpolate_value;
use crate::rng::StreamRng;
use crate::signal::{draw_available_from, tries_for_confidence, Source, Twiddles};

/// Hard cap on the per-slot search for a fully available filter support.
pub const MAX_GROUP_TRIES_CAP: u64 = 10_000;

/// Default bound on rejection-sampling draws for one available index.
pub const DEFAULT_MAX_TRIES: u64 = 1 << 20;

/// Percentile used by the energy estimators.
pub const ENERGY_PERCENTILE: f64 = 0.6;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Number of groups whose means enter the median.
    pub n_outer: usize,
    /// Samples per group.
    pub m_inner: usize,
    /// Samples per energy estimate.
    pub norm_reps: usize,
    /// Rejection-sampling bound for a single available index.
    pub max_tries: u64,
    /// Override for the per-slot support search bound.
    pub max_group_tries: Option<u64>,
}

fn check_unit(name: &str, x: f64, allow_one: bool) -> Result<()> {
    let ok = x > 0.0 && (x < 1.0 || (allow_one && x == 1.0));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {x}")))
    }
}

impl EstimatorConfig {
    /// Repetition counts `⌈2 ln(1/δ)⌉`, `⌈8/ε²⌉` and `⌈1.2 ln(1/δ)⌉`.
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        check_unit("epsilon", epsilon, false)?;
        check_unit("delta", delta, true)?;
        Ok(Self {
            epsilon,
            delta,
            n_outer: Self::outer_for(delta),
            m_inner: Self::inner_for(epsilon),
            norm_reps: Self::norm_reps_for(delta),
            max_tries: DEFAULT_MAX_TRIES,
            max_group_tries: None,
        })
    }

    pub fn outer_for(delta: f64) -> usize {
        ((2.0 * (1.0 / delta).ln()).ceil() as usize).max(1)
    }

    pub fn inner_for(epsilon: f64) -> usize {
        ((8.0 / (epsilon * epsilon)).ceil() as usize).max(1)
    }

    pub fn norm_reps_for(delta: f64) -> usize {
        ((1.2 * (1.0 / delta).ln()).ceil() as usize).max(1)
    }

    /// Same failure probability, different accuracy.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        check_unit("epsilon", epsilon, false)?;
        Ok(Self {
            epsilon,
            m_inner: Self::inner_for(epsilon),
            ..self.clone()
        })
    }

    /// Tries needed to find a `t` whose `support` samples are all available
    /// with confidence `1 − δ`, capped at [`MAX_GROUP_TRIES_CAP`].
    pub fn group_tries(&self, density: f64, support: usize) -> u64 {
        if let Some(m) = self.max_group_tries {
            return m.max(1);
        }
        let per_try = density.powi(support as i32);
        tries_for_confidence(per_try, self.delta).min(MAX_GROUP_TRIES_CAP)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("epsilon", self.epsilon, false)?;
        check_unit("delta", self.delta, true)?;
        if self.n_outer == 0 || self.m_inner == 0 || self.norm_reps == 0 || self.max_tries == 0 {
            return Err(Error::InvalidParameter("repetition counts must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// An energy estimate and how much evidence backs it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    /// Number of `t_k` that entered the percentile.
    pub samples: usize,
    /// Fewer samples than requested were gathered.
    pub low_confidence: bool,
}

/// Nearest-rank percentile (`q ∈ (0, 1]`) of `values`; 0 for an empty slice.
pub fn percentile_nearest_rank(values: &mut [f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let rank = ((q * values.len() as f64).ceil() as usize).clamp(1, values.len());
    values[rank - 1]
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

/// Coordinatewise median of complex values.
pub fn complex_median(values: &[Complex64]) -> Complex64 {
    let mut re: Vec<f64> = values.iter().map(|c| c.re).collect();
    let mut im: Vec<f64> = values.iter().map(|c| c.im).collect();
    Complex64::new(median(&mut re), median(&mut im))
}

/// `√n·r(t)·e^{-2πiωt/n}`, or `None` where `r(t)` is unavailable.
#[inline]
pub fn coefficient_kernel<S: Source + ?Sized>(
    source: &S,
    omega: u64,
    t: u64,
    tw: &Twiddles,
) -> Option<Complex64> {
    let v = source.value(t)?;
    Some(v * tw.unit(omega.wrapping_mul(t)).conj() * (source.n() as f64).sqrt())
}

/// Median over `n_outer` groups of the mean of `m_inner` kernel samples.
pub fn estimate_coefficient<S: Source + ?Sized, R: Rng + ?Sized>(
    source: &S,
    omega: u64,
    cfg: &EstimatorConfig,
    tw: &Twiddles,
    rng: &mut R,
) -> Result<Complex64> {
    let mut idx = vec![0u64; cfg.m_inner];
    let mut means = Vec::with_capacity(cfg.n_outer);
    for _ in 0..cfg.n_outer {
        source.sampling(|| -> Result<()> {
            for slot in idx.iter_mut() {
                *slot = draw_available_from(source, rng, cfg.max_tries)?;
            }
            Ok(())
        })?;
        let mut acc = Complex64::new(0.0, 0.0);
        for &t in &idx {
            acc += coefficient_kernel(source, omega, t, tw).ok_or(Error::MissingSample(t))?;
        }
        means.push(acc / cfg.m_inner as f64);
    }
    Ok(complex_median(&means))
}

fn finish(mut per_band: Vec<Vec<f64>>, wanted: usize) -> Vec<NormEstimate> {
    per_band
        .iter_mut()
        .map(|vals| NormEstimate {
            samples: vals.len(),
            low_confidence: vals.len() < wanted,
            value: percentile_nearest_rank(vals, ENERGY_PERCENTILE),
        })
        .collect()
}

/// Energies of every band of `kernel`, sharing the sampled `t_k` across
/// bands. Each slot searches up to the configured bound for a `t` with a
/// fully available support; once a slot fails the estimate stops early
/// and is flagged.
pub fn band_energies_greedy<S: Source + ?Sized, R: Rng + ?Sized>(
    source: &S,
    kernel: &ChainKernel,
    cfg: &EstimatorConfig,
    density: f64,
    rng: &mut R,
) -> Vec<NormEstimate> {
    let n = source.n();
    let tries = cfg.group_tries(density, kernel.chain().support_size());
    let mut per_band = vec![Vec::with_capacity(cfg.norm_reps); kernel.band_count()];
    let mut out = vec![Complex64::new(0.0, 0.0); kernel.band_count()];
    for _ in 0..cfg.norm_reps {
        let found = source.sampling(|| {
            (0..tries)
                .map(|_| rng.random_range(0..n))
                .find(|&t| kernel.all_available(source, t))
        });
        let Some(t) = found else { break };
        if kernel.eval(source, t, &mut out).is_err() {
            break;
        }
        for (vals, h) in per_band.iter_mut().zip(&out) {
            vals.push(n as f64 * h.norm_sqr());
        }
    }
    finish(per_band, cfg.norm_reps)
}

/// Energies of every band of `kernel` at exactly `norm_reps` uniform `t_k`,
/// interpolating missing source values from neighbours within `window`.
/// A `t_k` that cannot be interpolated is skipped and the estimate flagged.
pub fn band_energies_interpolated<S: Source + ?Sized, R: Rng + ?Sized>(
    source: &S,
    kernel: &ChainKernel,
    cfg: &EstimatorConfig,
    window: u64,
    rng: &mut R,
) -> Vec<NormEstimate> {
    let n = source.n();
    let mut per_band = vec![Vec::with_capacity(cfg.norm_reps); kernel.band_count()];
    let mut out = vec![Complex64::new(0.0, 0.0); kernel.band_count()];
    for _ in 0..cfg.norm_reps {
        let t = rng.random_range(0..n);
        let Ok(sums) = kernel.inner_sums(t, |x| interpolate_value(source, x, window)) else {
            continue;
        };
        kernel.combine(t, &sums, &mut out);
        for (vals, h) in per_band.iter_mut().zip(&out) {
            vals.push(n as f64 * h.norm_sqr());
        }
    }
    finish(per_band, cfg.norm_reps)
}

/// Greedy energy estimate of `chain` at its own band.
pub fn estimate_norm_greedy<S: Source + ?Sized, R: Rng + ?Sized>(
    source: &S,
    chain: &FilterChain,
    cfg: &EstimatorConfig,
    density: f64,
    rng: &mut R,
) -> NormEstimate {
    let kernel = ChainKernel::new(chain, &[chain.band]);
    band_energies_greedy(source, &kernel, cfg, density, rng)[0]
}

/// Interpolated energy estimate of `chain` at its own band.
pub fn estimate_norm_interpolated<S: Source + ?Sized, R: Rng + ?Sized>(
    source: &S,
    chain: &FilterChain,
    cfg: &EstimatorConfig,
    window: u64,
    rng: &mut R,
) -> NormEstimate {
    let kernel = ChainKernel::new(chain, &[chain.band]);
    band_energies_interpolated(source, &kernel, cfg, window, rng)[0]
}

/// Unfiltered energy estimate: 60th percentile of `n|r(t)|²` over
/// `norm_reps` available `t`.
pub fn estimate_energy<S: Source + ?Sized, R: Rng + ?Sized>(
    source: &S,
    cfg: &EstimatorConfig,
    rng: &mut R,
) -> Result<NormEstimate> {
    let n = source.n() as f64;
    let mut vals = Vec::with_capacity(cfg.norm_reps);
    for _ in 0..cfg.norm_reps {
        let t = source.sampling(|| draw_available_from(source, rng, cfg.max_tries))?;
        let v = source.value(t).ok_or(Error::MissingSample(t))?;
        vals.push(n * v.norm_sqr());
    }
    Ok(NormEstimate {
        samples: vals.len(),
        low_confidence: false,
        value: percentile_nearest_rank(&mut vals, ENERGY_PERCENTILE),
    })
}

/// Unfiltered energy estimate by median of means of `n|r(t)|²`, with the
/// coefficient estimator's group sizes. Unbiased within each group, so far
/// steadier than the percentile on multi-mode signals.
pub fn estimate_energy_mom<S: Source + ?Sized, R: Rng + ?Sized>(
    source: &S,
    cfg: &EstimatorConfig,
    rng: &mut R,
) -> Result<f64> {
    let n = source.n() as f64;
    let mut idx = vec![0u64; cfg.m_inner];
    let mut means = Vec::with_capacity(cfg.n_outer);
    for _ in 0..cfg.n_outer {
        source.sampling(|| -> Result<()> {
            for slot in idx.iter_mut() {
                *slot = draw_available_from(source, rng, cfg.max_tries)?;
            }
            Ok(())
        })?;
        let mut acc = 0.0;
        for &t in &idx {
            acc += n * source.value(t).ok_or(Error::MissingSample(t))?.norm_sqr();
        }
        means.push(acc / cfg.m_inner as f64);
    }
    Ok(median(&mut means))
}

/// Source of per-band energy estimates for group testing.
pub trait BandEnergies {
    fn band_energies(&self, kernel: &ChainKernel, rng: &mut StreamRng) -> Vec<NormEstimate>;
}

/// Greedy estimator over an incomplete source of availability `density`.
pub struct GreedyEnergies<'a, S: Source + ?Sized> {
    pub source: &'a S,
    pub cfg: &'a EstimatorConfig,
    pub density: f64,
}

impl<S: Source + ?Sized> BandEnergies for GreedyEnergies<'_, S> {
    fn band_energies(&self, kernel: &ChainKernel, rng: &mut StreamRng) -> Vec<NormEstimate> {
        band_energies_greedy(self.source, kernel, self.cfg, self.density, rng)
    }
}

/// Interpolating estimator with 1D neighbour search half-window `window`.
pub struct InterpolatedEnergies<'a, S: Source + ?Sized> {
    pub source: &'a S,
    pub cfg: &'a EstimatorConfig,
    pub window: u64,
}

impl<S: Source + ?Sized> BandEnergies for InterpolatedEnergies<'_, S> {
    fn band_energies(&self, kernel: &ChainKernel, rng: &mut StreamRng) -> Vec<NormEstimate> {
        band_energies_interpolated(self.source, kernel, self.cfg, self.window, rng)
    }
}
