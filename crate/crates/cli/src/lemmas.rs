//! Monte-Carlo checks of the probabilistic guarantees behind the solver.
//!
//! Each check reports an empirical rate next to the bound it is held to.

use std::fmt;

use anyhow::Result;
use num_complex::Complex64;
use nusfft::estimators::{coefficient_kernel, estimate_coefficient, estimate_energy, EstimatorConfig};
use nusfft::filters::FilterChain;
use nusfft::group_test::group_test;
use nusfft::isolation::build_isolation_family;
use nusfft::oracle::{full_dft, ExactEnergies};
use nusfft::rng::substream;
use nusfft::signal::{
    bernoulli_mask, draw_available_index, eval_exponential, exact_dft, mask_spectrum, synthesize,
    tries_for_confidence,
};
use nusfft::{AvailabilityMask, FullSignal, ModeSpec, SampledSignal, Twiddles};
use rand::Rng;
use rand_distr::StandardNormal;

/// One check's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaCheck {
    pub name: String,
    /// Measured quantity: a failure rate, success rate or deviation.
    pub empirical: f64,
    pub bound: f64,
    pub pass: bool,
}

impl fmt::Display for LemmaCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<34} empirical={:<10.5} bound={:<10.5} {}",
            self.name,
            self.empirical,
            self.bound,
            if self.pass { "ok" } else { "VIOLATED" }
        )
    }
}

fn at_most(name: String, empirical: f64, bound: f64) -> LemmaCheck {
    LemmaCheck { name, empirical, bound, pass: empirical <= bound }
}

fn at_least(name: String, empirical: f64, bound: f64) -> LemmaCheck {
    LemmaCheck { name, empirical, bound, pass: empirical >= bound }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaParams {
    pub seed: u64,
    /// Trials for the estimator checks.
    pub trials: usize,
    /// Masks for the mask-spectrum check.
    pub masks: usize,
    /// Overrides the failure probability of the estimator checks.
    pub delta: Option<f64>,
}

impl Default for LemmaParams {
    fn default() -> Self {
        Self { seed: 0, trials: 1000, masks: 10_000, delta: None }
    }
}

/// Rejection sampling with `tries_for_confidence(p, δ)` draws fails with
/// frequency at most `δ`.
pub fn availability_search(seed: u64, p_half_draws: usize, delta: f64) -> LemmaCheck {
    let n = 1024u64;
    // exactly half available, so the per-draw success probability is 1/2
    let mask = AvailabilityMask::from_flags((0..n).map(|i| i % 2 == 0).collect()).expect("nonempty");
    let tries = tries_for_confidence(0.5, delta);
    let mut rng = substream(seed, 1);
    let failures = (0..p_half_draws)
        .filter(|_| draw_available_index(&mask, &mut rng, tries).is_err())
        .count();
    at_most(format!("availability search (tries={tries})"), failures as f64 / p_half_draws as f64, delta)
}

/// Mean of `|χ̂_T(ω)|²` over Bernoulli masks against `(1−p)/(p(N−1))`,
/// as the largest relative deviation over `ω ≠ 0`.
pub fn mask_spectrum_deviation(seed: u64, n: u64, p: f64, masks: usize) -> Result<f64> {
    let tw = Twiddles::new(n)?;
    let mut acc = vec![0.0; n as usize];
    let mut rng = substream(seed, 2);
    for _ in 0..masks {
        let mask = bernoulli_mask(n, p, &mut rng)?;
        for (w, a) in acc.iter_mut().enumerate().skip(1) {
            *a += mask_spectrum(&mask, p, w as u64, &tw).norm_sqr();
        }
    }
    let expected = (1.0 - p) / (p * (n - 1) as f64);
    Ok(acc[1..]
        .iter()
        .map(|a| (a / masks as f64 / expected - 1.0).abs())
        .fold(0.0, f64::max))
}

/// Averaging the coefficient kernel over every `t` gives the exact DFT.
pub fn kernel_unbiasedness(seed: u64) -> Result<LemmaCheck> {
    let n = 256u64;
    let mut rng = substream(seed, 3);
    let values: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let s = FullSignal::new(values)?;
    let tw = Twiddles::new(n)?;
    let mut worst: f64 = 0.0;
    for w in 0..n {
        let avg: Complex64 = (0..n)
            .map(|t| coefficient_kernel(&s, w, t, &tw).expect("full signal"))
            .sum::<Complex64>()
            / n as f64;
        worst = worst.max((avg - exact_dft(&s, w)).norm());
    }
    Ok(at_most("coefficient kernel unbiasedness".into(), worst, 1e-9))
}

/// `|A − Ŝ(ω)|² ≤ ε‖S‖²` fails in at most `2δ` of the trials.
pub fn coefficient_bound(seed: u64, p: f64, epsilon: f64, delta: f64, trials: usize) -> Result<LemmaCheck> {
    let n = 1024u64;
    let modes = [
        ModeSpec::new(3, Complex64::new(7.0, 0.0)),
        ModeSpec::new(9, Complex64::new(2.0, 0.0)),
    ];
    let s = synthesize(&modes, n, 0.0, &mut substream(seed, 4))?;
    let target = exact_dft(&s, 3);
    let cfg = EstimatorConfig::new(epsilon, delta)?;
    let tw = Twiddles::new(n)?;
    let mut rng = substream(seed, 5);
    let mut failures = 0;
    for _ in 0..trials {
        let data = SampledSignal::from_full(&s, bernoulli_mask(n, p, &mut rng)?)?;
        let a = estimate_coefficient(&data, 3, &cfg, &tw, &mut rng)?;
        if (a - target).norm_sqr() > epsilon * s.energy() {
            failures += 1;
        }
    }
    Ok(at_most(
        format!("coefficient bound p={p} eps={epsilon} delta={delta}"),
        failures as f64 / trials as f64,
        (2.0 * delta).min(1.0),
    ))
}

/// A tone plus a tail carrying exactly 5% of the energy, orthogonal to it.
fn purity_95_signal<R: Rng + ?Sized>(n: u64, omega: u64, rng: &mut R) -> Result<FullSignal> {
    let noise: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let noise = FullSignal::new(noise)?;
    let along = exact_dft(&noise, omega);
    let tail: Vec<Complex64> = (0..n)
        .map(|t| noise.values()[t as usize] - along * eval_exponential(omega, t as i64, n))
        .collect();
    let tail_energy: f64 = tail.iter().map(|v| v.norm_sqr()).sum();
    let scale = (0.05 / 0.95 / tail_energy).sqrt();
    FullSignal::new(
        (0..n)
            .map(|t| eval_exponential(omega, t as i64, n) + tail[t as usize] * scale)
            .collect(),
    )
    .map_err(Into::into)
}

/// The percentile energy estimate of a 95%-pure signal is at least a third
/// of the true energy in a `1 − 1.5δ` fraction of trials.
pub fn norm_lower_bound(seed: u64, delta: f64, trials: usize) -> Result<LemmaCheck> {
    let n = 1024u64;
    let cfg = EstimatorConfig::new(0.1, delta)?;
    let mut rng = substream(seed, 6);
    let mut hits = 0;
    for _ in 0..trials {
        let omega = rng.random_range(0..n);
        let h = purity_95_signal(n, omega, &mut rng)?;
        let est = estimate_energy(&h, &cfg, &mut rng)?;
        if est.value >= h.energy() / 3.0 {
            hits += 1;
        }
    }
    Ok(at_least(
        format!("norm estimate >= energy/3 (M={})", cfg.norm_reps),
        hits as f64 / trials as f64,
        (1.0 - 1.5 * delta).max(0.0),
    ))
}

/// Group testing driven by exact band energies finds every frequency.
pub fn group_test_exhaustive(seed: u64, n: u64) -> Result<LemmaCheck> {
    let mut rng = substream(seed, 7);
    let mut found = 0;
    for w in 0..n {
        let s = FullSignal::new((0..n).map(|t| eval_exponential(w, t as i64, n)).collect())?;
        let out = group_test(&FilterChain::identity(n, 1), &ExactEnergies { source: &s }, &mut rng)?;
        if out.frequency == w {
            found += 1;
        }
    }
    Ok(at_least(format!("group test, exact energies, n={n}"), found as f64 / n as f64, 1.0))
}

/// Some member of a 4-element family is 98% pure at the dominant mode.
pub fn isolation_purity(seed: u64, trials: usize) -> Result<LemmaCheck> {
    let n = 1024u64;
    let mut rng = substream(seed, 8);
    let mut hits = 0;
    for _ in 0..trials {
        let mut freqs: Vec<u64> = Vec::new();
        while freqs.len() < 3 {
            let f = rng.random_range(0..n);
            if !freqs.contains(&f) {
                freqs.push(f);
            }
        }
        let modes = [
            ModeSpec::new(freqs[0], Complex64::new(1.0, 0.0)),
            ModeSpec::new(freqs[1], Complex64::new(0.0, 0.05)),
            ModeSpec::new(freqs[2], Complex64::new(0.05, 0.0)),
        ];
        let s = synthesize(&modes, n, 0.05, &mut rng)?;
        let family = build_isolation_family(n, 4, 1, 16, &mut rng)?;
        let mut best: f64 = 0.0;
        for m in &family {
            let f = FullSignal::new((0..n).map(|t| m.eval(&s, t)).collect::<nusfft::Result<Vec<_>>>()?)?;
            let spec = full_dft(&f)?;
            best = best.max(spec.coefficients()[m.image(freqs[0]) as usize].norm_sqr() / f.energy());
        }
        if best >= 0.98 {
            hits += 1;
        }
    }
    Ok(at_least("isolation, some member 98% pure".into(), hits as f64 / trials as f64, 0.9))
}

/// The whole suite.
pub fn run_suite(params: &LemmaParams) -> Result<Vec<LemmaCheck>> {
    let seed = params.seed;
    let mut out = vec![availability_search(seed, 100_000, params.delta.unwrap_or(0.01))];
    for p in [0.3, 0.5, 0.8] {
        let dev = mask_spectrum_deviation(seed, 256, p, params.masks)?;
        out.push(at_most(format!("mask spectrum mean, p={p}"), dev, 0.1));
    }
    out.push(kernel_unbiasedness(seed)?);
    for p in [0.7, 1.0] {
        let delta = params.delta.unwrap_or(0.05);
        out.push(coefficient_bound(seed, p, 0.1, delta, params.trials)?);
    }
    out.push(norm_lower_bound(seed, params.delta.unwrap_or(0.01), params.trials)?);
    out.push(group_test_exhaustive(seed, 256)?);
    out.push(isolation_purity(seed, 50)?);
    Ok(out)
}
