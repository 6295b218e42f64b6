//! Signal model: periodic length-`N` complex signals, their orthonormal
//! Fourier basis, availability masks, and instrumented sample access.

use std::cell::Cell;
use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub fn check_length(n: u64) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::LengthNotPowerOfTwo(n));
    }
    Ok(())
}

/// `φ_ω(t) = e^{2πiωt/n} / √n`, with `t` reduced mod `n`.
pub fn eval_exponential(omega: u64, t: i64, n: u64) -> Complex64 {
    let t = t.rem_euclid(n as i64) as u128;
    let k = (omega as u128 * t) % n as u128;
    Complex64::from_polar(1.0 / (n as f64).sqrt(), TAU * k as f64 / n as f64)
}

/// Two-level table of `e^{2πik/n}` using `O(√n)` memory.
///
/// `k = hi·2^s + lo`, so one lookup in each half and a complex product give
/// any root of unity; the tables are small enough to stay in cache.
#[derive(Debug, Clone)]
pub struct Twiddles {
    n: u64,
    mask: u64,
    shift: u32,
    lo: Vec<Complex64>,
    hi: Vec<Complex64>,
    inv_sqrt_n: f64,
}

impl Twiddles {
    pub fn new(n: u64) -> Result<Self> {
        check_length(n)?;
        let bits = n.trailing_zeros();
        let shift = bits.div_ceil(2);
        let lo_len = 1u64 << shift;
        let hi_len = n >> shift;
        let root = |k: u64| Complex64::from_polar(1.0, TAU * k as f64 / n as f64);
        Ok(Self {
            n,
            mask: n - 1,
            shift,
            lo: (0..lo_len).map(root).collect(),
            hi: (0..hi_len).map(|h| root(h << shift)).collect(),
            inv_sqrt_n: 1.0 / (n as f64).sqrt(),
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `e^{2πik/n}` for any `k` (reduced mod `n`).
    #[inline]
    pub fn unit(&self, k: u64) -> Complex64 {
        let k = k & self.mask;
        self.hi[(k >> self.shift) as usize] * self.lo[(k & ((1 << self.shift) - 1)) as usize]
    }

    /// `φ_ω(t)`.
    #[inline]
    pub fn basis(&self, omega: u64, t: u64) -> Complex64 {
        self.unit(omega.wrapping_mul(t)) * self.inv_sqrt_n
    }
}

/// One term of a synthetic superposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpec {
    pub frequency: u64,
    pub amplitude: Complex64,
}

impl ModeSpec {
    pub fn new(frequency: u64, amplitude: Complex64) -> Self {
        Self {
            frequency,
            amplitude,
        }
    }
}

/// Complete ground-truth signal. Only synthesis and the oracle see this.
#[derive(Debug, Clone, PartialEq)]
pub struct FullSignal {
    n: u64,
    values: Vec<Complex64>,
}

impl FullSignal {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        let n = values.len() as u64;
        check_length(n)?;
        Ok(Self { n, values })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn at(&self, t: i64) -> Complex64 {
        self.values[t.rem_euclid(self.n as i64) as usize]
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }
}

/// `S(t) = Σ c_i φ_{ω_i}(t) + ν(t)` with complex white noise normalised so
/// that `E‖ν‖² = noise_sigma²`.
pub fn synthesize<R: Rng + ?Sized>(
    modes: &[ModeSpec],
    n: u64,
    noise_sigma: f64,
    rng: &mut R,
) -> Result<FullSignal> {
    check_length(n)?;
    if noise_sigma.is_nan() || noise_sigma < 0.0 {
        return Err(Error::InvalidParameter(format!("noise sigma {noise_sigma}")));
    }
    let mut seen = std::collections::HashSet::new();
    for m in modes {
        if m.frequency >= n {
            return Err(Error::OutOfRange {
                index: m.frequency,
                n,
            });
        }
        if !seen.insert(m.frequency) {
            return Err(Error::DuplicateFrequency(m.frequency));
        }
    }
    let tw = Twiddles::new(n)?;
    let per_part = noise_sigma / (2.0 * n as f64).sqrt();
    let values = (0..n)
        .map(|t| {
            let clean: Complex64 = modes
                .iter()
                .map(|m| m.amplitude * tw.basis(m.frequency, t))
                .sum();
            if per_part > 0.0 {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                clean + Complex64::new(re, im) * per_part
            } else {
                clean
            }
        })
        .collect();
    FullSignal::new(values)
}

/// `Ŝ(ω) = (1/√n) Σ_t S(t) e^{-2πiωt/n}` by direct summation.
pub fn exact_dft(signal: &FullSignal, omega: u64) -> Complex64 {
    let n = signal.n;
    let scale = 1.0 / (n as f64).sqrt();
    let mut acc = Complex64::new(0.0, 0.0);
    for (t, v) in signal.values.iter().enumerate() {
        let k = (omega as u128 * t as u128) % n as u128;
        acc += v * Complex64::from_polar(1.0, -TAU * k as f64 / n as f64);
    }
    acc * scale
}

/// Which of the `n` equispaced samples exist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AvailabilityMask {
    n: u64,
    flags: Vec<bool>,
    available: u64,
}

impl AvailabilityMask {
    pub fn from_flags(flags: Vec<bool>) -> Result<Self> {
        let n = flags.len() as u64;
        check_length(n)?;
        let available = flags.iter().filter(|&&f| f).count() as u64;
        if available == 0 {
            return Err(Error::InvalidParameter("mask has no available samples".into()));
        }
        Ok(Self {
            n,
            flags,
            available,
        })
    }

    pub fn full(n: u64) -> Result<Self> {
        Self::from_flags(vec![true; n as usize])
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn available_count(&self) -> u64 {
        self.available
    }

    /// `p = L / N`.
    pub fn density(&self) -> f64 {
        self.available as f64 / self.n as f64
    }

    #[inline]
    pub fn is_available(&self, x: u64) -> bool {
        self.flags[(x & (self.n - 1)) as usize]
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn available_indices(&self) -> impl Iterator<Item = u64> + '_ {
        self.flags
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(i, _)| i as u64)
    }
}

/// I.i.d. Bernoulli(`p`) availability; an all-missing draw is rejected and
/// redrawn.
pub fn bernoulli_mask<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> Result<AvailabilityMask> {
    check_length(n)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    loop {
        let flags: Vec<bool> = (0..n).map(|_| p >= 1.0 || rng.random::<f64>() < p).collect();
        if flags.iter().any(|&f| f) {
            return AvailabilityMask::from_flags(flags);
        }
    }
}

/// Spectrum of the availability indicator, `χ̂_T(ω) = (1/(pN))·Σ_{j∈T} e^{−2πiωj/N}`
/// with `p` the nominal density. `χ̂_T(0) = 1` when exactly `pN` samples
/// are present.
pub fn mask_spectrum(mask: &AvailabilityMask, p: f64, omega: u64, tw: &Twiddles) -> Complex64 {
    let n = mask.n();
    let sum: Complex64 = mask.available_indices().map(|j| tw.unit(n.wrapping_sub(omega.wrapping_mul(j)))).sum();
    sum / (p * n as f64)
}

/// Smallest `k` with `k > ln δ / ln(1 − p)`: that many independent trials of
/// a `p`-probable event see it at least once with probability `≥ 1 − δ`.
pub fn tries_for_confidence(p: f64, delta: f64) -> u64 {
    if p >= 1.0 {
        return 1;
    }
    if p <= 0.0 {
        return u64::MAX;
    }
    let bound = delta.ln() / (1.0 - p).ln();
    (bound.floor() as u64).saturating_add(1)
}

/// Uniform available index by rejection sampling.
pub fn draw_available_index<R: Rng + ?Sized>(
    mask: &AvailabilityMask,
    rng: &mut R,
    max_tries: u64,
) -> Result<u64> {
    for _ in 0..max_tries.max(1) {
        let t = rng.random_range(0..mask.n);
        if mask.is_available(t) {
            return Ok(t);
        }
    }
    Err(Error::AvailabilityExhausted(max_tries))
}

/// The algorithm's only view of the data: a mask plus values where it is set.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    mask: AvailabilityMask,
    values: Vec<Complex64>,
}

impl SampledSignal {
    pub fn from_full(full: &FullSignal, mask: AvailabilityMask) -> Result<Self> {
        if full.n != mask.n {
            return Err(Error::LengthMismatch {
                expected: mask.n,
                actual: full.n,
            });
        }
        let values = full
            .values
            .iter()
            .zip(&mask.flags)
            .map(|(&v, &f)| if f { v } else { Complex64::new(0.0, 0.0) })
            .collect();
        Ok(Self { mask, values })
    }

    /// Build from `(index, value)` pairs; every other index is missing.
    pub fn from_samples(n: u64, samples: &[(u64, Complex64)]) -> Result<Self> {
        check_length(n)?;
        let mut flags = vec![false; n as usize];
        let mut values = vec![Complex64::new(0.0, 0.0); n as usize];
        for &(i, v) in samples {
            if i >= n {
                return Err(Error::OutOfRange { index: i, n });
            }
            flags[i as usize] = true;
            values[i as usize] = v;
        }
        Ok(Self {
            mask: AvailabilityMask::from_flags(flags)?,
            values,
        })
    }

    pub fn n(&self) -> u64 {
        self.mask.n
    }

    pub fn mask(&self) -> &AvailabilityMask {
        &self.mask
    }

    #[inline]
    pub fn get(&self, x: u64) -> Option<Complex64> {
        let i = (x & (self.mask.n - 1)) as usize;
        self.mask.flags[i].then(|| self.values[i])
    }

    pub fn samples(&self) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.mask
            .available_indices()
            .map(|i| (i, self.values[i as usize]))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            mask: self.mask.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }
}

/// Sparse Fourier representation `R = Σ c(ω) φ_ω`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Representation {
    n: u64,
    terms: Vec<(u64, Complex64)>,
}

impl Representation {
    pub fn new(n: u64) -> Self {
        Self {
            n,
            terms: Vec::new(),
        }
    }

    pub fn from_terms(n: u64, terms: Vec<(u64, Complex64)>) -> Result<Self> {
        check_length(n)?;
        let mut rep = Self::new(n);
        let mut seen = std::collections::HashSet::new();
        for (f, c) in terms {
            if f >= n {
                return Err(Error::OutOfRange { index: f, n });
            }
            if !seen.insert(f) {
                return Err(Error::DuplicateFrequency(f));
            }
            rep.terms.push((f, c));
        }
        Ok(rep)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn terms(&self) -> &[(u64, Complex64)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, omega: u64) -> Option<Complex64> {
        self.terms.iter().find(|(f, _)| *f == omega).map(|(_, c)| *c)
    }

    /// `R ← R + c φ_ω`, merging with an existing term at `ω`.
    pub fn add(&mut self, omega: u64, c: Complex64) {
        let omega = omega & (self.n - 1);
        match self.terms.iter_mut().find(|(f, _)| *f == omega) {
            Some((_, existing)) => *existing += c,
            None => self.terms.push((omega, c)),
        }
    }

    /// Keep the `b` largest-magnitude terms, ties to the lower frequency.
    pub fn prune(&mut self, b: usize) {
        self.terms.sort_by(|a, b| {
            b.1.norm_sqr()
                .total_cmp(&a.1.norm_sqr())
                .then(a.0.cmp(&b.0))
        });
        self.terms.truncate(b);
    }

    #[inline]
    pub fn eval_with(&self, tw: &Twiddles, t: u64) -> Complex64 {
        self.terms.iter().map(|&(f, c)| c * tw.basis(f, t)).sum()
    }

    pub fn sorted_by_frequency(&self) -> Vec<(u64, Complex64)> {
        let mut t = self.terms.clone();
        t.sort_by_key(|&(f, _)| f);
        t
    }
}

/// `R(t)` by direct evaluation, `O(B)`.
pub fn eval_representation(rep: &Representation, t: i64) -> Complex64 {
    rep.terms
        .iter()
        .map(|&(f, c)| c * eval_exponential(f, t, rep.n))
        .sum()
}

/// Pointwise access to a possibly incomplete signal.
pub trait Source {
    fn n(&self) -> u64;
    fn available(&self, x: u64) -> bool;
    fn value(&self, x: u64) -> Option<Complex64>;

    /// Run `f` as a data-search phase. Instrumented sources book its wall
    /// time separately; plain sources just run it.
    fn sampling<T>(&self, f: impl FnOnce() -> T) -> T {
        f()
    }
}

/// Uniform available index of `source` by rejection sampling.
pub fn draw_available_from<S: Source + ?Sized, R: Rng + ?Sized>(
    source: &S,
    rng: &mut R,
    max_tries: u64,
) -> Result<u64> {
    let n = source.n();
    for _ in 0..max_tries.max(1) {
        let t = rng.random_range(0..n);
        if source.available(t) {
            return Ok(t);
        }
    }
    Err(Error::AvailabilityExhausted(max_tries))
}

impl Source for SampledSignal {
    fn n(&self) -> u64 {
        self.mask.n
    }
    fn available(&self, x: u64) -> bool {
        self.mask.is_available(x)
    }
    fn value(&self, x: u64) -> Option<Complex64> {
        self.get(x)
    }
}

impl Source for FullSignal {
    fn n(&self) -> u64 {
        self.n
    }
    fn available(&self, _x: u64) -> bool {
        true
    }
    fn value(&self, x: u64) -> Option<Complex64> {
        Some(self.values[(x & (self.n - 1)) as usize])
    }
}

impl<S: Source + ?Sized> Source for &S {
    fn n(&self) -> u64 {
        (**self).n()
    }
    fn available(&self, x: u64) -> bool {
        (**self).available(x)
    }
    fn value(&self, x: u64) -> Option<Complex64> {
        (**self).value(x)
    }
    fn sampling<T>(&self, f: impl FnOnce() -> T) -> T {
        (**self).sampling(f)
    }
}

/// Instrumented view of a [`SampledSignal`]: counts every availability probe
/// and value read, and accumulates wall time spent in sampling phases.
#[derive(Debug)]
pub struct Probe<'a> {
    data: &'a SampledSignal,
    touched: Cell<u64>,
    sampling: Cell<Duration>,
}

impl<'a> Probe<'a> {
    pub fn new(data: &'a SampledSignal) -> Self {
        Self {
            data,
            touched: Cell::new(0),
            sampling: Cell::new(Duration::ZERO),
        }
    }

    pub fn data(&self) -> &'a SampledSignal {
        self.data
    }

    pub fn mask(&self) -> &'a AvailabilityMask {
        &self.data.mask
    }

    pub fn touched(&self) -> u64 {
        self.touched.get()
    }

    pub fn sampling_time(&self) -> Duration {
        self.sampling.get()
    }

    /// Rejection-sample a uniformly random available index.
    pub fn draw_available<R: Rng + ?Sized>(&self, rng: &mut R, max_tries: u64) -> Result<u64> {
        draw_available_from(self, rng, max_tries)
    }
}

impl Source for Probe<'_> {
    fn n(&self) -> u64 {
        self.data.mask.n
    }
    #[inline]
    fn available(&self, x: u64) -> bool {
        self.touched.set(self.touched.get() + 1);
        // reads the sample itself, so its fetch is charged to the probe
        self.data.get(x).is_some()
    }
    #[inline]
    fn value(&self, x: u64) -> Option<Complex64> {
        self.touched.set(self.touched.get() + 1);
        self.data.get(x)
    }
    fn sampling<T>(&self, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.sampling.set(self.sampling.get() + start.elapsed());
        out
    }
}

/// The residual `S − R`, readable wherever `S` is.
pub struct Residual<'a, S: Source> {
    source: S,
    rep: &'a Representation,
    tw: &'a Twiddles,
}

impl<'a, S: Source> Residual<'a, S> {
    pub fn new(source: S, rep: &'a Representation, tw: &'a Twiddles) -> Self {
        Self { source, rep, tw }
    }
}

impl<S: Source> Source for Residual<'_, S> {
    fn n(&self) -> u64 {
        self.source.n()
    }
    #[inline]
    fn available(&self, x: u64) -> bool {
        self.source.available(x)
    }
    #[inline]
    fn value(&self, x: u64) -> Option<Complex64> {
        self.source
            .value(x)
            .map(|s| s - self.rep.eval_with(self.tw, x))
    }
    fn sampling<T>(&self, f: impl FnOnce() -> T) -> T {
        self.source.sampling(f)
    }
}
