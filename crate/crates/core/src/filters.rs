//! Box-car filters and pointwise evaluation of doubly filtered signals.
//!
//! A filtered sample is never computed by materialising a convolution.
//! [`ChainKernel`] evaluates
//!
//! ```text
//! H(t) = Σ_{i=-1..1} χ₁(i) e^{2πi·b·i/K} e^{-2πi·a·(t-i)/N}
//!        Σ_{j=-q..q} χ_q(j) e^{2πi·θ·j/N} S(σ₃σ₄t − σ₃σ₁i − σ₂j)
//! ```
//!
//! from the `3(2q+1)` samples it needs, where `b/K` is the coarse band
//! modulation, `θ` the fine modulation of the wide filter and `a` the
//! re-centering applied by group-test zooms.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::Source;

/// Half-width of the narrow group-testing filter.
pub const NARROW_HALF_WIDTH: i64 = 1;

/// Reduce `t` into `(−n/2, n/2]`.
pub fn symmetric_index(t: i64, n: u64) -> i64 {
    let n = n as i64;
    let r = t.rem_euclid(n);
    if r > n / 2 {
        r - n
    } else {
        r
    }
}

/// `χ_k(t)`: `√n/(2k+1)` on `[-k, k]`, zero elsewhere.
pub fn boxcar_time(k: u64, t: i64, n: u64) -> f64 {
    if symmetric_index(t, n).unsigned_abs() <= k {
        (n as f64).sqrt() / (2 * k + 1) as f64
    } else {
        0.0
    }
}

/// `χ̂_k(ω) = sin((2k+1)πω/n) / ((2k+1) sin(πω/n))`, and 1 at `ω = 0`.
pub fn boxcar_freq(k: u64, omega: i64, n: u64) -> f64 {
    let w = omega.rem_euclid(n as i64);
    if w == 0 {
        return 1.0;
    }
    let x = PI * w as f64 / n as f64;
    let width = (2 * k + 1) as f64;
    (width * x).sin() / (width * x.sin())
}

/// Dilation, modulation and width parameters of one filtered view.
///
/// `sigma2`/`sigma3` dilate the wide filter stage and `sigma1`/`sigma4` the
/// narrow stage; tap positions are tap index times dilation factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterChain {
    pub n: u64,
    pub sigma1: u64,
    pub sigma2: u64,
    pub sigma3: u64,
    pub sigma4: u64,
    /// Fine modulation of the wide filter, in `[0, n)`.
    pub theta: u64,
    /// Coarse band index `j` of the narrow filter's `e^{2πij·/K}` modulation.
    pub band: u32,
    /// Number of coarse bands `K`.
    pub bands: u32,
    /// Half-width of the wide filter.
    pub q1: u32,
    /// Demodulation accumulated by zooming.
    pub recenter: u64,
}

impl FilterChain {
    pub fn identity(n: u64, q1: u32) -> Self {
        Self {
            n,
            sigma1: 1,
            sigma2: 1,
            sigma3: 1,
            sigma4: 1,
            theta: 0,
            band: 0,
            bands: 16,
            q1,
            recenter: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        crate::signal::check_length(self.n)?;
        if self.q1 < 1 {
            return Err(Error::InvalidParameter("wide filter half-width must be ≥ 1".into()));
        }
        if self.bands < 1 || self.band >= self.bands {
            return Err(Error::InvalidParameter(format!(
                "band {} of {}",
                self.band, self.bands
            )));
        }
        if (2 * self.q1 as u64 + 1) > self.n {
            return Err(Error::InvalidParameter("wide filter wider than signal".into()));
        }
        for s in [self.sigma1, self.sigma2, self.sigma3, self.sigma4] {
            if s == 0 || s >= self.n.max(2) {
                return Err(Error::InvalidParameter(format!("dilation {s}")));
            }
        }
        Ok(())
    }

    #[inline]
    fn index(&self, t: u64, i: i64, j: i64) -> u64 {
        let base = self.sigma3.wrapping_mul(self.sigma4).wrapping_mul(t);
        let di = self.sigma3.wrapping_mul(self.sigma1).wrapping_mul(i as u64);
        let dj = self.sigma2.wrapping_mul(j as u64);
        base.wrapping_sub(di).wrapping_sub(dj) & (self.n - 1)
    }

    /// Number of distinct samples a single evaluation reads.
    pub fn support_size(&self) -> usize {
        convolution_support(0, self).len()
    }
}

/// Sorted, de-duplicated sample indices needed to evaluate `H(t)`.
pub fn convolution_support(t: u64, chain: &FilterChain) -> Vec<u64> {
    let q = chain.q1 as i64;
    let mut idx: Vec<u64> = (-NARROW_HALF_WIDTH..=NARROW_HALF_WIDTH)
        .flat_map(|i| (-q..=q).map(move |j| (i, j)))
        .map(|(i, j)| chain.index(t, i, j))
        .collect();
    idx.sort_unstable();
    idx.dedup();
    idx
}

/// Precomputed tap weights for evaluating one chain at several bands.
#[derive(Debug, Clone)]
pub struct ChainKernel {
    chain: FilterChain,
    /// `χ_q(j) e^{2πiθj/n}` for `j = -q..=q`.
    wide: Vec<Complex64>,
    /// Per band, `χ₁(i) e^{2πi·b·i/K} e^{2πi·a·i/n}` for `i = -1..=1`.
    narrow: Vec<[Complex64; 3]>,
}

impl ChainKernel {
    /// Kernel evaluating `chain` at every band in `bands` (the chain's own
    /// `band` field is ignored).
    pub fn new(chain: &FilterChain, bands: &[u32]) -> Self {
        let n = chain.n as f64;
        let q = chain.q1 as i64;
        let wq = n.sqrt() / (2 * q + 1) as f64;
        let wide = (-q..=q)
            .map(|j| {
                let k = (chain.theta as u128 * j.rem_euclid(chain.n as i64) as u128)
                    % chain.n as u128;
                Complex64::from_polar(wq, TAU * k as f64 / n)
            })
            .collect();
        let w1 = n.sqrt() / 3.0;
        let narrow = bands
            .iter()
            .map(|&b| {
                let mut taps = [Complex64::new(0.0, 0.0); 3];
                for (slot, i) in (-NARROW_HALF_WIDTH..=NARROW_HALF_WIDTH).enumerate() {
                    let coarse = TAU * (b as f64) * i as f64 / chain.bands as f64;
                    let demod_k = (chain.recenter as u128
                        * i.rem_euclid(chain.n as i64) as u128)
                        % chain.n as u128;
                    let demod = TAU * demod_k as f64 / n;
                    taps[slot] = Complex64::from_polar(w1, coarse + demod);
                }
                taps
            })
            .collect();
        Self {
            chain: *chain,
            wide,
            narrow,
        }
    }

    pub fn chain(&self) -> &FilterChain {
        &self.chain
    }

    pub fn band_count(&self) -> usize {
        self.narrow.len()
    }

    /// Support indices of `H(t)` in evaluation order (may repeat).
    pub fn support(&self, t: u64) -> impl Iterator<Item = u64> + '_ {
        let q = self.chain.q1 as i64;
        (-NARROW_HALF_WIDTH..=NARROW_HALF_WIDTH)
            .flat_map(move |i| (-q..=q).map(move |j| self.chain.index(t, i, j)))
    }

    /// True iff every sample `H(t)` needs is available. Stops at the first
    /// missing one.
    pub fn all_available<S: Source + ?Sized>(&self, source: &S, t: u64) -> bool {
        self.support(t).all(|x| source.available(x))
    }

    /// Wide-filter sums `W_i` for the three narrow taps, read through
    /// `fetch` so callers can substitute interpolated values.
    pub fn inner_sums<F>(&self, t: u64, mut fetch: F) -> Result<[Complex64; 3]>
    where
        F: FnMut(u64) -> Result<Complex64>,
    {
        let q = self.chain.q1 as i64;
        let mut sums = [Complex64::new(0.0, 0.0); 3];
        for (slot, i) in (-NARROW_HALF_WIDTH..=NARROW_HALF_WIDTH).enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (w, j) in self.wide.iter().zip(-q..=q) {
                acc += w * fetch(self.chain.index(t, i, j))?;
            }
            sums[slot] = acc;
        }
        Ok(sums)
    }

    /// Combine inner sums into `H_b(t)` for every configured band.
    pub fn combine(&self, t: u64, sums: &[Complex64; 3], out: &mut [Complex64]) {
        let n = self.chain.n;
        let k = (self.chain.recenter as u128 * t as u128) % n as u128;
        let demod = Complex64::from_polar(1.0, -TAU * k as f64 / n as f64);
        for (taps, o) in self.narrow.iter().zip(out.iter_mut()) {
            *o = demod * (taps[0] * sums[0] + taps[1] * sums[1] + taps[2] * sums[2]);
        }
    }

    /// `H_b(t)` for all bands, failing on the first missing sample.
    pub fn eval<S: Source + ?Sized>(&self, source: &S, t: u64, out: &mut [Complex64]) -> Result<()> {
        let sums = self.inner_sums(t, |x| source.value(x).ok_or(Error::MissingSample(x)))?;
        self.combine(t, &sums, out);
        Ok(())
    }
}

/// `H(t)` for `chain` at its own band.
pub fn eval_filtered_sample<S: Source + ?Sized>(
    source: &S,
    chain: &FilterChain,
    t: u64,
) -> Result<Complex64> {
    let kernel = ChainKernel::new(chain, &[chain.band]);
    let mut out = [Complex64::new(0.0, 0.0)];
    kernel.eval(source, t, &mut out)?;
    Ok(out[0])
}
