//! Random dilation/modulation filters that make one significant frequency
//! of the residual dominate a filtered view.
//!
//! A member applies `F(x) = Σ_j χ_q(j) e^{2πijθ/n} r(σx − σj)`, whose
//! spectrum is `√n·χ̂_q(ν − θ)·r̂(σ⁻¹ν)`: the residual frequency `ω` shows
//! up at `ν = σω` and is kept or suppressed depending on `θ`.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::filters::{ChainKernel, FilterChain};
use crate::signal::{check_length, Source};

/// Inverse of an odd `sigma` modulo the power of two `n`.
pub fn inverse_odd(sigma: u64, n: u64) -> Result<u64> {
    check_length(n)?;
    if sigma.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("dilation {sigma} is even")));
    }
    // Newton iteration doubles the number of correct low bits each step
    let mut x = sigma;
    for _ in 0..6 {
        x = x.wrapping_mul(2u64.wrapping_sub(sigma.wrapping_mul(x)));
    }
    Ok(x & (n - 1))
}

/// One member of an isolation family, evaluated lazily.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IsolationSignal {
    chain: FilterChain,
    sigma_inv: u64,
}

impl IsolationSignal {
    /// Member with odd dilation `sigma`, modulation `theta`, wide half-width
    /// `q1` and `bands` group-testing bands.
    pub fn new(n: u64, sigma: u64, theta: u64, q1: u32, bands: u32) -> Result<Self> {
        let sigma_inv = inverse_odd(sigma, n)?;
        let chain = FilterChain {
            sigma2: sigma & (n - 1),
            sigma3: sigma & (n - 1),
            theta: theta & (n - 1),
            bands,
            ..FilterChain::identity(n, q1)
        };
        chain.validate()?;
        Ok(Self { chain, sigma_inv })
    }

    pub fn chain(&self) -> &FilterChain {
        &self.chain
    }

    pub fn n(&self) -> u64 {
        self.chain.n
    }

    pub fn sigma(&self) -> u64 {
        self.chain.sigma2
    }

    pub fn theta(&self) -> u64 {
        self.chain.theta
    }

    /// Where residual frequency `omega` appears in this member.
    pub fn image(&self, omega: u64) -> u64 {
        self.sigma().wrapping_mul(omega) & (self.n() - 1)
    }

    /// Residual frequency behind member frequency `nu`.
    pub fn residual_frequency(&self, nu: u64) -> u64 {
        self.sigma_inv.wrapping_mul(nu) & (self.n() - 1)
    }

    /// `F(t)` over `source`.
    pub fn eval<S: Source + ?Sized>(&self, source: &S, t: u64) -> Result<Complex64> {
        let kernel = ChainKernel::new(&self.chain, &[]);
        let sums = kernel.inner_sums(t, |x| source.value(x).ok_or(Error::MissingSample(x)))?;
        Ok(sums[1])
    }
}

/// `family_size` members with independent uniform odd `σ` and uniform `θ`.
pub fn build_isolation_family<R: Rng + ?Sized>(
    n: u64,
    family_size: usize,
    q1: u32,
    bands: u32,
    rng: &mut R,
) -> Result<Vec<IsolationSignal>> {
    check_length(n)?;
    if family_size == 0 {
        return Err(Error::InvalidParameter("family size must be ≥ 1".into()));
    }
    (0..family_size)
        .map(|_| {
            let sigma = if n <= 2 { 1 } else { rng.random_range(0..n / 2) * 2 + 1 };
            let theta = rng.random_range(0..n);
            IsolationSignal::new(n, sigma, theta, q1, bands)
        })
        .collect()
}
