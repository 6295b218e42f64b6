//! Dense ground truth for verification: full DFT, best `B`-term
//! approximation, exact errors and exact filtered energies.
//!
//! Everything here is at least linear in `n` and must stay off the
//! recovery path.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::estimators::{BandEnergies, NormEstimate};
use crate::filters::ChainKernel;
use crate::rng::StreamRng;
use crate::signal::{exact_dft, FullSignal, Representation, Source, Twiddles};

/// Largest length the dense DFT accepts by default.
pub const ORACLE_CAP: u64 = 1 << 16;

/// All `n` Fourier coefficients of a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    n: u64,
    coefficients: Vec<Complex64>,
}

impl Spectrum {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn energy(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }
}

pub fn full_dft(signal: &FullSignal) -> Result<Spectrum> {
    full_dft_capped(signal, ORACLE_CAP)
}

/// Direct `O(n²)` DFT, refusing lengths above `cap`.
pub fn full_dft_capped(signal: &FullSignal, cap: u64) -> Result<Spectrum> {
    let n = signal.n();
    if n > cap {
        return Err(Error::OracleCapExceeded { n, cap });
    }
    Ok(Spectrum {
        n,
        coefficients: (0..n).map(|w| exact_dft(signal, w)).collect(),
    })
}

/// The `b` largest-magnitude coefficients, ties to the lower frequency.
pub fn optimal_b_term(spec: &Spectrum, b: usize) -> Representation {
    let mut order: Vec<usize> = (0..spec.coefficients.len()).collect();
    order.sort_by(|&i, &j| {
        spec.coefficients[j]
            .norm_sqr()
            .total_cmp(&spec.coefficients[i].norm_sqr())
            .then(i.cmp(&j))
    });
    let terms = order
        .into_iter()
        .take(b)
        .map(|i| (i as u64, spec.coefficients[i]))
        .collect();
    Representation::from_terms(spec.n, terms).expect("distinct in-range frequencies")
}

/// `Σ_t |S(t) − R(t)|²`.
pub fn l2_error(signal: &FullSignal, rep: &Representation) -> Result<f64> {
    if signal.n() != rep.n() {
        return Err(Error::LengthMismatch {
            expected: signal.n(),
            actual: rep.n(),
        });
    }
    let tw = Twiddles::new(signal.n())?;
    Ok(signal
        .values()
        .iter()
        .enumerate()
        .map(|(t, &s)| (s - rep.eval_with(&tw, t as u64)).norm_sqr())
        .sum())
}

/// `‖c_true − c_R‖ / ‖c_true‖` over the union of both supports.
pub fn relative_coefficient_error(truth: &Representation, rep: &Representation) -> f64 {
    let mut diff = 0.0;
    for &(f, c) in truth.terms() {
        diff += (c - rep.coefficient(f).unwrap_or_default()).norm_sqr();
    }
    for &(f, c) in rep.terms() {
        if truth.coefficient(f).is_none() {
            diff += c.norm_sqr();
        }
    }
    let norm: f64 = truth.terms().iter().map(|(_, c)| c.norm_sqr()).sum();
    if norm == 0.0 {
        return diff.sqrt();
    }
    (diff / norm).sqrt()
}

/// Exact `‖H_b‖² = Σ_t |H_b(t)|²` for every band, by evaluating all `n`
/// outputs. Requires a fully available source.
pub fn exact_band_energies<S: Source + ?Sized>(source: &S, kernel: &ChainKernel) -> Result<Vec<f64>> {
    let mut energies = vec![0.0; kernel.band_count()];
    let mut out = vec![Complex64::new(0.0, 0.0); kernel.band_count()];
    for t in 0..source.n() {
        kernel.eval(source, t, &mut out)?;
        for (e, h) in energies.iter_mut().zip(&out) {
            *e += h.norm_sqr();
        }
    }
    Ok(energies)
}

/// Band energies from [`exact_band_energies`], for driving group tests
/// without estimation noise.
pub struct ExactEnergies<'a, S: Source + ?Sized> {
    pub source: &'a S,
}

impl<S: Source + ?Sized> BandEnergies for ExactEnergies<'_, S> {
    fn band_energies(&self, kernel: &ChainKernel, _rng: &mut StreamRng) -> Vec<NormEstimate> {
        exact_band_energies(self.source, kernel)
            .expect("exact energies need a fully available source")
            .into_iter()
            .map(|value| NormEstimate {
                value,
                samples: self.source.n() as usize,
                low_confidence: false,
            })
            .collect()
    }
}
