//! Frequency identification by repeated zoom-in on band energies.
//!
//! Each level splits the (re-centred, dilated) spectrum into `K` bands,
//! picks the dominant one, shifts it to the origin and dilates by a power
//! of two. After `log₂ n` halvings the frequency is pinned down and the
//! per-level centres are unwound into the answer.

use crate::error::{Error, Result};
use crate::estimators::BandEnergies;
use crate::filters::{ChainKernel, FilterChain};
use crate::rng::StreamRng;

/// Outcome of scoring one set of band energies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsbResult {
    /// Band index nearest the chosen centre.
    pub v: usize,
    /// Number of bands the centre is taken to span.
    pub c: usize,
    /// Chosen centre in band units; half-integral for even-length runs.
    pub center: f64,
    /// No run was long enough and the argmax band was used instead.
    pub fallback: bool,
}

/// Cyclic offsets `lo..=hi` an interval must strictly dominate to count as
/// large: `4..=12` for 16 bands, scaled for other band counts.
pub fn dominance_offsets(bands: usize) -> (usize, usize) {
    let d = bands.div_ceil(4);
    (d, bands - d)
}

pub fn large_intervals(energies: &[f64]) -> Vec<bool> {
    let k = energies.len();
    let (lo, hi) = dominance_offsets(k);
    (0..k)
        .map(|l| (lo..=hi).all(|off| energies[l] > energies[(l + off) % k]))
        .collect()
}

/// Score band energies: the centre of the longest cyclic run of large
/// intervals (ties to the larger total energy). Runs shorter than half the
/// bands fall back to the argmax band with `c = K/2`.
pub fn msb(energies: &[f64]) -> MsbResult {
    let k = energies.len();
    let large = large_intervals(energies);
    let mut best: Option<(usize, usize, f64)> = None;
    if large.iter().all(|&b| b) {
        best = Some((0, k, energies.iter().sum()));
    } else {
        for start in (0..k).filter(|&l| large[l] && !large[(l + k - 1) % k]) {
            let len = (0..k).take_while(|&d| large[(start + d) % k]).count();
            let total: f64 = (0..len).map(|d| energies[(start + d) % k]).sum();
            let better = match best {
                None => true,
                Some((_, bl, bt)) => len > bl || (len == bl && total > bt),
            };
            if better {
                best = Some((start, len, total));
            }
        }
    }
    let half = (k / 2).max(1);
    match best {
        Some((start, len, _)) if len >= half => {
            let center = (start as f64 + (len - 1) as f64 / 2.0) % k as f64;
            MsbResult { v: center.floor() as usize, c: len, center, fallback: false }
        }
        _ => {
            let v = (0..k).fold(0, |b, l| if energies[l] > energies[b] { l } else { b });
            MsbResult { v, c: half, center: v as f64, fallback: true }
        }
    }
}

/// Power-of-two zoom factor for a run of `c` of `bands` bands, at least 2.
pub fn zoom_factor(bands: usize, c: usize) -> u64 {
    let raw = (bands / c.max(1)).max(2) as u64;
    1 << (63 - raw.leading_zeros())
}

/// One zoom level of a group test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    /// Accumulated dilation before this level.
    pub q: u64,
    /// Accumulated demodulation before this level.
    pub recenter: u64,
    pub msb: MsbResult,
    /// Chosen centre in frequency units.
    pub center: u64,
    pub zoom: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupTestOutcome {
    /// Identified frequency in the member's coordinates.
    pub frequency: u64,
    pub levels: Vec<Level>,
    /// Some level saw a band energy estimate backed by too few samples.
    pub low_confidence: bool,
}

fn signed(g: u64, n: u64) -> i64 {
    if g > n / 2 {
        g as i64 - n as i64
    } else {
        g as i64
    }
}

/// Undo the zoom levels: starting from the frequency `g` seen after the
/// last level, map back through each `(center, zoom)` pair.
pub fn unwind(n: u64, g_final: u64, levels: &[(u64, u64)]) -> u64 {
    levels.iter().rev().fold(g_final, |g, &(center, zoom)| {
        let x = signed(g, n) as f64 / zoom as f64 + center as f64 + 0.5;
        (x.floor() as i64).rem_euclid(n as i64) as u64
    })
}

/// Identify the dominant frequency of the member described by `member`
/// (its dilation and modulation; zoom fields are overwritten).
pub fn group_test<E: BandEnergies + ?Sized>(
    member: &FilterChain,
    estimator: &E,
    rng: &mut StreamRng,
) -> Result<GroupTestOutcome> {
    let n = member.n;
    let k = member.bands as usize;
    let bands: Vec<u32> = (0..member.bands).collect();
    let max_depth = n.trailing_zeros() as usize + 4;
    let (mut q, mut a) = (1u64, 0u64);
    let mut levels = Vec::new();
    let mut low_confidence = false;
    while q < n {
        if levels.len() >= max_depth {
            return Err(Error::GroupTestDiverged(max_depth));
        }
        // taps spaced by q comb-filter the frequencies ν with qν − a in the
        // band; t itself stays undilated so every t has its own support
        let chain = FilterChain { sigma1: q, sigma4: 1, recenter: a, ..*member };
        let kernel = ChainKernel::new(&chain, &bands);
        let est = estimator.band_energies(&kernel, rng);
        if est.iter().all(|e| e.samples == 0) {
            // nothing to rank the bands by
            return Err(Error::AvailabilityExhausted(levels.len() as u64));
        }
        low_confidence |= est.iter().any(|e| e.low_confidence);
        let energies: Vec<f64> = est.iter().map(|e| e.value).collect();
        let m = msb(&energies);
        let center = ((m.center * n as f64 / k as f64).round() as u64) & (n - 1);
        let zoom = zoom_factor(k, m.c).min(n / q);
        levels.push(Level { q, recenter: a, msb: m, center, zoom });
        a = zoom.wrapping_mul(a.wrapping_add(center)) & (n - 1);
        q *= zoom;
    }
    let g_final = n.wrapping_sub(a) & (n - 1);
    let pairs: Vec<(u64, u64)> = levels.iter().map(|l| (l.center, l.zoom)).collect();
    Ok(GroupTestOutcome {
        frequency: unwind(n, g_final, &pairs),
        levels,
        low_confidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::NormEstimate;
    use crate::oracle::{exact_band_energies, ExactEnergies};
    use crate::rng::from_seed;
    use crate::signal::{eval_exponential, FullSignal};
    use proptest::prelude::*;
    use std::cell::Cell;

    fn tone(n: u64, omega: u64) -> FullSignal {
        FullSignal::new((0..n).map(|t| eval_exponential(omega, t as i64, n)).collect()).unwrap()
    }

    #[test]
    fn dominance_set_for_sixteen_bands() {
        assert_eq!(dominance_offsets(16), (4, 12));
        assert_eq!(dominance_offsets(3), (1, 2));
        assert_eq!(zoom_factor(16, 8), 2);
        assert_eq!(zoom_factor(16, 3), 4);
        assert_eq!(zoom_factor(16, 1), 16);
        assert_eq!(zoom_factor(3, 1), 2);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn tone_near_zero_marks_band_zero_large() {
        let n = 1024u64;
        for w in [0u64, 5, 32, n - 32] {
            let s = tone(n, w);
            let chain = FilterChain::identity(n, 1);
            let kernel = ChainKernel::new(&chain, &(0..16).collect::<Vec<_>>());
            let e = exact_band_energies(&s, &kernel).unwrap();
            let large = large_intervals(&e);
            assert!(large[0], "w={w}");
            for (l, &is_large) in large.iter().enumerate().take(13).skip(4) {
                assert!(!is_large, "w={w} l={l}");
            }
            // the bounds used by the argument: band 0 ≥ 0.318 n‖F‖², band 4 ≤ 0.24 n‖F‖²
            // F is the wide-filtered tone: ‖F‖² = n·χ̂₁(w)²·‖S‖²
            let f_energy = n as f64 * crate::filters::boxcar_freq(1, w as i64, n).powi(2) * s.energy();
            assert!(e[0] / 3.0 >= 0.318 * n as f64 * f_energy);
            assert!(e[4] <= 0.24 * n as f64 * f_energy);
        }
    }

    #[test]
    fn white_residual_takes_the_fallback() {
        let m = msb(&[1.0; 16]);
        assert!(m.fallback);
        assert_eq!(m.c, 8);
        assert_eq!(m.v, 0);
    }

    #[test]
    fn runs_never_reach_half_the_bands() {
        let mut rng = from_seed(0);
        use rand::Rng;
        for _ in 0..2000 {
            let e: Vec<f64> = (0..16).map(|_| rng.random::<f64>()).collect();
            let large = large_intervals(&e);
            let count = large.iter().filter(|&&b| b).count();
            assert!(count <= 4);
            assert!(msb(&e).fallback);
        }
    }

    #[test]
    fn msb_picks_the_argmax_band_on_fallback() {
        let mut e = vec![1.0; 16];
        e[5] = 9.0;
        e[6] = 4.0;
        let m = msb(&e);
        assert_eq!((m.v, m.c, m.center), (5, 8, 5.0));
    }

    #[test]
    fn unwinding_inverts_the_zoom_algebra() {
        for n in [64u64, 256, 1024] {
            for nu in 0..n {
                // nearest band centres with zoom 2, as exact energies would choose
                let (mut q, mut a) = (1u64, 0u64);
                let mut pairs = Vec::new();
                while q < n {
                    let mu = (q.wrapping_mul(nu).wrapping_sub(a)) & (n - 1);
                    let band = ((mu as f64) * 16.0 / n as f64).round() as u64 % 16;
                    let center = band * n / 16;
                    pairs.push((center, 2));
                    a = (2 * (a + center)) & (n - 1);
                    q *= 2;
                }
                assert_eq!(unwind(n, n.wrapping_sub(a) & (n - 1), &pairs), nu, "n={n}");
            }
        }
    }

    #[test]
    fn exact_energies_find_every_frequency() {
        let n = 256u64;
        let mut rng = from_seed(1);
        for w in 0..n {
            let s = tone(n, w);
            let oracle = ExactEnergies { source: &s };
            let out = group_test(&FilterChain::identity(n, 1), &oracle, &mut rng).unwrap();
            assert_eq!(out.frequency, w);
            assert_eq!(out.levels.len(), 8);
            assert!(out.levels.iter().all(|l| l.zoom == 2 && l.msb.c == 8));
        }
    }

    #[test]
    fn exact_energies_through_a_dilated_member() {
        let n = 256u64;
        let mut rng = from_seed(2);
        let member = crate::isolation::IsolationSignal::new(n, 77, 0, 1, 16).unwrap();
        for w in [0u64, 3, 100, 255] {
            let s = tone(n, w);
            let oracle = ExactEnergies { source: &s };
            let mut chain = *member.chain();
            // centre the wide filter on the tone's image
            chain.theta = member.image(w);
            let out = group_test(&chain, &oracle, &mut rng).unwrap();
            assert_eq!(member.residual_frequency(out.frequency), w);
        }
    }

    struct Counting<'a> {
        calls: &'a Cell<usize>,
    }

    impl BandEnergies for Counting<'_> {
        fn band_energies(&self, kernel: &ChainKernel, _rng: &mut StreamRng) -> Vec<NormEstimate> {
            self.calls.set(self.calls.get() + kernel.band_count());
            vec![NormEstimate { value: 1.0, samples: 1, low_confidence: false }; kernel.band_count()]
        }
    }

    #[test]
    fn each_level_estimates_sixteen_energies() {
        let calls = Cell::new(0);
        let out = group_test(&FilterChain::identity(1024, 1), &Counting { calls: &calls }, &mut from_seed(0)).unwrap();
        assert_eq!(out.levels.len(), 10);
        assert_eq!(calls.get(), 16 * 10);
    }

    #[test]
    fn deep_levels_keep_distinct_supports() {
        let n = 256u64;
        let member = crate::isolation::IsolationSignal::new(n, 5, 0, 1, 16).unwrap();
        let chain = FilterChain { sigma1: n / 2, sigma4: 1, recenter: 17, ..*member.chain() };
        let kernel = ChainKernel::new(&chain, &[0]);
        let mut sets: Vec<Vec<u64>> = (0..n)
            .map(|t| {
                let mut v: Vec<u64> = kernel.support(t).collect();
                v.sort_unstable();
                v
            })
            .collect();
        sets.sort();
        sets.dedup();
        assert_eq!(sets.len(), n as usize);
    }

    struct Empty;

    impl BandEnergies for Empty {
        fn band_energies(&self, kernel: &ChainKernel, _rng: &mut StreamRng) -> Vec<NormEstimate> {
            vec![NormEstimate { value: 0.0, samples: 0, low_confidence: true }; kernel.band_count()]
        }
    }

    #[test]
    fn a_level_without_samples_aborts() {
        let out = group_test(&FilterChain::identity(64, 1), &Empty, &mut from_seed(0));
        assert_eq!(out, Err(Error::AvailabilityExhausted(0)));
    }

    proptest! {
        #[test]
        fn msb_is_scale_invariant(e in proptest::collection::vec(0.0f64..10.0, 16), scale in 0.001f64..1000.0) {
            let scaled: Vec<f64> = e.iter().map(|x| x * scale).collect();
            let a = msb(&e);
            let b = msb(&scaled);
            prop_assert_eq!(a.v, b.v);
            prop_assert_eq!(a.c, b.c);
        }
    }
}
