//! Gap filling for missing samples.
//!
//! In 1D a missing value is replaced by the quadratic through its three
//! nearest available neighbours. The 2D routines compute bilinear
//! reproduction weights from one available neighbour per quadrant, with a
//! cache for the neighbourhood shapes that dominate at high availability.

use std::collections::HashMap;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::signal::Source;

/// Pivot magnitude below which a weight system counts as singular.
pub const PIVOT_THRESHOLD: f64 = 1e-10;

/// Three interpolation nodes `(position, value)`; positions are unwrapped
/// so that wrapping neighbours keep their true distance to the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborSet1D {
    pub points: [(i64, Complex64); 3],
}

/// Quadratic Lagrange interpolant through `nb`, evaluated at `t`.
pub fn lagrange3(nb: &NeighborSet1D, t: i64) -> Result<Complex64> {
    let [(t1, _), (t2, _), (t3, _)] = nb.points;
    if t1 == t2 || t1 == t3 || t2 == t3 {
        return Err(Error::CoincidentNodes);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &(ti, yi)) in nb.points.iter().enumerate() {
        let mut basis = 1.0;
        for (j, &(tj, _)) in nb.points.iter().enumerate() {
            if i != j {
                basis *= (t - tj) as f64 / (ti - tj) as f64;
            }
        }
        acc += yi * basis;
    }
    Ok(acc)
}

/// Default 1D search half-window: expected gap `1/p` with a safety margin.
pub fn default_window(p: f64) -> u64 {
    (3.0 / p).ceil() as u64 * 4
}

/// The three available indices nearest to `t` in circular distance, ties
/// going to the smaller index. Returned as unwrapped positions
/// (they may lie outside `[0, n)`).
pub fn find_neighbors_1d<S: Source + ?Sized>(source: &S, t: u64, window: u64) -> Result<[i64; 3]> {
    let n = source.n();
    let mask = n - 1;
    let mut found = [0i64; 3];
    let mut count = 0;
    let reach = window.min(n / 2);
    for d in 1..=reach {
        let (left, right) = (t as i64 - d as i64, t as i64 + d as i64);
        // equal distance: the smaller wrapped index goes first
        let pair = if (left as u64 & mask) <= (right as u64 & mask) { [left, right] } else { [right, left] };
        for pos in pair {
            if d == n / 2 && pos == pair[1] {
                // both directions reach the same index
                continue;
            }
            if source.available(pos as u64 & mask) {
                found[count] = pos;
                count += 1;
                if count == 3 {
                    return Ok(found);
                }
            }
        }
    }
    Err(Error::InterpolationImpossible(t))
}

/// The value at `t` if available, else its quadratic interpolant.
pub fn interpolate_value<S: Source + ?Sized>(source: &S, t: u64, window: u64) -> Result<Complex64> {
    if let Some(v) = source.value(t) {
        return Ok(v);
    }
    let pos = source.sampling(|| find_neighbors_1d(source, t, window))?;
    let mask = source.n() - 1;
    let mut points = [(0i64, Complex64::new(0.0, 0.0)); 3];
    for (slot, &p) in points.iter_mut().zip(pos.iter()) {
        let idx = p as u64 & mask;
        *slot = (p - t as i64, source.value(idx).ok_or(Error::MissingSample(idx))?);
    }
    lagrange3(&NeighborSet1D { points }, 0)
}

/// Interpolation weights aligned with the neighbour list they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub weights: Vec<f64>,
}

impl WeightSet {
    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn lu_solve4(a: Matrix4<f64>, b: Vector4<f64>) -> Option<Vector4<f64>> {
    let lu = a.lu();
    if lu.u().diagonal().iter().any(|d| d.abs() < PIVOT_THRESHOLD) {
        return None;
    }
    lu.solve(&b)
}

fn lu_solve3(a: Matrix3<f64>, b: Vector3<f64>) -> Option<Vector3<f64>> {
    let lu = a.lu();
    if lu.u().diagonal().iter().any(|d| d.abs() < PIVOT_THRESHOLD) {
        return None;
    }
    lu.solve(&b)
}

/// Weights `w` with `Σw·(x, y, xy, 1) = (x₀, y₀, x₀y₀, 1)` for four
/// neighbours of `target`.
///
/// A rank-deficient but consistent system (the symmetric cross is one) is
/// resolved by its minimum-norm solution. An inconsistent one falls back to
/// the planar three-point system on the nearest triple that is solvable;
/// the dropped neighbour gets weight 0.
pub fn weights_2d(points: &[(f64, f64)], target: (f64, f64)) -> Result<WeightSet> {
    if points.len() != 4 {
        return Err(Error::InvalidParameter(format!(
            "bilinear weights need 4 neighbours, got {}",
            points.len()
        )));
    }
    let rel: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x - target.0, y - target.1)).collect();
    let a = Matrix4::from_fn(|r, c| {
        let (x, y) = rel[c];
        match r {
            0 => x,
            1 => y,
            2 => x * y,
            _ => 1.0,
        }
    });
    let b = Vector4::new(0.0, 0.0, 0.0, 1.0);

    let solved = lu_solve4(a, b).or_else(|| {
        let w = a.svd(true, true).solve(&b, PIVOT_THRESHOLD).ok()?;
        ((a * w - b).norm() < 1e-9).then_some(w)
    });
    if let Some(w) = solved {
        let ws = WeightSet { weights: w.iter().copied().collect() };
        debug_assert!((ws.sum() - 1.0).abs() < 1e-9);
        return Ok(ws);
    }

    let mut order: Vec<usize> = (0..4).collect();
    let dist = |i: usize| rel[i].0.hypot(rel[i].1);
    order.sort_by(|&i, &j| dist(i).total_cmp(&dist(j)));
    // drop the farthest first, then progressively nearer ones
    for &dropped in order.iter().rev() {
        let keep: Vec<usize> = (0..4).filter(|&i| i != dropped).collect();
        let a3 = Matrix3::from_fn(|r, c| {
            let (x, y) = rel[keep[c]];
            match r {
                0 => x,
                1 => y,
                _ => 1.0,
            }
        });
        if let Some(w3) = lu_solve3(a3, Vector3::new(0.0, 0.0, 1.0)) {
            let mut weights = vec![0.0; 4];
            for (k, &i) in keep.iter().enumerate() {
                weights[i] = w3[k];
            }
            return Ok(WeightSet { weights });
        }
    }
    Err(Error::SingularSystem)
}

/// Canonical neighbourhood shapes of a missing grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeId {
    /// All four axis neighbours available.
    Cross,
    /// One axis neighbour missing and replaced by an adjacent diagonal.
    Diagonal,
}

impl FromStr for ShapeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cross" => Ok(Self::Cross),
            "diagonal" => Ok(Self::Diagonal),
            other => Err(Error::UnknownShape(other.to_string())),
        }
    }
}

/// Probability that a missing point's neighbourhood has the given shape
/// under independent availability `p`.
pub fn shape_probability(p: f64, shape: ShapeId) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    let p4 = p.powi(4);
    Ok(match shape {
        ShapeId::Cross => p4,
        ShapeId::Diagonal => 4.0 * p4 * (1.0 - p) * (2.0 - p),
    })
}

const AXES: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

/// Periodic 2D availability grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask2D {
    width: usize,
    height: usize,
    flags: Vec<bool>,
}

impl Mask2D {
    pub fn from_flags(width: usize, height: usize, flags: Vec<bool>) -> Result<Self> {
        if flags.len() != width * height || width == 0 || height == 0 {
            return Err(Error::LengthMismatch {
                expected: (width * height) as u64,
                actual: flags.len() as u64,
            });
        }
        Ok(Self { width, height, flags })
    }

    pub fn bernoulli<R: Rng + ?Sized>(width: usize, height: usize, p: f64, rng: &mut R) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidProbability(p));
        }
        let flags = (0..width * height).map(|_| rng.random::<f64>() < p).collect();
        Self::from_flags(width, height, flags)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn offset(&self, x: i64, y: i64) -> usize {
        let xx = x.rem_euclid(self.width as i64) as usize;
        let yy = y.rem_euclid(self.height as i64) as usize;
        yy * self.width + xx
    }

    pub fn is_available(&self, x: i64, y: i64) -> bool {
        self.flags[self.offset(x, y)]
    }
}

/// Match the 3×3 neighbourhood of `(x, y)` against the canonical shapes.
/// Returns the shape and the four neighbour offsets (axis order, with the
/// substituted diagonal in place of the missing axis point).
pub fn classify_neighborhood(mask: &Mask2D, x: i64, y: i64) -> Option<(ShapeId, [(i64, i64); 4])> {
    let present: Vec<bool> = AXES.iter().map(|&(dx, dy)| mask.is_available(x + dx, y + dy)).collect();
    match present.iter().filter(|&&b| !b).count() {
        0 => Some((ShapeId::Cross, AXES)),
        1 => {
            let gap = present.iter().position(|&b| !b)?;
            let (ax, ay) = AXES[gap];
            // the two diagonals flanking the missing axis point
            let flank = if ax == 0 { [(-1, ay), (1, ay)] } else { [(ax, -1), (ax, 1)] };
            let diag = flank.into_iter().find(|&(dx, dy)| mask.is_available(x + dx, y + dy))?;
            let mut offsets = AXES;
            offsets[gap] = diag;
            Some((ShapeId::Diagonal, offsets))
        }
        _ => None,
    }
}

fn quadrant(dx: i64, dy: i64) -> usize {
    match (dx, dy) {
        (dx, dy) if dx > 0 && dy >= 0 => 0,
        (dx, dy) if dx <= 0 && dy > 0 => 1,
        (dx, dy) if dx < 0 && dy <= 0 => 2,
        _ => 3,
    }
}

/// Neighbour offsets for interpolating at `(x, y)`: a canonical shape if
/// one matches, otherwise the Euclidean-nearest available point in each
/// quadrant within `radius` (ties to smaller `(dy, dx)`).
pub fn find_neighbors_2d(mask: &Mask2D, x: i64, y: i64, radius: i64) -> Result<Vec<(i64, i64)>> {
    if let Some((_, offsets)) = classify_neighborhood(mask, x, y) {
        return Ok(offsets.to_vec());
    }
    // per quadrant: (squared distance, dy, dx) as the ranking key, then the offset
    type Pick = ((i64, i64, i64), (i64, i64));
    let mut best: [Option<Pick>; 4] = [None; 4];
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            if (dx, dy) == (0, 0) || !mask.is_available(x + dx, y + dy) {
                continue;
            }
            let key = (dx * dx + dy * dy, dy, dx);
            let q = quadrant(dx, dy);
            if best[q].is_none_or(|(k, _)| key < k) {
                best[q] = Some((key, (dx, dy)));
            }
        }
    }
    let found: Vec<(i64, i64)> = best.iter().flatten().map(|&(_, off)| off).collect();
    if found.len() < 3 {
        return Err(Error::InterpolationImpossible(0));
    }
    Ok(found)
}

/// Precomputed weights for the canonical unit-spacing shapes in every
/// orientation, keyed by the sorted offset list.
#[derive(Debug, Clone)]
pub struct ShapeCache {
    table: HashMap<Vec<(i64, i64)>, Vec<f64>>,
}

impl ShapeCache {
    pub fn build() -> Self {
        let mut shapes: Vec<[(i64, i64); 4]> = vec![AXES];
        for gap in 0..4 {
            let (ax, ay) = AXES[gap];
            let flank = if ax == 0 { [(-1, ay), (1, ay)] } else { [(ax, -1), (ax, 1)] };
            for diag in flank {
                let mut s = AXES;
                s[gap] = diag;
                shapes.push(s);
            }
        }
        let mut table = HashMap::new();
        for s in shapes {
            let mut sorted = s.to_vec();
            sorted.sort_unstable();
            let pts: Vec<(f64, f64)> = sorted.iter().map(|&(x, y)| (x as f64, y as f64)).collect();
            let w = weights_2d(&pts, (0.0, 0.0)).expect("canonical shapes are solvable");
            table.insert(sorted, w.weights);
        }
        Self { table }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Cached weights for `offsets`, in the caller's order.
    pub fn lookup(&self, offsets: &[(i64, i64)]) -> Option<WeightSet> {
        let mut order: Vec<usize> = (0..offsets.len()).collect();
        order.sort_by_key(|&i| offsets[i]);
        let key: Vec<(i64, i64)> = order.iter().map(|&i| offsets[i]).collect();
        let cached = self.table.get(&key)?;
        let mut weights = vec![0.0; offsets.len()];
        for (k, &i) in order.iter().enumerate() {
            weights[i] = cached[k];
        }
        Some(WeightSet { weights })
    }

    /// Cached weights when available, otherwise a direct solve. The flag
    /// reports whether the cache hit.
    pub fn weights_for(&self, offsets: &[(i64, i64)]) -> Result<(WeightSet, bool)> {
        if let Some(w) = self.lookup(offsets) {
            return Ok((w, true));
        }
        let pts: Vec<(f64, f64)> = offsets.iter().map(|&(x, y)| (x as f64, y as f64)).collect();
        let w = if pts.len() == 3 {
            let a3 = Matrix3::from_fn(|r, c| match r {
                0 => pts[c].0,
                1 => pts[c].1,
                _ => 1.0,
            });
            let w3 = lu_solve3(a3, Vector3::new(0.0, 0.0, 1.0)).ok_or(Error::SingularSystem)?;
            WeightSet { weights: w3.iter().copied().collect() }
        } else {
            weights_2d(&pts, (0.0, 0.0))?
        };
        Ok((w, false))
    }
}

/// Process-wide shape cache, built on first use.
pub fn shape_cache() -> &'static ShapeCache {
    static CACHE: OnceLock<ShapeCache> = OnceLock::new();
    CACHE.get_or_init(ShapeCache::build)
}

/// Interpolate a missing grid value from its neighbourhood. `values` is
/// row-major with the mask's dimensions; unavailable entries are ignored.
pub fn interpolate_2d(mask: &Mask2D, values: &[Complex64], x: i64, y: i64, radius: i64) -> Result<Complex64> {
    if values.len() != mask.width * mask.height {
        return Err(Error::LengthMismatch {
            expected: (mask.width * mask.height) as u64,
            actual: values.len() as u64,
        });
    }
    if mask.is_available(x, y) {
        return Ok(values[mask.offset(x, y)]);
    }
    let offsets = find_neighbors_2d(mask, x, y, radius)?;
    let (w, _) = shape_cache().weights_for(&offsets)?;
    Ok(offsets
        .iter()
        .zip(&w.weights)
        .map(|(&(dx, dy), &wi)| values[mask.offset(x + dx, y + dy)] * wi)
        .sum())
}

/// Empirical frequencies of the cross and diagonal shapes over the points
/// of a Bernoulli(`p`) grid with at least `points` cells.
pub fn shape_frequencies<R: Rng + ?Sized>(p: f64, points: usize, rng: &mut R) -> Result<(f64, f64)> {
    let side = (points as f64).sqrt().ceil().max(3.0) as usize;
    let mask = Mask2D::bernoulli(side, side, p, rng)?;
    let (mut cross, mut diag) = (0usize, 0usize);
    for y in 0..side as i64 {
        for x in 0..side as i64 {
            match classify_neighborhood(&mask, x, y) {
                Some((ShapeId::Cross, _)) => cross += 1,
                Some((ShapeId::Diagonal, _)) => diag += 1,
                None => {}
            }
        }
    }
    let total = (side * side) as f64;
    Ok((cross as f64 / total, diag as f64 / total))
}
