//! Numerical attractors: trapping-set iteration, orbit-based estimates with a
//! convergence residual, basin probes and Lyapunov exponents.

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::geometry::{hausdorff_distance, semi_distance_with, CompactSet, Dim, GeometryError, GridIndex, Point, PointCloud};
use crate::maps::{escaped, MapError, MapSpec, DEFAULT_ESCAPE_RADIUS};

/// Image points may sit this far outside a trapping set and still count.
pub const INVARIANCE_TOL: f64 = 1e-9;
/// Tangent vectors are renormalised this often.
pub const RENORMALISE_EVERY: usize = 50;
/// Probes closer than this to the attractor count as captured.
pub const BASIN_TOL: f64 = 1e-3;
pub const MIN_LYAPUNOV_STEPS: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttractorError {
    #[error("{escaped} of {total} points escaped (first at iterate {first_iterate})")]
    Escape { escaped: usize, total: usize, first_iterate: usize },
    #[error("need at least {MIN_LYAPUNOV_STEPS} iterates for a Lyapunov exponent, got {0}")]
    TooFewSteps(usize),
    #[error("transverse exponents are defined for the coupled skew tent map only")]
    NotCoupled,
    #[error("radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("trapping set dimension does not match the map")]
    DimensionMismatch,
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub type Result<T> = std::result::Result<T, AttractorError>;

/// A compact set together with the outcome of a numeric forward-invariance
/// check.
#[derive(Debug, Clone, PartialEq)]
pub struct TrappingSet {
    pub set: CompactSet,
    pub verified: bool,
    /// Semi-distance of the sampled image to the set.
    pub defect: f64,
    /// Sampling step used by the check.
    pub resolution: f64,
}

impl TrappingSet {
    /// Checks `f(N) ⊆ N` on samples spaced `step` apart (the set's default
    /// resolution when `None`).
    pub fn verify(map: &MapSpec, set: CompactSet, step: Option<f64>) -> Result<Self> {
        if set.dim() != map.dim() {
            return Err(AttractorError::DimensionMismatch);
        }
        let h = step.unwrap_or_else(|| set.default_resolution());
        let image = map_cloud(map, set.to_cloud(h)?.arrays(), 1, DEFAULT_ESCAPE_RADIUS)?;
        let image = CompactSet::Cloud(PointCloud::from_arrays(map.dim(), image)?);
        let defect = semi_distance_with(&image, &set, Some(h))?.value;
        Ok(TrappingSet { set, verified: defect <= INVARIANCE_TOL + h, defect, resolution: h })
    }

    /// Wraps a set without checking it.
    pub fn assume(set: CompactSet) -> Self {
        let resolution = set.default_resolution();
        TrappingSet { set, verified: false, defect: f64::NAN, resolution }
    }
}

/// Applies `f^n` to every point, in parallel and order-preserving.
pub fn map_cloud(map: &MapSpec, points: &[[f64; 2]], n: usize, radius: f64) -> Result<Vec<[f64; 2]>> {
    let out: Vec<std::result::Result<[f64; 2], usize>> = points
        .par_iter()
        .map(|p| {
            let mut x = *p;
            match map.iterate(&mut x, n, radius) {
                None => Ok(x),
                Some(k) => Err(k),
            }
        })
        .collect();
    let mut first = usize::MAX;
    let mut count = 0;
    let mut kept = Vec::with_capacity(out.len());
    for r in out {
        match r {
            Ok(x) => kept.push(x),
            Err(k) => {
                count += 1;
                first = first.min(k);
            }
        }
    }
    if count > 0 {
        return Err(AttractorError::Escape { escaped: count, total: points.len(), first_iterate: first });
    }
    Ok(kept)
}

/// `f^n` of a sample of `N` taken at spacing `step` (default resolution when
/// `None`).
pub fn iterate_set(map: &MapSpec, n_set: &TrappingSet, n: usize, step: Option<f64>) -> Result<CompactSet> {
    if n_set.set.dim() != map.dim() {
        return Err(AttractorError::DimensionMismatch);
    }
    if n == 0 {
        return Ok(n_set.set.clone());
    }
    let h = step.unwrap_or(n_set.resolution);
    let samples = n_set.set.to_cloud(h)?;
    let image = map_cloud(map, samples.arrays(), n, DEFAULT_ESCAPE_RADIUS)?;
    Ok(CompactSet::Cloud(PointCloud::from_arrays(map.dim(), image)?))
}

/// Where an attractor computation starts.
#[derive(Debug, Clone, PartialEq)]
pub enum Seed {
    Point(Point),
    /// Sampled at the given step (its default resolution when `None`).
    Set(TrappingSet, Option<f64>),
    /// Many initial points iterated together, e.g. a warm start.
    Cloud(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttractorOptions {
    pub n_transient: usize,
    pub n_samples: usize,
    /// Iterates used for the Lyapunov exponent; zero skips it.
    pub lyapunov_steps: usize,
    pub escape_radius: f64,
}

impl AttractorOptions {
    /// 10^4 transient iterates; 10^5 samples in 1-D, 10^6 in 2-D.
    pub fn for_dim(dim: Dim) -> Self {
        let n_samples = match dim {
            Dim::One => 100_000,
            Dim::Two => 1_000_000,
        };
        AttractorOptions { n_transient: 10_000, n_samples, lyapunov_steps: 100_000, escape_radius: DEFAULT_ESCAPE_RADIUS }
    }

    pub fn with_samples(mut self, n_transient: usize, n_samples: usize) -> Self {
        self.n_transient = n_transient;
        self.n_samples = n_samples;
        self
    }
}

/// A sampled attractor with its convergence diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct AttractorEstimate {
    /// `None` only when the computation escaped before producing samples.
    pub points: Option<PointCloud>,
    pub n_transient: usize,
    pub n_samples: usize,
    /// Hausdorff distance between the two halves of the sample.
    pub residual: f64,
    /// Maximal Lyapunov exponent in nats per iterate (NaN when not computed).
    pub lyapunov_max: f64,
    pub escaped: bool,
}

impl AttractorEstimate {
    pub fn escaped_estimate(n_transient: usize) -> Self {
        AttractorEstimate { points: None, n_transient, n_samples: 0, residual: f64::NAN, lyapunov_max: f64::NAN, escaped: true }
    }

    pub fn set(&self) -> Option<CompactSet> {
        self.points.clone().map(CompactSet::Cloud)
    }

    /// `d_H(points, f(points))`.
    pub fn invariance_defect(&self, map: &MapSpec) -> Result<f64> {
        let pts = self.points.as_ref().ok_or(AttractorError::Escape { escaped: 1, total: 1, first_iterate: 0 })?;
        let image = map_cloud(map, pts.arrays(), 1, DEFAULT_ESCAPE_RADIUS)?;
        let image = CompactSet::Cloud(PointCloud::from_arrays(pts.dim(), image)?);
        Ok(hausdorff_distance(&image, &CompactSet::Cloud(pts.clone()))?)
    }

    pub fn metadata_json(&self) -> Value {
        json!({
            "residual": finite_or_null(self.residual),
            "lyapunov_max": finite_or_null(self.lyapunov_max),
            "n_samples": self.n_samples,
            "n_transient": self.n_transient,
            "escaped": self.escaped,
        })
    }
}

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

/// Attractor from a single orbit, a sampled trapping set, or a cloud of
/// initial points.
///
/// Orbit seeds keep `n_samples` consecutive iterates after the transient and
/// split them in time for the residual. Set and cloud seeds iterate every
/// point `n_transient` times, then continue the whole cloud for at least two
/// generations and until `n_samples` points are collected; the residual
/// compares the earlier and later halves of the collection.
pub fn compute_attractor(map: &MapSpec, seed: &Seed, opts: &AttractorOptions) -> Result<AttractorEstimate> {
    let dim = map.dim();
    let (points, start) = match seed {
        Seed::Point(p) => {
            if p.dim() != dim {
                return Err(AttractorError::DimensionMismatch);
            }
            let orbit = map.orbit_raw(p.array(), opts.n_transient, opts.n_samples, opts.escape_radius);
            if orbit.escaped() {
                return Ok(AttractorEstimate::escaped_estimate(opts.n_transient));
            }
            let start = *orbit.points.last().expect("n_samples >= 1");
            (orbit.points, start)
        }
        Seed::Set(n_set, step) => {
            let h = step.unwrap_or(n_set.resolution);
            let samples = n_set.set.to_cloud(h)?.into_arrays();
            match collect_cloud(map, samples, opts) {
                Some(r) => r,
                None => return Ok(AttractorEstimate::escaped_estimate(opts.n_transient)),
            }
        }
        Seed::Cloud(c) => match collect_cloud(map, c.clone(), opts) {
            Some(r) => r,
            None => return Ok(AttractorEstimate::escaped_estimate(opts.n_transient)),
        },
    };
    let cloud = PointCloud::from_arrays(dim, points)?;
    let residual = half_residual(&cloud)?;
    let lyapunov_max = if opts.lyapunov_steps >= MIN_LYAPUNOV_STEPS {
        max_lyapunov_raw(map, start, opts.lyapunov_steps, opts.escape_radius).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    let n_samples = cloud.len();
    Ok(AttractorEstimate { points: Some(cloud), n_transient: opts.n_transient, n_samples, residual, lyapunov_max, escaped: false })
}

/// Iterates a cloud through the transient, then collects successive images
/// until `n_samples` points are gathered. Escaped points are dropped; the
/// result is `None` only if every point escapes.
fn collect_cloud(map: &MapSpec, mut pts: Vec<[f64; 2]>, opts: &AttractorOptions) -> Option<(Vec<[f64; 2]>, [f64; 2])> {
    let r = opts.escape_radius;
    pts = pts.into_par_iter().filter_map(|mut x| map.iterate(&mut x, opts.n_transient, r).is_none().then_some(x)).collect();
    if pts.is_empty() {
        return None;
    }
    let mut out = Vec::with_capacity(opts.n_samples.max(pts.len()));
    out.extend_from_slice(&pts);
    let mut generations = 1;
    while out.len() < opts.n_samples || generations < 2 {
        generations += 1;
        pts = pts.into_par_iter().filter_map(|mut x| map.iterate(&mut x, 1, r).is_none().then_some(x)).collect();
        if pts.is_empty() {
            break;
        }
        out.extend_from_slice(&pts);
    }
    let start = out[0];
    Some((out, start))
}

/// Hausdorff distance between the two halves of a cloud in storage order.
pub fn half_residual(cloud: &PointCloud) -> Result<f64> {
    match cloud.halves() {
        Some((a, b)) => Ok(hausdorff_distance(&CompactSet::Cloud(a), &CompactSet::Cloud(b))?),
        None => Ok(0.0),
    }
}

/// Fraction of `n_probes` random points of the `r`-neighbourhood of the
/// estimate whose `n_iter`-th image lies within [`BASIN_TOL`] of it.
pub fn basin_probe(map: &MapSpec, est: &AttractorEstimate, r: f64, n_probes: usize, n_iter: usize, seed: u64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(AttractorError::BadRadius(r));
    }
    let pts = match &est.points {
        Some(p) => p,
        None => return Ok(0.0),
    };
    if n_probes == 0 {
        return Ok(1.0);
    }
    let index = GridIndex::new(pts.arrays());
    let dim = pts.dim();
    let hits: usize = (0..n_probes)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let base = pts.arrays()[rng.gen_range(0..pts.len())];
            let mut x = match dim {
                Dim::One => [base[0] + rng.gen_range(-r..=r), 0.0],
                Dim::Two => {
                    let rad = r * rng.gen::<f64>().sqrt();
                    let th = rng.gen_range(0.0..std::f64::consts::TAU);
                    [base[0] + rad * th.cos(), base[1] + rad * th.sin()]
                }
            };
            if map.iterate(&mut x, n_iter, DEFAULT_ESCAPE_RADIUS).is_some() {
                return 0;
            }
            usize::from(index.nearest_distance_above(&x, BASIN_TOL) <= BASIN_TOL)
        })
        .sum();
    Ok(hits as f64 / n_probes as f64)
}

/// Maximal Lyapunov exponent along the orbit of `x0` over `n` iterates.
pub fn max_lyapunov(map: &MapSpec, x0: &Point, n: usize) -> Result<f64> {
    if x0.dim() != map.dim() {
        return Err(AttractorError::DimensionMismatch);
    }
    max_lyapunov_raw(map, x0.array(), n, DEFAULT_ESCAPE_RADIUS)
}

pub fn max_lyapunov_raw(map: &MapSpec, mut x: [f64; 2], n: usize, radius: f64) -> Result<f64> {
    if n < MIN_LYAPUNOV_STEPS {
        return Err(AttractorError::TooFewSteps(n));
    }
    let mut v = match map.dim() {
        Dim::One => Vector2::new(1.0, 0.0),
        Dim::Two => Vector2::new(1.0, 0.5).normalize(),
    };
    let mut acc = 0.0;
    for k in 1..=n {
        v = map.jacobian_conv(x) * v;
        x = map.step(x);
        if escaped(&x, radius) {
            return Err(AttractorError::Escape { escaped: 1, total: 1, first_iterate: k });
        }
        if k % RENORMALISE_EVERY == 0 || k == n {
            let norm = v.norm();
            acc += norm.ln();
            if norm == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            v /= norm;
        }
    }
    Ok(acc / n as f64)
}

/// Exponent of the factor transverse to the diagonal for the coupled skew
/// tent map, from the Jacobian applied to `(1, -1)` along a diagonal orbit.
/// Returns `-inf` at `omega = 1/2`, where the factor vanishes.
pub fn transverse_lyapunov(map: &MapSpec, n: usize) -> Result<f64> {
    let MapSpec::CoupledSkewTent { s, .. } = *map else {
        return Err(AttractorError::NotCoupled);
    };
    if n < MIN_LYAPUNOV_STEPS {
        return Err(AttractorError::TooFewSteps(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut z = rng.gen_range(0.05..0.95);
    for _ in 0..1000 {
        z = map.step([z, z])[0];
    }
    let mut acc = 0.0;
    let mut v = Vector2::new(1.0, -1.0);
    for k in 1..=n {
        v = map.jacobian_conv([z, z]) * v;
        z = map.step([z, z])[0];
        // A rounded orbit can land on the fixed point 0 or on the preimage
        // chain of 1; restart it at a fresh generic point.
        if z == 0.0 || z >= 1.0 || z == 1.0 / s {
            z = rng.gen_range(0.05..0.95);
        }
        if k % RENORMALISE_EVERY == 0 || k == n {
            let norm = v.norm();
            if norm == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            acc += norm.ln();
            v /= norm;
        }
    }
    Ok(acc / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{lozi_geometry, skew_tent_gamma};
    use crate::geometry::IntervalUnion;

    #[test]
    fn tent_attractor_hull_and_residual() {
        let t = MapSpec::tent(1.5).unwrap();
        let est = compute_attractor(&t, &Seed::Point(Point::new1(0.2).unwrap()), &AttractorOptions::for_dim(Dim::One)).unwrap();
        let (lo, hi) = est.points.as_ref().unwrap().bounding_box();
        assert!((lo[0] - 0.375).abs() < 1e-4 && lo[0] >= 0.375 - 1e-12);
        assert!((hi[0] - 0.75).abs() < 1e-4 && hi[0] <= 0.75 + 1e-12);
        assert!(est.residual < 1e-4);
        assert!((est.lyapunov_max - 1.5f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn set_iteration_tent() {
        let t = MapSpec::tent(1.5).unwrap();
        let n = TrappingSet::assume(CompactSet::Intervals(IntervalUnion::single(0.0, 1.0).unwrap()));
        assert_eq!(iterate_set(&t, &n, 0, None).unwrap(), n.set);
        // Cell-centred grid: the endpoints 0 and 1 sit on the repelling fixed
        // point and its preimage and never reach the attractor.
        let grid: Vec<f64> = (0..10_000).map(|k| (k as f64 + 0.5) / 10_000.0).collect();
        let n = TrappingSet::assume(CompactSet::Cloud(PointCloud::from_values(&grid).unwrap()));
        let img = iterate_set(&t, &n, 30, None).unwrap();
        let i0 = CompactSet::Intervals(IntervalUnion::single(0.375, 0.75).unwrap());
        assert!(semi_distance_with(&img, &i0, None).unwrap().value <= 1e-6);
    }

    #[test]
    fn lozi_outer_triangle_traps() {
        let g = lozi_geometry(1.7, 0.3).unwrap();
        let n = TrappingSet::verify(&g.map(), CompactSet::Polygon(g.outer.clone()), Some(5e-3)).unwrap();
        assert!(n.verified, "defect {}", n.defect);
        let img = iterate_set(&g.map(), &n, 1, None).unwrap();
        assert!(semi_distance_with(&img, &n.set, None).unwrap().value <= n.resolution);
    }

    #[test]
    fn skew_tent_gamma_from_orbit() {
        let st = MapSpec::skew_tent(1.8).unwrap();
        let l = max_lyapunov(&st, &Point::new1(0.123456789).unwrap(), 1_000_000).unwrap();
        assert!((l - skew_tent_gamma(1.8)).abs() < 1e-2, "{l}");
    }

    #[test]
    fn transverse_exponent_formula() {
        let (s, w) = (1.8, 0.35);
        let m = MapSpec::coupled_skew_tent(s, w).unwrap();
        let l = transverse_lyapunov(&m, 1_000_000).unwrap();
        assert!((l - (skew_tent_gamma(s) + (1.0f64 - 2.0 * w).ln())).abs() < 1e-2, "{l}");
        let half = MapSpec::coupled_skew_tent(s, 0.5).unwrap();
        assert_eq!(transverse_lyapunov(&half, 1000).unwrap(), f64::NEG_INFINITY);
        assert!(transverse_lyapunov(&MapSpec::tent(1.5).unwrap(), 1000).is_err());
    }

    #[test]
    fn escape_is_reported() {
        let l = MapSpec::lozi(1.7, 0.3).unwrap();
        let est = compute_attractor(&l, &Seed::Point(Point::new2(100.0, 100.0).unwrap()), &AttractorOptions::for_dim(Dim::Two)).unwrap();
        assert!(est.escaped && est.points.is_none());
        assert!(max_lyapunov(&l, &Point::new2(100.0, 100.0).unwrap(), 1000).is_err());
        assert!(max_lyapunov(&l, &Point::new2(0.1, 0.1).unwrap(), 10).is_err());
    }

    #[test]
    fn tent_basin_is_full() {
        let t = MapSpec::tent(1.5).unwrap();
        let opts = AttractorOptions::for_dim(Dim::One).with_samples(1000, 20_000);
        let est = compute_attractor(&t, &Seed::Point(Point::new1(0.3).unwrap()), &opts).unwrap();
        assert_eq!(basin_probe(&t, &est, 0.05, 200, 200, 1).unwrap(), 1.0);
    }
}
