//! Continuation of attractors along parameter paths, with jump detection,
//! plus cycle solvers, manifold growth and region sweeps for the BCNF.

mod cycles;
mod manifold;
mod sweep;

pub use cycles::{
    bcnf_border_collision_curve, bcnf_curve_b, bcnf_curve_b_polyline, bcnf_cycle, bcnf_period_six, border_collision_point, eigenvalues2,
    eigenvector, itinerary_string, minus_one_indicator, parse_itinerary, scan_root, solve_cycle, CycleSolution, Deltas, PeriodSix,
    CYCLE_RESIDUAL_TOL,
};
pub use manifold::{grow_unstable_manifold, ManifoldOptions};
pub use sweep::{
    classify_cell, classify_coupled, classify_sweep, coupled_image, coupled_sweep, lyapunov_surface, AttractorKind, CellReport,
    CoupledCell, CoupledLabel, CoupledOptions, FoundAttractor, Grid2, RegionLabel, SweepCell, SweepOptions,
};

use thiserror::Error;

use crate::analytic::lozi_geometry;
use crate::attractor::{compute_attractor, map_cloud, AttractorError, AttractorEstimate, AttractorOptions, Seed};
use crate::geometry::{hausdorff_distance, CompactSet, Dim, GeometryError, PointCloud};
use crate::maps::{Family, MapError, MapSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContinuationError {
    #[error("a path needs at least two points, got {0}")]
    ShortPath(usize),
    #[error("path points must belong to one family")]
    MixedFamilies,
    #[error("itinerary {0:?} must be a non-empty word over L and R")]
    BadItinerary(String),
    #[error("cycle with itinerary {0} is degenerate (I - M singular)")]
    DegenerateCycle(String),
    #[error("no root found for {0}")]
    NoRoot(&'static str),
    #[error("cycle is not a saddle")]
    NotSaddle,
    #[error("invalid option: {0}")]
    BadOption(String),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Attractor(#[from] AttractorError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub type Result<T> = std::result::Result<T, ContinuationError>;

/// Ordered maps of one family.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPath {
    maps: Vec<MapSpec>,
}

impl ParameterPath {
    pub fn new(maps: Vec<MapSpec>) -> Result<Self> {
        if maps.len() < 2 {
            return Err(ContinuationError::ShortPath(maps.len()));
        }
        let fam = maps[0].family();
        if maps.iter().any(|m| m.family() != fam) {
            return Err(ContinuationError::MixedFamilies);
        }
        for m in &maps {
            m.validate()?;
        }
        Ok(ParameterPath { maps })
    }

    /// `steps` equally spaced maps from `start` to `end` inclusive.
    pub fn linear(start: &MapSpec, end: &MapSpec, steps: usize) -> Result<Self> {
        if start.family() != end.family() {
            return Err(ContinuationError::MixedFamilies);
        }
        if steps < 2 {
            return Err(ContinuationError::ShortPath(steps));
        }
        let (a, b) = (start.params(), end.params());
        let maps = (0..steps)
            .map(|k| {
                let t = k as f64 / (steps - 1) as f64;
                let p: Vec<f64> = a.iter().zip(&b).map(|(x, y)| if k == steps - 1 { *y } else { x + t * (y - x) }).collect();
                start.family().with_params(&p)
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        ParameterPath::new(maps)
    }

    /// Varies one named parameter of `base` through `values`.
    pub fn along(base: &MapSpec, name: &str, values: &[f64]) -> Result<Self> {
        let maps = values.iter().map(|v| base.with_param(name, *v)).collect::<std::result::Result<Vec<_>, _>>()?;
        ParameterPath::new(maps)
    }

    pub fn maps(&self) -> &[MapSpec] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn family(&self) -> Family {
        self.maps[0].family()
    }
}

/// Euclidean distance between parameter vectors.
pub fn param_step(a: &MapSpec, b: &MapSpec) -> f64 {
    a.params().iter().zip(b.params()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn midpoint(a: &MapSpec, b: &MapSpec) -> Result<MapSpec> {
    let p: Vec<f64> = a.params().iter().zip(b.params()).map(|(x, y)| 0.5 * (x + y)).collect();
    Ok(a.family().with_params(&p)?)
}

/// When consecutive estimates count as a jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Fixed(f64),
    /// `max(factor * larger residual, floor)`.
    Residual {
        factor: f64,
        floor: f64,
    },
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold::Residual { factor: 10.0, floor: 1e-2 }
    }
}

impl Threshold {
    pub fn value(&self, res_a: f64, res_b: f64) -> f64 {
        match *self {
            Threshold::Fixed(t) => t,
            Threshold::Residual { factor, floor } => {
                let r = res_a.max(res_b);
                if r.is_finite() {
                    (factor * r).max(floor)
                } else {
                    floor
                }
            }
        }
    }
}

/// How the attractor at each path point is estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    /// Orbits of a seed cloud, warm-started along the path.
    Orbit,
    /// Images `f^n_iter` through `f^(n_iter + 2 span - 1)` of a dense sample
    /// of the family's trapping region, `grid` points per axis. Unlike orbits, this keeps
    /// parts of the attractor that typical orbits leave, such as a
    /// transversally unstable invariant set that still attracts as a set.
    SetImage { grid: usize, n_iter: usize, span: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationOptions {
    pub attractor: AttractorOptions,
    pub estimator: Estimator,
    pub threshold: Threshold,
    /// Points of the previous estimate carried over as the next seed.
    pub warm_points: usize,
    /// Seed for the first path point; a family default when `None`.
    pub initial_seed: Option<Seed>,
    /// Halve flagged steps until they are no longer than this.
    pub refine_min_step: Option<f64>,
}

impl ContinuationOptions {
    pub fn for_dim(dim: Dim) -> Self {
        let attractor = match dim {
            Dim::One => AttractorOptions::for_dim(dim),
            Dim::Two => AttractorOptions::for_dim(dim).with_samples(10_000, 100_000),
        };
        ContinuationOptions {
            attractor,
            estimator: Estimator::Orbit,
            threshold: Threshold::default(),
            warm_points: 256,
            initial_seed: None,
            refine_min_step: None,
        }
    }
}

/// Step sizes visited by refinement and the flags surviving at each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementLevel {
    pub step: f64,
    pub flagged: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationResult {
    pub maps: Vec<MapSpec>,
    pub estimates: Vec<AttractorEstimate>,
    /// `distances[i] = d_H(estimates[i], estimates[i + 1])`, NaN if either escaped.
    pub distances: Vec<f64>,
    pub thresholds: Vec<f64>,
    /// Set when the distance exceeds its threshold or is undefined.
    pub jump_flags: Vec<bool>,
    pub refinement: Vec<RefinementLevel>,
}

impl ContinuationResult {
    pub fn jumps(&self) -> Vec<usize> {
        (0..self.jump_flags.len()).filter(|&i| self.jump_flags[i]).collect()
    }

    /// Parameter vectors before and after the first flagged step.
    pub fn first_jump(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        self.jumps().first().map(|&i| (self.maps[i].params(), self.maps[i + 1].params()))
    }
}

/// Cell-centred grid of `n` points per axis over the unit interval or square.
fn unit_grid(dim: Dim, n: usize) -> Vec<[f64; 2]> {
    let c = |k: usize| (k as f64 + 0.5) / n as f64;
    match dim {
        Dim::One => (0..n).map(|i| [c(i), 0.0]).collect(),
        Dim::Two => (0..n).flat_map(|i| (0..n).map(move |j| [c(i), c(j)])).collect(),
    }
}

/// Family seed used at the start of a path and after an escape: a sample
/// of the analytic trapping region when one is known, else a default box.
pub fn default_seed(map: &MapSpec) -> Seed {
    let n = if map.dim() == Dim::One { 256 } else { 16 };
    Seed::Cloud(region_sample(map, n))
}

/// `n` points per axis over the unit domain, the Lozi outer triangle or `[-1, 1]^2`.
fn region_sample(map: &MapSpec, n: usize) -> Vec<[f64; 2]> {
    if map.has_unit_domain() {
        return unit_grid(map.dim(), n);
    }
    if let MapSpec::Lozi { a, b } = map {
        if let Ok(g) = lozi_geometry(*a, *b) {
            let pts = g.outer.sample_filled(g.outer.diameter() / n as f64);
            if !pts.is_empty() {
                return pts;
            }
        }
    }
    unit_grid(Dim::Two, n).into_iter().map(|[x, y]| [2.0 * x - 1.0, 2.0 * y - 1.0]).collect()
}

/// Collects the images `f^k` of the sample for `n_iter <= k < n_iter + 2 * span`;
/// the residual is `d_H` between the earlier and the later `span`
/// generations. Any escaping sample point marks the estimate as escaped.
fn set_image_estimate(map: &MapSpec, grid: usize, n_iter: usize, span: usize, radius: f64) -> Result<AttractorEstimate> {
    let span = span.max(1);
    let mut cur = region_sample(map, grid.max(2));
    let mut halves: [Vec<[f64; 2]>; 2] = [Vec::new(), Vec::new()];
    for g in 0..2 * span {
        let n = if g == 0 { n_iter } else { 1 };
        cur = match map_cloud(map, &cur, n, radius) {
            Ok(c) => c,
            Err(AttractorError::Escape { .. }) => return Ok(AttractorEstimate::escaped_estimate(n_iter)),
            Err(e) => return Err(e.into()),
        };
        halves[g / span].extend_from_slice(&cur);
    }
    let dim = map.dim();
    let [a, b] = halves;
    let residual = hausdorff_distance(
        &CompactSet::Cloud(PointCloud::from_arrays(dim, a.clone())?),
        &CompactSet::Cloud(PointCloud::from_arrays(dim, b.clone())?),
    )?;
    let mut all = a;
    all.extend(b);
    let cloud = PointCloud::from_arrays(dim, all)?;
    let n_samples = cloud.len();
    Ok(AttractorEstimate { points: Some(cloud), n_transient: n_iter, n_samples, residual, lyapunov_max: f64::NAN, escaped: false })
}

fn warm_seed(est: &AttractorEstimate, n: usize) -> Option<Seed> {
    let pts = est.points.as_ref()?.arrays();
    if pts.is_empty() || n == 0 {
        return None;
    }
    let stride = (pts.len() / n).max(1);
    // Latest samples are closest to the attractor.
    let start = pts.len() - 1 - (n.min(pts.len()) - 1) * stride;
    Some(Seed::Cloud(pts[start..].iter().step_by(stride).copied().collect()))
}

fn estimate_at(map: &MapSpec, seed: Option<Seed>, opts: &ContinuationOptions) -> Result<AttractorEstimate> {
    if let Estimator::SetImage { grid, n_iter, span } = opts.estimator {
        return set_image_estimate(map, grid, n_iter, span, opts.attractor.escape_radius);
    }
    if let Some(s) = seed {
        let est = settle(map, &s, &opts.attractor)?;
        if !est.escaped {
            return Ok(est);
        }
    }
    settle(map, &default_seed(map), &opts.attractor)
}

/// An estimate whose halves differ by more than this is still a transient.
pub(crate) const UNSETTLED_RESIDUAL: f64 = 0.1;
/// Times an unsettled estimate is extended before it is accepted as it is.
pub(crate) const MAX_EXTENSIONS: usize = 3;

/// [`compute_attractor`], restarted from its latest samples with a longer
/// transient while the residual marks it as unsettled.
fn settle(map: &MapSpec, seed: &Seed, opts: &AttractorOptions) -> Result<AttractorEstimate> {
    let width = match seed {
        Seed::Cloud(c) => c.len(),
        _ => 1,
    };
    let mut est = compute_attractor(map, seed, opts)?;
    let o = AttractorOptions { n_transient: 4 * opts.n_samples.max(opts.n_transient), ..*opts };
    for _ in 0..MAX_EXTENSIONS {
        if est.escaped || est.residual <= UNSETTLED_RESIDUAL {
            break;
        }
        let Some(next) = warm_seed(&est, width) else { break };
        est = compute_attractor(map, &next, &o)?;
    }
    Ok(est)
}

fn pair_distance(a: &AttractorEstimate, b: &AttractorEstimate, th: &Threshold) -> Result<(f64, f64, bool)> {
    let t = th.value(a.residual, b.residual);
    match (a.set(), b.set()) {
        (Some(x), Some(y)) if !a.escaped && !b.escaped => {
            let d = hausdorff_distance(&x, &y)?;
            Ok((d, t, d > t))
        }
        _ => Ok((f64::NAN, t, true)),
    }
}

/// Continues an attractor along `path`.
///
/// Each point is seeded from a subsample of the previous estimate, falling
/// back to [`default_seed`] on escape. With `refine_min_step`, flagged steps
/// are bisected (warm-started from their left end) until no flagged step is
/// longer than the minimum.
pub fn continue_attractor(path: &ParameterPath, opts: &ContinuationOptions) -> Result<ContinuationResult> {
    if let Some(h) = opts.refine_min_step {
        if !(h > 0.0 && h.is_finite()) {
            return Err(ContinuationError::BadOption(format!("refine_min_step {h}")));
        }
    }
    let mut maps: Vec<MapSpec> = path.maps().to_vec();
    let mut estimates: Vec<AttractorEstimate> = Vec::with_capacity(maps.len());
    for (i, m) in maps.iter().enumerate() {
        let seed = if i == 0 {
            opts.initial_seed.clone().or_else(|| Some(default_seed(m)))
        } else {
            warm_seed(&estimates[i - 1], opts.warm_points)
        };
        estimates.push(estimate_at(m, seed, opts)?);
    }
    let mut distances = Vec::with_capacity(maps.len() - 1);
    let mut thresholds = Vec::with_capacity(maps.len() - 1);
    let mut flags = Vec::with_capacity(maps.len() - 1);
    for i in 0..maps.len() - 1 {
        let (d, t, f) = pair_distance(&estimates[i], &estimates[i + 1], &opts.threshold)?;
        distances.push(d);
        thresholds.push(t);
        flags.push(f);
    }
    let mut refinement = Vec::new();
    if let Some(h_min) = opts.refine_min_step {
        loop {
            let todo: Vec<usize> =
                (0..flags.len()).filter(|&i| flags[i] && param_step(&maps[i], &maps[i + 1]) > h_min * (1.0 + 1e-9)).collect();
            if todo.is_empty() {
                break;
            }
            let mut level_step = 0.0f64;
            let mut level_flags = 0;
            // Back to front so earlier indices stay valid.
            for &i in todo.iter().rev() {
                let mid = midpoint(&maps[i], &maps[i + 1])?;
                let est = estimate_at(&mid, warm_seed(&estimates[i], opts.warm_points), opts)?;
                let (d0, t0, f0) = pair_distance(&estimates[i], &est, &opts.threshold)?;
                let (d1, t1, f1) = pair_distance(&est, &estimates[i + 1], &opts.threshold)?;
                level_step = level_step.max(param_step(&maps[i], &mid));
                level_flags += f0 as usize + f1 as usize;
                maps.insert(i + 1, mid);
                estimates.insert(i + 1, est);
                distances.splice(i..=i, [d0, d1]);
                thresholds.splice(i..=i, [t0, t1]);
                flags.splice(i..=i, [f0, f1]);
            }
            refinement.push(RefinementLevel { step: level_step, flagged: level_flags });
        }
    }
    Ok(ContinuationResult { maps, estimates, distances, thresholds, jump_flags: flags, refinement })
}

/// First jump of a one-parameter scan, refined to `min_step`.
pub fn locate_jump(base: &MapSpec, name: &str, values: &[f64], min_step: f64, opts: &ContinuationOptions) -> Result<Option<(f64, f64)>> {
    let path = ParameterPath::along(base, name, values)?;
    let mut o = opts.clone();
    o.refine_min_step = Some(min_step);
    let res = continue_attractor(&path, &o)?;
    Ok(res
        .jumps()
        .first()
        .map(|&i| {
            let a = res.maps[i].param(name);
            let b = res.maps[i + 1].param(name);
            (a, b)
        })
        .and_then(|(a, b)| Some((a.ok()?, b.ok()?))))
}

/// Whether a set is a sample of an attractor estimate (not escaped).
pub fn estimate_set(est: &AttractorEstimate) -> Option<CompactSet> {
    if est.escaped {
        None
    } else {
        est.set()
    }
}
