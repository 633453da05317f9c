//! Region classification over BCNF parameter grids and the coupled skew
//! tent map.

use std::fmt;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::{bcnf_cycle, CycleSolution, Deltas, Result, MAX_EXTENSIONS, UNSETTLED_RESIDUAL};
use crate::attractor::{half_residual, max_lyapunov_raw, MIN_LYAPUNOV_STEPS};
use crate::geometry::{hausdorff_distance, CompactSet, Dim, GridIndex, PointCloud};
use crate::maps::{MapSpec, DEFAULT_ESCAPE_RADIUS};

/// Coexisting-attractor regions of the BCNF slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionLabel {
    P3,
    P3B,
    AB,
    A,
    B,
    C,
    Escape,
    Unclassified,
}

impl RegionLabel {
    pub const ALL: [RegionLabel; 8] = [
        RegionLabel::P3,
        RegionLabel::P3B,
        RegionLabel::AB,
        RegionLabel::A,
        RegionLabel::B,
        RegionLabel::C,
        RegionLabel::Escape,
        RegionLabel::Unclassified,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegionLabel::P3 => "P3",
            RegionLabel::P3B => "P3+B",
            RegionLabel::AB => "A+B",
            RegionLabel::A => "A",
            RegionLabel::B => "B",
            RegionLabel::C => "C",
            RegionLabel::Escape => "escape",
            RegionLabel::Unclassified => "unclassified",
        }
    }

    pub fn has_p3(self) -> bool {
        matches!(self, RegionLabel::P3 | RegionLabel::P3B)
    }

    pub fn has_a(self) -> bool {
        matches!(self, RegionLabel::A | RegionLabel::AB)
    }
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RegionLabel {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        RegionLabel::ALL.into_iter().find(|l| l.as_str() == s).ok_or_else(|| format!("unknown label {s:?}"))
    }
}

/// What a single seed converged to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttractorKind {
    /// The admissible stable `LRL` cycle.
    P3,
    /// Three-piece chaotic attractor cycling its pieces with period three.
    A,
    /// Chaotic attractor away from the `RRL` saddle.
    B,
    /// Chaotic attractor containing the `RRL` saddle.
    C,
    /// Some other periodic orbit.
    Cycle(usize),
}

impl AttractorKind {
    pub fn name(&self) -> String {
        match self {
            AttractorKind::P3 => "P3".into(),
            AttractorKind::A => "A".into(),
            AttractorKind::B => "B".into(),
            AttractorKind::C => "C".into(),
            AttractorKind::Cycle(p) => format!("P{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoundAttractor {
    pub kind: AttractorKind,
    pub lyapunov: f64,
    /// Half-sample residual; zero for cycles.
    pub residual: f64,
    /// Largest distance from an `RRL` point to the attractor (infinite if that cycle is absent).
    pub rrl_distance: f64,
    /// `d_H` between samples taken one iterate apart at stride three.
    pub three_phase: f64,
    pub cloud: Option<PointCloud>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub deltas: Deltas,
    pub n_transient: usize,
    pub n_samples: usize,
    /// Zero skips exponents for chaotic attractors.
    pub lyapunov_steps: usize,
    /// Offset of the seeds from the cycles along their unstable directions.
    pub seed_offset: f64,
    /// Attractors closer than `max(merge_factor * residual, merge_floor)` are one.
    pub merge_factor: f64,
    pub merge_floor: f64,
    /// `rrl_distance` below this labels `C`.
    pub rrl_tol: f64,
    /// `three_phase` above this (and above `merge_factor * residual`) labels `A`.
    pub piece_tol: f64,
    pub escape_radius: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            deltas: Deltas::default(),
            n_transient: 5_000,
            n_samples: 20_000,
            lyapunov_steps: 20_000,
            seed_offset: 1e-4,
            merge_factor: 10.0,
            merge_floor: 0.02,
            rrl_tol: 0.01,
            piece_tol: 0.1,
            escape_radius: DEFAULT_ESCAPE_RADIUS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub tau_l: f64,
    pub tau_r: f64,
    pub label: RegionLabel,
    /// Distinct attractors, ordered by kind.
    pub attractors: Vec<FoundAttractor>,
    /// Smallest `d_H` between distinct chaotic attractors.
    pub separation: Option<f64>,
    pub lrl: Option<CycleSolution>,
    pub rrl: Option<CycleSolution>,
}

pub type SweepCell = CellReport;

impl CellReport {
    pub fn lyapunovs(&self) -> Vec<f64> {
        self.attractors.iter().map(|a| a.lyapunov).collect()
    }

    pub fn find(&self, kind: AttractorKind) -> Option<&FoundAttractor> {
        self.attractors.iter().find(|a| a.kind == kind)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "tau_L": self.tau_l,
            "tau_R": self.tau_r,
            "label": self.label.as_str(),
            "separation": self.separation,
            "attractors": self.attractors.iter().map(|a| json!({
                "kind": a.kind.name(),
                "lyapunov": if a.lyapunov.is_finite() { json!(a.lyapunov) } else { Value::Null },
                "residual": a.residual,
                "rrl_distance": if a.rrl_distance.is_finite() { json!(a.rrl_distance) } else { Value::Null },
                "three_phase": a.three_phase,
            })).collect::<Vec<_>>(),
        })
    }
}

/// An orbit tail this close to the stable `LRL` cycle is in its basin.
const P3_CAPTURE: f64 = 1e-4;
/// Samples of a new orbit tested against known attractors.
const MERGE_PROBES: usize = 2_000;

fn dist(p: &[f64; 2], q: &[f64; 2]) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

fn cycle_lyapunov(c: &CycleSolution) -> f64 {
    c.spectral_moduli()[1].ln() / c.period() as f64
}

/// Smallest period `p <= 12` with `x_{n-p} = x_n` to `1e-9` along the orbit tail.
fn orbit_period(orbit: &[[f64; 2]]) -> Option<usize> {
    let n = orbit.len();
    (1..=12).find(|&p| n > 4 * p && (1..=3 * p).all(|k| dist(&orbit[n - k], &orbit[n - k - p]) < 1e-9))
}

fn make_map(tau_l: f64, tau_r: f64, d: Deltas) -> MapSpec {
    d.map(tau_l, tau_r)
}

/// Seeds on both branches of the `RRL` unstable manifold and next to the
/// `LRL` cycle; the origin when neither cycle is admissible.
fn seeds(lrl: &Option<CycleSolution>, rrl: &Option<CycleSolution>, eps: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    if let Some(c) = rrl {
        if let Some((_, v)) = c.unstable_direction() {
            let p = c.points[0];
            out.push([p[0] + eps * v[0], p[1] + eps * v[1]]);
            out.push([p[0] - eps * v[0], p[1] - eps * v[1]]);
        }
    }
    if let Some(c) = lrl {
        let p = c.points[0];
        let v = c.unstable_direction().map(|(_, v)| [v[0], v[1]]).unwrap_or([std::f64::consts::FRAC_1_SQRT_2; 2]);
        out.push([p[0] + eps * v[0], p[1] + eps * v[1]]);
    }
    if out.is_empty() {
        out.push([0.0, 0.0]);
    }
    out
}

/// Classifies one parameter point from the attractors reached by its seeds.
///
/// Chaotic attractors are `C` when they contain the `RRL` saddle, else `A`
/// when consecutive iterates land on different pieces of a period-three
/// cycle of pieces, else `B`.
pub fn classify_cell(tau_l: f64, tau_r: f64, opts: &SweepOptions, keep_clouds: bool) -> Result<CellReport> {
    let map = make_map(tau_l, tau_r, opts.deltas);
    map.validate()?;
    let lrl = bcnf_cycle("LRL", &map).ok().filter(|c| c.admissible);
    let rrl = bcnf_cycle("RRL", &map).ok().filter(|c| c.admissible);
    let p3 = lrl.as_ref().filter(|c| c.is_stable());
    let mut found: Vec<FoundAttractor> = Vec::new();
    let mut indexes: Vec<Option<GridIndex>> = Vec::new();
    'seed: for s in seeds(&lrl, &rrl, opts.seed_offset) {
        let (mut x0, mut n_transient) = (s, opts.n_transient);
        let mut extensions = 0;
        loop {
            let orbit = map.orbit_raw(x0, n_transient, opts.n_samples, opts.escape_radius);
            if orbit.escaped() {
                continue 'seed;
            }
            let pts = orbit.points;
            let last = *pts.last().expect("n_samples >= 1");
            if let Some(c) = p3 {
                let near = pts[pts.len().saturating_sub(30)..]
                    .iter()
                    .all(|q| c.points.iter().map(|p| dist(p, q)).fold(f64::INFINITY, f64::min) < P3_CAPTURE);
                if near {
                    if !found.iter().any(|f| f.kind == AttractorKind::P3) {
                        found.push(FoundAttractor {
                            kind: AttractorKind::P3,
                            lyapunov: cycle_lyapunov(c),
                            residual: 0.0,
                            rrl_distance: f64::INFINITY,
                            three_phase: 0.0,
                            cloud: None,
                        });
                        indexes.push(None);
                    }
                    continue 'seed;
                }
            }
            if let Some(p) = orbit_period(&pts) {
                let kind = AttractorKind::Cycle(p);
                if !found.iter().any(|f| f.kind == kind) {
                    found.push(FoundAttractor {
                        kind,
                        lyapunov: if opts.lyapunov_steps >= MIN_LYAPUNOV_STEPS {
                            max_lyapunov_raw(&map, last, opts.lyapunov_steps, opts.escape_radius).unwrap_or(f64::NAN)
                        } else {
                            f64::NAN
                        },
                        residual: 0.0,
                        rrl_distance: f64::INFINITY,
                        three_phase: 0.0,
                        cloud: keep_clouds.then(|| PointCloud::from_arrays(Dim::Two, pts[pts.len() - p..].to_vec())).transpose()?,
                    });
                    indexes.push(None);
                }
                continue 'seed;
            }
            let cloud = PointCloud::from_arrays(Dim::Two, pts)?;
            let residual = half_residual(&cloud)?;
            if residual > UNSETTLED_RESIDUAL && extensions < MAX_EXTENSIONS {
                // Still in a transient: discard the sample and iterate longer.
                x0 = last;
                n_transient = 4 * opts.n_samples.max(opts.n_transient);
                extensions += 1;
                continue;
            }
            // A seed reaching a known attractor has every probe close to it.
            let stride = (cloud.len() / MERGE_PROBES).max(1);
            let duplicate = found.iter().zip(&indexes).any(|(f, idx)| {
                idx.as_ref().is_some_and(|idx| {
                    let tol = (opts.merge_factor * f.residual).max(opts.merge_floor);
                    cloud.arrays().iter().step_by(stride).all(|q| idx.nearest_distance_above(q, tol) <= tol)
                })
            });
            if duplicate {
                continue 'seed;
            }
            let idx = GridIndex::new(cloud.arrays());
            let rrl_distance = match &rrl {
                Some(c) => c.points.iter().map(|p| idx.nearest_distance(p)).fold(0.0, f64::max),
                None => f64::INFINITY,
            };
            let three_phase = match (cloud.subsample(0, 3), cloud.subsample(1, 3)) {
                (Some(a), Some(b)) => hausdorff_distance(&CompactSet::Cloud(a), &CompactSet::Cloud(b))?,
                _ => 0.0,
            };
            let kind = if rrl_distance < opts.rrl_tol {
                AttractorKind::C
            } else if three_phase > opts.piece_tol.max(opts.merge_factor * residual) {
                AttractorKind::A
            } else {
                AttractorKind::B
            };
            let lyapunov = if opts.lyapunov_steps >= MIN_LYAPUNOV_STEPS {
                max_lyapunov_raw(&map, last, opts.lyapunov_steps, opts.escape_radius).unwrap_or(f64::NAN)
            } else {
                f64::NAN
            };
            found.push(FoundAttractor { kind, lyapunov, residual, rrl_distance, three_phase, cloud: Some(cloud) });
            indexes.push(Some(idx));
            continue 'seed;
        }
    }
    let mut separation: Option<f64> = None;
    for i in 0..found.len() {
        for j in i + 1..found.len() {
            if let (Some(a), Some(b)) = (&found[i].cloud, &found[j].cloud) {
                let d = hausdorff_distance(&CompactSet::Cloud(a.clone()), &CompactSet::Cloud(b.clone()))?;
                separation = Some(separation.map_or(d, |s| s.min(d)));
            }
        }
    }
    found.sort_by_key(|f| f.kind);
    let kinds: Vec<AttractorKind> = found.iter().map(|f| f.kind).collect();
    use AttractorKind as K;
    let label = match kinds.as_slice() {
        [] => RegionLabel::Escape,
        [K::P3] => RegionLabel::P3,
        [K::P3, K::B] => RegionLabel::P3B,
        [K::A, K::B] => RegionLabel::AB,
        [K::A] => RegionLabel::A,
        [K::B] => RegionLabel::B,
        [K::C] => RegionLabel::C,
        _ => RegionLabel::Unclassified,
    };
    if !keep_clouds {
        for f in &mut found {
            f.cloud = None;
        }
    }
    Ok(CellReport { tau_l, tau_r, label, attractors: found, separation, lrl, rrl })
}

/// Inclusive, evenly spaced grid over `(tau_L, tau_R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2 {
    pub x: (f64, f64),
    pub nx: usize,
    pub y: (f64, f64),
    pub ny: usize,
}

impl Grid2 {
    fn axis(r: (f64, f64), n: usize) -> Vec<f64> {
        if n <= 1 {
            return vec![r.0];
        }
        (0..n).map(|k| if k == n - 1 { r.1 } else { r.0 + (r.1 - r.0) * k as f64 / (n - 1) as f64 }).collect()
    }

    pub fn xs(&self) -> Vec<f64> {
        Self::axis(self.x, self.nx)
    }

    pub fn ys(&self) -> Vec<f64> {
        Self::axis(self.y, self.ny)
    }

    /// Row-major: `y` outer, `x` inner.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let xs = self.xs();
        self.ys().into_iter().flat_map(|y| xs.iter().map(move |&x| (x, y))).collect()
    }
}

/// Classifies every grid point; `x` is `tau_L`, `y` is `tau_R`.
pub fn classify_sweep(grid: &Grid2, opts: &SweepOptions) -> Result<Vec<SweepCell>> {
    grid.points().into_par_iter().map(|(tl, tr)| classify_cell(tl, tr, opts, false)).collect()
}

/// Like [`classify_sweep`] but always computes exponents (`20000` iterates when unset).
pub fn lyapunov_surface(grid: &Grid2, opts: &SweepOptions) -> Result<Vec<SweepCell>> {
    let mut o = opts.clone();
    if o.lyapunov_steps < MIN_LYAPUNOV_STEPS {
        o.lyapunov_steps = 20_000;
    }
    classify_sweep(grid, &o)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoupledLabel {
    /// The attractor is the two-dimensional quadrilateral region.
    Quadrilateral,
    /// The attractor lies on the diagonal.
    Diagonal,
}

impl CoupledLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            CoupledLabel::Quadrilateral => "D",
            CoupledLabel::Diagonal => "diagonal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledOptions {
    /// Cell-centred grid points per axis of the unit square.
    pub grid_n: usize,
    pub n_iter: usize,
    /// Off-diagonal extent above this labels the quadrilateral.
    pub off_diagonal_tol: f64,
}

impl Default for CoupledOptions {
    fn default() -> Self {
        CoupledOptions { grid_n: 301, n_iter: 40, off_diagonal_tol: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledCell {
    pub s: f64,
    pub omega: f64,
    pub label: CoupledLabel,
    /// Largest distance of the iterated square from the diagonal.
    pub off_diagonal: f64,
}

/// Image of a dense sample of the unit square after `n_iter` steps.
pub fn coupled_image(s: f64, omega: f64, opts: &CoupledOptions) -> Result<Vec<[f64; 2]>> {
    let map = MapSpec::coupled_skew_tent(s, omega)?;
    let n = opts.grid_n.max(1);
    let c = |k: usize| (k as f64 + 0.5) / n as f64;
    Ok((0..n * n)
        .into_par_iter()
        .map(|k| {
            let mut x = [c(k / n), c(k % n)];
            for _ in 0..opts.n_iter {
                x = map.step(x);
            }
            x
        })
        .collect())
}

/// The attractor is taken as the iterated image of the square, which keeps
/// orbits that only linger near transversally unstable diagonal points.
pub fn classify_coupled(s: f64, omega: f64, opts: &CoupledOptions) -> Result<CoupledCell> {
    let img = coupled_image(s, omega, opts)?;
    let off = img.iter().map(|p| (p[0] - p[1]).abs() / std::f64::consts::SQRT_2).fold(0.0, f64::max);
    let label = if off > opts.off_diagonal_tol { CoupledLabel::Quadrilateral } else { CoupledLabel::Diagonal };
    Ok(CoupledCell { s, omega, label, off_diagonal: off })
}

pub fn coupled_sweep(s_values: &[f64], omegas: &[f64], opts: &CoupledOptions) -> Result<Vec<CoupledCell>> {
    let mut out = Vec::with_capacity(s_values.len() * omegas.len());
    for &s in s_values {
        for &w in omegas {
            out.push(classify_coupled(s, w, opts)?);
        }
    }
    Ok(out)
}
