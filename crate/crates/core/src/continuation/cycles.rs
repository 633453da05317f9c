//! Periodic orbits of piecewise-affine planar maps with a prescribed
//! itinerary, and the bifurcation curves they define in the BCNF.

use nalgebra::{Complex, Matrix2, Vector2};
use serde_json::{json, Value};

use super::{ContinuationError, Result};
use crate::maps::{MapSpec, Side};

/// Substitution residuals above this mark a solve as failed.
pub const CYCLE_RESIDUAL_TOL: f64 = 1e-10;
/// `|det(I - M)|` below this is treated as singular.
const SINGULAR_TOL: f64 = 1e-13;

pub fn parse_itinerary(word: &str) -> Result<Vec<Side>> {
    if word.is_empty() {
        return Err(ContinuationError::BadItinerary(word.to_string()));
    }
    word.chars()
        .map(|c| match c {
            'L' => Ok(Side::Left),
            'R' => Ok(Side::Right),
            _ => Err(ContinuationError::BadItinerary(word.to_string())),
        })
        .collect()
}

pub fn itinerary_string(it: &[Side]) -> String {
    it.iter().map(|s| if *s == Side::Left { 'L' } else { 'R' }).collect()
}

/// A periodic orbit with a fixed itinerary.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleSolution {
    pub itinerary: Vec<Side>,
    pub points: Vec<[f64; 2]>,
    /// Monodromy `A_{n-1} ... A_0` in orbit order, based at `points[0]`.
    pub monodromy: Matrix2<f64>,
    pub eigenvalues: [Complex<f64>; 2],
    /// Each point lies on the side its symbol claims (zero counts for both).
    pub admissible: bool,
    /// Largest substitution error of the cycle equations.
    pub residual: f64,
}

impl CycleSolution {
    pub fn period(&self) -> usize {
        self.points.len()
    }

    pub fn itinerary_string(&self) -> String {
        itinerary_string(&self.itinerary)
    }

    pub fn spectral_moduli(&self) -> [f64; 2] {
        let mut m = [self.eigenvalues[0].norm(), self.eigenvalues[1].norm()];
        m.sort_by(f64::total_cmp);
        m
    }

    pub fn is_stable(&self) -> bool {
        self.spectral_moduli()[1] < 1.0
    }

    pub fn is_saddle(&self) -> bool {
        let [lo, hi] = self.spectral_moduli();
        lo < 1.0 && hi > 1.0 && self.eigenvalues[0].im == 0.0
    }

    /// `min_i s_i x_{i,1}` with `s = -1` for `L` and `+1` for `R`: positive
    /// when strictly admissible, zero on a border collision.
    pub fn margin(&self) -> f64 {
        self.itinerary.iter().zip(&self.points).map(|(s, p)| if *s == Side::Left { -p[0] } else { p[0] }).fold(f64::INFINITY, f64::min)
    }

    pub fn min_abs_x1(&self) -> f64 {
        self.points.iter().map(|p| p[0].abs()).fold(f64::INFINITY, f64::min)
    }

    /// Real unstable eigenvalue and unit eigenvector at `points[0]` of a saddle.
    pub fn unstable_direction(&self) -> Option<(f64, Vector2<f64>)> {
        if !self.is_saddle() {
            return None;
        }
        let l = if self.eigenvalues[0].norm() > self.eigenvalues[1].norm() { self.eigenvalues[0].re } else { self.eigenvalues[1].re };
        Some((l, eigenvector(&self.monodromy, l)))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "itinerary": self.itinerary_string(),
            "points": self.points,
            "eigenvalues": self.eigenvalues.iter().map(|c| json!([c.re, c.im])).collect::<Vec<_>>(),
            "admissible": self.admissible,
            "stable": self.is_stable(),
            "residual": self.residual,
            "margin": self.margin(),
        })
    }
}

/// Unit eigenvector of a 2x2 matrix for a real eigenvalue.
pub fn eigenvector(m: &Matrix2<f64>, l: f64) -> Vector2<f64> {
    let a = m - Matrix2::identity() * l;
    // Null vector of the row with the larger norm.
    let r0 = Vector2::new(a[(0, 0)], a[(0, 1)]);
    let r1 = Vector2::new(a[(1, 0)], a[(1, 1)]);
    let r = if r0.norm() >= r1.norm() { r0 } else { r1 };
    let v = if r.norm() == 0.0 { Vector2::new(1.0, 0.0) } else { Vector2::new(-r[1], r[0]) };
    v / v.norm()
}

/// Eigenvalues of a 2x2 matrix from its trace and determinant.
pub fn eigenvalues2(m: &Matrix2<f64>) -> [Complex<f64>; 2] {
    let tr = m.trace();
    let det = m.determinant();
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let r = disc.sqrt();
        // Avoid cancellation in the smaller root.
        let big = tr / 2.0 + r.copysign(tr);
        let small = if big != 0.0 { det / big } else { tr / 2.0 - r.copysign(tr) };
        [Complex::new(big, 0.0), Complex::new(small, 0.0)]
    } else {
        let r = (-disc).sqrt();
        [Complex::new(tr / 2.0, r), Complex::new(tr / 2.0, -r)]
    }
}

/// Solves `x_{i+1} = A_{s_i} x_i + c` around the loop for a Lozi or BCNF map.
pub fn solve_cycle(map: &MapSpec, itinerary: &[Side]) -> Result<CycleSolution> {
    if itinerary.is_empty() {
        return Err(ContinuationError::BadItinerary(String::new()));
    }
    let pieces: Vec<(Matrix2<f64>, Vector2<f64>)> =
        itinerary.iter().map(|s| map.affine_piece(*s)).collect::<std::result::Result<_, _>>()?;
    // x_n = M x_0 + d.
    let mut m = Matrix2::identity();
    let mut d = Vector2::zeros();
    for (a, c) in &pieces {
        m = a * m;
        d = a * d + c;
    }
    let lhs = Matrix2::identity() - m;
    if lhs.determinant().abs() < SINGULAR_TOL {
        return Err(ContinuationError::DegenerateCycle(itinerary_string(itinerary)));
    }
    let x0 = lhs.lu().solve(&d).ok_or_else(|| ContinuationError::DegenerateCycle(itinerary_string(itinerary)))?;
    let mut points = Vec::with_capacity(itinerary.len());
    let mut x = x0;
    for (a, c) in &pieces {
        points.push([x[0], x[1]]);
        x = a * x + c;
    }
    let n = points.len();
    let mut residual = 0.0f64;
    for i in 0..n {
        let (a, c) = &pieces[i];
        let img = a * Vector2::new(points[i][0], points[i][1]) + c;
        let next = points[(i + 1) % n];
        residual = residual.max((img[0] - next[0]).abs()).max((img[1] - next[1]).abs());
    }
    let admissible = itinerary.iter().zip(&points).all(|(s, p)| match s {
        Side::Left => p[0] <= 0.0,
        Side::Right => p[0] >= 0.0,
    });
    if residual > CYCLE_RESIDUAL_TOL * (1.0 + x0.norm()) {
        return Err(ContinuationError::DegenerateCycle(itinerary_string(itinerary)));
    }
    Ok(CycleSolution { itinerary: itinerary.to_vec(), points, eigenvalues: eigenvalues2(&m), monodromy: m, admissible, residual })
}

/// BCNF cycle for an itinerary given as a word over `{L, R}`.
pub fn bcnf_cycle(word: &str, map: &MapSpec) -> Result<CycleSolution> {
    solve_cycle(map, &parse_itinerary(word)?)
}

/// `det(M + I) = 1 + tr M + det M` for the monodromy of `word`.
pub fn minus_one_indicator(map: &MapSpec, word: &[Side]) -> Result<f64> {
    let mut m = Matrix2::identity();
    for s in word {
        m = map.affine_piece(*s)?.0 * m;
    }
    Ok(1.0 + m.trace() + m.determinant())
}

/// Bisection on a sign change of `f` in `[lo, hi]`, after scanning `scan`
/// subintervals for the first bracket starting from `lo`.
pub fn scan_root(mut f: impl FnMut(f64) -> Option<f64>, lo: f64, hi: f64, scan: usize, tol: f64) -> Option<f64> {
    let n = scan.max(1);
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..=n {
        let t = lo + (hi - lo) * k as f64 / n as f64;
        let v = match f(t) {
            Some(v) if v.is_finite() => v,
            _ => {
                prev = None;
                continue;
            }
        };
        if v == 0.0 {
            return Some(t);
        }
        if let Some((tp, vp)) = prev {
            if vp.signum() != v.signum() {
                return bisect(&mut f, tp, vp, t, tol);
            }
        }
        prev = Some((t, v));
    }
    None
}

fn bisect(f: &mut impl FnMut(f64) -> Option<f64>, mut a: f64, mut fa: f64, mut b: f64, tol: f64) -> Option<f64> {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol || m == a || m == b {
            return Some(m);
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// The slice `delta_L`, `delta_R` of the BCNF parameter space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deltas {
    pub left: f64,
    pub right: f64,
}

impl Default for Deltas {
    fn default() -> Self {
        Deltas { left: 0.3, right: 0.3 }
    }
}

impl Deltas {
    pub fn map(&self, tau_l: f64, tau_r: f64) -> MapSpec {
        MapSpec::Bcnf { tau_l, delta_l: self.left, tau_r, delta_r: self.right }
    }
}

pub const ROOT_TOL: f64 = 1e-13;

/// `tau_R` at which the `LRL` cycle has an eigenvalue `-1`, searched in
/// `bracket`; the cycle must be admissible there.
pub fn bcnf_curve_b(tau_l: f64, deltas: Deltas, bracket: (f64, f64)) -> Result<f64> {
    let word = parse_itinerary("LRL")?;
    let root = scan_root(|tr| minus_one_indicator(&deltas.map(tau_l, tr), &word).ok(), bracket.0, bracket.1, 64, ROOT_TOL)
        .ok_or(ContinuationError::NoRoot("curve b"))?;
    let cyc = solve_cycle(&deltas.map(tau_l, root), &word)?;
    if !cyc.admissible {
        return Err(ContinuationError::NoRoot("curve b (LRL not admissible at the root)"));
    }
    Ok(root)
}

/// The period-6 orbit on curve b with one point on the switching line.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodSix {
    pub tau_l: f64,
    pub tau_r: f64,
    /// Endpoint of the family `x* ± t w` of doubled-`LRL` orbits.
    pub family_endpoint: Vec<[f64; 2]>,
    /// The same orbit solved as a cycle of a flipped itinerary.
    pub cycle: CycleSolution,
}

/// At curve b the doubled itinerary `LRLLRL` is singular: the `-1`
/// eigendirection `w` carries a segment of 6-cycles `x_i* ± t w_i`. Its
/// endpoint has a point on `x1 = 0` and solves the non-singular system of
/// the itinerary that flips the symbol there. Both constructions are
/// returned; they must agree.
pub fn bcnf_period_six(tau_l: f64, deltas: Deltas, bracket: (f64, f64)) -> Result<PeriodSix> {
    let tau_r = bcnf_curve_b(tau_l, deltas, bracket)?;
    let map = deltas.map(tau_l, tau_r);
    let lrl = bcnf_cycle("LRL", &map)?;
    let w0 = eigenvector(&lrl.monodromy, -1.0);
    let mut w = vec![w0];
    for i in 0..2 {
        let a = map.affine_piece(lrl.itinerary[i])?.0;
        w.push(a * w[i]);
    }
    let t_max = (0..3).map(|i| lrl.points[i][0].abs() / w[i][0].abs()).fold(f64::INFINITY, f64::min);
    let mut endpoint: Vec<[f64; 2]> = (0..3).map(|i| [lrl.points[i][0] + t_max * w[i][0], lrl.points[i][1] + t_max * w[i][1]]).collect();
    endpoint.extend((0..3).map(|i| [lrl.points[i][0] - t_max * w[i][0], lrl.points[i][1] - t_max * w[i][1]]));
    let base = parse_itinerary("LRLLRL")?;
    let mut best: Option<CycleSolution> = None;
    for k in 0..6 {
        let mut it = base.clone();
        it[k] = if it[k] == Side::Left { Side::Right } else { Side::Left };
        if let Ok(c) = solve_cycle(&map, &it) {
            // The flipped point sits on x1 = 0 up to rounding.
            if c.margin() > -1e-12 && c.min_abs_x1() < 1e-6 && best.as_ref().is_none_or(|b| c.min_abs_x1() < b.min_abs_x1()) {
                best = Some(c);
            }
        }
    }
    let cycle = best.ok_or(ContinuationError::NoRoot("period-6 orbit on curve b"))?;
    Ok(PeriodSix { tau_l, tau_r, family_endpoint: endpoint, cycle })
}

/// `tau_R` where the cycle of `word` collides with the switching line: a
/// root of its admissibility margin, scanned from `bracket.0`.
pub fn border_collision_point(word: &str, tau_l: f64, deltas: Deltas, bracket: (f64, f64)) -> Result<f64> {
    let it = parse_itinerary(word)?;
    scan_root(|tr| solve_cycle(&deltas.map(tau_l, tr), &it).ok().map(|c| c.margin()), bracket.0, bracket.1, 256, ROOT_TOL)
        .ok_or(ContinuationError::NoRoot("border collision"))
}

/// Border-collision locus of `word` traced over `tau_l` samples.
pub fn bcnf_border_collision_curve(word: &str, deltas: Deltas, tau_ls: &[f64], bracket: (f64, f64)) -> Vec<[f64; 2]> {
    tau_ls.iter().filter_map(|&tl| border_collision_point(word, tl, deltas, bracket).ok().map(|tr| [tl, tr])).collect()
}

/// Curve b traced over `tau_l` samples; samples without an admissible root are skipped.
pub fn bcnf_curve_b_polyline(deltas: Deltas, tau_ls: &[f64], bracket: (f64, f64)) -> Vec<[f64; 2]> {
    tau_ls.iter().filter_map(|&tl| bcnf_curve_b(tl, deltas, bracket).ok().map(|tr| [tl, tr])).collect()
}
