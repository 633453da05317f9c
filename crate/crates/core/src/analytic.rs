//! Closed-form attractor constructions: tent-map bands, the invariant
//! quadrilateral of the coupled skew tent map, and the Lozi trapping region.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{Matrix2, Vector2};
use serde_json::{json, Value};
use thiserror::Error;

use crate::geometry::{ConvexPolygon, GeometryError, Interval, IntervalUnion, Point};
use crate::maps::{MapSpec, Side};

/// Bands below `2^(1/2^12)` are not resolved any further.
pub const MAX_BAND_DEPTH: usize = 12;

/// Relative slack on the `s >= sqrt(2)` test, so that parameters computed as
/// `2^(1/2^k)` land on the documented side of a doubling point.
const DOUBLING_SLACK: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("tent slope must satisfy 1 < s <= 2, got {0}")]
    TentSlope(f64),
    #[error("Lozi parameters ({a}, {b}) lie outside the robust-chaos region")]
    OutsideLoziRegion { a: f64, b: f64 },
    #[error("construction failed: {0}")]
    Construction(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub type Result<T> = std::result::Result<T, AnalyticError>;

/// Attractor of the tent map `T_s` as a union of closed intervals.
///
/// For `s >= sqrt 2` this is `[s(1 - s/2), s/2]`. Below, the bands of `T_s`
/// are the two copies `h(B) ∪ T_s(h(B))` of the bands `B` of `T_{s^2}`, where
/// `h` is the orientation-reversing affine map carrying `[0, 1]` onto the
/// renormalisation interval around the fixed point `s/(1+s)`.
pub fn tent_bands(s: f64) -> Result<IntervalUnion> {
    if !(s > 1.0 && s <= 2.0) {
        return Err(AnalyticError::TentSlope(s));
    }
    let bands = bands_rec(s, 0);
    Ok(IntervalUnion::merged(bands)?)
}

fn bands_rec(s: f64, depth: usize) -> Vec<Interval> {
    if s >= SQRT_2 * (1.0 - DOUBLING_SLACK) || depth >= MAX_BAND_DEPTH {
        return vec![Interval { lo: s * (1.0 - s / 2.0), hi: s / 2.0 }];
    }
    let k = (s - 1.0) / (s + 1.0);
    let h = |y: f64| 0.5 + k * (0.5 - y);
    let mut out = Vec::new();
    for b in bands_rec(s * s, depth + 1) {
        let lo = h(b.hi);
        let hi = h(b.lo);
        out.push(Interval { lo, hi });
        out.push(tent_image(s, lo, hi));
    }
    out
}

/// Image of `[lo, hi]` under `T_s`.
pub fn tent_image(s: f64, lo: f64, hi: f64) -> Interval {
    let t = |x: f64| if x <= 0.5 { s * x } else { s * (1.0 - x) };
    let (a, b) = (t(lo), t(hi));
    let top = if lo <= 0.5 && 0.5 <= hi { s / 2.0 } else { a.max(b) };
    Interval { lo: a.min(b), hi: top }
}

/// Number of bands: `2^k` for `s` in `[2^(1/2^(k+1)), 2^(1/2^k))`.
pub fn tent_band_count(s: f64) -> Result<usize> {
    Ok(tent_bands(s)?.count())
}

/// Gap between the two bands for `s` in `[2^(1/4), sqrt 2)`.
pub fn tent_two_band_gap(s: f64) -> f64 {
    s * (s - 1.0) * (1.0 - s * s / 2.0)
}

/// The slopes `2^(1/2^k)`, `k = 1..=levels`, at which the band count doubles.
pub fn tent_doubling_points(levels: usize) -> Vec<f64> {
    (1..=levels).map(|k| 2f64.powf(1.0 / (1u64 << k) as f64)).collect()
}

/// The invariant quadrilateral of the coupled skew tent map together with a
/// note for each violated hypothesis of its construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrilateral {
    pub polygon: ConvexPolygon,
    pub warnings: Vec<String>,
}

impl Quadrilateral {
    pub fn hypotheses_hold(&self) -> bool {
        self.warnings.is_empty()
    }
}

/// Quadrilateral `O R I R'` with `O = (0,0)`, `I = (1,1)`,
/// `R = (2w, (1 - 2w + 2w^2)/(1 - w))` and `R'` its mirror image.
///
/// The construction is valid for `(1 + sqrt 5)/2 < s < 2` and
/// `0 < w < 1/(2s)`; outside that range the polygon is still returned when it
/// is convex, with warnings attached.
pub fn coupled_quadrilateral(s: f64, omega: f64) -> Result<Quadrilateral> {
    let mut warnings = Vec::new();
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    if !(s > golden && s < 2.0) {
        warnings.push(format!("s = {s} outside ((1+sqrt 5)/2, 2)"));
    }
    if !(omega > 0.0 && omega < 1.0 / (2.0 * s)) {
        warnings.push(format!("omega = {omega} outside (0, 1/(2s)) = (0, {})", 1.0 / (2.0 * s)));
    }
    let r = quad_vertex(omega);
    let verts = vec![[0.0, 0.0], [r[1], r[0]], [1.0, 1.0], r];
    let polygon = ConvexPolygon::new(verts).map_err(|e| AnalyticError::Construction(format!("quadrilateral at omega = {omega}: {e}")))?;
    Ok(Quadrilateral { polygon, warnings })
}

/// The vertex `R` above the diagonal.
pub fn quad_vertex(omega: f64) -> [f64; 2] {
    [2.0 * omega, (1.0 - 2.0 * omega + 2.0 * omega * omega) / (1.0 - omega)]
}

/// Skew tent Lyapunov exponent `ln s - (1 - 1/s) ln(s - 1)`.
pub fn skew_tent_gamma(s: f64) -> f64 {
    s.ln() - (1.0 - 1.0 / s) * (s - 1.0).ln()
}

/// Coupling at which the transverse exponent `gamma + ln(1 - 2w)` vanishes.
pub fn blowout_coupling(s: f64) -> f64 {
    0.5 * (1.0 - (-skew_tent_gamma(s)).exp())
}

/// One inequality of the robust-chaos region and its margin (positive when
/// satisfied).
#[derive(Debug, Clone, PartialEq)]
pub struct Inequality {
    pub name: &'static str,
    pub margin: f64,
}

impl Inequality {
    pub fn holds(&self) -> bool {
        self.margin > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoziRegionReport {
    pub holds: bool,
    pub inequalities: Vec<Inequality>,
}

impl LoziRegionReport {
    pub fn to_json(&self) -> Value {
        json!({
            "holds": self.holds,
            "inequalities": self.inequalities.iter().map(|i| json!({
                "name": i.name, "margin": i.margin, "holds": i.holds()
            })).collect::<Vec<_>>(),
        })
    }
}

/// Checks `0 < b < 1`, `0 < a < (4-b)/2`, `a > (b+2)/sqrt 2` and
/// `b < (a^2-1)/(2a+1)`. Double inequalities report the smaller margin.
pub fn lozi_region_check(a: f64, b: f64) -> LoziRegionReport {
    let inequalities = vec![
        Inequality { name: "0 < b < 1", margin: b.min(1.0 - b) },
        Inequality { name: "0 < a < (4-b)/2", margin: a.min((4.0 - b) / 2.0 - a) },
        Inequality { name: "a > (b+2)/sqrt(2)", margin: a - (b + 2.0) / SQRT_2 },
        Inequality { name: "b < (a^2-1)/(2a+1)", margin: (a * a - 1.0) / (2.0 * a + 1.0) - b },
    ];
    let holds = inequalities.iter().all(|i| i.holds() && i.margin.is_finite());
    LoziRegionReport { holds, inequalities }
}

/// The trapping construction for the Lozi map in its robust-chaos region.
#[derive(Debug, Clone, PartialEq)]
pub struct LoziGeometry {
    pub a: f64,
    pub b: f64,
    /// Saddle fixed point in `x1 > 0`.
    pub x: [f64; 2],
    /// Unstable line through `x` meets the `x1`-axis.
    pub z: [f64; 2],
    pub lz: [f64; 2],
    pub l2z: [f64; 2],
    /// Stable line through `x` meets the segment `z l2z`.
    pub p: [f64; 2],
    pub lambda_s: f64,
    pub lambda_u: f64,
    /// Eigenvectors `(1, lambda + a)`, unnormalised.
    pub v_s: [f64; 2],
    pub v_u: [f64; 2],
    /// Filled triangle `x z p`.
    pub h0: ConvexPolygon,
    /// Forward-invariant filled triangle `z L(z) L^2(z)`.
    pub outer: ConvexPolygon,
    /// Area of `outer`.
    pub k: f64,
}

impl LoziGeometry {
    pub fn map(&self) -> MapSpec {
        MapSpec::Lozi { a: self.a, b: self.b }
    }

    pub fn distance_x_p(&self) -> f64 {
        Point::raw(self.x, crate::geometry::Dim::Two).distance(&Point::raw(self.p, crate::geometry::Dim::Two))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "a": self.a, "b": self.b,
            "X": self.x, "Z": self.z, "LZ": self.lz, "L2Z": self.l2z, "P": self.p,
            "lambda_s": self.lambda_s, "lambda_u": self.lambda_u,
            "v_s": self.v_s, "v_u": self.v_u,
            "H0": self.h0.vertices(), "outer": self.outer.vertices(),
            "K": self.k, "d_XP": self.distance_x_p(),
        })
    }
}

/// Builds `X`, `Z`, `P`, the triangles `H0 = XZP` and `Z L(Z) L^2(Z)`, and
/// the eigen-data of `X`. Fails rather than extrapolating if `P` falls off
/// the segment `Z L^2(Z)`.
pub fn lozi_geometry(a: f64, b: f64) -> Result<LoziGeometry> {
    if !lozi_region_check(a, b).holds {
        return Err(AnalyticError::OutsideLoziRegion { a, b });
    }
    let map = MapSpec::Lozi { a, b };
    let x1 = 1.0 / (1.0 + a - b);
    let x = [x1, b * x1];
    let disc = (a * a + 4.0 * b).sqrt();
    let lambda_s = (-a + disc) / 2.0;
    let lambda_u = (-a - disc) / 2.0;
    let v_s = [1.0, lambda_s + a];
    let v_u = [1.0, lambda_u + a];
    let t = -x[1] / v_u[1];
    let z = [x[0] + t * v_u[0], 0.0];
    let lz = map.step(z);
    let l2z = map.step(lz);
    // Solve x + u v_s = z + sigma (l2z - z).
    let m = Matrix2::new(v_s[0], z[0] - l2z[0], v_s[1], z[1] - l2z[1]);
    let rhs = Vector2::new(z[0] - x[0], z[1] - x[1]);
    let sol = m.try_inverse().map(|inv| inv * rhs).ok_or_else(|| AnalyticError::Construction("stable line parallel to Z L^2(Z)".into()))?;
    let sigma = sol[1];
    if !(0.0..=1.0).contains(&sigma) {
        return Err(AnalyticError::Construction(format!("stable line meets line Z L^2(Z) outside the segment (parameter {sigma})")));
    }
    let p = [z[0] + sigma * (l2z[0] - z[0]), z[1] + sigma * (l2z[1] - z[1])];
    let h0 = ConvexPolygon::from_unordered(vec![x, z, p]).map_err(|e| AnalyticError::Construction(format!("triangle XZP: {e}")))?;
    if h0.vertices().iter().any(|v| v[0] <= 0.0) {
        return Err(AnalyticError::Construction("triangle XZP leaves x1 > 0".into()));
    }
    let outer =
        ConvexPolygon::from_unordered(vec![z, lz, l2z]).map_err(|e| AnalyticError::Construction(format!("triangle Z L(Z) L^2(Z): {e}")))?;
    let k = outer.area();
    Ok(LoziGeometry { a, b, x, z, lz, l2z, p, lambda_s, lambda_u, v_s, v_u, h0, outer, k })
}

/// `sqrt(K/pi) b^(n/2) + lambda_s^n d(X, P)`.
pub fn lozi_bound(g: &LoziGeometry, n: usize) -> f64 {
    let n = n as f64;
    (g.k / PI).sqrt() * g.b.powf(n / 2.0) + g.lambda_s.powf(n) * g.distance_x_p()
}

/// Upper bound on the distance from `L^m(y)` to the attractor, for `y` in
/// `H0`, obtained by sliding `y` along its stable direction onto the edges of
/// `H0`.
///
/// Edges `XZ` and `ZP` lie in the unstable manifold of `X`, hence in the
/// attractor; edge `XP` lies in the stable manifold, whose `m`-th image is
/// within `lambda_s^m |w - X|` of `X`. The stable direction at `y` is found by
/// pulling a vector back along the computed orbit, and its contraction is
/// accumulated from the same backward pass, so the estimate keeps relative
/// precision far below the round-off in the orbit itself. Returns `None` when
/// the slid segment would cross the switching line within `m` steps.
pub fn lozi_shadow_distance(g: &LoziGeometry, y: [f64; 2], m: usize) -> Option<f64> {
    let map = g.map();
    let mut orbit = Vec::with_capacity(m + 1);
    let mut x = y;
    orbit.push(x);
    let mut inverses = Vec::with_capacity(m);
    let mut product_inv = Matrix2::identity();
    for _ in 0..m {
        let side = if x[0] <= 0.0 { Side::Left } else { Side::Right };
        let inv = map.affine_piece(side).ok()?.0.try_inverse()?;
        product_inv *= inv;
        inverses.push(inv);
        x = map.step(x);
        if !(x[0].is_finite() && x[1].is_finite()) {
            return None;
        }
        orbit.push(x);
    }
    // Start from the direction the inverse product expands most, i.e. the
    // direction at L^m(y) whose preimage is contracted most.
    let svd = product_inv.svd(false, true);
    let v_t = svd.v_t?;
    let k = if svd.singular_values[0] >= svd.singular_values[1] { 0 } else { 1 };
    let mut u = Vector2::new(v_t[(k, 0)], v_t[(k, 1)]);
    // dirs[j] is the unit image at orbit[j] of the slide direction at y;
    // scale[j] is the log of its length.
    let mut dirs = vec![Vector2::zeros(); m + 1];
    let mut log_growth = vec![0.0f64; m];
    dirs[m] = u;
    for j in (0..m).rev() {
        let w = inverses[j] * u;
        let n = w.norm();
        log_growth[j] = n.ln();
        u = w / n;
        dirs[j] = u;
    }
    let mut log_scale = vec![0.0f64; m + 1];
    for j in 0..m {
        log_scale[j + 1] = log_scale[j] - log_growth[j];
    }
    let e = dirs[0];
    let mut best: Option<f64> = None;
    for (t, edge) in triangle_hits(g, y, [e[0], e[1]]) {
        // L^j is affine on the slid segment while both ends share a side.
        let ok = (0..m).all(|j| {
            let end = orbit[j][0] + t * log_scale[j].exp() * dirs[j][0];
            (orbit[j][0] <= 0.0) == (end <= 0.0)
        });
        if !ok {
            continue;
        }
        let mut d = t.abs() * log_scale[m].exp();
        if edge == Edge::Xp {
            let w = [y[0] + t * e[0], y[1] + t * e[1]];
            let dw = ((w[0] - g.x[0]).powi(2) + (w[1] - g.x[1]).powi(2)).sqrt();
            d += g.lambda_s.powi(m as i32) * dw;
        }
        best = Some(best.map_or(d, |b: f64| b.min(d)));
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Edge {
    Xz,
    Zp,
    Xp,
}

/// Signed parameters `t` with `y + t e` on an edge of `H0`.
fn triangle_hits(g: &LoziGeometry, y: [f64; 2], e: [f64; 2]) -> Vec<(f64, Edge)> {
    let edges = [(g.x, g.z, Edge::Xz), (g.z, g.p, Edge::Zp), (g.x, g.p, Edge::Xp)];
    let mut out = Vec::new();
    for (a, b, tag) in edges {
        let m = Matrix2::new(e[0], a[0] - b[0], e[1], a[1] - b[1]);
        if let Some(inv) = m.try_inverse() {
            let sol = inv * Vector2::new(a[0] - y[0], a[1] - y[1]);
            if (-1e-12..=1.0 + 1e-12).contains(&sol[1]) {
                out.push((sol[0], tag));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Independent band oracle: for `n = 2^k` bands, the band containing the
    /// turning point is the hull of `T^n(c)` and `T^(2n)(c)` images, and the
    /// others are its interval images.
    fn orbit_bands(s: f64, n: usize) -> Vec<Interval> {
        let t = |x: f64| if x <= 0.5 { s * x } else { s * (1.0 - x) };
        let it = |mut x: f64, k: usize| {
            for _ in 0..k {
                x = t(x);
            }
            x
        };
        let (p, q) = (it(0.5, n), it(0.5, 2 * n));
        let mut band = Interval { lo: p.min(q), hi: p.max(q) };
        let mut out = Vec::new();
        for _ in 0..n {
            band = tent_image(s, band.lo, band.hi);
            out.push(band);
        }
        out.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        out
    }

    #[test]
    fn single_interval_above_sqrt2() {
        // 1.6 is not representable; the correctly rounded s(1 - s/2) sits one
        // ulp below the double nearest 0.32.
        let u = tent_bands(1.6).unwrap();
        assert_eq!(u.count(), 1);
        assert_abs_diff_eq!(u.intervals()[0].lo, 0.32, epsilon = 6e-17);
        assert_eq!(u.intervals()[0].hi, 0.8);
        assert_eq!(tent_bands(2.0).unwrap().intervals(), &[Interval { lo: 0.0, hi: 1.0 }]);
        assert!(tent_bands(1.0).is_err());
        assert!(tent_bands(2.1).is_err());
    }

    #[test]
    fn two_bands_at_1_3() {
        let u = tent_bands(1.3).unwrap();
        let iv = u.intervals();
        assert_eq!(iv.len(), 2);
        assert_abs_diff_eq!(iv[0].lo, 0.455, epsilon = 1e-12);
        assert_abs_diff_eq!(iv[0].hi, 0.53105, epsilon = 1e-12);
        assert_abs_diff_eq!(iv[1].lo, 0.5915, epsilon = 1e-12);
        assert_abs_diff_eq!(iv[1].hi, 0.65, epsilon = 1e-12);
        assert_abs_diff_eq!(u.gaps()[0], tent_two_band_gap(1.3), epsilon = 1e-12);
    }

    #[test]
    fn recursion_matches_orbit_oracle() {
        for &s in &[1.3, 1.2, 1.12, 1.07, 1.03] {
            let u = tent_bands(s).unwrap();
            let oracle = orbit_bands(s, u.count());
            for (a, b) in u.intervals().iter().zip(&oracle) {
                assert_abs_diff_eq!(a.lo, b.lo, epsilon = 1e-10);
                assert_abs_diff_eq!(a.hi, b.hi, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn counts_double_at_doubling_points() {
        let pts = tent_doubling_points(4);
        for (k, &p) in pts.iter().enumerate() {
            assert_eq!(tent_band_count(p).unwrap(), 1 << k);
            assert_eq!(tent_band_count(p * (1.0 - 1e-9)).unwrap(), 2 << k);
        }
    }

    #[test]
    fn quadrilateral_vertices() {
        let q = coupled_quadrilateral(1.8, 0.2).unwrap();
        assert!(q.hypotheses_hold());
        let v = q.polygon.vertices();
        assert_abs_diff_eq!(v[3][0], 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(v[3][1], 0.85, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1][0], 0.85, epsilon = 1e-15);
        let warn = coupled_quadrilateral(1.5, 0.2).unwrap();
        assert_eq!(warn.warnings.len(), 1);
    }

    #[test]
    fn gamma_and_blowout() {
        assert_abs_diff_eq!(skew_tent_gamma(1.8), 0.686962, epsilon = 1e-6);
        let wb = blowout_coupling(1.8);
        assert_abs_diff_eq!(skew_tent_gamma(1.8) + (1.0 - 2.0 * wb).ln(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn lozi_region_margins() {
        assert!(lozi_region_check(1.7, 0.3).holds);
        let r = lozi_region_check(1.7, 0.5);
        assert!(!r.holds);
        assert!(!r.inequalities[2].holds());
        assert!(!lozi_region_check(0.0, 0.5).holds);
        assert_abs_diff_eq!(lozi_region_check(1.7, 0.3).inequalities[3].margin, 1.89 / 4.4 - 0.3, epsilon = 1e-15);
    }

    #[test]
    fn lozi_construction() {
        let g = lozi_geometry(1.7, 0.3).unwrap();
        assert_abs_diff_eq!(g.x[0], 1.0 / 2.4, epsilon = 1e-15);
        assert_abs_diff_eq!(g.lambda_s, 0.161187, epsilon = 1e-6);
        assert_abs_diff_eq!(g.lambda_u, -1.861187, epsilon = 1e-6);
        let fx = g.map().step(g.x);
        assert!((fx[0] - g.x[0]).abs() < 1e-12 && (fx[1] - g.x[1]).abs() < 1e-12);
        assert_abs_diff_eq!(g.z[0], 1.1922, epsilon = 1e-4);
        assert!(lozi_bound(&g, 0) > lozi_bound(&g, 1));
        assert!(lozi_geometry(1.7, 0.5).is_err());
    }

    #[test]
    fn shadow_distance_is_small_and_decreasing() {
        let g = lozi_geometry(1.7, 0.3).unwrap();
        let c = [(g.x[0] + g.z[0] + g.p[0]) / 3.0, (g.x[1] + g.z[1] + g.p[1]) / 3.0];
        let d5 = lozi_shadow_distance(&g, c, 5).unwrap();
        let d10 = lozi_shadow_distance(&g, c, 10).unwrap();
        assert!(d10 < d5);
        assert!(d5 <= lozi_bound(&g, 5));
    }
}
