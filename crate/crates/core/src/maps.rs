//! The map families: tent, skew tent, generalised skew tent, coupled skew
//! tent, logistic, Lozi and the two-dimensional border-collision normal form.
//!
//! Every family except the logistic map is piecewise affine. Points exactly on
//! a switching surface are assigned to the lower (left) branch; both branch
//! formulas agree there, so the choice only matters for Jacobians and symbols.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::geometry::{Dim, Point};

/// Iterates whose sup-norm exceeds this are declared escaped.
pub const DEFAULT_ESCAPE_RADIUS: f64 = 1e6;

/// Slack allowed when checking that a point lies in an interval domain.
const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("invalid parameters for {family}: {reason}")]
    InvalidParameters { family: Family, reason: String },
    #[error("point {0:?} lies outside the domain of {1}")]
    Domain(Vec<f64>, Family),
    #[error("point is {got}-D but {family} acts on {want}-D points")]
    Dimension { family: Family, got: usize, want: usize },
    #[error("point lies on a switching boundary; choose a side explicitly")]
    BoundaryPoint,
    #[error("unknown map family {0:?}")]
    UnknownFamily(String),
    #[error("{family} has no parameter {name:?}")]
    UnknownParameter { family: Family, name: String },
    #[error("missing parameter {name:?} for {family}")]
    MissingParameter { family: Family, name: String },
    #[error("{0} is not piecewise affine")]
    NotAffine(Family),
}

pub type Result<T> = std::result::Result<T, MapError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Tent,
    SkewTent,
    GeneralSkewTent,
    CoupledSkewTent,
    Logistic,
    Lozi,
    Bcnf,
}

impl Family {
    pub const ALL: [Family; 7] =
        [Family::Tent, Family::SkewTent, Family::GeneralSkewTent, Family::CoupledSkewTent, Family::Logistic, Family::Lozi, Family::Bcnf];

    pub fn name(self) -> &'static str {
        match self {
            Family::Tent => "Tent",
            Family::SkewTent => "SkewTent",
            Family::GeneralSkewTent => "GeneralSkewTent",
            Family::CoupledSkewTent => "CoupledSkewTent",
            Family::Logistic => "Logistic",
            Family::Lozi => "Lozi",
            Family::Bcnf => "BCNF",
        }
    }

    /// Parameter names in canonical order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::Tent | Family::SkewTent => &["s"],
            Family::GeneralSkewTent => &["s", "t"],
            Family::CoupledSkewTent => &["s", "omega"],
            Family::Logistic => &["r"],
            Family::Lozi => &["a", "b"],
            Family::Bcnf => &["tau_L", "delta_L", "tau_R", "delta_R"],
        }
    }

    pub fn dim(self) -> Dim {
        match self {
            Family::Tent | Family::SkewTent | Family::GeneralSkewTent | Family::Logistic => Dim::One,
            _ => Dim::Two,
        }
    }

    pub fn is_unimodal(self) -> bool {
        self.dim() == Dim::One
    }

    /// Builds and validates a map from parameters in canonical order.
    pub fn with_params(self, p: &[f64]) -> Result<MapSpec> {
        let want = self.param_names().len();
        if p.len() != want {
            return Err(MapError::InvalidParameters { family: self, reason: format!("expected {want} parameters, got {}", p.len()) });
        }
        let m = match self {
            Family::Tent => MapSpec::Tent { s: p[0] },
            Family::SkewTent => MapSpec::SkewTent { s: p[0] },
            Family::GeneralSkewTent => MapSpec::GeneralSkewTent { s: p[0], t: p[1] },
            Family::CoupledSkewTent => MapSpec::CoupledSkewTent { s: p[0], omega: p[1] },
            Family::Logistic => MapSpec::Logistic { r: p[0] },
            Family::Lozi => MapSpec::Lozi { a: p[0], b: p[1] },
            Family::Bcnf => MapSpec::Bcnf { tau_l: p[0], delta_l: p[1], tau_r: p[2], delta_r: p[3] },
        };
        m.validate()?;
        Ok(m)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = MapError;

    /// Case-insensitive; underscores and hyphens are ignored.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| *c != '_' && *c != '-').collect::<String>().to_lowercase();
        Family::ALL.into_iter().find(|f| f.name().to_lowercase() == key).ok_or_else(|| MapError::UnknownFamily(s.to_string()))
    }
}

/// Which affine piece a point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// A map family with concrete parameters. Construct through
/// [`Family::with_params`] or deserialisation to get validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapSpec {
    Tent { s: f64 },
    SkewTent { s: f64 },
    GeneralSkewTent { s: f64, t: f64 },
    CoupledSkewTent { s: f64, omega: f64 },
    Logistic { r: f64 },
    Lozi { a: f64, b: f64 },
    Bcnf { tau_l: f64, delta_l: f64, tau_r: f64, delta_r: f64 },
}

impl MapSpec {
    pub fn tent(s: f64) -> Result<Self> {
        Family::Tent.with_params(&[s])
    }

    pub fn skew_tent(s: f64) -> Result<Self> {
        Family::SkewTent.with_params(&[s])
    }

    pub fn general_skew_tent(s: f64, t: f64) -> Result<Self> {
        Family::GeneralSkewTent.with_params(&[s, t])
    }

    pub fn coupled_skew_tent(s: f64, omega: f64) -> Result<Self> {
        Family::CoupledSkewTent.with_params(&[s, omega])
    }

    pub fn logistic(r: f64) -> Result<Self> {
        Family::Logistic.with_params(&[r])
    }

    pub fn lozi(a: f64, b: f64) -> Result<Self> {
        Family::Lozi.with_params(&[a, b])
    }

    pub fn bcnf(tau_l: f64, delta_l: f64, tau_r: f64, delta_r: f64) -> Result<Self> {
        Family::Bcnf.with_params(&[tau_l, delta_l, tau_r, delta_r])
    }

    pub fn family(&self) -> Family {
        match self {
            MapSpec::Tent { .. } => Family::Tent,
            MapSpec::SkewTent { .. } => Family::SkewTent,
            MapSpec::GeneralSkewTent { .. } => Family::GeneralSkewTent,
            MapSpec::CoupledSkewTent { .. } => Family::CoupledSkewTent,
            MapSpec::Logistic { .. } => Family::Logistic,
            MapSpec::Lozi { .. } => Family::Lozi,
            MapSpec::Bcnf { .. } => Family::Bcnf,
        }
    }

    pub fn dim(&self) -> Dim {
        self.family().dim()
    }

    /// Parameters in canonical order (see [`Family::param_names`]).
    pub fn params(&self) -> Vec<f64> {
        match *self {
            MapSpec::Tent { s } | MapSpec::SkewTent { s } => vec![s],
            MapSpec::GeneralSkewTent { s, t } => vec![s, t],
            MapSpec::CoupledSkewTent { s, omega } => vec![s, omega],
            MapSpec::Logistic { r } => vec![r],
            MapSpec::Lozi { a, b } => vec![a, b],
            MapSpec::Bcnf { tau_l, delta_l, tau_r, delta_r } => vec![tau_l, delta_l, tau_r, delta_r],
        }
    }

    pub fn param(&self, name: &str) -> Result<f64> {
        let idx = self.param_index(name)?;
        Ok(self.params()[idx])
    }

    /// Returns a copy with one parameter replaced, validated.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self> {
        let idx = self.param_index(name)?;
        let mut p = self.params();
        p[idx] = value;
        self.family().with_params(&p)
    }

    fn param_index(&self, name: &str) -> Result<usize> {
        let fam = self.family();
        let canon = canonical_param_name(name);
        fam.param_names().iter().position(|n| *n == canon).ok_or_else(|| MapError::UnknownParameter { family: fam, name: name.to_string() })
    }

    pub fn validate(&self) -> Result<()> {
        let fam = self.family();
        let bad = |reason: &str| Err(MapError::InvalidParameters { family: fam, reason: reason.to_string() });
        if self.params().iter().any(|v| !v.is_finite()) {
            return bad("parameters must be finite");
        }
        match *self {
            MapSpec::Tent { s } if !(s > 1.0 && s <= 2.0) => bad("need 1 < s <= 2"),
            MapSpec::SkewTent { s } if !(s > 1.0 && s < 2.0) => bad("need 1 < s < 2"),
            MapSpec::GeneralSkewTent { s, t } if !(s > 1.0 && t > 0.0 && t < 1.0 / s) => bad("need s > 1 and 0 < t < 1/s"),
            MapSpec::CoupledSkewTent { s, omega } if !(s > 1.0 && s < 2.0 && (0.0..=0.5).contains(&omega)) => {
                bad("need 1 < s < 2 and 0 <= omega <= 1/2")
            }
            MapSpec::Logistic { r } if !(r > 0.0 && r <= 4.0) => bad("need 0 < r <= 4"),
            _ => Ok(()),
        }
    }

    /// Turning point of a 1-D family.
    pub fn critical_point(&self) -> Option<f64> {
        match *self {
            MapSpec::Tent { .. } | MapSpec::Logistic { .. } => Some(0.5),
            MapSpec::SkewTent { s } => Some(1.0 / s),
            MapSpec::GeneralSkewTent { t, .. } => Some(t),
            _ => None,
        }
    }

    /// Whether the phase space is the unit interval or square.
    pub fn has_unit_domain(&self) -> bool {
        !matches!(self, MapSpec::Lozi { .. } | MapSpec::Bcnf { .. })
    }

    /// Image of `x`, checking dimension and domain.
    pub fn evaluate(&self, x: &Point) -> Result<Point> {
        self.check_point(x)?;
        let y = self.step(x.array());
        Ok(Point::raw(y, self.dim()))
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(MapError::Dimension { family: self.family(), got: x.dim().len(), want: self.dim().len() });
        }
        if self.has_unit_domain() && x.coords().iter().any(|&c| !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&c)) {
            return Err(MapError::Domain(x.coords().to_vec(), self.family()));
        }
        Ok(())
    }

    /// Unchecked image of raw coordinates; 1-D maps read and write `x[0]`.
    #[inline]
    pub fn step(&self, x: [f64; 2]) -> [f64; 2] {
        match *self {
            MapSpec::Tent { .. } | MapSpec::SkewTent { .. } | MapSpec::GeneralSkewTent { .. } => [self.unimodal(x[0]), 0.0],
            MapSpec::Logistic { r } => [r * x[0] * (1.0 - x[0]), 0.0],
            MapSpec::CoupledSkewTent { s, omega } => {
                let u = skew_tent(s, x[0]);
                let v = skew_tent(s, x[1]);
                // Same operand order in both rows keeps the diagonal exactly invariant.
                [(1.0 - omega) * u + omega * v, omega * u + (1.0 - omega) * v]
            }
            MapSpec::Lozi { a, b } => [1.0 - a * x[0].abs() + x[1], b * x[0]],
            MapSpec::Bcnf { tau_l, delta_l, tau_r, delta_r } => {
                let (tau, delta) = if x[0] <= 0.0 { (tau_l, delta_l) } else { (tau_r, delta_r) };
                [tau * x[0] + x[1] + 1.0, -delta * x[0]]
            }
        }
    }

    #[inline]
    fn unimodal(&self, z: f64) -> f64 {
        match *self {
            MapSpec::Tent { s } => {
                if z <= 0.5 {
                    s * z
                } else {
                    s * (1.0 - z)
                }
            }
            MapSpec::SkewTent { s } => skew_tent(s, z),
            MapSpec::GeneralSkewTent { s, t } => {
                if z <= t {
                    s * z
                } else {
                    s * t / (1.0 - t) * (1.0 - z)
                }
            }
            MapSpec::Logistic { r } => r * z * (1.0 - z),
            _ => unreachable!("not a 1-D family"),
        }
    }

    /// Slope of a 1-D family on the given side of its turning point.
    fn unimodal_slope(&self, z: f64, side: Side) -> f64 {
        match (*self, side) {
            (MapSpec::Tent { s }, Side::Left) => s,
            (MapSpec::Tent { s }, Side::Right) => -s,
            (MapSpec::SkewTent { s }, Side::Left) => s,
            (MapSpec::SkewTent { s }, Side::Right) => -s / (s - 1.0),
            (MapSpec::GeneralSkewTent { s, .. }, Side::Left) => s,
            (MapSpec::GeneralSkewTent { s, t }, Side::Right) => -s * t / (1.0 - t),
            (MapSpec::Logistic { r }, _) => r * (1.0 - 2.0 * z),
            _ => unreachable!("not a 1-D family"),
        }
    }

    /// Switching coordinates: the turning point in 1-D, 1/s for each
    /// coordinate of the coupled map, `x1 = 0` for Lozi and BCNF.
    fn side_of(&self, c: f64, threshold: f64) -> Option<Side> {
        if c < threshold {
            Some(Side::Left)
        } else if c > threshold {
            Some(Side::Right)
        } else {
            None
        }
    }

    fn threshold(&self) -> f64 {
        match *self {
            MapSpec::CoupledSkewTent { s, .. } => 1.0 / s,
            MapSpec::Lozi { .. } | MapSpec::Bcnf { .. } => 0.0,
            _ => self.critical_point().expect("1-D"),
        }
    }

    /// Branch sides of a point under the boundary convention (left wins ties).
    /// The second entry is only meaningful for the coupled map.
    #[inline]
    pub fn sides(&self, x: [f64; 2]) -> [Side; 2] {
        let th = self.threshold();
        let s = |c: f64| if c <= th { Side::Left } else { Side::Right };
        match self {
            MapSpec::CoupledSkewTent { .. } => [s(x[0]), s(x[1])],
            _ => [s(x[0]), Side::Left],
        }
    }

    /// Jacobian at `x`; errors on a switching boundary. The logistic map is
    /// smooth and never errors. 1-D Jacobians occupy the `[0,0]` entry.
    pub fn jacobian(&self, x: &Point) -> Result<Matrix2<f64>> {
        self.check_point(x)?;
        let c = x.array();
        if matches!(self, MapSpec::Logistic { .. }) {
            return Ok(self.jacobian_sides(c, [Side::Left, Side::Left]));
        }
        let th = self.threshold();
        let s0 = self.side_of(c[0], th).ok_or(MapError::BoundaryPoint)?;
        let s1 = match self {
            MapSpec::CoupledSkewTent { .. } => self.side_of(c[1], th).ok_or(MapError::BoundaryPoint)?,
            _ => Side::Left,
        };
        Ok(self.jacobian_sides(c, [s0, s1]))
    }

    /// Jacobian using the boundary convention instead of erroring.
    #[inline]
    pub fn jacobian_conv(&self, x: [f64; 2]) -> Matrix2<f64> {
        self.jacobian_sides(x, self.sides(x))
    }

    /// Jacobian of the branch selected by `sides`.
    pub fn jacobian_sides(&self, x: [f64; 2], sides: [Side; 2]) -> Matrix2<f64> {
        match *self {
            MapSpec::Tent { .. } | MapSpec::SkewTent { .. } | MapSpec::GeneralSkewTent { .. } | MapSpec::Logistic { .. } => {
                Matrix2::new(self.unimodal_slope(x[0], sides[0]), 0.0, 0.0, 0.0)
            }
            MapSpec::CoupledSkewTent { s, omega } => {
                let d = |side| match side {
                    Side::Left => s,
                    Side::Right => -s / (s - 1.0),
                };
                let (d1, d2) = (d(sides[0]), d(sides[1]));
                Matrix2::new((1.0 - omega) * d1, omega * d2, omega * d1, (1.0 - omega) * d2)
            }
            MapSpec::Lozi { .. } | MapSpec::Bcnf { .. } => self.affine_piece(sides[0]).expect("affine").0,
        }
    }

    /// The affine piece `x -> A x + c` of Lozi or BCNF on one side of `x1 = 0`.
    pub fn affine_piece(&self, side: Side) -> Result<(Matrix2<f64>, Vector2<f64>)> {
        let c = Vector2::new(1.0, 0.0);
        match (*self, side) {
            (MapSpec::Lozi { a, b }, Side::Left) => Ok((Matrix2::new(a, 1.0, b, 0.0), c)),
            (MapSpec::Lozi { a, b }, Side::Right) => Ok((Matrix2::new(-a, 1.0, b, 0.0), c)),
            (MapSpec::Bcnf { tau_l, delta_l, .. }, Side::Left) => Ok((Matrix2::new(tau_l, 1.0, -delta_l, 0.0), c)),
            (MapSpec::Bcnf { tau_r, delta_r, .. }, Side::Right) => Ok((Matrix2::new(tau_r, 1.0, -delta_r, 0.0), c)),
            _ => Err(MapError::NotAffine(self.family())),
        }
    }

    /// The equivalent BCNF of a Lozi map (`tau = ±a`, `delta = -b`).
    pub fn as_bcnf(&self) -> Option<MapSpec> {
        match *self {
            MapSpec::Lozi { a, b } => Some(MapSpec::Bcnf { tau_l: a, delta_l: -b, tau_r: -a, delta_r: -b }),
            MapSpec::Bcnf { .. } => Some(*self),
            _ => None,
        }
    }

    /// Orbit with the default escape radius.
    pub fn orbit(&self, x0: &Point, n_transient: usize, n_keep: usize) -> Result<Orbit> {
        self.orbit_with(x0, n_transient, n_keep, DEFAULT_ESCAPE_RADIUS)
    }

    /// Iterates `x0`, discards `n_transient` images and keeps the next `n_keep`.
    pub fn orbit_with(&self, x0: &Point, n_transient: usize, n_keep: usize, escape_radius: f64) -> Result<Orbit> {
        self.check_point(x0)?;
        Ok(self.orbit_raw(x0.array(), n_transient, n_keep, escape_radius))
    }

    /// Unchecked orbit of raw coordinates.
    pub fn orbit_raw(&self, mut x: [f64; 2], n_transient: usize, n_keep: usize, escape_radius: f64) -> Orbit {
        let mut points = Vec::with_capacity(n_keep);
        for k in 1..=n_transient + n_keep {
            x = self.step(x);
            if escaped(&x, escape_radius) {
                return Orbit { points, escaped_at: Some(k) };
            }
            if k > n_transient {
                points.push(x);
            }
        }
        Orbit { points, escaped_at: None }
    }

    /// Iterates `n` times in place; returns the escape index if any.
    #[inline]
    pub fn iterate(&self, x: &mut [f64; 2], n: usize, escape_radius: f64) -> Option<usize> {
        for k in 1..=n {
            *x = self.step(*x);
            if escaped(x, escape_radius) {
                return Some(k);
            }
        }
        None
    }
}

#[inline]
pub fn escaped(x: &[f64; 2], radius: f64) -> bool {
    !(x[0].abs() <= radius && x[1].abs() <= radius)
}

#[inline]
fn skew_tent(s: f64, z: f64) -> f64 {
    if z <= 1.0 / s {
        s * z
    } else {
        s / (s - 1.0) * (1.0 - z)
    }
}

fn canonical_param_name(name: &str) -> &str {
    match name {
        "ω" | "w" => "omega",
        "tau_l" | "tauL" | "τ_L" => "tau_L",
        "tau_r" | "tauR" | "τ_R" => "tau_R",
        "delta_l" | "deltaL" | "δ_L" => "delta_L",
        "delta_r" | "deltaR" | "δ_R" => "delta_R",
        "mu" | "μ" => "r",
        other => other,
    }
}

/// Kept iterates of an orbit; on escape, the iterates kept before it.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub points: Vec<[f64; 2]>,
    /// Iteration index (1-based) at which the sup-norm first exceeded the radius.
    pub escaped_at: Option<usize>,
}

impl Orbit {
    pub fn escaped(&self) -> bool {
        self.escaped_at.is_some()
    }
}

#[derive(Serialize, Deserialize)]
struct MapSpecRepr {
    family: String,
    params: BTreeMap<String, f64>,
}

impl Serialize for MapSpec {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let fam = self.family();
        let params = fam.param_names().iter().map(|n| n.to_string()).zip(self.params()).collect();
        MapSpecRepr { family: fam.name().to_string(), params }.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for MapSpec {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let repr = MapSpecRepr::deserialize(de)?;
        MapSpec::from_named(&repr.family, &repr.params).map_err(serde::de::Error::custom)
    }
}

impl MapSpec {
    /// Builds a map from a family name and named parameters.
    pub fn from_named(family: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let fam: Family = family.parse()?;
        let mut values = vec![None; fam.param_names().len()];
        for (k, v) in params {
            let canon = canonical_param_name(k);
            let idx = fam
                .param_names()
                .iter()
                .position(|n| *n == canon)
                .ok_or_else(|| MapError::UnknownParameter { family: fam, name: k.clone() })?;
            values[idx] = Some(*v);
        }
        let p: Vec<f64> = values
            .iter()
            .zip(fam.param_names())
            .map(|(v, n)| v.ok_or_else(|| MapError::MissingParameter { family: fam, name: n.to_string() }))
            .collect::<Result<_>>()?;
        fam.with_params(&p)
    }
}

impl fmt::Display for MapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.family())?;
        for (i, (n, v)) in self.family().param_names().iter().zip(self.params()).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{n}={v}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1(x: f64) -> Point {
        Point::new1(x).unwrap()
    }

    fn p2(x: f64, y: f64) -> Point {
        Point::new2(x, y).unwrap()
    }

    #[test]
    fn tent_peak_and_slopes() {
        let t = MapSpec::tent(2.0).unwrap();
        assert_eq!(t.evaluate(&p1(0.5)).unwrap().x(), 1.0);
        let t = MapSpec::tent(1.7).unwrap();
        assert_eq!(t.jacobian(&p1(0.3)).unwrap()[(0, 0)], 1.7);
        assert_eq!(t.jacobian(&p1(0.8)).unwrap()[(0, 0)], -1.7);
        assert_eq!(t.jacobian(&p1(0.5)), Err(MapError::BoundaryPoint));
    }

    #[test]
    fn lozi_origin_and_determinant() {
        let l = MapSpec::lozi(1.7, 0.3).unwrap();
        assert_eq!(l.evaluate(&p2(0.0, 0.0)).unwrap().array(), [1.0, 0.0]);
        let j = l.jacobian(&p2(0.4, 0.1)).unwrap();
        assert_eq!(j, Matrix2::new(-1.7, 1.0, 0.3, 0.0));
        assert!((j.determinant().abs() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn bcnf_continuity_on_switching_line() {
        let m = MapSpec::bcnf(0.8, 0.3, -1.8, 0.3).unwrap();
        let y = 0.37;
        for side in [Side::Left, Side::Right] {
            let (a, c) = m.affine_piece(side).unwrap();
            let img = a * Vector2::new(0.0, y) + c;
            assert_eq!([img[0], img[1]], [y + 1.0, 0.0]);
        }
        assert_eq!(m.evaluate(&p2(0.0, y)).unwrap().array(), [y + 1.0, 0.0]);
    }

    #[test]
    fn lozi_is_a_bcnf() {
        let l = MapSpec::lozi(1.7, 0.3).unwrap();
        let b = l.as_bcnf().unwrap();
        for x in [[0.3, -0.2], [-0.7, 0.4], [0.0, 1.0]] {
            let (u, v) = (l.step(x), b.step(x));
            assert!((u[0] - v[0]).abs() < 1e-15 && (u[1] - v[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_coupling_decouples() {
        let c = MapSpec::coupled_skew_tent(1.8, 0.0).unwrap();
        let st = MapSpec::skew_tent(1.8).unwrap();
        let y = c.evaluate(&p2(0.2, 0.9)).unwrap();
        assert_eq!(y.x(), st.step([0.2, 0.0])[0]);
        assert_eq!(y.y(), st.step([0.9, 0.0])[0]);
    }

    #[test]
    fn coupled_diagonal_jacobian_eigenvalues() {
        let (s, w) = (1.8, 0.3);
        let c = MapSpec::coupled_skew_tent(s, w).unwrap();
        let j = c.jacobian(&p2(0.2, 0.2)).unwrap();
        let along = j * Vector2::new(1.0, 1.0);
        let across = j * Vector2::new(1.0, -1.0);
        assert!((along - Vector2::new(s, s)).norm() < 1e-14);
        assert!((across - Vector2::new(s * (1.0 - 2.0 * w), -s * (1.0 - 2.0 * w))).norm() < 1e-14);
    }

    #[test]
    fn validation() {
        assert!(MapSpec::tent(1.0).is_err());
        assert!(MapSpec::tent(2.0).is_ok());
        assert!(MapSpec::skew_tent(2.0).is_err());
        assert!(MapSpec::general_skew_tent(1.5, 0.7).is_err());
        assert!(MapSpec::coupled_skew_tent(1.8, 0.6).is_err());
        assert!(MapSpec::lozi(f64::NAN, 0.3).is_err());
        assert!(MapSpec::tent(1.5).unwrap().evaluate(&p1(1.5)).is_err());
        assert!(MapSpec::tent(1.5).unwrap().evaluate(&p2(0.1, 0.1)).is_err());
    }

    #[test]
    fn orbits_and_escape() {
        let t = MapSpec::tent(2.0).unwrap();
        let o = t.orbit(&p1(0.0), 5, 10).unwrap();
        assert!(o.points.iter().all(|p| p[0] == 0.0));
        let l = MapSpec::lozi(1.7, 0.3).unwrap();
        let o = l.orbit(&p2(100.0, 100.0), 0, 100).unwrap();
        assert!(o.escaped());
        let t = MapSpec::tent(1.5).unwrap();
        let o = t.orbit(&p1(0.2), 1000, 100_000).unwrap();
        assert!(o.points.iter().all(|p| (0.375..=0.75).contains(&p[0])));
    }

    #[test]
    fn json_round_trip_and_aliases() {
        let m = MapSpec::bcnf(0.8, 0.3, -1.8, 0.3).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<MapSpec>(&s).unwrap(), m);
        let c: MapSpec = serde_json::from_str(r#"{"family":"coupled_skew_tent","params":{"s":1.8,"ω":0.2}}"#).unwrap();
        assert_eq!(c, MapSpec::CoupledSkewTent { s: 1.8, omega: 0.2 });
        assert!(serde_json::from_str::<MapSpec>(r#"{"family":"Tent","params":{}}"#).is_err());
        assert!(serde_json::from_str::<MapSpec>(r#"{"family":"Tent","params":{"s":3}}"#).is_err());
    }
}
