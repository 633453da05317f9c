//! Compact subsets of the line and the plane, and the distances between them.
//!
//! Three representations are supported: finite point clouds, finite unions of
//! closed intervals (1-D only) and convex polygons (2-D only). Point clouds are
//! the exchange format; the other two convert to clouds by sampling whenever an
//! exact formula is not available.

mod distance;
mod index;
mod io;
mod ops;

pub use distance::{cloud_semi, hausdorff_distance, hausdorff_distance_with, semi_distance, semi_distance_with, DistanceEstimate};
pub use index::GridIndex;
pub use io::{parse_set_csv, parse_set_json, set_from_str, set_to_csv, set_to_json};
pub use ops::{connected_components, inflate, inflate_with};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default sampling resolution relative to the set diameter.
pub const DEFAULT_RELATIVE_RESOLUTION: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("compact sets must be nonempty")]
    Empty,
    #[error("coordinate is not finite: {0}")]
    NonFinite(f64),
    #[error("dimension mismatch: {left}-D set against {right}-D set")]
    DimensionMismatch { left: usize, right: usize },
    #[error("points of a cloud must share one dimension")]
    MixedDimensions,
    #[error("interval [{lo}, {hi}] has lo > hi")]
    InvertedInterval { lo: f64, hi: f64 },
    #[error("intervals must be sorted and pairwise disjoint")]
    OverlappingIntervals,
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon is not strictly convex and counter-clockwise")]
    NotConvex,
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("operation supports 1-D sets only")]
    NotOneDimensional,
    #[error("resolution must be positive, got {0}")]
    BadResolution(f64),
    #[error("malformed set literal: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// Phase-space dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dim {
    One,
    Two,
}

impl Dim {
    pub fn len(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
        }
    }
}

/// A point of the line or the plane. 1-D points keep a zero second coordinate
/// so that one Euclidean kernel serves both dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; 2],
    dim: Dim,
}

impl Point {
    pub fn new1(x: f64) -> Result<Self> {
        check_finite(x)?;
        Ok(Point { coords: [x, 0.0], dim: Dim::One })
    }

    pub fn new2(x: f64, y: f64) -> Result<Self> {
        check_finite(x)?;
        check_finite(y)?;
        Ok(Point { coords: [x, y], dim: Dim::Two })
    }

    pub fn from_slice(c: &[f64]) -> Result<Self> {
        match c {
            [x] => Point::new1(*x),
            [x, y] => Point::new2(*x, *y),
            _ => Err(GeometryError::Parse(format!("points have 1 or 2 coordinates, got {}", c.len()))),
        }
    }

    /// Builds a point without the finiteness check. Used on hot paths where
    /// the caller has already screened the values.
    pub(crate) fn raw(coords: [f64; 2], dim: Dim) -> Self {
        Point { coords, dim }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    pub fn y(&self) -> f64 {
        self.coords[1]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim.len()]
    }

    pub fn array(&self) -> [f64; 2] {
        self.coords
    }

    pub fn distance(&self, other: &Point) -> f64 {
        euclid(&self.coords, &other.coords)
    }
}

#[inline]
pub(crate) fn euclid(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

fn check_finite(v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::NonFinite(v))
    }
}

/// Nonempty finite set of points of a single dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: Dim,
    points: Vec<[f64; 2]>,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let first = points.first().ok_or(GeometryError::Empty)?;
        let dim = first.dim;
        if points.iter().any(|p| p.dim != dim) {
            return Err(GeometryError::MixedDimensions);
        }
        Ok(PointCloud { dim, points: points.into_iter().map(|p| p.coords).collect() })
    }

    /// Builds a cloud from raw coordinate pairs; 1-D clouds must carry a zero
    /// second coordinate.
    pub fn from_arrays(dim: Dim, points: Vec<[f64; 2]>) -> Result<Self> {
        if points.is_empty() {
            return Err(GeometryError::Empty);
        }
        for p in &points {
            check_finite(p[0])?;
            check_finite(p[1])?;
            if dim == Dim::One && p[1] != 0.0 {
                return Err(GeometryError::MixedDimensions);
            }
        }
        Ok(PointCloud { dim, points })
    }

    pub fn from_values(values: &[f64]) -> Result<Self> {
        PointCloud::from_arrays(Dim::One, values.iter().map(|&v| [v, 0.0]).collect())
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn arrays(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn into_arrays(self) -> Vec<[f64; 2]> {
        self.points
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.points.iter().map(move |&c| Point::raw(c, self.dim))
    }

    /// Axis-aligned bounding box `[min, max]`.
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        bbox(&self.points)
    }

    pub fn diameter_bound(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        euclid(&lo, &hi)
    }

    /// Splits the cloud into its first and second halves (in storage order).
    pub fn halves(&self) -> Option<(PointCloud, PointCloud)> {
        if self.points.len() < 2 {
            return None;
        }
        let mid = self.points.len() / 2;
        Some((
            PointCloud { dim: self.dim, points: self.points[..mid].to_vec() },
            PointCloud { dim: self.dim, points: self.points[mid..].to_vec() },
        ))
    }

    /// Every `stride`-th point, starting at `offset`.
    pub fn subsample(&self, offset: usize, stride: usize) -> Option<PointCloud> {
        let points: Vec<_> = self.points.iter().skip(offset).step_by(stride.max(1)).copied().collect();
        if points.is_empty() {
            None
        } else {
            Some(PointCloud { dim: self.dim, points })
        }
    }
}

pub(crate) fn bbox(points: &[[f64; 2]]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        check_finite(lo)?;
        check_finite(hi)?;
        if lo > hi {
            return Err(GeometryError::InvertedInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn distance_to(&self, x: f64) -> f64 {
        if x < self.lo {
            self.lo - x
        } else if x > self.hi {
            x - self.hi
        } else {
            0.0
        }
    }
}

/// Finite union of closed, sorted, pairwise disjoint intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalUnion {
    intervals: Vec<Interval>,
}

impl IntervalUnion {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(GeometryError::Empty);
        }
        for w in intervals.windows(2) {
            if w[0].hi >= w[1].lo {
                return Err(GeometryError::OverlappingIntervals);
            }
        }
        Ok(IntervalUnion { intervals })
    }

    /// Sorts and merges arbitrary (possibly overlapping) intervals.
    pub fn merged(mut intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(GeometryError::Empty);
        }
        intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut out: Vec<Interval> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match out.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => out.push(iv),
            }
        }
        Ok(IntervalUnion { intervals: out })
    }

    pub fn single(lo: f64, hi: f64) -> Result<Self> {
        Ok(IntervalUnion { intervals: vec![Interval::new(lo, hi)?] })
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn count(&self) -> usize {
        self.intervals.len()
    }

    pub fn hull(&self) -> Interval {
        Interval { lo: self.intervals[0].lo, hi: self.intervals[self.intervals.len() - 1].hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.distance_to(x) == 0.0
    }

    /// Distance from `x` to the union (binary search over the sorted intervals).
    pub fn distance_to(&self, x: f64) -> f64 {
        let idx = self.intervals.partition_point(|iv| iv.hi < x);
        let mut best = f64::INFINITY;
        if idx < self.intervals.len() {
            best = best.min(self.intervals[idx].distance_to(x));
        }
        if idx > 0 {
            best = best.min(self.intervals[idx - 1].distance_to(x));
        }
        best
    }

    /// Total length of the gaps between consecutive intervals.
    pub fn gaps(&self) -> Vec<f64> {
        self.intervals.windows(2).map(|w| w[1].lo - w[0].hi).collect()
    }

    /// Endpoints plus interior samples with spacing at most `step`.
    pub fn sample(&self, step: f64) -> Vec<[f64; 2]> {
        let mut out = Vec::new();
        for iv in &self.intervals {
            let n = ((iv.len() / step).ceil() as usize).max(1);
            for k in 0..=n {
                let t = k as f64 / n as f64;
                out.push([iv.lo + (iv.hi - iv.lo) * t, 0.0]);
            }
        }
        out
    }
}

/// Strictly convex polygon, vertices counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<[f64; 2]>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        for v in &vertices {
            check_finite(v[0])?;
            check_finite(v[1])?;
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if cross(&a, &b, &c) <= 0.0 {
                return Err(GeometryError::NotConvex);
            }
        }
        // A strictly left-turning closed chain can still wind more than once.
        if signed_area(&vertices) <= 0.0 || !winds_once(&vertices) {
            return Err(GeometryError::NotConvex);
        }
        Ok(ConvexPolygon { vertices })
    }

    /// Accepts either orientation and reorders to counter-clockwise.
    pub fn from_unordered(mut vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() >= 3 && signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        ConvexPolygon::new(vertices)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in &self.vertices {
            for b in &self.vertices {
                d = d.max(euclid(a, b));
            }
        }
        d
    }

    pub fn contains(&self, p: &[f64; 2]) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| cross(&self.vertices[i], &self.vertices[(i + 1) % n], p) >= 0.0)
    }

    /// Euclidean distance from `p` to the filled polygon (zero inside).
    pub fn distance_to(&self, p: &[f64; 2]) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        let n = self.vertices.len();
        (0..n).map(|i| segment_distance(p, &self.vertices[i], &self.vertices[(i + 1) % n])).fold(f64::INFINITY, f64::min)
    }

    /// Boundary points at spacing `step` plus a square lattice of interior
    /// points at the same spacing.
    pub fn sample_filled(&self, step: f64) -> Vec<[f64; 2]> {
        let mut out = self.sample_boundary(step);
        let (lo, hi) = bbox(&self.vertices);
        let nx = ((hi[0] - lo[0]) / step).ceil() as usize;
        let ny = ((hi[1] - lo[1]) / step).ceil() as usize;
        for i in 1..nx {
            for j in 1..ny {
                let p = [lo[0] + i as f64 * step, lo[1] + j as f64 * step];
                if self.contains(&p) {
                    out.push(p);
                }
            }
        }
        out
    }

    pub fn sample_boundary(&self, step: f64) -> Vec<[f64; 2]> {
        let n = self.vertices.len();
        let mut out = Vec::new();
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let m = ((euclid(&a, &b) / step).ceil() as usize).max(1);
            for k in 0..m {
                let t = k as f64 / m as f64;
                out.push([a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t]);
            }
        }
        out
    }
}

pub(crate) fn cross(a: &[f64; 2], b: &[f64; 2], c: &[f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

pub(crate) fn signed_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        s += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * s
}

fn winds_once(v: &[[f64; 2]]) -> bool {
    let n = v.len();
    let mut total = 0.0;
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        let c = v[(i + 2) % n];
        let t1 = (b[1] - a[1]).atan2(b[0] - a[0]);
        let t2 = (c[1] - b[1]).atan2(c[0] - b[0]);
        let mut d = t2 - t1;
        while d <= -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        while d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        }
        total += d;
    }
    (total - 2.0 * std::f64::consts::PI).abs() < 1e-6
}

pub(crate) fn segment_distance(p: &[f64; 2], a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 { ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    euclid(p, &[a[0] + t * ab[0], a[1] + t * ab[1]])
}

/// A nonempty compact subset of the line or the plane.
#[derive(Debug, Clone, PartialEq)]
pub enum CompactSet {
    Cloud(PointCloud),
    Intervals(IntervalUnion),
    Polygon(ConvexPolygon),
}

impl CompactSet {
    pub fn dim(&self) -> Dim {
        match self {
            CompactSet::Cloud(c) => c.dim(),
            CompactSet::Intervals(_) => Dim::One,
            CompactSet::Polygon(_) => Dim::Two,
        }
    }

    pub fn singleton(p: Point) -> Self {
        CompactSet::Cloud(PointCloud { dim: p.dim, points: vec![p.coords] })
    }

    /// Upper bound on the set diameter (exact for intervals and polygons).
    pub fn diameter(&self) -> f64 {
        match self {
            CompactSet::Cloud(c) => c.diameter_bound(),
            CompactSet::Intervals(u) => u.hull().len(),
            CompactSet::Polygon(p) => p.diameter(),
        }
    }

    /// Default sampling step: a fixed fraction of the diameter.
    pub fn default_resolution(&self) -> f64 {
        let d = self.diameter();
        if d > 0.0 {
            d * DEFAULT_RELATIVE_RESOLUTION
        } else {
            DEFAULT_RELATIVE_RESOLUTION
        }
    }

    /// Converts to a point cloud, sampling intervals and polygons (filled)
    /// at spacing `step`.
    pub fn to_cloud(&self, step: f64) -> Result<PointCloud> {
        if !(step > 0.0) {
            return Err(GeometryError::BadResolution(step));
        }
        Ok(match self {
            CompactSet::Cloud(c) => c.clone(),
            CompactSet::Intervals(u) => PointCloud { dim: Dim::One, points: u.sample(step) },
            CompactSet::Polygon(p) => PointCloud { dim: Dim::Two, points: p.sample_filled(step) },
        })
    }

    pub fn as_cloud(&self) -> Option<&PointCloud> {
        match self {
            CompactSet::Cloud(c) => Some(c),
            _ => None,
        }
    }

    /// Distance from a single point to the set; exact for intervals and
    /// polygons, nearest-neighbour for clouds.
    pub fn distance_to_point(&self, p: &[f64; 2]) -> f64 {
        match self {
            CompactSet::Cloud(c) => c.points.iter().map(|q| euclid(p, q)).fold(f64::INFINITY, f64::min),
            CompactSet::Intervals(u) => u.distance_to(p[0]),
            CompactSet::Polygon(poly) => poly.distance_to(p),
        }
    }
}

impl From<PointCloud> for CompactSet {
    fn from(c: PointCloud) -> Self {
        CompactSet::Cloud(c)
    }
}

impl From<IntervalUnion> for CompactSet {
    fn from(u: IntervalUnion) -> Self {
        CompactSet::Intervals(u)
    }
}

impl From<ConvexPolygon> for CompactSet {
    fn from(p: ConvexPolygon) -> Self {
        CompactSet::Polygon(p)
    }
}
