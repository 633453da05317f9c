use super::{cross, euclid, CompactSet, ConvexPolygon, Dim, GeometryError, GridIndex, Interval, IntervalUnion, PointCloud, Result};

/// Directions sampled around polygon vertices when dilating. The set is
/// fixed so that dilations of one polygon are nested in the radius.
const ARC_DIRECTIONS: usize = 64;

/// Lattice spacing for dilating 2-D clouds, relative to the cloud diameter.
const CLOUD_LATTICE_RELATIVE: f64 = 1.0 / 256.0;

/// Closed `r`-neighbourhood of `x` with the default lattice for 2-D clouds.
pub fn inflate(x: &CompactSet, r: f64) -> Result<CompactSet> {
    inflate_with(x, r, None)
}

/// Closed `r`-neighbourhood of `x`.
///
/// 1-D sets dilate exactly into an interval union. Polygons become the convex
/// hull of the vertices pushed out along a fixed direction set, which lies
/// inside the true neighbourhood. 2-D clouds become the original points plus
/// every point of the lattice `step * Z^2` within `r` of the cloud; for a
/// fixed step the result is monotone in `r`.
pub fn inflate_with(x: &CompactSet, r: f64, step: Option<f64>) -> Result<CompactSet> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(GeometryError::NonPositiveRadius(r));
    }
    match x {
        CompactSet::Intervals(u) => Ok(CompactSet::Intervals(dilate_intervals(u.intervals().iter().copied(), r)?)),
        CompactSet::Cloud(c) if c.dim() == Dim::One => {
            let ivs = c.arrays().iter().map(|p| Interval { lo: p[0], hi: p[0] });
            Ok(CompactSet::Intervals(dilate_intervals(ivs, r)?))
        }
        CompactSet::Cloud(c) => {
            let h = match step {
                Some(s) if s > 0.0 && s.is_finite() => s,
                Some(s) => return Err(GeometryError::BadResolution(s)),
                None => {
                    let d = c.diameter_bound();
                    if d > 0.0 {
                        d * CLOUD_LATTICE_RELATIVE
                    } else {
                        r / 4.0
                    }
                }
            };
            Ok(CompactSet::Cloud(dilate_cloud(c, r, h)?))
        }
        CompactSet::Polygon(p) => {
            let mut dirs: Vec<[f64; 2]> = (0..ARC_DIRECTIONS)
                .map(|k| {
                    let t = std::f64::consts::TAU * k as f64 / ARC_DIRECTIONS as f64;
                    [t.cos(), t.sin()]
                })
                .collect();
            let v = p.vertices();
            for i in 0..v.len() {
                let a = v[i];
                let b = v[(i + 1) % v.len()];
                let len = euclid(&a, &b);
                dirs.push([(b[1] - a[1]) / len, (a[0] - b[0]) / len]);
            }
            let pts: Vec<[f64; 2]> = v.iter().flat_map(|c| dirs.iter().map(move |u| [c[0] + r * u[0], c[1] + r * u[1]])).collect();
            Ok(CompactSet::Polygon(ConvexPolygon::new(convex_hull(pts))?))
        }
    }
}

fn dilate_intervals(ivs: impl Iterator<Item = Interval>, r: f64) -> Result<IntervalUnion> {
    IntervalUnion::merged(ivs.map(|iv| Interval { lo: iv.lo - r, hi: iv.hi + r }).collect())
}

fn dilate_cloud(c: &PointCloud, r: f64, h: f64) -> Result<PointCloud> {
    let index = GridIndex::new(c.arrays());
    let (lo, hi) = c.bounding_box();
    let i0 = ((lo[0] - r) / h).floor() as i64;
    let i1 = ((hi[0] + r) / h).ceil() as i64;
    let j0 = ((lo[1] - r) / h).floor() as i64;
    let j1 = ((hi[1] + r) / h).ceil() as i64;
    let mut out = c.arrays().to_vec();
    for i in i0..=i1 {
        for j in j0..=j1 {
            let q = [i as f64 * h, j as f64 * h];
            if index.nearest_distance_above(&q, r) <= r {
                out.push(q);
            }
        }
    }
    PointCloud::from_arrays(Dim::Two, out)
}

/// Andrew's monotone chain; drops collinear points so the hull is strictly
/// convex and counter-clockwise.
pub(crate) fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Splits a 1-D set into maximal pieces whose consecutive members are at
/// most `gap_tol` apart. Interval input yields interval unions, cloud input
/// yields clouds sorted ascending.
pub fn connected_components(x: &CompactSet, gap_tol: f64) -> Result<Vec<CompactSet>> {
    if !(gap_tol >= 0.0) {
        return Err(GeometryError::BadResolution(gap_tol));
    }
    match x {
        CompactSet::Intervals(u) => {
            let mut groups: Vec<Vec<Interval>> = Vec::new();
            for iv in u.intervals() {
                match groups.last_mut() {
                    Some(g) if iv.lo - g[g.len() - 1].hi <= gap_tol => g.push(*iv),
                    _ => groups.push(vec![*iv]),
                }
            }
            groups.into_iter().map(|g| IntervalUnion::new(g).map(CompactSet::Intervals)).collect()
        }
        CompactSet::Cloud(c) if c.dim() == Dim::One => {
            let mut v: Vec<f64> = c.arrays().iter().map(|p| p[0]).collect();
            v.sort_by(f64::total_cmp);
            let mut groups: Vec<Vec<[f64; 2]>> = Vec::new();
            let mut prev = f64::NEG_INFINITY;
            for t in v {
                match groups.last_mut() {
                    Some(g) if t - prev <= gap_tol => g.push([t, 0.0]),
                    _ => groups.push(vec![[t, 0.0]]),
                }
                prev = t;
            }
            groups.into_iter().map(|g| PointCloud::from_arrays(Dim::One, g).map(CompactSet::Cloud)).collect()
        }
        _ => Err(GeometryError::NotOneDimensional),
    }
}
