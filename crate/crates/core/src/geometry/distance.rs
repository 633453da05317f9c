use rayon::prelude::*;

use super::{bbox, euclid, CompactSet, Dim, GeometryError, GridIndex, Interval, IntervalUnion, Result};

/// Query points per parallel chunk. Chunks keep their own running maximum,
/// which only affects how early a query may stop, never the result.
const CHUNK: usize = 2048;
/// Relative margin on the triangle bound so that rounding never skips a
/// query whose distance exceeds the running maximum.
const TRIANGLE_SLACK: f64 = 1e-12;

/// A distance value together with the sampling error bar that applies to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceEstimate {
    pub value: f64,
    /// Zero when the value is exact.
    pub error_bar: f64,
}

/// Semi-distance `sup_{x in X} inf_{y in Y} |x - y|` at the default resolution.
pub fn semi_distance(x: &CompactSet, y: &CompactSet) -> Result<f64> {
    semi_distance_with(x, y, None).map(|d| d.value)
}

/// Semi-distance with an explicit sampling step for polygons on the `X` side.
///
/// Exact cases: cloud or interval union against anything 1-D, cloud against
/// a polygon, polygon against a polygon (the distance to a convex set is a
/// convex function, so its maximum over a polygon sits at a vertex). A polygon
/// against a cloud is sampled and carries an error bar of one step.
pub fn semi_distance_with(x: &CompactSet, y: &CompactSet, step: Option<f64>) -> Result<DistanceEstimate> {
    if x.dim() != y.dim() {
        return Err(GeometryError::DimensionMismatch { left: x.dim().len(), right: y.dim().len() });
    }
    if let Some(s) = step {
        if !(s > 0.0 && s.is_finite()) {
            return Err(GeometryError::BadResolution(s));
        }
    }
    let exact = |value| DistanceEstimate { value, error_bar: 0.0 };
    match (x, y) {
        (_, _) if x.dim() == Dim::One => {
            let yu = as_union(y);
            Ok(exact(match x {
                CompactSet::Cloud(c) => c.arrays().iter().map(|p| yu.distance_to(p[0])).fold(0.0, f64::max),
                _ => union_semi(&as_union(x), &yu),
            }))
        }
        (CompactSet::Cloud(cx), CompactSet::Cloud(cy)) => Ok(exact(cloud_semi(cx.arrays(), cy.arrays()))),
        (CompactSet::Cloud(cx), CompactSet::Polygon(py)) => {
            let v = cx.arrays().par_iter().map(|p| py.distance_to(p)).reduce(|| 0.0, f64::max);
            Ok(exact(v))
        }
        (CompactSet::Polygon(px), CompactSet::Polygon(py)) => {
            Ok(exact(px.vertices().iter().map(|v| py.distance_to(v)).fold(0.0, f64::max)))
        }
        (CompactSet::Polygon(px), CompactSet::Cloud(cy)) => {
            let h = step.unwrap_or_else(|| x.default_resolution());
            let samples = px.sample_filled(h);
            Ok(DistanceEstimate { value: cloud_semi(&samples, cy.arrays()), error_bar: h })
        }
        _ => unreachable!("interval unions are 1-D"),
    }
}

/// Hausdorff distance at the default resolution.
pub fn hausdorff_distance(x: &CompactSet, y: &CompactSet) -> Result<f64> {
    hausdorff_distance_with(x, y, None).map(|d| d.value)
}

pub fn hausdorff_distance_with(x: &CompactSet, y: &CompactSet, step: Option<f64>) -> Result<DistanceEstimate> {
    let a = semi_distance_with(x, y, step)?;
    let b = semi_distance_with(y, x, step)?;
    Ok(DistanceEstimate { value: a.value.max(b.value), error_bar: a.error_bar.max(b.error_bar) })
}

/// Grid-accelerated cloud semi-distance; bit-identical to the double loop.
///
/// Queries run in spatial order so that `d(q) <= d(p) + |q - p|` for the
/// previous query `p` can rule a query out without searching.
pub fn cloud_semi(xs: &[[f64; 2]], ys: &[[f64; 2]]) -> f64 {
    let index = GridIndex::new(ys);
    let h = index.cell_size();
    let (lo, _) = bbox(xs);
    let key = |q: &[f64; 2]| {
        let i = ((q[0] - lo[0]) / h).floor().max(0.0).min(u32::MAX as f64) as u64;
        let j = ((q[1] - lo[1]) / h).floor().max(0.0).min(u32::MAX as f64) as u64;
        // Row-wise snake keeps consecutive queries adjacent.
        (j << 32) | if j.is_multiple_of(2) { i } else { u32::MAX as u64 - i }
    };
    let mut sorted: Vec<(u64, [f64; 2])> = xs.iter().map(|q| (key(q), *q)).collect();
    sorted.sort_unstable_by_key(|e| e.0);
    sorted
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut m = 0.0f64;
            let mut prev: Option<([f64; 2], f64)> = None;
            for (_, q) in chunk {
                if let Some((p, ub)) = prev {
                    if (ub + euclid(&p, q)) * (1.0 + TRIANGLE_SLACK) <= m {
                        continue;
                    }
                }
                let d = index.nearest_distance_above(q, m);
                prev = Some((*q, d));
                if d > m {
                    m = d;
                }
            }
            m
        })
        .reduce(|| 0.0, f64::max)
}

fn as_union(s: &CompactSet) -> IntervalUnion {
    match s {
        CompactSet::Intervals(u) => u.clone(),
        CompactSet::Cloud(c) => {
            let ivs = c.arrays().iter().map(|p| Interval { lo: p[0], hi: p[0] }).collect();
            IntervalUnion::merged(ivs).expect("clouds are nonempty")
        }
        CompactSet::Polygon(_) => unreachable!("polygons are 2-D"),
    }
}

/// Exact 1-D semi-distance. On each interval of `x` the distance to `y` is
/// piecewise linear with peaks only at gap midpoints of `y`.
fn union_semi(x: &IntervalUnion, y: &IntervalUnion) -> f64 {
    let mut best = 0.0f64;
    for iv in x.intervals() {
        best = best.max(y.distance_to(iv.lo)).max(y.distance_to(iv.hi));
    }
    for w in y.intervals().windows(2) {
        let mid = 0.5 * (w[0].hi + w[1].lo);
        if x.contains(mid) {
            best = best.max(y.distance_to(mid));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ConvexPolygon, Point, PointCloud};

    fn cloud2(pts: &[[f64; 2]]) -> CompactSet {
        CompactSet::Cloud(PointCloud::from_arrays(Dim::Two, pts.to_vec()).unwrap())
    }

    #[test]
    fn singletons() {
        let a = CompactSet::singleton(Point::new2(0.0, 0.0).unwrap());
        let b = CompactSet::singleton(Point::new2(3.0, 4.0).unwrap());
        assert_eq!(semi_distance(&a, &b).unwrap(), 5.0);
    }

    #[test]
    fn point_against_interval() {
        let x = CompactSet::singleton(Point::new1(0.0).unwrap());
        let y = CompactSet::Intervals(IntervalUnion::single(0.0, 10.0).unwrap());
        assert_eq!(semi_distance(&x, &y).unwrap(), 0.0);
        assert_eq!(semi_distance(&y, &x).unwrap(), 10.0);
        assert_eq!(hausdorff_distance(&x, &y).unwrap(), 10.0);
    }

    #[test]
    fn interval_gap_midpoint_is_the_peak() {
        let x = CompactSet::Intervals(IntervalUnion::single(0.0, 10.0).unwrap());
        let y = CompactSet::Intervals(IntervalUnion::new(vec![Interval { lo: 0.0, hi: 1.0 }, Interval { lo: 9.0, hi: 10.0 }]).unwrap());
        assert_eq!(semi_distance(&x, &y).unwrap(), 4.0);
        assert_eq!(semi_distance(&y, &x).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let a = CompactSet::singleton(Point::new1(0.0).unwrap());
        let b = CompactSet::singleton(Point::new2(0.0, 0.0).unwrap());
        assert!(matches!(semi_distance(&a, &b), Err(GeometryError::DimensionMismatch { .. })));
    }

    #[test]
    fn polygon_cases() {
        let sq = CompactSet::Polygon(ConvexPolygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap());
        let corners = cloud2(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert_eq!(semi_distance(&corners, &sq).unwrap(), 0.0);
        let d = semi_distance_with(&sq, &corners, Some(1e-2)).unwrap();
        assert!((d.value - 0.5f64.sqrt()).abs() <= d.error_bar);
        let big = CompactSet::Polygon(ConvexPolygon::new(vec![[-1.0, -1.0], [2.0, -1.0], [2.0, 2.0], [-1.0, 2.0]]).unwrap());
        assert_eq!(semi_distance(&sq, &big).unwrap(), 0.0);
        assert!((semi_distance(&big, &sq).unwrap() - 2.0f64.sqrt()).abs() < 1e-15);
    }
}
