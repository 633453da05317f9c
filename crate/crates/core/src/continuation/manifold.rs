use rayon::prelude::*;

use super::{ContinuationError, CycleSolution, Result};
use crate::geometry::{CompactSet, Dim, PointCloud};
use crate::maps::{escaped, MapSpec, DEFAULT_ESCAPE_RADIUS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldOptions {
    /// Half-length of the seed segment along the unstable eigenvector.
    pub seed_scale: f64,
    /// Images of the seed segment to accumulate.
    pub n_iter: usize,
    /// Consecutive curve samples are refined until no farther apart than this.
    pub max_gap: f64,
    /// Growth stops once the current curve holds this many samples.
    pub max_points: usize,
    pub escape_radius: f64,
}

impl Default for ManifoldOptions {
    fn default() -> Self {
        ManifoldOptions { seed_scale: 1e-2, n_iter: 40, max_gap: 1e-3, max_points: 1_000_000, escape_radius: DEFAULT_ESCAPE_RADIUS }
    }
}

/// Parametrised samples of `f^k(segment)`; `None` marks an escape.
struct Curve {
    t: Vec<f64>,
    x: Vec<Option<[f64; 2]>>,
}

fn gap(a: &Option<[f64; 2]>, b: &Option<[f64; 2]>) -> f64 {
    match (a, b) {
        (Some(p), Some(q)) => ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt(),
        _ => 0.0,
    }
}

/// Unstable manifold of a saddle cycle, grown by iterating both branches of
/// a short segment through `points[0]` and bisecting in the segment
/// parameter wherever consecutive images separate by more than `max_gap`.
/// The result is the union of all images, so it contains the seed segment.
pub fn grow_unstable_manifold(map: &MapSpec, cycle: &CycleSolution, opts: &ManifoldOptions) -> Result<CompactSet> {
    if map.dim() != Dim::Two {
        return Err(ContinuationError::BadOption("manifolds need a planar map".into()));
    }
    if !(opts.seed_scale > 0.0 && opts.max_gap > 0.0 && opts.max_points >= 2) {
        return Err(ContinuationError::BadOption("seed_scale, max_gap and max_points must be positive".into()));
    }
    let (_, v) = cycle.unstable_direction().ok_or(ContinuationError::NotSaddle)?;
    let p0 = cycle.points[0];
    let r = opts.escape_radius;
    let seed_at = |t: f64| [p0[0] + t * v[0], p0[1] + t * v[1]];
    let image = |t: f64, k: usize| {
        let mut x = seed_at(t);
        map.iterate(&mut x, k, r).is_none().then_some(x)
    };
    let n0 = ((2.0 * opts.seed_scale / opts.max_gap).ceil() as usize).max(2);
    let t: Vec<f64> = (0..=n0).map(|i| -opts.seed_scale + 2.0 * opts.seed_scale * i as f64 / n0 as f64).collect();
    let x = t.iter().map(|&s| Some(seed_at(s))).collect();
    let mut curve = Curve { t, x };
    let mut out: Vec<[f64; 2]> = curve.x.iter().flatten().copied().collect();
    for k in 1..=opts.n_iter {
        curve.x.par_iter_mut().for_each(|p| {
            if let Some(q) = p {
                let y = map.step(*q);
                *p = (!escaped(&y, r)).then_some(y);
            }
        });
        // Bisect long gaps; the curve is continuous in t.
        loop {
            if curve.t.len() >= opts.max_points {
                break;
            }
            let long: Vec<usize> = (0..curve.t.len() - 1)
                .filter(|&i| {
                    let mid = 0.5 * (curve.t[i] + curve.t[i + 1]);
                    gap(&curve.x[i], &curve.x[i + 1]) > opts.max_gap && mid != curve.t[i] && mid != curve.t[i + 1]
                })
                .collect();
            if long.is_empty() {
                break;
            }
            let room = opts.max_points - curve.t.len();
            let long = &long[..long.len().min(room)];
            let mids: Vec<(f64, Option<[f64; 2]>)> = long
                .par_iter()
                .map(|&i| {
                    let m = 0.5 * (curve.t[i] + curve.t[i + 1]);
                    (m, image(m, k))
                })
                .collect();
            let mut t = Vec::with_capacity(curve.t.len() + mids.len());
            let mut x = Vec::with_capacity(curve.t.len() + mids.len());
            let mut j = 0;
            for i in 0..curve.t.len() {
                t.push(curve.t[i]);
                x.push(curve.x[i]);
                if j < long.len() && long[j] == i {
                    t.push(mids[j].0);
                    x.push(mids[j].1);
                    j += 1;
                }
            }
            curve = Curve { t, x };
        }
        out.extend(curve.x.iter().flatten());
        if curve.t.len() >= opts.max_points {
            break;
        }
    }
    Ok(CompactSet::Cloud(PointCloud::from_arrays(Dim::Two, out)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::lozi_geometry;
    use crate::continuation::bcnf_cycle;

    #[test]
    fn lozi_manifold_contains_the_unstable_segment_to_z() {
        let g = lozi_geometry(1.7, 0.3).unwrap();
        let map = g.map();
        let cyc = bcnf_cycle("R", &map.as_bcnf().unwrap()).unwrap();
        assert!((cyc.points[0][0] - g.x[0]).abs() < 1e-12);
        let opts = ManifoldOptions { n_iter: 12, max_points: 200_000, ..Default::default() };
        let w = grow_unstable_manifold(&map, &cyc, &opts).unwrap();
        for k in 0..=20 {
            let s = k as f64 / 20.0;
            let q = [g.x[0] + s * (g.z[0] - g.x[0]), g.x[1] + s * (g.z[1] - g.x[1])];
            assert!(w.distance_to_point(&q) < 1e-3, "{s}");
        }
    }

    #[test]
    fn rejects_a_stable_cycle() {
        let map = MapSpec::bcnf(0.5, 0.3, -2.4, 0.3).unwrap();
        let cyc = bcnf_cycle("LRL", &map).unwrap();
        assert!(cyc.is_stable());
        assert_eq!(grow_unstable_manifold(&map, &cyc, &ManifoldOptions::default()), Err(ContinuationError::NotSaddle));
    }
}
