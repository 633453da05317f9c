use attractor_core::analytic::lozi_geometry;
use attractor_core::attractor::{compute_attractor, AttractorOptions, Seed};
use attractor_core::continuation::*;
use attractor_core::geometry::{hausdorff_distance, CompactSet, Dim, Point, PointCloud};
use attractor_core::maps::MapSpec;

fn opts(dim: Dim, n_transient: usize, n_samples: usize, threshold: Threshold) -> ContinuationOptions {
    let mut o = ContinuationOptions::for_dim(dim);
    o.attractor = o.attractor.with_samples(n_transient, n_samples);
    o.attractor.lyapunov_steps = 0;
    o.threshold = threshold;
    o
}

fn linspace(a: f64, b: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|k| if k == steps { b } else { a + (b - a) * k as f64 / steps as f64 }).collect()
}

fn run(base: &MapSpec, name: &str, values: &[f64], o: &ContinuationOptions) -> ContinuationResult {
    continue_attractor(&ParameterPath::along(base, name, values).unwrap(), o).unwrap()
}

fn max_distance(r: &ContinuationResult) -> f64 {
    r.distances.iter().copied().fold(0.0, f64::max)
}

/// Each halving of the step multiplies the largest consecutive distance by
/// a factor in `[0.25, 0.75]`.
fn assert_linear(maxima: &[f64]) {
    for w in maxima.windows(2) {
        let q = w[1] / w[0];
        assert!((0.25..=0.75).contains(&q), "ratio {q} in {maxima:?}");
    }
}

#[test]
fn tent_path_distances_shrink_linearly_without_flags() {
    let o = opts(Dim::One, 1_000, 100_000, Threshold::Fixed(0.05));
    let base = MapSpec::tent(1.5).unwrap();
    let mut maxima = Vec::new();
    for steps in [32, 64, 128] {
        let r = run(&base, "s", &linspace(1.5, 1.35, steps), &o);
        assert!(r.jumps().is_empty(), "{steps} steps flagged {:?}", r.jumps());
        maxima.push(max_distance(&r));
    }
    assert!(maxima[1] < 0.05);
    assert_linear(&maxima);
}

#[test]
fn lozi_path_distances_shrink_linearly() {
    let o = opts(Dim::Two, 1_000, 100_000, Threshold::Fixed(0.5));
    let base = MapSpec::lozi(1.7, 0.3).unwrap();
    let maxima: Vec<f64> = [4, 8, 16]
        .into_iter()
        .map(|steps| {
            let r = run(&base, "a", &linspace(1.7, 1.6, steps), &o);
            assert!(r.jumps().is_empty());
            max_distance(&r)
        })
        .collect();
    assert_linear(&maxima);
}

#[test]
fn logistic_path_through_the_period_three_window_jumps() {
    let o = opts(Dim::One, 20_000, 20_000, Threshold::default());
    let r = run(&MapSpec::logistic(3.82).unwrap(), "r", &linspace(3.82, 3.86, 8), &o);
    let crossing = r.jumps().into_iter().any(|i| {
        let (a, b) = (r.maps[i].param("r").unwrap(), r.maps[i + 1].param("r").unwrap());
        a < 1.0 + 8f64.sqrt() && 1.0 + 8f64.sqrt() <= b
    });
    assert!(crossing, "{:?}", r.distances);
}

fn curve_b_path(tau_l: f64, step: f64) -> (f64, Vec<f64>) {
    let b = bcnf_curve_b(tau_l, Deltas::default(), (-3.5, -1.3)).unwrap();
    let n = (0.08 / step).round() as usize;
    (b, linspace(b + 0.04, b - 0.04, n))
}

fn flagged_intervals(r: &ContinuationResult) -> Vec<(f64, f64)> {
    r.jumps()
        .into_iter()
        .map(|i| {
            let (a, b) = (r.maps[i].param("tau_R").unwrap(), r.maps[i + 1].param("tau_R").unwrap());
            (a.min(b), a.max(b))
        })
        .collect()
}

#[test]
fn crossing_curve_b_flags_a_jump_and_halving_adds_no_flags() {
    let o = opts(Dim::Two, 5_000, 20_000, Threshold::default());
    let base = Deltas::default().map(0.75, -2.0);
    let (b, coarse) = curve_b_path(0.75, 0.01);
    let rc = run(&base, "tau_R", &coarse, &o);
    let big = rc.jumps().into_iter().filter(|&i| rc.distances[i] > 0.1).collect::<Vec<_>>();
    assert!(!big.is_empty(), "{:?}", rc.distances);
    for &i in &big {
        let (x, y) = (rc.maps[i].param("tau_R").unwrap(), rc.maps[i + 1].param("tau_R").unwrap());
        assert!((x - b).abs() < 0.011 || (y - b).abs() < 0.011, "jump at [{y}, {x}] far from curve b {b}");
    }
    let coarse_flags = flagged_intervals(&rc);
    let (_, fine) = curve_b_path(0.75, 0.005);
    let rf = run(&base, "tau_R", &fine, &o);
    for (lo, hi) in flagged_intervals(&rf) {
        assert!(
            coarse_flags.iter().any(|&(a, c)| a - 1e-12 <= lo && hi <= c + 1e-12),
            "new flag at [{lo}, {hi}]; coarse flags {coarse_flags:?}"
        );
    }
}

#[test]
fn refinement_keeps_the_logistic_flag_at_every_level() {
    let mut o = opts(Dim::One, 100_000, 20_000, Threshold::default());
    o.refine_min_step = Some(1e-4);
    let r = run(&MapSpec::logistic(3.826).unwrap(), "r", &linspace(3.826, 3.832, 6), &o);
    assert!(!r.refinement.is_empty());
    assert!(r.refinement.iter().all(|l| l.flagged >= 1), "{:?}", r.refinement);
    let (a, b) = r.first_jump().unwrap();
    assert!(b[0] - a[0] <= 1e-4 * (1.0 + 1e-9));
    assert!(a[0] < 1.0 + 8f64.sqrt() + 1e-4 && b[0] > 1.0 + 8f64.sqrt() - 1e-4, "{a:?} {b:?}");
}

#[test]
fn coupled_boundary_is_within_one_cell_of_half_inverse_slope() {
    let o = CoupledOptions { grid_n: 201, ..Default::default() };
    let step = 0.005;
    let omegas = linspace(0.2, 0.35, 30);
    for s in [1.65, 1.75, 1.85, 1.95] {
        let cells = coupled_sweep(&[s], &omegas, &o).unwrap();
        let first = cells.iter().find(|c| c.label == CoupledLabel::Diagonal).expect("diagonal somewhere").omega;
        assert!(cells.iter().filter(|c| c.omega > first).all(|c| c.label == CoupledLabel::Diagonal));
        assert!((first - 1.0 / (2.0 * s)).abs() <= step + 1e-12, "s {s}: boundary {first}");
    }
}

#[test]
fn crossing_the_coupled_boundary_is_flagged() {
    let s = 1.8;
    let o = CoupledOptions { grid_n: 201, ..Default::default() };
    let omegas = linspace(0.2, 0.35, 30);
    let cells = coupled_sweep(&[s], &omegas, &o).unwrap();
    let k = cells.iter().position(|c| c.label == CoupledLabel::Diagonal).unwrap();
    let mut co = opts(Dim::Two, 0, 0, Threshold::Fixed(0.05));
    co.estimator = Estimator::SetImage { grid: 201, n_iter: 40, span: 2 };
    let base = MapSpec::coupled_skew_tent(s, 0.2).unwrap();
    let r = run(&base, "omega", &[cells[k - 1].omega, cells[k].omega], &co);
    assert_eq!(r.jumps(), vec![0], "{:?}", r.distances);
}

#[test]
fn lozi_unstable_manifold_spans_the_attractor() {
    let g = lozi_geometry(1.7, 0.3).unwrap();
    let map = g.map();
    let cyc = bcnf_cycle("R", &map.as_bcnf().unwrap()).unwrap();
    let grow = |scale: f64| {
        let o = ManifoldOptions { n_iter: 30, seed_scale: scale, max_points: 400_000, ..Default::default() };
        grow_unstable_manifold(&map, &cyc, &o).unwrap()
    };
    let w = grow(1e-2);
    let on_edge = |p: [f64; 2], q: [f64; 2]| {
        (0..=50).all(|k| {
            let t = k as f64 / 50.0;
            w.distance_to_point(&[p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]) < 1e-3
        })
    };
    assert!(on_edge(g.x, g.z), "XZ");
    assert!(on_edge(g.z, g.p), "ZP");

    let ao = AttractorOptions { n_transient: 10_000, n_samples: 1_000_000, lyapunov_steps: 0, escape_radius: 1e6 };
    let est = compute_attractor(&map, &Seed::Point(Point::new2(0.1, 0.1).unwrap()), &ao).unwrap();
    let d = hausdorff_distance(&w, &est.set().unwrap()).unwrap();
    assert!(d < 1e-2, "{d}");

    let half = grow(5e-3);
    let d = hausdorff_distance(&w, &half).unwrap();
    assert!(d < 1e-3, "{d}");
}

#[test]
fn lyapunov_surface_signs_and_continuity_across_curve_d() {
    let so = SweepOptions { lyapunov_steps: 20_000, ..Default::default() };
    let grid = Grid2 { x: (0.45, 1.25), nx: 5, y: (-2.6, -1.6), ny: 5 };
    let cells = lyapunov_surface(&grid, &so).unwrap();
    let mut seen = 0;
    for c in &cells {
        for a in &c.attractors {
            match a.kind {
                AttractorKind::P3 => assert!(a.lyapunov < 0.0, "{}", c.to_json()),
                AttractorKind::A | AttractorKind::B | AttractorKind::C => {
                    assert!(a.lyapunov > 0.0, "{}", c.to_json())
                }
                AttractorKind::Cycle(_) => {}
            }
            seen += 1;
        }
    }
    assert!(seen >= cells.len());

    let fine = SweepOptions { n_samples: 200_000, lyapunov_steps: 400_000, ..Default::default() };
    let b = classify_cell(1.2, -1.70, &fine, false).unwrap();
    let c = classify_cell(1.2, -1.76, &fine, false).unwrap();
    assert_eq!(b.label, RegionLabel::B, "{}", b.to_json());
    assert_eq!(c.label, RegionLabel::C, "{}", c.to_json());
    let (lb, lc) = (b.find(AttractorKind::B).unwrap().lyapunov, c.find(AttractorKind::C).unwrap().lyapunov);
    assert!((lb - lc).abs() < 0.05, "{lb} vs {lc}");
}

#[test]
fn set_image_estimate_of_a_tent_matches_its_bands() {
    let mut o = opts(Dim::One, 0, 0, Threshold::Fixed(0.05));
    o.estimator = Estimator::SetImage { grid: 2_000, n_iter: 200, span: 50 };
    let r = run(&MapSpec::tent(1.6).unwrap(), "s", &[1.6, 1.61], &o);
    assert!(r.jumps().is_empty());
    let est = &r.estimates[0];
    let bands = CompactSet::Intervals(attractor_core::analytic::tent_bands(1.6).unwrap());
    let cloud = CompactSet::Cloud(PointCloud::from_arrays(Dim::One, est.points.as_ref().unwrap().arrays().to_vec()).unwrap());
    assert!(hausdorff_distance(&cloud, &bands).unwrap() < 1e-2);
}
