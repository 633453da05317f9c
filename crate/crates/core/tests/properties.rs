use std::cmp::Ordering;

use proptest::prelude::*;

use attractor_core::continuation::{bcnf_cycle, solve_cycle};
use attractor_core::geometry::{hausdorff_distance, inflate, CompactSet, Dim, GridIndex, IntervalUnion, PointCloud};
use attractor_core::maps::{MapSpec, Side};
use attractor_core::symbolic::{compare, kneading_invariant, Symbol, SymbolSequence};

fn cloud(points: Vec<(f64, f64)>) -> CompactSet {
    CompactSet::Cloud(PointCloud::from_arrays(Dim::Two, points.into_iter().map(|(x, y)| [x, y]).collect()).unwrap())
}

fn pts(max: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 1..max)
}

fn brute_hausdorff(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let semi = |x: &[[f64; 2]], y: &[[f64; 2]]| {
        x.iter()
            .map(|p| y.iter().map(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    semi(a, b).max(semi(b, a))
}

/// Equal-length words, on which the order is total. `C` may only end a word.
fn word(len: usize) -> impl Strategy<Value = SymbolSequence> {
    let lr = prop_oneof![Just(Symbol::L), Just(Symbol::R)];
    let last = prop_oneof![Just(Symbol::L), Just(Symbol::C), Just(Symbol::R)];
    (prop::collection::vec(lr, len - 1), last).prop_map(|(mut w, c)| {
        w.push(c);
        SymbolSequence::finite(w).unwrap()
    })
}

fn lr_word(max: usize) -> impl Strategy<Value = SymbolSequence> {
    let sym = prop_oneof![Just(Symbol::L), Just(Symbol::R)];
    (prop::collection::vec(sym.clone(), 0..4), prop::collection::vec(sym, 1..max))
        .prop_map(|(h, t)| SymbolSequence::eventually_periodic(h, t).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hausdorff_is_a_metric(a in pts(40), b in pts(40), c in pts(40)) {
        let (a, b, c) = (cloud(a), cloud(b), cloud(c));
        let ab = hausdorff_distance(&a, &b).unwrap();
        let ba = hausdorff_distance(&b, &a).unwrap();
        let bc = hausdorff_distance(&b, &c).unwrap();
        let ac = hausdorff_distance(&a, &c).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn accelerated_distance_matches_brute_force(a in pts(300), b in pts(300)) {
        let (ca, cb) = (cloud(a), cloud(b));
        let fast = hausdorff_distance(&ca, &cb).unwrap();
        let slow = brute_hausdorff(ca.as_cloud().unwrap().arrays(), cb.as_cloud().unwrap().arrays());
        prop_assert!((fast - slow).abs() < 1e-12, "{} vs {}", fast, slow);
    }

    #[test]
    fn superset_has_zero_semi_distance(a in pts(50), extra in pts(50)) {
        let sub = cloud(a.clone());
        let sup = cloud(a.into_iter().chain(extra).collect());
        let d = attractor_core::geometry::semi_distance(&sub, &sup).unwrap();
        prop_assert_eq!(d, 0.0);
    }

    #[test]
    fn grid_index_agrees_with_scan(a in pts(200), q in (-20.0..20.0f64, -20.0..20.0f64)) {
        let p: Vec<[f64; 2]> = a.iter().map(|&(x, y)| [x, y]).collect();
        let idx = GridIndex::new(&p);
        let want = p.iter().map(|r| ((r[0] - q.0).powi(2) + (r[1] - q.1).powi(2)).sqrt()).fold(f64::INFINITY, f64::min);
        prop_assert!((idx.nearest_distance(&[q.0, q.1]) - want).abs() < 1e-12);
    }

    #[test]
    fn inflation_moves_by_at_most_its_radius(lo in -5.0..5.0f64, w in 0.0..3.0f64, r1 in 0.0..1.0f64, dr in 0.0..1.0f64) {
        let x = CompactSet::Intervals(IntervalUnion::single(lo, lo + w).unwrap());
        let small = inflate(&x, r1).unwrap();
        let big = inflate(&x, r1 + dr).unwrap();
        prop_assert!(hausdorff_distance(&x, &small).unwrap() <= r1 + 1e-9);
        prop_assert_eq!(attractor_core::geometry::semi_distance(&small, &big).unwrap(), 0.0);
    }

    #[test]
    fn unit_domain_maps_stay_in_the_unit_box(
        s in 1.0..2.0f64, omega in 0.0..0.5f64, r in 0.0..4.0f64,
        x in 0.0..=1.0f64, y in 0.0..=1.0f64,
    ) {
        let maps = [
            MapSpec::tent(s).unwrap(),
            MapSpec::skew_tent(s).unwrap(),
            MapSpec::coupled_skew_tent(s, omega).unwrap(),
            MapSpec::logistic(r).unwrap(),
        ];
        for m in maps {
            prop_assert!(m.has_unit_domain());
            let z = m.step([x, if m.dim() == Dim::Two { y } else { 0.0 }]);
            prop_assert!((0.0..=1.0).contains(&z[0]), "{:?} {:?}", m, z);
            prop_assert!((0.0..=1.0).contains(&z[1]), "{:?} {:?}", m, z);
        }
    }

    #[test]
    fn diagonal_is_exactly_invariant(s in 1.0..2.0f64, omega in 0.0..0.5f64, x in 0.0..=1.0f64) {
        let m = MapSpec::coupled_skew_tent(s, omega).unwrap();
        let mut p = [x, x];
        for _ in 0..50 {
            p = m.step(p);
            prop_assert_eq!(p[0], p[1]);
        }
    }

    #[test]
    fn pieces_agree_on_the_switching_line(tl in -3.0..3.0f64, dl in -1.0..1.0f64, tr in -3.0..3.0f64, dr in -1.0..1.0f64, y in -5.0..5.0f64) {
        let m = MapSpec::bcnf(tl, dl, tr, dr).unwrap();
        let (al, bl) = m.affine_piece(Side::Left).unwrap();
        let (ar, br) = m.affine_piece(Side::Right).unwrap();
        let v = nalgebra::Vector2::new(0.0, y);
        let (l, r) = (al * v + bl, ar * v + br);
        prop_assert!((l - r).norm() < 1e-12);
        let z = m.step([0.0, y]);
        prop_assert!((z[0] - l[0]).abs() < 1e-12 && (z[1] - l[1]).abs() < 1e-12);
    }

    #[test]
    fn step_is_the_affine_piece_of_its_side(a in 0.0..2.0f64, b in -1.0..1.0f64, x in -3.0..3.0f64, y in -3.0..3.0f64) {
        let m = MapSpec::lozi(a, b).unwrap();
        let side = if x <= 0.0 { Side::Left } else { Side::Right };
        let (mat, off) = m.affine_piece(side).unwrap();
        let want = mat * nalgebra::Vector2::new(x, y) + off;
        let got = m.step([x, y]);
        prop_assert!((got[0] - want[0]).abs() < 1e-12 && (got[1] - want[1]).abs() < 1e-12);
    }

    #[test]
    fn parity_order_is_antisymmetric_and_transitive(a in word(8), b in word(8), c in word(8)) {
        prop_assert_eq!(compare(&a, &b), compare(&b, &a).reverse());
        if compare(&a, &b) == Ordering::Equal {
            prop_assert_eq!(&a, &b);
        }
        if compare(&a, &b) != Ordering::Greater && compare(&b, &c) != Ordering::Greater {
            prop_assert!(compare(&a, &c) != Ordering::Greater);
        }
    }

    #[test]
    fn periodic_order_is_total(a in lr_word(5), b in lr_word(5)) {
        let ab = compare(&a, &b);
        prop_assert_eq!(ab, compare(&b, &a).reverse());
        if ab == Ordering::Equal {
            for k in 0..40 {
                prop_assert_eq!(a.at(k), b.at(k));
            }
        }
    }

    #[test]
    fn tent_kneading_increases_with_slope(s1 in 1.01..1.99f64, ds in 0.0..0.5f64) {
        let s2 = (s1 + ds).min(2.0);
        let k1 = kneading_invariant(&MapSpec::tent(s1).unwrap(), 30).unwrap();
        let k2 = kneading_invariant(&MapSpec::tent(s2).unwrap(), 30).unwrap();
        prop_assert!(compare(&k1, &k2) != Ordering::Greater, "{} {}", k1, k2);
    }

    #[test]
    fn cycles_solve_their_equations(tl in -2.5..2.5f64, tr in -2.5..2.5f64, dl in -0.9..0.9f64, dr in -0.9..0.9f64, w in prop::collection::vec(prop::bool::ANY, 1..7)) {
        let m = MapSpec::bcnf(tl, dl, tr, dr).unwrap();
        let it: Vec<Side> = w.iter().map(|&b| if b { Side::Right } else { Side::Left }).collect();
        if let Ok(c) = solve_cycle(&m, &it) {
            prop_assert!(c.residual < 1e-10, "{}", c.residual);
            let prod = c.eigenvalues[0] * c.eigenvalues[1];
            let det = c.monodromy.determinant();
            let scale = det.abs().max(1.0);
            prop_assert!((prod.re - det).abs() < 1e-10 * scale && prod.im.abs() < 1e-10 * scale);
            let want = it.iter().map(|s| if *s == Side::Left { dl } else { dr }).product::<f64>();
            prop_assert!((det - want).abs() < 1e-10 * want.abs().max(1.0));
        }
    }
}

#[test]
fn lrl_cycle_points_map_into_each_other() {
    let m = MapSpec::bcnf(0.5, 0.3, -2.6, 0.3).unwrap();
    let c = bcnf_cycle("LRL", &m).unwrap();
    for i in 0..3 {
        let y = m.step(c.points[i]);
        let z = c.points[(i + 1) % 3];
        assert!((y[0] - z[0]).abs() < 1e-12 && (y[1] - z[1]).abs() < 1e-12);
    }
}
