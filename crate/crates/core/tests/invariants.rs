use num_complex::Complex64;
use proptest::prelude::*;
use schatten_lab::estimator::Instance;
use schatten_lab::matcore::{ComplexMatrix, PositiveDefiniteMatrix};
use schatten_lab::mazur::mazur_map;
use schatten_lab::random::orthonormalize;
use schatten_lab::schatten::{schatten_norm, Exponent};
use schatten_lab::strip::{boundary_measure, BoundarySet};

fn matrix(max_dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    (1..=max_dim).prop_flat_map(|n| {
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n).prop_map(move |v| {
            let data = v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
            ComplexMatrix::from_row_major(n, data).unwrap()
        })
    })
}

fn exponent() -> impl Strategy<Value = f64> {
    0.3..4.0f64
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mazur_map_moves_the_unit_sphere(f in matrix(5), p in exponent(), q in exponent()) {
        let norm = schatten_norm(&f, p).unwrap();
        prop_assume!(norm > 1e-6);
        let unit = f.scale(1.0 / norm);
        let image = mazur_map(&unit, p, q).unwrap();
        prop_assert!((schatten_norm(&image, q).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mazur_maps_compose(f in matrix(5), p in exponent(), q in exponent(), r in exponent()) {
        let two_steps = mazur_map(&mazur_map(&f, p, q).unwrap(), q, r).unwrap();
        let direct = mazur_map(&f, p, r).unwrap();
        let scale = direct.max_abs().max(1e-12);
        prop_assert!(two_steps.max_abs_diff(&direct) / scale < 1e-8);
    }

    #[test]
    fn schatten_norm_is_homogeneous(f in matrix(6), p in exponent(), c in 0.01..100.0f64) {
        let a = schatten_norm(&f.scale(c), p).unwrap();
        let b = c * schatten_norm(&f, p).unwrap();
        prop_assert!(rel(a, b) < 1e-10);
    }

    #[test]
    fn schatten_norm_is_unitarily_invariant(f in matrix(5), g in matrix(5), p in exponent()) {
        prop_assume!(f.dim() == g.dim());
        let u = orthonormalize(&g);
        let a = schatten_norm(&(&u * &f), p).unwrap();
        let b = schatten_norm(&(&f * &u.adjoint()), p).unwrap();
        let c = schatten_norm(&f, p).unwrap();
        prop_assert!(rel(a, c) < 1e-10 && rel(b, c) < 1e-10);
    }

    #[test]
    fn schatten_norm_decreases_in_p(f in matrix(6), p in exponent(), dp in 0.01..3.0f64) {
        let small = schatten_norm(&f, p).unwrap();
        let large = schatten_norm(&f, p + dp).unwrap();
        let top = schatten_norm(&f, Exponent::Infinite).unwrap();
        prop_assert!(large <= small * (1.0 + 1e-12));
        prop_assert!(top <= large * (1.0 + 1e-12));
    }

    #[test]
    fn quasi_triangle_holds(f in matrix(4), g in matrix(4), p in 0.2..1.0f64) {
        prop_assume!(f.dim() == g.dim());
        let lhs = schatten_norm(&(&f + &g), p).unwrap().powf(p);
        let rhs = schatten_norm(&f, p).unwrap().powf(p) + schatten_norm(&g, p).unwrap().powf(p);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn boundary_sets_are_sorted_and_disjoint(
        raw in prop::collection::vec((-10.0..10.0f64, 0.0..4.0f64), 0..8),
        gamma in 0.05..0.95f64,
    ) {
        let intervals: Vec<(f64, f64)> = raw.iter().map(|&(a, w)| (a, a + w)).collect();
        let set = BoundarySet::new(intervals.clone(), intervals).unwrap();
        for k in [0, 1] {
            let iv = set.intervals(k);
            for w in iv.windows(2) {
                prop_assert!(w[0].1 < w[1].0);
            }
            for &(a, b) in iv {
                prop_assert!(a < b);
            }
        }
        let m = boundary_measure(gamma, &set).unwrap();
        prop_assert!((0.0..=1.0 + 1e-9).contains(&m));
    }

    #[test]
    fn witnesses_round_trip_bit_exact(
        f in matrix(4),
        values in prop::collection::vec(1e-6..1e6f64, 4),
    ) {
        let n = f.dim();
        let inst = Instance {
            spectra: vec![values[..n].to_vec()],
            bases: vec![orthonormalize(&f)],
            mats: vec![f],
        };
        let json = serde_json::to_string(&inst.to_witness()).unwrap();
        let back: schatten_lab::estimator::Witness = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back.to_instance().unwrap(), inst);
    }

    #[test]
    fn powers_compose(values in prop::collection::vec(1e-3..1e3f64, 1..6), s in -2.0..2.0f64, t in -2.0..2.0f64) {
        let d = PositiveDefiniteMatrix::from_diagonal(&values).unwrap();
        let a = d.power(s + t).into_matrix();
        let b = d.power(s).as_matrix() * d.power(t).as_matrix();
        prop_assert!(a.max_abs_diff(&b) / a.max_abs() < 1e-10);
    }
}
