use ddr_core::ddr2d::{FaceDdr, Options};
use ddr_core::geometry::check_orientation_identities;
use ddr_core::matrix_io::{Axis, MatrixFile};
use ddr_core::mesh::{shapes, Mesh};
use ddr_core::verify::{self, Config, Suite};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn quick() -> Config {
    Config { samples: 3, rhs_samples: 2, timing: false, ..Config::default() }
}

fn failures(r: &[verify::CheckResult]) -> Vec<String> {
    r.iter().filter(|c| !c.passed()).map(|c| format!("{} k={} {:e} {}", c.name, c.k, c.residual, c.detail)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn planar_sequences_are_exact_and_commute(seed in 0u64..10_000, k in 0usize..3) {
        let cell = shapes::random_pentagon(seed).cell(0).unwrap();
        let suites = [Suite::Exactness, Suite::Commutation, Suite::Consistency];
        let (r, _) = verify::run_cell(&cell, k, &suites, &quick()).unwrap();
        prop_assert!(failures(&r).is_empty(), "{:?}", failures(&r));
    }

    #[test]
    fn interpolators_are_linear(seed in 0u64..10_000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let cell = shapes::random_pentagon(seed).cell(0).unwrap();
        let d = FaceDdr::new(&cell, 0, 1, &Options::default()).unwrap();
        let f = |p: &nalgebra::Vector3<f64>| (p.x * 3.0).sin();
        let g = |p: &nalgebra::Vector3<f64>| p.y.exp();
        let lhs = d.interp_grad(|p| a * f(p) + b * g(p));
        let rhs = d.interp_grad(f) * a + d.interp_grad(g) * b;
        prop_assert!((lhs - &rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn gram_matrices_are_symmetric_positive(seed in 0u64..10_000, k in 0usize..3, x in prop::collection::vec(-1.0f64..1.0, 64)) {
        let cell = shapes::random_pentagon(seed).cell(0).unwrap();
        let d = FaceDdr::new(&cell, 0, k, &Options::default()).unwrap();
        for g in [&d.gram_grad, &d.gram_rot] {
            prop_assert!((g - g.transpose()).amax() <= 1e-14 * g.amax());
            let v = nalgebra::DVector::from_iterator(g.nrows(), x.iter().copied().cycle().take(g.nrows()));
            prop_assert!(v.dot(&(g * &v)) > 0.0);
        }
    }

    #[test]
    fn matrix_files_round_trip_bitwise(rows in 1usize..6, cols in 1usize..6, vals in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 36)) {
        let data = DMatrix::from_fn(rows, cols, |i, j| vals[i * 6 + j]);
        let m = MatrixFile::new("M", Axis::plain("A", rows), Axis::plain("B", cols), data.clone());
        let back = MatrixFile::from_text(&m.to_text()).unwrap();
        for (x, y) in back.data.iter().zip(data.iter()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn mesh_files_round_trip(seed in 0u64..10_000) {
        let m = shapes::random_hexahedron(seed);
        let back = Mesh::from_json(&m.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), m.to_json());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn solid_sequences_are_exact_and_commute(seed in 0u64..10_000, k in 0usize..2) {
        let cell = shapes::random_hexahedron(seed).cell(0).unwrap();
        let suites = [Suite::Exactness, Suite::Commutation];
        let (r, _) = verify::run_cell(&cell, k, &suites, &quick()).unwrap();
        prop_assert!(failures(&r).is_empty(), "{:?}", failures(&r));
    }

    #[test]
    fn orientation_identities_hold_and_detect_flips(seed in 0u64..10_000, face in 0usize..6) {
        let cell = shapes::random_hexahedron(seed).cell(0).unwrap();
        prop_assert!(check_orientation_identities(&cell, seed).ok);
        prop_assert!(!check_orientation_identities(&cell.with_flipped_face_orientation(face), seed).ok);
    }

    #[test]
    fn reports_do_not_depend_on_thread_count(seed in 0u64..10_000) {
        let cells = vec![shapes::random_pentagon(seed).cell(0).unwrap()];
        let cfg = Config { seed, ..quick() };
        let a = ddr_core::par::with_jobs(Some(1), || verify::run(&cells, &[0, 1], &Suite::ALL, &cfg)).unwrap();
        let b = ddr_core::par::with_jobs(Some(3), || verify::run(&cells, &[0, 1], &Suite::ALL, &cfg)).unwrap();
        prop_assert_eq!(a.to_json(), b.to_json());
    }
}
