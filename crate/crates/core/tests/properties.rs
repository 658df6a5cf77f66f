use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use gwpt::config::ExperimentConfig;
use gwpt::linalg::{RMatrix, RVector};
use gwpt::quadrature::{coefficients, gh_grid, tcm_grid};
use gwpt::reconstruction::Reconstruction;
use gwpt::summation::{PositionGrid, SummationCurve};
use gwpt::{hermite_rule, overlap, PhaseSpacePoint, WavePacket, WidthMatrix};

fn packet_1d() -> impl Strategy<Value = WavePacket> {
    (-2.0..2.0f64, -2.0..2.0f64, -1.0..1.0f64, 0.3..3.0f64).prop_map(|(q, p, re, im)| {
        WavePacket::new_1d(q, p, Complex64::new(re, im), 0.7).unwrap()
    })
}

fn packet_2d() -> impl Strategy<Value = WavePacket> {
    (
        prop::array::uniform2(-1.5..1.5f64),
        prop::array::uniform2(-1.5..1.5f64),
        0.0..PI,
        prop::array::uniform2(0.4..2.5f64),
    )
        .prop_map(|(q, p, angle, lambdas)| {
            let (c, s) = (angle.cos(), angle.sin());
            let rot = RMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
            let im = &rot * RMatrix::from_diagonal(&RVector::from_vec(lambdas.to_vec())) * rot.transpose();
            let width = WidthMatrix::imaginary(&im).unwrap();
            WavePacket::new(PhaseSpacePoint::from_slices(&q, &p).unwrap(), width, 0.9).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn overlap_is_hermitian(a in packet_1d(), b in packet_1d()) {
        let ab = overlap(&a, &b).unwrap();
        let ba = overlap(&b, &a).unwrap();
        prop_assert!((ab - ba.conj()).norm() <= 1e-12 * (1.0 + ab.norm()));
    }

    #[test]
    fn overlap_obeys_cauchy_schwarz(a in packet_2d(), b in packet_2d()) {
        prop_assert!(overlap(&a, &b).unwrap().norm() <= 1.0 + 1e-12);
        prop_assert!((overlap(&a, &a).unwrap() - 1.0).norm() <= 1e-12);
    }

    #[test]
    fn finite_grid_partition_of_unity(x in -10.0..10.0f64, gamma in 0.5..8.0f64, m in 1usize..40) {
        let width = WidthMatrix::imaginary_diagonal(&[gamma]).unwrap();
        let grid = PositionGrid::finite(RVector::zeros(1), 6.0, m, &width).unwrap();
        let curve = SummationCurve::new(grid, width, 1.0).unwrap();
        let total: f64 = curve
            .active_indices(&[x])
            .iter()
            .map(|k| curve.partition_weight(k, &[x]).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() <= 1e-13);
    }

    #[test]
    fn product_form_matches_direct_sum(x in prop::array::uniform2(-3.0..3.0f64), angle in 0.0..PI) {
        let (c, s) = (angle.cos(), angle.sin());
        let rot = RMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let im = &rot * RMatrix::from_diagonal(&RVector::from_vec(vec![1.5, 0.7])) * rot.transpose();
        let width = WidthMatrix::imaginary(&im).unwrap();
        let grid = PositionGrid::finite(RVector::zeros(2), 3.0, 9, &width).unwrap();
        let curve = SummationCurve::new(grid, width, 0.6).unwrap();
        let direct = curve.direct(&x);
        prop_assert!((direct - curve.product(&x)).abs() <= 1e-12 * direct.max(1e-300));
    }

    #[test]
    fn reconstruction_is_linear(scale_re in -2.0..2.0f64, scale_im in -2.0..2.0f64, x in -6.0..6.0f64) {
        let psi0 = WavePacket::new_1d(0.5, 1.0, Complex64::new(0.0, 1.0), 1.0).unwrap();
        let width = WidthMatrix::imaginary_diagonal(&[2.0]).unwrap();
        let grid = PositionGrid::finite(RVector::zeros(1), 6.0, 12, &width).unwrap();
        let curve = SummationCurve::new(grid, width.clone(), 1.0).unwrap();
        let momenta = tcm_grid(10, 3.0 * PI, &RVector::from_vec(vec![1.0])).unwrap();
        let table = coefficients(&momenta, curve.grid(), &width, &psi0).unwrap();
        let factor = Complex64::new(scale_re, scale_im);
        let scaled = table.with_values(table.values().iter().map(|r| r * factor).collect()).unwrap();
        let base = Reconstruction::new(table, curve.clone()).unwrap().evaluate(&[x]);
        let both = Reconstruction::new(scaled, curve).unwrap().evaluate(&[x]);
        prop_assert!((both - base * factor).norm() <= 1e-13 * (1.0 + base.norm()));
    }

    #[test]
    fn hermite_weights_sum_to_sqrt_pi(n in 1usize..200) {
        let rule = hermite_rule(n).unwrap();
        let total: f64 = rule.weights.iter().sum();
        prop_assert!((total - PI.sqrt()).abs() <= 1e-13);
        prop_assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn gh_grid_integrates_shifted_gaussian(p0 in -3.0..3.0f64, eps in 0.05..2.0f64, n in 1usize..40) {
        let grid = gh_grid(n, eps, &RVector::from_vec(vec![p0])).unwrap();
        let value = grid.integrate(|p| Complex64::new((-p[0] * p[0] / (2.0 * eps)).exp(), 0.0));
        prop_assert!((value.re - (2.0 * PI * eps).sqrt()).abs() <= 1e-12 * (2.0 * PI * eps).sqrt());
    }

    #[test]
    fn config_canonical_form_is_stable(
        eps in prop::collection::vec(0.01..5.0f64, 1..4),
        gammas in prop::collection::vec(0.1..40.0f64, 1..4),
        m in prop::collection::vec(1usize..300, 1..3),
        l_q in 0.5..20.0f64,
        first_n in 1usize..10,
        count in 1usize..20,
    ) {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let text = format!(
            "psi0.q0 = 0.25\npsi0.p0 = -1\npsi0.gamma0_imag = 1\npsi0.eps = {}\nbasis.gamma_imag = {}\n\
             box.L_q = {l_q:?}\nbox.M = {}\nbox.samples_per_dim = 128\nrules = GH, TcM\n\
             gh.N = {first_n}..{}\ntcm.N = {first_n}\ntcm.L_p = 4pi\n",
            join(&eps),
            join(&gammas),
            m.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
            first_n + count,
        );
        let config = ExperimentConfig::parse(&text).unwrap();
        let canonical = config.to_text();
        let again = ExperimentConfig::parse(&canonical).unwrap();
        prop_assert_eq!(&again, &config);
        prop_assert_eq!(again.to_text(), canonical);
    }
}
