use lighttail::asymptotics::{beta_norm_log_bound, exp_class_tail, ExpClassTerm};
use lighttail::bounds::{sum_tail_bounds, upper_bound_quality};
use lighttail::oracle::{conv_tail_pair, nfold_tail_small};
use lighttail::special::ln_gamma_q;
use lighttail::{GammaWeibullModel, ModelSpec, QuadratureSpec};
use proptest::prelude::*;

fn gw(k: f64, beta: f64, gamma: f64) -> GammaWeibullModel {
    GammaWeibullModel::new(k, beta, gamma).unwrap()
}

#[test]
fn sandwich_holds_for_small_n_by_quadrature() {
    let spec = QuadratureSpec::default();
    for &(k, beta, gamma) in &[(1.0, 2.0, 2.0), (0.5, 1.5, 0.8), (2.0, 3.0, 1.7), (1.0, 1.0, 2.5)] {
        let m = ModelSpec::GammaWeibull(gw(k, beta, gamma));
        for n in 2..=4 {
            for &x in &[0.5, 1.0, 2.0, 4.0, 8.0] {
                let p = nfold_tail_small(&m, n, x, &spec).unwrap();
                let b = sum_tail_bounds(&vec![gamma; n], k, beta, x).unwrap();
                assert!(b.lower <= p + 1e-9 && p <= b.upper + 1e-9, "k={k} beta={beta} gamma={gamma} n={n} x={x}");
            }
        }
    }
}

#[test]
fn mixed_shapes_pair_sandwich() {
    let spec = QuadratureSpec::default();
    let (k, beta) = (1.3, 2.2);
    let (m1, m2) = (gw(k, beta, 0.9), gw(k, beta, 3.1));
    for &x in &[0.3, 1.0, 3.0, 6.0] {
        let p = conv_tail_pair(&ModelSpec::GammaWeibull(m1), &ModelSpec::GammaWeibull(m2), x, &spec).unwrap();
        let b = sum_tail_bounds(&[0.9, 3.1], k, beta, x).unwrap();
        assert!(b.lower <= p && p <= b.upper, "x={x}: {} {p} {}", b.lower, b.upper);
    }
}

#[test]
fn beta_norm_bound_dominates_oracle() {
    let spec = QuadratureSpec::default();
    let law = gw(1.0, 2.0, 2.0);
    let m = ModelSpec::GammaWeibull(law);
    let terms = vec![ExpClassTerm::gamma_weibull(&law); 3];
    for &x in &[1.0, 3.0, 6.0, 9.0] {
        let p = nfold_tail_small(&m, 3, x, &spec).unwrap();
        assert!(beta_norm_log_bound(&terms, 1.0, 2.0, x).unwrap() >= p, "x={x}");
    }
}

#[test]
fn exp_class_constant_reproduces_gamma_convolution() {
    let spec = QuadratureSpec::default();
    let (k, g1, g2) = (1.5, 0.6, 2.2);
    let (m1, m2) = (gw(k, 1.0, g1), gw(k, 1.0, g2));
    let terms = [ExpClassTerm::gamma_weibull(&m1), ExpClassTerm::gamma_weibull(&m2)];
    let mut last = f64::INFINITY;
    for &x in &[20.0, 80.0, 320.0] {
        let oracle = conv_tail_pair(&ModelSpec::GammaWeibull(m1), &ModelSpec::GammaWeibull(m2), x, &spec).unwrap();
        assert!((oracle - ln_gamma_q(g1 + g2, k * x).unwrap()).abs() < 1e-9);
        let gap = (exp_class_tail(&terms, k, x).unwrap() - oracle).abs();
        assert!(gap < last);
        last = gap;
    }
    assert!(last < 0.01);
}

#[test]
fn upper_bound_gap_grows_with_stated_degree() {
    let law = gw(1.0, 2.0, 2.0);
    let q = |x: f64| upper_bound_quality(&law, 3, x).unwrap();
    let (a, b) = (q(20.0), q(40.0));
    let slope = (b.log_ratio - a.log_ratio) / 2f64.ln();
    assert!((slope / a.polynomial_degree - 1.0).abs() < 0.05, "{slope} vs {}", a.polynomial_degree);
    // the upper bound sits above the asymptote
    assert!(b.log_ratio > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bounds_are_ordered_and_monotone(
        k in 0.2f64..3.0,
        beta in 1.0f64..4.0,
        gammas in prop::collection::vec(0.3f64..4.0, 1..8),
        x in 0.01f64..20.0,
    ) {
        let b1 = sum_tail_bounds(&gammas, k, beta, x).unwrap();
        let b2 = sum_tail_bounds(&gammas, k, beta, x * 1.1).unwrap();
        prop_assert!(b1.lower <= b1.upper + 1e-12);
        prop_assert!(b1.upper <= 0.0 && b1.lower <= 0.0);
        prop_assert!(b2.lower <= b1.lower + 1e-12);
        prop_assert!(b2.upper <= b1.upper + 1e-12);
    }

    #[test]
    fn single_summand_bounds_are_exact(k in 0.2f64..3.0, beta in 1.0f64..4.0, gamma in 0.3f64..4.0, x in 0.01f64..10.0) {
        let b = sum_tail_bounds(&[gamma], k, beta, x).unwrap();
        prop_assert!((b.lower - b.upper).abs() <= 1e-12 * b.lower.abs().max(1.0));
    }
}
