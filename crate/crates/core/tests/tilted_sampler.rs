use lighttail::tilting::{log_tilted_mass_below, make_tilted_sampler, sample_tilted, tune_proposal, TiltedSampler};
use lighttail::{GammaWeibullModel, QuadratureSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn draws(sampler: &mut TiltedSampler, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| sample_tilted(sampler, &mut rng).unwrap()).collect()
}

/// Kolmogorov distance between the empirical law and the tilted CDF, evaluated on a
/// grid of quantile-like points taken from the sample itself.
fn ks_on_grid(model: &GammaWeibullModel, sampler: &TiltedSampler, mut sample: Vec<f64>) -> f64 {
    let spec = QuadratureSpec::default();
    sample.sort_by(f64::total_cmp);
    let n = sample.len();
    let mut worst = 0.0f64;
    for i in (0..n).step_by(n / 400) {
        let u = sample[i];
        let cdf = (log_tilted_mass_below(model, sampler.theta, u, &spec).unwrap() - sampler.log_mgf).exp();
        let below = i as f64 / n as f64;
        let upto = (i + 1) as f64 / n as f64;
        worst = worst.max((cdf - below).abs()).max((cdf - upto).abs());
    }
    worst
}

#[test]
fn sampler_matches_tilted_cdf() {
    let n = 40_000;
    // 1.63/√n is the 1% Kolmogorov critical value
    let critical = 1.63 / (n as f64).sqrt();
    for (seed, &(beta, gamma, y0)) in [(2.0, 2.0, 5.0), (1.5, 1.5, 8.0), (3.0, 0.7, 4.0), (2.0, 4.0, 3.0)].iter().enumerate() {
        let model = GammaWeibullModel::new(1.0, beta, gamma).unwrap();
        let mut sampler = make_tilted_sampler(&model, y0, 1).unwrap();
        let sample = draws(&mut sampler, n, seed as u64);
        let d = ks_on_grid(&model, &sampler, sample);
        assert!(d < critical, "beta={beta} gamma={gamma} y0={y0}: D={d:.4} >= {critical:.4}");
    }
}

#[test]
fn tuned_sampler_matches_tilted_cdf_and_is_no_worse() {
    let model = GammaWeibullModel::new(0.7, 2.5, 2.0).unwrap();
    let base = make_tilted_sampler(&model, 24.0, 3).unwrap();
    let mut tuned = tune_proposal(&base).unwrap();
    assert!(tuned.log_expected_proposals() <= base.log_expected_proposals() + 1e-12);
    let n = 40_000;
    let sample = draws(&mut tuned, n, 77);
    assert!(ks_on_grid(&model, &tuned, sample) < 1.63 / (n as f64).sqrt());
}

#[test]
fn envelope_never_violated_and_acceptance_matches_expectation() {
    for &(beta, gamma, y0) in &[(1.2, 1.2, 6.0), (2.0, 2.0, 2.0), (4.0, 1.0, 3.0), (2.0, 0.5, 5.0)] {
        let model = GammaWeibullModel::new(1.0, beta, gamma).unwrap();
        let mut sampler = make_tilted_sampler(&model, y0, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100_000 {
            sample_tilted(&mut sampler, &mut rng).expect("envelope must hold");
        }
        // accepted / proposed should approach 1 / E[#proposals]
        let expected = (-sampler.log_expected_proposals()).exp();
        let rate = sampler.acceptance_rate();
        assert!((rate / expected - 1.0).abs() < 0.02, "beta={beta}: rate {rate} vs {expected}");
    }
}
