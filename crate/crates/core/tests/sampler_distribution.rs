use statrs::distribution::{ContinuousCDF, Normal};

use squeezed_phase::sampler::{sample_batch, NormalStream};
use squeezed_phase::StateModel;

/// Two-sided Kolmogorov-Smirnov statistic against `cdf`.
fn ks_statistic(mut x: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, v)| {
            let f = cdf(*v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

#[test]
fn samples_follow_the_phase_dependent_normal() {
    // asymptotic KS critical value at alpha = 1e-3
    let m = 100_000;
    let critical = 1.949 / (m as f64).sqrt();
    let mut pick = NormalStream::new(2024, 9);
    for case in 0..20u64 {
        let r = 0.05 + 1.95 * pick.uniform();
        let eta = 0.5 + 0.5 * pick.uniform();
        let phi = std::f64::consts::FRAC_PI_2 * pick.uniform();
        let vars = StateModel::new(r, eta).unwrap().variances();
        let batch = sample_batch(&vars, phi, m, 1000 + case).unwrap();
        let normal = Normal::new(0.0, vars.at(phi).sqrt()).unwrap();
        let d = ks_statistic(batch.samples, |x| normal.cdf(x));
        assert!(
            d < critical,
            "case {case}: D = {d}, r={r} eta={eta} phi={phi}"
        );
    }
}

#[test]
fn wrong_variance_is_detected() {
    let vars = StateModel::pure(1.0).unwrap().variances();
    let batch = sample_batch(&vars, 0.3, 100_000, 5).unwrap();
    let off = Normal::new(0.0, 1.05 * vars.at(0.3).sqrt()).unwrap();
    let d = ks_statistic(batch.samples, |x| off.cdf(x));
    assert!(d > 1.949 / (100_000f64).sqrt());
}
