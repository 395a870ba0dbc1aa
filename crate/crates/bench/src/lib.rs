//! Shared fixtures for the benchmarks in `benches/`.

use subopt::CovariateDistribution;

/// `(label, distribution, alpha, beta1)` covering the three optimum shapes.
pub fn representative_cases() -> Vec<(&'static str, CovariateDistribution, f64, f64)> {
    let exp = CovariateDistribution::exponential(1.0).expect("valid rate");
    let unif = CovariateDistribution::uniform(0.0, 1.0).expect("valid bounds");
    vec![
        ("exp_two_intervals", exp.clone(), 0.1, -0.5),
        ("exp_single_interval", exp, 0.75, -4.0),
        ("unif_truncated", unif.clone(), 0.1, -2.0),
        ("unif_two_intervals", unif, 0.1, -4.0),
    ]
}
