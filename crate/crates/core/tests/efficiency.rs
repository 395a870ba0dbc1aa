mod common;

use common::*;
use subopt::efficiency::{d_efficiency, efficiency_against, misspecification_efficiency};
use subopt::solver::{critical_alpha, solve_optimal};
use subopt::{CovariateDistribution, Heuristic};

fn lattice() -> Vec<(f64, f64)> {
    let alphas = (0..10).map(|i| 0.01 + 0.89 * i as f64 / 9.0);
    alphas
        .flat_map(|a| (0..10).map(move |j| (a, -8.0 + 7.9 * j as f64 / 9.0)))
        .collect()
}

#[test]
fn heuristic_efficiencies_are_bounded_on_the_lattice() {
    for dist in [exp1(), unif01()] {
        for (alpha, beta1) in lattice() {
            let opt = solve_optimal(&dist, alpha, beta1).unwrap();
            for h in Heuristic::ALL {
                let e = efficiency_against(&h.build(&dist, alpha).unwrap(), &opt, beta1).unwrap();
                assert!(e <= 1.0 + 1e-10, "{dist:?} {alpha} {beta1} {}: {e}", h.label());
                if h == Heuristic::UniformRandom {
                    assert!(e >= alpha, "{dist:?} {alpha} {beta1}: {e} < alpha");
                }
            }
        }
    }
}

#[test]
fn misspecified_optimum_is_bounded_and_exact_at_truth() {
    let d = exp1();
    for alpha in [0.01, 0.1, 0.3] {
        for nominal in [-4.0, -2.0, -1.0] {
            for truth in [-6.0, -3.0, -1.5, -1.0, -0.5] {
                let e = misspecification_efficiency(&d, alpha, nominal, truth).unwrap();
                assert!(e <= 1.0 + 1e-10 && e > 0.0, "{alpha} {nominal} {truth}: {e}");
            }
            let e = misspecification_efficiency(&d, alpha, nominal, nominal).unwrap();
            assert!((e - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn one_sided_is_fully_efficient_exactly_above_critical_alpha() {
    for dist in [exp1(), unif01()] {
        for beta1 in [-8.0, -6.0, -4.0] {
            let a_star = critical_alpha(&dist, beta1).unwrap();
            let os = |a: f64| d_efficiency(&Heuristic::OneSided.build(&dist, a).unwrap(), &dist, a, beta1).unwrap();
            for above in [a_star + 0.01, a_star + 0.05, 0.95] {
                if above < 1.0 && above > a_star {
                    assert!((os(above) - 1.0).abs() < 1e-8, "{dist:?} {beta1} {above}: {}", os(above));
                }
            }
            if a_star > 0.02 {
                let below = a_star - 0.01;
                assert!(os(below) < 1.0 - 1e-8, "{dist:?} {beta1} {below}: {}", os(below));
            }
        }
    }
}

#[test]
fn efficiency_is_location_scale_invariant() {
    for dist in [exp1(), unif01()] {
        for (alpha, beta1) in [(0.1, -1.0), (0.3, -4.0), (0.01, -0.5)] {
            for (a, b) in [(0.5, 0.0), (2.0, 0.0), (0.5, 1.25), (2.0, -0.75)] {
                let moved = dist.transformed(a, b).unwrap();
                for h in Heuristic::ALL {
                    let e0 = d_efficiency(&h.build(&dist, alpha).unwrap(), &dist, alpha, beta1).unwrap();
                    let e1 = d_efficiency(&h.build(&moved, alpha).unwrap(), &moved, alpha, beta1 / a).unwrap();
                    assert!((e0 - e1).abs() < 1e-8, "{dist:?} {a} {b} {}: {e0} vs {e1}", h.label());
                }
            }
        }
    }
}

fn heuristic_eff(h: Heuristic, dist: &CovariateDistribution, alpha: f64, beta1: f64) -> f64 {
    d_efficiency(&h.build(dist, alpha).unwrap(), dist, alpha, beta1).unwrap()
}

#[test]
fn steep_slope_limits() {
    // all three limits are reached by β₁/λ = -50 once the lower tail is
    // wide against 1/|β₁|, which α = 0.3 gives
    let d = exp1();
    let alpha = 0.3;
    assert!((heuristic_eff(Heuristic::UniformRandom, &d, alpha, -50.0) - alpha).abs() < 0.02);
    assert!((heuristic_eff(Heuristic::OneSided, &d, alpha, -50.0) - 1.0).abs() < 0.02);
    assert!((heuristic_eff(Heuristic::TwoSided, &d, alpha, -50.0) - 1.0).abs() < 0.02);

    // at α = 0.1 the two-sided lower tail holds mass α/2 only, so it still
    // climbs between -50 and -200
    let alpha = 0.1;
    assert!((heuristic_eff(Heuristic::UniformRandom, &d, alpha, -50.0) - alpha).abs() < 0.02);
    assert!((heuristic_eff(Heuristic::OneSided, &d, alpha, -50.0) - 1.0).abs() < 0.02);
    let ts: Vec<f64> = [-50.0, -100.0, -200.0]
        .iter()
        .map(|&b| heuristic_eff(Heuristic::TwoSided, &d, alpha, b))
        .collect();
    assert!(ts[0] < ts[1] && ts[1] < ts[2], "{ts:?}");
    assert!((ts[2] - 1.0).abs() < 0.02, "{ts:?}");
}

#[test]
fn uniform_random_efficiency_is_unimodal_in_slope() {
    // rises to a single interior maximum, then decays towards α
    let d = exp1();
    let e: Vec<f64> = (0..80)
        .map(|i| heuristic_eff(Heuristic::UniformRandom, &d, 0.1, -8.0 + 0.1 * i as f64))
        .collect();
    let peak = e.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert!(peak > 0 && peak < e.len() - 1);
    assert!(e[..=peak].windows(2).all(|w| w[0] <= w[1] + 1e-12));
    assert!(e[peak..].windows(2).all(|w| w[0] + 1e-12 >= w[1]));
}
