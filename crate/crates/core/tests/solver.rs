mod common;

use common::*;
use subopt::design::log_det;
use subopt::solver::{solve_optimal, solve_two_intervals, transform_design};
use subopt::{CovariateDistribution, Heuristic, Scenario};

fn lattice_alphas() -> Vec<f64> {
    (0..10).map(|i| 0.01 + 0.89 * i as f64 / 9.0).collect()
}

fn lattice_ratios() -> Vec<f64> {
    (0..10).map(|i| -8.0 + 7.9 * i as f64 / 9.0).collect()
}

/// Exponential(1) uses ratios as slopes; Uniform[0,1] has width 1.
fn both() -> [CovariateDistribution; 2] {
    [exp1(), unif01()]
}

fn endpoints(design: &subopt::SubsamplingDesign) -> Vec<f64> {
    design.support().unwrap().finite_endpoints()
}

#[test]
fn verifier_passes_on_the_whole_lattice() {
    for dist in both() {
        for &a in &lattice_alphas() {
            for &r in &lattice_ratios() {
                let res = solve_optimal(&dist, a, r).unwrap_or_else(|e| panic!("{dist:?} {a} {r}: {e}"));
                assert!(res.verified && res.max_violation < 1e-6, "{dist:?} {a} {r}: {}", res.max_violation);
                assert!((res.design.mass() - a).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn two_interval_root_is_unique_from_perturbed_starts() {
    let cases = [(exp1(), 0.1, -0.5), (exp1(), 0.3, -1.0), (unif01(), 0.1, -4.0), (exp1(), 0.01, -4.0)];
    for (dist, alpha, beta1) in cases {
        let base = solve_optimal(&dist, alpha, beta1).unwrap();
        let Scenario::TwoIntervals { a1, a2, a3 } = base.scenario else {
            panic!("expected two intervals at {alpha} {beta1}");
        };
        // offsets in units of each boundary's own scale: a1 and the right-interval width
        let w = a3 - a2;
        let perturb = [(0.02, -0.1, 0.1), (-0.03, 0.1, -0.1), (0.05, 0.0, 0.0), (0.0, -0.2, 0.2), (-0.01, 0.05, -0.15)];
        for (p1, p2, p3) in perturb {
            let start = [a1 * (1.0 + p1), a2 + p2 * w, (a3 + p3 * w).min(dist.ess_sup())];
            let r = solve_two_intervals(&dist, alpha, beta1, start)
                .unwrap_or_else(|e| panic!("{alpha} {beta1} {start:?}: {e}"));
            let Scenario::TwoIntervals { a1: b1, a2: b2, a3: b3 } = r.scenario else { unreachable!() };
            for (x, y) in [(a1, b1), (a2, b2), (a3, b3)] {
                assert!((x - y).abs() < 1e-8, "{alpha} {beta1}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn lower_boundary_stays_inside_support() {
    for dist in both() {
        for &a in &lattice_alphas() {
            for &r in &lattice_ratios() {
                let res = solve_optimal(&dist, a, r).unwrap();
                let first = match res.scenario {
                    Scenario::TwoIntervals { a1, .. } => a1,
                    Scenario::TwoIntervalsRightTruncated { a1, .. } => a1,
                    // the single lower tail starts at the infimum by construction
                    Scenario::SingleInterval { q } => q,
                };
                assert!(first > dist.ess_inf(), "{dist:?} {a} {r}: {first}");
            }
        }
    }
}

#[test]
fn small_alpha_intervals_straddle_the_two_point_optimum() {
    for beta1 in [-0.5, -1.0, -2.0] {
        for alpha in [0.01, 0.001] {
            let res = solve_optimal(&exp1(), alpha, beta1).unwrap();
            let Scenario::TwoIntervals { a2, a3, .. } = res.scenario else {
                panic!("{alpha} {beta1}: {:?}", res.scenario)
            };
            let x2 = -2.0 / beta1;
            assert!(a2 < x2 && x2 < a3, "{alpha} {beta1}: {a2} {x2} {a3}");
        }
    }
}

#[test]
fn equivariance_round_trip() {
    let cases = [(exp1(), 0.1, -0.5), (exp1(), 0.3, -2.0), (unif01(), 0.1, -4.0), (unif01(), 0.5, -8.0), (exp1(), 0.01, -1.0)];
    for (dist, alpha, beta1) in cases {
        let base = solve_optimal(&dist, alpha, beta1).unwrap();
        for (a, b) in [(0.5, 0.3), (-0.5, 1.0), (2.0, -1.5), (-2.0, 0.25)] {
            let moved = transform_design(&base.design, a, b).unwrap();
            let direct = solve_optimal(&moved.dist, alpha, beta1 / a).unwrap();
            let (x, y) = (endpoints(&moved), endpoints(&direct.design));
            assert_eq!(x.len(), y.len(), "{a} {b}: {x:?} vs {y:?}");
            for (p, q) in x.iter().zip(&y) {
                assert!((p - q).abs() < 1e-8 * (1.0 + p.abs()), "{a} {b}: {x:?} vs {y:?}");
            }
        }
    }
}

#[test]
fn uniform_reflection_matches_positive_slope() {
    let dist = CovariateDistribution::uniform(-1.0, 1.0).unwrap();
    let neg = solve_optimal(&dist, 0.2, -3.0).unwrap();
    let pos = solve_optimal(&dist, 0.2, 3.0).unwrap();
    let mut mirrored: Vec<f64> = endpoints(&neg.design).iter().map(|x| -x).collect();
    mirrored.sort_by(f64::total_cmp);
    let direct = endpoints(&pos.design);
    assert_eq!(mirrored.len(), direct.len());
    for (p, q) in mirrored.iter().zip(&direct) {
        assert!((p - q).abs() < 1e-9, "{mirrored:?} vs {direct:?}");
    }
}

#[test]
fn optimum_dominates_heuristics() {
    for dist in both() {
        for &a in &lattice_alphas() {
            for &r in &lattice_ratios() {
                let opt = solve_optimal(&dist, a, r).unwrap();
                let best = log_det(&opt.moments().unwrap(), 1.0).unwrap();
                for h in Heuristic::ALL {
                    let design = h.build(&dist, a).unwrap();
                    let ld = log_det(&design.moments(r).unwrap(), 1.0).unwrap();
                    assert!(best >= ld - 1e-12, "{dist:?} {a} {r} {}: {best} < {ld}", h.label());
                }
            }
        }
    }
}

#[test]
fn positive_uniform_example() {
    let res = solve_optimal(&unif01(), 0.1, 4.0).unwrap();
    let want = [0.45072, 0.50494, 0.95422];
    let got = endpoints(&res.design);
    assert_eq!(got.len(), 3, "{got:?}");
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-4, "{got:?}");
    }
}
