mod common;

use common::*;
use subopt::oracle::{brute_force_optimal, discretize, DEFAULT_COVERAGE};
use subopt::solver::solve_optimal;
use subopt::tables::{EXPONENTIAL_ALPHAS, EXPONENTIAL_SLOPES, UNIFORM_ALPHAS, UNIFORM_SLOPES};
use subopt::CovariateDistribution;

const BINS: usize = 2000;

fn table_lattice() -> Vec<(CovariateDistribution, f64, f64)> {
    let mut cases = Vec::new();
    for &a in &EXPONENTIAL_ALPHAS {
        for &b in &EXPONENTIAL_SLOPES {
            cases.push((exp1(), a, b));
        }
    }
    for &a in &UNIFORM_ALPHAS {
        for &b in &UNIFORM_SLOPES {
            cases.push((unif01(), a, b));
        }
    }
    cases
}

#[test]
fn discrete_optimum_never_beats_the_continuum_by_more_than_grid_error() {
    for (dist, alpha, beta1) in table_lattice() {
        let analytic = solve_optimal(&dist, alpha, beta1).unwrap().moments().unwrap().d.ln();
        let problem = discretize(&dist, BINS, DEFAULT_COVERAGE, alpha, beta1).unwrap();
        let brute = brute_force_optimal(&problem).unwrap();
        assert!(brute.log_det <= analytic + 2e-3, "{dist:?} {alpha} {beta1}: {} > {analytic}", brute.log_det);
    }
}

#[test]
fn active_set_has_at_most_two_runs() {
    for (dist, alpha, beta1) in table_lattice() {
        let problem = discretize(&dist, BINS, DEFAULT_COVERAGE, alpha, beta1).unwrap();
        let brute = brute_force_optimal(&problem).unwrap();
        let runs = &brute.active_runs;
        assert!(!runs.is_empty() && runs.len() <= 2, "{dist:?} {alpha} {beta1}: {runs:?}");
        if beta1 == 0.0 {
            let (lo, hi) = (problem.edges[0], problem.edges[problem.len()]);
            assert_eq!(runs.len(), 2, "{runs:?}");
            assert_eq!(runs[0].0, lo);
            assert_eq!(runs[1].1, hi);
        }
    }
}

#[test]
fn fixed_point_satisfies_the_discrete_condition() {
    for (dist, alpha, beta1) in table_lattice() {
        let problem = discretize(&dist, BINS, DEFAULT_COVERAGE, alpha, beta1).unwrap();
        let brute = brute_force_optimal(&problem).unwrap();
        let psi = problem.sensitivities(&brute.weights);
        let (mut full, mut empty) = (f64::INFINITY, f64::NEG_INFINITY);
        for (i, &p) in psi.iter().enumerate() {
            let (w, cap) = (brute.weights[i], problem.caps[i]);
            if w >= cap * (1.0 - 1e-12) && cap > 0.0 {
                full = full.min(p);
            } else if w == 0.0 {
                empty = empty.max(p);
            }
        }
        let mass: f64 = brute.weights.iter().sum();
        assert!((mass - alpha).abs() < 1e-10, "mass {mass}");
        assert!(full >= empty - 1e-6 * brute.threshold, "{dist:?} {alpha} {beta1}: {full} < {empty}");
    }
}
