//! Brute-force optimum on a discretized covariate.
//!
//! The bounded design class becomes a box-constrained simplex
//! `{0 ≤ w_i ≤ p_i, Σ w_i = α}` over bin midpoints. Filling the bins with the
//! largest sensitivity is the linear maximizer over that polytope, so its
//! fixed points are exactly the discrete optima.

use serde::Serialize;

use crate::dist::CovariateDistribution;
use crate::error::{Error, Result};
use crate::solver::solve_optimal;

pub const DEFAULT_COVERAGE: f64 = 0.99999;
pub const DEFAULT_BINS: usize = 2000;
pub const MIN_BINS: usize = 100;
pub const MAX_FILL_ITERATIONS: usize = 500;
pub const MAX_ASCENT_ITERATIONS: usize = 200_000;
/// Relative sensitivity spread at which the exchange stops.
pub const EXCHANGE_TOLERANCE: f64 = 1e-10;
/// Relative tolerance on d shared with the acceptance check.
pub const DET_TOLERANCE: f64 = 2e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretizedProblem {
    /// Bin midpoints.
    pub points: Vec<f64>,
    /// Bin edges, one more than `points`.
    pub edges: Vec<f64>,
    /// Bin probabilities; they sum to 1.
    pub caps: Vec<f64>,
    pub alpha: f64,
    pub beta1: f64,
}

impl DiscretizedProblem {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn cell_width(&self) -> f64 {
        (self.edges[self.edges.len() - 1] - self.edges[0]) / self.len() as f64
    }

    /// `[m0, m1, m2]` of the weights, and `d = m0 m2 - m1²`.
    pub fn moments(&self, w: &[f64]) -> ([f64; 3], f64) {
        let mut m = [0.0; 3];
        for ((&x, &wi), e) in self.points.iter().zip(w).zip(self.exp_weights()) {
            let t = wi * e;
            m[0] += t;
            m[1] += t * x;
            m[2] += t * x * x;
        }
        (m, det(&m))
    }

    fn exp_weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(move |x| (self.beta1 * x).exp())
    }

    /// Per-bin sensitivity under weights `w`.
    pub fn sensitivities(&self, w: &[f64]) -> Vec<f64> {
        let (m, d) = self.moments(w);
        self.points
            .iter()
            .zip(self.exp_weights())
            .map(|(&x, e)| {
                let c = x - m[1] / m[0];
                e * (m[0] * c * c + d / m[0]) / d
            })
            .collect()
    }

    /// Caps filled in decreasing order of `score` until mass α; the marginal
    /// bin is filled fractionally.
    fn fill(&self, score: &[f64]) -> Vec<f64> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&i, &j| score[j].total_cmp(&score[i]).then(i.cmp(&j)));
        let mut w = vec![0.0; self.len()];
        let mut left = self.alpha;
        for i in order {
            if left <= 0.0 {
                break;
            }
            let take = self.caps[i].min(left);
            w[i] = take;
            left -= take;
        }
        w
    }
}

fn det(m: &[f64; 3]) -> f64 {
    m[0] * m[2] - m[1] * m[1]
}

/// Equal-width bins over the support; infinite ends are cut at the central
/// `coverage` quantiles and the caps renormalized.
pub fn discretize(
    dist: &CovariateDistribution,
    n: usize,
    coverage: f64,
    alpha: f64,
    beta1: f64,
) -> Result<DiscretizedProblem> {
    if n < MIN_BINS {
        return Err(Error::Domain(format!("need at least {MIN_BINS} bins, got {n}")));
    }
    if !(coverage > 0.0 && coverage < 1.0) {
        return Err(Error::Domain(format!("coverage {coverage} outside (0, 1)")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha {alpha} outside (0, 1]")));
    }
    dist.validate()?;
    let tail = (1.0 - coverage) / 2.0;
    let lo = match dist.ess_inf() {
        v if v.is_finite() => v,
        _ => dist.quantile(tail)?,
    };
    let hi = match dist.ess_sup() {
        v if v.is_finite() => v,
        _ => dist.quantile(1.0 - tail)?,
    };
    let h = (hi - lo) / n as f64;
    let edges: Vec<f64> = (0..=n)
        .map(|i| if i == n { hi } else { lo + h * i as f64 })
        .collect();
    let points = edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect();
    let mut caps: Vec<f64> = edges
        .windows(2)
        .map(|e| (dist.cdf(e[1]) - dist.cdf(e[0])).max(0.0))
        .collect();
    let total: f64 = caps.iter().sum();
    caps.iter_mut().for_each(|p| *p /= total);
    Ok(DiscretizedProblem {
        points,
        edges,
        caps,
        alpha,
        beta1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceResult {
    pub weights: Vec<f64>,
    /// `ln d`; the intercept only adds `2 β₀`.
    pub log_det: f64,
    pub d: f64,
    /// Smallest sensitivity over bins carrying weight.
    pub threshold: f64,
    pub iterations: usize,
    /// True when greedy filling cycled and the exchange fallback ran.
    pub used_ascent: bool,
    /// Maximal runs of weighted bins as `[lower edge, upper edge]`.
    pub active_runs: Vec<(f64, f64)>,
}

fn active_set(w: &[f64]) -> Vec<usize> {
    w.iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, _)| i)
        .collect()
}

fn active_runs(problem: &DiscretizedProblem, w: &[f64]) -> Vec<(f64, f64)> {
    let mut runs: Vec<(f64, f64)> = Vec::new();
    let mut prev: Option<usize> = None;
    for i in active_set(w) {
        match (prev, runs.last_mut()) {
            (Some(p), Some(run)) if p + 1 == i => run.1 = problem.edges[i + 1],
            _ => runs.push((problem.edges[i], problem.edges[i + 1])),
        }
        prev = Some(i);
    }
    runs
}

/// Worst breach of the discrete optimality condition relative to the
/// threshold `s = min ψ` on the active set, and `s` itself.
fn condition_gap(problem: &DiscretizedProblem, w: &[f64]) -> (f64, f64) {
    let psi = problem.sensitivities(w);
    let partial = (0..w.len())
        .filter(|&i| w[i] > 0.0 && w[i] < problem.caps[i])
        .count();
    let mut on = f64::INFINITY;
    let mut off = f64::NEG_INFINITY;
    for (i, &p) in psi.iter().enumerate() {
        if w[i] > 0.0 {
            on = on.min(p);
        }
        // a single marginal bin sits at the threshold; several partial bins
        // must all tie with it
        let unused = if partial <= 1 { w[i] == 0.0 } else { w[i] < problem.caps[i] };
        if unused {
            off = off.max(p);
        }
    }
    (((off - on) / on).max(0.0), on)
}

fn finish(
    problem: &DiscretizedProblem,
    weights: Vec<f64>,
    iterations: usize,
    used_ascent: bool,
) -> BruteForceResult {
    let (_, d) = problem.moments(&weights);
    let (_, threshold) = condition_gap(problem, &weights);
    BruteForceResult {
        active_runs: active_runs(problem, &weights),
        log_det: d.ln(),
        d,
        threshold,
        iterations,
        used_ascent,
        weights,
    }
}

/// Discrete optimum by repeated greedy filling, with a vertex-exchange
/// ascent on d once the filled sets start to cycle.
pub fn brute_force_optimal(problem: &DiscretizedProblem) -> Result<BruteForceResult> {
    let total: f64 = problem.caps.iter().sum();
    if (total - 1.0).abs() > 1e-10 || problem.caps.len() != problem.points.len() {
        return Err(Error::Domain("bin caps must sum to 1".into()));
    }
    if problem.alpha >= 1.0 {
        let w = problem.caps.clone();
        return Ok(finish(problem, w, 0, false));
    }

    let mut w: Vec<f64> = problem.caps.iter().map(|p| p * problem.alpha).collect();
    let mut best_fill = w.clone();
    let mut best_d = f64::NEG_INFINITY;
    let mut seen: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut cycle: Option<(Vec<usize>, f64, Vec<usize>, f64)> = None;
    for it in 1..=MAX_FILL_ITERATIONS {
        let next = problem.fill(&problem.sensitivities(&w));
        let set = active_set(&next);
        let (_, d) = problem.moments(&next);
        if d > best_d {
            best_d = d;
            best_fill.clone_from(&next);
        }
        if set == active_set(&w) && it > 1 {
            return Ok(finish(problem, next, it, false));
        }
        if let Some((old, old_d)) = seen.iter().find(|(s, _)| *s == set) {
            let (last, last_d) = seen.last().cloned().unwrap();
            if *old != last {
                cycle = Some((old.clone(), *old_d, last, last_d));
            } else {
                cycle = Some((set.clone(), d, last, last_d));
            }
            break;
        }
        seen.push((set, d));
        w = next;
    }

    // Vertex exchange from the best filled design seen: move mass from the
    // weakest active bin to the strongest open one, with the step maximizing
    // d exactly (d is quadratic along the move).
    let mut w = best_fill;
    let mut iterations = seen.len();
    let mut gap = f64::INFINITY;
    for _ in 0..MAX_ASCENT_ITERATIONS {
        iterations += 1;
        let psi = problem.sensitivities(&w);
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for k in 0..w.len() {
            if w[k] > 0.0 && (i == usize::MAX || psi[k] < psi[i]) {
                i = k;
            }
            if w[k] < problem.caps[k] && (j == usize::MAX || psi[k] > psi[j]) {
                j = k;
            }
        }
        gap = (psi[j] - psi[i]) / psi[i];
        if gap <= EXCHANGE_TOLERANCE {
            break;
        }
        let (m, _) = problem.moments(&w);
        let v = |k: usize| {
            let x = problem.points[k];
            let e = (problem.beta1 * x).exp();
            [e, e * x, e * x * x]
        };
        let (vi, vj) = (v(i), v(j));
        let dm = [vj[0] - vi[0], vj[1] - vi[1], vj[2] - vi[2]];
        // d(t) = d(w) + b t + a t²
        let a = dm[0] * dm[2] - dm[1] * dm[1];
        let b = m[0] * dm[2] + m[2] * dm[0] - 2.0 * m[1] * dm[1];
        let t_max = w[i].min(problem.caps[j] - w[j]);
        let t = if a < 0.0 { (-b / (2.0 * a)).clamp(0.0, t_max) } else { t_max };
        if t <= 0.0 {
            break;
        }
        if t == t_max && t == w[i] {
            w[j] += w[i];
            w[i] = 0.0;
        } else {
            w[i] -= t;
            w[j] += t;
        }
    }
    if gap <= 1e-6 {
        return Ok(finish(problem, w, iterations, true));
    }
    let (first_set, first_log_det, second_set, second_log_det) =
        cycle.map(|(a, da, b, db)| (a, da.ln(), b, db.ln())).unwrap_or_default();
    Err(Error::CycleDetected {
        first_set,
        first_log_det,
        second_set,
        second_log_det,
    })
}

/// Analytic optimum against the brute force on `bins` cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub alpha: f64,
    pub beta1: f64,
    pub bins: usize,
    pub d_analytic: f64,
    pub d_oracle: f64,
    pub d_relative_error: f64,
    pub analytic_endpoints: Vec<f64>,
    pub oracle_endpoints: Vec<f64>,
    pub max_endpoint_error: f64,
    pub cell_width: f64,
    pub used_ascent: bool,
    pub passed: bool,
}

/// Solves both ways and compares d (relative [`DET_TOLERANCE`]) and
/// the finite interval endpoints (one grid cell).
pub fn oracle_check(
    dist: &CovariateDistribution,
    alpha: f64,
    beta1: f64,
    bins: usize,
) -> Result<OracleCheck> {
    let analytic = solve_optimal(dist, alpha, beta1)?;
    let problem = discretize(dist, bins, DEFAULT_COVERAGE, alpha, beta1)?;
    let brute = brute_force_optimal(&problem)?;
    let d_analytic = analytic.moments()?.d;
    let d_rel = (brute.d - d_analytic).abs() / d_analytic;

    let (lo, hi) = (problem.edges[0], problem.edges[problem.len()]);
    let cell = problem.cell_width();
    // endpoints on the support boundary or beyond the truncation carry no information
    let interior = |x: f64| x.is_finite() && x > lo + 0.5 * cell && x < hi - 0.5 * cell;
    let analytic_endpoints: Vec<f64> = analytic
        .support()
        .intervals()
        .iter()
        .flat_map(|iv| [iv.lower, iv.upper])
        .filter(|&x| interior(x))
        .collect();
    let oracle_endpoints: Vec<f64> = brute
        .active_runs
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .filter(|&x| interior(x))
        .collect();
    let max_endpoint_error = if analytic_endpoints.len() == oracle_endpoints.len() {
        analytic_endpoints
            .iter()
            .zip(&oracle_endpoints)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    Ok(OracleCheck {
        alpha,
        beta1,
        bins,
        d_analytic,
        d_oracle: brute.d,
        d_relative_error: d_rel,
        passed: d_rel <= DET_TOLERANCE && max_endpoint_error <= cell * (1.0 + 1e-9),
        analytic_endpoints,
        oracle_endpoints,
        max_endpoint_error,
        cell_width: cell,
        used_ascent: brute.used_ascent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unif() -> CovariateDistribution {
        CovariateDistribution::uniform(0.0, 1.0).unwrap()
    }

    #[test]
    fn uniform_caps_are_equal() {
        let p = discretize(&unif(), 1000, DEFAULT_COVERAGE, 0.1, -1.0).unwrap();
        assert!(p.caps.iter().all(|c| (c - 1e-3).abs() < 1e-15));
        assert!((p.points[0] - 0.0005).abs() < 1e-15);
    }

    #[test]
    fn exponential_truncation() {
        let e = CovariateDistribution::exponential(1.0).unwrap();
        let p = discretize(&e, 500, 0.9999, 0.1, -1.0).unwrap();
        assert_eq!(p.edges[0], 0.0);
        assert!((p.edges[500] - 9.903487552536127).abs() < 1e-9);
        assert!((p.caps.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_too_few_bins() {
        assert!(discretize(&unif(), 99, DEFAULT_COVERAGE, 0.1, -1.0).is_err());
    }

    #[test]
    fn full_mass_takes_every_cap() {
        let p = discretize(&unif(), 200, DEFAULT_COVERAGE, 1.0, -1.0).unwrap();
        let r = brute_force_optimal(&p).unwrap();
        assert_eq!(r.weights, p.caps);
    }

    #[test]
    fn uniform_table_row() {
        let p = discretize(&unif(), 2000, DEFAULT_COVERAGE, 0.1, -4.0).unwrap();
        let r = brute_force_optimal(&p).unwrap();
        assert!((r.weights.iter().sum::<f64>() - 0.1).abs() < 1e-12);
        assert_eq!(r.active_runs.len(), 2);
        let ends = [r.active_runs[0].1, r.active_runs[1].0, r.active_runs[1].1];
        for (got, want) in ends.iter().zip([0.0458, 0.4951, 0.5493]) {
            assert!((got - want).abs() < 1e-3, "{got} vs {want}");
        }
    }

    #[test]
    fn flat_slope_is_symmetric() {
        let p = discretize(&unif(), 2000, DEFAULT_COVERAGE, 0.1, 0.0).unwrap();
        let r = brute_force_optimal(&p).unwrap();
        assert_eq!(r.active_runs.len(), 2);
        let cell = p.cell_width();
        assert!(r.active_runs[0].0 == 0.0 && (r.active_runs[0].1 - 0.05).abs() <= cell);
        assert!((r.active_runs[1].0 - 0.95).abs() <= cell && r.active_runs[1].1 == 1.0);
        let left: f64 = r.weights[..1000].iter().sum();
        assert!((left - 0.05).abs() < 1e-9, "{:?}", r.active_runs);
    }

    #[test]
    fn check_matches_analytic() {
        let e = CovariateDistribution::exponential(1.0).unwrap();
        let c = oracle_check(&e, 0.1, -0.5, 2000).unwrap();
        assert!(c.passed, "{c:?}");
    }
}
