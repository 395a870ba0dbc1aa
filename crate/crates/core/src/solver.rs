//! Locally D-optimal bounded designs: regime dispatch, Newton solves of the
//! boundary equations, the equivalence-theorem check, crossover slopes,
//! critical proportions and location-scale equivariance.
//!
//! For a negative slope the optimal support is either two intervals
//! `(-∞, a1] ∪ [a2, a3]` on which the sensitivity is at least the threshold,
//! a variant of it whose right interval runs past the upper end of a bounded
//! covariate, or the single tail `(-∞, q_α]`. A zero slope gives two outer
//! tails. Positive slopes are handled by reflecting the covariate.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::design::{
    interval_probability, log_sensitivity, moments, sensitivity_critical_points, Interval,
    IntervalSet, MomentVector, SubsamplingDesign,
};
use crate::dist::CovariateDistribution;
use crate::error::{Error, Result};

/// Residual sup-norm at which a Newton solve is declared converged.
pub const NEWTON_TOLERANCE: f64 = 1e-11;
/// Residual sup-norm accepted when no damped step can reduce it further.
pub const NEWTON_STAGNATION_TOLERANCE: f64 = 1e-9;
pub const NEWTON_MAX_ITERATIONS: usize = 100;
pub const NEWTON_MAX_HALVINGS: usize = 30;
/// Relative central-difference step for the Jacobian.
pub const JACOBIAN_STEP: f64 = 1e-6;

/// Probability below which an interval of a Newton solution counts as
/// collapsed (the solve degenerated to the single-interval design).
pub const COLLAPSE_MASS: f64 = 1e-9;

pub const DEFAULT_VERIFY_GRID: usize = 4001;
/// Relative tolerance on `ψ` against the threshold in the equivalence check.
pub const VERIFY_TOLERANCE: f64 = 1e-6;
/// Tail levels used to truncate an unbounded covariate range in the check.
pub const VERIFY_TAIL_LEVEL: f64 = 1e-6;

/// Tolerance on the single-interval check that drives the bisections in
/// [`crossover_slope`] and [`critical_alpha`].
pub const TRANSITION_VERIFY_TOLERANCE: f64 = 1e-10;
pub const TRANSITION_TOLERANCE: f64 = 1e-5;
pub const CROSSOVER_SEARCH_LOWER: f64 = -1e4;

/// Shape of the optimal support.
///
/// Boundaries are in the original covariate scale. For a negative slope
/// `TwoIntervals` means `(-∞, a1] ∪ [a2, a3]`; for a positive slope it means
/// `[a1, a2] ∪ [a3, ∞)`. `TwoIntervalsRightTruncated` is always
/// `(-∞, a1] ∪ [a2, ∞)`: the outer boundary lies beyond the covariate's
/// support (or the slope is zero). `SingleInterval` is `(-∞, q]` for a
/// negative slope and `[q, ∞)` for a positive one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Scenario {
    TwoIntervals { a1: f64, a2: f64, a3: f64 },
    TwoIntervalsRightTruncated { a1: f64, a2: f64 },
    SingleInterval { q: f64 },
}

impl Scenario {
    pub fn label(&self) -> &'static str {
        match self {
            Scenario::TwoIntervals { .. } => "two_intervals",
            Scenario::TwoIntervalsRightTruncated { .. } => "two_intervals_right_truncated",
            Scenario::SingleInterval { .. } => "single_interval",
        }
    }

    /// Boundary point at which the threshold `s*` is read off.
    pub fn threshold_point(&self) -> f64 {
        match *self {
            Scenario::TwoIntervals { a1, .. } => a1,
            Scenario::TwoIntervalsRightTruncated { a1, .. } => a1,
            Scenario::SingleInterval { q } => q,
        }
    }

    /// Boundaries under `z = a x + b`; a negative scale reverses their order.
    fn transformed(&self, a: f64, b: f64) -> Scenario {
        let f = |x: f64| a * x + b;
        match *self {
            Scenario::TwoIntervals { a1, a2, a3 } if a > 0.0 => Scenario::TwoIntervals {
                a1: f(a1),
                a2: f(a2),
                a3: f(a3),
            },
            Scenario::TwoIntervals { a1, a2, a3 } => Scenario::TwoIntervals {
                a1: f(a3),
                a2: f(a2),
                a3: f(a1),
            },
            Scenario::TwoIntervalsRightTruncated { a1, a2 } if a > 0.0 => {
                Scenario::TwoIntervalsRightTruncated { a1: f(a1), a2: f(a2) }
            }
            Scenario::TwoIntervalsRightTruncated { a1, a2 } => {
                Scenario::TwoIntervalsRightTruncated { a1: f(a2), a2: f(a1) }
            }
            Scenario::SingleInterval { q } => Scenario::SingleInterval { q: f(q) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalDesignResult {
    pub alpha: f64,
    pub beta1: f64,
    pub design: SubsamplingDesign,
    pub scenario: Scenario,
    pub s_star: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub verified: bool,
    pub max_violation: f64,
}

impl OptimalDesignResult {
    pub fn support(&self) -> &IntervalSet {
        self.design
            .support()
            .expect("optimal designs are interval supported")
    }

    pub fn moments(&self) -> Result<MomentVector> {
        moments(&self.design, self.beta1)
    }
}

/// Outcome of the equivalence-theorem check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verification {
    pub verified: bool,
    pub max_violation: f64,
    pub points_checked: usize,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha {alpha} is not in (0, 1)")))
    }
}

// ---------------------------------------------------------------------------
// Equivalence check
// ---------------------------------------------------------------------------

fn check_range(dist: &CovariateDistribution) -> (f64, f64) {
    let lo = dist.ess_inf();
    let hi = dist.ess_sup();
    let lo = if lo.is_finite() {
        lo
    } else {
        dist.quantile(VERIFY_TAIL_LEVEL).expect("level in (0,1)")
    };
    let hi = if hi.is_finite() {
        hi
    } else {
        dist.quantile(1.0 - VERIFY_TAIL_LEVEL).expect("level in (0,1)")
    };
    (lo, hi)
}

/// Checks `ψ ≥ s*` on the support and `ψ < s*` off it, relative to `s*`.
///
/// The check covers a uniform grid over the covariate range (tails cut at
/// the `1e-6` quantiles), a second grid over the finite part of the design
/// support, every boundary point, and the stationary points of `ψ`, so no
/// interior dip of the sensitivity is missed.
pub fn verify_support(
    dist: &CovariateDistribution,
    support: &IntervalSet,
    beta1: f64,
    s_star: f64,
    grid_size: usize,
    tolerance: f64,
) -> Result<Verification> {
    verify_support_log(dist, support, beta1, s_star.ln(), grid_size, tolerance)
}

/// [`verify_support`] with the threshold given as `ln s*`, for slopes steep
/// enough that `s*` itself underflows.
pub fn verify_support_log(
    dist: &CovariateDistribution,
    support: &IntervalSet,
    beta1: f64,
    log_s: f64,
    grid_size: usize,
    tolerance: f64,
) -> Result<Verification> {
    let design = SubsamplingDesign {
        dist: dist.clone(),
        kind: crate::design::DesignKind::IntervalSupported {
            support: support.clone(),
        },
    };
    let m = moments(&design, beta1)?;
    let (lo, hi) = check_range(dist);
    let n = grid_size.max(2);

    let mut points: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    let ends = support.clipped(lo, hi).finite_endpoints();
    if let (Some(&first), Some(&last)) = (ends.first(), ends.last()) {
        let (a, b) = (lo.min(first), last);
        if b > a {
            points.extend((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64));
        }
    }
    points.extend(ends.iter().copied());
    points.extend(
        sensitivity_critical_points(&m, beta1)
            .into_iter()
            .filter(|x| *x >= lo && *x <= hi),
    );

    let mut worst: f64 = 0.0;
    for &x in &points {
        let r = log_sensitivity(x, &m, beta1)? - log_s;
        let violation = if support.contains(x) {
            -r.exp_m1()
        } else {
            r.exp_m1()
        };
        worst = worst.max(violation);
    }
    Ok(Verification {
        verified: worst < tolerance,
        max_violation: worst,
        points_checked: points.len(),
    })
}

/// Equivalence-theorem check of a solved (or hand-built) result.
pub fn verify_optimality(
    result: &OptimalDesignResult,
    dist: &CovariateDistribution,
    alpha: f64,
    beta1: f64,
    grid_size: usize,
) -> Result<Verification> {
    let support = result
        .design
        .support()
        .ok_or_else(|| Error::Domain("only interval-supported designs can be verified".into()))?;
    let mass_gap = (crate::design::mass(&result.design) - alpha).abs();
    let log_s = if result.s_star > 0.0 && result.s_star.is_finite() {
        result.s_star.ln()
    } else {
        log_sensitivity(
            result.scenario.threshold_point(),
            &moments(&result.design, beta1)?,
            beta1,
        )?
    };
    let mut v = verify_support_log(dist, support, beta1, log_s, grid_size, VERIFY_TOLERANCE)?;
    if mass_gap > 1e-8 {
        v.verified = false;
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// Newton machinery
// ---------------------------------------------------------------------------

struct NewtonOutcome<const N: usize> {
    x: [f64; N],
    residual: f64,
    iterations: usize,
}

fn sup_norm<const N: usize>(r: &[f64; N]) -> f64 {
    r.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

fn newton<const N: usize>(
    regime: &'static str,
    residual: impl Fn(&[f64; N]) -> Result<[f64; N]>,
    in_domain: impl Fn(&[f64; N]) -> bool,
    start: [f64; N],
) -> Result<NewtonOutcome<N>> {
    let fail = |res: f64, it: usize| Error::NoConvergence {
        regime,
        residual: res,
        iterations: it,
    };
    if !in_domain(&start) {
        return Err(fail(f64::INFINITY, 0));
    }
    let mut x = start;
    let mut r = residual(&x).map_err(|_| fail(f64::INFINITY, 0))?;
    let mut norm = sup_norm(&r);

    for iter in 0..NEWTON_MAX_ITERATIONS {
        if norm < NEWTON_TOLERANCE {
            return Ok(NewtonOutcome {
                x,
                residual: norm,
                iterations: iter,
            });
        }
        let mut jac = DMatrix::<f64>::zeros(N, N);
        for j in 0..N {
            let h = JACOBIAN_STEP * (1.0 + x[j].abs());
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let rp = residual(&xp).map_err(|_| fail(norm, iter))?;
            let rm = residual(&xm).map_err(|_| fail(norm, iter))?;
            for i in 0..N {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let rhs = -DVector::<f64>::from_column_slice(&r);
        let step = jac.lu().solve(&rhs).ok_or_else(|| fail(norm, iter))?;

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=NEWTON_MAX_HALVINGS {
            let mut cand = x;
            for i in 0..N {
                cand[i] += t * step[i];
            }
            if in_domain(&cand) {
                if let Ok(rc) = residual(&cand) {
                    let nc = sup_norm(&rc);
                    if nc.is_finite() && nc < norm {
                        accepted = Some((cand, rc, nc));
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, rc, nc)) => {
                x = cand;
                r = rc;
                norm = nc;
            }
            None if norm < NEWTON_STAGNATION_TOLERANCE => {
                return Ok(NewtonOutcome {
                    x,
                    residual: norm,
                    iterations: iter,
                });
            }
            None => return Err(fail(norm, iter)),
        }
    }
    if norm < NEWTON_TOLERANCE {
        Ok(NewtonOutcome {
            x,
            residual: norm,
            iterations: NEWTON_MAX_ITERATIONS,
        })
    } else {
        Err(fail(norm, NEWTON_MAX_ITERATIONS))
    }
}

fn support_of(pairs: &[(f64, f64)]) -> Result<IntervalSet> {
    IntervalSet::new(pairs.iter().map(|&(l, u)| Interval::new(l, u)).collect())
}

fn two_interval_support(a: &[f64; 3]) -> Result<IntervalSet> {
    support_of(&[(f64::NEG_INFINITY, a[0]), (a[1], a[2])])
}

fn two_tail_support(a: &[f64; 2]) -> Result<IntervalSet> {
    support_of(&[(f64::NEG_INFINITY, a[0]), (a[1], f64::INFINITY)])
}

/// Residuals of the three boundary equations: mass and equal sensitivity at
/// `a1`, `a2`, `a3`. The sensitivity equations are posed on `ln ψ`, which
/// removes the determinant and keeps the scale independent of α.
fn two_interval_residual(
    dist: &CovariateDistribution,
    alpha: f64,
    beta1: f64,
    a: &[f64; 3],
) -> Result<[f64; 3]> {
    let left = dist.segment_moments(f64::NEG_INFINITY, a[0], beta1)?;
    let right = dist.segment_moments(a[1], a[2], beta1)?;
    let m = MomentVector::new(left[0] + right[0], left[1] + right[1], left[2] + right[2]);
    if !(m.d > 0.0) {
        return Err(Error::SingularDesign(m.d));
    }
    let mass = interval_probability(dist, f64::NEG_INFINITY, a[0])
        + interval_probability(dist, a[1], a[2]);
    let lq = |x: f64| beta1 * x + m.quadratic(x).ln();
    Ok([mass - alpha, lq(a[0]) - lq(a[1]), lq(a[1]) - lq(a[2])])
}

fn two_tail_residual(
    dist: &CovariateDistribution,
    alpha: f64,
    beta1: f64,
    a: &[f64; 2],
) -> Result<[f64; 2]> {
    let left = dist.segment_moments(f64::NEG_INFINITY, a[0], beta1)?;
    let right = dist.segment_moments(a[1], f64::INFINITY, beta1)?;
    let m = MomentVector::new(left[0] + right[0], left[1] + right[1], left[2] + right[2]);
    if !(m.d > 0.0) {
        return Err(Error::SingularDesign(m.d));
    }
    let mass = interval_probability(dist, f64::NEG_INFINITY, a[0])
        + interval_probability(dist, a[1], f64::INFINITY);
    let lq = |x: f64| beta1 * x + m.quadratic(x).ln();
    Ok([mass - alpha, lq(a[0]) - lq(a[1])])
}

#[allow(clippy::too_many_arguments)]
fn build_result(
    dist: &CovariateDistribution,
    alpha: f64,
    beta1: f64,
    support: IntervalSet,
    scenario: Scenario,
    threshold_at: f64,
    residual_norm: f64,
    iterations: usize,
) -> Result<OptimalDesignResult> {
    let design = SubsamplingDesign::interval_supported(dist.clone(), support)?;
    let m = moments(&design, beta1)?;
    let s_star = log_sensitivity(threshold_at, &m, beta1)?.exp();
    let mut result = OptimalDesignResult {
        alpha,
        beta1,
        design,
        scenario,
        s_star,
        residual_norm,
        iterations,
        verified: false,
        max_violation: f64::INFINITY,
    };
    let v = verify_optimality(&result, dist, alpha, beta1, DEFAULT_VERIFY_GRID)?;
    result.verified = v.verified;
    result.max_violation = v.max_violation;
    Ok(result)
}

/// Newton solve of the two-interval system from an explicit start
/// `[a1, a2, a3]`, for `β₁ < 0`. The result is verified but may fail the
/// check if the start led to a spurious root.
pub fn solve_two_intervals(
    dist: &CovariateDistribution,
    alpha: f64,
    beta1: f64,
    start: [f64; 3],
) -> Result<OptimalDesignResult> {
    check_alpha(alpha)?;
    dist.check_slope(beta1)?;
    if !(beta1 < 0.0) {
        return Err(Error::Domain(format!(
            "the two-interval system needs a negative slope, got {beta1}"
        )));
    }
    let (inf, sup) = (dist.ess_inf(), dist.ess_sup());
    let out = newton(
        "two_intervals",
        |a| two_interval_residual(dist, alpha, beta1, a),
        |a| inf < a[0] && a[0] < a[1] && a[1] < a[2] && a[2] <= sup,
        start,
    )?;
    let a = out.x;
    let gap = interval_probability(dist, a[0], a[1]);
    let inner = interval_probability(dist, a[1], a[2]);
    if gap < COLLAPSE_MASS || inner < COLLAPSE_MASS {
        return Err(Error::Domain(format!(
            "two-interval solution collapsed (gap mass {gap:e}, inner mass {inner:e})"
        )));
    }
    build_result(
        dist,
        alpha,
        beta1,
        two_interval_support(&a)?,
        Scenario::TwoIntervals {
            a1: a[0],
            a2: a[1],
            a3: a[2],
        },
        a[0],
        out.residual,
        out.iterations,
    )
}

/// Newton solve of the two-tail system `(-∞, a1] ∪ [a2, ∞)`: used for a zero
/// slope and for bounded covariates whose right interval is cut at `x_max`.
pub fn solve_two_tails(
    dist: &CovariateDistribution,
    alpha: f64,
    beta1: f64,
    start: [f64; 2],
) -> Result<OptimalDesignResult> {
    check_alpha(alpha)?;
    dist.check_slope(beta1)?;
    let (inf, sup) = (dist.ess_inf(), dist.ess_sup());
    let out = newton(
        "two_intervals_right_truncated",
        |a| two_tail_residual(dist, alpha, beta1, a),
        |a| inf < a[0] && a[0] < a[1] && a[1] < sup,
        start,
    )?;
    let a = out.x;
    build_result(
        dist,
        alpha,
        beta1,
        two_tail_support(&a)?,
        Scenario::TwoIntervalsRightTruncated { a1: a[0], a2: a[1] },
        a[0],
        out.residual,
        out.iterations,
    )
}

/// The lower-tail design `(-∞, q_α]` packaged as a candidate optimum.
pub fn single_interval_candidate(
    dist: &CovariateDistribution,
    alpha: f64,
    beta1: f64,
) -> Result<OptimalDesignResult> {
    check_alpha(alpha)?;
    dist.check_slope(beta1)?;
    let q = dist.quantile(alpha)?;
    build_result(
        dist,
        alpha,
        beta1,
        support_of(&[(f64::NEG_INFINITY, q)])?,
        Scenario::SingleInterval { q },
        q,
        0.0,
        0,
    )
}

fn single_interval_passes(
    dist: &CovariateDistribution,
    alpha: f64,
    beta1: f64,
) -> Result<bool> {
    dist.check_slope(beta1)?;
    let q = dist.quantile(alpha)?;
    let support = support_of(&[(f64::NEG_INFINITY, q)])?;
    let design = SubsamplingDesign::interval_supported(dist.clone(), support.clone())?;
    let m = moments(&design, beta1)?;
    let log_s = log_sensitivity(q, &m, beta1)?;
    Ok(verify_support_log(
        dist,
        &support,
        beta1,
        log_s,
        DEFAULT_VERIFY_GRID,
        TRANSITION_VERIFY_TOLERANCE,
    )?
    .verified)
}

/// Starting points for the two-interval Newton solve.
///
/// The first straddles the unbounded-design support point `-2/β₁` as
/// described in the module docs. The second splits the single-interval
/// design at the interior minimum of its sensitivity, which is the right
/// neighbourhood just past the crossover slope.
fn two_interval_starts(dist: &CovariateDistribution, alpha: f64, beta1: f64) -> Vec<[f64; 3]> {
    let mut starts = Vec::new();
    let (inf, sup) = (dist.ess_inf(), dist.ess_sup());
    let q = |p: f64| dist.quantile(p).ok();
    let x2 = -2.0 / beta1;
    if let (Some(a1), Some(qa), Some(qm)) = (q(alpha / 2.0), q(alpha / 2.0 + 0.5), q(0.5)) {
        let w = qa - qm;
        let eps = 1e-6 * (1.0 + a1.abs());
        for scale in [1.0, 0.5, 2.0] {
            let a2 = (x2 - scale * w).max(a1 + eps);
            let mut a3 = x2 + scale * w;
            if a3 > sup {
                a3 = sup;
            }
            if a3 > a2 {
                starts.push([a1, a2, a3]);
            }
        }
    }

    if let Ok(single) = single_interval_candidate(dist, alpha, beta1) {
        if let (Ok(m), Scenario::SingleInterval { q: qa }) = (single.moments(), single.scenario) {
            for c in sensitivity_critical_points(&m, beta1) {
                if c > inf && c < qa {
                    let lo_mass = interval_probability(dist, f64::NEG_INFINITY, c);
                    for gap in [1e-3, 1e-2, 5e-2] {
                        let p1 = lo_mass * (1.0 - gap);
                        let p2 = lo_mass * (1.0 + gap);
                        let p3 = alpha + (p2 - p1);
                        if let (Some(a1), Some(a2), Some(a3)) = (q(p1), q(p2), q(p3.min(1.0 - 1e-12)))
                        {
                            if inf < a1 && a1 < a2 && a2 < a3 && a3 <= sup {
                                starts.push([a1, a2, a3]);
                            }
                        }
                    }
                }
            }
        }
    }
    starts
}

fn solve_negative(
    dist: &CovariateDistribution,
    alpha: f64,
    beta1: f64,
) -> Result<OptimalDesignResult> {
    let mut newton_error = None;

    for start in two_interval_starts(dist, alpha, beta1) {
        match solve_two_intervals(dist, alpha, beta1, start) {
            Ok(r) if r.verified => return Ok(r),
            Ok(_) => {}
            Err(e @ Error::NoConvergence { .. }) => newton_error = Some(e),
            Err(Error::SingularDesign(_)) | Err(Error::Domain(_)) => {}
            Err(e) => return Err(e),
        }
    }

    if dist.ess_sup().is_finite() {
        let start = [dist.quantile(alpha / 2.0)?, dist.quantile(1.0 - alpha / 2.0)?];
        match solve_two_tails(dist, alpha, beta1, start) {
            Ok(r) if r.verified => return Ok(r),
            Ok(_) => {}
            Err(e @ Error::NoConvergence { .. }) => newton_error = Some(e),
            Err(Error::SingularDesign(_)) | Err(Error::Domain(_)) => {}
            Err(e) => return Err(e),
        }
    }

    let single = single_interval_candidate(dist, alpha, beta1)?;
    if single.verified {
        return Ok(single);
    }
    Err(newton_error.unwrap_or(Error::Unverified { alpha, beta1 }))
}

/// Locally D-optimal bounded design of mass `alpha` at slope `beta1`.
pub fn solve_optimal(
    dist: &CovariateDistribution,
    alpha: f64,
    beta1: f64,
) -> Result<OptimalDesignResult> {
    check_alpha(alpha)?;
    dist.validate()?;
    dist.check_slope(beta1)?;

    // equivariance: solve on the base law, where the starting points are calibrated
    if let CovariateDistribution::LocationScale { base, scale, shift } = dist {
        let r = solve_optimal(base, alpha, beta1 * scale)?;
        return mapped_result(r, dist, beta1, *scale, *shift);
    }

    if beta1 < 0.0 {
        solve_negative(dist, alpha, beta1)
    } else if beta1 == 0.0 {
        let start = [dist.quantile(alpha / 2.0)?, dist.quantile(1.0 - alpha / 2.0)?];
        let r = solve_two_tails(dist, alpha, 0.0, start)?;
        if r.verified {
            Ok(r)
        } else {
            Err(Error::Unverified { alpha, beta1 })
        }
    } else {
        let mirrored = dist.transformed(-1.0, 0.0)?;
        let r = solve_negative(&mirrored, alpha, -beta1)?;
        mapped_result(r, dist, beta1, -1.0, 0.0)
    }
}

/// Carry an optimum at `(base, β₁)` over to `base` under `z = a x + b` at
/// slope `beta1 = β₁ / a`, then re-verify it against `dist`, which must be
/// that image.
fn mapped_result(
    r: OptimalDesignResult,
    dist: &CovariateDistribution,
    beta1: f64,
    a: f64,
    b: f64,
) -> Result<OptimalDesignResult> {
    let alpha = r.alpha;
    let design = transform_design(&r.design, a, b)?;
    debug_assert_eq!(&design.dist, dist);
    let scenario = r.scenario.transformed(a, b);
    let m = moments(&design, beta1)?;
    let s_star = log_sensitivity(scenario.threshold_point(), &m, beta1)?.exp();
    let mut out = OptimalDesignResult {
        alpha,
        beta1,
        design,
        scenario,
        s_star,
        residual_norm: r.residual_norm,
        iterations: r.iterations,
        verified: false,
        max_violation: f64::INFINITY,
    };
    let v = verify_optimality(&out, dist, alpha, beta1, DEFAULT_VERIFY_GRID)?;
    out.verified = v.verified;
    out.max_violation = v.max_violation;
    if out.verified {
        Ok(out)
    } else {
        Err(Error::Unverified { alpha, beta1 })
    }
}

/// Slope at which, for fixed `alpha`, the optimum switches between the
/// single lower-tail interval (more negative slopes) and two intervals.
pub fn crossover_slope(dist: &CovariateDistribution, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let mut lo = CROSSOVER_SEARCH_LOWER;
    let mut hi = -1e-8;
    // the window may extend past the moment-finite range only for
    // distributions unbounded below; shrink it until moments exist
    while dist.check_slope(lo).is_err() && lo < hi {
        lo *= 0.5;
    }
    let pass_lo = single_interval_passes(dist, alpha, lo)?;
    let pass_hi = single_interval_passes(dist, alpha, hi)?;
    if !pass_lo || pass_hi {
        return Err(Error::NotBracketed { lo, hi });
    }
    while hi - lo > TRANSITION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if single_interval_passes(dist, alpha, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Subsampling proportion above which the single lower-tail interval is
/// optimal at slope `beta1`. Equals 1 at a zero slope.
pub fn critical_alpha(dist: &CovariateDistribution, beta1: f64) -> Result<f64> {
    if beta1 == 0.0 {
        return Ok(1.0);
    }
    if beta1 > 0.0 {
        return Err(Error::Domain(format!(
            "critical proportion is defined for negative slopes, got {beta1}"
        )));
    }
    dist.check_slope(beta1)?;
    let mut lo = 1e-6;
    let mut hi = 1.0 - 1e-6;
    if single_interval_passes(dist, lo, beta1)? || !single_interval_passes(dist, hi, beta1)? {
        return Err(Error::NotBracketed { lo, hi });
    }
    while hi - lo > TRANSITION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if single_interval_passes(dist, mid, beta1)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Image of a design under `z = a x + b`. The covariate law is transformed
/// with it; the design stays optimal at slope `β₁ / a`.
pub fn transform_design(design: &SubsamplingDesign, a: f64, b: f64) -> Result<SubsamplingDesign> {
    if a == 0.0 {
        return Err(Error::Domain("transform scale must be nonzero".into()));
    }
    let dist = design.dist.transformed(a, b)?;
    let kind = match &design.kind {
        crate::design::DesignKind::IntervalSupported { support } => {
            crate::design::DesignKind::IntervalSupported {
                support: support.transformed(a, b)?,
            }
        }
        crate::design::DesignKind::ScaledUniform { alpha } => {
            crate::design::DesignKind::ScaledUniform { alpha: *alpha }
        }
    };
    Ok(SubsamplingDesign { dist, kind })
}
