//! Independent numerical oracles: adaptive Simpson quadrature and densities
//! written out by hand.

#![allow(dead_code)]

use subopt::{CovariateDistribution, IntervalSet};

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // below this the difference is rounding noise, not truncation error
    let floor = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if depth == 0 || delta.abs() <= 15.0 * tol.max(floor) {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

/// Adaptive Simpson on a finite interval; `tol` is relative to the size of
/// the integral (a coarse estimate of `∫|f|`).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    // pre-split so narrow features are not missed by the first estimate
    let pieces = 32;
    let h = (b - a) / pieces as f64;
    let panels: Vec<(f64, f64, f64, f64, f64, f64)> = (0..pieces)
        .map(|i| {
            let (lo, hi) = (a + h * i as f64, a + h * (i + 1) as f64);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            (lo, hi, fa, fm, fb, whole)
        })
        .collect();
    let scale: f64 = panels.iter().map(|p| p.5.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    let abs_tol = tol * scale / pieces as f64;
    panels
        .iter()
        .map(|&(lo, hi, fa, fm, fb, whole)| simpson_step(&f, lo, hi, fa, fm, fb, whole, abs_tol, 30))
        .sum()
}

/// Quadrature over `[a, ∞)` through `x = a + t / (1 - t)`.
pub fn simpson_to_infinity(f: impl Fn(f64) -> f64, a: f64, tol: f64) -> f64 {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - t;
        let v = f(a + t / s) / (s * s);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    simpson(g, 0.0, 1.0, tol)
}

/// Density from its textbook formula, independent of the crate's code.
pub fn density(dist: &CovariateDistribution) -> Box<dyn Fn(f64) -> f64> {
    match dist {
        CovariateDistribution::Exponential { rate } => {
            let r = *rate;
            Box::new(move |x| if x < 0.0 { 0.0 } else { r * (-r * x).exp() })
        }
        CovariateDistribution::Uniform { x_min, x_max } => {
            let (a, b) = (*x_min, *x_max);
            Box::new(move |x| if x < a || x > b { 0.0 } else { 1.0 / (b - a) })
        }
        other => panic!("no reference density for {other:?}"),
    }
}

/// `∫_lo^hi x^k e^{βx} f(x) dx` by quadrature; supports `hi = ∞`.
pub fn weighted_moment(
    dist: &CovariateDistribution,
    k: i32,
    beta1: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> f64 {
    let f = density(dist);
    let lo = lo.max(dist.ess_inf());
    let hi = hi.min(dist.ess_sup());
    let g = |x: f64| x.powi(k) * (beta1 * x).exp() * f(x);
    if let (CovariateDistribution::Exponential { rate }, true) = (dist, hi.is_infinite()) {
        // the integrand decays like x^2 e^{-(rate - beta1) x}; past this cut it is below 1e-30
        let c = rate - beta1;
        let cut = lo.max(0.0) + (70.0 + 2.0 * (1.0 + 2.0 / c).ln().max(0.0) * 2.0) / c;
        return simpson(g, lo, cut, tol);
    }
    if hi.is_infinite() {
        simpson_to_infinity(g, lo, tol)
    } else {
        simpson(g, lo, hi, tol)
    }
}

/// `[m0, m1, m2]` of an interval-supported design by quadrature.
pub fn design_moments(
    dist: &CovariateDistribution,
    support: &IntervalSet,
    beta1: f64,
    tol: f64,
) -> [f64; 3] {
    let mut m = [0.0; 3];
    for iv in support.intervals() {
        for (k, mk) in m.iter_mut().enumerate() {
            *mk += weighted_moment(dist, k as i32, beta1, iv.lower, iv.upper, tol);
        }
    }
    m
}

/// Probability of `[lo, hi]` by quadrature.
pub fn probability(dist: &CovariateDistribution, lo: f64, hi: f64) -> f64 {
    weighted_moment(dist, 0, 0.0, lo, hi, 1e-13)
}

pub fn exp1() -> CovariateDistribution {
    CovariateDistribution::exponential(1.0).unwrap()
}

pub fn unif01() -> CovariateDistribution {
    CovariateDistribution::uniform(0.0, 1.0).unwrap()
}

pub fn assert_rel(got: f64, want: f64, tol: f64, what: &str) {
    let scale = want.abs().max(1e-300);
    assert!(
        (got - want).abs() <= tol * scale,
        "{what}: got {got}, want {want} (rel {:e})",
        (got - want).abs() / scale
    );
}
