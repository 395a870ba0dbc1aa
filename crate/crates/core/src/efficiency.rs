//! Heuristic designs and D-efficiencies.
//!
//! Efficiency of a mass-α design ξ at slope β₁ is `(d(ξ) / d(ξ*))^{1/2}`
//! where ξ* is the locally optimal design of the same mass; the intercept
//! cancels. Misspecification efficiency evaluates the optimum for a nominal
//! slope at the true one.

use rayon::prelude::*;
use serde::Serialize;

use crate::design::{IntervalSet, SubsamplingDesign};
use crate::dist::CovariateDistribution;
use crate::error::{Error, Result};
use crate::solver::{solve_optimal, OptimalDesignResult};

pub const DEFAULT_ALPHA_SWEEP: (f64, f64, usize) = (0.005, 0.95, 200);
pub const DEFAULT_SLOPE_SWEEP: (f64, f64, usize) = (-8.0, -0.05, 400);
pub const GOLDEN_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Heuristic {
    UniformRandom,
    OneSided,
    TwoSided,
}

impl Heuristic {
    pub const ALL: [Heuristic; 3] = [
        Heuristic::UniformRandom,
        Heuristic::OneSided,
        Heuristic::TwoSided,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Heuristic::UniformRandom => "uniform_random",
            Heuristic::OneSided => "one_sided",
            Heuristic::TwoSided => "two_sided",
        }
    }

    pub fn build(&self, dist: &CovariateDistribution, alpha: f64) -> Result<SubsamplingDesign> {
        match self {
            Heuristic::UniformRandom => uniform_random_design(dist, alpha),
            Heuristic::OneSided => one_sided_design(dist, alpha),
            Heuristic::TwoSided => two_sided_design(dist, alpha),
        }
    }
}

impl std::str::FromStr for Heuristic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "uniform_random" | "uniform-random" => Ok(Heuristic::UniformRandom),
            "one-sided" | "one_sided" => Ok(Heuristic::OneSided),
            "two-sided" | "two_sided" => Ok(Heuristic::TwoSided),
            other => Err(Error::Parse(format!("unknown heuristic design {other:?}"))),
        }
    }
}

/// Uniform random subsampling: density `α f_X`.
pub fn uniform_random_design(
    dist: &CovariateDistribution,
    alpha: f64,
) -> Result<SubsamplingDesign> {
    SubsamplingDesign::scaled_uniform(dist.clone(), alpha)
}

/// All mass on the lower tail `(-∞, q_α]`.
pub fn one_sided_design(dist: &CovariateDistribution, alpha: f64) -> Result<SubsamplingDesign> {
    let support = if alpha >= 1.0 {
        IntervalSet::from_pairs(&[(f64::NEG_INFINITY, f64::INFINITY)])?
    } else {
        IntervalSet::from_pairs(&[(f64::NEG_INFINITY, dist.quantile(alpha)?)])?
    };
    SubsamplingDesign::interval_supported(dist.clone(), support)
}

/// Mass α/2 on each tail: `(-∞, q_{α/2}] ∪ [q_{1-α/2}, ∞)`.
pub fn two_sided_design(dist: &CovariateDistribution, alpha: f64) -> Result<SubsamplingDesign> {
    let support = if alpha >= 1.0 {
        IntervalSet::from_pairs(&[(f64::NEG_INFINITY, f64::INFINITY)])?
    } else {
        IntervalSet::from_pairs(&[
            (f64::NEG_INFINITY, dist.quantile(alpha / 2.0)?),
            (dist.quantile(1.0 - alpha / 2.0)?, f64::INFINITY),
        ])?
    };
    SubsamplingDesign::interval_supported(dist.clone(), support)
}

/// Efficiency of `design` against an already solved optimum at `beta1`.
pub fn efficiency_against(
    design: &SubsamplingDesign,
    optimum: &OptimalDesignResult,
    beta1: f64,
) -> Result<f64> {
    let d = design.moments(beta1)?.d;
    let d_opt = optimum.moments()?.d;
    if !(d_opt > 0.0) {
        return Err(Error::SingularDesign(d_opt));
    }
    Ok((d / d_opt).sqrt())
}

/// D-efficiency `(d(ξ)/d(ξ*))^{1/2}` with ξ* solved at `(alpha, beta1)`.
pub fn d_efficiency(
    design: &SubsamplingDesign,
    dist: &CovariateDistribution,
    alpha: f64,
    beta1: f64,
) -> Result<f64> {
    let mass = design.mass();
    if (mass - alpha).abs() > 1e-8 {
        return Err(Error::Domain(format!(
            "design mass {mass} differs from alpha {alpha}"
        )));
    }
    let optimum = solve_optimal(dist, alpha, beta1)?;
    efficiency_against(design, &optimum, beta1)
}

/// Efficiency at the true slope of the optimum computed for a nominal slope.
pub fn misspecification_efficiency(
    dist: &CovariateDistribution,
    alpha: f64,
    beta1_nominal: f64,
    beta1_true: f64,
) -> Result<f64> {
    dist.check_slope(beta1_true)?;
    let nominal = solve_optimal(dist, alpha, beta1_nominal)?;
    let optimum = solve_optimal(dist, alpha, beta1_true)?;
    efficiency_against(&nominal.design, &optimum, beta1_true)
}

/// One row of an efficiency table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyReport {
    pub design: String,
    pub alpha: f64,
    pub beta1_true: f64,
    pub beta1_nominal: Option<f64>,
    /// `None` when the solver failed for this row; see `error`.
    pub efficiency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Rate that makes slopes comparable across scale changes: the exponential
/// rate, or the reciprocal support width for bounded laws. Efficiencies
/// depend on the slope only through `β₁ / rate`.
pub fn slope_unit(dist: &CovariateDistribution) -> f64 {
    match dist {
        CovariateDistribution::Exponential { rate } => *rate,
        CovariateDistribution::LocationScale { base, scale, .. } => slope_unit(base) / scale.abs(),
        other => 1.0 / (other.ess_sup() - other.ess_inf()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    /// `points` log-spaced proportions in `[from, to]` at fixed `β₁ / unit`.
    Alpha {
        from: f64,
        to: f64,
        points: usize,
        slope_ratio: f64,
    },
    /// `points` evenly spaced slope ratios `β₁ / unit` in `[from, to]` at fixed α.
    Slope {
        from: f64,
        to: f64,
        points: usize,
        alpha: f64,
    },
}

impl SweepAxis {
    /// `(alpha, slope_ratio)` pairs along the axis.
    pub fn grid(&self) -> Vec<(f64, f64)> {
        match *self {
            SweepAxis::Alpha {
                from,
                to,
                points,
                slope_ratio,
            } => spaced(from.ln(), to.ln(), points)
                .into_iter()
                .map(|l| (l.exp(), slope_ratio))
                .collect(),
            SweepAxis::Slope {
                from,
                to,
                points,
                alpha,
            } => spaced(from, to, points)
                .into_iter()
                .map(|r| (alpha, r))
                .collect(),
        }
    }
}

fn spaced(from: f64, to: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![from],
        n => (0..n)
            .map(|i| from + (to - from) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Efficiencies of the heuristic designs (and of optima at the given
/// nominal slope ratios) along a sweep axis. Rows for a failed point carry
/// the error instead of being dropped.
pub fn efficiency_sweep(
    dist: &CovariateDistribution,
    axis: &SweepAxis,
    nominal_ratios: &[f64],
) -> Vec<EfficiencyReport> {
    let unit = slope_unit(dist);
    let nominal: Vec<(f64, Result<OptimalDesignResult>)> = match axis {
        // nominal optima depend on alpha, so they are solved per row below
        SweepAxis::Alpha { .. } => Vec::new(),
        SweepAxis::Slope { alpha, .. } => nominal_ratios
            .iter()
            .map(|r| (r * unit, solve_optimal(dist, *alpha, r * unit)))
            .collect(),
    };

    axis.grid()
        .into_par_iter()
        .flat_map_iter(|(alpha, ratio)| {
            let beta1 = ratio * unit;
            let optimum = solve_optimal(dist, alpha, beta1);
            let mut rows = Vec::new();
            let row = |label: &str, nominal: Option<f64>, eff: Result<f64>| EfficiencyReport {
                design: label.to_string(),
                alpha,
                beta1_true: beta1,
                beta1_nominal: nominal,
                efficiency: eff.as_ref().ok().copied(),
                error: eff.err().map(|e| e.to_string()),
            };
            for h in Heuristic::ALL {
                let eff = match &optimum {
                    Ok(opt) => h
                        .build(dist, alpha)
                        .and_then(|d| efficiency_against(&d, opt, beta1)),
                    Err(e) => Err(Error::Domain(e.to_string())),
                };
                rows.push(row(h.label(), None, eff));
            }
            for (i, r) in nominal_ratios.iter().enumerate() {
                let b_nom = r * unit;
                let eff = match (&optimum, axis) {
                    (Err(e), _) => Err(Error::Domain(e.to_string())),
                    (Ok(opt), SweepAxis::Slope { .. }) => match &nominal[i].1 {
                        Ok(nom) => efficiency_against(&nom.design, opt, beta1),
                        Err(e) => Err(Error::Domain(e.to_string())),
                    },
                    (Ok(opt), SweepAxis::Alpha { .. }) => solve_optimal(dist, alpha, b_nom)
                        .and_then(|nom| efficiency_against(&nom.design, opt, beta1)),
                };
                rows.push(row("optimal_nominal", Some(b_nom), eff));
            }
            rows
        })
        .collect()
}

/// Writes sweep rows as CSV with columns
/// `design,alpha,beta1_true,beta1_nominal,efficiency`; failures print `NaN`.
pub fn write_reports_csv<W: std::io::Write>(
    rows: &[EfficiencyReport],
    precision: usize,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["design", "alpha", "beta1_true", "beta1_nominal", "efficiency"])?;
    for r in rows {
        w.write_record([
            r.design.clone(),
            format!("{:.*}", precision, r.alpha),
            format!("{:.*}", precision, r.beta1_true),
            r.beta1_nominal
                .map(|b| format!("{:.*}", precision, b))
                .unwrap_or_default(),
            r.efficiency
                .map(|e| format!("{:.*}", precision, e))
                .unwrap_or_else(|| "NaN".to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Min,
    Max,
}

/// Golden-section search for an extremum of a unimodal `f` on `[lo, hi]`.
pub fn golden_section(
    f: impl Fn(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    kind: Extremum,
    tolerance: f64,
) -> Result<(f64, f64)> {
    let sign = match kind {
        Extremum::Min => 1.0,
        Extremum::Max => -1.0,
    };
    let g = |x: f64| f(x).map(|v| sign * v);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = g(c)?;
    let mut fd = g(d)?;
    while hi - lo > tolerance {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = g(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = g(d)?;
        }
    }
    let x = 0.5 * (lo + hi);
    Ok((x, f(x)?))
}

/// Interior local extrema of `f` found on an `n`-point scan of `[lo, hi]`,
/// each refined by golden-section search inside its scan bracket.
pub fn local_extrema(
    f: impl Fn(f64) -> Result<f64> + Sync,
    lo: f64,
    hi: f64,
    n: usize,
    kind: Extremum,
    tolerance: f64,
) -> Result<Vec<(f64, f64)>> {
    let xs = spaced(lo, hi, n.max(3));
    let ys: Vec<f64> = xs
        .par_iter()
        .map(|&x| f(x))
        .collect::<Result<Vec<_>>>()?;
    let better = |a: f64, b: f64| match kind {
        Extremum::Min => a < b,
        Extremum::Max => a > b,
    };
    let mut out = Vec::new();
    for i in 1..xs.len() - 1 {
        if better(ys[i], ys[i - 1]) && !better(ys[i + 1], ys[i]) {
            out.push(golden_section(&f, xs[i - 1], xs[i + 1], kind, tolerance)?);
        }
    }
    Ok(out)
}

/// Global extremum of `f` on `[lo, hi]`: best point of an `n`-point scan,
/// refined by golden-section search inside its bracket.
pub fn global_extremum(
    f: impl Fn(f64) -> Result<f64> + Sync,
    lo: f64,
    hi: f64,
    n: usize,
    kind: Extremum,
    tolerance: f64,
) -> Result<(f64, f64)> {
    let xs = spaced(lo, hi, n.max(3));
    let ys: Vec<f64> = xs
        .par_iter()
        .map(|&x| f(x))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for i in 1..ys.len() {
        let improves = match kind {
            Extremum::Min => ys[i] < ys[best],
            Extremum::Max => ys[i] > ys[best],
        };
        if improves {
            best = i;
        }
    }
    let a = xs[best.saturating_sub(1)];
    let b = xs[(best + 1).min(xs.len() - 1)];
    golden_section(f, a, b, kind, tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn exp1() -> CovariateDistribution {
        CovariateDistribution::exponential(1.0).unwrap()
    }

    #[test]
    fn uniform_random_scales_moments() {
        let full = uniform_random_design(&exp1(), 1.0).unwrap();
        let part = uniform_random_design(&exp1(), 0.1).unwrap();
        let mf = full.moments(-1.0).unwrap();
        let mp = part.moments(-1.0).unwrap();
        assert_relative_eq!(mp.m0, 0.05, max_relative = 1e-14);
        assert_relative_eq!(mp.m1, 0.1 * mf.m1, max_relative = 1e-14);
        assert_relative_eq!(mp.m2, 0.1 * mf.m2, max_relative = 1e-14);
    }

    #[test]
    fn two_sided_uniform_quantiles() {
        let u = CovariateDistribution::uniform(0.0, 1.0).unwrap();
        let d = two_sided_design(&u, 0.1).unwrap();
        let iv = d.support().unwrap().intervals();
        assert!((iv[0].upper - 0.05).abs() < 1e-15);
        assert!((iv[1].lower - 0.95).abs() < 1e-15);
        assert_relative_eq!(d.mass(), 0.1, max_relative = 1e-12);
    }

    #[test]
    fn optimum_has_unit_efficiency() {
        let r = solve_optimal(&exp1(), 0.1, -1.0).unwrap();
        let e = d_efficiency(&r.design, &exp1(), 0.1, -1.0).unwrap();
        assert_relative_eq!(e, 1.0, max_relative = 1e-14);
        assert_relative_eq!(
            misspecification_efficiency(&exp1(), 0.1, -1.0, -1.0).unwrap(),
            1.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn mass_mismatch_rejected() {
        let d = uniform_random_design(&exp1(), 0.2).unwrap();
        assert!(d_efficiency(&d, &exp1(), 0.1, -1.0).is_err());
    }

    #[test]
    fn one_sided_is_optimal_above_critical_alpha() {
        let d = one_sided_design(&exp1(), 0.75).unwrap();
        let e = d_efficiency(&d, &exp1(), 0.75, -4.0).unwrap();
        assert!((e - 1.0).abs() < 1e-8);
    }

    #[test]
    fn small_alpha_orders_heuristics() {
        let alpha = 0.1;
        let eff = |h: Heuristic| {
            d_efficiency(&h.build(&exp1(), alpha).unwrap(), &exp1(), alpha, -1.0).unwrap()
        };
        let (u, os) = (eff(Heuristic::UniformRandom), eff(Heuristic::OneSided));
        assert!(os < u, "one-sided {os} vs uniform {u}");
        assert!(u >= alpha);
    }

    #[test]
    fn sweep_single_point_and_failure_rows() {
        let axis = SweepAxis::Slope {
            from: -1.0,
            to: -1.0,
            points: 1,
            alpha: 0.1,
        };
        let rows = efficiency_sweep(&exp1(), &axis, &[]);
        assert_eq!(rows.len(), 3);
        // slope beyond the rate: every row is marked, none dropped
        let axis = SweepAxis::Slope {
            from: 2.0,
            to: 2.0,
            points: 1,
            alpha: 0.1,
        };
        let rows = efficiency_sweep(&exp1(), &axis, &[-1.0]);
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.efficiency.is_none() && r.error.is_some()));
        let mut buf = Vec::new();
        write_reports_csv(&rows, 5, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("design,alpha,beta1_true,beta1_nominal,efficiency\n"));
        assert!(text.lines().nth(1).unwrap().ends_with("NaN"));
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, v) =
            golden_section(|x| Ok((x - 0.3) * (x - 0.3) + 1.0), -1.0, 2.0, Extremum::Min, 1e-8)
                .unwrap();
        assert!((x - 0.3).abs() < 1e-7);
        assert!((v - 1.0).abs() < 1e-12);
    }
}
