//! Reference tables of optimal boundaries and crossover slopes.
//!
//! Cells that do not exist for a regime are `None`: no `a₃` for the
//! truncated two-interval design, only `q_α` for the single interval.

use serde::Serialize;

use crate::dist::CovariateDistribution;
use crate::error::Result;
use crate::solver::{crossover_slope, solve_optimal, Scenario};

pub const EXPONENTIAL_ALPHAS: [f64; 4] = [0.01, 0.10, 0.30, 0.75];
pub const EXPONENTIAL_SLOPES: [f64; 4] = [0.0, -0.5, -1.0, -4.0];
pub const UNIFORM_ALPHAS: [f64; 4] = [0.01, 0.10, 0.30, 0.50];
pub const UNIFORM_SLOPES: [f64; 4] = [0.0, -2.0, -4.0, -8.0];
pub const CROSSOVER_ALPHAS: [f64; 6] = [0.01, 0.10, 0.30, 0.50, 0.75, 0.90];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryRow {
    pub alpha: f64,
    pub beta1: f64,
    pub a1: Option<f64>,
    pub a2: Option<f64>,
    /// `a₃` for two intervals, `q_α` for the single interval.
    pub a3_or_q: Option<f64>,
    pub cdf_a1: Option<f64>,
    /// Share of the subsample in the lower interval, in percent.
    pub pct_mass_left: Option<f64>,
}

impl BoundaryRow {
    pub const HEADER: [&'static str; 7] =
        ["alpha", "beta1", "a1", "a2", "a3_or_q", "cdf_a1", "pct_mass_left"];

    pub fn cells(&self) -> [Option<f64>; 7] {
        [
            Some(self.alpha),
            Some(self.beta1),
            self.a1,
            self.a2,
            self.a3_or_q,
            self.cdf_a1,
            self.pct_mass_left,
        ]
    }
}

pub fn boundary_row(dist: &CovariateDistribution, alpha: f64, beta1: f64) -> Result<BoundaryRow> {
    let r = solve_optimal(dist, alpha, beta1)?;
    let left = |a1: f64| {
        let f = dist.cdf(a1);
        (Some(a1), Some(f), Some(100.0 * f / alpha))
    };
    Ok(match r.scenario {
        Scenario::TwoIntervals { a1, a2, a3 } => {
            let (a1, cdf_a1, pct) = left(a1);
            BoundaryRow {
                alpha,
                beta1,
                a1,
                a2: Some(a2),
                a3_or_q: Some(a3),
                cdf_a1,
                pct_mass_left: pct,
            }
        }
        Scenario::TwoIntervalsRightTruncated { a1, a2 } => {
            let (a1, cdf_a1, pct) = left(a1);
            BoundaryRow {
                alpha,
                beta1,
                a1,
                a2: Some(a2),
                a3_or_q: None,
                cdf_a1,
                pct_mass_left: pct,
            }
        }
        Scenario::SingleInterval { q } => BoundaryRow {
            alpha,
            beta1,
            a1: None,
            a2: None,
            a3_or_q: Some(q),
            cdf_a1: None,
            pct_mass_left: None,
        },
    })
}

/// Rows for every `(α, β₁)` pair, α-major.
pub fn boundary_table(
    dist: &CovariateDistribution,
    alphas: &[f64],
    slopes: &[f64],
) -> Result<Vec<BoundaryRow>> {
    alphas
        .iter()
        .flat_map(|&a| slopes.iter().map(move |&b| (a, b)))
        .map(|(a, b)| boundary_row(dist, a, b))
        .collect()
}

pub fn exponential_table() -> Result<Vec<BoundaryRow>> {
    boundary_table(
        &CovariateDistribution::exponential(1.0)?,
        &EXPONENTIAL_ALPHAS,
        &EXPONENTIAL_SLOPES,
    )
}

pub fn uniform_table() -> Result<Vec<BoundaryRow>> {
    boundary_table(
        &CovariateDistribution::uniform(0.0, 1.0)?,
        &UNIFORM_ALPHAS,
        &UNIFORM_SLOPES,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossoverRow {
    pub alpha: f64,
    pub beta1_star_over_rate: f64,
    pub rate_q_alpha: f64,
    /// `λ x₂* = -2 / (β₁*/λ)`, the scaled stationary point of ψ's weight.
    pub rate_x2_star: f64,
    pub q_alpha_over_x2_star: f64,
}

impl CrossoverRow {
    pub const HEADER: [&'static str; 5] = [
        "alpha",
        "beta1_star_over_rate",
        "rate_q_alpha",
        "rate_x2_star",
        "q_alpha_over_x2_star",
    ];

    pub fn cells(&self) -> [Option<f64>; 5] {
        [
            Some(self.alpha),
            Some(self.beta1_star_over_rate),
            Some(self.rate_q_alpha),
            Some(self.rate_x2_star),
            Some(self.q_alpha_over_x2_star),
        ]
    }
}

/// Crossover slopes for an exponential covariate; every column is scale
/// free, so the rate only fixes the units of the search.
pub fn crossover_table(rate: f64, alphas: &[f64]) -> Result<Vec<CrossoverRow>> {
    let dist = CovariateDistribution::exponential(rate)?;
    alphas
        .iter()
        .map(|&alpha| {
            let ratio = crossover_slope(&dist, alpha)? / rate;
            let rq = rate * dist.quantile(alpha)?;
            let rx2 = -2.0 / ratio;
            Ok(CrossoverRow {
                alpha,
                beta1_star_over_rate: ratio,
                rate_q_alpha: rq,
                rate_x2_star: rx2,
                q_alpha_over_x2_star: rq / rx2,
            })
        })
        .collect()
}
