//! Applying a design to data: subsample selection, Poisson simulation,
//! maximum likelihood and a Monte Carlo check of the asymptotic covariance.

use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::design::{DesignKind, SubsamplingDesign};
use crate::dist::CovariateDistribution;
use crate::error::{Error, Result};

pub const MAX_POISSON_RATE: f64 = 1e15;
pub const MLE_TOLERANCE: f64 = 1e-10;
pub const MLE_MAX_ITERATIONS: usize = 100;
pub const MIN_REPLICATIONS: usize = 200;

/// Generator for replication `stream` of a run seeded with `seed`.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsampleSelection {
    pub indices: Vec<usize>,
    pub n: usize,
    pub realized_fraction: f64,
    /// Present only when acceptance was random.
    pub seed: Option<u64>,
}

/// Streaming acceptance rule; memory is the accepted index list only.
pub struct Selector<'a> {
    design: &'a SubsamplingDesign,
    rng: Option<ChaCha8Rng>,
    seed: u64,
    seen: usize,
    accepted: Vec<usize>,
}

impl<'a> Selector<'a> {
    pub fn new(design: &'a SubsamplingDesign, seed: u64) -> Self {
        let rng = match design.kind {
            DesignKind::ScaledUniform { .. } => Some(seeded_rng(seed, 0)),
            DesignKind::IntervalSupported { .. } => None,
        };
        Selector {
            design,
            rng,
            seed,
            seen: 0,
            accepted: Vec::new(),
        }
    }

    /// Decides the next observation; intervals are closed.
    pub fn push(&mut self, x: f64) -> bool {
        let keep = match (&self.design.kind, self.rng.as_mut()) {
            (DesignKind::IntervalSupported { support }, _) => support.contains(x),
            (DesignKind::ScaledUniform { alpha }, Some(rng)) => rng.random::<f64>() < *alpha,
            (DesignKind::ScaledUniform { .. }, None) => unreachable!(),
        };
        if keep {
            self.accepted.push(self.seen);
        }
        self.seen += 1;
        keep
    }

    pub fn finish(self) -> Result<SubsampleSelection> {
        if self.accepted.is_empty() {
            return Err(Error::EmptySubsample);
        }
        Ok(SubsampleSelection {
            realized_fraction: self.accepted.len() as f64 / self.seen as f64,
            n: self.seen,
            indices: self.accepted,
            seed: self.rng.map(|_| self.seed),
        })
    }
}

pub fn select_subsample(
    x: &[f64],
    design: &SubsamplingDesign,
    seed: u64,
) -> Result<SubsampleSelection> {
    let mut sel = Selector::new(design, seed);
    for &xi in x {
        sel.push(xi);
    }
    sel.finish()
}

/// Values of one CSV column; a non-numeric first row is a header. `column`
/// selects by header name, otherwise the first column is used.
pub fn for_each_csv_value<R: Read>(
    reader: R,
    column: Option<&str>,
    mut f: impl FnMut(f64),
) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut idx = 0usize;
    let mut record = csv::StringRecord::new();
    let mut first = true;
    let mut line = 0usize;
    while rdr.read_record(&mut record)? {
        line += 1;
        if first {
            first = false;
            let numeric = record.get(0).is_some_and(|v| v.parse::<f64>().is_ok());
            if !numeric {
                if let Some(name) = column {
                    idx = record.iter().position(|h| h == name).ok_or_else(|| {
                        Error::Parse(format!("column {name:?} not in CSV header"))
                    })?;
                }
                continue;
            } else if column.is_some() {
                return Err(Error::Parse("column named but CSV has no header".into()));
            }
        }
        let field = record
            .get(idx)
            .ok_or_else(|| Error::Parse(format!("line {line}: missing column {idx}")))?;
        let v: f64 = field
            .parse()
            .map_err(|_| Error::Parse(format!("line {line}: {field:?} is not a number")))?;
        f(v);
    }
    Ok(())
}

pub fn read_csv_column<R: Read>(reader: R, column: Option<&str>) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for_each_csv_value(reader, column, |v| out.push(v))?;
    Ok(out)
}

/// Streaming selection over a covariate CSV.
pub fn select_from_csv<R: Read>(
    reader: R,
    column: Option<&str>,
    design: &SubsamplingDesign,
    seed: u64,
) -> Result<SubsampleSelection> {
    let mut sel = Selector::new(design, seed);
    for_each_csv_value(reader, column, |v| {
        sel.push(v);
    })?;
    sel.finish()
}

fn poisson_draws(
    x: &[f64],
    beta0: f64,
    beta1: f64,
    rng: &mut impl Rng,
) -> Result<Vec<u64>> {
    x.iter()
        .map(|&xi| {
            let rate = (beta0 + beta1 * xi).exp();
            if !(rate <= MAX_POISSON_RATE) {
                return Err(Error::Domain(format!(
                    "Poisson rate {rate:e} at x={xi} exceeds {MAX_POISSON_RATE:e}"
                )));
            }
            if rate == 0.0 {
                return Ok(0);
            }
            let p = Poisson::new(rate).map_err(|e| Error::Domain(e.to_string()))?;
            Ok(p.sample(rng) as u64)
        })
        .collect()
}

/// Independent responses with means `exp(β₀ + β₁ x_i)`.
pub fn simulate_poisson(x: &[f64], beta0: f64, beta1: f64, seed: u64) -> Result<Vec<u64>> {
    poisson_draws(x, beta0, beta1, &mut seeded_rng(seed, 0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MleFit {
    pub beta0_hat: f64,
    pub beta1_hat: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Euclidean norm of the score divided by the sample size.
    pub score_norm: f64,
    /// `Σ μ_i f(x_i) f(x_i)ᵀ` at the estimate.
    pub observed_information: [[f64; 2]; 2],
    pub n: usize,
}

struct Likelihood<'a> {
    x: &'a [f64],
    y: &'a [u64],
}

impl Likelihood<'_> {
    /// Log-likelihood (up to constants), score and information at `b`.
    fn eval(&self, b: [f64; 2]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let mut ll = 0.0;
        let mut s = [0.0; 2];
        let mut h = [[0.0; 2]; 2];
        for (&x, &y) in self.x.iter().zip(self.y) {
            let eta = b[0] + b[1] * x;
            let mu = eta.exp();
            let y = y as f64;
            ll += y * eta - mu;
            let r = y - mu;
            s[0] += r;
            s[1] += r * x;
            h[0][0] += mu;
            h[0][1] += mu * x;
            h[1][1] += mu * x * x;
        }
        h[1][0] = h[0][1];
        (ll, s, h)
    }
}

/// Newton-Raphson with step halving, started at `β₁ = 0` and the log mean.
/// Converged means the per-observation score norm is below [`MLE_TOLERANCE`].
pub fn fit_poisson_mle(x: &[f64], y: &[u64]) -> Result<MleFit> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!(
            "{} covariates but {} responses",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::EmptySubsample);
    }
    if x.iter().all(|&v| v == x[0]) {
        return Err(Error::DegenerateDesignMatrix(format!(
            "all {} covariate values equal {}",
            x.len(),
            x[0]
        )));
    }
    if y.iter().all(|&v| v == 0) {
        return Err(Error::Domain(
            "all responses are zero; the likelihood has no maximizer".into(),
        ));
    }
    let n = x.len() as f64;
    let mean_y = y.iter().map(|&v| v as f64).sum::<f64>() / n;
    let lik = Likelihood { x, y };
    let mut b = [(mean_y + 1e-12).ln(), 0.0];
    let (mut ll, mut s, mut h) = lik.eval(b);
    let norm = |s: [f64; 2]| (s[0] * s[0] + s[1] * s[1]).sqrt() / n;
    for it in 0..=MLE_MAX_ITERATIONS {
        if norm(s) < MLE_TOLERANCE {
            return Ok(MleFit {
                beta0_hat: b[0],
                beta1_hat: b[1],
                iterations: it,
                converged: true,
                score_norm: norm(s),
                observed_information: h,
                n: x.len(),
            });
        }
        if it == MLE_MAX_ITERATIONS {
            break;
        }
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if !(det > 0.0) {
            return Err(Error::DegenerateDesignMatrix(format!(
                "information determinant {det:e} at iteration {it}"
            )));
        }
        let step = [
            (h[1][1] * s[0] - h[0][1] * s[1]) / det,
            (h[0][0] * s[1] - h[1][0] * s[0]) / det,
        ];
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let cand = [b[0] + t * step[0], b[1] + t * step[1]];
            let (ll_c, s_c, h_c) = lik.eval(cand);
            // near the optimum the likelihood gain drops below its rounding,
            // so a smaller score also counts as progress
            let flat = ll_c >= ll - 1e-12 * (1.0 + ll.abs()) && norm(s_c) < norm(s);
            if ll_c.is_finite() && (ll_c >= ll || flat) {
                b = cand;
                (ll, s, h) = (ll_c, s_c, h_c);
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: MLE_MAX_ITERATIONS,
        score_norm: norm(s),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    pub alpha: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub mean_estimate: [f64; 2],
    /// Empirical covariance of `sqrt(α n) (β̂ - β)`.
    pub empirical_covariance: [[f64; 2]; 2],
    /// Inverse of the per-observation subsample information `M(ξ, β) / α`.
    pub asymptotic_covariance: [[f64; 2]; 2],
    /// Elementwise empirical / asymptotic.
    pub ratios: [[f64; 2]; 2],
    pub mean_subsample_size: f64,
}

/// Reference covariance of `sqrt(α n)(β̂ - β)`: the inverse of `M(ξ, β) / α`.
pub fn asymptotic_covariance(
    design: &SubsamplingDesign,
    beta0: f64,
    beta1: f64,
) -> Result<[[f64; 2]; 2]> {
    let alpha = design.mass();
    let m = design.moments(beta1)?.scaled(beta0.exp() / alpha);
    crate::design::info_matrix(&m, 0.0).inverse()
}

/// Monte Carlo replications of draw covariates, select, simulate, fit. Each
/// replication runs on its own stream of `seed`, so results do not depend on
/// the thread count.
pub fn validate_asymptotics(
    dist: &CovariateDistribution,
    design: &SubsamplingDesign,
    beta0: f64,
    beta1: f64,
    n: usize,
    replications: usize,
    seed: u64,
) -> Result<AsymptoticReport> {
    if replications < MIN_REPLICATIONS {
        return Err(Error::Domain(format!(
            "need at least {MIN_REPLICATIONS} replications, got {replications}"
        )));
    }
    if n == 0 {
        return Err(Error::Domain("sample size must be positive".into()));
    }
    let alpha = design.mass();
    let reference = asymptotic_covariance(design, beta0, beta1)?;
    let fits: Vec<([f64; 2], usize)> = (0..replications as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = seeded_rng(seed, rep);
            let x: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
            let sel = select_subsample(&x, design, rng.random())?;
            let xs: Vec<f64> = sel.indices.iter().map(|&i| x[i]).collect();
            let y = poisson_draws(&xs, beta0, beta1, &mut rng)?;
            let fit = fit_poisson_mle(&xs, &y)?;
            Ok(([fit.beta0_hat, fit.beta1_hat], xs.len()))
        })
        .collect::<Result<_>>()?;

    let r = replications as f64;
    let scale = (alpha * n as f64).sqrt();
    let mut mean = [0.0; 2];
    for (b, _) in &fits {
        mean[0] += b[0] / r;
        mean[1] += b[1] / r;
    }
    // spread about the true value, as in the limit statement
    let truth = [beta0, beta1];
    let mut cov = [[0.0; 2]; 2];
    for (b, _) in &fits {
        let z = [scale * (b[0] - truth[0]), scale * (b[1] - truth[1])];
        for i in 0..2 {
            for j in 0..2 {
                cov[i][j] += z[i] * z[j] / r;
            }
        }
    }
    let mut ratios = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            ratios[i][j] = cov[i][j] / reference[i][j];
        }
    }
    Ok(AsymptoticReport {
        n,
        replications,
        seed,
        alpha,
        beta0,
        beta1,
        mean_estimate: mean,
        empirical_covariance: cov,
        asymptotic_covariance: reference,
        ratios,
        mean_subsample_size: fits.iter().map(|(_, k)| *k as f64).sum::<f64>() / r,
    })
}

fn det2(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrecisionComparison {
    pub design: AsymptoticReport,
    pub reference: AsymptoticReport,
    /// `det Σ_design / det Σ_reference` from the empirical covariances.
    pub empirical_ratio: f64,
    /// `eff_D(reference)²` relative to `design`: `d(reference) / d(design)`.
    pub predicted_ratio: f64,
    pub relative_error: f64,
}

/// Empirical determinant precision of `reference` relative to `design`,
/// against the efficiency prediction. Both runs share `seed`.
#[allow(clippy::too_many_arguments)]
pub fn compare_precision(
    dist: &CovariateDistribution,
    design: &SubsamplingDesign,
    reference: &SubsamplingDesign,
    beta0: f64,
    beta1: f64,
    n: usize,
    replications: usize,
    seed: u64,
) -> Result<PrecisionComparison> {
    let a = validate_asymptotics(dist, design, beta0, beta1, n, replications, seed)?;
    let b = validate_asymptotics(dist, reference, beta0, beta1, n, replications, seed)?;
    let empirical_ratio = det2(&a.empirical_covariance) / det2(&b.empirical_covariance);
    let predicted_ratio = reference.moments(beta1)?.d / design.moments(beta1)?.d;
    Ok(PrecisionComparison {
        relative_error: (empirical_ratio - predicted_ratio).abs() / predicted_ratio,
        design: a,
        reference: b,
        empirical_ratio,
        predicted_ratio,
    })
}
