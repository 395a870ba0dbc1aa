//! Covariate distributions and exponentially weighted partial moments.
//!
//! Every moment computation in the crate reduces to integrals of the form
//! `∫ x^k exp(β₁ x) f_X(x) dx` over an interval. [`CovariateDistribution::segment_moments`]
//! evaluates those for k = 0, 1, 2 in closed form; the tail moments
//! `g_k(t) = ∫_t^∞ x^k exp(β₁ x) f_X(x) dx` are the special case with an
//! infinite (or support-clipped) upper limit.

use std::io::Read;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Probability tolerance for an empirical grid's total mass.
pub const GRID_MASS_TOLERANCE: f64 = 1e-12;

/// The known law of the covariate X.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovariateDistribution {
    /// Density `λ exp(-λx)` on `[0, ∞)`.
    Exponential { rate: f64 },
    /// Constant density on `[x_min, x_max]`.
    Uniform { x_min: f64, x_max: f64 },
    /// Piecewise-constant histogram density.
    EmpiricalGrid(EmpiricalGrid),
    /// Law of `scale * X + shift` for a base law X that has no closed
    /// family under the map (e.g. a reflected or shifted exponential).
    LocationScale {
        base: Box<CovariateDistribution>,
        scale: f64,
        shift: f64,
    },
}

/// Values of `g_k(t) = ∫_t^∞ x^k exp(β₁ x) f_X(x) dx` for k = 0, 1, 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedTailMoments {
    pub g0: f64,
    pub g1: f64,
    pub g2: f64,
}

impl WeightedTailMoments {
    pub fn as_array(&self) -> [f64; 3] {
        [self.g0, self.g1, self.g2]
    }
}

/// Histogram representation of a covariate law.
///
/// Each grid point is the center of a bin. Interior bin edges sit at the
/// midpoints between neighbouring centers; the two outer edges are placed
/// half the adjacent spacing beyond the first and last center. The density
/// is constant within each bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalGrid {
    points: Vec<f64>,
    probabilities: Vec<f64>,
    #[serde(skip)]
    edges: Vec<f64>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl EmpiricalGrid {
    pub fn new(points: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidDistribution(
                "empirical grid needs at least two points".into(),
            ));
        }
        if points.len() != probabilities.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} grid points but {} probabilities",
                points.len(),
                probabilities.len()
            )));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidDistribution("grid points must be finite".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidDistribution(
                "grid points must be strictly increasing".into(),
            ));
        }
        if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidDistribution(
                "bin probabilities must be nonnegative".into(),
            ));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > GRID_MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "bin probabilities sum to {total}, not 1"
            )));
        }

        let n = points.len();
        let mut edges = Vec::with_capacity(n + 1);
        edges.push(points[0] - 0.5 * (points[1] - points[0]));
        for w in points.windows(2) {
            edges.push(0.5 * (w[0] + w[1]));
        }
        edges.push(points[n - 1] + 0.5 * (points[n - 1] - points[n - 2]));

        let mut cumulative = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for p in &probabilities {
            acc += p;
            cumulative.push(acc);
        }
        // absorb the <= 1e-12 rounding so cdf reaches exactly 1
        *cumulative.last_mut().unwrap() = 1.0;

        Ok(Self {
            points,
            probabilities,
            edges,
            cumulative,
        })
    }

    /// Reads a two-column `grid_point,probability` CSV; the header row is optional.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut points = Vec::new();
        let mut probabilities = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() < 2 {
                return Err(Error::Parse(format!(
                    "grid row {} has {} columns, expected 2",
                    row + 1,
                    record.len()
                )));
            }
            let x = record[0].parse::<f64>();
            let p = record[1].parse::<f64>();
            match (x, p) {
                (Ok(x), Ok(p)) => {
                    points.push(x);
                    probabilities.push(p);
                }
                _ if row == 0 => continue,
                _ => {
                    return Err(Error::Parse(format!(
                        "grid row {} is not numeric: {:?}",
                        row + 1,
                        record
                    )))
                }
            }
        }
        Self::new(points, probabilities)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    fn lower(&self) -> f64 {
        self.edges[0]
    }

    fn upper(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    fn bin_of(&self, x: f64) -> usize {
        // index i with edges[i] <= x < edges[i+1], clamped to valid bins
        let idx = self.edges.partition_point(|e| *e <= x);
        idx.saturating_sub(1).min(self.points.len() - 1)
    }

    fn density(&self, i: usize) -> f64 {
        self.probabilities[i] / (self.edges[i + 1] - self.edges[i])
    }

    fn pdf(&self, x: f64) -> f64 {
        if x < self.lower() || x > self.upper() {
            return 0.0;
        }
        self.density(self.bin_of(x))
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.lower() {
            return 0.0;
        }
        if x >= self.upper() {
            return 1.0;
        }
        let i = self.bin_of(x);
        let frac = (x - self.edges[i]) / (self.edges[i + 1] - self.edges[i]);
        self.cumulative[i] + self.probabilities[i] * frac
    }

    fn quantile(&self, p: f64) -> f64 {
        // first bin whose right cumulative reaches p and that carries mass
        let mut i = self.cumulative.partition_point(|c| *c < p).saturating_sub(1);
        i = i.min(self.points.len() - 1);
        while i + 1 < self.points.len() && self.probabilities[i] == 0.0 {
            i += 1;
        }
        let width = self.edges[i + 1] - self.edges[i];
        let frac = if self.probabilities[i] > 0.0 {
            ((p - self.cumulative[i]) / self.probabilities[i]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        self.edges[i] + frac * width
    }

    fn segment(&self, lo: f64, hi: f64, beta1: f64) -> [f64; 3] {
        let lo = lo.max(self.lower());
        let hi = hi.min(self.upper());
        let mut out = [0.0; 3];
        if hi <= lo {
            return out;
        }
        let first = self.bin_of(lo);
        let last = self.bin_of(hi);
        for i in first..=last {
            let l = lo.max(self.edges[i]);
            let r = hi.min(self.edges[i + 1]);
            if r <= l || self.probabilities[i] == 0.0 {
                continue;
            }
            let rho = self.density(i);
            let s = exp_poly_segment(l, r, beta1);
            for k in 0..3 {
                out[k] += rho * s[k];
            }
        }
        out
    }

    fn transformed(&self, scale: f64, shift: f64) -> Self {
        let mut points: Vec<f64> = self.points.iter().map(|x| scale * x + shift).collect();
        let mut probabilities = self.probabilities.clone();
        if scale < 0.0 {
            points.reverse();
            probabilities.reverse();
        }
        Self::new(points, probabilities).expect("affine image of a valid grid is valid")
    }
}

impl CovariateDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        let d = Self::Exponential { rate };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(x_min: f64, x_max: f64) -> Result<Self> {
        let d = Self::Uniform { x_min, x_max };
        d.validate()?;
        Ok(d)
    }

    pub fn empirical(points: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        Ok(Self::EmpiricalGrid(EmpiricalGrid::new(points, probabilities)?))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Exponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(Error::InvalidDistribution(format!(
                        "exponential rate must be positive, got {rate}"
                    )));
                }
            }
            Self::Uniform { x_min, x_max } => {
                if !(x_min.is_finite() && x_max.is_finite() && x_max - x_min > 0.0) {
                    return Err(Error::InvalidDistribution(format!(
                        "uniform bounds must satisfy x_min < x_max, got [{x_min}, {x_max}]"
                    )));
                }
            }
            Self::EmpiricalGrid(_) => {}
            Self::LocationScale { base, scale, shift } => {
                if !(scale.is_finite() && *scale != 0.0 && shift.is_finite()) {
                    return Err(Error::InvalidDistribution(format!(
                        "location-scale map needs finite nonzero scale, got a={scale}, b={shift}"
                    )));
                }
                base.validate()?;
            }
        }
        Ok(())
    }

    /// Law of `scale * X + shift`, kept in closed family form when one exists.
    pub fn transformed(&self, scale: f64, shift: f64) -> Result<Self> {
        if !(scale.is_finite() && scale != 0.0 && shift.is_finite()) {
            return Err(Error::Domain(format!(
                "transform needs finite nonzero scale, got a={scale}, b={shift}"
            )));
        }
        Ok(match self {
            Self::Uniform { x_min, x_max } => {
                let (u, v) = (scale * x_min + shift, scale * x_max + shift);
                Self::Uniform {
                    x_min: u.min(v),
                    x_max: u.max(v),
                }
            }
            Self::Exponential { rate } if scale > 0.0 && shift == 0.0 => Self::Exponential {
                rate: rate / scale,
            },
            Self::EmpiricalGrid(g) => Self::EmpiricalGrid(g.transformed(scale, shift)),
            Self::LocationScale {
                base,
                scale: a0,
                shift: b0,
            } => {
                let a = scale * a0;
                let b = scale * b0 + shift;
                if a == 1.0 && b == 0.0 {
                    (**base).clone()
                } else {
                    base.transformed(a, b)?
                }
            }
            other => Self::LocationScale {
                base: Box::new(other.clone()),
                scale,
                shift,
            },
        })
    }

    /// Essential infimum of the support (may be `-∞`).
    pub fn ess_inf(&self) -> f64 {
        match self {
            Self::Exponential { .. } => 0.0,
            Self::Uniform { x_min, .. } => *x_min,
            Self::EmpiricalGrid(g) => g.lower(),
            Self::LocationScale { base, scale, shift } => {
                if *scale > 0.0 {
                    scale * base.ess_inf() + shift
                } else {
                    scale * base.ess_sup() + shift
                }
            }
        }
    }

    /// Essential supremum of the support (may be `+∞`).
    pub fn ess_sup(&self) -> f64 {
        match self {
            Self::Exponential { .. } => f64::INFINITY,
            Self::Uniform { x_max, .. } => *x_max,
            Self::EmpiricalGrid(g) => g.upper(),
            Self::LocationScale { base, scale, shift } => {
                if *scale > 0.0 {
                    scale * base.ess_sup() + shift
                } else {
                    scale * base.ess_inf() + shift
                }
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Self::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            Self::Uniform { x_min, x_max } => {
                if x < *x_min || x > *x_max {
                    0.0
                } else {
                    1.0 / (x_max - x_min)
                }
            }
            Self::EmpiricalGrid(g) => g.pdf(x),
            Self::LocationScale { base, scale, shift } => {
                base.pdf((x - shift) / scale) / scale.abs()
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Self::Uniform { x_min, x_max } => ((x - x_min) / (x_max - x_min)).clamp(0.0, 1.0),
            Self::EmpiricalGrid(g) => g.cdf(x),
            Self::LocationScale { base, scale, shift } => {
                let u = (x - shift) / scale;
                if *scale > 0.0 {
                    base.cdf(u)
                } else {
                    1.0 - base.cdf(u)
                }
            }
        }
    }

    /// Upper-tail probability `1 - F(x)`, without cancellation for the
    /// closed-form variants.
    pub fn survival(&self, x: f64) -> f64 {
        match self {
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            Self::LocationScale { base, scale, shift } if *scale < 0.0 => {
                base.cdf((x - shift) / scale)
            }
            _ => 1.0 - self.cdf(x),
        }
    }

    /// Generalized inverse of the cdf for `p` in the open unit interval.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("quantile level {p} is not in (0, 1)")));
        }
        Ok(self.quantile_unchecked(p))
    }

    fn quantile_unchecked(&self, p: f64) -> f64 {
        match self {
            Self::Exponential { rate } => -(-p).ln_1p() / rate,
            Self::Uniform { x_min, x_max } => (1.0 - p) * x_min + p * x_max,
            Self::EmpiricalGrid(g) => g.quantile(p),
            Self::LocationScale { base, scale, shift } => {
                let u = if *scale > 0.0 {
                    base.quantile_unchecked(p)
                } else {
                    base.quantile_unchecked(1.0 - p)
                };
                scale * u + shift
            }
        }
    }

    /// Slope-dependent finiteness guard for the weighted moments.
    pub fn check_slope(&self, beta1: f64) -> Result<()> {
        if !beta1.is_finite() {
            return Err(Error::Domain(format!("slope {beta1} is not finite")));
        }
        match self {
            Self::Exponential { rate } if beta1 >= *rate => Err(Error::MomentDivergence {
                beta1,
                rate: *rate,
            }),
            Self::LocationScale { base, scale, .. } => base.check_slope(beta1 * scale),
            _ => Ok(()),
        }
    }

    /// `∫_lo^hi x^k exp(β₁ x) f_X(x) dx` for k = 0, 1, 2. Limits outside the
    /// support are clipped to it; an empty range yields zeros.
    pub fn segment_moments(&self, lo: f64, hi: f64, beta1: f64) -> Result<[f64; 3]> {
        self.check_slope(beta1)?;
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::Domain("NaN integration limit".into()));
        }
        Ok(self.segment_unchecked(lo, hi, beta1))
    }

    fn segment_unchecked(&self, lo: f64, hi: f64, beta1: f64) -> [f64; 3] {
        match self {
            Self::Exponential { rate } => {
                let lo = lo.max(0.0);
                if hi <= lo {
                    return [0.0; 3];
                }
                let s = exp_poly_segment(lo, hi, beta1 - rate);
                [rate * s[0], rate * s[1], rate * s[2]]
            }
            Self::Uniform { x_min, x_max } => {
                let lo = lo.max(*x_min);
                let hi = hi.min(*x_max);
                if hi <= lo {
                    return [0.0; 3];
                }
                let inv_width = 1.0 / (x_max - x_min);
                let s = if beta1 == 0.0 {
                    polynomial_segment(lo, hi)
                } else {
                    exp_poly_segment(lo, hi, beta1)
                };
                [inv_width * s[0], inv_width * s[1], inv_width * s[2]]
            }
            Self::EmpiricalGrid(g) => g.segment(lo, hi, beta1),
            Self::LocationScale { base, scale, shift } => {
                // z = a x + b; integrate over the preimage in x
                let (a, b) = (*scale, *shift);
                let (u, v) = ((lo - b) / a, (hi - b) / a);
                let (xl, xh) = if a > 0.0 { (u, v) } else { (v, u) };
                let s = base.segment_unchecked(xl, xh, beta1 * a);
                let w = (beta1 * b).exp();
                [
                    w * s[0],
                    w * (a * s[1] + b * s[0]),
                    w * (a * a * s[2] + 2.0 * a * b * s[1] + b * b * s[0]),
                ]
            }
        }
    }

    /// Tail moments `g_k(t)` for k = 0, 1, 2.
    pub fn tail_moments(&self, t: f64, beta1: f64) -> Result<WeightedTailMoments> {
        let [g0, g1, g2] = self.segment_moments(t, f64::INFINITY, beta1)?;
        Ok(WeightedTailMoments { g0, g1, g2 })
    }

    /// Draw one covariate value by inversion.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                return self.quantile_unchecked(u);
            }
        }
    }
}

/// `∫_0^1 v^k exp(z v) dv` for k = 0, 1, 2.
fn unit_exp_moments(z: f64) -> [f64; 3] {
    if z.abs() <= 2.0 {
        let mut out = [0.0; 3];
        let mut term = 1.0; // z^n / n!
        for n in 0..60 {
            let nf = n as f64;
            let contrib = [term / (nf + 1.0), term / (nf + 2.0), term / (nf + 3.0)];
            for k in 0..3 {
                out[k] += contrib[k];
            }
            if contrib[0].abs() < 1e-18 * out[0].abs() {
                break;
            }
            term *= z / (nf + 1.0);
        }
        out
    } else {
        let ez = z.exp();
        let j0 = z.exp_m1() / z;
        let j1 = (ez - j0) / z;
        let j2 = (ez - 2.0 * j1) / z;
        [j0, j1, j2]
    }
}

/// `∫_lo^hi x^k exp(rate x) dx` for k = 0, 1, 2 with `lo` finite; `hi` may be
/// `+∞` when `rate < 0`.
pub(crate) fn exp_poly_segment(lo: f64, hi: f64, rate: f64) -> [f64; 3] {
    if hi.is_infinite() {
        debug_assert!(rate < 0.0);
        let c = -rate;
        let g0 = (-c * lo).exp() / c;
        let g1 = (lo + 1.0 / c) * g0;
        let g2 = lo * lo * g0 + 2.0 / c * g1;
        return [g0, g1, g2];
    }
    let h = hi - lo;
    let [j0, j1, j2] = unit_exp_moments(rate * h);
    let base = (rate * lo).exp();
    let i0 = h * j0;
    let i1 = h * h * j1;
    let i2 = h * h * h * j2;
    [
        base * i0,
        base * (lo * i0 + i1),
        base * (lo * lo * i0 + 2.0 * lo * i1 + i2),
    ]
}

/// `∫_lo^hi x^k dx` for k = 0, 1, 2.
fn polynomial_segment(lo: f64, hi: f64) -> [f64; 3] {
    [
        hi - lo,
        0.5 * (hi * hi - lo * lo),
        (hi * hi * hi - lo * lo * lo) / 3.0,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pdf_examples() {
        let e = CovariateDistribution::exponential(1.0).unwrap();
        assert_eq!(e.pdf(0.0), 1.0);
        let u = CovariateDistribution::uniform(0.0, 1.0).unwrap();
        assert_eq!(u.pdf(0.5), 1.0);
        assert_eq!(u.pdf(2.0), 0.0);
    }

    #[test]
    fn quantiles() {
        let e = CovariateDistribution::exponential(1.0).unwrap();
        assert!((e.quantile(0.1).unwrap() - 0.10536).abs() < 5e-6);
        let e2 = CovariateDistribution::exponential(2.0).unwrap();
        assert!((e2.quantile(0.1).unwrap() - 0.05268).abs() < 5e-6);
        let u = CovariateDistribution::uniform(0.0, 1.0).unwrap();
        assert_eq!(u.quantile(0.5).unwrap(), 0.5);
        assert!(u.quantile(0.0).is_err());
        assert!(u.quantile(1.0).is_err());
        assert!(u.quantile(-0.3).is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(CovariateDistribution::exponential(0.0).is_err());
        assert!(CovariateDistribution::exponential(-1.0).is_err());
        assert!(CovariateDistribution::uniform(1.0, 1.0).is_err());
        assert!(CovariateDistribution::empirical(vec![0.0, 1.0], vec![0.5, 0.4]).is_err());
        assert!(CovariateDistribution::empirical(vec![1.0, 0.0], vec![0.5, 0.5]).is_err());
        assert!(CovariateDistribution::empirical(vec![0.0, 1.0], vec![1.2, -0.2]).is_err());
    }

    #[test]
    fn exponential_tail_moment_examples() {
        let e = CovariateDistribution::exponential(1.0).unwrap();
        let g = e.tail_moments(0.0, 0.0).unwrap();
        assert_relative_eq!(g.g0, 1.0, max_relative = 1e-15);
        assert_relative_eq!(g.g1, 1.0, max_relative = 1e-15);
        assert_relative_eq!(g.g2, 2.0, max_relative = 1e-15);
        let g = e.tail_moments(0.0, -1.0).unwrap();
        assert_relative_eq!(g.g0, 0.5, max_relative = 1e-15);
        assert_relative_eq!(g.g1, 0.25, max_relative = 1e-15);
    }

    #[test]
    fn exponential_slope_at_rate_diverges() {
        let e = CovariateDistribution::exponential(1.0).unwrap();
        assert!(matches!(
            e.tail_moments(0.0, 1.0),
            Err(Error::MomentDivergence { .. })
        ));
        assert!(e.tail_moments(0.0, 0.99).is_ok());
    }

    #[test]
    fn uniform_tail_clamps_and_matches_closed_form() {
        let u = CovariateDistribution::uniform(0.0, 1.0).unwrap();
        let g = u.tail_moments(0.0, -2.0).unwrap();
        assert_relative_eq!(g.g0, (1.0 - (-2.0f64).exp()) / 2.0, max_relative = 1e-14);
        // clamped below the support
        let g_low = u.tail_moments(-5.0, -2.0).unwrap();
        assert_eq!(g.g0, g_low.g0);
        // above the support
        let g_hi = u.tail_moments(3.0, -2.0).unwrap();
        assert_eq!(g_hi.as_array(), [0.0; 3]);
    }

    #[test]
    fn unit_series_and_recursion_agree_at_switch() {
        for z in [-2.0, 2.0] {
            let a = unit_exp_moments(z);
            let ez = f64::exp(z);
            let j0 = z.exp_m1() / z;
            let j1 = (ez - j0) / z;
            let j2 = (ez - 2.0 * j1) / z;
            assert_relative_eq!(a[0], j0, max_relative = 1e-13);
            assert_relative_eq!(a[1], j1, max_relative = 1e-13);
            assert_relative_eq!(a[2], j2, max_relative = 1e-12);
        }
    }

    #[test]
    fn grid_cdf_quantile_inverse() {
        let g = CovariateDistribution::empirical(vec![0.5, 1.5, 2.5], vec![0.2, 0.0, 0.8]).unwrap();
        assert_eq!(g.ess_inf(), 0.0);
        assert_eq!(g.ess_sup(), 3.0);
        assert_relative_eq!(g.cdf(1.0), 0.2, max_relative = 1e-15);
        assert_relative_eq!(g.cdf(2.5), 0.6, max_relative = 1e-15);
        // the zero-probability bin is skipped by the generalized inverse
        assert_relative_eq!(g.quantile(0.2).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(g.quantile(0.6).unwrap(), 2.5, max_relative = 1e-15);
        assert_relative_eq!(g.pdf(2.9), 0.8, max_relative = 1e-15);
    }

    #[test]
    fn grid_from_csv_with_and_without_header() {
        let with = "grid_point,probability\n0.0,0.25\n1.0,0.75\n";
        let without = "0.0,0.25\n1.0,0.75\n";
        let a = EmpiricalGrid::from_csv_reader(with.as_bytes()).unwrap();
        let b = EmpiricalGrid::from_csv_reader(without.as_bytes()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.edges(), &[-0.5, 0.5, 1.5]);
        assert!(EmpiricalGrid::from_csv_reader("0,0.5\nx,0.5\n".as_bytes()).is_err());
    }

    #[test]
    fn transforms_stay_in_family() {
        let u = CovariateDistribution::uniform(0.0, 1.0).unwrap();
        assert_eq!(
            u.transformed(-1.0, 1.0).unwrap(),
            CovariateDistribution::Uniform {
                x_min: 0.0,
                x_max: 1.0
            }
        );
        let e = CovariateDistribution::exponential(1.0).unwrap();
        assert_eq!(
            e.transformed(0.5, 0.0).unwrap(),
            CovariateDistribution::Exponential { rate: 2.0 }
        );
        let r = e.transformed(-1.0, 0.0).unwrap();
        assert!(matches!(r, CovariateDistribution::LocationScale { .. }));
        assert_eq!(r.transformed(-1.0, 0.0).unwrap(), e);
        assert!(e.transformed(0.0, 1.0).is_err());
    }

    #[test]
    fn reflected_exponential_consistency() {
        let e = CovariateDistribution::exponential(1.5).unwrap();
        let r = e.transformed(-2.0, 1.0).unwrap();
        assert_eq!(r.ess_sup(), 1.0);
        assert_eq!(r.ess_inf(), f64::NEG_INFINITY);
        let q = r.quantile(0.3).unwrap();
        assert_relative_eq!(r.cdf(q), 0.3, max_relative = 1e-12);
        assert_relative_eq!(r.survival(q), 0.7, max_relative = 1e-12);
        // slope 0.5 on Z = -2X + 1 needs -1 < 1.5 on X: fine; slope -1 needs 2 < 1.5: diverges
        assert!(r.check_slope(0.5).is_ok());
        assert!(r.check_slope(-1.0).is_err());
    }
}
