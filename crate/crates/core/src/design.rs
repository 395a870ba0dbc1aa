//! Bounded subsampling designs, their moments, information and sensitivity.

use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::dist::CovariateDistribution;
use crate::error::{Error, Result};

/// The sensitivity function reported by [`sensitivity`] omits the design mass
/// factor. Optimality conditions only compare values of the function against
/// each other, so this is a pure normalization choice.
pub const SENSITIVITY_INCLUDES_ALPHA: bool = false;

/// A closed interval `[lower, upper]`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Ordered, pairwise disjoint closed intervals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

impl IntervalSet {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        for iv in &intervals {
            if iv.lower.is_nan() || iv.upper.is_nan() || !(iv.lower < iv.upper) {
                return Err(Error::Domain(format!(
                    "interval [{}, {}] is empty or malformed",
                    iv.lower, iv.upper
                )));
            }
            if iv.lower == f64::INFINITY || iv.upper == f64::NEG_INFINITY {
                return Err(Error::Domain("interval lies entirely at infinity".into()));
            }
        }
        for w in intervals.windows(2) {
            if !(w[0].upper < w[1].lower) {
                return Err(Error::Domain(format!(
                    "intervals [{}, {}] and [{}, {}] overlap or are out of order",
                    w[0].lower, w[0].upper, w[1].lower, w[1].upper
                )));
            }
        }
        Ok(Self { intervals })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(l, u)| Interval::new(l, u)).collect())
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        // few intervals; linear scan beats a search
        self.intervals.iter().any(|iv| iv.contains(x))
    }

    /// Finite endpoints in increasing order.
    pub fn finite_endpoints(&self) -> Vec<f64> {
        self.intervals
            .iter()
            .flat_map(|iv| [iv.lower, iv.upper])
            .filter(|x| x.is_finite())
            .collect()
    }

    /// Intersect every interval with `[lo, hi]`, dropping empty pieces.
    pub fn clipped(&self, lo: f64, hi: f64) -> IntervalSet {
        let intervals = self
            .intervals
            .iter()
            .filter_map(|iv| {
                let l = iv.lower.max(lo);
                let u = iv.upper.min(hi);
                (l < u).then_some(Interval::new(l, u))
            })
            .collect();
        IntervalSet { intervals }
    }

    /// Image under `z = a x + b`; order reverses when `a < 0`.
    pub fn transformed(&self, a: f64, b: f64) -> Result<IntervalSet> {
        if !(a.is_finite() && a != 0.0 && b.is_finite()) {
            return Err(Error::Domain(format!(
                "transform needs finite nonzero scale, got a={a}, b={b}"
            )));
        }
        let map = |x: f64| if x.is_infinite() { x * a.signum() } else { a * x + b };
        let mut intervals: Vec<Interval> = self
            .intervals
            .iter()
            .map(|iv| {
                let (p, q) = (map(iv.lower), map(iv.upper));
                Interval::new(p.min(q), p.max(q))
            })
            .collect();
        if a < 0.0 {
            intervals.reverse();
        }
        IntervalSet::new(intervals)
    }
}

fn encode_bound(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl Serialize for IntervalSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.intervals.len()))?;
        for iv in &self.intervals {
            seq.serialize_element(&[encode_bound(iv.lower), encode_bound(iv.upper)])?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for IntervalSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw: Vec<[Option<f64>; 2]> = Vec::deserialize(deserializer)?;
        let intervals = raw
            .into_iter()
            .map(|[l, u]| {
                Interval::new(l.unwrap_or(f64::NEG_INFINITY), u.unwrap_or(f64::INFINITY))
            })
            .collect();
        IntervalSet::new(intervals).map_err(de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignKind {
    /// Density `f_X · 1_support`: every unit in the support is accepted.
    IntervalSupported { support: IntervalSet },
    /// Density `α · f_X`: units are accepted independently with probability α.
    ScaledUniform { alpha: f64 },
}

/// A bounded subsampling design tied to its covariate law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsamplingDesign {
    pub dist: CovariateDistribution,
    pub kind: DesignKind,
}

impl SubsamplingDesign {
    pub fn interval_supported(dist: CovariateDistribution, support: IntervalSet) -> Result<Self> {
        let design = Self {
            dist,
            kind: DesignKind::IntervalSupported { support },
        };
        let m = design.mass();
        if !(m > 0.0 && m <= 1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "design mass {m} is outside (0, 1]"
            )));
        }
        Ok(design)
    }

    pub fn scaled_uniform(dist: CovariateDistribution, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Domain(format!("alpha {alpha} is outside (0, 1]")));
        }
        Ok(Self {
            dist,
            kind: DesignKind::ScaledUniform { alpha },
        })
    }

    pub fn support(&self) -> Option<&IntervalSet> {
        match &self.kind {
            DesignKind::IntervalSupported { support } => Some(support),
            DesignKind::ScaledUniform { .. } => None,
        }
    }

    /// Ratio `f_ξ(x) / f_X(x)` used for acceptance.
    pub fn acceptance_probability(&self, x: f64) -> f64 {
        match &self.kind {
            DesignKind::IntervalSupported { support } => {
                if support.contains(x) {
                    1.0
                } else {
                    0.0
                }
            }
            DesignKind::ScaledUniform { alpha } => *alpha,
        }
    }

    pub fn mass(&self) -> f64 {
        mass(self)
    }

    pub fn moments(&self, beta1: f64) -> Result<MomentVector> {
        moments(self, beta1)
    }
}

/// Probability of `[lo, hi]` under the covariate law.
pub fn interval_probability(dist: &CovariateDistribution, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if hi == f64::INFINITY {
        dist.survival(lo)
    } else {
        dist.cdf(hi) - dist.cdf(lo)
    }
}

/// Total mass of the design density.
pub fn mass(design: &SubsamplingDesign) -> f64 {
    match &design.kind {
        DesignKind::IntervalSupported { support } => support
            .intervals()
            .iter()
            .map(|iv| interval_probability(&design.dist, iv.lower, iv.upper))
            .sum(),
        DesignKind::ScaledUniform { alpha } => *alpha,
    }
}

/// Weighted moments `m_k = ∫ x^k exp(β₁x) f_ξ(x) dx` and `d = m0 m2 - m1²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentVector {
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
    pub d: f64,
}

impl MomentVector {
    pub fn new(m0: f64, m1: f64, m2: f64) -> Self {
        Self {
            m0,
            m1,
            m2,
            d: m0 * m2 - m1 * m1,
        }
    }

    fn from_array(m: [f64; 3]) -> Self {
        Self::new(m[0], m[1], m[2])
    }

    /// `m0 x² - 2 m1 x + m2`, the polynomial factor of the sensitivity.
    pub fn quadratic(&self, x: f64) -> f64 {
        // written around the weighted mean to avoid cancellation
        let c = self.m1 / self.m0;
        let dx = x - c;
        self.m0 * dx * dx + self.d / self.m0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(factor * self.m0, factor * self.m1, factor * self.m2)
    }

    fn require_nonsingular(&self) -> Result<()> {
        if self.d > 0.0 && self.m0 > 0.0 && self.d.is_finite() {
            Ok(())
        } else {
            Err(Error::SingularDesign(self.d))
        }
    }
}

/// Moments of a design at slope β₁; intervals are clipped to the support.
pub fn moments(design: &SubsamplingDesign, beta1: f64) -> Result<MomentVector> {
    let dist = &design.dist;
    match &design.kind {
        DesignKind::IntervalSupported { support } => {
            let mut acc = [0.0; 3];
            for iv in support.intervals() {
                let s = dist.segment_moments(iv.lower, iv.upper, beta1)?;
                for k in 0..3 {
                    acc[k] += s[k];
                }
            }
            Ok(MomentVector::from_array(acc))
        }
        DesignKind::ScaledUniform { alpha } => {
            let s = dist.segment_moments(f64::NEG_INFINITY, f64::INFINITY, beta1)?;
            Ok(MomentVector::from_array(s).scaled(*alpha))
        }
    }
}

/// The symmetric 2×2 information matrix `exp(β₀) [[m0, m1], [m1, m2]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfoMatrix {
    pub entries: [[f64; 2]; 2],
}

impl InfoMatrix {
    pub fn det(&self) -> f64 {
        let e = &self.entries;
        e[0][0] * e[1][1] - e[0][1] * e[1][0]
    }

    pub fn inverse(&self) -> Result<[[f64; 2]; 2]> {
        let det = self.det();
        if !(det > 0.0) {
            return Err(Error::SingularDesign(det));
        }
        let e = &self.entries;
        Ok([
            [e[1][1] / det, -e[0][1] / det],
            [-e[1][0] / det, e[0][0] / det],
        ])
    }
}

pub fn info_matrix(moments: &MomentVector, beta0: f64) -> InfoMatrix {
    let s = beta0.exp();
    InfoMatrix {
        entries: [
            [s * moments.m0, s * moments.m1],
            [s * moments.m1, s * moments.m2],
        ],
    }
}

/// `log det M(ξ, β) = 2β₀ + log d`.
pub fn log_det(moments: &MomentVector, beta0: f64) -> Result<f64> {
    moments.require_nonsingular()?;
    Ok(2.0 * beta0 + moments.d.ln())
}

/// `ψ(x) = exp(β₁x)(m0 x² - 2 m1 x + m2) / d`.
pub fn sensitivity(x: f64, moments: &MomentVector, beta1: f64) -> Result<f64> {
    moments.require_nonsingular()?;
    Ok((beta1 * x).exp() * moments.quadratic(x) / moments.d)
}

/// `ln ψ(x)`, finite even where ψ itself under- or overflows.
pub fn log_sensitivity(x: f64, moments: &MomentVector, beta1: f64) -> Result<f64> {
    moments.require_nonsingular()?;
    Ok(beta1 * x + moments.quadratic(x).ln() - moments.d.ln())
}

/// Stationary points of ψ: real roots of `β₁ q(x) + q'(x) = 0`.
pub fn sensitivity_critical_points(moments: &MomentVector, beta1: f64) -> Vec<f64> {
    let MomentVector { m0, m1, m2, .. } = *moments;
    if beta1 == 0.0 {
        return vec![m1 / m0];
    }
    // β m0 x² + (2 m0 - 2β m1) x + (β m2 - 2 m1) = 0
    let a = beta1 * m0;
    let b = 2.0 * m0 - 2.0 * beta1 * m1;
    let c = beta1 * m2 - 2.0 * m1;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    let mut roots = vec![q / a];
    if q != 0.0 {
        roots.push(c / q);
    }
    roots.sort_by(f64::total_cmp);
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn exp1() -> CovariateDistribution {
        CovariateDistribution::exponential(1.0).unwrap()
    }

    fn unif01() -> CovariateDistribution {
        CovariateDistribution::uniform(0.0, 1.0).unwrap()
    }

    #[test]
    fn mass_examples() {
        let q = exp1().quantile(0.3).unwrap();
        let d = SubsamplingDesign::interval_supported(
            exp1(),
            IntervalSet::from_pairs(&[(f64::NEG_INFINITY, q)]).unwrap(),
        )
        .unwrap();
        assert_relative_eq!(d.mass(), 0.3, max_relative = 1e-14);

        let d = SubsamplingDesign::interval_supported(
            unif01(),
            IntervalSet::from_pairs(&[(0.0, 0.05), (0.95, 1.0)]).unwrap(),
        )
        .unwrap();
        assert_relative_eq!(d.mass(), 0.1, max_relative = 1e-12);

        let d = SubsamplingDesign::interval_supported(
            exp1(),
            IntervalSet::from_pairs(&[(0.0, 0.05181), (2.92225, 5.44835)]).unwrap(),
        )
        .unwrap();
        assert!((d.mass() - 0.1).abs() < 1e-4);
    }

    #[test]
    fn moments_examples() {
        let full = SubsamplingDesign::interval_supported(
            exp1(),
            IntervalSet::from_pairs(&[(f64::NEG_INFINITY, f64::INFINITY)]).unwrap(),
        )
        .unwrap();
        let m = full.moments(0.0).unwrap();
        assert_relative_eq!(m.m0, 1.0, max_relative = 1e-14);
        assert_relative_eq!(m.m1, 1.0, max_relative = 1e-14);
        assert_relative_eq!(m.m2, 2.0, max_relative = 1e-14);

        let half = SubsamplingDesign::scaled_uniform(exp1(), 0.5).unwrap();
        assert_relative_eq!(half.moments(-1.0).unwrap().m0, 0.25, max_relative = 1e-14);

        let d = SubsamplingDesign::interval_supported(
            unif01(),
            IntervalSet::from_pairs(&[(0.0, 0.04578), (0.49506, 0.54928)]).unwrap(),
        )
        .unwrap();
        assert!(d.moments(-4.0).unwrap().d > 0.0);
        assert!((d.mass() - 0.1).abs() < 1e-4);
    }

    #[test]
    fn log_det_examples() {
        let m = MomentVector::new(1.0, 0.0, 1.0);
        assert_eq!(log_det(&m, 0.0).unwrap(), 0.0);
        assert_relative_eq!(log_det(&m, 1.0).unwrap(), 2.0, max_relative = 1e-15);
        let im = info_matrix(&m, 1.0);
        assert_relative_eq!(im.det().ln(), 2.0, max_relative = 1e-14);
        let bad = MomentVector::new(1.0, 1.0, 1.0);
        assert!(matches!(log_det(&bad, 0.0), Err(Error::SingularDesign(_))));
        assert!(sensitivity(0.0, &bad, 0.0).is_err());
    }

    #[test]
    fn sensitivity_examples() {
        let m = MomentVector::new(1.0, 0.0, 1.0 / 3.0);
        assert_relative_eq!(sensitivity(0.0, &m, 0.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(sensitivity(1.0, &m, 0.0).unwrap(), 4.0, max_relative = 1e-14);
        let m = MomentVector::new(0.3, 0.2, 0.5);
        assert!(sensitivity(60.0, &m, -1.0).unwrap() < 1e-20);
        assert!(sensitivity(-60.0, &m, -1.0).unwrap() > 1e20);
    }

    #[test]
    fn interval_set_validation_and_json() {
        assert!(IntervalSet::from_pairs(&[(1.0, 0.0)]).is_err());
        assert!(IntervalSet::from_pairs(&[(0.0, 2.0), (1.0, 3.0)]).is_err());
        let s = IntervalSet::from_pairs(&[(f64::NEG_INFINITY, 0.5), (2.0, f64::INFINITY)]).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "[[null,0.5],[2.0,null]]");
        let back: IntervalSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        let flipped = s.transformed(-1.0, 1.0).unwrap();
        assert_eq!(
            flipped,
            IntervalSet::from_pairs(&[(f64::NEG_INFINITY, -1.0), (0.5, f64::INFINITY)]).unwrap()
        );
    }

    #[test]
    fn critical_points_are_stationary() {
        let d = SubsamplingDesign::interval_supported(
            exp1(),
            IntervalSet::from_pairs(&[(0.0, 0.4)]).unwrap(),
        )
        .unwrap();
        let m = d.moments(-3.0).unwrap();
        for x in sensitivity_critical_points(&m, -3.0) {
            let h = 1e-5;
            let dp = (sensitivity(x + h, &m, -3.0).unwrap() - sensitivity(x - h, &m, -3.0).unwrap())
                / (2.0 * h);
            assert!(dp.abs() < 1e-6 * sensitivity(x, &m, -3.0).unwrap());
        }
    }
}
