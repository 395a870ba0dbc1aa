//! Locally D-optimal bounded subsampling designs for Poisson regression in a
//! single covariate.
//!
//! The crate covers the full workflow: a known covariate law
//! ([`dist`]), designs and their information ([`design`]), the optimal
//! design solver with its equivalence check ([`solver`]), heuristic
//! competitors and efficiencies ([`efficiency`]), a discretized brute-force
//! cross-check ([`oracle`]), applying designs to data ([`sampler`]) and
//! reference tables ([`tables`]).

// `!(x > 0.0)` is deliberate throughout: NaN must fail every domain check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod dist;
pub mod efficiency;
pub mod error;
pub mod oracle;
pub mod sampler;
pub mod solver;
pub mod tables;

pub use design::{
    DesignKind, InfoMatrix, Interval, IntervalSet, MomentVector, SubsamplingDesign,
};
pub use dist::{CovariateDistribution, EmpiricalGrid, WeightedTailMoments};
pub use efficiency::{EfficiencyReport, Heuristic, SweepAxis};
pub use error::{Error, Result};
pub use oracle::{BruteForceResult, DiscretizedProblem, OracleCheck};
pub use sampler::{AsymptoticReport, MleFit, PrecisionComparison, SubsampleSelection};
pub use solver::{OptimalDesignResult, Scenario, Verification};
