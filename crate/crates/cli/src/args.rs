use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "subopt",
    version,
    about = "Locally D-optimal bounded subsampling designs for Poisson regression"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Decimal places for printed reals.
    #[arg(long, global = true, default_value_t = 5)]
    pub precision: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistKind {
    Exp,
    Unif,
    Grid,
}

#[derive(Debug, Clone, Args)]
pub struct DistArgs {
    /// Covariate law.
    #[arg(long, value_enum)]
    pub dist: Option<DistKind>,
    /// Exponential rate.
    #[arg(long, allow_negative_numbers = true)]
    pub rate: Option<f64>,
    /// Uniform lower end.
    #[arg(long, allow_negative_numbers = true)]
    pub min: Option<f64>,
    /// Uniform upper end.
    #[arg(long, allow_negative_numbers = true)]
    pub max: Option<f64>,
    /// CSV of grid points and probabilities.
    #[arg(long)]
    pub grid_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DesignChoice {
    Optimal,
    Uniform,
    OneSided,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    Alpha,
    Slope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Find {
    Min,
    Max,
    LocalMin,
    LocalMax,
}

/// Proportion in (0, 1).
pub fn parse_alpha(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("alpha must lie in (0, 1), got {v}"))
    }
}

fn parse_real(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the optimal design and check the equivalence conditions.
    Design {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, value_parser = parse_alpha)]
        alpha: f64,
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true)]
        beta1: f64,
        /// Intercept used for the reported log determinant.
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true, default_value_t = 0.0)]
        beta0: f64,
    },
    /// Sensitivity function samples of a design.
    Sensitivity {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, value_parser = parse_alpha)]
        alpha: f64,
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true)]
        beta1: f64,
        #[arg(long, value_enum, default_value_t = DesignChoice::Optimal)]
        design: DesignChoice,
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true)]
        from: Option<f64>,
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true)]
        to: Option<f64>,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// D-efficiency of one design, a sweep, or the extremum of a sweep.
    Efficiency {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, value_parser = parse_alpha)]
        alpha: Option<f64>,
        /// True slope.
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true)]
        beta1: Option<f64>,
        #[arg(long, value_enum, default_value_t = DesignChoice::Uniform)]
        design: DesignChoice,
        /// Nominal slope for the optimal design under misspecification.
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true)]
        nominal: Option<f64>,
        /// Sweep axis.
        #[arg(long, value_enum)]
        sweep: Option<SweepKind>,
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true)]
        from: Option<f64>,
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true)]
        to: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// Fixed slope ratio beta1 / rate for an alpha sweep.
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true, default_value_t = -1.0)]
        slope_ratio: f64,
        /// Nominal slope ratios added to a sweep.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        nominal_ratios: Vec<f64>,
        /// Locate an extremum of the chosen design's efficiency over slope ratios.
        #[arg(long, value_enum)]
        find: Option<Find>,
    },
    /// Slope ratio at which the single-interval design becomes optimal.
    Crossover {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, value_parser = parse_alpha)]
        alpha: f64,
    },
    /// Proportion above which the single-interval design is optimal.
    CriticalAlpha {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true)]
        beta1: f64,
    },
    /// Map an optimal design through z = scale * x + shift.
    Transform {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, value_parser = parse_alpha)]
        alpha: f64,
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true)]
        beta1: f64,
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true)]
        scale: f64,
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true, default_value_t = 0.0)]
        shift: f64,
    },
    /// Select rows of a covariate CSV accepted by a design.
    Subsample {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long)]
        input: PathBuf,
        /// Header name of the covariate column; first column by default.
        #[arg(long)]
        column: Option<String>,
        #[arg(long, value_parser = parse_alpha)]
        alpha: f64,
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true)]
        beta1: Option<f64>,
        #[arg(long, value_enum, default_value_t = DesignChoice::Optimal)]
        design: DesignChoice,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Draw covariates (or read them) and simulate Poisson responses.
    Simulate {
        #[command(flatten)]
        dist: DistArgs,
        /// Covariate CSV; without it covariates are drawn from the distribution.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        column: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true)]
        beta0: f64,
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true)]
        beta1: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Poisson maximum likelihood fit of a CSV with covariate and count columns.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "x")]
        x_column: String,
        #[arg(long, default_value = "y")]
        y_column: String,
    },
    /// Monte Carlo check of the asymptotic covariance of a design.
    Validate {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, value_parser = parse_alpha)]
        alpha: f64,
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true)]
        beta0: f64,
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true)]
        beta1: f64,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 500)]
        replications: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = DesignChoice::Optimal)]
        design: DesignChoice,
        /// Also run this design and compare determinant precision.
        #[arg(long, value_enum)]
        compare: Option<DesignChoice>,
    },
    /// Compare the analytic optimum with a brute-force discretized optimum.
    OracleCheck {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, value_parser = parse_alpha)]
        alpha: f64,
        #[arg(long, value_parser = parse_real, allow_negative_numbers = true)]
        beta1: f64,
        #[arg(long, default_value_t = 2000)]
        bins: usize,
    },
    /// Reproduce a reference table: 1 exponential, 2 crossover, 3 uniform.
    Tables {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        which: u8,
    },
}
