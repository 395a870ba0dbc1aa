use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde_json::{json, Map, Value};
use subopt::design::{log_det, sensitivity};
use subopt::efficiency::{
    efficiency_against, global_extremum, local_extrema, misspecification_efficiency,
    slope_unit, Extremum, Heuristic, SweepAxis, DEFAULT_ALPHA_SWEEP, DEFAULT_SLOPE_SWEEP,
    GOLDEN_TOLERANCE,
};
use subopt::solver::{
    critical_alpha, crossover_slope, solve_optimal, transform_design, OptimalDesignResult,
    Scenario,
};
use subopt::{oracle, sampler, tables, CovariateDistribution, EmpiricalGrid, SubsamplingDesign};

use crate::args::{Command, DesignChoice, DistArgs, DistKind, Find, Format, SweepKind};
use crate::output::{Cell, Table};
use crate::CliError;

/// Command result before formatting.
pub enum Rendered {
    Json(Value),
    /// Both renderings; the format flag picks one.
    Either { json: Value, table: Table },
}

pub struct Outcome {
    pub body: Rendered,
    pub default_format: Format,
    /// Set when the command ran but its check failed.
    pub verification_failure: Option<String>,
}

fn done(body: Rendered, default_format: Format) -> Result<Outcome, CliError> {
    Ok(Outcome {
        body,
        default_format,
        verification_failure: None,
    })
}

impl DistArgs {
    fn build(&self) -> Result<CovariateDistribution, CliError> {
        let need = |v: Option<f64>, flag: &str, kind: &str| {
            v.ok_or_else(|| CliError::Usage(format!("--dist {kind} requires {flag}")))
        };
        let reject = |present: bool, flag: &str, kind: &str| {
            if present {
                Err(CliError::Usage(format!("{flag} does not apply to --dist {kind}")))
            } else {
                Ok(())
            }
        };
        let dist = match self.dist {
            None => return Err(CliError::Usage("--dist is required".into())),
            Some(DistKind::Exp) => {
                reject(self.min.is_some() || self.max.is_some(), "--min/--max", "exp")?;
                reject(self.grid_file.is_some(), "--grid-file", "exp")?;
                CovariateDistribution::exponential(need(self.rate, "--rate", "exp")?)
            }
            Some(DistKind::Unif) => {
                reject(self.rate.is_some(), "--rate", "unif")?;
                reject(self.grid_file.is_some(), "--grid-file", "unif")?;
                CovariateDistribution::uniform(
                    need(self.min, "--min", "unif")?,
                    need(self.max, "--max", "unif")?,
                )
            }
            Some(DistKind::Grid) => {
                reject(
                    self.rate.is_some() || self.min.is_some() || self.max.is_some(),
                    "--rate/--min/--max",
                    "grid",
                )?;
                let path = self
                    .grid_file
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("--dist grid requires --grid-file".into()))?;
                EmpiricalGrid::from_csv_path(path).map(CovariateDistribution::EmpiricalGrid)
            }
        };
        dist.map_err(|e| match e {
            subopt::Error::InvalidDistribution(m) => CliError::Usage(m),
            other => CliError::Lib(other),
        })
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable report")
}

/// Support clipped to the covariate's support; `null` for scaled-uniform designs.
fn interval_json(design: &SubsamplingDesign) -> Value {
    match design.support() {
        Some(s) => to_value(&s.clipped(design.dist.ess_inf(), design.dist.ess_sup())),
        None => Value::Null,
    }
}

fn scenario_fields(s: &Scenario, out: &mut Map<String, Value>) {
    out.insert("scenario".into(), s.label().into());
    match *s {
        Scenario::TwoIntervals { a1, a2, a3 } => {
            out.insert("a1".into(), a1.into());
            out.insert("a2".into(), a2.into());
            out.insert("a3".into(), a3.into());
        }
        Scenario::TwoIntervalsRightTruncated { a1, a2 } => {
            out.insert("a1".into(), a1.into());
            out.insert("a2".into(), a2.into());
        }
        Scenario::SingleInterval { q } => {
            out.insert("q".into(), q.into());
        }
    }
}

fn design_json(r: &OptimalDesignResult, beta0: f64) -> Result<Value, CliError> {
    let m = r.moments()?;
    let mut out = Map::new();
    out.insert("alpha".into(), r.alpha.into());
    out.insert("beta1".into(), r.beta1.into());
    out.insert("beta0".into(), beta0.into());
    scenario_fields(&r.scenario, &mut out);
    out.insert("support".into(), interval_json(&r.design));
    out.insert("s_star".into(), r.s_star.into());
    out.insert("verified".into(), r.verified.into());
    out.insert("max_violation".into(), r.max_violation.into());
    out.insert("mass".into(), r.design.mass().into());
    out.insert("moments".into(), to_value(&m));
    out.insert("log_det".into(), log_det(&m, beta0)?.into());
    out.insert("newton_iterations".into(), r.iterations.into());
    out.insert("residual_norm".into(), r.residual_norm.into());
    out.insert("distribution".into(), to_value(&r.design.dist));
    Ok(Value::Object(out))
}

fn design_table(r: &OptimalDesignResult) -> Table {
    let (a1, a2, a3q) = match r.scenario {
        Scenario::TwoIntervals { a1, a2, a3 } => (Some(a1), Some(a2), Some(a3)),
        Scenario::TwoIntervalsRightTruncated { a1, a2 } => (Some(a1), Some(a2), None),
        Scenario::SingleInterval { q } => (None, None, Some(q)),
    };
    Table {
        header: ["alpha", "beta1", "scenario", "a1", "a2", "a3_or_q", "s_star", "verified"]
            .map(String::from)
            .to_vec(),
        rows: vec![vec![
            r.alpha.into(),
            r.beta1.into(),
            r.scenario.label().into(),
            a1.into(),
            a2.into(),
            a3q.into(),
            r.s_star.into(),
            Cell::Text(r.verified.to_string()),
        ]],
    }
}

fn heuristic(choice: DesignChoice) -> Option<Heuristic> {
    match choice {
        DesignChoice::Optimal => None,
        DesignChoice::Uniform => Some(Heuristic::UniformRandom),
        DesignChoice::OneSided => Some(Heuristic::OneSided),
        DesignChoice::TwoSided => Some(Heuristic::TwoSided),
    }
}

fn choice_label(choice: DesignChoice) -> &'static str {
    heuristic(choice).map_or("optimal", |h| h.label())
}

fn build_design(
    choice: DesignChoice,
    dist: &CovariateDistribution,
    alpha: f64,
    beta1: Option<f64>,
) -> Result<SubsamplingDesign, CliError> {
    match heuristic(choice) {
        Some(h) => Ok(h.build(dist, alpha)?),
        None => {
            let b = beta1.ok_or_else(|| {
                CliError::Usage("the optimal design requires --beta1".into())
            })?;
            Ok(solve_optimal(dist, alpha, b)?.design)
        }
    }
}

fn default_range(dist: &CovariateDistribution) -> Result<(f64, f64), CliError> {
    let lo = match dist.ess_inf() {
        v if v.is_finite() => v,
        _ => dist.quantile(1e-4)?,
    };
    let hi = match dist.ess_sup() {
        v if v.is_finite() => v,
        _ => dist.quantile(1.0 - 1e-4)?,
    };
    Ok((lo, hi))
}

fn linspace(from: f64, to: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![from],
        _ => (0..n)
            .map(|i| from + (to - from) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn report_table(rows: &[subopt::EfficiencyReport]) -> Table {
    Table {
        header: ["design", "alpha", "beta1_true", "beta1_nominal", "efficiency"]
            .map(String::from)
            .to_vec(),
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    Cell::Text(r.design.clone()),
                    r.alpha.into(),
                    r.beta1_true.into(),
                    r.beta1_nominal.map_or(Cell::Text(String::new()), Cell::Real),
                    r.efficiency.map_or(Cell::Real(f64::NAN), Cell::Real),
                ]
            })
            .collect(),
    }
}

fn report_json(rows: &[subopt::EfficiencyReport]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| {
                let mut v = to_value(r);
                // failed rows keep the efficiency key, as null
                if let Value::Object(m) = &mut v {
                    m.entry("efficiency").or_insert(Value::Null);
                }
                v
            })
            .collect(),
    )
}

pub fn run(command: Command) -> Result<Outcome, CliError> {
    match command {
        Command::Design {
            dist,
            alpha,
            beta1,
            beta0,
        } => {
            let dist = dist.build()?;
            let r = solve_optimal(&dist, alpha, beta1)?;
            done(
                Rendered::Either {
                    json: design_json(&r, beta0)?,
                    table: design_table(&r),
                },
                Format::Json,
            )
        }

        Command::Sensitivity {
            dist,
            alpha,
            beta1,
            design,
            from,
            to,
            points,
        } => {
            let dist = dist.build()?;
            let (lo, hi) = default_range(&dist)?;
            let (d, threshold) = match design {
                DesignChoice::Optimal => {
                    let r = solve_optimal(&dist, alpha, beta1)?;
                    (r.design, Some(r.s_star))
                }
                other => (build_design(other, &dist, alpha, None)?, None),
            };
            let m = d.moments(beta1)?;
            let xs = linspace(from.unwrap_or(lo), to.unwrap_or(hi), points);
            let psi: Vec<f64> = xs
                .iter()
                .map(|&x| sensitivity(x, &m, beta1))
                .collect::<subopt::Result<_>>()?;
            let inside: Vec<bool> = xs.iter().map(|&x| d.acceptance_probability(x) > 0.0).collect();
            let table = Table {
                header: ["x", "psi", "threshold", "in_support"].map(String::from).to_vec(),
                rows: (0..xs.len())
                    .map(|i| {
                        vec![
                            xs[i].into(),
                            psi[i].into(),
                            threshold.into(),
                            Cell::Int(inside[i] as i64),
                        ]
                    })
                    .collect(),
            };
            let json = json!({
                "alpha": alpha,
                "beta1": beta1,
                "design": choice_label(design),
                "threshold": threshold,
                "points": (0..xs.len()).map(|i| json!({
                    "x": xs[i], "psi": psi[i], "in_support": inside[i]
                })).collect::<Vec<_>>(),
            });
            done(Rendered::Either { json, table }, Format::Csv)
        }

        Command::Efficiency {
            dist,
            alpha,
            beta1,
            design,
            nominal,
            sweep,
            from,
            to,
            points,
            slope_ratio,
            nominal_ratios,
            find,
        } => {
            let dist = dist.build()?;
            if let Some(kind) = find {
                let alpha = alpha
                    .ok_or_else(|| CliError::Usage("--find requires --alpha".into()))?;
                let h = heuristic(design).ok_or_else(|| {
                    CliError::Usage("--find applies to uniform, one-sided or two-sided".into())
                })?;
                let unit = slope_unit(&dist);
                let lo = from.unwrap_or(DEFAULT_SLOPE_SWEEP.0);
                let hi = to.unwrap_or(DEFAULT_SLOPE_SWEEP.1);
                let n = points.unwrap_or(DEFAULT_SLOPE_SWEEP.2);
                let candidate = h.build(&dist, alpha)?;
                let f = |ratio: f64| {
                    let opt = solve_optimal(&dist, alpha, ratio * unit)?;
                    efficiency_against(&candidate, &opt, ratio * unit)
                };
                let found = match kind {
                    Find::Min => vec![global_extremum(f, lo, hi, n, Extremum::Min, GOLDEN_TOLERANCE)?],
                    Find::Max => vec![global_extremum(f, lo, hi, n, Extremum::Max, GOLDEN_TOLERANCE)?],
                    Find::LocalMin => local_extrema(f, lo, hi, n, Extremum::Min, GOLDEN_TOLERANCE)?,
                    Find::LocalMax => local_extrema(f, lo, hi, n, Extremum::Max, GOLDEN_TOLERANCE)?,
                };
                let table = Table {
                    header: ["design", "alpha", "slope_ratio", "efficiency"].map(String::from).to_vec(),
                    rows: found
                        .iter()
                        .map(|&(x, e)| vec![h.label().into(), alpha.into(), x.into(), e.into()])
                        .collect(),
                };
                let json = Value::Array(
                    found
                        .iter()
                        .map(|&(x, e)| {
                            json!({"design": h.label(), "alpha": alpha, "slope_ratio": x, "efficiency": e})
                        })
                        .collect(),
                );
                return done(Rendered::Either { json, table }, Format::Json);
            }
            if let Some(axis) = sweep {
                let axis = match axis {
                    SweepKind::Alpha => SweepAxis::Alpha {
                        from: from.unwrap_or(DEFAULT_ALPHA_SWEEP.0),
                        to: to.unwrap_or(DEFAULT_ALPHA_SWEEP.1),
                        points: points.unwrap_or(DEFAULT_ALPHA_SWEEP.2),
                        slope_ratio,
                    },
                    SweepKind::Slope => SweepAxis::Slope {
                        from: from.unwrap_or(DEFAULT_SLOPE_SWEEP.0),
                        to: to.unwrap_or(DEFAULT_SLOPE_SWEEP.1),
                        points: points.unwrap_or(DEFAULT_SLOPE_SWEEP.2),
                        alpha: alpha.ok_or_else(|| {
                            CliError::Usage("a slope sweep requires --alpha".into())
                        })?,
                    },
                };
                let rows = subopt::efficiency::efficiency_sweep(&dist, &axis, &nominal_ratios);
                return done(
                    Rendered::Either {
                        json: report_json(&rows),
                        table: report_table(&rows),
                    },
                    Format::Csv,
                );
            }
            let alpha = alpha.ok_or_else(|| CliError::Usage("--alpha is required".into()))?;
            let beta1 = beta1.ok_or_else(|| CliError::Usage("--beta1 is required".into()))?;
            let (label, eff) = match (heuristic(design), nominal) {
                (Some(h), None) => {
                    let opt = solve_optimal(&dist, alpha, beta1)?;
                    (h.label(), efficiency_against(&h.build(&dist, alpha)?, &opt, beta1)?)
                }
                (Some(_), Some(_)) => {
                    return Err(CliError::Usage(
                        "--nominal applies to --design optimal".into(),
                    ))
                }
                (None, b_nom) => (
                    "optimal_nominal",
                    misspecification_efficiency(&dist, alpha, b_nom.unwrap_or(beta1), beta1)?,
                ),
            };
            let row = subopt::EfficiencyReport {
                design: label.into(),
                alpha,
                beta1_true: beta1,
                beta1_nominal: if label == "optimal_nominal" {
                    Some(nominal.unwrap_or(beta1))
                } else {
                    None
                },
                efficiency: Some(eff),
                error: None,
            };
            let rows = [row];
            done(
                Rendered::Either {
                    json: report_json(&rows)[0].clone(),
                    table: report_table(&rows),
                },
                Format::Json,
            )
        }

        Command::Crossover { dist, alpha } => {
            let dist = dist.build()?;
            let b = crossover_slope(&dist, alpha)?;
            let unit = slope_unit(&dist);
            let q = dist.quantile(alpha)?;
            let x2 = -2.0 / b;
            done(
                Rendered::Json(json!({
                    "alpha": alpha,
                    "beta1_star": b,
                    "beta1_star_over_rate": b / unit,
                    "q_alpha": q,
                    "x2_star": x2,
                    "q_alpha_over_x2_star": q / x2,
                })),
                Format::Json,
            )
        }

        Command::CriticalAlpha { dist, beta1 } => {
            let dist = dist.build()?;
            let a = critical_alpha(&dist, beta1)?;
            done(
                Rendered::Json(json!({"beta1": beta1, "alpha_star": a})),
                Format::Json,
            )
        }

        Command::Transform {
            dist,
            alpha,
            beta1,
            scale,
            shift,
        } => {
            let dist = dist.build()?;
            if scale == 0.0 {
                return Err(CliError::Usage("--scale must be nonzero".into()));
            }
            let r = solve_optimal(&dist, alpha, beta1)?;
            let image = transform_design(&r.design, scale, shift)?;
            let new_beta1 = beta1 / scale;
            // re-solve in the new coordinates as a check
            let direct = solve_optimal(&image.dist, alpha, new_beta1)?;
            let ends = |d: &SubsamplingDesign| d.support().map(|s| s.finite_endpoints()).unwrap_or_default();
            let (a, b) = (ends(&image), ends(&direct.design));
            let gap = if a.len() == b.len() {
                a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            let json = json!({
                "alpha": alpha,
                "scale": scale,
                "shift": shift,
                "original": {"beta1": beta1, "support": interval_json(&r.design), "distribution": to_value(&dist)},
                "transformed": {"beta1": new_beta1, "support": interval_json(&image), "distribution": to_value(&image.dist)},
                "direct_solve_max_difference": gap,
            });
            let failure = (gap > 1e-6).then(|| {
                format!("transformed design differs from the direct optimum by {gap:e}")
            });
            Ok(Outcome {
                body: Rendered::Json(json),
                default_format: Format::Json,
                verification_failure: failure,
            })
        }

        Command::Subsample {
            dist,
            input,
            column,
            alpha,
            beta1,
            design,
            seed,
        } => {
            let dist = dist.build()?;
            let d = build_design(design, &dist, alpha, beta1)?;
            let sel = sampler::select_from_csv(open(&input)?, column.as_deref(), &d, seed)?;
            let table = Table {
                header: vec!["index".into()],
                rows: sel.indices.iter().map(|&i| vec![Cell::Int(i as i64)]).collect(),
            };
            let mut json = to_value(&sel);
            if let Value::Object(m) = &mut json {
                m.insert("accepted".into(), sel.indices.len().into());
                m.insert("design".into(), choice_label(design).into());
            }
            done(Rendered::Either { json, table }, Format::Csv)
        }

        Command::Simulate {
            dist,
            input,
            column,
            n,
            beta0,
            beta1,
            seed,
        } => {
            let x = match (&input, n) {
                (Some(path), None) => sampler::read_csv_column(open(path)?, column.as_deref())?,
                (None, Some(n)) => {
                    let dist = dist.build()?;
                    // covariates use stream 1 so responses (stream 0) stay independent
                    let mut rng = sampler::seeded_rng(seed, 1);
                    (0..n).map(|_| dist.sample(&mut rng)).collect()
                }
                _ => return Err(CliError::Usage("give exactly one of --input or --n".into())),
            };
            let y = sampler::simulate_poisson(&x, beta0, beta1, seed)?;
            let table = Table {
                header: vec!["x".into(), "y".into()],
                rows: x
                    .iter()
                    .zip(&y)
                    .map(|(&xi, &yi)| vec![Cell::Real(xi), Cell::Int(yi as i64)])
                    .collect(),
            };
            let json = json!({"seed": seed, "beta0": beta0, "beta1": beta1, "x": x, "y": y});
            done(Rendered::Either { json, table }, Format::Csv)
        }

        Command::Fit {
            input,
            x_column,
            y_column,
        } => {
            let x = sampler::read_csv_column(open(&input)?, Some(&x_column))?;
            let yr = sampler::read_csv_column(open(&input)?, Some(&y_column))?;
            let y = yr
                .iter()
                .map(|&v| {
                    if v >= 0.0 && v.fract() == 0.0 {
                        Ok(v as u64)
                    } else {
                        Err(CliError::Usage(format!("count {v} is not a nonnegative integer")))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            let fit = sampler::fit_poisson_mle(&x, &y)?;
            done(Rendered::Json(to_value(&fit)), Format::Json)
        }

        Command::Validate {
            dist,
            alpha,
            beta0,
            beta1,
            n,
            replications,
            seed,
            design,
            compare,
        } => {
            let dist = dist.build()?;
            let d = build_design(design, &dist, alpha, Some(beta1))?;
            let json = match compare {
                None => to_value(&sampler::validate_asymptotics(
                    &dist,
                    &d,
                    beta0,
                    beta1,
                    n,
                    replications,
                    seed,
                )?),
                Some(other) => {
                    let base = build_design(other, &dist, alpha, Some(beta1))?;
                    let mut v = to_value(&sampler::compare_precision(
                        &dist,
                        &base,
                        &d,
                        beta0,
                        beta1,
                        n,
                        replications,
                        seed,
                    )?);
                    if let Value::Object(m) = &mut v {
                        m.insert("design_label".into(), choice_label(other).into());
                        m.insert("reference_label".into(), choice_label(design).into());
                    }
                    v
                }
            };
            done(Rendered::Json(json), Format::Json)
        }

        Command::OracleCheck {
            dist,
            alpha,
            beta1,
            bins,
        } => {
            let dist = dist.build()?;
            if bins < oracle::MIN_BINS {
                return Err(CliError::Usage(format!(
                    "--bins must be at least {}",
                    oracle::MIN_BINS
                )));
            }
            let c = oracle::oracle_check(&dist, alpha, beta1, bins)?;
            let failure = (!c.passed).then(|| {
                format!(
                    "oracle disagrees: relative d error {:e}, endpoint error {:e}",
                    c.d_relative_error, c.max_endpoint_error
                )
            });
            Ok(Outcome {
                body: Rendered::Json(to_value(&c)),
                default_format: Format::Json,
                verification_failure: failure,
            })
        }

        Command::Tables { which } => {
            let table = match which {
                1 | 3 => {
                    let rows = if which == 1 {
                        tables::exponential_table()?
                    } else {
                        tables::uniform_table()?
                    };
                    Table {
                        header: tables::BoundaryRow::HEADER.map(String::from).to_vec(),
                        rows: rows
                            .iter()
                            .map(|r| r.cells().into_iter().map(Cell::from).collect())
                            .collect(),
                    }
                }
                _ => {
                    let rows = tables::crossover_table(1.0, &tables::CROSSOVER_ALPHAS)?;
                    Table {
                        header: tables::CrossoverRow::HEADER.map(String::from).to_vec(),
                        rows: rows
                            .iter()
                            .map(|r| r.cells().into_iter().map(Cell::from).collect())
                            .collect(),
                    }
                }
            };
            let json = Value::Array(
                table
                    .rows
                    .iter()
                    .map(|row| {
                        let mut m = Map::new();
                        for (h, c) in table.header.iter().zip(row) {
                            let v = match c {
                                Cell::Real(v) => json!(v),
                                _ => Value::Null,
                            };
                            m.insert(h.clone(), v);
                        }
                        Value::Object(m)
                    })
                    .collect(),
            );
            done(Rendered::Either { json, table }, Format::Csv)
        }
    }
}
