use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use glm_pss::effect::{f2_phi_approx, f2_r_approx};
use glm_pss::finite::{rescale_beta_to_f2, simulate_power};
use glm_pss::pss::{
    critical_value, noncentrality_for_power, power, power_error_table, sample_size, PowerQuery, Target,
    TABLE_REL_ERRORS, TABLE_TARGETS,
};
use glm_pss::sim::{
    cell_record, run_scenario, run_sensitivity, sweep_cells, MeasureSummary, StudyModel, CSV_HEADER, SENSITIVITY_PARAMS,
};
use glm_pss::{EffectSummary, Family, FamilyLink, Link, ScenarioConfig, W1Convention};

use crate::design::{load_design_csv_with, Coefficients, DesignSchema};
use crate::error::{CliError, Result};
use crate::report::{Table, Value};

#[derive(Parser, Debug)]
#[command(name = "glmpss", version, about = "Power and sample size for Wald tests in generalized linear models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Power of the Wald test at a given sample size.
    #[command(allow_negative_numbers = true)]
    Power(PowerArgs),
    /// Smallest sample size reaching a target power.
    #[command(allow_negative_numbers = true)]
    Samplesize(SampleSizeArgs),
    /// Effect sizes of an empirical design or a simulated scenario.
    #[command(allow_negative_numbers = true)]
    Effectsize(EffectSizeArgs),
    /// Relative errors of both approximations over a grid of scenarios.
    #[command(name = "relerror-sweep", allow_negative_numbers = true)]
    RelerrorSweep(SweepArgs),
    /// Latin hypercube sensitivity study of the relative errors.
    #[command(allow_negative_numbers = true)]
    Sensitivity(SensitivityArgs),
    /// Finite-sample power of an empirical design by simulation.
    #[command(allow_negative_numbers = true)]
    Verify(VerifyArgs),
    /// Power lost or gained when the effect size is misstated.
    #[command(name = "table1", allow_negative_numbers = true)]
    PowerGrid(PowerGridArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Flat `key = value` file of flag values; command-line flags win.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Write CSV with a metadata header to this file.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Format of standard output when no file is given.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug, Clone)]
pub struct TestArgs {
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Number of tested predictors.
    #[arg(long, default_value_t = 1)]
    pub df: u32,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ModelArgs {
    /// Preset model: logistic, bernoulli-identity, poisson-log, gamma-log.
    #[arg(long)]
    pub model: Option<StudyModel>,
    #[arg(long)]
    pub family: Option<Family>,
    #[arg(long)]
    pub link: Option<Link>,
    /// Normal variance, or gamma / inverse Gaussian shape.
    #[arg(long)]
    pub aux: Option<f64>,
}

impl ModelArgs {
    pub fn family_link(&self) -> Result<FamilyLink> {
        let fl = match (self.model, self.family, self.link) {
            (Some(m), None, None) => m.family_link(),
            (Some(_), _, _) => return Err(CliError::config("--model cannot be combined with --family or --link")),
            (None, Some(f), Some(l)) => FamilyLink::new(f, l, 1.0)?,
            _ => return Err(CliError::config("a model needs --model, or both --family and --link")),
        };
        match self.aux {
            Some(aux) => Ok(fl.with_aux(aux)?),
            None => Ok(fl),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct EffectArgs {
    /// Effect size f2 directly.
    #[arg(long)]
    pub f2: Option<f64>,
    /// Standardized effect phi; needs --mean-y and a model.
    #[arg(long)]
    pub phi: Option<f64>,
    /// Partial pseudo-R2.
    #[arg(long)]
    pub pseudo_r2: Option<f64>,
    /// Mean outcome at which the reference weight is taken.
    #[arg(long)]
    pub mean_y: Option<f64>,
    #[command(flatten)]
    pub model: ModelArgs,
}

/// An effect size resolved to `f2`, with the reference weight when it came
/// from `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedEffect {
    pub f2: f64,
    pub w1: Option<f64>,
}

impl EffectArgs {
    pub fn resolve(&self) -> Result<ResolvedEffect> {
        match (self.f2, self.phi, self.pseudo_r2) {
            (Some(f2), None, None) => {
                if !(f2 > 0.0 && f2.is_finite()) {
                    return Err(CliError::config(format!("--f2 must be positive, got {f2}")));
                }
                Ok(ResolvedEffect { f2, w1: None })
            }
            (None, Some(phi), None) => {
                let mean_y = self.mean_y.ok_or_else(|| CliError::config("--phi needs --mean-y"))?;
                let fl = self.model.family_link()?;
                if !fl.valid_mean(mean_y) {
                    return Err(CliError::config(format!("--mean-y {mean_y} is not a valid mean for {fl}")));
                }
                let w1 = fl.link_eval(fl.link_fn(mean_y)?)?.weight;
                let f2 = f2_phi_approx(phi, w1).map_err(|e| CliError::config(e.to_string()))?;
                Ok(ResolvedEffect { f2, w1: Some(w1) })
            }
            (None, None, Some(r)) => {
                let f2 = f2_r_approx(r).map_err(|e| CliError::config(e.to_string()))?;
                Ok(ResolvedEffect { f2, w1: None })
            }
            _ => Err(CliError::config("give exactly one of --f2, --phi or --pseudo-r2")),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct PowerArgs {
    #[command(flatten)]
    pub test: TestArgs,
    #[command(flatten)]
    pub effect: EffectArgs,
    /// Sample size.
    #[arg(long)]
    pub n: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SampleSizeArgs {
    #[command(flatten)]
    pub test: TestArgs,
    #[command(flatten)]
    pub effect: EffectArgs,
    /// Target power.
    #[arg(long)]
    pub power: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, Default)]
pub struct DesignArgs {
    /// Empirical design CSV with a header row.
    #[arg(long, value_name = "PATH")]
    pub design: Option<PathBuf>,
    /// Adjustor columns; the intercept is added automatically.
    #[arg(long, value_delimiter = ',')]
    pub z_cols: Vec<String>,
    /// Predictor columns under test.
    #[arg(long, value_delimiter = ',')]
    pub x_cols: Vec<String>,
    /// Outcome column; the model is fitted when coefficients are omitted,
    /// and without --aux its dispersion is estimated too.
    #[arg(long)]
    pub y_col: Option<String>,
    /// Intercept then adjustor coefficients.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Vec<f64>,
    /// Predictor coefficients.
    #[arg(long, value_delimiter = ',')]
    pub beta: Vec<f64>,
}

impl DesignArgs {
    pub fn schema(&self) -> DesignSchema {
        DesignSchema { z_cols: self.z_cols.clone(), x_cols: self.x_cols.clone(), y_col: self.y_col.clone() }
    }

    pub fn coefficients(&self) -> Option<Coefficients> {
        if self.lambda.is_empty() && self.beta.is_empty() {
            None
        } else {
            Some(Coefficients { lambda: self.lambda.clone(), beta: self.beta.clone() })
        }
    }

    pub fn load(&self, model: &ModelArgs) -> Result<glm_pss::EmpiricalDesign> {
        let path = self.design.as_ref().ok_or_else(|| CliError::config("--design is required"))?;
        let fl = model.family_link()?;
        load_design_csv_with(path, &self.schema(), fl, self.coefficients().as_ref(), model.aux.is_none())
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub a_x: Option<f64>,
    #[arg(long)]
    pub b_x: Option<f64>,
    #[arg(long)]
    pub a_z: Option<f64>,
    #[arg(long)]
    pub b_z: Option<f64>,
    /// Standard deviation of the predictor contribution.
    #[arg(long, conflicts_with = "s_x2")]
    pub s_x: Option<f64>,
    /// Standard deviation of the adjustor contribution.
    #[arg(long, conflicts_with = "s_z2")]
    pub s_z: Option<f64>,
    /// Variance of the predictor contribution.
    #[arg(long)]
    pub s_x2: Option<f64>,
    /// Variance of the adjustor contribution.
    #[arg(long)]
    pub s_z2: Option<f64>,
    /// Copula correlation.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Mean outcome at the intercept.
    #[arg(long)]
    pub ref_mean: Option<f64>,
    /// Monte Carlo draws per scenario.
    #[arg(long)]
    pub n_mc: Option<usize>,
    /// Fixed mean for the reference weight (default: mean of the draws).
    #[arg(long)]
    pub w1_mean: Option<f64>,
}

impl ScenarioArgs {
    pub fn config(&self, model: &ModelArgs, seed: u64) -> Result<ScenarioConfig> {
        let fl = model.family_link()?;
        let ref_mean = match (self.ref_mean, model.model) {
            (Some(m), _) => m,
            (None, Some(preset)) => preset.figure_ref_mean(),
            (None, None) => return Err(CliError::config("--ref-mean is required without --model")),
        };
        let mut cfg = ScenarioConfig::new(fl, ref_mean);
        cfg.seed = seed;
        let fields = [
            ("a_x", self.a_x),
            ("b_x", self.b_x),
            ("a_z", self.a_z),
            ("b_z", self.b_z),
            ("s_x", self.s_x),
            ("s_z", self.s_z),
            ("s_x2", self.s_x2),
            ("s_z2", self.s_z2),
            ("rho", self.rho),
        ];
        for (name, v) in fields {
            if let Some(v) = v {
                cfg.set(name, v)?;
            }
        }
        if let Some(n) = self.n_mc {
            cfg.n_mc = n;
        }
        if let Some(m) = self.w1_mean {
            cfg.w1 = W1Convention::ReferenceMean(m);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug, Clone)]
pub struct EffectSizeArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Sweep axis `name=v1,v2,...` or `name=lo:hi:count`; repeatable, first
    /// axis varies slowest. Defaults to the preset grid with --model.
    #[arg(long, value_name = "NAME=VALUES")]
    pub axis: Vec<String>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SensitivityArgs {
    /// Preset model: logistic, bernoulli-identity, poisson-log, gamma-log.
    #[arg(long)]
    pub model: StudyModel,
    /// Latin hypercube points.
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    /// Monte Carlo draws per point.
    #[arg(long, default_value_t = 50_000)]
    pub n_mc: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Sample size of each simulated study.
    #[arg(long)]
    pub n: usize,
    /// Simulated studies.
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Rescale the predictor coefficients to this f2 first.
    #[arg(long)]
    pub target_f2: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct PowerGridArgs {
    #[command(flatten)]
    pub test: TestArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl Command {
    pub fn output(&self) -> &OutputArgs {
        match self {
            Command::Power(a) => &a.output,
            Command::Samplesize(a) => &a.output,
            Command::Effectsize(a) => &a.output,
            Command::RelerrorSweep(a) => &a.output,
            Command::Sensitivity(a) => &a.output,
            Command::Verify(a) => &a.output,
            Command::PowerGrid(a) => &a.output,
        }
    }

    /// Standard output format when `--format` is not given.
    pub fn default_format(&self) -> Format {
        match self {
            Command::RelerrorSweep(_) | Command::Sensitivity(_) | Command::PowerGrid(_) => Format::Csv,
            _ => Format::Human,
        }
    }

    /// Checks parameters that need no computation, then runs the command.
    pub fn execute(&self) -> Result<Table> {
        match self {
            Command::Power(a) => power_cmd(a),
            Command::Samplesize(a) => sample_size_cmd(a),
            Command::Effectsize(a) => effect_size_cmd(a),
            Command::RelerrorSweep(a) => sweep_cmd(a),
            Command::Sensitivity(a) => sensitivity_cmd(a),
            Command::Verify(a) => verify_cmd(a),
            Command::PowerGrid(a) => power_grid_cmd(a),
        }
    }
}

fn check_test(test: &TestArgs, target: Target) -> Result<()> {
    PowerQuery { alpha: test.alpha, df: test.df, f2_tilde: 1.0, target }
        .validate()
        .map_err(|e| CliError::config(e.to_string()))
}

fn power_cmd(a: &PowerArgs) -> Result<Table> {
    check_test(&a.test, Target::SampleSize(a.n))?;
    let effect = a.effect.resolve()?;
    let p = power(a.n, effect.f2, a.test.df, a.test.alpha)?;
    let mut rec = vec![("f2", Value::Float(effect.f2))];
    if let Some(w1) = effect.w1 {
        rec.push(("w1", w1.into()));
    }
    rec.extend([
        ("n", Value::Int(a.n)),
        ("noncentrality", (a.n as f64 * effect.f2).into()),
        ("critical_value", critical_value(a.test.df, a.test.alpha)?.into()),
        ("power", p.into()),
    ]);
    Ok(Table::record(rec))
}

fn sample_size_cmd(a: &SampleSizeArgs) -> Result<Table> {
    check_test(&a.test, Target::Power(a.power))?;
    let effect = a.effect.resolve()?;
    let nu = noncentrality_for_power(a.power, a.test.df, a.test.alpha)?;
    let n = sample_size(a.power, effect.f2, a.test.df, a.test.alpha)?;
    let mut rec = vec![("f2", Value::Float(effect.f2))];
    if let Some(w1) = effect.w1 {
        rec.push(("w1", w1.into()));
    }
    rec.extend([
        ("noncentrality", nu.into()),
        ("n", Value::Int(n)),
        ("achieved_power", power(n, effect.f2, a.test.df, a.test.alpha)?.into()),
    ]);
    Ok(Table::record(rec))
}

fn summary_fields(s: &EffectSummary) -> Vec<(&'static str, Value)> {
    vec![
        ("phi", s.phi.into()),
        ("pseudo_r2", s.pseudo_r2.into()),
        ("f2", s.f2.into()),
        ("f2_phi", s.f2_phi.into()),
        ("f2_r", s.f2_r.into()),
        ("re_phi", Value::opt(s.re_phi)),
        ("re_r", Value::opt(s.re_r)),
        ("mean_y", s.mean_y.into()),
        ("w1", s.w1.into()),
    ]
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

fn effect_size_cmd(a: &EffectSizeArgs) -> Result<Table> {
    if a.design.design.is_some() {
        let design = a.design.load(&a.model)?;
        let s = crate::design::compute_empirical_effects(&design)?;
        let fl = design.family();
        let mut rec = vec![
            ("source", Value::from("design")),
            ("family", fl.family().name().into()),
            ("link", fl.link().name().into()),
            ("aux", fl.aux().into()),
            ("rows", design.len().into()),
        ];
        rec.extend(summary_fields(&s));
        rec.push(("lambda", join(design.lambda()).into()));
        rec.push(("beta", join(design.beta()).into()));
        Ok(Table::record(rec))
    } else {
        let cfg = a.scenario.config(&a.model, a.seed)?;
        let r = run_scenario(&cfg)?;
        let mut rec = vec![
            ("source", Value::from("scenario")),
            ("family", cfg.fl.family().name().into()),
            ("link", cfg.fl.link().name().into()),
            ("aux", cfg.fl.aux().into()),
            ("n_mc", cfg.n_mc.into()),
        ];
        rec.extend(summary_fields(&r.summary));
        Ok(Table::record(rec))
    }
}

/// Parses `name=v1,v2,...` or `name=lo:hi:count`.
pub fn parse_axis(spec: &str) -> Result<(String, Vec<f64>)> {
    let bad = |why: &str| CliError::config(format!("bad --axis '{spec}': {why}"));
    let (name, values) = spec.split_once('=').ok_or_else(|| bad("expected name=values"))?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("'{}' is not a number", s.trim())));
    let parts: Vec<&str> = values.split(':').collect();
    let values = match parts.as_slice() {
        [lo, hi, count] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let count: usize = count.trim().parse().map_err(|_| bad("count must be a positive integer"))?;
            match count {
                0 => return Err(bad("count must be a positive integer")),
                1 => vec![lo],
                _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
            }
        }
        [list] => list.split(',').map(num).collect::<Result<_>>()?,
        _ => return Err(bad("expected a comma list or lo:hi:count")),
    };
    Ok((name.trim().to_string(), values))
}

fn sweep_cmd(a: &SweepArgs) -> Result<Table> {
    let base = a.scenario.config(&a.model, a.seed)?;
    let axes = if a.axis.is_empty() {
        match a.model.model {
            Some(m) => m.figure_axes(),
            None => Vec::new(),
        }
    } else {
        a.axis.iter().map(|s| parse_axis(s)).collect::<Result<_>>()?
    };
    let cells = sweep_cells(&base, &axes)?;
    let mut table = Table::new(CSV_HEADER.iter().map(|s| s.to_string()).collect());
    table.rows = cells.iter().map(|c| cell_record(c).iter().map(|f| Value::parse_field(f)).collect()).collect();
    Ok(table)
}

fn sensitivity_cmd(a: &SensitivityArgs) -> Result<Table> {
    if a.points < 3 || a.n_mc < 2 {
        return Err(CliError::config("--points must be at least 3 and --n-mc at least 2"));
    }
    let run = run_sensitivity(a.model, a.points, a.n_mc, a.seed)?;
    let summary = run.summary()?;
    let prccs = [run.prcc_phi(), run.prcc_r()];
    let mut header: Vec<String> =
        ["measure", "kind", "n", "dropped", "mean", "min", "q1", "median", "q3", "max"].map(String::from).to_vec();
    header.extend(SENSITIVITY_PARAMS.iter().map(|p| format!("prcc_{p}")));
    let mut table = Table::new(header);
    for ((name, m), prcc) in [("re_phi", &summary.re_phi), ("re_r", &summary.re_r)].into_iter().zip(prccs) {
        let mut row: Vec<Value> = vec![name.into()];
        match *m {
            MeasureSummary::Zero { n, dropped } => {
                row.extend([Value::from("zero"), n.into(), dropped.into()]);
                row.extend(std::iter::repeat_n(Value::Float(0.0), 6));
            }
            MeasureSummary::Empty { dropped } => {
                row.extend([Value::from("empty"), Value::Int(0), dropped.into()]);
                row.extend(std::iter::repeat_n(Value::Missing, 6));
            }
            MeasureSummary::Quantiles { mean, min, q1, median, q3, max, n, dropped } => {
                row.extend([Value::from("quantiles"), n.into(), dropped.into()]);
                row.extend([mean, min, q1, median, q3, max].map(Value::Float));
            }
        }
        match prcc {
            Ok(p) if !matches!(m, MeasureSummary::Zero { .. }) => {
                row.extend(p.coefficients.iter().map(|&c| Value::Float(c)))
            }
            _ => row.extend(std::iter::repeat_n(Value::Missing, SENSITIVITY_PARAMS.len())),
        }
        table.rows.push(row);
    }
    Ok(table)
}

fn verify_cmd(a: &VerifyArgs) -> Result<Table> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(CliError::config(format!("--alpha must lie in (0, 1), got {}", a.alpha)));
    }
    if a.reps == 0 {
        return Err(CliError::config("--reps must be positive"));
    }
    if let Some(t) = a.target_f2 {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::config(format!("--target-f2 must be positive, got {t}")));
        }
    }
    let mut design = a.design.load(&a.model)?;
    let cols = design.p() + design.q();
    if a.n < cols + 10 {
        return Err(CliError::config(format!("--n must be at least columns + 10 = {}", cols + 10)));
    }
    let mut scale = 1.0;
    if let Some(target) = a.target_f2 {
        scale = rescale_beta_to_f2(&design, target)?;
        design = design.with_scaled_beta(scale)?;
    }
    let f2 = design.f2()?;
    let df = design.p() as u32;
    let sim = simulate_power(&design, a.n, a.reps, a.alpha, a.seed)?;
    Ok(Table::record(vec![
        ("rows", design.len().into()),
        ("df", Value::Int(df.into())),
        ("f2", f2.into()),
        ("beta_scale", scale.into()),
        ("beta", join(design.beta()).into()),
        ("n", a.n.into()),
        ("asymptotic_power", power(a.n as u64, f2, df, a.alpha)?.into()),
        ("rejection_rate", sim.rejection_rate.into()),
        ("mc_stderr", sim.mc_stderr.into()),
        ("fit_failures", sim.fit_failures.into()),
        ("replicates", sim.replicates.into()),
    ]))
}

/// Header labels of the power-difference grid columns.
pub fn power_grid_header() -> Vec<String> {
    let mut header = vec!["target_power".to_string()];
    header.extend(TABLE_REL_ERRORS.iter().map(|re| format!("re_{:+}pct", (re * 100.0_f64).round())));
    header
}

fn power_grid_cmd(a: &PowerGridArgs) -> Result<Table> {
    check_test(&a.test, Target::Power(TABLE_TARGETS[0]))?;
    let grid = power_error_table(&TABLE_TARGETS, &TABLE_REL_ERRORS, a.test.df, a.test.alpha)?;
    let mut table = Table::new(power_grid_header());
    for (target, row) in TABLE_TARGETS.iter().zip(grid) {
        let mut r = vec![Value::Float(*target)];
        r.extend(row.into_iter().map(Value::Float));
        table.rows.push(r);
    }
    Ok(table)
}
