//! Beta-copula scenarios for the relative-error study: single scenarios,
//! Cartesian grid sweeps, and Latin hypercube sensitivity analysis.
//!
//! A scenario draws `(B_x, B_z)` from a Gaussian copula with Beta margins and
//! sets `eta = iota + c_z (B_z - E[B_z]) + c_x (B_x - E[B_x])` with
//! `c = s / sd(B)`, `iota = g(ref_mean)` and adjustors `z = (1, B_z)`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::effect::{effect_sizes_from_projection, weighted_projection, DesignDraws, EffectSummary, W1Convention};
use crate::error::{Error, Result};
use crate::family::{Family, FamilyLink, Link};
use crate::linalg::solve_spd;
use crate::par;
use crate::random::{sample_correlated_betas, RngStream};
use crate::special::BetaDist;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    pub fl: FamilyLink,
    pub a_x: f64,
    pub b_x: f64,
    pub a_z: f64,
    pub b_z: f64,
    /// Standard deviation of the predictor contribution `c_x B_x`.
    pub s_x: f64,
    /// Standard deviation of the adjustor contribution `c_z B_z`.
    pub s_z: f64,
    pub rho: f64,
    /// Mean at the intercept, `g^{-1}(iota)`.
    pub ref_mean: f64,
    pub n_mc: usize,
    pub seed: u64,
    pub w1: W1Convention,
}

/// Names accepted by [`ScenarioConfig::set`] and sweep axes. `s_x2` and
/// `s_z2` set the variance rather than the standard deviation.
pub const AXIS_NAMES: [&str; 13] =
    ["a_x", "b_x", "a_z", "b_z", "s_x", "s_z", "s_x2", "s_z2", "rho", "ref_mean", "n_mc", "seed", "aux"];

impl ScenarioConfig {
    /// Uniform margins, no signal, independent copula, 50000 draws.
    pub fn new(fl: FamilyLink, ref_mean: f64) -> Self {
        Self {
            fl,
            a_x: 1.0,
            b_x: 1.0,
            a_z: 1.0,
            b_z: 1.0,
            s_x: 0.0,
            s_z: 0.0,
            rho: 0.0,
            ref_mean,
            n_mc: 50_000,
            seed: 0,
            w1: W1Convention::MeanOfDraws,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for (name, v) in [("a_x", self.a_x), ("b_x", self.b_x), ("a_z", self.a_z), ("b_z", self.b_z)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [("s_x", self.s_x), ("s_z", self.s_z)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be nonnegative, got {v}"));
            }
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return bad(format!("rho must lie in (-1, 1), got {}", self.rho));
        }
        if !self.fl.valid_mean(self.ref_mean) {
            return bad(format!("ref_mean {} is not a valid {} mean", self.ref_mean, self.fl.family()));
        }
        if self.n_mc < 3 {
            return bad(format!("n_mc must be at least 3, got {}", self.n_mc));
        }
        if let W1Convention::ReferenceMean(m) = self.w1 {
            if !self.fl.valid_mean(m) {
                return bad(format!("reference mean {m} for w1 is not a valid {} mean", self.fl.family()));
            }
        }
        Ok(())
    }

    /// Sets one named parameter.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let count = |v: f64| -> Result<u64> {
            if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(63) {
                Ok(v as u64)
            } else {
                Err(Error::Config(format!("{name} must be a nonnegative integer, got {v}")))
            }
        };
        let sd = |v: f64| -> Result<f64> {
            if v >= 0.0 {
                Ok(v.sqrt())
            } else {
                Err(Error::Config(format!("{name} must be nonnegative, got {v}")))
            }
        };
        match name {
            "a_x" => self.a_x = value,
            "b_x" => self.b_x = value,
            "a_z" => self.a_z = value,
            "b_z" => self.b_z = value,
            "s_x" => self.s_x = value,
            "s_z" => self.s_z = value,
            "s_x2" => self.s_x = sd(value)?,
            "s_z2" => self.s_z = sd(value)?,
            "rho" => self.rho = value,
            "ref_mean" => self.ref_mean = value,
            "n_mc" => self.n_mc = count(value)? as usize,
            "seed" => self.seed = count(value)?,
            "aux" => self.fl = self.fl.with_aux(value).map_err(|e| Error::Config(e.to_string()))?,
            _ => {
                return Err(Error::Config(format!(
                    "unknown scenario parameter '{name}' (expected one of {})",
                    AXIS_NAMES.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Stream id derived from every parameter except the seed, so a cell's
    /// draws do not depend on which other cells share its sweep.
    pub fn stream_id(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0100_0000_01b3;
        let mut h = OFFSET;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(PRIME);
            }
        };
        eat(self.fl.family().name().as_bytes());
        eat(b"/");
        eat(self.fl.link().name().as_bytes());
        for v in [self.fl.aux(), self.a_x, self.b_x, self.a_z, self.b_z, self.s_x, self.s_z, self.rho, self.ref_mean] {
            eat(&v.to_bits().to_le_bytes());
        }
        eat(&(self.n_mc as u64).to_le_bytes());
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioDiagnostics {
    /// Draws whose predictor left the link domain.
    pub rows_rejected: usize,
    /// Condition number of the weighted adjustor moment matrix.
    pub condition: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    pub summary: EffectSummary,
    pub diagnostics: ScenarioDiagnostics,
}

struct RawScenario {
    z: Vec<f64>,
    eta: Vec<f64>,
    violations: usize,
}

fn generate(cfg: &ScenarioConfig, rng: &mut RngStream) -> Result<RawScenario> {
    cfg.validate()?;
    let dx = BetaDist::new(cfg.a_x, cfg.b_x)?;
    let dz = BetaDist::new(cfg.a_z, cfg.b_z)?;
    let c_x = cfg.s_x / dx.sd();
    let c_z = cfg.s_z / dz.sd();
    let iota = cfg.fl.link_fn(cfg.ref_mean)?;
    let pairs = sample_correlated_betas(cfg.a_x, cfg.b_x, cfg.a_z, cfg.b_z, cfg.rho, cfg.n_mc, rng)?;
    let mut z = Vec::with_capacity(2 * pairs.len());
    let mut eta = Vec::with_capacity(pairs.len());
    let mut violations = 0;
    for &(bx, bz) in &pairs {
        let e = iota + c_z * (bz - dz.mean()) + c_x * (bx - dx.mean());
        if cfg.fl.inverse_link(e).is_err() {
            violations += 1;
        }
        z.push(1.0);
        z.push(bz);
        eta.push(e);
    }
    Ok(RawScenario { z, eta, violations })
}

/// Equal-mass draws for one scenario.
pub fn build_scenario(cfg: &ScenarioConfig, rng: &mut RngStream) -> Result<DesignDraws> {
    let raw = generate(cfg, rng)?;
    if raw.violations > 0 {
        return Err(Error::Domain(format!(
            "{} of {} draws leave the {} mean domain",
            raw.violations, cfg.n_mc, cfg.fl
        )));
    }
    DesignDraws::equal_mass(cfg.fl, 2, raw.z, raw.eta)
}

/// Draws the scenario from stream `(seed, stream_id())` and computes its
/// effect sizes.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    let mut rng = RngStream::new(cfg.seed, cfg.stream_id());
    let draws = build_scenario(cfg, &mut rng)?;
    let proj = weighted_projection(&draws)?;
    let summary = effect_sizes_from_projection(&draws, &proj, cfg.w1)?;
    Ok(ScenarioResult {
        config: *cfg,
        summary,
        diagnostics: ScenarioDiagnostics { rows_rejected: 0, condition: proj.condition },
    })
}

/// Why a sweep cell has no effect sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    /// Draws that left the link domain (0 if the failure came later).
    pub violations: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub config: ScenarioConfig,
    pub outcome: std::result::Result<ScenarioResult, CellFailure>,
}

impl SweepCell {
    pub fn result(&self) -> Option<&ScenarioResult> {
        self.outcome.as_ref().ok()
    }
}

/// Runs a scenario, turning domain failures into a [`CellFailure`] so one
/// infeasible cell does not abort a sweep.
pub fn run_cell(cfg: &ScenarioConfig) -> Result<SweepCell> {
    let outcome = match run_scenario(cfg) {
        Ok(r) => Ok(r),
        Err(Error::Domain(message)) => {
            let mut rng = RngStream::new(cfg.seed, cfg.stream_id());
            let violations = generate(cfg, &mut rng).map(|r| r.violations).unwrap_or(0);
            Err(CellFailure { violations, message })
        }
        Err(e) => return Err(e),
    };
    Ok(SweepCell { config: *cfg, outcome })
}

/// The Cartesian product of `axes` applied to `base`, first axis slowest.
pub fn grid_configs(base: &ScenarioConfig, axes: &[(String, Vec<f64>)]) -> Result<Vec<ScenarioConfig>> {
    let mut configs = vec![*base];
    for (name, values) in axes {
        if !AXIS_NAMES.contains(&name.as_str()) {
            return Err(Error::Config(format!(
                "unknown sweep axis '{name}' (expected one of {})",
                AXIS_NAMES.join(", ")
            )));
        }
        if values.is_empty() {
            return Err(Error::Config(format!("sweep axis '{name}' has no values")));
        }
        let mut next = Vec::with_capacity(configs.len() * values.len());
        for cfg in &configs {
            for &v in values {
                let mut c = *cfg;
                c.set(name, v)?;
                next.push(c);
            }
        }
        configs = next;
    }
    for c in &configs {
        c.validate()?;
    }
    Ok(configs)
}

/// Runs every grid cell; results are in grid order.
pub fn sweep_cells(base: &ScenarioConfig, axes: &[(String, Vec<f64>)]) -> Result<Vec<SweepCell>> {
    let configs = grid_configs(base, axes)?;
    par::map(&configs, run_cell).into_iter().collect()
}

/// Column order of sweep CSV output.
pub const CSV_HEADER: [&str; 22] = [
    "family",
    "link",
    "aux",
    "a_x",
    "b_x",
    "a_z",
    "b_z",
    "s_x",
    "s_z",
    "rho",
    "ref_mean",
    "n_mc",
    "seed",
    "phi",
    "pseudo_r2",
    "f2",
    "f2_phi",
    "f2_r",
    "re_phi",
    "re_r",
    "mean_y",
    "dropped_rows",
];

const NA: &str = "NA";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| x.to_string())
}

/// One CSV record per cell, `NA` for undefined values.
pub fn cell_record(cell: &SweepCell) -> Vec<String> {
    let c = &cell.config;
    let mut rec = vec![
        c.fl.family().name().to_string(),
        c.fl.link().name().to_string(),
        c.fl.aux().to_string(),
        c.a_x.to_string(),
        c.b_x.to_string(),
        c.a_z.to_string(),
        c.b_z.to_string(),
        c.s_x.to_string(),
        c.s_z.to_string(),
        c.rho.to_string(),
        c.ref_mean.to_string(),
        c.n_mc.to_string(),
        c.seed.to_string(),
    ];
    match &cell.outcome {
        Ok(r) => {
            let s = &r.summary;
            rec.extend([
                s.phi.to_string(),
                s.pseudo_r2.to_string(),
                s.f2.to_string(),
                s.f2_phi.to_string(),
                s.f2_r.to_string(),
                opt(s.re_phi),
                opt(s.re_r),
                s.mean_y.to_string(),
                r.diagnostics.rows_rejected.to_string(),
            ]);
        }
        Err(f) => {
            rec.extend(std::iter::repeat_n(NA.to_string(), 8));
            rec.push(f.violations.to_string());
        }
    }
    rec
}

/// Writes cells as CSV with [`CSV_HEADER`].
pub fn write_cells_csv<W: Write>(cells: &[SweepCell], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(io)?;
    for cell in cells {
        w.write_record(cell_record(cell)).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

/// Runs a grid sweep and writes it as CSV; returns the number of rows.
pub fn sweep_grid<W: Write>(base: &ScenarioConfig, axes: &[(String, Vec<f64>)], out: W) -> Result<usize> {
    let cells = sweep_cells(base, axes)?;
    write_cells_csv(&cells, out)?;
    Ok(cells.len())
}

/// The four GLMs of the relative-error study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StudyModel {
    Logistic,
    BernoulliIdentity,
    PoissonLog,
    GammaLog,
}

impl StudyModel {
    pub const ALL: [StudyModel; 4] =
        [StudyModel::Logistic, StudyModel::BernoulliIdentity, StudyModel::PoissonLog, StudyModel::GammaLog];

    pub fn name(self) -> &'static str {
        match self {
            StudyModel::Logistic => "logistic",
            StudyModel::BernoulliIdentity => "bernoulli-identity",
            StudyModel::PoissonLog => "poisson-log",
            StudyModel::GammaLog => "gamma-log",
        }
    }

    pub fn family_link(self) -> FamilyLink {
        match self {
            StudyModel::Logistic => FamilyLink::logistic(),
            StudyModel::BernoulliIdentity => {
                FamilyLink::new(Family::Bernoulli, Link::Identity, 1.0).expect("registered pair")
            }
            StudyModel::PoissonLog => FamilyLink::poisson_log(),
            StudyModel::GammaLog => FamilyLink::gamma_log(2.0),
        }
    }

    /// Smallest and largest variance `s^2` of the grid and sensitivity ranges.
    pub fn variance_range(self) -> (f64, f64) {
        match self {
            StudyModel::Logistic => (0.01, 0.09),
            StudyModel::BernoulliIdentity => (0.0002, 0.0018),
            StudyModel::PoissonLog => (0.002, 0.018),
            StudyModel::GammaLog => (0.001, 0.009),
        }
    }

    /// Intercept mean of the grid sweeps.
    pub fn figure_ref_mean(self) -> f64 {
        match self {
            StudyModel::Logistic | StudyModel::BernoulliIdentity => 0.25,
            StudyModel::PoissonLog => 1.0,
            StudyModel::GammaLog => 4.0,
        }
    }

    /// Range of intercept means in the sensitivity analysis.
    pub fn ref_mean_range(self) -> (f64, f64) {
        match self {
            StudyModel::Logistic | StudyModel::BernoulliIdentity => (0.15, 0.35),
            StudyModel::PoissonLog => (0.5, 1.5),
            StudyModel::GammaLog => (2.0, 6.0),
        }
    }

    pub fn figure_base(self, seed: u64) -> ScenarioConfig {
        let mut c = ScenarioConfig::new(self.family_link(), self.figure_ref_mean());
        c.seed = seed;
        c
    }

    /// Shapes of `B_x` over `{0.5, 1, 1.5}^2`, two levels of `s_z^2` and five
    /// evenly spaced `s_x^2` values; `s_x2` varies fastest.
    pub fn figure_axes(self) -> Vec<(String, Vec<f64>)> {
        let (lo, hi) = self.variance_range();
        let shapes = vec![0.5, 1.0, 1.5];
        let sx2 = (0..5).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect();
        vec![
            ("a_x".into(), shapes.clone()),
            ("b_x".into(), shapes),
            ("s_z2".into(), vec![lo, hi]),
            ("s_x2".into(), sx2),
        ]
    }

    /// Sensitivity ranges, in the order of [`SENSITIVITY_PARAMS`].
    pub fn sensitivity_ranges(self) -> Vec<(f64, f64)> {
        let (lo, hi) = self.variance_range();
        let sd = (lo.sqrt(), hi.sqrt());
        vec![(0.5, 1.5), (0.5, 1.5), (0.5, 1.5), (0.5, 1.5), sd, sd, (-0.25, 0.25), self.ref_mean_range()]
    }
}

impl fmt::Display for StudyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StudyModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StudyModel::ALL.into_iter().find(|m| m.name() == s.to_ascii_lowercase()).ok_or_else(|| {
            let names: Vec<_> = StudyModel::ALL.iter().map(|m| m.name()).collect();
            Error::Config(format!("unknown model '{s}' (expected one of {})", names.join(", ")))
        })
    }
}

/// Parameters varied by the sensitivity analysis, in column order.
pub const SENSITIVITY_PARAMS: [&str; 8] = ["a_x", "b_x", "a_z", "b_z", "s_x", "s_z", "rho", "ref_mean"];

/// Latin hypercube sample: `n` rows, one column per range. Each column puts
/// exactly one point in each of `n` equal strata, with strata independently
/// permuted across columns.
pub fn lhs_sample(ranges: &[(f64, f64)], n: usize, rng: &mut RngStream) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::Config("Latin hypercube needs at least one sample".into()));
    }
    if let Some(&(lo, hi)) = ranges.iter().find(|&&(lo, hi)| !(lo < hi && lo.is_finite() && hi.is_finite())) {
        return Err(Error::Config(format!("invalid range [{lo}, {hi}]")));
    }
    let mut rows = vec![Vec::with_capacity(ranges.len()); n];
    for &(lo, hi) in ranges {
        let mut strata: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            strata.swap(i, rng.index(i + 1));
        }
        for (row, &k) in rows.iter_mut().zip(&strata) {
            row.push(lo + (hi - lo) * (k as f64 + rng.uniform()) / n as f64);
        }
    }
    Ok(rows)
}

/// Ranks from 1, ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prcc {
    pub coefficients: Vec<f64>,
    /// Rows dropped because the response was undefined.
    pub dropped: usize,
}

fn residualize(target: &[f64], regressors: &[&[f64]]) -> Result<Vec<f64>> {
    use nalgebra::{DMatrix, DVector};
    let n = target.len();
    let k = regressors.len() + 1;
    let col = |j: usize, i: usize| if j == 0 { 1.0 } else { regressors[j - 1][i] };
    let mut a = DMatrix::zeros(k, k);
    let mut b = DVector::zeros(k);
    for (i, &t) in target.iter().enumerate() {
        for r in 0..k {
            b[r] += col(r, i) * t;
            for c in 0..k {
                a[(r, c)] += col(r, i) * col(c, i);
            }
        }
    }
    let coef = solve_spd(&a, &b, "rank regression matrix")?;
    Ok((0..n).map(|i| target[i] - (0..k).map(|j| coef[j] * col(j, i)).sum::<f64>()).collect())
}

/// Partial rank correlation of each parameter column with the response,
/// controlling for the ranks of the other columns. Rows with an undefined
/// response are dropped and counted.
pub fn prcc(params: &[Vec<f64>], response: &[Option<f64>]) -> Result<Prcc> {
    if params.len() != response.len() {
        return Err(Error::Config(format!("{} parameter rows but {} responses", params.len(), response.len())));
    }
    let keep: Vec<usize> = (0..response.len()).filter(|&i| response[i].is_some_and(f64::is_finite)).collect();
    let dropped = response.len() - keep.len();
    let k = params.first().map_or(0, Vec::len);
    if k == 0 || params.iter().any(|r| r.len() != k) {
        return Err(Error::Config("parameter rows must share a nonzero column count".into()));
    }
    if keep.len() <= k + 2 {
        return Err(Error::Config(format!("PRCC needs more than {} usable rows, got {}", k + 2, keep.len())));
    }
    let ranks: Vec<Vec<f64>> =
        (0..k).map(|j| average_ranks(&keep.iter().map(|&i| params[i][j]).collect::<Vec<_>>())).collect();
    let ry = average_ranks(&keep.iter().map(|&i| response[i].unwrap_or(f64::NAN)).collect::<Vec<_>>());
    let coefficients = (0..k)
        .map(|j| {
            let others: Vec<&[f64]> = (0..k).filter(|&o| o != j).map(|o| ranks[o].as_slice()).collect();
            let ex = residualize(&ranks[j], &others)?;
            let ey = residualize(&ry, &others)?;
            let sxy: f64 = ex.iter().zip(&ey).map(|(a, b)| a * b).sum();
            let sxx: f64 = ex.iter().map(|a| a * a).sum();
            let syy: f64 = ey.iter().map(|a| a * a).sum();
            if !(sxx > 0.0 && syy > 0.0) {
                return Err(Error::Singular(format!("rank residuals for column {j} have zero variance")));
            }
            Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Prcc { coefficients, dropped })
}

/// Sample quantile by linear interpolation between order statistics
/// (the `type 7` rule). `sorted` must be ascending and nonempty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Relative errors at or below this magnitude count as exactly zero.
pub const ZERO_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureSummary {
    /// Every defined value is zero up to [`ZERO_TOLERANCE`].
    Zero {
        n: usize,
        dropped: usize,
    },
    Quantiles {
        mean: f64,
        min: f64,
        q1: f64,
        median: f64,
        q3: f64,
        max: f64,
        n: usize,
        dropped: usize,
    },
    /// No defined values.
    Empty {
        dropped: usize,
    },
}

impl MeasureSummary {
    pub fn median(&self) -> Option<f64> {
        match *self {
            MeasureSummary::Zero { .. } => Some(0.0),
            MeasureSummary::Quantiles { median, .. } => Some(median),
            MeasureSummary::Empty { .. } => None,
        }
    }
}

pub fn summarize(values: &[Option<f64>]) -> MeasureSummary {
    let mut v: Vec<f64> = values.iter().flatten().copied().filter(|x| x.is_finite()).collect();
    let dropped = values.len() - v.len();
    if v.is_empty() {
        return MeasureSummary::Empty { dropped };
    }
    if v.iter().all(|x| x.abs() <= ZERO_TOLERANCE) {
        return MeasureSummary::Zero { n: v.len(), dropped };
    }
    v.sort_by(f64::total_cmp);
    MeasureSummary::Quantiles {
        mean: v.iter().sum::<f64>() / v.len() as f64,
        min: v[0],
        q1: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        q3: quantile_sorted(&v, 0.75),
        max: v[v.len() - 1],
        n: v.len(),
        dropped,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivitySummary {
    pub re_phi: MeasureSummary,
    pub re_r: MeasureSummary,
}

/// Summaries of both relative errors over a set of scenario results.
pub fn sensitivity_summary(results: &[ScenarioResult]) -> Result<SensitivitySummary> {
    if results.is_empty() {
        return Err(Error::Config("no scenario results to summarize".into()));
    }
    let phi: Vec<_> = results.iter().map(|r| r.summary.re_phi).collect();
    let r: Vec<_> = results.iter().map(|r| r.summary.re_r).collect();
    Ok(SensitivitySummary { re_phi: summarize(&phi), re_r: summarize(&r) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRun {
    pub model: StudyModel,
    /// One row per hypercube point, columns as in [`SENSITIVITY_PARAMS`].
    pub params: Vec<Vec<f64>>,
    pub cells: Vec<SweepCell>,
}

impl SensitivityRun {
    pub fn results(&self) -> Vec<ScenarioResult> {
        self.cells.iter().filter_map(|c| c.result().copied()).collect()
    }

    pub fn summary(&self) -> Result<SensitivitySummary> {
        sensitivity_summary(&self.results())
    }

    fn response(&self, pick: fn(&EffectSummary) -> Option<f64>) -> Vec<Option<f64>> {
        self.cells.iter().map(|c| c.result().and_then(|r| pick(&r.summary))).collect()
    }

    pub fn prcc_phi(&self) -> Result<Prcc> {
        prcc(&self.params, &self.response(|s| s.re_phi))
    }

    pub fn prcc_r(&self) -> Result<Prcc> {
        prcc(&self.params, &self.response(|s| s.re_r))
    }
}

/// Latin hypercube sensitivity analysis of one study model: `n` points over
/// the model's parameter ranges, each run as a scenario with `n_mc` draws.
pub fn run_sensitivity(model: StudyModel, n: usize, n_mc: usize, seed: u64) -> Result<SensitivityRun> {
    let mut rng = RngStream::new(seed, u64::MAX - model as u64);
    let params = lhs_sample(&model.sensitivity_ranges(), n, &mut rng)?;
    let mut base = ScenarioConfig::new(model.family_link(), model.figure_ref_mean());
    base.n_mc = n_mc;
    base.seed = seed;
    let configs = params
        .iter()
        .map(|row| {
            let mut c = base;
            for (name, &v) in SENSITIVITY_PARAMS.iter().zip(row) {
                c.set(name, v)?;
            }
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let cells = par::map(&configs, run_cell).into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SensitivityRun { model, params, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small(model: StudyModel) -> ScenarioConfig {
        let mut c = model.figure_base(3);
        c.n_mc = 20_000;
        c
    }

    #[test]
    fn zero_signal_gives_null_summary() {
        let r = run_scenario(&small(StudyModel::Logistic)).unwrap();
        assert_eq!(r.summary.f2, 0.0);
        assert_eq!(r.summary.phi, 0.0);
        assert_eq!(r.summary.re_phi, None);
    }

    #[test]
    fn uniform_scale_constant() {
        let mut c = small(StudyModel::Logistic);
        c.s_x = 0.2;
        c.n_mc = 50_000;
        let mut rng = RngStream::new(c.seed, c.stream_id());
        let d = build_scenario(&c, &mut rng).unwrap();
        let iota = c.fl.link_fn(c.ref_mean).unwrap();
        let n = d.len() as f64;
        let m = d.eta().iter().sum::<f64>() / n;
        let sd = (d.eta().iter().map(|e| (e - m).powi(2)).sum::<f64>() / n).sqrt();
        assert_abs_diff_eq!(sd, 0.2, epsilon = 0.003);
        assert_abs_diff_eq!(m, iota, epsilon = 0.01);
        assert_abs_diff_eq!(0.2 / (1.0f64 / 12.0).sqrt(), 0.6928, epsilon = 1e-4);
    }

    #[test]
    fn exact_cases_in_scenarios() {
        let mut g = small(StudyModel::GammaLog);
        g.s_x = 0.08;
        g.s_z = 0.05;
        g.a_x = 0.5;
        let r = run_scenario(&g).unwrap();
        assert!(r.summary.re_phi.unwrap().abs() < 1e-10);
        let mut b = small(StudyModel::BernoulliIdentity);
        b.s_x = 0.03;
        b.s_z = 0.02;
        let r = run_scenario(&b).unwrap();
        assert!(r.summary.re_r.unwrap().abs() < 1e-10);
    }

    #[test]
    fn small_coefficient_logistic_errors_are_small() {
        let mut c = small(StudyModel::Logistic);
        c.s_x = 0.1;
        c.s_z = 0.1;
        let r = run_scenario(&c).unwrap();
        assert!(r.summary.re_phi.unwrap().abs() < 0.03);
        assert!(r.summary.re_r.unwrap().abs() < 0.03);
    }

    #[test]
    fn identity_link_violations_are_counted() {
        let mut c = small(StudyModel::BernoulliIdentity);
        c.ref_mean = 0.05;
        c.s_x = 0.1;
        c.a_x = 0.5;
        c.b_x = 1.5;
        let err = run_scenario(&c).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        let cell = run_cell(&c).unwrap();
        let failure = cell.outcome.unwrap_err();
        assert!(failure.violations > 0 && failure.violations < c.n_mc);
        assert!(failure.message.contains(&failure.violations.to_string()));
    }

    #[test]
    fn grid_shape_and_axis_validation() {
        let base = small(StudyModel::Logistic);
        assert_eq!(grid_configs(&base, &[]).unwrap().len(), 1);
        let axes = StudyModel::Logistic.figure_axes();
        let g = grid_configs(&base, &axes).unwrap();
        assert_eq!(g.len(), 90);
        assert_abs_diff_eq!(g[1].s_x * g[1].s_x, 0.03, epsilon = 1e-12);
        let bad = vec![("beta".to_string(), vec![1.0])];
        assert!(matches!(grid_configs(&base, &bad), Err(Error::Config(_))));
    }

    #[test]
    fn sweep_csv_is_deterministic() {
        let mut base = small(StudyModel::PoissonLog);
        base.n_mc = 2000;
        let axes = vec![("s_x2".to_string(), vec![0.0, 0.01]), ("a_x".to_string(), vec![0.5, 1.5])];
        let mut a = Vec::new();
        let mut b = Vec::new();
        assert_eq!(sweep_grid(&base, &axes, &mut a).unwrap(), 4);
        sweep_grid(&base, &axes, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(lines.len(), 5);
        assert!(lines[1].contains(",NA,NA,"));
    }

    #[test]
    fn stream_ids_ignore_seed_and_grid() {
        let a = small(StudyModel::Logistic);
        let mut b = a;
        b.seed = 99;
        assert_eq!(a.stream_id(), b.stream_id());
        b.s_x = 0.1;
        assert_ne!(a.stream_id(), b.stream_id());
    }

    #[test]
    fn lhs_stratifies_each_column() {
        let mut rng = RngStream::new(4, 0);
        let s = lhs_sample(&[(0.0, 1.0)], 4, &mut rng).unwrap();
        let mut strata: Vec<usize> = s.iter().map(|r| (r[0] * 4.0) as usize).collect();
        strata.sort();
        assert_eq!(strata, vec![0, 1, 2, 3]);
        let s = lhs_sample(&[(2.0, 3.0), (-1.0, 1.0)], 1000, &mut rng).unwrap();
        for j in 0..2 {
            let (lo, hi) = [(2.0, 3.0), (-1.0, 1.0)][j];
            let mut k: Vec<usize> = s.iter().map(|r| ((r[j] - lo) / (hi - lo) * 1000.0) as usize).collect();
            k.sort();
            assert_eq!(k, (0..1000).collect::<Vec<_>>());
        }
        assert!(lhs_sample(&[(1.0, 1.0)], 4, &mut rng).is_err());
    }

    #[test]
    fn average_ranks_share_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn type7_quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_abs_diff_eq!(quantile_sorted(&v, 0.25), 1.75);
        assert_abs_diff_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert_abs_diff_eq!(quantile_sorted(&v, 0.75), 3.25);
        match summarize(&[Some(0.1), Some(0.1), None]) {
            MeasureSummary::Quantiles { min, median, max, dropped, .. } => {
                assert_eq!((min, median, max, dropped), (0.1, 0.1, 0.1, 1));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(summarize(&[Some(0.0), Some(1e-12)]), MeasureSummary::Zero { n: 2, .. }));
    }

    #[test]
    fn model_names_round_trip() {
        for m in StudyModel::ALL {
            assert_eq!(m.name().parse::<StudyModel>().unwrap(), m);
        }
        assert!("probit".parse::<StudyModel>().is_err());
    }
}
