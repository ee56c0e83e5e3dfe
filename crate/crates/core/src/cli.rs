//! Config-driven experiment runner behind the `trimboot` binary.
//!
//! `run` reads a TOML config, executes the experiment on a dedicated thread
//! pool and writes `results.csv`, `report.json` and `plots/*.svg`.
//! `check-invariants` runs the lemma suite. `plot` redraws charts from an
//! existing `results.csv`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::bootstrap::BootstrapKind;
use crate::contamination::AdversaryPolicy;
use crate::diagnostics::{parse_scope, run_suite_entry, LemmaReport, SuiteSizes};
use crate::distributions::{DistributionSpec, Family, Scale};
use crate::error::Error;
use crate::estimators::{plan_bootstrap, plan_gaussian, truncation_level, TrimPlan};
use crate::experiments::{
    coverage_experiment, dkw_band, estimate_rho_many, rho_tilde_sweep, threshold_experiment, vecmean_experiment,
};
use crate::gaussian::{NormSpecFinite, JITTER_LADDER};
use crate::plot::{Chart, Series};
use crate::rng::Stream;
use crate::vecmean::{vecmean_plan, DEFAULT_C_KNOB};

pub const THREADS_ENV: &str = "TRIMBOOT_THREADS";

pub const CSV_HEADER: [&str; 13] =
    ["experiment", "n", "d", "p", "epsilon", "estimator", "k", "M", "rho_hat", "stderr", "dkw_band", "runtime_ms", "seed"];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("infeasible plan: {0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0} invariant check(s) failed")]
    ChecksFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) | CliError::ChecksFailed(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InfeasibleTrim { .. } | Error::TrimTooLarge { .. } => CliError::Infeasible(e.to_string()),
            Error::NotPsd { .. } | Error::Degenerate(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Rho,
    RhoTilde,
    Coverage,
    Threshold,
    VecMean,
    LemmaSuite,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Rho => "rho",
            ExperimentKind::RhoTilde => "rho-tilde",
            ExperimentKind::Coverage => "coverage",
            ExperimentKind::Threshold => "threshold",
            ExperimentKind::VecMean => "vec-mean",
            ExperimentKind::LemmaSuite => "lemma-suite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanChoice {
    #[default]
    Gaussian,
    Bootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    Trimmed,
    /// The empirical mean, i.e. `k = 0`.
    Empirical,
}

impl Estimator {
    fn name(self) -> &'static str {
        match self {
            Estimator::Trimmed => "trimmed",
            Estimator::Empirical => "empirical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OnInfeasible {
    /// Stop with exit code 3.
    #[default]
    Error,
    /// Drop the trimmed estimator for that cell and record a note.
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionConfig {
    pub family: Family,
    #[serde(default)]
    pub scale: Scale,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Replications {
    pub r1: usize,
    pub r2: usize,
    pub r_boot: usize,
    pub r_outer: usize,
    /// Data sets in a `rho-tilde` sweep.
    pub samples: usize,
    /// Randomized instances per bounding-lemma scenario.
    pub bounding_instances: usize,
}

impl Default for Replications {
    fn default() -> Self {
        Replications { r1: 2000, r2: 2000, r_boot: 1000, r_outer: 1000, samples: 1, bounding_instances: 500 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Overrides {
    pub k: Option<usize>,
    #[serde(rename = "M")]
    pub m: Option<f64>,
    pub nu_p: Option<f64>,
    pub c_knob: f64,
}

impl Default for Overrides {
    fn default() -> Self {
        Overrides { k: None, m: None, nu_p: None, c_knob: DEFAULT_C_KNOB }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NormConfig {
    #[default]
    Linf,
    /// Listed vectors, closed under negation.
    Vectors { vectors: Vec<Vec<f64>> },
    /// A text file with one vector per line, relative to the config file.
    File { path: PathBuf },
}

fn default_level() -> f64 {
    0.9
}

fn default_estimators() -> Vec<Estimator> {
    vec![Estimator::Trimmed, Estimator::Empirical]
}

fn default_kinds() -> Vec<BootstrapKind> {
    vec![BootstrapKind::Empirical, BootstrapKind::GaussianMultiplier]
}

fn default_scope() -> String {
    "all".into()
}

/// One experiment. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub distribution: Option<DistributionConfig>,
    #[serde(default)]
    pub epsilon: f64,
    /// Moment order used by the plans.
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub n_grid: Vec<usize>,
    #[serde(default)]
    pub d_grid: Vec<usize>,
    /// Threshold experiment: exponents `delta` in `d = n^{p/2 - 1 + delta}`.
    #[serde(default)]
    pub delta_grid: Vec<f64>,
    #[serde(default)]
    pub plan: PlanChoice,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<Estimator>,
    #[serde(default = "default_kinds")]
    pub bootstrap: Vec<BootstrapKind>,
    #[serde(default)]
    pub adversary: AdversaryPolicy,
    #[serde(default)]
    pub replications: Replications,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub on_infeasible: OnInfeasible,
    #[serde(default)]
    pub norm: NormConfig,
    /// Lemma suite selection.
    #[serde(default = "default_scope")]
    pub scope: String,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        use ExperimentKind::*;
        if !(0.0..0.5).contains(&self.epsilon) {
            return bad("epsilon: must lie in [0, 0.5)");
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad("level: must lie in (0, 1)");
        }
        if self.experiment != LemmaSuite {
            if self.n_grid.is_empty() {
                return bad("n_grid: must list at least one sample size");
            }
            match self.p {
                Some(p) if p > 2.0 => {}
                Some(_) => return bad("p: must exceed 2"),
                None => return bad("p: required for this experiment"),
            }
        }
        if matches!(self.experiment, Rho | RhoTilde | Coverage | VecMean) {
            if self.distribution.is_none() {
                return bad("distribution: required for this experiment");
            }
            if self.d_grid.is_empty() || self.d_grid.contains(&0) {
                return bad("d_grid: must list positive dimensions");
            }
        }
        if self.experiment == Threshold && self.delta_grid.is_empty() {
            return bad("delta_grid: required for the threshold experiment");
        }
        if matches!(self.experiment, RhoTilde | Coverage) && self.bootstrap.is_empty() {
            return bad("bootstrap: must list at least one kind");
        }
        if matches!(self.experiment, Rho | Coverage) && self.estimators.is_empty() {
            return bad("estimators: must list at least one estimator");
        }
        let r = &self.replications;
        if r.r1 < 10 || r.r2 < 10 || r.r_boot < 1 || r.r_outer < 1 || r.samples < 1 {
            return bad("replications: r1 and r2 need at least 10, the rest at least 1");
        }
        if !(self.overrides.c_knob > 0.0) {
            return bad("overrides.c_knob: must be positive");
        }
        if self.experiment == LemmaSuite {
            parse_scope(&self.scope).map_err(|e| CliError::Config(format!("scope: {e}")))?;
        }
        Ok(())
    }

    fn p(&self) -> f64 {
        self.p.unwrap_or(f64::NAN)
    }

    fn spec(&self, d: usize) -> Result<DistributionSpec, CliError> {
        let dist = self.distribution.as_ref().ok_or_else(|| CliError::Config("distribution: missing".into()))?;
        Ok(DistributionSpec::new(dist.family, d)?.with_scale(dist.scale.clone())?)
    }

    fn nu(&self, spec: &DistributionSpec) -> Result<f64, CliError> {
        match self.overrides.nu_p {
            Some(v) => Ok(v),
            None => Ok(spec.analytic_moments(self.p())?.nu_p),
        }
    }

    /// The plan for the trimmed estimator, with overrides applied.
    pub fn trimmed_plan(&self, spec: &DistributionSpec, n: usize) -> Result<TrimPlan, CliError> {
        let (d, p, eps) = (spec.d, self.p(), self.epsilon);
        let nu = self.nu(spec)?;
        let plan = match self.overrides.k {
            Some(k) => TrimPlan::manual(n, d, eps, p, k, self.overrides.m.unwrap_or_else(|| truncation_level(n, d, p, nu)), nu)?,
            None => {
                let plan = match self.plan {
                    PlanChoice::Gaussian => plan_gaussian(n, d, eps, p, nu)?,
                    PlanChoice::Bootstrap => plan_bootstrap(n, d, eps, p, nu)?,
                };
                match self.overrides.m {
                    Some(m) => plan.with_m(m),
                    None => plan,
                }
            }
        };
        Ok(plan)
    }
}

/// One row of `results.csv`.
///
/// `rho_hat` holds the experiment's headline number: a Kolmogorov distance
/// for `rho`, `rho-tilde` and `threshold`, the coverage frequency for
/// `coverage`, the median error for `vec-mean` and the violation frequency
/// for `lemma-suite`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub n: usize,
    pub d: usize,
    pub p: f64,
    pub epsilon: f64,
    pub estimator: String,
    pub k: usize,
    #[serde(rename = "M")]
    pub m: f64,
    pub rho_hat: f64,
    pub stderr: f64,
    pub dkw_band: f64,
    pub runtime_ms: u64,
    pub seed: u64,
}

/// Everything an experiment produces before it is written out.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub details: Vec<serde_json::Value>,
    pub notes: Vec<String>,
    pub lemma_failures: usize,
}

fn json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("serializable")
}

/// Run the experiment described by `cfg` on the current rayon pool.
pub fn execute(cfg: &ExperimentConfig, base_dir: &Path, record_timing: bool) -> Result<RunOutput, CliError> {
    let mut out = RunOutput::default();
    let master = Stream::new(cfg.master_seed).named(cfg.experiment.name());
    let seed = cfg.master_seed;
    let timing = |ms: u64| if record_timing { ms } else { 0 };
    let name = cfg.experiment.name().to_string();
    let p = cfg.p();
    let eps = cfg.epsilon;
    let r = cfg.replications;
    let row = |n: usize, d: usize, estimator: String, k: usize, m: f64, vals: (f64, f64, f64), ms: u64| ResultRow {
        experiment: name.clone(),
        n,
        d,
        p,
        epsilon: eps,
        estimator,
        k,
        m,
        rho_hat: vals.0,
        stderr: vals.1,
        dkw_band: vals.2,
        runtime_ms: timing(ms),
        seed,
    };
    // Trimmed plan for one cell, or `None` when skipped as infeasible.
    let plan_or_skip = |spec: &DistributionSpec, n: usize, notes: &mut Vec<String>| -> Result<Option<TrimPlan>, CliError> {
        match cfg.trimmed_plan(spec, n) {
            Ok(plan) => Ok(Some(plan)),
            Err(CliError::Infeasible(m)) if cfg.on_infeasible == OnInfeasible::Skip => {
                notes.push(format!("n = {n}, d = {}: trimmed estimator skipped, {m}", spec.d));
                Ok(None)
            }
            Err(e) => Err(e),
        }
    };

    match cfg.experiment {
        ExperimentKind::Rho => {
            for &d in &cfg.d_grid {
                let spec = cfg.spec(d)?;
                let nu = cfg.nu(&spec)?;
                for &n in &cfg.n_grid {
                    let trimmed = if cfg.estimators.contains(&Estimator::Trimmed) { plan_or_skip(&spec, n, &mut out.notes)? } else { None };
                    let mut plans = Vec::new();
                    for e in &cfg.estimators {
                        match (e, trimmed) {
                            (Estimator::Trimmed, Some(plan)) => plans.push((*e, plan)),
                            (Estimator::Trimmed, None) => {}
                            (Estimator::Empirical, _) => {
                                plans.push((*e, TrimPlan::manual(n, d, eps, p, 0, truncation_level(n, d, p, nu), nu)?))
                            }
                        }
                    }
                    if plans.is_empty() {
                        continue;
                    }
                    let only: Vec<TrimPlan> = plans.iter().map(|x| x.1).collect();
                    let stream = master.named(&format!("n={n}/d={d}"));
                    let reports = estimate_rho_many(&spec, eps, &cfg.adversary, &only, r.r1, r.r2, stream)?;
                    for ((e, plan), rep) in plans.iter().zip(&reports) {
                        out.rows.push(row(n, d, e.name().into(), plan.k, plan.m, (rep.rho_hat, rep.stderr, rep.dkw_band), rep.runtime_ms));
                        let mut detail = json(rep);
                        detail["estimator"] = e.name().into();
                        detail["plan"] = json(plan);
                        out.details.push(detail);
                    }
                }
            }
        }
        ExperimentKind::RhoTilde => {
            for &d in &cfg.d_grid {
                let spec = cfg.spec(d)?;
                for &n in &cfg.n_grid {
                    let Some(plan) = plan_or_skip(&spec, n, &mut out.notes)? else { continue };
                    for &kind in &cfg.bootstrap {
                        let stream = master.named(&format!("n={n}/d={d}/{}", kind_name(kind)));
                        let sweep = rho_tilde_sweep(&spec, eps, &cfg.adversary, &plan, kind, r.r_boot, r.r2, r.samples, stream)?;
                        let se = if sweep.values.len() > 1 {
                            let m = crate::numeric::mean(&sweep.values);
                            let var = sweep.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (sweep.values.len() - 1) as f64;
                            (var / sweep.values.len() as f64).sqrt()
                        } else {
                            f64::NAN
                        };
                        out.rows.push(row(n, d, format!("bootstrap-{}", kind_name(kind)), plan.k, plan.m, (sweep.median, se, sweep.dkw_band), sweep.runtime_ms));
                        let mut detail = json(&sweep);
                        detail["plan"] = json(&plan);
                        out.details.push(detail);
                    }
                }
            }
        }
        ExperimentKind::Coverage => {
            for &d in &cfg.d_grid {
                let spec = cfg.spec(d)?;
                let nu = cfg.nu(&spec)?;
                for &n in &cfg.n_grid {
                    let trimmed = if cfg.estimators.contains(&Estimator::Trimmed) { plan_or_skip(&spec, n, &mut out.notes)? } else { None };
                    for e in &cfg.estimators {
                        let plan = match (e, trimmed) {
                            (Estimator::Trimmed, Some(plan)) => plan,
                            (Estimator::Trimmed, None) => continue,
                            (Estimator::Empirical, _) => TrimPlan::manual(n, d, eps, p, 0, truncation_level(n, d, p, nu), nu)?,
                        };
                        for &kind in &cfg.bootstrap {
                            let stream = master.named(&format!("n={n}/d={d}/{}/{}", e.name(), kind_name(kind)));
                            let rep = coverage_experiment(&spec, eps, &cfg.adversary, &plan, kind, cfg.level, r.r_outer, r.r_boot, stream)?;
                            let label = format!("{}/{}", e.name(), kind_name(kind));
                            out.rows.push(row(n, d, label.clone(), plan.k, plan.m, (rep.coverage, rep.stderr, dkw_band(r.r_boot, r.r_boot)), rep.runtime_ms));
                            let mut detail = json(&rep);
                            detail["estimator"] = label.into();
                            out.details.push(detail);
                        }
                    }
                }
            }
        }
        ExperimentKind::Threshold => {
            let table = threshold_experiment(p, &cfg.delta_grid, &cfg.n_grid, r.r1, master)?;
            for t in &table.rows {
                out.rows.push(row(t.n, t.d, t.estimator.clone(), t.k, t.m, (t.rho_hat, t.stderr, t.dkw_band), t.runtime_ms));
            }
            out.notes.extend(table.notes.iter().cloned());
            out.details.push(json(&table));
        }
        ExperimentKind::VecMean => {
            for &d in &cfg.d_grid {
                let spec = cfg.spec(d)?;
                let s = match &cfg.norm {
                    NormConfig::Linf => NormSpecFinite::linf(d),
                    NormConfig::Vectors { vectors } => NormSpecFinite::symmetrized(vectors.clone())?,
                    NormConfig::File { path } => {
                        let full = base_dir.join(path);
                        let text = fs::read_to_string(&full).map_err(|e| CliError::Config(format!("norm.path {}: {e}", full.display())))?;
                        NormSpecFinite::parse(&text)?
                    }
                };
                if s.dim() != d {
                    return Err(CliError::Config(format!("norm: dual vectors have dimension {}, d = {d}", s.dim())));
                }
                for &n in &cfg.n_grid {
                    let k = match cfg.overrides.k {
                        Some(k) => k,
                        None => match vecmean_plan(n, d, eps, p, cfg.overrides.c_knob) {
                            Ok(plan) => plan.k,
                            Err(e @ Error::InfeasibleTrim { .. }) if cfg.on_infeasible == OnInfeasible::Skip => {
                                out.notes.push(format!("n = {n}, d = {d}: skipped, {e}"));
                                continue;
                            }
                            Err(e) => return Err(e.into()),
                        },
                    };
                    // One stream for every n: replication i sees nested samples, which
                    // couples the errors across n and steadies the doubling ratios.
                    let stream = master.named(&format!("d={d}"));
                    let rep = vecmean_experiment(&spec, &s, eps, &cfg.adversary, n, k, r.r1, stream)?;
                    let sd = {
                        let m = crate::numeric::mean(&rep.errors);
                        (rep.errors.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (rep.errors.len().max(2) - 1) as f64).sqrt()
                    };
                    // Normal-theory standard error of a sample median.
                    let se = 1.2533 * sd / (rep.errors.len() as f64).sqrt();
                    out.rows.push(row(n, d, "minimax".into(), k, f64::NAN, (rep.median_error, se, dkw_band(r.r1, r.r1)), rep.runtime_ms));
                    let mut detail = json(&rep);
                    if let Some(obj) = detail.as_object_mut() {
                        obj.remove("errors");
                    }
                    out.details.push(detail);
                }
            }
        }
        ExperimentKind::LemmaSuite => {
            let ids = parse_scope(&cfg.scope)?;
            let sizes = SuiteSizes { bounding_instances: r.bounding_instances, replications: r.r1 };
            for id in ids {
                for rep in run_suite_entry(id, sizes, master)? {
                    out.lemma_failures += (!rep.pass) as usize;
                    out.rows.push(lemma_row(&rep, seed));
                    out.details.push(json(&rep));
                }
            }
        }
    }
    Ok(out)
}

fn kind_name(kind: BootstrapKind) -> &'static str {
    match kind {
        BootstrapKind::Empirical => "empirical",
        BootstrapKind::GaussianMultiplier => "gaussian-multiplier",
    }
}

fn lemma_row(rep: &LemmaReport, seed: u64) -> ResultRow {
    let freq = rep.frequency.unwrap_or(if rep.instances_checked > 0 { rep.violations as f64 / rep.instances_checked as f64 } else { 0.0 });
    ResultRow {
        experiment: "lemma-suite".into(),
        n: rep.instances_checked,
        d: 0,
        p: f64::NAN,
        epsilon: 0.0,
        estimator: rep.lemma_id.clone(),
        k: rep.violations,
        m: f64::NAN,
        rho_hat: freq,
        stderr: rep.stderr.unwrap_or(0.0),
        dkw_band: rep.probability_bound.unwrap_or(0.0),
        runtime_ms: 0,
        seed,
    }
}

pub fn write_csv(path: &Path, rows: &[ResultRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    if rows.is_empty() {
        w.write_record(CSV_HEADER).map_err(|e| io_err(path, e))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header: Vec<String> = r.headers().map_err(|e| io_err(path, e))?.iter().map(String::from).collect();
    if header != CSV_HEADER {
        return Err(CliError::Config(format!("{}: unexpected header {header:?}", path.display())));
    }
    r.deserialize().collect::<Result<Vec<ResultRow>, _>>().map_err(|e| io_err(path, e))
}

/// One chart per experiment name; series per estimator (and per `d` when
/// several are present). The threshold table is drawn against `d`.
pub fn charts(rows: &[ResultRow]) -> Vec<(String, Chart)> {
    let mut by_exp: BTreeMap<&str, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        by_exp.entry(&r.experiment).or_default().push(r);
    }
    by_exp
        .into_iter()
        .map(|(exp, rows)| {
            let against_d = exp == "threshold";
            let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
            let many_d = rows.iter().any(|r| r.d != rows[0].d);
            let many_n = rows.iter().any(|r| r.n != rows[0].n);
            for r in &rows {
                let label = if against_d && many_n {
                    format!("{} n={}", r.estimator, r.n)
                } else if !against_d && many_d {
                    format!("{} d={}", r.estimator, r.d)
                } else {
                    r.estimator.clone()
                };
                let x = if against_d { r.d } else { r.n } as f64;
                series.entry(label).or_default().push((x, r.rho_hat));
            }
            let y_label = match exp {
                "coverage" => "coverage",
                "vec-mean" => "median error",
                "lemma-suite" => "violation frequency",
                _ => "Kolmogorov distance",
            };
            let chart = Chart {
                title: exp.to_string(),
                x_label: if against_d { "d" } else { "n" }.into(),
                y_label: y_label.into(),
                log_x: true,
                series: series.into_iter().map(|(label, points)| Series { label, points }).collect(),
            };
            (exp.to_string(), chart)
        })
        .collect()
}

pub fn write_plots(dir: &Path, rows: &[ResultRow]) -> Result<Vec<PathBuf>, CliError> {
    let plots = dir.join("plots");
    fs::create_dir_all(&plots).map_err(|e| io_err(&plots, e))?;
    let mut written = Vec::new();
    for (name, chart) in charts(rows) {
        let path = plots.join(format!("{name}.svg"));
        fs::write(&path, chart.to_svg()).map_err(|e| io_err(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Parser)]
#[command(name = "trimboot", version, about = "Trimmed-mean Gaussian and bootstrap approximation experiments")]
pub struct Cli {
    /// Worker threads; results do not depend on this value.
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment in a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Fill `runtime_ms` with wall-clock times (breaks byte-identical reruns).
        #[arg(long)]
        record_timing: bool,
        #[arg(long)]
        no_plots: bool,
    },
    /// Run the lemma checks and exit non-zero if any fails.
    CheckInvariants {
        /// Comma separated lemma ids, or `all`.
        #[arg(long, default_value = "all")]
        scope: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write `report.json` here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Instances per bounding scenario.
        #[arg(long, default_value_t = 500)]
        instances: usize,
        /// Replications per probabilistic lemma.
        #[arg(long, default_value_t = 10_000)]
        replications: usize,
    },
    /// Redraw `plots/*.svg` from `results.csv` in `--out`.
    Plot {
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let threads = threads.unwrap_or_else(default_threads);
    if threads == 0 {
        return Err(CliError::Config("threads: must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| CliError::Numerical(e.to_string()))?;
    Ok(pool.install(f))
}

pub fn run(config: &Path, out: &Path, seed: Option<u64>, threads: Option<usize>, record_timing: bool, plots: bool) -> Result<RunOutput, CliError> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    let base = config.parent().unwrap_or(Path::new("."));
    let started = Instant::now();
    let result = with_pool(threads, || execute(&cfg, base, record_timing))??;
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    write_csv(&out.join("results.csv"), &result.rows)?;
    let report = serde_json::json!({
        "crate_version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "config_path": config.display().to_string(),
        "master_seed": cfg.master_seed,
        "threads": threads.unwrap_or_else(default_threads),
        "jitter_ladder": JITTER_LADDER,
        "c_knob": cfg.overrides.c_knob,
        "notes": result.notes,
        "results": result.details,
        "runtime_ms": if record_timing { started.elapsed().as_millis() as u64 } else { 0 },
    });
    let report_path = out.join("report.json");
    fs::write(&report_path, serde_json::to_string_pretty(&report).expect("serializable")).map_err(|e| io_err(&report_path, e))?;
    if plots {
        write_plots(out, &result.rows)?;
    }
    Ok(result)
}

pub fn check_invariants(scope: &str, seed: u64, sizes: SuiteSizes, threads: Option<usize>, out: Option<&Path>) -> Result<Vec<LemmaReport>, CliError> {
    let ids = parse_scope(scope).map_err(|e| CliError::Config(format!("scope: {e}")))?;
    if ids.is_empty() {
        eprintln!("warning: empty scope, no checks run");
        return Ok(Vec::new());
    }
    let master = Stream::new(seed).named("lemma-suite");
    let reports = with_pool(threads, || -> Result<Vec<LemmaReport>, CliError> {
        let mut all = Vec::new();
        for id in ids {
            let reps = run_suite_entry(id, sizes, master)?;
            for r in &reps {
                println!(
                    "{:<22} {} instances={} skipped={} violations={} worst_slack={:.6e}{}",
                    r.lemma_id,
                    if r.pass { "PASS" } else { "FAIL" },
                    r.instances_checked,
                    r.skipped,
                    r.violations,
                    r.worst_slack,
                    if r.note.is_empty() { String::new() } else { format!(" ({})", r.note) }
                );
            }
            all.extend(reps);
        }
        Ok(all)
    })??;
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let path = dir.join("report.json");
        let body = serde_json::json!({ "scope": scope, "seed": seed, "sizes": sizes, "reports": reports });
        fs::write(&path, serde_json::to_string_pretty(&body).expect("serializable")).map_err(|e| io_err(&path, e))?;
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        return Err(CliError::ChecksFailed(failed));
    }
    Ok(reports)
}

pub fn plot(out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let rows = read_csv(&out.join("results.csv"))?;
    write_plots(out, &rows)
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Run { config, out, seed, record_timing, no_plots } => run(&config, &out, seed, cli.threads, record_timing, !no_plots).map(|r| {
            if r.lemma_failures > 0 {
                eprintln!("warning: {} lemma check(s) failed", r.lemma_failures);
            }
            for n in &r.notes {
                eprintln!("note: {n}");
            }
            println!("wrote {} rows to {}", r.rows.len(), out.join("results.csv").display());
        }),
        Command::CheckInvariants { scope, seed, out, instances, replications } => {
            check_invariants(&scope, seed, SuiteSizes { bounding_instances: instances, replications }, cli.threads, out.as_deref()).map(|_| ())
        }
        Command::Plot { out } => plot(&out).map(|paths| {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml("experiment = \"threshold\"\np = 3.0\nn_grid = [100]\ndelta_grid = [0.0]\nbogus = 1\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn defaults_and_nested_tables() {
        let text = r#"
experiment = "rho"
p = 3.0
n_grid = [200]
d_grid = [3]
epsilon = 0.02

[distribution.family]
type = "symmetric-pareto"
tail_index = 3.5

[adversary.kind]
type = "large-outlier"
magnitude = 1e6
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.replications, Replications::default());
        assert_eq!(cfg.overrides.c_knob, DEFAULT_C_KNOB);
        assert_eq!(cfg.estimators, default_estimators());
        assert_eq!(cfg.level, 0.9);
        let echoed = toml::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&echoed).unwrap(), cfg);
    }

    #[test]
    fn field_named_in_validation_error() {
        let err = ExperimentConfig::from_toml("experiment = \"rho\"\np = 3.0\nn_grid = [10]\n").unwrap_err();
        assert!(err.to_string().contains("distribution"), "{err}");
        let err = ExperimentConfig::from_toml("experiment = \"threshold\"\np = 1.5\nn_grid = [10]\ndelta_grid = [0.0]\n").unwrap_err();
        assert!(err.to_string().contains("p:"), "{err}");
    }

    #[test]
    fn error_mapping() {
        assert_eq!(CliError::from(Error::InfeasibleTrim { k: 3, n: 4 }).exit_code(), 3);
        assert_eq!(CliError::from(Error::NotPsd { jitter: 1e-7 }).exit_code(), 4);
        assert_eq!(CliError::from(Error::EpsilonOutOfRange(0.7)).exit_code(), 2);
    }
}
