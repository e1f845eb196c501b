//! Experiment configs, orchestration and report emission.
//!
//! A config names a mode and the fixtures it runs on; `run_experiment`
//! dispatches to the owning module and collects one row per checked
//! quantity. Every row carries the bound it was compared with.
//!
//! CSV columns per mode:
//!
//! | mode | columns |
//! |------|---------|
//! | `af_convergence` | k, N_k, beta_N, x_N, bound, surrogate_distance |
//! | `af_certificates` | ideal, level, samples, x_N, beta_N, max_distance, bound, imprint_estimate, imprint_bound, certificate_failures, passed |
//! | `comm_repair` | trial, points, epsilon, hausdorff, sup_error, bound, lip_re, lip_im, sup_norm, vanishing, passed |
//! | `comm_ball_haus` | fixture, points, hausdorff_sets, estimate, bound, passed |
//! | `triple_check` | case, inequality, tuples, failures, min_slack, bound, passed |

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::commutative::{self, FiniteMetricSpace, SpaceConfig};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::ideals::{self, IdealConfig, IdealSupport};
use crate::quantum_metric::{check_triple, xn_factors, AdmissibleTriple, TripleCase};
use crate::rng::stream_rng;
use crate::tower::{validate_tower, BetaSequence, BratteliTower, TowerConfig};

pub const SCHEMA_VERSION: u32 = 1;
/// Directory used by [`default_output_path`] when set.
pub const OUT_DIR_ENV: &str = "FELLPROP_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    AfConvergence,
    AfCertificates,
    CommRepair,
    CommBallHaus,
    TripleCheck,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::AfConvergence => "af_convergence",
            Mode::AfCertificates => "af_certificates",
            Mode::CommRepair => "comm_repair",
            Mode::CommBallHaus => "comm_ball_haus",
            Mode::TripleCheck => "triple_check",
        }
    }

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Mode::AfConvergence => &["k", "N_k", "beta_N", "x_N", "bound", "surrogate_distance"],
            Mode::AfCertificates => &[
                "ideal",
                "level",
                "samples",
                "x_N",
                "beta_N",
                "max_distance",
                "bound",
                "imprint_estimate",
                "imprint_bound",
                "certificate_failures",
                "passed",
            ],
            Mode::CommRepair => &[
                "trial",
                "points",
                "epsilon",
                "hausdorff",
                "sup_error",
                "bound",
                "lip_re",
                "lip_im",
                "sup_norm",
                "vanishing",
                "passed",
            ],
            Mode::CommBallHaus => &["fixture", "points", "hausdorff_sets", "estimate", "bound", "passed"],
            Mode::TripleCheck => &["case", "inequality", "tuples", "failures", "min_slack", "bound", "passed"],
        }
    }
}

/// A fixture given by name or inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TowerRef {
    Named(String),
    Inline(TowerConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceRef {
    Named(String),
    Inline(SpaceConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tower: Option<TowerRef>,
    /// Ideals swept by `af_certificates`, or the sequence of `af_convergence`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ideals: Vec<IdealConfig>,
    /// Limit ideal of `af_convergence`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<IdealConfig>,
    /// Levels for `af_certificates`; default all `1 ≤ n < M`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<usize>>,
    /// Default `1/n!` for `n ≤ M`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
    /// Fixed space for the commutative modes; random spaces otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceRef>,
    /// Label pairs `(F1, F2)` for `comm_ball_haus` on a fixed space.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subsets: Vec<(Vec<String>, Vec<String>)>,
    /// Random trials or fixtures for the commutative modes.
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triple: Option<TripleCase>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_trials() -> usize {
    20
}
fn default_max_points() -> usize {
    12
}
fn default_samples() -> usize {
    100
}
fn default_tol() -> f64 {
    1e-6
}

impl ExperimentConfig {
    pub fn new(mode: Mode) -> Self {
        ExperimentConfig {
            mode,
            tower: None,
            ideals: Vec::new(),
            limit: None,
            levels: None,
            beta: None,
            space: None,
            subsets: Vec::new(),
            trials: default_trials(),
            max_points: default_max_points(),
            triple: None,
            samples: default_samples(),
            seed: 0,
            tol: default_tol(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 of the canonical JSON serialization, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Lists every invalid field; empty when the config is runnable.
    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if !(self.tol > 0.0) {
            p.push(format!("tol: must be positive, got {}", self.tol));
        }
        if self.samples == 0 {
            p.push("samples: must be at least 1".into());
        }
        let af = matches!(self.mode, Mode::AfConvergence | Mode::AfCertificates);
        if af {
            match &self.tower {
                None => p.push("tower: required for this mode".into()),
                Some(TowerRef::Named(n)) if fixtures::tower_config_by_name(n).is_none() => {
                    p.push(format!("tower: unknown fixture {n:?}"))
                }
                Some(TowerRef::Inline(c)) => {
                    for f in validate_tower(c).failures() {
                        p.push(format!("tower: {} failed: {}", f.name, f.detail));
                    }
                }
                _ => {}
            }
            if let Some(b) = &self.beta {
                if let Err(e) = BetaSequence::new(b.clone()) {
                    p.push(format!("beta: {e}"));
                }
            }
            if self.ideals.is_empty() {
                p.push("ideals: at least one ideal is required".into());
            }
        }
        if self.mode == Mode::AfConvergence && self.limit.is_none() {
            p.push("limit: required for af_convergence".into());
        }
        if matches!(self.mode, Mode::CommRepair | Mode::CommBallHaus) {
            match &self.space {
                Some(SpaceRef::Named(n)) if fixtures::space_by_name(n).is_none() => {
                    p.push(format!("space: unknown fixture {n:?}"))
                }
                Some(SpaceRef::Inline(c)) => {
                    if let Err(e) = FiniteMetricSpace::try_from(c.clone()) {
                        p.push(format!("space: {e}"));
                    }
                }
                None if self.trials == 0 => p.push("trials: must be at least 1".into()),
                None if self.max_points < 2 => p.push("max_points: must be at least 2".into()),
                _ => {}
            }
        }
        if self.mode == Mode::CommBallHaus && self.space.is_some() && self.subsets.is_empty() {
            p.push("subsets: required when a space is given".into());
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(p))
        }
    }

    fn tower(&self) -> Result<Arc<BratteliTower>> {
        let cfg = match &self.tower {
            Some(TowerRef::Named(n)) => fixtures::tower_config_by_name(n)
                .ok_or_else(|| Error::Config(vec![format!("tower: unknown fixture {n:?}")]))?,
            Some(TowerRef::Inline(c)) => c.clone(),
            None => return Err(Error::Config(vec!["tower: required for this mode".into()])),
        };
        Ok(Arc::new(BratteliTower::from_config(&cfg)?))
    }

    fn beta(&self, t: &BratteliTower) -> Result<BetaSequence> {
        match &self.beta {
            Some(b) => BetaSequence::new(b.clone()),
            None => Ok(BetaSequence::factorial(t.top_level() + 1)),
        }
    }

    fn space(&self) -> Result<Option<FiniteMetricSpace>> {
        match &self.space {
            None => Ok(None),
            Some(SpaceRef::Named(n)) => fixtures::space_by_name(n)
                .map(Some)
                .ok_or_else(|| Error::Config(vec![format!("space: unknown fixture {n:?}")])),
            Some(SpaceRef::Inline(c)) => Ok(Some(FiniteMetricSpace::try_from(c.clone())?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub values: Vec<Value>,
    /// Estimate minus bound; positive means the row fails.
    pub violation: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub rows: usize,
    pub failures: usize,
    pub max_violation: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub mode: Mode,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub notes: Vec<String>,
    pub summary: Summary,
    pub provenance: Provenance,
    /// Wall time; kept out of emitted files so they stay reproducible.
    #[serde(skip)]
    pub runtime: Duration,
}

impl Report {
    pub fn empty(mode: Mode, provenance: Provenance) -> Self {
        Self::assemble(mode, Vec::new(), Vec::new(), provenance, Duration::ZERO)
    }

    fn assemble(mode: Mode, rows: Vec<Row>, notes: Vec<String>, provenance: Provenance, runtime: Duration) -> Self {
        let failures = rows.iter().filter(|r| !r.passed).count();
        let max_violation = rows.iter().map(|r| r.violation).reduce(f64::max);
        Report {
            schema_version: SCHEMA_VERSION,
            mode,
            columns: mode.columns().iter().map(|c| c.to_string()).collect(),
            summary: Summary {
                rows: rows.len(),
                failures,
                max_violation,
                passed: failures == 0,
            },
            rows,
            notes,
            provenance,
            runtime,
        }
    }

    pub fn passed(&self) -> bool {
        self.summary.passed
    }
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let provenance = Provenance {
        config_hash: cfg.hash(),
        seed: cfg.seed,
    };
    let (rows, notes) = match cfg.mode {
        Mode::AfConvergence => run_convergence(cfg)?,
        Mode::AfCertificates => run_certificates(cfg)?,
        Mode::CommRepair => run_repair(cfg)?,
        Mode::CommBallHaus => run_ball_haus(cfg)?,
        Mode::TripleCheck => run_triples(cfg),
    };
    Ok(Report::assemble(cfg.mode, rows, notes, provenance, start.elapsed()))
}

type Rows = (Vec<Row>, Vec<String>);

fn ideal_label(c: &IdealConfig) -> String {
    let parts: Vec<String> = c.top_support.iter().map(|b| b.to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

fn run_convergence(cfg: &ExperimentConfig) -> Result<Rows> {
    let t = cfg.tower()?;
    let beta = cfg.beta(&t)?;
    let limit = IdealSupport::from_config(&t, cfg.limit.as_ref().expect("validated"))?;
    let seq: Vec<IdealSupport> = cfg
        .ideals
        .iter()
        .map(|c| IdealSupport::from_config(&t, c))
        .collect::<Result<_>>()?;
    let table = ideals::fell_to_propinquity_table(&beta, &seq, &limit)?;
    let mut notes = vec!["surrogate_distance is a surrogate for the Fell topology, not a metric for it".to_string()];
    let mut rows = Vec::with_capacity(table.len());
    let mut prev: Option<(usize, f64)> = None;
    for r in table {
        // the bound must not grow as the agreement level grows
        let mut violation = 0.0_f64;
        if let (Some((pn, pb)), Some(n), Some(b)) = (prev, r.agreement_level, r.bound) {
            if n >= pn {
                violation = b - pb;
            }
        }
        if let (Some(n), Some(b)) = (r.agreement_level, r.bound) {
            if prev.is_none_or(|(pn, _)| n >= pn) {
                prev = Some((n, b));
            }
        }
        if let Some(note) = &r.note {
            notes.push(format!("row {}: {note}", r.k));
        }
        rows.push(Row {
            values: vec![
                Value::from(r.k),
                r.agreement_level.map_or(Value::Null, Value::from),
                opt(r.beta_n),
                opt(r.x_n),
                opt(r.bound),
                num(r.surrogate_distance),
            ],
            violation,
            passed: violation <= 0.0,
        });
    }
    Ok((rows, notes))
}

fn run_certificates(cfg: &ExperimentConfig) -> Result<Rows> {
    let t = cfg.tower()?;
    let beta = cfg.beta(&t)?;
    let m = t.top_level();
    let levels: Vec<usize> = cfg.levels.clone().unwrap_or_else(|| (1..m).collect());
    let mut rows = Vec::new();
    for (idx, ic) in cfg.ideals.iter().enumerate() {
        let ideal = IdealSupport::from_config(&t, ic)?;
        let seed = cfg.seed.wrapping_add(idx as u64);
        let top = ideals::ball_sample(&ideal, &beta, m, cfg.samples, seed)?;
        for &n in &levels {
            let certs: Vec<ideals::Certificate> = top
                .par_iter()
                .map(|b| ideals::recover_certificate(&ideal, &beta, b, n))
                .collect::<Result<_>>()?;
            let failures = certs.iter().filter(|c| !c.passed()).count();
            let max_distance = certs.iter().map(|c| c.distance).fold(0.0, f64::max);
            let slice = ideals::ball_sample(&ideal, &beta, n, cfg.samples, seed)?;
            let bridge = ideals::imprint_estimate(&ideal, &beta, n, &slice, &top)?;
            let xf = xn_factors(&beta, n)?;
            let bound = (xf.x - 1.0) + 2.0 * beta.get(n)?;
            let violation = (max_distance - bound - ideals::CERTIFICATE_TOL)
                .max(bridge.imprint_estimate - bridge.imprint_bound - ideals::IMPRINT_TOL);
            let passed = failures == 0 && bridge.passed() && violation <= 0.0;
            rows.push(Row {
                values: vec![
                    Value::from(ideal_label(ic)),
                    Value::from(n),
                    Value::from(top.len()),
                    num(xf.x),
                    num(beta.get(n)?),
                    num(max_distance),
                    num(bound),
                    num(bridge.imprint_estimate),
                    num(bridge.imprint_bound),
                    Value::from(failures),
                    Value::from(passed),
                ],
                violation,
                passed,
            });
        }
    }
    Ok((rows, Vec::new()))
}

/// One random repair instance: space, ε, `F_n`, `F` and `f`.
pub fn repair_instance(
    fixed: Option<&FiniteMetricSpace>,
    max_points: usize,
    seed: u64,
    trial: usize,
) -> (FiniteMetricSpace, f64, BTreeSet<usize>, BTreeSet<usize>, commutative::LipFunction) {
    use rand::Rng;
    let mut rng = stream_rng(seed, "comm_repair", trial as u64);
    let x = match fixed {
        Some(s) => s.clone(),
        None => {
            let n = rng.random_range(2..=max_points.max(2));
            commutative::random_space(n, &mut rng)
        }
    };
    let eps = 10f64.powf(rng.random_range(-1.5..-0.001));
    let (f_n, f) = commutative::random_subset_pair(&x, eps, &mut rng);
    let func = commutative::random_ball_function(&x, &f_n, &mut rng);
    (x, eps, f_n, f, func)
}

fn run_repair(cfg: &ExperimentConfig) -> Result<Rows> {
    let fixed = cfg.space()?;
    let rows = (0..cfg.trials)
        .into_par_iter()
        .map(|k| {
            let (x, eps, f_n, f, func) = repair_instance(fixed.as_ref(), cfg.max_points, cfg.seed, k);
            let out = commutative::repair(&x, &f_n, &f, &func, eps)?;
            let c = &out.certificate;
            let passed = c.passed();
            Ok(Row {
                values: vec![
                    Value::from(k),
                    Value::from(x.len()),
                    num(out.epsilon),
                    num(out.hausdorff),
                    num(c.sup_error),
                    num(c.error_bound),
                    num(c.lip_re),
                    num(c.lip_im),
                    num(c.sup_norm),
                    num(c.vanishing),
                    Value::from(passed),
                ],
                violation: c.sup_error - c.error_bound,
                passed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, Vec::new()))
}

/// Random space and subset pair for the ball Hausdorff sweep.
pub fn ball_fixture(max_points: usize, seed: u64, index: usize) -> (FiniteMetricSpace, BTreeSet<usize>, BTreeSet<usize>) {
    use rand::Rng;
    let mut rng = stream_rng(seed, "comm_ball_haus/fixture", index as u64);
    let n = rng.random_range(2..=max_points.max(2));
    let x = commutative::random_space(n, &mut rng);
    // log-uniform ε so that 8√H < 1 occurs often
    let eps = 10f64.powf(rng.random_range(-1.5..-0.001));
    let (a, b) = commutative::random_subset_pair(&x, eps, &mut rng);
    (x, a, b)
}

fn run_ball_haus(cfg: &ExperimentConfig) -> Result<Rows> {
    let fixtures: Vec<(String, FiniteMetricSpace, BTreeSet<usize>, BTreeSet<usize>)> = match cfg.space()? {
        Some(x) => cfg
            .subsets
            .iter()
            .map(|(a, b)| {
                Ok((
                    format!("[{}] vs [{}]", a.join(","), b.join(",")),
                    x.clone(),
                    x.subset(a)?,
                    x.subset(b)?,
                ))
            })
            .collect::<Result<_>>()?,
        None => (0..cfg.trials)
            .map(|k| {
                let (x, a, b) = ball_fixture(cfg.max_points, cfg.seed, k);
                (format!("random {k}"), x, a, b)
            })
            .collect(),
    };
    let rows = fixtures
        .iter()
        .enumerate()
        .map(|(k, (label, x, a, b))| {
            let seed = crate::rng::stream_seed(cfg.seed, "comm_ball_haus/candidates", k as u64);
            let r = commutative::ball_hausdorff(x, a, b, cfg.samples, seed, cfg.tol)?;
            Ok(Row {
                values: vec![
                    Value::from(label.clone()),
                    Value::from(x.len()),
                    num(r.hausdorff_sets),
                    num(r.estimate),
                    num(r.bound),
                    Value::from(r.passed),
                ],
                violation: r.estimate - r.bound - cfg.tol,
                passed: r.passed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, vec!["estimates are sampled lower bounds of the true ball distance".to_string()]))
}

fn run_triples(cfg: &ExperimentConfig) -> Rows {
    let cases = match cfg.triple {
        Some(c) => vec![AdmissibleTriple { case: c }],
        None => vec![AdmissibleTriple::AF, AdmissibleTriple::COMMUTATIVE],
    };
    let rows = cases
        .into_iter()
        .flat_map(|t| check_triple(t, cfg.samples, cfg.seed))
        .map(|tally| {
            let passed = tally.failures == 0;
            let case = match tally.case {
                TripleCase::Af => "af",
                TripleCase::Commutative => "commutative",
            };
            Row {
                values: vec![
                    Value::from(case),
                    Value::from(tally.inequality),
                    Value::from(tally.tuples),
                    Value::from(tally.failures),
                    num(tally.min_slack),
                    num(0.0),
                    Value::from(passed),
                ],
                violation: -tally.min_slack,
                passed,
            }
        })
        .collect();
    (rows, Vec::new())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

fn csv_field(v: &Value) -> String {
    let raw = match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    if raw.contains([',', '"', '\n']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw
    }
}

/// Renders a report; identical reports give identical bytes.
pub fn render_report(r: &Report, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(r)?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut s = r.columns.join(",");
            s.push('\n');
            for row in &r.rows {
                let cells: Vec<String> = row.values.iter().map(csv_field).collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
            Ok(s)
        }
    }
}

pub fn emit_report(r: &Report, format: Format, path: &Path) -> Result<()> {
    std::fs::write(path, render_report(r, format)?)?;
    Ok(())
}

/// `$FELLPROP_OUT_DIR/<mode>.<ext>`, or the working directory if unset.
pub fn default_output_path(mode: Mode, format: Format) -> PathBuf {
    let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_default();
    dir.join(format!("{}.{}", mode.name(), format.extension()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn named(mode: Mode, tower: &str) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(mode);
        c.tower = Some(TowerRef::Named(tower.into()));
        c
    }

    #[test]
    fn missing_tower_is_named() {
        let mut c = ExperimentConfig::new(Mode::AfCertificates);
        c.ideals = vec![IdealConfig { top_support: vec![0] }];
        match run_experiment(&c) {
            Err(Error::Config(p)) => assert!(p.iter().any(|m| m.starts_with("tower:")), "{p:?}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn config_parses_from_json() {
        let c = ExperimentConfig::from_json(
            r#"{"mode":"af_convergence","tower":"ladder4","limit":{"top_support":[1]},
                "ideals":[{"top_support":[1,2]},{"top_support":[1]}],"seed":3}"#,
        )
        .unwrap();
        assert_eq!(c.mode, Mode::AfConvergence);
        assert!(c.validate().is_ok());
        assert!(ExperimentConfig::from_json(r#"{"mode":"af_convergence","bogus":1}"#).is_err());
        assert_eq!(c.hash(), c.clone().hash());
    }

    #[test]
    fn convergence_report() {
        let mut c = named(Mode::AfConvergence, "ladder4");
        c.limit = Some(IdealConfig { top_support: vec![1] });
        c.ideals = [vec![1, 2], vec![1, 3], vec![1, 4], vec![1]]
            .into_iter()
            .map(|s| IdealConfig { top_support: s })
            .collect();
        let r = run_experiment(&c).unwrap();
        assert!(r.passed());
        assert_eq!(r.columns, ["k", "N_k", "beta_N", "x_N", "bound", "surrogate_distance"]);
        let n: Vec<Value> = r.rows.iter().map(|row| row.values[1].clone()).collect();
        assert_eq!(n, vec![Value::from(1), Value::from(2), Value::from(3), Value::from(4)]);
    }

    #[test]
    fn triple_report() {
        let mut c = ExperimentConfig::new(Mode::TripleCheck);
        c.samples = 500;
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.rows.len(), 12);
        assert!(r.passed());
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = Report::empty(
            Mode::AfConvergence,
            Provenance {
                config_hash: String::new(),
                seed: 0,
            },
        );
        assert_eq!(render_report(&r, Format::Csv).unwrap(), "k,N_k,beta_N,x_N,bound,surrogate_distance\n");
        assert_eq!(r.summary.max_violation, None);
    }

    #[test]
    fn csv_quotes_commas() {
        assert_eq!(csv_field(&Value::from("{0,1}")), "\"{0,1}\"");
        assert_eq!(csv_field(&Value::Null), "");
        assert_eq!(csv_field(&Value::from(0.5)), "0.5");
    }

    #[test]
    fn small_runs_are_deterministic() {
        let mut c = ExperimentConfig::new(Mode::CommRepair);
        c.trials = 10;
        c.seed = 5;
        let a = render_report(&run_experiment(&c).unwrap(), Format::Json).unwrap();
        let b = render_report(&run_experiment(&c).unwrap(), Format::Json).unwrap();
        assert_eq!(a, b);
        assert!(!a.contains("runtime"));
    }
}
