use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fellprop::algebra::Element;
use fellprop::fixtures;
use fellprop::harness::{self, ExperimentConfig, Format, Mode, Report, SpaceRef, TowerRef};
use fellprop::ideals::IdealConfig;
use fellprop::quantum_metric::{l_seminorm_terms, xn_factors, TripleCase};
use fellprop::rng::stream_rng;
use fellprop::tower::{validate_tower, BetaSequence, BratteliTower, TowerConfig};

#[derive(Parser)]
#[command(name = "fellprop", version, about = "Quantum-metric certificates for ideals of AF towers and C(X)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Root seed for all random streams.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sample count (ball samples, candidates, or tuples).
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Numerical tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
    /// Report destination; defaults to $FELLPROP_OUT_DIR/<mode>.<ext> if that
    /// variable is set, else standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Json => Format::Json,
            OutFormat::Csv => Format::Csv,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Bratteli tower checks.
    #[command(subcommand)]
    Tower(TowerCmd),
    /// AF tower quantities and suites.
    #[command(subcommand)]
    Af(AfCmd),
    /// Suites on finite metric spaces.
    #[command(subcommand)]
    Comm(CommCmd),
    /// Admissible triple inequalities.
    #[command(subcommand)]
    Triples(TriplesCmd),
    /// Run an experiment config file.
    Run { config: PathBuf },
}

#[derive(Subcommand)]
enum TowerCmd {
    /// Validate a tower given by fixture name or JSON file.
    Validate { tower: String },
}

#[derive(Subcommand)]
enum AfCmd {
    /// L-seminorm of an element (JSON file) or of a random top-level element.
    Lseminorm {
        #[arg(long)]
        tower: String,
        #[arg(long)]
        element: Option<PathBuf>,
        /// Comma-separated β values; default 1/n!.
        #[arg(long)]
        beta: Option<String>,
    },
    /// x'_n, x_n and max{β(n), x_n − 1} for n = 1..=levels.
    Bound {
        #[arg(long, default_value_t = 10)]
        levels: usize,
        #[arg(long)]
        beta: Option<String>,
    },
    /// Recovery certificates and imprint estimates.
    Certify {
        #[arg(long)]
        tower: String,
        /// Top-level support, comma separated; repeatable. Empty for the zero ideal.
        #[arg(long = "ideal", required = true)]
        ideals: Vec<String>,
        #[arg(long = "level")]
        levels: Vec<usize>,
        #[arg(long)]
        beta: Option<String>,
    },
    /// Convergence table for a sequence of ideals against a limit.
    Converge {
        #[arg(long)]
        tower: String,
        #[arg(long)]
        limit: String,
        #[arg(long = "ideal", required = true)]
        ideals: Vec<String>,
        #[arg(long)]
        beta: Option<String>,
    },
}

#[derive(Subcommand)]
enum CommCmd {
    /// Random ε-repair trials.
    Repair {
        #[arg(long)]
        space: Option<String>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 12)]
        max_points: usize,
    },
    /// Hausdorff distance between ideal unit balls.
    BallHaus {
        #[arg(long)]
        space: Option<String>,
        /// Subset pair as `a,b|c` (labels); repeatable.
        #[arg(long = "pair")]
        pairs: Vec<String>,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, default_value_t = 8)]
        max_points: usize,
    },
}

#[derive(Subcommand)]
enum TriplesCmd {
    Check {
        #[arg(long, value_enum)]
        case: Option<CaseArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    Af,
    Commutative,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn tower_config(arg: &str) -> Result<TowerConfig> {
    if let Some(c) = fixtures::tower_config_by_name(arg) {
        return Ok(c);
    }
    let text = std::fs::read_to_string(arg)
        .with_context(|| format!("{arg:?} is neither a tower fixture ({}) nor a readable file", fixtures::TOWER_NAMES.join(", ")))?;
    Ok(serde_json::from_str(&text)?)
}

fn tower_ref(arg: &str) -> Result<TowerRef> {
    if fixtures::tower_config_by_name(arg).is_some() {
        Ok(TowerRef::Named(arg.to_string()))
    } else {
        Ok(TowerRef::Inline(tower_config(arg)?))
    }
}

fn space_ref(arg: &str) -> Result<SpaceRef> {
    if fixtures::space_by_name(arg).is_some() {
        return Ok(SpaceRef::Named(arg.to_string()));
    }
    let text = std::fs::read_to_string(arg).with_context(|| format!("reading space {arg:?}"))?;
    Ok(SpaceRef::Inline(serde_json::from_str(&text)?))
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|e| anyhow::anyhow!("bad list entry {p:?}: {e}")))
        .collect()
}

fn ideal(s: &str) -> Result<IdealConfig> {
    Ok(IdealConfig { top_support: parse_list(s)? })
}

fn labels(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(String::from).collect()
}

fn apply_globals(cfg: &mut ExperimentConfig, g: &Global) {
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(n) = g.samples {
        cfg.samples = n;
    }
    if let Some(t) = g.tol {
        cfg.tol = t;
    }
}

fn write_output(text: &str, mode: Option<Mode>, g: &Global) -> Result<()> {
    let format = Format::from(g.format);
    let path = match (&g.out, mode) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(m)) if std::env::var_os(harness::OUT_DIR_ENV).is_some() => Some(harness::default_output_path(m, format)),
        _ => None,
    };
    match path {
        Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit(report: &Report, g: &Global) -> Result<bool> {
    let text = harness::render_report(report, g.format.into())?;
    write_output(&text, Some(report.mode), g)?;
    eprintln!(
        "{}: {} rows, {} failures, {:.2}s",
        report.mode.name(),
        report.summary.rows,
        report.summary.failures,
        report.runtime.as_secs_f64()
    );
    Ok(report.passed())
}

fn run(cfg: ExperimentConfig, g: &Global) -> Result<bool> {
    let report = harness::run_experiment(&cfg)?;
    emit(&report, g)
}

fn json_out(value: &serde_json::Value, g: &Global) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_output(&text, None, g)
}

fn beta_for(beta: &Option<String>, len: usize) -> Result<BetaSequence> {
    match beta {
        Some(s) => Ok(BetaSequence::new(parse_list(s)?)?),
        None => Ok(BetaSequence::factorial(len)),
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    let g = &cli.global;
    match cli.command {
        Command::Tower(TowerCmd::Validate { tower }) => {
            let cfg = tower_config(&tower)?;
            let report = validate_tower(&cfg);
            json_out(&serde_json::to_value(&report)?, g)?;
            for c in report.failures() {
                eprintln!("FAIL {} {}: {}", c.name, c.location.as_deref().unwrap_or(""), c.detail);
            }
            Ok(report.passed())
        }
        Command::Af(AfCmd::Lseminorm { tower, element, beta }) => {
            let t = BratteliTower::from_config(&tower_config(&tower)?)?;
            let beta = beta_for(&beta, t.top_level() + 1)?;
            let a = match element {
                Some(p) => read_element(&p)?,
                None => Element::random(t.top_shape(), &mut stream_rng(g.seed.unwrap_or(0), "cli/lseminorm", 0)),
            };
            let terms = l_seminorm_terms(&t, &beta, &a)?;
            let value = terms.iter().copied().fold(0.0, f64::max);
            json_out(&serde_json::json!({ "l_seminorm": value, "terms": terms }), g)?;
            Ok(true)
        }
        Command::Af(AfCmd::Bound { levels, beta }) => {
            let beta = beta_for(&beta, levels + 1)?;
            let rows = (1..=levels)
                .map(|n| xn_factors(&beta, n).map(|x| serde_json::to_value(x).expect("serializable")))
                .collect::<fellprop::Result<Vec<_>>>()?;
            json_out(&serde_json::Value::Array(rows), g)?;
            Ok(true)
        }
        Command::Af(AfCmd::Certify { tower, ideals, levels, beta }) => {
            let mut cfg = ExperimentConfig::new(Mode::AfCertificates);
            cfg.tower = Some(tower_ref(&tower)?);
            cfg.ideals = ideals.iter().map(|s| ideal(s)).collect::<Result<_>>()?;
            cfg.levels = (!levels.is_empty()).then_some(levels);
            cfg.beta = beta.as_deref().map(parse_list).transpose()?;
            apply_globals(&mut cfg, g);
            run(cfg, g)
        }
        Command::Af(AfCmd::Converge { tower, limit, ideals, beta }) => {
            let mut cfg = ExperimentConfig::new(Mode::AfConvergence);
            cfg.tower = Some(tower_ref(&tower)?);
            cfg.limit = Some(ideal(&limit)?);
            cfg.ideals = ideals.iter().map(|s| ideal(s)).collect::<Result<_>>()?;
            cfg.beta = beta.as_deref().map(parse_list).transpose()?;
            apply_globals(&mut cfg, g);
            run(cfg, g)
        }
        Command::Comm(CommCmd::Repair { space, trials, max_points }) => {
            let mut cfg = ExperimentConfig::new(Mode::CommRepair);
            cfg.space = space.as_deref().map(space_ref).transpose()?;
            cfg.trials = trials;
            cfg.max_points = max_points;
            apply_globals(&mut cfg, g);
            run(cfg, g)
        }
        Command::Comm(CommCmd::BallHaus { space, pairs, trials, max_points }) => {
            let mut cfg = ExperimentConfig::new(Mode::CommBallHaus);
            cfg.space = space.as_deref().map(space_ref).transpose()?;
            cfg.subsets = pairs
                .iter()
                .map(|p| match p.split_once('|') {
                    Some((a, b)) => Ok((labels(a), labels(b))),
                    None => bail!("pair {p:?} must look like a,b|c"),
                })
                .collect::<Result<_>>()?;
            cfg.trials = trials;
            cfg.max_points = max_points;
            cfg.samples = g.samples.unwrap_or(20);
            apply_globals(&mut cfg, g);
            run(cfg, g)
        }
        Command::Triples(TriplesCmd::Check { case }) => {
            let mut cfg = ExperimentConfig::new(Mode::TripleCheck);
            cfg.triple = case.map(|c| match c {
                CaseArg::Af => TripleCase::Af,
                CaseArg::Commutative => TripleCase::Commutative,
            });
            cfg.samples = 10_000;
            apply_globals(&mut cfg, g);
            run(cfg, g)
        }
        Command::Run { config } => {
            let mut cfg = ExperimentConfig::from_file(&config).with_context(|| format!("loading {}", config.display()))?;
            apply_globals(&mut cfg, g);
            run(cfg, g)
        }
    }
}

fn read_element(path: &Path) -> Result<Element> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}
