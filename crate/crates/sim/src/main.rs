use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use matchlab::io::{load_market, LoadError};
use matchlab::theory::{self, TheoryError};
use matchlab::{run_mechanism, MechanismError, MechanismKind, Seed};
use matchlab_sim::config::{parse_config, parse_mechanisms, parse_thresholds, ConfigFile};
use matchlab_sim::{
    run_experiment, ExperimentConfig, ExperimentError, ManipulationKind, ManipulationSpec,
    MarketSource, Threshold,
};

#[derive(Parser)]
#[command(
    name = "matchlab",
    version,
    about = "School-choice mechanism experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replicated runs on uniform random markets (or a fixed market file).
    Simulate(SimulateArgs),
    /// Per-student placements and ranks for one market file.
    Evaluate(EvaluateArgs),
    /// RM under Drop-Assigned / Drop-First manipulation, next to truthful runs.
    Manipulate(ManipulateArgs),
    /// Closed-form reference values.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct Common {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of RM,TTC,DA,RSD.
    #[arg(long)]
    mechanisms: Option<String>,
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Market size (students = schools).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    /// Rank cutoffs, e.g. `1,2,logn,0.1n`.
    #[arg(long)]
    thresholds: Option<String>,
    /// Use this market in every replication instead of uniform draws.
    #[arg(long)]
    market: Option<PathBuf>,
    /// key = value file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    market: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ManipulateArgs {
    /// DropAssigned, DropFirst, or both (comma-separated).
    #[arg(long, default_value = "DropAssigned,DropFirst")]
    kind: String,
    #[arg(long, default_value = "0,0.2,0.4,0.6,0.8")]
    shares: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    thresholds: Option<String>,
    #[arg(long)]
    market: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct OracleArgs {
    /// One of: rsd_envy, rsd_envy_closed, ttc_envy, rm_envy, ttc_avg_rank,
    /// rm_pmf, rsd_table, reference, limits.
    #[arg(long)]
    check: String,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Exit 2 for bad input, 1 for failures while running.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Failure {
            code: 2,
            message: message.to_string(),
        }
    }
    fn runtime(message: impl ToString) -> Self {
        Failure {
            code: 1,
            message: message.to_string(),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        if e.is_validation() {
            Failure::usage(e)
        } else {
            Failure::runtime(e)
        }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Io { .. } => Failure::runtime(e),
            _ => Failure::usage(e),
        }
    }
}

impl From<MechanismError> for Failure {
    fn from(e: MechanismError) -> Self {
        match e {
            MechanismError::Model(_) => Failure::usage(e),
            MechanismError::Solver(_) => Failure::runtime(e),
        }
    }
}

impl From<TheoryError> for Failure {
    fn from(e: TheoryError) -> Self {
        Failure::usage(e)
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text)
            .map_err(|e| Failure::runtime(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(Failure::runtime),
    }
}

fn read_config(path: Option<&Path>) -> Result<ConfigFile, Failure> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::runtime(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(Failure::usage)
}

struct ExperimentFlags<'a> {
    n: Option<usize>,
    reps: Option<usize>,
    thresholds: Option<&'a str>,
    market: Option<&'a Path>,
    config: Option<&'a Path>,
    common: &'a Common,
}

fn build_config(f: ExperimentFlags) -> Result<(ExperimentConfig, ConfigFile), Failure> {
    let file = read_config(f.config)?;
    let mechanisms = match f.common.mechanisms.as_deref() {
        Some(list) => parse_mechanisms(list).map_err(Failure::usage)?,
        None => file
            .mechanisms
            .clone()
            .unwrap_or_else(|| vec![MechanismKind::Rm, MechanismKind::Ttc, MechanismKind::Da]),
    };
    let thresholds = match f.thresholds {
        Some(list) => parse_thresholds(list).map_err(Failure::usage)?,
        None => file.thresholds.clone().unwrap_or_else(Threshold::defaults),
    };
    let market_path = f
        .market
        .map(Path::to_path_buf)
        .or_else(|| file.market.clone());
    let market = match market_path {
        Some(p) => MarketSource::Fixed(load_market(p)?),
        None => MarketSource::Uniform(f.n.or(file.n).unwrap_or(100)),
    };
    let cfg = ExperimentConfig {
        market,
        replications: f.reps.or(file.replications).unwrap_or(1000),
        master_seed: Seed(f.common.seed.or(file.seed).unwrap_or(0)),
        mechanisms,
        thresholds,
        manipulation: None,
    };
    Ok((cfg, file))
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let (mut cfg, file) = build_config(ExperimentFlags {
        n: a.n,
        reps: a.reps,
        thresholds: a.thresholds.as_deref(),
        market: a.market.as_deref(),
        config: a.config.as_deref(),
        common: &a.common,
    })?;
    if let Some(kind) = file.manipulation {
        cfg.manipulation = Some(ManipulationSpec {
            kind,
            share: file.share.unwrap_or(0.0),
        });
    }
    let report = run_experiment(&cfg)?;
    emit(a.common.out.as_deref(), &report.to_csv())
}

fn evaluate(a: EvaluateArgs) -> Result<(), Failure> {
    let market = load_market(&a.market)?;
    let mechanisms = match a.common.mechanisms.as_deref() {
        Some(list) => parse_mechanisms(list).map_err(Failure::usage)?,
        None => MechanismKind::ALL.to_vec(),
    };
    let seed = Seed(a.common.seed.unwrap_or(0));
    let mut out = String::from("mechanism,student,school,rank\n");
    for kind in mechanisms {
        let alloc = run_mechanism(kind, &market, seed)?;
        let ranks = alloc.ranks(&market).map_err(Failure::runtime)?;
        for (t, s) in alloc.iter() {
            let school = s
                .map(|s| market.school_label(s).to_string())
                .unwrap_or_default();
            out.push_str(&format!(
                "{kind},{},{school},{}\n",
                market.student_label(t),
                ranks[t.index()]
            ));
        }
    }
    emit(a.common.out.as_deref(), &out)
}

fn manipulate(a: ManipulateArgs) -> Result<(), Failure> {
    let kinds = a
        .kind
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<ManipulationKind>().map_err(Failure::usage))
        .collect::<Result<Vec<_>, _>>()?;
    let shares = a
        .shares
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Failure::usage(format!("bad share {s:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if kinds.is_empty() || shares.is_empty() {
        return Err(Failure::usage(
            "need at least one manipulation kind and one share",
        ));
    }
    let (base, _) = build_config(ExperimentFlags {
        n: a.n,
        reps: a.reps,
        thresholds: a.thresholds.as_deref(),
        market: a.market.as_deref(),
        config: a.config.as_deref(),
        common: &a.common,
    })?;

    // truthful rows repeat across runs; keep the first copy
    let mut out = String::new();
    let mut seen: Vec<String> = Vec::new();
    for &kind in &kinds {
        for &share in &shares {
            let cfg = ExperimentConfig {
                manipulation: Some(ManipulationSpec { kind, share }),
                ..base.clone()
            };
            let csv = run_experiment(&cfg)?.to_csv();
            let mut lines = csv.lines();
            let header = lines.next().unwrap_or_default();
            if out.is_empty() {
                out.push_str(header);
                out.push('\n');
            }
            for line in lines {
                let label = line.split(',').next().unwrap_or_default();
                let key = format!("{label}|{}", line.rsplit(',').nth(1).unwrap_or_default());
                if !seen.contains(&key) {
                    seen.push(key);
                    out.push_str(line);
                    out.push('\n');
                }
            }
        }
    }
    emit(a.common.out.as_deref(), &out)
}

fn oracle(a: OracleArgs) -> Result<(), Failure> {
    let n = a.n;
    let mut rows: Vec<(String, f64, String)> = Vec::new();
    let mut push = |key: String, value: f64, note: &str| rows.push((key, value, note.to_string()));
    match a.check.as_str() {
        "rsd_envy" => {
            let v = theory::rsd_no_envy_fraction::<f64>(n)?;
            push(String::new(), v.value, v.provenance);
        }
        "rsd_envy_closed" => {
            let v = theory::rsd_no_envy_fraction_closed_form::<f64>(n)?;
            push(String::new(), v.value, v.provenance);
        }
        "ttc_envy" => {
            let v = theory::rsd_no_envy_fraction::<f64>(n)?;
            push(
                String::new(),
                1.0 - v.value,
                "one minus the RSD no-envy fraction",
            );
        }
        "rm_envy" => {
            push(
                String::new(),
                theory::rm_envy_partial::<f64>(n as u32),
                "RM envy share with ranks truncated at n",
            );
        }
        "ttc_avg_rank" => {
            let v = theory::ttc_expected_avg_rank::<f64>(n)?;
            push(String::new(), v.value, v.provenance);
        }
        "rm_pmf" => {
            for i in 1..=n as u32 {
                push(i.to_string(), theory::rm_rank_pmf::<f64>(i)?, "2^-i");
            }
        }
        "rsd_table" => {
            if n == 0 {
                return Err(TheoryError::TooSmall { n, min: 1 }.into());
            }
            for (k, row) in theory::rsd_rank_table::<f64>(n).iter().enumerate() {
                for (j, p) in row.iter().enumerate() {
                    push(format!("{}:{}", k + 1, j + 1), *p, "p(k,j)");
                }
            }
        }
        "reference" => {
            let curves = theory::reference_curves::<f64>(n)?;
            for (kind, c) in &curves.curves {
                push(format!("{kind}.avg"), c.avg.value, c.avg.provenance);
                if let Some(v) = c.avg_lower {
                    push(format!("{kind}.avg_lower"), v.value, v.provenance);
                }
                push(format!("{kind}.max"), c.max.value, c.max.provenance);
                if let Some(v) = c.max_observed {
                    push(format!("{kind}.max_observed"), v.value, v.provenance);
                }
            }
        }
        "limits" => {
            let v = theory::rsd_no_envy_limit::<f64>();
            push("rsd_no_envy".into(), v.value, v.provenance);
            let v = theory::ttc_envy_limit::<f64>();
            push("ttc_envy".into(), v.value, v.provenance);
            let v = theory::rm_envy_limit::<f64>();
            push("rm_envy".into(), v.value, v.provenance);
        }
        other => return Err(Failure::usage(format!("unknown check {other:?}"))),
    }
    let mut out = String::from("check,n,key,value,note\n");
    for (key, value, note) in rows {
        out.push_str(&format!(
            "{},{n},{key},{value:.12},\"{}\"\n",
            a.check,
            note.replace('"', "'")
        ));
    }
    emit(a.out.as_deref(), &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Manipulate(a) => manipulate(a),
        Command::Oracle(a) => oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
