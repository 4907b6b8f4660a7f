//! `dwalk`: command-line front end for the decoupled-walk library.

use clap::{Args, Parser, Subcommand, ValueEnum};
use decoupled_walk::asymptotics::{theoretical_limit, HoleCase, HoleOptions};
use decoupled_walk::dist::IncrementLaw;
use decoupled_walk::experiments::{self, ExperimentConfig, ExperimentKind, ExperimentReport, DEFAULT_SEED};
use decoupled_walk::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const LAW_HELP: &str = "increment law as family:params, one of exp:RATE, gamma:SHAPE,RATE, pareto:ALPHA,XM, weibull:ALPHA,C";

#[derive(Parser, Debug)]
#[command(name = "dwalk", version, about = "Decoupled standard random walks: exact evaluation, simulation and limit constants")]
struct Cli {
    /// Worker threads for experiments (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Limit constant of the hole probability for a law and regime.
    Constants {
        #[arg(long, help = LAW_HELP)]
        law: IncrementLaw,
        /// min-a, min-b1, min-b2, heavy-a, heavy-b or semi (default: the law's regime).
        #[arg(long)]
        case: Option<HoleCase>,
        /// Monte Carlo draws for the heavy-a constant.
        #[arg(long, default_value_t = 200_000)]
        reps: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Normalized hole-probability curve Λ(t)/norm(t).
    Hole {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        case: Option<HoleCase>,
        /// Lattice cells per level (h = t / cells).
        #[arg(long)]
        cells: Option<usize>,
    },
    /// Functional limit checks: marginal CLT, or covariances with --covariance.
    Flt {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        covariance: bool,
        /// Lags u of the covariance check, comma separated.
        #[arg(long, value_delimiter = ',')]
        u: Option<Vec<f64>>,
    },
    /// Maxima M_n/n and passage times τ̂(t)/t.
    Slln {
        #[command(flatten)]
        common: Common,
        /// Indices n, comma separated.
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<u64>>,
    },
    /// Var N̂(t) against its asymptote.
    Variance {
        #[command(flatten)]
        common: Common,
    },
    /// P{ξ>t}·τ(t) against Mittag-Leffler draws.
    InverseStable {
        #[command(flatten)]
        common: Common,
    },
    /// Fast identities, bracket checks and determinism.
    Validate {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Perturb the expected value of the named check (tests the failure path).
        #[arg(long, hide = true)]
        corrupt: Option<String>,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, help = LAW_HELP, required_unless_present = "config")]
    law: Option<IncrementLaw>,
    /// Levels t, comma separated.
    #[arg(long, value_delimiter = ',')]
    t: Option<Vec<f64>>,
    /// Replications (at least 100).
    #[arg(long, value_parser = clap::value_parser!(u64).range(100..))]
    reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Total-variation budget of truncated samplers, in (0, 1e-3].
    #[arg(long)]
    eps: Option<f64>,
    /// Read the whole configuration from a JSON file.
    #[arg(long, conflicts_with_all = ["law", "t", "reps", "seed", "eps"])]
    config: Option<PathBuf>,
    /// Also write the effective configuration to this file.
    #[arg(long)]
    write_config: Option<PathBuf>,
    /// Output directory for the report and configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, Failure> {
    let threads = cli.threads;
    match cli.command {
        Command::Constants { law, case, reps, seed, format } => constants(&law, case, reps, seed, format),
        Command::Validate { seed, corrupt } => {
            let s = experiments::validate(seed, corrupt.as_deref())?;
            print!("{}", s.render());
            if s.all_pass() {
                Ok(0)
            } else {
                eprintln!("failed checks: {}", s.failures().join("; "));
                Ok(1)
            }
        }
        Command::Hole { common, case, cells } => {
            let mut cfg = config(&common, ExperimentKind::HoleCurve)?;
            if case.is_some() {
                cfg.case = case;
            }
            if cells.is_some() {
                cfg.cells = cells;
            }
            execute(cfg, &common, threads)
        }
        Command::Flt { common, covariance, u } => {
            let kind = if covariance { ExperimentKind::FltCovariance } else { ExperimentKind::FltMarginal };
            let mut cfg = config(&common, kind)?;
            if let Some(u) = u {
                cfg.u_grid = u;
            }
            execute(cfg, &common, threads)
        }
        Command::Slln { common, n } => {
            let mut cfg = config(&common, ExperimentKind::Slln)?;
            if let Some(n) = n {
                cfg.n_grid = n;
            }
            execute(cfg, &common, threads)
        }
        Command::Variance { common } => execute(config(&common, ExperimentKind::VarianceCurve)?, &common, threads),
        Command::InverseStable { common } => execute(config(&common, ExperimentKind::InverseStable)?, &common, threads),
    }
}

/// Value rounded to 12 significant digits, so `0.8999999999999999` prints as `0.9`.
fn display(v: f64) -> f64 {
    format!("{v:.11e}").parse().unwrap_or(v)
}

fn constants(law: &IncrementLaw, case: Option<HoleCase>, reps: usize, seed: u64, format: Format) -> Result<u8, Failure> {
    let case = match case.or_else(|| HoleCase::for_law(law)) {
        Some(c) => c,
        None => return Err(Failure::Usage(format!("--law {law}: no hole regime applies; pass --case"))),
    };
    let opts = HoleOptions { heavy_a_reps: reps, seed, ..HoleOptions::default() };
    let (value, se) = theoretical_limit(law, case, &opts)?;
    match format {
        Format::Json => {
            let v = serde_json::json!({
                "law": law.to_string(),
                "case": case.tag(),
                "value": display(value),
                "stderr": se,
                "reference": case.reference(),
            });
            println!("{}", serde_json::to_string_pretty(&v).expect("json"));
        }
        Format::Csv => {
            println!("law,case,value,stderr");
            println!("{law},{},{},{}", case.tag(), display(value), se.map_or(String::new(), |s| s.to_string()));
        }
        Format::Text => {
            match se {
                Some(s) => println!("{} ± {}", display(value), s),
                None => println!("{}", display(value)),
            }
            println!("case {}: {}", case.tag(), case.reference());
        }
    }
    Ok(0)
}

fn config(common: &Common, kind: ExperimentKind) -> Result<ExperimentConfig, Failure> {
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("--config {}: {e}", path.display())))?;
        let cfg = ExperimentConfig::from_json(&text).map_err(|e| Failure::Usage(format!("--config {}: {e}", path.display())))?;
        if cfg.experiment != kind {
            return Err(Failure::Usage(format!(
                "--config {}: describes '{}', not '{}'",
                path.display(),
                cfg.experiment,
                kind
            )));
        }
        return Ok(cfg);
    }
    let law = common.law.expect("clap enforces --law without --config");
    let mut cfg = ExperimentConfig::new(kind, law);
    if let Some(t) = &common.t {
        cfg.t = t.clone();
    }
    if let Some(r) = common.reps {
        cfg.reps = r as usize;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(e) = common.eps {
        if !(e > 0.0 && e <= 1e-3) {
            return Err(Failure::Usage(format!("--eps {e}: must lie in (0, 1e-3]")));
        }
        cfg.eps = e;
    }
    cfg.output = common.out.as_ref().map(|p| p.display().to_string());
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn execute(cfg: ExperimentConfig, common: &Common, threads: usize) -> Result<u8, Failure> {
    if let Some(p) = &common.write_config {
        write_atomic(p, &cfg.to_json())?;
    }
    let report = experiments::run_with_threads(&cfg, threads)?;
    print_summary(&report, common.format);
    let out = common.out.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from));
    if let Some(dir) = &out {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let stem = cfg.experiment.tag();
        write_atomic(&dir.join(format!("{stem}.config.json")), &cfg.to_json())?;
        match common.format {
            Format::Csv => write_atomic(&dir.join(format!("{stem}.csv")), &report.series.to_csv())?,
            _ => write_atomic(&dir.join(format!("{stem}.json")), &report.to_json())?,
        }
    }
    Ok(0)
}

fn print_summary(r: &ExperimentReport, format: Format) {
    if format == Format::Csv && r.config.output.is_none() {
        print!("{}", r.series.to_csv());
        return;
    }
    println!("{} {} (seed {}, {} reps)", r.config.experiment, r.config.law, r.config.seed, r.config.reps);
    for e in &r.estimates {
        let mut line = format!("  {:<36} {:>16.8}", e.name, e.value);
        if let Some(s) = e.stderr {
            line += &format!(" ± {s:.2e}");
        }
        if let Some(t) = e.theory {
            line += &format!("   theory {t:.8}");
        }
        println!("{line}");
    }
    for t in &r.tests {
        let band = |b: Option<f64>, inf: &str| b.map_or(inf.to_string(), |v| v.to_string());
        println!(
            "  {} {:<34} {:.6} in [{}, {}]",
            if t.pass { "PASS" } else { "FAIL" },
            t.name,
            t.statistic,
            band(t.band.0, "-inf"),
            band(t.band.1, "inf")
        );
    }
    for n in &r.notes {
        println!("  note: {n}");
    }
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    std::fs::write(&tmp, contents).map_err(|e| Error::Io(format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}
