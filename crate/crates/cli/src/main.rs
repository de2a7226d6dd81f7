use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Parser, Subcommand};
use ecrbed::harness::{self, CampaignPlan, CampaignReport, HarnessError};
use ecrbed::scenario::{ConfigError, Profile, Scenario};

#[derive(Parser)]
#[command(name = "ecrbed", version, about = "Access-network test bed and equivalent circuit rate analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Base seed; overrides the configuration file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Parallel runs; defaults to the number of cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Defaults used when no configuration file or template is given.
    #[arg(long, global = true, default_value = "desk")]
    profile: Profile,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario's replications and write measures.csv.
    Run { scenario: Option<PathBuf> },
    /// Run a sweep and its ECR analysis.
    Campaign { plan: PathBuf },
    /// Recompute ECR reports from an existing measures.csv.
    Ecr { plan: PathBuf, measures: PathBuf },
    /// Regenerate the figure files from ecr_report.json.
    Plotdata { report: PathBuf },
    /// Check a scenario or campaign file without running it.
    Validate { config: PathBuf },
    /// Convert a verbose frame trace into the compact CSV format.
    ConvertTrace { input: PathBuf, output: PathBuf },
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Config(anyhow::Error),
    Partial(usize),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn config<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Config(e.into())
}

fn harness_err(e: HarnessError) -> Failure {
    match e {
        HarnessError::Io { .. } => Failure::Other(e.into()),
        _ => Failure::Config(e.into()),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).map_err(Failure::Config)
}

fn load_plan(path: &Path, cli: &Cli) -> Result<CampaignPlan, Failure> {
    let mut plan = CampaignPlan::from_json(&read(path)?).with_context(|| format!("cannot parse {}", path.display())).map_err(Failure::Config)?;
    if plan.template.is_none() && cli.profile != Profile::default() {
        plan.profile = cli.profile;
    }
    if let Some(seed) = cli.seed {
        let mut t = plan.base();
        t.base_seed = seed;
        plan.template = Some(t);
    }
    plan.validate().map_err(harness_err)?;
    Ok(plan)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    harness::write_atomic(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build_global().map_err(|e| Failure::Other(e.into()))?;
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("ecrbed-out"));
    match &cli.command {
        Command::Run { scenario } => {
            let mut s = match scenario {
                Some(p) => Scenario::load(p).map_err(config)?,
                None => Scenario::profile(cli.profile),
            };
            if let Some(seed) = cli.seed {
                s.base_seed = seed;
            }
            let r = harness::run_scenario(&s).map_err(config)?;
            let path = out.join("measures.csv");
            write(&path, &harness::format_rows(&r.rows))?;
            println!("{}: {} rows -> {}", s.config_id(), r.rows.len(), path.display());
            for f in &r.failures {
                eprintln!("failed: {f}");
            }
            if !r.failures.is_empty() {
                return Err(Failure::Partial(r.failures.len()));
            }
        }
        Command::Campaign { plan } => {
            let plan = load_plan(plan, cli)?;
            let o = harness::run_campaign(&plan, &out).map_err(harness_err)?;
            println!("{} cells executed, {} rows, results in {}", o.executed.len(), o.rows.len(), out.display());
            print_summary(&o.report);
            for f in &o.failures {
                eprintln!("failed: {f}");
            }
            if !o.failures.is_empty() {
                return Err(Failure::Partial(o.failures.len()));
            }
        }
        Command::Ecr { plan, measures } => {
            let plan = load_plan(plan, cli)?;
            let rows = harness::parse_rows(&read(measures)?).map_err(harness_err)?;
            let report = harness::analyze(&plan, &rows).map_err(harness_err)?;
            write(&out.join("ecr_report.json"), &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
            harness::emit_plot_data(&report, &out).context("cannot write plot data")?;
            print_summary(&report);
        }
        Command::Plotdata { report } => {
            let report: CampaignReport = serde_json::from_str(&read(report)?).context("cannot parse report").map_err(Failure::Config)?;
            for p in harness::emit_plot_data(&report, &out).context("cannot write plot data")? {
                println!("{}", p.display());
            }
        }
        Command::Validate { config: path } => {
            let text = read(path)?;
            let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display())).map_err(Failure::Config)?;
            if value.get("users_per_onu").is_some_and(|v| v.is_array()) {
                let plan = load_plan(path, cli)?;
                println!("campaign ok: {} cells", plan.cells().len());
            } else {
                let s = Scenario::from_json(&text).map_err(|source| config(ConfigError::Parse { path: path.clone(), source }))?;
                s.validate().map_err(config)?;
                println!("scenario ok: {}", s.config_id());
            }
        }
        Command::ConvertTrace { input, output } => {
            let text = read(input)?;
            let csv = ecrbed::traffic::convert_verbose_trace(&text).map_err(config)?;
            write(output, &csv)?;
        }
    }
    Ok(())
}

fn print_summary(report: &CampaignReport) {
    for p in &report.points {
        match (&p.report, &p.error) {
            (Some(r), _) => println!("n={:<3} n_tx={:<3} ecr={:?}{}", p.n, p.n_tx, r.ecr, if r.flagged { " (flagged)" } else { "" }),
            (None, Some(e)) => println!("n={:<3} n_tx={:<3} error: {e}", p.n, p.n_tx),
            (None, None) => {}
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Partial(n)) => {
            eprintln!("{n} run(s) failed");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
