//! Command-line front end: campaigns, single snapshots, oracle checks, model export.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mmudn::experiments::{run_campaign, snapshot_gains, ExperimentSpec, SolverChoice};
use mmudn::format::sig6;
use mmudn::milp::{build_milp, choose_big_m, write_lp};
use mmudn::scenario::{calibrate_power, generate_topology, mean_pair_gain, ScenarioConfig};
use mmudn::sinr::{baseline_association, evaluate, Association};
use mmudn::solver::{brute_force_maxmin, run_equivalence_suite, solve_milp, BnBConfig};
use mmudn::RateReport;

#[derive(Parser)]
#[command(
    name = "mmudn",
    version,
    about = "Optimal user association for Massive-MIMO small-cell clusters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign from an experiment spec file.
    Run(RunArgs),
    /// Solve one snapshot and compare the baseline with the optimum.
    Snapshot(SnapshotArgs),
    /// Check the MILP solver against exhaustive enumeration on seeded instances.
    Verify(VerifyArgs),
    /// Write the MILP of one snapshot in CPLEX LP format.
    ExportLp(ExportArgs),
    /// Print the power calibration of a scenario.
    Calibrate(CalibrateArgs),
}

#[derive(Args)]
struct Common {
    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Per-solve time limit for the MILP solver.
    #[arg(long, value_name = "SECS")]
    time_limit: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[command(flatten)]
    common: Common,
    #[arg(long, value_name = "N")]
    snapshots: Option<usize>,
    #[arg(long, value_parser = parse_solver)]
    solver: Option<SolverChoice>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SnapshotArgs {
    /// Scenario config file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Snapshot index within the seed's stream.
    #[arg(long, default_value_t = 0)]
    index: u64,
    #[arg(long, value_parser = parse_solver, default_value = "milp")]
    solver: SolverChoice,
    /// Directory for topology and association CSVs.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Number of seeded instances.
    #[arg(long, value_name = "N", default_value_t = 100)]
    snapshots: usize,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0)]
    index: u64,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_solver(s: &str) -> Result<SolverChoice, String> {
    s.parse().map_err(|e: mmudn::Error| e.to_string())
}

fn bnb_config(common: &Common) -> Result<BnBConfig> {
    let mut config = BnBConfig::default();
    if let Some(t) = common.time_limit {
        if !(t > 0.0 && t.is_finite()) {
            bail!("--time-limit must be positive, got {t}");
        }
        config.time_limit = Some(Duration::from_secs_f64(t));
    }
    Ok(config)
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut config = ScenarioConfig::from_toml_str(&text)?;
    if let Some(seed) = seed {
        config.base_seed = seed;
    }
    Ok(config)
}

fn run(args: RunArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut spec = ExperimentSpec::from_toml_str(&text)?;
    if let Some(seed) = args.common.seed {
        spec.base_seed = seed;
    }
    if let Some(n) = args.snapshots {
        spec.snapshots = n;
    }
    if let Some(solver) = args.solver {
        spec.solver = solver;
    }
    if let Some(out) = args.out {
        spec.out_dir = out;
    }
    if let Some(t) = args.common.time_limit {
        spec.time_limit_s = Some(t);
    }
    spec.validate()?;
    let report = run_campaign(&spec)?;
    report.write(&spec.out_dir)?;
    print!("{}", report.aggregate_csv());
    println!(
        "{} points, mean gain {}, active ratio {}, written to {}",
        report.aggregates.len(),
        sig6(report.mean_gain()),
        sig6(report.active_ratio()),
        spec.out_dir.display()
    );
    Ok(())
}

fn print_report(name: &str, association: &Association, report: &RateReport) {
    println!(
        "{name}: min_rate {} bit/s/Hz, min_sinr {} dB, active ANs {}, serving [{}]",
        sig6(report.min_rate),
        sig6(report.min_sinr_db()),
        report.active_an_count,
        association
            .serving_an()
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    );
}

fn snapshot(args: SnapshotArgs) -> Result<()> {
    let config = load_scenario(&args.config, args.common.seed)?;
    let power = calibrate_power(&config)?;
    let topology = generate_topology(&config, args.index)?;
    let gains = snapshot_gains(&config, args.index)?;
    let (l, p) = (config.antennas_per_an, power.per_an_power_linear);

    let mut outputs = vec![("baseline", baseline_association(&gains))];
    if matches!(args.solver, SolverChoice::Milp | SolverChoice::Both) {
        let model = build_milp(&gains, l, p, choose_big_m(&gains, l, p))?;
        let result = solve_milp(&model, &bnb_config(&args.common)?)?;
        println!("{}", mmudn::solver::SolveResult::CSV_HEADER);
        println!("{}", result.to_csv_row());
        let incumbent = result.incumbent.context("no feasible association")?;
        outputs.push(("milp", incumbent));
    }
    if matches!(args.solver, SolverChoice::Brute | SolverChoice::Both) {
        outputs.push(("brute", brute_force_maxmin(&gains, l, p)?.association));
    }

    let mut reports = Vec::new();
    for (name, association) in &outputs {
        let report = evaluate(association, &gains, l, p)?;
        print_report(name, association, &report);
        reports.push(report);
    }
    let base = &reports[0];
    for ((name, _), report) in outputs.iter().zip(&reports).skip(1) {
        println!(
            "{name} vs baseline: min_rate {} -> {} ({}%), active ANs {} -> {}",
            sig6(base.min_rate),
            sig6(report.min_rate),
            sig6(100.0 * (report.min_rate - base.min_rate) / base.min_rate),
            base.active_an_count,
            report.active_an_count
        );
    }
    if let Some(dir) = args.out {
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("topology.csv"), topology.to_csv())?;
        for (name, association) in &outputs {
            fs::write(dir.join(format!("{name}_association.csv")), association.to_csv())?;
        }
        println!("wrote {} association files to {}", outputs.len(), dir.display());
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<()> {
    if args.snapshots == 0 {
        bail!("--snapshots must be >= 1");
    }
    let suite = run_equivalence_suite(
        args.common.seed.unwrap_or(7),
        args.snapshots,
        &bnb_config(&args.common)?,
    )?;
    println!("{}", suite.summary());
    if !suite.all_matched() {
        bail!("{} instances disagree", suite.reports.len() - suite.matched());
    }
    Ok(())
}

fn export_lp(args: ExportArgs) -> Result<()> {
    let config = load_scenario(&args.config, args.common.seed)?;
    let power = calibrate_power(&config)?;
    let gains = snapshot_gains(&config, args.index)?;
    let (l, p) = (config.antennas_per_an, power.per_an_power_linear);
    let model = build_milp(&gains, l, p, choose_big_m(&gains, l, p))?;
    match args.out {
        Some(path) => {
            let mut file = std::io::BufWriter::new(fs::File::create(&path)?);
            write_lp(&model, &mut file)?;
            eprintln!("{}", model.summary());
        }
        None => write_lp(&model, &mut std::io::stdout().lock())?,
    }
    Ok(())
}

fn calibrate(args: CalibrateArgs) -> Result<()> {
    let config = load_scenario(&args.config, args.seed)?;
    let power = calibrate_power(&config)?;
    // Independent stream for the check.
    let check = mean_pair_gain(&config, config.calibration_draws, 0xCA11)?;
    println!("mean_gain {}", sig6(power.mean_gain));
    println!("total_power_linear {}", sig6(power.total_power_linear));
    println!("per_an_power_linear {}", sig6(power.per_an_power_linear));
    println!(
        "validation_snr_db {} (target {})",
        sig6(10.0 * (power.total_power_linear * check).log10()),
        sig6(config.target_snr_db)
    );
    Ok(())
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    use mmudn::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::InvalidConfig(_) | E::Parse(_)) => "invalid_config",
        Some(E::Io(_)) => "io",
        Some(E::TooLarge { .. }) => "too_large",
        Some(E::Infeasible | E::Overloaded { .. }) => "infeasible",
        Some(E::Lp(_) | E::InconsistentIncumbent(_) | E::NotIntegral(_)) => "solver",
        Some(_) => "model",
        None if err.downcast_ref::<std::io::Error>().is_some() => "io",
        None => "failed",
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Snapshot(a) => snapshot(a),
        Command::Verify(a) => verify(a),
        Command::ExportLp(a) => export_lp(a),
        Command::Calibrate(a) => calibrate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let message = format!("{err:#}").replace('"', "'").replace(['\n', '\r'], " ");
            eprintln!("error kind={} message=\"{message}\"", error_kind(&err));
            ExitCode::FAILURE
        }
    }
}
