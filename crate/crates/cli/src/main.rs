//! `hcurve`: trace solution curves and run the validation suites.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hcurve::continuation::follow_run;
use hcurve::problems::config::Config;
use hcurve::verify::{all_passed, format_table, run_suite, Suite};
use rayon::prelude::*;

/// Runs whose gaps exceed this share of the nodes exit with status 3.
const MAX_GAP_FRACTION: f64 = 0.10;

#[derive(Parser)]
#[command(
    name = "hcurve",
    version,
    about = "Solution curves of u'' + g(u) = mu phi_k + e by continuation in xi"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Follow the curve for a catalog entry, a config file, or a directory of configs.
    Run(RunArgs),
    /// Run a validation suite and print a PASS/FAIL table.
    Verify {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(Suite::NAMES))]
        suite: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Catalog name, path to a .toml config, or a directory of .toml configs.
    target: String,
    #[arg(long, allow_negative_numbers = true)]
    xi_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    xi_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    step: Option<f64>,
    #[arg(long)]
    modes: Option<usize>,
    /// Newton tolerance on the residual norm.
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory. Defaults to `$HC_OUT_DIR/<name>`, else `out/<name>`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "mu-star", allow_negative_numbers = true)]
    mu_star: Vec<f64>,
    /// Worker threads when the target is a directory.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Status {
    Ok = 0,
    Config = 2,
    Gaps = 3,
    Internal = 4,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => ExitCode::from(run(&args) as u8),
        Command::Verify { suite } => {
            let suite: Suite = suite.parse().expect("clap restricts the suite names");
            let checks = run_suite(suite);
            print!("{}", format_table(&checks));
            if all_passed(&checks) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn output_root(args: &RunArgs) -> PathBuf {
    args.out
        .clone()
        .or_else(|| std::env::var_os("HC_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn run(args: &RunArgs) -> Status {
    let target = Path::new(&args.target);
    if target.is_dir() {
        return run_dir(args, target);
    }
    let (config, name) = if target.is_file() {
        (
            Config::load(target),
            target
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned(),
        )
    } else {
        (Config::from_catalog(&args.target), args.target.clone())
    };
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("hcurve: {}: {e}", args.target);
            return Status::Config;
        }
    };
    // An explicit --out names the directory itself; the env root gets a subdirectory.
    let out = match &args.out {
        Some(dir) => dir.clone(),
        None => output_root(args).join(name),
    };
    run_one(args, config, &out, &args.target)
}

fn run_dir(args: &RunArgs, dir: &Path) -> Status {
    let mut paths: Vec<PathBuf> = match fs::read_dir(dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect(),
        Err(e) => {
            eprintln!("hcurve: {}: {e}", dir.display());
            return Status::Config;
        }
    };
    paths.sort();
    if paths.is_empty() {
        eprintln!("hcurve: no .toml configs in {}", dir.display());
        return Status::Config;
    }
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("hcurve: thread pool: {e}");
            return Status::Internal;
        }
    };
    let root = output_root(args);
    let statuses: Vec<Status> = pool.install(|| {
        paths
            .par_iter()
            .map(|path| {
                let label = path.display().to_string();
                match Config::load(path) {
                    Ok(c) => {
                        let stem = path.file_stem().unwrap_or_default();
                        run_one(args, c, &root.join(stem), &label)
                    }
                    Err(e) => {
                        eprintln!("hcurve: {label}: {e}");
                        Status::Config
                    }
                }
            })
            .collect()
    });
    statuses.into_iter().max().unwrap_or(Status::Ok)
}

fn run_one(args: &RunArgs, mut config: Config, out: &Path, label: &str) -> Status {
    let run = &mut config.run;
    run.xi_min = args.xi_min.unwrap_or(run.xi_min);
    run.xi_max = args.xi_max.unwrap_or(run.xi_max);
    run.xi_step = args.step.unwrap_or(run.xi_step);
    run.settings.modes = args.modes.unwrap_or(run.settings.modes);
    run.settings.newton_tol = args.tol.unwrap_or(run.settings.newton_tol);
    if !args.mu_star.is_empty() {
        run.mu_star = args.mu_star.clone();
    }
    if let Err(e) = config.validate() {
        eprintln!("hcurve: {label}: {e}");
        return Status::Config;
    }
    let curve = match follow_run(&config.problem, &config.run) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("hcurve: {label}: {e}");
            return Status::Internal;
        }
    };
    if let Err(e) = hcurve::output::write_artifacts(out, &curve, &config.run.mu_star) {
        eprintln!("hcurve: {label}: writing {}: {e}", out.display());
        return Status::Internal;
    }
    println!(
        "{label}: {} nodes, {} gaps -> {}",
        curve.node_count(),
        curve.gaps.len(),
        out.display()
    );
    if !curve.gaps.is_empty() {
        eprintln!("{}", curve.diagnostics());
    }
    if curve.gap_fraction() > MAX_GAP_FRACTION {
        eprintln!(
            "hcurve: {label}: {:.1}% of nodes did not converge",
            100.0 * curve.gap_fraction()
        );
        return Status::Gaps;
    }
    Status::Ok
}
