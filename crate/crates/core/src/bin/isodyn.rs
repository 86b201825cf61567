use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use isodyn::harness::checks::{run_suite, CheckReport, SUITES};
use isodyn::harness::plot::{read_series, render_svg};
use isodyn::harness::{init_threads, parse_config, run_simulate, HarnessError, RunConfig, EXIT_CONFIG, EXIT_OK, EXIT_SUITE};

/// Lattice laboratory for gauge fields of volume-preserving inner diffeomorphisms.
///
/// Exit codes: 0 success, 1 suite failure, 2 config error, 3 runtime failure.
/// ISODYN_THREADS caps the worker pool.
#[derive(Parser)]
#[command(name = "isodyn", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evolve the configured state, writing CSV diagnostics and snapshots.
    Simulate { config: PathBuf },
    /// Run the verification suites.
    Check {
        config: PathBuf,
        /// Run a single suite.
        #[arg(long)]
        only: Option<String>,
    },
    /// Write an SVG line chart of one CSV column against t.
    Plot {
        csv: PathBuf,
        column: String,
        /// Output file; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<RunConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))?;
    Ok(parse_config(&text)?)
}

fn simulate(path: &Path) -> Result<i32, HarnessError> {
    let cfg = load(path)?;
    let out = run_simulate(&cfg)?;
    println!(
        "wrote {} rows to {} ({} snapshots), nonlinearity ratio {:.3e}",
        out.rows.len(),
        cfg.output.csv_path.display(),
        out.snapshots.len(),
        out.nonlinearity_ratio
    );
    Ok(EXIT_OK)
}

fn check(path: &Path, only: Option<&str>) -> Result<i32, HarnessError> {
    let cfg = load(path)?;
    let names: Vec<&str> = match only {
        Some(n) if SUITES.contains(&n) => vec![n],
        Some(n) => return Err(HarnessError::Input(format!("unknown suite '{n}' (one of {})", SUITES.join(", ")))),
        None => SUITES.to_vec(),
    };
    let mut suites = Vec::new();
    for n in names {
        let r = run_suite(n, &cfg).expect("listed suite");
        print!("{}", r.render());
        let _ = std::io::stdout().flush();
        suites.push(r);
    }
    let report = CheckReport { suites };
    let summary = report.render();
    println!("{}", summary.lines().last().unwrap_or_default());
    Ok(if report.passed() { EXIT_OK } else { EXIT_SUITE })
}

fn plot(csv: &Path, column: &str, out: Option<&Path>) -> Result<i32, HarnessError> {
    let text = std::fs::read_to_string(csv).map_err(|e| HarnessError::Input(format!("{}: {e}", csv.display())))?;
    let svg = render_svg(&read_series(&text, column)?);
    match out {
        Some(p) => std::fs::write(p, svg).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?,
        None => print!("{svg}"),
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    let res = match &cli.cmd {
        Cmd::Simulate { config } => simulate(config),
        Cmd::Check { config, only } => check(config, only.as_deref()),
        Cmd::Plot { csv, column, out } => plot(csv, column, out.as_deref()),
    };
    match res {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
