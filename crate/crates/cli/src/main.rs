use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ris_coupling::experiment::{self, figures, RunOptions, SweepSpec};
use ris_coupling::selftest;

/// Exit status for unreadable or invalid configurations and I/O failures.
const EXIT_CONFIG: u8 = 1;
/// Exit status for numerical failures under `--strict` or failed self-checks.
const EXIT_NUMERICAL: u8 = 2;

#[derive(Parser)]
#[command(name = "ris-sim", version, about = "Impedance-domain RIS link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter sweep and write its CSV into the output directory.
    Run {
        /// Config file, or the id of a shipped figure (see list-figures).
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (defaults to the number of cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Also write per-element-update traces of iterative methods.
        #[arg(long)]
        trace_elements: bool,
        /// Exit with status 2 if any scenario failed numerically.
        #[arg(long)]
        strict: bool,
    },
    /// List the shipped figure configurations.
    ListFigures,
    /// Run the oracle-equivalence checks on seeded random instances.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            threads,
            trace_elements,
            strict,
        } => run(&config, &out, threads, trace_elements, strict),
        Command::ListFigures => {
            for f in &figures::FIGURES {
                println!("{:<6} configs/{}.cfg  {}", f.id, f.id, f.description);
            }
            ExitCode::SUCCESS
        }
        Command::Selftest { seed } => selftest_cmd(seed),
    }
}

fn load_spec(config: &str) -> Result<SweepSpec, String> {
    let path = Path::new(config);
    if !path.exists() {
        if let Some(f) = figures::find(config) {
            return experiment::parse_config_named(f.config, f.id).map_err(|e| e.to_string());
        }
    }
    SweepSpec::from_file(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(config: &str, out: &Path, threads: Option<usize>, trace_elements: bool, strict: bool) -> ExitCode {
    let spec = match load_spec(config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if threads == Some(0) {
        eprintln!("config error: --threads must be positive");
        return ExitCode::from(EXIT_CONFIG);
    }
    let opts = RunOptions {
        threads,
        trace_elements,
    };
    let output = match experiment::run_sweep(&spec, &opts) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("cannot start worker pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Err(e) = write_outputs(&spec, &output, out, trace_elements) {
        eprintln!("{e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let errors = output.error_count();
    eprintln!(
        "{}: {} records, {} failed evaluations -> {}",
        spec.name,
        output.records.len(),
        errors,
        out.join(&spec.output).display()
    );
    if strict && errors > 0 {
        ExitCode::from(EXIT_NUMERICAL)
    } else {
        ExitCode::SUCCESS
    }
}

fn write_outputs(
    spec: &SweepSpec,
    output: &experiment::SweepOutput,
    dir: &Path,
    trace_elements: bool,
) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join(&spec.output);
    experiment::write_csv(&path, &output.records)
        .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    if trace_elements {
        let path = dir.join(format!("{}_elements.csv", spec.name));
        let file = fs::File::create(&path).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        experiment::write_element_records(file, &output.element_records)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    Ok(())
}

fn selftest_cmd(seed: u64) -> ExitCode {
    match selftest::run_all(seed) {
        Ok(reports) => {
            for r in &reports {
                println!("{r}");
            }
            if reports.iter().all(|r| r.passed()) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_NUMERICAL)
            }
        }
        Err(e) => {
            eprintln!("selftest aborted: {e}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
