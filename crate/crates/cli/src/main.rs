use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use toa_cli::{run_scenario, run_sweep, CliError, Scenario, SweepSpec};

#[derive(Parser)]
#[command(name = "toa", version, about = "Detector-entry probabilities, two-state detector dynamics and arrival times")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its CSV and JSON outputs.
    Run {
        scenario: PathBuf,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 3 when an integral did not converge.
        #[arg(long)]
        strict: bool,
    },
    /// Run a scenario template once per parameter value.
    Sweep {
        sweep: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Rows to run in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        strict: bool,
    },
    /// Check a scenario file without running it.
    Validate { scenario: PathBuf },
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { scenario, out, strict } => {
            let s = Scenario::load(&scenario)?;
            let run = run_scenario(&s, &base_dir(&scenario))?;
            let dir = out.unwrap_or_else(|| PathBuf::from(&s.output.dir));
            run.write_to(&dir)?;
            let sum = &run.summary;
            println!("wrote {}", dir.display());
            println!("P_E1 = {:.6e}, P_D(t_end) = {:.6e}, P_reg(t_end) = {:.6e}", sum.p_e1, sum.p_d_final, sum.p_reg_final);
            if let Some(a) = &sum.arrival {
                println!("mean arrival time = {:.6}", a.mean_t);
            }
            if !sum.converged {
                eprintln!("warning: a semi-infinite integral did not converge; see summary.json");
                if strict {
                    return Err(CliError::NonConverged(format!("see {}", dir.join("summary.json").display())));
                }
            }
            Ok(())
        }
        Command::Sweep { sweep, out, jobs, strict } => {
            let spec = SweepSpec::load(&sweep)?;
            let table = run_sweep(&spec, jobs.max(1))?;
            let dir = out.unwrap_or_else(|| PathBuf::from(&spec.template.output.dir));
            table.write_to(&dir)?;
            println!("wrote {} rows to {}", table.rows.len(), dir.display());
            let failed = table.rows.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                eprintln!("warning: {failed} rows failed; see sweep.json");
            }
            let unconverged = table
                .rows
                .iter()
                .any(|r| r.summary.as_ref().is_some_and(|s| !s.converged));
            if strict && unconverged {
                return Err(CliError::NonConverged("at least one sweep row".into()));
            }
            Ok(())
        }
        Command::Validate { scenario } => {
            let s = Scenario::load(&scenario)?;
            let model = s.build(&base_dir(&scenario))?;
            println!("{}: valid ({} detector)", scenario.display(), model.detector.kind());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
