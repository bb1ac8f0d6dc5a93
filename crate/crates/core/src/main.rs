use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use conserv_stat::pipeline::{self, JobConfig, PipelineError, RunOutput};

#[derive(Parser)]
#[command(name = "conserv-stat", version, about = "Conservative statistical structures on conformal charts", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Job configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's outputs.dir
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid override as NXxNY, e.g. 128x128
    #[arg(long)]
    grid: Option<String>,
    /// Suppress the report on stdout
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the field equation for the given moduli and report diagnostics
    Solve(Common),
    /// Recompute the residual panel for a previously dumped structure
    Verify(Common),
    /// Solve, then recover the moduli from the synthesized structure
    Roundtrip(Common),
}

fn load_config(common: &Common) -> Result<JobConfig, PipelineError> {
    let text = std::fs::read_to_string(&common.config)?;
    let mut cfg = JobConfig::from_json(&text)?;
    if let Some(out) = &common.out {
        match &mut cfg.outputs {
            Some(spec) => spec.dir = out.clone(),
            None => {
                cfg.outputs = Some(pipeline::OutputSpec {
                    dir: out.clone(),
                    dump_fields: false,
                })
            }
        }
    }
    if let Some(grid) = &common.grid {
        let (nx, ny) = grid
            .split_once(['x', 'X'])
            .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
            .ok_or_else(|| {
                PipelineError::Config(format!("bad --grid value {grid:?}, expected NXxNY"))
            })?;
        let chart = cfg
            .chart
            .as_mut()
            .ok_or_else(|| PipelineError::Config("--grid requires a chart section".into()))?;
        chart.nx = nx;
        chart.ny = ny;
    }
    Ok(cfg)
}

type Runner = fn(&JobConfig) -> Result<RunOutput, PipelineError>;

fn run(cli: &Cli) -> Result<(RunOutput, bool), PipelineError> {
    let (common, job): (&Common, Runner) = match &cli.command {
        Command::Solve(c) => (c, pipeline::run_forward),
        Command::Verify(c) => (c, pipeline::run_verify),
        Command::Roundtrip(c) => (c, pipeline::run_roundtrip),
    };
    let cfg = load_config(common)?;
    Ok((job(&cfg)?, common.quiet))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((out, quiet)) => {
            if !quiet {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&out.report).expect("report serialization")
                );
            }
            ExitCode::from(out.status.exit_code() as u8)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
