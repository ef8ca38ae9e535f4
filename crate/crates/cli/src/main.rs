use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dsm_cli::commands::{self, RenderFormat, Timings};
use dsm_cli::{CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "dsm", version, about = "Multi-frequency direct sampling for source supports")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads (defaults to all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,

    #[arg(long, default_value = ".")]
    out: PathBuf,

    /// Overrides the noise seed from the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize (noisy) measurement data.
    Simulate(Common),
    /// Compute indicator fields from measurement data.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// Measurement file; defaults to the configured name under --out.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Report recovered intervals and scores against the known geometry.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Field to analyze; defaults to normalized.csv under --out.
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Export a field file as PGM (2D) or a structured-points volume (3D).
    Render {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Pgm,
    Vtk,
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.noise.seed = seed;
    }
    config.resolve()
}

fn report(paths: &[PathBuf], timings: &Timings) {
    for p in paths {
        println!("{}", p.display());
    }
    for (stage, ms) in &timings.0 {
        eprintln!("runtime_ms.{stage}={ms:.3}");
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Other(e.to_string()))?;
    }
    let mut timings = Timings::default();
    let default_data = |c: &ExperimentConfig, out: &Path| out.join(&c.output.measurement);
    match cli.command {
        Command::Simulate(common) => {
            let config = load(&common)?;
            let path = commands::simulate(&config, &common.out, &mut timings)?;
            report(&[path], &timings);
        }
        Command::Reconstruct { common, data } => {
            let config = load(&common)?;
            let data = data.unwrap_or_else(|| default_data(&config, &common.out));
            let paths = commands::reconstruct_cmd(&config, &data, &common.out, &mut timings)?;
            report(&paths, &timings);
        }
        Command::Analyze { common, data, field } => {
            let config = load(&common)?;
            let data = data.unwrap_or_else(|| default_data(&config, &common.out));
            let field = field.unwrap_or_else(|| common.out.join("normalized.csv"));
            let path = commands::analyze(&config, &data, &field, &common.out, &mut timings)?;
            report(&[path], &timings);
        }
        Command::Render { field, format, out } => {
            let format = format.map(|f| match f {
                Format::Pgm => RenderFormat::Pgm,
                Format::Vtk => RenderFormat::Vtk,
            });
            let path = commands::render(&field, format, &out)?;
            report(&[path], &timings);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dsm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
