use clap::{Parser, Subcommand};
use mkfit_cli::{cmd_field, cmd_run, cmd_seed, cmd_verify, init_threads, RunOptions};
use std::path::PathBuf;
use std::process::ExitCode;

/// Fit curves to planar measures.
#[derive(Parser)]
#[command(name = "mkfit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a curve and write frames, diagnostics.csv and final_curve.csv.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Iteration stride of SVG frames (0 disables them).
        #[arg(long)]
        frames_every: Option<usize>,
        /// Cut iterations and Monte Carlo counts by 100x.
        #[arg(long)]
        ci: bool,
    },
    /// Evaluate the barycenter field at the sites in a CSV file.
    Field {
        config: PathBuf,
        #[arg(long)]
        sites: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a seed curve from a spec file.
    Seed {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an oracle suite: moments, fd, ot, arclength, gradient or walk.
    Verify {
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        ci: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match &cli.command {
        Command::Run { config, out, frames_every, ci } => {
            cmd_run(config, &RunOptions { out: out.clone(), frames_every: *frames_every, ci: *ci })
        }
        Command::Field { config, sites, out } => cmd_field(config, sites, out),
        Command::Seed { spec, out } => cmd_seed(spec, out),
        Command::Verify { suite, seed, ci } => cmd_verify(suite, *seed, *ci),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
