use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fockslit_cli::{run, validate_config};

#[derive(Parser)]
#[command(name = "fockslit", version, about = "Fock-space double-slit experiments")]
struct Cli {
    /// Worker threads; changes speed, never results.
    #[arg(long, global = true, env = "FOCKSLIT_THREADS")]
    threads: Option<usize>,
    /// Suppress progress and summary output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a config file and report every problem found.
    Validate { config: PathBuf },
    /// Run the experiment named in a config (or an emitted manifest).
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => {
            let diags = validate_config(&config);
            if diags.is_empty() {
                if !cli.quiet {
                    println!("{}: ok", config.display());
                }
                ExitCode::SUCCESS
            } else {
                for d in &diags {
                    eprintln!("{}: {d}", config.display());
                }
                ExitCode::from(1)
            }
        }
        Command::Run { config, out } => match run(&config, out.as_deref(), cli.threads) {
            Ok((bundle, dir)) => {
                if !cli.quiet {
                    for f in &bundle.files {
                        println!("{} ({} rows)", dir.join(&f.name).display(), f.rows);
                    }
                    println!("{}", dir.join("manifest.json").display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("fockslit: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
