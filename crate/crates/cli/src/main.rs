use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use so3_fuzzy_cli::{
    cmd_compare, cmd_optimize, cmd_simulate, exit_code, format_table, parse_k_list, GainArg,
};

/// Nonlinear SO(3) attitude filter with a fuzzy-scheduled gain.
#[derive(Parser)]
#[command(name = "so3-fuzzy", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop simulation and write the trace CSV.
    Simulate {
        /// Scenario TOML path, or `paper_iv_a` for the bundled preset.
        #[arg(long)]
        config: String,
        /// Gain mode: `fixed:<k>` or `fuzzy`.
        #[arg(long)]
        gain: String,
        /// Fuzzy parameter record (required with `--gain fuzzy`).
        #[arg(long)]
        params: Option<PathBuf>,
        /// Seed override; defaults to the config file's rng_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Tune the membership parameters with the bee colony.
    Optimize {
        /// Optimizer TOML (colony settings plus objective scenario).
        #[arg(long)]
        config: PathBuf,
        /// Seed override for both colony and measurement noise.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (convergence log, checkpoint, best record).
        #[arg(long)]
        out: PathBuf,
        /// Continue from the checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Summarize fixed gains against the fuzzy schedule on one scenario.
    Compare {
        /// Scenario TOML path, or `paper_iv_a` for the bundled preset.
        #[arg(long)]
        config: String,
        /// Fuzzy parameter record for the scheduled run.
        #[arg(long)]
        params: PathBuf,
        /// Comma-separated fixed gain increments k (so K = 1 + k).
        #[arg(long, default_value = "0,9,49")]
        k_list: String,
        /// Seed override; defaults to the config file's rng_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path for the comparison table.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            config,
            gain,
            params,
            seed,
            out,
        } => gain.parse::<GainArg>().and_then(|gain| {
            let metrics = cmd_simulate(&config, gain, params.as_deref(), seed, &out)?;
            println!("wrote {}", out.display());
            println!("{metrics}");
            Ok(())
        }),
        Command::Optimize {
            config,
            seed,
            out,
            resume,
        } => cmd_optimize(&config, seed, &out, resume).map(|params| {
            println!("wrote {}", out.join("best.params").display());
            print!("{}", params.to_record_string());
        }),
        Command::Compare {
            config,
            params,
            k_list,
            seed,
            out,
        } => parse_k_list(&k_list).and_then(|ks| {
            let rows = cmd_compare(&config, &params, &ks, seed, &out)?;
            println!("wrote {}", out.display());
            print!("{}", format_table(&rows));
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(exit_code(&error) as u8)
        }
    }
}
