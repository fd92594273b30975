use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use qwalk_cli::commands;
use qwalk_cli::config::{NoiseMode, Overrides};
use qwalk_cli::output::write_atomic;

#[derive(Parser)]
#[command(name = "qwalk", version, about = "Qutrit circuit synthesis and quantum walk simulation")]
struct Cli {
    /// Experiment configuration (TOML), used by `walk`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random draw; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; commands that only print also write a file here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Noise mode; overrides the config.
    #[arg(long, global = true, value_enum)]
    noise: Option<NoiseMode>,
    /// Draw noise rates below 10^-epsilon; overrides the config.
    #[arg(long, global = true)]
    epsilon: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a 3x3 unitary read from a text file.
    SynthSu3 { matrix: PathBuf },
    /// Synthesize a block-diagonal unitary given as 3x3 blocks separated by blank lines.
    SynthBlockdiag { blocks: PathBuf },
    /// Run the walk described by --config and write a CSV.
    Walk,
    /// KL divergence and TVD of noisy walk CSVs against an ideal one.
    Compare {
        ideal: PathBuf,
        #[arg(required = true)]
        noisy: Vec<PathBuf>,
    },
    /// Gate counts of a circuit family after full lowering.
    Count {
        /// mcx-target-last, mcx-target-first, dihedral, cycle or blockdiag.
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 5)]
        n_max: usize,
        /// Cycle family only.
        #[arg(long, default_value_t = 0)]
        liveliness: usize,
    },
}

fn emit(out: &Option<PathBuf>, name: &str, text: &str) -> Result<()> {
    print!("{text}");
    if let Some(dir) = out {
        write_atomic(&dir.join(name), text.as_bytes())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SynthSu3 { matrix } => emit(&cli.out, "su3.txt", &commands::synth_su3(&commands::read_file(&matrix)?)?),
        Command::SynthBlockdiag { blocks } => {
            emit(&cli.out, "blockdiag.circuit", &commands::synth_blockdiag(&commands::read_file(&blocks)?)?)
        }
        Command::Walk => {
            let path = cli.config.context("walk needs --config <path>")?;
            let overrides = Overrides { seed: cli.seed, noise: cli.noise, epsilon: cli.epsilon.map(f64::from) };
            let out = cli.out.unwrap_or_else(|| PathBuf::from("."));
            let written = commands::walk(&commands::read_file(&path)?, &overrides, &out)?;
            println!("wrote {}", written.display());
            Ok(())
        }
        Command::Compare { ideal, noisy } => {
            let noisy = noisy
                .iter()
                .map(|p| Ok((p.display().to_string(), commands::read_file(p)?)))
                .collect::<Result<Vec<_>>>()?;
            let rows = commands::compare(&commands::read_file(&ideal)?, &noisy)?;
            emit(&cli.out, "compare.csv", &commands::compare_csv(&rows)?)
        }
        Command::Count { family, n_min, n_max, liveliness } => {
            let f = commands::parse_family(&family, liveliness)?;
            emit(&cli.out, "counts.csv", &commands::count(f, n_min, n_max, cli.seed.unwrap_or(0))?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
