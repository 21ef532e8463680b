//! `stoflp` command-line front end.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "stoflp", version, about = "Stochastic unequal-area facility layout solver")]
struct Cli {
    /// Worker threads; defaults to the number of available cores.
    #[arg(long, global = true, env = "STOFLP_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GaArgs {
    #[arg(long, default_value_t = 70)]
    pub population: usize,
    #[arg(long, default_value_t = 4)]
    pub islands: usize,
    /// Generations without a new best before stopping.
    #[arg(long, default_value_t = 300)]
    pub stall: usize,
    #[arg(long, default_value_t = 1000)]
    pub max_generations: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimize one flow matrix `mu + b * sigma` with the island GA.
    Solve {
        instance: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        b: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Independent GA runs with seeds `seed, seed + 1, ...`; the best is kept.
        #[arg(long, default_value_t = 1)]
        runs: u64,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Best known objective, used to report the relative gap.
        #[arg(long)]
        reference: Option<f64>,
        #[command(flatten)]
        ga: GaArgs,
    },
    /// Run the GA / simulation / ANOVA elimination loop over candidate flows.
    Hybrid {
        instance: PathBuf,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "-1,0,1,1.5,2")]
        b_set: Vec<f64>,
        /// Wall-clock budget in seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long, default_value_t = 50)]
        max_iterations: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[command(flatten)]
        ga: GaArgs,
    },
    /// Simulate saved layouts under random flows and compare them.
    Simulate {
        instance: PathBuf,
        #[arg(required = true)]
        layouts: Vec<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Write every sample to this CSV file.
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Draw a saved layout as SVG.
    Render {
        instance: PathBuf,
        layout: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Size of the chromosome search space for `n` departments.
    Count {
        n: usize,
        /// Count only chromosomes reachable from the seeding heuristic.
        #[arg(long)]
        seeded: bool,
    },
    /// ANOVA on a CSV file: factor columns followed by one response column.
    Anova {
        csv: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot configure {t} threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    let echo = std::env::args().collect::<Vec<_>>().join(" ");
    let result = match cli.command {
        Command::Solve { instance, b, seed, runs, out_dir, reference, ga } => {
            commands::solve(echo, &instance, b, seed, runs, &out_dir, reference, &ga)
        }
        Command::Hybrid { instance, b_set, time_limit, max_iterations, alpha, reps, seed, out_dir, ga } => {
            let opts = commands::HybridOpts { b_set, time_limit, max_iterations, alpha, reps, seed };
            commands::hybrid(echo, &instance, &opts, &out_dir, &ga)
        }
        Command::Simulate { instance, layouts, reps, seed, alpha, samples } => {
            commands::simulate(echo, &instance, &layouts, reps, seed, alpha, samples.as_deref())
        }
        Command::Render { instance, layout, out } => commands::render(echo, &instance, &layout, &out),
        Command::Count { n, seeded } => commands::count(echo, n, seeded),
        Command::Anova { csv, alpha, out_dir } => commands::anova(echo, &csv, alpha, out_dir.as_deref()),
    };
    match result {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
