use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hybrid_uq::harness::{self, ExperimentConfig, EXIT_CONFIG};
use hybrid_uq::oracle::{fd_check, FdConfig, FdKind};
use hybrid_uq::sparse_grid::DEFAULT_KNOT_CAP;
use hybrid_uq::{IndexRule, SparseGrid};

#[derive(Parser)]
#[command(
    name = "uq",
    version,
    about = "Hybrid collocation-perturbation UQ on a randomly deformed square"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment sweep described by a config file.
    Run { config: PathBuf },
    /// Check the map assumptions for a config.
    Validate { config: PathBuf },
    /// Finite-difference check of a derivative kernel (dG, ddet or dQ).
    FdCheck {
        kind: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Mesh size for dQ.
        #[arg(long)]
        mesh: Option<usize>,
    },
    /// Knot and index counts of a sparse grid.
    GridInfo {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        level: usize,
        #[arg(long, value_enum, default_value_t = Rule::Smolyak)]
        rule: Rule,
        /// Write the knots (reference coordinates) and weights as CSV.
        #[arg(long)]
        knots: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Smolyak,
    TotalDegree,
    HyperbolicCross,
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_CONFIG as u8)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config } => ExitCode::from(harness::run_file(&config) as u8),
        Command::Validate { config } => {
            let diag = ExperimentConfig::from_file(&config).and_then(|c| harness::diagnose(&c));
            match diag {
                Ok(d) => {
                    print!("{d}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::FdCheck {
            kind,
            trials,
            seed,
            mesh,
        } => {
            let kind: FdKind = match kind.parse() {
                Ok(k) => k,
                Err(e) => return fail(e),
            };
            let mut cfg = FdConfig::for_kind(kind);
            cfg.trials = trials.unwrap_or(cfg.trials);
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.mesh_m = mesh.unwrap_or(cfg.mesh_m);
            match fd_check(kind, &cfg) {
                Ok(r) => {
                    println!("kind            {kind:?}");
                    println!("trials          {}", r.trials);
                    println!("max_rel_error   {:.3e}", r.max_rel_error);
                    println!("observed_order  {:.3}", r.observed_order);
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::GridInfo {
            dim,
            level,
            rule,
            knots,
        } => {
            let rule = match rule {
                Rule::Smolyak => IndexRule::Smolyak,
                Rule::TotalDegree => IndexRule::TotalDegree,
                Rule::HyperbolicCross => IndexRule::HyperbolicCross,
            };
            let grid = match SparseGrid::with_rule(dim, level, rule, DEFAULT_KNOT_CAP) {
                Ok(g) => g,
                Err(e) => return fail(e),
            };
            println!("dim      {dim}");
            println!("level    {level}");
            println!("rule     {rule:?}");
            println!("indices  {}", grid.indices().len());
            println!("knots    {}", grid.len());
            if let Some(path) = knots {
                let written =
                    File::create(&path).and_then(|f| grid.write_knot_csv(BufWriter::new(f)));
                if let Err(e) = written {
                    return fail(format!("{}: {e}", path.display()));
                }
            }
            ExitCode::SUCCESS
        }
    }
}
