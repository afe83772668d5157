use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use blockaug::AugmentStrategy;
use blockaug_cli::{run, Mode, Reorder, SolveConfig};

#[derive(Parser)]
#[command(
    name = "blockaug",
    version,
    about = "Solve full rank under/overdetermined systems via block-orthogonal augmentation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a Matrix Market system, solve it, and emit a JSON report.
    Solve(SolveArgs),
}

#[derive(clap::Args)]
struct SolveArgs {
    /// Matrix Market file (coordinate or array, real general).
    matrix: PathBuf,

    /// Right-hand side vector, plain text, one value per line.
    #[arg(long)]
    rhs: PathBuf,

    /// Problem kind: 'under' solves A x = b for a wide full row rank A,
    /// 'over' minimizes |A x - b| for a tall full column rank A.
    #[arg(long, value_enum)]
    mode: ModeArg,

    /// Number of row (under) or column (over) blocks.
    #[arg(long)]
    blocks: usize,

    /// Augmentation construction.
    #[arg(long, value_enum, default_value_t = StrategyArg::Pairwise)]
    augment: StrategyArg,

    /// Bandwidth-reducing reordering applied before partitioning.
    #[arg(long, value_enum, default_value_t = ReorderArg::None)]
    reorder: ReorderArg,

    /// Normalized tolerance on off-diagonal block products.
    #[arg(long = "tol-ortho", default_value_t = blockaug::DEFAULT_ORTHO_TOL)]
    tol_ortho: f64,

    /// Relative tolerance on residual and certificate checks.
    #[arg(long = "tol-sol", default_value_t = blockaug::DEFAULT_SOL_TOL)]
    tol_sol: f64,

    /// Relative rank-detection tolerance for block factorizations.
    #[arg(long = "tol-rank", default_value_t = blockaug::DEFAULT_RANK_TOL)]
    tol_rank: f64,

    /// Also solve with the dense reference and report the relative gap.
    #[arg(long = "compare-oracle")]
    compare_oracle: bool,

    /// Write the JSON report here in addition to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Under,
    Over,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    /// Γ = ±A blocks; needs block tridiagonal overlap structure.
    SignAlternating,
    /// Per-pair cancellation columns; works for any structure.
    Pairwise,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReorderArg {
    None,
    Rcm,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Solve(args) = cli.command;
    let config = SolveConfig {
        mode: match args.mode {
            ModeArg::Under => Mode::Under,
            ModeArg::Over => Mode::Over,
        },
        blocks: args.blocks,
        strategy: match args.augment {
            StrategyArg::SignAlternating => AugmentStrategy::SignAlternating,
            StrategyArg::Pairwise => AugmentStrategy::Pairwise,
        },
        reorder: match args.reorder {
            ReorderArg::None => Reorder::None,
            ReorderArg::Rcm => Reorder::Rcm,
        },
        ortho_tol: args.tol_ortho,
        sol_tol: args.tol_sol,
        rank_tol: args.tol_rank,
        compare_oracle: args.compare_oracle,
        matrix: args.matrix,
        rhs: args.rhs,
        out: args.out,
    };
    match run(&config) {
        Ok(report) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
