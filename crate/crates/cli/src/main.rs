use clap::{Parser, Subcommand};
use visavis_cli::commands::{self, EvalArgs, EvalMode, SolveArgs, TrainArgs};

/// Self-play training, exact-oracle evaluation, and adversarial state
/// detection for three solved board games.
///
/// Worker count is capped by the VISAVIS_THREADS environment variable.
/// Exit codes: 0 success, 2 configuration error, 3 runtime failure.
#[derive(Parser)]
#[command(name = "visavis", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a network with self-play.
    Train(TrainArgs),
    /// Evaluate a checkpoint (exhaustive, match, adversarial, misalign).
    Eval(EvalArgs),
    /// Solve a position exactly.
    Solve(SolveArgs),
    /// Adversarial endgame detection; alias for eval --mode adversarial.
    Detect(DetectArgs),
}

#[derive(clap::Args)]
struct DetectArgs {
    #[arg(long)]
    game: String,
    #[arg(long)]
    checkpoint: std::path::PathBuf,
    #[arg(long, default_value_t = 1000)]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200_000)]
    max_nodes: u64,
    #[arg(long, default_value_t = 6)]
    endgame_plies: u16,
    #[arg(long)]
    memo_cache: Option<std::path::PathBuf>,
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    #[arg(long)]
    force: bool,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => commands::cmd_train(&args).map(|_| ()),
        Command::Eval(args) => commands::cmd_eval(&args).map(|_| ()),
        Command::Solve(args) => commands::cmd_solve(&args),
        Command::Detect(args) => commands::cmd_eval(&EvalArgs {
            game: args.game,
            checkpoint: args.checkpoint,
            mode: EvalMode::Adversarial,
            n: args.n,
            first: false,
            seed: args.seed,
            visit_table: None,
            max_nodes: args.max_nodes,
            endgame_plies: args.endgame_plies,
            memo_cache: args.memo_cache,
            out: args.out,
            force: args.force,
        })
        .map(|_| ()),
    };
    if let Err(err) = result {
        eprintln!("{err}");
        std::process::exit(err.exit_code());
    }
}
