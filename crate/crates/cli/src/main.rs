use std::io::Write;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use rxn_hypergraph_cli::commands::{
    self, EvalArgs, ExplainArgs, FingerprintArgs, GenerateCmd, ParseArgs, RankArgs, TrainArgs,
};

/// Reaction hypergraph models: build, train, evaluate, rank and explain.
#[derive(Debug, Parser)]
#[command(name = "rxnhg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a file of reaction SMIRKS and report one JSON line per reaction.
    Parse(ParseArgs),
    /// Print the hypergraph of one reaction as JSON.
    Build {
        smirks: String,
    },
    /// Train a model; prints one JSON line per epoch.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Order candidate reactions with a ranking checkpoint.
    Rank(RankArgs),
    /// Attention-based importance scores for one reaction.
    Explain(ExplainArgs),
    /// Sparse reaction fingerprints, one JSON line per record.
    Fingerprint(FingerprintArgs),
    /// Write synthetic datasets.
    #[command(subcommand)]
    Generate(GenerateCmd),
}

fn run(cli: Cli) -> Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Parse(a) => commands::parse(&a, &mut out)?,
        Command::Build { smirks } => commands::build(&smirks, &mut out)?,
        Command::Train(a) => {
            commands::train(&a, &mut out)?;
        }
        Command::Eval(a) => {
            commands::eval(&a, &mut out)?;
        }
        Command::Rank(a) => {
            commands::rank(&a, &mut out)?;
        }
        Command::Explain(a) => commands::explain_cmd(&a, &mut out)?,
        Command::Fingerprint(a) => commands::fingerprint(&a, &mut out)?,
        Command::Generate(g) => commands::generate(&g)?,
    }
    out.flush()?;
    Ok(())
}

/// Output piped into `head` and similar should not count as a failure.
fn broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            || c.downcast_ref::<serde_json::Error>()
                .and_then(|j| j.io_error_kind())
                .is_some_and(|k| k == std::io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(rxn_hypergraph_cli::exit_code(&e) as u8)
        }
    }
}

