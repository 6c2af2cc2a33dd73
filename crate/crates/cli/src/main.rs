mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use surgphase::pipeline::PipelineError;

use args::{Cli, Command};
use commands::Ctx;

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<PipelineError>() {
        Some(e) => e.exit_code() as u8,
        None => 3,
    }
}

/// The error and its causes, skipping causes already quoted by an outer message.
fn describe(err: &anyhow::Error) -> String {
    let mut msg = err.to_string();
    for cause in err.chain().skip(1) {
        let c = cause.to_string();
        if !msg.contains(&c) {
            msg.push_str(": ");
            msg.push_str(&c);
        }
    }
    msg
}

fn set_threads(n: usize) -> anyhow::Result<()> {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| PipelineError::Config(format!("cannot size the thread pool: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    if n > 1 {
        eprintln!("warning: built without the `parallel` feature; --threads is ignored");
    }
    Ok(())
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.global.threads {
        set_threads(n)?;
    }
    let mut ctx = Ctx::new(&cli.global)?;
    match &cli.command {
        Command::Stats(a) => commands::stats(&mut ctx, a),
        Command::ExtractShots(a) => commands::extract_shots(&mut ctx, a),
        Command::SaliencyPreview(a) => commands::saliency_preview_cmd(&mut ctx, a),
        Command::ExtractFeatures(a) => commands::extract_features(&mut ctx, a),
        Command::EvalKnn(a) => commands::eval_knn(&mut ctx, a),
        Command::TrainLstm(a) => commands::train_lstm(&mut ctx, a),
        Command::EvalLstm(a) => commands::eval_lstm(&mut ctx, a),
        Command::Report(a) => commands::report(&mut ctx, a),
        Command::Synth(a) => commands::synth(&mut ctx, a, cli.global.seed),
        Command::Run => commands::run(&mut ctx),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", describe(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}
