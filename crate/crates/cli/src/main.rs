//! `mdf` command-line tool.
//!
//! Exit status: 0 on success, 1 when the input or arguments break a
//! contract (or a check fails), 2 on an internal failure.

mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Failure;

fn run(cli: Cli) -> commands::CmdResult {
    match cli.command {
        Command::Encode(a) => commands::encode_cmd(a),
        Command::Train(a) => commands::train_cmd(a),
        Command::Eval(a) => commands::eval_cmd(a),
        Command::Explain(a) => commands::explain_cmd(a),
        Command::Gradcheck(a) => commands::gradcheck_cmd(a),
        Command::Synth(a) => commands::synth_cmd(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("error: {f}");
            let contract = match &f {
                Failure::Core(e) => e.is_contract_violation(),
                Failure::Check(_) => true,
            };
            ExitCode::from(if contract { 1 } else { 2 })
        }
        Err(_) => ExitCode::from(2),
    }
}
