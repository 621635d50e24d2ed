mod args;
mod commands;

use std::process::ExitCode;

use args::{Cli, Command, RunCommand};
use clap::Parser;

fn dispatch(command: Command) -> anyhow::Result<commands::Report> {
    match command {
        Command::Params(a) => commands::params(a),
        Command::Run(RunCommand::Test(a)) => commands::run_test(a),
        Command::Run(RunCommand::Protocol(a)) => commands::run_protocol(a),
        Command::Run(RunCommand::Lemma2(a)) => commands::run_lemma2(a),
        Command::Run(RunCommand::Equiv(a)) => commands::run_equiv(a),
        Command::Run(RunCommand::Bench(a)) => commands::run_bench(a),
        Command::Compile(a) => commands::compile(a),
        Command::Toy(a) => commands::toy(a),
    }
}

/// Exit codes: 0 success, 1 usage or configuration error, 2 failed check.
fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let report = match dispatch(cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    match serde_json::to_string(&report) {
        Ok(s) => println!("{s}"),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
