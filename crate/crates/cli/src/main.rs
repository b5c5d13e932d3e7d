//! `napkit`: extract NAPs from a model or precomputed activations, run
//! parameter studies, and serve or query exports.
//!
//! Failures print `error[<Class>]: <message>` on stderr and exit with the
//! class's code (format 3, data 4, shape 5, lookup 6, parameter 7, io 8).

mod args;
mod commands;
mod config;
mod remote;

use std::process::ExitCode;

use clap::Parser;
use tracing_subscriber::filter::LevelFilter;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => LevelFilter::WARN,
        1 => LevelFilter::INFO,
        2 => LevelFilter::DEBUG,
        _ => LevelFilter::TRACE,
    };
    tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .init();

    let result = match cli.command {
        Command::Extract(a) => commands::extract_cmd(a),
        Command::Study(a) => commands::study_cmd(a),
        Command::Serve(a) => commands::serve_cmd(a),
        Command::Convert(a) => commands::convert_cmd(a),
        Command::Synth(a) => commands::synth_cmd(a),
        Command::Remote(a) => remote::remote_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.class());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
