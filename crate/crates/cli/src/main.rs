mod args;
mod commands;
mod parse;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

/// Failure attributed to how the tool was invoked rather than to the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<cosfire_scene::Error>() {
        Some(cosfire_scene::Error::InvalidParameter(_)) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COSFIRE_SCENE_LOG", "warn"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };

    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot size worker pool: {e}");
            return ExitCode::from(EXIT_DATA);
        }
    }

    let stamp = (!cli.deterministic).then(|| {
        format!(
            "generated_at {}",
            cosfire_scene::formats::format_timestamp(&chrono::Utc::now())
        )
    });
    let result = match cli.command {
        Command::Configure(a) => commands::configure(a),
        Command::Label(a) => commands::label(a, stamp.as_deref()),
        Command::Smooth(a) => commands::smooth(a, stamp.as_deref()),
        Command::Segment(a) => commands::segment(a, stamp.as_deref()),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::GenCorpus(a) => commands::gen_corpus(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
