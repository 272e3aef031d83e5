use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use cyclos_cli::args::{Cli, TopLevel};
use cyclos_cli::{effective_seed, rerun, run_pipeline};

/// Usage errors, following the BSD `sysexits` convention.
const EX_USAGE: u8 = 64;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EX_USAGE),
            };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        TopLevel::Pipeline(p) => effective_seed(cli.seed).and_then(|seed| run_pipeline(p, &cli.out, seed)).map(|m| m.status),
        TopLevel::Rerun { manifest } => rerun(manifest, &cli.out),
    };
    match result {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
