// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use unikrypt::Crypto;
use unikrypt_cli::bench::{self, BenchOp};
use unikrypt_cli::{load_config, report, selftest, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_OK, SEED_ENV};

#[derive(Parser)]
#[command(name = "unikrypt", version, about = "Overhead benchmarks and self-tests for unikrypt")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time key import and operations per backend.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        op: BenchOp,
        #[arg(long, default_value_t = 1000)]
        iterations: u64,
        /// Also write the rows as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run known-answer, policy, slot-accounting and equivalence checks.
    Selftest {
        #[arg(long)]
        config: PathBuf,
    },
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = std::env::var(SEED_ENV).ok();
    match cli.command {
        Command::Bench {
            config,
            op,
            iterations,
            csv,
        } => {
            let file = match load_config(&config, seed.as_deref()) {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit(EXIT_CONFIG);
                }
            };
            let cfg = match file.resolve().and_then(|c| c.validate().map(|()| c)) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {} {e}", e.status().status());
                    return exit(EXIT_CONFIG);
                }
            };
            if iterations == 0 {
                eprintln!("error: INVALID_ARGUMENT iterations must be positive");
                return exit(EXIT_CONFIG);
            }
            let crypto = match Crypto::init(cfg) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {} during initialization", e.status());
                    return exit(EXIT_CONFIG);
                }
            };
            let result = match bench::run_on(&crypto, op, iterations) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {}", e.status());
                    return exit(EXIT_CONFIG);
                }
            };
            let name = format!("{op:?}").to_lowercase();
            print!("{}", report::header(&name, iterations, bench::timer_resolution()));
            print!("{}", report::table(&result));
            if let Some(path) = csv {
                if let Err(e) = std::fs::write(&path, report::csv(&result)) {
                    eprintln!("error: {}: {e}", path.display());
                    return exit(EXIT_CHECK_FAILED);
                }
            }
            exit(if result.is_clean() { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::Selftest { config } => {
            let file = match load_config(&config, seed.as_deref()) {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit(EXIT_CONFIG);
                }
            };
            let result = selftest::selftest(&file);
            println!("{result}");
            if result.config_error.is_some() {
                exit(EXIT_CONFIG)
            } else if result.passed() {
                exit(EXIT_OK)
            } else {
                exit(EXIT_CHECK_FAILED)
            }
        }
    }
}
