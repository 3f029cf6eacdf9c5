// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sevdel_cli::bench::{bench, write_csv, BenchConfig};
use sevdel_cli::verbs::{run_verb, Verb};
use sevdel_cli::{run_scenario, CliError, Scenario, SessionConfig};
use sevdel_core::{Bls12, Engine, ToyGroup};

#[derive(Parser)]
#[command(name = "sevdel", version, about = "Verifiable deletion protocol simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Sectors per block.
    #[arg(long, default_value_t = 4)]
    sectors: usize,
    #[arg(long, default_value_t = 16)]
    sector_bits: u32,
    #[arg(long, default_value_t = 8)]
    challenge_count: usize,
    /// Size of the generated file when --input is not given.
    #[arg(long, default_value_t = 4096)]
    file_size: usize,
    /// Outsource this file instead of seeded random bytes.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = Bls12::GROUP_ID)]
    group: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate parameters and keys, open the contract.
    Setup(Common),
    /// Split and tag a file.
    Outsource(Common),
    /// Encrypt inside a fresh enclave and derive the encrypted tags.
    Encrypt(Common),
    /// Challenge the server and verify its proof of encryption.
    Verify(Common),
    /// Claim on the contract and destroy the enclave.
    Delete(Common),
    /// Leak ciphertexts, audit them on the contract and settle the penalty.
    Audit(Common),
    /// Run a scenario file; exits non-zero on any unexpected verdict.
    RunScenario {
        file: PathBuf,
        /// Write transcript.jsonl here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time each protocol phase and print CSV.
    Bench {
        /// Comma-separated file sizes in bytes.
        #[arg(long, value_delimiter = ',', default_values_t = [4096usize, 65536])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        sectors: usize,
        #[arg(long, default_value_t = 16)]
        sector_bits: u32,
        #[arg(long, default_value_t = 64)]
        challenge_count: usize,
        #[arg(long, default_value = Bls12::GROUP_ID)]
        group: String,
        /// Write bench.csv here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn verb(verb: Verb, c: Common) -> Result<ExitCode, CliError> {
    let input = match &c.input {
        Some(p) => Some(fs::read(p).map_err(|source| CliError::Io {
            context: format!("read {}", p.display()),
            source,
        })?),
        None => None,
    };
    let cfg = SessionConfig {
        seed: c.seed,
        file_size: c.file_size,
        s: c.sectors,
        sector_bits: c.sector_bits,
        challenge_count: c.challenge_count,
    };
    let outcome = run_verb(verb, cfg, &c.group, input, &c.out)?;
    println!(
        "{verb:?}: {} transcript lines, artifacts in {}",
        outcome.transcript.len(),
        c.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn write_out(dir: &Option<PathBuf>, name: &str, body: &[u8]) -> Result<(), CliError> {
    let io_err = |context: String| move |source| CliError::Io { context, source };
    match dir {
        Some(d) => {
            fs::create_dir_all(d).map_err(io_err(format!("create {}", d.display())))?;
            let path = d.join(name);
            fs::write(&path, body).map_err(io_err(format!("write {}", path.display())))
        }
        None => io::Write::write_all(&mut io::stdout(), body).map_err(io_err("stdout".into())),
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Setup(c) => verb(Verb::Setup, c),
        Command::Outsource(c) => verb(Verb::Outsource, c),
        Command::Encrypt(c) => verb(Verb::Encrypt, c),
        Command::Verify(c) => verb(Verb::Verify, c),
        Command::Delete(c) => verb(Verb::Delete, c),
        Command::Audit(c) => verb(Verb::Audit, c),
        Command::RunScenario { file, out } => {
            let text = fs::read_to_string(&file).map_err(|source| CliError::Io {
                context: format!("read {}", file.display()),
                source,
            })?;
            let sc = Scenario::from_json(&text)?;
            let outcome = run_scenario(&sc)?;
            write_out(&out, "transcript.jsonl", outcome.transcript.to_jsonl().as_bytes())?;
            for c in &outcome.checks {
                let mark = if c.ok { "ok" } else { "MISMATCH" };
                eprintln!("{}: {mark} (expected {}, got {})", c.name, c.expected, c.actual);
            }
            eprintln!("{}: {}", sc.name, if outcome.passed() { "passed" } else { "FAILED" });
            Ok(ExitCode::from(outcome.exit_code() as u8))
        }
        Command::Bench {
            sizes,
            reps,
            seed,
            sectors,
            sector_bits,
            challenge_count,
            group,
            out,
        } => {
            let cfg = BenchConfig {
                seed,
                reps,
                s: sectors,
                sector_bits,
                challenge_count,
            };
            let rows = if group == ToyGroup::GROUP_ID {
                bench::<ToyGroup>(&sizes, &cfg)?
            } else if group == Bls12::GROUP_ID {
                bench::<Bls12>(&sizes, &cfg)?
            } else {
                return Err(CliError::ScenarioInvalid(format!("unknown group {group:?}")));
            };
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf)?;
            write_out(&out, "bench.csv", &buf)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            ExitCode::from(2)
        }
    }
}
