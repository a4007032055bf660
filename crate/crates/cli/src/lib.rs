//! Command-line frontend for the manifest verifier: verdict commands,
//! package-database import, graph export, and the synthetic scaling
//! benchmark.

pub mod commands;
pub mod output;
pub mod synth;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "manivet", version, about = "Verify that configuration manifests are deterministic and idempotent")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that every valid application order produces the same result.
    Check(commands::CheckArgs),
    /// Check that applying the manifest twice equals applying it once.
    Idempotence(commands::CheckArgs),
    /// Add or replace a package in a package database.
    ImportPackages(commands::ImportArgs),
    /// Time the determinism check on a synthetic family of interfering
    /// resources.
    BenchSynthetic(commands::BenchArgs),
}

pub fn run(cli: &Cli) -> i32 {
    match &cli.command {
        Command::Check(args) => commands::cmd_check(args),
        Command::Idempotence(args) => commands::cmd_idempotence(args),
        Command::ImportPackages(args) => commands::cmd_import_packages(args),
        Command::BenchSynthetic(args) => commands::cmd_bench_synthetic(args),
    }
}
