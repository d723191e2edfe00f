#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

mod commands;
mod config;
mod output;

use commands::Command;
use config::{ConfigError, RawConfig, RunConfig};
use output::RunOutput;

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Numerical experiments for Hermitian-Yang-Mills gluing on blowups.
///
/// Options are `--key value` pairs naming a config key, bare (`--delta`) or
/// qualified (`--weighted.delta`). `--config FILE` reads a flat
/// `[section] key = value` file first; flags win over the file.
#[derive(Parser, Debug)]
#[command(name = "hymglue", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// `--config FILE`, `--out DIR` and `--key value` overrides.
    #[arg(
        trailing_var_arg = true,
        allow_hyphen_values = true,
        value_name = "OPTIONS"
    )]
    options: Vec<String>,
}

/// Splits `--config` and `--out` off the override list.
fn take_path(options: &mut Vec<String>, flag: &str) -> Result<Option<PathBuf>, ConfigError> {
    let (bare, prefix) = (format!("--{flag}"), format!("--{flag}="));
    let mut found = None;
    let mut i = 0;
    while i < options.len() {
        if let Some(v) = options[i].strip_prefix(&prefix) {
            found = Some(PathBuf::from(v));
            options.remove(i);
        } else if options[i] == bare {
            if i + 1 >= options.len() {
                return Err(ConfigError::Flag(format!("option {bare} needs a value")));
            }
            found = Some(PathBuf::from(options.remove(i + 1)));
            options.remove(i);
        } else if options[i].starts_with("--") && !options[i].contains('=') {
            // `--key value`: skip the value too, it may itself start with `-`.
            i += 2;
        } else {
            i += 1;
        }
    }
    Ok(found)
}

fn load(mut options: Vec<String>) -> Result<RunConfig, ConfigError> {
    let config = take_path(&mut options, "config")?;
    let out = take_path(&mut options, "out")?;
    let mut raw = RawConfig::defaults();
    if let Some(path) = config {
        raw.load_file(&path)?;
    }
    raw.apply_flags(&options)?;
    if let Some(dir) = out {
        raw.apply_flags(&["--run.output".into(), dir.display().to_string()])?;
    }
    RunConfig::from_raw(raw)
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("HYMGLUE_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|t| *t > 0)
        .ok_or_else(|| format!("HYMGLUE_THREADS: `{value}` is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| format!("HYMGLUE_THREADS: {e}"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("config error: {msg}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let cfg = match load(cli.options) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let name = cli.command.name();
    let result = RunOutput::new(&cfg.output).and_then(|mut out| {
        commands::run(cli.command, &cfg, &mut out)?;
        for c in &out.checks {
            println!(
                "[{}] {}: {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        out.finish(&name, cfg.scenario.id.name(), &cfg.raw.resolved())
    });
    match result {
        Ok(pass) => {
            println!("manifest: {}", cfg.output.join(output::MANIFEST).display());
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILED)
            }
        }
        Err(e) => {
            eprintln!("runtime error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
