//! `svtail`: run experiments and write CSV, JSON summary and manifest.

mod commands;
mod config;
mod error;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgMatches};

use commands::{Command, COMMANDS, COMMON};
use config::{read_config_file, resolve, Config, SEED_ENV};
use error::CliError;
use output::{now, persist, read_manifest};

fn cli() -> clap::Command {
    let mut app = clap::Command::new("svtail")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Least singular value experiments for sparse Gaussian matrices")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for c in COMMANDS {
        let mut sub = clap::Command::new(c.name).about(c.about);
        for k in c.keys.iter().chain(COMMON) {
            let mut help = k.help.to_string();
            if !k.default.is_empty() {
                help.push_str(&format!(" [default: {}]", k.default));
            }
            sub = sub.arg(Arg::new(k.name).long(k.name).value_name("VALUE").help(help));
        }
        sub = sub.arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("flat key = value file; keys mirror the flag names"),
        );
        app = app.subcommand(sub);
    }
    app.subcommand(
        clap::Command::new("replay")
            .about("Re-run a saved manifest with its recorded configuration")
            .arg(Arg::new("manifest").required(true).value_name("MANIFEST"))
            .arg(Arg::new("out").long("out").value_name("DIR").help("write to DIR instead of the recorded directory"))
            .arg(Arg::new("jobs").long("jobs").value_name("N").help("worker cap")),
    )
}

fn flags(cmd: &Command, m: &ArgMatches) -> BTreeMap<String, String> {
    cmd.keys
        .iter()
        .chain(COMMON)
        .filter_map(|k| m.get_one::<String>(k.name).map(|v| (k.name.to_string(), v.clone())))
        .collect()
}

fn configure(name: &str, m: &ArgMatches) -> Result<(Config, &'static Command), CliError> {
    if name == "replay" {
        let path = PathBuf::from(m.get_one::<String>("manifest").expect("required"));
        let man = read_manifest(&path)?;
        let cmd = commands::find(&man.command)
            .ok_or_else(|| CliError::Config(format!("manifest names unknown command `{}`", man.command)))?;
        let mut values = man.config;
        for key in ["out", "jobs"] {
            if let Some(v) = m.get_one::<String>(key) {
                values.insert(key.to_string(), v.clone());
            }
        }
        let cfg = resolve(cmd.name, &cmd.defaults(), Some(values), None, BTreeMap::new())?;
        if cfg.hash() != man.config_hash {
            return Err(CliError::Config(format!("{}: configuration does not match its hash", path.display())));
        }
        return Ok((cfg, cmd));
    }
    let cmd = commands::find(name).expect("subcommand comes from the table");
    let file = m.get_one::<String>("config").map(|p| read_config_file(p.as_ref())).transpose()?;
    let env_seed = std::env::var(SEED_ENV).ok();
    Ok((resolve(cmd.name, &cmd.defaults(), file, env_seed, flags(cmd, m))?, cmd))
}

fn execute(args: Vec<String>) -> Result<PathBuf, CliError> {
    let matches = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let (cfg, cmd) = configure(name, sub)?;
    cfg.get::<u64>("seed")?;
    let jobs = cfg.jobs()?;
    let started = now();
    let art = svtail::exec::with_jobs(jobs, || (cmd.run)(&cfg))?;
    persist(&cfg, started, &art)
}

fn main() -> ExitCode {
    match execute(std::env::args().collect()) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("svtail: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
