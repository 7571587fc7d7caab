use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bhcluster::commands;
use bhcluster::config::{Command, RunConfig};
use bhcluster::Error;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (report schema 1)");

#[derive(Parser)]
#[command(name = "bhcluster", version = VERSION, about = "Cluster expansion and exact oracle for truncated Bose-Hubbard models")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    config: PathBuf,
    /// Override a config value, `section.key=value`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Sub {
    /// Truncated cluster expansion estimate of log Z.
    Approx(RunArgs),
    /// Exact diagonalization: log Z, moments, occupations, mutual information.
    Exact(RunArgs),
    /// Expansion vs. exact oracle over m and q lists.
    Compare(RunArgs),
    /// Connected correlations against distance from an anchor site.
    Clustering(RunArgs),
    /// Single-site moments over a list of inverse temperatures.
    Moments(RunArgs),
    /// Truncated Kotecky-Preiss diagnostic per site.
    Kp(RunArgs),
}

fn error_json(e: &Error) -> String {
    let mut obj = serde_json::json!({
        "error": {
            "kind": e.kind(),
            "exit_code": e.exit_code(),
            "message": e.to_string(),
        }
    });
    match e {
        Error::Config(msgs) => obj["error"]["messages"] = serde_json::json!(msgs),
        Error::ResourceCap { required, allowed, .. } => {
            obj["error"]["required"] = serde_json::json!(required);
            obj["error"]["allowed"] = serde_json::json!(allowed);
        }
        _ => {}
    }
    obj.to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Approx(a) => (Command::Approx, a),
        Sub::Exact(a) => (Command::Exact, a),
        Sub::Compare(a) => (Command::Compare, a),
        Sub::Clustering(a) => (Command::Clustering, a),
        Sub::Moments(a) => (Command::Moments, a),
        Sub::Kp(a) => (Command::Kp, a),
    };
    let outcome = RunConfig::from_file(&args.config, &args.set, command).and_then(|cfg| {
        let text = commands::run(command, &cfg)?;
        match &cfg.path {
            Some(p) => std::fs::write(p, text)?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(())
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
