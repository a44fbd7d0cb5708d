//! `panelkit` command-line front end.

mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toml::Value;

use config::RunConfig;
use pipeline::Stages;

#[derive(Parser)]
#[command(name = "panelkit", version, about = "Panel regressions, System GMM and random-forest importance tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Descriptive statistics of the model variables.
    Describe(Common),
    /// Pearson correlation matrix of the model variables.
    Correlation(Common),
    /// Fixed/random effects regressions per group and setting.
    FitLinear(Common),
    /// One-step System GMM per group.
    FitGmm(Common),
    /// Random forests with permutation importance.
    FitRf(Common),
    /// Forests plus sequential permutation tests and figures.
    Importance(Common),
    /// Linear, GMM and forest results side by side.
    Compare(Common),
    /// Every stage.
    All(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Start from the bundled synthetic panel preset.
    #[arg(long)]
    demo: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to PANELKIT_WORKERS, then 1.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override any config key, e.g. `--set forest.n_trees=100`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

/// Every violation found in a configuration.
#[derive(Debug)]
pub struct ConfigError(pub Vec<String>);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid configuration:")?;
        for v in &self.0 {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

fn resolve(c: &Common) -> Result<RunConfig, ConfigError> {
    let mut problems = Vec::new();
    let mut v = if c.demo {
        config::demo_preset()
    } else {
        Value::Table(toml::Table::new())
    };
    if let Some(path) = &c.config {
        match std::fs::read_to_string(path) {
            Ok(text) => match toml::from_str::<toml::Table>(&text) {
                Ok(t) => config::merge(&mut v, Value::Table(t)),
                Err(e) => problems.push(format!("{}: {}", path.display(), e.message())),
            },
            Err(e) => problems.push(format!("{}: {e}", path.display())),
        }
    } else if !c.demo {
        problems.push("pass --config FILE or --demo".into());
    }
    if let Ok(w) = std::env::var("PANELKIT_WORKERS") {
        match w.parse::<i64>() {
            Ok(n) => config::merge(&mut v, toml::toml! { workers = n }.into()),
            Err(_) => problems.push(format!("PANELKIT_WORKERS={w:?} is not an integer")),
        }
    }
    for o in &c.overrides {
        if let Err(e) = config::apply_override(&mut v, o) {
            problems.push(e);
        }
    }
    let table = v.as_table_mut().expect("root table");
    if let Some(s) = c.seed {
        match i64::try_from(s) {
            Ok(s) => {
                table.insert("seed".into(), Value::Integer(s));
            }
            Err(_) => problems.push(format!("seed {s} is too large")),
        }
    }
    if let Some(w) = c.workers {
        table.insert("workers".into(), Value::Integer(w as i64));
    }
    if let Some(o) = &c.out {
        table.insert("out".into(), Value::String(o.display().to_string()));
    }
    if !problems.is_empty() {
        return Err(ConfigError(problems));
    }
    let cfg = RunConfig::from_value(v).map_err(|e| ConfigError(vec![e]))?;
    let v = cfg.violations();
    if v.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError(v))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let all = Stages {
        describe: true,
        correlation: true,
        linear: true,
        gmm: true,
        forest: true,
        importance: true,
    };
    let none = Stages::default();
    let (common, stages) = match &cli.command {
        Command::Describe(c) => (c, Stages { describe: true, ..none }),
        Command::Correlation(c) => (c, Stages { correlation: true, ..none }),
        Command::FitLinear(c) => (c, Stages { linear: true, ..none }),
        Command::FitGmm(c) => (c, Stages { gmm: true, ..none }),
        Command::FitRf(c) => (c, Stages { forest: true, ..none }),
        Command::Importance(c) => (c, Stages { forest: true, importance: true, ..none }),
        Command::Compare(c) => (c, Stages { describe: false, correlation: false, ..all }),
        Command::All(c) => (c, all),
    };
    let cfg = match resolve(common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pipeline::run(&cfg, stages) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match e.downcast_ref::<ConfigError>() {
                Some(c) => eprintln!("error: {c}"),
                None => eprintln!("error: {e:#}"),
            }
            ExitCode::from(if e.is::<ConfigError>() { 2 } else { 1 })
        }
    }
}
