//! Command-line front end: single trials, sweeps over C, edge-count
//! experiments, and lower-bound experiments.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use geopert::harness::{
    edge_count_experiment, lower_bound_experiment, run_trial, sweep_c, sweep_to_csv, ConfigError,
    HostSpec, Keep, Outcome, TrialConfig,
};
use geopert::Norm;

#[derive(Parser)]
#[command(
    name = "geopert",
    about = "k-th powers of Hamilton cycles in dense graphs perturbed by random geometric graphs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Shared parameter flags. Values may also come from a flat `key=value`
/// config file; flags win on conflict.
#[derive(Args, Debug, Default, Clone)]
struct CommonArgs {
    /// Flat key=value config file (keys: n,d,k,alpha,C,r,norm,host,pattern,seed,trials)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Density constant; radius becomes (C/n)^(1/d)
    #[arg(long = "C")]
    c: Option<f64>,
    /// Radius, as an alternative to C
    #[arg(long)]
    r: Option<f64>,
    /// Norm: an integer p >= 1, or "inf"
    #[arg(long)]
    norm: Option<String>,
    /// random | extremal-power | extremal-factor | file:PATH
    #[arg(long)]
    host: Option<String>,
    /// Pattern graph name (K2, K3, K4, C4, C5, P3, triangle)
    #[arg(long)]
    pattern: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel trials (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
    /// Output path (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single end-to-end trial and print its record as JSON
    Trial {
        #[command(flatten)]
        common: CommonArgs,
        /// Include the cyclic order in the output
        #[arg(long)]
        emit_order: bool,
        /// Include the construction plan in the output
        #[arg(long)]
        emit_plan: bool,
    },
    /// Monte Carlo success-rate curve over a list of C values
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Sweep axis, e.g. --sweep C=200,400,800
        #[arg(long)]
        sweep: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// csv (default) or json
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Mean edge count of the geometric graph against the expectation interval
    Edges {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Extremal host plus a sparse geometric graph: how little G adds
    LowerBound {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn read_config_file(path: &PathBuf) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ConfigError::Invalid(format!(
                "{}:{}: expected key=value, got '{line}'",
                path.display(),
                lineno + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

struct Resolved {
    config: TrialConfig,
    trials_default: Option<usize>,
}

fn resolve(common: &CommonArgs) -> Result<Resolved, ConfigError> {
    let file = match &common.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    fn pick<T: std::str::FromStr>(
        flag: Option<T>,
        file: &BTreeMap<String, String>,
        key: &str,
    ) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match file.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| ConfigError::Invalid(format!("config key {key}: {e}"))),
            None => Ok(None),
        }
    }
    let require = |what: &str, missing: bool| -> Result<(), ConfigError> {
        if missing {
            Err(ConfigError::Invalid(format!("{what} is required")))
        } else {
            Ok(())
        }
    };
    let n = pick(common.n, &file, "n")?;
    require("--n", n.is_none())?;
    let d = pick(common.d, &file, "d")?.unwrap_or(2);
    let k = pick(common.k, &file, "k")?.unwrap_or(1);
    let alpha = pick(common.alpha, &file, "alpha")?.unwrap_or(0.5);
    let c = pick(common.c, &file, "C")?;
    let r = pick(common.r, &file, "r")?;
    let norm: Norm = pick(common.norm.clone(), &file, "norm")?
        .map(|s: String| s.parse::<Norm>())
        .transpose()
        .map_err(ConfigError::Invalid)?
        .unwrap_or(Norm::L2);
    let host: HostSpec = pick(common.host.clone(), &file, "host")?
        .map(|s: String| s.parse::<HostSpec>())
        .transpose()
        .map_err(ConfigError::Invalid)?
        .unwrap_or(HostSpec::Random);
    let pattern = pick(common.pattern.clone(), &file, "pattern")?;
    let seed = pick(common.seed, &file, "seed")?.unwrap_or(0);
    let trials_default = pick(None::<usize>, &file, "trials")?;
    Ok(Resolved {
        config: TrialConfig {
            n: n.unwrap(),
            d,
            k,
            alpha,
            c,
            r,
            norm,
            host,
            pattern,
            seed,
            probe_override: None,
        },
        trials_default,
    })
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), ConfigError> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn parse_sweep_axis(spec: &str) -> Result<Vec<f64>, ConfigError> {
    let values = spec
        .strip_prefix("C=")
        .ok_or_else(|| ConfigError::Invalid(format!("--sweep expects C=a,b,c, got '{spec}'")))?;
    values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| ConfigError::Invalid(format!("bad sweep value '{v}'")))
        })
        .collect()
}

fn set_jobs(jobs: Option<usize>) {
    if let Some(j) = jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
}

/// Exit codes: 0 clean, 2 config error, 3 verification violation.
fn run(cli: Cli) -> Result<u8, ConfigError> {
    match cli.command {
        Command::Trial {
            common,
            emit_order,
            emit_plan,
        } => {
            set_jobs(common.jobs);
            let resolved = resolve(&common)?;
            let record = run_trial(
                &resolved.config,
                Keep {
                    order: emit_order,
                    plan: emit_plan,
                },
            )?;
            let violated =
                matches!(record.outcome, Outcome::Success) && !record.verify_ok;
            emit(&common.out, &serde_json::to_string_pretty(&record).unwrap())?;
            Ok(if violated { 3 } else { 0 })
        }
        Command::Sweep {
            common,
            sweep,
            trials,
            format,
        } => {
            set_jobs(common.jobs);
            let resolved = resolve(&common)?;
            let axis = parse_sweep_axis(&sweep)?;
            let trials = resolved.trials_default.unwrap_or(trials);
            let result = sweep_c(&resolved.config, &axis, trials)?;
            let text = match format.as_str() {
                "csv" => sweep_to_csv(&result, &resolved.config),
                "json" => serde_json::to_string_pretty(&result).unwrap(),
                other => {
                    return Err(ConfigError::Invalid(format!(
                        "unknown format '{other}' (expected csv or json)"
                    )))
                }
            };
            emit(&common.out, &text)?;
            Ok(if result.all_verified { 0 } else { 3 })
        }
        Command::Edges { common, trials } => {
            set_jobs(common.jobs);
            let resolved = resolve(&common)?;
            let cfg = &resolved.config;
            let r = match (cfg.r, cfg.c) {
                (Some(r), _) => r,
                (None, Some(c)) => (c / cfg.n as f64).powf(1.0 / cfg.d as f64),
                (None, None) => {
                    return Err(ConfigError::Invalid("one of --r or --C is required".into()))
                }
            };
            let trials = resolved.trials_default.unwrap_or(trials);
            let stats = edge_count_experiment(cfg.n, cfg.d, cfg.norm, r, trials, cfg.seed)?;
            emit(&common.out, &serde_json::to_string_pretty(&stats).unwrap())?;
            Ok(0)
        }
        Command::LowerBound { common } => {
            let resolved = resolve(&common)?;
            let cfg = &resolved.config;
            let c_small = cfg
                .c
                .ok_or_else(|| ConfigError::Invalid("--C is required".into()))?;
            let report = lower_bound_experiment(
                cfg.n, cfg.d, cfg.k, cfg.alpha, c_small, cfg.norm, cfg.seed,
            )?;
            emit(&common.out, &serde_json::to_string_pretty(&report).unwrap())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
