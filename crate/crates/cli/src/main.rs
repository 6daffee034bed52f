use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hitlab::harness::{
    emit_report, emit_sweep, load_config, preset_config, run_experiment, run_sweep, EmitFormat, ExperimentConfig,
    KeyValues, LawRegistry, MapSpec, PresetRegistry,
};
use hitlab::measure::{invariant_density, DensitySettings};
use hitlab::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "hitlab", version, about = "Hitting-time statistics of expanding interval maps")]
struct Cli {
    /// Base seed; every stage derives its own stream from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Number of trials for the hit-count distribution.
    #[arg(long, global = true)]
    trials: Option<u64>,

    /// Output directory (or file, for `density` and `pmf`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Config override `key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,

    /// Files to write: all, csv or text.
    #[arg(long, global = true, default_value = "all")]
    format: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a preset or a config file and compare with the predicted law.
    Run { target: String },
    /// Run a sweep over radii or parabolic levels.
    Sweep { target: String },
    /// Estimate an invariant density and print it as CSV.
    Density {
        /// Map, e.g. `doubling`, `perturbed:eps=0.1`, `pm:alpha=0.25`.
        map: String,
        #[arg(long, default_value_t = 1024)]
        bins: usize,
        #[arg(long, default_value_t = 10_000_000)]
        orbit_length: u64,
        #[arg(long, default_value_t = 10_000)]
        burn_in: u64,
    },
    /// Print a limit-law pmf table.
    Pmf {
        law: String,
        /// Law parameters `key=value`.
        params: Vec<String>,
        #[arg(long, default_value_t = 30)]
        k_max: usize,
    },
    /// List presets and laws.
    List,
}

enum Outcome {
    Pass,
    StatFail,
}

fn parse_pairs(items: &[String]) -> Result<KeyValues> {
    let mut kv = KeyValues::new();
    for it in items {
        let (k, v) = it
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{it}`")))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(kv)
}

/// Config from a preset name or a config file, with command-line overrides.
fn resolve_config(cli: &Cli, registry: &PresetRegistry, target: &str) -> Result<ExperimentConfig> {
    let overrides = parse_pairs(&cli.sets)?;
    let path = Path::new(target);
    let mut cfg = if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
        load_config(registry, &text)?.with_overrides(&overrides)?
    } else {
        preset_config(registry, target, &overrides, None)?
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io { path: p.into(), source: e }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: &Cli) -> Result<Outcome> {
    let format: EmitFormat = cli.format.parse()?;
    let registry = PresetRegistry::builtin();
    match &cli.command {
        Command::Run { target } => {
            let cfg = resolve_config(cli, &registry, target)?;
            let report = run_experiment(&registry, &cfg)?;
            print!("{}", report.summary_text());
            if let Some(dir) = &cli.out {
                emit_report(&report, dir, format)?;
            }
            Ok(if report.passed() { Outcome::Pass } else { Outcome::StatFail })
        }
        Command::Sweep { target } => {
            let cfg = resolve_config(cli, &registry, target)?;
            let sweep = run_sweep(&registry, &cfg)?;
            print!("{}", sweep.summary_text());
            if let Some(dir) = &cli.out {
                emit_sweep(&sweep, dir, format)?;
            }
            Ok(if sweep.passed() { Outcome::Pass } else { Outcome::StatFail })
        }
        Command::Density { map, bins, orbit_length, burn_in } => {
            let m = MapSpec::parse_compact(map)?.build()?;
            let settings = DensitySettings { bins: *bins, orbit_length: *orbit_length, burn_in: *burn_in };
            let d = invariant_density(&m, &settings, cli.seed.unwrap_or(1))?;
            write_or_print(cli.out.as_deref(), &d.to_csv()?)?;
            Ok(Outcome::Pass)
        }
        Command::Pmf { law, params, k_max } => {
            let laws = LawRegistry::builtin();
            let l = laws.get(law)?.build(&parse_pairs(params)?)?;
            write_or_print(cli.out.as_deref(), &l.pmf_table(*k_max)?.to_csv())?;
            Ok(Outcome::Pass)
        }
        Command::List => {
            println!("presets:");
            for p in registry.iter() {
                println!("  {:<28} {}", p.name(), p.summary());
            }
            println!("laws:");
            for l in LawRegistry::builtin().iter() {
                println!("  {:<28} {}", l.name(), l.usage());
            }
            Ok(Outcome::Pass)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(3);
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::StatFail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 3 })
        }
    }
}
