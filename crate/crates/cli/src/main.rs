use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ura_core::capacity::{design_report, DesignPoint};
use ura_core::config::rate_report;
use ura_core::detector::write_gamma_csv;
use ura_core::sim::{
    monte_carlo_sweep_with, run_point, run_trial_with_gamma, summarize, sweep_sidecar, write_sweep_csv, SimContext,
    SweepAxis,
};
use ura_core::{selftest, ConfigError, SystemConfig, ValidConfig};

#[derive(Parser)]
#[command(name = "ura-sim", version, about = "Massive-MIMO unsourced random access simulator")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file (default: the reference setup).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Active users for the reference setup; ignored with --config.
    #[arg(long, default_value_t = 50)]
    ka: usize,
    /// Receive antennas for the reference setup; ignored with --config.
    #[arg(long, default_value_t = 64)]
    antennas: usize,
    /// Master seed (default: the configuration's trial seed).
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<ValidConfig> {
        let raw = match &self.config {
            Some(p) => SystemConfig::from_json_file(p)?,
            None => SystemConfig::reference(self.ka, self.antennas),
        };
        Ok(raw.validate()?)
    }

    fn master_seed(&self, cfg: &ValidConfig) -> u64 {
        self.seed.unwrap_or(cfg.seeds().trial)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Ka,
    Antennas,
    Ebn0,
}

impl From<Axis> for SweepAxis {
    fn from(a: Axis) -> Self {
        match a {
            Axis::Ka => SweepAxis::ActiveUsers,
            Axis::Antennas => SweepAxis::Antennas,
            Axis::Ebn0 => SweepAxis::Ebn0Db,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run trials at one configuration and print the error rates as JSON.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Also write the JSON summary here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the first trial's estimated activity vectors as CSV.
        #[arg(long)]
        gamma_out: Option<PathBuf>,
    },
    /// Sweep one parameter; CSV to --out (or stdout) plus a JSON sidecar.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the design-point report of a configuration.
    Design {
        #[command(flatten)]
        common: Common,
        /// Inner-decoder constant.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// NNLS error-bound constant.
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[arg(long)]
        json: bool,
    },
    /// Run the built-in invariant checks.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Write the codebook of a configuration in the binary exchange format.
    Codebook {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a configuration as JSON (a starting point for --config).
    Config {
        #[command(flatten)]
        common: Common,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Run {
            common,
            trials,
            out,
            gamma_out,
        } => {
            if trials == 0 {
                bail!("--trials must be at least 1");
            }
            let cfg = common.load()?;
            let seed = common.master_seed(&cfg);
            let ctx = SimContext::new(cfg.clone());
            let results = run_point(&ctx, 0, trials, seed);
            if let Some(path) = gamma_out {
                let (_, gammas) = run_trial_with_gamma(&ctx, results[0].trial_seed);
                write_gamma_csv(create(&path)?, &gammas)?;
            }
            let point = summarize(cfg.active_users() as f64, &results);
            let summary = serde_json::json!({
                "config": cfg.raw(),
                "rates": rate_report(&cfg),
                "master_seed": seed,
                "metrics": point,
                "trials": results.iter().map(|r| serde_json::json!({
                    "trial_seed": r.trial_seed,
                    "misdetections": r.misdetections,
                    "false_alarms": r.false_alarms,
                    "decoded": r.decoded.len(),
                    "overflow": r.overflow,
                    "list_sizes": r.list_sizes,
                    "detect_ms": r.timings.detect_ms,
                    "decode_ms": r.timings.decode_ms,
                })).collect::<Vec<_>>(),
            });
            let text = serde_json::to_string_pretty(&summary)?;
            if let Some(path) = out {
                let mut w = create(&path)?;
                writeln!(w, "{text}")?;
                w.flush()?;
            }
            println!("{text}");
        }
        Command::Sweep {
            common,
            axis,
            values,
            trials,
            out,
        } => {
            if trials == 0 {
                bail!("--trials must be at least 1");
            }
            let cfg = common.load()?;
            let seed = common.master_seed(&cfg);
            let axis = SweepAxis::from(axis);
            let sweep = monte_carlo_sweep_with(&cfg, axis, &values, trials, seed, |p| {
                eprintln!(
                    "{} = {}: p_md {:.4} p_fa {:.4} P_e {:.4} (+-{:.4}, {} trials)",
                    axis.name(),
                    p.value,
                    p.p_md,
                    p.p_fa,
                    p.p_e,
                    p.ci95,
                    p.trials
                );
            })?;
            let sidecar = serde_json::to_string_pretty(&sweep_sidecar(cfg.raw(), &sweep))?;
            match out {
                Some(path) => {
                    write_sweep_csv(create(&path)?, &sweep)?;
                    let mut w = create(&path.with_extension("json"))?;
                    writeln!(w, "{sidecar}")?;
                    w.flush()?;
                }
                None => write_sweep_csv(std::io::stdout().lock(), &sweep)?,
            }
        }
        Command::Design { common, c, kappa, json } => {
            let cfg = common.load()?;
            let rates = rate_report(&cfg);
            let report = design_report(DesignPoint {
                index_bits: cfg.index_bits(),
                outer_rate: rates.outer_rate,
                subslots: cfg.subslots(),
                blocklength: cfg.blocklength(),
                active_users: cfg.active_users(),
                ebn0: rates.ebn0,
                c,
                kappa,
            });
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.to_text());
            }
        }
        Command::Selftest { seed } => {
            let checks = selftest::run_all(seed);
            for c in &checks {
                println!("{:<20} {}  {}", c.name, if c.passed { "ok" } else { "FAILED" }, c.detail);
            }
            if checks.iter().any(|c| !c.passed) {
                bail!("SELFTEST_FAILED");
            }
        }
        Command::Codebook { common, out } => {
            let cfg = common.load()?;
            let ctx = SimContext::new(cfg);
            let mut w = create(&out)?;
            ctx.codebook().write_binary(&mut w)?;
            w.flush()?;
        }
        Command::Config { common } => {
            println!("{}", common.load()?.raw().to_json_pretty());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match e.downcast_ref::<ConfigError>() {
                Some(c) => eprintln!("error: {}: {e}", c.code()),
                None => eprintln!("error: {e:#}"),
            }
            ExitCode::from(2)
        }
    }
}
