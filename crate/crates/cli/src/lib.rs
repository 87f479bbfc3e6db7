//! Command-line driver: parses a run configuration, dispatches to a study
//! and writes its rows as CSV or JSON with a reproducibility header.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dilute::experiments::{
    cw_limit_study, derivative_identity_study, fluctuation_point, fluctuation_scan, overlap_covariance_study,
    perturbed_pressure_study, pressure_gap_study, scaling_study, standard_overlap_probes, MethodChoice,
    SamplerPlan, TableRow,
};
use dilute::rng::RNG_ALGORITHM;
use dilute::theory::beta_from_beta_prime;
use dilute::{ModelParams, SamplerConfig};

/// Master seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_071_113;

/// Environment variable that sets the worker thread count.
pub const THREADS_ENV: &str = "DILUTE_THREADS";

#[derive(Parser, Debug)]
#[command(name = "dilute", version, about = "Dilute mean-field ferromagnet studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Distribution of √N·m along a β′ grid (sampler)
    Fluct {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        temperature: TemperatureGrid,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// N·⟨m²⟩ across system sizes, exact below the crossover
    Scaling {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        temperature: Temperature,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        #[arg(long, default_value_t = 20)]
        crossover: usize,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Multi-overlap variances and cross-covariances
    Overlap {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        temperature: Temperature,
        /// Overlap orders to probe
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        orders: Vec<usize>,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Quenched pressure against Curie–Weiss along an α grid at fixed β′
    Cwlimit {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        beta_prime: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// A_N − Ã_S and the Curie–Weiss comparison across sizes
    Gap {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        temperature: Temperature,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Perturbed pressure Ā(λ) on a λ grid
    Perturb {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        temperature: Temperature,
        #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
        lambda: Vec<f64>,
        /// Attach the O(1/N) bound for λ ≤ λ0 − β′
        #[arg(long)]
        lambda0: Option<f64>,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Both sides of the α-derivative identity
    Ident {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        temperature: Temperature,
        #[arg(long, default_value_t = 0.05)]
        d_alpha: f64,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Quenched pressure by exact enumeration at one point
    Exact {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        temperature: Temperature,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Sampler measurement of √N·m at one point, any temperature
    Mc {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        temperature: Temperature,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Serialize)]
#[group(required = true, multiple = false)]
struct Temperature {
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    beta_prime: Option<f64>,
}

impl Temperature {
    fn beta(&self, alpha: f64) -> dilute::Result<f64> {
        match (self.beta, self.beta_prime) {
            (Some(b), _) => Ok(b),
            (None, Some(bp)) => beta_from_beta_prime(alpha, bp),
            (None, None) => unreachable!("clap requires one of --beta/--beta-prime"),
        }
    }
}

#[derive(Args, Debug, Serialize)]
#[group(required = true, multiple = false)]
struct TemperatureGrid {
    #[arg(long, value_delimiter = ',')]
    beta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    beta_prime: Option<Vec<f64>>,
}

impl TemperatureGrid {
    fn beta_primes(&self, alpha: f64) -> Vec<f64> {
        match (&self.beta, &self.beta_prime) {
            (Some(bs), _) => bs.iter().map(|&b| dilute::theory::beta_prime(alpha, b)).collect(),
            (None, Some(bps)) => bps.clone(),
            (None, None) => unreachable!("clap requires one of --beta/--beta-prime"),
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct SamplerArgs {
    /// Measurements per chain
    #[arg(long, default_value_t = 20)]
    measurements: usize,
    /// Replicas per disorder realization
    #[arg(long, default_value_t = 1)]
    replicas: usize,
    /// Fixed burn-in sweeps (with --thin, skips the pilot run)
    #[arg(long, requires = "thin")]
    burn_in: Option<usize>,
    /// Sweeps between measurements
    #[arg(long, requires = "burn_in")]
    thin: Option<usize>,
}

impl SamplerArgs {
    fn plan(&self) -> SamplerPlan {
        match (self.burn_in, self.thin) {
            (Some(burn_in_sweeps), Some(thin)) => SamplerPlan::Fixed(SamplerConfig {
                burn_in_sweeps,
                measure_sweeps: thin * self.measurements,
                thin,
                n_replicas: self.replicas,
            }),
            _ => SamplerPlan::Auto {
                n_measurements: self.measurements,
                n_replicas: self.replicas,
            },
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct Common {
    /// Number of disorder realizations
    #[arg(long, default_value_t = 100)]
    disorder: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output file, `-` for stdout
    #[arg(long, default_value = "-")]
    #[serde(skip)]
    out: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads; 0 uses every core. Never affects results.
    #[arg(long, env = THREADS_ENV)]
    #[serde(skip)]
    threads: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    Auto,
    Exact,
    Sampler,
}

#[derive(Serialize)]
struct Meta<'a> {
    program: &'static str,
    version: &'static str,
    command: &'a str,
    master_seed: u64,
    rng: &'static str,
    config: &'a Command,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Fluct { .. } => "fluct",
            Command::Scaling { .. } => "scaling",
            Command::Overlap { .. } => "overlap",
            Command::Cwlimit { .. } => "cwlimit",
            Command::Gap { .. } => "gap",
            Command::Perturb { .. } => "perturb",
            Command::Ident { .. } => "ident",
            Command::Exact { .. } => "exact",
            Command::Mc { .. } => "mc",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Fluct { common, .. }
            | Command::Scaling { common, .. }
            | Command::Overlap { common, .. }
            | Command::Cwlimit { common, .. }
            | Command::Gap { common, .. }
            | Command::Perturb { common, .. }
            | Command::Ident { common, .. }
            | Command::Exact { common, .. }
            | Command::Mc { common, .. } => common,
        }
    }

    /// Grids default to CSV, single points to JSON.
    fn default_format(&self) -> Format {
        match self {
            Command::Ident { .. } | Command::Exact { .. } | Command::Mc { .. } => Format::Json,
            _ => Format::Csv,
        }
    }
}

struct Output<'a> {
    meta: Meta<'a>,
    format: Format,
}

impl Output<'_> {
    fn write<R: TableRow + Serialize>(&self, rows: &[R], sink: &mut dyn Write) -> anyhow::Result<()> {
        match self.format {
            Format::Json => {
                let doc = serde_json::json!({ "meta": &self.meta, "rows": rows });
                serde_json::to_writer_pretty(&mut *sink, &doc)?;
                writeln!(sink)?;
            }
            Format::Csv => {
                writeln!(sink, "# {} {}", self.meta.program, self.meta.version)?;
                writeln!(sink, "# command: {}", self.meta.command)?;
                writeln!(sink, "# master_seed: {}", self.meta.master_seed)?;
                writeln!(sink, "# rng: {}", self.meta.rng)?;
                writeln!(sink, "# config: {}", serde_json::to_string(self.meta.config)?)?;
                let mut w = csv::Writer::from_writer(&mut *sink);
                w.write_record(R::columns())?;
                for r in rows {
                    w.write_record(r.record())?;
                }
                w.flush()?;
            }
        }
        Ok(())
    }
}

fn execute(cmd: &Command, out: &Output, sink: &mut dyn Write) -> anyhow::Result<()> {
    let c = cmd.common();
    match cmd {
        Command::Fluct {
            n,
            alpha,
            temperature,
            sampler,
            ..
        } => {
            let rows = fluctuation_scan(*n, &temperature.beta_primes(*alpha), *alpha, c.disorder, &sampler.plan(), c.seed)?;
            out.write(&rows, sink)
        }
        Command::Scaling {
            n,
            alpha,
            temperature,
            method,
            crossover,
            sampler,
            ..
        } => {
            let method = match method {
                MethodArg::Auto => MethodChoice::Auto { crossover: *crossover },
                MethodArg::Exact => MethodChoice::Exact,
                MethodArg::Sampler => MethodChoice::Sampler,
            };
            let beta = temperature.beta(*alpha)?;
            let rows = scaling_study(n, *alpha, beta, c.disorder, method, &sampler.plan(), c.seed)?;
            out.write(&rows, sink)
        }
        Command::Overlap {
            n,
            alpha,
            temperature,
            orders,
            sampler,
            ..
        } => {
            if orders.contains(&0) {
                bail!("overlap orders must be positive");
            }
            let params = ModelParams::new(*n, *alpha, temperature.beta(*alpha)?)?;
            let probes = standard_overlap_probes(orders);
            let rows = overlap_covariance_study(&probes, &params, c.disorder, &sampler.plan(), c.seed)?;
            out.write(&rows, sink)
        }
        Command::Cwlimit { n, beta_prime, alpha, .. } => {
            let rows = cw_limit_study(*beta_prime, alpha, *n, c.disorder, c.seed)?;
            out.write(&rows, sink)
        }
        Command::Gap {
            n, alpha, temperature, ..
        } => {
            let rows = pressure_gap_study(n, *alpha, temperature.beta(*alpha)?, c.disorder, c.seed)?;
            out.write(&rows, sink)
        }
        Command::Perturb {
            n,
            alpha,
            temperature,
            lambda,
            lambda0,
            ..
        } => {
            let params = ModelParams::new(*n, *alpha, temperature.beta(*alpha)?)?;
            let rows = perturbed_pressure_study(lambda, *lambda0, &params, c.disorder, c.seed)?;
            out.write(&rows, sink)
        }
        Command::Ident {
            n,
            alpha,
            temperature,
            d_alpha,
            ..
        } => {
            let params = ModelParams::new(*n, *alpha, temperature.beta(*alpha)?)?;
            let row = derivative_identity_study(&params, *d_alpha, c.disorder, c.seed)?;
            out.write(&[row], sink)
        }
        Command::Exact {
            n, alpha, temperature, ..
        } => {
            let rows = pressure_gap_study(&[*n], *alpha, temperature.beta(*alpha)?, c.disorder, c.seed)?;
            out.write(&rows, sink)
        }
        Command::Mc {
            n,
            alpha,
            temperature,
            sampler,
            ..
        } => {
            let params = ModelParams::new(*n, *alpha, temperature.beta(*alpha)?)?;
            let row = fluctuation_point(&params, c.disorder, &sampler.plan(), c.seed, 0)?;
            out.write(&[row], sink)
        }
    }
}

fn open_sink(path: &PathBuf) -> anyhow::Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufWriter::new(io::stdout().lock())));
    }
    let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(Box::new(BufWriter::new(file)))
}

fn run_command(cmd: &Command) -> anyhow::Result<()> {
    let common = cmd.common();
    let format = common.format.unwrap_or_else(|| cmd.default_format());
    let output = Output {
        meta: Meta {
            program: "dilute",
            version: env!("CARGO_PKG_VERSION"),
            command: cmd.name(),
            master_seed: common.seed,
            rng: RNG_ALGORITHM,
            config: cmd,
        },
        format,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads.unwrap_or(0))
        .build()
        .context("cannot start worker threads")?;
    // open the sink first so an unwritable path fails before any compute
    let mut sink = open_sink(&common.out)?;
    let mut buffer = Vec::new();
    pool.install(|| execute(cmd, &output, &mut buffer))?;
    sink.write_all(&buffer)?;
    sink.flush()?;
    Ok(())
}

/// Runs the program on `argv` (including the program name) and returns the
/// process exit code: 0 on success, 1 on a run error, 2 on a usage error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_command(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn temperature_resolution() {
        let t = Temperature {
            beta: None,
            beta_prime: Some(0.5),
        };
        let b = t.beta(2.0).unwrap();
        assert!((dilute::theory::beta_prime(2.0, b) - 0.5).abs() < 1e-14);
        let bad = Temperature {
            beta: None,
            beta_prime: Some(3.0),
        };
        assert!(bad.beta(1.0).is_err());
    }

    #[test]
    fn fixed_schedule_from_flags() {
        let s = SamplerArgs {
            measurements: 10,
            replicas: 2,
            burn_in: Some(50),
            thin: Some(3),
        };
        assert_eq!(
            s.plan(),
            SamplerPlan::Fixed(SamplerConfig {
                burn_in_sweeps: 50,
                measure_sweeps: 30,
                thin: 3,
                n_replicas: 2
            })
        );
    }
}
