//! Argument parsing and command dispatch for `sembench`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{self, BenchConfig, FlopsSource, OutputFormat, VariantSelection};
use crate::error::{BenchError, Result};
use crate::report::{self, PerfRow, RooflineRow};
use crate::{run, verify};

#[derive(Debug, Parser)]
#[command(name = "sembench", version, about = "Matrix-free spectral-element Poisson benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the invariant suite and print one line per property.
    Verify {
        /// Only properties whose name starts with this, e.g. `ax`.
        #[arg(long)]
        filter: Option<String>,
    },
    /// Benchmark a single element count.
    Bench(RunArgs),
    /// Benchmark a list of element counts.
    Sweep(RunArgs),
    /// Measure streaming bandwidth and the resulting roofline peak.
    Roofline(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Total element count.
    #[arg(long, conflicts_with = "sweep")]
    pub elements: Option<usize>,
    /// Comma-separated element counts.
    #[arg(long)]
    pub sweep: Option<String>,
    #[arg(long, default_value_t = config::DEFAULT_DEGREE)]
    pub degree: usize,
    #[arg(long, default_value_t = config::DEFAULT_ITERATIONS)]
    pub iterations: usize,
    /// reference, scratch, layered or all.
    #[arg(long)]
    pub variant: Option<String>,
    /// Time the achieved rate over the whole solve instead of excluding
    /// gather-scatter time.
    #[arg(long)]
    pub include_dssum: bool,
    #[arg(long, default_value_t = config::DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// csv, json or gnuplot.
    #[arg(long, default_value = "csv")]
    pub format: String,
    /// model or instrumented.
    #[arg(long, default_value = "model")]
    pub flops_source: String,
    #[arg(long, default_value_t = config::DEFAULT_PROBE_REPETITIONS)]
    pub probe_repetitions: usize,
    #[arg(long, default_value_t = config::DEFAULT_WARMUP_ITERATIONS)]
    pub warmup_iterations: usize,
}

impl RunArgs {
    /// Builds a validated config. `default_elements` and `default_variant`
    /// apply when the flags are absent.
    pub fn to_config(&self, default_elements: &[usize], default_variant: VariantSelection) -> Result<BenchConfig> {
        let elements = match (&self.elements, &self.sweep) {
            (Some(e), _) => vec![*e],
            (None, Some(list)) => config::parse_list(list)?,
            (None, None) => default_elements.to_vec(),
        };
        let cfg = BenchConfig {
            elements,
            degree: self.degree,
            iterations: self.iterations,
            variant: match &self.variant {
                Some(v) => v.parse()?,
                None => default_variant,
            },
            include_dssum: self.include_dssum,
            seed: self.seed,
            workers: self.workers,
            flops_source: self.flops_source.parse::<FlopsSource>()?,
            probe_repetitions: self.probe_repetitions,
            warmup_iterations: self.warmup_iterations,
            output: self.output.clone(),
            format: self.format.parse::<OutputFormat>()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("sembench: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Verify { filter } => {
            let summary = verify::run(filter.as_deref(), &mut io::stdout().lock())?;
            summary.into_result()
        }
        Command::Bench(args) => {
            let cfg = args.to_config(
                &[config::DEFAULT_ELEMENTS],
                VariantSelection::One(sem_core::KernelVariant::Layered),
            )?;
            let rows = run::cmd_bench(&cfg)?;
            emit_rows(&cfg, &rows)
        }
        Command::Sweep(args) => {
            let cfg = args.to_config(&config::DEFAULT_SWEEP, VariantSelection::All)?;
            let rows = run::cmd_sweep(&cfg, |r| eprintln!("{}", progress_line(r)))?;
            emit_rows(&cfg, &rows)
        }
        Command::Roofline(args) => {
            let cfg = args.to_config(&[config::DEFAULT_ELEMENTS], VariantSelection::All)?;
            let row = run::cmd_roofline(&cfg)?;
            emit_roofline(&cfg, &row)
        }
    }
}

fn progress_line(r: &PerfRow) -> String {
    if r.is_ok() {
        format!(
            "E={:<5} {:<9} {:>8.3} s  {:>7.3} GFlop/s  {:>5.1}% of roofline",
            r.elements,
            r.variant,
            r.solve_seconds,
            r.achieved_gflops,
            100.0 * r.roofline_fraction
        )
    } else {
        format!("E={:<5} {:<9} {}", r.elements, r.variant, r.status)
    }
}

fn writer(cfg: &BenchConfig) -> Result<Box<dyn Write>> {
    Ok(match &cfg.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_rows(cfg: &BenchConfig, rows: &[PerfRow]) -> Result<()> {
    let mut out = writer(cfg)?;
    match cfg.format {
        OutputFormat::Csv => report::write_csv(rows, &mut out)?,
        OutputFormat::Json => report::write_json_lines(rows, &mut out)?,
        OutputFormat::Gnuplot => report::write_gnuplot(rows, &mut out)?,
    }
    out.flush()?;
    if rows.iter().all(|r| !r.is_ok()) {
        return Err(BenchError::Resource("every run failed".into()));
    }
    Ok(())
}

fn emit_roofline(cfg: &BenchConfig, row: &RooflineRow) -> Result<()> {
    let mut out = writer(cfg)?;
    let rows = std::slice::from_ref(row);
    match cfg.format {
        OutputFormat::Csv => report::write_csv(rows, &mut out)?,
        OutputFormat::Json => report::write_json_lines(rows, &mut out)?,
        OutputFormat::Gnuplot => writeln!(
            out,
            "# {}\n# roofline\n# intensity gflops\n{} {}",
            report::SCHEMA_VERSION,
            row.intensity,
            row.roofline_peak_gflops
        )?,
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("sembench").chain(args.iter().copied())).unwrap()
    }

    fn run_args(cli: Cli) -> RunArgs {
        match cli.command {
            Command::Bench(a) | Command::Sweep(a) | Command::Roofline(a) => a,
            Command::Verify { .. } => panic!("not a run command"),
        }
    }

    #[test]
    fn sweep_defaults() {
        let a = run_args(parse(&["sweep"]));
        let cfg = a.to_config(&config::DEFAULT_SWEEP, VariantSelection::All).unwrap();
        assert_eq!(cfg, BenchConfig::default());
    }

    #[test]
    fn flags_map_to_config() {
        let a = run_args(parse(&[
            "bench",
            "--elements",
            "1024",
            "--degree",
            "7",
            "--iterations",
            "10",
            "--variant",
            "scratch",
            "--include-dssum",
            "--seed",
            "9",
            "--workers",
            "2",
            "--format",
            "json",
            "--flops-source",
            "instrumented",
        ]));
        let cfg = a.to_config(&[4096], VariantSelection::All).unwrap();
        assert_eq!(cfg.elements, vec![1024]);
        assert_eq!((cfg.degree, cfg.iterations, cfg.seed, cfg.workers), (7, 10, 9, 2));
        assert_eq!(cfg.variant, VariantSelection::One(sem_core::KernelVariant::Scratch));
        assert!(cfg.include_dssum);
        assert_eq!(cfg.format, OutputFormat::Json);
        assert_eq!(cfg.flops_source, FlopsSource::Instrumented);

        let a = run_args(parse(&["sweep", "--sweep", "448,896,1792,3584"]));
        let cfg = a.to_config(&config::DEFAULT_SWEEP, VariantSelection::All).unwrap();
        assert_eq!(cfg.elements, vec![448, 896, 1792, 3584]);
    }

    #[test]
    fn bad_configs_exit_with_two() {
        assert_eq!(main(["sembench", "bench", "--degree", "0"]), 2);
        assert_eq!(main(["sembench", "bench", "--variant", "fastest"]), 2);
        assert_eq!(main(["sembench", "sweep", "--sweep", "64,x"]), 2);
        assert_eq!(main(["sembench", "bench", "--elements", "8", "--sweep", "8"]), 2);
        assert_eq!(main(["sembench", "launch"]), 2);
        assert_eq!(main(["sembench", "verify", "--filter", "nothing"]), 2);
    }

    #[test]
    fn verify_filter_exits_zero() {
        assert_eq!(main(["sembench", "verify", "--filter", "model"]), 0);
    }
}
