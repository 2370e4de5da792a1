//! `lsb`: validity radii, sweeps and oracle checks from JSON configurations.
//!
//! Exit codes: 0 success, 1 input or configuration error, 2 numerical
//! failure. `LSB_THREADS` caps the worker pool.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lsbound::experiments::{
    load_config, render_sweep_svg, run_bound, run_frontier, run_sweep, run_verify, write_cells_csv,
    write_frontier_csv, write_records_csv, BoundConfig, FrontierConfig, SweepConfig, VerifyConfig,
};
use lsbound::graph::Graph;
use lsbound::{Error, Result, Strategy};

#[derive(Debug, Parser)]
#[command(name = "lsb", version, about = "Validity radii for Lyapunov–Schmidt reduction of network models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print degree and extreme adjacency eigenvalues of an edge-list graph as CSV.
    Spectrum { edgelist: PathBuf },
    /// Compute a bound certificate; JSON on stdout, summary on stderr.
    Bound { config: PathBuf },
    /// Random-regular-graph sweep; per-graph CSV on stdout unless --records.
    Sweep {
        config: PathBuf,
        /// Write the error-bar charts to this SVG file.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Write per-graph rows here instead of stdout.
        #[arg(long)]
        records: Option<PathBuf>,
        /// Write per-cell mean and standard deviation here instead of stderr.
        #[arg(long)]
        aggregate: Option<PathBuf>,
    },
    /// Run the implicit-map oracle on a fraction of the certified ball; JSON on stdout.
    Verify {
        config: PathBuf,
        /// Dump per-grid-point outcomes as CSV.
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Scan a grid of (R_par, R_perp) balls; CSV on stdout.
    Frontier { config: PathBuf },
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("LSB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::Input(format!("LSB_THREADS must be a positive integer, got {value:?}")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Input(format!("cannot configure thread pool: {e}")))?;
    log::info!("worker pool capped at {threads} threads");
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn print_json(value: serde_json::Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &value)?;
    writeln!(out)?;
    Ok(())
}

fn spectrum(path: &Path) -> Result<()> {
    let g = Graph::from_edge_list(&std::fs::read_to_string(path)?)?;
    let s = g.spectrum();
    let (l1, l2, ln) = (s[0], s.get(1).copied().unwrap_or(f64::NAN), s[s.len() - 1]);
    let k = g.degree().map_or("irregular".to_string(), |k| k.to_string());
    let mut out = io::stdout().lock();
    writeln!(out, "n,k,lambda1,lambda2,lambda_min,lambda_prime")?;
    writeln!(out, "{},{k},{l1},{l2},{ln},{}", g.n(), l2.abs().max(ln.abs()))?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let strategy = Strategy::Parallel;
    match cli.command {
        Command::Spectrum { edgelist } => spectrum(&edgelist),
        Command::Bound { config } => {
            let (cfg, base): (BoundConfig, _) = load_config(&config)?;
            let out = run_bound(&cfg, &base, strategy)?;
            print_json(serde_json::to_value(&out)?)?;
            eprint!("{}", out.summary());
            Ok(())
        }
        Command::Sweep {
            config,
            svg,
            records,
            aggregate,
        } => {
            let (cfg, _): (SweepConfig, _) = load_config(&config)?;
            let result = run_sweep(&cfg, strategy)?;
            match records {
                Some(p) => write_records_csv(&result.records, create(&p)?)?,
                None => write_records_csv(&result.records, io::stdout().lock())?,
            }
            match aggregate {
                Some(p) => write_cells_csv(&result.cells, create(&p)?)?,
                None => write_cells_csv(&result.cells, io::stderr().lock())?,
            }
            for s in &result.skipped {
                log::warn!("skipped cell n = {}, k = {}: {}", s.n, s.k, s.reason);
            }
            if let Some(p) = svg {
                std::fs::write(p, render_sweep_svg(&result.cells))?;
            }
            Ok(())
        }
        Command::Verify { config, samples } => {
            let (cfg, base): (VerifyConfig, _) = load_config(&config)?;
            let out = run_verify(&cfg, &base, strategy)?;
            if let Some(p) = samples {
                out.report.write_samples_csv(create(&p)?)?;
            }
            print_json(serde_json::to_value(&out)?)
        }
        Command::Frontier { config } => {
            let (cfg, base): (FrontierConfig, _) = load_config(&config)?;
            let points = run_frontier(&cfg, &base, strategy)?;
            write_frontier_csv(&points, io::stdout().lock())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input() { 1 } else { 2 })
        }
    }
}
