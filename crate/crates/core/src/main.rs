use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use perron_perturb::cli::{
    cmd_analyze, cmd_paper_example, cmd_search, cmd_trace, ProblemFile, TraceOptions,
};
use perron_perturb::search::{SearchConfig, WvConstraint};
use perron_perturb::Result;

/// Eigenvalues of rank-one perturbations B(t) = A + t·v·wᵀ of singular
/// M-matrices A = ρ(H)·I − H.
#[derive(Parser)]
#[command(name = "perron-perturb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral data, perturbation polynomial and stability verdict.
    Analyze {
        /// Problem file ({"H": …, "v": …, "w": …}); `-` reads stdin.
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Eigenvalue curves of B(t) over a log-spaced grid, as CSV (and SVG).
    Trace {
        input: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        t_min: f64,
        #[arg(long, default_value_t = 1e3)]
        t_max: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// CSV output path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Random search for eventually unstable problems, written as JSON lines.
    Search {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        inject_paper: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        entry_scale: f64,
        #[arg(long, default_value_t = 1.0)]
        cycle_scale: f64,
        #[arg(long, default_value_t = 0.3)]
        sparsity: f64,
        /// Force a positive cyclic pattern H[i][i+1] > 0.
        #[arg(long)]
        force_cycle: bool,
        #[arg(long, value_enum, default_value_t = Wv::Any)]
        wv: Wv,
        #[arg(long)]
        allow_reducible: bool,
        /// Print the summary as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Writes a reference instance: cx4, ex33, ex34, ex34b or family(n).
    PaperExample {
        which: String,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Wv {
    Any,
    Positive,
    Zero,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze { input, json } => {
            let report = cmd_analyze(&ProblemFile::read(&input)?)?;
            if json {
                emit(&format!("{}\n", serde_json::to_string_pretty(&report)?))?;
            } else {
                emit(&report.to_text())?;
            }
        }
        Command::Trace {
            input,
            t_min,
            t_max,
            points,
            out,
            svg,
        } => {
            let opts = TraceOptions {
                t_min,
                t_max,
                points,
            };
            let curves = cmd_trace(&ProblemFile::read(&input)?, opts, &out, svg.as_deref())?;
            eprintln!("wrote {} rows to {}", curves.t_grid.len(), out.display());
        }
        Command::Search {
            n,
            samples,
            seed,
            inject_paper,
            out,
            entry_scale,
            cycle_scale,
            sparsity,
            force_cycle,
            wv,
            allow_reducible,
            json,
        } => {
            let config = SearchConfig {
                n,
                samples,
                seed,
                entry_scale,
                cycle_scale,
                sparsity,
                force_cycle,
                wv: match wv {
                    Wv::Any => WvConstraint::Any,
                    Wv::Positive => WvConstraint::Positive,
                    Wv::Zero => WvConstraint::Zero,
                },
                allow_reducible,
                inject_paper,
            };
            let s = cmd_search(&config, &out)?;
            if json {
                emit(&format!("{}\n", serde_json::to_string(&s)?))?;
            } else {
                emit(&format!(
                    "samples={} records={} stable={} unstable={} indeterminate={} dropped={} generation_failures={}\n",
                    s.samples, s.records, s.stable, s.unstable, s.indeterminate, s.dropped, s.generation_failures
                ))?;
            }
        }
        Command::PaperExample { which, out } => {
            let file = cmd_paper_example(&which)?;
            match out {
                Some(path) => file.write(&path)?,
                None => emit(&format!("{}\n", serde_json::to_string_pretty(&file)?))?,
            }
        }
    }
    Ok(())
}

/// Writes to stdout; a reader that closed the pipe early is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
