use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use augcg::{make_eigenvalues, make_operator, write_chunked, SeededRng};
use augcg_harness::output::write_rows;
use augcg_harness::presets::preset;
use augcg_harness::{
    run_comparison, run_diagnostics, run_regpath, run_sampling, ExperimentConfig, HarnessError,
    Outcome, Result,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "augcg", version, about = "Block Krylov solver experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file, applied on top of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path; `-` or absent writes to stdout unless the config names a file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the problem seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Starting configuration (fastdecay, outliers20, bottom20, theta-sweep, regpath, sampling, diagnostics).
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Writes the problem matrix as a chunked file and its spectrum as `<out>.spectrum.csv`.
    GenMatrix {
        #[command(flatten)]
        common: Common,
        /// Rows per chunk (default: an eighth of the dimension, rounded up).
        #[arg(long)]
        chunk_rows: Option<usize>,
    },
    /// Convergence traces of every method.
    Compare(Common),
    /// Final errors over the shift grid.
    Regpath(Common),
    /// Block versus single-vector square-root sampling.
    Sample(Common),
    /// Preconditioner condition numbers against the dense oracle.
    Diagnostics(Common),
}

fn load_config(common: &Common, default_preset: &str) -> Result<ExperimentConfig> {
    let base = preset(common.preset.as_deref().unwrap_or(default_preset))?;
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path, base)?,
        None => base,
    };
    if let Some(seed) = common.seed {
        cfg.problem.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output = Some(out.clone());
    }
    Ok(cfg)
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) if p != Path::new("-") => Box::new(BufWriter::new(File::create(p)?)),
        _ => Box::new(std::io::stdout().lock()),
    })
}

fn gen_matrix(common: &Common, chunk_rows: Option<usize>) -> Result<()> {
    let cfg = load_config(common, "fastdecay")?;
    let out = cfg
        .output
        .clone()
        .ok_or_else(|| HarnessError::Config("gen-matrix needs --out".into()))?;
    let eigs = make_eigenvalues(&cfg.problem.spectrum)?;
    let (op, _) = make_operator::<f64>(&eigs, &mut SeededRng::new(cfg.problem.seed, 0))?;
    let d = eigs.len();
    let rows = chunk_rows.unwrap_or(d.div_ceil(8));
    write_chunked(op.matrix(), rows, &out)?;
    let mut spectrum_path = out.into_os_string();
    spectrum_path.push(".spectrum.csv");
    let mut w = BufWriter::new(File::create(PathBuf::from(spectrum_path))?);
    writeln!(w, "eigenvalue")?;
    for v in &eigs {
        writeln!(w, "{v:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

type Driver = fn(&ExperimentConfig) -> Result<Outcome>;

fn run(cli: Cli) -> Result<Outcome> {
    let (common, default_preset, driver): (&Common, &str, Driver) = match &cli.command {
        Command::GenMatrix { common, chunk_rows } => {
            gen_matrix(common, *chunk_rows)?;
            return Ok(Outcome::default());
        }
        Command::Compare(c) => (c, "fastdecay", run_comparison),
        Command::Regpath(c) => (c, "regpath", run_regpath),
        Command::Sample(c) => (c, "sampling", run_sampling),
        Command::Diagnostics(c) => (c, "diagnostics", run_diagnostics),
    };
    let cfg = load_config(common, default_preset)?;
    let outcome = driver(&cfg)?;
    let mut out = open_output(cfg.output.as_deref())?;
    write_rows(&mut out, &outcome.rows)?;
    out.flush()?;
    Ok(outcome)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(outcome) if outcome.failures > 0 => {
            log::error!("{} method run(s) failed", outcome.failures);
            ExitCode::from(3)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("augcg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
