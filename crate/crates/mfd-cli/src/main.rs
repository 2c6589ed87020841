//! `mfd` — batch front-end for matrix-field diagonalization.
//!
//! Four subcommands: `gen` writes example fields, `diag` runs the
//! dimension-appropriate diagonalization driver with a mesh-refinement
//! budget, `verify` re-measures a frames file against its field, and
//! `obstruct` computes every applicable topological certificate. All files
//! are checksummed `mfd/1` JSON documents; reports carry a plain-text
//! summary plus a machine-readable section and are byte-deterministic in
//! the inputs and configuration, independent of thread count.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod actions;
mod report;

use report::RunConfig;

#[derive(Parser)]
#[command(
    name = "mfd",
    version,
    about = "Approximate joint diagonalization of matrix fields, with obstruction certificates"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// Knobs shared by every subcommand and echoed into every report.
#[derive(Args)]
struct Knobs {
    /// Residual tolerance.
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    /// Matching resolution; suggested from the field when omitted.
    #[arg(long)]
    eta: Option<f64>,
    /// Dictionary degree for residual measurement.
    #[arg(long, default_value_t = 2)]
    dict_degree: u32,
    /// Mesh refinements `diag` may spend chasing eps.
    #[arg(long, default_value_t = 2)]
    max_refine: u32,
    /// Seed for the seeded generator families.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Worker threads; defaults to one per core. MFD_THREADS overrides.
    #[arg(long)]
    threads: Option<usize>,
}

impl Knobs {
    fn config(&self) -> RunConfig {
        RunConfig {
            eps: self.eps,
            eta: self.eta,
            dict_degree: self.dict_degree,
            max_refine: self.max_refine,
            seed: self.seed,
            threads: self.threads,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an example field and write it as an mfd/1 document.
    Gen {
        /// interval-random | crossing | winding | sphere-random | monopole |
        /// braid | s3_unitary | count1_b | tcount(N)
        #[arg(long)]
        kind: String,
        /// Output path for the field document.
        #[arg(long)]
        out: PathBuf,
        /// Segment count for interval/cycle carriers.
        #[arg(long, default_value_t = 128)]
        m: usize,
        /// Subdivision level for sphere2/s3 carriers.
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Matrix size for the seeded families.
        #[arg(long, default_value_t = 4)]
        n: usize,
        /// Also write a run report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Diagonalize a field, refining the mesh until eps or the budget runs out.
    Diag {
        /// Input field document.
        #[arg(long)]
        field: PathBuf,
        /// Where to write the diagonal frames on success.
        #[arg(long)]
        frames_out: Option<PathBuf>,
        /// Also write a run report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Re-measure a frames file against its field.
    Verify {
        /// Input field document.
        #[arg(long)]
        field: PathBuf,
        /// Frames document to verify.
        #[arg(long)]
        frames: PathBuf,
        /// Also write a run report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Compute every topological certificate the carrier supports.
    Obstruct {
        /// Input field document.
        #[arg(long)]
        field: PathBuf,
        /// Restrict to one generator by index.
        #[arg(long)]
        gen: Option<usize>,
        /// Also write a run report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        knobs: Knobs,
    },
}

/// MFD_THREADS beats --threads beats auto.
fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>, String> {
    match std::env::var("MFD_THREADS") {
        Ok(raw) => match raw.parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(format!("MFD_THREADS must be a positive integer, got `{raw}`")),
        },
        Err(_) => Ok(flag),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (knobs, report_path) = match &cli.cmd {
        Cmd::Gen { knobs, report, .. }
        | Cmd::Diag { knobs, report, .. }
        | Cmd::Verify { knobs, report, .. }
        | Cmd::Obstruct { knobs, report, .. } => (knobs, report.clone()),
    };
    let config = knobs.config();
    if let Err(msg) = config.validate() {
        eprintln!("mfd: {msg}");
        return ExitCode::from(actions::EXIT_INVALID as u8);
    }
    let threads = match resolve_threads(config.threads) {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("mfd: {msg}");
            return ExitCode::from(actions::EXIT_INVALID as u8);
        }
    };

    let run = || match &cli.cmd {
        Cmd::Gen { kind, out, m, k, n, .. } => actions::gen(kind, *m, *k, *n, out, config.clone()),
        Cmd::Diag { field, frames_out, .. } => {
            actions::diag(field, frames_out.as_ref(), config.clone())
        }
        Cmd::Verify { field, frames, .. } => actions::verify(field, frames, config.clone()),
        Cmd::Obstruct { field, gen, .. } => actions::obstruct(field, *gen, config.clone()),
    };

    // A malformed input must come back as exit 4, never as a panic — the
    // unwind guard is the last line of that defense.
    let guarded = || {
        std::panic::catch_unwind(std::panic::AssertUnwindSafe(run)).unwrap_or_else(|cause| {
            let what = cause
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| cause.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            let mut r = report::RunReport::new("internal-error", config.clone());
            r.outcome = "invalid-input".into();
            r.exit_code = actions::EXIT_INVALID;
            r.notes.push(format!("internal error: {what}"));
            r
        })
    };

    let report = match threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(guarded),
            Err(e) => {
                eprintln!("mfd: building a {t}-thread pool: {e}");
                return ExitCode::from(actions::EXIT_INVALID as u8);
            }
        },
        None => guarded(),
    };

    print!("{}", report.summary());
    if let Some(path) = report_path {
        match report.render() {
            Ok(text) => {
                if let Err(e) = std::fs::write(&path, text) {
                    eprintln!("mfd: writing {}: {e}", path.display());
                    return ExitCode::from(actions::EXIT_INVALID as u8);
                }
            }
            Err(e) => {
                eprintln!("mfd: rendering report: {e}");
                return ExitCode::from(actions::EXIT_INVALID as u8);
            }
        }
    }
    ExitCode::from(report.exit_code as u8)
}
