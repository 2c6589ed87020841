//! Run configuration and the report file every subcommand emits.
//!
//! A report is one file with two audiences: a plain-text summary up top for
//! people, and below a `--- mfd/1 ---` marker the same facts as a checksummed
//! JSON document for tools. Reports echo the full `RunConfig` so a run can be
//! reproduced from its report alone, and they are deterministic: the echoed
//! `threads` value is the *configured* one, never the count the scheduler
//! actually used, so changing `MFD_THREADS` cannot change a single byte.

use serde::{Deserialize, Serialize};

use mfd_core::field::io::{self, Payload};
use mfd_core::{ObstructionReport, ResidualReport};

/// The knobs shared by every subcommand, echoed into every report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    /// Residual tolerance for diagonalization and verification.
    pub eps: f64,
    /// Matching resolution. `None` means "suggest from the field" — the
    /// resolved value is substituted before the config is echoed.
    pub eta: Option<f64>,
    /// Dictionary degree for residual measurement.
    pub dict_degree: u32,
    /// How many mesh refinements `diag` may spend chasing `eps`.
    pub max_refine: u32,
    /// Seed for the seeded generator families.
    pub seed: u64,
    /// Requested worker threads; `None` lets the scheduler decide.
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(format!("eps = {} must be positive", self.eps));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0) || !eta.is_finite() {
                return Err(format!("eta = {eta} must be positive"));
            }
        }
        if self.dict_degree < 1 {
            return Err("dict-degree must be ≥ 1".into());
        }
        Ok(())
    }
}

/// Everything a run wants to say, in machine-readable form.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config: RunConfig,
    /// Carrier of the input field, e.g. `interval(128)`.
    pub domain: String,
    pub n: usize,
    pub generators: Vec<String>,
    /// `success`, `obstructed`, `tolerance-not-met`, or `invalid-input`.
    pub outcome: String,
    pub exit_code: i32,
    pub refinements_used: u32,
    /// Best residual reached, when one was measured at all.
    pub achieved_residual: Option<f64>,
    pub residual: Option<ResidualReport>,
    pub certificates: Vec<ObstructionReport>,
    pub notes: Vec<String>,
}

impl Payload for RunReport {
    const KIND: &'static str = "run";
}

impl RunReport {
    pub fn new(command: &str, config: RunConfig) -> RunReport {
        RunReport {
            command: command.into(),
            config,
            domain: String::new(),
            n: 0,
            generators: Vec::new(),
            outcome: String::new(),
            exit_code: 0,
            refinements_used: 0,
            achieved_residual: None,
            residual: None,
            certificates: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn describe_field(&mut self, field: &mfd_core::GeneratorField) {
        self.domain = field.domain.kind.to_string();
        self.n = field.n;
        self.generators = field.generators.iter().map(|g| g.name.clone()).collect();
    }

    /// The human half of the report.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let mut line = |s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        line(format!("mfd {} report", self.command));
        line(format!("outcome: {} (exit {})", self.outcome, self.exit_code));
        if !self.domain.is_empty() {
            line(format!(
                "field: {} | n = {} | generators: {}",
                self.domain,
                self.n,
                self.generators.join(", ")
            ));
        }
        let eta = match self.config.eta {
            Some(e) => format!("{e}"),
            None => "auto".into(),
        };
        let threads = match self.config.threads {
            Some(t) => format!("{t}"),
            None => "auto".into(),
        };
        line(format!(
            "config: eps={} eta={} dict_degree={} max_refine={} seed={} threads={}",
            self.config.eps, eta, self.config.dict_degree, self.config.max_refine,
            self.config.seed, threads
        ));
        if self.refinements_used > 0 {
            line(format!("refinements used: {}", self.refinements_used));
        }
        if let Some(r) = &self.residual {
            line(format!(
                "residual: max={:.6e} mean={:.6e} continuity={:.6e} verdict={}",
                r.max,
                r.mean,
                r.continuity_modulus,
                if r.verdict { "pass" } else { "fail" }
            ));
        } else if let Some(a) = self.achieved_residual {
            line(format!("achieved residual: {a:.6e}"));
        }
        if !self.certificates.is_empty() {
            line("certificates:".into());
            for c in &self.certificates {
                let tension = if c.tension_flag { " [tension]" } else { "" };
                line(format!("  - {:?} on {}: {}{}", c.kind, c.carrier, c.verdict, tension));
            }
        }
        for note in &self.notes {
            line(format!("note: {note}"));
        }
        out
    }

    /// Summary, marker, then the machine section.
    pub fn render(&self) -> Result<String, mfd_core::Error> {
        let mut text = self.summary();
        text.push_str("--- mfd/1 ---\n");
        text.push_str(&io::to_document(self)?);
        Ok(text)
    }
}
