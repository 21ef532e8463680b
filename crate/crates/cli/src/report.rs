use std::fmt;
use std::path::PathBuf;
use std::time::Duration;

use sha2::{Digest, Sha256};

/// Summary printed after every command.
#[derive(Debug, Default)]
pub struct RunReport {
    pub command: String,
    pub instance_digest: Option<String>,
    pub seed: Option<u64>,
    pub best_objective: Option<f64>,
    pub reference: Option<f64>,
    pub wall_time: Duration,
    pub outputs: Vec<PathBuf>,
    pub notes: Vec<String>,
}

impl RunReport {
    pub fn new(command: String) -> Self {
        Self { command, ..Self::default() }
    }

    /// Relative gap `(ours - reference) / reference`.
    pub fn gap(&self) -> Option<f64> {
        match (self.best_objective, self.reference) {
            (Some(ours), Some(r)) if r != 0.0 => Some((ours - r) / r),
            _ => None,
        }
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "command: {}", self.command)?;
        if let Some(d) = &self.instance_digest {
            writeln!(f, "instance_sha256: {d}")?;
        }
        if let Some(s) = self.seed {
            writeln!(f, "seed: {s}")?;
        }
        if let Some(o) = self.best_objective {
            writeln!(f, "best_objective: {o}")?;
        }
        if let (Some(r), Some(g)) = (self.reference, self.gap()) {
            writeln!(f, "reference: {r}")?;
            writeln!(f, "gap: {g:.4}")?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        for p in &self.outputs {
            writeln!(f, "output: {}", p.display())?;
        }
        write!(f, "wall_time_s: {:.3}", self.wall_time.as_secs_f64())
    }
}

pub fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
