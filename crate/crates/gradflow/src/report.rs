//! Pass/fail records for inequality audits.

use std::fmt;

/// One audited instance of an inequality `lhs <= rhs + tolerance`.
#[derive(Debug, Clone)]
pub struct AuditSample {
    /// Where the sample was taken (times, probe ids, step index).
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
}

impl AuditSample {
    pub fn new(label: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        AuditSample { label: label.into(), lhs, rhs }
    }

    /// Signed violation `lhs - rhs`; positive means the inequality failed
    /// by that amount before tolerance.
    pub fn residual(&self) -> f64 {
        self.lhs - self.rhs
    }
}

/// Result of auditing one inequality over a set of samples.
///
/// `pass` holds exactly when every sample satisfies
/// `lhs <= rhs + tolerance`. Inapplicable configurations are recorded in
/// `notes` rather than counted as failures.
#[derive(Debug, Clone)]
pub struct AuditReport {
    pub tag: String,
    pub tolerance: f64,
    pub samples: Vec<AuditSample>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl AuditReport {
    pub fn new(tag: impl Into<String>, tolerance: f64, samples: Vec<AuditSample>) -> Self {
        let pass = samples.iter().all(|s| s.residual() <= tolerance);
        AuditReport { tag: tag.into(), tolerance, samples, notes: Vec::new(), pass }
    }

    pub fn with_notes(mut self, notes: Vec<String>) -> Self {
        self.notes.extend(notes);
        self
    }

    /// Largest signed violation across samples; `-inf` when empty.
    pub fn max_residual(&self) -> f64 {
        self.samples
            .iter()
            .map(AuditSample::residual)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Worst offending sample, if any sample exists.
    pub fn worst_sample(&self) -> Option<&AuditSample> {
        self.samples
            .iter()
            .max_by(|a, b| a.residual().partial_cmp(&b.residual()).unwrap())
    }

    /// Merge several reports into one summary record.
    pub fn combine(tag: impl Into<String>, parts: Vec<AuditReport>) -> Self {
        let tolerance = parts.iter().map(|p| p.tolerance).fold(0.0, f64::max);
        let pass = parts.iter().all(|p| p.pass);
        let mut samples = Vec::new();
        let mut notes = Vec::new();
        for p in parts {
            for s in p.samples {
                samples.push(AuditSample::new(format!("{}: {}", p.tag, s.label), s.lhs, s.rhs));
            }
            notes.extend(p.notes.into_iter().map(|n| format!("{}: {n}", p.tag)));
        }
        AuditReport { tag: tag.into(), tolerance, samples, notes, pass }
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[audit]")?;
        writeln!(f, "tag = {}", self.tag)?;
        writeln!(f, "pass = {}", self.pass)?;
        writeln!(f, "max_residual = {:e}", self.max_residual())?;
        writeln!(f, "tolerance = {:e}", self.tolerance)?;
        writeln!(f, "samples = {}", self.samples.len())?;
        for n in &self.notes {
            writeln!(f, "note = {n}")?;
        }
        Ok(())
    }
}
