//! Structured verification reports shared by every certificate verifier.
//!
//! Verifiers in this crate never panic on bad certificates and never stop at
//! the first problem: they walk the full list of proof obligations and record
//! a status for each, so a failure is localized to the exact obligation (and,
//! for trajectories, the exact step index) that broke.

use std::fmt;

/// Outcome of a single obligation check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObligationStatus {
    Pass,
    Fail,
    /// The obligation could not be decided at this scale (e.g. maximality of
    /// a residue over more claims than exhaustive enumeration permits). Not a
    /// failure, but surfaced so downstream consumers can see what was *not*
    /// established.
    Unchecked,
}

/// One named obligation together with its outcome and an optional
/// human-readable detail (offending values, indices, expected vs actual).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Obligation {
    pub name: String,
    pub status: ObligationStatus,
    pub detail: Option<String>,
}

/// Ordered list of obligation outcomes for one certificate.
///
/// Order is deterministic (verifiers push obligations in a fixed sequence),
/// which keeps rendered reports byte-stable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerificationReport {
    pub obligations: Vec<Obligation>,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a pass/fail obligation; `detail` is kept only for failures so
    /// passing reports stay terse.
    pub fn check(
        &mut self,
        name: impl Into<String>,
        passed: bool,
        detail: impl FnOnce() -> String,
    ) {
        self.obligations.push(Obligation {
            name: name.into(),
            status: if passed { ObligationStatus::Pass } else { ObligationStatus::Fail },
            detail: if passed { None } else { Some(detail()) },
        });
    }

    /// Records an obligation that was deliberately not decided.
    pub fn unchecked(&mut self, name: impl Into<String>, detail: impl Into<String>) {
        self.obligations.push(Obligation {
            name: name.into(),
            status: ObligationStatus::Unchecked,
            detail: Some(detail.into()),
        });
    }

    /// A report passes when nothing failed; `Unchecked` entries do not fail
    /// the report but are visible to callers that care.
    pub fn passed(&self) -> bool {
        self.obligations.iter().all(|o| o.status != ObligationStatus::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Obligation> {
        self.obligations.iter().filter(|o| o.status == ObligationStatus::Fail)
    }

    pub fn first_failure(&self) -> Option<&Obligation> {
        self.failures().next()
    }

    /// Names of all failed obligations, for compact error surfaces.
    pub fn failure_names(&self) -> Vec<&str> {
        self.failures().map(|o| o.name.as_str()).collect()
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.obligations {
            let tag = match o.status {
                ObligationStatus::Pass => "pass",
                ObligationStatus::Fail => "FAIL",
                ObligationStatus::Unchecked => "unchecked",
            };
            match &o.detail {
                Some(d) => writeln!(f, "{tag:9} {} — {d}", o.name)?,
                None => writeln!(f, "{tag:9} {}", o.name)?,
            }
        }
        Ok(())
    }
}
