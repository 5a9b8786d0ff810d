//! Trusted-base bookkeeping.
//!
//! Every certificate in this crate carries a list of [`AssumptionTag`]s — the
//! things its guarantees lean on that were not themselves checked here. Tags
//! are tiered by trust class, from proof-kernel axioms down to black-box
//! oracles. The audit in [`audit_assumptions`] takes the union of tags across
//! a whole bundle and confirms it stays inside the deployment's approved
//! trusted base: the kernel's classical axiom base plus an explicit allow
//! list. Two mechanism names are forbidden outright — they mark escape
//! hatches that bypass checking entirely, and no allow list can approve them.

use std::collections::BTreeSet;
use std::fmt;

use crate::report::VerificationReport;

/// Trust classes, strongest first. The tier is part of the tag's identity:
/// the same name at a different tier is a different claim about how much
/// scrutiny the dependency received.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AssumptionTier {
    /// Axioms of the proof kernel itself.
    Kernel,
    /// Mathematical facts stated but proved elsewhere (placeholder lemmas).
    MathPlaceholder,
    /// Standard cryptographic hardness assumptions (e.g. hash collision
    /// resistance).
    Crypto,
    /// Black-box model oracles whose attestations are trusted, not checked.
    Oracle,
}

impl AssumptionTier {
    pub fn label(&self) -> &'static str {
        match self {
            AssumptionTier::Kernel => "1_kernel",
            AssumptionTier::MathPlaceholder => "2_math_placeholder",
            AssumptionTier::Crypto => "3_crypto",
            AssumptionTier::Oracle => "4_oracle",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        match label {
            "1_kernel" => Some(AssumptionTier::Kernel),
            "2_math_placeholder" => Some(AssumptionTier::MathPlaceholder),
            "3_crypto" => Some(AssumptionTier::Crypto),
            "4_oracle" => Some(AssumptionTier::Oracle),
            _ => None,
        }
    }
}

/// One named dependency of a certificate's guarantee.
///
/// Field order matters: the derived ordering sorts by tier severity first,
/// then by name, which is the display order of every assumption listing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AssumptionTag {
    pub tier: AssumptionTier,
    pub name: String,
}

impl AssumptionTag {
    pub fn new(name: impl Into<String>, tier: AssumptionTier) -> Self {
        AssumptionTag { name: name.into(), tier }
    }

    pub fn kernel(name: impl Into<String>) -> Self {
        Self::new(name, AssumptionTier::Kernel)
    }

    pub fn math_placeholder(name: impl Into<String>) -> Self {
        Self::new(name, AssumptionTier::MathPlaceholder)
    }

    pub fn crypto(name: impl Into<String>) -> Self {
        Self::new(name, AssumptionTier::Crypto)
    }

    pub fn oracle(name: impl Into<String>) -> Self {
        Self::new(name, AssumptionTier::Oracle)
    }
}

impl fmt::Display for AssumptionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.tier.label(), self.name)
    }
}

/// The classical axiom base of the proof kernel. Tags with these names at
/// the kernel tier are always inside the trusted base.
pub const KERNEL_AXIOMS: [&str; 3] = ["propext", "Classical.choice", "Quot.sound"];

/// Escape-hatch mechanisms that bypass checking. Their presence fails the
/// audit unconditionally — approving them is not possible.
pub const FORBIDDEN_MECHANISMS: [&str; 2] = ["unchecked", "native_decide"];

/// Deduplicated, ordered union of assumption tags across certificate
/// families. Order is (tier, name), so kernel axioms list first.
pub fn union_assumptions<'a>(
    groups: impl IntoIterator<Item = &'a [AssumptionTag]>,
) -> Vec<AssumptionTag> {
    let set: BTreeSet<&AssumptionTag> = groups.into_iter().flatten().collect();
    set.into_iter().cloned().collect()
}

/// Checks that the union of declared assumptions stays inside the trusted
/// base: kernel axioms plus the `approved` allow list (matched by name),
/// with forbidden mechanisms rejected regardless of the list.
pub fn audit_assumptions(tags: &[AssumptionTag], approved: &[String]) -> VerificationReport {
    let mut rep = VerificationReport::new();

    let forbidden: Vec<&AssumptionTag> =
        tags.iter().filter(|t| FORBIDDEN_MECHANISMS.contains(&t.name.as_str())).collect();
    rep.check("no_forbidden_mechanisms", forbidden.is_empty(), || {
        format!(
            "forbidden mechanisms in use: {}",
            forbidden.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
        )
    });

    let in_base = |t: &AssumptionTag| {
        (t.tier == AssumptionTier::Kernel && KERNEL_AXIOMS.contains(&t.name.as_str()))
            || approved.iter().any(|a| a == &t.name)
    };
    let outside: Vec<&AssumptionTag> = tags
        .iter()
        .filter(|t| !FORBIDDEN_MECHANISMS.contains(&t.name.as_str()) && !in_base(t))
        .collect();
    rep.check("within_trusted_base", outside.is_empty(), || {
        format!(
            "assumptions outside the trusted base: {}",
            outside.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
        )
    });

    rep
}
