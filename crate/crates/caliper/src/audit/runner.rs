//! The audit pipeline: wire bytes in, decision and exit code out.
//!
//! [`run_audit`] walks five ordered steps. After a successful decode every
//! remaining step runs regardless of earlier failures, so one audit surfaces
//! *all* problems instead of the first one:
//!
//! 1. **decode** — parse the wire bytes into a bundle (strict schema);
//! 2. **certificates** — re-verify every embedded certificate;
//! 3. **card** — verify the card record and recompute the payload digest it
//!    commits to;
//! 4. **assumptions** — confirm the declared trusted base stays inside the
//!    approved allow list;
//! 5. **policy** — evaluate the deployment policy against the card.
//!
//! Exit codes, by precedence: 5 malformed wire, 1 structural failure
//! (certificates or card), 2 assumption failure, then the policy outcome —
//! 0 accept, 3 downgrade pending review, 4 reject.
//!
//! Oracle freshness is advisory: missing or stale oracle evidence produces
//! warnings, never a failure — the assumptions step already gates *which*
//! oracles may be trusted, and evidence age is a deployment judgment call.

use crate::card::{policy_decide, verify_card, AssurancePolicy, PolicyDecision};
use crate::report::{ObligationStatus, VerificationReport};

use super::assumptions::{audit_assumptions, AssumptionTier};
use super::bundle::CertificateBundle;
use super::canon::hex_encode;

pub const EXIT_ACCEPT: i32 = 0;
pub const EXIT_STRUCTURAL: i32 = 1;
pub const EXIT_ASSUMPTION: i32 = 2;
pub const EXIT_DOWNGRADE: i32 = 3;
pub const EXIT_REJECT: i32 = 4;
pub const EXIT_MALFORMED: i32 = 5;

/// Verifier-side inputs: the policy to enforce, the audit clock, and the
/// approved trusted base.
#[derive(Debug, Clone)]
pub struct AuditConfig {
    pub policy: AssurancePolicy,
    pub now: u64,
    pub approved: Vec<String>,
}

/// The default trusted base: the built-in oracle families plus the
/// collision resistance of the digest function.
pub fn default_approved() -> Vec<String> {
    let mut names: Vec<String> =
        crate::oracles::ORACLE_REGISTRY.iter().map(|s| s.to_string()).collect();
    names.push("sha256_collision_resistance".to_string());
    names
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditStep {
    pub name: &'static str,
    pub report: VerificationReport,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditOutcome {
    pub steps: Vec<AuditStep>,
    pub warnings: Vec<String>,
    pub decision: Option<PolicyDecision>,
    pub exit_code: i32,
}

impl AuditOutcome {
    pub fn step(&self, name: &str) -> Option<&AuditStep> {
        self.steps.iter().find(|s| s.name == name)
    }

    /// Multi-line human-readable report: one line per obligation, then
    /// warnings, then the decision and exit code.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for step in &self.steps {
            let verdict = if step.report.passed() { "pass" } else { "FAIL" };
            out.push_str(&format!("step {:12} {}\n", step.name, verdict));
            for ob in &step.report.obligations {
                let tag = match ob.status {
                    ObligationStatus::Pass => "  pass     ",
                    ObligationStatus::Fail => "  FAIL     ",
                    ObligationStatus::Unchecked => "  unchecked",
                };
                match &ob.detail {
                    Some(d) => out.push_str(&format!("{tag} {} — {d}\n", ob.name)),
                    None => out.push_str(&format!("{tag} {}\n", ob.name)),
                }
            }
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        match &self.decision {
            Some(PolicyDecision::Accept) => out.push_str("decision: accept\n"),
            Some(PolicyDecision::Downgrade { to: _, pending }) => {
                out.push_str(&format!("decision: downgrade (pending: {})\n", pending.join(", ")))
            }
            Some(PolicyDecision::Reject { reason }) => {
                out.push_str(&format!("decision: reject ({reason})\n"))
            }
            None => out.push_str("decision: none (audit did not reach the policy step)\n"),
        }
        out.push_str(&format!("exit: {}\n", self.exit_code));
        out
    }
}

fn absorb(into: &mut VerificationReport, prefix: &str, from: VerificationReport) {
    for mut ob in from.obligations {
        ob.name = format!("{prefix}.{}", ob.name);
        into.obligations.push(ob);
    }
}

/// Audits wire bytes end to end.
pub fn run_audit(wire: &str, config: &AuditConfig) -> AuditOutcome {
    let bundle = match CertificateBundle::from_wire(wire) {
        Ok(b) => b,
        Err(e) => {
            let mut report = VerificationReport::new();
            report.check("wire_decodes", false, || e.to_string());
            return AuditOutcome {
                steps: vec![AuditStep { name: "decode", report }],
                warnings: Vec::new(),
                decision: None,
                exit_code: EXIT_MALFORMED,
            };
        }
    };
    let mut decode_report = VerificationReport::new();
    decode_report.check("wire_decodes", true, || unreachable!());
    let mut outcome = audit_bundle(&bundle, config);
    outcome.steps.insert(0, AuditStep { name: "decode", report: decode_report });
    outcome
}

/// Audits an already-decoded bundle (steps 2–5).
pub fn audit_bundle(bundle: &CertificateBundle, config: &AuditConfig) -> AuditOutcome {
    let mut steps = Vec::new();
    let mut warnings = Vec::new();

    // Step: certificates.
    let mut certs = VerificationReport::new();
    if let Some(g) = &bundle.grounding {
        absorb(&mut certs, "grounding", crate::grounding::verify_grounding(g));
    }
    if let Some(s) = &bundle.sensitivity {
        absorb(&mut certs, "sensitivity", crate::embedding::verify_sensitivity(s));
    }
    if let Some(r) = &bundle.residue {
        absorb(&mut certs, "residue", crate::mcr::verify_residue(r));
    }
    if let Some(c) = &bundle.composition {
        absorb(&mut certs, "composition", crate::composition::verify_composition(c));
    }
    if let Some(a) = &bundle.action {
        // The summary is type-erased, so trajectories were replayed upstream;
        // what remains checkable here is the refusal records' completeness.
        let vague: Vec<&str> =
            a.blocked.iter().filter(|b| !b.is_informative()).map(|b| b.action.as_str()).collect();
        certs.check("action.blocks_well_formed", vague.is_empty(), || {
            format!("uninformative refusal records for: {}", vague.join(", "))
        });
    }
    steps.push(AuditStep { name: "certificates", report: certs });

    // Step: card.
    let mut card_report = VerificationReport::new();
    card_report
        .check("present", bundle.card.is_some(), || "bundle carries no assurance card".to_string());
    if let Some(card) = &bundle.card {
        absorb(&mut card_report, "record", verify_card(card));
        match bundle.payload_digest() {
            Ok(expected) => {
                card_report.check(
                    "certificate_digest_matches",
                    card.certificate_digest == expected,
                    || {
                        format!(
                            "card commits to {}, payload hashes to {}",
                            hex_encode(&card.certificate_digest),
                            hex_encode(&expected)
                        )
                    },
                );
            }
            Err(e) => {
                card_report.check("certificate_digest_matches", false, || e.to_string());
            }
        }
    }
    steps.push(AuditStep { name: "card", report: card_report });

    // Step: assumptions.
    let tags = bundle.all_assumptions();
    let assumption_report = audit_assumptions(&tags, &config.approved);
    steps.push(AuditStep { name: "assumptions", report: assumption_report });

    // Oracle freshness: advisory only.
    for tag in &tags {
        if tag.tier == AssumptionTier::Oracle
            && !bundle.oracle_evidence.iter().any(|e| e.oracle == tag.name)
        {
            warnings.push(format!("no freshness evidence for oracle {:?}", tag.name));
        }
    }
    for e in &bundle.oracle_evidence {
        if e.stale_at(config.now) {
            warnings.push(format!(
                "evidence for oracle {:?} is stale (attested at {}, ttl {}s, audit clock {})",
                e.oracle, e.attested_at, e.ttl_seconds, config.now
            ));
        }
    }

    // Step: policy.
    let mut policy_report = VerificationReport::new();
    let mut decision = None;
    match &bundle.card {
        Some(card) => match policy_decide(&config.policy, card, config.now) {
            Ok(d) => {
                policy_report.check("evaluated", true, || unreachable!());
                decision = Some(d);
            }
            Err(e) => {
                policy_report.check("evaluated", false, || e.to_string());
            }
        },
        None => {
            policy_report.check("evaluated", false, || "no card to evaluate".to_string());
        }
    }
    steps.push(AuditStep { name: "policy", report: policy_report });

    // Exit code by precedence.
    let failed = |name: &str| steps.iter().any(|s| s.name == name && !s.report.passed());
    let exit_code = if failed("certificates") || failed("card") {
        EXIT_STRUCTURAL
    } else if failed("assumptions") {
        EXIT_ASSUMPTION
    } else {
        match &decision {
            Some(PolicyDecision::Accept) => EXIT_ACCEPT,
            Some(PolicyDecision::Downgrade { .. }) => EXIT_DOWNGRADE,
            Some(PolicyDecision::Reject { .. }) => EXIT_REJECT,
            // Policy evaluation itself failed with no structural cause on
            // record; still a structural problem.
            None => EXIT_STRUCTURAL,
        }
    };

    AuditOutcome { steps, warnings, decision, exit_code }
}
