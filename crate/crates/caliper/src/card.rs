//! The per-call assurance card and its policy layer.
//!
//! A card is one flat record consolidating what every certificate family
//! established for a single answer: evidence masses from grounding, a
//! perturbation budget from composition, action safety from gated execution,
//! residue bookkeeping from salvage, plus calibration, scope, freshness, and
//! provenance fields. It carries exactly one of four verdicts — certified,
//! partial, residue, or abstain — and a decidable consistency predicate ties
//! the verdict tag to the field values.
//!
//! The consistency predicate is deliberately a *schema* gate, nothing more:
//! it checks that the tag makes sense against the card's own fields, and it
//! does not re-verify the underlying certificates (their own verifiers do
//! that) nor apply deployment thresholds (the policy layer does that). Its
//! checks must not be strengthened: fields like `contested_mass` or
//! `budget_under_limit` are intentionally outside it.
//!
//! Cards are not comparable across deployments. A deployment publishes an
//! [`AssurancePolicy`]; [`policy_decide`] maps (policy, card, clock) to
//! accept, reject, or downgrade-pending-review. Five canonical policies with
//! increasing strictness ship in [`canonical_policies`].

use crate::action::{ActionCert, BlockRecord};
use crate::audit::assumptions::AssumptionTag;
use crate::composition::{CompositionCert, StabilityBudget};
use crate::grounding::GroundingCertificate;
use crate::mcr::ResidueCertificate;
use crate::numeric::Rational;
use crate::report::VerificationReport;

/// Version string stamped into every card this engine emits.
pub const VERIFIER_VERSION: &str = "caliper 0.1.0";

pub type Digest32 = [u8; 32];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// Every required layer passed; the full answer ships.
    Certified,
    /// Named non-load-bearing layers are unverified; the answer ships and
    /// the consumer decides whether the gaps are tolerable.
    Partial { gaps: Vec<String> },
    /// The full answer is not certifiable but a maximal subset is; `weight`
    /// is the surviving coverage.
    Residue { weight: Rational },
    /// No emission; machine-readable reasons instead.
    Abstain { reasons: Vec<String> },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Certified => "certified",
            Verdict::Partial { .. } => "partial",
            Verdict::Residue { .. } => "residue",
            Verdict::Abstain { .. } => "abstain",
        }
    }
}

/// The consolidated per-call record. Field groups, in order: verdict,
/// stability, evidence, calibration, reproducibility, scope and freshness,
/// safety, residue, gaps and provenance, audit handle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssuranceCard {
    pub verdict: Verdict,
    // stability
    pub perturbation_budget: Rational,
    pub variant_flips: u64,
    pub semantic_agreement: Rational,
    // evidence
    pub supported_mass: Rational,
    pub contradicted_mass: Rational,
    pub contested_mass: Rational,
    pub unknown_mass: Rational,
    // calibration
    pub conformal_set_size: u64,
    pub calibration_gap: Rational,
    // reproducibility
    pub is_deterministic: bool,
    pub sample_count: u64,
    pub proof_of_sampling: Option<Vec<u8>>,
    // scope and freshness
    pub in_scope: bool,
    pub scope_predicates_held: Vec<String>,
    pub source_snapshot_hash: Digest32,
    pub issue_time: u64,
    pub expiry_time: u64,
    // safety
    pub forbidden_check_pass: bool,
    pub action_precondition: bool,
    pub budget_under_limit: bool,
    // residue
    pub residue_coverage: Rational,
    pub dropped_claims: Vec<String>,
    // gaps and provenance
    pub unverified_layers: Vec<String>,
    pub model_version_hash: Digest32,
    pub prompt_template_hash: Digest32,
    pub human_signatures: Vec<Vec<u8>>,
    // audit handle
    pub certificate_digest: Digest32,
    pub verifier_version: String,
    pub replay_handle: String,
}

/// Schema consistency of the verdict tag against the card's own fields.
///
/// Exactly this and no more:
/// - certified ⇒ no unverified layers, forbidden check passed, action
///   precondition true, zero contradicted mass, in scope;
/// - partial(gaps) ⇒ `unverified_layers` equals `gaps`, forbidden check
///   passed, action precondition true;
/// - residue(w) ⇒ `residue_coverage` equals `w` and `dropped_claims` is
///   nonempty;
/// - abstain(reasons) ⇒ `reasons` nonempty and `residue_coverage` is zero.
///
/// Contested/unknown masses, budgets, freshness, calibration, agreement, and
/// digest validity are intentionally not inspected here — they belong to the
/// policy layer and the digest chain.
pub fn verdict_consistent(card: &AssuranceCard) -> bool {
    match &card.verdict {
        Verdict::Certified => {
            card.unverified_layers.is_empty()
                && card.forbidden_check_pass
                && card.action_precondition
                && card.contradicted_mass.is_zero()
                && card.in_scope
        }
        Verdict::Partial { gaps } => {
            card.unverified_layers == *gaps && card.forbidden_check_pass && card.action_precondition
        }
        Verdict::Residue { weight } => {
            card.residue_coverage == *weight && !card.dropped_claims.is_empty()
        }
        Verdict::Abstain { reasons } => !reasons.is_empty() && card.residue_coverage.is_zero(),
    }
}

fn unit_interval(q: &Rational) -> bool {
    q.is_nonneg() && *q <= Rational::one()
}

/// Structural verification of a card record.
pub fn verify_card(card: &AssuranceCard) -> VerificationReport {
    let mut rep = VerificationReport::new();

    rep.check("verdict_consistent", verdict_consistent(card), || {
        format!("verdict {} disagrees with the card's fields", card.verdict.label())
    });

    let masses =
        [&card.supported_mass, &card.contradicted_mass, &card.contested_mass, &card.unknown_mass];
    let in_range = masses.iter().all(|m| unit_interval(m));
    let sum: Rational = masses.iter().map(|m| (*m).clone()).sum();
    // All-zero masses mean "no evidence bound was consolidated" (pure action
    // cards); a present bound must be a full partition of weight.
    let masses_ok = in_range && (sum.is_zero() || sum == Rational::one());
    rep.check("masses", masses_ok, || {
        format!("evidence masses sum to {sum} (each must be in [0,1]; sum 0 or 1)")
    });

    rep.check("residue_coverage_range", unit_interval(&card.residue_coverage), || {
        format!("residue_coverage {} outside [0,1]", card.residue_coverage)
    });

    rep.check("timestamps", card.issue_time <= card.expiry_time, || {
        format!("issue_time {} after expiry_time {}", card.issue_time, card.expiry_time)
    });

    rep
}

// ---------------------------------------------------------------------------
// Consolidation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CardError {
    #[error("card is inconsistent: {detail}")]
    Inconsistent { detail: String },
    #[error(
        "grounding emitted with contradicted mass {mass}: bind a residue certificate; \
         a certified verdict cannot carry contradicted evidence"
    )]
    NeedsResidue { mass: Rational },
    #[error("composition certificate has an unbounded budget; cards need a finite bound")]
    UnboundedBudget,
}

/// Type-erased extract of a gated execution run: the counts and refusals the
/// card consolidator needs, independent of the domain's state/action types.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActionSummary {
    pub executed_steps: usize,
    pub blocked: Vec<BlockRecord>,
    pub assumptions: Vec<AssumptionTag>,
}

impl ActionSummary {
    pub fn from_cert<S, A>(cert: &ActionCert<S, A>) -> Self {
        ActionSummary {
            executed_steps: cert.trajectory.len(),
            blocked: cert.blocks.clone(),
            assumptions: cert.assumptions.clone(),
        }
    }
}

/// The certificate-derived inputs to consolidation. Everything is optional:
/// a pipeline contributes what it ran.
#[derive(Debug, Clone, Default)]
pub struct CardParts {
    pub grounding: Option<GroundingCertificate>,
    pub residue: Option<ResidueCertificate>,
    pub composition: Option<CompositionCert>,
    pub action: Option<ActionSummary>,
    /// Names of declared-but-unverified layers; nonempty turns an otherwise
    /// certified card into a partial one.
    pub unverified_layers: Vec<String>,
}

/// Caller-supplied measurements and provenance that no certificate derives:
/// scope decisions, clock values, external hashes, harness summaries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CardMeta {
    pub in_scope: bool,
    pub scope_predicates_held: Vec<String>,
    pub forbidden_check_pass: bool,
    pub budget_under_limit: bool,
    pub is_deterministic: bool,
    pub sample_count: u64,
    pub conformal_set_size: u64,
    pub calibration_gap: Rational,
    pub proof_of_sampling: Option<Vec<u8>>,
    pub variant_flips: u64,
    pub semantic_agreement: Rational,
    pub issue_time: u64,
    pub expiry_time: u64,
    pub source_snapshot_hash: Digest32,
    pub model_version_hash: Digest32,
    pub prompt_template_hash: Digest32,
    pub certificate_digest: Digest32,
    pub human_signatures: Vec<Vec<u8>>,
    pub replay_handle: String,
}

impl CardMeta {
    /// Neutral defaults for a deterministic, in-scope call. Tests and
    /// fixtures override what they care about.
    pub fn baseline(issue_time: u64, expiry_time: u64) -> Self {
        CardMeta {
            in_scope: true,
            scope_predicates_held: Vec::new(),
            forbidden_check_pass: true,
            budget_under_limit: true,
            is_deterministic: true,
            sample_count: 1,
            conformal_set_size: 0,
            calibration_gap: Rational::zero(),
            proof_of_sampling: None,
            variant_flips: 0,
            semantic_agreement: Rational::one(),
            issue_time,
            expiry_time,
            source_snapshot_hash: [0; 32],
            model_version_hash: [0; 32],
            prompt_template_hash: [0; 32],
            certificate_digest: [0; 32],
            human_signatures: Vec::new(),
            replay_handle: String::new(),
        }
    }
}

/// Consolidates certificates and metadata into one consistent card.
///
/// The verdict is chosen by the first matching rule:
/// 1. out of scope → abstain (and residue coverage is forced to zero, per
///    the consistency predicate);
/// 2. a residue certificate that salvaged *nothing* → abstain;
/// 3. dropped claims exist (from the residue certificate, or from refusals
///    next to a nonempty executed trajectory) → residue;
/// 4. grounding present but its emission gate blocked, with no salvage →
///    abstain;
/// 5. a failed forbidden-content check, or refusals with an empty executed
///    trajectory and nothing salvaged → abstain (neither certified nor
///    partial may stand on a closed gate);
/// 6. unverified layers declared → partial;
/// 7. otherwise certified — unless grounding emitted with nonzero
///    contradicted mass, which cannot be certified and is an error asking
///    the caller to bind a residue certificate.
///
/// The action precondition field is true unless refusals occurred with an
/// *empty* executed trajectory: executed steps all discharged their guards
/// by construction (blocked steps never enter the trajectory), so refusals
/// alongside real progress describe dropped work, not an unsafe payload.
pub fn build_card(parts: &CardParts, meta: &CardMeta) -> Result<AssuranceCard, CardError> {
    let (masses, emitted) = match &parts.grounding {
        Some(g) => (g.coverage.clone(), g.emitted),
        None => (
            crate::grounding::Coverage {
                supported: Rational::zero(),
                contradicted: Rational::zero(),
                contested: Rational::zero(),
                unknown: Rational::zero(),
            },
            true,
        ),
    };

    let perturbation_budget = match &parts.composition {
        Some(c) => match &c.budget {
            StabilityBudget::Finite(b) => b.clone(),
            StabilityBudget::Unbounded => return Err(CardError::UnboundedBudget),
        },
        None => Rational::zero(),
    };

    let (executed, blocked) = match &parts.action {
        Some(a) => (a.executed_steps, a.blocked.as_slice()),
        None => (0, &[][..]),
    };
    let action_precondition = !(!blocked.is_empty() && executed == 0);

    let (mut residue_coverage, dropped_claims) = match &parts.residue {
        Some(r) => (r.coverage(), r.dropped_texts()),
        None if !blocked.is_empty() && executed > 0 => {
            // Action-only salvage: every step weighs one; the refused steps
            // are the dropped claims.
            let total = executed + blocked.len();
            let coverage = Rational::new(executed as i64, total as i64);
            let dropped = blocked
                .iter()
                .map(|b| {
                    format!(
                        "{} — blocked by {}: {}",
                        b.action, b.failed_predicate, b.offending_state_value
                    )
                })
                .collect();
            (coverage, dropped)
        }
        None => (Rational::zero(), Vec::new()),
    };

    let verdict = if !meta.in_scope {
        residue_coverage = Rational::zero();
        Verdict::Abstain { reasons: vec!["out_of_scope".into()] }
    } else if matches!(&parts.residue, Some(r) if r.residue.is_empty()) {
        residue_coverage = Rational::zero();
        Verdict::Abstain { reasons: vec!["empty_residue".into()] }
    } else if !dropped_claims.is_empty() {
        Verdict::Residue { weight: residue_coverage.clone() }
    } else if parts.grounding.is_some() && !emitted {
        residue_coverage = Rational::zero();
        Verdict::Abstain { reasons: vec!["emission_gate_blocked".into()] }
    } else if !meta.forbidden_check_pass || !action_precondition {
        residue_coverage = Rational::zero();
        let mut reasons = Vec::new();
        if !meta.forbidden_check_pass {
            reasons.push("forbidden_content".into());
        }
        if !action_precondition {
            reasons.push("action_gate_closed".into());
        }
        Verdict::Abstain { reasons }
    } else if !parts.unverified_layers.is_empty() {
        Verdict::Partial { gaps: parts.unverified_layers.clone() }
    } else if !masses.contradicted.is_zero() {
        return Err(CardError::NeedsResidue { mass: masses.contradicted });
    } else {
        Verdict::Certified
    };

    let card = AssuranceCard {
        verdict,
        perturbation_budget,
        variant_flips: meta.variant_flips,
        semantic_agreement: meta.semantic_agreement.clone(),
        supported_mass: masses.supported,
        contradicted_mass: masses.contradicted,
        contested_mass: masses.contested,
        unknown_mass: masses.unknown,
        conformal_set_size: meta.conformal_set_size,
        calibration_gap: meta.calibration_gap.clone(),
        is_deterministic: meta.is_deterministic,
        sample_count: meta.sample_count,
        proof_of_sampling: meta.proof_of_sampling.clone(),
        in_scope: meta.in_scope,
        scope_predicates_held: meta.scope_predicates_held.clone(),
        source_snapshot_hash: meta.source_snapshot_hash,
        issue_time: meta.issue_time,
        expiry_time: meta.expiry_time,
        forbidden_check_pass: meta.forbidden_check_pass,
        action_precondition,
        budget_under_limit: meta.budget_under_limit,
        residue_coverage,
        dropped_claims,
        unverified_layers: parts.unverified_layers.clone(),
        model_version_hash: meta.model_version_hash,
        prompt_template_hash: meta.prompt_template_hash,
        human_signatures: meta.human_signatures.clone(),
        certificate_digest: meta.certificate_digest,
        verifier_version: VERIFIER_VERSION.to_string(),
        replay_handle: meta.replay_handle.clone(),
    };

    debug_assert!(verdict_consistent(&card));
    Ok(card)
}

// ---------------------------------------------------------------------------
// Policy layer
// ---------------------------------------------------------------------------

/// A deployment's published acceptance thresholds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssurancePolicy {
    pub name: String,
    pub min_supported_mass: Rational,
    pub max_contradicted_mass: Rational,
    pub max_contested_mass: Rational,
    pub required_in_scope: bool,
    pub max_unverified_gaps: u64,
    pub require_action_safe: bool,
    pub max_calibration_gap: Rational,
    pub min_perturbation_budget: Rational,
    pub require_proof_of_sampling: bool,
    /// `None` means no staleness limit (expiry still applies).
    pub max_age_seconds: Option<u64>,
    pub forbidden_must_pass: bool,
}

/// The five canonical profiles, loosest to strictest. Real deployments tune
/// their own numbers; these are documented starting points and the ones the
/// CLI accepts by name.
pub fn canonical_policies() -> Vec<AssurancePolicy> {
    let r = Rational::new;
    let base = |name: &str,
                min_s: Rational,
                max_x: Rational,
                max_c: Rational,
                scope: bool,
                gaps: u64,
                action: bool,
                age: Option<u64>,
                forbidden: bool| AssurancePolicy {
        name: name.to_string(),
        min_supported_mass: min_s,
        max_contradicted_mass: max_x,
        max_contested_mass: max_c,
        required_in_scope: scope,
        max_unverified_gaps: gaps,
        require_action_safe: action,
        max_calibration_gap: Rational::one(),
        min_perturbation_budget: Rational::zero(),
        require_proof_of_sampling: false,
        max_age_seconds: age,
        forbidden_must_pass: forbidden,
    };
    vec![
        base("creative", r(0, 1), r(1, 1), r(1, 1), false, 5, false, None, false),
        base("enterprise", r(7, 10), r(1, 10), r(1, 5), true, 2, false, Some(2_592_000), true),
        base("legal", r(9, 10), r(1, 50), r(2, 25), true, 0, false, Some(604_800), true),
        base("clinical", r(19, 20), r(1, 100), r(1, 25), true, 0, true, Some(86_400), true),
        base("agentic", r(19, 20), r(0, 1), r(1, 50), true, 0, true, Some(3_600), true),
    ]
}

pub fn canonical_policy(name: &str) -> Option<AssurancePolicy> {
    canonical_policies().into_iter().find(|p| p.name == name)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicyDecision {
    Accept,
    /// The payload may ship in reduced form once the pending reviews are
    /// satisfied; `to` names the verdict that would then apply.
    Downgrade {
        to: Verdict,
        pending: Vec<String>,
    },
    Reject {
        reason: String,
    },
}

/// Maps (policy, card, clock) to a decision. The card must be consistent —
/// an inconsistent card is an error, not a rejection, because no field of it
/// can be trusted enough to cite a reason.
///
/// Gate order: scope, forbidden content, expiry, staleness, sampling proof,
/// calibration, minimum budget — each an unconditional reject — then the
/// action gate and the per-verdict evidence gates. For residue verdicts the
/// evidence gates apply to the *payload actually shipped*: the surviving
/// coverage stands in for supported mass and the refuted/contested mass is
/// zero by construction (the residue excluded those claims). A residue that
/// fails only the supported-mass bar, or whose policy demands action safety
/// the full trajectory lacked, downgrades to pending human review instead of
/// rejecting — unless a human signature is already attached.
pub fn policy_decide(
    policy: &AssurancePolicy,
    card: &AssuranceCard,
    now: u64,
) -> Result<PolicyDecision, CardError> {
    if !verdict_consistent(card) {
        return Err(CardError::Inconsistent {
            detail: format!("verdict {} disagrees with the card's fields", card.verdict.label()),
        });
    }
    let reject = |reason: &str| Ok(PolicyDecision::Reject { reason: reason.to_string() });

    if policy.required_in_scope && !card.in_scope {
        return reject("out_of_scope");
    }
    if policy.forbidden_must_pass && !card.forbidden_check_pass {
        return reject("forbidden_content");
    }
    if now > card.expiry_time {
        return reject("expired");
    }
    if let Some(max_age) = policy.max_age_seconds {
        if now.saturating_sub(card.issue_time) > max_age {
            return reject("stale");
        }
    }
    if policy.require_proof_of_sampling && card.proof_of_sampling.is_none() {
        return reject("proof_of_sampling_missing");
    }
    if card.calibration_gap > policy.max_calibration_gap {
        return reject("calibration_gap_exceeded");
    }
    if card.perturbation_budget < policy.min_perturbation_budget {
        return reject("perturbation_budget_too_small");
    }

    let action_pending = policy.require_action_safe && !card.action_precondition;

    match &card.verdict {
        Verdict::Abstain { .. } => reject("verdict_abstain"),
        Verdict::Certified => {
            if action_pending {
                return reject("action_unsafe");
            }
            if card.supported_mass < policy.min_supported_mass {
                return reject("insufficient_supported_mass");
            }
            if card.contradicted_mass > policy.max_contradicted_mass {
                return reject("contradicted_mass_exceeded");
            }
            if card.contested_mass > policy.max_contested_mass {
                return reject("contested_mass_exceeded");
            }
            Ok(PolicyDecision::Accept)
        }
        Verdict::Partial { gaps } => {
            if action_pending {
                return reject("action_unsafe");
            }
            if gaps.len() as u64 > policy.max_unverified_gaps {
                return reject("too_many_unverified_layers");
            }
            if card.supported_mass < policy.min_supported_mass {
                return reject("insufficient_supported_mass");
            }
            if card.contradicted_mass > policy.max_contradicted_mass {
                return reject("contradicted_mass_exceeded");
            }
            if card.contested_mass > policy.max_contested_mass {
                return reject("contested_mass_exceeded");
            }
            Ok(PolicyDecision::Accept)
        }
        Verdict::Residue { weight } => {
            let has_evidence_bound = !(card.supported_mass.is_zero()
                && card.contradicted_mass.is_zero()
                && card.contested_mass.is_zero()
                && card.unknown_mass.is_zero());
            // The shipped payload carries `weight` of certifiable claims and
            // zero refuted/contested ones; with no evidence bound at all
            // (pure action residue) the evidence gates are vacuous.
            let supported_short = has_evidence_bound && *weight < policy.min_supported_mass;
            if has_evidence_bound {
                if Rational::zero() > policy.max_contradicted_mass {
                    return reject("contradicted_mass_exceeded");
                }
                if Rational::zero() > policy.max_contested_mass {
                    return reject("contested_mass_exceeded");
                }
            }
            if supported_short || action_pending {
                if !card.human_signatures.is_empty() {
                    return Ok(PolicyDecision::Accept);
                }
                return Ok(PolicyDecision::Downgrade {
                    to: card.verdict.clone(),
                    pending: vec!["human_signature".into()],
                });
            }
            Ok(PolicyDecision::Accept)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grounding::{build_grounding, AtomicClaim, SignedTriple, Thresholds};
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn filler(head: u8, tail: u8) -> Digest32 {
        let mut d = [head; 32];
        d[31] = tail;
        d
    }

    /// A residue-verdict card shaped like a blocked clinical recommendation:
    /// one refuted dosing claim dropped, coverage 23/25, action gate closed.
    fn clinical_shaped_card() -> AssuranceCard {
        AssuranceCard {
            verdict: Verdict::Residue { weight: r(23, 25) },
            perturbation_budget: r(3, 50),
            variant_flips: 0,
            semantic_agreement: Rational::one(),
            supported_mass: r(23, 25),
            contradicted_mass: r(2, 25),
            contested_mass: Rational::zero(),
            unknown_mass: Rational::zero(),
            conformal_set_size: 0,
            calibration_gap: r(3, 100),
            is_deterministic: false,
            sample_count: 5,
            proof_of_sampling: None,
            in_scope: true,
            scope_predicates_held: vec![
                "query_in_scope".into(),
                "records_current".into(),
                "scorer_whitelisted".into(),
            ],
            source_snapshot_hash: filler(0xfa, 0x21),
            issue_time: 1_714_000_000,
            expiry_time: 1_714_086_400,
            forbidden_check_pass: true,
            action_precondition: false,
            budget_under_limit: true,
            residue_coverage: r(23, 25),
            dropped_claims: vec![
                "claim_04: stated clearance lies inside the approved dosing range (refuted by the product label)".into(),
            ],
            unverified_layers: vec![],
            model_version_hash: filler(0x3d, 0xab),
            prompt_template_hash: filler(0x9a, 0x6d),
            human_signatures: vec![],
            certificate_digest: filler(0xb7, 0x41),
            verifier_version: VERIFIER_VERSION.into(),
            replay_handle: "clinical-2024-04-24-a1".into(),
        }
    }

    /// A pure action residue: no evidence masses, two refused deletions,
    /// executed steps all guard-discharged.
    fn agentic_shaped_card() -> AssuranceCard {
        AssuranceCard {
            verdict: Verdict::Residue { weight: r(39, 50) },
            perturbation_budget: Rational::zero(),
            variant_flips: 0,
            semantic_agreement: Rational::one(),
            supported_mass: Rational::zero(),
            contradicted_mass: Rational::zero(),
            contested_mass: Rational::zero(),
            unknown_mass: Rational::zero(),
            conformal_set_size: 0,
            calibration_gap: Rational::zero(),
            is_deterministic: true,
            sample_count: 1,
            proof_of_sampling: None,
            in_scope: true,
            scope_predicates_held: vec![
                "instruction_role_tagged".into(),
                "sandbox_declared".into(),
            ],
            source_snapshot_hash: filler(0x11, 0x22),
            issue_time: 1_714_000_000,
            expiry_time: 1_714_003_600,
            forbidden_check_pass: true,
            action_precondition: true,
            budget_under_limit: true,
            residue_coverage: r(39, 50),
            dropped_claims: vec![
                "rm /sbx/notes/shared/plan.md — blocked by owner_is(user)".into(),
                "rm /sbx/notes/shared/roadmap.md — blocked by owner_is(user)".into(),
            ],
            unverified_layers: vec![],
            model_version_hash: filler(0x33, 0x44),
            prompt_template_hash: filler(0x55, 0x66),
            human_signatures: vec![],
            certificate_digest: filler(0x77, 0x88),
            verifier_version: VERIFIER_VERSION.into(),
            replay_handle: "sandbox-cleanup-2024-04-24".into(),
        }
    }

    #[test]
    fn canonical_policy_table_is_exact() {
        let ps = canonical_policies();
        let names: Vec<&str> = ps.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, vec!["creative", "enterprise", "legal", "clinical", "agentic"]);

        let by = |n: &str| canonical_policy(n).unwrap();
        let creative = by("creative");
        assert_eq!(creative.min_supported_mass, Rational::zero());
        assert_eq!(creative.max_contradicted_mass, Rational::one());
        assert_eq!(creative.max_contested_mass, Rational::one());
        assert!(!creative.required_in_scope);
        assert_eq!(creative.max_unverified_gaps, 5);
        assert!(!creative.require_action_safe);
        assert_eq!(creative.max_age_seconds, None);
        assert!(!creative.forbidden_must_pass);

        let enterprise = by("enterprise");
        assert_eq!(enterprise.min_supported_mass, r(7, 10));
        assert_eq!(enterprise.max_contradicted_mass, r(1, 10));
        assert_eq!(enterprise.max_contested_mass, r(1, 5));
        assert_eq!(enterprise.max_age_seconds, Some(2_592_000));

        let legal = by("legal");
        assert_eq!(legal.min_supported_mass, r(9, 10));
        assert_eq!(legal.max_contradicted_mass, r(1, 50));
        assert_eq!(legal.max_contested_mass, r(2, 25));
        assert_eq!(legal.max_unverified_gaps, 0);
        assert_eq!(legal.max_age_seconds, Some(604_800));

        let clinical = by("clinical");
        assert_eq!(clinical.min_supported_mass, r(19, 20));
        assert_eq!(clinical.max_contradicted_mass, r(1, 100));
        assert_eq!(clinical.max_contested_mass, r(1, 25));
        assert!(clinical.require_action_safe);
        assert_eq!(clinical.max_age_seconds, Some(86_400));

        let agentic = by("agentic");
        assert_eq!(agentic.min_supported_mass, r(19, 20));
        assert_eq!(agentic.max_contradicted_mass, Rational::zero());
        assert_eq!(agentic.max_contested_mass, r(1, 50));
        assert!(agentic.require_action_safe);
        assert_eq!(agentic.max_age_seconds, Some(3_600));

        for p in &ps {
            assert_eq!(p.max_calibration_gap, Rational::one());
            assert_eq!(p.min_perturbation_budget, Rational::zero());
            assert!(!p.require_proof_of_sampling);
        }
    }

    #[test]
    fn clinical_card_downgrades_pending_signature() {
        let card = clinical_shaped_card();
        assert!(verify_card(&card).passed());
        let policy = canonical_policy("clinical").unwrap();
        let decision = policy_decide(&policy, &card, 1_714_003_600).unwrap();
        assert_eq!(
            decision,
            PolicyDecision::Downgrade {
                to: Verdict::Residue { weight: r(23, 25) },
                pending: vec!["human_signature".into()],
            }
        );

        // A signed card sails through the same gates.
        let mut signed = card.clone();
        signed.human_signatures = vec![vec![0xab; 64]];
        assert_eq!(policy_decide(&policy, &signed, 1_714_003_600).unwrap(), PolicyDecision::Accept);

        // The loosest profile accepts while the card is fresh.
        let creative = canonical_policy("creative").unwrap();
        assert_eq!(policy_decide(&creative, &card, 1_714_003_600).unwrap(), PolicyDecision::Accept);
    }

    #[test]
    fn agentic_card_is_accepted_within_the_hour() {
        let card = agentic_shaped_card();
        assert!(verify_card(&card).passed());
        let policy = canonical_policy("agentic").unwrap();
        assert_eq!(policy_decide(&policy, &card, 1_714_001_800).unwrap(), PolicyDecision::Accept);
    }

    #[test]
    fn freshness_gates_reject_expired_and_stale_cards() {
        let card = clinical_shaped_card();
        let policy = canonical_policy("clinical").unwrap();

        let past_expiry = policy_decide(&policy, &card, 1_714_086_401).unwrap();
        assert_eq!(past_expiry, PolicyDecision::Reject { reason: "expired".into() });

        // Within expiry but past the policy's 24h staleness limit is
        // impossible here (expiry is 24h), so shrink the policy age instead.
        let mut tight = policy.clone();
        tight.max_age_seconds = Some(60);
        let stale = policy_decide(&tight, &card, 1_714_000_100).unwrap();
        assert_eq!(stale, PolicyDecision::Reject { reason: "stale".into() });
    }

    #[test]
    fn hard_gates_fire_before_verdict_gates() {
        let mut card = clinical_shaped_card();
        card.in_scope = false;
        // Residue consistency does not involve in_scope, so the card stays
        // consistent and the scope gate rejects.
        let policy = canonical_policy("clinical").unwrap();
        assert_eq!(
            policy_decide(&policy, &card, 1_714_003_600).unwrap(),
            PolicyDecision::Reject { reason: "out_of_scope".into() }
        );

        let mut card = clinical_shaped_card();
        card.forbidden_check_pass = false;
        assert_eq!(
            policy_decide(&policy, &card, 1_714_003_600).unwrap(),
            PolicyDecision::Reject { reason: "forbidden_content".into() }
        );

        let mut card = clinical_shaped_card();
        card.calibration_gap = r(2, 1);
        assert_eq!(
            policy_decide(&policy, &card, 1_714_003_600).unwrap(),
            PolicyDecision::Reject { reason: "calibration_gap_exceeded".into() }
        );

        let mut policy = policy;
        policy.require_proof_of_sampling = true;
        assert_eq!(
            policy_decide(&policy, &clinical_shaped_card(), 1_714_003_600).unwrap(),
            PolicyDecision::Reject { reason: "proof_of_sampling_missing".into() }
        );
    }

    #[test]
    fn abstain_cards_are_always_rejected() {
        let mut card = clinical_shaped_card();
        card.verdict = Verdict::Abstain { reasons: vec!["emission_gate_blocked".into()] };
        card.residue_coverage = Rational::zero();
        let policy = canonical_policy("creative").unwrap();
        assert_eq!(
            policy_decide(&policy, &card, 1_714_003_600).unwrap(),
            PolicyDecision::Reject { reason: "verdict_abstain".into() }
        );
    }

    #[test]
    fn inconsistent_cards_are_errors_not_rejections() {
        let mut card = clinical_shaped_card();
        card.dropped_claims.clear(); // residue with nothing dropped
        assert!(!verdict_consistent(&card));
        let policy = canonical_policy("clinical").unwrap();
        assert!(matches!(
            policy_decide(&policy, &card, 1_714_003_600),
            Err(CardError::Inconsistent { .. })
        ));
    }

    #[test]
    fn consistency_predicate_branches() {
        let mut card = clinical_shaped_card();
        card.verdict = Verdict::Certified;
        assert!(!verdict_consistent(&card)); // contradicted mass nonzero
        card.contradicted_mass = Rational::zero();
        card.action_precondition = true;
        assert!(verdict_consistent(&card));
        card.unverified_layers = vec!["retrieval".into()];
        assert!(!verdict_consistent(&card));

        card.verdict = Verdict::Partial { gaps: vec!["retrieval".into()] };
        assert!(verdict_consistent(&card));
        card.verdict = Verdict::Partial { gaps: vec!["other".into()] };
        assert!(!verdict_consistent(&card));

        card.verdict = Verdict::Abstain { reasons: vec![] };
        assert!(!verdict_consistent(&card));
        card.verdict = Verdict::Abstain { reasons: vec!["nothing_certifiable".into()] };
        card.residue_coverage = Rational::zero();
        assert!(verdict_consistent(&card));
    }

    #[test]
    fn verify_card_localizes_field_tampering() {
        let mut card = clinical_shaped_card();
        card.supported_mass = r(24, 25); // masses now sum to 26/25
        let rep = verify_card(&card);
        assert_eq!(rep.failure_names(), vec!["masses"]);

        let mut card = clinical_shaped_card();
        card.residue_coverage = r(3, 2);
        card.verdict = Verdict::Residue { weight: r(3, 2) };
        let rep = verify_card(&card);
        assert_eq!(rep.failure_names(), vec!["residue_coverage_range"]);

        let mut card = clinical_shaped_card();
        card.expiry_time = card.issue_time - 1;
        let rep = verify_card(&card);
        assert_eq!(rep.failure_names(), vec!["timestamps"]);
    }

    // -----------------------------------------------------------------
    // Consolidation
    // -----------------------------------------------------------------

    /// Grounding certificate with one refuted claim out of three; the
    /// residual gate blocks emission.
    fn small_blocked_grounding() -> GroundingCertificate {
        let claims = vec![
            AtomicClaim::new("The dose is two tablets daily.", r(2, 1)),
            AtomicClaim::new("The course lasts five days.", r(1, 1)),
            AtomicClaim::new("The clearance is inside the approved range.", r(1, 1)),
        ];
        let sup =
            |p: (i64, i64)| SignedTriple::new(r(p.0, p.1), Rational::zero(), r(p.1 - p.0, p.1));
        let refute =
            |n: (i64, i64)| SignedTriple::new(Rational::zero(), r(n.0, n.1), r(n.1 - n.0, n.1));
        let support = vec![
            vec![sup((9, 10)), sup((4, 5))],
            vec![sup((17, 20)), sup((3, 4))],
            vec![refute((9, 10)), refute((7, 10))],
        ];
        let thresholds = Thresholds {
            support: r(7, 10),
            contradiction: r(1, 2),
            emission: r(1, 2),
            residual: r(1, 20),
        };
        build_grounding(
            "The dose is two tablets daily. The course lasts five days. The clearance is inside the approved range.",
            claims,
            vec!["guideline".into(), "label".into()],
            support,
            thresholds,
            vec![AssumptionTag::oracle("SignedSupportOracle")],
        )
        .unwrap()
    }

    fn residue_over(g: &GroundingCertificate) -> ResidueCertificate {
        let admissible: Vec<bool> =
            g.statuses.iter().map(|s| *s == crate::grounding::EpistemicStatus::Supported).collect();
        crate::mcr::compute_residue(
            &g.claims,
            &[crate::mcr::Constraint::per_claim("admit_established", admissible)],
            crate::mcr::ResidueMode::Exact,
        )
        .unwrap()
    }

    #[test]
    fn consolidation_builds_an_evidence_residue() {
        let g = small_blocked_grounding();
        assert!(!g.emitted);
        let residue = residue_over(&g);
        let parts =
            CardParts { grounding: Some(g), residue: Some(residue), ..CardParts::default() };
        let card = build_card(&parts, &CardMeta::baseline(100, 200)).unwrap();
        assert_eq!(card.verdict, Verdict::Residue { weight: r(3, 4) });
        assert_eq!(card.supported_mass, r(3, 4));
        assert_eq!(card.contradicted_mass, r(1, 4));
        assert_eq!(card.dropped_claims.len(), 1);
        assert!(card.action_precondition);
        assert!(verify_card(&card).passed());
    }

    #[test]
    fn consolidation_abstains_when_nothing_survives() {
        let g = small_blocked_grounding();
        // A residue certificate that saves nothing: forbid every claim.
        let none = crate::mcr::compute_residue(
            &g.claims,
            &[crate::mcr::Constraint::per_claim("admit_none", vec![false; 3])],
            crate::mcr::ResidueMode::Exact,
        )
        .unwrap();
        let parts = CardParts { grounding: Some(g), residue: Some(none), ..CardParts::default() };
        let card = build_card(&parts, &CardMeta::baseline(100, 200)).unwrap();
        assert_eq!(card.verdict, Verdict::Abstain { reasons: vec!["empty_residue".into()] });
        assert!(card.residue_coverage.is_zero());
        assert!(verify_card(&card).passed());
    }

    #[test]
    fn consolidation_abstains_on_blocked_emission_without_salvage() {
        let parts =
            CardParts { grounding: Some(small_blocked_grounding()), ..CardParts::default() };
        let card = build_card(&parts, &CardMeta::baseline(100, 200)).unwrap();
        assert_eq!(
            card.verdict,
            Verdict::Abstain { reasons: vec!["emission_gate_blocked".into()] }
        );
    }

    #[test]
    fn consolidation_abstains_out_of_scope() {
        let mut meta = CardMeta::baseline(100, 200);
        meta.in_scope = false;
        let g = small_blocked_grounding();
        let residue = residue_over(&g);
        let parts =
            CardParts { grounding: Some(g), residue: Some(residue), ..CardParts::default() };
        let card = build_card(&parts, &meta).unwrap();
        assert_eq!(card.verdict, Verdict::Abstain { reasons: vec!["out_of_scope".into()] });
        assert!(card.residue_coverage.is_zero());
        assert!(verify_card(&card).passed());
    }

    #[test]
    fn consolidation_without_grounding_certifies_or_marks_gaps() {
        let card = build_card(&CardParts::default(), &CardMeta::baseline(100, 200)).unwrap();
        assert_eq!(card.verdict, Verdict::Certified);
        assert!(card.supported_mass.is_zero());

        let parts = CardParts {
            unverified_layers: vec!["embedding_sensitivity".into()],
            ..CardParts::default()
        };
        let card = build_card(&parts, &CardMeta::baseline(100, 200)).unwrap();
        assert_eq!(card.verdict, Verdict::Partial { gaps: vec!["embedding_sensitivity".into()] });
        assert!(verify_card(&card).passed());
    }

    #[test]
    fn consolidation_demands_a_residue_for_contradicted_emissions() {
        // Loosen the residual ceiling so this grounding cert emits even with
        // a refuted claim; certification must then be refused.
        let mut g = small_blocked_grounding();
        g.thresholds.residual = r(1, 2);
        g.emitted = true;
        let parts = CardParts { grounding: Some(g), ..CardParts::default() };
        let err = build_card(&parts, &CardMeta::baseline(100, 200)).unwrap_err();
        assert_eq!(err, CardError::NeedsResidue { mass: r(1, 4) });
    }

    #[test]
    fn action_refusals_with_no_progress_close_the_gate() {
        let block = BlockRecord {
            action: "rm /sbx/x".into(),
            failed_predicate: "owner_is(user)".into(),
            offending_state_value: "/sbx/x owned by team".into(),
            expected_condition: "owner == user".into(),
            proposal_text: "ask the owner".into(),
        };
        // Blocks with an empty trajectory: unsafe payload.
        let parts = CardParts {
            action: Some(ActionSummary {
                executed_steps: 0,
                blocked: vec![block.clone()],
                assumptions: vec![],
            }),
            ..CardParts::default()
        };
        let card = build_card(&parts, &CardMeta::baseline(100, 200)).unwrap();
        assert!(!card.action_precondition);

        // Blocks alongside executed steps: dropped work, payload still safe,
        // and with no residue certificate the steps themselves are counted.
        let parts = CardParts {
            action: Some(ActionSummary {
                executed_steps: 3,
                blocked: vec![block],
                assumptions: vec![],
            }),
            ..CardParts::default()
        };
        let card = build_card(&parts, &CardMeta::baseline(100, 200)).unwrap();
        assert!(card.action_precondition);
        assert_eq!(card.verdict, Verdict::Residue { weight: r(3, 4) });
        assert_eq!(card.dropped_claims.len(), 1);
        assert!(verify_card(&card).passed());
    }

    // -----------------------------------------------------------------
    // Property tests
    // -----------------------------------------------------------------

    fn arb_masses() -> impl Strategy<Value = (Rational, Rational, Rational, Rational)> {
        (0u32..6, 0u32..6, 0u32..6, 0u32..6).prop_map(|(a, b, c, d)| {
            let total = a + b + c + d;
            if total == 0 {
                (Rational::zero(), Rational::zero(), Rational::zero(), Rational::zero())
            } else {
                let q = |x: u32| Rational::new(x as i64, total as i64);
                (q(a), q(b), q(c), q(d))
            }
        })
    }

    fn arb_consistent_card() -> impl Strategy<Value = AssuranceCard> {
        (
            arb_masses(),
            0u8..4,
            proptest::collection::vec("[a-z]{3,8}", 0..3),
            any::<bool>(),
            any::<bool>(),
            any::<bool>(),
            (0u32..100, 1u32..100),
            0u64..1000,
        )
            .prop_map(
                |(masses, verdict_kind, layers, in_scope, forbidden, action, cov, issue)| {
                    let coverage = Rational::new(cov.0.min(cov.1) as i64, cov.1 as i64);
                    let mut card = AssuranceCard {
                        verdict: Verdict::Certified,
                        perturbation_budget: r(1, 10),
                        variant_flips: 0,
                        semantic_agreement: Rational::one(),
                        supported_mass: masses.0,
                        contradicted_mass: masses.1,
                        contested_mass: masses.2,
                        unknown_mass: masses.3,
                        conformal_set_size: 0,
                        calibration_gap: Rational::zero(),
                        is_deterministic: true,
                        sample_count: 1,
                        proof_of_sampling: None,
                        in_scope,
                        scope_predicates_held: vec![],
                        source_snapshot_hash: [0; 32],
                        issue_time: issue,
                        expiry_time: issue + 100,
                        forbidden_check_pass: forbidden,
                        action_precondition: action,
                        budget_under_limit: true,
                        residue_coverage: coverage,
                        dropped_claims: vec![],
                        unverified_layers: layers.clone(),
                        model_version_hash: [0; 32],
                        prompt_template_hash: [0; 32],
                        human_signatures: vec![],
                        certificate_digest: [0; 32],
                        verifier_version: VERIFIER_VERSION.into(),
                        replay_handle: String::new(),
                    };
                    match verdict_kind {
                        0 => {
                            card.verdict = Verdict::Certified;
                            card.unverified_layers.clear();
                            card.forbidden_check_pass = true;
                            card.action_precondition = true;
                            card.in_scope = true;
                            // Fold refuted mass into unknown to keep the sum.
                            card.unknown_mass = &card.unknown_mass + &card.contradicted_mass;
                            card.contradicted_mass = Rational::zero();
                        }
                        1 => {
                            card.verdict = Verdict::Partial { gaps: layers };
                            card.forbidden_check_pass = true;
                            card.action_precondition = true;
                        }
                        2 => {
                            card.verdict =
                                Verdict::Residue { weight: card.residue_coverage.clone() };
                            card.dropped_claims = vec!["dropped claim".into()];
                        }
                        _ => {
                            card.verdict = Verdict::Abstain { reasons: vec!["no_emission".into()] };
                            card.residue_coverage = Rational::zero();
                        }
                    }
                    card
                },
            )
    }

    fn arb_policy() -> impl Strategy<Value = AssurancePolicy> {
        (
            0u32..=20,
            0u32..=20,
            0u32..=20,
            any::<bool>(),
            0u64..3,
            any::<bool>(),
            any::<bool>(),
            proptest::option::of(0u64..500),
            any::<bool>(),
        )
            .prop_map(|(s, x, c, scope, gaps, action, sampling, age, forbidden)| {
                AssurancePolicy {
                    name: "generated".into(),
                    min_supported_mass: Rational::new(s as i64, 20),
                    max_contradicted_mass: Rational::new(x as i64, 20),
                    max_contested_mass: Rational::new(c as i64, 20),
                    required_in_scope: scope,
                    max_unverified_gaps: gaps,
                    require_action_safe: action,
                    max_calibration_gap: Rational::one(),
                    min_perturbation_budget: Rational::zero(),
                    require_proof_of_sampling: sampling,
                    max_age_seconds: age,
                    forbidden_must_pass: forbidden,
                }
            })
    }

    /// Every way of loosening a policy by one field.
    fn relaxations(p: &AssurancePolicy) -> Vec<AssurancePolicy> {
        let mut out = Vec::new();
        let mut push = |f: &dyn Fn(&mut AssurancePolicy)| {
            let mut q = p.clone();
            f(&mut q);
            out.push(q);
        };
        push(&|q| q.min_supported_mass = Rational::zero());
        push(&|q| q.max_contradicted_mass = Rational::one());
        push(&|q| q.max_contested_mass = Rational::one());
        push(&|q| q.required_in_scope = false);
        push(&|q| q.max_unverified_gaps = u64::MAX);
        push(&|q| q.require_action_safe = false);
        push(&|q| q.max_calibration_gap = &q.max_calibration_gap + &Rational::one());
        push(&|q| q.min_perturbation_budget = Rational::int(-1));
        push(&|q| q.require_proof_of_sampling = false);
        push(&|q| q.max_age_seconds = None);
        push(&|q| q.forbidden_must_pass = false);
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(192))]

        #[test]
        fn generated_cards_are_consistent_and_verify(card in arb_consistent_card()) {
            prop_assert!(verdict_consistent(&card));
            prop_assert!(verify_card(&card).passed(), "{}", verify_card(&card));
        }

        #[test]
        fn relaxing_any_single_threshold_never_revokes_acceptance(
            card in arb_consistent_card(),
            policy in arb_policy(),
            now_offset in 0u64..200,
        ) {
            let now = card.issue_time + now_offset;
            let before = policy_decide(&policy, &card, now).unwrap();
            if before == PolicyDecision::Accept {
                for relaxed in relaxations(&policy) {
                    let after = policy_decide(&relaxed, &card, now).unwrap();
                    prop_assert_eq!(
                        after,
                        PolicyDecision::Accept,
                        "relaxed policy revoked acceptance: {:?}",
                        relaxed
                    );
                }
            }
        }
    }
}
