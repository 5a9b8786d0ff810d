//! Reference scenarios embedded as wire-format bundles.
//!
//! Each fixture is a complete [`CertificateBundle`] — certificates, card, and
//! oracle evidence — stored under `fixtures/v1/` in canonical wire form and
//! embedded into the library at compile time. The builder functions here
//! regenerate every bundle from first principles; `examples/gen_fixtures.rs`
//! writes their output to disk, and a test pins the embedded bytes to the
//! rebuilt ones so the stored wires can never drift from the code.
//!
//! Every expected value carried by a fixture is annotated with where it comes
//! from ([`FixtureSource`]): transcribed from a published worked example,
//! true by how the scenario was assembled, or confirmed by exhaustive
//! enumeration. The scenario prose itself (claims, chunks, block records) is
//! original to this repository.

use crate::action::harness::{LabeledStep, SandboxTask, UnsafeProposal};
use crate::action::sandbox::{SandboxDomain, SandboxState, SandboxTool};
use crate::action::{execute, ActionRun, GatedStep};
use crate::audit::assumptions::AssumptionTag;
use crate::audit::bundle::{BundleError, CertificateBundle, OracleEvidence};
use crate::audit::inputs;
use crate::card::{build_card, ActionSummary, CardMeta, CardParts, Digest32};
use crate::composition::{
    compose, CompositionCert, LayerKind, LayerWitness, ToyLayer, ToyPipeline,
};
use crate::embedding::{build_sensitivity, SensitivityCertificate};
use crate::grounding::{
    build_grounding, AtomicClaim, GroundingCertificate, SignedTriple, Thresholds,
};
use crate::mcr::{compute_residue, Constraint, ResidueCertificate, ResidueMode};
use crate::numeric::{Rational, RationalVector};

/// Scenario epoch: all fixture clocks are anchored here so replays are exact.
pub const FIXTURE_EPOCH: u64 = 1_714_000_000;

const DAY: u64 = 86_400;

/// Registered fixture names, loadable via [`load_fixture`].
pub const FIXTURE_NAMES: [&str; 4] =
    ["mcr_clinical_5claims", "composition_rag7", "card_clinical", "card_agentic"];

/// Where a fixture's expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureSource {
    /// Transcribed from the published worked example this scenario re-stages.
    PublishedExample,
    /// Holds by how the scenario was assembled; checkable but not sourced.
    ByConstruction,
    /// Confirmed by exhaustive enumeration over the instance.
    DerivedByEnumeration,
}

impl FixtureSource {
    pub fn label(self) -> &'static str {
        match self {
            FixtureSource::PublishedExample => "published-example",
            FixtureSource::ByConstruction => "by-construction",
            FixtureSource::DerivedByEnumeration => "derived-by-enumeration",
        }
    }
}

/// One named expected value with its provenance. Values are canonical display
/// strings (rationals in lowest terms, lists comma-joined) so they can be
/// compared without a schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedValue {
    pub key: &'static str,
    pub value: String,
    pub source: FixtureSource,
}

/// A loaded fixture: the decoded bundle plus its annotated expected values.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub bundle: CertificateBundle,
    pub expected: Vec<ExpectedValue>,
}

impl Fixture {
    pub fn expected_str(&self, key: &str) -> Option<&str> {
        self.expected.iter().find(|e| e.key == key).map(|e| e.value.as_str())
    }

    pub fn expected_rational(&self, key: &str) -> Option<Rational> {
        self.expected_str(key)?.parse().ok()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("unknown fixture {0:?} (known: mcr_clinical_5claims, composition_rag7, card_clinical, card_agentic)")]
    Unknown(String),
    #[error("fixture {name} is malformed: {source}")]
    Malformed { name: &'static str, source: BundleError },
    #[error("unknown input file {0:?} (known: five_claims, five_constraints, rag7_layers, approved_baseline, sandbox_state, unsafe_proposal, cleanup_tasks, unsafe_registry)")]
    UnknownInput(String),
}

/// The embedded wire bytes for a registered fixture.
pub fn embedded_wire(name: &str) -> Option<&'static str> {
    match name {
        "mcr_clinical_5claims" => Some(include_str!(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/fixtures/v1/mcr_clinical_5claims.bundle"
        ))),
        "composition_rag7" => Some(include_str!(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/fixtures/v1/composition_rag7.bundle"
        ))),
        "card_clinical" => Some(include_str!(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/fixtures/v1/card_clinical.bundle"
        ))),
        "card_agentic" => Some(include_str!(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/fixtures/v1/card_agentic.bundle"
        ))),
        _ => None,
    }
}

fn canonical_name(name: &str) -> Option<&'static str> {
    FIXTURE_NAMES.iter().copied().find(|n| *n == name)
}

/// Decodes a registered fixture from its embedded wire form.
pub fn load_fixture(name: &str) -> Result<Fixture, FixtureError> {
    let canonical = canonical_name(name).ok_or_else(|| FixtureError::Unknown(name.to_string()))?;
    let wire = embedded_wire(canonical).expect("registered names have embedded wires");
    let bundle = CertificateBundle::from_wire(wire)
        .map_err(|source| FixtureError::Malformed { name: canonical, source })?;
    Ok(Fixture { name: canonical, bundle, expected: expected_values(canonical) })
}

/// Rebuilds a registered fixture's bundle from code (the generation path the
/// embedded wires were produced by).
pub fn build_bundle(name: &str) -> Result<CertificateBundle, FixtureError> {
    match canonical_name(name).ok_or_else(|| FixtureError::Unknown(name.to_string()))? {
        "mcr_clinical_5claims" => Ok(mcr_clinical_5claims_bundle()),
        "composition_rag7" => Ok(composition_rag7_bundle()),
        "card_clinical" => Ok(card_clinical_bundle()),
        "card_agentic" => Ok(card_agentic_bundle()),
        _ => unreachable!("canonical_name only returns registered names"),
    }
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

/// A signed-score triple with the orthogonal remainder derived, keeping every
/// row on the simplex by construction.
fn t(pos_n: i64, pos_d: i64, neg_n: i64, neg_d: i64) -> SignedTriple {
    let pos = r(pos_n, pos_d);
    let neg = r(neg_n, neg_d);
    let orth = &(&Rational::one() - &pos) - &neg;
    SignedTriple::new(pos, neg, orth)
}

/// The all-orthogonal triple: the chunk says nothing about the claim.
fn z() -> SignedTriple {
    t(0, 1, 0, 1)
}

/// Recognizable placeholder digest for external hashes fixtures do not model.
fn filler(head: u8, tail: u8) -> Digest32 {
    let mut d = [head; 32];
    d[31] = tail;
    d
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn fixture_thresholds() -> Thresholds {
    Thresholds { support: r(7, 10), contradiction: r(1, 2), emission: r(1, 2), residual: r(1, 20) }
}

fn evidence(oracle: &str) -> OracleEvidence {
    OracleEvidence { oracle: oracle.to_string(), attested_at: FIXTURE_EPOCH, ttl_seconds: 30 * DAY }
}

/// Attaches a card to a bundle whose certificate sections are already in
/// place: the card's digest field commits to the bundle's payload digest.
fn seal(mut bundle: CertificateBundle, parts: &CardParts, mut meta: CardMeta) -> CertificateBundle {
    meta.certificate_digest =
        bundle.payload_digest().expect("fixture certificates are serializable");
    let card = build_card(parts, &meta).expect("fixture parts consolidate");
    bundle.card = Some(card);
    bundle
}

// ---------------------------------------------------------------------------
// Fixture 1: mcr_clinical_5claims
// ---------------------------------------------------------------------------
//
// A five-claim treatment answer where the safety-clearance claim is refuted
// by an exposure log. Two admission rules interact: direct grounding excludes
// the refuted clearance and the unknown follow-up, and a dependency rule then
// excludes the treatment order that leaned on the clearance. The surviving
// residue is exactly the diagnosis and the spacing instruction, weight 4.

/// The five weighted claims: weights 3, 2, 1, 3/2, 1/2.
pub fn five_claim_claims() -> Vec<AtomicClaim> {
    vec![
        AtomicClaim::new("The patient presents with relapsing synovial inflammation", r(3, 1)),
        AtomicClaim::new("Begin veltrazine at 40 mg by mouth", r(2, 1)),
        AtomicClaim::new("Space the doses twelve hours apart", r(1, 1)),
        AtomicClaim::new("The intake screen found no veltrazine cross-sensitivity", r(3, 2)),
        AtomicClaim::new("Book a follow-up review in six weeks", r(1, 2)),
    ]
}

/// Grounding for the five claims against two evidence chunks. Best scores per
/// claim land at (23/25, 3/100), (22/25, 1/25), (81/100, 1/50), (9/20,
/// 71/100), (3/10, 1/5) — supported, supported, supported, contradicted,
/// unknown at thresholds 7/10 and 1/2.
pub fn five_claim_grounding() -> GroundingCertificate {
    let claims = five_claim_claims();
    let answer = crate::grounding::conjoin(&claims);
    let chunks = strings(&[
        "Intake summary: imaging confirms relapsing synovial inflammation; the standard course is veltrazine 40 mg by mouth spaced twelve hours apart.",
        "Exposure log: a prior note records a suspected veltrazine cross-sensitivity reaction.",
    ]);
    let support = vec![
        vec![t(23, 25, 3, 100), z()],
        vec![t(22, 25, 1, 25), z()],
        vec![t(81, 100, 1, 50), z()],
        vec![t(9, 20, 1, 10), t(1, 5, 71, 100)],
        vec![t(3, 10, 1, 5), z()],
    ];
    build_grounding(
        answer,
        claims,
        chunks,
        support,
        fixture_thresholds(),
        vec![
            AssumptionTag::oracle("DecompositionOracle"),
            AssumptionTag::oracle("SignedSupportOracle"),
        ],
    )
    .expect("five-claim grounding inputs are valid")
}

/// The two admission rules: grounding admits only supported claims, and the
/// treatment order (claim 1) additionally requires the clearance (claim 3) to
/// have been established — which it was not.
pub fn five_claim_constraints() -> Vec<Constraint> {
    let established = vec![true, true, true, false, false];
    vec![
        Constraint::per_claim("admit_established", established.clone()),
        Constraint::dependency("order_requires_clearance", vec![(1, 3)], established),
    ]
}

/// The exact residue: indices {0, 2}, weight 4, coverage 1/2.
pub fn five_claim_residue() -> ResidueCertificate {
    compute_residue(&five_claim_claims(), &five_claim_constraints(), ResidueMode::Exact)
        .expect("five-claim instance is enumerable")
}

pub fn mcr_clinical_5claims_bundle() -> CertificateBundle {
    let grounding = five_claim_grounding();
    let residue = five_claim_residue();
    let bundle = CertificateBundle {
        card: None,
        grounding: Some(grounding.clone()),
        sensitivity: None,
        residue: Some(residue.clone()),
        composition: None,
        action: None,
        oracle_evidence: vec![evidence("DecompositionOracle"), evidence("SignedSupportOracle")],
    };
    let parts =
        CardParts { grounding: Some(grounding), residue: Some(residue), ..CardParts::default() };
    let mut meta = CardMeta::baseline(FIXTURE_EPOCH, FIXTURE_EPOCH + DAY);
    meta.scope_predicates_held = strings(&["question_in_catalog", "corpus_snapshot_pinned"]);
    meta.source_snapshot_hash = filler(0x5c, 0x01);
    meta.model_version_hash = filler(0x3d, 0x02);
    meta.prompt_template_hash = filler(0x9a, 0x03);
    meta.replay_handle = "joint-flare-salvage-2026-05-02-e9d3".into();
    seal(bundle, &parts, meta)
}

// ---------------------------------------------------------------------------
// Fixture 2: composition_rag7
// ---------------------------------------------------------------------------
//
// A seven-layer scalar pipeline — two continuous maps and five threshold
// gates — traced at input 2/5. The derived witnesses carry gains
// (1, 0, 0, 0, 1, 0, 0) and margins (3/25, 50, 3, 2/25, 77/100, 1, 1); the
// stability budget is 3/25 and the end-to-end gain is zero.

/// The seven-layer toy pipeline the composition fixture traces.
pub fn toy_pipeline7() -> ToyPipeline {
    ToyPipeline {
        layers: vec![
            ToyLayer::Linear {
                anchor: r(2, 5),
                value_at_anchor: r(2, 5),
                kink_radius: r(3, 25),
                inner_slope: r(1, 1),
                outer_slope: r(5, 1),
            },
            ToyLayer::Gate { threshold: r(-248, 5), ge_value: r(1, 1), lt_value: r(-9, 1) },
            ToyLayer::Gate { threshold: r(-2, 1), ge_value: r(2, 1), lt_value: r(-8, 1) },
            ToyLayer::Gate { threshold: r(48, 25), ge_value: r(3, 1), lt_value: r(-7, 1) },
            ToyLayer::Linear {
                anchor: r(3, 1),
                value_at_anchor: r(3, 1),
                kink_radius: r(77, 100),
                inner_slope: r(1, 1),
                outer_slope: r(5, 1),
            },
            ToyLayer::Gate { threshold: r(2, 1), ge_value: r(4, 1), lt_value: r(-6, 1) },
            ToyLayer::Gate { threshold: r(3, 1), ge_value: r(5, 1), lt_value: r(-5, 1) },
        ],
    }
}

/// The traced input the witnesses are derived at.
pub fn toy_pipeline7_input() -> Rational {
    r(2, 5)
}

/// An input shift far past the budget that flips every gate in the pipeline.
pub fn toy_pipeline7_flip_input() -> Rational {
    &toy_pipeline7_input() - &r(21, 2)
}

pub fn composition_rag7_cert() -> CompositionCert {
    let derived =
        toy_pipeline7().derive(&toy_pipeline7_input()).expect("trace avoids kinks and thresholds");
    compose(derived.witnesses).expect("derived witnesses are well-formed")
}

pub fn composition_rag7_bundle() -> CertificateBundle {
    let composition = composition_rag7_cert();
    let bundle = CertificateBundle {
        card: None,
        grounding: None,
        sensitivity: None,
        residue: None,
        composition: Some(composition.clone()),
        action: None,
        oracle_evidence: vec![],
    };
    let parts = CardParts { composition: Some(composition), ..CardParts::default() };
    let mut meta = CardMeta::baseline(FIXTURE_EPOCH, FIXTURE_EPOCH + DAY);
    meta.scope_predicates_held = strings(&["pipeline_trace_pinned"]);
    meta.source_snapshot_hash = filler(0x41, 0x11);
    meta.model_version_hash = filler(0x52, 0x12);
    meta.prompt_template_hash = filler(0x63, 0x13);
    meta.replay_handle = "toy-pipeline-trace-2026-05-02-f2c4".into();
    seal(bundle, &parts, meta)
}

// ---------------------------------------------------------------------------
// Fixture 3: card_clinical
// ---------------------------------------------------------------------------
//
// A twelve-claim medication-plan answer (total weight 25) whose renal
// clearance claim is refuted by a pharmacy advisory: supported mass 23/25,
// contradicted mass 2/25, so the emission gate blocks at residual ceiling
// 1/20 and the residue path ships the other eleven claims. The query
// embedding certifies selectivity gap 22/125, the pipeline budget is 3/50,
// and the one attempted order was refused — so the clinical policy downgrades
// the residue to pending human sign-off.

/// Twelve claims: the flare assessment carries weight 3, everything else 2.
pub fn clinical_claims() -> Vec<AtomicClaim> {
    let texts = [
        "The flare pattern matches relapsing synovial inflammation",
        "Nerivoline is the recommended maintenance agent",
        "Maintenance dosing is one tablet every twelve hours",
        "The renal panel clears nerivoline for full-strength dosing",
        "Take doses with food to reduce stomach upset",
        "The current flare began within the last month",
        "Prior phototherapy gave only short-lived relief",
        "No interacting agents appear on the active list",
        "Liver enzymes were within range at the last draw",
        "The care plan includes a six-week review visit",
        "Home monitoring uses a weekly joint-mobility score",
        "A printed dosing card accompanies the prescription",
    ];
    texts
        .iter()
        .enumerate()
        .map(|(i, text)| AtomicClaim::new(*text, if i == 0 { r(3, 1) } else { r(2, 1) }))
        .collect()
}

/// Grounding against four chunks. Claim 3 (renal clearance) is contradicted
/// by the advisory chunk with scores (1/20, 89/100, 3/50); every other claim
/// clears the support threshold on exactly one chunk.
pub fn clinical_grounding() -> GroundingCertificate {
    let claims = clinical_claims();
    let answer = crate::grounding::conjoin(&claims);
    let chunks = strings(&[
        "Intake summary: the flare pattern matches relapsing synovial inflammation, the current flare began within the last month, and prior phototherapy gave only short-lived relief.",
        "Formulary page: nerivoline is the listed maintenance agent, dosed as one tablet every twelve hours, taken with food, and dispensed with a printed dosing card.",
        "Renal advisory: nerivoline is contraindicated below a filtration index of 40, and the most recent panel puts this patient's index at 31.",
        "Labs and plan: no interacting agents on the active list, liver enzymes in range at the last draw, a six-week review visit booked, and weekly joint-mobility scores for home monitoring.",
    ]);
    let support = vec![
        vec![t(23, 25, 3, 100), z(), z(), z()],
        vec![z(), t(22, 25, 1, 25), z(), z()],
        vec![z(), t(81, 100, 1, 50), z(), z()],
        vec![z(), t(2, 5, 0, 1), t(1, 20, 89, 100), z()],
        vec![z(), t(4, 5, 1, 20), z(), z()],
        vec![t(17, 20, 1, 10), z(), z(), z()],
        vec![t(3, 4, 3, 20), z(), z(), z()],
        vec![z(), z(), z(), t(9, 10, 1, 50)],
        vec![z(), z(), z(), t(87, 100, 1, 20)],
        vec![z(), z(), z(), t(7, 10, 1, 10)],
        vec![z(), z(), z(), t(39, 50, 1, 25)],
        vec![z(), t(37, 50, 3, 50), z(), z()],
    ];
    build_grounding(
        answer,
        claims,
        chunks,
        support,
        fixture_thresholds(),
        vec![
            AssumptionTag::oracle("DecompositionOracle"),
            AssumptionTag::oracle("SignedSupportOracle"),
        ],
    )
    .expect("clinical grounding inputs are valid")
}

/// Query-embedding sensitivity: invariant rewrites stay within squared radius
/// 7/500 while meaning changes start at 19/100, giving gap 22/125.
pub fn clinical_sensitivity() -> SensitivityCertificate {
    let vec3 = |a: (i64, i64), b: (i64, i64), c: (i64, i64)| RationalVector::from_pairs(&[a, b, c]);
    build_sensitivity(
        "which maintenance dose of nerivoline fits this flare pattern",
        vec3((1, 2), (0, 1), (0, 1)),
        strings(&[
            "what nerivoline maintenance dose suits this flare pattern",
            "which maintenance dose of nerivoline matches the flare",
        ]),
        vec![vec3((3, 5), (3, 50), (1, 50)), vec3((13, 25), (0, 1), (0, 1))],
        strings(&[
            "which maintenance dose of nerivoline is unsafe for this flare",
            "which loading dose of pexarone fits this flare pattern",
        ]),
        vec![vec3((4, 5), (3, 10), (1, 10)), vec3((0, 1), (1, 10), (-1, 5))],
        Rational::zero(),
        vec![AssumptionTag::oracle("ParaphraseOracle")],
    )
    .expect("clinical sensitivity inputs are valid")
}

/// Residue over the twelve claims admitting only grounded-supported ones:
/// everything but the refuted clearance survives — weight 23, coverage 23/25.
pub fn clinical_residue() -> ResidueCertificate {
    let mut allowed = vec![true; 12];
    allowed[3] = false;
    let constraints = vec![Constraint::per_claim("grounding_supported", allowed)];
    compute_residue(&clinical_claims(), &constraints, ResidueMode::Exact)
        .expect("clinical instance is enumerable")
}

/// Stability witnesses for the clinical pipeline: one continuous embedding
/// stage followed by three gates; the retrieval gate's margin 3/50 binds.
pub fn clinical_composition() -> CompositionCert {
    compose(vec![
        LayerWitness::new("query_embedding", r(1, 1), r(59, 500), LayerKind::Continuous),
        LayerWitness::new("retrieval_gate", Rational::zero(), r(3, 50), LayerKind::DiscreteGate),
        LayerWitness::new("grounding_gate", Rational::zero(), r(1, 2), LayerKind::DiscreteGate),
        LayerWitness::new("action_gate", Rational::zero(), r(1, 1), LayerKind::DiscreteGate),
    ])
    .expect("clinical witnesses are well-formed")
}

/// The one attempted downstream action — submitting the full-strength order —
/// was refused by the clearance guard, with nothing executed.
pub fn clinical_action_summary() -> ActionSummary {
    ActionSummary {
        executed_steps: 0,
        blocked: vec![crate::action::BlockRecord {
            action: "submit order: nerivoline full strength twice daily".into(),
            failed_predicate: "clearance_at_least(40)".into(),
            offending_state_value: "filtration index 31".into(),
            expected_condition: "filtration index >= 40".into(),
            proposal_text:
                "hold the order and route it to the prescriber with the renal advisory attached"
                    .into(),
        }],
        assumptions: vec![],
    }
}

pub fn card_clinical_bundle() -> CertificateBundle {
    let grounding = clinical_grounding();
    let sensitivity = clinical_sensitivity();
    let residue = clinical_residue();
    let composition = clinical_composition();
    let action = clinical_action_summary();
    let bundle = CertificateBundle {
        card: None,
        grounding: Some(grounding.clone()),
        sensitivity: Some(sensitivity),
        residue: Some(residue.clone()),
        composition: Some(composition.clone()),
        action: Some(action.clone()),
        oracle_evidence: vec![
            evidence("DecompositionOracle"),
            evidence("SignedSupportOracle"),
            evidence("ParaphraseOracle"),
        ],
    };
    let parts = CardParts {
        grounding: Some(grounding),
        residue: Some(residue),
        composition: Some(composition),
        action: Some(action),
        unverified_layers: vec![],
    };
    let mut meta = CardMeta::baseline(FIXTURE_EPOCH, FIXTURE_EPOCH + DAY);
    meta.scope_predicates_held = strings(&[
        "question_in_catalog",
        "formulary_snapshot_current",
        "dose_calculator_attested",
        "no_off_catalog_compounds",
    ]);
    meta.is_deterministic = false;
    meta.sample_count = 5;
    meta.calibration_gap = r(3, 100);
    meta.source_snapshot_hash = filler(0xfa, 0x21);
    meta.model_version_hash = filler(0x3d, 0xab);
    meta.prompt_template_hash = filler(0x9a, 0x6d);
    meta.replay_handle = "nerivoline-plan-2026-05-02-c4e7".into();
    seal(bundle, &parts, meta)
}

// ---------------------------------------------------------------------------
// Fixture 4: card_agentic
// ---------------------------------------------------------------------------
//
// A sandboxed cleanup session: one survey step and nine deletion requests
// against /sbx/notes under a five-guard deletion policy. Seven user-owned,
// well-aged files are removed; the two team-owned documents are refused by
// the ownership guard with full block records. Claims are weighted by
// estimated reclaimable space, so the salvaged residue covers 39/50.

const AGENTIC_DELETE_TARGETS: [&str; 9] = [
    "/sbx/notes/drafts/q1-sketch.md",
    "/sbx/notes/drafts/q2-sketch.md",
    "/sbx/notes/drafts/q3-sketch.md",
    "/sbx/notes/drafts/q4-sketch.md",
    "/sbx/notes/logs/build-a.log",
    "/sbx/notes/logs/build-b.log",
    "/sbx/notes/logs/build-c.log",
    "/sbx/notes/shared/plan.md",
    "/sbx/notes/shared/roadmap.md",
];

/// Estimated reclaimable space per delete target, in mebibytes — the claim
/// weights of the deletion residue. Totals 50; the executed seven total 39.
fn agentic_weights() -> Vec<Rational> {
    vec![r(6, 1), r(6, 1), r(6, 1), r(6, 1), r(5, 1), r(5, 1), r(5, 1), r(11, 2), r(11, 2)]
}

/// The deletion guard set every removal must discharge.
pub fn agentic_deletion_guards() -> Vec<String> {
    strings(&[
        "path_in_sandbox",
        "path_in_subprefix(/sbx/notes)",
        "mtime_at_least(2592000)",
        "owner_is(user)",
        "delete_count_within_budget",
    ])
}

/// Sandbox at the session clock: seven stale user files and two team files.
pub fn agentic_initial_state() -> SandboxState {
    let now = FIXTURE_EPOCH;
    SandboxState::new("/sbx", 10, now)
        .with_file(AGENTIC_DELETE_TARGETS[0], now - 72 * DAY, "user", "sk1")
        .with_file(AGENTIC_DELETE_TARGETS[1], now - 72 * DAY, "user", "sk2")
        .with_file(AGENTIC_DELETE_TARGETS[2], now - 72 * DAY, "user", "sk3")
        .with_file(AGENTIC_DELETE_TARGETS[3], now - 72 * DAY, "user", "sk4")
        .with_file(AGENTIC_DELETE_TARGETS[4], now - 60 * DAY, "user", "lg1")
        .with_file(AGENTIC_DELETE_TARGETS[5], now - 60 * DAY, "user", "lg2")
        .with_file(AGENTIC_DELETE_TARGETS[6], now - 60 * DAY, "user", "lg3")
        .with_file(AGENTIC_DELETE_TARGETS[7], now - 66 * DAY, "team", "sh1")
        .with_file(AGENTIC_DELETE_TARGETS[8], now - 66 * DAY, "team", "sh2")
}

/// The gated step list: a survey stat, then the nine deletions in order.
pub fn agentic_steps() -> Vec<GatedStep<SandboxTool>> {
    let mut steps = vec![GatedStep::new(
        SandboxTool::stat(AGENTIC_DELETE_TARGETS[0]),
        strings(&["path_in_sandbox"]),
        vec![],
    )];
    for target in AGENTIC_DELETE_TARGETS {
        steps.push(GatedStep::new(
            SandboxTool::rm(target),
            agentic_deletion_guards(),
            strings(&["target_absent"]),
        ));
    }
    steps
}

/// Executes the cleanup session: eight steps run, two deletions are refused.
pub fn agentic_run() -> ActionRun<SandboxState, SandboxTool> {
    execute(&SandboxDomain, agentic_initial_state(), &agentic_steps())
        .expect("fixture guards all resolve")
}

/// Labeled harness task over the same session: the two team-owned deletions
/// are the unsafe steps.
pub fn agentic_task() -> SandboxTask {
    let steps = agentic_steps()
        .into_iter()
        .map(|step| {
            let team_owned = matches!(
                &step.action,
                SandboxTool::Rm { path } if path.starts_with("/sbx/notes/shared/")
            );
            if team_owned {
                LabeledStep::risky(step)
            } else {
                LabeledStep::safe(step)
            }
        })
        .collect();
    SandboxTask { name: "stale_note_cleanup".into(), initial: agentic_initial_state(), steps }
}

/// The same cleanup session with the two team-owned deletions removed: the
/// benign baseline a registry of unsafe proposals gets spliced into.
pub fn agentic_baseline_task() -> SandboxTask {
    let mut task = agentic_task();
    task.steps.retain(|l| !l.unsafe_to_run);
    task
}

/// The two team-owned deletions as registry entries appended to the end of
/// the baseline task. Splicing them back reconstructs [`agentic_task`].
pub fn agentic_unsafe_registry() -> Vec<UnsafeProposal> {
    let baseline_len = agentic_baseline_task().steps.len();
    agentic_task()
        .steps
        .into_iter()
        .filter(|l| l.unsafe_to_run)
        .map(|l| UnsafeProposal {
            task: "stale_note_cleanup".into(),
            at: baseline_len,
            step: l.step,
        })
        .collect()
}

/// Registered declarative input files, buildable via [`build_input_file`].
pub const INPUT_FILE_NAMES: [&str; 8] = [
    "five_claims",
    "five_constraints",
    "rag7_layers",
    "approved_baseline",
    "sandbox_state",
    "unsafe_proposal",
    "cleanup_tasks",
    "unsafe_registry",
];

/// Builds a registered declarative input file in its wire form. These are
/// the worked inputs behind the fixtures, exposed so the command-line tools
/// can be driven end to end without hand-writing documents.
pub fn build_input_file(name: &str) -> Result<String, FixtureError> {
    let canonical = INPUT_FILE_NAMES
        .iter()
        .copied()
        .find(|n| *n == name)
        .ok_or_else(|| FixtureError::UnknownInput(name.to_string()))?;
    let wire = match canonical {
        "five_claims" => inputs::claims_to_wire(&five_claim_claims()),
        "five_constraints" => inputs::constraints_to_wire(&five_claim_constraints())
            .map_err(|source| FixtureError::Malformed { name: canonical, source })?,
        "rag7_layers" => inputs::layers_to_wire(&composition_rag7_cert().layers),
        "approved_baseline" => {
            inputs::approved_to_wire(&crate::audit::runner::default_approved())
        }
        "sandbox_state" => inputs::sandbox_to_wire(&agentic_initial_state()),
        "unsafe_proposal" => inputs::proposal_to_wire(&agentic_steps()[8]),
        "cleanup_tasks" => inputs::tasks_to_wire(&[agentic_baseline_task()]),
        "unsafe_registry" => inputs::registry_to_wire(&agentic_unsafe_registry()),
        _ => unreachable!("the find above only returns registered names"),
    };
    Ok(wire)
}

/// Deletion residue: nine claims weighted by reclaimable space, admitting
/// only the guard-discharged ones — weight 39 of 50.
pub fn agentic_residue() -> ResidueCertificate {
    let claims: Vec<AtomicClaim> = AGENTIC_DELETE_TARGETS
        .iter()
        .zip(agentic_weights())
        .map(|(path, w)| AtomicClaim::new(format!("rm {path}"), w))
        .collect();
    let mut allowed = vec![true; 9];
    allowed[7] = false;
    allowed[8] = false;
    let constraints = vec![Constraint::per_claim("guards_discharged", allowed)];
    compute_residue(&claims, &constraints, ResidueMode::Exact)
        .expect("agentic instance is enumerable")
}

pub fn card_agentic_bundle() -> CertificateBundle {
    let run = agentic_run();
    let action = ActionSummary::from_cert(&run.cert);
    let residue = agentic_residue();
    let bundle = CertificateBundle {
        card: None,
        grounding: None,
        sensitivity: None,
        residue: Some(residue.clone()),
        composition: None,
        action: Some(action.clone()),
        oracle_evidence: vec![],
    };
    let parts = CardParts { residue: Some(residue), action: Some(action), ..CardParts::default() };
    let mut meta = CardMeta::baseline(FIXTURE_EPOCH, FIXTURE_EPOCH + 3_600);
    meta.scope_predicates_held = strings(&["instruction_role_tagged", "sandbox_declared"]);
    meta.source_snapshot_hash = filler(0x11, 0x22);
    meta.model_version_hash = filler(0x33, 0x44);
    meta.prompt_template_hash = filler(0x55, 0x66);
    meta.replay_handle = "sandbox-cleanup-2026-05-02-d2a9".into();
    seal(bundle, &parts, meta)
}

// ---------------------------------------------------------------------------
// Expected values
// ---------------------------------------------------------------------------

fn expect(key: &'static str, value: impl Into<String>, source: FixtureSource) -> ExpectedValue {
    ExpectedValue { key, value: value.into(), source }
}

/// The annotated expected values for a registered fixture.
pub fn expected_values(name: &str) -> Vec<ExpectedValue> {
    use FixtureSource::{ByConstruction, DerivedByEnumeration, PublishedExample};
    match name {
        "mcr_clinical_5claims" => vec![
            expect("claim_weights", "3, 2, 1, 3/2, 1/2", PublishedExample),
            expect("beta_plus", "23/25, 22/25, 81/100, 9/20, 3/10", PublishedExample),
            expect("beta_minus", "3/100, 1/25, 1/50, 71/100, 1/5", PublishedExample),
            expect("support_threshold", "7/10", PublishedExample),
            expect("contradiction_threshold", "1/2", PublishedExample),
            expect(
                "statuses",
                "supported, supported, supported, contradicted, unknown",
                PublishedExample,
            ),
            expect("residue_indices", "0, 2", PublishedExample),
            expect("residue_weight", "4", PublishedExample),
            expect("residue_coverage", "1/2", ByConstruction),
            expect("supported_mass", "3/4", ByConstruction),
            expect("contradicted_mass", "3/16", ByConstruction),
            expect("unknown_mass", "1/16", ByConstruction),
            expect("emitted", "false", ByConstruction),
        ],
        "composition_rag7" => vec![
            expect("input", "2/5", ByConstruction),
            expect("output", "5", ByConstruction),
            expect("decisions", "true, true, true, true, true", ByConstruction),
            expect("gains", "1, 0, 0, 0, 1, 0, 0", PublishedExample),
            expect("margins", "3/25, 50, 3, 2/25, 77/100, 1, 1", PublishedExample),
            expect("pipeline_gain", "0", PublishedExample),
            expect("budget", "3/25", PublishedExample),
            expect("admits_1_10", "true", PublishedExample),
            expect("admits_3_25", "false", PublishedExample),
        ],
        "card_clinical" => vec![
            expect("claim_count", "12", ByConstruction),
            expect("supported_mass", "23/25", PublishedExample),
            expect("contradicted_mass", "2/25", PublishedExample),
            expect("residual_threshold", "1/20", PublishedExample),
            expect("emitted", "false", PublishedExample),
            expect("radius_invariant_sq", "7/500", ByConstruction),
            expect("radius_significant_sq", "19/100", ByConstruction),
            expect("delta_sq", "22/125", PublishedExample),
            expect("selective_sensitivity_pass", "true", PublishedExample),
            expect("residue_weight", "23", DerivedByEnumeration),
            expect("residue_coverage", "23/25", ByConstruction),
            expect("perturbation_budget", "3/50", ByConstruction),
            expect("verdict", "residue", PublishedExample),
            expect("action_precondition", "false", ByConstruction),
            expect("clinical_policy_decision", "downgrade", PublishedExample),
            expect("clinical_policy_pending", "human_signature", PublishedExample),
            expect("decision_time", "1714003600", ByConstruction),
        ],
        "card_agentic" => vec![
            expect("delete_targets", "9", ByConstruction),
            expect("executed_steps", "8", ByConstruction),
            expect("blocked_steps", "2", ByConstruction),
            expect("block_reason", "owner_is(user)", ByConstruction),
            expect("residue_weight", "39", DerivedByEnumeration),
            expect("residue_coverage", "39/50", ByConstruction),
            expect("verdict", "residue", ByConstruction),
            expect("action_precondition", "true", ByConstruction),
            expect("agentic_policy_decision", "accept", PublishedExample),
            expect("decision_time", "1714001800", ByConstruction),
        ],
        _ => vec![],
    }
}
