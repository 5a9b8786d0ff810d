//! The certificate bundle wire format.
//!
//! A bundle is the complete, self-describing artifact a pipeline hands to an
//! auditor: the assurance card plus every certificate backing it, encoded as
//! canonical JSON (see [`super::canon`]) so digests are reproducible from
//! the wire bytes alone. Decoding is strict — unknown keys, wrong types,
//! wrong schema tags, and non-canonical scalars are all malformed.
//!
//! The card's `certificate_digest` commits to the certificate payload
//! sections exactly as serialized here; [`CertificateBundle::payload_digest`]
//! recomputes that commitment and the audit runner compares the two.
//!
//! Residue constraints of the custom (in-process closure) kind cannot cross
//! a process boundary and are reported as unserializable rather than
//! silently dropped.

use serde_json::Value;

use super::assumptions::{AssumptionTag, AssumptionTier};
use super::canon::{canonical_bytes, CanonError, MapBuilder, MapReader};
use super::digest::digest_value;
use crate::action::BlockRecord;
use crate::card::{ActionSummary, AssuranceCard, AssurancePolicy, Verdict};
use crate::composition::{CompositionCert, LayerKind, LayerWitness, StabilityBudget};
use crate::embedding::SensitivityCertificate;
use crate::grounding::{
    AtomicClaim, Coverage, EpistemicStatus, GroundingCertificate, SignedTriple, Thresholds,
};
use crate::mcr::{Constraint, ConstraintRule, ResidueCertificate};
use crate::numeric::{Rational, RationalVector};

/// Schema tag of the current wire format.
pub const BUNDLE_SCHEMA: &str = "caliper.bundle.v1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BundleError {
    #[error("{what} cannot be serialized: {why}")]
    Unserializable { what: String, why: String },
    #[error(transparent)]
    Malformed(#[from] CanonError),
}

fn malformed(detail: impl Into<String>) -> BundleError {
    BundleError::Malformed(CanonError::Malformed(detail.into()))
}

/// A freshness attestation for one oracle the bundle leaned on. Staleness is
/// advisory: the audit runner warns but does not fail on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleEvidence {
    pub oracle: String,
    pub attested_at: u64,
    pub ttl_seconds: u64,
}

impl OracleEvidence {
    pub fn stale_at(&self, now: u64) -> bool {
        now > self.attested_at.saturating_add(self.ttl_seconds)
    }
}

/// Everything an auditor needs for one answer: the card plus the
/// certificates it consolidates. Sections a pipeline did not run are absent.
#[derive(Debug, Clone, Default)]
pub struct CertificateBundle {
    pub card: Option<AssuranceCard>,
    pub grounding: Option<GroundingCertificate>,
    pub sensitivity: Option<SensitivityCertificate>,
    pub residue: Option<ResidueCertificate>,
    pub composition: Option<CompositionCert>,
    pub action: Option<ActionSummary>,
    pub oracle_evidence: Vec<OracleEvidence>,
}

// ---------------------------------------------------------------------------
// Small shared pieces
// ---------------------------------------------------------------------------

fn nat_from(v: &Value, key: &str) -> Result<u64, BundleError> {
    v.as_u64().ok_or_else(|| malformed(format!("{key}: expected a non-negative integer")))
}

fn index_from(v: &Value, key: &str) -> Result<usize, BundleError> {
    let n = nat_from(v, key)?;
    usize::try_from(n).map_err(|_| malformed(format!("{key}: index {n} too large")))
}

fn bool_from(v: &Value, key: &str) -> Result<bool, BundleError> {
    v.as_bool().ok_or_else(|| malformed(format!("{key}: expected a boolean")))
}

fn rat_from(v: &Value, key: &str) -> Result<Rational, BundleError> {
    Ok(super::canon::rational_from_value(v, key)?)
}

fn tag_to_canon(tag: &AssumptionTag) -> Value {
    MapBuilder::new().str("name", &tag.name).str("tier", tag.tier.label()).build()
}

fn tag_from_canon(v: &Value) -> Result<AssumptionTag, BundleError> {
    let mut r = MapReader::over(v, "assumption")?;
    let name = r.str("name")?;
    let tier_label = r.str("tier")?;
    r.finish()?;
    let tier = AssumptionTier::from_label(&tier_label)
        .ok_or_else(|| malformed(format!("assumption: unknown tier {tier_label:?}")))?;
    Ok(AssumptionTag::new(name, tier))
}

fn tags_to_canon(tags: &[AssumptionTag]) -> Vec<Value> {
    tags.iter().map(tag_to_canon).collect()
}

fn tags_from_canon(items: &[Value]) -> Result<Vec<AssumptionTag>, BundleError> {
    items.iter().map(tag_from_canon).collect()
}

pub(crate) fn claims_to_canon(claims: &[AtomicClaim]) -> Vec<Value> {
    claims
        .iter()
        .map(|c| MapBuilder::new().str("text", &c.text).rat("weight", &c.weight).build())
        .collect()
}

pub(crate) fn claims_from_canon(items: &[Value]) -> Result<Vec<AtomicClaim>, BundleError> {
    items
        .iter()
        .map(|v| {
            let mut r = MapReader::over(v, "claim")?;
            let text = r.str("text")?;
            let weight = r.rat("weight")?;
            r.finish()?;
            Ok(AtomicClaim { text, weight })
        })
        .collect()
}

fn vector_to_canon(v: &RationalVector) -> Value {
    Value::Array(v.components().iter().map(super::canon::rational_value).collect())
}

fn vector_from_canon(v: &Value, key: &str) -> Result<RationalVector, BundleError> {
    let items = v.as_array().ok_or_else(|| malformed(format!("{key}: expected an array")))?;
    let comps: Result<Vec<Rational>, BundleError> =
        items.iter().map(|x| rat_from(x, key)).collect();
    RationalVector::new(comps?).map_err(|e| malformed(format!("{key}: {e}")))
}

// ---------------------------------------------------------------------------
// Verdict and card
// ---------------------------------------------------------------------------

pub fn verdict_to_canon(verdict: &Verdict) -> Value {
    match verdict {
        Verdict::Certified => MapBuilder::new().str("kind", "certified").build(),
        Verdict::Partial { gaps } => {
            MapBuilder::new().str("kind", "partial").str_list("gaps", gaps).build()
        }
        Verdict::Residue { weight } => {
            MapBuilder::new().str("kind", "residue").rat("weight", weight).build()
        }
        Verdict::Abstain { reasons } => {
            MapBuilder::new().str("kind", "abstain").str_list("reasons", reasons).build()
        }
    }
}

pub fn verdict_from_canon(v: &Value) -> Result<Verdict, BundleError> {
    let mut r = MapReader::over(v, "verdict")?;
    let kind = r.str("kind")?;
    let verdict = match kind.as_str() {
        "certified" => Verdict::Certified,
        "partial" => Verdict::Partial { gaps: r.str_list("gaps")? },
        "residue" => Verdict::Residue { weight: r.rat("weight")? },
        "abstain" => Verdict::Abstain { reasons: r.str_list("reasons")? },
        other => return Err(malformed(format!("verdict: unknown kind {other:?}"))),
    };
    r.finish()?;
    Ok(verdict)
}

/// Canonical object holding all 30 card fields, keys sorted. This is the
/// encoding the field-level commitment tree hashes, so it must stay stable.
pub fn card_to_canon(card: &AssuranceCard) -> Value {
    MapBuilder::new()
        .value("verdict", verdict_to_canon(&card.verdict))
        .rat("perturbation_budget", &card.perturbation_budget)
        .nat("variant_flips", card.variant_flips)
        .rat("semantic_agreement", &card.semantic_agreement)
        .rat("supported_mass", &card.supported_mass)
        .rat("contradicted_mass", &card.contradicted_mass)
        .rat("contested_mass", &card.contested_mass)
        .rat("unknown_mass", &card.unknown_mass)
        .nat("conformal_set_size", card.conformal_set_size)
        .rat("calibration_gap", &card.calibration_gap)
        .boolean("is_deterministic", card.is_deterministic)
        .nat("sample_count", card.sample_count)
        .opt_hex("proof_of_sampling", &card.proof_of_sampling)
        .boolean("in_scope", card.in_scope)
        .str_list("scope_predicates_held", &card.scope_predicates_held)
        .hex("source_snapshot_hash", &card.source_snapshot_hash)
        .nat("issue_time", card.issue_time)
        .nat("expiry_time", card.expiry_time)
        .boolean("forbidden_check_pass", card.forbidden_check_pass)
        .boolean("action_precondition", card.action_precondition)
        .boolean("budget_under_limit", card.budget_under_limit)
        .rat("residue_coverage", &card.residue_coverage)
        .str_list("dropped_claims", &card.dropped_claims)
        .str_list("unverified_layers", &card.unverified_layers)
        .hex("model_version_hash", &card.model_version_hash)
        .hex("prompt_template_hash", &card.prompt_template_hash)
        .hex_list("human_signatures", &card.human_signatures)
        .hex("certificate_digest", &card.certificate_digest)
        .str("verifier_version", &card.verifier_version)
        .str("replay_handle", &card.replay_handle)
        .build()
}

pub fn card_from_canon(v: &Value) -> Result<AssuranceCard, BundleError> {
    let mut r = MapReader::over(v, "card")?;
    let verdict = {
        let vv = r.optional("verdict").ok_or_else(|| malformed("card: missing key \"verdict\""))?;
        verdict_from_canon(vv)?
    };
    let card = AssuranceCard {
        verdict,
        perturbation_budget: r.rat("perturbation_budget")?,
        variant_flips: r.nat("variant_flips")?,
        semantic_agreement: r.rat("semantic_agreement")?,
        supported_mass: r.rat("supported_mass")?,
        contradicted_mass: r.rat("contradicted_mass")?,
        contested_mass: r.rat("contested_mass")?,
        unknown_mass: r.rat("unknown_mass")?,
        conformal_set_size: r.nat("conformal_set_size")?,
        calibration_gap: r.rat("calibration_gap")?,
        is_deterministic: r.boolean("is_deterministic")?,
        sample_count: r.nat("sample_count")?,
        proof_of_sampling: r.opt_bytes("proof_of_sampling")?,
        in_scope: r.boolean("in_scope")?,
        scope_predicates_held: r.str_list("scope_predicates_held")?,
        source_snapshot_hash: r.digest32("source_snapshot_hash")?,
        issue_time: r.nat("issue_time")?,
        expiry_time: r.nat("expiry_time")?,
        forbidden_check_pass: r.boolean("forbidden_check_pass")?,
        action_precondition: r.boolean("action_precondition")?,
        budget_under_limit: r.boolean("budget_under_limit")?,
        residue_coverage: r.rat("residue_coverage")?,
        dropped_claims: r.str_list("dropped_claims")?,
        unverified_layers: r.str_list("unverified_layers")?,
        model_version_hash: r.digest32("model_version_hash")?,
        prompt_template_hash: r.digest32("prompt_template_hash")?,
        human_signatures: r.hex_list("human_signatures")?,
        certificate_digest: r.digest32("certificate_digest")?,
        verifier_version: r.str("verifier_version")?,
        replay_handle: r.str("replay_handle")?,
    };
    r.finish()?;
    Ok(card)
}

// ---------------------------------------------------------------------------
// Grounding
// ---------------------------------------------------------------------------

fn triple_to_canon(t: &SignedTriple) -> Value {
    Value::Array(vec![
        super::canon::rational_value(&t.pos),
        super::canon::rational_value(&t.neg),
        super::canon::rational_value(&t.orth),
    ])
}

fn triple_from_canon(v: &Value) -> Result<SignedTriple, BundleError> {
    let items = v.as_array().ok_or_else(|| malformed("support: triple must be an array"))?;
    if items.len() != 3 {
        return Err(malformed(format!("support: triple of length {}", items.len())));
    }
    Ok(SignedTriple {
        pos: rat_from(&items[0], "support.pos")?,
        neg: rat_from(&items[1], "support.neg")?,
        orth: rat_from(&items[2], "support.orth")?,
    })
}

pub fn grounding_to_canon(g: &GroundingCertificate) -> Value {
    let support: Vec<Value> = g
        .support
        .iter()
        .map(|row| Value::Array(row.iter().map(triple_to_canon).collect()))
        .collect();
    let statuses: Vec<Value> =
        g.statuses.iter().map(|s| Value::String(s.as_str().to_string())).collect();
    let thresholds = MapBuilder::new()
        .rat("support", &g.thresholds.support)
        .rat("contradiction", &g.thresholds.contradiction)
        .rat("emission", &g.thresholds.emission)
        .rat("residual", &g.thresholds.residual)
        .build();
    let coverage = MapBuilder::new()
        .rat("supported", &g.coverage.supported)
        .rat("contradicted", &g.coverage.contradicted)
        .rat("contested", &g.coverage.contested)
        .rat("unknown", &g.coverage.unknown)
        .build();
    MapBuilder::new()
        .str("answer", &g.answer)
        .list("claims", claims_to_canon(&g.claims))
        .str_list("retrieved_chunks", &g.retrieved_chunks)
        .list("support", support)
        .rat_list("beta_plus", &g.beta_plus)
        .rat_list("beta_minus", &g.beta_minus)
        .value("thresholds", thresholds)
        .list("statuses", statuses)
        .value("coverage", coverage)
        .boolean("emitted", g.emitted)
        .str("canonical_answer", &g.canonical_answer)
        .str("canonical_conjunction", &g.canonical_conjunction)
        .list("declared_assumptions", tags_to_canon(&g.declared_assumptions))
        .build()
}

pub fn grounding_from_canon(v: &Value) -> Result<GroundingCertificate, BundleError> {
    let mut r = MapReader::over(v, "grounding")?;
    let answer = r.str("answer")?;
    let claims = claims_from_canon(r.list("claims")?)?;
    let retrieved_chunks = r.str_list("retrieved_chunks")?;
    let support: Result<Vec<Vec<SignedTriple>>, BundleError> = r
        .list("support")?
        .iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(|| malformed("grounding: support row must be an array"))?
                .iter()
                .map(triple_from_canon)
                .collect()
        })
        .collect();
    let support = support?;
    let beta_plus = r.rat_list("beta_plus")?;
    let beta_minus = r.rat_list("beta_minus")?;
    let thresholds = {
        let tv = r
            .optional("thresholds")
            .ok_or_else(|| malformed("grounding: missing key \"thresholds\""))?;
        let mut tr = MapReader::over(tv, "thresholds")?;
        let t = Thresholds {
            support: tr.rat("support")?,
            contradiction: tr.rat("contradiction")?,
            emission: tr.rat("emission")?,
            residual: tr.rat("residual")?,
        };
        tr.finish()?;
        t
    };
    let statuses: Result<Vec<EpistemicStatus>, BundleError> = r
        .str_list("statuses")?
        .iter()
        .map(|s| {
            EpistemicStatus::parse(s)
                .ok_or_else(|| malformed(format!("grounding: unknown status {s:?}")))
        })
        .collect();
    let statuses = statuses?;
    let coverage = {
        let cv = r
            .optional("coverage")
            .ok_or_else(|| malformed("grounding: missing key \"coverage\""))?;
        let mut cr = MapReader::over(cv, "coverage")?;
        let c = Coverage {
            supported: cr.rat("supported")?,
            contradicted: cr.rat("contradicted")?,
            contested: cr.rat("contested")?,
            unknown: cr.rat("unknown")?,
        };
        cr.finish()?;
        c
    };
    let emitted = r.boolean("emitted")?;
    let canonical_answer = r.str("canonical_answer")?;
    let canonical_conjunction = r.str("canonical_conjunction")?;
    let declared_assumptions = tags_from_canon(r.list("declared_assumptions")?)?;
    r.finish()?;
    Ok(GroundingCertificate {
        answer,
        claims,
        retrieved_chunks,
        support,
        beta_plus,
        beta_minus,
        thresholds,
        statuses,
        coverage,
        emitted,
        canonical_answer,
        canonical_conjunction,
        declared_assumptions,
    })
}

// ---------------------------------------------------------------------------
// Sensitivity
// ---------------------------------------------------------------------------

pub fn sensitivity_to_canon(s: &SensitivityCertificate) -> Value {
    MapBuilder::new()
        .str("text", &s.text)
        .value("embedding", vector_to_canon(&s.embedding))
        .str_list("invariant_texts", &s.invariant_texts)
        .str_list("significant_texts", &s.significant_texts)
        .list("invariant_embeddings", s.invariant_embeddings.iter().map(vector_to_canon).collect())
        .list(
            "significant_embeddings",
            s.significant_embeddings.iter().map(vector_to_canon).collect(),
        )
        .rat("radius_invariant_sq", &s.radius_invariant_sq)
        .rat("radius_significant_sq", &s.radius_significant_sq)
        .rat("delta_sq", &s.delta_sq)
        .rat("rounding_allowance", &s.rounding_allowance)
        .list("declared_assumptions", tags_to_canon(&s.declared_assumptions))
        .build()
}

pub fn sensitivity_from_canon(v: &Value) -> Result<SensitivityCertificate, BundleError> {
    let mut r = MapReader::over(v, "sensitivity")?;
    let text = r.str("text")?;
    let embedding = {
        let ev = r
            .optional("embedding")
            .ok_or_else(|| malformed("sensitivity: missing key \"embedding\""))?;
        vector_from_canon(ev, "embedding")?
    };
    let invariant_texts = r.str_list("invariant_texts")?;
    let significant_texts = r.str_list("significant_texts")?;
    let invariant_embeddings: Result<Vec<RationalVector>, BundleError> = r
        .list("invariant_embeddings")?
        .iter()
        .map(|x| vector_from_canon(x, "invariant_embeddings"))
        .collect();
    let significant_embeddings: Result<Vec<RationalVector>, BundleError> = r
        .list("significant_embeddings")?
        .iter()
        .map(|x| vector_from_canon(x, "significant_embeddings"))
        .collect();
    let cert = SensitivityCertificate {
        text,
        embedding,
        invariant_texts,
        significant_texts,
        invariant_embeddings: invariant_embeddings?,
        significant_embeddings: significant_embeddings?,
        radius_invariant_sq: r.rat("radius_invariant_sq")?,
        radius_significant_sq: r.rat("radius_significant_sq")?,
        delta_sq: r.rat("delta_sq")?,
        rounding_allowance: r.rat("rounding_allowance")?,
        declared_assumptions: tags_from_canon(r.list("declared_assumptions")?)?,
    };
    r.finish()?;
    Ok(cert)
}

// ---------------------------------------------------------------------------
// Residue
// ---------------------------------------------------------------------------

fn edges_to_canon(edges: &[(usize, usize)]) -> Vec<Value> {
    edges.iter().map(|&(a, b)| Value::Array(vec![(a as u64).into(), (b as u64).into()])).collect()
}

fn edges_from_canon(items: &[Value], key: &str) -> Result<Vec<(usize, usize)>, BundleError> {
    items
        .iter()
        .map(|v| {
            let pair =
                v.as_array().ok_or_else(|| malformed(format!("{key}: edge must be a pair")))?;
            if pair.len() != 2 {
                return Err(malformed(format!("{key}: edge of length {}", pair.len())));
            }
            Ok((index_from(&pair[0], key)?, index_from(&pair[1], key)?))
        })
        .collect()
}

fn bools_to_canon(bits: &[bool]) -> Vec<Value> {
    bits.iter().map(|&b| Value::Bool(b)).collect()
}

fn bools_from_canon(items: &[Value], key: &str) -> Result<Vec<bool>, BundleError> {
    items.iter().map(|v| bool_from(v, key)).collect()
}

pub fn constraint_to_canon(c: &Constraint) -> Result<Value, BundleError> {
    let b = MapBuilder::new().str("name", &c.name).str("kind", c.kind().as_str());
    Ok(match &c.rule {
        ConstraintRule::PerClaim { allowed } => b.list("allowed", bools_to_canon(allowed)).build(),
        ConstraintRule::PairwiseConflict { edges } => {
            b.list("edges", edges_to_canon(edges)).build()
        }
        ConstraintRule::Dependency { edges, established } => b
            .list("edges", edges_to_canon(edges))
            .list("established", bools_to_canon(established))
            .build(),
        ConstraintRule::Budget { costs, cap } => b.rat_list("costs", costs).rat("cap", cap).build(),
        ConstraintRule::Custom(_) => {
            return Err(BundleError::Unserializable {
                what: format!("constraint {:?}", c.name),
                why: "custom predicates are in-process closures".to_string(),
            })
        }
    })
}

pub fn constraint_from_canon(v: &Value) -> Result<Constraint, BundleError> {
    let mut r = MapReader::over(v, "constraint")?;
    let name = r.str("name")?;
    let kind = r.str("kind")?;
    let rule = match kind.as_str() {
        "per_claim" => {
            ConstraintRule::PerClaim { allowed: bools_from_canon(r.list("allowed")?, "allowed")? }
        }
        "pairwise_conflict" => {
            ConstraintRule::PairwiseConflict { edges: edges_from_canon(r.list("edges")?, "edges")? }
        }
        "dependency" => ConstraintRule::Dependency {
            edges: edges_from_canon(r.list("edges")?, "edges")?,
            established: bools_from_canon(r.list("established")?, "established")?,
        },
        "budget" => ConstraintRule::Budget { costs: r.rat_list("costs")?, cap: r.rat("cap")? },
        "custom" => return Err(malformed("constraint: custom kind cannot appear on the wire")),
        other => return Err(malformed(format!("constraint: unknown kind {other:?}"))),
    };
    r.finish()?;
    Ok(Constraint { name, rule })
}

pub fn residue_to_canon(rc: &ResidueCertificate) -> Result<Value, BundleError> {
    let constraints: Result<Vec<Value>, BundleError> =
        rc.constraints.iter().map(constraint_to_canon).collect();
    Ok(MapBuilder::new()
        .list("claims", claims_to_canon(&rc.claims))
        .list("constraints", constraints?)
        .list("residue", rc.residue.iter().map(|&i| Value::from(i as u64)).collect())
        .rat("residue_weight", &rc.residue_weight)
        .build())
}

pub fn residue_from_canon(v: &Value) -> Result<ResidueCertificate, BundleError> {
    let mut r = MapReader::over(v, "residue")?;
    let claims = claims_from_canon(r.list("claims")?)?;
    let constraints: Result<Vec<Constraint>, BundleError> =
        r.list("constraints")?.iter().map(constraint_from_canon).collect();
    let residue: Result<Vec<usize>, BundleError> =
        r.list("residue")?.iter().map(|x| index_from(x, "residue")).collect();
    let cert = ResidueCertificate {
        claims,
        constraints: constraints?,
        residue: residue?,
        residue_weight: r.rat("residue_weight")?,
    };
    r.finish()?;
    Ok(cert)
}

// ---------------------------------------------------------------------------
// Composition
// ---------------------------------------------------------------------------

fn layer_kind_str(kind: LayerKind) -> &'static str {
    match kind {
        LayerKind::Continuous => "continuous",
        LayerKind::DiscreteGate => "discrete_gate",
    }
}

fn layer_kind_parse(s: &str) -> Option<LayerKind> {
    match s {
        "continuous" => Some(LayerKind::Continuous),
        "discrete_gate" => Some(LayerKind::DiscreteGate),
        _ => None,
    }
}

pub(crate) fn layer_to_canon(l: &LayerWitness) -> Value {
    MapBuilder::new()
        .str("name", &l.name)
        .rat("gain", &l.gain)
        .rat("margin", &l.margin)
        .str("kind", layer_kind_str(l.kind))
        .build()
}

pub(crate) fn layer_from_canon(lv: &Value) -> Result<LayerWitness, BundleError> {
    let mut lr = MapReader::over(lv, "layer")?;
    let name = lr.str("name")?;
    let gain = lr.rat("gain")?;
    let margin = lr.rat("margin")?;
    let kind_s = lr.str("kind")?;
    lr.finish()?;
    let kind = layer_kind_parse(&kind_s)
        .ok_or_else(|| malformed(format!("layer: unknown kind {kind_s:?}")))?;
    Ok(LayerWitness { name, gain, margin, kind })
}

pub fn composition_to_canon(c: &CompositionCert) -> Value {
    let layers: Vec<Value> = c.layers.iter().map(layer_to_canon).collect();
    let budget = match &c.budget {
        StabilityBudget::Finite(b) => Value::String(b.to_string()),
        StabilityBudget::Unbounded => Value::String("unbounded".to_string()),
    };
    MapBuilder::new()
        .list("layers", layers)
        .rat("pipeline_gain", &c.pipeline_gain)
        .value("budget", budget)
        .build()
}

pub fn composition_from_canon(v: &Value) -> Result<CompositionCert, BundleError> {
    let mut r = MapReader::over(v, "composition")?;
    let layers: Result<Vec<LayerWitness>, BundleError> =
        r.list("layers")?.iter().map(layer_from_canon).collect();
    let pipeline_gain = r.rat("pipeline_gain")?;
    let budget_s = r.str("budget")?;
    let budget = if budget_s == "unbounded" {
        StabilityBudget::Unbounded
    } else {
        StabilityBudget::Finite(
            budget_s
                .parse::<Rational>()
                .map_err(|_| malformed(format!("composition: bad budget {budget_s:?}")))?,
        )
    };
    r.finish()?;
    Ok(CompositionCert { layers: layers?, pipeline_gain, budget })
}

// ---------------------------------------------------------------------------
// Action summary
// ---------------------------------------------------------------------------

fn block_to_canon(b: &BlockRecord) -> Value {
    MapBuilder::new()
        .str("action", &b.action)
        .str("failed_predicate", &b.failed_predicate)
        .str("offending_state_value", &b.offending_state_value)
        .str("expected_condition", &b.expected_condition)
        .str("proposal_text", &b.proposal_text)
        .build()
}

fn block_from_canon(v: &Value) -> Result<BlockRecord, BundleError> {
    let mut r = MapReader::over(v, "block")?;
    let b = BlockRecord {
        action: r.str("action")?,
        failed_predicate: r.str("failed_predicate")?,
        offending_state_value: r.str("offending_state_value")?,
        expected_condition: r.str("expected_condition")?,
        proposal_text: r.str("proposal_text")?,
    };
    r.finish()?;
    Ok(b)
}

pub fn action_to_canon(a: &ActionSummary) -> Value {
    MapBuilder::new()
        .nat("executed_steps", a.executed_steps as u64)
        .list("blocked", a.blocked.iter().map(block_to_canon).collect())
        .list("assumptions", tags_to_canon(&a.assumptions))
        .build()
}

pub fn action_from_canon(v: &Value) -> Result<ActionSummary, BundleError> {
    let mut r = MapReader::over(v, "action")?;
    let executed_steps = r.nat("executed_steps")? as usize;
    let blocked: Result<Vec<BlockRecord>, BundleError> =
        r.list("blocked")?.iter().map(block_from_canon).collect();
    let assumptions = tags_from_canon(r.list("assumptions")?)?;
    r.finish()?;
    Ok(ActionSummary { executed_steps, blocked: blocked?, assumptions })
}

// ---------------------------------------------------------------------------
// Oracle evidence
// ---------------------------------------------------------------------------

fn evidence_to_canon(e: &OracleEvidence) -> Value {
    MapBuilder::new()
        .str("oracle", &e.oracle)
        .nat("attested_at", e.attested_at)
        .nat("ttl_seconds", e.ttl_seconds)
        .build()
}

fn evidence_from_canon(v: &Value) -> Result<OracleEvidence, BundleError> {
    let mut r = MapReader::over(v, "oracle_evidence")?;
    let e = OracleEvidence {
        oracle: r.str("oracle")?,
        attested_at: r.nat("attested_at")?,
        ttl_seconds: r.nat("ttl_seconds")?,
    };
    r.finish()?;
    Ok(e)
}

// ---------------------------------------------------------------------------
// Bundle
// ---------------------------------------------------------------------------

impl CertificateBundle {
    /// Canonical object with every section key present (null when absent).
    pub fn to_canon(&self) -> Result<Value, BundleError> {
        let section = |v: Option<Value>| v.unwrap_or(Value::Null);
        Ok(MapBuilder::new()
            .str("schema", BUNDLE_SCHEMA)
            .value("card", section(self.card.as_ref().map(card_to_canon)))
            .value("grounding", section(self.grounding.as_ref().map(grounding_to_canon)))
            .value("sensitivity", section(self.sensitivity.as_ref().map(sensitivity_to_canon)))
            .value("residue", section(self.residue.as_ref().map(residue_to_canon).transpose()?))
            .value("composition", section(self.composition.as_ref().map(composition_to_canon)))
            .value("action", section(self.action.as_ref().map(action_to_canon)))
            .list("oracle_evidence", self.oracle_evidence.iter().map(evidence_to_canon).collect())
            .build())
    }

    /// Compact wire string.
    pub fn to_wire(&self) -> Result<String, BundleError> {
        let v = self.to_canon()?;
        Ok(String::from_utf8(canonical_bytes(&v)).expect("JSON is UTF-8"))
    }

    pub fn from_wire(wire: &str) -> Result<Self, BundleError> {
        let v: Value = serde_json::from_str(wire).map_err(|e| malformed(format!("bundle: {e}")))?;
        Self::from_canon(&v)
    }

    pub fn from_canon(v: &Value) -> Result<Self, BundleError> {
        let mut r = MapReader::over(v, "bundle")?;
        let schema = r.str("schema")?;
        if schema != BUNDLE_SCHEMA {
            return Err(malformed(format!(
                "bundle: schema {schema:?}, expected {BUNDLE_SCHEMA:?}"
            )));
        }
        let card = r.optional("card").map(card_from_canon).transpose()?;
        let grounding = r.optional("grounding").map(grounding_from_canon).transpose()?;
        let sensitivity = r.optional("sensitivity").map(sensitivity_from_canon).transpose()?;
        let residue = r.optional("residue").map(residue_from_canon).transpose()?;
        let composition = r.optional("composition").map(composition_from_canon).transpose()?;
        let action = r.optional("action").map(action_from_canon).transpose()?;
        let oracle_evidence: Result<Vec<OracleEvidence>, BundleError> =
            r.list("oracle_evidence")?.iter().map(evidence_from_canon).collect();
        let bundle = CertificateBundle {
            card,
            grounding,
            sensitivity,
            residue,
            composition,
            action,
            oracle_evidence: oracle_evidence?,
        };
        r.finish()?;
        Ok(bundle)
    }

    /// The commitment the card's `certificate_digest` field must carry:
    /// SHA-256 over the canonical object of the five certificate sections
    /// (nulls for absent ones; the card itself and oracle evidence are
    /// excluded — the former contains the digest, the latter is advisory).
    pub fn payload_digest(&self) -> Result<[u8; 32], BundleError> {
        let section = |v: Option<Value>| v.unwrap_or(Value::Null);
        let payload = MapBuilder::new()
            .value("grounding", section(self.grounding.as_ref().map(grounding_to_canon)))
            .value("sensitivity", section(self.sensitivity.as_ref().map(sensitivity_to_canon)))
            .value("residue", section(self.residue.as_ref().map(residue_to_canon).transpose()?))
            .value("composition", section(self.composition.as_ref().map(composition_to_canon)))
            .value("action", section(self.action.as_ref().map(action_to_canon)))
            .build();
        Ok(digest_value(&payload))
    }

    /// All declared assumptions across the bundle's certificate sections,
    /// deduplicated and ordered.
    pub fn all_assumptions(&self) -> Vec<AssumptionTag> {
        let mut groups: Vec<&[AssumptionTag]> = Vec::new();
        if let Some(g) = &self.grounding {
            groups.push(&g.declared_assumptions);
        }
        if let Some(s) = &self.sensitivity {
            groups.push(&s.declared_assumptions);
        }
        if let Some(a) = &self.action {
            groups.push(&a.assumptions);
        }
        super::assumptions::union_assumptions(groups)
    }
}

// ---------------------------------------------------------------------------
// Policy files
// ---------------------------------------------------------------------------

/// Canonical encoding of a policy, for policy files passed to the auditor.
pub fn policy_to_canon(p: &AssurancePolicy) -> Value {
    let b = MapBuilder::new()
        .str("name", &p.name)
        .rat("min_supported_mass", &p.min_supported_mass)
        .rat("max_contradicted_mass", &p.max_contradicted_mass)
        .rat("max_contested_mass", &p.max_contested_mass)
        .boolean("required_in_scope", p.required_in_scope)
        .nat("max_unverified_gaps", p.max_unverified_gaps)
        .boolean("require_action_safe", p.require_action_safe)
        .rat("max_calibration_gap", &p.max_calibration_gap)
        .rat("min_perturbation_budget", &p.min_perturbation_budget)
        .boolean("require_proof_of_sampling", p.require_proof_of_sampling)
        .boolean("forbidden_must_pass", p.forbidden_must_pass);
    match p.max_age_seconds {
        Some(age) => b.nat("max_age_seconds", age).build(),
        None => b.value("max_age_seconds", Value::Null).build(),
    }
}

pub fn policy_from_canon(v: &Value) -> Result<AssurancePolicy, BundleError> {
    let mut r = MapReader::over(v, "policy")?;
    let max_age_seconds = match r.optional("max_age_seconds") {
        Some(x) => Some(nat_from(x, "max_age_seconds")?),
        None => None,
    };
    let p = AssurancePolicy {
        name: r.str("name")?,
        min_supported_mass: r.rat("min_supported_mass")?,
        max_contradicted_mass: r.rat("max_contradicted_mass")?,
        max_contested_mass: r.rat("max_contested_mass")?,
        required_in_scope: r.boolean("required_in_scope")?,
        max_unverified_gaps: r.nat("max_unverified_gaps")?,
        require_action_safe: r.boolean("require_action_safe")?,
        max_calibration_gap: r.rat("max_calibration_gap")?,
        min_perturbation_budget: r.rat("min_perturbation_budget")?,
        require_proof_of_sampling: r.boolean("require_proof_of_sampling")?,
        max_age_seconds,
        forbidden_must_pass: r.boolean("forbidden_must_pass")?,
    };
    r.finish()?;
    Ok(p)
}

pub fn policy_from_wire(wire: &str) -> Result<AssurancePolicy, BundleError> {
    let v: Value = serde_json::from_str(wire).map_err(|e| malformed(format!("policy: {e}")))?;
    policy_from_canon(&v)
}

pub fn policy_to_wire(p: &AssurancePolicy) -> String {
    String::from_utf8(canonical_bytes(&policy_to_canon(p))).expect("JSON is UTF-8")
}
