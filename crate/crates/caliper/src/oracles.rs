//! Deterministic mock oracles.
//!
//! Certificates at the oracle tier treat model components — entailment
//! scorers, decomposers, paraphrase attesters — as trusted black boxes. For
//! tests and fixtures this module provides fully deterministic stand-ins:
//! no model weights, no randomness, pure functions of their text inputs, so
//! every derived number in the repository is reproducible byte-for-byte.
//!
//! The mocks are deliberately simple (token overlap and negation parity,
//! sentence splitting, digest signatures). They are *not* language
//! understanding; they exist so the exact-arithmetic plumbing around them
//! can be exercised end to end with stable numbers.

use std::collections::BTreeSet;

use crate::audit::assumptions::AssumptionTag;
use crate::audit::digest::sha256;
use crate::grounding::{
    build_grounding, sentence_units, AtomicClaim, GroundingCertificate, GroundingError,
    SignedTriple, Thresholds,
};
use crate::numeric::Rational;

/// The oracle families certificates may declare at the oracle tier. The
/// audit runner's default allow list is exactly these plus the digest
/// function's collision resistance.
pub const ORACLE_REGISTRY: [&str; 5] = [
    "ParaphraseOracle",
    "SignedSupportOracle",
    "DecompositionOracle",
    "StepConfidenceOracle",
    "IIDSamples",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("cannot decompose an answer with no sentence units")]
    EmptyAnswer,
    #[error(transparent)]
    Grounding(#[from] GroundingError),
}

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

/// Lowercased alphanumeric token runs; everything else separates.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Tokens that flip the polarity of a statement in the mock scorer. They are
/// excluded from overlap counting so that "does not open" and "does open"
/// share the same content tokens and differ only in parity.
pub const NEGATION_MARKERS: [&str; 3] = ["not", "no", "never"];

fn is_negation(token: &str) -> bool {
    NEGATION_MARKERS.contains(&token)
}

// ---------------------------------------------------------------------------
// Signed support scoring (the entailment mock)
// ---------------------------------------------------------------------------

/// Scores one claim against one evidence chunk.
///
/// Let `o` be the fraction of the claim's distinct content tokens (negation
/// markers excluded) that also occur in the chunk. The combined count of
/// negation markers across claim and chunk decides polarity: an odd count
/// means one side negates the other, so the overlap reads as contradicting
/// evidence `(0, o, 1−o)`; an even count reads as supporting `(o, 0, 1−o)`.
/// A claim with no content tokens scores fully orthogonal `(0, 0, 1)`.
///
/// The result is always on the probability simplex.
pub fn mock_nli(claim: &str, chunk: &str) -> SignedTriple {
    let claim_tokens = tokenize(claim);
    let chunk_tokens = tokenize(chunk);

    let claim_content: BTreeSet<&str> =
        claim_tokens.iter().map(String::as_str).filter(|t| !is_negation(t)).collect();
    let chunk_content: BTreeSet<&str> =
        chunk_tokens.iter().map(String::as_str).filter(|t| !is_negation(t)).collect();

    if claim_content.is_empty() {
        return SignedTriple::new(Rational::zero(), Rational::zero(), Rational::one());
    }

    let overlap = claim_content.intersection(&chunk_content).count();
    let o = Rational::new(overlap as i64, claim_content.len() as i64);
    let rest = &Rational::one() - &o;

    let negations = claim_tokens.iter().filter(|t| is_negation(t)).count()
        + chunk_tokens.iter().filter(|t| is_negation(t)).count();
    if negations % 2 == 1 {
        SignedTriple::new(Rational::zero(), o, rest)
    } else {
        SignedTriple::new(o, Rational::zero(), rest)
    }
}

// ---------------------------------------------------------------------------
// Decomposition
// ---------------------------------------------------------------------------

/// Splits an answer into unit-weight atomic claims, one per sentence unit.
/// The split shares [`sentence_units`] with the canonicalizer, so rejoining
/// the claims reconstructs the answer's canonical form exactly.
pub fn mock_decompose(answer: &str) -> Result<Vec<AtomicClaim>, OracleError> {
    let units = sentence_units(answer);
    if units.is_empty() {
        return Err(OracleError::EmptyAnswer);
    }
    Ok(units.into_iter().map(|u| AtomicClaim::new(u, Rational::one())).collect())
}

// ---------------------------------------------------------------------------
// Paraphrase attestation
// ---------------------------------------------------------------------------

/// Deterministic signature over a paraphrase set: the digest of the base
/// text and its variants under canonical framing. Returns `None` when the
/// base or any variant is empty — an empty string is never a paraphrase.
pub fn mock_paraphrase_signature(base: &str, variants: &[String]) -> Option<Vec<u8>> {
    if base.is_empty() || variants.iter().any(String::is_empty) {
        return None;
    }
    let mut data = Vec::new();
    data.extend_from_slice(b"paraphrase-set\x00");
    data.extend_from_slice(base.as_bytes());
    for v in variants {
        data.push(0x00);
        data.extend_from_slice(v.as_bytes());
    }
    Some(sha256(&data).to_vec())
}

/// Checks an attestation: the signature must be nonempty and reproduce the
/// digest of exactly this base and variant list.
pub fn mock_paraphrase_attests(base: &str, variants: &[String], signature: &[u8]) -> bool {
    if signature.is_empty() {
        return false;
    }
    match mock_paraphrase_signature(base, variants) {
        Some(expected) => expected == signature,
        None => false,
    }
}

// ---------------------------------------------------------------------------
// Step confidence and sampling proofs
// ---------------------------------------------------------------------------

/// Deterministic per-step confidence: `d / (d + 1)` over the count `d` of
/// distinct content tokens. Empty text gets zero; richer steps score closer
/// to one. Always in `[0, 1)`.
pub fn mock_step_confidence(text: &str) -> Rational {
    let d = tokenize(text).iter().filter(|t| !is_negation(t)).collect::<BTreeSet<_>>().len();
    Rational::new(d as i64, d as i64 + 1)
}

/// Deterministic stand-in for a proof of independent sampling: a digest
/// binding a sampler seed to a sample count. Suitable for the card's
/// `proof_of_sampling` field in fixtures.
pub fn mock_iid_proof(seed: u64, sample_count: u64) -> Vec<u8> {
    let mut data = Vec::with_capacity(32);
    data.extend_from_slice(b"iid-samples\x00");
    data.extend_from_slice(&seed.to_le_bytes());
    data.extend_from_slice(&sample_count.to_le_bytes());
    sha256(&data).to_vec()
}

// ---------------------------------------------------------------------------
// End-to-end mock grounding
// ---------------------------------------------------------------------------

/// Options for [`mock_ground`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockGroundingOptions {
    pub thresholds: Thresholds,
    /// Score each claim against the concatenation of all chunks instead of
    /// chunk-by-chunk. Aggregation helps claims whose evidence is spread
    /// across chunks; the certificate then records the single concatenated
    /// chunk it actually scored against.
    pub concat_chunks: bool,
}

impl Default for MockGroundingOptions {
    fn default() -> Self {
        MockGroundingOptions {
            thresholds: Thresholds {
                support: Rational::new(7, 10),
                contradiction: Rational::new(1, 2),
                emission: Rational::new(1, 2),
                residual: Rational::new(1, 20),
            },
            concat_chunks: false,
        }
    }
}

/// Decomposes an answer and grounds it against evidence chunks using only
/// the mock oracles, yielding a complete grounding certificate that declares
/// both oracle dependencies.
pub fn mock_ground(
    answer: &str,
    chunks: &[String],
    options: &MockGroundingOptions,
) -> Result<GroundingCertificate, OracleError> {
    let claims = mock_decompose(answer)?;
    let scored_chunks: Vec<String> = if options.concat_chunks && !chunks.is_empty() {
        vec![chunks.join(" ")]
    } else {
        chunks.to_vec()
    };
    let support: Vec<Vec<SignedTriple>> = claims
        .iter()
        .map(|c| scored_chunks.iter().map(|ch| mock_nli(&c.text, ch)).collect())
        .collect();
    let cert = build_grounding(
        answer,
        claims,
        scored_chunks,
        support,
        options.thresholds.clone(),
        vec![
            AssumptionTag::oracle("DecompositionOracle"),
            AssumptionTag::oracle("SignedSupportOracle"),
        ],
    )?;
    Ok(cert)
}

// ---------------------------------------------------------------------------
// Gate evaluation
// ---------------------------------------------------------------------------

/// One labeled scenario for gate evaluation: an answer, the evidence it is
/// grounded against, and whether the emission gate *should* block it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledCase {
    pub answer: String,
    pub chunks: Vec<String>,
    pub should_block: bool,
}

/// Aggregate gate behaviour over a labeled corpus. Rates are exact and
/// absent (`None`) when their denominator is zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateEvaluation {
    pub cases: usize,
    pub unsafe_cases: usize,
    pub safe_cases: usize,
    pub blocked_unsafe: usize,
    pub blocked_safe: usize,
    /// blocked_unsafe / unsafe_cases.
    pub catch_rate: Option<Rational>,
    /// blocked_safe / safe_cases.
    pub false_block_rate: Option<Rational>,
}

/// Grounds every case with the mock oracles and compares the emission gate's
/// block decision against the label.
pub fn evaluate_emission_gate(
    cases: &[LabeledCase],
    options: &MockGroundingOptions,
) -> Result<GateEvaluation, OracleError> {
    let mut unsafe_cases = 0;
    let mut blocked_unsafe = 0;
    let mut blocked_safe = 0;
    for case in cases {
        let cert = mock_ground(&case.answer, &case.chunks, options)?;
        let blocked = !cert.emitted;
        if case.should_block {
            unsafe_cases += 1;
            if blocked {
                blocked_unsafe += 1;
            }
        } else if blocked {
            blocked_safe += 1;
        }
    }
    let safe_cases = cases.len() - unsafe_cases;
    let rate = |num: usize, den: usize| {
        if den == 0 {
            None
        } else {
            Some(Rational::new(num as i64, den as i64))
        }
    };
    Ok(GateEvaluation {
        cases: cases.len(),
        unsafe_cases,
        safe_cases,
        blocked_unsafe,
        blocked_safe,
        catch_rate: rate(blocked_unsafe, unsafe_cases),
        false_block_rate: rate(blocked_safe, safe_cases),
    })
}
