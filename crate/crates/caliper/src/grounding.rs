//! Conflict-aware grounding of generated answers against retrieved evidence.
//!
//! An answer is decomposed into weighted atomic claims; each claim carries a
//! row of per-chunk signed support scores `(σ⁺, σ⁻, σ°)` that lie on the
//! exact probability simplex. Positive and negative evidence are folded
//! *separately* — the best supporting chunk and the best contradicting chunk
//! are found independently — so a claim can be simultaneously well-supported
//! and well-contradicted. That case is deliberately kept visible as its own
//! status ([`EpistemicStatus::Contested`]) instead of being averaged away.
//!
//! Emission is gated on coverage masses: the supported share of total claim
//! weight must clear a floor while the contradicted+contested share stays
//! under a ceiling. With the ceiling at zero, any positive-weight conflict
//! blocks the answer.
//!
//! [`verify_grounding`] re-derives every stored field from the raw scores and
//! reports each proof obligation separately; a tampered certificate fails on
//! exactly the obligations its tampering touched.

use crate::audit::assumptions::AssumptionTag;
use crate::numeric::Rational;
use crate::report::VerificationReport;

/// Errors raised while constructing grounding inputs. Verification never
/// returns these — it reports obligation failures instead.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GroundingError {
    /// Classification thresholds must lie in the half-open interval (0, 1].
    #[error("threshold {name} = {value} out of range (0, 1]")]
    Threshold { name: &'static str, value: Rational },
    /// Score matrix shape disagrees with the claim/chunk lists. Ragged rows
    /// are rejected here, at construction, rather than patched over.
    #[error("score matrix shape mismatch: {detail}")]
    Shape { detail: String },
    /// A signed score triple left the probability simplex. The triple is
    /// boxed to keep the error (and every `Result` carrying it) small.
    #[error("score triple at claim {claim}, chunk {chunk} is not on the simplex: ({}, {}, {})", triple.pos, triple.neg, triple.orth)]
    Simplex { claim: usize, chunk: usize, triple: Box<SignedTriple> },
    /// Claim weights must be nonnegative.
    #[error("claim {claim} has negative weight {weight}")]
    NegativeWeight { claim: usize, weight: Rational },
    /// Coverage masses are weight fractions, undefined at zero total weight.
    #[error("total claim weight must be positive")]
    DegenerateWeight,
}

/// Four-valued epistemic status of a single claim.
///
/// The four values arise from crossing "support clears θ_g" with
/// "contradiction clears θ_c"; both axes are evaluated independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EpistemicStatus {
    Supported,
    Contradicted,
    Contested,
    Unknown,
}

impl EpistemicStatus {
    /// Canonical lowercase wire name.
    pub fn as_str(self) -> &'static str {
        match self {
            EpistemicStatus::Supported => "supported",
            EpistemicStatus::Contradicted => "contradicted",
            EpistemicStatus::Contested => "contested",
            EpistemicStatus::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "supported" => Some(EpistemicStatus::Supported),
            "contradicted" => Some(EpistemicStatus::Contradicted),
            "contested" => Some(EpistemicStatus::Contested),
            "unknown" => Some(EpistemicStatus::Unknown),
            _ => None,
        }
    }
}

/// One atomic claim with its salience weight (nonnegative; zero-weight claims
/// are carried but contribute nothing to coverage).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomicClaim {
    pub text: String,
    pub weight: Rational,
}

impl AtomicClaim {
    pub fn new(text: impl Into<String>, weight: Rational) -> Self {
        AtomicClaim { text: text.into(), weight }
    }
}

/// Signed support scores of one claim against one chunk: positive evidence,
/// negative evidence, and orthogonal remainder. Valid triples are
/// componentwise in [0, 1] and sum to exactly 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedTriple {
    pub pos: Rational,
    pub neg: Rational,
    pub orth: Rational,
}

impl SignedTriple {
    pub fn new(pos: Rational, neg: Rational, orth: Rational) -> Self {
        SignedTriple { pos, neg, orth }
    }

    pub fn on_simplex(&self) -> bool {
        let unit = Rational::one();
        self.pos.is_nonneg()
            && self.neg.is_nonneg()
            && self.orth.is_nonneg()
            && self.pos <= unit
            && self.neg <= unit
            && self.orth <= unit
            && &(&self.pos + &self.neg) + &self.orth == unit
    }
}

/// Classification thresholds. All four must lie in (0, 1].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thresholds {
    /// θ_g — minimum best positive score for "supported".
    pub support: Rational,
    /// θ_c — minimum best negative score for "contradicted".
    pub contradiction: Rational,
    /// θ_e — minimum supported coverage mass for emission.
    pub emission: Rational,
    /// θ_r — maximum tolerated contradicted+contested coverage mass.
    pub residual: Rational,
}

fn threshold_in_range(value: &Rational) -> bool {
    value.is_positive() && *value <= Rational::one()
}

fn check_threshold(name: &'static str, value: &Rational) -> Result<(), GroundingError> {
    if threshold_in_range(value) {
        Ok(())
    } else {
        Err(GroundingError::Threshold { name, value: value.clone() })
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), GroundingError> {
        check_threshold("support", &self.support)?;
        check_threshold("contradiction", &self.contradiction)?;
        check_threshold("emission", &self.emission)?;
        // The residual ceiling may legitimately be zero (zero-tolerance
        // deployments), so it is range-checked as [0, 1].
        if self.residual.is_negative() || self.residual > Rational::one() {
            return Err(GroundingError::Threshold {
                name: "residual",
                value: self.residual.clone(),
            });
        }
        Ok(())
    }
}

/// Best positive and best negative score across a claim's row, each folded
/// independently with seed 0 — an empty row therefore yields `(0, 0)` and the
/// claim lands in `Unknown`.
pub fn best_scores(row: &[SignedTriple]) -> (Rational, Rational) {
    let mut best_pos = Rational::zero();
    let mut best_neg = Rational::zero();
    for t in row {
        if t.pos > best_pos {
            best_pos = t.pos.clone();
        }
        if t.neg > best_neg {
            best_neg = t.neg.clone();
        }
    }
    (best_pos, best_neg)
}

/// Crosses the two evidence axes into a four-valued status. Comparisons are
/// inclusive: a best score exactly at its threshold counts as clearing it.
pub fn classify(
    beta_plus: &Rational,
    beta_minus: &Rational,
    support: &Rational,
    contradiction: &Rational,
) -> Result<EpistemicStatus, GroundingError> {
    check_threshold("support", support)?;
    check_threshold("contradiction", contradiction)?;
    let pos = beta_plus >= support;
    let neg = beta_minus >= contradiction;
    Ok(match (pos, neg) {
        (true, false) => EpistemicStatus::Supported,
        (false, true) => EpistemicStatus::Contradicted,
        (true, true) => EpistemicStatus::Contested,
        (false, false) => EpistemicStatus::Unknown,
    })
}

/// Weight fraction of total claim weight per status. The four masses sum to
/// exactly 1 by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coverage {
    pub supported: Rational,
    pub contradicted: Rational,
    pub contested: Rational,
    pub unknown: Rational,
}

impl Coverage {
    pub fn mass_of(&self, status: EpistemicStatus) -> &Rational {
        match status {
            EpistemicStatus::Supported => &self.supported,
            EpistemicStatus::Contradicted => &self.contradicted,
            EpistemicStatus::Contested => &self.contested,
            EpistemicStatus::Unknown => &self.unknown,
        }
    }

    pub fn sum(&self) -> Rational {
        &(&self.supported + &self.contradicted) + &(&self.contested + &self.unknown)
    }
}

/// Computes per-status coverage masses. Requires matching list lengths,
/// nonnegative weights, and positive total weight.
pub fn coverages(
    claims: &[AtomicClaim],
    statuses: &[EpistemicStatus],
) -> Result<Coverage, GroundingError> {
    if claims.len() != statuses.len() {
        return Err(GroundingError::Shape {
            detail: format!("{} claims but {} statuses", claims.len(), statuses.len()),
        });
    }
    let mut total = Rational::zero();
    for (i, c) in claims.iter().enumerate() {
        if c.weight.is_negative() {
            return Err(GroundingError::NegativeWeight { claim: i, weight: c.weight.clone() });
        }
        total = &total + &c.weight;
    }
    if !total.is_positive() {
        return Err(GroundingError::DegenerateWeight);
    }
    let mass = |status: EpistemicStatus| -> Rational {
        let sum: Rational = claims
            .iter()
            .zip(statuses)
            .filter(|(_, s)| **s == status)
            .map(|(c, _)| c.weight.clone())
            .sum();
        &sum / &total
    };
    Ok(Coverage {
        supported: mass(EpistemicStatus::Supported),
        contradicted: mass(EpistemicStatus::Contradicted),
        contested: mass(EpistemicStatus::Contested),
        unknown: mass(EpistemicStatus::Unknown),
    })
}

/// The emission rule: enough of the answer's weight is supported, and the
/// conflicting share (contradicted plus contested) stays within tolerance.
/// Both comparisons are inclusive.
pub fn emission_gate(coverage: &Coverage, thresholds: &Thresholds) -> bool {
    coverage.supported >= thresholds.emission
        && &coverage.contradicted + &coverage.contested <= thresholds.residual
}

// ---------------------------------------------------------------------------
// Canonical text forms
// ---------------------------------------------------------------------------

/// Splits text into sentence units on runs of `.?!` followed by whitespace or
/// end of input. Punctuation *inside* a token (`"22.5"`) does not split. This
/// is a toy segmenter shared with the decomposition oracle so that
/// reconstruction closes exactly; it is not a general NLP tokenizer.
pub fn sentence_units(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut units = Vec::new();
    let mut current = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if matches!(c, '.' | '?' | '!') {
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j], '.' | '?' | '!') {
                j += 1;
            }
            if j >= chars.len() || chars[j].is_whitespace() {
                let unit = current.trim();
                if !unit.is_empty() {
                    units.push(unit.to_string());
                }
                current.clear();
                i = j;
                continue;
            }
        }
        current.push(c);
        i += 1;
    }
    let unit = current.trim();
    if !unit.is_empty() {
        units.push(unit.to_string());
    }
    units
}

fn normalize_unit(unit: &str) -> String {
    let lowered = unit.to_lowercase();
    let collapsed: Vec<&str> = lowered.split_whitespace().collect();
    let mut joined = collapsed.join(" ");
    while joined.ends_with(['.', '?', '!']) {
        joined.pop();
    }
    joined.trim().to_string()
}

/// Canonical form of a text: sentence units, each lowercased with whitespace
/// collapsed and terminal punctuation stripped, sorted lexicographically and
/// joined with a fixed separator. Sorting makes the form insensitive to
/// sentence order, so any decomposition that preserves the sentence multiset
/// reconstructs exactly.
pub fn canonicalize(text: &str) -> String {
    let mut units: Vec<String> =
        sentence_units(text).iter().map(|u| normalize_unit(u)).filter(|u| !u.is_empty()).collect();
    units.sort();
    units.join(" ; ")
}

/// Rejoins claim texts into a single declarative text whose canonical form
/// can be compared against the original answer's.
pub fn conjoin(claims: &[AtomicClaim]) -> String {
    if claims.is_empty() {
        return String::new();
    }
    let mut joined = claims.iter().map(|c| c.text.trim()).collect::<Vec<_>>().join(". ");
    joined.push('.');
    joined
}

// ---------------------------------------------------------------------------
// Certificate
// ---------------------------------------------------------------------------

/// Full grounding certificate: raw inputs, derived statistics, the emission
/// decision, and canonical text forms tying the claims back to the answer.
///
/// All derived fields are stored explicitly so a verifier can re-derive and
/// compare them without trusting the producer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundingCertificate {
    pub answer: String,
    pub claims: Vec<AtomicClaim>,
    pub retrieved_chunks: Vec<String>,
    /// One row per claim, one triple per chunk.
    pub support: Vec<Vec<SignedTriple>>,
    pub beta_plus: Vec<Rational>,
    pub beta_minus: Vec<Rational>,
    pub thresholds: Thresholds,
    pub statuses: Vec<EpistemicStatus>,
    pub coverage: Coverage,
    pub emitted: bool,
    pub canonical_answer: String,
    pub canonical_conjunction: String,
    pub declared_assumptions: Vec<AssumptionTag>,
}

/// Builds a fully consistent certificate from raw inputs, validating shape,
/// simplex membership, thresholds, and weights up front.
pub fn build_grounding(
    answer: impl Into<String>,
    claims: Vec<AtomicClaim>,
    retrieved_chunks: Vec<String>,
    support: Vec<Vec<SignedTriple>>,
    thresholds: Thresholds,
    declared_assumptions: Vec<AssumptionTag>,
) -> Result<GroundingCertificate, GroundingError> {
    let answer = answer.into();
    thresholds.validate()?;
    if support.len() != claims.len() {
        return Err(GroundingError::Shape {
            detail: format!("{} claims but {} score rows", claims.len(), support.len()),
        });
    }
    for (i, row) in support.iter().enumerate() {
        if row.len() != retrieved_chunks.len() {
            return Err(GroundingError::Shape {
                detail: format!(
                    "row {i} has {} triples but there are {} chunks",
                    row.len(),
                    retrieved_chunks.len()
                ),
            });
        }
        for (j, t) in row.iter().enumerate() {
            if !t.on_simplex() {
                return Err(GroundingError::Simplex {
                    claim: i,
                    chunk: j,
                    triple: Box::new(t.clone()),
                });
            }
        }
    }

    let mut beta_plus = Vec::with_capacity(claims.len());
    let mut beta_minus = Vec::with_capacity(claims.len());
    let mut statuses = Vec::with_capacity(claims.len());
    for row in &support {
        let (bp, bm) = best_scores(row);
        statuses.push(classify(&bp, &bm, &thresholds.support, &thresholds.contradiction)?);
        beta_plus.push(bp);
        beta_minus.push(bm);
    }
    let coverage = coverages(&claims, &statuses)?;
    let emitted = emission_gate(&coverage, &thresholds);
    let canonical_answer = canonicalize(&answer);
    let canonical_conjunction = canonicalize(&conjoin(&claims));

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

/// Re-derives every stored field of a certificate and reports one obligation
/// per field family. Never panics: obligations whose recomputation is blocked
/// by an earlier shape failure are reported as unchecked rather than crashing
/// on out-of-range indexing.
pub fn verify_grounding(cert: &GroundingCertificate) -> VerificationReport {
    let mut rep = VerificationReport::new();
    let n = cert.claims.len();

    let shape_ok = cert.support.len() == n
        && cert.beta_plus.len() == n
        && cert.beta_minus.len() == n
        && cert.statuses.len() == n
        && cert.support.iter().all(|row| row.len() == cert.retrieved_chunks.len());
    rep.check("shape", shape_ok, || {
        format!(
            "claims={n} rows={} beta+={} beta-={} statuses={} chunks={}",
            cert.support.len(),
            cert.beta_plus.len(),
            cert.beta_minus.len(),
            cert.statuses.len(),
            cert.retrieved_chunks.len()
        )
    });

    let thresholds_ok = cert.thresholds.validate().is_ok();
    rep.check("thresholds", thresholds_ok, || {
        format!("{:?}", cert.thresholds.validate().unwrap_err())
    });

    let mut simplex_bad = None;
    for (i, row) in cert.support.iter().enumerate() {
        for (j, t) in row.iter().enumerate() {
            if !t.on_simplex() {
                simplex_bad = Some((i, j));
            }
        }
    }
    rep.check("scores_simplex", simplex_bad.is_none(), || {
        let (i, j) = simplex_bad.unwrap();
        format!("triple at claim {i}, chunk {j} leaves the simplex")
    });

    if shape_ok {
        let recomputed: Vec<(Rational, Rational)> =
            cert.support.iter().map(|row| best_scores(row)).collect();
        let bp_ok = recomputed.iter().map(|(bp, _)| bp).eq(cert.beta_plus.iter());
        rep.check("beta_plus", bp_ok, || "stored β⁺ differs from recomputed row maxima".into());
        let bm_ok = recomputed.iter().map(|(_, bm)| bm).eq(cert.beta_minus.iter());
        rep.check("beta_minus", bm_ok, || "stored β⁻ differs from recomputed row maxima".into());

        if thresholds_ok {
            let mut status_bad = None;
            for (i, (bp, bm)) in recomputed.iter().enumerate() {
                let expect =
                    classify(bp, bm, &cert.thresholds.support, &cert.thresholds.contradiction)
                        .expect("thresholds validated above");
                if expect != cert.statuses[i] {
                    status_bad = Some((i, expect, cert.statuses[i]));
                    break;
                }
            }
            rep.check("statuses", status_bad.is_none(), || {
                let (i, expect, got) = status_bad.unwrap();
                format!("claim {i}: expected {}, stored {}", expect.as_str(), got.as_str())
            });
        } else {
            rep.unchecked("statuses", "blocked by threshold failure");
        }
    } else {
        rep.unchecked("beta_plus", "blocked by shape failure");
        rep.unchecked("beta_minus", "blocked by shape failure");
        rep.unchecked("statuses", "blocked by shape failure");
    }

    let weights_ok = cert.claims.iter().all(|c| c.weight.is_nonneg());
    rep.check("weights_nonneg", weights_ok, || "a claim carries negative weight".into());
    let total: Rational = cert.claims.iter().map(|c| c.weight.clone()).sum();
    rep.check("total_weight", total.is_positive(), || format!("total weight = {total}"));

    if shape_ok && weights_ok && total.is_positive() {
        let cov = coverages(&cert.claims, &cert.statuses).expect("inputs validated above");
        for (name, expect, got) in [
            ("coverage_supported", &cov.supported, &cert.coverage.supported),
            ("coverage_contradicted", &cov.contradicted, &cert.coverage.contradicted),
            ("coverage_contested", &cov.contested, &cert.coverage.contested),
            ("coverage_unknown", &cov.unknown, &cert.coverage.unknown),
        ] {
            rep.check(name, expect == got, || format!("expected {expect}, stored {got}"));
        }
    } else {
        for name in [
            "coverage_supported",
            "coverage_contradicted",
            "coverage_contested",
            "coverage_unknown",
        ] {
            rep.unchecked(name, "blocked by shape or weight failure");
        }
    }

    let sum = cert.coverage.sum();
    rep.check("coverage_sum", sum == Rational::one(), || format!("masses sum to {sum}"));

    // The emission obligation relates the stored flag to the stored masses
    // (not to recomputed ones), so tampering with a mass fails the mass
    // obligation without cascading here.
    let gate = emission_gate(&cert.coverage, &cert.thresholds);
    rep.check("emission_rule", cert.emitted == gate, || {
        format!("stored emitted={}, gate evaluates to {gate}", cert.emitted)
    });

    let canon_answer = canonicalize(&cert.answer);
    let canon_conj = canonicalize(&conjoin(&cert.claims));
    let reconstruction_ok = cert.canonical_answer == canon_answer
        && cert.canonical_conjunction == canon_conj
        && canon_answer == canon_conj;
    rep.check("reconstruction", reconstruction_ok, || {
        format!(
            "canonical answer {:?} vs conjunction {:?} (stored {:?} / {:?})",
            canon_answer, canon_conj, cert.canonical_answer, cert.canonical_conjunction
        )
    });

    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::assumptions::AssumptionTag;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn default_thresholds() -> Thresholds {
        Thresholds {
            support: r(7, 10),
            contradiction: r(1, 2),
            emission: r(1, 2),
            residual: r(1, 20),
        }
    }

    fn triple(p: (i64, i64), n: (i64, i64)) -> SignedTriple {
        let pos = Rational::new(p.0, p.1);
        let neg = Rational::new(n.0, n.1);
        let orth = &(&Rational::one() - &pos) - &neg;
        SignedTriple::new(pos, neg, orth)
    }

    #[test]
    fn classify_covers_all_four_quadrants() {
        let t = default_thresholds();
        let c =
            |bp: Rational, bm: Rational| classify(&bp, &bm, &t.support, &t.contradiction).unwrap();
        assert_eq!(c(r(92, 100), r(3, 100)), EpistemicStatus::Supported);
        assert_eq!(c(r(45, 100), r(71, 100)), EpistemicStatus::Contradicted);
        assert_eq!(c(r(9, 10), r(6, 10)), EpistemicStatus::Contested);
        assert_eq!(c(r(30, 100), r(20, 100)), EpistemicStatus::Unknown);
        // Boundary scores clear their thresholds inclusively.
        assert_eq!(c(r(7, 10), r(0, 1)), EpistemicStatus::Supported);
        assert_eq!(c(r(0, 1), r(1, 2)), EpistemicStatus::Contradicted);
    }

    #[test]
    fn classify_rejects_out_of_range_thresholds() {
        for bad in [r(0, 1), r(-1, 2), r(11, 10)] {
            assert!(classify(&r(1, 2), &r(1, 2), &bad, &r(1, 2)).is_err());
            assert!(classify(&r(1, 2), &r(1, 2), &r(1, 2), &bad).is_err());
        }
    }

    #[test]
    fn best_scores_fold_from_zero() {
        assert_eq!(best_scores(&[]), (Rational::zero(), Rational::zero()));
        let row = vec![triple((1, 2), (1, 10)), triple((1, 4), (3, 10))];
        assert_eq!(best_scores(&row), (r(1, 2), r(3, 10)));
    }

    #[test]
    fn coverage_masses_sum_to_one_and_reject_degenerate_weight() {
        let claims = vec![
            AtomicClaim::new("a", r(3, 1)),
            AtomicClaim::new("b", r(2, 1)),
            AtomicClaim::new("c", r(0, 1)),
        ];
        let statuses = vec![
            EpistemicStatus::Supported,
            EpistemicStatus::Contradicted,
            EpistemicStatus::Unknown,
        ];
        let cov = coverages(&claims, &statuses).unwrap();
        assert_eq!(cov.supported, r(3, 5));
        assert_eq!(cov.contradicted, r(2, 5));
        assert_eq!(cov.unknown, Rational::zero());
        assert_eq!(cov.sum(), Rational::one());

        let zero = vec![AtomicClaim::new("z", Rational::zero())];
        assert_eq!(
            coverages(&zero, &[EpistemicStatus::Unknown]),
            Err(GroundingError::DegenerateWeight)
        );
    }

    #[test]
    fn emission_gate_is_inclusive_on_both_sides() {
        let t = default_thresholds();
        let cov = |s: Rational, c: Rational| Coverage {
            supported: s.clone(),
            contradicted: c.clone(),
            contested: Rational::zero(),
            unknown: &(&Rational::one() - &s) - &c,
        };
        assert!(emission_gate(&cov(r(1, 2), r(1, 20)), &t));
        assert!(!emission_gate(&cov(r(49, 100), Rational::zero()), &t));
        assert!(!emission_gate(&cov(r(1, 2), r(6, 100)), &t));
    }

    #[test]
    fn canonicalization_sorts_and_normalizes_units() {
        assert_eq!(
            canonicalize("The  SKY is blue. Water is wet!"),
            "the sky is blue ; water is wet"
        );
        assert_eq!(canonicalize("b. a."), "a ; b");
        assert_eq!(canonicalize("Dose is 2.5 mg daily."), "dose is 2.5 mg daily");
        assert_eq!(canonicalize(""), "");

        let claims = vec![
            AtomicClaim::new("Water is wet", Rational::one()),
            AtomicClaim::new("The sky is blue", Rational::one()),
        ];
        assert_eq!(canonicalize(&conjoin(&claims)), canonicalize("The sky is blue. Water is wet."));
    }

    fn two_claim_cert() -> GroundingCertificate {
        build_grounding(
            "Alpha holds. Beta holds.",
            vec![AtomicClaim::new("Alpha holds", r(3, 1)), AtomicClaim::new("Beta holds", r(1, 1))],
            vec!["alpha evidence".into(), "beta evidence".into()],
            vec![
                vec![triple((9, 10), (1, 100)), triple((1, 10), (0, 1))],
                vec![triple((1, 10), (0, 1)), triple((8, 10), (1, 50))],
            ],
            default_thresholds(),
            vec![AssumptionTag::oracle("SignedSupportOracle")],
        )
        .unwrap()
    }

    #[test]
    fn built_certificates_verify_cleanly() {
        let cert = two_claim_cert();
        assert!(cert.emitted);
        assert_eq!(cert.coverage.supported, Rational::one());
        let rep = verify_grounding(&cert);
        assert!(rep.passed(), "{rep}");
    }

    #[test]
    fn tampered_mass_fails_only_coverage_obligations() {
        let mut cert = two_claim_cert();
        cert.coverage.supported = r(95, 100);
        let rep = verify_grounding(&cert);
        assert!(!rep.passed());
        let failed = rep.failure_names();
        assert!(failed.contains(&"coverage_supported"));
        for name in failed {
            assert!(
                name == "coverage_supported" || name == "coverage_sum",
                "unexpected failure {name}"
            );
        }
    }

    #[test]
    fn tampered_status_is_localized() {
        let mut cert = two_claim_cert();
        cert.statuses[0] = EpistemicStatus::Contradicted;
        let rep = verify_grounding(&cert);
        let failed = rep.failure_names();
        // The status lie also shifts the claimed masses off the recomputed
        // ones, but untouched obligations (betas, emission, reconstruction)
        // must stay green.
        assert!(failed.contains(&"statuses"));
        assert!(!failed.contains(&"beta_plus"));
        assert!(!failed.contains(&"emission_rule"));
        assert!(!failed.contains(&"reconstruction"));
    }

    #[test]
    fn ragged_rows_are_rejected_at_construction() {
        let err = build_grounding(
            "Alpha holds.",
            vec![AtomicClaim::new("Alpha holds", r(1, 1))],
            vec!["chunk a".into(), "chunk b".into()],
            vec![vec![triple((1, 2), (1, 4))]],
            default_thresholds(),
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, GroundingError::Shape { .. }));
    }

    #[test]
    fn empty_rows_classify_as_unknown() {
        let cert = build_grounding(
            "Alpha holds.",
            vec![AtomicClaim::new("Alpha holds", r(1, 1))],
            vec![],
            vec![vec![]],
            default_thresholds(),
            vec![],
        )
        .unwrap();
        assert_eq!(cert.statuses, vec![EpistemicStatus::Unknown]);
        assert_eq!(cert.beta_plus, vec![Rational::zero()]);
        assert!(!cert.emitted);
        assert!(verify_grounding(&cert).passed());
    }

    prop_compose! {
        fn arb_triple()(p in 0i64..=100, rest in 0i64..=100) -> SignedTriple {
            let n = rest.min(100 - p);
            triple((p, 100), (n, 100))
        }
    }

    prop_compose! {
        fn arb_case()(
            n_claims in 1usize..5,
            n_chunks in 0usize..4,
        )(
            rows in proptest::collection::vec(
                proptest::collection::vec(arb_triple(), n_chunks), n_claims),
            weights in proptest::collection::vec(0i64..20, n_claims),
            n_chunks in Just(n_chunks),
        ) -> (Vec<AtomicClaim>, Vec<String>, Vec<Vec<SignedTriple>>) {
            let mut claims: Vec<AtomicClaim> = weights
                .iter()
                .enumerate()
                .map(|(i, w)| AtomicClaim::new(format!("claim {i} holds"), Rational::new(*w, 1)))
                .collect();
            // Guarantee positive total weight.
            if claims.iter().all(|c| c.weight.is_zero()) {
                claims[0].weight = Rational::one();
            }
            let chunks = (0..n_chunks).map(|j| format!("chunk {j}")).collect();
            (claims, chunks, rows)
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn random_built_certificates_verify((claims, chunks, rows) in arb_case()) {
            let answer = conjoin(&claims);
            let cert = build_grounding(
                answer, claims, chunks, rows, default_thresholds(), vec![],
            ).unwrap();
            let rep = verify_grounding(&cert);
            prop_assert!(rep.passed(), "{}", rep);
            prop_assert_eq!(cert.coverage.sum(), Rational::one());
            if cert.emitted {
                let residual = &cert.coverage.contradicted + &cert.coverage.contested;
                prop_assert!(residual <= cert.thresholds.residual);
            }
        }
    }
}
