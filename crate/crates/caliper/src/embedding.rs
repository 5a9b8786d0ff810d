//! Embedding sensitivity certificates for retrieval stability.
//!
//! Given a text's embedding, a family of meaning-preserving variants, and a
//! family of meaning-altering variants, the certificate stores two squared
//! radii: `radius_invariant_sq` bounds every invariant variant's squared
//! distance from above, `radius_significant_sq` bounds every significant
//! variant's squared distance from below. Their exact difference `delta_sq`
//! is the selectivity gap: positive means the embedding moves less under
//! harmless rewording than under meaning changes.
//!
//! Everything stays in squared form. A retrieval score sits at squared margin
//! `m²` from the threshold; since embeddings and documents are unit-bounded,
//! an invariant rewrite can move the score by at most the invariant radius
//! (Cauchy–Schwarz), so `m² > R²` certifies that the threshold decision
//! survives every listed rewrite. The adjusted radius folds in an explicit
//! nonnegative rounding allowance for callers whose upstream scores were
//! quantized.

use crate::audit::assumptions::AssumptionTag;
use crate::numeric::{NumericError, Rational, RationalVector};
use crate::report::VerificationReport;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmbeddingError {
    /// The significant family is the evidence that the embedding *can* move;
    /// without at least one member the lower radius is meaningless.
    #[error("significant variant family is empty")]
    EmptySignificantFamily,
    /// All embeddings in a certificate must have squared norm at most 1.
    #[error("{which} has squared norm {norm_sq} > 1")]
    NormBound { which: String, norm_sq: Rational },
    /// Variant texts and variant embeddings must pair up one-to-one.
    #[error("{family} family has {texts} texts but {vectors} embeddings")]
    FamilyMismatch { family: &'static str, texts: usize, vectors: usize },
    /// The rounding allowance is an added slack and cannot be negative.
    #[error("rounding allowance {0} is negative")]
    NegativeRounding(Rational),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// Sensitivity certificate over one text and two variant families.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensitivityCertificate {
    pub text: String,
    pub embedding: RationalVector,
    /// Meaning-preserving variant texts, paired with `invariant_embeddings`.
    pub invariant_texts: Vec<String>,
    /// Meaning-altering variant texts, paired with `significant_embeddings`.
    pub significant_texts: Vec<String>,
    pub invariant_embeddings: Vec<RationalVector>,
    pub significant_embeddings: Vec<RationalVector>,
    /// Max squared distance from `embedding` over the invariant family
    /// (0 when the family is empty).
    pub radius_invariant_sq: Rational,
    /// Min squared distance from `embedding` over the significant family.
    pub radius_significant_sq: Rational,
    /// Exact difference `radius_significant_sq − radius_invariant_sq`.
    pub delta_sq: Rational,
    /// Extra slack added to the invariant radius in margin decisions, for
    /// quantized upstream scores. Zero when scores are exact.
    pub rounding_allowance: Rational,
    pub declared_assumptions: Vec<AssumptionTag>,
}

fn check_unit_norm(which: &str, v: &RationalVector) -> Result<(), EmbeddingError> {
    let norm_sq = v.l2_norm_sq();
    if norm_sq > Rational::one() {
        return Err(EmbeddingError::NormBound { which: which.to_string(), norm_sq });
    }
    Ok(())
}

/// Builds a certificate, computing both radii exactly from the listed
/// variants. Rejects empty significant families, norm violations, paired-list
/// length mismatches, and dimension mismatches.
// The argument list mirrors the certificate's paired-family structure;
// collapsing it into a params struct would just move the same eight fields.
#[allow(clippy::too_many_arguments)]
pub fn build_sensitivity(
    text: impl Into<String>,
    embedding: RationalVector,
    invariant_texts: Vec<String>,
    invariant_embeddings: Vec<RationalVector>,
    significant_texts: Vec<String>,
    significant_embeddings: Vec<RationalVector>,
    rounding_allowance: Rational,
    declared_assumptions: Vec<AssumptionTag>,
) -> Result<SensitivityCertificate, EmbeddingError> {
    if invariant_texts.len() != invariant_embeddings.len() {
        return Err(EmbeddingError::FamilyMismatch {
            family: "invariant",
            texts: invariant_texts.len(),
            vectors: invariant_embeddings.len(),
        });
    }
    if significant_texts.len() != significant_embeddings.len() {
        return Err(EmbeddingError::FamilyMismatch {
            family: "significant",
            texts: significant_texts.len(),
            vectors: significant_embeddings.len(),
        });
    }
    if significant_embeddings.is_empty() {
        return Err(EmbeddingError::EmptySignificantFamily);
    }
    if rounding_allowance.is_negative() {
        return Err(EmbeddingError::NegativeRounding(rounding_allowance));
    }
    check_unit_norm("base embedding", &embedding)?;
    for (i, v) in invariant_embeddings.iter().enumerate() {
        check_unit_norm(&format!("invariant embedding {i}"), v)?;
    }
    for (i, v) in significant_embeddings.iter().enumerate() {
        check_unit_norm(&format!("significant embedding {i}"), v)?;
    }

    let mut radius_invariant_sq = Rational::zero();
    for v in &invariant_embeddings {
        let d = embedding.l2_dist_sq(v)?;
        if d > radius_invariant_sq {
            radius_invariant_sq = d;
        }
    }
    let mut radius_significant_sq: Option<Rational> = None;
    for v in &significant_embeddings {
        let d = embedding.l2_dist_sq(v)?;
        radius_significant_sq = Some(match radius_significant_sq {
            None => d,
            Some(cur) => cur.min(d),
        });
    }
    let radius_significant_sq = radius_significant_sq.expect("family checked nonempty");
    let delta_sq = &radius_significant_sq - &radius_invariant_sq;

    Ok(SensitivityCertificate {
        text: text.into(),
        embedding,
        invariant_texts,
        significant_texts,
        invariant_embeddings,
        significant_embeddings,
        radius_invariant_sq,
        radius_significant_sq,
        delta_sq,
        rounding_allowance,
        declared_assumptions,
    })
}

/// Re-checks every stored bound. Radii are verified for *soundness* (the
/// invariant radius dominates every invariant distance; the significant
/// radius undercuts every significant distance) — a certificate may carry a
/// looser-than-tight invariant radius and still verify, which is what makes
/// growing a family monotone.
pub fn verify_sensitivity(cert: &SensitivityCertificate) -> VerificationReport {
    let mut rep = VerificationReport::new();

    let inv_pairs_ok = cert.invariant_texts.len() == cert.invariant_embeddings.len();
    let sig_pairs_ok = cert.significant_texts.len() == cert.significant_embeddings.len();
    rep.check("family_lengths", inv_pairs_ok && sig_pairs_ok, || {
        format!(
            "invariant {}:{}, significant {}:{}",
            cert.invariant_texts.len(),
            cert.invariant_embeddings.len(),
            cert.significant_texts.len(),
            cert.significant_embeddings.len()
        )
    });

    rep.check("significant_nonempty", !cert.significant_embeddings.is_empty(), || {
        "significant family is empty".into()
    });

    let dim = cert.embedding.dim();
    let dims_ok = cert
        .invariant_embeddings
        .iter()
        .chain(&cert.significant_embeddings)
        .all(|v| v.dim() == dim);
    rep.check("dimensions", dims_ok, || format!("expected dimension {dim} across all variants"));

    let mut norm_bad: Option<String> = None;
    for (label, v) in std::iter::once(("base", &cert.embedding))
        .chain(cert.invariant_embeddings.iter().map(|v| ("invariant", v)))
        .chain(cert.significant_embeddings.iter().map(|v| ("significant", v)))
    {
        let n = v.l2_norm_sq();
        if n > Rational::one() {
            norm_bad = Some(format!("{label} vector has squared norm {n}"));
            break;
        }
    }
    rep.check("norm_bounds", norm_bad.is_none(), || norm_bad.clone().unwrap());

    rep.check("rounding_nonneg", cert.rounding_allowance.is_nonneg(), || {
        format!("rounding allowance {}", cert.rounding_allowance)
    });
    rep.check("radius_invariant_nonneg", cert.radius_invariant_sq.is_nonneg(), || {
        format!("stored invariant radius {}", cert.radius_invariant_sq)
    });

    if dims_ok {
        let mut inv_bad = None;
        for (i, v) in cert.invariant_embeddings.iter().enumerate() {
            let d = cert.embedding.l2_dist_sq(v).expect("dimensions checked");
            if d > cert.radius_invariant_sq {
                inv_bad = Some((i, d));
                break;
            }
        }
        rep.check("radius_invariant_sound", inv_bad.is_none(), || {
            let (i, d) = inv_bad.clone().unwrap();
            format!(
                "invariant variant {i} at squared distance {d} exceeds radius {}",
                cert.radius_invariant_sq
            )
        });

        let mut sig_bad = None;
        for (i, v) in cert.significant_embeddings.iter().enumerate() {
            let d = cert.embedding.l2_dist_sq(v).expect("dimensions checked");
            if d < cert.radius_significant_sq {
                sig_bad = Some((i, d));
                break;
            }
        }
        rep.check("radius_significant_sound", sig_bad.is_none(), || {
            let (i, d) = sig_bad.clone().unwrap();
            format!(
                "significant variant {i} at squared distance {d} undercuts radius {}",
                cert.radius_significant_sq
            )
        });
    } else {
        rep.unchecked("radius_invariant_sound", "blocked by dimension failure");
        rep.unchecked("radius_significant_sound", "blocked by dimension failure");
    }

    let delta = &cert.radius_significant_sq - &cert.radius_invariant_sq;
    rep.check("delta_identity", delta == cert.delta_sq, || {
        format!("stored Δ² = {}, radii give {delta}", cert.delta_sq)
    });

    rep
}

/// The headline decision: does the embedding separate harmless rewording
/// from meaning change? Strict inequality — a zero gap certifies nothing.
pub fn selective_sensitivity_pass(cert: &SensitivityCertificate) -> bool {
    cert.delta_sq.is_positive()
}

/// Adjusted squared radius used by margin decisions: the certified invariant
/// radius plus the caller's rounding allowance.
pub fn adjusted_radius_sq(cert: &SensitivityCertificate) -> Rational {
    &cert.radius_invariant_sq + &cert.rounding_allowance
}

/// Three-valued outcome of a threshold-margin check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginDecision {
    /// The score clears the threshold and no listed invariant rewrite can
    /// drag it back under.
    StableAbove,
    /// The score misses the threshold and no listed invariant rewrite can
    /// push it over.
    StableBelow,
    /// The margin is inside the certified movement radius; the decision may
    /// flip under rewording and must not be treated as stable.
    Undecided,
}

fn margin_decision(margin: &Rational, adjusted_sq: &Rational) -> MarginDecision {
    // A unit-bounded document and a variant within squared distance R² keep
    // the score within √R² of the original (Cauchy–Schwarz), so a squared
    // margin strictly above R² pins the decision. Comparing squares avoids
    // ever taking the root.
    if margin.is_positive() && margin.squared() > *adjusted_sq {
        MarginDecision::StableAbove
    } else if margin.is_negative() && margin.squared() > *adjusted_sq {
        MarginDecision::StableBelow
    } else {
        MarginDecision::Undecided
    }
}

/// Checks whether the retrieval decision `⟨embedding, doc⟩ ≥ threshold` is
/// stable under every certified invariant rewrite of the query.
pub fn robust_margin_check(
    cert: &SensitivityCertificate,
    doc: &RationalVector,
    threshold: &Rational,
) -> Result<MarginDecision, EmbeddingError> {
    check_unit_norm("document", doc)?;
    let score = cert.embedding.inner_prod(doc)?;
    let margin = &score - threshold;
    Ok(margin_decision(&margin, &adjusted_radius_sq(cert)))
}

/// Document indices split by certified retrieval outcome.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RetrievalPartition {
    /// Retrieved under every certified rewrite.
    pub included: Vec<usize>,
    /// Outcome may differ between rewrites; surfaced, never silently dropped.
    pub maybe: Vec<usize>,
    /// Excluded under every certified rewrite.
    pub excluded: Vec<usize>,
}

/// Partitions candidate documents into certainly-in / uncertain /
/// certainly-out relative to a score threshold.
///
/// The decision here is *relative* — two scores move independently under a
/// rewrite, each by up to the adjusted radius in squared terms — so the
/// squared margin must clear four times the adjusted radius (the squared form
/// of a doubled linear gap) before a document's side is certified.
pub fn partition_topk(
    cert: &SensitivityCertificate,
    docs: &[RationalVector],
    threshold: &Rational,
) -> Result<RetrievalPartition, EmbeddingError> {
    let four = Rational::int(4);
    let gap_sq = &four * &adjusted_radius_sq(cert);
    let mut partition = RetrievalPartition::default();
    for (i, doc) in docs.iter().enumerate() {
        check_unit_norm(&format!("document {i}"), doc)?;
        let score = cert.embedding.inner_prod(doc)?;
        let margin = &score - threshold;
        if margin.is_positive() && margin.squared() > gap_sq {
            partition.included.push(i);
        } else if margin.is_negative() && margin.squared() > gap_sq {
            partition.excluded.push(i);
        } else {
            partition.maybe.push(i);
        }
    }
    Ok(partition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn vec3(a: (i64, i64), b: (i64, i64), c: (i64, i64)) -> RationalVector {
        RationalVector::from_pairs(&[a, b, c])
    }

    /// Base at (1/2, 0, 0); invariant variants at squared distances 7/500 and
    /// 1/2500; significant variants at 19/100 and 3/10.
    fn sample_cert() -> SensitivityCertificate {
        build_sensitivity(
            "renal dosing query",
            vec3((1, 2), (0, 1), (0, 1)),
            vec!["rewording one".into(), "rewording two".into()],
            vec![vec3((3, 5), (3, 50), (1, 50)), vec3((13, 25), (0, 1), (0, 1))],
            vec!["negated query".into(), "different drug".into()],
            vec![vec3((4, 5), (3, 10), (1, 10)), vec3((0, 1), (1, 10), (-1, 5))],
            Rational::zero(),
            vec![AssumptionTag::oracle("ParaphraseOracle")],
        )
        .unwrap()
    }

    #[test]
    fn radii_and_gap_are_exact() {
        let cert = sample_cert();
        assert_eq!(cert.radius_invariant_sq, r(7, 500));
        assert_eq!(cert.radius_significant_sq, r(19, 100));
        assert_eq!(cert.delta_sq, r(22, 125));
        assert!(selective_sensitivity_pass(&cert));
        let rep = verify_sensitivity(&cert);
        assert!(rep.passed(), "{rep}");
    }

    #[test]
    fn empty_invariant_family_gives_zero_radius() {
        let cert = build_sensitivity(
            "q",
            vec3((1, 2), (0, 1), (0, 1)),
            vec![],
            vec![],
            vec!["other".into()],
            vec![vec3((0, 1), (1, 2), (0, 1))],
            Rational::zero(),
            vec![],
        )
        .unwrap();
        assert_eq!(cert.radius_invariant_sq, Rational::zero());
        assert_eq!(cert.delta_sq, cert.radius_significant_sq);
        assert!(verify_sensitivity(&cert).passed());
    }

    #[test]
    fn empty_significant_family_is_rejected() {
        let err = build_sensitivity(
            "q",
            vec3((1, 2), (0, 1), (0, 1)),
            vec![],
            vec![],
            vec![],
            vec![],
            Rational::zero(),
            vec![],
        )
        .unwrap_err();
        assert_eq!(err, EmbeddingError::EmptySignificantFamily);
    }

    #[test]
    fn norm_violations_are_rejected_and_detected() {
        let big = vec3((1, 1), (1, 1), (0, 1));
        let err = build_sensitivity(
            "q",
            big.clone(),
            vec![],
            vec![],
            vec!["s".into()],
            vec![vec3((0, 1), (1, 2), (0, 1))],
            Rational::zero(),
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, EmbeddingError::NormBound { .. }));

        let mut cert = sample_cert();
        cert.invariant_embeddings[0] = big;
        let rep = verify_sensitivity(&cert);
        assert!(rep.failure_names().contains(&"norm_bounds"));
    }

    #[test]
    fn lowered_invariant_radius_fails_soundness() {
        let mut cert = sample_cert();
        cert.radius_invariant_sq = r(1, 2500);
        cert.delta_sq = &cert.radius_significant_sq - &cert.radius_invariant_sq;
        let rep = verify_sensitivity(&cert);
        assert_eq!(rep.failure_names(), vec!["radius_invariant_sound"]);
    }

    #[test]
    fn inflated_invariant_radius_stays_sound() {
        // Over-approximation is allowed: the radius is an upper bound, and a
        // conservative bound only shrinks what the margin check certifies.
        let mut cert = sample_cert();
        cert.radius_invariant_sq = r(1, 10);
        cert.delta_sq = &cert.radius_significant_sq - &cert.radius_invariant_sq;
        assert!(verify_sensitivity(&cert).passed());
    }

    #[test]
    fn margin_check_matches_worked_values() {
        let cert = sample_cert();
        // ⟨e, doc⟩ with doc = (3/5, 0, 0) gives score 3/10.
        let doc = vec3((3, 5), (0, 1), (0, 1));
        // Margin 1/10: squared 1/100 = 5/500 < 7/500 → undecided.
        assert_eq!(robust_margin_check(&cert, &doc, &r(1, 5)).unwrap(), MarginDecision::Undecided);
        // Margin 1/5: squared 1/25 = 20/500 > 7/500 → stable above.
        assert_eq!(
            robust_margin_check(&cert, &doc, &r(1, 10)).unwrap(),
            MarginDecision::StableAbove
        );
        // Margin −1/5 symmetric.
        assert_eq!(
            robust_margin_check(&cert, &doc, &r(1, 2)).unwrap(),
            MarginDecision::StableBelow
        );
    }

    #[test]
    fn rounding_allowance_tightens_decisions() {
        let mut cert = sample_cert();
        let doc = vec3((3, 5), (0, 1), (0, 1));
        assert_eq!(
            robust_margin_check(&cert, &doc, &r(1, 10)).unwrap(),
            MarginDecision::StableAbove
        );
        // Allowance pushes the adjusted radius past the squared margin.
        cert.rounding_allowance = r(1, 10);
        assert_eq!(robust_margin_check(&cert, &doc, &r(1, 10)).unwrap(), MarginDecision::Undecided);
    }

    #[test]
    fn partition_with_zero_radius_decides_everything_off_threshold() {
        let cert = build_sensitivity(
            "q",
            vec3((1, 2), (0, 1), (0, 1)),
            vec![],
            vec![],
            vec!["s".into()],
            vec![vec3((0, 1), (1, 2), (0, 1))],
            Rational::zero(),
            vec![],
        )
        .unwrap();
        let docs = vec![
            vec3((1, 1), (0, 1), (0, 1)),  // score 1/2 > 1/4
            vec3((1, 2), (0, 1), (0, 1)),  // score 1/4 = threshold
            vec3((-1, 2), (0, 1), (0, 1)), // score −1/4 < 1/4
        ];
        let p = partition_topk(&cert, &docs, &r(1, 4)).unwrap();
        assert_eq!(p.included, vec![0]);
        assert_eq!(p.maybe, vec![1]);
        assert_eq!(p.excluded, vec![2]);
    }

    #[test]
    fn partition_uses_the_doubled_gap() {
        let cert = sample_cert();
        // Margin 1/5: 1/25 > 7/500 certifies the absolute check, but the
        // relative check needs 1/25 > 4·7/500 = 28/500, which fails.
        let doc = vec3((3, 5), (0, 1), (0, 1));
        assert_eq!(
            robust_margin_check(&cert, &doc, &r(1, 10)).unwrap(),
            MarginDecision::StableAbove
        );
        let p = partition_topk(&cert, std::slice::from_ref(&doc), &r(1, 10)).unwrap();
        assert_eq!(p.maybe, vec![0]);
        // Margin 1/2: 1/4 > 28/500 → included.
        let p = partition_topk(&cert, &[vec3((1, 1), (0, 1), (0, 1))], &Rational::zero()).unwrap();
        assert_eq!(p.included, vec![0]);
    }

    #[test]
    fn duplicate_variants_change_nothing() {
        let base = sample_cert();
        let mut inv_texts = base.invariant_texts.clone();
        inv_texts.push(inv_texts[0].clone());
        let mut inv_vecs = base.invariant_embeddings.clone();
        inv_vecs.push(inv_vecs[0].clone());
        let again = build_sensitivity(
            base.text.clone(),
            base.embedding.clone(),
            inv_texts,
            inv_vecs,
            base.significant_texts.clone(),
            base.significant_embeddings.clone(),
            Rational::zero(),
            vec![],
        )
        .unwrap();
        assert_eq!(again.radius_invariant_sq, base.radius_invariant_sq);
        assert_eq!(again.delta_sq, base.delta_sq);
    }

    fn arb_unit_vec3() -> impl Strategy<Value = RationalVector> {
        // Components in [-1/2, 1/2] keep the squared norm ≤ 3/4 ≤ 1.
        proptest::collection::vec((-8i64..=8, Just(16i64)), 3).prop_map(|pairs| {
            RationalVector::from_pairs(&pairs.iter().map(|&(n, d)| (n, d)).collect::<Vec<_>>())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn growing_the_invariant_family_is_monotone(
            base in arb_unit_vec3(),
            inv in proptest::collection::vec(arb_unit_vec3(), 1..4),
            extra in arb_unit_vec3(),
            sig in arb_unit_vec3(),
        ) {
            let texts = |n: usize, tag: &str| (0..n).map(|i| format!("{tag} {i}")).collect::<Vec<_>>();
            let small = build_sensitivity(
                "t", base.clone(), texts(inv.len(), "inv"), inv.clone(),
                texts(1, "sig"), vec![sig.clone()], Rational::zero(), vec![],
            ).unwrap();
            let mut grown_vecs = inv.clone();
            grown_vecs.push(extra);
            let grown = build_sensitivity(
                "t", base, texts(grown_vecs.len(), "inv"), grown_vecs,
                texts(1, "sig"), vec![sig], Rational::zero(), vec![],
            ).unwrap();
            // More rewrites can only grow the invariant radius and shrink Δ².
            prop_assert!(grown.radius_invariant_sq >= small.radius_invariant_sq);
            prop_assert!(grown.delta_sq <= small.delta_sq);
            prop_assert!(verify_sensitivity(&grown).passed());
        }

        #[test]
        fn certified_margins_never_flip_under_listed_variants(
            base in arb_unit_vec3(),
            inv in proptest::collection::vec(arb_unit_vec3(), 1..4),
            sig in arb_unit_vec3(),
            doc in arb_unit_vec3(),
            thr_num in -8i64..=8,
        ) {
            let threshold = Rational::new(thr_num, 16);
            let texts = |n: usize| (0..n).map(|i| format!("v {i}")).collect::<Vec<_>>();
            let cert = build_sensitivity(
                "t", base, texts(inv.len()), inv.clone(),
                vec!["s".into()], vec![sig], Rational::zero(), vec![],
            ).unwrap();
            let decision = robust_margin_check(&cert, &doc, &threshold).unwrap();
            if decision != MarginDecision::Undecided {
                for v in &inv {
                    let s = v.inner_prod(&doc).unwrap();
                    match decision {
                        MarginDecision::StableAbove => prop_assert!(s > threshold),
                        MarginDecision::StableBelow => prop_assert!(s < threshold),
                        MarginDecision::Undecided => unreachable!(),
                    }
                }
            }
        }
    }
}
