//! Compositional stability: how far the pipeline input may move before any
//! downstream decision can flip.
//!
//! Each layer contributes a witness `(gain, margin)`: the gain bounds how
//! much the layer amplifies an incoming perturbation, and the margin is the
//! distance from the layer's current input to its nearest behavioural
//! boundary (a decision threshold for gates, a slope change for piecewise
//! pieces). A perturbation `d` at the pipeline input reaches layer `i`
//! amplified by the product of the gains before it, so every decision in the
//! pipeline provably survives while
//!
//! ```text
//! d · g₁·…·g_{i−1} < mᵢ        (strictly, for every layer i)
//! ```
//!
//! The stability budget is the infimum of `mᵢ / (g₁·…·g_{i−1})` over layers
//! whose gain prefix has not vanished. Discrete gates have gain zero — their
//! output is locally constant on each branch — so everything downstream of a
//! gate is unconditionally protected *while the gate itself holds*, and the
//! prefix-product formula expresses exactly that: once a prefix vanishes the
//! remaining margins stop binding.
//!
//! Budgets are computed twice, by the forward prefix scan and by a backward
//! tolerance chain, and verification demands the two agree; a disagreement
//! means the witness arithmetic was tampered with or miscomputed.

use crate::numeric::Rational;
use crate::report::VerificationReport;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    /// Locally linear behaviour: the gain bound holds within the margin.
    Continuous,
    /// Threshold branch: output is branch-constant, so the gain is zero and
    /// the margin is the distance to the threshold.
    DiscreteGate,
}

/// Per-layer stability witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerWitness {
    pub name: String,
    /// Local Lipschitz bound on perturbation amplification. Nonnegative;
    /// exactly zero for discrete gates.
    pub gain: Rational,
    /// Distance from the layer's current input to the nearest behavioural
    /// boundary. Strictly positive — a zero margin means the trace already
    /// sits on a boundary and no stability can be certified.
    pub margin: Rational,
    pub kind: LayerKind,
}

impl LayerWitness {
    pub fn new(name: impl Into<String>, gain: Rational, margin: Rational, kind: LayerKind) -> Self {
        LayerWitness { name: name.into(), gain, margin, kind }
    }
}

/// An input-perturbation budget: finite, or unconstrained (only possible for
/// an empty pipeline, which has no decisions to protect).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StabilityBudget {
    Finite(Rational),
    Unbounded,
}

impl StabilityBudget {
    /// Does a perturbation of magnitude `d` stay strictly inside the budget?
    pub fn admits(&self, d: &Rational) -> bool {
        match self {
            StabilityBudget::Finite(b) => d < b,
            StabilityBudget::Unbounded => true,
        }
    }

    fn min_with_finite(self, value: Rational) -> StabilityBudget {
        match self {
            StabilityBudget::Unbounded => StabilityBudget::Finite(value),
            StabilityBudget::Finite(b) => {
                StabilityBudget::Finite(if value < b { value } else { b })
            }
        }
    }
}

impl fmt::Display for StabilityBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StabilityBudget::Finite(b) => write!(f, "{b}"),
            StabilityBudget::Unbounded => write!(f, "unbounded"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompositionError {
    #[error("layer {layer} has negative gain {gain}")]
    NegativeGain { layer: String, gain: Rational },
    #[error("layer {layer} has non-positive margin {margin}")]
    MarginNotPositive { layer: String, margin: Rational },
    #[error("discrete gate {layer} declares nonzero gain {gain}")]
    GateWithNonzeroGain { layer: String, gain: Rational },
    #[error("layer {layer}: trace input sits exactly on a slope boundary")]
    AtKink { layer: String },
    #[error("layer {layer}: trace input sits exactly on the decision threshold")]
    AtDecisionBoundary { layer: String },
}

/// Composition certificate: the layer witnesses plus the two derived
/// pipeline-level quantities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionCert {
    pub layers: Vec<LayerWitness>,
    /// Product of all layer gains — the end-to-end amplification bound.
    pub pipeline_gain: Rational,
    /// Largest certified input perturbation (exclusive bound).
    pub budget: StabilityBudget,
}

fn validate_layers(layers: &[LayerWitness]) -> Result<(), CompositionError> {
    for l in layers {
        if l.gain.is_negative() {
            return Err(CompositionError::NegativeGain {
                layer: l.name.clone(),
                gain: l.gain.clone(),
            });
        }
        if !l.margin.is_positive() {
            return Err(CompositionError::MarginNotPositive {
                layer: l.name.clone(),
                margin: l.margin.clone(),
            });
        }
        if l.kind == LayerKind::DiscreteGate && !l.gain.is_zero() {
            return Err(CompositionError::GateWithNonzeroGain {
                layer: l.name.clone(),
                gain: l.gain.clone(),
            });
        }
    }
    Ok(())
}

/// Forward prefix scan: `min_i mᵢ / (g₁·…·g_{i−1})`, stopping at the first
/// vanished prefix since no perturbation survives past a gate.
fn forward_budget(layers: &[LayerWitness]) -> StabilityBudget {
    let mut budget = StabilityBudget::Unbounded;
    let mut prefix = Rational::one();
    for l in layers {
        if prefix.is_zero() {
            break;
        }
        budget = budget.min_with_finite(&l.margin / &prefix);
        prefix = &prefix * &l.gain;
    }
    budget
}

/// Backward tolerance chain: the largest perturbation layer `i` can absorb
/// is bounded by its own margin and — unless its gain vanishes — by what the
/// rest of the pipeline can absorb after amplification.
fn backward_budget(layers: &[LayerWitness]) -> StabilityBudget {
    let mut tolerance = StabilityBudget::Unbounded;
    for l in layers.iter().rev() {
        let downstream = if l.gain.is_zero() {
            StabilityBudget::Unbounded
        } else {
            match &tolerance {
                StabilityBudget::Unbounded => StabilityBudget::Unbounded,
                StabilityBudget::Finite(t) => StabilityBudget::Finite(t / &l.gain),
            }
        };
        tolerance = downstream.min_with_finite(l.margin.clone());
    }
    tolerance
}

/// Builds the composition certificate from per-layer witnesses.
pub fn compose(layers: Vec<LayerWitness>) -> Result<CompositionCert, CompositionError> {
    validate_layers(&layers)?;
    let pipeline_gain = layers.iter().fold(Rational::one(), |acc, l| &acc * &l.gain);
    let budget = forward_budget(&layers);
    Ok(CompositionCert { layers, pipeline_gain, budget })
}

/// Re-derives every pipeline-level quantity from the stored witnesses. The
/// budget must match under both derivations; localized failures point at
/// whichever stored field was altered.
pub fn verify_composition(cert: &CompositionCert) -> VerificationReport {
    let mut rep = VerificationReport::new();
    let shape = validate_layers(&cert.layers);
    rep.check("layer_shapes", shape.is_ok(), || shape.as_ref().unwrap_err().to_string());

    let gain = cert.layers.iter().fold(Rational::one(), |acc, l| &acc * &l.gain);
    rep.check("pipeline_gain", gain == cert.pipeline_gain, || {
        format!("stored gain {}, recomputed {gain}", cert.pipeline_gain)
    });

    let forward = forward_budget(&cert.layers);
    rep.check("budget_forward", forward == cert.budget, || {
        format!("stored budget {}, forward scan gives {forward}", cert.budget)
    });

    let backward = backward_budget(&cert.layers);
    rep.check("budget_backward", backward == cert.budget, || {
        format!("stored budget {}, backward chain gives {backward}", cert.budget)
    });

    rep
}

/// Does perturbation `d ≥ 0` stay strictly inside the certified budget?
pub fn within_budget(cert: &CompositionCert, d: &Rational) -> bool {
    d.is_nonneg() && cert.budget.admits(d)
}

/// The two-layer special case, stated directly: a perturbation `d` entering
/// layer one neither flips layer one nor — after amplification — layer two.
pub fn two_layer_check(d: &Rational, first: &LayerWitness, second: &LayerWitness) -> bool {
    d.is_nonneg() && *d < first.margin && &first.gain * d < second.margin
}

// ---------------------------------------------------------------------------
// Piecewise-linear toy pipeline
// ---------------------------------------------------------------------------

/// A scalar toy pipeline with exactly-representable behaviour, used to
/// exercise the composition theory end to end: every layer is either a
/// continuous piecewise-linear map or a hard threshold gate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ToyLayer {
    /// Continuous piecewise-linear bump: slope `inner_slope` within
    /// `kink_radius` of `anchor`, slope `outer_slope` beyond it, glued
    /// continuously.
    Linear {
        anchor: Rational,
        value_at_anchor: Rational,
        kink_radius: Rational,
        inner_slope: Rational,
        outer_slope: Rational,
    },
    /// Hard branch: `ge_value` when input ≥ threshold, else `lt_value`.
    Gate { threshold: Rational, ge_value: Rational, lt_value: Rational },
}

impl ToyLayer {
    pub fn eval(&self, x: &Rational) -> Rational {
        match self {
            ToyLayer::Linear { anchor, value_at_anchor, kink_radius, inner_slope, outer_slope } => {
                let offset = x - anchor;
                let inside = offset.abs() <= *kink_radius;
                if inside {
                    value_at_anchor + &(inner_slope * &offset)
                } else {
                    // Continue continuously past the kink on whichever side.
                    let edge = if offset.is_negative() {
                        -kink_radius.clone()
                    } else {
                        kink_radius.clone()
                    };
                    let at_edge = value_at_anchor + &(inner_slope * &edge);
                    &at_edge + &(outer_slope * &(&offset - &edge))
                }
            }
            ToyLayer::Gate { threshold, ge_value, lt_value } => {
                if x >= threshold {
                    ge_value.clone()
                } else {
                    lt_value.clone()
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyPipeline {
    pub layers: Vec<ToyLayer>,
}

/// Trace-specific derivation: witnesses, the value trace, and the branch
/// taken at each gate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedPipeline {
    pub witnesses: Vec<LayerWitness>,
    /// `trace[0]` is the input; `trace[i+1]` the output of layer `i`.
    pub trace: Vec<Rational>,
    /// One branch bit per gate layer, in pipeline order (`true` = ≥ branch).
    pub decisions: Vec<bool>,
}

impl ToyPipeline {
    pub fn eval(&self, x0: &Rational) -> Rational {
        self.layers.iter().fold(x0.clone(), |x, l| l.eval(&x))
    }

    /// Gate branch bits at input `x0`.
    pub fn decisions(&self, x0: &Rational) -> Vec<bool> {
        let mut x = x0.clone();
        let mut bits = Vec::new();
        for l in &self.layers {
            if let ToyLayer::Gate { threshold, .. } = l {
                bits.push(x >= *threshold);
            }
            x = l.eval(&x);
        }
        bits
    }

    /// Derives per-layer witnesses along the trace from `x0`. For a linear
    /// layer the witness reflects whichever slope region the trace input
    /// falls in; margins are the exact distances to the nearest kink or
    /// threshold, so an input sitting on a boundary is rejected.
    pub fn derive(&self, x0: &Rational) -> Result<DerivedPipeline, CompositionError> {
        let mut witnesses = Vec::with_capacity(self.layers.len());
        let mut trace = vec![x0.clone()];
        let mut decisions = Vec::new();
        let mut x = x0.clone();
        for (i, l) in self.layers.iter().enumerate() {
            let name = format!(
                "layer{}_{}",
                i + 1,
                match l {
                    ToyLayer::Linear { .. } => "linear",
                    ToyLayer::Gate { .. } => "gate",
                }
            );
            match l {
                ToyLayer::Linear { anchor, kink_radius, inner_slope, outer_slope, .. } => {
                    let dist = (&x - anchor).abs();
                    let (gain, margin) = if dist < *kink_radius {
                        (inner_slope.abs(), kink_radius - &dist)
                    } else if dist > *kink_radius {
                        (outer_slope.abs(), &dist - kink_radius)
                    } else {
                        return Err(CompositionError::AtKink { layer: name });
                    };
                    witnesses.push(LayerWitness::new(name, gain, margin, LayerKind::Continuous));
                }
                ToyLayer::Gate { threshold, .. } => {
                    let margin = (&x - threshold).abs();
                    if margin.is_zero() {
                        return Err(CompositionError::AtDecisionBoundary { layer: name });
                    }
                    decisions.push(x >= *threshold);
                    witnesses.push(LayerWitness::new(
                        name,
                        Rational::zero(),
                        margin,
                        LayerKind::DiscreteGate,
                    ));
                }
            }
            x = l.eval(&x);
            trace.push(x.clone());
        }
        Ok(DerivedPipeline { witnesses, trace, decisions })
    }
}

/// Result of replaying perturbed inputs against a certified pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvarianceSimulation {
    pub in_budget_checked: usize,
    /// Perturbed inputs *within* the budget whose gate decisions changed.
    /// Soundness of the certificate means this must stay empty.
    pub violations: Vec<Rational>,
    pub out_of_budget_checked: usize,
    /// Out-of-budget inputs that flipped a decision — informational only;
    /// the budget makes no promise out there.
    pub out_of_budget_flips: usize,
}

/// Replays candidate inputs `x′` against the pipeline: any in-budget input
/// that changes a gate decision is recorded as a soundness violation.
pub fn simulate_invariance(
    pipeline: &ToyPipeline,
    cert: &CompositionCert,
    x0: &Rational,
    candidates: &[Rational],
) -> InvarianceSimulation {
    let baseline = pipeline.decisions(x0);
    let mut sim = InvarianceSimulation {
        in_budget_checked: 0,
        violations: Vec::new(),
        out_of_budget_checked: 0,
        out_of_budget_flips: 0,
    };
    for x in candidates {
        let d = (x - x0).abs();
        let flipped = pipeline.decisions(x) != baseline;
        if within_budget(cert, &d) {
            sim.in_budget_checked += 1;
            if flipped {
                sim.violations.push(x.clone());
            }
        } else {
            sim.out_of_budget_checked += 1;
            if flipped {
                sim.out_of_budget_flips += 1;
            }
        }
    }
    sim
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    /// Seven alternating layers: two continuous maps and five gates wired so
    /// a large enough input shift cascades a flip through every gate.
    pub(crate) fn seven_layer_pipeline() -> ToyPipeline {
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

    #[test]
    fn seven_layer_derivation_and_budget() {
        let pipeline = seven_layer_pipeline();
        let x0 = r(2, 5);
        let derived = pipeline.derive(&x0).unwrap();
        assert_eq!(pipeline.eval(&x0), r(5, 1));
        assert_eq!(derived.decisions, vec![true; 5]);

        let gains: Vec<Rational> = derived.witnesses.iter().map(|w| w.gain.clone()).collect();
        assert_eq!(gains, vec![r(1, 1), r(0, 1), r(0, 1), r(0, 1), r(1, 1), r(0, 1), r(0, 1)]);
        let margins: Vec<Rational> = derived.witnesses.iter().map(|w| w.margin.clone()).collect();
        assert_eq!(
            margins,
            vec![r(3, 25), r(50, 1), r(3, 1), r(2, 25), r(77, 100), r(1, 1), r(1, 1)]
        );

        let cert = compose(derived.witnesses).unwrap();
        assert_eq!(cert.pipeline_gain, Rational::zero());
        assert_eq!(cert.budget, StabilityBudget::Finite(r(3, 25)));
        assert!(verify_composition(&cert).passed());
    }

    #[test]
    fn out_of_budget_shift_cascades_through_every_gate() {
        let pipeline = seven_layer_pipeline();
        let x0 = r(2, 5);
        let derived = pipeline.derive(&x0).unwrap();
        let cert = compose(derived.witnesses).unwrap();

        let x_shifted = &x0 - &r(21, 2);
        assert!(!within_budget(&cert, &(&x_shifted - &x0).abs()));
        assert_eq!(pipeline.decisions(&x_shifted), vec![false; 5]);
        assert_eq!(pipeline.eval(&x_shifted), r(-5, 1));

        let sim = simulate_invariance(&pipeline, &cert, &x0, &[x_shifted]);
        assert_eq!(sim.out_of_budget_checked, 1);
        assert_eq!(sim.out_of_budget_flips, 1);
        assert!(sim.violations.is_empty());
    }

    #[test]
    fn in_budget_shifts_never_flip_decisions() {
        let pipeline = seven_layer_pipeline();
        let x0 = r(2, 5);
        let cert = compose(pipeline.derive(&x0).unwrap().witnesses).unwrap();
        // Sweep the whole open budget interval on both sides.
        let candidates: Vec<Rational> = (1..=100)
            .flat_map(|k| {
                let d = &r(3, 25) * &r(k, 101);
                [&x0 + &d, &x0 - &d]
            })
            .collect();
        let sim = simulate_invariance(&pipeline, &cert, &x0, &candidates);
        assert_eq!(sim.in_budget_checked, 200);
        assert!(sim.violations.is_empty());
    }

    #[test]
    fn budget_is_exclusive_at_the_boundary() {
        let cert = compose(vec![LayerWitness::new(
            "gate",
            Rational::zero(),
            r(1, 4),
            LayerKind::DiscreteGate,
        )])
        .unwrap();
        assert!(within_budget(&cert, &r(24, 100)));
        assert!(!within_budget(&cert, &r(1, 4)));
        assert!(!within_budget(&cert, &r(-1, 8)));
    }

    #[test]
    fn empty_pipeline_is_unconstrained() {
        let cert = compose(vec![]).unwrap();
        assert_eq!(cert.pipeline_gain, Rational::one());
        assert_eq!(cert.budget, StabilityBudget::Unbounded);
        assert!(within_budget(&cert, &r(1_000_000, 1)));
        assert!(verify_composition(&cert).passed());
    }

    #[test]
    fn construction_rejects_malformed_witnesses() {
        let bad_gain = vec![LayerWitness::new("l", r(-1, 2), r(1, 1), LayerKind::Continuous)];
        assert!(matches!(compose(bad_gain), Err(CompositionError::NegativeGain { .. })));

        let bad_margin =
            vec![LayerWitness::new("l", r(1, 1), Rational::zero(), LayerKind::Continuous)];
        assert!(matches!(compose(bad_margin), Err(CompositionError::MarginNotPositive { .. })));

        let leaky_gate = vec![LayerWitness::new("g", r(1, 2), r(1, 1), LayerKind::DiscreteGate)];
        assert!(matches!(compose(leaky_gate), Err(CompositionError::GateWithNonzeroGain { .. })));
    }

    #[test]
    fn derivation_rejects_boundary_inputs() {
        let pipeline = ToyPipeline {
            layers: vec![ToyLayer::Gate {
                threshold: r(1, 2),
                ge_value: r(1, 1),
                lt_value: r(0, 1),
            }],
        };
        assert!(matches!(
            pipeline.derive(&r(1, 2)),
            Err(CompositionError::AtDecisionBoundary { .. })
        ));

        let kinked = ToyPipeline {
            layers: vec![ToyLayer::Linear {
                anchor: r(0, 1),
                value_at_anchor: r(0, 1),
                kink_radius: r(1, 3),
                inner_slope: r(1, 1),
                outer_slope: r(2, 1),
            }],
        };
        assert!(matches!(kinked.derive(&r(1, 3)), Err(CompositionError::AtKink { .. })));
        // Beyond the kink the derivation uses the outer slope and the
        // distance back to the kink.
        let derived = kinked.derive(&r(1, 1)).unwrap();
        assert_eq!(derived.witnesses[0].gain, r(2, 1));
        assert_eq!(derived.witnesses[0].margin, r(2, 3));
    }

    #[test]
    fn verification_localizes_tampering() {
        let pipeline = seven_layer_pipeline();
        let derived = pipeline.derive(&r(2, 5)).unwrap();
        let mut cert = compose(derived.witnesses).unwrap();
        cert.budget = StabilityBudget::Finite(r(1, 1));
        let rep = verify_composition(&cert);
        assert_eq!(rep.failure_names(), vec!["budget_forward", "budget_backward"]);

        let derived = pipeline.derive(&r(2, 5)).unwrap();
        let mut cert = compose(derived.witnesses).unwrap();
        cert.pipeline_gain = r(1, 1);
        let rep = verify_composition(&cert);
        assert_eq!(rep.failure_names(), vec!["pipeline_gain"]);
    }

    #[test]
    fn two_layer_check_matches_the_budget_formula() {
        let first = LayerWitness::new("a", r(3, 1), r(1, 2), LayerKind::Continuous);
        let second = LayerWitness::new("b", r(0, 1), r(1, 1), LayerKind::DiscreteGate);
        // Budget is min(1/2, 1/3) = 1/3.
        assert!(two_layer_check(&r(33, 100), &first, &second));
        assert!(!two_layer_check(&r(1, 3), &first, &second));
        assert!(!two_layer_check(&r(1, 2), &first, &second));

        let cert = compose(vec![first.clone(), second.clone()]).unwrap();
        assert_eq!(cert.budget, StabilityBudget::Finite(r(1, 3)));
    }

    // ---------------------------------------------------------------------
    // Property tests
    // ---------------------------------------------------------------------

    fn arb_rational(range: std::ops::Range<i64>) -> impl Strategy<Value = Rational> {
        (range, 1i64..8).prop_map(|(n, d)| Rational::new(n, d))
    }

    fn arb_witness() -> impl Strategy<Value = LayerWitness> {
        prop_oneof![
            (arb_rational(0..6), arb_rational(1..9)).prop_filter_map(
                "positive margin",
                |(g, m)| m.is_positive().then(|| LayerWitness::new(
                    "c",
                    g,
                    m,
                    LayerKind::Continuous
                ))
            ),
            arb_rational(1..9).prop_filter_map("positive margin", |m| m
                .is_positive()
                .then(|| LayerWitness::new("g", Rational::zero(), m, LayerKind::DiscreteGate))),
        ]
    }

    fn arb_toy_layer() -> impl Strategy<Value = ToyLayer> {
        prop_oneof![
            (
                arb_rational(-4..5),
                arb_rational(-4..5),
                arb_rational(1..5),
                arb_rational(-3..4),
                arb_rational(-3..4),
            )
                .prop_map(
                    |(anchor, value_at_anchor, kink_radius, inner_slope, outer_slope)| {
                        ToyLayer::Linear {
                            anchor,
                            value_at_anchor,
                            kink_radius,
                            inner_slope,
                            outer_slope,
                        }
                    }
                ),
            (arb_rational(-4..5), arb_rational(-4..5), arb_rational(-4..5)).prop_map(
                |(threshold, ge_value, lt_value)| ToyLayer::Gate { threshold, ge_value, lt_value }
            ),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn forward_and_backward_budgets_agree(
            layers in proptest::collection::vec(arb_witness(), 0..7)
        ) {
            prop_assert_eq!(forward_budget(&layers), backward_budget(&layers));
        }

        #[test]
        fn composed_certificates_verify(
            layers in proptest::collection::vec(arb_witness(), 0..7)
        ) {
            let cert = compose(layers).unwrap();
            prop_assert!(verify_composition(&cert).passed());
        }

        #[test]
        fn in_budget_perturbations_preserve_decisions(
            layers in proptest::collection::vec(arb_toy_layer(), 1..6),
            x0 in arb_rational(-5..6),
            numer in 1i64..64,
            negative in any::<bool>(),
        ) {
            let pipeline = ToyPipeline { layers };
            let derived = match pipeline.derive(&x0) {
                Ok(d) => d,
                Err(_) => return Ok(()), // trace hit a boundary; nothing to certify
            };
            let cert = compose(derived.witnesses).unwrap();
            let d = match &cert.budget {
                StabilityBudget::Finite(b) => b * &Rational::new(numer, 64),
                StabilityBudget::Unbounded => Rational::int(numer),
            };
            let x = if negative { &x0 - &d } else { &x0 + &d };
            prop_assert!(within_budget(&cert, &(&x - &x0).abs()));
            prop_assert_eq!(pipeline.decisions(&x), pipeline.decisions(&x0));
        }
    }
}
