//! Maximal certifiable residue: the heaviest claim subset that every
//! registered constraint accepts.
//!
//! Constraints in this module are *downward-closed* (any subset of an
//! acceptable set is acceptable) and *empty-admitting* (the empty set is
//! always acceptable), so a maximal acceptable subset always exists and
//! salvage can never be forced to invent claims. Both properties are checked:
//! empty-admittance at registration, closure by sampling for opaque
//! predicates at registration and exhaustively during verification on
//! instances small enough to enumerate.
//!
//! The dependency constraint deserves a note, because the obvious rendering
//! ("a may stay only if b stays") is not downward-closed — dropping `b` from
//! an acceptable set would break it. Here a dependency edge `(a, b)` instead
//! reads "a may stay only if claim b was *externally established*", against a
//! fixed bitmap of established claims supplied at construction (typically the
//! supported statuses from grounding). That is downward-closed: membership of
//! `a` only ever forbids, never requires.
//!
//! Tie-breaking is canonical: among acceptable subsets of maximal weight,
//! exact enumeration returns the lexicographically smallest sorted index
//! sequence. Zero-weight claims make ties common, so determinism here is what
//! keeps recomputed certificates byte-identical.

use crate::grounding::AtomicClaim;
use crate::numeric::Rational;
use crate::report::VerificationReport;
use num_traits::ToPrimitive;
use std::fmt;
use std::sync::Arc;

/// Exhaustive enumeration bound: instances with at most this many claims get
/// full 2ⁿ verification of maximality and closure; larger instances report
/// those obligations as unverified rather than silently trusting them.
pub const MAX_ENUM: usize = 20;

pub type CustomPredicate = Arc<dyn Fn(&[usize]) -> bool + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    PerClaim,
    PairwiseConflict,
    Dependency,
    Budget,
    Custom,
}

impl ConstraintKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ConstraintKind::PerClaim => "per_claim",
            ConstraintKind::PairwiseConflict => "pairwise_conflict",
            ConstraintKind::Dependency => "dependency",
            ConstraintKind::Budget => "budget",
            ConstraintKind::Custom => "custom",
        }
    }
}

/// The rule payload of a constraint. Structural variants are serializable
/// and monotone by construction; `Custom` is in-process only and gets its
/// closure property sampled instead of assumed.
#[derive(Clone)]
pub enum ConstraintRule {
    /// Claim `i` may appear only if `allowed[i]`.
    PerClaim { allowed: Vec<bool> },
    /// No edge may have both endpoints present.
    PairwiseConflict { edges: Vec<(usize, usize)> },
    /// Claim `a` may appear only if `established[b]` (a fixed external fact).
    Dependency { edges: Vec<(usize, usize)>, established: Vec<bool> },
    /// Total cost of the subset stays within the cap.
    Budget { costs: Vec<Rational>, cap: Rational },
    /// Arbitrary predicate over a sorted index slice. Not serializable.
    Custom(CustomPredicate),
}

/// A named admission rule over claim subsets.
#[derive(Clone)]
pub struct Constraint {
    pub name: String,
    pub rule: ConstraintRule,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum McrError {
    #[error("{n} claims exceed the exhaustive bound of {max}; use greedy or witness mode")]
    TooManyClaims { n: usize, max: usize },
    #[error("greedy mode requires per-claim constraints only; {name} has kind {kind}")]
    ModeError { name: String, kind: &'static str },
    #[error("constraint {name}: {detail}")]
    ConstraintShape { name: String, detail: String },
    #[error("claim {claim} has negative weight {weight}")]
    NegativeWeight { claim: usize, weight: Rational },
    #[error("constraint {name} rejects the empty set")]
    EmptyRejecting { name: String },
    #[error(
        "constraint {name} is not downward-closed: accepts {superset:?} but rejects {subset:?}"
    )]
    NotMonotone { name: String, superset: Vec<usize>, subset: Vec<usize> },
    #[error("witness is invalid: {detail}")]
    WitnessInvalid { detail: String },
    /// Weights are boxed to keep the error (and every `Result` carrying it)
    /// small.
    #[error(
        "witness of weight {witness_weight} is not maximal: {better:?} has weight {better_weight}"
    )]
    WitnessNotMaximal {
        witness_weight: Box<Rational>,
        better: Vec<usize>,
        better_weight: Box<Rational>,
    },
}

impl Constraint {
    pub fn per_claim(name: impl Into<String>, allowed: Vec<bool>) -> Self {
        Constraint { name: name.into(), rule: ConstraintRule::PerClaim { allowed } }
    }

    pub fn pairwise_conflict(name: impl Into<String>, edges: Vec<(usize, usize)>) -> Self {
        Constraint { name: name.into(), rule: ConstraintRule::PairwiseConflict { edges } }
    }

    pub fn dependency(
        name: impl Into<String>,
        edges: Vec<(usize, usize)>,
        established: Vec<bool>,
    ) -> Self {
        Constraint { name: name.into(), rule: ConstraintRule::Dependency { edges, established } }
    }

    pub fn budget(name: impl Into<String>, costs: Vec<Rational>, cap: Rational) -> Self {
        Constraint { name: name.into(), rule: ConstraintRule::Budget { costs, cap } }
    }

    pub fn custom(name: impl Into<String>, predicate: CustomPredicate) -> Self {
        Constraint { name: name.into(), rule: ConstraintRule::Custom(predicate) }
    }

    pub fn kind(&self) -> ConstraintKind {
        match &self.rule {
            ConstraintRule::PerClaim { .. } => ConstraintKind::PerClaim,
            ConstraintRule::PairwiseConflict { .. } => ConstraintKind::PairwiseConflict,
            ConstraintRule::Dependency { .. } => ConstraintKind::Dependency,
            ConstraintRule::Budget { .. } => ConstraintKind::Budget,
            ConstraintRule::Custom(_) => ConstraintKind::Custom,
        }
    }

    /// Does this constraint accept the given subset? `subset` must be sorted
    /// and duplicate-free; indices are positions into the instance's claim
    /// list.
    pub fn accepts(&self, subset: &[usize]) -> bool {
        match &self.rule {
            ConstraintRule::PerClaim { allowed } => {
                subset.iter().all(|&i| allowed.get(i).copied().unwrap_or(false))
            }
            ConstraintRule::PairwiseConflict { edges } => edges.iter().all(|&(a, b)| {
                !(subset.binary_search(&a).is_ok() && subset.binary_search(&b).is_ok())
            }),
            ConstraintRule::Dependency { edges, established } => edges.iter().all(|&(a, b)| {
                !subset.binary_search(&a).is_ok() || established.get(b).copied().unwrap_or(false)
            }),
            ConstraintRule::Budget { costs, cap } => {
                let total: Rational = subset
                    .iter()
                    .map(|&i| costs.get(i).cloned().unwrap_or_else(Rational::zero))
                    .sum();
                total <= *cap
            }
            ConstraintRule::Custom(f) => f(subset),
        }
    }

    /// Registration-time validation for an instance of `n` claims: shape
    /// (index ranges, vector lengths), empty-admittance, cost sign, and — for
    /// opaque predicates — sampled downward closure. Structural kinds are
    /// downward-closed by construction and skip the sampling.
    pub fn validate(&self, n: usize) -> Result<(), McrError> {
        let shape_err =
            |detail: String| McrError::ConstraintShape { name: self.name.clone(), detail };
        match &self.rule {
            ConstraintRule::PerClaim { allowed } => {
                if allowed.len() != n {
                    return Err(shape_err(format!(
                        "bitmap length {} vs {n} claims",
                        allowed.len()
                    )));
                }
            }
            ConstraintRule::PairwiseConflict { edges } => {
                for &(a, b) in edges {
                    if a >= n || b >= n {
                        return Err(shape_err(format!("edge ({a}, {b}) out of range 0..{n}")));
                    }
                }
            }
            ConstraintRule::Dependency { edges, established } => {
                if established.len() != n {
                    return Err(shape_err(format!(
                        "established bitmap length {} vs {n} claims",
                        established.len()
                    )));
                }
                for &(a, b) in edges {
                    if a >= n || b >= n {
                        return Err(shape_err(format!("edge ({a}, {b}) out of range 0..{n}")));
                    }
                }
            }
            ConstraintRule::Budget { costs, cap } => {
                if costs.len() != n {
                    return Err(shape_err(format!(
                        "cost list length {} vs {n} claims",
                        costs.len()
                    )));
                }
                for (i, c) in costs.iter().enumerate() {
                    if c.is_negative() {
                        return Err(shape_err(format!("cost {c} at claim {i} is negative")));
                    }
                }
                if cap.is_negative() {
                    return Err(McrError::EmptyRejecting { name: self.name.clone() });
                }
            }
            ConstraintRule::Custom(f) => {
                if !f(&[]) {
                    return Err(McrError::EmptyRejecting { name: self.name.clone() });
                }
                self.sample_monotonicity(n)?;
            }
        }
        if !self.accepts(&[]) {
            return Err(McrError::EmptyRejecting { name: self.name.clone() });
        }
        Ok(())
    }

    /// Deterministic spot-check of downward closure for opaque predicates:
    /// a fixed walk over nested subset pairs. Cheap and seedless so
    /// registration stays reproducible; the exhaustive check happens at
    /// verification time on enumerable instances.
    fn sample_monotonicity(&self, n: usize) -> Result<(), McrError> {
        if n == 0 {
            return Ok(());
        }
        // Fixed, documented splitmix64 walk — deterministic across runs,
        // well distributed in every bit position (an LCG's low bits cycle
        // with tiny periods, which would blind the sampler to low-index
        // claims), and good enough to catch blatantly non-monotone
        // predicates early.
        let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
        let mut draw = move || {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^ (z >> 31)
        };
        let rounds = 64.min(1usize << n.min(16));
        for _ in 0..rounds {
            let bits = draw();
            let superset_bits = if n >= 64 { bits } else { bits & ((1u64 << n) - 1) };
            let subset_bits = superset_bits & draw();
            let superset = bits_to_indices(superset_bits, n);
            let subset = bits_to_indices(subset_bits, n);
            if self.accepts(&superset) && !self.accepts(&subset) {
                return Err(McrError::NotMonotone { name: self.name.clone(), superset, subset });
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("Constraint");
        d.field("name", &self.name).field("kind", &self.kind().as_str());
        match &self.rule {
            ConstraintRule::PerClaim { allowed } => {
                d.field("allowed", allowed);
            }
            ConstraintRule::PairwiseConflict { edges } => {
                d.field("edges", edges);
            }
            ConstraintRule::Dependency { edges, established } => {
                d.field("edges", edges).field("established", established);
            }
            ConstraintRule::Budget { costs, cap } => {
                d.field("costs", costs).field("cap", cap);
            }
            ConstraintRule::Custom(_) => {
                d.field("predicate", &"<opaque>");
            }
        }
        d.finish()
    }
}

impl PartialEq for Constraint {
    fn eq(&self, other: &Self) -> bool {
        if self.name != other.name {
            return false;
        }
        match (&self.rule, &other.rule) {
            (ConstraintRule::PerClaim { allowed: a }, ConstraintRule::PerClaim { allowed: b }) => {
                a == b
            }
            (
                ConstraintRule::PairwiseConflict { edges: a },
                ConstraintRule::PairwiseConflict { edges: b },
            ) => a == b,
            (
                ConstraintRule::Dependency { edges: a, established: ea },
                ConstraintRule::Dependency { edges: b, established: eb },
            ) => a == b && ea == eb,
            (
                ConstraintRule::Budget { costs: a, cap: ca },
                ConstraintRule::Budget { costs: b, cap: cb },
            ) => a == b && ca == cb,
            (ConstraintRule::Custom(a), ConstraintRule::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl Eq for Constraint {}

fn bits_to_indices(bits: u64, n: usize) -> Vec<usize> {
    (0..n.min(64)).filter(|&i| bits >> i & 1 == 1).collect()
}

// ---------------------------------------------------------------------------
// Compiled constraints for the enumeration hot path
// ---------------------------------------------------------------------------

/// Mask-specialized form of a rule, valid for instances with ≤ 64 claims.
/// Budget costs are pre-scaled to a common integer denominator when they fit,
/// keeping big-integer arithmetic out of the 2ⁿ loop.
enum CompiledRule<'a> {
    AllowedMask(u64),
    ConflictPairs(&'a [(usize, usize)]),
    ForbiddenMask(u64),
    BudgetInt { costs: Vec<i128>, cap: i128 },
    BudgetRat { costs: &'a [Rational], cap: &'a Rational },
    Custom(&'a CustomPredicate),
}

fn compile<'a>(c: &'a Constraint, n: usize) -> CompiledRule<'a> {
    match &c.rule {
        ConstraintRule::PerClaim { allowed } => {
            let mut mask = 0u64;
            for (i, &a) in allowed.iter().enumerate().take(n) {
                if a {
                    mask |= 1 << i;
                }
            }
            CompiledRule::AllowedMask(mask)
        }
        ConstraintRule::PairwiseConflict { edges } => CompiledRule::ConflictPairs(edges),
        ConstraintRule::Dependency { edges, established } => {
            let mut forbidden = 0u64;
            for &(a, b) in edges {
                if !established.get(b).copied().unwrap_or(false) {
                    forbidden |= 1 << a;
                }
            }
            CompiledRule::ForbiddenMask(forbidden)
        }
        ConstraintRule::Budget { costs, cap } => {
            let mut denom = num_bigint::BigInt::from(1);
            for c in costs.iter().chain(std::iter::once(cap)) {
                let g = {
                    // lcm(denom, den) = denom * den / gcd
                    let a = denom.clone();
                    let b = c.denominator().clone();
                    let mut x = a.clone();
                    let mut y = b.clone();
                    while y != num_bigint::BigInt::from(0) {
                        let r = &x % &y;
                        x = y;
                        y = r;
                    }
                    (a * b) / x
                };
                denom = g;
            }
            let scale = |q: &Rational| -> Option<i128> {
                let scaled = q.numerator() * (&denom / q.denominator());
                scaled.to_i128()
            };
            let scaled: Option<Vec<i128>> = costs.iter().map(&scale).collect();
            match (scaled, scale(cap)) {
                (Some(costs), Some(cap)) if costs.iter().all(|&c| c.abs() < i128::MAX / 128) => {
                    CompiledRule::BudgetInt { costs, cap }
                }
                _ => CompiledRule::BudgetRat { costs, cap },
            }
        }
        ConstraintRule::Custom(f) => CompiledRule::Custom(f),
    }
}

fn accepts_mask(rule: &CompiledRule<'_>, mask: u64, n: usize) -> bool {
    match rule {
        CompiledRule::AllowedMask(allowed) => mask & !allowed == 0,
        CompiledRule::ConflictPairs(edges) => {
            edges.iter().all(|&(a, b)| mask >> a & 1 == 0 || mask >> b & 1 == 0)
        }
        CompiledRule::ForbiddenMask(forbidden) => mask & forbidden == 0,
        CompiledRule::BudgetInt { costs, cap } => {
            let mut total: i128 = 0;
            let mut bits = mask;
            while bits != 0 {
                let i = bits.trailing_zeros() as usize;
                total += costs[i];
                bits &= bits - 1;
            }
            total <= *cap
        }
        CompiledRule::BudgetRat { costs, cap } => {
            let total: Rational =
                (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| costs[i].clone()).sum();
            total <= **cap
        }
        CompiledRule::Custom(f) => f(&bits_to_indices(mask, n)),
    }
}

// ---------------------------------------------------------------------------
// Certificate and solver
// ---------------------------------------------------------------------------

/// How to find (or accept) the residue.
#[derive(Clone)]
pub enum ResidueMode {
    /// Exhaustive 2ⁿ enumeration with the canonical tie-break. Requires
    /// `n ≤ MAX_ENUM`.
    Exact,
    /// Linear scan valid only when every constraint is per-claim; matches
    /// exact output bit-for-bit, including the tie-break on zero-weight
    /// claims.
    Greedy,
    /// Caller-supplied candidate; certifiability is always checked,
    /// maximality only on enumerable instances.
    SolverWitness(Vec<usize>),
}

/// Residue certificate: the full claim list, the admission rules, and the
/// surviving subset with its exact weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueCertificate {
    pub claims: Vec<AtomicClaim>,
    pub constraints: Vec<Constraint>,
    /// Sorted, duplicate-free indices into `claims`.
    pub residue: Vec<usize>,
    pub residue_weight: Rational,
}

impl ResidueCertificate {
    pub fn total_weight(&self) -> Rational {
        self.claims.iter().map(|c| c.weight.clone()).sum()
    }

    /// Residue weight as a fraction of total claim weight.
    pub fn coverage(&self) -> Rational {
        let total = self.total_weight();
        if total.is_positive() {
            &self.residue_weight / &total
        } else {
            Rational::zero()
        }
    }

    pub fn dropped_indices(&self) -> Vec<usize> {
        (0..self.claims.len()).filter(|i| self.residue.binary_search(i).is_err()).collect()
    }

    pub fn dropped_texts(&self) -> Vec<String> {
        self.dropped_indices().iter().map(|&i| self.claims[i].text.clone()).collect()
    }

    pub fn residue_texts(&self) -> Vec<String> {
        self.residue.iter().map(|&i| self.claims[i].text.clone()).collect()
    }
}

fn subset_weight(claims: &[AtomicClaim], subset: &[usize]) -> Rational {
    subset.iter().map(|&i| claims[i].weight.clone()).sum()
}

fn validate_instance(claims: &[AtomicClaim], constraints: &[Constraint]) -> Result<(), McrError> {
    for (i, c) in claims.iter().enumerate() {
        if c.weight.is_negative() {
            return Err(McrError::NegativeWeight { claim: i, weight: c.weight.clone() });
        }
    }
    for c in constraints {
        c.validate(claims.len())?;
    }
    Ok(())
}

/// Exhaustive search over subsets of `universe` (a bitmask over claim
/// indices), returning the maximal acceptable mask under the canonical
/// tie-break. Weight is maintained incrementally along a Gray-code walk so
/// the 2ⁿ loop performs one rational update per subset.
fn exact_over_universe(
    claims: &[AtomicClaim],
    compiled: &[CompiledRule<'_>],
    universe: u64,
    n: usize,
) -> (u64, Rational) {
    let free: Vec<usize> = (0..n).filter(|&i| universe >> i & 1 == 1).collect();
    let k = free.len();
    let mut best_mask = 0u64;
    let mut best_weight = Rational::zero();
    let mut best_indices: Vec<usize> = Vec::new();
    let mut current = Rational::zero();
    let mut gray_prev = 0u64;
    // The empty set is always acceptable (registration guarantees it), so it
    // seeds the running best.
    for i in 1u64..(1u64 << k) {
        let gray = i ^ (i >> 1);
        let changed = gray ^ gray_prev;
        let local = changed.trailing_zeros() as usize;
        let claim_idx = free[local];
        if gray & changed != 0 {
            current = &current + &claims[claim_idx].weight;
        } else {
            current = &current - &claims[claim_idx].weight;
        }
        gray_prev = gray;

        // Re-expand the compact Gray mask onto the full index space.
        let mut mask = 0u64;
        let mut bits = gray;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            mask |= 1 << free[j];
            bits &= bits - 1;
        }

        if !compiled.iter().all(|r| accepts_mask(r, mask, n)) {
            continue;
        }
        if current > best_weight {
            best_weight = current.clone();
            best_mask = mask;
            best_indices = bits_to_indices(mask, n);
        } else if current == best_weight {
            let indices = bits_to_indices(mask, n);
            if indices < best_indices {
                best_mask = mask;
                best_indices = indices;
            }
        }
    }
    (best_mask, best_weight)
}

/// Computes the residue in the requested mode.
pub fn compute_residue(
    claims: &[AtomicClaim],
    constraints: &[Constraint],
    mode: ResidueMode,
) -> Result<ResidueCertificate, McrError> {
    validate_instance(claims, constraints)?;
    let n = claims.len();

    let residue: Vec<usize> = match mode {
        ResidueMode::Exact => {
            if n > MAX_ENUM {
                return Err(McrError::TooManyClaims { n, max: MAX_ENUM });
            }
            let compiled: Vec<CompiledRule<'_>> =
                constraints.iter().map(|c| compile(c, n)).collect();
            let universe = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
            let (mask, _) = exact_over_universe(claims, &compiled, universe, n);
            bits_to_indices(mask, n)
        }
        ResidueMode::Greedy => {
            for c in constraints {
                if c.kind() != ConstraintKind::PerClaim {
                    return Err(McrError::ModeError {
                        name: c.name.clone(),
                        kind: c.kind().as_str(),
                    });
                }
            }
            let kept: Vec<usize> =
                (0..n).filter(|&i| constraints.iter().all(|c| c.accepts(&[i]))).collect();
            // Canonical tie-break normalization: zero-weight claims stay only
            // when a heavier claim follows them, mirroring the lexicographic
            // rule exact mode applies among equal-weight optima.
            match kept.iter().rev().find(|&&i| claims[i].weight.is_positive()) {
                None => Vec::new(),
                Some(&last_positive) => kept
                    .into_iter()
                    .filter(|&i| claims[i].weight.is_positive() || i < last_positive)
                    .collect(),
            }
        }
        ResidueMode::SolverWitness(candidate) => {
            let mut sorted = candidate.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != candidate.len() || sorted != candidate {
                return Err(McrError::WitnessInvalid {
                    detail: "witness indices must be sorted and duplicate-free".into(),
                });
            }
            if let Some(&bad) = candidate.iter().find(|&&i| i >= n) {
                return Err(McrError::WitnessInvalid {
                    detail: format!("index {bad} out of range 0..{n}"),
                });
            }
            if let Some(c) = constraints.iter().find(|c| !c.accepts(&candidate)) {
                return Err(McrError::WitnessInvalid {
                    detail: format!("constraint {} rejects the witness", c.name),
                });
            }
            if n <= MAX_ENUM {
                let compiled: Vec<CompiledRule<'_>> =
                    constraints.iter().map(|c| compile(c, n)).collect();
                let universe = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
                let (best_mask, best_weight) = exact_over_universe(claims, &compiled, universe, n);
                let witness_weight = subset_weight(claims, &candidate);
                if best_weight > witness_weight {
                    return Err(McrError::WitnessNotMaximal {
                        witness_weight: Box::new(witness_weight),
                        better: bits_to_indices(best_mask, n),
                        better_weight: Box::new(best_weight),
                    });
                }
            }
            candidate
        }
    };

    let residue_weight = subset_weight(claims, &residue);
    Ok(ResidueCertificate {
        claims: claims.to_vec(),
        constraints: constraints.to_vec(),
        residue,
        residue_weight,
    })
}

/// Re-checks a residue certificate obligation by obligation. On instances
/// within [`MAX_ENUM`], downward closure and maximality are established by
/// full enumeration; beyond it they are reported as unverified at scale
/// rather than assumed.
pub fn verify_residue(cert: &ResidueCertificate) -> VerificationReport {
    let mut rep = VerificationReport::new();
    let n = cert.claims.len();

    let weights_ok = cert.claims.iter().all(|c| c.weight.is_nonneg());
    rep.check("claims_weights_nonneg", weights_ok, || "a claim carries negative weight".into());

    let mut shape_bad = None;
    for c in &cert.constraints {
        if let Err(e) = match &c.rule {
            // Re-run only the shape part of validation here; closure and
            // empty-admittance get their own obligations below.
            ConstraintRule::Custom(_) => Ok(()),
            _ => c.validate(n),
        } {
            shape_bad = Some(e.to_string());
            break;
        }
    }
    let shape_ok = shape_bad.is_none();
    rep.check("constraint_shapes", shape_ok, || shape_bad.clone().unwrap());

    let subset_ok =
        cert.residue.windows(2).all(|w| w[0] < w[1]) && cert.residue.iter().all(|&i| i < n);
    rep.check("residue_subset", subset_ok, || {
        format!("residue {:?} is not a sorted subset of 0..{n}", cert.residue)
    });

    if subset_ok {
        let w = subset_weight(&cert.claims, &cert.residue);
        rep.check("residue_weight", w == cert.residue_weight, || {
            format!("stored weight {}, recomputed {w}", cert.residue_weight)
        });
    } else {
        rep.unchecked("residue_weight", "blocked by subset failure");
    }

    let rejecting = cert.constraints.iter().find(|c| !c.accepts(&cert.residue));
    rep.check("constraints_accept", rejecting.is_none(), || {
        format!("constraint {} rejects the residue", rejecting.unwrap().name)
    });

    let empty_rejecting = cert.constraints.iter().find(|c| !c.accepts(&[]));
    rep.check("empty_admitting", empty_rejecting.is_none(), || {
        format!("constraint {} rejects the empty set", empty_rejecting.unwrap().name)
    });

    if !shape_ok {
        rep.unchecked("monotone", "blocked by shape failure");
        rep.unchecked("maximality", "blocked by shape failure");
        return rep;
    }

    if n <= MAX_ENUM {
        let compiled: Vec<CompiledRule<'_>> =
            cert.constraints.iter().map(|c| compile(c, n)).collect();
        let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };

        // Downward closure is equivalent to closure under removing a single
        // element, so 2ⁿ·n checks suffice instead of inspecting all subset
        // pairs.
        let mut closure_bad = None;
        'outer: for (ci, rule) in compiled.iter().enumerate() {
            for mask in 0..=full {
                if !accepts_mask(rule, mask, n) {
                    continue;
                }
                let mut bits = mask;
                while bits != 0 {
                    let i = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    if !accepts_mask(rule, mask & !(1 << i), n) {
                        closure_bad = Some((cert.constraints[ci].name.clone(), mask, i));
                        break 'outer;
                    }
                }
            }
        }
        rep.check("monotone", closure_bad.is_none(), || {
            let (name, mask, i) = closure_bad.clone().unwrap();
            format!(
                "constraint {name} accepts {:?} but rejects it without claim {i}",
                bits_to_indices(mask, n)
            )
        });

        let (best_mask, best_weight) = exact_over_universe(&cert.claims, &compiled, full, n);
        rep.check("maximality", best_weight == cert.residue_weight, || {
            format!(
                "optimum over certifiable subsets is {best_weight} (e.g. {:?}), but the \
                 certificate claims {}",
                bits_to_indices(best_mask, n),
                cert.residue_weight
            )
        });
    } else {
        rep.unchecked("monotone", format!("unverified at scale: {n} claims exceed {MAX_ENUM}"));
        rep.unchecked("maximality", format!("unverified at scale: {n} claims exceed {MAX_ENUM}"));
    }

    rep
}

/// Instance-level property report used by tests and the audit runner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueProperties {
    /// Re-solving restricted to the residue returns the residue unchanged.
    pub idempotent: bool,
    /// Dropping any single constraint never yields a lighter residue.
    pub monotone_in_constraints: bool,
}

/// Validates the algebraic properties of the solver on one enumerable
/// instance.
pub fn residue_properties_check(
    claims: &[AtomicClaim],
    constraints: &[Constraint],
) -> Result<ResidueProperties, McrError> {
    validate_instance(claims, constraints)?;
    let n = claims.len();
    if n > MAX_ENUM {
        return Err(McrError::TooManyClaims { n, max: MAX_ENUM });
    }
    let compiled: Vec<CompiledRule<'_>> = constraints.iter().map(|c| compile(c, n)).collect();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let (best_mask, best_weight) = exact_over_universe(claims, &compiled, full, n);

    let (again_mask, again_weight) = exact_over_universe(claims, &compiled, best_mask, n);
    let idempotent = again_mask == best_mask && again_weight == best_weight;

    let mut monotone_in_constraints = true;
    for skip in 0..constraints.len() {
        let reduced: Vec<CompiledRule<'_>> = constraints
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, c)| compile(c, n))
            .collect();
        let (_, reduced_weight) = exact_over_universe(claims, &reduced, full, n);
        if reduced_weight < best_weight {
            monotone_in_constraints = false;
        }
    }
    Ok(ResidueProperties { idempotent, monotone_in_constraints })
}
