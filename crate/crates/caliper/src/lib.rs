//! Exact, machine-checkable assurance certificates for language-model
//! pipelines.
//!
//! A pipeline that produces an answer also produces *evidence*: which claims
//! the retrieved corpus supports, which it refutes, how far a query embedding
//! can drift before retrieval changes, which gated actions ran and which were
//! refused. This crate turns that evidence into certificates over exact
//! rational arithmetic — no floats anywhere — so that every verdict can be
//! re-derived bit-for-bit by an independent verifier:
//!
//! - [`numeric`]: arbitrary-precision rationals and vectors, the number base
//!   everything else computes in.
//! - [`report`]: named proof obligations with pass/fail details, the shared
//!   result shape of every verifier.
//! - [`grounding`]: per-claim signed support scores against retrieved chunks,
//!   epistemic statuses, weighted coverage, and the emission gate.
//! - [`embedding`]: sensitivity certificates separating meaning-preserving
//!   rewrites from meaning-changing ones by embedding distance.
//! - [`mcr`]: the maximal certifiable residue — the heaviest subset of claims
//!   admitted by all declared constraints, with optimality obligations.
//! - [`composition`]: per-layer gain/margin witnesses folded into an
//!   end-to-end input-stability budget.
//! - [`action`]: guarded execution of tool steps with block records, plus a
//!   sandboxed filesystem domain and an evaluation harness.
//! - [`card`]: the assurance card consolidating every certificate into one
//!   verdict, and policies that map cards to accept/downgrade/reject.
//! - [`audit`]: canonical serialization, SHA-256 digests, assumption audits,
//!   bundle wire format, Merkle selective disclosure, and the audit runner.
//! - [`oracles`]: deterministic mock semantic oracles for tests and demos.
//! - [`fixtures`]: embedded reference bundles with annotated expected values.

pub mod action;
pub mod audit;
pub mod card;
pub mod composition;
pub mod embedding;
pub mod fixtures;
pub mod grounding;
pub mod mcr;
pub mod numeric;
pub mod oracles;
pub mod report;
