//! Audit surface: trusted-base bookkeeping, canonical serialization,
//! digests, the bundle wire format, field-level selective disclosure, and
//! the end-to-end audit runner.
//!
//! The submodules layer strictly:
//!
//! - [`assumptions`] — assumption tags, tiers, and the trusted-base audit;
//! - [`canon`] — canonical JSON encoding rules shared by everything below;
//! - [`digest`] — SHA-256 over canonical bytes;
//! - [`bundle`] — the wire format for cards plus their certificates;
//! - [`merkle`] — per-field commitments and selective disclosure of cards;
//! - [`runner`] — the five-step audit pipeline with stable exit codes.

pub mod assumptions;
pub mod bundle;
pub mod canon;
pub mod digest;
pub mod inputs;
pub mod merkle;
pub mod runner;
