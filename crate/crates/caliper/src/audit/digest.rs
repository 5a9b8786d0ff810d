//! Content digests for certificates and bundles.
//!
//! Everything is SHA-256 over canonical bytes. The digest of a structured
//! value is the digest of its compact canonical JSON serialization, so two
//! semantically equal payloads hash identically regardless of how they were
//! produced.

use serde_json::Value;
use sha2::{Digest, Sha256};

use super::canon::canonical_bytes;

pub fn sha256(data: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(data);
    h.finalize().into()
}

pub fn sha256_hex(data: &[u8]) -> String {
    super::canon::hex_encode(&sha256(data))
}

/// Digest of a canonical JSON value's compact bytes.
pub fn digest_value(value: &Value) -> [u8; 32] {
    sha256(&canonical_bytes(value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::canon::MapBuilder;

    #[test]
    fn known_answer_vectors() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn value_digest_is_order_insensitive() {
        let a = MapBuilder::new().nat("x", 1).str("y", "z").build();
        let b = MapBuilder::new().str("y", "z").nat("x", 1).build();
        assert_eq!(digest_value(&a), digest_value(&b));
    }

    #[test]
    fn value_digest_separates_distinct_payloads() {
        let a = MapBuilder::new().nat("x", 1).build();
        let b = MapBuilder::new().nat("x", 2).build();
        assert_ne!(digest_value(&a), digest_value(&b));
    }
}
