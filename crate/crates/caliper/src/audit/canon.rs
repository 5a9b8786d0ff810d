//! Canonical JSON encoding for the wire format.
//!
//! Everything that gets digested or transmitted is first mapped to a
//! canonical `serde_json::Value` with these rules:
//!
//! - object keys are sorted (the default `serde_json::Map` is a BTreeMap,
//!   and nothing here enables insertion-order preservation);
//! - rationals are strings in lowest terms, `"num"` or `"num/den"`;
//! - byte strings are lowercase hex strings;
//! - integers are JSON numbers (u64 range only); floats never occur;
//! - serialization is compact (no whitespace).
//!
//! Encoding uses [`MapBuilder`]; decoding uses [`MapReader`], which tracks
//! which keys were consumed and rejects documents with unknown keys, so a
//! tampered or future-versioned payload fails loudly instead of being
//! silently half-read.

use std::collections::BTreeSet;
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::numeric::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CanonError {
    #[error("malformed payload: {0}")]
    Malformed(String),
}

fn malformed(detail: impl Into<String>) -> CanonError {
    CanonError::Malformed(detail.into())
}

// ---------------------------------------------------------------------------
// Scalar encodings
// ---------------------------------------------------------------------------

pub fn rational_value(q: &Rational) -> Value {
    Value::String(q.to_string())
}

pub fn rational_from_value(v: &Value, key: &str) -> Result<Rational, CanonError> {
    let s = v.as_str().ok_or_else(|| malformed(format!("{key}: expected rational string")))?;
    Rational::from_str(s).map_err(|_| malformed(format!("{key}: bad rational {s:?}")))
}

pub fn hex_encode(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

pub fn hex_decode(s: &str) -> Result<Vec<u8>, CanonError> {
    if !s.len().is_multiple_of(2) {
        return Err(malformed(format!("odd-length hex string {s:?}")));
    }
    let digit = |c: u8| -> Result<u8, CanonError> {
        match c {
            b'0'..=b'9' => Ok(c - b'0'),
            b'a'..=b'f' => Ok(c - b'a' + 10),
            _ => Err(malformed(format!("non-canonical hex string {s:?}"))),
        }
    };
    s.as_bytes().chunks(2).map(|pair| Ok(digit(pair[0])? << 4 | digit(pair[1])?)).collect()
}

/// Compact canonical bytes of a value. With sorted maps and no floats this
/// is deterministic byte-for-byte.
pub fn canonical_bytes(value: &Value) -> Vec<u8> {
    serde_json::to_vec(value).expect("canonical values always serialize")
}

// ---------------------------------------------------------------------------
// Object encoding
// ---------------------------------------------------------------------------

/// Builder for canonical JSON objects.
#[derive(Debug, Default)]
pub struct MapBuilder {
    map: Map<String, Value>,
}

impl MapBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(mut self, key: &str, v: Value) -> Self {
        self.map.insert(key.to_string(), v);
        self
    }

    pub fn str(self, key: &str, s: &str) -> Self {
        self.value(key, Value::String(s.to_string()))
    }

    pub fn rat(self, key: &str, q: &Rational) -> Self {
        self.value(key, rational_value(q))
    }

    pub fn nat(self, key: &str, n: u64) -> Self {
        self.value(key, Value::Number(n.into()))
    }

    pub fn boolean(self, key: &str, b: bool) -> Self {
        self.value(key, Value::Bool(b))
    }

    pub fn hex(self, key: &str, bytes: &[u8]) -> Self {
        self.value(key, Value::String(hex_encode(bytes)))
    }

    /// Optional byte string: explicit null when absent (the key is always
    /// present, so readers never confuse "absent" with "unknown key").
    pub fn opt_hex(self, key: &str, bytes: &Option<Vec<u8>>) -> Self {
        match bytes {
            Some(b) => self.hex(key, b),
            None => self.value(key, Value::Null),
        }
    }

    pub fn list(self, key: &str, items: Vec<Value>) -> Self {
        self.value(key, Value::Array(items))
    }

    pub fn str_list(self, key: &str, items: &[String]) -> Self {
        self.list(key, items.iter().map(|s| Value::String(s.clone())).collect())
    }

    pub fn hex_list(self, key: &str, items: &[Vec<u8>]) -> Self {
        self.list(key, items.iter().map(|b| Value::String(hex_encode(b))).collect())
    }

    pub fn rat_list(self, key: &str, items: &[Rational]) -> Self {
        self.list(key, items.iter().map(rational_value).collect())
    }

    pub fn build(self) -> Value {
        Value::Object(self.map)
    }
}

// ---------------------------------------------------------------------------
// Object decoding
// ---------------------------------------------------------------------------

/// Strict reader over a canonical JSON object. Every accessor marks its key
/// as consumed; [`MapReader::finish`] fails if any key was left unread, so
/// decoders reject payloads with unknown fields.
pub struct MapReader<'a> {
    ctx: &'a str,
    map: &'a Map<String, Value>,
    consumed: BTreeSet<&'a str>,
}

impl<'a> MapReader<'a> {
    pub fn over(value: &'a Value, ctx: &'a str) -> Result<Self, CanonError> {
        let map =
            value.as_object().ok_or_else(|| malformed(format!("{ctx}: expected an object")))?;
        Ok(MapReader { ctx, map, consumed: BTreeSet::new() })
    }

    fn take(&mut self, key: &str) -> Result<&'a Value, CanonError> {
        let (k, v) = self
            .map
            .get_key_value(key)
            .ok_or_else(|| malformed(format!("{}: missing key {key:?}", self.ctx)))?;
        self.consumed.insert(k.as_str());
        Ok(v)
    }

    /// Consumes a key that may be absent (returns `None` for absent or null).
    pub fn optional(&mut self, key: &str) -> Option<&'a Value> {
        match self.map.get_key_value(key) {
            Some((k, v)) => {
                self.consumed.insert(k.as_str());
                if v.is_null() {
                    None
                } else {
                    Some(v)
                }
            }
            None => None,
        }
    }

    pub fn str(&mut self, key: &str) -> Result<String, CanonError> {
        let ctx = self.ctx;
        self.take(key)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| malformed(format!("{ctx}: {key} must be a string")))
    }

    pub fn rat(&mut self, key: &str) -> Result<Rational, CanonError> {
        let v = self.take(key)?;
        rational_from_value(v, key)
    }

    pub fn nat(&mut self, key: &str) -> Result<u64, CanonError> {
        let ctx = self.ctx;
        self.take(key)?
            .as_u64()
            .ok_or_else(|| malformed(format!("{ctx}: {key} must be a non-negative integer")))
    }

    pub fn boolean(&mut self, key: &str) -> Result<bool, CanonError> {
        let ctx = self.ctx;
        self.take(key)?
            .as_bool()
            .ok_or_else(|| malformed(format!("{ctx}: {key} must be a boolean")))
    }

    pub fn bytes(&mut self, key: &str) -> Result<Vec<u8>, CanonError> {
        let s = self.str(key)?;
        hex_decode(&s)
    }

    pub fn digest32(&mut self, key: &str) -> Result<[u8; 32], CanonError> {
        let ctx = self.ctx;
        let b = self.bytes(key)?;
        b.try_into().map_err(|_| malformed(format!("{ctx}: {key} must be 32 bytes of hex")))
    }

    pub fn opt_bytes(&mut self, key: &str) -> Result<Option<Vec<u8>>, CanonError> {
        // The key must exist (null when absent) so unknown-key detection
        // stays symmetric with the encoder.
        let v = self.take(key)?;
        if v.is_null() {
            return Ok(None);
        }
        let s = v
            .as_str()
            .ok_or_else(|| malformed(format!("{}: {key} must be hex or null", self.ctx)))?;
        hex_decode(s).map(Some)
    }

    pub fn list(&mut self, key: &str) -> Result<&'a [Value], CanonError> {
        let ctx = self.ctx;
        self.take(key)?
            .as_array()
            .map(Vec::as_slice)
            .ok_or_else(|| malformed(format!("{ctx}: {key} must be an array")))
    }

    pub fn str_list(&mut self, key: &str) -> Result<Vec<String>, CanonError> {
        let ctx = self.ctx;
        self.list(key)?
            .iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| malformed(format!("{ctx}: {key} must hold strings")))
            })
            .collect()
    }

    pub fn hex_list(&mut self, key: &str) -> Result<Vec<Vec<u8>>, CanonError> {
        let ctx = self.ctx;
        self.list(key)?
            .iter()
            .map(|v| {
                let s = v
                    .as_str()
                    .ok_or_else(|| malformed(format!("{ctx}: {key} must hold hex strings")))?;
                hex_decode(s)
            })
            .collect()
    }

    pub fn rat_list(&mut self, key: &str) -> Result<Vec<Rational>, CanonError> {
        self.list(key)?.iter().map(|v| rational_from_value(v, key)).collect()
    }

    /// Fails if the object held keys no accessor consumed.
    pub fn finish(self) -> Result<(), CanonError> {
        let unknown: Vec<&str> =
            self.map.keys().map(String::as_str).filter(|k| !self.consumed.contains(k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(malformed(format!("{}: unknown keys {:?}", self.ctx, unknown)))
        }
    }
}
