//! The "mfd/1" on-disk format.
//!
//! Every artifact is a UTF-8 JSON document with a fixed envelope:
//!
//! ```json
//! {
//!   "crc32": 1234567890,
//!   "format": "mfd/1",
//!   "kind": "field",
//!   "payload": { ... }
//! }
//! ```
//!
//! The payload is the serde representation of one of the five shared types
//! (domain, field, frames, dictionary, report). Complex numbers are stored
//! as `[re, im]` pairs and matrices row-major; floats use the shortest
//! round-tripping decimal form, so save→load→save is byte-identical. The
//! checksum is CRC-32 over the canonical (sorted-key, compact) encoding of
//! the payload, which both writer and reader derive from the parsed value —
//! whitespace and key order in the file itself don't affect it.
//!
//! Error taxonomy: a file that isn't an mfd/1 document at all is a
//! [`Error::FormatError`]; a well-formed envelope whose checksum disagrees
//! is an [`Error::IntegrityError`]; an intact document whose payload doesn't
//! match the requested type (wrong kind tag, missing fields, inconsistent
//! shapes) is an [`Error::SchemaError`]. Semantic validation (commutation,
//! unitarity, mesh coherence) runs on load and reports through each type's
//! own error variants.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::Error;
use crate::field::dict::FunctionDictionary;
use crate::field::domain::SimplicialDomain;
use crate::field::frames::DiagonalFrameField;
use crate::field::generator::GeneratorField;
use crate::field::residual::ResidualReport;
use crate::Result;

pub const FORMAT_TAG: &str = "mfd/1";

/// Serde helpers: `Vec<C64>` as `[[re, im], …]`.
pub mod c64vec {
    use crate::dense::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        Ok(Vec::<[f64; 2]>::deserialize(d)?
            .into_iter()
            .map(|[re, im]| C64::new(re, im))
            .collect())
    }
}

/// Serde helpers: nested complex vectors.
pub mod c64vecvec {
    use crate::dense::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<C64>], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|row| row.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<C64>>, D::Error> {
        Ok(Vec::<Vec<[f64; 2]>>::deserialize(d)?
            .into_iter()
            .map(|row| row.into_iter().map(|[re, im]| C64::new(re, im)).collect())
            .collect())
    }
}

/// Serde helpers: doubly nested complex vectors (per-vertex label sets).
pub mod c64vecvecvec {
    use crate::dense::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[allow(clippy::type_complexity)]
    pub fn serialize<S: Serializer>(v: &[Vec<Vec<C64>>], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|outer| {
                outer
                    .iter()
                    .map(|row| row.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
            .serialize(s)
    }

    #[allow(clippy::type_complexity)]
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Vec<C64>>>, D::Error> {
        Ok(Vec::<Vec<Vec<[f64; 2]>>>::deserialize(d)?
            .into_iter()
            .map(|outer| {
                outer
                    .into_iter()
                    .map(|row| row.into_iter().map(|[re, im]| C64::new(re, im)).collect())
                    .collect()
            })
            .collect())
    }
}

/// A type that can live in an mfd/1 file.
pub trait Payload: Serialize + DeserializeOwned {
    /// Envelope kind tag.
    const KIND: &'static str;

    /// Semantic validation after deserialization. Shape errors should map
    /// to [`Error::SchemaError`]; deeper checks use their native variants.
    fn validate_loaded(&self) -> Result<()> {
        Ok(())
    }
}

impl Payload for SimplicialDomain {
    const KIND: &'static str = "domain";
    fn validate_loaded(&self) -> Result<()> {
        self.validate()
    }
}

impl Payload for GeneratorField {
    const KIND: &'static str = "field";
    fn validate_loaded(&self) -> Result<()> {
        self.validate()
    }
}

impl Payload for DiagonalFrameField {
    const KIND: &'static str = "frames";
    // Full validation needs the domain; shape checks happen when the frames
    // are put next to a field.
}

impl Payload for FunctionDictionary {
    const KIND: &'static str = "dict";
    fn validate_loaded(&self) -> Result<()> {
        if self.degree < 1 || self.generators == 0 {
            return Err(Error::SchemaError("degenerate dictionary".into()));
        }
        let rebuilt = FunctionDictionary::new(self.degree, self.generators)?;
        if rebuilt.members != self.members {
            return Err(Error::SchemaError(
                "dictionary members do not match its declared degree".into(),
            ));
        }
        Ok(())
    }
}

impl Payload for ResidualReport {
    const KIND: &'static str = "report";
}

/// Canonical bytes of a JSON value: compact encoding with
/// lexicographically sorted object keys (serde_json's default map order).
fn canonical_bytes(value: &Value) -> Result<Vec<u8>> {
    serde_json::to_vec(value).map_err(|e| Error::FormatError(format!("encode: {e}")))
}

fn checksum(value: &Value) -> Result<u32> {
    Ok(crc32fast::hash(&canonical_bytes(value)?))
}

/// Render a payload into a complete mfd/1 document.
pub fn to_document<T: Payload>(object: &T) -> Result<String> {
    let payload =
        serde_json::to_value(object).map_err(|e| Error::FormatError(format!("encode: {e}")))?;
    let crc = checksum(&payload)?;
    let envelope = serde_json::json!({
        "crc32": crc,
        "format": FORMAT_TAG,
        "kind": T::KIND,
        "payload": payload,
    });
    let mut text = serde_json::to_string_pretty(&envelope)
        .map_err(|e| Error::FormatError(format!("encode: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Parse and verify a complete mfd/1 document.
pub fn from_document<T: Payload>(text: &str) -> Result<T> {
    let envelope: Value = serde_json::from_str(text)
        .map_err(|e| Error::FormatError(format!("not an mfd document: {e}")))?;
    let obj = envelope
        .as_object()
        .ok_or_else(|| Error::FormatError("top level is not an object".into()))?;
    match obj.get("format").and_then(Value::as_str) {
        Some(FORMAT_TAG) => {}
        Some(other) => {
            return Err(Error::FormatError(format!(
                "version tag '{other}', expected '{FORMAT_TAG}'"
            )))
        }
        None => return Err(Error::FormatError("missing format tag".into())),
    }
    let kind = obj
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::FormatError("missing kind tag".into()))?;
    if kind != T::KIND {
        return Err(Error::SchemaError(format!(
            "document holds a '{kind}', expected a '{}'",
            T::KIND
        )));
    }
    let declared = obj
        .get("crc32")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::FormatError("missing crc32".into()))?;
    let payload = obj
        .get("payload")
        .ok_or_else(|| Error::FormatError("missing payload".into()))?;
    let actual = checksum(payload)?;
    if declared != actual as u64 {
        return Err(Error::IntegrityError(format!(
            "crc32 mismatch: file says {declared}, payload hashes to {actual}"
        )));
    }
    let object: T = serde_json::from_value(payload.clone())
        .map_err(|e| Error::SchemaError(format!("payload does not fit '{kind}': {e}")))?;
    object.validate_loaded()?;
    Ok(object)
}

/// Write an object as an mfd/1 file.
pub fn save<T: Payload>(path: impl AsRef<Path>, object: &T) -> Result<()> {
    std::fs::write(path, to_document(object)?)?;
    Ok(())
}

/// Read an mfd/1 file, verifying envelope, checksum, schema, and semantic
/// validity.
pub fn load<T: Payload>(path: impl AsRef<Path>) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    from_document(&text)
}
