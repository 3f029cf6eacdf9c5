// SPDX-License-Identifier: Apache-2.0

//! Hex/serde adapters, canonical JSON and digests shared by every
//! serialized artifact.

use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::group::CanonicalBytes;

pub fn sha256(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

/// JSON with lexicographically sorted object keys and no whitespace.
///
/// `serde_json::Value` keeps objects in a `BTreeMap` (the `preserve_order`
/// feature is off), so a round trip through `Value` sorts every level.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Decode(e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| Error::Decode(e.to_string()))
}

pub fn decode_hex<T: CanonicalBytes>(s: &str) -> Result<T> {
    let bytes = hex::decode(s).map_err(|e| Error::Decode(e.to_string()))?;
    T::from_bytes(&bytes)
}

/// `#[serde(with = "hex_elem")]` for a single element.
pub mod hex_elem {
    use super::*;

    pub fn serialize<T: CanonicalBytes, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v.to_bytes()))
    }

    pub fn deserialize<'de, T: CanonicalBytes, D: Deserializer<'de>>(d: D) -> Result<T, D::Error> {
        let s = String::deserialize(d)?;
        decode_hex(&s).map_err(D::Error::custom)
    }
}

/// `#[serde(with = "hex_vec")]` for a list of elements.
pub mod hex_vec {
    use super::*;

    pub fn serialize<T: CanonicalBytes, S: Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| hex::encode(x.to_bytes())))
    }

    pub fn deserialize<'de, T: CanonicalBytes, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Vec<T>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| decode_hex(s).map_err(D::Error::custom))
            .collect()
    }
}

/// `#[serde(with = "hex_pairs")]` for a list of element pairs.
pub mod hex_pairs {
    use super::*;

    pub fn serialize<T: CanonicalBytes, S: Serializer>(
        v: &[(T, T)],
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(
            v.iter()
                .map(|(a, b)| [hex::encode(a.to_bytes()), hex::encode(b.to_bytes())]),
        )
    }

    pub fn deserialize<'de, T: CanonicalBytes, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Vec<(T, T)>, D::Error> {
        Vec::<[String; 2]>::deserialize(d)?
            .iter()
            .map(|[a, b]| {
                Ok((
                    decode_hex(a).map_err(D::Error::custom)?,
                    decode_hex(b).map_err(D::Error::custom)?,
                ))
            })
            .collect()
    }
}

/// `#[serde(with = "hex_bytes")]` for raw byte strings.
pub mod hex_bytes {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(D::Error::custom)
    }
}

/// Big-endian cursor over a packed binary artifact.
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Reader { buf }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Decode("truncated input".into()));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn elem<T: CanonicalBytes>(&mut self) -> Result<T> {
        T::from_bytes(self.take(T::ENCODED_LEN)?)
    }

    pub(crate) fn finish(self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(Error::Decode(format!("{} trailing bytes", self.buf.len())))
        }
    }
}

/// Check the 16-byte magic and the version byte of a packed artifact.
pub(crate) fn expect_header(r: &mut Reader<'_>, magic: &[u8; 16], version: u8) -> Result<()> {
    if r.take(16)? != magic {
        return Err(Error::Decode("bad magic".into()));
    }
    let v = r.u8()?;
    if v != version {
        return Err(Error::Decode(format!("unsupported version {v}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn canonical_json_sorts_keys() {
        let v = json!({"b": 1, "a": {"d": 2, "c": 3}});
        assert_eq!(canonical_json(&v).unwrap(), r#"{"a":{"c":3,"d":2},"b":1}"#);
    }

    #[test]
    fn reader_rejects_truncation_and_trailing() {
        let mut r = Reader::new(&[1, 2, 3]);
        assert!(r.u32().is_err());
        let mut r = Reader::new(&[1, 2]);
        r.u8().unwrap();
        assert!(r.finish().is_err());
    }
}
