//! HSD1: per-layer hidden-state dumps.
//!
//! Little-endian layout: magic `HSD1`, `u16` version (1), `u16` layer index,
//! `u32` dim, `u32` count, then `count` records of `u16` id length, UTF-8 id
//! bytes, `u8` label index (canonical order) and `dim` × `f32` features.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Error;
use crate::geometry::PositionLabel;

pub const MAGIC: &[u8; 4] = b"HSD1";
pub const VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct HiddenRecord {
    pub sample_id: String,
    pub label: PositionLabel,
    pub features: Vec<f32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HiddenDump {
    pub layer_index: u16,
    pub dim: u32,
    pub records: Vec<HiddenRecord>,
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedDump(msg.into())
}

impl HiddenDump {
    /// Checks shared dimension and unique ids.
    pub fn validate(&self) -> Result<(), Error> {
        let mut ids = BTreeSet::new();
        for r in &self.records {
            if r.features.len() != self.dim as usize {
                return Err(Error::DimensionMismatch {
                    expected: self.dim as usize,
                    got: r.features.len(),
                });
            }
            if !ids.insert(r.sample_id.as_str()) {
                return Err(Error::DuplicateSample(r.sample_id.clone()));
            }
        }
        Ok(())
    }

    pub fn encode(&self) -> Result<Vec<u8>, Error> {
        self.validate()?;
        let count = u32::try_from(self.records.len()).map_err(|_| malformed("too many records"))?;
        let mut out = Vec::with_capacity(16 + self.records.len() * (8 + 4 * self.dim as usize));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.layer_index.to_le_bytes());
        out.extend_from_slice(&self.dim.to_le_bytes());
        out.extend_from_slice(&count.to_le_bytes());
        for r in &self.records {
            let id_len = u16::try_from(r.sample_id.len())
                .map_err(|_| malformed(format!("sample id of {} bytes", r.sample_id.len())))?;
            out.extend_from_slice(&id_len.to_le_bytes());
            out.extend_from_slice(r.sample_id.as_bytes());
            out.push(r.label.index() as u8);
            for v in &r.features {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<HiddenDump, Error> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(malformed("bad magic"));
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(malformed(format!("unsupported version {version}")));
        }
        let layer_index = r.u16()?;
        let dim = r.u32()?;
        let count = r.u32()? as usize;
        let mut records = Vec::with_capacity(count.min(bytes.len() / 3));
        for _ in 0..count {
            let id_len = r.u16()? as usize;
            let sample_id = core::str::from_utf8(r.take(id_len)?)
                .map_err(|_| malformed(format!("non-UTF-8 id at byte {}", r.pos)))?;
            let label_byte = r.take(1)?[0];
            let label = PositionLabel::from_index(usize::from(label_byte))
                .ok_or_else(|| malformed(format!("label index {label_byte}")))?;
            let raw = r.take(dim as usize * 4)?;
            let features = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            records.push(HiddenRecord {
                sample_id: String::from(sample_id),
                label,
                features,
            });
        }
        if r.pos != bytes.len() {
            return Err(malformed(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let dump = HiddenDump {
            layer_index,
            dim,
            records,
        };
        dump.validate()?;
        Ok(dump)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], Error> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.bytes.len())
            .ok_or_else(|| malformed(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, Error> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, Error> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}
