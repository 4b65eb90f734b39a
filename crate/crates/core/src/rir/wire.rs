//! Byte layout of `.rir` streams, little-endian throughout.
//!
//! ```text
//! header   "RIR1" | version u16 | kernel u16 | capacity u32 | reserved u32
//!          | rows u32 | cols u32 | record count u32
//! bundle   distinct elements | shared u32 | metadata u32
//! element  data:     index u32 | value f32
//!          schedule: row u32 | start u32 | end u32
//! metadata bits 0-15 element count, bit 16 end-of-feature, bits 17-18 kind
//! ```
//!
//! Bundles are written elements-first and read back-to-front: a reader
//! takes the metadata word, then the shared feature, then the elements.

use crate::error::{Error, Result};

use super::{
    BundleKind, CholMetaTriple, KernelTag, MetaBundle, RirBundle, RirRecord, RirStream,
    StreamHeader, MAX_BUNDLE_CAPACITY,
};

pub const MAGIC: [u8; 4] = *b"RIR1";
pub const VERSION: u16 = 1;
pub const HEADER_BYTES: usize = 28;

const COUNT_MASK: u32 = 0xFFFF;
const LAST_BIT: u32 = 1 << 16;
const KIND_SHIFT: u32 = 17;
const KIND_MASK: u32 = 0b11;

fn meta_word(count: usize, last: bool, kind: BundleKind) -> u32 {
    debug_assert!(count <= MAX_BUNDLE_CAPACITY);
    (count as u32 & COUNT_MASK) | if last { LAST_BIT } else { 0 } | ((kind as u32) << KIND_SHIFT)
}

pub fn serialize(s: &RirStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(s.wire_bytes());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(s.header.kernel as u16).to_le_bytes());
    out.extend_from_slice(&s.header.capacity.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&s.header.rows.to_le_bytes());
    out.extend_from_slice(&s.header.cols.to_le_bytes());
    out.extend_from_slice(&(s.records.len() as u32).to_le_bytes());

    for rec in &s.records {
        match rec {
            RirRecord::Data(b) => {
                for &(i, v) in &b.elements {
                    out.extend_from_slice(&i.to_le_bytes());
                    out.extend_from_slice(&v.to_bits().to_le_bytes());
                }
                out.extend_from_slice(&b.shared.to_le_bytes());
                out.extend_from_slice(
                    &meta_word(b.elements.len(), b.last_of_feature, BundleKind::Data).to_le_bytes(),
                );
            }
            RirRecord::Schedule(m) => {
                for t in &m.triples {
                    out.extend_from_slice(&t.row.to_le_bytes());
                    out.extend_from_slice(&t.start.to_le_bytes());
                    out.extend_from_slice(&t.end.to_le_bytes());
                }
                out.extend_from_slice(&m.shared.to_le_bytes());
                out.extend_from_slice(
                    &meta_word(m.triples.len(), m.last_of_feature, BundleKind::Schedule)
                        .to_le_bytes(),
                );
            }
        }
    }
    out
}

fn u16_at(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

fn bad(msg: impl Into<String>) -> Error {
    Error::MalformedStream(msg.into())
}

pub fn deserialize(bytes: &[u8]) -> Result<RirStream> {
    if bytes.len() < HEADER_BYTES {
        return Err(bad(format!("truncated header: {} of {HEADER_BYTES} bytes", bytes.len())));
    }
    if bytes[..4] != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u16_at(bytes, 4);
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let kernel = KernelTag::from_u16(u16_at(bytes, 6))
        .ok_or_else(|| bad(format!("unknown kernel tag {}", u16_at(bytes, 6))))?;
    let capacity = u32_at(bytes, 8);
    if capacity == 0 || capacity as usize > MAX_BUNDLE_CAPACITY {
        return Err(bad(format!("invalid capacity {capacity}")));
    }
    if u32_at(bytes, 12) != 0 {
        return Err(bad("reserved header word is not zero"));
    }
    let header = StreamHeader { kernel, capacity, rows: u32_at(bytes, 16), cols: u32_at(bytes, 20) };
    let expected = u32_at(bytes, 24) as usize;

    let mut records = Vec::with_capacity(expected);
    let mut end = bytes.len();
    while end > HEADER_BYTES {
        if end - HEADER_BYTES < 8 {
            return Err(bad("truncated bundle trailer"));
        }
        let meta = u32_at(bytes, end - 4);
        let shared = u32_at(bytes, end - 8);
        if meta >> (KIND_SHIFT + 2) != 0 {
            return Err(bad(format!("reserved metadata bits set in {meta:#010x}")));
        }
        let count = (meta & COUNT_MASK) as usize;
        let last = meta & LAST_BIT != 0;
        let kind = match (meta >> KIND_SHIFT) & KIND_MASK {
            0 => BundleKind::Data,
            1 => BundleKind::Schedule,
            k => return Err(bad(format!("unknown bundle kind {k}"))),
        };
        if count == 0 || count > capacity as usize {
            return Err(bad(format!("bundle element count {count} outside 1..={capacity}")));
        }
        let width = match kind {
            BundleKind::Data => 8,
            BundleKind::Schedule => 12,
        };
        let body = count * width;
        if end - 8 - HEADER_BYTES < body {
            return Err(bad("truncated bundle body"));
        }
        let start = end - 8 - body;
        let rec = match kind {
            BundleKind::Data => RirRecord::Data(RirBundle {
                shared,
                elements: (0..count)
                    .map(|e| {
                        let at = start + e * 8;
                        (u32_at(bytes, at), f32::from_bits(u32_at(bytes, at + 4)))
                    })
                    .collect(),
                last_of_feature: last,
            }),
            BundleKind::Schedule => RirRecord::Schedule(MetaBundle {
                shared,
                triples: (0..count)
                    .map(|e| {
                        let at = start + e * 12;
                        CholMetaTriple {
                            row: u32_at(bytes, at),
                            start: u32_at(bytes, at + 4),
                            end: u32_at(bytes, at + 8),
                        }
                    })
                    .collect(),
                last_of_feature: last,
            }),
        };
        records.push(rec);
        end = start;
    }
    if records.len() != expected {
        return Err(bad(format!("header announces {expected} bundles, found {}", records.len())));
    }
    records.reverse();
    Ok(RirStream { header, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{random_sparse, CsrMatrix};
    use crate::rir::compress_csr;

    fn single_bundle_stream() -> RirStream {
        let mut s = RirStream::new(KernelTag::CsrRows, 32, 3, 6).unwrap();
        s.records.push(RirRecord::Data(RirBundle {
            shared: 2,
            elements: vec![(5, 1.0)],
            last_of_feature: true,
        }));
        s
    }

    #[test]
    fn single_bundle_layout() {
        let bytes = serialize(&single_bundle_stream());
        assert_eq!(bytes.len(), HEADER_BYTES + 16);
        let b = &bytes[HEADER_BYTES..];
        assert_eq!(&b[0..4], &5u32.to_le_bytes());
        assert_eq!(&b[4..8], &1.0f32.to_bits().to_le_bytes());
        assert_eq!(&b[8..12], &2u32.to_le_bytes());
        assert_eq!(u32_at(b, 12), 0x0001_0001);
        assert!(deserialize(&bytes).unwrap().bitwise_eq(&single_bundle_stream()));
    }

    #[test]
    fn empty_stream_is_header_only() {
        let s = RirStream::new(KernelTag::CscCols, 8, 4, 4).unwrap();
        let bytes = serialize(&s);
        assert_eq!(bytes.len(), HEADER_BYTES);
        assert_eq!(&bytes[..4], b"RIR1");
        assert_eq!(deserialize(&bytes).unwrap(), s);
    }

    #[test]
    fn schedule_meta_word() {
        assert_eq!(meta_word(3, false, BundleKind::Schedule), 0x0002_0003);
        assert_eq!(meta_word(32, true, BundleKind::Schedule), 0x0003_0020);
    }

    #[test]
    fn round_trip_random() {
        let m = random_sparse(30, 30, 0.3, 11).unwrap();
        let s = compress_csr(&m, 4).unwrap();
        let bytes = serialize(&s);
        assert_eq!(bytes.len(), s.wire_bytes());
        let back = deserialize(&bytes).unwrap();
        assert!(back.bitwise_eq(&s));
        assert_eq!(serialize(&back), bytes);
    }

    #[test]
    fn truncation_detected() {
        let s = compress_csr(&CsrMatrix::identity(4), 32).unwrap();
        let bytes = serialize(&s);
        for cut in [1, 4, 16, 17] {
            assert!(deserialize(&bytes[..bytes.len() - cut]).is_err(), "cut {cut}");
        }
        assert!(deserialize(&bytes[..10]).is_err());
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = serialize(&single_bundle_stream());
        bytes[0] = b'X';
        assert!(deserialize(&bytes).is_err());
        let mut bytes = serialize(&single_bundle_stream());
        bytes[4] = 9;
        assert!(deserialize(&bytes).is_err());
    }

    #[test]
    fn over_capacity_count_rejected() {
        let mut bytes = serialize(&single_bundle_stream());
        // capacity 32 -> 0 is invalid, 1 still fits the single element
        bytes[8..12].copy_from_slice(&1u32.to_le_bytes());
        assert!(deserialize(&bytes).is_ok());
        let s = compress_csr(&CsrMatrix::identity(1).transpose(), 32).unwrap();
        let mut bytes = serialize(&s);
        let n = bytes.len();
        bytes[n - 4..].copy_from_slice(&meta_word(33, true, BundleKind::Data).to_le_bytes());
        assert!(deserialize(&bytes).is_err());
    }
}
