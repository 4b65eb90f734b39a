//! The bundle intermediate representation streamed from host to
//! accelerator.
//!
//! A bundle groups the non-zeros that share a feature (a row for CSR
//! input, a column for CSC input) as `(distinct index, value)` pairs. Rows
//! longer than the bundle capacity are split over several bundles and only
//! the final one carries the end-of-feature flag. Schedule bundles carry no
//! values; for Cholesky they list where each row of `L` lives in the
//! accelerator's memory.

mod compress;
mod schedule;
mod wire;

pub use compress::{compress_csc, compress_csr, decompress_to_csc, decompress_to_csr};
pub use schedule::{
    build_cholesky_schedule, build_spgemm_schedule, cholesky_columns, spgemm_groups, CholColumn,
    RowBundles, SpgemmGroup, SpgemmSchedule,
};
pub use wire::{deserialize, serialize, HEADER_BYTES, MAGIC, VERSION};

use crate::error::{Error, Result};

/// Bundle capacity used when none is given; also the CAM size.
pub const DEFAULT_BUNDLE_CAPACITY: usize = 32;

/// Largest capacity the 16-bit element count of the metadata word can hold.
pub const MAX_BUNDLE_CAPACITY: usize = 0xFFFF;

/// Which producer wrote a stream; decides how its bundles are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u16)]
pub enum KernelTag {
    /// Row bundles of a CSR matrix.
    CsrRows = 0,
    /// Column bundles of a CSC matrix.
    CscCols = 1,
    /// Column bundles of `A` interleaved with `L` row metadata.
    Cholesky = 2,
}

impl KernelTag {
    pub fn from_u16(v: u16) -> Option<Self> {
        match v {
            0 => Some(Self::CsrRows),
            1 => Some(Self::CscCols),
            2 => Some(Self::Cholesky),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum BundleKind {
    Data = 0,
    Schedule = 1,
}

/// A data bundle: one shared feature plus up to `capacity` distinct
/// `(index, value)` pairs in strictly increasing index order.
#[derive(Debug, Clone, PartialEq)]
pub struct RirBundle {
    pub shared: u32,
    pub elements: Vec<(u32, f32)>,
    pub last_of_feature: bool,
}

impl RirBundle {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Bytes this bundle occupies on the wire.
    pub fn wire_bytes(&self) -> usize {
        data_bundle_bytes(self.elements.len())
    }

    fn bitwise_eq(&self, other: &Self) -> bool {
        self.shared == other.shared
            && self.last_of_feature == other.last_of_feature
            && self.elements.len() == other.elements.len()
            && self
                .elements
                .iter()
                .zip(&other.elements)
                .all(|(a, b)| a.0 == b.0 && a.1.to_bits() == b.1.to_bits())
    }
}

/// Wire size of a data bundle with `len` elements.
pub fn data_bundle_bytes(len: usize) -> usize {
    8 * len + 8
}

/// Wire size of a schedule bundle with `len` triples.
pub fn meta_bundle_bytes(len: usize) -> usize {
    12 * len + 8
}

/// Location of row `row` of `L` in the accelerator's row-major store:
/// entries `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CholMetaTriple {
    pub row: u32,
    pub start: u32,
    pub end: u32,
}

/// A schedule bundle for column `shared` of `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaBundle {
    pub shared: u32,
    pub triples: Vec<CholMetaTriple>,
    pub last_of_feature: bool,
}

impl MetaBundle {
    pub fn wire_bytes(&self) -> usize {
        meta_bundle_bytes(self.triples.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RirRecord {
    Data(RirBundle),
    Schedule(MetaBundle),
}

impl RirRecord {
    pub fn kind(&self) -> BundleKind {
        match self {
            Self::Data(_) => BundleKind::Data,
            Self::Schedule(_) => BundleKind::Schedule,
        }
    }

    pub fn shared(&self) -> u32 {
        match self {
            Self::Data(b) => b.shared,
            Self::Schedule(m) => m.shared,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Data(b) => b.elements.len(),
            Self::Schedule(m) => m.triples.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn last_of_feature(&self) -> bool {
        match self {
            Self::Data(b) => b.last_of_feature,
            Self::Schedule(m) => m.last_of_feature,
        }
    }

    pub fn wire_bytes(&self) -> usize {
        match self {
            Self::Data(b) => b.wire_bytes(),
            Self::Schedule(m) => m.wire_bytes(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamHeader {
    pub kernel: KernelTag,
    pub capacity: u32,
    pub rows: u32,
    pub cols: u32,
}

/// An ordered sequence of bundles plus the header needed to decode it.
#[derive(Debug, Clone, PartialEq)]
pub struct RirStream {
    pub header: StreamHeader,
    pub records: Vec<RirRecord>,
}

impl RirStream {
    pub fn new(kernel: KernelTag, capacity: usize, rows: usize, cols: usize) -> Result<Self> {
        Ok(Self {
            header: StreamHeader {
                kernel,
                capacity: checked_capacity(capacity)? as u32,
                rows: to_u32(rows, "row count")?,
                cols: to_u32(cols, "column count")?,
            },
            records: Vec::new(),
        })
    }

    pub fn capacity(&self) -> usize {
        self.header.capacity as usize
    }

    pub fn data_bundles(&self) -> impl Iterator<Item = &RirBundle> {
        self.records.iter().filter_map(|r| match r {
            RirRecord::Data(b) => Some(b),
            RirRecord::Schedule(_) => None,
        })
    }

    /// Total bytes of the serialized stream, header included.
    pub fn wire_bytes(&self) -> usize {
        HEADER_BYTES + self.records.iter().map(RirRecord::wire_bytes).sum::<usize>()
    }

    /// Number of logical features (rows or columns) that needed more than
    /// one bundle.
    pub fn split_features(&self) -> usize {
        let mut count = 0;
        let mut run = 0usize;
        for b in self.data_bundles() {
            run += 1;
            if b.last_of_feature {
                if run > 1 {
                    count += 1;
                }
                run = 0;
            }
        }
        count
    }

    /// Equality with values compared bit for bit (NaN-safe).
    pub fn bitwise_eq(&self, other: &Self) -> bool {
        self.header == other.header
            && self.records.len() == other.records.len()
            && self.records.iter().zip(&other.records).all(|(a, b)| match (a, b) {
                (RirRecord::Data(x), RirRecord::Data(y)) => x.bitwise_eq(y),
                (RirRecord::Schedule(x), RirRecord::Schedule(y)) => x == y,
                _ => false,
            })
    }
}

pub(crate) fn checked_capacity(capacity: usize) -> Result<usize> {
    if capacity == 0 || capacity > MAX_BUNDLE_CAPACITY {
        return Err(Error::InvalidCapacity(capacity));
    }
    Ok(capacity)
}

pub(crate) fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::DimensionMismatch(format!("{what} {v} does not fit in 32 bits")))
}

/// Splits a sorted lane into bundles of at most `capacity` elements.
pub(crate) fn lane_bundles(shared: u32, idx: &[usize], vals: &[f32], capacity: usize) -> Vec<RirBundle> {
    let chunks = idx.len().div_ceil(capacity);
    idx.chunks(capacity)
        .zip(vals.chunks(capacity))
        .enumerate()
        .map(|(c, (is, vs))| RirBundle {
            shared,
            elements: is.iter().zip(vs).map(|(&i, &v)| (i as u32, v)).collect(),
            last_of_feature: c + 1 == chunks,
        })
        .collect()
}
