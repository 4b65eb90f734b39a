use crate::error::{Error, Result};
use crate::matrix::{CscMatrix, CsrMatrix};

use super::{checked_capacity, lane_bundles, to_u32, KernelTag, RirRecord, RirStream};

/// One or more bundles per non-empty row (shared = row, distinct =
/// column). Empty rows emit nothing.
pub fn compress_csr(m: &CsrMatrix, capacity: usize) -> Result<RirStream> {
    let capacity = checked_capacity(capacity)?;
    let mut s = RirStream::new(KernelTag::CsrRows, capacity, m.rows(), m.cols())?;
    to_u32(m.cols(), "column count")?;
    for i in 0..m.rows() {
        let (cols, vals) = m.row(i);
        s.records
            .extend(lane_bundles(i as u32, cols, vals, capacity).into_iter().map(RirRecord::Data));
    }
    Ok(s)
}

/// Column-major dual of [`compress_csr`]: shared = column, distinct = row.
pub fn compress_csc(m: &CscMatrix, capacity: usize) -> Result<RirStream> {
    let capacity = checked_capacity(capacity)?;
    let mut s = RirStream::new(KernelTag::CscCols, capacity, m.rows(), m.cols())?;
    for j in 0..m.cols() {
        let (rows, vals) = m.col(j);
        s.records
            .extend(lane_bundles(j as u32, rows, vals, capacity).into_iter().map(RirRecord::Data));
    }
    Ok(s)
}

pub fn decompress_to_csr(s: &RirStream) -> Result<CsrMatrix> {
    expect_kernel(s, KernelTag::CsrRows)?;
    let rows = s.header.rows as usize;
    let cols = s.header.cols as usize;
    let (ptr, idx, vals) = decompress_lanes(s, rows, cols)?;
    CsrMatrix::from_parts(rows, cols, ptr, idx, vals)
}

pub fn decompress_to_csc(s: &RirStream) -> Result<CscMatrix> {
    expect_kernel(s, KernelTag::CscCols)?;
    let rows = s.header.rows as usize;
    let cols = s.header.cols as usize;
    let (ptr, idx, vals) = decompress_lanes(s, cols, rows)?;
    CscMatrix::from_parts(rows, cols, ptr, idx, vals)
}

fn expect_kernel(s: &RirStream, tag: KernelTag) -> Result<()> {
    if s.header.kernel != tag {
        return Err(Error::MalformedStream(format!(
            "expected a {tag:?} stream, found {:?}",
            s.header.kernel
        )));
    }
    Ok(())
}

fn malformed(at: usize, msg: impl std::fmt::Display) -> Error {
    Error::MalformedStream(format!("bundle {at}: {msg}"))
}

/// Rebuilds pointer/index/value arrays, checking every bundle invariant.
fn decompress_lanes(
    s: &RirStream,
    major: usize,
    minor: usize,
) -> Result<(Vec<usize>, Vec<usize>, Vec<f32>)> {
    let capacity = s.capacity();
    let mut counts = vec![0usize; major];
    let mut idx = Vec::new();
    let mut vals = Vec::new();
    // feature currently being continued (last flag not yet seen)
    let mut open: Option<usize> = None;
    let mut prev_feature: Option<usize> = None;

    for (at, rec) in s.records.iter().enumerate() {
        let b = match rec {
            RirRecord::Data(b) => b,
            RirRecord::Schedule(_) => return Err(malformed(at, "unexpected schedule bundle")),
        };
        if b.elements.is_empty() {
            return Err(malformed(at, "empty data bundle"));
        }
        if b.elements.len() > capacity {
            return Err(malformed(
                at,
                format!("{} elements exceed capacity {capacity}", b.elements.len()),
            ));
        }
        let feature = b.shared as usize;
        if feature >= major {
            return Err(malformed(at, format!("shared feature {feature} out of range {major}")));
        }
        match open {
            Some(f) if f != feature => {
                return Err(malformed(at, format!("feature {f} ended without its end flag")));
            }
            Some(_) => {}
            None => {
                if prev_feature.is_some_and(|p| p >= feature) {
                    return Err(malformed(at, format!("feature {feature} out of order")));
                }
            }
        }
        let mut last_index = if open.is_some() { idx.last().copied() } else { None };
        for &(d, v) in &b.elements {
            let d = d as usize;
            if d >= minor {
                return Err(malformed(at, format!("index {d} out of range {minor}")));
            }
            if last_index.is_some_and(|l| l >= d) {
                return Err(malformed(at, "indices not strictly increasing"));
            }
            last_index = Some(d);
            idx.push(d);
            vals.push(v);
        }
        counts[feature] += b.elements.len();
        open = if b.last_of_feature { None } else { Some(feature) };
        prev_feature = Some(feature);
    }
    if let Some(f) = open {
        return Err(Error::MalformedStream(format!("stream ends inside feature {f}")));
    }

    let mut ptr = Vec::with_capacity(major + 1);
    ptr.push(0);
    for c in counts {
        ptr.push(ptr.last().unwrap() + c);
    }
    Ok((ptr, idx, vals))
}
