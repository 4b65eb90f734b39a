use crate::cholesky::SymbolicPattern;
use crate::error::{Error, Result};
use crate::matrix::{CscMatrix, CsrMatrix};

use super::{
    checked_capacity, lane_bundles, to_u32, CholMetaTriple, KernelTag, MetaBundle, RirBundle,
    RirRecord, RirStream,
};

/// The bundles of one logical row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowBundles {
    pub row: usize,
    pub bundles: Vec<RirBundle>,
}

impl RowBundles {
    pub fn nnz(&self) -> usize {
        self.bundles.iter().map(RirBundle::len).sum()
    }

    pub fn wire_bytes(&self) -> usize {
        self.bundles.iter().map(RirBundle::wire_bytes).sum()
    }
}

/// One round of work: up to `pipelines` rows of `A` (one per pipeline)
/// followed by every row of `B` those rows reference, in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpgemmGroup {
    pub index: usize,
    pub a_rows: Vec<RowBundles>,
    pub b_rows: Vec<RowBundles>,
}

impl SpgemmGroup {
    /// Bundles of `B` row `k`, if the group streams it.
    pub fn b_row(&self, k: usize) -> Option<&RowBundles> {
        self.b_rows.binary_search_by_key(&k, |r| r.row).ok().map(|p| &self.b_rows[p])
    }

    pub fn wire_bytes(&self) -> usize {
        self.a_rows.iter().chain(&self.b_rows).map(RowBundles::wire_bytes).sum()
    }

    /// Elements the host touched to build this group.
    pub fn elements(&self) -> usize {
        self.a_rows.iter().chain(&self.b_rows).map(RowBundles::nnz).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpgemmSchedule {
    pub capacity: usize,
    pub pipelines: usize,
    /// Shape of `A` (rows, cols) and of `B`.
    pub a_shape: (usize, usize),
    pub b_shape: (usize, usize),
    pub groups: Vec<SpgemmGroup>,
}

impl SpgemmSchedule {
    pub fn bundle_count(&self) -> usize {
        self.groups
            .iter()
            .flat_map(|g| g.a_rows.iter().chain(&g.b_rows))
            .map(|r| r.bundles.len())
            .sum()
    }
}

/// Lazily yields schedule groups, so the caller can time each one.
pub fn spgemm_groups<'a>(
    a: &'a CsrMatrix,
    b: &'a CsrMatrix,
    pipelines: usize,
    capacity: usize,
) -> Result<impl Iterator<Item = SpgemmGroup> + 'a> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if pipelines == 0 {
        return Err(Error::DimensionMismatch("pipeline count must be at least 1".into()));
    }
    let capacity = checked_capacity(capacity)?;
    to_u32(a.rows().max(a.cols()).max(b.cols()), "dimension")?;

    let non_empty: Vec<usize> = (0..a.rows()).filter(|&i| a.row_nnz(i) > 0).collect();
    let mut mark = vec![usize::MAX; b.rows()];
    let groups = non_empty
        .chunks(pipelines)
        .map(|rows| rows.to_vec())
        .collect::<Vec<_>>()
        .into_iter()
        .enumerate()
        .map(move |(g, rows)| {
            let a_rows: Vec<RowBundles> = rows
                .iter()
                .map(|&i| {
                    let (cols, vals) = a.row(i);
                    RowBundles { row: i, bundles: lane_bundles(i as u32, cols, vals, capacity) }
                })
                .collect();
            let mut needed = Vec::new();
            for &i in &rows {
                for &k in a.row(i).0 {
                    if mark[k] != g {
                        mark[k] = g;
                        needed.push(k);
                    }
                }
            }
            needed.sort_unstable();
            let b_rows = needed
                .into_iter()
                .map(|k| {
                    let (cols, vals) = b.row(k);
                    RowBundles { row: k, bundles: lane_bundles(k as u32, cols, vals, capacity) }
                })
                .collect();
            SpgemmGroup { index: g, a_rows, b_rows }
        });
    Ok(groups)
}

/// Assigns consecutive non-empty rows of `A` to groups of `pipelines` and
/// lists, per group, the union of `B` rows they reference. Each `B` row is
/// stored once per group; the accelerator broadcasts it.
pub fn build_spgemm_schedule(
    a: &CsrMatrix,
    b: &CsrMatrix,
    pipelines: usize,
    capacity: usize,
) -> Result<SpgemmSchedule> {
    let groups = spgemm_groups(a, b, pipelines, capacity)?.collect();
    Ok(SpgemmSchedule {
        capacity,
        pipelines,
        a_shape: (a.rows(), a.cols()),
        b_shape: (b.rows(), b.cols()),
        groups,
    })
}

/// Per column `k`: the data bundles of `lower(A)(:, k)` followed by schedule
/// bundles listing, for every row `r` in the symbolic pattern of column
/// `k`, where row `r` of `L` is stored. Offsets come from prefix sums of the
/// symbolic row counts; `end` is inclusive.
pub fn build_cholesky_schedule(
    a: &CscMatrix,
    pattern: &SymbolicPattern,
    capacity: usize,
) -> Result<RirStream> {
    if a.rows() != a.cols() {
        return Err(Error::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    if pattern.n() != a.cols() {
        return Err(Error::PatternMismatch(format!(
            "pattern is for n = {}, matrix has n = {}",
            pattern.n(),
            a.cols()
        )));
    }
    let capacity = checked_capacity(capacity)?;
    let n = a.cols();
    to_u32(pattern.nnz(), "symbolic nnz")?;
    let mut s = RirStream::new(KernelTag::Cholesky, capacity, n, n)?;
    for k in 0..n {
        let (rows, vals) = a.lower_col(k);
        s.records
            .extend(lane_bundles(k as u32, rows, vals, capacity).into_iter().map(RirRecord::Data));
        let triples: Vec<CholMetaTriple> = pattern
            .col(k)
            .iter()
            .map(|&r| {
                let (start, end) = pattern.row_extent(r);
                CholMetaTriple { row: r as u32, start: start as u32, end: end as u32 }
            })
            .collect();
        let chunks = triples.len().div_ceil(capacity);
        for (c, chunk) in triples.chunks(capacity).enumerate() {
            s.records.push(RirRecord::Schedule(MetaBundle {
                shared: k as u32,
                triples: chunk.to_vec(),
                last_of_feature: c + 1 == chunks,
            }));
        }
    }
    Ok(s)
}

/// One column of a decoded Cholesky stream.
#[derive(Debug, Clone, PartialEq)]
pub struct CholColumn {
    pub k: usize,
    /// `lower(A)(:, k)` as `(row, value)`.
    pub ra: Vec<(usize, f32)>,
    pub ra_bundles: usize,
    pub ra_bytes: usize,
    pub triples: Vec<CholMetaTriple>,
    pub meta_bytes: usize,
}

/// Splits a Cholesky stream back into per-column work, validating order.
pub fn cholesky_columns(s: &RirStream) -> Result<Vec<CholColumn>> {
    if s.header.kernel != KernelTag::Cholesky {
        return Err(Error::MalformedStream(format!(
            "expected a Cholesky stream, found {:?}",
            s.header.kernel
        )));
    }
    let n = s.header.cols as usize;
    let mut cols: Vec<CholColumn> = Vec::with_capacity(n);
    let mut current = CholColumn {
        k: 0,
        ra: Vec::new(),
        ra_bundles: 0,
        ra_bytes: 0,
        triples: Vec::new(),
        meta_bytes: 0,
    };
    for rec in &s.records {
        let k = rec.shared() as usize;
        if k != current.k {
            return Err(Error::MalformedStream(format!(
                "bundle for column {k} while column {} is open",
                current.k
            )));
        }
        match rec {
            RirRecord::Data(b) => {
                if !current.triples.is_empty() {
                    return Err(Error::MalformedStream(format!(
                        "data bundle after metadata in column {k}"
                    )));
                }
                current.ra.extend(b.elements.iter().map(|&(r, v)| (r as usize, v)));
                current.ra_bundles += 1;
                current.ra_bytes += b.wire_bytes();
            }
            RirRecord::Schedule(m) => {
                current.triples.extend_from_slice(&m.triples);
                current.meta_bytes += m.wire_bytes();
                if m.last_of_feature {
                    let next = CholColumn {
                        k: k + 1,
                        ra: Vec::new(),
                        ra_bundles: 0,
                        ra_bytes: 0,
                        triples: Vec::new(),
                        meta_bytes: 0,
                    };
                    cols.push(std::mem::replace(&mut current, next));
                }
            }
        }
    }
    if cols.len() != n || !current.ra.is_empty() || !current.triples.is_empty() {
        return Err(Error::MalformedStream(format!(
            "stream holds {} complete columns, expected {n}",
            cols.len()
        )));
    }
    Ok(cols)
}
