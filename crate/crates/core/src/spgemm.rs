//! Row-by-row SpGEMM following the match, multiply, sort, merge dataflow.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::matrix::CsrMatrix;
use crate::rir::{spgemm_groups, RirBundle, SpgemmGroup};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialProduct {
    pub col: u32,
    pub val: f32,
}

/// Index-matching store keyed by the column indices of one `A` bundle.
#[derive(Debug, Clone)]
pub struct CamTable {
    capacity: usize,
    entries: HashMap<u32, (f32, u32)>,
}

impl CamTable {
    pub fn new(capacity: usize) -> Self {
        CamTable { capacity, entries: HashMap::with_capacity(capacity) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Replaces the contents with the elements of `a_bundle`.
    pub fn load(&mut self, a_bundle: &RirBundle) -> Result<()> {
        if a_bundle.len() > self.capacity {
            return Err(Error::CamOverflow { len: a_bundle.len(), capacity: self.capacity });
        }
        self.entries.clear();
        for &(k, v) in &a_bundle.elements {
            self.entries.insert(k, (v, a_bundle.shared));
        }
        Ok(())
    }

    /// `(a value, a row)` stored under `key`.
    pub fn lookup(&self, key: u32) -> Option<(f32, u32)> {
        self.entries.get(&key).copied()
    }
}

fn stream_b(cam: &CamTable, b_row: &[RirBundle], out: &mut Vec<PartialProduct>) {
    for b in b_row {
        if let Some((av, _)) = cam.lookup(b.shared) {
            out.extend(b.elements.iter().map(|&(j, bv)| PartialProduct { col: j, val: av * bv }));
        }
    }
}

/// Loads `a_bundle` into a CAM and streams the bundles of one `B` row
/// through it. A hit multiplies every element of the `B` bundle.
pub fn match_multiply(
    a_bundle: &RirBundle,
    b_row: &[RirBundle],
    cam_capacity: usize,
) -> Result<Vec<PartialProduct>> {
    let mut cam = CamTable::new(cam_capacity);
    cam.load(a_bundle)?;
    let mut out = Vec::new();
    stream_b(&cam, b_row, &mut out);
    Ok(out)
}

/// Stable ascending sort by column.
pub fn sort_partials(mut ps: Vec<PartialProduct>) -> Vec<PartialProduct> {
    ps.sort_by_key(|p| p.col);
    ps
}

/// Sums runs of equal columns left to right. Input must be sorted.
pub fn merge_partials(sorted: &[PartialProduct]) -> Result<Vec<PartialProduct>> {
    let mut out: Vec<PartialProduct> = Vec::with_capacity(sorted.len());
    for (i, p) in sorted.iter().enumerate() {
        match out.last_mut() {
            Some(top) if top.col == p.col => top.val += p.val,
            Some(top) if top.col > p.col => return Err(Error::UnsortedPartials(i)),
            _ => out.push(*p),
        }
    }
    Ok(out)
}

/// Outcome of one row of `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct RowResult {
    pub row: usize,
    /// Partial products produced by each `A` bundle of the row, in order.
    pub bundle_partials: Vec<usize>,
    /// `B` rows that hit in each `A` bundle's CAM.
    pub bundle_hits: Vec<usize>,
    pub merged: Vec<PartialProduct>,
}

impl RowResult {
    pub fn partials(&self) -> usize {
        self.bundle_partials.iter().sum()
    }

    pub fn merge_adds(&self) -> usize {
        self.partials() - self.merged.len()
    }

    pub fn explicit_zeros(&self) -> usize {
        self.merged.iter().filter(|p| p.val == 0.0).count()
    }
}

/// Runs every `A` row of a group against the group's `B` stream.
pub fn execute_group(group: &SpgemmGroup, cam_capacity: usize) -> Result<Vec<RowResult>> {
    let mut cam = CamTable::new(cam_capacity);
    let mut results = Vec::with_capacity(group.a_rows.len());
    for a in &group.a_rows {
        let mut partials = Vec::new();
        let mut bundle_partials = Vec::with_capacity(a.bundles.len());
        let mut bundle_hits = Vec::with_capacity(a.bundles.len());
        for bundle in &a.bundles {
            cam.load(bundle)?;
            let before = partials.len();
            let mut hits = 0;
            for b in &group.b_rows {
                if cam.lookup(b.row as u32).is_some() {
                    hits += 1;
                    stream_b(&cam, &b.bundles, &mut partials);
                }
            }
            bundle_partials.push(partials.len() - before);
            bundle_hits.push(hits);
        }
        let merged = merge_partials(&sort_partials(partials))?;
        results.push(RowResult { row: a.row, bundle_partials, bundle_hits, merged });
    }
    Ok(results)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SpgemmStats {
    pub partials: u64,
    pub merge_adds: u64,
    pub explicit_zeros: u64,
}

impl SpgemmStats {
    pub fn add_row(&mut self, r: &RowResult) {
        self.partials += r.partials() as u64;
        self.merge_adds += r.merge_adds() as u64;
        self.explicit_zeros += r.explicit_zeros() as u64;
    }

    /// One multiply per partial product plus one add per merge.
    pub fn flops(&self) -> u64 {
        self.partials + self.merge_adds
    }
}

/// Collects row results (in any group order) into canonical CSR.
pub fn assemble(rows: usize, cols: usize, results: impl IntoIterator<Item = RowResult>) -> CsrMatrix {
    let mut per_row: Vec<Vec<PartialProduct>> = vec![Vec::new(); rows];
    for r in results {
        per_row[r.row] = r.merged;
    }
    let mut ptr = Vec::with_capacity(rows + 1);
    ptr.push(0);
    let mut idx = Vec::new();
    let mut vals = Vec::new();
    for row in per_row {
        for p in row {
            idx.push(p.col as usize);
            vals.push(p.val);
        }
        ptr.push(idx.len());
    }
    CsrMatrix::from_parts_unchecked(rows, cols, ptr, idx, vals)
}

/// `C = A·B` with per-row accounting.
pub fn spgemm_with_stats(a: &CsrMatrix, b: &CsrMatrix, capacity: usize) -> Result<(CsrMatrix, SpgemmStats)> {
    let mut stats = SpgemmStats::default();
    let mut all = Vec::new();
    for g in spgemm_groups(a, b, 1, capacity)? {
        for r in execute_group(&g, capacity)? {
            stats.add_row(&r);
            all.push(r);
        }
    }
    Ok((assemble(a.rows(), b.cols(), all), stats))
}

/// `C = A·B`; explicit zeros from cancellation are kept.
pub fn spgemm(a: &CsrMatrix, b: &CsrMatrix, capacity: usize) -> Result<CsrMatrix> {
    spgemm_with_stats(a, b, capacity).map(|(c, _)| c)
}

/// Gustavson product with f64 accumulators. Returns the structural pattern
/// and the f64 values alongside their f32 rounding.
pub fn reference_spgemm_f64(a: &CsrMatrix, b: &CsrMatrix) -> Result<(CsrMatrix, Vec<f64>)> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let mut acc = vec![0.0f64; b.cols()];
    let mut seen = vec![usize::MAX; b.cols()];
    let mut ptr = vec![0usize];
    let mut idx = Vec::new();
    let mut wide = Vec::new();
    let mut cols = Vec::new();
    for i in 0..a.rows() {
        cols.clear();
        let (ak, av) = a.row(i);
        for (&k, &x) in ak.iter().zip(av) {
            let (bj, bv) = b.row(k);
            for (&j, &y) in bj.iter().zip(bv) {
                if seen[j] != i {
                    seen[j] = i;
                    acc[j] = 0.0;
                    cols.push(j);
                }
                acc[j] += x as f64 * y as f64;
            }
        }
        cols.sort_unstable();
        for &j in &cols {
            idx.push(j);
            wide.push(acc[j]);
        }
        ptr.push(idx.len());
    }
    let vals = wide.iter().map(|&v| v as f32).collect();
    Ok((CsrMatrix::from_parts_unchecked(a.rows(), b.cols(), ptr, idx, vals), wide))
}

pub fn reference_spgemm(a: &CsrMatrix, b: &CsrMatrix) -> Result<CsrMatrix> {
    reference_spgemm_f64(a, b).map(|(c, _)| c)
}
