//! Left-looking sparse Cholesky: elimination tree, symbolic analysis and
//! numeric factorization in f32.

use crate::error::{Error, Result};
use crate::matrix::{CscMatrix, CsrMatrix, DenseMatrix};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationTree {
    /// `parent[k]` is the first sub-diagonal row of `L(:, k)`, or `None`.
    pub parent: Vec<Option<usize>>,
}

impl EliminationTree {
    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn roots(&self) -> impl Iterator<Item = usize> + '_ {
        self.parent.iter().enumerate().filter(|(_, p)| p.is_none()).map(|(k, _)| k)
    }
}

fn check_square_symmetric(a: &CscMatrix) -> Result<()> {
    if a.rows() != a.cols() {
        return Err(Error::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    if let Some((row, col)) = a.first_asymmetric_entry() {
        return Err(Error::AsymmetricPattern { row, col });
    }
    Ok(())
}

/// Elimination tree of `struct(A)` using ancestor path compression.
pub fn build_etree(a: &CscMatrix) -> Result<EliminationTree> {
    check_square_symmetric(a)?;
    let n = a.cols();
    let mut parent = vec![None; n];
    let mut ancestor: Vec<Option<usize>> = vec![None; n];
    for k in 0..n {
        for &i in a.col(k).0.iter().take_while(|&&i| i < k) {
            let mut i = i;
            loop {
                let next = ancestor[i];
                ancestor[i] = Some(k);
                match next {
                    Some(j) if j == k => break,
                    Some(j) => i = j,
                    None => {
                        parent[i] = Some(k);
                        break;
                    }
                }
            }
        }
    }
    Ok(EliminationTree { parent })
}

/// Per-column row structure of `L`, plus per-row counts and offsets into a
/// row-major store of `L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicPattern {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    row_counts: Vec<usize>,
    row_start: Vec<usize>,
}

impl SymbolicPattern {
    pub fn n(&self) -> usize {
        self.row_counts.len()
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Sorted rows of `L(:, k)`; the first is always `k`.
    pub fn col(&self, k: usize) -> &[usize] {
        &self.row_idx[self.col_ptr[k]..self.col_ptr[k + 1]]
    }

    pub fn row_count(&self, r: usize) -> usize {
        self.row_counts[r]
    }

    /// Inclusive `(start, end)` slots of row `r` in the row-major store.
    pub fn row_extent(&self, r: usize) -> (usize, usize) {
        (self.row_start[r], self.row_start[r + 1] - 1)
    }

    pub fn row_starts(&self) -> &[usize] {
        &self.row_start
    }
}

/// `struct(L(:,k)) = struct(lower(A)(:,k)) ∪ children's structures minus
/// the child itself`, computed bottom-up.
pub fn symbolic_pattern(a: &CscMatrix, t: &EliminationTree) -> Result<SymbolicPattern> {
    check_square_symmetric(a)?;
    let n = a.cols();
    if t.n() != n {
        return Err(Error::PatternMismatch(format!("tree has {} nodes, matrix has n = {n}", t.n())));
    }
    for (k, p) in t.parent.iter().enumerate() {
        if matches!(p, Some(p) if *p <= k || *p >= n) {
            return Err(Error::PatternMismatch(format!("invalid parent for column {k}")));
        }
    }
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, p) in t.parent.iter().enumerate() {
        if let Some(p) = *p {
            children[p].push(k);
        }
    }
    let mut col_ptr = vec![0usize; n + 1];
    let mut row_idx = Vec::new();
    let mut mark = vec![usize::MAX; n];
    let mut set = Vec::new();
    for k in 0..n {
        set.clear();
        mark[k] = k;
        set.push(k);
        for &r in a.lower_col(k).0 {
            if mark[r] != k {
                mark[r] = k;
                set.push(r);
            }
        }
        for &c in &children[k] {
            for &r in &row_idx[col_ptr[c]..col_ptr[c + 1]] {
                if r != c && mark[r] != k {
                    mark[r] = k;
                    set.push(r);
                }
            }
        }
        set.sort_unstable();
        row_idx.extend_from_slice(&set);
        col_ptr[k + 1] = row_idx.len();
    }
    if t.parent.iter().enumerate().any(|(k, p)| row_idx[col_ptr[k]..col_ptr[k + 1]].get(1).copied() != *p) {
        return Err(Error::PatternMismatch("tree does not match the matrix structure".into()));
    }
    let mut row_counts = vec![0usize; n];
    for &r in &row_idx {
        row_counts[r] += 1;
    }
    let mut row_start = vec![0usize; n + 1];
    for r in 0..n {
        row_start[r + 1] = row_start[r] + row_counts[r];
    }
    Ok(SymbolicPattern { col_ptr, row_idx, row_counts, row_start })
}

/// Sum of products over matching columns `< limit_col`. Both rows must be
/// sorted by column.
pub fn sparse_dot(row_r: (&[usize], &[f32]), row_k: (&[usize], &[f32]), limit_col: usize) -> f32 {
    sparse_dot_counted(row_r, row_k, limit_col).0
}

/// Like [`sparse_dot`] but also returns the number of matched pairs.
pub fn sparse_dot_counted(
    (ci, vi): (&[usize], &[f32]),
    (cj, vj): (&[usize], &[f32]),
    limit_col: usize,
) -> (f32, usize) {
    let (mut p, mut q) = (0, 0);
    let mut acc = 0.0f32;
    let mut matched = 0;
    while p < ci.len() && q < cj.len() {
        let (a, b) = (ci[p], cj[q]);
        if a >= limit_col || b >= limit_col {
            break;
        }
        match a.cmp(&b) {
            std::cmp::Ordering::Less => p += 1,
            std::cmp::Ordering::Greater => q += 1,
            std::cmp::Ordering::Equal => {
                acc += vi[p] * vj[q];
                matched += 1;
                p += 1;
                q += 1;
            }
        }
    }
    (acc, matched)
}

/// Row-major storage of `L` with extents preallocated from symbolic counts.
#[derive(Debug, Clone, PartialEq)]
pub struct LFactor {
    n: usize,
    row_start: Vec<usize>,
    fill: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f32>,
}

impl LFactor {
    fn new(pattern: &SymbolicPattern) -> Self {
        let nnz = pattern.nnz();
        LFactor {
            n: pattern.n(),
            row_start: pattern.row_starts().to_vec(),
            fill: pattern.row_starts()[..pattern.n()].to_vec(),
            cols: vec![0; nnz],
            vals: vec![0.0; nnz],
        }
    }

    fn push(&mut self, r: usize, c: usize, v: f32) {
        let slot = self.fill[r];
        debug_assert!(slot < self.row_start[r + 1]);
        self.cols[slot] = c;
        self.vals[slot] = v;
        self.fill[r] += 1;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.fill.iter().zip(&self.row_start).map(|(f, s)| f - s).sum()
    }

    /// Entries of row `r` written so far, sorted by column.
    pub fn row(&self, r: usize) -> (&[usize], &[f32]) {
        let s = self.row_start[r];
        let e = self.fill[r];
        (&self.cols[s..e], &self.vals[s..e])
    }

    /// Inclusive slot range reserved for row `r`.
    pub fn row_extent(&self, r: usize) -> (usize, usize) {
        (self.row_start[r], self.row_start[r + 1] - 1)
    }

    pub fn is_complete(&self) -> bool {
        self.fill.iter().zip(&self.row_start[1..]).all(|(f, e)| f == e)
    }

    pub fn get(&self, r: usize, c: usize) -> Option<f32> {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).ok().map(|p| vals[p])
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let mut ptr = vec![0usize; self.n + 1];
        let mut idx = Vec::with_capacity(self.nnz());
        let mut vals = Vec::with_capacity(self.nnz());
        for r in 0..self.n {
            let (c, v) = self.row(r);
            idx.extend_from_slice(c);
            vals.extend_from_slice(v);
            ptr[r + 1] = idx.len();
        }
        CsrMatrix::from_parts_unchecked(self.n, self.n, ptr, idx, vals)
    }

    /// Column view, used when emitting results.
    pub fn to_csc(&self) -> CscMatrix {
        self.to_csr().to_csc()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        self.to_csr().to_dense()
    }

    pub fn bitwise_eq(&self, other: &LFactor) -> bool {
        self.to_csr().bitwise_eq(&other.to_csr())
    }
}

/// Work done for one pattern row during one column step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowDot {
    pub row: usize,
    /// Entries of `L(row, 0:k)` read by the dot product.
    pub row_len: usize,
    pub matched: usize,
}

/// Work done in one column step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnWork {
    pub k: usize,
    /// Length of `L(k, 0:k)`.
    pub diag_row_len: usize,
    /// One per row of `pattern(k)`, ascending; the first is the diagonal.
    pub dots: Vec<RowDot>,
}

impl ColumnWork {
    /// Multiplies + subtractions in the dot products, one sqrt, and one
    /// division per off-diagonal row.
    pub fn flops(&self) -> u64 {
        let dot: usize = self.dots.iter().map(|d| 2 * d.matched).sum();
        (dot + self.dots.len()) as u64
    }
}

/// Column-at-a-time factorizer. Callers that need per-column work counts
/// (the simulator) drive [`Factorizer::step`] directly.
pub struct Factorizer<'a> {
    a: &'a CscMatrix,
    pattern: &'a SymbolicPattern,
    l: LFactor,
    dot: Vec<f32>,
    next: usize,
}

impl<'a> Factorizer<'a> {
    pub fn new(a: &'a CscMatrix, pattern: &'a SymbolicPattern) -> Result<Self> {
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
        Ok(Factorizer { a, pattern, l: LFactor::new(pattern), dot: vec![0.0; a.cols()], next: 0 })
    }

    pub fn done(&self) -> bool {
        self.next == self.pattern.n()
    }

    /// Computes column `k` of `L` where `k` is the next unfinished column.
    pub fn step(&mut self) -> Result<ColumnWork> {
        let k = self.next;
        let rows = self.pattern.col(k);
        for &r in rows {
            self.dot[r] = 0.0;
        }
        let (ar, av) = self.a.lower_col(k);
        for (&r, &v) in ar.iter().zip(av) {
            if rows.binary_search(&r).is_err() {
                return Err(Error::PatternMismatch(format!(
                    "row {r} of column {k} is outside the symbolic pattern"
                )));
            }
            self.dot[r] = v;
        }
        let lk = self.l.row(k);
        let diag_row_len = lk.0.len();
        let mut dots = Vec::with_capacity(rows.len());
        for &r in rows {
            let lr = self.l.row(r);
            let (s, matched) = sparse_dot_counted(lr, lk, k);
            self.dot[r] -= s;
            dots.push(RowDot { row: r, row_len: lr.0.len(), matched });
        }
        let pivot = self.dot[k];
        if pivot.is_nan() || pivot <= 0.0 {
            return Err(Error::NotPositiveDefinite { column: k, pivot: pivot as f64 });
        }
        let d = pivot.sqrt();
        self.l.push(k, k, d);
        for &r in &rows[1..] {
            let v = self.dot[r] / d;
            self.l.push(r, k, v);
        }
        self.next += 1;
        Ok(ColumnWork { k, diag_row_len, dots })
    }

    pub fn finish(self) -> LFactor {
        self.l
    }
}

/// Numeric left-looking factorization in f32 with ascending-column dot
/// accumulation.
pub fn factorize(a: &CscMatrix, pattern: &SymbolicPattern) -> Result<LFactor> {
    let mut f = Factorizer::new(a, pattern)?;
    while !f.done() {
        f.step()?;
    }
    Ok(f.finish())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    /// `max |L·Lᵀ − A|`.
    pub max_abs: f64,
    pub frobenius: f64,
    /// `max |A|`, for relative bounds.
    pub max_abs_a: f64,
}

impl Residual {
    pub fn relative(&self) -> f64 {
        if self.max_abs_a == 0.0 {
            self.max_abs
        } else {
            self.max_abs / self.max_abs_a
        }
    }
}

/// Residual of `L·Lᵀ − A` accumulated in f64.
pub fn verify_factor(a: &CscMatrix, l: &LFactor) -> Result<Residual> {
    if a.rows() != l.n() || a.cols() != l.n() {
        return Err(Error::DimensionMismatch(format!(
            "factor is {0}x{0}, matrix is {1}x{2}",
            l.n(),
            a.rows(),
            a.cols()
        )));
    }
    let n = l.n();
    let lc = l.to_csc();
    let ar = a.to_csr();
    let mut acc = vec![0.0f64; n];
    let mut touched = vec![false; n];
    let mut list = Vec::new();
    let (mut max_abs, mut fro, mut max_a) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        let (ci, vi) = l.row(i);
        for (&c, &v) in ci.iter().zip(vi) {
            let (rows, vals) = lc.col(c);
            for (&j, &w) in rows.iter().zip(vals) {
                if !touched[j] {
                    touched[j] = true;
                    list.push(j);
                }
                acc[j] += v as f64 * w as f64;
            }
        }
        let (cj, vj) = ar.row(i);
        for (&j, &v) in cj.iter().zip(vj) {
            max_a = max_a.max((v as f64).abs());
            if !touched[j] {
                touched[j] = true;
                list.push(j);
            }
            acc[j] -= v as f64;
        }
        for &j in &list {
            let d = acc[j].abs();
            max_abs = max_abs.max(d);
            fro += d * d;
            acc[j] = 0.0;
            touched[j] = false;
        }
        list.clear();
    }
    Ok(Residual { max_abs, frobenius: fro.sqrt(), max_abs_a: max_a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{make_spd, random_sparse, CooMatrix};

    fn csc(n: usize, e: &[(usize, usize, f32)]) -> CscMatrix {
        CooMatrix::from_entries(n, n, e.iter().copied()).unwrap().to_csr().to_csc()
    }

    fn tridiag(n: usize) -> CscMatrix {
        let mut e = Vec::new();
        for i in 0..n {
            e.push((i, i, 4.0));
            if i + 1 < n {
                e.push((i, i + 1, -1.0));
                e.push((i + 1, i, -1.0));
            }
        }
        csc(n, &e)
    }

    fn dense_pattern(a: &CscMatrix) -> Vec<Vec<usize>> {
        let l = a.to_dense().cholesky().unwrap();
        (0..a.cols())
            .map(|k| (k..a.rows()).filter(|&r| l[(r, k)].abs() > 1e-12).collect())
            .collect()
    }

    #[test]
    fn diagonal_tree_and_pattern() {
        let a = csc(4, &[(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0), (3, 3, 4.0)]);
        let t = build_etree(&a).unwrap();
        assert_eq!(t.parent, vec![None; 4]);
        let p = symbolic_pattern(&a, &t).unwrap();
        for k in 0..4 {
            assert_eq!(p.col(k), &[k]);
        }
    }

    #[test]
    fn tridiagonal_tree_and_pattern() {
        let a = tridiag(4);
        let t = build_etree(&a).unwrap();
        assert_eq!(t.parent, vec![Some(1), Some(2), Some(3), None]);
        let p = symbolic_pattern(&a, &t).unwrap();
        let oracle = dense_pattern(&a);
        for k in 0..4 {
            assert_eq!(p.col(k), oracle[k].as_slice());
        }
        assert_eq!(p.col(3), &[3]);
    }

    #[test]
    fn arrowhead_tree() {
        let n = 6;
        let mut e = vec![];
        for i in 0..n {
            e.push((i, i, 10.0));
            if i + 1 < n {
                e.push((n - 1, i, 1.0));
                e.push((i, n - 1, 1.0));
            }
        }
        let a = csc(n, &e);
        let t = build_etree(&a).unwrap();
        for k in 0..n - 1 {
            assert_eq!(t.parent[k], Some(n - 1));
        }
        let p = symbolic_pattern(&a, &t).unwrap();
        let oracle = dense_pattern(&a);
        for k in 0..n {
            assert_eq!(p.col(k), oracle[k].as_slice());
        }
    }

    #[test]
    fn pattern_covers_dense_factor() {
        for seed in 0..5 {
            let a = make_spd(&random_sparse(50, 50, 0.04, seed).unwrap()).unwrap().to_csc();
            let t = build_etree(&a).unwrap();
            let p = symbolic_pattern(&a, &t).unwrap();
            for (k, rows) in dense_pattern(&a).iter().enumerate() {
                for r in rows {
                    assert!(p.col(k).binary_search(r).is_ok(), "missing ({r},{k})");
                }
                assert_eq!(p.col(k)[0], k);
            }
        }
    }

    #[test]
    fn rejects_non_square_and_asymmetric() {
        let r = CooMatrix::from_entries(2, 3, [(0, 0, 1.0)]).unwrap().to_csr().to_csc();
        assert!(matches!(build_etree(&r), Err(Error::NotSquare { .. })));
        let a = csc(2, &[(0, 0, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(matches!(build_etree(&a), Err(Error::AsymmetricPattern { .. })));
    }

    #[test]
    fn tree_mismatch_rejected() {
        let a = tridiag(4);
        let bad = EliminationTree { parent: vec![None; 3] };
        assert!(matches!(symbolic_pattern(&a, &bad), Err(Error::PatternMismatch(_))));
        let wrong = EliminationTree { parent: vec![None; 4] };
        assert!(matches!(symbolic_pattern(&a, &wrong), Err(Error::PatternMismatch(_))));
    }

    #[test]
    fn sparse_dot_cases() {
        assert_eq!(sparse_dot((&[0, 2], &[1.0, 1.0]), (&[1, 3], &[1.0, 1.0]), 10), 0.0);
        assert_eq!(sparse_dot((&[4], &[2.0]), (&[4], &[3.0]), 5), 6.0);
        assert_eq!(sparse_dot((&[4], &[2.0]), (&[4], &[3.0]), 4), 0.0);
    }

    #[test]
    fn sparse_dot_matches_dense() {
        let m = random_sparse(2, 40, 0.3, 9).unwrap();
        let d = m.to_dense();
        let lim = 30;
        let oracle: f64 = (0..lim).map(|c| d[(0, c)] * d[(1, c)]).sum();
        let got = sparse_dot(m.row(0), m.row(1), lim);
        assert!((got as f64 - oracle).abs() <= 1e-5 * oracle.abs().max(1.0));
    }

    fn factor(a: &CscMatrix) -> Result<LFactor> {
        let t = build_etree(a)?;
        let p = symbolic_pattern(a, &t)?;
        factorize(a, &p)
    }

    #[test]
    fn diagonal_factor() {
        let a = csc(3, &[(0, 0, 4.0), (1, 1, 9.0), (2, 2, 16.0)]);
        let l = factor(&a).unwrap();
        assert_eq!(l.to_dense(), DenseMatrix::from_rows(&[&[2.0, 0.0, 0.0], &[0.0, 3.0, 0.0], &[0.0, 0.0, 4.0]]).unwrap());
        assert_eq!(verify_factor(&a, &l).unwrap().max_abs, 0.0);
    }

    #[test]
    fn two_by_two_factor() {
        let a = csc(2, &[(0, 0, 4.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 5.0)]);
        let l = factor(&a).unwrap();
        assert_eq!(l.to_dense(), DenseMatrix::from_rows(&[&[2.0, 0.0], &[1.0, 2.0]]).unwrap());
        assert!(verify_factor(&a, &l).unwrap().max_abs <= 1e-6);
        assert_eq!(l.row_extent(1), (1, 2));
        assert!(l.is_complete());
    }

    #[test]
    fn not_positive_definite_column_matches_dense() {
        let a = csc(2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        let err = factor(&a).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { column: 1, .. }));
        assert!(matches!(a.to_dense().cholesky(), Err(Error::NotPositiveDefinite { column: 1, .. })));
    }

    #[test]
    fn random_spd_residual_and_structure() {
        for (n, d, seed) in [(30, 0.1, 1), (120, 0.02, 2), (200, 0.01, 3)] {
            let a = make_spd(&random_sparse(n, n, d, seed).unwrap()).unwrap().to_csc();
            let t = build_etree(&a).unwrap();
            let p = symbolic_pattern(&a, &t).unwrap();
            let l = factorize(&a, &p).unwrap();
            assert!(l.is_complete());
            let r = verify_factor(&a, &l).unwrap();
            assert!(r.relative() <= 1e-4, "residual {r:?}");
            for (row, c, _) in l.to_csr().iter() {
                assert!(c <= row);
                assert!(p.col(c).binary_search(&row).is_ok());
            }
            assert!(factorize(&a, &p).unwrap().bitwise_eq(&l));
        }
    }

    #[test]
    fn flops_per_column() {
        let a = tridiag(3);
        let t = build_etree(&a).unwrap();
        let p = symbolic_pattern(&a, &t).unwrap();
        let mut f = Factorizer::new(&a, &p).unwrap();
        let w0 = f.step().unwrap();
        assert_eq!(w0.flops(), 2);
        let w1 = f.step().unwrap();
        assert_eq!(w1.dots[0].matched, 1);
        assert_eq!(w1.flops(), 2 + 2);
    }
}
