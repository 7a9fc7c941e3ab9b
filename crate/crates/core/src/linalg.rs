//! Exact linear algebra over the Gaussian rationals, for constant matrices
//! and for matrices of truncated series.

use alloc::vec;
use alloc::vec::Vec;

use crate::scalar::GaussianRational;
use crate::series::TruncatedSeries;
use crate::vars::VariableBlocks;
use crate::{Error, Result};

/// Dense matrix with exact entries. Row-major.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QiMatrix {
    rows: usize,
    cols: usize,
    data: Vec<GaussianRational>,
}

impl QiMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        QiMatrix { rows, cols, data: vec![GaussianRational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m.set(i, i, GaussianRational::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<GaussianRational>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            if r.len() != ncols {
                return Err(Error::DimensionMismatch { expected: ncols, found: r.len() });
            }
            data.extend(r);
        }
        Ok(QiMatrix { rows: nrows, cols: ncols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &GaussianRational {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: GaussianRational) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[GaussianRational] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Row echelon reduction in place; returns the pivot columns and the
    /// accumulated sign of the row swaps.
    fn echelon(&mut self) -> (Vec<usize>, i32) {
        let mut pivots = Vec::new();
        let mut sign = 1;
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(p) = (row..self.rows).find(|&r| !self.get(r, col).is_zero()) else {
                continue;
            };
            if p != row {
                for c in 0..self.cols {
                    self.data.swap(p * self.cols + c, row * self.cols + c);
                }
                sign = -sign;
            }
            let inv = self.get(row, col).inv().expect("pivot is nonzero");
            for c in col..self.cols {
                let v = self.get(row, c) * &inv;
                self.set(row, c, v);
            }
            for r in 0..self.rows {
                if r == row || self.get(r, col).is_zero() {
                    continue;
                }
                let factor = self.get(r, col).clone();
                for c in col..self.cols {
                    let v = self.get(r, c) - &(&factor * self.get(row, c));
                    self.set(r, c, v);
                }
            }
            pivots.push(col);
            row += 1;
        }
        (pivots, sign)
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.echelon().0.len()
    }

    pub fn det(&self) -> Result<GaussianRational> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch { expected: self.rows, found: self.cols });
        }
        // elimination without normalizing pivots, tracking swaps
        let mut m = self.clone();
        let n = self.rows;
        let mut det = GaussianRational::one();
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !m.get(r, col).is_zero()) else {
                return Ok(GaussianRational::zero());
            };
            if p != col {
                for c in 0..n {
                    m.data.swap(p * n + c, col * n + c);
                }
                det = -&det;
            }
            let pivot = m.get(col, col).clone();
            det *= &pivot;
            let inv = pivot.inv()?;
            for r in col + 1..n {
                if m.get(r, col).is_zero() {
                    continue;
                }
                let factor = m.get(r, col) * &inv;
                for c in col..n {
                    let v = m.get(r, c) - &(&factor * m.get(col, c));
                    m.set(r, c, v);
                }
            }
        }
        Ok(det)
    }

    pub fn inverse(&self, context: &'static str) -> Result<QiMatrix> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch { expected: self.rows, found: self.cols });
        }
        let n = self.rows;
        // augment with the identity and reduce
        let mut aug = QiMatrix::zero(n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug.set(r, c, self.get(r, c).clone());
            }
            aug.set(r, n + r, GaussianRational::one());
        }
        let (pivots, _) = aug.echelon();
        if pivots.len() != n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
            return Err(Error::SingularMatrix { context });
        }
        let mut out = QiMatrix::zero(n, n);
        for r in 0..n {
            for c in 0..n {
                out.set(r, c, aug.get(r, n + c).clone());
            }
        }
        Ok(out)
    }

    /// A basis of the right nullspace, one vector per non-pivot column.
    pub fn nullspace(&self) -> Vec<Vec<GaussianRational>> {
        let mut m = self.clone();
        let (pivots, _) = m.echelon();
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivots.contains(&free) {
                continue;
            }
            let mut v = vec![GaussianRational::zero(); self.cols];
            v[free] = GaussianRational::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -m.get(r, free);
            }
            basis.push(v);
        }
        basis
    }

    pub fn mul_vec(&self, v: &[GaussianRational]) -> Result<Vec<GaussianRational>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, found: v.len() });
        }
        Ok((0..self.rows)
            .map(|r| {
                let mut acc = GaussianRational::zero();
                for c in 0..self.cols {
                    acc += &(self.get(r, c) * &v[c]);
                }
                acc
            })
            .collect())
    }
}

/// Incremental rank computation: rows are offered one at a time and either
/// enlarge the span or are reported redundant. Used wherever the first rows
/// achieving a rank matter, not just the rank itself.
#[derive(Clone, Debug, Default)]
pub struct RankTracker {
    reduced: Vec<Vec<GaussianRational>>,
    pivots: Vec<usize>,
}

impl RankTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.reduced.len()
    }

    /// Reduces `row` against the accepted rows; keeps it (returning true)
    /// exactly when it is independent of them.
    pub fn offer(&mut self, row: &[GaussianRational]) -> bool {
        let mut r = row.to_vec();
        for (stored, &p) in self.reduced.iter().zip(&self.pivots) {
            if r[p].is_zero() {
                continue;
            }
            let factor = r[p].clone();
            for (x, s) in r.iter_mut().zip(stored) {
                *x -= &(&factor * s);
            }
        }
        let Some(p) = r.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = r[p].inv().expect("leading entry is nonzero");
        for x in &mut r {
            *x *= &inv;
        }
        self.reduced.push(r);
        self.pivots.push(p);
        true
    }
}

/// Dense matrix of truncated series sharing one context and order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SeriesMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<TruncatedSeries>,
}

impl SeriesMatrix {
    pub fn from_rows(rows: Vec<Vec<TruncatedSeries>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(nrows * ncols);
        for r in rows {
            if r.len() != ncols {
                return Err(Error::DimensionMismatch { expected: ncols, found: r.len() });
            }
            entries.extend(r);
        }
        if let Some(first) = entries.first() {
            let (vars, order) = (first.vars().clone(), first.order());
            for e in &entries {
                if *e.vars() != vars {
                    return Err(Error::VariableMismatch {
                        expected: vars.signature(),
                        found: e.vars().signature(),
                    });
                }
                if e.order() != order {
                    return Err(Error::OrderMismatch { left: order, right: e.order() });
                }
            }
        }
        Ok(SeriesMatrix { rows: nrows, cols: ncols, entries })
    }

    pub fn identity(vars: &VariableBlocks, order: u32, n: usize) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                entries.push(if r == c {
                    TruncatedSeries::one(vars, order)
                } else {
                    TruncatedSeries::zero(vars, order)
                });
            }
        }
        SeriesMatrix { rows: n, cols: n, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &TruncatedSeries {
        &self.entries[r * self.cols + c]
    }

    pub fn mul(&self, other: &SeriesMatrix) -> Result<SeriesMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut entries = Vec::with_capacity(self.rows * other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc = self.get(r, 0).mul(other.get(0, c))?;
                for k in 1..self.cols {
                    acc = acc.add(&self.get(r, k).mul(other.get(k, c))?)?;
                }
                entries.push(acc);
            }
        }
        Ok(SeriesMatrix { rows: self.rows, cols: other.cols, entries })
    }

    pub fn add(&self, other: &SeriesMatrix) -> Result<SeriesMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch { expected: self.rows, found: other.rows });
        }
        let mut entries = Vec::with_capacity(self.entries.len());
        for (a, b) in self.entries.iter().zip(&other.entries) {
            entries.push(a.add(b)?);
        }
        Ok(SeriesMatrix { rows: self.rows, cols: self.cols, entries })
    }

    pub fn neg(&self) -> SeriesMatrix {
        SeriesMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(TruncatedSeries::neg).collect(),
        }
    }

    pub fn scale_constant(&self, m: &QiMatrix) -> Result<SeriesMatrix> {
        // constant matrix times series matrix
        if m.cols() != self.rows {
            return Err(Error::DimensionMismatch { expected: m.cols(), found: self.rows });
        }
        let mut entries = Vec::with_capacity(m.rows() * self.cols);
        for r in 0..m.rows() {
            for c in 0..self.cols {
                let mut acc = self.get(0, c).scale(m.get(r, 0));
                for k in 1..self.rows {
                    acc = acc.add(&self.get(k, c).scale(m.get(r, k)))?;
                }
                entries.push(acc);
            }
        }
        Ok(SeriesMatrix { rows: m.rows(), cols: self.cols, entries })
    }

    /// Constant parts of all entries as an exact matrix.
    pub fn constant_part(&self) -> QiMatrix {
        let mut m = QiMatrix::zero(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m.set(r, c, self.get(r, c).constant_term());
            }
        }
        m
    }

    /// Determinant by Laplace expansion along the first column. Intended
    /// for the small minors arising from derivative ranks.
    pub fn det(&self) -> Result<TruncatedSeries> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch { expected: self.rows, found: self.cols });
        }
        let first = self
            .entries
            .first()
            .ok_or(Error::DimensionMismatch { expected: 1, found: 0 })?;
        let (vars, order) = (first.vars().clone(), first.order());
        let idx: Vec<usize> = (0..self.rows).collect();
        self.det_minor(&idx, &idx, &vars, order)
    }

    fn det_minor(
        &self,
        rows: &[usize],
        cols: &[usize],
        vars: &VariableBlocks,
        order: u32,
    ) -> Result<TruncatedSeries> {
        match rows.len() {
            0 => return Ok(TruncatedSeries::one(vars, order)),
            1 => return Ok(self.get(rows[0], cols[0]).clone()),
            _ => {}
        }
        let sub_cols: Vec<usize> = cols[1..].to_vec();
        let mut acc = TruncatedSeries::zero(vars, order);
        for (k, &r) in rows.iter().enumerate() {
            let entry = self.get(r, cols[0]);
            if entry.is_zero_series() {
                continue;
            }
            let sub_rows: Vec<usize> =
                rows.iter().copied().filter(|&x| x != r).collect();
            let minor = self.det_minor(&sub_rows, &sub_cols, vars, order)?;
            let signed = if k % 2 == 0 { entry.mul(&minor)? } else { entry.mul(&minor)?.neg() };
            acc = acc.add(&signed)?;
        }
        Ok(acc)
    }

    /// Inverse of a series matrix whose constant part is invertible, via
    /// the geometric series on the valuation-positive remainder.
    pub fn inverse_unit(&self, context: &'static str) -> Result<SeriesMatrix> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch { expected: self.rows, found: self.cols });
        }
        let first = self
            .entries
            .first()
            .ok_or(Error::DimensionMismatch { expected: 1, found: 0 })?;
        let (vars, order) = (first.vars().clone(), first.order());
        let c_inv = self.constant_part().inverse(context)?;
        // A = C(I + N) with val(N) >= 1, so A^{-1} = (sum (-N)^k) C^{-1};
        // the series below carry truncated data, so drop exactness flags
        let n = SeriesMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .scale_constant(&c_inv)?
                .add(&SeriesMatrix::identity(&vars, order, self.rows).neg())?
                .entries
                .into_iter()
                .map(TruncatedSeries::forget_exactness)
                .collect(),
        };
        let minus_n = n.neg();
        let mut acc = SeriesMatrix::identity(&vars, order, self.rows);
        let mut pw = SeriesMatrix::identity(&vars, order, self.rows);
        for _ in 0..order {
            pw = pw.mul(&minus_n)?;
            if pw.entries.iter().all(TruncatedSeries::is_zero_series) {
                break;
            }
            acc = acc.add(&pw)?;
        }
        let mut inv_entries = Vec::with_capacity(self.entries.len());
        // acc * C^{-1}: series matrix times constant matrix
        for r in 0..self.rows {
            for c in 0..self.cols {
                let mut e = acc.get(r, 0).scale(c_inv.get(0, c));
                for k in 1..self.cols {
                    e = e.add(&acc.get(r, k).scale(c_inv.get(k, c)))?;
                }
                inv_entries.push(e.forget_exactness());
            }
        }
        Ok(SeriesMatrix { rows: self.rows, cols: self.cols, entries: inv_entries })
    }
}

/// All k-element subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussianRational as Q;

    fn q(n: i64) -> Q {
        Q::from_integer(n)
    }

    #[test]
    fn rank_det_inverse() {
        let m = QiMatrix::from_rows(vec![
            vec![q(1), Q::i()],
            vec![Q::i(), q(1)],
        ])
        .unwrap();
        assert_eq!(m.rank(), 2);
        assert_eq!(m.det().unwrap(), q(2));
        let inv = m.inverse("test").unwrap();
        // [[1, i], [i, 1]]^{-1} = 1/2 [[1, -i], [-i, 1]]
        assert_eq!(inv.get(0, 0), &Q::from_ratio(1, 2));
        assert_eq!(inv.get(0, 1), &Q::from_ratio_imag(-1, 2));
        let singular = QiMatrix::from_rows(vec![
            vec![q(1), q(2)],
            vec![q(2), q(4)],
        ])
        .unwrap();
        assert_eq!(singular.rank(), 1);
        assert!(singular.det().unwrap().is_zero());
        assert!(matches!(singular.inverse("test"), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn nullspace_solves_homogeneous_system() {
        // x + y + z = 0, x - z = 0
        let m = QiMatrix::from_rows(vec![
            vec![q(1), q(1), q(1)],
            vec![q(1), q(0), q(-1)],
        ])
        .unwrap();
        let basis = m.nullspace();
        assert_eq!(basis.len(), 1);
        for v in &basis {
            let image = m.mul_vec(v).unwrap();
            assert!(image.iter().all(Q::is_zero));
        }
        // the kernel is spanned by (1, -2, 1)
        let v = &basis[0];
        assert_eq!(&v[0], &v[2]);
        assert_eq!(v[1], -&(&q(2) * &v[0]));
    }

    #[test]
    fn rank_tracker_matches_batch_rank() {
        let rows = vec![
            vec![q(1), q(2), q(3)],
            vec![q(2), q(4), q(6)],
            vec![q(0), Q::i(), q(1)],
            vec![q(1), q(2) + Q::i(), q(4)],
        ];
        let mut tracker = RankTracker::new();
        let accepted: Vec<bool> = rows.iter().map(|r| tracker.offer(r)).collect();
        assert_eq!(accepted, vec![true, false, true, false]);
        assert_eq!(tracker.rank(), QiMatrix::from_rows(rows).unwrap().rank());
    }

    #[test]
    fn series_determinant_and_inverse() {
        let vars = VariableBlocks::new(&[("z", 1)]).unwrap();
        let one = TruncatedSeries::one(&vars, 3);
        let z = TruncatedSeries::variable(&vars, 3, 0).unwrap();
        // [[1, z], [z, 1]]: det = 1 - z², inverse = 1/(1-z²) [[1, -z], [-z, 1]]
        let m = SeriesMatrix::from_rows(vec![
            vec![one.clone(), z.clone()],
            vec![z.clone(), one.clone()],
        ])
        .unwrap();
        let det = m.det().unwrap();
        let z2 = z.mul(&z).unwrap();
        assert_eq!(det, one.sub(&z2).unwrap());
        let inv = m.inverse_unit("test").unwrap();
        let prod = m.mul(&inv).unwrap();
        let id = SeriesMatrix::identity(&vars, 3, 2);
        for r in 0..2 {
            for c in 0..2 {
                assert_eq!(prod.get(r, c).terms().collect::<Vec<_>>(), id.get(r, c).terms().collect::<Vec<_>>());
            }
        }
    }
}
