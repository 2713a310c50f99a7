use std::fmt;

use super::basis::{ColumnBasis, WordBasis};
use super::bitvec::{words_for, BitVec};
use crate::error::{Error, Result};

/// Default cap on the side length of a materialized Kronecker power.
pub const DEFAULT_KRON_CAP: usize = 1 << 12;

/// A rectangular matrix over GF(2) with bit-packed rows.
///
/// Bit `j` of row `i` is entry `(i, j)`. Padding bits past `cols` are zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

/// `d_j = dim(V ∩ E_j)` for `j = 0..=n`, where `E_j` is spanned by the
/// first `j` unit vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixDims(pub Vec<usize>);

impl PrefixDims {
    /// Positions `i` (1-based) where the dimension grows: `d_i > d_{i-1}`.
    pub fn increments(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.windows(2).enumerate().filter(|(_, w)| w[1] > w[0]).map(|(j, _)| j + 1)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        let stride = words_for(cols);
        Ok(BitMatrix { rows, cols, stride, data: vec![0; rows * stride] })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.set(i, i, true);
        }
        Ok(m)
    }

    pub fn from_bools(rows: &[Vec<bool>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = Self::zeros(r, c)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::DimensionMismatch { expected: c, actual: row.len() });
            }
            for (j, &b) in row.iter().enumerate() {
                m.set(i, j, b);
            }
        }
        Ok(m)
    }

    /// Rows given as 0/1 digits, e.g. `&[&[1, 0], &[1, 1]]`.
    pub fn from_digits(rows: &[&[u8]]) -> Result<Self> {
        let rows: Vec<Vec<bool>> = rows.iter().map(|r| r.iter().map(|&d| d != 0).collect()).collect();
        Self::from_bools(&rows)
    }

    /// Square/rectangular matrix with at most 64 columns, one word per row.
    pub fn from_row_words(cols: usize, rows: &[u64]) -> Result<Self> {
        if cols > 64 {
            return Err(Error::InvalidArgument(format!("{cols} columns do not fit a single word")));
        }
        let mut m = Self::zeros(rows.len(), cols)?;
        let mask = if cols == 64 { u64::MAX } else { (1u64 << cols) - 1 };
        for (i, &w) in rows.iter().enumerate() {
            m.data[i] = w & mask;
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        (self.data[i * self.stride + j / 64] >> (j % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        let w = &mut self.data[i * self.stride + j / 64];
        let mask = 1u64 << (j % 64);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }

    pub fn row(&self, i: usize) -> BitVec {
        BitVec::from_words(self.cols, self.row_words(i).to_vec())
    }

    pub fn column(&self, j: usize) -> BitVec {
        let mut v = BitVec::zeros(self.rows);
        for i in 0..self.rows {
            if self.get(i, j) {
                v.set(i, true);
            }
        }
        v
    }

    /// Columns packed one word each (bit `i` = row `i`); requires `rows <= 64`.
    pub fn column_words(&self) -> Result<Vec<u64>> {
        if self.rows > 64 {
            return Err(Error::InvalidArgument(format!("{} rows do not fit a single word", self.rows)));
        }
        let mut cols = vec![0u64; self.cols];
        for i in 0..self.rows {
            for j in self.row(i).ones() {
                cols[j] |= 1 << i;
            }
        }
        Ok(cols)
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows).expect("non-empty");
        for i in 0..self.rows {
            for j in self.row(i).ones() {
                t.set(j, i, true);
            }
        }
        t
    }

    /// Row rank by Gaussian elimination on a copy.
    pub fn rank(&self) -> usize {
        let mut data = self.data.clone();
        let stride = self.stride;
        let mut rank = 0;
        for col in 0..self.cols {
            let (w, b) = (col / 64, col % 64);
            let Some(p) = (rank..self.rows).find(|&r| data[r * stride + w] >> b & 1 == 1) else {
                continue;
            };
            if p != rank {
                for k in 0..stride {
                    data.swap(p * stride + k, rank * stride + k);
                }
            }
            for r in (rank + 1)..self.rows {
                if data[r * stride + w] >> b & 1 == 1 {
                    for k in w..stride {
                        data[r * stride + k] ^= data[rank * stride + k];
                    }
                }
            }
            rank += 1;
            if rank == self.rows {
                break;
            }
        }
        rank
    }

    pub fn is_nonsingular(&self) -> bool {
        self.is_square() && self.rank() == self.rows
    }

    /// Row-vector product `u · M`.
    pub fn vec_mul(&self, u: &BitVec) -> Result<BitVec> {
        if u.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, actual: u.len() });
        }
        let mut out = vec![0u64; self.stride];
        for i in u.ones() {
            for (o, r) in out.iter_mut().zip(self.row_words(i)) {
                *o ^= r;
            }
        }
        Ok(BitVec::from_words(self.cols, out))
    }

    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, actual: other.rows });
        }
        let mut out = BitMatrix::zeros(self.rows, other.cols)?;
        for i in 0..self.rows {
            let prod = other.vec_mul(&self.row(i))?;
            out.data[i * out.stride..(i + 1) * out.stride].copy_from_slice(prod.words());
        }
        Ok(out)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &BitMatrix) -> Result<BitMatrix> {
        let rows = self.rows.checked_mul(other.rows).ok_or(Error::SizeOverflow { size: u128::MAX, cap: usize::MAX as u128 })?;
        let cols = self.cols.checked_mul(other.cols).ok_or(Error::SizeOverflow { size: u128::MAX, cap: usize::MAX as u128 })?;
        let mut out = BitMatrix::zeros(rows, cols)?;
        for i1 in 0..self.rows {
            for j1 in self.row(i1).ones() {
                for i2 in 0..other.rows {
                    for j2 in other.row(i2).ones() {
                        out.set(i1 * other.rows + i2, j1 * other.cols + j2, true);
                    }
                }
            }
        }
        Ok(out)
    }

    /// `K^{⊗m}` with the default size cap.
    pub fn kron_power(&self, m: usize) -> Result<BitMatrix> {
        self.kron_power_capped(m, DEFAULT_KRON_CAP)
    }

    pub fn kron_power_capped(&self, m: usize, cap: usize) -> Result<BitMatrix> {
        if !self.is_square() {
            return Err(Error::NotSquare { rows: self.rows, cols: self.cols });
        }
        if m == 0 {
            return Err(Error::InvalidArgument("Kronecker power needs m >= 1".into()));
        }
        let size = (self.rows as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
        if size > cap as u128 {
            return Err(Error::SizeOverflow { size, cap: cap as u128 });
        }
        let mut acc = self.clone();
        for _ in 1..m {
            acc = acc.kron(self)?;
        }
        Ok(acc)
    }

    /// Whether `v` is a GF(2) combination of the columns.
    pub fn in_column_space(&self, v: &BitVec) -> Result<bool> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, actual: v.len() });
        }
        let mut basis = ColumnBasis::new(self.rows);
        for j in 0..self.cols {
            basis.insert(self.column(j));
        }
        Ok(basis.contains(v))
    }

    /// `dim(colspace ∩ E_j)` for every `j`, from a single elimination pass.
    pub fn prefix_intersection_dims(&self) -> PrefixDims {
        let pivots: Vec<bool> = if self.rows <= 64 {
            let mut basis = WordBasis::new();
            for c in self.column_words().expect("rows <= 64") {
                basis.insert(c);
            }
            (0..self.rows).map(|t| basis.pivots() >> t & 1 == 1).collect()
        } else {
            let mut basis = ColumnBasis::new(self.rows);
            for j in 0..self.cols {
                basis.insert(self.column(j));
            }
            (0..self.rows).map(|t| basis.is_pivot(t)).collect()
        };
        let mut dims = Vec::with_capacity(self.rows + 1);
        dims.push(0);
        let mut d = 0;
        for p in pivots {
            d += p as usize;
            dims.push(d);
        }
        PrefixDims(dims)
    }

    /// True iff no column permutation of this (square, nonsingular) matrix is
    /// upper triangular.
    ///
    /// A column may sit at position `p` of an upper-triangular arrangement iff
    /// its lowest nonzero row is at most `p`; sorting those rows and checking
    /// the greedy assignment decides the matching.
    pub fn is_polarizing(&self) -> Result<bool> {
        if !self.is_square() {
            return Err(Error::NotSquare { rows: self.rows, cols: self.cols });
        }
        if !self.is_nonsingular() {
            return Err(Error::Singular);
        }
        let mut lowest: Vec<usize> = (0..self.cols)
            .map(|j| self.column(j).top_bit().expect("nonsingular matrix has no zero column"))
            .collect();
        lowest.sort_unstable();
        Ok(lowest.iter().enumerate().any(|(p, &r)| r > p))
    }

    /// Kernel text format: `l=<n>` followed by `n` rows of `0`/`1` characters.
    pub fn to_kernel_text(&self) -> String {
        let mut s = format!("l={}\n", self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                s.push(if self.get(i, j) { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    pub fn parse_kernel_text(text: &str) -> Result<BitMatrix> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(Error::Parse { line: 1, msg: "empty input".into() })?;
        let ell: usize = header
            .trim()
            .strip_prefix("l=")
            .ok_or(Error::Parse { line: 1, msg: format!("expected `l=<size>`, got `{header}`") })?
            .parse()
            .map_err(|e| Error::Parse { line: 1, msg: format!("bad size: {e}") })?;
        if ell == 0 {
            return Err(Error::Parse { line: 1, msg: "size must be positive".into() });
        }
        let mut m = BitMatrix::zeros(ell, ell)?;
        for i in 0..ell {
            let line = lines.next().ok_or(Error::Parse { line: i + 2, msg: "missing row".into() })?;
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.chars().count() != ell {
                return Err(Error::Parse { line: i + 2, msg: format!("row must have exactly {ell} characters") });
            }
            for (j, ch) in line.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => m.set(i, j, true),
                    other => return Err(Error::Parse { line: i + 2, msg: format!("unexpected character `{other}`") }),
                }
            }
        }
        if let Some((k, extra)) = lines.enumerate().find(|(_, l)| !l.trim().is_empty()) {
            return Err(Error::Parse { line: ell + 2 + k, msg: format!("trailing content `{extra}`") });
        }
        Ok(m)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let s: String = (0..self.cols).map(|j| if self.get(i, j) { '1' } else { '0' }).collect();
            writeln!(f, "  {s}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arikan() -> BitMatrix {
        BitMatrix::from_digits(&[&[1, 0], &[1, 1]]).unwrap()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(BitMatrix::identity(4).unwrap().rank(), 4);
        assert_eq!(BitMatrix::zeros(3, 3).unwrap().rank(), 0);
        assert_eq!(arikan().rank(), 2);
    }

    #[test]
    fn column_space_examples() {
        let m = BitMatrix::from_digits(&[&[1], &[1]]).unwrap();
        assert!(m.in_column_space(&BitVec::from_bools(&[true, true])).unwrap());
        assert!(!m.in_column_space(&BitVec::from_bools(&[true, false])).unwrap());
        assert!(m.in_column_space(&BitVec::zeros(2)).unwrap());
        assert!(matches!(
            m.in_column_space(&BitVec::zeros(3)),
            Err(Error::DimensionMismatch { expected: 2, actual: 3 })
        ));
    }

    #[test]
    fn prefix_dims_examples() {
        assert_eq!(BitMatrix::identity(2).unwrap().prefix_intersection_dims().0, vec![0, 1, 2]);
        let col = BitMatrix::from_digits(&[&[0], &[1]]).unwrap();
        assert_eq!(col.prefix_intersection_dims().0, vec![0, 0, 1]);
        assert_eq!(arikan().prefix_intersection_dims().0, vec![0, 1, 2]);
    }

    #[test]
    fn kron_power_examples() {
        let k = arikan();
        assert_eq!(k.kron_power(1).unwrap(), k);
        let k2 = BitMatrix::from_digits(&[&[1, 0, 0, 0], &[1, 1, 0, 0], &[1, 0, 1, 0], &[1, 1, 1, 1]]).unwrap();
        assert_eq!(k.kron_power(2).unwrap(), k2);
        assert_eq!(BitMatrix::identity(2).unwrap().kron_power(3).unwrap(), BitMatrix::identity(8).unwrap());
        assert!(matches!(k.kron_power_capped(13, 4096), Err(Error::SizeOverflow { .. })));
        assert!(matches!(k.kron_power(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn polarizing_examples() {
        assert!(arikan().is_polarizing().unwrap());
        assert!(!BitMatrix::identity(2).unwrap().is_polarizing().unwrap());
        let swap = BitMatrix::from_digits(&[&[0, 1], &[1, 0]]).unwrap();
        assert!(!swap.is_polarizing().unwrap());
        let singular = BitMatrix::from_digits(&[&[1, 1], &[1, 1]]).unwrap();
        assert_eq!(singular.is_polarizing(), Err(Error::Singular));
    }

    #[test]
    fn kernel_text_roundtrip_and_errors() {
        let k = arikan();
        let text = k.to_kernel_text();
        assert_eq!(text, "l=2\n10\n11\n");
        assert_eq!(BitMatrix::parse_kernel_text(&text).unwrap(), k);
        assert_eq!(BitMatrix::parse_kernel_text("l=2\n10\n11").unwrap(), k);
        assert!(BitMatrix::parse_kernel_text("l=2\n10\n1").is_err());
        assert!(BitMatrix::parse_kernel_text("l=2\n10\n12\n").is_err());
        assert!(BitMatrix::parse_kernel_text("n=2\n10\n11\n").is_err());
        assert!(BitMatrix::parse_kernel_text("l=2\n10\n11\n01\n").is_err());
    }

    #[test]
    fn multiword_rank_and_vec_mul() {
        let k = arikan().kron_power(7).unwrap(); // 128 x 128, lower triangular
        assert_eq!(k.rank(), 128);
        let mut u = BitVec::zeros(128);
        u.set(127, true);
        assert_eq!(k.vec_mul(&u).unwrap().count_ones(), 128);
        let dims = k.prefix_intersection_dims();
        assert_eq!(dims.0.last(), Some(&128));
    }
}
