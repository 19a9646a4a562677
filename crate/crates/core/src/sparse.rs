//! Symmetric sparse operator in compressed row form.

use crate::error::{Error, Result};
use crate::linalg::{BlockVector, RMat};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSpdOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSpdOperator {
    /// Builds the operator from `(row, col, value)` triplets, summing duplicates.
    /// The triplets must describe the full (both triangles) matrix.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch(format!(
                    "triplet ({i}, {j}) outside {n}x{n}"
                )));
            }
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            let mut iter = row.into_iter().peekable();
            while let Some((j, mut v)) = iter.next() {
                while let Some(&(j2, v2)) = iter.peek() {
                    if j2 != j {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        let op = Self {
            n,
            row_ptr,
            col_idx,
            values,
        };
        let asym = op.asymmetry();
        if asym > 1e-14 * op.max_abs().max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidArgument(format!(
                "operator is not symmetric (max deviation {asym:e})"
            )));
        }
        Ok(op)
    }

    pub fn from_dense(a: &RMat) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch("operator must be square".into()));
        }
        let mut t = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.nrows(), &t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|a_ij − a_ji|` over the stored pattern.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                col[j] += v.abs();
            }
        }
        col.into_iter().fold(0.0, f64::max)
    }

    /// Largest `|i − j|` over the stored pattern.
    pub fn half_bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    /// `A X` for an n×p block.
    pub fn apply(&self, x: &BlockVector) -> Result<BlockVector> {
        if x.nrows() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "operator is {0}x{0}, block has {1} rows",
                self.n,
                x.nrows()
            )));
        }
        let p = x.ncols();
        let mut y = RMat::zeros(self.n, p);
        for c in 0..p {
            let xc = x.column(c);
            let mut yc = y.column_mut(c);
            for i in 0..self.n {
                yc[i] = self.row(i).map(|(j, v)| v * xc[j]).sum();
            }
        }
        Ok(y)
    }

    /// `Aᵀ X` computed by scattering through the stored rows.
    pub fn apply_transpose(&self, x: &BlockVector) -> Result<BlockVector> {
        if x.nrows() != self.n {
            return Err(Error::DimensionMismatch("block rows".into()));
        }
        let p = x.ncols();
        let mut y = RMat::zeros(self.n, p);
        for c in 0..p {
            for i in 0..self.n {
                let xi = x[(i, c)];
                for (j, v) in self.row(i) {
                    y[(j, c)] += v * xi;
                }
            }
        }
        Ok(y)
    }

    pub fn to_dense(&self) -> RMat {
        let mut a = RMat::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                a[(i, j)] = v;
            }
        }
        a
    }

    /// `(i, j, v)` triplets of the lower triangle, row-major.
    pub fn lower_triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n)
            .flat_map(|i| self.row(i).filter(move |&(j, _)| j <= i).map(move |(j, v)| (i, j, v)))
            .collect()
    }

    /// `D A D` for a diagonal scaling `d`.
    pub fn scaled_symmetric(&self, d: &[f64]) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.values[k] *= d[i] * d[self.col_idx[k]];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn duplicates_are_summed() {
        let op = SparseSpdOperator::from_triplets(2, &[(0, 0, 1.0), (0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)])
            .unwrap();
        assert_eq!(op.to_dense(), RMat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]));
        assert_eq!(op.nnz(), 4);
        assert_eq!(op.half_bandwidth(), 1);
    }

    #[test]
    fn rejects_asymmetric_input() {
        assert!(SparseSpdOperator::from_triplets(2, &[(0, 1, 1.0)]).is_err());
    }

    #[test]
    fn apply_equals_transpose_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0 + rng.gen::<f64>()));
            for _ in 0..3 {
                let j = rng.gen_range(0..n);
                if j != i {
                    let v = rng.gen_range(-1.0..1.0);
                    t.push((i, j, v));
                    t.push((j, i, v));
                }
            }
        }
        let op = SparseSpdOperator::from_triplets(n, &t).unwrap();
        let x = RMat::from_fn(n, 3, |_, _| rng.gen_range(-1.0..1.0));
        let y1 = op.apply(&x).unwrap();
        let y2 = op.apply_transpose(&x).unwrap();
        assert!((&y1 - &y2).norm() <= 1e-14 * y1.norm());
        assert!((y1 - op.to_dense() * &x).norm() <= 1e-13);
    }
}
