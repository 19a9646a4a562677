//! Block LDLᵀ solves for complex-shifted symmetric block tridiagonal matrices.
//!
//! The factorization runs without pivoting. The matrices seen here are
//! `T + sI` with `T` symmetric positive (semi)definite and `s` off the
//! negative real axis, or the rank-p last-block modifications of such, so the
//! pivots stay away from zero unless the shift sits on the spectrum.

use num_complex::Complex64;

use crate::linalg::{row_block, to_complex, try_inverse_c, CMat, RMat};

/// Symmetric block tridiagonal matrix with complex diagonal blocks and real
/// sub-diagonal blocks. `sub[i]` sits at block position `(i + 1, i)`.
#[derive(Debug, Clone)]
pub struct BlockTridiagonal {
    pub diag: Vec<CMat>,
    pub sub: Vec<RMat>,
}

/// Failure of the block factorization at a given (0-based) block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularPivot {
    pub block: usize,
}

impl BlockTridiagonal {
    /// `T + sI` from real diagonal blocks `alphas` and sub-diagonal blocks `betas`.
    pub fn shifted(alphas: &[RMat], betas: &[RMat], s: Complex64) -> Self {
        let diag = alphas
            .iter()
            .map(|a| {
                let mut c = to_complex(a);
                for i in 0..c.nrows() {
                    c[(i, i)] += s;
                }
                c
            })
            .collect();
        Self {
            diag,
            sub: betas.to_vec(),
        }
    }

    pub fn blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn block_size(&self) -> usize {
        self.diag[0].nrows()
    }

    pub fn to_dense(&self) -> CMat {
        let p = self.block_size();
        let m = self.blocks();
        let mut t = CMat::zeros(m * p, m * p);
        for (k, d) in self.diag.iter().enumerate() {
            t.view_mut((k * p, k * p), (p, p)).copy_from(d);
        }
        for (k, b) in self.sub.iter().enumerate() {
            let bc = to_complex(b);
            t.view_mut(((k + 1) * p, k * p), (p, p)).copy_from(&bc);
            t.view_mut((k * p, (k + 1) * p), (p, p)).copy_from(&bc.transpose());
        }
        t
    }

    pub fn factor(&self) -> Result<BlockLdl, SingularPivot> {
        let m = self.blocks();
        let mut d_inv = Vec::with_capacity(m);
        let mut prev: Option<CMat> = None;
        for k in 0..m {
            let mut d = self.diag[k].clone();
            if let Some(pinv) = &prev {
                let b = to_complex(&self.sub[k - 1]);
                d -= &b * pinv * b.transpose();
            }
            let inv = try_inverse_c(&d).ok_or(SingularPivot { block: k })?;
            prev = Some(inv.clone());
            d_inv.push(inv);
        }
        Ok(BlockLdl {
            d_inv,
            sub: self.sub.iter().map(to_complex).collect(),
        })
    }
}

/// Factors `L D Lᵀ` with `L` unit block lower bidiagonal, `L_k = B_k D_{k-1}^{-1}`.
#[derive(Debug, Clone)]
pub struct BlockLdl {
    d_inv: Vec<CMat>,
    sub: Vec<CMat>,
}

impl BlockLdl {
    pub fn blocks(&self) -> usize {
        self.d_inv.len()
    }

    /// Solves with an (m·p)×q right-hand side.
    pub fn solve(&self, rhs: &CMat) -> CMat {
        let m = self.blocks();
        let p = self.d_inv[0].nrows();
        let mut y: Vec<CMat> = (0..m).map(|k| row_block(rhs, k, p)).collect();
        for k in 1..m {
            let l = &self.sub[k - 1] * &self.d_inv[k - 1];
            let upd = l * &y[k - 1];
            y[k] -= upd;
        }
        let mut x: Vec<CMat> = y
            .iter()
            .zip(&self.d_inv)
            .map(|(yk, dk)| dk * yk)
            .collect();
        for k in (0..m.saturating_sub(1)).rev() {
            // L_{k+1}ᵀ = D_k^{-1} B_kᵀ by symmetry of D_k.
            let lt = &self.d_inv[k] * self.sub[k].transpose();
            let upd = lt * &x[k + 1];
            x[k] -= upd;
        }
        let mut out = CMat::zeros(m * p, rhs.ncols());
        for (k, xk) in x.iter().enumerate() {
            out.rows_mut(k * p, p).copy_from(xk);
        }
        out
    }

    /// Solves with `E_k` (identity in block `k`, zero elsewhere).
    pub fn solve_unit_block(&self, k: usize) -> CMat {
        let p = self.d_inv[0].nrows();
        let mut rhs = CMat::zeros(self.blocks() * p, p);
        for i in 0..p {
            rhs[(k * p + i, i)] = Complex64::new(1.0, 0.0);
        }
        self.solve(&rhs)
    }
}
