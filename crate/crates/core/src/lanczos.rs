//! Block Lanczos iteration.
//!
//! [`BlockLanczos`] is the incremental driver: it owns the three-term
//! recurrence state and can be snapshotted into a [`LanczosDecomposition`]
//! after any number of steps, which lets convergence studies reuse one run
//! for every checkpoint. [`block_lanczos`] is the one-shot wrapper.
//!
//! The residual block `Q_{m+1} β_{m+1}` is the QR factorization of the last
//! `W`, so it comes for free after `m` products with `A`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{block_qr, symmetrize, sym_eigenvalues, BlockVector, RMat, SmallMatrix, RANK_TOL};
use crate::sparse::SparseSpdOperator;
use crate::tridiag::BlockTridiagonal;

/// Coefficients `α_1..α_m` and `β_2..β_m` of the block tridiagonal `T_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockJacobi {
    pub alphas: Vec<SmallMatrix>,
    pub betas: Vec<SmallMatrix>,
}

impl BlockJacobi {
    pub fn new(alphas: Vec<SmallMatrix>, betas: Vec<SmallMatrix>) -> Result<Self> {
        if alphas.is_empty() || betas.len() + 1 != alphas.len() {
            return Err(Error::DimensionMismatch(format!(
                "need m alphas and m-1 betas, got {} and {}",
                alphas.len(),
                betas.len()
            )));
        }
        let p = alphas[0].nrows();
        if alphas.iter().chain(&betas).any(|b| b.shape() != (p, p)) {
            return Err(Error::DimensionMismatch("all blocks must be p x p".into()));
        }
        Ok(Self { alphas, betas })
    }

    /// Scalar (p = 1) convenience constructor.
    pub fn scalar(alphas: &[f64], betas: &[f64]) -> Result<Self> {
        Self::new(
            alphas.iter().map(|&a| RMat::from_element(1, 1, a)).collect(),
            betas.iter().map(|&b| RMat::from_element(1, 1, b)).collect(),
        )
    }

    pub fn m(&self) -> usize {
        self.alphas.len()
    }

    pub fn p(&self) -> usize {
        self.alphas[0].nrows()
    }

    /// Leading `k` blocks.
    pub fn truncated(&self, k: usize) -> Self {
        Self {
            alphas: self.alphas[..k].to_vec(),
            betas: self.betas[..k - 1].to_vec(),
        }
    }

    /// `T_m + sI` in block form.
    pub fn shifted(&self, s: Complex64) -> BlockTridiagonal {
        BlockTridiagonal::shifted(&self.alphas, &self.betas, s)
    }

    /// Ascending eigenvalues of `T_m`.
    pub fn ritz_values(&self) -> Vec<f64> {
        sym_eigenvalues(&assemble_tridiagonal(self))
    }
}

/// `Q_{m+1}` and `β_{m+1}` from the final `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub q: BlockVector,
    pub beta: SmallMatrix,
}

#[derive(Debug, Clone)]
pub struct LanczosDecomposition {
    pub jacobi: BlockJacobi,
    /// `Q_m = [Q_1, …, Q_m]`, n×(mp), when requested.
    pub basis: Option<RMat>,
    /// `None` when the final `W` is numerically rank deficient.
    pub residual: Option<Residual>,
    /// `R_B` with `B_raw = B R_B`.
    pub rhs_factor: SmallMatrix,
}

impl LanczosDecomposition {
    /// Decomposition carrying only coefficients (no basis, no residual).
    pub fn from_jacobi(jacobi: BlockJacobi) -> Self {
        let p = jacobi.p();
        Self {
            jacobi,
            basis: None,
            residual: None,
            rhs_factor: RMat::identity(p, p),
        }
    }

    pub fn m(&self) -> usize {
        self.jacobi.m()
    }

    pub fn p(&self) -> usize {
        self.jacobi.p()
    }

    /// Maps a transfer value for the orthonormalized `B` to the raw input
    /// block: `R_Bᵀ F R_B`.
    pub fn to_raw(&self, f: &crate::linalg::CMat) -> crate::linalg::CMat {
        let r = crate::linalg::to_complex(&self.rhs_factor);
        r.transpose() * f * r
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Two-pass classical Gram–Schmidt against every stored block.
    pub reorth: bool,
    pub keep_basis: bool,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            reorth: true,
            keep_basis: false,
        }
    }
}

/// `B_raw = B R_B` with `B` orthonormal.
pub fn normalize_rhs(b_raw: &BlockVector) -> Result<(BlockVector, SmallMatrix)> {
    block_qr(b_raw)
}

/// Incremental block Lanczos state.
pub struct BlockLanczos<'a> {
    op: &'a SparseSpdOperator,
    opts: LanczosOptions,
    blocks: Vec<BlockVector>,
    q_prev: Option<BlockVector>,
    q_cur: BlockVector,
    w: BlockVector,
    aq_norm: f64,
    alphas: Vec<SmallMatrix>,
    betas: Vec<SmallMatrix>,
    rhs_factor: SmallMatrix,
    next_qr: Option<Option<(BlockVector, SmallMatrix)>>,
}

impl<'a> BlockLanczos<'a> {
    /// Orthonormalizes `b_raw` and performs the first step (`α_1`).
    pub fn new(op: &'a SparseSpdOperator, b_raw: &BlockVector, opts: LanczosOptions) -> Result<Self> {
        if b_raw.nrows() != op.n() {
            return Err(Error::DimensionMismatch(format!(
                "operator is {0}x{0}, B has {1} rows",
                op.n(),
                b_raw.nrows()
            )));
        }
        let (q1, rhs_factor) = normalize_rhs(b_raw)?;
        let mut me = Self {
            op,
            opts,
            blocks: Vec::new(),
            q_prev: None,
            q_cur: q1.clone(),
            w: RMat::zeros(0, 0),
            aq_norm: 0.0,
            alphas: Vec::new(),
            betas: Vec::new(),
            rhs_factor,
            next_qr: None,
        };
        me.multiply(q1, None)?;
        Ok(me)
    }

    pub fn steps(&self) -> usize {
        self.alphas.len()
    }

    pub fn p(&self) -> usize {
        self.q_cur.ncols()
    }

    // W = A Q_i − Q_{i−1} β_iᵀ, α_i = Q_iᵀ W, W −= Q_i α_i (+ reorthogonalization).
    fn multiply(&mut self, q: BlockVector, beta: Option<&SmallMatrix>) -> Result<()> {
        let mut w = self.op.apply(&q)?;
        self.aq_norm = w.norm();
        if let (Some(prev), Some(beta)) = (&self.q_prev, beta) {
            w -= prev * beta.transpose();
        }
        let alpha = symmetrize(&q.tr_mul(&w));
        w -= &q * &alpha;
        if self.opts.reorth || self.opts.keep_basis {
            self.blocks.push(q.clone());
        }
        if self.opts.reorth {
            for _ in 0..2 {
                for qk in &self.blocks {
                    let c = qk.tr_mul(&w);
                    w -= qk * c;
                }
            }
        }
        self.alphas.push(alpha);
        self.q_cur = q;
        self.w = w;
        self.next_qr = None;
        Ok(())
    }

    fn residual_qr(&mut self) -> Option<(BlockVector, SmallMatrix)> {
        if self.next_qr.is_none() {
            let qr = block_qr(&self.w).ok().filter(|(_, r)| {
                let sv = r.singular_values();
                sv.min() > RANK_TOL * self.aq_norm
            });
            self.next_qr = Some(qr);
        }
        self.next_qr.clone().flatten()
    }

    /// Performs one more step. Fails with [`Error::Breakdown`] when the QR of
    /// `W` is rank deficient.
    pub fn advance(&mut self) -> Result<()> {
        let step = self.steps() + 1;
        if step * self.p() > self.op.n() {
            return Err(Error::DimensionMismatch(format!(
                "m*p = {} exceeds n = {}",
                step * self.p(),
                self.op.n()
            )));
        }
        let (q_next, beta) = self.residual_qr().ok_or(Error::Breakdown { step })?;
        let q_cur = std::mem::replace(&mut self.q_cur, RMat::zeros(0, 0));
        self.q_prev = Some(q_cur);
        self.multiply(q_next, Some(&beta))?;
        self.betas.push(beta);
        Ok(())
    }

    pub fn advance_to(&mut self, m: usize) -> Result<()> {
        while self.steps() < m {
            self.advance()?;
        }
        Ok(())
    }

    pub fn jacobi(&self) -> BlockJacobi {
        BlockJacobi {
            alphas: self.alphas.clone(),
            betas: self.betas.clone(),
        }
    }

    /// Snapshot after the steps performed so far.
    pub fn decomposition(&mut self) -> LanczosDecomposition {
        let residual = self.residual_qr().map(|(q, beta)| Residual { q, beta });
        let basis = self.opts.keep_basis.then(|| {
            let n = self.op.n();
            let p = self.p();
            let mut basis = RMat::zeros(n, self.blocks.len() * p);
            for (k, qk) in self.blocks.iter().enumerate() {
                basis.columns_mut(k * p, p).copy_from(qk);
            }
            basis
        });
        LanczosDecomposition {
            jacobi: self.jacobi(),
            basis,
            residual,
            rhs_factor: self.rhs_factor.clone(),
        }
    }
}

/// Runs `m` steps of block Lanczos on `A` with starting block `B`.
pub fn block_lanczos(
    op: &SparseSpdOperator,
    b: &BlockVector,
    m: usize,
    reorth: bool,
    keep_basis: bool,
) -> Result<LanczosDecomposition> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    if m * b.ncols() > op.n() {
        return Err(Error::DimensionMismatch(format!(
            "m*p = {} exceeds n = {}",
            m * b.ncols(),
            op.n()
        )));
    }
    let mut run = BlockLanczos::new(op, b, LanczosOptions { reorth, keep_basis })?;
    run.advance_to(m)?;
    Ok(run.decomposition())
}

/// Dense `(mp)×(mp)` matrix `T_m`.
pub fn assemble_tridiagonal(jac: &BlockJacobi) -> RMat {
    let p = jac.p();
    let m = jac.m();
    let mut t = RMat::zeros(m * p, m * p);
    for (k, a) in jac.alphas.iter().enumerate() {
        t.view_mut((k * p, k * p), (p, p)).copy_from(a);
    }
    for (k, b) in jac.betas.iter().enumerate() {
        t.view_mut(((k + 1) * p, k * p), (p, p)).copy_from(b);
        t.view_mut((k * p, (k + 1) * p), (p, p)).copy_from(&b.transpose());
    }
    t
}
