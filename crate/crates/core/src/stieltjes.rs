//! Stieltjes string parameters from the block LDLᵀ factorization of `T_m`.
//!
//! `T_m = K̂⁻ᵀ J Γ⁻¹ Jᵀ K̂⁻¹` with `J` block lower bidiagonal (`I` on the
//! diagonal, `−I` below), `K̂ = blkdiag(κ̂_i)` and `Γ = blkdiag(γ_i)`. The
//! masses `γ̂_i = κ̂_iᵀ κ̂_i` and lengths `γ_i` do not depend on the QR sign
//! convention used by the Lanczos run; the `κ̂_i` do.

use crate::error::{Error, Result};
use crate::lanczos::{BlockJacobi, LanczosDecomposition};
use crate::linalg::{symmetrize, sym_eigenvalues, try_inverse_r, RMat, SmallMatrix};

/// `κ̂_{m+1}` and `γ̂_{m+1}`, recoverable from `β_{m+1}` without another product with `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct StieltjesTail {
    pub kappa_hat: SmallMatrix,
    pub kappa_hat_inv: SmallMatrix,
    pub gamma_hat: SmallMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StieltjesParams {
    pub gammas: Vec<SmallMatrix>,
    /// `γ_i⁻¹` as produced by the recursion (more accurate than inverting `γ_i`).
    pub gamma_invs: Vec<SmallMatrix>,
    pub gamma_hats: Vec<SmallMatrix>,
    pub kappa_hats: Vec<SmallMatrix>,
    pub kappa_hat_invs: Vec<SmallMatrix>,
    pub tail: Option<StieltjesTail>,
}

impl StieltjesParams {
    pub fn m(&self) -> usize {
        self.gammas.len()
    }

    pub fn p(&self) -> usize {
        self.gammas[0].nrows()
    }

    /// Builds parameters directly from string masses and lengths, with
    /// `κ̂_i` taken as the symmetric square roots of `γ̂_i`. Used to create
    /// synthetic strings.
    pub fn from_string(gammas: Vec<SmallMatrix>, gamma_hats: Vec<SmallMatrix>) -> Result<Self> {
        if gammas.is_empty() || gammas.len() != gamma_hats.len() {
            return Err(Error::DimensionMismatch("need m gammas and m gamma_hats".into()));
        }
        let mut kappa_hats = Vec::with_capacity(gammas.len());
        let mut kappa_hat_invs = Vec::with_capacity(gammas.len());
        let mut gamma_invs = Vec::with_capacity(gammas.len());
        for (i, (g, gh)) in gammas.iter().zip(&gamma_hats).enumerate() {
            let eig = nalgebra::SymmetricEigen::new(symmetrize(gh));
            if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
                return Err(Error::SingularGamma { index: i + 1 });
            }
            let sqrt = &eig.eigenvectors
                * RMat::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
                * eig.eigenvectors.transpose();
            let inv = try_inverse_r(&sqrt).ok_or(Error::SingularGamma { index: i + 1 })?;
            kappa_hats.push(sqrt);
            kappa_hat_invs.push(inv);
            gamma_invs.push(symmetrize(
                &try_inverse_r(g).ok_or(Error::SingularGamma { index: i + 1 })?,
            ));
        }
        Ok(Self {
            gammas,
            gamma_invs,
            gamma_hats,
            kappa_hats,
            kappa_hat_invs,
            tail: None,
        })
    }
}

/// Block LDLᵀ extraction of `γ_i`, `κ̂_i`, `γ̂_i` from a Lanczos run.
/// With `with_tail`, `β_{m+1}` from the residual also yields `κ̂_{m+1}`, `γ̂_{m+1}`.
pub fn extract_stieltjes(dec: &LanczosDecomposition, with_tail: bool) -> Result<StieltjesParams> {
    let tail_beta = if with_tail {
        Some(&dec.residual.as_ref().ok_or(Error::MissingTail)?.beta)
    } else {
        None
    };
    extract_impl(&dec.jacobi, tail_beta, 1.0)
}

/// Extraction from bare coefficients, without tail.
pub fn extract_from_jacobi(jac: &BlockJacobi) -> Result<StieltjesParams> {
    extract_impl(jac, None, 1.0)
}

fn check_gamma_inv(g: &RMat, index: usize) -> Result<()> {
    let ev = sym_eigenvalues(g);
    let lo = ev[0];
    let hi = ev[ev.len() - 1];
    if !(lo > 1e-12 * hi) || !hi.is_finite() {
        return Err(Error::SingularGamma { index });
    }
    Ok(())
}

/// `kappa_sign` multiplies the `κ̂_i⁻¹` update; any value other than `1.0`
/// produces a deliberately wrong factorization (used for fault injection in
/// the self test).
pub(crate) fn extract_impl(
    jac: &BlockJacobi,
    tail_beta: Option<&SmallMatrix>,
    kappa_sign: f64,
) -> Result<StieltjesParams> {
    let m = jac.m();
    let p = jac.p();
    let eye = RMat::identity(p, p);

    let mut gamma_invs = Vec::with_capacity(m);
    let mut gammas = Vec::with_capacity(m);
    let mut kappa_hats = Vec::with_capacity(m);
    let mut kappa_hat_invs = Vec::with_capacity(m);

    let g1_inv = symmetrize(&jac.alphas[0]);
    check_gamma_inv(&g1_inv, 1)?;
    gammas.push(symmetrize(&try_inverse_r(&g1_inv).ok_or(Error::SingularGamma { index: 1 })?));
    gamma_invs.push(g1_inv);
    kappa_hats.push(eye.clone());
    kappa_hat_invs.push(eye.clone());

    for i in 1..m {
        // κ̂_i⁻¹ = −γ_{i−1} κ̂_{i−1}ᵀ β_iᵀ
        let k_inv = -(&gammas[i - 1] * kappa_hats[i - 1].transpose() * jac.betas[i - 1].transpose()) * kappa_sign;
        let k = try_inverse_r(&k_inv).ok_or(Error::SingularGamma { index: i + 1 })?;
        // γ_i⁻¹ = κ̂_iᵀ α_i κ̂_i − γ_{i−1}⁻¹
        let g_inv = symmetrize(&(k.transpose() * &jac.alphas[i] * &k - &gamma_invs[i - 1]));
        check_gamma_inv(&g_inv, i + 1)?;
        let g = symmetrize(&try_inverse_r(&g_inv).ok_or(Error::SingularGamma { index: i + 1 })?);
        gamma_invs.push(g_inv);
        gammas.push(g);
        kappa_hats.push(k);
        kappa_hat_invs.push(k_inv);
    }

    let tail = match tail_beta {
        Some(beta) => {
            let k_inv = -(&gammas[m - 1] * kappa_hats[m - 1].transpose() * beta.transpose());
            let k = try_inverse_r(&k_inv).ok_or(Error::SingularGamma { index: m + 1 })?;
            Some(StieltjesTail {
                gamma_hat: symmetrize(&(k.transpose() * &k)),
                kappa_hat: k,
                kappa_hat_inv: k_inv,
            })
        }
        None => None,
    };

    let gamma_hats = kappa_hats.iter().map(|k| symmetrize(&(k.transpose() * k))).collect();
    Ok(StieltjesParams {
        gammas,
        gamma_invs,
        gamma_hats,
        kappa_hats,
        kappa_hat_invs,
        tail,
    })
}

fn bidiagonal_j(m: usize, p: usize) -> RMat {
    let mut j = RMat::identity(m * p, m * p);
    for k in 1..m {
        for i in 0..p {
            j[(k * p + i, (k - 1) * p + i)] = -1.0;
        }
    }
    j
}

fn blkdiag(blocks: &[SmallMatrix]) -> RMat {
    let p = blocks[0].nrows();
    let mut out = RMat::zeros(blocks.len() * p, blocks.len() * p);
    for (k, b) in blocks.iter().enumerate() {
        out.view_mut((k * p, k * p), (p, p)).copy_from(b);
    }
    out
}

/// `K̂⁻ᵀ J Γ⁻¹ Jᵀ K̂⁻¹` as a dense matrix.
pub fn reconstruct_tridiagonal(params: &StieltjesParams) -> RMat {
    let (z, _) = assemble_pencil(params);
    let kinv = blkdiag(&params.kappa_hat_invs);
    kinv.transpose() * z * kinv
}

/// `(Z_m, Γ̂_m)` with `Z_m = J Γ⁻¹ Jᵀ`, `Γ̂_m = blkdiag(γ̂_i)`.
pub fn assemble_pencil(params: &StieltjesParams) -> (RMat, RMat) {
    let m = params.m();
    let p = params.p();
    let j = bidiagonal_j(m, p);
    let z = &j * blkdiag(&params.gamma_invs) * j.transpose();
    (z, blkdiag(&params.gamma_hats))
}
