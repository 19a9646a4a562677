//! Dense kernels shared by every other module: complex helpers, the p×p
//! block algebra, Householder block QR and the Löwner-order gap.
//!
//! Small blocks are plain `nalgebra` dynamic matrices. Real blocks carry
//! Lanczos coefficients and string parameters; complex blocks carry anything
//! that has been shifted by a complex `s`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;

/// Dense n×p column block.
pub type BlockVector = RMat;
/// Dense p×p block.
pub type SmallMatrix = RMat;

/// Relative singular-value threshold below which a block is treated as rank
/// deficient (Lanczos breakdown).
pub const RANK_TOL: f64 = 1e-10;

/// Reciprocal condition number below which a small inverse is refused.
pub const RCOND_TOL: f64 = 1e-14;

/// Principal square root: `Re √s ≥ 0`, branch cut on the negative real axis.
#[inline]
pub fn principal_sqrt(s: Complex64) -> Complex64 {
    s.sqrt()
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|v| Complex64::new(v, 0.0))
}

pub fn real_part(m: &CMat) -> RMat {
    m.map(|v| v.re)
}

pub fn imag_part(m: &CMat) -> RMat {
    m.map(|v| v.im)
}

pub fn symmetrize(m: &RMat) -> RMat {
    (m + m.transpose()) * 0.5
}

pub fn symmetrize_c(m: &CMat) -> CMat {
    (m + m.transpose()) * Complex64::new(0.5, 0.0)
}

fn norm1<T: nalgebra::ComplexField>(m: &DMatrix<T>) -> f64
where
    T::RealField: Into<f64>,
{
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.clone().modulus().into()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse of a small complex block, `None` when the block is numerically
/// singular (reciprocal 1-norm condition below [`RCOND_TOL`]).
pub fn try_inverse_c(m: &CMat) -> Option<CMat> {
    let inv = m.clone().try_inverse()?;
    if inv.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return None;
    }
    let rcond = 1.0 / (norm1(m) * norm1(&inv));
    (rcond >= RCOND_TOL).then_some(inv)
}

/// Real counterpart of [`try_inverse_c`].
pub fn try_inverse_r(m: &RMat) -> Option<RMat> {
    let inv = m.clone().try_inverse()?;
    if inv.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let rcond = 1.0 / (norm1(m) * norm1(&inv));
    (rcond >= RCOND_TOL).then_some(inv)
}

/// Ascending eigenvalues of a real symmetric matrix (the symmetric part is used).
pub fn sym_eigenvalues(m: &RMat) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(m)).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Ascending eigenvalues of the Hermitian part of a complex matrix.
pub fn herm_eigenvalues(m: &CMat) -> Vec<f64> {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// `X^{-1/2}` for a real symmetric positive definite block, `None` if not SPD.
pub fn inv_sqrt_spd(m: &RMat) -> Option<RMat> {
    let eig = SymmetricEigen::new(symmetrize(m));
    if eig.eigenvalues.iter().any(|&l| l <= 0.0 || !l.is_finite()) {
        return None;
    }
    let d = RMat::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Some(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// True when `m` is symmetric to `1e-13` relative and has positive minimum eigenvalue.
pub fn is_spd(m: &RMat) -> bool {
    if !m.is_square() || m.nrows() == 0 {
        return false;
    }
    let scale = m.norm().max(f64::MIN_POSITIVE);
    if (m - m.transpose()).norm() > 1e-13 * scale {
        return false;
    }
    sym_eigenvalues(m)[0] > 0.0
}

/// Spectral norm of a real symmetric matrix.
pub fn sym_spectral_norm(m: &RMat) -> f64 {
    let ev = sym_eigenvalues(m);
    ev.first().map_or(0.0, |lo| lo.abs().max(ev[ev.len() - 1].abs()))
}

/// Block `k` (0-based) of height `p` taken from a column block.
pub fn row_block<T: nalgebra::Scalar>(m: &DMatrix<T>, k: usize, p: usize) -> DMatrix<T> {
    m.rows(k * p, p).into_owned()
}

/// Householder QR of a tall block with the diagonal of `R` made positive.
///
/// Returns `(Q, R)` with `Q` n×p orthonormal and `R` p×p upper triangular.
/// Fails with [`Error::RankDeficient`] when the smallest singular value of `W`
/// falls below [`RANK_TOL`] times the largest.
pub fn block_qr(w: &BlockVector) -> Result<(BlockVector, SmallMatrix)> {
    let (n, p) = w.shape();
    if p == 0 || n < p {
        return Err(Error::DimensionMismatch(format!(
            "block_qr needs n >= p >= 1, got {n}x{p}"
        )));
    }
    let mut r = w.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(p);
    for j in 0..p {
        let mut v: Vec<f64> = (j..n).map(|i| r[(i, j)]).collect();
        let norm_x = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let alpha = if v[0] >= 0.0 { -norm_x } else { norm_x };
        v[0] -= alpha;
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        v.iter_mut().for_each(|x| *x /= vnorm);
        for c in j..p {
            let dot: f64 = v.iter().enumerate().map(|(k, vk)| vk * r[(j + k, c)]).sum();
            for (k, vk) in v.iter().enumerate() {
                r[(j + k, c)] -= 2.0 * vk * dot;
            }
        }
        reflectors.push(v);
    }

    let mut q = RMat::zeros(n, p);
    for j in 0..p {
        q[(j, j)] = 1.0;
    }
    for (j, v) in reflectors.iter().enumerate().rev() {
        if v.is_empty() {
            continue;
        }
        for c in 0..p {
            let dot: f64 = v.iter().enumerate().map(|(k, vk)| vk * q[(j + k, c)]).sum();
            for (k, vk) in v.iter().enumerate() {
                q[(j + k, c)] -= 2.0 * vk * dot;
            }
        }
    }

    let mut rr = RMat::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            rr[(i, j)] = r[(i, j)];
        }
    }
    for i in 0..p {
        if rr[(i, i)] < 0.0 {
            rr.row_mut(i).neg_mut();
            q.column_mut(i).neg_mut();
        }
    }

    let sv = rr.singular_values();
    let largest = sv.max();
    let smallest = sv.min();
    if largest == 0.0 || smallest < RANK_TOL * largest {
        return Err(Error::RankDeficient { smallest_sv: smallest });
    }
    Ok((q, rr))
}

/// `λ_min(G2 − G1)`: non-negative exactly when `G1 ≤ G2` in the Löwner order.
pub fn loewner_gap(g1: &CMat, g2: &CMat) -> Result<f64> {
    if g1.shape() != g2.shape() || !g1.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "loewner_gap on {:?} and {:?}",
            g1.shape(),
            g2.shape()
        )));
    }
    for g in [g1, g2] {
        let asym = (g - g.adjoint()).norm();
        if asym > 1e-12 * g.norm().max(1.0) {
            return Err(Error::NonHermitian { asymmetry: asym });
        }
    }
    Ok(herm_eigenvalues(&(g2 - g1))[0])
}
