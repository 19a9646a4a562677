//! Ground-truth transfer function `Bᵀ(A + sI)⁻¹B`.
//!
//! Operators whose band fits under the configured cap are factored by a
//! banded complex-symmetric `LDLᵀ` without pivoting (`A + sI` is complex
//! symmetric with `A` SPD, so the pivots stay nonzero off the negative real
//! axis). Larger operators use the conjugate orthogonal CG iteration.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{BlockVector, CMat};
use crate::quadratures::{TransferSample, Variant};
use crate::sparse::SparseSpdOperator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePolicy {
    /// Largest `n·(bandwidth+1)` handled by the banded factorization.
    pub max_band_entries: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ReferencePolicy {
    fn default() -> Self {
        Self {
            max_band_entries: 5_000_000,
            tol: 1e-12,
            max_iter: 100_000,
        }
    }
}

struct BandedLdl {
    n: usize,
    bw: usize,
    /// Row `i` holds columns `i−bw ..= i`; the diagonal slot holds `D`.
    band: Vec<Complex64>,
}

impl BandedLdl {
    fn at(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + (j + self.bw - i)
    }

    fn factor(a: &SparseSpdOperator, s: Complex64) -> Result<Self> {
        let n = a.n();
        let bw = a.half_bandwidth();
        let mut f = Self {
            n,
            bw,
            band: vec![Complex64::new(0.0, 0.0); n * (bw + 1)],
        };
        for (i, j, v) in a.lower_triplets() {
            let k = f.at(i, j);
            f.band[k] += v;
        }
        for i in 0..n {
            let k = f.at(i, i);
            f.band[k] += s;
        }
        let scale = a.norm1() + s.norm();
        let mut col = vec![Complex64::new(0.0, 0.0); bw + 1];
        for k in 0..n {
            let d = f.band[f.at(k, k)];
            if d.norm() <= f64::EPSILON * scale {
                return Err(Error::SingularShift);
            }
            let last = (k + bw).min(n - 1);
            for i in k + 1..=last {
                col[i - k] = f.band[f.at(i, k)];
            }
            for i in k + 1..=last {
                let lik = col[i - k] / d;
                let row = f.at(i, k + 1);
                for j in k + 1..=i {
                    f.band[row + (j - k - 1)] -= lik * col[j - k];
                }
            }
            for i in k + 1..=last {
                let idx = f.at(i, k);
                f.band[idx] = col[i - k] / d;
            }
        }
        Ok(f)
    }

    fn solve_in_place(&self, x: &mut [Complex64]) {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut acc = x[i];
            for j in lo..i {
                acc -= self.band[self.at(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in 0..n {
            x[i] /= self.band[self.at(i, i)];
        }
        for i in (0..n).rev() {
            let xi = x[i];
            let lo = i.saturating_sub(bw);
            for j in lo..i {
                x[j] -= self.band[self.at(i, j)] * xi;
            }
        }
    }
}

fn apply_shifted(a: &SparseSpdOperator, s: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (i, yi) in y.iter_mut().enumerate() {
        *yi = a.row(i).map(|(j, v)| x[j] * v).sum::<Complex64>() + s * x[i];
    }
}

fn dot_u(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugate orthogonal CG for the complex-symmetric system `(A + sI)x = b`.
fn cocg(a: &SparseSpdOperator, s: Complex64, b: &[Complex64], policy: &ReferencePolicy) -> Result<Vec<Complex64>> {
    let n = a.n();
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut q = vec![Complex64::new(0.0, 0.0); n];
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let mut rho = dot_u(&r, &r);
    for _ in 0..policy.max_iter {
        if norm(&r) <= policy.tol * bnorm {
            return Ok(x);
        }
        apply_shifted(a, s, &p, &mut q);
        let pq = dot_u(&p, &q);
        if pq.norm() == 0.0 {
            return Err(Error::SingularShift);
        }
        let alpha = rho / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        let rho_new = dot_u(&r, &r);
        let beta = rho_new / rho;
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    let residual = norm(&r) / bnorm;
    if residual <= policy.tol {
        Ok(x)
    } else {
        Err(Error::NoConvergence {
            iterations: policy.max_iter,
            residual,
        })
    }
}

/// `(A + sI)⁻¹ B` as an n×p complex block.
pub fn solve_shifted(a: &SparseSpdOperator, b: &BlockVector, s: Complex64, policy: &ReferencePolicy) -> Result<CMat> {
    let n = a.n();
    if b.nrows() != n {
        return Err(Error::DimensionMismatch(format!("B has {} rows, A is {n}x{n}", b.nrows())));
    }
    let direct = n * (a.half_bandwidth() + 1) <= policy.max_band_entries;
    let ldl = if direct { Some(BandedLdl::factor(a, s)?) } else { None };
    let mut out = CMat::zeros(n, b.ncols());
    for c in 0..b.ncols() {
        let rhs: Vec<Complex64> = b.column(c).iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let x = match &ldl {
            Some(f) => {
                let mut x = rhs;
                f.solve_in_place(&mut x);
                x
            }
            None => cocg(a, s, &rhs, policy)?,
        };
        out.column_mut(c).copy_from_slice(&x);
    }
    Ok(out)
}

/// Reference `Bᵀ(A + sI)⁻¹B` with the default policy.
pub fn reference_transfer(a: &SparseSpdOperator, b: &BlockVector, s: Complex64) -> Result<TransferSample> {
    reference_transfer_with(a, b, s, &ReferencePolicy::default())
}

pub fn reference_transfer_with(
    a: &SparseSpdOperator,
    b: &BlockVector,
    s: Complex64,
    policy: &ReferencePolicy,
) -> Result<TransferSample> {
    let x = solve_shifted(a, b, s, policy)?;
    let bc = b.map(|v| Complex64::new(v, 0.0));
    Ok(TransferSample {
        s,
        value: bc.transpose() * x,
        variant: Variant::Reference,
    })
}
