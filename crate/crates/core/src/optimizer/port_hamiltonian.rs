//! First-order (port-Hamiltonian) form of the damped Stieltjes string.
//!
//! Unknowns are the block potentials `u` at the masses and the block fluxes
//! `v` through the springs. With `J` block lower bidiagonal (`I` on the
//! diagonal, `−I` below) the string reads
//! `(S + D + √s M) [u; v] = [E_1/√s; 0]`, where `S = [[0, J], [−Jᵀ, 0]]`,
//! `D = blkdiag(0, E_m φ⁻¹ E_mᵀ)` and `M = blkdiag(Γ̂, Γ)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{principal_sqrt, to_complex, try_inverse_r, CMat, RMat, SmallMatrix};
use crate::quadratures::TransferSample;
use crate::stieltjes::StieltjesParams;

#[derive(Debug, Clone)]
pub struct FirstOrderPencil {
    /// Skew-symmetric interconnection.
    pub skew: RMat,
    /// Positive semidefinite dissipation.
    pub dissipation: RMat,
    /// Symmetric positive definite mass/compliance.
    pub mass: RMat,
    pub blocks: usize,
    pub p: usize,
}

/// Builds the pencil; `phi = None` drops the damper, giving the Gauss string.
pub fn assemble_first_order_pencil(params: &StieltjesParams, phi: Option<&SmallMatrix>) -> Result<FirstOrderPencil> {
    let m = params.m();
    let p = params.p();
    let n = m * p;
    let mut j = RMat::zeros(n, n);
    for k in 0..m {
        for i in 0..p {
            j[(k * p + i, k * p + i)] = 1.0;
            if k > 0 {
                j[(k * p + i, (k - 1) * p + i)] = -1.0;
            }
        }
    }
    let mut skew = RMat::zeros(2 * n, 2 * n);
    skew.view_mut((0, n), (n, n)).copy_from(&j);
    skew.view_mut((n, 0), (n, n)).copy_from(&(-j.transpose()));

    let mut dissipation = RMat::zeros(2 * n, 2 * n);
    if let Some(phi) = phi {
        if phi.shape() != (p, p) {
            return Err(Error::DimensionMismatch(format!("phi must be {p}x{p}")));
        }
        let inv = try_inverse_r(phi).ok_or(Error::SingularPencil)?;
        let off = n + (m - 1) * p;
        dissipation.view_mut((off, off), (p, p)).copy_from(&((&inv + inv.transpose()) * 0.5));
    }

    let mut mass = RMat::zeros(2 * n, 2 * n);
    for k in 0..m {
        mass.view_mut((k * p, k * p), (p, p)).copy_from(&params.gamma_hats[k]);
        mass.view_mut((n + k * p, n + k * p), (p, p)).copy_from(&params.gammas[k]);
    }
    Ok(FirstOrderPencil {
        skew,
        dissipation,
        mass,
        blocks: m,
        p,
    })
}

impl FirstOrderPencil {
    /// Solves `(S + D + √s M) x = [E_1/√s; 0]` with the principal `√s`.
    pub fn solve(&self, s: Complex64) -> Result<CMat> {
        let sq = principal_sqrt(s);
        let n2 = self.skew.nrows();
        let lhs = to_complex(&(&self.skew + &self.dissipation)) + to_complex(&self.mass) * sq;
        let mut rhs = CMat::zeros(n2, self.p);
        for i in 0..self.p {
            rhs[(i, i)] = Complex64::new(1.0, 0.0) / sq;
        }
        lhs.lu().solve(&rhs).ok_or(Error::SingularPencil)
    }

    /// `E_1ᵀ x`: the potential at the driven mass, equal to the string's transfer function.
    pub fn first_block(&self, s: Complex64) -> Result<CMat> {
        Ok(self.solve(s)?.rows(0, self.p).into_owned())
    }

    /// `E_1ᵀ x / √s`: the first-order transfer function whose real and
    /// imaginary parts carry the stored and dissipated energy.
    pub fn first_order_transfer(&self, s: Complex64) -> Result<CMat> {
        Ok(self.first_block(s)? / principal_sqrt(s))
    }
}

/// `(Re, Im)` of `F̂(s)/√s` for a scalar (p = 1) sample: stored and dissipated energy.
pub fn energy_split(fhat: &TransferSample, s: Complex64) -> Result<(f64, f64)> {
    if fhat.value.shape() != (1, 1) {
        return Err(Error::InvalidArgument("energy split needs a scalar transfer function".into()));
    }
    let v = fhat.value[(0, 0)] / principal_sqrt(s);
    Ok((v.re, v.im))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lanczos::BlockJacobi;
    use crate::linalg::sym_eigenvalues;
    use crate::quadratures::{gauss_eval, kn_eval_tridiag, Variant};
    use crate::stieltjes::extract_from_jacobi;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    fn t2() -> (BlockJacobi, StieltjesParams) {
        let jac = BlockJacobi::scalar(&[2.0, 2.0], &[1.0]).unwrap();
        let params = extract_from_jacobi(&jac).unwrap();
        (jac, params)
    }

    #[test]
    fn structure() {
        let (_, params) = t2();
        let pencil = assemble_first_order_pencil(&params, Some(&RMat::identity(1, 1))).unwrap();
        assert_eq!(&pencil.skew + pencil.skew.transpose(), RMat::zeros(4, 4));
        assert!(sym_eigenvalues(&pencil.dissipation)[0] >= 0.0);
        assert!(sym_eigenvalues(&pencil.mass)[0] > 0.0);
    }

    #[test]
    fn two_by_two_example() {
        let (jac, params) = t2();
        let gauss = assemble_first_order_pencil(&params, None).unwrap();
        assert!((gauss.first_block(c(1.0)).unwrap()[(0, 0)] - c(0.375)).norm() < 1e-14);
        let one = RMat::identity(1, 1);
        let kn = assemble_first_order_pencil(&params, Some(&one)).unwrap();
        let expect = kn_eval_tridiag(&jac, &params, &one, c(1.0)).unwrap().value[(0, 0)];
        assert!((kn.first_order_transfer(c(1.0)).unwrap()[(0, 0)] - expect).norm() < 1e-14);
        let s = Complex64::new(-0.3, 0.2);
        let expect = kn_eval_tridiag(&jac, &params, &one, s).unwrap().value[(0, 0)];
        assert!((kn.first_block(s).unwrap()[(0, 0)] - expect).norm() < 1e-13);
        assert!((kn.first_order_transfer(s).unwrap()[(0, 0)] - expect / principal_sqrt(s)).norm() < 1e-13);
    }

    #[test]
    fn single_mass_by_hand() {
        // γ̂ = 1, γ = 1/2, φ = 2: v + √s u = 1/√s, −u + (1/2 + √s/2) v = 0.
        let params = StieltjesParams::from_string(vec![RMat::identity(1, 1) * 0.5], vec![RMat::identity(1, 1)]).unwrap();
        let phi = RMat::identity(1, 1) * 2.0;
        let pencil = assemble_first_order_pencil(&params, Some(&phi)).unwrap();
        let s = c(4.0);
        let u = c(1.0) / (c(2.0) * (c(2.0) + c(1.0) / c(1.5)));
        assert!((pencil.first_block(s).unwrap()[(0, 0)] - u).norm() < 1e-14);
    }

    #[test]
    fn energy_split_symmetry() {
        let (jac, _) = t2();
        let s = Complex64::new(-0.5, 0.05);
        let a = energy_split(&gauss_eval(&jac, s).unwrap(), s).unwrap();
        let b = energy_split(&gauss_eval(&jac, s.conj()).unwrap(), s.conj()).unwrap();
        assert!((a.0 - b.0).abs() < 1e-14 && (a.1 + b.1).abs() < 1e-14);
        let real = TransferSample {
            s: c(2.0),
            value: CMat::from_element(1, 1, c(0.3)),
            variant: Variant::Gauss,
        };
        assert_eq!(energy_split(&real, c(2.0)).unwrap().1, 0.0);
    }
}
