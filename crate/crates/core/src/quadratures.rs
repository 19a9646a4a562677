//! Transfer-function approximants built on a Lanczos run.
//!
//! Every approximant is the first p×p block of the resolvent of a (possibly
//! modified) block tridiagonal matrix, or equivalently the value of a block
//! Stieltjes continued fraction with a particular tail:
//!
//! | approximant      | tail `C_{m+1}`          | last block of `T`                 |
//! |------------------|-------------------------|-----------------------------------|
//! | Gauss            | `0`                     | `α_m`                             |
//! | Gauss–Radau      | `∞`                     | `α_m − κ̂_m⁻ᵀ γ_m⁻¹ κ̂_m⁻¹`          |
//! | Kreĭn–Nudelman   | `(φ √s)⁻¹`              | `α_m + Δα_m(s)`                   |

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lanczos::{BlockJacobi, LanczosDecomposition};
use crate::linalg::{is_spd, principal_sqrt, to_complex, try_inverse_c, CMat, RMat, SmallMatrix};
use crate::stieltjes::StieltjesParams;
use crate::tridiag::BlockTridiagonal;

#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    Gauss,
    Radau,
    Average,
    Kn { phi: SmallMatrix },
    ExtendedKn { phi: SmallMatrix, xi: SmallMatrix },
    Reference,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Gauss => "gauss",
            Variant::Radau => "radau",
            Variant::Average => "average",
            Variant::Kn { .. } => "kn",
            Variant::ExtendedKn { .. } => "extended_kn",
            Variant::Reference => "reference",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Value of an approximant at one shift.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferSample {
    pub s: Complex64,
    pub value: CMat,
    pub variant: Variant,
}

/// Boundary condition closing the block Stieltjes string.
#[derive(Debug, Clone, PartialEq)]
pub enum Terminator {
    /// `C_{m+1} = 0`
    Dirichlet,
    /// `C_{m+1} = ∞`
    Neumann,
    /// `C_{m+1} = (φ √s)⁻¹`
    Impedance(SmallMatrix),
}

/// Sheet of `√s` used by the Kreĭn–Nudelman termination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    #[default]
    Principal,
    /// `−√s`: evaluates the continuation onto the second Riemann sheet.
    Second,
}

impl Branch {
    pub fn sqrt(self, s: Complex64) -> Complex64 {
        match self {
            Branch::Principal => principal_sqrt(s),
            Branch::Second => -principal_sqrt(s),
        }
    }
}

fn c(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn check_phi(phi: &SmallMatrix, p: usize) -> Result<()> {
    if phi.shape() != (p, p) {
        return Err(Error::DimensionMismatch(format!("phi must be {p}x{p}")));
    }
    if !is_spd(phi) {
        return Err(Error::InvalidArgument("phi must be symmetric positive definite".into()));
    }
    Ok(())
}

/// First block of `(T + sI)⁻¹` for a block tridiagonal in factored form.
fn first_block(t: &BlockTridiagonal, on_singular: impl Fn(usize) -> Error) -> Result<CMat> {
    let p = t.block_size();
    let ldl = t.factor().map_err(|e| on_singular(e.block))?;
    Ok(ldl.solve_unit_block(0).rows(0, p).into_owned())
}

/// Block Gauss quadrature `E_1ᵀ (T_m + sI)⁻¹ E_1`.
pub fn gauss_eval(jac: &BlockJacobi, s: Complex64) -> Result<TransferSample> {
    let value = first_block(&jac.shifted(s), |block| Error::ShiftOnSpectrum { block })?;
    Ok(TransferSample {
        s,
        value,
        variant: Variant::Gauss,
    })
}

/// Backward evaluation of the block S-fraction
/// `C_i = (s γ̂_i + (γ_i + C_{i+1})⁻¹)⁻¹`, returning `C_1`.
pub fn sfraction_eval(params: &StieltjesParams, s: Complex64, term: &Terminator) -> Result<TransferSample> {
    let p = params.p();
    let m = params.m();
    let variant = match term {
        Terminator::Dirichlet => Variant::Gauss,
        Terminator::Neumann => Variant::Radau,
        Terminator::Impedance(phi) => {
            check_phi(phi, p)?;
            Variant::Kn { phi: phi.clone() }
        }
    };
    let mut next: Option<CMat> = match term {
        Terminator::Dirichlet => Some(CMat::zeros(p, p)),
        Terminator::Neumann => None,
        Terminator::Impedance(phi) => {
            let z = to_complex(phi) * principal_sqrt(s);
            Some(try_inverse_c(&z).ok_or(Error::SingularStep { index: m + 1 })?)
        }
    };
    for i in (0..m).rev() {
        let mass = to_complex(&params.gamma_hats[i]) * s;
        let inner = match &next {
            Some(c_next) => {
                let spring = to_complex(&params.gammas[i]) + c_next;
                mass + try_inverse_c(&spring).ok_or(Error::SingularStep { index: i + 1 })?
            }
            None => mass,
        };
        next = Some(try_inverse_c(&inner).ok_or(Error::SingularStep { index: i + 1 })?);
    }
    Ok(TransferSample {
        s,
        value: next.expect("m >= 1"),
        variant,
    })
}

/// Rank-p change of the last diagonal block for the Kreĭn–Nudelman
/// termination: `Δα_m = −κ̂_m⁻ᵀ γ_m⁻¹ (γ_m⁻¹ + √s φ)⁻¹ γ_m⁻¹ κ̂_m⁻¹`.
pub fn kn_delta_alpha(params: &StieltjesParams, phi: &SmallMatrix, sqrt_s: Complex64) -> Result<CMat> {
    let m = params.m();
    let g = to_complex(&params.gamma_invs[m - 1]);
    let k = to_complex(&params.kappa_hat_invs[m - 1]);
    let inner = &g + to_complex(phi) * sqrt_s;
    let inv = try_inverse_c(&inner).ok_or(Error::SingularStep { index: m })?;
    Ok(-(k.transpose() * &g * inv * &g * k))
}

/// The `φ → 0` limit of [`kn_delta_alpha`]: `−κ̂_m⁻ᵀ γ_m⁻¹ κ̂_m⁻¹`.
pub fn radau_delta_alpha(params: &StieltjesParams) -> RMat {
    let m = params.m();
    let k = &params.kappa_hat_invs[m - 1];
    -(k.transpose() * &params.gamma_invs[m - 1] * k)
}

fn with_last_block(jac: &BlockJacobi, s: Complex64, delta: &CMat) -> BlockTridiagonal {
    let mut t = jac.shifted(s);
    let last = t.blocks() - 1;
    t.diag[last] += delta;
    t
}

fn check_pair(jac: &BlockJacobi, params: &StieltjesParams) -> Result<()> {
    if jac.m() != params.m() || jac.p() != params.p() {
        return Err(Error::DimensionMismatch(format!(
            "coefficients are m={} p={}, parameters m={} p={}",
            jac.m(),
            jac.p(),
            params.m(),
            params.p()
        )));
    }
    Ok(())
}

/// Kreĭn–Nudelman quadrature `E_1ᵀ (T̂_m^φ(s) + sI)⁻¹ E_1` with the principal `√s`.
pub fn kn_eval_tridiag(
    jac: &BlockJacobi,
    params: &StieltjesParams,
    phi: &SmallMatrix,
    s: Complex64,
) -> Result<TransferSample> {
    kn_eval_tridiag_branch(jac, params, phi, s, Branch::Principal)
}

pub fn kn_eval_tridiag_branch(
    jac: &BlockJacobi,
    params: &StieltjesParams,
    phi: &SmallMatrix,
    s: Complex64,
    branch: Branch,
) -> Result<TransferSample> {
    check_pair(jac, params)?;
    check_phi(phi, jac.p())?;
    let delta = kn_delta_alpha(params, phi, branch.sqrt(s))?;
    let value = first_block(&with_last_block(jac, s, &delta), |block| Error::SingularStep {
        index: block + 1,
    })?;
    Ok(TransferSample {
        s,
        value,
        variant: Variant::Kn { phi: phi.clone() },
    })
}

/// Block Gauss–Radau quadrature via the explicit last-block modification.
/// `T̃_m` has `p` zero eigenvalues, so `s = 0` is on its spectrum.
pub fn radau_eval(jac: &BlockJacobi, params: &StieltjesParams, s: Complex64) -> Result<TransferSample> {
    check_pair(jac, params)?;
    let delta = to_complex(&radau_delta_alpha(params));
    let value = first_block(&with_last_block(jac, s, &delta), |block| Error::ShiftOnSpectrum { block })?;
    Ok(TransferSample {
        s,
        value,
        variant: Variant::Radau,
    })
}

/// Dense `T̃_m` (used to inspect its null space).
pub fn radau_tridiagonal(jac: &BlockJacobi, params: &StieltjesParams) -> RMat {
    let mut t = crate::lanczos::assemble_tridiagonal(jac);
    let p = jac.p();
    let off = (jac.m() - 1) * p;
    let mut last = t.view_mut((off, off), (p, p));
    last += radau_delta_alpha(params);
    t
}

/// Arithmetic mean of the Gauss and Gauss–Radau values.
pub fn averaged_eval(jac: &BlockJacobi, params: &StieltjesParams, s: Complex64) -> Result<TransferSample> {
    let g = gauss_eval(jac, s)?;
    let r = radau_eval(jac, params, s)?;
    Ok(TransferSample {
        s,
        value: (g.value + r.value) * c(0.5),
        variant: Variant::Average,
    })
}

/// Last diagonal block `α̂_{m+1}^{φ,ξ}(s)` of the extended string.
pub fn extended_alpha(
    params: &StieltjesParams,
    phi: &SmallMatrix,
    xi: &SmallMatrix,
    sqrt_s: Complex64,
) -> Result<CMat> {
    let m = params.m();
    let tail = params.tail.as_ref().ok_or(Error::MissingTail)?;
    let k = to_complex(&tail.kappa_hat_inv);
    let g = to_complex(&params.gamma_invs[m - 1]);
    let xi_inv = try_inverse_c(&to_complex(xi)).ok_or(Error::SingularStep { index: m + 1 })?;
    let inner = &xi_inv + to_complex(phi) * sqrt_s;
    let inner_inv = try_inverse_c(&inner).ok_or(Error::SingularStep { index: m + 1 })?;
    let mid = g + &xi_inv - &xi_inv * inner_inv * &xi_inv;
    Ok(k.transpose() * mid * k)
}

/// Extended Kreĭn–Nudelman quadrature on the `(m+1)p`-dimensional matrix
/// `[[T_m, β_{m+1}ᵀ], [β_{m+1}, α̂_{m+1}^{φ,ξ}(s)]]`.
pub fn extended_kn_eval(
    dec: &LanczosDecomposition,
    params: &StieltjesParams,
    phi: &SmallMatrix,
    xi: &SmallMatrix,
    s: Complex64,
) -> Result<TransferSample> {
    check_pair(&dec.jacobi, params)?;
    let p = dec.p();
    check_phi(phi, p)?;
    check_phi(xi, p)?;
    let residual = dec.residual.as_ref().ok_or(Error::MissingTail)?;
    let alpha_hat = extended_alpha(params, phi, xi, principal_sqrt(s))?;
    let mut t = dec.jacobi.shifted(s);
    t.sub.push(residual.beta.clone());
    let mut last = alpha_hat;
    for i in 0..p {
        last[(i, i)] += s;
    }
    t.diag.push(last);
    let value = first_block(&t, |block| Error::SingularStep { index: block + 1 })?;
    Ok(TransferSample {
        s,
        value,
        variant: Variant::ExtendedKn {
            phi: phi.clone(),
            xi: xi.clone(),
        },
    })
}

/// Closed-form value of the constant-coefficient S-fraction
/// `γ/2 + 1/(sγ̂ + 1/(γ + 1/(sγ̂ + …)))`, i.e. `(γ / 2s) √(s (s + 4/(γγ̂)))`.
///
/// The square root is evaluated as `√s · √(s + 4/(γγ̂))` with principal
/// factors, which agrees with the principal root of the product for
/// `Re s > 0` and keeps the cut on `[−4/(γγ̂), 0]` elsewhere.
pub fn sqrt_terminator_closed(gamma: f64, gamma_hat: f64, s: Complex64) -> Complex64 {
    let a = 4.0 / (gamma * gamma_hat);
    c(gamma) / (c(2.0) * s) * principal_sqrt(s) * principal_sqrt(s + a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lanczos::assemble_tridiagonal;
    use crate::linalg::{loewner_gap, sym_eigenvalues};
    use crate::stieltjes::extract_from_jacobi;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn t2() -> (BlockJacobi, StieltjesParams) {
        let jac = BlockJacobi::scalar(&[2.0, 2.0], &[1.0]).unwrap();
        let params = extract_from_jacobi(&jac).unwrap();
        (jac, params)
    }

    fn one() -> RMat {
        RMat::identity(1, 1)
    }

    fn scalar(v: &TransferSample) -> Complex64 {
        v.value[(0, 0)]
    }

    fn dense_first(t: &RMat, s: Complex64, p: usize) -> CMat {
        let mut a = to_complex(t);
        for i in 0..a.nrows() {
            a[(i, i)] += s;
        }
        a.try_inverse().unwrap().view((0, 0), (p, p)).into_owned()
    }

    #[test]
    fn gauss_examples() {
        let (jac, _) = t2();
        let g = gauss_eval(&jac, c(1.0)).unwrap();
        assert!((scalar(&g) - c(0.375)).norm() < 1e-15);
        let one_step = BlockJacobi::scalar(&[3.0], &[]).unwrap();
        let s = Complex64::new(0.5, 2.0);
        assert!((scalar(&gauss_eval(&one_step, s).unwrap()) - c(1.0) / (c(3.0) + s)).norm() < 1e-15);
        let si = Complex64::new(0.0, 1.0);
        let dense = dense_first(&assemble_tridiagonal(&jac), si, 1);
        assert!((scalar(&gauss_eval(&jac, si).unwrap()) - dense[(0, 0)]).norm() < 1e-15);
    }

    #[test]
    fn sfraction_examples() {
        let (jac, params) = t2();
        let d = sfraction_eval(&params, c(1.0), &Terminator::Dirichlet).unwrap();
        assert!((scalar(&d) - c(0.375)).norm() < 1e-15);
        let single = extract_from_jacobi(&BlockJacobi::scalar(&[2.0], &[]).unwrap()).unwrap();
        let s = Complex64::new(0.7, -0.2);
        let n = sfraction_eval(&single, s, &Terminator::Neumann).unwrap();
        assert!((scalar(&n) - c(1.0) / s).norm() < 1e-15);
        let kn = sfraction_eval(&params, c(1.0), &Terminator::Impedance(one())).unwrap();
        let tri = kn_eval_tridiag(&jac, &params, &one(), c(1.0)).unwrap();
        assert!((scalar(&kn) - scalar(&tri)).norm() < 1e-12);
    }

    #[test]
    fn kn_hand_example() {
        let (jac, params) = t2();
        let delta = kn_delta_alpha(&params, &one(), c(1.0)).unwrap();
        assert!((delta[(0, 0)] + c(9.0 / 7.0)).norm() < 1e-14);
        let dense = RMat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 5.0 / 7.0]);
        let expect = dense_first(&dense, c(1.0), 1)[(0, 0)];
        let got = scalar(&kn_eval_tridiag(&jac, &params, &one(), c(1.0)).unwrap());
        assert!((got - expect).norm() < 1e-14);
    }

    #[test]
    fn kn_limits() {
        let (jac, params) = t2();
        for s in [c(1.0), Complex64::new(0.2, 3.0), Complex64::new(-1.0, 0.5)] {
            let g = scalar(&gauss_eval(&jac, s).unwrap());
            let r = scalar(&radau_eval(&jac, &params, s).unwrap());
            let big = scalar(&kn_eval_tridiag(&jac, &params, &(one() * 1e12), s).unwrap());
            let small = scalar(&kn_eval_tridiag(&jac, &params, &(one() * 1e-12), s).unwrap());
            assert!((big - g).norm() <= 1e-6 * g.norm());
            assert!((small - r).norm() <= 1e-6 * r.norm());
        }
    }

    #[test]
    fn radau_examples() {
        let (jac, params) = t2();
        let tt = radau_tridiagonal(&jac, &params);
        assert!((tt[(1, 1)] - 0.5).abs() < 1e-14);
        assert!(sym_eigenvalues(&tt)[0].abs() < 1e-14);
        let single_jac = BlockJacobi::scalar(&[2.0], &[]).unwrap();
        let single = extract_from_jacobi(&single_jac).unwrap();
        let s = Complex64::new(0.3, 0.4);
        assert!((scalar(&radau_eval(&single_jac, &single, s).unwrap()) - c(1.0) / s).norm() < 1e-14);
        assert!(matches!(
            radau_eval(&single_jac, &single, c(0.0)),
            Err(Error::ShiftOnSpectrum { .. })
        ));
        for k in 0..20 {
            let s = c(10f64.powf(-3.0 + 0.25 * k as f64));
            let g = gauss_eval(&jac, s).unwrap();
            let r = radau_eval(&jac, &params, s).unwrap();
            assert!(loewner_gap(&g.value, &r.value).unwrap() >= 0.0);
        }
    }

    #[test]
    fn averaged_examples() {
        let (jac, params) = t2();
        let s = c(1.0);
        let g = scalar(&gauss_eval(&jac, s).unwrap());
        let r = scalar(&radau_eval(&jac, &params, s).unwrap());
        let a = averaged_eval(&jac, &params, s).unwrap();
        assert!((scalar(&a) - (g + r) * 0.5).norm() < 1e-15);
        assert!(loewner_gap(&gauss_eval(&jac, s).unwrap().value, &a.value).unwrap() >= 0.0);
        assert!(loewner_gap(&a.value, &radau_eval(&jac, &params, s).unwrap().value).unwrap() >= 0.0);
        let single_jac = BlockJacobi::scalar(&[2.0], &[]).unwrap();
        let single = extract_from_jacobi(&single_jac).unwrap();
        let s = c(0.5);
        let v = scalar(&averaged_eval(&single_jac, &single, s).unwrap());
        assert!((v - (c(1.0) / (c(2.0) + s) + c(1.0) / s) * 0.5).norm() < 1e-14);
    }

    #[test]
    fn sqrt_terminator_examples() {
        let v = sqrt_terminator_closed(1.0, 1.0, c(1.0));
        assert!((v - c(5f64.sqrt() / 2.0)).norm() < 1e-15);
        assert!((v.re - 1.118_033_988_7).abs() < 1e-10);
        for s in [1e3, 1e5, 1e7] {
            let v = sqrt_terminator_closed(1.0, 1.0, c(s));
            assert!((v.re - (0.5 + 1.0 / s)).abs() < 3.0 / (s * s));
        }
    }

    #[test]
    fn kn_is_bracketed_on_random_chains() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let m = rng.gen_range(1..8);
            let p = rng.gen_range(1..=3);
            let gammas = (0..m)
                .map(|_| {
                    let a = RMat::from_fn(p, p, |_, _| rng.gen_range(-1.0..1.0));
                    &a * a.transpose() + RMat::identity(p, p) * 0.2
                })
                .collect();
            let mut gamma_hats: Vec<RMat> = (0..m)
                .map(|_| {
                    let a = RMat::from_fn(p, p, |_, _| rng.gen_range(-1.0..1.0));
                    &a * a.transpose() + RMat::identity(p, p) * 0.2
                })
                .collect();
            gamma_hats[0] = RMat::identity(p, p);
            let params = StieltjesParams::from_string(gammas, gamma_hats).unwrap();
            let t = crate::stieltjes::reconstruct_tridiagonal(&params);
            let jac = dense_to_jacobi(&t, m, p);
            let phi = RMat::identity(p, p) * rng.gen_range(0.1..10.0);
            for k in 0..10 {
                let s = c(10f64.powf(-2.0 + 0.4 * k as f64));
                let g = gauss_eval(&jac, s).unwrap().value;
                let kn = kn_eval_tridiag(&jac, &params, &phi, s).unwrap().value;
                let r = radau_eval(&jac, &params, s).unwrap().value;
                assert!(loewner_gap(&g, &kn).unwrap() >= -1e-10);
                assert!(loewner_gap(&kn, &r).unwrap() >= -1e-10);
            }
        }
    }

    fn dense_to_jacobi(t: &RMat, m: usize, p: usize) -> BlockJacobi {
        let alphas = (0..m).map(|k| t.view((k * p, k * p), (p, p)).into_owned()).collect();
        let betas = (1..m).map(|k| t.view((k * p, (k - 1) * p), (p, p)).into_owned()).collect();
        BlockJacobi::new(alphas, betas).unwrap()
    }

    #[test]
    fn second_branch_flips_sqrt() {
        let (jac, params) = t2();
        let s = Complex64::new(-0.5, 0.1);
        let a = kn_eval_tridiag_branch(&jac, &params, &one(), s, Branch::Second).unwrap();
        let delta = kn_delta_alpha(&params, &one(), -principal_sqrt(s)).unwrap();
        let t = with_last_block(&jac, s, &delta);
        let dense = t.to_dense().try_inverse().unwrap();
        assert!((scalar(&a) - dense[(0, 0)]).norm() < 1e-13);
    }

    #[test]
    fn phi_must_be_spd() {
        let (jac, params) = t2();
        assert!(kn_eval_tridiag(&jac, &params, &(-one()), c(1.0)).is_err());
    }
}
