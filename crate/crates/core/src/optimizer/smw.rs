//! Sherman–Morrison–Woodbury evaluation of the Kreĭn–Nudelman approximant.
//!
//! With `Q¹ = (T_m + sI)⁻¹E_1` and `Qᵐ = (T_m + sI)⁻¹E_m` precomputed, the
//! rank-p last-block update `Δα` gives
//! `E_1ᵀ(T_m + sI + E_m Δα E_mᵀ)⁻¹E_1 = F¹¹ − (F¹ᵐ)ᵀ (I + Δα Fᵐᵐ)⁻¹ Δα F¹ᵐ`
//! where `F¹ᵐ = E_mᵀQ¹` and `Fᵐᵐ = E_mᵀQᵐ`. This form never inverts `Δα`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lanczos::BlockJacobi;
use crate::linalg::{imag_part, inv_sqrt_spd, real_part, row_block, sym_eigenvalues, sym_spectral_norm, try_inverse_c, CMat, SmallMatrix};
use crate::optimizer::contour::Contour;
use crate::quadratures::kn_delta_alpha;
use crate::stieltjes::StieltjesParams;

#[derive(Debug, Clone)]
pub struct SmwNode {
    pub s: Complex64,
    pub q1: CMat,
    pub qm: CMat,
    /// `E_1ᵀQ¹`: the Gauss value.
    pub f11: CMat,
    /// `E_mᵀQ¹`
    pub f1m: CMat,
    /// `E_mᵀQᵐ`
    pub fmm: CMat,
}

#[derive(Debug, Clone)]
pub struct SmwCache {
    pub nodes: Vec<SmwNode>,
    pub m: usize,
    pub p: usize,
}

/// Factors `T_m + sI` once per shift and keeps the first and last block columns of the inverse.
pub fn precompute_smw(jac: &BlockJacobi, shifts: &[Complex64]) -> Result<SmwCache> {
    let m = jac.m();
    let p = jac.p();
    let nodes = shifts
        .par_iter()
        .map(|&s| {
            let ldl = jac
                .shifted(s)
                .factor()
                .map_err(|e| Error::ShiftOnSpectrum { block: e.block })?;
            let q1 = ldl.solve_unit_block(0);
            let qm = ldl.solve_unit_block(m - 1);
            Ok(SmwNode {
                s,
                f11: row_block(&q1, 0, p),
                f1m: row_block(&q1, m - 1, p),
                fmm: row_block(&qm, m - 1, p),
                q1,
                qm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SmwCache { nodes, m, p })
}

/// First block of the inverse after adding `Δα` to the last diagonal block.
pub fn smw_eval_node(node: &SmwNode, delta_alpha: &CMat) -> Result<CMat> {
    let p = node.f11.nrows();
    let mut core = delta_alpha * &node.fmm;
    for i in 0..p {
        core[(i, i)] += Complex64::new(1.0, 0.0);
    }
    let inv = try_inverse_c(&core).ok_or(Error::SingularUpdate)?;
    Ok(&node.f11 - node.f1m.transpose() * inv * delta_alpha * &node.f1m)
}

/// [`smw_eval_node`] looked up by shift.
pub fn smw_eval(cache: &SmwCache, delta_alpha: &CMat, s: Complex64) -> Result<CMat> {
    let node = cache
        .nodes
        .iter()
        .find(|n| n.s == s)
        .ok_or_else(|| Error::InvalidArgument(format!("shift {s} is not in the cache")))?;
    smw_eval_node(node, delta_alpha)
}

/// Value of the energy-outflow objective at one φ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    /// Nodes where `Re F̂` was not positive definite.
    pub skipped: usize,
}

/// `‖(Re F)^{-1/2} Im F (Re F)^{-1/2}‖₂`, or `None` when `Re F` is not positive definite.
pub fn outflow_ratio(f: &CMat) -> Option<f64> {
    let re = real_part(f);
    let re = (&re + re.transpose()) * 0.5;
    let im = imag_part(f);
    let im = (&im + im.transpose()) * 0.5;
    if sym_eigenvalues(&re)[0] <= 0.0 {
        return None;
    }
    let w = inv_sqrt_spd(&re)?;
    Some(sym_spectral_norm(&(&w * im * &w)))
}

fn sum_outflow(values: Vec<Option<f64>>, contour: &Contour) -> Result<ObjectiveValue> {
    let mut value = 0.0;
    let mut skipped = 0;
    for (v, w) in values.into_iter().zip(&contour.weights) {
        match v {
            Some(r) => value += w * r,
            None => skipped += 1,
        }
    }
    if skipped == contour.len() {
        return Err(Error::AllNodesSkipped);
    }
    Ok(ObjectiveValue { value, skipped })
}

/// Relative dissipated energy of the Kreĭn–Nudelman approximant with
/// `φ = phi·I`, integrated over the contour.
pub fn kn_objective(cache: &SmwCache, params: &StieltjesParams, contour: &Contour, phi: f64) -> Result<ObjectiveValue> {
    if !(phi > 0.0 && phi.is_finite()) {
        return Err(Error::InvalidArgument(format!("phi must be positive, got {phi}")));
    }
    if cache.nodes.len() != contour.len() {
        return Err(Error::DimensionMismatch("cache and contour sizes differ".into()));
    }
    let phi_mat = SmallMatrix::identity(cache.p, cache.p) * phi;
    let values = cache
        .nodes
        .par_iter()
        .map(|node| {
            let delta = kn_delta_alpha(params, &phi_mat, crate::linalg::principal_sqrt(node.s))?;
            Ok(outflow_ratio(&smw_eval_node(node, &delta)?))
        })
        .collect::<Result<Vec<_>>>()?;
    sum_outflow(values, contour)
}

/// The same objective for the Gauss approximant (the `φ → ∞` limit).
pub fn gauss_objective(cache: &SmwCache, contour: &Contour) -> Result<ObjectiveValue> {
    let values = cache.nodes.iter().map(|n| outflow_ratio(&n.f11)).collect();
    sum_outflow(values, contour)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{to_complex, RMat};
    use crate::optimizer::contour::{build_contour, ContourPolicy};
    use crate::quadratures::{gauss_eval, kn_eval_tridiag};
    use crate::stieltjes::extract_from_jacobi;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn modified_dense(jac: &BlockJacobi, s: Complex64, delta: &CMat) -> CMat {
        let mut t = jac.shifted(s).to_dense();
        let p = jac.p();
        let off = (jac.m() - 1) * p;
        let mut last = t.view_mut((off, off), (p, p));
        last += delta;
        t
    }

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn single_block_has_equal_columns() {
        let jac = BlockJacobi::scalar(&[3.0], &[]).unwrap();
        let cache = precompute_smw(&jac, &[Complex64::new(0.5, 1.0)]).unwrap();
        let n = &cache.nodes[0];
        assert_eq!(n.q1, n.qm);
        assert_eq!(n.fmm, n.f1m);
    }

    #[test]
    fn two_by_two_blocks() {
        let jac = BlockJacobi::scalar(&[2.0, 2.0], &[1.0]).unwrap();
        let cache = precompute_smw(&jac, &[c(1.0)]).unwrap();
        let n = &cache.nodes[0];
        assert!((n.q1[(0, 0)] - c(0.375)).norm() < 1e-15);
        assert!((n.q1[(1, 0)] + c(0.125)).norm() < 1e-15);
        assert!((n.f1m[(0, 0)] + c(0.125)).norm() < 1e-15);
        assert!((n.fmm[(0, 0)] - c(0.375)).norm() < 1e-15);
        let params = extract_from_jacobi(&jac).unwrap();
        let delta = CMat::from_element(1, 1, c(-9.0 / 7.0));
        let v = smw_eval(&cache, &delta, c(1.0)).unwrap();
        let kn = kn_eval_tridiag(&jac, &params, &RMat::identity(1, 1), c(1.0)).unwrap();
        assert!((v[(0, 0)] - kn.value[(0, 0)]).norm() < 1e-14);
        let zero = smw_eval(&cache, &CMat::zeros(1, 1), c(1.0)).unwrap();
        assert_eq!(zero[(0, 0)], c(0.375));
    }

    #[test]
    fn matches_direct_modified_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (m, p) = (10, 2);
        let alphas = (0..m)
            .map(|_| {
                let a = RMat::from_fn(p, p, |_, _| rng.gen_range(-1.0..1.0));
                &a * a.transpose() + RMat::identity(p, p) * 2.0
            })
            .collect();
        let betas = (1..m)
            .map(|_| RMat::from_fn(p, p, |i, j| if i <= j { rng.gen_range(0.1..0.5) } else { 0.0 }))
            .collect();
        let jac = BlockJacobi::new(alphas, betas).unwrap();
        let shifts: Vec<Complex64> = (0..8).map(|_| Complex64::new(rng.gen_range(-0.5..1.0), rng.gen_range(0.1..2.0))).collect();
        let cache = precompute_smw(&jac, &shifts).unwrap();
        for node in &cache.nodes {
            let delta = to_complex(&RMat::from_fn(p, p, |_, _| rng.gen_range(-1.0..1.0)));
            let delta = (&delta + delta.transpose()) * c(0.5);
            let v = smw_eval_node(node, &delta).unwrap();
            let dense = modified_dense(&jac, node.s, &delta).try_inverse().unwrap();
            let expect = dense.view((0, 0), (p, p)).into_owned();
            assert!((v - &expect).norm() <= 1e-10 * expect.norm());
        }
    }

    fn chain() -> (BlockJacobi, StieltjesParams) {
        let n = 40;
        let alphas: Vec<f64> = (0..n).map(|k| 0.5 + 0.05 * k as f64).collect();
        let betas: Vec<f64> = (1..n).map(|_| -0.2).collect();
        let jac = BlockJacobi::scalar(&alphas, &betas).unwrap();
        let params = extract_from_jacobi(&jac).unwrap();
        (jac, params)
    }

    #[test]
    fn objective_limits() {
        let (jac, params) = chain();
        let ritz: Vec<f64> = jac.ritz_values().iter().map(|v| -v).collect();
        let contour = build_contour(&ritz, 1, ContourPolicy::default()).unwrap();
        let cache = precompute_smw(&jac, &contour.nodes).unwrap();
        let big = kn_objective(&cache, &params, &contour, 1e12).unwrap();
        let gauss = gauss_objective(&cache, &contour).unwrap();
        assert!((big.value - gauss.value).abs() <= 1e-6 * gauss.value.max(1e-300));
        for phi in [1e-3, 0.1, 1.0, 10.0] {
            assert!(kn_objective(&cache, &params, &contour, phi).unwrap().value >= 0.0);
        }
        for node in &cache.nodes {
            let g = gauss_eval(&jac, node.s).unwrap().value[(0, 0)];
            let r = outflow_ratio(&node.f11);
            if g.re > 0.0 {
                assert!((r.unwrap() - (g.im / g.re).abs()).abs() < 1e-12 * (1.0 + r.unwrap()));
            }
        }
    }

    #[test]
    fn rejects_non_positive_phi() {
        let (jac, params) = chain();
        let ritz: Vec<f64> = jac.ritz_values().iter().map(|v| -v).collect();
        let contour = build_contour(&ritz, 1, ContourPolicy::default()).unwrap();
        let cache = precompute_smw(&jac, &contour.nodes).unwrap();
        assert!(kn_objective(&cache, &params, &contour, 0.0).is_err());
    }
}
