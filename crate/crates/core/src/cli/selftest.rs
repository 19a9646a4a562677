//! Built-in invariant checks on small cases.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::lanczos::{assemble_tridiagonal, block_lanczos, BlockJacobi};
use crate::linalg::{block_qr, loewner_gap, principal_sqrt, sym_eigenvalues, CMat, RMat};
use crate::optimizer::{assemble_first_order_pencil, precompute_smw, smw_eval_node};
use crate::problems::reference_transfer;
use crate::quadratures::{
    gauss_eval, kn_delta_alpha, kn_eval_tridiag, radau_eval, radau_tridiagonal, sqrt_terminator_closed,
};
use crate::sparse::SparseSpdOperator;
use crate::stieltjes::{extract_impl, reconstruct_tridiagonal, StieltjesParams};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Options for [`run_selftest`]. `fault` flips the sign of the `κ̂` update in
/// the Stieltjes extraction so that the suite must fail.
#[derive(Debug, Clone, Copy, Default)]
pub struct SelftestOptions {
    pub seed: u64,
    pub fault: bool,
}

struct Case {
    a: SparseSpdOperator,
    b: RMat,
    jac: BlockJacobi,
    params: StieltjesParams,
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> RMat {
    let g = RMat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let mut a = &g * g.transpose() / n as f64;
    for i in 0..n {
        a[(i, i)] += 0.05;
    }
    a
}

fn random_cases(opts: SelftestOptions) -> Result<Vec<Case>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let kappa_sign = if opts.fault { -1.0 } else { 1.0 };
    let mut cases = Vec::new();
    for k in 0..12 {
        let n = rng.gen_range(20..60);
        let p = 1 + k % 3;
        let m = rng.gen_range(2..=6);
        let dense = random_spd(&mut rng, n);
        let a = SparseSpdOperator::from_dense(&dense)?;
        let b = RMat::from_fn(n, p, |_, _| rng.gen_range(-1.0..1.0));
        let dec = block_lanczos(&a, &b, m, true, false)?;
        let params = extract_impl(&dec.jacobi, None, kappa_sign)?;
        // Work with an orthonormal B so transfer values compare directly.
        let (q, _) = block_qr(&b)?;
        cases.push(Case {
            a,
            b: q,
            jac: dec.jacobi,
            params,
        });
    }
    Ok(cases)
}

fn check(name: &'static str, worst: f64, tol: f64) -> CheckResult {
    CheckResult {
        name,
        passed: worst <= tol,
        detail: format!("worst {worst:.3e} (tolerance {tol:.0e})"),
    }
}

fn rel(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / b.norm()
}

fn shifts(rng: &mut ChaCha8Rng, count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|_| Complex64::new(rng.gen_range(0.01..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

fn run_checks(opts: SelftestOptions) -> Result<Vec<CheckResult>> {
    let cases = random_cases(opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let mut out = Vec::new();

    let worst = cases
        .iter()
        .map(|c| {
            let t = assemble_tridiagonal(&c.jac);
            (reconstruct_tridiagonal(&c.params) - &t).norm() / t.norm()
        })
        .fold(0.0, f64::max);
    out.push(check("ldl_round_trip", worst, 1e-11));

    let mut worst = 0.0f64;
    for c in &cases {
        let dense = c.a.to_dense();
        let t = assemble_tridiagonal(&c.jac);
        let p = c.b.ncols();
        let (mut ai_b, mut ti_e) = (c.b.clone(), RMat::identity(t.nrows(), p));
        for _ in 0..(2 * c.jac.m()) {
            let lhs = ti_e.rows(0, p).into_owned();
            let rhs = c.b.transpose() * &ai_b;
            worst = worst.max((lhs - &rhs).norm() / rhs.norm().max(1e-300));
            ai_b = &dense * ai_b;
            ti_e = &t * ti_e;
        }
    }
    out.push(check("moment_matching", worst, 1e-8));

    let a2 = SparseSpdOperator::from_dense(&RMat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]))?;
    let e1 = RMat::from_column_slice(2, 1, &[1.0, 0.0]);
    let dec2 = block_lanczos(&a2, &e1, 2, true, false)?;
    let g = gauss_eval(&dec2.jacobi, Complex64::new(1.0, 0.0))?.value[(0, 0)];
    out.push(check("worked_two_by_two", (g - 0.375).norm(), 1e-12));

    let sq = sqrt_terminator_closed(1.0, 1.0, Complex64::new(1.0, 0.0));
    out.push(check("sqrt_terminator", (sq - 5f64.sqrt() / 2.0).norm(), 1e-12));

    let mut worst = 0.0f64;
    for c in &cases {
        let p = c.jac.p();
        for s in shifts(&mut rng, 3) {
            let g = gauss_eval(&c.jac, s)?.value;
            let r = radau_eval(&c.jac, &c.params, s)?.value;
            let big = kn_eval_tridiag(&c.jac, &c.params, &(RMat::identity(p, p) * 1e12), s)?.value;
            let small = kn_eval_tridiag(&c.jac, &c.params, &(RMat::identity(p, p) * 1e-12), s)?.value;
            worst = worst.max(rel(&big, &g)).max(rel(&small, &r));
        }
    }
    out.push(check("gauss_radau_limits", worst, 1e-6));

    let mut worst = 0.0f64;
    for c in &cases {
        let p = c.jac.p();
        let phi = RMat::identity(p, p) * 0.7;
        let nodes = shifts(&mut rng, 4);
        let cache = precompute_smw(&c.jac, &nodes)?;
        for node in &cache.nodes {
            let delta = kn_delta_alpha(&c.params, &phi, principal_sqrt(node.s))?;
            let direct = kn_eval_tridiag(&c.jac, &c.params, &phi, node.s)?.value;
            worst = worst.max(rel(&smw_eval_node(node, &delta)?, &direct));
        }
    }
    out.push(check("smw_consistency", worst, 1e-10));

    let worst = cases
        .iter()
        .map(|c| {
            let t = assemble_tridiagonal(&c.jac);
            let scale = sym_eigenvalues(&t).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut ev: Vec<f64> = sym_eigenvalues(&radau_tridiagonal(&c.jac, &c.params)).iter().map(|v| v.abs()).collect();
            ev.sort_by(f64::total_cmp);
            ev[c.jac.p() - 1] / scale
        })
        .fold(0.0, f64::max);
    out.push(check("radau_null_space", worst, 1e-10));

    let mut worst = 0.0f64;
    for c in &cases {
        let p = c.jac.p();
        let phi = RMat::identity(p, p) * 1.3;
        let pencil = assemble_first_order_pencil(&c.params, Some(&phi))?;
        for s in shifts(&mut rng, 2) {
            let kn = kn_eval_tridiag(&c.jac, &c.params, &phi, s)?.value;
            let expect = kn / principal_sqrt(s);
            worst = worst.max(rel(&pencil.first_order_transfer(s)?, &expect));
        }
    }
    out.push(check("pencil_equivalence", worst, 1e-10));

    let mut worst = f64::NEG_INFINITY;
    for c in cases.iter().filter(|c| c.jac.p() == 1) {
        for mut s in shifts(&mut rng, 4) {
            s.im = s.im.abs() + 1e-3;
            let kn = kn_eval_tridiag(&c.jac, &c.params, &RMat::identity(1, 1), s)?.value[(0, 0)];
            worst = worst.max(kn.im);
        }
    }
    out.push(CheckResult {
        name: "stieltjes_sign",
        passed: worst < 0.0,
        detail: format!("largest Im F {worst:.3e} (must be negative)"),
    });

    let mut worst = f64::INFINITY;
    for c in &cases {
        let p = c.jac.p();
        for k in 0..4 {
            let s = Complex64::new(10f64.powi(-k), 0.0);
            let f = reference_transfer(&c.a, &c.b, s)?.value;
            let g = gauss_eval(&c.jac, s)?.value;
            let r = radau_eval(&c.jac, &c.params, s)?.value;
            let kn = kn_eval_tridiag(&c.jac, &c.params, &RMat::identity(p, p), s)?.value;
            let sym = |m: &CMat| (m + m.transpose()) * Complex64::new(0.5, 0.0);
            let (f, g, r, kn) = (sym(&f), sym(&g), sym(&r), sym(&kn));
            let scale = f.norm();
            for gap in [loewner_gap(&g, &f)?, loewner_gap(&f, &r)?, loewner_gap(&g, &kn)?, loewner_gap(&kn, &r)?] {
                worst = worst.min(gap / scale);
            }
        }
    }
    out.push(CheckResult {
        name: "two_sided_bounds",
        passed: worst >= -1e-10,
        detail: format!("smallest relative Loewner gap {worst:.3e}"),
    });

    Ok(out)
}

/// Runs every check; a check that cannot be evaluated counts as a failure.
pub fn run_selftest(opts: SelftestOptions) -> SelftestReport {
    let checks = match run_checks(opts) {
        Ok(checks) => checks,
        Err(e) => vec![CheckResult {
            name: "setup",
            passed: false,
            detail: e.to_string(),
        }],
    };
    SelftestReport { checks }
}
