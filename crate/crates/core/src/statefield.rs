//! Time-harmonic states reconstructed from the Lanczos basis.
//!
//! For `s = (iω + ε)²` the state `Q_m (T(s) + sI)⁻¹ E_1 R_B` approximates
//! `(A + sI)⁻¹ B`, the frequency-domain wave field driven by the sources.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lanczos::LanczosDecomposition;
use crate::linalg::{principal_sqrt, to_complex, CMat, RMat, SmallMatrix};
use crate::quadratures::{kn_delta_alpha, radau_delta_alpha};
use crate::stieltjes::StieltjesParams;

pub const DEFAULT_OMEGA: f64 = 0.3;
pub const DEFAULT_EPSILON: f64 = DEFAULT_OMEGA / 200.0;

#[derive(Debug, Clone, PartialEq)]
pub enum StateVariant {
    Gauss,
    Radau,
    Kn(SmallMatrix),
}

impl StateVariant {
    pub fn name(&self) -> &'static str {
        match self {
            StateVariant::Gauss => "gauss",
            StateVariant::Radau => "radau",
            StateVariant::Kn(_) => "kn",
        }
    }
}

/// `(iω + ε)²`.
pub fn harmonic_shift(omega: f64, epsilon: f64) -> Complex64 {
    let z = Complex64::new(epsilon, omega);
    z * z
}

/// n×p complex state for the chosen termination of the string.
pub fn state_solution(
    dec: &LanczosDecomposition,
    params: &StieltjesParams,
    variant: &StateVariant,
    omega: f64,
    epsilon: f64,
) -> Result<CMat> {
    let basis = dec.basis.as_ref().ok_or(Error::MissingBasis)?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let s = harmonic_shift(omega, epsilon);
    let mut t = dec.jacobi.shifted(s);
    let last = t.blocks() - 1;
    match variant {
        StateVariant::Gauss => {}
        StateVariant::Radau => t.diag[last] += to_complex(&radau_delta_alpha(params)),
        StateVariant::Kn(phi) => t.diag[last] += kn_delta_alpha(params, phi, principal_sqrt(s))?,
    }
    let ldl = t.factor().map_err(|e| Error::SingularStep { index: e.block + 1 })?;
    let coeffs = ldl.solve_unit_block(0) * to_complex(&dec.rhs_factor);
    Ok(to_complex(basis) * coeffs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSnapshot {
    pub t: f64,
    pub omega: f64,
    /// `Re(state · e^{iωt})` at every node.
    pub field: Vec<f64>,
}

pub fn snapshot(state: &[Complex64], omega: f64, t: f64) -> StateSnapshot {
    let phase = Complex64::from_polar(1.0, omega * t);
    StateSnapshot {
        t,
        omega,
        field: state.iter().map(|u| (u * phase).re).collect(),
    }
}

/// Rows are times, columns are the nodes in `line`.
pub fn cross_section_series(state: &[Complex64], omega: f64, line: &[usize], times: &[f64]) -> RMat {
    RMat::from_fn(times.len(), line.len(), |r, c| {
        (state[line[c]] * Complex64::from_polar(1.0, omega * times[r])).re
    })
}

/// Writes a header row of column labels after a leading `t` column, then one
/// row per time.
pub fn write_series_csv<W: Write>(out: W, labels: &[String], times: &[f64], values: &RMat) -> Result<()> {
    if values.nrows() != times.len() || values.ncols() != labels.len() {
        return Err(Error::DimensionMismatch("series shape does not match labels and times".into()));
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(labels.iter().cloned());
    w.write_record(&header)?;
    for (r, t) in times.iter().enumerate() {
        let mut row = vec![format!("{t:?}")];
        row.extend(values.row(r).iter().map(|v| format!("{v:?}")));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lanczos::block_lanczos;
    use crate::problems::reference::{solve_shifted, ReferencePolicy};
    use crate::sparse::SparseSpdOperator;
    use crate::stieltjes::extract_stieltjes;

    fn small() -> (SparseSpdOperator, RMat) {
        let n = 8;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.5 + 0.1 * i as f64));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = SparseSpdOperator::from_triplets(n, &t).unwrap();
        let mut b = RMat::zeros(n, 1);
        b[(2, 0)] = 1.0;
        (a, b)
    }

    #[test]
    fn real_shift_gives_real_state() {
        let (a, b) = small();
        let dec = block_lanczos(&a, &b, 4, true, true).unwrap();
        let params = extract_stieltjes(&dec, false).unwrap();
        assert_eq!(harmonic_shift(0.0, 1.0), Complex64::new(1.0, 0.0));
        let u = state_solution(&dec, &params, &StateVariant::Gauss, 0.0, 1.0).unwrap();
        assert!(u.iter().all(|z| z.im.abs() < 1e-15));
    }

    #[test]
    fn full_krylov_space_matches_direct_solve() {
        let (a, b) = small();
        let dec = block_lanczos(&a, &b, 8, true, true).unwrap();
        let params = extract_stieltjes(&dec, false).unwrap();
        let (omega, eps) = (0.7, 0.05);
        let u = state_solution(&dec, &params, &StateVariant::Gauss, omega, eps).unwrap();
        let x = solve_shifted(&a, &b, harmonic_shift(omega, eps), &ReferencePolicy::default()).unwrap();
        assert!((&u - &x).norm() < 1e-10 * x.norm());
    }

    #[test]
    fn conjugation_symmetry() {
        let (a, b) = small();
        let dec = block_lanczos(&a, &b, 4, true, true).unwrap();
        let params = extract_stieltjes(&dec, false).unwrap();
        for v in [StateVariant::Gauss, StateVariant::Radau, StateVariant::Kn(RMat::identity(1, 1))] {
            let u = state_solution(&dec, &params, &v, 0.4, 0.01).unwrap();
            let w = state_solution(&dec, &params, &v, -0.4, 0.01).unwrap();
            assert!((u.conjugate() - w).norm() < 1e-12 * u.norm());
        }
    }

    #[test]
    fn missing_basis() {
        let (a, b) = small();
        let dec = block_lanczos(&a, &b, 3, true, false).unwrap();
        let params = extract_stieltjes(&dec, false).unwrap();
        assert!(matches!(
            state_solution(&dec, &params, &StateVariant::Gauss, 0.3, 0.01),
            Err(Error::MissingBasis)
        ));
    }

    #[test]
    fn snapshots_and_series() {
        let state = vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.25)];
        let omega = 2.0;
        let s0 = snapshot(&state, omega, 0.0);
        assert_eq!(s0.field, vec![1.0, -0.5]);
        let half = snapshot(&state, omega, std::f64::consts::PI / omega);
        for (a, b) in half.field.iter().zip(&s0.field) {
            assert!((a + b).abs() < 1e-14);
        }
        let times: Vec<f64> = (0..64).map(|k| k as f64 * std::f64::consts::TAU / (64.0 * omega)).collect();
        let series = cross_section_series(&state, omega, &[0, 1], &times);
        for c in 0..2 {
            let amp = series.column(c).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!((amp - state[c].norm()).abs() < 1e-2 * state[c].norm());
        }
        let single = cross_section_series(&state, omega, &[1], &[0.3]);
        assert_eq!(single[(0, 0)], snapshot(&state, omega, 0.3).field[1]);
    }

    #[test]
    fn travelling_wave_crossings_advance() {
        let k = 0.5;
        let omega = 1.0;
        let xs: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let state: Vec<Complex64> = xs.iter().map(|x| Complex64::from_polar(1.0, -k * x)).collect();
        // cos(ωt − kx) first crosses zero going down at ωt − kx = π/2.
        let times: Vec<f64> = (0..4000).map(|i| i as f64 * 1e-3).collect();
        let line: Vec<usize> = (0..5).collect();
        let series = cross_section_series(&state, omega, &line, &times);
        let crossing = |c: usize| {
            (1..times.len())
                .find(|&r| series[(r - 1, c)] > 0.0 && series[(r, c)] <= 0.0)
                .map(|r| times[r])
                .unwrap()
        };
        let t0 = crossing(0);
        for c in 1..5 {
            let expect = t0 + k * xs[c] / omega;
            assert!((crossing(c) - expect).abs() < 2e-3);
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        let values = RMat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.5]);
        write_series_csv(&mut buf, &["a".into(), "b".into()], &[0.0, 0.5], &values).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,a,b\n0.0,1.0,2.0\n0.5,3.0,4.5\n");
    }
}
