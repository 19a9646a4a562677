//! Choice of the Kreĭn–Nudelman damper φ by maximizing the relative energy
//! outflow through a contour around the dense part of the spectrum.

pub mod contour;
pub mod nelder_mead;
pub mod port_hamiltonian;
pub mod smw;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lanczos::BlockJacobi;
use crate::stieltjes::StieltjesParams;

pub use contour::{build_contour, Contour, ContourPolicy};
pub use nelder_mead::{maximize, NelderMeadOptions, NelderMeadResult};
pub use port_hamiltonian::{assemble_first_order_pencil, energy_split, FirstOrderPencil};
pub use smw::{gauss_objective, kn_objective, outflow_ratio, precompute_smw, smw_eval, smw_eval_node, ObjectiveValue, SmwCache, SmwNode};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiResult {
    pub phi: f64,
    pub objective_value: f64,
    /// Every evaluated `(φ, objective)` pair in order.
    pub history: Vec<(f64, f64)>,
    pub averaged_phi: Option<f64>,
    pub converged: bool,
}

/// Maximizes `objective(φ)` over `log10 φ` starting from `init`.
pub fn maximize_phi<F>(mut objective: F, init: f64, opts: NelderMeadOptions) -> Result<PhiResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(init > 0.0 && init.is_finite()) {
        return Err(Error::InvalidArgument(format!("initial phi must be positive, got {init}")));
    }
    let x0 = init.log10();
    let to_phi = |x: f64| if x == x0 { init } else { 10f64.powf(x) };
    let r = maximize(|x| objective(to_phi(x)), x0, opts)?;
    Ok(PhiResult {
        phi: to_phi(r.x),
        objective_value: r.value,
        history: r.history.into_iter().map(|(x, v)| (to_phi(x), v)).collect(),
        averaged_phi: None,
        converged: r.converged,
    })
}

/// Optimizes the scalar damper `φ·I` for the string in `params` using the
/// cached resolvent columns on `contour`.
pub fn optimize_phi(cache: &SmwCache, params: &StieltjesParams, contour: &Contour, init: f64) -> Result<PhiResult> {
    maximize_phi(
        |phi| Ok(kn_objective(cache, params, contour, phi)?.value),
        init,
        NelderMeadOptions::default(),
    )
}

/// Everything produced by one φ selection at a fixed Lanczos step.
#[derive(Debug, Clone)]
pub struct PhiSelection {
    pub result: PhiResult,
    pub contour: Contour,
    /// Contour nodes skipped at the returned φ.
    pub skipped: usize,
}

/// Builds the contour from the Ritz values of `T_m`, caches the resolvent
/// columns and optimizes φ.
pub fn select_phi(jac: &BlockJacobi, params: &StieltjesParams, policy: ContourPolicy, init: f64) -> Result<PhiSelection> {
    let ritz: Vec<f64> = jac.ritz_values().iter().map(|v| -v).collect();
    let contour = build_contour(&ritz, jac.p(), policy)?;
    let cache = precompute_smw(jac, &contour.nodes)?;
    let result = optimize_phi(&cache, params, &contour, init)?;
    let skipped = kn_objective(&cache, params, &contour, result.phi)?.skipped;
    Ok(PhiSelection {
        result,
        contour,
        skipped,
    })
}

/// Starting value for the φ search: the low-frequency impedance
/// `√(tr γ̂_m / tr γ_m)` of a uniform string continuing the last segment.
pub fn impedance_init(params: &StieltjesParams) -> f64 {
    let m = params.gammas.len();
    (params.gamma_hats[m - 1].trace() / params.gammas[m - 1].trace()).sqrt()
}

/// Geometric mean of the last `window` entries of a φ history.
pub fn average_phi(history: &[f64], window: usize) -> Result<f64> {
    if window == 0 {
        return Err(Error::InvalidArgument("averaging window must be at least 1".into()));
    }
    if history.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let tail = &history[history.len().saturating_sub(window)..];
    if let [only] = tail {
        return Ok(*only);
    }
    Ok((tail.iter().map(|v| v.ln()).sum::<f64>() / tail.len() as f64).exp())
}
