//! Batch drivers behind the subcommands.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{LineSpec, PhiPolicy, RunConfig, VariantName};
use crate::error::{Error, Result};
use crate::lanczos::{BlockLanczos, LanczosDecomposition, LanczosOptions};
use crate::linalg::{CMat, RMat, SmallMatrix};
use crate::optimizer::{average_phi, impedance_init, select_phi, ContourPolicy, PhiSelection};
use crate::problems::{reference_transfer, ModelProblem};
use crate::quadratures::{averaged_eval, extended_kn_eval, gauss_eval, kn_eval_tridiag, radau_eval};
use crate::statefield::{
    cross_section_series, snapshot, state_solution, write_series_csv, StateVariant, DEFAULT_EPSILON, DEFAULT_OMEGA,
};
use crate::stieltjes::{extract_stieltjes, StieltjesParams};

/// One line of the convergence and sweep CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub m: usize,
    pub shift_re: f64,
    pub shift_im: f64,
    pub variant: String,
    pub rel_error_fro: f64,
    pub phi_used: Option<f64>,
    pub objective: Option<f64>,
    pub wall_ms: f64,
}

pub const ERROR_CSV_HEADER: &str = "m,shift_re,shift_im,variant,rel_error_fro,phi_used,objective,wall_ms";

pub fn write_error_csv(path: &Path, rows: &[ErrorRow]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record(ERROR_CSV_HEADER.split(','))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_error_csv(path: &Path) -> Result<Vec<ErrorRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<ErrorRow>, _>>()?)
}

/// State of the Lanczos run and the φ choice at one checkpoint.
pub struct Checkpoint<'a> {
    pub m: usize,
    pub dec: &'a LanczosDecomposition,
    pub params: &'a StieltjesParams,
    /// φ used by the Kreĭn–Nudelman variants (averaged when optimizing).
    pub phi: Option<f64>,
    /// Result of the φ optimization performed at this checkpoint.
    pub selection: Option<&'a PhiSelection>,
    pub init_phi: Option<f64>,
    pub warning: Option<String>,
}

/// Runs Lanczos through the configured checkpoints, choosing φ along the way.
pub fn run_checkpoints<F>(cfg: &RunConfig, problem: &ModelProblem, keep_basis: bool, mut visit: F) -> Result<()>
where
    F: FnMut(&Checkpoint) -> Result<()>,
{
    let p = problem.b.ncols();
    if cfg.m_max * p > problem.a.n() {
        return Err(Error::Config(format!(
            "m_max·p = {} exceeds the problem size {}",
            cfg.m_max * p,
            problem.a.n()
        )));
    }
    let with_tail = cfg.active_variants().contains(&VariantName::ExtendedKn);
    let policy = ContourPolicy {
        min_ritz: cfg.min_ritz,
        n_pts: cfg.contour_points,
    };
    let mut run = BlockLanczos::new(&problem.a, &problem.b, LanczosOptions { reorth: true, keep_basis })?;
    let mut history: Vec<f64> = Vec::new();
    for (index, m) in cfg.checkpoints().into_iter().enumerate() {
        run.advance_to(m)?;
        let dec = run.decomposition();
        let params = extract_stieltjes(&dec, with_tail && dec.residual.is_some())?;
        let mut selection = None;
        let mut warning = None;
        let mut init_phi = None;
        let phi = match cfg.phi_policy {
            None => None,
            Some(PhiPolicy::Fixed(phi)) => Some(phi),
            Some(PhiPolicy::Optimize { every, average_window }) => {
                if index % every == 0 {
                    let init = impedance_init(&params);
                    init_phi = Some(init);
                    match select_phi(&dec.jacobi, &params, policy, init) {
                        Ok(sel) => {
                            history.push(sel.result.phi);
                            selection = Some(sel);
                        }
                        Err(e) => warning = Some(e.to_string()),
                    }
                }
                if history.is_empty() {
                    None
                } else {
                    Some(average_phi(&history, average_window)?)
                }
            }
        };
        visit(&Checkpoint {
            m,
            dec: &dec,
            params: &params,
            phi,
            selection: selection.as_ref(),
            init_phi,
            warning,
        })?;
    }
    Ok(())
}

fn scalar(v: f64, p: usize) -> SmallMatrix {
    RMat::identity(p, p) * v
}

/// Value of one variant for the raw input block.
pub fn evaluate_variant(
    variant: VariantName,
    cp: &Checkpoint,
    xi: Option<f64>,
    s: Complex64,
) -> Result<Option<CMat>> {
    let jac = &cp.dec.jacobi;
    let p = jac.p();
    let value = match variant {
        VariantName::Gauss => gauss_eval(jac, s)?.value,
        VariantName::Radau => radau_eval(jac, cp.params, s)?.value,
        VariantName::Average => averaged_eval(jac, cp.params, s)?.value,
        VariantName::Kn => match cp.phi {
            Some(phi) => kn_eval_tridiag(jac, cp.params, &scalar(phi, p), s)?.value,
            None => return Ok(None),
        },
        VariantName::ExtendedKn => match cp.phi {
            Some(phi) => {
                let xi = match xi {
                    Some(v) => scalar(v, p),
                    None => cp.params.gammas[cp.params.m() - 1].clone(),
                };
                extended_kn_eval(cp.dec, cp.params, &scalar(phi, p), &xi, s)?.value
            }
            None => return Ok(None),
        },
    };
    Ok(Some(cp.dec.to_raw(&value)))
}

pub fn relative_error(value: &CMat, reference: &CMat) -> f64 {
    (value - reference).norm() / reference.norm()
}

/// Reference transfer values, one per shift.
pub fn reference_values(problem: &ModelProblem, shifts: &[Complex64]) -> Result<Vec<CMat>> {
    shifts
        .par_iter()
        .map(|&s| reference_transfer(&problem.a, &problem.b, s).map(|t| t.value))
        .collect()
}

fn checkpoint_rows(
    cfg: &RunConfig,
    cp: &Checkpoint,
    shifts: &[Complex64],
    refs: &[CMat],
    variants: &[VariantName],
) -> Result<Vec<ErrorRow>> {
    let objective = cp.selection.map(|s| s.result.objective_value);
    let per_shift: Vec<Vec<ErrorRow>> = shifts
        .par_iter()
        .zip(refs.par_iter())
        .map(|(&s, reference)| {
            let mut rows = Vec::new();
            for &v in variants {
                let start = Instant::now();
                let Some(value) = evaluate_variant(v, cp, cfg.xi, s)? else {
                    continue;
                };
                let wall_ms = if cfg.timing {
                    start.elapsed().as_secs_f64() * 1e3
                } else {
                    0.0
                };
                let uses_phi = v.needs_phi();
                rows.push(ErrorRow {
                    m: cp.m,
                    shift_re: s.re,
                    shift_im: s.im,
                    variant: v.as_str().to_string(),
                    rel_error_fro: relative_error(&value, reference),
                    phi_used: if uses_phi { cp.phi } else { None },
                    objective: if uses_phi { objective } else { None },
                    wall_ms,
                });
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(per_shift.into_iter().flatten().collect())
}

/// Error of every variant at every shift and checkpoint.
pub fn convergence_rows(cfg: &RunConfig, problem: &ModelProblem) -> Result<Vec<ErrorRow>> {
    let shifts = cfg.shift_list();
    if shifts.is_empty() {
        return Err(Error::Config("convergence needs at least one shift".into()));
    }
    let refs = reference_values(problem, &shifts)?;
    let variants = cfg.active_variants();
    let mut rows = Vec::new();
    run_checkpoints(cfg, problem, false, |cp| {
        rows.extend(checkpoint_rows(cfg, cp, &shifts, &refs, &variants)?);
        Ok(())
    })?;
    Ok(rows)
}

/// Error of every variant over the sweep shifts at `m_max`.
pub fn sweep_rows(cfg: &RunConfig, problem: &ModelProblem) -> Result<Vec<ErrorRow>> {
    let shifts = cfg.sweep_shifts();
    if shifts.is_empty() {
        return Err(Error::Config("sweep needs a shift grid or a shift list".into()));
    }
    let refs = reference_values(problem, &shifts)?;
    let variants = cfg.active_variants();
    let mut rows = Vec::new();
    run_checkpoints(cfg, problem, false, |cp| {
        if cp.m == cfg.m_max {
            rows = checkpoint_rows(cfg, cp, &shifts, &refs, &variants)?;
        }
        Ok(())
    })?;
    Ok(rows)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeEntry {
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub averaged_phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contour_d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contour_delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped_nodes: Option<usize>,
    /// Median relative error on the validation shifts at `averaged_phi`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kn_error: Option<f64>,
    /// φ on the cheat grid with the smallest median validation error.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cheated_phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cheated_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeReport {
    pub n: usize,
    pub p: usize,
    pub validation_shifts: Vec<[f64; 2]>,
    pub checkpoints: Vec<OptimizeEntry>,
}

fn median_kn_error(cp: &Checkpoint, phi: f64, shifts: &[Complex64], refs: &[CMat]) -> Result<f64> {
    let p = cp.dec.p();
    let errors = shifts
        .iter()
        .zip(refs)
        .map(|(&s, reference)| {
            let value = kn_eval_tridiag(&cp.dec.jacobi, cp.params, &scalar(phi, p), s)?.value;
            Ok(relative_error(&cp.dec.to_raw(&value), reference))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(median(&errors))
}

/// φ optimization at every checkpoint, with the cheated φ for comparison.
pub fn optimize_report(cfg: &RunConfig, problem: &ModelProblem) -> Result<OptimizeReport> {
    let mut cfg = cfg.clone();
    if !matches!(cfg.phi_policy, Some(PhiPolicy::Optimize { .. })) {
        cfg.phi_policy = Some(PhiPolicy::Optimize {
            every: 1,
            average_window: 5,
        });
    }
    let shifts = cfg.validation_list();
    let refs = reference_values(problem, &shifts)?;
    let grid: Vec<f64> = (0..cfg.cheat_points)
        .map(|k| {
            let t = if cfg.cheat_points == 1 {
                0.0
            } else {
                k as f64 / (cfg.cheat_points - 1) as f64
            };
            10f64.powf(cfg.cheat_decades[0] + t * (cfg.cheat_decades[1] - cfg.cheat_decades[0]))
        })
        .collect();
    let mut entries = Vec::new();
    run_checkpoints(&cfg, problem, false, |cp| {
        let mut entry = OptimizeEntry {
            m: cp.m,
            init_phi: cp.init_phi,
            phi: None,
            averaged_phi: cp.phi,
            objective: None,
            converged: None,
            evaluations: None,
            contour_d: None,
            contour_delta: None,
            skipped_nodes: None,
            kn_error: None,
            cheated_phi: None,
            cheated_error: None,
            warning: cp.warning.clone(),
        };
        if let Some(sel) = cp.selection {
            entry.phi = Some(sel.result.phi);
            entry.objective = Some(sel.result.objective_value);
            entry.converged = Some(sel.result.converged);
            entry.evaluations = Some(sel.result.history.len());
            entry.contour_d = Some(sel.contour.d);
            entry.contour_delta = Some(sel.contour.delta);
            entry.skipped_nodes = Some(sel.skipped);
        }
        if !shifts.is_empty() {
            if let Some(phi) = cp.phi {
                entry.kn_error = Some(median_kn_error(cp, phi, &shifts, &refs)?);
            }
            let scored = grid
                .par_iter()
                .map(|&phi| median_kn_error(cp, phi, &shifts, &refs).map(|e| (phi, e)))
                .collect::<Result<Vec<_>>>()?;
            let best = scored.into_iter().fold((f64::NAN, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            if best.1.is_finite() {
                entry.cheated_phi = Some(best.0);
                entry.cheated_error = Some(best.1);
            }
        }
        entries.push(entry);
        Ok(())
    })?;
    Ok(OptimizeReport {
        n: problem.a.n(),
        p: problem.b.ncols(),
        validation_shifts: shifts.iter().map(|s| [s.re, s.im]).collect(),
        checkpoints: entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRow {
    pub variant: String,
    pub source: usize,
    pub t: f64,
    pub node: usize,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub value: f64,
}

/// States of each requested termination at `m_max`.
pub struct StateOutput {
    pub omega: f64,
    pub epsilon: f64,
    pub times: Vec<f64>,
    /// `(variant name, n×p complex state)`.
    pub states: Vec<(String, CMat)>,
    /// Nodes of the cross-section, with their coordinate along the line.
    pub line: Vec<(usize, Option<f64>)>,
}

fn resolve_line(cfg: &RunConfig, problem: &ModelProblem) -> Result<Vec<(usize, Option<f64>)>> {
    let grid = problem.grid();
    let spec = match (&cfg.line, problem.diffusion.as_ref()) {
        (Some(spec), _) => spec.clone(),
        (None, Some((d, s))) => LineSpec::Y(d.grid.coords(s.nodes[0]).1),
        (None, None) => return Ok(Vec::new()),
    };
    match spec {
        LineSpec::Nodes(nodes) => {
            if let Some(&bad) = nodes.iter().find(|&&k| k >= problem.a.n()) {
                return Err(Error::Config(format!("line node {bad} is out of range")));
            }
            Ok(nodes.into_iter().map(|k| (k, grid.map(|g| g.coords(k).0))).collect())
        }
        LineSpec::X(x) | LineSpec::Y(x) => {
            let grid = grid.ok_or_else(|| Error::Config("x/y lines need a grid problem; use nodes".into()))?;
            let horizontal = matches!(spec, LineSpec::Y(_));
            let (across, along) = if horizontal { (&grid.y, &grid.x) } else { (&grid.x, &grid.y) };
            let range = across.interior_start..across.interior_start + across.interior_len;
            let fixed = range
                .min_by(|&a, &b| (across.nodes[a] - x).abs().total_cmp(&(across.nodes[b] - x).abs()))
                .ok_or_else(|| Error::Config("empty interior".into()))?;
            Ok((along.interior_start..along.interior_start + along.interior_len)
                .map(|k| {
                    let node = if horizontal { grid.index(k, fixed) } else { grid.index(fixed, k) };
                    (node, Some(along.nodes[k]))
                })
                .collect())
        }
    }
}

pub fn state_output(cfg: &RunConfig, problem: &ModelProblem) -> Result<StateOutput> {
    let omega = cfg.omega.unwrap_or(DEFAULT_OMEGA);
    let epsilon = cfg.epsilon.unwrap_or(if cfg.omega.is_some() { omega / 200.0 } else { DEFAULT_EPSILON });
    let times = cfg.times.clone().unwrap_or_else(|| vec![0.0]);
    let line = resolve_line(cfg, problem)?;
    let p = problem.b.ncols();
    let mut states = Vec::new();
    run_checkpoints(cfg, problem, true, |cp| {
        if cp.m != cfg.m_max {
            return Ok(());
        }
        for v in cfg.active_variants() {
            let variant = match v {
                VariantName::Gauss => StateVariant::Gauss,
                VariantName::Radau => StateVariant::Radau,
                VariantName::Kn => match cp.phi {
                    Some(phi) => StateVariant::Kn(scalar(phi, p)),
                    None => continue,
                },
                VariantName::Average | VariantName::ExtendedKn => continue,
            };
            let u = state_solution(cp.dec, cp.params, &variant, omega, epsilon)?;
            states.push((v.as_str().to_string(), u));
        }
        Ok(())
    })?;
    Ok(StateOutput {
        omega,
        epsilon,
        times,
        states,
        line,
    })
}

pub fn write_state(out: &StateOutput, problem: &ModelProblem, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let path = dir.join("state_snapshots.csv");
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file);
    for (name, u) in &out.states {
        for j in 0..u.ncols() {
            let column: Vec<Complex64> = u.column(j).iter().copied().collect();
            for &t in &out.times {
                let snap = snapshot(&column, out.omega, t);
                for (node, value) in snap.field.iter().enumerate() {
                    let (x, y) = match problem.grid() {
                        Some(g) => {
                            let (x, y) = g.coords(node);
                            (Some(x), Some(y))
                        }
                        None => (None, None),
                    };
                    w.serialize(SnapshotRow {
                        variant: name.clone(),
                        source: j,
                        t,
                        node,
                        x,
                        y,
                        value: *value,
                    })?;
                }
            }
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    written.push(path);

    if !out.line.is_empty() {
        let nodes: Vec<usize> = out.line.iter().map(|(k, _)| *k).collect();
        let labels: Vec<String> = out
            .line
            .iter()
            .map(|(k, c)| match c {
                Some(c) => format!("{c:?}"),
                None => format!("node{k}"),
            })
            .collect();
        for (name, u) in &out.states {
            for j in 0..u.ncols() {
                let column: Vec<Complex64> = u.column(j).iter().copied().collect();
                let series = cross_section_series(&column, out.omega, &nodes, &out.times);
                let path = dir.join(format!("cross_section_{name}_{j}.csv"));
                let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
                write_series_csv(file, &labels, &out.times, &series)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseSpdOperator;

    fn two_by_two() -> ModelProblem {
        let a = SparseSpdOperator::from_dense(&RMat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        ModelProblem::from_matrices(a, RMat::from_column_slice(2, 1, &[1.0, 0.0])).unwrap()
    }

    #[test]
    fn one_step_gauss_error_by_hand() {
        let cfg = RunConfig::from_json(r#"{"m_max": 1, "shifts": [[1.0, 0.0]], "variants": ["gauss"]}"#).unwrap();
        let rows = convergence_rows(&cfg, &two_by_two()).unwrap();
        assert_eq!(rows.len(), 1);
        // F = 3/8 exactly, Gauss after one step is 1/(2+s) = 1/3.
        let expect = (1.0 / 3.0 - 3.0 / 8.0f64).abs() / (3.0 / 8.0);
        assert!((rows[0].rel_error_fro - expect).abs() < 1e-14);
        assert_eq!(rows[0].variant, "gauss");
        assert_eq!(rows[0].phi_used, None);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let rows = vec![
            ErrorRow {
                m: 3,
                shift_re: 1e-4,
                shift_im: 0.0,
                variant: "kn".into(),
                rel_error_fro: 0.1 + 0.2,
                phi_used: Some(1.0 / 3.0),
                objective: Some(2.5),
                wall_ms: 0.0,
            },
            ErrorRow {
                m: 3,
                shift_re: 0.0,
                shift_im: -7.25e-9,
                variant: "gauss".into(),
                rel_error_fro: 1e-300,
                phi_used: None,
                objective: None,
                wall_ms: 0.0,
            },
        ];
        write_error_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(&format!("{ERROR_CSV_HEADER}\n")));
        assert!(!text.contains('\r'));
        assert_eq!(read_error_csv(&path).unwrap(), rows);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }
}
