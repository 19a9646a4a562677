//! JSON run configuration shared by every subcommand.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{load_dense_block, load_matrix_market, ModelProblem, ProblemDef};

/// Where the operator and the input block come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSource {
    /// `"desk"` for the built-in problem, otherwise a path to a problem
    /// definition JSON file.
    Named(String),
    Matrices { matrix: PathBuf, rhs: PathBuf },
    Inline(ProblemDef),
}

impl Default for ProblemSource {
    fn default() -> Self {
        ProblemSource::Named("desk".into())
    }
}

impl ProblemSource {
    /// Relative paths are resolved against `base` (the config file directory).
    pub fn load(&self, base: &Path) -> Result<ModelProblem> {
        match self {
            ProblemSource::Named(name) if name == "desk" => ProblemDef::desk().build(),
            ProblemSource::Named(path) => {
                let path = base.join(path);
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                serde_json::from_str::<ProblemDef>(&text)?.build()
            }
            ProblemSource::Matrices { matrix, rhs } => {
                ModelProblem::from_matrices(load_matrix_market(base.join(matrix))?, load_dense_block(base.join(rhs))?)
            }
            ProblemSource::Inline(def) => def.build(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    Gauss,
    Radau,
    Average,
    Kn,
    ExtendedKn,
}

impl VariantName {
    pub fn as_str(self) -> &'static str {
        match self {
            VariantName::Gauss => "gauss",
            VariantName::Radau => "radau",
            VariantName::Average => "average",
            VariantName::Kn => "kn",
            VariantName::ExtendedKn => "extended_kn",
        }
    }

    pub fn needs_phi(self) -> bool {
        matches!(self, VariantName::Kn | VariantName::ExtendedKn)
    }
}

fn default_variants() -> Vec<VariantName> {
    vec![VariantName::Gauss, VariantName::Radau, VariantName::Average, VariantName::Kn]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiPolicy {
    Fixed(f64),
    Optimize {
        #[serde(default = "one")]
        every: usize,
        #[serde(default = "five")]
        average_window: usize,
    },
}

fn one() -> usize {
    1
}

fn five() -> usize {
    5
}

/// Log-spaced shift grid: `points` values in `[10^decades[0], 10^decades[1]]`
/// on each requested branch (real first, then imaginary).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub decades: [f64; 2],
    pub points: usize,
    #[serde(default = "yes")]
    pub real: bool,
    #[serde(default = "yes")]
    pub imaginary: bool,
}

fn yes() -> bool {
    true
}

impl SweepSpec {
    pub fn shifts(&self) -> Vec<Complex64> {
        let values: Vec<f64> = (0..self.points)
            .map(|k| {
                let t = if self.points == 1 {
                    0.0
                } else {
                    k as f64 / (self.points - 1) as f64
                };
                10f64.powf(self.decades[0] + t * (self.decades[1] - self.decades[0]))
            })
            .collect();
        let mut out = Vec::new();
        if self.real {
            out.extend(values.iter().map(|&v| Complex64::new(v, 0.0)));
        }
        if self.imaginary {
            out.extend(values.iter().map(|&v| Complex64::new(0.0, v)));
        }
        out
    }
}

/// Nodes sampled by the cross-section series of `state`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineSpec {
    /// Interior nodes of the grid row nearest to this `y`.
    Y(f64),
    /// Interior nodes of the grid column nearest to this `x`.
    X(f64),
    Nodes(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub problem: ProblemSource,
    pub m_max: usize,
    #[serde(default = "one")]
    pub m_stride: usize,
    #[serde(default)]
    pub shifts: Vec<[f64; 2]>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default = "default_variants")]
    pub variants: Vec<VariantName>,
    #[serde(default)]
    pub phi_policy: Option<PhiPolicy>,
    /// Scalar ξ for the extended string; the last `γ_m` when absent.
    #[serde(default)]
    pub xi: Option<f64>,
    /// Contour window size in Ritz values; `max(20, 10p²)` when absent.
    #[serde(default)]
    pub min_ritz: Option<usize>,
    #[serde(default = "contour_points")]
    pub contour_points: usize,
    /// Shifts on which the cheated φ is scored; `shifts` when absent.
    #[serde(default)]
    pub validation_shifts: Option<Vec<[f64; 2]>>,
    /// `log10` range and size of the cheated-φ grid.
    #[serde(default = "cheat_decades")]
    pub cheat_decades: [f64; 2],
    #[serde(default = "cheat_points")]
    pub cheat_points: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub line: Option<LineSpec>,
}

fn contour_points() -> usize {
    128
}

fn cheat_decades() -> [f64; 2] {
    [-2.0, 6.0]
}

fn cheat_points() -> usize {
    41
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_max == 0 {
            return Err(Error::Config("m_max must be at least 1".into()));
        }
        if self.m_stride == 0 {
            return Err(Error::Config("m_stride must be at least 1".into()));
        }
        if self.variants.is_empty() {
            return Err(Error::Config("no variants requested".into()));
        }
        if self.shifts.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("shifts must be finite".into()));
        }
        match self.phi_policy {
            Some(PhiPolicy::Fixed(phi)) if !(phi > 0.0 && phi.is_finite()) => {
                return Err(Error::Config(format!("fixed phi must be positive, got {phi}")));
            }
            Some(PhiPolicy::Optimize { every, average_window }) if every == 0 || average_window == 0 => {
                return Err(Error::Config("phi_policy.optimize needs every >= 1 and average_window >= 1".into()));
            }
            _ => {}
        }
        if let Some(xi) = self.xi {
            if !(xi > 0.0 && xi.is_finite()) {
                return Err(Error::Config(format!("xi must be positive, got {xi}")));
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.points == 0 || !(sweep.real || sweep.imaginary) {
                return Err(Error::Config("sweep needs points >= 1 and at least one branch".into()));
            }
        }
        if self.contour_points == 0 || self.cheat_points == 0 {
            return Err(Error::Config("contour_points and cheat_points must be at least 1".into()));
        }
        Ok(())
    }

    pub fn shift_list(&self) -> Vec<Complex64> {
        self.shifts.iter().map(|s| Complex64::new(s[0], s[1])).collect()
    }

    /// Shifts used by `sweep`: the grid when configured, else `shifts`.
    pub fn sweep_shifts(&self) -> Vec<Complex64> {
        match &self.sweep {
            Some(spec) => spec.shifts(),
            None => self.shift_list(),
        }
    }

    pub fn validation_list(&self) -> Vec<Complex64> {
        match &self.validation_shifts {
            Some(v) => v.iter().map(|s| Complex64::new(s[0], s[1])).collect(),
            None => self.shift_list(),
        }
    }

    /// Requested variants in canonical order, without duplicates; φ-dependent
    /// variants are dropped when no φ policy is configured.
    pub fn active_variants(&self) -> Vec<VariantName> {
        let mut v: Vec<VariantName> = self
            .variants
            .iter()
            .copied()
            .filter(|v| self.phi_policy.is_some() || !v.needs_phi())
            .collect();
        v.sort();
        v.dedup();
        v
    }

    /// Checkpoints `stride, 2·stride, …` up to `m_max`, always ending at `m_max`.
    pub fn checkpoints(&self) -> Vec<usize> {
        let mut ms: Vec<usize> = (1..=self.m_max / self.m_stride).map(|k| k * self.m_stride).collect();
        if ms.last() != Some(&self.m_max) {
            ms.push(self.m_max);
        }
        ms
    }
}
