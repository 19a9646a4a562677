//! Symmetrized diffusion operator `σ^{-1/2}(−Δ)σ^{-1/2}` on a stretched grid.
//!
//! The Laplacian is discretized by finite volumes: the stiffness matrix `K`
//! couples neighbours with weight `w/h_{i+1/2}`, `w` being the dual width in
//! the other direction, and the lumped mass is `M = σ·h̄_x·h̄_y`. The operator
//! is `A = M^{-1/2} K M^{-1/2}`, exactly symmetric, and on a uniform grid with
//! `σ ≡ 1` it is the 5-point Laplacian divided by `h²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::grid::GridSpec;
use crate::sparse::SparseSpdOperator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inclusion {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub value: f64,
}

impl Inclusion {
    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0.min(self.x1) && x <= self.x0.max(self.x1) && y >= self.y0.min(self.y1) && y <= self.y0.max(self.y1)
    }
}

/// Piecewise-constant σ: a background value with rectangular inclusions
/// (later inclusions win where they overlap).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSpec {
    pub background: f64,
    #[serde(default)]
    pub inclusions: Vec<Inclusion>,
}

impl SigmaSpec {
    pub fn constant(value: f64) -> Self {
        Self {
            background: value,
            inclusions: Vec::new(),
        }
    }

    pub fn at(&self, x: f64, y: f64) -> f64 {
        self.inclusions
            .iter()
            .rev()
            .find(|inc| inc.contains(x, y))
            .map_or(self.background, |inc| inc.value)
    }

    pub fn sample(&self, grid: &GridSpec) -> Vec<f64> {
        (0..grid.len())
            .map(|k| {
                let (x, y) = grid.coords(k);
                self.at(x, y)
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct DiffusionProblem {
    pub grid: GridSpec,
    pub sigma: Vec<f64>,
    pub a: SparseSpdOperator,
}

impl DiffusionProblem {
    pub fn n(&self) -> usize {
        self.a.n()
    }
}

/// Assembles `A` for σ sampled at the grid nodes.
pub fn assemble_diffusion_2d(grid: GridSpec, sigma: Vec<f64>) -> Result<DiffusionProblem> {
    let n = grid.len();
    if sigma.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "sigma has {} values for {n} nodes",
            sigma.len()
        )));
    }
    if let Some((node, &value)) = sigma.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::NonPositiveSigma { node, value });
    }
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut scale = vec![0.0; n];
    let mut triplets = Vec::with_capacity(5 * n);
    for j in 0..ny {
        let wy = grid.y.dual_width(j);
        for i in 0..nx {
            let wx = grid.x.dual_width(i);
            let k = grid.index(i, j);
            scale[k] = 1.0 / (sigma[k] * wx * wy).sqrt();
            let west = wy / grid.x.steps[i];
            let east = wy / grid.x.steps[i + 1];
            let south = wx / grid.y.steps[j];
            let north = wx / grid.y.steps[j + 1];
            triplets.push((k, k, west + east + south + north));
            if i > 0 {
                triplets.push((k, grid.index(i - 1, j), -west));
            }
            if i + 1 < nx {
                triplets.push((k, grid.index(i + 1, j), -east));
            }
            if j > 0 {
                triplets.push((k, grid.index(i, j - 1), -south));
            }
            if j + 1 < ny {
                triplets.push((k, grid.index(i, j + 1), -north));
            }
        }
    }
    let stiffness = SparseSpdOperator::from_triplets(n, &triplets)?;
    Ok(DiffusionProblem {
        grid,
        sigma,
        a: stiffness.scaled_symmetric(&scale),
    })
}

/// Builds the operator from a σ description.
pub fn assemble_with_spec(grid: GridSpec, sigma: &SigmaSpec) -> Result<DiffusionProblem> {
    let values = sigma.sample(&grid);
    assemble_diffusion_2d(grid, values)
}
