//! Model problems: diffusion on a truncated unbounded domain, point sources,
//! Matrix Market ingestion and the reference solver.

pub mod diffusion;
pub mod grid;
pub mod mtx;
pub mod reference;
pub mod sources;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::BlockVector;
use crate::sparse::SparseSpdOperator;

pub use diffusion::{assemble_diffusion_2d, assemble_with_spec, DiffusionProblem, Inclusion, SigmaSpec};
pub use grid::{geometric_exterior_grid, Axis, GridSpec};
pub use mtx::{load_dense_block, load_matrix_market, write_dense_block, write_matrix_market};
pub use reference::{reference_transfer, reference_transfer_with, solve_shifted, ReferencePolicy};
pub use sources::{build_point_sources, SourceSpec};

/// JSON description of a 2D diffusion problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDef {
    pub interior: [usize; 2],
    pub h: f64,
    pub n_opt: usize,
    pub sigma: SigmaSpec,
    pub sources: Vec<[f64; 2]>,
}

impl ProblemDef {
    /// 60×60 interior, unit step, ten exterior steps per side, σ = 1 with a
    /// σ = 10 block to the right of a single source.
    pub fn desk() -> Self {
        Self {
            interior: [60, 60],
            h: 1.0,
            n_opt: 10,
            sigma: SigmaSpec {
                background: 1.0,
                inclusions: vec![Inclusion {
                    x0: 35.0,
                    y0: 10.0,
                    x1: 50.0,
                    y1: 30.0,
                    value: 10.0,
                }],
            },
            sources: vec![[20.0, 30.0]],
        }
    }

    pub fn build(&self) -> Result<ModelProblem> {
        let grid = GridSpec::new(self.interior[0], self.interior[1], self.h, self.n_opt);
        let problem = assemble_with_spec(grid, &self.sigma)?;
        let locations: Vec<(f64, f64)> = self.sources.iter().map(|s| (s[0], s[1])).collect();
        let sources = build_point_sources(&problem, &locations)?;
        Ok(ModelProblem {
            a: problem.a.clone(),
            b: sources.b.clone(),
            diffusion: Some((problem, sources)),
        })
    }
}

/// Operator and right-hand side ready for Lanczos, with the grid when the
/// problem came from a diffusion description.
#[derive(Debug, Clone)]
pub struct ModelProblem {
    pub a: SparseSpdOperator,
    pub b: BlockVector,
    pub diffusion: Option<(DiffusionProblem, SourceSpec)>,
}

impl ModelProblem {
    pub fn from_matrices(a: SparseSpdOperator, b: BlockVector) -> Result<Self> {
        if b.nrows() != a.n() {
            return Err(crate::Error::DimensionMismatch(format!(
                "B has {} rows, A is {}x{}",
                b.nrows(),
                a.n(),
                a.n()
            )));
        }
        Ok(Self { a, b, diffusion: None })
    }

    pub fn grid(&self) -> Option<&GridSpec> {
        self.diffusion.as_ref().map(|(p, _)| &p.grid)
    }
}

/// The default desk problem.
pub fn desk_problem() -> Result<ModelProblem> {
    ProblemDef::desk().build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_dimensions() {
        let p = desk_problem().unwrap();
        assert_eq!(p.a.n(), 80 * 80);
        assert_eq!(p.a.half_bandwidth(), 80);
        assert_eq!(p.b.ncols(), 1);
        let (d, s) = p.diffusion.as_ref().unwrap();
        assert_eq!(d.grid.coords(s.nodes[0]), (20.0, 30.0));
    }

    #[test]
    fn definition_round_trips_through_json() {
        let def = ProblemDef::desk();
        let text = serde_json::to_string(&def).unwrap();
        assert_eq!(serde_json::from_str::<ProblemDef>(&text).unwrap(), def);
        let inline = r#"{"interior":[4,3],"h":0.5,"n_opt":1,"sigma":{"background":2.0},"sources":[[0.5,0.5]]}"#;
        let p = serde_json::from_str::<ProblemDef>(inline).unwrap().build().unwrap();
        assert_eq!(p.a.n(), 6 * 5);
    }
}
