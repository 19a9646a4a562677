//! Point-source right-hand sides.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::BlockVector;
use crate::problems::diffusion::DiffusionProblem;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceSpec {
    pub locations: Vec<(f64, f64)>,
    /// Row of the node each location snapped to.
    pub nodes: Vec<usize>,
    #[serde(skip)]
    pub b: BlockVector,
}

fn snap(coord: f64, h: f64, count: usize) -> Option<usize> {
    let t = coord / h;
    let tol = 1e-9;
    if count == 0 || t < -tol || t > (count - 1) as f64 + tol {
        return None;
    }
    Some((t.round().max(0.0) as usize).min(count - 1))
}

/// One unit column per location, at the nearest interior node.
pub fn build_point_sources(problem: &DiffusionProblem, locations: &[(f64, f64)]) -> Result<SourceSpec> {
    let grid = &problem.grid;
    let mut nodes: Vec<usize> = Vec::with_capacity(locations.len());
    for (idx, &(x, y)) in locations.iter().enumerate() {
        let (Some(i), Some(j)) = (snap(x, grid.h, grid.interior_nx), snap(y, grid.h, grid.interior_ny)) else {
            return Err(Error::OutsideInterior { x, y });
        };
        let k = grid.index(grid.x.interior_start + i, grid.y.interior_start + j);
        if let Some(first) = nodes.iter().position(|&n| n == k) {
            return Err(Error::DuplicateNode { first, second: idx });
        }
        nodes.push(k);
    }
    if nodes.is_empty() {
        return Err(Error::InvalidArgument("at least one source location is required".into()));
    }
    let mut b = BlockVector::zeros(problem.n(), nodes.len());
    for (c, &k) in nodes.iter().enumerate() {
        b[(k, c)] = 1.0;
    }
    Ok(SourceSpec {
        locations: locations.to_vec(),
        nodes,
        b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::diffusion::{assemble_with_spec, SigmaSpec};
    use crate::problems::grid::GridSpec;

    fn problem() -> DiffusionProblem {
        assemble_with_spec(GridSpec::new(6, 6, 1.0, 2), &SigmaSpec::constant(1.0)).unwrap()
    }

    #[test]
    fn node_centred_location() {
        let p = problem();
        let s = build_point_sources(&p, &[(2.0, 3.0)]).unwrap();
        let k = p.grid.index(4, 5);
        assert_eq!(s.nodes, vec![k]);
        assert_eq!(s.b.column(0).sum(), 1.0);
        assert_eq!(s.b[(k, 0)], 1.0);
    }

    #[test]
    fn two_locations_are_orthonormal() {
        let p = problem();
        let s = build_point_sources(&p, &[(1.0, 1.0), (4.2, 3.9)]).unwrap();
        let g = s.b.transpose() * &s.b;
        assert_eq!(g, nalgebra::DMatrix::identity(2, 2));
    }

    #[test]
    fn duplicates_and_outside() {
        let p = problem();
        assert!(matches!(
            build_point_sources(&p, &[(1.0, 1.0), (1.2, 0.9)]),
            Err(Error::DuplicateNode { first: 0, second: 1 })
        ));
        assert!(matches!(
            build_point_sources(&p, &[(-3.0, 1.0)]),
            Err(Error::OutsideInterior { .. })
        ));
    }
}
