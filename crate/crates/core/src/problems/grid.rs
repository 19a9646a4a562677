//! Tensor-product grids with geometrically stretched exterior layers.

use serde::Serialize;

/// `n_opt` exterior steps `h·r^{k+1}`, `r = exp(π/√n_opt)`; empty for `n_opt = 0`.
pub fn geometric_exterior_grid(h: f64, n_opt: usize) -> Vec<f64> {
    if n_opt == 0 {
        return Vec::new();
    }
    let r = (std::f64::consts::PI / (n_opt as f64).sqrt()).exp();
    std::iter::successors(Some(h * r), |step| Some(step * r)).take(n_opt).collect()
}

/// Node layout along one axis.
///
/// Interior nodes sit at `0, h, …, (n−1)h`. On each side the first step away
/// from the interior is `h`, followed by the geometric exterior steps; the
/// last step reaches the Dirichlet boundary, which carries no unknown.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    /// Distances between consecutive points, boundary to boundary (`len = nodes + 1`).
    pub steps: Vec<f64>,
    /// Coordinates of the unknowns.
    pub nodes: Vec<f64>,
    /// Index of the first interior node.
    pub interior_start: usize,
    pub interior_len: usize,
}

impl Axis {
    pub fn new(interior: usize, h: f64, n_opt: usize) -> Self {
        let mut outward = vec![h];
        outward.extend(geometric_exterior_grid(h, n_opt));
        let mut steps: Vec<f64> = outward.iter().rev().copied().collect();
        steps.extend(std::iter::repeat(h).take(interior.saturating_sub(1)));
        steps.extend(outward.iter().copied());

        let mut nodes = Vec::with_capacity(interior + 2 * n_opt);
        let mut x = -outward.iter().sum::<f64>();
        for step in &steps[..steps.len() - 1] {
            x += step;
            nodes.push(x);
        }
        // Pin the interior to exact multiples of h.
        for (k, node) in nodes[n_opt..n_opt + interior].iter_mut().enumerate() {
            *node = k as f64 * h;
        }
        Self {
            steps,
            nodes,
            interior_start: n_opt,
            interior_len: interior,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Dual cell width at node `i`.
    pub fn dual_width(&self, i: usize) -> f64 {
        0.5 * (self.steps[i] + self.steps[i + 1])
    }

    pub fn is_interior(&self, i: usize) -> bool {
        i >= self.interior_start && i < self.interior_start + self.interior_len
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub interior_nx: usize,
    pub interior_ny: usize,
    pub h: f64,
    pub n_opt: usize,
    pub x: Axis,
    pub y: Axis,
}

impl GridSpec {
    pub fn new(interior_nx: usize, interior_ny: usize, h: f64, n_opt: usize) -> Self {
        Self {
            interior_nx,
            interior_ny,
            h,
            n_opt,
            x: Axis::new(interior_nx, h, n_opt),
            y: Axis::new(interior_ny, h, n_opt),
        }
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row of node `(i, j)`; `x` varies fastest.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx(), k / self.nx())
    }

    pub fn coords(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.ij(k);
        (self.x.nodes[i], self.y.nodes[j])
    }

    pub fn is_interior(&self, k: usize) -> bool {
        let (i, j) = self.ij(k);
        self.x.is_interior(i) && self.y.is_interior(j)
    }

    pub fn steps_x(&self) -> &[f64] {
        &self.x.steps
    }

    pub fn steps_y(&self) -> &[f64] {
        &self.y.steps
    }
}
