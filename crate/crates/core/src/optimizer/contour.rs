//! Rectangular contour around the dense part of the negated Ritz spectrum.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourPolicy {
    /// Number of Ritz values the window must contain; `None` uses `max(20, 10p²)`.
    pub min_ritz: Option<usize>,
    pub n_pts: usize,
}

impl Default for ContourPolicy {
    fn default() -> Self {
        Self {
            min_ritz: None,
            n_pts: 128,
        }
    }
}

impl ContourPolicy {
    pub fn required(&self, p: usize) -> usize {
        self.min_ritz.unwrap_or_else(|| (10 * p * p).max(20))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub nodes: Vec<Complex64>,
    pub weights: Vec<f64>,
    /// Window `[−d, 0]` enclosed by the contour.
    pub d: f64,
    /// Distance between the contour and the window.
    pub delta: f64,
}

impl Contour {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn perimeter(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Builds the contour from Ritz values on the negative real axis (any order).
///
/// The window `[−d, 0]` is the smallest one holding the required number of
/// values closest to the origin, `delta` is the median gap between adjacent
/// values inside it, and the contour is the rectangle with corners
/// `(−d−δ) ± iδ`, `δ ± iδ`, sampled at `n_pts` midpoints of equal arclength.
/// Nodes are ordered counter-clockwise from the middle of the left edge, so
/// node `k` and node `n−1−k` are complex conjugates.
pub fn build_contour(ritz_values: &[f64], p: usize, policy: ContourPolicy) -> Result<Contour> {
    let required = policy.required(p);
    if ritz_values.len() < required || required == 0 {
        return Err(Error::TooFewRitzValues {
            found: ritz_values.len(),
            required: required.max(1),
        });
    }
    if policy.n_pts == 0 {
        return Err(Error::InvalidArgument("contour needs at least one node".into()));
    }
    let mut mags: Vec<f64> = ritz_values.iter().map(|v| v.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let window = &mags[..required];
    let d = window[required - 1];
    let mut gaps: Vec<f64> = window.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    let mut delta = if gaps.is_empty() { 0.0 } else { median(&gaps) };
    if delta <= 0.0 {
        delta = d / required as f64;
    }
    if !(d > 0.0 && delta > 0.0) {
        return Err(Error::InvalidArgument("Ritz window has zero width".into()));
    }

    let left = -d - delta;
    let right = delta;
    let width = right - left;
    let height = 2.0 * delta;
    let perimeter = 2.0 * (width + height);
    let n = policy.n_pts;
    let step = perimeter / n as f64;
    // Path: left edge down from its midpoint, bottom edge, right edge, top
    // edge, left edge down to the midpoint.
    let point = |t: f64| -> Complex64 {
        let mut t = t;
        let half = 0.5 * height;
        if t < half {
            return Complex64::new(left, -t);
        }
        t -= half;
        if t < width {
            return Complex64::new(left + t, -delta);
        }
        t -= width;
        if t < height {
            return Complex64::new(right, -delta + t);
        }
        t -= height;
        if t < width {
            return Complex64::new(right - t, delta);
        }
        t -= width;
        Complex64::new(left, delta - t)
    };
    let nodes = (0..n).map(|k| point((k as f64 + 0.5) * step)).collect();
    Ok(Contour {
        nodes,
        weights: vec![step; n],
        d,
        delta,
    })
}
