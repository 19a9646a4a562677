//! One-dimensional Nelder–Mead maximization.

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Initial simplex width.
    pub step: f64,
    /// Stop when the two vertices are closer than this.
    pub x_tol: f64,
    pub max_evals: usize,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            step: 1.0,
            x_tol: 1e-3,
            max_evals: 200,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: f64,
    pub value: f64,
    /// Every evaluation in order, as `(x, f(x))`.
    pub history: Vec<(f64, f64)>,
    pub converged: bool,
}

/// Maximizes `f` over the real line starting from the simplex `{x0, x0 + step}`.
///
/// Ties keep the earlier vertex as the best one, so a flat objective returns
/// `x0`. If the two starting values are equal the search stops immediately.
pub fn maximize<F>(mut f: F, x0: f64, opts: NelderMeadOptions) -> Result<NelderMeadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut history = Vec::new();
    let mut eval = |x: f64, history: &mut Vec<(f64, f64)>| -> Result<f64> {
        let v = f(x)?;
        history.push((x, v));
        Ok(v)
    };
    let mut best = (x0, eval(x0, &mut history)?);
    let x1 = x0 + opts.step;
    let mut worst = (x1, eval(x1, &mut history)?);
    if worst.1 == best.1 {
        return Ok(NelderMeadResult {
            x: best.0,
            value: best.1,
            history,
            converged: true,
        });
    }
    let mut converged = false;
    loop {
        if worst.1 > best.1 {
            std::mem::swap(&mut best, &mut worst);
        }
        if (best.0 - worst.0).abs() < opts.x_tol {
            converged = true;
            break;
        }
        if history.len() >= opts.max_evals {
            break;
        }
        let dir = best.0 - worst.0;
        let xr = best.0 + opts.reflection * dir;
        let fr = eval(xr, &mut history)?;
        if fr > best.1 {
            let xe = best.0 + opts.expansion * dir;
            let fe = eval(xe, &mut history)?;
            worst = if fe > fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        // In one dimension the second-worst vertex is the best one, so a
        // reflection that does not improve on it always contracts.
        if fr > worst.1 {
            let xc = best.0 + opts.contraction * (xr - best.0);
            let fc = eval(xc, &mut history)?;
            if fc >= fr {
                worst = (xc, fc);
                continue;
            }
        } else if opts.contraction != opts.shrink {
            let xc = best.0 + opts.contraction * (worst.0 - best.0);
            let fc = eval(xc, &mut history)?;
            if fc > worst.1 {
                worst = (xc, fc);
                continue;
            }
        }
        // With equal coefficients the shrink point coincides with the inside
        // contraction point, which is evaluated here exactly once.
        let xs = best.0 + opts.shrink * (worst.0 - best.0);
        worst = (xs, eval(xs, &mut history)?);
    }
    Ok(NelderMeadResult {
        x: best.0,
        value: best.1,
        history,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_bump() {
        let r = maximize(|x| Ok((-(x - 1.0) * (x - 1.0)).exp()), 0.0, NelderMeadOptions::default()).unwrap();
        assert!((r.x - 1.0).abs() < 1e-2);
        assert!(r.converged);
        assert!(r.history.len() <= 200);
    }

    #[test]
    fn flat_returns_start() {
        let r = maximize(|_| Ok(3.0), 0.7, NelderMeadOptions::default()).unwrap();
        assert_eq!(r.x, 0.7);
        assert_eq!(r.history.len(), 2);
    }

    #[test]
    fn never_worse_than_start() {
        for x0 in [-3.0, 0.0, 2.5, 6.0] {
            let f = |x: f64| Ok((x * 1.3).sin() - 0.05 * x * x);
            let start = f(x0).unwrap();
            let r = maximize(f, x0, NelderMeadOptions::default()).unwrap();
            assert!(r.value >= start);
        }
    }

    #[test]
    fn respects_evaluation_budget() {
        let opts = NelderMeadOptions {
            max_evals: 10,
            ..Default::default()
        };
        // Unbounded increasing objective keeps expanding.
        let r = maximize(|x| Ok(x), 0.0, opts).unwrap();
        assert!(!r.converged);
        assert!(r.history.len() <= 12);
    }
}
