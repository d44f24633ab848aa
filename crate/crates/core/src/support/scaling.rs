//! Scaling diagnostic: does `∫_{|u|≤ε} (u·ℓ)² μ(du) ≍ ε^{2−α}` hold with
//! one α across all directions?

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::levy::LevyModel;

#[derive(Debug, Clone)]
pub struct ScalingFit {
    pub direction: Vec<f64>,
    /// `2 − slope` of the log-log fit; NaN when the direction carries no
    /// small-scale mass.
    pub implied_alpha: f64,
    /// Largest absolute log-residual of the linear fit.
    pub max_residual: f64,
}

#[derive(Debug, Clone)]
pub struct ScalingReport {
    pub fits: Vec<ScalingFit>,
    pub alpha_spread: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct ScalingOptions {
    /// Maximal spread of the implied α across directions.
    pub alpha_spread_tol: f64,
    /// Maximal log-residual before a fit counts as non-linear.
    pub linearity_tol: f64,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self {
            alpha_spread_tol: 0.05,
            linearity_tol: 0.05,
        }
    }
}

/// Deterministic direction grid: axes plus pairwise and main diagonals
/// (for `d = 2`, `n_planar` evenly spaced angles).
pub fn direction_grid(d: usize, n_planar: usize) -> Vec<DVector<f64>> {
    if d == 1 {
        return vec![DVector::from_element(1, 1.0)];
    }
    if d == 2 {
        return (0..n_planar)
            .map(|k| {
                let th = std::f64::consts::PI * k as f64 / n_planar as f64;
                DVector::from_column_slice(&[th.cos(), th.sin()])
            })
            .collect();
    }
    let mut dirs: Vec<DVector<f64>> = Vec::new();
    for i in 0..d {
        let mut v = DVector::zeros(d);
        v[i] = 1.0;
        dirs.push(v);
    }
    for i in 0..d {
        for j in i + 1..d {
            for s in [1.0, -1.0] {
                let mut v = DVector::zeros(d);
                v[i] = 1.0;
                v[j] = s;
                dirs.push(v.normalize());
            }
        }
    }
    dirs.push(DVector::from_element(d, 1.0).normalize());
    dirs
}

/// Fit the log-log slope of `ε ↦ ∫_{|u|≤ε}(u·ℓ)² μ(du)` per direction and
/// report whether a single stability index explains all of them.
pub fn check_scaling_condition(
    model: &LevyModel,
    eps_grid: &[f64],
    directions: &[DVector<f64>],
    opts: &ScalingOptions,
) -> Result<ScalingReport> {
    if eps_grid.len() < 3 || directions.is_empty() {
        return Err(Error::InvalidParameter(
            "need at least 3 scales and one direction".into(),
        ));
    }
    let mut fits = Vec::with_capacity(directions.len());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut degenerate = false;
    for l in directions {
        let unit = l / l.norm();
        let mut xs = Vec::with_capacity(eps_grid.len());
        let mut ys = Vec::with_capacity(eps_grid.len());
        let mut zero_mass = false;
        for &eps in eps_grid {
            let s = model.dir_sq_moment_ball(&unit, eps)?;
            if s <= 0.0 {
                zero_mass = true;
                break;
            }
            xs.push(eps.ln());
            ys.push(s.ln());
        }
        if zero_mass {
            degenerate = true;
            fits.push(ScalingFit {
                direction: unit.iter().cloned().collect(),
                implied_alpha: f64::NAN,
                max_residual: f64::NAN,
            });
            continue;
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let max_residual = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - (intercept + slope * x)).abs())
            .fold(0.0, f64::max);
        let implied = 2.0 - slope;
        lo = lo.min(implied);
        hi = hi.max(implied);
        fits.push(ScalingFit {
            direction: unit.iter().cloned().collect(),
            implied_alpha: implied,
            max_residual,
        });
    }
    let alpha_spread = if degenerate { f64::NAN } else { hi - lo };
    let holds = !degenerate
        && alpha_spread <= opts.alpha_spread_tol
        && fits
            .iter()
            .all(|f| f.max_residual <= opts.linearity_tol);
    Ok(ScalingReport {
        fits,
        alpha_spread,
        holds,
    })
}
