//! Monte-Carlo probes for the skeleton description of the path law:
//! support probabilities, the pathwise ODE structure of the truncated
//! dynamics, big-jump window probabilities, reachability certificates,
//! and the scaling diagnostic.

mod reach;
mod scaling;

pub use reach::{reach_cone, reach_control, ConeOptions, ReachCertificate, ReachRoute};
pub use scaling::{check_scaling_condition, direction_grid, ScalingFit, ScalingOptions, ScalingReport};

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::levy::{sample_large_jumps, LevyModel};
use crate::metric::{skorokhod_distance_upper, SkorokhodOptions};
use crate::rng::substream;
use crate::sde::{euler_simulate, CoefficientSet, EffectiveDrift, SimOptions};
use crate::skeleton::{admissible, rk4_segment, Decision, SkeletonPath};

/// Monte-Carlo evidence for `P(d_upper(X, φ) ≤ ε) > 0`.
#[derive(Debug, Clone)]
pub struct SupportCheckReport {
    pub skeleton_id: String,
    pub epsilon: f64,
    pub n_samples: usize,
    pub hits: usize,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub positive: bool,
    pub seed: u64,
}

/// 95% Wilson score interval. The lower bound is exactly zero when no
/// hit was observed, so the positivity verdict cannot come from rounding.
pub fn wilson_interval(hits: usize, n: usize) -> (f64, f64) {
    let z = 1.959963984540054_f64;
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let low = if hits == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if hits == n { 1.0 } else { (center + half).min(1.0) };
    (low, high)
}

#[derive(Debug, Clone, Copy)]
pub struct McOptions {
    pub n_steps: usize,
    pub sim: SimOptions,
    pub skorokhod: SkorokhodOptions,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            n_steps: 256,
            sim: SimOptions::default(),
            skorokhod: SkorokhodOptions::default(),
        }
    }
}

/// Distances `d_upper(X_i, φ)` for `n` independent full-SDE paths started
/// at the skeleton's initial point, one substream per path.
pub fn mc_support_distances(
    coeffs: &CoefficientSet,
    model: &LevyModel,
    skeleton: &SkeletonPath,
    n: usize,
    eta: f64,
    opts: &McOptions,
    seed: u64,
) -> Result<Vec<f64>> {
    let x0 = skeleton.path.values()[0].clone();
    let t_horizon = skeleton.path.t_end();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let x = euler_simulate(
                coeffs,
                model,
                &x0,
                t_horizon,
                opts.n_steps,
                eta,
                &opts.sim,
                &mut rng,
            )?;
            Ok(skorokhod_distance_upper(&x, &skeleton.path, &opts.skorokhod)?.skorokhod_upper)
        })
        .collect()
}

/// Estimate `P(d_upper(X, φ) ≤ ε)` with a 95% binomial interval; the
/// verdict is positive when the interval excludes zero.
#[allow(clippy::too_many_arguments)]
pub fn mc_support_probability(
    coeffs: &CoefficientSet,
    model: &LevyModel,
    skeleton: &SkeletonPath,
    epsilon: f64,
    n: usize,
    eta: f64,
    opts: &McOptions,
    seed: u64,
    skeleton_id: &str,
) -> Result<SupportCheckReport> {
    if n < 100 {
        return Err(Error::InvalidParameter(
            "support check needs at least 100 samples".into(),
        ));
    }
    let distances = mc_support_distances(coeffs, model, skeleton, n, eta, opts, seed)?;
    let hits = distances.iter().filter(|d| **d <= epsilon).count();
    let (ci_low, ci_high) = wilson_interval(hits, n);
    Ok(SupportCheckReport {
        skeleton_id: skeleton_id.to_string(),
        epsilon,
        n_samples: n,
        hits,
        estimate: hits as f64 / n as f64,
        ci_low,
        ci_high,
        positive: ci_low > 0.0,
        seed,
    })
}

#[derive(Debug, Clone)]
pub struct InclusionReport {
    pub n_paths: usize,
    pub pass_rate: f64,
    /// Median over paths of the largest inter-jump deviation.
    pub median_max_deviation: f64,
    pub seed: u64,
}

/// Check the pathwise ODE structure of the dynamics at level `η`: between
/// consecutive raw jumps the path must follow the skeleton ODE with the
/// constant control `−υ_η` (up to the sub-`η` noise, which the caller's
/// tolerance accounts for), and every jump must be admissible with
/// `post = pre + c(pre, ξ)` exactly.
#[allow(clippy::too_many_arguments)]
pub fn forward_inclusion_check(
    coeffs: &CoefficientSet,
    model: &LevyModel,
    x0: &DVector<f64>,
    t_horizon: f64,
    eta: f64,
    n_paths: usize,
    tol: f64,
    opts: &McOptions,
    seed: u64,
) -> Result<InclusionReport> {
    if n_paths == 0 {
        return Ok(InclusionReport {
            n_paths: 0,
            pass_rate: 1.0,
            median_max_deviation: 0.0,
            seed,
        });
    }
    let drift = EffectiveDrift::new(coeffs, model)?;
    let upsilon = model.upsilon_eta(eta)?;
    let results: Result<Vec<(bool, f64)>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let x = euler_simulate(
                coeffs,
                model,
                x0,
                t_horizon,
                opts.n_steps,
                eta,
                &opts.sim,
                &mut rng,
            )?;
            let mut ok = true;
            for rec in x.jumps() {
                let xi = rec.amplitude.as_ref().ok_or_else(|| {
                    Error::InvalidParameter("raw jump without a recorded amplitude".into())
                })?;
                let recon = &rec.pre + coeffs.jump_map(&rec.pre, xi);
                if (&recon - &rec.post).norm() > 1e-9 * (1.0 + rec.post.norm()) {
                    ok = false;
                }
                let rep = admissible(&rec.pre, &rec.post, coeffs, model, 1e-6)?;
                if rep.decision != Decision::Yes {
                    ok = false;
                }
            }
            // Segment boundaries: 0, jump times, T.
            let mut bounds = vec![x.t_start()];
            bounds.extend(x.jumps().iter().map(|r| r.time));
            bounds.push(x.t_end());
            let mut max_dev: f64 = 0.0;
            let times = x.times();
            let values = x.values();
            for w in bounds.windows(2) {
                let (a, b) = (w[0], w[1]);
                if b <= a {
                    continue;
                }
                let start_ix = times.partition_point(|t| *t < a);
                debug_assert_eq!(times[start_ix], a);
                let mut phi = values[start_ix].clone();
                let mut t = a;
                for ix in start_ix + 1..times.len() {
                    let tn = times[ix];
                    if tn > b {
                        break;
                    }
                    let seg = rk4_segment(
                        |y| drift.eval(y) - coeffs.sigma(y) * &upsilon,
                        &phi,
                        t,
                        tn,
                        (tn - t).min(1e-3),
                        opts.sim.blow_up_norm,
                    )?;
                    phi = seg.last().unwrap().1.clone();
                    t = tn;
                    // Compare just before any jump applied at tn.
                    let x_here = if tn == b && ix < times.len() {
                        x.eval_left(tn)
                    } else {
                        values[ix].clone()
                    };
                    max_dev = max_dev.max((&phi - &x_here).norm());
                    if tn == b {
                        break;
                    }
                }
            }
            if max_dev > tol {
                ok = false;
            }
            Ok((ok, max_dev))
        })
        .collect();
    let results = results?;
    let passes = results.iter().filter(|(ok, _)| *ok).count();
    let mut devs: Vec<f64> = results.iter().map(|(_, d)| *d).collect();
    devs.sort_by(f64::total_cmp);
    Ok(InclusionReport {
        n_paths,
        pass_rate: passes as f64 / n_paths as f64,
        median_max_deviation: devs[devs.len() / 2],
        seed,
    })
}

/// `P(J = K, |τ_k − t_k| < δ for all k) = e^{−T m} (2δ m)^K` with
/// `m = μ(|u| ≥ η)`; requires the δ-windows to be disjoint and inside
/// `(0, T)`.
pub fn jump_window_probability(
    model: &LevyModel,
    eta: f64,
    times: &[f64],
    delta: f64,
    t_horizon: f64,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    let mut gap = t_horizon;
    let mut last = 0.0;
    for t in times {
        if !(*t > last && *t < t_horizon) {
            return Err(Error::InvalidParameter(format!(
                "window centre {t} outside (0, {t_horizon}) in increasing order"
            )));
        }
        gap = gap.min(t - last);
        last = *t;
    }
    gap = gap.min(t_horizon - last);
    if !(delta < 0.5 * gap) {
        return Err(Error::GapViolation(format!(
            "delta = {delta} not below half the minimal gap {gap}"
        )));
    }
    let m = model.tail_mass(eta)?;
    Ok((-t_horizon * m).exp() * (2.0 * delta * m).powi(times.len() as i32))
}

/// Monte-Carlo frequency of the same window event.
pub fn jump_window_mc(
    model: &LevyModel,
    eta: f64,
    times: &[f64],
    delta: f64,
    t_horizon: f64,
    n: usize,
    seed: u64,
) -> Result<f64> {
    let hits: Result<Vec<bool>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let jumps = sample_large_jumps(model, eta, t_horizon, &mut rng)?;
            if jumps.len() != times.len() {
                return Ok(false);
            }
            Ok(jumps
                .iter()
                .zip(times)
                .all(|((tau, _), t)| (tau - t).abs() < delta))
        })
        .collect();
    let hits = hits?;
    Ok(hits.iter().filter(|h| **h).count() as f64 / n as f64)
}
