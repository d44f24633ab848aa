//! Reachability certificates: jump-steering under a cone condition and
//! control-steering in the strong Type II case.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::levy::{IntegrabilitySubspace, LevyModel};
use crate::sde::{CoefficientSet, EffectiveDrift};
use crate::skeleton::{
    rk4_segment, solve_skeleton, ControlFunction, JumpPlan, SkeletonPath, SolveOptions,
};

/// Replayable witness that a target state is reachable by a skeleton.
#[derive(Debug, Clone)]
pub struct ReachCertificate {
    pub start: DVector<f64>,
    pub target: DVector<f64>,
    pub t_horizon: f64,
    pub epsilon: f64,
    pub route: ReachRoute,
    pub terminal_error: f64,
    pub solve: SolveOptions,
}

#[derive(Debug, Clone)]
pub enum ReachRoute {
    JumpPlan(Vec<(f64, DVector<f64>)>),
    Control(ControlFunction),
}

impl ReachCertificate {
    /// Re-solve the skeleton from the stored route and report the path;
    /// deterministic, so the terminal error reproduces exactly.
    pub fn replay(
        &self,
        coeffs: &CoefficientSet,
        model: &LevyModel,
    ) -> Result<(SkeletonPath, f64)> {
        let drift = EffectiveDrift::new(coeffs, model)?;
        let subspace = model.integrability_subspace()?;
        let (control, plan) = match &self.route {
            ReachRoute::JumpPlan(items) => (
                ControlFunction::zero(coeffs.noise_dim),
                JumpPlan::amplitudes(items.clone()),
            ),
            ReachRoute::Control(f) => {
                // Revalidate against the subspace it was built for.
                let f = ControlFunction::new(
                    f.breakpoints().to_vec(),
                    f.values().to_vec(),
                    &subspace,
                )?;
                (f, JumpPlan::default())
            }
        };
        let skel = solve_skeleton(
            &self.start,
            &drift,
            coeffs,
            model,
            &control,
            &plan,
            self.t_horizon,
            &self.solve,
        )?;
        let err = (skel.path.final_value() - &self.target).norm();
        Ok((skel, err))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConeOptions {
    /// Initial number of jump slots; doubled on failure.
    pub initial_jumps: usize,
    pub max_jumps: usize,
    /// Cap on a single jump amplitude; `None` uses `|y − x|_∞`.
    pub amplitude_cap: Option<f64>,
    pub solve: SolveOptions,
}

impl Default for ConeOptions {
    fn default() -> Self {
        Self {
            initial_jumps: 8,
            max_jumps: 512,
            amplitude_cap: None,
            solve: SolveOptions::default(),
        }
    }
}

fn unit_directions(d: usize, n_planar: usize) -> Vec<DVector<f64>> {
    let mut dirs = Vec::new();
    if d == 1 {
        dirs.push(DVector::from_element(1, 1.0));
        dirs.push(DVector::from_element(1, -1.0));
        return dirs;
    }
    if d == 2 {
        for k in 0..n_planar {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n_planar as f64;
            dirs.push(DVector::from_column_slice(&[th.cos(), th.sin()]));
        }
        return dirs;
    }
    // Axes, pairwise diagonals, and the main diagonals.
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut v = DVector::zeros(d);
            v[i] = s;
            dirs.push(v);
        }
    }
    for i in 0..d {
        for j in i + 1..d {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut v = DVector::zeros(d);
                v[i] = si;
                v[j] = sj;
                dirs.push(v.normalize());
            }
        }
    }
    dirs.push(DVector::from_element(d, 1.0).normalize());
    dirs.push(DVector::from_element(d, -1.0).normalize());
    dirs
}

/// Certify the aperture-`θ` cone condition: every direction must see
/// jump mass at arbitrarily small scales inside its cone. Supported for
/// the axis measure and for atom lists whose directions positively span;
/// other variants are not certified here because the jump planner cannot
/// steer along their supports.
fn certify_cone(model: &LevyModel, theta: f64) -> Result<()> {
    if !(0.0 < theta && theta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "cone aperture {theta} outside (0, 1)"
        )));
    }
    match model {
        LevyModel::CylindricalStable { alpha, .. } => {
            let d = alpha.len();
            let reach = 1.0 / (d as f64).sqrt();
            if theta > reach + 1e-12 {
                return Err(Error::ConeNotCertifiable(format!(
                    "axis measure covers apertures up to 1/sqrt(d) = {reach:.6}, got {theta}"
                )));
            }
            Ok(())
        }
        LevyModel::Discrete { atoms } => {
            let d = atoms[0].u.len();
            for l in unit_directions(d, 64) {
                let best = atoms
                    .iter()
                    .map(|a| {
                        let u = DVector::from_column_slice(&a.u);
                        u.dot(&l) / u.norm()
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                if best < theta {
                    return Err(Error::ConeNotCertifiable(format!(
                        "no atom within the θ = {theta} cone around {:?} (best {best:.4})",
                        l.as_slice()
                    )));
                }
            }
            Ok(())
        }
        LevyModel::CurveImage { gamma, .. } => {
            // Small-jump directions approach ±e1, so any direction with a
            // small first component fails the grid test.
            for l in unit_directions(2, 64) {
                let mut best = f64::NEG_INFINITY;
                for k in 4i32..=26 {
                    let z = 2f64.powi(-k);
                    for s in [1.0, -1.0] {
                        let u = DVector::from_column_slice(&[
                            s * z,
                            s * z.powf(*gamma),
                        ]);
                        best = best.max(u.dot(&l) / u.norm());
                    }
                }
                if best < theta {
                    return Err(Error::ConeNotCertifiable(format!(
                        "curve-image small jumps miss the θ = {theta} cone around {:?} (best {best:.4})",
                        l.as_slice()
                    )));
                }
            }
            Ok(())
        }
        LevyModel::RadialStable { .. } | LevyModel::OneSidedStable1D { .. } => {
            Err(Error::ConeNotCertifiable(
                "cone certification is implemented for cylindrical and discrete spanning measures"
                    .into(),
            ))
        }
    }
}

/// Steer `x → y` by frequent small admissible jumps with `f ≡ 0`
/// (jump-noise reachability under the cone condition). Greedy: at each
/// slot, jump so that the drift-only forecast of the terminal state moves
/// toward the target; the slot count doubles until the drift displacement
/// between jumps is below `ε/4` and the terminal error is within `ε`.
#[allow(clippy::too_many_arguments)]
pub fn reach_cone(
    model: &LevyModel,
    coeffs: &CoefficientSet,
    x: &DVector<f64>,
    y: &DVector<f64>,
    t_horizon: f64,
    epsilon: f64,
    theta: f64,
    opts: &ConeOptions,
) -> Result<ReachCertificate> {
    certify_cone(model, theta)?;
    let drift = EffectiveDrift::new(coeffs, model)?;
    let amp_cap = opts
        .amplitude_cap
        .unwrap_or_else(|| (y - x).amax().max(epsilon));
    let flow_to = |x0: &DVector<f64>, t0: f64, t1: f64| -> Result<DVector<f64>> {
        if t1 <= t0 {
            return Ok(x0.clone());
        }
        let seg = rk4_segment(
            |z| drift.eval(z),
            x0,
            t0,
            t1,
            opts.solve.step.max(1e-4),
            opts.solve.blow_up_norm,
        )?;
        Ok(seg.last().unwrap().1.clone())
    };
    let mut k = opts.initial_jumps.max(1);
    loop {
        let slot_times: Vec<f64> = (1..=k)
            .map(|i| t_horizon * i as f64 / (k + 1) as f64)
            .collect();
        let mut plan: Vec<(f64, DVector<f64>)> = Vec::new();
        let mut phi = x.clone();
        let mut t = 0.0;
        let mut max_drift_disp: f64 = 0.0;
        for &tk in &slot_times {
            let before = phi.clone();
            phi = flow_to(&phi, t, tk)?;
            max_drift_disp = max_drift_disp.max((&phi - &before).norm());
            t = tk;
            let forecast = flow_to(&phi, tk, t_horizon)?;
            let need = y - &forecast;
            if need.norm() <= 0.25 * epsilon {
                continue;
            }
            let sigma = coeffs.sigma(&phi);
            let jump = match model {
                LevyModel::Discrete { atoms } => {
                    let mut best: Option<(f64, DVector<f64>)> = None;
                    for a in atoms {
                        let u = DVector::from_column_slice(&a.u);
                        let after = (&need - coeffs.jump_map(&phi, &u)).norm();
                        if after < need.norm()
                            && best.as_ref().is_none_or(|(b, _)| after < *b)
                        {
                            best = Some((after, u));
                        }
                    }
                    best.map(|(_, u)| u)
                }
                _ => {
                    // Axis whose σ-image best reduces the residual.
                    let d = coeffs.noise_dim;
                    let mut best: Option<(f64, DVector<f64>)> = None;
                    for axis in 0..d {
                        let col = sigma.column(axis).into_owned();
                        let denom = col.norm_squared();
                        if denom < 1e-300 {
                            continue;
                        }
                        let z = (col.dot(&need) / denom).clamp(-amp_cap, amp_cap);
                        if z == 0.0 {
                            continue;
                        }
                        let mut u = DVector::zeros(d);
                        u[axis] = z;
                        let after = (&need - coeffs.jump_map(&phi, &u)).norm();
                        if after < need.norm()
                            && best.as_ref().is_none_or(|(b, _)| after < *b)
                        {
                            best = Some((after, u));
                        }
                    }
                    best.map(|(_, u)| u)
                }
            };
            if let Some(u) = jump {
                phi = &phi + coeffs.jump_map(&phi, &u);
                plan.push((tk, u));
            }
        }
        let before = phi.clone();
        phi = flow_to(&phi, t, t_horizon)?;
        max_drift_disp = max_drift_disp.max((&phi - &before).norm());
        if (y - &phi).norm() <= epsilon && max_drift_disp <= 0.25 * epsilon {
            let mut cert = ReachCertificate {
                start: x.clone(),
                target: y.clone(),
                t_horizon,
                epsilon,
                route: ReachRoute::JumpPlan(plan),
                terminal_error: f64::NAN,
                solve: opts.solve,
            };
            let (_, err) = cert.replay(coeffs, model)?;
            if err <= epsilon {
                cert.terminal_error = err;
                return Ok(cert);
            }
        }
        if 2 * k > opts.max_jumps {
            return Err(Error::IterationCap(format!(
                "no plan within ε = {epsilon} using up to {} jumps",
                opts.max_jumps
            )));
        }
        k *= 2;
    }
}

/// Steer `x → y` by a piecewise-constant control in the strong Type II
/// case (`L = {0}`): on each interval the control freezes the feedback
/// `σ(φ)⁺((y − φ)/(T − t) − b̃(φ))`, which re-aims at the target along the
/// straight line from the current state.
#[allow(clippy::too_many_arguments)]
pub fn reach_control(
    coeffs: &CoefficientSet,
    model: &LevyModel,
    subspace: &IntegrabilitySubspace,
    x: &DVector<f64>,
    y: &DVector<f64>,
    t_horizon: f64,
    n_pieces: usize,
    solve: &SolveOptions,
) -> Result<ReachCertificate> {
    if subspace.dim_l() != 0 {
        return Err(Error::InvalidParameter(
            "control steering needs the strong Type II case L = {0}".into(),
        ));
    }
    if n_pieces == 0 {
        return Err(Error::InvalidParameter("n_pieces must be >= 1".into()));
    }
    let drift = EffectiveDrift::new(coeffs, model)?;
    let mut breakpoints = Vec::with_capacity(n_pieces);
    let mut values = Vec::with_capacity(n_pieces);
    let mut phi = x.clone();
    for k in 0..n_pieces {
        let t0 = t_horizon * k as f64 / n_pieces as f64;
        let t1 = t_horizon * (k + 1) as f64 / n_pieces as f64;
        let sigma = coeffs.sigma(&phi);
        let svd = sigma.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let rank = svd
            .singular_values
            .iter()
            .filter(|s| **s > 1e-10 * smax.max(1e-300))
            .count();
        if rank < coeffs.state_dim {
            return Err(Error::RankDeficient(format!(
                "rank σ = {rank} < m = {} at t = {t0}",
                coeffs.state_dim
            )));
        }
        let aim = (y - &phi) / (t_horizon - t0) - drift.eval(&phi);
        let f = svd.solve(&aim, 1e-12).map_err(|e| {
            Error::RankDeficient(format!("pseudo-inverse failed: {e}"))
        })?;
        let seg = rk4_segment(
            |z| drift.eval(z) + coeffs.sigma(z) * &f,
            &phi,
            t0,
            t1,
            solve.step,
            solve.blow_up_norm,
        )?;
        phi = seg.last().unwrap().1.clone();
        breakpoints.push(t0);
        values.push(f);
    }
    let control = ControlFunction::new(breakpoints, values, subspace)?;
    let mut cert = ReachCertificate {
        start: x.clone(),
        target: y.clone(),
        t_horizon,
        epsilon: f64::NAN,
        route: ReachRoute::Control(control),
        terminal_error: f64::NAN,
        solve: *solve,
    };
    let (_, err) = cert.replay(coeffs, model)?;
    cert.terminal_error = err;
    cert.epsilon = err;
    Ok(cert)
}
