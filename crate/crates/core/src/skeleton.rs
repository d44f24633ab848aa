//! Deterministic skeleton paths: piecewise ODEs driven by an `L^⊥`-valued
//! control, interleaved with admissible jumps.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::levy::{DiscreteAtom, IntegrabilitySubspace, LevyModel};
use crate::sde::{CadlagPath, CoefficientSet, EffectiveDrift, JumpRecord};

/// Piecewise-constant control with values in `L^⊥`. A single piece is the
/// constant class; the first breakpoint is always 0.
#[derive(Debug, Clone)]
pub struct ControlFunction {
    breakpoints: Vec<f64>,
    values: Vec<DVector<f64>>,
}

impl ControlFunction {
    pub fn new(
        breakpoints: Vec<f64>,
        values: Vec<DVector<f64>>,
        subspace: &IntegrabilitySubspace,
    ) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(Error::InvalidParameter(
                "control needs matching non-empty breakpoints/values".into(),
            ));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidParameter(
                "first control breakpoint must be 0".into(),
            ));
        }
        for w in breakpoints.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidParameter(
                    "control breakpoints not strictly increasing".into(),
                ));
            }
        }
        for v in &values {
            let leak = subspace.project(v)?.norm();
            if leak > 1e-10 * (1.0 + v.norm()) {
                return Err(Error::InvalidParameter(format!(
                    "control value leaks into L: |proj_L| = {leak:e}"
                )));
            }
        }
        Ok(Self {
            breakpoints,
            values,
        })
    }

    /// The constant control `f ≡ value`.
    pub fn constant(value: DVector<f64>, subspace: &IntegrabilitySubspace) -> Result<Self> {
        Self::new(vec![0.0], vec![value], subspace)
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            breakpoints: vec![0.0],
            values: vec![DVector::zeros(dim)],
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn value_at(&self, t: f64) -> &DVector<f64> {
        let i = self.breakpoints.partition_point(|&b| b <= t);
        &self.values[i.saturating_sub(1)]
    }
}

/// Planned jump: an explicit amplitude in `supp μ`, or a target state to
/// be resolved through the admissibility search.
#[derive(Debug, Clone)]
pub enum JumpMode {
    Amplitude(DVector<f64>),
    Target(DVector<f64>),
}

#[derive(Debug, Clone, Default)]
pub struct JumpPlan {
    pub items: Vec<(f64, JumpMode)>,
}

impl JumpPlan {
    pub fn amplitudes(items: Vec<(f64, DVector<f64>)>) -> Self {
        Self {
            items: items
                .into_iter()
                .map(|(t, u)| (t, JumpMode::Amplitude(u)))
                .collect(),
        }
    }

    fn validate(&self, t_horizon: f64) -> Result<()> {
        let mut last = 0.0;
        for (t, _) in &self.items {
            if !(*t > last && *t < t_horizon) {
                return Err(Error::InvalidParameter(format!(
                    "jump time {t} not strictly inside (0, {t_horizon}) in increasing order"
                )));
            }
            last = *t;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Fixed RK4 step; segment lengths are divided evenly so breakpoints
    /// and jump times land exactly on the grid.
    pub step: f64,
    pub admissibility_tol: f64,
    pub blow_up_norm: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            admissibility_tol: 1e-6,
            blow_up_norm: 1e12,
        }
    }
}

/// A solved skeleton with its provenance.
#[derive(Debug, Clone)]
pub struct SkeletonPath {
    pub path: CadlagPath,
    pub control: ControlFunction,
    /// Jump times with the amplitudes actually applied.
    pub resolved_jumps: Vec<(f64, DVector<f64>)>,
    pub opts: SolveOptions,
}

/// Classical fixed-step RK4 for the autonomous segment RHS.
pub(crate) fn rk4_segment<F>(
    rhs: F,
    x0: &DVector<f64>,
    t0: f64,
    t1: f64,
    step: f64,
    blow_up: f64,
) -> Result<Vec<(f64, DVector<f64>)>>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let len = t1 - t0;
    let n = (len / step).ceil().max(1.0) as usize;
    let h = len / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut x = x0.clone();
    for i in 0..n {
        let k1 = rhs(&x);
        let k2 = rhs(&(&x + &k1 * (h / 2.0)));
        let k3 = rhs(&(&x + &k2 * (h / 2.0)));
        let k4 = rhs(&(&x + &k3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let t = if i + 1 == n {
            t1
        } else {
            t0 + h * (i + 1) as f64
        };
        if !x.iter().all(|v| v.is_finite()) || x.norm() > blow_up {
            return Err(Error::BlowUp {
                time: t,
                norm: x.norm(),
            });
        }
        out.push((t, x.clone()));
    }
    Ok(out)
}

/// Solve the skeleton equation `dφ = (b̃(φ) + σ(φ) f_t) dt` with jumps
/// `φ ← φ⁻ + c(φ⁻, u_k)` at the plan times. Target-mode jumps are
/// resolved to amplitudes through the admissibility search at solve time.
#[allow(clippy::too_many_arguments)]
pub fn solve_skeleton(
    x0: &DVector<f64>,
    drift: &EffectiveDrift,
    coeffs: &CoefficientSet,
    model: &LevyModel,
    control: &ControlFunction,
    plan: &JumpPlan,
    t_horizon: f64,
    opts: &SolveOptions,
) -> Result<SkeletonPath> {
    if !(t_horizon > 0.0) {
        return Err(Error::InvalidParameter("horizon must be positive".into()));
    }
    plan.validate(t_horizon)?;
    for b in control.breakpoints() {
        if *b >= t_horizon {
            return Err(Error::InvalidParameter(format!(
                "control breakpoint {b} beyond the horizon"
            )));
        }
    }
    let mut nodes: Vec<f64> = vec![0.0, t_horizon];
    nodes.extend(control.breakpoints().iter().copied());
    nodes.extend(plan.items.iter().map(|(t, _)| *t));
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();

    let mut times = vec![0.0];
    let mut values = vec![x0.clone()];
    let mut jumps: Vec<JumpRecord> = Vec::new();
    let mut resolved: Vec<(f64, DVector<f64>)> = Vec::new();
    let mut x = x0.clone();
    let mut plan_ix = 0usize;
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        let f = control.value_at(a).clone();
        let seg = rk4_segment(
            |y| drift.eval(y) + coeffs.sigma(y) * &f,
            &x,
            a,
            b,
            opts.step,
            opts.blow_up_norm,
        )?;
        for (t, v) in seg {
            times.push(t);
            values.push(v.clone());
            x = v;
        }
        while plan_ix < plan.items.len() && plan.items[plan_ix].0 == b {
            let amplitude = match &plan.items[plan_ix].1 {
                JumpMode::Amplitude(u) => {
                    let dist = support_distance(model, u)?;
                    if dist > opts.admissibility_tol * (1.0 + u.norm()) {
                        return Err(Error::Inadmissible(format!(
                            "amplitude at t = {b} lies {dist:e} away from supp μ"
                        )));
                    }
                    u.clone()
                }
                JumpMode::Target(y) => {
                    let report = admissible(&x, y, coeffs, model, opts.admissibility_tol)?;
                    match report.decision {
                        Decision::Yes => report.witness.ok_or_else(|| {
                            Error::Inadmissible("admissible but no witness found".into())
                        })?,
                        other => {
                            return Err(Error::Inadmissible(format!(
                                "target at t = {b} is {other:?} (infimum {:e})",
                                report.infimum
                            )))
                        }
                    }
                }
            };
            let pre = x.clone();
            x = &x + coeffs.jump_map(&x, &amplitude);
            if !x.iter().all(|v| v.is_finite()) || x.norm() > opts.blow_up_norm {
                return Err(Error::BlowUp {
                    time: b,
                    norm: x.norm(),
                });
            }
            jumps.push(JumpRecord {
                time: b,
                pre,
                post: x.clone(),
                amplitude: Some(amplitude.clone()),
            });
            *values.last_mut().unwrap() = x.clone();
            resolved.push((b, amplitude));
            plan_ix += 1;
        }
    }
    Ok(SkeletonPath {
        path: CadlagPath::new(times, values, jumps)?,
        control: control.clone(),
        resolved_jumps: resolved,
        opts: *opts,
    })
}

/// Admissibility decision for the pair `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Yes,
    No,
    Boundary,
}

#[derive(Debug, Clone)]
pub struct AdmissibleReport {
    pub decision: Decision,
    /// Best found value of `|x + c(x,u) − y|` over `u ∈ supp μ`.
    pub infimum: f64,
    /// Minimiser, preferring the smallest `|u|` among near-optimal ones.
    pub witness: Option<DVector<f64>>,
}

/// Distance from `u` to `supp μ` (0 when on the support closure).
pub(crate) fn support_distance(model: &LevyModel, u: &DVector<f64>) -> Result<f64> {
    if u.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: u.len(),
        });
    }
    Ok(match model {
        LevyModel::RadialStable { .. } => 0.0,
        LevyModel::CylindricalStable { .. } => {
            let total = u.norm_squared();
            let best = u.iter().map(|v| v * v).fold(0.0, f64::max);
            (total - best).max(0.0).sqrt()
        }
        LevyModel::OneSidedStable1D { .. } => {
            let z = u[0];
            if z < 0.0 {
                -z
            } else if z > 1.0 {
                z - 1.0
            } else {
                0.0
            }
        }
        LevyModel::CurveImage { gamma, .. } => {
            let f = |z: f64| {
                let p = DVector::from_column_slice(&[z, z.abs().powf(*gamma) * z.signum()]);
                (u - p).norm()
            };
            minimize_scalar_global(&f, curve_param_grid(u.norm())).1
        }
        LevyModel::Discrete { atoms } => atoms
            .iter()
            .map(|a| (u - DVector::from_column_slice(&a.u)).norm())
            .fold(f64::INFINITY, f64::min),
    })
}

fn curve_param_grid(scale: f64) -> Vec<f64> {
    let s = scale.max(1e-3);
    let mut grid = vec![0.0];
    for k in -24..=8 {
        let z = s * 2f64.powi(k);
        grid.push(z);
        grid.push(-z);
    }
    grid.sort_by(f64::total_cmp);
    grid
}

/// Deterministic golden-section refinement around the best grid point.
fn minimize_scalar_global(f: &dyn Fn(f64) -> f64, grid: Vec<f64>) -> (f64, f64) {
    debug_assert!(grid.len() >= 2);
    let mut best_i = 0;
    let mut best_v = f64::INFINITY;
    for (i, &z) in grid.iter().enumerate() {
        let v = f(z);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let lo = grid[best_i.saturating_sub(1)];
    let hi = grid[(best_i + 1).min(grid.len() - 1)];
    let (mut a, mut b) = (lo, hi);
    let phi = 0.618_033_988_749_894_9;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let z = 0.5 * (a + b);
    let v = f(z);
    if v < best_v {
        (z, v)
    } else {
        (grid[best_i], best_v)
    }
}

/// Gauss–Newton with a central-difference Jacobian; used when the
/// remainder makes the jump map nonlinear in `u`.
fn gauss_newton(
    f: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    start: &DVector<f64>,
    iters: usize,
) -> DVector<f64> {
    let d = start.len();
    let mut u = start.clone();
    for _ in 0..iters {
        let r = f(&u);
        if r.norm() < 1e-14 {
            break;
        }
        let m = r.len();
        let mut jac = nalgebra::DMatrix::zeros(m, d);
        let h = 1e-6 * (1.0 + u.norm());
        for j in 0..d {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[j] += h;
            dn[j] -= h;
            let col = (f(&up) - f(&dn)) / (2.0 * h);
            jac.set_column(j, &col);
        }
        match jac.svd(true, true).solve(&r, 1e-12) {
            Ok(delta) => {
                let delta: DVector<f64> = delta;
                if !delta.iter().all(|v| v.is_finite()) {
                    break;
                }
                u -= delta;
            }
            Err(_) => break,
        }
    }
    u
}

/// Decide whether `y ∈ supp J(x, ·)` by minimising `|x + c(x,u) − y|`
/// over the parametrised support of `μ` with a deterministic multi-start
/// search. Yes below `tol·(1+|y−x|)`, no above ten times that, boundary
/// in between.
pub fn admissible(
    x: &DVector<f64>,
    y: &DVector<f64>,
    coeffs: &CoefficientSet,
    model: &LevyModel,
    tol: f64,
) -> Result<AdmissibleReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    if x.len() != coeffs.state_dim || y.len() != coeffs.state_dim {
        return Err(Error::DimensionMismatch {
            expected: coeffs.state_dim,
            got: x.len().max(y.len()),
        });
    }
    let scale = tol * (1.0 + (y - x).norm());
    let objective = |u: &DVector<f64>| (x + coeffs.jump_map(x, u) - y).norm();
    // Candidate minimisers: (value, |u|, u).
    let mut candidates: Vec<(f64, f64, DVector<f64>)> = Vec::new();
    match model {
        LevyModel::Discrete { atoms } => {
            for DiscreteAtom { u, .. } in atoms {
                let uu = DVector::from_column_slice(u);
                candidates.push((objective(&uu), uu.norm(), uu));
            }
        }
        LevyModel::RadialStable { dim, .. } => {
            // Full-space support: least squares through σ(x)⁺, then a
            // Gauss–Newton polish when the remainder is nonlinear.
            let sigma = coeffs.sigma(x);
            let rhs = y - x;
            let ls = sigma
                .clone()
                .svd(true, true)
                .solve(&rhs, 1e-12)
                .unwrap_or_else(|_| DVector::zeros(*dim));
            let residual = |u: &DVector<f64>| x + coeffs.jump_map(x, u) - y;
            let mut starts = vec![ls.clone(), &ls * 0.5, &ls * 2.0];
            for j in 0..*dim {
                let mut e = DVector::zeros(*dim);
                e[j] = 0.1;
                starts.push(&ls + &e);
            }
            for s in starts {
                let u = gauss_newton(&residual, &s, 60);
                candidates.push((objective(&u), u.norm(), u));
            }
        }
        LevyModel::CylindricalStable { alpha, .. } => {
            let span = 1.0 + (y - x).norm();
            for axis in 0..alpha.len() {
                let param = |z: f64| {
                    let mut u = DVector::zeros(alpha.len());
                    u[axis] = z;
                    u
                };
                let f = |z: f64| objective(&param(z));
                let (z, v) = minimize_scalar_global(&f, signed_log_grid(span));
                candidates.push((v, z.abs(), param(z)));
            }
        }
        LevyModel::CurveImage { gamma, .. } => {
            let param = |z: f64| {
                DVector::from_column_slice(&[z, z.abs().powf(*gamma) * z.signum()])
            };
            let f = |z: f64| objective(&param(z));
            let span = 1.0 + (y - x).norm();
            let (z, v) = minimize_scalar_global(&f, signed_log_grid(span));
            candidates.push((v, z.abs(), param(z)));
        }
        LevyModel::OneSidedStable1D { .. } => {
            let param = |z: f64| DVector::from_element(1, z);
            let f = |z: f64| objective(&param(z));
            let grid: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0).collect();
            let (z, v) = minimize_scalar_global(&f, grid);
            candidates.push((v, z.abs(), param(z)));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let infimum = candidates[0].0;
    // Smallest-|u| tie-break among candidates achieving the yes level.
    let witness = if infimum <= scale {
        candidates
            .iter()
            .filter(|(v, _, _)| *v <= scale)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(_, _, u)| u.clone())
    } else {
        Some(candidates[0].2.clone())
    };
    let decision = if infimum <= scale {
        Decision::Yes
    } else if infimum >= 10.0 * scale {
        Decision::No
    } else {
        Decision::Boundary
    };
    Ok(AdmissibleReport {
        decision,
        infimum,
        witness,
    })
}

fn signed_log_grid(span: f64) -> Vec<f64> {
    let mut grid = vec![0.0];
    for k in -20..=6 {
        let z = span * 2f64.powi(k);
        grid.push(z);
        grid.push(-z);
    }
    grid.sort_by(f64::total_cmp);
    grid
}

/// Piecewise-linear time change through prescribed anchors, with its
/// slope-log statistic.
#[derive(Debug, Clone)]
pub struct TimeChange {
    anchors: Vec<(f64, f64)>,
    pub max_abs_log_slope: f64,
}

impl TimeChange {
    pub fn identity(t_horizon: f64) -> Self {
        Self {
            anchors: vec![(0.0, 0.0), (t_horizon, t_horizon)],
            max_abs_log_slope: 0.0,
        }
    }

    pub fn from_anchors(interior: &[(f64, f64)], t_horizon: f64) -> Result<Self> {
        let mut anchors = Vec::with_capacity(interior.len() + 2);
        anchors.push((0.0, 0.0));
        anchors.extend_from_slice(interior);
        anchors.push((t_horizon, t_horizon));
        let mut max_log: f64 = 0.0;
        for w in anchors.windows(2) {
            let (dt, ds) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            if !(dt > 0.0 && ds > 0.0) {
                return Err(Error::GapViolation(format!(
                    "time-change anchors not strictly increasing: {:?} -> {:?}",
                    w[0], w[1]
                )));
            }
            max_log = max_log.max((ds / dt).ln().abs());
        }
        Ok(Self {
            anchors,
            max_abs_log_slope: max_log,
        })
    }

    pub fn anchors(&self) -> &[(f64, f64)] {
        &self.anchors
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.anchors.len();
        if t <= self.anchors[0].0 {
            return self.anchors[0].1;
        }
        if t >= self.anchors[n - 1].0 {
            return self.anchors[n - 1].1;
        }
        let i = self.anchors.partition_point(|(a, _)| *a <= t);
        let (t0, s0) = self.anchors[i - 1];
        let (t1, s1) = self.anchors[i];
        s0 + (t - t0) / (t1 - t0) * (s1 - s0)
    }

    /// The inverse map (anchors swapped).
    pub fn inverse(&self) -> Self {
        Self {
            anchors: self.anchors.iter().map(|&(a, b)| (b, a)).collect(),
            max_abs_log_slope: self.max_abs_log_slope,
        }
    }
}

/// The piecewise-linear `λ` with `λ(0) = 0`, `λ(T) = T`, `λ(t_j) = s_j`.
pub fn time_change_lambda(times_t: &[f64], times_s: &[f64], t_horizon: f64) -> Result<TimeChange> {
    if times_t.len() != times_s.len() {
        return Err(Error::InvalidParameter(format!(
            "anchor lists of different lengths {} vs {}",
            times_t.len(),
            times_s.len()
        )));
    }
    let interior: Vec<(f64, f64)> = times_t
        .iter()
        .copied()
        .zip(times_s.iter().copied())
        .collect();
    TimeChange::from_anchors(&interior, t_horizon)
}

/// Re-solve a skeleton with its jump times moved to `times_s`, restarting
/// each interval at the original post-jump states and keeping the control
/// at absolute time; continuous up to the horizon.
pub fn perturb_jump_times(
    skeleton: &SkeletonPath,
    drift: &EffectiveDrift,
    coeffs: &CoefficientSet,
    times_s: &[f64],
) -> Result<SkeletonPath> {
    let t_horizon = skeleton.path.t_end();
    let times_t: Vec<f64> = skeleton.resolved_jumps.iter().map(|(t, _)| *t).collect();
    if times_s.len() != times_t.len() {
        return Err(Error::InvalidParameter(format!(
            "{} perturbed times for {} jumps",
            times_s.len(),
            times_t.len()
        )));
    }
    if times_t.is_empty() {
        return Ok(skeleton.clone());
    }
    // Half the minimal gap of {0, t_1, …, t_K, T}.
    let mut gap = times_t[0].min(t_horizon - *times_t.last().unwrap());
    for w in times_t.windows(2) {
        gap = gap.min(w[1] - w[0]);
    }
    let delta_max = 0.5 * gap;
    for (t, s) in times_t.iter().zip(times_s) {
        if !((s - t).abs() < delta_max) {
            return Err(Error::GapViolation(format!(
                "|{s} - {t}| exceeds half the minimal jump gap {delta_max}"
            )));
        }
    }
    // Original post-jump states.
    let mut restarts: Vec<DVector<f64>> = vec![skeleton.path.values()[0].clone()];
    for rec in skeleton.path.jumps() {
        restarts.push(rec.post.clone());
    }
    let control = &skeleton.control;
    let opts = skeleton.opts;
    let mut boundaries = vec![0.0];
    boundaries.extend_from_slice(times_s);
    boundaries.push(t_horizon);

    let mut times = vec![0.0];
    let mut values = vec![restarts[0].clone()];
    let mut jumps: Vec<JumpRecord> = Vec::new();
    let mut x = restarts[0].clone();
    for (k, w) in boundaries.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        // Sub-split at control breakpoints inside the interval.
        let mut nodes = vec![a, b];
        for bp in control.breakpoints() {
            if *bp > a && *bp < b {
                nodes.push(*bp);
            }
        }
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        for seg in nodes.windows(2) {
            let f = control.value_at(seg[0]).clone();
            let out = rk4_segment(
                |y| drift.eval(y) + coeffs.sigma(y) * &f,
                &x,
                seg[0],
                seg[1],
                opts.step,
                opts.blow_up_norm,
            )?;
            for (t, v) in out {
                times.push(t);
                values.push(v.clone());
                x = v;
            }
        }
        if k + 1 < restarts.len() {
            let pre = x.clone();
            x = restarts[k + 1].clone();
            jumps.push(JumpRecord {
                time: b,
                pre,
                post: x.clone(),
                amplitude: None,
            });
            *values.last_mut().unwrap() = x.clone();
        }
    }
    Ok(SkeletonPath {
        path: CadlagPath::new(times, values, jumps)?,
        control: control.clone(),
        resolved_jumps: times_s
            .iter()
            .copied()
            .zip(skeleton.resolved_jumps.iter().map(|(_, u)| u.clone()))
            .collect(),
        opts,
    })
}
