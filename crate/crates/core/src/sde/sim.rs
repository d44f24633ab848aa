//! Effective drift and Euler-type simulators.
//!
//! Around a truncation level `η` the SDE decomposes into the effective
//! drift, the compensator shift, the compensated small-jump integral on
//! `{|u| < η}`, and raw jumps on `{|u| ≥ η}`. Compensating `N − μ dt`
//! leaves the inter-jump drift `b̃_η(x) − σ(x)υ_η`: for a one-sided
//! measure the compensated positive jumps must drag the state down, which
//! fixes the sign.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::levy::{sample_large_jumps, LevyModel, SmallJumpConfig, SmallJumpSampler};
use crate::rng::Stream;
use crate::sde::{CadlagPath, CoefficientSet, JumpRecord, RemainderForm};
use crate::tilt::TiltFunction;

/// Effective drift `b̃(x) = b(x) − ∫_{|u|≤1} σ(x) u_L μ(du) −
/// ∫_{|u|≤1} r(x,u) μ(du)`, with both integrals computed once.
pub struct EffectiveDrift {
    coeffs: CoefficientSet,
    proj_mean: DVector<f64>,
    power_moment: Option<f64>,
}

impl EffectiveDrift {
    pub fn new(coeffs: &CoefficientSet, model: &LevyModel) -> Result<Self> {
        coeffs.validate_against_model(model)?;
        let subspace = model.integrability_subspace()?;
        let proj_mean = model.proj_mean_band(&subspace, 0.0, 1.0)?;
        let power_moment = match &coeffs.remainder {
            RemainderForm::PowerLaw { .. } => Some(model.beta_moment(coeffs.beta)?),
            _ => None,
        };
        Ok(Self {
            coeffs: coeffs.clone(),
            proj_mean,
            power_moment,
        })
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut b = self.coeffs.drift(x);
        if self.proj_mean.norm() > 0.0 {
            b -= self.coeffs.sigma(x) * &self.proj_mean;
        }
        match (&self.coeffs.remainder, self.power_moment) {
            (RemainderForm::Zero, _) => {}
            (
                RemainderForm::PowerLaw {
                    coeff0,
                    coeff1,
                    direction,
                },
                Some(moment),
            ) => {
                b -= direction * ((coeff0 + coeff1.dot(x)) * moment);
            }
            (RemainderForm::Custom { band_moment, .. }, _) => {
                b -= band_moment(x, 0.0, 1.0);
            }
            _ => unreachable!(),
        }
        b
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    pub small_jump: SmallJumpConfig,
    pub blow_up_norm: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            small_jump: SmallJumpConfig::default(),
            blow_up_norm: 1e12,
        }
    }
}

/// A realised driving noise on a window: raw jumps with `|u| ≥ η` plus
/// the compound-Poisson atoms of the small-jump annulus. Times are
/// absolute and sorted.
#[derive(Debug, Clone, Default)]
pub struct RealizedNoise {
    pub large: Vec<(f64, DVector<f64>)>,
    pub annulus: Vec<(f64, DVector<f64>)>,
}

struct Engine<'a> {
    coeffs: &'a CoefficientSet,
    model: &'a LevyModel,
    /// `∫_{η≤|u|≤1} u_L μ + υ_η`; the σ-weighted compensator of the band
    /// `η ≤ |u| ≤ 1`.
    band_comp: DVector<f64>,
    power_band_eta1: f64,
    power_band_ann: f64,
    sampler: SmallJumpSampler,
    opts: SimOptions,
}

impl<'a> Engine<'a> {
    fn new(
        coeffs: &'a CoefficientSet,
        model: &'a LevyModel,
        eta: f64,
        opts: SimOptions,
    ) -> Result<Self> {
        coeffs.validate_against_model(model)?;
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eta = {eta} outside (0, 1]"
            )));
        }
        let subspace = model.integrability_subspace()?;
        let upsilon = model.upsilon_eta(eta)?;
        let band_comp = model.proj_mean_band(&subspace, eta, 1.0)? + upsilon;
        let sampler = SmallJumpSampler::new(model, eta, &opts.small_jump)?;
        let (power_band_eta1, power_band_ann) = match &coeffs.remainder {
            RemainderForm::PowerLaw { .. } => (
                model.beta_moment_band(coeffs.beta, eta, 1.0)?,
                model.beta_moment_band(coeffs.beta, sampler.inner_cut(), eta)?,
            ),
            _ => (0.0, 0.0),
        };
        Ok(Self {
            coeffs,
            model,
            band_comp,
            power_band_eta1,
            power_band_ann,
            sampler,
            opts,
        })
    }

    fn r_band(&self, x: &DVector<f64>, a: f64, b: f64, cached: f64) -> Result<DVector<f64>> {
        match &self.coeffs.remainder {
            RemainderForm::Zero => Ok(DVector::zeros(self.coeffs.state_dim)),
            RemainderForm::PowerLaw {
                coeff0,
                coeff1,
                direction,
            } => Ok(direction * ((coeff0 + coeff1.dot(x)) * cached)),
            RemainderForm::Custom { .. } => self.coeffs.remainder_band_moment(self.model, x, a, b),
        }
    }

    /// Drift between jumps: `b̃_η(x) − σ(x) υ_η`, with the `u_L` band
    /// term folded into `band_comp`.
    fn inter_jump_drift(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let mut b = self.coeffs.drift(x);
        b -= self.coeffs.sigma(x) * &self.band_comp;
        b -= self.r_band(x, self.sampler.eta(), 1.0, self.power_band_eta1)?;
        Ok(b)
    }

    /// One Euler step over `[t, t+dt)` with the annulus atoms of that
    /// window; `rng` drives the Gaussian band fill.
    fn step(
        &self,
        x: &DVector<f64>,
        t: f64,
        dt: f64,
        window: &[(f64, DVector<f64>)],
        rng: Option<&mut Stream>,
    ) -> Result<DVector<f64>> {
        let sigma = self.coeffs.sigma(x);
        let mut next = x + self.inter_jump_drift(x)? * dt;
        let mut linear = -self.sampler.annulus_mean() * dt;
        for (_, u) in window {
            linear += u;
            next += self.coeffs.remainder(x, u);
        }
        if let Some(rng) = rng {
            linear += self.sampler.fill_increment(dt, rng);
        }
        next += sigma * linear;
        next -= self.r_band(x, self.sampler.inner_cut(), self.sampler.eta(), self.power_band_ann)? * dt;
        if !next.iter().all(|v| v.is_finite()) || next.norm() > self.opts.blow_up_norm {
            return Err(Error::BlowUp {
                time: t + dt,
                norm: next.norm(),
            });
        }
        Ok(next)
    }

    fn integrate(
        &self,
        x0: &DVector<f64>,
        t0: f64,
        t1: f64,
        n_steps: usize,
        noise: &RealizedNoise,
        mut rng: Option<&mut Stream>,
    ) -> Result<CadlagPath> {
        if t1 == t0 {
            return CadlagPath::new(vec![t0], vec![x0.clone()], Vec::new());
        }
        if n_steps == 0 {
            return Err(Error::InvalidParameter("n_steps must be >= 1".into()));
        }
        // Uniform grid refined through the jump times.
        let mut nodes: Vec<f64> = (0..=n_steps)
            .map(|i| t0 + (t1 - t0) * i as f64 / n_steps as f64)
            .collect();
        for (t, _) in &noise.large {
            if !(*t >= t0 && *t < t1) {
                return Err(Error::InvalidParameter(format!(
                    "jump time {t} outside [{t0}, {t1})"
                )));
            }
            nodes.push(*t);
        }
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();

        let mut values = Vec::with_capacity(nodes.len());
        let mut jumps: Vec<JumpRecord> = Vec::new();
        let mut x = x0.clone();
        values.push(x.clone());
        let mut atom_ix = 0usize;
        let mut large_ix = 0usize;
        for w in nodes.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mut hi = atom_ix;
            while hi < noise.annulus.len() && noise.annulus[hi].0 < b {
                hi += 1;
            }
            x = self.step(
                &x,
                a,
                b - a,
                &noise.annulus[atom_ix..hi],
                rng.as_deref_mut(),
            )?;
            atom_ix = hi;
            // Apply all raw jumps scheduled at node b (coalesced if, by
            // measure-zero accident, several share the time).
            let pre = x.clone();
            let mut n_here = 0usize;
            let mut amp = None;
            while large_ix < noise.large.len() && noise.large[large_ix].0 == b {
                let xi = &noise.large[large_ix].1;
                x = &x + self.coeffs.jump_map(&x, xi);
                amp = Some(xi.clone());
                n_here += 1;
                large_ix += 1;
            }
            if n_here > 0 {
                if !x.iter().all(|v| v.is_finite()) || x.norm() > self.opts.blow_up_norm {
                    return Err(Error::BlowUp {
                        time: b,
                        norm: x.norm(),
                    });
                }
                jumps.push(JumpRecord {
                    time: b,
                    pre,
                    post: x.clone(),
                    amplitude: if n_here == 1 { amp } else { None },
                });
            }
            values.push(x.clone());
        }
        CadlagPath::new(nodes, values, jumps)
    }
}

/// Realise the driving noise of the decomposition at level `η` on
/// `[t0, t1)`: first the raw jumps, then the annulus atoms.
pub fn realize_noise(
    model: &LevyModel,
    eta: f64,
    t0: f64,
    t1: f64,
    opts: &SimOptions,
    rng: &mut Stream,
) -> Result<RealizedNoise> {
    let large = sample_large_jumps(model, eta, t1 - t0, rng)?
        .into_iter()
        .map(|(t, u)| (t0 + t, u))
        .collect();
    let sampler = SmallJumpSampler::new(model, eta, &opts.small_jump)?;
    let annulus = sampler.realize_atoms(t0, t1, rng);
    Ok(RealizedNoise { large, annulus })
}

/// Explicit Euler path of the full SDE on `[0, T]`.
#[allow(clippy::too_many_arguments)]
pub fn euler_simulate(
    coeffs: &CoefficientSet,
    model: &LevyModel,
    x0: &DVector<f64>,
    t_horizon: f64,
    n_steps: usize,
    eta: f64,
    opts: &SimOptions,
    rng: &mut Stream,
) -> Result<CadlagPath> {
    if !(t_horizon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon {t_horizon} must be positive"
        )));
    }
    let engine = Engine::new(coeffs, model, eta, *opts)?;
    let large = sample_large_jumps(model, eta, t_horizon, rng)?;
    let annulus = engine.sampler.realize_atoms(0.0, t_horizon, rng);
    let noise = RealizedNoise { large, annulus };
    engine.integrate(x0, 0.0, t_horizon, n_steps, &noise, Some(rng))
}

/// Euler path driven by an externally realised noise. Requires the
/// Gaussian band fill to be disabled, so that the same noise can be
/// replayed on different grids.
#[allow(clippy::too_many_arguments)]
pub fn euler_simulate_given_noise(
    coeffs: &CoefficientSet,
    model: &LevyModel,
    x0: &DVector<f64>,
    t0: f64,
    t1: f64,
    n_steps: usize,
    eta: f64,
    opts: &SimOptions,
    noise: &RealizedNoise,
) -> Result<CadlagPath> {
    let engine = Engine::new(coeffs, model, eta, *opts)?;
    if opts.small_jump.gaussian_fill && engine.sampler.inner_cut() > 0.0 {
        return Err(Error::InvalidParameter(
            "replaying a fixed noise needs gaussian_fill = false".into(),
        ));
    }
    engine.integrate(x0, t0, t1, n_steps, noise, None)
}

/// Truncated equation: the same dynamics with the driving measure
/// restricted to `{|u| < η}` (no raw jumps), started at `x` at time `S`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_truncated(
    coeffs: &CoefficientSet,
    model: &LevyModel,
    x: &DVector<f64>,
    t_start: f64,
    t_end: f64,
    n_steps: usize,
    eta: f64,
    opts: &SimOptions,
    rng: &mut Stream,
) -> Result<CadlagPath> {
    if !(t_end >= t_start) {
        return Err(Error::InvalidParameter(format!(
            "window [{t_start}, {t_end}] is empty"
        )));
    }
    let engine = Engine::new(coeffs, model, eta, *opts)?;
    let annulus = engine.sampler.realize_atoms(t_start, t_end, rng);
    let noise = RealizedNoise {
        large: Vec::new(),
        annulus,
    };
    engine.integrate(x, t_start, t_end, n_steps, &noise, Some(rng))
}

/// Outcome of a tilted simulation.
pub struct TiltedRun {
    pub path: CadlagPath,
    /// Realised `log` of the Radon–Nikodym density of the base law with
    /// respect to the tilted law, evaluated on this run.
    pub log_density: f64,
    /// Atoms of the tilted driving measure on the annulus, sorted by time.
    pub atoms: Vec<(f64, DVector<f64>)>,
}

/// Truncated equation driven by the tilted measure `(1 + g_t(u)) μ(du) dt`,
/// realised by thinning the base annulus stream (keep with probability
/// `min(1, 1+g)`) and superposing an extra stream at rate `max(0, g) μ`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_tilted_detailed(
    coeffs: &CoefficientSet,
    model: &LevyModel,
    x: &DVector<f64>,
    t_start: f64,
    t_end: f64,
    n_steps: usize,
    eta: f64,
    g: &TiltFunction,
    opts: &SimOptions,
    rng: &mut Stream,
) -> Result<TiltedRun> {
    if !(t_end >= t_start) {
        return Err(Error::InvalidParameter(format!(
            "window [{t_start}, {t_end}] is empty"
        )));
    }
    if g.t_end() < t_end {
        return Err(Error::InvalidParameter(format!(
            "tilt defined up to {} but simulation runs to {t_end}",
            g.t_end()
        )));
    }
    for piece in g.pieces() {
        if (piece.eta - eta).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "tilt outer radius {} does not match simulation eta {eta}",
                piece.eta
            )));
        }
    }
    // The annulus stream must resolve every atom the tilt can see.
    let mut opts = *opts;
    let probe = SmallJumpSampler::new(model, eta, &opts.small_jump)?;
    let mut cut = probe.inner_cut();
    if let Some(z) = g.min_zeta() {
        cut = cut.min(z);
    }
    opts.small_jump.inner_cut = Some(cut);
    let engine = Engine::new(coeffs, model, eta, opts)?;

    let base = engine.sampler.realize_atoms(t_start, t_end, rng);
    let mut kept: Vec<(f64, DVector<f64>)> = Vec::with_capacity(base.len());
    for (t, u) in base {
        let gv = g.eval(t, &u);
        if gv < 0.0 && rng.random::<f64>() < -gv {
            continue;
        }
        kept.push((t, u));
    }
    let mut extra: Vec<(f64, DVector<f64>)> = Vec::new();
    for piece in g.pieces() {
        let (lo, hi) = g.piece_window(piece, t_start, t_end);
        if hi <= lo || piece.max_abs_coeff() == 0.0 {
            continue;
        }
        let band = crate::levy::BandSampler::new(model, piece.zeta, piece.eta)?;
        let dominating = 0.5 * band.mass();
        let n = {
            use rand_distr::Distribution;
            if dominating * (hi - lo) > 0.0 {
                rand_distr::Poisson::new(dominating * (hi - lo))
                    .expect("positive rate")
                    .sample(rng) as usize
            } else {
                0
            }
        };
        let mut times: Vec<f64> = (0..n)
            .map(|_| lo + rng.random::<f64>() * (hi - lo))
            .collect();
        times.sort_by(f64::total_cmp);
        for t in times {
            let u = band.sample(rng);
            let gv = g.eval(t, &u);
            // Candidate intensity is (1/2)μ on the band, so accepting with
            // probability 2·max(0, g) realises the rate max(0, g)·μ.
            if gv > 0.0 && rng.random::<f64>() < 2.0 * gv {
                extra.push((t, u));
            }
        }
    }
    let mut atoms = kept;
    atoms.extend(extra);
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));

    let noise = RealizedNoise {
        large: Vec::new(),
        annulus: atoms.clone(),
    };
    let path = engine.integrate(x, t_start, t_end, n_steps, &noise, Some(rng))?;

    let mut log_density = 0.0;
    for (t, u) in &atoms {
        let gv = g.eval(*t, u);
        if gv != 0.0 {
            log_density -= (1.0 + gv).ln();
        }
    }
    for piece in g.pieces() {
        let (lo, hi) = g.piece_window(piece, t_start, t_end);
        if hi > lo {
            log_density += (hi - lo) * piece.mu_g_rate;
        }
    }
    Ok(TiltedRun {
        path,
        log_density,
        atoms,
    })
}

/// Tilted simulation returning the path and the realised log-density.
#[allow(clippy::too_many_arguments)]
pub fn simulate_tilted(
    coeffs: &CoefficientSet,
    model: &LevyModel,
    x: &DVector<f64>,
    t_start: f64,
    t_end: f64,
    n_steps: usize,
    eta: f64,
    g: &TiltFunction,
    opts: &SimOptions,
    rng: &mut Stream,
) -> Result<(CadlagPath, f64)> {
    let run = simulate_tilted_detailed(
        coeffs, model, x, t_start, t_end, n_steps, eta, g, opts, rng,
    )?;
    Ok((run.path, run.log_density))
}
