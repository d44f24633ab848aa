//! Jump samplers: tail (large-jump) draws and the compensated
//! small-jump increment.
//!
//! The small-jump integral over `{|u| < η}` is realised as a compound
//! Poisson stream on an annulus `ζ_in ≤ |u| < η` minus its mean; the band
//! below `ζ_in` is either dropped (when its variance is below the
//! configured tolerance) or replaced by a centered Gaussian with the
//! band's exact covariance.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::levy::LevyModel;
use crate::rng::Stream;

/// Inverse-CDF draw from a density `∝ z^{-1-α}` truncated to `[a, b)`;
/// `b` may be infinite.
fn trunc_pareto(alpha: f64, a: f64, b: f64, u01: f64) -> f64 {
    let pa = a.powf(-alpha);
    let pb = if b.is_infinite() { 0.0 } else { b.powf(-alpha) };
    (pa - u01 * (pa - pb)).powf(-1.0 / alpha)
}

fn poisson_count(lambda: f64, rng: &mut Stream) -> usize {
    if lambda <= 0.0 {
        return 0;
    }
    let p = Poisson::new(lambda).expect("positive finite intensity");
    p.sample(rng) as usize
}

fn sphere_direction(d: usize, rng: &mut Stream) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(d, |_, _| {
            <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
        });
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

enum BandKind {
    Cylindrical {
        cum: Vec<f64>,
        alphas: Vec<f64>,
    },
    Radial {
        alpha: f64,
        dim: usize,
    },
    Curve {
        alpha: f64,
        gamma: f64,
        za: f64,
        zb: f64,
    },
    OneSided {
        alpha: f64,
        hi: f64,
    },
    Discrete {
        atoms: Vec<DVector<f64>>,
        cum: Vec<f64>,
    },
}

/// Draws from the normalized restriction `μ|_{a ≤ |u| < b} / μ(band)`.
pub struct BandSampler {
    a: f64,
    b: f64,
    dim: usize,
    mass: f64,
    kind: BandKind,
}

impl BandSampler {
    pub fn new(model: &LevyModel, a: f64, b: f64) -> Result<Self> {
        let mass = model.band_mass(a, b)?;
        let dim = model.dim();
        let kind = match model {
            LevyModel::CylindricalStable { alpha, scale } => {
                let mut cum = Vec::with_capacity(alpha.len());
                let mut acc = 0.0;
                for (&al, &c) in alpha.iter().zip(scale) {
                    acc += 2.0 * c * super::power_int(-1.0 - al, a, b)?;
                    cum.push(acc);
                }
                BandKind::Cylindrical {
                    cum,
                    alphas: alpha.clone(),
                }
            }
            LevyModel::RadialStable { alpha, dim, .. } => BandKind::Radial {
                alpha: *alpha,
                dim: *dim,
            },
            LevyModel::CurveImage { alpha, gamma } => BandKind::Curve {
                alpha: *alpha,
                gamma: *gamma,
                za: LevyModel::curve_z_star(*gamma, a),
                zb: LevyModel::curve_z_star(*gamma, b),
            },
            LevyModel::OneSidedStable1D { alpha } => BandKind::OneSided {
                alpha: *alpha,
                hi: b.min(1.0),
            },
            LevyModel::Discrete { atoms } => {
                let mut keep = Vec::new();
                let mut cum = Vec::new();
                let mut acc = 0.0;
                for at in atoms {
                    let v = DVector::from_column_slice(&at.u);
                    let n = v.norm();
                    if n >= a && n < b {
                        acc += at.w;
                        keep.push(v);
                        cum.push(acc);
                    }
                }
                BandKind::Discrete { atoms: keep, cum }
            }
        };
        Ok(Self {
            a,
            b,
            dim,
            mass,
            kind,
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn sample(&self, rng: &mut Stream) -> DVector<f64> {
        debug_assert!(self.mass > 0.0, "sampling an empty band");
        match &self.kind {
            BandKind::Cylindrical { cum, alphas } => {
                let total = *cum.last().unwrap();
                let pick = rng.random::<f64>() * total;
                let axis = cum.partition_point(|&c| c <= pick).min(alphas.len() - 1);
                let r = trunc_pareto(alphas[axis], self.a, self.b, rng.random());
                let sign = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
                let mut u = DVector::zeros(self.dim);
                u[axis] = sign * r;
                u
            }
            BandKind::Radial { alpha, dim } => {
                let r = trunc_pareto(*alpha, self.a, self.b, rng.random());
                sphere_direction(*dim, rng) * r
            }
            BandKind::Curve {
                alpha,
                gamma,
                za,
                zb,
            } => {
                let z = trunc_pareto(*alpha, *za, *zb, rng.random());
                let sign = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
                DVector::from_column_slice(&[sign * z, sign * z.powf(*gamma)])
            }
            BandKind::OneSided { alpha, hi } => {
                let z = trunc_pareto(*alpha, self.a, *hi, rng.random());
                DVector::from_element(1, z)
            }
            BandKind::Discrete { atoms, cum } => {
                let total = *cum.last().unwrap();
                let pick = rng.random::<f64>() * total;
                let i = cum.partition_point(|&c| c <= pick).min(atoms.len() - 1);
                atoms[i].clone()
            }
        }
    }
}

/// Atoms of the Poisson measure on `{|u| ≥ η}` over `[0, T]`, sorted by
/// time: count `~ Poisson(T · μ(|u| ≥ η))`, times uniform, amplitudes
/// from the normalized tail restriction.
pub fn sample_large_jumps(
    model: &LevyModel,
    eta: f64,
    t_horizon: f64,
    rng: &mut Stream,
) -> Result<Vec<(f64, DVector<f64>)>> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eta = {eta} must be positive"
        )));
    }
    if !(t_horizon >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon {t_horizon} must be non-negative"
        )));
    }
    let mass = model.tail_mass(eta)?;
    let n = poisson_count(mass * t_horizon, rng);
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut times: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * t_horizon).collect();
    times.sort_by(f64::total_cmp);
    let sampler = BandSampler::new(model, eta, f64::INFINITY)?;
    Ok(times
        .into_iter()
        .map(|t| (t, sampler.sample(rng)))
        .collect())
}

/// Configuration of the small-jump approximation.
#[derive(Debug, Clone, Copy)]
pub struct SmallJumpConfig {
    /// Per-unit-time variance allowed to be dropped below the inner cut.
    pub var_tol: f64,
    /// Cap on the annulus intensity; when the variance rule would exceed
    /// it the cut is raised, which requires the Gaussian fill.
    pub max_rate: f64,
    /// Replace the sub-cut band by a centered Gaussian with its exact
    /// covariance.
    pub gaussian_fill: bool,
    /// Explicit inner cut, overriding the selection rules.
    pub inner_cut: Option<f64>,
}

impl Default for SmallJumpConfig {
    fn default() -> Self {
        Self {
            var_tol: 1e-10,
            max_rate: 1e4,
            gaussian_fill: true,
            inner_cut: None,
        }
    }
}

/// Prepared sampler for one increment of
/// `∫_{ζ_in ≤ |u| < η} u (N(du,ds) − μ(du)ds)` plus the Gaussian band fill.
pub struct SmallJumpSampler {
    eta: f64,
    inner_cut: f64,
    rate: f64,
    annulus_mean: DVector<f64>,
    fill_sqrt: Option<DMatrix<f64>>,
    atoms: Option<BandSampler>,
}

impl SmallJumpSampler {
    pub fn new(model: &LevyModel, eta: f64, cfg: &SmallJumpConfig) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eta = {eta} outside (0, 1]"
            )));
        }
        let inner_cut = match (cfg.inner_cut, model) {
            (Some(z), _) => {
                if !(z >= 0.0 && z <= eta) {
                    return Err(Error::InvalidParameter(format!(
                        "inner cut {z} outside [0, {eta}]"
                    )));
                }
                z
            }
            (None, LevyModel::Discrete { .. }) => 0.0,
            (None, _) => Self::select_inner_cut(model, eta, cfg)?,
        };
        let rate = model.band_mass(inner_cut, eta)?;
        let annulus_mean = model.mean_band(inner_cut, eta)?;
        let band_cov = model.covariance_band(0.0, inner_cut)?;
        let fill_sqrt = if cfg.gaussian_fill && band_cov.trace() > 0.0 {
            // Symmetric square root; covariances here are PSD by
            // construction, eigen keeps this robust near rank deficiency.
            let eig = band_cov.symmetric_eigen();
            let mut vals = eig.eigenvalues.clone();
            for v in vals.iter_mut() {
                *v = v.max(0.0).sqrt();
            }
            Some(&eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose())
        } else {
            None
        };
        let atoms = if rate > 0.0 {
            Some(BandSampler::new(model, inner_cut, eta)?)
        } else {
            None
        };
        Ok(Self {
            eta,
            inner_cut,
            rate,
            annulus_mean,
            fill_sqrt,
            atoms,
        })
    }

    fn select_inner_cut(model: &LevyModel, eta: f64, cfg: &SmallJumpConfig) -> Result<f64> {
        let band_var = |z: f64| -> Result<f64> { Ok(model.covariance_band(0.0, z)?.trace()) };
        let zeta_var = if band_var(eta)? <= cfg.var_tol {
            eta
        } else {
            // Largest cut whose dropped-band variance meets the tolerance.
            let mut lo = 0.0;
            let mut hi = eta;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if band_var(mid)? <= cfg.var_tol {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        let rate_at = |z: f64| -> Result<f64> { model.band_mass(z, eta) };
        if rate_at(zeta_var)? <= cfg.max_rate {
            return Ok(zeta_var);
        }
        if !cfg.gaussian_fill {
            return Err(Error::InvalidParameter(format!(
                "variance tolerance {:e} needs annulus intensity {:e} > max_rate {:e}; \
                 enable the Gaussian fill or raise max_rate",
                cfg.var_tol,
                rate_at(zeta_var)?,
                cfg.max_rate
            )));
        }
        let mut lo = zeta_var.max(f64::MIN_POSITIVE);
        let mut hi = eta;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if rate_at(mid)? > cfg.max_rate {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn inner_cut(&self) -> f64 {
        self.inner_cut
    }

    /// Annulus intensity `μ(ζ_in ≤ |u| < η)`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn annulus_mean(&self) -> &DVector<f64> {
        &self.annulus_mean
    }

    /// One compensated increment over a step of length `dt`.
    pub fn sample_increment(&self, dt: f64, rng: &mut Stream) -> DVector<f64> {
        let d = self.annulus_mean.len();
        if dt == 0.0 {
            return DVector::zeros(d);
        }
        let mut sum = -&self.annulus_mean * dt;
        if let Some(atoms) = &self.atoms {
            for _ in 0..poisson_count(self.rate * dt, rng) {
                sum += atoms.sample(rng);
            }
        }
        sum += self.fill_increment(dt, rng);
        sum
    }

    /// Annulus atoms on `[t0, t1)`, sorted by time.
    pub fn realize_atoms(
        &self,
        t0: f64,
        t1: f64,
        rng: &mut Stream,
    ) -> Vec<(f64, DVector<f64>)> {
        let atoms = match &self.atoms {
            Some(a) => a,
            None => return Vec::new(),
        };
        let n = poisson_count(self.rate * (t1 - t0), rng);
        let mut times: Vec<f64> = (0..n)
            .map(|_| t0 + rng.random::<f64>() * (t1 - t0))
            .collect();
        times.sort_by(f64::total_cmp);
        times
            .into_iter()
            .map(|t| (t, atoms.sample(rng)))
            .collect()
    }

    /// Gaussian band replacement over a step of length `dt` (zero when
    /// the fill is disabled or the band is empty).
    pub fn fill_increment(&self, dt: f64, rng: &mut Stream) -> DVector<f64> {
        let d = self.annulus_mean.len();
        match &self.fill_sqrt {
            None => DVector::zeros(d),
            Some(s) => {
                let z = DVector::from_fn(d, |_, _| {
                    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
                });
                s * z * dt.sqrt()
            }
        }
    }
}

/// One increment of the compensated small-jump integral over `dt`.
pub fn sample_small_jump_increment(
    model: &LevyModel,
    eta: f64,
    dt: f64,
    cfg: &SmallJumpConfig,
    rng: &mut Stream,
) -> Result<DVector<f64>> {
    if !(dt >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step {dt} must be non-negative"
        )));
    }
    let sampler = SmallJumpSampler::new(model, eta, cfg)?;
    Ok(sampler.sample_increment(dt, rng))
}
