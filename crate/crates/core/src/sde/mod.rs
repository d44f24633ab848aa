//! Coefficient sets `c(x,u) = σ(x)u + r(x,u)` and jump-SDE simulators.

mod path;
mod sim;

pub use path::{CadlagPath, JumpRecord};
pub use sim::{
    euler_simulate, euler_simulate_given_noise, realize_noise, simulate_tilted,
    simulate_tilted_detailed, simulate_truncated, EffectiveDrift, RealizedNoise, SimOptions,
    TiltedRun,
};

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::levy::LevyModel;
use crate::rng;

pub type DriftFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type SigmaFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
pub type RemainderFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;
/// `(x, a, b) ↦ ∫_{a ≤ |u| < b} r(x, u) μ(du)` for a registered remainder.
pub type RemainderMomentFn = Arc<dyn Fn(&DVector<f64>, f64, f64) -> DVector<f64> + Send + Sync>;

/// Drift descriptor `b : R^m → R^m`.
#[derive(Clone)]
pub enum DriftForm {
    /// `b(x) = A x + a`.
    Affine {
        matrix: DMatrix<f64>,
        offset: DVector<f64>,
    },
    Custom(DriftFn),
}

/// Matrix descriptor `σ : R^m → R^{m×d}`, affine per entry.
#[derive(Clone)]
pub enum SigmaForm {
    /// `σ(x) = base + Σ_k x_k linear[k]` (empty `linear` = constant).
    Affine {
        base: DMatrix<f64>,
        linear: Vec<DMatrix<f64>>,
    },
    Custom(SigmaFn),
}

/// Remainder descriptor `r : R^m × R^d → R^m`, negligible against `|u|`
/// for small jumps.
#[derive(Clone)]
pub enum RemainderForm {
    Zero,
    /// `r(x, u) = (c0 + c1·x) |u|^β e` with the shared exponent `β`.
    PowerLaw {
        coeff0: f64,
        coeff1: DVector<f64>,
        direction: DVector<f64>,
    },
    /// Registered evaluator; the caller must also supply its band
    /// moments, which the effective-drift assembly needs.
    Custom {
        eval: RemainderFn,
        band_moment: RemainderMomentFn,
    },
}

/// Coefficients of the SDE together with the regularity constants they
/// are declared to satisfy.
#[derive(Clone)]
pub struct CoefficientSet {
    pub state_dim: usize,
    pub noise_dim: usize,
    pub drift: DriftForm,
    pub sigma: SigmaForm,
    pub remainder: RemainderForm,
    /// Remainder exponent; must exceed every stability index of the
    /// paired Lévy model.
    pub beta: f64,
    /// Declared Lipschitz constant of `b`.
    pub lip_b: f64,
    /// Declared Lipschitz constant of `σ` (Frobenius norm).
    pub lip_sigma: f64,
    /// Declared remainder constant: `|r(x,u)−r(y,u)| ≤ C|x−y||u|^β` and
    /// `|r(x_anchor,u)| ≤ C|u|^β`.
    pub c_h2: f64,
    pub x_anchor: DVector<f64>,
}

impl fmt::Debug for CoefficientSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSet")
            .field("state_dim", &self.state_dim)
            .field("noise_dim", &self.noise_dim)
            .field("beta", &self.beta)
            .finish_non_exhaustive()
    }
}

impl CoefficientSet {
    pub fn new(
        state_dim: usize,
        noise_dim: usize,
        drift: DriftForm,
        sigma: SigmaForm,
        remainder: RemainderForm,
        beta: f64,
    ) -> Result<Self> {
        let mut cs = Self {
            state_dim,
            noise_dim,
            drift,
            sigma,
            remainder,
            beta,
            lip_b: 0.0,
            lip_sigma: 0.0,
            c_h2: 0.0,
            x_anchor: DVector::zeros(state_dim),
        };
        cs.lip_b = cs.default_lip_b();
        cs.lip_sigma = cs.default_lip_sigma();
        cs.c_h2 = cs.default_c_h2();
        cs.check_shapes()?;
        Ok(cs)
    }

    /// `m = d`, `b ≡ 0`, `σ = I`, `r ≡ 0`: the additive case `c(x,u) = u`.
    pub fn additive(dim: usize, beta: f64) -> Self {
        Self::new(
            dim,
            dim,
            DriftForm::Affine {
                matrix: DMatrix::zeros(dim, dim),
                offset: DVector::zeros(dim),
            },
            SigmaForm::Affine {
                base: DMatrix::identity(dim, dim),
                linear: Vec::new(),
            },
            RemainderForm::Zero,
            beta,
        )
        .expect("additive coefficients are well-formed")
    }

    /// Additive noise with affine drift `b(x) = A x + a`.
    pub fn linear_drift(matrix: DMatrix<f64>, offset: DVector<f64>, beta: f64) -> Result<Self> {
        let m = matrix.nrows();
        Self::new(
            m,
            m,
            DriftForm::Affine { matrix, offset },
            SigmaForm::Affine {
                base: DMatrix::identity(m, m),
                linear: Vec::new(),
            },
            RemainderForm::Zero,
            beta,
        )
    }

    fn check_shapes(&self) -> Result<()> {
        let (m, d) = (self.state_dim, self.noise_dim);
        if m == 0 || d == 0 {
            return Err(Error::InvalidParameter("zero dimension".into()));
        }
        if !(self.beta > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "remainder exponent beta = {} must exceed 1",
                self.beta
            )));
        }
        if let DriftForm::Affine { matrix, offset } = &self.drift {
            if matrix.nrows() != m || matrix.ncols() != m || offset.len() != m {
                return Err(Error::InvalidParameter("drift shape mismatch".into()));
            }
        }
        if let SigmaForm::Affine { base, linear } = &self.sigma {
            if base.nrows() != m || base.ncols() != d {
                return Err(Error::InvalidParameter("sigma shape mismatch".into()));
            }
            if !linear.is_empty() && linear.len() != m {
                return Err(Error::InvalidParameter(
                    "sigma linear part needs one matrix per state coordinate".into(),
                ));
            }
            for s in linear {
                if s.nrows() != m || s.ncols() != d {
                    return Err(Error::InvalidParameter("sigma shape mismatch".into()));
                }
            }
        }
        if let RemainderForm::PowerLaw {
            coeff1, direction, ..
        } = &self.remainder
        {
            if coeff1.len() != m || direction.len() != m {
                return Err(Error::InvalidParameter("remainder shape mismatch".into()));
            }
        }
        Ok(())
    }

    fn default_lip_b(&self) -> f64 {
        match &self.drift {
            DriftForm::Affine { matrix, .. } => matrix.norm(),
            DriftForm::Custom(_) => f64::INFINITY,
        }
    }

    fn default_lip_sigma(&self) -> f64 {
        match &self.sigma {
            SigmaForm::Affine { linear, .. } => {
                linear.iter().map(|s| s.norm_squared()).sum::<f64>().sqrt()
            }
            SigmaForm::Custom(_) => f64::INFINITY,
        }
    }

    fn default_c_h2(&self) -> f64 {
        match &self.remainder {
            RemainderForm::Zero => 0.0,
            RemainderForm::PowerLaw {
                coeff0,
                coeff1,
                direction,
            } => {
                let at_anchor = (coeff0 + coeff1.dot(&self.x_anchor)).abs();
                direction.norm() * coeff1.norm().max(at_anchor).max(1e-300)
            }
            RemainderForm::Custom { .. } => f64::INFINITY,
        }
    }

    pub fn drift(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.drift {
            DriftForm::Affine { matrix, offset } => matrix * x + offset,
            DriftForm::Custom(f) => f(x),
        }
    }

    pub fn sigma(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match &self.sigma {
            SigmaForm::Affine { base, linear } => {
                let mut s = base.clone();
                for (k, sk) in linear.iter().enumerate() {
                    s += sk * x[k];
                }
                s
            }
            SigmaForm::Custom(f) => f(x),
        }
    }

    pub fn remainder(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        match &self.remainder {
            RemainderForm::Zero => DVector::zeros(self.state_dim),
            RemainderForm::PowerLaw {
                coeff0,
                coeff1,
                direction,
            } => direction * ((coeff0 + coeff1.dot(x)) * u.norm().powf(self.beta)),
            RemainderForm::Custom { eval, .. } => eval(x, u),
        }
    }

    /// Jump map `c(x, u) = σ(x) u + r(x, u)`.
    pub fn jump_map(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        self.sigma(x) * u + self.remainder(x, u)
    }

    /// `∫_{a ≤ |u| < b} r(x, u) μ(du)`.
    pub fn remainder_band_moment(
        &self,
        model: &LevyModel,
        x: &DVector<f64>,
        a: f64,
        b: f64,
    ) -> Result<DVector<f64>> {
        match &self.remainder {
            RemainderForm::Zero => Ok(DVector::zeros(self.state_dim)),
            RemainderForm::PowerLaw {
                coeff0,
                coeff1,
                direction,
            } => {
                let moment = model.beta_moment_band(self.beta, a, b)?;
                Ok(direction * ((coeff0 + coeff1.dot(x)) * moment))
            }
            RemainderForm::Custom { band_moment, .. } => Ok(band_moment(x, a, b)),
        }
    }

    /// Compatibility with a Lévy model: dimensions and the finiteness of
    /// the `β` moment.
    pub fn validate_against_model(&self, model: &LevyModel) -> Result<()> {
        if model.dim() != self.noise_dim {
            return Err(Error::DimensionMismatch {
                expected: self.noise_dim,
                got: model.dim(),
            });
        }
        if self.beta <= model.max_stability_index() {
            return Err(Error::InvalidParameter(format!(
                "beta = {} must strictly exceed the largest stability index {}",
                self.beta,
                model.max_stability_index()
            )));
        }
        model.beta_moment(self.beta).map(|_| ())
    }

    /// Sampled check of the declared Lipschitz and remainder constants on
    /// a box `[-half, half]^m` (jump arguments on the unit ball). Uses a
    /// fixed internal stream so the check is deterministic.
    pub fn validate_regularity(&self, box_half: f64, n_samples: usize) -> Result<()> {
        let slack = 1.0 + 1e-6;
        let mut stream = rng::substream(0xC0FF_EE00, 0);
        let m = self.state_dim;
        let d = self.noise_dim;
        let mut point = |dim: usize, scale: f64| {
            DVector::from_fn(dim, |_, _| (stream.random::<f64>() * 2.0 - 1.0) * scale)
        };
        for _ in 0..n_samples {
            let x = point(m, box_half);
            let y = point(m, box_half);
            let dxy = (&x - &y).norm();
            if dxy == 0.0 {
                continue;
            }
            let qb = (self.drift(&x) - self.drift(&y)).norm() / dxy;
            if qb > self.lip_b * slack {
                return Err(Error::InvalidParameter(format!(
                    "drift Lipschitz quotient {qb} exceeds declared {}",
                    self.lip_b
                )));
            }
            let qs = (self.sigma(&x) - self.sigma(&y)).norm() / dxy;
            if qs > self.lip_sigma * slack {
                return Err(Error::InvalidParameter(format!(
                    "sigma Lipschitz quotient {qs} exceeds declared {}",
                    self.lip_sigma
                )));
            }
            let u = point(d, 1.0);
            let ub = u.norm().powf(self.beta);
            if ub > 0.0 {
                let qr = (self.remainder(&x, &u) - self.remainder(&y, &u)).norm() / (dxy * ub);
                let qr0 = self.remainder(&self.x_anchor, &u).norm() / ub;
                if qr > self.c_h2 * slack + 1e-300 || qr0 > self.c_h2 * slack + 1e-300 {
                    return Err(Error::InvalidParameter(format!(
                        "remainder constant violated: quotients {qr}, {qr0} vs declared {}",
                        self.c_h2
                    )));
                }
            }
        }
        Ok(())
    }
}
