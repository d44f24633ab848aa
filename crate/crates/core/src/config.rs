//! Serializable mirrors of the coefficient and skeleton descriptions.
//!
//! [`crate::levy::LevyModel`] serializes directly; coefficient sets and
//! skeleton specs go through plain data structs here because the runtime
//! types may carry registered closures, which have no serialized form.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::IntegrabilitySubspace;
use crate::sde::{CoefficientSet, DriftForm, RemainderForm, SigmaForm};
use crate::skeleton::{ControlFunction, JumpMode, JumpPlan, SolveOptions};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSpec {
    Zero,
    Affine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaSpec {
    Zero,
    Identity,
    Constant {
        matrix: Vec<Vec<f64>>,
    },
    Affine {
        base: Vec<Vec<f64>>,
        /// One `m×d` matrix per state coordinate.
        linear: Vec<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RemainderSpec {
    Zero,
    PowerLaw {
        coeff0: f64,
        coeff1: Vec<f64>,
        direction: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub state_dim: usize,
    pub noise_dim: usize,
    pub beta: f64,
    pub drift: DriftSpec,
    pub sigma: SigmaSpec,
    #[serde(default = "RemainderSpec::zero")]
    pub remainder: RemainderSpec,
    #[serde(default)]
    pub x_anchor: Option<Vec<f64>>,
    #[serde(default)]
    pub lip_b: Option<f64>,
    #[serde(default)]
    pub lip_sigma: Option<f64>,
    #[serde(default)]
    pub c_h2: Option<f64>,
}

impl RemainderSpec {
    fn zero() -> Self {
        RemainderSpec::Zero
    }
}

fn to_matrix(rows: &[Vec<f64>], nrows: usize, ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Config(format!(
            "{what}: expected a {nrows}x{ncols} matrix"
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl CoefficientSpec {
    pub fn build(&self) -> Result<CoefficientSet> {
        let (m, d) = (self.state_dim, self.noise_dim);
        let drift = match &self.drift {
            DriftSpec::Zero => DriftForm::Affine {
                matrix: DMatrix::zeros(m, m),
                offset: DVector::zeros(m),
            },
            DriftSpec::Affine { matrix, offset } => {
                if offset.len() != m {
                    return Err(Error::Config("drift offset length".into()));
                }
                DriftForm::Affine {
                    matrix: to_matrix(matrix, m, m, "drift matrix")?,
                    offset: DVector::from_column_slice(offset),
                }
            }
        };
        let sigma = match &self.sigma {
            SigmaSpec::Zero => SigmaForm::Affine {
                base: DMatrix::zeros(m, d),
                linear: Vec::new(),
            },
            SigmaSpec::Identity => {
                if m != d {
                    return Err(Error::Config("identity sigma needs m = d".into()));
                }
                SigmaForm::Affine {
                    base: DMatrix::identity(m, d),
                    linear: Vec::new(),
                }
            }
            SigmaSpec::Constant { matrix } => SigmaForm::Affine {
                base: to_matrix(matrix, m, d, "sigma matrix")?,
                linear: Vec::new(),
            },
            SigmaSpec::Affine { base, linear } => SigmaForm::Affine {
                base: to_matrix(base, m, d, "sigma base")?,
                linear: linear
                    .iter()
                    .map(|rows| to_matrix(rows, m, d, "sigma linear part"))
                    .collect::<Result<Vec<_>>>()?,
            },
        };
        let remainder = match &self.remainder {
            RemainderSpec::Zero => RemainderForm::Zero,
            RemainderSpec::PowerLaw {
                coeff0,
                coeff1,
                direction,
            } => RemainderForm::PowerLaw {
                coeff0: *coeff0,
                coeff1: DVector::from_column_slice(coeff1),
                direction: DVector::from_column_slice(direction),
            },
        };
        let mut cs = CoefficientSet::new(m, d, drift, sigma, remainder, self.beta)?;
        if let Some(x0) = &self.x_anchor {
            cs.x_anchor = DVector::from_column_slice(x0);
        }
        if let Some(l) = self.lip_b {
            cs.lip_b = l;
        }
        if let Some(l) = self.lip_sigma {
            cs.lip_sigma = l;
        }
        if let Some(c) = self.c_h2 {
            cs.c_h2 = c;
        }
        Ok(cs)
    }
}

impl CoefficientSet {
    /// Serializable form; registered closures have none.
    pub fn to_spec(&self) -> Result<CoefficientSpec> {
        let drift = match &self.drift {
            DriftForm::Affine { matrix, offset } => DriftSpec::Affine {
                matrix: matrix_rows(matrix),
                offset: offset.iter().cloned().collect(),
            },
            DriftForm::Custom(_) => {
                return Err(Error::NotSerializable("registered drift evaluator".into()))
            }
        };
        let sigma = match &self.sigma {
            SigmaForm::Affine { base, linear } if linear.is_empty() => SigmaSpec::Constant {
                matrix: matrix_rows(base),
            },
            SigmaForm::Affine { base, linear } => SigmaSpec::Affine {
                base: matrix_rows(base),
                linear: linear.iter().map(matrix_rows).collect(),
            },
            SigmaForm::Custom(_) => {
                return Err(Error::NotSerializable("registered sigma evaluator".into()))
            }
        };
        let remainder = match &self.remainder {
            RemainderForm::Zero => RemainderSpec::Zero,
            RemainderForm::PowerLaw {
                coeff0,
                coeff1,
                direction,
            } => RemainderSpec::PowerLaw {
                coeff0: *coeff0,
                coeff1: coeff1.iter().cloned().collect(),
                direction: direction.iter().cloned().collect(),
            },
            RemainderForm::Custom { .. } => {
                return Err(Error::NotSerializable(
                    "registered remainder evaluator".into(),
                ))
            }
        };
        Ok(CoefficientSpec {
            state_dim: self.state_dim,
            noise_dim: self.noise_dim,
            beta: self.beta,
            drift,
            sigma,
            remainder,
            x_anchor: Some(self.x_anchor.iter().cloned().collect()),
            lip_b: Some(self.lip_b),
            lip_sigma: Some(self.lip_sigma),
            c_h2: Some(self.c_h2),
        })
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ControlSpec {
    pub breakpoints: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JumpSpec {
    pub time: f64,
    #[serde(default)]
    pub amplitude: Option<Vec<f64>>,
    #[serde(default)]
    pub target: Option<Vec<f64>>,
}

/// Control plus jump plan, solvable into a skeleton path.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SkeletonSpec {
    pub x0: Vec<f64>,
    pub t_horizon: f64,
    #[serde(default)]
    pub control: Option<ControlSpec>,
    #[serde(default)]
    pub jumps: Vec<JumpSpec>,
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_step() -> f64 {
    1e-3
}

impl SkeletonSpec {
    pub fn control_function(&self, subspace: &IntegrabilitySubspace) -> Result<ControlFunction> {
        match &self.control {
            None => Ok(ControlFunction::zero(subspace.dim_ambient())),
            Some(c) => ControlFunction::new(
                c.breakpoints.clone(),
                c.values
                    .iter()
                    .map(|v| DVector::from_column_slice(v))
                    .collect(),
                subspace,
            ),
        }
    }

    pub fn jump_plan(&self) -> Result<JumpPlan> {
        let mut items = Vec::with_capacity(self.jumps.len());
        for j in &self.jumps {
            let mode = match (&j.amplitude, &j.target) {
                (Some(u), None) => JumpMode::Amplitude(DVector::from_column_slice(u)),
                (None, Some(y)) => JumpMode::Target(DVector::from_column_slice(y)),
                _ => {
                    return Err(Error::Config(
                        "each jump needs exactly one of amplitude/target".into(),
                    ))
                }
            };
            items.push((j.time, mode));
        }
        Ok(JumpPlan { items })
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            step: self.step,
            ..SolveOptions::default()
        }
    }
}
