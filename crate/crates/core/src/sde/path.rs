//! Càdlàg paths on a finite grid with an explicit jump list.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// One recorded discontinuity. `post` equals the grid value at `time`;
/// `amplitude` is the driving jump `ξ` when the discontinuity came from
/// a jump map `x ↦ x + c(x, ξ)`.
#[derive(Debug, Clone)]
pub struct JumpRecord {
    pub time: f64,
    pub pre: DVector<f64>,
    pub post: DVector<f64>,
    pub amplitude: Option<DVector<f64>>,
}

/// Right-continuous path: values at strictly increasing grid times,
/// piecewise linear between nodes, discontinuous exactly at the recorded
/// jump times.
#[derive(Debug, Clone)]
pub struct CadlagPath {
    times: Vec<f64>,
    values: Vec<DVector<f64>>,
    jumps: Vec<JumpRecord>,
    // index into `jumps` per grid node, populated at construction
    jump_at: Vec<Option<usize>>,
}

impl CadlagPath {
    pub fn new(times: Vec<f64>, values: Vec<DVector<f64>>, jumps: Vec<JumpRecord>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "grid with {} times and {} values",
                times.len(),
                values.len()
            )));
        }
        let dim = values[0].len();
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidParameter(format!(
                    "grid times not strictly increasing at {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        for v in &values {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            if !v.iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidParameter("non-finite path value".into()));
            }
        }
        let mut jump_at = vec![None; times.len()];
        let mut last_t = f64::NEG_INFINITY;
        for (k, j) in jumps.iter().enumerate() {
            if !(j.time > last_t) {
                return Err(Error::InvalidParameter(
                    "jump times not strictly increasing".into(),
                ));
            }
            last_t = j.time;
            let i = times
                .binary_search_by(|t| t.total_cmp(&j.time))
                .map_err(|_| {
                    Error::InvalidParameter(format!("jump time {} not on the grid", j.time))
                })?;
            if values[i] != j.post {
                return Err(Error::InvalidParameter(format!(
                    "jump at t = {} inconsistent with grid value",
                    j.time
                )));
            }
            jump_at[i] = Some(k);
        }
        Ok(Self {
            times,
            values,
            jumps,
            jump_at,
        })
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn jumps(&self) -> &[JumpRecord] {
        &self.jumps
    }

    pub fn final_value(&self) -> &DVector<f64> {
        self.values.last().unwrap()
    }

    /// Left limit of the value at grid index `i`.
    fn left_at_index(&self, i: usize) -> &DVector<f64> {
        match self.jump_at[i] {
            Some(k) => &self.jumps[k].pre,
            None => &self.values[i],
        }
    }

    /// Value at `t` (right-continuous); `t` is clamped to the grid span.
    pub fn eval(&self, t: f64) -> DVector<f64> {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0].clone();
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1].clone();
        }
        match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => self.values[i].clone(),
            Err(i) => {
                // t lies strictly inside (times[i-1], times[i]).
                let (t0, t1) = (self.times[i - 1], self.times[i]);
                let w = (t - t0) / (t1 - t0);
                let left_end = self.left_at_index(i);
                &self.values[i - 1] * (1.0 - w) + left_end * w
            }
        }
    }

    /// Left limit at `t`.
    pub fn eval_left(&self, t: f64) -> DVector<f64> {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0].clone();
        }
        if t > self.times[n - 1] {
            return self.values[n - 1].clone();
        }
        match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => self.left_at_index(i).clone(),
            Err(_) => self.eval(t),
        }
    }

    /// CSV export: `t,x_1..x_m,is_jump`, one row per grid node.
    pub fn to_csv(&self) -> String {
        let m = self.dim();
        let mut out = String::from("t");
        for i in 1..=m {
            out.push_str(&format!(",x_{i}"));
        }
        out.push_str(",is_jump\n");
        for (i, (t, v)) in self.times.iter().zip(&self.values).enumerate() {
            out.push_str(&format!("{t}"));
            for x in v.iter() {
                out.push_str(&format!(",{x}"));
            }
            out.push_str(if self.jump_at[i].is_some() { ",1\n" } else { ",0\n" });
        }
        out
    }
}
