//! Simulation and analysis toolkit for SDEs driven by Poisson jump noise.
//!
//! The crate is organised around the objects that appear when one asks
//! "which paths can a jump-noise SDE realise":
//!
//! - [`levy`] — parametric Lévy measures with exact/quadrature moment
//!   queries, integrability-subspace analysis, and jump samplers;
//! - [`sde`] — coefficient sets `c(x,u) = σ(x)u + r(x,u)`, effective
//!   drifts, and Euler-type simulators for the full, truncated, and
//!   tilted equations;
//! - [`skeleton`] — piecewise-constant controls, admissible jumps, and
//!   the deterministic skeleton ODE solver with jump-time perturbation;
//! - [`metric`] — uniform and Skorokhod-style path distances (upper
//!   bounds over a finite family of time changes);
//! - [`tilt`] — constructive intensity perturbations `(1+g)μ` matching a
//!   prescribed compensator target, with Radon–Nikodym bookkeeping;
//! - [`support`] — Monte-Carlo support probes, reachability
//!   certificates, and scaling diagnostics.
//!
//! All samplers take explicit seeded streams and Monte-Carlo drivers use
//! one substream per path, so results are independent of worker count.

// Validation guards are written `!(x > 0.0)` so NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod levy;
pub mod metric;
mod quad;
pub mod rng;
pub mod sde;
pub mod skeleton;
pub mod support;
pub mod tilt;

pub use error::{Error, Result};
