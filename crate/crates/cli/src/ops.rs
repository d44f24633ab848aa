//! Subcommand implementations. Each writes CSV artifacts into the output
//! directory and returns lines for the console summary.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Deserialize;

use jump_support::levy::SmallJumpConfig;
use jump_support::metric::{skorokhod_distance_upper, uniform_distance, SkorokhodOptions};
use jump_support::rng::substream;
use jump_support::sde::{euler_simulate, simulate_tilted_detailed, SimOptions};
use jump_support::skeleton::{solve_skeleton, SkeletonPath};
use jump_support::support::{
    check_scaling_condition, direction_grid, forward_inclusion_check, mc_support_probability,
    reach_cone, reach_control, ConeOptions, McOptions, ReachRoute, ScalingOptions,
};
use jump_support::tilt::{control_to_tilt, TiltShape};

use crate::config::ExperimentConfig;
use crate::RunError;

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), RunError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| RunError::Config(format!("cannot create {}: {e}", dir.display())))?;
    std::fs::write(dir.join(name), contents)
        .map_err(|e| RunError::Config(format!("cannot write {name}: {e}")))
}

fn vec_from(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

fn sim_options(max_rate: f64, gaussian_fill: bool) -> SimOptions {
    SimOptions {
        small_jump: SmallJumpConfig {
            max_rate,
            gaussian_fill,
            ..SmallJumpConfig::default()
        },
        ..SimOptions::default()
    }
}

/// Solve the config's skeleton section against its model/coefficients.
fn solve_config_skeleton(cfg: &ExperimentConfig) -> Result<SkeletonPath, RunError> {
    let spec = cfg.skeleton_spec()?;
    let model = cfg.model()?;
    let coeffs = cfg.coefficients()?;
    let subspace = model
        .integrability_subspace()
        .map_err(|e| RunError::Config(format!("model: {e}")))?;
    let control = spec
        .control_function(&subspace)
        .map_err(|e| RunError::Config(format!("skeleton control: {e}")))?;
    let plan = spec
        .jump_plan()
        .map_err(|e| RunError::Config(format!("skeleton jumps: {e}")))?;
    let drift = jump_support::sde::EffectiveDrift::new(&coeffs, model)?;
    Ok(solve_skeleton(
        &vec_from(&spec.x0),
        &drift,
        &coeffs,
        model,
        &control,
        &plan,
        spec.t_horizon,
        &spec.solve_options(),
    )?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct AnalyzeParams {
    eta: f64,
    beta: Option<f64>,
    scaling_eps: Option<Vec<f64>>,
    scaling_directions: usize,
}

impl Default for AnalyzeParams {
    fn default() -> Self {
        Self {
            eta: 0.1,
            beta: None,
            scaling_eps: None,
            scaling_directions: 16,
        }
    }
}

pub fn analyze_levy(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<String>, RunError> {
    let p: AnalyzeParams = cfg.typed_params()?;
    let model = cfg.model()?;
    let sub = model.integrability_subspace()?;
    let mut csv = String::from("quantity,component,value\n");
    let _ = writeln!(csv, "dim_l,,{}", sub.dim_l());
    let _ = writeln!(csv, "dim_l_perp,,{}", sub.dim_l_perp());
    for (j, b) in sub.basis_l().iter().enumerate() {
        for (i, x) in b.iter().enumerate() {
            let _ = writeln!(csv, "basis_l_{j},{},{x}", i + 1);
        }
    }
    let ups = model.upsilon_eta(p.eta)?;
    for (i, x) in ups.iter().enumerate() {
        let _ = writeln!(csv, "upsilon_eta,{},{x}", i + 1);
    }
    let _ = writeln!(csv, "tail_mass,,{}", model.tail_mass(p.eta)?);
    if let Some(beta) = p.beta {
        let _ = writeln!(csv, "beta_moment,,{}", model.beta_moment(beta)?);
    }
    let mut lines = vec![format!(
        "dim L = {}, dim L^perp = {}",
        sub.dim_l(),
        sub.dim_l_perp()
    )];
    if let Some(eps) = &p.scaling_eps {
        let report = check_scaling_condition(
            model,
            eps,
            &direction_grid(model.dim(), p.scaling_directions),
            &ScalingOptions::default(),
        )?;
        for f in &report.fits {
            let dir = f
                .direction
                .iter()
                .map(|x| format!("{x:.4}"))
                .collect::<Vec<_>>()
                .join(" ");
            let _ = writeln!(csv, "scaling_implied_alpha,{dir},{}", f.implied_alpha);
        }
        let _ = writeln!(csv, "scaling_holds,,{}", report.holds);
        lines.push(format!("scaling condition holds: {}", report.holds));
    }
    write_file(out, "analysis.csv", &csv)?;
    Ok(lines)
}

pub fn skeleton(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<String>, RunError> {
    let skel = solve_config_skeleton(cfg)?;
    write_file(out, "path.csv", &skel.path.to_csv())?;
    Ok(vec![format!(
        "skeleton solved: {} grid points, {} jumps, terminal {:?}",
        skel.path.times().len(),
        skel.path.jumps().len(),
        skel.path.final_value().as_slice()
    )])
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateParams {
    t_horizon: f64,
    x0: Vec<f64>,
    eta: f64,
    #[serde(default = "default_n_paths")]
    n_paths: usize,
    #[serde(default = "default_n_steps")]
    n_steps: usize,
    #[serde(default = "default_max_rate")]
    max_rate: f64,
    #[serde(default = "default_true")]
    gaussian_fill: bool,
}

fn default_n_paths() -> usize {
    1
}
fn default_n_steps() -> usize {
    256
}
fn default_max_rate() -> f64 {
    1e4
}
fn default_true() -> bool {
    true
}

pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<String>, RunError> {
    let p: SimulateParams = cfg.typed_params()?;
    let model = cfg.model()?;
    let coeffs = cfg.coefficients()?;
    let opts = sim_options(p.max_rate, p.gaussian_fill);
    let x0 = vec_from(&p.x0);
    let seed = cfg.seed();
    let paths: Result<Vec<_>, jump_support::Error> = (0..p.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            euler_simulate(
                &coeffs,
                model,
                &x0,
                p.t_horizon,
                p.n_steps,
                p.eta,
                &opts,
                &mut rng,
            )
        })
        .collect();
    let paths = paths?;
    let m = coeffs.state_dim;
    let mut csv = String::from("path_id,t");
    for i in 1..=m {
        let _ = write!(csv, ",x_{i}");
    }
    csv.push_str(",is_jump\n");
    for (id, path) in paths.iter().enumerate() {
        for line in path.to_csv().lines().skip(1) {
            let _ = writeln!(csv, "{id},{line}");
        }
    }
    write_file(out, "paths.csv", &csv)?;
    Ok(vec![format!("{} paths simulated", paths.len())])
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SupportParams {
    epsilon: f64,
    n_samples: usize,
    eta: f64,
    #[serde(default = "default_n_steps")]
    n_steps: usize,
    #[serde(default = "default_support_rate")]
    max_rate: f64,
    #[serde(default = "default_id")]
    skeleton_id: String,
}

fn default_support_rate() -> f64 {
    2000.0
}
fn default_id() -> String {
    "skeleton".into()
}

pub fn support_check(
    cfg: &ExperimentConfig,
    out: &Path,
    expect_positive: bool,
) -> Result<Vec<String>, RunError> {
    let p: SupportParams = cfg.typed_params()?;
    let skel = solve_config_skeleton(cfg)?;
    let model = cfg.model()?;
    let coeffs = cfg.coefficients()?;
    let opts = McOptions {
        n_steps: p.n_steps,
        sim: sim_options(p.max_rate, true),
        skorokhod: SkorokhodOptions::default(),
    };
    let report = mc_support_probability(
        &coeffs,
        model,
        &skel,
        p.epsilon,
        p.n_samples,
        p.eta,
        &opts,
        cfg.seed(),
        &p.skeleton_id,
    )?;
    let mut csv =
        String::from("skeleton_id,epsilon,n_samples,hits,estimate,ci_low,ci_high,positive,seed\n");
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{},{}",
        report.skeleton_id,
        report.epsilon,
        report.n_samples,
        report.hits,
        report.estimate,
        report.ci_low,
        report.ci_high,
        report.positive,
        report.seed
    );
    write_file(out, "report.csv", &csv)?;
    let line = format!(
        "support check '{}': {}/{} hits, estimate {:.5}, positive: {}",
        report.skeleton_id, report.hits, report.n_samples, report.estimate, report.positive
    );
    if expect_positive && !report.positive {
        return Err(RunError::Negative(line));
    }
    Ok(vec![line])
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InclusionParams {
    eta: f64,
    n_paths: usize,
    tol: f64,
    t_horizon: f64,
    x0: Vec<f64>,
    #[serde(default = "default_n_steps")]
    n_steps: usize,
    #[serde(default = "default_support_rate")]
    max_rate: f64,
    #[serde(default = "default_min_pass")]
    min_pass_rate: f64,
}

fn default_min_pass() -> f64 {
    0.9
}

pub fn inclusion_check(
    cfg: &ExperimentConfig,
    out: &Path,
    expect_positive: bool,
) -> Result<Vec<String>, RunError> {
    let p: InclusionParams = cfg.typed_params()?;
    let model = cfg.model()?;
    let coeffs = cfg.coefficients()?;
    let opts = McOptions {
        n_steps: p.n_steps,
        sim: sim_options(p.max_rate, true),
        skorokhod: SkorokhodOptions::default(),
    };
    let report = forward_inclusion_check(
        &coeffs,
        model,
        &vec_from(&p.x0),
        p.t_horizon,
        p.eta,
        p.n_paths,
        p.tol,
        &opts,
        cfg.seed(),
    )?;
    let mut csv = String::from("n_paths,pass_rate,median_max_deviation,tol,seed\n");
    let _ = writeln!(
        csv,
        "{},{},{},{},{}",
        report.n_paths, report.pass_rate, report.median_max_deviation, p.tol, report.seed
    );
    write_file(out, "report.csv", &csv)?;
    let line = format!(
        "inclusion check: pass rate {} over {} paths (tol {})",
        report.pass_rate, report.n_paths, p.tol
    );
    if expect_positive && report.pass_rate < p.min_pass_rate {
        return Err(RunError::Negative(line));
    }
    Ok(vec![line])
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TiltParams {
    eta: f64,
    #[serde(default = "default_tilt_samples")]
    n_samples: usize,
    #[serde(default = "default_tilt_steps")]
    n_steps: usize,
    #[serde(default = "default_support_rate")]
    max_rate: f64,
}

fn default_tilt_samples() -> usize {
    10_000
}
fn default_tilt_steps() -> usize {
    50
}

pub fn tilt_check(
    cfg: &ExperimentConfig,
    out: &Path,
    expect_positive: bool,
) -> Result<Vec<String>, RunError> {
    let p: TiltParams = cfg.typed_params()?;
    let spec = cfg.skeleton_spec()?;
    let model = cfg.model()?;
    let coeffs = cfg.coefficients()?;
    let sub = model.integrability_subspace()?;
    let control = spec
        .control_function(&sub)
        .map_err(|e| RunError::Config(format!("skeleton control: {e}")))?;
    let g = control_to_tilt(&control, model, p.eta, spec.t_horizon)?;

    let mut tilt_csv = String::from("piece,t_start,zeta,eta,mu_g_rate,shape\n");
    for (i, piece) in g.pieces().iter().enumerate() {
        let shape = match &piece.shape {
            TiltShape::SignBasis { coeffs, .. } => format!("sign_basis {coeffs:?}"),
            TiltShape::CurveSplitSign { coeffs, .. } => format!("curve_split {coeffs:?}"),
        };
        let _ = writeln!(
            tilt_csv,
            "{i},{},{},{},{},{shape}",
            piece.t_start, piece.zeta, piece.eta, piece.mu_g_rate
        );
    }
    write_file(out, "tilt.csv", &tilt_csv)?;

    let x0 = vec_from(&spec.x0);
    let opts = sim_options(p.max_rate, true);
    let seed = cfg.seed();
    let weights: Result<Vec<f64>, jump_support::Error> = (0..p.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let run = simulate_tilted_detailed(
                &coeffs,
                model,
                &x0,
                0.0,
                spec.t_horizon,
                p.n_steps,
                p.eta,
                &g,
                &opts,
                &mut rng,
            )?;
            Ok(run.log_density.exp())
        })
        .collect();
    let weights = weights?;
    let n = weights.len() as f64;
    let mean = weights.iter().sum::<f64>() / n;
    let var = weights.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let within = (mean - 1.0).abs() <= 3.0 * se;
    let mut csv = String::from("n_samples,mean,stderr,within_3se,seed\n");
    let _ = writeln!(csv, "{},{},{},{},{}", weights.len(), mean, se, within, seed);
    write_file(out, "martingale.csv", &csv)?;
    let line = format!(
        "tilt martingale: E[exp(logE)] = {mean:.5} ± {se:.5} over {} runs (within 3se: {within})",
        weights.len()
    );
    if expect_positive && !within {
        return Err(RunError::Negative(line));
    }
    Ok(vec![line])
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReachParams {
    route: String,
    x: Vec<f64>,
    y: Vec<f64>,
    t_horizon: f64,
    #[serde(default = "default_eps")]
    epsilon: f64,
    #[serde(default = "default_theta")]
    theta: f64,
    #[serde(default = "default_pieces")]
    n_pieces: usize,
}

fn default_eps() -> f64 {
    0.05
}
fn default_theta() -> f64 {
    0.5
}
fn default_pieces() -> usize {
    64
}

pub fn reach(
    cfg: &ExperimentConfig,
    out: &Path,
    expect_positive: bool,
) -> Result<Vec<String>, RunError> {
    let p: ReachParams = cfg.typed_params()?;
    let model = cfg.model()?;
    let coeffs = cfg.coefficients()?;
    let cert = match p.route.as_str() {
        "cone" => reach_cone(
            model,
            &coeffs,
            &vec_from(&p.x),
            &vec_from(&p.y),
            p.t_horizon,
            p.epsilon,
            p.theta,
            &ConeOptions::default(),
        )?,
        "control" => {
            let sub = model.integrability_subspace()?;
            reach_control(
                &coeffs,
                model,
                &sub,
                &vec_from(&p.x),
                &vec_from(&p.y),
                p.t_horizon,
                p.n_pieces,
                &jump_support::skeleton::SolveOptions::default(),
            )?
        }
        other => {
            return Err(RunError::Config(format!(
                "unknown reach route '{other}' (cone|control)"
            )))
        }
    };
    let mut csv = String::new();
    match &cert.route {
        ReachRoute::JumpPlan(items) => {
            csv.push('t');
            for i in 1..=coeffs.noise_dim {
                let _ = write!(csv, ",u_{i}");
            }
            csv.push('\n');
            for (t, u) in items {
                let _ = write!(csv, "{t}");
                for x in u.iter() {
                    let _ = write!(csv, ",{x}");
                }
                csv.push('\n');
            }
        }
        ReachRoute::Control(f) => {
            csv.push('t');
            for i in 1..=coeffs.noise_dim {
                let _ = write!(csv, ",f_{i}");
            }
            csv.push('\n');
            for (t, val) in f.breakpoints().iter().zip(f.values()) {
                let _ = write!(csv, "{t}");
                for x in val.iter() {
                    let _ = write!(csv, ",{x}");
                }
                csv.push('\n');
            }
        }
    }
    write_file(out, "certificate.csv", &csv)?;
    let mut summary = String::from("route,terminal_error,epsilon\n");
    let _ = writeln!(summary, "{},{},{}", p.route, cert.terminal_error, p.epsilon);
    write_file(out, "summary.csv", &summary)?;
    let line = format!(
        "{} certificate: terminal error {:.3e} (epsilon {})",
        p.route, cert.terminal_error, p.epsilon
    );
    if expect_positive && cert.terminal_error > p.epsilon {
        return Err(RunError::Negative(line));
    }
    Ok(vec![line])
}

pub fn metric(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<String>, RunError> {
    let a = solve_config_skeleton(cfg)?;
    let spec_b = cfg
        .skeleton_b
        .as_ref()
        .ok_or_else(|| RunError::Config("metric needs a 'skeleton_b' section".into()))?;
    let model = cfg.model()?;
    let coeffs = cfg.coefficients()?;
    let sub = model.integrability_subspace()?;
    let drift = jump_support::sde::EffectiveDrift::new(&coeffs, model)?;
    let b = solve_skeleton(
        &vec_from(&spec_b.x0),
        &drift,
        &coeffs,
        model,
        &spec_b
            .control_function(&sub)
            .map_err(|e| RunError::Config(format!("skeleton_b control: {e}")))?,
        &spec_b
            .jump_plan()
            .map_err(|e| RunError::Config(format!("skeleton_b jumps: {e}")))?,
        spec_b.t_horizon,
        &spec_b.solve_options(),
    )?;
    let uniform = uniform_distance(&a.path, &b.path)?;
    let report = skorokhod_distance_upper(&a.path, &b.path, &SkorokhodOptions::default())?;
    let mut csv = String::from("quantity,value\n");
    let _ = writeln!(csv, "uniform,{uniform}");
    let _ = writeln!(csv, "skorokhod_upper,{}", report.skorokhod_upper);
    let _ = writeln!(csv, "slope_log_term,{}", report.slope_log_term);
    let _ = writeln!(csv, "matched_sup_term,{}", report.matched_sup_term);
    for (t, s) in &report.witness_anchors {
        let _ = writeln!(csv, "witness_anchor,{t}:{s}");
    }
    write_file(out, "distance.csv", &csv)?;
    Ok(vec![format!(
        "uniform {uniform:.6}, skorokhod upper {:.6}",
        report.skorokhod_upper
    )])
}
