//! Effective drift and the Euler simulators against closed-form,
//! distributional, and coupling oracles.

mod common;

use common::{ks_two_sample, ks_two_sample_crit_001, percentile, regression_slope};
use jump_support::levy::{DiscreteAtom, LevyModel, SmallJumpConfig};
use jump_support::rng::substream;
use jump_support::sde::{
    euler_simulate, euler_simulate_given_noise, realize_noise, simulate_truncated,
    CoefficientSet, DriftForm, EffectiveDrift, RemainderForm, SigmaForm, SimOptions,
};
use jump_support::skeleton::{solve_skeleton, ControlFunction, JumpPlan, SolveOptions};
use nalgebra::{DMatrix, DVector};

fn v1(x: f64) -> DVector<f64> {
    DVector::from_element(1, x)
}

fn radial1(alpha: f64, scale: f64) -> LevyModel {
    LevyModel::RadialStable {
        alpha,
        scale,
        dim: 1,
    }
}

fn light_opts(max_rate: f64) -> SimOptions {
    SimOptions {
        small_jump: SmallJumpConfig {
            max_rate,
            ..SmallJumpConfig::default()
        },
        ..SimOptions::default()
    }
}

#[test]
fn effective_drift_examples() {
    // Symmetric model with r ≡ 0: no correction at all.
    let coeffs = CoefficientSet::linear_drift(
        DMatrix::from_element(1, 1, -1.0),
        DVector::from_element(1, 0.3),
        1.9,
    )
    .unwrap();
    let model = radial1(1.5, 1.0);
    let drift = EffectiveDrift::new(&coeffs, &model).unwrap();
    for x in [-2.0, 0.0, 1.7] {
        assert_eq!(drift.eval(&v1(x)), coeffs.drift(&v1(x)));
    }

    // One-sided with α = 1/2: L = R, so b̃(x) = b(x) − σ(x)·∫_0^1 z^{-1/2} dz
    // = b(x) − 2σ(x).
    let model = LevyModel::OneSidedStable1D { alpha: 0.5 };
    let drift = EffectiveDrift::new(&coeffs, &model).unwrap();
    for x in [-1.0, 0.5] {
        let expected = coeffs.drift(&v1(x))[0] - 2.0;
        assert!((drift.eval(&v1(x))[0] - expected).abs() < 1e-12);
    }

    // Power remainder |u|^{1.6} e against the β-moment 2/(β−α) = 20.
    let coeffs = CoefficientSet::new(
        1,
        1,
        DriftForm::Affine {
            matrix: DMatrix::zeros(1, 1),
            offset: DVector::from_element(1, 1.0),
        },
        SigmaForm::Affine {
            base: DMatrix::identity(1, 1),
            linear: Vec::new(),
        },
        RemainderForm::PowerLaw {
            coeff0: 1.0,
            coeff1: DVector::zeros(1),
            direction: v1(1.0),
        },
        1.6,
    )
    .unwrap();
    let model = radial1(1.5, 1.0);
    let drift = EffectiveDrift::new(&coeffs, &model).unwrap();
    let got = drift.eval(&v1(0.0))[0];
    assert!((got - (1.0 - 20.0)).abs() < 1e-10, "got {got}");
}

#[test]
fn zero_coefficients_give_a_constant_path() {
    let coeffs = CoefficientSet::new(
        1,
        1,
        DriftForm::Affine {
            matrix: DMatrix::zeros(1, 1),
            offset: DVector::zeros(1),
        },
        SigmaForm::Affine {
            base: DMatrix::zeros(1, 1),
            linear: Vec::new(),
        },
        RemainderForm::Zero,
        1.9,
    )
    .unwrap();
    let model = radial1(1.5, 1.0);
    let mut rng = substream(1, 0);
    let path = euler_simulate(
        &coeffs,
        &model,
        &v1(0.7),
        1.0,
        64,
        0.5,
        &light_opts(100.0),
        &mut rng,
    )
    .unwrap();
    for x in path.values() {
        assert_eq!(x[0], 0.7);
    }
}

#[test]
fn additive_marginal_matches_direct_increment_draws() {
    // c(x,u) = u, b ≡ 0: X_T − x0 equals the T-increment of the driving
    // noise, so a one-step simulation of the same decomposition is an
    // exact sampler of the marginal. Two-sample KS at level 0.01.
    let coeffs = CoefficientSet::additive(1, 1.9);
    let model = radial1(1.5, 0.5);
    let opts = light_opts(200.0);
    let n = 100_000;
    let euler: Vec<f64> = (0..n)
        .map(|i| {
            let mut rng = substream(21, i);
            euler_simulate(&coeffs, &model, &v1(0.0), 1.0, 200, 0.4, &opts, &mut rng)
                .unwrap()
                .final_value()[0]
        })
        .collect();
    let direct: Vec<f64> = (0..n)
        .map(|i| {
            let mut rng = substream(22, i);
            euler_simulate(&coeffs, &model, &v1(0.0), 1.0, 1, 0.4, &opts, &mut rng)
                .unwrap()
                .final_value()[0]
        })
        .collect();
    let mut a = euler;
    let mut b = direct;
    let d = ks_two_sample(&mut a, &mut b);
    let crit = ks_two_sample_crit_001(n as usize, n as usize);
    assert!(d < crit, "KS {d} >= {crit}");
}

#[test]
fn applied_jump_count_matches_poisson_mean() {
    let coeffs = CoefficientSet::additive(1, 1.9);
    let model = radial1(1.5, 1.0);
    let eta = 0.8;
    let lambda = model.tail_mass(eta).unwrap();
    let opts = light_opts(100.0);
    let n = 100_000u64;
    let mut total = 0usize;
    for i in 0..n {
        let mut rng = substream(23, i);
        let path =
            euler_simulate(&coeffs, &model, &v1(0.0), 1.0, 16, eta, &opts, &mut rng).unwrap();
        total += path.jumps().len();
    }
    let mean = total as f64 / n as f64;
    let sigma = (lambda / n as f64).sqrt();
    assert!(
        (mean - lambda).abs() < 3.0 * sigma,
        "mean {mean} vs {lambda}"
    );
}

#[test]
fn jump_records_reproduce_the_jump_map_exactly() {
    let coeffs = CoefficientSet::linear_drift(
        DMatrix::from_element(1, 1, -0.5),
        DVector::zeros(1),
        1.9,
    )
    .unwrap();
    let model = radial1(1.5, 1.0);
    let mut rng = substream(5, 3);
    let path = euler_simulate(
        &coeffs,
        &model,
        &v1(1.0),
        2.0,
        128,
        0.3,
        &light_opts(200.0),
        &mut rng,
    )
    .unwrap();
    assert!(!path.jumps().is_empty());
    for rec in path.jumps() {
        let xi = rec.amplitude.as_ref().unwrap();
        let recon = &rec.pre + coeffs.jump_map(&rec.pre, xi);
        assert_eq!(recon, rec.post);
    }
}

#[test]
fn paths_are_bit_reproducible() {
    let coeffs = CoefficientSet::additive(1, 1.9);
    let model = radial1(1.2, 1.0);
    let run = |seed: u64| {
        let mut rng = substream(seed, 0);
        euler_simulate(
            &coeffs,
            &model,
            &v1(0.0),
            1.0,
            64,
            0.3,
            &light_opts(300.0),
            &mut rng,
        )
        .unwrap()
    };
    let a = run(9);
    let b = run(9);
    assert_eq!(a.times(), b.times());
    for (x, y) in a.values().iter().zip(b.values()) {
        assert_eq!(x, y);
    }
}

#[test]
fn refinement_halving_has_square_root_to_linear_order() {
    // Same realised noise on nested grids (fill disabled); the RMS gap of
    // the terminal values scales like Δt^s with s in [0.3, 1.2].
    let coeffs = CoefficientSet::new(
        1,
        1,
        DriftForm::Affine {
            matrix: DMatrix::from_element(1, 1, -1.0),
            offset: DVector::zeros(1),
        },
        SigmaForm::Affine {
            base: DMatrix::identity(1, 1),
            linear: vec![DMatrix::from_element(1, 1, 0.3)],
        },
        RemainderForm::Zero,
        1.9,
    )
    .unwrap();
    // Bounded support keeps the state-dependent jump map from blowing up
    // on extreme tail draws; the one-sided measure also exercises the
    // asymmetric compensator.
    let model = LevyModel::OneSidedStable1D { alpha: 0.5 };
    let opts = SimOptions {
        small_jump: SmallJumpConfig {
            var_tol: 1e-6,
            gaussian_fill: false,
            ..SmallJumpConfig::default()
        },
        ..SimOptions::default()
    };
    let eta = 0.5;
    let grid = [64usize, 128, 256];
    let n_paths = 1000u64;
    let mut log_dt = Vec::new();
    let mut log_rms = Vec::new();
    for &n in &grid {
        let mut sq = 0.0;
        for i in 0..n_paths {
            let mut rng = substream(31, i);
            let noise = realize_noise(&model, eta, 0.0, 1.0, &opts, &mut rng).unwrap();
            let coarse = euler_simulate_given_noise(
                &coeffs, &model, &v1(1.0), 0.0, 1.0, n, eta, &opts, &noise,
            )
            .unwrap();
            let fine = euler_simulate_given_noise(
                &coeffs, &model, &v1(1.0), 0.0, 1.0, 2 * n, eta, &opts, &noise,
            )
            .unwrap();
            let d = coarse.final_value()[0] - fine.final_value()[0];
            sq += d * d;
        }
        log_dt.push((1.0 / n as f64).ln());
        log_rms.push((sq / n_paths as f64).sqrt().ln());
    }
    let slope = regression_slope(&log_dt, &log_rms);
    assert!(
        (0.3..=1.2).contains(&slope),
        "refinement slope {slope} outside [0.3, 1.2]"
    );
}

#[test]
fn truncated_single_point_window() {
    let coeffs = CoefficientSet::additive(1, 1.9);
    let model = radial1(1.5, 1.0);
    let mut rng = substream(2, 0);
    let path = simulate_truncated(
        &coeffs,
        &model,
        &v1(0.4),
        0.7,
        0.7,
        32,
        0.3,
        &light_opts(200.0),
        &mut rng,
    )
    .unwrap();
    assert_eq!(path.times(), &[0.7]);
    assert_eq!(path.values()[0][0], 0.4);
}

#[test]
fn truncated_without_small_jumps_is_the_skeleton_ode() {
    // Atoms above the truncation level leave a pure ODE; the Euler path
    // must match the RK4 skeleton to 1e-6 at a fine step.
    let model = LevyModel::Discrete {
        atoms: vec![DiscreteAtom {
            u: vec![2.0],
            w: 1.0,
        }],
    };
    let coeffs = CoefficientSet::linear_drift(
        DMatrix::from_element(1, 1, -1.0),
        DVector::zeros(1),
        1.9,
    )
    .unwrap();
    let mut rng = substream(3, 1);
    let trunc = simulate_truncated(
        &coeffs,
        &model,
        &v1(1.0),
        0.0,
        1.0,
        1_000_000,
        1.0,
        &SimOptions::default(),
        &mut rng,
    )
    .unwrap();
    let drift = EffectiveDrift::new(&coeffs, &model).unwrap();
    let skel = solve_skeleton(
        &v1(1.0),
        &drift,
        &coeffs,
        &model,
        &ControlFunction::zero(1),
        &JumpPlan::default(),
        1.0,
        &SolveOptions::default(),
    )
    .unwrap();
    let gap = (trunc.final_value() - skel.path.final_value()).norm();
    assert!(gap < 1e-6, "gap {gap}");
}

#[test]
fn truncated_paths_close_in_on_the_skeleton_as_eta_shrinks() {
    // For each η the skeleton uses the control the truncated equation
    // actually carries (zero here by symmetry); the 90th percentile of
    // the sup-distance over 1000 paths must decrease along the η grid.
    let coeffs = CoefficientSet::linear_drift(
        DMatrix::from_element(1, 1, -1.0),
        DVector::zeros(1),
        1.9,
    )
    .unwrap();
    let model = radial1(1.5, 0.1);
    let drift = EffectiveDrift::new(&coeffs, &model).unwrap();
    let skel = solve_skeleton(
        &v1(1.0),
        &drift,
        &coeffs,
        &model,
        &ControlFunction::zero(1),
        &JumpPlan::default(),
        1.0,
        &SolveOptions::default(),
    )
    .unwrap();
    let opts = light_opts(2000.0);
    let mut q90 = Vec::new();
    for (k, eta) in [0.2, 0.1, 0.05].into_iter().enumerate() {
        let mut sups: Vec<f64> = (0..1000u64)
            .map(|i| {
                let mut rng = substream(40 + k as u64, i);
                let path = simulate_truncated(
                    &coeffs, &model, &v1(1.0), 0.0, 1.0, 128, eta, &opts, &mut rng,
                )
                .unwrap();
                jump_support::metric::uniform_distance(&path, &skel.path).unwrap()
            })
            .collect();
        sups.sort_by(f64::total_cmp);
        q90.push(percentile(&sups, 0.9));
    }
    assert!(
        q90[1] < q90[0] && q90[2] < q90[1],
        "90th percentiles not decreasing: {q90:?}"
    );
}

#[test]
fn blow_up_is_reported_with_a_time() {
    let coeffs = CoefficientSet::linear_drift(
        DMatrix::from_element(1, 1, 40.0),
        DVector::zeros(1),
        1.9,
    )
    .unwrap();
    let model = radial1(1.5, 1.0);
    let mut rng = substream(6, 0);
    let err = euler_simulate(
        &coeffs,
        &model,
        &v1(1.0),
        2.0,
        64,
        0.5,
        &SimOptions {
            blow_up_norm: 1e6,
            small_jump: SmallJumpConfig {
                max_rate: 100.0,
                ..SmallJumpConfig::default()
            },
        },
        &mut rng,
    )
    .unwrap_err();
    match err {
        jump_support::Error::BlowUp { time, .. } => assert!(time > 0.0 && time <= 2.0),
        other => panic!("expected blow-up, got {other}"),
    }
}
