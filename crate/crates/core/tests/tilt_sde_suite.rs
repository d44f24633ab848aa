//! Tilted simulation against the truncated baseline, the intensity it is
//! supposed to realise, and the density martingale property.

mod common;

use common::{ks_two_sample, ks_two_sample_crit_001, mean_and_stderr};
use jump_support::levy::{LevyModel, SmallJumpConfig};
use jump_support::rng::substream;
use jump_support::sde::{
    simulate_tilted_detailed, simulate_truncated, CoefficientSet, SimOptions,
};
use jump_support::skeleton::ControlFunction;
use jump_support::tilt::{control_to_tilt, density_log, TiltFunction};
use nalgebra::DVector;

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

/// Standard scenario: symmetric 1-D α = 1.5 noise, additive coefficients.
fn scenario(scale: f64, f: f64, eta: f64) -> (LevyModel, CoefficientSet, TiltFunction) {
    let model = radial1(1.5, scale);
    let coeffs = CoefficientSet::additive(1, 1.9);
    let sub = model.integrability_subspace().unwrap();
    let control = ControlFunction::constant(v1(f), &sub).unwrap();
    let g = control_to_tilt(&control, &model, eta, 1.0).unwrap();
    (model, coeffs, g)
}

#[test]
fn zero_tilt_matches_the_truncated_law() {
    let (model, coeffs, _) = scenario(1.0, 0.0, 0.2);
    let g = TiltFunction::zero(1.0);
    let opts = light_opts(300.0);
    let n = 20_000u64;
    let mut tilted: Vec<f64> = (0..n)
        .map(|i| {
            let mut rng = substream(70, i);
            simulate_tilted_detailed(
                &coeffs, &model, &v1(0.0), 0.0, 1.0, 64, 0.2, &g, &opts, &mut rng,
            )
            .unwrap()
            .path
            .final_value()[0]
        })
        .collect();
    let mut plain: Vec<f64> = (0..n)
        .map(|i| {
            let mut rng = substream(71, i);
            simulate_truncated(&coeffs, &model, &v1(0.0), 0.0, 1.0, 64, 0.2, &opts, &mut rng)
                .unwrap()
                .final_value()[0]
        })
        .collect();
    let d = ks_two_sample(&mut tilted, &mut plain);
    let crit = ks_two_sample_crit_001(n as usize, n as usize);
    assert!(d < crit, "KS {d} >= {crit}");
    // And the realised density is identically 1.
    let mut rng = substream(72, 0);
    let run = simulate_tilted_detailed(
        &coeffs, &model, &v1(0.0), 0.0, 1.0, 64, 0.2, &g, &opts, &mut rng,
    )
    .unwrap();
    assert_eq!(run.log_density, 0.0);
}

#[test]
fn tilted_drift_tracks_the_control() {
    // The tilted equation must gain effective drift σ·f: with b ≡ 0 and
    // f = 0.5 the mean terminal value is 0.5·T. A sign error in the
    // matching target would flip this to −0.5·T.
    let (model, coeffs, g) = scenario(0.08, 0.5, 0.1);
    let opts = light_opts(500.0);
    let n = 4000u64;
    let finals: Vec<f64> = (0..n)
        .map(|i| {
            let mut rng = substream(73, i);
            simulate_tilted_detailed(
                &coeffs, &model, &v1(0.0), 0.0, 1.0, 64, 0.1, &g, &opts, &mut rng,
            )
            .unwrap()
            .path
            .final_value()[0]
        })
        .collect();
    let (mean, se) = mean_and_stderr(&finals);
    assert!(
        (mean - 0.5).abs() < 3.0 * se,
        "tilted mean {mean} (se {se}) vs target 0.5"
    );
}

#[test]
fn tilted_atom_intensity_matches_per_bin() {
    // Binned atom counts on the tilt annulus over many runs against
    // (1 + g)μ, within 3σ per bin (Poisson counts).
    let (model, coeffs, g) = scenario(1.0, 0.4, 0.1);
    let piece = &g.pieces()[0];
    let (zeta, eta) = (piece.zeta, piece.eta);
    let c = piece.max_abs_coeff();
    let opts = light_opts(400.0);
    let n_runs = 20_000u64;
    let n_radial = 6;
    let mut observed = vec![0u64; 2 * n_radial];
    let edges: Vec<f64> = (0..=n_radial)
        .map(|k| zeta * (eta / zeta).powf(k as f64 / n_radial as f64))
        .collect();
    for i in 0..n_runs {
        let mut rng = substream(74, i);
        let run = simulate_tilted_detailed(
            &coeffs, &model, &v1(0.0), 0.0, 1.0, 16, 0.1, &g, &opts, &mut rng,
        )
        .unwrap();
        for (_, u) in &run.atoms {
            let r = u.norm();
            if r < zeta || r >= eta {
                continue;
            }
            let k = edges.partition_point(|e| *e <= r).saturating_sub(1);
            let sign_ix = usize::from(u[0] > 0.0);
            observed[2 * k.min(n_radial - 1) + sign_ix] += 1;
        }
    }
    for k in 0..n_radial {
        let half_mass = 0.5 * model.band_mass(edges[k], edges[k + 1]).unwrap();
        for (sign_ix, gv) in [(0usize, -c), (1usize, c)] {
            let expected = n_runs as f64 * (1.0 + gv) * half_mass;
            let got = observed[2 * k + sign_ix] as f64;
            let sigma = expected.sqrt();
            assert!(
                (got - expected).abs() < 3.0 * sigma,
                "bin {k}/{sign_ix}: {got} vs {expected} (3σ = {:.1})",
                3.0 * sigma
            );
        }
    }
}

#[test]
fn density_exponential_is_a_mean_one_martingale() {
    let (model, coeffs, g) = scenario(1.0, 0.5, 0.1);
    let opts = light_opts(400.0);
    let n = 20_000u64;
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            let mut rng = substream(75, i);
            let run = simulate_tilted_detailed(
                &coeffs, &model, &v1(0.0), 0.0, 1.0, 16, 0.1, &g, &opts, &mut rng,
            )
            .unwrap();
            // Cross-check the simulator's bookkeeping against the
            // standalone formula on the same atoms.
            let direct = density_log(&g, &run.atoms, 1.0).unwrap();
            assert!((direct - run.log_density).abs() < 1e-12);
            run.log_density.exp()
        })
        .collect();
    let (mean, se) = mean_and_stderr(&weights);
    assert!(
        (mean - 1.0).abs() < 3.0 * se,
        "E[exp(log density)] = {mean} (se {se})"
    );
}

#[test]
fn zero_target_control_builds_the_zero_tilt() {
    // For a symmetric model the compensator shift vanishes, so the zero
    // control needs no tilt at all.
    let model = radial1(1.5, 1.0);
    let sub = model.integrability_subspace().unwrap();
    let control = ControlFunction::constant(v1(0.0), &sub).unwrap();
    let g = control_to_tilt(&control, &model, 0.2, 1.0).unwrap();
    assert_eq!(g.pieces().len(), 1);
    assert_eq!(g.pieces()[0].max_abs_coeff(), 0.0);
    let u = v1(0.15);
    assert_eq!(g.eval(0.5, &u), 0.0);
}

#[test]
fn two_piece_controls_solve_piecewise() {
    let model = radial1(1.5, 1.0);
    let sub = model.integrability_subspace().unwrap();
    let control = ControlFunction::new(
        vec![0.0, 0.5],
        vec![v1(0.3), v1(-0.2)],
        &sub,
    )
    .unwrap();
    let g = control_to_tilt(&control, &model, 0.1, 1.0).unwrap();
    assert_eq!(g.pieces().len(), 2);
    // Piece values differ across the breakpoint and match the targets
    // through the annulus integral 4c(ζ^{-1/2} − η^{-1/2}) = w.
    for (piece, w) in g.pieces().iter().zip([0.3, -0.2]) {
        let c = piece.eval(&v1(0.5 * (piece.zeta + piece.eta)));
        let matched = 4.0 * c * (piece.zeta.powf(-0.5) - 0.1f64.powf(-0.5));
        assert!((matched - w).abs() < 1e-9, "matched {matched} vs {w}");
    }
    let u_probe = v1(0.06);
    assert_eq!(g.eval(0.2, &u_probe).signum(), 1.0);
    assert_eq!(g.eval(0.7, &u_probe).signum(), -1.0);
}
