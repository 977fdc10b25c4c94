//! Cross-validation between the two independent computational routes:
//! the closed-form Gaussian evolution and the brute-force Fock-space
//! integrator. Nothing here assumes the two implementations share code —
//! the stencil route and the ladder-composition route are confronted on
//! random states, trace identities are checked exactly, and evolved
//! states are compared elementwise.

use ndarray::Array4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tmsv_ppt::fock::{extract_block, integrate_with_tol, FockDensityMatrix};
use tmsv_ppt::gaussian::{evolve_coefficients, tmsv_coeffs, BathParams, SqueezeInit};
use tmsv_ppt::spectrum::block_spectrum;
use tmsv_ppt::{
    fock::{master_rhs, master_rhs_pt, reconstruct_analytic_fock, tmsv_fock_state_with_tol},
    measures::numerical_negativity,
};

/// A dense random state-shaped array (no physicality implied — the
/// generator identities hold for arbitrary operators).
fn random_state(nmax: usize, seed: u64) -> FockDensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = nmax + 1;
    let mut state = FockDensityMatrix::zeros(nmax, false);
    state.elements = Array4::from_shape_fn((dim, dim, dim, dim), |_| rng.gen_range(-1.0..1.0));
    state
}

fn array_pt(a: &Array4<f64>) -> Array4<f64> {
    let dim = a.shape()[0];
    Array4::from_shape_fn((dim, dim, dim, dim), |(n, m, p, q)| a[[p, m, n, q]])
}

fn array_max_abs_diff(a: &Array4<f64>, b: &Array4<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

fn array_trace(a: &Array4<f64>) -> f64 {
    let dim = a.shape()[0];
    let mut acc = 0.0;
    for n in 0..dim {
        for m in 0..dim {
            acc += a[[n, m, n, m]];
        }
    }
    acc
}

#[test]
fn partial_transposition_commutes_with_the_generator_on_random_operators() {
    for seed in [1u64, 7, 42] {
        let state = random_state(5, seed);
        let bath = BathParams::new(0.9, 1.4).unwrap();

        let via_plain = array_pt(&master_rhs(&state, &bath).unwrap());
        let via_pt = master_rhs_pt(&state.partial_transpose(), &bath).unwrap();

        let diff = array_max_abs_diff(&via_plain, &via_pt);
        assert!(diff < 1e-13, "seed {seed}: routes differ by {diff}");
    }
}

#[test]
fn halving_the_time_step_does_not_move_the_integrated_state() {
    let init = SqueezeInit::from_lambda(0.3).unwrap();
    let bath = BathParams::new(0.8, 1.2).unwrap();
    let nmax = 16;
    let state = tmsv_fock_state_with_tol(&init, nmax, 1e-6)
        .unwrap()
        .partial_transpose();

    let dt = 0.005 / ((bath.gain() + bath.loss()) * nmax as f64);
    let coarse = integrate_with_tol(&state, &bath, 0.4, dt, 1e-5).unwrap();
    let fine = integrate_with_tol(&state, &bath, 0.4, dt / 2.0, 1e-5).unwrap();

    let diff = coarse.max_abs_diff(&fine).unwrap();
    assert!(diff < 1e-9, "step halving moved the state by {diff}");
}

#[test]
fn generator_only_couples_adjacent_index_difference_blocks() {
    // Support confined to the block n + m = 3 must flow only into
    // n + m ∈ {2, 3, 4}: each Lindblad term moves one excitation.
    let nmax = 6;
    let mut state = FockDensityMatrix::zeros(nmax, true);
    for j in 0..=3usize {
        for l in 0..=3usize {
            state.elements[[j, 3 - j, l, 3 - l]] = (1.0 + j as f64) * (1.0 + l as f64);
        }
    }
    let rhs = master_rhs_pt(&state, &BathParams::new(0.7, 1.1).unwrap()).unwrap();
    for n in 0..=nmax {
        for m in 0..=nmax {
            for p in 0..=nmax {
                for q in 0..=nmax {
                    let v = rhs[[n, m, p, q]];
                    if v == 0.0 {
                        continue;
                    }
                    let row = n + m;
                    let col = p + q;
                    assert!(
                        (2..=4).contains(&row) && (2..=4).contains(&col),
                        "unexpected flow into [{n},{m},{p},{q}] = {v}"
                    );
                }
            }
        }
    }
}

#[test]
fn trace_flow_of_the_truncated_generator_is_exactly_the_edge_leak() {
    // Pure loss conserves trace on the truncated lattice (the dropped
    // in-flow comes from absent levels). Gain leaks trace through the top
    // level at the exact rate −2G(nmax+1) per mode-edge diagonal.
    let nmax = 8;
    let init = SqueezeInit::from_lambda(0.4).unwrap();
    let state = tmsv_fock_state_with_tol(&init, nmax, 1e-3).unwrap();

    let loss_only = master_rhs(&state, &BathParams::new(0.0, 1.3).unwrap()).unwrap();
    assert!(array_trace(&loss_only).abs() < 1e-15);

    let bath = BathParams::new(0.7, 1.3).unwrap();
    let rhs = master_rhs(&state, &bath).unwrap();
    let mut edge = 0.0;
    for k in 0..=nmax {
        edge += state.elements[[nmax, k, nmax, k]];
        edge += state.elements[[k, nmax, k, nmax]];
    }
    let want = -2.0 * bath.gain() * (nmax as f64 + 1.0) * edge;
    let got = array_trace(&rhs);
    assert!(
        (got - want).abs() < 1e-15 * want.abs().max(1.0),
        "trace flow {got} vs edge leak {want}"
    );
}

#[test]
fn thermal_product_states_are_fixed_points_away_from_the_boundary() {
    let bath = BathParams::thermal(1.0, 0.6).unwrap();
    let q: f64 = 0.6 / 1.6;
    let nmax = 12;
    let mut state = FockDensityMatrix::zeros(nmax, true);
    let norm = (1.0 - q) * (1.0 - q);
    for n in 0..=nmax {
        for m in 0..=nmax {
            state.elements[[n, m, n, m]] = norm * q.powi((n + m) as i32);
        }
    }
    let rhs = master_rhs_pt(&state, &bath).unwrap();
    for n in 0..nmax {
        for m in 0..nmax {
            for p in 0..nmax {
                for q_ in 0..nmax {
                    assert!(
                        rhs[[n, m, p, q_]].abs() < 1e-15,
                        "interior drift at [{n},{m},{p},{q_}]"
                    );
                }
            }
        }
    }
}

#[test]
fn integrated_state_matches_the_closed_form_elementwise() {
    let init = SqueezeInit::from_lambda(0.2).unwrap();
    let bath = BathParams::new(1.0, 1.0).unwrap();
    let nmax = 16;
    let t = 0.25;

    let start = tmsv_fock_state_with_tol(&init, nmax, 1e-6)
        .unwrap()
        .partial_transpose();
    let dt = 0.05 / ((bath.gain() + bath.loss()) * nmax as f64);
    let integrated = integrate_with_tol(&start, &bath, t, dt, 1e-5).unwrap();

    let coeffs = evolve_coefficients(&tmsv_coeffs(&init), &bath, t).unwrap();
    let analytic = reconstruct_analytic_fock(&coeffs, nmax, 6).unwrap();

    for s in 0..=6usize {
        let got = extract_block(&integrated, s).unwrap();
        let want = extract_block(&analytic, s).unwrap();
        let mut worst = 0.0_f64;
        for ((a, b), (c, d)) in got.indexed_iter().map(|(i, v)| (i, *v)).zip(
            want.indexed_iter().map(|(i, v)| (i, *v)),
        ) {
            assert_eq!(a, c);
            worst = worst.max((b - d).abs());
        }
        assert!(worst < 1e-6, "block S={s} differs by {worst}");
    }
}

#[test]
fn numerical_negativity_tracks_the_block_restricted_closed_form() {
    let init = SqueezeInit::from_lambda(0.2).unwrap();
    let bath = BathParams::new(0.0, 1.0).unwrap();
    let nmax = 14;
    let smax = 12;
    let dt = 0.05 / (bath.loss() * nmax as f64);

    let mut state = tmsv_fock_state_with_tol(&init, nmax, 1e-6)
        .unwrap()
        .partial_transpose();
    let step = 0.06;
    for k in 1..=5usize {
        state = integrate_with_tol(&state, &bath, step, dt, 1e-6).unwrap();
        let t = step * k as f64;

        let coeffs = evolve_coefficients(&tmsv_coeffs(&init), &bath, t).unwrap();
        let mut analytic = 0.0;
        for s in 0..=smax {
            for v in block_spectrum(&coeffs, s).unwrap().eigenvalues {
                if v < 0.0 {
                    analytic -= v;
                }
            }
        }

        let numeric = numerical_negativity(&state, smax).unwrap();
        assert!(
            (numeric - analytic).abs() < 1e-6,
            "t={t}: numeric {numeric} vs analytic {analytic}"
        );
    }
}
