use std::f64::consts::PI;

use channelforge::channel::{choi_from_stinespring, tensor_power};
use channelforge::dnorm::{
    decide_qcd, diamond_norm, output_distance, repetition_bounds, sampled_lower_bound,
    theorem_parameters, DEFAULT_TOL,
};
use channelforge::linalg::{psd_sqrt, trace_norm};
use channelforge::random::{random_circuit, seeded, CircuitShape};
use channelforge::{ChannelPair, ChoiMatrix, Circuit, ComplexMatrix, Decision, Gate, Limits};
use num_complex::Complex64;
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;

fn choi(c: &Circuit) -> ChoiMatrix {
    let limits = Limits::default();
    choi_from_stinespring(&c.compile(&limits).unwrap(), &limits).unwrap()
}

fn random_pair(rng: &mut ChaCha8Rng, shape: CircuitShape) -> (Circuit, Circuit) {
    (random_circuit(rng, shape), random_circuit(rng, shape))
}

fn phase_circuit(theta: f64) -> Circuit {
    let u = ComplexMatrix::from_diagonal(&[
        Complex64::new(1.0, 0.0),
        Complex64::from_polar(1.0, theta),
    ]);
    Circuit::new(
        1,
        vec![Gate::Unitary {
            targets: vec![0],
            matrix: u,
        }],
        None,
    )
    .unwrap()
}

/// Grid search over qubit inputs: `‖(X ⊗ I) J (X† ⊗ I)‖₁` with `X = √τ` for
/// `τ` on a grid over eigenvalue and Bloch direction. Every grid point is a
/// valid input, so the result is a lower bound approaching the diamond norm.
fn grid_oracle(j: &ComplexMatrix, db: usize) -> f64 {
    let mut best: f64 = 0.0;
    for pi in 0..=20 {
        let p = 0.5 + 0.5 * pi as f64 / 20.0;
        for ti in 0..=24 {
            let theta = PI * ti as f64 / 24.0;
            for fi in 0..48 {
                let phi = 2.0 * PI * fi as f64 / 48.0;
                let v = [
                    Complex64::new((theta / 2.0).cos(), 0.0),
                    Complex64::from_polar((theta / 2.0).sin(), phi),
                ];
                let proj = ComplexMatrix::projector(&v);
                let tau = &proj.scale(p) + &(&ComplexMatrix::identity(2) - &proj).scale(1.0 - p);
                let x = psd_sqrt(&tau).kron(&ComplexMatrix::identity(db));
                best = best.max(trace_norm(&x.conjugate(j)).unwrap());
            }
        }
    }
    best
}

#[test]
fn grid_oracle_agrees_on_random_qubit_pairs() {
    let mut rng = seeded(101);
    for _ in 0..4 {
        let (a, b) = random_pair(&mut rng, CircuitShape::square(1, 1, 6));
        let pair = ChannelPair::new(choi(&a), choi(&b)).unwrap();
        let r = diamond_norm(&pair, DEFAULT_TOL).unwrap();
        let oracle = grid_oracle(&pair.difference(), 2);
        assert!(
            oracle <= r.value + 1e-7,
            "oracle {oracle} above {}",
            r.value
        );
        assert!(
            r.value - oracle <= 2e-2,
            "grid {oracle} far below {}",
            r.value
        );
    }
}

#[test]
fn phase_gates_match_closed_form() {
    for theta in [PI / 6.0, PI / 3.0, PI / 2.0, 2.0 * PI / 3.0, PI] {
        let pair = ChannelPair::new(ChoiMatrix::identity(2), choi(&phase_circuit(theta))).unwrap();
        let r = diamond_norm(&pair, DEFAULT_TOL).unwrap();
        let exact = 2.0 * (theta / 2.0).sin();
        assert!(
            (r.value - exact).abs() <= 1e-6,
            "θ={theta}: {} vs {exact}",
            r.value
        );
        let sampled = sampled_lower_bound(&pair, 400, 7).unwrap();
        assert!(sampled <= r.value + 1e-7);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn certificates_sandwich_the_value(seed in any::<u64>(), qubits in 1usize..=2) {
        let mut rng = seeded(seed);
        let (a, b) = random_pair(&mut rng, CircuitShape::square(qubits, 1, 5));
        let pair = ChannelPair::new(choi(&a), choi(&b)).unwrap();
        let r = diamond_norm(&pair, DEFAULT_TOL).unwrap();
        prop_assert!(r.primal_bound <= r.value && r.value <= r.dual_bound);
        prop_assert!(r.dual_bound - r.primal_bound <= DEFAULT_TOL);
        prop_assert!((0.0..=2.0 + 1e-9).contains(&r.value));
        prop_assert!(sampled_lower_bound(&pair, 50, seed).unwrap() <= r.dual_bound + 1e-9);

        let d = pair.dim_in();
        prop_assert!((r.witness.trace().re - 1.0).abs() <= 1e-9);
        prop_assert_eq!(r.witness.rows(), d * d);
        let achieved = output_distance(&pair.difference(), d, pair.dim_out(), &r.witness).unwrap();
        prop_assert!((achieved - r.primal_bound).abs() <= 1e-9);
    }

    #[test]
    fn distance_is_symmetric(seed in any::<u64>()) {
        let (a, b) = random_pair(&mut seeded(seed), CircuitShape::square(1, 1, 5));
        let pair = ChannelPair::new(choi(&a), choi(&b)).unwrap();
        let forward = diamond_norm(&pair, DEFAULT_TOL).unwrap().value;
        let backward = diamond_norm(&pair.swapped(), DEFAULT_TOL).unwrap().value;
        prop_assert!((forward - backward).abs() <= DEFAULT_TOL);
    }

    #[test]
    fn theorem_parameters_satisfy_inequalities(a in 0.01f64..1.99, frac in 0.001f64..0.999) {
        let b = a * frac;
        let p = theorem_parameters(a, b).unwrap();
        let k = p.k as f64;
        prop_assert!(2.0 - 2.0 * (-k * (1.0 - 2.0 * p.epsilon) / 8.0).exp() > a);
        prop_assert!(k * p.epsilon < b);
        prop_assert!(p.epsilon > 0.0 && p.epsilon <= 0.25);
    }
}

#[test]
fn padding_leaves_distance_unchanged() {
    let mut rng = seeded(55);
    let shapes = [
        CircuitShape {
            traced: Some(2),
            ..CircuitShape::square(2, 1, 6)
        },
        CircuitShape {
            traced: Some(0),
            ..CircuitShape::square(1, 1, 6)
        },
    ];
    for shape in shapes {
        let (a, b) = random_pair(&mut rng, shape);
        assert_ne!(a.input_qubits(), a.output_qubits());
        let raw = ChannelPair::new(choi(&a), choi(&b)).unwrap();
        let padded = ChannelPair::new(choi(&a.pad_to_square()), choi(&b.pad_to_square())).unwrap();
        let x = diamond_norm(&raw, DEFAULT_TOL).unwrap().value;
        let y = diamond_norm(&padded, DEFAULT_TOL).unwrap().value;
        assert!((x - y).abs() <= DEFAULT_TOL, "{x} vs {y}");
    }
}

#[test]
fn tensor_powers_respect_repetition_bounds() {
    let mut rng = seeded(77);
    let limits = Limits::default();
    let (a, b) = random_pair(&mut rng, CircuitShape::square(1, 1, 5));
    let (ja, jb) = (choi(&a), choi(&b));
    let delta = diamond_norm(
        &ChannelPair::new(ja.clone(), jb.clone()).unwrap(),
        DEFAULT_TOL,
    )
    .unwrap()
    .value;
    for k in [2, 3] {
        let pair = ChannelPair::new(
            tensor_power(&ja, k, &limits).unwrap(),
            tensor_power(&jb, k, &limits).unwrap(),
        )
        .unwrap();
        let value = diamond_norm(&pair, DEFAULT_TOL).unwrap().value;
        let bounds = repetition_bounds(delta, k).unwrap();
        assert!(
            bounds.lower < value,
            "k={k}: {value} below {}",
            bounds.lower
        );
        assert!(
            value <= bounds.upper + 1e-7,
            "k={k}: {value} above {}",
            bounds.upper
        );
    }
}

#[test]
fn promise_decisions() {
    let x = Circuit::new(1, vec![Gate::X(0)], None).unwrap();
    let far = ChannelPair::new(ChoiMatrix::identity(2), choi(&x)).unwrap();
    assert_eq!(
        decide_qcd(&far, 1.9, 0.1, DEFAULT_TOL).unwrap(),
        Decision::Yes
    );
    let same = ChannelPair::new(ChoiMatrix::identity(2), ChoiMatrix::identity(2)).unwrap();
    assert_eq!(
        decide_qcd(&same, 1.9, 0.1, DEFAULT_TOL).unwrap(),
        Decision::No
    );
    let gap = ChannelPair::new(ChoiMatrix::identity(2), choi(&phase_circuit(PI / 3.0))).unwrap();
    assert_eq!(
        decide_qcd(&gap, 1.9, 0.1, DEFAULT_TOL).unwrap(),
        Decision::Indeterminate
    );
    assert_eq!(
        decide_qcd(&gap, 1.5, 0.5, DEFAULT_TOL).unwrap(),
        Decision::Indeterminate
    );
    assert!(sampled_lower_bound(&far, 1000, 3).unwrap() >= 1.5);
    assert_eq!(sampled_lower_bound(&same, 10, 3).unwrap(), 0.0);
    assert!(decide_qcd(&gap, 0.1, 1.9, DEFAULT_TOL).is_err());
    assert!(decide_qcd(&gap, 1.0, 0.9, 0.1).is_err());
}

#[test]
fn non_channels_are_rejected() {
    let j = ChoiMatrix::new(ComplexMatrix::identity(4).scale(2.0), 2, 2).unwrap();
    let pair = ChannelPair::new(j, ChoiMatrix::identity(2)).unwrap();
    assert!(diamond_norm(&pair, DEFAULT_TOL).is_err());
    let pair = ChannelPair::new(ChoiMatrix::identity(2), ChoiMatrix::identity(2)).unwrap();
    assert!(diamond_norm(&pair, 0.0).is_err());
    assert!(ChannelPair::new(ChoiMatrix::identity(2), ChoiMatrix::identity(3)).is_err());
}
