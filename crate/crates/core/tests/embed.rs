use channelforge::channel::{choi_from_stinespring, stinespring_from_choi, tensor_power};
use channelforge::degradability::{test_antidegradable, test_degradable};
use channelforge::dnorm::diamond_norm;
use channelforge::embed::{
    antidegradable_embedding, degradable_embedding, verify_antidegrading, verify_degrading,
};
use channelforge::io::EmbeddingDoc;
use channelforge::linalg::partial_trace;
use channelforge::random::{random_circuit, random_density_matrix, seeded, CircuitShape};
use channelforge::{
    ChannelPair, ChoiMatrix, Circuit, ComplexMatrix, EmbeddingResult, Flavor, Limits,
};
use proptest::prelude::*;

fn choi(c: &Circuit) -> ChoiMatrix {
    let limits = Limits::default();
    choi_from_stinespring(&c.compile(&limits).unwrap(), &limits).unwrap()
}

fn shape_strategy() -> impl Strategy<Value = CircuitShape> {
    (1usize..=2, 0usize..=2, 0usize..=2, 1usize..=6).prop_map(|(n, anc, extra, gates)| {
        CircuitShape {
            // Leave at least one output; this also produces non-square circuits.
            traced: Some((anc + extra).min(n + anc - 1)),
            ..CircuitShape::square(n, anc, gates)
        }
    })
}

/// The embedded channels act as `½|0⟩⟨0| ⊗ ρ + ½|1⟩⟨1| ⊗ Φ(ρ)` (degradable)
/// and `½|0⟩⟨0| ⊗ |0⟩⟨0| + ½|1⟩⟨1| ⊗ Φ(ρ)` (antidegradable), with Φ padded to
/// equal input and output sizes.
fn expected_output(e: &EmbeddingResult, phi: &Circuit, rho: &ComplexMatrix) -> ComplexMatrix {
    let padded = phi.pad_to_square();
    let d = 1 << padded.input_qubits();
    let idle = match e.flavor {
        Flavor::Degradable => rho.clone(),
        Flavor::Antidegradable => ComplexMatrix::basis_projector(d, 0),
    };
    let acted = choi(&padded).apply(rho).unwrap();
    let zero = ComplexMatrix::basis_projector(2, 0).kron(&idle);
    let one = ComplexMatrix::basis_projector(2, 1).kron(&acted);
    (&zero + &one).scale(0.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn embeddings_act_as_flagged_mixtures(shape in shape_strategy(), seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let phi = random_circuit(&mut rng, shape);
        for e in [degradable_embedding(&phi).unwrap(), antidegradable_embedding(&phi).unwrap()] {
            let d = 1 << e.embedded.input_qubits();
            let rho = random_density_matrix(&mut rng, d);
            let out = choi(&e.embedded).apply(&rho).unwrap();
            prop_assert!(out.max_abs_diff(&expected_output(&e, &phi, &rho)) <= 1e-10);

            // The flag reads 0 or 1 with probability one half each.
            let flag = partial_trace(&out, &[2, out.rows() / 2], &[1]).unwrap();
            prop_assert!((flag[(0, 0)].re - 0.5).abs() <= 1e-12);
            prop_assert!((flag[(1, 1)].re - 0.5).abs() <= 1e-12);
            prop_assert_eq!(e.flag_wire, e.embedded.output_wires()[0]);
        }
    }

    #[test]
    fn mates_satisfy_their_identities(shape in shape_strategy(), seed in any::<u64>()) {
        let phi = random_circuit(&mut seeded(seed), shape);
        let r = verify_degrading(&degradable_embedding(&phi).unwrap(), 1e-9).unwrap();
        prop_assert!(r.passed, "{:?}", r);
        let r = verify_antidegrading(&antidegradable_embedding(&phi).unwrap(), 1e-9).unwrap();
        prop_assert!(r.passed, "{:?}", r);
    }
}

#[test]
fn embeddings_survive_serialization() {
    let phi = random_circuit(&mut seeded(17), CircuitShape::square(2, 1, 6));
    for e in [
        degradable_embedding(&phi).unwrap(),
        antidegradable_embedding(&phi).unwrap(),
    ] {
        let text = channelforge::io::to_json(&EmbeddingDoc::from(&e));
        let back = channelforge::io::from_json::<EmbeddingDoc>(&text)
            .unwrap()
            .to_embedding()
            .unwrap();
        assert_eq!(back, e);
    }
}

#[test]
fn diamond_distance_halves() {
    let mut rng = seeded(23);
    for _ in 0..3 {
        let shape = CircuitShape::square(1, 1, 6);
        let (a, b) = (
            random_circuit(&mut rng, shape),
            random_circuit(&mut rng, shape),
        );
        let tol = 1e-7;
        let dist = |x: &Circuit, y: &Circuit| {
            let pair = ChannelPair::new(choi(x), choi(y)).unwrap();
            diamond_norm(&pair, tol).unwrap().value
        };
        let original = dist(&a, &b);
        let psi = dist(
            &degradable_embedding(&a).unwrap().embedded,
            &degradable_embedding(&b).unwrap().embedded,
        );
        let lambda = dist(
            &antidegradable_embedding(&a).unwrap().embedded,
            &antidegradable_embedding(&b).unwrap().embedded,
        );
        assert!(
            (psi - original / 2.0).abs() <= 2.0 * tol,
            "{psi} vs {original}"
        );
        assert!(
            (lambda - original / 2.0).abs() <= 2.0 * tol,
            "{lambda} vs {original}"
        );
    }
}

#[test]
fn two_copies_stay_degradable() {
    let phi = random_circuit(&mut seeded(29), CircuitShape::square(1, 1, 6));
    let limits = Limits::default();
    let squared = tensor_power(
        &choi(&degradable_embedding(&phi).unwrap().embedded),
        2,
        &limits,
    )
    .unwrap();
    let r = test_degradable(&stinespring_from_choi(&squared, 1e-8).unwrap(), 1e-7).unwrap();
    assert!(r.feasible, "residual {}", r.residual);
}

#[test]
fn two_copies_stay_antidegradable() {
    let phi = random_circuit(&mut seeded(31), CircuitShape::square(1, 1, 6));
    let limits = Limits::default();
    let squared = tensor_power(
        &choi(&antidegradable_embedding(&phi).unwrap().embedded),
        2,
        &limits,
    )
    .unwrap();
    let r = test_antidegradable(&stinespring_from_choi(&squared, 1e-8).unwrap(), 1e-7).unwrap();
    assert!(r.feasible, "residual {}", r.residual);
}
