use channelforge::channel::{
    choi_from_stinespring, complementary_channel, compose, stinespring_from_choi, tensor,
    tensor_power,
};
use channelforge::linalg::{singular_values, tensor_product};
use channelforge::random::{random_circuit, random_density_matrix, seeded, CircuitShape};
use channelforge::{ChoiMatrix, ComplexMatrix, Limits};
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;

fn random_channel(rng: &mut ChaCha8Rng, qubits: usize) -> ChoiMatrix {
    let limits = Limits::default();
    let c = random_circuit(rng, CircuitShape::square(qubits, 2, 6));
    choi_from_stinespring(&c.compile(&limits).unwrap(), &limits).unwrap()
}

fn sorted_singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let mut s = singular_values(m);
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn composition_is_associative(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let (a, b, c) = (random_channel(&mut rng, 1), random_channel(&mut rng, 1), random_channel(&mut rng, 1));
        let left = compose(&compose(&a, &b).unwrap(), &c).unwrap();
        let right = compose(&a, &compose(&b, &c).unwrap()).unwrap();
        prop_assert!(left.matrix().max_abs_diff(right.matrix()) <= 1e-10);
    }

    #[test]
    fn composition_applies_inner_first(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let (outer, inner) = (random_channel(&mut rng, 2), random_channel(&mut rng, 2));
        let rho = random_density_matrix(&mut rng, 4);
        let direct = outer.apply(&inner.apply(&rho).unwrap()).unwrap();
        let composed = compose(&outer, &inner).unwrap().apply(&rho).unwrap();
        prop_assert!(composed.max_abs_diff(&direct) <= 1e-10);
        prop_assert!(compose(&outer, &inner).unwrap().is_cptp(1e-9));
    }

    #[test]
    fn choi_and_dilation_agree(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let c = random_circuit(&mut rng, CircuitShape::square(2, 1, 6));
        let limits = Limits::default();
        let s = c.compile(&limits).unwrap();
        let j = choi_from_stinespring(&s, &limits).unwrap();
        let rho = random_density_matrix(&mut rng, 4);
        prop_assert!(j.apply(&rho).unwrap().max_abs_diff(&s.apply(&rho).unwrap()) <= 1e-10);

        let back = stinespring_from_choi(&j, 1e-8).unwrap();
        let j2 = choi_from_stinespring(&back, &limits).unwrap();
        prop_assert!(j2.matrix().max_abs_diff(j.matrix()) <= 1e-9);
    }

    #[test]
    fn double_complement_matches_up_to_isometry(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let c = random_circuit(&mut rng, CircuitShape::square(1, 2, 6));
        let limits = Limits::default();
        let s = c.compile(&limits).unwrap();
        let comp = complementary_channel(&s, &limits).unwrap();
        let canonical = stinespring_from_choi(&comp, 1e-8).unwrap();
        let back = complementary_channel(&canonical, &limits).unwrap();
        let original = choi_from_stinespring(&s, &limits).unwrap();
        let (a, b) = (sorted_singular_values(original.matrix()), sorted_singular_values(back.matrix()));
        let n = a.len().min(b.len());
        prop_assert!(a[..n].iter().zip(&b[..n]).all(|(x, y)| (x - y).abs() <= 1e-9));
        prop_assert!(a[n..].iter().chain(&b[n..]).all(|x| x.abs() <= 1e-9));
    }

    #[test]
    fn tensor_acts_on_products(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let (a, b) = (random_channel(&mut rng, 1), random_channel(&mut rng, 1));
        let (r, s) = (random_density_matrix(&mut rng, 2), random_density_matrix(&mut rng, 2));
        let limits = Limits::default();
        let ab = tensor(&a, &b, &limits).unwrap();
        let expected = tensor_product(&a.apply(&r).unwrap(), &b.apply(&s).unwrap(), &limits).unwrap();
        let got = ab.apply(&tensor_product(&r, &s, &limits).unwrap()).unwrap();
        prop_assert!(got.max_abs_diff(&expected) <= 1e-10);
    }
}

#[test]
fn complement_of_unitary_is_constant() {
    let mut c = channelforge::Circuit::identity(1);
    c.push(channelforge::Gate::H(0)).unwrap();
    let limits = Limits::default();
    let comp = complementary_channel(&c.compile(&limits).unwrap(), &limits).unwrap();
    assert_eq!((comp.dim_in(), comp.dim_out()), (2, 1));
    assert!(comp.matrix().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
}

#[test]
fn identity_and_constant_channels() {
    let id = ChoiMatrix::identity(2);
    let rho = random_density_matrix(&mut seeded(2), 2);
    assert!(id.apply(&rho).unwrap().max_abs_diff(&rho) < 1e-15);
    let sigma = random_density_matrix(&mut seeded(3), 3);
    let k = ChoiMatrix::constant(2, &sigma);
    assert!(k.is_cptp(1e-12));
    assert!(k.apply(&rho).unwrap().max_abs_diff(&sigma) < 1e-12);
}

#[test]
fn tensor_power_one_is_unchanged_and_cap_applies() {
    let j = random_channel(&mut seeded(4), 1);
    let limits = Limits::default();
    assert_eq!(tensor_power(&j, 1, &limits).unwrap(), j);
    assert!(tensor_power(&j, 0, &limits).is_err());
    assert!(tensor_power(&j, 3, &Limits::new(32)).is_err());
    let sq = tensor_power(&j, 2, &limits).unwrap();
    assert_eq!((sq.dim_in(), sq.dim_out()), (4, 4));
    assert!(sq.is_cptp(1e-10));
}

#[test]
fn choi_validation() {
    let not_tp = ComplexMatrix::identity(4).scale(2.0);
    let j = ChoiMatrix::new(not_tp, 2, 2).unwrap();
    assert!(!j.is_cptp(1e-6));
    assert!(ChoiMatrix::new(ComplexMatrix::identity(5), 2, 2).is_err());
    assert!(stinespring_from_choi(&j, 1e-8).is_err());
    let a = ChoiMatrix::identity(2);
    let b = ChoiMatrix::identity(3);
    assert!(compose(&a, &b).is_err());
}
