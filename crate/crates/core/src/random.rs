//! Seeded random instances: Haar unitaries, states and mixed-state circuits.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::circuit::{Circuit, Gate, Wire};
use crate::linalg::ComplexMatrix;

/// The generator behind every seeded routine in the crate.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Uniformly random unit vector.
pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..d).map(|_| gaussian_complex(rng)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Full-rank random density matrix `G G† / tr(G G†)`.
pub fn random_density_matrix<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(d, d, |_, _| gaussian_complex(rng));
    let m = g.matmul(&g.dagger());
    let tr = m.trace().re;
    m.scale(1.0 / tr).hermitian_part()
}

/// Random Hermitian matrix with Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |_, _| gaussian_complex(rng)).hermitian_part()
}

/// Haar-random unitary via QR of a Ginibre matrix with the phases of `R`
/// divided out.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(d, d, |_, _| gaussian_complex(rng)).to_nalgebra();
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut u = ComplexMatrix::from_nalgebra(&q);
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..d {
            u[(i, j)] *= phase;
        }
    }
    // Re-orthonormalize away QR rounding so payloads pass the 1e-10 check.
    polish_unitary(&u)
}

fn polish_unitary(u: &ComplexMatrix) -> ComplexMatrix {
    // One Newton step toward the polar factor: U (3I − U†U) / 2.
    let n = u.rows();
    let g = u.dagger().matmul(u);
    let corr = &ComplexMatrix::identity(n).scale(3.0) - &g;
    u.matmul(&corr).scale(0.5)
}

/// Shape of a random mixed-state circuit.
#[derive(Debug, Clone, Copy)]
pub struct CircuitShape {
    pub input_qubits: usize,
    pub ancillas: usize,
    /// Qubits traced out by the end; `None` traces as many as were introduced
    /// (equal input and output counts).
    pub traced: Option<usize>,
    pub unitary_gates: usize,
    /// Largest arity of random `UnitaryBlock` gates.
    pub max_block_qubits: usize,
}

impl CircuitShape {
    pub fn square(input_qubits: usize, ancillas: usize, unitary_gates: usize) -> Self {
        CircuitShape {
            input_qubits,
            ancillas,
            traced: None,
            unitary_gates,
            max_block_qubits: 2,
        }
    }
}

/// Random circuit with ancilla introductions and trace-outs interleaved among
/// the unitary gates. A traced wire is never touched again.
pub fn random_circuit<R: Rng + ?Sized>(rng: &mut R, shape: CircuitShape) -> Circuit {
    let traced_target = shape.traced.unwrap_or(shape.ancillas);
    assert!(
        traced_target < shape.input_qubits + shape.ancillas,
        "a circuit must keep at least one output qubit"
    );
    let mut events: Vec<u8> = std::iter::repeat_n(0u8, shape.ancillas)
        .chain(std::iter::repeat_n(1u8, traced_target))
        .chain(std::iter::repeat_n(2u8, shape.unitary_gates))
        .collect();
    events.shuffle(rng);

    let mut c = Circuit::identity(shape.input_qubits);
    let mut live: Vec<Wire> = (0..shape.input_qubits).collect();
    let mut deferred = 0;
    let trace_one = |c: &mut Circuit, live: &mut Vec<Wire>, rng: &mut R| {
        let w = live.remove(rng.random_range(0..live.len()));
        c.push(Gate::TraceOut(w)).expect("live wire");
    };
    for event in events {
        match event {
            0 => live.push(c.add_ancilla()),
            // Never trace the last live wire mid-circuit.
            1 if live.len() <= 1 => deferred += 1,
            1 => trace_one(&mut c, &mut live, rng),
            _ => {
                let gate = random_gate(rng, &live, shape.max_block_qubits);
                c.push(gate).expect("random gate on live wires");
            }
        }
    }
    for _ in 0..deferred {
        trace_one(&mut c, &mut live, rng);
    }
    c
}

fn choose_distinct<R: Rng + ?Sized>(rng: &mut R, live: &[Wire], k: usize) -> Vec<Wire> {
    let mut pool = live.to_vec();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let idx = rng.random_range(0..pool.len());
        out.push(pool.swap_remove(idx));
    }
    out
}

fn random_gate<R: Rng + ?Sized>(rng: &mut R, live: &[Wire], max_block: usize) -> Gate {
    let n = live.len();
    let choice = if n >= 2 {
        rng.random_range(0..6)
    } else {
        rng.random_range(0..3)
    };
    match choice {
        0 => Gate::H(live[rng.random_range(0..n)]),
        1 => Gate::X(live[rng.random_range(0..n)]),
        2 => {
            let t = live[rng.random_range(0..n)];
            Gate::Unitary {
                targets: vec![t],
                matrix: random_unitary(rng, 2),
            }
        }
        3 => {
            let w = choose_distinct(rng, live, 2);
            Gate::Cnot {
                control: w[0],
                target: w[1],
            }
        }
        4 => {
            let k = rng.random_range(1..=max_block.clamp(1, n));
            let targets = choose_distinct(rng, live, k);
            Gate::Unitary {
                matrix: random_unitary(rng, 1 << k),
                targets,
            }
        }
        _ => {
            let w = choose_distinct(rng, live, 2);
            if rng.random_bool(0.5) {
                Gate::Swap(w[0], w[1])
            } else {
                Gate::Controlled {
                    controls: vec![w[0]],
                    targets: vec![w[1]],
                    matrix: random_unitary(rng, 2),
                }
            }
        }
    }
}
