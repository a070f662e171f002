//! Embeddings of an arbitrary channel `Φ` into a degradable channel `Ψ` and
//! an antidegradable channel `Λ`, each with its explicit mate:
//!
//! ```text
//! Ψ(ρ) = ½|0⟩⟨0| ⊗ ρ     + ½|1⟩⟨1| ⊗ Φ(ρ)     mate Δ with Δ ∘ Ψ = Ψᶜ
//! Λ(ρ) = ½|0⟩⟨0| ⊗ |0⟩⟨0| + ½|1⟩⟨1| ⊗ Φ(ρ)     mate A with A ∘ Λᶜ = Λ
//! ```
//!
//! Outputs are ordered `[flag][A]`. The environment is `[copy][E]` for `Ψ`
//! and `[copy][R][E]` for `Λ`, where `R` is the register the input is
//! swapped into. Both mates reuse the compiled dilation unitary of `Φ`
//! unchanged, so the mate identities hold as exact matrix equalities.

use serde::{Deserialize, Serialize};

use crate::channel::{choi_from_stinespring, complementary_channel, compose};
use crate::circuit::{swap_matrix, Circuit, Gate, Wire};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, Limits};

/// Largest number of offending entries listed in a report.
const MAX_OFFENDING: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Degradable,
    Antidegradable,
}

impl Flavor {
    pub fn as_str(self) -> &'static str {
        match self {
            Flavor::Degradable => "degradable",
            Flavor::Antidegradable => "antidegradable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingResult {
    pub embedded: Circuit,
    pub mate: Circuit,
    pub flavor: Flavor,
    /// Wire label of the flag qubit in `embedded`.
    pub flag_wire: Wire,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub flavor: Flavor,
    pub passed: bool,
    pub max_deviation: f64,
    pub tol: f64,
    /// Choi-matrix entries `(row, col)` deviating by more than `tol`, worst first.
    pub offending: Vec<(usize, usize)>,
}

/// Padded source circuit and its dilation unitary on `[A][E]`.
struct Dilation {
    n: usize,
    m: usize,
    u: ComplexMatrix,
}

fn dilate(phi: &Circuit, limits: &Limits) -> Result<Dilation> {
    let padded = phi.pad_to_square();
    let rep = padded.compile(limits)?;
    Ok(Dilation {
        n: padded.input_qubits(),
        m: padded.ancilla_count(),
        u: rep.u,
    })
}

fn check_wires(wires: usize, limits: &Limits) -> Result<()> {
    let dim = u32::try_from(wires)
        .ok()
        .and_then(|w| 1usize.checked_shl(w))
        .filter(|&d| d > 0)
        .ok_or(Error::SizeLimit {
            requested: usize::MAX,
            cap: limits.max_dim,
        })?;
    limits.check(dim)
}

fn controlled(control: Wire, targets: Vec<Wire>, matrix: ComplexMatrix) -> Gate {
    Gate::Controlled {
        controls: vec![control],
        targets,
        matrix,
    }
}

fn controlled_swaps(control: Wire, left: &[Wire], right: &[Wire]) -> Vec<Gate> {
    left.iter()
        .zip(right)
        .map(|(&l, &r)| controlled(control, vec![l, r], swap_matrix()))
        .collect()
}

fn range(start: usize, len: usize) -> Vec<Wire> {
    (start..start + len).collect()
}

pub fn degradable_embedding(phi: &Circuit) -> Result<EmbeddingResult> {
    degradable_embedding_with_limits(phi, &Limits::default())
}

/// `Ψ`: flag in `|+⟩`, controlled dilation of `Φ`, flag copied and the copy
/// traced with `E`. Mate `Δ` on `[flag][A]`: fresh `E`, flag flipped,
/// controlled dilation, `A` traced.
pub fn degradable_embedding_with_limits(phi: &Circuit, limits: &Limits) -> Result<EmbeddingResult> {
    let Dilation { n, m, u } = dilate(phi, limits)?;
    check_wires(n + m + 2, limits)?;

    let a = range(0, n);
    let flag = n;
    let copy = n + 1;
    let env = range(n + 2, m);
    let mut gates: Vec<Gate> = [flag, copy]
        .iter()
        .chain(&env)
        .map(|&w| Gate::Ancilla(w))
        .collect();
    gates.push(Gate::H(flag));
    gates.push(controlled(
        flag,
        [a.clone(), env.clone()].concat(),
        u.clone(),
    ));
    gates.push(Gate::Cnot {
        control: flag,
        target: copy,
    });
    gates.extend([copy].iter().chain(&env).map(|&w| Gate::TraceOut(w)));
    let embedded = Circuit::new(n, gates, Some([vec![flag], a].concat()))?;

    let mate_flag = 0;
    let mate_a = range(1, n);
    let mate_env = range(n + 1, m);
    let mut gates: Vec<Gate> = mate_env.iter().map(|&w| Gate::Ancilla(w)).collect();
    gates.push(Gate::X(mate_flag));
    gates.push(controlled(
        mate_flag,
        [mate_a.clone(), mate_env.clone()].concat(),
        u,
    ));
    gates.extend(mate_a.iter().map(|&w| Gate::TraceOut(w)));
    let mate = Circuit::new(n + 1, gates, Some([vec![mate_flag], mate_env].concat()))?;

    Ok(EmbeddingResult {
        embedded,
        mate,
        flavor: Flavor::Degradable,
        flag_wire: flag,
    })
}

pub fn antidegradable_embedding(phi: &Circuit) -> Result<EmbeddingResult> {
    antidegradable_embedding_with_limits(phi, &Limits::default())
}

/// `Λ`: flag in `|+⟩`, controlled swap of the input into a fresh `R`, flag
/// flipped, controlled dilation, flag copied; copy, `R` and `E` traced.
/// Mate on `[copy][R][E]`: flag flipped, controlled dilation on `R ⊗ E`,
/// controlled swap of `R` into a fresh output register, `R` and `E` traced.
pub fn antidegradable_embedding_with_limits(
    phi: &Circuit,
    limits: &Limits,
) -> Result<EmbeddingResult> {
    let Dilation { n, m, u } = dilate(phi, limits)?;
    check_wires(2 * n + m + 2, limits)?;

    let a = range(0, n);
    let flag = n;
    let copy = n + 1;
    let swapped = range(n + 2, n);
    let env = range(2 * n + 2, m);
    let fresh = [flag, copy]
        .into_iter()
        .chain(swapped.iter().copied())
        .chain(env.iter().copied());
    let mut gates: Vec<Gate> = fresh.map(Gate::Ancilla).collect();
    gates.push(Gate::H(flag));
    gates.extend(controlled_swaps(flag, &a, &swapped));
    gates.push(Gate::X(flag));
    gates.push(controlled(
        flag,
        [a.clone(), env.clone()].concat(),
        u.clone(),
    ));
    gates.push(Gate::Cnot {
        control: flag,
        target: copy,
    });
    gates.extend(
        [copy]
            .iter()
            .chain(&swapped)
            .chain(&env)
            .map(|&w| Gate::TraceOut(w)),
    );
    let embedded = Circuit::new(n, gates, Some([vec![flag], a].concat()))?;

    let mate_flag = 0;
    let mate_r = range(1, n);
    let mate_env = range(n + 1, m);
    let out = range(n + m + 1, n);
    let mut gates: Vec<Gate> = out.iter().map(|&w| Gate::Ancilla(w)).collect();
    gates.push(Gate::X(mate_flag));
    gates.push(controlled(
        mate_flag,
        [mate_r.clone(), mate_env.clone()].concat(),
        u,
    ));
    gates.extend(controlled_swaps(mate_flag, &mate_r, &out));
    gates.extend(mate_r.iter().chain(&mate_env).map(|&w| Gate::TraceOut(w)));
    let mate = Circuit::new(1 + n + m, gates, Some([vec![mate_flag], out].concat()))?;

    Ok(EmbeddingResult {
        embedded,
        mate,
        flavor: Flavor::Antidegradable,
        flag_wire: flag,
    })
}

/// Checks `Choi(Δ ∘ Ψ) = Choi(Ψᶜ)` entrywise.
pub fn verify_degrading(e: &EmbeddingResult, tol: f64) -> Result<VerificationReport> {
    if e.flavor != Flavor::Degradable {
        return Err(Error::contract(
            "verify_degrading needs a degradable-flavor embedding",
        ));
    }
    verify_with_limits(e, tol, &Limits::default())
}

/// Checks `Choi(A ∘ Λᶜ) = Choi(Λ)` entrywise.
pub fn verify_antidegrading(e: &EmbeddingResult, tol: f64) -> Result<VerificationReport> {
    if e.flavor != Flavor::Antidegradable {
        return Err(Error::contract(
            "verify_antidegrading needs an antidegradable-flavor embedding",
        ));
    }
    verify_with_limits(e, tol, &Limits::default())
}

/// Runs the mate identity matching `e.flavor`.
pub fn verify_with_limits(
    e: &EmbeddingResult,
    tol: f64,
    limits: &Limits,
) -> Result<VerificationReport> {
    if !(tol >= 0.0) {
        return Err(Error::contract(format!(
            "tolerance must be non-negative, got {tol}"
        )));
    }
    let rep = e.embedded.compile(limits)?;
    let channel = choi_from_stinespring(&rep, limits)?;
    let complement = complementary_channel(&rep, limits)?;
    let mate = choi_from_stinespring(&e.mate.compile(limits)?, limits)?;
    let (inner, expected) = match e.flavor {
        Flavor::Degradable => (&channel, &complement),
        Flavor::Antidegradable => (&complement, &channel),
    };
    if mate.dim_in() != inner.dim_out() || mate.dim_out() != expected.dim_out() {
        return Err(Error::shape(format!(
            "mate maps dimension {} to {}, the identity needs {} to {}",
            mate.dim_in(),
            mate.dim_out(),
            inner.dim_out(),
            expected.dim_out()
        )));
    }
    let got = compose(&mate, inner)?;
    Ok(compare(e.flavor, got.matrix(), expected.matrix(), tol))
}

fn compare(
    flavor: Flavor,
    got: &ComplexMatrix,
    expected: &ComplexMatrix,
    tol: f64,
) -> VerificationReport {
    let mut bad: Vec<(f64, (usize, usize))> = Vec::new();
    let mut max_deviation: f64 = 0.0;
    for r in 0..got.rows() {
        for c in 0..got.cols() {
            let d = (got[(r, c)] - expected[(r, c)]).norm();
            max_deviation = max_deviation.max(d);
            if d > tol {
                bad.push((d, (r, c)));
            }
        }
    }
    bad.sort_by(|x, y| y.0.total_cmp(&x.0));
    VerificationReport {
        flavor,
        passed: bad.is_empty(),
        max_deviation,
        tol,
        offending: bad
            .into_iter()
            .take(MAX_OFFENDING)
            .map(|(_, rc)| rc)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChoiMatrix;
    use crate::linalg::ComplexMatrix;

    fn x_circuit() -> Circuit {
        Circuit::new(1, vec![Gate::X(0)], None).unwrap()
    }

    fn apply(c: &Circuit, rho: &ComplexMatrix) -> ComplexMatrix {
        c.compile(&Limits::default()).unwrap().apply(rho).unwrap()
    }

    fn half_mixture(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
        let p0 = ComplexMatrix::basis_projector(2, 0).kron(a);
        let p1 = ComplexMatrix::basis_projector(2, 1).kron(b);
        (&p0 + &p1).scale(0.5)
    }

    #[test]
    fn identity_embedding_is_half_identity() {
        let e = degradable_embedding(&Circuit::identity(1)).unwrap();
        assert_eq!(e.embedded.output_qubits(), 2);
        let rep = e.embedded.compile(&Limits::default()).unwrap();
        let choi = choi_from_stinespring(&rep, &Limits::default()).unwrap();
        // Input A, output [C][A]: J = Σ|i⟩⟨j| ⊗ I/2 ⊗ |i⟩⟨j|.
        let expected = ChoiMatrix::identity(2).into_matrix();
        let expected = crate::linalg::permute_subsystems(
            &ComplexMatrix::identity(2).scale(0.5).kron(&expected),
            &[2, 2, 2],
            &[1, 0, 2],
        )
        .unwrap();
        assert!(choi.matrix().max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn x_embeddings_on_zero() {
        let zero = ComplexMatrix::basis_projector(2, 0);
        let one = ComplexMatrix::basis_projector(2, 1);
        let e = degradable_embedding(&x_circuit()).unwrap();
        assert!(apply(&e.embedded, &zero).max_abs_diff(&half_mixture(&zero, &one)) < 1e-12);
        let e = antidegradable_embedding(&x_circuit()).unwrap();
        assert!(apply(&e.embedded, &zero).max_abs_diff(&half_mixture(&zero, &one)) < 1e-12);
    }

    #[test]
    fn mates_verify_exactly() {
        for phi in [Circuit::identity(1), x_circuit()] {
            let r = verify_degrading(&degradable_embedding(&phi).unwrap(), 1e-9).unwrap();
            assert!(r.passed && r.max_deviation < 1e-12, "{r:?}");
            let r = verify_antidegrading(&antidegradable_embedding(&phi).unwrap(), 1e-9).unwrap();
            assert!(r.passed && r.max_deviation < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn corrupted_mate_fails() {
        use crate::random::{random_circuit, seeded, CircuitShape};
        let mut rng = seeded(5);
        let phi = random_circuit(&mut rng, CircuitShape::square(1, 1, 4));
        let mut e = degradable_embedding(&phi).unwrap();
        let gates: Vec<Gate> = e
            .mate
            .gates()
            .iter()
            .filter(|g| !matches!(g, Gate::X(_)))
            .cloned()
            .collect();
        e.mate = Circuit::new(
            e.mate.input_qubits(),
            gates,
            e.mate.explicit_outputs().map(|o| o.to_vec()),
        )
        .unwrap();
        let r = verify_degrading(&e, 1e-9).unwrap();
        assert!(!r.passed);
        assert!(r.max_deviation > 0.1);
        assert!(!r.offending.is_empty());
    }

    #[test]
    fn flavor_mismatch_is_rejected() {
        let e = degradable_embedding(&Circuit::identity(1)).unwrap();
        assert!(verify_antidegrading(&e, 1e-9).is_err());
    }

    #[test]
    fn size_cap_is_enforced() {
        let limits = Limits::new(8);
        assert!(matches!(
            antidegradable_embedding_with_limits(&Circuit::identity(1), &limits),
            Err(Error::SizeLimit { .. })
        ));
    }
}
