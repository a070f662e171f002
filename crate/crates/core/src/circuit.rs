//! Mixed-state circuits: unitary gates on labeled qubit wires plus the two
//! non-unitary pseudo-gates, ancilla introduction and trace-out.
//!
//! Input wires are labeled `0..input_qubits`; the k-th ancilla gets label
//! `input_qubits + k`. A label is retired permanently when its wire is traced
//! out. Labels double as register positions in the compiled unitary, so the
//! compiled register order is `[declared inputs][ancillas in introduction order]`.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, Limits, ONE, ZERO};

pub type Wire = usize;

/// Tolerance on `U†U = I` for matrix payloads.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    AncillaIntro,
    TraceOut,
    H,
    X,
    Cnot,
    Swap,
    ControlledBlock,
    UnitaryBlock,
}

impl GateKind {
    pub fn is_unitary(self) -> bool {
        !matches!(self, GateKind::AncillaIntro | GateKind::TraceOut)
    }

    /// Name used in circuit documents.
    pub fn tag(self) -> &'static str {
        match self {
            GateKind::AncillaIntro => "ancilla",
            GateKind::TraceOut => "traceout",
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Cnot => "cnot",
            GateKind::Swap => "swap",
            GateKind::ControlledBlock => "cu",
            GateKind::UnitaryBlock => "u",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "ancilla" => GateKind::AncillaIntro,
            "traceout" => GateKind::TraceOut,
            "h" => GateKind::H,
            "x" => GateKind::X,
            "cnot" => GateKind::Cnot,
            "swap" => GateKind::Swap,
            "cu" => GateKind::ControlledBlock,
            "u" => GateKind::UnitaryBlock,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    /// Introduces the wire with the given label in state `|0⟩`.
    Ancilla(Wire),
    TraceOut(Wire),
    H(Wire),
    X(Wire),
    Cnot {
        control: Wire,
        target: Wire,
    },
    Swap(Wire, Wire),
    /// Arbitrary unitary; the first target is the most significant qubit.
    Unitary {
        targets: Vec<Wire>,
        matrix: ComplexMatrix,
    },
    /// `matrix` applied to `targets` when every control wire is `|1⟩`.
    Controlled {
        controls: Vec<Wire>,
        targets: Vec<Wire>,
        matrix: ComplexMatrix,
    },
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        match self {
            Gate::Ancilla(_) => GateKind::AncillaIntro,
            Gate::TraceOut(_) => GateKind::TraceOut,
            Gate::H(_) => GateKind::H,
            Gate::X(_) => GateKind::X,
            Gate::Cnot { .. } => GateKind::Cnot,
            Gate::Swap(..) => GateKind::Swap,
            Gate::Unitary { .. } => GateKind::UnitaryBlock,
            Gate::Controlled { .. } => GateKind::ControlledBlock,
        }
    }

    /// Wires the gate acts on, controls excluded.
    pub fn targets(&self) -> Vec<Wire> {
        match self {
            Gate::Ancilla(w) | Gate::TraceOut(w) | Gate::H(w) | Gate::X(w) => vec![*w],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::Swap(a, b) => vec![*a, *b],
            Gate::Unitary { targets, .. } | Gate::Controlled { targets, .. } => targets.clone(),
        }
    }

    pub fn controls(&self) -> &[Wire] {
        match self {
            Gate::Controlled { controls, .. } => controls,
            _ => &[],
        }
    }

    fn wires(&self) -> Vec<Wire> {
        let mut w = self.controls().to_vec();
        w.extend(self.targets());
        w
    }

    fn relabel(&self, f: &impl Fn(Wire) -> Wire) -> Gate {
        match self {
            Gate::Ancilla(w) => Gate::Ancilla(f(*w)),
            Gate::TraceOut(w) => Gate::TraceOut(f(*w)),
            Gate::H(w) => Gate::H(f(*w)),
            Gate::X(w) => Gate::X(f(*w)),
            Gate::Cnot { control, target } => Gate::Cnot {
                control: f(*control),
                target: f(*target),
            },
            Gate::Swap(a, b) => Gate::Swap(f(*a), f(*b)),
            Gate::Unitary { targets, matrix } => Gate::Unitary {
                targets: targets.iter().map(|&w| f(w)).collect(),
                matrix: matrix.clone(),
            },
            Gate::Controlled {
                controls,
                targets,
                matrix,
            } => Gate::Controlled {
                controls: controls.iter().map(|&w| f(w)).collect(),
                targets: targets.iter().map(|&w| f(w)).collect(),
                matrix: matrix.clone(),
            },
        }
    }

    /// The unitary acting on `targets()` (controls not included).
    fn local_matrix(&self) -> Option<ComplexMatrix> {
        match self {
            Gate::Ancilla(_) | Gate::TraceOut(_) => None,
            Gate::H(_) => Some(hadamard()),
            Gate::X(_) => Some(pauli_x()),
            Gate::Cnot { .. } => Some(cnot_matrix()),
            Gate::Swap(..) => Some(swap_matrix()),
            Gate::Unitary { matrix, .. } | Gate::Controlled { matrix, .. } => Some(matrix.clone()),
        }
    }
}

pub fn hadamard() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[
        &[FRAC_1_SQRT_2, FRAC_1_SQRT_2],
        &[FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
    ])
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn cnot_matrix() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
        &[0.0, 0.0, 1.0, 0.0],
    ])
}

pub fn swap_matrix() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    input_qubits: usize,
    gates: Vec<Gate>,
    /// Explicit output order; `None` means live wires in ascending label order.
    outputs: Option<Vec<Wire>>,
}

impl Circuit {
    /// Validates and builds a circuit.
    pub fn new(input_qubits: usize, gates: Vec<Gate>, outputs: Option<Vec<Wire>>) -> Result<Self> {
        let c = Circuit {
            input_qubits,
            gates,
            outputs,
        };
        c.validate()?;
        Ok(c)
    }

    /// Empty circuit on `n` qubits (the identity channel).
    pub fn identity(n: usize) -> Self {
        Circuit {
            input_qubits: n,
            gates: vec![],
            outputs: None,
        }
    }

    pub fn input_qubits(&self) -> usize {
        self.input_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn explicit_outputs(&self) -> Option<&[Wire]> {
        self.outputs.as_deref()
    }

    pub fn ancilla_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, Gate::Ancilla(_)))
            .count()
    }

    pub fn total_wires(&self) -> usize {
        self.input_qubits + self.ancilla_count()
    }

    /// Traced wires in ascending label order.
    pub fn traced_wires(&self) -> Vec<Wire> {
        let set: BTreeSet<Wire> = self
            .gates
            .iter()
            .filter_map(|g| match g {
                Gate::TraceOut(w) => Some(*w),
                _ => None,
            })
            .collect();
        set.into_iter().collect()
    }

    /// Wires surviving to the output, in output order.
    pub fn output_wires(&self) -> Vec<Wire> {
        if let Some(o) = &self.outputs {
            return o.clone();
        }
        let traced: BTreeSet<Wire> = self.traced_wires().into_iter().collect();
        (0..self.total_wires())
            .filter(|w| !traced.contains(w))
            .collect()
    }

    pub fn output_qubits(&self) -> usize {
        self.total_wires() - self.traced_wires().len()
    }

    /// Builder-style append; validates the result.
    pub fn push(&mut self, gate: Gate) -> Result<()> {
        self.gates.push(gate);
        if let Err(e) = self.validate() {
            self.gates.pop();
            return Err(e);
        }
        Ok(())
    }

    /// Appends an ancilla and returns its label.
    pub fn add_ancilla(&mut self) -> Wire {
        let w = self.total_wires();
        self.gates.push(Gate::Ancilla(w));
        w
    }

    pub fn set_outputs(&mut self, outputs: Option<Vec<Wire>>) -> Result<()> {
        let old = std::mem::replace(&mut self.outputs, outputs);
        if let Err(e) = self.validate() {
            self.outputs = old;
            return Err(e);
        }
        Ok(())
    }

    /// Checks wire liveness, payload shapes and unitarity, and the output list.
    pub fn validate(&self) -> Result<()> {
        let mut live: BTreeSet<Wire> = (0..self.input_qubits).collect();
        let mut next_label = self.input_qubits;
        for (idx, gate) in self.gates.iter().enumerate() {
            let err = |message: String| Error::Circuit { gate: idx, message };
            match gate {
                Gate::Ancilla(w) => {
                    if *w != next_label {
                        return Err(err(format!(
                            "ancilla label {w} out of sequence, expected {next_label}"
                        )));
                    }
                    live.insert(*w);
                    next_label += 1;
                    continue;
                }
                Gate::TraceOut(w) => {
                    if !live.remove(w) {
                        return Err(err(format!("wire not live: {w}")));
                    }
                    continue;
                }
                _ => {}
            }
            let wires = gate.wires();
            for w in &wires {
                if !live.contains(w) {
                    return Err(err(format!("wire not live: {w}")));
                }
            }
            let distinct: BTreeSet<_> = wires.iter().collect();
            if distinct.len() != wires.len() {
                return Err(err(format!("gate wires must be distinct, got {wires:?}")));
            }
            if let Gate::Unitary { targets, matrix }
            | Gate::Controlled {
                targets, matrix, ..
            } = gate
            {
                if targets.is_empty() {
                    return Err(err("block gate needs at least one target".into()));
                }
                let dim = 1usize
                    .checked_shl(targets.len() as u32)
                    .filter(|&d| d > 0)
                    .ok_or_else(|| err("too many targets".into()))?;
                if matrix.rows() != dim || matrix.cols() != dim {
                    return Err(err(format!(
                        "matrix dimension mismatch: {}x{} payload for {} target(s)",
                        matrix.rows(),
                        matrix.cols(),
                        targets.len()
                    )));
                }
                let defect = matrix.unitarity_defect();
                if !(defect <= UNITARY_TOL) {
                    return Err(err(format!("matrix is not unitary (defect {defect:.3e})")));
                }
            }
        }
        if let Some(outputs) = &self.outputs {
            let listed: BTreeSet<Wire> = outputs.iter().copied().collect();
            if listed.len() != outputs.len() || listed != live {
                return Err(Error::Circuit {
                    gate: self.gates.len(),
                    message: format!(
                        "outputs {outputs:?} must list each live wire {:?} exactly once",
                        live.iter().collect::<Vec<_>>()
                    ),
                });
            }
        }
        Ok(())
    }

    /// Reorders the gate list into Stinespring form: every ancilla first,
    /// then the unitary gates in their original order, then every trace-out.
    pub fn normalize_to_stinespring(&self) -> Circuit {
        let (pseudo, unitary): (Vec<&Gate>, Vec<&Gate>) =
            self.gates.iter().partition(|g| !g.kind().is_unitary());
        let ancillas = pseudo.iter().filter(|g| matches!(g, Gate::Ancilla(_)));
        let traces = pseudo.iter().filter(|g| matches!(g, Gate::TraceOut(_)));
        let gates = ancillas
            .chain(unitary.iter())
            .chain(traces)
            .map(|g| (*g).clone())
            .collect();
        Circuit {
            input_qubits: self.input_qubits,
            gates,
            outputs: self.outputs.clone(),
        }
    }

    pub fn is_normalized(&self) -> bool {
        let rank = |g: &Gate| match g.kind() {
            GateKind::AncillaIntro => 0,
            GateKind::TraceOut => 2,
            _ => 1,
        };
        self.gates.windows(2).all(|w| rank(&w[0]) <= rank(&w[1]))
    }

    /// Equalizes input and output qubit counts with untouched wires: extra
    /// `|0⟩` outputs appended after the existing outputs, or extra inputs that
    /// are traced out at the end.
    pub fn pad_to_square(&self) -> Circuit {
        let n_in = self.input_qubits;
        let n_out = self.output_qubits();
        if n_in == n_out {
            return self.clone();
        }
        let mut outputs = self.output_wires();
        if n_in > n_out {
            let mut c = self.clone();
            for _ in 0..(n_in - n_out) {
                outputs.push(c.add_ancilla());
            }
            c.outputs = Some(outputs);
            return c;
        }
        let extra = n_out - n_in;
        let shift = |w: Wire| if w >= n_in { w + extra } else { w };
        let mut gates: Vec<Gate> = self.gates.iter().map(|g| g.relabel(&shift)).collect();
        gates.extend((n_in..n_in + extra).map(Gate::TraceOut));
        Circuit {
            input_qubits: n_out,
            gates,
            outputs: Some(outputs.into_iter().map(shift).collect()),
        }
    }

    /// Stinespring form of the channel this circuit implements.
    pub fn compile(&self, limits: &Limits) -> Result<StinespringRep> {
        compile_to_channel(self, limits)
    }
}

/// Unitary dilation of a channel. `u` acts on `A ⊗ E_anc` (ancilla register
/// starting in `|0…0⟩`) and its codomain is ordered `B ⊗ E_out`: the output
/// register first, the traced register second.
#[derive(Debug, Clone, PartialEq)]
pub struct StinespringRep {
    pub u: ComplexMatrix,
    pub dim_in: usize,
    pub dim_env_ancilla: usize,
    pub dim_out: usize,
    pub dim_env_out: usize,
    /// Circuit wire labels forming `B`, in order. Empty when the rep was not
    /// compiled from a circuit.
    pub output_wires: Vec<Wire>,
    /// Circuit wire labels forming `E_out`, in order.
    pub env_wires: Vec<Wire>,
}

impl StinespringRep {
    pub fn new(
        u: ComplexMatrix,
        dim_in: usize,
        dim_env_ancilla: usize,
        dim_out: usize,
        dim_env_out: usize,
    ) -> Result<Self> {
        let rep = StinespringRep {
            u,
            dim_in,
            dim_env_ancilla,
            dim_out,
            dim_env_out,
            output_wires: vec![],
            env_wires: vec![],
        };
        rep.validate()?;
        Ok(rep)
    }

    pub fn validate(&self) -> Result<()> {
        let total = self.dim_in * self.dim_env_ancilla;
        if total != self.dim_out * self.dim_env_out {
            return Err(Error::shape(format!(
                "register sizes disagree: {}·{} != {}·{}",
                self.dim_in, self.dim_env_ancilla, self.dim_out, self.dim_env_out
            )));
        }
        if self.u.rows() != total || self.u.cols() != total {
            return Err(Error::shape(format!(
                "unitary is {}x{}, registers need {total}",
                self.u.rows(),
                self.u.cols()
            )));
        }
        let defect = self.u.unitarity_defect();
        if !(defect <= UNITARY_TOL) {
            return Err(Error::contract(format!(
                "dilation is not unitary (defect {defect:.3e})"
            )));
        }
        Ok(())
    }

    /// The isometry `V = U (· ⊗ |0⟩)` from `A` into `B ⊗ E_out`.
    pub fn isometry(&self) -> ComplexMatrix {
        let total = self.u.rows();
        ComplexMatrix::from_fn(total, self.dim_in, |r, a| {
            self.u[(r, a * self.dim_env_ancilla)]
        })
    }

    /// The complementary rep: same unitary with the output and traced
    /// registers exchanged.
    pub fn complement(&self) -> StinespringRep {
        let (b, e) = (self.dim_out, self.dim_env_out);
        let n = self.u.rows();
        let mut u = ComplexMatrix::zeros(n, n);
        for bi in 0..b {
            for ei in 0..e {
                let src = bi * e + ei;
                let dst = ei * b + bi;
                for c in 0..n {
                    u[(dst, c)] = self.u[(src, c)];
                }
            }
        }
        StinespringRep {
            u,
            dim_in: self.dim_in,
            dim_env_ancilla: self.dim_env_ancilla,
            dim_out: e,
            dim_env_out: b,
            output_wires: self.env_wires.clone(),
            env_wires: self.output_wires.clone(),
        }
    }

    /// `ρ ↦ Tr_E U(ρ ⊗ |0⟩⟨0|)U*`, also accepting `ρ` on `A ⊗ F` (the channel
    /// then acts on the first factor).
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if !rho.is_square() || !rho.rows().is_multiple_of(self.dim_in) || rho.rows() == 0 {
            return Err(Error::shape(format!(
                "state of size {}x{} does not act on an input of dimension {}",
                rho.rows(),
                rho.cols(),
                self.dim_in
            )));
        }
        let f = rho.rows() / self.dim_in;
        let v = self.isometry();
        let (b, e) = (self.dim_out, self.dim_env_out);
        // (V ⊗ I_F) ρ (V ⊗ I_F)† traced over E.
        let vf = v.kron(&ComplexMatrix::identity(f));
        let full = vf.conjugate(rho);
        crate::linalg::partial_trace(&full, &[b, e, f], &[1])
    }
}

/// Amplitude update for one gate on an `n`-qubit register (wire `p` is bit
/// `n-1-p` of the basis index).
pub(crate) fn apply_gate(
    state: &mut [Complex64],
    n: usize,
    targets: &[Wire],
    controls: &[Wire],
    m: &ComplexMatrix,
) {
    let bit = |w: Wire| 1usize << (n - 1 - w);
    let target_mask: usize = targets.iter().map(|&w| bit(w)).sum();
    let control_mask: usize = controls.iter().map(|&w| bit(w)).sum();
    let k = targets.len();
    let sub = 1usize << k;
    let offsets: Vec<usize> = (0..sub)
        .map(|s| {
            targets
                .iter()
                .enumerate()
                .filter(|(i, _)| s & (1 << (k - 1 - i)) != 0)
                .map(|(_, &w)| bit(w))
                .sum()
        })
        .collect();
    let mut gathered = vec![ZERO; sub];
    for base in 0..state.len() {
        if base & target_mask != 0 || base & control_mask != control_mask {
            continue;
        }
        for (g, &off) in gathered.iter_mut().zip(&offsets) {
            *g = state[base | off];
        }
        for (r, &off) in offsets.iter().enumerate() {
            state[base | off] = m.row(r).iter().zip(&gathered).map(|(a, b)| a * b).sum();
        }
    }
}

/// Compiles a circuit to its Stinespring dilation.
///
/// Ancillas exist from the start and trace-outs are deferred, so the unitary
/// is the ordered product of the unitary gates on the full register
/// `[inputs][ancillas]`. The codomain is then permuted to `[outputs][traced]`.
pub fn compile_to_channel(c: &Circuit, limits: &Limits) -> Result<StinespringRep> {
    c.validate()?;
    let n = c.total_wires();
    let dim = 1usize
        .checked_shl(n as u32)
        .filter(|&d| d > 0)
        .ok_or(Error::SizeLimit {
            requested: usize::MAX,
            cap: limits.max_dim,
        })?;
    limits.check(dim)?;

    let ops: Vec<(Vec<Wire>, Vec<Wire>, ComplexMatrix)> = c
        .gates
        .iter()
        .filter_map(|g| {
            g.local_matrix()
                .map(|m| (g.targets(), g.controls().to_vec(), m))
        })
        .collect();

    let outputs = c.output_wires();
    let traced = c.traced_wires();
    let layout: Vec<Wire> = outputs.iter().chain(&traced).copied().collect();
    let bit = |w: Wire| 1usize << (n - 1 - w);
    // Row index after moving qubits into [outputs][traced] order.
    let permute_row = |idx: usize| -> usize {
        layout
            .iter()
            .fold(0, |acc, &w| (acc << 1) | usize::from(idx & bit(w) != 0))
    };

    let columns: Vec<Vec<Complex64>> = (0..dim)
        .into_par_iter()
        .map(|j| {
            let mut state = vec![ZERO; dim];
            state[j] = ONE;
            for (targets, controls, m) in &ops {
                apply_gate(&mut state, n, targets, controls, m);
            }
            let mut out = vec![ZERO; dim];
            for (idx, amp) in state.into_iter().enumerate() {
                out[permute_row(idx)] = amp;
            }
            out
        })
        .collect();

    let mut u = ComplexMatrix::zeros(dim, dim);
    for (j, col) in columns.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            u[(i, j)] = z;
        }
    }

    Ok(StinespringRep {
        u,
        dim_in: 1 << c.input_qubits,
        dim_env_ancilla: 1 << c.ancilla_count(),
        dim_out: 1 << outputs.len(),
        dim_env_out: 1 << traced.len(),
        output_wires: outputs,
        env_wires: traced,
    })
}
