//! JSON documents for circuits, channels, embeddings and solver results.
//!
//! Complex matrices are flat row-major lists of `[re, im]` pairs. Doubles are
//! written in shortest round-trip form and parsed exactly, so
//! `parse(serialize(x)) == x` bit for bit.

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::channel::ChoiMatrix;
use crate::circuit::{Circuit, Gate, GateKind, StinespringRep, Wire};
use crate::degradability::FeasibilityReport;
use crate::dnorm::DiamondNormResult;
use crate::embed::{EmbeddingResult, Flavor};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

pub const CIRCUIT_VERSION: u32 = 1;

pub type MatrixDoc = Vec<[f64; 2]>;

pub fn matrix_to_doc(m: &ComplexMatrix) -> MatrixDoc {
    m.data().iter().map(|z| [z.re, z.im]).collect()
}

/// Square matrix from a flat entry list.
pub fn matrix_from_doc(doc: &[[f64; 2]]) -> Result<ComplexMatrix> {
    let n = doc.len().isqrt();
    if n * n != doc.len() || n == 0 {
        return Err(Error::shape(format!(
            "matrix dimension mismatch: {} entries do not form a square matrix",
            doc.len()
        )));
    }
    let data = doc.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
    ComplexMatrix::from_vec(n, n, data)
}

/// Deserializes with the failing path and line in the error location.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Parse {
            location: format!("{path} (line {}, column {})", inner.line(), inner.column()),
            message: strip_position(&inner.to_string()),
        }
    })?;
    de.end().map_err(|e| Error::Parse {
        location: format!(". (line {}, column {})", e.line(), e.column()),
        message: strip_position(&e.to_string()),
    })?;
    Ok(value)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("documents contain only finite numbers")
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("documents contain only finite numbers")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateDoc {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub controls: Vec<Wire>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub targets: Vec<Wire>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitDoc {
    pub version: u32,
    pub input_qubits: usize,
    pub gates: Vec<GateDoc>,
    /// Output order; omitted means live wires in ascending label order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Vec<Wire>>,
}

impl From<&Circuit> for CircuitDoc {
    fn from(c: &Circuit) -> Self {
        let gates = c
            .gates()
            .iter()
            .map(|g| {
                let (targets, matrix) = match g {
                    Gate::Ancilla(_) => (vec![], None),
                    Gate::Unitary { targets, matrix }
                    | Gate::Controlled {
                        targets, matrix, ..
                    } => (targets.clone(), Some(matrix_to_doc(matrix))),
                    other => (other.targets(), None),
                };
                GateDoc {
                    kind: g.kind().tag().to_string(),
                    controls: g.controls().to_vec(),
                    targets,
                    matrix,
                }
            })
            .collect();
        CircuitDoc {
            version: CIRCUIT_VERSION,
            input_qubits: c.input_qubits(),
            gates,
            outputs: c.explicit_outputs().map(|o| o.to_vec()),
        }
    }
}

impl CircuitDoc {
    pub fn to_circuit(&self) -> Result<Circuit> {
        if self.version != CIRCUIT_VERSION {
            return Err(Error::Parse {
                location: "version".into(),
                message: format!(
                    "unsupported circuit version {}, expected {CIRCUIT_VERSION}",
                    self.version
                ),
            });
        }
        let mut next_label = self.input_qubits;
        let mut gates = Vec::with_capacity(self.gates.len());
        for (idx, doc) in self.gates.iter().enumerate() {
            let gate = gate_from_doc(doc, idx, &mut next_label)?;
            gates.push(gate);
        }
        Circuit::new(self.input_qubits, gates, self.outputs.clone())
    }
}

fn gate_from_doc(doc: &GateDoc, idx: usize, next_label: &mut Wire) -> Result<Gate> {
    let at = |field: &str| format!("gates[{idx}].{field}");
    let kind = GateKind::from_tag(&doc.kind).ok_or_else(|| Error::Parse {
        location: at("kind"),
        message: format!("unknown gate kind {:?}", doc.kind),
    })?;
    let fail = |field: &str, message: String| Error::Parse {
        location: at(field),
        message,
    };
    let takes_matrix = matches!(kind, GateKind::UnitaryBlock | GateKind::ControlledBlock);
    if !takes_matrix && doc.matrix.is_some() {
        return Err(fail("matrix", format!("{} gates take no matrix", doc.kind)));
    }
    if kind != GateKind::ControlledBlock && !doc.controls.is_empty() {
        return Err(fail(
            "controls",
            format!("{} gates take no controls", doc.kind),
        ));
    }
    let arity = |n: usize| -> Result<()> {
        if doc.targets.len() == n {
            Ok(())
        } else {
            Err(fail(
                "targets",
                format!(
                    "{} gates take {n} target(s), got {}",
                    doc.kind,
                    doc.targets.len()
                ),
            ))
        }
    };
    let matrix = || -> Result<ComplexMatrix> {
        let m = doc
            .matrix
            .as_ref()
            .ok_or_else(|| fail("matrix", format!("{} gates need a matrix", doc.kind)))?;
        matrix_from_doc(m).map_err(|e| Error::Circuit {
            gate: idx,
            message: match e {
                Error::Shape(msg) => msg,
                other => other.to_string(),
            },
        })
    };
    let t = &doc.targets;
    Ok(match kind {
        GateKind::AncillaIntro => {
            let label = *next_label;
            if t.len() > 1 || t.first().is_some_and(|&w| w != label) {
                return Err(fail(
                    "targets",
                    format!("ancilla introduces wire {label}, got {t:?}"),
                ));
            }
            *next_label += 1;
            Gate::Ancilla(label)
        }
        GateKind::TraceOut => {
            arity(1)?;
            Gate::TraceOut(t[0])
        }
        GateKind::H => {
            arity(1)?;
            Gate::H(t[0])
        }
        GateKind::X => {
            arity(1)?;
            Gate::X(t[0])
        }
        GateKind::Cnot => {
            arity(2)?;
            Gate::Cnot {
                control: t[0],
                target: t[1],
            }
        }
        GateKind::Swap => {
            arity(2)?;
            Gate::Swap(t[0], t[1])
        }
        GateKind::UnitaryBlock => Gate::Unitary {
            targets: t.clone(),
            matrix: matrix()?,
        },
        GateKind::ControlledBlock => {
            if doc.controls.is_empty() {
                return Err(fail(
                    "controls",
                    "cu gates need at least one control".into(),
                ));
            }
            Gate::Controlled {
                controls: doc.controls.clone(),
                targets: t.clone(),
                matrix: matrix()?,
            }
        }
    })
}

pub fn parse_circuit(text: &str) -> Result<Circuit> {
    from_json::<CircuitDoc>(text)?.to_circuit()
}

pub fn serialize_circuit(c: &Circuit) -> String {
    to_json(&CircuitDoc::from(c))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoiDoc {
    pub dim_in: usize,
    pub dim_out: usize,
    pub matrix: MatrixDoc,
}

impl From<&ChoiMatrix> for ChoiDoc {
    fn from(c: &ChoiMatrix) -> Self {
        ChoiDoc {
            dim_in: c.dim_in(),
            dim_out: c.dim_out(),
            matrix: matrix_to_doc(c.matrix()),
        }
    }
}

impl ChoiDoc {
    pub fn to_choi(&self) -> Result<ChoiMatrix> {
        let m = matrix_from_doc(&self.matrix).map_err(|e| Error::Parse {
            location: "matrix".into(),
            message: e.to_string(),
        })?;
        ChoiMatrix::new(m, self.dim_in, self.dim_out).map_err(|e| Error::Parse {
            location: "matrix".into(),
            message: e.to_string(),
        })
    }
}

pub fn parse_choi(text: &str) -> Result<ChoiMatrix> {
    from_json::<ChoiDoc>(text)?.to_choi()
}

pub fn serialize_choi(c: &ChoiMatrix) -> String {
    to_json(&ChoiDoc::from(c))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StinespringDoc {
    pub dim_in: usize,
    pub dim_env_ancilla: usize,
    pub dim_out: usize,
    pub dim_env_out: usize,
    pub output_wires: Vec<Wire>,
    pub env_wires: Vec<Wire>,
    pub u: MatrixDoc,
}

impl From<&StinespringRep> for StinespringDoc {
    fn from(s: &StinespringRep) -> Self {
        StinespringDoc {
            dim_in: s.dim_in,
            dim_env_ancilla: s.dim_env_ancilla,
            dim_out: s.dim_out,
            dim_env_out: s.dim_env_out,
            output_wires: s.output_wires.clone(),
            env_wires: s.env_wires.clone(),
            u: matrix_to_doc(&s.u),
        }
    }
}

impl StinespringDoc {
    pub fn to_rep(&self) -> Result<StinespringRep> {
        let u = matrix_from_doc(&self.u)?;
        let mut rep = StinespringRep::new(
            u,
            self.dim_in,
            self.dim_env_ancilla,
            self.dim_out,
            self.dim_env_out,
        )?;
        rep.output_wires = self.output_wires.clone();
        rep.env_wires = self.env_wires.clone();
        Ok(rep)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingDoc {
    pub flavor: Flavor,
    pub flag_wire: Wire,
    pub embedded: CircuitDoc,
    pub mate: CircuitDoc,
}

impl From<&EmbeddingResult> for EmbeddingDoc {
    fn from(e: &EmbeddingResult) -> Self {
        EmbeddingDoc {
            flavor: e.flavor,
            flag_wire: e.flag_wire,
            embedded: CircuitDoc::from(&e.embedded),
            mate: CircuitDoc::from(&e.mate),
        }
    }
}

impl EmbeddingDoc {
    pub fn to_embedding(&self) -> Result<EmbeddingResult> {
        Ok(EmbeddingResult {
            embedded: self.embedded.to_circuit()?,
            mate: self.mate.to_circuit()?,
            flavor: self.flavor,
            flag_wire: self.flag_wire,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessDoc {
    pub dim: usize,
    pub matrix: MatrixDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiamondNormDoc {
    pub value: f64,
    pub primal_bound: f64,
    pub dual_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessDoc>,
    pub iterations: usize,
}

impl DiamondNormDoc {
    pub fn new(r: &DiamondNormResult, with_witness: bool) -> Self {
        DiamondNormDoc {
            value: r.value,
            primal_bound: r.primal_bound,
            dual_bound: r.dual_bound,
            witness: with_witness.then(|| WitnessDoc {
                dim: r.witness.rows(),
                matrix: matrix_to_doc(&r.witness),
            }),
            iterations: r.iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityDoc {
    pub feasible: bool,
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infeasibility_margin: Option<f64>,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<ChoiDoc>,
}

impl FeasibilityDoc {
    pub fn new(r: &FeasibilityReport, with_certificate: bool) -> Self {
        FeasibilityDoc {
            feasible: r.feasible,
            residual: r.residual.is_finite().then_some(r.residual),
            infeasibility_margin: r.infeasibility_margin,
            iterations: r.iterations,
            certificate: if with_certificate {
                r.certificate.as_ref().map(ChoiDoc::from)
            } else {
                None
            },
        }
    }
}
