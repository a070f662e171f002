//! Semidefinite tests for degradability and antidegradability.
//!
//! Both questions ask for a channel `M` with `M ∘ S = T` for fixed channels
//! `S` (source) and `T` (target) sharing an input: `(Φ, Φᶜ)` for
//! degradability, `(Φᶜ, Φ)` for antidegradability. Writing `D` for the Choi
//! matrix of `M` and `L(D)` for the Choi matrix of `M ∘ S`, we solve
//!
//! ```text
//! min s  s.t.  L(D) − T ⪯ s I,  Tr_out D = I,  D ⪰ 0,  s ≥ 0.
//! ```
//!
//! `L(D) − T` is traceless whenever `D` is trace preserving, so `s = 0`
//! exactly when an exact mate exists. A feasible answer carries a CPTP
//! certificate whose composition residual is measured directly; an
//! infeasible answer carries a dual lower bound on `s` that holds for every
//! channel `M`.
//!
//! Before solving, the source output and target output are compressed to the
//! supports of their output marginals. Every output of a channel lives
//! there, so the compressed problem is equivalent and the certificate is
//! lifted back at the end.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{choi_from_stinespring, complementary_channel, compose, ChoiMatrix};
use crate::circuit::StinespringRep;
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, Limits, ONE, ZERO};
use crate::sdp::{self, Problem, SparseHermitian};

pub const DEFAULT_TOL: f64 = 1e-7;
pub const MAX_ITERATIONS: usize = 200;

/// Relative eigenvalue cutoff for the output supports.
const SUPPORT_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Choi matrix of the mate found, when feasible.
    pub certificate: Option<ChoiMatrix>,
    /// Largest entry of `Choi(M ∘ S) − Choi(T)` at the best point found.
    pub residual: f64,
    /// Certified lower bound on `min_M λ_max(Choi(M ∘ S) − Choi(T))`, when
    /// infeasible.
    pub infeasibility_margin: Option<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    Degradable,
    Antidegradable,
}

/// Is there a CPTP `Δ` with `Δ ∘ Φ = Φᶜ`?
pub fn test_degradable(s: &StinespringRep, tol: f64) -> Result<FeasibilityReport> {
    test_property(s, Property::Degradable, tol, &Limits::default())
}

/// Is there a CPTP `A` with `A ∘ Φᶜ = Φ`?
pub fn test_antidegradable(s: &StinespringRep, tol: f64) -> Result<FeasibilityReport> {
    test_property(s, Property::Antidegradable, tol, &Limits::default())
}

pub fn test_property(
    s: &StinespringRep,
    property: Property,
    tol: f64,
    limits: &Limits,
) -> Result<FeasibilityReport> {
    let channel = choi_from_stinespring(s, limits)?;
    let complement = complementary_channel(s, limits)?;
    match property {
        Property::Degradable => find_mate(&channel, &complement, tol, limits),
        Property::Antidegradable => find_mate(&complement, &channel, tol, limits),
    }
}

/// Searches for a channel `M` with `M ∘ source = target`.
pub fn find_mate(
    source: &ChoiMatrix,
    target: &ChoiMatrix,
    tol: f64,
    limits: &Limits,
) -> Result<FeasibilityReport> {
    if !(tol > 0.0) {
        return Err(Error::contract(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if source.dim_in() != target.dim_in() {
        return Err(Error::shape(format!(
            "source and target inputs differ: {} vs {}",
            source.dim_in(),
            target.dim_in()
        )));
    }
    limits.check_product(&[source.dim_out(), target.dim_out()])?;
    let da = source.dim_in();

    let vx = support_isometry(&source.output_marginal());
    let vy = support_isometry(&target.output_marginal());
    let (rx, ry) = (vx.cols(), vy.cols());
    let src = compress(source.matrix(), da, &vx);
    let tgt = compress(target.matrix(), da, &vy);
    let reduced = Reduced {
        da,
        rx,
        ry,
        src,
        tgt,
    };
    let problem = reduced.problem();
    let n_res = (da * ry) * (da * ry);

    let opts = sdp::Options {
        max_iter: MAX_ITERATIONS,
        gap_tol: 0.0,
        feas_tol: 0.0,
    };
    let stop_residual = 0.01 * tol;
    let mut best: Option<(f64, ComplexMatrix)> = None;
    let mut lower = f64::NEG_INFINITY;
    let mut last_iteration = 0;
    let mut upper = f64::INFINITY;
    sdp::solve_until(&problem, &opts, |it| {
        last_iteration = it.iteration;
        if let Some(d) = repair_channel(&it.x[0], rx, ry) {
            let r = reduced.residual(&d);
            if best.as_ref().is_none_or(|(b, _)| r < *b) {
                best = Some((r, d));
            }
        }
        upper = upper.min(it.x[2][(0, 0)].re);
        lower = lower.max(reduced.dual_bound(&it.y[..n_res], &it.y[n_res..]));
        let found = best.as_ref().is_some_and(|(r, _)| *r <= stop_residual);
        let refuted = lower > tol && upper - lower <= 1e-6 * upper.max(1.0);
        found || refuted
    });

    if let Some((_, d)) = &best {
        let certificate = lift(d, &vx, &vy)?;
        let residual = compose(&certificate, source)?
            .matrix()
            .max_abs_diff(target.matrix());
        if residual <= tol {
            return Ok(FeasibilityReport {
                feasible: true,
                certificate: Some(certificate),
                residual,
                infeasibility_margin: None,
                iterations: last_iteration,
            });
        }
    }
    let residual = best.as_ref().map_or(f64::INFINITY, |(r, _)| *r);
    if lower > tol {
        return Ok(FeasibilityReport {
            feasible: false,
            certificate: None,
            residual,
            infeasibility_margin: Some(lower),
            iterations: last_iteration,
        });
    }
    Err(Error::NonConvergence {
        iterations: last_iteration,
        primal: upper,
        dual: lower,
        residual,
    })
}

/// Orthonormal basis (as columns) of the range of a PSD matrix.
fn support_isometry(m: &ComplexMatrix) -> ComplexMatrix {
    let eig = linalg::eig_of_hermitian_part(m);
    let cutoff = SUPPORT_CUTOFF * eig.max().max(1.0);
    let keep: Vec<usize> = (0..eig.values.len())
        .filter(|&k| eig.values[k] > cutoff)
        .collect();
    let keep = if keep.is_empty() {
        vec![eig.values.len() - 1]
    } else {
        keep
    };
    ComplexMatrix::from_fn(m.rows(), keep.len(), |r, c| eig.vectors[(r, keep[c])])
}

/// `(I_A ⊗ V)† J (I_A ⊗ V)`
fn compress(j: &ComplexMatrix, da: usize, v: &ComplexMatrix) -> ComplexMatrix {
    let k = ComplexMatrix::identity(da).kron(v);
    k.dagger().matmul(j).matmul(&k)
}

/// Choi matrix of `X ↦ V_Y M(V_X† X V_X) V_Y† + tr((I − V_X V_X†) X) |0⟩⟨0|`.
fn lift(d: &ComplexMatrix, vx: &ComplexMatrix, vy: &ComplexMatrix) -> Result<ChoiMatrix> {
    let (dx, dy) = (vx.rows(), vy.rows());
    let k = vx.conj().kron(vy);
    let mut m = k.matmul(d).matmul(&k.dagger());
    let leak = &ComplexMatrix::identity(dx) - &vx.matmul(&vx.dagger());
    for x in 0..dx {
        for x2 in 0..dx {
            m[(x * dy, x2 * dy)] += leak[(x2, x)];
        }
    }
    ChoiMatrix::new(m.hermitian_part(), dx, dy)
}

/// Nearest-in-spirit exact channel: PSD projection, then the congruence
/// `(M^{-1/2} ⊗ I)` that restores `Tr_out D = I`.
fn repair_channel(d: &ComplexMatrix, dx: usize, dy: usize) -> Option<ComplexMatrix> {
    let p = linalg::psd_projection(d);
    let marginal = linalg::partial_trace(&p, &[dx, dy], &[1]).ok()?;
    let eig = linalg::eig_of_hermitian_part(&marginal);
    if !(eig.min() > 1e-12) {
        return None;
    }
    let k = eig
        .reconstruct_with(|l| 1.0 / l.sqrt())
        .kron(&ComplexMatrix::identity(dy));
    Some(k.matmul(&p).matmul(&k).hermitian_part())
}

/// Hermitian basis of `n × n` matrices in constraint order: diagonal units,
/// then for each `k < l` the real and imaginary off-diagonal pairs.
fn hermitian_basis(n: usize) -> Vec<(usize, usize, Complex64)> {
    let mut out = Vec::with_capacity(n * n);
    for k in 0..n {
        for l in k..n {
            out.push((k, l, ONE));
            if k != l {
                out.push((k, l, Complex64::new(0.0, 1.0)));
            }
        }
    }
    out
}

fn basis_combination(n: usize, basis: &[(usize, usize, Complex64)], y: &[f64]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    for (&(k, l, v), &yi) in basis.iter().zip(y) {
        if k == l {
            m[(k, k)] += v.re * yi;
        } else {
            m[(k, l)] += v * yi;
            m[(l, k)] += v.conj() * yi;
        }
    }
    m
}

struct Reduced {
    da: usize,
    rx: usize,
    ry: usize,
    /// Source Choi on `A ⊗ X`.
    src: ComplexMatrix,
    /// Target Choi on `A ⊗ Y`.
    tgt: ComplexMatrix,
}

impl Reduced {
    /// Blocks `[D, P, s]` with `s I − L(D) − P = −T` and `Tr_Y D = I`.
    fn problem(&self) -> Problem {
        let (da, rx, ry) = (self.da, self.rx, self.ry);
        let n = da * ry;
        let mut p = Problem::new(vec![rx * ry, n, 1]);
        p.cost[2][(0, 0)] = ONE;

        for (k, l, v) in hermitian_basis(n) {
            let mut on_p = SparseHermitian::new();
            on_p.add_hermitian(k, l, -v);
            let rhs = on_p.inner(&self.tgt);
            let mut on_s = SparseHermitian::new();
            if k == l {
                on_s.add_hermitian(0, 0, ONE);
            }
            p.add_constraint(
                vec![(0, self.minus_adjoint_unit(k, l, v)), (1, on_p), (2, on_s)],
                rhs,
            );
        }
        for (x, x2, v) in hermitian_basis(rx) {
            let mut on_d = SparseHermitian::new();
            for y in 0..ry {
                on_d.add_hermitian(x * ry + y, x2 * ry + y, v);
            }
            p.add_constraint(vec![(0, on_d)], if x == x2 { 1.0 } else { 0.0 });
        }
        p
    }

    /// `−L*(H)` for `H = v E_kl + conj(v) E_lk`.
    fn minus_adjoint_unit(&self, k: usize, l: usize, v: Complex64) -> SparseHermitian {
        let (rx, ry) = (self.rx, self.ry);
        let (a, y) = (k / ry, k % ry);
        let (a2, y2) = (l / ry, l % ry);
        let mut out = SparseHermitian::new();
        for x in 0..rx {
            for x2 in 0..rx {
                let w = -v * self.src[(a * rx + x, a2 * rx + x2)].conj();
                let (r, c) = (x * ry + y, x2 * ry + y2);
                out.push_raw(r, c, w);
                if k != l {
                    out.push_raw(c, r, w.conj());
                }
            }
        }
        out
    }

    /// `L(D) = Choi(M ∘ S)` on `A ⊗ Y`.
    fn link(&self, d: &ComplexMatrix) -> ComplexMatrix {
        let (da, rx, ry) = (self.da, self.rx, self.ry);
        let mut out = ComplexMatrix::zeros(da * ry, da * ry);
        for a in 0..da {
            for a2 in 0..da {
                for x in 0..rx {
                    for x2 in 0..rx {
                        let w = self.src[(a * rx + x, a2 * rx + x2)];
                        if w == ZERO {
                            continue;
                        }
                        for y in 0..ry {
                            for y2 in 0..ry {
                                out[(a * ry + y, a2 * ry + y2)] +=
                                    w * d[(x * ry + y, x2 * ry + y2)];
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// `L*(W)` on `X ⊗ Y`.
    fn adjoint(&self, w: &ComplexMatrix) -> ComplexMatrix {
        let (da, rx, ry) = (self.da, self.rx, self.ry);
        let mut out = ComplexMatrix::zeros(rx * ry, rx * ry);
        for a in 0..da {
            for a2 in 0..da {
                for x in 0..rx {
                    for x2 in 0..rx {
                        let j = self.src[(a * rx + x, a2 * rx + x2)].conj();
                        if j == ZERO {
                            continue;
                        }
                        for y in 0..ry {
                            for y2 in 0..ry {
                                out[(x * ry + y, x2 * ry + y2)] +=
                                    j * w[(a * ry + y, a2 * ry + y2)];
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn residual(&self, d: &ComplexMatrix) -> f64 {
        self.link(d).max_abs_diff(&self.tgt)
    }

    /// Lower bound on the optimal `s` from an arbitrary dual estimate, made
    /// exactly feasible: `W ⪰ 0` with `tr W ≤ 1`, and `Z` shifted until
    /// `L*(W) ⪰ Z ⊗ I`.
    fn dual_bound(&self, y_res: &[f64], y_tp: &[f64]) -> f64 {
        let n = self.da * self.ry;
        let w = basis_combination(n, &hermitian_basis(n), y_res);
        let mut w = linalg::psd_projection(&w);
        let tr = w.trace().re;
        if tr > 1.0 {
            w = w.scale(1.0 / tr);
        }
        let z = basis_combination(self.rx, &hermitian_basis(self.rx), y_tp);
        let slack = &self.adjoint(&w) - &z.kron(&ComplexMatrix::identity(self.ry));
        let shift = (-linalg::eig_of_hermitian_part(&slack).min()).max(0.0);
        z.trace().re - shift * self.rx as f64 - w.inner(&self.tgt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;

    fn depolarizing() -> StinespringRep {
        use crate::circuit::Gate;
        let mut c = Circuit::identity(1);
        let a1 = c.add_ancilla();
        let a2 = c.add_ancilla();
        c.push(Gate::H(a1)).unwrap();
        c.push(Gate::Cnot {
            control: a1,
            target: a2,
        })
        .unwrap();
        c.push(Gate::Swap(0, a1)).unwrap();
        c.push(Gate::TraceOut(a1)).unwrap();
        c.push(Gate::TraceOut(a2)).unwrap();
        c.compile(&Limits::default()).unwrap()
    }

    #[test]
    fn identity_is_degradable_not_antidegradable() {
        let s = Circuit::identity(1).compile(&Limits::default()).unwrap();
        let r = test_degradable(&s, DEFAULT_TOL).unwrap();
        assert!(r.feasible, "{r:?}");
        let cert = r.certificate.unwrap();
        assert!(cert.is_cptp(1e-8));
        let r = test_antidegradable(&s, DEFAULT_TOL).unwrap();
        assert!(!r.feasible);
        assert!(r.infeasibility_margin.unwrap() > DEFAULT_TOL);
    }

    #[test]
    fn depolarizing_is_antidegradable_not_degradable() {
        let s = depolarizing();
        let half = ComplexMatrix::identity(2).scale(0.5);
        let out = s.apply(&ComplexMatrix::basis_projector(2, 0)).unwrap();
        assert!(out.max_abs_diff(&half) < 1e-12);
        let r = test_antidegradable(&s, DEFAULT_TOL).unwrap();
        assert!(r.feasible, "{r:?}");
        assert!(r.residual <= 1e-8);
        let r = test_degradable(&s, DEFAULT_TOL).unwrap();
        assert!(!r.feasible, "{r:?}");
    }

    #[test]
    fn lift_is_cptp_and_agrees_on_support() {
        let vx = ComplexMatrix::from_fn(2, 1, |r, _| if r == 0 { ONE } else { ZERO });
        let vy = ComplexMatrix::identity(2);
        let d = ComplexMatrix::from_real_diagonal(&[0.5, 0.5]);
        let lifted = lift(&d, &vx, &vy).unwrap();
        assert!(lifted.is_cptp(1e-12));
        let out = lifted.apply(&ComplexMatrix::basis_projector(2, 0)).unwrap();
        assert!(out.max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);
    }
}
