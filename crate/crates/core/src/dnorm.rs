//! Certified diamond-norm distances between channels, and the quantities
//! derived from them: one-shot identification probability, the bounds for
//! k parallel uses, repetition parameters, and the promise-problem decision.
//!
//! For the difference `Ξ = Φ1 − Φ2` of two channels with Choi matrix `J`,
//!
//! ```text
//! ‖Ξ‖◇ / 2 = max ⟨J, W⟩  s.t.  0 ⪯ W ⪯ ρ ⊗ I_B,  ρ ⪰ 0,  tr ρ = 1
//!          = min λ_max(Tr_B Y)  s.t.  Y ⪰ J,  Y ⪰ 0.
//! ```
//!
//! Bounds are certified independently of solver accuracy. The lower bound is
//! the output trace distance at an explicit input state on `A ⊗ F`
//! (`dim F = dim A`). The upper bound comes from a dual point shifted by a
//! multiple of the identity until it is exactly feasible.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_choi, ChannelPair};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, Limits};
use crate::random::{random_pure_state, seeded};
use crate::sdp::{self, Problem, SparseHermitian, Status};

pub const DEFAULT_TOL: f64 = 1e-7;
pub const MAX_ITERATIONS: usize = 500;

/// Input channels must be CPTP to this tolerance.
const CHANNEL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct DiamondNormResult {
    pub value: f64,
    pub primal_bound: f64,
    pub dual_bound: f64,
    /// Density matrix on `A ⊗ F` whose output trace distance is `primal_bound`.
    pub witness: ComplexMatrix,
    pub iterations: usize,
}

/// Bounds on `‖Φ1^{⊗k} − Φ2^{⊗k}‖◇` given `‖Φ1 − Φ2‖◇ = delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepetitionBounds {
    pub lower: f64,
    pub upper: f64,
    pub k: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Yes,
    No,
    Indeterminate,
}

impl Decision {
    /// Classifies a certified value against the promise thresholds.
    pub fn classify(value: f64, a: f64, b: f64, tol: f64) -> Decision {
        if value >= a - tol {
            Decision::Yes
        } else if value <= b + tol {
            Decision::No
        } else {
            Decision::Indeterminate
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Yes => "yes",
            Decision::No => "no",
            Decision::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremParameters {
    pub k: usize,
    pub epsilon: f64,
}

/// Builds the primal SDP over blocks `[W, ρ, S]` with `ρ ⊗ I − W − S = 0`.
fn build_problem(j: &ComplexMatrix, da: usize, db: usize) -> Problem {
    let n = da * db;
    let mut p = Problem::new(vec![n, da, n]);
    p.cost[0] = -&j.hermitian_part();
    let one = Complex64::new(1.0, 0.0);
    let i_unit = Complex64::new(0.0, 1.0);
    for k in 0..n {
        for l in k..n {
            let (a, b) = (k / db, k % db);
            let (a2, b2) = (l / db, l % db);
            let units: &[Complex64] = if k == l { &[one] } else { &[one, i_unit] };
            for &v in units {
                let mut on_ab = SparseHermitian::new();
                on_ab.add_hermitian(k, l, -v);
                let mut on_rho = SparseHermitian::new();
                if b == b2 {
                    on_rho.add_hermitian(a, a2, v);
                }
                p.add_constraint(vec![(0, on_ab.clone()), (1, on_rho), (2, on_ab)], 0.0);
            }
        }
    }
    let mut tr = SparseHermitian::new();
    for a in 0..da {
        tr.add_hermitian(a, a, one);
    }
    p.add_constraint(vec![(1, tr)], 1.0);
    p
}

/// Input state on `A ⊗ F` with `A`-marginal `σᵀ`, purifying `σ` so that its
/// output distance equals `‖(√σ ⊗ I) J (√σ ⊗ I)‖₁`.
fn witness_state(sigma: &ComplexMatrix) -> ComplexMatrix {
    let root = linalg::psd_sqrt(sigma);
    let d = sigma.rows();
    let mut psi = Vec::with_capacity(d * d);
    for i in 0..d {
        for jj in 0..d {
            psi.push(root[(jj, i)]);
        }
    }
    ComplexMatrix::projector(&psi)
}

fn normalized_state(rho: &ComplexMatrix) -> ComplexMatrix {
    let p = linalg::psd_projection(rho);
    let tr = p.trace().re;
    if tr > 1e-300 && tr.is_finite() {
        p.scale(1.0 / tr)
    } else {
        ComplexMatrix::identity(rho.rows()).scale(1.0 / rho.rows() as f64)
    }
}

/// `‖(Ξ ⊗ id_F)(state)‖₁` for the difference map with Choi matrix `j`.
pub fn output_distance(
    j: &ComplexMatrix,
    da: usize,
    db: usize,
    state: &ComplexMatrix,
) -> Result<f64> {
    linalg::trace_norm(&apply_choi(j, da, db, state)?)
}

/// Exactly feasible dual point from a solver estimate: `Y + c I` with the
/// smallest `c ≥ 0` making it dominate both `J` and `0`.
fn dual_upper_bound(j: &ComplexMatrix, y: &ComplexMatrix, da: usize, db: usize) -> f64 {
    let y = y.hermitian_part();
    let shift_j = -linalg::eig_of_hermitian_part(&(&y - j)).min();
    let shift_0 = -linalg::eig_of_hermitian_part(&y).min();
    let c = shift_j.max(shift_0).max(0.0);
    let reduced = linalg::partial_trace(&y, &[da, db], &[1]).expect("dims match");
    let lmax = linalg::eig_of_hermitian_part(&reduced).max();
    2.0 * (lmax + c * db as f64)
}

fn check_pair(pair: &ChannelPair, limits: &Limits) -> Result<()> {
    limits.check_product(&[pair.dim_in(), pair.dim_out()])?;
    for (name, c) in [("first", &pair.first), ("second", &pair.second)] {
        let defect = c.cptp_defect();
        if !(defect <= CHANNEL_TOL) {
            return Err(Error::contract(format!(
                "{name} map is not a channel (CPTP defect {defect:.3e})"
            )));
        }
    }
    Ok(())
}

/// `‖Φ1 − Φ2‖◇` with primal and dual certificates at most `tol` apart.
pub fn diamond_norm(pair: &ChannelPair, tol: f64) -> Result<DiamondNormResult> {
    diamond_norm_with_limits(pair, tol, &Limits::default())
}

pub fn diamond_norm_with_limits(
    pair: &ChannelPair,
    tol: f64,
    limits: &Limits,
) -> Result<DiamondNormResult> {
    if !(tol > 0.0) {
        return Err(Error::contract(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    check_pair(pair, limits)?;
    let (da, db) = (pair.dim_in(), pair.dim_out());
    let j = pair.difference().hermitian_part();

    if j.max_abs() == 0.0 {
        let witness = witness_state(&ComplexMatrix::identity(da).scale(1.0 / da as f64));
        return Ok(DiamondNormResult {
            value: 0.0,
            primal_bound: 0.0,
            dual_bound: 0.0,
            witness,
            iterations: 0,
        });
    }

    let problem = build_problem(&j, da, db);
    let opts = sdp::Options {
        max_iter: MAX_ITERATIONS,
        gap_tol: 0.0,
        feas_tol: 0.0,
    };

    let mut best_primal = (f64::NEG_INFINITY, ComplexMatrix::zeros(0, 0));
    // Two channels are never further apart than 2.
    let mut best_dual: f64 = 2.0;
    let mut last_iteration = 0;
    let solution = sdp::solve_until(&problem, &opts, |it| {
        last_iteration = it.iteration;
        let witness = witness_state(&normalized_state(&it.x[1]));
        if let Ok(lower) = output_distance(&j, da, db, &witness) {
            if lower > best_primal.0 {
                best_primal = (lower, witness);
            }
        }
        let y = -&problem.adjoint(&it.y)[2];
        best_dual = best_dual.min(dual_upper_bound(&j, &y, da, db));
        best_dual - best_primal.0 <= tol
    });

    let (primal, witness) = best_primal;
    let gap = best_dual - primal;
    if !(gap <= tol) {
        return Err(Error::NonConvergence {
            iterations: last_iteration.max(solution.iterate.iteration),
            primal,
            dual: best_dual,
            residual: gap,
        });
    }
    debug_assert!(solution.status != Status::IterationLimit || gap <= tol);
    let value = if primal > best_dual {
        primal
    } else {
        0.5 * (primal + best_dual)
    };
    Ok(DiamondNormResult {
        value,
        primal_bound: primal,
        dual_bound: best_dual.max(value),
        witness,
        iterations: solution.iterate.iteration,
    })
}

/// Optimal probability of identifying one of two channels from one use.
pub fn identification_probability(value: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&value) {
        return Err(Error::contract(format!(
            "diamond-norm distance {value} outside [0, 2]"
        )));
    }
    Ok(0.5 + value / 4.0)
}

/// `(2 − 2 exp(−k δ² / 8), k δ)`.
pub fn repetition_bounds(delta: f64, k: usize) -> Result<RepetitionBounds> {
    if !(delta > 0.0) {
        return Err(Error::contract(format!(
            "delta must be positive, got {delta}"
        )));
    }
    if k == 0 {
        return Err(Error::contract("k must be a positive integer"));
    }
    let kf = k as f64;
    Ok(RepetitionBounds {
        lower: 2.0 - 2.0 * (-kf * delta * delta / 8.0).exp(),
        upper: kf * delta,
        k,
        delta,
    })
}

fn theorem_inequalities_hold(a: f64, b: f64, k: usize, eps: f64) -> bool {
    let kf = k as f64;
    2.0 - 2.0 * (-kf * (1.0 - 2.0 * eps) / 8.0).exp() > a && kf * eps < b
}

/// Number of copies `k = ⌈−16 ln(1 − a/2)⌉` and per-copy slack
/// `ε = min(1/4, b/k)` (nudged below `b/k` so that `kε < b` strictly).
pub fn theorem_parameters(a: f64, b: f64) -> Result<TheoremParameters> {
    if !(0.0 < b && b < a && a < 2.0) {
        return Err(Error::contract(format!(
            "need 0 < b < a < 2, got a={a}, b={b}"
        )));
    }
    let mut k = ((-16.0 * (1.0 - a / 2.0).ln()).ceil() as usize).max(1);
    loop {
        let kf = k as f64;
        let mut eps = (b / kf).min(0.25);
        while kf * eps >= b {
            eps = eps.next_down();
        }
        if theorem_inequalities_hold(a, b, k, eps) {
            return Ok(TheoremParameters { k, epsilon: eps });
        }
        // Only reachable when the ceiling is exact and ε = 1/4.
        k += 1;
    }
}

/// Promise-problem decision from a certified diamond-norm value.
pub fn decide_qcd(pair: &ChannelPair, a: f64, b: f64, tol: f64) -> Result<Decision> {
    if !(0.0 <= b && b < a && a <= 2.0) {
        return Err(Error::contract(format!(
            "need 0 <= b < a <= 2, got a={a}, b={b}"
        )));
    }
    if !(tol > 0.0 && tol < (a - b) / 2.0) {
        return Err(Error::contract(format!(
            "tolerance {tol} must be below half the promise gap"
        )));
    }
    let result = diamond_norm(pair, tol)?;
    Ok(Decision::classify(result.value, a, b, tol))
}

/// Best output trace distance over `samples` random pure inputs on `A ⊗ F`.
/// A lower bound on the diamond norm by construction.
pub fn sampled_lower_bound(pair: &ChannelPair, samples: usize, seed: u64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::contract("need at least one sample"));
    }
    let (da, db) = (pair.dim_in(), pair.dim_out());
    let j = pair.difference();
    let mut rng = seeded(seed);
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        let psi = random_pure_state(&mut rng, da * da);
        let state = ComplexMatrix::projector(&psi);
        best = best.max(output_distance(&j, da, db, &state)?);
    }
    Ok(best)
}
