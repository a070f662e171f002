//! Dense primal-dual interior-point solver for complex semidefinite programs
//! in standard block form:
//!
//! ```text
//! primal:  min Σ_b ⟨C_b, X_b⟩   s.t.  Σ_b ⟨A_ib, X_b⟩ = b_i,   X_b ⪰ 0
//! dual:    max bᵀy               s.t.  C_b − Σ_i y_i A_ib = S_b ⪰ 0
//! ```
//!
//! Every block is a Hermitian matrix and `⟨A, X⟩ = Re tr(A X)`. Iterates may
//! start infeasible. Search directions are HKM with a Mehrotra
//! predictor-corrector step.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::linalg::{self, ComplexMatrix, ZERO};

/// Sparse Hermitian matrix stored as its full entry list.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseHermitian {
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseHermitian {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `v` at `(i, j)` and `conj(v)` at `(j, i)`. On the diagonal only the
    /// real part is kept.
    pub fn add_hermitian(&mut self, i: usize, j: usize, v: Complex64) {
        if i == j {
            if v.re != 0.0 {
                self.entries.push((i, i, Complex64::new(v.re, 0.0)));
            }
        } else if v != ZERO {
            self.entries.push((i, j, v));
            self.entries.push((j, i, v.conj()));
        }
    }

    /// Adds a raw entry; the caller keeps the matrix Hermitian.
    pub fn push_raw(&mut self, i: usize, j: usize, v: Complex64) {
        if v != ZERO {
            self.entries.push((i, j, v));
        }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    /// `Re tr(self · x)`
    pub fn inner(&self, x: &ComplexMatrix) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| (v * x[(j, i)]).re)
            .sum()
    }

    fn add_scaled_to(&self, out: &mut ComplexMatrix, s: f64) {
        for &(i, j, v) in &self.entries {
            out[(i, j)] += v * s;
        }
    }

    pub fn to_dense(&self, n: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(n, n);
        self.add_scaled_to(&mut m, 1.0);
        m
    }
}

/// One scalar equality constraint `Σ_b ⟨A_b, X_b⟩ = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, SparseHermitian)>,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub block_dims: Vec<usize>,
    /// Hermitian cost per block.
    pub cost: Vec<ComplexMatrix>,
    pub constraints: Vec<Constraint>,
}

impl Problem {
    pub fn new(block_dims: Vec<usize>) -> Self {
        let cost = block_dims
            .iter()
            .map(|&n| ComplexMatrix::zeros(n, n))
            .collect();
        Problem {
            block_dims,
            cost,
            constraints: vec![],
        }
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, SparseHermitian)>, rhs: f64) {
        let terms = terms.into_iter().filter(|(_, a)| !a.is_empty()).collect();
        self.constraints.push(Constraint { terms, rhs });
    }

    /// `A(X)`
    pub fn apply(&self, x: &[ComplexMatrix]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| c.terms.iter().map(|(b, a)| a.inner(&x[*b])).sum())
            .collect()
    }

    /// `A*(y)`
    pub fn adjoint(&self, y: &[f64]) -> Vec<ComplexMatrix> {
        let mut out: Vec<ComplexMatrix> = self
            .block_dims
            .iter()
            .map(|&n| ComplexMatrix::zeros(n, n))
            .collect();
        for (c, &yi) in self.constraints.iter().zip(y) {
            if yi == 0.0 {
                continue;
            }
            for (b, a) in &c.terms {
                a.add_scaled_to(&mut out[*b], yi);
            }
        }
        out
    }

    pub fn objective(&self, x: &[ComplexMatrix]) -> f64 {
        self.cost.iter().zip(x).map(|(c, x)| c.inner(x)).sum()
    }

    pub fn dual_objective(&self, y: &[f64]) -> f64 {
        self.constraints
            .iter()
            .zip(y)
            .map(|(c, yi)| c.rhs * yi)
            .sum()
    }

    fn rhs(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| c.rhs).collect()
    }

    fn total_dim(&self) -> usize {
        self.block_dims.iter().sum()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub max_iter: usize,
    /// Target on `|pobj − dobj| / (1 + |pobj| + |dobj|)`.
    pub gap_tol: f64,
    /// Target on the relative primal and dual residuals.
    pub feas_tol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            max_iter: 500,
            gap_tol: 1e-9,
            feas_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    IterationLimit,
    /// Factorization failed or the steps collapsed; the last good iterate is kept.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct Iterate {
    pub x: Vec<ComplexMatrix>,
    pub y: Vec<f64>,
    pub s: Vec<ComplexMatrix>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub iteration: usize,
}

impl Iterate {
    pub fn relative_gap(&self) -> f64 {
        (self.primal_objective - self.dual_objective).abs()
            / (1.0 + self.primal_objective.abs() + self.dual_objective.abs())
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: Status,
    pub iterate: Iterate,
}

fn inner_blocks(a: &[ComplexMatrix], b: &[ComplexMatrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.inner(y)).sum()
}

fn cholesky(m: &ComplexMatrix) -> Option<nalgebra::Cholesky<Complex64, nalgebra::Dyn>> {
    m.hermitian_part().to_nalgebra().cholesky()
}

fn hermitian_inverse(m: &ComplexMatrix) -> Option<ComplexMatrix> {
    let inv = cholesky(m)?.inverse();
    Some(ComplexMatrix::from_nalgebra(&inv).hermitian_part())
}

/// Largest `α` with `x + α d ⪰ 0` (infinite if `d ⪰ 0`), for `x ≻ 0`.
fn max_step(x: &ComplexMatrix, d: &ComplexMatrix) -> Option<f64> {
    let chol = cholesky(x)?;
    let l = chol.l();
    let dn = d.hermitian_part().to_nalgebra();
    let left = l.solve_lower_triangular(&dn)?;
    let w = l.solve_lower_triangular(&left.adjoint())?;
    let w = ComplexMatrix::from_nalgebra(&w);
    let lmin = linalg::eig_of_hermitian_part(&w).min();
    Some(if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    })
}

/// For each block, the constraints touching it: `(constraint index, matrix)`.
fn block_index(p: &Problem) -> Vec<Vec<(usize, &SparseHermitian)>> {
    let mut idx: Vec<Vec<(usize, &SparseHermitian)>> = vec![vec![]; p.block_dims.len()];
    for (i, c) in p.constraints.iter().enumerate() {
        for (b, a) in &c.terms {
            idx[*b].push((i, a));
        }
    }
    idx
}

/// Schur complement `M_ij = Σ_b ⟨A_ib, X_b A_jb Z_b⟩`.
fn schur_complement(
    p: &Problem,
    index: &[Vec<(usize, &SparseHermitian)>],
    x: &[ComplexMatrix],
    z: &[ComplexMatrix],
) -> DMatrix<f64> {
    let m = p.constraints.len();
    let columns: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut col = vec![0.0; m];
            for (b, aj) in &p.constraints[j].terms {
                let n = p.block_dims[*b];
                let (xb, zb) = (&x[*b], &z[*b]);
                let nnz = aj.nnz();
                let g = if nnz * n <= n * n + nnz {
                    // Σ v X[:, r] Z[c, :] over the entries (r, c, v) of A_j.
                    let mut g = ComplexMatrix::zeros(n, n);
                    for &(r, c, v) in aj.entries() {
                        for row in 0..n {
                            let xv = xb[(row, r)] * v;
                            if xv == ZERO {
                                continue;
                            }
                            for (gk, zk) in g.data_mut()[row * n..(row + 1) * n]
                                .iter_mut()
                                .zip(zb.row(c))
                            {
                                *gk += xv * zk;
                            }
                        }
                    }
                    g
                } else {
                    let mut xa = ComplexMatrix::zeros(n, n);
                    for &(r, c, v) in aj.entries() {
                        for row in 0..n {
                            xa[(row, c)] += xb[(row, r)] * v;
                        }
                    }
                    xa.matmul(zb)
                };
                for &(i, ai) in &index[*b] {
                    col[i] += ai.inner(&g);
                }
            }
            col
        })
        .collect();
    let mut out = DMatrix::<f64>::zeros(m, m);
    for (j, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    (&out + out.transpose()) * 0.5
}

struct Factored {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

fn factor_schur(mut m: DMatrix<f64>) -> Option<Factored> {
    let n = m.nrows();
    let scale = (0..n)
        .map(|i| m[(i, i)].abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    for attempt in 0..4 {
        if let Some(chol) = m.clone().cholesky() {
            return Some(Factored { chol });
        }
        let bump = scale * 1e-14 * 100f64.powi(attempt);
        for i in 0..n {
            m[(i, i)] += bump;
        }
    }
    None
}

struct Direction {
    dx: Vec<ComplexMatrix>,
    dy: Vec<f64>,
    ds: Vec<ComplexMatrix>,
}

/// Solves for the direction with complementarity target
/// `ΔX + X ΔS Z = h` (then symmetrized).
fn direction(
    p: &Problem,
    schur: &Factored,
    x: &[ComplexMatrix],
    z: &[ComplexMatrix],
    rp: &[f64],
    rd: &[ComplexMatrix],
    h: &[ComplexMatrix],
) -> Direction {
    // M Δy = rp − A(h − X Rd Z)
    let t: Vec<ComplexMatrix> = (0..x.len())
        .map(|b| &h[b] - &x[b].matmul(&rd[b]).matmul(&z[b]))
        .collect();
    let at = p.apply(&t);
    let rhs = nalgebra::DVector::from_iterator(rp.len(), rp.iter().zip(&at).map(|(r, a)| r - a));
    let dy: Vec<f64> = schur.chol.solve(&rhs).iter().copied().collect();
    let aty = p.adjoint(&dy);
    let ds: Vec<ComplexMatrix> = rd.iter().zip(&aty).map(|(r, a)| r - a).collect();
    let dx: Vec<ComplexMatrix> = (0..x.len())
        .map(|b| (&h[b] - &x[b].matmul(&ds[b]).matmul(&z[b])).hermitian_part())
        .collect();
    Direction { dx, dy, ds }
}

fn step_lengths(x: &[ComplexMatrix], s: &[ComplexMatrix], d: &Direction) -> Option<(f64, f64)> {
    let mut ap = f64::INFINITY;
    let mut ad = f64::INFINITY;
    for b in 0..x.len() {
        ap = ap.min(max_step(&x[b], &d.dx[b])?);
        ad = ad.min(max_step(&s[b], &d.ds[b])?);
    }
    Some((ap, ad))
}

fn initial_point(p: &Problem) -> (Vec<ComplexMatrix>, Vec<f64>, Vec<ComplexMatrix>) {
    let index = block_index(p);
    let mut x = Vec::with_capacity(p.block_dims.len());
    let mut s = Vec::with_capacity(p.block_dims.len());
    for (b, &n) in p.block_dims.iter().enumerate() {
        let nf = n as f64;
        let mut xi: f64 = 10f64.max(nf.sqrt());
        let mut eta: f64 = 10f64.max(nf.sqrt()).max(p.cost[b].frobenius_norm());
        for &(i, a) in &index[b] {
            let an = a
                .entries()
                .iter()
                .map(|e| e.2.norm_sqr())
                .sum::<f64>()
                .sqrt();
            xi = xi.max(nf * (1.0 + p.constraints[i].rhs.abs()) / (1.0 + an));
            eta = eta.max(an);
        }
        x.push(ComplexMatrix::identity(n).scale(xi));
        s.push(ComplexMatrix::identity(n).scale(eta));
    }
    (x, vec![0.0; p.constraints.len()], s)
}

/// Runs the interior-point method until the default tolerances are met.
pub fn solve(p: &Problem, opts: &Options) -> Solution {
    solve_until(p, opts, |_| false)
}

/// Runs the interior-point method. After every iteration `done` may end the
/// solve early (returning `Converged`), which lets callers stop on a
/// problem-specific certificate.
pub fn solve_until(
    p: &Problem,
    opts: &Options,
    mut done: impl FnMut(&Iterate) -> bool,
) -> Solution {
    let index = block_index(p);
    let b = p.rhs();
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c_norm = p
        .cost
        .iter()
        .map(|c| c.frobenius_norm())
        .fold(0.0, f64::max);
    let total = p.total_dim() as f64;

    let (mut x, mut y, mut s) = initial_point(p);
    let make_iterate =
        |x: &[ComplexMatrix], y: &[f64], s: &[ComplexMatrix], it: usize| -> Iterate {
            let ax = p.apply(x);
            let pinf = ax
                .iter()
                .zip(&b)
                .map(|(a, bi)| (bi - a).powi(2))
                .sum::<f64>()
                .sqrt()
                / (1.0 + b_norm);
            let aty = p.adjoint(y);
            let dinf = (0..x.len())
                .map(|k| (&(&p.cost[k] - &aty[k]) - &s[k]).frobenius_norm())
                .fold(0.0, f64::max)
                / (1.0 + c_norm);
            Iterate {
                x: x.to_vec(),
                y: y.to_vec(),
                s: s.to_vec(),
                primal_objective: p.objective(x),
                dual_objective: p.dual_objective(y),
                primal_infeasibility: pinf,
                dual_infeasibility: dinf,
                iteration: it,
            }
        };

    let mut current = make_iterate(&x, &y, &s, 0);
    let mut stalls = 0;
    for it in 1..=opts.max_iter {
        let ax = p.apply(&x);
        let rp: Vec<f64> = b.iter().zip(&ax).map(|(bi, a)| bi - a).collect();
        let aty = p.adjoint(&y);
        let rd: Vec<ComplexMatrix> = (0..x.len())
            .map(|k| &(&p.cost[k] - &aty[k]) - &s[k])
            .collect();
        let mu = inner_blocks(&x, &s) / total;

        let Some(z) = s.iter().map(hermitian_inverse).collect::<Option<Vec<_>>>() else {
            return Solution {
                status: Status::Stalled,
                iterate: current,
            };
        };
        let Some(schur) = factor_schur(schur_complement(p, &index, &x, &z)) else {
            return Solution {
                status: Status::Stalled,
                iterate: current,
            };
        };

        // Predictor.
        let h_aff: Vec<ComplexMatrix> = x.iter().map(|xb| -xb).collect();
        let aff = direction(p, &schur, &x, &z, &rp, &rd, &h_aff);
        let Some((ap_aff, ad_aff)) = step_lengths(&x, &s, &aff) else {
            return Solution {
                status: Status::Stalled,
                iterate: current,
            };
        };
        let ap_aff = ap_aff.min(1.0);
        let ad_aff = ad_aff.min(1.0);
        let mut mu_aff = 0.0;
        for k in 0..x.len() {
            let xa = &x[k] + &aff.dx[k].scale(ap_aff);
            let sa = &s[k] + &aff.ds[k].scale(ad_aff);
            mu_aff += xa.inner(&sa);
        }
        mu_aff /= total;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let h: Vec<ComplexMatrix> = (0..x.len())
            .map(|k| {
                let second = aff.dx[k].matmul(&aff.ds[k]).matmul(&z[k]);
                &(&z[k].scale(sigma * mu) - &x[k]) - &second
            })
            .collect();
        let d = direction(p, &schur, &x, &z, &rp, &rd, &h);
        let Some((ap, ad)) = step_lengths(&x, &s, &d) else {
            return Solution {
                status: Status::Stalled,
                iterate: current,
            };
        };
        let gamma = 0.9 + 0.09 * ap_aff.min(ad_aff);
        let ap = (gamma * ap).min(1.0);
        let ad = (gamma * ad).min(1.0);

        let new_x: Vec<ComplexMatrix> = (0..x.len())
            .map(|k| (&x[k] + &d.dx[k].scale(ap)).hermitian_part())
            .collect();
        let new_s: Vec<ComplexMatrix> = (0..x.len())
            .map(|k| (&s[k] + &d.ds[k].scale(ad)).hermitian_part())
            .collect();
        let new_y: Vec<f64> = y.iter().zip(&d.dy).map(|(yi, dyi)| yi + ad * dyi).collect();
        if new_x.iter().chain(&new_s).any(|m| cholesky(m).is_none()) {
            return Solution {
                status: Status::Stalled,
                iterate: current,
            };
        }
        x = new_x;
        s = new_s;
        y = new_y;
        current = make_iterate(&x, &y, &s, it);

        if done(&current) {
            return Solution {
                status: Status::Converged,
                iterate: current,
            };
        }
        if current.relative_gap() <= opts.gap_tol
            && current.primal_infeasibility <= opts.feas_tol
            && current.dual_infeasibility <= opts.feas_tol
        {
            return Solution {
                status: Status::Converged,
                iterate: current,
            };
        }
        if ap.max(ad) < 1e-10 {
            stalls += 1;
            if stalls >= 5 {
                return Solution {
                    status: Status::Stalled,
                    iterate: current,
                };
            }
        } else {
            stalls = 0;
        }
    }
    Solution {
        status: Status::IterationLimit,
        iterate: current,
    }
}
