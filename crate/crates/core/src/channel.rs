//! Choi-matrix representation of channels and the operations on it.
//!
//! `J(Φ) = Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`, input factor first, unnormalized
//! (trace equals `dim_in` for trace-preserving maps).

use num_complex::Complex64;

use crate::circuit::StinespringRep;
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, Limits, ZERO};

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    m: ComplexMatrix,
    dim_in: usize,
    dim_out: usize,
}

impl ChoiMatrix {
    pub fn new(m: ComplexMatrix, dim_in: usize, dim_out: usize) -> Result<Self> {
        let n = dim_in
            .checked_mul(dim_out)
            .ok_or_else(|| Error::shape("channel dimensions overflow"))?;
        if dim_in == 0 || dim_out == 0 || m.rows() != n || m.cols() != n {
            return Err(Error::shape(format!(
                "Choi matrix of a {dim_in}->{dim_out} map must be {n}x{n}, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        Ok(ChoiMatrix { m, dim_in, dim_out })
    }

    pub fn identity(d: usize) -> Self {
        let mut m = ComplexMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                m[(i * d + i, j * d + j)] = Complex64::new(1.0, 0.0);
            }
        }
        ChoiMatrix {
            m,
            dim_in: d,
            dim_out: d,
        }
    }

    /// Replacement channel `ρ ↦ tr(ρ) σ`.
    pub fn constant(dim_in: usize, sigma: &ComplexMatrix) -> Self {
        ChoiMatrix {
            m: ComplexMatrix::identity(dim_in).kron(sigma),
            dim_in,
            dim_out: sigma.rows(),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.m
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// `Tr_out J`; equals the identity for trace-preserving maps.
    pub fn input_marginal(&self) -> ComplexMatrix {
        linalg::partial_trace(&self.m, &[self.dim_in, self.dim_out], &[1])
            .expect("dims checked at construction")
    }

    /// `Tr_in J = Φ(I)`. Every output of the map is supported inside its range.
    pub fn output_marginal(&self) -> ComplexMatrix {
        linalg::partial_trace(&self.m, &[self.dim_in, self.dim_out], &[0])
            .expect("dims checked at construction")
    }

    /// Largest deviation from complete positivity and trace preservation.
    pub fn cptp_defect(&self) -> f64 {
        let tp = self
            .input_marginal()
            .max_abs_diff(&ComplexMatrix::identity(self.dim_in));
        let herm = self.m.hermitian_drift();
        let neg = (-linalg::eig_of_hermitian_part(&self.m).min()).max(0.0);
        tp.max(herm).max(neg)
    }

    pub fn is_cptp(&self, tol: f64) -> bool {
        self.cptp_defect() <= tol
    }

    /// Choi matrix of `self - other`.
    pub fn difference(&self, other: &ChoiMatrix) -> Result<ComplexMatrix> {
        if (self.dim_in, self.dim_out) != (other.dim_in, other.dim_out) {
            return Err(Error::shape(format!(
                "cannot subtract a {}->{} map from a {}->{} map",
                other.dim_in, other.dim_out, self.dim_in, self.dim_out
            )));
        }
        Ok(&self.m - &other.m)
    }

    /// Channel output for `rho` on `A`, or `(Φ ⊗ id_F)(rho)` for `rho` on `A ⊗ F`.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        apply_choi(&self.m, self.dim_in, self.dim_out, rho)
    }
}

/// `(Φ ⊗ id_F)(ρ)` from a Choi matrix (not necessarily of a channel).
pub(crate) fn apply_choi(
    choi: &ComplexMatrix,
    dim_in: usize,
    dim_out: usize,
    rho: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    if !rho.is_square() || rho.rows() == 0 || !rho.rows().is_multiple_of(dim_in) {
        return Err(Error::shape(format!(
            "state of size {}x{} does not act on an input of dimension {dim_in}",
            rho.rows(),
            rho.cols()
        )));
    }
    let f = rho.rows() / dim_in;
    let (a, b) = (dim_in, dim_out);
    // out[(β φ), (β' φ')] = Σ_ij J[(i β), (j β')] ρ[(i φ), (j φ')]
    let mut out = ComplexMatrix::zeros(b * f, b * f);
    for i in 0..a {
        for j in 0..a {
            for beta in 0..b {
                for beta2 in 0..b {
                    let w = choi[(i * b + beta, j * b + beta2)];
                    if w == ZERO {
                        continue;
                    }
                    for phi in 0..f {
                        for phi2 in 0..f {
                            out[(beta * f + phi, beta2 * f + phi2)] +=
                                w * rho[(i * f + phi, j * f + phi2)];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Two channels with matching input and output dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPair {
    pub first: ChoiMatrix,
    pub second: ChoiMatrix,
}

impl ChannelPair {
    pub fn new(first: ChoiMatrix, second: ChoiMatrix) -> Result<Self> {
        if (first.dim_in, first.dim_out) != (second.dim_in, second.dim_out) {
            return Err(Error::shape(format!(
                "channel pair dimensions differ: {}->{} vs {}->{}",
                first.dim_in, first.dim_out, second.dim_in, second.dim_out
            )));
        }
        Ok(ChannelPair { first, second })
    }

    pub fn swapped(&self) -> ChannelPair {
        ChannelPair {
            first: self.second.clone(),
            second: self.first.clone(),
        }
    }

    pub fn difference(&self) -> ComplexMatrix {
        &self.first.m - &self.second.m
    }

    pub fn dim_in(&self) -> usize {
        self.first.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.first.dim_out
    }
}

/// `J = Σ_ij |i⟩⟨j| ⊗ Tr_E V|i⟩⟨j|V†`.
pub fn choi_from_stinespring(s: &StinespringRep, limits: &Limits) -> Result<ChoiMatrix> {
    let n = limits.check_product(&[s.dim_in, s.dim_out])?;
    let v = s.isometry();
    let (a, b, e) = (s.dim_in, s.dim_out, s.dim_env_out);
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..a {
        for j in 0..a {
            for beta in 0..b {
                for beta2 in 0..b {
                    let mut acc = ZERO;
                    for k in 0..e {
                        acc += v[(beta * e + k, i)] * v[(beta2 * e + k, j)].conj();
                    }
                    m[(i * b + beta, j * b + beta2)] = acc;
                }
            }
        }
    }
    Ok(ChoiMatrix {
        m,
        dim_in: a,
        dim_out: b,
    })
}

/// Choi matrix of the canonical complement: the same dilation traced over
/// the output register instead of the environment.
pub fn complementary_channel(s: &StinespringRep, limits: &Limits) -> Result<ChoiMatrix> {
    choi_from_stinespring(&s.complement(), limits)
}

/// Choi matrix of `outer ∘ inner`.
pub fn compose(outer: &ChoiMatrix, inner: &ChoiMatrix) -> Result<ChoiMatrix> {
    if outer.dim_in != inner.dim_out {
        return Err(Error::shape(format!(
            "cannot compose: outer takes dimension {}, inner produces {}",
            outer.dim_in, inner.dim_out
        )));
    }
    let (a, b, c) = (inner.dim_in, inner.dim_out, outer.dim_out);
    let mut m = ComplexMatrix::zeros(a * c, a * c);
    // J[(i γ), (j γ')] = Σ_{ββ'} J_inner[(i β), (j β')] J_outer[(β γ), (β' γ')]
    for i in 0..a {
        for j in 0..a {
            for beta in 0..b {
                for beta2 in 0..b {
                    let w = inner.m[(i * b + beta, j * b + beta2)];
                    if w == ZERO {
                        continue;
                    }
                    for g in 0..c {
                        for g2 in 0..c {
                            m[(i * c + g, j * c + g2)] +=
                                w * outer.m[(beta * c + g, beta2 * c + g2)];
                        }
                    }
                }
            }
        }
    }
    Ok(ChoiMatrix {
        m,
        dim_in: a,
        dim_out: c,
    })
}

/// Choi matrix of `Φ1 ⊗ Φ2` with registers ordered `[A1 A2][B1 B2]`.
pub fn tensor(first: &ChoiMatrix, second: &ChoiMatrix, limits: &Limits) -> Result<ChoiMatrix> {
    let n = limits.check_product(&[first.dim_in, first.dim_out, second.dim_in, second.dim_out])?;
    let raw = first.m.kron(&second.m);
    let dims = [first.dim_in, first.dim_out, second.dim_in, second.dim_out];
    let m = linalg::permute_subsystems(&raw, &dims, &[0, 2, 1, 3])?;
    debug_assert_eq!(m.rows(), n);
    Ok(ChoiMatrix {
        m,
        dim_in: first.dim_in * second.dim_in,
        dim_out: first.dim_out * second.dim_out,
    })
}

/// Choi matrix of `Φ^{⊗k}`, every copy's input grouped before the outputs.
pub fn tensor_power(c: &ChoiMatrix, k: usize, limits: &Limits) -> Result<ChoiMatrix> {
    if k == 0 {
        return Err(Error::contract("tensor power needs k >= 1"));
    }
    let factors: Vec<usize> = std::iter::repeat_n([c.dim_in, c.dim_out], k)
        .flatten()
        .collect();
    limits.check_product(&factors)?;
    let mut acc = c.clone();
    for _ in 1..k {
        acc = tensor(&acc, c, limits)?;
    }
    Ok(acc)
}

/// A Stinespring dilation of the channel with Choi matrix `c`, built from its
/// Kraus operators. The environment is as small as the register bookkeeping
/// `dim_in · dim_env_ancilla = dim_out · dim_env_out` allows.
pub fn stinespring_from_choi(c: &ChoiMatrix, tol: f64) -> Result<StinespringRep> {
    if !c.is_cptp(tol) {
        return Err(Error::contract(format!(
            "not a channel: CPTP defect {:.3e}",
            c.cptp_defect()
        )));
    }
    let (a, b) = (c.dim_in, c.dim_out);
    let eig = linalg::eig_of_hermitian_part(&c.m);
    let cutoff = tol * eig.max().max(1.0);
    let kraus: Vec<usize> = (0..eig.values.len())
        .rev()
        .filter(|&k| eig.values[k] > cutoff)
        .collect();
    let rank = kraus.len().max(1);

    // Smallest environment that holds the Kraus rank and balances the registers.
    let mut env_out = rank;
    while !(b * env_out).is_multiple_of(a) {
        env_out += 1;
    }
    let env_anc = b * env_out / a;
    let total = a * env_anc;

    // V|a⟩ = Σ_k K_k|a⟩ ⊗ |k⟩ with K_k[β, α] = √λ_k v_k[(α β)].
    let mut v = ComplexMatrix::zeros(total, a);
    for (slot, &k) in kraus.iter().enumerate() {
        let s = eig.values[k].sqrt();
        for alpha in 0..a {
            for beta in 0..b {
                v[(beta * env_out + slot, alpha)] = eig.vectors[(alpha * b + beta, k)] * s;
            }
        }
    }
    let u = complete_isometry(&v, env_anc)?;
    StinespringRep::new(u, a, env_anc, b, env_out)
}

/// Extends an isometry `V` (columns = inputs) to a unitary whose column
/// `a · stride` is `V|a⟩`.
fn complete_isometry(v: &ComplexMatrix, stride: usize) -> Result<ComplexMatrix> {
    let total = v.rows();
    let a = v.cols();
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(total);
    for col in 0..a {
        basis.push((0..total).map(|r| v[(r, col)]).collect());
    }
    // Re-orthonormalize the given columns, then fill with standard basis vectors.
    let mut ortho: Vec<Vec<Complex64>> = Vec::with_capacity(total);
    for vec in &basis {
        let w = gram_schmidt_step(vec, &ortho);
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            return Err(Error::contract("Kraus isometry has dependent columns"));
        }
        ortho.push(w.into_iter().map(|z| z / norm).collect());
    }
    for k in 0..total {
        if ortho.len() == total {
            break;
        }
        let mut e = vec![ZERO; total];
        e[k] = Complex64::new(1.0, 0.0);
        let w = gram_schmidt_step(&e, &ortho);
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            ortho.push(w.into_iter().map(|z| z / norm).collect());
        }
    }
    let mut u = ComplexMatrix::zeros(total, total);
    let mut extra = ortho[a..].iter();
    for col in 0..total {
        let src = if col % stride == 0 {
            &ortho[col / stride]
        } else {
            extra.next().expect("completion has the right size")
        };
        for (r, &z) in src.iter().enumerate() {
            u[(r, col)] = z;
        }
    }
    Ok(u)
}

fn gram_schmidt_step(v: &[Complex64], ortho: &[Vec<Complex64>]) -> Vec<Complex64> {
    let mut w = v.to_vec();
    // Two passes keep the result orthogonal to working precision.
    for _ in 0..2 {
        for q in ortho {
            let proj: Complex64 = q.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= proj * qi;
            }
        }
    }
    w
}
