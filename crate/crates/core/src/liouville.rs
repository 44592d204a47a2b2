//! Liouville-space representation of states, observables and channels.
//!
//! Vectorization is row-major: `|B>` stacks the rows of `B`, so that
//! `vec(B C D) = (B ⊗ Dᵀ) vec(C)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{KikError, Result};
use crate::linalg::{self, c, CMat, CVec, ONE, ZERO};

pub const DEFAULT_TOL: f64 = 1e-10;

/// Square operator on a `d`-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertOp {
    m: CMat,
}

impl HilbertOp {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(KikError::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(KikError::InvalidSpec("non-finite operator entry".into()));
        }
        Ok(Self { m })
    }

    pub fn from_row_slice(d: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != d * d {
            return Err(KikError::DimensionMismatch {
                expected: d * d,
                found: entries.len(),
            });
        }
        Self::new(CMat::from_row_slice(d, d, entries))
    }

    pub fn from_real_rows(d: usize, entries: &[f64]) -> Result<Self> {
        let z: Vec<Complex64> = entries.iter().map(|x| c(*x, 0.0)).collect();
        Self::from_row_slice(d, &z)
    }

    pub fn identity(d: usize) -> Self {
        Self { m: linalg::identity(d) }
    }

    pub fn zeros(d: usize) -> Self {
        Self { m: CMat::zeros(d, d) }
    }

    /// `|ψ><ψ|` for a (not necessarily normalized) state vector.
    pub fn projector(psi: &[Complex64]) -> Self {
        let v = CVec::from_column_slice(psi);
        Self { m: &v * v.adjoint() }
    }

    /// Computational-basis projector `|k><k|` on `d` levels.
    pub fn basis_projector(d: usize, k: usize) -> Self {
        let mut m = CMat::zeros(d, d);
        m[(k, k)] = ONE;
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        linalg::is_hermitian(&self.m, tol)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        linalg::is_unitary(&self.m, tol)
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint() }
    }

    pub fn kron(&self, other: &HilbertOp) -> Self {
        Self {
            m: linalg::kron(&self.m, &other.m),
        }
    }

    pub fn mul(&self, other: &HilbertOp) -> Self {
        Self {
            m: linalg::matmul(&self.m, &other.m),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { m: &self.m * c(s, 0.0) }
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self { m: &self.m * s }
    }

    pub fn add(&self, other: &HilbertOp) -> Self {
        Self { m: &self.m + &other.m }
    }

    pub fn trace(&self) -> Complex64 {
        linalg::trace(&self.m)
    }

    /// Embed a single-qubit operator on qubit `q` of an `n`-qubit register.
    /// Qubit 0 is the leftmost tensor factor.
    pub fn on_qubit(op: &HilbertOp, q: usize, n: usize) -> Self {
        let mut factors = Vec::with_capacity(n);
        for k in 0..n {
            if k == q {
                factors.push(op.m.clone());
            } else {
                factors.push(linalg::identity(op.dim()));
            }
        }
        Self {
            m: linalg::kron_all(&factors),
        }
    }

    /// `e^{-i t H}` for Hermitian `H`.
    pub fn unitary_exp(&self, t: f64) -> Result<Self> {
        let g = &self.m * c(0.0, -t);
        Ok(Self { m: linalg::expm(&g)? })
    }

    fn check_hermitian(&self, tol: f64) -> Result<()> {
        let dev = linalg::max_abs_diff(&self.m, &self.m.adjoint());
        if dev > tol {
            return Err(KikError::NonHermitianInput(dev));
        }
        Ok(())
    }
}

/// Single-qubit Pauli matrix for `I`, `X`, `Y` or `Z`.
pub fn pauli(ch: char) -> Result<HilbertOp> {
    let m = match ch {
        'I' => [ONE, ZERO, ZERO, ONE],
        'X' => [ZERO, ONE, ONE, ZERO],
        'Y' => [ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO],
        'Z' => [ONE, ZERO, ZERO, c(-1.0, 0.0)],
        other => return Err(KikError::InvalidPauliString(other.to_string())),
    };
    HilbertOp::from_row_slice(2, &m)
}

/// Tensor product of Paulis, leftmost character acting on qubit 0.
pub fn pauli_string(s: &str) -> Result<HilbertOp> {
    if s.is_empty() {
        return Err(KikError::InvalidPauliString(s.to_string()));
    }
    let mut factors = Vec::with_capacity(s.len());
    for ch in s.chars() {
        factors.push(
            pauli(ch)
                .map_err(|_| KikError::InvalidPauliString(s.to_string()))?
                .into_matrix(),
        );
    }
    HilbertOp::new(linalg::kron_all(&factors))
}

/// All `4^n` Pauli labels in base-4 order (`I=0, X=1, Y=2, Z=3`, qubit 0 most significant).
pub fn pauli_labels(n: usize) -> Vec<String> {
    const L: [char; 4] = ['I', 'X', 'Y', 'Z'];
    (0..4usize.pow(n as u32))
        .map(|mut idx| {
            let mut s = vec!['I'; n];
            for q in (0..n).rev() {
                s[q] = L[idx % 4];
                idx /= 4;
            }
            s.into_iter().collect()
        })
        .collect()
}

/// `|0><1|`, the lowering operator in the convention `|0>=(1,0)ᵀ`.
pub fn sigma_minus() -> HilbertOp {
    HilbertOp::from_row_slice(2, &[ZERO, ONE, ZERO, ZERO]).expect("2x2")
}

pub fn qubit_count(d: usize) -> Result<usize> {
    if d == 0 || !d.is_power_of_two() {
        return Err(KikError::NotQubitDimension(d));
    }
    Ok(d.trailing_zeros() as usize)
}

/// Vectorized density matrix `|ρ>`.
#[derive(Debug, Clone, PartialEq)]
pub struct VecState {
    dim: usize,
    v: CVec,
}

impl VecState {
    pub fn from_vector(dim: usize, v: CVec) -> Result<Self> {
        if v.len() != dim * dim {
            return Err(KikError::DimensionMismatch {
                expected: dim * dim,
                found: v.len(),
            });
        }
        Ok(Self { dim, v })
    }

    /// Vectorize and check that the operator is a density matrix
    /// (Hermitian and unit trace within `tol`).
    pub fn physical(rho: &HilbertOp, tol: f64) -> Result<Self> {
        let dev = linalg::max_abs_diff(rho.matrix(), &rho.matrix().adjoint());
        if dev > tol {
            return Err(KikError::NotDensityMatrix(format!("Hermiticity deviation {dev:.3e}")));
        }
        let tr = rho.trace();
        if (tr - ONE).norm() > tol {
            return Err(KikError::NotDensityMatrix(format!("trace {tr}")));
        }
        Ok(vectorize(rho))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self) -> &CVec {
        &self.v
    }

    pub fn to_matrix(&self) -> HilbertOp {
        let d = self.dim;
        HilbertOp {
            m: CMat::from_row_slice(d, d, self.v.as_slice()),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.v[i * self.dim + i]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            v: &self.v * c(s, 0.0),
        }
    }

    pub fn add(&self, other: &VecState) -> Self {
        Self {
            dim: self.dim,
            v: &self.v + &other.v,
        }
    }
}

/// Row-major vectorization.
pub fn vectorize(rho: &HilbertOp) -> VecState {
    let d = rho.dim();
    let mut v = CVec::zeros(d * d);
    for i in 0..d {
        for j in 0..d {
            v[i * d + j] = rho.m[(i, j)];
        }
    }
    VecState { dim: d, v }
}

/// Observable row vector `<A|` with `<A|ρ> = Tr(Aρ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VecObservable {
    dim: usize,
    /// Stored as a column; the functional is `Σ_k row[k] · ρ[k]`.
    row: CVec,
}

impl VecObservable {
    pub fn new(a: &HilbertOp) -> Result<Self> {
        a.check_hermitian(DEFAULT_TOL)?;
        Ok(Self::from_operator_unchecked(a))
    }

    /// Dual vector for any square operator, `<A|ρ> = Tr(A†ρ)`.
    pub fn from_operator_unchecked(a: &HilbertOp) -> Self {
        let d = a.dim();
        let mut row = CVec::zeros(d * d);
        for i in 0..d {
            for j in 0..d {
                row[i * d + j] = a.m[(i, j)].conj();
            }
        }
        Self { dim: d, row }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self) -> &CVec {
        &self.row
    }

    pub fn apply(&self, rho: &VecState) -> Result<Complex64> {
        if rho.dim != self.dim {
            return Err(KikError::DimensionMismatch {
                expected: self.dim,
                found: rho.dim,
            });
        }
        Ok(self.row.iter().zip(rho.v.iter()).map(|(a, r)| a * r).sum())
    }

    /// `<A|S` as a new observable.
    pub fn then(&self, s: &SuperOperator) -> Result<Self> {
        if s.dim != self.dim {
            return Err(KikError::DimensionMismatch {
                expected: self.dim,
                found: s.dim,
            });
        }
        let row = s.m.transpose() * &self.row;
        Ok(Self { dim: self.dim, row })
    }
}

/// Dense `d²×d²` superoperator.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator {
    dim: usize,
    m: CMat,
}

impl SuperOperator {
    pub fn from_matrix(dim: usize, m: CMat) -> Result<Self> {
        if m.nrows() != dim * dim || m.ncols() != dim * dim {
            return Err(KikError::DimensionMismatch {
                expected: dim * dim,
                found: m.nrows(),
            });
        }
        Ok(Self { dim, m })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            m: linalg::identity(dim * dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            m: CMat::zeros(dim * dim, dim * dim),
        }
    }

    /// `U ⊗ U*`.
    pub fn unitary(u: &HilbertOp) -> Self {
        Self {
            dim: u.dim(),
            m: linalg::kron(&u.m, &u.m.map(|z| z.conj())),
        }
    }

    /// `Σ_k K_k ⊗ K_k*`.
    pub fn kraus(ops: &[HilbertOp]) -> Result<Self> {
        let d = ops
            .first()
            .map(|k| k.dim())
            .ok_or_else(|| KikError::InvalidSpec("empty Kraus list".into()))?;
        let mut m = CMat::zeros(d * d, d * d);
        for k in ops {
            if k.dim() != d {
                return Err(KikError::DimensionMismatch {
                    expected: d,
                    found: k.dim(),
                });
            }
            m += linalg::kron(&k.m, &k.m.map(|z| z.conj()));
        }
        Ok(Self { dim: d, m })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &SuperOperator) -> Self {
        assert_eq!(self.dim, other.dim, "superoperator dimension mismatch");
        Self {
            dim: self.dim,
            m: linalg::matmul(&self.m, &other.m),
        }
    }

    pub fn apply(&self, rho: &VecState) -> Result<VecState> {
        if rho.dim != self.dim {
            return Err(KikError::DimensionMismatch {
                expected: self.dim,
                found: rho.dim,
            });
        }
        Ok(VecState {
            dim: self.dim,
            v: &self.m * &rho.v,
        })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            dim: self.dim,
            m: self.m.adjoint(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            m: &self.m * c(s, 0.0),
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            m: &self.m * s,
        }
    }

    pub fn add(&self, other: &SuperOperator) -> Self {
        assert_eq!(self.dim, other.dim, "superoperator dimension mismatch");
        Self {
            dim: self.dim,
            m: &self.m + &other.m,
        }
    }

    pub fn sub(&self, other: &SuperOperator) -> Self {
        assert_eq!(self.dim, other.dim, "superoperator dimension mismatch");
        Self {
            dim: self.dim,
            m: &self.m - &other.m,
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        Self {
            dim: self.dim,
            m: linalg::matpow(&self.m, k),
        }
    }

    /// `e^{t·G}` treating `self` as a generator.
    pub fn exp(&self, t: f64) -> Result<Self> {
        let g = &self.m * c(t, 0.0);
        Ok(Self {
            dim: self.dim,
            m: linalg::expm(&g)?,
        })
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        linalg::is_hermitian(&self.m, tol)
    }

    /// Deviation of `<I|S` from `<I|` (channels) or from zero (generators).
    pub fn trace_defect(&self, generator: bool) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for col in 0..d * d {
            let mut s = ZERO;
            for i in 0..d {
                s += self.m[(i * d + i, col)];
            }
            let target = if generator {
                ZERO
            } else if col % (d + 1) == 0 {
                ONE
            } else {
                ZERO
            };
            worst = worst.max((s - target).norm());
        }
        worst
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.trace_defect(false) <= tol
    }

    pub fn annihilates_identity_dual(&self, tol: f64) -> bool {
        self.trace_defect(true) <= tol
    }

    pub fn max_abs_diff(&self, other: &SuperOperator) -> f64 {
        linalg::max_abs_diff(&self.m, &other.m)
    }

    pub fn spectral_norm(&self) -> f64 {
        linalg::spectral_norm(&self.m)
    }

    pub fn frobenius(&self) -> f64 {
        linalg::frobenius(&self.m)
    }
}

/// `ℋ = H ⊗ I − I ⊗ Hᵀ`, so that `ℋ|ρ> = |[H, ρ]>`.
pub fn hamiltonian_superop(h: &HilbertOp) -> Result<SuperOperator> {
    h.check_hermitian(DEFAULT_TOL)?;
    Ok(commutator_superop(h))
}

pub(crate) fn commutator_superop(h: &HilbertOp) -> SuperOperator {
    let d = h.dim();
    let id = linalg::identity(d);
    let m = linalg::kron(&h.m, &id) - linalg::kron(&id, &h.m.transpose());
    SuperOperator { dim: d, m }
}

/// Sum of `γ_k (A ⊗ A* − ½ A†A ⊗ I − ½ I ⊗ (A†A)ᵀ)`.
pub fn lindblad_superop(jumps: &[(HilbertOp, f64)], dim: usize) -> Result<SuperOperator> {
    let mut m = CMat::zeros(dim * dim, dim * dim);
    let id = linalg::identity(dim);
    for (a, rate) in jumps {
        if *rate < 0.0 || !rate.is_finite() {
            return Err(KikError::NegativeRate(*rate));
        }
        if a.dim() != dim {
            return Err(KikError::DimensionMismatch {
                expected: dim,
                found: a.dim(),
            });
        }
        if *rate == 0.0 {
            continue;
        }
        let ada = linalg::matmul(&a.m.adjoint(), &a.m);
        let term = linalg::kron(&a.m, &a.m.map(|z| z.conj()))
            - linalg::kron(&ada, &id) * c(0.5, 0.0)
            - linalg::kron(&id, &ada.transpose()) * c(0.5, 0.0);
        m += term * c(*rate, 0.0);
    }
    Ok(SuperOperator { dim, m })
}

/// `Σ α_k (P_k ⊗ P_kᵀ − 𝓘)` for Pauli strings `P_k`.
pub fn pauli_channel_superop(terms: &[(&str, f64)]) -> Result<SuperOperator> {
    let n = terms
        .first()
        .map(|(s, _)| s.len())
        .ok_or_else(|| KikError::InvalidSpec("empty Pauli term list".into()))?;
    let d = 1usize << n;
    let mut m = CMat::zeros(d * d, d * d);
    let id = linalg::identity(d * d);
    for (label, alpha) in terms {
        if label.len() != n {
            return Err(KikError::InvalidPauliString(label.to_string()));
        }
        if !alpha.is_finite() {
            return Err(KikError::InvalidSpec(format!("non-finite alpha {alpha}")));
        }
        let p = pauli_string(label)?;
        let term = linalg::kron(&p.m, &p.m.transpose()) - &id;
        m += term * c(*alpha, 0.0);
    }
    Ok(SuperOperator { dim: d, m })
}

/// `Re<A|S|ρ>`; fails when the imaginary residual exceeds `1e-8`.
pub fn expectation(a: &VecObservable, s: &SuperOperator, rho: &VecState) -> Result<f64> {
    let (re, im) = expectation_with_residual(a, s, rho)?;
    if im.abs() > 1e-8 {
        return Err(KikError::NonHermitianInput(im.abs()));
    }
    Ok(re)
}

/// `<A|S|ρ>` split into real part and imaginary residual.
pub fn expectation_with_residual(a: &VecObservable, s: &SuperOperator, rho: &VecState) -> Result<(f64, f64)> {
    if a.dim != s.dim || s.dim != rho.dim {
        return Err(KikError::DimensionMismatch {
            expected: a.dim,
            found: rho.dim.max(s.dim),
        });
    }
    let out = s.apply(rho)?;
    let z = a.apply(&out)?;
    Ok((z.re, z.im))
}

/// Pauli transfer matrix `(R)_ij = Tr[P_i Λ(P_j)] / d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTransferMatrix {
    pub n_qubits: usize,
    pub r: DMatrix<f64>,
    /// Largest discarded imaginary part.
    pub max_imag: f64,
}

impl PauliTransferMatrix {
    pub fn compose(&self, other: &PauliTransferMatrix) -> Self {
        Self {
            n_qubits: self.n_qubits,
            r: &self.r * &other.r,
            max_imag: self.max_imag.max(other.max_imag),
        }
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.r.nrows();
        (0..n).all(|i| (0..n).all(|j| i == j || self.r[(i, j)].abs() <= tol))
    }
}

pub fn ptm_of(s: &SuperOperator) -> Result<PauliTransferMatrix> {
    let d = s.dim;
    let n = qubit_count(d)?;
    let labels = pauli_labels(n);
    let mut basis = CMat::zeros(d * d, labels.len());
    for (j, lab) in labels.iter().enumerate() {
        let v = vectorize(&pauli_string(lab)?);
        basis.set_column(j, &v.v);
    }
    let full = linalg::matmul(&basis.adjoint(), &linalg::matmul(&s.m, &basis)) * c(1.0 / d as f64, 0.0);
    let max_imag = full.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    Ok(PauliTransferMatrix {
        n_qubits: n,
        r: full.map(|z| z.re),
        max_imag,
    })
}

fn check_ptm_pair(rl: &PauliTransferMatrix, ru: &PauliTransferMatrix) -> Result<f64> {
    if rl.r.shape() != ru.r.shape() {
        return Err(KikError::DimensionMismatch {
            expected: ru.r.nrows(),
            found: rl.r.nrows(),
        });
    }
    Ok((1usize << rl.n_qubits) as f64)
}

/// `(Tr(R_Λ⁻¹ R_U) + d) / (d(d+1))`, evaluated exactly as written.
pub fn avg_gate_fidelity_ptm(rl: &PauliTransferMatrix, ru: &PauliTransferMatrix) -> Result<f64> {
    let d = check_ptm_pair(rl, ru)?;
    let sv = rl.r.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond < 1e10) {
        return Err(KikError::SingularPTM(cond));
    }
    let inv = rl.r.clone().try_inverse().ok_or(KikError::SingularPTM(cond))?;
    Ok(((inv * &ru.r).trace() + d) / (d * (d + 1.0)))
}

/// `(Tr(R_Λᵀ R_U) + d) / (d(d+1))`, the Haar-averaged gate fidelity.
pub fn avg_gate_fidelity_ptm_adjoint(rl: &PauliTransferMatrix, ru: &PauliTransferMatrix) -> Result<f64> {
    let d = check_ptm_pair(rl, ru)?;
    Ok(((rl.r.transpose() * &ru.r).trace() + d) / (d * (d + 1.0)))
}

fn check_density(rho: &HilbertOp, what: &str) -> Result<()> {
    let dev = linalg::max_abs_diff(rho.matrix(), &rho.matrix().adjoint());
    if dev > 1e-8 {
        return Err(KikError::NotDensityMatrix(format!("{what}: not Hermitian ({dev:.3e})")));
    }
    let tr = rho.trace();
    if (tr - ONE).norm() > 1e-8 {
        return Err(KikError::NotDensityMatrix(format!("{what}: trace {tr}")));
    }
    let min_ev = linalg::hermitian_eigenvalues(rho.matrix())[0];
    if min_ev < -1e-9 {
        return Err(KikError::NotDensityMatrix(format!("{what}: eigenvalue {min_ev:.3e}")));
    }
    Ok(())
}

/// Uhlmann fidelity `[Tr sqrt(√ρ σ √ρ)]²` between density matrices.
pub fn state_fidelity(rho: &HilbertOp, sigma: &HilbertOp) -> Result<f64> {
    check_density(rho, "rho")?;
    check_density(sigma, "sigma")?;
    Ok(state_fidelity_unchecked(rho, sigma))
}

/// Same formula without the density-matrix checks on `sigma`.
///
/// Mitigated states can have small negative eigenvalues; negative eigenvalues
/// of `√ρ σ √ρ` contribute zero to the trace.
pub fn state_fidelity_unchecked(rho: &HilbertOp, sigma: &HilbertOp) -> f64 {
    if rho.dim() != sigma.dim() {
        return f64::NAN;
    }
    let sr = linalg::hermitian_function(rho.matrix(), |l| l.max(0.0).sqrt());
    let inner = linalg::matmul(&sr, &linalg::matmul(sigma.matrix(), &sr));
    let ev = linalg::hermitian_eigenvalues(&inner);
    let t: f64 = ev.iter().map(|l| l.max(0.0).sqrt()).sum();
    t * t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> HilbertOp {
        pauli('Z').unwrap()
    }

    #[test]
    fn vectorize_basis_and_mixed() {
        let v = vectorize(&HilbertOp::basis_projector(2, 0));
        assert_eq!(v.vector().as_slice(), &[ONE, ZERO, ZERO, ZERO]);
        let mixed = HilbertOp::identity(2).scale(0.5);
        let v = vectorize(&mixed);
        let want = [c(0.5, 0.0), ZERO, ZERO, c(0.5, 0.0)];
        assert_eq!(v.vector().as_slice(), &want);
    }

    #[test]
    fn hamiltonian_superop_of_z_and_identity() {
        let hs = hamiltonian_superop(&z()).unwrap();
        let mut ev: Vec<f64> = linalg::eigenvalues(hs.matrix()).iter().map(|x| x.re).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let want = [-2.0, 0.0, 0.0, 2.0];
        for (a, b) in ev.iter().zip(want.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        let hi = hamiltonian_superop(&HilbertOp::identity(2)).unwrap();
        assert!(linalg::max_abs(hi.matrix()) == 0.0);
    }

    #[test]
    fn hamiltonian_superop_rejects_non_hermitian() {
        let a = sigma_minus();
        assert!(matches!(hamiltonian_superop(&a), Err(KikError::NonHermitianInput(_))));
    }

    #[test]
    fn lindblad_decay_rate_and_trace() {
        let l = lindblad_superop(&[(sigma_minus(), 1.0)], 2).unwrap();
        assert!(l.annihilates_identity_dual(1e-12));
        let one = vectorize(&HilbertOp::basis_projector(2, 1));
        let drho = l.apply(&one).unwrap().to_matrix();
        assert!((drho.matrix()[(1, 1)] - c(-1.0, 0.0)).norm() < 1e-14);
        assert!((drho.matrix()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
        let empty = lindblad_superop(&[], 2).unwrap();
        assert_eq!(linalg::max_abs(empty.matrix()), 0.0);
        assert!(matches!(
            lindblad_superop(&[(sigma_minus(), -0.1)], 2),
            Err(KikError::NegativeRate(_))
        ));
    }

    #[test]
    fn pauli_channel_spectrum_and_hermiticity() {
        let g = pauli_channel_superop(&[("X", 0.1)]).unwrap();
        assert!(g.is_hermitian(1e-12));
        let g = pauli_channel_superop(&[("ZZ", 0.05)]).unwrap();
        for ev in linalg::hermitian_eigenvalues(g.matrix()) {
            assert!(ev.abs() < 1e-12 || (ev + 0.1).abs() < 1e-12, "{ev}");
        }
        let g = pauli_channel_superop(&[("Y", 0.0)]).unwrap();
        assert_eq!(linalg::max_abs(g.matrix()), 0.0);
        assert!(matches!(
            pauli_channel_superop(&[("XQ", 0.1)]),
            Err(KikError::InvalidPauliString(_))
        ));
    }

    #[test]
    fn expectation_examples() {
        let rho = vectorize(&HilbertOp::basis_projector(2, 0));
        let id = SuperOperator::identity(2);
        let zo = VecObservable::new(&z()).unwrap();
        let xo = VecObservable::new(&pauli('X').unwrap()).unwrap();
        assert!((expectation(&zo, &id, &rho).unwrap() - 1.0).abs() < 1e-15);
        assert!(expectation(&xo, &id, &rho).unwrap().abs() < 1e-15);
        let s = 1.0 / 2f64.sqrt();
        let h = HilbertOp::from_real_rows(2, &[s, s, s, -s]).unwrap();
        let uh = SuperOperator::unitary(&h);
        assert!((expectation(&xo, &uh, &rho).unwrap() - 1.0).abs() < 1e-14);
        let bad = vectorize(&HilbertOp::basis_projector(4, 0));
        assert!(matches!(
            expectation(&xo, &id, &bad),
            Err(KikError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ptm_examples() {
        let r = ptm_of(&SuperOperator::identity(2)).unwrap();
        assert!((r.r.clone() - DMatrix::<f64>::identity(4, 4)).abs().max() < 1e-14);
        let rx = ptm_of(&SuperOperator::unitary(&pauli('X').unwrap())).unwrap();
        let want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, -1.0, -1.0]));
        assert!((rx.r - want).abs().max() < 1e-14);
        let p: f64 = 0.3;
        let k: Vec<HilbertOp> = vec![
            HilbertOp::identity(2).scale((1.0 - 3.0 * p / 4.0).sqrt()),
            pauli('X').unwrap().scale((p / 4.0).sqrt()),
            pauli('Y').unwrap().scale((p / 4.0).sqrt()),
            pauli('Z').unwrap().scale((p / 4.0).sqrt()),
        ];
        let dep = ptm_of(&SuperOperator::kraus(&k).unwrap()).unwrap();
        let want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0 - p, 1.0 - p, 1.0 - p]));
        assert!((dep.r - want).abs().max() < 1e-14);
        assert!(matches!(
            ptm_of(&SuperOperator::identity(3)),
            Err(KikError::NotQubitDimension(3))
        ));
    }

    #[test]
    fn gate_fidelity_identity_pair() {
        let u = SuperOperator::unitary(&pauli_string("XZ").unwrap());
        let r = ptm_of(&u).unwrap();
        assert!((avg_gate_fidelity_ptm(&r, &r).unwrap() - 1.0).abs() < 1e-12);
        assert!((avg_gate_fidelity_ptm_adjoint(&r, &r).unwrap() - 1.0).abs() < 1e-12);
        let zero = PauliTransferMatrix {
            n_qubits: 1,
            r: DMatrix::zeros(4, 4),
            max_imag: 0.0,
        };
        let r1 = ptm_of(&SuperOperator::identity(2)).unwrap();
        assert!(matches!(
            avg_gate_fidelity_ptm(&zero, &r1),
            Err(KikError::SingularPTM(_))
        ));
    }

    #[test]
    fn state_fidelity_examples() {
        let p0 = HilbertOp::basis_projector(2, 0);
        let p1 = HilbertOp::basis_projector(2, 1);
        let mixed = HilbertOp::identity(2).scale(0.5);
        assert!((state_fidelity(&p0, &p0).unwrap() - 1.0).abs() < 1e-12);
        assert!(state_fidelity(&p0, &p1).unwrap().abs() < 1e-12);
        assert!((state_fidelity(&p0, &mixed).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(
            state_fidelity(&p0, &HilbertOp::identity(2)),
            Err(KikError::NotDensityMatrix(_))
        ));
    }

    #[test]
    fn pauli_labels_order() {
        assert_eq!(pauli_labels(1), vec!["I", "X", "Y", "Z"]);
        let l2 = pauli_labels(2);
        assert_eq!(l2[1], "IX");
        assert_eq!(l2[4], "XI");
        assert_eq!(l2[15], "ZZ");
    }
}
