//! Piecewise-constant pulse schedules, their noisy propagators, the pulse
//! inverse and the first Magnus term of the noise.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{KikError, Result};
use crate::linalg::{self, c, CMat};
use crate::liouville::{commutator_superop, HilbertOp, SuperOperator, VecState, DEFAULT_TOL};

#[derive(Debug)]
struct SegmentData {
    hamiltonian: HilbertOp,
    /// `ℋ = H ⊗ I − I ⊗ Hᵀ`, cached.
    h_super: SuperOperator,
    dissipator: SuperOperator,
}

/// One constant-generator piece of a schedule. Cloning is cheap and clones
/// share their cached exponential.
#[derive(Debug, Clone)]
pub struct Segment {
    pub duration: f64,
    pub label: String,
    sign: f64,
    data: Arc<SegmentData>,
}

impl Segment {
    pub fn new(
        hamiltonian: HilbertOp,
        dissipator: SuperOperator,
        duration: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(KikError::InvalidSpec(format!(
                "segment duration {duration} must be > 0"
            )));
        }
        let dev = linalg::max_abs_diff(hamiltonian.matrix(), &hamiltonian.matrix().adjoint());
        if dev > DEFAULT_TOL {
            return Err(KikError::NonHermitianInput(dev));
        }
        if dissipator.dim() != hamiltonian.dim() {
            return Err(KikError::DimensionMismatch {
                expected: hamiltonian.dim(),
                found: dissipator.dim(),
            });
        }
        let h_super = commutator_superop(&hamiltonian);
        Ok(Self {
            duration,
            label: label.into(),
            sign: 1.0,
            data: Arc::new(SegmentData {
                hamiltonian,
                h_super,
                dissipator,
            }),
        })
    }

    pub fn noiseless(hamiltonian: HilbertOp, duration: f64, label: impl Into<String>) -> Result<Self> {
        let d = hamiltonian.dim();
        Self::new(hamiltonian, SuperOperator::zeros(d), duration, label)
    }

    pub fn dim(&self) -> usize {
        self.data.hamiltonian.dim()
    }

    /// Effective Hamiltonian (negated for pulse-inverted segments).
    pub fn hamiltonian(&self) -> HilbertOp {
        self.data.hamiltonian.scale(self.sign)
    }

    pub fn dissipator(&self) -> &SuperOperator {
        &self.data.dissipator
    }

    /// Same segment with a different dissipator, keeping Hamiltonian and sign.
    pub fn with_dissipator(&self, dissipator: SuperOperator) -> Result<Self> {
        let mut s = Segment::new(
            self.data.hamiltonian.clone(),
            dissipator,
            self.duration,
            self.label.clone(),
        )?;
        s.sign = self.sign;
        Ok(s)
    }

    /// `(−iℋ + ℒ)Δt`.
    pub fn generator(&self) -> CMat {
        let h = self.data.h_super.matrix() * c(0.0, -self.sign * self.duration);
        h + self.data.dissipator.matrix() * c(self.duration, 0.0)
    }

    fn inverted(&self) -> Self {
        Self {
            duration: self.duration,
            label: self.label.clone(),
            sign: -self.sign,
            data: Arc::clone(&self.data),
        }
    }

    fn same_generator(&self, other: &Segment) -> bool {
        self.duration == other.duration
            && self.sign == other.sign
            && (Arc::ptr_eq(&self.data, &other.data)
                || (self.data.hamiltonian == other.data.hamiltonian && self.data.dissipator == other.data.dissipator))
    }

    fn hash_into(&self, h: &mut DefaultHasher) {
        self.duration.to_bits().hash(h);
        self.sign.to_bits().hash(h);
        for z in self.data.hamiltonian.matrix().iter() {
            z.re.to_bits().hash(h);
            z.im.to_bits().hash(h);
        }
        for z in self.data.dissipator.matrix().iter() {
            z.re.to_bits().hash(h);
            z.im.to_bits().hash(h);
        }
    }
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && self.same_generator(other)
    }
}

/// Ordered, non-empty list of segments; the first segment acts first.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    segments: Vec<Segment>,
}

impl PulseSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| KikError::InvalidSpec("empty pulse schedule".into()))?;
        let d = first.dim();
        if let Some(bad) = segments.iter().find(|s| s.dim() != d) {
            return Err(KikError::DimensionMismatch {
                expected: d,
                found: bad.dim(),
            });
        }
        Ok(Self { segments })
    }

    pub fn single(segment: Segment) -> Self {
        Self {
            segments: vec![segment],
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn dim(&self) -> usize {
        self.segments[0].dim()
    }

    pub fn total_time(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// `self ∥ other`: `other` runs after `self`.
    pub fn then(&self, other: &PulseSchedule) -> Self {
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().cloned());
        Self { segments }
    }

    pub fn repeat(&self, times: usize) -> Result<Self> {
        if times == 0 {
            return Err(KikError::InvalidSpec("repeat count must be >= 1".into()));
        }
        let mut segments = Vec::with_capacity(self.segments.len() * times);
        for _ in 0..times {
            segments.extend(self.segments.iter().cloned());
        }
        Ok(Self { segments })
    }

    /// Replace every dissipator through `f`.
    pub fn map_dissipators(&self, f: impl Fn(&Segment) -> SuperOperator) -> Result<Self> {
        let segments = self
            .segments
            .iter()
            .map(|s| s.with_dissipator(f(s)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { segments })
    }

    /// Same Hamiltonians with every dissipator set to zero.
    pub fn noiseless(&self) -> Self {
        let d = self.dim();
        self.map_dissipators(|_| SuperOperator::zeros(d))
            .expect("zero dissipator has matching dimension")
    }

    pub fn hash_hex(&self) -> String {
        let mut h = DefaultHasher::new();
        for s in &self.segments {
            s.hash_into(&mut h);
        }
        format!("{:016x}", h.finish())
    }

    /// Exponentials `exp[(−iℋ_j+ℒ_j)Δt_j]`, computed once per distinct segment.
    pub fn segment_exponentials(&self) -> Result<Vec<Arc<CMat>>> {
        let mut cache: Vec<(usize, Arc<CMat>)> = Vec::new();
        let mut out = Vec::with_capacity(self.segments.len());
        for (idx, seg) in self.segments.iter().enumerate() {
            let hit = cache
                .iter()
                .find(|(j, _)| self.segments[*j].same_generator(seg))
                .map(|(_, e)| Arc::clone(e));
            let e = match hit {
                Some(e) => e,
                None => {
                    let e = Arc::new(linalg::expm(&seg.generator())?);
                    cache.push((idx, Arc::clone(&e)));
                    e
                }
            };
            out.push(e);
        }
        Ok(out)
    }

    /// Apply the noisy evolution directly to a state, avoiding the full
    /// superoperator product.
    pub fn evolve(&self, rho: &VecState) -> Result<VecState> {
        let exps = self.segment_exponentials()?;
        evolve_with(&exps, rho)
    }
}

/// Apply precomputed segment exponentials in time order.
pub fn evolve_with(exps: &[Arc<CMat>], rho: &VecState) -> Result<VecState> {
    let mut v = rho.vector().clone();
    for e in exps {
        if e.ncols() != v.len() {
            return Err(KikError::DimensionMismatch {
                expected: e.ncols(),
                found: v.len(),
            });
        }
        v = e.as_ref() * v;
    }
    VecState::from_vector(rho.dim(), v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    pub value: SuperOperator,
    pub schedule_hash: String,
    pub segments: usize,
    pub method: &'static str,
}

/// Reverse the segment order and negate every Hamiltonian; dissipators keep
/// their sign.
pub fn pulse_inverse(sched: &PulseSchedule) -> PulseSchedule {
    PulseSchedule {
        segments: sched.segments.iter().rev().map(Segment::inverted).collect(),
    }
}

/// `∏_j exp[(−iℋ_j+ℒ_j)Δt_j]`, later segments on the left.
pub fn propagate(sched: &PulseSchedule) -> Result<Propagator> {
    let exps = sched.segment_exponentials()?;
    let mut acc = exps[0].as_ref().clone();
    for e in &exps[1..] {
        acc = linalg::matmul(e, &acc);
    }
    Ok(Propagator {
        value: SuperOperator::from_matrix(sched.dim(), acc)?,
        schedule_hash: sched.hash_hex(),
        segments: sched.segments.len(),
        method: "pade13-scaling-squaring",
    })
}

/// Gauss–Legendre nodes and weights on `[0, 1]` (Golub–Welsch).
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            ((x + 1.0) / 2.0, v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.into_iter().unzip()
}

/// Hilbert-space propagator `e^{−iHτ}` from an eigendecomposition.
struct UnitaryFlow {
    vecs: CMat,
    vals: Vec<f64>,
}

impl UnitaryFlow {
    fn new(h: &HilbertOp) -> Self {
        let herm = linalg::hermitian_part(h.matrix());
        let eig = herm.symmetric_eigen();
        Self {
            vecs: eig.eigenvectors,
            vals: eig.eigenvalues.iter().cloned().collect(),
        }
    }

    fn at(&self, tau: f64) -> CMat {
        let mut scaled = self.vecs.clone();
        for (j, l) in self.vals.iter().enumerate() {
            let ph = c(0.0, -l * tau).exp();
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= ph;
            }
        }
        linalg::matmul(&scaled, &self.vecs.adjoint())
    }
}

pub const MAGNUS_START_NODES: usize = 16;
pub const MAGNUS_MAX_NODES: usize = 1024;
pub const MAGNUS_TOL: f64 = 1e-10;

fn magnus_with_nodes(sched: &PulseSchedule, flows: &[UnitaryFlow], n: usize) -> CMat {
    let d = sched.dim();
    let (xs, ws) = gauss_legendre_unit(n);
    let mut total = CMat::zeros(d * d, d * d);
    let mut u_start = linalg::identity(d);
    for (seg, flow) in sched.segments.iter().zip(flows) {
        let l = seg.dissipator().matrix();
        let nonzero = linalg::max_abs(l) > 0.0;
        if nonzero {
            for (x, w) in xs.iter().zip(&ws) {
                let u = linalg::matmul(&flow.at(x * seg.duration), &u_start);
                let us = linalg::kron(&u, &u.map(|z| z.conj()));
                let term = linalg::matmul(&us.adjoint(), &linalg::matmul(l, &us));
                total += term * c(w * seg.duration, 0.0);
            }
        }
        u_start = linalg::matmul(&flow.at(seg.duration), &u_start);
    }
    total
}

/// First Magnus term `Ω₁ = ∫ 𝒰†(t) ℒ(t) 𝒰(t) dt` by per-segment
/// Gauss–Legendre quadrature with node doubling.
pub fn magnus1(sched: &PulseSchedule) -> Result<SuperOperator> {
    let flows: Vec<UnitaryFlow> = sched
        .segments
        .iter()
        .map(|s| UnitaryFlow::new(&s.hamiltonian()))
        .collect();
    let mut n = MAGNUS_START_NODES;
    let mut prev = magnus_with_nodes(sched, &flows, n);
    let mut change = f64::INFINITY;
    while n < MAGNUS_MAX_NODES {
        n *= 2;
        let next = magnus_with_nodes(sched, &flows, n);
        change = linalg::max_abs_diff(&next, &prev);
        prev = next;
        if change < MAGNUS_TOL {
            return SuperOperator::from_matrix(sched.dim(), prev);
        }
    }
    Err(KikError::QuadratureNotConverged(change))
}

/// `𝒦_I 𝒦`.
pub fn kik_cycle(sched: &PulseSchedule) -> Result<SuperOperator> {
    let k = propagate(sched)?.value;
    let ki = propagate(&pulse_inverse(sched))?.value;
    Ok(ki.compose(&k))
}

/// `𝒦 (𝒦_I 𝒦)^{−1/2}` on the principal branch.
pub fn exact_kik_reference(sched: &PulseSchedule) -> Result<SuperOperator> {
    let k = propagate(sched)?.value;
    let ki = propagate(&pulse_inverse(sched))?.value;
    kik_reference_from(&k, &ki)
}

/// Same as [`exact_kik_reference`] for explicitly supplied `𝒦` and `𝒦_I`.
pub fn kik_reference_from(k: &SuperOperator, ki: &SuperOperator) -> Result<SuperOperator> {
    let cycle = ki.compose(k);
    let inv_sqrt = linalg::inverse_sqrt(cycle.matrix(), 1e-9)?;
    SuperOperator::from_matrix(k.dim(), linalg::matmul(k.matrix(), &inv_sqrt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::{lindblad_superop, pauli, pauli_channel_superop, sigma_minus, vectorize};
    use std::f64::consts::PI;

    fn x() -> HilbertOp {
        pauli('X').unwrap()
    }
    fn z() -> HilbertOp {
        pauli('Z').unwrap()
    }

    #[test]
    fn pulse_inverse_single_and_two_segment() {
        let l = pauli_channel_superop(&[("Z", 0.1)]).unwrap();
        let s = PulseSchedule::single(Segment::new(x(), l.clone(), 1.0, "a").unwrap());
        let inv = pulse_inverse(&s);
        assert_eq!(inv.segments()[0].hamiltonian(), x().scale(-1.0));
        assert_eq!(inv.segments()[0].dissipator(), &l);
        assert_eq!(pulse_inverse(&inv), s);

        let lb = lindblad_superop(&[(sigma_minus(), 0.2)], 2).unwrap();
        let two = PulseSchedule::new(vec![
            Segment::new(x(), l.clone(), 1.0, "a").unwrap(),
            Segment::new(z(), lb.clone(), 0.5, "b").unwrap(),
        ])
        .unwrap();
        let inv = pulse_inverse(&two);
        assert_eq!(inv.segments()[0].label, "b");
        assert_eq!(inv.segments()[0].hamiltonian(), z().scale(-1.0));
        assert_eq!(inv.segments()[0].dissipator(), &lb);
        assert_eq!(inv.segments()[1].hamiltonian(), x().scale(-1.0));
        assert_eq!(inv.segments()[1].dissipator(), &l);
        assert!((inv.total_time() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn propagate_pi_x_rotation() {
        let s = PulseSchedule::single(Segment::noiseless(x().scale(PI / 2.0), 1.0, "x").unwrap());
        let p = propagate(&s).unwrap();
        let u = x().scale_complex(c(0.0, -1.0));
        let want = SuperOperator::unitary(&u);
        assert!(p.value.max_abs_diff(&want) < 1e-10);
    }

    #[test]
    fn propagate_amplitude_damping() {
        let gamma = 0.7;
        let l = lindblad_superop(&[(sigma_minus(), gamma)], 2).unwrap();
        let s = PulseSchedule::single(Segment::new(HilbertOp::zeros(2), l, 1.3, "ad").unwrap());
        let p = propagate(&s).unwrap();
        let out = p
            .value
            .apply(&vectorize(&HilbertOp::basis_projector(2, 1)))
            .unwrap()
            .to_matrix();
        assert!((out.matrix()[(1, 1)].re - (-gamma * 1.3f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn propagate_composition_order() {
        let s2 = 1.0 / 2f64.sqrt();
        let had = HilbertOp::from_real_rows(2, &[s2, s2, s2, -s2]).unwrap();
        // H = (π/2)(I − Had) generates Had up to phase; same for Z
        let gen = |u: &HilbertOp| HilbertOp::identity(2).add(&u.scale(-1.0)).scale(PI / 2.0);
        let s = PulseSchedule::new(vec![
            Segment::noiseless(gen(&had), 1.0, "h").unwrap(),
            Segment::noiseless(gen(&z()), 1.0, "z").unwrap(),
        ])
        .unwrap();
        let p = propagate(&s).unwrap();
        let want = SuperOperator::unitary(&z().mul(&had));
        assert!(p.value.max_abs_diff(&want) < 1e-10);
    }

    #[test]
    fn magnus_constant_integrand() {
        let l = lindblad_superop(&[(sigma_minus(), 0.3)], 2).unwrap();
        let s = PulseSchedule::single(Segment::new(HilbertOp::zeros(2), l.clone(), 2.0, "l").unwrap());
        let om = magnus1(&s).unwrap();
        assert!(om.max_abs_diff(&l.scale(2.0)) < 1e-12);

        let lz = pauli_channel_superop(&[("Z", 0.05)]).unwrap();
        let s = PulseSchedule::single(Segment::new(z().scale(0.8), lz.clone(), 1.5, "z").unwrap());
        let om = magnus1(&s).unwrap();
        assert!(om.max_abs_diff(&lz.scale(1.5)) < 1e-12);
    }

    #[test]
    fn magnus_doubling_identity() {
        let l = lindblad_superop(&[(sigma_minus(), 0.2), (z(), 0.1)], 2).unwrap();
        let s = PulseSchedule::new(vec![
            Segment::new(x().scale(1.1), l.clone(), 0.7, "a").unwrap(),
            Segment::new(z().scale(0.4).add(&x().scale(0.3)), l, 0.9, "b").unwrap(),
        ])
        .unwrap();
        let once = magnus1(&s).unwrap();
        let twice = magnus1(&s.then(&pulse_inverse(&s))).unwrap();
        assert!(twice.max_abs_diff(&once.scale(2.0)) < 1e-9);
    }

    #[test]
    fn kik_cycle_noiseless_and_pauli() {
        let s = PulseSchedule::single(Segment::noiseless(x().scale(0.9), 1.0, "x").unwrap());
        assert!(kik_cycle(&s).unwrap().max_abs_diff(&SuperOperator::identity(2)) < 1e-10);
        let l = pauli_channel_superop(&[("Z", 0.02), ("X", 0.01)]).unwrap();
        let s = PulseSchedule::single(Segment::new(x().scale(0.9).add(&z().scale(0.4)), l, 1.0, "x").unwrap());
        assert!(kik_cycle(&s).unwrap().is_hermitian(1e-9));
    }

    #[test]
    fn reference_noiseless_is_unitary() {
        let s = PulseSchedule::single(Segment::noiseless(x().scale(0.9), 1.0, "x").unwrap());
        let r = exact_kik_reference(&s).unwrap();
        assert!(r.max_abs_diff(&propagate(&s).unwrap().value) < 1e-10);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre_unit(8);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(15)).sum();
        assert!((v - 1.0 / 16.0).abs() < 1e-14);
    }
}
