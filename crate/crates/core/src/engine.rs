//! Folded circuits `K (K_I K)^m`, their combination into mitigated
//! estimates, shot-level sampling, randomized compiling and readout
//! correction.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::coefficients::{select_coefficients, CoefficientSet, GChoice};
use crate::dynamics::{pulse_inverse, PulseSchedule};
use crate::error::{KikError, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::liouville::{
    expectation_with_residual, pauli_labels, pauli_string, qubit_count, vectorize, HilbertOp, SuperOperator,
    VecObservable, VecState,
};
use crate::noise::{DriftProfile, DriftingNoise, NoiseSpec};

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `[sched ∥ (pulse_inverse(sched) ∥ sched) × m]`.
pub fn folded_schedule(sched: &PulseSchedule, m: usize) -> PulseSchedule {
    let inv = pulse_inverse(sched);
    let mut out = sched.clone();
    for _ in 0..m {
        out = out.then(&inv).then(sched);
    }
    out
}

/// A noisy evolution, either as time-ordered factors or as one matrix.
#[derive(Debug, Clone)]
pub enum Evolution {
    Factors(Vec<Arc<CMat>>),
    Dense(SuperOperator),
}

impl Evolution {
    pub fn from_schedule(sched: &PulseSchedule) -> Result<Self> {
        Ok(Evolution::Factors(sched.segment_exponentials()?))
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        match self {
            Evolution::Factors(fs) => {
                let mut out = v.clone();
                for f in fs {
                    out = f.as_ref() * out;
                }
                out
            }
            Evolution::Dense(s) => s.matrix() * v,
        }
    }

    pub fn to_superop(&self, dim: usize) -> Result<SuperOperator> {
        match self {
            Evolution::Dense(s) => Ok(s.clone()),
            Evolution::Factors(fs) => {
                let mut acc = fs[0].as_ref().clone();
                for f in &fs[1..] {
                    acc = linalg::matmul(f, &acc);
                }
                SuperOperator::from_matrix(dim, acc)
            }
        }
    }

    /// `post ∘ self ∘ pre`.
    pub fn dressed(&self, pre: &SuperOperator, post: &SuperOperator) -> Self {
        match self {
            Evolution::Factors(fs) => {
                let mut out = Vec::with_capacity(fs.len() + 2);
                out.push(Arc::new(pre.matrix().clone()));
                out.extend(fs.iter().cloned());
                out.push(Arc::new(post.matrix().clone()));
                Evolution::Factors(out)
            }
            Evolution::Dense(s) => Evolution::Dense(post.compose(&s.compose(pre))),
        }
    }
}

/// The forward block `𝒦` and its inverse `𝒦_I`.
#[derive(Debug, Clone)]
pub struct KikPair {
    pub dim: usize,
    pub k: Evolution,
    pub ki: Evolution,
}

impl KikPair {
    /// `𝒦_I` from the pulse inverse of the schedule.
    pub fn from_schedule(sched: &PulseSchedule) -> Result<Self> {
        Ok(Self {
            dim: sched.dim(),
            k: Evolution::from_schedule(sched)?,
            ki: Evolution::from_schedule(&pulse_inverse(sched))?,
        })
    }

    /// Circuit inverse of a self-inverse block: `𝒦_I = 𝒦`, folds `𝒦^{2m+1}`.
    pub fn circuit_inverse_of_self_inverse(sched: &PulseSchedule) -> Result<Self> {
        let k = Evolution::from_schedule(sched)?;
        Ok(Self {
            dim: sched.dim(),
            ki: k.clone(),
            k,
        })
    }

    pub fn from_superops(k: SuperOperator, ki: SuperOperator) -> Result<Self> {
        if k.dim() != ki.dim() {
            return Err(KikError::DimensionMismatch {
                expected: k.dim(),
                found: ki.dim(),
            });
        }
        Ok(Self {
            dim: k.dim(),
            k: Evolution::Dense(k),
            ki: Evolution::Dense(ki),
        })
    }

    /// States `𝒦(𝒦_I𝒦)^m |ρ>` for `m = 0..=order`.
    pub fn folds(&self, rho: &VecState, order: usize) -> Result<Vec<VecState>> {
        self.check_dim(rho.dim())?;
        let mut out = Vec::with_capacity(order + 1);
        let mut v = self.k.apply(rho.vector());
        out.push(VecState::from_vector(self.dim, v.clone())?);
        for _ in 0..order {
            v = self.k.apply(&self.ki.apply(&v));
            out.push(VecState::from_vector(self.dim, v.clone())?);
        }
        Ok(out)
    }

    /// `μ = Re<ρ|𝒦_I𝒦|ρ>`.
    pub fn survival(&self, rho: &VecState) -> Result<f64> {
        self.check_dim(rho.dim())?;
        let v = self.ki.apply(&self.k.apply(rho.vector()));
        let dual = VecObservable::from_operator_unchecked(&rho.to_matrix());
        Ok(dual.apply(&VecState::from_vector(self.dim, v)?)?.re)
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim {
            return Err(KikError::DimensionMismatch {
                expected: self.dim,
                found: d,
            });
        }
        Ok(())
    }
}

/// Survival probability of `ρ` under the KIK cycle of `sched`.
pub fn survival_probability(sched: &PulseSchedule, rho: &VecState) -> Result<f64> {
    KikPair::from_schedule(sched)?.survival(rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMode {
    Exact,
    Sampled(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldedEstimates {
    pub order: usize,
    pub values: Vec<f64>,
    pub variances: Vec<f64>,
    pub shots: Vec<u64>,
    pub mode: EstimateMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MitigatedResult {
    pub estimate: f64,
    pub variance: f64,
    pub coefficients: CoefficientSet,
    pub mu: Option<f64>,
    pub g: f64,
    pub folds: FoldedEstimates,
}

/// `Σ a_m <A>_m` and `Σ a_m² var_m / N_m`.
pub fn combine(coeffs: &CoefficientSet, folds: &FoldedEstimates) -> Result<(f64, f64)> {
    if coeffs.values.len() != folds.values.len() {
        return Err(KikError::DimensionMismatch {
            expected: coeffs.values.len(),
            found: folds.values.len(),
        });
    }
    let est = compensated_sum(coeffs.values.iter().zip(&folds.values).map(|(a, v)| a * v));
    let var = match folds.mode {
        EstimateMode::Exact => 0.0,
        EstimateMode::Sampled(_) => compensated_sum(
            coeffs
                .values
                .iter()
                .zip(folds.variances.iter().zip(&folds.shots))
                .map(|(a, (v, n))| if *n == 0 { 0.0 } else { a * a * v / *n as f64 }),
        ),
    };
    Ok((est, var))
}

fn coefficients_for(
    pair: &KikPair,
    rho: &VecState,
    order: usize,
    g: GChoice,
) -> Result<(CoefficientSet, Option<f64>, f64)> {
    let mu = if g.needs_mu() && order > 0 {
        Some(pair.survival(rho)?)
    } else {
        None
    };
    let gval = mu.map(|m| g.evaluate(m)).unwrap_or(1.0);
    let coeffs = select_coefficients(order, gval, matches!(g, GChoice::One))?;
    Ok((coeffs, mu, gval))
}

/// Exact-propagation estimator for a given forward/inverse pair.
pub fn mitigate_exact_pair(
    pair: &KikPair,
    a: &VecObservable,
    rho: &VecState,
    order: usize,
    g: GChoice,
) -> Result<MitigatedResult> {
    let (coeffs, mu, gval) = coefficients_for(pair, rho, order, g)?;
    let states = pair.folds(rho, order)?;
    let id = SuperOperator::identity(pair.dim);
    let values = states
        .iter()
        .map(|s| expectation_with_residual(a, &id, s).map(|(re, _)| re))
        .collect::<Result<Vec<_>>>()?;
    let folds = FoldedEstimates {
        order,
        variances: vec![0.0; order + 1],
        shots: vec![0; order + 1],
        values,
        mode: EstimateMode::Exact,
    };
    let (estimate, variance) = combine(&coeffs, &folds)?;
    Ok(MitigatedResult {
        estimate,
        variance,
        coefficients: coeffs,
        mu,
        g: gval,
        folds,
    })
}

pub fn mitigate_exact(
    sched: &PulseSchedule,
    a: &VecObservable,
    rho: &VecState,
    order: usize,
    g: GChoice,
) -> Result<MitigatedResult> {
    mitigate_exact_pair(&KikPair::from_schedule(sched)?, a, rho, order, g)
}

/// `Σ a_m 𝒦(𝒦_I𝒦)^m |ρ>`.
pub fn mitigated_state(pair: &KikPair, rho: &VecState, coeffs: &CoefficientSet) -> Result<VecState> {
    let states = pair.folds(rho, coeffs.order)?;
    let mut v = CVec::zeros(pair.dim * pair.dim);
    for (s, a) in states.iter().zip(&coeffs.values) {
        v += s.vector() * c(*a, 0.0);
    }
    VecState::from_vector(pair.dim, v)
}

/// `Σ a_m 𝒦(𝒦_I𝒦)^m` as a superoperator.
pub fn mitigated_superop(k: &SuperOperator, ki: &SuperOperator, coeffs: &CoefficientSet) -> SuperOperator {
    let cycle = ki.compose(k);
    let mut term = k.clone();
    let mut acc = k.scale(coeffs.values[0]);
    for a in &coeffs.values[1..] {
        term = term.compose(&cycle);
        acc = acc.add(&term.scale(*a));
    }
    acc
}

/// `N_m ∝ |a_m|` with largest-remainder rounding and `N_m >= 1`.
pub fn allocate_shots(coeffs: &CoefficientSet, total: u64) -> Result<Vec<u64>> {
    let n_folds = coeffs.values.len() as u64;
    if total < n_folds {
        return Err(KikError::BudgetTooSmall {
            budget: total,
            needed: n_folds,
        });
    }
    let gamma: f64 = coeffs.values.iter().map(|a| a.abs()).sum();
    let quotas: Vec<f64> = if gamma > 0.0 {
        coeffs.values.iter().map(|a| a.abs() * total as f64 / gamma).collect()
    } else {
        vec![total as f64 / n_folds as f64; coeffs.values.len()]
    };
    let mut alloc: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
    let mut left = total - alloc.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..alloc.len()).collect();
    order.sort_by(|&i, &j| {
        let fi = quotas[i] - quotas[i].floor();
        let fj = quotas[j] - quotas[j].floor();
        fj.partial_cmp(&fi).unwrap().then(i.cmp(&j))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        alloc[i] += 1;
        left -= 1;
    }
    while let Some(zero) = alloc.iter().position(|n| *n == 0) {
        let donor = (0..alloc.len())
            .max_by(|&i, &j| alloc[i].cmp(&alloc[j]).then(j.cmp(&i)))
            .unwrap();
        alloc[donor] -= 1;
        alloc[zero] = 1;
    }
    // Σ a²/N is separable convex, so single-shot moves reach the integer optimum.
    let a2: Vec<f64> = coeffs.values.iter().map(|a| a * a).collect();
    loop {
        let gain = |i: usize| a2[i] / alloc[i] as f64 - a2[i] / (alloc[i] + 1) as f64;
        let loss = |j: usize| a2[j] / (alloc[j] - 1) as f64 - a2[j] / alloc[j] as f64;
        let best = (0..alloc.len()).max_by(|&i, &j| gain(i).total_cmp(&gain(j))).unwrap();
        let cheapest = (0..alloc.len())
            .filter(|&j| j != best && alloc[j] > 1)
            .min_by(|&i, &j| loss(i).total_cmp(&loss(j)));
        match cheapest {
            Some(j) if gain(best) > loss(j) * (1.0 + 1e-12) => {
                alloc[best] += 1;
                alloc[j] -= 1;
            }
            _ => break,
        }
    }
    Ok(alloc)
}

/// Observable diagonal in the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalObservable {
    pub values: Vec<f64>,
}

impl DiagonalObservable {
    pub fn from_operator(a: &HilbertOp) -> Result<Self> {
        let m = a.matrix();
        let d = a.dim();
        for i in 0..d {
            for j in 0..d {
                let z = m[(i, j)];
                if (i != j && z.norm() > 1e-12) || (i == j && z.im.abs() > 1e-12) {
                    return Err(KikError::InvalidSpec(
                        "sampled observables must be diagonal in the measurement basis".into(),
                    ));
                }
            }
        }
        Ok(Self {
            values: (0..d).map(|i| m[(i, i)].re).collect(),
        })
    }

    pub fn expectation(&self, probs: &[f64]) -> f64 {
        compensated_sum(self.values.iter().zip(probs).map(|(a, p)| a * p))
    }
}

/// Outcome probabilities `Re ρ_kk`, clipped at zero and renormalized.
pub fn outcome_distribution(state: &VecState) -> Vec<f64> {
    let d = state.dim();
    let mut p: Vec<f64> = (0..d).map(|k| state.vector()[k * d + k].re.max(0.0)).collect();
    let s: f64 = p.iter().sum();
    if s > 0.0 {
        p.iter_mut().for_each(|x| *x /= s);
    }
    p
}

/// Column-stochastic readout matrix `M_lk = p(l | k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    pub n_qubits: usize,
    pub m: DMatrix<f64>,
}

pub const MAX_READOUT_CONDITION: f64 = 1e8;

impl MeasurementMatrix {
    pub fn new(n_qubits: usize, m: DMatrix<f64>) -> Result<Self> {
        let d = 1usize << n_qubits;
        if m.nrows() != d || m.ncols() != d {
            return Err(KikError::DimensionMismatch {
                expected: d,
                found: m.nrows(),
            });
        }
        for j in 0..d {
            let col = m.column(j);
            if col.iter().any(|x| !(0.0..=1.0).contains(x)) || (col.sum() - 1.0).abs() > 1e-9 {
                return Err(KikError::InvalidSpec(format!(
                    "readout column {j} is not a probability vector"
                )));
            }
        }
        Ok(Self { n_qubits, m })
    }

    pub fn identity(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        Self {
            n_qubits,
            m: DMatrix::identity(d, d),
        }
    }

    /// Independent per-qubit flips `(p(1|0), p(0|1))`, qubit 0 most significant.
    pub fn from_flip_probs(flips: &[(f64, f64)]) -> Result<Self> {
        let mut m = DMatrix::from_element(1, 1, 1.0);
        for &(p01, p10) in flips {
            let q = DMatrix::from_row_slice(2, 2, &[1.0 - p01, p10, p01, 1.0 - p10]);
            m = m.kronecker(&q);
        }
        Self::new(flips.len(), m)
    }

    pub fn condition(&self) -> f64 {
        let sv = self.m.clone().singular_values();
        let min = sv.min();
        if min <= 0.0 {
            f64::INFINITY
        } else {
            sv.max() / min
        }
    }

    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        let cond = self.condition();
        if !(cond <= MAX_READOUT_CONDITION) {
            return Err(KikError::SingularMeasurementMatrix(cond));
        }
        self.m
            .clone()
            .try_inverse()
            .ok_or(KikError::SingularMeasurementMatrix(cond))
    }

    pub fn distort(&self, p: &[f64]) -> Vec<f64> {
        (&self.m * DVector::from_column_slice(p)).iter().cloned().collect()
    }

    pub fn correct(&self, q: &[f64]) -> Result<Vec<f64>> {
        Ok((self.inverse()? * DVector::from_column_slice(q))
            .iter()
            .cloned()
            .collect())
    }
}

/// Pauli frame around one block: the circuit is `post · block · pre`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RcFrame {
    pub pre: String,
    pub post: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RCRealization {
    pub k: RcFrame,
    pub ki: RcFrame,
}

/// Logical unitaries of the forward and inverse blocks to be twirled.
#[derive(Debug, Clone, PartialEq)]
pub struct RcPolicy {
    pub k_logical: HilbertOp,
    pub ki_logical: HilbertOp,
}

impl RcPolicy {
    pub fn for_unitary(u: &HilbertOp) -> Self {
        Self {
            k_logical: u.clone(),
            ki_logical: u.adjoint(),
        }
    }
}

/// Pauli label `Q` with `U P U† = e^{iφ} Q`, if one exists.
fn conjugated_pauli(u: &HilbertOp, p: &str) -> Result<Option<String>> {
    let n = p.len();
    let d = 1usize << n;
    let pm = pauli_string(p)?;
    let conj = u.mul(&pm).mul(&u.adjoint());
    for q in pauli_labels(n) {
        let qm = pauli_string(&q)?;
        let overlap = linalg::trace(&linalg::matmul(&qm.matrix().adjoint(), conj.matrix())) / c(d as f64, 0.0);
        if (overlap.norm() - 1.0).abs() < 1e-9 {
            return Ok(Some(q));
        }
    }
    Ok(None)
}

fn frame_for(u: &HilbertOp, pre: &str) -> Result<RcFrame> {
    let post = conjugated_pauli(u, pre)?.ok_or(KikError::UnsupportedLogicalUnitary)?;
    let frame = RcFrame {
        pre: pre.to_string(),
        post,
    };
    let dressed = SuperOperator::unitary(&pauli_string(&frame.post)?)
        .compose(&SuperOperator::unitary(u))
        .compose(&SuperOperator::unitary(&pauli_string(&frame.pre)?));
    if dressed.max_abs_diff(&SuperOperator::unitary(u)) > 1e-9 {
        return Err(KikError::UnsupportedLogicalUnitary);
    }
    Ok(frame)
}

/// All `4ⁿ` frames for a block, in Pauli-label order.
pub fn rc_frames(u: &HilbertOp) -> Result<Vec<RcFrame>> {
    let n = qubit_count(u.dim())?;
    pauli_labels(n).iter().map(|p| frame_for(u, p)).collect()
}

/// RC realizations with independent frames on `𝒦` and `𝒦_I`.
///
/// With `count = 4ⁿ` the `𝒦` frames enumerate the full Pauli group and the
/// `𝒦_I` frames are an independent seeded permutation of it; otherwise all
/// frames are drawn uniformly.
pub fn rc_realizations(policy: &RcPolicy, count: usize, seed: u64) -> Result<Vec<RCRealization>> {
    let fk = rc_frames(&policy.k_logical)?;
    let fki = rc_frames(&policy.ki_logical)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if count == fk.len() {
        let mut perm: Vec<usize> = (0..fki.len()).collect();
        for i in (1..perm.len()).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        return Ok(fk
            .into_iter()
            .zip(perm)
            .map(|(k, j)| RCRealization { k, ki: fki[j].clone() })
            .collect());
    }
    Ok((0..count)
        .map(|_| RCRealization {
            k: fk[rng.random_range(0..fk.len())].clone(),
            ki: fki[rng.random_range(0..fki.len())].clone(),
        })
        .collect())
}

fn frame_superops(f: &RcFrame) -> Result<(SuperOperator, SuperOperator)> {
    Ok((
        SuperOperator::unitary(&pauli_string(&f.pre)?),
        SuperOperator::unitary(&pauli_string(&f.post)?),
    ))
}

/// Uniform average of `post ∘ block ∘ pre` over the frames.
pub fn twirl_average(block: &SuperOperator, frames: &[RcFrame]) -> Result<SuperOperator> {
    if frames.is_empty() {
        return Err(KikError::InvalidSpec("no RC frames".into()));
    }
    let mut acc = SuperOperator::zeros(block.dim());
    for f in frames {
        let (pre, post) = frame_superops(f)?;
        acc = acc.add(&post.compose(&block.compose(&pre)));
    }
    Ok(acc.scale(1.0 / frames.len() as f64))
}

/// Imperfectly prepared product state averaged over `R_Z(±π/2)` on every
/// qubit. Each qubit starts in `cos(δθ/2)|0> + e^{iφ} sin(δθ/2)|1>`.
pub fn rotation_averaged_state(delta_theta: f64, phis: &[f64]) -> Result<VecState> {
    if phis.is_empty() {
        return Err(KikError::InvalidSpec("at least one qubit required".into()));
    }
    let (ch, sh) = ((delta_theta / 2.0).cos(), (delta_theta / 2.0).sin());
    let mut factors = Vec::with_capacity(phis.len());
    for phi in phis {
        let psi = [c(ch, 0.0), c(0.0, *phi).exp() * sh];
        let sigma = HilbertOp::projector(&psi);
        let mut avg = CMat::zeros(2, 2);
        for sign in [1.0, -1.0] {
            let rz = HilbertOp::from_row_slice(
                2,
                &[
                    c(0.0, -sign * std::f64::consts::FRAC_PI_4).exp(),
                    c(0.0, 0.0),
                    c(0.0, 0.0),
                    c(0.0, sign * std::f64::consts::FRAC_PI_4).exp(),
                ],
            )?;
            avg += rz.mul(&sigma).mul(&rz.adjoint()).into_matrix() * c(0.5, 0.0);
        }
        factors.push(avg);
    }
    Ok(vectorize(&HilbertOp::new(linalg::kron_all(&factors))?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuMode {
    Exact,
    /// Binomial estimate from this many survival shots.
    Sampled {
        shots: u64,
    },
}

#[derive(Debug, Clone)]
pub struct SamplingOptions {
    pub shots: u64,
    pub seed: u64,
    pub rc: Option<RcPolicy>,
    pub rc_count: usize,
    pub readout: Option<MeasurementMatrix>,
    pub mu_mode: MuMode,
}

impl SamplingOptions {
    pub fn new(shots: u64, seed: u64) -> Self {
        Self {
            shots,
            seed,
            rc: None,
            rc_count: 16,
            readout: None,
            mu_mode: MuMode::Exact,
        }
    }
}

/// Independent generator for work unit `unit` of a run with `seed`.
pub fn unit_rng(seed: u64, unit: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(unit);
    rng
}

/// Multinomial counts by sequential binomials.
pub fn sample_counts(probs: &[f64], shots: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut left = shots;
    let mut mass = 1.0f64;
    for (k, p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == probs.len() || mass <= 0.0 {
            counts[k] = left;
            left = 0;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let n = Binomial::new(left, q).map(|b| b.sample(rng)).unwrap_or(0);
        counts[k] = n;
        left -= n;
        mass -= p;
    }
    if left > 0 {
        *counts.last_mut().unwrap() += left;
    }
    counts
}

/// Mean and unbiased variance of per-outcome values weighted by counts.
fn moments(values: &[f64], counts: &[u64]) -> (f64, f64) {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = compensated_sum(values.iter().zip(counts).map(|(v, k)| v * *k as f64)) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(values.iter().zip(counts).map(|(v, k)| (v - mean).powi(2) * *k as f64));
    (mean, ss / (n - 1) as f64)
}

/// Split `n` into `parts` near-equal pieces, remainder to the first ones.
pub fn split_even(n: u64, parts: usize) -> Vec<u64> {
    let base = n / parts as u64;
    let rem = (n % parts as u64) as usize;
    (0..parts).map(|i| base + u64::from(i < rem)).collect()
}

/// Shot-level estimator with optional RC and readout distortion.
pub fn mitigate_sampled(
    sched: &PulseSchedule,
    a: &DiagonalObservable,
    rho: &VecState,
    order: usize,
    g: GChoice,
    opts: &SamplingOptions,
) -> Result<MitigatedResult> {
    mitigate_sampled_pair(&KikPair::from_schedule(sched)?, a, rho, order, g, opts)
}

pub fn mitigate_sampled_pair(
    pair: &KikPair,
    a: &DiagonalObservable,
    rho: &VecState,
    order: usize,
    g: GChoice,
    opts: &SamplingOptions,
) -> Result<MitigatedResult> {
    if a.values.len() != pair.dim {
        return Err(KikError::DimensionMismatch {
            expected: pair.dim,
            found: a.values.len(),
        });
    }
    let mu = if g.needs_mu() && order > 0 {
        let exact = pair.survival(rho)?.clamp(0.0, 1.0);
        Some(match opts.mu_mode {
            MuMode::Exact => exact,
            MuMode::Sampled { shots } => {
                let mut rng = unit_rng(opts.seed, u64::MAX);
                let k = Binomial::new(shots, exact).map(|b| b.sample(&mut rng)).unwrap_or(0);
                k as f64 / shots.max(1) as f64
            }
        })
    } else {
        None
    };
    let gval = mu.map(|m| g.evaluate(m)).unwrap_or(1.0);
    let coeffs = select_coefficients(order, gval, matches!(g, GChoice::One))?;
    let shots = allocate_shots(&coeffs, opts.shots)?;

    // per-outcome single-shot values, readout-corrected when needed
    let (shot_values, readout) = match &opts.readout {
        Some(m) => {
            let inv = m.inverse()?;
            let row = DVector::from_column_slice(&a.values).transpose() * inv;
            (row.iter().cloned().collect::<Vec<f64>>(), Some(m))
        }
        None => (a.values.clone(), None),
    };

    let pairs: Vec<KikPair> = match &opts.rc {
        None => vec![pair.clone()],
        Some(policy) => rc_realizations(policy, opts.rc_count, opts.seed)?
            .iter()
            .map(|r| {
                let (kp, kq) = frame_superops(&r.k)?;
                let (ip, iq) = frame_superops(&r.ki)?;
                Ok(KikPair {
                    dim: pair.dim,
                    k: pair.k.dressed(&kp, &kq),
                    ki: pair.ki.dressed(&ip, &iq),
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let distributions: Vec<Vec<Vec<f64>>> = pairs
        .par_iter()
        .map(|p| {
            let states = p.folds(rho, order)?;
            Ok(states
                .iter()
                .map(|s| {
                    let probs = outcome_distribution(s);
                    match readout {
                        Some(m) => m.distort(&probs),
                        None => probs,
                    }
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;

    let per_fold: Vec<(f64, f64)> = (0..=order)
        .into_par_iter()
        .map(|m| {
            let mut rng = unit_rng(opts.seed, m as u64);
            let sub = split_even(shots[m], distributions.len());
            let mut counts = vec![0u64; pair.dim];
            for (r, n) in sub.iter().enumerate() {
                for (tot, k) in counts.iter_mut().zip(sample_counts(&distributions[r][m], *n, &mut rng)) {
                    *tot += k;
                }
            }
            moments(&shot_values, &counts)
        })
        .collect();

    let folds = FoldedEstimates {
        order,
        values: per_fold.iter().map(|(v, _)| *v).collect(),
        variances: per_fold.iter().map(|(_, v)| *v).collect(),
        shots,
        mode: EstimateMode::Sampled(opts.seed),
    };
    let (estimate, variance) = combine(&coeffs, &folds)?;
    Ok(MitigatedResult {
        estimate,
        variance,
        coefficients: coeffs,
        mu,
        g: gval,
        folds,
    })
}

/// How a set's budget is split across folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldSplit {
    Equal,
    Proportional,
}

#[derive(Debug, Clone)]
pub struct SetAveragingOptions {
    pub sets: usize,
    pub shots: u64,
    pub seed: u64,
    /// Draw one outcome per shot instead of using exact per-shot expectations.
    pub sampled: bool,
    pub split: FoldSplit,
}

/// Average of per-set estimates under a drifting dissipator.
///
/// Shots are executed set by set, and within a set fold by fold; shot `n`
/// of the run sees the dissipator `Σ_k ξ f_k(n) ℒ_k` on every segment of
/// `sched`, and that dissipator is held fixed for the whole fold circuit.
pub fn set_averaged_mitigate(
    sched: &PulseSchedule,
    a: &VecObservable,
    rho: &VecState,
    order: usize,
    g: GChoice,
    noise: &NoiseSpec,
    drift: &DriftProfile,
    opts: &SetAveragingOptions,
) -> Result<MitigatedResult> {
    if opts.sets == 0 {
        return Err(KikError::InvalidSpec("number of sets must be >= 1".into()));
    }
    let per_set_min = (order + 1) as u64;
    if opts.shots < opts.sets as u64 * per_set_min {
        return Err(KikError::BudgetTooSmall {
            budget: opts.shots,
            needed: opts.sets as u64 * per_set_min,
        });
    }
    drift.validate(opts.shots)?;
    let noise = DriftingNoise::new(noise, drift)?;
    let diag = if opts.sampled {
        Some(DiagonalObservable::from_operator(&observable_operator(a))?)
    } else {
        None
    };
    let pair_at = |n: u64| -> Result<KikPair> {
        let l = noise.at(n);
        let s = sched.map_dissipators(|_| l.clone())?;
        KikPair::from_schedule(&s)
    };
    let set_sizes = split_even(opts.shots, opts.sets);
    let mut start = 0u64;
    let mut set_starts = Vec::with_capacity(opts.sets);
    for n in &set_sizes {
        set_starts.push(start);
        start += n;
    }
    let results: Vec<(f64, CoefficientSet, Option<f64>, f64, Vec<f64>)> = set_sizes
        .par_iter()
        .zip(set_starts.par_iter())
        .enumerate()
        .map(|(s, (&size, &first))| {
            let mid = pair_at(first + size / 2)?;
            let (coeffs, mu, gval) = coefficients_for(&mid, rho, order, g)?;
            let fold_shots = match opts.split {
                FoldSplit::Equal => split_even(size, order + 1),
                FoldSplit::Proportional => allocate_shots(&coeffs, size)?,
            };
            let mut rng = unit_rng(opts.seed, s as u64);
            let mut values = Vec::with_capacity(order + 1);
            let mut n = first;
            for (m, &count) in fold_shots.iter().enumerate() {
                let mut acc = Vec::with_capacity(count as usize);
                for _ in 0..count {
                    let pair = pair_at(n)?;
                    let state = pair.folds(rho, m)?.pop().expect("non-empty");
                    let v = match &diag {
                        None => a.apply(&state)?.re,
                        Some(dg) => {
                            let probs = outcome_distribution(&state);
                            let u: f64 = rng.random();
                            let mut cum = 0.0;
                            let mut pick = probs.len() - 1;
                            for (k, p) in probs.iter().enumerate() {
                                cum += p;
                                if u < cum {
                                    pick = k;
                                    break;
                                }
                            }
                            dg.values[pick]
                        }
                    };
                    acc.push(v);
                    n += 1;
                }
                values.push(compensated_sum(acc.iter().cloned()) / count.max(1) as f64);
            }
            let est = compensated_sum(coeffs.values.iter().zip(&values).map(|(a, v)| a * v));
            Ok((est, coeffs, mu, gval, values))
        })
        .collect::<Result<Vec<_>>>()?;
    let estimate = compensated_sum(results.iter().map(|r| r.0)) / opts.sets as f64;
    let first = &results[0];
    let folds = FoldedEstimates {
        order,
        values: (0..=order)
            .map(|m| compensated_sum(results.iter().map(|r| r.4[m])) / opts.sets as f64)
            .collect(),
        variances: vec![0.0; order + 1],
        shots: vec![0; order + 1],
        mode: if opts.sampled {
            EstimateMode::Sampled(opts.seed)
        } else {
            EstimateMode::Exact
        },
    };
    Ok(MitigatedResult {
        estimate,
        variance: 0.0,
        coefficients: first.1.clone(),
        mu: first.2,
        g: first.3,
        folds,
    })
}

/// Recover `A` from `<A|` (entries are the conjugated row-major flattening).
fn observable_operator(a: &VecObservable) -> HilbertOp {
    let d = a.dim();
    let entries: Vec<_> = a.row().iter().map(|z| z.conj()).collect();
    HilbertOp::from_row_slice(d, &entries).expect("square by construction")
}
