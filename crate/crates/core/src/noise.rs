//! Dissipator generators and drifting noise amplitudes.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::dynamics::PulseSchedule;
use crate::error::{KikError, Result};
use crate::linalg::{self, c};
use crate::liouville::{lindblad_superop, pauli_channel_superop, vectorize, HilbertOp, SuperOperator};

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseKind {
    /// Lindblad jump operators with rates.
    JumpOperators(Vec<(HilbertOp, f64)>),
    /// `Σ α_k (P_k ⊗ P_kᵀ − 𝓘)`.
    PauliChannel(Vec<(String, f64)>),
    /// Generator of `ρ → (1−p)ρ + p I/d` at unit time.
    GlobalDepolarizing {
        p: f64,
        dim: usize,
    },
    Custom(SuperOperator),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub xi: f64,
    /// Allow a `Custom` generator that does not annihilate `<I|`.
    pub non_trace_preserving: bool,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, xi: f64) -> Self {
        Self {
            kind,
            xi,
            non_trace_preserving: false,
        }
    }

    pub fn dim(&self) -> Result<usize> {
        match &self.kind {
            NoiseKind::JumpOperators(j) => j
                .first()
                .map(|(a, _)| a.dim())
                .ok_or_else(|| KikError::InvalidSpec("empty jump list".into())),
            NoiseKind::PauliChannel(t) => t
                .first()
                .map(|(s, _)| 1usize << s.len())
                .ok_or_else(|| KikError::InvalidSpec("empty Pauli term list".into())),
            NoiseKind::GlobalDepolarizing { dim, .. } => Ok(*dim),
            NoiseKind::Custom(s) => Ok(s.dim()),
        }
    }

    /// Number of independently scalable terms.
    pub fn term_count(&self) -> usize {
        match &self.kind {
            NoiseKind::JumpOperators(j) => j.len(),
            NoiseKind::PauliChannel(t) => t.len(),
            _ => 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.xi >= 0.0) || !self.xi.is_finite() {
            return Err(KikError::InvalidSpec(format!("noise strength xi = {}", self.xi)));
        }
        match &self.kind {
            NoiseKind::JumpOperators(j) => {
                if let Some((_, r)) = j.iter().find(|(_, r)| !(*r >= 0.0)) {
                    return Err(KikError::InvalidSpec(format!("negative rate {r}")));
                }
            }
            NoiseKind::PauliChannel(t) => {
                if let Some((_, a)) = t.iter().find(|(_, a)| !(*a >= 0.0)) {
                    return Err(KikError::InvalidSpec(format!("negative Pauli rate {a}")));
                }
            }
            NoiseKind::GlobalDepolarizing { p, dim } => {
                if !(0.0..1.0).contains(p) {
                    return Err(KikError::InvalidSpec(format!("depolarizing p = {p} not in [0,1)")));
                }
                if *dim == 0 {
                    return Err(KikError::InvalidSpec("depolarizing dimension 0".into()));
                }
            }
            NoiseKind::Custom(s) => {
                if !self.non_trace_preserving && !s.annihilates_identity_dual(1e-10) {
                    return Err(KikError::InvalidSpec(
                        "custom generator is not trace preserving; set non_trace_preserving".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Unscaled generators of each term, in declaration order.
    pub fn term_generators(&self) -> Result<Vec<SuperOperator>> {
        self.validate()?;
        let dim = self.dim()?;
        match &self.kind {
            NoiseKind::JumpOperators(j) => j
                .iter()
                .map(|(a, r)| lindblad_superop(&[(a.clone(), *r)], dim))
                .collect(),
            NoiseKind::PauliChannel(t) => t
                .iter()
                .map(|(s, a)| pauli_channel_superop(&[(s.as_str(), *a)]))
                .collect(),
            NoiseKind::GlobalDepolarizing { p, dim } => Ok(vec![depolarizing_generator(*p, *dim)]),
            NoiseKind::Custom(s) => Ok(vec![s.clone()]),
        }
    }
}

/// `ln(1−p) (𝕀 − |I><I|/d)`.
fn depolarizing_generator(p: f64, d: usize) -> SuperOperator {
    let vi = vectorize(&HilbertOp::identity(d));
    let v = vi.vector();
    let proj = v * v.adjoint() * c(1.0 / d as f64, 0.0);
    let m = (linalg::identity(d * d) - proj) * c((1.0 - p).ln(), 0.0);
    SuperOperator::from_matrix(d, m).expect("square by construction")
}

/// `ξ · Σ_k ℒ_k`.
pub fn build_generator(spec: &NoiseSpec) -> Result<SuperOperator> {
    let terms = spec.term_generators()?;
    let dim = spec.dim()?;
    let mut total = SuperOperator::zeros(dim);
    for t in &terms {
        total = total.add(t);
    }
    Ok(total.scale(spec.xi))
}

/// Amplitude waveform of one noise term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "shape", deny_unknown_fields)]
pub enum Waveform {
    Constant {
        value: f64,
    },
    /// `scale · (offset + cos(2t/time_scale + phase))`, period `π · time_scale`.
    Sinusoid {
        scale: f64,
        offset: f64,
        time_scale: f64,
        phase: f64,
    },
}

impl Waveform {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Waveform::Constant { value } => value,
            Waveform::Sinusoid {
                scale,
                offset,
                time_scale,
                phase,
            } => scale * (offset + (2.0 * t / time_scale + phase).cos()),
        }
    }

    pub fn period(&self) -> Option<f64> {
        match *self {
            Waveform::Constant { .. } => None,
            Waveform::Sinusoid { time_scale, .. } => Some(std::f64::consts::PI * time_scale),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Discretization {
    /// One generator per shot, evaluated at the integer shot index.
    #[default]
    PerShot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftProfile {
    pub waveforms: Vec<Waveform>,
    #[serde(default)]
    pub discretization: Discretization,
}

impl DriftProfile {
    pub fn constant(n_terms: usize) -> Self {
        Self {
            waveforms: vec![Waveform::Constant { value: 1.0 }; n_terms],
            discretization: Discretization::PerShot,
        }
    }

    /// The four amplitudes `3(1+cos)`, `1+sin`, `2(1+cos)`, `3(1+sin)` of
    /// argument `2t/time_scale`.
    pub fn four_term_demo(time_scale: f64) -> Self {
        let cosw = |s| Waveform::Sinusoid {
            scale: s,
            offset: 1.0,
            time_scale,
            phase: 0.0,
        };
        let sinw = |s| Waveform::Sinusoid {
            scale: s,
            offset: 1.0,
            time_scale,
            phase: -FRAC_PI_2,
        };
        Self {
            waveforms: vec![cosw(3.0), sinw(1.0), cosw(2.0), sinw(3.0)],
            discretization: Discretization::PerShot,
        }
    }

    pub fn amplitudes(&self, shot_index: u64) -> Vec<f64> {
        let t = shot_index as f64;
        self.waveforms.iter().map(|w| w.value(t)).collect()
    }

    /// Check `f_k(n) >= 0` for `n < shots`.
    pub fn validate(&self, shots: u64) -> Result<()> {
        for n in 0..shots {
            if let Some(v) = self.amplitudes(n).into_iter().find(|v| *v < -1e-12) {
                return Err(KikError::InvalidSpec(format!(
                    "negative drift amplitude {v} at shot {n}"
                )));
            }
        }
        Ok(())
    }
}

/// Precomputed term generators for repeated per-shot evaluation.
#[derive(Debug, Clone)]
pub struct DriftingNoise {
    terms: Vec<SuperOperator>,
    xi: f64,
    profile: DriftProfile,
}

impl DriftingNoise {
    pub fn new(spec: &NoiseSpec, profile: &DriftProfile) -> Result<Self> {
        let terms = spec.term_generators()?;
        if terms.len() != profile.waveforms.len() {
            return Err(KikError::InvalidSpec(format!(
                "{} noise terms but {} drift waveforms",
                terms.len(),
                profile.waveforms.len()
            )));
        }
        Ok(Self {
            terms,
            xi: spec.xi,
            profile: profile.clone(),
        })
    }

    pub fn at(&self, shot_index: u64) -> SuperOperator {
        let f = self.profile.amplitudes(shot_index);
        let mut total = SuperOperator::zeros(self.terms[0].dim());
        for (t, fk) in self.terms.iter().zip(f) {
            total = total.add(&t.scale(self.xi * fk));
        }
        total
    }
}

/// `Σ_k ξ f_k(n) ℒ_k` for shot `n`.
pub fn drift_sampled_generator(spec: &NoiseSpec, profile: &DriftProfile, shot_index: u64) -> Result<SuperOperator> {
    Ok(DriftingNoise::new(spec, profile)?.at(shot_index))
}

/// `Σ_j Δt_j σ_max(ℒ_j)`; repeated dissipators are evaluated once.
pub fn accumulated_noise(sched: &PulseSchedule) -> f64 {
    let mut cache: Vec<(&SuperOperator, f64)> = Vec::new();
    let mut total = 0.0;
    for seg in sched.segments() {
        let l = seg.dissipator();
        let norm = match cache.iter().find(|(m, _)| std::ptr::eq(*m, l) || *m == l) {
            Some((_, n)) => *n,
            None => {
                let n = if linalg::max_abs(l.matrix()) == 0.0 {
                    0.0
                } else {
                    l.spectral_norm()
                };
                cache.push((l, n));
                n
            }
        };
        total += seg.duration * norm;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Segment;
    use crate::liouville::{pauli, sigma_minus};

    fn emission_4q(xi: f64) -> NoiseSpec {
        let jumps = (0..4)
            .map(|q| (HilbertOp::on_qubit(&sigma_minus(), q, 4), 1.0))
            .collect();
        NoiseSpec::new(NoiseKind::JumpOperators(jumps), xi)
    }

    #[test]
    fn emission_generator_is_trace_preserving() {
        let g = build_generator(&emission_4q(0.02)).unwrap();
        assert_eq!(g.dim(), 16);
        assert!(g.annihilates_identity_dual(1e-12));
        let zero = build_generator(&emission_4q(0.0)).unwrap();
        assert_eq!(linalg::max_abs(zero.matrix()), 0.0);
    }

    #[test]
    fn two_qubit_dephasing_and_decay_generator() {
        let z = pauli('Z').unwrap();
        let jumps = vec![(z, 1.0), (sigma_minus(), 0.1)];
        let g = build_generator(&NoiseSpec::new(NoiseKind::JumpOperators(jumps), 0.02)).unwrap();
        assert!(g.annihilates_identity_dual(1e-12));
        // dephasing rate on the coherence: 2·ξ·γ₁ + ξ·γ₂/2
        let want = -(2.0 * 0.02 + 0.5 * 0.002);
        assert!((g.matrix()[(1, 1)].re - want).abs() < 1e-14);
    }

    #[test]
    fn depolarizing_generator_exponential() {
        let p = 0.3;
        let spec = NoiseSpec::new(NoiseKind::GlobalDepolarizing { p, dim: 2 }, 1.0);
        let e = build_generator(&spec).unwrap().exp(1.0).unwrap();
        let rho = vectorize(&HilbertOp::basis_projector(2, 0));
        let out = e.apply(&rho).unwrap().to_matrix();
        assert!((out.matrix()[(0, 0)].re - (1.0 - p / 2.0)).abs() < 1e-12);
        assert!((out.matrix()[(1, 1)].re - p / 2.0).abs() < 1e-12);
    }

    #[test]
    fn custom_generator_requires_flag() {
        let leak = SuperOperator::identity(2).scale(-0.1);
        let mut spec = NoiseSpec::new(NoiseKind::Custom(leak), 1.0);
        assert!(matches!(build_generator(&spec), Err(KikError::InvalidSpec(_))));
        spec.non_trace_preserving = true;
        assert!(build_generator(&spec).is_ok());
    }

    #[test]
    fn drift_profile_values() {
        let p = DriftProfile::four_term_demo(1000.0 / std::f64::consts::PI);
        let f = p.amplitudes(0);
        for (a, b) in f.iter().zip([6.0, 1.0, 4.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let per = p.waveforms[0].period().unwrap();
        assert!((per - 1000.0).abs() < 1e-9);
        for (a, b) in p.amplitudes(17).iter().zip(p.amplitudes(1017)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_drift_matches_static_generator() {
        let spec = emission_4q(0.02);
        let g = build_generator(&spec).unwrap();
        let prof = DriftProfile::constant(4);
        for n in [0, 5, 999] {
            let gn = drift_sampled_generator(&spec, &prof, n).unwrap();
            assert!(gn.max_abs_diff(&g) < 1e-15);
        }
    }

    #[test]
    fn accumulated_noise_examples() {
        let z = pauli('Z').unwrap();
        let s = PulseSchedule::single(Segment::noiseless(z.clone(), 1.0, "z").unwrap());
        assert_eq!(accumulated_noise(&s), 0.0);
        let alpha = 0.07;
        let l = pauli_channel_superop(&[("Z", alpha)]).unwrap();
        let s = PulseSchedule::single(Segment::new(z, l, 1.0, "z").unwrap());
        assert!((accumulated_noise(&s) - 2.0 * alpha).abs() < 1e-12);
        let s3 = s.repeat(3).unwrap();
        assert!((accumulated_noise(&s3) - 6.0 * alpha).abs() < 1e-12);
    }
}
