//! Physical models behind the scenario drivers.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};

use crate::dynamics::{PulseSchedule, Segment};
use crate::error::{KikError, Result};
use crate::linalg::c;
use crate::liouville::{
    lindblad_superop, pauli, pauli_channel_superop, pauli_string, sigma_minus, vectorize, HilbertOp, SuperOperator,
    VecState,
};
use crate::noise::{DriftProfile, NoiseKind, NoiseSpec, Waveform};

fn on(op: &HilbertOp, q: usize, n: usize) -> HilbertOp {
    HilbertOp::on_qubit(op, q, n)
}

/// `|0…0><0…0|` on `n` qubits.
pub fn ground_state(n: usize) -> VecState {
    vectorize(&HilbertOp::basis_projector(1 << n, 0))
}

/// Transverse-field Ising chain parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    pub n_qubits: usize,
    pub field: f64,
    pub coupling: f64,
    pub trotter_steps: usize,
    pub step_time: f64,
    pub jump_weights: Vec<f64>,
}

impl IsingModel {
    pub fn reference() -> Self {
        Self {
            n_qubits: 5,
            field: 0.2,
            coupling: 0.1,
            trotter_steps: 10,
            step_time: 1.0,
            jump_weights: vec![0.5, 1.7, 0.3, 2.0, 1.0],
        }
    }

    /// `g Σ X_j`.
    pub fn field_hamiltonian(&self) -> HilbertOp {
        let n = self.n_qubits;
        let x = pauli('X').expect("valid");
        let mut h = HilbertOp::zeros(1 << n);
        for j in 0..n {
            h = h.add(&on(&x, j, n));
        }
        h.scale(self.field)
    }

    /// `J Σ Z_j Z_{j+1}` on an open chain.
    pub fn coupling_hamiltonian(&self) -> HilbertOp {
        let n = self.n_qubits;
        let z = pauli('Z').expect("valid");
        let mut h = HilbertOp::zeros(1 << n);
        for j in 0..n.saturating_sub(1) {
            h = h.add(&on(&z, j, n).mul(&on(&z, j + 1, n)));
        }
        h.scale(self.coupling)
    }

    /// Collective decay `S = Σ w_j σ⁻_j`.
    pub fn collective_jump(&self) -> Result<HilbertOp> {
        let n = self.n_qubits;
        if self.jump_weights.len() != n {
            return Err(KikError::InvalidSpec(format!(
                "{} jump weights for {} qubits",
                self.jump_weights.len(),
                n
            )));
        }
        let sm = sigma_minus();
        let mut s = HilbertOp::zeros(1 << n);
        for (j, w) in self.jump_weights.iter().enumerate() {
            s = s.add(&on(&sm, j, n).scale(*w));
        }
        Ok(s)
    }

    /// Trotter steps `e^{−igℋ_XΔt+ξℒΔt} e^{−iJℋ_ZZΔt+ξℒΔt}`, coupling first.
    pub fn schedule(&self, xi: f64) -> Result<PulseSchedule> {
        if self.n_qubits == 0 || self.n_qubits > 6 {
            return Err(KikError::InvalidSpec(format!(
                "Ising chain needs 1..=6 qubits, got {}",
                self.n_qubits
            )));
        }
        if self.trotter_steps == 0 {
            return Err(KikError::InvalidSpec("trotter_steps must be >= 1".into()));
        }
        let d = 1 << self.n_qubits;
        let l = lindblad_superop(&[(self.collective_jump()?, 1.0)], d)?.scale(xi);
        let zz = Segment::new(self.coupling_hamiltonian(), l.clone(), self.step_time, "zz")?;
        let x = Segment::new(self.field_hamiltonian(), l, self.step_time, "x")?;
        PulseSchedule::new(vec![zz, x])?.repeat(self.trotter_steps)
    }
}

/// Cross-resonance CNOT calibration model on two qubits (control first).
#[derive(Debug, Clone, PartialEq)]
pub struct CnotModel {
    pub decay_weight: f64,
}

impl CnotModel {
    /// `Σ_q D[Z_q] + w D[σ⁻_q]`.
    pub fn dissipator(&self) -> Result<SuperOperator> {
        let z = pauli('Z')?;
        let sm = sigma_minus();
        let mut jumps = Vec::new();
        for q in 0..2 {
            jumps.push((on(&z, q, 2), 1.0));
            jumps.push((on(&sm, q, 2), self.decay_weight));
        }
        lindblad_superop(&jumps, 4)
    }

    /// `(π/4) Z⊗X`, so that amplitude `A` gives `e^{−i(Aπ/4)Z⊗X}`.
    pub fn cr_hamiltonian() -> HilbertOp {
        pauli_string("ZX").expect("valid").scale(FRAC_PI_4)
    }

    /// The ideal gate `e^{−iπ/4 Z⊗X}`.
    pub fn target_unitary() -> HilbertOp {
        pauli_string("ZX")
            .expect("valid")
            .unitary_exp(FRAC_PI_4)
            .expect("Hermitian")
    }

    /// Bare noisy CR pulse at amplitude `a`.
    pub fn cr_segment(&self, a: f64, xi: f64) -> Result<Segment> {
        Segment::new(Self::cr_hamiltonian().scale(a), self.dissipator()?.scale(xi), 1.0, "cr")
    }

    /// `R_Z^c(−π/2) · CR(A) · R_X^t(−π/2)` with noiseless single-qubit
    /// rotations, repeated `chain` times.
    pub fn calibration_chain(&self, a: f64, xi: f64, chain: usize) -> Result<PulseSchedule> {
        if chain == 0 {
            return Err(KikError::InvalidSpec("chain_length must be >= 1".into()));
        }
        let rx = Segment::noiseless(pauli_string("IX")?.scale(-FRAC_PI_4), 1.0, "rx")?;
        let rz = Segment::noiseless(pauli_string("ZI")?.scale(-FRAC_PI_4), 1.0, "rz")?;
        PulseSchedule::new(vec![rx, self.cr_segment(a, xi)?, rz])?.repeat(chain)
    }

    /// `(|0>+|1>)/√2 ⊗ |0>`.
    pub fn probe_state() -> VecState {
        let h = 0.5f64.sqrt();
        vectorize(&HilbertOp::projector(&[c(h, 0.0), c(0.0, 0.0), c(h, 0.0), c(0.0, 0.0)]))
    }

    /// `I ⊗ Y`.
    pub fn probe_observable() -> HilbertOp {
        pauli_string("IY").expect("valid")
    }
}

/// Ordinary least-squares line through `(x, y)`; returns the root `−b/a`.
pub fn ols_root(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(KikError::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let mut distinct = x.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(KikError::RegressionDegenerate(format!(
            "{} distinct amplitudes",
            distinct.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    if slope == 0.0 || !slope.is_finite() {
        return Err(KikError::RegressionDegenerate(format!("slope {slope}")));
    }
    let intercept = my - slope * mx;
    Ok(-intercept / slope)
}

/// CNOT pulses `e^{−iπ|1><1|⊗|−><−|}` for either control, built from a
/// single segment of duration 1.
pub fn cnot_hamiltonian(control: usize) -> HilbertOp {
    let i = HilbertOp::identity(2);
    let p1 = i.add(&pauli('Z').expect("valid").scale(-1.0)).scale(0.5);
    let pm = i.add(&pauli('X').expect("valid").scale(-1.0)).scale(0.5);
    let h = if control == 0 { p1.kron(&pm) } else { pm.kron(&p1) };
    h.scale(PI)
}

/// Chain of SWAP gates, each three CNOT pulses with a Pauli channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapChainModel {
    pub repetitions: usize,
    pub pauli_rates: BTreeMap<String, f64>,
    /// Relative amplitude error on every CNOT pulse.
    pub overrotation: f64,
}

impl SwapChainModel {
    pub fn dissipator(&self, xi: f64) -> Result<SuperOperator> {
        let terms: Vec<(&str, f64)> = self.pauli_rates.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        if terms.is_empty() {
            return Ok(SuperOperator::zeros(4));
        }
        for (k, _) in &terms {
            if k.len() != 2 {
                return Err(KikError::InvalidPauliString(k.to_string()));
            }
        }
        Ok(pauli_channel_superop(&terms)?.scale(xi))
    }

    /// One SWAP as `CNOT₀₁ CNOT₁₀ CNOT₀₁`.
    pub fn swap_block(&self, xi: f64) -> Result<PulseSchedule> {
        let l = self.dissipator(xi)?;
        let s = 1.0 + self.overrotation;
        let a = Segment::new(cnot_hamiltonian(0).scale(s), l.clone(), 1.0, "cx01")?;
        let b = Segment::new(cnot_hamiltonian(1).scale(s), l, 1.0, "cx10")?;
        PulseSchedule::new(vec![a.clone(), b, a])
    }

    pub fn schedule(&self, xi: f64) -> Result<PulseSchedule> {
        if self.repetitions == 0 {
            return Err(KikError::InvalidSpec("repetitions must be >= 1".into()));
        }
        self.swap_block(xi)?.repeat(self.repetitions)
    }

    /// Ideal logical unitary `SWAP^r`.
    pub fn logical_unitary(&self) -> HilbertOp {
        let swap = HilbertOp::from_real_rows(
            4,
            &[
                1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0,
            ],
        )
        .expect("square");
        let mut u = HilbertOp::identity(4);
        for _ in 0..self.repetitions {
            u = swap.mul(&u);
        }
        u
    }
}

/// Two-qubit drift demo: `H = 3X⊗X + I⊗X`, jumps `σ⁻⊗I, |0><0|⊗I, I⊗σ⁻,
/// I⊗|0><0|` with drifting amplitudes.
pub struct DriftModel;

impl DriftModel {
    pub fn hamiltonian() -> HilbertOp {
        pauli_string("XX")
            .expect("valid")
            .scale(3.0)
            .add(&pauli_string("IX").expect("valid"))
    }

    pub fn noise(xi: f64) -> NoiseSpec {
        let i = HilbertOp::identity(2);
        let sm = sigma_minus();
        let p0 = HilbertOp::basis_projector(2, 0);
        NoiseSpec::new(
            NoiseKind::JumpOperators(vec![
                (sm.kron(&i), 1.0),
                (p0.kron(&i), 1.0),
                (i.kron(&sm), 1.0),
                (i.kron(&p0), 1.0),
            ]),
            xi,
        )
    }

    /// Drift amplitudes, or their time averages when `drift` is off.
    pub fn profile(drift: bool, time_scale: f64) -> DriftProfile {
        if drift {
            DriftProfile::four_term_demo(time_scale)
        } else {
            let mut p = DriftProfile::constant(4);
            for (w, v) in p.waveforms.iter_mut().zip([3.0, 1.0, 2.0, 3.0]) {
                *w = Waveform::Constant { value: v };
            }
            p
        }
    }

    /// Unit-duration noiseless segment; dissipators are attached per shot.
    pub fn schedule() -> Result<PulseSchedule> {
        Ok(PulseSchedule::single(Segment::noiseless(
            Self::hamiltonian(),
            1.0,
            "h",
        )?))
    }

    /// `I/2 ⊗ |0><0|`, used as both state and observable.
    pub fn state_operator() -> HilbertOp {
        HilbertOp::identity(2)
            .scale(0.5)
            .kron(&HilbertOp::basis_projector(2, 0))
    }
}

/// `n`-qubit `Σ X_j X_{j+1}` with per-qubit decay, duration `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaturationModel {
    pub n_qubits: usize,
    pub duration: f64,
}

impl SaturationModel {
    pub fn schedule(&self, xi: f64) -> Result<PulseSchedule> {
        let n = self.n_qubits;
        if !(2..=6).contains(&n) {
            return Err(KikError::InvalidSpec(format!(
                "saturation model needs 2..=6 qubits, got {n}"
            )));
        }
        let x = pauli('X')?;
        let sm = sigma_minus();
        let mut h = HilbertOp::zeros(1 << n);
        for j in 0..n - 1 {
            h = h.add(&on(&x, j, n).mul(&on(&x, j + 1, n)));
        }
        let jumps: Vec<(HilbertOp, f64)> = (0..n).map(|j| (on(&sm, j, n), xi)).collect();
        let l = lindblad_superop(&jumps, 1 << n)?;
        Ok(PulseSchedule::single(Segment::new(h, l, self.duration, "xx")?))
    }
}

/// Single-qubit dephasing: `H = 0.5 Z`, `ℒ = ξ (Z⊗Z* − 𝓘)`, `ρ = |+>`, `A = X`.
pub fn dephasing_bounds_model(xi: f64) -> Result<(PulseSchedule, VecState, HilbertOp)> {
    let l = pauli_channel_superop(&[("Z", 1.0)])?.scale(xi);
    let s = PulseSchedule::single(Segment::new(pauli('Z')?.scale(0.5), l, 1.0, "z")?);
    let h = 0.5f64.sqrt();
    let rho = vectorize(&HilbertOp::projector(&[c(h, 0.0), c(h, 0.0)]));
    Ok((s, rho, pauli('X')?))
}

/// Two qubits: `H = 0.6 X⊗X + 0.4 Z⊗I + 0.3 I⊗Y`, Pauli channel, `ρ = |00>`,
/// `A = Z⊗Z`.
pub fn pauli_bounds_model(xi: f64, rates: &BTreeMap<String, f64>) -> Result<(PulseSchedule, VecState, HilbertOp)> {
    let h = pauli_string("XX")?
        .scale(0.6)
        .add(&pauli_string("ZI")?.scale(0.4))
        .add(&pauli_string("IY")?.scale(0.3));
    let terms: Vec<(&str, f64)> = rates.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let l = if terms.is_empty() {
        SuperOperator::zeros(4)
    } else {
        pauli_channel_superop(&terms)?.scale(xi)
    };
    let s = PulseSchedule::single(Segment::new(h, l, 1.0, "h")?);
    Ok((s, ground_state(2), pauli_string("ZZ")?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::propagate;

    #[test]
    fn cnot_pulses_are_cnots() {
        let u = cnot_hamiltonian(0).unitary_exp(1.0).unwrap();
        let want = [
            1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0,
        ];
        let want = HilbertOp::from_real_rows(4, &want).unwrap();
        assert!(crate::linalg::max_abs_diff(u.matrix(), want.matrix()) < 1e-12);
    }

    #[test]
    fn swap_block_is_swap() {
        let m = SwapChainModel {
            repetitions: 1,
            pauli_rates: BTreeMap::new(),
            overrotation: 0.0,
        };
        let k = propagate(&m.schedule(0.0).unwrap()).unwrap().value;
        assert!(k.max_abs_diff(&SuperOperator::unitary(&m.logical_unitary())) < 1e-10);
    }

    #[test]
    fn ols_root_line() {
        let x = [0.9, 1.0, 1.1];
        let y: Vec<f64> = x.iter().map(|a| 2.0 * a - 1.9).collect();
        assert!((ols_root(&x, &y).unwrap() - 0.95).abs() < 1e-12);
        assert!(matches!(
            ols_root(&[1.0, 1.0], &[0.0, 1.0]),
            Err(KikError::RegressionDegenerate(_))
        ));
    }

    #[test]
    fn noiseless_cnot_chain_zero_at_nominal_amplitude() {
        let m = CnotModel { decay_weight: 0.1 };
        let s = m.calibration_chain(1.0, 0.0, 11).unwrap();
        let out = s.evolve(&CnotModel::probe_state()).unwrap();
        let y = crate::liouville::VecObservable::new(&CnotModel::probe_observable())
            .unwrap()
            .apply(&out)
            .unwrap();
        assert!(y.re.abs() < 1e-10);
    }
}
