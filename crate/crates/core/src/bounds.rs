//! Accuracy bounds for KIK mitigation and the spectral facts behind them.

use crate::coefficients::{adaptive_coefficients, double_factorial_odd};
use crate::dynamics::{kik_cycle, propagate, PulseSchedule};
use crate::error::{KikError, Result};
use crate::linalg;
use crate::liouville::HilbertOp;
use crate::noise::accumulated_noise;

/// `sqrt(Tr A² − (Tr A)²/Tr I)`.
pub fn observable_norm_factor(a: &HilbertOp) -> Result<f64> {
    let dev = linalg::max_abs_diff(a.matrix(), &a.matrix().adjoint());
    if dev > 1e-10 {
        return Err(KikError::NonHermitianInput(dev));
    }
    let d = a.dim() as f64;
    let tr = a.trace().re;
    let tr2 = linalg::trace(&linalg::matmul(a.matrix(), a.matrix())).re;
    Ok((tr2 - tr * tr / d).max(0.0).sqrt())
}

/// `(2M+1)!! / (2^{M+1} (M+1)!)`.
pub fn remainder_prefactor(order: usize) -> f64 {
    let fact: f64 = (1..=order + 1).map(|k| k as f64).product();
    double_factorial_odd(order) / (2f64.powi(order as i32 + 1) * fact)
}

/// `|1 − Σ a_m(g) λ^{m+1/2}|` with adaptive coefficients at `g`.
pub fn f_m(order: usize, g: f64, lambda: f64) -> Result<f64> {
    let a = adaptive_coefficients(order, g)?;
    let s: f64 = a
        .values
        .iter()
        .enumerate()
        .map(|(m, am)| am * lambda.powf(m as f64 + 0.5))
        .sum();
    Ok((1.0 - s).abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub order: usize,
    pub norm_factor: f64,
    pub accumulated_noise: f64,
    pub mu: f64,
    /// Adaptive coefficients at `g = μ`.
    pub eq16: f64,
    /// Adaptive coefficients at `g = 1`.
    pub eq17: f64,
    /// `(2M+1)!!/(2^{M+1}(M+1)!) (e^{2Λ} − 1)^{M+1}`.
    pub eq18: f64,
    pub measured_bias: Option<f64>,
}

impl BoundReport {
    pub fn ordered(&self, tol: f64) -> bool {
        self.eq16 <= self.eq17 + tol && self.eq17 <= self.eq18 + tol
    }

    /// `μ >= e^{−2Λ}`, the region where the ordering is guaranteed.
    pub fn admissible(&self) -> bool {
        self.mu >= (-2.0 * self.accumulated_noise).exp() - 1e-12
    }
}

/// Bounds from the norm factor, accumulated noise `Λ` and survival `μ`.
pub fn bounds_from(norm_factor: f64, lambda_acc: f64, mu: f64, order: usize) -> Result<BoundReport> {
    if !(1..=3).contains(&order) {
        return Err(KikError::OrderTooLarge { order, max: 3 });
    }
    if !lambda_acc.is_finite() || lambda_acc < 0.0 {
        return Err(KikError::OutOfRange(lambda_acc));
    }
    if !(0.0..=1.0 + 1e-9).contains(&mu) {
        return Err(KikError::OutOfRange(mu));
    }
    let mu = mu.min(1.0);
    let lam = (-2.0 * lambda_acc).exp();
    Ok(BoundReport {
        order,
        norm_factor,
        accumulated_noise: lambda_acc,
        mu,
        eq16: norm_factor * f_m(order, mu, lam)?,
        eq17: norm_factor * f_m(order, 1.0, lam)?,
        eq18: norm_factor * remainder_prefactor(order) * ((2.0 * lambda_acc).exp() - 1.0).powi(order as i32 + 1),
        measured_bias: None,
    })
}

pub fn accuracy_bounds(a: &HilbertOp, sched: &PulseSchedule, mu: f64, order: usize) -> Result<BoundReport> {
    bounds_from(observable_norm_factor(a)?, accumulated_noise(sched), mu, order)
}

pub const WEAK_NOISE_LIMIT: f64 = std::f64::consts::LN_2 / 2.0;

pub fn weak_noise_condition_value(lambda_acc: f64) -> bool {
    lambda_acc < WEAK_NOISE_LIMIT
}

/// `e^{2Λ} < 2`.
pub fn weak_noise_condition(sched: &PulseSchedule) -> bool {
    weak_noise_condition_value(accumulated_noise(sched))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinEigenvalueCheck {
    /// Smallest eigenvalue of `𝒦_I𝒦` (Hermitian case) or `s_min(𝒦)²`.
    pub min_eigenvalue: f64,
    pub bound: f64,
    pub satisfied: bool,
    pub hermitian: bool,
}

/// Compare the smallest eigenvalue of the KIK cycle with `e^{−2Λ}`.
pub fn min_eigenvalue_bound_check(sched: &PulseSchedule) -> Result<MinEigenvalueCheck> {
    let bound = (-2.0 * accumulated_noise(sched)).exp();
    let cycle = kik_cycle(sched)?;
    let hermitian = cycle.is_hermitian(1e-9);
    let min_eigenvalue = if hermitian {
        linalg::hermitian_eigenvalues(cycle.matrix())[0]
    } else {
        let k = propagate(sched)?.value;
        let s = linalg::singular_values(k.matrix())[0];
        s * s
    };
    Ok(MinEigenvalueCheck {
        min_eigenvalue,
        bound,
        satisfied: min_eigenvalue >= bound * (1.0 - 1e-12),
        hermitian,
    })
}

/// `(2M+1)!!/(2^{M+1}(M+1)!) λ^{−M−3/2} (1−λ)^{M+1}`.
pub fn taylor_remainder_bound(order: usize, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(KikError::OutOfRange(lambda));
    }
    Ok(remainder_prefactor(order) * lambda.powf(-(order as f64) - 1.5) * (1.0 - lambda).powi(order as i32 + 1))
}
