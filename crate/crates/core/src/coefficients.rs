//! Mitigation coefficients `a_0..a_M` for the folded-circuit estimator.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{KikError, Result};

pub const MAX_TAYLOR_ORDER: usize = 20;
pub const MAX_LS_ORDER: usize = 12;
pub const MAX_LS_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientKind {
    Taylor,
    AdaptiveClosedForm,
    AdaptiveGeneralLs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub order: usize,
    pub values: Vec<f64>,
    pub g: f64,
    pub kind: CoefficientKind,
}

impl CoefficientSet {
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `Σ a_m λ^m`.
    pub fn polynomial(&self, lambda: f64) -> f64 {
        self.values.iter().rev().fold(0.0, |acc, a| acc * lambda + a)
    }
}

/// How `g` is derived from the survival probability `μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "form", content = "p")]
pub enum GChoice {
    One,
    MuPow(f64),
}

impl GChoice {
    pub fn evaluate(&self, mu: f64) -> f64 {
        match *self {
            GChoice::One => 1.0,
            GChoice::MuPow(p) => {
                if p == 0.0 {
                    1.0
                } else {
                    mu.clamp(0.0, 1.0).powf(p)
                }
            }
        }
    }

    pub fn needs_mu(&self) -> bool {
        matches!(*self, GChoice::MuPow(p) if p != 0.0)
    }

    pub fn label(&self) -> String {
        match *self {
            GChoice::One => "1".to_string(),
            GChoice::MuPow(p) if p == 1.0 => "mu".to_string(),
            GChoice::MuPow(p) => format!("mu^{p}"),
        }
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

fn ln_double_factorial_odd(n: usize) -> f64 {
    // (2n+1)!! = (2n+1)! / (2^n n!)
    ln_factorial(2 * n + 1) - n as f64 * 2f64.ln() - ln_factorial(n)
}

fn factorial(n: usize) -> f64 {
    (2..=n).map(|k| k as f64).product()
}

/// `(2M+1)!!` evaluated directly for small `M`, through logarithms otherwise.
pub fn double_factorial_odd(m: usize) -> f64 {
    if m <= 10 {
        (0..=m).map(|k| (2 * k + 1) as f64).product()
    } else {
        ln_double_factorial_odd(m).exp()
    }
}

/// `a_m = (-1)^m (2M+1)!! / (2^M (2m+1) m! (M-m)!)`.
pub fn taylor_coefficients(order: usize) -> Result<CoefficientSet> {
    if order > MAX_TAYLOR_ORDER {
        return Err(KikError::OrderTooLarge {
            order,
            max: MAX_TAYLOR_ORDER,
        });
    }
    let values = (0..=order)
        .map(|m| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let mag = if order <= 10 {
                double_factorial_odd(order)
                    / (2f64.powi(order as i32) * (2 * m + 1) as f64 * factorial(m) * factorial(order - m))
            } else {
                (ln_double_factorial_odd(order)
                    - order as f64 * 2f64.ln()
                    - ((2 * m + 1) as f64).ln()
                    - ln_factorial(m)
                    - ln_factorial(order - m))
                .exp()
            };
            sign * mag
        })
        .collect();
    Ok(CoefficientSet {
        order,
        values,
        g: 1.0,
        kind: CoefficientKind::Taylor,
    })
}

fn check_g(g: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&g) {
        return Err(KikError::OutOfRangeG(g));
    }
    Ok(())
}

/// Closed-form minimizers of the L2 error for `M = 1, 2, 3`.
pub fn adaptive_coefficients(order: usize, g: f64) -> Result<CoefficientSet> {
    check_g(g)?;
    let s = g.sqrt();
    let u = 1.0 + s;
    let values = match order {
        1 => vec![
            1.0 + 1.0 / u.powi(3) + 3.0 / (2.0 * u * u),
            -(5.0 + 3.0 * s) / (2.0 * u.powi(3)),
        ],
        2 => vec![
            1.0 + 16.0 / (3.0 * u.powi(5)) - 14.0 / (3.0 * u.powi(4)) + 4.0 / (u * u),
            -4.0 * (10.0 + 8.0 * s + 9.0 * g + 3.0 * g * s) / (3.0 * u.powi(5)),
            2.0 * (13.0 + 5.0 * s) / (3.0 * u.powi(5)),
        ],
        3 => {
            let d = 4.0 * u.powi(7);
            let g2 = g * g;
            let g3 = g2 * g;
            vec![
                (31.0 + 97.0 * s + 276.0 * g + 300.0 * g * s + 270.0 * g2 + 114.0 * g2 * s + 28.0 * g3 + 4.0 * g3 * s)
                    / d,
                -5.0 * (29.0 + 35.0 * s + 84.0 * g + 44.0 * g * s + 26.0 * g2 + 6.0 * g2 * s) / d,
                3.0 * (81.0 + 47.0 * s + 76.0 * g + 20.0 * g * s) / d,
                -5.0 * (25.0 + 7.0 * s) / d,
            ]
        }
        0 => vec![1.0],
        _ => return Err(KikError::OrderTooLarge { order, max: 3 }),
    };
    Ok(CoefficientSet {
        order,
        values,
        g,
        kind: CoefficientKind::AdaptiveClosedForm,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `∫_0^1 x^k [(1 - w x)^{-1/2} - 1] dx`.
fn shifted_target_moment(k: usize, w: f64) -> f64 {
    if w <= 0.5 {
        series_tail_moment(k, w, 0)
    } else {
        let g = 1.0 - w;
        let mut acc = 0.0;
        for i in 0..=k {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let e = i as f64 + 0.5;
            acc += sign * binomial(k, i) * (1.0 - g.powf(e)) / e;
        }
        acc / w.powi(k as i32 + 1) - 1.0 / (k + 1) as f64
    }
}

/// `∫_0^1 x^k Σ_{j>skip} β_j (w x)^j dx` from the binomial series of
/// `(1 - wx)^{-1/2}`, `β_j = (2j-1)!!/(2j)!!`. Needs `w <= 1/2`.
fn series_tail_moment(k: usize, w: f64, skip: usize) -> f64 {
    let mut sum = 0.0;
    let mut beta = 1.0;
    let mut wp = 1.0;
    for j in 1..2000 {
        beta *= (2 * j - 1) as f64 / (2 * j) as f64;
        wp *= w;
        if j <= skip {
            continue;
        }
        let term = beta * wp / (k + j + 1) as f64;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() || wp == 0.0 {
            break;
        }
    }
    sum
}

/// `β_k = (2k-1)!!/(2k)!!`, the Taylor coefficients of `(1-y)^{-1/2}`.
fn binomial_series_coeff(k: usize) -> f64 {
    (1..=k).map(|j| (2 * j - 1) as f64 / (2 * j) as f64).product()
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        sv.max() / min
    }
}

/// General-order L2 minimizer with `a_M` eliminated through `Σ a_m = 1`.
///
/// The polynomial is written as `q(x) = 1 + Σ_k c_k x^k` with
/// `λ = 1 - (1-g) x`, so the normalization fixes the constant term and
/// the normal equations stay well scaled as `g → 1`.
pub fn adaptive_coefficients_ls(order: usize, g: f64) -> Result<CoefficientSet> {
    check_g(g)?;
    if order == 0 {
        return Err(KikError::InvalidSpec("least-squares coefficients need M >= 1".into()));
    }
    if order > MAX_LS_ORDER {
        return Err(KikError::OrderTooLarge {
            order,
            max: MAX_LS_ORDER,
        });
    }
    let w = 1.0 - g;
    if w == 0.0 {
        let mut t = taylor_coefficients(order)?;
        t.kind = CoefficientKind::AdaptiveGeneralLs;
        return Ok(t);
    }
    let gram = DMatrix::from_fn(order, order, |i, j| 1.0 / (i + j + 3) as f64);
    // For small w the degree-M part of the target is fitted exactly, so only
    // the O(w^{M+1}) series tail goes through the normal equations.
    let split = w <= 0.5;
    let rhs = DVector::from_fn(order, |i, _| {
        if split {
            series_tail_moment(i + 1, w, order)
        } else {
            shifted_target_moment(i + 1, w)
        }
    });
    let cond = condition_number(&gram);
    if cond > MAX_LS_CONDITION {
        return Err(KikError::IllConditionedSystem(cond));
    }
    let c = gram
        .clone()
        .col_piv_qr()
        .solve(&rhs)
        .ok_or(KikError::IllConditionedSystem(cond))?;
    // q(x) with x = (1 - λ)/w, expanded in powers of λ
    let mut values = vec![0.0; order + 1];
    values[0] = 1.0;
    for k in 1..=order {
        let mut ck = c[k - 1] / w.powi(k as i32);
        if split {
            ck += binomial_series_coeff(k);
        }
        for (m, v) in values.iter_mut().enumerate().take(k + 1) {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            *v += ck * binomial(k, m) * sign;
        }
    }
    // enforce the constraint exactly on the eliminated coefficient
    let head: f64 = values[..order].iter().sum();
    values[order] = 1.0 - head;
    Ok(CoefficientSet {
        order,
        values,
        g,
        kind: CoefficientKind::AdaptiveGeneralLs,
    })
}

/// Coefficients for a given order and `g`: Taylor when requested, closed
/// forms for `M <= 3`, least squares above.
pub fn select_coefficients(order: usize, g: f64, prefer_taylor: bool) -> Result<CoefficientSet> {
    if prefer_taylor || order == 0 {
        return taylor_coefficients(order);
    }
    if order <= 3 {
        adaptive_coefficients(order, g)
    } else {
        adaptive_coefficients_ls(order, g)
    }
}

/// `∫_g^1 (Σ a_m λ^m - λ^{-1/2})² dλ` in closed form.
pub fn l2_error(coeffs: &CoefficientSet) -> Result<f64> {
    l2_error_on(&coeffs.values, coeffs.g)
}

pub fn l2_error_on(values: &[f64], g: f64) -> Result<f64> {
    if !(g > 0.0 && g <= 1.0) {
        return Err(KikError::OutOfRangeG(g));
    }
    if g == 1.0 {
        return Ok(0.0);
    }
    let mut total = -g.ln();
    for (m, am) in values.iter().enumerate() {
        for (n, an) in values.iter().enumerate() {
            let p = (m + n + 1) as f64;
            total += am * an * (1.0 - g.powf(p)) / p;
        }
        let e = m as f64 + 0.5;
        total -= 2.0 * am * (1.0 - g.powf(e)) / e;
    }
    Ok(total.max(0.0))
}

/// Lagrange weights for extrapolation to zero from `λ_k = (2k+1)λ₀`.
pub fn richardson_weights(order: usize, lambda0: f64) -> Vec<f64> {
    let nodes: Vec<f64> = (0..=order).map(|k| (2 * k + 1) as f64 * lambda0).collect();
    (0..=order)
        .map(|m| {
            nodes
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != m)
                .map(|(_, lk)| lk / (lk - nodes[m]))
                .product()
        })
        .collect()
}

/// `γ = Σ |a_m|`.
pub fn sampling_overhead(coeffs: &CoefficientSet) -> f64 {
    coeffs.values.iter().map(|a| a.abs()).sum()
}

/// Smallest eigenvalue of the Hessian of the L2 error with respect to
/// `a_0..a_{M-1}`, entries `2(1-g^{m+n+1})/(m+n+1)`.
pub fn hessian_check(order: usize, g: f64) -> Result<f64> {
    check_g(g)?;
    if order == 0 || order > 3 {
        return Err(KikError::OrderTooLarge { order, max: 3 });
    }
    let h = DMatrix::from_fn(order, order, |m, n| {
        let p = (m + n + 1) as f64;
        2.0 * (1.0 - g.powf(p)) / p
    });
    Ok(h.symmetric_eigenvalues().min())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn taylor_low_orders() {
        close(&taylor_coefficients(0).unwrap().values, &[1.0], 0.0);
        close(&taylor_coefficients(1).unwrap().values, &[1.5, -0.5], 1e-15);
        close(
            &taylor_coefficients(2).unwrap().values,
            &[15.0 / 8.0, -1.25, 3.0 / 8.0],
            1e-15,
        );
        close(
            &taylor_coefficients(3).unwrap().values,
            &[35.0 / 16.0, -35.0 / 16.0, 21.0 / 16.0, -5.0 / 16.0],
            1e-15,
        );
        assert!(matches!(taylor_coefficients(21), Err(KikError::OrderTooLarge { .. })));
    }

    #[test]
    fn taylor_log_path_is_continuous() {
        for m in 11..=20 {
            let t = taylor_coefficients(m).unwrap();
            assert!((t.sum() - 1.0).abs() < 1e-9, "M={m} sum {}", t.sum());
        }
    }

    #[test]
    fn adaptive_examples() {
        close(&adaptive_coefficients(1, 1.0).unwrap().values, &[1.5, -0.5], 1e-15);
        close(&adaptive_coefficients(1, 0.0).unwrap().values, &[3.5, -2.5], 1e-15);
        let a = adaptive_coefficients(2, 0.25).unwrap();
        assert!((a.sum() - 1.0).abs() < 1e-12);
        assert!(matches!(adaptive_coefficients(1, 1.5), Err(KikError::OutOfRangeG(_))));
    }

    #[test]
    fn least_squares_matches_closed_forms() {
        let a = adaptive_coefficients_ls(1, 0.5).unwrap();
        close(&a.values, &adaptive_coefficients(1, 0.5).unwrap().values, 1e-10);
        let a = adaptive_coefficients_ls(3, 0.04).unwrap();
        close(&a.values, &adaptive_coefficients(3, 0.04).unwrap().values, 1e-10);
        let a = adaptive_coefficients_ls(2, 1.0 - 1e-6).unwrap();
        close(&a.values, &taylor_coefficients(2).unwrap().values, 1e-4);
    }

    #[test]
    fn least_squares_order_guard() {
        assert!(matches!(
            adaptive_coefficients_ls(13, 0.5),
            Err(KikError::OrderTooLarge { .. })
        ));
    }

    #[test]
    fn l2_error_examples() {
        let t = taylor_coefficients(1).unwrap();
        assert_eq!(l2_error_on(&t.values, 1.0).unwrap(), 0.0);
        let ad = adaptive_coefficients(1, 0.25).unwrap();
        let e_ad = l2_error(&ad).unwrap();
        let e_tay = l2_error_on(&t.values, 0.25).unwrap();
        assert!(e_ad <= e_tay);
        // Simpson oracle on the substitution λ = s², which removes the λ^{-1/2} singularity
        let n = 20000;
        let (lo, hi) = (0.5f64, 1.0f64);
        let h = (hi - lo) / n as f64;
        let f = |s: f64| {
            let l = s * s;
            let r = 1.5 - 0.5 * l - 1.0 / s;
            r * r * 2.0 * s
        };
        let mut acc = f(lo) + f(hi);
        for i in 1..n {
            let x = lo + i as f64 * h;
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        let oracle = acc * h / 3.0;
        assert!((e_tay - oracle).abs() < 1e-9, "{e_tay} vs {oracle}");
        assert!(matches!(l2_error_on(&t.values, 0.0), Err(KikError::OutOfRangeG(_))));
    }

    #[test]
    fn richardson_examples() {
        close(&richardson_weights(1, 0.1), &[1.5, -0.5], 1e-12);
        close(&richardson_weights(3, 1.0), &richardson_weights(3, 0.01), 1e-12);
        close(&richardson_weights(2, 0.3), &[15.0 / 8.0, -1.25, 3.0 / 8.0], 1e-12);
    }

    #[test]
    fn overhead_examples() {
        let g = |m| sampling_overhead(&taylor_coefficients(m).unwrap());
        assert!((g(0) - 1.0).abs() < 1e-15);
        assert!((g(1) - 2.0).abs() < 1e-15);
        assert!((g(2) - 3.5).abs() < 1e-15);
        assert!((g(3) - 6.0).abs() < 1e-15);
    }

    #[test]
    fn hessian_examples() {
        assert!((hessian_check(1, 0.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(hessian_check(2, 1.0).unwrap().abs() < 1e-15);
        assert!(hessian_check(3, 0.5).unwrap() > 0.0);
    }

    #[test]
    fn g_choice_evaluation() {
        assert_eq!(GChoice::One.evaluate(0.3), 1.0);
        assert_eq!(GChoice::MuPow(0.0).evaluate(0.3), 1.0);
        assert!((GChoice::MuPow(2.0).evaluate(0.5) - 0.25).abs() < 1e-15);
        assert_eq!(GChoice::MuPow(1.0).evaluate(1.0 + 1e-12), 1.0);
    }

    #[test]
    fn ls_tends_to_taylor_near_g_one() {
        for m in [3, 5, 8] {
            let t = taylor_coefficients(m).unwrap();
            for w in [1e-4, 1e-8, 1e-13] {
                let ls = adaptive_coefficients_ls(m, 1.0 - w).unwrap();
                let d = ls
                    .values
                    .iter()
                    .zip(&t.values)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(d < 1e3 * w, "M={m} w={w} diff={d}");
                assert!((ls.sum() - 1.0).abs() < 1e-12);
            }
        }
    }
}
