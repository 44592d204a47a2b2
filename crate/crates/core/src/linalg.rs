//! Dense complex linear algebra helpers shared by the rest of the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{KikError, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// `a * b` through the blocked complex kernel in `matrixmultiply`.
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows(), "matmul shape mismatch");
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    let mut out = CMat::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return out;
    }
    // Complex64 is repr(C) {re, im}, layout-identical to [f64; 2].
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            out.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    out
}

pub fn matvec(a: &CMat, v: &CVec) -> CVec {
    a * v
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_all(ops: &[CMat]) -> CMat {
    let mut out = CMat::identity(1, 1);
    for op in ops {
        out = out.kronecker(op);
    }
    out
}

/// Maximum absolute column sum.
pub fn norm1(a: &CMat) -> f64 {
    a.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn spectral_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let sv = a.clone().singular_values();
    sv.iter().cloned().fold(0.0, f64::max)
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    let mut sv: Vec<f64> = a.clone().singular_values().iter().cloned().collect();
    sv.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sv
}

pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    let n = a.nrows();
    for i in 0..n {
        for j in 0..=i {
            if (a[(i, j)] - a[(j, i)].conj()).norm() > tol {
                return false;
            }
        }
    }
    true
}

pub fn is_unitary(a: &CMat, tol: f64) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    let prod = matmul(&a.adjoint(), a);
    max_abs_diff(&prod, &identity(a.nrows())) <= tol
}

pub fn trace(a: &CMat) -> Complex64 {
    a.diagonal().iter().sum()
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let h = hermitian_part(a);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * c(0.5, 0.0)
}

/// Eigenvalues of a general square matrix from the diagonal of its Schur form.
pub fn eigenvalues(a: &CMat) -> Vec<Complex64> {
    let schur = nalgebra::Schur::new(a.clone());
    let (_, t) = schur.unpack();
    t.diagonal().iter().cloned().collect()
}

/// Apply `f` to a Hermitian matrix through its eigendecomposition.
pub fn hermitian_function(a: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let h = hermitian_part(a);
    let eig = h.symmetric_eigen();
    let q = &eig.eigenvectors;
    let mut scaled = q.clone();
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let fj = c(f(*lam), 0.0);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= fj;
        }
    }
    matmul(&scaled, &q.adjoint())
}

pub fn inverse(a: &CMat) -> Option<CMat> {
    a.clone().try_inverse()
}

/// Principal square root of an upper-triangular matrix (column recurrence).
fn sqrt_upper_triangular(t: &CMat) -> CMat {
    let n = t.nrows();
    let mut r = CMat::zeros(n, n);
    for j in 0..n {
        r[(j, j)] = t[(j, j)].sqrt();
        for i in (0..j).rev() {
            let mut s = ZERO;
            for k in (i + 1)..j {
                s += r[(i, k)] * r[(k, j)];
            }
            r[(i, j)] = (t[(i, j)] - s) / (r[(i, i)] + r[(j, j)]);
        }
    }
    r
}

fn inverse_upper_triangular(r: &CMat) -> CMat {
    let n = r.nrows();
    let mut x = CMat::zeros(n, n);
    for j in 0..n {
        x[(j, j)] = ONE / r[(j, j)];
        for i in (0..j).rev() {
            let mut s = ZERO;
            for k in (i + 1)..=j {
                s += r[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = -s / r[(i, i)];
        }
    }
    x
}

/// Principal inverse square root.
///
/// Hermitian input goes through the eigendecomposition; anything else through
/// a complex Schur form. Eigenvalues with non-positive real part are rejected.
pub fn inverse_sqrt(a: &CMat, herm_tol: f64) -> Result<CMat> {
    if is_hermitian(a, herm_tol) {
        let ev = hermitian_eigenvalues(a);
        if let Some(bad) = ev.iter().find(|l| **l <= 0.0) {
            return Err(KikError::BranchCutViolation { re: *bad, im: 0.0 });
        }
        return Ok(hermitian_function(a, |l| l.powf(-0.5)));
    }
    let schur = nalgebra::Schur::new(a.clone());
    let (q, t) = schur.unpack();
    for z in t.diagonal().iter() {
        if z.re <= 0.0 {
            return Err(KikError::BranchCutViolation { re: z.re, im: z.im });
        }
    }
    let r = sqrt_upper_triangular(&t);
    let rinv = inverse_upper_triangular(&r);
    Ok(matmul(&matmul(&q, &rinv), &q.adjoint()))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const THETA: [f64; 5] = [
    1.495585217958292e-2,
    2.539398330063230e-1,
    9.504178996162932e-1,
    2.097847961257068e0,
    5.371920351148152e0,
];

fn scale(a: &CMat, s: f64) -> CMat {
    a * c(s, 0.0)
}

fn pade_low(a: &CMat, b: &[f64]) -> (CMat, CMat) {
    let n = a.nrows();
    let a2 = matmul(a, a);
    let mut pows = vec![identity(n), a2.clone()];
    let deg = b.len() - 1;
    while pows.len() <= deg / 2 {
        let last = pows.last().unwrap().clone();
        pows.push(matmul(&last, &a2));
    }
    let mut u = CMat::zeros(n, n);
    let mut v = CMat::zeros(n, n);
    for (k, p) in pows.iter().enumerate() {
        if 2 * k + 1 < b.len() {
            u += scale(p, b[2 * k + 1]);
        }
        if 2 * k < b.len() {
            v += scale(p, b[2 * k]);
        }
    }
    (matmul(a, &u), v)
}

fn pade13(a: &CMat) -> (CMat, CMat) {
    let n = a.nrows();
    let b = &PADE13;
    let id = identity(n);
    let a2 = matmul(a, a);
    let a4 = matmul(&a2, &a2);
    let a6 = matmul(&a4, &a2);
    let u_inner = scale(&a6, b[13]) + scale(&a4, b[11]) + scale(&a2, b[9]);
    let u = matmul(&a6, &u_inner) + scale(&a6, b[7]) + scale(&a4, b[5]) + scale(&a2, b[3]) + scale(&id, b[1]);
    let u = matmul(a, &u);
    let v_inner = scale(&a6, b[12]) + scale(&a4, b[10]) + scale(&a2, b[8]);
    let v = matmul(&a6, &v_inner) + scale(&a6, b[6]) + scale(&a4, b[4]) + scale(&a2, b[2]) + scale(&id, b[0]);
    (u, v)
}

/// Matrix exponential by scaling and squaring with Padé approximants up to
/// degree 13.
pub fn expm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    if n == 0 {
        return Ok(a.clone());
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(KikError::ExponentialDidNotConverge("non-finite input".into()));
    }
    let nrm = norm1(a);
    let (u, v, squarings) = if nrm <= THETA[0] {
        let (u, v) = pade_low(a, &PADE3);
        (u, v, 0)
    } else if nrm <= THETA[1] {
        let (u, v) = pade_low(a, &PADE5);
        (u, v, 0)
    } else if nrm <= THETA[2] {
        let (u, v) = pade_low(a, &PADE7);
        (u, v, 0)
    } else if nrm <= THETA[3] {
        let (u, v) = pade_low(a, &PADE9);
        (u, v, 0)
    } else {
        let s = ((nrm / THETA[4]).log2().ceil()).max(0.0) as i32;
        let scaled = scale(a, 2f64.powi(-s));
        let (u, v) = pade13(&scaled);
        (u, v, s)
    };
    let p = &v + &u;
    let q = &v - &u;
    let lu = q.lu();
    let mut r = lu
        .solve(&p)
        .ok_or_else(|| KikError::ExponentialDidNotConverge("singular Padé denominator".into()))?;
    for _ in 0..squarings {
        r = matmul(&r, &r);
    }
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(KikError::ExponentialDidNotConverge("non-finite result".into()));
    }
    Ok(r)
}

/// Integer matrix power by repeated squaring.
pub fn matpow(a: &CMat, mut k: u32) -> CMat {
    let mut result = identity(a.nrows());
    let mut base = a.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = matmul(&result, &base);
        }
        k >>= 1;
        if k > 0 {
            base = matmul(&base, &base);
        }
    }
    result
}
