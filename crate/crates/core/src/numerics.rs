//! Dense complex-matrix primitives.
//!
//! Everything here works on [`ComplexMatrix`] (a column-major `nalgebra` matrix of `Complex64`).
//! Matrix functions of Hermitian positive semi-definite inputs go through the spectral
//! decomposition `M = V diag(w) V†`, with small negative eigenvalues treated as round-off
//! according to a [`TolerancePolicy`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Numerical slack used across the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    /// Eigenvalues with magnitude at most this are treated as exact zeros; anything more
    /// negative is a positivity violation.
    pub eig_clamp: f64,
    /// Slack for property assertions and Hermiticity / trace checks.
    pub assert_atol: f64,
    /// Slack for unitarity and Kraus completeness.
    pub unitary_atol: f64,
    /// Relative threshold deciding the support of a PSD matrix.
    pub support_rtol: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            eig_clamp: 1e-12,
            assert_atol: 1e-9,
            unitary_atol: 1e-8,
            support_rtol: 1e-10,
        }
    }
}

impl TolerancePolicy {
    pub fn new(eig_clamp: f64, assert_atol: f64, unitary_atol: f64, support_rtol: f64) -> Result<Self> {
        let policy = Self {
            eig_clamp,
            assert_atol,
            unitary_atol,
            support_rtol,
        };
        policy.check()?;
        Ok(policy)
    }

    pub fn check(&self) -> Result<()> {
        let all = [self.eig_clamp, self.assert_atol, self.unitary_atol, self.support_rtol];
        if all.iter().all(|t| t.is_finite() && *t > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "tolerances must be strictly positive: {self:?}"
            )))
        }
    }
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: DVector<f64>,
    /// Columns are the eigenvectors, in the order of `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// `V diag(f(w)) V†` for a real scalar map `f`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= Complex64::from(f(self.eigenvalues[j]));
        }
        scaled * v.adjoint()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|w| w)
    }
}

pub fn check_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn check_same_dim(expected: usize, m: &ComplexMatrix) -> Result<()> {
    let found = check_square(m)?;
    if found != expected {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub fn check_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Largest entrywise deviation of `m` from its Hermitian part `(M + M†)/2`.
pub fn hermiticity_deviation(m: &ComplexMatrix) -> f64 {
    max_abs_diff(m, &hermitian_part(m))
}

pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Eigen-decomposition of a Hermitian matrix.
///
/// The input is checked against its Hermitian part with `tol.assert_atol` and the decomposition
/// is taken of that Hermitian part, so the returned eigenvalues are exactly real.
pub fn hermitian_eig(m: &ComplexMatrix, tol: &TolerancePolicy) -> Result<HermitianEig> {
    check_square(m)?;
    check_finite(m)?;
    let h = hermitian_part(m);
    let deviation = max_abs_diff(m, &h);
    if deviation > tol.assert_atol {
        return Err(Error::NotHermitian(deviation));
    }
    Ok(eig_of_hermitian(h))
}

fn eig_of_hermitian(h: ComplexMatrix) -> HermitianEig {
    let n = h.nrows();
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    HermitianEig {
        eigenvalues,
        eigenvectors,
    }
}

/// Scalar maps available to [`matrix_function`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatrixFn {
    Sqrt,
    /// `x^q`. For `q > 0` zero eigenvalues map to zero; `q <= 0` needs a strictly positive input.
    Power(f64),
    /// Natural logarithm; needs a strictly positive input.
    Log,
}

impl MatrixFn {
    fn needs_strict_positivity(self) -> bool {
        match self {
            MatrixFn::Sqrt => false,
            MatrixFn::Power(q) => q <= 0.0,
            MatrixFn::Log => true,
        }
    }

    fn eval(self, x: f64) -> f64 {
        match self {
            MatrixFn::Sqrt => x.sqrt(),
            MatrixFn::Power(q) => {
                if x == 0.0 {
                    0.0
                } else {
                    x.powf(q)
                }
            }
            MatrixFn::Log => x.ln(),
        }
    }
}

/// Apply the clamping policy to a PSD spectrum: `|w| <= eig_clamp` becomes `0`.
pub fn clamp_spectrum(eig: &HermitianEig, tol: &TolerancePolicy) -> Result<DVector<f64>> {
    let min = eig.min_eigenvalue();
    if min < -tol.eig_clamp {
        return Err(Error::NotPsd(min));
    }
    Ok(eig.eigenvalues.map(|w| if w.abs() <= tol.eig_clamp { 0.0 } else { w }))
}

/// `f(M)` for a Hermitian positive semi-definite `M`, evaluated on the clamped spectrum.
pub fn matrix_function(m: &ComplexMatrix, f: MatrixFn, tol: &TolerancePolicy) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(m, tol)?;
    spectral_function(&eig, f, tol)
}

/// [`matrix_function`] on an already computed decomposition.
pub fn spectral_function(eig: &HermitianEig, f: MatrixFn, tol: &TolerancePolicy) -> Result<ComplexMatrix> {
    let w = clamp_spectrum(eig, tol)?;
    if f.needs_strict_positivity() && w[0] <= tol.eig_clamp {
        return Err(Error::Singular(eig.min_eigenvalue()));
    }
    let clamped = HermitianEig {
        eigenvalues: w,
        eigenvectors: eig.eigenvectors.clone(),
    };
    Ok(clamped.map(|x| f.eval(x)))
}

/// `Tr(X†X)`, the squared Hilbert-Schmidt norm.
pub fn hs_norm_sq(x: &ComplexMatrix) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

/// `Tr(X†Y)`, conjugate-linear in `x`.
pub fn hs_inner(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<Complex64> {
    if x.shape() != y.shape() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows() * x.ncols(),
            found: y.nrows() * y.ncols(),
        });
    }
    Ok(x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum())
}

/// `XY - YX`.
pub fn commutator(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = check_square(x)?;
    check_same_dim(d, y)?;
    Ok(x * y - y * x)
}

/// `Tr(XY)` without forming the product.
pub fn trace_of_product(x: &ComplexMatrix, y: &ComplexMatrix) -> Complex64 {
    let n = x.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..x.ncols() {
            acc += x[(i, k)] * y[(k, i)];
        }
    }
    acc
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

/// `|i⟩⟨j|` in dimension `dim`.
pub fn matrix_unit(dim: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim, dim);
    m[(i, j)] = ONE;
    m
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Frobenius norm of `U†U - I`.
pub fn unitarity_residual(u: &ComplexMatrix) -> f64 {
    let n = u.ncols();
    hs_norm_sq(&(u.adjoint() * u - identity(n))).sqrt()
}

/// Pauli matrices, handy in tests and examples.
pub mod pauli {
    use super::*;

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }
}

pub fn real_diag(values: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| Complex64::from(v)),
    ))
}
