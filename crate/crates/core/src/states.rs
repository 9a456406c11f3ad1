//! Density matrices and seeded random generators.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, check_finite, check_square, hermitian_part, ComplexMatrix, HermitianEig, TolerancePolicy};

/// A certified density matrix: Hermitian, positive semi-definite, unit trace.
///
/// The stored matrix is exactly Hermitian (the Hermitian part of whatever was validated).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Certify `candidate`, failing with the first violated invariant.
    pub fn validate(candidate: ComplexMatrix, tol: &TolerancePolicy) -> Result<Self> {
        check_square(&candidate)?;
        check_finite(&candidate)?;
        let h = hermitian_part(&candidate);
        let deviation = numerics::max_abs_diff(&candidate, &h);
        if deviation > tol.assert_atol {
            return Err(Error::NotHermitian(deviation));
        }
        let eig = numerics::hermitian_eig(&h, tol)?;
        if eig.min_eigenvalue() < -tol.eig_clamp {
            return Err(Error::NotPsd(eig.min_eigenvalue()));
        }
        let trace = h.trace().re;
        if (trace - 1.0).abs() > tol.assert_atol {
            return Err(Error::InvalidTrace(trace));
        }
        Ok(Self { mat: h })
    }

    /// Hermitize and normalize without the spectral check. Only for matrices that are PSD by
    /// construction.
    pub(crate) fn from_psd_unchecked(m: ComplexMatrix) -> Self {
        let h = hermitian_part(&m);
        let trace = h.trace().re;
        Self { mat: h.unscale(trace) }
    }

    /// `|ψ⟩⟨ψ|/⟨ψ|ψ⟩`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        if psi.is_empty() {
            return Err(Error::EmptyInput("state vector"));
        }
        let v = nalgebra::DVector::from_column_slice(psi);
        let norm_sq = v.norm_squared();
        if !(norm_sq.is_finite() && norm_sq > 0.0) {
            return Err(Error::InvalidParameter("state vector has zero norm".into()));
        }
        Ok(Self::from_psd_unchecked(&v * v.adjoint()))
    }

    /// Computational basis state `|i⟩⟨i|`.
    pub fn basis(dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {i} out of range for dim {dim}"
            )));
        }
        Ok(Self {
            mat: numerics::matrix_unit(dim, i, i),
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn eig(&self, tol: &TolerancePolicy) -> Result<HermitianEig> {
        numerics::hermitian_eig(&self.mat, tol)
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        numerics::hs_norm_sq(&self.mat)
    }

    /// `ρ ⊗ σ`.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self {
            mat: numerics::kron(&self.mat, &other.mat),
        }
    }

    /// `t·ρ + (1-t)·σ` for `t ∈ [0,1]`.
    pub fn mix(&self, other: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!("mixing weight {t} outside [0,1]")));
        }
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self {
            mat: self.mat.scale(t) + other.mat.scale(1.0 - t),
        })
    }
}

/// Seed plus substream index for a reproducible ChaCha20 stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Child stream `index` of this stream. Children of distinct `(stream, index)` pairs never
    /// collide as long as `index < 2^32`.
    pub fn substream(&self, index: u64) -> RngSeed {
        RngSeed {
            seed: self.seed,
            stream: (self.stream << 32) ^ index,
        }
    }
}

/// Standard complex Gaussian, `E|z|² = 1`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `rows × cols` matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    // column-major fill keeps the draw order fixed
    ComplexMatrix::from_iterator(rows, cols, (0..rows * cols).map(|_| complex_gaussian(rng)))
}

/// Haar-random unitary via QR of a Ginibre matrix with the phases of `R`'s diagonal removed.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(dim, dim, rng);
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { numerics::ONE };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Random Hermitian matrix `(G + G†)/2` with `G` Ginibre.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    hermitian_part(&ginibre(dim, dim, rng))
}

/// Ginibre-induced random state: `G G† / Tr(G G†)` with `G` of shape `dim × rank`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Result<DensityMatrix> {
    if dim == 0 || rank == 0 || rank > dim {
        return Err(Error::InvalidParameter(format!("rank {rank} must lie in [1, {dim}]")));
    }
    let g = ginibre(dim, rank, rng);
    Ok(DensityMatrix::from_psd_unchecked(&g * g.adjoint()))
}

pub fn maximally_mixed(dim: usize) -> Result<DensityMatrix> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    Ok(DensityMatrix {
        mat: numerics::identity(dim).unscale(dim as f64),
    })
}

/// `(1-δ)ρ + δ·I/d`; the result has minimum eigenvalue at least `δ/d`.
pub fn regularize(rho: &DensityMatrix, delta: f64) -> Result<DensityMatrix> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("regularization {delta} outside (0,1)")));
    }
    let d = rho.dim() as f64;
    let mut mat = rho.mat.scale(1.0 - delta);
    for i in 0..rho.dim() {
        mat[(i, i)] += Complex64::from(delta / d);
    }
    Ok(DensityMatrix { mat })
}
