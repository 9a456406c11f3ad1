//! Kraus channels `ρ ↦ Σ_n M_n ρ M_n†`.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{self, check_finite, check_same_dim, check_square, ComplexMatrix, MatrixFn, TolerancePolicy};
use crate::states::{self, DensityMatrix};

/// A trace-preserving completely positive map in Kraus form.
///
/// Construction enforces `Σ K†K = I` within `unitary_atol`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<ComplexMatrix>,
}

/// One outcome of a selective measurement: `p_n = Tr(M_n ρ M_n†)` and `ρ_n = M_n ρ M_n† / p_n`.
///
/// `state` is `None` when `p_n` is below `eig_clamp`; such branches carry no weight.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBranch {
    pub probability: f64,
    pub state: Option<DensityMatrix>,
}

impl KrausChannel {
    pub fn new(kraus: Vec<ComplexMatrix>, tol: &TolerancePolicy) -> Result<Self> {
        let first = kraus.first().ok_or(Error::EmptyInput("Kraus list"))?;
        let dim = check_square(first)?;
        for k in &kraus {
            check_same_dim(dim, k)?;
            check_finite(k)?;
        }
        let channel = Self { dim, kraus };
        let residual = channel.completeness_residual();
        if residual > tol.unitary_atol {
            return Err(Error::NotComplete(residual));
        }
        Ok(channel)
    }

    pub(crate) fn new_unchecked(dim: usize, kraus: Vec<ComplexMatrix>) -> Self {
        Self { dim, kraus }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            kraus: vec![numerics::identity(dim)],
        }
    }

    /// `ρ ↦ UρU†`.
    pub fn unitary(u: ComplexMatrix, tol: &TolerancePolicy) -> Result<Self> {
        let residual = numerics::unitarity_residual(&u);
        if residual > tol.unitary_atol {
            return Err(Error::NotUnitary(residual));
        }
        Self::new(vec![u], tol)
    }

    /// Generic random channel: Ginibre Kraus operators normalized by `S^{-1/2}` on the right.
    pub fn random<R: Rng + ?Sized>(dim: usize, n_kraus: usize, rng: &mut R, tol: &TolerancePolicy) -> Result<Self> {
        if n_kraus == 0 {
            return Err(Error::EmptyInput("Kraus list"));
        }
        let raw: Vec<_> = (0..n_kraus).map(|_| states::ginibre(dim, dim, rng)).collect();
        normalize_kraus(raw, tol)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn len(&self) -> usize {
        self.kraus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kraus.is_empty()
    }

    /// Frobenius norm of `Σ K†K - I`.
    pub fn completeness_residual(&self) -> f64 {
        let sum = self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, k| acc + k.adjoint() * k);
        numerics::hs_norm_sq(&(sum - numerics::identity(self.dim))).sqrt()
    }

    /// The linear map on an arbitrary matrix, no validation of the output.
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_same_dim(self.dim, x)?;
        Ok(self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, k| {
                acc + k * x * k.adjoint()
            }))
    }

    /// `Σ M_n ρ M_n†`, revalidated as a density matrix.
    pub fn apply(&self, rho: &DensityMatrix, tol: &TolerancePolicy) -> Result<DensityMatrix> {
        DensityMatrix::validate(self.apply_matrix(rho.matrix())?, tol)
    }

    /// The Hilbert-Schmidt adjoint `X ↦ Σ M_n† X M_n`.
    pub fn apply_adjoint(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_same_dim(self.dim, x)?;
        Ok(self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, k| {
                acc + k.adjoint() * x * k
            }))
    }

    /// `E_i = Σ_j u_ij K_j` for a unitary `u` of size `m × m`, `m` the Kraus count.
    pub fn remix_kraus(&self, u: &ComplexMatrix, tol: &TolerancePolicy) -> Result<KrausChannel> {
        let m = self.kraus.len();
        if u.nrows() != m || u.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: u.nrows().max(u.ncols()),
            });
        }
        let residual = numerics::unitarity_residual(u);
        if residual > tol.unitary_atol {
            return Err(Error::NotUnitary(residual));
        }
        let kraus = (0..m)
            .map(|i| {
                self.kraus
                    .iter()
                    .enumerate()
                    .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, (j, k)| {
                        acc + k * u[(i, j)]
                    })
            })
            .collect();
        KrausChannel::new(kraus, tol)
    }

    /// Selective measurement outcomes `(p_n, ρ_n)`, one per Kraus operator.
    pub fn measurement_branches(&self, rho: &DensityMatrix, tol: &TolerancePolicy) -> Result<Vec<MeasurementBranch>> {
        check_same_dim(self.dim, rho.matrix())?;
        self.kraus
            .iter()
            .map(|m| {
                let unnormalized = m * rho.matrix() * m.adjoint();
                let probability = unnormalized.trace().re;
                let state = if probability < tol.eig_clamp {
                    None
                } else {
                    Some(DensityMatrix::validate(unnormalized.unscale(probability), tol)?)
                };
                Ok(MeasurementBranch { probability, state })
            })
            .collect()
    }

    /// Kraus operators `M_n ⊗ U_n` on `dim·N`, with `U_n |k⟩ = |k+n mod N⟩` on an `N`-level
    /// pointer. Acting on `ρ ⊗ |0⟩⟨0|` this records the outcome `n` in the pointer.
    pub fn extend_with_pointer(&self) -> KrausChannel {
        let n = self.kraus.len();
        let kraus = self
            .kraus
            .iter()
            .enumerate()
            .map(|(shift, m)| numerics::kron(m, &cyclic_shift(n, shift)))
            .collect();
        KrausChannel::new_unchecked(self.dim * n, kraus)
    }

    /// `λ ⊗ id` on an `anc_dim`-level ancilla.
    pub fn tensor_with_identity(&self, anc_dim: usize) -> Result<KrausChannel> {
        let kraus = self
            .kraus
            .iter()
            .map(|k| tensor_with_identity(k, anc_dim))
            .collect::<Result<Vec<_>>>()?;
        Ok(KrausChannel::new_unchecked(self.dim * anc_dim, kraus))
    }

    pub fn compose(&self, after: &KrausChannel) -> Result<KrausChannel> {
        if self.dim != after.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: after.dim,
            });
        }
        let kraus = after
            .kraus
            .iter()
            .flat_map(|a| self.kraus.iter().map(move |b| a * b))
            .collect();
        Ok(KrausChannel::new_unchecked(self.dim, kraus))
    }

    /// Largest Frobenius distance between the two channels' outputs on [`spanning_states`].
    pub fn action_distance(&self, other: &KrausChannel) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut worst: f64 = 0.0;
        for s in spanning_states(self.dim) {
            let a = self.apply_matrix(s.matrix())?;
            let b = other.apply_matrix(s.matrix())?;
            worst = worst.max(numerics::hs_norm_sq(&(a - b)).sqrt());
        }
        Ok(worst)
    }
}

/// Normalize arbitrary operators into a channel: `M_n = M̃_n S^{-1/2}`, `S = Σ M̃†M̃`.
pub fn normalize_kraus(raw: Vec<ComplexMatrix>, tol: &TolerancePolicy) -> Result<KrausChannel> {
    let first = raw.first().ok_or(Error::EmptyInput("Kraus list"))?;
    let dim = check_square(first)?;
    let s = raw
        .iter()
        .fold(ComplexMatrix::zeros(dim, dim), |acc, k| acc + k.adjoint() * k);
    let s_inv_sqrt = numerics::matrix_function(&s, MatrixFn::Power(-0.5), tol)?;
    KrausChannel::new(raw.into_iter().map(|k| k * &s_inv_sqrt).collect(), tol)
}

/// `Σ_k |k+shift mod n⟩⟨k|`.
pub fn cyclic_shift(n: usize, shift: usize) -> ComplexMatrix {
    let mut u = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        u[((k + shift) % n, k)] = numerics::ONE;
    }
    u
}

/// `K ⊗ I_anc`.
pub fn tensor_with_identity(k: &ComplexMatrix, anc_dim: usize) -> Result<ComplexMatrix> {
    if anc_dim == 0 {
        return Err(Error::InvalidParameter("ancilla dimension must be positive".into()));
    }
    Ok(numerics::kron(k, &numerics::identity(anc_dim)))
}

/// `ρ ⊗ |0⟩⟨0|` on an `n`-level pointer.
pub fn attach_pointer(rho: &DensityMatrix, n: usize) -> Result<DensityMatrix> {
    Ok(rho.tensor(&DensityMatrix::basis(n, 0)?))
}

/// `Σ_n p_n ρ_n ⊗ |n⟩⟨n|`; null branches contribute nothing.
pub fn pointer_mixture(branches: &[MeasurementBranch], dim: usize) -> ComplexMatrix {
    let n = branches.len();
    let mut out = ComplexMatrix::zeros(dim * n, dim * n);
    for (idx, b) in branches.iter().enumerate() {
        if let Some(state) = &b.state {
            let block = numerics::kron(state.matrix(), &numerics::matrix_unit(n, idx, idx));
            out += block * Complex64::from(b.probability);
        }
    }
    out
}

/// A basis of density matrices spanning all `dim × dim` matrices: the `|i⟩⟨i|`, and for `i < j`
/// the projectors onto `(|i⟩+|j⟩)/√2` and `(|i⟩+i|j⟩)/√2`.
pub fn spanning_states(dim: usize) -> Vec<DensityMatrix> {
    let mut out = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        out.push(DensityMatrix::basis(dim, i).expect("index in range"));
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            for phase in [numerics::ONE, numerics::I] {
                let mut psi = vec![numerics::ZERO; dim];
                psi[i] = numerics::ONE;
                psi[j] = phase;
                out.push(DensityMatrix::pure(&psi).expect("nonzero vector"));
            }
        }
    }
    out
}
