//! Resource-destroying maps and the free operations compatible with them.
//!
//! A resource-destroying map `λ` is an idempotent channel whose fixed points are the free
//! states. Two families are built in: dephasing in the computational basis (coherence) and
//! twirling over a finite unitary group (asymmetry). Free operations are channels whose Kraus
//! operators commute with every Kraus operator of `λ` and its adjoint; they are drawn from the
//! commutant of that set.

use nalgebra::SVD;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{self, KrausChannel};
use crate::error::{Error, Result};
use crate::numerics::{self, check_same_dim, check_square, ComplexMatrix, MatrixFn, TolerancePolicy};
use crate::states::{self, DensityMatrix, RngSeed};

/// Attempts at drawing an invertible normalizer before giving up.
pub const MAX_SAMPLING_RETRIES: usize = 16;

/// A finite group of `dim × dim` unitaries, closed under products and containing the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupRepresentation {
    dim: usize,
    elements: Vec<ComplexMatrix>,
}

impl GroupRepresentation {
    pub fn new(elements: Vec<ComplexMatrix>, tol: &TolerancePolicy) -> Result<Self> {
        let first = elements.first().ok_or(Error::EmptyInput("group elements"))?;
        let dim = check_square(first)?;
        for u in &elements {
            check_same_dim(dim, u)?;
            numerics::check_finite(u)?;
            let residual = numerics::unitarity_residual(u);
            if residual > tol.unitary_atol {
                return Err(Error::NotUnitary(residual));
            }
        }
        let rep = Self { dim, elements };
        let id = numerics::identity(dim);
        if rep.nearest_distance(&id) > tol.unitary_atol {
            return Err(Error::MissingIdentity);
        }
        let residual = rep.closure_residual();
        if residual > tol.unitary_atol {
            return Err(Error::NotClosed(residual));
        }
        Ok(rep)
    }

    /// `Z_n` acting on `C^n` by cyclic shifts `|k⟩ ↦ |k+1 mod n⟩`.
    pub fn cyclic_shift(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("group order must be positive".into()));
        }
        Ok(Self {
            dim: n,
            elements: (0..n).map(|k| channels::cyclic_shift(n, k)).collect(),
        })
    }

    /// `Z_n` acting on `C^dim` by `diag(ω^{jk})_j`, `ω = e^{2πi/n}`.
    pub fn diagonal_phase(n: usize, dim: usize) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::InvalidParameter(
                "group order and dimension must be positive".into(),
            ));
        }
        let elements = (0..n)
            .map(|k| {
                let phases = (0..dim).map(|j| {
                    let angle = 2.0 * std::f64::consts::PI * ((j * k) % n) as f64 / n as f64;
                    Complex64::from_polar(1.0, angle)
                });
                ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(dim, phases))
            })
            .collect();
        Ok(Self { dim, elements })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    fn nearest_distance(&self, m: &ComplexMatrix) -> f64 {
        self.elements
            .iter()
            .map(|u| numerics::hs_norm_sq(&(u - m)).sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest distance from a pairwise product to its nearest listed element.
    pub fn closure_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in &self.elements {
            for b in &self.elements {
                worst = worst.max(self.nearest_distance(&(a * b)));
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResourceLabel {
    Dephasing,
    Twirling,
    Custom,
}

/// A resource-destroying map `λ`, checked idempotent on a spanning set of states.
#[derive(Debug, Clone)]
pub struct ResourceSpec {
    destroyer: KrausChannel,
    label: ResourceLabel,
    group: Option<GroupRepresentation>,
}

impl ResourceSpec {
    pub fn new(destroyer: KrausChannel, label: ResourceLabel, tol: &TolerancePolicy) -> Result<Self> {
        let residual = idempotence_residual(&destroyer)?;
        if residual > tol.assert_atol {
            return Err(Error::NotIdempotent(residual));
        }
        Ok(Self {
            destroyer,
            label,
            group: None,
        })
    }

    pub fn destroyer(&self) -> &KrausChannel {
        &self.destroyer
    }

    pub fn label(&self) -> ResourceLabel {
        self.label
    }

    pub fn group(&self) -> Option<&GroupRepresentation> {
        self.group.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.destroyer.dim()
    }

    /// Kraus operators of `λ` together with their adjoints.
    pub fn commutation_constraints(&self) -> Vec<ComplexMatrix> {
        self.destroyer
            .kraus()
            .iter()
            .flat_map(|k| [k.clone(), k.adjoint()])
            .collect()
    }
}

/// Largest `‖λ(λ(s)) - λ(s)‖` over the spanning states.
pub fn idempotence_residual(lambda: &KrausChannel) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for s in channels::spanning_states(lambda.dim()) {
        let once = lambda.apply_matrix(s.matrix())?;
        let twice = lambda.apply_matrix(&once)?;
        worst = worst.max(numerics::hs_norm_sq(&(twice - once)).sqrt());
    }
    Ok(worst)
}

/// `Δ(ρ) = Σ_i |i⟩⟨i| ρ |i⟩⟨i|` in the computational basis.
pub fn dephasing_map(dim: usize, tol: &TolerancePolicy) -> Result<ResourceSpec> {
    if dim < 2 {
        return Err(Error::InvalidParameter(format!("dephasing needs dim >= 2, got {dim}")));
    }
    let kraus = (0..dim).map(|i| numerics::matrix_unit(dim, i, i)).collect();
    ResourceSpec::new(KrausChannel::new(kraus, tol)?, ResourceLabel::Dephasing, tol)
}

/// `ρ ↦ |G|⁻¹ Σ_g U_g ρ U_g†`, Kraus operators `U_g/√|G|`.
pub fn twirling_map(rep: &GroupRepresentation, tol: &TolerancePolicy) -> Result<ResourceSpec> {
    twirl_with_label(rep, ResourceLabel::Twirling, tol)
}

/// Twirling over a user-supplied representation.
pub fn custom_twirl(rep: &GroupRepresentation, tol: &TolerancePolicy) -> Result<ResourceSpec> {
    twirl_with_label(rep, ResourceLabel::Custom, tol)
}

fn twirl_with_label(rep: &GroupRepresentation, label: ResourceLabel, tol: &TolerancePolicy) -> Result<ResourceSpec> {
    let scale = Complex64::from(1.0 / (rep.order() as f64).sqrt());
    let kraus = rep.elements().iter().map(|u| u * scale).collect();
    let mut spec = ResourceSpec::new(KrausChannel::new(kraus, tol)?, label, tol)?;
    spec.group = Some(rep.clone());
    Ok(spec)
}

/// Outcome of [`is_free`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeCheck {
    pub free: bool,
    /// `‖λ(ρ) - ρ‖²`
    pub residual: f64,
    /// For twirling: `max_g ‖U_g ρ U_g† - ρ‖²`.
    pub group_residual: Option<f64>,
}

/// `ρ` is free iff `λ(ρ) = ρ`, decided as `‖λ(ρ) - ρ‖² <= assert_atol²`.
pub fn is_free(rho: &DensityMatrix, spec: &ResourceSpec, tol: &TolerancePolicy) -> Result<FreeCheck> {
    let image = spec.destroyer.apply_matrix(rho.matrix())?;
    let residual = numerics::hs_norm_sq(&(image - rho.matrix()));
    let group_residual = spec.group.as_ref().map(|g| {
        g.elements()
            .iter()
            .map(|u| numerics::hs_norm_sq(&(u * rho.matrix() * u.adjoint() - rho.matrix())))
            .fold(0.0, f64::max)
    });
    Ok(FreeCheck {
        free: residual <= tol.assert_atol * tol.assert_atol,
        residual,
        group_residual,
    })
}

/// HS-orthonormal basis of `{X : [X, A] = 0 for all A in ops}`.
///
/// Computed as the common null space of the vectorized maps `X ↦ AX - XA`; singular values
/// below `dim·unitary_atol` count as zero.
pub fn commutant_basis(ops: &[ComplexMatrix], tol: &TolerancePolicy) -> Result<Vec<ComplexMatrix>> {
    let first = ops.first().ok_or(Error::EmptyInput("operator list"))?;
    let d = check_square(first)?;
    let n = d * d;
    let id = numerics::identity(d);
    let mut stacked = ComplexMatrix::zeros(ops.len() * n, n);
    for (idx, a) in ops.iter().enumerate() {
        check_same_dim(d, a)?;
        // column-major vec: vec(AX - XA) = (I ⊗ A - Aᵀ ⊗ I) vec(X)
        let block = numerics::kron(&id, a) - numerics::kron(&a.transpose(), &id);
        stacked.view_mut((idx * n, 0), (n, n)).copy_from(&block);
    }
    let svd = SVD::new(stacked, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let threshold = d as f64 * tol.unitary_atol;
    let basis = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s < threshold)
        .map(|(row, _)| {
            let v: Vec<Complex64> = v_t.row(row).iter().map(|z| z.conj()).collect();
            ComplexMatrix::from_column_slice(d, d, &v)
        })
        .collect();
    Ok(basis)
}

/// Draws free operations for a fixed set of commutation constraints.
///
/// Kraus operators are random complex combinations `M̃_n` of the commutant basis, normalized as
/// `M_n = M̃_n S^{-1/2}` with `S = Σ M̃_n†M̃_n`. When the constraint set is closed under `†` the
/// commutant is a *-algebra, so `S^{-1/2}` stays inside it and every `M_n` still commutes with
/// every constraint.
#[derive(Debug, Clone)]
pub struct FreeOperationSampler {
    dim: usize,
    basis: Vec<ComplexMatrix>,
}

impl FreeOperationSampler {
    /// Sampler over the commutant of `constraints` and their adjoints.
    pub fn new(constraints: &[ComplexMatrix], tol: &TolerancePolicy) -> Result<Self> {
        let first = constraints.first().ok_or(Error::EmptyInput("operator list"))?;
        let dim = check_square(first)?;
        let closed: Vec<_> = constraints.iter().flat_map(|k| [k.clone(), k.adjoint()]).collect();
        let basis = commutant_basis(&closed, tol)?;
        // a one-dimensional commutant only admits the identity channel
        if basis.len() < 2 {
            return Err(Error::CommutantTooSmall(basis.len()));
        }
        Ok(Self { dim, basis })
    }

    pub fn for_resource(spec: &ResourceSpec, tol: &TolerancePolicy) -> Result<Self> {
        Self::new(spec.destroyer.kraus(), tol)
    }

    pub fn commutant_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[ComplexMatrix] {
        &self.basis
    }

    pub fn sample<R: Rng + ?Sized>(&self, n_kraus: usize, rng: &mut R, tol: &TolerancePolicy) -> Result<KrausChannel> {
        if n_kraus == 0 {
            return Err(Error::InvalidParameter("need at least one Kraus operator".into()));
        }
        for _ in 0..MAX_SAMPLING_RETRIES {
            let raw: Vec<ComplexMatrix> = (0..n_kraus)
                .map(|_| {
                    self.basis
                        .iter()
                        .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, b| {
                            acc + b * states::complex_gaussian(rng)
                        })
                })
                .collect();
            let s = raw
                .iter()
                .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, m| acc + m.adjoint() * m);
            let eig = numerics::hermitian_eig(&s, tol)?;
            if eig.min_eigenvalue() <= tol.eig_clamp {
                log::debug!(
                    "normalizer singular (min eigenvalue {:e}), resampling",
                    eig.min_eigenvalue()
                );
                continue;
            }
            let s_inv_sqrt = numerics::spectral_function(&eig, MatrixFn::Power(-0.5), tol)?;
            let kraus = raw.into_iter().map(|m| m * &s_inv_sqrt).collect();
            return KrausChannel::new(kraus, tol);
        }
        Err(Error::SamplingFailed(MAX_SAMPLING_RETRIES))
    }
}

/// One free operation for `spec` with `n_kraus` Kraus operators.
pub fn sample_free_operation(
    spec: &ResourceSpec,
    n_kraus: usize,
    seed: RngSeed,
    tol: &TolerancePolicy,
) -> Result<KrausChannel> {
    FreeOperationSampler::for_resource(spec, tol)?.sample(n_kraus, &mut seed.rng(), tol)
}

/// Residuals of the commutation / fixed-point equivalence for a channel `E` and operator `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Report {
    /// `max_n ‖[M_n, K]‖`
    pub commutator: f64,
    /// `‖E†(K) - K‖`
    pub fixed_point: f64,
    /// `‖E†(K†K) - K†K‖`
    pub square_fixed_point: f64,
    /// `‖E†(KK†) - KK†‖`
    pub co_square_fixed_point: f64,
    /// Frobenius norm of
    /// `Σ_n [M_n,K]†[M_n,K] - (K†K - E†(K†)K - K†E†(K) + E†(K†K))`.
    pub identity: f64,
}

impl Lemma3Report {
    pub fn max_fixed_point(&self) -> f64 {
        self.fixed_point
            .max(self.square_fixed_point)
            .max(self.co_square_fixed_point)
    }
}

pub fn check_lemma3(e: &KrausChannel, k: &ComplexMatrix) -> Result<Lemma3Report> {
    check_same_dim(e.dim(), k)?;
    let kd = k.adjoint();
    let ktk = &kd * k;
    let kkt = k * &kd;

    let mut commutator: f64 = 0.0;
    let mut sum = ComplexMatrix::zeros(e.dim(), e.dim());
    for m in e.kraus() {
        let c = numerics::commutator(m, k)?;
        commutator = commutator.max(numerics::hs_norm_sq(&c).sqrt());
        sum += c.adjoint() * c;
    }
    let e_k = e.apply_adjoint(k)?;
    let e_kd = e.apply_adjoint(&kd)?;
    let e_ktk = e.apply_adjoint(&ktk)?;
    let e_kkt = e.apply_adjoint(&kkt)?;
    let expansion = &ktk - &e_kd * k - &kd * &e_k + &e_ktk;

    Ok(Lemma3Report {
        commutator,
        fixed_point: numerics::hs_norm_sq(&(e_k - k)).sqrt(),
        square_fixed_point: numerics::hs_norm_sq(&(e_ktk - &ktk)).sqrt(),
        co_square_fixed_point: numerics::hs_norm_sq(&(e_kkt - &kkt)).sqrt(),
        identity: numerics::hs_norm_sq(&(sum - expansion)).sqrt(),
    })
}
