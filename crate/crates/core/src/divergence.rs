//! Skew information and the `J_p` quasi-entropy family.
//!
//! - `I(ρ,K) = ‖[√ρ, K]‖²`, evaluated through the trace expansion
//!   `Tr(ρK†K) + Tr(ρKK†) - 2 Tr(√ρ K† √ρ K)`, and `I(ρ,λ) = Σ_i I(ρ,K_i)`.
//! - `g_p(x) = (x - x^p)/(p(1-p))` for `p ≠ 1`, `x ln x` for `p = 1`.
//! - `J_p(K,A,B) = ⟨K√B, g_p(Δ(A/B))(K√B)⟩` with `Δ(A/B)X = A X B⁻¹`. [`j_p`] uses the closed
//!   trace formulas of the three branches; [`j_p_spectral`] sums over eigenpairs of `A` and `B`
//!   directly. The two are independent and are cross-checked in the test suites.
//! - `I_p(ρ,K) = J_p(K,ρ,ρ)` and `I_p(ρ,λ) = Σ_i I_p(ρ,K_i)`.
//!
//! Logarithms are natural throughout.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::numerics::{self, check_same_dim, trace_of_product, ComplexMatrix, HermitianEig, MatrixFn, TolerancePolicy};
use crate::states::{self, DensityMatrix};

/// Regularization applied to singular states before evaluating `I_p`.
pub const DEFAULT_REGULARIZATION: f64 = 1e-8;

/// Distance from 1 or 2 within which `p` snaps onto the special branch.
pub const BRANCH_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// `p ∈ (0,1) ∪ (1,2)`
    Power,
    /// `p = 1`
    Log,
    /// `p = 2`
    Inverse,
}

/// The order `p ∈ (0,2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct OrderParameter(f64);

impl OrderParameter {
    /// The Wigner-Yanase point `p = 1/2`.
    pub const HALF: OrderParameter = OrderParameter(0.5);

    pub fn new(p: f64) -> Result<Self> {
        let snapped = if (p - 1.0).abs() <= BRANCH_SNAP {
            1.0
        } else if (p - 2.0).abs() <= BRANCH_SNAP {
            2.0
        } else {
            p
        };
        if !(snapped > 0.0 && snapped <= 2.0) {
            return Err(Error::InvalidParameter(format!("order p = {p} outside (0,2]")));
        }
        Ok(Self(snapped))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn branch(self) -> Branch {
        if self.0 == 1.0 {
            Branch::Log
        } else if self.0 == 2.0 {
            Branch::Inverse
        } else {
            Branch::Power
        }
    }

    /// `p ∈ (0,1)`, where the monotonicity theorem applies.
    pub fn is_proven_range(self) -> bool {
        self.0 < 1.0
    }
}

impl TryFrom<f64> for OrderParameter {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        Self::new(p)
    }
}

impl From<OrderParameter> for f64 {
    fn from(p: OrderParameter) -> f64 {
        p.0
    }
}

/// A divergence value with the branch that produced it. `+∞` only arises from the log branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureValue {
    pub value: f64,
    pub branch: Branch,
}

impl MeasureValue {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// Clamp floating-point residue below zero for quantities that are nonnegative in theory.
fn clamp_nonnegative(value: f64, tol: &TolerancePolicy, what: &str) -> f64 {
    if value >= 0.0 {
        value
    } else if value >= -tol.assert_atol {
        log::debug!("{what}: clamped {value:e} to 0");
        0.0
    } else {
        log::warn!("{what}: negative value {value:e} beyond tolerance");
        value
    }
}

fn real_part_checked(z: num_complex::Complex64, tol: &TolerancePolicy, what: &str) -> f64 {
    if z.im.abs() > tol.assert_atol * (1.0 + z.re.abs()) {
        log::warn!("{what}: imaginary residue {:e}", z.im);
    }
    z.re
}

fn skew_terms(rho: &ComplexMatrix, sqrt_rho: &ComplexMatrix, k: &ComplexMatrix, tol: &TolerancePolicy) -> f64 {
    let kd = k.adjoint();
    let t1 = trace_of_product(rho, &(&kd * k));
    let t2 = trace_of_product(rho, &(k * &kd));
    let t3 = trace_of_product(&(sqrt_rho * &kd), &(sqrt_rho * k));
    let value = real_part_checked(t1 + t2 - t3 * 2.0, tol, "skew information");
    clamp_nonnegative(value, tol, "skew information")
}

/// `I(ρ,K)` by the trace expansion.
pub fn skew_info_op(rho: &DensityMatrix, k: &ComplexMatrix, tol: &TolerancePolicy) -> Result<f64> {
    check_same_dim(rho.dim(), k)?;
    let sqrt_rho = numerics::matrix_function(rho.matrix(), MatrixFn::Sqrt, tol)?;
    Ok(skew_terms(rho.matrix(), &sqrt_rho, k, tol))
}

/// `I(ρ,K)` straight from the definition `‖[√ρ, K]‖²`.
pub fn skew_info_commutator(rho: &DensityMatrix, k: &ComplexMatrix, tol: &TolerancePolicy) -> Result<f64> {
    check_same_dim(rho.dim(), k)?;
    let sqrt_rho = numerics::matrix_function(rho.matrix(), MatrixFn::Sqrt, tol)?;
    Ok(numerics::hs_norm_sq(&numerics::commutator(&sqrt_rho, k)?))
}

/// `I(ρ,λ) = Σ_i I(ρ,K_i)`.
pub fn skew_info_channel(rho: &DensityMatrix, lambda: &KrausChannel, tol: &TolerancePolicy) -> Result<f64> {
    check_channel_dim(rho, lambda)?;
    skew_info_ops(rho, lambda.kraus(), tol)
}

/// `Σ_i I(ρ,K_i)` over an arbitrary operator list, sharing one `√ρ`.
pub fn skew_info_ops(rho: &DensityMatrix, ops: &[ComplexMatrix], tol: &TolerancePolicy) -> Result<f64> {
    for k in ops {
        check_same_dim(rho.dim(), k)?;
    }
    let sqrt_rho = numerics::matrix_function(rho.matrix(), MatrixFn::Sqrt, tol)?;
    Ok(ops.iter().map(|k| skew_terms(rho.matrix(), &sqrt_rho, k, tol)).sum())
}

/// `g_p(x)` for `x > 0`.
pub fn g_p(x: f64, p: OrderParameter) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!("g_p needs x > 0, got {x}")));
    }
    Ok(g_p_unchecked(x, p))
}

fn g_p_unchecked(x: f64, p: OrderParameter) -> f64 {
    match p.branch() {
        Branch::Log => x * x.ln(),
        // x - x^p = -x·expm1((p-1) ln x); this form stays accurate as p → 1
        _ => {
            let p = p.value();
            x * ((p - 1.0) * x.ln()).exp_m1() / (p * (p - 1.0))
        }
    }
}

fn strictly_positive_eig(m: &DensityMatrix, tol: &TolerancePolicy) -> Result<HermitianEig> {
    let eig = m.eig(tol)?;
    if eig.min_eigenvalue() <= tol.eig_clamp {
        return Err(Error::Singular(eig.min_eigenvalue()));
    }
    Ok(eig)
}

/// Per-operator `J_p(K, A, B)` trace formulas, sharing the spectral work across `kraus`.
fn j_p_trace_terms(
    kraus: &[ComplexMatrix],
    a: &DensityMatrix,
    b: &DensityMatrix,
    p: OrderParameter,
    tol: &TolerancePolicy,
) -> Result<Vec<f64>> {
    let a_eig = strictly_positive_eig(a, tol)?;
    let b_eig = strictly_positive_eig(b, tol)?;
    let am = a.matrix();
    match p.branch() {
        Branch::Power => {
            let q = p.value();
            let a_p = a_eig.map(|w| w.powf(q));
            let b_1mp = b_eig.map(|w| w.powf(1.0 - q));
            Ok(power_terms(kraus, am, &a_p, &b_1mp, q, tol))
        }
        Branch::Log => {
            let log_a = a_eig.map(f64::ln);
            let log_b = b_eig.map(f64::ln);
            let a_log_a = am * log_a;
            Ok(kraus
                .iter()
                .map(|k| {
                    let kd = k.adjoint();
                    // Tr(K K† A log A) - Tr(K† A K log B)
                    let first = trace_of_product(&(k * &kd), &a_log_a);
                    let second = trace_of_product(&(&kd * am * k), &log_b);
                    real_part_checked(first - second, tol, "J_1")
                })
                .collect())
        }
        Branch::Inverse => {
            let b_inv = b_eig.map(|w| 1.0 / w);
            Ok(kraus
                .iter()
                .map(|k| {
                    let kd = k.adjoint();
                    // -1/2 (Tr K†AK - Tr A K B⁻¹ K† A)
                    let linear = trace_of_product(&(&kd * am), k);
                    let inverse = trace_of_product(&(am * k * &b_inv), &(&kd * am));
                    real_part_checked((linear - inverse) * -0.5, tol, "J_2")
                })
                .collect())
        }
    }
}

/// `(Tr K†AK - Tr K†A^p K B^{1-p}) / (p(1-p))` for each `K`.
fn power_terms(
    kraus: &[ComplexMatrix],
    a: &ComplexMatrix,
    a_p: &ComplexMatrix,
    b_1mp: &ComplexMatrix,
    p: f64,
    tol: &TolerancePolicy,
) -> Vec<f64> {
    let scale = 1.0 / (p * (1.0 - p));
    kraus
        .iter()
        .map(|k| {
            let kd = k.adjoint();
            let linear = trace_of_product(&(&kd * a), k);
            let cross = trace_of_product(&(&kd * a_p), &(k * b_1mp));
            real_part_checked((linear - cross) * scale, tol, "J_p")
        })
        .collect()
}

fn check_j_p_dims(k: &ComplexMatrix, a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    check_same_dim(a.dim(), k)?;
    check_same_dim(a.dim(), b.matrix())
}

/// `J_p(K, A, B)` from the branch trace formulas. `A` and `B` must be strictly positive.
pub fn j_p(
    k: &ComplexMatrix,
    a: &DensityMatrix,
    b: &DensityMatrix,
    p: OrderParameter,
    tol: &TolerancePolicy,
) -> Result<MeasureValue> {
    check_j_p_dims(k, a, b)?;
    let value = j_p_trace_terms(std::slice::from_ref(k), a, b, p, tol)?[0];
    Ok(MeasureValue {
        value,
        branch: p.branch(),
    })
}

/// `J_p(K, A, B) = Σ_ij g_p(a_i/b_j) b_j |⟨a_i|K|b_j⟩|²` over the eigenpairs of `A` and `B`.
pub fn j_p_spectral(
    k: &ComplexMatrix,
    a: &DensityMatrix,
    b: &DensityMatrix,
    p: OrderParameter,
    tol: &TolerancePolicy,
) -> Result<MeasureValue> {
    check_j_p_dims(k, a, b)?;
    let a_eig = strictly_positive_eig(a, tol)?;
    let b_eig = strictly_positive_eig(b, tol)?;
    Ok(MeasureValue {
        value: spectral_sum(k, &a_eig, &b_eig, p),
        branch: p.branch(),
    })
}

fn spectral_sum(k: &ComplexMatrix, a_eig: &HermitianEig, b_eig: &HermitianEig, p: OrderParameter) -> f64 {
    let mixed = a_eig.eigenvectors.adjoint() * k * &b_eig.eigenvectors;
    let (av, bv): (&DVector<f64>, &DVector<f64>) = (&a_eig.eigenvalues, &b_eig.eigenvalues);
    let mut total = 0.0;
    for (j, &bj) in bv.iter().enumerate() {
        for (i, &ai) in av.iter().enumerate() {
            total += g_p_unchecked(ai / bj, p) * bj * mixed[(i, j)].norm_sqr();
        }
    }
    total
}

fn regularized_if_singular(rho: &DensityMatrix, delta: f64, tol: &TolerancePolicy) -> Result<DensityMatrix> {
    let eig = rho.eig(tol)?;
    if eig.min_eigenvalue() > tol.eig_clamp {
        Ok(rho.clone())
    } else {
        log::debug!(
            "regularizing singular state (min eigenvalue {:e}) with δ = {delta:e}",
            eig.min_eigenvalue()
        );
        states::regularize(rho, delta)
    }
}

fn check_channel_dim(rho: &DensityMatrix, lambda: &KrausChannel) -> Result<()> {
    if lambda.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: lambda.dim(),
        });
    }
    Ok(())
}

/// The individual terms `I_p(ρ, K_i)` after regularizing a singular `ρ` with `delta`.
pub fn i_p_terms(
    rho: &DensityMatrix,
    kraus: &[ComplexMatrix],
    p: OrderParameter,
    delta: f64,
    tol: &TolerancePolicy,
) -> Result<Vec<f64>> {
    for k in kraus {
        check_same_dim(rho.dim(), k)?;
    }
    let rho = regularized_if_singular(rho, delta, tol)?;
    j_p_trace_terms(kraus, &rho, &rho, p, tol)
}

/// `I_p(ρ, K) = J_p(K, ρ, ρ)`, regularizing a singular `ρ` with [`DEFAULT_REGULARIZATION`].
pub fn i_p_op(rho: &DensityMatrix, k: &ComplexMatrix, p: OrderParameter, tol: &TolerancePolicy) -> Result<f64> {
    Ok(i_p_terms(rho, std::slice::from_ref(k), p, DEFAULT_REGULARIZATION, tol)?[0])
}

/// `I_p(ρ, λ) = Σ_i J_p(K_i, ρ, ρ)`, regularizing a singular `ρ` with [`DEFAULT_REGULARIZATION`].
pub fn i_p_channel(
    rho: &DensityMatrix,
    lambda: &KrausChannel,
    p: OrderParameter,
    tol: &TolerancePolicy,
) -> Result<f64> {
    i_p_channel_with(rho, lambda, p, DEFAULT_REGULARIZATION, tol)
}

/// [`i_p_channel`] with an explicit regularization strength.
pub fn i_p_channel_with(
    rho: &DensityMatrix,
    lambda: &KrausChannel,
    p: OrderParameter,
    delta: f64,
    tol: &TolerancePolicy,
) -> Result<f64> {
    check_channel_dim(rho, lambda)?;
    let total = i_p_terms(rho, lambda.kraus(), p, delta, tol)?.iter().sum();
    Ok(clamp_nonnegative(total, tol, "I_p"))
}

/// `I_p(ρ, λ)` evaluated through [`j_p_spectral`] instead of the trace formulas.
pub fn i_p_channel_spectral(
    rho: &DensityMatrix,
    lambda: &KrausChannel,
    p: OrderParameter,
    delta: f64,
    tol: &TolerancePolicy,
) -> Result<f64> {
    check_channel_dim(rho, lambda)?;
    Ok(i_p_spectral_terms(rho, lambda.kraus(), p, delta, tol)?.iter().sum())
}

/// Per-operator terms of [`i_p_channel_spectral`]. Unlike the trace formulas this never forms
/// `ρ^{1-p}` or `ρ^{-1}` explicitly, so it stays accurate on nearly singular states.
pub fn i_p_spectral_terms(
    rho: &DensityMatrix,
    ops: &[ComplexMatrix],
    p: OrderParameter,
    delta: f64,
    tol: &TolerancePolicy,
) -> Result<Vec<f64>> {
    for k in ops {
        check_same_dim(rho.dim(), k)?;
    }
    let rho = regularized_if_singular(rho, delta, tol)?;
    let eig = strictly_positive_eig(&rho, tol)?;
    Ok(ops.iter().map(|k| spectral_sum(k, &eig, &eig, p)).collect())
}

/// `I_p(ρ, K_i)` on a possibly singular `ρ` as the exact `δ → 0` limit of regularization,
/// evaluated in the eigenbasis of `ρ`. Pairs with `a_i > 0 = b_j` contribute `a_i|K_ij|²/(p(1-p))`
/// for `p < 1` and `+∞` for `p >= 1` unless `K_ij` vanishes (relative to `support_rtol`);
/// pairs with `a_i = 0` contribute nothing.
pub fn i_p_support_terms(
    rho: &DensityMatrix,
    ops: &[ComplexMatrix],
    p: OrderParameter,
    tol: &TolerancePolicy,
) -> Result<Vec<f64>> {
    for k in ops {
        check_same_dim(rho.dim(), k)?;
    }
    let eig = rho.eig(tol)?;
    let w: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&x| if x <= tol.eig_clamp { 0.0 } else { x })
        .collect();
    let q = p.value();
    let terms = ops
        .iter()
        .map(|k| {
            let mixed = eig.eigenvectors.adjoint() * k * &eig.eigenvectors;
            let leak = tol.support_rtol * k.norm().max(1.0);
            let mut total = 0.0;
            for (j, &bj) in w.iter().enumerate() {
                for (i, &ai) in w.iter().enumerate() {
                    let m2 = mixed[(i, j)].norm_sqr();
                    if ai == 0.0 {
                        continue;
                    }
                    if bj > 0.0 {
                        total += g_p_unchecked(ai / bj, p) * bj * m2;
                    } else if q < 1.0 {
                        total += ai * m2 / (q * (1.0 - q));
                    } else if m2.sqrt() > leak {
                        return f64::INFINITY;
                    }
                }
            }
            total
        })
        .collect();
    Ok(terms)
}

/// `I_p(ρ, λ)` for `p ∈ (0,1)` on a possibly singular `ρ`, using the limit convention `0^q = 0`
/// instead of regularization. The trace formula is continuous there, so this is the exact
/// value regularization approximates.
pub fn i_p_channel_limit(
    rho: &DensityMatrix,
    lambda: &KrausChannel,
    p: OrderParameter,
    tol: &TolerancePolicy,
) -> Result<f64> {
    check_channel_dim(rho, lambda)?;
    let total = i_p_limit_terms(rho, lambda.kraus(), p, tol)?.iter().sum();
    Ok(clamp_nonnegative(total, tol, "I_p"))
}

/// Per-operator terms of [`i_p_channel_limit`].
pub fn i_p_limit_terms(
    rho: &DensityMatrix,
    ops: &[ComplexMatrix],
    p: OrderParameter,
    tol: &TolerancePolicy,
) -> Result<Vec<f64>> {
    for k in ops {
        check_same_dim(rho.dim(), k)?;
    }
    if !p.is_proven_range() {
        return Err(Error::InvalidParameter(format!(
            "limit convention needs p in (0,1), got {}",
            p.value()
        )));
    }
    let eig = rho.eig(tol)?;
    let q = p.value();
    let a_p = numerics::spectral_function(&eig, MatrixFn::Power(q), tol)?;
    let a_1mp = numerics::spectral_function(&eig, MatrixFn::Power(1.0 - q), tol)?;
    Ok(power_terms(ops, rho.matrix(), &a_p, &a_1mp, q, tol))
}

/// Umegaki relative entropy `Tr(A log A - A log B)`, `+∞` when `supp A ⊄ supp B`.
pub fn relative_entropy(a: &DensityMatrix, b: &DensityMatrix, tol: &TolerancePolicy) -> Result<MeasureValue> {
    check_same_dim(a.dim(), b.matrix())?;
    let a_eig = a.eig(tol)?;
    let b_eig = b.eig(tol)?;
    let log = |value| MeasureValue {
        value,
        branch: Branch::Log,
    };
    if a_eig.min_eigenvalue() > tol.eig_clamp && b_eig.min_eigenvalue() > tol.eig_clamp {
        return j_p(&numerics::identity(a.dim()), a, b, OrderParameter(1.0), tol);
    }
    // support-restricted evaluation
    let cutoff = tol.support_rtol * b_eig.max_eigenvalue().max(0.0);
    let overlap = b_eig.eigenvectors.adjoint() * a.matrix() * &b_eig.eigenvectors;
    let mut cross = 0.0;
    for (j, &bj) in b_eig.eigenvalues.iter().enumerate() {
        let weight = overlap[(j, j)].re;
        if bj <= cutoff {
            if weight > tol.support_rtol {
                return Ok(log(f64::INFINITY));
            }
        } else {
            cross += weight * bj.ln();
        }
    }
    let entropy_term: f64 = a_eig
        .eigenvalues
        .iter()
        .filter(|&&w| w > tol.eig_clamp)
        .map(|&w| w * w.ln())
        .sum();
    Ok(log(clamp_nonnegative(entropy_term - cross, tol, "relative entropy")))
}
