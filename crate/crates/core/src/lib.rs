//! Skew-information resource measures on finite-dimensional quantum systems.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: dense complex matrices, Hermitian spectral calculus, Hilbert-Schmidt geometry.
//! - [`states`]: validated density matrices and seeded random generators.
//! - [`channels`]: Kraus channels, their adjoints, measurement branches and the pointer extension.
//! - [`divergence`]: skew information `I(ρ,K)`, `I(ρ,λ)`, the `g_p` family, the quasi-entropy
//!   `J_p(K,A,B)` (trace formulas plus an independent spectral evaluation) and `I_p`.
//! - [`resource`]: resource-destroying maps (dephasing, finite-group twirling), commutants and
//!   sampling of free operations.
//! - [`harness`]: seeded randomized suites for the monotonicity theorems and the search over
//!   `p ∈ (1,2]`.
//! - [`io`]: the JSON file formats for matrices, channels and group representations.

pub mod channels;
pub mod divergence;
pub mod error;
pub mod harness;
pub mod io;
pub mod numerics;
pub mod resource;
pub mod states;

pub use channels::{KrausChannel, MeasurementBranch};
pub use divergence::{Branch, MeasureValue, OrderParameter};
pub use error::{Error, Result};
pub use harness::{
    emit_report, run_suite, search_p_range, Property, ResourceChoice, SearchReport, SuiteConfig, TrialReport,
};
pub use numerics::{ComplexMatrix, HermitianEig, MatrixFn, TolerancePolicy};
pub use resource::{GroupRepresentation, ResourceLabel, ResourceSpec};
pub use states::{DensityMatrix, RngSeed};

pub use num_complex::Complex64;
