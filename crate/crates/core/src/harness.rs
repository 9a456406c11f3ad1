//! Seeded randomized verification of the monotonicity results, and the search over `p ∈ (1,2]`.
//!
//! Every trial is a pure function of `(config, trial index)`: its random draws come from the
//! substream `config.seed.substream(index)`. Trials run in parallel and are aggregated in index
//! order, so reports do not depend on the number of worker threads.
//!
//! Each trial yields a *margin*, the left side minus the right side of the inequality under
//! test. A violation is a margin below `-assert_atol`.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{self, KrausChannel};
use crate::divergence::{self, OrderParameter};
use crate::error::{Error, Result};
use crate::io::{self, ChannelFile, MatrixFile};
use crate::numerics::{self, ComplexMatrix, TolerancePolicy};
use crate::resource::{self, FreeOperationSampler, GroupRepresentation, ResourceSpec};
use crate::states::{self, DensityMatrix, RngSeed};

/// Largest total dimension (system times pointer) a suite may build.
pub const MAX_TOTAL_DIM: usize = 64;

/// Regularization used when re-verifying counterexample candidates.
pub const REVERIFY_REGULARIZATION: f64 = 1e-10;

/// Stage-one threshold for counterexample candidates, in units of `assert_atol`.
pub const CANDIDATE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    /// `M(ρ,λ) >= M(E(ρ),λ)`
    Monotonicity,
    /// `M(ρ,λ) >= Σ p_n M(ρ_n,λ)`
    StrongMonotonicity,
    /// `t M(ρ1,λ) + (1-t) M(ρ2,λ) >= M(tρ1 + (1-t)ρ2, λ)`
    Convexity,
    /// `M(ρ,λ)` unchanged under unitary remixing of `λ`'s Kraus operators
    KrausIndependence,
    /// the operator identity behind the commutation / fixed-point equivalence
    Lemma3Identity,
    /// `M(ρ,λ) >= 0`
    Nonnegativity,
    /// strong monotonicity of `I(ρ,H)` for Hermitian `H` under channels commuting with `H`
    HermitianStrongMonotonicity,
}

impl Property {
    pub const ALL: [Property; 7] = [
        Property::Monotonicity,
        Property::StrongMonotonicity,
        Property::Convexity,
        Property::KrausIndependence,
        Property::Lemma3Identity,
        Property::Nonnegativity,
        Property::HermitianStrongMonotonicity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Monotonicity => "monotonicity",
            Property::StrongMonotonicity => "strong-monotonicity",
            Property::Convexity => "convexity",
            Property::KrausIndependence => "kraus-independence",
            Property::Lemma3Identity => "lemma3-identity",
            Property::Nonnegativity => "nonnegativity",
            Property::HermitianStrongMonotonicity => "hermitian-strong-monotonicity",
        }
    }

    /// Suites whose inequality is a statement about the order `p`.
    fn is_p_theorem(self) -> bool {
        !matches!(self, Property::KrausIndependence | Property::Lemma3Identity)
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Property::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown property '{s}'")))
    }
}

/// Which resource-destroying map a suite uses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ResourceChoice {
    Dephasing,
    /// Twirling over `Z_n`: the shift representation when `n` equals the dimension, otherwise
    /// the diagonal phase representation.
    TwirlCyclic(usize),
    /// Twirling over a representation read from a file.
    Custom(PathBuf),
}

impl ResourceChoice {
    pub fn build(&self, dim: usize, tol: &TolerancePolicy) -> Result<ResourceSpec> {
        match self {
            ResourceChoice::Dephasing => resource::dephasing_map(dim, tol),
            ResourceChoice::TwirlCyclic(n) => {
                let rep = if *n == dim {
                    GroupRepresentation::cyclic_shift(*n)?
                } else {
                    GroupRepresentation::diagonal_phase(*n, dim)?
                };
                resource::twirling_map(&rep, tol)
            }
            ResourceChoice::Custom(path) => {
                let rep = io::load_representation(path, tol)?;
                if rep.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: rep.dim(),
                    });
                }
                resource::custom_twirl(&rep, tol)
            }
        }
    }
}

impl fmt::Display for ResourceChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResourceChoice::Dephasing => f.write_str("dephasing"),
            ResourceChoice::TwirlCyclic(n) => write!(f, "twirl-cyclic({n})"),
            ResourceChoice::Custom(path) => write!(f, "custom({})", path.display()),
        }
    }
}

impl FromStr for ResourceChoice {
    type Err = Error;

    /// Accepts `dephasing`, `twirl-cyclic(N)`, `twirl-cyclic:N` and `custom(PATH)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown resource '{s}'"));
        if s == "dephasing" {
            return Ok(ResourceChoice::Dephasing);
        }
        if let Some(rest) = s.strip_prefix("twirl-cyclic") {
            let n = rest
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .or_else(|| rest.strip_prefix(':'))
                .ok_or_else(bad)?;
            let n: usize = n.trim().parse().map_err(|_| bad())?;
            if n == 0 {
                return Err(bad());
            }
            return Ok(ResourceChoice::TwirlCyclic(n));
        }
        if let Some(path) = s.strip_prefix("custom(").and_then(|r| r.strip_suffix(')')) {
            return Ok(ResourceChoice::Custom(PathBuf::from(path)));
        }
        Err(bad())
    }
}

impl From<ResourceChoice> for String {
    fn from(r: ResourceChoice) -> String {
        r.to_string()
    }
}

impl TryFrom<String> for ResourceChoice {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Everything that determines a suite run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub property: Property,
    pub resource: ResourceChoice,
    pub dim: usize,
    pub trials: u64,
    /// `None` means the skew information `I(ρ,·)`; `Some(p)` means `I_p(ρ,·)`.
    pub p: Option<OrderParameter>,
    pub n_kraus_free: usize,
    pub seed: RngSeed,
    pub tolerance: TolerancePolicy,
    /// Regularization applied to singular states before evaluating `I_p`.
    pub regularization: f64,
}

impl SuiteConfig {
    pub fn new(property: Property, resource: ResourceChoice, dim: usize, trials: u64, seed: u64) -> Self {
        Self {
            property,
            resource,
            dim,
            trials,
            p: None,
            n_kraus_free: 2,
            seed: RngSeed::new(seed),
            tolerance: TolerancePolicy::default(),
            regularization: divergence::DEFAULT_REGULARIZATION,
        }
    }

    pub fn with_p(mut self, p: Option<OrderParameter>) -> Self {
        self.p = p;
        self
    }

    pub fn with_n_kraus(mut self, n: usize) -> Self {
        self.n_kraus_free = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.tolerance.check()?;
        if self.dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "dim must be at least 2, got {}",
                self.dim
            )));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.trials >= 1 << 32 {
            return Err(Error::InvalidParameter("trials must be below 2^32".into()));
        }
        if self.n_kraus_free == 0 {
            return Err(Error::InvalidParameter("n_kraus_free must be at least 1".into()));
        }
        if self.dim * self.n_kraus_free > MAX_TOTAL_DIM {
            return Err(Error::InvalidParameter(format!(
                "dim x n_kraus_free = {} exceeds the limit of {MAX_TOTAL_DIM}",
                self.dim * self.n_kraus_free
            )));
        }
        if !(self.regularization > 0.0 && self.regularization < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "regularization {} outside (0,1)",
                self.regularization
            )));
        }
        Ok(())
    }

    /// Whether `p` lies outside the range where the monotonicity theorem is known.
    pub fn is_exploratory(&self) -> bool {
        self.property.is_p_theorem() && self.p.is_some_and(|p| !p.is_proven_range())
    }
}

/// The quantity a suite evaluates: `I(ρ,·)` or `I_p(ρ,·)`.
#[derive(Debug, Clone, Copy)]
enum Measure {
    Skew,
    Quasi { p: OrderParameter, delta: f64 },
}

impl Measure {
    fn of(config: &SuiteConfig) -> Self {
        match config.p {
            None => Measure::Skew,
            Some(p) => Measure::Quasi {
                p,
                delta: config.regularization,
            },
        }
    }

    fn eval(&self, rho: &DensityMatrix, ops: &[ComplexMatrix], tol: &TolerancePolicy) -> Result<f64> {
        match *self {
            Measure::Skew => divergence::skew_info_ops(rho, ops, tol),
            Measure::Quasi { p, delta } => Ok(divergence::i_p_terms(rho, ops, p, delta, tol)?.iter().sum()),
        }
    }

    /// Evaluation on pointer-extended states, which are singular by construction. `I_p` uses
    /// the exact singular limit; regularizing instead shifts the support spectrum by `δ/D`,
    /// which costs about `δ·I_p/λ_min` on nearly pure states.
    fn eval_lifted(&self, rho: &DensityMatrix, ops: &[ComplexMatrix], tol: &TolerancePolicy) -> Result<f64> {
        match *self {
            Measure::Skew => divergence::skew_info_ops(rho, ops, tol),
            Measure::Quasi { p, .. } => Ok(divergence::i_p_support_terms(rho, ops, p, tol)?.iter().sum()),
        }
    }

    /// `Σ_n p_n M(ρ_n)` over non-null branches.
    fn branch_average(
        &self,
        branches: &[channels::MeasurementBranch],
        ops: &[ComplexMatrix],
        tol: &TolerancePolicy,
    ) -> Result<f64> {
        let mut total = 0.0;
        for b in branches {
            if let Some(state) = &b.state {
                total += b.probability * self.eval(state, ops, tol)?;
            }
        }
        Ok(total)
    }
}

/// Matrices behind a trial's margin.
#[derive(Debug, Clone, Default)]
struct Witness {
    state: Option<DensityMatrix>,
    state_b: Option<DensityMatrix>,
    weight: Option<f64>,
    free_operation: Option<KrausChannel>,
    destroyer: Option<KrausChannel>,
    operator: Option<ComplexMatrix>,
}

#[derive(Debug, Clone)]
struct TrialOutcome {
    margin: f64,
    pointer_gap: Option<f64>,
    fixed_point: Option<f64>,
    negative_terms: Option<u64>,
    witness: Witness,
}

impl TrialOutcome {
    fn new(margin: f64, witness: Witness) -> Self {
        Self {
            margin,
            pointer_gap: None,
            fixed_point: None,
            negative_terms: None,
            witness,
        }
    }
}

/// Serialized inputs of the trial with the smallest margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub trial: u64,
    pub margin: f64,
    pub state: Option<MatrixFile>,
    /// Second state of a convexity trial.
    pub state_b: Option<MatrixFile>,
    /// Mixing weight of a convexity trial.
    pub weight: Option<f64>,
    pub free_operation: Option<ChannelFile>,
    pub destroyer: Option<ChannelFile>,
    /// The single operator `K` (lemma3) or `H` (Hermitian suite).
    pub operator: Option<MatrixFile>,
}

impl WorstCase {
    fn from_outcome(trial: u64, outcome: &TrialOutcome) -> Self {
        let w = &outcome.witness;
        Self {
            trial,
            margin: outcome.margin,
            state: w.state.as_ref().map(|s| MatrixFile::from(s.matrix())),
            state_b: w.state_b.as_ref().map(|s| MatrixFile::from(s.matrix())),
            weight: w.weight,
            free_operation: w.free_operation.as_ref().map(ChannelFile::from),
            destroyer: w.destroyer.as_ref().map(ChannelFile::from),
            operator: w.operator.as_ref().map(MatrixFile::from),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub config: SuiteConfig,
    pub trials_run: u64,
    pub violations: u64,
    pub min_margin: f64,
    /// `p` outside the proven range; results are evidence, not checks.
    pub exploratory: bool,
    /// Largest `|direct - lifted|` between the strong-monotonicity margin and the monotonicity
    /// margin of the pointer-extended channel.
    pub max_pointer_gap: Option<f64>,
    /// Largest fixed-point / commutator residual over commutant-sampled lemma3 trials.
    pub max_fixed_point_residual: Option<f64>,
    /// Number of individual `I_p(ρ,K_i)` terms that came out negative (nonnegativity suite).
    pub negative_terms: Option<u64>,
    pub worst_case: Option<WorstCase>,
    pub margins: Vec<f64>,
    pub wall_time_secs: f64,
}

impl TrialReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Shared per-suite state: the resource map and the free-operation sampler.
struct Suite<'a> {
    config: &'a SuiteConfig,
    tol: TolerancePolicy,
    measure: Measure,
    spec: ResourceSpec,
    sampler: Option<FreeOperationSampler>,
}

impl<'a> Suite<'a> {
    fn new(config: &'a SuiteConfig) -> Result<Self> {
        config.validate()?;
        let tol = config.tolerance;
        let spec = config.resource.build(config.dim, &tol)?;
        let needs_sampler = matches!(
            config.property,
            Property::Monotonicity | Property::StrongMonotonicity | Property::Lemma3Identity
        );
        let sampler = if needs_sampler {
            Some(FreeOperationSampler::for_resource(&spec, &tol)?)
        } else {
            None
        };
        Ok(Self {
            config,
            tol,
            measure: Measure::of(config),
            spec,
            sampler,
        })
    }

    fn lambda(&self) -> &KrausChannel {
        self.spec.destroyer()
    }

    fn sample_free<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<KrausChannel> {
        self.sampler
            .as_ref()
            .expect("sampler built for this property")
            .sample(self.config.n_kraus_free, rng, &self.tol)
    }

    fn random_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DensityMatrix> {
        states::random_density(self.config.dim, self.config.dim, rng)
    }

    fn run_trial(&self, index: u64) -> Result<TrialOutcome> {
        let mut rng = self.config.seed.substream(index).rng();
        let rng = &mut rng;
        match self.config.property {
            Property::Monotonicity => self.monotonicity(rng),
            Property::StrongMonotonicity => self.strong_monotonicity(rng),
            Property::Convexity => self.convexity(rng),
            Property::KrausIndependence => self.kraus_independence(rng),
            Property::Lemma3Identity => self.lemma3(rng, index),
            Property::Nonnegativity => self.nonnegativity(rng),
            Property::HermitianStrongMonotonicity => self.hermitian_strong(rng),
        }
    }

    fn monotonicity<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TrialOutcome> {
        let rho = self.random_state(rng)?;
        let e = self.sample_free(rng)?;
        let out = e.apply(&rho, &self.tol)?;
        let ops = self.lambda().kraus();
        let margin = self.measure.eval(&rho, ops, &self.tol)? - self.measure.eval(&out, ops, &self.tol)?;
        Ok(TrialOutcome::new(
            margin,
            Witness {
                state: Some(rho),
                free_operation: Some(e),
                destroyer: Some(self.lambda().clone()),
                ..Witness::default()
            },
        ))
    }

    /// Direct strong-monotonicity margin and the monotonicity margin of the pointer-extended
    /// channel on `ρ ⊗ |0⟩⟨0|` with operators `K ⊗ I`. The two agree in exact arithmetic; the
    /// trial margin is the smaller one.
    fn strong_margins(&self, rho: &DensityMatrix, e: &KrausChannel, ops: &[ComplexMatrix]) -> Result<(f64, f64)> {
        let tol = &self.tol;
        let branches = e.measurement_branches(rho, tol)?;
        let before = self.measure.eval(rho, ops, tol)?;
        let direct = before - self.measure.branch_average(&branches, ops, tol)?;

        let n = e.len();
        let lifted_ops = ops
            .iter()
            .map(|k| channels::tensor_with_identity(k, n))
            .collect::<Result<Vec<_>>>()?;
        let extended = e.extend_with_pointer();
        let input = channels::attach_pointer(rho, n)?;
        let output = extended.apply(&input, tol)?;
        let lifted = self.measure.eval_lifted(&input, &lifted_ops, tol)?
            - self.measure.eval_lifted(&output, &lifted_ops, tol)?;
        Ok((direct, lifted))
    }

    fn strong_monotonicity<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TrialOutcome> {
        let rho = self.random_state(rng)?;
        let e = self.sample_free(rng)?;
        let (direct, lifted) = self.strong_margins(&rho, &e, self.lambda().kraus())?;
        let mut outcome = TrialOutcome::new(
            direct.min(lifted),
            Witness {
                state: Some(rho),
                free_operation: Some(e),
                destroyer: Some(self.lambda().clone()),
                ..Witness::default()
            },
        );
        outcome.pointer_gap = Some((direct - lifted).abs());
        Ok(outcome)
    }

    fn hermitian_strong<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TrialOutcome> {
        let dim = self.config.dim;
        let h = random_hermitian_with_degeneracy(dim, rng);
        let sampler = FreeOperationSampler::new(std::slice::from_ref(&h), &self.tol)?;
        let e = sampler.sample(self.config.n_kraus_free, rng, &self.tol)?;
        let rho = self.random_state(rng)?;
        let (direct, lifted) = self.strong_margins(&rho, &e, std::slice::from_ref(&h))?;
        let mut outcome = TrialOutcome::new(
            direct.min(lifted),
            Witness {
                state: Some(rho),
                free_operation: Some(e),
                operator: Some(h),
                ..Witness::default()
            },
        );
        outcome.pointer_gap = Some((direct - lifted).abs());
        Ok(outcome)
    }

    fn convexity<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TrialOutcome> {
        let rho1 = self.random_state(rng)?;
        let rho2 = self.random_state(rng)?;
        let t: f64 = rng.random();
        let mixed = rho1.mix(&rho2, t)?;
        let ops = self.lambda().kraus();
        let tol = &self.tol;
        let chord = t * self.measure.eval(&rho1, ops, tol)? + (1.0 - t) * self.measure.eval(&rho2, ops, tol)?;
        let margin = chord - self.measure.eval(&mixed, ops, tol)?;
        Ok(TrialOutcome::new(
            margin,
            Witness {
                state: Some(rho1),
                state_b: Some(rho2),
                weight: Some(t),
                destroyer: Some(self.lambda().clone()),
                ..Witness::default()
            },
        ))
    }

    fn kraus_independence<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TrialOutcome> {
        let rho = self.random_state(rng)?;
        let u = states::random_unitary(self.lambda().len(), rng);
        let remixed = self.lambda().remix_kraus(&u, &self.tol)?;
        let original = self.measure.eval(&rho, self.lambda().kraus(), &self.tol)?;
        let other = self.measure.eval(&rho, remixed.kraus(), &self.tol)?;
        Ok(TrialOutcome::new(
            -(original - other).abs(),
            Witness {
                state: Some(rho),
                destroyer: Some(remixed),
                ..Witness::default()
            },
        ))
    }

    /// Even trials: generic channel and operator. Odd trials: commutant-sampled channel and a
    /// Kraus operator of `λ`, where the fixed-point residuals must also vanish.
    fn lemma3<R: Rng + ?Sized>(&self, rng: &mut R, index: u64) -> Result<TrialOutcome> {
        let dim = self.config.dim;
        let free = index % 2 == 1;
        let (e, k) = if free {
            let e = self.sample_free(rng)?;
            let which = rng.random_range(0..self.lambda().len());
            (e, self.lambda().kraus()[which].clone())
        } else {
            let e = KrausChannel::random(dim, self.config.n_kraus_free, rng, &self.tol)?;
            (e, states::ginibre(dim, dim, rng))
        };
        let report = resource::check_lemma3(&e, &k)?;
        let mut outcome = TrialOutcome::new(
            -report.identity,
            Witness {
                free_operation: Some(e),
                operator: Some(k),
                ..Witness::default()
            },
        );
        if free {
            outcome.fixed_point = Some(report.max_fixed_point().max(report.commutator));
        }
        Ok(outcome)
    }

    fn nonnegativity<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TrialOutcome> {
        let rho = self.random_state(rng)?;
        let ops = self.lambda().kraus();
        let (margin, negative) = match self.measure {
            Measure::Skew => (divergence::skew_info_ops(&rho, ops, &self.tol)?, None),
            Measure::Quasi { p, delta } => {
                let terms = divergence::i_p_terms(&rho, ops, p, delta, &self.tol)?;
                let negative = terms.iter().filter(|t| **t < 0.0).count() as u64;
                (terms.iter().sum(), Some(negative))
            }
        };
        let mut outcome = TrialOutcome::new(
            margin,
            Witness {
                state: Some(rho),
                destroyer: Some(self.lambda().clone()),
                ..Witness::default()
            },
        );
        outcome.negative_terms = negative;
        Ok(outcome)
    }

    fn run_all(&self) -> Result<Vec<TrialOutcome>> {
        (0..self.config.trials)
            .into_par_iter()
            .map(|t| self.run_trial(t))
            .collect()
    }
}

/// Random Hermitian matrix; half the draws get a degenerate spectrum so that the commutant
/// is non-abelian.
fn random_hermitian_with_degeneracy<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let degenerate: bool = rng.random();
    if !degenerate {
        return states::random_hermitian(dim, rng);
    }
    let levels = dim.div_ceil(2);
    let values: Vec<f64> = (0..levels).map(|_| rng.random_range(-2.0..2.0)).collect();
    let spectrum: Vec<f64> = (0..dim).map(|_| values[rng.random_range(0..levels)]).collect();
    let v = states::random_unitary(dim, rng);
    &v * numerics::real_diag(&spectrum) * v.adjoint()
}

/// Smallest margin, taking the smallest trial index among ties.
fn worst_index(outcomes: &[TrialOutcome]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, o) in outcomes.iter().enumerate() {
        match best {
            Some(b) if outcomes[b].margin <= o.margin => {}
            _ => best = Some(i),
        }
    }
    best
}

fn max_option(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    values.flatten().reduce(f64::max)
}

fn aggregate(config: &SuiteConfig, outcomes: Vec<TrialOutcome>, started: Instant) -> TrialReport {
    let atol = config.tolerance.assert_atol;
    let margins: Vec<f64> = outcomes.iter().map(|o| o.margin).collect();
    let violations = margins.iter().filter(|m| **m < -atol).count() as u64;
    let worst = worst_index(&outcomes);
    let negative_terms = outcomes.iter().filter_map(|o| o.negative_terms).reduce(|a, b| a + b);
    TrialReport {
        config: config.clone(),
        trials_run: outcomes.len() as u64,
        violations,
        min_margin: worst.map_or(f64::INFINITY, |i| margins[i]),
        exploratory: config.is_exploratory(),
        max_pointer_gap: max_option(outcomes.iter().map(|o| o.pointer_gap)),
        max_fixed_point_residual: max_option(outcomes.iter().map(|o| o.fixed_point)),
        negative_terms,
        worst_case: worst.map(|i| WorstCase::from_outcome(i as u64, &outcomes[i])),
        margins,
        wall_time_secs: started.elapsed().as_secs_f64(),
    }
}

/// Run one randomized suite.
pub fn run_suite(config: &SuiteConfig) -> Result<TrialReport> {
    let started = Instant::now();
    let suite = Suite::new(config)?;
    if config.is_exploratory() {
        log::warn!(
            "p = {} lies outside (0,1); {} results are exploratory",
            config.p.map_or(0.5, |p| p.value()),
            config.property
        );
    }
    let outcomes = suite.run_all()?;
    Ok(aggregate(config, outcomes, started))
}

/// A confirmed counterexample to monotonicity of `I_p` at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub trial: u64,
    pub margin: f64,
    /// Margin recomputed through the spectral route with [`REVERIFY_REGULARIZATION`].
    pub reverified_margin: f64,
    pub state: MatrixFile,
    pub free_operation: ChannelFile,
    pub destroyer: ChannelFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchEntry {
    pub p: f64,
    pub trials: u64,
    pub violations: u64,
    pub min_margin: f64,
    pub worst_trial: u64,
    pub candidate: Option<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub base: SuiteConfig,
    pub p_grid: Vec<f64>,
    pub entries: Vec<SearchEntry>,
    /// Candidates that survived both stages.
    pub confirmed_candidates: u64,
    /// Stage-one candidates that did not survive re-verification.
    pub rejected_candidates: u64,
    pub wall_time_secs: f64,
}

impl SearchReport {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// `n` evenly spaced orders from `p_min` to `p_max` inclusive.
pub fn linear_grid(p_min: f64, p_max: f64, n: usize) -> Result<Vec<OrderParameter>> {
    if n == 0 {
        return Err(Error::InvalidParameter("grid needs at least one point".into()));
    }
    if n == 1 {
        return Ok(vec![OrderParameter::new(p_min)?]);
    }
    let step = (p_max - p_min) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            let p = if i == n - 1 { p_max } else { p_min + step * i as f64 };
            OrderParameter::new(p)
        })
        .collect()
}

/// Stage-two monotonicity margin `I_p(ρ,λ) - I_p(E(ρ),λ)` through the spectral evaluation.
fn reverified_margin(
    rho: &DensityMatrix,
    e: &KrausChannel,
    lambda: &KrausChannel,
    p: OrderParameter,
    tol: &TolerancePolicy,
) -> Result<f64> {
    let out = e.apply(rho, tol)?;
    Ok(
        divergence::i_p_channel_spectral(rho, lambda, p, REVERIFY_REGULARIZATION, tol)?
            - divergence::i_p_channel_spectral(&out, lambda, p, REVERIFY_REGULARIZATION, tol)?,
    )
}

/// Monotonicity of `I_p` under free operations for every `p` in `grid ⊂ (1,2]`.
///
/// The worst trial at each grid point becomes a candidate when its margin is below
/// `-CANDIDATE_FACTOR·assert_atol`. A candidate is kept only if the margin recomputed through
/// the spectral evaluation, with regularization [`REVERIFY_REGULARIZATION`], is also below that
/// threshold.
pub fn search_p_range(grid: &[OrderParameter], base: &SuiteConfig) -> Result<SearchReport> {
    let started = Instant::now();
    if grid.is_empty() {
        return Err(Error::EmptyInput("p grid"));
    }
    if let Some(bad) = grid.iter().find(|p| p.value() <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "search grid point {} outside (1,2]",
            bad.value()
        )));
    }
    let tol = base.tolerance;
    let threshold = -CANDIDATE_FACTOR * tol.assert_atol;
    let mut entries = Vec::with_capacity(grid.len());
    let mut rejected = 0;
    for &p in grid {
        let mut config = base.clone();
        config.property = Property::Monotonicity;
        config.p = Some(p);
        let suite = Suite::new(&config)?;
        let outcomes = suite.run_all()?;
        let worst = worst_index(&outcomes).expect("at least one trial");
        let min_margin = outcomes[worst].margin;
        let violations = outcomes.iter().filter(|o| o.margin < -tol.assert_atol).count() as u64;
        let mut candidate = None;
        if min_margin < threshold {
            let w = &outcomes[worst].witness;
            let rho = w.state.as_ref().expect("monotonicity witness has a state");
            let e = w.free_operation.as_ref().expect("monotonicity witness has a channel");
            let lambda = suite.lambda();
            let reverified = reverified_margin(rho, e, lambda, p, &tol)?;
            if reverified < threshold {
                log::warn!("p = {}: confirmed counterexample, margin {reverified:e}", p.value());
                candidate = Some(Candidate {
                    trial: worst as u64,
                    margin: min_margin,
                    reverified_margin: reverified,
                    state: MatrixFile::from(rho.matrix()),
                    free_operation: ChannelFile::from(e),
                    destroyer: ChannelFile::from(lambda),
                });
            } else {
                log::info!(
                    "p = {}: candidate rejected on re-verification ({reverified:e})",
                    p.value()
                );
                rejected += 1;
            }
        }
        entries.push(SearchEntry {
            p: p.value(),
            trials: config.trials,
            violations,
            min_margin,
            worst_trial: worst as u64,
            candidate,
        });
    }
    Ok(SearchReport {
        base: base.clone(),
        p_grid: grid.iter().map(|p| p.value()).collect(),
        confirmed_candidates: entries.iter().filter(|e| e.candidate.is_some()).count() as u64,
        entries,
        rejected_candidates: rejected,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidParameter(format!("unknown format '{other}'"))),
        }
    }
}

/// A report that can be written as JSON or as CSV rows.
pub trait Report: Serialize {
    fn write_csv(&self, w: &mut dyn Write) -> std::io::Result<()>;
}

impl Report for TrialReport {
    fn write_csv(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "trial,margin")?;
        for (i, m) in self.margins.iter().enumerate() {
            writeln!(w, "{i},{}", io::format_f64(*m))?;
        }
        Ok(())
    }
}

impl Report for SearchReport {
    fn write_csv(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "p,min_margin,trials")?;
        for e in &self.entries {
            writeln!(
                w,
                "{},{},{}",
                io::format_f64(e.p),
                io::format_f64(e.min_margin),
                e.trials
            )?;
        }
        Ok(())
    }
}

/// Write `report` in `format`; floats carry 17 significant digits.
pub fn emit_report<R: Report, W: Write>(report: &R, format: ReportFormat, mut writer: W) -> Result<()> {
    match format {
        ReportFormat::Json => {
            io::to_json_full_precision(report, &mut writer)?;
            writeln!(writer)?;
        }
        ReportFormat::Csv => report.write_csv(&mut writer)?,
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn property_names_round_trip() {
        for p in Property::ALL {
            assert_eq!(p.name().parse::<Property>().unwrap(), p);
            let json = serde_json::to_string(&p).unwrap();
            assert_eq!(json, format!("\"{}\"", p.name()));
        }
        assert!("monotone".parse::<Property>().is_err());
    }

    #[test]
    fn resource_choice_parsing() {
        assert_eq!(
            "dephasing".parse::<ResourceChoice>().unwrap(),
            ResourceChoice::Dephasing
        );
        assert_eq!(
            "twirl-cyclic(3)".parse::<ResourceChoice>().unwrap(),
            ResourceChoice::TwirlCyclic(3)
        );
        assert_eq!(
            "twirl-cyclic:2".parse::<ResourceChoice>().unwrap(),
            ResourceChoice::TwirlCyclic(2)
        );
        assert_eq!(
            "custom(/tmp/rep.json)".parse::<ResourceChoice>().unwrap(),
            ResourceChoice::Custom("/tmp/rep.json".into())
        );
        for bad in ["twirl-cyclic", "twirl-cyclic(0)", "twirl-cyclic(x)", "haar", "custom"] {
            assert!(bad.parse::<ResourceChoice>().is_err(), "{bad}");
        }
        let r = ResourceChoice::TwirlCyclic(4);
        assert_eq!(r.to_string().parse::<ResourceChoice>().unwrap(), r);
    }

    #[test]
    fn config_guards() {
        let ok = SuiteConfig::new(Property::Monotonicity, ResourceChoice::Dephasing, 3, 10, 1);
        assert!(ok.validate().is_ok());
        let mut c = ok.clone();
        c.dim = 1;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.trials = 0;
        assert!(c.validate().is_err());
        let c = ok.clone().with_n_kraus(22);
        assert!(c.validate().is_err());
        let c = SuiteConfig::new(Property::Monotonicity, ResourceChoice::Dephasing, 8, 1, 1).with_n_kraus(8);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn exploratory_flag() {
        let base = SuiteConfig::new(Property::Monotonicity, ResourceChoice::Dephasing, 2, 1, 1);
        assert!(!base.is_exploratory());
        assert!(!base
            .clone()
            .with_p(Some(OrderParameter::new(0.7).unwrap()))
            .is_exploratory());
        assert!(base
            .clone()
            .with_p(Some(OrderParameter::new(1.5).unwrap()))
            .is_exploratory());
        let mut k = base.with_p(Some(OrderParameter::new(1.5).unwrap()));
        k.property = Property::KrausIndependence;
        assert!(!k.is_exploratory());
    }

    #[test]
    fn twirl_cyclic_picks_representation() {
        let tol = TolerancePolicy::default();
        let shift = ResourceChoice::TwirlCyclic(3).build(3, &tol).unwrap();
        assert_eq!(shift.destroyer().len(), 3);
        // shift rep has a circulant commutant of dimension 3
        let sampler = FreeOperationSampler::for_resource(&shift, &tol).unwrap();
        assert_eq!(sampler.commutant_dim(), 3);
        let phase = ResourceChoice::TwirlCyclic(2).build(3, &tol).unwrap();
        let sampler = FreeOperationSampler::for_resource(&phase, &tol).unwrap();
        assert_eq!(sampler.commutant_dim(), 5);
    }

    #[test]
    fn linear_grid_endpoints() {
        let g = linear_grid(1.05, 2.0, 8).unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g[0].value(), 1.05);
        assert_eq!(g[7].value(), 2.0);
        assert!(linear_grid(1.5, 2.0, 0).is_err());
        assert_eq!(linear_grid(1.5, 2.0, 1).unwrap()[0].value(), 1.5);
    }

    #[test]
    fn worst_index_prefers_lowest_trial_on_ties() {
        let mk = |m| TrialOutcome::new(m, Witness::default());
        let outcomes = vec![mk(0.3), mk(-0.1), mk(0.2), mk(-0.1)];
        assert_eq!(worst_index(&outcomes), Some(1));
        assert_eq!(worst_index(&[]), None);
    }

    #[test]
    fn search_rejects_points_outside_range() {
        let base = SuiteConfig::new(Property::Monotonicity, ResourceChoice::Dephasing, 2, 5, 1);
        let grid = vec![OrderParameter::new(0.5).unwrap()];
        assert!(matches!(search_p_range(&grid, &base), Err(Error::InvalidParameter(_))));
        let one = vec![OrderParameter::new(1.0).unwrap()];
        assert!(search_p_range(&one, &base).is_err());
        assert!(search_p_range(&[], &base).is_err());
    }

    #[test]
    fn reverification_sees_violations_by_non_free_channels() {
        let tol = TolerancePolicy::default();
        let lambda = resource::dephasing_map(2, &tol).unwrap();
        let s = numerics::ONE.scale(std::f64::consts::FRAC_1_SQRT_2);
        let hadamard = ComplexMatrix::from_row_slice(2, 2, &[s, s, s, -s]);
        let e = KrausChannel::unitary(hadamard, &tol).unwrap();
        let rho = DensityMatrix::validate(numerics::real_diag(&[0.9, 0.1]), &tol).unwrap();
        let p = OrderParameter::new(1.5).unwrap();
        let margin = reverified_margin(&rho, &e, lambda.destroyer(), p, &tol).unwrap();
        let out = e.apply(&rho, &tol).unwrap();
        let direct = divergence::i_p_channel(&rho, lambda.destroyer(), p, &tol).unwrap()
            - divergence::i_p_channel(&out, lambda.destroyer(), p, &tol).unwrap();
        assert!(margin < -0.1);
        assert!((margin - direct).abs() < 1e-9);
    }

    #[test]
    fn empty_report_json_shows_zero_violations() {
        let config = SuiteConfig::new(Property::Nonnegativity, ResourceChoice::Dephasing, 2, 1, 0);
        let report = TrialReport {
            config,
            trials_run: 0,
            violations: 0,
            min_margin: 0.0,
            exploratory: false,
            max_pointer_gap: None,
            max_fixed_point_residual: None,
            negative_terms: None,
            worst_case: None,
            margins: vec![],
            wall_time_secs: 0.0,
        };
        let mut out = Vec::new();
        emit_report(&report, ReportFormat::Json, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("\"violations\": 0"));
        assert_eq!(TrialReport::from_json(&text).unwrap(), report);
    }
}
