use num_complex::Complex64;
use skewinfo::channels::KrausChannel;
use skewinfo::divergence::{self, OrderParameter};
use skewinfo::harness::{self, ReportFormat};
use skewinfo::io::RepresentationFile;
use skewinfo::numerics::{self, pauli, ComplexMatrix, TolerancePolicy};
use skewinfo::states::DensityMatrix;
use skewinfo::{Error, Property, ResourceChoice, SuiteConfig, TrialReport};

fn config(property: Property, resource: ResourceChoice, dim: usize, trials: u64) -> SuiteConfig {
    SuiteConfig::new(property, resource, dim, trials, 2024)
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn margins_do_not_depend_on_thread_count() {
    let c = config(Property::StrongMonotonicity, ResourceChoice::TwirlCyclic(3), 3, 64)
        .with_p(Some(OrderParameter::new(0.7).unwrap()));
    let one = in_pool(1, || harness::run_suite(&c).unwrap());
    let many = in_pool(4, || harness::run_suite(&c).unwrap());
    assert_eq!(one.margins, many.margins);
    assert_eq!(one.worst_case, many.worst_case);
    assert_eq!(one.max_pointer_gap, many.max_pointer_gap);
}

#[test]
fn echoed_config_replays_the_report() {
    let c = config(Property::Convexity, ResourceChoice::Dephasing, 3, 40);
    let report = harness::run_suite(&c).unwrap();
    let mut json = Vec::new();
    harness::emit_report(&report, ReportFormat::Json, &mut json).unwrap();
    let parsed = TrialReport::from_json(std::str::from_utf8(&json).unwrap()).unwrap();
    assert_eq!(parsed.margins, report.margins);
    assert_eq!(parsed.min_margin, report.min_margin);
    assert_eq!(parsed.worst_case, report.worst_case);
    let replay = harness::run_suite(&parsed.config).unwrap();
    assert_eq!(replay.margins, report.margins);
}

#[test]
fn violation_count_agrees_with_min_margin() {
    for property in [
        Property::Monotonicity,
        Property::Nonnegativity,
        Property::KrausIndependence,
    ] {
        let report = harness::run_suite(&config(property, ResourceChoice::Dephasing, 2, 50)).unwrap();
        let atol = report.config.tolerance.assert_atol;
        assert_eq!(report.violations == 0, report.min_margin >= -atol);
        assert_eq!(report.trials_run, 50);
        assert_eq!(report.margins.len(), 50);
    }
}

#[test]
fn monotonicity_example_has_no_violations() {
    let report = harness::run_suite(&config(Property::Monotonicity, ResourceChoice::Dephasing, 3, 500)).unwrap();
    assert_eq!(report.violations, 0);
    assert!(report.passed());
    assert!(!report.exploratory);
}

#[test]
fn kraus_independence_example_is_tight() {
    let report = harness::run_suite(&config(
        Property::KrausIndependence,
        ResourceChoice::TwirlCyclic(3),
        3,
        500,
    ))
    .unwrap();
    assert!(report.min_margin >= -1e-10);
}

#[test]
fn lemma3_example_holds_with_non_commuting_channels() {
    for dim in 2..=4 {
        let report = harness::run_suite(&config(Property::Lemma3Identity, ResourceChoice::Dephasing, dim, 60)).unwrap();
        assert!(report.min_margin >= -1e-9);
        assert!(report.max_fixed_point_residual.unwrap() <= 1e-10);
    }
}

#[test]
fn worst_case_replays_its_margin() {
    let report = harness::run_suite(&config(Property::Monotonicity, ResourceChoice::TwirlCyclic(2), 3, 30)).unwrap();
    let worst = report.worst_case.as_ref().unwrap();
    let tol = TolerancePolicy::default();
    let rho = DensityMatrix::validate(worst.state.as_ref().unwrap().to_matrix().unwrap(), &tol).unwrap();
    let e = worst.free_operation.as_ref().unwrap().to_channel(&tol).unwrap();
    let lambda = worst.destroyer.as_ref().unwrap().to_channel(&tol).unwrap();
    let out = e.apply(&rho, &tol).unwrap();
    let margin = divergence::skew_info_channel(&rho, &lambda, &tol).unwrap()
        - divergence::skew_info_channel(&out, &lambda, &tol).unwrap();
    assert_eq!(report.margins[worst.trial as usize], worst.margin);
    assert!((margin - worst.margin).abs() < 1e-12);
    assert!(report.margins.iter().all(|m| *m >= worst.margin));
}

#[test]
fn exploratory_orders_are_flagged_but_run() {
    let c = config(Property::Monotonicity, ResourceChoice::Dephasing, 2, 20)
        .with_p(Some(OrderParameter::new(1.5).unwrap()));
    let report = harness::run_suite(&c).unwrap();
    assert!(report.exploratory);
    assert_eq!(report.trials_run, 20);
}

#[test]
fn nonnegativity_counts_negative_terms_only_for_orders() {
    let skew = harness::run_suite(&config(Property::Nonnegativity, ResourceChoice::Dephasing, 2, 10)).unwrap();
    assert_eq!(skew.negative_terms, None);
    let c = config(Property::Nonnegativity, ResourceChoice::Dephasing, 2, 10).with_p(Some(OrderParameter::HALF));
    assert!(harness::run_suite(&c).unwrap().negative_terms.is_some());
}

fn pauli_group() -> Vec<ComplexMatrix> {
    let phases = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ];
    let mut out = Vec::new();
    for base in [numerics::identity(2), pauli::x(), pauli::y(), pauli::z()] {
        for phase in phases {
            out.push(&base * phase);
        }
    }
    out
}

#[test]
fn irreducible_custom_group_is_reported_not_skipped() {
    let dir = tempfile_dir("irreducible");
    let path = dir.join("pauli.json");
    let rep = skewinfo::GroupRepresentation::new(pauli_group(), &TolerancePolicy::default()).unwrap();
    std::fs::write(&path, serde_json::to_string(&RepresentationFile::from(&rep)).unwrap()).unwrap();
    let c = config(Property::Monotonicity, ResourceChoice::Custom(path.clone()), 2, 5);
    assert!(matches!(harness::run_suite(&c), Err(Error::CommutantTooSmall(1))));
    // suites that need no free operation still run
    let c = config(Property::Nonnegativity, ResourceChoice::Custom(path), 2, 5);
    assert!(harness::run_suite(&c).unwrap().passed());
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn custom_group_dimension_must_match() {
    let dir = tempfile_dir("dims");
    let path = dir.join("z3.json");
    let rep = skewinfo::GroupRepresentation::cyclic_shift(3).unwrap();
    std::fs::write(&path, serde_json::to_string(&RepresentationFile::from(&rep)).unwrap()).unwrap();
    let c = config(Property::Monotonicity, ResourceChoice::Custom(path.clone()), 2, 5);
    assert!(matches!(harness::run_suite(&c), Err(Error::DimensionMismatch { .. })));
    let c = config(Property::Monotonicity, ResourceChoice::Custom(path), 3, 5);
    assert!(harness::run_suite(&c).unwrap().passed());
    std::fs::remove_dir_all(dir).ok();
}

fn tempfile_dir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("skewinfo-harness-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn search_example_has_one_entry_per_grid_point() {
    let grid: Vec<_> = [1.25, 1.5, 1.75, 2.0]
        .into_iter()
        .map(|p| OrderParameter::new(p).unwrap())
        .collect();
    let base = config(Property::Monotonicity, ResourceChoice::Dephasing, 2, 1000);
    let report = harness::search_p_range(&grid, &base).unwrap();
    assert_eq!(report.entries.len(), 4);
    assert_eq!(report.p_grid, vec![1.25, 1.5, 1.75, 2.0]);
    let again = harness::search_p_range(&grid, &base).unwrap();
    let margins = |r: &skewinfo::SearchReport| r.entries.iter().map(|e| e.min_margin.to_bits()).collect::<Vec<_>>();
    assert_eq!(margins(&report), margins(&again));

    let mut csv = Vec::new();
    harness::emit_report(&report, ReportFormat::Csv, &mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("p,min_margin,trials"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn search_json_round_trips() {
    let grid = harness::linear_grid(1.1, 2.0, 3).unwrap();
    let report = harness::search_p_range(
        &grid,
        &config(Property::Monotonicity, ResourceChoice::TwirlCyclic(2), 2, 50),
    )
    .unwrap();
    let mut json = Vec::new();
    harness::emit_report(&report, ReportFormat::Json, &mut json).unwrap();
    let parsed = skewinfo::SearchReport::from_json(std::str::from_utf8(&json).unwrap()).unwrap();
    assert_eq!(parsed, report);
}

#[test]
fn trial_csv_has_one_row_per_trial() {
    let report = harness::run_suite(&config(Property::Nonnegativity, ResourceChoice::Dephasing, 2, 7)).unwrap();
    let mut csv = Vec::new();
    harness::emit_report(&report, ReportFormat::Csv, &mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "trial,margin");
    assert_eq!(rows.len(), 8);
    let (idx, value) = rows[3].split_once(',').unwrap();
    assert_eq!(idx, "2");
    assert_eq!(value.parse::<f64>().unwrap(), report.margins[2]);
}

#[test]
fn generic_channels_do_violate_monotonicity() {
    // sanity check that the margin can go negative at all
    let tol = TolerancePolicy::default();
    let spec = skewinfo::resource::dephasing_map(2, &tol).unwrap();
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let h = ComplexMatrix::from_row_slice(2, 2, &[s, s, s, -s]);
    let e = KrausChannel::unitary(h, &tol).unwrap();
    let rho = DensityMatrix::basis(2, 0).unwrap();
    let out = e.apply(&rho, &tol).unwrap();
    let lambda = spec.destroyer();
    let margin = divergence::skew_info_channel(&rho, lambda, &tol).unwrap()
        - divergence::skew_info_channel(&out, lambda, &tol).unwrap();
    assert!((margin + 1.0).abs() < 1e-12);
}
