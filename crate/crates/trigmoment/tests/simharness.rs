use trigmoment::families::{EstimatorKind, FamilyId::*};
use trigmoment::simharness::{
    level_study, parse_config, power_snapshot, report_csv, Cell, StudyConfig, StudyReport, MIN_REPS,
};
use trigmoment::Error;

const ML: EstimatorKind = EstimatorKind::Ml;
const MM: EstimatorKind = EstimatorKind::Mm;

fn config(cells: Vec<Cell>, alternatives: Vec<Cell>, n_grid: Vec<usize>, reps: usize) -> StudyConfig {
    StudyConfig { cells, alternatives, n_grid, reps, alpha_level: 0.05, seed: 20240611 }
}

fn laplace_alternatives() -> Vec<Cell> {
    let alt = |data_family, data_theta: Vec<f64>| Cell {
        family: Laplace,
        estimator: MM,
        known: Vec::new(),
        data_family,
        data_theta,
    };
    vec![alt(Normal, vec![0.0, 1.0]), alt(StudentT, vec![5.0, 0.0, 1.0]), alt(Logistic, vec![0.0, 1.0])]
}

#[test]
fn level_is_calibrated_for_a_fully_specified_null() {
    // With every parameter known the PIT values are exactly uniform, so the
    // rejection count is Binomial(reps, α) up to the χ² approximation.
    let mut cell = Cell::null(Uniform, ML, vec![0.0, 1.0]);
    cell.known = vec![("a".into(), 0.0), ("b".into(), 1.0)];
    let report = level_study(&config(vec![cell], vec![], vec![200], 20000)).unwrap();
    let row = &report.rows[0];
    assert_eq!(row.reps, 20000);
    assert_eq!(row.failed, 0);
    assert!(!row.flagged);
    let se = (0.05f64 * 0.95 / 20000.0).sqrt();
    assert!((row.rate - 0.05).abs() < 4.0 * se, "rate {}", row.rate);
    assert!((row.std_error - (row.rate * (1.0 - row.rate) / 20000.0).sqrt()).abs() < 1e-15);
}

#[test]
fn level_study_with_estimated_parameters() {
    let cells = vec![Cell::null(Normal, ML, vec![3.0, 2.0]), Cell::null(Laplace, MM, vec![0.0, 1.0])];
    let report = level_study(&config(cells, vec![], vec![300], 4000)).unwrap();
    assert_eq!(report.rows.len(), 2);
    for row in &report.rows {
        let se = (0.05f64 * 0.95 / 4000.0).sqrt();
        assert!((row.rate - 0.05).abs() < 5.0 * se, "{}: rate {}", row.cell, row.rate);
        assert_eq!(row.failed, 0, "{}", row.cell);
    }
}

#[test]
fn reports_are_deterministic_and_thread_invariant() {
    let cfg = config(vec![Cell::null(Logistic, ML, vec![0.0, 1.0])], laplace_alternatives(), vec![40, 80], 300);
    let run = |threads: usize| -> (StudyReport, StudyReport) {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| (level_study(&cfg).unwrap(), power_snapshot(&cfg).unwrap()))
    };
    let (l1, p1) = run(1);
    let (l4, p4) = run(4);
    let (l4b, p4b) = run(4);
    assert_eq!(l1.rows, l4.rows);
    assert_eq!(p1.rows, p4.rows);
    assert_eq!(l4.rows, l4b.rows);
    assert_eq!(p4.rows, p4b.rows);
    assert_eq!(report_csv(&l1), report_csv(&l4));
}

#[test]
fn seeds_change_the_draws() {
    let mut cfg = config(vec![Cell::null(Normal, ML, vec![0.0, 1.0])], vec![], vec![50], 2000);
    let a = level_study(&cfg).unwrap();
    cfg.seed += 1;
    let b = level_study(&cfg).unwrap();
    assert_ne!(a.rows[0].rejections, b.rows[0].rejections);
}

#[test]
fn laplace_mm_power_snapshot() {
    let cfg = config(vec![], laplace_alternatives(), vec![20, 50, 100], 1000);
    let report = power_snapshot(&cfg).unwrap();
    assert_eq!(report.rows.len(), 9);
    for chunk in report.rows.chunks(3) {
        let rates: Vec<f64> = chunk.iter().map(|r| r.rate).collect();
        assert!(chunk.iter().all(|r| !r.flagged && r.error.is_none()), "{chunk:?}");
        // Power grows with n and rises above the level.
        assert!(rates[0] < rates[2], "{}: {rates:?}", chunk[0].cell);
        assert!(rates[2] > 0.05 + 5.0 * chunk[2].std_error.max(0.007), "{}: {rates:?}", chunk[0].cell);
    }
    // The normal is the farthest of the three from the Laplace.
    let normal = report.rows[2].rate;
    let logistic = report.rows[8].rate;
    assert!(normal > logistic, "normal {normal} vs logistic {logistic}");
    assert!(normal > 0.5, "normal {normal}");
}

#[test]
fn failing_cells_are_isolated() {
    let bad_estimator = Cell::null(Gumbel, MM, vec![0.0, 1.0]);
    let mut bad_binding = Cell::null(Normal, ML, vec![0.0, 1.0]);
    bad_binding.known = vec![("lambda".into(), 1.0)];
    let bad_theta = Cell::null(Normal, ML, vec![0.0, -1.0]);
    let good = Cell::null(Normal, ML, vec![0.0, 1.0]);
    let cfg = config(vec![bad_estimator, bad_binding, bad_theta, good.clone()], vec![], vec![30], 200);
    let report = level_study(&cfg).unwrap();
    for row in &report.rows[..3] {
        assert!(row.flagged && row.error.is_some() && row.reps == 0, "{row:?}");
    }
    let alone = level_study(&config(vec![good], vec![], vec![30], 200)).unwrap();
    assert!(!report.rows[3].flagged);
    // The good cell keeps its own substream, so only its key index differs.
    assert_eq!(report.rows[3].reps, alone.rows[0].reps);
}

#[test]
fn fits_that_fail_are_counted() {
    // Tiny Cauchy samples make some Student-t fits fail.
    let cfg = config(vec![Cell::null(StudentT, ML, vec![1.0, 0.0, 1.0])], vec![], vec![4], 400);
    let row = &level_study(&cfg).unwrap().rows[0];
    assert_eq!(row.reps + row.failed, 400);
    assert_eq!(row.flagged, row.failed as f64 > 4.0);
}

#[test]
fn configuration_errors() {
    let cell = || vec![Cell::null(Normal, ML, vec![0.0, 1.0])];
    let err = |cfg: StudyConfig| matches!(level_study(&cfg), Err(Error::Config(_)));
    assert!(err(config(cell(), vec![], vec![50], MIN_REPS - 1)));
    assert!(err(config(cell(), vec![], vec![], 200)));
    assert!(err(config(cell(), vec![], vec![1], 200)));
    assert!(err(config(vec![], vec![], vec![50], 200)));
    let mut cfg = config(cell(), vec![], vec![50], 200);
    cfg.alpha_level = 1.0;
    assert!(err(cfg));
    assert!(matches!(power_snapshot(&config(cell(), vec![], vec![50], 200)), Err(Error::Config(_))));
}

#[test]
fn config_file_round_trip() {
    let text = "\
# level and power study
seed = 7
reps = 500
alpha = 0.1
n = 50, 100

[cell]
family = normal
theta = 0, 1

[cell]
family = laplace
estimator = mm
theta = 0, 2
known = mu=0

[alternative]
family = laplace
estimator = mm
data_family = student-t
data_theta = 5, 0, 1
";
    let cfg = parse_config(text).unwrap();
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.reps, 500);
    assert_eq!(cfg.alpha_level, 0.1);
    assert_eq!(cfg.n_grid, vec![50, 100]);
    assert_eq!(cfg.cells.len(), 2);
    assert_eq!(cfg.cells[0], Cell::null(Normal, ML, vec![0.0, 1.0]));
    assert_eq!(cfg.cells[1].known, vec![("mu".to_string(), 0.0)]);
    assert_eq!(cfg.cells[1].estimator, MM);
    assert_eq!(cfg.alternatives[0].data_family, StudentT);
    assert_eq!(cfg.alternatives[0].data_theta, vec![5.0, 0.0, 1.0]);
    assert_eq!(cfg.alternatives[0].label(), "laplace[mm]<-student-t");

    for bad in [
        "reps = 500\nn = 50\nbogus = 1\n",
        "reps = 500\nn = 50\n[cell]\nfamily = nope\ntheta = 1\n",
        "reps = 500\nn = 50\n[cell]\nfamily = normal\n",
        "reps = 500\nn = 50\n[alternative]\nfamily = normal\ndata_theta = 1\n",
        "reps = 500\nn = 50\n[section]\n",
        "reps = lots\nn = 50\n",
        "reps = 50\nn = 50\n[cell]\nfamily = normal\ntheta = 0, 1\n",
        "reps = 500\nn = 50\n[cell]\nfamily = normal\nestimator = bayes\ntheta = 0, 1\n",
        "reps = 500\nn = 50\nno equals sign\n",
    ] {
        assert!(matches!(parse_config(bad), Err(Error::Config(_))), "{bad}");
    }
}

#[test]
fn csv_and_json_outputs() {
    let cfg = config(vec![Cell::null(Normal, ML, vec![0.0, 1.0])], vec![], vec![30, 60], 200);
    let report = level_study(&cfg).unwrap();
    let csv = report_csv(&report);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("cell,family,estimator,data_family,n,reps,rejections,rate"));
    assert!(lines[1].starts_with("normal[ml],normal,ml,normal,30,200,"));
    for l in &lines {
        assert_eq!(l.split(',').count(), 12);
    }
    let json = serde_json::to_string(&report).unwrap();
    let back: StudyReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
}
