use std::fs;

use smoothsearch::algorithms::AlgorithmKind;
use smoothsearch::harness::report::{FIG4_HEADER, TABLE1_HEADER, TRACE_HEADER};
use smoothsearch::harness::{example2, ode_check, run_experiment, table1, with_threads, ExperimentConfig};
use smoothsearch::Error;

fn cfg(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(text).unwrap()
}

const SMALL_RUN: &str = r#"
[problem]
lambda = [1.0]
num_states = 11
[algorithm]
names = ["AS", "RS", "UCB"]
alpha = 0.2
[report]
horizon = 200
replications = 8
checkpoints = [10, 100, 200]
seed = 4
"#;

#[test]
fn smoke_run_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg("[algorithm]\nnames = [\"AS\"]\n[report]\nhorizon = 1\nreplications = 1");
    let report = run_experiment(&c, dir.path()).unwrap();
    let mut rdr = csv::Reader::from_path(dir.path().join("trace.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), TRACE_HEADER);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "1");
    assert_eq!(report.checkpoints.len(), 1);
}

#[test]
fn trace_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg(SMALL_RUN), dir.path()).unwrap();
    let mut rdr = csv::Reader::from_path(dir.path().join("trace_as.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), TRACE_HEADER);
    let mut n = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let iteration: u64 = rec[0].parse().unwrap();
        let rep: usize = rec[1].parse().unwrap();
        let theta: usize = rec[2].parse().unwrap();
        let sampled: usize = rec[3].parse().unwrap();
        let estimate: usize = rec[4].parse().unwrap();
        let regret: f64 = rec[5].parse().unwrap();
        let eff: f64 = rec[6].parse().unwrap();
        assert!([10, 100, 200].contains(&iteration));
        assert!(rep < 8 && theta == 0 && sampled < 11 && estimate < 11);
        assert!(regret.is_finite() && (0.0..=1.0).contains(&eff));
        // 9 significant digits at most
        let digits = rec[5].trim_start_matches('-').split('e').next().unwrap().replace('.', "");
        assert!(digits.trim_start_matches('0').len() <= 9, "{}", &rec[5]);
        n += 1;
    }
    assert_eq!(n, 3 * 8);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = cfg(SMALL_RUN);
    run_experiment(&c, a.path()).unwrap();
    with_threads(3, || run_experiment(&c, b.path())).unwrap().unwrap();
    for name in ["trace_as.csv", "trace_rs.csv", "trace_ucb.csv", "summary.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn replication_streams_do_not_depend_on_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut c = cfg(SMALL_RUN);
    run_experiment(&c, a.path()).unwrap();
    c.report.replications = 3;
    run_experiment(&c, b.path()).unwrap();
    let small = fs::read_to_string(b.path().join("trace_as.csv")).unwrap();
    let large = fs::read_to_string(a.path().join("trace_as.csv")).unwrap();
    for line in small.lines() {
        assert!(large.lines().any(|l| l == line), "{line}");
    }
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    fs::write(&file, "x").unwrap();
    let c = cfg("[report]\nhorizon = 5\nreplications = 1");
    assert!(matches!(run_experiment(&c, &file), Err(Error::Io { .. })));
}

#[test]
fn table1_single_state_cell_is_always_converged() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(r#"
[problem]
cells = [{ lambda = 1.0, num_states = 1 }]
[report]
horizon = 100
replications = 10
checkpoints = [10, 100]
"#);
    let t = table1(&c, dir.path()).unwrap();
    assert_eq!(t.rows.len(), 6);
    assert!(t.rows.iter().all(|r| r.pct == 100.0));
    let mut rdr = csv::Reader::from_path(dir.path().join("table1.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), TABLE1_HEADER);
}

#[test]
fn table1_rejects_adaptive_mode() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg("[algorithm]\nmode = \"adaptive\"");
    assert!(matches!(table1(&c, dir.path()), Err(Error::InvalidConfig { field, .. }) if field == "algorithm.mode"));
}

const EXAMPLE2: &str = include_str!("../../../configs/example2.toml");

#[test]
fn example2_writes_fig4_schema() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = cfg(EXAMPLE2);
    c.report.replications = 4;
    c.report.sweep_horizon = 2000;
    c.report.jump_window = 500;
    let r = example2(&c, dir.path()).unwrap();
    assert_eq!(r.fig4.len(), 12);
    let mut rdr = csv::Reader::from_path(dir.path().join("fig4.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), FIG4_HEADER);
    assert_eq!(rdr.records().count(), 12);
    for kind in ["as", "rs", "ucb"] {
        let mut t = csv::Reader::from_path(dir.path().join(format!("trace_{kind}.csv"))).unwrap();
        assert_eq!(t.headers().unwrap().iter().collect::<Vec<_>>(), TRACE_HEADER);
    }
}

/// The forced-jump scenario at full size: 100 runs, switch at n = 1000.
fn forced_jump() -> smoothsearch::harness::Example2Report {
    let dir = tempfile::tempdir().unwrap();
    let mut c = cfg(EXAMPLE2);
    c.report.epsilons.clear();
    example2(&c, dir.path()).unwrap()
}

#[test]
fn forced_jump_as_recovers_after_switch() {
    let r = forced_jump();
    let s = r.forced_jump.iter().find(|s| s.algorithm == AlgorithmKind::AdaptiveSearch).unwrap();
    assert!(s.after_pct >= 90.0, "{}", s.after_pct);
}

#[test]
fn forced_jump_as_tracks_before_switch() {
    let r = forced_jump();
    let s = r.forced_jump.iter().find(|s| s.algorithm == AlgorithmKind::AdaptiveSearch).unwrap();
    assert!(s.before_pct >= 90.0, "AS kept its estimate in S* over [200, 1000) in {}% of runs", s.before_pct);
}

#[test]
fn ode_check_zero_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = cfg(include_str!("../../../configs/ode_check.toml"));
    c.report.ode_horizon = 0.0;
    c.report.replications = 5;
    let r = ode_check(&c, dir.path()).unwrap();
    assert!(r.gaps.iter().all(|(_, g)| *g < 1e-12));
}

#[test]
fn config_errors_name_fields() {
    let bad = [
        ("[report]\nhorizon = 0", "report.horizon"),
        ("[algorithm]\nmode = \"adaptive\"\nmu = 1.5", "algorithm.mu"),
        (
            "[problem]\nlambda = [1.0, 10.0]\n[hypermodel]\nkind = \"markov\"\ngenerator = [[-0.5, 0.5], [0.5, -0.5]]\nepsilon = 3.0",
            "hypermodel.epsilon",
        ),
        ("[problem]\nkind = \"deterministic\"\nmeans = [[0.1]]", "problem.num_states"),
        ("[problem]\nkind = \"deterministic\"\nmeans = [[0.1, 0.2], [0.3]]", "problem.means"),
        ("[problem]\nkind = \"ar1\"\nmeans = [[0.1, 0.2]]\nphi = 0.95", "problem.phi"),
    ];
    for (text, field) in bad {
        match ExperimentConfig::from_toml_str(text) {
            Err(Error::InvalidConfig { field: f, .. }) => assert_eq!(f, field, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
}
