use ranktomo::study::{run_study1, run_study2, Study1Config, Study2Config, StudyOptions};
use ranktomo::{random_state, simulate_dataset};

#[test]
fn same_seed_gives_same_counts() {
    let rho = random_state(3, 2, 5).unwrap();
    assert_eq!(simulate_dataset(&rho, 30, 8).unwrap(), simulate_dataset(&rho, 30, 8).unwrap());
    assert_ne!(simulate_dataset(&rho, 30, 8).unwrap(), simulate_dataset(&rho, 30, 9).unwrap());
}

#[test]
fn study_reports_are_byte_identical() {
    let cfg = Study1Config {
        k: 2,
        n: 60,
        true_ranks: vec![1, 2],
        options: StudyOptions { replicates: 3, seed: 17, restarts: 2, stop_after_increases: 2 },
        ..Study1Config::default()
    };
    let a = run_study1(&cfg, None).unwrap();
    let b = run_study1(&cfg, None).unwrap();
    assert_eq!(a.records_csv(), b.records_csv());
    assert_eq!(a.selection_csv(), b.selection_csv());
    assert_eq!(a.mse_csv(), b.mse_csv());
    assert_eq!(a.summary(), b.summary());

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let cfg2 = Study2Config {
        n_values: vec![25],
        options: StudyOptions { replicates: 5, seed: 2, restarts: 2, stop_after_increases: 2 },
        ..Study2Config::default()
    };
    run_study2(&cfg2, None).unwrap().write(dir_a.path()).unwrap();
    run_study2(&cfg2, None).unwrap().write(dir_b.path()).unwrap();
    for f in ["config.txt", "records.csv", "selection.csv", "mse.csv", "failures.csv"] {
        assert_eq!(std::fs::read(dir_a.path().join(f)).unwrap(), std::fs::read(dir_b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn different_seed_changes_report_and_hash() {
    let mk = |seed| Study2Config {
        n_values: vec![25],
        options: StudyOptions { replicates: 4, seed, restarts: 2, stop_after_increases: 2 },
        ..Study2Config::default()
    };
    let a = run_study2(&mk(1), None).unwrap();
    let b = run_study2(&mk(2), None).unwrap();
    assert_ne!(a.config.hash(), b.config.hash());
    assert_ne!(a.records_csv(), b.records_csv());
}
