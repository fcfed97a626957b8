//! Runs every example's body so that the examples keep compiling and working.

#[path = "../examples/experiment.rs"]
mod experiment;
#[path = "../examples/importance_sampling.rs"]
mod importance_sampling;
#[path = "../examples/soft_q_lambda.rs"]
mod soft_q_lambda;
#[path = "../examples/soft_values.rs"]
mod soft_values;
#[path = "../examples/tree_backup.rs"]
mod tree_backup;
#[path = "../examples/value_iteration.rs"]
mod value_iteration;
#[path = "../examples/verification.rs"]
mod verification;

#[test]
fn soft_values_runs() {
    soft_values::run().unwrap();
}

#[test]
fn value_iteration_runs() {
    value_iteration::run().unwrap();
}

#[test]
fn importance_sampling_runs() {
    importance_sampling::run().unwrap();
}

#[test]
fn tree_backup_runs() {
    tree_backup::run().unwrap();
}

#[test]
fn soft_q_lambda_runs() {
    soft_q_lambda::run().unwrap();
}

#[test]
fn experiment_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    experiment::run(dir.path()).unwrap();
    assert!(dir.path().join("q.json").exists());
    assert!(dir.path().join("curve.csv").exists());
}

#[test]
fn verification_runs() {
    verification::run(1).unwrap();
}
