// Own test binary: it sets a process-wide variable.
use fadingrx::harness::{ExperimentConfig, SEED_ENV};

#[test]
fn seed_variable_sits_below_file_and_overrides() {
    std::env::set_var(SEED_ENV, "42");
    assert_eq!(ExperimentConfig::resolve(None, &[]).unwrap().master_seed, 42);
    assert_eq!(ExperimentConfig::resolve(None, &["seed=7".into()]).unwrap().master_seed, 7);
    std::env::set_var(SEED_ENV, "not a number");
    assert!(ExperimentConfig::resolve(None, &[]).is_err());
    std::env::remove_var(SEED_ENV);
    assert_eq!(ExperimentConfig::resolve(None, &[]).unwrap().master_seed, 1);
}
