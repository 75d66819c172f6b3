mod common;

use std::fs;

use structsgd::harness::output::trace_csv;
use structsgd::harness::{run_experiment, ExperimentConfig};

/// Regenerate with `STRUCTSGD_BLESS=1 cargo test --test golden`.
#[test]
fn miniature_trace_is_byte_identical() {
    let cfg = ExperimentConfig::parse_str(common::MINI_CONFIG).unwrap();
    let first = trace_csv(&run_experiment(&cfg).unwrap());
    let second = trace_csv(&run_experiment(&cfg).unwrap());
    assert_eq!(first, second);
    let path = common::golden_path();
    if std::env::var_os("STRUCTSGD_BLESS").is_some() {
        fs::write(&path, &first).unwrap();
    }
    let frozen = fs::read_to_string(&path).expect("golden file missing; run with STRUCTSGD_BLESS=1");
    assert!(first == frozen, "trace.csv differs from {}", path.display());
}
