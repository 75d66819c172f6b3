use std::path::PathBuf;

/// Fixed-seed miniature run behind the frozen trace.
pub const MINI_CONFIG: &str = "\
dataset = synthetic
n = 100
d = 5
family = logistic
lh = 1
batch_size = 1
step_rule = eta_bar
iterations = 200
repetitions = 5
seed = 20240611
";

pub fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/trace_mini.csv")
}
