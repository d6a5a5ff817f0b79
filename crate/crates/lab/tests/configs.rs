//! The shipped example configurations parse, and the quick ones run.

use std::path::Path;

use parabolic_core::sde::SerialRunner;
use parabolic_lab::{run_experiment, ExperimentConfig, Kind};

#[test]
fn example_configs_parse_and_quick_kinds_run() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = Vec::new();
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg =
            ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let kind = cfg.experiment.kind();
        seen.push(kind.name());
        if matches!(kind, Kind::Sde | Kind::Acceptance) {
            continue;
        }
        let out = run_experiment(&cfg, &SerialRunner)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(out.failure.is_none());
        assert_eq!(out.files[0].name, "report.json");
    }
    seen.sort_unstable();
    assert_eq!(
        seen,
        [
            "acceptance",
            "degiorgi",
            "embed",
            "norms",
            "pde",
            "sde",
            "variational"
        ]
    );
}
