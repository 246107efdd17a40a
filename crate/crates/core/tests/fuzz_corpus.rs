//! Replays the checked-in fuzz corpus through the same entry points.

use std::path::PathBuf;

use perpetua::analysis::TestFunction;
use perpetua::harness::{parse_json, ExperimentConfig};
use perpetua::montecarlo::EmpiricalDistribution;
use perpetua::LevyTriplet;

fn corpus(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut files: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert!(!files.is_empty(), "no seeds in {}", dir.display());
    files
        .into_iter()
        .map(|p| (p.clone(), std::fs::read(p).unwrap()))
        .collect()
}

#[test]
fn triplet_seeds_parse_and_round_trip() {
    for (p, data) in corpus("triplet_json") {
        let t = LevyTriplet::from_json(std::str::from_utf8(&data).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(LevyTriplet::from_json(&t.to_json()).unwrap(), t);
    }
}

#[test]
fn test_function_seeds_are_valid() {
    for (p, data) in corpus("test_function_json") {
        let f: TestFunction =
            parse_json(std::str::from_utf8(&data).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert!(f.validate().is_empty(), "{}", p.display());
        for x in [-5.0, 0.0, 0.5, 3.0, 1e6] {
            assert!(f.eval(x).is_finite());
        }
    }
}

#[test]
fn config_seeds_validate() {
    for (p, data) in corpus("experiment_config") {
        ExperimentConfig::from_json(std::str::from_utf8(&data).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
}

#[test]
fn csv_seeds_round_trip() {
    for (_, data) in corpus("overshoot_csv") {
        let d = EmpiricalDistribution::read_csv(data.as_slice()).unwrap();
        let mut out = Vec::new();
        d.write_csv(&mut out, "overshoot").unwrap();
        assert_eq!(EmpiricalDistribution::read_csv(out.as_slice()).unwrap(), d);
    }
}
