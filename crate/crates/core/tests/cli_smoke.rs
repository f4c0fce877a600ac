//! End-to-end checks of the command-line binary and its exit codes.

use std::process::Command;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use purpose_align::alignment::{self, Mutation};
use purpose_align::scenario::{spec_to_string, ScenarioSpec, TaggedEncoder};

const BIN: &str = env!("CARGO_BIN_EXE_purpose-align");

fn wrap_model(model: alignment::AlignmentModel) -> ScenarioSpec {
    ScenarioSpec {
        schema: 1,
        id: "cli-smoke".to_owned(),
        domains: model.domains.values().cloned().collect(),
        sensors: vec![model.robot_sensor.clone()],
        spaces: vec![model.robot_space.clone()],
        encoders: model
            .robot_encoders
            .values()
            .map(|e| TaggedEncoder { tag: None, encoder: e.clone() })
            .collect(),
        maps: vec![model.map.clone()],
        purposes: vec![model.robot_purpose.clone()],
        initial_purposes: vec![model.robot_purpose.id.clone()],
        phases: Vec::new(),
        schedule: Vec::new(),
        trial_reset: None,
        model: Some(model),
        seed: 0,
    }
}

fn write_spec(spec: &ScenarioSpec) -> tempfile::NamedTempFile {
    let file = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(file.path(), spec_to_string(spec)).unwrap();
    file
}

fn exit_code(args: &[&str]) -> i32 {
    Command::new(BIN)
        .args(args)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

#[test]
fn check_distinguishes_aligned_from_mutated() {
    let model = alignment::generate_aligned_extrinsic(11);
    let file = write_spec(&wrap_model(model.clone()));
    let path = file.path().to_str().unwrap();
    for mode in ["semantic", "operational"] {
        assert_eq!(
            exit_code(&["check", path, "--case", "extrinsic", "--mode", mode]),
            0
        );
    }

    let mut broken = model;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    alignment::apply_mutation(&mut broken, Mutation::GoalDilution, &mut rng).unwrap();
    let file = write_spec(&wrap_model(broken));
    let path = file.path().to_str().unwrap();
    for mode in ["semantic", "operational"] {
        assert_eq!(
            exit_code(&["check", path, "--case", "extrinsic", "--mode", mode]),
            1
        );
    }
}

#[test]
fn check_rejects_scenario_without_model() {
    let spec = ScenarioSpec {
        schema: 1,
        id: "bare".to_owned(),
        domains: Vec::new(),
        sensors: Vec::new(),
        spaces: Vec::new(),
        encoders: Vec::new(),
        maps: Vec::new(),
        purposes: Vec::new(),
        initial_purposes: Vec::new(),
        phases: Vec::new(),
        schedule: Vec::new(),
        trial_reset: None,
        model: None,
        seed: 0,
    };
    let file = write_spec(&spec);
    let path = file.path().to_str().unwrap();
    assert_eq!(exit_code(&["check", path, "--case", "extrinsic"]), 2);
    assert_eq!(exit_code(&["check", "/nonexistent.json", "--case", "extrinsic"]), 2);
}

#[test]
fn cause_accepts_an_aligned_model() {
    let mut model = alignment::generate_aligned_extrinsic(29);
    // Starting inside the goal region would let the idle baseline succeed
    // on its own, defeating the counterfactual contrast.
    let intention = model.intention.clone().unwrap();
    let stars = model.star_states[&intention.domain].clone();
    let domain = model.domains.get_mut(&intention.domain).unwrap();
    domain.initial_states.retain(|s| !stars.contains(s));
    assert!(!domain.initial_states.is_empty());
    let file = write_spec(&wrap_model(model));
    let path = file.path().to_str().unwrap();
    assert_eq!(exit_code(&["cause", path]), 0);
    assert_eq!(exit_code(&["cause", path, "--baseline", "random"]), 0);
}

#[test]
fn simulate_writes_the_home_report() {
    let out = tempfile::NamedTempFile::new().unwrap();
    let scenario = tempfile::NamedTempFile::new().unwrap();
    assert_eq!(
        exit_code(&[
            "gen-home-scenario",
            "--out",
            scenario.path().to_str().unwrap()
        ]),
        0
    );
    assert_eq!(
        exit_code(&[
            "simulate",
            scenario.path().to_str().unwrap(),
            "--report",
            out.path().to_str().unwrap()
        ]),
        0
    );
    let report = std::fs::read_to_string(out.path()).unwrap();
    assert!(report.contains("\"format_version\": 1"));
    assert!(report.contains("\"trials\""));
}

#[test]
fn audit_exits_clean() {
    assert_eq!(
        exit_code(&["audit", "--case", "vumax", "--count", "25", "--seed", "5"]),
        0
    );
}
