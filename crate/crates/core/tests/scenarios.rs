use std::path::PathBuf;

use lethargy::scenario::{build, bundled, load_scenario, parse_spec, run, Expect, Report, RunOptions, Verdict};
use lethargy::{rho, Error};

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn expected(e: Option<Expect>) -> Verdict {
    match e {
        None | Some(Expect::Pass) => Verdict::Pass,
        Some(Expect::Fail) => Verdict::Fail,
        Some(Expect::InputError) => Verdict::InputError,
        Some(Expect::SolverFailure) => Verdict::SolverFailure,
    }
}

#[test]
fn every_file_on_disk_is_bundled() {
    let mut on_disk: Vec<String> = std::fs::read_dir(scenario_dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".toml"))
        .collect();
    on_disk.sort();
    let mut names: Vec<String> = bundled().iter().map(|(f, _)| f.to_string()).collect();
    names.sort();
    assert_eq!(on_disk, names);
}

#[test]
fn files_on_disk_reach_their_expected_verdicts() {
    for (file, _) in bundled() {
        let path = scenario_dir().join(file);
        let spec = parse_spec(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let want = expected(spec.expect);
        let got = match load_scenario(&path) {
            Ok(s) => run(&s, &RunOptions::default()).verdict,
            Err(e) => Verdict::from_error(&e),
        };
        assert_eq!(got, want, "{file}");
    }
}

#[test]
fn reports_round_trip_and_repeat() {
    let s = load_scenario(scenario_dir().join("skew_l1_prefix.toml")).unwrap();
    let a = run(&s, &RunOptions::default());
    let b = run(&s, &RunOptions::default());
    assert_eq!(a.to_json(), b.to_json());
    let back = Report::from_json(&a.to_json()).unwrap();
    assert_eq!(back.to_json(), a.to_json());
    assert!(a.wall_time_ms.is_none());
}

#[test]
fn polynomial_grid_levels_within_tolerance() {
    let s = load_scenario(scenario_dir().join("polynomial_grid.toml")).unwrap();
    assert_eq!(s.chain.ambient_dim(), 64);
    let report = run(&s, &RunOptions::default());
    assert_eq!(report.verdict, Verdict::Pass);
    let x = lethargy::Vector::new(report.x.clone().unwrap()).unwrap();
    for (k, &d) in s.targets.values().iter().enumerate() {
        let r = rho(&x, s.chain.level(k + 1).unwrap(), s.norm, 1e-9).unwrap().value;
        assert!((r - d).abs() <= 1e-5, "level {}: {r} vs {d}", k + 1);
    }
}

#[test]
fn missing_file_is_an_input_error() {
    let e = load_scenario(scenario_dir().join("no_such_file.toml")).unwrap_err();
    assert_eq!(Verdict::from_error(&e), Verdict::InputError);
}

#[test]
fn invalid_targets_are_rejected_before_running() {
    let text = std::fs::read_to_string(scenario_dir().join("hilbert_coordinate.toml")).unwrap();
    let mut spec = parse_spec(&text).unwrap();
    spec.targets.values = vec![0.2, 0.5];
    let e = build(spec).unwrap_err();
    assert!(matches!(e, Error::InvalidTargets(_) | Error::Scenario(_)), "{e}");
    assert_eq!(Verdict::from_error(&e), Verdict::InputError);
}
