use std::path::PathBuf;

use lesde::dynamics::{integrate_ode, Integrator, TimeGrid};
use lesde::elasticity::{DriftSpec, ElasticitySchedule, HKernel};
use lesde::estimation::{EstimatorModel, Smoothing};
use lesde::experiments::{
    run_imitation, ExperimentConfig, ImitationConfig, ImitationInit, ImitationSource, PathAggregate, Summary,
};
use lesde::geometry::relative_difference;
use lesde::io::{load_config, parse_json, write_run, RunConfig};
use lesde::Error;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_configs_parse_and_validate() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 7);
}

#[test]
fn config_errors_are_classified() {
    match parse_json::<RunConfig>("{\n \"kind\": \"PhaseSweep\",\n") {
        Err(Error::Parse { line, .. }) => assert!(line >= 2),
        other => panic!("{other:?}"),
    }
    let unknown = r#"{"kind":"PhaseSweep","exponents":[1],"init_means":[1,0],"n":2,"trials":1,"sigma":0.1,
        "grid":{"horizon":1,"dt":0.1},"extra":true}"#;
    assert!(matches!(parse_json::<RunConfig>(unknown), Err(Error::Schema { .. })));
    let wrong_type = r#"{"kind":"PhaseSweep","exponents":"fast"}"#;
    assert!(matches!(parse_json::<RunConfig>(wrong_type), Err(Error::Schema { .. })));
}

#[test]
fn config_survives_serde_round_trip() {
    let cfg = load_config(&configs_dir().join("imitate.json")).unwrap();
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(parse_json::<RunConfig>(&text).unwrap(), cfg);
}

#[test]
fn run_directory_holds_every_series() {
    let RunConfig::RoundTrip(mut cfg) = load_config(&configs_dir().join("roundtrip.json")).unwrap() else { panic!() };
    cfg.trials = 5;
    cfg.tail = None;
    let exp = ExperimentConfig::RoundTrip(cfg);
    let out = exp.run().unwrap();
    let root = tempfile::tempdir().unwrap();
    let dir = write_run(root.path(), &exp, &out).unwrap();
    assert!(dir.join("report.json").is_file());
    assert!(dir.join("config.json").is_file());
    assert!(!out.report.series.is_empty());
    for name in &out.report.series {
        assert!(dir.join(name).is_file(), "{name} missing");
    }
    assert_eq!(out.report.provenance.config_hash.len(), 64);
    assert!(dir.ends_with(&out.report.provenance.config_hash[..16]));
}

#[test]
fn rd_of_a_trajectory_with_itself_is_zero() {
    let traj = integrate_ode(
        &DriftSpec::lmodel(3, 1.0, 0.2),
        &ElasticitySchedule::constant(1.0, 0.2),
        &[1.0, -0.3, 0.2, 0.1, 0.8, -0.4, -0.6, 0.3, 0.9],
        &TimeGrid::new(2.0, 0.01, 10),
        Integrator::Rk4,
    )
    .unwrap();
    let rd = relative_difference(&traj, &traj, &HKernel::LogitAligned { k: 3 }).unwrap();
    assert!(rd.rd.iter().flatten().all(|&r| r == 0.0));
}

#[test]
fn closed_loop_imitation_with_true_strengths() {
    let cfg = ImitationConfig {
        source: ImitationSource::LModel {
            k: 3,
            alpha: 1.0,
            beta: 0.2,
            sigma: 0.0,
            init: vec![1.0, -0.3, 0.2, 0.1, 0.8, -0.4, -0.6, 0.3, 0.9],
            grid: TimeGrid::new(5.0, 0.01, 10),
        },
        smoothing: Smoothing::new(11, 3),
        paths: 1,
        init: ImitationInit::Source,
        aggregate: PathAggregate::Mean,
        substeps: 100,
        tail_fraction: 0.75,
        estimators: vec![],
        oracle: Some(ElasticitySchedule::constant(1.0, 0.2)),
        seed: 0,
    };
    let Summary::Imitation(s) = run_imitation(&cfg).unwrap().report.summary else { panic!() };
    let oracle = &s.results[0];
    assert!(oracle.model.is_none());
    assert!(oracle.rd_tail_max <= 1e-3, "{:?}", oracle.rd_tail_mean);
    assert!(oracle.argmax_agree);
}

#[test]
fn missing_trajectory_source_is_an_io_error() {
    let cfg = ImitationConfig {
        source: ImitationSource::Trajectory { path: "does/not/exist.csv".into() },
        smoothing: Smoothing::new(11, 3),
        paths: 2,
        init: ImitationInit::Gaussian,
        aggregate: PathAggregate::Median,
        substeps: 1,
        tail_fraction: 0.75,
        estimators: vec![EstimatorModel::L],
        oracle: None,
        seed: 0,
    };
    assert!(matches!(run_imitation(&cfg), Err(Error::Io(_))));
}

#[test]
fn schema_document_covers_every_field() {
    let schema: serde_json::Value =
        serde_json::from_slice(&std::fs::read(configs_dir().join("../schemas/config.schema.json")).unwrap()).unwrap();
    let variants = schema["oneOf"].as_array().unwrap();
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let cfg = load_config(&entry.unwrap().path()).unwrap();
        // serialising fills in every defaulted field
        let full = serde_json::to_value(&cfg).unwrap();
        let kind = full["kind"].as_str().unwrap();
        let v = variants.iter().find(|v| v["properties"]["kind"]["const"] == kind).unwrap();
        for key in full.as_object().unwrap().keys() {
            assert!(v["properties"].get(key).is_some(), "{kind}.{key} missing from schema");
        }
        for req in v["required"].as_array().unwrap() {
            assert!(full.get(req.as_str().unwrap()).is_some());
        }
    }
}
