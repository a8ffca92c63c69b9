use std::fs;
use std::path::Path;

use adstego::adversary::Class;
use adstego::coder::{ChangeMap, CoderMode};
use adstego::evalharness::{run_experiment, run_experiment_file, ExperimentConfig};
use adstego::imageio::{load_image, parse_manifest};
use adstego::Error;

fn small(out: &Path, coder: CoderMode) -> ExperimentConfig {
    ExperimentConfig {
        width: 32,
        height: 32,
        n_train: 24,
        n_val: 6,
        n_test: 8,
        coder,
        delta_gamma: 0.5,
        gamma_max: 3.0,
        epochs: 2,
        master_seed: 11,
        out_dir: out.to_path_buf(),
        threads: 1,
        timing: false,
        ..ExperimentConfig::default()
    }
}

const CSVS: [&str; 6] = [
    "attack.csv",
    "attack_train.csv",
    "detection.csv",
    "gamma_cdf.csv",
    "training.csv",
    "summary.txt",
];

#[test]
fn small_run_writes_consistent_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_experiment(&small(dir.path(), CoderMode::Stc)).unwrap();
    let out = dir.path();
    for f in CSVS.iter().chain(&["config.txt", "manifest.txt", "target.stgm", "retrained.stgm"]) {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let manifest = parse_manifest(&fs::read_to_string(out.join("manifest.txt")).unwrap()).unwrap();
    assert_eq!(manifest.len(), 38);

    let csv = fs::read_to_string(out.join("attack.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "id,payload,mode,succeeded,gamma_used,reembeds,phi_before,phi_after,seconds"
    );
    assert_eq!(lines.count(), 8);

    let target = adstego::ClassifierModel::load(out.join("target.stgm")).unwrap();
    assert_eq!(target, run.target);
    for a in &run.attacks {
        let r = run.image(a.id);
        let z = load_image(out.join(format!("adversarial/{:05}.pgm", a.id))).unwrap();
        assert_eq!(z, a.outcome.adversarial_stego);
        if a.outcome.succeeded {
            assert_eq!(target.classify(&z).unwrap(), Class::Cover);
        } else {
            assert_eq!(z, r.sync.stego);
        }
        let total = ChangeMap::between(&r.cover, &z).unwrap();
        for i in 0..total.delta.len() {
            let eta = i16::from(z.pixels()[i]) - i16::from(r.sync.stego.pixels()[i]);
            assert_eq!(i16::from(total.delta[i]), eta + i16::from(r.sync.changes.delta[i]));
        }
    }
    let s = &run.summary;
    assert_eq!(s.attack.total, 8);
    assert_eq!(s.cdf.last().unwrap().1, s.attack.success_rate);
    assert!(s.detection_retrained.is_some());
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&small(a.path(), CoderMode::Simulator)).unwrap();
    let cfg_b = small(b.path(), CoderMode::Simulator);
    fs::write(b.path().join("cfg.txt"), cfg_b.to_text()).unwrap();
    run_experiment_file(b.path().join("cfg.txt")).unwrap();
    for f in CSVS.iter().chain(&["target.stgm", "retrained.stgm", "manifest.txt"]) {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn zero_payload_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        payload_rate: 0.0,
        retrain: false,
        ..small(dir.path(), CoderMode::Simulator)
    };
    let run = run_experiment(&cfg).unwrap();
    for r in &run.images {
        assert_eq!(r.sync.stego, r.cover);
    }
    // covers and stegos coincide, so every test image gets the same verdict
    let d = run.summary.detection_sync;
    assert_eq!(d.p_fa + d.p_md, 1.0);
    for a in &run.attacks {
        assert_eq!(a.outcome.succeeded, a.outcome.phi_before >= 0.5);
    }
}

#[test]
fn errors_are_stage_tagged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        cover_dir: Some(dir.path().to_path_buf()),
        ..small(dir.path(), CoderMode::Simulator)
    };
    match run_experiment(&cfg) {
        Err(Error::Stage { stage, .. }) => assert_eq!(stage, "covers"),
        other => panic!("expected stage error, got {other:?}"),
    }
    assert!(matches!(run_experiment_file(dir.path().join("missing.txt")), Err(Error::Stage { stage: "config", .. })));
}
