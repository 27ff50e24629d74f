//! Integration tests for configuration handling, artifact determinism and
//! the binary's exit codes.

use std::path::{Path, PathBuf};

use peano_ldp_cli::config::ExperimentConfig;
use peano_ldp_cli::ensemble_io::{header_config, read_ensemble};
use peano_ldp_cli::stages::{build_context, run_pipeline};

fn smoke_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke_1d.cfg")
}

fn write_cfg(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("test.cfg");
    std::fs::write(&p, body).unwrap();
    p
}

const VALID: &str = r#"
[potential]
family = "isotropic"
d = 1
gamma = 0.5
value = 0.6667

[grid]
n = 256
l = 10.0

[flow]
t_max = 2.0

[sde]
epsilons = [0.5, 0.3]
n_paths = 100
master_seed = 1

[[targets]]
t = 1.0
x = [0.25]
"#;

#[test]
fn valid_config_parses() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_cfg(dir.path(), VALID);
    let cfg = ExperimentConfig::load(&p).unwrap();
    assert_eq!(cfg.spectrum.k, 8); // defaults filled
    assert_eq!(cfg.flow.n_angles, 512);
}

#[test]
fn malformed_gamma_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_cfg(dir.path(), &VALID.replace("gamma = 0.5", "gamma = 1.2"));
    let err = ExperimentConfig::load(&p).unwrap_err().to_string();
    assert!(err.contains("potential.gamma"), "{err}");
    assert!(err.contains("1.2"), "{err}");
}

#[test]
fn unknown_keys_are_hard_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_cfg(dir.path(), &format!("{VALID}\n[sde.extra]\nfoo = 1\n"));
    assert!(ExperimentConfig::load(&p).is_err());
    let p = write_cfg(dir.path(), &VALID.replace("n_paths = 100", "n_paths = 100\nn_pathz = 7"));
    let err = ExperimentConfig::load(&p).unwrap_err();
    assert!(format!("{err:#}").contains("n_pathz"), "{err:#}");
}

#[test]
fn ladder_must_decrease() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_cfg(dir.path(), &VALID.replace("epsilons = [0.5, 0.3]", "epsilons = [0.3, 0.5]"));
    let err = ExperimentConfig::load(&p).unwrap_err().to_string();
    assert!(err.contains("sde.epsilons"), "{err}");
}

#[test]
fn target_dimension_checked() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_cfg(dir.path(), &VALID.replace("x = [0.25]", "x = [0.25, 0.1]"));
    let err = ExperimentConfig::load(&p).unwrap_err().to_string();
    assert!(err.contains("targets[0].x"), "{err}");
}

#[test]
fn missing_profile_file_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let body = VALID
        .replace("family = \"isotropic\"", "family = \"tabulated\"\nfile = \"missing.txt\"")
        .replace("d = 1", "d = 2")
        .replace("value = 0.6667", "")
        .replace("x = [0.25]", "x = [0.25, 0.0]");
    let p = write_cfg(dir.path(), &body);
    let err = ExperimentConfig::load(&p).unwrap_err().to_string();
    assert!(err.contains("potential.file"), "{err}");
}

#[test]
fn tabulated_profile_loads() {
    let dir = tempfile::tempdir().unwrap();
    let n = 64;
    let rows: String = (0..n)
        .map(|i| {
            let phi = std::f64::consts::TAU * i as f64 / n as f64;
            format!("{phi} {}\n", 0.8 + 0.2 * (3.0 * phi).cos())
        })
        .collect();
    std::fs::write(dir.path().join("profile.txt"), rows).unwrap();
    let body = VALID
        .replace("family = \"isotropic\"", "family = \"tabulated\"\nfile = \"profile.txt\"")
        .replace("d = 1", "d = 2")
        .replace("value = 0.6667", "")
        .replace("x = [0.25]", "x = [0.25, 0.0]");
    let p = write_cfg(dir.path(), &body);
    let cfg = ExperimentConfig::load(&p).unwrap();
    let pot = cfg.build_potential(dir.path()).unwrap();
    assert_eq!(pot.dim(), 2);
    let th = pot.profile().eval(&[1.0, 0.0]);
    assert!((th - 1.0).abs() < 1e-3, "{th}");
}

#[test]
fn rerun_same_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let run = || {
        let ctx = build_context(&smoke_config(), Some(out.clone()), None).unwrap();
        let (_, ok) = run_pipeline(&ctx, None).unwrap();
        assert!(ok);
        std::fs::read(out.join("manifest.json")).unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a, b, "manifests differ across identical reruns");
}

#[test]
fn seed_override_changes_ensembles() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    let ctx1 = build_context(&smoke_config(), Some(out1.clone()), Some(1)).unwrap();
    let ctx2 = build_context(&smoke_config(), Some(out2.clone()), Some(2)).unwrap();
    run_pipeline(&ctx1, Some("simulate")).unwrap();
    run_pipeline(&ctx2, Some("simulate")).unwrap();
    let (h1, s1) = read_ensemble(&out1.join("ensemble_eps0.bin")).unwrap();
    let (h2, s2) = read_ensemble(&out2.join("ensemble_eps0.bin")).unwrap();
    assert_eq!(h1.master_seed, 1);
    assert_eq!(h2.master_seed, 2);
    assert_ne!(s1, s2);
}

#[test]
fn ensemble_regenerates_bit_identically_from_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let ctx = build_context(&smoke_config(), Some(out.clone()), None).unwrap();
    run_pipeline(&ctx, Some("simulate")).unwrap();
    let (header, states) = read_ensemble(&out.join("ensemble_eps1.bin")).unwrap();
    let cfg = header_config(&header);
    let pot = ctx.pot.clone();
    let ens = peano_ldp::sde::simulate(&pot, &cfg).unwrap();
    assert_eq!(ens.raw_states(), &states[..]);
}

#[test]
fn pipeline_stops_at_requested_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let ctx = build_context(&smoke_config(), Some(out.clone()), None).unwrap();
    let (manifest, ok) = run_pipeline(&ctx, Some("flow")).unwrap();
    assert!(ok);
    let statuses: Vec<(String, String)> =
        manifest.stages.iter().map(|s| (s.name.clone(), s.status.clone())).collect();
    assert_eq!(statuses[0].1, "ok");
    assert_eq!(statuses[1].1, "ok");
    assert!(statuses[2].1 == "skipped" && statuses[4].1 == "skipped");
    assert!(out.join("flows.csv").exists());
    assert!(!out.join("ensemble_eps0.bin").exists());
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_peano-ldp");
    // missing config: exit 1
    let out = std::process::Command::new(bin).args(["spectrum"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    // malformed config: exit 1
    let dir = tempfile::tempdir().unwrap();
    let bad = write_cfg(dir.path(), &VALID.replace("gamma = 0.5", "gamma = 1.2"));
    let out = std::process::Command::new(bin)
        .args(["spectrum", "--config"])
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("potential.gamma"), "{msg}");
}
