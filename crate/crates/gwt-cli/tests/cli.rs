//! Driver-level tests: config round trips, determinism of outputs, zero-time
//! passthrough, snapshot reload, reference warnings.

use std::path::{Path, PathBuf};

use gwt_cli::config::Config;
use gwt_cli::runner;
use gwt_core::snapshot::load_snapshot;

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn small_config(t_final: f64) -> Config {
    let text = format!(
        r#"
[experiment]
name = "small"
epsilon = 0.0625
t_final = {t_final}

[model]
name = "cosine_well"

[initial]
kind = "gaussian"
q0 = [0.7853981633974483]
p0 = [-0.5]
c_re = [0.0]
c_im = [1.0]

[eta_grid]
bounds = [[-6.283185307179586, 6.283185307179586]]
n = [128]

[x_grid]
bounds = [[-3.141592653589793, 3.141592653589793]]
n = [512]

[scheme]
kind = "sl-ts3"
dt = 0.0625

[reference]
dt = 0.001953125

[sweep]
dts = [0.125, 0.0625]

[output]
dir = "unused"
"#
    );
    let cfg: Config = toml::from_str(&text).unwrap();
    cfg.validate().unwrap();
    cfg
}

#[test]
fn shipped_configs_parse_and_round_trip() {
    for name in [
        "cosine_well_time.toml",
        "cosine_well_space.toml",
        "quartic_chirp_time.toml",
        "crossed_sine_2d.toml",
        "gaussian_coil_growth.toml",
    ] {
        let cfg = Config::load(&repo_config(name)).unwrap_or_else(|e| panic!("{name}: {e:?}"));
        let text = cfg.to_toml().unwrap();
        let re: Config = toml::from_str(&text).unwrap();
        assert_eq!(cfg, re, "{name} round trip");
    }
}

#[test]
fn config_validation_messages() {
    let mut cfg = small_config(0.5);
    cfg.experiment.epsilon = -1.0;
    let err = cfg.validate().unwrap_err().to_string();
    assert!(err.contains("epsilon"), "{err}");

    let mut cfg = small_config(0.5);
    cfg.model.name = "nonsense".into();
    let err = cfg.validate().unwrap_err().to_string();
    assert!(err.contains("model"), "{err}");

    let mut cfg = small_config(0.5);
    cfg.scheme.dt = 0.0;
    assert!(cfg.validate().is_err());
}

#[test]
fn run_outputs_are_deterministic() {
    let cfg = small_config(0.25);
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    runner::run_gwt(&cfg, &out1, true).unwrap();
    runner::run_gwt(&cfg, &out2, true).unwrap();
    for file in ["w.snap", "psi.snap", "diagnostics.csv"] {
        let a = std::fs::read(out1.join(file)).unwrap();
        let b = std::fs::read(out2.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn zero_final_time_reproduces_initial_data() {
    let cfg = small_config(0.0);
    let dir = tempfile::tempdir().unwrap();
    runner::run_gwt(&cfg, dir.path(), true).unwrap();
    let (w, eps, t) = load_snapshot(&dir.path().join("w.snap")).unwrap();
    assert_eq!(t, 0.0);
    assert_eq!(eps, 0.0625);
    // w0 = exp(-eta^2) on the nodes
    let grid = w.grid().clone();
    let mut eta = [0.0];
    for (j, v) in w.values().iter().enumerate() {
        grid.node_coords(j, &mut eta);
        assert!((v.re - (-eta[0] * eta[0]).exp()).abs() < 1e-15);
        assert_eq!(v.im, 0.0);
    }
    // psi.snap equals the analytic initial wave function
    let (psi, _, _) = load_snapshot(&dir.path().join("psi.snap")).unwrap();
    let data = runner::build_initial(&cfg, 0.0625).unwrap();
    let want = data.psi0_field(0.0625, psi.grid());
    for (a, b) in psi.values().iter().zip(want.values()) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn reference_snapshot_reload_is_bitwise() {
    let cfg = small_config(0.125);
    let dir = tempfile::tempdir().unwrap();
    let snap = runner::run_reference_cmd(&cfg, dir.path(), true).unwrap();
    assert!(snap.with_extension("snap.meta.toml").exists());
    let bytes1 = std::fs::read(&snap).unwrap();
    let (field, eps, t) = load_snapshot(&snap).unwrap();
    gwt_core::snapshot::save_snapshot(&snap, &field, eps, t).unwrap();
    let bytes2 = std::fs::read(&snap).unwrap();
    assert_eq!(bytes1, bytes2);
}

#[test]
fn coarse_reference_mesh_warns_but_runs() {
    // dx = 10 eps: far off the dx = O(eps) guidance; must still run
    let mut cfg = small_config(0.125);
    let eps = cfg.experiment.epsilon;
    let n = ((2.0 * std::f64::consts::PI) / (10.0 * eps)).round() as usize;
    let n = if n % 2 == 0 { n } else { n + 1 };
    cfg.x_grid.as_mut().unwrap().n = vec![n];
    let dir = tempfile::tempdir().unwrap();
    runner::run_reference_cmd(&cfg, dir.path(), false).unwrap();
}

#[test]
fn converge_time_produces_expected_table() {
    let cfg = small_config(0.25);
    let dir = tempfile::tempdir().unwrap();
    let path = runner::converge_time(&cfg, None, dir.path(), true).unwrap();
    let table = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "eps,dt,deta,scheme,abs_error,rel_error,observed_order");
    assert_eq!(lines.len(), 3);
    // halving pair: the first row carries an observed order, the last is blank
    assert!(!lines[1].ends_with(','));
    assert!(lines[2].ends_with(','));
    // errors decrease with dt
    let err = |line: &str| -> f64 { line.split(',').nth(4).unwrap().parse().unwrap() };
    assert!(err(lines[1]) > err(lines[2]));

    // single-mesh sweep: one row, empty order column
    let mut single = cfg.clone();
    single.sweep.as_mut().unwrap().dts = vec![0.0625];
    let dir2 = tempfile::tempdir().unwrap();
    let path = runner::converge_time(&single, None, dir2.path(), true).unwrap();
    let table = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].ends_with(','));
}

#[test]
fn converge_space_self_reference() {
    let mut cfg = small_config(0.25);
    cfg.sweep = Some(gwt_cli::config::SweepSection {
        eta_ns: vec![16, 32],
        reference_eta_n: Some(256),
        ..Default::default()
    });
    let dir = tempfile::tempdir().unwrap();
    let path = runner::converge_space(&cfg, None, dir.path(), true).unwrap();
    let table = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3);
    let err = |line: &str| -> f64 { line.split(',').nth(4).unwrap().parse().unwrap() };
    // spectral drop between 16 and 32 points
    assert!(err(lines[1]) > 100.0 * err(lines[2]), "{} vs {}", err(lines[1]), err(lines[2]));
}

#[test]
fn observables_series_is_written() {
    let cfg = small_config(0.25);
    let dir = tempfile::tempdir().unwrap();
    let path = runner::observables_cmd(&cfg, dir.path(), true).unwrap();
    let table = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "t,x_literal_0,x_normalized_0,mass");
    assert_eq!(lines.len(), 2 + (0.25 / 0.0625) as usize);
    // the evolved equation drops the (i eps/2)(div A) psi term, so with
    // A = sin x the mass genuinely decays at rate ~ <cos q>; it must stay
    // positive and below the initial unit mass
    let mass: f64 = lines
        .last()
        .unwrap()
        .split(',')
        .next_back()
        .unwrap()
        .parse()
        .unwrap();
    assert!(mass > 0.5 && mass < 1.0, "mass {mass}");
}
