use std::fs;
use std::process::Command;

use plastdam::io::{execute, parse_config, vtk_snapshot, Manifest, RunConfig, CSV_HEADER};
use plastdam::fields::{LoadProgram, Model, State};
use plastdam::material::MaterialParams;
use plastdam::mesh::Variant;
use plastdam::Error;
use proptest::prelude::*;

fn small_config(dir: &std::path::Path) -> RunConfig {
    let mut c = RunConfig::preset(Variant::Asymmetric);
    c.n_sub = 6;
    c.out_dir = dir.to_path_buf();
    c
}

#[test]
fn csv_header_is_fixed() {
    assert_eq!(
        CSV_HEADER,
        "t,avg_von_mises,energy,diss_plast_cum,diss_dam_cum,amdp_step,amdp_cum"
    );
}

#[test]
fn full_run_writes_one_row_per_step_and_is_reproducible() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut c = small_config(d1.path());
    c.snapshot_every = 40;
    let out = execute(&c).unwrap();
    let text = fs::read_to_string(&out.csv).unwrap();
    assert_eq!(text.lines().count(), 81);
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    assert!(text.lines().skip(1).all(|l| l.split(',').count() == 7));
    assert_eq!(out.snapshots.len(), 2);

    c.out_dir = d2.path().to_path_buf();
    execute(&c).unwrap();
    let again = fs::read(d2.path().join("timeseries.csv")).unwrap();
    assert_eq!(again, text.as_bytes());
    for name in ["snapshot_00040.vtk", "snapshot_00080.vtk"] {
        assert_eq!(
            fs::read(d1.path().join(name)).unwrap(),
            fs::read(d2.path().join(name)).unwrap()
        );
    }

    let m = Manifest::from_json(&fs::read_to_string(d1.path().join("manifest.json")).unwrap()).unwrap();
    let mut expected = c.clone();
    expected.out_dir = d1.path().to_path_buf();
    assert_eq!(m.config, expected);
    assert_eq!(m.n_steps, 80);
}

#[test]
fn zero_load_run_has_zero_columns() {
    let d = tempfile::tempdir().unwrap();
    let mut c = small_config(d.path());
    c.load.ramp_rate = 0.0;
    c.load.t_end = 10.0;
    let out = execute(&c).unwrap();
    let text = fs::read_to_string(&out.csv).unwrap();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert!(cols[1..].iter().all(|v| v.parse::<f64>().unwrap() == 0.0), "{line}");
    }
    let snap = fs::read_to_string(&out.snapshots[0]).unwrap();
    assert!(snap.contains("CELL_DATA 144"));
}

#[test]
fn paper_step_counts() {
    let c = parse_config("tau = 0.1").unwrap();
    assert_eq!(c.n_steps().unwrap(), 800);
    let c = parse_config("tau = 0.01").unwrap();
    assert_eq!(c.n_steps().unwrap(), 8000);
    assert_eq!(parse_config("").unwrap().n_steps().unwrap(), 80);
    assert!(matches!(parse_config("tau = 0.3"), Err(Error::Config { key, .. }) if key == "tau"));
}

#[test]
fn vtk_declares_mesh_sizes() {
    for n in [1, 2, 3, 7] {
        let m = Model::tension(n, MaterialParams::reference(), LoadProgram::reference(Variant::Symmetric)).unwrap();
        let s = State::virgin(&m.mesh);
        let text = vtk_snapshot(&m, &s, &vec![0.0; m.mesh.n_elements()], 0, 0.0).unwrap();
        assert!(text.contains(&format!("POINTS {} double", m.mesh.n_nodes())));
        assert!(text.contains(&format!("CELLS {} {}", 4 * n * n, 16 * n * n)));
        assert!(text.contains(&format!("CELL_DATA {}", 4 * n * n)));
        let cells = text.lines().filter(|l| l.starts_with("3 ")).count();
        assert_eq!(cells, 4 * n * n);
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_plastdam"))
}

#[test]
fn cli_run_and_errors() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.cfg");
    fs::write(&cfg, "preset = symmetric\nn_sub = 4\nt_end = 2\n").unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("tau=0.5")
        .arg("--out")
        .arg(d.path().join("o"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(d.path().join("o/timeseries.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let m = Manifest::from_json(&fs::read_to_string(d.path().join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!((m.config.n_sub, m.config.load.variant), (4, Variant::Symmetric));

    let bad = bin().args(["run", "--n-sub", "25"]).output().unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("n_sub"));

    let info = bin().args(["mesh-info", "--n-sub", "24"]).output().unwrap();
    let text = String::from_utf8_lossy(&info.stdout);
    assert!(text.contains("1201") && text.contains("2304"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_text_round_trips(
        sym in any::<bool>(),
        sigma in 1e5..1e8f64,
        a in 1.0..1e4f64,
        kappa in 1e-6..1.0f64,
        steps in 1usize..2000,
        n6 in 1usize..6,
        every in 0usize..50,
    ) {
        let mut c = RunConfig::preset(if sym { Variant::Symmetric } else { Variant::Asymmetric });
        c.params.sigma_y = sigma;
        c.params.a = a;
        c.params.b = 1e6 * a;
        c.params.kappa2 = kappa;
        c.load.tau = 80.0 / steps as f64;
        c.n_sub = 6 * n6;
        c.snapshot_every = every;
        if c.validate().is_ok() {
            prop_assert_eq!(parse_config(&c.to_config_text()).unwrap(), c.clone());
            let m = Manifest::new(&c).unwrap();
            prop_assert_eq!(Manifest::from_json(&m.to_json().unwrap()).unwrap(), m);
        }
    }
}
