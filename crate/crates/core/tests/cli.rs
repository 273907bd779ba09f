use std::path::Path;
use std::process::Command;

use ion_cavity::cli::scan::{run_scan, SCAN_COLUMNS, SCAN_FILE, SEMICLASSICAL_FILE};
use ion_cavity::cli::RunConfig;

const SMALL: &str =
    "n_cav = 4\nn_mot = 3\neta_min = 0.5\neta_max = 2.0\neta_count = 3\nkappa = 1.0, 0.75\nhusimi_points = 61\n";

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn scan_is_reproducible_and_thread_independent() {
    let cfg = RunConfig::parse(SMALL).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_scan(&cfg, a.path(), 1).unwrap();
    run_scan(&cfg, b.path(), 3).unwrap();
    for f in [SCAN_FILE, SEMICLASSICAL_FILE] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f} differs");
    }

    // the echoed config reproduces the run
    let echoed = RunConfig::parse(&read(a.path(), "resolved_config.txt")).unwrap();
    assert_eq!(echoed, cfg);
    let c = tempfile::tempdir().unwrap();
    run_scan(&echoed, c.path(), 1).unwrap();
    assert_eq!(read(a.path(), SCAN_FILE), read(c.path(), SCAN_FILE));

    let scan = read(a.path(), SCAN_FILE);
    assert!(scan.starts_with("# schema_version=1\n"));
    let rows = data_rows(&scan);
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.len() == SCAN_COLUMNS.len() && r[19] == "true"));
}

#[test]
fn cold_and_warm_starts_agree() {
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
    for (basis, n_tol, gap_tol) in [("fock", 1e-9, 1e-7), ("displaced", 1e-4, 5e-3)] {
        // a displaced run may settle on a slightly different basis, so the
        // two agree only to the truncation error at these small cutoffs
        let warm = RunConfig::parse(&format!("{SMALL}cavity_basis = {basis}\n")).unwrap();
        let cold = RunConfig { warm_start: false, ..warm.clone() };
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ra = run_scan(&warm, a.path(), 1).unwrap().results;
        let rb = run_scan(&cold, b.path(), 2).unwrap().results;
        for (x, y) in ra.iter().zip(&rb) {
            let (dn, dg) = (rel(x.row.n_photon, y.row.n_photon), rel(x.row.gap_over_kappa, y.row.gap_over_kappa));
            assert!(dn < n_tol && dg < gap_tol, "{basis} at eta {}: n {dn:e}, gap {dg:e}", x.row.eta_scaled);
        }
    }
}

#[test]
fn dark_point_is_flagged_degenerate() {
    let cfg = RunConfig::parse("eta_min = 0\neta_max = 0\neta_count = 1\nn_cav = 3\nn_mot = 3\n").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = run_scan(&cfg, dir.path(), 1).unwrap();
    let row = &out.results[0].row;
    assert!(!row.converged);
    assert!(row.note.contains("degenerate steady state"), "{}", row.note);
    let rows = data_rows(&read(dir.path(), SCAN_FILE));
    assert_eq!(rows[0][19], "false");

    let map = RunConfig { solver: "map".parse().unwrap(), ..cfg };
    let out = run_scan(&map, dir.path(), 1).unwrap();
    assert!(out.results[0].row.note.contains("degenerate steady state"));
}

#[test]
fn failing_point_does_not_abort_the_scan() {
    // a GMRES budget of one iteration cannot converge
    let cfg =
        RunConfig::parse("n_cav = 4\nn_mot = 3\neta_count = 2\neta_max = 2\ngmres_max_iter = 1\ngap = false").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = run_scan(&cfg, dir.path(), 1).unwrap();
    assert_eq!(out.results.len(), 2);
    assert!(out.results.iter().all(|r| !r.row.converged && !r.row.note.is_empty()));
}

#[test]
fn semiclassical_table_reports_critical_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::parse("").unwrap();
    ion_cavity::cli::scan::write_semiclassical(&cfg, dir.path()).unwrap();
    let text = read(dir.path(), SEMICLASSICAL_FILE);
    assert!(text.contains("# gamma_c0=0.625\n"));
    let gcs: f64 = text.lines().find_map(|l| l.strip_prefix("# gamma_cs=")).unwrap().parse().unwrap();
    assert!((gcs - 0.310_201_619_700_7).abs() < 1e-10);
    assert!(text.contains("# transition=discontinuous"));
    assert_eq!(data_rows(&text).len(), cfg.semiclassical_count);
}

#[test]
fn husimi_dumps_have_axis_headers() {
    let cfg =
        RunConfig::parse("n_cav = 4\nn_mot = 3\neta_count = 1\nhusimi_dump = true\nhusimi_points = 21\ngap = false")
            .unwrap();
    let dir = tempfile::tempdir().unwrap();
    run_scan(&cfg, dir.path(), 1).unwrap();
    let text = read(dir.path(), "husimi_cavity_k00_e000.csv");
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 21);
    assert!(rows.iter().all(|r| r.len() == 22));
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with("im_alpha\\re_alpha,"));
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ion-cavity"))
}

#[test]
fn binary_validate_and_semiclassical() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "").unwrap();
    let out = binary().args(["validate", empty.to_str().unwrap()]).output().unwrap();
    assert!(out.status.success());
    let echo = String::from_utf8(out.stdout).unwrap();
    for line in ["C = 2.0", "c = 1.0", "x_eq = 5.0"] {
        assert!(echo.lines().any(|l| l == line), "{line}");
    }

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "C =\neta_min = 3\neta_max = 1\nwhat = 2\n").unwrap();
    let out = binary().args(["validate", bad.to_str().unwrap()]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 1: C: missing value"), "{err}");
    assert!(err.contains("line 3: eta_max: grid error"), "{err}");
    assert!(err.contains("line 4: unknown key `what`"), "{err}");

    let out_dir = dir.path().join("sc");
    let out = binary()
        .args(["semiclassical", empty.to_str().unwrap(), "--output-dir", out_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out_dir.join(SEMICLASSICAL_FILE).exists());
    assert!(out_dir.join("resolved_config.txt").exists());
}
