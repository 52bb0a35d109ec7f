use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn biphoton(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biphoton"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn read_summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

const SMALL: &str = "\
butterfly.gamma_signal = 1 Gamma
butterfly.gamma_idler = 1 Gamma
butterfly.omega_drive = 0.1 Gamma
butterfly.omega_couple = 100 Gamma
butterfly.atom_number = 1e6
butterfly.radius = 50 lambda
grid.rings = 30
integration.t_end = 3 Gamma^-1
integration.samples = 31
";

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.conf");
    fs::write(&path, format!("{SMALL}{extra}")).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_writes_its_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let o = biphoton(&["simulate", "--preset", "fig2", "--rings", "40"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let listed = String::from_utf8(o.stdout).unwrap();
    for f in ["trajectory.csv", "grid.csv", "summary.json"] {
        assert!(tmp.path().join(f).exists(), "{f}");
        assert!(listed.contains(f));
    }
    assert!(header(&tmp.path().join("trajectory.csv")).starts_with("t,"));
    assert_eq!(read_summary(tmp.path())["status"], "ok");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = write_config(a.path(), "");
    for d in [a.path(), b.path()] {
        assert_eq!(code(&biphoton(&["simulate", "--config", &cfg], d)), 0);
    }
    for f in ["trajectory.csv", "grid.csv", "summary.json"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn threads_do_not_change_output() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = write_config(a.path(), "");
    assert_eq!(code(&biphoton(&["simulate", "--config", &cfg], a.path())), 0);
    assert_eq!(
        code(&biphoton(&["simulate", "--config", &cfg, "--threads", "3"], b.path())),
        0
    );
    assert_eq!(
        fs::read(a.path().join("trajectory.csv")).unwrap(),
        fs::read(b.path().join("trajectory.csv")).unwrap()
    );
}

#[test]
fn g2_starts_at_exactly_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = biphoton(&["g2", "--preset", "fig2", "--rings", "40"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("g2.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("tau,g2"));
    let (tau, g) = lines.next().unwrap().split_once(',').unwrap();
    assert_eq!(tau.parse::<f64>().unwrap(), 0.0);
    assert_eq!(g.parse::<f64>().unwrap(), 1.0);
}

#[test]
fn steady_and_polarization_headers() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&biphoton(&["steady", "--preset", "fig2", "--rings", "20"], tmp.path())),
        0
    );
    assert_eq!(
        header(&tmp.path().join("steady.csv")),
        "theta_center,weight,Nk3,Nk4,closure"
    );
    assert_eq!(code(&biphoton(&["polarization", "--preset", "fig2"], tmp.path())), 0);
    assert_eq!(
        header(&tmp.path().join("polarization.csv")),
        "theta,betaL,betaR,P,fidelity"
    );
}

#[test]
fn silver_reduce_reports_effective_rabi_frequencies() {
    let tmp = tempfile::tempdir().unwrap();
    let o = biphoton(&["silver-reduce", "--preset", "silver-paper"], tmp.path());
    assert_eq!(code(&o), 0);
    let summary = read_summary(tmp.path());
    let red = &summary["result"]["reduction"];
    assert!((red["omega_drive_eff_ghz"].as_f64().unwrap() - 0.01875).abs() < 1e-15);
    assert!((red["omega_couple_eff_ghz"].as_f64().unwrap() - 0.1875).abs() < 1e-15);
    // the coupler falls short of the strong-coupling threshold
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let strict = biphoton(&["silver-reduce", "--preset", "silver-paper", "--strict"], tmp.path());
    assert_eq!(code(&strict), 6);
}

#[test]
fn bad_configs_exit_with_status_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "butterfly.omega_drvie = 0.2 Gamma\n");
    let o = biphoton(&["simulate", "--config", &cfg], tmp.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("omega_drvie"));
    let summary = fs::read_to_string(tmp.path().join("summary.json"));
    // parsing fails before any run starts, so no summary is written
    assert!(summary.is_err());

    let cfg = write_config(tmp.path(), "butterfly.radius = 0.2 lambda\n");
    let o = biphoton(&["simulate", "--config", &cfg], tmp.path());
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));

    let o = biphoton(&["simulate", "--preset", "nope"], tmp.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn usage_errors_exit_with_status_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&biphoton(&["simulate"], tmp.path())), 2);
    assert_eq!(
        code(&biphoton(
            &["simulate", "--preset", "fig2", "--threads", "0"],
            tmp.path()
        )),
        2
    );
    assert_eq!(code(&biphoton(&["frobnicate"], tmp.path())), 2);
}

fn sweep_rows(dir: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(dir.join("sweep.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn sweep_over_drive_strength() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "sweep.parameter = butterfly.omega_drive\nsweep.start = 0.05 Gamma\nsweep.stop = 0.2 Gamma\nsweep.steps = 3\n",
    );
    let o = biphoton(&["sweep", "--config", &cfg, "--threads", "2"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = sweep_rows(tmp.path());
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[1] == "ok"));
    let rates: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(rates[0] < rates[1] && rates[1] < rates[2], "{rates:?}");
}

#[test]
fn strong_drive_is_flagged_in_a_strict_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "sweep.parameter = butterfly.omega_drive\nsweep.start = 10 Gamma\nsweep.stop = 10 Gamma\nsweep.steps = 1\n",
    );
    let o = biphoton(&["sweep", "--config", &cfg, "--strict"], tmp.path());
    assert_eq!(code(&o), 6);
    let rows = sweep_rows(tmp.path());
    assert_eq!(rows[0][1], "regime-warning");
    assert_eq!(rows[0][7], "false");
}
