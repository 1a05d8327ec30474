use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gridswing_cli::ScenarioFile;
use serde_json::Value;

const SMALL: &str = "model = pendulum\nbeta = 0.5\nzeta_i = 1\nzeta_ii = 1.5\ntau = 0.5\nn_max = 12\nq_max = 16\n";

struct Run {
    dir: tempfile::TempDir,
}

impl Run {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn scenario(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn gridswing(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridswing")).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) -> String {
    let out = gridswing(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    gridswing(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Data rows of a CSV document.
fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

fn comment<'a>(csv: &'a str, key: &str) -> Option<&'a str> {
    csv.lines().find_map(|l| l.strip_prefix("# ")?.strip_prefix(key)?.strip_prefix(" = "))
}

#[test]
fn both_solvers_agree_and_report_deviation() {
    let r = Run::new();
    let sc = r.scenario("a.scn", SMALL);
    let csv = run_ok(&["transient", "--scenario", s(&sc), "--solver", "both"]);
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "t,delta,delta_dot,delta_ode");
    let dev: f64 = comment(&csv, "sup_deviation").unwrap().parse().unwrap();
    assert!(dev < 1e-5, "{dev}");
    let data = rows(&csv);
    assert_eq!(data.len(), 501);
    let worst = data.iter().map(|r| (r[1] - r[3]).abs()).fold(0.0, f64::max);
    assert_eq!(worst, dev);
}

#[test]
fn output_is_deterministic_and_echo_round_trips() {
    let r = Run::new();
    let sc = r.scenario("a.scn", SMALL);
    let (a, b) = (r.path("a.csv"), r.path("b.csv"));
    run_ok(&["transient", "--scenario", s(&sc), "--out", s(&a)]);
    run_ok(&["transient", "--scenario", s(&sc), "--out", s(&b)]);
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert_eq!(comment(&text, "input_hash").unwrap().len(), 64);

    let echo: String = text.lines().filter_map(|l| l.strip_prefix("# scenario: ")).map(|l| format!("{l}\n")).collect();
    let reparsed = ScenarioFile::parse(&echo).unwrap();
    assert_eq!(reparsed, ScenarioFile::parse(SMALL).unwrap());

    let names: Vec<_> = std::fs::read_dir(r.dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 3, "stray temporary files: {names:?}");

    let other = run_ok(&["transient", "--scenario", s(&sc), "--solver", "ode"]);
    assert_ne!(comment(&other, "input_hash"), comment(&text, "input_hash"));
}

#[test]
fn equilibrium_start_gives_constant_columns() {
    let r = Run::new();
    let sc = r.scenario("eq.scn", "model = pendulum\nbeta = 0.5\nzeta_i = 1.3\nzeta_ii = 1.3\ntau = 0.4\nn_max = 4\nq_max = 4\nsamples = 50\n");
    let data = rows(&run_ok(&["transient", "--scenario", s(&sc)]));
    let d0 = (0.4f64 / 1.3).asin();
    for r in data {
        assert!((r[1] - d0).abs() < 1e-15 && r[2] == 0.0);
    }
}

#[test]
fn station_transient_settles_at_final_equilibrium() {
    let r = Run::new();
    let text: String = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../recipes/fig5_cage.scn"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("t_max") && !l.starts_with("samples"))
        .map(|l| format!("{l}\n"))
        .collect();
    let sc = r.scenario("fig5.scn", &format!("{text}n_max = 14\nq_max = 26\nt_max = 60\nsamples = 601\n"));
    let csv = run_ok(&["transient", "--scenario", s(&sc)]);
    assert_eq!(csv.lines().find(|l| !l.starts_with('#')).unwrap(), "t,delta,delta_dot,omega_gen,omega_grid");
    let data = rows(&csv);
    let target = ((std::f64::consts::FRAC_PI_3).sin() / 2.0).asin();
    let last = data.last().unwrap();
    assert!((last[1] - target).abs() < 1e-4, "{}", last[1]);
    let omega = 2.0 * std::f64::consts::PI * 50.0;
    for r in &data {
        // Inertia-weighted frequency stays at the reference: (x w_grid + w_gen) / (1 + x) with x = 2.
        assert!(((2.0 * r[4] + r[3]) / 3.0 - omega).abs() < 1e-9);
    }
}

#[test]
fn spectrum_peak_matches_characteristics() {
    let r = Run::new();
    let sc = r.scenario("f1.scn", SMALL);
    let csv = run_ok(&["spectrum", "--scenario", s(&sc)]);
    let data = rows(&csv);
    assert_eq!(data.len(), 400);
    let re: Vec<f64> = data.iter().map(|r| r[1]).collect();
    let interior_maxima = (1..re.len() - 1).filter(|&i| re[i] > re[i - 1] && re[i] >= re[i + 1]).count();
    assert_eq!(interior_maxima, 1);
    let csv_peak: f64 = comment(&csv, "omega_peak").unwrap().parse().unwrap();

    let json: Value = serde_json::from_str(&run_ok(&["characteristics", "--scenario", s(&sc)])).unwrap();
    assert_eq!(json["report"]["omega_peak"]["value"].as_f64().unwrap(), csv_peak);
    let sm = json["report"]["omega_sm"]["value"].as_f64().unwrap();
    assert!((csv_peak - sm).abs() / sm < 0.05);
}

#[test]
fn doubling_spectrum_points_keeps_shared_values() {
    let r = Run::new();
    let a = r.scenario("a.scn", &format!("{SMALL}omega_points = 11\n"));
    let b = r.scenario("b.scn", &format!("{SMALL}omega_points = 21\n"));
    let ra = rows(&run_ok(&["spectrum", "--scenario", s(&a)]));
    let rb = rows(&run_ok(&["spectrum", "--scenario", s(&b)]));
    for (k, row) in ra.iter().enumerate() {
        let twin = &rb[2 * k];
        if twin[0] == row[0] {
            assert_eq!(twin, row);
        }
    }
    assert_eq!(ra[0], rb[0]);
}

#[test]
fn characteristics_report_reasons_instead_of_failing() {
    let r = Run::new();
    let sc = r.scenario("od.scn", "model = pendulum\nbeta = 3\nzeta_i = 1\nzeta_ii = 1.5\ntau = 0.5\nn_max = 10\nq_max = 10\n");
    let json: Value = serde_json::from_str(&run_ok(&["characteristics", "--scenario", s(&sc)])).unwrap();
    let sm = &json["report"]["omega_sm"];
    assert!(sm["value"].is_null());
    assert_eq!(sm["reason"], "overdamped");
    assert_eq!(json["report"]["t_os"]["reason"], "no extremum");
}

#[test]
fn linear_limit_relaxation_time() {
    let r = Run::new();
    let sc = r.scenario("lin.scn", "model = pendulum\nbeta = 1\nzeta_i = 1\nzeta_ii = 1.01\ntau = 0.87\nn_max = 10\nq_max = 10\n");
    let json: Value = serde_json::from_str(&run_ok(&["characteristics", "--scenario", s(&sc)])).unwrap();
    let t_int = json["report"]["t_int"]["value"].as_f64().unwrap();
    assert!((t_int - 2.0).abs() < 0.2, "{t_int}");
}

#[test]
fn sweep_peak_frequency_rises_with_final_coupling() {
    let r = Run::new();
    let sc = r.scenario(
        "sw.scn",
        "model = pendulum\nbeta = 0.6\nzeta_i = 1\nzeta_ii = 1.5\ndelta_i = 1.0471975511965976\nn_max = 14\nq_max = 24\n",
    );
    let csv = run_ok(&["sweep", "--scenario", s(&sc), "--key", "zeta_ii", "--values", "1.2,1.6,2.0", "--jobs", "2"]);
    let data = rows(&csv);
    assert_eq!(data.iter().map(|r| r[0]).collect::<Vec<_>>(), vec![1.2, 1.6, 2.0]);
    assert!(data.windows(2).all(|w| w[1][3] > w[0][3]), "{data:?}");
    let serial = run_ok(&["sweep", "--scenario", s(&sc), "--key", "zeta_ii", "--values", "1.2,1.6,2.0"]);
    assert_eq!(serial, csv);
}

#[test]
fn verify_quick_passes_on_station() {
    let r = Run::new();
    let sc = r.scenario(
        "st.scn",
        "model = kuramoto\nx = 2\nk_over_jgen = 0.4\ntau_el_initial_over_jgen = 1\ntau_el_final_over_jgen = 1.2\n\
         delta_i = 0.5\nn_max = 12\nq_max = 14\nt_max = 30\nsamples = 301\n",
    );
    let json: Value = serde_json::from_str(&run_ok(&["verify", "--scenario", s(&sc)])).unwrap();
    assert_eq!(json["passed"], true);
    let names: Vec<&str> = json["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"n-body reduction, N = 3"));
    assert!(names.contains(&"eigen vs ode sup deviation"));
}

#[test]
fn verify_full_covers_inertia_grid() {
    let r = Run::new();
    let sc = r.scenario(
        "st.scn",
        "model = cage\nx = 1\nk_over_jgen = 0.3\ntau_el_initial_over_jgen = 1\ntau_el_final_over_jgen = 1.2\n\
         delta_i = 0.4\nn_max = 10\nq_max = 12\nt_max = 20\nsamples = 101\n",
    );
    let json: Value = serde_json::from_str(&run_ok(&["verify", "--scenario", s(&sc), "--level", "full"])).unwrap();
    assert_eq!(json["passed"], true, "{json:#}");
    let inf = json["checks"].as_array().unwrap().iter().find(|c| c["name"] == "cage/kuramoto coincide at x = inf").unwrap();
    assert_eq!(inf["measured"], 0.0);
}

#[test]
fn exit_codes() {
    let r = Run::new();
    let bad = r.scenario("bad.scn", "model = pendulum\nbeta = 0.5\ncolour = red\n");
    assert_eq!(code(&["transient", "--scenario", s(&bad)]), 2);
    assert_eq!(code(&["transient", "--scenario", s(&r.path("missing.scn"))]), 2);
    assert_eq!(code(&["transient"]), 2);

    let none = r.scenario("ne.scn", "model = pendulum\nbeta = 0.5\nzeta_i = 1\nzeta_ii = 0.5\ntau = 0.866\n");
    assert_eq!(code(&["transient", "--scenario", s(&none)]), 3);
    assert_eq!(code(&["spectrum", "--scenario", s(&none)]), 3);

    let q0 = r.scenario("q0.scn", &SMALL.replace("q_max = 16", "q_max = 0"));
    let out = gridswing(&["verify", "--scenario", s(&q0)]);
    assert_eq!(out.status.code(), Some(1));
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["checks"][0]["name"], "truncation precondition");
    assert_eq!(json["checks"][0]["pass"], false);
    assert_eq!(code(&["transient", "--scenario", s(&q0)]), 2);
}

#[test]
fn non_convergence_maps_to_exit_four() {
    let e = gridswing_cli::CliError::Model(gridswing::Error::NotConverged { change: 1e-6, n_max: 40, q_max: 60 });
    assert_eq!(e.exit_code(), 4);
}
