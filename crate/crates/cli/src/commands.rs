use std::io;

use gridswing::characteristics::{report, CharacteristicReport, Estimate};
use gridswing::eigen::{solve, solve_auto, AutoOptions, AutoStep, EigenSolution};
use gridswing::hierarchy::{assemble_blocks, Truncation};
use gridswing::mcf::{normalized_transform, spectrum, Spectrum};
use gridswing::model::angles_from_delta;
use gridswing::oracle::{integrate_nbody, integrate_pendulum, MachineSet};
use gridswing::{Error, InertiaRatio, ModelKind, PendulumParams, Trajectory};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error as ThisError;

use crate::output::{fmt, Table};
use crate::scenario::{ParseError, ScenarioFile};

const ODE_TOL: f64 = 1e-12;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("scenario: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("{failed} of {total} checks failed")]
    Verify { failed: usize, total: usize, report: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verify { .. } => 1,
            CliError::Parse(_) | CliError::Io(_) => 2,
            CliError::Model(e) => match e {
                Error::NoEquilibrium { .. } => 3,
                Error::InvalidInput(_) | Error::TruncationTooSmall { .. } | Error::DomainError(_) => 2,
                _ => 4,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Solver {
    Eigen,
    Ode,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Level {
    Quick,
    Full,
}

struct Solved {
    sol: EigenSolution,
    history: Vec<AutoStep>,
}

fn solve_eigen(sc: &ScenarioFile, params: &PendulumParams<f64>) -> CliResult<Solved> {
    match sc.fixed_truncation()? {
        Some(t) => Ok(Solved { sol: solve(&assemble_blocks(params, t)?)?, history: Vec::new() }),
        None => {
            let auto = solve_auto(params, &sc.times(), AutoOptions::default())?;
            Ok(Solved { sol: auto.solution, history: auto.history })
        }
    }
}

fn ode_trajectory(sc: &ScenarioFile, params: &PendulumParams<f64>) -> CliResult<Trajectory<f64>> {
    Ok(integrate_pendulum(params, sc.t_max, ODE_TOL)?.sample(&sc.times())?)
}

fn preamble(table: &mut Table, command: &str, hash: &str, sc: &ScenarioFile) {
    table.note(format!("gridswing {command}"));
    table.note(format!("input_hash = {hash}"));
    for line in sc.echo().lines() {
        table.note(format!("scenario: {line}"));
    }
    if let Some(st) = sc.station() {
        table.note(format!("omega_ref = {} rad/s", fmt(st.omega_ref)));
    }
}

fn describe_params(table: &mut Table, p: &PendulumParams<f64>) {
    for (k, v) in [
        ("beta", p.beta),
        ("zeta_i", p.zeta_i),
        ("zeta_ii", p.zeta_ii),
        ("tau", p.tau),
        ("delta_i", p.delta_i),
        ("delta_ii", p.delta_ii),
    ] {
        table.note(format!("{k} = {}", fmt(v)));
    }
}

fn describe_solution(table: &mut Table, s: &Solved) {
    let d = &s.sol.diagnostics;
    table.note(format!("n_max = {}", s.sol.trunc.n_max));
    table.note(format!("q_max = {}", s.sol.trunc.q_max));
    table.note(format!("modes = {} of {}", s.sol.lambdas.len(), d.dim));
    table.note(format!("dropped zero/growing = {}/{}", d.zero_modes, d.growing_modes));
    table.note(format!("max_dropped_weight = {}", fmt(d.max_dropped_weight)));
    table.note(format!("max_residual = {}", fmt(d.max_residual)));
    for step in &s.history {
        table.note(format!(
            "auto ({}, {}): change_n = {}, change_q = {}",
            step.trunc.n_max,
            step.trunc.q_max,
            fmt(step.change_n),
            fmt(step.change_q)
        ));
    }
}

pub fn transient(sc: &ScenarioFile, solver: Solver, hash: &str) -> CliResult<String> {
    let params = sc.params()?;
    let times = sc.times();
    let station = sc.station();

    let mut cols = vec!["t", "delta", "delta_dot"];
    if solver == Solver::Both {
        cols.push("delta_ode");
    }
    if station.is_some() {
        cols.extend(["omega_gen", "omega_grid"]);
    }
    let mut table = Table::new(&cols);
    preamble(&mut table, "transient", hash, sc);
    table.note(format!("solver = {solver:?}").to_lowercase());
    describe_params(&mut table, &params);

    let (primary, ode) = match solver {
        Solver::Ode => (ode_trajectory(sc, &params)?, None),
        Solver::Eigen | Solver::Both => {
            let s = solve_eigen(sc, &params)?;
            describe_solution(&mut table, &s);
            let traj = s.sol.eval(&times)?;
            let ode = if solver == Solver::Both { Some(ode_trajectory(sc, &params)?) } else { None };
            (traj, ode)
        }
    };
    let phys = station.as_ref().map(|st| angles_from_delta(st, &primary));

    for i in 0..times.len() {
        let mut row = vec![times[i], primary.delta[i], primary.delta_dot[i]];
        if let Some(o) = &ode {
            row.push(o.delta[i]);
        }
        if let Some(p) = &phys {
            row.extend([p.omega_gen[i], p.omega_grid[i]]);
        }
        table.rows.push(row);
    }
    if let Some(o) = &ode {
        table.footer.push(format!("sup_deviation = {}", fmt(primary.sup_distance(o))));
    }
    Ok(table.render())
}

fn spectrum_for(sc: &ScenarioFile, params: &PendulumParams<f64>, trunc: Truncation) -> CliResult<Spectrum> {
    Ok(spectrum(params, trunc, &sc.omegas())?)
}

pub fn spectrum_csv(sc: &ScenarioFile, hash: &str) -> CliResult<String> {
    let params = sc.params()?;
    let mut table = Table::new(&["omega", "re", "im"]);
    preamble(&mut table, "spectrum", hash, sc);
    describe_params(&mut table, &params);
    let trunc = match sc.fixed_truncation()? {
        Some(t) => t,
        None => {
            let s = solve_eigen(sc, &params)?;
            describe_solution(&mut table, &s);
            s.sol.trunc
        }
    };
    let spec = spectrum_for(sc, &params, trunc)?;
    match gridswing::characteristics::omega_peak(&spec) {
        Ok(w) => table.note(format!("omega_peak = {}", fmt(w))),
        Err(e) => table.note(format!("omega_peak = none ({e})")),
    }
    for (w, v) in spec.omegas.iter().zip(&spec.values) {
        table.rows.push(vec![*w, v.re, v.im]);
    }
    Ok(table.render())
}

fn scenario_json(sc: &ScenarioFile) -> Value {
    let map: serde_json::Map<String, Value> = sc
        .echo()
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), Value::String(v.to_string())))
        .collect();
    Value::Object(map)
}

/// Report plus the truncation actually used.
pub struct Characteristics {
    pub params: PendulumParams<f64>,
    pub trunc: Truncation,
    pub report: CharacteristicReport,
    pub spectrum_error: Option<String>,
    solved: Solved,
}

pub fn characteristics_of(sc: &ScenarioFile) -> CliResult<Characteristics> {
    let params = sc.params()?;
    let solved = solve_eigen(sc, &params)?;
    let trunc = solved.sol.trunc;
    let (spec, spectrum_error) = match spectrum_for(sc, &params, trunc) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = report(&params, &solved.sol, spec.as_ref());
    Ok(Characteristics { params, trunc, report, spectrum_error, solved })
}

pub fn characteristics_json(sc: &ScenarioFile, hash: &str) -> CliResult<String> {
    let c = characteristics_of(sc)?;
    let doc = json!({
        "command": "characteristics",
        "input_hash": hash,
        "scenario": scenario_json(sc),
        "params": c.params,
        "truncation": c.trunc,
        "diagnostics": c.solved.sol.diagnostics,
        "auto_history": c.solved.history,
        "spectrum_error": c.spectrum_error,
        "report": c.report,
    });
    Ok(serde_json::to_string_pretty(&doc).unwrap() + "\n")
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: Option<f64>,
    pub threshold: Option<f64>,
    pub pass: bool,
    pub detail: Option<String>,
}

impl Check {
    fn bound(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self { name: name.into(), measured: Some(measured), threshold: Some(threshold), pass: measured <= threshold, detail: None }
    }

    fn failed(name: impl Into<String>, e: impl ToString) -> Self {
        Self { name: name.into(), measured: None, threshold: None, pass: false, detail: Some(e.to_string()) }
    }

    fn noted(name: impl Into<String>, pass: bool, detail: impl ToString) -> Self {
        Self { name: name.into(), measured: None, threshold: None, pass, detail: Some(detail.to_string()) }
    }
}

fn nbody_check(sc: &ScenarioFile, reference: &Trajectory<f64>, n: usize) -> Check {
    let name = format!("n-body reduction, N = {n}");
    let st = sc.station().unwrap();
    let run = MachineSet::clones(&st, n)
        .and_then(|(m, step)| integrate_nbody(&m, &step, sc.t_max, ODE_TOL))
        .and_then(|r| r.sample(&sc.times()));
    match run {
        Ok(traj) => Check::bound(name, traj.sup_distance(reference), 1e-6),
        Err(e) => Check::failed(name, e),
    }
}

fn inertia_sweep(sc: &ScenarioFile) -> Vec<Check> {
    let base = sc.station().unwrap();
    let mut gaps = Vec::new();
    for x in [InertiaRatio::Finite(1.0), InertiaRatio::Finite(2.0), InertiaRatio::Finite(10.0), InertiaRatio::Infinite] {
        let cage = gridswing::StationScenario { model: ModelKind::Cage, x, ..base }.reduce();
        let kur = gridswing::StationScenario { model: ModelKind::KuramotoLike, x, ..base }.reduce();
        match (cage, kur) {
            (Ok(c), Ok(k)) => {
                let coupling = (c.zeta_i - k.zeta_i).abs() + (c.zeta_ii - k.zeta_ii).abs() + (c.tau - k.tau).abs();
                if coupling != 0.0 {
                    return vec![Check::bound("cage/kuramoto share couplings", coupling, 0.0)];
                }
                gaps.push((c.beta - k.beta).abs());
            }
            (Err(e), _) | (_, Err(e)) => return vec![Check::failed("cage/kuramoto inertia sweep", e)],
        }
    }
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    vec![
        Check::noted("cage/kuramoto damping gap shrinks with x", monotone, format!("{gaps:?}")),
        Check::bound("cage/kuramoto coincide at x = inf", gaps[3], 0.0),
    ]
}

pub fn verify_checks(sc: &ScenarioFile, level: Level) -> Vec<Check> {
    let mut checks = Vec::new();
    if let Err(e) = sc.fixed_truncation() {
        checks.push(Check::failed("truncation precondition", e));
        return checks;
    }
    checks.push(Check::noted("truncation precondition", true, "ok"));
    let params = match sc.params() {
        Ok(p) => p,
        Err(e) => {
            checks.push(Check::failed("equilibrium exists", e));
            return checks;
        }
    };
    checks.push(Check::bound("equilibrium balance", params.balance_residual().abs(), 1e-12));
    let solved = match solve_eigen(sc, &params) {
        Ok(s) => s,
        Err(e) => {
            checks.push(Check::failed("eigen-series", e));
            return checks;
        }
    };
    let sol = &solved.sol;
    checks.push(Check::bound("eigen residual", sol.diagnostics.max_residual, 1e-8));
    checks.push(Check::bound("initial angle", (sol.delta(0.0) - params.delta_i).abs(), 1e-8));
    checks.push(Check::bound("initial velocity", sol.delta_dot(0.0).abs(), 1e-8));

    let times = sc.times();
    let eigen_traj = match sol.eval(&times) {
        Ok(t) => t,
        Err(e) => {
            checks.push(Check::failed("eigen-series is real", e));
            return checks;
        }
    };
    match ode_trajectory(sc, &params) {
        Ok(ode) => checks.push(Check::bound("eigen vs ode sup deviation", eigen_traj.sup_distance(&ode), 1e-6)),
        Err(e) => checks.push(Check::failed("eigen vs ode sup deviation", e)),
    }

    if params.swing() != 0.0 {
        let herm = assemble_blocks(&params, sol.trunc).map_err(CliError::from).and_then(|blocks| {
            let mut worst = 0.0f64;
            for w in [0.05, 0.3, 1.0, 3.0, 30.0] {
                let pos = normalized_transform(Complex64::new(0.0, w), &blocks)?;
                let neg = normalized_transform(Complex64::new(0.0, -w), &blocks)?;
                worst = worst.max((pos.conj() - neg).norm() / pos.norm());
            }
            Ok(worst)
        });
        match herm {
            Ok(v) => checks.push(Check::bound("spectrum hermitian symmetry", v, 1e-12)),
            Err(e) => checks.push(Check::failed("spectrum hermitian symmetry", e)),
        }
    }

    let finite_station = sc.station().filter(|st| st.model != ModelKind::InfiniteGrid && st.x.is_finite());
    let sizes: &[usize] = match level {
        Level::Quick => &[3],
        Level::Full => &[2, 5, 11],
    };
    if finite_station.is_some() {
        for &n in sizes {
            checks.push(nbody_check(sc, &eigen_traj, n));
        }
    }

    if level == Level::Full {
        let t = sol.trunc;
        for (label, bigger) in [("n_max", (t.n_max * 3 / 2, t.q_max)), ("q_max", (t.n_max, t.q_max * 3 / 2))] {
            let name = format!("truncation convergence in {label}");
            let r = Truncation::new(bigger.0, bigger.1)
                .and_then(|tb| assemble_blocks(&params, tb))
                .and_then(|b| solve(&b))
                .and_then(|s| s.eval(&times));
            match r {
                Ok(traj) => checks.push(Check::bound(name, traj.sup_distance(&eigen_traj), 1e-7)),
                Err(e) => checks.push(Check::failed(name, e)),
            }
        }
        if sc.station().is_some() {
            checks.extend(inertia_sweep(sc));
        }
    }
    checks
}

pub fn verify_json(sc: &ScenarioFile, level: Level, hash: &str) -> CliResult<String> {
    let checks = verify_checks(sc, level);
    let failed = checks.iter().filter(|c| !c.pass).count();
    let doc = json!({
        "command": "verify",
        "level": format!("{level:?}").to_lowercase(),
        "input_hash": hash,
        "scenario": scenario_json(sc),
        "passed": failed == 0,
        "checks": checks,
    });
    let text = serde_json::to_string_pretty(&doc).unwrap() + "\n";
    if failed > 0 {
        return Err(CliError::Verify { failed, total: checks.len(), report: text });
    }
    Ok(text)
}

const SWEEP_COLUMNS: [&str; 10] = [
    "value",
    "omega_sm",
    "omega_un",
    "omega_peak",
    "t_os",
    "t_int",
    "t_int_sm",
    "t_int_un",
    "t_int_peak",
    "t_int_linear",
];

fn value_of(e: &Estimate) -> f64 {
    e.value.unwrap_or(f64::NAN)
}

/// Characteristics over one key, scenarios fanned out over `jobs` threads.
pub fn sweep_csv(sc: &ScenarioFile, key: &str, values: &[String], jobs: usize, hash: &str) -> CliResult<String> {
    let variants = values.iter().map(|v| sc.with(key, v)).collect::<Result<Vec<_>, _>>()?;
    let mut results: Vec<Option<CliResult<Characteristics>>> = (0..variants.len()).map(|_| None).collect();
    for (chunk_v, chunk_r) in variants.chunks(jobs.max(1)).zip(results.chunks_mut(jobs.max(1))) {
        std::thread::scope(|s| {
            let handles: Vec<_> = chunk_v.iter().map(|v| s.spawn(move || characteristics_of(v))).collect();
            for (slot, h) in chunk_r.iter_mut().zip(handles) {
                *slot = Some(h.join().expect("sweep worker panicked"));
            }
        });
    }

    let mut table = Table::new(&SWEEP_COLUMNS);
    preamble(&mut table, "sweep", hash, sc);
    table.note(format!("sweep key = {key}"));
    for (raw, res) in values.iter().zip(results) {
        let value = match raw.as_str() {
            "inf" | "infinite" => f64::INFINITY,
            other => other.parse().unwrap_or(f64::NAN),
        };
        match res.unwrap() {
            Ok(c) => {
                let r = &c.report;
                table.rows.push(vec![
                    value,
                    value_of(&r.omega_sm),
                    value_of(&r.omega_un),
                    value_of(&r.omega_peak),
                    value_of(&r.t_os),
                    value_of(&r.t_int),
                    value_of(&r.t_int_sm),
                    value_of(&r.t_int_un),
                    value_of(&r.t_int_peak),
                    value_of(&r.t_int_linear),
                ]);
            }
            Err(e) => {
                table.rows.push(std::iter::once(value).chain([f64::NAN; 9]).collect());
                table.footer.push(format!("{key} = {raw}: {e}"));
            }
        }
    }
    Ok(table.render())
}
