//! Flat `key = value` scenario files.
//!
//! Everything after `#` is a comment and blank lines are ignored. Every key may appear
//! once; unknown keys are rejected. Numbers are written back with 17
//! significant digits so an echo re-parses to the same value.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use gridswing::hierarchy::Truncation;
use gridswing::trajectory::{log_grid, uniform_grid};
use gridswing::{InertiaRatio, ModelKind, PendulumParams, StationScenario};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("key `{key}`: cannot read `{value}`")]
    BadValue { key: String, value: String },
    #[error("exactly one of `{0}` and `{1}` must be given")]
    Initialization(&'static str, &'static str),
    #[error("`n_max` and `q_max` must both be numbers or both be `auto`")]
    MixedTruncation,
}

/// How the initial state is pinned down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Initial {
    /// Pendulum torque `tau`, or the generator torque ratio for a station.
    Torque(f64),
    /// Initial rotor angle.
    Angle(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Setup {
    Pendulum {
        beta: f64,
        zeta_i: f64,
        zeta_ii: f64,
        initial: Initial,
    },
    Station {
        model: ModelKind,
        omega_ref_hz: f64,
        x: InertiaRatio<f64>,
        k_over_jgen: f64,
        tau_el_initial_over_jgen: f64,
        tau_el_final_over_jgen: f64,
        initial: Initial,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationChoice {
    Auto,
    Fixed { n_max: usize, q_max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioFile {
    pub setup: Setup,
    pub t_max: f64,
    pub samples: usize,
    pub truncation: TruncationChoice,
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_points: usize,
}

const COMMON: [&str; 7] = ["t_max", "samples", "n_max", "q_max", "omega_min", "omega_max", "omega_points"];
const PENDULUM: [&str; 5] = ["beta", "zeta_i", "zeta_ii", "tau", "delta_i"];
const STATION: [&str; 7] = [
    "omega_ref_hz",
    "x",
    "k_over_jgen",
    "tau_gen_over_jgen",
    "tau_el_initial_over_jgen",
    "tau_el_final_over_jgen",
    "delta_i",
];

struct Fields(BTreeMap<String, String>);

impl Fields {
    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn float(&mut self, key: &str) -> Result<Option<f64>, ParseError> {
        self.take(key).map(|v| parse_float(key, &v)).transpose()
    }

    fn float_or(&mut self, key: &str, default: f64) -> Result<f64, ParseError> {
        Ok(self.float(key)?.unwrap_or(default))
    }

    fn require(&mut self, key: &str) -> Result<f64, ParseError> {
        self.float(key)?.ok_or_else(|| ParseError::Missing(key.into()))
    }

    fn count(&mut self, key: &str, default: usize) -> Result<usize, ParseError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| bad(key, &v)),
        }
    }

    fn initial(&mut self, torque: &'static str) -> Result<Initial, ParseError> {
        match (self.float(torque)?, self.float("delta_i")?) {
            (Some(t), None) => Ok(Initial::Torque(t)),
            (None, Some(d)) => Ok(Initial::Angle(d)),
            _ => Err(ParseError::Initialization(torque, "delta_i")),
        }
    }
}

fn bad(key: &str, value: &str) -> ParseError {
    ParseError::BadValue { key: key.into(), value: value.into() }
}

fn parse_float(key: &str, value: &str) -> Result<f64, ParseError> {
    match value {
        "inf" | "infinite" => Ok(f64::INFINITY),
        _ => value.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad(key, value)),
    }
}

fn model_name(model: Option<ModelKind>) -> &'static str {
    match model {
        None => "pendulum",
        Some(ModelKind::KuramotoLike) => "kuramoto",
        Some(ModelKind::Cage) => "cage",
        Some(ModelKind::InfiniteGrid) => "infinite",
    }
}

fn num(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.16e}")
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ParseError::Syntax { line: i + 1 })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(ParseError::Syntax { line: i + 1 });
            }
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ParseError::Duplicate { line: i + 1, key: k.into() });
            }
        }
        let mut f = Fields(map);

        let model = f.take("model").ok_or_else(|| ParseError::Missing("model".into()))?;
        let kind = match model.as_str() {
            "pendulum" => None,
            "kuramoto" => Some(ModelKind::KuramotoLike),
            "cage" => Some(ModelKind::Cage),
            "infinite" => Some(ModelKind::InfiniteGrid),
            other => return Err(bad("model", other)),
        };
        let allowed: &[&str] = if kind.is_some() { &STATION } else { &PENDULUM };
        if let Some(k) = f.0.keys().find(|k| !allowed.contains(&k.as_str()) && !COMMON.contains(&k.as_str())) {
            return Err(ParseError::UnknownKey(k.clone()));
        }

        let setup = match kind {
            None => Setup::Pendulum {
                beta: f.require("beta")?,
                zeta_i: f.require("zeta_i")?,
                zeta_ii: f.require("zeta_ii")?,
                initial: f.initial("tau")?,
            },
            Some(model) => {
                let x = match (model, f.float("x")?) {
                    (ModelKind::InfiniteGrid, None) => InertiaRatio::Infinite,
                    (_, Some(x)) if x.is_infinite() => InertiaRatio::Infinite,
                    (_, Some(x)) => InertiaRatio::Finite(x),
                    (_, None) => return Err(ParseError::Missing("x".into())),
                };
                Setup::Station {
                    model,
                    omega_ref_hz: f.float_or("omega_ref_hz", 50.0)?,
                    x,
                    k_over_jgen: f.require("k_over_jgen")?,
                    tau_el_initial_over_jgen: f.require("tau_el_initial_over_jgen")?,
                    tau_el_final_over_jgen: f.require("tau_el_final_over_jgen")?,
                    initial: f.initial("tau_gen_over_jgen")?,
                }
            }
        };

        let truncation = match (f.take("n_max"), f.take("q_max")) {
            (None, None) => TruncationChoice::Auto,
            (Some(n), Some(q)) if n == "auto" && q == "auto" => TruncationChoice::Auto,
            (Some(n), Some(q)) if n != "auto" && q != "auto" => TruncationChoice::Fixed {
                n_max: n.parse().map_err(|_| bad("n_max", &n))?,
                q_max: q.parse().map_err(|_| bad("q_max", &q))?,
            },
            _ => return Err(ParseError::MixedTruncation),
        };

        let scenario = Self {
            setup,
            t_max: f.float_or("t_max", 50.0)?,
            samples: f.count("samples", 501)?,
            truncation,
            omega_min: f.float_or("omega_min", 1e-2)?,
            omega_max: f.float_or("omega_max", 1e2)?,
            omega_points: f.count("omega_points", 400)?,
        };
        debug_assert!(f.0.is_empty());
        scenario.check_ranges()?;
        Ok(scenario)
    }

    fn check_ranges(&self) -> Result<(), ParseError> {
        if !(self.t_max > 0.0) || self.t_max.is_infinite() {
            return Err(bad("t_max", &num(self.t_max)));
        }
        if self.samples < 2 {
            return Err(bad("samples", &self.samples.to_string()));
        }
        if !(self.omega_min > 0.0 && self.omega_max > self.omega_min) || self.omega_max.is_infinite() {
            return Err(bad("omega_max", &num(self.omega_max)));
        }
        if self.omega_points < 3 {
            return Err(bad("omega_points", &self.omega_points.to_string()));
        }
        Ok(())
    }

    /// Canonical text form: every key, fixed order, lossless numbers.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
        match self.setup {
            Setup::Pendulum { beta, zeta_i, zeta_ii, initial } => {
                put("model", "pendulum".into());
                put("beta", num(beta));
                put("zeta_i", num(zeta_i));
                put("zeta_ii", num(zeta_ii));
                match initial {
                    Initial::Torque(t) => put("tau", num(t)),
                    Initial::Angle(d) => put("delta_i", num(d)),
                }
            }
            Setup::Station {
                model,
                omega_ref_hz,
                x,
                k_over_jgen,
                tau_el_initial_over_jgen,
                tau_el_final_over_jgen,
                initial,
            } => {
                put("model", model_name(Some(model)).into());
                put("omega_ref_hz", num(omega_ref_hz));
                put(
                    "x",
                    match x {
                        InertiaRatio::Finite(v) => num(v),
                        InertiaRatio::Infinite => "inf".into(),
                    },
                );
                put("k_over_jgen", num(k_over_jgen));
                put("tau_el_initial_over_jgen", num(tau_el_initial_over_jgen));
                put("tau_el_final_over_jgen", num(tau_el_final_over_jgen));
                match initial {
                    Initial::Torque(t) => put("tau_gen_over_jgen", num(t)),
                    Initial::Angle(d) => put("delta_i", num(d)),
                }
            }
        }
        put("t_max", num(self.t_max));
        put("samples", self.samples.to_string());
        match self.truncation {
            TruncationChoice::Auto => {
                put("n_max", "auto".into());
                put("q_max", "auto".into());
            }
            TruncationChoice::Fixed { n_max, q_max } => {
                put("n_max", n_max.to_string());
                put("q_max", q_max.to_string());
            }
        }
        put("omega_min", num(self.omega_min));
        put("omega_max", num(self.omega_max));
        put("omega_points", self.omega_points.to_string());
        out
    }

    /// Replaces one key, re-validating through the parser.
    pub fn with(&self, key: &str, value: &str) -> Result<Self, ParseError> {
        let mut lines: Vec<String> = self
            .echo()
            .lines()
            .filter(|l| l.split_once('=').map(|(k, _)| k.trim()) != Some(key))
            .map(String::from)
            .collect();
        let swaps: &[(&str, &str)] = &[("tau", "delta_i"), ("tau_gen_over_jgen", "delta_i")];
        for (a, b) in swaps {
            let other = if key == *a { Some(*b) } else if key == *b { Some(*a) } else { None };
            if let Some(o) = other {
                lines.retain(|l| l.split_once('=').map(|(k, _)| k.trim()) != Some(o));
            }
        }
        lines.push(format!("{key} = {value}"));
        Self::parse(&lines.join("\n"))
    }

    pub fn model_label(&self) -> &'static str {
        match self.setup {
            Setup::Pendulum { .. } => model_name(None),
            Setup::Station { model, .. } => model_name(Some(model)),
        }
    }

    /// Station description, `None` in pendulum mode.
    pub fn station(&self) -> Option<StationScenario<f64>> {
        match self.setup {
            Setup::Pendulum { .. } => None,
            Setup::Station {
                model,
                omega_ref_hz,
                x,
                k_over_jgen,
                tau_el_initial_over_jgen,
                tau_el_final_over_jgen,
                initial,
            } => Some(StationScenario {
                model,
                omega_ref: 2.0 * PI * omega_ref_hz,
                j_gen: 1.0,
                x,
                k_over_jgen,
                tau_gen_over_jgen: match initial {
                    Initial::Torque(t) => t,
                    Initial::Angle(d) => StationScenario::tau_gen_for_initial_angle(tau_el_initial_over_jgen, d),
                },
                tau_el_initial_over_jgen,
                tau_el_final_over_jgen,
            }),
        }
    }

    pub fn params(&self) -> gridswing::Result<PendulumParams<f64>> {
        match self.setup {
            Setup::Pendulum { beta, zeta_i, zeta_ii, initial } => match initial {
                Initial::Torque(t) => PendulumParams::new(beta, zeta_i, zeta_ii, t),
                Initial::Angle(d) => PendulumParams::from_initial_angle(beta, zeta_i, zeta_ii, d),
            },
            Setup::Station { .. } => self.station().unwrap().reduce(),
        }
    }

    pub fn fixed_truncation(&self) -> gridswing::Result<Option<Truncation>> {
        match self.truncation {
            TruncationChoice::Auto => Ok(None),
            TruncationChoice::Fixed { n_max, q_max } => Truncation::new(n_max, q_max).map(Some),
        }
    }

    pub fn times(&self) -> Vec<f64> {
        uniform_grid(self.t_max, self.samples)
    }

    pub fn omegas(&self) -> Vec<f64> {
        log_grid(self.omega_min, self.omega_max, self.omega_points)
    }
}
