//! Characteristic frequencies and relaxation times of the rotor swing.

use std::f64::consts::PI;

use serde::Serialize;

use crate::eigen::EigenSolution;
use crate::error::{Error, Result};
use crate::mcf::Spectrum;
use crate::model::PendulumParams;
use crate::oracle::bisect;

pub use crate::special::elliptic_k;

/// Linearized frequency `sqrt(zeta_ii cos(delta_ii) - beta^2 / 4)`.
pub fn omega_small_signal(params: &PendulumParams<f64>) -> Result<f64> {
    let stiffness = params.zeta_ii * params.delta_ii.cos();
    let threshold = params.beta * params.beta / 4.0;
    if !(stiffness > threshold) {
        return Err(Error::Overdamped { stiffness, threshold });
    }
    Ok((stiffness - threshold).sqrt())
}

/// Frequency of the undamped pendulum `pi sqrt(zeta) / (2 K(sin^2(delta_0 / 2)))`.
pub fn omega_undamped(zeta: f64, delta_0: f64) -> Result<f64> {
    if !(zeta > 0.0) {
        return Err(Error::DomainError(format!("stiffness {zeta} must be positive")));
    }
    if !(0.0..PI).contains(&delta_0) {
        return Err(Error::DomainError(format!("amplitude {delta_0} outside [0, pi)")));
    }
    let m = (delta_0 / 2.0).sin().powi(2);
    Ok(PI * zeta.sqrt() / (2.0 * elliptic_k(m)?))
}

/// Location of the maximum of `Re delta~_N`, refined by a parabola in `ln omega`.
pub fn omega_peak(spec: &Spectrum) -> Result<f64> {
    let re: Vec<f64> = spec.values.iter().map(|v| v.re).collect();
    let k = re
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .ok_or_else(|| Error::InvalidInput("empty spectrum".into()))?;
    if k == 0 || k + 1 == re.len() {
        return Err(Error::PeakAtBoundary { omega: spec.omegas[k] });
    }
    let x: Vec<f64> = spec.omegas[k - 1..=k + 1].iter().map(|w| w.ln()).collect();
    let y = &re[k - 1..=k + 1];
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let curv = (d2 - d1) / (x[2] - x[0]);
    if !(curv < 0.0) {
        return Ok(spec.omegas[k]);
    }
    let vertex = 0.5 * (x[0] + x[1]) - d1 / (2.0 * curv);
    Ok(vertex.clamp(x[0], x[2]).exp())
}

/// Time scale beyond which the relaxation counts as monotone.
pub fn scan_horizon(params: &PendulumParams<f64>) -> f64 {
    if params.beta > 0.0 {
        20.0 / params.beta
    } else {
        200.0 / params.zeta_ii.sqrt()
    }
}

/// First positive maximum of the normalized angle, the first `+ -> -` sign
/// change of `delta_dot_N`, bracketed with step `pi / (8 omega_estimate)` and
/// bisected to `1e-10`.
pub fn first_maximum_time(sol: &EigenSolution, params: &PendulumParams<f64>) -> Result<f64> {
    let horizon = scan_horizon(params);
    let sign = (sol.delta_i - sol.delta_ii).signum();
    if sign == 0.0 || sol.lambdas.is_empty() {
        return Err(Error::NoExtremum { horizon });
    }
    let omega_est = omega_small_signal(params).unwrap_or_else(|_| params.zeta_ii.abs().sqrt().max(1e-3));
    let step = PI / (8.0 * omega_est);
    let vel = |t: f64| sign * sol.delta_dot(t);
    let mut a = 0.0;
    let mut va = vel(step * 1e-3);
    while a < horizon {
        let b = (a + step).min(horizon);
        let vb = vel(b);
        if va > 0.0 && vb <= 0.0 {
            return Ok(bisect(vel, a, b, 1e-10));
        }
        a = b;
        va = vb;
    }
    Err(Error::NoExtremum { horizon })
}

/// `-t_os / ln(delta_N(t_os))`.
pub fn integral_relaxation_time(sol: &EigenSolution, t_os: f64) -> Result<f64> {
    let dn = sol.delta_n(t_os)?;
    if !(dn > 0.0 && dn < 1.0) {
        return Err(Error::EnvelopeUndefined { value: dn });
    }
    Ok(-t_os / dn.ln())
}

/// Exponential envelope `q(t) = (delta_i - delta_ii) e^{-t / t_int} + delta_ii`.
pub fn envelope_q(params: &PendulumParams<f64>, t_int: f64, t: f64) -> f64 {
    params.swing() * (-t / t_int).exp() + params.delta_ii
}

/// Linear-response envelope `p(t) = (delta_i - delta_ii) e^{-beta t / 2} + delta_ii`.
pub fn envelope_p(params: &PendulumParams<f64>, t: f64) -> f64 {
    params.swing() * (-params.beta * t / 2.0).exp() + params.delta_ii
}

/// A value or the reason it does not exist, with the estimator that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub value: Option<f64>,
    pub reason: Option<String>,
    pub method: String,
}

impl Estimate {
    fn from(method: &str, r: Result<f64>) -> Self {
        match r {
            Ok(v) => Self { value: Some(v), reason: None, method: method.into() },
            Err(e) => Self { value: None, reason: Some(reason(&e)), method: method.into() },
        }
    }
}

fn reason(e: &Error) -> String {
    match e {
        Error::Overdamped { .. } => "overdamped".into(),
        Error::NoExtremum { .. } => "no extremum".into(),
        Error::EnvelopeUndefined { .. } => "envelope undefined".into(),
        Error::PeakAtBoundary { .. } => "peak at grid boundary".into(),
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacteristicReport {
    pub omega_sm: Estimate,
    pub omega_un: Estimate,
    pub omega_peak: Estimate,
    /// Exact first-maximum time of the series.
    pub t_os: Estimate,
    /// `2 pi / omega_sm`.
    pub t_os_linear: Estimate,
    /// Relaxation time from the exact first maximum.
    pub t_int: Estimate,
    /// Relaxation time probed at `2 pi / omega` for each frequency estimator.
    pub t_int_sm: Estimate,
    pub t_int_un: Estimate,
    pub t_int_peak: Estimate,
    /// `2 / beta`.
    pub t_int_linear: Estimate,
    /// Swing amplitude `|delta_i - delta_ii|` used for `omega_un`.
    pub delta_0: f64,
}

fn period(omega: &Estimate) -> Result<f64> {
    match omega.value {
        Some(w) => Ok(2.0 * PI / w),
        None => Err(Error::InvalidInput(omega.reason.clone().unwrap_or_default())),
    }
}

/// Collects every estimator; failures become `None` with a reason.
pub fn report(params: &PendulumParams<f64>, sol: &EigenSolution, spec: Option<&Spectrum>) -> CharacteristicReport {
    let delta_0 = params.swing().abs();
    let omega_sm = Estimate::from("small-signal", omega_small_signal(params));
    let stiffness = params.zeta_ii * params.delta_ii.cos();
    let omega_un = Estimate::from("elliptic", omega_undamped(stiffness, delta_0));
    let omega_peak = match spec {
        Some(s) => Estimate::from("spectral peak", omega_peak(s)),
        None => Estimate { value: None, reason: Some("no spectrum".into()), method: "spectral peak".into() },
    };
    let t_os_r = first_maximum_time(sol, params);
    let t_int = Estimate::from("exact first maximum", t_os_r.clone().and_then(|t| integral_relaxation_time(sol, t)));
    let probe = |w: &Estimate, m: &str| Estimate::from(m, period(w).and_then(|t| integral_relaxation_time(sol, t)));
    let t_int_linear = if params.beta > 0.0 {
        Estimate::from("linear", Ok(2.0 / params.beta))
    } else {
        Estimate { value: None, reason: Some("undamped".into()), method: "linear".into() }
    };
    CharacteristicReport {
        t_os: Estimate::from("exact first maximum", t_os_r),
        t_os_linear: Estimate::from("small-signal", period(&omega_sm).map_err(|_| Error::Overdamped {
            stiffness,
            threshold: params.beta * params.beta / 4.0,
        })),
        t_int_sm: probe(&omega_sm, "small-signal"),
        t_int_un: probe(&omega_un, "elliptic"),
        t_int_peak: probe(&omega_peak, "spectral peak"),
        omega_sm,
        omega_un,
        omega_peak,
        t_int,
        t_int_linear,
        delta_0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{solve, Diagnostics};
    use crate::hierarchy::Truncation;
    use num_complex::Complex64;

    #[test]
    fn small_signal_values() {
        let p = PendulumParams::new(0.0, 1.0, 1.0, 0.0).unwrap();
        assert!((omega_small_signal(&p).unwrap() - 1.0).abs() < 1e-15);
        let p = PendulumParams::new(0.5, 1.0, 1.5, 0.5).unwrap();
        let expect = (1.5 * (1.0f64 - 1.0 / 9.0).sqrt() - 0.0625).sqrt();
        assert!((omega_small_signal(&p).unwrap() - expect).abs() < 1e-14);
        assert!((omega_small_signal(&p).unwrap() - 1.1626).abs() < 1e-4);
        let p = PendulumParams::new(2.0, 1.0, 1.0, 0.0).unwrap();
        assert!(matches!(omega_small_signal(&p), Err(Error::Overdamped { .. })));
    }

    #[test]
    fn undamped_frequency() {
        assert!((omega_undamped(1.0, 1e-9).unwrap() - 1.0).abs() < 1e-12);
        assert!((omega_undamped(4.0, 0.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((omega_undamped(1.0, PI / 2.0).unwrap() - 0.84721).abs() < 1e-5);
        assert!(omega_undamped(1.0, PI).is_err());
        let mut last = f64::INFINITY;
        for k in 0..30 {
            let w = omega_undamped(1.0, k as f64 * 0.1).unwrap();
            assert!(w < last);
            last = w;
        }
    }

    #[test]
    fn exponential_probe_recovers_time_constant() {
        let tau_c = 2.7;
        let sol = EigenSolution {
            lambdas: vec![Complex64::new(1.0 / tau_c, 0.0)],
            c: vec![Complex64::new(0.4, 0.0)],
            d: vec![Complex64::new(-0.4 / tau_c, 0.0)],
            delta_i: 0.9,
            delta_ii: 0.5,
            trunc: Truncation { n_max: 2, q_max: 1 },
            diagnostics: Diagnostics::default(),
        };
        for t in [0.3, 1.0, 5.0] {
            assert!((integral_relaxation_time(&sol, t).unwrap() - tau_c).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_angles_have_no_extremum() {
        let p = PendulumParams::new(0.4, 1.3, 1.3, 0.5).unwrap();
        let sol = solve(&crate::hierarchy::assemble_blocks(&p, Truncation::new(4, 4).unwrap()).unwrap()).unwrap();
        assert!(matches!(first_maximum_time(&sol, &p), Err(Error::NoExtremum { .. })));
    }
}
