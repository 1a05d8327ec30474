//! Station scenarios and their reduction to a driven damped pendulum.
//!
//! The rotor angle is `delta = theta_grid - theta_gen`. With that convention the
//! reduced torque is `tau = -(tau_gen / J_gen)(1 + 1/x)` and every equilibrium
//! satisfies `zeta * sin(delta_eq) = tau`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::trajectory::Trajectory;

/// Damping law of the coupled-oscillator model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// Damping proportional to the deviation from the reference frequency.
    KuramotoLike,
    /// Damping proportional to the frequency difference between machines.
    Cage,
    /// Grid of unbounded inertia; `x` is ignored.
    InfiniteGrid,
}

/// Grid-to-generator inertia ratio `J_grid / J_gen`.
///
/// `Infinite` is a sentinel rather than a large float so that every `1/x`
/// term vanishes exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InertiaRatio<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> InertiaRatio<T> {
    /// `1/x`, exactly zero for the infinite grid.
    pub fn reciprocal(self) -> T {
        match self {
            InertiaRatio::Finite(x) => x.recip(),
            InertiaRatio::Infinite => T::zero(),
        }
    }

    /// `1 + 1/x`
    pub fn reduction_factor(self) -> T {
        T::one() + self.reciprocal()
    }

    /// Share of the rotor angle carried by the grid, `J_gen / (J_grid + J_gen) = 1/(1+x)`.
    pub fn grid_share(self) -> T {
        match self {
            InertiaRatio::Finite(x) => (T::one() + x).recip(),
            InertiaRatio::Infinite => T::zero(),
        }
    }

    /// Share carried by the generator, `J_grid / (J_grid + J_gen) = x/(1+x)`.
    pub fn generator_share(self) -> T {
        match self {
            InertiaRatio::Finite(x) => x / (T::one() + x),
            InertiaRatio::Infinite => T::one(),
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, InertiaRatio::Finite(_))
    }
}

/// Which side of the coupling step a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Initial,
    Final,
}

/// Physical description of a generator tied to an aggregate grid.
///
/// All torque and damping inputs are given per unit generator inertia.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationScenario<T> {
    pub model: ModelKind,
    /// Reference angular frequency `Omega = 2 pi f` [rad/s].
    pub omega_ref: T,
    /// Generator inertia [kg m^2].
    pub j_gen: T,
    pub x: InertiaRatio<T>,
    /// `K^K / J_gen` or `K^C / J_gen` [1/s].
    pub k_over_jgen: T,
    /// `tau_gen / J_gen` [1/s^2].
    pub tau_gen_over_jgen: T,
    /// `tau_el^I / J_gen` [1/s^2].
    pub tau_el_initial_over_jgen: T,
    /// `tau_el^II / J_gen` [1/s^2].
    pub tau_el_final_over_jgen: T,
}

impl<T: Real> StationScenario<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(msg.to_string()));
        if let InertiaRatio::Finite(x) = self.x {
            if !(x > T::zero()) || !x.is_finite() {
                return bad("inertia ratio x must be positive");
            }
        }
        if !(self.j_gen > T::zero()) {
            return bad("generator inertia must be positive");
        }
        if !(self.k_over_jgen >= T::zero()) {
            return bad("damping ratio must be non-negative");
        }
        if !(self.tau_el_initial_over_jgen > T::zero()) || !(self.tau_el_final_over_jgen > T::zero()) {
            return bad("coupling ratios must be positive");
        }
        if !self.omega_ref.is_finite() || !self.tau_gen_over_jgen.is_finite() {
            return bad("non-finite frequency or torque");
        }
        Ok(())
    }

    /// Inertia ratio seen by the reduction: the infinite-grid model ignores `x`.
    pub fn effective_ratio(&self) -> InertiaRatio<T> {
        match self.model {
            ModelKind::InfiniteGrid => InertiaRatio::Infinite,
            _ => self.x,
        }
    }

    /// `J_grid = x J_gen`, or `None` for the infinite grid.
    pub fn j_grid(&self) -> Option<T> {
        match self.effective_ratio() {
            InertiaRatio::Finite(x) => Some(x * self.j_gen),
            InertiaRatio::Infinite => None,
        }
    }

    /// Reduced damping `beta`.
    pub fn beta(&self) -> T {
        match self.model {
            ModelKind::KuramotoLike | ModelKind::InfiniteGrid => self.k_over_jgen,
            ModelKind::Cage => self.k_over_jgen * self.effective_ratio().reduction_factor(),
        }
    }

    /// Reduced coupling `zeta = (tau_el / J_gen)(1 + 1/x)` for the given phase.
    pub fn zeta(&self, phase: Phase) -> T {
        let tau_el = match phase {
            Phase::Initial => self.tau_el_initial_over_jgen,
            Phase::Final => self.tau_el_final_over_jgen,
        };
        tau_el * self.effective_ratio().reduction_factor()
    }

    /// Reduced torque `tau = -(tau_gen / J_gen)(1 + 1/x)`.
    pub fn tau(&self) -> T {
        -self.tau_gen_over_jgen * self.effective_ratio().reduction_factor()
    }

    /// Two-body reduction to the pendulum parameters.
    pub fn reduce(&self) -> Result<PendulumParams<T>> {
        self.validate()?;
        PendulumParams::new(self.beta(), self.zeta(Phase::Initial), self.zeta(Phase::Final), self.tau())
    }

    /// Generator torque that puts the initial state at rotor angle `delta_i`.
    pub fn tau_gen_for_initial_angle(tau_el_initial_over_jgen: T, delta_i: T) -> T {
        -tau_el_initial_over_jgen * delta_i.sin()
    }
}

/// Stable equilibrium angle of a pendulum with the given torque/coupling pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium<T> {
    pub angle: T,
    /// `|torque/coupling| == 1`: the fixed point is a saddle-node.
    pub marginal: bool,
}

/// `arcsin(torque / coupling)` on the stable branch `[-pi/2, pi/2]`.
pub fn equilibrium_angle<T: Real>(torque: T, coupling: T) -> Result<Equilibrium<T>> {
    if !(coupling > T::zero()) {
        return Err(Error::InvalidInput("coupling must be positive".into()));
    }
    let ratio = torque / coupling;
    if ratio.abs() > T::one() {
        return Err(Error::NoEquilibrium { ratio: ratio.to_f64_lossless() });
    }
    Ok(Equilibrium { angle: ratio.asin(), marginal: ratio.abs() == T::one() })
}

/// Reduced driven damped pendulum `delta'' + beta delta' + zeta_ii sin(delta) = tau`,
/// released from the state-I equilibrium `(delta_i, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams<T> {
    pub beta: T,
    pub zeta_i: T,
    pub zeta_ii: T,
    pub tau: T,
    pub delta_i: T,
    pub delta_ii: T,
}

impl<T: Real> PendulumParams<T> {
    /// Builds the parameters with both angles at their stable equilibria.
    pub fn new(beta: T, zeta_i: T, zeta_ii: T, tau: T) -> Result<Self> {
        if !(beta >= T::zero()) {
            return Err(Error::InvalidInput("beta must be non-negative".into()));
        }
        let initial = equilibrium_angle(tau, zeta_i)?;
        let final_ = equilibrium_angle(tau, zeta_ii)?;
        if final_.marginal {
            // cos(delta_ii) = 0: no restoring force about the final state.
            return Err(Error::NoEquilibrium { ratio: (tau / zeta_ii).to_f64_lossless() });
        }
        Ok(Self { beta, zeta_i, zeta_ii, tau, delta_i: initial.angle, delta_ii: final_.angle })
    }

    /// Builds the parameters from the initial angle; the torque follows as `zeta_i sin(delta_i)`.
    pub fn from_initial_angle(beta: T, zeta_i: T, zeta_ii: T, delta_i: T) -> Result<Self> {
        if delta_i.abs() > T::FRAC_PI_2() {
            return Err(Error::InvalidInput("initial angle must lie on the stable branch".into()));
        }
        Self::new(beta, zeta_i, zeta_ii, zeta_i * delta_i.sin())
    }

    /// `delta_i - delta_ii`
    pub fn swing(&self) -> T {
        self.delta_i - self.delta_ii
    }

    /// Residual of the final-state balance `zeta_ii sin(delta_ii) - tau`.
    pub fn balance_residual(&self) -> T {
        self.zeta_ii * self.delta_ii.sin() - self.tau
    }

    /// Right-hand side of the pendulum equation for state `(delta, delta_dot)`.
    pub fn acceleration(&self, delta: T, delta_dot: T) -> T {
        self.tau - self.beta * delta_dot - self.zeta_ii * delta.sin()
    }

    pub fn cast<U: Real>(&self) -> PendulumParams<U> {
        let c = |v: T| U::lit(v.to_f64_lossless());
        PendulumParams {
            beta: c(self.beta),
            zeta_i: c(self.zeta_i),
            zeta_ii: c(self.zeta_ii),
            tau: c(self.tau),
            delta_i: c(self.delta_i),
            delta_ii: c(self.delta_ii),
        }
    }
}

/// Generator-referenced angle `theta_gen - theta_grid`, for display.
pub fn generator_referenced<T: Real>(delta: T) -> T {
    -delta
}

/// Grid and generator angles and frequencies recovered from the rotor angle.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalTrajectory<T> {
    pub times: Vec<T>,
    pub theta_grid: Vec<T>,
    pub theta_gen: Vec<T>,
    pub omega_grid: Vec<T>,
    pub omega_gen: Vec<T>,
}

/// Maps a rotor-angle trajectory back to grid and generator motion.
///
/// The angle offset is the initial inertia-weighted centre, taken as zero.
/// For the infinite grid the grid rotates rigidly at `Omega`.
pub fn angles_from_delta<T: Real>(scenario: &StationScenario<T>, traj: &Trajectory<T>) -> PhysicalTrajectory<T> {
    let ratio = scenario.effective_ratio();
    let (grid_w, gen_w) = (ratio.grid_share(), ratio.generator_share());
    let omega = scenario.omega_ref;
    let n = traj.len();
    let mut out = PhysicalTrajectory {
        times: traj.times.clone(),
        theta_grid: Vec::with_capacity(n),
        theta_gen: Vec::with_capacity(n),
        omega_grid: Vec::with_capacity(n),
        omega_gen: Vec::with_capacity(n),
    };
    for i in 0..n {
        let (t, d, dd) = (traj.times[i], traj.delta[i], traj.delta_dot[i]);
        out.theta_grid.push(omega * t + grid_w * d);
        out.theta_gen.push(omega * t - gen_w * d);
        out.omega_grid.push(omega + grid_w * dd);
        out.omega_gen.push(omega - gen_w * dd);
    }
    out
}
