use crate::error::{Error, Result};
use crate::model::{InertiaRatio, ModelKind, StationScenario};
use crate::scalar::Real;
use crate::trajectory::Trajectory;

use super::dopri::{self, DenseSolution, Tolerances};

/// Star-coupled machine set: grid machines `0..N-1` each couple only to the
/// tagged generator stored last.
///
/// For the Kuramoto-like model `damping[j]` is `K_j^K`; for the cage model it
/// is the pairwise coefficient `K_{j,gen}^C` and the generator entry is unused.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineSet<T> {
    pub model: ModelKind,
    pub omega_ref: T,
    pub inertia: Vec<T>,
    pub damping: Vec<T>,
    pub torque: Vec<T>,
}

/// Per-grid-machine coupling `tau_{j,gen}^max` before and after the step at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingStep<T> {
    pub initial: Vec<T>,
    pub final_: Vec<T>,
}

impl<T: Real> MachineSet<T> {
    pub fn len(&self) -> usize {
        self.inertia.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inertia.is_empty()
    }

    pub fn generator(&self) -> usize {
        self.len() - 1
    }

    /// Splits a station scenario into a generator plus `n_machines - 1`
    /// identical grid machines with `J_grid / J_gen = K_grid / K_gen = x`.
    pub fn clones(scenario: &StationScenario<T>, n_machines: usize) -> Result<(Self, CouplingStep<T>)> {
        scenario.validate()?;
        if n_machines < 2 {
            return Err(Error::InvalidInput("need at least one grid machine".into()));
        }
        let x = match (scenario.model, scenario.x) {
            (ModelKind::InfiniteGrid, _) | (_, InertiaRatio::Infinite) => {
                return Err(Error::InvalidInput("an infinite grid has no finite machine set".into()))
            }
            (_, InertiaRatio::Finite(x)) => x,
        };
        let grid = n_machines - 1;
        let g = T::from_usize(grid).unwrap();
        let j_gen = scenario.j_gen;
        let j_each = x * j_gen / g;
        let k_gen = scenario.k_over_jgen * j_gen;
        let tau_gen = scenario.tau_gen_over_jgen * j_gen;

        let mut inertia = vec![j_each; grid];
        inertia.push(j_gen);
        let mut damping = match scenario.model {
            ModelKind::KuramotoLike => vec![k_gen * j_each / j_gen; grid],
            _ => vec![k_gen / g; grid],
        };
        damping.push(if scenario.model == ModelKind::KuramotoLike { k_gen } else { T::zero() });
        let mut torque = vec![-tau_gen / g; grid];
        torque.push(tau_gen);
        let step = CouplingStep {
            initial: vec![scenario.tau_el_initial_over_jgen * j_gen / g; grid],
            final_: vec![scenario.tau_el_final_over_jgen * j_gen / g; grid],
        };
        Ok((MachineSet { model: scenario.model, omega_ref: scenario.omega_ref, inertia, damping, torque }, step))
    }

    fn validate(&self, step: &CouplingStep<T>) -> Result<()> {
        let n = self.len();
        let grid = n.saturating_sub(1);
        if n < 2 || self.damping.len() != n || self.torque.len() != n {
            return Err(Error::InvalidInput("machine arrays must share length N >= 2".into()));
        }
        if step.initial.len() != grid || step.final_.len() != grid {
            return Err(Error::InvalidInput("one coupling per grid machine required".into()));
        }
        if !matches!(self.model, ModelKind::KuramotoLike | ModelKind::Cage) {
            return Err(Error::InvalidInput("machine sets use the Kuramoto-like or cage damping law".into()));
        }
        if self.inertia.iter().any(|j| !(*j > T::zero())) {
            return Err(Error::InvalidInput("inertias must be positive".into()));
        }
        let total = self.torque.iter().fold(T::zero(), |a, t| a + *t);
        let scale = self.torque.iter().fold(T::one(), |a, t| a.max(t.abs()));
        if total.abs() > T::lit(1e-12) * scale {
            return Err(Error::InvalidInput("torques must balance for a synchronous initial state".into()));
        }
        Ok(())
    }
}

/// Dense solution of the machine set in the frame rotating at `Omega`.
#[derive(Debug, Clone)]
pub struct NBodyRun<T> {
    pub machines: MachineSet<T>,
    solution: DenseSolution<T>,
    pub tol: T,
}

impl<T: Real> NBodyRun<T> {
    /// Angles and speeds relative to the rotating frame, `(phi_j, phi_dot_j)`.
    fn relative(&self, t: T) -> (Vec<T>, Vec<T>) {
        let n = self.machines.len();
        let y = self.solution.eval(t);
        (y[..n].to_vec(), y[n..].to_vec())
    }

    /// Absolute angles `theta_j(t)`.
    pub fn angles(&self, t: T) -> Vec<T> {
        let omega_t = self.machines.omega_ref * t;
        self.relative(t).0.into_iter().map(|p| p + omega_t).collect()
    }

    /// Absolute frequencies `omega_j(t)`.
    pub fn frequencies(&self, t: T) -> Vec<T> {
        self.relative(t).1.into_iter().map(|w| w + self.machines.omega_ref).collect()
    }

    /// Total angular momentum `sum_j J_j omega_j`.
    pub fn momentum(&self, t: T) -> T {
        self.frequencies(t).iter().zip(&self.machines.inertia).fold(T::zero(), |a, (w, j)| a + *w * *j)
    }

    /// Largest angle or speed difference between grid machines at time `t`.
    pub fn grid_spread(&self, t: T) -> T {
        let (phi, psi) = self.relative(t);
        let g = self.machines.generator();
        (1..g).fold(T::zero(), |m, j| m.max((phi[j] - phi[0]).abs()).max((psi[j] - psi[0]).abs()))
    }

    /// Rotor angle `theta_grid - theta_gen` sampled on `times`.
    pub fn sample(&self, times: &[T]) -> Result<Trajectory<T>> {
        let g = self.machines.generator();
        let mut delta = Vec::with_capacity(times.len());
        let mut delta_dot = Vec::with_capacity(times.len());
        for &t in times {
            let spread = self.grid_spread(t);
            if spread > T::lit(1e-8) {
                return Err(Error::ReductionViolated { spread: spread.to_f64_lossless() });
            }
            let (phi, psi) = self.relative(t);
            delta.push(phi[0] - phi[g]);
            delta_dot.push(psi[0] - psi[g]);
        }
        Ok(Trajectory::new(times.to_vec(), delta, delta_dot)?
            .with_meta("solver", "nbody")
            .with_meta("machines", self.machines.len())
            .with_meta("tol", self.tol))
    }
}

/// Integrates every machine's swing equation after the coupling step, starting
/// from the synchronous equilibrium of the initial couplings.
pub fn integrate_nbody<T: Real>(machines: &MachineSet<T>, step: &CouplingStep<T>, t_max: T, tol: T) -> Result<NBodyRun<T>> {
    machines.validate(step)?;
    let n = machines.len();
    let g = machines.generator();

    // Synchronous state I: each grid machine balances its own torque.
    let mut phi0 = vec![T::zero(); n];
    for j in 0..g {
        let ratio = machines.torque[j] / step.initial[j];
        if ratio.abs() > T::one() {
            return Err(Error::NoEquilibrium { ratio: ratio.to_f64_lossless() });
        }
        phi0[j] = ratio.asin();
    }
    let j_total = machines.inertia.iter().fold(T::zero(), |a, j| a + *j);
    let centre = (0..n).fold(T::zero(), |a, j| a + machines.inertia[j] * phi0[j]) / j_total;
    for p in &mut phi0 {
        *p = *p - centre;
    }
    let mut y0 = phi0;
    y0.extend(std::iter::repeat_n(T::zero(), n));

    let m = machines.clone();
    let coupling = step.final_.clone();
    let rhs = move |_t: T, y: &[T], dy: &mut [T]| {
        let (phi, psi) = y.split_at(n);
        let mut gen_torque = m.torque[g];
        let mut gen_damping = match m.model {
            ModelKind::KuramotoLike => m.damping[g] * psi[g],
            _ => T::zero(),
        };
        for j in 0..g {
            let sync = coupling[j] * (phi[j] - phi[g]).sin();
            let damp = match m.model {
                ModelKind::KuramotoLike => m.damping[j] * psi[j],
                _ => m.damping[j] * (psi[j] - psi[g]),
            };
            if m.model != ModelKind::KuramotoLike {
                gen_damping = gen_damping - m.damping[j] * (psi[j] - psi[g]);
            }
            dy[j] = psi[j];
            dy[n + j] = (m.torque[j] - damp - sync) / m.inertia[j];
            gen_torque = gen_torque + sync;
        }
        dy[g] = psi[g];
        dy[n + g] = (gen_torque - gen_damping) / m.inertia[g];
    };
    let solution = dopri::integrate(rhs, T::zero(), &y0, t_max, Tolerances::uniform(tol))?;
    Ok(NBodyRun { machines: machines.clone(), solution, tol })
}
