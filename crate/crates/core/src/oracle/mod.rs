//! Independent ground truth: direct integration of the pendulum and of the
//! full star-coupled machine set.

pub mod dopri;
mod nbody;

pub use dopri::{DenseSolution, Tolerances};
pub use nbody::{integrate_nbody, CouplingStep, MachineSet, NBodyRun};

use crate::error::{Error, Result};
use crate::model::PendulumParams;
use crate::scalar::Real;
use crate::trajectory::Trajectory;

/// Dense solution of the reduced pendulum released from `(delta_i, 0)`.
#[derive(Debug, Clone)]
pub struct PendulumRun<T> {
    pub params: PendulumParams<T>,
    pub solution: DenseSolution<T>,
    pub tol: T,
}

impl<T: Real> PendulumRun<T> {
    /// `(delta, delta_dot)` at time `t`.
    pub fn state(&self, t: T) -> (T, T) {
        let y = self.solution.eval(t);
        (y[0], y[1])
    }

    pub fn sample(&self, times: &[T]) -> Result<Trajectory<T>> {
        let (delta, delta_dot) = times.iter().map(|&t| self.state(t)).unzip();
        Ok(Trajectory::new(times.to_vec(), delta, delta_dot)?
            .with_meta("solver", "ode")
            .with_meta("method", "dopri5")
            .with_meta("tol", self.tol))
    }

    /// First time after `t = 0` at which the normalized angle has a local maximum,
    /// located by bisection on the dense output.
    pub fn first_maximum_time(&self, t_tol: T) -> Option<T> {
        let sign = (self.params.delta_i - self.params.delta_ii).signum();
        let vel = |t: T| sign * self.state(t).1;
        let mesh: Vec<T> = self.solution.mesh().collect();
        let mut seen_negative = false;
        for w in mesh.windows(2) {
            // Subdivide each step so that no pair of roots hides inside one interval.
            let sub = 8;
            for k in 0..sub {
                let a = w[0] + (w[1] - w[0]) * T::from_usize(k).unwrap() / T::from_usize(sub).unwrap();
                let b = w[0] + (w[1] - w[0]) * T::from_usize(k + 1).unwrap() / T::from_usize(sub).unwrap();
                let (va, vb) = (vel(a), vel(b));
                if va < T::zero() || vb < T::zero() {
                    seen_negative = true;
                }
                if seen_negative && va > T::zero() && vb <= T::zero() {
                    return Some(bisect(vel, a, b, t_tol));
                }
            }
        }
        None
    }
}

pub(crate) fn bisect<T: Real>(f: impl Fn(T) -> T, mut a: T, mut b: T, t_tol: T) -> T {
    let fa = f(a);
    while b - a > t_tol {
        let m = (a + b) * T::lit(0.5);
        if (f(m) > T::zero()) == (fa > T::zero()) {
            a = m;
        } else {
            b = m;
        }
    }
    (a + b) * T::lit(0.5)
}

/// Integrates `delta'' + beta delta' + zeta_ii sin(delta) = tau` from the
/// state-I equilibrium with local tolerance `tol`.
pub fn integrate_pendulum<T: Real>(params: &PendulumParams<T>, t_max: T, tol: T) -> Result<PendulumRun<T>> {
    if !(tol >= T::lit(1e-12) && tol <= T::lit(1e-6)) {
        return Err(Error::InvalidInput(format!("tolerance {tol} outside [1e-12, 1e-6]")));
    }
    let p = *params;
    let solution = dopri::integrate(
        |_, y: &[T], dy: &mut [T]| {
            dy[0] = y[1];
            dy[1] = p.acceleration(y[0], y[1]);
        },
        T::zero(),
        &[p.delta_i, T::zero()],
        t_max,
        Tolerances::uniform(tol),
    )?;
    Ok(PendulumRun { params: p, solution, tol })
}

/// Integrates the pendulum from an arbitrary initial state; used for
/// conservative checks where no equilibrium release is involved.
pub fn integrate_pendulum_from<T: Real>(
    beta: T,
    zeta: T,
    tau: T,
    initial: (T, T),
    t_max: T,
    tol: T,
) -> Result<DenseSolution<T>> {
    dopri::integrate(
        |_, y: &[T], dy: &mut [T]| {
            dy[0] = y[1];
            dy[1] = tau - beta * y[1] - zeta * y[0].sin();
        },
        T::zero(),
        &[initial.0, initial.1],
        t_max,
        Tolerances::uniform(tol),
    )
}
