//! Dormand–Prince 5(4) integrator with continuous (dense) output.
//!
//! Coefficients and the dense-output polynomial follow Hairer, Nørsett and
//! Wanner, *Solving Ordinary Differential Equations I*, `DOPRI5`.

use crate::error::{Error, Result};
use crate::scalar::Real;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-size controller settings.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances<T> {
    pub rtol: T,
    pub atol: T,
    /// Hard cap on accepted + rejected steps.
    pub max_steps: usize,
}

impl<T: Real> Tolerances<T> {
    pub fn uniform(tol: T) -> Self {
        Self { rtol: tol, atol: tol, max_steps: 5_000_000 }
    }
}

/// One accepted step's interpolation data.
#[derive(Debug, Clone)]
struct Segment<T> {
    t0: T,
    h: T,
    /// Five coefficient vectors of the quartic continuous extension.
    rcont: [Vec<T>; 5],
}

/// Piecewise-polynomial solution over `[t0, t_end]`.
#[derive(Debug, Clone)]
pub struct DenseSolution<T> {
    segments: Vec<Segment<T>>,
    pub accepted: usize,
    pub rejected: usize,
}

impl<T: Real> DenseSolution<T> {
    pub fn t_start(&self) -> T {
        self.segments[0].t0
    }

    pub fn t_end(&self) -> T {
        let last = self.segments.last().unwrap();
        last.t0 + last.h
    }

    /// State at time `t` (clamped to the integration interval).
    pub fn eval(&self, t: T) -> Vec<T> {
        let idx = match self
            .segments
            .binary_search_by(|s| s.t0.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let seg = &self.segments[idx];
        let theta = ((t - seg.t0) / seg.h).max(T::zero()).min(T::one());
        let theta1 = T::one() - theta;
        let [r1, r2, r3, r4, r5] = &seg.rcont;
        (0..r1.len())
            .map(|i| r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i]))))
            .collect()
    }

    /// Step boundaries, useful to bracket events.
    pub fn mesh(&self) -> impl Iterator<Item = T> + '_ {
        self.segments.iter().map(|s| s.t0).chain(std::iter::once(self.t_end()))
    }
}

fn axpy<T: Real>(out: &mut [T], base: &[T], terms: &[(T, &[T])], h: T) {
    for i in 0..out.len() {
        let mut acc = T::zero();
        for (c, k) in terms {
            acc = acc + *c * k[i];
        }
        out[i] = base[i] + h * acc;
    }
}

/// Integrates `y' = f(t, y)` from `(t0, y0)` to `t_end` with adaptive steps.
pub fn integrate<T: Real, F>(mut f: F, t0: T, y0: &[T], t_end: T, tol: Tolerances<T>) -> Result<DenseSolution<T>>
where
    F: FnMut(T, &[T], &mut [T]),
{
    if !(t_end > t0) {
        return Err(Error::InvalidInput("integration interval must be non-empty".into()));
    }
    let n = y0.len();
    let c = |v: f64| T::lit(v);
    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]);
    let mut ytmp = vec![T::zero(); n];
    let mut ynew = vec![T::zero(); n];
    f(t0, &y, &mut k1);

    // Initial step guess (Hairer's heuristic, simplified).
    let scale = |i: usize, y: &[T]| tol.atol + tol.rtol * y[i].abs();
    let norm = |v: &[T], y: &[T]| {
        let s = (0..n).fold(T::zero(), |acc, i| acc + (v[i] / scale(i, y)).powi(2));
        (s / T::from_usize(n.max(1)).unwrap()).sqrt()
    };
    let d0 = norm(&y, &y);
    let d1 = norm(&k1, &y);
    let mut h = if d0 < c(1e-5) || d1 < c(1e-5) { c(1e-6) } else { c(0.01) * d0 / d1 };
    h = h.min(t_end - t0);

    let mut t = t0;
    let mut sol = DenseSolution { segments: Vec::new(), accepted: 0, rejected: 0 };
    let min_h = c(1e-14);
    while t < t_end {
        if sol.accepted + sol.rejected >= tol.max_steps {
            return Err(Error::StepFailure { t: t.to_f64_lossless() });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        axpy(&mut ytmp, &y, &[(c(A21), &k1)], h);
        f(t + c(C2) * h, &ytmp, &mut k2);
        axpy(&mut ytmp, &y, &[(c(A31), &k1), (c(A32), &k2)], h);
        f(t + c(C3) * h, &ytmp, &mut k3);
        axpy(&mut ytmp, &y, &[(c(A41), &k1), (c(A42), &k2), (c(A43), &k3)], h);
        f(t + c(C4) * h, &ytmp, &mut k4);
        axpy(&mut ytmp, &y, &[(c(A51), &k1), (c(A52), &k2), (c(A53), &k3), (c(A54), &k4)], h);
        f(t + c(C5) * h, &ytmp, &mut k5);
        axpy(&mut ytmp, &y, &[(c(A61), &k1), (c(A62), &k2), (c(A63), &k3), (c(A64), &k4), (c(A65), &k5)], h);
        f(t + h, &ytmp, &mut k6);
        axpy(&mut ynew, &y, &[(c(A71), &k1), (c(A73), &k3), (c(A74), &k4), (c(A75), &k5), (c(A76), &k6)], h);
        f(t + h, &ynew, &mut k7);

        let mut err_sq = T::zero();
        for i in 0..n {
            let e = h * (c(E1) * k1[i] + c(E3) * k3[i] + c(E4) * k4[i] + c(E5) * k5[i] + c(E6) * k6[i] + c(E7) * k7[i]);
            let sk = tol.atol + tol.rtol * y[i].abs().max(ynew[i].abs());
            err_sq = err_sq + (e / sk).powi(2);
        }
        let err = (err_sq / T::from_usize(n.max(1)).unwrap()).sqrt();

        if err <= T::one() {
            let mut rcont: [Vec<T>; 5] = std::array::from_fn(|_| vec![T::zero(); n]);
            for i in 0..n {
                let ydiff = ynew[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - h * k7[i] - bspl;
                rcont[4][i] = h
                    * (c(D1) * k1[i] + c(D3) * k3[i] + c(D4) * k4[i] + c(D5) * k5[i] + c(D6) * k6[i] + c(D7) * k7[i]);
            }
            sol.segments.push(Segment { t0: t, h, rcont });
            sol.accepted += 1;
            t = if last { t_end } else { t + h };
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
        } else {
            sol.rejected += 1;
        }
        let fac = if err == T::zero() { c(5.0) } else { (c(0.9) * err.powf(c(-0.2))).max(c(0.2)).min(c(5.0)) };
        h = h * fac;
        if t < t_end && h < min_h * t.abs().max(T::one()) {
            return Err(Error::StepFailure { t: t.to_f64_lossless() });
        }
    }
    Ok(sol)
}
