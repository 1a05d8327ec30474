//! Complete elliptic integral of the first kind.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `K(m) = integral_0^{pi/2} dtheta / sqrt(1 - m sin^2 theta)` in the parameter convention
/// (`m = k^2`), computed by the arithmetic-geometric mean `K = pi / (2 AGM(1, sqrt(1 - m)))`.
pub fn elliptic_k<T: Real>(m: T) -> Result<T> {
    if !(m >= T::zero()) || !(m < T::one()) {
        return Err(Error::DomainError(format!("elliptic parameter m = {m} outside [0, 1)")));
    }
    let (mut a, mut g) = (T::one(), (T::one() - m).sqrt());
    // Quadratic convergence: a handful of iterations reach machine precision.
    for _ in 0..64 {
        if (a - g).abs() <= T::epsilon() * a {
            break;
        }
        let next = (a + g) * T::lit(0.5);
        g = (a * g).sqrt();
        a = next;
    }
    Ok(T::FRAC_PI_2() / a)
}
