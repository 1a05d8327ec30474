//! Relaxation-function hierarchy of the driven damped pendulum.
//!
//! With `u = delta - delta_ii` and `v = delta_dot` the basis is
//!
//! ```text
//! a_pq = v^p sin^q(u)
//! b_pq = v^p sin^q(u) (1 - cos u)
//! ```
//!
//! Differentiating along the pendulum flow closes the set into a
//! differential-recurrence that couples velocity power `p` only to `p - 1`,
//! `p` and `p + 1`. Grouping all sine powers of one velocity power into the
//! vector `C_n` (`n = p + 1`) gives the block-tridiagonal system
//!
//! ```text
//! dC_n/dt = Q_n^- C_{n-1} + Q_n C_n + Q_n^+ C_{n+1}
//! ```
//!
//! The blocks are generated from [`recurrence_terms`], never transcribed by
//! hand, so the matrix system and the scalar recurrence cannot drift apart.

use crate::error::{Error, Result};
use crate::model::PendulumParams;
use crate::scalar::Real;

/// Cutoffs of the hierarchy: velocity powers `0..n_max`, sine powers `0..=q_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Truncation {
    pub n_max: usize,
    pub q_max: usize,
}

impl Truncation {
    pub fn new(n_max: usize, q_max: usize) -> Result<Self> {
        let t = Self { n_max, q_max };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 2 || self.q_max < 1 {
            return Err(Error::TruncationTooSmall { n_max: self.n_max, q_max: self.q_max });
        }
        Ok(())
    }

    /// Length of one block vector `C_n`: `2 (q_max + 1)`.
    pub fn block_dim(&self) -> usize {
        2 * (self.q_max + 1)
    }

    /// Dimension of the full super-vector.
    pub fn dim(&self) -> usize {
        self.n_max * self.block_dim()
    }

    /// Position of `(kind, q)` inside a block.
    pub fn slot(&self, kind: Kind, q: usize) -> usize {
        2 * q + kind as usize
    }

    /// Flattened position of `a_pq` / `b_pq`, or `None` when cut off.
    pub fn index(&self, kind: Kind, p: usize, q: usize) -> Option<usize> {
        (p < self.n_max && q <= self.q_max).then(|| p * self.block_dim() + self.slot(kind, q))
    }

    /// Flattened position of `a_10 = delta_dot`.
    pub fn velocity_index(&self) -> usize {
        self.block_dim()
    }
}

impl std::fmt::Display for Truncation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "n_max={} q_max={}", self.n_max, self.q_max)
    }
}

/// The two families of basis functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    /// `a_pq = v^p sin^q u`
    A = 0,
    /// `b_pq = a_pq (1 - cos u)`
    B = 1,
}

/// Evaluates `(a_pq, b_pq)` at the state `(delta, delta_dot)`.
pub fn basis_eval<T: Real>(p: usize, q: usize, delta: T, delta_dot: T, delta_ii: T) -> (T, T) {
    let u = delta - delta_ii;
    let a = delta_dot.powi(p as i32) * u.sin().powi(q as i32);
    (a, a * (T::one() - u.cos()))
}

/// One term `coef * {a|b}_{p,q}` on the right-hand side of the recurrence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term<T> {
    pub coef: T,
    pub kind: Kind,
    pub p: usize,
    pub q: usize,
}

/// Right-hand side of `d/dt {a|b}_pq` as a list of terms.
///
/// ```text
/// da_pq/dt = -beta p a_pq + q a_{p+1,q-1} - q b_{p+1,q-1}
///            - zeta p [cos(d2) a_{p-1,q+1} - sin(d2) b_{p-1,q}]
/// db_pq/dt = -beta p b_pq + (q+1) a_{p+1,q+1} - q b_{p+1,q-1}
///            - zeta p [sin(d2) a_{p-1,q+2} + cos(d2) b_{p-1,q+1} - 2 sin(d2) b_{p-1,q}]
/// ```
///
/// Terms whose coefficient vanishes identically (the `q` or `p` factors) are
/// omitted, so every returned index is non-negative.
pub fn recurrence_terms<T: Real>(kind: Kind, p: usize, q: usize, beta: T, zeta_ii: T, delta_ii: T) -> Vec<Term<T>> {
    let (s, c) = delta_ii.sin_cos();
    let pf = T::from_usize(p).unwrap();
    let qf = T::from_usize(q).unwrap();
    let zp = zeta_ii * pf;
    let mut out = Vec::with_capacity(6);
    let mut push = |coef: T, kind: Kind, p: usize, q: usize| {
        if coef != T::zero() {
            out.push(Term { coef, kind, p, q });
        }
    };
    match kind {
        Kind::A => {
            push(-beta * pf, Kind::A, p, q);
            if q > 0 {
                push(qf, Kind::A, p + 1, q - 1);
                push(-qf, Kind::B, p + 1, q - 1);
            }
            if p > 0 {
                push(-zp * c, Kind::A, p - 1, q + 1);
                push(zp * s, Kind::B, p - 1, q);
            }
        }
        Kind::B => {
            push(-beta * pf, Kind::B, p, q);
            push(qf + T::one(), Kind::A, p + 1, q + 1);
            if q > 0 {
                push(-qf, Kind::B, p + 1, q - 1);
            }
            if p > 0 {
                push(-zp * s, Kind::A, p - 1, q + 2);
                push(-zp * c, Kind::B, p - 1, q + 1);
                push(T::lit(2.0) * zp * s, Kind::B, p - 1, q);
            }
        }
    }
    out
}

/// Evaluates the recurrence right-hand sides `(da_pq/dt, db_pq/dt)` against a
/// snapshot `value(kind, p, q)` of the basis.
pub fn recurrence_rhs<T: Real>(
    p: usize,
    q: usize,
    value: impl Fn(Kind, usize, usize) -> T,
    beta: T,
    zeta_ii: T,
    delta_ii: T,
) -> (T, T) {
    let eval = |kind| {
        recurrence_terms(kind, p, q, beta, zeta_ii, delta_ii)
            .iter()
            .fold(T::zero(), |acc, t| acc + t.coef * value(t.kind, t.p, t.q))
    };
    (eval(Kind::A), eval(Kind::B))
}

/// Small dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn scaled_identity(dim: usize, scale: T) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = scale;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == T::zero())
    }

    /// `self * x`
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).fold(T::zero(), |acc, (a, b)| acc + *a * *b))
            .collect()
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

/// Block-tridiagonal form of the truncated hierarchy.
///
/// Block `n` (1-based) holds velocity power `n - 1`; element order within a
/// block is `(a_0, b_0, a_1, b_1, ..., a_qmax, b_qmax)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyBlocks<T> {
    pub trunc: Truncation,
    q_plus: Vec<DenseMatrix<T>>,
    q_minus: Vec<DenseMatrix<T>>,
    q_diag: Vec<DenseMatrix<T>>,
    /// `C_1(0)`; all higher blocks start at zero.
    pub c1_zero: Vec<T>,
    pub params: PendulumParams<T>,
}

impl<T: Real> HierarchyBlocks<T> {
    /// `Q_n^+` for `n` in `1..=n_max`.
    pub fn q_plus(&self, n: usize) -> &DenseMatrix<T> {
        &self.q_plus[n - 1]
    }

    /// `Q_n^-` for `n` in `1..=n_max`.
    pub fn q_minus(&self, n: usize) -> &DenseMatrix<T> {
        &self.q_minus[n - 1]
    }

    /// `Q_n` for `n` in `1..=n_max`.
    pub fn q_diag(&self, n: usize) -> &DenseMatrix<T> {
        &self.q_diag[n - 1]
    }

    /// Full initial super-vector `C(0)`.
    pub fn initial_state(&self) -> Vec<T> {
        let mut c = vec![T::zero(); self.trunc.dim()];
        c[..self.c1_zero.len()].copy_from_slice(&self.c1_zero);
        c
    }

    /// Applies the block-tridiagonal operator `dC/dt = M C` to a full super-vector.
    pub fn apply(&self, c: &[T]) -> Vec<T> {
        let bd = self.trunc.block_dim();
        let nm = self.trunc.n_max;
        assert_eq!(c.len(), self.trunc.dim());
        let block = |n: usize| &c[(n - 1) * bd..n * bd];
        let mut out = Vec::with_capacity(c.len());
        for n in 1..=nm {
            let mut acc = self.q_diag(n).mul_vec(block(n));
            if n > 1 {
                add_assign(&mut acc, &self.q_minus(n).mul_vec(block(n - 1)));
            }
            if n < nm {
                add_assign(&mut acc, &self.q_plus(n).mul_vec(block(n + 1)));
            }
            out.extend(acc);
        }
        out
    }
}

fn add_assign<T: Real>(acc: &mut [T], rhs: &[T]) {
    for (a, b) in acc.iter_mut().zip(rhs) {
        *a = *a + *b;
    }
}

/// `C_1(0) = (1, 1 - cos w, sin w, sin w (1 - cos w), sin^2 w, ...)`, `w = delta_i - delta_ii`.
pub fn initial_block<T: Real>(delta_i: T, delta_ii: T, trunc: Truncation) -> Vec<T> {
    (0..=trunc.q_max)
        .flat_map(|q| {
            let (a, b) = basis_eval(0, q, delta_i, T::zero(), delta_ii);
            [a, b]
        })
        .collect()
}

/// Generates the blocks `Q_n`, `Q_n^±` and `C_1(0)` from the recurrence.
///
/// Couplings to velocity powers `>= n_max` or sine powers `> q_max` are
/// dropped (hard truncation).
pub fn assemble_blocks<T: Real>(params: &PendulumParams<T>, trunc: Truncation) -> Result<HierarchyBlocks<T>> {
    trunc.validate()?;
    let bd = trunc.block_dim();
    let mut q_plus = Vec::with_capacity(trunc.n_max);
    let mut q_minus = Vec::with_capacity(trunc.n_max);
    let mut q_diag = Vec::with_capacity(trunc.n_max);
    for n in 1..=trunc.n_max {
        let p = n - 1;
        let (mut plus, mut minus, mut diag) =
            (DenseMatrix::zeros(bd, bd), DenseMatrix::zeros(bd, bd), DenseMatrix::zeros(bd, bd));
        for q in 0..=trunc.q_max {
            for kind in [Kind::A, Kind::B] {
                let row = trunc.slot(kind, q);
                for term in recurrence_terms(kind, p, q, params.beta, params.zeta_ii, params.delta_ii) {
                    if term.q > trunc.q_max {
                        continue;
                    }
                    let col = trunc.slot(term.kind, term.q);
                    let target = if term.p == p + 1 {
                        &mut plus
                    } else if term.p == p {
                        &mut diag
                    } else {
                        debug_assert_eq!(term.p + 1, p);
                        &mut minus
                    };
                    target[(row, col)] = target[(row, col)] + term.coef;
                }
            }
        }
        q_plus.push(plus);
        q_minus.push(minus);
        q_diag.push(diag);
    }
    Ok(HierarchyBlocks {
        trunc,
        q_plus,
        q_minus,
        q_diag,
        c1_zero: initial_block(params.delta_i, params.delta_ii, trunc),
        params: *params,
    })
}
