//! Laplace-domain solution of the hierarchy by matrix continued fractions.
//!
//! With `C_n(0) = 0` for `n >= 2`, the transformed block system closes from
//! the top level downward:
//!
//! ```text
//! Delta_nmax = (s I - Q_nmax)^-1
//! Delta_n    = (s I - Q_n - Q_n^+ Delta_{n+1} Q_{n+1}^-)^-1
//! C~_1 = Delta_1 C_1(0),   C~_2 = Delta_2 Q_2^- C~_1
//! ```
//!
//! The first entry of `C~_2` is the transform of `delta_dot`.

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;
use num_complex::Complex64;

use crate::eigen::{self, EigenSolution};
use crate::error::{Error, Result};
use crate::hierarchy::{assemble_blocks, DenseMatrix, HierarchyBlocks, Truncation};
use crate::model::PendulumParams;
use crate::trajectory::log_grid;

/// Condition estimate above which a level inversion is rejected.
pub const MAX_CONDITION: f64 = 1e12;
/// Below this frequency the spectrum is taken from the eigen-series.
pub const OMEGA_MIN: f64 = 1e-6;

/// Normalized rotor-angle spectrum `delta~_N(i omega)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub omegas: Vec<f64>,
    pub values: Vec<Complex64>,
    pub params: PendulumParams<f64>,
    pub trunc: Truncation,
}

/// The 400-point log grid over `[1e-2, 1e2]` rad/s.
pub fn default_grid() -> Vec<f64> {
    log_grid(1e-2, 1e2, 400)
}

fn complex_block(m: &DenseMatrix<f64>) -> Mat<Complex64> {
    Mat::from_fn(m.rows(), m.cols(), |i, j| Complex64::new(m[(i, j)], 0.0))
}

/// Skeel condition `|| |A^-1| |A| ||_inf`, invariant under row scaling.
fn skeel(a: &Mat<Complex64>, inv: &Mat<Complex64>) -> f64 {
    let n = a.nrows();
    let row_abs: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[(i, j)].norm()).sum()).collect();
    (0..n).map(|i| (0..n).map(|k| inv[(i, k)].norm() * row_abs[k]).sum::<f64>()).fold(0.0, f64::max)
}

/// Block operators converted once for repeated evaluation.
struct Levels {
    plus: Vec<Mat<Complex64>>,
    minus: Vec<Mat<Complex64>>,
    diag: Vec<Mat<Complex64>>,
}

impl Levels {
    fn new(blocks: &HierarchyBlocks<f64>) -> Self {
        let n = blocks.trunc.n_max;
        Self {
            plus: (1..=n).map(|k| complex_block(blocks.q_plus(k))).collect(),
            minus: (1..=n).map(|k| complex_block(blocks.q_minus(k))).collect(),
            diag: (1..=n).map(|k| complex_block(blocks.q_diag(k))).collect(),
        }
    }

    fn invert(a: Mat<Complex64>, level: usize) -> Result<Mat<Complex64>> {
        let inv = a.partial_piv_lu().inverse();
        let condition = skeel(&a, &inv);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::SingularStep { level, condition });
        }
        Ok(inv)
    }

    /// `Delta_depth, ..., Delta_1` evaluated top-down; returns `[Delta_1, Delta_2]`
    /// (the second only when `depth >= 2`).
    fn fractions(&self, s: Complex64, depth: usize) -> Result<Vec<Mat<Complex64>>> {
        let bd = self.diag[0].nrows();
        let shifted = |n: usize| Mat::<Complex64>::from_fn(bd, bd, |i, j| if i == j { s } else { Complex64::new(0.0, 0.0) }) - &self.diag[n - 1];
        let mut delta = Self::invert(shifted(depth), depth)?;
        let mut above = None;
        for n in (1..depth).rev() {
            let inner = &self.plus[n - 1] * &delta * &self.minus[n];
            let next = Self::invert(shifted(n) - inner, n)?;
            above = Some(std::mem::replace(&mut delta, next));
        }
        Ok(std::iter::once(delta).chain(above).collect())
    }
}

fn check_s(s: Complex64) -> Result<()> {
    if !(s.re >= 0.0) || s == Complex64::new(0.0, 0.0) {
        return Err(Error::InvalidInput(format!("continued fraction needs Re s >= 0 and s != 0, got {s}")));
    }
    Ok(())
}

/// `Delta_1(s)` of the fraction cut after `depth` levels (`1 <= depth <= n_max`).
pub fn delta_fraction(s: Complex64, blocks: &HierarchyBlocks<f64>, depth: usize) -> Result<Mat<Complex64>> {
    check_s(s)?;
    if depth == 0 || depth > blocks.trunc.n_max {
        return Err(Error::InvalidInput(format!("depth {depth} outside 1..={}", blocks.trunc.n_max)));
    }
    Ok(Levels::new(blocks).fractions(s, depth)?.swap_remove(0))
}

/// Transformed first two blocks `(C~_1(s), C~_2(s))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceSolution {
    pub c1: Vec<Complex64>,
    pub c2: Vec<Complex64>,
}

impl LaplaceSolution {
    /// `a~_10(s)`, the transform of `delta_dot`.
    pub fn a10(&self) -> Complex64 {
        self.c2[0]
    }
}

fn solve_levels(levels: &Levels, blocks: &HierarchyBlocks<f64>, s: Complex64) -> Result<LaplaceSolution> {
    let f = levels.fractions(s, blocks.trunc.n_max)?;
    let c0 = Mat::<Complex64>::from_fn(blocks.c1_zero.len(), 1, |i, _| Complex64::new(blocks.c1_zero[i], 0.0));
    let c1 = &f[0] * &c0;
    let c2 = &f[1] * (&levels.minus[1] * &c1);
    let col = |c: &Mat<Complex64>| (0..c.nrows()).map(|i| c[(i, 0)]).collect();
    Ok(LaplaceSolution { c1: col(&c1), c2: col(&c2) })
}

pub fn laplace_solution(s: Complex64, blocks: &HierarchyBlocks<f64>) -> Result<LaplaceSolution> {
    check_s(s)?;
    solve_levels(&Levels::new(blocks), blocks, s)
}

/// `delta~_N(s) = (a~_10 / (delta_i - delta_ii) + 1) / s`.
pub fn normalized_transform(s: Complex64, blocks: &HierarchyBlocks<f64>) -> Result<Complex64> {
    check_s(s)?;
    let swing = blocks.params.swing();
    if swing == 0.0 {
        return Err(Error::DegenerateNormalization);
    }
    let a10 = laplace_solution(s, blocks)?.a10();
    Ok((a10 / swing + 1.0) / s)
}

/// Evaluates the spectrum on `omegas` (strictly positive, increasing).
pub fn spectrum(params: &PendulumParams<f64>, trunc: Truncation, omegas: &[f64]) -> Result<Spectrum> {
    if params.swing() == 0.0 {
        return Err(Error::DegenerateNormalization);
    }
    if omegas.iter().any(|w| !(*w > 0.0)) || omegas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("frequency grid must be positive and strictly increasing".into()));
    }
    let blocks = assemble_blocks(params, trunc)?;
    let levels = Levels::new(&blocks);
    let swing = params.swing();
    let mut fallback: Option<EigenSolution> = None;
    let mut values = Vec::with_capacity(omegas.len());
    for &w in omegas {
        let s = Complex64::new(0.0, w);
        let v = if w <= OMEGA_MIN {
            if fallback.is_none() {
                fallback = Some(eigen::solve(&blocks)?);
            }
            fallback.as_ref().unwrap().transform(s)?
        } else {
            (solve_levels(&levels, &blocks, s)?.a10() / swing + 1.0) / s
        };
        values.push(v);
    }
    Ok(Spectrum { omegas: omegas.to_vec(), values, params: *params, trunc })
}
