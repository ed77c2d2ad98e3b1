//! ℓ₁ recovery through linear programming, the ℓ₀ enumeration oracle and
//! recovery verification.

mod lp;

pub use lp::{
    solve_lp, ConstraintMatrix, IterateRecord, LinearProgram, LpSolution, LpStatus, FEASIBILITY_TOL,
    GAP_TOL, MAX_ITERATIONS,
};

use crate::ensembles::Signal;
use crate::error::{Error, Result};
use crate::numerics::{least_squares, norm1, norm2, norm_inf, Combinations, RealMatrix};

/// Entries of the ℓ₁ solution at or below this fraction of `max(1, ‖f*‖∞)`
/// are set to zero.
pub const ROUNDING_THRESHOLD: f64 = 1e-7;
pub const DEFAULT_RECOVERY_TOL: f64 = 1e-6;
pub const L0_MAX_N: usize = 24;
pub const L0_MAX_SPARSITY: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct BPResult {
    pub recovered: Signal,
    /// `‖f*‖₁`.
    pub objective: f64,
    pub status: LpStatus,
    /// `‖Φf* - y‖∞`.
    pub residual: f64,
    pub iterations: usize,
}

/// The LP behind basis pursuit: `f = u - v` with `u, v >= 0`, minimizing
/// `Σ(u + v)` subject to `[Φ, -Φ](u, v) = y`. At an optimum `u + v = |f|`,
/// so this is the `(f, t)` form with `t = u + v`.
pub fn basis_pursuit_lp(phi: &RealMatrix, y: &[f64]) -> Result<LinearProgram> {
    if y.len() != phi.rows() {
        return Err(Error::Dimension(format!(
            "measurements have {} entries, matrix has {} rows",
            y.len(),
            phi.rows()
        )));
    }
    Ok(LinearProgram::nonnegative(
        vec![1.0; 2 * phi.cols()],
        ConstraintMatrix::SignSplit(phi.clone()),
        y.to_vec(),
    ))
}

/// Minimizes `‖f‖₁` subject to `Φf = y`.
pub fn basis_pursuit(phi: &RealMatrix, y: &[f64]) -> Result<BPResult> {
    let lp = basis_pursuit_lp(phi, y)?;
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Infeasible {
                residual: sol.primal_infeasibility,
            })
        }
        status => return Err(Error::Solver(status)),
    }
    let n = phi.cols();
    let raw: Vec<f64> = (0..n).map(|j| sol.primal[j] - sol.primal[n + j]).collect();
    let cutoff = ROUNDING_THRESHOLD * norm_inf(&raw).max(1.0);
    let rounded: Vec<f64> = raw.iter().map(|&v| if v.abs() <= cutoff { 0.0 } else { v }).collect();
    let residual_tol = 1e-8 * (1.0 + norm_inf(y));

    // prefer the polished refit, then the plain rounding, then the raw iterate
    let mut candidates = Vec::with_capacity(3);
    if let Some((polished, res)) = polish_on_support(phi, y, &rounded) {
        if norm1(&polished) <= norm1(&rounded) * (1.0 + 1e-7) + 1e-12 {
            candidates.push((polished, res));
        }
    }
    let rounded_res = max_residual(phi, &rounded, y);
    candidates.push((rounded, rounded_res));
    let raw_res = max_residual(phi, &raw, y);
    candidates.push((raw, raw_res));
    let pick = candidates
        .iter()
        .position(|(_, res)| *res <= residual_tol)
        .unwrap_or(candidates.len() - 1);
    let (f, residual) = candidates.swap_remove(pick);
    Ok(BPResult {
        objective: norm1(&f),
        recovered: Signal::new(f),
        status: sol.status,
        residual,
        iterations: sol.iterations,
    })
}

fn max_residual(phi: &RealMatrix, f: &[f64], y: &[f64]) -> f64 {
    phi.matvec(f)
        .iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Least-squares refit of `Φ_S f_S = y` on the support `S` of `f`, provided
/// the refit keeps every sign.
fn polish_on_support(phi: &RealMatrix, y: &[f64], f: &[f64]) -> Option<(Vec<f64>, f64)> {
    let support: Vec<usize> = (0..f.len()).filter(|&i| f[i] != 0.0).collect();
    if support.is_empty() || support.len() > phi.rows() {
        return None;
    }
    let coef = least_squares(&phi.select_columns(&support), y).ok()?;
    let mut out = vec![0.0; f.len()];
    for (&i, &c) in support.iter().zip(&coef) {
        if c.signum() != f[i].signum() {
            return None;
        }
        out[i] = c;
    }
    let residual = max_residual(phi, &out, y);
    Some((out, residual))
}

#[derive(Debug, Clone, PartialEq)]
pub struct L0Solution {
    pub signal: Signal,
    pub support: Vec<usize>,
}

/// Sparsest solution of `Φf = y` by enumerating supports of size
/// `0, 1, ..., r_max` in lexicographic order.
pub fn l0_oracle(phi: &RealMatrix, y: &[f64], r_max: usize) -> Result<L0Solution> {
    let (k, n) = (phi.rows(), phi.cols());
    if y.len() != k {
        return Err(Error::Dimension(format!(
            "measurements have {} entries, matrix has {k} rows",
            y.len()
        )));
    }
    if n > L0_MAX_N || r_max > L0_MAX_SPARSITY {
        return Err(Error::Parameter(format!(
            "enumeration limited to n <= {L0_MAX_N} and r_max <= {L0_MAX_SPARSITY}, got n={n}, r_max={r_max}"
        )));
    }
    let tol = 1e-8 * (1.0 + norm_inf(y));
    if norm_inf(y) <= tol {
        return Ok(L0Solution {
            signal: Signal::new(vec![0.0; n]),
            support: Vec::new(),
        });
    }
    for size in 1..=r_max.min(k) {
        let mut subsets = Combinations::new(n, size);
        while let Some(t) = subsets.next_subset() {
            let sub = phi.select_columns(t);
            // rank-deficient supports cannot be minimal: a smaller one was tried first
            let Ok(coef) = least_squares(&sub, y) else { continue };
            let fit = sub.matvec(&coef);
            let residual = fit.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if residual <= tol {
                let mut values = vec![0.0; n];
                for (&i, &c) in t.iter().zip(&coef) {
                    values[i] = c;
                }
                return Ok(L0Solution {
                    signal: Signal::new(values),
                    support: t.to_vec(),
                });
            }
        }
    }
    Err(Error::NotFound { r_max })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveryVerdict {
    Exact,
    Failed,
}

/// Exact iff the solver reached optimality and `‖f* - f‖₂ <= tol · max(1, ‖f‖₂)`.
pub fn verify_recovery(f: &Signal, result: &BPResult, tol: f64) -> RecoveryVerdict {
    assert_eq!(f.len(), result.recovered.len(), "signal dimensions differ");
    let err = l2_error(f, result);
    if result.status == LpStatus::Optimal && err <= tol * norm2(f.values()).max(1.0) {
        RecoveryVerdict::Exact
    } else {
        RecoveryVerdict::Failed
    }
}

pub fn l2_error(f: &Signal, result: &BPResult) -> f64 {
    let diff: Vec<f64> = f
        .values()
        .iter()
        .zip(result.recovered.values())
        .map(|(a, b)| a - b)
        .collect();
    norm2(&diff)
}
