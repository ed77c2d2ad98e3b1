//! Dense primal-dual interior-point LP solver.
//!
//! Solves `min cᵀx  s.t.  Ax = b,  lower <= x <= upper` with Mehrotra's
//! predictor-corrector on the normal equations `AΘAᵀ dy = r`. Lower and
//! upper bounds may be infinite. Linearly dependent equality rows are removed
//! up front (and checked for consistency).

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numerics::{axpy, dot, least_squares, norm_inf, RealMatrix};

pub const MAX_ITERATIONS: usize = 200;
pub const GAP_TOL: f64 = 1e-9;
pub const FEASIBILITY_TOL: f64 = 1e-9;
const STEP_FRACTION: f64 = 0.995;
const DIVERGENCE: f64 = 1e12;
const REFINEMENT_STEPS: usize = 2;
const DEPENDENT_ROW_TOL: f64 = 1e-9;
/// Relative gap below which the optimal face is guessed and checked.
const CROSSOVER_GAP: f64 = 1e-4;

/// Equality constraint operator.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintMatrix {
    Dense(RealMatrix),
    /// `[M, -M]`: `2n` columns built from a `k x n` matrix, the shape produced
    /// by splitting a free vector into positive and negative parts.
    SignSplit(RealMatrix),
}

impl ConstraintMatrix {
    pub fn rows(&self) -> usize {
        self.base().rows()
    }

    pub fn cols(&self) -> usize {
        match self {
            ConstraintMatrix::Dense(m) => m.cols(),
            ConstraintMatrix::SignSplit(m) => 2 * m.cols(),
        }
    }

    /// The matrix whose rows determine row dependence.
    fn base(&self) -> &RealMatrix {
        match self {
            ConstraintMatrix::Dense(m) | ConstraintMatrix::SignSplit(m) => m,
        }
    }

    pub fn to_dense(&self) -> RealMatrix {
        match self {
            ConstraintMatrix::Dense(m) => m.clone(),
            ConstraintMatrix::SignSplit(m) => {
                let n = m.cols();
                RealMatrix::from_fn(m.rows(), 2 * n, |i, j| if j < n { m[(i, j)] } else { -m[(i, j - n)] })
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ConstraintMatrix::Dense(m) => m.matvec(x),
            ConstraintMatrix::SignSplit(m) => {
                let n = m.cols();
                let diff: Vec<f64> = (0..n).map(|j| x[j] - x[n + j]).collect();
                m.matvec(&diff)
            }
        }
    }

    pub fn t_matvec(&self, y: &[f64]) -> Vec<f64> {
        match self {
            ConstraintMatrix::Dense(m) => m.t_matvec(y),
            ConstraintMatrix::SignSplit(m) => {
                let half = m.t_matvec(y);
                let mut out = half.clone();
                out.extend(half.into_iter().map(|v| -v));
                out
            }
        }
    }

    /// `A diag(theta) Aᵀ`.
    pub fn weighted_gram(&self, theta: &[f64]) -> RealMatrix {
        match self {
            ConstraintMatrix::Dense(m) => scaled_outer(m, theta),
            ConstraintMatrix::SignSplit(m) => {
                let n = m.cols();
                let folded: Vec<f64> = (0..n).map(|j| theta[j] + theta[n + j]).collect();
                scaled_outer(m, &folded)
            }
        }
    }

    fn select_rows(&self, rows: &[usize]) -> ConstraintMatrix {
        let m = self.base();
        let sub = RealMatrix::from_fn(rows.len(), m.cols(), |i, j| m[(rows[i], j)]);
        match self {
            ConstraintMatrix::Dense(_) => ConstraintMatrix::Dense(sub),
            ConstraintMatrix::SignSplit(_) => ConstraintMatrix::SignSplit(sub),
        }
    }
}

/// `M diag(w) Mᵀ` through a GEMM on `M diag(√w)`.
fn scaled_outer(m: &RealMatrix, w: &[f64]) -> RealMatrix {
    let (k, n) = (m.rows(), m.cols());
    let roots: Vec<f64> = w.iter().map(|v| v.max(0.0).sqrt()).collect();
    let mut scaled = Vec::with_capacity(k * n);
    for i in 0..k {
        scaled.extend(m.row(i).iter().zip(&roots).map(|(a, r)| a * r));
    }
    let mut out = vec![0.0; k * k];
    if k > 0 && n > 0 {
        // SAFETY: `scaled` is k x n row-major and `out` is k x k row-major; the
        // second operand reads `scaled` transposed through swapped strides.
        unsafe {
            matrixmultiply::dgemm(
                k,
                n,
                k,
                1.0,
                scaled.as_ptr(),
                n as isize,
                1,
                scaled.as_ptr(),
                1,
                n as isize,
                0.0,
                out.as_mut_ptr(),
                k as isize,
                1,
            );
        }
    }
    RealMatrix::from_fn(k, k, |i, j| if i <= j { out[i * k + j] } else { out[j * k + i] })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: ConstraintMatrix,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// Problem with all variables non-negative.
    pub fn nonnegative(objective: Vec<f64>, constraints: ConstraintMatrix, rhs: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            constraints,
            rhs,
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.constraints.cols();
        if self.objective.len() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Dimension(format!(
                "LP has {n} columns but objective/lower/upper have {}/{}/{} entries",
                self.objective.len(),
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.rhs.len() != self.constraints.rows() {
            return Err(Error::Dimension(format!(
                "LP has {} rows but {} right-side entries",
                self.constraints.rows(),
                self.rhs.len()
            )));
        }
        if self.rhs.iter().chain(&self.objective).any(|v| !v.is_finite()) {
            return Err(Error::Validation("objective and right side must be finite".into()));
        }
        if self.lower.contains(&f64::INFINITY) || self.upper.contains(&f64::NEG_INFINITY) {
            return Err(Error::Validation("lower bounds must be < +inf and upper bounds > -inf".into()));
        }
        Ok(())
    }

    /// Plain-text dump: `c`, `A`, `b` and `bounds` blocks, comma separated.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# minimize c'x subject to A x = b, lower <= x <= upper\n");
        let join = |v: &[f64]| v.iter().map(|x| fmt_bound(*x)).collect::<Vec<_>>().join(",");
        let a = self.constraints.to_dense();
        let _ = writeln!(out, "c\n{}", join(&self.objective));
        let _ = writeln!(out, "A {} {}", a.rows(), a.cols());
        for i in 0..a.rows() {
            let _ = writeln!(out, "{}", join(a.row(i)));
        }
        let _ = writeln!(out, "b\n{}", join(&self.rhs));
        let _ = writeln!(out, "bounds");
        for (l, u) in self.lower.iter().zip(&self.upper) {
            let _ = writeln!(out, "{},{}", fmt_bound(*l), fmt_bound(*u));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<LinearProgram> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("unexpected end of file, expected {what}"),
            })
        };
        let parse_row = |(line, l): (usize, &str)| -> Result<Vec<f64>> {
            if l.is_empty() {
                return Ok(Vec::new());
            }
            l.split(',')
                .map(|t| parse_bound(t.trim()).ok_or_else(|| Error::Parse { line, msg: format!("bad number `{t}`") }))
                .collect()
        };
        let expect = |(line, l): (usize, &str), tag: &str| {
            if l == tag {
                Ok(())
            } else {
                Err(Error::Parse { line, msg: format!("expected `{tag}`, got `{l}`") })
            }
        };
        expect(next("c")?, "c")?;
        let objective = parse_row(next("objective")?)?;
        let (line, header) = next("A header")?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        let (rows, cols) = match dims.as_slice() {
            ["A", r, c] => (
                r.parse::<usize>().map_err(|e| Error::Parse { line, msg: e.to_string() })?,
                c.parse::<usize>().map_err(|e| Error::Parse { line, msg: e.to_string() })?,
            ),
            _ => return Err(Error::Parse { line, msg: format!("expected `A rows cols`, got `{header}`") }),
        };
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            data.extend(parse_row(next("A row")?)?);
        }
        let a = RealMatrix::from_vec(rows, cols, data)?;
        expect(next("b")?, "b")?;
        let rhs = if rows == 0 { Vec::new() } else { parse_row(next("right side")?)? };
        expect(next("bounds")?, "bounds")?;
        let (mut lower, mut upper) = (Vec::with_capacity(cols), Vec::with_capacity(cols));
        for _ in 0..cols {
            let b = parse_row(next("bound")?)?;
            let [l, u] = b.as_slice() else {
                return Err(Error::Parse { line: 0, msg: "bounds need `lower,upper`".into() });
            };
            lower.push(*l);
            upper.push(*u);
        }
        let lp = LinearProgram { objective, constraints: ConstraintMatrix::Dense(a), rhs, lower, upper };
        lp.validate()?;
        Ok(lp)
    }
}

fn fmt_bound(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        x.to_string()
    }
}

fn parse_bound(s: &str) -> Option<f64> {
    match s {
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

/// Objective values and residuals of one interior-point iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateRecord {
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `‖b - Ax‖∞ / (1 + ‖b‖∞)`, bound residuals included.
    pub primal_infeasibility: f64,
    /// `‖c - Aᵀy - z + s‖∞ / (1 + ‖c‖∞)`.
    pub dual_infeasibility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub primal: Vec<f64>,
    /// Equality multipliers; zero on rows removed as dependent.
    pub dual: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    /// `|cᵀx - dual objective| / (1 + |cᵀx|)`.
    pub duality_gap: f64,
    /// `‖b - Ax‖∞` over all original rows.
    pub primal_infeasibility: f64,
    pub status: LpStatus,
    pub iterations: usize,
    pub trace: Vec<IterateRecord>,
}

/// How an original variable maps onto internal non-negative columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = offset + sign * x_int[col]`.
    Single { col: usize, sign: f64, offset: f64 },
    /// `x = x_int[pos] - x_int[neg]`.
    Free { pos: usize, neg: usize },
    Fixed { value: f64 },
}

/// Internal problem `min cᵀx, Ax = b, 0 <= x <= u` over mapped columns.
struct Standardized<'a> {
    op: ConstraintMatrix,
    kept_rows: Vec<usize>,
    maps: Vec<VarMap>,
    /// Original variable and sign of each internal column.
    col_source: Vec<(usize, f64)>,
    c: Vec<f64>,
    b: Vec<f64>,
    /// `+inf` for columns without an upper bound.
    u: Vec<f64>,
    constant: f64,
    lp: &'a LinearProgram,
}

impl Standardized<'_> {
    fn n_orig(&self) -> usize {
        self.maps.len()
    }

    fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.n_orig()];
        for (&(j, sign), &v) in self.col_source.iter().zip(x) {
            full[j] += sign * v;
        }
        full
    }

    fn ax(&self, x: &[f64]) -> Vec<f64> {
        self.op.matvec(&self.expand(x))
    }

    fn aty(&self, y: &[f64]) -> Vec<f64> {
        let full = self.op.t_matvec(y);
        self.col_source.iter().map(|&(j, sign)| sign * full[j]).collect()
    }

    fn normal_matrix(&self, theta: &[f64]) -> RealMatrix {
        let mut folded = vec![0.0; self.n_orig()];
        for (&(j, _), &t) in self.col_source.iter().zip(theta) {
            folded[j] += t;
        }
        self.op.weighted_gram(&folded)
    }

    fn recover(&self, x: &[f64]) -> Vec<f64> {
        self.maps
            .iter()
            .map(|m| match *m {
                VarMap::Single { col, sign, offset } => offset + sign * x[col],
                VarMap::Free { pos, neg } => x[pos] - x[neg],
                VarMap::Fixed { value } => value,
            })
            .collect()
    }
}

/// Rows of `A` that are linearly independent (modified Gram–Schmidt, two
/// passes). Returns `Err` with the offending residual if a dependent row
/// has an inconsistent right side.
fn independent_rows(a: &RealMatrix, b: &[f64]) -> std::result::Result<Vec<usize>, f64> {
    let mut basis: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut kept = Vec::new();
    let b_scale = 1.0 + norm_inf(b);
    for (i, &bi) in b.iter().enumerate().take(a.rows()) {
        let row = a.row(i);
        let row_norm = dot(row, row).sqrt();
        let mut r = row.to_vec();
        let mut rho = bi;
        for _ in 0..2 {
            for (q, beta) in &basis {
                let p = dot(q, &r);
                axpy(-p, q, &mut r);
                rho -= p * beta;
            }
        }
        let rn = dot(&r, &r).sqrt();
        if rn <= DEPENDENT_ROW_TOL * row_norm.max(f64::MIN_POSITIVE) || row_norm == 0.0 {
            if rho.abs() > 1e-8 * b_scale {
                return Err(rho.abs());
            }
            continue;
        }
        r.iter_mut().for_each(|v| *v /= rn);
        basis.push((r, rho / rn));
        kept.push(i);
    }
    Ok(kept)
}

fn standardize(lp: &LinearProgram) -> std::result::Result<Standardized<'_>, LpStatus> {
    let kept_rows = match independent_rows(lp.constraints.base(), &lp.rhs) {
        Ok(rows) => rows,
        Err(_) => return Err(LpStatus::Infeasible),
    };
    let op = lp.constraints.select_rows(&kept_rows);
    let mut maps = Vec::with_capacity(lp.objective.len());
    let mut col_source = Vec::new();
    let mut u = Vec::new();
    let mut offsets = vec![0.0; lp.objective.len()];
    for (j, (&l, &h)) in lp.lower.iter().zip(&lp.upper).enumerate() {
        if l > h {
            return Err(LpStatus::Infeasible);
        }
        let map = match (l.is_finite(), h.is_finite()) {
            (true, true) if l == h => VarMap::Fixed { value: l },
            (true, _) => {
                col_source.push((j, 1.0));
                u.push(h - l);
                VarMap::Single { col: col_source.len() - 1, sign: 1.0, offset: l }
            }
            (false, true) => {
                col_source.push((j, -1.0));
                u.push(f64::INFINITY);
                VarMap::Single { col: col_source.len() - 1, sign: -1.0, offset: h }
            }
            (false, false) => {
                col_source.push((j, 1.0));
                col_source.push((j, -1.0));
                u.push(f64::INFINITY);
                u.push(f64::INFINITY);
                VarMap::Free { pos: col_source.len() - 2, neg: col_source.len() - 1 }
            }
        };
        offsets[j] = match map {
            VarMap::Single { offset, .. } => offset,
            VarMap::Fixed { value } => value,
            VarMap::Free { .. } => 0.0,
        };
        maps.push(map);
    }
    let shift = op.matvec(&offsets);
    let b: Vec<f64> = kept_rows.iter().zip(&shift).map(|(&i, s)| lp.rhs[i] - s).collect();
    let c = col_source.iter().map(|&(j, sign)| sign * lp.objective[j]).collect();
    let constant = dot(&lp.objective, &offsets);
    Ok(Standardized { op, kept_rows, maps, col_source, c, b, u, constant, lp })
}

/// Lower Cholesky factor; tiny pivots are replaced by a huge value so the
/// corresponding solution component is effectively zero.
fn cholesky(m: &RealMatrix) -> Option<RealMatrix> {
    let n = m.rows();
    let max_diag = (0..n).map(|i| m[(i, i)]).fold(0.0f64, f64::max);
    let tiny = 1e-30 * max_diag.max(1e-300);
    let mut l = RealMatrix::zeros(n, n);
    for j in 0..n {
        let lj: Vec<f64> = l.row(j)[..j].to_vec();
        let d = m[(j, j)] - dot(&lj, &lj);
        if !d.is_finite() {
            return None;
        }
        let pivot = if d <= tiny { 1e128 } else { d.sqrt() };
        l[(j, j)] = pivot;
        for i in j + 1..n {
            let s = m[(i, j)] - dot(&l.row(i)[..j], &lj);
            l[(i, j)] = s / pivot;
        }
    }
    Some(l)
}

fn cholesky_solve(l: &RealMatrix, rhs: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut y = rhs.to_vec();
    for i in 0..n {
        let s = dot(&l.row(i)[..i], &y[..i]);
        y[i] = (y[i] - s) / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

fn max_step(v: &[f64], dv: &[f64], mask: Option<&[bool]>) -> f64 {
    let mut alpha = f64::INFINITY;
    for (i, (&x, &d)) in v.iter().zip(dv).enumerate() {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        if d < 0.0 {
            alpha = alpha.min(-x / d);
        }
    }
    alpha
}

struct Direction {
    dx: Vec<f64>,
    dy: Vec<f64>,
    dz: Vec<f64>,
    dw: Vec<f64>,
    ds: Vec<f64>,
}

/// Solves an LP to a certified optimum or reports why it could not.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let std = match standardize(lp) {
        Ok(s) => s,
        Err(status) => return Ok(failed(lp, status, 0)),
    };
    Ok(interior_point(&std))
}

fn failed(lp: &LinearProgram, status: LpStatus, iterations: usize) -> LpSolution {
    LpSolution {
        primal: vec![f64::NAN; lp.objective.len()],
        dual: vec![f64::NAN; lp.rhs.len()],
        objective: f64::NAN,
        dual_objective: f64::NAN,
        duality_gap: f64::INFINITY,
        primal_infeasibility: f64::INFINITY,
        status,
        iterations,
        trace: Vec::new(),
    }
}

fn interior_point(p: &Standardized<'_>) -> LpSolution {
    let n = p.c.len();
    let m = p.b.len();
    let bounded: Vec<bool> = p.u.iter().map(|u| u.is_finite()).collect();
    let nb = bounded.iter().filter(|&&b| b).count();
    let free_pairs: Vec<(usize, usize)> = p
        .maps
        .iter()
        .filter_map(|m| match *m {
            VarMap::Free { pos, neg } => Some((pos, neg)),
            _ => None,
        })
        .collect();
    let b_norm = norm_inf(&p.b);
    let c_norm = norm_inf(&p.c);
    let u_norm = p.u.iter().filter(|u| u.is_finite()).fold(0.0f64, |a, &u| a.max(u));
    let scale = 1.0 + b_norm.max(c_norm).max(u_norm);

    if n == 0 {
        // every variable fixed: feasible iff the shifted right side vanishes
        let status = if b_norm <= FEASIBILITY_TOL * (1.0 + norm_inf(&p.lp.rhs)) {
            LpStatus::Optimal
        } else {
            LpStatus::Infeasible
        };
        return finish(p, &[], &vec![0.0; m], status, 0, Vec::new(), 0.0);
    }

    // starting point after Mehrotra
    let ones = vec![1.0; n];
    let Some(l0) = cholesky(&p.normal_matrix(&ones)) else {
        return failed(p.lp, LpStatus::NumericalFailure, 0);
    };
    let mut x = p.aty(&cholesky_solve(&l0, &p.b));
    let mut y = cholesky_solve(&l0, &p.ax(&p.c));
    let aty = p.aty(&y);
    let mut z: Vec<f64> = p.c.iter().zip(&aty).map(|(c, a)| c - a).collect();
    let shift_x = (-1.5 * x.iter().cloned().fold(f64::INFINITY, f64::min)).max(0.0);
    let shift_z = (-1.5 * z.iter().cloned().fold(f64::INFINITY, f64::min)).max(0.0);
    x.iter_mut().for_each(|v| *v += shift_x);
    z.iter_mut().for_each(|v| *v += shift_z);
    let xz = dot(&x, &z);
    let (sx, sz) = (x.iter().sum::<f64>(), z.iter().sum::<f64>());
    let dx0 = if sz > 0.0 { 0.5 * xz / sz } else { 0.0 };
    let dz0 = if sx > 0.0 { 0.5 * xz / sx } else { 0.0 };
    x.iter_mut().for_each(|v| *v = (*v + dx0).max(1e-2 * scale.min(1e2)));
    z.iter_mut().for_each(|v| *v = (*v + dz0).max(1e-2 * scale.min(1e2)));
    let mut w = vec![0.0; n];
    let mut s = vec![0.0; n];
    for i in 0..n {
        if bounded[i] {
            x[i] = x[i].min(0.5 * p.u[i]);
            if x[i] <= 0.0 {
                x[i] = 0.5 * p.u[i];
            }
            w[i] = p.u[i] - x[i];
            s[i] = z[i];
        }
    }
    // a degenerate box [0, 0] leaves no interior
    if (0..n).any(|i| bounded[i] && p.u[i] <= 0.0) {
        return failed(p.lp, LpStatus::NumericalFailure, 0);
    }

    let mut trace = Vec::new();
    let mut dense_op: Option<RealMatrix> = None;
    let mut best_primal_res = f64::INFINITY;
    let mut best_dual_res = f64::INFINITY;
    for iter in 0..MAX_ITERATIONS {
        let ax = p.ax(&x);
        let r_b: Vec<f64> = p.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let aty = p.aty(&y);
        let r_c: Vec<f64> = (0..n).map(|i| p.c[i] - aty[i] - z[i] + s[i]).collect();
        let r_u: Vec<f64> = (0..n).map(|i| if bounded[i] { p.u[i] - x[i] - w[i] } else { 0.0 }).collect();

        let pobj = dot(&p.c, &x);
        let dobj = dot(&p.b, &y) - (0..n).filter(|&i| bounded[i]).map(|i| p.u[i] * s[i]).sum::<f64>();
        let primal_res = norm_inf(&r_b).max(norm_inf(&r_u)) / (1.0 + b_norm.max(u_norm));
        let dual_res = norm_inf(&r_c) / (1.0 + c_norm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs());
        trace.push(IterateRecord {
            primal_objective: pobj + p.constant,
            dual_objective: dobj + p.constant,
            primal_infeasibility: primal_res,
            dual_infeasibility: dual_res,
        });
        best_primal_res = best_primal_res.min(primal_res);
        best_dual_res = best_dual_res.min(dual_res);

        if gap <= GAP_TOL && primal_res <= FEASIBILITY_TOL && dual_res <= FEASIBILITY_TOL {
            return finish(p, &x, &y, LpStatus::Optimal, iter, trace, dobj + p.constant);
        }
        if gap <= CROSSOVER_GAP && primal_res <= 1e3 * FEASIBILITY_TOL {
            let dense = dense_op.get_or_insert_with(|| p.op.to_dense());
            let iterate = Iterate { x: &x, z: &z, w: &w, s: &s, y: &y };
            if let Some((xv, yv, dv)) = crossover(p, dense, &iterate, &bounded) {
                trace.push(IterateRecord {
                    primal_objective: dot(&p.c, &xv) + p.constant,
                    dual_objective: dv + p.constant,
                    primal_infeasibility: 0.0,
                    dual_infeasibility: 0.0,
                });
                return finish(p, &xv, &yv, LpStatus::Optimal, iter + 1, trace, dv + p.constant);
            }
        }
        let x_norm = norm_inf(&x);
        let yz_norm = norm_inf(&y).max(norm_inf(&z)).max(norm_inf(&s));
        if yz_norm > DIVERGENCE * scale && primal_res > 1e3 * best_primal_res.max(FEASIBILITY_TOL) {
            return finish(p, &x, &y, LpStatus::Infeasible, iter, trace, dobj + p.constant);
        }
        if yz_norm > DIVERGENCE * scale && primal_res > FEASIBILITY_TOL && dual_res <= FEASIBILITY_TOL {
            return finish(p, &x, &y, LpStatus::Infeasible, iter, trace, dobj + p.constant);
        }
        if x_norm > DIVERGENCE * scale && dual_res > FEASIBILITY_TOL && primal_res <= FEASIBILITY_TOL {
            return finish(p, &x, &y, LpStatus::Unbounded, iter, trace, dobj + p.constant);
        }

        let mu = (dot(&x, &z) + dot(&w, &s)) / (n + nb) as f64;
        let theta: Vec<f64> = (0..n)
            .map(|i| {
                let d = z[i] / x[i] + if bounded[i] { s[i] / w[i] } else { 0.0 };
                1.0 / d
            })
            .collect();
        let Some(l) = cholesky(&p.normal_matrix(&theta)) else {
            return finish(p, &x, &y, LpStatus::NumericalFailure, iter, trace, dobj + p.constant);
        };

        let solve = |r_xz: &[f64], r_ws: &[f64]| -> Direction {
            let r_hat: Vec<f64> = (0..n)
                .map(|i| {
                    let mut v = r_c[i] - r_xz[i] / x[i];
                    if bounded[i] {
                        v += (r_ws[i] - s[i] * r_u[i]) / w[i];
                    }
                    v
                })
                .collect();
            let th_r: Vec<f64> = theta.iter().zip(&r_hat).map(|(t, r)| t * r).collect();
            let rhs: Vec<f64> = r_b.iter().zip(p.ax(&th_r)).map(|(a, b)| a + b).collect();
            let mut dy = cholesky_solve(&l, &rhs);
            let atdy = p.aty(&dy);
            let mut dx: Vec<f64> = (0..n).map(|i| theta[i] * (atdy[i] - r_hat[i])).collect();
            // iterative refinement against the unreduced equation A dx = r_b
            for _ in 0..REFINEMENT_STEPS {
                let adx = p.ax(&dx);
                let e: Vec<f64> = r_b.iter().zip(&adx).map(|(r, a)| r - a).collect();
                if norm_inf(&e) <= 1e-15 * (1.0 + b_norm) {
                    break;
                }
                let ddy = cholesky_solve(&l, &e);
                let atddy = p.aty(&ddy);
                axpy(1.0, &ddy, &mut dy);
                dx.iter_mut().zip(theta.iter().zip(&atddy)).for_each(|(d, (t, a))| *d += t * a);
            }
            let dz: Vec<f64> = (0..n).map(|i| (r_xz[i] - z[i] * dx[i]) / x[i]).collect();
            let dw: Vec<f64> = (0..n).map(|i| if bounded[i] { r_u[i] - dx[i] } else { 0.0 }).collect();
            let ds: Vec<f64> = (0..n)
                .map(|i| if bounded[i] { (r_ws[i] - s[i] * dw[i]) / w[i] } else { 0.0 })
                .collect();
            Direction { dx, dy, dz, dw, ds }
        };

        // predictor
        let r_xz: Vec<f64> = (0..n).map(|i| -x[i] * z[i]).collect();
        let r_ws: Vec<f64> = (0..n).map(|i| -w[i] * s[i]).collect();
        let aff = solve(&r_xz, &r_ws);
        let ap = max_step(&x, &aff.dx, None).min(max_step(&w, &aff.dw, Some(&bounded))).min(1.0);
        let ad = max_step(&z, &aff.dz, None).min(max_step(&s, &aff.ds, Some(&bounded))).min(1.0);
        let mu_aff = ((0..n).map(|i| (x[i] + ap * aff.dx[i]) * (z[i] + ad * aff.dz[i])).sum::<f64>()
            + (0..n)
                .filter(|&i| bounded[i])
                .map(|i| (w[i] + ap * aff.dw[i]) * (s[i] + ad * aff.ds[i]))
                .sum::<f64>())
            / (n + nb) as f64;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        // corrector
        let r_xz: Vec<f64> = (0..n).map(|i| sigma * mu - x[i] * z[i] - aff.dx[i] * aff.dz[i]).collect();
        let r_ws: Vec<f64> = (0..n)
            .map(|i| if bounded[i] { sigma * mu - w[i] * s[i] - aff.dw[i] * aff.ds[i] } else { 0.0 })
            .collect();
        let d = solve(&r_xz, &r_ws);
        if d.dx.iter().chain(&d.dy).chain(&d.dz).any(|v| !v.is_finite()) {
            return finish(p, &x, &y, LpStatus::NumericalFailure, iter, trace, dobj + p.constant);
        }
        let ap = (STEP_FRACTION * max_step(&x, &d.dx, None).min(max_step(&w, &d.dw, Some(&bounded)))).min(1.0);
        let ad = (STEP_FRACTION * max_step(&z, &d.dz, None).min(max_step(&s, &d.ds, Some(&bounded)))).min(1.0);
        for i in 0..n {
            x[i] += ap * d.dx[i];
            z[i] += ad * d.dz[i];
            if bounded[i] {
                w[i] += ap * d.dw[i];
                s[i] += ad * d.ds[i];
            }
        }
        axpy(ad, &d.dy, &mut y);
        // keep split free variables from drifting off together
        for &(pos, neg) in &free_pairs {
            let common = x[pos].min(x[neg]);
            if common > 1.0 {
                x[pos] -= common - 1.0;
                x[neg] -= common - 1.0;
            }
        }
    }
    let dobj = trace.last().map_or(f64::NAN, |t| t.dual_objective);
    finish(p, &x, &y, LpStatus::NumericalFailure, MAX_ITERATIONS, trace, dobj)
}

struct Iterate<'a> {
    x: &'a [f64],
    z: &'a [f64],
    w: &'a [f64],
    s: &'a [f64],
    y: &'a [f64],
}

/// Guesses the optimal face from the complementarity pattern of an iterate,
/// solves for the vertex on it and projects `y` onto the matching dual face.
/// Returns `(x, y, dual objective)` when both are feasible and the gap closes.
fn crossover(p: &Standardized<'_>, dense: &RealMatrix, it: &Iterate<'_>, bounded: &[bool]) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let n = p.c.len();
    let m = p.b.len();
    let at_upper: Vec<bool> = (0..n).map(|i| bounded[i] && it.w[i] < it.s[i]).collect();
    let basic: Vec<usize> = (0..n).filter(|&i| !at_upper[i] && it.x[i] >= it.z[i]).collect();
    if basic.len() > m {
        return None;
    }
    let column = |i: usize| {
        let (j, sign) = p.col_source[i];
        (0..m).map(move |r| sign * dense[(r, j)])
    };
    let a_b = RealMatrix::from_fn(m, basic.len(), |r, k| column(basic[k]).nth(r).unwrap_or(0.0));

    let mut x = vec![0.0; n];
    for i in (0..n).filter(|&i| at_upper[i]) {
        x[i] = p.u[i];
    }
    let ax_fixed = p.ax(&x);
    let rhs: Vec<f64> = p.b.iter().zip(&ax_fixed).map(|(b, a)| b - a).collect();
    let x_b = least_squares(&a_b, &rhs).ok()?;
    for (&i, &v) in basic.iter().zip(&x_b) {
        if v < 0.0 || v > p.u[i] {
            return None;
        }
        x[i] = v;
    }
    let b_scale = 1.0 + norm_inf(&p.b);
    let residual: Vec<f64> = p.b.iter().zip(p.ax(&x)).map(|(b, a)| b - a).collect();
    if norm_inf(&residual) > FEASIBILITY_TOL * b_scale {
        return None;
    }

    // min-norm correction of y so that the basic reduced costs vanish
    let aty = p.aty(it.y);
    let g: Vec<f64> = basic.iter().map(|&i| p.c[i] - aty[i]).collect();
    let mut y = it.y.to_vec();
    if !basic.is_empty() {
        let gram = RealMatrix::from_fn(basic.len(), basic.len(), |a, b| {
            (0..m).map(|r| a_b[(r, a)] * a_b[(r, b)]).sum()
        });
        let l = cholesky(&gram)?;
        if (0..basic.len()).any(|i| l[(i, i)] >= 1e127) {
            return None;
        }
        let v = cholesky_solve(&l, &g);
        axpy(1.0, &a_b.matvec(&v), &mut y);
    }
    let reduced: Vec<f64> = p.c.iter().zip(p.aty(&y)).map(|(c, a)| c - a).collect();
    let tol = FEASIBILITY_TOL * (1.0 + norm_inf(&p.c));
    let is_basic = {
        let mut mask = vec![false; n];
        basic.iter().for_each(|&i| mask[i] = true);
        mask
    };
    for i in 0..n {
        let ok = if is_basic[i] {
            reduced[i].abs() <= tol
        } else if at_upper[i] {
            reduced[i] <= tol
        } else {
            reduced[i] >= -tol
        };
        if !ok {
            return None;
        }
    }
    let pobj = dot(&p.c, &x);
    let dobj = dot(&p.b, &y) - (0..n).filter(|&i| bounded[i]).map(|i| p.u[i] * (-reduced[i]).max(0.0)).sum::<f64>();
    if (pobj - dobj).abs() > GAP_TOL * (1.0 + pobj.abs()) {
        return None;
    }
    Some((x, y, dobj))
}

fn finish(
    p: &Standardized<'_>,
    x: &[f64],
    y: &[f64],
    status: LpStatus,
    iterations: usize,
    trace: Vec<IterateRecord>,
    dual_objective: f64,
) -> LpSolution {
    let primal = p.recover(x);
    let mut dual = vec![0.0; p.lp.rhs.len()];
    for (&row, &v) in p.kept_rows.iter().zip(y) {
        dual[row] = v;
    }
    let objective = dot(&p.lp.objective, &primal);
    let ax = p.lp.constraints.matvec(&primal);
    let primal_infeasibility = ax
        .iter()
        .zip(&p.lp.rhs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mut status = status;
    if status == LpStatus::Optimal && primal_infeasibility > FEASIBILITY_TOL * (1.0 + norm_inf(&p.lp.rhs)) {
        // a dependent row disagrees beyond tolerance
        status = LpStatus::NumericalFailure;
    }
    LpSolution {
        primal,
        dual,
        objective,
        dual_objective,
        duality_gap: (objective - dual_objective).abs() / (1.0 + objective.abs()),
        primal_infeasibility,
        status,
        iterations,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(rows: &[Vec<f64>]) -> ConstraintMatrix {
        ConstraintMatrix::Dense(RealMatrix::from_rows(rows).unwrap())
    }

    #[test]
    fn free_variable_equality() {
        let lp = LinearProgram {
            objective: vec![1.0],
            constraints: dense(&[vec![1.0]]),
            rhs: vec![1.0],
            lower: vec![f64::NEG_INFINITY],
            upper: vec![f64::INFINITY],
        };
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.primal[0] - 1.0).abs() < 1e-9, "{:?}", sol.primal);
        assert!((sol.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_variable_vertex() {
        // vertices (2,0) with value 2 and (0,1) with value 1
        let lp = LinearProgram::nonnegative(vec![1.0, 1.0], dense(&[vec![1.0, 2.0]]), vec![2.0]);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.primal[0].abs() < 1e-8 && (sol.primal[1] - 1.0).abs() < 1e-8);
        assert!((sol.objective - 1.0).abs() < 1e-9);
        assert!(sol.duality_gap <= GAP_TOL);
    }

    #[test]
    fn bounded_and_shifted_variables() {
        // min -x1 - x2 s.t. x1 + x2 + x3 = 3, 1 <= x1 <= 1.5, x2 <= 1, x3 >= 0
        let lp = LinearProgram {
            objective: vec![-1.0, -1.0, 0.0],
            constraints: dense(&[vec![1.0, 1.0, 1.0]]),
            rhs: vec![3.0],
            lower: vec![1.0, f64::NEG_INFINITY, 0.0],
            upper: vec![1.5, 1.0, f64::INFINITY],
        };
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 2.5).abs() < 1e-8, "{}", sol.objective);
        assert!((sol.primal[0] - 1.5).abs() < 1e-7 && (sol.primal[1] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn fixed_variable() {
        let lp = LinearProgram {
            objective: vec![1.0, 2.0],
            constraints: dense(&[vec![1.0, 1.0]]),
            rhs: vec![3.0],
            lower: vec![0.0, 1.0],
            upper: vec![f64::INFINITY, 1.0],
        };
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.primal[0] - 2.0).abs() < 1e-8 && sol.primal[1] == 1.0);
    }

    #[test]
    fn detects_infeasible() {
        let lp = LinearProgram::nonnegative(vec![1.0, 1.0], dense(&[vec![1.0, 1.0]]), vec![-1.0]);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
        // inconsistent duplicate rows are caught during row reduction
        let lp = LinearProgram::nonnegative(
            vec![1.0, 1.0],
            dense(&[vec![1.0, 1.0], vec![2.0, 2.0]]),
            vec![1.0, 3.0],
        );
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let lp = LinearProgram::nonnegative(vec![-1.0, 0.0], dense(&[vec![1.0, -1.0]]), vec![0.0]);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn consistent_dependent_rows_are_dropped() {
        let lp = LinearProgram::nonnegative(
            vec![1.0, 1.0],
            dense(&[vec![1.0, 2.0], vec![0.0, 0.0], vec![2.0, 4.0]]),
            vec![2.0, 0.0, 4.0],
        );
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 1.0).abs() < 1e-9);
        assert_eq!(sol.dual[1], 0.0);
    }

    #[test]
    fn sign_split_matches_dense() {
        let m = RealMatrix::from_rows(&[vec![1.0, 2.0, -1.0], vec![0.5, 0.0, 3.0]]).unwrap();
        let split = ConstraintMatrix::SignSplit(m.clone());
        let dense = ConstraintMatrix::Dense(split.to_dense());
        let theta = [0.5, 1.0, 2.0, 3.0, 0.25, 1.0];
        let (a, b) = (split.weighted_gram(&theta), dense.weighted_gram(&theta));
        assert!(a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| (x - y).abs() < 1e-12));
        let x = [1.0, 2.0, 3.0, 0.5, 0.0, -1.0];
        assert_eq!(split.matvec(&x), dense.matvec(&x));
        assert_eq!(split.t_matvec(&[1.0, -2.0]), dense.t_matvec(&[1.0, -2.0]));
    }

    #[test]
    fn text_round_trip() {
        let lp = LinearProgram {
            objective: vec![1.0, -0.5],
            constraints: dense(&[vec![1.0, 2.0]]),
            rhs: vec![2.0],
            lower: vec![0.0, f64::NEG_INFINITY],
            upper: vec![f64::INFINITY, 3.0],
        };
        let text = lp.to_text();
        assert_eq!(LinearProgram::from_text(&text).unwrap(), lp);
        assert!(LinearProgram::from_text("c\n1\nA 1 2\n1,2\n").is_err());
    }

    #[test]
    fn validation_errors() {
        let lp = LinearProgram::nonnegative(vec![1.0], dense(&[vec![1.0, 1.0]]), vec![1.0]);
        assert!(matches!(solve_lp(&lp), Err(Error::Dimension(_))));
    }
}
