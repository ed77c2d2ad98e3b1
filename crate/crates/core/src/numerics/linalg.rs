use crate::error::{Error, Result};
use crate::numerics::matrix::{dot, ComplexMatrix, RealMatrix};

const MAX_JACOBI_SWEEPS: usize = 64;
const SYMMETRY_TOL: f64 = 1e-10;
const RANK_TOL: f64 = 1e-10;

/// All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(g: &RealMatrix) -> Result<Vec<f64>> {
    if !g.is_square() {
        return Err(Error::Dimension(format!(
            "eigenvalues need a square matrix, got {}x{}",
            g.rows(),
            g.cols()
        )));
    }
    let n = g.rows();
    let scale = g.max_abs().max(1.0);
    let asym = (0..n)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .fold(0.0f64, |m, (i, j)| m.max((g[(i, j)] - g[(j, i)]).abs()));
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::Validation(format!(
            "matrix is not symmetric (max asymmetry {asym:.3e})"
        )));
    }
    let mut a = RealMatrix::from_fn(n, n, |i, j| 0.5 * (g[(i, j)] + g[(j, i)]));
    if n == 1 {
        return Ok(vec![a[(0, 0)]]);
    }

    let frob = a.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut converged = false;
    for _ in 0..MAX_JACOBI_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * frob || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "Jacobi iteration did not converge in {MAX_JACOBI_SWEEPS} sweeps"
        )));
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn extreme_eigenvalues(g: &RealMatrix) -> Result<(f64, f64)> {
    let eig = symmetric_eigenvalues(g)?;
    match (eig.first(), eig.last()) {
        (Some(&lo), Some(&hi)) => Ok((lo, hi)),
        _ => Err(Error::Dimension("empty matrix has no eigenvalues".into())),
    }
}

/// Embeds a Hermitian `A + iB` as the real symmetric `[[A, -B], [B, A]]`,
/// which has the same spectrum with every eigenvalue doubled.
fn hermitian_embedding(h: &ComplexMatrix) -> Result<RealMatrix> {
    if !h.is_square() {
        return Err(Error::Dimension(format!(
            "eigenvalues need a square matrix, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let n = h.rows();
    Ok(RealMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    }))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(h: &ComplexMatrix) -> Result<Vec<f64>> {
    let doubled = symmetric_eigenvalues(&hermitian_embedding(h)?)?;
    Ok(doubled.into_iter().step_by(2).collect())
}

pub fn extreme_eigenvalues_hermitian(h: &ComplexMatrix) -> Result<(f64, f64)> {
    let eig = hermitian_eigenvalues(h)?;
    match (eig.first(), eig.last()) {
        (Some(&lo), Some(&hi)) => Ok((lo, hi)),
        _ => Err(Error::Dimension("empty matrix has no eigenvalues".into())),
    }
}

/// Householder QR of a tall matrix. Reflector `j` acts on rows `j..m`.
struct Householder {
    m: usize,
    /// Reflector vectors, each of length `m - j`, normalized so that `H = I - 2vvᵀ`.
    vs: Vec<Vec<f64>>,
    /// Upper triangle, `n x n`, row-major.
    r: RealMatrix,
}

impl Householder {
    fn factor(a: &RealMatrix) -> Self {
        let (m, n) = (a.rows(), a.cols());
        assert!(m >= n, "Householder QR expects a tall matrix");
        let mut w = a.clone();
        let mut vs = Vec::with_capacity(n);
        for j in 0..n {
            let mut v: Vec<f64> = (j..m).map(|i| w[(i, j)]).collect();
            let alpha = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if alpha > 0.0 {
                let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
                v[0] += sign * alpha;
                let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter_mut().for_each(|x| *x /= vn);
                for c in j..n {
                    let proj: f64 = (j..m).map(|i| v[i - j] * w[(i, c)]).sum();
                    for i in j..m {
                        w[(i, c)] -= 2.0 * proj * v[i - j];
                    }
                }
            }
            vs.push(v);
        }
        let r = RealMatrix::from_fn(n, n, |i, j| if j >= i { w[(i, j)] } else { 0.0 });
        Householder { m, vs, r }
    }

    fn apply_q(&self, x: &mut [f64]) {
        for (j, v) in self.vs.iter().enumerate().rev() {
            self.reflect(j, v, x);
        }
    }

    fn apply_qt(&self, x: &mut [f64]) {
        for (j, v) in self.vs.iter().enumerate() {
            self.reflect(j, v, x);
        }
    }

    fn reflect(&self, j: usize, v: &[f64], x: &mut [f64]) {
        let proj = dot(v, &x[j..self.m]);
        for (xi, vi) in x[j..].iter_mut().zip(v) {
            *xi -= 2.0 * proj * vi;
        }
    }

    fn pivot_ratio(&self) -> f64 {
        let n = self.r.rows();
        let diag: Vec<f64> = (0..n).map(|i| self.r[(i, i)].abs()).collect();
        let hi = diag.iter().cloned().fold(0.0, f64::max);
        let lo = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if hi == 0.0 {
            0.0
        } else {
            lo / hi
        }
    }
}

/// Orthonormal basis of `Ker(M)` for a full-row-rank `k x n` matrix, as the
/// columns of an `n x (n-k)` matrix.
pub fn kernel_basis(m: &RealMatrix) -> Result<RealMatrix> {
    let (k, n) = (m.rows(), m.cols());
    if k > n {
        return Err(Error::Dimension(format!(
            "kernel basis expects k <= n, got {k}x{n}"
        )));
    }
    if k == 0 {
        return Ok(RealMatrix::identity(n));
    }
    let qr = Householder::factor(&m.transpose());
    let ratio = qr.pivot_ratio();
    if ratio <= RANK_TOL {
        return Err(Error::RankDeficient { ratio });
    }
    let mut basis = RealMatrix::zeros(n, n - k);
    let mut e = vec![0.0; n];
    for c in 0..n - k {
        e.iter_mut().for_each(|x| *x = 0.0);
        e[k + c] = 1.0;
        qr.apply_q(&mut e);
        for (i, &v) in e.iter().enumerate() {
            basis[(i, c)] = v;
        }
    }
    Ok(basis)
}

/// Least-squares solution of `A x ≈ b` for a tall full-column-rank `A`.
pub fn least_squares(a: &RealMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(Error::Dimension(format!(
            "right side has {} entries, matrix has {m} rows",
            b.len()
        )));
    }
    if n > m {
        return Err(Error::Dimension(format!(
            "least squares needs rows >= cols, got {m}x{n}"
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let qr = Householder::factor(a);
    let ratio = qr.pivot_ratio();
    if ratio <= RANK_TOL {
        return Err(Error::RankDeficient { ratio });
    }
    let mut qtb = b.to_vec();
    qr.apply_qt(&mut qtb);
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| qr.r[(i, j)] * x[j]).sum();
        x[i] = (qtb[i] - s) / qr.r[(i, i)];
    }
    Ok(x)
}

/// Magnitudes sorted non-increasingly together with the original index of
/// each sorted position. Ties keep the lower original index first.
pub fn sorted_abs_desc(x: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut perm: Vec<usize> = (0..x.len()).collect();
    perm.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    let values = perm.iter().map(|&i| x[i].abs()).collect();
    (values, perm)
}
