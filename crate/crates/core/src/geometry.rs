//! Convex geometry of exact recovery: the cone of a sparse signal, the
//! D-norm, Gaussian widths, escape probabilities, cone/kernel intersection
//! and Maurey's empirical approximation.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::ensembles::Signal;
use crate::error::{Error, Result};
use crate::numerics::{extreme_eigenvalues, kernel_basis, RealMatrix, RngStream};
use crate::recovery::{solve_lp, ConstraintMatrix, LinearProgram, LpStatus};

/// `6 + 4√2`.
pub const SAMPLE_COMPLEXITY_C1: f64 = 6.0 + 4.0 * std::f64::consts::SQRT_2;
pub const SAMPLE_COMPLEXITY_C2: f64 = 1.5;
/// Tolerance on the cone functional for membership, relative to `max(1, ‖t‖₁)`.
pub const CONE_TOL: f64 = 1e-12;
pub const MIN_WIDTH_SAMPLES: usize = 1000;
const MAX_CONE_ATTEMPTS: usize = 1000;
const WIDTH_CHUNK: usize = 1024;
const INTERSECT_TOL: f64 = 1e-9;
const TOUCH_TOL: f64 = 1e-8;

/// Sign pattern of a sparse signal, defining the cone
/// `{t : Σ_{T⁻} t(i) - Σ_{T⁺} t(i) + Σ_{Tᶜ} |t(i)| <= 0}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeSpec {
    pub t_plus: Vec<usize>,
    pub t_minus: Vec<usize>,
    pub n: usize,
}

impl ConeSpec {
    pub fn from_signal(f: &Signal) -> Self {
        let (t_plus, t_minus) = f.support().iter().partition(|&&i| f.values()[i] > 0.0);
        ConeSpec {
            t_plus,
            t_minus,
            n: f.len(),
        }
    }

    /// `sign(f(i))` on the support, zero elsewhere.
    pub fn signs(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        self.t_plus.iter().for_each(|&i| s[i] = 1.0);
        self.t_minus.iter().for_each(|&i| s[i] = -1.0);
        s
    }

    /// Value of the cone functional at `t`.
    pub fn functional(&self, t: &[f64]) -> Result<f64> {
        if t.len() != self.n {
            return Err(Error::Dimension(format!(
                "cone lives in dimension {}, vector has {}",
                self.n,
                t.len()
            )));
        }
        Ok(self
            .signs()
            .iter()
            .zip(t)
            .map(|(&s, &x)| if s == 0.0 { x.abs() } else { -s * x })
            .sum())
    }

    pub fn contains(&self, t: &[f64]) -> Result<bool> {
        let l1: f64 = t.iter().map(|v| v.abs()).sum();
        Ok(self.functional(t)? <= CONE_TOL * l1.max(1.0))
    }
}

pub fn cone_contains(cone: &ConeSpec, t: &[f64]) -> Result<bool> {
    cone.contains(t)
}

fn check_r(n: usize, r: usize) -> Result<()> {
    if r == 0 || r > n {
        return Err(Error::Parameter(format!("need 1 <= r <= n, got r={r}, n={n}")));
    }
    Ok(())
}

/// Sum of blockwise ℓ₂ norms over consecutive blocks of `r` entries of the
/// non-increasing magnitude rearrangement of `x`.
pub fn d_norm(x: &[f64], r: usize) -> Result<f64> {
    if x.is_empty() {
        return Ok(0.0);
    }
    check_r(x.len(), r)?;
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    Ok(mags
        .chunks(r)
        .map(|block| block.iter().map(|v| v * v).sum::<f64>().sqrt())
        .sum())
}

/// Random unit vector of the cone of `f`, obtained by normalizing a random
/// boundary point of `f + ‖f‖₁B₁ⁿ` (a Dirichlet-weighted combination of a
/// random number of its signed vertices).
pub fn sample_cone_sphere(f: &Signal, rng: &mut RngStream) -> Result<Vec<f64>> {
    let n = f.len();
    let scale: f64 = f.values().iter().map(|v| v.abs()).sum();
    if scale == 0.0 {
        return Err(Error::Parameter("the cone of the zero signal is not defined".into()));
    }
    let cone = ConeSpec::from_signal(f);
    for _ in 0..MAX_CONE_ATTEMPTS {
        let vertices = 1 + rng.below(2 * n);
        let weights: Vec<f64> = (0..vertices).map(|_| -(1.0 - rng.uniform()).ln()).collect();
        let total: f64 = weights.iter().sum();
        let mut t = f.values().to_vec();
        for w in weights {
            let i = rng.below(n);
            t[i] += rng.sign() * scale * w / total;
        }
        let norm = crate::numerics::norm2(&t);
        if norm <= 1e-12 * scale {
            continue;
        }
        t.iter_mut().for_each(|v| *v /= norm);
        if cone.contains(&t)? {
            return Ok(t);
        }
    }
    Err(Error::Sampling(format!(
        "no cone point accepted after {MAX_CONE_ATTEMPTS} attempts"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√samples`.
    pub stderr: f64,
    pub samples: usize,
    pub bound: f64,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

/// Monte-Carlo estimate of `𝔼 sup_{|J|=r} (Σ_{i∈J} g(i)²)^{1/2}` for
/// `g ~ N(0, I_n)`, the Gaussian width of the D-norm unit ball.
///
/// Samples are drawn in fixed-size chunks from streams derived from `rng`,
/// so the estimate does not depend on the thread count.
pub fn gaussian_width_d_mc(n: usize, r: usize, samples: usize, rng: &RngStream) -> Result<WidthEstimate> {
    check_r(n, r)?;
    if samples < MIN_WIDTH_SAMPLES {
        return Err(Error::Parameter(format!(
            "width estimation needs at least {MIN_WIDTH_SAMPLES} samples, got {samples}"
        )));
    }
    let chunks = samples.div_ceil(WIDTH_CHUNK);
    let partials: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut stream = rng.child(c as u64, "width");
            let count = WIDTH_CHUNK.min(samples - c * WIDTH_CHUNK);
            let mut g = vec![0.0; n];
            (0..count)
                .map(|_| {
                    g.iter_mut().for_each(|v| {
                        let z = stream.standard_normal();
                        *v = z * z;
                    });
                    if r < n {
                        g.select_nth_unstable_by(r - 1, |a, b| b.total_cmp(a));
                    }
                    g[..r].iter().sum::<f64>().sqrt()
                })
                .collect()
        })
        .collect();

    let (mut sum, mut sum_sq) = (CompensatedSum::default(), CompensatedSum::default());
    for v in partials.iter().flatten() {
        sum.add(*v);
    }
    let mean = sum.value() / samples as f64;
    for v in partials.iter().flatten() {
        sum_sq.add((v - mean) * (v - mean));
    }
    let var = sum_sq.value() / (samples - 1) as f64;
    Ok(WidthEstimate {
        mean,
        stderr: (var / samples as f64).sqrt(),
        samples,
        bound: gaussian_width_d_bound(n, r)?,
    })
}

/// `√(2r ln(e^{3/2} n / r))`.
pub fn gaussian_width_d_bound(n: usize, r: usize) -> Result<f64> {
    check_r(n, r)?;
    let r_f = r as f64;
    Ok((2.0 * r_f * (1.5 + (n as f64 / r_f).ln())).sqrt())
}

/// `(6 + 4√2) r (1.5 + ln(n/r))` Gaussian measurements.
pub fn sample_complexity_gaussian(r: usize, n: usize) -> Result<f64> {
    check_r(n, r)?;
    let r_f = r as f64;
    Ok(SAMPLE_COMPLEXITY_C1 * r_f * (SAMPLE_COMPLEXITY_C2 + (n as f64 / r_f).ln()))
}

/// A probability lower bound clamped to `[0, 1]`; `vacuous` marks inputs
/// outside the regime where the bound says anything.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityBound {
    pub value: f64,
    pub vacuous: bool,
}

impl ProbabilityBound {
    fn from_gap(gap: f64) -> Self {
        if gap <= 0.0 {
            return ProbabilityBound {
                value: 0.0,
                vacuous: true,
            };
        }
        ProbabilityBound {
            value: (1.0 - 3.5 * (-gap * gap / 18.0).exp()).clamp(0.0, 1.0),
            vacuous: false,
        }
    }
}

/// `1 - 3.5 exp(-(k/√(k+1) - w)²/18)`, the probability that a random
/// codimension-`k` subspace misses a spherical set of Gaussian width `w`.
pub fn gordon_escape_probability(k: usize, w: f64) -> Result<ProbabilityBound> {
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    if w.is_nan() || w < 0.0 {
        return Err(Error::Parameter(format!("width must be non-negative, got {w}")));
    }
    let k = k as f64;
    Ok(ProbabilityBound::from_gap(k / (k + 1.0).sqrt() - w))
}

/// `1 - 3.5 exp(-(√k - √k(r,n))²/18)` with `k(r,n)` the Gaussian sample
/// complexity; vacuous for `k <= k(r,n)`.
pub fn recovery_probability_bound(k: usize, r: usize, n: usize) -> Result<ProbabilityBound> {
    let kr = sample_complexity_gaussian(r, n)?;
    if (k as f64) <= kr {
        return Ok(ProbabilityBound {
            value: 0.0,
            vacuous: true,
        });
    }
    Ok(ProbabilityBound::from_gap((k as f64).sqrt() - kr.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeKernelReport {
    /// A nonzero kernel vector lies in the cone.
    pub intersects: bool,
    /// Minimum of the cone functional over kernel vectors `t` with
    /// `Σ_{T⁺} t - Σ_{T⁻} t = 1`; `None` when no kernel vector meets that slice.
    pub objective: Option<f64>,
    /// The kernel only touches the cone boundary (objective within `1e-8` of
    /// zero, or a touching vector inside the slice `Σ_{T⁺} t - Σ_{T⁻} t = 0`).
    pub degenerate: bool,
}

/// Decides whether `Ker(Φ)` meets the cone of `f` outside the origin.
///
/// The cone functional is positively homogeneous and equals
/// `-Σ_T s(i)t(i) + ‖t_{Tᶜ}‖₁`, so every kernel vector with
/// `Σ_T s(i)t(i) > 0` scales onto the slice `Σ_T s(i)t(i) = 1`, where the
/// functional is `‖t_{Tᶜ}‖₁ - 1`; the LP minimizes `‖t_{Tᶜ}‖₁` there. Kernel
/// vectors with `Σ_T s(i)t(i) <= 0` are covered by the kernel's symmetry
/// unless the whole kernel lies in `Σ_T s(i)t(i) = 0`, in which case the
/// functional is `‖t_{Tᶜ}‖₁` and vanishes iff `Φ_T` has a kernel.
pub fn cone_kernel_intersect(phi: &RealMatrix, f: &Signal) -> Result<ConeKernelReport> {
    let (k, n) = (phi.rows(), phi.cols());
    if f.len() != n {
        return Err(Error::Dimension(format!(
            "signal has length {}, matrix has {n} columns",
            f.len()
        )));
    }
    let no = ConeKernelReport {
        intersects: false,
        objective: None,
        degenerate: false,
    };
    if k >= n {
        let (lo, hi) = extreme_eigenvalues(&phi.gram())?;
        if lo > 1e-12 * hi.max(f64::MIN_POSITIVE) {
            return Ok(no);
        }
        if k > n {
            return Err(Error::Parameter(
                "cone/kernel test needs a full-row-rank matrix".into(),
            ));
        }
    }
    let kernel = kernel_basis(phi)?;
    if f.support().is_empty() {
        return Ok(no);
    }

    let cone = ConeSpec::from_signal(f);
    let s = cone.signs();
    // whether the kernel leaves the hyperplane Σ s t = 0
    let projection = (0..kernel.cols())
        .map(|c| s.iter().enumerate().map(|(i, si)| si * kernel[(i, c)]).sum::<f64>().abs())
        .fold(0.0, f64::max);
    if projection <= 1e-10 * (f.sparsity() as f64).sqrt() {
        let (lo, hi) = extreme_eigenvalues(&phi.column_gram(f.support()))?;
        let touching = lo <= 1e-12 * hi.max(f64::MIN_POSITIVE);
        return Ok(ConeKernelReport {
            intersects: touching,
            objective: None,
            degenerate: touching,
        });
    }

    let objective = min_off_support_mass(phi, f.support(), &s)? - 1.0;
    Ok(ConeKernelReport {
        intersects: objective <= INTERSECT_TOL,
        objective: Some(objective),
        degenerate: objective.abs() <= TOUCH_TOL,
    })
}

/// `min ‖t_{Tᶜ}‖₁` over `Φt = 0`, `Σ_T s(i)t(i) = 1`, with `t_T` free and
/// `t_{Tᶜ} = u - v`.
fn min_off_support_mass(phi: &RealMatrix, support: &[usize], s: &[f64]) -> Result<f64> {
    let (k, n) = (phi.rows(), phi.cols());
    let off: Vec<usize> = (0..n).filter(|i| s[*i] == 0.0).collect();
    let (nt, nc) = (support.len(), off.len());
    let cols = nt + 2 * nc;
    let a = RealMatrix::from_fn(k + 1, cols, |i, j| {
        if i == k {
            return if j < nt { s[support[j]] } else { 0.0 };
        }
        if j < nt {
            phi[(i, support[j])]
        } else if j < nt + nc {
            phi[(i, off[j - nt])]
        } else {
            -phi[(i, off[j - nt - nc])]
        }
    });
    let mut rhs = vec![0.0; k + 1];
    rhs[k] = 1.0;
    let objective = (0..cols).map(|j| if j < nt { 0.0 } else { 1.0 }).collect();
    let mut lp = LinearProgram::nonnegative(objective, ConstraintMatrix::Dense(a), rhs);
    lp.lower[..nt].iter_mut().for_each(|l| *l = f64::NEG_INFINITY);
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective),
        status => Err(Error::Solver(status)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaureyApproximation {
    pub z: Vec<f64>,
    /// `max_i |⟨x_i, y - z⟩|`.
    pub error: f64,
}

/// Average of `m` independent copies of `Z`, where `Z = sign(y(i)) e_i` with
/// probability `|y(i)|` and `Z = 0` with probability `1 - ‖y‖₁`.
pub fn maurey_sample(y: &[f64], m: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    let mass: f64 = y.iter().map(|v| v.abs()).sum();
    if mass.is_nan() || mass > 1.0 + 1e-12 {
        return Err(Error::Parameter(format!(
            "y must lie in the unit ℓ₁ ball, ‖y‖₁ = {mass}"
        )));
    }
    if m == 0 {
        return Err(Error::Parameter("m must be at least 1".into()));
    }
    let cumulative: Vec<f64> = y
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v.abs();
            Some(*acc)
        })
        .collect();
    let mut z = vec![0.0; y.len()];
    for _ in 0..m {
        let u = rng.uniform();
        let i = cumulative.partition_point(|&c| c <= u);
        if i < y.len() {
            z[i] += y[i].signum();
        }
    }
    z.iter_mut().for_each(|v| *v /= m as f64);
    Ok(z)
}

/// Maurey's empirical approximation of `y` with error in the norm
/// `‖v‖_X = max_i |⟨x_i, v⟩|`.
pub fn maurey_approximate(
    y: &[f64],
    m: usize,
    x_vectors: &[Vec<Complex64>],
    rng: &mut RngStream,
) -> Result<MaureyApproximation> {
    if let Some(x) = x_vectors.iter().find(|x| x.len() != y.len()) {
        return Err(Error::Dimension(format!(
            "x vectors must have length {}, got {}",
            y.len(),
            x.len()
        )));
    }
    let z = maurey_sample(y, m, rng)?;
    let error = x_vectors
        .iter()
        .map(|x| {
            x.iter()
                .zip(y.iter().zip(&z))
                .map(|(xi, (yi, zi))| xi * (yi - zi))
                .sum::<Complex64>()
                .norm()
        })
        .fold(0.0, f64::max);
    Ok(MaureyApproximation { z, error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::sample_gaussian;
    use crate::ric::scaled_dft_vectors;
    use std::f64::consts::{FRAC_2_PI, PI, SQRT_2};

    fn unit(n: usize, i: usize) -> Vec<f64> {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    }

    #[test]
    fn cone_membership_examples() {
        let cone = ConeSpec::from_signal(&Signal::new(unit(3, 0)));
        assert!(cone.contains(&unit(3, 0)).unwrap());
        assert!(!cone.contains(&[-1.0, 0.0, 0.0]).unwrap());
        assert!(!cone.contains(&unit(3, 1)).unwrap());
        assert!(cone.contains(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn cone_partition() {
        let cone = ConeSpec::from_signal(&Signal::new(vec![0.0, -2.0, 3.0, 0.0, -1.0]));
        assert_eq!(cone.t_plus, vec![2]);
        assert_eq!(cone.t_minus, vec![1, 4]);
        assert_eq!(cone.signs(), vec![0.0, -1.0, 1.0, 0.0, -1.0]);
    }

    #[test]
    fn d_norm_examples() {
        assert!((d_norm(&[0.0, 0.6, 0.0, -0.8], 2).unwrap() - 1.0).abs() < 1e-15);
        assert!((d_norm(&[0.5; 4], 2).unwrap() - SQRT_2).abs() < 1e-15);
        assert_eq!(d_norm(&[0.0; 5], 3).unwrap(), 0.0);
        // last block is shorter
        assert!((d_norm(&[3.0, 4.0, 1.0], 2).unwrap() - 6.0).abs() < 1e-14);
        assert!(d_norm(&[1.0], 0).is_err());
        assert!(d_norm(&[1.0], 2).is_err());
    }

    #[test]
    fn cone_samples_on_sphere_and_in_cone() {
        let mut rng = RngStream::new(8, 0);
        for _ in 0..200 {
            let f = crate::ensembles::sample_sparse_signal(
                &crate::ensembles::SparseSignalSpec {
                    n: 12,
                    r: 3,
                    amplitude: crate::ensembles::AmplitudeModel::Gaussian,
                    seed: 0,
                },
                &mut rng,
            )
            .unwrap();
            let cone = ConeSpec::from_signal(&f);
            let t = sample_cone_sphere(&f, &mut rng).unwrap();
            assert!(cone.contains(&t).unwrap());
            assert!((crate::numerics::norm2(&t) - 1.0).abs() < 1e-10);
            assert!(d_norm(&t, 3).unwrap() <= SQRT_2 + 1.0 + 1e-9);
        }
        assert!(sample_cone_sphere(&Signal::new(vec![0.0; 4]), &mut rng).is_err());
    }

    #[test]
    fn unit_signal_lies_in_its_cone() {
        let cone = ConeSpec::from_signal(&Signal::new(unit(4, 0)));
        assert!(cone.contains(&unit(4, 0)).unwrap());
    }

    #[test]
    fn width_closed_forms() {
        let est = gaussian_width_d_mc(1, 1, 200_000, &RngStream::new(1, 0)).unwrap();
        let half_normal = FRAC_2_PI.sqrt();
        assert!((est.mean - half_normal).abs() <= 3.0 * est.stderr, "{est:?}");
        let est = gaussian_width_d_mc(2, 2, 200_000, &RngStream::new(2, 0)).unwrap();
        assert!((est.mean - (PI / 2.0).sqrt()).abs() <= 3.0 * est.stderr, "{est:?}");
        assert_eq!(est.samples, 200_000);
    }

    #[test]
    fn width_below_bound() {
        let est = gaussian_width_d_mc(256, 4, 5_000, &RngStream::new(3, 0)).unwrap();
        assert!(est.mean <= est.bound);
        assert!((est.bound - 6.7284).abs() < 1e-4);
        assert!(gaussian_width_d_mc(16, 2, 999, &RngStream::new(3, 0)).is_err());
    }

    #[test]
    fn width_bound_values() {
        assert!((gaussian_width_d_bound(256, 4).unwrap() - 45.271f64.sqrt()).abs() < 1e-3);
        for n in [1, 7, 64] {
            assert!((gaussian_width_d_bound(n, n).unwrap() - (3.0 * n as f64).sqrt()).abs() < 1e-12);
        }
        // increasing in r up to n/√e
        let n = 256;
        let vals: Vec<f64> = (1..=155).map(|r| gaussian_width_d_bound(n, r).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn sample_complexity_values() {
        assert!((SAMPLE_COMPLEXITY_C1 - 11.656854).abs() < 1e-6);
        assert!((sample_complexity_gaussian(2, 1024).unwrap() - 180.41).abs() < 5e-3);
        assert!((sample_complexity_gaussian(4, 4096).unwrap() - 393.13).abs() < 1e-2);
        assert!((sample_complexity_gaussian(9, 9).unwrap() - SAMPLE_COMPLEXITY_C1 * 13.5).abs() < 1e-12);
        assert!(sample_complexity_gaussian(0, 9).is_err());
    }

    #[test]
    fn escape_probability_values() {
        let p = gordon_escape_probability(100, 5.0).unwrap();
        assert!((p.value - 0.103).abs() < 1e-3 && !p.vacuous, "{p:?}");
        let edge = 100.0 / 101f64.sqrt();
        let p = gordon_escape_probability(100, edge).unwrap();
        assert_eq!(p.value, 0.0);
        assert!(p.vacuous);
        assert!(gordon_escape_probability(1_000_000, 0.0).unwrap().value > 1.0 - 1e-12);
        assert!(gordon_escape_probability(0, 1.0).is_err());
    }

    #[test]
    fn recovery_probability_values() {
        let p = recovery_probability_bound(800, 2, 1024).unwrap();
        assert!((p.value - 0.999983).abs() < 1e-5, "{p:?}");
        let p = recovery_probability_bound(180, 2, 1024).unwrap();
        assert!(p.vacuous && p.value == 0.0);
        let vals: Vec<f64> = (150..2000).map(|k| recovery_probability_bound(k, 2, 1024).unwrap().value).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn identity_kernel_is_trivial() {
        let f = Signal::new(vec![1.0, 0.0, -2.0, 0.0]);
        let rep = cone_kernel_intersect(&RealMatrix::identity(4), &f).unwrap();
        assert!(!rep.intersects);
    }

    #[test]
    fn kernel_touching_cone() {
        let phi = RealMatrix::from_rows(&[vec![1.0, -1.0]]).unwrap();
        let rep = cone_kernel_intersect(&phi, &Signal::new(vec![1.0, 0.0])).unwrap();
        assert!(rep.intersects && rep.degenerate);
        assert!(rep.objective.unwrap().abs() < 1e-8);
    }

    #[test]
    fn kernel_strictly_inside_cone() {
        // kernel spanned by (1, 2): functional -1 + 2 > 0 for f = e_1, but
        // for f = e_2 it is -2 + 1 < 0
        let phi = RealMatrix::from_rows(&[vec![2.0, -1.0]]).unwrap();
        let miss = cone_kernel_intersect(&phi, &Signal::new(vec![1.0, 0.0])).unwrap();
        assert!(!miss.intersects && !miss.degenerate);
        assert!((miss.objective.unwrap() - 1.0).abs() < 1e-7);
        let hit = cone_kernel_intersect(&phi, &Signal::new(vec![0.0, 1.0])).unwrap();
        assert!(hit.intersects && !hit.degenerate);
        assert!((hit.objective.unwrap() + 0.5).abs() < 1e-7);
    }

    #[test]
    fn kernel_orthogonal_to_sign_pattern() {
        // kernel spanned by (1, 1, 0) is orthogonal to s = (1, -1, 0) and
        // lies on T, so it touches the cone
        let phi = RealMatrix::from_rows(&[vec![1.0, -1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let rep = cone_kernel_intersect(&phi, &Signal::new(vec![1.0, -1.0, 0.0])).unwrap();
        assert!(rep.intersects && rep.degenerate && rep.objective.is_none());
        // kernel spanned by (1, 1, 1) is orthogonal to s but leaves T
        let phi = RealMatrix::from_rows(&[vec![1.0, -1.0, 0.0], vec![0.0, 1.0, -1.0]]).unwrap();
        let rep = cone_kernel_intersect(&phi, &Signal::new(vec![1.0, -1.0, 0.0])).unwrap();
        assert!(!rep.intersects && rep.objective.is_none());
    }

    #[test]
    fn cone_kernel_agrees_with_basis_pursuit() {
        let mut disagreements = 0;
        for seed in 0..40 {
            let mut rng = RngStream::derive(seed, 0, "cone-kernel");
            let phi = sample_gaussian(4, 8, &mut rng).unwrap();
            let mut f = vec![0.0; 8];
            f[rng.below(8)] = rng.sign();
            let f = Signal::new(f);
            let y = phi.matvec(f.values());
            let bp = crate::recovery::basis_pursuit(&phi, &y).unwrap();
            let exact = crate::recovery::verify_recovery(&f, &bp, 1e-6)
                == crate::recovery::RecoveryVerdict::Exact;
            let rep = cone_kernel_intersect(&phi, &f).unwrap();
            if rep.intersects == exact {
                disagreements += 1;
            }
        }
        assert_eq!(disagreements, 0);
    }

    #[test]
    fn maurey_point_mass() {
        let x = scaled_dft_vectors(8);
        let mut rng = RngStream::new(4, 0);
        for m in [1, 5, 40] {
            let approx = maurey_approximate(&unit(8, 0), m, &x, &mut rng).unwrap();
            assert_eq!(approx.z, unit(8, 0));
            assert_eq!(approx.error, 0.0);
        }
    }

    #[test]
    fn maurey_is_unbiased() {
        let y = [0.3, -0.2, 0.0, 0.1, -0.15];
        let draws = 100_000;
        let mut rng = RngStream::new(5, 0);
        let mut mean = [0.0; 5];
        let mut sq = [0.0; 5];
        for _ in 0..draws {
            let z = maurey_sample(&y, 1, &mut rng).unwrap();
            for i in 0..5 {
                mean[i] += z[i];
                sq[i] += z[i] * z[i];
            }
        }
        for i in 0..5 {
            let m = mean[i] / draws as f64;
            let sd = (sq[i] / draws as f64 - m * m).max(0.0).sqrt();
            assert!((m - y[i]).abs() <= 3.0 * sd / (draws as f64).sqrt() + 1e-15, "coordinate {i}");
        }
    }

    #[test]
    fn maurey_rejects_outside_ball() {
        let x = scaled_dft_vectors(2);
        let mut rng = RngStream::new(0, 0);
        assert!(maurey_approximate(&[0.8, 0.3], 2, &x, &mut rng).is_err());
        assert!(maurey_approximate(&[0.5, 0.5], 0, &x, &mut rng).is_err());
        assert!(maurey_approximate(&[0.5, 0.5, 0.0], 1, &x, &mut rng).is_err());
    }
}
