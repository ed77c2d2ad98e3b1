//! Measurement ensembles and sparse test signals.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, DenseMatrix, RealMatrix, RngStream};

/// Constant above which a bounded-orthogonal source triggers a warning.
pub const BOUNDED_CONSTANT_WARN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnsembleKind {
    Gaussian,
    PartialFourier,
    BoundedOrthogonal,
}

impl EnsembleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EnsembleKind::Gaussian => "gaussian",
            EnsembleKind::PartialFourier => "fourier",
            EnsembleKind::BoundedOrthogonal => "ortho",
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(EnsembleKind::Gaussian),
            "fourier" | "partial-fourier" => Ok(EnsembleKind::PartialFourier),
            "ortho" | "bounded-orthogonal" => Ok(EnsembleKind::BoundedOrthogonal),
            other => Err(Error::Parameter(format!("unknown ensemble `{other}`"))),
        }
    }
}

/// A validated orthogonal (or unitary) source matrix with entries bounded by
/// `K / √n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedOrthogonal {
    matrix: DenseMatrix,
    bound_constant: f64,
}

impl BoundedOrthogonal {
    pub fn new(matrix: DenseMatrix) -> Result<Self> {
        if matrix.rows() != matrix.cols() || matrix.rows() == 0 {
            return Err(Error::Validation(format!(
                "orthogonal source must be square and non-empty, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let n = matrix.rows();
        let u = matrix.to_complex();
        let gram = u.adjoint().matmul(&u)?;
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((gram[(i, j)] - target).norm());
            }
        }
        if dev > 1e-8 {
            return Err(Error::Validation(format!(
                "source matrix is not orthogonal (max |U*U - I| = {dev:.3e})"
            )));
        }
        let bound_constant = u.max_abs() * (n as f64).sqrt();
        if bound_constant > BOUNDED_CONSTANT_WARN {
            log::warn!(
                "bounded-orthogonal source has K = {bound_constant:.3} > {BOUNDED_CONSTANT_WARN}; \
                 entries are far from the O(1/sqrt(n)) regime"
            );
        }
        Ok(BoundedOrthogonal {
            matrix,
            bound_constant,
        })
    }

    pub fn dimension(&self) -> usize {
        self.matrix.rows()
    }

    /// `K = √n · max |U_ij|`.
    pub fn bound_constant(&self) -> f64 {
        self.bound_constant
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    /// Required for [`EnsembleKind::BoundedOrthogonal`].
    pub source: Option<BoundedOrthogonal>,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, n: usize, k: usize, seed: u64) -> Self {
        EnsembleSpec {
            kind,
            n,
            k,
            seed,
            source: None,
        }
    }

    pub fn with_source(mut self, source: BoundedOrthogonal) -> Self {
        self.source = Some(source);
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_counts(self.k, self.n)?;
        match (&self.kind, &self.source) {
            (EnsembleKind::BoundedOrthogonal, None) => Err(Error::Parameter(
                "bounded-orthogonal ensemble needs a source matrix".into(),
            )),
            (EnsembleKind::BoundedOrthogonal, Some(u)) if u.dimension() != self.n => {
                Err(Error::Parameter(format!(
                    "source matrix is {0}x{0} but n = {1}",
                    u.dimension(),
                    self.n
                )))
            }
            _ => Ok(()),
        }
    }

    /// Draws one measurement matrix from this ensemble.
    pub fn sample(&self, rng: &mut RngStream) -> Result<MeasurementMatrix> {
        self.validate()?;
        let (entries, omega) = match self.kind {
            EnsembleKind::Gaussian => (DenseMatrix::Real(sample_gaussian(self.k, self.n, rng)?), None),
            EnsembleKind::PartialFourier => {
                let (m, omega) = sample_partial_fourier(self.k, self.n, rng)?;
                (DenseMatrix::Complex(m), Some(omega))
            }
            EnsembleKind::BoundedOrthogonal => {
                let source = self.source.as_ref().expect("validated above");
                let (m, omega) = sample_rows(source, self.k, rng)?;
                (m, Some(omega))
            }
        };
        Ok(MeasurementMatrix {
            kind: self.kind,
            seed: rng.seed(),
            stream_id: rng.stream_id(),
            omega,
            entries,
        })
    }
}

/// A sampled `k x n` measurement operator with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    pub kind: EnsembleKind,
    pub seed: u64,
    pub stream_id: u64,
    /// Selected row indices for row-subsampled ensembles.
    pub omega: Option<Vec<usize>>,
    pub entries: DenseMatrix,
}

impl MeasurementMatrix {
    pub fn rows(&self) -> usize {
        self.entries.rows()
    }

    pub fn cols(&self) -> usize {
        self.entries.cols()
    }

    /// Real constraint matrix: the matrix itself, or its realification.
    pub fn real_constraints(&self) -> RealMatrix {
        match &self.entries {
            DenseMatrix::Real(m) => m.clone(),
            DenseMatrix::Complex(m) => realify(m),
        }
    }
}

fn check_counts(k: usize, n: usize) -> Result<()> {
    if k == 0 || n == 0 {
        return Err(Error::Parameter(format!("need k >= 1 and n >= 1, got k={k}, n={n}")));
    }
    if k > n {
        return Err(Error::Parameter(format!(
            "k = {k} exceeds n = {n}; only underdetermined or square systems are supported"
        )));
    }
    Ok(())
}

/// `k x n` matrix of i.i.d. N(0,1) entries.
pub fn sample_gaussian(k: usize, n: usize, rng: &mut RngStream) -> Result<RealMatrix> {
    check_counts(k, n)?;
    Ok(RealMatrix::from_fn(k, n, |_, _| rng.standard_normal()))
}

/// Entry `(ω, t)` of the unitary DFT matrix, `exp(-2πiωt/n) / √n`.
pub fn dft_entry(n: usize, omega: usize, t: usize) -> Complex64 {
    let phase = ((omega as u128 * t as u128) % n as u128) as f64 / n as f64;
    Complex64::from_polar(1.0 / (n as f64).sqrt(), -TAU * phase)
}

pub fn dft_matrix(n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |w, t| dft_entry(n, w, t))
}

/// Rows `Ω` (a uniform `k`-subset, ascending) of the unitary DFT matrix.
pub fn sample_partial_fourier(
    k: usize,
    n: usize,
    rng: &mut RngStream,
) -> Result<(ComplexMatrix, Vec<usize>)> {
    check_counts(k, n)?;
    let omega = rng.subset(n, k);
    let m = ComplexMatrix::from_fn(k, n, |i, t| dft_entry(n, omega[i], t));
    Ok((m, omega))
}

/// `k` uniformly chosen distinct rows of an orthogonal source, ascending.
pub fn sample_rows(
    source: &BoundedOrthogonal,
    k: usize,
    rng: &mut RngStream,
) -> Result<(DenseMatrix, Vec<usize>)> {
    let n = source.dimension();
    check_counts(k, n)?;
    let omega = rng.subset(n, k);
    let m = match &source.matrix {
        DenseMatrix::Real(u) => DenseMatrix::Real(RealMatrix::from_fn(k, n, |i, j| u[(omega[i], j)])),
        DenseMatrix::Complex(u) => {
            DenseMatrix::Complex(ComplexMatrix::from_fn(k, n, |i, j| u[(omega[i], j)]))
        }
    };
    Ok((m, omega))
}

/// Stacks real and imaginary parts: `[Re M; Im M]`, so that for real `f`
/// the product is `(Re Mf, Im Mf)`.
pub fn realify(m: &ComplexMatrix) -> RealMatrix {
    let k = m.rows();
    RealMatrix::from_fn(2 * k, m.cols(), |i, j| {
        if i < k {
            m[(i, j)].re
        } else {
            m[(i - k, j)].im
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AmplitudeModel {
    Rademacher,
    Gaussian,
}

impl FromStr for AmplitudeModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rademacher" => Ok(AmplitudeModel::Rademacher),
            "gaussian" => Ok(AmplitudeModel::Gaussian),
            other => Err(Error::Parameter(format!("unknown amplitude model `{other}`"))),
        }
    }
}

impl fmt::Display for AmplitudeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AmplitudeModel::Rademacher => "rademacher",
            AmplitudeModel::Gaussian => "gaussian",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SparseSignalSpec {
    pub n: usize,
    pub r: usize,
    pub amplitude: AmplitudeModel,
    pub seed: u64,
}

impl SparseSignalSpec {
    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.r > self.n {
            return Err(Error::Parameter(format!(
                "sparsity must satisfy 1 <= r <= n, got r={}, n={}",
                self.r, self.n
            )));
        }
        Ok(())
    }
}

/// A real signal together with its support.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    values: Vec<f64>,
    support: Vec<usize>,
}

impl Signal {
    pub fn new(values: Vec<f64>) -> Self {
        let support = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect();
        Signal { values, support }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Nonzero positions, ascending.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Draws an exactly `r`-sparse signal with a uniformly random support.
pub fn sample_sparse_signal(spec: &SparseSignalSpec, rng: &mut RngStream) -> Result<Signal> {
    spec.validate()?;
    let support = rng.subset(spec.n, spec.r);
    let mut values = vec![0.0; spec.n];
    for &i in &support {
        values[i] = match spec.amplitude {
            AmplitudeModel::Rademacher => rng.sign(),
            AmplitudeModel::Gaussian => loop {
                let a = rng.standard_normal();
                if a.abs() >= 1e-12 {
                    break a;
                }
            },
        };
    }
    Ok(Signal { values, support })
}
