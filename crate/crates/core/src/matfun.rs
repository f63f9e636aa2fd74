//! Spectral kernel: Hermitian eigendecomposition, matrix functions restricted
//! to the support, and Schatten norms.
//!
//! Every matrix function here follows the support convention: eigenvalues at
//! or below the support threshold are mapped to zero, so negative powers act
//! as pseudo-inverses and `log` is the logarithm on the support.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative tolerance on `‖A − A†‖_max / ‖A‖_max` accepted by [`Hermitian::new`].
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Eigenvalues below `-PSD_TOLERANCE · max(λ_max, 1)` make an operator non-positive.
pub const PSD_TOLERANCE: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// A square complex matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermitian(CMatrix);

impl Hermitian {
    /// Validates Hermiticity and stores the exactly symmetrized matrix.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let scale = max_abs(&m);
        let asym = max_asymmetry(&m);
        if asym > HERMITIAN_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NotHermitian {
                max_asymmetry: asym,
            });
        }
        Ok(Self::symmetrized(m))
    }

    /// Returns `(m + m†)/2` without validation. Panics on non-square input.
    pub fn symmetrized(m: CMatrix) -> Self {
        assert!(m.is_square(), "Hermitian part of a non-square matrix");
        let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        Hermitian(h)
    }

    pub fn identity(dim: usize) -> Self {
        Hermitian(CMatrix::identity(dim, dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let v = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Hermitian(CMatrix::from_diagonal(&v))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }
}

impl AsRef<CMatrix> for Hermitian {
    fn as_ref(&self) -> &CMatrix {
        &self.0
    }
}

/// Eigendecomposition with ascending eigenvalues and a support mask.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose columns are the eigenvectors, in eigenvalue order.
    pub eigenvectors: CMatrix,
    pub support_mask: Vec<bool>,
    pub threshold: f64,
}

/// Scale-aware kernel threshold `dim · 2⁻⁵² · max(λ_max, 1)`.
pub fn default_support_threshold(dim: usize, max_eigenvalue: f64) -> f64 {
    dim as f64 * f64::EPSILON * max_eigenvalue.max(1.0)
}

pub fn eigh(op: &Hermitian) -> SpectralDecomposition {
    eigh_with_threshold(op, None)
}

/// Like [`eigh`] with an optional override of the support threshold.
pub fn eigh_with_threshold(op: &Hermitian, threshold: Option<f64>) -> SpectralDecomposition {
    let dim = op.dim();
    if dim == 0 {
        return SpectralDecomposition {
            eigenvalues: vec![],
            eigenvectors: CMatrix::zeros(0, 0),
            support_mask: vec![],
            threshold: 0.0,
        };
    }
    let eig = SymmetricEigen::new(op.matrix().clone());
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = CMatrix::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    let lmax = eigenvalues.last().copied().unwrap_or(0.0);
    let threshold = threshold.unwrap_or_else(|| default_support_threshold(dim, lmax));
    let support_mask = eigenvalues.iter().map(|&l| l > threshold).collect();
    SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        support_mask,
        threshold,
    }
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn rank(&self) -> usize {
        self.support_mask.iter().filter(|&&s| s).count()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// `V · diag(λ) · V†`.
    pub fn reconstruct(&self) -> CMatrix {
        self.weighted_sum(|i| Some(C64::new(self.eigenvalues[i], 0.0)))
    }

    /// `Σ f(λ_i) v_i v_i†` over support eigenvalues only.
    pub fn map_support(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        self.weighted_sum(|i| {
            self.support_mask[i]
                .then(|| C64::new(f(self.eigenvalues[i]), 0.0))
        })
    }

    /// `Σ f(λ_i) v_i v_i†` over every eigenvalue, for functions defined on all of ℝ.
    pub fn map_all(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        self.weighted_sum(|i| Some(C64::new(f(self.eigenvalues[i]), 0.0)))
    }

    /// `Σ_{support} λ_i^z v_i v_i†` with `λ^z = exp(z log λ)`.
    pub fn power(&self, z: C64) -> CMatrix {
        self.weighted_sum(|i| {
            self.support_mask[i]
                .then(|| (z * self.eigenvalues[i].ln()).exp())
        })
    }

    pub fn support_projector(&self) -> CMatrix {
        self.weighted_sum(|i| self.support_mask[i].then_some(ONE))
    }

    /// Columns spanning the support, as a `dim × rank` isometry.
    pub fn support_isometry(&self) -> CMatrix {
        let cols: Vec<usize> = (0..self.dim()).filter(|&i| self.support_mask[i]).collect();
        self.eigenvectors.select_columns(cols.iter())
    }

    fn weighted_sum(&self, weight: impl Fn(usize) -> Option<C64>) -> CMatrix {
        let dim = self.dim();
        let (kept, weights): (Vec<usize>, Vec<C64>) =
            (0..dim).filter_map(|i| weight(i).map(|w| (i, w))).unzip();
        if kept.is_empty() {
            return CMatrix::zeros(dim, dim);
        }
        let v = self.eigenvectors.select_columns(kept.iter());
        let mut scaled = v.clone();
        for (c, w) in weights.iter().enumerate() {
            scaled.column_mut(c).iter_mut().for_each(|z| *z *= *w);
        }
        scaled * v.adjoint()
    }
}

/// Applies a real function on the support; off-support eigenvalues map to 0.
pub fn spectral_apply(op: &Hermitian, f: impl Fn(f64) -> f64) -> Hermitian {
    Hermitian::symmetrized(eigh(op).map_support(f))
}

/// `op^z` on the support of a positive semidefinite operator.
pub fn complex_power_on_support(op: &Hermitian, z: C64) -> Result<CMatrix> {
    let spec = eigh(op);
    check_psd(&spec)?;
    Ok(spec.power(z))
}

pub fn support_projector(op: &Hermitian) -> Result<Hermitian> {
    let spec = eigh(op);
    check_psd(&spec)?;
    Ok(Hermitian::symmetrized(spec.support_projector()))
}

pub(crate) fn check_psd(spec: &SpectralDecomposition) -> Result<()> {
    let lmin = spec.min_eigenvalue();
    if lmin < -PSD_TOLERANCE * spec.max_eigenvalue().max(1.0) {
        return Err(Error::NotPositive {
            min_eigenvalue: lmin,
        });
    }
    Ok(())
}

/// Schatten norm exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schatten {
    One,
    Two,
    Inf,
}

pub fn schatten_norm(m: &CMatrix, p: Schatten) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    match p {
        // Frobenius norm equals the root-sum-square of singular values.
        Schatten::Two => m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
        Schatten::One | Schatten::Inf => {
            let sv = m.clone().singular_values();
            match p {
                Schatten::One => sv.iter().sum(),
                _ => sv.iter().copied().fold(0.0, f64::max),
            }
        }
    }
}

/// Trace norm of a Hermitian matrix via its eigenvalues.
pub fn hermitian_trace_norm(m: &Hermitian) -> f64 {
    eigh(m).eigenvalues.iter().map(|l| l.abs()).sum()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entrywise deviation `‖a − b‖_max`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff on mismatched shapes");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn real_trace(m: &CMatrix) -> f64 {
    m.trace().re
}
