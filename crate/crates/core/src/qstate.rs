//! Density operators on multipartite tensor spaces.
//!
//! Subsystems are indexed left to right in tensor-product order and the
//! first factor is the most significant digit of a computational-basis index.
//! Partial traces never reorder the factors they keep.

use std::fmt;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matfun::{
    check_psd, eigh, max_abs, max_asymmetry, CMatrix, CVector, Hermitian, C64, HERMITIAN_TOLERANCE,
    ONE, ZERO,
};

/// Total Hilbert-space dimension allowed for any shape.
pub const MAX_TOTAL_DIM: usize = 4096;

pub const DENSITY_PSD_TOLERANCE: f64 = 1e-10;
pub const DENSITY_TRACE_TOLERANCE: f64 = 1e-10;

/// Ordered local dimensions of a multipartite system.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemShape {
    factors: Vec<usize>,
}

impl SystemShape {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::param("a system shape needs at least one factor"));
        }
        if factors.contains(&0) {
            return Err(Error::param("factor dimensions must be positive"));
        }
        let mut total: usize = 1;
        for &f in &factors {
            total = total
                .checked_mul(f)
                .filter(|&t| t <= MAX_TOTAL_DIM)
                .ok_or_else(|| Error::CapExceeded {
                    what: format!("total dimension of shape {factors:?}"),
                    size: factors.iter().fold(1usize, |a, &b| a.saturating_mul(b)),
                    cap: MAX_TOTAL_DIM,
                })?;
        }
        Ok(Self { factors })
    }

    /// `n` factors of local dimension `d`.
    pub fn qudits(d: usize, n: usize) -> Result<Self> {
        Self::new(vec![d; n])
    }

    pub fn single(d: usize) -> Result<Self> {
        Self::new(vec![d])
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn total(&self) -> usize {
        self.factors.iter().product()
    }

    pub fn concat(&self, other: &SystemShape) -> Result<SystemShape> {
        let mut f = self.factors.clone();
        f.extend_from_slice(&other.factors);
        SystemShape::new(f)
    }

    pub fn power(&self, n: usize) -> Result<SystemShape> {
        if n == 0 {
            return Err(Error::param("tensor power needs n >= 1"));
        }
        SystemShape::new(self.factors.repeat(n))
    }

    /// Sorted, duplicate-free keep list validated against this shape.
    pub(crate) fn normalize_keep(&self, keep: &[usize]) -> Result<Vec<usize>> {
        if keep.is_empty() {
            return Err(Error::param("partial trace must keep at least one factor"));
        }
        let mut k = keep.to_vec();
        k.sort_unstable();
        k.dedup();
        if k.len() != keep.len() {
            return Err(Error::param(format!("duplicate factor in keep list {keep:?}")));
        }
        if let Some(&bad) = k.iter().find(|&&i| i >= self.len()) {
            return Err(Error::param(format!(
                "factor index {bad} out of range for {} factors",
                self.len()
            )));
        }
        Ok(k)
    }

    /// Digits of a flat index, most significant first.
    pub(crate) fn digits(&self, mut index: usize, out: &mut [usize]) {
        for (slot, &f) in out.iter_mut().zip(&self.factors).rev() {
            *slot = index % f;
            index /= f;
        }
    }

    pub(crate) fn flat(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.factors)
            .fold(0, |acc, (&x, &f)| acc * f + x)
    }
}

impl fmt::Display for SystemShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.factors.iter().map(|x| x.to_string()).collect();
        write!(f, "[{}]", parts.join("x"))
    }
}

/// Positive semidefinite, unit-trace operator with explicit factor shape.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    shape: SystemShape,
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn new(shape: SystemShape, matrix: CMatrix) -> Result<Self> {
        check_dims(&shape, &matrix)?;
        let asym = max_asymmetry(&matrix);
        if asym > HERMITIAN_TOLERANCE * max_abs(&matrix).max(f64::MIN_POSITIVE) {
            return Err(Error::NotHermitian {
                max_asymmetry: asym,
            });
        }
        let h = Hermitian::symmetrized(matrix);
        let spec = eigh(&h);
        if spec.min_eigenvalue() < -DENSITY_PSD_TOLERANCE {
            return Err(Error::NotPositive {
                min_eigenvalue: spec.min_eigenvalue(),
            });
        }
        let trace = h.matrix().trace().re;
        if (trace - 1.0).abs() > DENSITY_TRACE_TOLERANCE {
            return Err(Error::NotNormalized { trace });
        }
        Ok(Self {
            shape,
            matrix: h.into_inner(),
        })
    }

    /// Symmetrizes and rescales to unit trace; rejects non-positive input.
    pub fn normalized(shape: SystemShape, matrix: CMatrix) -> Result<Self> {
        check_dims(&shape, &matrix)?;
        let h = Hermitian::symmetrized(matrix);
        check_psd(&eigh(&h))?;
        let trace = h.matrix().trace().re;
        if trace <= 0.0 {
            return Err(Error::NotNormalized { trace });
        }
        Ok(Self {
            shape,
            matrix: h.into_inner() / C64::new(trace, 0.0),
        })
    }

    /// Wraps a matrix already known to be a state (symmetrized, unchecked).
    pub(crate) fn from_parts(shape: SystemShape, matrix: CMatrix) -> Self {
        debug_assert_eq!(shape.total(), matrix.nrows());
        Self {
            shape,
            matrix: Hermitian::symmetrized(matrix).into_inner(),
        }
    }

    /// `|ψ⟩⟨ψ|` for the normalized `psi`.
    pub fn pure(shape: SystemShape, psi: &CVector) -> Result<Self> {
        if psi.len() != shape.total() {
            return Err(Error::shape(shape.total(), psi.len()));
        }
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::param("zero state vector"));
        }
        let v = psi / C64::new(norm, 0.0);
        Ok(Self::from_parts(shape, &v * v.adjoint()))
    }

    pub fn basis_state(shape: SystemShape, index: usize) -> Result<Self> {
        if index >= shape.total() {
            return Err(Error::param(format!("basis index {index} out of range")));
        }
        let mut m = CMatrix::zeros(shape.total(), shape.total());
        m[(index, index)] = ONE;
        Ok(Self { shape, matrix: m })
    }

    pub fn diagonal(shape: SystemShape, probs: &[f64]) -> Result<Self> {
        if probs.len() != shape.total() {
            return Err(Error::shape(shape.total(), probs.len()));
        }
        let v = DVector::from_iterator(probs.len(), probs.iter().map(|&p| C64::new(p, 0.0)));
        Self::new(shape, CMatrix::from_diagonal(&v))
    }

    pub fn maximally_mixed(shape: SystemShape) -> Self {
        let d = shape.total();
        let m = CMatrix::identity(d, d) / C64::new(d as f64, 0.0);
        Self { shape, matrix: m }
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.shape.total()
    }

    pub fn hermitian(&self) -> Hermitian {
        Hermitian::symmetrized(self.matrix.clone())
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        tensor_product(self, other)
    }

    pub fn tensor_power(&self, n: usize) -> Result<DensityOperator> {
        let shape = self.shape.power(n)?;
        let mut m = self.matrix.clone();
        for _ in 1..n {
            m = m.kronecker(&self.matrix);
        }
        Ok(Self::from_parts(shape, m))
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOperator> {
        partial_trace(self, keep)
    }
}

impl AsRef<CMatrix> for DensityOperator {
    fn as_ref(&self) -> &CMatrix {
        &self.matrix
    }
}

fn check_dims(shape: &SystemShape, m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() != shape.total() {
        return Err(Error::shape(
            format!("{shape} (dim {})", shape.total()),
            format!("matrix of dim {}", m.nrows()),
        ));
    }
    Ok(())
}

/// Kronecker product in factor order.
pub fn tensor_product(a: &DensityOperator, b: &DensityOperator) -> Result<DensityOperator> {
    let shape = a.shape.concat(&b.shape)?;
    Ok(DensityOperator::from_parts(
        shape,
        a.matrix.kronecker(&b.matrix),
    ))
}

pub fn partial_trace(rho: &DensityOperator, keep: &[usize]) -> Result<DensityOperator> {
    let (m, shape) = partial_trace_matrix(&rho.matrix, &rho.shape, keep)?;
    Ok(DensityOperator::from_parts(shape, m))
}

/// Partial trace of an arbitrary square operator, keeping the listed factors.
pub fn partial_trace_matrix(
    m: &CMatrix,
    shape: &SystemShape,
    keep: &[usize],
) -> Result<(CMatrix, SystemShape)> {
    check_dims(shape, m)?;
    let keep = shape.normalize_keep(keep)?;
    let kept_shape = SystemShape::new(keep.iter().map(|&i| shape.factors[i]).collect())?;
    let traced: Vec<usize> = (0..shape.len()).filter(|i| !keep.contains(i)).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&i| shape.factors[i]).collect();
    let dk = kept_shape.total();
    let dt: usize = traced_dims.iter().product();

    // full[ik * dt + it] = flat index of the joint basis vector
    let mut full = vec![0usize; dk * dt];
    let mut digits = vec![0usize; shape.len()];
    for i in 0..shape.total() {
        shape.digits(i, &mut digits);
        let ik = keep
            .iter()
            .fold(0, |acc, &f| acc * shape.factors[f] + digits[f]);
        let it = traced
            .iter()
            .fold(0, |acc, &f| acc * shape.factors[f] + digits[f]);
        full[ik * dt + it] = i;
    }

    let mut out = CMatrix::zeros(dk, dk);
    for col in 0..dk {
        for row in 0..dk {
            let mut acc = ZERO;
            for t in 0..dt {
                acc += m[(full[row * dt + t], full[col * dt + t])];
            }
            out[(row, col)] = acc;
        }
    }
    Ok((out, kept_shape))
}

/// Unitary permuting tensor factors: output factor `j` is input factor `perm[j]`.
pub fn permutation_operator(shape: &SystemShape, perm: &[usize]) -> Result<CMatrix> {
    let n = shape.len();
    let mut seen = vec![false; n];
    if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::param(format!("{perm:?} is not a permutation of {n} factors")));
    }
    let out_shape = SystemShape::new(perm.iter().map(|&p| shape.factors[p]).collect())?;
    let d = shape.total();
    let mut u = CMatrix::zeros(d, d);
    let mut digits = vec![0usize; n];
    let mut permuted = vec![0usize; n];
    for i in 0..d {
        shape.digits(i, &mut digits);
        for (j, &p) in perm.iter().enumerate() {
            permuted[j] = digits[p];
        }
        u[(out_shape.flat(&permuted), i)] = ONE;
    }
    Ok(u)
}

/// Standard complex Gaussian vector.
pub fn gaussian_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVector {
    CVector::from_iterator(
        d,
        (0..d).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))),
    )
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    // column-major fill keeps the draw order fixed
    CMatrix::from_iterator(
        rows,
        cols,
        (0..rows * cols).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))),
    )
}

/// Haar-random unit vector in `C^d`.
pub fn haar_random_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVector {
    let v = gaussian_vector(d, rng);
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

pub fn haar_random_pure<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<DensityOperator> {
    if d < 2 {
        return Err(Error::param("Haar-random states need d >= 2"));
    }
    let v = haar_random_vector(d, rng);
    Ok(DensityOperator::from_parts(
        SystemShape::single(d)?,
        &v * v.adjoint(),
    ))
}

/// `G G† / tr(G G†)` for a `d × rank` complex Gaussian `G`.
pub fn ginibre_random_density<R: Rng + ?Sized>(
    d: usize,
    rank: usize,
    rng: &mut R,
) -> Result<DensityOperator> {
    ginibre_on_shape(SystemShape::single(d)?, rank, rng)
}

pub fn ginibre_on_shape<R: Rng + ?Sized>(
    shape: SystemShape,
    rank: usize,
    rng: &mut R,
) -> Result<DensityOperator> {
    let d = shape.total();
    if rank == 0 || rank > d {
        return Err(Error::param(format!("Ginibre rank {rank} outside 1..={d}")));
    }
    let g = gaussian_matrix(d, rank, rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    Ok(DensityOperator::from_parts(shape, m / C64::new(tr, 0.0)))
}

/// `ε σ₁ + (1 − ε) σ₂`, whose kernel lies inside `ker σ₁ ∩ ker σ₂`.
pub fn epsilon_mix(
    sigma1: &DensityOperator,
    sigma2: &DensityOperator,
    eps: f64,
) -> Result<DensityOperator> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param(format!("epsilon {eps} outside (0, 1)")));
    }
    if sigma1.shape != sigma2.shape {
        return Err(Error::shape(&sigma1.shape, &sigma2.shape));
    }
    let m = &sigma1.matrix * C64::new(eps, 0.0) + &sigma2.matrix * C64::new(1.0 - eps, 0.0);
    Ok(DensityOperator::from_parts(sigma1.shape.clone(), m))
}
