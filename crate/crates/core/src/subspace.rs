//! Symmetric and antisymmetric subspaces of `(C^d)^{⊗n}`, their maximally
//! mixed states, and Slater determinants.
//!
//! Basis vectors are enumerated in lexicographic order of the occupied
//! symbols: non-decreasing tuples for the symmetric subspace, strictly
//! increasing tuples for the antisymmetric one.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::matfun::{max_abs_diff, CMatrix, CVector, C64, ONE, ZERO};
use crate::qstate::{DensityOperator, SystemShape};

/// Deviation allowed in `V†V = I` and in the orthonormality of Slater orbitals.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubspaceKind {
    Symmetric,
    Antisymmetric,
    Custom,
}

/// An isometry from an `r`-dimensional space into `(C^d)^{⊗n}`.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    d: usize,
    n: usize,
    kind: SubspaceKind,
    isometry: CMatrix,
}

impl SubspaceBasis {
    /// Wraps a user-supplied `dⁿ × r` isometry after checking `V†V = I`.
    pub fn custom(d: usize, n: usize, isometry: CMatrix) -> Result<Self> {
        let shape = SystemShape::qudits(d, n)?;
        if isometry.nrows() != shape.total() || isometry.ncols() == 0 {
            return Err(Error::shape(
                format!("{} x r with r >= 1", shape.total()),
                format!("{} x {}", isometry.nrows(), isometry.ncols()),
            ));
        }
        let gram = isometry.adjoint() * &isometry;
        let defect = max_abs_diff(&gram, &CMatrix::identity(gram.nrows(), gram.ncols()));
        if defect > ORTHONORMAL_TOLERANCE {
            return Err(Error::NotOrthonormal {
                max_overlap: defect,
            });
        }
        Ok(Self {
            d,
            n,
            kind: SubspaceKind::Custom,
            isometry,
        })
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn factors(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> SubspaceKind {
        self.kind
    }

    /// Subspace dimension `r`.
    pub fn dim(&self) -> usize {
        self.isometry.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.isometry.nrows()
    }

    pub fn shape(&self) -> SystemShape {
        SystemShape::qudits(self.d, self.n).expect("validated at construction")
    }

    pub fn isometry(&self) -> &CMatrix {
        &self.isometry
    }

    pub fn projector(&self) -> CMatrix {
        &self.isometry * self.isometry.adjoint()
    }

    /// Largest deviation of `op` from `Π op Π`; zero iff `op` lives in the subspace.
    pub fn support_defect(&self, op: &CMatrix) -> f64 {
        let p = self.projector();
        max_abs_diff(&(&p * op * &p), op)
    }
}

pub fn symmetric_subspace_basis(d: usize, n: usize) -> Result<SubspaceBasis> {
    if d < 2 || n < 1 {
        return Err(Error::param(format!("symmetric subspace needs d >= 2, n >= 1 (got d={d}, n={n})")));
    }
    let shape = SystemShape::qudits(d, n)?;
    let columns: HashMap<Vec<usize>, usize> = multisets(d, n)
        .into_iter()
        .enumerate()
        .map(|(i, m)| (m, i))
        .collect();
    let mut v = CMatrix::zeros(shape.total(), columns.len());
    let mut digits = vec![0; n];
    for i in 0..shape.total() {
        shape.digits(i, &mut digits);
        let mut key = digits.clone();
        key.sort_unstable();
        v[(i, columns[&key])] = ONE;
    }
    for mut col in v.column_iter_mut() {
        let norm = col.norm();
        col.unscale_mut(norm);
    }
    Ok(SubspaceBasis {
        d,
        n,
        kind: SubspaceKind::Symmetric,
        isometry: v,
    })
}

pub fn antisymmetric_subspace_basis(d: usize, n: usize) -> Result<SubspaceBasis> {
    if n < 1 || n > d {
        return Err(Error::param(format!("antisymmetric subspace needs 1 <= n <= d (got d={d}, n={n})")));
    }
    let shape = SystemShape::qudits(d, n)?;
    let columns: HashMap<Vec<usize>, usize> = combinations(d, n)
        .into_iter()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    let scale = 1.0 / (factorial(n) as f64).sqrt();
    let mut v = CMatrix::zeros(shape.total(), columns.len());
    let mut digits = vec![0; n];
    for i in 0..shape.total() {
        shape.digits(i, &mut digits);
        let sign = match permutation_sign(&digits) {
            Some(s) => s,
            None => continue,
        };
        let mut key = digits.clone();
        key.sort_unstable();
        v[(i, columns[&key])] = C64::new(sign * scale, 0.0);
    }
    Ok(SubspaceBasis {
        d,
        n,
        kind: SubspaceKind::Antisymmetric,
        isometry: v,
    })
}

/// `Π / r` as a state on `n` qudits.
pub fn maximally_mixed(basis: &SubspaceBasis) -> DensityOperator {
    let r = basis.dim() as f64;
    DensityOperator::from_parts(basis.shape(), basis.projector() / C64::new(r, 0.0))
}

/// `|φ₁⟩ ∧ ⋯ ∧ |φₙ⟩ = (n!)^{-1/2} Σ_π sgn(π) |φ_{π(1)}⟩ ⊗ ⋯ ⊗ |φ_{π(n)}⟩`.
pub fn wedge(vectors: &[CVector]) -> Result<CVector> {
    let d = check_orbitals(vectors)?;
    let n = vectors.len();
    let dim = SystemShape::qudits(d, n)?.total();
    let mut out = CVector::zeros(dim);
    for (perm, sign) in permutations_with_sign(n) {
        let mut term = CMatrix::from_element(1, 1, C64::new(sign, 0.0));
        for &p in &perm {
            term = term.kronecker(&vectors[p]);
        }
        out += term.column(0);
    }
    Ok(out / C64::new((factorial(n) as f64).sqrt(), 0.0))
}

/// Rank-one state of the normalized wedge of `n` orthonormal orbitals.
pub fn slater_determinant(vectors: &[CVector]) -> Result<DensityOperator> {
    let v = wedge(vectors)?;
    let d = vectors[0].len();
    Ok(DensityOperator::from_parts(
        SystemShape::qudits(d, vectors.len())?,
        &v * v.adjoint(),
    ))
}

/// `(1/C(n,k)) Σ_{k-subsets A} |Φ_A⟩⟨Φ_A|`, the `k`-body marginal of a Slater
/// determinant assembled from wedges of orbital subsets.
pub fn slater_marginal_oracle(vectors: &[CVector], k: usize) -> Result<DensityOperator> {
    let d = check_orbitals(vectors)?;
    let n = vectors.len();
    if k < 1 || k > n {
        return Err(Error::param(format!("marginal size k={k} outside 1..={n}")));
    }
    let shape = SystemShape::qudits(d, k)?;
    let mut acc = CMatrix::zeros(shape.total(), shape.total());
    let subsets = combinations(n, k);
    let count = subsets.len() as f64;
    for subset in subsets {
        let picked: Vec<CVector> = subset.iter().map(|&i| vectors[i].clone()).collect();
        let w = wedge(&picked)?;
        acc += &w * w.adjoint();
    }
    Ok(DensityOperator::from_parts(shape, acc / C64::new(count, 0.0)))
}

fn check_orbitals(vectors: &[CVector]) -> Result<usize> {
    let n = vectors.len();
    if n == 0 {
        return Err(Error::param("need at least one orbital"));
    }
    let d = vectors[0].len();
    if vectors.iter().any(|v| v.len() != d) {
        return Err(Error::param("orbitals have different dimensions"));
    }
    if n > d {
        return Err(Error::param(format!("{n} orbitals cannot be orthonormal in dimension {d}")));
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((vectors[i].dotc(&vectors[j]) - target).norm());
        }
    }
    if worst > ORTHONORMAL_TOLERANCE {
        return Err(Error::NotOrthonormal { max_overlap: worst });
    }
    Ok(d)
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128) as usize
}

pub fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Non-decreasing `n`-tuples over `0..d` in lexicographic order.
pub fn multisets(d: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    fn rec(d: usize, n: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for s in start..d {
            cur.push(s);
            rec(d, n, s, cur, out);
            cur.pop();
        }
    }
    rec(d, n, 0, &mut cur, &mut out);
    out
}

/// Strictly increasing `n`-tuples over `0..d` in lexicographic order.
pub fn combinations(d: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    fn rec(d: usize, n: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for s in start..d {
            cur.push(s);
            rec(d, n, s + 1, cur, out);
            cur.pop();
        }
    }
    rec(d, n, 0, &mut cur, &mut out);
    out
}

/// All permutations of `0..n` with their signs.
pub fn permutations_with_sign(n: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::with_capacity(factorial(n));
    let mut cur = Vec::with_capacity(n);
    let mut used = vec![false; n];
    fn rec(n: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<(Vec<usize>, f64)>) {
        if cur.len() == n {
            let sign = permutation_sign(cur).expect("distinct entries");
            out.push((cur.clone(), sign));
            return;
        }
        for s in 0..n {
            if !used[s] {
                used[s] = true;
                cur.push(s);
                rec(n, cur, used, out);
                cur.pop();
                used[s] = false;
            }
        }
    }
    rec(n, &mut cur, &mut used, &mut out);
    out
}

/// Sign of the permutation sorting `xs`, or `None` if an entry repeats.
fn permutation_sign(xs: &[usize]) -> Option<f64> {
    let mut inversions = 0usize;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            match xs[i].cmp(&xs[j]) {
                std::cmp::Ordering::Equal => return None,
                std::cmp::Ordering::Greater => inversions += 1,
                std::cmp::Ordering::Less => {}
            }
        }
    }
    Some(if inversions % 2 == 0 { 1.0 } else { -1.0 })
}
