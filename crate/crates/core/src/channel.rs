//! Quantum channels as dense superoperators.
//!
//! Operators are vectorized by stacking columns, which matches nalgebra's
//! storage order: `vec(X)[i + j·d] = X[(i, j)]`. Under this convention the map
//! `X ↦ A X B` has superoperator `Bᵀ ⊗ A`, and a Kraus map `Σ K X K†` has
//! superoperator `Σ conj(K) ⊗ K`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matfun::{eigh, CMatrix, Hermitian, C64, ONE, ZERO};
use crate::qstate::{gaussian_matrix, permutation_operator, DensityOperator, SystemShape};
use crate::subspace::{permutations_with_sign, symmetric_subspace_basis, SubspaceBasis};

/// Largest allowed `in_total · out_total`; the superoperator holds its square.
pub const MAX_CHANNEL_DIM_PRODUCT: usize = 2048;

/// Minimum Choi eigenvalue accepted as completely positive.
pub const CP_TOLERANCE: f64 = 1e-9;

/// POVM elements must sum to the identity within this max-entry tolerance.
pub const POVM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct QuantumChannel {
    in_shape: SystemShape,
    out_shape: SystemShape,
    superop: CMatrix,
}

pub fn vec_op(x: &CMatrix) -> CMatrix {
    CMatrix::from_column_slice(x.len(), 1, x.as_slice())
}

pub fn unvec(v: &[C64], dim: usize) -> CMatrix {
    CMatrix::from_column_slice(dim, dim, v)
}

fn check_cap(in_shape: &SystemShape, out_shape: &SystemShape) -> Result<()> {
    let size = in_shape.total() * out_shape.total();
    if size > MAX_CHANNEL_DIM_PRODUCT {
        return Err(Error::CapExceeded {
            what: format!("channel {in_shape} -> {out_shape}"),
            size,
            cap: MAX_CHANNEL_DIM_PRODUCT,
        });
    }
    Ok(())
}

impl QuantumChannel {
    /// Wraps a superoperator after checking shapes and complete positivity.
    pub fn from_superoperator(
        in_shape: SystemShape,
        out_shape: SystemShape,
        superop: CMatrix,
    ) -> Result<Self> {
        check_cap(&in_shape, &out_shape)?;
        let (di, d_o) = (in_shape.total(), out_shape.total());
        if superop.shape() != (d_o * d_o, di * di) {
            return Err(Error::shape(
                format!("{}x{}", d_o * d_o, di * di),
                format!("{}x{}", superop.nrows(), superop.ncols()),
            ));
        }
        let ch = Self {
            in_shape,
            out_shape,
            superop,
        };
        let min = ch.min_choi_eigenvalue();
        if min < -CP_TOLERANCE {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
            });
        }
        Ok(ch)
    }

    /// Unchecked constructor for maps that are CP by construction.
    pub(crate) fn from_parts(in_shape: SystemShape, out_shape: SystemShape, superop: CMatrix) -> Self {
        debug_assert_eq!(superop.nrows(), out_shape.total().pow(2));
        debug_assert_eq!(superop.ncols(), in_shape.total().pow(2));
        Self {
            in_shape,
            out_shape,
            superop,
        }
    }

    /// Tabulates a linear map on matrix units. Complete positivity is checked.
    pub fn from_map(
        in_shape: SystemShape,
        out_shape: SystemShape,
        f: impl Fn(&CMatrix) -> CMatrix,
    ) -> Result<Self> {
        check_cap(&in_shape, &out_shape)?;
        let (di, d_o) = (in_shape.total(), out_shape.total());
        let mut s = CMatrix::zeros(d_o * d_o, di * di);
        let mut unit = CMatrix::zeros(di, di);
        for j in 0..di {
            for i in 0..di {
                unit[(i, j)] = ONE;
                let y = f(&unit);
                unit[(i, j)] = ZERO;
                if y.shape() != (d_o, d_o) {
                    return Err(Error::shape(format!("{d_o}x{d_o}"), format!("{}x{}", y.nrows(), y.ncols())));
                }
                s.set_column(i + j * di, &vec_op(&y).column(0));
            }
        }
        Self::from_superoperator(in_shape, out_shape, s)
    }

    /// `X ↦ Σ K X K†`.
    pub fn from_kraus(in_shape: SystemShape, out_shape: SystemShape, kraus: &[CMatrix]) -> Result<Self> {
        check_cap(&in_shape, &out_shape)?;
        let (di, d_o) = (in_shape.total(), out_shape.total());
        let mut s = CMatrix::zeros(d_o * d_o, di * di);
        for k in kraus {
            if k.shape() != (d_o, di) {
                return Err(Error::shape(format!("{d_o}x{di}"), format!("{}x{}", k.nrows(), k.ncols())));
            }
            s += k.map(|z| z.conj()).kronecker(k);
        }
        Ok(Self::from_parts(in_shape, out_shape, s))
    }

    pub fn identity(shape: SystemShape) -> Result<Self> {
        check_cap(&shape, &shape)?;
        let d = shape.total();
        Ok(Self::from_parts(shape.clone(), shape, CMatrix::identity(d * d, d * d)))
    }

    /// `X ↦ U X U†`.
    pub fn unitary(shape: SystemShape, u: &CMatrix) -> Result<Self> {
        Self::from_kraus(shape.clone(), shape, std::slice::from_ref(u))
    }

    pub fn in_shape(&self) -> &SystemShape {
        &self.in_shape
    }

    pub fn out_shape(&self) -> &SystemShape {
        &self.out_shape
    }

    pub fn superoperator(&self) -> &CMatrix {
        &self.superop
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        let di = self.in_shape.total();
        if x.shape() != (di, di) {
            return Err(Error::shape(format!("{di}x{di}"), format!("{}x{}", x.nrows(), x.ncols())));
        }
        let y = &self.superop * vec_op(x);
        Ok(unvec(y.as_slice(), self.out_shape.total()))
    }

    /// Applies the channel to a state. The result is not renormalized, so a
    /// channel that is trace preserving only on a subspace must get a
    /// supported input.
    pub fn apply_state(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.shape().total() != self.in_shape.total() {
            return Err(Error::shape(&self.in_shape, rho.shape()));
        }
        Ok(DensityOperator::from_parts(self.out_shape.clone(), self.apply(rho.matrix())?))
    }

    /// Hilbert–Schmidt adjoint.
    pub fn adjoint(&self) -> QuantumChannel {
        Self::from_parts(self.out_shape.clone(), self.in_shape.clone(), self.superop.adjoint())
    }

    /// `after ∘ before`.
    pub fn compose(after: &QuantumChannel, before: &QuantumChannel) -> Result<QuantumChannel> {
        if before.out_shape.total() != after.in_shape.total() {
            return Err(Error::shape(&after.in_shape, &before.out_shape));
        }
        check_cap(&before.in_shape, &after.out_shape)?;
        Ok(Self::from_parts(
            before.in_shape.clone(),
            after.out_shape.clone(),
            &after.superop * &before.superop,
        ))
    }

    /// `self ⊗ other`, with `self` acting on the leading factors.
    pub fn tensor(&self, other: &QuantumChannel) -> Result<QuantumChannel> {
        let in_shape = self.in_shape.concat(&other.in_shape)?;
        let out_shape = self.out_shape.concat(&other.out_shape)?;
        check_cap(&in_shape, &out_shape)?;
        let (ai, ao) = (self.in_shape.total(), self.out_shape.total());
        let (bi, bo) = (other.in_shape.total(), other.out_shape.total());
        let (di, d_o) = (ai * bi, ao * bo);
        let mut s = CMatrix::zeros(d_o * d_o, di * di);
        for j1 in 0..ai {
            for i1 in 0..ai {
                let ca = i1 + j1 * ai;
                for j2 in 0..bi {
                    for i2 in 0..bi {
                        let cb = i2 + j2 * bi;
                        let col = (i1 * bi + i2) + (j1 * bi + j2) * di;
                        for b1 in 0..ao {
                            for a1 in 0..ao {
                                let va = self.superop[(a1 + b1 * ao, ca)];
                                if va == ZERO {
                                    continue;
                                }
                                for b2 in 0..bo {
                                    for a2 in 0..bo {
                                        let vb = other.superop[(a2 + b2 * bo, cb)];
                                        let row = (a1 * bo + a2) + (b1 * bo + b2) * d_o;
                                        s[(row, col)] = va * vb;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(Self::from_parts(in_shape, out_shape, s))
    }

    pub fn tensor_power(&self, n: usize) -> Result<QuantumChannel> {
        if n == 0 {
            return Err(Error::param("tensor power needs n >= 1"));
        }
        check_cap(&self.in_shape.power(n)?, &self.out_shape.power(n)?)?;
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.tensor(self)?;
        }
        Ok(acc)
    }

    /// Choi operator `Σ_{ij} |i⟩⟨j| ⊗ N(|i⟩⟨j|)`.
    pub fn choi(&self) -> CMatrix {
        let (di, d_o) = (self.in_shape.total(), self.out_shape.total());
        let mut j = CMatrix::zeros(di * d_o, di * d_o);
        for jj in 0..di {
            for ii in 0..di {
                let col = ii + jj * di;
                for b in 0..d_o {
                    for a in 0..d_o {
                        j[(ii * d_o + a, jj * d_o + b)] = self.superop[(a + b * d_o, col)];
                    }
                }
            }
        }
        j
    }

    pub fn min_choi_eigenvalue(&self) -> f64 {
        eigh(&Hermitian::symmetrized(self.choi())).min_eigenvalue()
    }

    /// Matrix `T` with `tr N(X) = Σ_{ij} T_{ij} X_{ij}`.
    fn trace_functional(&self) -> CMatrix {
        let (di, d_o) = (self.in_shape.total(), self.out_shape.total());
        let mut t = CMatrix::zeros(di, di);
        for c in 0..di * di {
            let mut acc = ZERO;
            for a in 0..d_o {
                acc += self.superop[(a + a * d_o, c)];
            }
            t[(c % di, c / di)] = acc;
        }
        t
    }

    /// `X ↦ a · N(X) · b` for square `a`, `b` on the output space.
    pub fn then_sandwich(&self, a: &CMatrix, b: &CMatrix) -> QuantumChannel {
        let d_o = self.out_shape.total();
        assert_eq!(a.shape(), (d_o, d_o));
        assert_eq!(b.shape(), (d_o, d_o));
        let mut s = self.superop.clone();
        for mut col in s.column_iter_mut() {
            let y = a * unvec(col.as_slice(), d_o) * b;
            col.copy_from_slice(y.as_slice());
        }
        Self::from_parts(self.in_shape.clone(), self.out_shape.clone(), s)
    }

    /// `X ↦ N(a · X · b)` for square `a`, `b` on the input space.
    pub fn after_sandwich(&self, a: &CMatrix, b: &CMatrix) -> QuantumChannel {
        let di = self.in_shape.total();
        assert_eq!(a.shape(), (di, di));
        assert_eq!(b.shape(), (di, di));
        // row r of S is the functional X ↦ Σ R_ij X_ij; composing with
        // X ↦ aXb turns R into aᵀ R bᵀ
        let at = a.transpose();
        let bt = b.transpose();
        let mut s = self.superop.clone();
        let mut buf = vec![ZERO; di * di];
        for r in 0..s.nrows() {
            for (c, slot) in buf.iter_mut().enumerate() {
                *slot = s[(r, c)];
            }
            let y = &at * unvec(&buf, di) * &bt;
            for (c, v) in y.iter().enumerate() {
                s[(r, c)] = *v;
            }
        }
        Self::from_parts(self.in_shape.clone(), self.out_shape.clone(), s)
    }

    /// `Σ_j w_j N_j` over channels with identical shapes.
    pub fn weighted_sum(parts: &[(f64, QuantumChannel)]) -> Result<QuantumChannel> {
        let (_, first) = parts.first().ok_or_else(|| Error::param("empty channel combination"))?;
        let mut s = CMatrix::zeros(first.superop.nrows(), first.superop.ncols());
        for (w, ch) in parts {
            if ch.in_shape != first.in_shape || ch.out_shape != first.out_shape {
                return Err(Error::shape(
                    format!("{} -> {}", first.in_shape, first.out_shape),
                    format!("{} -> {}", ch.in_shape, ch.out_shape),
                ));
            }
            s += &ch.superop * C64::new(*w, 0.0);
        }
        Ok(Self::from_parts(first.in_shape.clone(), first.out_shape.clone(), s))
    }

    pub fn max_abs_diff(&self, other: &QuantumChannel) -> f64 {
        crate::matfun::max_abs_diff(&self.superop, &other.superop)
    }
}

/// CP gap and trace-preservation defect of a channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDiagnostics {
    pub min_choi_eigenvalue: f64,
    /// `max |tr N(|vᵢ⟩⟨vⱼ|) − δᵢⱼ|` over an orthonormal basis of the support.
    pub tp_defect: f64,
}

pub fn channel_diagnostics(ch: &QuantumChannel, support: Option<&SubspaceBasis>) -> ChannelDiagnostics {
    let t = ch.trace_functional();
    let di = ch.in_shape.total();
    let v = match support {
        Some(b) => b.isometry().clone(),
        None => CMatrix::identity(di, di),
    };
    // tr N(|vᵢ⟩⟨vⱼ|) = (Vᵀ T conj(V))_{ij}
    let m = v.transpose() * t * v.map(|z| z.conj());
    let tp_defect = crate::matfun::max_abs_diff(&m, &CMatrix::identity(m.nrows(), m.ncols()));
    ChannelDiagnostics {
        min_choi_eigenvalue: ch.min_choi_eigenvalue(),
        tp_defect,
    }
}

/// Partial trace keeping the listed factors, in their original order.
pub fn partial_trace_channel(shape: &SystemShape, keep: &[usize]) -> Result<QuantumChannel> {
    let keep = shape.normalize_keep(keep)?;
    let out_shape = SystemShape::new(keep.iter().map(|&i| shape.factors()[i]).collect())?;
    check_cap(shape, &out_shape)?;
    let traced: Vec<usize> = (0..shape.len()).filter(|i| !keep.contains(i)).collect();
    let (di, d_o) = (shape.total(), out_shape.total());
    let factors = shape.factors();
    let project = |digits: &[usize], which: &[usize]| {
        which.iter().fold(0, |acc, &f| acc * factors[f] + digits[f])
    };
    let split: Vec<(usize, usize)> = {
        let mut digits = vec![0; shape.len()];
        (0..di)
            .map(|i| {
                shape.digits(i, &mut digits);
                (project(&digits, &keep), project(&digits, &traced))
            })
            .collect()
    };
    let mut s = CMatrix::zeros(d_o * d_o, di * di);
    for j in 0..di {
        for i in 0..di {
            let (ki, ti) = split[i];
            let (kj, tj) = split[j];
            if ti == tj {
                s[(ki + kj * d_o, i + j * di)] = ONE;
            }
        }
    }
    Ok(QuantumChannel::from_parts(shape.clone(), out_shape, s))
}

fn basis_column(dim: usize, j: usize) -> CMatrix {
    let mut e = CMatrix::zeros(dim, 1);
    e[(j, 0)] = ONE;
    e
}

fn check_pair(x_n: &SubspaceBasis, y_k: &SubspaceBasis) -> Result<usize> {
    if x_n.local_dim() != y_k.local_dim() {
        return Err(Error::param(format!(
            "subspaces over different local dimensions {} and {}",
            x_n.local_dim(),
            y_k.local_dim()
        )));
    }
    if y_k.factors() > x_n.factors() {
        return Err(Error::param(format!(
            "k = {} exceeds n = {}",
            y_k.factors(),
            x_n.factors()
        )));
    }
    let rest = x_n.local_dim().pow((x_n.factors() - y_k.factors()) as u32);
    check_cap(&y_k.shape(), &x_n.shape())?;
    Ok(rest)
}

/// `(d_Y / d_X) Π_X [Π_Y (·) Π_Y ⊗ I^{n−k}] Π_X`, mapping `k` factors to `n`.
pub fn subspace_cloner(x_n: &SubspaceBasis, y_k: &SubspaceBasis) -> Result<QuantumChannel> {
    let rest = check_pair(x_n, y_k)?;
    let px = x_n.projector();
    let py = y_k.projector();
    let scale = C64::new((y_k.dim() as f64 / x_n.dim() as f64).sqrt(), 0.0);
    let kraus: Vec<CMatrix> = (0..rest)
        .map(|j| &px * py.kronecker(&basis_column(rest, j)) * scale)
        .collect();
    QuantumChannel::from_kraus(y_k.shape(), x_n.shape(), &kraus)
}

/// `Π_Y tr_{n−k}[Π_X (·) Π_X] Π_Y`, tracing out the last `n − k` factors.
pub fn subspace_partial_trace(x_n: &SubspaceBasis, y_k: &SubspaceBasis) -> Result<QuantumChannel> {
    let rest = check_pair(x_n, y_k)?;
    let px = x_n.projector();
    let py = y_k.projector();
    let id_k = CMatrix::identity(py.nrows(), py.nrows());
    let kraus: Vec<CMatrix> = (0..rest)
        .map(|j| &py * id_k.kronecker(&basis_column(rest, j).adjoint()) * &px)
        .collect();
    QuantumChannel::from_kraus(x_n.shape(), y_k.shape(), &kraus)
}

/// Universal `k → n` cloner on the symmetric subspace.
pub fn uqcm(d: usize, k: usize, n: usize) -> Result<QuantumChannel> {
    if k < 1 || k > n {
        return Err(Error::param(format!("uqcm needs 1 <= k <= n (got k={k}, n={n})")));
    }
    subspace_cloner(&symmetric_subspace_basis(d, n)?, &symmetric_subspace_basis(d, k)?)
}

pub fn symmetrized_partial_trace(d: usize, n: usize, k: usize) -> Result<QuantumChannel> {
    if k < 1 || k > n {
        return Err(Error::param(format!(
            "symmetrized partial trace needs 1 <= k <= n (got k={k}, n={n})"
        )));
    }
    subspace_partial_trace(&symmetric_subspace_basis(d, n)?, &symmetric_subspace_basis(d, k)?)
}

/// `X ↦ tr(X) τ`.
pub fn constant_channel(in_shape: SystemShape, tau: &DensityOperator) -> Result<QuantumChannel> {
    check_cap(&in_shape, tau.shape())?;
    let di = in_shape.total();
    let vec_id = vec_op(&CMatrix::identity(di, di));
    let s = vec_op(tau.matrix()) * vec_id.transpose();
    Ok(QuantumChannel::from_parts(in_shape, tau.shape().clone(), s))
}

/// `X ↦ Σ_a tr(M_a X) τ_a`.
pub fn measure_prepare(
    in_shape: SystemShape,
    povm: &[CMatrix],
    preps: &[DensityOperator],
) -> Result<QuantumChannel> {
    if povm.is_empty() || povm.len() != preps.len() {
        return Err(Error::InvalidPovm(format!(
            "{} POVM elements for {} preparations",
            povm.len(),
            preps.len()
        )));
    }
    let out_shape = preps[0].shape().clone();
    if preps.iter().any(|p| p.shape() != &out_shape) {
        return Err(Error::param("preparations on different shapes"));
    }
    check_cap(&in_shape, &out_shape)?;
    let di = in_shape.total();
    let mut total = CMatrix::zeros(di, di);
    for (a, m) in povm.iter().enumerate() {
        if m.shape() != (di, di) {
            return Err(Error::InvalidPovm(format!("element {a} has shape {}x{}", m.nrows(), m.ncols())));
        }
        let h = Hermitian::new(m.clone()).map_err(|e| Error::InvalidPovm(format!("element {a}: {e}")))?;
        let min = eigh(&h).min_eigenvalue();
        if min < -POVM_TOLERANCE {
            return Err(Error::InvalidPovm(format!("element {a} has eigenvalue {min:e}")));
        }
        total += m;
    }
    let defect = crate::matfun::max_abs_diff(&total, &CMatrix::identity(di, di));
    if defect > POVM_TOLERANCE {
        return Err(Error::InvalidPovm(format!("elements sum to identity only within {defect:e}")));
    }
    let mut s = CMatrix::zeros(out_shape.total().pow(2), di * di);
    for (m, tau) in povm.iter().zip(preps) {
        s += vec_op(tau.matrix()) * vec_op(&m.transpose()).transpose();
    }
    Ok(QuantumChannel::from_parts(in_shape, out_shape, s))
}

/// Average of `Λ₀` followed by every permutation of its identical output factors.
pub fn symmetrized_output(ch: &QuantumChannel) -> Result<QuantumChannel> {
    let shape = ch.out_shape().clone();
    let n = shape.len();
    if shape.factors().iter().any(|&f| f != shape.factors()[0]) {
        return Err(Error::param(format!("output shape {shape} is not homogeneous")));
    }
    let perms = permutations_with_sign(n);
    let weight = 1.0 / perms.len() as f64;
    let mut parts = Vec::with_capacity(perms.len());
    for (perm, _) in perms {
        let p = permutation_operator(&shape, &perm)?;
        let u = QuantumChannel::unitary(shape.clone(), &p)?;
        parts.push((weight, QuantumChannel::compose(&u, ch)?));
    }
    QuantumChannel::weighted_sum(&parts)
}

/// Random CPTP map from a Haar-distributed Stinespring isometry with
/// `kraus_count` Kraus operators.
pub fn random_channel<R: Rng + ?Sized>(
    in_shape: SystemShape,
    out_shape: SystemShape,
    kraus_count: usize,
    rng: &mut R,
) -> Result<QuantumChannel> {
    check_cap(&in_shape, &out_shape)?;
    let (di, d_o) = (in_shape.total(), out_shape.total());
    if kraus_count == 0 || kraus_count * d_o < di {
        return Err(Error::param(format!(
            "{kraus_count} Kraus operators cannot form an isometry from dimension {di} into {d_o}"
        )));
    }
    let g = gaussian_matrix(kraus_count * d_o, di, rng);
    let gram = Hermitian::symmetrized(g.adjoint() * &g);
    let inv_sqrt = eigh(&gram).map_support(|l| 1.0 / l.sqrt());
    let v = g * inv_sqrt;
    let kraus: Vec<CMatrix> = (0..kraus_count)
        .map(|k| v.rows(k * d_o, d_o).into_owned())
        .collect();
    QuantumChannel::from_kraus(in_shape, out_shape, &kraus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::{max_abs_diff, real_trace};
    use crate::qstate::{ginibre_on_shape, ginibre_random_density, haar_random_vector, tensor_product};
    use crate::subspace::{antisymmetric_subspace_basis, maximally_mixed};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    fn q(d: usize, n: usize) -> SystemShape {
        SystemShape::qudits(d, n).unwrap()
    }

    fn inner(a: &CMatrix, b: &CMatrix) -> C64 {
        (a.adjoint() * b).trace()
    }

    #[test]
    fn vectorization_round_trip() {
        let mut r = rng(1);
        let a = gaussian_matrix(3, 3, &mut r);
        let b = gaussian_matrix(3, 3, &mut r);
        let x = gaussian_matrix(3, 3, &mut r);
        let superop = b.transpose().kronecker(&a);
        let y = unvec((&superop * vec_op(&x)).as_slice(), 3);
        assert!(max_abs_diff(&y, &(&a * &x * &b)) < 1e-12);
        assert!(max_abs_diff(&unvec(vec_op(&x).as_slice(), 3), &x) == 0.0);
    }

    #[test]
    fn identity_and_partial_trace() {
        let mut r = rng(2);
        let rho = ginibre_random_density(2, 2, &mut r).unwrap();
        let tau = ginibre_random_density(3, 3, &mut r).unwrap();
        let id = QuantumChannel::identity(q(2, 1)).unwrap();
        assert!(max_abs_diff(&id.apply(rho.matrix()).unwrap(), rho.matrix()) < 1e-15);
        let joint = tensor_product(&rho, &tau).unwrap();
        let tr = partial_trace_channel(joint.shape(), &[0]).unwrap();
        assert!(max_abs_diff(&tr.apply(joint.matrix()).unwrap(), rho.matrix()) < 1e-14);
        let tr = partial_trace_channel(joint.shape(), &[1]).unwrap();
        assert!(max_abs_diff(&tr.apply(joint.matrix()).unwrap(), tau.matrix()) < 1e-14);
    }

    #[test]
    fn apply_matches_kraus_sum() {
        let mut r = rng(3);
        let kraus: Vec<CMatrix> = (0..3).map(|_| gaussian_matrix(4, 2, &mut r)).collect();
        let ch = QuantumChannel::from_kraus(q(2, 1), q(2, 2), &kraus).unwrap();
        for _ in 0..20 {
            let x = gaussian_matrix(2, 2, &mut r);
            let direct = kraus.iter().fold(CMatrix::zeros(4, 4), |acc, k| acc + k * &x * k.adjoint());
            assert!(max_abs_diff(&ch.apply(&x).unwrap(), &direct) < 1e-12);
        }
        assert!(ch.apply(&CMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn from_map_rejects_non_cp() {
        let transpose = QuantumChannel::from_map(q(2, 1), q(2, 1), |x| x.transpose());
        assert!(matches!(transpose, Err(Error::NotPositive { .. })));
        let id = QuantumChannel::from_map(q(2, 1), q(2, 1), |x| x.clone()).unwrap();
        assert!(id.max_abs_diff(&QuantumChannel::identity(q(2, 1)).unwrap()) < 1e-15);
    }

    #[test]
    fn adjoint_examples() {
        let mut r = rng(4);
        let u = {
            let g = gaussian_matrix(3, 3, &mut r);
            g.qr().q()
        };
        let ch = QuantumChannel::unitary(q(3, 1), &u).unwrap();
        let expect = QuantumChannel::unitary(q(3, 1), &u.adjoint()).unwrap();
        assert!(ch.adjoint().max_abs_diff(&expect) < 1e-12);

        let shape = SystemShape::new(vec![2, 3]).unwrap();
        let tr = partial_trace_channel(&shape, &[0]).unwrap();
        let adj = tr.adjoint();
        for _ in 0..5 {
            let x = gaussian_matrix(6, 6, &mut r);
            let y = gaussian_matrix(2, 2, &mut r);
            let lhs = inner(&adj.apply(&y).unwrap(), &x);
            let rhs = inner(&y, &tr.apply(&x).unwrap());
            assert!((lhs - rhs).norm() < 1e-12);
            let emb = y.kronecker(&CMatrix::identity(3, 3));
            assert!(max_abs_diff(&adj.apply(&y).unwrap(), &emb) < 1e-14);
        }
        let rc = random_channel(q(2, 1), q(3, 1), 2, &mut r).unwrap();
        assert!(rc.adjoint().adjoint().max_abs_diff(&rc) < 1e-12);
    }

    #[test]
    fn compose_and_tensor() {
        let mut r = rng(5);
        let a = random_channel(q(2, 1), q(3, 1), 2, &mut r).unwrap();
        let b = random_channel(q(3, 1), q(2, 1), 3, &mut r).unwrap();
        let ba = QuantumChannel::compose(&b, &a).unwrap();
        let rho = ginibre_random_density(2, 2, &mut r).unwrap();
        let step = b.apply(&a.apply(rho.matrix()).unwrap()).unwrap();
        assert!(max_abs_diff(&ba.apply(rho.matrix()).unwrap(), &step) < 1e-12);
        assert!(QuantumChannel::compose(&a, &a).is_err());

        let tau = ginibre_random_density(2, 2, &mut r).unwrap();
        let constant = constant_channel(q(2, 1), &tau).unwrap();
        let c = QuantumChannel::compose(&constant, &b).unwrap();
        assert!(max_abs_diff(&c.apply(&CMatrix::identity(3, 3)).unwrap(), &(tau.matrix() * C64::new(3.0, 0.0))) < 1e-12);

        let ab = a.tensor(&b).unwrap();
        let s = ginibre_random_density(3, 3, &mut r).unwrap();
        let joint = tensor_product(&rho, &s).unwrap();
        let expect = a.apply(rho.matrix()).unwrap().kronecker(&b.apply(s.matrix()).unwrap());
        assert!(max_abs_diff(&ab.apply(joint.matrix()).unwrap(), &expect) < 1e-12);

        let a2 = a.tensor_power(2).unwrap();
        let rr = tensor_product(&rho, &rho).unwrap();
        let ar = a.apply(rho.matrix()).unwrap();
        assert!(max_abs_diff(&a2.apply(rr.matrix()).unwrap(), &ar.kronecker(&ar)) < 1e-12);
        assert!(a.tensor_power(1).unwrap().max_abs_diff(&a) == 0.0);
        let id3 = QuantumChannel::identity(q(2, 1)).unwrap().tensor_power(3).unwrap();
        assert!(id3.max_abs_diff(&QuantumChannel::identity(q(2, 3)).unwrap()) == 0.0);
    }

    #[test]
    fn sandwiches() {
        let mut r = rng(6);
        let ch = random_channel(q(2, 1), q(3, 1), 2, &mut r).unwrap();
        let a = gaussian_matrix(3, 3, &mut r);
        let b = gaussian_matrix(3, 3, &mut r);
        let c = gaussian_matrix(2, 2, &mut r);
        let e = gaussian_matrix(2, 2, &mut r);
        let x = gaussian_matrix(2, 2, &mut r);
        let then = ch.then_sandwich(&a, &b);
        assert!(max_abs_diff(&then.apply(&x).unwrap(), &(&a * ch.apply(&x).unwrap() * &b)) < 1e-12);
        let after = ch.after_sandwich(&c, &e);
        assert!(max_abs_diff(&after.apply(&x).unwrap(), &ch.apply(&(&c * &x * &e)).unwrap()) < 1e-12);
    }

    #[test]
    fn uqcm_qubit_example() {
        let c = uqcm(2, 1, 2).unwrap();
        let zero = Hermitian::from_real_diagonal(&[1.0, 0.0]).into_inner();
        let out = c.apply(&zero).unwrap();
        let spec = eigh(&Hermitian::symmetrized(out.clone()));
        let expect = [0.0, 0.0, 1.0 / 3.0, 2.0 / 3.0];
        for (l, e) in spec.eigenvalues.iter().zip(expect) {
            assert!((l - e).abs() < 1e-14);
        }
        let (marg, _) = crate::qstate::partial_trace_matrix(&out, &q(2, 2), &[0]).unwrap();
        let m = Hermitian::from_real_diagonal(&[5.0 / 6.0, 1.0 / 6.0]).into_inner();
        assert!(max_abs_diff(&marg, &m) < 1e-14);
    }

    #[test]
    fn uqcm_trace_preserving_on_pure_inputs() {
        let mut r = rng(7);
        for (d, k, n) in [(2, 1, 2), (3, 1, 3), (2, 2, 3)] {
            let c = uqcm(d, k, n).unwrap();
            let sym = symmetric_subspace_basis(d, k).unwrap();
            for _ in 0..50 {
                let v = haar_random_vector(d, &mut r);
                let mut phi = v.clone();
                for _ in 1..k {
                    phi = phi.kronecker(&v);
                }
                let out = c.apply(&(&phi * phi.adjoint())).unwrap();
                assert!((real_trace(&out) - 1.0).abs() < 1e-12);
            }
            let diag = channel_diagnostics(&c, Some(&sym));
            assert!(diag.tp_defect < 1e-10);
            assert!(diag.min_choi_eigenvalue > -1e-12);
            let out = c.apply_state(&maximally_mixed(&sym)).unwrap();
            let target = maximally_mixed(&symmetric_subspace_basis(d, n).unwrap());
            assert!(max_abs_diff(out.matrix(), target.matrix()) < 1e-12);
        }
    }

    #[test]
    fn symmetrized_partial_trace_examples() {
        let mut r = rng(8);
        let (d, n, k) = (2, 3, 2);
        let p = symmetrized_partial_trace(d, n, k).unwrap();
        let pin = maximally_mixed(&symmetric_subspace_basis(d, n).unwrap());
        let pk = maximally_mixed(&symmetric_subspace_basis(d, k).unwrap());
        assert!(max_abs_diff(&p.apply(pin.matrix()).unwrap(), pk.matrix()) < 1e-12);

        let v = haar_random_vector(d, &mut r);
        let phi3 = v.kronecker(&v).kronecker(&v);
        let phi2 = v.kronecker(&v);
        let out = p.apply(&(&phi3 * phi3.adjoint())).unwrap();
        assert!(max_abs_diff(&out, &(&phi2 * phi2.adjoint())) < 1e-12);

        let sym = symmetric_subspace_basis(d, n).unwrap();
        let plain = partial_trace_channel(&q(d, n), &[0, 1]).unwrap();
        for _ in 0..5 {
            let g = ginibre_on_shape(SystemShape::single(sym.dim()).unwrap(), 2, &mut r).unwrap();
            let w = sym.isometry() * g.matrix() * sym.isometry().adjoint();
            assert!(max_abs_diff(&p.apply(&w).unwrap(), &plain.apply(&w).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn duality_with_uqcm() {
        for d in 2..=3 {
            for n in 1..=3 {
                for k in 1..=n {
                    let p = symmetrized_partial_trace(d, n, k).unwrap();
                    let c = uqcm(d, k, n).unwrap();
                    let ratio = symmetric_subspace_basis(d, n).unwrap().dim() as f64
                        / symmetric_subspace_basis(d, k).unwrap().dim() as f64;
                    let scaled = c.superoperator() * C64::new(ratio, 0.0);
                    assert!(max_abs_diff(p.adjoint().superoperator(), &scaled) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn antisymmetric_cloner() {
        let x = antisymmetric_subspace_basis(3, 2).unwrap();
        let y = antisymmetric_subspace_basis(3, 1).unwrap();
        let c = subspace_cloner(&x, &y).unwrap();
        let diag = channel_diagnostics(&c, None);
        assert!(diag.tp_defect < 1e-10, "Y_1 is the full space, so C is TP");
        let mut r = rng(9);
        for _ in 0..5 {
            let rho = ginibre_random_density(3, 3, &mut r).unwrap();
            let out = c.apply(rho.matrix()).unwrap();
            assert!(x.support_defect(&out) < 1e-12);
        }

        // symmetric cloner on the singlet marginal at d = 2 vanishes on the singlet
        let singlet = antisymmetric_subspace_basis(2, 2).unwrap();
        let p = subspace_partial_trace(&singlet, &antisymmetric_subspace_basis(2, 1).unwrap()).unwrap();
        let marg = p.apply(&singlet.projector()).unwrap();
        let out = uqcm(2, 1, 2).unwrap().apply(&marg).unwrap();
        let pa = singlet.projector();
        assert!((pa.clone() * out * pa).norm() < 1e-14);
    }

    #[test]
    fn symmetric_pair_reproduces_uqcm() {
        let c1 = uqcm(2, 1, 3).unwrap();
        let c2 = subspace_cloner(&symmetric_subspace_basis(2, 3).unwrap(), &symmetric_subspace_basis(2, 1).unwrap()).unwrap();
        assert_eq!(c1.superoperator(), c2.superoperator());
    }

    #[test]
    fn unnormalized_sandwich_is_not_tp() {
        let sym = symmetric_subspace_basis(2, 2).unwrap();
        let p = sym.projector();
        let kraus: Vec<CMatrix> = (0..2).map(|j| &p * CMatrix::identity(2, 2).kronecker(&basis_column(2, j))).collect();
        let ch = QuantumChannel::from_kraus(q(2, 1), q(2, 2), &kraus).unwrap();
        assert!(channel_diagnostics(&ch, None).tp_defect > 0.1);
        let id = QuantumChannel::identity(q(2, 1)).unwrap();
        let diag = channel_diagnostics(&id, None);
        assert_eq!(diag.tp_defect, 0.0);
        assert!(diag.min_choi_eigenvalue.abs() < 1e-15);
    }

    #[test]
    fn constant_and_measure_prepare() {
        let mut r = rng(10);
        let tau = ginibre_random_density(2, 2, &mut r).unwrap();
        let tt = tau.tensor(&tau).unwrap();
        let c = constant_channel(q(2, 1), &tt).unwrap();
        let rho = ginibre_random_density(2, 2, &mut r).unwrap();
        assert!(max_abs_diff(&c.apply(rho.matrix()).unwrap(), tt.matrix()) < 1e-14);

        let taus: Vec<DensityOperator> = (0..2)
            .map(|_| ginibre_random_density(2, 2, &mut r).unwrap().tensor_power(2).unwrap())
            .collect();
        let povm: Vec<CMatrix> = (0..2)
            .map(|i| {
                let mut p = [0.0; 2];
                p[i] = 1.0;
                Hermitian::from_real_diagonal(&p).into_inner()
            })
            .collect();
        let mp = measure_prepare(q(2, 1), &povm, &taus).unwrap();
        let sigma = Hermitian::from_real_diagonal(&[0.3, 0.7]).into_inner();
        let expect = taus[0].matrix() * C64::new(0.3, 0.0) + taus[1].matrix() * C64::new(0.7, 0.0);
        assert!(max_abs_diff(&mp.apply(&sigma).unwrap(), &expect) < 1e-14);
        assert!(channel_diagnostics(&mp, None).min_choi_eigenvalue > -1e-12);

        let bad = vec![povm[0].clone(), povm[0].clone()];
        assert!(matches!(measure_prepare(q(2, 1), &bad, &taus), Err(Error::InvalidPovm(_))));
        let neg = vec![
            Hermitian::from_real_diagonal(&[1.5, 0.0]).into_inner(),
            Hermitian::from_real_diagonal(&[-0.5, 1.0]).into_inner(),
        ];
        assert!(matches!(measure_prepare(q(2, 1), &neg, &taus), Err(Error::InvalidPovm(_))));
    }

    #[test]
    fn symmetrized_output_has_equal_marginals() {
        let mut r = rng(11);
        let base = random_channel(q(2, 1), q(2, 2), 3, &mut r).unwrap();
        let sym = symmetrized_output(&base).unwrap();
        assert!(channel_diagnostics(&sym, None).tp_defect < 1e-12);
        for _ in 0..5 {
            let rho = ginibre_random_density(2, 2, &mut r).unwrap();
            let out = sym.apply(rho.matrix()).unwrap();
            let (a, _) = crate::qstate::partial_trace_matrix(&out, &q(2, 2), &[0]).unwrap();
            let (b, _) = crate::qstate::partial_trace_matrix(&out, &q(2, 2), &[1]).unwrap();
            assert!(max_abs_diff(&a, &b) < 1e-12);
        }
    }

    #[test]
    fn random_channel_is_cptp() {
        let mut r = rng(12);
        let ch = random_channel(q(2, 1), q(4, 1), 2, &mut r).unwrap();
        let diag = channel_diagnostics(&ch, None);
        assert!(diag.tp_defect < 1e-12);
        assert!(diag.min_choi_eigenvalue > -1e-12);
        assert!(random_channel(q(4, 1), q(2, 1), 1, &mut r).is_err());
    }

    #[test]
    fn caps() {
        assert!(matches!(
            QuantumChannel::identity(q(2, 6)),
            Err(Error::CapExceeded { .. })
        ));
    }
}
