//! Entropies, relative entropy, fidelity and trace distance.
//!
//! All logarithms are natural.

use serde::{Deserialize, Serialize};

use crate::matfun::{eigh, schatten_norm, CMatrix, Hermitian, Schatten};

/// Mass of `ρ` outside `supp σ` above which `D(ρ‖σ)` is reported infinite.
pub const KERNEL_MASS_TOLERANCE: f64 = 1e-10;

/// Value of a relative entropy, with `+∞` as an explicit case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RelEntropy {
    Finite(f64),
    /// `supp ρ ⊄ supp σ`; `kernel_mass` is `tr[ρ (I − Π_σ)]`.
    Infinite { kernel_mass: f64 },
}

impl RelEntropy {
    /// Value as `f64`, with `f64::INFINITY` for the infinite case.
    pub fn value(&self) -> f64 {
        match *self {
            RelEntropy::Finite(v) => v,
            RelEntropy::Infinite { .. } => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, RelEntropy::Finite(_))
    }
}

fn herm(m: &CMatrix) -> Hermitian {
    Hermitian::symmetrized(m.clone())
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// `−tr ρ log ρ`.
pub fn von_neumann_entropy(rho: &CMatrix) -> f64 {
    let spec = eigh(&herm(rho));
    let s: f64 = spec
        .eigenvalues
        .iter()
        .zip(&spec.support_mask)
        .filter(|(_, &on)| on)
        .map(|(&l, _)| -xlogx(l))
        .sum();
    s.max(0.0)
}

/// `D(ρ‖σ) = tr ρ log ρ − tr ρ log σ`, with `log σ` taken on `supp σ`.
pub fn relative_entropy(rho: &CMatrix, sigma: &CMatrix) -> RelEntropy {
    assert_eq!(rho.shape(), sigma.shape(), "relative entropy of mismatched operators");
    let rs = eigh(&herm(rho));
    let ss = eigh(&herm(sigma));

    let rho_log_rho: f64 = rs
        .eigenvalues
        .iter()
        .zip(&rs.support_mask)
        .filter(|(_, &on)| on)
        .map(|(&l, _)| xlogx(l))
        .sum();

    // ⟨v|ρ|v⟩ for each eigenvector v of σ
    let weights = (ss.eigenvectors.adjoint() * rho * &ss.eigenvectors).diagonal();
    let mut cross = 0.0;
    let mut kernel_mass = 0.0;
    for i in 0..ss.dim() {
        let w = weights[i].re;
        if ss.support_mask[i] {
            cross += w * ss.eigenvalues[i].ln();
        } else {
            kernel_mass += w;
        }
    }
    if kernel_mass > KERNEL_MASS_TOLERANCE {
        return RelEntropy::Infinite { kernel_mass };
    }
    RelEntropy::Finite((rho_log_rho - cross).max(0.0))
}

/// `F(ρ,σ) = ‖√ρ √σ‖₁²`.
pub fn fidelity(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    assert_eq!(rho.shape(), sigma.shape(), "fidelity of mismatched operators");
    let sqrt_rho = eigh(&herm(rho)).map_support(f64::sqrt);
    let inner = &sqrt_rho * sigma * &sqrt_rho;
    // rounding-level eigenvalues would contribute O(√ε) through the square root
    let spec = eigh(&herm(&inner));
    let root_sum: f64 = spec
        .eigenvalues
        .iter()
        .zip(&spec.support_mask)
        .filter(|(_, &on)| on)
        .map(|(&l, _)| l.sqrt())
        .sum();
    (root_sum * root_sum).clamp(0.0, 1.0)
}

/// `−log F(ρ,σ)`; `+∞` when the fidelity is zero up to rounding.
pub fn neg_log_fidelity(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let f = fidelity(rho, sigma);
    let floor = rho.nrows() as f64 * f64::EPSILON;
    if f <= floor * floor {
        f64::INFINITY
    } else {
        (-f.ln()).max(0.0)
    }
}

/// `‖ρ − σ‖₁` (no factor ½).
pub fn trace_distance(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    schatten_norm(&(rho - sigma), Schatten::One)
}
