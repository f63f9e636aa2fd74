//! Rotated and β-averaged Petz recovery maps, recovery differences, and the
//! improved cloning channel.
//!
//! Negative and complex powers are taken on supports (pseudo-inverses).

use gauss_quad::GaussLegendre;
use rayon::prelude::*;

use crate::channel::{partial_trace_channel, QuantumChannel};
use crate::error::{Error, Result};
use crate::matfun::{
    eigh, max_abs, schatten_norm, CMatrix, Hermitian, Schatten, SpectralDecomposition, C64,
};
use crate::qstate::{partial_trace_matrix, DensityOperator, SystemShape};

/// `β(t) = (π/2) / (1 + cosh πt)`, a probability density on ℝ.
pub fn beta_density(t: f64) -> f64 {
    std::f64::consts::FRAC_PI_2 / (1.0 + (std::f64::consts::PI * t).cosh())
}

/// `∫_{-T}^{T} β = tanh(πT/2)`.
pub fn beta_mass(t_max: f64) -> f64 {
    (std::f64::consts::FRAC_PI_2 * t_max).tanh()
}

/// Discrete probability measure approximating `dβ(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaQuadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    raw_mass: f64,
}

impl BetaQuadrature {
    /// 16 panels of 8 Gauss–Legendre nodes on `[-8, 8]`.
    pub fn standard() -> Self {
        beta_nodes(16, 8, 8.0).expect("valid default parameters")
    }

    /// Point mass at `t`.
    pub fn point(t: f64) -> Self {
        Self {
            nodes: vec![t],
            weights: vec![1.0],
            raw_mass: 1.0,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight sum before renormalization.
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

impl Default for BetaQuadrature {
    fn default() -> Self {
        Self::standard()
    }
}

/// Composite Gauss–Legendre rule on `[-T, T]` against `β(t) dt`, made exactly
/// mirror symmetric and renormalized to total weight 1.
pub fn beta_nodes(panels: usize, order: usize, t_max: f64) -> Result<BetaQuadrature> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::param(format!("quadrature half-width {t_max} must be positive")));
    }
    if panels == 0 || order == 0 {
        return Err(Error::param("quadrature needs at least one panel and one node"));
    }
    let reference: Vec<(f64, f64)> = if order == 1 {
        vec![(0.0, 2.0)]
    } else {
        GaussLegendre::new(order)
            .map_err(|e| Error::param(format!("Gauss-Legendre rule: {e}")))?
            .as_node_weight_pairs()
            .to_vec()
    };
    let h = 2.0 * t_max / panels as f64;
    let mut pairs = Vec::with_capacity(panels * reference.len());
    for p in 0..panels {
        let mid = -t_max + (p as f64 + 0.5) * h;
        for &(x, w) in &reference {
            let t = mid + 0.5 * h * x;
            pairs.push((t, 0.5 * h * w * beta_density(t)));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let raw_mass: f64 = pairs.iter().map(|p| p.1).sum();

    let len = pairs.len();
    let mut nodes = vec![0.0; len];
    let mut weights = vec![0.0; len];
    for i in 0..len {
        let j = len - 1 - i;
        let t = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        nodes[j] = t;
        nodes[i] = -t;
        weights[i] = w;
        weights[j] = w;
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(BetaQuadrature {
        nodes,
        weights,
        raw_mass,
    })
}

/// Spectral data of `σ` and `N(σ)` shared by every rotated Petz map of `(N, σ)`.
#[derive(Debug, Clone)]
pub struct PetzKernel {
    adjoint: QuantumChannel,
    sigma: SpectralDecomposition,
    image: SpectralDecomposition,
}

impl PetzKernel {
    pub fn new(channel: &QuantumChannel, sigma: &DensityOperator) -> Result<Self> {
        if sigma.dim() != channel.in_shape().total() {
            return Err(Error::shape(channel.in_shape(), sigma.shape()));
        }
        let image = channel.apply(sigma.matrix())?;
        Ok(Self {
            adjoint: channel.adjoint(),
            sigma: eigh(&sigma.hermitian()),
            image: eigh(&Hermitian::symmetrized(image)),
        })
    }

    fn factors(&self, t: f64) -> (CMatrix, CMatrix) {
        let a = C64::new(0.5, 0.5 * t);
        (self.sigma.power(a), self.image.power(-a))
    }

    /// `R^t` as a channel from the output space of `N` to its input space.
    pub fn rotated(&self, t: f64) -> QuantumChannel {
        let (s, w) = self.factors(t);
        self.adjoint
            .after_sandwich(&w, &w.adjoint())
            .then_sandwich(&s, &s.adjoint())
    }

    /// `R^t(y)` without forming the superoperator.
    pub fn apply_rotated(&self, t: f64, y: &CMatrix) -> Result<CMatrix> {
        let (s, w) = self.factors(t);
        let inner = self.adjoint.apply(&(&w * y * w.adjoint()))?;
        Ok(&s * inner * s.adjoint())
    }

    /// `Σ_j w_j R^{t_j}`, summed in node order.
    pub fn averaged(&self, quad: &BetaQuadrature) -> Result<QuantumChannel> {
        const CHUNK: usize = 8;
        let pairs: Vec<(f64, f64)> = quad.iter().collect();
        let partial: Vec<CMatrix> = pairs
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut acc: Option<CMatrix> = None;
                for &(t, w) in chunk {
                    let term = self.rotated(t).superoperator() * C64::new(w, 0.0);
                    acc = Some(match acc {
                        Some(a) => a + term,
                        None => term,
                    });
                }
                acc.expect("nonempty chunk")
            })
            .collect();
        let mut it = partial.into_iter();
        let mut total = it.next().ok_or_else(|| Error::param("empty quadrature"))?;
        for p in it {
            total += p;
        }
        Ok(QuantumChannel::from_parts(
            self.adjoint.in_shape().clone(),
            self.adjoint.out_shape().clone(),
            total,
        ))
    }
}

/// `R^t_{N,σ}(·) = σ^{(1+it)/2} N†[N(σ)^{-(1+it)/2} (·) N(σ)^{-(1-it)/2}] σ^{(1-it)/2}`.
pub fn rotated_petz(channel: &QuantumChannel, sigma: &DensityOperator, t: f64) -> Result<QuantumChannel> {
    Ok(PetzKernel::new(channel, sigma)?.rotated(t))
}

/// `∫ R^t_{N,σ} dβ(t)` discretized by `quad`.
pub fn averaged_petz(
    channel: &QuantumChannel,
    sigma: &DensityOperator,
    quad: &BetaQuadrature,
) -> Result<QuantumChannel> {
    PetzKernel::new(channel, sigma)?.averaged(quad)
}

/// Which factor of a bipartite state the recovery map reconstructs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

impl Subsystem {
    fn index(self) -> usize {
        match self {
            Subsystem::A => 0,
            Subsystem::B => 1,
        }
    }

    fn other(self) -> Subsystem {
        match self {
            Subsystem::A => Subsystem::B,
            Subsystem::B => Subsystem::A,
        }
    }
}

/// Cached spectra for the rotated Petz maps of a partial trace on `AB`.
#[derive(Debug, Clone)]
pub struct BipartitePetz {
    shape: SystemShape,
    joint: SpectralDecomposition,
    marginals: [SpectralDecomposition; 2],
}

impl BipartitePetz {
    pub fn new(x: &DensityOperator) -> Result<Self> {
        let shape = x.shape().clone();
        if shape.len() != 2 {
            return Err(Error::param(format!("bipartite state expected, got shape {shape}")));
        }
        let marginal = |keep: usize| -> Result<SpectralDecomposition> {
            let (m, _) = partial_trace_matrix(x.matrix(), &shape, &[keep])?;
            Ok(eigh(&Hermitian::symmetrized(m)))
        };
        Ok(Self {
            joint: eigh(&x.hermitian()),
            marginals: [marginal(0)?, marginal(1)?],
            shape,
        })
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn marginal(&self, which: Subsystem) -> CMatrix {
        self.marginals[which.index()].reconstruct()
    }

    /// `R^t_{traced,X}(y)` where `y` lives on the factor that is kept.
    ///
    /// With `traced = A`: `X^{a} (I_A ⊗ X_B^{-a} y X_B^{-ā}) X^{ā}`, `a = (1+it)/2`.
    pub fn apply(&self, traced: Subsystem, t: f64, y: &CMatrix) -> Result<CMatrix> {
        let kept = traced.other();
        let dk = self.shape.factors()[kept.index()];
        let dt = self.shape.factors()[traced.index()];
        if y.shape() != (dk, dk) {
            return Err(Error::shape(format!("{dk}x{dk}"), format!("{}x{}", y.nrows(), y.ncols())));
        }
        let a = C64::new(0.5, 0.5 * t);
        let w = self.marginals[kept.index()].power(-a);
        let inner = &w * y * w.adjoint();
        let id = CMatrix::identity(dt, dt);
        let lifted = match traced {
            Subsystem::A => id.kronecker(&inner),
            Subsystem::B => inner.kronecker(&id),
        };
        let s = self.joint.power(a);
        Ok(&s * lifted * s.adjoint())
    }
}

/// Channel form of the rotated Petz map of a partial trace.
pub fn rotated_petz_partial_trace(
    x: &DensityOperator,
    traced: Subsystem,
    t: f64,
) -> Result<QuantumChannel> {
    if x.shape().len() != 2 {
        return Err(Error::param(format!("bipartite state expected, got shape {}", x.shape())));
    }
    let tr = partial_trace_channel(x.shape(), &[traced.other().index()])?;
    rotated_petz(&tr, x, t)
}

/// `(1/8) ∫ ‖R^t_{B,ρ₂}(σ̃₁) − R^t_{A,ρ₂}(σ̃₁)‖₁² dβ(t)`.
pub fn recovery_difference_r(
    sigma1_tilde: &CMatrix,
    rho2_out: &DensityOperator,
    quad: &BetaQuadrature,
) -> Result<f64> {
    let petz = BipartitePetz::new(rho2_out)?;
    let f = petz.shape().factors();
    if f[0] != f[1] {
        return Err(Error::param(format!("factors of {} differ", petz.shape())));
    }
    let terms: Vec<f64> = quad
        .nodes()
        .par_iter()
        .map(|&t| -> Result<f64> {
            let from_a = petz.apply(Subsystem::B, t, sigma1_tilde)?;
            let from_b = petz.apply(Subsystem::A, t, sigma1_tilde)?;
            Ok(schatten_norm(&(from_a - from_b), Schatten::One).powi(2))
        })
        .collect::<Result<_>>()?;
    let integral: f64 = terms.iter().zip(quad.weights()).map(|(v, w)| v * w).sum();
    Ok(integral / 8.0)
}

fn log_on_support(spec: &SpectralDecomposition) -> CMatrix {
    spec.map_support(f64::ln)
}

/// `(1/2) Σ_{X∈{A,B}} ‖√ρ₁ − exp(½ P (log ρ₂ − log σ̃₂,X + log σ̃₁,X) P)‖₂²`.
///
/// The exponent is compressed to the support of `ρ₂`, exponentiated there and
/// embedded back with zeros elsewhere.
pub fn recovery_difference_cl(
    rho1_out: &DensityOperator,
    sigma1_tilde: &CMatrix,
    sigma2_tilde: &CMatrix,
    rho2_out: &DensityOperator,
) -> Result<f64> {
    let shape = rho2_out.shape();
    if shape.len() != 2 || shape.factors()[0] != shape.factors()[1] || rho1_out.shape() != shape {
        return Err(Error::param(format!(
            "Carlen-Lieb difference needs two equal bipartite shapes, got {} and {}",
            rho1_out.shape(),
            shape
        )));
    }
    let d = shape.factors()[0];
    if sigma1_tilde.shape() != (d, d) || sigma2_tilde.shape() != (d, d) {
        return Err(Error::shape(format!("{d}x{d}"), "marginal of another size"));
    }
    let s1 = eigh(&Hermitian::symmetrized(sigma1_tilde.clone()));
    let s2 = eigh(&Hermitian::symmetrized(sigma2_tilde.clone()));
    // log σ̃₁ must be finite wherever log σ̃₂ is used
    let leak = max_abs(&(s2.support_isometry().adjoint() * (CMatrix::identity(d, d) - s1.support_projector()) * s2.support_isometry()));
    if leak > 1e-10 {
        return Err(Error::HypothesisViolated {
            what: "σ̃₁ is singular on the support of σ̃₂".into(),
            defect: leak,
        });
    }
    let rho2 = eigh(&rho2_out.hermitian());
    let v = rho2.support_isometry();
    let log_rho2 = log_on_support(&rho2);
    let shift = log_on_support(&s1) - log_on_support(&s2);
    let id = CMatrix::identity(d, d);
    let sqrt_rho1 = eigh(&rho1_out.hermitian()).map_support(f64::sqrt);

    let mut total = 0.0;
    for lifted in [shift.kronecker(&id), id.kronecker(&shift)] {
        let exponent = v.adjoint() * (&log_rho2 + lifted) * &v;
        let half = Hermitian::symmetrized(exponent * C64::new(0.5, 0.0));
        let e = eigh(&half).map_all(f64::exp);
        let embedded = &v * e * v.adjoint();
        total += 0.5 * schatten_norm(&(&sqrt_rho1 - embedded), Schatten::Two).powi(2);
    }
    Ok(total)
}

/// `(R⁽¹⁾)^{⊗n} ∘ Λ` with `R⁽¹⁾` the averaged Petz map of `tr_{A₂…Aₙ} ∘ Λ` at `σ₂`.
pub fn improved_cloning_channel(
    lambda: &QuantumChannel,
    sigma2: &DensityOperator,
    quad: &BetaQuadrature,
) -> Result<QuantumChannel> {
    if lambda.in_shape().len() != 1 {
        return Err(Error::param(format!(
            "improved cloner needs a single input factor, got {}",
            lambda.in_shape()
        )));
    }
    let n = lambda.out_shape().len();
    let first = partial_trace_channel(lambda.out_shape(), &[0])?;
    let local = QuantumChannel::compose(&first, lambda)?;
    let r1 = averaged_petz(&local, sigma2, quad)?;
    QuantumChannel::compose(&r1.tensor_power(n)?, lambda)
}
