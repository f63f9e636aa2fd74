//! Seeded fixtures `(σ₁, σ₂, Λ)` satisfying the cloning or broadcasting
//! hypotheses by construction.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::HYPOTHESIS_TOLERANCE;
use crate::channel::{constant_channel, measure_prepare, random_channel, symmetrized_output, QuantumChannel};
use crate::error::{Error, Result};
use crate::matfun::{eigh, max_abs_diff, CMatrix, Hermitian, C64};
use crate::qstate::{
    gaussian_matrix, gaussian_vector, ginibre_random_density, permutation_operator, DensityOperator,
    SystemShape,
};
use crate::subspace::permutations_with_sign;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureFamily {
    /// `Λ(X) = tr(X) τ^{⊗n}`.
    Constant,
    /// Random POVM followed by permutation-symmetric preparations that clone `σ₂` exactly.
    MeasurePrepare,
    /// Output-symmetrized random channel, shifted to clone `σ₂` when cloning is required.
    Symmetrized,
    /// Projective test on a proper subspace containing both inputs.
    CloneExact,
    /// Diagonal inputs and computational-basis measurement; diagonal cloning
    /// preparations, or the copy map `|x⟩ ↦ |x…x⟩` when only broadcasting is required.
    ClassicalDiagonal,
}

impl FixtureFamily {
    pub const ALL: [FixtureFamily; 5] = [
        FixtureFamily::Constant,
        FixtureFamily::MeasurePrepare,
        FixtureFamily::Symmetrized,
        FixtureFamily::CloneExact,
        FixtureFamily::ClassicalDiagonal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FixtureFamily::Constant => "constant",
            FixtureFamily::MeasurePrepare => "measure_prepare",
            FixtureFamily::Symmetrized => "symmetrized",
            FixtureFamily::CloneExact => "clone_exact",
            FixtureFamily::ClassicalDiagonal => "classical_diagonal",
        }
    }
}

impl fmt::Display for FixtureFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FixtureFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FixtureFamily::ALL
            .into_iter()
            .find(|f| f.as_str() == s.replace('-', "_"))
            .ok_or_else(|| Error::param(format!("unknown fixture family `{s}`")))
    }
}

/// Which hypothesis a fixture must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// `Λ(σ₁^{⊗k})` has identical marginals and `Λ(σ₂^{⊗k}) = σ̃₂^{⊗n}`.
    CloneBroadcast,
    /// Both outputs have identical marginals.
    Broadcast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixtureSpec {
    pub family: FixtureFamily,
    pub d: usize,
    /// Input copies `k` of each state.
    pub copies: usize,
    /// Output factors `n`.
    pub n: usize,
    pub target: Target,
}

/// `(σ₁, σ₂)` on one qudit and `Λ` from `copies` qudits to `n` qudits.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub family: Option<FixtureFamily>,
    pub sigma1: DensityOperator,
    pub sigma2: DensityOperator,
    pub copies: usize,
    pub lambda: QuantumChannel,
}

/// Outputs, marginals and measured hypothesis defects of a fixture.
#[derive(Debug, Clone)]
pub struct HypothesisReport {
    pub rho1_out: DensityOperator,
    pub rho2_out: DensityOperator,
    pub sigma1_tilde: DensityOperator,
    pub sigma2_tilde: DensityOperator,
    /// Max entry deviation between the marginals of `ρ₁out`.
    pub marginal_defect: f64,
    /// `‖ρ₂out − σ̃₂^{⊗n}‖_max` for cloning, or the marginal spread of `ρ₂out` for broadcasting.
    pub second_defect: f64,
}

impl Fixture {
    pub fn new(sigma1: DensityOperator, sigma2: DensityOperator, copies: usize, lambda: QuantumChannel) -> Result<Self> {
        if sigma1.shape() != sigma2.shape() || sigma1.shape().len() != 1 {
            return Err(Error::shape(sigma1.shape(), sigma2.shape()));
        }
        let d = sigma1.dim();
        let expected_in = SystemShape::qudits(d, copies)?;
        if lambda.in_shape() != &expected_in {
            return Err(Error::shape(&expected_in, lambda.in_shape()));
        }
        let out = lambda.out_shape();
        if out.factors().iter().any(|&f| f != d) {
            return Err(Error::shape(format!("{d}-dimensional output factors"), out));
        }
        Ok(Self { family: None, sigma1, sigma2, copies, lambda })
    }

    pub fn d(&self) -> usize {
        self.sigma1.dim()
    }

    pub fn n(&self) -> usize {
        self.lambda.out_shape().len()
    }

    /// `(σ₁^{⊗k}, σ₂^{⊗k})`.
    pub fn inputs(&self) -> Result<(DensityOperator, DensityOperator)> {
        Ok((self.sigma1.tensor_power(self.copies)?, self.sigma2.tensor_power(self.copies)?))
    }

    /// Measures the defects of the requested hypothesis and rejects above
    /// `HYPOTHESIS_TOLERANCE`.
    pub fn validate(&self, target: Target) -> Result<HypothesisReport> {
        let report = self.measure(target)?;
        if report.marginal_defect > HYPOTHESIS_TOLERANCE {
            return Err(Error::HypothesisViolated {
                what: "marginals of Λ(σ₁^{⊗k}) differ".into(),
                defect: report.marginal_defect,
            });
        }
        if report.second_defect > HYPOTHESIS_TOLERANCE {
            let what = match target {
                Target::CloneBroadcast => "Λ(σ₂^{⊗k}) is not a product of its marginals",
                Target::Broadcast => "marginals of Λ(σ₂^{⊗k}) differ",
            };
            return Err(Error::HypothesisViolated { what: what.into(), defect: report.second_defect });
        }
        Ok(report)
    }

    /// Same measurements as [`Fixture::validate`] without rejection.
    pub fn measure(&self, target: Target) -> Result<HypothesisReport> {
        let n = self.n();
        if n < 2 {
            return Err(Error::param(format!("cloning needs n ≥ 2 outputs, got {n}")));
        }
        let (in1, in2) = self.inputs()?;
        let rho1_out = self.lambda.apply_state(&in1)?;
        let rho2_out = self.lambda.apply_state(&in2)?;
        let (sigma1_tilde, marginal_defect) = marginal_spread(&rho1_out)?;
        let (sigma2_tilde, spread2) = marginal_spread(&rho2_out)?;
        let second_defect = match target {
            Target::CloneBroadcast => {
                max_abs_diff(rho2_out.matrix(), sigma2_tilde.tensor_power(n)?.matrix())
            }
            Target::Broadcast => spread2,
        };
        Ok(HypothesisReport { rho1_out, rho2_out, sigma1_tilde, sigma2_tilde, marginal_defect, second_defect })
    }
}

/// First marginal and the largest deviation of any other marginal from it.
fn marginal_spread(rho: &DensityOperator) -> Result<(DensityOperator, f64)> {
    let first = rho.partial_trace(&[0])?;
    let mut spread: f64 = 0.0;
    for j in 1..rho.shape().len() {
        spread = spread.max(max_abs_diff(first.matrix(), rho.partial_trace(&[j])?.matrix()));
    }
    Ok((first, spread))
}

impl FixtureSpec {
    pub fn new(family: FixtureFamily, d: usize, copies: usize, n: usize, target: Target) -> Self {
        Self { family, d, copies, n, target }
    }

    pub fn generate(&self, seed: u64) -> Result<Fixture> {
        if self.d < 2 {
            return Err(Error::param(format!("local dimension {} < 2", self.d)));
        }
        if self.copies == 0 || self.n < 2 {
            return Err(Error::param(format!("need k ≥ 1 and n ≥ 2, got k = {}, n = {}", self.copies, self.n)));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut fixture = match self.family {
            FixtureFamily::Constant => self.constant(&mut rng),
            FixtureFamily::MeasurePrepare => self.measure_prepare(&mut rng),
            FixtureFamily::Symmetrized => self.symmetrized(&mut rng),
            FixtureFamily::CloneExact => self.clone_exact(&mut rng),
            FixtureFamily::ClassicalDiagonal => self.classical(&mut rng),
        }?;
        fixture.family = Some(self.family);
        Ok(fixture)
    }

    fn in_shape(&self) -> Result<SystemShape> {
        SystemShape::qudits(self.d, self.copies)
    }

    fn out_shape(&self) -> Result<SystemShape> {
        SystemShape::qudits(self.d, self.n)
    }

    fn constant(&self, rng: &mut ChaCha20Rng) -> Result<Fixture> {
        let sigma1 = ginibre_random_density(self.d, self.d, rng)?;
        let sigma2 = ginibre_random_density(self.d, self.d, rng)?;
        let tau = balanced_state(self.d, rng)?.tensor_power(self.n)?;
        let lambda = constant_channel(self.in_shape()?, &tau)?;
        Fixture::new(sigma1, sigma2, self.copies, lambda)
    }

    fn measure_prepare(&self, rng: &mut ChaCha20Rng) -> Result<Fixture> {
        let sigma1 = ginibre_random_density(self.d, self.d, rng)?;
        let sigma2 = ginibre_random_density(self.d, self.d, rng)?;
        let povm = random_povm(self.in_shape()?.total(), 3, rng);
        let tau = balanced_state(self.d, rng)?;
        let lambda = self.cloning_measure_prepare(&sigma2, &povm, &tau, false, rng)?;
        Fixture::new(sigma1, sigma2, self.copies, lambda)
    }

    fn classical(&self, rng: &mut ChaCha20Rng) -> Result<Fixture> {
        let shape = SystemShape::single(self.d)?;
        let sigma1 = DensityOperator::diagonal(shape.clone(), &random_probabilities(self.d, rng))?;
        let sigma2 = DensityOperator::diagonal(shape.clone(), &random_probabilities(self.d, rng))?;
        let di = self.in_shape()?.total();
        let povm: Vec<CMatrix> = (0..di)
            .map(|x| {
                let mut m = CMatrix::zeros(di, di);
                m[(x, x)] = C64::new(1.0, 0.0);
                m
            })
            .collect();
        let lambda = if self.target == Target::Broadcast && self.copies == 1 {
            // perfect classical broadcaster |x⟩ ↦ |x…x⟩
            let out_shape = self.out_shape()?;
            let stride: usize = (0..self.n).map(|j| self.d.pow(j as u32)).sum();
            let preps = (0..self.d)
                .map(|x| DensityOperator::basis_state(out_shape.clone(), x * stride))
                .collect::<Result<Vec<_>>>()?;
            measure_prepare(self.in_shape()?, &povm, &preps)?
        } else {
            let tau = DensityOperator::diagonal(shape, &balanced_probabilities(self.d, rng))?;
            self.cloning_measure_prepare(&sigma2, &povm, &tau, true, rng)?
        };
        Fixture::new(sigma1, sigma2, self.copies, lambda)
    }

    /// `X ↦ Σ_a tr(M_a X)(τ^{⊗n} + c Δ_a)` with symmetric traceless `Δ_a`
    /// averaging to zero under `σ₂^{⊗k}`, so `σ₂^{⊗k} ↦ τ^{⊗n}`.
    fn cloning_measure_prepare(
        &self,
        sigma2: &DensityOperator,
        povm: &[CMatrix],
        tau: &DensityOperator,
        diagonal: bool,
        rng: &mut ChaCha20Rng,
    ) -> Result<QuantumChannel> {
        let out_shape = self.out_shape()?;
        let s2k = sigma2.tensor_power(self.copies)?;
        let q: Vec<f64> = povm.iter().map(|m| (m * s2k.matrix()).trace().re).collect();
        let deltas = symmetric_perturbations(&out_shape, &q, diagonal, rng)?;
        let base = tau.tensor_power(self.n)?;
        let c = 0.5 * eigh(&base.hermitian()).min_eigenvalue();
        let preps = deltas
            .iter()
            .map(|delta| {
                let m = base.matrix() + delta * C64::new(c, 0.0);
                DensityOperator::new(out_shape.clone(), Hermitian::symmetrized(m).into_inner())
            })
            .collect::<Result<Vec<_>>>()?;
        measure_prepare(self.in_shape()?, povm, &preps)
    }

    fn symmetrized(&self, rng: &mut ChaCha20Rng) -> Result<Fixture> {
        let sigma1 = ginibre_random_density(self.d, self.d, rng)?;
        let sigma2 = ginibre_random_density(self.d, self.d, rng)?;
        let gamma = symmetrized_output(&random_channel(self.in_shape()?, self.out_shape()?, 2, rng)?)?;
        let lambda = match self.target {
            Target::Broadcast => gamma,
            Target::CloneBroadcast => {
                // Λ = cΓ + tr(·)(τ^{⊗n} − cΓ(σ₂^{⊗k})), positive for small c
                let tau = balanced_state(self.d, rng)?.tensor_power(self.n)?;
                let image = gamma.apply(sigma2.tensor_power(self.copies)?.matrix())?;
                let lmax = eigh(&Hermitian::symmetrized(image.clone())).max_eigenvalue();
                let c = 0.5 * eigh(&tau.hermitian()).min_eigenvalue() / lmax;
                let rest = (tau.matrix() - image * C64::new(c, 0.0)) / C64::new(1.0 - c, 0.0);
                let rest = DensityOperator::new(self.out_shape()?, Hermitian::symmetrized(rest).into_inner())?;
                let shift = constant_channel(self.in_shape()?, &rest)?;
                QuantumChannel::weighted_sum(&[(c, gamma), (1.0 - c, shift)])?
            }
        };
        Fixture::new(sigma1, sigma2, self.copies, lambda)
    }

    /// Inputs live on `S₁ = span{|0⟩, …, |s−1⟩}`; the test `{Π_S, I − Π_S}` with
    /// `S = S₁^{⊗k}` always fires, so both inputs map to `τ₀^{⊗n}`.
    fn clone_exact(&self, rng: &mut ChaCha20Rng) -> Result<Fixture> {
        let s = (self.d - 1).max(1);
        let embed = |rho: DensityOperator| -> Result<DensityOperator> {
            let mut m = CMatrix::zeros(self.d, self.d);
            m.view_mut((0, 0), (s, s)).copy_from(rho.matrix());
            DensityOperator::new(SystemShape::single(self.d)?, m)
        };
        let sigma1 = embed(ginibre_random_density(s, s, rng)?)?;
        let sigma2 = embed(ginibre_random_density(s, s, rng)?)?;
        let mut p1 = CMatrix::zeros(self.d, self.d);
        for i in 0..s {
            p1[(i, i)] = C64::new(1.0, 0.0);
        }
        let mut ps = p1.clone();
        for _ in 1..self.copies {
            ps = ps.kronecker(&p1);
        }
        let di = ps.nrows();
        let povm = vec![ps.clone(), CMatrix::identity(di, di) - ps];
        let tau0 = balanced_state(self.d, rng)?.tensor_power(self.n)?;
        let xi = balanced_state(self.d, rng)?.tensor_power(self.n)?;
        let lambda = measure_prepare(self.in_shape()?, &povm, &[tau0, xi])?;
        Fixture::new(sigma1, sigma2, self.copies, lambda)
    }
}

/// `½ I/d + ½ ρ` with `ρ` Ginibre; eigenvalues stay above `1/(2d)`.
fn balanced_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<DensityOperator> {
    let rho = ginibre_random_density(d, d, rng)?;
    let m = (CMatrix::identity(d, d) / C64::new(d as f64, 0.0) + rho.matrix()) * C64::new(0.5, 0.0);
    DensityOperator::new(SystemShape::single(d)?, m)
}

fn random_probabilities<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = gaussian_vector(d, rng).iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

fn balanced_probabilities<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    random_probabilities(d, rng).into_iter().map(|p| 0.5 * p + 0.5 / d as f64).collect()
}

/// `M_a = V_a† V_a` from a Haar-like isometry `V` stacked in `outcomes` blocks.
fn random_povm<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> Vec<CMatrix> {
    let g = gaussian_matrix(outcomes * dim, dim, rng);
    let gram = Hermitian::symmetrized(g.adjoint() * &g);
    let v = g * eigh(&gram).map_support(|l| 1.0 / l.sqrt());
    (0..outcomes)
        .map(|a| {
            let block = v.rows(a * dim, dim);
            Hermitian::symmetrized(block.adjoint() * block).into_inner()
        })
        .collect()
}

/// Permutation-symmetric traceless Hermitian `Δ_a` with `Σ_a q_a Δ_a = 0` and
/// operator norm at most 1.
fn symmetric_perturbations<R: Rng + ?Sized>(
    shape: &SystemShape,
    q: &[f64],
    diagonal: bool,
    rng: &mut R,
) -> Result<Vec<CMatrix>> {
    let dim = shape.total();
    let perms = permutations_with_sign(shape.len());
    let perm_ops = perms
        .iter()
        .map(|(p, _)| permutation_operator(shape, p))
        .collect::<Result<Vec<_>>>()?;
    let mut raw = Vec::with_capacity(q.len());
    for _ in q {
        let h = if diagonal {
            let mut m = CMatrix::zeros(dim, dim);
            for (i, z) in gaussian_vector(dim, rng).iter().enumerate() {
                m[(i, i)] = C64::new(z.re, 0.0);
            }
            m
        } else {
            let g = gaussian_matrix(dim, dim, rng);
            &g + g.adjoint()
        };
        let mut sym = CMatrix::zeros(dim, dim);
        for p in &perm_ops {
            sym += p * &h * p.adjoint();
        }
        sym /= C64::new(perm_ops.len() as f64, 0.0);
        let tr = sym.trace() / C64::new(dim as f64, 0.0);
        sym -= CMatrix::identity(dim, dim) * tr;
        raw.push(sym);
    }
    let total: f64 = q.iter().sum();
    let mut mean = CMatrix::zeros(dim, dim);
    for (h, &w) in raw.iter().zip(q) {
        mean += h * C64::new(w / total, 0.0);
    }
    let deltas: Vec<CMatrix> = raw.into_iter().map(|h| Hermitian::symmetrized(h - &mean).into_inner()).collect();
    let scale = deltas
        .iter()
        .map(|m| {
            let s = eigh(&Hermitian::symmetrized(m.clone()));
            s.max_eigenvalue().abs().max(s.min_eigenvalue().abs())
        })
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(deltas);
    }
    Ok(deltas.into_iter().map(|m| m / C64::new(scale, 0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::channel_diagnostics;
    use crate::matfun::max_abs;

    #[test]
    fn families_meet_hypotheses() {
        for family in FixtureFamily::ALL {
            for (d, k, n) in [(2, 1, 2), (2, 1, 3), (3, 1, 2), (2, 2, 3)] {
                for target in [Target::CloneBroadcast, Target::Broadcast] {
                    let spec = FixtureSpec::new(family, d, k, n, target);
                    let fx = spec.generate(17).unwrap();
                    let diag = channel_diagnostics(&fx.lambda, None);
                    assert!(diag.min_choi_eigenvalue > -1e-10, "{family} not CP");
                    assert!(diag.tp_defect < 1e-10, "{family} not TP");
                    let h = fx.measure(target).unwrap();
                    assert!(h.marginal_defect < 1e-10, "{family} {d} {k} {n}: {}", h.marginal_defect);
                    assert!(h.second_defect < 1e-10, "{family} {d} {k} {n}: {}", h.second_defect);
                }
            }
        }
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let spec = FixtureSpec::new(FixtureFamily::MeasurePrepare, 2, 1, 2, Target::CloneBroadcast);
        let a = spec.generate(5).unwrap();
        let b = spec.generate(5).unwrap();
        let c = spec.generate(6).unwrap();
        assert_eq!(a.lambda.superoperator(), b.lambda.superoperator());
        assert_eq!(a.sigma1.matrix(), b.sigma1.matrix());
        assert!(max_abs(&(a.sigma1.matrix() - c.sigma1.matrix())) > 1e-3);
    }

    #[test]
    fn nontrivial_marginals_differ() {
        let spec = FixtureSpec::new(FixtureFamily::MeasurePrepare, 2, 1, 2, Target::CloneBroadcast);
        let h = spec.generate(3).unwrap().validate(Target::CloneBroadcast).unwrap();
        assert!(max_abs_diff(h.sigma1_tilde.matrix(), h.sigma2_tilde.matrix()) > 1e-4);
    }

    #[test]
    fn corrupted_fixture_is_rejected() {
        let fx = FixtureSpec::new(FixtureFamily::Constant, 2, 1, 2, Target::CloneBroadcast)
            .generate(1)
            .unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let noise = random_channel(fx.lambda.in_shape().clone(), fx.lambda.out_shape().clone(), 2, &mut rng).unwrap();
        let mixed = QuantumChannel::weighted_sum(&[(1.0 - 1e-3, fx.lambda.clone()), (1e-3, noise)]).unwrap();
        let bad = Fixture::new(fx.sigma1, fx.sigma2, 1, mixed).unwrap();
        assert!(matches!(bad.validate(Target::CloneBroadcast), Err(Error::HypothesisViolated { .. })));
    }
}
