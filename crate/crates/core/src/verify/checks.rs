use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::fixtures::{Fixture, FixtureFamily, FixtureSpec, Target};
use super::{Params, SlackReport, TheoremId, MAX_CHECK_FACTORS, SUPPORT_TOLERANCE};
use crate::channel::{
    partial_trace_channel, random_channel, subspace_cloner, subspace_partial_trace, symmetrized_partial_trace,
    uqcm, QuantumChannel,
};
use crate::error::{Error, Result};
use crate::functional::{fidelity, neg_log_fidelity, relative_entropy, trace_distance};
use crate::matfun::{max_abs_diff, real_trace, schatten_norm, CMatrix, Schatten, C64};
use crate::qstate::{epsilon_mix, gaussian_matrix, ginibre_on_shape, ginibre_random_density, haar_random_pure, DensityOperator, SystemShape};
use crate::recovery::{
    recovery_difference_cl, recovery_difference_r, BetaQuadrature, BipartitePetz, PetzKernel, Subsystem,
};
use crate::subspace::{
    antisymmetric_subspace_basis, binomial, maximally_mixed, slater_determinant, symmetric_subspace_basis,
    SubspaceBasis,
};

/// Which recovery difference bounds the broadcasting entropy drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaVariant {
    /// Rotated-Petz form `Δ_R`.
    R,
    /// Exponential form `Δ_CL`.
    Cl,
}

/// How the subspace checkers draw `ω`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaSource {
    /// `φ^{⊗n}` for Haar-random `φ` (symmetric subspace only).
    TensorPower,
    MaximallyMixed,
    /// Full-rank Ginibre state on the subspace.
    Random,
    /// Slater determinant of Haar-random orthonormal orbitals (antisymmetric subspace only).
    Slater,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubspaceFamily {
    Symmetric,
    Antisymmetric,
}

macro_rules! named_enum {
    ($ty:ty, $($variant:path => $name:literal),+) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($variant => $name),+ }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.replace('-', "_").as_str() {
                    $($name => Ok($variant),)+
                    _ => Err(Error::param(format!("unknown {} `{s}`", stringify!($ty)))),
                }
            }
        }
    };
}

named_enum!(DeltaVariant, DeltaVariant::R => "r", DeltaVariant::Cl => "cl");
named_enum!(
    OmegaSource,
    OmegaSource::TensorPower => "tensor_power",
    OmegaSource::MaximallyMixed => "maximally_mixed",
    OmegaSource::Random => "random",
    OmegaSource::Slater => "slater"
);
named_enum!(SubspaceFamily, SubspaceFamily::Symmetric => "symmetric", SubspaceFamily::Antisymmetric => "antisymmetric");

fn report(theorem: TheoremId, lhs: f64, rhs: f64) -> SlackReport {
    SlackReport::new(theorem, Params::default(), 0, lhs, rhs, theorem.tolerance())
}

fn rel(a: &DensityOperator, b: &CMatrix) -> f64 {
    relative_entropy(a.matrix(), b).value()
}

/// `a·x − b·y` with `x = +∞` giving `+∞` even when `y` is infinite.
fn weighted_drop(a: f64, x: f64, b: f64, y: f64) -> f64 {
    if x.is_infinite() {
        f64::INFINITY
    } else {
        a * x - b * y
    }
}

/// Cloning bound `kD(σ₁‖σ₂) − D(σ̃₁‖σ̃₂) ≥ (n−1)D(σ̃₁‖σ̃₂)`, with the Pinsker link
/// and (for `k = 1`) the trilemma in `extras`.
pub fn check_clone_broadcast(fixture: &Fixture) -> Result<SlackReport> {
    let h = fixture.validate(Target::CloneBroadcast)?;
    let n = fixture.n() as f64;
    let k = fixture.copies as f64;
    let d12 = rel(&fixture.sigma1, fixture.sigma2.matrix());
    let dt = rel(&h.sigma1_tilde, h.sigma2_tilde.matrix());
    let lhs = weighted_drop(k, d12, 1.0, dt);
    let rhs = (n - 1.0) * dt;
    let mut r = report(TheoremId::Thm3, lhs, rhs);
    let marg_dist = trace_distance(h.sigma1_tilde.matrix(), h.sigma2_tilde.matrix());
    r.set("pinsker_slack", rhs - 0.5 * (n - 1.0) * marg_dist.powi(2));
    r.set("marginal_trace_distance", marg_dist);
    r.set("marginal_defect", h.marginal_defect);
    r.set("clone_defect", h.second_defect);
    if fixture.copies == 1 && d12.is_finite() {
        let delta = trace_distance(fixture.sigma1.matrix(), fixture.sigma2.matrix()).powi(2) / 6.0;
        let drop = d12 - dt;
        let e1 = 0.5 * trace_distance(fixture.sigma1.matrix(), h.sigma1_tilde.matrix()).powi(2);
        let e2 = 0.5 * trace_distance(fixture.sigma2.matrix(), h.sigma2_tilde.matrix()).powi(2);
        let third = delta / 3.0;
        r.set("trilemma_delta", delta);
        r.set("trilemma_sum_slack", drop + e1 + e2 - delta);
        r.set("trilemma_distinguishability_drop", drop >= third);
        r.set("trilemma_poor_copy_sigma1", e1 >= third);
        r.set("trilemma_poor_copy_sigma2", e2 >= third);
        r.set("trilemma_holds", drop >= third || e1 >= third || e2 >= third);
    }
    Ok(r)
}

/// `kD(σ₁‖σ₂) − mD(σ̃₁‖σ̃₂) ≥ −log F(σ₁^{⊗k}, R(tr_{m+1..n} Λ(σ₁^{⊗k})))` with `R`
/// the averaged Petz map of `tr_{m+1..n} ∘ Λ` at `σ₂^{⊗k}`.
pub fn check_clone_broadcast_recovery(fixture: &Fixture, m: usize, quad: &BetaQuadrature) -> Result<SlackReport> {
    let h = fixture.validate(Target::CloneBroadcast)?;
    let n = fixture.n();
    if m == 0 || m > n {
        return Err(Error::param(format!("m = {m} outside 1..={n}")));
    }
    let theorem = if fixture.copies == 1 { TheoremId::Thm4 } else { TheoremId::Thm13 };
    let keep: Vec<usize> = (0..m).collect();
    let tr = partial_trace_channel(fixture.lambda.out_shape(), &keep)?;
    let local = QuantumChannel::compose(&tr, &fixture.lambda)?;
    let (in1, in2) = fixture.inputs()?;
    let recovery = PetzKernel::new(&local, &in2)?.averaged(quad)?;

    let d12 = rel(&fixture.sigma1, fixture.sigma2.matrix());
    let dt = rel(&h.sigma1_tilde, h.sigma2_tilde.matrix());
    let lhs = weighted_drop(fixture.copies as f64, d12, m as f64, dt);
    let recovered = recovery.apply(&local.apply(in1.matrix())?)?;
    let rhs = neg_log_fidelity(in1.matrix(), &recovered);
    let mut r = report(theorem, lhs, rhs);

    let fixed = recovery.apply(h.sigma2_tilde.tensor_power(m)?.matrix())?;
    r.set("recovery_identity_defect", trace_distance(&fixed, in2.matrix()));
    r.set("recovered_trace", real_trace(&recovered));
    r.set("marginal_defect", h.marginal_defect);
    r.set("clone_defect", h.second_defect);

    if fixture.copies == 1 && m == 1 {
        match recovery.tensor_power(n) {
            Ok(product) => {
                let improved = QuantumChannel::compose(&product, &fixture.lambda)?;
                let out1 = improved.apply_state(&in1)?;
                let target = recovery.apply(h.sigma1_tilde.matrix())?;
                let mut defect: f64 = 0.0;
                for j in 0..n {
                    defect = defect.max(trace_distance(out1.partial_trace(&[j])?.matrix(), &target));
                }
                let out2 = improved.apply(in2.matrix())?;
                r.set("improved_marginal_defect", defect);
                r.set("improved_clone_defect", trace_distance(&out2, fixture.sigma2.tensor_power(n)?.matrix()));
            }
            Err(Error::CapExceeded { .. }) => r.set("improved_skipped", true),
            Err(e) => return Err(e),
        }
    }
    Ok(r)
}

fn check_support(basis: &SubspaceBasis, omega: &CMatrix, what: &str) -> Result<()> {
    let defect = basis.support_defect(omega);
    if defect > SUPPORT_TOLERANCE {
        return Err(Error::HypothesisViolated { what: what.into(), defect });
    }
    Ok(())
}

fn check_factor_cap(n: usize) -> Result<()> {
    if n > MAX_CHECK_FACTORS {
        return Err(Error::CapExceeded { what: "factor count n".into(), size: n, cap: MAX_CHECK_FACTORS });
    }
    Ok(())
}

/// `D(ω‖π_X) ≥ D(P ω‖π_Y) + D(ω‖C P ω)` for a state `ω` on `X_n` whose
/// `k`-marginal lies in `Y_k`.
pub fn check_subspace_recovery(x: &SubspaceBasis, y: &SubspaceBasis, omega: &DensityOperator) -> Result<SlackReport> {
    let (n, k) = (x.factors(), y.factors());
    check_factor_cap(n)?;
    if k == 0 || k > n || x.local_dim() != y.local_dim() {
        return Err(Error::param(format!("need 1 ≤ k ≤ n on equal qudits, got X_{n}, Y_{k}")));
    }
    check_support(x, omega.matrix(), "ω is not supported in X_n")?;
    let marginal = omega.partial_trace(&(0..k).collect::<Vec<_>>())?;
    check_support(y, marginal.matrix(), "tr_{n→k} ω is not supported in Y_k")?;

    let p = subspace_partial_trace(x, y)?;
    let c = subspace_cloner(x, y)?;
    let pi_x = maximally_mixed(x);
    let pi_y = maximally_mixed(y);
    let pw = p.apply(omega.matrix())?;
    let recovered = c.apply(&pw)?;
    let pw_state = DensityOperator::normalized(y.shape(), pw.clone())?;
    let lhs = rel(omega, pi_x.matrix());
    let marginal_term = rel(&pw_state, pi_y.matrix());
    let rhs = marginal_term + rel(omega, &recovered);
    let mut r = report(TheoremId::Thm7, lhs, rhs);
    let drop = lhs - marginal_term;
    r.set("entropy_drop", drop);
    r.set("recovery_fidelity", fidelity(omega.matrix(), &recovered));
    r.set("fidelity_floor", (-drop).exp());
    r.set("recovered_trace", real_trace(&recovered));
    r.set("pi_marginal_defect", max_abs_diff(&p.apply(pi_x.matrix())?, pi_y.matrix()));
    Ok(r)
}

/// Symmetric-subspace instance of [`check_subspace_recovery`]: `P` is the
/// symmetrized partial trace and `C` the UQCM, so `P(π_sym) = π_sym` on `k` qudits.
pub fn check_uqcm_recovery(d: usize, n: usize, k: usize, omega: &DensityOperator) -> Result<SlackReport> {
    check_factor_cap(n)?;
    if k == 0 || k > n {
        return Err(Error::param(format!("need 1 ≤ k ≤ n, got k = {k}, n = {n}")));
    }
    let x = symmetric_subspace_basis(d, n)?;
    let y = symmetric_subspace_basis(d, k)?;
    check_support(&x, omega.matrix(), "ω is not supported in the symmetric subspace")?;
    let mut r = check_subspace_recovery(&x, &y, omega)?;
    r.theorem = TheoremId::Thm5;
    r.set("log_dimension_ratio", (x.dim() as f64 / y.dim() as f64).ln());
    Ok(r)
}

/// Reverse direction: `D(ω‖π_k) ≥ D(Cω‖Cπ_k) + D(ω‖P C ω)` on the symmetric subspace.
pub fn check_reverse_recovery(d: usize, n: usize, k: usize, omega: &DensityOperator) -> Result<SlackReport> {
    check_factor_cap(n)?;
    if k == 0 || k > n {
        return Err(Error::param(format!("need 1 ≤ k ≤ n, got k = {k}, n = {n}")));
    }
    let y = symmetric_subspace_basis(d, k)?;
    check_support(&y, omega.matrix(), "ω is not supported in the symmetric subspace")?;
    let p = symmetrized_partial_trace(d, n, k)?;
    let c = uqcm(d, k, n)?;
    let pi_k = maximally_mixed(&y);
    let cw = DensityOperator::normalized(SystemShape::qudits(d, n)?, c.apply(omega.matrix())?)?;
    let recovered = p.apply(cw.matrix())?;
    let lhs = rel(omega, pi_k.matrix());
    let cloned_term = rel(&cw, &c.apply(pi_k.matrix())?);
    let rhs = cloned_term + rel(omega, &recovered);
    let mut r = report(TheoremId::Thm6, lhs, rhs);
    let drop = lhs - cloned_term;
    r.set("entropy_drop", drop);
    r.set("recovery_fidelity", fidelity(omega.matrix(), &recovered));
    r.set("fidelity_floor", (-drop).exp());
    Ok(r)
}

/// Broadcasting bound `D(σ₁‖σ₂) − D(σ̃₁‖σ̃₂) ≥ Δ` for a two-output fixture
/// with identical marginals. If `D(σ₁‖σ₂) = ∞`, `σ₂` is first replaced by
/// `εσ₁ + (1−ε)σ₂`.
pub fn check_broadcast_difference(
    fixture: &Fixture,
    variant: DeltaVariant,
    epsilon: f64,
    quad: &BetaQuadrature,
) -> Result<SlackReport> {
    if fixture.n() != 2 || fixture.copies != 1 {
        return Err(Error::param(format!(
            "broadcast check needs k = 1, n = 2, got k = {}, n = {}",
            fixture.copies,
            fixture.n()
        )));
    }
    let mut fx = fixture.clone();
    let mut mixed = false;
    if !relative_entropy(fx.sigma1.matrix(), fx.sigma2.matrix()).is_finite() {
        fx.sigma2 = epsilon_mix(&fx.sigma1, &fx.sigma2, epsilon)?;
        mixed = true;
    }
    let h = fx.validate(Target::Broadcast)?;
    let d12 = rel(&fx.sigma1, fx.sigma2.matrix());
    let dt = rel(&h.sigma1_tilde, h.sigma2_tilde.matrix());
    let lhs = d12 - dt;
    let rhs = match variant {
        DeltaVariant::R => recovery_difference_r(h.sigma1_tilde.matrix(), &h.rho2_out, quad)?,
        DeltaVariant::Cl => {
            recovery_difference_cl(&h.rho1_out, h.sigma1_tilde.matrix(), h.sigma2_tilde.matrix(), &h.rho2_out)?
        }
    };
    let mut r = report(TheoremId::Thm14, lhs, rhs);
    if mixed {
        r.set("epsilon_mixed", epsilon);
    }
    r.set("variant", variant.as_str());
    r.set("marginal_defect", h.marginal_defect.max(h.second_defect));

    // single-branch Petz bounds on the bipartite output
    let petz = BipartitePetz::new(&h.rho2_out)?;
    let mut integrals = [0.0; 2];
    for (slot, traced) in [Subsystem::A, Subsystem::B].into_iter().enumerate() {
        for (t, w) in quad.iter() {
            let rec = petz.apply(traced, t, h.sigma1_tilde.matrix())?;
            integrals[slot] += w * neg_log_fidelity(h.rho1_out.matrix(), &rec);
        }
    }
    r.set("petz_bound_traced_a_slack", lhs - integrals[0]);
    r.set("petz_bound_traced_b_slack", lhs - integrals[1]);
    r.set("petz_bound_average_slack", lhs - 0.5 * (integrals[0] + integrals[1]));
    if rhs <= 1e-6 {
        let (a, b) = (h.sigma1_tilde.matrix(), h.sigma2_tilde.matrix());
        r.set("marginal_commutator_norm", schatten_norm(&(a * b - b * a), Schatten::One));
    }
    Ok(r)
}

/// `D(ρ‖σ) − D(Nρ‖Nσ) ≥ −∫ log F(ρ, R^t(Nρ)) dβ(t)`, with the averaged-map
/// form and the Petz fixed point in `extras`.
pub fn check_petz_monotonicity(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    channel: &QuantumChannel,
    quad: &BetaQuadrature,
) -> Result<SlackReport> {
    let kernel = PetzKernel::new(channel, sigma)?;
    let n_rho = channel.apply(rho.matrix())?;
    let n_sigma = channel.apply(sigma.matrix())?;
    let lhs = weighted_drop(
        1.0,
        rel(rho, sigma.matrix()),
        1.0,
        relative_entropy(&n_rho, &n_sigma).value(),
    );
    let mut rhs = 0.0;
    for (t, w) in quad.iter() {
        rhs += w * neg_log_fidelity(rho.matrix(), &kernel.apply_rotated(t, &n_rho)?);
    }
    let mut r = report(TheoremId::Thm8, lhs, rhs);
    let averaged = kernel.averaged(quad)?;
    r.set("averaged_map_slack", lhs - neg_log_fidelity(rho.matrix(), &averaged.apply(&n_rho)?));
    r.set("petz_fixed_point_defect", trace_distance(&averaged.apply(&n_sigma)?, sigma.matrix()));
    r.set("monotonicity_gap", lhs);
    Ok(r)
}

/// `C_{k→n} = (d[k]/d[n]) P_{n→k}†`; the report's `rhs` is the max entry deviation.
pub fn check_duality(d: usize, n: usize, k: usize) -> Result<SlackReport> {
    check_factor_cap(n)?;
    let p = symmetrized_partial_trace(d, n, k)?;
    let c = uqcm(d, k, n)?;
    let ratio = binomial(d + k - 1, k) as f64 / binomial(d + n - 1, n) as f64;
    let scaled = p.adjoint().superoperator() * C64::new(ratio, 0.0);
    let deviation = max_abs_diff(&scaled, c.superoperator());
    let mut r = report(TheoremId::Duality, 0.0, deviation);
    r.set("dimension_ratio", ratio);
    Ok(r)
}

fn subspace_basis(family: SubspaceFamily, d: usize, n: usize) -> Result<SubspaceBasis> {
    match family {
        SubspaceFamily::Symmetric => symmetric_subspace_basis(d, n),
        SubspaceFamily::Antisymmetric => antisymmetric_subspace_basis(d, n),
    }
}

/// Draws `ω` on `basis` from `source`.
pub(crate) fn draw_omega<R: Rng + ?Sized>(
    source: OmegaSource,
    basis: &SubspaceBasis,
    rng: &mut R,
) -> Result<DensityOperator> {
    let (d, n) = (basis.local_dim(), basis.factors());
    match (source, basis.kind()) {
        (OmegaSource::MaximallyMixed, _) => Ok(maximally_mixed(basis)),
        (OmegaSource::Random, _) => {
            let small = ginibre_on_shape(SystemShape::single(basis.dim())?, basis.dim(), rng)?;
            let v = basis.isometry();
            DensityOperator::normalized(basis.shape(), v * small.matrix() * v.adjoint())
        }
        (OmegaSource::TensorPower, crate::subspace::SubspaceKind::Symmetric) => {
            haar_random_pure(d, rng)?.tensor_power(n)
        }
        (OmegaSource::Slater, crate::subspace::SubspaceKind::Antisymmetric) => {
            let g = gaussian_matrix(d, n, rng);
            let q = g.qr().q();
            let orbitals: Vec<_> = (0..n).map(|j| q.column(j).into_owned()).collect();
            slater_determinant(&orbitals)
        }
        (source, kind) => Err(Error::param(format!("ω source {source} does not fit a {kind:?} subspace"))),
    }
}

/// Fills per-theorem defaults into `params`.
pub fn resolve_params(theorem: TheoremId, params: &Params) -> Result<Params> {
    let mut p = params.clone();
    let fill = |slot: &mut Option<usize>, v: usize| {
        slot.get_or_insert(v);
    };
    match theorem {
        TheoremId::Thm3 | TheoremId::Thm4 | TheoremId::Thm13 => {
            p.family.get_or_insert(FixtureFamily::MeasurePrepare);
            let d_default = if p.family == Some(FixtureFamily::CloneExact) { 3 } else { 2 };
            fill(&mut p.d, d_default);
            fill(&mut p.n, 2);
            let copies = if theorem == TheoremId::Thm13 { 2 } else { 1 };
            fill(&mut p.k_copies, copies);
            if theorem != TheoremId::Thm3 {
                fill(&mut p.m, 1);
            }
            if theorem == TheoremId::Thm4 && p.k_copies != Some(1) {
                return Err(Error::param("thm4 takes a single input copy; use thm13 for k_copies > 1"));
            }
        }
        TheoremId::Thm14 => {
            p.family.get_or_insert(FixtureFamily::Symmetrized);
            p.variant.get_or_insert(DeltaVariant::R);
            p.epsilon.get_or_insert(1e-3);
            let d_default = if p.family == Some(FixtureFamily::CloneExact) { 3 } else { 2 };
            fill(&mut p.d, d_default);
            if p.n.is_some_and(|n| n != 2) || p.k_copies.is_some_and(|k| k != 1) {
                return Err(Error::param("thm14 is bipartite: n = 2, k_copies = 1"));
            }
        }
        TheoremId::Thm5 | TheoremId::Thm6 => {
            fill(&mut p.d, 2);
            fill(&mut p.n, 2);
            fill(&mut p.k, 1);
            p.omega.get_or_insert(OmegaSource::TensorPower);
        }
        TheoremId::Thm7 => {
            p.subspace.get_or_insert(SubspaceFamily::Antisymmetric);
            fill(&mut p.d, 3);
            fill(&mut p.n, 2);
            fill(&mut p.k, 1);
            p.omega.get_or_insert(match p.subspace {
                Some(SubspaceFamily::Symmetric) => OmegaSource::TensorPower,
                _ => OmegaSource::Slater,
            });
        }
        TheoremId::Thm8 => {}
        TheoremId::Duality => {
            fill(&mut p.d, 2);
            fill(&mut p.n, 2);
            fill(&mut p.k, 1);
        }
    }
    if let Some(n) = p.n {
        check_factor_cap_for(theorem, n)?;
    }
    Ok(p)
}

fn check_factor_cap_for(theorem: TheoremId, n: usize) -> Result<()> {
    match theorem {
        TheoremId::Thm5 | TheoremId::Thm6 | TheoremId::Thm7 | TheoremId::Duality => check_factor_cap(n),
        _ => Ok(()),
    }
}

/// Runs one check with per-theorem defaults; every random draw comes from `seed`.
pub fn run_check(theorem: TheoremId, params: &Params, seed: u64, quad: &BetaQuadrature) -> Result<SlackReport> {
    let mut p = resolve_params(theorem, params)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let get = |v: Option<usize>| v.expect("resolved parameter");
    let mut r = match theorem {
        TheoremId::Thm3 | TheoremId::Thm4 | TheoremId::Thm13 => {
            let spec = FixtureSpec::new(
                p.family.expect("resolved"),
                get(p.d),
                get(p.k_copies),
                get(p.n),
                Target::CloneBroadcast,
            );
            let fixture = spec.generate(seed)?;
            if theorem == TheoremId::Thm3 {
                check_clone_broadcast(&fixture)?
            } else {
                let mut r = check_clone_broadcast_recovery(&fixture, get(p.m), quad)?;
                r.theorem = theorem;
                r
            }
        }
        TheoremId::Thm14 => {
            let spec = FixtureSpec::new(p.family.expect("resolved"), get(p.d), 1, 2, Target::Broadcast);
            let fixture = spec.generate(seed)?;
            check_broadcast_difference(&fixture, p.variant.expect("resolved"), p.epsilon.expect("resolved"), quad)?
        }
        TheoremId::Thm5 => {
            let (d, n, k) = (get(p.d), get(p.n), get(p.k));
            let omega = draw_omega(p.omega.expect("resolved"), &symmetric_subspace_basis(d, n)?, &mut rng)?;
            check_uqcm_recovery(d, n, k, &omega)?
        }
        TheoremId::Thm6 => {
            let (d, n, k) = (get(p.d), get(p.n), get(p.k));
            let omega = draw_omega(p.omega.expect("resolved"), &symmetric_subspace_basis(d, k)?, &mut rng)?;
            check_reverse_recovery(d, n, k, &omega)?
        }
        TheoremId::Thm7 => {
            let family = p.subspace.expect("resolved");
            let (d, n, k) = (get(p.d), get(p.n), get(p.k));
            let x = subspace_basis(family, d, n)?;
            let y = subspace_basis(family, d, k)?;
            let omega = draw_omega(p.omega.expect("resolved"), &x, &mut rng)?;
            let mut r = check_subspace_recovery(&x, &y, &omega)?;
            if family == SubspaceFamily::Antisymmetric && d >= n {
                r.set("antisymmetric_log_bound", (binomial(d - k, d - n) as f64).ln());
            }
            r
        }
        TheoremId::Thm8 => {
            let din = *p.d.get_or_insert_with(|| rng.random_range(2..=3));
            let dout = *p.d_out.get_or_insert_with(|| rng.random_range(2..=3));
            let rho = ginibre_random_density(din, din, &mut rng)?;
            let sigma = ginibre_random_density(din, din, &mut rng)?;
            let kraus = 2.max(din.div_ceil(dout));
            let channel = random_channel(SystemShape::single(din)?, SystemShape::single(dout)?, kraus, &mut rng)?;
            check_petz_monotonicity(&rho, &sigma, &channel, quad)?
        }
        TheoremId::Duality => check_duality(get(p.d), get(p.n), get(p.k))?,
    };
    r.params = p;
    r.seed = seed;
    Ok(r)
}
