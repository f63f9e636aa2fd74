//! Property-based checks of the algebraic invariants and inequality suites.

use petzlab::channel::{
    channel_diagnostics, random_channel, subspace_cloner, subspace_partial_trace, symmetrized_partial_trace, uqcm,
    QuantumChannel,
};
use petzlab::functional::{fidelity, neg_log_fidelity, relative_entropy, trace_distance};
use petzlab::matfun::{
    complex_power_on_support, eigh, max_abs, max_abs_diff, schatten_norm, spectral_apply, support_projector,
    CMatrix, Hermitian, Schatten, C64,
};
use petzlab::qstate::{
    epsilon_mix, gaussian_matrix, ginibre_on_shape, ginibre_random_density, haar_random_pure, partial_trace,
    tensor_product, DensityOperator, SystemShape,
};
use petzlab::recovery::{BetaQuadrature, PetzKernel};
use petzlab::subspace::{
    antisymmetric_subspace_basis, binomial, maximally_mixed, symmetric_subspace_basis, SubspaceBasis,
};
use petzlab::verify::{
    check_broadcast_difference, check_clone_broadcast, check_clone_broadcast_recovery, DeltaVariant, FixtureFamily,
    FixtureSpec, Target,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// `ρ` and `σ` with `supp ρ ⊆ supp σ`, of ranks `r ≤ s ≤ d`.
fn nested_pair(d: usize, s: usize, r: usize, seed: u64) -> (DensityOperator, DensityOperator) {
    let mut g = rng(seed);
    let sigma = ginibre_random_density(d, s, &mut g).unwrap();
    let v = eigh(&sigma.hermitian()).support_isometry();
    let small = ginibre_random_density(v.ncols(), r.min(v.ncols()), &mut g).unwrap();
    let rho = DensityOperator::normalized(sigma.shape().clone(), &v * small.matrix() * v.adjoint()).unwrap();
    (rho, sigma)
}

fn hs_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    (a.adjoint() * b).trace()
}

fn subspace(antisym: bool, d: usize, n: usize) -> SubspaceBasis {
    if antisym {
        antisymmetric_subspace_basis(d, n).unwrap()
    } else {
        symmetric_subspace_basis(d, n).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn complex_powers_invert_on_support(seed: u64, d in 2usize..=5, rank_frac in 0.2f64..=1.0, re in -1.5f64..1.5, im in -3.0f64..3.0) {
        let rank = ((d as f64 * rank_frac).ceil() as usize).clamp(1, d);
        let rho = ginibre_random_density(d, rank, &mut rng(seed)).unwrap();
        let z = C64::new(re, im);
        let a = complex_power_on_support(&rho.hermitian(), z).unwrap();
        let b = complex_power_on_support(&rho.hermitian(), -z).unwrap();
        let p = support_projector(&rho.hermitian()).unwrap();
        prop_assert!(max_abs_diff(&(a * b), p.matrix()) < 1e-9);
    }

    #[test]
    fn exp_inverts_log_on_support(seed: u64, d in 2usize..=5, rank in 1usize..=5) {
        let rho = ginibre_random_density(d, rank.min(d), &mut rng(seed)).unwrap();
        let spec = eigh(&rho.hermitian());
        let log = spec.map_support(f64::ln);
        // exponentiate on the support, where eigenvalue 1 has logarithm 0
        let v = spec.support_isometry();
        let compressed = Hermitian::symmetrized(v.adjoint() * log * &v);
        let restored = &v * eigh(&compressed).map_all(f64::exp) * v.adjoint();
        let via_apply = spectral_apply(&rho.hermitian(), |x| x.ln().exp());
        prop_assert!(max_abs_diff(via_apply.matrix(), rho.matrix()) < 1e-9);
        prop_assert!(max_abs_diff(&restored, rho.matrix()) < 1e-9);
    }

    #[test]
    fn schatten_norms_are_ordered(seed: u64, rows in 1usize..=6, cols in 1usize..=6) {
        let m = gaussian_matrix(rows, cols, &mut rng(seed));
        let (one, two, inf) = (
            schatten_norm(&m, Schatten::One),
            schatten_norm(&m, Schatten::Two),
            schatten_norm(&m, Schatten::Inf),
        );
        prop_assert!(one >= two - 1e-12 && two >= inf - 1e-12);
    }

    #[test]
    fn partial_trace_of_product_recovers_factor(seed: u64, da in 2usize..=4, db in 2usize..=4) {
        let mut g = rng(seed);
        let a = ginibre_random_density(da, da, &mut g).unwrap();
        let b = ginibre_random_density(db, 1, &mut g).unwrap();
        let ab = tensor_product(&a, &b).unwrap();
        prop_assert!(max_abs_diff(partial_trace(&ab, &[0]).unwrap().matrix(), a.matrix()) < 1e-12);
        prop_assert!(max_abs_diff(partial_trace(&ab, &[1]).unwrap().matrix(), b.matrix()) < 1e-12);
    }

    #[test]
    fn partial_trace_ignores_keep_order(seed: u64, i in 0usize..3, j in 0usize..3) {
        prop_assume!(i != j);
        let shape = SystemShape::new(vec![2, 3, 2]).unwrap();
        let rho = ginibre_on_shape(shape, 4, &mut rng(seed)).unwrap();
        let a = rho.partial_trace(&[i, j]).unwrap();
        let b = rho.partial_trace(&[j, i]).unwrap();
        prop_assert_eq!(a.shape(), b.shape());
        prop_assert!(max_abs_diff(a.matrix(), b.matrix()) == 0.0);
    }

    #[test]
    fn constructors_yield_density_operators(seed: u64, d in 2usize..=6, rank in 1usize..=6, eps in 0.001f64..0.999) {
        let mut g = rng(seed);
        let states = [
            ginibre_random_density(d, rank.min(d), &mut g).unwrap(),
            haar_random_pure(d, &mut g).unwrap(),
        ];
        let mixed = epsilon_mix(&states[0], &states[1], eps).unwrap();
        for s in states.iter().chain(std::iter::once(&mixed)) {
            let revalidated = DensityOperator::new(s.shape().clone(), s.matrix().clone());
            prop_assert!(revalidated.is_ok());
        }
    }

    #[test]
    fn subspace_projectors_are_orthogonal_projections(d in 2usize..=4, n in 1usize..=3, antisym: bool) {
        prop_assume!(!antisym || n <= d);
        let p = subspace(antisym, d, n).projector();
        prop_assert!(max_abs_diff(&(&p * &p), &p) < 1e-10);
        prop_assert!(max_abs_diff(&p.adjoint(), &p) < 1e-10);
    }

    #[test]
    fn maximally_mixed_marginals(d in 2usize..=4, n in 2usize..=3, k in 1usize..=2, antisym: bool) {
        prop_assume!(k < n && (!antisym || n <= d));
        let pi_n = maximally_mixed(&subspace(antisym, d, n));
        let pi_k = maximally_mixed(&subspace(antisym, d, k));
        let marg = pi_n.partial_trace(&(0..k).collect::<Vec<_>>()).unwrap();
        prop_assert!(max_abs_diff(marg.matrix(), pi_k.matrix()) < 1e-10);
    }

    #[test]
    fn cloner_outputs_stay_in_subspace(seed: u64, d in 2usize..=3, n in 2usize..=3, k in 1usize..=2, antisym: bool) {
        prop_assume!(k < n && (!antisym || n <= d));
        let x = subspace(antisym, d, n);
        let y = subspace(antisym, d, k);
        let omega = {
            let small = ginibre_random_density(y.dim(), y.dim(), &mut rng(seed)).unwrap();
            y.isometry() * small.matrix() * y.isometry().adjoint()
        };
        let out = subspace_cloner(&x, &y).unwrap().apply(&omega).unwrap();
        prop_assert!(x.support_defect(&out) < 1e-10);
        if !antisym {
            let std = uqcm(d, k, n).unwrap().apply(&omega).unwrap();
            prop_assert!(max_abs_diff(&std, &out) < 1e-12);
        }
    }

    #[test]
    fn duality_inner_product(seed: u64, d in 2usize..=3, n in 2usize..=3, k in 1usize..=2) {
        prop_assume!(k < n);
        let mut g = rng(seed);
        let xk = gaussian_matrix(d.pow(k as u32), d.pow(k as u32), &mut g);
        let yn = gaussian_matrix(d.pow(n as u32), d.pow(n as u32), &mut g);
        let p = symmetrized_partial_trace(d, n, k).unwrap();
        let c = uqcm(d, k, n).unwrap();
        // P† = (d[n]/d[k]) C
        let ratio = binomial(d + n - 1, n) as f64 / binomial(d + k - 1, k) as f64;
        let lhs = hs_inner(&xk, &p.apply(&yn).unwrap());
        let rhs = hs_inner(&c.apply(&xk).unwrap(), &yn) * C64::new(ratio, 0.0);
        prop_assert!((lhs - rhs).norm() < 1e-9 * (1.0 + lhs.norm()));
    }

    #[test]
    fn random_channels_compose_to_channels(seed: u64, a in 2usize..=3, b in 2usize..=4, c in 2usize..=3) {
        let mut g = rng(seed);
        let first = random_channel(SystemShape::single(a).unwrap(), SystemShape::single(b).unwrap(), 2, &mut g).unwrap();
        let second = random_channel(SystemShape::single(b).unwrap(), SystemShape::single(c).unwrap(), 2, &mut g).unwrap();
        let both = QuantumChannel::compose(&second, &first).unwrap();
        let diag = channel_diagnostics(&both, None);
        prop_assert!(diag.min_choi_eigenvalue > -1e-10 && diag.tp_defect < 1e-10);
    }

    #[test]
    fn functional_chains_on_nested_supports(seed: u64, d in 2usize..=4, s in 1usize..=4, r in 1usize..=4) {
        let (rho, sigma) = nested_pair(d, s.min(d), r.min(s).min(d), seed);
        let dd = relative_entropy(rho.matrix(), sigma.matrix());
        prop_assert!(dd.is_finite());
        let dv = dd.value();
        let t = trace_distance(rho.matrix(), sigma.matrix());
        let f = fidelity(rho.matrix(), sigma.matrix());
        let nlf = neg_log_fidelity(rho.matrix(), sigma.matrix());
        prop_assert!(dv - 0.5 * t * t >= -1e-9);
        prop_assert!(dv - nlf >= -1e-9);
        prop_assert!(nlf - (1.0 - f) >= -1e-9);
        prop_assert!((1.0 - f) - 0.25 * t * t >= -1e-9);
    }

    #[test]
    fn monotonicity_under_random_channels(seed: u64, din in 2usize..=4, dout in 2usize..=4) {
        let mut g = rng(seed);
        let rho = ginibre_random_density(din, din, &mut g).unwrap();
        let sigma = ginibre_random_density(din, din, &mut g).unwrap();
        let ch = random_channel(SystemShape::single(din).unwrap(), SystemShape::single(dout).unwrap(), 2.max(din.div_ceil(dout)), &mut g).unwrap();
        let before = relative_entropy(rho.matrix(), sigma.matrix()).value();
        let after = relative_entropy(&ch.apply(rho.matrix()).unwrap(), &ch.apply(sigma.matrix()).unwrap()).value();
        prop_assert!(before - after >= -1e-9);
    }

    #[test]
    fn rotated_petz_maps_are_cp_and_exact(seed: u64, din in 2usize..=3, dout in 2usize..=3, t in -8.0f64..8.0) {
        let mut g = rng(seed);
        let sigma = ginibre_random_density(din, din, &mut g).unwrap();
        let ch = random_channel(SystemShape::single(din).unwrap(), SystemShape::single(dout).unwrap(), 2, &mut g).unwrap();
        let kernel = PetzKernel::new(&ch, &sigma).unwrap();
        let rotated = kernel.rotated(t);
        prop_assert!(rotated.min_choi_eigenvalue() > -1e-9);
        let image = ch.apply(sigma.matrix()).unwrap();
        let direct = kernel.apply_rotated(t, &image).unwrap();
        prop_assert!(max_abs_diff(&rotated.apply(&image).unwrap(), &direct) < 1e-10);
        prop_assert!(trace_distance(&direct, sigma.matrix()) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fixtures_satisfy_hypotheses(seed: u64, family_ix in 0usize..5, d in 2usize..=3, n in 2usize..=3, broadcast: bool) {
        let family = FixtureFamily::ALL[family_ix];
        let target = if broadcast { Target::Broadcast } else { Target::CloneBroadcast };
        let fx = FixtureSpec::new(family, d, 1, n, target).generate(seed).unwrap();
        let h = fx.measure(target).unwrap();
        prop_assert!(h.marginal_defect < 1e-10 && h.second_defect < 1e-10);
    }

    #[test]
    fn cloning_checks_hold_on_random_fixtures(seed: u64, family_ix in 0usize..5, n in 2usize..=3, copies in 1usize..=2) {
        let family = FixtureFamily::ALL[family_ix];
        let d = if family == FixtureFamily::CloneExact { 3 } else { 2 };
        let fx = FixtureSpec::new(family, d, copies, n, Target::CloneBroadcast).generate(seed).unwrap();
        let r = check_clone_broadcast(&fx).unwrap();
        prop_assert!(r.pass, "{:?}", r);
        let quad = BetaQuadrature::standard();
        let r = check_clone_broadcast_recovery(&fx, 1, &quad).unwrap();
        prop_assert!(r.pass, "{:?}", r);
    }

    #[test]
    fn broadcast_checks_hold_on_random_fixtures(seed: u64, family_ix in 0usize..5, cl: bool) {
        let family = FixtureFamily::ALL[family_ix];
        let fx = FixtureSpec::new(family, 2, 1, 2, Target::Broadcast).generate(seed).unwrap();
        let variant = if cl { DeltaVariant::Cl } else { DeltaVariant::R };
        let r = check_broadcast_difference(&fx, variant, 1e-3, &BetaQuadrature::standard()).unwrap();
        prop_assert!(r.pass, "{:?}", r);
    }
}

#[test]
fn equal_inputs_give_zero_slack() {
    let quad = BetaQuadrature::standard();
    for family in [FixtureFamily::MeasurePrepare, FixtureFamily::Symmetrized, FixtureFamily::Constant] {
        let mut fx = FixtureSpec::new(family, 2, 1, 2, Target::CloneBroadcast).generate(5).unwrap();
        fx.sigma1 = fx.sigma2.clone();
        let r = check_clone_broadcast(&fx).unwrap();
        assert!(r.lhs().abs() < 1e-12 && r.rhs().abs() < 1e-12, "{family}");
        let r = check_clone_broadcast_recovery(&fx, 1, &quad).unwrap();
        assert!(r.lhs().abs() < 1e-9 && r.rhs().abs() < 1e-9, "{family}");
    }
    let mut fx = FixtureSpec::new(FixtureFamily::Symmetrized, 2, 1, 2, Target::Broadcast).generate(6).unwrap();
    fx.sigma1 = fx.sigma2.clone();
    let r = check_broadcast_difference(&fx, DeltaVariant::R, 1e-3, &quad).unwrap();
    assert!(r.lhs().abs() < 1e-9 && r.rhs().abs() < 1e-9);
}

#[test]
fn full_recovery_dominates_single_marginal_bound() {
    // m = n gives kD − nD̃ ≥ −log F ≥ 0, hence kD − D̃ ≥ (n−1)D̃
    let quad = BetaQuadrature::standard();
    let fx = FixtureSpec::new(FixtureFamily::MeasurePrepare, 2, 1, 3, Target::CloneBroadcast).generate(21).unwrap();
    let full = check_clone_broadcast_recovery(&fx, 3, &quad).unwrap();
    let plain = check_clone_broadcast(&fx).unwrap();
    assert!(full.pass && plain.pass);
    assert!((full.lhs() - plain.slack()).abs() < 1e-12);
    assert!(full.lhs() >= full.rhs() - 1e-7);
}

#[test]
fn constant_fixture_recovery_is_bounded_by_input_entropy() {
    let quad = BetaQuadrature::standard();
    let fx = FixtureSpec::new(FixtureFamily::Constant, 2, 1, 2, Target::CloneBroadcast).generate(3).unwrap();
    let r = check_clone_broadcast_recovery(&fx, 1, &quad).unwrap();
    let d12 = relative_entropy(fx.sigma1.matrix(), fx.sigma2.matrix()).value();
    assert!(r.rhs() <= d12 + 1e-7);
}

#[test]
fn one_dimensional_subspace_is_recovered_perfectly() {
    // X spanned by a single symmetric product vector, Y its one-qudit marginal support
    let d = 2;
    let x_vec = {
        let mut v = CMatrix::zeros(d * d, 1);
        v[(0, 0)] = C64::new(1.0, 0.0);
        v
    };
    let y_vec = {
        let mut v = CMatrix::zeros(d, 1);
        v[(0, 0)] = C64::new(1.0, 0.0);
        v
    };
    let x = SubspaceBasis::custom(d, 2, x_vec).unwrap();
    let y = SubspaceBasis::custom(d, 1, y_vec).unwrap();
    let omega = maximally_mixed(&x);
    let recovered = subspace_cloner(&x, &y)
        .unwrap()
        .apply(&subspace_partial_trace(&x, &y).unwrap().apply(omega.matrix()).unwrap())
        .unwrap();
    assert!(max_abs_diff(&recovered, omega.matrix()) < 1e-10);
}

#[test]
fn singlet_is_annihilated_by_symmetric_cloner() {
    let singlet = maximally_mixed(&antisymmetric_subspace_basis(2, 2).unwrap());
    let out = uqcm(2, 2, 3).unwrap().apply(singlet.matrix()).unwrap();
    assert!(max_abs(&out) < 1e-12);
}
