mod common;

use billiard_spectra::orbits::{
    constrained_minimum, delta_spectrum, find_orbit_pair, find_orbit_pair_with, graph_deviation, graph_pair, Flag,
    OrbitKind, SpectrumOptions, TwistProblem,
};
use billiard_spectra::FourierCurve;
use common::{arb_curve, ctx, perturbed, rel};
use proptest::prelude::*;

#[test]
fn circle_reduced_action_is_constant() {
    let ctx = ctx(128);
    let prob = TwistProblem::inner(FourierCurve::circle(1.0).unwrap());
    let q = 6;
    let want = (ctx.pi() / 5.0).sin() * 10.0;
    for s0 in [0.0, 0.4, 2.5] {
        let m = constrained_minimum(&prob, 1, 5, &ctx.real(s0), &ctx).unwrap();
        assert!((&m.action - &want).abs() < 1e-30);
        // Rigid rotation: equal spacing 2π/5.
        for j in 1..5 {
            assert!((&m.points[j] - &m.points[j - 1] - ctx.two_pi() / 5.0).abs() < 1e-30);
        }
    }
    let pair = find_orbit_pair(&prob, 1, q, &ctx).unwrap();
    assert!(pair.flags.contains(&Flag::PrecisionFloor));
    assert!(pair.delta.is_zero());
    assert_eq!(pair.minimizing.kind, OrbitKind::Minimizing);
    assert_eq!(pair.minimax.kind, OrbitKind::Minimax);
}

#[test]
fn constant_width_two_periodic_action() {
    let ctx = ctx(128);
    let c0 = 1.3;
    let prob = TwistProblem::inner(FourierCurve::make_constant_width(c0, &[(3, 0.2, 0.0), (5, 0.05, 0.0)]).unwrap());
    for s0 in [0.0, 1.0, 3.0] {
        let m = constrained_minimum(&prob, 1, 2, &ctx.real(s0), &ctx).unwrap();
        assert!((&m.action - 4.0 * c0).abs() < ctx.solver_tol() * 10.0);
        assert!(m.grad_norm <= ctx.solver_tol().clone() * 2.0);
    }
}

#[test]
fn ellipse_gaps_vanish() {
    let bits = 256;
    let ctx = ctx(bits);
    let prob = TwistProblem::inner(FourierCurve::truncated_ellipse(1.0, 0.7, bits).unwrap());
    let bound = 10f64.powf(-0.2 * bits as f64);
    for q in [3, 4] {
        let pair = find_orbit_pair(&prob, 1, q, &ctx).unwrap();
        assert!(pair.raw_delta.abs() < bound, "q = {q}: {:?}", pair.raw_delta);
    }
}

#[test]
fn perturbed_gap_is_reproducible() {
    let ctx = ctx(192);
    let prob = TwistProblem::inner(perturbed());
    let coarse = find_orbit_pair_with(&prob, 1, 3, 32, &ctx).unwrap();
    let fine = find_orbit_pair_with(&prob, 1, 3, 64, &ctx).unwrap();
    assert!(coarse.delta > 0.0);
    assert!(rel(&coarse.delta, &fine.delta) < 1e-6);
}

#[test]
fn spectrum_contract() {
    let ctx = ctx(128);
    let prob = TwistProblem::inner(perturbed());
    assert!(delta_spectrum(&prob, 1, &[], &ctx, &SpectrumOptions::default()).is_empty());
    let out = delta_spectrum(&prob, 2, &[4, 5], &ctx, &SpectrumOptions::default());
    assert!(out[0].is_err());
    let rec = out[1].as_ref().unwrap();
    assert!(rec.delta >= 0.0);
    assert_eq!((rec.p, rec.q), (2, 5));
    assert!(((&rec.action_minimax - &rec.action_min).abs() - &rec.delta).abs() < 1e-30);
}

#[test]
fn small_gaps_escalate_precision() {
    let ctx = ctx(128);
    let prob = TwistProblem::inner(perturbed());
    let options = SpectrumOptions { bits_cap: 512, parallel: false };
    let rec = &delta_spectrum(&prob, 1, &[20], &ctx, &options)[0].as_ref().unwrap().clone();
    // Δ^(1,20) is near 1e-21, below 2^-32 at 128 bits.
    assert!(rec.bits > 128);
    assert!(rec.diagnostics.escalations >= 1);
    let threshold = billiard_spectra::real::pow2(rec.bits, -((rec.bits / 4) as i64));
    assert!(rec.delta >= threshold || rec.has_flag(Flag::BitsCap));
}

#[test]
fn circle_graph_pair() {
    let ctx = ctx(128);
    for prob in [
        TwistProblem::inner(FourierCurve::circle(1.0).unwrap()),
        TwistProblem::outer(FourierCurve::circle(1.0).unwrap()),
    ] {
        let g = graph_pair(&prob, 1, 5, &ctx).unwrap();
        // Rotation 1/5: incidence π/5 inside, tangent distance tan(π/5) outside.
        let want = match prob.table {
            billiard_spectra::billiard::Table::Inner => ctx.pi() / 5.0,
            billiard_spectra::billiard::Table::Outer => (ctx.pi() / 5.0).tan(),
        };
        for (z, zh) in g.zeta.iter().zip(&g.zeta_hat) {
            assert!((z - &want).abs() < 1e-25);
            assert!((zh - &want).abs() < 1e-25);
        }
        assert!(g.area < 1e-25);
    }
}

#[test]
fn mmp_bound_and_orbits_on_the_graph() {
    let ctx = ctx(128);
    for prob in [TwistProblem::inner(perturbed()), TwistProblem::outer(perturbed())] {
        let (p, q) = (1, 5);
        let pair = find_orbit_pair(&prob, p, q, &ctx).unwrap();
        let g = graph_pair(&prob, p, q, &ctx).unwrap();
        assert!(pair.delta <= g.area, "{:?}: {:?} > {:?}", prob.table, pair.delta, g.area);
        for orbit in [&pair.minimizing, &pair.minimax] {
            assert!(graph_deviation(&prob, orbit, &ctx).unwrap() <= *ctx.solver_tol());
        }
    }
}

#[test]
fn translation_invariance() {
    let ctx = ctx(160);
    let c = FourierCurve::from_f64(1.0, &[(3, 0.08, 0.03), (4, 0.02, 0.0)]).unwrap();
    let shifted = c.rotated(&ctx.real(0.37)).unwrap();
    for table in [billiard_spectra::billiard::Table::Inner, billiard_spectra::billiard::Table::Outer] {
        let a = find_orbit_pair(&TwistProblem::new(c.clone(), table), 1, 5, &ctx).unwrap();
        let b = find_orbit_pair(&TwistProblem::new(shifted.clone(), table), 1, 5, &ctx).unwrap();
        let tol = ctx.solver_tol() * 10.0;
        assert!((&a.minimizing.action - &b.minimizing.action).abs() <= tol);
        assert!((&a.minimax.action - &b.minimax.action).abs() <= tol);
    }
}

#[test]
fn branch_switching_never_yields_a_non_critical_orbit() {
    // The pinned maximum changes branch along the scan for this curve.
    let ctx = ctx(128);
    let prob = TwistProblem::inner(FourierCurve::from_f64(0.5, &[(6, -0.162, 0.0)]).unwrap());
    if let Ok(pair) = find_orbit_pair(&prob, 1, 3, &ctx) {
        for orbit in [&pair.minimizing, &pair.minimax] {
            assert!(orbit.grad_norm <= ctx.solver_tol() * 3.0);
        }
    }
}

#[test]
fn orbit_pair_across_a_kink_of_the_reduced_action() {
    // k = q = 6: the pinned maximum jumps between branches, and the minimax
    // orbit is a saddle of the pinned problem. Both orbits lie on the
    // symmetry axes of the hexagonal curve.
    let ctx = ctx(128);
    let prob = TwistProblem::inner(FourierCurve::from_f64(0.5, &[(6, -0.10874320741024687, 0.0)]).unwrap());
    let pair = find_orbit_pair(&prob, 1, 6, &ctx).unwrap();
    let step = ctx.pi() / 3.0;
    for (orbit, offset) in [(&pair.minimizing, ctx.zero()), (&pair.minimax, ctx.pi() / 6.0)] {
        assert!(orbit.grad_norm <= ctx.solver_tol() * 6.0);
        let shift = &orbit.phis[0] - &offset;
        let turns = (&shift / &step).round();
        assert!((&shift - &step * &turns).abs() <= ctx.solver_tol().to_f64(), "{:?}", orbit.phis[0]);
    }
    assert!(pair.minimizing.action > pair.minimax.action);
    assert!(pair.delta > 0.03);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn returned_orbits_are_critical_and_ordered(c in arb_curve(), q in 3u64..8, outer in any::<bool>()) {
        let ctx = ctx(128);
        // Mild perturbations keep the pinned solution on one branch.
        let amplitude: f64 = c.harmonics().iter().map(|h| h.a.abs().to_f64() + h.b.abs().to_f64()).sum();
        prop_assume!(amplitude <= 0.25 * c.c0().to_f64());
        let prob = if outer { TwistProblem::outer(c) } else { TwistProblem::inner(c) };
        let p = if outer && q == 3 { 1 } else if q % 2 == 1 && q > 4 && !outer { 2 } else { 1 };
        let pair = find_orbit_pair(&prob, p, q, &ctx).unwrap();
        let period = prob.period(&ctx);
        for orbit in [&pair.minimizing, &pair.minimax] {
            prop_assert!(orbit.grad_norm <= ctx.solver_tol() * q as f64);
            prop_assert!(orbit.is_birkhoff_ordered(&period));
            prop_assert_eq!(orbit.points.len(), q as usize);
        }
        prop_assert!(pair.delta >= 0.0);
    }
}
