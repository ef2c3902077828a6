mod common;

use billiard_spectra::billiard::Table;
use billiard_spectra::orbits::{Diagnostics, SpectrumRecord};
use billiard_spectra::spectra::{
    a1_empirical, billiard_map_fit, circumscribed_area, fit_exponential, fit_exponential_resonant, l1_empirical,
    lazutkin_coords, lazutkin_inverse, marvizi_melrose_l1, richardson_in_q, tabachnikov_a1, tabachnikov_coords,
    tabachnikov_inverse, LazutkinChart, SERIES_SAMPLE_RADIUS,
};
use billiard_spectra::{FourierCurve, Real};
use common::{ctx, perturbed, rel, unit_perimeter_circle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn record(p: u64, q: u64, delta: Real) -> SpectrumRecord {
    let bits = delta.prec();
    SpectrumRecord {
        p,
        q,
        table: Table::Inner,
        action_min: Real::zero(bits),
        action_minimax: delta.clone(),
        delta,
        bits,
        flags: vec![],
        diagnostics: Diagnostics::default(),
    }
}

#[test]
fn exponential_fit_recovers_its_own_model() {
    let ctx = ctx(128);
    let (alpha, log_k) = (ctx.real(0.37), ctx.real(-1.2));
    let law = |u: Real| (&log_k - &(ctx.two_pi() * &alpha * u)).exp();
    let records: Vec<_> = (5..15).map(|q| record(2, q, law(ctx.int(q as i64) / 2.0))).collect();
    let fit = fit_exponential(&records, 2).unwrap();
    assert!((&fit.alpha - &alpha).abs() < 1e-10);
    assert!((&fit.log_k - &log_k).abs() < 1e-10);
    assert!((&fit.r_squared - 1.0).abs() < 1e-10);

    // Rotation numbers p/q → 1/2 with |2p − q| = 1.
    let family = [(5, 11), (7, 15), (9, 19), (11, 23), (13, 27)];
    let records: Vec<_> = family.iter().map(|&(p, q)| record(p, q, law(ctx.int(q as i64)))).collect();
    let fit = fit_exponential_resonant(&records, 2, 1).unwrap();
    assert!((&fit.alpha - &alpha).abs() < 1e-10);
}

#[test]
fn exponential_fit_needs_data() {
    let ctx = ctx(64);
    let two = vec![record(1, 5, ctx.real(1e-3)), record(1, 6, ctx.real(1e-4))];
    assert!(fit_exponential(&two, 1).is_err());
    let floor: Vec<_> = (5..12).map(|q| record(1, q, ctx.zero())).collect();
    assert!(fit_exponential(&floor, 1).is_err());
}

#[test]
fn richardson_removes_even_powers() {
    let ctx = ctx(128);
    let q: [u64; 3] = [8, 16, 32];
    let f: Vec<Real> = q
        .iter()
        .map(|&q| {
            let h = ctx.int(q as i64).square().recip();
            ctx.real(2.5) + &h * 3.0 - h.square() * 7.0
        })
        .collect();
    assert!((richardson_in_q(&q, &f).unwrap() - 2.5).abs() < 1e-30);
}

#[test]
fn circle_l1() {
    let ctx = ctx(128);
    let unit = unit_perimeter_circle(&ctx);
    let want = -ctx.pi().square() / 6.0;
    assert!(rel(&marvizi_melrose_l1(&unit, 1, &ctx).unwrap(), &want) < 1e-8);

    let r = 1.3;
    let c = FourierCurve::circle(r).unwrap();
    let want = -(ctx.pi().powi(3) * r / 3.0);
    assert!(rel(&marvizi_melrose_l1(&c, 1, &ctx).unwrap(), &want) < 1e-8);
    assert!(rel(&l1_empirical(&c, 1, &[16, 32, 64], &ctx).unwrap(), &want) < 1e-8);
}

#[test]
fn circle_a1() {
    let ctx = ctx(128);
    let r = 0.8;
    let c = FourierCurve::circle(r).unwrap();
    let r2 = ctx.real(r).square();
    let want = ctx.pi().powi(3) * &r2 / 3.0;
    let analytic = tabachnikov_a1(&c, &ctx).unwrap();
    assert!(rel(&analytic.cubed, &want) < 1e-8);
    // The uncubed reading is π R^{2/3}/12.
    assert!(rel(&analytic.uncubed, &(ctx.pi() * ctx.real(r).powf(&ctx.ratio(2, 3)) / 12.0)) < 1e-20);
    // tan has a large q⁻⁶ coefficient, so a fourth q is needed for 1e-8.
    assert!(rel(&a1_empirical(&c, &[16, 32, 64, 128], &ctx).unwrap(), &want) < 1e-8);

    // Circumscribed regular q-gon: q R² tan(π/q).
    for q in [3, 7, 12] {
        let exact = (ctx.pi() / (q as f64)).tan() * &r2 * (q as f64);
        assert!(rel(&circumscribed_area(&c, q, &ctx).unwrap(), &exact) < 1e-25);
    }
}

#[test]
fn lazutkin_chart_on_the_circle() {
    let ctx = ctx(128);
    let unit = unit_perimeter_circle(&ctx);
    // k = (2π)^{-2/3}, so x = s and y = 4kρ^{1/3} sin(r/2) = (2/π) sin(r/2).
    for (s, r) in [(0.1, 0.3), (0.55, 1.2), (0.9, 2.8)] {
        let (s, r) = (ctx.real(s), ctx.real(r));
        let (x, y) = lazutkin_coords(&unit, &s, &r, &ctx).unwrap();
        assert!((&x - &s).abs() < 1e-30);
        assert!((&y - (&r / 2.0).sin() * 2.0 / ctx.pi()).abs() < 1e-30);
    }
}

#[test]
fn lazutkin_chart_round_trip_boundary_and_orientation() {
    let ctx = ctx(128);
    let c = perturbed();
    let total = c.total_length(&ctx);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let s = &total * rng.gen_range(0.0..1.0);
        let r = ctx.real(rng.gen_range(0.05..3.0));
        let (x, y) = lazutkin_coords(&c, &s, &r, &ctx).unwrap();
        let (s2, r2) = lazutkin_inverse(&c, &x, &y, &ctx).unwrap();
        assert!((&s2 - &s).abs() <= ctx.solver_tol() * 10.0);
        assert!((&r2 - &r).abs() <= ctx.solver_tol() * 10.0);

        let (_, y0) = lazutkin_coords(&c, &s, &ctx.zero(), &ctx).unwrap();
        assert!(y0.is_zero());

        // Central differences of (x, y) in (s, r).
        let h = ctx.real(1e-12);
        let at = |ds: &Real, dr: &Real| lazutkin_coords(&c, &(&s + ds), &(&r + dr), &ctx).unwrap();
        let (xs_p, ys_p) = at(&h, &ctx.zero());
        let (xs_m, ys_m) = at(&-h.clone(), &ctx.zero());
        let (xr_p, yr_p) = at(&ctx.zero(), &h);
        let (xr_m, yr_m) = at(&ctx.zero(), &-h.clone());
        let jac = (xs_p - xs_m) * (yr_p - yr_m) - (xr_p - xr_m) * (ys_p - ys_m);
        assert!(jac > 0.0);
    }
}

#[test]
fn tabachnikov_chart() {
    let ctx = ctx(128);
    let r = 1.6;
    let c = FourierCurve::circle(r).unwrap();
    // k⁻¹ = 2πR^{2/3}: x = α/2π, y = 2kκ^{1/3}t = t/(πR).
    for (alpha, t) in [(0.4, 0.2), (3.0, 1.5)] {
        let (alpha, t) = (ctx.real(alpha), ctx.real(t));
        let (x, y) = tabachnikov_coords(&c, &alpha, &t, &ctx).unwrap();
        assert!((&x - &alpha / ctx.two_pi()).abs() < 1e-30);
        assert!((&y - &t / (ctx.pi() * r)).abs() < 1e-30);
    }
    let p = perturbed();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let alpha = ctx.real(rng.gen_range(0.0..6.28));
        let t = ctx.real(rng.gen_range(0.0..2.0));
        let (x, y) = tabachnikov_coords(&p, &alpha, &t, &ctx).unwrap();
        let (a2, t2) = tabachnikov_inverse(&p, &x, &y, &ctx).unwrap();
        assert!((a2 - &alpha).abs() <= ctx.solver_tol() * 10.0);
        assert!((t2 - &t).abs() <= ctx.solver_tol() * 10.0);
        let (_, y0) = tabachnikov_coords(&p, &alpha, &ctx.zero(), &ctx).unwrap();
        assert!(y0.is_zero());
    }
    assert!(tabachnikov_coords(&p, &ctx.zero(), &ctx.real(-0.1), &ctx).is_err());
}

#[test]
fn scale_covariance() {
    // ∫κ^{2/3} ds and ∫κ^{1/3} ds scale as λ^{1/3} and λ^{2/3}, so
    // l₁ ∝ λ and a₁ ∝ λ².
    let ctx = ctx(160);
    let lambda = ctx.real(1.7);
    let c = perturbed();
    let big = c.scaled(&lambda).unwrap();
    let l1 = marvizi_melrose_l1(&c, 1, &ctx).unwrap();
    assert!(rel(&marvizi_melrose_l1(&big, 1, &ctx).unwrap(), &(&l1 * &lambda)) < 1e-10);
    let a1 = tabachnikov_a1(&c, &ctx).unwrap().cubed;
    assert!(rel(&tabachnikov_a1(&big, &ctx).unwrap().cubed, &(&a1 * lambda.square())) < 1e-10);

    let qs = [8, 16, 32];
    let l1 = l1_empirical(&c, 1, &qs, &ctx).unwrap();
    assert!(rel(&l1_empirical(&big, 1, &qs, &ctx).unwrap(), &(&l1 * &lambda)) < 1e-10);
    let a1 = a1_empirical(&c, &qs, &ctx).unwrap();
    assert!(rel(&a1_empirical(&big, &qs, &ctx).unwrap(), &(&a1 * lambda.square())) < 1e-10);
}

#[test]
fn circle_map_series_closed_form() {
    // Unit circle: y = (2/π) sin(r/2) and x₁ = x + r/π, so
    // x₁ = x + (2/π) asin(πy/2) = x + y + (π²/24)y³ + (3π⁴/640)y⁵ + (5π⁶/7168)y⁷ + …
    // and y₁ = y.
    let ctx = ctx(256);
    let fit = billiard_map_fit(&FourierCurve::circle(1.0).unwrap(), 6, 4, &ctx).unwrap();
    // A misfit E on |y| ≤ b moves the y^d coefficient by about E/b^d.
    let misfit = (&fit.fit_tail + &fit.fit_residual) * 100.0;
    let b = ctx.real(SERIES_SAMPLE_RADIUS);
    let tol = |degree: usize| &misfit / b.powi(degree as i32);
    assert!((&fit.linear_coefficient - 1.0).abs() <= tol(1));
    assert!(fit.structure_defect <= tol(3));
    let pi = ctx.pi();
    let odd = [pi.square() / 24.0, pi.powi(4) * 3.0 / 640.0, pi.powi(6) * 5.0 / 7168.0];
    let (g1, g2) = (fit.map.g1(), fit.map.g2());
    for j in 0..=g1.jmax() {
        let want = if j % 2 == 1 { odd[j / 2].clone() } else { ctx.zero() };
        let err = (&g1.coeff(0, j).re - want).abs();
        assert!(err <= tol(j + 2), "y^{} coefficient off by {err:?}", j + 2);
        for k in 1..=g1.kmax() as i64 {
            assert!(g1.coeff(k, j).abs() <= tol(j + 2));
        }
    }
    for j in 0..=g2.jmax() {
        for k in 0..=g2.kmax() as i64 {
            assert!(g2.coeff(k, j).abs() <= tol(j + 3));
        }
    }
}

#[test]
fn perturbed_map_series_structure() {
    let ctx = ctx(128);
    let fit = billiard_map_fit(&perturbed(), 6, 8, &ctx).unwrap();
    assert!((&fit.linear_coefficient - 1.0).abs() <= ctx.solver_tol() * 10.0);
    // No y² term in x₁; the y³ term carries the curve's third harmonic.
    assert!(fit.structure_defect <= ctx.solver_tol() * 10.0);
    assert!(fit.fit_residual <= fit.fit_tail.clone().max(ctx.solver_tol().clone()) * 10.0);
    let g1 = fit.map.g1();
    assert!(g1.coeff(3, 1).abs() > 1e-3);
    let chart = LazutkinChart::new(&perturbed(), &ctx).unwrap();
    assert!(chart.k() > &0.0);
}
