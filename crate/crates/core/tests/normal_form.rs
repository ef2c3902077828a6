mod common;

use billiard_spectra::normal_form::{
    averaging_step, fourier_norm, homological_residual, homological_tail, k_cutoff, linear_double_residual,
    neishtadt_step, omega, solve_homological, FourierTaylorSeries, MapSeries,
};
use billiard_spectra::{Complex, Real, RealContext};
use common::{ctx, random_series};
use proptest::prelude::*;

fn is_zero(g: &FourierTaylorSeries) -> bool {
    (0..=g.jmax()).all(|j| (-(g.kmax() as i64)..=g.kmax() as i64).all(|k| g.coeff(k, j).is_zero()))
}

#[test]
fn norm_examples() {
    let ctx = ctx(128);
    let (a, b) = (ctx.real(0.3), ctx.real(0.05));
    let cos = FourierTaylorSeries::cos_mode(1, &ctx.one(), 8, 4);
    let want = (ctx.two_pi() * &a).exp();
    // Two harmonics of modulus 1/2 each.
    assert!((fourier_norm(&cos, &a, &b) - want).abs() < 1e-35);
    let y2 = FourierTaylorSeries::monomial(2, 8, 4, 128);
    assert!((fourier_norm(&y2, &a, &b) - b.square()).abs() < 1e-40);
}

#[test]
fn cutoff_examples() {
    let ctx = ctx(128);
    let cos = FourierTaylorSeries::cos_mode(1, &ctx.one(), 8, 4);
    let (low, high) = k_cutoff(&cos, 1);
    assert!(is_zero(&low));
    assert_eq!(high, cos);
    let (low, high) = k_cutoff(&cos, 9);
    assert_eq!(low, cos);
    assert!(is_zero(&high));
    let g = random_series(3, 0, 8, 4, &ctx);
    let (low, high) = k_cutoff(&g, 4);
    assert_eq!(low.add(&high), g);
}

#[test]
fn homological_examples() {
    let ctx = ctx(256);
    let (kmax, jmax) = (8, 24);
    // Leading order: ψ(x, 0) = sin(2πx)/(2π).
    let cos = FourierTaylorSeries::cos_mode(1, &ctx.one(), kmax, jmax);
    let psi = solve_homological(&cos, 4, &ctx).unwrap();
    for x in [0.1, 0.37, 0.8] {
        let x = ctx.real(x);
        let want = (ctx.two_pi() * &x).sin() / ctx.two_pi();
        assert!((psi.eval_real(&x, &ctx.zero()) - want).abs() < 1e-70);
    }
    // Harmonics at or above the cut-off are ignored.
    let high = FourierTaylorSeries::cos_mode(5, &ctx.one(), kmax, jmax);
    assert!(is_zero(&solve_homological(&high, 4, &ctx).unwrap()));
    // A non-zero average has no solution.
    let mean = FourierTaylorSeries::monomial(1, kmax, jmax, 256);
    assert!(solve_homological(&mean, 4, &ctx).is_err());
}

#[test]
fn averaging_of_an_integrable_map_is_trivial() {
    let ctx = ctx(128);
    let f = MapSeries::integrable(2, 8, 10, 128);
    let step = averaging_step(&f, &ctx).unwrap();
    assert!(step.change.is_identity());
    assert_eq!(step.map.order(), 3);
    assert!(is_zero(step.map.g1()) && is_zero(step.map.g2()));
    assert!(step.h2_star.is_zero());
}

#[test]
fn averaging_removes_the_order_two_angular_term() {
    let ctx = ctx(256);
    let (kmax, jmax) = (16, 12);
    let g1 = FourierTaylorSeries::cos_mode(1, &ctx.one(), kmax, jmax);
    let g2 = FourierTaylorSeries::zeros(kmax, jmax, true, 256);
    let f = MapSeries::new(2, g1, g2).unwrap();
    let step = averaging_step(&f, &ctx).unwrap();
    assert_eq!(step.map.order(), 3);
    assert!(step.k1_residual <= ctx.eps() * 1e3);
    assert!(!step.change.is_identity());
}

#[test]
fn neishtadt_step_on_an_averaged_map_is_a_shift() {
    let ctx = ctx(128);
    let (kmax, jmax) = (8, 12);
    // G = G*: no angular part, radial part independent of x.
    let g1 = FourierTaylorSeries::zeros(kmax, jmax, true, 128);
    let mut g2 = FourierTaylorSeries::zeros(kmax, jmax, true, 128);
    g2.set(0, 1, Complex::from_real(ctx.real(0.2)));
    let f = MapSeries::new(6, g1, g2).unwrap();
    let (a, b) = (ctx.real(0.5), ctx.real(0.05));
    let step = neishtadt_step(&f, &a, &b, 0.5, &ctx).unwrap();
    assert!(is_zero(&step.change.psi1));
    for k in 1..=kmax as i64 {
        for j in 0..=step.change.psi2.jmax() {
            assert!(step.change.psi2.coeff(k, j).is_zero());
        }
    }
    assert!(step.bullet_before.is_zero());
    assert!(step.bullet_after.is_zero());
    assert!(step.star_after > 0.0);
}

#[test]
fn neishtadt_step_shrinks_the_oscillating_part() {
    let ctx = ctx(256);
    let (kmax, jmax) = (16, 16);
    let g1 = FourierTaylorSeries::cos_mode(1, &ctx.real(1e-3), kmax, jmax);
    let g2 = FourierTaylorSeries::zeros(kmax, jmax, true, 256);
    let f = MapSeries::new(6, g1, g2).unwrap();
    let (a, b) = (ctx.real(0.5), ctx.real(0.05));
    let step = neishtadt_step(&f, &a, &b, 0.5, &ctx).unwrap();
    assert!(step.bullet_after < step.bullet_before);

    // Residual of Ψ∘A − AΨ = (G•)^{<K} against the truncation tails of the
    // two homological solves it is built from.
    let m = f.order() as i32;
    let (g1_low, _) = k_cutoff(f.g1(), step.cutoff);
    let (g2_low, _) = k_cutoff(f.g2(), step.cutoff);
    let g2_bullet = g2_low.sub(&f.g2().mean());
    let tail = homological_tail(&step.change.psi2.add(&g1_low), step.cutoff, &b) * b.powi(m - 1)
        + homological_tail(&g2_bullet, step.cutoff, &b) * b.powi(m);
    let residual = linear_double_residual(&f, &step.change, step.cutoff, &b, 32, 9);
    let bound = tail.max(ctx.eps() * 1e3);
    assert!(residual <= bound, "{residual:?} vs {bound:?}");
}

#[test]
fn series_json_round_trip() {
    let ctx = ctx(128);
    let g = random_series(11, 0, 4, 3, &ctx);
    let json = serde_json::to_string(&g.to_json()).unwrap();
    let back = FourierTaylorSeries::from_json(&serde_json::from_str(&json).unwrap()).unwrap();
    assert_eq!(back, g);
}

#[test]
fn omega_is_at_least_the_leading_divisor() {
    // |z/(e^z − 1)| = 1 at z = 0, so ω(s) ≥ 1/2π.
    for s in [0.1, 0.5, 0.9] {
        assert!(omega(s) >= 1.0 / (2.0 * std::f64::consts::PI));
    }
    assert!(omega(0.9) > omega(0.1));
}

fn real_in(ctx: &RealContext, x: f64) -> Real {
    ctx.real(x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn norm_bounds(seed in any::<u64>(), cutoff in 1usize..8, a in 0.05f64..0.5, frac in 0.1f64..0.9) {
        let ctx = ctx(128);
        let g = random_series(seed, 0, 8, 6, &ctx);
        let (a, b) = (real_in(&ctx, a), real_in(&ctx, 0.05));
        let alpha = &a * frac;
        let full = fourier_norm(&g, &a, &b);
        let (low, high) = k_cutoff(&g, cutoff);
        let slack = 1.0 + 1e-30;
        prop_assert!(fourier_norm(&low, &a, &b) <= &full * slack);
        let damped = (ctx.two_pi() * &alpha * (-(cutoff as f64))).exp() * &full;
        prop_assert!(fourier_norm(&high, &(&a - &alpha), &b) <= damped * slack);
        prop_assert!(g.sup_on_grid(&a, &b, 16, 8) <= &full * slack);
    }

    #[test]
    fn triangle_inequality(s1 in any::<u64>(), s2 in any::<u64>(), a in 0.0f64..0.5) {
        let ctx = ctx(128);
        let (f, g) = (random_series(s1, 0, 6, 5, &ctx), random_series(s2, 0, 6, 5, &ctx));
        let (a, b) = (real_in(&ctx, a), real_in(&ctx, 0.1));
        let lhs = fourier_norm(&f.add(&g), &a, &b);
        let rhs = fourier_norm(&f, &a, &b) + fourier_norm(&g, &a, &b);
        prop_assert!(lhs <= rhs * (1.0 + 1e-30));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn homological_residual_within_tail(seed in any::<u64>(), cutoff in 2usize..5) {
        let ctx = ctx(256);
        let b = ctx.real(0.05);
        let g = random_series(seed, 1, 6, 24, &ctx);
        let psi = solve_homological(&g, cutoff, &ctx).unwrap();
        let residual = homological_residual(&psi, &g, cutoff, &b, 64, 16);
        let tail = homological_tail(&g, cutoff, &b);
        prop_assert!(residual <= tail * 10.0);
    }
}
