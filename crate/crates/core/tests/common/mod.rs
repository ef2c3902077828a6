//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use billiard_spectra::normal_form::FourierTaylorSeries;
use billiard_spectra::{Complex, FourierCurve, Real, RealContext};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn ctx(bits: u32) -> RealContext {
    RealContext::new(bits).unwrap()
}

/// `ρ = 1 + 0.1 cos 3φ`.
pub fn perturbed() -> FourierCurve {
    FourierCurve::from_f64(1.0, &[(3, 0.1, 0.0)]).unwrap()
}

/// Circle of perimeter one.
pub fn unit_perimeter_circle(ctx: &RealContext) -> FourierCurve {
    FourierCurve::new(ctx.one() / ctx.two_pi(), vec![]).unwrap()
}

pub fn rel(a: &Real, b: &Real) -> f64 {
    ((a - b) / b).abs().to_f64()
}

/// Distance of `a` and `b` on a circle of the given period.
pub fn periodic_distance(a: &Real, b: &Real, period: &Real) -> Real {
    let d = (a - b).rem_euclid(period);
    let other = period - &d;
    d.min(other)
}

/// Curves with mean radius in `[0.5, 2]` and up to three harmonics whose
/// amplitudes sum to at most 60% of the mean, so convexity holds.
pub fn arb_curve() -> impl Strategy<Value = FourierCurve> {
    (
        0.5f64..2.0,
        prop::collection::vec((2u32..8, -1.0f64..1.0, -1.0f64..1.0), 0..4),
    )
        .prop_map(|(c0, raw)| {
            let total: f64 = raw.iter().map(|h| h.1.abs() + h.2.abs()).sum();
            let scale = if total > 0.0 { 0.6 * c0 / total.max(1.0) } else { 0.0 };
            let mut hs: Vec<(u32, f64, f64)> = Vec::new();
            for (k, a, b) in raw {
                if hs.iter().all(|h| h.0 != k) {
                    hs.push((k, a * scale, b * scale));
                }
            }
            FourierCurve::from_f64(c0, &hs).unwrap()
        })
}

/// Real series with uniform coefficients in the unit square for
/// `kmin ≤ |k| ≤ kmax`, `j ≤ jmax`.
pub fn random_series(seed: u64, kmin: usize, kmax: usize, jmax: usize, ctx: &RealContext) -> FourierTaylorSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = FourierTaylorSeries::zeros(kmax, jmax, true, ctx.bits());
    for k in kmin..=kmax {
        for j in 0..=jmax {
            let c = Complex::new(ctx.real(rng.gen_range(-1.0..1.0)), ctx.real(rng.gen_range(-1.0..1.0)));
            g.set(k as i64, j, c);
        }
    }
    g
}
