//! Averaging steps that raise the order of a near-integrable map, and one
//! Neishtadt step that shrinks the non-averaged part of the remainder.

use crate::error::{Error, Result};
use crate::real::{Complex, Real, RealContext};

use super::homological::solve_homological;
use super::map_series::{MapSeries, NearIdentity};
use super::series::FourierTaylorSeries;

/// Result of [`averaging_step`].
#[derive(Clone, Debug)]
pub struct AveragingStep {
    /// `Φ̃_l(x, y) = (x + y^{l−1} ψ₁(x), y + y^l ψ₂(x))`.
    pub change: NearIdentity,
    /// `F_{l+1}`, without the constant radial term `y^{l+1} h₂*`.
    pub map: MapSeries,
    /// Average of the radial coefficient `h₂` of `F_l`.
    pub h2_star: Real,
    /// Average of the angular coefficient `h₁` of `F_l`.
    pub h1_star: Real,
    /// Largest Fourier coefficient left in the order-`l` angular term of the
    /// transformed map; zero up to rounding by construction.
    pub k1_residual: Real,
    /// Largest deviation of the transformed order-`l+1` radial term from
    /// the constant `h₂*`.
    pub k2_residual: Real,
}

/// Raises the order of `f` by one. Requires `l ≥ 2` and `J_max ≥ l + 2`;
/// the result carries one power of `y` fewer.
pub fn averaging_step(f: &MapSeries, ctx: &RealContext) -> Result<AveragingStep> {
    let l = f.order();
    if l < 2 {
        return Err(Error::InvalidArgument("averaging starts at order 2".into()));
    }
    if f.jmax() < l + 2 {
        return Err(Error::Truncation(format!(
            "order {l} needs J_max ≥ {} to represent the composition, found {}",
            l + 2,
            f.jmax()
        )));
    }
    let bits = ctx.bits().max(f.bits());
    let h1 = f.angular_coefficient(l);
    let h2 = f.radial_coefficient(l + 1);
    let h1_star = h1.coeff(0, 0).re;
    let h2_star = h2.coeff(0, 0).re;

    // ψ₂ = ∫(h₂ − h₂*) − h₁*, ψ₁ = ∫(ψ₂ + h₁), both periodic.
    let mut psi2 = h2.antiderivative_x();
    psi2.set(0, 0, Complex::from_real(-&h1_star));
    let psi1 = psi2.add(&h1).antiderivative_x();
    let change = NearIdentity {
        p1: l - 1,
        psi1,
        p2: l,
        psi2,
    };
    let conj = if change.is_identity() {
        None
    } else {
        Some(f.conjugate(&change, l + 1, f.jmax() - 1)?)
    };
    let (map, k1_residual, k2_residual) = match conj {
        Some(c) => {
            let k1 = c.low1.y_slice(l);
            let k2 = c.low2.y_slice(l + 1);
            let mut k1_res = Real::zero(bits);
            let mut k2_res = Real::zero(bits);
            for k in -(k1.kmax() as i64)..=k1.kmax() as i64 {
                k1_res = k1_res.max(k1.coeff_ref(k, 0).abs());
                let expected = if k == 0 { Complex::from_real(h2_star.clone()) } else { Complex::zero(bits) };
                k2_res = k2_res.max(k2.coeff_ref(k, 0).sub(&expected).abs());
            }
            (c.map, k1_res, k2_res)
        }
        None => {
            // Nothing to remove: re-read the same map one order higher.
            let g1 = shift_down(f.g1());
            let g2 = shift_down(f.g2());
            (MapSeries::new(l + 1, g1, g2)?, Real::zero(bits), h2_star.clone().abs())
        }
    };
    Ok(AveragingStep {
        change,
        map,
        h2_star,
        h1_star,
        k1_residual,
        k2_residual,
    })
}

/// `(g − g(·, 0)) / y` with one power fewer.
fn shift_down(g: &FourierTaylorSeries) -> FourierTaylorSeries {
    let mut out = FourierTaylorSeries::zeros(g.kmax(), g.jmax() - 1, g.is_real(), g.bits());
    for k in -(g.kmax() as i64)..=g.kmax() as i64 {
        if g.is_real() && k < 0 {
            continue;
        }
        for j in 1..=g.jmax() {
            out.set(k, j - 1, g.coeff(k, j));
        }
    }
    out
}

/// One rung of the averaging ladder, with the quantities the order checks
/// need.
#[derive(Clone, Debug)]
pub struct LadderRung {
    pub order: usize,
    pub h2_star: Real,
    /// Tail estimate of the coefficient `h₂*` from the truncation of the
    /// map entering the rung.
    pub h2_tail: Real,
    pub k1_residual: Real,
}

/// Applies [`averaging_step`] until the map has order `target`. `b` is the
/// radius used to express the truncation tail of each `h₂*`.
pub fn averaging_ladder(
    f: &MapSeries,
    target: usize,
    b: &Real,
    ctx: &RealContext,
) -> Result<(MapSeries, Vec<LadderRung>)> {
    let mut map = f.clone();
    let mut rungs = Vec::new();
    while map.order() < target {
        let l = map.order();
        let zero = Real::zero(ctx.bits());
        // The tail is a bound on a function at |y| = b; the coefficient of
        // y^{l+1} inherits it divided by b^{l+1}.
        let tail = map.tail_estimate(&zero, b) / b.powi(l as i32 + 1);
        let step = averaging_step(&map, ctx)?;
        rungs.push(LadderRung {
            order: l,
            h2_star: step.h2_star.clone(),
            h2_tail: tail,
            k1_residual: step.k1_residual.clone(),
        });
        map = step.map;
    }
    Ok((map, rungs))
}

/// Result of [`neishtadt_step`].
#[derive(Clone, Debug)]
pub struct NeishtadtStep {
    /// `Φ = Id + Ψ`, `Ψ = (y^{m−1} ψ₁, y^m ψ₂)`.
    pub change: NearIdentity,
    pub map: MapSeries,
    /// Harmonic cut-off `K`: harmonics with `|k| < K` are removed.
    pub cutoff: usize,
    /// `‖π•(G)‖` at `(a, b)` before the step.
    pub bullet_before: Real,
    /// `‖π•(G̃)‖` at `(a − 6b, b)` after the step.
    pub bullet_after: Real,
    pub star_before: Real,
    pub star_after: Real,
}

/// One iterative step with `K = s/b`: solves the truncated linear equation
/// `Ψ∘A − AΨ = (G•)^{<K}` and conjugates.
pub fn neishtadt_step(f: &MapSeries, a: &Real, b: &Real, s: f64, ctx: &RealContext) -> Result<NeishtadtStep> {
    let m = f.order();
    if m < 6 {
        return Err(Error::InvalidArgument(format!("the iterative step needs order m ≥ 6, found {m}")));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidArgument("s must lie in (0, 1)".into()));
    }
    if !(*b > 0.0) || !(*a > 0.0) {
        return Err(Error::InvalidArgument("a and b must be positive".into()));
    }
    let cutoff = (s / b.to_f64()).ceil().max(1.0) as usize;
    let psi = linear_double(f, cutoff, ctx)?;
    let conj = if psi.is_identity() {
        None
    } else {
        Some(f.conjugate(&psi, m, f.jmax())?)
    };
    let map = conj.map(|c| c.map).unwrap_or_else(|| f.clone());
    let a_after = a - &(b * 6.0);
    Ok(NeishtadtStep {
        bullet_before: f.bullet_norm(a, b),
        bullet_after: map.bullet_norm(&a_after, b),
        star_before: f.star_norm(a, b),
        star_after: map.star_norm(&a_after, b),
        change: psi,
        map,
        cutoff,
    })
}

/// Solution of `Ψ∘A − AΨ = (G•)^{<K}`:
/// `ψ₂ = 𝒢_K(g₂^{<K} − g₂*) − g₁*`, `ψ₁ = 𝒢_K(ψ₂ + g₁^{<K})`.
pub fn linear_double(f: &MapSeries, cutoff: usize, ctx: &RealContext) -> Result<NearIdentity> {
    let m = f.order();
    let (g1_low, _) = f.g1().k_cutoff(cutoff);
    let (g2_low, _) = f.g2().k_cutoff(cutoff);
    let g1_star = f.g1().mean();
    let g2_star = f.g2().mean();
    let psi2 = solve_homological(&g2_low.sub(&g2_star), cutoff, ctx)?.sub(&g1_star);
    let psi1 = solve_homological(&psi2.add(&g1_low), cutoff, ctx)?;
    Ok(NearIdentity {
        p1: m - 1,
        psi1,
        p2: m,
        psi2,
    })
}

/// Largest residual of `Ψ∘A − AΨ = (G•)^{<K}` over `nx` real `x` and `ny`
/// real `y ∈ [−b, b]`, both components.
pub fn linear_double_residual(
    f: &MapSeries,
    psi: &NearIdentity,
    cutoff: usize,
    b: &Real,
    nx: usize,
    ny: usize,
) -> Real {
    let bits = f.bits();
    let m = f.order() as i32;
    let (g1_low, _) = f.g1().k_cutoff(cutoff);
    let (g2_low, _) = f.g2().k_cutoff(cutoff);
    let g2_bullet = g2_low.sub(&f.g2().mean());
    let mut worst = Real::zero(bits);
    for i in 0..nx {
        let x = Real::from_int(bits, i as i64) / (nx as f64);
        for t in 0..ny {
            let y = b * (2.0 * t as f64 / (ny - 1) as f64 - 1.0);
            let xs = &x + &y;
            let big1 = |xx: &Real| y.powi(psi.p1 as i32) * psi.psi1.eval_real(xx, &y);
            let big2 = |xx: &Real| y.powi(psi.p2 as i32) * psi.psi2.eval_real(xx, &y);
            let r1 = big1(&xs) - big1(&x) - big2(&x) - y.powi(m) * g1_low.eval_real(&x, &y);
            let r2 = big2(&xs) - big2(&x) - y.powi(m + 1) * g2_bullet.eval_real(&x, &y);
            worst = worst.max(r1.abs()).max(r2.abs());
        }
    }
    worst
}
