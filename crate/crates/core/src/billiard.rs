//! Inner billiard map in Birkhoff coordinates `(s, r)` and outer (dual)
//! billiard map in envelope coordinates `(α, r)`, with their generating
//! functions.
//!
//! Internally both maps are written in the tangent angle of the contact
//! points, which is the natural configuration coordinate for
//! [`FourierCurve`]. The public functions convert from and to the
//! coordinates above.

use crate::curves::{CurveEval, Frame, FourierCurve, Vec2};
use crate::error::{Error, Result};
use crate::quadrature;
use crate::real::{Real, RealContext};

/// Incidence angles closer than this to `0` or `π` are flagged as glancing.
pub const R_MIN_FACTOR: f64 = 1e-6;

const MAX_NEWTON: usize = 200;

/// Phase point of the inner billiard: arclength and incidence angle.
#[derive(Clone, Debug, PartialEq)]
pub struct BirkhoffPoint {
    pub s: Real,
    pub r: Real,
}

/// Phase point of the dual billiard: the point `m(α) + r·t(α)` outside the
/// table.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopePoint {
    pub alpha: Real,
    pub r: Real,
}

/// Result of one map step.
#[derive(Clone, Debug)]
pub struct Step<P> {
    pub point: P,
    /// Newton iterations spent on the contact point.
    pub iterations: usize,
    /// Set when the step started closer to the boundary than the guard
    /// threshold; the value is still computed.
    pub near_boundary: bool,
}

/// Which billiard a generating function belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Table {
    Inner,
    Outer,
}

impl Table {
    /// Largest admissible advance of the tangent angle in one step.
    pub fn max_step(self, ctx: &RealContext) -> Real {
        match self {
            Table::Inner => ctx.two_pi(),
            Table::Outer => ctx.pi(),
        }
    }

    /// Smallest period allowed for this table.
    pub fn min_period(self) -> u64 {
        match self {
            Table::Inner => 2,
            Table::Outer => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Table::Inner => "inner",
            Table::Outer => "outer",
        }
    }
}

impl std::str::FromStr for Table {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inner" => Ok(Table::Inner),
            "outer" => Ok(Table::Outer),
            other => Err(Error::InvalidArgument(format!("unknown table {other:?}"))),
        }
    }
}

/// Generating function of one step between tangent angles `φ0 < φ1`, with
/// its derivatives in those angles and the radial coordinates at both ends.
#[derive(Clone, Debug)]
pub struct PairTerms {
    pub value: Real,
    pub d0: Real,
    pub d1: Real,
    pub d00: Real,
    pub d01: Real,
    pub d11: Real,
    /// Radial coordinate at departure (incidence angle or tangent distance).
    pub r0: Real,
    /// Radial coordinate at arrival.
    pub r1: Real,
}

/// Angle from `a` to `b`, in `(-π, π]`.
fn angle_between(a: &Vec2, b: &Vec2) -> Real {
    a.cross(b).atan2(&a.dot(b))
}

/// Chord length and its derivatives in the tangent angles.
pub fn chord_terms(f0: &Frame, f1: &Frame) -> PairTerms {
    let u = f1.m.sub(&f0.m);
    let d = u.norm();
    let r0 = angle_between(&f0.t, &u);
    let r1 = angle_between(&u, &f1.t);
    let (s0, c0) = r0.sin_cos();
    let (s1, c1) = r1.sin_cos();
    let d00 = -(&f0.drho * &c0) + (&f0.rho * &s0).square() / &d - &f0.rho * &s0;
    let d11 = &f1.drho * &c1 + (&f1.rho * &s1).square() / &d - &f1.rho * &s1;
    let d01 = &f0.rho * &f1.rho * &s0 * &s1 / &d;
    PairTerms {
        d0: -(&f0.rho * &c0),
        d1: &f1.rho * &c1,
        value: d,
        d00,
        d01,
        d11,
        r0,
        r1,
    }
}

/// Area cut off by the tangents at `φ0 < φ1 < φ0 + π`, and its derivatives.
pub fn tangent_terms(ev: &CurveEval, f0: &Frame, f1: &Frame) -> PairTerms {
    let u = f1.m.sub(&f0.m);
    let sin_d = f0.t.cross(&f1.t);
    let cos_d = f0.t.dot(&f1.t);
    let r0 = u.cross(&f1.t) / &sin_d;
    let r1 = f0.t.cross(&u) / &sin_d;
    let z = f0.m.add(&f0.t.scale(&r0));
    let cot = &cos_d / &sin_d;
    let value = (f0.m.cross(&z) + z.cross(&f1.m) - ev.sector_integral(&f0.phi, &f1.phi)) / 2.0;
    PairTerms {
        value,
        d0: -(r0.square() / 2.0),
        d1: r1.square() / 2.0,
        d00: &r0 * (&f0.rho - &r0 * &cot),
        d01: -(&r0 * &r1 / &sin_d),
        d11: &r1 * (&f1.rho - &r1 * &cot),
        r0,
        r1,
    }
}

/// Generating-function terms for either table.
pub fn pair_terms(table: Table, ev: &CurveEval, f0: &Frame, f1: &Frame) -> PairTerms {
    match table {
        Table::Inner => chord_terms(f0, f1),
        Table::Outer => tangent_terms(ev, f0, f1),
    }
}

fn phi_of(curve: &FourierCurve, s: &Real, ctx: &RealContext) -> Result<Real> {
    let total = curve.total_length(ctx);
    curve.phi_from_arclength(&s.rem_euclid(&total), ctx)
}

/// Chord length `|m(s1) − m(s)|`, the generating function of the inner map.
pub fn chord_length(curve: &FourierCurve, s: &Real, s1: &Real, ctx: &RealContext) -> Result<Real> {
    let ev = curve.eval(ctx.bits());
    let (p0, p1) = (phi_of(curve, s, ctx)?, phi_of(curve, s1, ctx)?);
    Ok(ev.position(&p1).sub(&ev.position(&p0)).norm())
}

/// `(∂h/∂s, ∂h/∂s1) = (−cos r, cos r1)` for the chord from `s` to `s1`.
pub fn chord_gradient(curve: &FourierCurve, s: &Real, s1: &Real, ctx: &RealContext) -> Result<(Real, Real)> {
    let ev = curve.eval(ctx.bits());
    let total = curve.total_length(ctx);
    if (s - s1).rem_euclid(&total).is_zero() {
        return Err(Error::InvalidArgument("chord endpoints coincide".into()));
    }
    let (p0, p1) = (phi_of(curve, s, ctx)?, phi_of(curve, s1, ctx)?);
    let terms = chord_terms(&ev.frame(&p0), &ev.frame(&p1));
    Ok((-terms.r0.cos(), terms.r1.cos()))
}

/// One step of the inner billiard map.
pub fn billiard_step(curve: &FourierCurve, p: &BirkhoffPoint, ctx: &RealContext) -> Result<Step<BirkhoffPoint>> {
    let pi = ctx.pi();
    if !(p.r > 0.0 && p.r < pi) {
        return Err(Error::InvalidArgument(format!("incidence angle {:?} outside (0, π)", p.r)));
    }
    let ev = curve.eval(ctx.bits());
    let phi0 = phi_of(curve, &p.s, ctx)?;
    let (phi1, r1, iterations) = inner_step_phi(&ev, &phi0, &p.r, ctx)?;
    let total = curve.total_length(ctx);
    let s1 = ev.arclength(&phi1.rem_euclid(&ctx.two_pi())).rem_euclid(&total);
    let r_min = &pi * R_MIN_FACTOR;
    Ok(Step {
        point: BirkhoffPoint { s: s1, r: r1 },
        iterations,
        near_boundary: p.r < r_min || (&pi - &p.r) < r_min,
    })
}

/// Tangent angle `φ1 ∈ (φ0, φ0 + 2π)` hit by the chord leaving `φ0` at
/// angle `r`, the arrival angle, and the iteration count.
pub fn inner_step_phi(ev: &CurveEval, phi0: &Real, r: &Real, ctx: &RealContext) -> Result<(Real, Real, usize)> {
    let f0 = ev.frame(phi0);
    let two_pi = ctx.two_pi();
    let guard = ctx.eps() * 16.0;
    let mut lo = phi0 + &guard;
    let mut hi = phi0 + &two_pi - &guard;
    let mut phi1 = phi0 + r * 2.0;
    if phi1 <= lo || phi1 >= hi {
        phi1 = (&lo + &hi) / 2.0;
    }
    // Angles are lifted, so the tolerance scales with their size.
    let tol = ctx.eps() * 64.0 * (phi0.abs().to_f64() + 8.0);
    for it in 1..=MAX_NEWTON {
        let f1 = ev.frame(&phi1);
        let u = f1.m.sub(&f0.m);
        let d = u.norm();
        let beta = angle_between(&f0.t, &u);
        let g = &beta - r;
        if g > 0.0 {
            hi = phi1.clone();
        } else {
            lo = phi1.clone();
        }
        let r1 = angle_between(&u, &f1.t);
        let slope = &f1.rho * r1.sin() / &d;
        let newton = &g / &slope;
        let converged = newton.abs() <= tol;
        let mut next = &phi1 - &newton;
        if !converged && (!next.is_finite() || next <= lo || next >= hi) {
            next = (&lo + &hi) / 2.0;
        }
        let step = (&next - &phi1).abs();
        phi1 = next;
        if converged || step <= tol || (&hi - &lo) <= tol {
            let f1 = ev.frame(&phi1);
            let u = f1.m.sub(&f0.m);
            return Ok((phi1, angle_between(&u, &f1.t), it));
        }
    }
    Err(Error::NoConvergence {
        what: "chord-curve intersection",
        iterations: MAX_NEWTON,
        residual: (&hi - &lo).to_f64(),
    })
}

/// Distance from the intersection of the tangents at `α` and `α1` to the
/// contact point `m(α1)`:
/// `r = δ/sin δ · ∫_0^1 sin(δt) ρ(α + δt) dt`, `δ = α1 − α ∈ [0, π)`.
pub fn dual_r(curve: &FourierCurve, alpha: &Real, alpha1: &Real, ctx: &RealContext) -> Result<Real> {
    let delta = (alpha1 - alpha).rem_euclid(&ctx.two_pi());
    if delta >= ctx.pi() {
        return Err(Error::InvalidArgument(
            "tangents at angles differing by π or more do not meet ahead".into(),
        ));
    }
    if delta.is_zero() {
        return Ok(ctx.zero());
    }
    let ev = curve.eval(ctx.bits());
    let tol = ctx.eps() * 64.0;
    let integral = quadrature::integrate(
        |t| (&delta * t).sin() * ev.rho(&(alpha + &(&delta * t))),
        &ctx.zero(),
        &ctx.one(),
        ctx,
        16,
        &tol,
    )?;
    Ok(&delta / delta.sin() * integral)
}

/// Area between the curve and its tangents at `α < α1 < α + π`.
pub fn dual_lagrangian(curve: &FourierCurve, alpha: &Real, alpha1: &Real, ctx: &RealContext) -> Result<Real> {
    let delta = (alpha1 - alpha).rem_euclid(&ctx.two_pi());
    if delta.is_zero() || delta >= ctx.pi() {
        return Err(Error::InvalidArgument("dual step must advance by an angle in (0, π)".into()));
    }
    let ev = curve.eval(ctx.bits());
    let a0 = alpha.clone();
    let a1 = alpha + &delta;
    Ok(tangent_terms(&ev, &ev.frame(&a0), &ev.frame(&a1)).value)
}

/// One step of the dual billiard map: reflect `z = m(α) + r t(α)` in its
/// other tangency point `m(α1)`.
pub fn dual_step(curve: &FourierCurve, p: &EnvelopePoint, ctx: &RealContext) -> Result<Step<EnvelopePoint>> {
    if !(p.r > 0.0) {
        return Err(Error::InvalidArgument(format!("tangent distance {:?} must be positive", p.r)));
    }
    let ev = curve.eval(ctx.bits());
    let (alpha1, r1, iterations) = outer_step_alpha(&ev, &p.alpha, &p.r, ctx)?;
    let r_min = ctx.pi() * R_MIN_FACTOR;
    Ok(Step {
        point: EnvelopePoint {
            alpha: alpha1.rem_euclid(&ctx.two_pi()),
            r: r1,
        },
        iterations,
        near_boundary: p.r < r_min,
    })
}

/// Second tangency `α1 ∈ (α, α + π)` of the point `m(α) + r t(α)`, the new
/// tangent distance, and the iteration count.
pub fn outer_step_alpha(ev: &CurveEval, alpha: &Real, r: &Real, ctx: &RealContext) -> Result<(Real, Real, usize)> {
    let f0 = ev.frame(alpha);
    let z = f0.m.add(&f0.t.scale(r));
    let guard = ctx.eps() * 16.0;
    let mut lo = alpha + &guard;
    let mut hi = alpha + ctx.pi() - &guard;
    let mut a1 = alpha + (r / &f0.rho).atan() * 2.0;
    if a1 <= lo || a1 >= hi {
        a1 = (&lo + &hi) / 2.0;
    }
    let tol = ctx.eps() * 64.0 * (alpha.abs().to_f64() + 8.0);
    for it in 1..=MAX_NEWTON {
        let f1 = ev.frame(&a1);
        let u = f1.m.sub(&f0.m);
        let sin_d = f0.t.cross(&f1.t);
        let r0 = u.cross(&f1.t) / &sin_d;
        let r1 = f0.t.cross(&u) / &sin_d;
        let g = &r0 - r;
        if g > 0.0 {
            hi = a1.clone();
        } else {
            lo = a1.clone();
        }
        let slope = &r1 / &sin_d;
        let newton = &g / &slope;
        let converged = newton.abs() <= tol;
        let mut next = &a1 - &newton;
        if !converged && (!next.is_finite() || next <= lo || next >= hi) {
            next = (&lo + &hi) / 2.0;
        }
        let step = (&next - &a1).abs();
        a1 = next;
        if converged || step <= tol || (&hi - &lo) <= tol {
            let m1 = ev.position(&a1);
            let r1 = z.sub(&m1).norm();
            return Ok((a1, r1, it));
        }
    }
    Err(Error::NoConvergence {
        what: "dual billiard tangency",
        iterations: MAX_NEWTON,
        residual: (&hi - &lo).to_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> RealContext {
        RealContext::new(160).unwrap()
    }

    fn perturbed() -> FourierCurve {
        FourierCurve::from_f64(1.0, &[(3, 0.1, 0.0)]).unwrap()
    }

    #[test]
    fn circle_inner_step() {
        let ctx = ctx();
        // Perimeter one.
        let c = FourierCurve::new(ctx.one() / ctx.two_pi(), vec![]).unwrap();
        let p = BirkhoffPoint { s: ctx.real(0.3), r: ctx.real(0.7) };
        let q = billiard_step(&c, &p, &ctx).unwrap().point;
        let want = (ctx.real(0.3) + ctx.real(0.7) / ctx.pi()).rem_euclid(&ctx.one());
        assert!((q.s - want).abs() < 1e-40);
        assert!((q.r - 0.7).abs() < 1e-40);
    }

    #[test]
    fn inner_step_is_reversible() {
        let ctx = ctx();
        let c = perturbed();
        let p = BirkhoffPoint { s: ctx.real(1.2), r: ctx.real(0.9) };
        let q = billiard_step(&c, &p, &ctx).unwrap().point;
        let back = billiard_step(&c, &BirkhoffPoint { s: q.s.clone(), r: ctx.pi() - &q.r }, &ctx)
            .unwrap()
            .point;
        let total = c.total_length(&ctx);
        let ds = (&back.s - &p.s).rem_euclid(&total);
        let ds = ds.clone().min(&total - &ds);
        assert!(ds < 1e-35);
        assert!((ctx.pi() - back.r - &p.r).abs() < 1e-35);
    }

    #[test]
    fn chord_gradient_matches_finite_differences() {
        let ctx = ctx();
        let c = perturbed();
        let (s, s1) = (ctx.real(0.4), ctx.real(2.9));
        let (g0, g1) = chord_gradient(&c, &s, &s1, &ctx).unwrap();
        let h = ctx.real(1e-15);
        let fd0 = (chord_length(&c, &(&s + &h), &s1, &ctx).unwrap()
            - chord_length(&c, &(&s - &h), &s1, &ctx).unwrap())
            / (&h * 2.0);
        let fd1 = (chord_length(&c, &s, &(&s1 + &h), &ctx).unwrap()
            - chord_length(&c, &s, &(&s1 - &h), &ctx).unwrap())
            / (&h * 2.0);
        assert!((g0 - fd0).abs() < 1e-20);
        assert!((g1 - fd1).abs() < 1e-20);
    }

    #[test]
    fn pair_hessians_match_finite_differences() {
        let ctx = ctx();
        let c = FourierCurve::from_f64(1.0, &[(3, 0.1, 0.03), (5, 0.02, -0.01)]).unwrap();
        let ev = c.eval(ctx.bits());
        let h = ctx.real(1e-18);
        for table in [Table::Inner, Table::Outer] {
            let (a, b) = (ctx.real(0.3), ctx.real(2.1));
            let t = pair_terms(table, &ev, &ev.frame(&a), &ev.frame(&b));
            let at = |x: &Real, y: &Real| pair_terms(table, &ev, &ev.frame(x), &ev.frame(y));
            let fd0 = (at(&(&a + &h), &b).value - at(&(&a - &h), &b).value) / (&h * 2.0);
            let fd1 = (at(&a, &(&b + &h)).value - at(&a, &(&b - &h)).value) / (&h * 2.0);
            let fd00 = (at(&(&a + &h), &b).d0 - at(&(&a - &h), &b).d0) / (&h * 2.0);
            let fd01 = (at(&a, &(&b + &h)).d0 - at(&a, &(&b - &h)).d0) / (&h * 2.0);
            let fd11 = (at(&a, &(&b + &h)).d1 - at(&a, &(&b - &h)).d1) / (&h * 2.0);
            for (x, y) in [(&t.d0, fd0), (&t.d1, fd1), (&t.d00, fd00), (&t.d01, fd01), (&t.d11, fd11)] {
                assert!((x - &y).abs() < 1e-25, "{table:?}: {x:?} vs {y:?}");
            }
        }
    }

    #[test]
    fn circle_dual_quantities() {
        let ctx = ctx();
        let c = FourierCurve::circle(1.5).unwrap();
        let (a, d) = (ctx.real(0.2), ctx.real(1.1));
        let r = dual_r(&c, &a, &(&a + &d), &ctx).unwrap();
        assert!((&r - (&d / 2.0).tan() * 1.5).abs() < 1e-40);
        let l = dual_lagrangian(&c, &a, &(&a + &d), &ctx).unwrap();
        let want = ((&d / 2.0).tan() - &d / 2.0) * 2.25;
        assert!((l - want).abs() < 1e-40);
        let step = dual_step(&c, &EnvelopePoint { alpha: a.clone(), r: r.clone() }, &ctx).unwrap();
        assert!((&step.point.alpha - (&a + &d)).abs() < 1e-40);
        assert!((&step.point.r - &r).abs() < 1e-40);
        assert!(dual_r(&c, &a, &(&a + 3.5), &ctx).is_err());
    }

    #[test]
    fn dual_r_is_the_vertex_distance() {
        let ctx = ctx();
        let c = perturbed();
        let ev = c.eval(ctx.bits());
        let (a, b) = (ctx.zero(), ctx.one());
        let t = tangent_terms(&ev, &ev.frame(&a), &ev.frame(&b));
        let r = dual_r(&c, &a, &b, &ctx).unwrap();
        assert!((r - t.r1).abs() < 1e-40);
    }
}
