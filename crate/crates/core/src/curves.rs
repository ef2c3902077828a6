//! Analytic strictly convex closed curves given by the Fourier series of the
//! radius of curvature in the tangent angle,
//! `ρ(φ) = c0 + Σ_k (a_k cos kφ + b_k sin kφ)`, `k ≥ 2`.
//!
//! The curve is anchored with `m(0)` at the origin and the tangent at `φ = 0`
//! along `+x`, so `m(φ) = ∫_0^φ ρ(ψ) e^{iψ} dψ`. Every closed-form quantity is
//! evaluated term by term from a table of powers of `e^{iφ}`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{periodic_mean, TrigSeries};
use crate::real::{Complex, Real, RealContext};

/// Grid used for the convexity check when the coefficient bound is not enough.
const CONVEXITY_GRID: usize = 4096;

/// One harmonic `a cos kφ + b sin kφ` of the radius of curvature.
#[derive(Clone, Debug, PartialEq)]
pub struct Harmonic {
    pub k: u32,
    pub a: Real,
    pub b: Real,
}

/// Plain-number description of a curve, as read from curve files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub c0: f64,
    #[serde(default)]
    pub harmonics: Vec<HarmonicSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSpec {
    pub k: u32,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
}

/// Point or vector in the plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Vec2 {
    pub x: Real,
    pub y: Real,
}

impl Vec2 {
    pub fn new(x: Real, y: Real) -> Self {
        Vec2 { x, y }
    }

    pub fn from_complex(z: Complex) -> Self {
        Vec2 { x: z.re, y: z.im }
    }

    pub fn sub(&self, o: &Vec2) -> Vec2 {
        Vec2::new(&self.x - &o.x, &self.y - &o.y)
    }

    pub fn add(&self, o: &Vec2) -> Vec2 {
        Vec2::new(&self.x + &o.x, &self.y + &o.y)
    }

    pub fn scale(&self, k: &Real) -> Vec2 {
        Vec2::new(&self.x * k, &self.y * k)
    }

    pub fn cross(&self, o: &Vec2) -> Real {
        &self.x * &o.y - &self.y * &o.x
    }

    pub fn dot(&self, o: &Vec2) -> Real {
        &self.x * &o.x + &self.y * &o.y
    }

    pub fn norm(&self) -> Real {
        (self.x.square() + self.y.square()).sqrt()
    }
}

/// Everything known about the curve at one tangent angle.
#[derive(Clone, Debug)]
pub struct Frame {
    pub phi: Real,
    /// Position `m(φ)`.
    pub m: Vec2,
    /// Unit tangent `(cos φ, sin φ)`.
    pub t: Vec2,
    pub rho: Real,
    /// `dρ/dφ`.
    pub drho: Real,
}

/// An analytic strictly convex curve.
pub struct FourierCurve {
    c0: Real,
    harmonics: Vec<Harmonic>,
    evals: RwLock<HashMap<u32, Arc<CurveEval>>>,
}

impl Clone for FourierCurve {
    fn clone(&self) -> Self {
        FourierCurve {
            c0: self.c0.clone(),
            harmonics: self.harmonics.clone(),
            evals: RwLock::new(HashMap::new()),
        }
    }
}

impl fmt::Debug for FourierCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FourierCurve")
            .field("c0", &self.c0)
            .field("harmonics", &self.harmonics)
            .finish()
    }
}

impl PartialEq for FourierCurve {
    fn eq(&self, other: &Self) -> bool {
        self.c0 == other.c0 && self.harmonics == other.harmonics
    }
}

impl FourierCurve {
    /// Builds and validates a curve. Repeated `k` are summed; zero harmonics
    /// are dropped. `k < 2` is rejected: `k = 1` would not close.
    pub fn new(c0: Real, harmonics: Vec<Harmonic>) -> Result<Self> {
        if !(c0 > 0.0) {
            return Err(Error::InvalidCurve(format!("c0 must be positive, got {c0:?}")));
        }
        let mut merged: BTreeMap<u32, (Real, Real)> = BTreeMap::new();
        for h in harmonics {
            if h.k < 2 {
                return Err(Error::InvalidCurve(format!(
                    "harmonic k = {} is not allowed (k must be at least 2)",
                    h.k
                )));
            }
            if !h.a.is_finite() || !h.b.is_finite() {
                return Err(Error::InvalidCurve(format!("non-finite coefficient at k = {}", h.k)));
            }
            let prec = h.a.prec().max(h.b.prec());
            let entry = merged
                .entry(h.k)
                .or_insert_with(|| (Real::zero(prec), Real::zero(prec)));
            entry.0 += &h.a;
            entry.1 += &h.b;
        }
        let harmonics: Vec<Harmonic> = merged
            .into_iter()
            .filter(|(_, (a, b))| !(a.is_zero() && b.is_zero()))
            .map(|(k, (a, b))| Harmonic { k, a, b })
            .collect();
        let curve = FourierCurve {
            c0,
            harmonics,
            evals: RwLock::new(HashMap::new()),
        };
        curve.check_convex()?;
        Ok(curve)
    }

    /// Curve from `f64` data; every `f64` is taken exactly.
    pub fn from_f64(c0: f64, harmonics: &[(u32, f64, f64)]) -> Result<Self> {
        let hs = harmonics
            .iter()
            .map(|&(k, a, b)| Harmonic {
                k,
                a: Real::from_f64(64, a),
                b: Real::from_f64(64, b),
            })
            .collect();
        FourierCurve::new(Real::from_f64(64, c0), hs)
    }

    pub fn from_spec(spec: &CurveSpec) -> Result<Self> {
        let hs: Vec<_> = spec.harmonics.iter().map(|h| (h.k, h.a, h.b)).collect();
        FourierCurve::from_f64(spec.c0, &hs)
    }

    /// The coefficients rounded to `f64`.
    pub fn to_spec(&self) -> CurveSpec {
        CurveSpec {
            c0: self.c0.to_f64(),
            harmonics: self
                .harmonics
                .iter()
                .map(|h| HarmonicSpec {
                    k: h.k,
                    a: h.a.to_f64(),
                    b: h.b.to_f64(),
                })
                .collect(),
        }
    }

    pub fn circle(radius: f64) -> Result<Self> {
        FourierCurve::from_f64(radius, &[])
    }

    /// Ellipse with semi-axes `a` (along `x`) and `b`, whose radius of
    /// curvature `a²b²/(a² sin²φ + b² cos²φ)^{3/2}` is expanded to `bits` of
    /// precision and truncated once the harmonics fall below `2^{-bits}`.
    pub fn truncated_ellipse(a: f64, b: f64, bits: u32) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidCurve("ellipse semi-axes must be positive".into()));
        }
        let ctx = RealContext::new(bits + 32)?;
        let (ra, rb) = (ctx.real(a), ctx.real(b));
        let num = ra.square() * rb.square();
        let rho = |phi: &Real| {
            let (s, c) = phi.sin_cos();
            let d = ra.square() * s.square() + rb.square() * c.square();
            &num / (&d * d.sqrt())
        };
        // Rounding noise sits near 2^-(bits+32); stop well above it.
        let tol = crate::real::pow2(bits + 32, -(bits as i64) - 12);
        let series = TrigSeries::interpolate(rho, &ctx, 64, &tol)?;
        let cut = crate::real::pow2(bits, -(bits as i64) - 8);
        let harmonics = (2..series.a.len())
            .filter(|&k| series.a[k].abs() > cut || series.b[k].abs() > cut)
            .map(|k| Harmonic {
                k: k as u32,
                a: series.a[k].to_prec(bits),
                b: Real::zero(bits),
            })
            .collect();
        FourierCurve::new(series.a[0].to_prec(bits), harmonics)
    }

    /// Constant-width curve `c0 + Σ odd harmonics`; its width is `2 c0`.
    pub fn make_constant_width(c0: f64, odd_harmonics: &[(u32, f64, f64)]) -> Result<Self> {
        if let Some(&(k, _, _)) = odd_harmonics.iter().find(|h| h.0 % 2 == 0 || h.0 < 3) {
            return Err(Error::InvalidCurve(format!(
                "constant-width curves only carry odd harmonics k >= 3, got k = {k}"
            )));
        }
        FourierCurve::from_f64(c0, odd_harmonics)
    }

    /// The same curve scaled by `lambda`.
    pub fn scaled(&self, lambda: &Real) -> Result<Self> {
        FourierCurve::new(
            &self.c0 * lambda,
            self.harmonics
                .iter()
                .map(|h| Harmonic {
                    k: h.k,
                    a: &h.a * lambda,
                    b: &h.b * lambda,
                })
                .collect(),
        )
    }

    /// The same curve with the tangent-angle origin moved to `shift`, that
    /// is `ρ_new(φ) = ρ(φ + shift)`.
    pub fn rotated(&self, shift: &Real) -> Result<Self> {
        FourierCurve::new(
            self.c0.clone(),
            self.harmonics
                .iter()
                .map(|h| {
                    let (s, c) = (shift * (h.k as f64)).sin_cos();
                    Harmonic {
                        k: h.k,
                        a: &h.a * &c + &h.b * &s,
                        b: &h.b * &c - &h.a * &s,
                    }
                })
                .collect(),
        )
    }

    pub fn c0(&self) -> &Real {
        &self.c0
    }

    pub fn harmonics(&self) -> &[Harmonic] {
        &self.harmonics
    }

    pub fn is_circle(&self) -> bool {
        self.harmonics.is_empty()
    }

    /// Rotational symmetry order: the gcd of the harmonic indices (0 for a
    /// circle).
    pub fn symmetry_order(&self) -> u32 {
        fn gcd(a: u32, b: u32) -> u32 {
            if b == 0 {
                a
            } else {
                gcd(b, a % b)
            }
        }
        self.harmonics.iter().fold(0, |g, h| gcd(g, h.k))
    }

    fn check_convex(&self) -> Result<()> {
        let c0 = self.c0.to_f64();
        let bound: f64 = self
            .harmonics
            .iter()
            .map(|h| h.a.to_f64().abs() + h.b.to_f64().abs())
            .sum();
        if bound < c0 {
            return Ok(());
        }
        for j in 0..CONVEXITY_GRID {
            let phi = std::f64::consts::TAU * j as f64 / CONVEXITY_GRID as f64;
            let rho = c0
                + self
                    .harmonics
                    .iter()
                    .map(|h| {
                        let kp = h.k as f64 * phi;
                        h.a.to_f64() * kp.cos() + h.b.to_f64() * kp.sin()
                    })
                    .sum::<f64>();
            if !(rho > 0.0) {
                return Err(Error::InvalidCurve(format!(
                    "radius of curvature is not positive at phi = {phi:.6} (rho = {rho:e})"
                )));
            }
        }
        Ok(())
    }

    /// Evaluator with coefficient tables at `bits` of precision, built once
    /// per precision and shared.
    pub fn eval(&self, bits: u32) -> Arc<CurveEval> {
        if let Some(e) = self.evals.read().expect("curve cache poisoned").get(&bits) {
            return e.clone();
        }
        let e = Arc::new(CurveEval::new(self, bits));
        self.evals
            .write()
            .expect("curve cache poisoned")
            .insert(bits, e.clone());
        e
    }

    pub fn rho(&self, phi: &Real, ctx: &RealContext) -> Real {
        self.eval(ctx.bits()).rho(phi)
    }

    /// Position `m(φ)`.
    pub fn position(&self, phi: &Real, ctx: &RealContext) -> Vec2 {
        self.eval(ctx.bits()).position(phi)
    }

    /// Arclength `s(φ) = ∫_0^φ ρ`.
    pub fn arclength(&self, phi: &Real, ctx: &RealContext) -> Real {
        self.eval(ctx.bits()).arclength(phi)
    }

    /// Perimeter, `2π c0`.
    pub fn total_length(&self, ctx: &RealContext) -> Real {
        ctx.two_pi() * self.c0.to_prec(ctx.bits())
    }

    /// Enclosed area, `π c0² − (π/2) Σ (a_k² + b_k²)/(k² − 1)`.
    pub fn area(&self, ctx: &RealContext) -> Real {
        let mut sum = ctx.zero();
        for h in &self.harmonics {
            let k = h.k as f64;
            sum += (h.a.to_prec(ctx.bits()).square() + h.b.to_prec(ctx.bits()).square()) / (k * k - 1.0);
        }
        ctx.pi() * (self.c0.to_prec(ctx.bits()).square() - sum / 2.0)
    }

    /// Inverse of [`arclength`](Self::arclength) on `[0, total_length]`.
    pub fn phi_from_arclength(&self, s: &Real, ctx: &RealContext) -> Result<Real> {
        self.eval(ctx.bits()).phi_from_arclength(s, ctx)
    }

    /// `∫ κ^e ds = ∫_0^{2π} ρ^{1-e} dφ` for the rational exponent `num/den`.
    pub fn curvature_power_integral(&self, num: i64, den: i64, ctx: &RealContext) -> Result<Real> {
        if den <= 0 {
            return Err(Error::InvalidArgument("exponent denominator must be positive".into()));
        }
        let ev = self.eval(ctx.bits());
        if self.is_circle() {
            let e = ctx.ratio(den - num, den);
            return Ok(ctx.two_pi() * ev.c0.powf(&e));
        }
        let power = ctx.ratio(den - num, den);
        let tol = ctx.eps().sqrt() * 10.0;
        let mean = periodic_mean(|phi| ev.rho(phi).powf(&power), ctx, 16, &tol)?;
        Ok(mean * ctx.two_pi())
    }
}

/// Precision-bound tables for fast evaluation of one curve.
#[derive(Debug)]
pub struct CurveEval {
    bits: u32,
    c0: Real,
    /// `(k, a_k, b_k)` at working precision.
    harmonics: Vec<(usize, Real, Real)>,
    /// `m(φ) = pos_const + Σ pos[n] e^{inφ}`, as `(n, coefficient)`.
    pos: Vec<(i64, Complex)>,
    pos_const: Complex,
    /// Trigonometric coefficients of `ρ (m × t)`, index `n ≥ 0` for
    /// `e^{inφ}` (the negative ones are conjugates).
    sector: Vec<Complex>,
}

impl CurveEval {
    fn new(curve: &FourierCurve, bits: u32) -> Self {
        let c0 = curve.c0.to_prec(bits);
        let harmonics: Vec<(usize, Real, Real)> = curve
            .harmonics
            .iter()
            .map(|h| (h.k as usize, h.a.to_prec(bits), h.b.to_prec(bits)))
            .collect();
        let kmax = harmonics.last().map_or(0, |h| h.0);

        // ρ as complex trigonometric coefficients.
        let mut rho_c: BTreeMap<i64, Complex> = BTreeMap::new();
        rho_c.insert(0, Complex::from_real(c0.clone()));
        for (k, a, b) in &harmonics {
            let half_a = a / 2.0;
            let half_b = b / 2.0;
            rho_c.insert(*k as i64, Complex::new(half_a.clone(), -&half_b));
            rho_c.insert(-(*k as i64), Complex::new(half_a, half_b));
        }

        // m(φ) = ∫_0^φ ρ e^{iψ} dψ, termwise.
        let mut pos_map: BTreeMap<i64, Complex> = BTreeMap::new();
        for (n, c) in &rho_c {
            let m = n + 1;
            debug_assert!(m != 0, "k = 1 harmonics are excluded");
            // c/(i m) = -i c / m
            let coef = c.mul_i().neg().div_f64(m as f64);
            let entry = pos_map.entry(m).or_insert_with(|| Complex::zero(bits));
            entry.add_assign(&coef);
        }
        let mut pos_const = Complex::zero(bits);
        for c in pos_map.values() {
            pos_const = pos_const.sub(c);
        }
        let pos: Vec<(i64, Complex)> = pos_map.into_iter().collect();

        // m × t = Im(conj(m) e^{iφ}) as a Hermitian trigonometric series.
        let mut cross: BTreeMap<i64, Complex> = BTreeMap::new();
        let mut push_im = |j: i64, c: Complex| {
            // Im(c e^{ijφ}) = (c e^{ijφ} − conj(c) e^{−ijφ}) / 2i
            let plus = c.mul_i().neg().scale_f64(0.5);
            let minus = c.conj().mul_i().scale_f64(0.5);
            cross.entry(j).or_insert_with(|| Complex::zero(bits)).add_assign(&plus);
            cross.entry(-j).or_insert_with(|| Complex::zero(bits)).add_assign(&minus);
        };
        push_im(1, pos_const.conj());
        for (n, c) in &pos {
            push_im(1 - n, c.conj());
        }
        let deg = 2 * kmax + 2;
        let mut sector = vec![Complex::zero(bits); deg + 1];
        for (n, a) in &rho_c {
            for (j, b) in &cross {
                let idx = n + j;
                if idx >= 0 {
                    sector[idx as usize].add_mul(a, b);
                }
            }
        }
        CurveEval {
            bits,
            c0,
            harmonics,
            pos,
            pos_const,
            sector,
        }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// `e^{inφ}` for `n = 0..=len-1`.
    fn powers(&self, phi: &Real, len: usize) -> Vec<Complex> {
        let base = Complex::cis(phi);
        let mut out = Vec::with_capacity(len);
        out.push(Complex::one(self.bits));
        if len > 1 {
            out.push(base.clone());
        }
        for n in 2..len {
            // Alternate squaring and stepping to keep rounding growth logarithmic.
            let next = if n % 2 == 0 {
                let h = &out[n / 2];
                h.mul(h)
            } else {
                out[n - 1].mul(&base)
            };
            out.push(next);
        }
        out
    }

    fn power_at(table: &[Complex], n: i64) -> Complex {
        if n >= 0 {
            table[n as usize].clone()
        } else {
            table[(-n) as usize].conj()
        }
    }

    pub fn rho(&self, phi: &Real) -> Real {
        if self.harmonics.is_empty() {
            return self.c0.clone();
        }
        let kmax = self.harmonics.last().map_or(0, |h| h.0);
        let table = self.powers(phi, kmax + 1);
        self.rho_from(&table)
    }

    fn rho_from(&self, table: &[Complex]) -> Real {
        let mut rho = self.c0.clone();
        for (k, a, b) in &self.harmonics {
            let w = &table[*k];
            rho += a * &w.re + b * &w.im;
        }
        rho
    }

    fn drho_from(&self, table: &[Complex]) -> Real {
        let mut d = Real::zero(self.bits);
        for (k, a, b) in &self.harmonics {
            let w = &table[*k];
            d += (*k as f64) * (b * &w.re - a * &w.im);
        }
        d
    }

    fn position_from(&self, table: &[Complex]) -> Vec2 {
        let mut z = self.pos_const.clone();
        for (n, c) in &self.pos {
            z.add_mul(c, &Self::power_at(table, *n));
        }
        Vec2::from_complex(z)
    }

    pub fn position(&self, phi: &Real) -> Vec2 {
        let kmax = self.harmonics.last().map_or(0, |h| h.0);
        let table = self.powers(phi, kmax + 2);
        self.position_from(&table)
    }

    /// Position, tangent and curvature radius at `φ` from one power table.
    pub fn frame(&self, phi: &Real) -> Frame {
        let kmax = self.harmonics.last().map_or(0, |h| h.0);
        let table = self.powers(phi, kmax + 2);
        Frame {
            phi: phi.clone(),
            m: self.position_from(&table),
            t: Vec2::new(table[1].re.clone(), table[1].im.clone()),
            rho: self.rho_from(&table),
            drho: self.drho_from(&table),
        }
    }

    pub fn arclength(&self, phi: &Real) -> Real {
        let mut s = &self.c0 * phi;
        if self.harmonics.is_empty() {
            return s;
        }
        let kmax = self.harmonics.last().map_or(0, |h| h.0);
        let table = self.powers(phi, kmax + 1);
        for (k, a, b) in &self.harmonics {
            let w = &table[*k];
            s += (a * &w.im + b * (1.0 - &w.re)) / (*k as f64);
        }
        s
    }

    /// `∫_{φ0}^{φ1} ρ (m × t) dφ`, twice the area swept by the position
    /// vector from the origin.
    pub fn sector_integral(&self, phi0: &Real, phi1: &Real) -> Real {
        self.sector_antiderivative(phi1) - self.sector_antiderivative(phi0)
    }

    fn sector_antiderivative(&self, phi: &Real) -> Real {
        let table = self.powers(phi, self.sector.len().max(2));
        let mut acc = &self.sector[0].re * phi;
        for n in 1..self.sector.len() {
            let c = &self.sector[n];
            if c.is_zero() {
                continue;
            }
            // c (e^{inφ} − 1)/(in) + conj: 2 Re(...)
            let w = &table[n];
            let term = Complex::new(&w.re - 1.0, w.im.clone()).mul(c).mul_i().neg();
            acc += term.re * 2.0 / (n as f64);
        }
        acc
    }

    pub fn phi_from_arclength(&self, s: &Real, ctx: &RealContext) -> Result<Real> {
        let two_pi = ctx.two_pi();
        let total = &two_pi * &self.c0;
        if s < &ctx.zero() || s > &total {
            return Err(Error::InvalidArgument(format!(
                "arclength {s:?} outside [0, {total:?}]"
            )));
        }
        let (mut lo, mut hi) = (ctx.zero(), two_pi.clone());
        let mut phi = s / &self.c0;
        let tight = ctx.eps() * 64.0 * &total;
        for it in 0..200 {
            let f = self.arclength(&phi) - s;
            if f.abs() <= tight {
                return Ok(phi);
            }
            if f > 0.0 {
                hi = phi.clone();
            } else {
                lo = phi.clone();
            }
            let rho = self.rho(&phi);
            let mut next = &phi - &(&f / &rho);
            if next <= lo || next >= hi {
                next = (&lo + &hi) / 2.0;
            }
            let step = (&next - &phi).abs();
            phi = next;
            if step <= ctx.eps() * 4.0 && it > 2 {
                let resid = (self.arclength(&phi) - s).abs();
                if resid <= ctx.solver_tol() * &total {
                    return Ok(phi);
                }
            }
        }
        let resid = (self.arclength(&phi) - s).abs();
        if resid <= ctx.solver_tol() * &total {
            return Ok(phi);
        }
        Err(Error::NoConvergence {
            what: "arclength inversion",
            iterations: 200,
            residual: resid.to_f64(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    fn perturbed() -> FourierCurve {
        FourierCurve::from_f64(1.0, &[(3, 0.1, 0.0)]).unwrap()
    }

    #[test]
    fn circle_position_is_closed_form() {
        let ctx = RealContext::new(128).unwrap();
        let c = FourierCurve::circle(2.0).unwrap();
        let phi = ctx.real(0.9);
        let m = c.position(&phi, &ctx);
        let (s, co) = phi.sin_cos();
        assert!((&m.x - s * 2.0).abs() < 1e-35);
        assert!((&m.y - (1.0 - co) * 2.0).abs() < 1e-35);
        assert!(c.position(&ctx.zero(), &ctx).norm() < 1e-35);
    }

    #[test]
    fn position_matches_quadrature() {
        let ctx = RealContext::new(160).unwrap();
        let c = perturbed();
        let tol = ctx.eps() * 1e3;
        let pi = ctx.pi();
        let x = integrate(|p| c.rho(p, &ctx) * p.cos(), &ctx.zero(), &pi, &ctx, 16, &tol).unwrap();
        let y = integrate(|p| c.rho(p, &ctx) * p.sin(), &ctx.zero(), &pi, &ctx, 16, &tol).unwrap();
        let m = c.position(&pi, &ctx);
        assert!((m.x - x).abs() < 1e-40);
        assert!((m.y - y).abs() < 1e-40);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(FourierCurve::from_f64(1.0, &[(1, 0.1, 0.0)]).is_err());
        assert!(FourierCurve::from_f64(-1.0, &[]).is_err());
        assert!(FourierCurve::from_f64(1.0, &[(3, 2.0, 0.0)]).is_err());
        assert!(FourierCurve::make_constant_width(1.0, &[(4, 0.1, 0.0)]).is_err());
        // Large coefficients can still be convex: 1 + 0.6 cos 2φ + 0.5 cos 4φ > 0.
        assert!(FourierCurve::from_f64(1.0, &[(2, 0.6, 0.0), (4, 0.5, 0.0)]).is_ok());
    }

    #[test]
    fn area_matches_sector_integral() {
        let ctx = RealContext::new(128).unwrap();
        let c = FourierCurve::from_f64(1.0, &[(2, 0.1, 0.05), (3, 0.07, -0.02), (5, 0.01, 0.03)]).unwrap();
        let ev = c.eval(128);
        let half = ev.sector_integral(&ctx.zero(), &ctx.two_pi()) / 2.0;
        let area = c.area(&ctx);
        assert!((&half - &area).abs() < 1e-30, "{half:?} vs {area:?}");
    }

    #[test]
    fn arclength_inversion() {
        let ctx = RealContext::new(128).unwrap();
        let c = perturbed();
        let phi = ctx.real(2.3);
        let s = c.arclength(&phi, &ctx);
        let back = c.phi_from_arclength(&s, &ctx).unwrap();
        assert!((back - phi).abs() < 1e-30);
        assert!((c.total_length(&ctx) - c.arclength(&ctx.two_pi(), &ctx)).abs() < 1e-35);
    }

    #[test]
    fn rotated_curve_shifts_rho() {
        let ctx = RealContext::new(128).unwrap();
        let c = FourierCurve::from_f64(1.0, &[(3, 0.1, 0.02), (4, 0.01, 0.0)]).unwrap();
        let shift = ctx.real(0.4);
        let r = c.rotated(&shift).unwrap();
        let phi = ctx.real(1.1);
        assert!((r.rho(&phi, &ctx) - c.rho(&(&phi + &shift), &ctx)).abs() < 1e-35);
    }

    #[test]
    fn ellipse_has_expected_curvature() {
        let c = FourierCurve::truncated_ellipse(1.0, 0.75, 128).unwrap();
        let ctx = RealContext::new(128).unwrap();
        // Radius of curvature is a²/b at the ends of the minor axis and b²/a
        // at the ends of the major axis.
        assert!((c.rho(&ctx.zero(), &ctx) - ctx.ratio(4, 3)).abs() < 1e-30);
        assert!((c.rho(&(ctx.pi() / 2.0), &ctx) - 0.5625).abs() < 1e-30);
        assert!((c.area(&ctx) - ctx.pi() * 0.75).abs() < 1e-30);
        assert_eq!(c.symmetry_order(), 2);
    }
}
