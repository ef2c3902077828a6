//! The truncated homological equation `ψ(x+y, y) − ψ(x, y) = y g^{<K}(x, y)`
//! solved coefficientwise with the divisor `y / (e^{2πiky} − 1)` expanded
//! through Bernoulli numbers.

use rug::Rational;

use crate::error::{Error, Result};
use crate::real::{Complex, Real, RealContext};

use super::series::FourierTaylorSeries;

/// Bernoulli numbers `B_0..=B_n` with `B_1 = −1/2`, exact.
pub fn bernoulli(n: usize) -> Vec<Rational> {
    let mut b: Vec<Rational> = Vec::with_capacity(n + 1);
    b.push(Rational::from(1));
    for m in 1..=n {
        // Σ_{k=0}^{m} C(m+1, k) B_k = 0
        let mut acc = Rational::new();
        let mut binom = rug::Integer::from(1);
        for (k, bk) in b.iter().enumerate() {
            acc += Rational::from(&binom) * bk;
            binom *= (m + 1 - k) as u64;
            binom /= (k + 1) as u64;
        }
        b.push(-acc / Rational::from(m + 1));
    }
    b
}

fn rational_to_real(q: &Rational, bits: u32) -> Real {
    Real::from_float(rug::Float::with_val(bits, q))
}

/// Coefficients `d_0..=d_n` of `y / (e^{2πiky} − 1) = Σ_n d_n y^n`, with
/// `d_n = B_n (2πik)^{n−1} / n!`. Converges for `|y| < 1/|k|`.
pub fn divisor_coefficients(k: i64, n: usize, bits: u32) -> Vec<Complex> {
    assert!(k != 0, "the divisor is singular for k = 0");
    let b = bernoulli(n);
    let w = Real::pi(bits) * 2.0 * (k as f64);
    // (2πik)^{n−1}/n! built incrementally, starting from (2πik)^{−1}.
    let mut factor = Complex::new(Real::zero(bits), -w.recip());
    let mut out = Vec::with_capacity(n + 1);
    for (m, bm) in b.iter().enumerate() {
        if m > 0 {
            factor = factor.mul_i().scale(&w).div_f64(m as f64);
        }
        out.push(factor.scale(&rational_to_real(bm, bits)));
    }
    out
}

/// Solves `ψ(x+y, y) − ψ(x, y) = y g^{<K}(x, y)` with `ψ̂_0 = 0`. Products
/// are truncated at the `J_max` of `g`.
pub fn solve_homological(g: &FourierTaylorSeries, cutoff: usize, ctx: &RealContext) -> Result<FourierTaylorSeries> {
    if cutoff == 0 {
        return Err(Error::InvalidArgument("the cut-off K must be at least 1".into()));
    }
    let bits = ctx.bits().max(g.bits());
    let scale = (0..=g.jmax()).fold(Real::zero(bits), |m, j| {
        (-(g.kmax() as i64)..=g.kmax() as i64).fold(m, |m, k| m.max(g.coeff_ref(k, j).abs()))
    });
    let tol = scale * crate::real::pow2(bits, 16 - bits as i64);
    for j in 0..=g.jmax() {
        if g.coeff_ref(0, j).abs() > tol {
            return Err(Error::Unsolvable(format!(
                "the average of g does not vanish (coefficient of y^{j} is {:.3e}); \
                 the homological equation has no solution",
                g.coeff_ref(0, j).abs().to_f64()
            )));
        }
    }
    let jmax = g.jmax();
    let mut psi = FourierTaylorSeries::zeros(g.kmax(), jmax, g.is_real(), bits);
    let top = (cutoff - 1).min(g.kmax()) as i64;
    for k in 1..=top {
        for kk in [k, -k] {
            if g.is_real() && kk < 0 {
                continue;
            }
            let d = divisor_coefficients(kk, jmax, bits);
            for total in 0..=jmax {
                let mut c = Complex::zero(bits);
                for j in 0..=total {
                    c.add_mul(&d[total - j], g.coeff_ref(kk, j));
                }
                psi.set(kk, total, c);
            }
        }
    }
    Ok(psi)
}

/// Largest `|ψ(x+y, y) − ψ(x, y) − y g^{<K}(x, y)|` over `nx` equispaced
/// real `x` and `ny` equispaced real `y ∈ [−b, b]`.
pub fn homological_residual(
    psi: &FourierTaylorSeries,
    g: &FourierTaylorSeries,
    cutoff: usize,
    b: &Real,
    nx: usize,
    ny: usize,
) -> Real {
    let bits = psi.bits();
    let (low, _) = g.k_cutoff(cutoff);
    let mut worst = Real::zero(bits);
    for i in 0..nx {
        let x = Real::from_int(bits, i as i64) / (nx as f64);
        for t in 0..ny {
            let y = b * (2.0 * t as f64 / (ny - 1) as f64 - 1.0);
            let xc = Complex::from_real(x.clone());
            let yc = Complex::from_real(y.clone());
            let shifted = Complex::from_real(&x + &y);
            let lhs = psi.eval(&shifted, &yc).sub(&psi.eval(&xc, &yc));
            let rhs = low.eval(&xc, &yc).scale(&y);
            worst = worst.max(lhs.sub(&rhs).abs());
        }
    }
    worst
}

/// Bound on the residual caused by truncating `ψ` at `J_max`: twice the
/// majorant at `|y| = b` of the discarded products `d_n ĝ_{k,j} y^{n+j}`,
/// `n + j > J_max`, summed far enough that the divisor series has converged.
pub fn homological_tail(g: &FourierTaylorSeries, cutoff: usize, b: &Real) -> Real {
    let bits = g.bits();
    let jmax = g.jmax();
    let extra = 96;
    let mut total = Real::zero(bits);
    let top = (cutoff - 1).min(g.kmax()) as i64;
    for k in -top..=top {
        if k == 0 {
            continue;
        }
        let d = divisor_coefficients(k, jmax + extra, bits);
        let mut bpow = Vec::with_capacity(2 * jmax + extra + 2);
        let mut p = Real::one(bits);
        for _ in 0..=(2 * jmax + extra + 1) {
            bpow.push(p.clone());
            p *= b;
        }
        for j in 0..=jmax {
            let gj = g.coeff_ref(k, j).abs();
            if gj.is_zero() {
                continue;
            }
            for (n, dn) in d.iter().enumerate().skip(jmax + 1 - j) {
                total += dn.abs() * &gj * &bpow[n + j];
            }
        }
    }
    total * 2.0
}

/// `ω(s) = (1/2π) max_{|z| ≤ 2πs} |z/(e^z − 1)|`, the norm of the solution
/// operator of the single homological equation. The maximum sits on the
/// boundary circle and is located by sampling plus golden-section
/// refinement.
pub fn omega(s: f64) -> f64 {
    assert!(s > 0.0 && s < 1.0, "ω(s) is defined for s in (0, 1)");
    let r = 2.0 * std::f64::consts::PI * s;
    let f = |t: f64| divisor_modulus(r * t.cos(), r * t.sin());
    let n = 4096;
    let mut best = (0.0, f(0.0));
    for i in 0..n {
        let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
        let v = f(t);
        if v > best.1 {
            best = (t, v);
        }
    }
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let (mut lo, mut hi) = (best.0 - h, best.0 + h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) < f(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    f((lo + hi) / 2.0).max(best.1) / (2.0 * std::f64::consts::PI)
}

/// `|z/(e^z − 1)|` for `z = x + iy`.
fn divisor_modulus(x: f64, y: f64) -> f64 {
    let (ex, (s, c)) = (x.exp(), y.sin_cos());
    let (dr, di) = (ex * c - 1.0, ex * s);
    ((x * x + y * y) / (dr * dr + di * di)).sqrt()
}

/// `Ω(s) = (ω(s) + 1) max{1, ω(s)}`, the bound of the paired equation.
pub fn big_omega(s: f64) -> f64 {
    let w = omega(s);
    (w + 1.0) * w.max(1.0)
}
