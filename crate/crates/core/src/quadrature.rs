//! Arbitrary-precision quadrature and trigonometric interpolation.
//!
//! Periodic analytic integrands are handled by the trapezoid rule with node
//! doubling (spectrally convergent); finite intervals by Gauss–Legendre with
//! the order doubled until two successive results agree.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::real::{Complex, Real, RealContext};

/// Largest number of trapezoid nodes tried before giving up.
const MAX_PERIODIC_NODES: usize = 1 << 16;
/// Largest sample count for trigonometric interpolation (the transform is
/// quadratic in it).
const MAX_INTERPOLATION_NODES: usize = 1 << 12;
/// Largest Gauss–Legendre order tried before giving up.
const MAX_GL_ORDER: usize = 1024;

/// Mean of a `2π`-periodic function over one period, with the node count
/// doubled (starting at `start`) until two successive estimates differ by at
/// most `tol · max(1, |mean|)`.
pub fn periodic_mean<F>(f: F, ctx: &RealContext, start: usize, tol: &Real) -> Result<Real>
where
    F: Fn(&Real) -> Real,
{
    let two_pi = ctx.two_pi();
    let mut n = start.max(4);
    let mut sum = ctx.zero();
    for j in 0..n {
        sum += f(&(&two_pi * (j as f64) / (n as f64)));
    }
    let mut mean = &sum / (n as f64);
    while n < MAX_PERIODIC_NODES {
        // Reuse the old nodes; only the midpoints are new.
        for j in 0..n {
            let x = &two_pi * ((2 * j + 1) as f64) / ((2 * n) as f64);
            sum += f(&x);
        }
        n *= 2;
        let next = &sum / (n as f64);
        let diff = (&next - &mean).abs();
        let scale = next.abs().max(ctx.one());
        mean = next;
        if diff <= tol * &scale {
            return Ok(mean);
        }
    }
    Err(Error::NoConvergence {
        what: "periodic trapezoid rule",
        iterations: n,
        residual: f64::NAN,
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<Real>,
    pub weights: Vec<Real>,
}

impl GaussLegendre {
    /// Rule of order `n` at `bits` of precision. Rules are cached.
    pub fn rule(n: usize, bits: u32) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, u32), Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(rule) = cache.lock().expect("quadrature cache poisoned").get(&(n, bits)) {
            return rule.clone();
        }
        let rule = Arc::new(Self::compute(n, bits));
        cache
            .lock()
            .expect("quadrature cache poisoned")
            .insert((n, bits), rule.clone());
        rule
    }

    fn compute(n: usize, bits: u32) -> GaussLegendre {
        // Work with a few guard bits, then round.
        let prec = bits + 32;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let node = |guess: f64| {
            let mut x = Real::from_f64(prec, guess);
            for _ in 0..200 {
                let (p, d) = legendre(n, &x);
                if p.is_zero() {
                    break;
                }
                let step = &p / &d;
                x -= &step;
                if step.exponent().map_or(true, |e| e < x.exponent().unwrap_or(0) - prec as i32 + 4) {
                    break;
                }
            }
            let (_, d) = legendre(n, &x);
            let w = 2.0 / ((1.0 - x.square()) * d.square());
            (x, w)
        };
        for i in 0..n / 2 {
            let (x, w) = node((std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos());
            nodes.push((-&x).to_prec(bits));
            weights.push(w.to_prec(bits));
            nodes.push(x.to_prec(bits));
            weights.push(w.to_prec(bits));
        }
        if n % 2 == 1 {
            let (x, w) = node(0.0);
            nodes.push(x.to_prec(bits));
            weights.push(w.to_prec(bits));
        }
        GaussLegendre { nodes, weights }
    }

    /// `∫_a^b f` with this rule.
    pub fn integrate<F>(&self, f: F, a: &Real, b: &Real) -> Real
    where
        F: Fn(&Real) -> Real,
    {
        let mid = (a + b) / 2.0;
        let half = (b - a) / 2.0;
        let mut sum = Real::zero(a.prec().max(b.prec()));
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(&(&mid + &half * x));
        }
        sum * half
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: &Real) -> (Real, Real) {
    let prec = x.prec();
    let mut p0 = Real::one(prec);
    let mut p1 = x.clone();
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * (x * &p1) - (kf - 1.0) * &p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (Real::one(prec), Real::zero(prec));
    }
    let d = (n as f64) * (x * &p1 - &p0) / (x.square() - 1.0);
    (p1, d)
}

/// `∫_a^b f` by Gauss–Legendre, doubling the order from `start` until two
/// successive results agree to `tol · max(1, |I|)`.
pub fn integrate<F>(f: F, a: &Real, b: &Real, ctx: &RealContext, start: usize, tol: &Real) -> Result<Real>
where
    F: Fn(&Real) -> Real,
{
    let mut n = start.max(4);
    let mut prev = GaussLegendre::rule(n, ctx.bits()).integrate(&f, a, b);
    while n < MAX_GL_ORDER {
        n *= 2;
        let next = GaussLegendre::rule(n, ctx.bits()).integrate(&f, a, b);
        let diff = (&next - &prev).abs();
        let scale = next.abs().max(ctx.one());
        prev = next;
        if diff <= tol * &scale {
            return Ok(prev);
        }
    }
    Err(Error::NoConvergence {
        what: "Gauss-Legendre quadrature",
        iterations: n,
        residual: f64::NAN,
    })
}

/// Real trigonometric series `a_0 + Σ_{n≥1} (a_n cos nθ + b_n sin nθ)`.
#[derive(Clone, Debug)]
pub struct TrigSeries {
    pub a: Vec<Real>,
    pub b: Vec<Real>,
}

impl TrigSeries {
    /// Interpolates a `2π`-periodic analytic function, doubling the sample
    /// count from `start` until the top quarter of the spectrum is below
    /// `tol` times the largest coefficient.
    pub fn interpolate<F>(f: F, ctx: &RealContext, start: usize, tol: &Real) -> Result<TrigSeries>
    where
        F: Fn(&Real) -> Real,
    {
        let mut n = start.max(8);
        let mut samples: Vec<Real> = (0..n)
            .map(|j| f(&(ctx.two_pi() * (j as f64) / (n as f64))))
            .collect();
        loop {
            let series = Self::from_samples(&samples, ctx);
            let top = series.a.len();
            let scale = series
                .a
                .iter()
                .chain(&series.b)
                .map(Real::abs)
                .fold(ctx.zero(), Real::max);
            let tail = (top * 3 / 4..top)
                .map(|m| series.a[m].abs() + series.b[m].abs())
                .fold(ctx.zero(), Real::max);
            if tail <= tol * &scale {
                return Ok(series);
            }
            if n >= MAX_INTERPOLATION_NODES {
                return Err(Error::NoConvergence {
                    what: "trigonometric interpolation",
                    iterations: n,
                    residual: tail.to_f64(),
                });
            }
            let mut next = Vec::with_capacity(2 * n);
            for (j, s) in samples.into_iter().enumerate() {
                next.push(s);
                next.push(f(&(ctx.two_pi() * ((2 * j + 1) as f64) / ((2 * n) as f64))));
            }
            samples = next;
            n *= 2;
        }
    }

    /// Coefficients from equispaced samples `f(2πj/n)`. The Nyquist term is
    /// dropped, so the result has harmonics `0..n/2`.
    pub fn from_samples(samples: &[Real], ctx: &RealContext) -> TrigSeries {
        let n = samples.len();
        let table = unit_roots(n, ctx);
        let top = n / 2;
        let mut a = Vec::with_capacity(top);
        let mut b = Vec::with_capacity(top);
        for m in 0..top {
            let mut ca = ctx.zero();
            let mut cb = ctx.zero();
            for (j, s) in samples.iter().enumerate() {
                let w = &table[(j * m) % n];
                ca += s * &w.re;
                cb += s * &w.im;
            }
            let scale = if m == 0 { n as f64 } else { n as f64 / 2.0 };
            a.push(ca / scale);
            b.push(cb / scale);
        }
        TrigSeries { a, b }
    }

    pub fn eval(&self, theta: &Real) -> Real {
        let prec = theta.prec();
        let mut sum = self.a[0].to_prec(prec);
        let base = Complex::cis(theta);
        let mut w = base.clone();
        for m in 1..self.a.len() {
            sum += &self.a[m] * &w.re + &self.b[m] * &w.im;
            w = w.mul(&base);
        }
        sum
    }

    pub fn derivative(&self, theta: &Real) -> Real {
        let prec = theta.prec();
        let mut sum = Real::zero(prec);
        let base = Complex::cis(theta);
        let mut w = base.clone();
        for m in 1..self.a.len() {
            sum += (m as f64) * (&self.b[m] * &w.re - &self.a[m] * &w.im);
            w = w.mul(&base);
        }
        sum
    }

    /// `∫_0^θ` of the series.
    pub fn integral(&self, theta: &Real) -> Real {
        let mut sum = &self.a[0] * theta;
        let base = Complex::cis(theta);
        let mut w = base.clone();
        for m in 1..self.a.len() {
            let mf = m as f64;
            sum += (&self.a[m] * &w.im + &self.b[m] * (1.0 - &w.re)) / mf;
            w = w.mul(&base);
        }
        sum
    }

    /// Mean value over one period.
    pub fn mean(&self) -> &Real {
        &self.a[0]
    }
}

/// `e^{2πi j/n}` for `j = 0..n`.
fn unit_roots(n: usize, ctx: &RealContext) -> Vec<Complex> {
    (0..n)
        .map(|j| Complex::cis(&(ctx.two_pi() * (j as f64) / (n as f64))))
        .collect()
}
