//! Truncated Fourier–Taylor series `g(x, y) = Σ c_{k,j} e^{2πikx} y^j` with
//! `|k| ≤ K_max`, `0 ≤ j ≤ J_max`, and the Fourier norm that controls them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{Complex, Real};

pub const DEFAULT_KMAX: usize = 32;
pub const DEFAULT_JMAX: usize = 24;

#[derive(Clone, Debug, PartialEq)]
pub struct FourierTaylorSeries {
    kmax: usize,
    jmax: usize,
    real: bool,
    bits: u32,
    coeffs: Vec<Complex>,
}

/// One serialized coefficient. Parts are decimal strings so nothing is lost
/// to binary floating point on the way through JSON.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SeriesTerm {
    pub k: i64,
    pub j: usize,
    pub re: String,
    pub im: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SeriesJson {
    pub kmax: usize,
    pub jmax: usize,
    pub real: bool,
    pub bits: u32,
    pub terms: Vec<SeriesTerm>,
}

impl FourierTaylorSeries {
    pub fn zeros(kmax: usize, jmax: usize, real: bool, bits: u32) -> Self {
        FourierTaylorSeries {
            kmax,
            jmax,
            real,
            bits,
            coeffs: vec![Complex::zero(bits); (2 * kmax + 1) * (jmax + 1)],
        }
    }

    /// `amplitude · cos 2πkx`.
    pub fn cos_mode(k: usize, amplitude: &Real, kmax: usize, jmax: usize) -> Self {
        let bits = amplitude.prec();
        let mut g = Self::zeros(kmax, jmax, true, bits);
        if k == 0 {
            g.set(0, 0, Complex::from_real(amplitude.clone()));
        } else if k <= kmax {
            g.set(k as i64, 0, Complex::from_real(amplitude / 2.0));
        }
        g
    }

    /// The monomial `y^j`.
    pub fn monomial(j: usize, kmax: usize, jmax: usize, bits: u32) -> Self {
        let mut g = Self::zeros(kmax, jmax, true, bits);
        if j <= jmax {
            g.set(0, j, Complex::one(bits));
        }
        g
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    pub fn jmax(&self) -> usize {
        self.jmax
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    fn index(&self, k: i64, j: usize) -> Option<usize> {
        if k.unsigned_abs() as usize > self.kmax || j > self.jmax {
            return None;
        }
        Some((k + self.kmax as i64) as usize * (self.jmax + 1) + j)
    }

    /// Coefficient `c_{k,j}`; zero outside the truncation.
    pub fn coeff(&self, k: i64, j: usize) -> Complex {
        match self.index(k, j) {
            Some(i) => self.coeffs[i].clone(),
            None => Complex::zero(self.bits),
        }
    }

    pub(crate) fn coeff_ref(&self, k: i64, j: usize) -> &Complex {
        &self.coeffs[self.index(k, j).expect("coefficient inside truncation")]
    }

    /// Sets `c_{k,j}`. For real series the conjugate partner `c_{-k,j}` is
    /// set as well, and `c_{0,j}` keeps only its real part.
    pub fn set(&mut self, k: i64, j: usize, c: Complex) {
        let Some(i) = self.index(k, j) else { return };
        let c = c.to_prec(self.bits);
        if self.real {
            if k == 0 {
                self.coeffs[i] = Complex::from_real(c.re);
                return;
            }
            let partner = self.index(-k, j).expect("symmetric truncation");
            self.coeffs[partner] = c.conj();
        }
        self.coeffs[i] = c;
    }

    fn map_pairs(&self, other: &Self, f: impl Fn(&Complex, &Complex) -> Complex) -> Self {
        let kmax = self.kmax.max(other.kmax);
        let jmax = self.jmax.max(other.jmax);
        let mut out = Self::zeros(kmax, jmax, self.real && other.real, self.bits.max(other.bits));
        for k in -(kmax as i64)..=kmax as i64 {
            for j in 0..=jmax {
                let i = out.index(k, j).unwrap();
                out.coeffs[i] = f(&self.coeff(k, j), &other.coeff(k, j));
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.map_pairs(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.map_pairs(other, |a, b| a.sub(b))
    }

    pub fn scale(&self, factor: &Real) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c = c.scale(factor);
        }
        out
    }

    /// Truncated product: harmonics beyond `K_max` and powers beyond `J_max`
    /// are discarded.
    pub fn mul(&self, other: &Self) -> Self {
        let kmax = self.kmax.max(other.kmax) as i64;
        let jmax = self.jmax.max(other.jmax);
        let mut out = Self::zeros(kmax as usize, jmax, self.real && other.real, self.bits.max(other.bits));
        for k1 in -(self.kmax as i64)..=self.kmax as i64 {
            for j1 in 0..=self.jmax {
                let a = self.coeff_ref(k1, j1);
                if a.is_zero() {
                    continue;
                }
                for k2 in -(other.kmax as i64)..=other.kmax as i64 {
                    let k = k1 + k2;
                    if k.abs() > kmax {
                        continue;
                    }
                    for j2 in 0..=(jmax - j1).min(other.jmax) {
                        let b = other.coeff_ref(k2, j2);
                        if b.is_zero() {
                            continue;
                        }
                        let i = out.index(k, j1 + j2).unwrap();
                        out.coeffs[i].add_mul(a, b);
                    }
                }
            }
        }
        out
    }

    /// `∂g/∂x`.
    pub fn dx(&self) -> Self {
        let two_pi = Real::pi(self.bits) * 2.0;
        let mut out = self.clone();
        for k in -(self.kmax as i64)..=self.kmax as i64 {
            let w = &two_pi * (k as f64);
            for j in 0..=self.jmax {
                let i = self.index(k, j).unwrap();
                out.coeffs[i] = self.coeffs[i].mul_i().scale(&w);
            }
        }
        out
    }

    /// Zero-mean antiderivative in `x`. The `k = 0` part of `g` has no
    /// periodic antiderivative and is ignored.
    pub fn antiderivative_x(&self) -> Self {
        let two_pi = Real::pi(self.bits) * 2.0;
        let mut out = Self::zeros(self.kmax, self.jmax, self.real, self.bits);
        for k in -(self.kmax as i64)..=self.kmax as i64 {
            if k == 0 {
                continue;
            }
            let w = &two_pi * (k as f64);
            for j in 0..=self.jmax {
                let i = self.index(k, j).unwrap();
                // c / (2πik) = -i c / (2πk)
                out.coeffs[i] = self.coeffs[i].mul_i().neg().scale(&w.recip());
            }
        }
        out
    }

    /// The average over `x`, `g*(y) = ĝ_0(y)`.
    pub fn mean(&self) -> Self {
        let mut out = Self::zeros(self.kmax, self.jmax, self.real, self.bits);
        for j in 0..=self.jmax {
            out.set(0, j, self.coeff(0, j));
        }
        out
    }

    /// The part proportional to `y^j`, as a function of `x` alone.
    pub fn y_slice(&self, j: usize) -> Self {
        let mut out = Self::zeros(self.kmax, 0, self.real, self.bits);
        for k in -(self.kmax as i64)..=self.kmax as i64 {
            let i = out.index(k, 0).unwrap();
            out.coeffs[i] = self.coeff(k, j);
        }
        out
    }

    /// Same coefficients under a different truncation.
    pub fn truncated(&self, kmax: usize, jmax: usize) -> Self {
        let mut out = Self::zeros(kmax, jmax, self.real, self.bits);
        for k in -(kmax as i64)..=kmax as i64 {
            for j in 0..=jmax {
                let i = out.index(k, j).unwrap();
                out.coeffs[i] = self.coeff(k, j);
            }
        }
        out
    }

    /// `(g^{<K}, g^{≥K})`: harmonics with `|k| < K` and the rest.
    pub fn k_cutoff(&self, cutoff: usize) -> (Self, Self) {
        let mut low = self.clone();
        let mut high = self.clone();
        for k in -(self.kmax as i64)..=self.kmax as i64 {
            let below = (k.unsigned_abs() as usize) < cutoff;
            for j in 0..=self.jmax {
                let i = self.index(k, j).unwrap();
                if below {
                    high.coeffs[i] = Complex::zero(self.bits);
                } else {
                    low.coeffs[i] = Complex::zero(self.bits);
                }
            }
        }
        (low, high)
    }

    /// Majorant of `sup_{|y|<b} |ĝ_k(y)|` by `Σ_j |c_{k,j}| b^j`.
    pub fn harmonic_norm(&self, k: i64, b: &Real) -> Real {
        let mut acc = Real::zero(self.bits);
        let mut bj = Real::one(self.bits);
        for j in 0..=self.jmax {
            acc += self.coeff_ref(k, j).abs() * &bj;
            bj *= b;
        }
        acc
    }

    /// Fourier norm `Σ_k ‖ĝ_k‖_b e^{2π|k|a}` with the coefficient-sum
    /// majorant for `‖ĝ_k‖_b`.
    pub fn fourier_norm(&self, a: &Real, b: &Real) -> Real {
        let two_pi = Real::pi(self.bits) * 2.0;
        let mut acc = Real::zero(self.bits);
        for k in -(self.kmax as i64)..=self.kmax as i64 {
            let weight = (&two_pi * a * (k.unsigned_abs() as f64)).exp();
            acc += self.harmonic_norm(k, b) * weight;
        }
        acc
    }

    /// `g(x, y)` at complex arguments.
    pub fn eval(&self, x: &Complex, y: &Complex) -> Complex {
        let two_pi = Real::pi(self.bits) * 2.0;
        // e^{2πix}
        let ix = x.mul_i().scale(&two_pi);
        let base = Complex::cis(&ix.im).scale(&ix.re.exp());
        let inv = Complex::cis(&(-&ix.im)).scale(&(-&ix.re).exp());
        let horner = |k: i64| {
            let mut h = Complex::zero(self.bits);
            for j in (0..=self.jmax).rev() {
                h = h.mul(y);
                h.add_assign(self.coeff_ref(k, j));
            }
            h
        };
        let mut acc = horner(0);
        let mut wk = Complex::one(self.bits);
        let mut wk_neg = Complex::one(self.bits);
        for k in 1..=self.kmax as i64 {
            wk = wk.mul(&base);
            wk_neg = wk_neg.mul(&inv);
            acc.add_mul(&horner(k), &wk);
            acc.add_mul(&horner(-k), &wk_neg);
        }
        acc
    }

    /// Real-argument evaluation returning the real part.
    pub fn eval_real(&self, x: &Real, y: &Real) -> Real {
        self.eval(&Complex::from_real(x.clone()), &Complex::from_real(y.clone())).re
    }

    /// Largest `|g|` over a sample grid of the closed domain
    /// `|Im x| ≤ a`, `|y| ≤ b`: `nx` real parts times three imaginary parts,
    /// `ny` points on the circle `|y| = b` and the centre.
    pub fn sup_on_grid(&self, a: &Real, b: &Real, nx: usize, ny: usize) -> Real {
        let two_pi = Real::pi(self.bits) * 2.0;
        let mut worst = Real::zero(self.bits);
        let mut ys = vec![Complex::zero(self.bits)];
        for t in 0..ny {
            ys.push(Complex::cis(&(&two_pi * (t as f64) / (ny as f64))).scale(b));
        }
        for i in 0..nx {
            let re = Real::from_int(self.bits, i as i64) / (nx as f64);
            for im in [-a.clone(), Real::zero(self.bits), a.clone()] {
                let x = Complex::new(re.clone(), im);
                for y in &ys {
                    worst = worst.max(self.eval(&x, y).abs());
                }
            }
        }
        worst
    }

    /// Geometric-majorant estimate of the neglected part at `|y| = b`,
    /// `|Im x| = a`: the decay ratio of the last retained `y`-columns and
    /// Fourier harmonics is extrapolated to infinity.
    pub fn tail_estimate(&self, a: &Real, b: &Real) -> Real {
        let bits = self.bits;
        let two_pi = Real::pi(bits) * 2.0;
        // Column sizes s_j = Σ_k |c_{k,j}| b^j e^{2π|k|a}.
        let mut cols = Vec::with_capacity(self.jmax + 1);
        let mut bj = Real::one(bits);
        for j in 0..=self.jmax {
            let mut s = Real::zero(bits);
            for k in -(self.kmax as i64)..=self.kmax as i64 {
                let w = (&two_pi * a * (k.unsigned_abs() as f64)).exp();
                s += self.coeff_ref(k, j).abs() * w;
            }
            cols.push(s * &bj);
            bj *= b;
        }
        // Harmonic sizes h_k = ‖ĝ_k‖_b e^{2π|k|a} for k ≥ 0 (|k| folded).
        let mut rows = Vec::with_capacity(self.kmax + 1);
        for k in 0..=self.kmax as i64 {
            let w = (&two_pi * a * (k as f64)).exp();
            let mut h = self.harmonic_norm(k, b) * &w;
            if k > 0 {
                h += self.harmonic_norm(-k, b) * &w;
            }
            rows.push(h);
        }
        geometric_tail(&cols) + geometric_tail(&rows)
    }

    pub fn to_json(&self) -> SeriesJson {
        let digits = crate::real::decimal_digits(self.bits);
        let mut terms = Vec::new();
        for k in -(self.kmax as i64)..=self.kmax as i64 {
            for j in 0..=self.jmax {
                let c = self.coeff_ref(k, j);
                if c.is_zero() {
                    continue;
                }
                terms.push(SeriesTerm {
                    k,
                    j,
                    re: c.re.to_decimal(digits),
                    im: c.im.to_decimal(digits),
                });
            }
        }
        SeriesJson {
            kmax: self.kmax,
            jmax: self.jmax,
            real: self.real,
            bits: self.bits,
            terms,
        }
    }

    pub fn from_json(data: &SeriesJson) -> Result<Self> {
        let mut g = Self::zeros(data.kmax, data.jmax, data.real, data.bits);
        for t in &data.terms {
            if t.k.unsigned_abs() as usize > data.kmax || t.j > data.jmax {
                return Err(Error::InvalidArgument(format!(
                    "term ({}, {}) outside the declared truncation",
                    t.k, t.j
                )));
            }
            let c = Complex::new(Real::parse(data.bits, &t.re)?, Real::parse(data.bits, &t.im)?);
            if data.real && t.k < 0 {
                continue;
            }
            g.set(t.k, t.j, c);
        }
        Ok(g)
    }
}

/// Tail `Σ_{n≥N} s_n` of a sequence of non-negative sizes `s_0..s_{N-1}`,
/// extrapolated geometrically with the slowest per-step decay rate among the
/// last few non-zero entries. Without a usable rate the largest of those
/// entries times `N` is returned, a crude figure for series that have not
/// started to converge.
pub(crate) fn geometric_tail(sizes: &[Real]) -> Real {
    let n = sizes.len();
    let bits = sizes.first().map_or(64, |s| s.prec());
    let nonzero: Vec<(usize, &Real)> = sizes.iter().enumerate().filter(|(_, s)| !s.is_zero()).collect();
    let recent = &nonzero[nonzero.len().saturating_sub(4)..];
    match recent {
        [] => return Real::zero(bits),
        [(i, s)] => return if *i + 1 == n { (*s).clone() } else { Real::zero(bits) },
        _ => {}
    }
    let peak = recent.iter().fold(Real::zero(bits), |m, (_, s)| m.max((*s).clone()));
    let mut rate = Real::zero(bits);
    for w in recent.windows(2) {
        let (i0, s0) = w[0];
        let (i1, s1) = w[1];
        let step = (s1 / s0).powf(&Real::from_f64(bits, 1.0 / (i1 - i0) as f64));
        rate = rate.max(step);
    }
    if rate >= 0.9 {
        return peak * (n as f64);
    }
    let mut first = Real::zero(bits);
    for (i, s) in recent {
        first = first.max(*s * rate.powi((n - i) as i32));
    }
    first / (1.0 - &rate)
}
