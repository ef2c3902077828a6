//! Pseudo-spectral machinery: series are sampled on an equispaced grid in
//! `x`, where every sample is a truncated polynomial in `y`. Products and
//! compositions act pointwise on the grid and a radix-2 FFT returns to
//! Fourier coefficients.

use crate::real::{Complex, Real};

use super::series::FourierTaylorSeries;

/// Polynomial in `y`, coefficients of `y^0..=y^n`.
pub(crate) type Poly = Vec<Complex>;

pub(crate) fn poly_zero(degree: usize, bits: u32) -> Poly {
    vec![Complex::zero(bits); degree + 1]
}

/// Index of the first non-zero coefficient, `len` when all vanish.
pub(crate) fn valuation(a: &[Complex]) -> usize {
    a.iter().position(|c| !c.is_zero()).unwrap_or(a.len())
}

/// Product truncated to the length of `a`.
pub(crate) fn poly_mul(a: &[Complex], b: &[Complex]) -> Poly {
    let n = a.len();
    let bits = a[0].prec();
    let mut out = poly_zero(n - 1, bits);
    let va = valuation(a);
    let vb = valuation(b);
    for i in va..n {
        if a[i].is_zero() {
            continue;
        }
        for j in vb..(n - i).min(b.len()) {
            out[i + j].add_mul(&a[i], &b[j]);
        }
    }
    out
}

pub(crate) fn poly_add_assign(a: &mut [Complex], b: &[Complex]) {
    for (x, y) in a.iter_mut().zip(b) {
        x.add_assign(y);
    }
}

pub(crate) fn poly_sub_assign(a: &mut [Complex], b: &[Complex]) {
    for (x, y) in a.iter_mut().zip(b) {
        x.sub_assign(y);
    }
}

/// Largest coefficient modulus.
pub(crate) fn poly_max_abs(a: &[Complex]) -> Real {
    let bits = a[0].prec();
    a.iter().fold(Real::zero(bits), |m, c| m.max(c.abs()))
}

/// Equispaced grid `x_i = i/m` with `m` a power of two.
pub(crate) struct Grid {
    pub m: usize,
    pub bits: u32,
    /// `e^{-2πit/m}` for `t < m/2`.
    twiddles: Vec<Complex>,
}

impl Grid {
    /// Grid resolving `kmax` harmonics with room for quadratic products.
    pub fn for_harmonics(kmax: usize, bits: u32) -> Self {
        Self::new((3 * kmax + 1).next_power_of_two().max(8), bits)
    }

    pub fn new(m: usize, bits: u32) -> Self {
        assert!(m.is_power_of_two(), "grid size must be a power of two");
        let two_pi = Real::pi(bits) * 2.0;
        let twiddles = (0..m / 2)
            .map(|t| Complex::cis(&(-(&two_pi * (t as f64)) / (m as f64))))
            .collect();
        Grid {
            m,
            bits,
            twiddles,
        }
    }

    /// In-place unnormalized DFT; `inverse` flips the sign of the exponent.
    fn fft(&self, a: &mut [Complex], inverse: bool) {
        let n = a.len();
        debug_assert_eq!(n, self.m);
        let mut j = 0;
        for i in 1..n {
            let mut bit = n >> 1;
            while j & bit != 0 {
                j ^= bit;
                bit >>= 1;
            }
            j |= bit;
            if i < j {
                a.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for t in 0..len / 2 {
                    let w = &self.twiddles[t * stride];
                    let w = if inverse { w.conj() } else { w.clone() };
                    let v = a[start + t + len / 2].mul(&w);
                    let u = a[start + t].clone();
                    a[start + t] = u.add(&v);
                    a[start + t + len / 2] = u.sub(&v);
                }
            }
            len <<= 1;
        }
    }

    /// Samples of `Σ_{|k|≤kmax} c(k) e^{2πikx}` on the grid.
    pub fn synthesize(&self, kmax: usize, c: impl Fn(i64) -> Complex) -> Vec<Complex> {
        let m = self.m as i64;
        let mut a = vec![Complex::zero(self.bits); self.m];
        for k in -(kmax as i64)..=kmax as i64 {
            a[k.rem_euclid(m) as usize].add_assign(&c(k));
        }
        self.fft(&mut a, true);
        a
    }

    /// Fourier coefficients `c_k`, `|k| ≤ kmax`, of grid samples, indexed by
    /// `k + kmax`.
    pub fn analyze(&self, values: &[Complex], kmax: usize) -> Vec<Complex> {
        let mut a = values.to_vec();
        self.fft(&mut a, false);
        let m = self.m as i64;
        (-(kmax as i64)..=kmax as i64)
            .map(|k| a[k.rem_euclid(m) as usize].div_f64(self.m as f64))
            .collect()
    }

    /// `table[d][j][i] = ∂_x^d ĝ_j(x_i) / d!` for `d ≤ dmax`.
    pub fn derivative_table(&self, g: &FourierTaylorSeries, dmax: usize) -> Vec<Vec<Vec<Complex>>> {
        let two_pi = Real::pi(self.bits) * 2.0;
        let kmax = g.kmax();
        let mut table = Vec::with_capacity(dmax + 1);
        // factor[k] = (2πik)^d / d!
        let mut factor: Vec<Complex> = (0..=2 * kmax).map(|_| Complex::one(self.bits)).collect();
        for d in 0..=dmax {
            if d > 0 {
                for (idx, f) in factor.iter_mut().enumerate() {
                    let k = idx as i64 - kmax as i64;
                    *f = f.mul_i().scale(&(&two_pi * (k as f64))).div_f64(d as f64);
                }
            }
            let rows = (0..=g.jmax())
                .map(|j| {
                    self.synthesize(kmax, |k| g.coeff_ref(k, j).mul(&factor[(k + kmax as i64) as usize]))
                })
                .collect();
            table.push(rows);
        }
        table
    }

    /// Fourier–Taylor coefficients from per-node polynomials, dividing out
    /// `y^shift`. Returns the series and the largest dropped coefficient
    /// below `y^shift`.
    pub fn to_series(
        &self,
        values: &[Poly],
        shift: usize,
        kmax: usize,
        jmax: usize,
        real: bool,
    ) -> (FourierTaylorSeries, Real) {
        let mut g = FourierTaylorSeries::zeros(kmax, jmax, real, self.bits);
        let mut dropped = Real::zero(self.bits);
        for deg in 0..shift.min(values[0].len()) {
            let col: Vec<Complex> = values.iter().map(|p| p[deg].clone()).collect();
            for c in self.analyze(&col, kmax) {
                dropped = dropped.max(c.abs());
            }
        }
        for j in 0..=jmax {
            let deg = j + shift;
            if deg >= values[0].len() {
                break;
            }
            let col: Vec<Complex> = values.iter().map(|p| p[deg].clone()).collect();
            let coeffs = self.analyze(&col, kmax);
            for k in -(kmax as i64)..=kmax as i64 {
                if real && k < 0 {
                    continue;
                }
                g.set(k, j, coeffs[(k + kmax as i64) as usize].clone());
            }
        }
        (g, dropped)
    }
}

/// `Y^shift Σ_j Y^j Σ_d table[d][j][i] δ^d` truncated to `degree`, which is
/// `g(x_i + δ(y), Y(y)) Y^shift` when `table` is a derivative table of `g`.
/// `δ` must vanish at `y = 0`.
pub(crate) fn eval_point(
    table: &[Vec<Vec<Complex>>],
    i: usize,
    shift: usize,
    delta: &[Complex],
    ycoord: &[Complex],
) -> Poly {
    let n = delta.len();
    let bits = delta[0].prec();
    debug_assert!(delta[0].is_zero());
    let order = valuation(delta);
    let dmax = if order >= n { 0 } else { ((n - 1) / order).min(table.len() - 1) };
    // Powers δ^d for d ≤ dmax.
    let mut powers: Vec<Poly> = Vec::with_capacity(dmax + 1);
    let mut one = poly_zero(n - 1, bits);
    one[0] = Complex::one(bits);
    powers.push(one);
    for d in 1..=dmax {
        let next = poly_mul(&powers[d - 1], delta);
        powers.push(next);
    }
    let jmax = table[0].len() - 1;
    let yval = valuation(ycoord);
    let mut acc = poly_zero(n - 1, bits);
    for j in (0..=jmax).rev() {
        // Skip terms whose y-degree exceeds the truncation.
        if yval * (j + shift) >= n {
            continue;
        }
        acc = poly_mul(&acc, ycoord);
        for (d, p) in powers.iter().enumerate() {
            let c = &table[d][j][i];
            if c.is_zero() {
                continue;
            }
            let start = d * order;
            for (deg, pc) in p.iter().enumerate().skip(start) {
                acc[deg].add_mul(pc, c);
            }
        }
    }
    for _ in 0..shift {
        acc = poly_mul(&acc, ycoord);
    }
    acc
}
