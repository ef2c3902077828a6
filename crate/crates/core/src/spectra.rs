//! Experiments on top of the orbit solver: exponential fits of the action
//! gaps, the `q⁻²` boundary asymptotics of perimeters and circumscribed
//! areas, the Lazutkin and Tabachnikov coordinate charts, and the
//! Fourier–Taylor expansion of the billiard map near the boundary.

use serde::{Deserialize, Serialize};

use crate::billiard::inner_step_phi;
use crate::curves::{CurveEval, FourierCurve};
use crate::error::{Error, Result};
use crate::normal_form::grid::{Grid, Poly};
use crate::normal_form::MapSeries;
use crate::orbits::{find_orbit_pair, Flag, SpectrumRecord, TwistProblem};
use crate::quadrature::TrigSeries;
use crate::real::{Complex, Real, RealContext};

/// Least-squares line `v = intercept + slope·u`.
#[derive(Clone, Debug)]
pub struct LineFit {
    pub slope: Real,
    pub intercept: Real,
    pub r_squared: Real,
    pub points: usize,
}

/// Ordinary least squares in the precision of the data.
pub fn fit_line(u: &[Real], v: &[Real]) -> Result<LineFit> {
    if u.len() != v.len() {
        return Err(Error::InvalidArgument("abscissae and ordinates differ in length".into()));
    }
    let n = u.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("a line needs two points, got {n}")));
    }
    let bits = u.iter().chain(v).map(Real::prec).max().unwrap_or(64);
    let nf = n as f64;
    let mean_u = u.iter().fold(Real::zero(bits), |s, x| s + x) / nf;
    let mean_v = v.iter().fold(Real::zero(bits), |s, x| s + x) / nf;
    let mut suu = Real::zero(bits);
    let mut suv = Real::zero(bits);
    let mut svv = Real::zero(bits);
    for (x, y) in u.iter().zip(v) {
        let du = x - &mean_u;
        let dv = y - &mean_v;
        suu += du.square();
        suv += &du * &dv;
        svv += dv.square();
    }
    if suu.is_zero() {
        return Err(Error::InsufficientData("all abscissae coincide".into()));
    }
    let slope = &suv / &suu;
    let intercept = &mean_v - &(&slope * &mean_u);
    let r_squared = if svv.is_zero() {
        Real::one(bits)
    } else {
        suv.square() / (&suu * &svv)
    };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
        points: n,
    })
}

/// Fitted law `Δ ≈ K e^{−2πα u}`.
#[derive(Clone, Debug)]
pub struct ExpFit {
    pub alpha: Real,
    pub log_k: Real,
    pub r_squared: Real,
    pub points: usize,
}

impl ExpFit {
    fn from_line(line: LineFit) -> Self {
        let two_pi = Real::pi(line.slope.prec()) * 2.0;
        ExpFit {
            alpha: -(&line.slope / &two_pi),
            log_k: line.intercept,
            r_squared: line.r_squared,
            points: line.points,
        }
    }

    /// Plain-number summary for reports.
    pub fn summary(&self) -> FitSummary {
        FitSummary {
            alpha: self.alpha.to_f64(),
            log_k: self.log_k.to_f64(),
            r_squared: self.r_squared.to_f64(),
            points: self.points,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub alpha: f64,
    pub log_k: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Records whose gap resolves above the precision floor.
fn usable(records: &[SpectrumRecord]) -> Vec<&SpectrumRecord> {
    records
        .iter()
        .filter(|r| !r.has_flag(Flag::PrecisionFloor) && r.delta > 0.0)
        .collect()
}

fn fit_against(points: Vec<(Real, &SpectrumRecord)>) -> Result<ExpFit> {
    if points.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "an exponential fit needs at least 4 resolved gaps, got {}",
            points.len()
        )));
    }
    let u: Vec<Real> = points.iter().map(|(u, _)| u.clone()).collect();
    let v: Vec<Real> = points.iter().map(|(_, r)| r.delta.ln()).collect();
    fit_line(&u, &v).map(ExpFit::from_line)
}

/// Fits `log Δ = log K − 2πα q/p` over the records of rotation numbers
/// `p/q`. Gaps at the precision floor are skipped.
pub fn fit_exponential(records: &[SpectrumRecord], p: u64) -> Result<ExpFit> {
    if p == 0 {
        return Err(Error::InvalidArgument("p must be positive".into()));
    }
    let points = usable(records)
        .into_iter()
        .map(|r| (Real::from_int(r.delta.prec(), r.q as i64) / (p as f64), r))
        .collect();
    fit_against(points)
}

/// Fits `log Δ = log K − 2πα q/|np − mq|` for rotation numbers approaching
/// the resonance `m/n`.
pub fn fit_exponential_resonant(records: &[SpectrumRecord], n: u64, m: u64) -> Result<ExpFit> {
    if n == 0 {
        return Err(Error::InvalidArgument("the resonance denominator must be positive".into()));
    }
    let points = usable(records)
        .into_iter()
        .filter_map(|r| {
            let gap = ((n * r.p) as i64 - (m * r.q) as i64).unsigned_abs();
            (gap != 0).then(|| (Real::from_int(r.delta.prec(), r.q as i64) / (gap as f64), r))
        })
        .collect();
    fit_against(points)
}

/// Value at `h = 0` of the polynomial through `(h_i, f_i)` (Neville).
pub fn extrapolate_to_zero(h: &[Real], f: &[Real]) -> Result<Real> {
    if h.len() != f.len() || h.is_empty() {
        return Err(Error::InsufficientData("extrapolation needs matching, non-empty data".into()));
    }
    let mut p: Vec<Real> = f.to_vec();
    let n = h.len();
    for level in 1..n {
        for i in 0..n - level {
            let (hi, hj) = (&h[i], &h[i + level]);
            let denom = hj - hi;
            if denom.is_zero() {
                return Err(Error::InvalidArgument("extrapolation abscissae must differ".into()));
            }
            p[i] = (hj * &p[i] - hi * &p[i + 1]) / denom;
        }
    }
    Ok(p.swap_remove(0))
}

/// Richardson extrapolation of `f(q) = c + c₁q⁻² + c₂q⁻⁴ + …` to `q → ∞`.
pub fn richardson_in_q(q: &[u64], f: &[Real]) -> Result<Real> {
    if q.len() < 2 {
        return Err(Error::InsufficientData("Richardson extrapolation needs at least two q".into()));
    }
    let bits = f.iter().map(Real::prec).max().unwrap_or(64);
    let h: Vec<Real> = q
        .iter()
        .map(|&q| Real::from_int(bits, q as i64).square().recip())
        .collect();
    extrapolate_to_zero(&h, f)
}

/// `l₁ = −(1/24)(p ∫ κ^{2/3} ds)³`, the `q⁻²` coefficient of the maximal
/// perimeter of `(p,q)` orbits.
pub fn marvizi_melrose_l1(curve: &FourierCurve, p: u64, ctx: &RealContext) -> Result<Real> {
    if p == 0 {
        return Err(Error::InvalidArgument("p must be positive".into()));
    }
    let integral = curve.curvature_power_integral(2, 3, ctx)?;
    let cube = (integral * (p as f64)).powi(3);
    Ok(-(cube / 24.0))
}

/// `l₁` from Richardson extrapolation of `q²(L^(p,q) − p·|Γ|)` over
/// `q_list`, where `L^(p,q)` is the longest `(p,q)` perimeter.
pub fn l1_empirical(curve: &FourierCurve, p: u64, q_list: &[u64], ctx: &RealContext) -> Result<Real> {
    let problem = TwistProblem::inner(curve.clone());
    let length = curve.total_length(ctx) * (p as f64);
    let mut values = Vec::with_capacity(q_list.len());
    for &q in q_list {
        let pair = find_orbit_pair(&problem, p, q, ctx)?;
        let qf = ctx.int(q as i64);
        values.push((&pair.minimizing.action - &length) * qf.square());
    }
    richardson_in_q(q_list, &values)
}

/// The `q⁻²` coefficient of the circumscribed `q`-gon area, two readings of
/// the boundary formula.
#[derive(Clone, Debug)]
pub struct TabachnikovA1 {
    /// `(1/24)(∫ κ^{1/3} ds)³`, which the circle confirms.
    pub cubed: Real,
    /// `(1/24)∫ κ^{1/3} ds` without the cube; reported for comparison only.
    pub uncubed: Real,
}

pub fn tabachnikov_a1(curve: &FourierCurve, ctx: &RealContext) -> Result<TabachnikovA1> {
    let integral = curve.curvature_power_integral(1, 3, ctx)?;
    Ok(TabachnikovA1 {
        cubed: integral.powi(3) / 24.0,
        uncubed: integral / 24.0,
    })
}

/// `a₁` from Richardson extrapolation of `q²(A^(1,q) − Area)` over
/// `q_list`, where `A^(1,q)` is the least circumscribed `q`-gon area.
pub fn a1_empirical(curve: &FourierCurve, q_list: &[u64], ctx: &RealContext) -> Result<Real> {
    let problem = TwistProblem::outer(curve.clone());
    let mut values = Vec::with_capacity(q_list.len());
    for &q in q_list {
        let pair = find_orbit_pair(&problem, 1, q, ctx)?;
        // The outer action is the area between the polygon and the curve.
        let qf = ctx.int(q as i64);
        values.push(&pair.minimizing.action * qf.square());
    }
    richardson_in_q(q_list, &values)
}

/// Circumscribed area `A^(1,q)` of the minimizing outer orbit.
pub fn circumscribed_area(curve: &FourierCurve, q: u64, ctx: &RealContext) -> Result<Real> {
    let pair = find_orbit_pair(&TwistProblem::outer(curve.clone()), 1, q, ctx)?;
    Ok(curve.area(ctx) + pair.minimizing.action)
}

/// A chart `x = k ∫_0^φ w(φ') dφ'` in the tangent angle with
/// `k⁻¹ = ∫_0^{2π} w`, as used by both boundary coordinate systems.
struct AngleChart {
    ev: std::sync::Arc<CurveEval>,
    weight: TrigSeries,
    k: Real,
}

impl AngleChart {
    fn new(curve: &FourierCurve, exponent: &Real, ctx: &RealContext) -> Result<Self> {
        let ev = curve.eval(ctx.bits());
        let tol = ctx.eps() * 16.0;
        let weight = TrigSeries::interpolate(|phi| ev.rho(phi).powf(exponent), ctx, 16, &tol)?;
        let k = (weight.mean() * ctx.two_pi()).recip();
        Ok(AngleChart { ev, weight, k })
    }

    fn x(&self, phi: &Real) -> Real {
        &self.k * self.weight.integral(phi)
    }

    /// Inverse of [`x`](Self::x) on the lift.
    fn phi(&self, x: &Real, ctx: &RealContext) -> Result<Real> {
        let turns = x.floor();
        let frac = x - &turns;
        let two_pi = ctx.two_pi();
        let (mut lo, mut hi) = (ctx.zero(), two_pi.clone());
        let mut phi = &frac * &two_pi;
        let tol = ctx.eps() * 64.0;
        for _ in 0..200 {
            let f = self.x(&phi) - &frac;
            if f > 0.0 {
                hi = phi.clone();
            } else {
                lo = phi.clone();
            }
            let slope = &self.k * self.weight.eval(&phi);
            let mut next = &phi - &(&f / &slope);
            if !next.is_finite() || next < lo || next > hi {
                next = (&lo + &hi) / 2.0;
            }
            let step = (&next - &phi).abs();
            phi = next;
            if step <= tol || (&hi - &lo) <= tol {
                return Ok(phi + turns * two_pi);
            }
        }
        Err(Error::NoConvergence {
            what: "boundary chart inversion",
            iterations: 200,
            residual: f64::NAN,
        })
    }
}

/// Lazutkin coordinates of the inner billiard,
/// `x = k ∫_0^s ρ^{−2/3} ds`, `y = 4k ρ^{1/3} sin(r/2)`, with `k` making the
/// period of `x` equal to one.
pub struct LazutkinChart {
    chart: AngleChart,
    curve: FourierCurve,
}

impl LazutkinChart {
    pub fn new(curve: &FourierCurve, ctx: &RealContext) -> Result<Self> {
        // ρ^{-2/3} ds = ρ^{1/3} dφ.
        let chart = AngleChart::new(curve, &ctx.ratio(1, 3), ctx)?;
        Ok(LazutkinChart {
            chart,
            curve: curve.clone(),
        })
    }

    /// Normalising constant `k`.
    pub fn k(&self) -> &Real {
        &self.chart.k
    }

    fn y_scale(&self, phi: &Real) -> Real {
        &self.chart.k * self.chart.ev.rho(phi).cbrt() * 4.0
    }

    /// `(x, y)` from the lifted tangent angle and the incidence angle.
    pub fn from_phi(&self, phi: &Real, r: &Real) -> (Real, Real) {
        let y = self.y_scale(phi) * (r / 2.0).sin();
        (self.chart.x(phi), y)
    }

    /// Lifted tangent angle and incidence angle of `(x, y)`.
    pub fn to_phi(&self, x: &Real, y: &Real, ctx: &RealContext) -> Result<(Real, Real)> {
        let phi = self.chart.phi(x, ctx)?;
        let sine = y / self.y_scale(&phi);
        if sine.abs() > 1.0 {
            return Err(Error::InvalidArgument(format!("y = {y:?} is outside the chart")));
        }
        Ok((phi, sine.asin() * 2.0))
    }

    /// The billiard map in these coordinates, continued analytically to
    /// `y < 0` (chords leaving backwards).
    pub fn map(&self, x: &Real, y: &Real, ctx: &RealContext) -> Result<(Real, Real)> {
        let (phi, r) = self.to_phi(x, y, ctx)?;
        let (phi1, r1) = continued_inner_step(&self.chart.ev, &phi, &r, ctx)?;
        Ok(self.from_phi(&phi1, &r1))
    }

    pub fn curve(&self) -> &FourierCurve {
        &self.curve
    }
}

/// Inner step with the incidence angle continued through zero:
/// `r < 0` follows the same line backwards.
fn continued_inner_step(ev: &CurveEval, phi: &Real, r: &Real, ctx: &RealContext) -> Result<(Real, Real)> {
    // Below √eps the chord is shorter than the solver can resolve and the
    // first-order step `(φ + 2r, r)` is exact to working precision.
    if r.abs() <= ctx.eps().sqrt() {
        return Ok((phi + &(r * 2.0), r.clone()));
    }
    if r > &0.0 {
        let (phi1, r1, _) = inner_step_phi(ev, phi, r, ctx)?;
        return Ok((phi1, r1));
    }
    let pi = ctx.pi();
    let (phi1, r1, _) = inner_step_phi(ev, phi, &(&pi + r), ctx)?;
    Ok((phi1 - ctx.two_pi(), r1 - pi))
}

/// `(x, y)` Lazutkin coordinates of the point at arclength `s` with
/// incidence angle `r`.
pub fn lazutkin_coords(curve: &FourierCurve, s: &Real, r: &Real, ctx: &RealContext) -> Result<(Real, Real)> {
    let chart = LazutkinChart::new(curve, ctx)?;
    let total = curve.total_length(ctx);
    let turns = (s / &total).floor();
    let phi = curve.phi_from_arclength(&(s - &(&turns * &total)), ctx)? + turns * ctx.two_pi();
    Ok(chart.from_phi(&phi, r))
}

/// Arclength and incidence angle of Lazutkin coordinates `(x, y)`.
pub fn lazutkin_inverse(curve: &FourierCurve, x: &Real, y: &Real, ctx: &RealContext) -> Result<(Real, Real)> {
    let chart = LazutkinChart::new(curve, ctx)?;
    let (phi, r) = chart.to_phi(x, y, ctx)?;
    let turns = (&phi / &ctx.two_pi()).floor();
    let base = &phi - &(&turns * &ctx.two_pi());
    Ok((curve.arclength(&base, ctx) + turns * curve.total_length(ctx), r))
}

/// Tabachnikov coordinates of the outer billiard,
/// `x = k ∫_0^α κ^{−2/3} dα`, `y = 2k κ^{1/3}(α) r`.
pub struct TabachnikovChart {
    chart: AngleChart,
}

impl TabachnikovChart {
    pub fn new(curve: &FourierCurve, ctx: &RealContext) -> Result<Self> {
        Ok(TabachnikovChart {
            chart: AngleChart::new(curve, &ctx.ratio(2, 3), ctx)?,
        })
    }

    pub fn k(&self) -> &Real {
        &self.chart.k
    }

    fn y_scale(&self, alpha: &Real) -> Real {
        &self.chart.k * 2.0 / self.chart.ev.rho(alpha).cbrt()
    }

    pub fn from_alpha(&self, alpha: &Real, r: &Real) -> (Real, Real) {
        (self.chart.x(alpha), self.y_scale(alpha) * r)
    }

    pub fn to_alpha(&self, x: &Real, y: &Real, ctx: &RealContext) -> Result<(Real, Real)> {
        let alpha = self.chart.phi(x, ctx)?;
        let r = y / self.y_scale(&alpha);
        Ok((alpha, r))
    }
}

pub fn tabachnikov_coords(curve: &FourierCurve, alpha: &Real, r: &Real, ctx: &RealContext) -> Result<(Real, Real)> {
    if r < &0.0 {
        return Err(Error::InvalidArgument("the tangent distance must be non-negative".into()));
    }
    Ok(TabachnikovChart::new(curve, ctx)?.from_alpha(alpha, r))
}

pub fn tabachnikov_inverse(curve: &FourierCurve, x: &Real, y: &Real, ctx: &RealContext) -> Result<(Real, Real)> {
    TabachnikovChart::new(curve, ctx)?.to_alpha(x, y, ctx)
}

/// Radius of the `y`-interval sampled by [`billiard_map_fit`].
pub const SERIES_SAMPLE_RADIUS: f64 = 0.05;
/// Extra Chebyshev degrees fitted beyond the kept powers.
const FIT_GUARD_DEGREES: usize = 24;

/// Outcome of [`billiard_map_fit`].
#[derive(Clone, Debug)]
pub struct MapSeriesFit {
    /// Order-2 series of the billiard map in Lazutkin coordinates.
    pub map: MapSeries,
    /// Largest coefficient found below the claimed order: the `y⁰..y²`
    /// terms of `x₁ − x − y` and the `y⁰..y³` terms of `y₁ − y`.
    pub structure_defect: Real,
    /// Largest misfit of the sampled map at check points between the nodes.
    pub fit_residual: Real,
    /// Size of the last fitted Chebyshev coefficients, the expected misfit.
    pub fit_tail: Real,
    /// Coefficient of `y` in `x₁ − x`, averaged over `x`.
    pub linear_coefficient: Real,
}

/// Fourier–Taylor series of the billiard map in Lazutkin coordinates,
/// written as `x₁ = x + y + y²g₁`, `y₁ = y + y³g₂`.
pub fn billiard_map_series(curve: &FourierCurve, jmax: usize, kmax: usize, ctx: &RealContext) -> Result<MapSeries> {
    Ok(billiard_map_fit(curve, jmax, kmax, ctx)?.map)
}

/// [`billiard_map_series`] with fit diagnostics. The exact map is sampled on
/// an equispaced grid in `x` times Chebyshev nodes in `y ∈ [−b, b]`; each
/// column is fitted by a Chebyshev series whose degree exceeds the kept
/// powers, converted to monomials, and transformed in `x`.
pub fn billiard_map_fit(curve: &FourierCurve, jmax: usize, kmax: usize, ctx: &RealContext) -> Result<MapSeriesFit> {
    let bits = ctx.bits();
    let chart = LazutkinChart::new(curve, ctx)?;
    let grid = Grid::new((2 * kmax + 2).next_power_of_two().max(8), bits);
    let b = ctx.real(SERIES_SAMPLE_RADIUS);
    // Powers y^0..y^{3+jmax} are kept.
    let kept = 3 + jmax;
    let nodes = kept + 1 + FIT_GUARD_DEGREES;
    let nodes = nodes + nodes % 2;
    let pi = ctx.pi();
    let theta: Vec<Real> = (0..nodes)
        .map(|n| &pi * ((2 * n + 1) as f64) / ((2 * nodes) as f64))
        .collect();
    let t_nodes: Vec<Real> = theta.iter().map(Real::cos).collect();
    let basis = chebyshev_basis(&theta);
    let monomials = chebyshev_to_monomial(nodes - 1, bits);
    let b_powers: Vec<Real> = (0..=kept).map(|j| b.powi(j as i32)).collect();

    let mut d1: Vec<Poly> = Vec::with_capacity(grid.m);
    let mut d2: Vec<Poly> = Vec::with_capacity(grid.m);
    let mut fit_residual = ctx.zero();
    let mut fit_tail = ctx.zero();
    let check_stride = (grid.m / 8).max(1);
    for i in 0..grid.m {
        let x = ctx.int(i as i64) / (grid.m as f64);
        let mut v1 = Vec::with_capacity(nodes);
        let mut v2 = Vec::with_capacity(nodes);
        for t in &t_nodes {
            let y = &b * t;
            let (x1, y1) = chart.map(&x, &y, ctx)?;
            v1.push(x1 - &x - &y);
            v2.push(y1 - &y);
        }
        let c1 = chebyshev_coefficients(&v1, &basis);
        let c2 = chebyshev_coefficients(&v2, &basis);
        let tail = |c: &[Real]| c[c.len() - 4..].iter().fold(ctx.zero(), |m, a| m.max(a.abs()));
        fit_tail = fit_tail.max(tail(&c1)).max(tail(&c2));
        if i % check_stride == 0 {
            for n in 0..nodes - 1 {
                let mid = ((&theta[n] + &theta[n + 1]) / 2.0).cos();
                let y = &b * &mid;
                let (x1, y1) = chart.map(&x, &y, ctx)?;
                let e1 = (chebyshev_eval(&c1, &mid) - (x1 - &x - &y)).abs();
                let e2 = (chebyshev_eval(&c2, &mid) - (y1 - &y)).abs();
                fit_residual = fit_residual.max(e1).max(e2);
            }
        }
        d1.push(to_monomials(&c1, &monomials, &b_powers));
        d2.push(to_monomials(&c2, &monomials, &b_powers));
    }
    let allowed = &fit_tail * 100.0 + ctx.eps() * 1e6;
    if fit_residual > allowed {
        return Err(Error::Truncation(format!(
            "billiard map fit residual {} exceeds its tail estimate {}",
            fit_residual.to_f64(),
            allowed.to_f64()
        )));
    }
    let linear: Vec<Complex> = d1.iter().map(|p| p[1].clone()).collect();
    let linear_coefficient = grid.analyze(&linear, 0)[0].re.clone() + 1.0;
    let (g1, low1) = grid.to_series(&d1, 2, kmax, jmax, true);
    let (g2, low2) = grid.to_series(&d2, 3, kmax, jmax, true);
    Ok(MapSeriesFit {
        map: MapSeries::new(2, g1, g2)?,
        structure_defect: low1.max(low2),
        fit_residual,
        fit_tail,
        linear_coefficient,
    })
}

/// `cos(m θ_n)` for the Chebyshev nodes `θ_n = π(n + ½)/N`.
fn chebyshev_basis(theta: &[Real]) -> Vec<Vec<Real>> {
    (0..theta.len())
        .map(|m| theta.iter().map(|th| (th * (m as f64)).cos()).collect())
        .collect()
}

/// Chebyshev coefficients `a_m` of samples at `t_n = cos θ_n`, with
/// `f ≈ Σ a_m T_m(t)`.
fn chebyshev_coefficients(values: &[Real], basis: &[Vec<Real>]) -> Vec<Real> {
    let n = values.len();
    let bits = values[0].prec();
    basis
        .iter()
        .enumerate()
        .map(|(m, row)| {
            let mut acc = Real::zero(bits);
            for (v, c) in values.iter().zip(row) {
                acc += v * c;
            }
            let scale = if m == 0 { n as f64 } else { n as f64 / 2.0 };
            acc / scale
        })
        .collect()
}

fn chebyshev_eval(c: &[Real], t: &Real) -> Real {
    // Clenshaw.
    let bits = t.prec();
    let mut b1 = Real::zero(bits);
    let mut b2 = Real::zero(bits);
    for a in c.iter().skip(1).rev() {
        let b0 = t * &b1 * 2.0 - &b2 + a;
        b2 = b1;
        b1 = b0;
    }
    t * &b1 - &b2 + &c[0]
}

/// Monomial coefficients of `T_0..T_degree`.
fn chebyshev_to_monomial(degree: usize, bits: u32) -> Vec<Vec<Real>> {
    let mut rows: Vec<Vec<Real>> = Vec::with_capacity(degree + 1);
    rows.push(vec![Real::one(bits)]);
    if degree >= 1 {
        rows.push(vec![Real::zero(bits), Real::one(bits)]);
    }
    for m in 2..=degree {
        let mut row = vec![Real::zero(bits); m + 1];
        for (j, c) in rows[m - 1].iter().enumerate() {
            row[j + 1] += c * 2.0;
        }
        for (j, c) in rows[m - 2].iter().enumerate() {
            row[j] -= c;
        }
        rows.push(row);
    }
    rows
}

/// Coefficients of `y^0..y^{kept}` of `Σ a_m T_m(y/b)`.
fn to_monomials(c: &[Real], monomials: &[Vec<Real>], b_powers: &[Real]) -> Poly {
    let bits = c[0].prec();
    let kept = b_powers.len() - 1;
    let mut out = Vec::with_capacity(kept + 1);
    for j in 0..=kept {
        let mut acc = Real::zero(bits);
        for (m, a) in c.iter().enumerate().skip(j) {
            if let Some(t) = monomials[m].get(j) {
                if !t.is_zero() {
                    acc += a * t;
                }
            }
        }
        out.push(Complex::from_real(acc / &b_powers[j]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_round_trip_of_a_polynomial() {
        let bits = 128;
        let ctx = RealContext::new(bits).unwrap();
        let nodes = 8;
        let pi = ctx.pi();
        let theta: Vec<Real> = (0..nodes)
            .map(|n| &pi * ((2 * n + 1) as f64) / ((2 * nodes) as f64))
            .collect();
        let b = ctx.real(0.5);
        // f(y) = 1 − 2y + 3y³
        let values: Vec<Real> = theta
            .iter()
            .map(|th| {
                let y = &b * th.cos();
                1.0 - &y * 2.0 + y.powi(3) * 3.0
            })
            .collect();
        let c = chebyshev_coefficients(&values, &chebyshev_basis(&theta));
        let mono = chebyshev_to_monomial(nodes - 1, bits);
        let bp: Vec<Real> = (0..=4).map(|j| b.powi(j)).collect();
        let p = to_monomials(&c, &mono, &bp);
        let want = [1.0, -2.0, 0.0, 3.0, 0.0];
        for (got, w) in p.iter().zip(want) {
            assert!((&got.re - w).abs() < 1e-30, "{got:?} vs {w}");
        }
    }

    #[test]
    fn richardson_removes_even_powers() {
        let ctx = RealContext::new(128).unwrap();
        let q = [8u64, 16, 32];
        let f: Vec<Real> = q
            .iter()
            .map(|&q| {
                let h = ctx.int(q as i64).square().recip();
                ctx.real(2.5) + &h * 3.0 - h.square() * 7.0
            })
            .collect();
        let v = richardson_in_q(&q, &f).unwrap();
        assert!((v - 2.5).abs() < 1e-30);
    }
}
