//! Near-integrable twist maps `F = A + G` around the resonant circle `y = 0`:
//! `x₁ = x + y + y^m g₁(x, y)`, `y₁ = y + y^{m+1} g₂(x, y)`, and their
//! conjugation by near-identity changes of variables.

use crate::error::{Error, Result};
use crate::real::{Complex, Real};

use super::grid::{eval_point, poly_max_abs, poly_sub_assign, poly_zero, Grid, Poly};
use super::series::FourierTaylorSeries;

#[derive(Clone, Debug, PartialEq)]
pub struct MapSeries {
    order: usize,
    g1: FourierTaylorSeries,
    g2: FourierTaylorSeries,
}

/// Change of variables `Φ(x, y) = (x + y^{p₁} ψ₁(x, y), y + y^{p₂} ψ₂(x, y))`.
#[derive(Clone, Debug, PartialEq)]
pub struct NearIdentity {
    pub p1: usize,
    pub psi1: FourierTaylorSeries,
    pub p2: usize,
    pub psi2: FourierTaylorSeries,
}

/// Outcome of [`MapSeries::conjugate`].
#[derive(Clone, Debug)]
pub struct Conjugated {
    pub map: MapSeries,
    /// Part of the new `x`-displacement below `y^{order}`.
    pub low1: FourierTaylorSeries,
    /// Part of the new `y`-displacement below `y^{order+1}`.
    pub low2: FourierTaylorSeries,
    /// Fixed-point iterations used to invert the change.
    pub iterations: usize,
}

impl NearIdentity {
    pub fn identity(p1: usize, p2: usize, kmax: usize, bits: u32) -> Self {
        NearIdentity {
            p1,
            psi1: FourierTaylorSeries::zeros(kmax, 0, true, bits),
            p2,
            psi2: FourierTaylorSeries::zeros(kmax, 0, true, bits),
        }
    }

    pub fn eval(&self, x: &Real, y: &Real) -> (Real, Real) {
        let y1 = y.powi(self.p1 as i32) * self.psi1.eval_real(x, y);
        let y2 = y.powi(self.p2 as i32) * self.psi2.eval_real(x, y);
        (x + y1, y + y2)
    }

    pub fn is_identity(&self) -> bool {
        let zero = |g: &FourierTaylorSeries| {
            (0..=g.jmax()).all(|j| (-(g.kmax() as i64)..=g.kmax() as i64).all(|k| g.coeff_ref(k, j).is_zero()))
        };
        zero(&self.psi1) && zero(&self.psi2)
    }
}

impl MapSeries {
    pub fn new(order: usize, g1: FourierTaylorSeries, g2: FourierTaylorSeries) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("the perturbation order m must be at least 1".into()));
        }
        if g1.kmax() != g2.kmax() || g1.jmax() != g2.jmax() {
            return Err(Error::InvalidArgument("both components must share one truncation".into()));
        }
        Ok(MapSeries { order, g1, g2 })
    }

    /// The integrable twist map `A(x, y) = (x + y, y)` written at `order`.
    pub fn integrable(order: usize, kmax: usize, jmax: usize, bits: u32) -> Self {
        MapSeries {
            order: order.max(1),
            g1: FourierTaylorSeries::zeros(kmax, jmax, true, bits),
            g2: FourierTaylorSeries::zeros(kmax, jmax, true, bits),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn g1(&self) -> &FourierTaylorSeries {
        &self.g1
    }

    pub fn g2(&self) -> &FourierTaylorSeries {
        &self.g2
    }

    pub fn kmax(&self) -> usize {
        self.g1.kmax()
    }

    pub fn jmax(&self) -> usize {
        self.g1.jmax()
    }

    pub fn bits(&self) -> u32 {
        self.g1.bits()
    }

    pub fn is_real(&self) -> bool {
        self.g1.is_real() && self.g2.is_real()
    }

    /// `(x₁, y₁)` at a real point.
    pub fn eval(&self, x: &Real, y: &Real) -> (Real, Real) {
        let (d1, d2) = self.displacement(x, y);
        (x + y + d1, y + d2)
    }

    /// `F − A` at a real point.
    pub fn displacement(&self, x: &Real, y: &Real) -> (Real, Real) {
        let ym = y.powi(self.order as i32);
        let d1 = &ym * self.g1.eval_real(x, y);
        let d2 = ym * y * self.g2.eval_real(x, y);
        (d1, d2)
    }

    /// Largest `|F − A|` per component over `nx` equispaced `x` at fixed `y`.
    pub fn displacement_sup(&self, y: &Real, nx: usize) -> (Real, Real) {
        let bits = self.bits();
        let mut w1 = Real::zero(bits);
        let mut w2 = Real::zero(bits);
        for i in 0..nx {
            let x = Real::from_int(bits, i as i64) / (nx as f64);
            let (d1, d2) = self.displacement(&x, y);
            w1 = w1.max(d1.abs());
            w2 = w2.max(d2.abs());
        }
        (w1, w2)
    }

    /// Coefficient of `y^j` in `x₁ − x − y`, a function of `x`.
    pub fn angular_coefficient(&self, j: usize) -> FourierTaylorSeries {
        match j.checked_sub(self.order) {
            Some(i) => self.g1.y_slice(i),
            None => FourierTaylorSeries::zeros(self.kmax(), 0, self.is_real(), self.bits()),
        }
    }

    /// Coefficient of `y^j` in `y₁ − y`, a function of `x`.
    pub fn radial_coefficient(&self, j: usize) -> FourierTaylorSeries {
        match j.checked_sub(self.order + 1) {
            Some(i) => self.g2.y_slice(i),
            None => FourierTaylorSeries::zeros(self.kmax(), 0, self.is_real(), self.bits()),
        }
    }

    /// `π*`: the averaged radial part `g₂*(y)`.
    pub fn star(&self) -> FourierTaylorSeries {
        self.g2.mean()
    }

    /// `π•`: the map with `g₂*` removed.
    pub fn bullet(&self) -> MapSeries {
        MapSeries {
            order: self.order,
            g1: self.g1.clone(),
            g2: self.g2.sub(&self.g2.mean()),
        }
    }

    /// `max{‖g₁‖_{a,b}, ‖g₂‖_{a,b}}`.
    pub fn fourier_norm(&self, a: &Real, b: &Real) -> Real {
        self.g1.fourier_norm(a, b).max(self.g2.fourier_norm(a, b))
    }

    pub fn star_norm(&self, a: &Real, b: &Real) -> Real {
        self.star().fourier_norm(a, b)
    }

    pub fn bullet_norm(&self, a: &Real, b: &Real) -> Real {
        self.bullet().fourier_norm(a, b)
    }

    /// Truncation tail of the components in the Fourier norm at `(a, b)`.
    pub fn tail_estimate(&self, a: &Real, b: &Real) -> Real {
        self.g1.tail_estimate(a, b).max(self.g2.tail_estimate(a, b))
    }

    /// `Φ⁻¹ ∘ F ∘ Φ` written at `new_order` with `new_jmax` powers.
    ///
    /// Works pointwise on an `x`-grid: `F ∘ Φ` by Taylor expansion in `x`,
    /// the inverse of `Φ` by fixed-point iteration, which gains at least one
    /// power of `y` per sweep.
    pub fn conjugate(&self, change: &NearIdentity, new_order: usize, new_jmax: usize) -> Result<Conjugated> {
        if change.p1 == 0 || change.p2 < 2 {
            return Err(Error::InvalidArgument(
                "a near-identity change needs p₁ ≥ 1 and p₂ ≥ 2".into(),
            ));
        }
        let m = self.order;
        // Highest tracked y-degree: the radial displacement's.
        let degree = m + 1 + self.jmax();
        if new_order + 1 + new_jmax > degree || new_order == 0 {
            return Err(Error::Truncation(format!(
                "order {new_order} with {new_jmax} powers needs y^{} but the input only determines y^{degree}",
                new_order + 1 + new_jmax
            )));
        }
        let bits = self.bits();
        let kmax = self.kmax().max(change.psi1.kmax()).max(change.psi2.kmax());
        let grid = Grid::for_harmonics(kmax, bits);
        let g1 = self.g1.truncated(kmax, self.jmax());
        let g2 = self.g2.truncated(kmax, self.jmax());
        let psi1 = change.psi1.truncated(kmax, change.psi1.jmax());
        let psi2 = change.psi2.truncated(kmax, change.psi2.jmax());
        let t_g1 = grid.derivative_table(&g1, degree / change.p1);
        let t_g2 = grid.derivative_table(&g2, degree / change.p1);
        let t_psi1 = grid.derivative_table(&psi1, degree);
        let t_psi2 = grid.derivative_table(&psi2, degree);

        let mut y = poly_zero(degree, bits);
        y[1] = Complex::one(bits);
        let zero = poly_zero(degree, bits);
        let tol = crate::real::pow2(bits, 24 - bits as i64);
        let max_sweeps = degree + 4;

        let mut d1: Vec<Poly> = Vec::with_capacity(grid.m);
        let mut d2: Vec<Poly> = Vec::with_capacity(grid.m);
        let mut sweeps_used = 0;
        for i in 0..grid.m {
            let phi1 = eval_point(&t_psi1, i, change.p1, &zero, &y);
            let phi2 = eval_point(&t_psi2, i, change.p2, &zero, &y);
            let mut ycoord = y.clone();
            super::grid::poly_add_assign(&mut ycoord, &phi2);
            let big1 = eval_point(&t_g1, i, m, &phi1, &ycoord);
            let big2 = eval_point(&t_g2, i, m + 1, &phi1, &ycoord);
            // F∘Φ = (x_i + w1, w2)
            let mut w1 = phi1.clone();
            super::grid::poly_add_assign(&mut w1, &ycoord);
            super::grid::poly_add_assign(&mut w1, &big1);
            let mut w2 = ycoord.clone();
            super::grid::poly_add_assign(&mut w2, &big2);
            // Solve Φ(x_i + u, v) = (x_i + w1, w2).
            let scale = poly_max_abs(&w1).max(poly_max_abs(&w2)).max(Real::one(bits));
            let mut u = w1.clone();
            let mut v = w2.clone();
            let mut converged = false;
            for sweep in 1..=max_sweeps {
                let a = eval_point(&t_psi1, i, change.p1, &u, &v);
                let b = eval_point(&t_psi2, i, change.p2, &u, &v);
                let mut nu = w1.clone();
                poly_sub_assign(&mut nu, &a);
                let mut nv = w2.clone();
                poly_sub_assign(&mut nv, &b);
                let mut du = nu.clone();
                poly_sub_assign(&mut du, &u);
                let mut dv = nv.clone();
                poly_sub_assign(&mut dv, &v);
                let change_size = poly_max_abs(&du).max(poly_max_abs(&dv));
                u = nu;
                v = nv;
                if change_size <= &tol * &scale {
                    sweeps_used = sweeps_used.max(sweep);
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::NoConvergence {
                    what: "inverse of the change of variables",
                    iterations: max_sweeps,
                    residual: f64::NAN,
                });
            }
            poly_sub_assign(&mut u, &y);
            poly_sub_assign(&mut v, &y);
            d1.push(u);
            d2.push(v);
        }
        let real = self.is_real() && psi1.is_real() && psi2.is_real();
        // The angular displacement is determined up to y^{degree-1}.
        for p in &mut d1 {
            p[degree] = Complex::zero(bits);
        }
        let (ng1, _) = grid.to_series(&d1, new_order, kmax, new_jmax, real);
        let (ng2, _) = grid.to_series(&d2, new_order + 1, kmax, new_jmax, real);
        let (low1, _) = grid.to_series(&d1, 0, kmax, new_order - 1, real);
        let (low2, _) = grid.to_series(&d2, 0, kmax, new_order, real);
        Ok(Conjugated {
            map: MapSeries::new(new_order, ng1, ng2)?,
            low1,
            low2,
            iterations: sweeps_used,
        })
    }
}
