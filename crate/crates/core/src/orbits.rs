//! Birkhoff `(p,q)`-periodic orbits by the reduced-action method, the action
//! gap `Δ^(p,q)`, and the pair of vertical graphs `(ζ, ζ̂)` whose enclosed
//! symplectic area bounds the gap.
//!
//! Configurations are sequences of tangent angles `φ_0 < φ_1 < … < φ_q =
//! φ_0 + 2πp`. With `φ_0 = t` pinned, the remaining `q − 1` angles are
//! solved for by Newton's method on a tridiagonal Hessian; the resulting
//! reduced action `F(t)` has the periodic orbits as critical points. Its
//! minimum gives the minimizing orbit and its maximum the minimax orbit.
//!
//! Actions are minimized in the twist convention: the outer area directly,
//! the inner chord length with its sign flipped (billiard orbits maximize
//! length). Reported actions are always the physical length or area.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::billiard::{inner_step_phi, outer_step_alpha, pair_terms, PairTerms, Table};
use crate::curves::{CurveEval, Frame, FourierCurve};
use crate::error::{Error, Result};
use crate::real::{pow2, Real, RealContext};

/// Nodes of the initial scan of the reduced action.
pub const SCAN_NODES: usize = 32;
/// Default cap for precision escalation.
pub const DEFAULT_BITS_CAP: u32 = 1024;
/// Differences of the reduced action below `FLOOR_FACTOR · q · eps · |W|`
/// are indistinguishable from rounding.
const FLOOR_FACTOR: f64 = 4096.0;
const MAX_NEWTON: usize = 60;
const MAX_REFINE: usize = 200;

/// A billiard table: the curve and which of the two maps acts on it.
#[derive(Clone, Debug)]
pub struct TwistProblem {
    pub curve: FourierCurve,
    pub table: Table,
}

impl TwistProblem {
    pub fn new(curve: FourierCurve, table: Table) -> Self {
        TwistProblem { curve, table }
    }

    pub fn inner(curve: FourierCurve) -> Self {
        TwistProblem::new(curve, Table::Inner)
    }

    pub fn outer(curve: FourierCurve) -> Self {
        TwistProblem::new(curve, Table::Outer)
    }

    /// `+1` if the physical action is minimized, `−1` if maximized.
    fn sign(&self) -> f64 {
        match self.table {
            Table::Inner => -1.0,
            Table::Outer => 1.0,
        }
    }

    /// Period of the configuration coordinate used in reports: the
    /// perimeter (inner) or `2π` (outer).
    pub fn period(&self, ctx: &RealContext) -> Real {
        match self.table {
            Table::Inner => self.curve.total_length(ctx),
            Table::Outer => ctx.two_pi(),
        }
    }

    /// Lifted tangent angle to the report coordinate (arclength or `α`).
    pub fn to_coordinate(&self, ev: &CurveEval, phi: &Real) -> Real {
        match self.table {
            Table::Inner => ev.arclength(phi),
            Table::Outer => phi.clone(),
        }
    }

    /// Report coordinate to a lifted tangent angle.
    pub fn from_coordinate(&self, x: &Real, ctx: &RealContext) -> Result<Real> {
        match self.table {
            Table::Outer => Ok(x.clone()),
            Table::Inner => {
                let period = self.period(ctx);
                let turns = (x / &period).floor();
                let base = x - &(&turns * &period);
                Ok(self.curve.phi_from_arclength(&base, ctx)? + turns * ctx.two_pi())
            }
        }
    }

    /// Density converting a derivative in `φ` to one in the report coordinate.
    fn coordinate_speed(&self, frame: &Frame) -> Real {
        match self.table {
            Table::Inner => frame.rho.clone(),
            Table::Outer => Real::one(frame.rho.prec()),
        }
    }

    fn check_pq(&self, p: u64, q: u64) -> Result<()> {
        if p == 0 || q < self.table.min_period() {
            return Err(Error::InvalidArgument(format!(
                "({p},{q}) is not a valid rotation for the {} table",
                self.table.name()
            )));
        }
        if gcd(p, q) != 1 {
            return Err(Error::InvalidArgument(format!("p = {p} and q = {q} are not coprime")));
        }
        let inside = match self.table {
            Table::Inner => p < q,
            Table::Outer => 2 * p < q,
        };
        if !inside {
            return Err(Error::InvalidArgument(format!(
                "rotation number {p}/{q} is outside the twist interval of the {} table",
                self.table.name()
            )));
        }
        Ok(())
    }
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitKind {
    Minimizing,
    Minimax,
}

/// A Birkhoff periodic orbit.
#[derive(Clone, Debug)]
pub struct PeriodicOrbit {
    pub p: u64,
    pub q: u64,
    pub table: Table,
    /// Lifted report coordinates `S_0 < … < S_{q−1}` (arclength or `α`).
    pub points: Vec<Real>,
    /// Lifted tangent angles of the same points.
    pub phis: Vec<Real>,
    /// Radial coordinate at each point (incidence angle or tangent distance).
    pub radial: Vec<Real>,
    /// Physical action: total length or total cut-off area.
    pub action: Real,
    pub kind: OrbitKind,
    /// Euclidean norm of the action gradient in the report coordinates.
    pub grad_norm: Real,
}

impl PeriodicOrbit {
    /// Birkhoff ordering of the lifted report coordinates.
    pub fn is_birkhoff_ordered(&self, period: &Real) -> bool {
        birkhoff_ordered(&self.points, self.p, period)
    }
}

/// Strict monotonicity of the lift, closure `S_q = S_0 + p·period` within
/// the step bound, and the cyclic order of the rigid rotation `p/q`.
pub fn birkhoff_ordered(points: &[Real], p: u64, period: &Real) -> bool {
    let q = points.len();
    if q < 2 {
        return false;
    }
    let last = &points[0] + &(period * (p as f64));
    for j in 0..q {
        let next = if j + 1 < q { &points[j + 1] } else { &last };
        if next <= &points[j] {
            return false;
        }
    }
    let mut by_position: Vec<(Real, usize)> = points
        .iter()
        .enumerate()
        .map(|(j, x)| ((x - &points[0]).rem_euclid(period), j))
        .collect();
    by_position.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite coordinates"));
    let mut by_rotation: Vec<(u64, usize)> = (0..q).map(|j| ((j as u64 * p) % q as u64, j)).collect();
    by_rotation.sort();
    by_position
        .iter()
        .zip(&by_rotation)
        .all(|(a, b)| a.1 == b.1)
}

/// Pinned solution of the periodic action problem.
#[derive(Clone, Debug)]
pub struct Pinned {
    /// `φ_0..=φ_q`, lifted.
    pub phis: Vec<Real>,
    pub terms: Vec<PairTerms>,
    /// Physical action.
    pub action: Real,
    /// `dF/dt` in the twist convention, in `φ`.
    pub reduced_derivative: Real,
    /// Gradient norm over the free points, in `φ`.
    pub grad_norm: Real,
    pub iterations: usize,
    frames: Vec<Frame>,
}

impl Pinned {
    fn offsets(&self) -> Vec<Real> {
        self.phis.iter().map(|x| x - &self.phis[0]).collect()
    }
}

/// Output of [`constrained_minimum`].
#[derive(Clone, Debug)]
pub struct ConstrainedMinimum {
    /// Lifted report coordinates of the `q` points.
    pub points: Vec<Real>,
    /// Physical action `W` at the constrained critical configuration.
    pub action: Real,
    /// Gradient norm over the free points, in report coordinates.
    pub grad_norm: Real,
    /// Derivative of the reduced action with respect to the pinned point.
    pub reduced_derivative: Real,
    pub iterations: usize,
}

struct Solver<'a> {
    problem: &'a TwistProblem,
    ev: &'a CurveEval,
    ctx: &'a RealContext,
    p: u64,
    q: usize,
    sigma: f64,
    max_step: Real,
    lift: Real,
}

impl<'a> Solver<'a> {
    fn new(problem: &'a TwistProblem, ev: &'a CurveEval, p: u64, q: u64, ctx: &'a RealContext) -> Self {
        Solver {
            problem,
            ev,
            ctx,
            p,
            q: q as usize,
            sigma: problem.sign(),
            max_step: problem.table.max_step(ctx),
            lift: ctx.two_pi() * (p as f64),
        }
    }

    fn rigid(&self, t: &Real) -> Vec<Real> {
        let q = self.q as f64;
        (0..=self.q)
            .map(|j| t + &(&self.lift * (j as f64 / q)))
            .collect()
    }

    fn ordered(&self, phis: &[Real]) -> bool {
        phis.windows(2).all(|w| {
            let d = &w[1] - &w[0];
            d > 0.0 && d < self.max_step
        })
    }

    fn frames(&self, phis: &[Real]) -> Vec<Frame> {
        let mut frames: Vec<Frame> = phis[..self.q].iter().map(|x| self.ev.frame(x)).collect();
        let mut last = frames[0].clone();
        last.phi = phis[self.q].clone();
        frames.push(last);
        frames
    }

    fn terms(&self, frames: &[Frame]) -> Vec<PairTerms> {
        frames
            .windows(2)
            .map(|w| pair_terms(self.problem.table, self.ev, &w[0], &w[1]))
            .collect()
    }

    /// Twist-convention gradient at the free points `1..q`.
    fn gradient(&self, terms: &[PairTerms]) -> Vec<Real> {
        (1..self.q)
            .map(|j| (&terms[j - 1].d1 + &terms[j].d0) * self.sigma)
            .collect()
    }

    fn action(terms: &[PairTerms]) -> Real {
        let mut w = Real::zero(terms[0].value.prec());
        for t in terms {
            w += &t.value;
        }
        w
    }

    fn norm(v: &[Real], prec: u32) -> Real {
        v.iter().fold(Real::zero(prec), |a, x| a + x.square()).sqrt()
    }

    /// Solves the tridiagonal system `H x = rhs` with `H + shift·I`;
    /// `None` if a pivot is not positive.
    fn solve_tridiagonal(diag: &[Real], off: &[Real], rhs: &[Real], shift: &Real) -> Option<Vec<Real>> {
        let n = diag.len();
        let mut d = Vec::with_capacity(n);
        let mut l = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for j in 0..n {
            let mut dj = &diag[j] + shift;
            let mut yj = rhs[j].clone();
            if j > 0 {
                let lj: &Real = &l[j - 1];
                dj -= lj * &off[j - 1];
                yj -= lj * &y[j - 1];
            }
            if !(dj > 0.0) {
                return None;
            }
            if j + 1 < n {
                l.push(&off[j] / &dj);
            }
            d.push(dj);
            y.push(yj);
        }
        let mut x = vec![Real::zero(rhs[0].prec()); n];
        for j in (0..n).rev() {
            let mut v = &y[j] / &d[j];
            if j + 1 < n {
                v -= &l[j] * &x[j + 1];
            }
            x[j] = v;
        }
        Some(x)
    }

    /// Direction of most negative curvature of the tridiagonal Hessian, by
    /// inverse iteration just above the definiteness threshold, oriented
    /// downhill and scaled to a tenth of the mean spacing.
    fn descent_direction(&self, diag: &[Real], off: &[Real], grad: &[Real], feasible: &Real) -> Option<Vec<Real>> {
        let prec = self.ctx.bits();
        let (mut lo, mut hi) = (Real::zero(prec), feasible.clone());
        for _ in 0..40 {
            let mid = (&lo + &hi) / 2.0;
            let ones = vec![self.ctx.one(); diag.len()];
            if Self::solve_tridiagonal(diag, off, &ones, &mid).is_some() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let shift = &hi * 1.001 + self.ctx.eps();
        let mut v: Vec<Real> = (0..diag.len())
            .map(|j| self.ctx.real(((j as f64) * 1.7 + 0.3).sin()))
            .collect();
        for _ in 0..3 {
            v = Self::solve_tridiagonal(diag, off, &v, &shift)?;
            let size = v.iter().fold(Real::zero(prec), |a, x| a.max(x.abs()));
            if size.is_zero() || !size.is_finite() {
                return None;
            }
            v = v.iter().map(|x| x / &size).collect();
        }
        let slope = grad.iter().zip(&v).fold(Real::zero(prec), |a, (g, x)| a + g * x);
        let length = &self.lift / (self.q as f64 * 10.0);
        let sign = if slope > 0.0 { -1.0 } else { 1.0 };
        Some(v.iter().map(|x| x * &length * sign).collect())
    }

    /// Critical configuration of the action with `φ_0 = t`, seeded by the
    /// rigid rotation or by the offsets of a nearby solution.
    fn solve(&self, t: &Real, seed: Option<&[Real]>) -> Result<Pinned> {
        let prec = self.ctx.bits();
        let mut phis: Vec<Real> = match seed {
            Some(off) if off.len() == self.q + 1 => off.iter().map(|d| t + d).collect(),
            _ => self.rigid(t),
        };
        phis[self.q] = t + &self.lift;
        if !self.ordered(&phis) {
            phis = self.rigid(t);
        }
        let tiny = self.ctx.eps() * (64.0 * self.q as f64);
        let mut frames = self.frames(&phis);
        let mut terms = self.terms(&frames);
        let mut grad = self.gradient(&terms);
        let mut gnorm = Self::norm(&grad, prec);
        let target = self.ctx.solver_tol() * (self.q as f64);
        let mut stalls = 0;
        // Extra Hessian shift after rejected steps, relative to its scale.
        let mut damping = 0.0;
        for it in 0..=MAX_NEWTON {
            if self.q == 1 || gnorm <= tiny || (stalls >= 2 && gnorm <= target) {
                return Ok(self.finish(phis, frames, terms, gnorm, it));
            }
            let diag: Vec<Real> = (1..self.q)
                .map(|j| (&terms[j - 1].d11 + &terms[j].d00) * self.sigma)
                .collect();
            let off: Vec<Real> = (1..self.q - 1).map(|j| &terms[j].d01 * self.sigma).collect();
            let rhs: Vec<Real> = grad.iter().map(|g| -g).collect();
            let scale = diag.iter().fold(Real::zero(prec), |a, x| a.max(x.abs()));
            let mut shift = &scale * damping;
            let mut indefinite = false;
            let mut step = loop {
                if let Some(x) = Self::solve_tridiagonal(&diag, &off, &rhs, &shift) {
                    break x;
                }
                indefinite = true;
                shift = if shift.is_zero() {
                    &scale * 1e-6
                } else {
                    shift * 8.0
                };
                if shift > &scale * 1e12 {
                    return Err(Error::NoConvergence {
                        what: "periodic action Newton (Hessian)",
                        iterations: it,
                        residual: gnorm.to_f64(),
                    });
                }
            };
            if indefinite {
                // Near a saddle of the pinned problem the shifted step grows
                // the unstable component only slowly; add a step along the
                // lowest-curvature direction.
                if let Some(d) = self.descent_direction(&diag, &off, &grad, &shift) {
                    for (x, dx) in step.iter_mut().zip(&d) {
                        *x += dx;
                    }
                }
            }
            let w_old = Self::action(&terms) * self.sigma;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let mut trial = phis.clone();
                for j in 1..self.q {
                    trial[j] += &step[j - 1] * lambda;
                }
                if self.ordered(&trial) {
                    let f = self.frames(&trial);
                    let tm = self.terms(&f);
                    let g = self.gradient(&tm);
                    let gn = Self::norm(&g, prec);
                    let w = Self::action(&tm) * self.sigma;
                    let slack = self.ctx.eps() * (FLOOR_FACTOR * self.q as f64) * w.abs().max(self.ctx.one());
                    if gn < gnorm || w < &w_old + &slack {
                        if gn >= gnorm.clone() * 0.5 {
                            stalls += 1;
                        } else {
                            stalls = 0;
                        }
                        phis = trial;
                        frames = f;
                        terms = tm;
                        grad = g;
                        gnorm = gn;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if accepted {
                damping = 0.0;
            } else {
                stalls += 2;
                damping = if damping == 0.0 { 1e-3 } else { damping * 10.0 };
            }
        }
        if gnorm <= target {
            return Ok(self.finish(phis, frames, terms, gnorm, MAX_NEWTON));
        }
        Err(Error::NoConvergence {
            what: "periodic action Newton",
            iterations: MAX_NEWTON,
            residual: gnorm.to_f64(),
        })
    }

    /// Hessian of the periodic action in all `q` angles, twist convention.
    fn full_hessian(&self, terms: &[PairTerms]) -> Vec<Vec<Real>> {
        let q = self.q;
        let mut h = vec![vec![Real::zero(self.ctx.bits()); q]; q];
        for j in 0..q {
            let prev = if j == 0 { q - 1 } else { j - 1 };
            h[j][j] = (&terms[prev].d11 + &terms[j].d00) * self.sigma;
            let next = (j + 1) % q;
            let c = &terms[j].d01 * self.sigma;
            h[j][next] += &c;
            h[next][j] += &c;
        }
        h
    }

    /// Critical configuration of the full action near `phis`, by plain
    /// Newton on all `q` angles. Reaches critical points that are saddles of
    /// the pinned problem, which [`Solver::solve`] cannot.
    fn solve_free(&self, mut phis: Vec<Real>) -> Result<Pinned> {
        let prec = self.ctx.bits();
        let q = self.q;
        let full_gradient = |terms: &[PairTerms]| -> Vec<Real> {
            (0..q)
                .map(|j| {
                    let prev = if j == 0 { q - 1 } else { j - 1 };
                    (&terms[prev].d1 + &terms[j].d0) * self.sigma
                })
                .collect()
        };
        phis[q] = &phis[0] + &self.lift;
        let mut frames = self.frames(&phis);
        let mut terms = self.terms(&frames);
        let mut grad = full_gradient(&terms);
        let mut gnorm = Self::norm(&grad, prec);
        let tiny = self.ctx.eps() * (64.0 * q as f64);
        let target = self.ctx.solver_tol() * (q as f64);
        for it in 0..=MAX_NEWTON {
            if gnorm <= tiny {
                return Ok(self.finish(phis, frames, terms, gnorm, it));
            }
            let h = self.full_hessian(&terms);
            let rhs: Vec<Real> = grad.iter().map(|g| -g).collect();
            let Some(step) = dense_solve(h, rhs) else {
                break;
            };
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let mut trial = phis.clone();
                for j in 0..q {
                    trial[j] += &step[j] * lambda;
                }
                trial[q] = &trial[0] + &self.lift;
                if self.ordered(&trial) {
                    let f = self.frames(&trial);
                    let tm = self.terms(&f);
                    let g = full_gradient(&tm);
                    let gn = Self::norm(&g, prec);
                    if gn < gnorm {
                        phis = trial;
                        frames = f;
                        terms = tm;
                        grad = g;
                        gnorm = gn;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if gnorm <= target {
            return Ok(self.finish(phis, frames, terms, gnorm, MAX_NEWTON));
        }
        Err(Error::NoConvergence {
            what: "periodic action Newton (free)",
            iterations: MAX_NEWTON,
            residual: gnorm.to_f64(),
        })
    }

    fn finish(&self, phis: Vec<Real>, frames: Vec<Frame>, terms: Vec<PairTerms>, gnorm: Real, it: usize) -> Pinned {
        let reduced = (&terms[0].d0 + &terms[self.q - 1].d1) * self.sigma;
        Pinned {
            action: Self::action(&terms),
            reduced_derivative: reduced,
            grad_norm: gnorm,
            iterations: it,
            phis,
            terms,
            frames,
        }
    }

    /// Full-gradient norm in report coordinates (free points and the pin).
    fn report_grad_norm(&self, pin: &Pinned) -> Real {
        let prec = self.ctx.bits();
        let mut sum = Real::zero(prec);
        for j in 0..self.q {
            let g = if j == 0 {
                &pin.terms[0].d0 + &pin.terms[self.q - 1].d1
            } else {
                &pin.terms[j - 1].d1 + &pin.terms[j].d0
            };
            sum += (g / self.problem.coordinate_speed(&pin.frames[j])).square();
        }
        sum.sqrt()
    }

    fn orbit(&self, pin: &Pinned, kind: OrbitKind) -> PeriodicOrbit {
        let phis: Vec<Real> = pin.phis[..self.q].to_vec();
        PeriodicOrbit {
            p: self.p,
            q: self.q as u64,
            table: self.problem.table,
            points: phis.iter().map(|x| self.problem.to_coordinate(self.ev, x)).collect(),
            radial: pin.terms.iter().map(|t| t.r0.clone()).collect(),
            phis,
            action: pin.action.clone(),
            kind,
            grad_norm: self.report_grad_norm(pin),
        }
    }

    fn floor(&self, action: &Real) -> Real {
        self.ctx.eps() * (FLOOR_FACTOR * self.q as f64) * action.abs().max(self.ctx.one())
    }
}

/// Critical configuration of the periodic action with the first point pinned
/// at `x0` (arclength for the inner table, tangent angle for the outer one).
pub fn constrained_minimum(
    problem: &TwistProblem,
    p: u64,
    q: u64,
    x0: &Real,
    ctx: &RealContext,
) -> Result<ConstrainedMinimum> {
    problem.check_pq(p, q)?;
    let ev = problem.curve.eval(ctx.bits());
    let solver = Solver::new(problem, &ev, p, q, ctx);
    let t = problem.from_coordinate(x0, ctx)?;
    let pin = solver.solve(&t, None)?;
    let prec = ctx.bits();
    let mut sum = Real::zero(prec);
    for j in 1..solver.q {
        let g = &pin.terms[j - 1].d1 + &pin.terms[j].d0;
        sum += (g / problem.coordinate_speed(&pin.frames[j])).square();
    }
    let speed0 = problem.coordinate_speed(&pin.frames[0]);
    Ok(ConstrainedMinimum {
        points: pin.phis[..solver.q]
            .iter()
            .map(|x| problem.to_coordinate(&ev, x))
            .collect(),
        action: pin.action.clone(),
        grad_norm: sum.sqrt(),
        reduced_derivative: &pin.reduced_derivative * solver.sigma / speed0,
        iterations: pin.iterations,
    })
}

/// Flags attached to a measured gap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// The reduced action is flat to working precision; `delta` is reported as 0.
    PrecisionFloor,
    /// Escalation stopped at the precision cap with `delta` still small.
    BitsCap,
    /// An orbit passed closer to the boundary than the guard threshold.
    NearBoundary,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::PrecisionFloor => "precision_floor",
            Flag::BitsCap => "bits_cap",
            Flag::NearBoundary => "near_boundary",
        }
    }
}

impl std::str::FromStr for Flag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "precision_floor" => Ok(Flag::PrecisionFloor),
            "bits_cap" => Ok(Flag::BitsCap),
            "near_boundary" => Ok(Flag::NearBoundary),
            other => Err(Error::InvalidArgument(format!("unknown flag {other:?}"))),
        }
    }
}

/// The two Birkhoff orbits of one rotation number and their action gap.
#[derive(Clone, Debug)]
pub struct OrbitPair {
    pub minimizing: PeriodicOrbit,
    pub minimax: PeriodicOrbit,
    /// `|W(minimax) − W(min)|`, zero when flagged at the precision floor.
    pub delta: Real,
    /// Unfloored difference of the two actions.
    pub raw_delta: Real,
    pub flags: Vec<Flag>,
    /// Total Newton iterations over all pinned solves.
    pub iterations: usize,
    /// Pinned solves performed.
    pub evaluations: usize,
}

struct Sample {
    t: Real,
    pin: Pinned,
}

/// Minimizing and minimax Birkhoff `(p,q)` orbits.
///
/// The reduced action is scanned on [`SCAN_NODES`] nodes of one period of
/// its symmetry: from the pinned tangent angle `0` to the next point, in
/// cyclic order, of the orbit pinned there. Sign changes of its derivative
/// are refined by safeguarded secant steps. If the window holds no minimum or
/// no maximum, it is extended by further windows.
pub fn find_orbit_pair(problem: &TwistProblem, p: u64, q: u64, ctx: &RealContext) -> Result<OrbitPair> {
    find_orbit_pair_with(problem, p, q, SCAN_NODES, ctx)
}

/// [`find_orbit_pair`] with an explicit scan density.
pub fn find_orbit_pair_with(
    problem: &TwistProblem,
    p: u64,
    q: u64,
    nodes: usize,
    ctx: &RealContext,
) -> Result<OrbitPair> {
    problem.check_pq(p, q)?;
    let ev = problem.curve.eval(ctx.bits());
    let solver = Solver::new(problem, &ev, p, q, ctx);
    let nodes = nodes.max(4);
    let mut samples: Vec<Sample> = Vec::new();
    let origin = solver.solve(&ctx.zero(), None)?;
    let mut iterations = origin.iterations;
    let mut evaluations = 1;
    let window = symmetry_window(&origin, p, q, ctx);
    let mut seed: Option<Vec<Real>> = Some(origin.offsets());
    samples.push(Sample { t: ctx.zero(), pin: origin });
    let mut minima: Vec<Sample> = Vec::new();
    let mut maxima: Vec<Sample> = Vec::new();

    for w in 0..q as usize {
        let start = if w == 0 { 0 } else { samples.len() };
        for i in 1..=nodes {
            let t = &window * (w as f64) + &window * (i as f64 / nodes as f64);
            let pin = solver.solve(&t, seed.as_deref())?;
            iterations += pin.iterations;
            evaluations += 1;
            seed = Some(pin.offsets());
            samples.push(Sample { t, pin });
        }
        // Flatness is judged on the first window alone.
        if w == 0 {
            let (lo, hi) = extremes(&samples, solver.sigma);
            let range = (&samples[hi].pin.action - &samples[lo].pin.action).abs();
            if range <= solver.floor(&samples[lo].pin.action) {
                let (lo_s, hi_s) = (&samples[lo], &samples[hi]);
                let raw = (&hi_s.pin.action - &lo_s.pin.action).abs();
                let mut flags = vec![Flag::PrecisionFloor];
                push_boundary_flag(&mut flags, problem, &[&lo_s.pin, &hi_s.pin], ctx);
                return Ok(OrbitPair {
                    minimizing: solver.orbit(&lo_s.pin, OrbitKind::Minimizing),
                    minimax: solver.orbit(&hi_s.pin, OrbitKind::Minimax),
                    delta: ctx.zero(),
                    raw_delta: raw,
                    flags,
                    iterations,
                    evaluations,
                });
            }
        }
        let lo_idx = if start == 0 { 0 } else { start - 1 };
        for i in lo_idx..samples.len() - 1 {
            let (a, b) = (&samples[i], &samples[i + 1]);
            let (da, db) = (&a.pin.reduced_derivative, &b.pin.reduced_derivative);
            let is_min = da < &0.0 && db >= &0.0;
            let is_max = da > &0.0 && db <= &0.0;
            if !(is_min || is_max) {
                continue;
            }
            let (found, its, evals) = refine(&solver, a, b)?;
            iterations += its;
            evaluations += evals;
            // A bracket around a jump of the derivative, where the pinned
            // solution changes branch, shrinks without reaching a root.
            if solver.report_grad_norm(&found.pin) > ctx.solver_tol() * (q as f64) {
                match across_kink(&solver, a, b, &found) {
                    Some((orbit, true)) => minima.push(orbit),
                    Some((orbit, false)) => maxima.push(orbit),
                    None => log::debug!("({p},{q}): discarding a non-critical candidate at t = {:?}", found.t),
                }
                continue;
            }
            if is_min {
                minima.push(found);
            } else {
                maxima.push(found);
            }
        }
        if !minima.is_empty() && !maxima.is_empty() {
            break;
        }
    }
    if minima.is_empty() || maxima.is_empty() {
        return Err(Error::NoConvergence {
            what: "reduced action scan (no critical minimum/maximum pair)",
            iterations: evaluations,
            residual: f64::NAN,
        });
    }
    let sigma = solver.sigma;
    let key = |s: &Sample| s.pin.action.clone() * sigma;
    let min = minima
        .into_iter()
        .min_by(|a, b| key(a).partial_cmp(&key(b)).expect("finite actions"))
        .expect("non-empty");
    let max = maxima
        .into_iter()
        .max_by(|a, b| key(a).partial_cmp(&key(b)).expect("finite actions"))
        .expect("non-empty");
    let raw = (&max.pin.action - &min.pin.action).abs();
    let mut flags = Vec::new();
    let delta = if raw <= solver.floor(&min.pin.action) {
        flags.push(Flag::PrecisionFloor);
        ctx.zero()
    } else {
        raw.clone()
    };
    push_boundary_flag(&mut flags, problem, &[&min.pin, &max.pin], ctx);
    Ok(OrbitPair {
        minimizing: solver.orbit(&min.pin, OrbitKind::Minimizing),
        minimax: solver.orbit(&max.pin, OrbitKind::Minimax),
        delta,
        raw_delta: raw,
        flags,
        iterations,
        evaluations,
    })
}

/// Gaussian elimination with partial pivoting; `None` for a singular matrix.
fn dense_solve(mut a: Vec<Vec<Real>>, mut b: Vec<Real>) -> Option<Vec<Real>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).expect("finite"))?;
        if a[piv][col].is_zero() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = &a[row][col] / &a[col][col];
            if f.is_zero() {
                continue;
            }
            for k in col..n {
                let v = &f * &a[col][k];
                a[row][k] -= v;
            }
            let v = &f * &b[col];
            b[row] -= v;
        }
    }
    let mut x = b.clone();
    for row in (0..n).rev() {
        let mut v = b[row].clone();
        for k in row + 1..n {
            v -= &a[row][k] * &x[k];
        }
        x[row] = v / &a[row][row];
    }
    Some(x)
}

/// Distance from the pinned angle to the next point of the same orbit in
/// cyclic order; the reduced action is periodic with this lift.
fn symmetry_window(pin: &Pinned, p: u64, q: u64, ctx: &RealContext) -> Real {
    let j = (1..q).find(|j| (j * p) % q == 1).unwrap_or(1);
    let turns = (j * p) / q;
    &pin.phis[j as usize] - &pin.phis[0] - ctx.two_pi() * (turns as f64)
}

fn push_boundary_flag(flags: &mut Vec<Flag>, problem: &TwistProblem, pins: &[&Pinned], ctx: &RealContext) {
    if problem.table != Table::Inner {
        return;
    }
    let r_min = ctx.pi() * crate::billiard::R_MIN_FACTOR;
    let near = pins
        .iter()
        .any(|p| p.terms.iter().any(|t| t.r0 < r_min || (ctx.pi() - &t.r0) < r_min));
    if near {
        flags.push(Flag::NearBoundary);
    }
}

/// Indices of the smallest and largest twist-convention action.
fn extremes(samples: &[Sample], sigma: f64) -> (usize, usize) {
    let mut lo = 0;
    let mut hi = 0;
    for (i, s) in samples.iter().enumerate() {
        let v = &s.pin.action * sigma;
        if v < &samples[lo].pin.action * sigma {
            lo = i;
        }
        if v > &samples[hi].pin.action * sigma {
            hi = i;
        }
    }
    (lo, hi)
}

/// Critical orbit near a kink of the reduced action, where the pinned
/// solution jumps between branches: the average of the branches reached from
/// either side seeds a free Newton solve. The orbit is minimizing when the
/// full Hessian is positive definite and minimax otherwise.
fn across_kink(solver: &Solver<'_>, a: &Sample, b: &Sample, found: &Sample) -> Option<(Sample, bool)> {
    let left = solver.solve(&found.t, Some(&a.pin.offsets())).ok()?;
    let right = solver.solve(&found.t, Some(&b.pin.offsets())).ok()?;
    let seed: Vec<Real> = left.phis.iter().zip(&right.phis).map(|(x, y)| (x + y) / 2.0).collect();
    let pin = solver.solve_free(seed).ok()?;
    if solver.report_grad_norm(&pin) > solver.ctx.solver_tol() * (solver.q as f64) {
        return None;
    }
    let minimizing = cholesky_succeeds(solver.full_hessian(&pin.terms));
    Some((Sample { t: pin.phis[0].clone(), pin }, minimizing))
}

/// Whether the symmetric matrix is positive definite.
fn cholesky_succeeds(mut a: Vec<Vec<Real>>) -> bool {
    let n = a.len();
    for k in 0..n {
        if !(a[k][k] > 0.0) {
            return false;
        }
        let d = a[k][k].clone().sqrt();
        for i in k + 1..n {
            a[i][k] = &a[i][k] / &d;
        }
        for i in k + 1..n {
            for j in k + 1..=i {
                let v = &a[i][k] * &a[j][k];
                a[i][j] -= v;
            }
        }
    }
    true
}

/// Root of the reduced derivative inside a sign-changing bracket, by the
/// Illinois variant of regula falsi.
fn refine(solver: &Solver<'_>, a: &Sample, b: &Sample) -> Result<(Sample, usize, usize)> {
    let ctx = solver.ctx;
    let mut lo = (a.t.clone(), a.pin.reduced_derivative.clone(), a.pin.offsets());
    let mut hi = (b.t.clone(), b.pin.reduced_derivative.clone(), b.pin.offsets());
    let width_tol = ctx.solver_tol() * (&b.t - &a.t).abs() * 1e-3;
    let mut iterations = 0;
    let mut evals = 0;
    let mut side = 0i8;
    let mut best: Option<Sample> = None;
    for _ in 0..MAX_REFINE {
        let denom = &hi.1 - &lo.1;
        let mut t = &lo.0 - &(&lo.1 * (&hi.0 - &lo.0) / &denom);
        if !t.is_finite() || t <= lo.0 || t >= hi.0 {
            t = (&lo.0 + &hi.0) / 2.0;
        }
        let pin = solver.solve(&t, Some(&lo.2))?;
        iterations += pin.iterations;
        evals += 1;
        let d = pin.reduced_derivative.clone();
        let offs = pin.offsets();
        let done = d.is_zero()
            || (&hi.0 - &lo.0) <= width_tol
            || d.abs() <= ctx.eps() * (64.0 * solver.q as f64);
        let same_as_lo = (d < 0.0) == (lo.1 < 0.0);
        best = Some(Sample { t: t.clone(), pin });
        if done {
            break;
        }
        if same_as_lo {
            lo = (t, d, offs);
            if side == -1 {
                hi.1 = &hi.1 / 2.0;
            }
            side = -1;
        } else {
            hi = (t, d, offs);
            if side == 1 {
                lo.1 = &lo.1 / 2.0;
            }
            side = 1;
        }
    }
    Ok((best.expect("at least one refinement step"), iterations, evals))
}

/// One measured gap.
#[derive(Clone, Debug)]
pub struct SpectrumRecord {
    pub p: u64,
    pub q: u64,
    pub table: Table,
    pub delta: Real,
    pub action_min: Real,
    pub action_minimax: Real,
    /// Precision the reported values were computed at.
    pub bits: u32,
    pub flags: Vec<Flag>,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    pub iterations: usize,
    pub evaluations: usize,
    pub grad_norm_min: f64,
    pub grad_norm_minimax: f64,
    /// Number of precision doublings performed.
    pub escalations: u32,
}

impl SpectrumRecord {
    pub fn flags_string(&self) -> String {
        self.flags.iter().map(|f| f.as_str()).collect::<Vec<_>>().join("|")
    }

    pub fn has_flag(&self, flag: Flag) -> bool {
        self.flags.contains(&flag)
    }
}

/// Options for [`delta_spectrum`].
#[derive(Clone, Debug)]
pub struct SpectrumOptions {
    /// Highest precision escalation may reach.
    pub bits_cap: u32,
    /// Evaluate different `q` on the rayon pool.
    pub parallel: bool,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            bits_cap: DEFAULT_BITS_CAP,
            parallel: true,
        }
    }
}

/// Measures `Δ^(p,q)` for each `q`, doubling the precision while the gap is
/// below `2^{-bits/4}`. Failures are reported per record.
pub fn delta_spectrum(
    problem: &TwistProblem,
    p: u64,
    q_list: &[u64],
    ctx: &RealContext,
    options: &SpectrumOptions,
) -> Vec<Result<SpectrumRecord>> {
    let run = |&q: &u64| spectrum_record(problem, p, q, ctx, options);
    if options.parallel {
        q_list.par_iter().map(run).collect()
    } else {
        q_list.iter().map(run).collect()
    }
}

/// A single record of [`delta_spectrum`].
pub fn spectrum_record(
    problem: &TwistProblem,
    p: u64,
    q: u64,
    ctx: &RealContext,
    options: &SpectrumOptions,
) -> Result<SpectrumRecord> {
    problem.check_pq(p, q)?;
    let mut local = ctx.clone();
    let mut escalations = 0;
    loop {
        let pair = find_orbit_pair(problem, p, q, &local)?;
        let bits = local.bits();
        let threshold = pow2(bits, -((bits / 4) as i64));
        let small = pair.delta < threshold;
        let can_escalate = bits * 2 <= options.bits_cap;
        if small && can_escalate {
            log::debug!("({p},{q}): delta below 2^-{} at {bits} bits, escalating", bits / 4);
            local = local.doubled();
            escalations += 1;
            continue;
        }
        let mut flags = pair.flags.clone();
        if small && !can_escalate {
            flags.push(Flag::BitsCap);
        }
        return Ok(SpectrumRecord {
            p,
            q,
            table: problem.table,
            delta: pair.delta,
            action_min: pair.minimizing.action,
            action_minimax: pair.minimax.action,
            bits,
            flags,
            diagnostics: Diagnostics {
                iterations: pair.iterations,
                evaluations: pair.evaluations,
                grad_norm_min: pair.minimizing.grad_norm.to_f64(),
                grad_norm_minimax: pair.minimax.grad_norm.to_f64(),
                escalations,
            },
        });
    }
}

/// The graphs `ζ`, `ζ̂` sampled over one turn of the base coordinate.
#[derive(Clone, Debug)]
pub struct GraphPair {
    /// Sample tangent angles.
    pub xi: Vec<Real>,
    /// Radial coordinate whose `q`-th iterate advances by exactly `p` turns.
    pub zeta: Vec<Real>,
    /// Radial coordinate of that `q`-th iterate.
    pub zeta_hat: Vec<Real>,
    /// Symplectic area between the two graphs.
    pub area: Real,
    /// Largest shooting residual over the samples.
    pub max_residual: Real,
}

/// Samples used by [`graph_pair`] for period `q`.
pub fn graph_samples(q: u64) -> usize {
    8 * q as usize + 32
}

/// Builds `ζ` and `ζ̂` by shooting: for each base angle `ξ` the initial
/// radial coordinate is corrected by secant steps until the `q`-th iterate
/// lands on `ξ + p` turns. The area uses the invariant density
/// (`sin r dr ds` inner, `r dr dα` outer).
pub fn graph_pair(problem: &TwistProblem, p: u64, q: u64, ctx: &RealContext) -> Result<GraphPair> {
    problem.check_pq(p, q)?;
    let n = graph_samples(q);
    let ev = problem.curve.eval(ctx.bits());
    let xi: Vec<Real> = (0..n).map(|i| ctx.two_pi() * (i as f64) / (n as f64)).collect();
    let chunk = 8;
    let results: Vec<Result<Vec<(Real, Real, Real, Real)>>> = xi
        .par_chunks(chunk)
        .map(|part| {
            let solver = Solver::new(problem, &ev, p, q, ctx);
            let mut seed: Option<Vec<Real>> = None;
            let mut out = Vec::with_capacity(part.len());
            for x in part {
                let pin = solver.solve(x, seed.as_deref())?;
                seed = Some(pin.offsets());
                let (z, zh, res) = shoot(&solver, x, &pin.terms[0].r0)?;
                let density = match problem.table {
                    Table::Inner => (z.cos() - zh.cos()).abs() * &pin.frames[0].rho,
                    Table::Outer => (zh.square() - z.square()).abs() / 2.0,
                };
                out.push((z, zh, density, res));
            }
            Ok(out)
        })
        .collect();
    let mut zeta = Vec::with_capacity(n);
    let mut zeta_hat = Vec::with_capacity(n);
    let mut sum = ctx.zero();
    let mut max_residual = ctx.zero();
    for part in results {
        for (z, zh, d, res) in part? {
            zeta.push(z);
            zeta_hat.push(zh);
            sum += d;
            max_residual = max_residual.max(res);
        }
    }
    Ok(GraphPair {
        xi,
        zeta,
        zeta_hat,
        area: sum * ctx.two_pi() / (n as f64),
        max_residual,
    })
}

/// Value of `ζ` at the tangent angle `xi`.
pub fn zeta_at(problem: &TwistProblem, p: u64, q: u64, xi: &Real, ctx: &RealContext) -> Result<Real> {
    problem.check_pq(p, q)?;
    let ev = problem.curve.eval(ctx.bits());
    let solver = Solver::new(problem, &ev, p, q, ctx);
    let pin = solver.solve(xi, None)?;
    Ok(shoot(&solver, xi, &pin.terms[0].r0)?.0)
}

/// Largest distance between the radial coordinates of an orbit and `ζ`
/// evaluated at its points.
pub fn graph_deviation(problem: &TwistProblem, orbit: &PeriodicOrbit, ctx: &RealContext) -> Result<Real> {
    let mut worst = ctx.zero();
    for (phi, r) in orbit.phis.iter().zip(&orbit.radial) {
        let z = zeta_at(problem, orbit.p, orbit.q, phi, ctx)?;
        worst = worst.max((z - r).abs());
    }
    Ok(worst)
}

/// Lifted angle and radial coordinate after `q` steps from `(ξ, r)`.
fn iterate(solver: &Solver<'_>, xi: &Real, r: &Real) -> Result<(Real, Real)> {
    let mut phi = xi.clone();
    let mut rr = r.clone();
    for _ in 0..solver.q {
        let (next, r1, _) = match solver.problem.table {
            Table::Inner => inner_step_phi(solver.ev, &phi, &rr, solver.ctx)?,
            Table::Outer => outer_step_alpha(solver.ev, &phi, &rr, solver.ctx)?,
        };
        phi = next;
        rr = r1;
    }
    Ok((phi, rr))
}

/// Secant shooting for `ζ(ξ)`; returns `(ζ, ζ̂, residual)`.
fn shoot(solver: &Solver<'_>, xi: &Real, seed: &Real) -> Result<(Real, Real, Real)> {
    let ctx = solver.ctx;
    let target = xi + &solver.lift;
    let tol = ctx.eps() * (256.0 * solver.q as f64);
    let mut r0 = seed.clone();
    let (x0, rh) = iterate(solver, xi, &r0)?;
    let mut g0 = &x0 - &target;
    if g0.abs() <= tol {
        return Ok((r0, rh, g0.abs()));
    }
    let mut r1 = &r0 + &(ctx.solver_tol() * r0.abs().max(ctx.real(1e-3)));
    for it in 1..=40 {
        let (x1, rh1) = iterate(solver, xi, &r1)?;
        let g1 = &x1 - &target;
        let slope = (&g1 - &g0) / (&r1 - &r0);
        if g1.abs() <= tol || slope.is_zero() || !slope.is_finite() || it == 40 {
            if g1.abs() > *ctx.solver_tol() {
                return Err(Error::NoConvergence {
                    what: "graph shooting",
                    iterations: it,
                    residual: g1.to_f64(),
                });
            }
            return Ok((r1, rh1, g1.abs()));
        }
        let next = &r1 - &(&g1 / &slope);
        r0 = r1;
        g0 = g1;
        r1 = next;
    }
    unreachable!("the loop returns on its last iteration")
}
