//! Normal-form machinery for near-integrable twist maps around a resonant
//! circle: Fourier–Taylor series and their norms, the `K`-cut-off, the
//! homological equation, averaging steps and one Neishtadt step.
//!
//! Series are truncated explicitly (`K_max` harmonics, `J_max` powers of
//! `y`); every operation that discards terms can report a tail estimate so
//! callers can scale their tolerances.

mod averaging;
pub(crate) mod grid;
mod homological;
mod map_series;
mod series;

pub use averaging::{
    averaging_ladder, averaging_step, linear_double, linear_double_residual, neishtadt_step, AveragingStep,
    LadderRung, NeishtadtStep,
};
pub use homological::{
    bernoulli, big_omega, divisor_coefficients, homological_residual, homological_tail, omega, solve_homological,
};
pub use map_series::{Conjugated, MapSeries, NearIdentity};
pub use series::{FourierTaylorSeries, SeriesJson, SeriesTerm, DEFAULT_JMAX, DEFAULT_KMAX};

/// `‖g‖_{a,b}`, the Fourier norm with the coefficient-sum majorant.
pub fn fourier_norm(g: &FourierTaylorSeries, a: &Real, b: &Real) -> Real {
    g.fourier_norm(a, b)
}

/// `(g^{<K}, g^{≥K})`.
pub fn k_cutoff(g: &FourierTaylorSeries, cutoff: usize) -> (FourierTaylorSeries, FourierTaylorSeries) {
    g.k_cutoff(cutoff)
}

use crate::real::Real;
