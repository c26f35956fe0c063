//! Finite-difference sensitivity of S3 to the enantiomeric excess.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::setup::{MediumSpec, Setup};

/// Largest number of step doublings attempted when the difference is
/// buried in solver noise.
const MAX_DOUBLINGS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub epsilon: f64,
    /// Half-width of the central difference actually used.
    pub step: f64,
    /// `dS3/dε`.
    pub slope: f64,
    pub s3_minus: f64,
    pub s3_plus: f64,
    /// Smallest resolvable S3 difference, `10 · abs_tol / κ`.
    pub noise_floor: f64,
    /// Set when even the widest admissible step stays below the noise floor.
    pub noise_dominated: bool,
    /// Both bracketing solves converged.
    pub converged: bool,
}

fn s3_at(base: &Setup, epsilon: f64) -> Result<(f64, bool)> {
    let solved = base.with_epsilon(epsilon)?.solve(None)?;
    match solved.observables.s3 {
        Some(s) => Ok((s, solved.steady.converged)),
        None => domain(format!("S3 undefined at epsilon = {epsilon}: the cavity is empty")),
    }
}

/// Central difference of S3(ε) through the whole chain from the sample to
/// the steady state, at the pump configured in `base`.
///
/// The step is halved until the bracket fits in `[0, 1]` and doubled while
/// the difference stays below the noise floor.
pub fn sensitivity(base: &Setup, epsilon0: f64, step: f64) -> Result<SensitivityReport> {
    if !(epsilon0 > 0.0 && epsilon0 < 1.0) {
        return invalid(format!("sensitivity needs 0 < epsilon < 1, got {epsilon0}"));
    }
    if !(step > 0.0 && step.is_finite()) {
        return invalid(format!("sensitivity step must be positive, got {step}"));
    }
    if !matches!(base.medium, MediumSpec::Sample { .. }) {
        return invalid("sensitivity needs a [medium.sample] section");
    }
    let kappa = crate::numeric::max_of(base.modes()?.iter().map(|m| m.kappa));
    let noise_floor = 10.0 * base.solver.abs_tol / kappa;
    let fits = |h: f64| epsilon0 - h >= 0.0 && epsilon0 + h <= 1.0;

    let mut h = step;
    while !fits(h) {
        h *= 0.5;
    }
    let mut doublings = 0;
    loop {
        let (minus, ok_minus) = s3_at(base, epsilon0 - h)?;
        let (plus, ok_plus) = s3_at(base, epsilon0 + h)?;
        let noisy = (plus - minus).abs() < noise_floor;
        if !noisy || doublings == MAX_DOUBLINGS || !fits(2.0 * h) {
            return Ok(SensitivityReport {
                epsilon: epsilon0,
                step: h,
                slope: (plus - minus) / (2.0 * h),
                s3_minus: minus,
                s3_plus: plus,
                noise_floor,
                noise_dominated: noisy,
                converged: ok_minus && ok_plus,
            });
        }
        log::info!("S3 difference {:.3e} below noise floor at step {h}; doubling", (plus - minus).abs());
        h *= 2.0;
        doublings += 1;
    }
}
