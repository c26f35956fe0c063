//! Polarisation observables of a steady state.

use serde::{Deserialize, Serialize};

use crate::cavity::{Mode, Polarisation};
use crate::dynamics::SteadyState;
use crate::error::{Error, Result};
use crate::numeric::ordered_sum;

/// Total photon number below which S3 is reported as undefined.
pub const S3_FLOOR: f64 = 1e-6;

/// Stokes S3 and the occupations it is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    /// `(N_R − N_L) / (N_R + N_L)` from degeneracy-weighted totals; `None`
    /// when the cavity is (numerically) empty.
    pub s3: Option<f64>,
    /// The same ratio from the two l = 0 modes only.
    pub s3_ground: Option<f64>,
    pub total_left: f64,
    pub total_right: f64,
    pub ground_left: f64,
    pub ground_right: f64,
    pub excited_fraction: f64,
}

/// `(N_R − N_L) / (N_R + N_L)`, or `None` when `N_R + N_L < S3_FLOOR`.
pub fn stokes(left: f64, right: f64) -> Option<f64> {
    let total = left + right;
    (total >= S3_FLOOR).then(|| ((right - left) / total).clamp(-1.0, 1.0))
}

/// Observables of a steady state on the given modes.
pub fn stokes_s3(steady: &SteadyState, modes: &[Mode]) -> Result<Observables> {
    if steady.photons.len() != modes.len() {
        return Err(Error::ModeMismatch(format!(
            "steady state has {} photon numbers for {} modes",
            steady.photons.len(),
            modes.len()
        )));
    }
    let total = |pol: Polarisation| {
        ordered_sum(
            modes
                .iter()
                .zip(&steady.photons)
                .filter(|(m, _)| m.polarisation == pol)
                .map(|(m, n)| f64::from(m.degeneracy) * n),
        )
    };
    let ground = |pol: Polarisation| {
        modes
            .iter()
            .zip(&steady.photons)
            .find(|(m, _)| m.polarisation == pol && m.l == 0)
            .map_or(0.0, |(_, n)| *n)
    };
    let (total_left, total_right) = (total(Polarisation::Left), total(Polarisation::Right));
    let (ground_left, ground_right) = (ground(Polarisation::Left), ground(Polarisation::Right));
    Ok(Observables {
        s3: stokes(total_left, total_right),
        s3_ground: stokes(ground_left, ground_right),
        total_left,
        total_right,
        ground_left,
        ground_right,
        excited_fraction: steady.excited_fraction,
    })
}
