//! Closed-form single-mode results and the mode-pinning approximation.
//!
//! For one mode the stationary balance is a quadratic in `N`:
//!
//! ```text
//! κ(γ↑ν+γ↓ν) N² + [κ(γ↑+γ↓+γ↓ν) − M(γ↓ν γ↑ − γ↑ν γ↓)] N − M γ↓ν γ↑ = 0
//! ```
//!
//! Its linear coefficient vanishes at the finite-κ threshold, which tends to
//! the high-Q threshold `τ = γ↓ γ↑ν / γ↓ν` as `κ / M → 0`.

use serde::{Deserialize, Serialize};

use crate::cavity::{Mode, Polarisation};
use crate::dye::{DyeParams, ModeRates, RateTable};
use crate::error::{domain, invalid, Result};

/// High-Q condensation threshold `γ↓ γ↑ν / γ↓ν`, 1/s.
pub fn threshold_pump(gamma_down: f64, gamma_up_nu: f64, gamma_down_nu: f64) -> Result<f64> {
    if !(gamma_down_nu > 0.0) {
        return domain(format!("emission rate must be positive, got {gamma_down_nu}"));
    }
    Ok(gamma_down * gamma_up_nu / gamma_down_nu)
}

/// Pump at which the exact single-mode occupation turns over from the
/// thermal branch to the condensed branch (the linear coefficient of the
/// balance quadratic vanishes). Infinite when the mode can never condense.
pub fn effective_threshold(dye: &DyeParams, kappa: f64, rates: &ModeRates) -> f64 {
    let m = dye.molecules;
    let gain = m * rates.emission - kappa;
    if gain <= 0.0 {
        return f64::INFINITY;
    }
    (m * rates.absorption * dye.gamma_down + kappa * (dye.gamma_down + rates.emission)) / gain
}

/// High-Q single-mode occupation: zero below `τ`, linear in the pump above.
pub fn single_mode_high_q(pump: f64, dye: &DyeParams, kappa: f64, rates: &ModeRates) -> f64 {
    let m = dye.molecules;
    let slowest = dye
        .gamma_down
        .min(m * rates.absorption)
        .min(m * rates.emission);
    if kappa > 1e-2 * slowest {
        log::warn!("high-Q formula used with kappa = {kappa:.3e} not small against molecular rates ({slowest:.3e})");
    }
    let excess = pump * rates.emission - dye.gamma_down * rates.absorption;
    if excess <= 0.0 {
        return 0.0;
    }
    m * excess / (kappa * (rates.absorption + rates.emission))
}

/// Exact non-negative stationary occupation of an isolated mode.
pub fn single_mode_exact(pump: f64, kappa: f64, dye: &DyeParams, rates: &ModeRates) -> f64 {
    if pump <= 0.0 {
        return 0.0;
    }
    let m = dye.molecules;
    let (up, down) = (rates.absorption, rates.emission);
    let a = kappa * (up + down);
    let b = kappa * (pump + dye.gamma_down + down) - m * (down * pump - up * dye.gamma_down);
    let c = -m * down * pump;
    if a == 0.0 {
        return if b > 0.0 { -c / b } else { f64::INFINITY };
    }
    let disc = (b * b - 4.0 * a * c).sqrt();
    if b > 0.0 {
        -2.0 * c / (b + disc)
    } else {
        (disc - b) / (2.0 * a)
    }
}

/// Thresholds of the two ground (l = 0) modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// High-Q thresholds, 1/s.
    pub tau_left: f64,
    pub tau_right: f64,
    /// Finite-κ thresholds, 1/s.
    pub effective_left: f64,
    pub effective_right: f64,
    /// Polarisation with the lower threshold; `None` when they tie.
    pub winner: Option<Polarisation>,
}

impl ThresholdReport {
    /// Finite-κ threshold of the winning polarisation (the lower one on a tie).
    pub fn winner_threshold(&self) -> f64 {
        match self.winner {
            Some(Polarisation::Left) => self.effective_left,
            Some(Polarisation::Right) => self.effective_right,
            None => self.effective_left.min(self.effective_right),
        }
    }
}

fn ground_mode(modes: &[Mode], pol: Polarisation) -> Result<usize> {
    match modes.iter().position(|m| m.l == 0 && m.polarisation == pol) {
        Some(i) => Ok(i),
        None => invalid(format!("mode list has no ground mode for polarisation {pol}")),
    }
}

/// Ground-mode thresholds of both polarisations and the winner.
pub fn threshold_report(dye: &DyeParams, modes: &[Mode], rates: &RateTable) -> Result<ThresholdReport> {
    rates.check_modes(modes)?;
    let (li, ri) = (ground_mode(modes, Polarisation::Left)?, ground_mode(modes, Polarisation::Right)?);
    let (lr, rr) = (rates.rates()[li], rates.rates()[ri]);
    let tau_left = threshold_pump(dye.gamma_down, lr.absorption, lr.emission)?;
    let tau_right = threshold_pump(dye.gamma_down, rr.absorption, rr.emission)?;
    let winner = if tau_left < tau_right {
        Some(Polarisation::Left)
    } else if tau_right < tau_left {
        Some(Polarisation::Right)
    } else {
        None
    };
    Ok(ThresholdReport {
        tau_left,
        tau_right,
        effective_left: effective_threshold(dye, modes[li].kappa, &lr),
        effective_right: effective_threshold(dye, modes[ri].kappa, &rr),
        winner,
    })
}

/// One point of the pinning approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinnedPoint {
    pub pump: f64,
    pub left: f64,
    pub right: f64,
    /// `None` when both occupations vanish.
    pub s3: Option<f64>,
}

/// Two-mode pinning approximation on an ascending pump grid.
///
/// Below the winner's finite-κ threshold both ground modes follow their
/// isolated stationary occupation. Above it the winner keeps doing so while
/// the loser stays frozen at its occupation at the crossing. With equal
/// thresholds there is no winner and both evolve independently.
pub fn pinned_pair(
    pump_grid: &[f64],
    dye: &DyeParams,
    left: &ModeRates,
    right: &ModeRates,
    kappa: f64,
) -> Result<Vec<PinnedPoint>> {
    if pump_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("pinning requires a strictly ascending pump grid");
    }
    let eff_l = effective_threshold(dye, kappa, left);
    let eff_r = effective_threshold(dye, kappa, right);
    let winner = if eff_l < eff_r {
        Some((Polarisation::Left, eff_l))
    } else if eff_r < eff_l {
        Some((Polarisation::Right, eff_r))
    } else {
        None
    };
    let exact = |pump: f64, r: &ModeRates| single_mode_exact(pump, kappa, dye, r);
    Ok(pump_grid
        .iter()
        .map(|&pump| {
            let (nl, nr) = match winner {
                Some((Polarisation::Left, t)) if pump >= t => (exact(pump, left), exact(t, right)),
                Some((Polarisation::Right, t)) if pump >= t => (exact(t, left), exact(pump, right)),
                _ => (exact(pump, left), exact(pump, right)),
            };
            let total = nl + nr;
            PinnedPoint {
                pump,
                left: nl,
                right: nr,
                s3: (total > 0.0).then(|| (nr - nl) / total),
            }
        })
        .collect())
}
