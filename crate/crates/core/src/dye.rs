//! Stimulated emission and absorption rates of the dye, modelled as two
//! Lorentzians offset by ±ΔΩ about the dye reference frequency Ω₀.
//!
//! The Lorentzians are evaluated at the detuning `ω_ν − Ω₀` of each mode, so
//! both the lateral index and the polarisation enter through the mode
//! frequency.

use serde::{Deserialize, Serialize};

use crate::cavity::{Mode, ModeId};
use crate::error::{invalid, Error, Result};

/// Dye spectral parameters and molecular rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyeParams {
    /// Spectral reference Ω₀, rad/s.
    pub omega0: f64,
    /// Offset ΔΩ of the emission/absorption peaks from Ω₀, rad/s.
    pub delta_omega: f64,
    /// Lorentzian full width δ, rad/s.
    pub linewidth: f64,
    /// Emission rate scale γ⁰↓, 1/s.
    pub gamma_down0: f64,
    /// Absorption rate scale γ⁰↑, 1/s.
    pub gamma_up0: f64,
    /// Spontaneous loss into unconfined modes γ↓, 1/s.
    pub gamma_down: f64,
    /// External pump rate γ↑, 1/s.
    pub gamma_up_pump: f64,
    /// Number of dye molecules M.
    pub molecules: f64,
    /// Light–matter coupling g, 1/s. Documentation only: the fitted rates
    /// replace the microscopic model.
    pub coupling: Option<f64>,
}

impl Default for DyeParams {
    /// Rhodamine 6G fit with a 10 GHz pump.
    fn default() -> Self {
        DyeParams {
            omega0: 3456e12,
            delta_omega: 4.18e12,
            linewidth: 50e12,
            gamma_down0: 10.0,
            gamma_up0: 10.0,
            gamma_down: 1e9,
            gamma_up_pump: 1e10,
            molecules: 1e9,
            coupling: Some(1e9),
        }
    }
}

impl DyeParams {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("dye.gamma_down0", self.gamma_down0),
            ("dye.gamma_up0", self.gamma_up0),
            ("dye.gamma_down", self.gamma_down),
            ("dye.gamma_up_pump", self.gamma_up_pump),
        ];
        for (name, v) in rates {
            if !(v >= 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be a non-negative rate, got {v}"));
            }
        }
        if !(self.linewidth > 0.0 && self.linewidth.is_finite()) {
            return invalid(format!("dye.linewidth must be positive, got {}", self.linewidth));
        }
        if !(self.molecules >= 1.0 && self.molecules.is_finite()) {
            return invalid(format!("dye.molecules must be at least 1, got {}", self.molecules));
        }
        if !self.omega0.is_finite() || !self.delta_omega.is_finite() {
            return invalid("dye.omega0 and dye.delta_omega must be finite");
        }
        Ok(())
    }

    pub fn with_pump(&self, gamma_up_pump: f64) -> Self {
        DyeParams { gamma_up_pump, ..*self }
    }

    /// Scales the absorption rate scale γ⁰↑.
    pub fn with_absorption_scale(&self, factor: f64) -> Self {
        DyeParams {
            gamma_up0: self.gamma_up0 * factor,
            ..*self
        }
    }

    fn lorentzian(&self, scale: f64, offset: f64) -> f64 {
        let d2 = self.linewidth * self.linewidth;
        d2 * scale / (0.25 * d2 + offset * offset)
    }

    /// Emission rate at angular frequency `omega`.
    pub fn emission_at(&self, omega: f64) -> f64 {
        self.lorentzian(self.gamma_down0, (omega - self.omega0) - self.delta_omega)
    }

    /// Absorption rate at angular frequency `omega`.
    pub fn absorption_at(&self, omega: f64) -> f64 {
        self.lorentzian(self.gamma_up0, (omega - self.omega0) + self.delta_omega)
    }
}

/// Detuning of a mode from the dye reference, rad/s.
pub fn detuning(dye: &DyeParams, mode: &Mode) -> f64 {
    mode.omega - dye.omega0
}

/// Stimulated emission rate γ↓ν into `mode`, 1/s.
pub fn emission_rate(dye: &DyeParams, mode: &Mode) -> f64 {
    dye.emission_at(mode.omega)
}

/// Absorption rate γ↑ν out of `mode`, 1/s.
pub fn absorption_rate(dye: &DyeParams, mode: &Mode) -> f64 {
    dye.absorption_at(mode.omega)
}

/// Emission and absorption rates of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeRates {
    /// γ↓ν, 1/s.
    pub emission: f64,
    /// γ↑ν, 1/s.
    pub absorption: f64,
}

/// Per-mode rates, in the same order as the mode list they were built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    ids: Vec<ModeId>,
    rates: Vec<ModeRates>,
}

impl RateTable {
    /// Builds a table from explicit entries. Every rate must be positive and finite.
    pub fn from_entries(entries: Vec<(ModeId, ModeRates)>) -> Result<Self> {
        if entries.is_empty() {
            return invalid("rate table needs at least one mode");
        }
        for (id, r) in &entries {
            for v in [r.emission, r.absorption] {
                if !(v > 0.0 && v.is_finite()) {
                    return invalid(format!(
                        "rates for mode {}{} must be positive and finite, got {v}",
                        id.polarisation, id.l
                    ));
                }
            }
        }
        let (ids, rates) = entries.into_iter().unzip();
        Ok(RateTable { ids, rates })
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn rates(&self) -> &[ModeRates] {
        &self.rates
    }

    pub fn ids(&self) -> &[ModeId] {
        &self.ids
    }

    pub fn get(&self, index: usize) -> Option<&ModeRates> {
        self.rates.get(index)
    }

    /// Checks that the table was built for exactly this mode list.
    pub fn check_modes(&self, modes: &[Mode]) -> Result<()> {
        if modes.len() != self.ids.len() {
            return Err(Error::ModeMismatch(format!(
                "{} modes but {} rate entries",
                modes.len(),
                self.ids.len()
            )));
        }
        if let Some((m, id)) = modes.iter().zip(&self.ids).find(|(m, id)| m.id() != **id) {
            return Err(Error::ModeMismatch(format!(
                "mode {}{} does not match rate entry {}{}",
                m.polarisation, m.l, id.polarisation, id.l
            )));
        }
        Ok(())
    }

    /// Copy with every absorption rate multiplied by `factor`.
    pub fn with_absorption_scale(&self, factor: f64) -> Result<Self> {
        let entries = self
            .ids
            .iter()
            .zip(&self.rates)
            .map(|(id, r)| {
                (
                    *id,
                    ModeRates {
                        emission: r.emission,
                        absorption: r.absorption * factor,
                    },
                )
            })
            .collect();
        Self::from_entries(entries)
    }
}

/// Tabulates emission and absorption rates for every mode.
pub fn build_rate_table(dye: &DyeParams, modes: &[Mode]) -> Result<RateTable> {
    if modes.is_empty() {
        return invalid("cannot build a rate table for an empty mode list");
    }
    dye.validate()?;
    let entries = modes
        .iter()
        .map(|m| {
            (
                m.id(),
                ModeRates {
                    emission: emission_rate(dye, m),
                    absorption: absorption_rate(dye, m),
                },
            )
        })
        .collect();
    RateTable::from_entries(entries)
}

/// Detuning below which (and above the mirror image of which) the ratio
/// γ↓/γ↑ is monotonically decreasing in frequency: `sqrt(δ²/4 + ΔΩ²)`.
pub fn ratio_turning_point(dye: &DyeParams) -> f64 {
    (0.25 * dye.linewidth * dye.linewidth + dye.delta_omega * dye.delta_omega).sqrt()
}
