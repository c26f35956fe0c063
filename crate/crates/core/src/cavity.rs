//! Polarised standing-wave modes of a curved-mirror cavity filled with a
//! chiral medium.
//!
//! Each polarisation σ sees its own light speed `c / n_σ`. In the paraxial
//! limit the lateral structure is a 2D harmonic oscillator, so the spectrum
//! for a fixed longitudinal index `j` is a uniform ladder
//! `ω = ω⁰_σ + l ω∥_σ` with `(l + 1)`-fold degenerate rungs.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, SPEED_OF_LIGHT};
use crate::error::{domain, invalid, Result};

/// Circular polarisation of a standing-wave mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarisation {
    #[serde(rename = "L")]
    Left,
    #[serde(rename = "R")]
    Right,
}

impl Polarisation {
    pub const BOTH: [Polarisation; 2] = [Polarisation::Left, Polarisation::Right];

    pub fn flipped(self) -> Self {
        match self {
            Polarisation::Left => Polarisation::Right,
            Polarisation::Right => Polarisation::Left,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Polarisation::Left => "L",
            Polarisation::Right => "R",
        }
    }
}

impl fmt::Display for Polarisation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Mirror geometry and loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Radius of curvature of both mirrors, m.
    pub mirror_radius: f64,
    /// Mirror separation on the optical axis, m.
    pub mirror_separation: f64,
    /// Longitudinal mode number `j`.
    pub longitudinal_index: u32,
    /// Amplitude loss per reflection, `|r| = 1 - mirror_loss`.
    pub mirror_loss: f64,
}

impl CavityParams {
    /// Geometry of the reference experiment: R = 1 m, L0 = 1.46 µm, j = 7, |r| = 0.99.
    pub fn reference() -> Self {
        CavityParams {
            mirror_radius: 1.0,
            mirror_separation: 1.46e-6,
            longitudinal_index: 7,
            mirror_loss: 0.01,
        }
    }

    pub fn new(mirror_radius: f64, mirror_separation: f64, longitudinal_index: u32, mirror_loss: f64) -> Result<Self> {
        let c = CavityParams {
            mirror_radius,
            mirror_separation,
            longitudinal_index,
            mirror_loss,
        };
        c.validate()?;
        Ok(c)
    }

    /// Full invariant check. Logs a warning when the paraxial expansion is
    /// questionable (`L0 / R > 1e-3`).
    pub fn validate(&self) -> Result<()> {
        self.check_geometry()?;
        if !(0.0..0.5).contains(&self.mirror_loss) {
            return invalid(format!(
                "cavity.mirror_loss must lie in [0, 0.5), got {}",
                self.mirror_loss
            ));
        }
        let ratio = self.mirror_separation / self.mirror_radius;
        if ratio > 1e-3 {
            log::warn!("L0/R = {ratio:.3e} exceeds 1e-3; paraxial mode energies may be inaccurate");
        }
        Ok(())
    }

    fn check_geometry(&self) -> Result<()> {
        if !(self.mirror_radius > 0.0 && self.mirror_radius.is_finite()) {
            return domain(format!("mirror radius must be positive, got {}", self.mirror_radius));
        }
        if !(self.mirror_separation > 0.0 && self.mirror_separation.is_finite()) {
            return domain(format!(
                "mirror separation must be positive, got {}",
                self.mirror_separation
            ));
        }
        if self.longitudinal_index == 0 {
            return domain("longitudinal index j must be at least 1");
        }
        Ok(())
    }
}

fn light_speed(n_sigma: f64) -> Result<f64> {
    if !(n_sigma > 1.0 && n_sigma.is_finite()) {
        return domain(format!("refractive index must exceed 1, got {n_sigma}"));
    }
    Ok(SPEED_OF_LIGHT / n_sigma)
}

/// Refractive indices seen by the two circular polarisations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumIndices {
    pub left: f64,
    pub right: f64,
}

impl MediumIndices {
    pub fn new(left: f64, right: f64) -> Result<Self> {
        let m = MediumIndices { left, right };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.left > 1.0 && self.right > 1.0) {
            return invalid(format!(
                "refractive indices must exceed 1, got n_L = {}, n_R = {}",
                self.left, self.right
            ));
        }
        if (self.left - self.right).abs() >= 0.1 {
            return invalid(format!(
                "|n_L - n_R| must stay below 0.1, got {}",
                (self.left - self.right).abs()
            ));
        }
        Ok(())
    }

    pub fn index(&self, pol: Polarisation) -> f64 {
        match pol {
            Polarisation::Left => self.left,
            Polarisation::Right => self.right,
        }
    }

    /// Same medium with the two polarisations exchanged.
    pub fn swapped(&self) -> Self {
        MediumIndices {
            left: self.right,
            right: self.left,
        }
    }
}

/// Identifies a mode within a single-`j` spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeId {
    pub polarisation: Polarisation,
    pub l: u32,
}

/// One polarised cavity mode (a degenerate rung of the ladder).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub j: u32,
    pub l: u32,
    pub polarisation: Polarisation,
    /// Angular frequency, rad/s.
    pub omega: f64,
    /// Number of degenerate lateral modes, `l + 1`.
    pub degeneracy: u32,
    /// Photon loss rate, 1/s.
    pub kappa: f64,
}

impl Mode {
    pub fn id(&self) -> ModeId {
        ModeId {
            polarisation: self.polarisation,
            l: self.l,
        }
    }
}

/// Lateral trap frequency `c_σ / sqrt(L0 R)`, rad/s.
pub fn lateral_frequency(cavity: &CavityParams, n_sigma: f64) -> Result<f64> {
    cavity.check_geometry()?;
    let c = light_speed(n_sigma)?;
    Ok(c / (cavity.mirror_separation * cavity.mirror_radius).sqrt())
}

/// Cutoff (l = 0) frequency: longitudinal resonance `π c_σ j / L0` plus the
/// lateral zero-point term, rad/s.
pub fn cutoff_frequency(cavity: &CavityParams, n_sigma: f64) -> Result<f64> {
    let lateral = lateral_frequency(cavity, n_sigma)?;
    Ok(longitudinal_frequency(cavity, n_sigma)? + lateral)
}

fn longitudinal_frequency(cavity: &CavityParams, n_sigma: f64) -> Result<f64> {
    cavity.check_geometry()?;
    let c = light_speed(n_sigma)?;
    Ok(std::f64::consts::PI * c * f64::from(cavity.longitudinal_index) / cavity.mirror_separation)
}

/// Effective photon mass `π ħ j / (c_σ L0)`, kg.
pub fn effective_mass(cavity: &CavityParams, n_sigma: f64) -> Result<f64> {
    cavity.check_geometry()?;
    let c = light_speed(n_sigma)?;
    Ok(std::f64::consts::PI * HBAR * f64::from(cavity.longitudinal_index) / (c * cavity.mirror_separation))
}

/// Mirror-limited decay rate `2 δ c_σ / L0`, 1/s.
pub fn cavity_decay(cavity: &CavityParams, n_sigma: f64) -> Result<f64> {
    cavity.check_geometry()?;
    if cavity.mirror_loss < 0.0 {
        return domain(format!("mirror loss must be non-negative, got {}", cavity.mirror_loss));
    }
    let c = light_speed(n_sigma)?;
    Ok(2.0 * cavity.mirror_loss * c / cavity.mirror_separation)
}

/// Enumerates `2 (l_max + 1)` modes ordered by polarisation (L first) and then
/// by `l`.
///
/// With `kappa_override` every mode gets that loss rate; otherwise the
/// polarisation-dependent mirror formula is used.
pub fn build_mode_set(
    cavity: &CavityParams,
    medium: &MediumIndices,
    l_max: u32,
    kappa_override: Option<f64>,
) -> Result<Vec<Mode>> {
    cavity.validate()?;
    medium.validate()?;
    if let Some(k) = kappa_override {
        if !(k > 0.0 && k.is_finite()) {
            return invalid(format!("kappa override must be positive, got {k}"));
        }
    }
    let mut modes = Vec::with_capacity(2 * (l_max as usize + 1));
    for pol in Polarisation::BOTH {
        let n = medium.index(pol);
        let base = cutoff_frequency(cavity, n)?;
        let lateral = lateral_frequency(cavity, n)?;
        let kappa = match kappa_override {
            Some(k) => k,
            None => cavity_decay(cavity, n)?,
        };
        if kappa <= 0.0 {
            return invalid("mode decay rate must be positive; set a kappa override or a non-zero mirror loss");
        }
        for l in 0..=l_max {
            modes.push(Mode {
                j: cavity.longitudinal_index,
                l,
                polarisation: pol,
                omega: base + f64::from(l) * lateral,
                degeneracy: l + 1,
                kappa,
            });
        }
    }
    Ok(modes)
}

/// Exchanges the polarisation labels of a mode list, keeping the L-first order.
pub fn relabel_polarisations(modes: &[Mode]) -> Vec<Mode> {
    let mut out: Vec<Mode> = modes
        .iter()
        .map(|m| Mode {
            polarisation: m.polarisation.flipped(),
            ..*m
        })
        .collect();
    out.sort_by_key(|m| m.id());
    out
}
