//! Chiral susceptibility from a description of the dissolved solute.
//!
//! Sign convention: a positive χ raises `n_L`. A sample whose dominant
//! enantiomer is tagged `R` produces a positive χ, so the left-polarised
//! ladder sits lower in frequency.

use serde::{Deserialize, Serialize};

use crate::cavity::{MediumIndices, Polarisation};
use crate::constants::{ATOMIC_MASS_UNIT, SPECIFIC_ROTATION_UNIT};
use crate::error::{domain, invalid, Result};

/// Prefactor of the closed-form `|χ| = K θ m_u ε α²` for methanol at 546 nm.
pub const CHI_PREFACTOR: f64 = 2.14e-8;

/// A chiral solute in solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiralSample {
    /// Tabulated specific rotation, degrees (non-negative; handedness lives in `dominant`).
    pub theta: f64,
    /// Molecular mass in atomic mass units.
    pub molar_mass_u: f64,
    /// Volume fraction of the chiral solute.
    pub alpha: f64,
    /// Enantiomeric excess `|α_R − α_L|`.
    pub epsilon: f64,
    /// Enantiomer present in excess.
    pub dominant: Polarisation,
}

impl ChiralSample {
    /// Glucose (180 u, θ = 44°) at 40 % volume fraction, pure R.
    pub fn glucose() -> Self {
        ChiralSample {
            theta: 44.0,
            molar_mass_u: 180.0,
            alpha: 0.4,
            epsilon: 1.0,
            dominant: Polarisation::Right,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return invalid(format!("sample.theta must be non-negative, got {}", self.theta));
        }
        if !(self.molar_mass_u > 0.0 && self.molar_mass_u.is_finite()) {
            return invalid(format!("sample.molar_mass_u must be positive, got {}", self.molar_mass_u));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return invalid(format!("sample.alpha must lie in [0, 1], got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return invalid(format!("sample.epsilon must lie in [0, 1], got {}", self.epsilon));
        }
        Ok(())
    }

    /// Same sample with a signed excess: negative values hand the excess to
    /// the other enantiomer.
    pub fn with_signed_excess(&self, signed_epsilon: f64) -> Self {
        let dominant = if signed_epsilon < 0.0 {
            self.dominant.flipped()
        } else {
            self.dominant
        };
        ChiralSample {
            epsilon: signed_epsilon.abs(),
            dominant,
            ..*self
        }
    }

    fn handedness(&self) -> f64 {
        match self.dominant {
            Polarisation::Right => 1.0,
            Polarisation::Left => -1.0,
        }
    }
}

/// Solvent in which the sample is dissolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolventParams {
    /// Molecular number density, 1/m³.
    pub number_density: f64,
    /// Refractive index of the achiral solution.
    pub base_index: f64,
    /// Operating wavelength of the cavity, m.
    pub wavelength: f64,
}

impl SolventParams {
    /// Methanol at the 546 nm operating wavelength.
    pub fn methanol() -> Self {
        SolventParams {
            number_density: 1.488e28,
            base_index: 1.34,
            wavelength: 546e-9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.number_density > 0.0 && self.number_density.is_finite()) {
            return invalid(format!("solvent.number_density must be positive, got {}", self.number_density));
        }
        if !(self.base_index > 1.0) {
            return invalid(format!("solvent.base_index must exceed 1, got {}", self.base_index));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return invalid(format!("solvent.wavelength must be positive, got {}", self.wavelength));
        }
        Ok(())
    }
}

/// Signed rotation strength `Θ = α (α_R − α_L) θ · 0.01 m²/kg`.
pub fn specific_rotation(sample: &ChiralSample) -> f64 {
    sample.alpha * sample.handedness() * sample.epsilon * sample.theta * SPECIFIC_ROTATION_UNIT
}

/// Signed chiral parameter `χ = Θ α ρ m λ / 2π`.
pub fn chi_from_sample(sample: &ChiralSample, solvent: &SolventParams) -> f64 {
    let mass = sample.molar_mass_u * ATOMIC_MASS_UNIT;
    specific_rotation(sample) * sample.alpha * solvent.number_density * mass * solvent.wavelength
        / (2.0 * std::f64::consts::PI)
}

/// Closed-form magnitude `|χ| = 2.14e-8 θ m_u ε α²` (methanol, 546 nm).
pub fn chi_quick(theta: f64, molar_mass_u: f64, epsilon: f64, alpha: f64) -> f64 {
    CHI_PREFACTOR * theta * molar_mass_u * epsilon * alpha * alpha
}

/// Split indices `n_L = n + χ`, `n_R = n − χ`.
pub fn refractive_indices(n_base: f64, chi: f64) -> Result<MediumIndices> {
    if !(n_base > 1.0) {
        return domain(format!("base refractive index must exceed 1, got {n_base}"));
    }
    if !(chi.abs() < n_base - 1.0) {
        return domain(format!("|chi| = {} too large for base index {n_base}", chi.abs()));
    }
    Ok(MediumIndices {
        left: n_base + chi,
        right: n_base - chi,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn racemic_and_empty_samples_are_achiral() {
        let s = ChiralSample {
            epsilon: 0.0,
            ..ChiralSample::glucose()
        };
        assert_eq!(specific_rotation(&s), 0.0);
        let s = ChiralSample {
            alpha: 0.0,
            ..ChiralSample::glucose()
        };
        assert_eq!(chi_from_sample(&s, &SolventParams::methanol()), 0.0);
        assert_eq!(chi_quick(0.0, 180.0, 1.0, 0.4), 0.0);
    }

    #[test]
    fn glucose_rotation_strength() {
        // 0.4 * 1 * 44 * 0.01
        assert_relative_eq!(specific_rotation(&ChiralSample::glucose()), 0.176, max_relative = 1e-14);
        let left = ChiralSample {
            dominant: Polarisation::Left,
            ..ChiralSample::glucose()
        };
        assert_eq!(specific_rotation(&left), -specific_rotation(&ChiralSample::glucose()));
    }

    #[test]
    fn glucose_in_methanol() {
        let chi = chi_from_sample(&ChiralSample::glucose(), &SolventParams::methanol());
        assert_relative_eq!(chi, 2.7e-5, max_relative = 1e-2);
        let quick = chi_quick(44.0, 180.0, 1.0, 0.4);
        assert_relative_eq!(quick, 2.71e-5, max_relative = 1e-3);
        assert_relative_eq!(quick / 2.0, chi_quick(44.0, 180.0, 0.5, 0.4), max_relative = 1e-15);
    }

    #[test]
    fn prefactor_from_density_chain() {
        // 0.01 ρ u λ / 2π
        let s = SolventParams::methanol();
        let k = 0.01 * s.number_density * ATOMIC_MASS_UNIT * s.wavelength / (2.0 * std::f64::consts::PI);
        assert_relative_eq!(k, 2.146e-8, max_relative = 1e-3);
        let g = ChiralSample::glucose();
        let ratio = chi_from_sample(&g, &s) / (g.theta * g.molar_mass_u * g.epsilon * g.alpha * g.alpha);
        assert_relative_eq!(ratio, CHI_PREFACTOR, max_relative = 5e-3);
    }

    #[test]
    fn index_pairs() {
        let m = refractive_indices(1.34, 0.0).unwrap();
        assert_eq!((m.left, m.right), (1.34, 1.34));
        let m = refractive_indices(1.3415, 2e-3).unwrap();
        assert_relative_eq!(m.left, 1.3435, max_relative = 1e-14);
        assert_relative_eq!(m.right, 1.3395, max_relative = 1e-14);
        let flipped = refractive_indices(1.3415, -2e-3).unwrap();
        assert_eq!(flipped, m.swapped());
        assert!(refractive_indices(1.34, 0.5).is_err());
        assert!(refractive_indices(0.9, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn chi_scaling(eps in 1e-4f64..1.0, alpha in 0.01f64..1.0) {
            let s = SolventParams::methanol();
            let base = ChiralSample { epsilon: eps, alpha, ..ChiralSample::glucose() };
            let c = chi_from_sample(&base, &s);
            let half_eps = chi_from_sample(&ChiralSample { epsilon: eps / 2.0, ..base }, &s);
            let half_alpha = chi_from_sample(&ChiralSample { alpha: alpha / 2.0, ..base }, &s);
            prop_assert!((half_eps / c - 0.5).abs() < 1e-12);
            prop_assert!((half_alpha / c - 0.25).abs() < 1e-12);
            let q = chi_quick(base.theta, base.molar_mass_u, eps, alpha);
            prop_assert!((c / q - 1.0).abs() < 5e-3);
        }

        #[test]
        fn index_mean_and_difference(n in 1.2f64..1.8, chi in -1e-2f64..1e-2) {
            let m = refractive_indices(n, chi).unwrap();
            prop_assert!(((m.left + m.right) / 2.0 - n).abs() <= 2.0 * f64::EPSILON * n);
            prop_assert!(((m.left - m.right) - 2.0 * chi).abs() <= 4.0 * f64::EPSILON * n);
        }

        #[test]
        fn enantiomer_swap_flips_sign(eps in 0.0f64..1.0) {
            let s = SolventParams::methanol();
            let r = ChiralSample { epsilon: eps, ..ChiralSample::glucose() };
            let l = ChiralSample { dominant: Polarisation::Left, ..r };
            prop_assert_eq!(chi_from_sample(&l, &s), -chi_from_sample(&r, &s));
        }
    }
}
