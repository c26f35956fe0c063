//! A fully resolved physical scenario and the overrides that sweeps apply
//! to it.

use serde::{Deserialize, Serialize};

use crate::cavity::{build_mode_set, CavityParams, MediumIndices, Mode};
use crate::chiral::{chi_from_sample, refractive_indices, ChiralSample, SolventParams};
use crate::dye::{build_rate_table, DyeParams, RateTable};
use crate::dynamics::{find_steady_state, SolverConfig, SteadyState, SystemState};
use crate::error::{invalid, Result};
use crate::observables::{stokes_s3, Observables};

/// Where the two refractive indices come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediumSpec {
    Indices(MediumIndices),
    Sample {
        sample: ChiralSample,
        solvent: SolventParams,
    },
}

impl MediumSpec {
    /// Chiral parameter: half the index splitting, positive when `n_L > n_R`.
    pub fn chi(&self) -> f64 {
        match self {
            MediumSpec::Indices(ix) => 0.5 * (ix.left - ix.right),
            MediumSpec::Sample { sample, solvent } => chi_from_sample(sample, solvent),
        }
    }

    /// Index of the achiral solution.
    pub fn base_index(&self) -> f64 {
        match self {
            MediumSpec::Indices(ix) => 0.5 * (ix.left + ix.right),
            MediumSpec::Sample { solvent, .. } => solvent.base_index,
        }
    }

    pub fn indices(&self) -> Result<MediumIndices> {
        match self {
            MediumSpec::Indices(ix) => {
                ix.validate()?;
                Ok(*ix)
            }
            MediumSpec::Sample { sample, solvent } => {
                sample.validate()?;
                solvent.validate()?;
                refractive_indices(solvent.base_index, chi_from_sample(sample, solvent))
            }
        }
    }
}

/// Everything needed to build and solve one rate-equation problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub cavity: CavityParams,
    pub medium: MediumSpec,
    /// Highest lateral index; the ladder has `2 (l_max + 1)` modes.
    pub l_max: u32,
    /// Common loss rate for every mode, 1/s.
    pub kappa_override: Option<f64>,
    pub dye: DyeParams,
    pub solver: SolverConfig,
}

/// Modes, rates and steady state of one solved setup.
#[derive(Debug, Clone)]
pub struct Solved {
    pub modes: Vec<Mode>,
    pub rates: RateTable,
    pub steady: SteadyState,
    pub observables: Observables,
}

impl Setup {
    /// Reference parameters with the split indices `n_L = 1.3435`,
    /// `n_R = 1.3395` and a 100 MHz loss rate.
    pub fn reference() -> Self {
        let kappa = 1e8;
        Setup {
            cavity: CavityParams::reference(),
            medium: MediumSpec::Indices(MediumIndices {
                left: 1.3435,
                right: 1.3395,
            }),
            l_max: 200,
            kappa_override: Some(kappa),
            dye: DyeParams::default(),
            solver: SolverConfig::for_kappa(kappa),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cavity.validate()?;
        self.medium.indices()?;
        self.dye.validate()?;
        self.solver.validate()
    }

    pub fn modes(&self) -> Result<Vec<Mode>> {
        build_mode_set(&self.cavity, &self.medium.indices()?, self.l_max, self.kappa_override)
    }

    pub fn rates(&self, modes: &[Mode]) -> Result<RateTable> {
        build_rate_table(&self.dye, modes)
    }

    /// Replaces the medium by explicit indices `n ± χ` around the current
    /// base index.
    pub fn with_chi(&self, chi: f64) -> Result<Self> {
        let indices = refractive_indices(self.medium.base_index(), chi)?;
        Ok(Setup {
            medium: MediumSpec::Indices(indices),
            ..*self
        })
    }

    /// Sets a signed enantiomeric excess; requires a sample-derived medium.
    pub fn with_epsilon(&self, signed_epsilon: f64) -> Result<Self> {
        match self.medium {
            MediumSpec::Sample { sample, solvent } => Ok(Setup {
                medium: MediumSpec::Sample {
                    sample: sample.with_signed_excess(signed_epsilon),
                    solvent,
                },
                ..*self
            }),
            MediumSpec::Indices(_) => invalid("an enantiomeric-excess axis needs a [medium.sample] section"),
        }
    }

    pub fn with_pump(&self, pump: f64) -> Self {
        Setup {
            dye: self.dye.with_pump(pump),
            ..*self
        }
    }

    /// Scales the absorption amplitude γ⁰↑.
    pub fn with_absorption_scale(&self, factor: f64) -> Self {
        Setup {
            dye: self.dye.with_absorption_scale(factor),
            ..*self
        }
    }

    /// Builds the ladder and finds its steady state.
    pub fn solve(&self, initial: Option<&SystemState>) -> Result<Solved> {
        let modes = self.modes()?;
        let rates = self.rates(&modes)?;
        let steady = find_steady_state(&rates, &modes, &self.dye, &self.solver, initial)?;
        let observables = stokes_s3(&steady, &modes)?;
        Ok(Solved {
            modes,
            rates,
            steady,
            observables,
        })
    }
}
