//! Photon/dye rate equations and their steady state.
//!
//! Photon numbers `N_ν` of each degenerate rung couple to the excited-state
//! fraction `p_e` of the dye through the total rates
//!
//! ```text
//! Γ↑ = γ↑ + Σ_ν (l+1) N_ν γ↑ν
//! Γ↓ = γ↓ + Σ_ν (l+1) (N_ν + 1) γ↓ν
//! ```
//!
//! Eliminating `p_e` adiabatically (`p_e = Γ↑ / (Γ↑ + Γ↓)`) leaves one
//! equation per mode. Two independent routes find its stationary point:
//!
//! * [`SolverMode::SemiDynamical`] integrates forward in time with a
//!   linearly implicit scheme and finishes with Newton's method once the
//!   trajectory has settled into the basin of the fixed point.
//! * [`SolverMode::FixedPoint`] uses that, for a given `p_e`, each balance
//!   equation is linear in `N_ν`. The problem collapses to a monotone scalar
//!   equation in `p_e` (photon loss equals net molecular excitation) which is
//!   solved by safeguarded Newton iteration.
//!
//! All reductions over modes are order independent, so relabelling the
//! polarisations permutes the solution bitwise.

mod balance;
mod relax;

use serde::{Deserialize, Serialize};

use crate::cavity::Mode;
use crate::dye::{DyeParams, RateTable};
use crate::error::{invalid, Error, Result};
use crate::numeric::{max_of, ordered_sum};

/// Photon numbers (one per mode, per degenerate lateral state) and the
/// excited-state fraction of the dye.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub photons: Vec<f64>,
    pub excited_fraction: f64,
}

impl SystemState {
    pub fn empty(n_modes: usize) -> Self {
        SystemState {
            photons: vec![0.0; n_modes],
            excited_fraction: 0.0,
        }
    }
}

/// Time derivatives of a [`SystemState`].
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub photons: Vec<f64>,
    pub excited_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    SemiDynamical,
    FixedPoint,
    BothCrosscheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mode: SolverMode,
    /// Tolerance on the per-photon residual `max_ν |Ṅ_ν| / (N_ν + 1)`, 1/s.
    pub abs_tol: f64,
    /// Tolerance on the relative distance to the stationary point, estimated
    /// by a full Newton step.
    pub rel_tol: f64,
    /// Integration horizon of the semi-dynamical route, s.
    pub max_time: f64,
    pub max_iters: usize,
    /// Relaxation factor applied to Newton updates, in (0, 1].
    pub damping: f64,
}

impl SolverConfig {
    /// Defaults scaled to the photon loss rate: `abs_tol = 1e-6 κ`,
    /// `max_time = 1e6 / κ`.
    pub fn for_kappa(kappa: f64) -> Self {
        SolverConfig {
            mode: SolverMode::SemiDynamical,
            abs_tol: 1e-6 * kappa,
            rel_tol: 1e-6,
            max_time: 1e6 / kappa,
            max_iters: 200_000,
            damping: 1.0,
        }
    }

    pub fn with_mode(self, mode: SolverMode) -> Self {
        SolverConfig { mode, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return invalid("solver tolerances must be positive");
        }
        if !(self.max_time > 0.0) {
            return invalid("solver.max_time must be positive");
        }
        if self.max_iters == 0 {
            return invalid("solver.max_iters must be at least 1");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return invalid(format!("solver.damping must lie in (0, 1], got {}", self.damping));
        }
        Ok(())
    }
}

/// Converged (or flagged non-converged) stationary state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub photons: Vec<f64>,
    pub excited_fraction: f64,
    /// Per-photon residual `max_ν |Ṅ_ν| / (N_ν + 1)` at the solution, 1/s.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when a negative photon number had to be clamped to zero.
    pub clamped: bool,
}

impl SteadyState {
    pub fn state(&self) -> SystemState {
        SystemState {
            photons: self.photons.clone(),
            excited_fraction: self.excited_fraction,
        }
    }

    /// Photon number summed over all degenerate states.
    pub fn total_photons(&self, modes: &[Mode]) -> f64 {
        ordered_sum(modes.iter().zip(&self.photons).map(|(m, n)| f64::from(m.degeneracy) * n))
    }
}

/// Flattened problem data shared by both solver routes.
#[derive(Debug, Clone)]
pub(crate) struct Problem {
    degeneracy: Vec<f64>,
    emission: Vec<f64>,
    absorption: Vec<f64>,
    kappa: Vec<f64>,
    pump: f64,
    gamma_down: f64,
    molecules: f64,
}

impl Problem {
    pub(crate) fn new(rates: &RateTable, modes: &[Mode], dye: &DyeParams) -> Result<Self> {
        rates.check_modes(modes)?;
        dye.validate()?;
        Ok(Problem {
            degeneracy: modes.iter().map(|m| f64::from(m.degeneracy)).collect(),
            emission: rates.rates().iter().map(|r| r.emission).collect(),
            absorption: rates.rates().iter().map(|r| r.absorption).collect(),
            kappa: modes.iter().map(|m| m.kappa).collect(),
            pump: dye.gamma_up_pump,
            gamma_down: dye.gamma_down,
            molecules: dye.molecules,
        })
    }

    pub(crate) fn len(&self) -> usize {
        self.kappa.len()
    }

    /// `(Γ↑, Γ↓)` for photon numbers `n`.
    pub(crate) fn totals(&self, n: &[f64]) -> (f64, f64) {
        let up = self.pump
            + ordered_sum((0..self.len()).map(|i| self.degeneracy[i] * n[i] * self.absorption[i]));
        let down = self.gamma_down
            + ordered_sum((0..self.len()).map(|i| self.degeneracy[i] * (n[i] + 1.0) * self.emission[i]));
        (up, down)
    }

    /// Net photon gain per mode at excited fraction `p`:
    /// `Ṅ_ν = a_ν N_ν + M γ↓ν p`.
    fn gain(&self, i: usize, p: f64) -> f64 {
        -self.kappa[i] + self.molecules * (self.emission[i] * p - self.absorption[i] * (1.0 - p))
    }

    fn derivative_at(&self, n: &[f64], p: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.gain(i, p) * n[i] + self.molecules * self.emission[i] * p;
        }
    }

    /// Adiabatic derivative with `p_e` at its quasi-stationary value.
    pub(crate) fn adiabatic(&self, n: &[f64], out: &mut [f64]) -> f64 {
        let (up, down) = self.totals(n);
        let p = up / (up + down);
        self.derivative_at(n, p, out);
        p
    }

    pub(crate) fn residual(&self, n: &[f64], deriv: &[f64]) -> f64 {
        max_of(n.iter().zip(deriv).map(|(n, d)| d.abs() / (n + 1.0)))
    }

    pub(crate) fn max_kappa(&self) -> f64 {
        max_of(self.kappa.iter().copied())
    }
}

fn check_state_len(state_len: usize, modes: &[Mode]) -> Result<()> {
    if state_len != modes.len() {
        return Err(Error::ModeMismatch(format!(
            "state has {state_len} photon numbers for {} modes",
            modes.len()
        )));
    }
    Ok(())
}

/// Total molecular excitation and de-excitation rates `(Γ↑, Γ↓)`.
pub fn total_rates(state: &SystemState, rates: &RateTable, modes: &[Mode], dye: &DyeParams) -> Result<(f64, f64)> {
    check_state_len(state.photons.len(), modes)?;
    let prob = Problem::new(rates, modes, dye)?;
    Ok(prob.totals(&state.photons))
}

/// Right-hand side of the coupled photon/dye rate equations, with cavity
/// leakage acting as a loss `−κ N_ν`.
pub fn full_derivatives(state: &SystemState, rates: &RateTable, modes: &[Mode], dye: &DyeParams) -> Result<Derivatives> {
    check_state_len(state.photons.len(), modes)?;
    let prob = Problem::new(rates, modes, dye)?;
    let (up, down) = prob.totals(&state.photons);
    let p = state.excited_fraction;
    let m = prob.molecules;
    let photons = (0..prob.len())
        .map(|i| {
            let n = state.photons[i];
            -prob.kappa[i] * n - prob.absorption[i] * n * m * (1.0 - p) + prob.emission[i] * (n + 1.0) * m * p
        })
        .collect();
    Ok(Derivatives {
        photons,
        excited_fraction: -down * p + up * (1.0 - p),
    })
}

/// Photon derivatives after adiabatic elimination of the dye:
/// `Ṅ_ν = −κ N_ν + M [γ↓ν (N_ν+1) Γ↑ − γ↑ν N_ν Γ↓] / (Γ↑ + Γ↓)`.
pub fn adiabatic_derivative(photons: &[f64], rates: &RateTable, modes: &[Mode], dye: &DyeParams) -> Result<Vec<f64>> {
    check_state_len(photons.len(), modes)?;
    let prob = Problem::new(rates, modes, dye)?;
    let (up, down) = prob.totals(photons);
    let m = prob.molecules;
    Ok((0..prob.len())
        .map(|i| {
            let n = photons[i];
            -prob.kappa[i] * n
                + m * (prob.emission[i] * (n + 1.0) * up - prob.absorption[i] * n * down) / (up + down)
        })
        .collect())
}

/// Finds the stationary state of the adiabatic rate equations.
///
/// Non-convergence is reported through [`SteadyState::converged`] rather
/// than an error; a disagreement between the two routes in
/// [`SolverMode::BothCrosscheck`] is an error.
pub fn find_steady_state(
    rates: &RateTable,
    modes: &[Mode],
    dye: &DyeParams,
    config: &SolverConfig,
    initial: Option<&SystemState>,
) -> Result<SteadyState> {
    config.validate()?;
    if let Some(init) = initial {
        check_state_len(init.photons.len(), modes)?;
    }
    let prob = Problem::new(rates, modes, dye)?;
    if prob.pump == 0.0 {
        // Undriven: the dye relaxes to the ground state and the cavity empties.
        return Ok(SteadyState {
            photons: vec![0.0; prob.len()],
            excited_fraction: 0.0,
            residual_norm: 0.0,
            iterations: 0,
            converged: true,
            clamped: false,
        });
    }
    match config.mode {
        SolverMode::SemiDynamical => Ok(relax::solve(&prob, config, initial.map(|s| s.photons.as_slice()))),
        SolverMode::FixedPoint => Ok(balance::solve(&prob, config, initial.map(|s| s.excited_fraction))),
        SolverMode::BothCrosscheck => {
            let dynamic = relax::solve(&prob, config, initial.map(|s| s.photons.as_slice()));
            let fixed = balance::solve(&prob, config, initial.map(|s| s.excited_fraction));
            let tol = 10.0 * config.abs_tol / prob.max_kappa();
            let worst = max_of(
                dynamic
                    .photons
                    .iter()
                    .zip(&fixed.photons)
                    .map(|(a, b)| (a - b).abs() / (a.max(*b) + 1.0)),
            );
            if !(worst <= tol) {
                return Err(Error::Crosscheck(format!(
                    "semi-dynamical and fixed-point photon numbers differ by {worst:.3e} (relative), tolerance {tol:.3e}"
                )));
            }
            Ok(SteadyState {
                iterations: dynamic.iterations + fixed.iterations,
                converged: dynamic.converged && fixed.converged,
                clamped: dynamic.clamped,
                ..fixed
            })
        }
    }
}
