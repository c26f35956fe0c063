//! Parameter sweeps over pump, chirality and absorption strength.
//!
//! A sweep is a set of traces: one trace per value of the optional outer
//! axis, each running over the inner axis. With warm starting, points of a
//! trace are solved in grid order, each seeded by its predecessor, and only
//! whole traces run in parallel. Results are always stored outer-major in
//! grid order, independent of scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{pinned_pair, threshold_report, PinnedPoint, ThresholdReport};
use crate::cavity::Polarisation;
use crate::dynamics::SystemState;
use crate::error::{invalid, Result};
use crate::numeric::{linspace, logspace};
use crate::observables::Observables;
use crate::setup::Setup;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// External pump rate γ↑, 1/s.
    Pump,
    /// Chiral parameter χ around the base index.
    Chi,
    /// Signed enantiomeric excess of the configured sample.
    Epsilon,
    /// Multiplier on the absorption amplitude γ⁰↑.
    #[serde(rename = "gamma_up0_scale")]
    AbsorptionScale,
}

impl Axis {
    pub fn label(self) -> &'static str {
        match self {
            Axis::Pump => "pump",
            Axis::Chi => "chi",
            Axis::Epsilon => "epsilon",
            Axis::AbsorptionScale => "gamma_up0_scale",
        }
    }

    pub fn apply(self, setup: &Setup, value: f64) -> Result<Setup> {
        match self {
            Axis::Pump => Ok(setup.with_pump(value)),
            Axis::Chi => setup.with_chi(value),
            Axis::Epsilon => setup.with_epsilon(value),
            Axis::AbsorptionScale => Ok(setup.with_absorption_scale(value)),
        }
    }
}

/// One axis and its strictly monotone grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisGrid {
    pub axis: Axis,
    pub values: Vec<f64>,
}

impl AxisGrid {
    pub fn new(axis: Axis, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return invalid(format!("{} grid is empty", axis.label()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid(format!("{} grid contains a non-finite value", axis.label()));
        }
        let up = values.windows(2).all(|w| w[1] > w[0]);
        let down = values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return invalid(format!("{} grid must be strictly monotone", axis.label()));
        }
        Ok(AxisGrid { axis, values })
    }

    pub fn linear(axis: Axis, start: f64, stop: f64, points: usize) -> Result<Self> {
        AxisGrid::new(axis, linspace(start, stop, points))
    }

    pub fn log(axis: Axis, start: f64, stop: f64, points: usize) -> Result<Self> {
        if !(start > 0.0 && stop > 0.0) {
            return invalid(format!("{} log grid needs positive bounds", axis.label()));
        }
        AxisGrid::new(axis, logspace(start, stop, points))
    }

    fn ascending(&self) -> bool {
        self.values.len() < 2 || self.values[1] > self.values[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: Setup,
    /// Axis traversed within a trace.
    pub inner: AxisGrid,
    /// One trace per value.
    pub outer: Option<AxisGrid>,
    pub warm_start: bool,
}

/// Solution at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub inner: f64,
    pub outer: Option<f64>,
    pub observables: Observables,
    pub converged: bool,
    pub residual_norm: f64,
    pub iterations: usize,
    pub clamped: bool,
}

/// Aggregate convergence information of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSummary {
    pub points: usize,
    pub converged: usize,
    pub clamped: usize,
    pub max_residual: f64,
    pub total_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    /// Outer-major, grid order.
    pub points: Vec<SweepPoint>,
    /// Pinning approximation on the pump grid (pump sweeps only).
    pub pinned: Option<Vec<PinnedPoint>>,
    /// Ground-mode thresholds of the base setup (pump sweeps only).
    pub thresholds: Option<ThresholdReport>,
    pub version: String,
}

impl SweepResult {
    pub fn summary(&self) -> ConvergenceSummary {
        ConvergenceSummary {
            points: self.points.len(),
            converged: self.points.iter().filter(|p| p.converged).count(),
            clamped: self.points.iter().filter(|p| p.clamped).count(),
            max_residual: crate::numeric::max_of(self.points.iter().map(|p| p.residual_norm)),
            total_iterations: self.points.iter().map(|p| p.iterations).sum(),
        }
    }

    pub fn all_converged(&self) -> bool {
        self.points.iter().all(|p| p.converged)
    }

    /// Points of the trace at the given outer index.
    pub fn trace(&self, outer_index: usize) -> &[SweepPoint] {
        let n = self.spec.inner.values.len();
        &self.points[outer_index * n..(outer_index + 1) * n]
    }
}

fn solve_point(setup: &Setup, inner: f64, outer: Option<f64>, initial: Option<&SystemState>) -> Result<(SweepPoint, SystemState)> {
    let solved = setup.solve(initial)?;
    let point = SweepPoint {
        inner,
        outer,
        observables: solved.observables,
        converged: solved.steady.converged,
        residual_norm: solved.steady.residual_norm,
        iterations: solved.steady.iterations,
        clamped: solved.steady.clamped,
    };
    if !point.converged {
        log::warn!(
            "no convergence at {inner:e} (outer {outer:?}): residual {:.3e}",
            solved.steady.residual_norm
        );
    }
    Ok((point, solved.steady.state()))
}

fn run_trace(spec: &SweepSpec, outer: Option<f64>) -> Result<Vec<SweepPoint>> {
    let base = match (&spec.outer, outer) {
        (Some(grid), Some(v)) => grid.axis.apply(&spec.base, v)?,
        _ => spec.base,
    };
    let axis = spec.inner.axis;
    if spec.warm_start {
        let mut seed: Option<SystemState> = None;
        let mut points = Vec::with_capacity(spec.inner.values.len());
        for &v in &spec.inner.values {
            let setup = axis.apply(&base, v)?;
            let (point, state) = solve_point(&setup, v, outer, seed.as_ref())?;
            seed = point.converged.then_some(state);
            points.push(point);
        }
        Ok(points)
    } else {
        spec.inner
            .values
            .par_iter()
            .map(|&v| Ok(solve_point(&axis.apply(&base, v)?, v, outer, None)?.0))
            .collect()
    }
}

/// Runs every trace of a sweep.
pub fn run(spec: &SweepSpec) -> Result<SweepResult> {
    spec.base.validate()?;
    if spec.outer.as_ref().is_some_and(|o| o.axis == spec.inner.axis) {
        return invalid("sweep axes must differ");
    }
    let points = match &spec.outer {
        None => run_trace(spec, None)?,
        Some(grid) => grid
            .values
            .par_iter()
            .map(|&v| run_trace(spec, Some(v)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect(),
    };
    Ok(SweepResult {
        spec: spec.clone(),
        points,
        pinned: None,
        thresholds: None,
        version: crate::VERSION.to_string(),
    })
}

/// Pump sweep with the pinning comparison on the same grid.
pub fn pump_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.inner.axis != Axis::Pump || spec.outer.is_some() {
        return invalid("a pump sweep has a single pump axis");
    }
    if !spec.inner.ascending() {
        return invalid("the pump axis must be ascending");
    }
    let mut result = run(spec)?;
    let modes = spec.base.modes()?;
    let rates = spec.base.rates(&modes)?;
    let ground = |pol: Polarisation| {
        modes
            .iter()
            .position(|m| m.l == 0 && m.polarisation == pol)
            .expect("mode set always contains both ground modes")
    };
    let (li, ri) = (ground(Polarisation::Left), ground(Polarisation::Right));
    // Both ground modes share κ unless the mirror formula is used, where they
    // differ only through the index splitting.
    let kappa = 0.5 * (modes[li].kappa + modes[ri].kappa);
    result.pinned = Some(pinned_pair(
        &spec.inner.values,
        &spec.base.dye,
        &rates.rates()[li],
        &rates.rates()[ri],
        kappa,
    )?);
    result.thresholds = Some(threshold_report(&spec.base.dye, &modes, &rates)?);
    Ok(result)
}

/// S3 against χ or ε, optionally for a family of absorption scales.
pub fn chi_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    if !matches!(spec.inner.axis, Axis::Chi | Axis::Epsilon) {
        return invalid("a chirality sweep runs over chi or epsilon");
    }
    if spec.outer.as_ref().is_some_and(|o| o.axis != Axis::AbsorptionScale) {
        return invalid("a chirality sweep family varies gamma_up0_scale only");
    }
    run(spec)
}

/// Two-dimensional sweep.
pub fn grid_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.outer.is_none() {
        return invalid("a grid sweep needs two axes");
    }
    run(spec)
}
