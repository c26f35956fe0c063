//! Built-in consistency checks: solver routes against closed forms and
//! against each other, and the exact symmetries of the model.

use std::fmt;

use serde::Serialize;

use crate::analytic::{effective_threshold, single_mode_exact, threshold_report};
use crate::cavity::Polarisation;
use crate::chiral::{chi_from_sample, chi_quick, ChiralSample, SolventParams};
use crate::dynamics::{find_steady_state, SolverMode};
use crate::dye::RateTable;
use crate::error::Result;
use crate::setup::{MediumSpec, Setup};

/// Largest ladder the checks run on.
const MAX_L: u32 = 40;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfTestReport {
    pub checks: Vec<Check>,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for SelfTestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

fn check(name: &'static str, outcome: Result<(bool, String)>) -> Check {
    match outcome {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

/// Isolated ground mode against the exact quadratic, at multiples of its
/// finite-κ threshold.
fn single_mode(base: &Setup) -> Result<(bool, String)> {
    let modes = base.modes()?;
    let rates = base.rates(&modes)?;
    let i = modes.iter().position(|m| m.l == 0).unwrap_or(0);
    let mode = modes[i];
    let r = rates.rates()[i];
    let table = RateTable::from_entries(vec![(mode.id(), r)])?;
    let tau = effective_threshold(&base.dye, mode.kappa, &r);
    let tau = if tau.is_finite() { tau } else { base.dye.gamma_up_pump };
    let mut worst: f64 = 0.0;
    for factor in [0.5, 1.0, 2.0, 5.0] {
        let dye = base.dye.with_pump(factor * tau);
        let steady = find_steady_state(&table, &[mode], &dye, &base.solver, None)?;
        let exact = single_mode_exact(dye.gamma_up_pump, mode.kappa, &dye, &r);
        worst = worst.max((steady.photons[0] - exact).abs() / (exact + 1.0));
    }
    Ok((worst <= 1e-8, format!("worst relative deviation {worst:.2e} (limit 1e-8)")))
}

fn crosscheck(base: &Setup) -> Result<(bool, String)> {
    let solver = base.solver.with_mode(SolverMode::BothCrosscheck);
    let mut residual: f64 = 0.0;
    for factor in [0.1, 1.0, 10.0] {
        let setup = Setup {
            solver,
            ..base.with_pump(factor * base.dye.gamma_up_pump)
        };
        let solved = setup.solve(None)?;
        residual = residual.max(solved.steady.residual_norm);
    }
    Ok((true, format!("routes agree at 0.1x, 1x and 10x pump; worst residual {residual:.2e} 1/s")))
}

fn relabelling(base: &Setup) -> Result<(bool, String)> {
    let indices = base.medium.indices()?;
    let swapped = Setup {
        medium: MediumSpec::Indices(indices.swapped()),
        ..*base
    };
    let a = base.solve(None)?.observables;
    let b = swapped.solve(None)?.observables;
    let exact = a.total_left == b.total_right
        && a.total_right == b.total_left
        && a.excited_fraction == b.excited_fraction
        && a.s3.map(|s| -s) == b.s3;
    Ok((exact, format!("S3 {:?} -> {:?}", a.s3, b.s3)))
}

fn chi_antisymmetry(base: &Setup) -> Result<(bool, String)> {
    let chi = match base.medium.chi() {
        0.0 => 1e-5,
        c => c,
    };
    let a = base.with_chi(chi)?.solve(None)?.observables;
    let b = base.with_chi(-chi)?.solve(None)?.observables;
    let exact = a.s3.map(|s| -s) == b.s3 && a.ground_left == b.ground_right;
    Ok((exact, format!("chi = {chi:e}: S3 {:?} vs {:?}", a.s3, b.s3)))
}

fn degenerate_threshold(base: &Setup) -> Result<(bool, String)> {
    let setup = base.with_chi(0.0)?;
    let modes = setup.modes()?;
    let report = threshold_report(&setup.dye, &modes, &setup.rates(&modes)?)?;
    let ok = report.tau_left == report.tau_right && report.winner.is_none();
    Ok((ok, format!("tau_L = {:e}, tau_R = {:e}", report.tau_left, report.tau_right)))
}

fn chirality_conversion() -> Result<(bool, String)> {
    let solvent = SolventParams::methanol();
    let mut worst: f64 = 0.0;
    for epsilon in [0.1, 0.5, 1.0] {
        let sample = ChiralSample {
            epsilon,
            ..ChiralSample::glucose()
        };
        let full = chi_from_sample(&sample, &solvent).abs();
        let quick = chi_quick(sample.theta, sample.molar_mass_u, epsilon, sample.alpha);
        worst = worst.max((full - quick).abs() / quick);
    }
    Ok((worst <= 1e-2, format!("closed form within {worst:.2e} (limit 1e-2)")))
}

fn winner_sign(base: &Setup) -> Result<(bool, String)> {
    let setup = base.with_chi(1e-5)?.with_pump(10.0 * base.dye.gamma_up_pump.max(1e9));
    let modes = setup.modes()?;
    let report = threshold_report(&setup.dye, &modes, &setup.rates(&modes)?)?;
    let s3 = setup.solve(None)?.observables.s3;
    let ok = report.winner == Some(Polarisation::Left) && s3.is_some_and(|s| s < 0.0);
    Ok((ok, format!("winner {:?}, S3 {s3:?}", report.winner)))
}

/// Runs every check on `base` with the ladder truncated to at most
/// `l_max = 40`.
pub fn run_selftest(base: &Setup) -> SelfTestReport {
    let base = Setup {
        l_max: base.l_max.min(MAX_L),
        ..*base
    };
    let checks = vec![
        check("single-mode oracle", single_mode(&base)),
        check("route cross-check", crosscheck(&base)),
        check("polarisation relabelling", relabelling(&base)),
        check("chirality antisymmetry", chi_antisymmetry(&base)),
        check("degenerate threshold", degenerate_threshold(&base)),
        check("chirality conversion", chirality_conversion()),
        check("winner sign", winner_sign(&base)),
    ];
    let report = SelfTestReport { checks };
    log::info!(
        "self-test: {} of {} checks passed",
        report.checks.iter().filter(|c| c.passed).count(),
        report.checks.len()
    );
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_setup_passes() {
        let report = run_selftest(&Setup::reference());
        assert!(report.passed(), "{report}");
        assert_eq!(report.checks.len(), 7);
    }

    #[test]
    fn failures_are_reported_not_raised() {
        let c = check("x", crate::error::invalid("broken"));
        assert!(!c.passed);
        assert!(c.detail.contains("broken"));
        let report = SelfTestReport { checks: vec![c] };
        assert!(report.to_string().starts_with("FAIL x:"));
    }
}
