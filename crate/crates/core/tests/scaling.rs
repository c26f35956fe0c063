//! Scaling behaviour of full steady states.

use pbec_core::setup::Setup;
use pbec_core::sweep::{pump_sweep, Axis, AxisGrid, SweepSpec};

fn with_molecules(m: f64) -> Setup {
    let mut s = Setup {
        l_max: 40,
        ..Setup::reference()
    };
    s.dye.molecules = m;
    s
}

#[test]
fn doubling_molecules_doubles_condensate_far_above_threshold() {
    // Far above threshold N ≈ M (γ↓ν γ↑ − γ↑ν γ↓) / (κ (γ↑ν + γ↓ν)).
    let a = with_molecules(1e9).with_pump(1e10).solve(None).unwrap();
    let b = with_molecules(2e9).with_pump(1e10).solve(None).unwrap();
    let ratio = b.observables.total_left / a.observables.total_left;
    assert!((ratio - 2.0).abs() <= 0.1, "ratio {ratio}");
}

#[test]
fn total_photons_are_non_decreasing_along_a_pump_sweep() {
    let spec = SweepSpec {
        base: with_molecules(1e9),
        inner: AxisGrid::log(Axis::Pump, 1e7, 1e11, 60).unwrap(),
        outer: None,
        warm_start: true,
    };
    let result = pump_sweep(&spec).unwrap();
    assert!(result.all_converged());
    let totals: Vec<f64> = result
        .points
        .iter()
        .map(|p| p.observables.total_left + p.observables.total_right)
        .collect();
    let tol = spec.base.solver.abs_tol / 1e8;
    for w in totals.windows(2) {
        assert!(w[1] >= w[0] * (1.0 - tol), "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn warm_and_cold_sweeps_agree() {
    let mut spec = SweepSpec {
        base: with_molecules(1e9),
        inner: AxisGrid::linear(Axis::Chi, -2e-5, 2e-5, 21).unwrap(),
        outer: None,
        warm_start: true,
    };
    spec.base = spec.base.with_pump(5e9);
    let warm = pbec_core::sweep::chi_sweep(&spec).unwrap();
    spec.warm_start = false;
    let cold = pbec_core::sweep::chi_sweep(&spec).unwrap();
    for (w, c) in warm.points.iter().zip(&cold.points) {
        let (a, b) = (w.observables.s3.unwrap(), c.observables.s3.unwrap());
        assert!((a - b).abs() <= 2e-6, "chi {}: {a} vs {b}", w.inner);
    }
}
