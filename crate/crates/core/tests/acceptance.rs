//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use pbec_core::analytic::single_mode_high_q;
use pbec_core::cavity::{Mode, Polarisation};
use pbec_core::chiral::{chi_from_sample, chi_quick, ChiralSample, SolventParams};
use pbec_core::constants::{ATOMIC_MASS_UNIT, SPECIFIC_ROTATION_UNIT};
use pbec_core::dye::{DyeParams, ModeRates, RateTable};
use pbec_core::dynamics::{
    adiabatic_derivative, find_steady_state, full_derivatives, total_rates, SolverConfig, SolverMode, SystemState,
};
use pbec_core::numeric::{linspace, logspace, max_of};
use pbec_core::output::write_sweep_csv;
use pbec_core::sensitivity::sensitivity;
use pbec_core::setup::{MediumSpec, Setup};
use pbec_core::sweep::{chi_sweep, pump_sweep, Axis, AxisGrid, SweepResult, SweepSpec};

/// Pinned tolerances.
mod tol {
    use std::time::Duration;

    pub const CHI_TARGET: f64 = 2.7e-5;
    pub const CHI_REL: f64 = 1e-2;
    pub const PREFACTOR_TARGET: f64 = 2.14e-8;
    pub const PREFACTOR_REL: f64 = 5e-3;
    pub const CHI_RUNTIME: Duration = Duration::from_millis(50);

    /// κ as a fraction of the slowest molecular rate.
    pub const HIGH_Q_KAPPA_FRACTION: f64 = 1e-3;
    pub const HIGH_Q_REL: f64 = 1e-2;
    pub const THRESHOLD_REL: f64 = 1e-3;
    pub const ORACLE_RUNTIME: Duration = Duration::from_secs(1);

    pub const S3_BELOW: f64 = 0.15;
    pub const S3_ABOVE: f64 = -0.9;
    pub const JUMP: f64 = 1e3;
    pub const SWEEP_RUNTIME: Duration = Duration::from_secs(60);

    /// Multiple of the solver's S3 resolution `abs_tol / κ`.
    pub const SYMMETRY_FACTOR: f64 = 2.0;

    pub const PINNING: f64 = 0.15;

    pub const SLOPE_MIN: f64 = 5.0;
    pub const SLOPE_MAX: f64 = 50.0;
    /// S3 level marking the edge of the operating window.
    pub const WINDOW_LEVEL: f64 = 0.5;
    /// Fraction of the largest |S3| of a trace above which a point belongs
    /// to a plateau.
    pub const PLATEAU_FRACTION: f64 = 0.9;

    pub const ROUTES_REL: f64 = 1e-4;
    pub const STATIONARY_REL: f64 = 1e-12;
}

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            passed: true,
            detail: String::new(),
        }
    }

    /// Records one sub-check.
    fn check(&mut self, ok: bool, what: impl AsRef<str>) {
        self.passed &= ok;
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        let _ = write!(self.detail, "{}{}", if ok { "" } else { "FAILED " }, what.as_ref());
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn glucose(epsilon: f64) -> ChiralSample {
    ChiralSample {
        epsilon,
        ..ChiralSample::glucose()
    }
}

fn criterion_1() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let sample = glucose(1.0);
    let solvent = SolventParams::methanol();
    let full = chi_from_sample(&sample, &solvent).abs();
    let quick = chi_quick(sample.theta, sample.molar_mass_u, sample.epsilon, sample.alpha);
    // Prefactor of θ m_u ε α² rebuilt from the rotation and susceptibility
    // formulas with the methanol constants.
    let prefactor = SPECIFIC_ROTATION_UNIT * solvent.number_density * ATOMIC_MASS_UNIT * solvent.wavelength
        / (2.0 * std::f64::consts::PI);
    let elapsed = start.elapsed();
    o.check(rel(full, tol::CHI_TARGET) <= tol::CHI_REL, format!("chi_from_sample {full:.4e}"));
    o.check(rel(quick, tol::CHI_TARGET) <= tol::CHI_REL, format!("chi_quick {quick:.4e}"));
    o.check(
        rel(prefactor, tol::PREFACTOR_TARGET) <= tol::PREFACTOR_REL,
        format!("prefactor {prefactor:.4e}"),
    );
    o.check(elapsed <= tol::CHI_RUNTIME, format!("{:.1} us", elapsed.as_secs_f64() * 1e6));
    o
}

fn criterion_2() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let rates = ModeRates {
        emission: 3.0,
        absorption: 3.6,
    };
    let base = DyeParams {
        gamma_down: 1e9,
        molecules: 1e9,
        ..DyeParams::default()
    };
    let slowest = base.gamma_down.min(base.molecules * rates.emission).min(base.molecules * rates.absorption);
    let kappa = tol::HIGH_Q_KAPPA_FRACTION * slowest;
    let mode = Mode {
        j: 7,
        l: 0,
        polarisation: Polarisation::Left,
        omega: base.omega0,
        degeneracy: 1,
        kappa,
    };
    let table = RateTable::from_entries(vec![(mode.id(), rates)]).unwrap();
    let config = SolverConfig::for_kappa(kappa);
    let solve = |pump: f64| {
        find_steady_state(&table, &[mode], &base.with_pump(pump), &config, None)
            .expect("single-mode problem is valid")
            .photons[0]
    };
    let tau = base.gamma_down * rates.absorption / rates.emission;

    let worst_above = max_of([1.5, 2.0, 5.0, 10.0].iter().map(|f| {
        let pump = f * tau;
        rel(solve(pump), single_mode_high_q(pump, &base, kappa, &rates))
    }));
    o.check(worst_above <= tol::HIGH_Q_REL, format!("above-threshold deviation {worst_above:.2e}"));

    // In the high-Q limit N = 1 exactly at τ/2 and diverges towards τ, so
    // N < 1 holds on the lower half of the thermal branch.
    let worst_below = max_of([0.01, 0.1, 0.25, 0.45].iter().map(|f| solve(f * tau)));
    o.check(worst_below < 1.0, format!("largest N below tau/2 {worst_below:.3}"));

    // Threshold: pump at which N reaches the geometric mean of O(1) and the
    // condensed occupation at 2τ.
    let target = single_mode_high_q(2.0 * tau, &base, kappa, &rates).sqrt();
    let (mut lo, mut hi) = (0.5 * tau, 2.0 * tau);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if solve(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let found = 0.5 * (lo + hi);
    o.check(
        rel(found, tau) <= tol::THRESHOLD_REL,
        format!("bisected threshold {found:.6e} vs tau {tau:.6e}"),
    );
    let elapsed = start.elapsed();
    o.check(elapsed <= tol::ORACLE_RUNTIME, format!("{:.0} ms", elapsed.as_secs_f64() * 1e3));
    o
}

fn reference_pump_sweep() -> (SweepResult, Duration) {
    let spec = SweepSpec {
        base: Setup::reference(),
        inner: AxisGrid::log(Axis::Pump, 1e8, 1e10, 100).unwrap(),
        outer: None,
        warm_start: true,
    };
    let start = Instant::now();
    let result = pump_sweep(&spec).unwrap();
    (result, start.elapsed())
}

fn winner_threshold(result: &SweepResult) -> f64 {
    result.thresholds.expect("pump sweeps carry thresholds").winner_threshold()
}

/// Value of `f` at the grid point closest to `pump` (log distance).
fn nearest<'a>(result: &'a SweepResult, pump: f64) -> &'a pbec_core::sweep::SweepPoint {
    result
        .points
        .iter()
        .min_by(|a, b| (a.inner / pump).ln().abs().total_cmp(&(b.inner / pump).ln().abs()))
        .unwrap()
}

fn criterion_3(result: &SweepResult, elapsed: Duration) -> Outcome {
    let mut o = Outcome::new();
    let tau = winner_threshold(result);
    let modes = result.spec.base.l_max * 2 + 2;
    let below = max_of(result.points.iter().filter(|p| p.inner < tau).map(|p| p.observables.s3.unwrap().abs()));
    let above = result
        .points
        .iter()
        .filter(|p| p.inner > tau)
        .map(|p| p.observables.s3.unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    o.check(result.all_converged(), format!("{} points converged", result.summary().converged));
    o.check(below <= tol::S3_BELOW, format!("max |S3| below {below:.3}"));
    o.check(above <= tol::S3_ABOVE, format!("max S3 above {above:.4}"));
    let (lo, hi) = (nearest(result, 0.5 * tau), nearest(result, 2.0 * tau));
    let jump_l = hi.observables.total_left / lo.observables.total_left;
    let jump_r = hi.observables.total_right / lo.observables.total_right;
    o.check(jump_l >= tol::JUMP, format!("N_L jump {jump_l:.2e}"));
    o.check(jump_r < tol::JUMP, format!("N_R jump {jump_r:.2e}"));
    o.check(
        elapsed <= tol::SWEEP_RUNTIME,
        format!("100 x {modes} modes in {:.2} s", elapsed.as_secs_f64()),
    );
    o
}

fn s3_resolution(setup: &Setup) -> f64 {
    let kappa = max_of(setup.modes().unwrap().iter().map(|m| m.kappa));
    tol::SYMMETRY_FACTOR * setup.solver.abs_tol / kappa
}

/// Symmetric χ grid of the chirality figure: `values[i] = −values[n−1−i]`.
fn mirrored_chi_grid(max: f64, half: usize) -> Vec<f64> {
    let positive = linspace(0.0, max, half + 1);
    let mut values: Vec<f64> = positive[1..].iter().rev().map(|v| -v).collect();
    values.extend(positive);
    values
}

fn chi_family() -> SweepSpec {
    SweepSpec {
        base: Setup::reference().with_pump(1e10),
        inner: AxisGrid::new(Axis::Chi, mirrored_chi_grid(3e-5, 30)).unwrap(),
        outer: Some(AxisGrid::new(Axis::AbsorptionScale, vec![0.5, 1.0, 2.0, 10.0]).unwrap()),
        warm_start: true,
    }
}

fn criterion_4(family: &SweepResult) -> Outcome {
    let mut o = Outcome::new();
    let base = Setup::reference();
    let tol_s3 = s3_resolution(&base);

    let achiral = SweepSpec {
        base: base.with_chi(0.0).unwrap(),
        inner: AxisGrid::log(Axis::Pump, 1e8, 1e10, 100).unwrap(),
        outer: None,
        warm_start: true,
    };
    let achiral = pump_sweep(&achiral).unwrap();
    let worst = max_of(achiral.points.iter().map(|p| p.observables.s3.unwrap().abs()));
    o.check(worst <= tol_s3, format!("chi = 0: max |S3| {worst:.1e} (limit {tol_s3:.0e})"));

    let n = family.spec.inner.values.len();
    let mut worst: f64 = 0.0;
    for t in 0..family.spec.outer.as_ref().unwrap().values.len() {
        let trace = family.trace(t);
        for i in 0..n {
            let (a, b) = (trace[i].observables.s3.unwrap(), trace[n - 1 - i].observables.s3.unwrap());
            worst = worst.max((a + b).abs());
        }
    }
    o.check(worst <= tol_s3, format!("max |S3(chi) + S3(-chi)| {worst:.1e}"));

    let mut exact = true;
    for pump in [1e8, 1.25e9, 3e9, 1e10] {
        let setup = base.with_pump(pump);
        let MediumSpec::Indices(ix) = setup.medium else {
            unreachable!("reference medium has explicit indices")
        };
        let swapped = Setup {
            medium: MediumSpec::Indices(ix.swapped()),
            ..setup
        };
        let (a, b) = (setup.solve(None).unwrap(), swapped.solve(None).unwrap());
        exact &= a.observables.total_left == b.observables.total_right
            && a.observables.total_right == b.observables.total_left
            && a.steady.excited_fraction == b.steady.excited_fraction
            && a.observables.s3.map(|s| -s) == b.observables.s3;
    }
    o.check(exact, "L/R relabelling bitwise");
    o
}

fn criterion_5(result: &SweepResult) -> Outcome {
    let mut o = Outcome::new();
    let tau = winner_threshold(result);
    let pinned = result.pinned.as_ref().unwrap();
    let worst = max_of(
        result
            .points
            .iter()
            .zip(pinned)
            .filter(|(p, _)| p.inner > tau)
            .map(|(p, q)| (p.observables.s3.unwrap() - q.s3.unwrap()).abs()),
    );
    o.check(worst <= tol::PINNING, format!("max |S3_pinned - S3_full| above threshold {worst:.3}"));
    o
}

fn sample_base(pump: f64) -> Setup {
    Setup {
        medium: MediumSpec::Sample {
            sample: glucose(0.5),
            solvent: SolventParams::methanol(),
        },
        ..Setup::reference()
    }
    .with_pump(pump)
}

/// Signed ε grid resolving both the narrow window around zero and the
/// plateaus.
fn epsilon_grid() -> Vec<f64> {
    let positive = logspace(1e-8, 1.0, 41);
    let mut values: Vec<f64> = positive.iter().rev().map(|v| -v).collect();
    values.push(0.0);
    values.extend(positive);
    values
}

/// Smallest ε > 0 at which |S3| reaches the window level, interpolated in
/// ln ε; infinite if it never does.
fn window_edge(epsilon: &[f64], s3: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = epsilon.iter().zip(s3).filter(|(e, _)| **e > 0.0).map(|(e, s)| (*e, s.abs())).collect();
    for (i, &(e, s)) in pts.iter().enumerate() {
        if s >= tol::WINDOW_LEVEL {
            if i == 0 {
                return e;
            }
            let (e0, s0) = pts[i - 1];
            let t = (tol::WINDOW_LEVEL - s0) / (s - s0);
            return (e0.ln() + t * (e.ln() - e0.ln())).exp();
        }
    }
    f64::INFINITY
}

/// Points strictly between the two plateaus of a trace.
fn between_plateaus(s3: &[f64]) -> Vec<f64> {
    let plateau = tol::PLATEAU_FRACTION * max_of(s3.iter().map(|s| s.abs()));
    s3.iter().copied().filter(|s| s.abs() < plateau).collect()
}

fn criterion_6() -> Outcome {
    let mut o = Outcome::new();
    let base = sample_base(1e10);
    let report = sensitivity(&base, 0.5, 0.01).unwrap();
    o.check(
        (tol::SLOPE_MIN..=tol::SLOPE_MAX).contains(&report.slope.abs()),
        format!(
            "|dS3/deps| at 0.5 = {:.2e} (step {:.2}, noise-dominated {})",
            report.slope.abs(),
            report.step,
            report.noise_dominated
        ),
    );

    let scales = [0.5, 1.0, 2.0, 10.0];
    let spec = SweepSpec {
        base,
        inner: AxisGrid::new(Axis::Epsilon, epsilon_grid()).unwrap(),
        outer: Some(AxisGrid::new(Axis::AbsorptionScale, scales.to_vec()).unwrap()),
        warm_start: true,
    };
    let family = chi_sweep(&spec).unwrap();
    o.check(family.all_converged(), format!("{} of {} points converged", family.summary().converged, family.points.len()));
    let noise = s3_resolution(&base);
    let mut monotone = true;
    let mut edges = Vec::new();
    for t in 0..scales.len() {
        let s3: Vec<f64> = family.trace(t).iter().map(|p| p.observables.s3.unwrap()).collect();
        // Excess of the R enantiomer raises n_L, so S3 falls with ε.
        monotone &= between_plateaus(&s3).windows(2).all(|w| w[1] <= w[0] + noise);
        edges.push(window_edge(&spec.inner.values, &s3));
    }
    o.check(monotone, "S3(eps) monotone between plateaus for every absorption scale");
    let rising = edges.windows(2).all(|w| w[1] > w[0]);
    let falling = edges.windows(2).all(|w| w[1] < w[0]);
    let listed: Vec<String> = scales.iter().zip(&edges).map(|(s, e)| format!("{s}: {e:.2e}")).collect();
    o.check(
        rising || falling,
        format!("|S3| = {} window edge by scale {}", tol::WINDOW_LEVEL, listed.join(", ")),
    );
    o
}

fn criterion_7(result: &SweepResult) -> Outcome {
    let mut o = Outcome::new();
    let base = result.spec.base;
    let modes = base.modes().unwrap();
    let mut worst_routes: f64 = 0.0;
    let mut worst_stationary: f64 = 0.0;
    for &pump in &result.spec.inner.values {
        let dye = base.dye.with_pump(pump);
        let rates = base.rates(&modes).unwrap();
        let solve = |mode| {
            find_steady_state(&rates, &modes, &dye, &base.solver.with_mode(mode), None).unwrap()
        };
        let dynamic = solve(SolverMode::SemiDynamical);
        let fixed = solve(SolverMode::FixedPoint);
        let (a, b) = (dynamic.total_photons(&modes), fixed.total_photons(&modes));
        worst_routes = worst_routes.max(rel(a, b));

        let photons = fixed.photons.clone();
        let probe = SystemState {
            photons: photons.clone(),
            excited_fraction: 0.0,
        };
        let (up, down) = total_rates(&probe, &rates, &modes, &dye).unwrap();
        let state = SystemState {
            photons: photons.clone(),
            excited_fraction: up / (up + down),
        };
        let full = full_derivatives(&state, &rates, &modes, &dye).unwrap();
        let adiabatic = adiabatic_derivative(&photons, &rates, &modes, &dye).unwrap();
        // Scale: the largest single term of the photon balance.
        let scale = max_of(modes.iter().zip(&photons).map(|(m, n)| m.kappa * (n + 1.0)));
        let diff = max_of(full.photons.iter().zip(&adiabatic).map(|(f, a)| (f - a).abs()));
        worst_stationary = worst_stationary.max(diff / scale);
    }
    o.check(
        worst_routes <= tol::ROUTES_REL,
        format!("max route disagreement in total photons {worst_routes:.1e}"),
    );
    o.check(
        worst_stationary <= tol::STATIONARY_REL,
        format!("full vs adiabatic derivative {worst_stationary:.1e}"),
    );
    o
}

fn csv_bytes(result: &SweepResult) -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    write_sweep_csv(&path, result).unwrap();
    std::fs::read(path).unwrap()
}

fn criterion_8(pump: &SweepResult, family: &SweepResult) -> Outcome {
    let mut o = Outcome::new();
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let again_pump = serial.install(|| pump_sweep(&pump.spec).unwrap());
    let again_family = chi_sweep(&family.spec).unwrap();
    o.check(csv_bytes(pump) == csv_bytes(&again_pump), "pump sweep CSV identical (1 thread vs pool)");
    o.check(csv_bytes(family) == csv_bytes(&again_family), "chirality family CSV identical");
    o
}

fn main() {
    let (pump, elapsed) = reference_pump_sweep();
    let family = chi_sweep(&chi_family()).unwrap();
    let results = [
        ("1 chirality chain", criterion_1()),
        ("2 analytic threshold oracle", criterion_2()),
        ("3 winner takes all", criterion_3(&pump, elapsed)),
        ("4 symmetry", criterion_4(&family)),
        ("5 pinning fidelity", criterion_5(&pump)),
        ("6 sensitivity", criterion_6()),
        ("7 solver cross-check", criterion_7(&pump)),
        ("8 determinism", criterion_8(&pump, &family)),
    ];
    let mut failed = 0;
    for (name, outcome) in &results {
        println!("{} criterion {name}: {}", if outcome.passed { "PASS" } else { "FAIL" }, outcome.detail);
        failed += usize::from(!outcome.passed);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
