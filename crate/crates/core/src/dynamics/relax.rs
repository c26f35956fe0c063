//! Semi-dynamical route: forward integration followed by a continuation
//! polish, both in the variables `u_ν = ln N_ν`.
//!
//! In these variables the rate equations read
//! `u̇_ν = a_ν(p) + M γ↓ν p e^{−u_ν}` with `a_ν = −κ_ν + M (γ↓ν p − γ↑ν (1−p))`.
//! Exponential growth and decay become linear drifts, positivity is
//! automatic, and the Jacobian is `diag(−M γ↓ν p / N_ν) + c wᵀ` (a stable
//! diagonal plus the coupling of every mode through `p_e`), so each linear
//! solve `(σ I − J) Δ = u̇` costs O(n) via Sherman–Morrison.

use super::{Problem, SolverConfig, SteadyState};
use crate::numeric::{max_of, ordered_sum};

/// Local error target of the step-doubling controller, in `ln N`.
const STEP_TOL: f64 = 1e-3;
const POLISH_MAX_ITERS: usize = 200;
/// Continuation steps allowed without halving the best residual (or, below
/// `abs_tol`, the Newton distance).
const POLISH_PATIENCE: usize = 12;
const ACCEPTED_STEPS_BETWEEN_POLISH: usize = 8;
/// Bounds on `ln N` keeping `e^{±u}` finite.
const LOG_FLOOR: f64 = -600.0;
const LOG_CEIL: f64 = 600.0;

struct Linearisation {
    f: Vec<f64>,
    diag: Vec<f64>,
    c: Vec<f64>,
    w: Vec<f64>,
}

impl Problem {
    /// Jacobian of `Ṅ` with respect to `N`: `diag(a) + c wᵀ`.
    fn linearise_photons(&self, n: &[f64]) -> Linearisation {
        let (up, down) = self.totals(n);
        let s = up + down;
        let p = up / s;
        let m = self.molecules;
        let len = self.len();
        let mut f = vec![0.0; len];
        self.derivative_at(n, p, &mut f);
        Linearisation {
            f,
            diag: (0..len).map(|i| self.gain(i, p)).collect(),
            c: (0..len)
                .map(|i| m * (self.emission[i] * (n[i] + 1.0) + self.absorption[i] * n[i]))
                .collect(),
            w: (0..len)
                .map(|i| self.degeneracy[i] * (self.absorption[i] * down - up * self.emission[i]) / (s * s))
                .collect(),
        }
    }

    /// Jacobian of `u̇` with respect to `u = ln N`.
    fn linearise(&self, u: &[f64]) -> Linearisation {
        let n: Vec<f64> = u.iter().map(|u| u.exp()).collect();
        let (up, down) = self.totals(&n);
        let s = up + down;
        let p = up / s;
        let m = self.molecules;
        let len = self.len();
        let spont: Vec<f64> = (0..len).map(|i| m * self.emission[i] * p / n[i]).collect();
        Linearisation {
            f: (0..len).map(|i| self.gain(i, p) + spont[i]).collect(),
            diag: spont.iter().map(|s| -s).collect(),
            c: (0..len)
                .map(|i| m * (self.emission[i] * (1.0 + 1.0 / n[i]) + self.absorption[i]))
                .collect(),
            w: (0..len)
                .map(|i| self.degeneracy[i] * n[i] * (self.absorption[i] * down - up * self.emission[i]) / (s * s))
                .collect(),
        }
    }
}

impl Linearisation {
    /// Solves `(σ I − J) Δ = F`. Returns `None` if the system is singular.
    fn solve(&self, sigma: f64) -> Option<Vec<f64>> {
        let q: Vec<f64> = self.diag.iter().map(|d| sigma - d).collect();
        if q.iter().any(|q| *q == 0.0 || !q.is_finite()) {
            return None;
        }
        let wf = ordered_sum((0..q.len()).map(|i| self.w[i] * self.f[i] / q[i]));
        let wc = ordered_sum((0..q.len()).map(|i| self.w[i] * self.c[i] / q[i]));
        let denom = 1.0 - wc;
        if denom == 0.0 || !denom.is_finite() {
            return None;
        }
        let z = wf / denom;
        let delta: Vec<f64> = (0..q.len()).map(|i| (self.f[i] + self.c[i] * z) / q[i]).collect();
        delta.iter().all(|d| d.is_finite()).then_some(delta)
    }
}

fn implicit_step(prob: &Problem, u: &[f64], h: f64, scale: f64) -> Option<Vec<f64>> {
    let delta = prob.linearise(u).solve(1.0 / h)?;
    let next: Vec<f64> = u.iter().zip(&delta).map(|(u, d)| u + scale * d).collect();
    next.iter().all(|u| (LOG_FLOOR..=LOG_CEIL).contains(u)).then_some(next)
}

fn photons(u: &[f64]) -> Vec<f64> {
    u.iter().map(|u| u.exp()).collect()
}

fn residual(prob: &Problem, u: &[f64]) -> f64 {
    residual_n(prob, &photons(u))
}

enum Polish {
    Converged(Vec<f64>, f64, usize),
    Failed(usize),
}

/// Fraction of its current value a photon number may drop to in one
/// continuation step.
const MIN_SHRINK: f64 = 0.1;

/// Pseudo-transient continuation on the photon numbers: implicit Euler steps
/// whose size follows the residual (`h ← h · r_old / r_new`), so the
/// iteration turns into Newton's method as the residual vanishes. Updates
/// that would empty a mode are cut to a fixed fraction of its occupation.
fn polish(prob: &Problem, start: &[f64], h0: f64, config: &SolverConfig) -> Polish {
    let mut n = photons(start);
    let mut r = residual(prob, start);
    let mut h = h0;
    let mut rejects = 0;
    let mut best = r;
    let mut best_distance = f64::INFINITY;
    let mut since_best = 0;
    for it in 0..POLISH_MAX_ITERS {
        let trial = prob.linearise_photons(&n).solve(1.0 / h).map(|delta| {
            n.iter()
                .zip(&delta)
                .map(|(n, d)| (n + config.damping * d).max(MIN_SHRINK * n))
                .collect::<Vec<f64>>()
        });
        let trial = trial.filter(|t| t.iter().all(|x| x.is_finite() && *x > 0.0)).map(|t| {
            let rt = residual_n(prob, &t);
            (t, rt)
        });
        let Some((trial, rt)) = trial.filter(|(_, rt)| *rt <= 10.0 * r) else {
            h *= 0.25;
            rejects += 1;
            if rejects > 20 {
                return Polish::Failed(it + 1);
            }
            continue;
        };
        rejects = 0;
        // Below abs_tol the residual no longer drives the step size; keep
        // growing it so the iteration turns into Newton's method.
        let growth = if rt <= config.abs_tol { 10.0 } else { (r / rt).clamp(0.5, 100.0) };
        h = (h * growth).min(f64::MAX);
        n = trial;
        r = rt;
        // A small residual alone does not settle the state: a mode whose net
        // gain is below abs_tol can still be far from its stationary value.
        let improved = if r <= config.abs_tol {
            let (distance, newton) = newton_step(prob, &n);
            if distance <= config.rel_tol {
                // Inside the quadratic basin: one more full step is nearly free.
                let (n, r) = newton
                    .map(|t| {
                        let rt = residual_n(prob, &t);
                        (t, rt)
                    })
                    .filter(|(_, rt)| *rt <= config.abs_tol)
                    .unwrap_or((n, r));
                return Polish::Converged(n.iter().map(|x| x.ln()).collect(), r, it + 1);
            }
            let better = distance < 0.5 * best_distance;
            best_distance = best_distance.min(distance);
            better
        } else {
            let better = r < 0.5 * best;
            best = best.min(r);
            better
        };
        if improved {
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > POLISH_PATIENCE {
                return Polish::Failed(it + 1);
            }
        }
    }
    Polish::Failed(POLISH_MAX_ITERS)
}

/// Relative size of the full Newton step, `max |Δ_ν| / (N_ν + 1)`, which
/// estimates the distance to the stationary point, and the stepped state if
/// it stays positive.
fn newton_step(prob: &Problem, n: &[f64]) -> (f64, Option<Vec<f64>>) {
    match prob.linearise_photons(n).solve(0.0) {
        Some(delta) => {
            let distance = max_of(n.iter().zip(&delta).map(|(n, d)| d.abs() / (n + 1.0)));
            let next: Vec<f64> = n.iter().zip(&delta).map(|(n, d)| n + d).collect();
            (distance, next.iter().all(|x| *x > 0.0).then_some(next))
        }
        None => (f64::INFINITY, None),
    }
}

fn residual_n(prob: &Problem, n: &[f64]) -> f64 {
    let mut d = vec![0.0; n.len()];
    prob.adiabatic(n, &mut d);
    prob.residual(n, &d)
}

fn finish(prob: &Problem, u: &[f64], residual_norm: f64, iterations: usize, converged: bool, clamped: bool) -> SteadyState {
    let photons = photons(u);
    let (up, down) = prob.totals(&photons);
    SteadyState {
        excited_fraction: up / (up + down),
        photons,
        residual_norm,
        iterations,
        converged,
        clamped,
    }
}

/// Starting point in `ln N`. Empty modes are seeded with their spontaneous
/// occupation at the current excited fraction.
fn seed(prob: &Problem, initial: Option<&[f64]>) -> (Vec<f64>, bool) {
    let mut n: Vec<f64> = initial.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; prob.len()]);
    let clamped = n.iter().any(|x| *x < 0.0 || !x.is_finite());
    if clamped {
        n.iter_mut().for_each(|x| *x = if x.is_finite() { x.max(0.0) } else { 0.0 });
    }
    let (up, down) = prob.totals(&n);
    let p = up / (up + down);
    let u = (0..prob.len())
        .map(|i| {
            let floor = prob.molecules * prob.emission[i] * p
                / (prob.kappa[i] + prob.molecules * (prob.emission[i] + prob.absorption[i]));
            n[i].max(floor).ln().clamp(LOG_FLOOR, LOG_CEIL)
        })
        .collect();
    (u, clamped)
}

pub(super) fn solve(prob: &Problem, config: &SolverConfig, initial: Option<&[f64]>) -> SteadyState {
    let (mut u, clamped) = seed(prob, initial);
    let mut iterations = 0;
    let mut time = 0.0;
    let mut h = 1.0 / (prob.max_kappa() + prob.pump + prob.gamma_down);
    let mut since_polish = ACCEPTED_STEPS_BETWEEN_POLISH;

    loop {
        if since_polish >= ACCEPTED_STEPS_BETWEEN_POLISH {
            since_polish = 0;
            match polish(prob, &u, h, config) {
                Polish::Converged(sol, r, its) => {
                    return finish(prob, &sol, r, iterations + its, true, clamped);
                }
                Polish::Failed(its) => iterations += its,
            }
        }
        if time >= config.max_time || iterations >= config.max_iters {
            let r = residual(prob, &u);
            return finish(prob, &u, r, iterations, false, clamped);
        }

        h = h.min(config.max_time - time).max(f64::MIN_POSITIVE);
        iterations += 1;
        let full = implicit_step(prob, &u, h, 1.0);
        let half = implicit_step(prob, &u, 0.5 * h, 1.0).and_then(|mid| implicit_step(prob, &mid, 0.5 * h, 1.0));
        let (Some(full), Some(half)) = (full, half) else {
            h *= 0.25;
            continue;
        };
        let err = max_of(full.iter().zip(&half).map(|(a, b)| (a - b).abs()));
        let factor = if err > 0.0 { 0.9 * (STEP_TOL / err).sqrt() } else { 5.0 };
        if err <= STEP_TOL {
            u = half;
            time += h;
            since_polish += 1;
            h *= factor.clamp(1.0, 5.0);
        } else {
            h *= factor.clamp(0.1, 0.9);
        }
    }
}
