//! Fixed-point route: scalar photon balance in the excited fraction.
//!
//! For fixed `p` the stationary photon number of every mode is
//! `N_ν = M γ↓ν p / D_ν(p)` with `D_ν = κ_ν + M (γ↑ν (1−p) − γ↓ν p)`. The
//! remaining condition `p = Γ↑ / (Γ↑ + Γ↓)` is equivalent to
//!
//! ```text
//! f(p) = γ↑ (1−p) − γ↓ p − Σ_ν (l+1) κ_ν N_ν(p) / M = 0
//! ```
//!
//! which is strictly decreasing on `[0, p_max)`, where `p_max` is the lowest
//! clamping value `(κ_ν + M γ↑ν) / (M (γ↑ν + γ↓ν))`. The root is bracketed and
//! found in the variable `t = ln(p_max − p)`, which resolves condensates of
//! arbitrary size without cancellation.

use super::{Problem, SolverConfig, SteadyState};
use crate::numeric::ordered_sum;

struct Balance<'a> {
    prob: &'a Problem,
    /// Clamping value of each mode minus the global minimum, ≥ 0.
    gap: Vec<f64>,
    /// γ↑ν + γ↓ν
    width: Vec<f64>,
    p_max: f64,
}

impl<'a> Balance<'a> {
    fn new(prob: &'a Problem) -> Self {
        let m = prob.molecules;
        let width: Vec<f64> = (0..prob.len()).map(|i| prob.absorption[i] + prob.emission[i]).collect();
        let clamp: Vec<f64> = (0..prob.len())
            .map(|i| (prob.kappa[i] + m * prob.absorption[i]) / (m * width[i]))
            .collect();
        let p_max = clamp.iter().copied().fold(1.0, f64::min);
        let gap = clamp.iter().map(|c| c - p_max).collect();
        Balance {
            prob,
            gap,
            width,
            p_max,
        }
    }

    /// Photon numbers at distance `x = p_max − p` below the clamp.
    fn photons(&self, x: f64) -> Vec<f64> {
        let p = self.p_max - x;
        (0..self.prob.len())
            .map(|i| self.prob.emission[i] * p / (self.width[i] * (self.gap[i] + x)))
            .collect()
    }

    /// Net molecular excitation `S`, photon loss `L` and their derivatives
    /// with respect to `x`.
    fn terms(&self, x: f64) -> (f64, f64, f64, f64) {
        let prob = self.prob;
        let p = self.p_max - x;
        let n = self.photons(x);
        let loss = ordered_sum((0..prob.len()).map(|i| prob.degeneracy[i] * prob.kappa[i] * n[i])) / prob.molecules;
        let inv_p = if p > 0.0 { 1.0 / p } else { 0.0 };
        let loss_slope = -ordered_sum(
            (0..prob.len()).map(|i| prob.degeneracy[i] * prob.kappa[i] * n[i] * (inv_p + 1.0 / (self.gap[i] + x))),
        ) / prob.molecules;
        let source = prob.pump * (1.0 - p) - prob.gamma_down * p;
        (source, prob.pump + prob.gamma_down, loss, loss_slope)
    }

    /// `g(t) = ln S − ln L` at `x = e^t` and `dg/dt`, or `None` where
    /// `S ≤ 0` (the balance is then certainly negative).
    ///
    /// Both logarithms are close to linear in `t`, so Newton's method on `g`
    /// converges in a few steps from anywhere in the bracket.
    fn eval(&self, t: f64) -> Option<(f64, f64)> {
        let x = t.exp();
        let (s, ds, l, dl) = self.terms(x);
        if !(s > 0.0) {
            return None;
        }
        if l == 0.0 {
            return Some((f64::INFINITY, 0.0));
        }
        Some((s.ln() - l.ln(), x * (ds / s - dl / l)))
    }
}

pub(super) fn solve(prob: &Problem, config: &SolverConfig, initial_excited: Option<f64>) -> SteadyState {
    let bal = Balance::new(prob);
    let mut lo = (bal.p_max * 1e-300).max(f64::MIN_POSITIVE).ln();
    let mut hi = bal.p_max.ln();
    let mut iterations = 0;

    // At the top of the bracket (p = 0) the balance is positive; at the
    // bottom it is negative unless no mode can clamp.
    let t = match bal.eval(lo) {
        Some((g, _)) if g >= 0.0 => lo,
        _ => {
            let mut t = match initial_excited {
                Some(p) if p > 0.0 && p < bal.p_max => (bal.p_max - p).ln().clamp(lo, hi),
                _ => 0.5 * (lo + hi),
            };
            loop {
                iterations += 1;
                let newton = match bal.eval(t) {
                    Some((g, _)) if g == 0.0 => break t,
                    Some((g, dg)) => {
                        if g > 0.0 {
                            hi = t;
                        } else {
                            lo = t;
                        }
                        (dg > 0.0).then(|| t - config.damping * g / dg)
                    }
                    None => {
                        lo = t;
                        None
                    }
                };
                let next = match newton {
                    Some(n) if n > lo && n < hi => n,
                    _ => 0.5 * (lo + hi),
                };
                let step = (next - t).abs();
                t = next;
                let scale = t.abs().max(1.0);
                if step <= 1e-14 * scale || hi - lo <= 1e-14 * scale || iterations >= config.max_iters {
                    break t;
                }
            }
        }
    };

    let x = t.exp();
    let photons = bal.photons(x);
    let mut deriv = vec![0.0; prob.len()];
    prob.adiabatic(&photons, &mut deriv);
    let residual_norm = prob.residual(&photons, &deriv);
    SteadyState {
        excited_fraction: bal.p_max - x,
        converged: residual_norm <= config.abs_tol && iterations < config.max_iters,
        photons,
        residual_norm,
        iterations,
        clamped: false,
    }
}
