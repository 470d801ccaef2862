//! Constrained minimization of the discrete functionals, the `eps` sweep
//! and recovery sequences.

mod banded;
mod newton;

use alloc::vec::Vec;
use core::f64::consts::TAU;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::closed_form::well_set;
use crate::interface_energy::optimal_profile_auto;
use crate::model::{GridField, MaterialParams};
use crate::{Error, Result, TOL_VC};

use newton::{Density, Elastic, Problem, Relaxed, State};

/// Backtracking parameters of the projected line search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRule {
    /// Armijo constant.
    pub sigma: f64,
    /// Step reduction factor.
    pub shrink: f64,
    pub max_backtracks: usize,
}

impl Default for StepRule {
    fn default() -> Self {
        Self { sigma: 1e-4, shrink: 0.5, max_backtracks: 60 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Grid cells.
    pub n: usize,
    /// Cap on Newton iterations per start.
    pub max_iters: usize,
    /// Bound on the sup norm of the projected gradient: stress jumps
    /// between cells for `u`, residual per unit length for `alpha`.
    pub grad_tol: f64,
    /// Number of initial guesses tried, in the order: constant `theta`,
    /// each well, two-interface plateau.
    pub restarts: usize,
    /// Initial penalty of the augmented Lagrangian.
    pub penalty_weight: f64,
    pub step_rule: StepRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n: 512,
            max_iters: 2000,
            grad_tol: 1e-8,
            restarts: 4,
            penalty_weight: 100.0,
            step_rule: StepRule::default(),
        }
    }
}

impl SolverConfig {
    pub fn with_n(n: usize) -> Self {
        Self { n, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 8 {
            return Err(Error::InvalidParameter("the solver needs n >= 8"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidParameter("grad_tol must be positive"));
        }
        if !(self.penalty_weight >= 0.0) {
            return Err(Error::InvalidParameter("penalty_weight must be non-negative"));
        }
        let s = self.step_rule;
        if !(s.sigma > 0.0 && s.sigma < 1.0 && s.shrink > 0.0 && s.shrink < 1.0) || s.max_backtracks == 0 {
            return Err(Error::InvalidParameter("invalid line search parameters"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub field: GridField,
    pub energy: f64,
    /// `|mean(alpha) - theta|`.
    pub constraint_residual: f64,
    /// Sup norm of the projected gradient of the Lagrangian, scaled as
    /// `grad_tol`.
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SolveResult {
    fn from_outcome(o: newton::Outcome) -> Result<Self> {
        Ok(Self {
            field: GridField::new(o.state.u, o.state.alpha)?,
            energy: o.energy,
            constraint_residual: o.residual,
            grad_norm: o.grad_norm,
            iterations: o.iterations,
            converged: o.converged,
        })
    }

    fn feasible(&self) -> bool {
        self.constraint_residual <= TOL_VC
    }
}

const TIE_TOL: f64 = 1e-12;

fn homogeneous_state(n: usize, gamma: f64, alpha: impl Fn(f64) -> f64) -> State {
    let u = (0..=n).map(|i| gamma * i as f64 / n as f64).collect();
    let mut a: Vec<f64> = (0..=n).map(|i| alpha(i as f64 / n as f64).clamp(0.0, TAU)).collect();
    a[n] = a[0];
    State { u, alpha: a }
}

/// Initial rotations: constant `theta`, each well constant, then a plateau
/// of the upper well centred at `x = 1/2` with the phase fraction that
/// matches `theta`.
fn initial_guesses(p: &MaterialParams, n: usize) -> Result<Vec<State>> {
    let (gamma, theta) = (p.gamma(), p.theta());
    let wells = well_set(gamma, p)?;
    let mut out = Vec::new();
    out.push(homogeneous_state(n, gamma, |_| theta));
    for &w in wells.angles() {
        out.push(homogeneous_state(n, gamma, |_| w));
    }
    if wells.angles().len() == 2 {
        let (lo, hi) = (wells.angles()[0], wells.angles()[1]);
        let frac = (theta - lo) / (hi - lo);
        if frac > 0.0 && frac < 1.0 {
            let width = p.eps().max(4.0 / n as f64);
            let (xl, xr) = (0.5 - 0.5 * frac, 0.5 + 0.5 * frac);
            out.push(homogeneous_state(n, gamma, |x| {
                let s = 0.5 * (((x - xl) / width).tanh() - ((x - xr) / width).tanh());
                lo + (hi - lo) * s
            }));
        }
    }
    Ok(out)
}

fn best_of<D: Density>(
    prob: &Problem<'_, D>,
    starts: Vec<State>,
    theta: f64,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    let mut best: Option<SolveResult> = None;
    for s in starts {
        let Some(o) = newton::minimize(prob, s, theta, cfg) else { continue };
        let r = SolveResult::from_outcome(o)?;
        best = Some(match best {
            None => r,
            Some(b) => {
                let better = match (b.feasible(), r.feasible()) {
                    (false, true) => true,
                    (true, false) => false,
                    _ => r.energy < b.energy - TIE_TOL,
                };
                if better {
                    r
                } else {
                    b
                }
            }
        });
    }
    best.ok_or(Error::NoConvergence { iterations: 0 })
}

/// Local minimizer of the discrete `E_eps^theta`, best over the initial
/// guesses. A start that ends no lower than an earlier one by more than
/// `1e-12` does not replace it, so the constant state wins ties.
pub fn minimize_eps_theta(p: &MaterialParams, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    if !(p.eps() > 0.0) {
        return Err(Error::InvalidParameter("minimize_eps_theta needs eps > 0"));
    }
    let density = Elastic { mu: p.mu(), mu_c: p.mu_c(), eps2: p.eps() * p.eps() };
    let prob = Problem::new(cfg.n, &density);
    let mut starts = initial_guesses(p, cfg.n)?;
    starts.truncate(cfg.restarts.max(1));
    best_of(&prob, starts, p.theta(), cfg)
}

/// Minimizer of the discrete `E_0^theta` from the constant start.
pub fn minimize_relaxed(p: &MaterialParams, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let density = Relaxed { mu: p.mu(), mu_c: p.mu_c() };
    let prob = Problem::new(cfg.n, &density);
    let start = homogeneous_state(cfg.n, p.gamma(), |_| p.theta());
    best_of(&prob, alloc::vec![start], p.theta(), cfg)
}

/// Analytic gradient of the discrete `E_eps` as used by the solver, with
/// respect to the interior `u_i` (entries `0` and `n` are zero) and to
/// `alpha_0..alpha_{n-1}` with `alpha_n` tied to `alpha_0`.
pub fn energy_gradient(f: &GridField, p: &MaterialParams) -> Result<(Vec<f64>, Vec<f64>)> {
    if !f.is_periodic() {
        return Err(Error::InvalidField("the solver works on periodic rotations"));
    }
    if f.n() < 2 {
        return Err(Error::InvalidField("energy needs at least two cells"));
    }
    let density = Elastic { mu: p.mu(), mu_c: p.mu_c(), eps2: p.eps() * p.eps() };
    let prob = Problem::new(f.n(), &density);
    let state = State { u: f.u().to_vec(), alpha: f.alpha().to_vec() };
    prob.node_gradient(&state).ok_or(Error::InvalidField("energy is not finite"))
}

/// One row of the `eps` sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    /// Minimum found for `E_eps^theta`.
    pub energy: f64,
    /// Minimum of `E_0^theta`.
    pub relaxed_energy: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub field: GridField,
}

/// Solves at one `eps` and compares with a precomputed relaxed minimum.
pub fn sweep_row(p: &MaterialParams, eps: f64, relaxed_energy: f64, cfg: &SolverConfig) -> Result<SweepRow> {
    let r = minimize_eps_theta(&p.with_eps(eps)?, cfg)?;
    Ok(SweepRow {
        eps,
        energy: r.energy,
        relaxed_energy,
        gap: r.energy - relaxed_energy,
        iterations: r.iterations,
        converged: r.converged,
        field: r.field,
    })
}

pub fn check_eps_list(eps_list: &[f64]) -> Result<()> {
    if eps_list.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidParameter("eps values must be positive"));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("eps values must decrease strictly"));
    }
    Ok(())
}

/// `min E_eps^theta - min E_0^theta` for each `eps`, rows in input order.
pub fn gamma_sweep(p: &MaterialParams, eps_list: &[f64], cfg: &SolverConfig) -> Result<Vec<SweepRow>> {
    check_eps_list(eps_list)?;
    let relaxed = minimize_relaxed(p, cfg)?.energy;
    eps_list.iter().map(|&eps| sweep_row(p, eps, relaxed, cfg)).collect()
}

const PROFILE_STEP: f64 = 1e-2;

/// Single transition from `alpha_minus` to `alpha_plus` at `x_bar` built
/// from the optimal profile: `alpha(x) = beta((x - x_bar) / eps)` on
/// `|x - x_bar| < half_width`, the wells outside, `u` homogeneous.
///
/// `half_width` is measured in `x`; in the stretched variable the layer
/// spans `|y| < T = half_width / eps`, and on the outermost unit
/// `T - 1 < |y| < T` the profile is joined linearly to the wells.
pub fn recovery_sequence(
    alpha_minus: f64,
    alpha_plus: f64,
    x_bar: f64,
    p: &MaterialParams,
    half_width: f64,
    cfg: &SolverConfig,
) -> Result<GridField> {
    let eps = p.eps();
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("recovery sequences need eps > 0"));
    }
    if !(x_bar > 0.0 && x_bar < 1.0) {
        return Err(Error::InvalidParameter("x_bar must lie in (0, 1)"));
    }
    if !(half_width > 0.0 && x_bar - half_width > 0.0 && x_bar + half_width < 1.0) {
        return Err(Error::InvalidParameter("the layer must fit inside (0, 1)"));
    }
    let stretched = half_width / eps;
    if stretched < 1.0 {
        return Err(Error::InvalidParameter("half_width must be at least eps"));
    }
    if cfg.n < 2 {
        return Err(Error::InvalidParameter("the grid needs at least two cells"));
    }
    let descending = alpha_minus > alpha_plus;
    let (lo, hi) = if descending { (alpha_plus, alpha_minus) } else { (alpha_minus, alpha_plus) };
    let prof = optimal_profile_auto(lo, hi, p, PROFILE_STEP)?;
    let (y0, m) = (prof.y[0], prof.y.len() - 1);
    let slope: Vec<f64> = prof.v2.iter().map(|v| v.max(0.0).sqrt()).collect();
    // cubic Hermite interpolation with the exact derivative sqrt(V2)
    let ascending = |y: f64| -> f64 {
        let s = (y - y0) / PROFILE_STEP;
        if s <= 0.0 {
            return lo;
        }
        if s >= m as f64 {
            return hi;
        }
        let k = (s.floor() as usize).min(m - 1);
        let t = s - k as f64;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * prof.alpha[k]
            + h10 * PROFILE_STEP * slope[k]
            + h01 * prof.alpha[k + 1]
            + h11 * PROFILE_STEP * slope[k + 1]
    };
    let beta = |y: f64| if descending { ascending(-y) } else { ascending(y) };
    let inner = stretched - 1.0;
    let (b_left, b_right) = (beta(-inner), beta(inner));
    let alpha_of = |x: f64| -> f64 {
        let y = (x - x_bar) / eps;
        let v = if y <= -stretched {
            alpha_minus
        } else if y >= stretched {
            alpha_plus
        } else if y < -inner {
            b_left + (alpha_minus - b_left) * (-inner - y)
        } else if y > inner {
            b_right + (alpha_plus - b_right) * (y - inner)
        } else {
            beta(y)
        };
        v.clamp(0.0, TAU)
    };
    GridField::homogeneous(cfg.n, p.gamma(), alpha_of)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::energy_relaxed;
    use crate::interface_energy::surface_energy;
    use crate::model::{energy_eps, energy_eps_theta, energy_rescaled};

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig::with_n(4).validate().is_err());
        let bad = SolverConfig { grad_tol: 0.0, ..SolverConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SolverConfig { penalty_weight: -1.0, ..SolverConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let n = 16;
        let d = Elastic { mu: 1.0, mu_c: 0.05, eps2: 0.04 };
        let prob = Problem::new(n, &d);
        let s = homogeneous_state(n, 0.6, |x| 0.3 + 0.2 * (TAU * x).sin() + 0.05 * (3.0 * TAU * x).cos());
        let (gu, ga) = prob.node_gradient(&s).unwrap();
        let step = 1e-6;
        for i in 1..n {
            let mut sp = s.clone();
            let mut sm = s.clone();
            sp.u[i] += step;
            sm.u[i] -= step;
            let fd = (prob.energy(&sp).unwrap() - prob.energy(&sm).unwrap()) / (2.0 * step);
            assert!((fd - gu[i]).abs() <= 1e-5 * fd.abs().max(1e-3), "u{i}: {fd} vs {}", gu[i]);
        }
        for i in 0..n {
            let mut sp = s.clone();
            let mut sm = s.clone();
            sp.alpha[i] += step;
            sm.alpha[i] -= step;
            if i == 0 {
                sp.alpha[n] = sp.alpha[0];
                sm.alpha[n] = sm.alpha[0];
            }
            let fd = (prob.energy(&sp).unwrap() - prob.energy(&sm).unwrap()) / (2.0 * step);
            assert!((fd - ga[i]).abs() <= 1e-5 * fd.abs().max(1e-3), "a{i}: {fd} vs {}", ga[i]);
        }
    }

    #[test]
    fn equal_moduli_constant_minimizer() {
        let alpha2 = 0.3f64.atan();
        let p = MaterialParams::new(1.0, 1.0, 0.6, alpha2, 0.05).unwrap();
        let r = minimize_eps_theta(&p, &SolverConfig::with_n(64)).unwrap();
        assert!(r.converged);
        assert!((r.energy - 0.183_882).abs() < 1e-5, "{}", r.energy);
        assert!(r.constraint_residual <= TOL_VC);
        assert!(r.field.satisfies_boundary(0.6));
        assert!(r.field.is_periodic());
        let e = energy_eps_theta(&r.field, &p).unwrap();
        assert!((e.total - r.energy).abs() < 1e-12);
    }

    #[test]
    fn zero_couple_well_constraint() {
        let p = MaterialParams::new(2.0, 0.0, 0.6, 0.0, 0.1).unwrap();
        let r = minimize_eps_theta(&p, &SolverConfig::with_n(64)).unwrap();
        assert!(r.converged);
        assert!((r.energy - 0.36).abs() < 1e-10);
        assert!(r.field.alpha().iter().all(|&a| a == 0.0));
    }

    #[test]
    fn double_well_forms_layers() {
        let p0 = MaterialParams::new(1.0, 0.02, 0.6, 0.0, 0.02).unwrap();
        let w = well_set(0.6, &p0).unwrap();
        let theta = 0.5 * (w.angles()[0] + w.angles()[1]);
        let p = p0.with_theta(theta).unwrap();
        let cfg = SolverConfig::with_n(512);
        let r = minimize_eps_theta(&p, &cfg).unwrap();
        assert!(r.converged, "{r:?}");
        let relaxed = minimize_relaxed(&p, &cfg).unwrap();
        assert!((relaxed.energy - w.minimal_energy).abs() < 1e-9);
        let c0 = surface_energy(w.angles()[0], w.angles()[1], &p).unwrap();
        let gap = r.energy - relaxed.energy;
        assert!(gap > 0.0 && gap < 2.0 * p.eps() * c0 * 1.2, "gap {gap}, 2 eps c0 {}", 2.0 * p.eps() * c0);
        let e = energy_eps(&r.field, &p).unwrap().total;
        assert!(e >= energy_relaxed(&r.field, &p, true).unwrap() - 1e-9);
    }

    #[test]
    fn relaxed_zero_couple_is_constant() {
        for theta in [0.1, 1.0, 4.0] {
            let p = MaterialParams::new(2.0, 0.0, 0.6, theta, 0.0).unwrap();
            let r = minimize_relaxed(&p, &SolverConfig::with_n(32)).unwrap();
            assert!(r.converged);
            assert!((r.energy - 0.36).abs() < 1e-12);
        }
    }

    #[test]
    fn recovery_field_shape() {
        let p = MaterialParams::new(2.0, 0.0, 0.6, 0.0, 1e-2).unwrap();
        let a = well_set(0.6, &p).unwrap().last();
        let f = recovery_sequence(0.0, a, 0.5, &p, 0.2, &SolverConfig::with_n(4000)).unwrap();
        assert!(f.satisfies_boundary(0.6));
        let alpha = f.alpha();
        for (i, &v) in alpha.iter().enumerate() {
            let x = f.x(i);
            if x < 0.3 {
                assert_eq!(v, 0.0);
            } else if x > 0.7 {
                assert_eq!(v, a);
            }
        }
        assert!(alpha.windows(2).all(|w| w[0] <= w[1]));
        let c0 = surface_energy(0.0, a, &p).unwrap();
        let fe = energy_rescaled(&f, &p).unwrap();
        assert!((fe - c0).abs() < 1e-3 * c0, "{fe} vs {c0}");
        let down = recovery_sequence(a, 0.0, 0.5, &p, 0.2, &SolverConfig::with_n(4000)).unwrap();
        let fd = energy_rescaled(&down, &p).unwrap();
        assert!((fd - fe).abs() < 1e-9);
        assert!(recovery_sequence(0.0, a, 0.02, &p, 0.05, &SolverConfig::with_n(2000)).is_err());
    }

    #[test]
    fn sweep_rejects_bad_lists() {
        let p = MaterialParams::new(2.0, 0.0, 0.6, 0.3, 0.0).unwrap();
        let cfg = SolverConfig::with_n(16);
        assert!(gamma_sweep(&p, &[0.1, 0.2], &cfg).is_err());
        assert!(gamma_sweep(&p, &[0.1, -0.2], &cfg).is_err());
        assert!(gamma_sweep(&p, &[], &cfg).unwrap().is_empty());
    }
}
