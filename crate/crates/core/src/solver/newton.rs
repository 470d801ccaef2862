//! Projected Newton iteration with an augmented Lagrangian for the mean
//! constraint.
//!
//! Unknowns are `u_1 .. u_{n-1}` and `alpha_0 .. alpha_{n-1}`; `u_0 = 0`,
//! `u_n = gamma` and `alpha_n = alpha_0` are eliminated. Nodes are stored in
//! folded order (`0, 1, n-1, 2, n-2, ...`) so that the periodic coupling
//! between the first and last cell stays inside a narrow band.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use super::banded::BandMatrix;
use super::SolverConfig;
use crate::envelope;
use crate::model::potential_jet;

/// Local density `phi(z, m)` of one cell plus the curvature weight `eps^2`.
pub(crate) trait Density {
    fn eps2(&self) -> f64;
    /// `phi`, or `None` where the density is `+inf`.
    fn value(&self, z: f64, m: f64) -> Option<f64>;
    /// `[phi, phi_z, phi_m, phi_zz, phi_zm, phi_mm]`.
    fn jet(&self, z: f64, m: f64) -> Option<[f64; 6]>;
}

/// `mu/2 z^2 + W(z, m)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Elastic {
    pub mu: f64,
    pub mu_c: f64,
    pub eps2: f64,
}

impl Density for Elastic {
    fn eps2(&self) -> f64 {
        self.eps2
    }

    fn value(&self, z: f64, m: f64) -> Option<f64> {
        Some(0.5 * self.mu * z * z + crate::model::w_raw(z, m, self.mu, self.mu_c))
    }

    fn jet(&self, z: f64, m: f64) -> Option<[f64; 6]> {
        let j = potential_jet(z, m, self.mu, self.mu_c);
        let mu = self.mu;
        Some([0.5 * mu * z * z + j.value, mu * z + j.dz, j.da, mu + j.dzz, j.dza, j.daa])
    }
}

/// `Q**(z, m)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Relaxed {
    pub mu: f64,
    pub mu_c: f64,
}

impl Density for Relaxed {
    fn eps2(&self) -> f64 {
        0.0
    }

    fn value(&self, z: f64, m: f64) -> Option<f64> {
        envelope::relaxed_value(z, m, self.mu, self.mu_c).ok()
    }

    // `Q**` is not differentiable at zero shear
    fn jet(&self, z: f64, m: f64) -> Option<[f64; 6]> {
        if z == 0.0 {
            return None;
        }
        envelope::local_jet(z, m, self.mu, self.mu_c).ok()
    }
}

/// Node values `u_0..u_n`, `alpha_0..alpha_n` with `alpha_n = alpha_0`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct State {
    pub u: Vec<f64>,
    pub alpha: Vec<f64>,
}

/// Folded positions of the unknowns.
#[derive(Debug, Clone)]
struct Layout {
    n: usize,
    pos_u: Vec<usize>,
    pos_a: Vec<usize>,
    len: usize,
    kd: usize,
}

const PINNED: usize = usize::MAX;

impl Layout {
    fn new(n: usize) -> Self {
        let mut pos_u = vec![PINNED; n + 1];
        let mut pos_a = vec![PINNED; n + 1];
        pos_a[0] = 0;
        let mut next = 1;
        for level in 1..=n / 2 {
            let mirror = n - level;
            pos_u[level] = next;
            pos_a[level] = next + 1;
            next += 2;
            if mirror != level {
                pos_u[mirror] = next;
                pos_a[mirror] = next + 1;
                next += 2;
            }
        }
        pos_a[n] = pos_a[0];
        let mut kd = 0;
        for i in 0..n {
            let nodes = [pos_u[i], pos_u[i + 1], pos_a[i], pos_a[i + 1]];
            for &a in &nodes {
                for &b in &nodes {
                    if a != PINNED && b != PINNED {
                        kd = kd.max(a.abs_diff(b));
                    }
                }
            }
        }
        Self { n, pos_u, pos_a, len: next, kd }
    }

    fn is_alpha(&self) -> Vec<bool> {
        let mut out = vec![false; self.len];
        for i in 0..self.n {
            out[self.pos_a[i]] = true;
        }
        out
    }

    fn gather(&self, s: &State, x: &mut [f64]) {
        for i in 1..self.n {
            x[self.pos_u[i]] = s.u[i];
        }
        for i in 0..self.n {
            x[self.pos_a[i]] = s.alpha[i];
        }
    }

    fn scatter(&self, x: &[f64], s: &mut State) {
        for i in 1..self.n {
            s.u[i] = x[self.pos_u[i]];
        }
        for i in 0..self.n {
            s.alpha[i] = x[self.pos_a[i]];
        }
        s.alpha[self.n] = s.alpha[0];
    }
}

/// Discrete functional `sum_i h (eps^2 a_i^2 + phi(z_i, m_i))` on a periodic grid.
pub(crate) struct Problem<'a, D: Density> {
    n: usize,
    h: f64,
    density: &'a D,
    layout: Layout,
}

impl<'a, D: Density> Problem<'a, D> {
    pub(crate) fn new(n: usize, density: &'a D) -> Self {
        Self { n, h: 1.0 / n as f64, density, layout: Layout::new(n) }
    }

    fn cell(&self, s: &State, i: usize) -> (f64, f64, f64) {
        let inv_h = self.n as f64;
        ((s.u[i + 1] - s.u[i]) * inv_h, 0.5 * (s.alpha[i] + s.alpha[i + 1]), (s.alpha[i + 1] - s.alpha[i]) * inv_h)
    }

    pub(crate) fn energy(&self, s: &State) -> Option<f64> {
        let eps2 = self.density.eps2();
        let mut sum = 0.0;
        for i in 0..self.n {
            let (z, m, a) = self.cell(s, i);
            sum += eps2 * a * a + self.density.value(z, m)?;
        }
        Some(sum * self.h)
    }

    pub(crate) fn mean(&self, s: &State) -> f64 {
        s.alpha[..self.n].iter().sum::<f64>() * self.h
    }

    /// Energy and gradient in folded order; the Hessian too when asked.
    fn evaluate(&self, s: &State, grad: &mut [f64], hess: Option<&mut BandMatrix>) -> Option<f64> {
        let (h, eps2) = (self.h, self.density.eps2());
        let lay = &self.layout;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut hess = hess;
        if let Some(m) = hess.as_deref_mut() {
            m.clear();
        }
        let mut sum = 0.0;
        for i in 0..self.n {
            let (z, m, a) = self.cell(s, i);
            let [phi, pz, pm, pzz, pzm, pmm] = self.density.jet(z, m)?;
            sum += eps2 * a * a + phi;
            // local order: u_i, u_{i+1}, alpha_i, alpha_{i+1}
            let idx = [lay.pos_u[i], lay.pos_u[i + 1], lay.pos_a[i], lay.pos_a[i + 1]];
            let g = [-pz, pz, -2.0 * eps2 * a + 0.5 * h * pm, 2.0 * eps2 * a + 0.5 * h * pm];
            for k in 0..4 {
                if idx[k] != PINNED {
                    grad[idx[k]] += g[k];
                }
            }
            if let Some(mat) = hess.as_deref_mut() {
                let uu = pzz / h;
                let aa_c = 2.0 * eps2 / h;
                let aa_p = 0.25 * h * pmm;
                let ua = 0.5 * pzm;
                let local = [
                    [uu, -uu, -ua, -ua],
                    [-uu, uu, ua, ua],
                    [-ua, ua, aa_c + aa_p, -aa_c + aa_p],
                    [-ua, ua, -aa_c + aa_p, aa_c + aa_p],
                ];
                for r in 0..4 {
                    if idx[r] == PINNED {
                        continue;
                    }
                    for c in 0..=r {
                        if idx[c] == PINNED {
                            continue;
                        }
                        mat.add(idx[r], idx[c], local[r][c]);
                    }
                }
            }
        }
        Some(sum * h)
    }

    /// Energy gradient with respect to `u_0..u_n` (zero at the pinned ends)
    /// and `alpha_0..alpha_{n-1}`.
    pub(crate) fn node_gradient(&self, s: &State) -> Option<(Vec<f64>, Vec<f64>)> {
        let lay = &self.layout;
        let mut g = vec![0.0; lay.len];
        self.evaluate(s, &mut g, None)?;
        let gu = (0..=self.n).map(|i| if lay.pos_u[i] == PINNED { 0.0 } else { g[lay.pos_u[i]] }).collect();
        let ga = (0..self.n).map(|i| g[lay.pos_a[i]]).collect();
        Some((gu, ga))
    }
}

/// Result of one augmented Lagrangian solve.
#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub state: State,
    pub energy: f64,
    pub residual: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

const MAX_OUTER: usize = 40;
const RHO_MAX: f64 = 1e12;
const TAU_MAX: f64 = 1e12;

/// Minimizes the functional subject to `mean(alpha) = theta` and
/// `0 <= alpha <= 2pi` starting from `init`.
pub(crate) fn minimize<D: Density>(
    prob: &Problem<'_, D>,
    init: State,
    theta: f64,
    cfg: &SolverConfig,
) -> Option<Outcome> {
    let lay = &prob.layout;
    let len = lay.len;
    let h = prob.h;
    let is_alpha = lay.is_alpha();
    let w: Vec<f64> = is_alpha.iter().map(|&a| if a { h } else { 0.0 }).collect();
    let project = |x: &mut [f64]| {
        for k in 0..len {
            if is_alpha[k] {
                x[k] = x[k].clamp(0.0, TAU);
            }
        }
    };

    let mut state = init;
    let mut x = vec![0.0; len];
    lay.gather(&state, &mut x);
    project(&mut x);
    lay.scatter(&x, &mut state);
    prob.energy(&state)?;

    let mut lambda = 0.0;
    let mut rho = cfg.penalty_weight.max(1e-8);
    let mut iterations = 0;
    let mut grad = vec![0.0; len];
    let mut hess = BandMatrix::zeros(len, lay.kd);
    let mut trial = state.clone();
    let mut xt = vec![0.0; len];
    let mut dir = vec![0.0; len];
    let mut y2 = vec![0.0; len];
    let mut lm = 0.0f64;
    let mut c_prev = f64::INFINITY;
    let mut res = f64::INFINITY;
    let mut inner_ok = false;

    let constraint = |x: &[f64]| -> f64 { x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - theta };
    let lagrangian = |e: f64, c: f64, lambda: f64, rho: f64| e + lambda * c + 0.5 * rho * c * c;

    for _outer in 0..MAX_OUTER {
        inner_ok = false;
        while iterations < cfg.max_iters {
            let e = prob.evaluate(&state, &mut grad, Some(&mut hess))?;
            let c = constraint(&x);
            let mult = lambda + rho * c;
            for k in 0..len {
                grad[k] += mult * w[k];
            }
            let l0 = lagrangian(e, c, lambda, rho);
            // u entries are stress jumps between cells, alpha entries are
            // projected and taken per unit length
            res = 0.0;
            for k in 0..len {
                let r = if is_alpha[k] {
                    let g = grad[k] / h;
                    x[k] - (x[k] - g).clamp(0.0, TAU)
                } else {
                    grad[k]
                };
                res = res.max(r.abs());
            }
            if res <= cfg.grad_tol {
                inner_ok = true;
                break;
            }
            iterations += 1;

            let max_diag = (0..len).map(|k| hess.diag(k).abs()).fold(0.0, f64::max).max(1e-300);
            let scale: Vec<f64> = (0..len).map(|k| hess.diag(k).abs().max(1e-10 * max_diag)).collect();
            // width of the near-active band: length of the projected,
            // diagonally scaled gradient step in angle units
            let act_eps = (0..len)
                .filter(|&k| is_alpha[k])
                .map(|k| (x[k] - (x[k] - grad[k] / scale[k]).clamp(0.0, TAU)).abs())
                .fold(0.0, f64::max)
                .min(1e-3);
            let mut active = vec![false; len];
            for k in 0..len {
                if is_alpha[k] {
                    active[k] = (x[k] <= act_eps && grad[k] > 0.0) || (x[k] >= TAU - act_eps && grad[k] < 0.0);
                }
            }
            for k in 0..len {
                if active[k] {
                    hess.pin(k);
                }
            }

            let mut accepted = false;
            while lm <= TAU_MAX {
                let mut fac = hess.clone();
                if lm > 0.0 {
                    for k in 0..len {
                        if !active[k] {
                            fac.add_diag(k, lm * scale[k]);
                        }
                    }
                }
                if !fac.factor() {
                    lm = (lm * 10.0).max(1e-8);
                    continue;
                }
                for k in 0..len {
                    dir[k] = if active[k] { 0.0 } else { -grad[k] };
                    y2[k] = if active[k] { 0.0 } else { w[k] };
                }
                fac.solve(&mut dir);
                fac.solve(&mut y2);
                let wy1: f64 = w.iter().zip(&dir).map(|(a, b)| a * b).sum();
                let wy2: f64 = w.iter().zip(&y2).map(|(a, b)| a * b).sum();
                let coef = rho * wy1 / (1.0 + rho * wy2);
                for k in 0..len {
                    dir[k] = if active[k] { -grad[k] / scale[k] } else { dir[k] - coef * y2[k] };
                }

                let mut t = 1.0;
                for _ in 0..cfg.step_rule.max_backtracks {
                    for k in 0..len {
                        xt[k] = x[k] + t * dir[k];
                    }
                    project(&mut xt);
                    lay.scatter(&xt, &mut trial);
                    if let Some(et) = prob.energy(&trial) {
                        let ct = constraint(&xt);
                        let lt = lagrangian(et, ct, lambda, rho);
                        let slope: f64 = (0..len).map(|k| grad[k] * (xt[k] - x[k])).sum();
                        let slack = 1e-14 * l0.abs();
                        if lt <= l0 + cfg.step_rule.sigma * slope + slack && slope <= 0.0 {
                            debug_assert!(lt <= l0 + 2.0 * slack, "augmented objective increased");
                            accepted = true;
                            break;
                        }
                    }
                    t *= cfg.step_rule.shrink;
                }
                if accepted {
                    if t == 1.0 {
                        lm = if lm < 1e-10 { 0.0 } else { lm * 0.1 };
                    }
                    break;
                }
                lm = (lm * 10.0).max(1e-6);
            }
            if !accepted {
                break;
            }
            core::mem::swap(&mut x, &mut xt);
            core::mem::swap(&mut state, &mut trial);
        }
        let c = constraint(&x);
        if inner_ok && c.abs() <= 0.1 * crate::TOL_VC {
            break;
        }
        if iterations >= cfg.max_iters || !inner_ok {
            break;
        }
        lambda += rho * c;
        if c.abs() > 0.25 * c_prev {
            rho = (rho * 10.0).min(RHO_MAX);
        }
        c_prev = c.abs();
    }
    let energy = prob.energy(&state)?;
    let residual = (prob.mean(&state) - theta).abs();
    let converged = inner_ok && residual <= crate::TOL_VC && res <= cfg.grad_tol;
    Some(Outcome { state, energy, residual, grad_norm: res, iterations, converged })
}
