//! Surface energies between wells, the optimal transition profile and the
//! sharp-interface functional.
//!
//! All shifted potentials are evaluated at `z = gamma`.

use alloc::vec::Vec;
use core::f64::consts::TAU;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::closed_form::{well_set, RegimeTag};
use crate::model::{potential_w_reduced, v2, MaterialParams};
use crate::numeric::{integrate, scan_min};
use crate::{Error, Result, TOL_TAIL, TOL_WELL};

const QUAD_TOL: f64 = 1e-12;
const QUAD_PANELS: usize = 4000;
const NEGATIVE_V2_TOL: f64 = 1e-10;

/// `2 |int_{a}^{b} sqrt(V(s)) ds|`, with `s = a + t^2` on the left half and
/// `s = b - t^2` on the right half so that square-root behaviour at the ends
/// becomes smooth.
fn path_integral(shifted: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let mut negative: Option<(f64, f64)> = None;
    let mut root = |s: f64| {
        let v = shifted(s);
        if v < -NEGATIVE_V2_TOL && negative.is_none() {
            negative = Some((s, v));
        }
        v.max(0.0).sqrt()
    };
    let half = (0.5 * (hi - lo)).sqrt();
    let left = integrate(|t| 2.0 * t * root(lo + t * t), 0.0, half, QUAD_TOL, QUAD_PANELS)?;
    let right = integrate(|t| 2.0 * t * root(hi - t * t), 0.0, half, QUAD_TOL, QUAD_PANELS)?;
    if let Some((at, value)) = negative {
        return Err(Error::NegativeV2 { at, value });
    }
    Ok(2.0 * (left + right))
}

/// Surface energy `c_0 = 2 |int sqrt(V2(gamma, s)) ds|` between two angles.
pub fn surface_energy(alpha_minus: f64, alpha_plus: f64, p: &MaterialParams) -> Result<f64> {
    check_angle(alpha_minus)?;
    check_angle(alpha_plus)?;
    let gamma = p.gamma();
    path_integral(|s| v2(gamma, s, p), alpha_minus, alpha_plus)
}

/// Closed form of the surface energy when `mu_c = 0`:
/// `sqrt(2 mu) (gamma (1 - cos a) + 2 sin a - 2 a)` with `a` the nonzero well.
pub fn surface_energy_closed_zero_couple(p: &MaterialParams) -> Result<f64> {
    if p.mu_c() != 0.0 {
        return Err(Error::WrongRegime);
    }
    let gamma = p.gamma();
    let a = well_set(gamma, p)?.last();
    Ok((2.0 * p.mu()).sqrt() * (gamma * (1.0 - a.cos()) + 2.0 * a.sin() - 2.0 * a))
}

/// Minimum over `alpha` in `[0, 2pi]` of the reduced potential at `z = gamma`.
pub fn reduced_minimal_w(p: &MaterialParams) -> f64 {
    let gamma = p.gamma();
    scan_min(|a| potential_w_reduced(gamma, a, p), 0.0, TAU, 8192).1
}

/// Surface energy of the reduced potential, shifted by its own minimum.
pub fn surface_energy_reduced(alpha_minus: f64, alpha_plus: f64, p: &MaterialParams) -> Result<f64> {
    check_angle(alpha_minus)?;
    check_angle(alpha_plus)?;
    let gamma = p.gamma();
    let shift = reduced_minimal_w(p);
    path_integral(|s| potential_w_reduced(gamma, s, p) - shift, alpha_minus, alpha_plus)
}

/// `sqrt(2 mu) gamma^3 / 6`, the reduced surface energy for `mu_c = 0`.
pub fn surface_energy_reduced_closed_zero_couple(p: &MaterialParams) -> Result<f64> {
    if p.mu_c() != 0.0 {
        return Err(Error::WrongRegime);
    }
    Ok((2.0 * p.mu()).sqrt() * p.gamma().powi(3) / 6.0)
}

fn check_angle(a: f64) -> Result<()> {
    if !(0.0..=TAU).contains(&a) {
        return Err(Error::InvalidParameter("angles must lie in [0, 2pi]"));
    }
    Ok(())
}

/// Heteroclinic solution of `a'(y) = sqrt(V2(gamma, a(y)))` with
/// `a(0) = (alpha_minus + alpha_plus) / 2`, sampled on `[-T, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionProfile {
    pub y: Vec<f64>,
    pub alpha: Vec<f64>,
    /// `V2(gamma, alpha)` at the samples.
    pub v2: Vec<f64>,
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    pub half_width: f64,
    pub step: f64,
}

impl TransitionProfile {
    /// Index of `y = 0`.
    pub fn midpoint_index(&self) -> usize {
        self.y.len() / 2
    }

    /// Central differences inside, one-sided at the two ends.
    pub fn derivative(&self) -> Vec<f64> {
        let n = self.alpha.len();
        let h = self.step;
        (0..n)
            .map(|i| match i {
                0 => (self.alpha[1] - self.alpha[0]) / h,
                i if i == n - 1 => (self.alpha[n - 1] - self.alpha[n - 2]) / h,
                _ => (self.alpha[i + 1] - self.alpha[i - 1]) / (2.0 * h),
            })
            .collect()
    }

    /// `int |a'|^2 + V2(gamma, a) dy` by the trapezoid rule.
    pub fn path_energy(&self) -> f64 {
        let d = self.derivative();
        let g: Vec<f64> = d.iter().zip(&self.v2).map(|(d, v)| d * d + v).collect();
        let inner: f64 = g[1..g.len() - 1].iter().sum();
        (inner + 0.5 * (g[0] + g[g.len() - 1])) * self.step
    }

    /// `max |(a')^2 - V2| / max V2` over interior samples, with `a'` from
    /// central differences of the samples.
    pub fn equipartition_defect(&self) -> f64 {
        let d = self.derivative();
        let scale = self.v2.iter().cloned().fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        (1..self.alpha.len() - 1).map(|i| (d[i] * d[i] - self.v2[i]).abs()).fold(0.0, f64::max) / scale
    }
}

/// Integrates the profile equation with classical RK4 from the midpoint out
/// to `y = +-half_width`. Once a sample is within [`TOL_TAIL`] of its well the
/// rest of that side is set to the well.
pub fn optimal_profile(
    alpha_minus: f64,
    alpha_plus: f64,
    p: &MaterialParams,
    half_width: f64,
    step: f64,
) -> Result<TransitionProfile> {
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::InvalidParameter("half_width must be positive"));
    }
    if !(step > 0.0 && step <= half_width) {
        return Err(Error::InvalidParameter("step must be positive and at most half_width"));
    }
    if !(alpha_minus < alpha_plus) {
        return Err(Error::InvalidParameter("the profile needs alpha_minus < alpha_plus"));
    }
    let gamma = p.gamma();
    for a in [alpha_minus, alpha_plus] {
        check_angle(a)?;
        if v2(gamma, a, p).abs() > NEGATIVE_V2_TOL {
            return Err(Error::InvalidParameter("profile endpoints must be wells"));
        }
    }
    let rhs = |a: f64| v2(gamma, a, p).max(0.0).sqrt();
    let m = (half_width / step).ceil() as usize;
    let mid = 0.5 * (alpha_minus + alpha_plus);
    let forward = integrate_side(rhs, mid, alpha_plus, step, m);
    let backward = integrate_side(|a| -rhs(a), mid, alpha_minus, step, m);
    if (forward[m] - alpha_plus).abs() > TOL_TAIL || (backward[m] - alpha_minus).abs() > TOL_TAIL {
        return Err(Error::Stalled { half_width });
    }
    let alpha: Vec<f64> = backward.iter().rev().chain(forward[1..].iter()).cloned().collect();
    let y: Vec<f64> = (0..alpha.len()).map(|i| (i as f64 - m as f64) * step).collect();
    let v2s = alpha.iter().map(|&a| v2(gamma, a, p)).collect();
    Ok(TransitionProfile { y, alpha, v2: v2s, alpha_minus, alpha_plus, half_width: m as f64 * step, step })
}

/// As [`optimal_profile`], starting from `half_width = 8` and doubling it
/// until both wells are reached.
pub fn optimal_profile_auto(
    alpha_minus: f64,
    alpha_plus: f64,
    p: &MaterialParams,
    step: f64,
) -> Result<TransitionProfile> {
    let mut half_width = 8.0;
    loop {
        match optimal_profile(alpha_minus, alpha_plus, p, half_width, step) {
            Err(Error::Stalled { .. }) if half_width < 4096.0 => half_width *= 2.0,
            other => return other,
        }
    }
}

fn integrate_side(rhs: impl Fn(f64) -> f64, start: f64, target: f64, h: f64, m: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(m + 1);
    let mut a = start;
    out.push(a);
    let up = target > start;
    let mut done = false;
    for _ in 0..m {
        if !done {
            let k1 = rhs(a);
            let k2 = rhs(a + 0.5 * h * k1);
            let k3 = rhs(a + 0.5 * h * k2);
            let k4 = rhs(a + h * k3);
            a += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            a = if up { a.min(target) } else { a.max(target) };
            if (a - target).abs() <= TOL_TAIL {
                a = target;
                done = true;
            }
        }
        out.push(a);
    }
    out
}

/// Piecewise constant micro-rotation on `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantRotation {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseConstantRotation {
    /// `values[k]` holds between `breakpoints[k - 1]` and `breakpoints[k]`.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidField("need one more value than breakpoints"));
        }
        if breakpoints.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::InvalidField("breakpoints must lie in (0, 1)"));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidField("breakpoints must increase strictly"));
        }
        if values.iter().any(|v| !(0.0..=TAU).contains(v)) {
            return Err(Error::InvalidField("values must lie in [0, 2pi]"));
        }
        if values.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidField("adjacent values must differ"));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(Vec::new(), alloc::vec![value])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, x: f64) -> f64 {
        let k = self.breakpoints.partition_point(|&b| b <= x);
        self.values[k]
    }

    /// `(x, left value, right value)` for every jump.
    pub fn jump_set(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints.iter().zip(self.values.windows(2)).map(|(&x, v)| (x, v[0], v[1]))
    }
}

/// Value of the sharp-interface functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum F0Value {
    Finite(f64),
    Infinite,
}

impl F0Value {
    pub fn finite(&self) -> Option<f64> {
        match self {
            F0Value::Finite(v) => Some(*v),
            F0Value::Infinite => None,
        }
    }
}

/// Sum of surface energies over the jumps of `alpha` when `u` is the
/// homogeneous deformation and every value is a well; infinite otherwise.
pub fn f0(alpha: &PiecewiseConstantRotation, u_is_homogeneous: bool, p: &MaterialParams) -> Result<F0Value> {
    if !u_is_homogeneous {
        return Ok(F0Value::Infinite);
    }
    let wells = well_set(p.gamma(), p)?;
    if alpha.values().iter().any(|&v| wells.distance(v) > TOL_WELL) {
        return Ok(F0Value::Infinite);
    }
    let mut total = 0.0;
    for (_, left, right) in alpha.jump_set() {
        total += surface_energy(left, right, p)?;
    }
    Ok(F0Value::Finite(total))
}

/// Surface energy between the two wells at `gamma`.
pub fn surface_energy_between_wells(p: &MaterialParams) -> Result<f64> {
    let wells = well_set(p.gamma(), p)?;
    if !matches!(wells.regime.tag, RegimeTag::ZeroCouple | RegimeTag::DoubleWell) {
        return Err(Error::WrongRegime);
    }
    surface_energy(wells.angles()[0], wells.angles()[1], p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(mu: f64, mu_c: f64, gamma: f64) -> MaterialParams {
        MaterialParams::new(mu, mu_c, gamma, 0.3, 0.0).unwrap()
    }

    // Independent closed form, trapezoid rule on the raw integrand.
    fn trapezoid_c0(a: f64, b: f64, p: &MaterialParams, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let g = |s: f64| v2(p.gamma(), s, p).max(0.0).sqrt();
        let inner: f64 = (1..n).map(|i| g(a + i as f64 * h)).sum();
        2.0 * h * (inner + 0.5 * (g(a) + g(b)))
    }

    #[test]
    fn zero_couple_surface_energy() {
        let p = params(2.0, 0.0, 0.6);
        let a = well_set(0.6, &p).unwrap().last();
        let c0 = surface_energy(0.0, a, &p).unwrap();
        assert!((c0 - 0.068_346).abs() < 5e-7, "{c0}");
        assert!((c0 - surface_energy_closed_zero_couple(&p).unwrap()).abs() < 1e-12);
        assert!((c0 - trapezoid_c0(0.0, a, &p, 20000)).abs() < 1e-8);
        assert_eq!(surface_energy(a, a, &p).unwrap(), 0.0);
        assert_eq!(surface_energy(a, 0.0, &p).unwrap(), c0);
    }

    #[test]
    fn closed_form_needs_zero_couple() {
        let p = params(2.0, 0.1, 0.6);
        assert_eq!(surface_energy_closed_zero_couple(&p), Err(Error::WrongRegime));
        assert_eq!(surface_energy_reduced_closed_zero_couple(&p), Err(Error::WrongRegime));
    }

    #[test]
    fn negative_v2_is_reported() {
        let p = params(1.0, 0.02, 0.6);
        let shift = 1.0;
        let r = path_integral(|s| v2(0.6, s, &p) - shift, 0.0, 0.5);
        assert!(matches!(r, Err(Error::NegativeV2 { .. })));
    }

    #[test]
    fn reduced_surface_energy() {
        for gamma in [0.1, 0.6, 1.0] {
            let p = params(2.0, 0.0, gamma);
            let c = surface_energy_reduced(0.0, gamma, &p).unwrap();
            assert!((c - surface_energy_reduced_closed_zero_couple(&p).unwrap()).abs() < 1e-12);
        }
        let p = params(2.0, 0.0, 0.6);
        assert!((surface_energy_reduced(0.0, 0.6, &p).unwrap() - 0.072).abs() < 1e-12);
        assert_eq!(surface_energy_reduced(0.4, 0.4, &p).unwrap(), 0.0);
    }

    #[test]
    fn double_well_surface_energy() {
        let p = params(1.0, 0.02, 0.6);
        let w = well_set(0.6, &p).unwrap();
        let (a, b) = (w.angles()[0], w.angles()[1]);
        let c0 = surface_energy_between_wells(&p).unwrap();
        assert!((c0 - trapezoid_c0(a, b, &p, 20000)).abs() < 1e-8);
        assert_eq!(surface_energy_between_wells(&params(1.0, 1.0, 0.6)), Err(Error::WrongRegime));
    }

    #[test]
    fn profile_properties() {
        let p = params(2.0, 0.0, 0.6);
        let a = well_set(0.6, &p).unwrap().last();
        let prof = optimal_profile_auto(0.0, a, &p, 1e-3).unwrap();
        let mid = prof.midpoint_index();
        assert_eq!(prof.y[mid], 0.0);
        assert_eq!(prof.alpha[mid], 0.5 * a);
        assert!(prof.alpha.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(prof.alpha[0], 0.0);
        assert_eq!(*prof.alpha.last().unwrap(), a);
        assert!(prof.equipartition_defect() < 1e-6);
        assert!((prof.path_energy() - 0.068_346).abs() < 1e-4);
    }

    #[test]
    fn profile_stalls_on_short_window() {
        let p = params(2.0, 0.0, 0.6);
        let a = well_set(0.6, &p).unwrap().last();
        assert!(matches!(optimal_profile(0.0, a, &p, 2.0, 1e-2), Err(Error::Stalled { .. })));
        assert!(optimal_profile(0.0, 0.3, &p, 50.0, 1e-2).is_err());
        assert!(optimal_profile(a, 0.0, &p, 50.0, 1e-2).is_err());
    }

    #[test]
    fn piecewise_rotation_validation() {
        assert!(PiecewiseConstantRotation::new(alloc::vec![0.5], alloc::vec![0.0]).is_err());
        assert!(PiecewiseConstantRotation::new(alloc::vec![0.5, 0.4], alloc::vec![0.0, 1.0, 0.0]).is_err());
        assert!(PiecewiseConstantRotation::new(alloc::vec![0.5], alloc::vec![1.0, 1.0]).is_err());
        assert!(PiecewiseConstantRotation::new(alloc::vec![1.0], alloc::vec![0.0, 1.0]).is_err());
        let r = PiecewiseConstantRotation::new(alloc::vec![0.25, 0.75], alloc::vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(r.value_at(0.1), 0.0);
        assert_eq!(r.value_at(0.5), 1.0);
        assert_eq!(r.value_at(0.9), 0.0);
        assert_eq!(r.jump_set().count(), 2);
    }

    #[test]
    fn f0_values() {
        let p = params(2.0, 0.0, 0.6);
        let a = well_set(0.6, &p).unwrap().last();
        let c0 = surface_energy(0.0, a, &p).unwrap();
        let constant = PiecewiseConstantRotation::constant(a).unwrap();
        assert_eq!(f0(&constant, true, &p).unwrap(), F0Value::Finite(0.0));
        let one = PiecewiseConstantRotation::new(alloc::vec![0.5], alloc::vec![0.0, a]).unwrap();
        assert_eq!(f0(&one, true, &p).unwrap(), F0Value::Finite(c0));
        assert_eq!(f0(&one, false, &p).unwrap(), F0Value::Infinite);
        let two = PiecewiseConstantRotation::new(alloc::vec![0.3, 0.6], alloc::vec![0.0, a, 0.0]).unwrap();
        let v = f0(&two, true, &p).unwrap().finite().unwrap();
        assert!((v - 2.0 * c0).abs() < 1e-15);
        let off = PiecewiseConstantRotation::new(alloc::vec![0.5], alloc::vec![0.0, 0.3]).unwrap();
        assert_eq!(f0(&off, true, &p).unwrap(), F0Value::Infinite);
    }
}
