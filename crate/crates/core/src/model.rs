//! Material parameters, pointwise energy densities and the discretized
//! energy functionals on a uniform grid of `[0, 1]`.
//!
//! All discrete functionals share one quadrature: on cell `i` the shear
//! `u'` and the rotation gradient `alpha'` are the forward differences, and
//! potential terms are evaluated at the cell midpoint of the linear
//! interpolant of `alpha`. For piecewise linear fields the gradient terms
//! are therefore integrated exactly.

use alloc::vec::Vec;
use core::f64::consts::TAU;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::closed_form;
use crate::{Error, Result, TOL_VC};

/// Moduli, boundary shear, regularization and constraint mean.
///
/// Immutable once built. The minimal value of the potential at the boundary
/// shear (`w_min`) is computed at construction so that the shifted potential
/// [`v2`] never re-runs the regime logic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    mu: f64,
    mu_c: f64,
    gamma: f64,
    theta: f64,
    eps: f64,
    w_min: f64,
}

impl MaterialParams {
    pub fn new(mu: f64, mu_c: f64, gamma: f64, theta: f64, eps: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidParameter("mu must be positive"));
        }
        if !(mu_c.is_finite() && mu_c >= 0.0) {
            return Err(Error::InvalidParameter("mu_c must be non-negative"));
        }
        if !(gamma > 0.0 && gamma < 2.0) {
            return Err(Error::InvalidParameter("gamma must lie in the open interval (0, 2)"));
        }
        if !(0.0..=TAU).contains(&theta) {
            return Err(Error::InvalidParameter("theta must lie in [0, 2pi]"));
        }
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::InvalidParameter("eps must be non-negative"));
        }
        let w_min = closed_form::well_set_raw(gamma, mu, mu_c)?.minimal_w;
        Ok(Self { mu, mu_c, gamma, theta, eps, w_min })
    }

    /// Same material with a different regularization length.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::InvalidParameter("eps must be non-negative"));
        }
        Ok(Self { eps, ..*self })
    }

    /// Same material with a different constraint mean.
    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        if !(0.0..=TAU).contains(&theta) {
            return Err(Error::InvalidParameter("theta must lie in [0, 2pi]"));
        }
        Ok(Self { theta, ..*self })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn mu_c(&self) -> f64 {
        self.mu_c
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Minimum over `alpha` of `W(gamma, alpha)`.
    pub fn w_min(&self) -> f64 {
        self.w_min
    }
}

/// `W(z, alpha) = mu/2 (sin(alpha) z - 4 sin^2(alpha/2))^2 + mu_c/2 (cos(alpha) z - 2 sin(alpha))^2`.
pub fn potential_w(z: f64, alpha: f64, p: &MaterialParams) -> f64 {
    w_raw(z, alpha, p.mu, p.mu_c)
}

pub(crate) fn w_raw(z: f64, alpha: f64, mu: f64, mu_c: f64) -> f64 {
    let (s, c) = alpha.sin_cos();
    // 4 sin^2(a/2) = 2 - 2 cos(a)
    let a = s * z - 2.0 + 2.0 * c;
    let b = c * z - 2.0 * s;
    0.5 * mu * a * a + 0.5 * mu_c * b * b
}

/// Third-order Taylor version of the potential.
pub fn potential_w_reduced(z: f64, alpha: f64, p: &MaterialParams) -> f64 {
    let a = alpha * (alpha - z);
    let b = 0.5 * (2.0 - alpha * alpha) * z - (6.0 * alpha - alpha.powi(3)) / 3.0;
    0.5 * p.mu * a * a + 0.5 * p.mu_c * b * b
}

/// Full local density `mu/2 z^2 + W(z, alpha)`.
pub fn q(z: f64, alpha: f64, p: &MaterialParams) -> f64 {
    0.5 * p.mu * z * z + potential_w(z, alpha, p)
}

/// Shifted shear energy `mu/2 |z^2 - gamma^2|`.
pub fn v1(z: f64, p: &MaterialParams) -> f64 {
    0.5 * p.mu * (z * z - p.gamma * p.gamma).abs()
}

/// Shifted potential `W(z, alpha) - w_min(gamma)`.
pub fn v2(z: f64, alpha: f64, p: &MaterialParams) -> f64 {
    potential_w(z, alpha, p) - p.w_min
}

/// Value and first/second partial derivatives of `W` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialJet {
    pub value: f64,
    pub dz: f64,
    pub da: f64,
    pub dzz: f64,
    pub dza: f64,
    pub daa: f64,
}

/// Derivatives of `W` in closed form.
///
/// With `A = z sin(a) - 2 + 2 cos(a)` and `B = z cos(a) - 2 sin(a)` one has
/// `A_a = B` and `B_a = -(A + 2)`, which keeps every expression short.
pub fn potential_jet(z: f64, alpha: f64, mu: f64, mu_c: f64) -> PotentialJet {
    let (s, c) = alpha.sin_cos();
    let a = s * z - 2.0 + 2.0 * c;
    let b = c * z - 2.0 * s;
    let a2 = a + 2.0;
    let mix = mu * a - mu_c * a2;
    PotentialJet {
        value: 0.5 * mu * a * a + 0.5 * mu_c * b * b,
        dz: mu * a * s + mu_c * b * c,
        da: b * mix,
        dzz: mu * s * s + mu_c * c * c,
        dza: mu * (b * s + a * c) - mu_c * (a2 * c + b * s),
        daa: -a2 * mix + (mu - mu_c) * b * b,
    }
}

/// Sampled pair `(u, alpha)` on the uniform grid `x_i = i / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    u: Vec<f64>,
    alpha: Vec<f64>,
}

impl GridField {
    /// Builds a field from nodal values. Both arrays need `n + 1 >= 2`
    /// entries, `alpha` must stay in `[0, 2pi]`.
    pub fn new(u: Vec<f64>, alpha: Vec<f64>) -> Result<Self> {
        if u.len() != alpha.len() {
            return Err(Error::InvalidField("u and alpha must have the same length"));
        }
        if u.len() < 2 {
            return Err(Error::InvalidField("a field needs at least two nodes"));
        }
        if u.iter().chain(alpha.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidField("non-finite nodal value"));
        }
        if alpha.iter().any(|a| !(0.0..=TAU).contains(a)) {
            return Err(Error::InvalidField("alpha must lie in [0, 2pi]"));
        }
        Ok(Self { u, alpha })
    }

    /// `u(x) = gamma x` with the rotation sampled from `alpha_of_x`.
    pub fn homogeneous(n: usize, gamma: f64, alpha_of_x: impl Fn(f64) -> f64) -> Result<Self> {
        let h = 1.0 / n as f64;
        let u = (0..=n).map(|i| gamma * i as f64 * h).collect();
        let alpha = (0..=n).map(|i| alpha_of_x(i as f64 * h)).collect();
        Self::new(u, alpha)
    }

    /// Homogeneous deformation `u = gamma x` with a constant rotation.
    pub fn construct_homogeneous(n: usize, p: &MaterialParams, alpha: f64) -> Result<Self> {
        Self::homogeneous(n, p.gamma, |_| alpha)
    }

    /// Number of grid cells.
    pub fn n(&self) -> usize {
        self.u.len() - 1
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n() as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Boundary values of `u` match `0` and `gamma`.
    pub fn satisfies_boundary(&self, gamma: f64) -> bool {
        let n = self.n();
        self.u[0] == 0.0 && (self.u[n] - gamma).abs() <= 1e-14 * gamma.max(1.0)
    }

    /// `alpha(0) = alpha(1)`.
    pub fn is_periodic(&self) -> bool {
        self.alpha[0] == self.alpha[self.n()]
    }

    /// Trapezoid mean of `alpha` (identical to the mean of the cell midpoints).
    pub fn mean_alpha(&self) -> f64 {
        let n = self.n();
        let inner: f64 = self.alpha[1..n].iter().sum();
        (inner + 0.5 * (self.alpha[0] + self.alpha[n])) / n as f64
    }

    /// `(z_i, m_i, a_i)`: shear, midpoint rotation and rotation gradient of cell `i`.
    pub(crate) fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let inv_h = self.n() as f64;
        self.u
            .windows(2)
            .zip(self.alpha.windows(2))
            .map(move |(u, a)| ((u[1] - u[0]) * inv_h, 0.5 * (a[0] + a[1]), (a[1] - a[0]) * inv_h))
    }
}

/// Parts of the discrete `E_eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// `eps^2 |alpha'|^2` part.
    pub curvature: f64,
    /// `mu/2 |u'|^2` part.
    pub shear: f64,
    /// `W(u', alpha)` part.
    pub coupling: f64,
    pub total: f64,
}

/// Discrete `E_eps(u, alpha) = int eps^2 |alpha'|^2 + mu/2 |u'|^2 + W(u', alpha) dx`.
pub fn energy_eps(f: &GridField, p: &MaterialParams) -> Result<EnergyBreakdown> {
    if f.n() < 2 {
        return Err(Error::InvalidField("energy needs at least two cells"));
    }
    let h = f.h();
    let eps2 = p.eps * p.eps;
    let (mut curvature, mut shear, mut coupling) = (0.0, 0.0, 0.0);
    for (z, m, a) in f.cells() {
        curvature += eps2 * a * a;
        shear += 0.5 * p.mu * z * z;
        coupling += potential_w(z, m, p);
    }
    let (curvature, shear, coupling) = (curvature * h, shear * h, coupling * h);
    Ok(EnergyBreakdown { curvature, shear, coupling, total: curvature + shear + coupling })
}

/// Checks the volume constraint `mean(alpha) = theta` to [`TOL_VC`].
pub fn check_volume_constraint(f: &GridField, theta: f64) -> Result<()> {
    let mean = f.mean_alpha();
    if (mean - theta).abs() > TOL_VC {
        return Err(Error::ConstraintViolation { mean, theta });
    }
    Ok(())
}

/// Discrete `E_eps^theta`: `E_eps` on fields meeting the volume constraint,
/// [`Error::ConstraintViolation`] (the `+inf` branch) otherwise.
pub fn energy_eps_theta(f: &GridField, p: &MaterialParams) -> Result<EnergyBreakdown> {
    check_volume_constraint(f, p.theta)?;
    energy_eps(f, p)
}

/// Discrete rescaled energy
/// `F_eps = (1/eps) int eps^2 |alpha'|^2 + V1(u') + V2(u', alpha) dx`.
pub fn energy_rescaled(f: &GridField, p: &MaterialParams) -> Result<f64> {
    if p.eps <= 0.0 {
        return Err(Error::DivisionByZeroScale);
    }
    if f.n() < 2 {
        return Err(Error::InvalidField("energy needs at least two cells"));
    }
    let eps2 = p.eps * p.eps;
    let sum: f64 = f.cells().map(|(z, m, a)| eps2 * a * a + v1(z, p) + v2(z, m, p)).sum();
    Ok(sum * f.h() / p.eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::well_set;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn params(mu: f64, mu_c: f64, gamma: f64) -> MaterialParams {
        MaterialParams::new(mu, mu_c, gamma, 0.3, 0.1).unwrap()
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(MaterialParams::new(0.0, 0.0, 0.6, 0.0, 0.0).is_err());
        assert!(MaterialParams::new(1.0, -1.0, 0.6, 0.0, 0.0).is_err());
        assert!(MaterialParams::new(1.0, 0.0, 2.0, 0.0, 0.0).is_err());
        assert!(MaterialParams::new(1.0, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(MaterialParams::new(1.0, 0.0, 0.6, 7.0, 0.0).is_err());
        assert!(MaterialParams::new(1.0, 0.0, 0.6, 0.0, -0.1).is_err());
    }

    #[test]
    fn potential_examples() {
        assert_eq!(potential_w(0.6, 0.0, &params(1.0, 0.0, 0.6)), 0.0);
        for z in [-1.3, 0.2, 0.6, 1.7] {
            assert!(close(potential_w(z, 0.0, &params(1.0, 0.1, 0.6)), 0.05 * z * z, 1e-15));
        }
        let w = potential_w(0.6, 0.2915, &params(1.0, 0.1, 0.6));
        assert!(close(w, 0.003877, 5e-6), "{w}");
        assert!(close(q(0.6, 0.2915, &params(1.0, 0.1, 0.6)), 0.18388, 5e-6));
        assert!(close(q(0.6, 0.0, &params(1.0, 0.0, 0.6)), 0.18, 1e-15));
        assert_eq!(q(0.0, 0.0, &params(3.0, 0.7, 0.6)), 0.0);
    }

    #[test]
    fn reduced_potential_examples() {
        let p = params(1.0, 0.0, 0.6);
        assert_eq!(potential_w_reduced(0.6, 0.0, &p), 0.0);
        assert!(close(potential_w_reduced(0.6, 0.6, &p), 0.0, 1e-16));
        assert!(close(potential_w_reduced(0.6, 0.3, &p), 0.00405, 1e-15));
    }

    #[test]
    fn shifted_potentials() {
        let p = params(2.0, 0.0, 0.6);
        assert_eq!(v1(0.6, &p), 0.0);
        assert_eq!(v1(-0.6, &p), 0.0);
        assert!(close(v1(0.0, &p), 0.36, 1e-15));
        assert!(close(v2(0.6, 0.58291, &p), 0.0, 1e-9));
        assert_eq!(v2(0.6, 0.3, &p), potential_w(0.6, 0.3, &p));

        let p = params(1.0, 1.0, 0.6);
        let alpha2 = well_set(0.6, &p).unwrap().angles()[0];
        assert!(close(v2(0.6, alpha2, &p), 0.0, 1e-15));
    }

    #[test]
    fn jet_matches_finite_differences() {
        let h = 1e-5;
        for &(z, a, mu, mu_c) in &[(0.6, 0.3, 1.0, 0.1), (1.4, 2.9, 2.0, 0.0), (0.2, 5.5, 0.7, 3.0)] {
            let j = potential_jet(z, a, mu, mu_c);
            let fz = |z: f64| potential_jet(z, a, mu, mu_c);
            let fa = |a: f64| potential_jet(z, a, mu, mu_c);
            let cd = |p: f64, m: f64| (p - m) / (2.0 * h);
            assert!(close(j.value, w_raw(z, a, mu, mu_c), 1e-15));
            assert!(close(j.dz, cd(fz(z + h).value, fz(z - h).value), 1e-8));
            assert!(close(j.da, cd(fa(a + h).value, fa(a - h).value), 1e-8));
            assert!(close(j.dzz, cd(fz(z + h).dz, fz(z - h).dz), 1e-8));
            assert!(close(j.dza, cd(fa(a + h).dz, fa(a - h).dz), 1e-8));
            assert!(close(j.daa, cd(fa(a + h).da, fa(a - h).da), 1e-8));
        }
    }

    #[test]
    fn homogeneous_energies() {
        let p = MaterialParams::new(1.0, 0.0, 0.6, 0.0, 0.3).unwrap();
        let f = GridField::construct_homogeneous(16, &p, 0.0).unwrap();
        let e = energy_eps(&f, &p).unwrap();
        assert!(close(e.total, 0.18, 1e-14));
        assert_eq!(e.curvature, 0.0);

        let p = MaterialParams::new(1.0, 1.0, 0.6, 0.0, 0.0).unwrap();
        let alpha2 = (0.3f64).atan();
        let f = GridField::construct_homogeneous(16, &p, alpha2).unwrap();
        let e = energy_eps(&f, &p).unwrap();
        let expect = 0.36 + 4.0 - 2.0 * (4.36f64).sqrt();
        assert!(close(e.total, expect, 1e-14));
        assert!(close(e.total, 0.18388, 5e-6));
    }

    #[test]
    fn energy_rejects_single_cell() {
        let p = params(1.0, 0.0, 0.6);
        let f = GridField::new([0.0, 0.6].to_vec(), [0.0, 0.0].to_vec()).unwrap();
        assert!(matches!(energy_eps(&f, &p), Err(Error::InvalidField(_))));
    }

    #[test]
    fn volume_constraint() {
        let p = MaterialParams::new(1.0, 0.02, 0.6, 0.3, 0.1).unwrap();
        let f = GridField::construct_homogeneous(32, &p, 0.3).unwrap();
        assert!(energy_eps_theta(&f, &p).is_ok());
        let f = GridField::construct_homogeneous(32, &p, 0.8).unwrap();
        match energy_eps_theta(&f, &p) {
            Err(Error::ConstraintViolation { mean, .. }) => assert!(close(mean, 0.8, 1e-14)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rescaled_energy() {
        let p = MaterialParams::new(2.0, 0.0, 0.6, 0.0, 0.1).unwrap();
        let f = GridField::construct_homogeneous(40, &p, 0.0).unwrap();
        let r = energy_rescaled(&f, &p).unwrap();
        assert!(close(r, 0.0, 1e-13), "{r}");
        let f = GridField::construct_homogeneous(40, &p, 0.3).unwrap();
        let expect = v2(0.6, 0.3, &p) / 0.1;
        assert!(close(energy_rescaled(&f, &p).unwrap(), expect, 1e-13));
        let p0 = p.with_eps(0.0).unwrap();
        assert_eq!(energy_rescaled(&f, &p0), Err(Error::DivisionByZeroScale));
    }
}
