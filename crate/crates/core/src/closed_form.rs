//! Regime classification and the closed-form minimizers of the potential.
//!
//! Everything here is evaluated at a given shear `z`. Callers asking about
//! the boundary shear pass `z = gamma`; the relaxation code passes the local
//! `u'` of each cell, so the regime is always decided with `z` in place of
//! `gamma`.
//!
//! In the above-critical regime with `mu != mu_c` the minimal energy is
//! `mu (z^2 + 4 - 2 sqrt(z^2 + 4))`, the same expression as for equal moduli:
//! at `alpha_2 = arctan(z/2)` the couple term `cos(a) z - 2 sin(a)` vanishes,
//! so `mu_c` drops out.

use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::model::MaterialParams;
use crate::{Error, Result};

/// Which row of the minimizer table applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeTag {
    /// `mu = mu_c`: single well at `alpha_2`.
    EqualModuli,
    /// `mu_c = 0`: wells at `0` and `arctan(4z / (4 - z^2))`.
    ZeroCouple,
    /// `mu_c > mu_c_crit`, `mu != mu_c`: single well at `alpha_2`.
    AboveCritical,
    /// `mu > mu_c`, `0 < mu_c <= mu_c_crit`: two wells `alpha_1^-`, `alpha_1^+`.
    DoubleWell,
}

impl RegimeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeTag::EqualModuli => "EQUAL_MODULI",
            RegimeTag::ZeroCouple => "ZERO_COUPLE",
            RegimeTag::AboveCritical => "ABOVE_CRITICAL",
            RegimeTag::DoubleWell => "DOUBLE_WELL",
        }
    }

    /// Regimes with two wells.
    pub fn is_double_well(&self) -> bool {
        matches!(self, RegimeTag::ZeroCouple | RegimeTag::DoubleWell)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub tag: RegimeTag,
    pub mu_c_crit: f64,
}

/// `mu_c_crit = mu (1 - 2 / sqrt(z^2 + 4))`.
pub fn critical_couple_modulus(mu: f64, z: f64) -> f64 {
    mu * (1.0 - 2.0 / (z * z + 4.0).sqrt())
}

impl Regime {
    /// Regime at shear `z`. Ties follow the table order: equal moduli
    /// first, then `mu_c = 0`, then the comparison against the critical value.
    pub fn at(z: f64, mu: f64, mu_c: f64) -> Self {
        let mu_c_crit = critical_couple_modulus(mu, z);
        #[allow(clippy::float_cmp)]
        let tag = if mu == mu_c {
            RegimeTag::EqualModuli
        } else if mu_c == 0.0 {
            RegimeTag::ZeroCouple
        } else if mu_c > mu_c_crit {
            RegimeTag::AboveCritical
        } else {
            RegimeTag::DoubleWell
        };
        Regime { tag, mu_c_crit }
    }
}

/// Regime at the boundary shear `gamma`.
pub fn classify(p: &MaterialParams) -> Regime {
    Regime::at(p.gamma(), p.mu(), p.mu_c())
}

/// `f = sqrt((z^2 + 4)(mu - mu_c)^2 - 4 mu^2)`.
pub fn f_discriminant(z: f64, p: &MaterialParams) -> Result<f64> {
    discriminant_raw(z, p.mu(), p.mu_c())
}

fn discriminant_raw(z: f64, mu: f64, mu_c: f64) -> Result<f64> {
    let d = mu - mu_c;
    let radicand = (z * z + 4.0) * d * d - 4.0 * mu * mu;
    if radicand < 0.0 {
        return Err(Error::NegativeDiscriminant { radicand });
    }
    Ok(radicand.sqrt())
}

/// Minimizers of `alpha -> W(z, alpha)` and the associated minimal energies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellSet {
    angles: [f64; 2],
    len: usize,
    /// Minimal value of `mu/2 z^2 + W(z, .)`.
    pub minimal_energy: f64,
    /// Minimal value of `W(z, .)`.
    pub minimal_w: f64,
    pub regime: Regime,
}

impl WellSet {
    /// Well angles in increasing order (one or two of them).
    pub fn angles(&self) -> &[f64] {
        &self.angles[..self.len]
    }

    /// Largest well angle, where the linear tail of the envelope starts.
    pub fn last(&self) -> f64 {
        self.angles[self.len - 1]
    }

    /// Distance of `alpha` to the nearest well.
    pub fn distance(&self, alpha: f64) -> f64 {
        self.angles().iter().map(|w| (alpha - w).abs()).fold(f64::INFINITY, f64::min)
    }
}

/// Wells and minimal energies at shear `z > 0`.
pub fn well_set(z: f64, p: &MaterialParams) -> Result<WellSet> {
    well_set_raw(z, p.mu(), p.mu_c())
}

pub(crate) fn well_set_raw(z: f64, mu: f64, mu_c: f64) -> Result<WellSet> {
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::InvalidParameter("shear z must be positive"));
    }
    let regime = Regime::at(z, mu, mu_c);
    let half_shear = 0.5 * mu * z * z;
    let (angles, len, minimal_energy) = match regime.tag {
        RegimeTag::EqualModuli | RegimeTag::AboveCritical => {
            let alpha2 = (0.5 * z).atan();
            ([alpha2, alpha2], 1, single_well_energy(z, mu))
        }
        RegimeTag::ZeroCouple => {
            let alpha_plus = (4.0 * z).atan2(4.0 - z * z);
            ([0.0, alpha_plus], 2, half_shear)
        }
        RegimeTag::DoubleWell => {
            let f = discriminant_raw(z, mu, mu_c)?;
            let lower = (z * mu - f).atan2(2.0 * mu + 0.5 * z * f);
            let upper = (z * mu + f).atan2(2.0 * mu - 0.5 * z * f);
            ([lower, upper], 2, double_well_energy(z, mu, mu_c))
        }
    };
    Ok(WellSet { angles, len, minimal_energy, minimal_w: minimal_energy - half_shear, regime })
}

fn single_well_energy(z: f64, mu: f64) -> f64 {
    mu * condensed_g(z)
}

fn double_well_energy(z: f64, mu: f64, mu_c: f64) -> f64 {
    0.5 * (mu + mu_c) * z * z - 2.0 * mu_c * mu_c / (mu - mu_c)
}

/// `eta(alpha) = 4 sin^2(alpha/2) / sin(alpha)`.
pub fn eta(alpha: f64) -> Result<f64> {
    let s = alpha.sin();
    if !(alpha > 0.0 && alpha < 2.0 * PI) || s.abs() < 1e-15 {
        return Err(Error::Domain);
    }
    let half = (0.5 * alpha).sin();
    Ok(4.0 * half * half / s)
}

const ETA_BRACKET: (f64, f64) = (1e-12, PI - 1e-12);
const ETA_TOL: f64 = 1e-12;
const ETA_MAX_ITERS: usize = 200;

/// Inverse of [`eta`] on `(0, pi)` by bisection; `eta` increases there.
pub fn eta_inverse(g: f64) -> Result<f64> {
    if !(0.0..2.0 * PI).contains(&g) {
        return Err(Error::InvalidParameter("eta_inverse needs 0 <= g < 2pi"));
    }
    if g == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = ETA_BRACKET;
    for _ in 0..ETA_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= ETA_TOL {
            return Ok(mid);
        }
        if eta(mid)? < g {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence { iterations: ETA_MAX_ITERS })
}

/// Condensed energy density at `L_c = 0` for a constant shear `z`,
/// i.e. `mu/2 z^2 + min_alpha W(z, alpha)` written regime by regime.
pub fn e_opt(z: f64, p: &MaterialParams) -> f64 {
    let (mu, mu_c) = (p.mu(), p.mu_c());
    match Regime::at(z, mu, mu_c).tag {
        RegimeTag::EqualModuli | RegimeTag::AboveCritical => single_well_energy(z, mu),
        RegimeTag::ZeroCouple => 0.5 * mu * z * z,
        RegimeTag::DoubleWell => double_well_energy(z, mu, mu_c),
    }
}

/// `g(z) = z^2 + 4 - 2 sqrt(z^2 + 4)`.
pub fn condensed_g(z: f64) -> f64 {
    let r = z * z + 4.0;
    r - 2.0 * r.sqrt()
}

/// `g''(z) = (2 (z^2 + 4)^{3/2} - 8) / (z^2 + 4)^{3/2}`.
pub fn condensed_g_second(z: f64) -> f64 {
    let r32 = (z * z + 4.0).powf(1.5);
    (2.0 * r32 - 8.0) / r32
}
