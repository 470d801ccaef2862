//! Convex envelope in `alpha` of the local density, a sampled hull used as
//! an oracle, and the relaxed functional.
//!
//! For fixed `z > 0` the envelope `W**(z, .)` on `[0, 2pi]` is assembled from
//! three kinds of pieces. Where `W` is convex it is kept as is. Between two
//! wells it is the constant minimal value. Past the last well it follows `W`
//! up to the tangent point `t`, the point where the tangent of `W` passes
//! through `(2pi, W(z, 2pi))`, and then runs along that tangent. The value at
//! `2pi` is `W(z, 0) = mu_c/2 z^2`, taken symbolically.
//!
//! The tangent point is what makes the tail the lower hull: joining the well
//! itself to `(2pi, W(z, 0))` gives a chord that lies above `W` just right of
//! the well.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::closed_form::{well_set_raw, RegimeTag, WellSet};
use crate::model::{potential_jet, w_raw, GridField, MaterialParams};
use crate::numeric::bisect;
use crate::{model, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchTag {
    ConvexRegion,
    FlatBridge,
    LinearTail,
}

impl BranchTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            BranchTag::ConvexRegion => "CONVEX_REGION",
            BranchTag::FlatBridge => "FLAT_BRIDGE",
            BranchTag::LinearTail => "LINEAR_TAIL",
        }
    }
}

/// One piece of `alpha -> Q**(z, alpha)` on `[alpha_lo, alpha_hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeBranch {
    pub tag: BranchTag,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    z: f64,
    mu: f64,
    mu_c: f64,
    // Bridge: the level. Tail: value at `alpha_lo`.
    level: f64,
    slope: f64,
}

impl EnvelopeBranch {
    /// Value of `Q**` on this branch (extended beyond its interval by the
    /// same formula).
    pub fn value_at(&self, alpha: f64) -> f64 {
        0.5 * self.mu * self.z * self.z + self.w_value_at(alpha)
    }

    fn w_value_at(&self, alpha: f64) -> f64 {
        match self.tag {
            BranchTag::ConvexRegion => w_raw(self.z, alpha, self.mu, self.mu_c),
            BranchTag::FlatBridge => self.level,
            BranchTag::LinearTail => self.level + self.slope * (alpha - self.alpha_lo),
        }
    }

    pub fn contains(&self, alpha: f64) -> bool {
        alpha >= self.alpha_lo && (alpha < self.alpha_hi || (self.alpha_hi == TAU && alpha <= TAU))
    }
}

/// `W**(z, .)` for one shear value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    z: f64,
    mu: f64,
    mu_c: f64,
    wells: WellSet,
    tangent: f64,
    branches: [EnvelopeBranch; 4],
    len: usize,
}

const TANGENT_SCAN: usize = 128;
const TANGENT_TOL: f64 = 1e-14;

impl Envelope {
    /// Envelope at shear `z > 0`.
    pub fn new(z: f64, p: &MaterialParams) -> Result<Self> {
        Self::build(z, p.mu(), p.mu_c())
    }

    pub(crate) fn build(z: f64, mu: f64, mu_c: f64) -> Result<Self> {
        let wells = well_set_raw(z, mu, mu_c)?;
        let last = wells.last();
        let tangent = if mu_c == 0.0 { last } else { tangent_point(z, mu, mu_c, last)? };
        let w_end = 0.5 * mu_c * z * z;
        let w_tan = w_raw(z, tangent, mu, mu_c);
        let piece =
            |tag, lo, hi, level, slope| EnvelopeBranch { tag, alpha_lo: lo, alpha_hi: hi, z, mu, mu_c, level, slope };
        let mut branches = [piece(BranchTag::ConvexRegion, 0.0, 0.0, 0.0, 0.0); 4];
        let mut len = 0;
        let mut push = |b: EnvelopeBranch| {
            if b.alpha_hi > b.alpha_lo {
                branches[len] = b;
                len += 1;
            }
        };
        let first = wells.angles()[0];
        if wells.regime.tag.is_double_well() {
            push(piece(BranchTag::ConvexRegion, 0.0, first, 0.0, 0.0));
            push(piece(BranchTag::FlatBridge, first, last, wells.minimal_w, 0.0));
        } else {
            push(piece(BranchTag::ConvexRegion, 0.0, last, 0.0, 0.0));
        }
        push(piece(BranchTag::ConvexRegion, last, tangent, 0.0, 0.0));
        let slope = (w_end - w_tan) / (TAU - tangent);
        push(piece(BranchTag::LinearTail, tangent, TAU, w_tan, slope));
        // Adjacent convex pieces (single well) are merged into one.
        if len >= 2 && branches[0].tag == BranchTag::ConvexRegion && branches[1].tag == BranchTag::ConvexRegion {
            branches[0].alpha_hi = branches[1].alpha_hi;
            branches.copy_within(2..len, 1);
            len -= 1;
        }
        Ok(Self { z, mu, mu_c, wells, tangent, branches, len })
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn wells(&self) -> &WellSet {
        &self.wells
    }

    pub fn regime(&self) -> RegimeTag {
        self.wells.regime.tag
    }

    /// Start of the linear tail.
    pub fn tangent_point(&self) -> f64 {
        self.tangent
    }

    /// Branches in increasing order; they partition `[0, 2pi]`.
    pub fn branches(&self) -> &[EnvelopeBranch] {
        &self.branches[..self.len]
    }

    pub fn branch(&self, alpha: f64) -> &EnvelopeBranch {
        self.branches().iter().find(|b| b.contains(alpha)).unwrap_or(&self.branches[self.len - 1])
    }

    /// `Q**(z, alpha)`.
    pub fn value(&self, alpha: f64) -> f64 {
        self.branch(alpha).value_at(alpha)
    }

    /// `W**(z, alpha)`.
    pub fn w_value(&self, alpha: f64) -> f64 {
        self.branch(alpha).w_value_at(alpha)
    }

    /// `(Q**, dQ**/dz, dQ**/dalpha)`.
    ///
    /// On the tail the tangent point moves with `z`, but its first-order
    /// effect cancels because of the tangency condition.
    pub fn gradient(&self, alpha: f64) -> (f64, f64, f64) {
        let (z, mu, mu_c) = (self.z, self.mu, self.mu_c);
        let b = self.branch(alpha);
        let value = b.value_at(alpha);
        match b.tag {
            BranchTag::ConvexRegion => {
                let j = potential_jet(z, alpha, mu, mu_c);
                (value, mu * z + j.dz, j.da)
            }
            // minimal energy is (mu + mu_c)/2 z^2 minus a constant
            BranchTag::FlatBridge => (value, (mu + mu_c) * z, 0.0),
            BranchTag::LinearTail => {
                let t = self.tangent;
                let j = potential_jet(z, t, mu, mu_c);
                let s = (alpha - t) / (TAU - t);
                (value, mu * z + j.dz + (mu_c * z - j.dz) * s, b.slope)
            }
        }
    }
}

/// `Q**` for any shear. `W(-z, a) = W(z, 2pi - a)`, so negative shears are
/// reflected; at `z = 0` the potential vanishes at both ends of `[0, 2pi]`
/// and its hull is zero.
pub(crate) fn relaxed_value(z: f64, alpha: f64, mu: f64, mu_c: f64) -> Result<f64> {
    if z > 0.0 {
        Ok(Envelope::build(z, mu, mu_c)?.value(alpha))
    } else if z < 0.0 {
        Ok(Envelope::build(-z, mu, mu_c)?.value(TAU - alpha))
    } else {
        Ok(0.0)
    }
}

/// Value, gradient and Hessian of `Q**` at `(z, alpha)` as
/// `[q, q_z, q_a, q_zz, q_za, q_aa]`, for `z != 0`. On the tail `q_zz` is a
/// central difference of the analytic `q_z`.
pub(crate) fn local_jet(z: f64, alpha: f64, mu: f64, mu_c: f64) -> Result<[f64; 6]> {
    if z < 0.0 {
        let [v, dz, da, dzz, dza, daa] = local_jet(-z, TAU - alpha, mu, mu_c)?;
        return Ok([v, -dz, -da, dzz, dza, daa]);
    }
    let env = Envelope::build(z, mu, mu_c)?;
    let (value, dz, da) = env.gradient(alpha);
    let b = env.branch(alpha);
    Ok(match b.tag {
        BranchTag::ConvexRegion => {
            let j = potential_jet(z, alpha, mu, mu_c);
            [value, dz, da, mu + j.dzz, j.dza, j.daa]
        }
        BranchTag::FlatBridge => [value, dz, da, mu + mu_c, 0.0, 0.0],
        BranchTag::LinearTail => {
            let t = env.tangent;
            let dza = (mu_c * z - potential_jet(z, t, mu, mu_c).dz) / (TAU - t);
            let delta = 1e-5 * z.max(1.0);
            let dz_at = |zz: f64| Envelope::build(zz, mu, mu_c).map(|e| e.gradient(alpha).1);
            let dzz = if z > delta {
                (dz_at(z + delta)? - dz_at(z - delta)?) / (2.0 * delta)
            } else {
                (dz_at(z + delta)? - dz) / delta
            };
            [value, dz, da, dzz, dza, 0.0]
        }
    })
}

/// Solves `W_a(t) (2pi - t) = W(2pi) - W(t)` for `t` right of the well `from`.
/// The residual increases while `W` is convex, so the first sign change
/// found by a coarse scan is bracketed and bisected.
fn tangent_point(z: f64, mu: f64, mu_c: f64, from: f64) -> Result<f64> {
    let w_end = 0.5 * mu_c * z * z;
    let residual = |t: f64| {
        let j = potential_jet(z, t, mu, mu_c);
        j.da * (TAU - t) - (w_end - j.value)
    };
    let step = (TAU - from) / TANGENT_SCAN as f64;
    let mut lo = from;
    for k in 1..TANGENT_SCAN {
        let hi = from + k as f64 * step;
        if residual(hi) >= 0.0 {
            return bisect(residual, lo, hi, TANGENT_TOL, 200);
        }
        lo = hi;
    }
    Err(Error::NoConvergence { iterations: TANGENT_SCAN })
}

/// `Q**(z, alpha) = mu/2 z^2 + W**(z, alpha)` for `z > 0`, `alpha` in `[0, 2pi]`.
pub fn q_envelope(z: f64, alpha: f64, p: &MaterialParams) -> Result<f64> {
    if !(0.0..=TAU).contains(&alpha) {
        return Err(Error::InvalidParameter("alpha must lie in [0, 2pi]"));
    }
    Ok(Envelope::new(z, p)?.value(alpha))
}

/// `W(z, .)` sampled on a uniform grid of `[0, 2pi]` together with its
/// lower convex hull evaluated on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledEnvelope {
    pub alpha: Vec<f64>,
    pub w: Vec<f64>,
    pub hull: Vec<f64>,
}

/// Lower convex hull of `alpha -> W(z, alpha)` from `n_samples >= 16` grid
/// points, both ends included (the value at `2pi` is `W(z, 0)`).
pub fn envelope_bruteforce(z: f64, p: &MaterialParams, n_samples: usize) -> Result<SampledEnvelope> {
    if n_samples < 16 {
        return Err(Error::InvalidParameter("the hull needs at least 16 samples"));
    }
    let last = n_samples - 1;
    let alpha: Vec<f64> = (0..n_samples).map(|i| TAU * i as f64 / last as f64).collect();
    let mut w: Vec<f64> = alpha.iter().map(|&a| model::potential_w(z, a, p)).collect();
    w[last] = w[0];
    let hull = lower_hull_on_grid(&alpha, &w);
    Ok(SampledEnvelope { alpha, w, hull })
}

/// Monotone chain lower hull of the points `(x_i, y_i)` (increasing `x`),
/// interpolated back onto the `x_i`.
pub(crate) fn lower_hull_on_grid(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        while idx.len() >= 2 {
            let (a, b) = (idx[idx.len() - 2], idx[idx.len() - 1]);
            let cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a]);
            if cross <= 0.0 {
                idx.pop();
            } else {
                break;
            }
        }
        idx.push(i);
    }
    let mut out = Vec::with_capacity(x.len());
    for seg in idx.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        for i in a..b {
            let s = (x[i] - x[a]) / (x[b] - x[a]);
            out.push(y[a] + s * (y[b] - y[a]));
        }
    }
    out.push(y[x.len() - 1]);
    out
}

/// Discrete `E_0` (or `E_0^theta` when `constrained`) with the cell
/// quadrature of [`model::energy_eps`].
pub fn energy_relaxed(f: &GridField, p: &MaterialParams, constrained: bool) -> Result<f64> {
    if constrained {
        model::check_volume_constraint(f, p.theta())?;
    }
    if f.n() < 2 {
        return Err(Error::InvalidField("energy needs at least two cells"));
    }
    let mut sum = 0.0;
    for (z, m, _) in f.cells() {
        sum += relaxed_value(z, m, p.mu(), p.mu_c())?;
    }
    Ok(sum * f.h())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::q;

    fn params(mu: f64, mu_c: f64, gamma: f64) -> MaterialParams {
        MaterialParams::new(mu, mu_c, gamma, 0.3, 0.0).unwrap()
    }

    #[test]
    fn zero_couple_is_flat() {
        let p = params(2.0, 0.0, 0.6);
        for z in [0.2, 0.6, 1.3] {
            for a in [0.0, 0.1, 1.0, 3.0, 5.0, TAU] {
                assert!((q_envelope(z, a, &p).unwrap() - z * z).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn double_well_branches() {
        let p = params(1.0, 0.02, 0.6);
        let env = Envelope::new(0.6, &p).unwrap();
        let tags: Vec<BranchTag> = env.branches().iter().map(|b| b.tag).collect();
        assert_eq!(
            tags,
            [BranchTag::ConvexRegion, BranchTag::FlatBridge, BranchTag::ConvexRegion, BranchTag::LinearTail]
        );
        assert!((env.value(0.3) - 0.182_783_7).abs() < 1e-6);
        assert_eq!(env.value(0.01), q(0.6, 0.01, &p));
        assert_eq!(env.branch(0.3).tag, BranchTag::FlatBridge);
    }

    #[test]
    fn branch_continuity() {
        for &(mu, mu_c) in &[(1.0, 0.02), (1.0, 0.1), (1.0, 1.0), (1.0, 3.0), (2.0, 0.0)] {
            for z in [0.2, 0.6, 1.0, 1.5] {
                let env = Envelope::build(z, mu, mu_c).unwrap();
                for pair in env.branches().windows(2) {
                    let x = pair[0].alpha_hi;
                    assert_eq!(x, pair[1].alpha_lo);
                    assert!((pair[0].value_at(x) - pair[1].value_at(x)).abs() < 1e-10);
                }
                let first = env.branches()[0];
                let last = env.branches()[env.branches().len() - 1];
                assert_eq!(first.alpha_lo, 0.0);
                assert_eq!(last.alpha_hi, TAU);
                assert!((env.w_value(TAU) - 0.5 * mu_c * z * z).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matches_sampled_hull() {
        let n = 4096;
        for &(mu, mu_c) in &[(1.0, 0.004), (1.0, 0.3), (1.0, 1.0), (1.0, 3.0), (1.0, 0.0)] {
            let p = params(mu, mu_c, 0.6);
            for z in [0.2, 0.6, 1.0] {
                let env = Envelope::new(z, &p).unwrap();
                let s = envelope_bruteforce(z, &p, n).unwrap();
                let dev = s.alpha.iter().zip(&s.hull).map(|(&a, &h)| (env.w_value(a) - h).abs()).fold(0.0, f64::max);
                assert!(dev < 5e-4, "({mu}, {mu_c}, {z}): {dev}");
                for (i, &a) in s.alpha.iter().enumerate() {
                    assert!(env.w_value(a) <= s.w[i] + 1e-12);
                }
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let h = 1e-6;
        for &(mu, mu_c) in &[(1.0, 0.02), (1.0, 0.3), (1.0, 1.0), (2.0, 0.0)] {
            for &(z, a) in &[(0.6, 0.05), (0.6, 0.3), (0.6, 0.8), (0.7, 4.0), (1.1, 6.0)] {
                let env = Envelope::build(z, mu, mu_c).unwrap();
                let (_, dz, da) = env.gradient(a);
                let fz = |z: f64| Envelope::build(z, mu, mu_c).unwrap().value(a);
                let fdz = (fz(z + h) - fz(z - h)) / (2.0 * h);
                let fda = (env.value(a + h) - env.value(a - h)) / (2.0 * h);
                assert!((dz - fdz).abs() < 1e-6, "dz {dz} vs {fdz} at ({mu},{mu_c},{z},{a})");
                assert!((da - fda).abs() < 1e-6, "da {da} vs {fda} at ({mu},{mu_c},{z},{a})");
            }
        }
    }

    #[test]
    fn nonpositive_shear_matches_sampled_hull() {
        let n = 4096;
        let alpha: Vec<f64> = (0..n).map(|i| TAU * i as f64 / (n - 1) as f64).collect();
        for &(mu, mu_c) in &[(1.0, 0.02), (1.0, 1.0), (2.0, 0.0)] {
            for z in [-0.6, -0.2, 0.0] {
                let mut w: Vec<f64> = alpha.iter().map(|&a| w_raw(z, a, mu, mu_c)).collect();
                w[n - 1] = w[0];
                let hull = lower_hull_on_grid(&alpha, &w);
                for (&a, h) in alpha.iter().zip(&hull) {
                    let v = relaxed_value(z, a, mu, mu_c).unwrap() - 0.5 * mu * z * z;
                    assert!((v - h).abs() < 5e-4, "({mu}, {mu_c}, {z}, {a}): {v} vs {h}");
                }
            }
        }
    }

    #[test]
    fn reflected_jet_matches_finite_differences() {
        let h = 1e-6;
        for &(mu, mu_c) in &[(1.0, 0.02), (1.0, 1.0), (2.0, 0.0)] {
            for &(z, a) in &[(-0.6, 0.3), (-0.6, 2.0), (-1.1, 5.9)] {
                let [v, dz, da, ..] = local_jet(z, a, mu, mu_c).unwrap();
                let f = |z: f64, a: f64| relaxed_value(z, a, mu, mu_c).unwrap();
                assert_eq!(v, f(z, a));
                let fdz = (f(z + h, a) - f(z - h, a)) / (2.0 * h);
                let fda = (f(z, a + h) - f(z, a - h)) / (2.0 * h);
                assert!((dz - fdz).abs() < 1e-6, "dz {dz} vs {fdz}");
                assert!((da - fda).abs() < 1e-6, "da {da} vs {fda}");
            }
        }
        assert!(local_jet(0.0, 1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn bruteforce_zero_couple_and_convexity() {
        let p = params(2.0, 0.0, 0.6);
        let s = envelope_bruteforce(0.6, &p, 512).unwrap();
        assert!(s.hull.iter().all(|h| h.abs() < 1e-15));
        let p = params(1.0, 0.02, 0.6);
        let s = envelope_bruteforce(0.6, &p, 2048).unwrap();
        for i in 1..s.hull.len() - 1 {
            assert!(s.hull[i + 1] - 2.0 * s.hull[i] + s.hull[i - 1] >= -1e-12);
            assert!(s.hull[i] <= s.w[i]);
        }
        let mid = s.alpha.iter().position(|&a| a > 0.3).unwrap();
        assert!((s.hull[mid] - 0.00278).abs() < 5e-5);
        assert!(envelope_bruteforce(0.6, &p, 8).is_err());
    }

    #[test]
    fn relaxed_energies() {
        let p = params(1.0, 0.02, 0.6);
        let f = GridField::construct_homogeneous(32, &p, 0.3).unwrap();
        assert!((energy_relaxed(&f, &p, true).unwrap() - 0.182_783_7).abs() < 1e-6);
        let f = GridField::construct_homogeneous(32, &p, 0.9).unwrap();
        assert!(matches!(energy_relaxed(&f, &p, true), Err(Error::ConstraintViolation { .. })));
        let p = params(2.0, 0.0, 0.6);
        let f = GridField::homogeneous(64, 0.6, |x| 3.0 + 2.0 * (TAU * x).sin()).unwrap();
        assert!((energy_relaxed(&f, &p, false).unwrap() - 0.36).abs() < 1e-14);
    }
}
