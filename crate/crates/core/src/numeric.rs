//! Small scalar numerics: adaptive Gauss-Kronrod quadrature, bisection and
//! golden-section search.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::{Error, Result};

// Kronrod nodes and weights as tabulated, to more digits than f64 holds
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5 and the centre.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One G7K15 panel: Kronrod estimate and `|K15 - G7|`.
fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = r * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * r, ((kronrod - gauss) * r).abs())
}

/// Globally adaptive G7K15 on `[a, b]`: the panel with the largest error
/// estimate is halved until the summed estimate drops below `tol`.
pub(crate) fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64, max_panels: usize) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut panels: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(64);
    panels.push((a, b, v, e));
    loop {
        let total_err: f64 = panels.iter().map(|p| p.3).sum();
        if total_err <= tol {
            return Ok(panels.iter().map(|p| p.2).sum());
        }
        if panels.len() >= max_panels {
            return Err(Error::NoConvergence { iterations: panels.len() });
        }
        let worst = panels.iter().enumerate().max_by(|x, y| x.1 .3.total_cmp(&y.1 .3)).map(|(i, _)| i).unwrap_or(0);
        let (lo, hi, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
}

/// Root of `f` in `[lo, hi]` given a sign change, to bracket width `tol`.
pub(crate) fn bisect(
    mut f: impl FnMut(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iters: usize,
) -> Result<f64> {
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let f_hi = f(hi);
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::InvalidParameter("bisection needs a sign change"));
    }
    for _ in 0..max_iters {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence { iterations: max_iters })
}

/// Minimizer of a unimodal `f` on `[a, b]` by golden-section search.
pub(crate) fn golden_min(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = 0.5 * (5.0.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    [(x, fx), (c, fc), (d, fd)].into_iter().fold((x, fx), |m, p| if p.1 < m.1 { p } else { m })
}

/// Minimum of `f` over `[a, b]`: a uniform scan of `samples` points followed
/// by golden-section refinement around the best sample.
pub(crate) fn scan_min(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, samples: usize) -> (f64, f64) {
    let h = (b - a) / samples as f64;
    let (mut best_x, mut best_f) = (a, f(a));
    for i in 1..=samples {
        let x = a + i as f64 * h;
        let v = f(x);
        if v < best_f {
            best_x = x;
            best_f = v;
        }
    }
    let lo = (best_x - h).max(a);
    let hi = (best_x + h).min(b);
    let (x, v) = golden_min(&mut f, lo, hi, 1e-13);
    if v < best_f {
        (x, v)
    } else {
        (best_x, best_f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn quadrature_polynomials_and_sqrt() {
        let v = integrate(|x| x * x * x - x, 0.0, 2.0, 1e-12, 100).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
        let v = integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1e-11, 500).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-10);
        let v = integrate(f64::sin, 0.0, PI, 1e-12, 100).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
        assert_eq!(integrate(f64::exp, 1.0, 1.0, 1e-12, 10).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_cap() {
        let r = integrate(|x: f64| 1.0 / x.abs().sqrt().max(1e-300), -1.0, 1.0, 1e-14, 8);
        assert!(matches!(r, Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn bisection_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r - 2.0f64.sqrt()).abs() < 1e-13);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-14, 200).is_err());
    }

    #[test]
    fn golden_and_scan() {
        let (x, v) = golden_min(|x| (x - 0.3) * (x - 0.3) + 1.0, 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((v - 1.0).abs() < 1e-12);
        let (x, _) = scan_min(|x: f64| (3.0 * x).cos(), 0.0, 2.0 * PI, 100);
        assert!(((x - PI / 3.0).abs() < 1e-6) || ((x - PI).abs() < 1e-6) || ((x - 5.0 * PI / 3.0).abs() < 1e-6));
    }
}
