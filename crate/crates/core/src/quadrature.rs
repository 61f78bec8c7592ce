//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued integrands on
//! finite intervals and on half-lines `(-∞, b]`.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

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

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Stopping rule for adaptive refinement: stop once the summed error
/// estimate is below `max(abs, rel·|I|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    /// Refinement budget; exceeding it is reported as a failure.
    pub max_intervals: usize,
}

impl Tolerance {
    pub const DEFAULT: Tolerance = Tolerance {
        abs: 1e-10,
        rel: 1e-8,
        max_intervals: 2000,
    };

    pub fn target(&self, magnitude: f64) -> f64 {
        self.abs.max(self.rel * magnitude)
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: Vec<f64>,
    pub error: f64,
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// Single 15-point Kronrod rule on `[a, b]`; returns the per-component
/// integral and the max-norm of the rescaled error estimates.
pub(crate) fn gk15<F>(f: &mut F, a: f64, b: f64, dim: usize, out: &mut [f64]) -> f64
where
    F: FnMut(f64, &mut [f64]),
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut fv = vec![0.0; dim * 15];
    f(center, &mut fv[0..dim]);
    for j in 0..7 {
        let dx = half * XGK[j];
        let (lo, hi) = fv[dim..].split_at_mut(dim * 7);
        f(center - dx, &mut lo[j * dim..(j + 1) * dim]);
        f(center + dx, &mut hi[j * dim..(j + 1) * dim]);
    }
    let minus = |j: usize, c: usize| fv[dim + j * dim + c];
    let plus = |j: usize, c: usize| fv[dim + 7 * dim + j * dim + c];

    let mut worst = 0.0f64;
    for c in 0..dim {
        let fc = fv[c];
        let mut res_k = fc * WGK[7];
        let mut res_g = fc * WG[3];
        let mut res_abs = fc.abs() * WGK[7];
        for j in 0..7 {
            let (m, p) = (minus(j, c), plus(j, c));
            res_k += WGK[j] * (m + p);
            res_abs += WGK[j] * (m.abs() + p.abs());
            if j % 2 == 1 {
                res_g += WG[j / 2] * (m + p);
            }
        }
        let mean = res_k * 0.5;
        let mut res_asc = WGK[7] * (fc - mean).abs();
        for (j, w) in WGK.iter().enumerate().take(7) {
            res_asc += w * ((minus(j, c) - mean).abs() + (plus(j, c) - mean).abs());
        }
        out[c] = res_k * half;
        let err = rescale_error((res_k - res_g) * half, res_abs * half.abs(), res_asc * half.abs());
        worst = worst.max(err);
    }
    worst
}

struct Piece {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Integrates a vector-valued `f` over `[a, b]` by bisecting the interval
/// with the largest error estimate until the tolerance is met.
pub fn integrate_vec<F>(mut f: F, a: f64, b: f64, dim: usize, tol: Tolerance) -> Result<Estimate>
where
    F: FnMut(f64, &mut [f64]),
{
    if a == b {
        return Ok(Estimate { value: vec![0.0; dim], error: 0.0 });
    }
    let mut first = vec![0.0; dim];
    let err = gk15(&mut f, a, b, dim, &mut first);
    let mut pieces = vec![Piece { a, b, value: first, error: err }];
    loop {
        let mut total = vec![0.0; dim];
        let mut total_err = 0.0;
        let mut worst = 0;
        for (i, p) in pieces.iter().enumerate() {
            for (t, v) in total.iter_mut().zip(&p.value) {
                *t += v;
            }
            total_err += p.error;
            if p.error > pieces[worst].error {
                worst = i;
            }
        }
        if !total.iter().all(|v| v.is_finite()) || !total_err.is_finite() {
            return Err(Error::Quadrature { value: f64::NAN, residual: f64::INFINITY });
        }
        if total_err <= tol.target(max_abs(&total)) {
            return Ok(Estimate { value: total, error: total_err });
        }
        let Piece { a: pa, b: pb, .. } = pieces[worst];
        let mid = 0.5 * (pa + pb);
        if pieces.len() >= tol.max_intervals || mid <= pa.min(pb) || mid >= pa.max(pb) {
            return Err(Error::Quadrature { value: total.first().copied().unwrap_or(0.0), residual: total_err });
        }
        let mut left = vec![0.0; dim];
        let mut right = vec![0.0; dim];
        let el = gk15(&mut f, pa, mid, dim, &mut left);
        let er = gk15(&mut f, mid, pb, dim, &mut right);
        pieces[worst] = Piece { a: pa, b: mid, value: left, error: el };
        pieces.push(Piece { a: mid, b: pb, value: right, error: er });
    }
}

/// Integrates `f` over `(-∞, b]` through the substitution `θ = b - (1-t)/t`.
pub fn integrate_vec_to_neg_infinity<F>(mut f: F, b: f64, dim: usize, tol: Tolerance) -> Result<Estimate>
where
    F: FnMut(f64, &mut [f64]),
{
    integrate_vec(
        |t, out: &mut [f64]| {
            let theta = b - (1.0 - t) / t;
            f(theta, out);
            let jac = 1.0 / (t * t);
            for v in out.iter_mut() {
                *v *= jac;
            }
        },
        0.0,
        1.0,
        dim,
        tol,
    )
}

pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    integrate_vec(|x, out: &mut [f64]| out[0] = f(x), a, b, 1, tol).map(|e| e.value[0])
}

pub fn integrate_to_neg_infinity<F>(mut f: F, b: f64, tol: Tolerance) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    integrate_vec_to_neg_infinity(|x, out: &mut [f64]| out[0] = f(x), b, 1, tol).map(|e| e.value[0])
}

/// Integrates `f` over `[b, +∞)`.
pub fn integrate_to_infinity<F>(mut f: F, a: f64, tol: Tolerance) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    integrate_to_neg_infinity(|x| f(-x), -a, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x| 3.0 * x * x - 2.0 * x + 1.0, -1.0, 2.0, Tolerance::DEFAULT).unwrap();
        // x^3 - x^2 + x on [-1, 2] = (8 - 4 + 2) - (-1 - 1 - 1)
        assert!((v - 9.0).abs() < 1e-13);
    }

    #[test]
    fn exponential_half_line() {
        let v = integrate_to_neg_infinity(|t| 3.0 * (t).exp(), 0.0, Tolerance::DEFAULT).unwrap();
        assert!((v - 3.0).abs() < 1e-10);
        let w = integrate_to_infinity(|z| z.powf(-2.5), 0.1, Tolerance::DEFAULT).unwrap();
        assert!((w - 0.1f64.powf(-1.5) / 1.5).abs() < 1e-8 * w);
    }

    #[test]
    fn vector_integrand() {
        let e = integrate_vec(
            |x, out: &mut [f64]| {
                out[0] = x.sin();
                out[1] = x.cos();
            },
            0.0,
            core::f64::consts::PI,
            2,
            Tolerance::DEFAULT,
        )
        .unwrap();
        assert!((e.value[0] - 2.0).abs() < 1e-12);
        assert!(e.value[1].abs() < 1e-12);
    }

    #[test]
    fn nonintegrable_singularity_fails_loudly() {
        let tol = Tolerance { max_intervals: 200, ..Tolerance::DEFAULT };
        let r = integrate(|x| 1.0 / x, 0.0, 1.0, tol);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
