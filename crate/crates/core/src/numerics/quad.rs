//! Globally adaptive Gauss–Kronrod (7, 15) quadrature.

use crate::error::{Error, Result};

// 15-point Kronrod abscissae on [0, 1) half-interval; the odd-indexed ones are
// the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Settings for [`integrate_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    /// Relative tolerance on the total.
    pub rel_tol: f64,
    /// Maximum number of bisections applied to any one branch.
    pub max_depth: u32,
    /// Hard cap on the number of live subintervals.
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            rel_tol: super::Tolerances::default().quad_rel_tol,
            max_depth: 60,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
    depth: u32,
}

fn gk15(f: &mut impl FnMut(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// `∫_lo^hi f` to the default relative tolerance (`1e-12`).
pub fn integrate(f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    integrate_with(
        f,
        lo,
        hi,
        QuadConfig {
            rel_tol: tol,
            ..QuadConfig::default()
        },
    )
    .map(|(v, _)| v)
}

/// Returns `(value, error_estimate)`.
pub fn integrate_with(
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    cfg: QuadConfig,
) -> Result<(f64, f64)> {
    if !(lo <= hi) {
        return Err(Error::invalid("lo", format!("lo = {lo} must not exceed hi = {hi}")));
    }
    if lo == hi {
        return Ok((0.0, 0.0));
    }
    let (value, error) = gk15(&mut f, lo, hi);
    let mut segments = vec![Segment {
        lo,
        hi,
        value,
        error,
        depth: 0,
    }];
    loop {
        let total: f64 = segments.iter().map(|s| s.value).sum();
        let err: f64 = segments.iter().map(|s| s.error).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::QuadratureNoConvergence {
                tol: cfg.rel_tol,
                estimate: total,
                error: err,
            });
        }
        if err <= cfg.rel_tol * total.abs() || err == 0.0 {
            return Ok((total, err));
        }
        // Bisect the worst segment; ties resolve to the lowest index.
        let (worst, _) = segments
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, be), (i, s)| if s.error > be { (i, s.error) } else { (bi, be) });
        let seg = segments[worst];
        if seg.depth >= cfg.max_depth || segments.len() >= cfg.max_intervals {
            return Err(Error::QuadratureNoConvergence {
                tol: cfg.rel_tol,
                estimate: total,
                error: err,
            });
        }
        let mid = 0.5 * (seg.lo + seg.hi);
        let (v1, e1) = gk15(&mut f, seg.lo, mid);
        let (v2, e2) = gk15(&mut f, mid, seg.hi);
        segments[worst] = Segment {
            lo: seg.lo,
            hi: mid,
            value: v1,
            error: e1,
            depth: seg.depth + 1,
        };
        segments.push(Segment {
            lo: mid,
            hi: seg.hi,
            value: v2,
            error: e2,
            depth: seg.depth + 1,
        });
    }
}
