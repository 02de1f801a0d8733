//! Fundamental harmonic of piecewise waveforms.
//!
//! A signal `a1·sin(ωt) + b1·cos(ωt)` maps to the phasor `a1 + j·b1`, which
//! puts `i_h = I_h·sin(ωt)` on the real axis.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::waveform::{PiecewiseVoltage, Segment};
use crate::Complex64;

/// Exact `(∫v·sin, ∫v·cos)` of `a + b·cos t` over one segment.
fn segment_moments(s: &Segment) -> (f64, f64) {
    let (t0, t1) = (s.start, s.end);
    let (a, b) = (s.offset, s.slope);
    let (s0, s1) = (t0.sin(), t1.sin());
    let int_sin = a * (t0.cos() - t1.cos()) + b * (s1 * s1 - s0 * s0) / 2.0;
    let int_cos = a * (s1 - s0) + b * ((t1 - t0) / 2.0 + ((2.0 * t1).sin() - (2.0 * t0).sin()) / 4.0);
    (int_sin, int_cos)
}

/// Fundamental phasor of `wave`, in volts, computed from the exact integrals of each segment.
pub fn fundamental_harmonic(wave: &PiecewiseVoltage) -> Complex64 {
    let (mut a1, mut b1) = (0.0, 0.0);
    for s in &wave.segments {
        let (is, ic) = segment_moments(s);
        a1 += is;
        b1 += ic;
    }
    Complex64::new(a1, b1) * (wave.voc / PI)
}

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1].
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

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let pair = f(c - x) + f(c + x);
        kron += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod integral of `f` over `[a, b]`. The nodes never
/// touch the endpoints, so jumps placed on interval ends are harmless.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let mut stack: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = gk15(&f, a, b);
    stack.push((a, b, v, e));
    let mut total = 0.0;
    let width = b - a;
    while let Some((lo, hi, v, e)) = stack.pop() {
        let local = tol * (hi - lo) / width;
        if e <= local.max(1e-15 * v.abs()) || hi - lo < 1e-12 * width {
            total += v;
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let (vl, el) = gk15(&f, lo, mid);
        let (vr, er) = gk15(&f, mid, hi);
        stack.push((lo, mid, vl, el));
        stack.push((mid, hi, vr, er));
    }
    total
}

/// Fundamental phasor from pointwise evaluation of the waveform, integrated
/// piece by piece between breakpoints. Serves as an independent check of
/// [`fundamental_harmonic`].
pub fn fundamental_by_quadrature(wave: &PiecewiseVoltage, tol: f64) -> Complex64 {
    let bp = wave.breakpoints();
    let (mut a1, mut b1) = (0.0, 0.0);
    for w in bp.windows(2) {
        a1 += integrate(|t| wave.eval(t) * t.sin(), w[0], w[1], tol);
        b1 += integrate(|t| wave.eval(t) * t.cos(), w[0], w[1], tol);
    }
    Complex64::new(a1, b1) / PI
}
