//! Classic fixed-step fourth-order Runge-Kutta on small fixed-size states.

/// One RK4 step of size `h` from `(t, y)`.
pub fn step<const N: usize>(f: &impl Fn(f64, &[f64; N]) -> [f64; N], t: f64, y: &[f64; N], h: f64) -> [f64; N] {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k1));
    let k3 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k2));
    let k4 = f(t + h, &axpy(y, h, &k3));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn axpy<const N: usize>(y: &[f64; N], a: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += a * k[i];
    }
    out
}

/// Locates the first sign change of `g` along the step from `(t, y0)` by
/// bisection on the step length. `g` is assumed non-negative at `y0` and
/// negative at the end of the full step `h`. Returns the step length just
/// past the crossing and the state there.
pub fn bisect_crossing<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    g: &impl Fn(f64, &[f64; N]) -> f64,
    t: f64,
    y0: &[f64; N],
    h: f64,
    tol: f64,
) -> (f64, [f64; N]) {
    let mut lo = 0.0;
    let mut hi = h;
    let mut y_hi = step(f, t, y0, h);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let y_mid = step(f, t, y0, mid);
        if g(t + mid, &y_mid) < 0.0 {
            hi = mid;
            y_hi = y_mid;
        } else {
            lo = mid;
        }
    }
    (hi, y_hi)
}
