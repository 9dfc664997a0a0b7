//! Independent reference computations used by the verification suite.
//!
//! Nothing here shares code with the production paths: the shooting oracle
//! integrates the profile equation with an adaptive Dormand–Prince 5(4) pair
//! instead of evaluating the period integral.

use serde::Serialize;

use crate::error::{Error, Result};

/// Butcher tableau of Dormand–Prince 5(4).
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

type State = [f64; 2];

/// One Dormand–Prince step; returns the fifth-order solution and the error estimate.
fn dp_step(f: &impl Fn(f64, State) -> State, x: f64, y: State, h: f64) -> (State, f64) {
    let mut k = [[0.0; 2]; 7];
    for s in 0..7 {
        let mut ys = y;
        for (j, kj) in k.iter().enumerate().take(s) {
            ys[0] += h * A[s][j] * kj[0];
            ys[1] += h * A[s][j] * kj[1];
        }
        k[s] = f(x + C[s] * h, ys);
    }
    let mut y5 = y;
    let mut err = [0.0; 2];
    for s in 0..7 {
        for c in 0..2 {
            y5[c] += h * B5[s] * k[s][c];
            err[c] += h * (B5[s] - B4[s]) * k[s][c];
        }
    }
    (y5, err[0].abs().max(err[1].abs()))
}

/// Result of integrating until the event component changes sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootingResult {
    /// Location of the event.
    pub x: f64,
    /// State at the event.
    pub phi: f64,
    pub slope: f64,
    pub steps: usize,
}

/// Integrates `y' = f(x, y)` from `(0, y0)` with local tolerance `tol` until
/// `y[1]` first crosses zero from above, locating the crossing by bisection
/// on the length of the last step.
pub fn shoot_to_slope_zero(
    f: impl Fn(f64, State) -> State,
    y0: State,
    tol: f64,
    x_max: f64,
) -> Result<ShootingResult> {
    if !(y0[1] > 0.0) {
        return Err(Error::Argument("shooting needs a positive initial slope".into()));
    }
    let (mut x, mut y) = (0.0, y0);
    let mut h = 1e-3;
    let mut steps = 0;
    while x < x_max {
        let (y1, err) = dp_step(&f, x, y, h);
        let scale = tol * (1.0 + y[0].abs().max(y1[0].abs()));
        if err > scale || !y1[0].is_finite() {
            h *= (0.9 * (scale / err).powf(0.2)).clamp(0.1, 0.5);
            if h < 1e-14 {
                return Err(Error::Numerical("shooting step size underflow".into()));
            }
            continue;
        }
        steps += 1;
        if y1[1] <= 0.0 {
            // bracket the crossing inside [0, h]
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if dp_step(&f, x, y, mid).0[1] > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * (1.0 + x) {
                    break;
                }
            }
            let (ye, _) = dp_step(&f, x, y, 0.5 * (lo + hi));
            return Ok(ShootingResult {
                x: x + 0.5 * (lo + hi),
                phi: ye[0],
                slope: ye[1],
                steps,
            });
        }
        x += h;
        y = y1;
        let grow = if err > 0.0 { 0.9 * (scale / err).powf(0.2) } else { 5.0 };
        h *= grow.clamp(0.2, 5.0);
    }
    Err(Error::Numerical(format!("no slope sign change before x = {x_max}")))
}

/// Distance in `x` from `(r0, √A(r0)/2)` to the turning point of the profile
/// equation `φ'' = φ - φ log φ²`: an independent evaluation of `T(r0)`.
pub fn shooting_period(r0: f64, tol: f64) -> Result<ShootingResult> {
    if !(r0 > 0.0 && r0 < std::f64::consts::E) {
        return Err(Error::domain("r0", r0, "(0, e)"));
    }
    let p2 = r0 * r0;
    let s0 = 0.5 * (p2 * (2.0 - p2.ln())).sqrt();
    shoot_to_slope_zero(|_, [p, q]| [q, p - p * (p * p).ln()], [r0, s0], tol, 1e3)
}
