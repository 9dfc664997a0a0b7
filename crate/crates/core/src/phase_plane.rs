//! Phase-plane analysis of `φ'' = φ - φ log φ²`.
//!
//! Orbits satisfy `ξ² - A(φ) = E` with `ξ = φ'` and the well
//! `A(φ) = 2φ² - φ² log φ²`. The positive homoclinic loop surrounds the centre
//! `r* = e^{1/2}` where `A(r*) = e`. A single-lobe ring profile is the arc of
//! the level curve through `(r0, √A(r0)/2)` that climbs to the turning point
//! `r₊`; the length of that arc in `x` is the period function `T(r0)`, and the
//! ring closes when `T(r0)` equals the ring half-length.
//!
//! Every endpoint singularity `1/ξ` at `r₊` is removed with `φ = r₊ - u²`,
//! which turns `dφ/ξ` into a bounded `2u du / ξ(u)`.

use std::f64::consts::E;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};

/// Centre of the homoclinic loop, `e^{1/2}`.
pub const R_STAR: f64 = 1.648_721_270_700_128_2;

/// Radius around `r*` inside which the 0/0 quotients are replaced by their
/// Taylor expansions.
pub const TAYLOR_GUARD: f64 = 1e-4;

const QUAD_TOL: Tolerance = Tolerance {
    abs: 1e-13,
    rel: 1e-13,
    max_intervals: 4000,
};

/// `A(φ) = 2φ² - φ² log φ²`.
pub fn well(phi: f64) -> f64 {
    let p2 = phi * phi;
    p2 * (2.0 - p2.ln())
}

/// `A'(φ) = 2φ(1 - log φ²)`.
pub fn well_prime(phi: f64) -> f64 {
    2.0 * phi * (1.0 - (phi * phi).ln())
}

/// `A''(φ) = -2 - 2 log φ²`.
pub fn well_second(phi: f64) -> f64 {
    -2.0 - 2.0 * (phi * phi).ln()
}

fn well_third(phi: f64) -> f64 {
    -4.0 / phi
}

fn well_fourth(phi: f64) -> f64 {
    4.0 / (phi * phi)
}

/// `log(φ²/e)`, exact through `r*`.
fn centre_log(phi: f64) -> f64 {
    2.0 * phi.ln() - 1.0
}

/// `v = φ²/e - 1`, the natural small parameter near `r*`.
fn centre_offset(phi: f64) -> f64 {
    centre_log(phi).exp_m1()
}

/// `A(φ) - A(r*)` without the cancellation of the direct difference.
///
/// With `φ² = e(1 + v)`: `A(φ) - e = e (v - (1 + v) log(1 + v))
/// = -e Σ_{k≥2} (-v)^k / (k(k-1))`.
pub fn well_excess(phi: f64) -> f64 {
    let w = centre_log(phi);
    let v = w.exp_m1();
    if v.abs() < 0.1 {
        let mut term = v * v; // v^k, starting at k = 2
        let mut sum = 0.0;
        for k in 2..40 {
            let kf = k as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * term / (kf * (kf - 1.0));
            term *= v;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        -E * sum
    } else {
        E * (v - w.exp() * w)
    }
}

/// `A'(φ) = -2φ log(φ²/e)`, exact at `r*`.
fn well_prime_centred(phi: f64) -> f64 {
    -2.0 * phi * centre_log(phi)
}

/// `Q(φ) = 2 (A(φ) - A(r*)) A''(φ) / A'(φ)²`, bounded on `(0, e)`.
///
/// Near `r*`, with `v = φ²/e - 1`, the quotient expands to
/// `Q = 1 + v/6 - v²/6 + O(v³)`; to first order in `δ = φ - r*` this is
/// `1 + δ / (3 r*)`.
pub fn curvature_quotient(phi: f64) -> f64 {
    let v = centre_offset(phi);
    if (phi - R_STAR).abs() < TAYLOR_GUARD {
        return 1.0 + v / 6.0 - v * v / 6.0;
    }
    let ap = well_prime_centred(phi);
    2.0 * well_excess(phi) * well_second(phi) / (ap * ap)
}

/// `2 (A(r0) - A(r*)) s0 / A'(r0)`; near `r*` this is
/// `e v s0 (1 + v/6) / (2 r0)`, which vanishes at the centre.
fn boundary_term(r0: f64, s0: f64) -> f64 {
    if (r0 - R_STAR).abs() < TAYLOR_GUARD {
        let v = centre_offset(r0);
        return E * v * s0 * (1.0 + v / 6.0) / (2.0 * r0);
    }
    2.0 * well_excess(r0) * s0 / well_prime_centred(r0)
}

/// First integral `ξ² - A(φ)`.
pub fn eval_energy(phi: f64, xi: f64) -> Result<f64> {
    if !(phi > 0.0) {
        return Err(Error::domain("phi", phi, "(0, inf)"));
    }
    Ok(xi * xi - well(phi))
}

fn check_r0(r0: f64) -> Result<()> {
    if r0 > 0.0 && r0 < E {
        Ok(())
    } else {
        Err(Error::domain("r0", r0, "(0, e)"))
    }
}

/// Root of `A(r₊) = (3/4) A(r0)` in `(r*, e)`, where `A` is strictly decreasing.
pub fn turning_point(r0: f64) -> Result<f64> {
    check_r0(r0)?;
    let target = 0.75 * well(r0);
    let (mut lo, mut hi) = (R_STAR, E);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if well(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // pick the endpoint with the smaller residual
    let r = if (well(lo) - target).abs() <= (well(hi) - target).abs() { lo } else { hi };
    Ok(r)
}

/// Level curve through `(r0, √A(r0)/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelCurve {
    pub r0: f64,
    /// Boundary slope `√A(r0)/2`.
    pub s0: f64,
    /// Invariant value `-(3/4) A(r0)`.
    pub e0: f64,
    pub r_plus: f64,
}

impl LevelCurve {
    pub fn new(r0: f64) -> Result<Self> {
        check_r0(r0)?;
        let a0 = well(r0);
        Ok(Self {
            r0,
            s0: 0.5 * a0.sqrt(),
            e0: -0.75 * a0,
            r_plus: turning_point(r0)?,
        })
    }

    /// `ξ²` at `φ = r₊ - s`, i.e. `A(r₊ - s) - A(r₊)`, Taylor-expanded for small `s`.
    fn xi_sq_below_turning(&self, s: f64) -> f64 {
        let p = self.r_plus;
        if s < 1e-4 {
            s * (-well_prime(p)
                + s * (0.5 * well_second(p) + s * (-well_third(p) / 6.0 + s * well_fourth(p) / 24.0)))
        } else {
            (well(p - s) - well(p)).max(0.0)
        }
    }

    /// `∫_{r0}^{r₊} g(φ, ξ) dφ` along the orbit.
    ///
    /// Near the turning point `φ = r₊ - u²` removes the `1/ξ` singularity.
    /// When `r0 < r*` the stretch `[r0, r*]` is integrated in `s = log φ`
    /// instead: `ξ ≥ s0 > 0` there, and a tiny `r0` would otherwise be lost
    /// to cancellation in `r₊ - u²`.
    fn orbit_integral(&self, g: impl Fn(f64, f64) -> f64) -> Result<f64> {
        let split = self.r0.max(R_STAR).min(self.r_plus);
        let upper = quadrature::integrate(
            |u| {
                let s = u * u;
                g(self.r_plus - s, self.xi_sq_below_turning(s).sqrt()) * 2.0 * u
            },
            0.0,
            (self.r_plus - split).sqrt(),
            QUAD_TOL,
        )?;
        if split <= self.r0 {
            return Ok(upper.value);
        }
        let lower = quadrature::integrate(
            |t| {
                let phi = t.exp().clamp(self.r0, split);
                g(phi, (well(phi) + self.e0).max(0.0).sqrt()) * phi
            },
            self.r0.ln(),
            split.ln(),
            QUAD_TOL,
        )?;
        Ok(upper.value + lower.value)
    }

    /// Period from the regularized identity
    /// `[E0 + A(r*)] T = ∫ (3 - Q(φ)) ξ dφ + 2 (A(r0) - A(r*)) s0 / A'(r0)`.
    pub fn period(&self) -> Result<f64> {
        let integral = self.orbit_integral(|phi, xi| (3.0 - curvature_quotient(phi)) * xi)?;
        Ok((integral + boundary_term(self.r0, self.s0)) / (self.e0 + E))
    }

    /// Period from the defining integral `∫_{r0}^{r₊} dφ / ξ`.
    /// Independent of the regularized identity; used as its cross-check.
    pub fn period_direct(&self) -> Result<f64> {
        self.orbit_integral(|_, xi| 1.0 / xi)
    }

    /// `T'(r0)` from
    /// `[E0 + A(r*)] T' = -A(r*)/(4 s0) - (3 A'(r0)/8) ∫ (1 - Q(φ)) dφ / ξ`.
    pub fn period_derivative(&self) -> Result<f64> {
        let integral = self.orbit_integral(|phi, xi| (1.0 - curvature_quotient(phi)) / xi)?;
        let rhs = -E / (4.0 * self.s0) - 0.375 * well_prime(self.r0) * integral;
        Ok(rhs / (self.e0 + E))
    }
}

pub fn period(r0: f64) -> Result<f64> {
    LevelCurve::new(r0)?.period()
}

pub fn period_direct(r0: f64) -> Result<f64> {
    LevelCurve::new(r0)?.period_direct()
}

pub fn period_derivative(r0: f64) -> Result<f64> {
    LevelCurve::new(r0)?.period_derivative()
}

/// Smallest `r0` tried when bracketing the matching root.
const MIN_R0: f64 = 1e-250;

/// Unique `r0 ∈ (0, e)` with `T(r0) = target`, by bisection in `log r0`.
pub fn solve_match(target: f64) -> Result<f64> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::domain("target half-length", target, "(0, inf)"));
    }
    // T decreases from +inf (r0 -> 0) to 0 (r0 -> e).
    let mut lo = 1.0_f64;
    while period(lo)? <= target {
        lo *= 1e-2;
        if lo < MIN_R0 {
            return Err(Error::NoBracket(format!(
                "T(r0) stays below {target} down to r0 = {MIN_R0:e}"
            )));
        }
    }
    let (mut t_lo, mut t_hi) = (lo.ln(), 1.0);
    let mut best = (f64::INFINITY, lo);
    for _ in 0..200 {
        let t_mid = 0.5 * (t_lo + t_hi);
        if t_mid <= t_lo || t_mid >= t_hi {
            break;
        }
        let r = t_mid.exp();
        if r >= E {
            t_hi = t_mid;
            continue;
        }
        let resid = period(r)? - target;
        if resid.abs() < best.0 {
            best = (resid.abs(), r);
        }
        if resid == 0.0 {
            break;
        }
        if resid > 0.0 {
            t_lo = t_mid;
        } else {
            t_hi = t_mid;
        }
    }
    Ok(best.1)
}

/// Tail shift `a > 0` with `e·e^{-a²/2} = r0`.
pub fn shift_from_r0(r0: f64) -> Result<f64> {
    check_r0(r0)?;
    Ok((2.0 * (1.0 - r0.ln())).sqrt())
}

/// Inverse of [`shift_from_r0`].
pub fn r0_from_shift(a: f64) -> f64 {
    E * (-0.5 * a * a).exp()
}

/// One row of a period scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodSample {
    pub r0: f64,
    pub period: f64,
    pub derivative: f64,
    pub r_plus: f64,
    pub e0: f64,
}

/// `points` equally spaced `r0` values on `[from, to]`.
pub fn period_scan(from: f64, to: f64, points: usize) -> Result<Vec<PeriodSample>> {
    if points < 2 {
        return Err(Error::Argument("period scan needs at least two points".into()));
    }
    if !(from < to) {
        return Err(Error::Argument(format!("empty scan range [{from}, {to}]")));
    }
    (0..points)
        .map(|k| {
            let r0 = from + (to - from) * k as f64 / (points - 1) as f64;
            let lc = LevelCurve::new(r0)?;
            Ok(PeriodSample {
                r0,
                period: lc.period()?,
                derivative: lc.period_derivative()?,
                r_plus: lc.r_plus,
                e0: lc.e0,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_landmarks() {
        assert!((well(R_STAR) - E).abs() < 1e-15);
        assert!(well(E).abs() < 1e-14);
        assert!(well_prime(R_STAR).abs() < 1e-15);
        assert!((R_STAR - 0.5f64.exp()).abs() < 1e-16);
        assert_eq!(well_excess(R_STAR), 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        let mut phi = 0.1;
        while phi < 2.6 {
            let fd1 = (well(phi + h) - well(phi - h)) / (2.0 * h);
            let fd2 = (well_prime(phi + h) - well_prime(phi - h)) / (2.0 * h);
            assert!((fd1 - well_prime(phi)).abs() <= 1e-8 * well_prime(phi).abs().max(1.0));
            assert!((fd2 - well_second(phi)).abs() <= 1e-8 * well_second(phi).abs().max(1.0));
            phi += 0.013;
        }
    }

    #[test]
    fn excess_agrees_with_direct_difference_away_from_centre() {
        for phi in [0.3, 1.0, 1.5, 1.6, 1.7, 2.0, 2.5] {
            assert!((well_excess(phi) - (well(phi) - E)).abs() < 1e-14, "phi {phi}");
        }
    }

    #[test]
    fn quotient_is_continuous_across_guard() {
        for side in [-1.0, 1.0] {
            let inside = curvature_quotient(R_STAR + side * (1.0 - 1e-9) * TAYLOR_GUARD);
            let outside = curvature_quotient(R_STAR + side * (1.0 + 1e-9) * TAYLOR_GUARD);
            assert!((inside - outside).abs() < 1e-11, "{inside} vs {outside}");
        }
        assert_eq!(curvature_quotient(R_STAR), 1.0);
    }

    #[test]
    fn energy_domain_and_values() {
        assert!(eval_energy(0.0, 1.0).is_err());
        assert!(eval_energy(-1.0, 1.0).is_err());
        assert!(eval_energy(E, 0.0).unwrap().abs() < 1e-14);
        for r0 in [0.2, 1.0, 2.5] {
            let s0 = 0.5 * well(r0).sqrt();
            let e = eval_energy(r0, s0).unwrap();
            assert!((e + 0.75 * well(r0)).abs() < 1e-14);
        }
    }

    #[test]
    fn gausson_orbit_has_zero_energy() {
        let a = 1.3;
        for k in 0..50 {
            let x = k as f64 * 0.1;
            let phi = E * (-(x + a) * (x + a) / 2.0).exp();
            let xi = -(x + a) * phi;
            assert!(eval_energy(phi, xi).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn turning_point_residual_and_location() {
        for k in 1..60 {
            let r0 = 0.045 * k as f64;
            let rp = turning_point(r0).unwrap();
            assert!(rp > R_STAR && rp < E);
            assert!((well(rp) - 0.75 * well(r0)).abs() < 1e-12);
        }
        assert!(turning_point(0.0).is_err());
        assert!(turning_point(E).is_err());
    }

    #[test]
    fn turning_point_limits() {
        let near_e = E - 1e-9;
        assert!((turning_point(near_e).unwrap() - near_e).abs() < 1e-8);
        assert!((turning_point(1e-8).unwrap() - E).abs() < 1e-10);
    }

    #[test]
    fn turning_point_at_centre_matches_dense_scan() {
        let rp = turning_point(R_STAR).unwrap();
        let target = 0.75 * E;
        let n = 1_000_000;
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=n {
            let r = R_STAR + (E - R_STAR) * k as f64 / n as f64;
            let d = (well(r) - target).abs();
            if d < best.0 {
                best = (d, r);
            }
        }
        assert!((rp - best.1).abs() < 2.0 * (E - R_STAR) / n as f64);
    }

    #[test]
    fn shift_round_trip() {
        assert!((shift_from_r0(E * (-0.5f64).exp()).unwrap() - 1.0).abs() < 1e-15);
        for a in [0.3, 1.0, 2.5] {
            assert!((shift_from_r0(r0_from_shift(a)).unwrap() - a).abs() < 1e-12);
        }
        assert!(shift_from_r0(E).is_err());
        assert!(shift_from_r0(3.0).is_err());
        let a_small = shift_from_r0(E * (1.0 - 1e-12)).unwrap();
        assert!(a_small > 0.0 && a_small < 2e-6);
    }

    #[test]
    fn period_paths_agree() {
        for k in 1..40 {
            let r0 = 0.068 * k as f64;
            let lc = LevelCurve::new(r0).unwrap();
            let reg = lc.period().unwrap();
            let direct = lc.period_direct().unwrap();
            assert!((reg - direct).abs() < 1e-8, "r0 {r0}: {reg} vs {direct}");
        }
        // straddling the guard
        for r0 in [R_STAR, R_STAR + 5e-5, R_STAR - 5e-5, R_STAR + 2e-4] {
            let lc = LevelCurve::new(r0).unwrap();
            assert!((lc.period().unwrap() - lc.period_direct().unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn small_r0_paths_agree_and_grow() {
        let mut last = 0.0;
        for k in 1..=10 {
            let r0 = 10f64.powi(-k);
            let lc = LevelCurve::new(r0).unwrap();
            let t = lc.period().unwrap();
            assert!((t - lc.period_direct().unwrap()).abs() < 1e-8, "r0 {r0}");
            assert!(t > last);
            last = t;
        }
    }

    #[test]
    fn solve_match_round_trip() {
        let target = period(1.0).unwrap();
        let r0 = solve_match(target).unwrap();
        assert!((r0 - 1.0).abs() < 1e-8);
        assert!(solve_match(0.0).is_err());
        assert!(solve_match(f64::NAN).is_err());
    }

    #[test]
    fn scan_shape() {
        let rows = period_scan(0.5, 2.5, 5).unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows.windows(2).all(|w| w[0].period > w[1].period));
        assert!(period_scan(1.0, 0.5, 5).is_err());
    }
}
