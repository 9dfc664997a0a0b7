//! Positive single-lobe standing waves `Θ_c = (φ_c, ψ_c)`.
//!
//! The ring part is `φ_c = e^{(c-1)/2} φ₁`, where `φ₁` solves
//! `-φ'' + φ - φ log φ² = 0` on `[-L, L]` with `φ₁(±L) = r0` and
//! `φ₁'(-L) = √A(r0)/2`. The half-line carries the shifted Gausson
//! `ψ_c(x) = e^{(c+1)/2} e^{-(x-L+a)²/2}` with `r0 = e·e^{-a²/2}`.
//! Since `φ₁` does not depend on `c`, one ring integration serves every
//! frequency; [`StandingWave::at_frequency`] shares it.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{
    dirichlet_form, edge_integral, vertex_residuals, GraphDomain, GraphFunction, RealFunction,
    VertexCondition,
};
use crate::phase_plane::{self, well};
use crate::scalar::Scalar;

/// Integration is declared inconsistent once `φ` drops below this multiple of `r0`.
pub const POSITIVITY_GUARD: f64 = 1e-3;

/// Integration is also declared inconsistent above this value (slightly above `e`).
const UPPER_GUARD: f64 = 1.01 * std::f64::consts::E;

/// Step used by [`vk_slope`].
pub const VK_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IntegrationMode {
    /// Integrate `[-L, 0]` and reflect (the profile is even).
    Mirrored,
    /// Integrate all of `[-L, L]`; the terminal values then measure the
    /// matching error.
    Full,
}

/// `φ₁` and `φ₁'` on the ring grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RingProfile {
    pub l: f64,
    pub r0: f64,
    pub a: f64,
    pub s0: f64,
    pub phi: Vec<f64>,
    pub xi: Vec<f64>,
}

fn rhs(phi: f64, xi: f64) -> (f64, f64) {
    (xi, phi - phi * (phi * phi).ln())
}

fn rk4_step(phi: f64, xi: f64, h: f64) -> (f64, f64) {
    let (k1p, k1x) = rhs(phi, xi);
    let (k2p, k2x) = rhs(phi + 0.5 * h * k1p, xi + 0.5 * h * k1x);
    let (k3p, k3x) = rhs(phi + 0.5 * h * k2p, xi + 0.5 * h * k2x);
    let (k4p, k4x) = rhs(phi + h * k3p, xi + h * k3x);
    (
        phi + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
        xi + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
    )
}

/// Classical RK4 on the ring grid starting at `(-L, r0, √A(r0)/2)`.
pub fn integrate_ring(r0: f64, d: &GraphDomain, mode: IntegrationMode) -> Result<RingProfile> {
    let a = phase_plane::shift_from_r0(r0)?;
    let s0 = 0.5 * well(r0).sqrt();
    let n = d.n_ring();
    let h = d.h_ring();
    let steps = match mode {
        IntegrationMode::Mirrored => n / 2,
        IntegrationMode::Full => n,
    };
    let threshold = POSITIVITY_GUARD * r0;
    let mut phi = vec![0.0; n + 1];
    let mut xi = vec![0.0; n + 1];
    phi[0] = r0;
    xi[0] = s0;
    for i in 0..steps {
        let (p, q) = rk4_step(phi[i], xi[i], h);
        // a matched orbit stays in [r0·√(3/4), r₊] ⊂ (threshold, e); the
        // upper margin absorbs truncation error when r₊ is close to e
        if !(p >= threshold && p <= UPPER_GUARD) || !q.is_finite() {
            return Err(Error::Integration {
                x: d.ring_x(i + 1),
                phi: p,
                threshold,
            });
        }
        phi[i + 1] = p;
        xi[i + 1] = q;
    }
    if mode == IntegrationMode::Mirrored {
        let mid = n / 2;
        xi[mid] = 0.0;
        for k in 1..=mid {
            phi[mid + k] = phi[mid - k];
            xi[mid + k] = -xi[mid - k];
        }
    }
    Ok(RingProfile {
        l: d.half_length(),
        r0,
        a,
        s0,
        phi,
        xi,
    })
}

/// Mirrored-mode ring samples of `φ₁`.
pub fn build_ring_profile(r0: f64, d: &GraphDomain) -> Result<Vec<f64>> {
    Ok(integrate_ring(r0, d, IntegrationMode::Mirrored)?.phi)
}

/// Consistency measurements of a ring integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RingDiagnostics {
    /// `|φ(L) - r0|`.
    pub end_value: f64,
    /// `|φ'(L) + s0|`.
    pub end_slope: f64,
    /// `max |ξ² - A(φ) - E0|` along the grid.
    pub invariant_drift: f64,
    /// `max |φ(x) - φ(-x)|`.
    pub evenness: f64,
    /// Grid index of the maximum.
    pub peak_index: usize,
    /// `|φ'|` at the maximum.
    pub peak_slope: f64,
    pub min_value: f64,
}

impl RingProfile {
    pub fn diagnostics(&self) -> RingDiagnostics {
        let n = self.phi.len() - 1;
        let e0 = -0.75 * well(self.r0);
        let invariant_drift = self
            .phi
            .iter()
            .zip(&self.xi)
            .map(|(&p, &q)| (q * q - well(p) - e0).abs())
            .fold(0.0, f64::max);
        let evenness = (0..=n)
            .map(|i| (self.phi[i] - self.phi[n - i]).abs())
            .fold(0.0, f64::max);
        let peak_index = (0..=n)
            .max_by(|&i, &j| self.phi[i].total_cmp(&self.phi[j]))
            .unwrap_or(0);
        RingDiagnostics {
            end_value: (self.phi[n] - self.r0).abs(),
            end_slope: (self.xi[n] + self.s0).abs(),
            invariant_drift,
            evenness,
            peak_index,
            peak_slope: self.xi[peak_index].abs(),
            min_value: self.phi.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

/// `Θ_c` for one frequency `c`, sharing its `c`-independent ring profile.
#[derive(Debug, Clone, PartialEq)]
pub struct StandingWave {
    pub c: f64,
    ring: Arc<RingProfile>,
}

impl StandingWave {
    pub fn from_profile(c: f64, profile: RingProfile) -> Self {
        Self {
            c,
            ring: Arc::new(profile),
        }
    }

    /// Matches `T(r0) = L`, picks the default half-line truncation and
    /// grid spacing `h`, and integrates the ring.
    pub fn build(c: f64, l: f64, h: f64) -> Result<(Self, GraphDomain)> {
        let r0 = phase_plane::solve_match(l)?;
        let a = phase_plane::shift_from_r0(r0)?;
        let d = GraphDomain::for_wave(l, a, h)?;
        let profile = integrate_ring(r0, &d, IntegrationMode::Mirrored)?;
        Ok((Self::from_profile(c, profile), d))
    }

    /// Same ring profile, other frequency.
    pub fn at_frequency(&self, c: f64) -> Self {
        Self {
            c,
            ring: Arc::clone(&self.ring),
        }
    }

    pub fn profile(&self) -> &RingProfile {
        &self.ring
    }

    pub fn half_length(&self) -> f64 {
        self.ring.l
    }

    pub fn r0(&self) -> f64 {
        self.ring.r0
    }

    pub fn a(&self) -> f64 {
        self.ring.a
    }

    pub fn s0(&self) -> f64 {
        self.ring.s0
    }

    /// `e^{(c-1)/2}`.
    pub fn ring_scale(&self) -> f64 {
        (0.5 * (self.c - 1.0)).exp()
    }

    /// `e^{(c+1)/2}`.
    pub fn tail_amplitude(&self) -> f64 {
        (0.5 * (self.c + 1.0)).exp()
    }

    /// `ψ_c(x)` for `x ≥ L`.
    pub fn tail_value(&self, x: f64) -> f64 {
        let t = x - self.ring.l + self.ring.a;
        self.tail_amplitude() * (-0.5 * t * t).exp()
    }

    /// `ψ_c'(x) = -(x - L + a) ψ_c(x)`.
    pub fn tail_slope(&self, x: f64) -> f64 {
        -(x - self.ring.l + self.ring.a) * self.tail_value(x)
    }

    /// Grid samples of `Θ_c` on `d`, which must carry the ring grid the
    /// profile was integrated on.
    pub fn samples(&self, d: &GraphDomain) -> Result<RealFunction> {
        self.check_domain(d)?;
        let s = self.ring_scale();
        Ok(GraphFunction {
            ring: self.ring.phi.iter().map(|&p| s * p).collect(),
            tail: d.tail_points().map(|x| self.tail_value(x)).collect(),
        })
    }

    pub(crate) fn check_domain(&self, d: &GraphDomain) -> Result<()> {
        if self.ring.phi.len() != d.n_ring() + 1 {
            return Err(Error::Dimension {
                what: "ring profile samples",
                expected: d.n_ring() + 1,
                got: self.ring.phi.len(),
            });
        }
        if (d.half_length() - self.ring.l).abs() > 1e-12 * self.ring.l {
            return Err(Error::Argument(format!(
                "domain half-length {} differs from the wave's {}",
                d.half_length(),
                self.ring.l
            )));
        }
        Ok(())
    }

    /// `(∫ φ₁², ∫ e^{-(x-L+a)²})` by the trapezoid rule, so that
    /// `μ(c) = e^{c-1}·ring + e^{c+1}·tail`.
    pub fn mass_parts(&self, d: &GraphDomain) -> Result<(f64, f64)> {
        self.check_domain(d)?;
        let sq: Vec<f64> = self.ring.phi.iter().map(|p| p * p).collect();
        let ring = edge_integral(&sq, d.h_ring());
        let tail: Vec<f64> = d
            .tail_points()
            .map(|x| {
                let t = x - self.ring.l + self.ring.a;
                (-t * t).exp()
            })
            .collect();
        Ok((ring, edge_integral(&tail, d.h_tail())))
    }

    /// `μ(c) = ‖Θ_c‖²`.
    pub fn mass(&self, d: &GraphDomain) -> Result<f64> {
        let (ring, tail) = self.mass_parts(d)?;
        Ok((self.c - 1.0).exp() * ring + (self.c + 1.0).exp() * tail)
    }
}

/// Solves the matching problem for half-length `l` and builds `Θ_c` on `d`.
pub fn assemble_standing_wave(c: f64, l: f64, d: &GraphDomain) -> Result<StandingWave> {
    if (d.half_length() - l).abs() > 1e-12 * l {
        return Err(Error::Argument(format!(
            "half-length {l} does not match the domain's {}",
            d.half_length()
        )));
    }
    let r0 = phase_plane::solve_match(l)?;
    let profile = integrate_ring(r0, d, IntegrationMode::Mirrored)?;
    Ok(StandingWave::from_profile(c, profile))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalValues {
    pub mass: f64,
    pub energy: f64,
    pub action: f64,
}

/// `s log s`, extended by 0 at `s = 0`.
pub(crate) fn entropy_density(s: f64) -> f64 {
    if s > 0.0 {
        s * s.ln()
    } else {
        0.0
    }
}

/// Mass `‖u‖²`, energy `‖u'‖² - ∫ |u|² log |u|²` and action `E - (c+1) Q`.
///
/// `‖u'‖²` is the Dirichlet integral of the piecewise-linear interpolant,
/// matching the stiffness used by the spectral and evolution modules.
pub fn functionals<T: Scalar>(u: &GraphFunction<T>, c: f64, d: &GraphDomain) -> Result<FunctionalValues> {
    u.check(d)?;
    let dens = |v: &[T]| -> (Vec<f64>, Vec<f64>) {
        v.iter().map(|x| (x.abs2(), entropy_density(x.abs2()))).unzip()
    };
    let (mr, er) = dens(&u.ring);
    let (mt, et) = dens(&u.tail);
    let mass = edge_integral(&mr, d.h_ring()) + edge_integral(&mt, d.h_tail());
    let potential = edge_integral(&er, d.h_ring()) + edge_integral(&et, d.h_tail());
    let energy = dirichlet_form(u, d)? - potential;
    Ok(FunctionalValues {
        mass,
        energy,
        action: energy - (c + 1.0) * mass,
    })
}

/// `dμ/dc` at `c` by a centred difference with step [`VK_STEP`].
pub fn vk_slope(wave: &StandingWave, c: f64, d: &GraphDomain) -> Result<f64> {
    let plus = wave.at_frequency(c + VK_STEP).mass(d)?;
    let minus = wave.at_frequency(c - VK_STEP).mass(d)?;
    Ok((plus - minus) / (2.0 * VK_STEP))
}

/// Residuals of the stationary system for a sampled wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryResidual {
    /// `max |-Θ'' + cΘ - Θ log Θ²|` over interior nodes of both edges.
    pub interior: f64,
    pub continuity_ring: f64,
    pub continuity_vertex: f64,
    pub flux: f64,
}

impl StationaryResidual {
    pub fn max(&self) -> f64 {
        self.interior
            .max(self.continuity_ring.abs())
            .max(self.continuity_vertex.abs())
            .max(self.flux.abs())
    }
}

fn interior_residual(v: &[f64], h: f64, c: f64) -> f64 {
    v.windows(3)
        .map(|w| {
            let second = (w[0] - 2.0 * w[1] + w[2]) / (h * h);
            (-second + c * w[1] - w[1] * (w[1] * w[1]).ln()).abs()
        })
        .fold(0.0, f64::max)
}

/// Finite-difference residual of `-Θ'' + cΘ - Θ log Θ² = 0` plus the vertex
/// conditions.
pub fn stationary_residual(wave: &StandingWave, d: &GraphDomain) -> Result<StationaryResidual> {
    let u = wave.samples(d)?;
    let vr = vertex_residuals(&u, &VertexCondition::neumann_kirchhoff(), d)?;
    Ok(StationaryResidual {
        interior: interior_residual(&u.ring, d.h_ring(), wave.c)
            .max(interior_residual(&u.tail, d.h_tail(), wave.c)),
        continuity_ring: vr.continuity_ring,
        continuity_vertex: vr.continuity_vertex,
        flux: vr.flux,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn wave(c: f64, h: f64) -> (StandingWave, GraphDomain) {
        StandingWave::build(c, PI, h).unwrap()
    }

    #[test]
    fn ring_is_even_positive_single_lobe() {
        let (w, _) = wave(0.0, 2e-3);
        let diag = w.profile().diagnostics();
        let n = w.profile().phi.len() - 1;
        assert!(diag.evenness < 1e-8);
        assert_eq!(diag.peak_index, n / 2);
        assert!(diag.min_value >= w.r0() * (1.0 - 1e-12));
        assert!(diag.invariant_drift < 1e-8, "drift {}", diag.invariant_drift);
        let phi = &w.profile().phi;
        assert!(phi[n / 2..].windows(2).all(|p| p[1] < p[0]));
    }

    #[test]
    fn full_integration_closes_the_ring() {
        let r0 = phase_plane::solve_match(PI).unwrap();
        let d = GraphDomain::with_spacing(PI, 10.0, 2e-3).unwrap();
        let full = integrate_ring(r0, &d, IntegrationMode::Full).unwrap();
        let diag = full.diagnostics();
        assert!(diag.end_value < 1e-7, "{diag:?}");
        assert!(diag.end_slope < 1e-6, "{diag:?}");
        let mirrored = integrate_ring(r0, &d, IntegrationMode::Mirrored).unwrap();
        let gap = full.phi.iter().zip(&mirrored.phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-7);
    }

    #[test]
    fn unresolved_step_trips_the_guard() {
        // h = 10 is far outside RK4's stability region for this orbit
        let d = GraphDomain::new(40.0, 10.0, 8, 8).unwrap();
        let err = integrate_ring(1e-3, &d, IntegrationMode::Full).unwrap_err();
        assert!(matches!(err, Error::Integration { .. }), "{err:?}");
        assert!(integrate_ring(0.0, &d, IntegrationMode::Full).is_err());
    }

    #[test]
    fn vertex_continuity_is_exact_up_to_rounding() {
        for c in [-1.0, 0.0, 2.0] {
            let (w, d) = wave(c, 2e-3);
            let u = w.samples(&d).unwrap();
            let ring_end = *u.ring.last().unwrap();
            assert!((ring_end - u.tail[0]).abs() < 1e-12 * u.tail[0].max(1.0));
            assert!((w.tail_slope(PI) + w.a() * w.tail_value(PI)).abs() < 1e-15);
        }
    }

    #[test]
    fn functionals_of_zero() {
        let d = GraphDomain::new(1.0, 2.0, 8, 8).unwrap();
        let f = functionals(&RealFunction::zeros(&d), 0.0, &d).unwrap();
        assert_eq!((f.mass, f.energy, f.action), (0.0, 0.0, 0.0));
    }

    #[test]
    fn mass_scales_exponentially_in_c() {
        let (w, d) = wave(0.0, 2e-3);
        let m0 = w.mass(&d).unwrap();
        let m1 = w.at_frequency(0.37).mass(&d).unwrap();
        assert!((m1 / m0 - 0.37f64.exp()).abs() < 1e-12);
        let direct = functionals(&w.samples(&d).unwrap(), 0.0, &d).unwrap().mass;
        assert!((direct - m0).abs() < 1e-12 * m0);
        let slope = vk_slope(&w, 0.0, &d).unwrap();
        assert!(slope > 0.0 && (slope / m0 - 1.0).abs() < 1e-6);
        let (ring, tail) = w.mass_parts(&d).unwrap();
        assert!((m0 - (ring / E + tail * E)).abs() < 1e-12 * m0);
    }

    #[test]
    fn residual_is_second_order() {
        let r: Vec<f64> = [4e-3, 2e-3]
            .iter()
            .map(|&h| {
                let (w, d) = wave(0.5, h);
                stationary_residual(&w, &d).unwrap().max()
            })
            .collect();
        let ratio = r[0] / r[1];
        assert!(ratio > 3.4 && ratio < 4.6, "residuals {r:?}");
    }

    #[test]
    fn domain_mismatch_is_rejected() {
        let (w, _) = wave(0.0, 4e-3);
        let other = GraphDomain::with_spacing(PI, 10.0, 2e-3).unwrap();
        assert!(w.samples(&other).is_err());
        assert!(assemble_standing_wave(0.0, 1.0, &other).is_err());
    }
}
