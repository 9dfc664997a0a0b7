//! Tadpole geometry, sampled functions on it, and the discrete integrals used
//! throughout the crate.
//!
//! The ring is the interval `[-L, L]` whose two ends are glued at the vertex
//! `x = L`; the half-line `[L, ∞)` is truncated to `[L, L + R]`. Both edges
//! carry uniform grids and a [`GraphFunction`] stores the samples including
//! both ring endpoints and the vertex sample of the tail, so vertex continuity
//! is something one measures rather than something the type enforces.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::fmt_f64;
use crate::scalar::Scalar;

/// Truncation length of the half-line beyond the Gaussian tail shift.
pub const DEFAULT_TAIL_MARGIN: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphDomain {
    l: f64,
    r: f64,
    n_ring: usize,
    n_tail: usize,
}

impl GraphDomain {
    pub fn new(l: f64, r: f64, n_ring: usize, n_tail: usize) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::domain("L", l, "(0, inf)"));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::domain("R", r, "(0, inf)"));
        }
        if n_ring < 8 || !n_ring.is_multiple_of(2) {
            return Err(Error::Argument(format!(
                "n_ring must be even and at least 8, got {n_ring}"
            )));
        }
        if n_tail < 8 {
            return Err(Error::Argument(format!(
                "n_tail must be at least 8, got {n_tail}"
            )));
        }
        Ok(Self { l, r, n_ring, n_tail })
    }

    /// Grid with spacing as close to `h` as the edge lengths allow (never coarser).
    pub fn with_spacing(l: f64, r: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::domain("h", h, "(0, inf)"));
        }
        let mut n_ring = ((2.0 * l / h).ceil() as usize).max(8);
        if n_ring % 2 == 1 {
            n_ring += 1;
        }
        let n_tail = ((r / h).ceil() as usize).max(8);
        Self::new(l, r, n_ring, n_tail)
    }

    /// Grid for a standing wave with tail shift `a`: the half-line is cut at
    /// `a + 8` past the vertex, where the Gaussian tail is below 1e-14.
    pub fn for_wave(l: f64, a: f64, h: f64) -> Result<Self> {
        Self::with_spacing(l, a.max(0.0) + DEFAULT_TAIL_MARGIN, h)
    }

    pub fn half_length(&self) -> f64 {
        self.l
    }

    pub fn tail_length(&self) -> f64 {
        self.r
    }

    pub fn n_ring(&self) -> usize {
        self.n_ring
    }

    pub fn n_tail(&self) -> usize {
        self.n_tail
    }

    pub fn h_ring(&self) -> f64 {
        2.0 * self.l / self.n_ring as f64
    }

    pub fn h_tail(&self) -> f64 {
        self.r / self.n_tail as f64
    }

    /// Coarsest of the two spacings.
    pub fn h_max(&self) -> f64 {
        self.h_ring().max(self.h_tail())
    }

    pub fn ring_x(&self, i: usize) -> f64 {
        if i == self.n_ring {
            self.l
        } else {
            -self.l + i as f64 * self.h_ring()
        }
    }

    pub fn tail_x(&self, j: usize) -> f64 {
        self.l + j as f64 * self.h_tail()
    }

    pub fn ring_points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_ring).map(|i| self.ring_x(i))
    }

    pub fn tail_points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_tail).map(|j| self.tail_x(j))
    }

    /// Same geometry with a longer half-line at unchanged tail spacing.
    pub fn extend_tail(&self, extra: f64) -> Result<Self> {
        let h = self.h_tail();
        let added = (extra / h).round() as usize;
        Self::new(self.l, self.r + added as f64 * h, self.n_ring, self.n_tail + added)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexKind {
    NeumannKirchhoff,
    Delta,
}

/// Vertex condition `Φ(L) = Φ(-L) = Ψ(L)`, `Φ'(L) - Φ'(-L) = Ψ'(L+) + Z Ψ(L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexCondition {
    kind: VertexKind,
    z: f64,
}

impl VertexCondition {
    pub fn neumann_kirchhoff() -> Self {
        Self {
            kind: VertexKind::NeumannKirchhoff,
            z: 0.0,
        }
    }

    pub fn delta(z: f64) -> Result<Self> {
        if !z.is_finite() {
            return Err(Error::domain("Z", z, "finite"));
        }
        Ok(Self {
            kind: VertexKind::Delta,
            z,
        })
    }

    /// Neumann–Kirchhoff when `z == 0`, δ-type otherwise.
    pub fn from_strength(z: f64) -> Result<Self> {
        if z == 0.0 {
            Ok(Self::neumann_kirchhoff())
        } else {
            Self::delta(z)
        }
    }

    pub fn kind(&self) -> VertexKind {
        self.kind
    }

    pub fn strength(&self) -> f64 {
        self.z
    }
}

/// Samples of a function on the tadpole: `ring[i]` at `-L + i h_ring`,
/// `tail[j]` at `L + j h_tail`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFunction<T> {
    pub ring: Vec<T>,
    pub tail: Vec<T>,
}

pub type RealFunction = GraphFunction<f64>;
pub type ComplexFunction = GraphFunction<Complex64>;

impl<T: Scalar> GraphFunction<T> {
    pub fn zeros(d: &GraphDomain) -> Self {
        Self {
            ring: vec![T::zero(); d.n_ring + 1],
            tail: vec![T::zero(); d.n_tail + 1],
        }
    }

    pub fn from_fns(d: &GraphDomain, ring: impl Fn(f64) -> T, tail: impl Fn(f64) -> T) -> Self {
        Self {
            ring: d.ring_points().map(ring).collect(),
            tail: d.tail_points().map(tail).collect(),
        }
    }

    pub fn check(&self, d: &GraphDomain) -> Result<()> {
        if self.ring.len() != d.n_ring + 1 {
            return Err(Error::Dimension {
                what: "ring samples",
                expected: d.n_ring + 1,
                got: self.ring.len(),
            });
        }
        if self.tail.len() != d.n_tail + 1 {
            return Err(Error::Dimension {
                what: "tail samples",
                expected: d.n_tail + 1,
                got: self.tail.len(),
            });
        }
        Ok(())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> GraphFunction<U> {
        GraphFunction {
            ring: self.ring.iter().map(|&v| f(v)).collect(),
            tail: self.tail.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: T, other: &Self) -> Self {
        Self {
            ring: self.ring.iter().zip(&other.ring).map(|(&a, &b)| a + s * b).collect(),
            tail: self.tail.iter().zip(&other.tail).map(|(&a, &b)| a + s * b).collect(),
        }
    }

    pub fn values(&self) -> impl Iterator<Item = &T> {
        self.ring.iter().chain(self.tail.iter())
    }

    pub fn max_abs(&self) -> f64 {
        self.values().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

impl GraphFunction<f64> {
    pub fn to_complex(&self) -> ComplexFunction {
        self.map(Complex64::from_real)
    }
}

pub(crate) fn trapezoid<T: Scalar>(samples: impl ExactSizeIterator<Item = T>, h: f64) -> T {
    let n = samples.len();
    let mut acc = T::zero();
    for (i, v) in samples.enumerate() {
        if i == 0 || i + 1 == n {
            acc += v.scale(0.5);
        } else {
            acc += v;
        }
    }
    acc.scale(h)
}

/// `Σ |u_{j+1} - u_j|² / h` over both edges: the exact Dirichlet integral of
/// the piecewise-linear interpolant.
pub fn dirichlet_form<T: Scalar>(u: &GraphFunction<T>, d: &GraphDomain) -> Result<f64> {
    u.check(d)?;
    let edge = |v: &[T], h: f64| v.windows(2).map(|w| (w[1] - w[0]).abs2()).sum::<f64>() / h;
    Ok(edge(&u.ring, d.h_ring()) + edge(&u.tail, d.h_tail()))
}

/// Trapezoid rule on one edge.
pub fn edge_integral<T: Scalar>(samples: &[T], h: f64) -> T {
    trapezoid(samples.iter().copied(), h)
}

/// Nodal derivative: centred in the interior, 3-point one-sided at both ends.
pub fn derivative_samples<T: Scalar>(values: &[T], h: f64) -> Vec<T> {
    let n = values.len();
    assert!(n >= 3, "need at least three samples");
    let inv2h = 0.5 / h;
    let mut out = Vec::with_capacity(n);
    out.push(
        (values[1].scale(4.0) - values[0].scale(3.0) - values[2]).scale(inv2h),
    );
    for i in 1..n - 1 {
        out.push((values[i + 1] - values[i - 1]).scale(inv2h));
    }
    out.push(
        (values[n - 1].scale(3.0) - values[n - 2].scale(4.0) + values[n - 3]).scale(inv2h),
    );
    out
}

/// Derivative at the first sample, 3-point one-sided.
pub(crate) fn left_derivative<T: Scalar>(values: &[T], h: f64) -> T {
    (values[1].scale(4.0) - values[0].scale(3.0) - values[2]).scale(0.5 / h)
}

/// Derivative at the last sample, 3-point one-sided.
pub(crate) fn right_derivative<T: Scalar>(values: &[T], h: f64) -> T {
    let n = values.len();
    (values[n - 1].scale(3.0) - values[n - 2].scale(4.0) + values[n - 3]).scale(0.5 / h)
}

fn same_shape<T: Scalar>(u: &GraphFunction<T>, v: &GraphFunction<T>, d: &GraphDomain) -> Result<()> {
    u.check(d)?;
    v.check(d)
}

/// Trapezoid approximation of `∫ u v̄` over both edges.
pub fn inner_product<T: Scalar>(u: &GraphFunction<T>, v: &GraphFunction<T>, d: &GraphDomain) -> Result<T> {
    same_shape(u, v, d)?;
    let ring = trapezoid(u.ring.iter().zip(&v.ring).map(|(&a, &b)| a * b.conj()), d.h_ring());
    let tail = trapezoid(u.tail.iter().zip(&v.tail).map(|(&a, &b)| a * b.conj()), d.h_tail());
    Ok(ring + tail)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms {
    pub l2: f64,
    pub h1_seminorm: f64,
    pub weighted_x: f64,
}

pub fn norms<T: Scalar>(u: &GraphFunction<T>, d: &GraphDomain) -> Result<Norms> {
    u.check(d)?;
    let l2 = inner_product(u, u, d)?.re().max(0.0).sqrt();
    let dr = derivative_samples(&u.ring, d.h_ring());
    let dt = derivative_samples(&u.tail, d.h_tail());
    let h1 = trapezoid(dr.iter().map(|v| v.abs2()), d.h_ring())
        + trapezoid(dt.iter().map(|v| v.abs2()), d.h_tail());
    let wx = trapezoid(
        u.tail.iter().enumerate().map(|(j, v)| d.tail_x(j).powi(2) * v.abs2()),
        d.h_tail(),
    );
    Ok(Norms {
        l2,
        h1_seminorm: h1.sqrt(),
        weighted_x: wx.sqrt(),
    })
}

/// Weights of the three terms of the energy-space norm with tail moment
/// `‖v‖² = w_l2 ‖v‖² + w_h1 ‖v'‖² + w_x ∫_tail x² |v|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormWeights {
    pub l2: f64,
    pub h1: f64,
    pub x: f64,
}

impl Default for NormWeights {
    fn default() -> Self {
        Self { l2: 1.0, h1: 1.0, x: 1.0 }
    }
}

impl NormWeights {
    /// Hermitian inner product inducing the weighted norm; uses the same
    /// discrete derivative and quadrature as [`norms`].
    pub fn inner<T: Scalar>(&self, u: &GraphFunction<T>, v: &GraphFunction<T>, d: &GraphDomain) -> Result<T> {
        same_shape(u, v, d)?;
        let mut acc = inner_product(u, v, d)?.scale(self.l2);
        if self.h1 != 0.0 {
            let (hr, ht) = (d.h_ring(), d.h_tail());
            let (dur, dvr) = (derivative_samples(&u.ring, hr), derivative_samples(&v.ring, hr));
            let (dut, dvt) = (derivative_samples(&u.tail, ht), derivative_samples(&v.tail, ht));
            let h1 = trapezoid(dur.iter().zip(&dvr).map(|(&a, &b)| a * b.conj()), hr)
                + trapezoid(dut.iter().zip(&dvt).map(|(&a, &b)| a * b.conj()), ht);
            acc += h1.scale(self.h1);
        }
        if self.x != 0.0 {
            let wx = trapezoid(
                u.tail
                    .iter()
                    .zip(&v.tail)
                    .enumerate()
                    .map(|(j, (&a, &b))| (a * b.conj()).scale(d.tail_x(j).powi(2))),
                d.h_tail(),
            );
            acc += wx.scale(self.x);
        }
        Ok(acc)
    }

    pub fn norm<T: Scalar>(&self, u: &GraphFunction<T>, d: &GraphDomain) -> Result<f64> {
        Ok(self.inner(u, u, d)?.re().max(0.0).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexResiduals<T> {
    pub continuity_ring: T,
    pub continuity_vertex: T,
    pub flux: T,
}

impl<T: Scalar> VertexResiduals<T> {
    pub fn max_abs(&self) -> f64 {
        self.continuity_ring
            .abs()
            .max(self.continuity_vertex.abs())
            .max(self.flux.abs())
    }
}

pub fn vertex_residuals<T: Scalar>(
    u: &GraphFunction<T>,
    vc: &VertexCondition,
    d: &GraphDomain,
) -> Result<VertexResiduals<T>> {
    u.check(d)?;
    let last = d.n_ring();
    let ring_right = right_derivative(&u.ring, d.h_ring());
    let ring_left = left_derivative(&u.ring, d.h_ring());
    let tail_left = left_derivative(&u.tail, d.h_tail());
    Ok(VertexResiduals {
        continuity_ring: u.ring[0] - u.ring[last],
        continuity_vertex: u.ring[last] - u.tail[0],
        flux: ring_right - ring_left - tail_left - u.tail[0].scale(vc.strength()),
    })
}

/// Writes `edge_id,x,re,im` rows, ring first.
pub fn write_csv<T: Scalar, W: Write>(u: &GraphFunction<T>, d: &GraphDomain, mut out: W) -> Result<()> {
    u.check(d)?;
    let io = |e: std::io::Error| Error::Io {
        context: "writing graph function CSV".into(),
        message: e.to_string(),
    };
    writeln!(out, "edge_id,x,re,im").map_err(io)?;
    for (x, v) in d.ring_points().zip(&u.ring) {
        writeln!(out, "ring,{},{},{}", fmt_f64(x), fmt_f64(v.re()), fmt_f64(v.im())).map_err(io)?;
    }
    for (x, v) in d.tail_points().zip(&u.tail) {
        writeln!(out, "tail,{},{},{}", fmt_f64(x), fmt_f64(v.re()), fmt_f64(v.im())).map_err(io)?;
    }
    Ok(())
}

/// Parses the format written by [`write_csv`]. Abscissae are returned
/// alongside the values so callers can rebuild or validate the grid.
pub fn read_csv<R: BufRead>(input: R) -> Result<(ComplexFunction, Vec<f64>, Vec<f64>)> {
    let bad = |line: usize, msg: &str| Error::Io {
        context: format!("graph function CSV line {line}"),
        message: msg.to_string(),
    };
    let mut ring = Vec::new();
    let mut tail = Vec::new();
    let mut xr = Vec::new();
    let mut xt = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line.map_err(|e| bad(k + 1, &e.to_string()))?;
        if k == 0 {
            if line.trim() != "edge_id,x,re,im" {
                return Err(bad(1, "unexpected header"));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad(k + 1, "expected 4 columns"));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(k + 1, &e.to_string()));
        let (x, re, im) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
        match fields[0] {
            "ring" => {
                xr.push(x);
                ring.push(Complex64::new(re, im));
            }
            "tail" => {
                xt.push(x);
                tail.push(Complex64::new(re, im));
            }
            other => return Err(bad(k + 1, &format!("unknown edge id {other:?}"))),
        }
    }
    Ok((GraphFunction { ring, tail }, xr, xt))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(l: f64, r: f64, n: usize, m: usize) -> GraphDomain {
        GraphDomain::new(l, r, n, m).unwrap()
    }

    #[test]
    fn domain_invariants() {
        assert!(GraphDomain::new(0.0, 1.0, 8, 8).is_err());
        assert!(GraphDomain::new(1.0, -1.0, 8, 8).is_err());
        assert!(GraphDomain::new(1.0, 1.0, 9, 8).is_err());
        assert!(GraphDomain::new(1.0, 1.0, 6, 8).is_err());
        assert!(GraphDomain::new(1.0, 1.0, 8, 7).is_err());
        let d = dom(1.0, 3.0, 10, 12);
        assert_eq!(d.h_ring(), 0.2);
        assert_eq!(d.h_tail(), 0.25);
        assert_eq!(d.ring_x(10), 1.0);
        assert_eq!(d.tail_x(0), 1.0);
        let d = GraphDomain::with_spacing(std::f64::consts::PI, 9.0, 1e-3).unwrap();
        assert_eq!(d.n_ring() % 2, 0);
        assert!(d.h_ring() <= 1e-3 && d.h_tail() <= 1e-3);
    }

    #[test]
    fn constant_inner_product() {
        let d = dom(1.0, 3.0, 40, 60);
        let one = RealFunction::from_fns(&d, |_| 1.0, |_| 1.0);
        let ip = inner_product(&one, &one, &d).unwrap();
        assert!((ip - 5.0).abs() < 1e-13);
    }

    #[test]
    fn parity_orthogonality() {
        let d = dom(1.0, 3.0, 64, 16);
        let even = RealFunction::from_fns(&d, |x| x.cos(), |_| 0.0);
        let odd = RealFunction::from_fns(&d, |x| x * x * x, |_| 0.0);
        assert!(inner_product(&even, &odd, &d).unwrap().abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch() {
        let d = dom(1.0, 3.0, 16, 16);
        let u = RealFunction::zeros(&d);
        let mut v = RealFunction::zeros(&d);
        v.tail.pop();
        assert!(matches!(inner_product(&u, &v, &d), Err(Error::Dimension { .. })));
    }

    #[test]
    fn complex_inner_is_conjugate_symmetric() {
        let d = dom(1.0, 2.0, 32, 32);
        let u = ComplexFunction::from_fns(&d, |x| Complex64::new(x, x * x), |x| Complex64::new(1.0, -x));
        let v = ComplexFunction::from_fns(&d, |x| Complex64::new(x.sin(), 1.0), |x| Complex64::new(0.5, x));
        let uv = inner_product(&u, &v, &d).unwrap();
        let vu = inner_product(&v, &u, &d).unwrap();
        assert!((uv - vu.conj()).norm() < 1e-14);
        let i = Complex64::new(0.0, 1.0);
        let iu_v = inner_product(&u.scaled(i), &v, &d).unwrap();
        assert!((iu_v - i * uv).norm() < 1e-14);
    }

    #[test]
    fn zero_function_norms() {
        let d = dom(1.0, 2.0, 16, 16);
        let n = norms(&RealFunction::zeros(&d), &d).unwrap();
        assert_eq!((n.l2, n.h1_seminorm, n.weighted_x), (0.0, 0.0, 0.0));
    }

    #[test]
    fn linear_tail_l2_norm() {
        // u = x - L on the tail only, R = 1: ∫_0^1 t² dt = 1/3.
        for n in [100, 200] {
            let d = dom(1.0, 1.0, 8, n);
            let u = RealFunction::from_fns(&d, |_| 0.0, |x| x - 1.0);
            let l2 = norms(&u, &d).unwrap().l2;
            let h = d.h_tail();
            // trapezoid error for t² on [0,1] is exactly h²/6 in the squared norm
            assert!((l2 * l2 - (1.0 / 3.0 + h * h / 6.0)).abs() < 1e-14);
            assert!((l2 - 1.0 / 3f64.sqrt()).abs() < h * h);
        }
    }

    #[test]
    fn trapezoid_quadratic_converges_at_rate_two() {
        let err = |n: usize| {
            let d = dom(1.0, 2.0, n, n);
            let u = RealFunction::from_fns(&d, |x| x, |x| x - 1.0);
            // ∫_{-1}^{1} x² + ∫_0^2 t² = 2/3 + 8/3
            (inner_product(&u, &u, &d).unwrap() - 10.0 / 3.0).abs()
        };
        let ratio = err(40) / err(80);
        assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn constant_vertex_residuals() {
        let d = dom(1.0, 2.0, 16, 16);
        let one = RealFunction::from_fns(&d, |_| 1.0, |_| 1.0);
        let nk = vertex_residuals(&one, &VertexCondition::neumann_kirchhoff(), &d).unwrap();
        assert_eq!(nk.continuity_ring, 0.0);
        assert_eq!(nk.continuity_vertex, 0.0);
        assert!(nk.flux.abs() < 1e-12);
        let delta = vertex_residuals(&one, &VertexCondition::delta(2.0).unwrap(), &d).unwrap();
        assert!((delta.flux + 2.0).abs() < 1e-12);
    }

    #[test]
    fn one_sided_derivatives_are_exact_for_quadratics() {
        let h = 0.1;
        let v: Vec<f64> = (0..6).map(|i| (i as f64 * h).powi(2) + 1.0).collect();
        let dv = derivative_samples(&v, h);
        for (i, d) in dv.iter().enumerate() {
            assert!((d - 2.0 * i as f64 * h).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_round_trip() {
        let d = dom(1.0, 2.0, 8, 8);
        let u = ComplexFunction::from_fns(&d, |x| Complex64::new(x, -x), |x| Complex64::new(1.0 / 3.0, x.exp()));
        let mut buf = Vec::new();
        write_csv(&u, &d, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("edge_id,x,re,im\n"));
        let (back, xr, xt) = read_csv(&buf[..]).unwrap();
        assert_eq!(back, u);
        assert_eq!(xr.len(), 9);
        assert_eq!(xt[0], 1.0);
    }
}
