//! Linearized operators around a standing wave, the vertex Laplacian, and the
//! spectral diagnostics built on them.

mod assemble;
mod eigen;

pub use assemble::{
    assemble, assemble_half_line, assemble_periodic_ring, periodic_from_potential, Layout, OperatorKind,
    OperatorMatrix, OperatorMeta,
};
pub(crate) use assemble::Arrow;
pub use eigen::{
    count_below, default_tol_null, eigen_lowest, eigen_lowest_with_tol, spectral_bounds, SpectrumReport,
    MAX_EIGENPAIRS,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{GraphDomain, RealFunction, VertexCondition};
use crate::profile::StandingWave;

/// Eigenpairs computed by the analyses.
pub const ANALYSIS_PAIRS: usize = 4;

/// Eigenvalue distance accepted as "the same eigenvalue" by [`split_compare`].
pub const SPLIT_TOLERANCE: f64 = 1e-4;

/// Vertex-trace threshold of the splitting hypothesis `g(L) ≠ 0`.
pub const SPLIT_TRACE_THRESHOLD: f64 = 1e-6;

/// Positive root of `ϱ (2 tanh(ϱL) + 1) = Z`; `-ϱ²` is the only negative
/// eigenvalue of `-Δ_Z` for `Z > 0`.
pub fn transcendental_rho(z: f64, l: f64) -> Result<f64> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::domain("Z", z, "(0, inf); -Δ_Z has no eigenvalues for Z ≤ 0"));
    }
    if !(l > 0.0) {
        return Err(Error::domain("L", l, "(0, inf)"));
    }
    let g = |r: f64| r * (2.0 * (r * l).tanh() + 1.0) - z;
    // g(0) = -Z < 0 and g(Z) = 2Z tanh(ZL) > 0; g is increasing.
    let (mut lo, mut hi) = (0.0, z);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if g(lo).abs() <= g(hi).abs() { lo } else { hi })
}

/// `(cosh ϱx, cosh(ϱL) e^{-ϱ(x-L)})`, the continuous eigenfunction of `-Δ_Z`
/// scaled to be continuous at the vertex.
pub fn delta_ground_state(rho: f64, d: &GraphDomain) -> RealFunction {
    let l = d.half_length();
    RealFunction::from_fns(d, |x| (rho * x).cosh(), |x| (rho * l).cosh() * (-rho * (x - l)).exp())
}

/// `|⟨u, v⟩_M| / (‖u‖_M ‖v‖_M)`.
pub fn mass_cosine(op: &OperatorMatrix, u: &[f64], v: &[f64]) -> f64 {
    op.mass_inner(u, v).abs() / (op.mass_inner(u, u) * op.mass_inner(v, v)).sqrt()
}

/// Discrete `⟨K u, u⟩ / ⟨M u, u⟩` for a tadpole function.
pub fn rayleigh_quotient(op: &OperatorMatrix, u: &RealFunction) -> Result<f64> {
    let v = op.restrict(u)?;
    Ok(op.form(&v, &v) / op.mass_inner(&v, &v))
}

/// Perron–Frobenius and symmetry measurements of a ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundStateShape {
    pub min: f64,
    pub max: f64,
    /// Smallest value among nodes with `|v| > 1e-10 max |v|`.
    pub min_significant: f64,
    /// `min_significant · max > 0`.
    pub sign_definite: bool,
    /// `max |v(x) - v(-x)| / max |v|` on the ring.
    pub ring_oddness: f64,
}

pub fn ground_state_shape(f: &RealFunction) -> GroundStateShape {
    // the far tail end is a Dirichlet node, always zero; leave it out
    let values: Vec<f64> = f.ring.iter().chain(&f.tail[..f.tail.len() - 1]).copied().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let min_significant = values
        .iter()
        .copied()
        .filter(|v| v.abs() > 1e-10 * scale)
        .fold(f64::INFINITY, f64::min);
    let n = f.ring.len() - 1;
    let odd = (0..=n).map(|i| (f.ring[i] - f.ring[n - i]).abs()).fold(0.0, f64::max);
    GroundStateShape {
        min,
        max,
        min_significant,
        sign_definite: min_significant * max > 0.0,
        ring_oddness: odd / scale.max(f64::MIN_POSITIVE),
    }
}

/// Spectrum of `L1` with the diagnostics of the Morse-index theorem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L1Analysis {
    pub spectrum: SpectrumReport,
    pub ground: GroundStateShape,
    /// Second eigenvalue, the spectral gap above the negative direction.
    pub gap: f64,
    /// `⟨L1 Θ, Θ⟩ / ‖Θ‖²`.
    pub rayleigh_at_wave: f64,
    pub index_ok: bool,
    pub nullity_ok: bool,
    pub ground_ok: bool,
}

impl L1Analysis {
    pub fn passed(&self) -> bool {
        self.index_ok && self.nullity_ok && self.ground_ok
    }
}

#[allow(non_snake_case)]
pub fn analyze_L1(wave: &StandingWave, d: &GraphDomain) -> Result<L1Analysis> {
    let op = assemble(OperatorKind::L1, VertexCondition::neumann_kirchhoff(), Some(wave), d)?;
    let spectrum = eigen_lowest(&op, ANALYSIS_PAIRS)?;
    let ground = ground_state_shape(&op.to_graph_function(&spectrum.eigenvectors[0])?);
    let theta = wave.samples(d)?;
    let rayleigh_at_wave = rayleigh_quotient(&op, &theta)?;
    let gap = spectrum.eigenvalues[1];
    Ok(L1Analysis {
        index_ok: spectrum.morse_index == 1,
        nullity_ok: spectrum.nullity == 0 && gap > spectrum.tol_null,
        ground_ok: ground.sign_definite && ground.ring_oddness <= 1e-6,
        spectrum,
        ground,
        gap,
        rayleigh_at_wave,
    })
}

/// Spectrum of `L2` with the kernel diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L2Analysis {
    pub spectrum: SpectrumReport,
    pub lambda_min: f64,
    /// Mass cosine between the lowest eigenvector and `Θ_c`.
    pub kernel_cosine: f64,
    pub second: f64,
    pub kernel_ok: bool,
    pub cosine_ok: bool,
    pub gap_ok: bool,
    pub nonnegative_ok: bool,
}

impl L2Analysis {
    pub fn passed(&self) -> bool {
        self.kernel_ok && self.cosine_ok && self.gap_ok && self.nonnegative_ok
    }
}

#[allow(non_snake_case)]
pub fn analyze_L2(wave: &StandingWave, d: &GraphDomain) -> Result<L2Analysis> {
    let op = assemble(OperatorKind::L2, VertexCondition::neumann_kirchhoff(), Some(wave), d)?;
    let spectrum = eigen_lowest(&op, ANALYSIS_PAIRS)?;
    let theta = op.restrict(&wave.samples(d)?)?;
    let kernel_cosine = mass_cosine(&op, &spectrum.eigenvectors[0], &theta);
    let tol = spectrum.tol_null;
    let lambda_min = spectrum.eigenvalues[0];
    let second = spectrum.eigenvalues[1];
    Ok(L2Analysis {
        kernel_ok: lambda_min.abs() <= tol,
        cosine_ok: kernel_cosine >= 1.0 - 1e-6,
        gap_ok: second > tol,
        nonnegative_ok: spectrum.morse_index == 0,
        spectrum,
        lambda_min,
        kernel_cosine,
        second,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitPair {
    pub lambda: f64,
    /// `|g(L)| / ‖g‖` of the half-line component.
    pub vertex_ratio: f64,
    /// The pair fails the hypothesis `g(L) ≠ 0` and is not asserted.
    pub exempt: bool,
    pub dist_periodic: f64,
    pub dist_half_line: f64,
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitReport {
    pub full: Vec<f64>,
    pub periodic: Vec<f64>,
    pub half_line: Vec<f64>,
    pub pairs: Vec<SplitPair>,
    pub tolerance: f64,
    /// `α(a) = (1 - a²)/a + Z`, logged for information (`Z = 0` here).
    pub alpha: f64,
}

impl SplitReport {
    pub fn all_matched(&self) -> bool {
        self.pairs.iter().all(|p| p.exempt || p.matched)
    }
}

fn nearest(values: &[f64], x: f64) -> f64 {
    values.iter().map(|v| (v - x).abs()).fold(f64::INFINITY, f64::min)
}

/// Compares the non-positive `L1` eigenvalues with the periodic-ring and
/// Neumann-half-line spectra they should split into.
pub fn split_compare(wave: &StandingWave, d: &GraphDomain) -> Result<SplitReport> {
    let full_op = assemble(OperatorKind::L1, VertexCondition::neumann_kirchhoff(), Some(wave), d)?;
    let full = eigen_lowest(&full_op, ANALYSIS_PAIRS)?;
    let periodic = eigen_lowest(&assemble_periodic_ring(wave, d)?, ANALYSIS_PAIRS)?;
    let half = eigen_lowest(&assemble_half_line(wave.a(), d.tail_length(), d.n_tail())?, ANALYSIS_PAIRS)?;

    let mut pairs = Vec::new();
    for (lambda, v) in full.eigenvalues.iter().zip(&full.eigenvectors) {
        if *lambda > full.tol_null {
            continue;
        }
        let f = full_op.to_graph_function(v)?;
        let g_norm = crate::graph::edge_integral(
            &f.tail.iter().map(|t| t * t).collect::<Vec<_>>(),
            d.h_tail(),
        )
        .sqrt();
        let vertex_ratio = f.tail[0].abs() / g_norm.max(f64::MIN_POSITIVE);
        let exempt = vertex_ratio <= SPLIT_TRACE_THRESHOLD;
        let dist_periodic = nearest(&periodic.eigenvalues, *lambda);
        let dist_half_line = nearest(&half.eigenvalues, *lambda);
        pairs.push(SplitPair {
            lambda: *lambda,
            vertex_ratio,
            exempt,
            dist_periodic,
            dist_half_line,
            matched: dist_periodic <= SPLIT_TOLERANCE && dist_half_line <= SPLIT_TOLERANCE,
        });
    }
    let a = wave.a();
    Ok(SplitReport {
        full: full.eigenvalues,
        periodic: periodic.eigenvalues,
        half_line: half.eigenvalues,
        pairs,
        tolerance: SPLIT_TOLERANCE,
        alpha: (1.0 - a * a) / a,
    })
}

/// Lowest eigenvalue of `-Δ_Z` against `-ϱ²`, with the eigenvector cosine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaComparison {
    pub z: f64,
    pub l: f64,
    pub h: f64,
    pub rho: f64,
    pub numerical: f64,
    pub exact: f64,
    pub rel_error: f64,
    pub cosine: f64,
    pub negative_count: usize,
}

/// Half-line length used for `-Δ_Z`: the eigenfunction decays like `e^{-ϱt}`.
pub fn delta_tail_length(rho: f64) -> f64 {
    (40.0 / rho).max(10.0)
}

pub fn compare_delta_ground_state(z: f64, l: f64, h: f64) -> Result<DeltaComparison> {
    let rho = transcendental_rho(z, l)?;
    let d = GraphDomain::with_spacing(l, delta_tail_length(rho), h)?;
    let op = assemble(OperatorKind::Laplacian, VertexCondition::delta(z)?, None, &d)?;
    let rep = eigen_lowest(&op, 1)?;
    let exact = -rho * rho;
    let reference = op.restrict(&delta_ground_state(rho, &d))?;
    Ok(DeltaComparison {
        z,
        l,
        h: d.h_max(),
        rho,
        numerical: rep.eigenvalues[0],
        exact,
        rel_error: ((rep.eigenvalues[0] - exact) / exact).abs(),
        cosine: mass_cosine(&op, &rep.eigenvectors[0], &reference),
        negative_count: rep.morse_index,
    })
}
