//! Crank–Nicolson integration of `i u_t + Δu + u f_n(|u|²) = 0` on the tadpole.
//!
//! `f_n` is the logarithm clamped to `[-n, n]`. With `K`, `M` the Neumann–
//! Kirchhoff stiffness and lumped mass, one step solves for the midpoint
//! `w = (u⁺ + u)/2`:
//!
//! `(2i/dt) M w - K w + M f_n(|w|²) w = (2i/dt) M u`,
//!
//! by freezing the real potential `f_n(|w|²)` at the previous iterate, and
//! sets `u⁺ = 2w - u`. Because the frozen potential is real, every iterate
//! conserves the discrete mass exactly; the fixed point only controls how
//! well the nonlinearity is resolved.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ComplexFunction, GraphDomain, GraphFunction, NormWeights, VertexCondition, VertexKind};
use crate::profile::StandingWave;
use crate::spectral::{assemble, Arrow, OperatorKind, OperatorMatrix};

/// `clamp(log s, -n, n)`, with `f_n(0) = -n`.
pub fn f_trunc(s: f64, n: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::domain("s", s, "[0, inf)"));
    }
    if s == 0.0 {
        return Ok(-n);
    }
    Ok(s.ln().clamp(-n, n))
}

fn f_clamped(s: f64, n: f64) -> f64 {
    if s > 0.0 {
        s.ln().clamp(-n, n)
    } else {
        -n
    }
}

/// `∫₀^s f_n(σ) dσ`.
pub fn f_trunc_primitive(s: f64, n: f64) -> f64 {
    let lo = (-n).exp();
    let hi = n.exp();
    if s <= lo {
        -n * s
    } else if s <= hi {
        s * s.ln() - s + lo
    } else {
        n * s - hi + lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Truncation level `n` of `f_n`.
    pub n_trunc: f64,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    /// Record every this many steps (the first and last state are always recorded).
    pub record_every: usize,
    pub weights: NormWeights,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 10.0,
            n_trunc: 50.0,
            fp_tol: 1e-10,
            fp_max_iter: 50,
            record_every: 10,
            weights: NormWeights::default(),
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::domain("dt", self.dt, "(0, inf)"));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::domain("t_end", self.t_end, "[0, inf)"));
        }
        if !(self.n_trunc >= 1.0) {
            return Err(Error::domain("n_trunc", self.n_trunc, "[1, inf)"));
        }
        if !(self.fp_tol > 0.0) || self.fp_max_iter == 0 {
            return Err(Error::Argument("fixed-point tolerance and iteration cap must be positive".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Fixed-point statistics of one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepInfo {
    pub iterations: usize,
    pub last_update: f64,
}

struct Scratch {
    inv_d: Vec<Complex64>,
    chain: Vec<Complex64>,
    border: Vec<Complex64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Self { inv_d: z.clone(), chain: z.clone(), border: z }
    }
}

/// Reusable stepping state: the Laplacian and its arrow structure.
#[derive(Debug, Clone)]
pub struct Evolver {
    cfg: EvolutionConfig,
    op: OperatorMatrix,
    arrow: Arrow,
    d: GraphDomain,
}

impl Evolver {
    pub fn new(cfg: EvolutionConfig, vc: VertexCondition, d: &GraphDomain) -> Result<Self> {
        cfg.validate()?;
        if vc.kind() != VertexKind::NeumannKirchhoff {
            return Err(Error::Argument(
                "time evolution is implemented for the Neumann–Kirchhoff vertex only".into(),
            ));
        }
        let op = assemble(OperatorKind::Laplacian, vc, None, d)?;
        let arrow = op.arrow();
        Ok(Self { cfg, op, arrow, d: *d })
    }

    pub fn config(&self) -> &EvolutionConfig {
        &self.cfg
    }

    pub fn domain(&self) -> &GraphDomain {
        &self.d
    }

    pub fn operator(&self) -> &OperatorMatrix {
        &self.op
    }

    fn mass_norm(&self, v: &[Complex64]) -> f64 {
        v.iter().zip(&self.op.mass_diag).map(|(x, m)| m * x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Solves `[(2i/dt) M - K + M F] w = rhs` for real `F = f_n(|w_prev|²)`,
    /// overwriting `out`. `s` holds the factorization scratch.
    fn solve(&self, w_prev: &[Complex64], rhs: &[Complex64], out: &mut [Complex64], s: &mut Scratch) {
        let a = &self.arrow;
        let mass = &self.op.mass_diag;
        let n_trunc = self.cfg.n_trunc;
        let m = mass.len() - 1;
        let shift = 2.0 / self.cfg.dt;
        let diag = |i: usize| {
            let f = f_clamped(w_prev[i].norm_sqr(), n_trunc);
            Complex64::new(-a.diag[i] + mass[i] * f, mass[i] * shift)
        };
        let mut corner = diag(m);
        let mut prev_chain = Complex64::new(0.0, 0.0);
        let mut prev_border = Complex64::new(0.0, 0.0);
        for i in 0..m {
            let mut di = diag(i);
            let mut bi = Complex64::new(-a.border[i], 0.0);
            if i > 0 {
                di += a.off[i - 1] * prev_chain;
                bi += a.off[i - 1] * prev_border;
            }
            let inv = di.inv();
            s.inv_d[i] = inv;
            prev_chain = if i + 1 < m { -a.off[i] * inv } else { Complex64::new(0.0, 0.0) };
            s.chain[i] = prev_chain;
            prev_border = bi * inv;
            s.border[i] = prev_border;
            corner -= bi * prev_border;
        }
        // forward, diagonal and backward sweeps of L D Lᵀ
        out.copy_from_slice(rhs);
        let mut yb = out[m];
        for i in 0..m {
            if i > 0 {
                let prev = out[i - 1];
                out[i] -= s.chain[i - 1] * prev;
            }
            yb -= s.border[i] * out[i];
        }
        for i in 0..m {
            out[i] *= s.inv_d[i];
        }
        let xb = yb / corner;
        out[m] = xb;
        let mut next = Complex64::new(0.0, 0.0);
        for i in (0..m).rev() {
            out[i] -= s.chain[i] * next + s.border[i] * xb;
            next = out[i];
        }
    }

    /// One step on unknown vectors.
    pub fn step_unknowns(&self, u: &[Complex64]) -> Result<(Vec<Complex64>, StepInfo)> {
        let n = u.len();
        let mut s = Scratch::new(n);
        let shift = Complex64::new(0.0, 2.0 / self.cfg.dt);
        let rhs: Vec<Complex64> = u.iter().zip(&self.op.mass_diag).map(|(x, m)| shift * m * x).collect();
        let mut w = u.to_vec();
        let mut next = vec![Complex64::new(0.0, 0.0); n];
        let mut last_update = f64::INFINITY;
        for it in 1..=self.cfg.fp_max_iter {
            self.solve(&w, &rhs, &mut next, &mut s);
            let (mut diff, mut scale) = (0.0, 0.0);
            for ((a, b), m) in next.iter().zip(&w).zip(&self.op.mass_diag) {
                diff += m * (a - b).norm_sqr();
                scale += m * a.norm_sqr();
            }
            last_update = if scale > 0.0 { (diff / scale).sqrt() } else { diff.sqrt() };
            std::mem::swap(&mut w, &mut next);
            if last_update <= self.cfg.fp_tol {
                for (x, b) in w.iter_mut().zip(u) {
                    *x = 2.0 * *x - b;
                }
                return Ok((w, StepInfo { iterations: it, last_update }));
            }
        }
        Err(Error::FixedPoint {
            iterations: self.cfg.fp_max_iter,
            last_update,
            tolerance: self.cfg.fp_tol,
        })
    }

    pub fn restrict(&self, u: &ComplexFunction) -> Result<Vec<Complex64>> {
        self.op.restrict(u)
    }

    pub fn expand(&self, v: &[Complex64]) -> ComplexFunction {
        self.op.to_graph_function(v).expect("tadpole layout")
    }

    /// Discrete mass `Σ m_i |u_i|²`.
    pub fn mass(&self, v: &[Complex64]) -> f64 {
        let s = self.mass_norm(v);
        s * s
    }

    /// `‖u'‖² - ∫ (P_n(|u|²) + |u|²)`, with `P_n' = f_n`: the energy of the
    /// truncated problem, equal to `‖u'‖² - ∫ |u|² log |u|²` wherever
    /// `e^{-n} ≤ |u|² ≤ e^n` (up to the constant `e^{-n}` per unit length).
    pub fn energy(&self, v: &[Complex64]) -> f64 {
        let mut grad = 0.0;
        for &(i, j, c) in &self.op.edges {
            grad += c * (v[i] - v[j]).norm_sqr();
        }
        // the only diagonal stiffness of the free Laplacian is the Dirichlet end
        grad += self.op.shift.iter().zip(v).map(|(s, x)| s * x.norm_sqr()).sum::<f64>();
        let n = self.cfg.n_trunc;
        let pot: f64 = v
            .iter()
            .zip(&self.op.mass_diag)
            .map(|(x, m)| {
                let s = x.norm_sqr();
                m * (f_trunc_primitive(s, n) + s)
            })
            .sum();
        grad - pot
    }

    /// Nodes with `e^{-n/2} ≤ |u| ≤ e^{n/2}` where the clamped and plain
    /// logarithms disagree (expected: none).
    pub fn truncation_mismatches(&self, v: &[Complex64]) -> usize {
        let n = self.cfg.n_trunc;
        let (lo, hi) = ((-0.5 * n).exp(), (0.5 * n).exp());
        v.iter()
            .filter(|x| {
                let a = x.norm();
                if !(lo..=hi).contains(&a) {
                    return false;
                }
                let s = x.norm_sqr();
                f_clamped(s, n).to_bits() != s.ln().to_bits()
            })
            .count()
    }
}

/// One step from graph samples; `vc` must be the Neumann–Kirchhoff vertex.
pub fn step(u: &ComplexFunction, cfg: &EvolutionConfig, vc: VertexCondition, d: &GraphDomain) -> Result<ComplexFunction> {
    let ev = Evolver::new(*cfg, vc, d)?;
    let (next, _) = ev.step_unknowns(&ev.restrict(u)?)?;
    Ok(ev.expand(&next))
}

/// `θ* = arg ⟨u, Θ⟩` and `‖u - e^{iθ*} Θ‖` in the weighted norm.
pub fn aligned_distance(
    u: &ComplexFunction,
    theta: &ComplexFunction,
    weights: &NormWeights,
    d: &GraphDomain,
) -> Result<(f64, f64)> {
    let phase = weights.inner(u, theta, d)?.arg();
    let rot = Complex64::from_polar(1.0, phase);
    let diff = u.axpy(-rot, theta);
    Ok((phase, weights.norm(&diff, d)?))
}

/// `inf_θ ‖u - e^{iθ} Θ‖` in the energy-space norm with tail moment.
pub fn orbital_distance(u: &ComplexFunction, wave: &StandingWave, weights: &NormWeights, d: &GraphDomain) -> Result<f64> {
    let theta = wave.samples(d)?.to_complex();
    Ok(aligned_distance(u, &theta, weights, d)?.1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    /// Orbital distance to the reference wave; NaN without a reference.
    pub distance: Vec<f64>,
    pub max_fp_iterations: usize,
    pub truncation_mismatches: usize,
    /// Set when a step failed; the series stop at the last good state.
    pub failure: Option<String>,
    #[serde(skip)]
    pub final_state: Option<ComplexFunction>,
}

impl TrajectoryRecord {
    pub fn relative_drift(series: &[f64]) -> f64 {
        let Some(&first) = series.first() else { return 0.0 };
        let scale = first.abs().max(f64::MIN_POSITIVE);
        series.iter().map(|v| (v - first).abs()).fold(0.0, f64::max) / scale
    }

    pub fn mass_drift(&self) -> f64 {
        Self::relative_drift(&self.mass)
    }

    pub fn energy_drift(&self) -> f64 {
        Self::relative_drift(&self.energy)
    }

    pub fn sup_distance(&self) -> f64 {
        self.distance.iter().copied().fold(f64::NAN, f64::max)
    }
}

/// Iterates [`Evolver::step_unknowns`] to `t_end`, recording the monitors.
pub fn run(u0: &ComplexFunction, cfg: &EvolutionConfig, d: &GraphDomain, reference: Option<&StandingWave>) -> Result<TrajectoryRecord> {
    let ev = Evolver::new(*cfg, VertexCondition::neumann_kirchhoff(), d)?;
    run_with(&ev, u0, reference)
}

pub fn run_with(ev: &Evolver, u0: &ComplexFunction, reference: Option<&StandingWave>) -> Result<TrajectoryRecord> {
    let d = ev.domain();
    let cfg = ev.config();
    u0.check(d)?;
    if u0.values().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Argument("initial datum is not finite".into()));
    }
    let theta = reference.map(|w| w.samples(d).map(|s| s.to_complex())).transpose()?;
    let distance = |v: &[Complex64]| -> Result<f64> {
        match &theta {
            Some(t) => Ok(aligned_distance(&ev.expand(v), t, &cfg.weights, d)?.1),
            None => Ok(f64::NAN),
        }
    };
    let mut rec = TrajectoryRecord {
        times: Vec::new(),
        mass: Vec::new(),
        energy: Vec::new(),
        distance: Vec::new(),
        max_fp_iterations: 0,
        truncation_mismatches: 0,
        failure: None,
        final_state: None,
    };
    let mut u = ev.restrict(u0)?;
    let steps = cfg.steps();
    let every = cfg.record_every.max(1);
    let push = |rec: &mut TrajectoryRecord, k: usize, u: &[Complex64]| -> Result<()> {
        rec.times.push(k as f64 * cfg.dt);
        rec.mass.push(ev.mass(u));
        rec.energy.push(ev.energy(u));
        rec.distance.push(distance(u)?);
        Ok(())
    };
    push(&mut rec, 0, &u)?;
    for k in 1..=steps {
        match ev.step_unknowns(&u) {
            Ok((next, info)) => {
                u = next;
                rec.max_fp_iterations = rec.max_fp_iterations.max(info.iterations);
            }
            Err(e) => {
                rec.failure = Some(e.to_string());
                break;
            }
        }
        if k % 100 == 0 {
            rec.truncation_mismatches += ev.truncation_mismatches(&u);
        }
        if k % every == 0 || k == steps {
            push(&mut rec, k, &u)?;
        }
    }
    rec.final_state = Some(ev.expand(&u));
    Ok(rec)
}

/// Smooth, vertex-continuous random field normalized to 1 in `weights`:
/// ring Fourier modes up to `cos(4πx/L)`, `sin(4πx/L)` and a tail
/// `[p(L) + Σ γ_j t^j] e^{-t²/2}` with `t = x - L`, all with complex
/// coefficients drawn from ChaCha8 seeded by `seed`.
pub fn random_perturbation(d: &GraphDomain, weights: &NormWeights, seed: u64) -> Result<ComplexFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coef = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let l = d.half_length();
    let c0 = coef();
    let cos: Vec<Complex64> = (0..4).map(|_| coef()).collect();
    let sin: Vec<Complex64> = (0..4).map(|_| coef()).collect();
    let gamma: Vec<Complex64> = (0..3).map(|_| coef()).collect();
    let ring = |x: f64| {
        let mut v = c0;
        for k in 1..=4 {
            let arg = k as f64 * std::f64::consts::PI * x / l;
            v += cos[k - 1] * arg.cos() + sin[k - 1] * arg.sin();
        }
        v
    };
    let at_vertex = ring(l);
    let field = GraphFunction::from_fns(d, ring, |x| {
        let t = x - l;
        let mut p = at_vertex;
        let mut tp = 1.0;
        for g in &gamma {
            tp *= t;
            p += g * tp;
        }
        p * (-0.5 * t * t).exp()
    });
    let norm = weights.norm(&field, d)?;
    Ok(field.scaled(Complex64::new(1.0 / norm, 0.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityResult {
    pub c: f64,
    pub eta: f64,
    pub seed: u64,
    pub sup_distance: f64,
    /// `sup_t d(t) / η` (NaN for `η = 0`).
    pub ratio: f64,
    pub record: TrajectoryRecord,
}

/// Evolves `Θ_c + η p` for a random admissible `p` with `‖p‖ = 1` and reports
/// the largest orbital distance along the run.
pub fn stability_experiment(
    wave: &StandingWave,
    eta: f64,
    cfg: &EvolutionConfig,
    d: &GraphDomain,
    seed: u64,
) -> Result<StabilityResult> {
    if !(0.0..=0.1).contains(&eta) {
        return Err(Error::domain("eta", eta, "[0, 0.1]"));
    }
    let theta = wave.samples(d)?.to_complex();
    let p = random_perturbation(d, &cfg.weights, seed)?;
    let u0 = theta.axpy(Complex64::new(eta, 0.0), &p);
    let record = run(&u0, cfg, d, Some(wave))?;
    if let Some(msg) = &record.failure {
        return Err(Error::Numerical(format!("stability run aborted: {msg}")));
    }
    let sup = record.sup_distance();
    Ok(StabilityResult {
        c: wave.c,
        eta,
        seed,
        sup_distance: sup,
        ratio: if eta > 0.0 { sup / eta } else { f64::NAN },
        record,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NormWeights;
    use std::f64::consts::PI;

    #[test]
    fn truncated_log_regions() {
        for n in [1.0, 5.0, 50.0] {
            assert_eq!(f_trunc(1.0, n).unwrap(), 0.0);
            assert_eq!(f_trunc((2.0 * n + 1.0).exp(), n).unwrap(), n);
            assert_eq!(f_trunc(0.0, n).unwrap(), -n);
        }
        for s in [0.01, 0.5, 2.0, 100.0] {
            assert_eq!(f_trunc(s, 50.0).unwrap(), s.ln());
        }
        assert!(f_trunc(-1e-3, 5.0).is_err());
    }

    #[test]
    fn primitive_is_continuous_and_differentiates_to_f() {
        let n: f64 = 3.0;
        for s in [(-n).exp(), n.exp()] {
            let (a, b) = (f_trunc_primitive(s * (1.0 - 1e-12), n), f_trunc_primitive(s * (1.0 + 1e-12), n));
            assert!((a - b).abs() < 1e-9 * s.max(1.0));
        }
        for s in [0.01, 0.3, 1.0, 7.0, 40.0] {
            let h = 1e-6 * s;
            let fd = (f_trunc_primitive(s + h, n) - f_trunc_primitive(s - h, n)) / (2.0 * h);
            assert!((fd - f_trunc(s, n).unwrap()).abs() < 1e-6);
        }
    }

    fn small_setup() -> (StandingWave, GraphDomain) {
        StandingWave::build(0.0, PI, 2e-2).unwrap()
    }

    #[test]
    fn zero_stays_zero() {
        let (_, d) = small_setup();
        let cfg = EvolutionConfig::default();
        let z = ComplexFunction::zeros(&d);
        let next = step(&z, &cfg, VertexCondition::neumann_kirchhoff(), &d).unwrap();
        assert_eq!(next.max_abs(), 0.0);
    }

    #[test]
    fn delta_vertex_is_rejected() {
        let (_, d) = small_setup();
        let err = Evolver::new(EvolutionConfig::default(), VertexCondition::delta(1.0).unwrap(), &d);
        assert!(err.is_err());
    }

    #[test]
    fn single_step_conserves_mass() {
        let (w, d) = small_setup();
        let cfg = EvolutionConfig::default();
        let ev = Evolver::new(cfg, VertexCondition::neumann_kirchhoff(), &d).unwrap();
        let p = random_perturbation(&d, &NormWeights::default(), 3).unwrap();
        let u0 = w.samples(&d).unwrap().to_complex().axpy(Complex64::new(0.1, 0.0), &p);
        let v0 = ev.restrict(&u0).unwrap();
        let (v1, info) = ev.step_unknowns(&v0).unwrap();
        assert!(info.iterations <= 10);
        let (m0, m1) = (ev.mass(&v0), ev.mass(&v1));
        assert!(((m1 - m0) / m0).abs() < 1e-11);
    }

    #[test]
    fn orbital_distance_phase_invariance_and_zero_on_orbit() {
        let (w, d) = small_setup();
        let weights = NormWeights::default();
        let theta = w.samples(&d).unwrap().to_complex();
        let rotated = theta.scaled(Complex64::from_polar(1.0, 1.234));
        assert!(orbital_distance(&rotated, &w, &weights, &d).unwrap() < 1e-12);
        let p = random_perturbation(&d, &weights, 9).unwrap();
        let u = theta.axpy(Complex64::new(0.05, 0.0), &p);
        let base = orbital_distance(&u, &w, &weights, &d).unwrap();
        let turned = orbital_distance(&u.scaled(Complex64::from_polar(1.0, -2.5)), &w, &weights, &d).unwrap();
        assert!((base - turned).abs() < 1e-12);
    }

    #[test]
    fn perturbation_is_normalized_continuous_and_reproducible() {
        let (_, d) = small_setup();
        let weights = NormWeights::default();
        let p = random_perturbation(&d, &weights, 42).unwrap();
        assert!((weights.norm(&p, &d).unwrap() - 1.0).abs() < 1e-12);
        let n = d.n_ring();
        assert!((p.ring[0] - p.ring[n]).norm() < 1e-12);
        assert!((p.ring[n] - p.tail[0]).norm() < 1e-12);
        assert_eq!(p, random_perturbation(&d, &weights, 42).unwrap());
        assert_ne!(p, random_perturbation(&d, &weights, 43).unwrap());
    }

    #[test]
    fn config_validation() {
        let mut cfg = EvolutionConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.dt = 0.0;
        assert!(cfg.validate().is_err());
        cfg.dt = 1e-3;
        cfg.n_trunc = 0.5;
        assert!(cfg.validate().is_err());
    }
}
