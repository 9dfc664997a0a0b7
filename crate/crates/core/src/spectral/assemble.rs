//! Piecewise-linear discretization of the quadratic forms
//! `B(u, v) = ∫ u'v' + ∫ V u v - Z u(L) v(L)` with lumped mass.
//!
//! Unknowns are ordered so that every matrix is tridiagonal except for one
//! trailing "border" unknown (the vertex, or the glued node of a periodic
//! ring). That arrow shape keeps factorization and inertia counts linear in
//! the grid size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphDomain, GraphFunction, VertexCondition};
use crate::profile::StandingWave;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    /// `-∂² + (c-2) - log φ_c²` on the ring, `-∂² + (x-L+a)² - 3` on the half-line.
    L1,
    /// `-∂² + c - log φ_c²` on the ring, `-∂² + (x-L+a)² - 1` on the half-line.
    L2,
    /// `-Δ_Z`.
    Laplacian,
    /// Ring part of `L1` with periodic conditions.
    PeriodicRing,
    /// Half-line part of `L1` with a Neumann end at the vertex.
    NeumannHalfLine,
}

impl std::str::FromStr for OperatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Self::L1),
            "l2" => Ok(Self::L2),
            "laplacian" => Ok(Self::Laplacian),
            "periodic" | "periodic-ring" => Ok(Self::PeriodicRing),
            "halfline" | "half-line" | "neumann-half-line" => Ok(Self::NeumannHalfLine),
            other => Err(Error::Argument(format!("unknown operator '{other}'"))),
        }
    }
}

/// How unknowns map back to grid nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Layout {
    /// Ring interior, tail interior, vertex last; far tail end is Dirichlet.
    Tadpole { n_ring: usize, n_tail: usize },
    /// Nodes `1..n` of a periodic ring, node 0 last.
    Periodic { n: usize },
    /// Interior nodes of `[0, R]`, node 0 last; `R` is Dirichlet.
    HalfLine { n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatorMeta {
    pub c: Option<f64>,
    pub l: f64,
    pub r: f64,
    pub n_ring: usize,
    pub n_tail: usize,
    pub h: f64,
}

/// Symmetric stiffness `K` and lumped mass `M` of one operator.
///
/// `K` is stored as a weighted edge list plus a diagonal remainder,
/// `vᵀKv = Σ w (v_i - v_j)² + Σ s_i v_i²`, which is symmetric by
/// construction and lets the form be evaluated without cancellation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorMatrix {
    pub kind: OperatorKind,
    pub vc: VertexCondition,
    pub layout: Layout,
    pub meta: OperatorMeta,
    pub mass_diag: Vec<f64>,
    /// Nodal potential (mass-weighted average at shared nodes).
    pub potential: Vec<f64>,
    pub(crate) edges: Vec<(usize, usize, f64)>,
    pub(crate) shift: Vec<f64>,
    /// Largest `|V|` on the edges where the potential is intrinsic (ring and
    /// vertex for the graph operators); sets the zero-eigenvalue tolerance.
    pub potential_scale: f64,
}

/// Arrow-matrix view: tridiagonal chain of length `n-1` plus a border row.
#[derive(Debug, Clone)]
pub(crate) struct Arrow {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    pub border: Vec<f64>,
}

struct Builder {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    shift: Vec<f64>,
    mass: Vec<f64>,
    pot_mass: Vec<f64>,
}

impl Builder {
    fn new(n: usize) -> Self {
        Self {
            n,
            edges: Vec::with_capacity(n + 2),
            shift: vec![0.0; n],
            mass: vec![0.0; n],
            pot_mass: vec![0.0; n],
        }
    }

    /// One P1 cell between nodes `p` and `q` (`None` = Dirichlet zero).
    fn cell(&mut self, p: Option<usize>, q: Option<usize>, h: f64, vp: f64, vq: f64) {
        let w = 1.0 / h;
        match (p, q) {
            (Some(i), Some(j)) => self.edges.push((i.min(j), i.max(j), w)),
            (Some(i), None) | (None, Some(i)) => self.shift[i] += w,
            (None, None) => {}
        }
        for (node, v) in [(p, vp), (q, vq)] {
            if let Some(i) = node {
                self.mass[i] += 0.5 * h;
                self.pot_mass[i] += 0.5 * h * v;
            }
        }
    }

    fn finish(
        mut self,
        kind: OperatorKind,
        vc: VertexCondition,
        layout: Layout,
        meta: OperatorMeta,
        potential_scale: f64,
    ) -> OperatorMatrix {
        for i in 0..self.n {
            self.shift[i] += self.pot_mass[i];
        }
        let potential = self.pot_mass.iter().zip(&self.mass).map(|(p, m)| p / m).collect();
        OperatorMatrix {
            kind,
            vc,
            layout,
            meta,
            mass_diag: self.mass,
            potential,
            edges: self.edges,
            shift: self.shift,
            potential_scale,
        }
    }
}

fn ring_potential(kind: OperatorKind, wave: &StandingWave) -> impl Fn(f64) -> f64 {
    let offset = match kind {
        OperatorKind::L2 => wave.c,
        _ => wave.c - 2.0,
    };
    move |phi_c: f64| offset - (phi_c * phi_c).ln()
}

fn tail_offset(kind: OperatorKind) -> f64 {
    match kind {
        OperatorKind::L2 => -1.0,
        _ => -3.0,
    }
}

/// Assembles `kind` on the tadpole. `L1` and `L2` need the wave; the
/// Laplacian uses `vc`; the Kirchhoff flux balance is natural to the form.
pub fn assemble(
    kind: OperatorKind,
    vc: VertexCondition,
    wave: Option<&StandingWave>,
    d: &GraphDomain,
) -> Result<OperatorMatrix> {
    match kind {
        OperatorKind::PeriodicRing => {
            let w = wave.ok_or_else(|| Error::Argument("periodic ring operator needs a standing wave".into()))?;
            return assemble_periodic_ring(w, d);
        }
        OperatorKind::NeumannHalfLine => {
            let w = wave.ok_or_else(|| Error::Argument("half-line operator needs a standing wave".into()))?;
            return assemble_half_line(w.a(), d.tail_length(), d.n_tail());
        }
        _ => {}
    }
    let (nr, nt) = (d.n_ring(), d.n_tail());
    let (hr, ht) = (d.h_ring(), d.h_tail());
    let n = (nr - 1) + (nt - 1) + 1;
    let vertex = n - 1;
    let ring_id = |i: usize| if i == 0 || i == nr { Some(vertex) } else { Some(i - 1) };
    let tail_id = |j: usize| {
        if j == 0 {
            Some(vertex)
        } else if j == nt {
            None
        } else {
            Some(nr - 1 + j - 1)
        }
    };

    let (ring_v, tail_v, c): (Vec<f64>, Vec<f64>, Option<f64>) = match kind {
        OperatorKind::Laplacian => (vec![0.0; nr + 1], vec![0.0; nt + 1], None),
        _ => {
            let w = wave.ok_or_else(|| Error::Argument(format!("{kind:?} needs a standing wave")))?;
            let u = w.samples(d)?;
            let pot = ring_potential(kind, w);
            let off = tail_offset(kind);
            let l = d.half_length();
            let a = w.a();
            (
                u.ring.iter().map(|&p| pot(p)).collect(),
                d.tail_points().map(|x| (x - l + a).powi(2) + off).collect(),
                Some(w.c),
            )
        }
    };
    let vc = if kind == OperatorKind::Laplacian { vc } else { VertexCondition::neumann_kirchhoff() };

    let mut b = Builder::new(n);
    for i in 0..nr {
        b.cell(ring_id(i), ring_id(i + 1), hr, ring_v[i], ring_v[i + 1]);
    }
    for j in 0..nt {
        b.cell(tail_id(j), tail_id(j + 1), ht, tail_v[j], tail_v[j + 1]);
    }
    b.shift[vertex] -= vc.strength();

    let scale = ring_v.iter().chain(std::iter::once(&tail_v[0])).fold(0.0_f64, |m, v| m.max(v.abs()));
    let meta = OperatorMeta {
        c,
        l: d.half_length(),
        r: d.tail_length(),
        n_ring: nr,
        n_tail: nt,
        h: d.h_max(),
    };
    Ok(b.finish(kind, vc, Layout::Tadpole { n_ring: nr, n_tail: nt }, meta, scale))
}

/// Ring part of `L1` on `[-L, L]` with `f(-L) = f(L)`, `f'(-L) = f'(L)`.
pub fn assemble_periodic_ring(wave: &StandingWave, d: &GraphDomain) -> Result<OperatorMatrix> {
    let u = wave.samples(d)?;
    let pot = ring_potential(OperatorKind::L1, wave);
    let v: Vec<f64> = u.ring.iter().map(|&p| pot(p)).collect();
    periodic_from_potential(&v, d.half_length(), Some(wave.c))
}

/// Periodic ring operator `-∂² + V` for nodal `V` on `n+1` ring nodes (`V[0] = V[n]`).
pub fn periodic_from_potential(v: &[f64], l: f64, c: Option<f64>) -> Result<OperatorMatrix> {
    let n = v.len() - 1;
    if n < 8 {
        return Err(Error::Argument("periodic ring needs at least 8 cells".into()));
    }
    let h = 2.0 * l / n as f64;
    let id = |i: usize| if i == 0 || i == n { Some(n - 1) } else { Some(i - 1) };
    let mut b = Builder::new(n);
    for i in 0..n {
        b.cell(id(i), id(i + 1), h, v[i], v[i + 1]);
    }
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let meta = OperatorMeta {
        c,
        l,
        r: 0.0,
        n_ring: n,
        n_tail: 0,
        h,
    };
    Ok(b.finish(
        OperatorKind::PeriodicRing,
        VertexCondition::neumann_kirchhoff(),
        Layout::Periodic { n },
        meta,
        scale,
    ))
}

/// `-∂² + (t+a)² - 3` on `[0, R]`, Neumann at 0 and Dirichlet at `R`.
/// With `a = 0` this is the half-line harmonic oscillator shifted by `-3`.
pub fn assemble_half_line(a: f64, r: f64, n: usize) -> Result<OperatorMatrix> {
    if n < 8 || !(r > 0.0) {
        return Err(Error::Argument(format!("half-line needs R > 0 and at least 8 cells (R = {r}, n = {n})")));
    }
    let h = r / n as f64;
    let id = |j: usize| {
        if j == 0 {
            Some(n - 1)
        } else if j == n {
            None
        } else {
            Some(j - 1)
        }
    };
    let v = |j: usize| (j as f64 * h + a).powi(2) - 3.0;
    let mut b = Builder::new(n);
    for j in 0..n {
        b.cell(id(j), id(j + 1), h, v(j), v(j + 1));
    }
    let meta = OperatorMeta {
        c: None,
        l: 0.0,
        r,
        n_ring: 0,
        n_tail: n,
        h,
    };
    // the potential is confining by design; its size at the vertex sets the scale
    let scale = v(0).abs().max(1.0);
    Ok(b.finish(
        OperatorKind::NeumannHalfLine,
        VertexCondition::neumann_kirchhoff(),
        Layout::HalfLine { n },
        meta,
        scale,
    ))
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.mass_diag.len()
    }

    /// `vᵀ K w`.
    pub fn form(&self, v: &[f64], w: &[f64]) -> f64 {
        let mut acc = 0.0;
        for &(i, j, c) in &self.edges {
            acc += c * (v[i] - v[j]) * (w[i] - w[j]);
        }
        acc + self.shift.iter().zip(v).zip(w).map(|((s, a), b)| s * a * b).sum::<f64>()
    }

    /// `K v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.shift.iter().zip(v).map(|(s, x)| s * x).collect();
        for &(i, j, c) in &self.edges {
            let t = c * (v[i] - v[j]);
            out[i] += t;
            out[j] -= t;
        }
        out
    }

    /// `vᵀ M w`.
    pub fn mass_inner(&self, v: &[f64], w: &[f64]) -> f64 {
        self.mass_diag.iter().zip(v).zip(w).map(|((m, a), b)| m * a * b).sum()
    }

    /// Dense `K`, row-major; intended for small grids and tests.
    pub fn dense_stiffness(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut k = vec![vec![0.0; n]; n];
        for (i, s) in self.shift.iter().enumerate() {
            k[i][i] += s;
        }
        for &(i, j, c) in &self.edges {
            k[i][i] += c;
            k[j][j] += c;
            k[i][j] -= c;
            k[j][i] -= c;
        }
        k
    }

    pub(crate) fn arrow(&self) -> Arrow {
        let n = self.dim();
        let border_id = n - 1;
        let mut diag = self.shift.clone();
        let mut off = vec![0.0; n.saturating_sub(2)];
        let mut border = vec![0.0; n - 1];
        for &(i, j, c) in &self.edges {
            diag[i] += c;
            diag[j] += c;
            if j == border_id {
                border[i] -= c;
            } else {
                debug_assert_eq!(j, i + 1, "edge outside the arrow pattern");
                off[i] -= c;
            }
        }
        Arrow { diag, off, border }
    }

    /// Restricts a tadpole function to the unknowns (drops duplicate and
    /// Dirichlet nodes).
    pub fn restrict<T: Scalar>(&self, u: &GraphFunction<T>) -> Result<Vec<T>> {
        let Layout::Tadpole { n_ring, n_tail } = self.layout else {
            return Err(Error::Argument("restrict is defined for tadpole operators".into()));
        };
        if u.ring.len() != n_ring + 1 || u.tail.len() != n_tail + 1 {
            return Err(Error::Dimension {
                what: "graph function for operator",
                expected: n_ring + n_tail + 2,
                got: u.ring.len() + u.tail.len(),
            });
        }
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(&u.ring[1..n_ring]);
        v.extend_from_slice(&u.tail[1..n_tail]);
        v.push(u.tail[0]);
        Ok(v)
    }

    /// Inverse of [`restrict`](Self::restrict) for tadpole operators.
    pub fn to_graph_function<T: Scalar>(&self, v: &[T]) -> Result<GraphFunction<T>> {
        let Layout::Tadpole { n_ring, n_tail } = self.layout else {
            return Err(Error::Argument("graph functions exist only for tadpole operators".into()));
        };
        let vert = v[v.len() - 1];
        let mut ring = Vec::with_capacity(n_ring + 1);
        ring.push(vert);
        ring.extend_from_slice(&v[..n_ring - 1]);
        ring.push(vert);
        let mut tail = Vec::with_capacity(n_tail + 1);
        tail.push(vert);
        tail.extend_from_slice(&v[n_ring - 1..n_ring - 1 + n_tail - 1]);
        tail.push(T::zero());
        Ok(GraphFunction { ring, tail })
    }

    /// Nodal values along the edge grid, in coordinate order.
    pub fn nodal(&self, v: &[f64]) -> Vec<f64> {
        match self.layout {
            Layout::Tadpole { .. } => {
                let f = self.to_graph_function(v).expect("tadpole layout");
                f.ring.into_iter().chain(f.tail).collect()
            }
            Layout::Periodic { n } => {
                let mut out = Vec::with_capacity(n + 1);
                out.push(v[n - 1]);
                out.extend_from_slice(&v[..n - 1]);
                out.push(v[n - 1]);
                out
            }
            Layout::HalfLine { n } => {
                let mut out = Vec::with_capacity(n + 1);
                out.push(v[n - 1]);
                out.extend_from_slice(&v[..n - 1]);
                out.push(0.0);
                out
            }
        }
    }

    /// Index of the vertex (border) unknown.
    pub fn border_index(&self) -> usize {
        self.dim() - 1
    }
}
