//! Run parameters shared by the command-line front end and the verification suite.

use std::f64::consts::{E, PI};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::EvolutionConfig;
use crate::graph::{GraphDomain, NormWeights, VertexCondition};
use crate::phase_plane;
use crate::profile::{assemble_standing_wave, StandingWave};
use crate::spectral::{delta_tail_length, transcendental_rho, OperatorKind};

/// Grid description. Explicit node counts and half-line length override the
/// values derived from the spacing `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub h: f64,
    pub ring: Option<usize>,
    pub tail: Option<usize>,
    #[serde(rename = "R")]
    pub r: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            h: 1e-3,
            ring: None,
            tail: None,
            r: None,
        }
    }
}

impl GridConfig {
    /// Grid on a tadpole with half-length `l`, using `default_r` unless a
    /// half-line length was given.
    pub fn domain(&self, l: f64, default_r: f64) -> Result<GraphDomain> {
        let r = self.r.unwrap_or(default_r);
        let base = GraphDomain::with_spacing(l, r, self.h)?;
        GraphDomain::new(
            l,
            r,
            self.ring.unwrap_or(base.n_ring()),
            self.tail.unwrap_or(base.n_tail()),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            from: 0.05,
            to: E - 0.01,
            points: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(Error::Argument(format!("unknown format '{other}'"))),
        }
    }
}

/// Every tunable parameter of every subcommand, all defaulted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub c: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    pub grid: GridConfig,
    pub operator: OperatorKind,
    /// Number of eigenpairs requested from the spectral solver.
    pub pairs: usize,
    pub dt: f64,
    pub t_end: f64,
    pub eta: f64,
    pub n_trunc: f64,
    pub seed: u64,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub record_every: usize,
    pub weights: NormWeights,
    pub scan: ScanConfig,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        let evo = EvolutionConfig::default();
        Self {
            c: 0.0,
            l: PI,
            z: 0.0,
            grid: GridConfig::default(),
            operator: OperatorKind::L1,
            pairs: 4,
            dt: evo.dt,
            t_end: evo.t_end,
            eta: 1e-2,
            n_trunc: evo.n_trunc,
            seed: 42,
            fp_tol: evo.fp_tol,
            fp_max_iter: evo.fp_max_iter,
            record_every: evo.record_every,
            weights: evo.weights,
            scan: ScanConfig::default(),
            out: None,
            format: OutputFormat::Json,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Argument(format!("invalid config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn evolution(&self) -> EvolutionConfig {
        EvolutionConfig {
            dt: self.dt,
            t_end: self.t_end,
            n_trunc: self.n_trunc,
            fp_tol: self.fp_tol,
            fp_max_iter: self.fp_max_iter,
            record_every: self.record_every,
            weights: self.weights,
        }
    }

    pub fn vertex(&self) -> Result<VertexCondition> {
        VertexCondition::from_strength(self.z)
    }

    /// Standing wave at `(c, L)` on the configured grid; the half-line
    /// defaults to `a + 8`.
    pub fn wave(&self) -> Result<(StandingWave, GraphDomain)> {
        let r0 = phase_plane::solve_match(self.l)?;
        let a = phase_plane::shift_from_r0(r0)?;
        let d = self.grid.domain(self.l, a.max(0.0) + crate::graph::DEFAULT_TAIL_MARGIN)?;
        Ok((assemble_standing_wave(self.c, self.l, &d)?, d))
    }

    /// Grid for the linear Laplacian `-Δ_Z`: long enough for the bound state
    /// to decay when `Z > 0`.
    pub fn laplacian_domain(&self) -> Result<GraphDomain> {
        let r = if self.z > 0.0 {
            delta_tail_length(transcendental_rho(self.z, self.l)?)
        } else {
            10.0
        };
        self.grid.domain(self.l, r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l > 0.0 && self.l.is_finite()) {
            return Err(Error::domain("L", self.l, "(0, inf)"));
        }
        if !self.c.is_finite() {
            return Err(Error::domain("c", self.c, "finite"));
        }
        if !self.z.is_finite() {
            return Err(Error::domain("Z", self.z, "finite"));
        }
        if !(self.grid.h > 0.0) {
            return Err(Error::domain("h", self.grid.h, "(0, inf)"));
        }
        if self.pairs == 0 {
            return Err(Error::Argument("pairs must be positive".into()));
        }
        if !(0.0..=0.1).contains(&self.eta) {
            return Err(Error::domain("eta", self.eta, "[0, 0.1]"));
        }
        self.evolution().validate()
    }
}
