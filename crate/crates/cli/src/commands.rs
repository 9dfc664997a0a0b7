use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use serde_json::json;
use tadpole_nls::config::{OutputFormat, RunConfig};
use tadpole_nls::evolution::{self, random_perturbation, stability_experiment, TrajectoryRecord};
use tadpole_nls::graph::GraphDomain;
use tadpole_nls::num_complex::Complex64;
use tadpole_nls::phase_plane::period_scan;
use tadpole_nls::profile::functionals;
use tadpole_nls::report::{emit, to_json_string, CsvCell, CsvTable, ReportBundle};
use tadpole_nls::spectral::{assemble, eigen_lowest, OperatorKind};
use tadpole_nls::verify::{self, Settings};
use tadpole_nls::Error;

use crate::{Command, Overrides};

const DEFAULT_OUT_DIR: &str = "nlslog-out";

/// Exit status for invalid input.
const USAGE: u8 = 2;
/// Exit status for numerical failures and failed checks.
const FAILURE: u8 = 1;

pub fn dispatch(cmd: Command, opts: &Overrides) -> ExitCode {
    let outcome = load_config(opts).and_then(|cfg| run(cmd, &cfg));
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(FAILURE),
        Err(err) => {
            let (code, kind) = match err.downcast_ref::<Error>() {
                Some(e) if e.is_input_error() => (USAGE, e.kind()),
                Some(e) => (FAILURE, e.kind()),
                None => (FAILURE, "other"),
            };
            let diag = json!({
                "error": kind,
                "message": format!("{err:#}"),
                "exit_code": code,
            });
            eprint!("{}", to_json_string(&diag));
            ExitCode::from(code)
        }
    }
}

fn load_config(o: &Overrides) -> anyhow::Result<RunConfig> {
    let mut cfg = match &o.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($($src:ident => $($dst:ident).+),* $(,)?) => {
            $(if let Some(v) = o.$src.clone() { cfg.$($dst).+ = v; })*
        };
    }
    set!(c => c, l => l, z => z, h => grid.h, dt => dt, t_end => t_end, eta => eta,
         n_trunc => n_trunc, seed => seed, pairs => pairs, from => scan.from, to => scan.to,
         points => scan.points);
    if o.grid_ring.is_some() {
        cfg.grid.ring = o.grid_ring;
    }
    if o.grid_tail.is_some() {
        cfg.grid.tail = o.grid_tail;
    }
    if o.r.is_some() {
        cfg.grid.r = o.r;
    }
    if let Some(op) = &o.operator {
        cfg.operator = op.parse::<OperatorKind>()?;
    }
    if let Some(f) = &o.format {
        cfg.format = f.parse::<OutputFormat>()?;
    }
    if o.out.is_some() {
        cfg.out = o.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cmd: Command, cfg: &RunConfig) -> anyhow::Result<bool> {
    let (stem, bundle, primary) = match cmd {
        Command::Profile => ("profile", profile(cfg)?, "profile"),
        Command::PeriodScan => ("period_scan", scan(cfg)?, "scan"),
        Command::Spectrum => ("spectrum", spectrum(cfg)?, "eigenvalues"),
        Command::Evolve => ("evolve", evolve(cfg)?, "series"),
        Command::Stability => ("stability", stability(cfg)?, "series"),
        Command::VerifyAll { only } => ("verify", verify_all(cfg, &only)?, "checks"),
    };
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let written = emit(&bundle, &dir, stem)?;
    match cfg.format {
        OutputFormat::Json => print!("{}", to_json_string(&bundle.json_value())),
        OutputFormat::Csv => {
            let table = if primary == "checks" {
                Some(bundle.check_table())
            } else {
                bundle.tables.get(primary).cloned()
            };
            print!("{}", table.map(|t| t.render()).unwrap_or_default());
        }
    }
    for path in written {
        eprintln!("wrote {}", path.display());
    }
    if let Some(msg) = bundle.json.get("failure").and_then(|v| v.as_str()) {
        return Err(anyhow!(Error::Numerical(msg.to_string())));
    }
    Ok(bundle.all_passed())
}

fn profile(cfg: &RunConfig) -> anyhow::Result<ReportBundle> {
    let (wave, d) = cfg.wave()?;
    let u = wave.samples(&d)?;
    let f = functionals(&u, cfg.c, &d)?;
    let mut b = ReportBundle::default();
    b.insert("c", cfg.c);
    b.insert("L", cfg.l);
    b.insert("r0", wave.r0());
    b.insert("a", wave.a());
    b.insert("mass", f.mass);
    b.insert("energy", f.energy);
    b.insert("action", f.action);
    b.insert("grid", grid_json(&d));
    let mut t = CsvTable::new(&["edge_id", "x", "re", "im"]);
    for (x, v) in d.ring_points().zip(&u.ring) {
        t.push(vec![CsvCell::Text("ring".into()), CsvCell::Num(x), CsvCell::Num(*v), CsvCell::Num(0.0)]);
    }
    for (x, v) in d.tail_points().zip(&u.tail) {
        t.push(vec![CsvCell::Text("tail".into()), CsvCell::Num(x), CsvCell::Num(*v), CsvCell::Num(0.0)]);
    }
    b.tables.insert("profile".into(), t);
    Ok(b)
}

fn scan(cfg: &RunConfig) -> anyhow::Result<ReportBundle> {
    let s = cfg.scan;
    let samples = period_scan(s.from, s.to, s.points)?;
    let mut t = CsvTable::new(&["r0", "T", "Tprime", "r_plus", "E0"]);
    for p in &samples {
        t.push_nums(&[p.r0, p.period, p.derivative, p.r_plus, p.e0]);
    }
    let mut b = ReportBundle::default();
    b.insert("scan", s);
    b.insert("strictly_decreasing", samples.windows(2).all(|w| w[1].period < w[0].period));
    b.tables.insert("scan".into(), t);
    Ok(b)
}

fn spectrum(cfg: &RunConfig) -> anyhow::Result<ReportBundle> {
    let vc = cfg.vertex()?;
    let (op, d) = match cfg.operator {
        OperatorKind::Laplacian => {
            let d = cfg.laplacian_domain()?;
            (assemble(OperatorKind::Laplacian, vc, None, &d)?, d)
        }
        kind => {
            if cfg.z != 0.0 {
                return Err(Error::Argument("standing waves exist only for Z = 0".into()).into());
            }
            let (wave, d) = cfg.wave()?;
            (assemble(kind, vc, Some(&wave), &d)?, d)
        }
    };
    let rep = eigen_lowest(&op, cfg.pairs)?;
    let mut b = ReportBundle::default();
    b.insert("operator", cfg.operator);
    b.insert("c", cfg.c);
    b.insert("L", cfg.l);
    b.insert("Z", cfg.z);
    b.insert("eigenvalues", &rep.eigenvalues);
    b.insert("morse_index", rep.morse_index);
    b.insert("nullity", rep.nullity);
    b.insert(
        "diagnostics",
        json!({
            "tol_null": rep.tol_null,
            "residuals": rep.residuals,
            "image_norms": rep.image_norms,
            "worst_relative_residual": rep.worst_relative_residual(),
            "grid": grid_json(&d),
        }),
    );
    let mut ev = CsvTable::new(&["index", "eigenvalue"]);
    for (k, l) in rep.eigenvalues.iter().enumerate() {
        ev.push(vec![CsvCell::Int(k as i64), CsvCell::Num(*l)]);
    }
    b.tables.insert("eigenvalues".into(), ev);
    if cfg.format == OutputFormat::Csv {
        let header: Vec<String> = (0..rep.eigenvectors.len()).map(|k| format!("v{k}")).collect();
        let mut cols: Vec<&str> = vec!["node"];
        cols.extend(header.iter().map(String::as_str));
        let mut vt = CsvTable::new(&cols);
        let nodal: Vec<Vec<f64>> = rep.eigenvectors.iter().map(|v| op.nodal(v)).collect();
        for i in 0..nodal.first().map_or(0, Vec::len) {
            let mut row = vec![CsvCell::Int(i as i64)];
            row.extend(nodal.iter().map(|v| CsvCell::Num(v[i])));
            vt.push(row);
        }
        b.tables.insert("eigenvectors".into(), vt);
    }
    Ok(b)
}

fn trajectory_table(rec: &TrajectoryRecord) -> CsvTable {
    let mut t = CsvTable::new(&["t", "mass", "energy", "d"]);
    for i in 0..rec.times.len() {
        t.push_nums(&[rec.times[i], rec.mass[i], rec.energy[i], rec.distance[i]]);
    }
    t
}

fn trajectory_summary(b: &mut ReportBundle, rec: &TrajectoryRecord) {
    b.insert("mass_drift", rec.mass_drift());
    b.insert("energy_drift", rec.energy_drift());
    b.insert("sup_distance", rec.sup_distance());
    b.insert("max_fp_iterations", rec.max_fp_iterations);
    b.insert("truncation_mismatches", rec.truncation_mismatches);
    if let Some(msg) = &rec.failure {
        b.insert("failure", msg);
    }
}

fn evolve(cfg: &RunConfig) -> anyhow::Result<ReportBundle> {
    let (wave, d) = cfg.wave()?;
    let evo = cfg.evolution();
    let p = random_perturbation(&d, &evo.weights, cfg.seed)?;
    let u0 = wave.samples(&d)?.to_complex().axpy(Complex64::new(cfg.eta, 0.0), &p);
    let rec = evolution::run(&u0, &evo, &d, Some(&wave))?;
    let mut b = ReportBundle::default();
    b.insert("config", cfg);
    trajectory_summary(&mut b, &rec);
    b.tables.insert("series".into(), trajectory_table(&rec));
    Ok(b)
}

fn stability(cfg: &RunConfig) -> anyhow::Result<ReportBundle> {
    let (wave, d) = cfg.wave()?;
    let res = stability_experiment(&wave, cfg.eta, &cfg.evolution(), &d, cfg.seed)?;
    let mut b = ReportBundle::default();
    b.insert("config", cfg);
    b.insert("ratio", res.ratio);
    trajectory_summary(&mut b, &res.record);
    b.tables.insert("series".into(), trajectory_table(&res.record));
    Ok(b)
}

fn verify_all(cfg: &RunConfig, only: &[usize]) -> anyhow::Result<ReportBundle> {
    let ids = if only.is_empty() { verify::all_ids() } else { only.to_vec() };
    let settings = Settings {
        h: cfg.grid.h,
        evolution_h: cfg.grid.h,
        dt: cfg.dt,
        seed: cfg.seed,
        weights: cfg.weights,
    };
    Ok(ReportBundle {
        checks: verify::run_checks(&ids, &settings, |rec| eprintln!("{}", rec.summary_line())),
        ..ReportBundle::default()
    })
}

fn grid_json(d: &GraphDomain) -> serde_json::Value {
    json!({
        "L": d.half_length(),
        "R": d.tail_length(),
        "n_ring": d.n_ring(),
        "n_tail": d.n_tail(),
        "h_ring": d.h_ring(),
        "h_tail": d.h_tail(),
    })
}
