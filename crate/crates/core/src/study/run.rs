//! Runners for each study kind.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{InitKind, NormKind, Reference, Series, StudyConfig, StudyKind};
use crate::diagnostics::{diagnose, predict_order, OrderPrediction, ProjectionCase};
use crate::error::{Error, Result};
use crate::field::DGFunction;
use crate::flux::{check_stability, FluxParams, StabilityClass};
use crate::imex::{IMEXTableau, Integrator};
use crate::measure::{measure_error, measure_error_with, ErrorReport};
use crate::mesh::Mesh1D;
use crate::operator::{assemble_linear, energy};
use crate::problems::BuiltinProblem;
use crate::projection::{l2_project, project_p1, project_star, SmoothFunction};

/// Test functions of the projection studies.
pub fn test_function(id: &str) -> Result<SmoothFunction> {
    match id {
        "cos" => Ok(SmoothFunction::cos()),
        "exp_cos" => Ok(SmoothFunction::exp_cos()),
        "plane_wave" => Ok(SmoothFunction::plane_wave(1.0)),
        _ => Err(Error::Config(format!(
            "unknown function '{id}', expected cos, exp_cos or plane_wave"
        ))),
    }
}

/// Rounds to 4 significant digits, the precision written to tables.
pub fn round4(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.3e}").parse().unwrap_or(x)
}

/// Observed order between two meshes of the same domain.
pub fn observed_order(e0: f64, e1: f64, n0: usize, n1: usize) -> f64 {
    (e0 / e1).ln() / (n1 as f64 / n0 as f64).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    NonExistent,
}

/// One `(k, N)` leg of an error table.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub series: String,
    pub k: usize,
    pub n: usize,
    pub h: f64,
    pub status: RowStatus,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub linf: Option<f64>,
    pub order_l1: Option<f64>,
    pub order_l2: Option<f64>,
    pub order_linf: Option<f64>,
    pub paper_l2: Option<f64>,
    pub paper_order: Option<f64>,
    pub note: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyTable {
    pub title: String,
    pub kind: StudyKind,
    pub norm: NormKind,
    pub reference: Reference,
    pub rows: Vec<TableRow>,
}

fn fmt_err(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |x| format!("{x:.3E}"))
}

fn fmt_order(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |x| format!("{x:.2}"))
}

impl StudyTable {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "series",
            "k",
            "n",
            "h",
            "status",
            "l1",
            "l2",
            "linf",
            "order_l1",
            "order_l2",
            "order_linf",
            "paper_l2",
            "paper_order",
        ])?;
        for r in &self.rows {
            out.write_record([
                r.series.clone(),
                r.k.to_string(),
                r.n.to_string(),
                format!("{:.6E}", r.h),
                match r.status {
                    RowStatus::Ok => "ok".into(),
                    RowStatus::NonExistent => "nonexistent".into(),
                },
                fmt_err(r.l1),
                fmt_err(r.l2),
                fmt_err(r.linf),
                fmt_order(r.order_l1),
                fmt_order(r.order_l2),
                fmt_order(r.order_linf),
                fmt_err(r.paper_l2),
                fmt_order(r.paper_order),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Plain-text table with the reference columns last.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.title);
        s.push_str(&format!(
            "{:<10} {:>6} {:>11} {:>6} {:>11} {:>6} {:>11} {:>6} {:>11} {:>6}\n",
            "series", "N", "L1", "order", "L2", "order", "Linf", "order", "paper L2", "order"
        ));
        for r in &self.rows {
            if r.status == RowStatus::NonExistent {
                s.push_str(&format!(
                    "{:<10} {:>6}   projection does not exist{}\n",
                    r.series,
                    r.n,
                    r.note.as_deref().map(|n| format!(": {n}")).unwrap_or_default()
                ));
                continue;
            }
            s.push_str(&format!(
                "{:<10} {:>6} {:>11} {:>6} {:>11} {:>6} {:>11} {:>6} {:>11} {:>6}\n",
                r.series,
                r.n,
                fmt_err(r.l1),
                fmt_order(r.order_l1),
                fmt_err(r.l2),
                fmt_order(r.order_l2),
                fmt_err(r.linf),
                fmt_order(r.order_linf),
                fmt_err(r.paper_l2),
                fmt_order(r.paper_order),
            ));
        }
        s
    }
}

struct Leg<'a> {
    series: &'a Series,
    index: usize,
}

fn legs(cfg: &StudyConfig) -> Vec<Leg<'_>> {
    cfg.series
        .iter()
        .flat_map(|s| (0..s.n.len()).map(move |index| Leg { series: s, index }))
        .collect()
}

fn uniform_mesh(cfg: &StudyConfig, n: usize) -> Result<Arc<Mesh1D>> {
    let (a, b) = cfg.resolved_domain()?;
    Ok(Arc::new(Mesh1D::uniform(a, b, n)?))
}

fn normalize(e: ErrorReport, norm: NormKind, length: f64) -> ErrorReport {
    match norm {
        NormKind::Raw => e,
        NormKind::Normalized => ErrorReport {
            l1: e.l1 / length,
            l2: e.l2 / length.sqrt(),
            linf: e.linf,
        },
    }
}

type LegOutcome = Result<std::result::Result<ErrorReport, String>>;

/// Runs every leg concurrently and assembles rows in config order. Orders
/// are computed from the rounded errors so that they can be re-derived from
/// the written table.
fn assemble<F>(cfg: &StudyConfig, run_leg: F) -> Result<StudyTable>
where
    F: Fn(&Series, usize, &Arc<Mesh1D>) -> LegOutcome + Sync,
{
    let legs = legs(cfg);
    let results: Vec<(LegOutcome, f64)> = legs
        .par_iter()
        .map(|leg| {
            let t0 = Instant::now();
            let n = leg.series.n[leg.index];
            let out = uniform_mesh(cfg, n).and_then(|m| run_leg(leg.series, n, &m));
            (out, t0.elapsed().as_secs_f64())
        })
        .collect();
    let (a, b) = cfg.resolved_domain()?;
    let mut rows: Vec<TableRow> = Vec::with_capacity(legs.len());
    for (leg, (out, seconds)) in legs.iter().zip(results) {
        let s = leg.series;
        let n = s.n[leg.index];
        let mut row = TableRow {
            series: s.name.clone(),
            k: s.k,
            n,
            h: (b - a) / n as f64,
            status: RowStatus::Ok,
            l1: None,
            l2: None,
            linf: None,
            order_l1: None,
            order_l2: None,
            order_linf: None,
            paper_l2: s.paper_l2.get(leg.index).copied().flatten(),
            paper_order: s.paper_order.get(leg.index).copied().flatten(),
            note: None,
            seconds,
        };
        match out? {
            Ok(e) => {
                row.l1 = Some(round4(e.l1));
                row.l2 = Some(round4(e.l2));
                row.linf = Some(round4(e.linf));
            }
            Err(note) => {
                row.status = RowStatus::NonExistent;
                row.note = Some(note);
            }
        }
        if leg.index > 0 {
            let prev = rows.last().expect("previous leg of the series");
            let ord = |x: Option<f64>, y: Option<f64>| match (x, y) {
                (Some(x), Some(y)) if x > 0.0 && y > 0.0 => Some(observed_order(x, y, prev.n, n)),
                _ => None,
            };
            row.order_l1 = ord(prev.l1, row.l1);
            row.order_l2 = ord(prev.l2, row.l2);
            row.order_linf = ord(prev.linf, row.linf);
        }
        rows.push(row);
    }
    Ok(StudyTable {
        title: cfg.title.clone(),
        kind: cfg.kind,
        norm: cfg.norm,
        reference: cfg.reference,
        rows,
    })
}

fn difference(a: &DGFunction, b: &DGFunction) -> Result<DGFunction> {
    let c: Vec<Complex64> = a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x - y).collect();
    DGFunction::from_coeffs(a.mesh().clone(), a.k(), c)
}

/// Errors of `P* u` against `u` (or against `P1 u`) per `(k, N)`.
/// Meshes on which the projection does not exist give marked rows.
pub fn run_projection_study(cfg: &StudyConfig) -> Result<StudyTable> {
    if cfg.kind != StudyKind::Projection {
        return Err(Error::Config("not a projection study".into()));
    }
    cfg.validate()?;
    let u = test_function(cfg.function.as_deref().unwrap_or_default())?;
    let length = {
        let (a, b) = cfg.resolved_domain()?;
        b - a
    };
    assemble(cfg, |s, _n, mesh| {
        let p = s.family.at(mesh.h());
        let star = match project_star(&u, &p, mesh, s.k) {
            Ok(f) => f,
            Err(Error::NonExistent(note)) => return Ok(Err(note)),
            Err(e) => return Err(e),
        };
        let e = match cfg.reference {
            Reference::Exact => measure_error(&star, &u),
            Reference::P1 => {
                let d = difference(&star, &project_p1(&u, mesh, s.k)?)?;
                measure_error_with(&d, |_| Complex64::new(0.0, 0.0))
            }
        };
        Ok(Ok(normalize(e, cfg.norm, length)))
    })
}

/// Initial data for a time-dependent run.
pub fn initial_state(
    init: InitKind,
    u0: &SmoothFunction,
    p: &FluxParams,
    mesh: &Arc<Mesh1D>,
    k: usize,
) -> Result<DGFunction> {
    match init {
        InitKind::L2 => l2_project(u0, mesh, k),
        InitKind::Star => project_star(u0, p, mesh, k),
        InitKind::Auto => {
            if !p.is_real_mode() {
                return l2_project(u0, mesh, k);
            }
            match project_star(u0, p, mesh, k) {
                Ok(f) => Ok(f),
                Err(Error::NonExistent(_) | Error::LocalDegenerate) => l2_project(u0, mesh, k),
                Err(e) => Err(e),
            }
        }
    }
}

fn required(cfg: &StudyConfig) -> Result<(BuiltinProblem, f64, f64)> {
    let prob = BuiltinProblem::by_id(cfg.problem.as_deref().unwrap_or_default())?;
    let t_end = cfg.t_end.ok_or_else(|| Error::Config("t_end: missing".into()))?;
    let dt = cfg.dt.ok_or_else(|| Error::Config("dt: missing".into()))?;
    Ok((prob, t_end, dt))
}

/// Evolves the problem to `T` per `(k, N)` and measures the error against
/// the exact solution.
pub fn run_convergence_study(cfg: &StudyConfig) -> Result<StudyTable> {
    if cfg.kind != StudyKind::Convergence {
        return Err(Error::Config("not a convergence study".into()));
    }
    cfg.validate()?;
    let (prob, t_end, dt) = required(cfg)?;
    let exact = prob
        .exact(t_end)
        .ok_or_else(|| Error::Config(format!("problem '{}' has no exact solution", prob.id)))?;
    let length = {
        let (a, b) = cfg.resolved_domain()?;
        b - a
    };
    assemble(cfg, |s, _n, mesh| {
        let p = s.family.at(mesh.h());
        let u0 = initial_state(s.init, &prob.initial(), &p, mesh, s.k)?;
        let op = assemble_linear(&p, mesh, s.k)?;
        let mut integ = Integrator::new(&op, prob.nonlinear_term(), IMEXTableau::ars343())?;
        let (_, last) = integ.evolve(&u0, t_end, dt, &[])?;
        Ok(Ok(normalize(measure_error(&last, &exact), cfg.norm, length)))
    })
}

/// Energy history of one parameter set.
#[derive(Debug, Clone, Serialize)]
pub struct EnergySeries {
    pub series: String,
    pub k: usize,
    pub n: usize,
    pub stability: StabilityClass,
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    /// `|E(0) - E(T)|` with `E = ||u_h||^2`
    pub energy_change: f64,
    /// `| ||u_h(0)|| - ||u_h(T)|| |`
    pub norm_change: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyStudy {
    pub title: String,
    pub t_end: f64,
    pub dt: f64,
    pub series: Vec<EnergySeries>,
}

impl EnergyStudy {
    /// `series, t, energy, energy_delta`, keeping every `every`-th step.
    pub fn write_csv<W: std::io::Write>(&self, w: W, every: usize) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["series", "t", "energy", "energy_delta"])?;
        for s in &self.series {
            let e0 = s.energy.first().copied().unwrap_or(0.0);
            let last = s.times.len().saturating_sub(1);
            for (i, (&t, &e)) in s.times.iter().zip(&s.energy).enumerate() {
                if i % every.max(1) == 0 || i == last {
                    out.write_record([
                        s.series.clone(),
                        format!("{t:.6e}"),
                        format!("{e:.12e}"),
                        format!("{:.6e}", e - e0),
                    ])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Copy keeping every `every`-th sample and the last one.
    pub fn thinned(&self, every: usize) -> EnergyStudy {
        let every = every.max(1);
        let mut out = self.clone();
        for s in &mut out.series {
            let last = s.times.len().saturating_sub(1);
            let keep = |i: usize| i % every == 0 || i == last;
            s.times = s
                .times
                .iter()
                .enumerate()
                .filter(|(i, _)| keep(*i))
                .map(|(_, &t)| t)
                .collect();
            s.energy = s
                .energy
                .iter()
                .enumerate()
                .filter(|(i, _)| keep(*i))
                .map(|(_, &e)| e)
                .collect();
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        if !self.title.is_empty() {
            s.push_str(&format!("{}\n", self.title));
        }
        for e in &self.series {
            s.push_str(&format!(
                "{:<12} k={} N={} {:?}: |E(0)-E(T)| = {:.3E}, |‖u(0)‖-‖u(T)‖| = {:.3E} ({:.1} s)\n",
                e.series, e.k, e.n, e.stability.label, e.energy_change, e.norm_change, e.seconds
            ));
        }
        s
    }
}

/// Energy trace over `[0, T]` for every series and mesh.
pub fn run_energy_study(cfg: &StudyConfig) -> Result<EnergyStudy> {
    if cfg.kind != StudyKind::Energy {
        return Err(Error::Config("not an energy study".into()));
    }
    cfg.validate()?;
    let (prob, t_end, dt) = required(cfg)?;
    let series = legs(cfg)
        .par_iter()
        .map(|leg| {
            let t0 = Instant::now();
            let s = leg.series;
            let n = s.n[leg.index];
            let mesh = uniform_mesh(cfg, n)?;
            let p = s.family.at(mesh.h());
            let u0 = initial_state(s.init, &prob.initial(), &p, &mesh, s.k)?;
            let op = assemble_linear(&p, &mesh, s.k)?;
            let mut integ = Integrator::new(&op, prob.nonlinear_term(), IMEXTableau::ars343())?;
            let (rec, _) = integ.evolve(&u0, t_end, dt, &[])?;
            let e0 = rec.energy_trace[0];
            let e1 = *rec.energy_trace.last().unwrap_or(&e0);
            Ok(EnergySeries {
                series: if s.n.len() > 1 {
                    format!("{}_n{n}", s.name)
                } else {
                    s.name.clone()
                },
                k: s.k,
                n,
                stability: check_stability(&p),
                energy_change: (e0 - e1).abs(),
                norm_change: (e0.sqrt() - e1.sqrt()).abs(),
                times: rec.times,
                energy: rec.energy_trace,
                seconds: t0.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnergyStudy {
        title: cfg.title.clone(),
        t_end,
        dt,
        series,
    })
}

/// A local maximum of `|u|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hump {
    pub center: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub max_abs: f64,
    pub humps: Vec<Hump>,
    /// `(x, |u|)` samples
    #[serde(skip)]
    pub profile: Vec<(f64, Complex64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolitonRun {
    pub title: String,
    pub k: usize,
    pub n: usize,
    pub t_end: f64,
    pub dt: f64,
    pub snapshots: Vec<Snapshot>,
    pub energy_initial: f64,
    pub energy_final: f64,
    /// `|E(T) - E(0)| / E(0)`
    pub relative_energy_drift: f64,
    pub seconds: f64,
}

/// Local maxima of `|u|` above `floor`, at least `min_sep` apart, with the
/// center refined by a parabola through the neighbouring samples.
pub fn find_humps(profile: &[(f64, Complex64)], floor: f64, min_sep: f64) -> Vec<Hump> {
    // drop duplicated interface points so neighbours are distinct
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(profile.len());
    for &(x, u) in profile {
        match pts.last_mut() {
            Some(last) if (last.0 - x).abs() < 1e-12 => last.1 = 0.5 * (last.1 + u.norm()),
            _ => pts.push((x, u.norm())),
        }
    }
    let mut cands: Vec<Hump> = Vec::new();
    for i in 1..pts.len().saturating_sub(1) {
        let (x0, y0) = pts[i - 1];
        let (x1, y1) = pts[i];
        let (x2, y2) = pts[i + 1];
        if y1 < floor || y1 < y0 || y1 < y2 {
            continue;
        }
        let denom = (x1 - x0) * (x1 - x2) * (x0 - x2);
        let mut center = x1;
        let mut height = y1;
        if denom.abs() > 0.0 {
            let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
            let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
            if a < 0.0 {
                let xv = -b / (2.0 * a);
                if (x0..=x2).contains(&xv) {
                    let c = y1 - a * x1 * x1 - b * x1;
                    center = xv;
                    height = a * xv * xv + b * xv + c;
                }
            }
        }
        cands.push(Hump { center, height });
    }
    cands.sort_by(|a, b| b.height.total_cmp(&a.height));
    let mut out: Vec<Hump> = Vec::new();
    for c in cands {
        if out.iter().all(|h| (h.center - c.center).abs() >= min_sep) {
            out.push(c);
        }
    }
    out.sort_by(|a, b| a.center.total_cmp(&b.center));
    out
}

/// Runs the first series on its first mesh and keeps `|u|` snapshots.
pub fn run_soliton(cfg: &StudyConfig) -> Result<SolitonRun> {
    if cfg.kind != StudyKind::Soliton {
        return Err(Error::Config("not a soliton study".into()));
    }
    cfg.validate()?;
    let t0 = Instant::now();
    let (prob, t_end, dt) = required(cfg)?;
    let s = &cfg.series[0];
    let n = s.n[0];
    let mesh = uniform_mesh(cfg, n)?;
    let p = s.family.at(mesh.h());
    let u0 = initial_state(s.init, &prob.initial(), &p, &mesh, s.k)?;
    let op = assemble_linear(&p, &mesh, s.k)?;
    let mut integ = Integrator::new(&op, prob.nonlinear_term(), IMEXTableau::ars343())?;
    let times = if cfg.snapshot_times.is_empty() {
        vec![0.0, 0.5 * t_end, t_end]
    } else {
        cfg.snapshot_times.clone()
    };
    let (rec, _) = integ.evolve(&u0, t_end, dt, &times)?;
    let snapshots = rec
        .snapshots
        .iter()
        .map(|(t, f)| {
            let profile = f.sample(cfg.points_per_cell);
            let max_abs = profile.iter().map(|(_, u)| u.norm()).fold(0.0, f64::max);
            Snapshot {
                t: *t,
                max_abs,
                humps: find_humps(&profile, 0.5, 2.0),
                profile,
            }
        })
        .collect();
    let e0 = energy(&u0);
    let e1 = *rec.energy_trace.last().unwrap_or(&e0);
    Ok(SolitonRun {
        title: cfg.title.clone(),
        k: s.k,
        n,
        t_end,
        dt,
        snapshots,
        energy_initial: e0,
        energy_final: e1,
        relative_energy_drift: (e1 - e0).abs() / e0,
        seconds: t0.elapsed().as_secs_f64(),
    })
}

impl SolitonRun {
    /// `x, re, im, abs` samples of one snapshot.
    pub fn write_snapshot_csv<W: std::io::Write>(&self, i: usize, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["x", "re", "im", "abs"])?;
        for (x, u) in &self.snapshots[i].profile {
            out.write_record([
                format!("{x:.6e}"),
                format!("{:.6e}", u.re),
                format!("{:.6e}", u.im),
                format!("{:.6e}", u.norm()),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// `t, max_abs, humps, centers` with humps separated by `;`.
    pub fn write_summary_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "max_abs", "humps", "centers", "heights"])?;
        for s in &self.snapshots {
            let join = |f: fn(&Hump) -> f64| {
                s.humps
                    .iter()
                    .map(|h| format!("{:.4}", f(h)))
                    .collect::<Vec<_>>()
                    .join(";")
            };
            out.write_record([
                format!("{}", s.t),
                format!("{:.6}", s.max_abs),
                s.humps.len().to_string(),
                join(|h| h.center),
                join(|h| h.height),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{} (k={}, N={}, dt={})\n", self.title, self.k, self.n, self.dt);
        for snap in &self.snapshots {
            let humps: Vec<String> = snap
                .humps
                .iter()
                .map(|h| format!("{:.3} at x={:.3}", h.height, h.center))
                .collect();
            s.push_str(&format!(
                "t={:<5} max|u|={:.4}  humps: {}\n",
                snap.t,
                snap.max_abs,
                humps.join(", ")
            ));
        }
        s.push_str(&format!(
            "energy {:.8} -> {:.8}, relative drift {:.3E}\n",
            self.energy_initial, self.energy_final, self.relative_energy_drift
        ));
        s
    }
}

/// Diagnostics of one parameter set on one mesh.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnoseReport {
    pub series: String,
    pub k: usize,
    pub n: usize,
    pub h: f64,
    pub params: FluxParams,
    pub stability: StabilityClass,
    pub case: Option<ProjectionCase>,
    #[serde(rename = "Gamma")]
    pub gamma: Option<f64>,
    #[serde(rename = "Lambda")]
    pub lambda: Option<f64>,
    pub lambda1: Option<Complex64>,
    pub lambda2: Option<Complex64>,
    pub exists: Option<bool>,
    pub note: Option<String>,
    pub prediction: Option<OrderPrediction>,
}

/// Case, `Gamma`, `Lambda`, eigenvalues, existence and predicted order per
/// series and mesh. Complex parameter sets only get the stability check.
pub fn diagnose_cmd(cfg: &StudyConfig) -> Result<Vec<DiagnoseReport>> {
    cfg.validate()?;
    let (a, b) = cfg.resolved_domain()?;
    let mut out = Vec::new();
    for s in &cfg.series {
        let prediction = if s.family.is_real_mode() {
            predict_order(&s.family, s.k).ok()
        } else {
            None
        };
        for &n in &s.n {
            let h = (b - a) / n as f64;
            let p = s.family.at(h);
            let mut rep = DiagnoseReport {
                series: s.name.clone(),
                k: s.k,
                n,
                h,
                params: p,
                stability: check_stability(&p),
                case: None,
                gamma: None,
                lambda: None,
                lambda1: None,
                lambda2: None,
                exists: None,
                note: None,
                prediction: prediction.clone(),
            };
            if p.is_real_mode() {
                match diagnose(&p, s.k, h, n) {
                    Ok(d) => {
                        rep.case = Some(d.case);
                        rep.gamma = Some(d.gamma);
                        rep.lambda = Some(d.lambda);
                        rep.lambda1 = Some(d.lambda1);
                        rep.lambda2 = Some(d.lambda2);
                        rep.exists = Some(d.exists);
                        rep.note = d.note;
                    }
                    Err(e) => rep.note = Some(e.to_string()),
                }
            } else {
                rep.note = Some("complex parameters: no projection diagnostics".into());
            }
            out.push(rep);
        }
    }
    Ok(out)
}

pub fn write_diagnose_csv<W: std::io::Write>(reports: &[DiagnoseReport], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "series",
        "k",
        "n",
        "stability",
        "case",
        "Gamma",
        "Lambda",
        "exists",
        "predicted_order",
        "rationale",
    ])?;
    let opt = |x: Option<f64>| x.map_or_else(String::new, |x| format!("{x:.6E}"));
    for r in reports {
        out.write_record([
            r.series.clone(),
            r.k.to_string(),
            r.n.to_string(),
            format!("{:?}", r.stability.label),
            r.case.map_or_else(String::new, |c| c.to_string()),
            opt(r.gamma),
            opt(r.lambda),
            r.exists.map_or_else(String::new, |e| e.to_string()),
            r.prediction
                .as_ref()
                .map_or_else(String::new, |p| format!("{}", p.predicted_order)),
            r.prediction
                .as_ref()
                .map_or_else(String::new, |p| p.rationale.clone()),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> StudyConfig {
        StudyConfig::parse(text).unwrap()
    }

    #[test]
    fn rounding() {
        assert_eq!(round4(1.234567e-5), 1.235e-5);
        assert_eq!(round4(0.0), 0.0);
        assert_eq!(fmt_err(Some(3.52e-5)), "3.520E-5");
    }

    #[test]
    fn projection_orders_are_derived_from_the_table() {
        let c = cfg("study = projection\nfunction = cos\nalpha1 = 0.3\nbeta1 = 0.4 h^-1\nbeta2 = 0.4 h^1\nk = 1, 2\nn = 20, 40, 80");
        let t = run_projection_study(&c).unwrap();
        assert_eq!(t.rows.len(), 6);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let mut rd = csv::Reader::from_reader(&buf[..]);
        let recs: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
        for w in recs.windows(2) {
            if w[0][0] != w[1][0] {
                continue;
            }
            let e0: f64 = w[0][6].parse().unwrap();
            let e1: f64 = w[1][6].parse().unwrap();
            let n0: usize = w[0][2].parse().unwrap();
            let n1: usize = w[1][2].parse().unwrap();
            assert_eq!(format!("{:.2}", observed_order(e0, e1, n0, n1)), &w[1][9]);
        }
        let last = t.rows.iter().filter(|r| r.k == 2).next_back().unwrap();
        assert!((last.order_l2.unwrap() - 3.0).abs() < 0.25);
    }

    #[test]
    fn nonexistent_rows_are_marked() {
        // central flux with k = 1 and even N
        let c = cfg("study = projection\nfunction = exp_cos\nk = 1\nn = 9, 10");
        assert!(run_projection_study(&c).is_err());
        // validation rejects even N, so call the runner on the legs directly
        let t = assemble(&c, |s, n, mesh| {
            let p = s.family.at(mesh.h());
            match project_star(&SmoothFunction::exp_cos(), &p, mesh, s.k) {
                Ok(f) => Ok(Ok(measure_error(&f, &SmoothFunction::exp_cos()))),
                Err(Error::NonExistent(note)) => Ok(Err(format!("N = {n}: {note}"))),
                Err(e) => Err(e),
            }
        })
        .unwrap();
        assert_eq!(t.rows[0].status, RowStatus::Ok);
        assert_eq!(t.rows[1].status, RowStatus::NonExistent);
        assert!(t.rows[1].order_l2.is_none());
        assert!(t.to_text().contains("does not exist"));
    }

    #[test]
    fn supercloseness_reference() {
        let c = cfg(
            "study = projection\nfunction = cos\nalpha1 = 0.5\nbeta1 = 1\nk = 1\nn = 40, 80\nreference = p1",
        );
        let t = run_projection_study(&c).unwrap();
        assert!((t.rows[1].order_l2.unwrap() - 3.0).abs() < 0.3);
    }

    #[test]
    fn diagnose_examples() {
        let c = cfg("study = diagnose\nk = 1\nn = 100");
        let r = diagnose_cmd(&c).unwrap();
        assert_eq!(r[0].exists, Some(false));
        let c = cfg("study = diagnose\nbeta1 = 0.5 h^-1\nbeta2 = 1 h^1\nk = 1, 2, 3\nn = 320");
        for (i, r) in diagnose_cmd(&c).unwrap().iter().enumerate() {
            let p = r.prediction.as_ref().unwrap();
            assert!(p.rationale.contains("Case 1.5"), "{}", p.rationale);
            assert_eq!(p.predicted_order, (i + 2) as f64);
        }
        let c = cfg("study = diagnose\nbeta1 = 1.5 h^-1\nk = 2\nn = 64");
        let r = diagnose_cmd(&c).unwrap();
        assert_eq!(r[0].prediction.as_ref().unwrap().predicted_order, 3.0);
        let c =
            cfg("study = diagnose\nalpha1 = 0.25\nalpha2 = -0.25\nbeta1 = 1-1i\nbeta2 = 1+1i\nk = 2\nn = 40");
        let r = diagnose_cmd(&c).unwrap();
        assert!(r[0].case.is_none() && r[0].prediction.is_none());
        let mut buf = Vec::new();
        write_diagnose_csv(&r, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("Dissipative"));
    }

    #[test]
    fn humps_of_two_bumps() {
        let prof: Vec<(f64, Complex64)> = (0..=1000)
            .map(|i| {
                let x = -25.0 + 0.05 * i as f64;
                let v = 1.0 / (x + 10.0).cosh() + 1.0 / (x - 10.0).cosh();
                (x, Complex64::new(v, 0.0))
            })
            .collect();
        let h = find_humps(&prof, 0.5, 2.0);
        assert_eq!(h.len(), 2);
        assert!((h[0].center + 10.0).abs() < 1e-3 && (h[1].center - 10.0).abs() < 1e-3);
        assert!((h[0].height - 1.0).abs() < 1e-3);
    }

    #[test]
    fn short_energy_and_convergence_runs() {
        let c = cfg(
            "study = energy\nproblem = linear_plane_wave\nt_end = 0.01\ndt = 1e-5\ninit = l2\nk = 2\nn = 16",
        );
        let e = run_energy_study(&c).unwrap();
        assert!(e.series[0].energy_change < 1e-9, "{}", e.series[0].energy_change);
        let mut buf = Vec::new();
        e.write_csv(&mut buf, 200).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 6);
        let c =
            cfg("study = convergence\nproblem = nls_plane_wave\nt_end = 0.05\ndt = 0.001\nk = 2\nn = 10, 20");
        let t = run_convergence_study(&c).unwrap();
        assert_eq!(t.norm, NormKind::Normalized);
        assert!(t.rows[1].order_l2.unwrap() > 2.5);
    }
}
