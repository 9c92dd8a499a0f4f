//! Bundled configs of the reference tables and the comparison against them.

use serde::Serialize;

use super::config::{StudyConfig, StudyKind};
use super::run::{
    run_convergence_study, run_energy_study, run_projection_study, run_soliton, RowStatus, StudyTable,
};
use crate::error::{Error, Result};

/// Orders may differ from the reference ones by this much.
pub const ORDER_TOL: f64 = 0.25;
/// Errors may differ from the reference ones by this factor.
pub const ERROR_FACTOR: f64 = 3.0;

pub struct Bundled {
    pub name: &'static str,
    pub text: &'static str,
}

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        &[$(Bundled { name: $name, text: include_str!(concat!("../../configs/", $name, ".cfg")) }),*]
    };
}

pub const BUNDLED: &[Bundled] = bundled!(
    "table01_localp",
    "table02_localp2",
    "table03_diff",
    "table04_localplei",
    "table05_case15",
    "table06_case11",
    "table07_case13",
    "table08_central",
    "table09_central2",
    "table10_case14",
    "table11_case12",
    "table12_case3",
    "table13_numcentral",
    "table14_numcentral2",
    "table15_numlocal1",
    "table16_numlocal2",
    "table17_numglobal",
    "table18_numglobal2",
    "energy_linear",
    "figure2_soliton",
    "diagnose_examples",
);

pub fn bundled(name: &str) -> Result<StudyConfig> {
    let b = BUNDLED
        .iter()
        .find(|b| b.name == name || b.name.starts_with(&format!("{name}_")))
        .ok_or_else(|| Error::Config(format!("no bundled config named '{name}'")))?;
    StudyConfig::parse(b.text)
}

/// Drops meshes finer than `max_n` (and their reference values).
pub fn restrict(cfg: &mut StudyConfig, max_n: usize) {
    for s in &mut cfg.series {
        let keep: Vec<bool> = s.n.iter().map(|&n| n <= max_n).collect();
        let filt = |v: &mut Vec<Option<f64>>| {
            if v.len() == keep.len() {
                *v = v.iter().zip(&keep).filter(|(_, &k)| k).map(|(x, _)| *x).collect();
            }
        };
        filt(&mut s.paper_l2);
        filt(&mut s.paper_order);
        s.n.retain(|&n| n <= max_n);
    }
    cfg.series.retain(|s| !s.n.is_empty());
}

/// One comparison against a reference value.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub table: String,
    pub series: String,
    pub what: String,
    pub n: usize,
    pub measured: Option<f64>,
    pub paper: f64,
    pub pass: bool,
}

impl Check {
    pub fn line(&self) -> String {
        format!(
            "{} {:<20} {:<10} {:<14} N={:<5} measured={:<10} paper={:.3E}",
            if self.pass { "PASS" } else { "FAIL" },
            self.table,
            self.series,
            self.what,
            self.n,
            self.measured.map_or_else(|| "-".into(), |m| format!("{m:.3E}")),
            self.paper
        )
    }
}

/// Orders of the last two mesh pairs within `ORDER_TOL` and every L2 error
/// within `ERROR_FACTOR` of the reference entries.
pub fn check_table(name: &str, t: &StudyTable) -> Vec<Check> {
    let mut out = Vec::new();
    let mut names: Vec<&str> = t.rows.iter().map(|r| r.series.as_str()).collect();
    names.dedup();
    for s in names {
        let rows: Vec<_> = t.rows.iter().filter(|r| r.series == s).collect();
        let with_order: Vec<_> = rows.iter().skip(1).filter(|r| r.paper_order.is_some()).collect();
        for r in with_order.iter().rev().take(2).rev() {
            let paper = r.paper_order.unwrap_or(f64::NAN);
            out.push(Check {
                table: name.into(),
                series: s.into(),
                what: "order_l2".into(),
                n: r.n,
                measured: r.order_l2,
                paper,
                pass: r.order_l2.is_some_and(|m| (m - paper).abs() <= ORDER_TOL),
            });
        }
        for r in &rows {
            let Some(paper) = r.paper_l2 else { continue };
            let pass = r.status == RowStatus::Ok
                && r.l2
                    .is_some_and(|m| m <= paper * ERROR_FACTOR && m >= paper / ERROR_FACTOR);
            out.push(Check {
                table: name.into(),
                series: s.into(),
                what: "l2_error".into(),
                n: r.n,
                measured: r.l2,
                paper,
                pass,
            });
        }
    }
    out
}

/// Published norm differences of the energy example.
pub const PAPER_NORM_CHANGE: [(&str, f64, f64); 2] = [("real", 7.9e-9, 10.0), ("imag", 5.7e-4, ERROR_FACTOR)];

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub tables: Vec<(String, StudyTable)>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.pass).count()
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (name, t) in &self.tables {
            s.push_str(&format!("== {name}\n{}\n", t.to_text()));
        }
        for n in &self.notes {
            s.push_str(&format!("{n}\n"));
        }
        for c in &self.checks {
            s.push_str(&c.line());
            s.push('\n');
        }
        s.push_str(&format!(
            "{}/{} checks passed\n",
            self.passed(),
            self.checks.len()
        ));
        s
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["table", "series", "what", "n", "measured", "paper", "pass"])?;
        for c in &self.checks {
            out.write_record([
                c.table.clone(),
                c.series.clone(),
                c.what.clone(),
                c.n.to_string(),
                c.measured.map_or_else(|| "-".into(), |m| format!("{m:.3E}")),
                format!("{:.3E}", c.paper),
                c.pass.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Runs the bundled tables (all, or those whose name starts with one of
/// `only`), optionally dropping meshes finer than `max_n`.
pub fn run_paper_tables(only: &[String], max_n: Option<usize>) -> Result<SuiteReport> {
    let mut report = SuiteReport {
        tables: Vec::new(),
        checks: Vec::new(),
        notes: Vec::new(),
    };
    for b in BUNDLED {
        if !only.is_empty()
            && !only
                .iter()
                .any(|o| b.name == o || b.name.starts_with(&format!("{o}_")))
        {
            continue;
        }
        let mut cfg = StudyConfig::parse(b.text)?;
        if let Some(m) = max_n {
            restrict(&mut cfg, m);
            if cfg.series.is_empty() {
                continue;
            }
        }
        match cfg.kind {
            StudyKind::Projection | StudyKind::Convergence => {
                let t = if cfg.kind == StudyKind::Projection {
                    run_projection_study(&cfg)?
                } else {
                    run_convergence_study(&cfg)?
                };
                report.checks.extend(check_table(b.name, &t));
                report.tables.push((b.name.to_string(), t));
            }
            StudyKind::Energy => {
                let e = run_energy_study(&cfg)?;
                report.notes.push(e.summary());
                for (series, paper, factor) in PAPER_NORM_CHANGE {
                    let Some(s) = e.series.iter().find(|s| s.series == series) else {
                        continue;
                    };
                    let m = s.norm_change;
                    report.checks.push(Check {
                        table: b.name.into(),
                        series: series.into(),
                        what: "norm_change".into(),
                        n: s.n,
                        measured: Some(m),
                        paper,
                        pass: m <= paper * factor && m >= paper / factor,
                    });
                }
            }
            StudyKind::Soliton => {
                let r = run_soliton(&cfg)?;
                report.notes.push(r.summary());
                for snap in &r.snapshots {
                    let (what, pass) = if snap.t == 0.0 || snap.t == r.t_end {
                        // the collision shifts the humps, so positions are only checked at t = 0
                        let ok = snap.humps.len() == 2
                            && snap.humps[0].center < 0.0
                            && snap.humps[1].center > 0.0
                            && (snap.t > 0.0
                                || ((snap.humps[0].center + 10.0).abs() <= 0.2
                                    && (snap.humps[1].center - 10.0).abs() <= 0.2))
                            && snap.humps.iter().all(|h| (0.9..=1.1).contains(&h.height));
                        ("two_humps", ok)
                    } else {
                        ("collision_peak", snap.max_abs > 1.9)
                    };
                    report.checks.push(Check {
                        table: b.name.into(),
                        series: format!("t={}", snap.t),
                        what: what.into(),
                        n: r.n,
                        measured: Some(snap.max_abs),
                        paper: if what == "two_humps" { 1.0 } else { 2.0 },
                        pass,
                    });
                }
                report.checks.push(Check {
                    table: b.name.into(),
                    series: "energy".into(),
                    what: "relative_drift".into(),
                    n: r.n,
                    measured: Some(r.relative_energy_drift),
                    paper: 0.01,
                    pass: r.relative_energy_drift <= 0.01,
                });
            }
            StudyKind::Diagnose => {}
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_config_parses_and_validates() {
        for b in BUNDLED {
            let c = StudyConfig::parse(b.text).unwrap_or_else(|e| panic!("{}: {e}", b.name));
            c.validate().unwrap_or_else(|e| panic!("{}: {e}", b.name));
            let again = StudyConfig::parse(&c.serialize()).unwrap();
            assert_eq!(c, again, "{}", b.name);
        }
        assert_eq!(BUNDLED.iter().filter(|b| b.name.starts_with("table")).count(), 18);
        assert!(bundled("table05").is_ok());
        assert!(bundled("table99").is_err());
    }

    #[test]
    fn restriction_keeps_alignment() {
        let mut c = bundled("table13").unwrap();
        restrict(&mut c, 160);
        for s in &c.series {
            assert_eq!(s.n, vec![40, 80, 160]);
            assert_eq!(s.paper_l2.len(), 3);
        }
    }

    #[test]
    fn small_table_passes() {
        let r = run_paper_tables(&["table01".into()], None).unwrap();
        assert!(r.all_pass(), "{}", r.to_text());
        assert_eq!(r.checks.iter().filter(|c| c.what == "order_l2").count(), 6);
    }
}
