//! Flat `key = value` study files.
//!
//! ```text
//! # comment
//! study = projection
//! function = cos
//! alpha1 = 0.3
//! beta1 = 0.4 h^-1
//! beta2 = 0.4 h^1
//! k = 1, 2, 3
//! n = 160, 320, 640, 1280
//! P1.paper_l2 = 0.61E-03, 0.15E-03, 0.38E-04, 0.95E-05
//! ```
//!
//! Without a `series` key there is one series per entry of `k`, named
//! `P<k>`. Keys prefixed by `<series>.` override the file-wide value for that
//! series only.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use crate::diagnostics::{diagnose, ProjectionCase};
use crate::error::{Error, Result};
use crate::flux::{BetaLaw, FluxFamily};
use crate::problems::BuiltinProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Projection,
    Convergence,
    Energy,
    Soliton,
    Diagnose,
}

impl StudyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StudyKind::Projection => "projection",
            StudyKind::Convergence => "convergence",
            StudyKind::Energy => "energy",
            StudyKind::Soliton => "soliton",
            StudyKind::Diagnose => "diagnose",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "projection" => StudyKind::Projection,
            "convergence" => StudyKind::Convergence,
            "energy" => StudyKind::Energy,
            "soliton" => StudyKind::Soliton,
            "diagnose" => StudyKind::Diagnose,
            _ => return Err(Error::Config(format!("unknown study kind '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Config(format!(
                "unknown format '{s}', expected csv or json"
            ))),
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Initial data of time-dependent runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    /// `P*` when it exists, otherwise the L2 projection
    Auto,
    L2,
    Star,
}

impl InitKind {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(InitKind::Auto),
            "l2" => Ok(InitKind::L2),
            "star" => Ok(InitKind::Star),
            _ => Err(Error::Config(format!(
                "unknown init '{s}', expected auto, l2 or star"
            ))),
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            InitKind::Auto => "auto",
            InitKind::L2 => "l2",
            InitKind::Star => "star",
        }
    }
}

/// `raw` integrates over the domain; `normalized` reports the mean (L1) and
/// root-mean-square (L2) instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Raw,
    Normalized,
}

impl NormKind {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(NormKind::Raw),
            "normalized" => Ok(NormKind::Normalized),
            _ => Err(Error::Config(format!(
                "unknown norm '{s}', expected raw or normalized"
            ))),
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            NormKind::Raw => "raw",
            NormKind::Normalized => "normalized",
        }
    }
}

/// What a projection study compares `P* u` against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    Exact,
    P1,
}

impl Reference {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Reference::Exact),
            "p1" => Ok(Reference::P1),
            _ => Err(Error::Config(format!(
                "unknown reference '{s}', expected exact or p1"
            ))),
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Reference::Exact => "exact",
            Reference::P1 => "p1",
        }
    }
}

/// One row group of a table: a degree, a flux family and its meshes.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub k: usize,
    pub n: Vec<usize>,
    pub family: FluxFamily,
    /// initial data of time-dependent studies
    pub init: InitKind,
    /// reference L2 errors, aligned with `n`
    pub paper_l2: Vec<Option<f64>>,
    /// reference L2 orders, aligned with `n` (the first is usually `-`)
    pub paper_order: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub kind: StudyKind,
    pub title: String,
    pub function: Option<String>,
    pub problem: Option<String>,
    pub domain: Option<(f64, f64)>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub snapshot_times: Vec<f64>,
    pub init: InitKind,
    pub norm: NormKind,
    pub reference: Reference,
    pub sample_every: usize,
    pub points_per_cell: usize,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub series: Vec<Series>,
}

const SERIES_KEYS: &[&str] = &[
    "k",
    "n",
    "alpha1",
    "alpha2",
    "beta1",
    "beta2",
    "init",
    "paper_l2",
    "paper_order",
];

const GLOBAL_KEYS: &[&str] = &[
    "study",
    "title",
    "function",
    "problem",
    "domain",
    "t_end",
    "dt",
    "snapshot_times",
    "init",
    "norm",
    "reference",
    "sample_every",
    "points_per_cell",
    "format",
    "out",
    "series",
];

fn cfg_err(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key}: {msg}"))
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| cfg_err(key, format!("'{s}' is not a number")))
}

fn parse_usize(key: &str, s: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| cfg_err(key, format!("'{s}' is not a non-negative integer")))
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

fn parse_opt_list(key: &str, s: &str) -> Result<Vec<Option<f64>>> {
    split_list(s)
        .map(|x| {
            if x == "-" {
                Ok(None)
            } else {
                parse_f64(key, x).map(Some)
            }
        })
        .collect()
}

/// Parses `a`, `bi`, `a+bi` or `a-bi`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Config(format!("'{s}' is not a complex number"));
    if let Some(body) = t.strip_suffix('i') {
        // split at the last sign that is not part of an exponent
        let bytes = body.as_bytes();
        let mut cut = None;
        for i in (1..bytes.len()).rev() {
            if (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
                cut = Some(i);
                break;
            }
        }
        let (re, im) = match cut {
            Some(i) => (&body[..i], &body[i..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => "1",
            "-" => "-1",
            x => x,
        };
        let re: f64 = re.parse().map_err(|_| bad())?;
        let im: f64 = im.parse().map_err(|_| bad())?;
        Ok(Complex64::new(re, im))
    } else {
        t.parse::<f64>()
            .map(|x| Complex64::new(x, 0.0))
            .map_err(|_| bad())
    }
}

pub fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im < 0.0 || (z.im == 0.0 && z.im.is_sign_negative()) {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

/// Parses `c`, `c h^p` or `c /(h(1+h))` with a complex coefficient `c`.
pub fn parse_beta(s: &str) -> Result<BetaLaw> {
    let t = s.trim();
    if let Some(coef) = t.strip_suffix("/(h(1+h))") {
        let c = parse_complex(coef)?;
        if c.im != 0.0 {
            return Err(Error::Config(format!(
                "'{s}': the 1/(h(1+h)) law takes a real coefficient"
            )));
        }
        return Ok(BetaLaw::InvHOnePlusH { coef: c.re });
    }
    if let Some(i) = t.find("h^") {
        let coef = parse_complex(&t[..i])?;
        let exponent = t[i + 2..]
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("'{s}' has a bad exponent")))?;
        return Ok(BetaLaw::Power { coef, exponent });
    }
    Ok(BetaLaw::complex(parse_complex(t)?))
}

pub fn format_beta(b: &BetaLaw) -> String {
    match *b {
        BetaLaw::Power { coef, exponent: 0.0 } => format_complex(coef),
        BetaLaw::Power { coef, exponent } => format!("{} h^{}", format_complex(coef), exponent),
        BetaLaw::InvHOnePlusH { coef } => format!("{coef} /(h(1+h))"),
    }
}

fn format_list<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn format_opt_list(v: &[Option<f64>]) -> String {
    v.iter()
        .map(|x| x.map_or_else(|| "-".to_string(), |x| format!("{x:E}")))
        .collect::<Vec<_>>()
        .join(", ")
}

impl StudyConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected 'key = value', got '{raw}'",
                    lineno + 1
                ))
            })?;
            let key = k.trim().to_string();
            if kv.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!(
                    "line {}: duplicate key '{key}'",
                    lineno + 1
                )));
            }
        }
        let get = |k: &str| kv.get(k).map(String::as_str);
        let kind = StudyKind::parse(get("study").ok_or_else(|| cfg_err("study", "missing"))?)?;

        let series_names: Vec<String> = match get("series") {
            Some(s) => split_list(s).map(str::to_string).collect(),
            None => {
                let ks = get("k").ok_or_else(|| cfg_err("k", "missing"))?;
                split_list(ks)
                    .map(|k| parse_usize("k", k).map(|k| format!("P{k}")))
                    .collect::<Result<_>>()?
            }
        };
        for key in kv.keys() {
            match key.split_once('.') {
                Some((s, sub)) => {
                    if !series_names.iter().any(|n| n == s) {
                        return Err(cfg_err(key, format!("unknown series '{s}'")));
                    }
                    if !SERIES_KEYS.contains(&sub) {
                        return Err(cfg_err(key, "not a per-series key"));
                    }
                }
                None => {
                    if !GLOBAL_KEYS.contains(&key.as_str()) && !SERIES_KEYS.contains(&key.as_str()) {
                        return Err(cfg_err(key, "unknown key"));
                    }
                }
            }
        }

        let default_ks: Option<Vec<usize>> = match (get("series"), get("k")) {
            (None, Some(ks)) => Some(
                split_list(ks)
                    .map(|k| parse_usize("k", k))
                    .collect::<Result<_>>()?,
            ),
            _ => None,
        };
        let mut series = Vec::with_capacity(series_names.len());
        for (i, name) in series_names.iter().enumerate() {
            let lookup = |key: &str| {
                kv.get(&format!("{name}.{key}"))
                    .or_else(|| kv.get(key))
                    .map(String::as_str)
            };
            let k = match (&default_ks, kv.get(&format!("{name}.k"))) {
                (_, Some(v)) => parse_usize("k", v)?,
                (Some(ks), None) => ks[i],
                (None, None) => {
                    let v = lookup("k").ok_or_else(|| cfg_err(&format!("{name}.k"), "missing"))?;
                    parse_usize("k", v)?
                }
            };
            let n = split_list(lookup("n").ok_or_else(|| cfg_err(&format!("{name}.n"), "missing"))?)
                .map(|x| parse_usize("n", x))
                .collect::<Result<Vec<_>>>()?;
            let alpha1 = parse_complex(lookup("alpha1").unwrap_or("0"))?;
            let alpha2 = match lookup("alpha2") {
                Some(v) => parse_complex(v)?,
                None => -alpha1,
            };
            let beta1 = parse_beta(lookup("beta1").unwrap_or("0"))?;
            let beta2 = parse_beta(lookup("beta2").unwrap_or("0"))?;
            let init = lookup("init").map_or(Ok(InitKind::Auto), InitKind::parse)?;
            let paper_l2 = match lookup("paper_l2") {
                Some(v) => parse_opt_list("paper_l2", v)?,
                None => Vec::new(),
            };
            let paper_order = match lookup("paper_order") {
                Some(v) => parse_opt_list("paper_order", v)?,
                None => Vec::new(),
            };
            series.push(Series {
                name: name.clone(),
                k,
                n,
                family: FluxFamily {
                    alpha1,
                    alpha2,
                    beta1,
                    beta2,
                },
                init,
                paper_l2,
                paper_order,
            });
        }

        let domain = match get("domain") {
            Some(v) => {
                let xs: Vec<f64> = split_list(v)
                    .map(|x| parse_f64("domain", x))
                    .collect::<Result<_>>()?;
                match xs[..] {
                    [a, b] => Some((a, b)),
                    _ => return Err(cfg_err("domain", "expected 'a, b'")),
                }
            }
            None => None,
        };
        let opt_f64 = |k: &str| get(k).map(|v| parse_f64(k, v)).transpose();
        let cfg = StudyConfig {
            kind,
            title: get("title").unwrap_or("").to_string(),
            function: get("function").map(str::to_string),
            problem: get("problem").map(str::to_string),
            domain,
            t_end: opt_f64("t_end")?,
            dt: opt_f64("dt")?,
            snapshot_times: match get("snapshot_times") {
                Some(v) => split_list(v)
                    .map(|x| parse_f64("snapshot_times", x))
                    .collect::<Result<_>>()?,
                None => Vec::new(),
            },
            init: get("init").map_or(Ok(InitKind::Auto), InitKind::parse)?,
            norm: match get("norm") {
                Some(v) => NormKind::parse(v)?,
                None if kind == StudyKind::Convergence => NormKind::Normalized,
                None => NormKind::Raw,
            },
            reference: get("reference").map_or(Ok(Reference::Exact), Reference::parse)?,
            sample_every: get("sample_every").map_or(Ok(1), |v| parse_usize("sample_every", v))?,
            points_per_cell: get("points_per_cell").map_or(Ok(8), |v| parse_usize("points_per_cell", v))?,
            format: get("format").map_or(Ok(Format::Csv), Format::parse)?,
            out: get("out").map(PathBuf::from),
            series,
        };
        Ok(cfg)
    }

    /// Canonical text form; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line("study", self.kind.as_str().to_string());
        if !self.title.is_empty() {
            line("title", self.title.clone());
        }
        if let Some(f) = &self.function {
            line("function", f.clone());
        }
        if let Some(p) = &self.problem {
            line("problem", p.clone());
        }
        if let Some((a, b)) = self.domain {
            line("domain", format!("{a}, {b}"));
        }
        if let Some(t) = self.t_end {
            line("t_end", t.to_string());
        }
        if let Some(t) = self.dt {
            line("dt", t.to_string());
        }
        if !self.snapshot_times.is_empty() {
            line("snapshot_times", format_list(&self.snapshot_times));
        }
        line("init", self.init.as_str().to_string());
        line("norm", self.norm.as_str().to_string());
        line("reference", self.reference.as_str().to_string());
        line("sample_every", self.sample_every.to_string());
        line("points_per_cell", self.points_per_cell.to_string());
        line("format", self.format.as_str().to_string());
        if let Some(o) = &self.out {
            line("out", o.display().to_string());
        }
        let names: Vec<&str> = self.series.iter().map(|x| x.name.as_str()).collect();
        line("series", names.join(", "));
        for ser in &self.series {
            let p = &ser.name;
            line(&format!("{p}.k"), ser.k.to_string());
            line(&format!("{p}.n"), format_list(&ser.n));
            line(&format!("{p}.alpha1"), format_complex(ser.family.alpha1));
            line(&format!("{p}.alpha2"), format_complex(ser.family.alpha2));
            line(&format!("{p}.beta1"), format_beta(&ser.family.beta1));
            line(&format!("{p}.beta2"), format_beta(&ser.family.beta2));
            if ser.init != self.init {
                line(&format!("{p}.init"), ser.init.as_str().to_string());
            }
            if !ser.paper_l2.is_empty() {
                line(&format!("{p}.paper_l2"), format_opt_list(&ser.paper_l2));
            }
            if !ser.paper_order.is_empty() {
                line(&format!("{p}.paper_order"), format_opt_list(&ser.paper_order));
            }
        }
        s
    }

    /// Domain of the study: the configured one, the problem's, or `[0, 2 pi]`.
    pub fn resolved_domain(&self) -> Result<(f64, f64)> {
        if let Some(d) = self.domain {
            return Ok(d);
        }
        if let Some(p) = &self.problem {
            return Ok(BuiltinProblem::by_id(p)?.domain);
        }
        Ok((0.0, 2.0 * std::f64::consts::PI))
    }

    /// Checks everything that can be checked before running.
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.resolved_domain()?;
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(cfg_err("domain", format!("need a < b, got [{a}, {b}]")));
        }
        if self.series.is_empty() {
            return Err(cfg_err("series", "no series defined"));
        }
        match self.kind {
            StudyKind::Projection => {
                let f = self
                    .function
                    .as_deref()
                    .ok_or_else(|| cfg_err("function", "missing"))?;
                super::run::test_function(f)?;
            }
            StudyKind::Convergence | StudyKind::Energy | StudyKind::Soliton => {
                let p = self
                    .problem
                    .as_deref()
                    .ok_or_else(|| cfg_err("problem", "missing"))?;
                let prob = BuiltinProblem::by_id(p)?;
                if self.kind == StudyKind::Convergence && !prob.has_exact_solution() {
                    return Err(cfg_err(
                        "problem",
                        format!("'{p}' has no exact solution to converge to"),
                    ));
                }
                for (key, v) in [("t_end", self.t_end), ("dt", self.dt)] {
                    match v {
                        Some(x) if x > 0.0 && x.is_finite() => {}
                        Some(x) => return Err(cfg_err(key, format!("must be positive, got {x}"))),
                        None => return Err(cfg_err(key, "missing")),
                    }
                }
                let t_end = self.t_end.unwrap_or(0.0);
                if let Some(t) = self.snapshot_times.iter().find(|&&t| !(0.0..=t_end).contains(&t)) {
                    return Err(cfg_err(
                        "snapshot_times",
                        format!("{t} lies outside [0, {t_end}]"),
                    ));
                }
            }
            StudyKind::Diagnose => {}
        }
        if self.points_per_cell < 2 {
            return Err(cfg_err("points_per_cell", "need at least 2"));
        }
        for s in &self.series {
            let key = |k: &str| format!("{}.{k}", s.name);
            if s.k == 0 {
                return Err(cfg_err(&key("k"), "degree must be at least 1"));
            }
            if s.n.is_empty() {
                return Err(cfg_err(&key("n"), "empty"));
            }
            if s.n.windows(2).any(|w| w[1] <= w[0]) {
                return Err(cfg_err(&key("n"), "must be strictly increasing"));
            }
            if s.n[0] < 3 {
                return Err(cfg_err(&key("n"), "need at least 3 cells"));
            }
            for (what, v) in [("paper_l2", &s.paper_l2), ("paper_order", &s.paper_order)] {
                if !v.is_empty() && v.len() != s.n.len() {
                    return Err(cfg_err(
                        &key(what),
                        format!("has {} entries for {} meshes", v.len(), s.n.len()),
                    ));
                }
            }
            let needs_star = match self.kind {
                StudyKind::Projection => true,
                StudyKind::Convergence | StudyKind::Energy | StudyKind::Soliton => s.init == InitKind::Star,
                StudyKind::Diagnose => false,
            };
            if needs_star && s.k == 1 && s.family.is_real_mode() {
                for &n in &s.n {
                    let h = (b - a) / n as f64;
                    let p = s.family.at(h);
                    let Ok(d) = diagnose(&p, s.k, h, n) else { continue };
                    if d.case == ProjectionCase::Case2 && n % 2 == 0 {
                        return Err(cfg_err(
                            &key("n"),
                            format!(
                                "N = {n} is even, but these parameters fall in Case 2 (|Gamma| = |Lambda|) \
                                 for k = 1, where the projection exists only for odd N \
                                 (the repeated eigenvalue is -1, so Q^N = I for even N)"
                            ),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}
