//! Problem files: `key = value` lines grouped under `[problem]`,
//! `[coefficients]`, `[nonlinearity]`, `[modes]` and `[run]` headers.
//!
//! ```text
//! [problem]
//! ; interval | radial
//! kind = radial
//! dimension = 2
//!
//! [coefficients]
//! a = 1
//! ; or f_table = v0, v1, ... sampled on a uniform grid of [0, 1]
//! f = -30
//!
//! [modes]
//! nu = 0, 1, 2
//!
//! [run]
//! n = 2001
//! ```

use std::path::{Path, PathBuf};

use ini::Ini;

use crate::error::{Error, Result};
use crate::problem::{CoefficientField, Interval1DProblem, Nonlinearity, Problem, RadialProblem, Smoothness};

const SECTIONS: [(&str, &[&str]); 5] = [
    ("problem", &["kind", "dimension"]),
    ("coefficients", &["a", "f", "a_table", "f_table", "a_smoothness", "f_smoothness"]),
    ("nonlinearity", &["g", "growth_exponent"]),
    ("modes", &["nu"]),
    ("run", &["n", "samples", "refine_tol", "tau", "seed", "count", "dims", "s_schedule", "output"]),
];

pub const MAX_GRID_NODES: usize = 200_001;

/// Run parameters; every field may be overridden from the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSettings {
    pub n: Option<usize>,
    pub samples: Option<usize>,
    pub refine_tol: Option<f64>,
    pub tau: Option<f64>,
    pub seed: Option<u64>,
    pub count: Option<usize>,
    pub dims: Option<Vec<usize>>,
    pub s_schedule: Option<Vec<f64>>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub problem: Problem,
    pub run: RunSettings,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_num<T: std::str::FromStr>(section: &str, key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| cfg_err(format!("[{section}] {key}: cannot parse '{v}'")))
}

fn parse_list<T: std::str::FromStr>(section: &str, key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_num(section, key, s)).collect()
}

pub fn load_config(path: &Path) -> Result<ProblemConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ProblemConfig> {
    let ini = Ini::load_from_str(text).map_err(|e| cfg_err(format!("malformed config: {e}")))?;
    for (section, props) in ini.iter() {
        let Some(name) = section else {
            if let Some((k, _)) = props.iter().next() {
                return Err(cfg_err(format!("key '{k}' appears before any section header")));
            }
            continue;
        };
        let allowed =
            SECTIONS.iter().find(|(s, _)| *s == name).ok_or_else(|| cfg_err(format!("unknown section [{name}]")))?.1;
        for (k, _) in props.iter() {
            if !allowed.contains(&k) {
                return Err(cfg_err(format!("unknown key '{k}' in [{name}]")));
            }
        }
    }
    let get = |section: &str, key: &str| ini.section(Some(section)).and_then(|p| p.get(key));

    let kind = get("problem", "kind").ok_or_else(|| cfg_err("[problem] kind is required"))?;
    let field = |name: &str| -> Result<Option<CoefficientField>> {
        let smooth = match get("coefficients", &format!("{name}_smoothness")) {
            Some(s) => Some(Smoothness::parse(s)?),
            None => None,
        };
        let expr = get("coefficients", name);
        let table = get("coefficients", &format!("{name}_table"));
        let f = match (expr, table) {
            (Some(_), Some(_)) => return Err(cfg_err(format!("[coefficients] give either {name} or {name}_table"))),
            (Some(e), None) => CoefficientField::parse(e)?,
            (None, Some(t)) => {
                CoefficientField::tabulated(parse_list("coefficients", &format!("{name}_table"), t)?, Smoothness::C1)?
            }
            (None, None) => return Ok(None),
        };
        Ok(Some(match smooth {
            Some(s) => f.with_smoothness(s),
            None => f,
        }))
    };
    let a = field("a")?.ok_or_else(|| cfg_err("[coefficients] a is required"))?;
    let f = field("f")?;
    let g = match get("nonlinearity", "g") {
        Some(src) => {
            let alpha: f64 = match get("nonlinearity", "growth_exponent") {
                Some(v) => parse_num("nonlinearity", "growth_exponent", v)?,
                None => 1.0,
            };
            if !(alpha >= 1.0) {
                return Err(cfg_err(format!("growth_exponent {alpha} must be at least 1")));
            }
            Some(Nonlinearity::parse(src, alpha)?)
        }
        None => {
            if get("nonlinearity", "growth_exponent").is_some() {
                return Err(cfg_err("[nonlinearity] growth_exponent given without g"));
            }
            None
        }
    };

    let problem: Problem = match kind.trim() {
        "interval" => {
            if let Some(d) = get("problem", "dimension") {
                if parse_num::<usize>("problem", "dimension", d)? != 1 {
                    return Err(cfg_err("interval problems have dimension 1"));
                }
            }
            if ini.section(Some("modes")).is_some() {
                return Err(cfg_err("[modes] applies to radial problems only"));
            }
            match (f, g) {
                (Some(f), g) => Interval1DProblem { a, f, g }.into(),
                (None, Some(g)) => Interval1DProblem::with_nonlinearity(a, g).into(),
                (None, None) => return Err(cfg_err("[coefficients] f is required without a nonlinearity")),
            }
        }
        "radial" => {
            let dim: usize = parse_num(
                "problem",
                "dimension",
                get("problem", "dimension").ok_or_else(|| cfg_err("[problem] dimension is required"))?,
            )?;
            if dim < 2 {
                return Err(cfg_err(format!("radial dimension {dim} must be at least 2")));
            }
            if g.is_some() {
                return Err(cfg_err("nonlinearities are supported for interval problems only"));
            }
            let f = f.ok_or_else(|| cfg_err("[coefficients] f is required"))?;
            let nus: Vec<usize> = match get("modes", "nu") {
                Some(v) => parse_list("modes", "nu", v)?,
                None => vec![0],
            };
            if nus.is_empty() {
                return Err(cfg_err("[modes] nu lists no modes"));
            }
            RadialProblem::new(dim, a, f, &nus).into()
        }
        other => return Err(cfg_err(format!("unknown problem kind '{other}'"))),
    };

    let run = |key: &str| get("run", key);
    let settings = RunSettings {
        n: run("n").map(|v| parse_num("run", "n", v)).transpose()?,
        samples: run("samples").map(|v| parse_num("run", "samples", v)).transpose()?,
        refine_tol: run("refine_tol").map(|v| parse_num("run", "refine_tol", v)).transpose()?,
        tau: run("tau").map(|v| parse_num("run", "tau", v)).transpose()?,
        seed: run("seed").map(|v| parse_num("run", "seed", v)).transpose()?,
        count: run("count").map(|v| parse_num("run", "count", v)).transpose()?,
        dims: run("dims").map(|v| parse_list("run", "dims", v)).transpose()?,
        s_schedule: run("s_schedule").map(|v| parse_list("run", "s_schedule", v)).transpose()?,
        output: run("output").map(|v| PathBuf::from(v.trim())),
    };
    check_run_settings(&settings)?;
    Ok(ProblemConfig { problem, run: settings })
}

/// Range checks shared by config values and command-line overrides.
pub fn check_run_settings(s: &RunSettings) -> Result<()> {
    if let Some(n) = s.n {
        if !(crate::assembly::MIN_GRID_NODES..=MAX_GRID_NODES).contains(&n) {
            return Err(cfg_err(format!("n = {n} outside [{}, {MAX_GRID_NODES}]", crate::assembly::MIN_GRID_NODES)));
        }
    }
    if let Some(k) = s.samples {
        if !(crate::scan::MIN_R_SAMPLES..=100_000).contains(&k) {
            return Err(cfg_err(format!("samples = {k} outside [{}, 100000]", crate::scan::MIN_R_SAMPLES)));
        }
    }
    if let Some(t) = s.refine_tol {
        if !(t > 0.0 && t < 1e-2) {
            return Err(cfg_err(format!("refine_tol = {t} outside (0, 1e-2)")));
        }
    }
    if let Some(t) = s.tau {
        if !(t > 0.0 && t <= 1e-3) {
            return Err(cfg_err(format!("tau = {t} outside (0, 1e-3]")));
        }
    }
    if let Some(c) = s.count {
        if c == 0 || c > 100_000 {
            return Err(cfg_err(format!("count = {c} outside [1, 100000]")));
        }
    }
    if let Some(d) = &s.dims {
        if d.is_empty() || d.iter().any(|&d| !(2..=64).contains(&d)) {
            return Err(cfg_err("dims must list dimensions in [2, 64]"));
        }
    }
    if let Some(sch) = &s.s_schedule {
        if sch.is_empty() || sch.iter().any(|v| !v.is_finite() || *v == 0.0 || v.abs() > 1.0) {
            return Err(cfg_err("s_schedule must list nonzero slopes with |s| <= 1"));
        }
    }
    Ok(())
}
