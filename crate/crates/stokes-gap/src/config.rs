//! Plain-text run configuration: `key = value` lines grouped under `[section]` headers.
//!
//! ```text
//! # geometry keys may also appear before any section
//! [geometry]
//! eps = 0.05
//! [mesh]
//! n_base = 80
//! [solver]
//! tol = 1e-4
//! [experiment]
//! phi = antisym-demo
//! ```

use crate::error::{Error, Result};
use crate::geometry::{GapGeometry, ProfileKind};
use crate::stokes_mfs::SolverParams;
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    Dirichlet,
    Constrained,
}

impl SolveMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dirichlet" => Some(Self::Dirichlet),
            "constrained" => Some(Self::Constrained),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Experiment {
    pub mode: SolveMode,
    /// `psi1`..`psi6`, `antisym-demo` or `file`.
    pub phi: String,
    pub phi_file: Option<PathBuf>,
    pub eps_from: f64,
    pub eps_to: f64,
    pub eps_count: usize,
    pub out_dir: PathBuf,
    /// Largest admissible `|C_i^alpha|`.
    pub sanity_bound: f64,
    /// Upper limit on band ratios in scaling checks.
    pub band_factor: f64,
}

impl Default for Experiment {
    fn default() -> Self {
        Self {
            mode: SolveMode::Constrained,
            phi: "antisym-demo".into(),
            phi_file: None,
            eps_from: 0.1,
            eps_to: 10f64.powf(-2.5),
            eps_count: 7,
            out_dir: PathBuf::from("out"),
            sanity_bound: 1e6,
            band_factor: 5.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub geometry: GapGeometry,
    pub solver: SolverParams,
    pub experiment: Experiment,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: GapGeometry::new(3, 0.05).expect("default geometry"),
            solver: SolverParams::default(),
            experiment: Experiment::default(),
        }
    }
}

const KEYS: &[&str] = &[
    "dim", "eps", "kappa2", "R", "rho_D", "profile_kind", "quartic",
    "mesh.n_base", "mesh.neck_refine",
    "solver.mu", "solver.offset", "solver.offset_max", "solver.source_density",
    "solver.azimuth_factor", "solver.outer_offset", "solver.m_max", "solver.trunc",
    "solver.tol", "solver.seed", "solver.heldout_azimuths",
    "experiment.mode", "experiment.phi", "experiment.phi_file", "experiment.eps_from",
    "experiment.eps_to", "experiment.eps_count", "experiment.out_dir",
    "experiment.sanity_bound", "experiment.band_factor",
];

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

/// Parses and validates a configuration; absent keys keep their defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut section = String::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::Parse { line: line_no, msg: format!("malformed section header `{line}`") })?
                .trim();
            if !["geometry", "mesh", "solver", "experiment"].contains(&name) {
                return Err(Error::Parse { line: line_no, msg: format!("unknown section `{name}`") });
            }
            section = name.to_string();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: line_no, msg: format!("expected `key = value`, got `{line}`") })?;
        let (k, v) = (k.trim(), v.trim().trim_matches('"'));
        let key = if section.is_empty() || section == "geometry" || k.contains('.') {
            k.to_string()
        } else {
            format!("{section}.{k}")
        };
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Validation(format!("unknown config key `{key}`")));
        }
        set(&mut cfg, &key, v, line_no)?;
    }
    validate(cfg)
}

fn num<T: std::str::FromStr>(v: &str, key: &str, line: usize) -> Result<T> {
    v.parse().map_err(|_| Error::Parse { line, msg: format!("invalid value `{v}` for `{key}`") })
}

fn set(cfg: &mut RunConfig, key: &str, v: &str, line: usize) -> Result<()> {
    let g = &mut cfg.geometry;
    let s = &mut cfg.solver;
    let e = &mut cfg.experiment;
    match key {
        "dim" => g.d = num(v, key, line)?,
        "eps" => g.eps = num(v, key, line)?,
        "kappa2" => g.kappa2 = num(v, key, line)?,
        "R" => g.r_neck = num(v, key, line)?,
        "rho_D" => g.rho_d = num(v, key, line)?,
        "quartic" => g.quartic = num(v, key, line)?,
        "profile_kind" => {
            g.profile_kind = ProfileKind::parse(v)
                .ok_or_else(|| Error::Validation(format!("profile_kind: unknown kind `{v}`")))?
        }
        "mesh.n_base" => s.n_base = num(v, key, line)?,
        "mesh.neck_refine" => s.neck_refine = num(v, key, line)?,
        "solver.mu" => s.mu = num(v, key, line)?,
        "solver.offset" => s.offset = num(v, key, line)?,
        "solver.offset_max" => s.offset_max = num(v, key, line)?,
        "solver.source_density" => s.source_density = num(v, key, line)?,
        "solver.azimuth_factor" => s.azimuth_factor = num(v, key, line)?,
        "solver.outer_offset" => s.outer_offset = num(v, key, line)?,
        "solver.m_max" => s.m_max = num(v, key, line)?,
        "solver.trunc" => s.trunc = num(v, key, line)?,
        "solver.tol" => s.tol = num(v, key, line)?,
        "solver.seed" => s.seed = num(v, key, line)?,
        "solver.heldout_azimuths" => s.heldout_azimuths = num(v, key, line)?,
        "experiment.mode" => {
            e.mode = SolveMode::parse(v)
                .ok_or_else(|| Error::Validation(format!("experiment.mode: expected dirichlet or constrained, got `{v}`")))?
        }
        "experiment.phi" => e.phi = v.to_string(),
        "experiment.phi_file" => e.phi_file = Some(PathBuf::from(v)),
        "experiment.eps_from" => e.eps_from = num(v, key, line)?,
        "experiment.eps_to" => e.eps_to = num(v, key, line)?,
        "experiment.eps_count" => e.eps_count = num(v, key, line)?,
        "experiment.out_dir" => e.out_dir = PathBuf::from(v),
        "experiment.sanity_bound" => e.sanity_bound = num(v, key, line)?,
        "experiment.band_factor" => e.band_factor = num(v, key, line)?,
        _ => unreachable!("key list checked"),
    }
    Ok(())
}

/// Checks an eps value against the admissible range `(0, 0.5)`.
pub fn check_eps(key: &str, eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Validation(format!("{key} = {eps} must lie in (0, 0.5)")));
    }
    Ok(())
}

pub fn validate(mut cfg: RunConfig) -> Result<RunConfig> {
    check_eps("eps", cfg.geometry.eps)?;
    check_eps("experiment.eps_from", cfg.experiment.eps_from)?;
    check_eps("experiment.eps_to", cfg.experiment.eps_to)?;
    if cfg.experiment.eps_count == 0 {
        return Err(Error::Validation("experiment.eps_count must be >= 1".into()));
    }
    for (k, v) in [("experiment.sanity_bound", cfg.experiment.sanity_bound), ("experiment.band_factor", cfg.experiment.band_factor)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Validation(format!("{k} must be positive, got {v}")));
        }
    }
    crate::cli::phi_selector_ok(&cfg.experiment.phi)?;
    cfg.geometry = cfg.geometry.validated()?;
    cfg.solver = cfg.solver.validated()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(parse_config("").unwrap(), RunConfig::default());
    }

    #[test]
    fn rejects_large_eps() {
        let err = parse_config("eps = 0.6\n").unwrap_err();
        assert!(err.to_string().contains("(0, 0.5)"), "{err}");
    }

    #[test]
    fn rejects_unknown_key() {
        let err = parse_config("[solver]\nfoo = 1\n").unwrap_err();
        assert!(err.to_string().contains("foo"));
        assert!(parse_config("foo = 1").unwrap_err().to_string().contains("`foo`"));
    }

    #[test]
    fn sections_and_dotted_keys() {
        let c = parse_config("[geometry]\neps = 0.02 # gap\nR = 0.4\n[mesh]\nn_base = 60\n[experiment]\nmode = dirichlet\nsolver.tol = 1e-3\n").unwrap();
        assert_eq!(c.geometry.eps, 0.02);
        assert_eq!(c.geometry.r_neck, 0.4);
        assert_eq!(c.solver.n_base, 60);
        assert_eq!(c.solver.tol, 1e-3);
        assert_eq!(c.experiment.mode, SolveMode::Dirichlet);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_config("\n\neps 0.1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_config("[mesh]\nn_base = lots\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
