//! Flat key=value configuration with optional `[section]` grouping lines.
//! Every key can be overridden on the command line by a flag of the same
//! name (`--key value`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// `guermond` (exact-solution benchmark), `guermond_enclosed`
    /// (same density and forcing under homogeneous boundary conditions), or
    /// `zero` (quiescent).
    pub case: String,
    pub mu: f64,
    /// `triangular`, `cartesian`, `hexagonal`, or a mesh file path.
    pub family: String,
    /// Number of refinement levels of a study.
    pub levels: usize,
    /// Refinement level of a single run.
    pub level: usize,
    /// Time step at level 0; halved per level in studies.
    pub dt0: f64,
    pub t_final: f64,
    pub picard_iterations: usize,
    pub diagnostics_every: usize,
    pub output: PathBuf,
    pub emit_vtk: bool,
    pub vtk_every: usize,
    pub emit_matrix: bool,
    /// `auto` (per-case default), `homogeneous`, or `exact` (Dirichlet data
    /// from the exact solution).
    pub boundary: String,
    /// Serial study execution; guarantees byte-identical report reruns.
    pub serial: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            case: "guermond".into(),
            mu: 1.0,
            family: "triangular".into(),
            levels: 4,
            level: 0,
            dt0: 1e-3,
            t_final: 1.0,
            picard_iterations: 0,
            diagnostics_every: 1,
            output: PathBuf::from("out"),
            emit_vtk: false,
            vtk_every: 100,
            emit_matrix: false,
            boundary: "auto".into(),
            serial: true,
        }
    }
}

impl RunConfig {
    /// Reads the config file (if any), then applies command-line overrides.
    pub fn from_sources(
        config_path: Option<&Path>,
        overrides: &[(String, String)],
    ) -> Result<RunConfig, String> {
        let mut map = BTreeMap::new();
        if let Some(path) = config_path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            parse_into(&text, &mut map)?;
        }
        for (k, v) in overrides {
            map.insert(k.clone(), v.clone());
        }
        RunConfig::from_map(map)
    }

    fn from_map(map: BTreeMap<String, String>) -> Result<RunConfig, String> {
        let mut cfg = RunConfig::default();
        for (key, value) in map {
            match key.as_str() {
                "case" => cfg.case = value,
                "mu" => cfg.mu = parse(&key, &value)?,
                "family" => cfg.family = value,
                "levels" => cfg.levels = parse(&key, &value)?,
                "level" => cfg.level = parse(&key, &value)?,
                "dt0" => cfg.dt0 = parse(&key, &value)?,
                "t_final" => cfg.t_final = parse(&key, &value)?,
                "picard_iterations" => cfg.picard_iterations = parse(&key, &value)?,
                "diagnostics_every" => cfg.diagnostics_every = parse(&key, &value)?,
                "output" => cfg.output = PathBuf::from(value),
                "emit_vtk" => cfg.emit_vtk = parse_bool(&key, &value)?,
                "vtk_every" => cfg.vtk_every = parse(&key, &value)?,
                "emit_matrix" => cfg.emit_matrix = parse_bool(&key, &value)?,
                "boundary" => cfg.boundary = value,
                "serial" => cfg.serial = parse_bool(&key, &value)?,
                other => return Err(format!("unknown configuration key `{other}`")),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), String> {
        if self.levels < 1 {
            return Err("levels must be >= 1".into());
        }
        if !(self.dt0 > 0.0) {
            return Err("dt0 must be positive".into());
        }
        if !(self.t_final > 0.0) {
            return Err("t_final must be positive".into());
        }
        if !(self.mu > 0.0) {
            return Err("mu must be positive".into());
        }
        match self.boundary.as_str() {
            "auto" | "homogeneous" | "exact" => {}
            other => return Err(format!("boundary must be auto|homogeneous|exact, got `{other}`")),
        }
        Ok(())
    }

    /// Output directory, under `$POLYFLOW_OUT` when that is set and the
    /// configured path is relative.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os("POLYFLOW_OUT") {
            Some(root) if self.output.is_relative() => PathBuf::from(root).join(&self.output),
            _ => self.output.clone(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value `{value}` for key `{key}`"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(format!("invalid boolean `{value}` for key `{key}`")),
    }
}

fn parse_into(text: &str, map: &mut BTreeMap<String, String>) -> Result<(), String> {
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!(
                "config line {}: expected `key = value`, got `{line}`",
                lineno + 1
            ));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(())
}

/// Splits command-line words into (subcommand, config path, overrides).
pub fn parse_args(
    args: &[String],
) -> Result<(String, Option<PathBuf>, Vec<(String, String)>), String> {
    let mut it = args.iter().peekable();
    let sub = it
        .next()
        .ok_or_else(|| "missing subcommand (run | study | check)".to_string())?
        .clone();
    let mut config = None;
    let mut overrides = Vec::new();
    while let Some(arg) = it.next() {
        let Some(key) = arg.strip_prefix("--") else {
            return Err(format!("expected `--key value`, got `{arg}`"));
        };
        let value = it
            .next()
            .ok_or_else(|| format!("flag --{key} needs a value"))?
            .clone();
        if key == "config" {
            config = Some(PathBuf::from(value));
        } else {
            overrides.push((key.to_string(), value));
        }
    }
    Ok((sub, config, overrides))
}
