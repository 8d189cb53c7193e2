//! Run configuration: flat `key = value` files overridden by command-line
//! flags, validated into a [`RunConfig`].

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::benchmarks::study::ProblemId;
use crate::error::{Error, Result};
use crate::ocp::Mesh;
use crate::solver::SolverOptions;
use crate::transcription::Form;

pub const KEYS: [&str; 13] = [
    "problem",
    "form",
    "intervals",
    "n",
    "boundaries",
    "points",
    "tol",
    "max_iter",
    "tau_extra",
    "out",
    "seed",
    "filter",
    "cache_dir",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeshSpec {
    Uniform { intervals: usize, n_points: usize },
    /// Boundaries on `[-1, 1]` with the points of each interval.
    Explicit { boundaries: Vec<f64>, points: Vec<usize> },
}

impl MeshSpec {
    pub fn build(&self) -> Result<Mesh> {
        match self {
            MeshSpec::Uniform { intervals, n_points } => Mesh::uniform(*intervals, *n_points),
            MeshSpec::Explicit { boundaries, points } => Mesh::new(boundaries.clone(), points.clone()),
        }
    }

    pub fn intervals(&self) -> usize {
        match self {
            MeshSpec::Uniform { intervals, .. } => *intervals,
            MeshSpec::Explicit { points, .. } => points.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub problem: ProblemId,
    pub form: Form,
    pub mesh: MeshSpec,
    pub tol: f64,
    pub max_iter: usize,
    pub tau_extra: Option<f64>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub filter: bool,
    pub cache_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverOptions::default();
        Self {
            problem: ProblemId::Ex1,
            form: Form::Integral,
            mesh: MeshSpec::Uniform { intervals: 1, n_points: 10 },
            tol: ProblemId::Ex1.default_tol(),
            max_iter: solver.max_iter,
            tau_extra: None,
            out_dir: PathBuf::from("out"),
            seed: 0,
            filter: false,
            cache_dir: None,
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment. Keys may use `-` or `_`.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got `{line}`", i + 1)))?;
        let key = normalize_key(k);
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("line {}: unknown key `{}`", i + 1, k.trim())));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

pub fn normalize_key(k: &str) -> String {
    k.trim().replace('-', "_")
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(|s| parse_value(key, s.trim())).collect()
}

impl RunConfig {
    /// Applies `pairs` over the defaults and validates the result.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let mut c = RunConfig::default();
        let get = |k: &str| pairs.get(k).map(String::as_str);
        if let Some(k) = pairs.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown key `{k}`")));
        }
        if let Some(v) = get("problem") {
            c.problem = v.parse()?;
        }
        if let Some(v) = get("form") {
            c.form = v.parse()?;
        }
        c.tol = match get("tol") {
            Some(v) => parse_value("tol", v)?,
            None => c.problem.default_tol(),
        };
        if let Some(v) = get("max_iter") {
            c.max_iter = parse_value("max_iter", v)?;
        }
        if let Some(v) = get("tau_extra") {
            c.tau_extra = Some(parse_value("tau_extra", v)?);
        }
        if let Some(v) = get("out") {
            c.out_dir = PathBuf::from(v);
        }
        if let Some(v) = get("seed") {
            c.seed = parse_value("seed", v)?;
        }
        if let Some(v) = get("filter") {
            c.filter = parse_value("filter", v)?;
        }
        if let Some(v) = get("cache_dir") {
            c.cache_dir = Some(PathBuf::from(v));
        }
        c.mesh = match get("boundaries") {
            Some(b) => {
                let boundaries: Vec<f64> = parse_list("boundaries", b)?;
                let k = boundaries.len().saturating_sub(1);
                let points = match (get("points"), get("n")) {
                    (Some(p), _) => parse_list("points", p)?,
                    (None, Some(n)) => vec![parse_value("n", n)?; k],
                    (None, None) => vec![10; k],
                };
                MeshSpec::Explicit { boundaries, points }
            }
            None => {
                if get("points").is_some() {
                    return Err(Error::Config("`points` needs an explicit `boundaries` list".into()));
                }
                let intervals = get("intervals").map(|v| parse_value("intervals", v)).transpose()?.unwrap_or(1);
                let n_points = get("n").map(|v| parse_value("n", v)).transpose()?.unwrap_or(10);
                MeshSpec::Uniform { intervals, n_points }
            }
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.form.single_interval_only() && self.mesh.intervals() != 1 {
            return Err(Error::Config(format!(
                "the {} form needs a single interval, got {}",
                self.form,
                self.mesh.intervals()
            )));
        }
        if self.tau_extra.is_some() && self.form != Form::SecondIntegral {
            return Err(Error::Config("tau_extra applies to the second-integral form only".into()));
        }
        if self.filter && self.form != Form::Classic {
            return Err(Error::Config("the costate filter applies to the classic form only".into()));
        }
        self.mesh.build().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions { max_iter: self.max_iter, ..SolverOptions::with_tol(self.tol) }
    }

    /// `key=value` lines that reproduce this configuration.
    pub fn to_pairs(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("problem".into(), self.problem.to_string());
        m.insert("form".into(), self.form.to_string());
        match &self.mesh {
            MeshSpec::Uniform { intervals, n_points } => {
                m.insert("intervals".into(), intervals.to_string());
                m.insert("n".into(), n_points.to_string());
            }
            MeshSpec::Explicit { boundaries, points } => {
                let b: Vec<String> = boundaries.iter().map(|v| format!("{v:e}")).collect();
                let p: Vec<String> = points.iter().map(|v| v.to_string()).collect();
                m.insert("boundaries".into(), b.join(","));
                m.insert("points".into(), p.join(","));
            }
        }
        m.insert("tol".into(), format!("{:e}", self.tol));
        m.insert("max_iter".into(), self.max_iter.to_string());
        if let Some(t) = self.tau_extra {
            m.insert("tau_extra".into(), format!("{t:e}"));
        }
        m.insert("out".into(), self.out_dir.display().to_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("filter".into(), self.filter.to_string());
        if let Some(d) = &self.cache_dir {
            m.insert("cache_dir".into(), d.display().to_string());
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(items: &[(&str, &str)]) -> BTreeMap<String, String> {
        items.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn parses_file_with_comments() {
        let text = "# run\nproblem = ex2\nform=integral\nintervals = 20 # uniform\nn = 6\nmax-iter = 50\n";
        let c = RunConfig::from_pairs(&parse_pairs(text).unwrap()).unwrap();
        assert_eq!(c.problem, ProblemId::Ex2);
        assert_eq!(c.mesh, MeshSpec::Uniform { intervals: 20, n_points: 6 });
        assert_eq!(c.max_iter, 50);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(matches!(parse_pairs("colour = red"), Err(Error::Config(_))));
        assert!(matches!(parse_pairs("just words"), Err(Error::Config(_))));
        assert!(RunConfig::from_pairs(&pairs(&[("n", "ten")])).is_err());
    }

    #[test]
    fn single_interval_forms_are_validated() {
        for form in ["second-integral", "classic"] {
            let err = RunConfig::from_pairs(&pairs(&[("form", form), ("intervals", "4"), ("n", "5")]));
            assert!(matches!(err, Err(Error::Config(_))), "{form}");
            assert!(RunConfig::from_pairs(&pairs(&[("form", form), ("n", "12")])).is_ok());
        }
        let filter = RunConfig::from_pairs(&pairs(&[("filter", "true")]));
        assert!(filter.is_err());
        let extra = RunConfig::from_pairs(&pairs(&[("tau_extra", "0.3")]));
        assert!(extra.is_err());
    }

    #[test]
    fn explicit_boundaries() {
        let c = RunConfig::from_pairs(&pairs(&[("boundaries", "-1, 0, 1"), ("points", "4,6")])).unwrap();
        let mesh = c.mesh.build().unwrap();
        assert_eq!(mesh.points_per_interval, vec![4, 6]);
        assert!(RunConfig::from_pairs(&pairs(&[("boundaries", "-1,0.5,0"), ("n", "4")])).is_err());
        assert!(RunConfig::from_pairs(&pairs(&[("points", "4,6")])).is_err());
    }

    #[test]
    fn tolerance_defaults_follow_problem() {
        assert_eq!(RunConfig::from_pairs(&pairs(&[("problem", "ex1")])).unwrap().tol, 1e-14);
        assert_eq!(RunConfig::from_pairs(&pairs(&[("problem", "ex2")])).unwrap().tol, 1e-8);
        assert_eq!(RunConfig::from_pairs(&pairs(&[("problem", "ex2"), ("tol", "1e-6")])).unwrap().tol, 1e-6);
    }

    #[test]
    fn pairs_round_trip() {
        let c = RunConfig::from_pairs(&pairs(&[
            ("problem", "ex1"),
            ("form", "second-integral"),
            ("n", "8"),
            ("tau_extra", "0.3"),
            ("tol", "1e-11"),
        ]))
        .unwrap();
        assert_eq!(RunConfig::from_pairs(&c.to_pairs()).unwrap(), c);
    }
}
