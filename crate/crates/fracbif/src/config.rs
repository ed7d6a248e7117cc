//! `key = value` run configuration with flag overrides.
//!
//! ```text
//! # comment
//! p = 3
//! domain.a = -1
//! bracket = 1, 16
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use fracbif_core::mesh::{build_mesh, Mesh1D};
use fracbif_core::params::validate_params;
use fracbif_core::solvers::SolveOptions;
use fracbif_core::{ProblemParams, RawParams};
use sha2::{Digest, Sha256};

const REQUIRED: [&str; 7] = ["p", "s", "q", "r", "domain.a", "domain.b", "mesh.n"];

const OPTIONAL: [&str; 13] = [
    "lambda",
    "tol",
    "max_iter",
    "starts",
    "path_points",
    "damping",
    "seed",
    "lambda_min",
    "lambda_max",
    "steps",
    "bracket",
    "width",
    "verify.trials",
];

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Io { path: String, message: String },
    Syntax { line: usize, text: String },
    Duplicate { key: String, line: usize },
    Unknown(String),
    Missing(String),
    BadValue { key: String, value: String, expected: &'static str },
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, message } => write!(f, "cannot read config {path}: {message}"),
            ConfigError::Syntax { line, text } => write!(f, "line {line}: expected `key = value`, got `{text}`"),
            ConfigError::Duplicate { key, line } => write!(f, "line {line}: key `{key}` set twice"),
            ConfigError::Unknown(key) => write!(f, "unknown config key `{key}`"),
            ConfigError::Missing(key) => write!(f, "missing config key `{key}`"),
            ConfigError::BadValue { key, value, expected } => {
                write!(f, "config key `{key}`: cannot parse `{value}` as {expected}")
            }
            ConfigError::Invalid(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Raw key/value pairs; [`set`](Self::set) overrides what the file says.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax { line: k + 1, text: raw.trim().to_string() });
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax { line: k + 1, text: raw.trim().to_string() });
            }
            if !REQUIRED.contains(&key) && !OPTIONAL.contains(&key) {
                return Err(ConfigError::Unknown(key.to_string()));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(ConfigError::Duplicate { key: key.to_string(), line: k + 1 });
            }
        }
        Ok(ConfigMap { entries })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn typed<T: std::str::FromStr>(&self, key: &str, expected: &'static str) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| ConfigError::BadValue { key: key.to_string(), value: v.to_string(), expected }),
        }
    }

    fn required<T: std::str::FromStr>(&self, key: &str, expected: &'static str) -> Result<T, ConfigError> {
        self.typed(key, expected)?.ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    fn pair(&self, key: &str) -> Result<Option<(f64, f64)>, ConfigError> {
        let Some(v) = self.get(key) else { return Ok(None) };
        let bad = || ConfigError::BadValue { key: key.to_string(), value: v.to_string(), expected: "LO,HI" };
        let (lo, hi) = v.split_once(',').ok_or_else(bad)?;
        Ok(Some((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?)))
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub p: f64,
    pub s: f64,
    pub q: f64,
    pub r: f64,
    pub lambda: Option<f64>,
    pub domain: (f64, f64),
    pub n: usize,
    pub solver: SolveOptions,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub steps: Option<usize>,
    pub bracket: Option<(f64, f64)>,
    pub width: Option<f64>,
    pub verify_trials: usize,
}

impl RunConfig {
    pub fn from_map(map: &ConfigMap) -> Result<Self, ConfigError> {
        let defaults = SolveOptions::default();
        let solver = SolveOptions {
            tol: map.typed("tol", "a number")?.unwrap_or(defaults.tol),
            max_iter: map.typed("max_iter", "a count")?.unwrap_or(defaults.max_iter),
            starts: map.typed("starts", "a count")?.unwrap_or(defaults.starts),
            path_points: map.typed("path_points", "a count")?.unwrap_or(defaults.path_points),
            damping: map.typed("damping", "a number")?.unwrap_or(defaults.damping),
            seed: map.typed("seed", "an unsigned integer")?.unwrap_or(defaults.seed),
            ..defaults
        };
        let cfg = RunConfig {
            p: map.required("p", "a number")?,
            s: map.required("s", "a number")?,
            q: map.required("q", "a number")?,
            r: map.required("r", "a number")?,
            lambda: map.typed("lambda", "a number")?,
            domain: (map.required("domain.a", "a number")?, map.required("domain.b", "a number")?),
            n: map.required("mesh.n", "a count")?,
            solver,
            lambda_min: map.typed("lambda_min", "a number")?,
            lambda_max: map.typed("lambda_max", "a number")?,
            steps: map.typed("steps", "a count")?,
            bracket: map.pair("bracket")?,
            width: map.typed("width", "a number")?,
            verify_trials: map.typed("verify.trials", "a count")?.unwrap_or(200),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.params()?;
        self.mesh()?;
        let o = &self.solver;
        if !(o.tol > 0.0) || o.max_iter == 0 || o.starts == 0 || o.path_points < 3 || !(o.damping > 0.0 && o.damping <= 1.0)
        {
            return Err(ConfigError::Invalid(format!(
                "need tol > 0, max_iter >= 1, starts >= 1, path_points >= 3 and 0 < damping <= 1 \
                 (got {}, {}, {}, {}, {})",
                o.tol, o.max_iter, o.starts, o.path_points, o.damping
            )));
        }
        if self.verify_trials == 0 {
            return Err(ConfigError::Invalid("verify.trials must be at least 1".into()));
        }
        Ok(())
    }

    /// Parameters with `λ` taken from the config, or 0 when absent.
    pub fn params(&self) -> Result<ProblemParams, ConfigError> {
        validate_params(RawParams { p: self.p, s: self.s, q: self.q, r: self.r, lambda: self.lambda.unwrap_or(0.0) })
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn mesh(&self) -> Result<Mesh1D, ConfigError> {
        build_mesh(self.domain.0, self.domain.1, self.n).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn seed(&self) -> u64 {
        self.solver.seed
    }

    /// Canonical `key = value` listing of every setting, defaults included.
    pub fn canonical(&self) -> String {
        let o = &self.solver;
        let mut out = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            out.insert(k.to_string(), v);
        };
        put("p", self.p.to_string());
        put("s", self.s.to_string());
        put("q", self.q.to_string());
        put("r", self.r.to_string());
        put("domain.a", self.domain.0.to_string());
        put("domain.b", self.domain.1.to_string());
        put("mesh.n", self.n.to_string());
        put("tol", o.tol.to_string());
        put("max_iter", o.max_iter.to_string());
        put("starts", o.starts.to_string());
        put("path_points", o.path_points.to_string());
        put("damping", o.damping.to_string());
        put("seed", o.seed.to_string());
        put("verify.trials", self.verify_trials.to_string());
        if let Some(v) = self.lambda {
            put("lambda", v.to_string());
        }
        if let Some(v) = self.lambda_min {
            put("lambda_min", v.to_string());
        }
        if let Some(v) = self.lambda_max {
            put("lambda_max", v.to_string());
        }
        if let Some(v) = self.steps {
            put("steps", v.to_string());
        }
        if let Some((lo, hi)) = self.bracket {
            put("bracket", format!("{lo},{hi}"));
        }
        if let Some(v) = self.width {
            put("width", v.to_string());
        }
        out.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "p = 3\ns = 0.3\nq = 2.5\nr = 1.5\ndomain.a = -1\ndomain.b = 1\nmesh.n = 40\n";

    #[test]
    fn parses_and_fills_defaults() {
        let cfg = RunConfig::from_map(&ConfigMap::parse(BASE).unwrap()).unwrap();
        assert_eq!(cfg.n, 40);
        assert_eq!(cfg.domain, (-1.0, 1.0));
        assert_eq!(cfg.solver, SolveOptions::default());
        assert_eq!(cfg.lambda, None);
    }

    #[test]
    fn comments_and_pairs() {
        let text = format!("{BASE}# note\nbracket = 1, 16 # trailing\nlambda=4\n");
        let cfg = RunConfig::from_map(&ConfigMap::parse(&text).unwrap()).unwrap();
        assert_eq!(cfg.bracket, Some((1.0, 16.0)));
        assert_eq!(cfg.lambda, Some(4.0));
    }

    #[test]
    fn missing_key_is_named() {
        let text = BASE.replace("q = 2.5\n", "");
        let err = RunConfig::from_map(&ConfigMap::parse(&text).unwrap()).unwrap_err();
        assert_eq!(err, ConfigError::Missing("q".into()));
        assert!(err.to_string().contains("`q`"));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(ConfigMap::parse("p 3"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(ConfigMap::parse("colour = red"), Err(ConfigError::Unknown(_))));
        assert!(matches!(ConfigMap::parse("p = 1\np = 2"), Err(ConfigError::Duplicate { line: 2, .. })));
        let bad = ConfigMap::parse(&BASE.replace("mesh.n = 40", "mesh.n = forty")).unwrap();
        assert!(matches!(RunConfig::from_map(&bad), Err(ConfigError::BadValue { .. })));
        let bad = ConfigMap::parse(&BASE.replace("q = 2.5", "q = 3.5")).unwrap();
        assert!(matches!(RunConfig::from_map(&bad), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn overrides_win_and_change_the_hash() {
        let mut map = ConfigMap::parse(BASE).unwrap();
        let before = RunConfig::from_map(&map).unwrap();
        map.set("seed", 7);
        let after = RunConfig::from_map(&map).unwrap();
        assert_eq!(after.seed(), 7);
        assert_ne!(before.hash(), after.hash());
        assert_eq!(after.hash(), RunConfig::from_map(&map).unwrap().hash());
        assert_eq!(after.hash().len(), 64);
    }
}
