//! Flat key-value experiment configuration (`key = value` lines, `#`
//! comments, `schema = 1`). Every stochastic quantity requires an explicit
//! seed; there are no wall-clock defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use roughchaos_core::particle::{InitialLaw, InteractionField};
use roughchaos_core::roughpath::HoelderExponent;
use roughchaos_core::{Error, Result};

pub const SCHEMA_VERSION: u64 = 1;

/// Parsed configuration: raw key-value map plus the resolved common block.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub raw: BTreeMap<String, String>,
    pub raw_bytes: Vec<u8>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub threads: usize,
}

impl ExperimentConfig {
    pub fn load(
        path: &Path,
        seed_override: Option<u64>,
        out_override: Option<PathBuf>,
        threads: Option<usize>,
    ) -> Result<Self> {
        let raw_bytes = std::fs::read(path)?;
        let text = String::from_utf8_lossy(&raw_bytes);
        let mut raw = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`, got {line:?}",
                    lineno + 1
                )));
            };
            raw.insert(key.trim().to_string(), value.trim().to_string());
        }
        let schema: u64 = parse(&raw, "schema")?;
        if schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema {schema}, this build reads schema {SCHEMA_VERSION}"
            )));
        }
        let seed = match seed_override {
            Some(s) => s,
            None => parse(&raw, "seed").map_err(|_| {
                Error::Config("seed must be given in the config or via --seed".into())
            })?,
        };
        let out_dir = out_override
            .or_else(|| raw.get("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        let threads = threads
            .or_else(|| raw.get("threads").and_then(|v| v.parse().ok()))
            .unwrap_or(1);
        let mut resolved = raw.clone();
        resolved.insert("seed".into(), seed.to_string());
        Ok(ExperimentConfig {
            raw: resolved,
            raw_bytes,
            seed,
            out_dir,
            threads,
        })
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        parse(&self.raw, key)
    }

    pub fn get_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| bad_value(key, v)),
        }
    }

    pub fn get_list(&self, key: &str) -> Result<Vec<usize>> {
        let v = self
            .raw
            .get(key)
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))?;
        v.split(',')
            .map(|tok| tok.trim().parse().map_err(|_| bad_value(key, v)))
            .collect()
    }

    pub fn get_f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let v = self
            .raw
            .get(key)
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))?;
        v.split(',')
            .map(|tok| tok.trim().parse().map_err(|_| bad_value(key, v)))
            .collect()
    }

    /// Hölder exponent with the (1/3, 1/2) validation.
    pub fn alpha(&self) -> Result<HoelderExponent> {
        HoelderExponent::new(self.get_or("alpha", 0.4)?)
            .map_err(|e| Error::Config(format!("alpha: {e}")))
    }

    /// beta in (alpha, 1/2) for path-space seminorms.
    pub fn beta(&self) -> Result<f64> {
        let alpha = self.alpha()?.value();
        let beta: f64 = self.get_or("beta", 0.45)?;
        if beta <= alpha || beta >= 0.5 {
            return Err(Error::Config(format!(
                "beta must lie in (alpha, 1/2) = ({alpha}, 0.5), got {beta}"
            )));
        }
        Ok(beta)
    }

    /// Interaction selector: `b = zero | constant | linear` with `c` or
    /// `theta` parameters.
    pub fn interaction(&self, dim: usize) -> Result<InteractionField> {
        let kind = self.raw.get("b").map(String::as_str).unwrap_or("zero");
        match kind {
            "zero" => Ok(InteractionField::zero(dim)),
            "constant" => {
                let c: f64 = self.get_or("c", 0.0)?;
                Ok(InteractionField::constant(vec![c; dim]))
            }
            "linear" => {
                let theta: f64 = self.get_or("theta", 0.5)?;
                Ok(InteractionField::linear_attraction(theta, dim))
            }
            other => Err(Error::Config(format!(
                "unknown interaction `{other}` (expected zero | constant | linear)"
            ))),
        }
    }

    /// Initial-law selector: `law = point | gaussian` with `mu`, `sigma`.
    pub fn initial_law(&self, dim: usize) -> Result<InitialLaw> {
        let kind = self.raw.get("law").map(String::as_str).unwrap_or("point");
        let mu: f64 = self.get_or("mu", 0.0)?;
        match kind {
            "point" => Ok(InitialLaw::point_mass(vec![mu; dim])),
            "gaussian" => {
                let sigma: f64 = self.get_or("sigma", 1.0)?;
                Ok(InitialLaw::gaussian(vec![mu; dim], sigma))
            }
            other => Err(Error::Config(format!(
                "unknown initial law `{other}` (expected point | gaussian)"
            ))),
        }
    }
}

fn bad_value(key: &str, value: &str) -> Error {
    Error::Config(format!("key `{key}`: cannot parse value {value:?}"))
}

fn parse<T: std::str::FromStr>(raw: &BTreeMap<String, String>, key: &str) -> Result<T> {
    raw.get(key)
        .ok_or_else(|| Error::Config(format!("missing key `{key}`")))?
        .parse()
        .map_err(|_| bad_value(key, raw.get(key).unwrap()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_flat_keys() {
        let f = write_config("schema = 1\nseed = 9\nn_list = 2, 4 ,8\nT = 1.5\n");
        let cfg = ExperimentConfig::load(f.path(), None, None, None).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.get_list("n_list").unwrap(), vec![2, 4, 8]);
        assert_eq!(cfg.get::<f64>("T").unwrap(), 1.5);
    }

    #[test]
    fn schema_and_seed_are_mandatory() {
        let f = write_config("seed = 1\n");
        assert!(ExperimentConfig::load(f.path(), None, None, None).is_err());
        let f = write_config("schema = 1\n");
        assert!(ExperimentConfig::load(f.path(), None, None, None).is_err());
        let f = write_config("schema = 1\n");
        assert!(ExperimentConfig::load(f.path(), Some(7), None, None).is_ok());
    }

    #[test]
    fn beta_window_is_validated() {
        let f = write_config("schema = 1\nseed = 1\nalpha = 0.4\nbeta = 0.39\n");
        let cfg = ExperimentConfig::load(f.path(), None, None, None).unwrap();
        assert!(cfg.beta().is_err());
    }
}
