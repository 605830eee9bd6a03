use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::discrepancy::{DEFAULT_GRID_CAP, DEFAULT_PAIR_CAP};
use crate::error::{Error, Result};
use crate::measures::{halton, iid_uniform, midpoint_grid, rng, van_der_corput, DiscreteMeasure, Norm};
use crate::transport::DEFAULT_SUPPORT_CAP;

/// Upper limits accepted for the configurable caps.
pub const MAX_GRID_CAP: u64 = 1_000_000_000;
pub const MAX_PAIR_CAP: u64 = 10_000_000_000;
pub const MAX_SUPPORT_CAP: usize = 4096;

/// Point-set family an experiment draws its instances from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Midpoint,
    VanDerCorput,
    Halton,
    IidUniform,
    Custom(PathBuf),
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(path) = s.strip_prefix("custom:") {
            return Ok(Family::Custom(PathBuf::from(path)));
        }
        match s.to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "midpoint" => Ok(Family::Midpoint),
            "vandercorput" | "vdc" => Ok(Family::VanDerCorput),
            "halton" => Ok(Family::Halton),
            "iid" | "iiduniform" => Ok(Family::IidUniform),
            _ => Err(Error::Parse(format!("unknown family `{s}`"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Midpoint => f.write_str("midpoint"),
            Family::VanDerCorput => f.write_str("vandercorput"),
            Family::Halton => f.write_str("halton"),
            Family::IidUniform => f.write_str("iiduniform"),
            Family::Custom(p) => write!(f, "custom:{}", p.display()),
        }
    }
}

/// Everything a harness run depends on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: Family,
    pub n: Vec<usize>,
    pub d: usize,
    pub p: Vec<f64>,
    /// Smoothness exponents for the reverse bound.
    pub r: Vec<f64>,
    pub norm: Norm,
    pub seed: u64,
    pub trials: usize,
    /// Largest finite cutoff level of the multiscale check.
    pub max_level: u32,
    pub grid_cap: u64,
    pub pair_cap: u64,
    pub support_cap: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            family: Family::Halton,
            n: vec![16, 32, 64],
            d: 2,
            p: vec![1.0, 2.0, 3.0],
            r: vec![1.0, 2.0],
            norm: Norm::LInf,
            seed: 1,
            trials: 1,
            max_level: 12,
            grid_cap: DEFAULT_GRID_CAP as u64,
            pair_cap: DEFAULT_PAIR_CAP as u64,
            support_cap: DEFAULT_SUPPORT_CAP,
        }
    }
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| Error::Parse(format!("{key}: cannot parse `{s}`"))))
        .collect()
}

fn parse_one<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse::<T>().map_err(|_| Error::Parse(format!("{key}: cannot parse `{}`", v.trim())))
}

impl ExperimentConfig {
    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.trim() {
            "family" => self.family = value.trim().parse()?,
            "n" => self.n = parse_list(key, value)?,
            "d" => self.d = parse_one(key, value)?,
            "p" => self.p = parse_list(key, value)?,
            "r" => self.r = parse_list(key, value)?,
            "norm" => self.norm = value.trim().parse()?,
            "seed" => self.seed = parse_one(key, value)?,
            "trials" => self.trials = parse_one(key, value)?,
            "max_level" => self.max_level = parse_one(key, value)?,
            "grid_cap" => self.grid_cap = parse_one(key, value)?,
            "pair_cap" => self.pair_cap = parse_one(key, value)?,
            "support_cap" => self.support_cap = parse_one(key, value)?,
            other => return Err(Error::Parse(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Parses either a JSON object or `key=value` lines (`#` starts a comment).
    pub fn parse(text: &str) -> Result<Self> {
        let cfg = if text.trim_start().starts_with('{') {
            serde_json::from_str(text)?
        } else {
            let mut cfg = Self::default();
            for (i, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", i + 1)))?;
                cfg.set(k, v)?;
            }
            cfg
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parse(m));
        if self.n.is_empty() || self.p.is_empty() || self.r.is_empty() {
            return bad("n, p and r must be nonempty".into());
        }
        if self.n.contains(&0) {
            return bad("every n must be positive".into());
        }
        if self.d == 0 {
            return bad("d must be positive".into());
        }
        if let Some(p) = self.p.iter().find(|p| !(**p >= 1.0 && p.is_finite())) {
            return bad(format!("p values must be finite and >= 1, got {p}"));
        }
        if let Some(r) = self.r.iter().find(|r| !(**r >= 1.0 && r.is_finite())) {
            return bad(format!("r values must be finite and >= 1, got {r}"));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.max_level > 30 {
            return bad(format!("max_level {} exceeds 30", self.max_level));
        }
        if self.grid_cap == 0 || self.grid_cap > MAX_GRID_CAP {
            return bad(format!("grid_cap must lie in 1..={MAX_GRID_CAP}"));
        }
        if self.pair_cap == 0 || self.pair_cap > MAX_PAIR_CAP {
            return bad(format!("pair_cap must lie in 1..={MAX_PAIR_CAP}"));
        }
        if self.support_cap == 0 || self.support_cap > MAX_SUPPORT_CAP {
            return bad(format!("support_cap must lie in 1..={MAX_SUPPORT_CAP}"));
        }
        if matches!(self.family, Family::Midpoint | Family::VanDerCorput) && self.d != 1 {
            return bad(format!("family {} is one-dimensional, got d = {}", self.family, self.d));
        }
        Ok(())
    }
}

/// One generated point set with the labels that identify it in records.
#[derive(Clone, Debug)]
pub struct Instance {
    pub n: usize,
    pub trial: usize,
    pub measure: DiscreteMeasure,
}

/// Instances in config order: `n` outer, trial inner. Deterministic families
/// and custom files yield one instance per `n`.
pub fn instances(cfg: &ExperimentConfig) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    if let Family::Custom(path) = &cfg.family {
        let file = std::fs::File::open(path)?;
        let m = crate::measures::pointset::read_pointset(std::io::BufReader::new(file))?;
        if m.dim() != cfg.d {
            return Err(Error::DimensionMismatch { left: cfg.d, right: m.dim() });
        }
        out.push(Instance { n: m.len(), trial: 0, measure: m });
        return Ok(out);
    }
    for (ni, &n) in cfg.n.iter().enumerate() {
        match cfg.family {
            Family::Midpoint => out.push(Instance { n, trial: 0, measure: midpoint_grid(n)? }),
            Family::VanDerCorput => out.push(Instance { n, trial: 0, measure: van_der_corput(n, 2)? }),
            Family::Halton => out.push(Instance { n, trial: 0, measure: halton(n, cfg.d)? }),
            Family::IidUniform => {
                for t in 0..cfg.trials {
                    let seed = rng::draw_u64(cfg.seed, ((ni as u64) << 32) | t as u64);
                    out.push(Instance { n, trial: t, measure: iid_uniform(n, cfg.d, seed)? });
                }
            }
            Family::Custom(_) => unreachable!(),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_and_json_agree() {
        let kv = "family = iid\nn = 8, 16 # sizes\nd=2\np=1,2\nnorm=l2\nseed=7\ntrials=3\n";
        let a = ExperimentConfig::parse(kv).unwrap();
        let b = ExperimentConfig::parse(
            r#"{"family":"iiduniform","n":[8,16],"d":2,"p":[1.0,2.0],"norm":"l2","seed":7,"trials":3}"#,
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.r, vec![1.0, 2.0]);
        let round: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(round, a);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in ["n=", "trials=0", "p=0.5", "bogus=1", "family=midpoint\nd=2", "support_cap=100000", "d"] {
            assert!(ExperimentConfig::parse(text).is_err(), "{text}");
        }
        assert!(ExperimentConfig::parse(r#"{"extra": 1}"#).is_err());
    }

    #[test]
    fn custom_family_round_trips_through_text() {
        let f: Family = "custom:/tmp/x.csv".parse().unwrap();
        assert_eq!(f, Family::Custom("/tmp/x.csv".into()));
        assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
    }

    #[test]
    fn instance_order_and_determinism() {
        let cfg = ExperimentConfig { family: Family::IidUniform, n: vec![4, 8], trials: 2, ..Default::default() };
        let a = instances(&cfg).unwrap();
        let labels: Vec<(usize, usize)> = a.iter().map(|i| (i.n, i.trial)).collect();
        assert_eq!(labels, vec![(4, 0), (4, 1), (8, 0), (8, 1)]);
        let b = instances(&cfg).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.measure == y.measure));
        assert_ne!(a[0].measure.coords(), a[1].measure.coords());
    }
}
