//! Campaign configuration: `key = value` lines, `#` comments.
//!
//! ```text
//! constructions = pentagon
//! widths = 3, 5, 7
//! error_rates = 0.001, 0.002
//! bases = X, Z
//! rounds = d
//! max_shots = 1000000
//! max_errors = 1000
//! seed = 7
//! workers = 1
//! stats = stats.csv
//! fit = fit.json
//! footprint = footprint.csv
//! ```

use cairo_qec::circuit::Basis;
use cairo_qec::codegen::Construction;
use cairo_qec::stats::Task;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

/// Memory experiment length for each width.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoundsPolicy {
    /// As many rounds as the code width.
    Width,
    Fixed(usize),
}

impl FromStr for RoundsPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "d" => Ok(RoundsPolicy::Width),
            n => match n.parse() {
                Ok(0) | Err(_) => Err(format!("rounds must be 'd' or a positive integer, got '{n}'")),
                Ok(r) => Ok(RoundsPolicy::Fixed(r)),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CampaignConfig {
    pub constructions: Vec<Construction>,
    pub widths: Vec<usize>,
    pub error_rates: Vec<f64>,
    pub bases: Vec<Basis>,
    pub rounds: RoundsPolicy,
    pub max_shots: u64,
    pub max_errors: u64,
    pub seed: u64,
    pub workers: usize,
    pub stats: Option<PathBuf>,
    pub fit: Option<PathBuf>,
    pub footprint: Option<PathBuf>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            constructions: vec![Construction::Pentagon],
            widths: vec![3, 5, 7],
            error_rates: vec![0.001],
            bases: vec![Basis::X, Basis::Z],
            rounds: RoundsPolicy::Width,
            max_shots: 1_000_000,
            max_errors: 1000,
            seed: 0,
            workers: 1,
            stats: None,
            fit: None,
            footprint: None,
        }
    }
}

fn list<T: FromStr>(v: &str, key: &str) -> Result<Vec<T>, String> {
    v.split(',')
        .map(|x| x.trim().parse().map_err(|_| format!("{key}: bad entry '{}'", x.trim())))
        .collect()
}

fn one<T: FromStr>(v: &str, key: &str) -> Result<T, String> {
    v.trim().parse().map_err(|_| format!("{key}: bad value '{}'", v.trim()))
}

pub fn check_width(d: usize) -> Result<usize, String> {
    if d < 3 || d % 2 == 0 {
        Err(format!("width must be odd and at least 3, got {d}"))
    } else {
        Ok(d)
    }
}

pub fn check_rate(p: f64) -> Result<f64, String> {
    if p > 0.0 && p <= 0.1 {
        Ok(p)
    } else {
        Err(format!("error rate must be in (0, 0.1], got {p}"))
    }
}

impl CampaignConfig {
    pub fn parse(text: &str) -> Result<CampaignConfig, String> {
        let mut c = CampaignConfig::default();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
            let k = k.trim();
            if seen.insert(k.to_string(), i + 1).is_some() {
                return Err(format!("line {}: duplicate key '{k}'", i + 1));
            }
            let at = |e: String| format!("line {}: {e}", i + 1);
            match k {
                "constructions" => c.constructions = list(v, k).map_err(at)?,
                "widths" => c.widths = list(v, k).map_err(at)?,
                "error_rates" => c.error_rates = list(v, k).map_err(at)?,
                "bases" => c.bases = list(v, k).map_err(at)?,
                "rounds" => c.rounds = v.parse().map_err(at)?,
                "max_shots" => c.max_shots = one(v, k).map_err(at)?,
                "max_errors" => c.max_errors = one(v, k).map_err(at)?,
                "seed" => c.seed = one(v, k).map_err(at)?,
                "workers" => c.workers = one(v, k).map_err(at)?,
                "stats" => c.stats = Some(PathBuf::from(v.trim())),
                "fit" => c.fit = Some(PathBuf::from(v.trim())),
                "footprint" => c.footprint = Some(PathBuf::from(v.trim())),
                _ => return Err(format!("line {}: unknown key '{k}'", i + 1)),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), String> {
        for &d in &self.widths {
            check_width(d)?;
        }
        for &p in &self.error_rates {
            check_rate(p)?;
        }
        if self.bases.contains(&Basis::Y) {
            return Err("bases must be X or Z".into());
        }
        Ok(())
    }

    /// Tasks in a fixed order: construction, basis, width, error rate.
    pub fn tasks(&self) -> Vec<Task> {
        let mut out = Vec::new();
        for &construction in &self.constructions {
            for &basis in &self.bases {
                for &d in &self.widths {
                    for &p in &self.error_rates {
                        let rounds = match self.rounds {
                            RoundsPolicy::Width => d,
                            RoundsPolicy::Fixed(r) => r,
                        };
                        out.push(Task {
                            construction,
                            basis,
                            d,
                            rounds,
                            p,
                        });
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let c = CampaignConfig::parse(
            "# demo\nconstructions = pentagon\nwidths = 3, 5\nerror_rates = 0.001,0.002\nbases = Z\nrounds = 4\n\
             max_shots = 100\nmax_errors = 10\nseed = 3\nworkers = 2\nstats = s.csv\n",
        )
        .unwrap();
        assert_eq!(c.widths, vec![3, 5]);
        assert_eq!(c.rounds, RoundsPolicy::Fixed(4));
        assert_eq!(c.stats, Some(PathBuf::from("s.csv")));
        let tasks = c.tasks();
        assert_eq!(tasks.len(), 4);
        assert!(tasks.iter().all(|t| t.rounds == 4 && t.basis == Basis::Z));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(CampaignConfig::parse("widths = 4\n").unwrap_err().contains("odd"));
        assert!(CampaignConfig::parse("error_rates = 0.2\n").is_err());
        assert!(CampaignConfig::parse("colour = red\n").is_err());
        assert!(CampaignConfig::parse("seed = 1\nseed = 2\n").is_err());
        assert!(CampaignConfig::parse("rounds = 0\n").is_err());
        assert!(CampaignConfig::parse("bases = Y\n").is_err());
    }

    #[test]
    fn default_rounds_follow_width() {
        let c = CampaignConfig::parse("widths = 3, 7\n").unwrap();
        let r: Vec<usize> = c.tasks().iter().map(|t| t.rounds).collect();
        assert_eq!(r, vec![3, 7, 3, 7]);
    }
}
