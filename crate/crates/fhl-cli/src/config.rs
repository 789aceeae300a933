//! Flat `key=value` run configuration.

use std::fmt::Write as _;
use std::str::FromStr;

use fhl::domain::DomainKind;
use fhl::solver::{Normalization, Seed, Strategy};
use fhl::SolveOptions;
use fhl::{DomainSpec, Params, Regime};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainChoice {
    Interval,
    Rectangle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SeedChoice {
    FirstEigenfunction,
    BubbleCap(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub regime: Regime,
    pub n: usize,
    pub s: f64,
    /// Defaults to `n - 2s` for the subcritical problem.
    pub mu: Option<f64>,
    pub eps: Option<f64>,
    pub domain: DomainChoice,
    pub a: f64,
    pub b: f64,
    pub ay: Option<f64>,
    pub by: Option<f64>,
    pub modes: usize,
    pub grid: usize,
    pub strategy: Strategy,
    pub theta: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: SeedChoice,
    pub normalization: Normalization,
    pub eps_list: Option<Vec<f64>>,
    pub strip_radius: Option<f64>,
    /// Evaluate the Robin function at the final argmax during continuation.
    pub robin: bool,
}

pub const KEYS: [&str; 22] = [
    "schema_version",
    "regime",
    "n",
    "s",
    "mu",
    "eps",
    "domain.kind",
    "domain.a",
    "domain.b",
    "domain.ay",
    "domain.by",
    "modes",
    "grid",
    "strategy",
    "theta",
    "tol",
    "max_iter",
    "seed",
    "normalization",
    "eps_list",
    "strip_radius",
    "robin",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub config: RunConfig,
    /// One entry per key given more than once (the last value wins).
    pub warnings: Vec<String>,
}

fn typed<V: FromStr>(key: &str, raw: &str) -> Result<V, CliError> {
    raw.trim().parse().map_err(|_| CliError::TypeError(key.to_string()))
}

fn float(key: &str, raw: &str) -> Result<f64, CliError> {
    let v: f64 = typed(key, raw)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::TypeError(key.to_string()))
    }
}

fn strategy_tag(s: Strategy) -> &'static str {
    match s {
        Strategy::DampedPicard => "picard",
        Strategy::NormalizedGradientFlow => "gradient-flow",
    }
}

fn normalization_tag(n: Normalization) -> &'static str {
    match n {
        Normalization::SupNorm => "sup",
        Normalization::NonlocalEnergy => "energy",
    }
}

pub fn parse_config(text: &str) -> Result<Parsed, CliError> {
    let mut entries: Vec<(String, String)> = Vec::new();
    let mut warnings = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| CliError::TypeError(format!("line without '=': {line}")))?;
        let key = key.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::UnknownKey(key));
        }
        if let Some(slot) = entries.iter_mut().find(|(k, _)| *k == key) {
            warnings.push(format!("duplicate key '{key}': last value wins"));
            slot.1 = value.trim().to_string();
        } else {
            entries.push((key, value.trim().to_string()));
        }
    }
    // type errors take precedence over missing keys
    for (key, value) in &entries {
        match key.as_str() {
            "schema_version" | "n" | "modes" | "grid" | "max_iter" => {
                typed::<usize>(key, value)?;
            }
            "s" | "mu" | "eps" | "domain.a" | "domain.b" | "domain.ay" | "domain.by" | "theta" | "tol"
            | "strip_radius" => {
                float(key, value)?;
            }
            _ => {}
        }
    }
    let get = |k: &str| entries.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
    let need = |k: &str| get(k).ok_or_else(|| CliError::MissingRequired(k.to_string()));

    let schema_version: u32 = typed("schema_version", need("schema_version")?)?;
    if schema_version != SCHEMA_VERSION {
        return Err(CliError::TypeError("schema_version".into()));
    }
    let regime: Regime = typed("regime", need("regime")?)?;
    let domain = match need("domain.kind")?.to_ascii_lowercase().as_str() {
        "interval" => DomainChoice::Interval,
        "rectangle" => DomainChoice::Rectangle,
        _ => return Err(CliError::TypeError("domain.kind".into())),
    };
    let opt_float = |k: &str| get(k).map(|v| float(k, v)).transpose();
    let (ay, by) = match domain {
        DomainChoice::Rectangle => {
            (Some(float("domain.ay", need("domain.ay")?)?), Some(float("domain.by", need("domain.by")?)?))
        }
        DomainChoice::Interval => (opt_float("domain.ay")?, opt_float("domain.by")?),
    };
    let strategy = match get("strategy").unwrap_or("picard") {
        "picard" => Strategy::DampedPicard,
        "gradient-flow" => Strategy::NormalizedGradientFlow,
        _ => return Err(CliError::TypeError("strategy".into())),
    };
    let normalization = match get("normalization").unwrap_or("sup") {
        "sup" => Normalization::SupNorm,
        "energy" => Normalization::NonlocalEnergy,
        _ => return Err(CliError::TypeError("normalization".into())),
    };
    let seed = match get("seed").unwrap_or("first-eigenfunction") {
        "first-eigenfunction" => SeedChoice::FirstEigenfunction,
        other => match other.strip_prefix("bubble:") {
            Some(l) => SeedChoice::BubbleCap(float("seed", l)?),
            None => return Err(CliError::TypeError("seed".into())),
        },
    };
    let eps_list = get("eps_list")
        .map(|v| v.split(',').map(|x| float("eps_list", x)).collect::<Result<Vec<f64>, _>>())
        .transpose()?;
    let robin = match get("robin").unwrap_or("true") {
        "true" => true,
        "false" => false,
        _ => return Err(CliError::TypeError("robin".into())),
    };
    let config = RunConfig {
        schema_version,
        regime,
        n: typed("n", need("n")?)?,
        s: float("s", need("s")?)?,
        mu: opt_float("mu")?,
        eps: opt_float("eps")?,
        domain,
        a: float("domain.a", need("domain.a")?)?,
        b: float("domain.b", need("domain.b")?)?,
        ay,
        by,
        modes: typed("modes", need("modes")?)?,
        grid: typed("grid", need("grid")?)?,
        strategy,
        theta: get("theta").map(|v| float("theta", v)).transpose()?.unwrap_or(0.5),
        tol: get("tol").map(|v| float("tol", v)).transpose()?.unwrap_or(1e-8),
        max_iter: get("max_iter").map(|v| typed("max_iter", v)).transpose()?.unwrap_or(500),
        seed,
        normalization,
        eps_list,
        strip_radius: opt_float("strip_radius")?,
        robin,
    };
    Ok(Parsed { config, warnings })
}

impl RunConfig {
    /// Canonical text form; every key that carries a value is written.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        put("schema_version", self.schema_version.to_string());
        put("regime", self.regime.tag().to_string());
        put("n", self.n.to_string());
        put("s", self.s.to_string());
        if let Some(mu) = self.mu {
            put("mu", mu.to_string());
        }
        if let Some(eps) = self.eps {
            put("eps", eps.to_string());
        }
        put(
            "domain.kind",
            match self.domain {
                DomainChoice::Interval => "interval",
                DomainChoice::Rectangle => "rectangle",
            }
            .to_string(),
        );
        put("domain.a", self.a.to_string());
        put("domain.b", self.b.to_string());
        if let Some(v) = self.ay {
            put("domain.ay", v.to_string());
        }
        if let Some(v) = self.by {
            put("domain.by", v.to_string());
        }
        put("modes", self.modes.to_string());
        put("grid", self.grid.to_string());
        put("strategy", strategy_tag(self.strategy).to_string());
        put("theta", self.theta.to_string());
        put("tol", self.tol.to_string());
        put("max_iter", self.max_iter.to_string());
        put(
            "seed",
            match self.seed {
                SeedChoice::FirstEigenfunction => "first-eigenfunction".to_string(),
                SeedChoice::BubbleCap(l) => format!("bubble:{l}"),
            },
        );
        put("normalization", normalization_tag(self.normalization).to_string());
        if let Some(list) = &self.eps_list {
            put("eps_list", list.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","));
        }
        if let Some(r) = self.strip_radius {
            put("strip_radius", r.to_string());
        }
        put("robin", self.robin.to_string());
        out
    }

    pub fn kernel_mu(&self) -> f64 {
        self.mu.unwrap_or(self.n as f64 - 2.0 * self.s)
    }

    pub fn params(&self, eps: f64) -> Result<Params, CliError> {
        Ok(Params::new(self.n, self.s, self.kernel_mu(), eps, self.regime)?)
    }

    pub fn domain_kind(&self) -> DomainKind<f64> {
        match self.domain {
            DomainChoice::Interval => DomainKind::Interval { a: self.a, b: self.b },
            DomainChoice::Rectangle => {
                DomainKind::Rectangle { ax: self.a, bx: self.b, ay: self.ay.unwrap_or(0.0), by: self.by.unwrap_or(1.0) }
            }
        }
    }

    pub fn domain(&self) -> Result<DomainSpec, CliError> {
        Ok(DomainSpec::new(self.domain_kind(), self.grid)?)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            strategy: self.strategy,
            theta: self.theta,
            max_iter: self.max_iter,
            residual_tol: self.tol,
            normalization: self.normalization,
            seed: match self.seed {
                SeedChoice::FirstEigenfunction => Seed::FirstEigenfunction,
                SeedChoice::BubbleCap(l) => Seed::BubbleCap(l),
            },
            ..SolveOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "schema_version=1\nregime=subcritical\nn=1\ns=0.3\neps=0.1\ndomain.kind=interval\ndomain.a=0\ndomain.b=1\nmodes=64\ngrid=256\n";

    #[test]
    fn minimal_config_and_round_trip() {
        let p = parse_config(BASE).unwrap();
        assert!(p.warnings.is_empty());
        assert_eq!(p.config.theta, 0.5);
        assert!((p.config.kernel_mu() - 0.4).abs() < 1e-15);
        let again = parse_config(&p.config.to_text()).unwrap();
        assert_eq!(again.config, p.config);
    }

    #[test]
    fn rectangle_round_trip_with_options() {
        let text = "schema_version=1\nregime=bn\nn=2\ns=0.45\nmu=1.2\ndomain.kind=rectangle\ndomain.a=0\ndomain.b=1\n\
                    domain.ay=0\ndomain.by=0.6\nmodes=120\ngrid=64\nstrategy=gradient-flow\nseed=bubble:2.5\n\
                    normalization=energy\neps_list=0.4,0.2,0.1\nstrip_radius=0.1\nrobin=false # trailing comment\n";
        let p = parse_config(text).unwrap().config;
        assert_eq!(p.seed, SeedChoice::BubbleCap(2.5));
        assert_eq!(p.eps_list, Some(vec![0.4, 0.2, 0.1]));
        assert_eq!(parse_config(&p.to_text()).unwrap().config, p);
    }

    #[test]
    fn errors() {
        assert_eq!(parse_config(&BASE.replace("s=0.3", "s=two")).unwrap_err(), CliError::TypeError("s".into()));
        assert_eq!(parse_config(&format!("{BASE}colour=red\n")).unwrap_err(), CliError::UnknownKey("colour".into()));
        assert_eq!(
            parse_config(&BASE.replace("modes=64\n", "")).unwrap_err(),
            CliError::MissingRequired("modes".into())
        );
        assert_eq!(
            parse_config(&BASE.replace("domain.kind=interval", "domain.kind=rectangle")).unwrap_err(),
            CliError::MissingRequired("domain.ay".into())
        );
    }

    #[test]
    fn duplicate_key_last_wins() {
        let p = parse_config(&format!("{BASE}s=0.35\n")).unwrap();
        assert_eq!(p.config.s, 0.35);
        assert_eq!(p.warnings.len(), 1);
    }
}
