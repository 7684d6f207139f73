//! Flat `key = value` experiment configs with dotted keys.
//!
//! ```text
//! # Thompson sampling on the 3-sphere
//! scenario = eigen_trace
//! d = 3
//! n = 8192
//! space.kind = sphere
//! policy.kind = lints
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown keys are rejected.
//! Lists are comma-separated; matrices and point sets separate rows with `;`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::actionspace::ActionSpace;
use crate::bandit::CheckpointSchedule;
use crate::error::{Error, Result};
use crate::linalg::{basis, norm, SymMatrix};
use crate::model_selection::RefineMode;
use crate::policies::{PolicyConfig, PolicyKind};

const KEYS: &[&str] = &[
    "name",
    "scenario",
    "seed",
    "d",
    "n",
    "trials",
    "lambda",
    "delta",
    "sigma",
    "out",
    "theta",
    "space.kind",
    "space.p",
    "space.radius",
    "space.shape",
    "space.level",
    "space.center",
    "space.points",
    "policy.kind",
    "policy.ts_scale",
    "policy.norm_bound",
    "checkpoints.count",
    "checkpoints.first",
    "band.k_sigma",
    "exponent.threshold",
    "exponent.tail_fraction",
    "sweep.dims",
    "alb.b_init",
    "alb.n1",
    "alb.epochs",
    "alb.mode",
    "cluster.agents",
    "cluster.params",
    "cluster.eta",
    "cluster.gamma",
    "eps.c",
];

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Parsed but untyped key/value pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(cfg_err(format!("line {}: expected key = value", i + 1)));
            };
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(cfg_err(format!("line {}: unknown key '{k}'", i + 1)));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(cfg_err(format!("line {}: duplicate key '{k}'", i + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(cfg_err(format!("unknown key '{key}'")));
        }
        self.entries.insert(key.to_string(), value.into());
        Ok(())
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| cfg_err(format!("{key}: cannot parse '{v}'")))
            })
            .transpose()
    }

    fn or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| cfg_err(format!("{key}: bad number '{}'", s.trim())))
        })
        .collect()
}

fn parse_rows(key: &str, v: &str) -> Result<Vec<Vec<f64>>> {
    v.split(';').map(|r| parse_list(key, r)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    EigenTrace,
    DimSweep,
    ConvexCounterexample,
    Alb,
    Clustering,
    VerifyTheory,
}

impl Scenario {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "eigen_trace" => Self::EigenTrace,
            "dim_sweep" => Self::DimSweep,
            "convex_counterexample" => Self::ConvexCounterexample,
            "alb" => Self::Alb,
            "clustering" => Self::Clustering,
            "verify_theory" => Self::VerifyTheory,
            other => return Err(cfg_err(format!("unknown scenario '{other}'"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::EigenTrace => "eigen_trace",
            Self::DimSweep => "dim_sweep",
            Self::ConvexCounterexample => "convex_counterexample",
            Self::Alb => "alb",
            Self::Clustering => "clustering",
            Self::VerifyTheory => "verify_theory",
        }
    }

    fn uses_thompson(self) -> bool {
        matches!(self, Self::EigenTrace | Self::DimSweep | Self::ConvexCounterexample)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpaceSpec {
    Sphere,
    /// `shape` is either `d` diagonal entries or `d*d` row-major entries.
    Ellipsoid {
        shape: Vec<f64>,
        level: f64,
        center: Option<Vec<f64>>,
    },
    PNorm {
        p: f64,
        radius: f64,
    },
    Finite {
        points: Vec<Vec<f64>>,
    },
}

impl SpaceSpec {
    pub fn build(&self, d: usize) -> Result<ActionSpace> {
        match self {
            Self::Sphere => ActionSpace::unit_sphere(d),
            Self::Ellipsoid { shape, level, center } => {
                let m = if shape.len() == d {
                    SymMatrix::from_diag(shape)
                } else if shape.len() == d * d {
                    SymMatrix::from_row_major(d, shape.clone())?
                } else {
                    return Err(cfg_err(format!("space.shape needs {d} or {} entries", d * d)));
                };
                ActionSpace::ellipsoid(m, *level, center.clone().unwrap_or_else(|| vec![0.0; d]))
            }
            Self::PNorm { p, radius } => ActionSpace::pnorm_ball(d, *p, *radius),
            Self::Finite { points } => ActionSpace::finite_set(points.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThetaSpec {
    E1,
    Ones,
    Explicit(Vec<f64>),
}

impl ThetaSpec {
    pub fn build(&self, d: usize) -> Result<Vec<f64>> {
        match self {
            Self::E1 => Ok(basis(d, 0)),
            Self::Ones => Ok(vec![1.0; d]),
            Self::Explicit(v) if v.len() == d => Ok(v.clone()),
            Self::Explicit(v) => Err(cfg_err(format!("theta has {} entries, d = {d}", v.len()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// `None` inflates by the confidence radius.
    pub ts_scale: Option<f64>,
    /// `None` uses `||theta*||`.
    pub norm_bound: Option<f64>,
}

impl PolicySpec {
    pub fn build(&self, theta: &[f64], delta: f64) -> Result<PolicyConfig> {
        let b = self.norm_bound.unwrap_or_else(|| norm(theta));
        let mut p = match self.kind {
            PolicyKind::Uniform => return Ok(PolicyConfig::uniform()),
            kind => PolicyConfig::new(kind, delta, b)?,
        };
        if let Some(s) = self.ts_scale {
            p = p.with_ts_scale(s)?;
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlbSpec {
    pub b_init: f64,
    pub n1: usize,
    pub epochs: u32,
    pub mode: RefineMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSpec {
    pub agents: usize,
    pub params: Vec<Vec<f64>>,
    /// `None` uses the threshold formula with `gamma`.
    pub eta: Option<f64>,
    pub gamma: f64,
}

/// A fully defaulted, validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub scenario: Scenario,
    pub seed: u64,
    pub d: usize,
    pub n: usize,
    pub trials: usize,
    pub lambda: f64,
    pub delta: f64,
    pub sigma: f64,
    pub out: Option<PathBuf>,
    pub theta: ThetaSpec,
    pub space: SpaceSpec,
    pub policy: PolicySpec,
    pub checkpoint_count: usize,
    pub checkpoint_first: usize,
    pub k_sigma: f64,
    pub threshold: f64,
    pub tail_fraction: f64,
    pub dims: Vec<usize>,
    pub alb: AlbSpec,
    pub cluster: ClusterSpec,
    pub eps_c: f64,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    /// Applies the scenario's defaults to every unset key.
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let scenario = Scenario::parse(raw.get("scenario").ok_or_else(|| cfg_err("missing key 'scenario'"))?)?;
        use Scenario::*;
        let (d, n, trials, sigma) = match scenario {
            EigenTrace | DimSweep => (3, 8192, 20, 1.0),
            ConvexCounterexample => (5, 8192, 20, 1.0),
            Alb => (3, 0, 50, 1.0),
            Clustering => (2, 2048, 50, 0.1),
            VerifyTheory => (3, 4096, 20, 1.0),
        };
        let d = raw.or("d", d)?;
        let n_default = n;

        let theta = match raw.get("theta") {
            Some("e1") => ThetaSpec::E1,
            Some("ones") => ThetaSpec::Ones,
            Some(v) => ThetaSpec::Explicit(parse_list("theta", v)?),
            None => match scenario {
                ConvexCounterexample => ThetaSpec::Ones,
                Alb => ThetaSpec::Explicit({
                    let mut t = vec![0.0; d];
                    if d > 0 {
                        t[0] = 0.5;
                    }
                    t
                }),
                _ => ThetaSpec::E1,
            },
        };

        let kind = raw.get("space.kind").unwrap_or(if scenario == ConvexCounterexample {
            "pnorm"
        } else {
            "sphere"
        });
        let space = match kind {
            "sphere" => SpaceSpec::Sphere,
            "ellipsoid" => SpaceSpec::Ellipsoid {
                shape: parse_list(
                    "space.shape",
                    raw.get("space.shape")
                        .ok_or_else(|| cfg_err("ellipsoid needs space.shape"))?,
                )?,
                level: raw.or("space.level", 1.0)?,
                center: raw
                    .get("space.center")
                    .map(|v| parse_list("space.center", v))
                    .transpose()?,
            },
            "pnorm" => SpaceSpec::PNorm {
                p: raw.or("space.p", 10.0)?,
                radius: raw.or("space.radius", 1.0)?,
            },
            "finite" => SpaceSpec::Finite {
                points: parse_rows(
                    "space.points",
                    raw.get("space.points")
                        .ok_or_else(|| cfg_err("finite space needs space.points"))?,
                )?,
            },
            other => return Err(cfg_err(format!("unknown space.kind '{other}'"))),
        };

        let policy_kind = match raw.get("policy.kind") {
            Some(k) => PolicyKind::parse(k)?,
            None if scenario.uses_thompson() => PolicyKind::LinTs,
            None => PolicyKind::Oful,
        };
        let ts_scale = match raw.get("policy.ts_scale") {
            Some("radius") => None,
            Some(_) => raw.parsed("policy.ts_scale")?,
            None if scenario.uses_thompson() => Some(1.0),
            None => None,
        };

        let alb = AlbSpec {
            b_init: raw.or("alb.b_init", 10.0)?,
            n1: raw.or("alb.n1", 256)?,
            epochs: raw.or("alb.epochs", 6)?,
            mode: raw
                .get("alb.mode")
                .map(RefineMode::parse)
                .transpose()?
                .unwrap_or(RefineMode::Exact),
        };
        let n = match (scenario, raw.parsed::<usize>("n")?) {
            (_, Some(n)) => n,
            (Alb, None) => alb.n1.saturating_mul((1usize << alb.epochs.min(40)) - 1),
            _ => n_default,
        };

        let cluster = ClusterSpec {
            agents: raw.or("cluster.agents", 6)?,
            params: match raw.get("cluster.params") {
                Some(v) => parse_rows("cluster.params", v)?,
                None => {
                    let e = basis(d.max(1), 0);
                    vec![e.clone(), e.iter().map(|x| -x).collect()]
                }
            },
            eta: match raw.get("cluster.eta") {
                None if scenario == Clustering => Some(1.0),
                None | Some("auto") => None,
                Some(_) => raw.parsed("cluster.eta")?,
            },
            gamma: raw.or("cluster.gamma", 1.0)?,
        };

        let dims = match raw.get("sweep.dims") {
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| cfg_err(format!("sweep.dims: bad entry '{s}'")))
                })
                .collect::<Result<Vec<_>>>()?,
            None => vec![3, 5, 10],
        };

        let cfg = Self {
            name: raw.get("name").unwrap_or(scenario.name()).to_string(),
            scenario,
            seed: raw.or("seed", 0)?,
            d,
            n,
            trials: raw.or("trials", trials)?,
            lambda: raw.or("lambda", 1.0)?,
            delta: raw.or("delta", 0.05)?,
            sigma: raw.or("sigma", sigma)?,
            out: raw.get("out").map(PathBuf::from),
            theta,
            space,
            policy: PolicySpec {
                kind: policy_kind,
                ts_scale,
                norm_bound: raw.parsed("policy.norm_bound")?,
            },
            checkpoint_count: raw.or("checkpoints.count", 64)?,
            checkpoint_first: raw.or("checkpoints.first", 16)?,
            k_sigma: raw.or("band.k_sigma", 3.0)?,
            threshold: raw.or("exponent.threshold", 0.5)?,
            tail_fraction: raw.or("exponent.tail_fraction", 0.5)?,
            dims,
            alb,
            cluster,
            eps_c: raw.or("eps.c", 0.1)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(cfg_err("trials must be >= 1"));
        }
        if self.n == 0 {
            return Err(cfg_err("n must be >= 1"));
        }
        if self.d == 0 {
            return Err(cfg_err("d must be >= 1"));
        }
        if !(self.lambda > 0.0) {
            return Err(cfg_err("lambda must be > 0"));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(cfg_err("delta must lie in (0, 1]"));
        }
        if !(self.sigma >= 0.0) {
            return Err(cfg_err("sigma must be >= 0"));
        }
        if self.scenario.uses_thompson() && (self.checkpoint_first < 2 || self.checkpoint_first > self.n) {
            return Err(cfg_err("checkpoints.first must lie in [2, n]"));
        }
        if self.scenario == Scenario::DimSweep && self.dims.is_empty() {
            return Err(cfg_err("sweep.dims must not be empty"));
        }
        // Everything referenced must be constructible.
        let dims: Vec<usize> = if self.scenario == Scenario::DimSweep {
            self.dims.clone()
        } else {
            vec![self.d]
        };
        for &d in &dims {
            let theta = self.theta.build(d)?;
            self.space.build(d)?;
            self.policy.build(&theta, self.delta)?;
        }
        Ok(())
    }

    pub fn schedule(&self) -> CheckpointSchedule {
        CheckpointSchedule::geometric(self.checkpoint_count, self.checkpoint_first, self.n)
    }

    /// Non-fatal remarks about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.scenario == Scenario::Alb && self.alb.n1 < 256 {
            w.push(format!(
                "alb.n1 = {} is below 256; early norm estimates may undershoot the true norm",
                self.alb.n1
            ));
        }
        w
    }
}

/// Seed precedence: command-line flag, then `BANDITLAB_SEED`, then config.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>, config: u64) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match env.map(str::trim).filter(|s| !s.is_empty()) {
        Some(v) => v
            .parse()
            .map_err(|_| cfg_err(format!("BANDITLAB_SEED is not an unsigned integer: '{v}'"))),
        None => Ok(config),
    }
}
