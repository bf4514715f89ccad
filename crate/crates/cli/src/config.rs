//! Scenario files.
//!
//! A scenario is a TOML document with four sections:
//!
//! ```toml
//! [simulation]
//! epsilon = 0.01
//! kappa = 100.0          # or `nu = 1.0`; exactly one of the two
//! horizon = 1.0
//! seed = 42              # required
//! checkpoints = [0.0, 0.5, 1.0]
//! record_every = 10      # steps between rows of moments.csv
//! replicas = 1
//!
//! [followers]
//! count = 10000
//! c_f = 1.0
//! variance = 0.01        # scaled variance of follower-follower noise
//! kernel = { kind = "constant", level = 1.0 }
//! diffusion = { kind = "quadratic_cap" }
//! initial = { law = "uniform", lo = -1.0, hi = -0.5 }
//!
//! [[leaders]]            # one table per family
//! rho = 0.05             # default 0.05
//! count = 526            # default: families are rho of the whole population
//! c_fl_hat = 0.1
//! c_l_hat = 0.1
//! target = 0.5
//! psi = 0.5
//! adaptive = { delta = 0.5, delta_bar = 0.5 }   # optional
//! follower_kernel = { kind = "constant", level = 1.0 }
//! follower_diffusion = { kind = "quadratic_cap" }
//! follower_variance = 0.01
//! leader_kernel = { kind = "constant", level = 1.0 }
//! leader_diffusion = { kind = "quadratic_cap" }
//! leader_variance = 0.01
//! initial = { law = "normal", mean = 0.5, variance = 0.05 }
//!
//! [output]
//! bins = 100
//! oracle_tolerance = 0.02
//! ```
//!
//! Kernels are `constant { level }` or `bounded_confidence { threshold }`;
//! diffusions are `none`, `constant { level }` or `quadratic_cap`
//! (`1 - w^2`). Initial laws are `uniform { lo, hi }`,
//! `normal { mean, variance }` and `gamma { shape, scale, shift }`; the
//! unbounded ones are truncated to `[-1, 1]` by resampling, so a skewed
//! start such as `gamma { shape = 2, scale = 0.25, shift = -1 }` is the
//! shifted law conditioned on `[-1, 1]`.

use std::path::Path;

use opinion_kinetics::engine::{leader_counts, FamilyKernels, InitialLaw, LeaderFamily, Model, OpinionEnsemble, RunSettings};
use opinion_kinetics::params::DEFAULT_FAMILY_MASS;
use opinion_kinetics::{
    AdaptiveWindows, CompromiseKernel, DiffusionShape, Error as CoreError, FamilyScaling, LeaderStrategy, Penalty,
    RawScaling, ScaledParams,
};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub simulation: SimulationSection,
    pub followers: FollowerSection,
    #[serde(default)]
    pub leaders: Vec<LeaderSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub horizon: f64,
    pub seed: u64,
    #[serde(default)]
    pub checkpoints: Vec<f64>,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default = "one")]
    pub replicas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FollowerSection {
    pub count: usize,
    #[serde(default = "unit")]
    pub c_f: f64,
    pub variance: f64,
    #[serde(default)]
    pub kernel: CompromiseKernel,
    #[serde(default)]
    pub diffusion: DiffusionShape,
    pub initial: InitialLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeaderSection {
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    pub c_fl_hat: f64,
    pub c_l_hat: f64,
    pub target: f64,
    pub psi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adaptive: Option<AdaptiveWindows>,
    #[serde(default)]
    pub follower_kernel: CompromiseKernel,
    #[serde(default)]
    pub follower_diffusion: DiffusionShape,
    pub follower_variance: f64,
    #[serde(default)]
    pub leader_kernel: CompromiseKernel,
    #[serde(default)]
    pub leader_diffusion: DiffusionShape,
    pub leader_variance: f64,
    pub initial: InitialLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_tolerance")]
    pub oracle_tolerance: f64,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            bins: default_bins(),
            oracle_tolerance: default_tolerance(),
        }
    }
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

fn default_rho() -> f64 {
    DEFAULT_FAMILY_MASS
}

fn default_bins() -> usize {
    100
}

fn default_tolerance() -> f64 {
    0.02
}

/// Reads `path` and applies `KEY=VALUE` overrides on dotted paths
/// (`simulation.seed=7`, `leaders.1.psi=0.8`) before validation of the
/// schema. Values are parsed as TOML and fall back to plain strings.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    parse_config(&text, overrides)
}

pub fn parse_config(text: &str, overrides: &[String]) -> Result<ScenarioConfig> {
    if overrides.is_empty() {
        return toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()));
    }
    let mut table: toml::Table = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let merged = toml::to_string(&table).map_err(|e| CliError::Parse(e.to_string()))?;
    toml::from_str(&merged).map_err(|e| CliError::Parse(e.to_string()))
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&wrapped) {
        Ok(mut t) => t.remove("v").expect("key v was just parsed"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::invalid(assignment, "override must look like KEY=VALUE"))?;
    let path = path.trim();
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::invalid(path, "empty path segment"));
    }
    let mut root = toml::Value::Table(std::mem::take(table));
    let result = set_path(&mut root, &parts, parse_value(raw.trim()), path);
    if let toml::Value::Table(t) = root {
        *table = t;
    }
    result
}

/// Array elements are addressed by index (`leaders.0.psi`).
fn set_path(node: &mut toml::Value, parts: &[&str], value: toml::Value, full: &str) -> Result<()> {
    let (head, rest) = parts.split_first().expect("paths are non-empty");
    let child = match node {
        toml::Value::Table(t) => {
            if rest.is_empty() {
                t.insert(head.to_string(), value);
                return Ok(());
            }
            t.get_mut(*head)
                .ok_or_else(|| CliError::invalid(full, format!("no section `{head}`")))?
        }
        toml::Value::Array(items) => {
            let len = items.len();
            let i: usize = head
                .parse()
                .map_err(|_| CliError::invalid(full, format!("`{head}` is not an array index")))?;
            let item = items
                .get_mut(i)
                .ok_or_else(|| CliError::invalid(full, format!("index {i} out of range (len {len})")))?;
            if rest.is_empty() {
                *item = value;
                return Ok(());
            }
            item
        }
        _ => return Err(CliError::invalid(full, format!("`{head}` is below a plain value"))),
    };
    set_path(child, rest, value, full)
}

/// A validated scenario ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub params: ScaledParams,
    pub model: Model,
    pub leader_counts: Vec<usize>,
    pub strategies: Vec<LeaderStrategy>,
    pub settings: RunSettings,
}

fn at(key: impl Into<String>) -> impl FnOnce(CoreError) -> CliError {
    let key = key.into();
    move |e| match e {
        CoreError::InvalidParameter { reason, .. } => CliError::invalid(key, reason),
        other => CliError::invalid(key, other),
    }
}

fn check(key: &str, ok: bool, reason: impl ToString) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::invalid(key, reason))
    }
}

fn finite_positive(key: &str, v: f64) -> Result<()> {
    check(key, v.is_finite() && v > 0.0, format!("{v} must be finite and > 0"))
}

fn finite_non_negative(key: &str, v: f64) -> Result<()> {
    check(key, v.is_finite() && v >= 0.0, format!("{v} must be finite and >= 0"))
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<Scenario> {
        let sim = &self.simulation;
        finite_positive("simulation.epsilon", sim.epsilon)?;
        let penalty = match (sim.nu, sim.kappa) {
            (Some(nu), None) => {
                finite_positive("simulation.nu", nu)?;
                Penalty::Nu(nu)
            }
            (None, Some(k)) => {
                finite_positive("simulation.kappa", k)?;
                Penalty::Kappa(k)
            }
            (Some(_), Some(_)) => return Err(CliError::invalid("simulation.nu", "give either nu or kappa, not both")),
            (None, None) => return Err(CliError::invalid("simulation.kappa", "one of nu or kappa is required")),
        };
        finite_non_negative("simulation.horizon", sim.horizon)?;
        for (i, &c) in sim.checkpoints.iter().enumerate() {
            check(
                &format!("simulation.checkpoints[{i}]"),
                (0.0..=sim.horizon).contains(&c),
                format!("{c} is outside [0, {}]", sim.horizon),
            )?;
        }
        check("simulation.record_every", sim.record_every >= 1, "must be >= 1")?;
        check("simulation.replicas", sim.replicas >= 1, "must be >= 1")?;

        let f = &self.followers;
        check("followers.count", f.count >= 1, "must be >= 1")?;
        finite_positive("followers.c_f", f.c_f)?;
        finite_non_negative("followers.variance", f.variance)?;
        f.kernel.validate().map_err(at("followers.kernel"))?;
        f.diffusion.validate().map_err(at("followers.diffusion"))?;
        f.initial.validate().map_err(at("followers.initial"))?;

        let mut families = Vec::with_capacity(self.leaders.len());
        let mut kernels = Vec::with_capacity(self.leaders.len());
        let mut strategies = Vec::with_capacity(self.leaders.len());
        for (i, l) in self.leaders.iter().enumerate() {
            let key = |name: &str| format!("leaders[{i}].{name}");
            check(&key("rho"), l.rho > 0.0 && l.rho <= 1.0, format!("{} not in (0, 1]", l.rho))?;
            if let Some(n) = l.count {
                check(&key("count"), n >= 1, "must be >= 1")?;
            }
            finite_positive(&key("c_fl_hat"), l.c_fl_hat)?;
            finite_positive(&key("c_l_hat"), l.c_l_hat)?;
            check(&key("target"), (-1.0..=1.0).contains(&l.target), format!("{} not in [-1, 1]", l.target))?;
            check(&key("psi"), (0.0..=1.0).contains(&l.psi), format!("{} not in [0, 1]", l.psi))?;
            finite_non_negative(&key("follower_variance"), l.follower_variance)?;
            finite_non_negative(&key("leader_variance"), l.leader_variance)?;
            l.follower_kernel.validate().map_err(at(key("follower_kernel")))?;
            l.leader_kernel.validate().map_err(at(key("leader_kernel")))?;
            l.follower_diffusion.validate().map_err(at(key("follower_diffusion")))?;
            l.leader_diffusion.validate().map_err(at(key("leader_diffusion")))?;
            l.initial.validate().map_err(at(key("initial")))?;
            let strategy = match l.adaptive {
                Some(w) => LeaderStrategy::adaptive(l.psi, l.target, w).map_err(at(key("adaptive")))?,
                None => LeaderStrategy::new(l.psi, l.target).map_err(at(key("psi")))?,
            };
            strategies.push(strategy);
            families.push(FamilyScaling {
                rho: l.rho,
                c_fl_hat: l.c_fl_hat,
                c_l_hat: l.c_l_hat,
                follower_variance: l.follower_variance,
                leader_variance: l.leader_variance,
            });
            kernels.push(FamilyKernels {
                follower_kernel: l.follower_kernel,
                follower_diffusion: l.follower_diffusion,
                leader_kernel: l.leader_kernel,
                leader_diffusion: l.leader_diffusion,
            });
        }
        let total: f64 = self.leaders.iter().map(|l| l.rho).sum();
        let needs_convention = self.leaders.iter().any(|l| l.count.is_none());
        check(
            "leaders.rho",
            if needs_convention { total < 1.0 } else { total <= 1.0 },
            format!("family masses sum to {total}"),
        )?;
        let masses: Vec<f64> = self.leaders.iter().map(|l| l.rho).collect();
        let derived = if needs_convention {
            leader_counts(f.count, &masses).map_err(at("leaders.rho"))?
        } else {
            vec![0; masses.len()]
        };
        let counts: Vec<usize> = self
            .leaders
            .iter()
            .zip(derived)
            .map(|(l, d)| l.count.unwrap_or(d))
            .collect();

        let out = &self.output;
        check("output.bins", out.bins >= 2, format!("{} < 2", out.bins))?;
        finite_positive("output.oracle_tolerance", out.oracle_tolerance)?;

        let params = ScaledParams::derive(&RawScaling {
            epsilon: sim.epsilon,
            penalty,
            c_f: f.c_f,
            follower_variance: f.variance,
            families,
        })
        .map_err(at("simulation"))?;
        let model = Model::new(params.clone(), f.kernel, f.diffusion, &kernels).map_err(|e| match e {
            CoreError::CertificateFailed(msg) => {
                let family = msg
                    .strip_prefix("family ")
                    .and_then(|rest| rest.split(':').next())
                    .and_then(|n| n.parse::<usize>().ok())
                    .map_or(0, |n| n - 1);
                let failures = msg.split_once(": ").map_or(msg.clone(), |(_, f)| f.to_string());
                CliError::Certificate { family, failures }
            }
            other => CliError::Runtime(other),
        })?;

        Ok(Scenario {
            config: self.clone(),
            params,
            model,
            leader_counts: counts,
            strategies,
            settings: RunSettings {
                horizon: sim.horizon,
                checkpoints: sim.checkpoints.clone(),
                record_every: sim.record_every,
                bins: out.bins,
            },
        })
    }

    /// The same scenario with every default made explicit.
    pub fn canonical(&self) -> Result<ScenarioConfig> {
        let scenario = self.validate()?;
        let mut c = self.clone();
        for (l, n) in c.leaders.iter_mut().zip(&scenario.leader_counts) {
            l.count = Some(*n);
        }
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Parse(e.to_string()))
    }
}

impl Scenario {
    /// Samples the initial followers, then each family in order.
    pub fn initial_ensemble<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<OpinionEnsemble> {
        let followers = self
            .config
            .followers
            .initial
            .sample(self.config.followers.count, rng)
            .map_err(at("followers.initial"))?;
        let mut families = Vec::with_capacity(self.config.leaders.len());
        for (i, l) in self.config.leaders.iter().enumerate() {
            families.push(LeaderFamily {
                leaders: l
                    .initial
                    .sample(self.leader_counts[i], rng)
                    .map_err(at(format!("leaders[{i}].initial")))?,
                mass: l.rho,
                strategy: self.strategies[i],
            });
        }
        Ok(OpinionEnsemble::new(followers, families)?)
    }
}
