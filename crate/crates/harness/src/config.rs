//! Experiment configuration files.
//!
//! A config is a TOML document. Top-level keys give the model and the
//! replica plan; optional `[order]`, `[limits]`, `[shape]` and `[death]`
//! tables tune individual experiments. Graphs and walkers are written as
//! short call expressions such as `dary_tree(2, 6)` or `death(0.7)`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use frog_core::orders::EmpiricalConfig;
use frog_core::orders::OrderKind;
use frog_core::{ConfigRule, ExplicitGraph, GraphKind, Limits, PathTable, WalkerKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    Simulate,
    Compare,
    Shape,
    Death,
}

impl ExperimentName {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Simulate => "simulate",
            ExperimentName::Compare => "compare",
            ExperimentName::Shape => "shape",
            ExperimentName::Death => "death",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderSection {
    #[serde(default = "default_order")]
    pub kind: String,
    #[serde(default = "default_t_grid")]
    pub t_grid: usize,
    #[serde(default = "default_bootstrap")]
    pub bootstrap_reps: usize,
    #[serde(default = "default_level")]
    pub level: f64,
}

impl Default for OrderSection {
    fn default() -> Self {
        OrderSection {
            kind: default_order(),
            t_grid: default_t_grid(),
            bootstrap_reps: default_bootstrap(),
            level: default_level(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsSection {
    #[serde(default = "default_cap")]
    pub max_active_frogs: usize,
    #[serde(default = "default_cap")]
    pub max_vertices: usize,
}

impl Default for LimitsSection {
    fn default() -> Self {
        LimitsSection {
            max_active_frogs: default_cap(),
            max_vertices: default_cap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSection {
    /// Lattice directions `v`; targets are `n v` for `n = 1..=n_max`.
    #[serde(default = "default_directions")]
    pub directions: Vec<Vec<i64>>,
    #[serde(default = "default_n_max")]
    pub n_max: u64,
}

impl Default for ShapeSection {
    fn default() -> Self {
        ShapeSection {
            directions: default_directions(),
            n_max: default_n_max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeathSection {
    #[serde(default = "default_survival")]
    pub survival: Vec<f64>,
    /// A run counts as surviving when more than this many vertices are
    /// visited before extinction.
    #[serde(default = "default_threshold")]
    pub threshold: u64,
}

impl Default for DeathSection {
    fn default() -> Self {
        DeathSection {
            survival: default_survival(),
            threshold: default_threshold(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentName,
    #[serde(default)]
    pub seed: u64,
    pub replicas: usize,
    pub horizons: Vec<u64>,
    pub graph: String,
    #[serde(default = "default_walker")]
    pub walker: String,
    pub rules: Vec<String>,
    /// Keep per-step root visit counts in each record.
    #[serde(default)]
    pub record_curves: bool,
    #[serde(default)]
    pub order: OrderSection,
    #[serde(default)]
    pub limits: LimitsSection,
    #[serde(default)]
    pub shape: ShapeSection,
    #[serde(default)]
    pub death: DeathSection,
    /// Output path; `--out` takes precedence. Not part of the digest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

fn default_order() -> String {
    "pgf".into()
}
fn default_t_grid() -> usize {
    frog_core::orders::DEFAULT_T_GRID
}
fn default_bootstrap() -> usize {
    2000
}
fn default_level() -> f64 {
    0.95
}
fn default_cap() -> usize {
    2_000_000
}
fn default_directions() -> Vec<Vec<i64>> {
    vec![vec![1, 0]]
}
fn default_n_max() -> u64 {
    30
}
fn default_survival() -> Vec<f64> {
    vec![0.5, 0.6, 0.7]
}
fn default_threshold() -> u64 {
    20
}
fn default_walker() -> String {
    "srw".into()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.message().to_string()))
    }

    /// Hex SHA-256 of the config as canonical JSON. Key order in the source
    /// file and the output path do not affect it.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        let json = serde_json::to_value(&c).expect("config serializes");
        let text = serde_json::to_string(&canonical(json)).expect("json serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn canonical(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, canonical(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonical).collect()),
        other => other,
    }
}

/// Split `name(args)` into its parts; a bare word has no arguments.
fn call(text: &str) -> Result<(&str, Vec<&str>)> {
    let text = text.trim();
    match text.find('(') {
        None => Ok((text, Vec::new())),
        Some(open) => {
            let inner = text[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| HarnessError::Config(format!("missing `)` in `{text}`")))?;
            let args = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner.split(',').map(str::trim).collect()
            };
            Ok((text[..open].trim(), args))
        }
    }
}

fn number<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| HarnessError::Config(format!("bad {what} `{s}`")))
}

fn probability(s: &str) -> Result<f64> {
    let p: f64 = number(s, "probability")?;
    if !p.is_finite() {
        return Err(HarnessError::Config(format!("bad probability `{s}`")));
    }
    Ok(p)
}

fn depth_cap(s: Option<&&str>) -> Result<Option<u32>> {
    match s.copied() {
        None | Some("inf") => Ok(None),
        Some(c) => Ok(Some(number(c, "depth cap")?)),
    }
}

fn arity(name: &str, args: &[&str], lo: usize, hi: usize) -> Result<()> {
    if args.len() < lo || args.len() > hi {
        return Err(HarnessError::Config(format!(
            "`{name}` takes {lo}..={hi} arguments, got {}",
            args.len()
        )));
    }
    Ok(())
}

/// Reads files named inside graph and walker expressions.
pub type Loader<'a> = &'a dyn Fn(&str) -> Result<String>;

/// A loader that refuses every file, for contexts without a filesystem.
pub fn no_files(name: &str) -> Result<String> {
    Err(HarnessError::Config(format!("file references are not allowed here: `{name}`")))
}

/// `lattice(d)`, `dary_tree(a[, cap])`, `regular_tree(d[, cap])` or
/// `explicit(file)`. A cap of `inf` means no cap.
pub fn parse_graph(text: &str, load: Loader<'_>) -> Result<GraphKind> {
    let (name, args) = call(text)?;
    let kind = match name {
        "lattice" => {
            arity(name, &args, 1, 1)?;
            GraphKind::Lattice {
                dim: number(args[0], "dimension")?,
            }
        }
        "dary_tree" => {
            arity(name, &args, 1, 2)?;
            GraphKind::DaryTree {
                arity: number(args[0], "arity")?,
                depth_cap: depth_cap(args.get(1))?,
            }
        }
        "regular_tree" => {
            arity(name, &args, 1, 2)?;
            GraphKind::RegularTree {
                degree: number(args[0], "degree")?,
                depth_cap: depth_cap(args.get(1))?,
            }
        }
        "explicit" => {
            arity(name, &args, 1, 1)?;
            GraphKind::Explicit(Arc::new(ExplicitGraph::parse(&load(args[0])?)?))
        }
        other => return Err(HarnessError::Config(format!("unknown graph `{other}`"))),
    };
    // surfaces bad dimensions and arities early
    frog_core::Graph::new(kind.clone())?;
    Ok(kind)
}

/// `srw`, `nonbacktracking`, `biased(p)`, `death(p)` or `table(file)`; a
/// path table needs an explicit graph.
pub fn parse_walker(text: &str, graph: &GraphKind, load: Loader<'_>) -> Result<WalkerKind> {
    let (name, args) = call(text)?;
    let walker = match name {
        "srw" => {
            arity(name, &args, 0, 0)?;
            WalkerKind::Srw
        }
        "nonbacktracking" => {
            arity(name, &args, 0, 0)?;
            WalkerKind::NonbacktrackingStoppedAtLeaves
        }
        "biased" => {
            arity(name, &args, 1, 1)?;
            WalkerKind::BiasedZ {
                p_right: probability(args[0])?,
            }
        }
        "death" => {
            arity(name, &args, 1, 1)?;
            WalkerKind::SrwWithDeath {
                survival: probability(args[0])?,
            }
        }
        "table" => {
            arity(name, &args, 1, 1)?;
            let GraphKind::Explicit(g) = graph else {
                return Err(HarnessError::Config("path tables need an explicit graph".into()));
            };
            WalkerKind::ExplicitTable(Arc::new(PathTable::parse(&load(args[0])?, g)?))
        }
        other => return Err(HarnessError::Config(format!("unknown walker `{other}`"))),
    };
    walker.validate(&frog_core::Graph::new(graph.clone())?)?;
    Ok(walker)
}

/// A config with every expression parsed and every invariant checked.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub digest: String,
    pub graph: GraphKind,
    pub walker: WalkerKind,
    pub rules: Vec<ConfigRule>,
    pub order: OrderKind,
    pub empirical: EmpiricalConfig,
    pub limits: Limits,
}

impl Experiment {
    /// Read a config file; relative file references resolve against its
    /// directory.
    pub fn load(path: &Path, seed: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut config = ExperimentConfig::from_toml(&text)?;
        if let Some(s) = seed {
            config.seed = s;
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::resolve(config, Some(&base))
    }

    /// Validate `config`. Without a base directory, file references are
    /// rejected.
    pub fn resolve(config: ExperimentConfig, base: Option<&Path>) -> Result<Self> {
        let read = |name: &str| -> Result<String> {
            let Some(dir) = base else {
                return no_files(name);
            };
            let p: PathBuf = dir.join(name);
            std::fs::read_to_string(&p).map_err(|e| HarnessError::io(p, e))
        };
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if config.replicas == 0 {
            return bad("replicas must be at least 1");
        }
        if config.horizons.is_empty() {
            return bad("at least one horizon is required");
        }
        if config.horizons.contains(&0) {
            return bad("horizons must be at least 1");
        }
        let graph = parse_graph(&config.graph, &read)?;
        let walker = parse_walker(&config.walker, &graph, &read)?;
        let rules = config
            .rules
            .iter()
            .map(|r| ConfigRule::parse(r))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        for r in &rules {
            r.validate()?;
        }
        match config.experiment {
            ExperimentName::Simulate | ExperimentName::Death if rules.is_empty() => {
                return bad("at least one rule is required");
            }
            ExperimentName::Compare | ExperimentName::Shape if rules.len() != 2 => {
                return bad("comparison experiments need exactly two rules");
            }
            _ => {}
        }
        let order: OrderKind = config
            .order
            .kind
            .parse()
            .map_err(|_| HarnessError::Config(format!("unknown order `{}`", config.order.kind)))?;
        let level = config.order.level;
        if !(level > 0.0 && level < 1.0) {
            return bad("order.level must be in (0,1)");
        }
        if config.order.t_grid == 0 || config.order.bootstrap_reps == 0 {
            return bad("order.t_grid and order.bootstrap_reps must be positive");
        }
        match config.experiment {
            ExperimentName::Shape => {
                let GraphKind::Lattice { dim } = graph else {
                    return bad("shape experiments need a lattice graph");
                };
                if config.shape.n_max == 0 || config.shape.directions.is_empty() {
                    return bad("shape needs n_max >= 1 and at least one direction");
                }
                for d in &config.shape.directions {
                    if d.len() != dim || d.iter().all(|&x| x == 0) {
                        return bad("shape directions must be nonzero vectors of the lattice dimension");
                    }
                }
            }
            ExperimentName::Death => {
                if matches!(graph, GraphKind::Explicit(_)) {
                    return bad("death experiments need a tree or lattice graph");
                }
                if config.death.survival.is_empty()
                    || config.death.survival.iter().any(|&p| !(p > 0.0 && p <= 1.0))
                {
                    return bad("death.survival must list probabilities in (0,1]");
                }
            }
            _ => {}
        }
        let empirical = EmpiricalConfig {
            t_grid: config.order.t_grid,
            bootstrap_reps: config.order.bootstrap_reps,
            level,
            seed: config.seed,
        };
        let limits = Limits {
            max_active_frogs: config.limits.max_active_frogs,
            max_vertices: config.limits.max_vertices,
        };
        Ok(Experiment {
            digest: config.digest(),
            config,
            graph,
            walker,
            rules,
            order,
            empirical,
            limits,
        })
    }

    pub fn max_horizon(&self) -> u64 {
        self.config.horizons.iter().copied().max().unwrap_or(1)
    }

    /// Horizons in increasing order without repeats.
    pub fn horizons(&self) -> Vec<u64> {
        let mut h = self.config.horizons.clone();
        h.sort_unstable();
        h.dedup();
        h
    }
}
