//! Frog model dynamics.
//!
//! Time is discrete and synchronous. At step `t` every active frog makes one
//! move or stops. A dormant pile wakes at the first step an active frog
//! lands on its vertex, and the woken frogs make their first move at step
//! `t + 1`. A frog woken at time `s` therefore sits at position `k` of its
//! path at time `s + k`, so activation times are shortest sums of path
//! lengths along waking chains.
//!
//! Root visits count every arrival at the root at steps `>= 1`. The initial
//! frog sitting on the root at step 0 is not a visit.

mod explicit;

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use explicit::{run_explicit, run_explicit_shuffled, ExplicitModel};

use crate::error::{CapKind, Error, Result};
use crate::graph::{Graph, GraphKind, VertexId, VertexLabel};
use crate::init_config::{sample_count, ConfigRule};
use crate::paths::{self, FrogKey, Step, WalkerKind};
use crate::stream::{derive_seed, draw, Domain};

const UNVISITED: u64 = u64::MAX;

/// Resource caps for one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_active_frogs: usize,
    pub max_vertices: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_active_frogs: 10_000_000,
            max_vertices: 10_000_000,
        }
    }
}

/// Everything needed to run one replica of the frog model.
#[derive(Debug, Clone)]
pub struct FrogModelSpec {
    pub graph: GraphKind,
    pub rule: ConfigRule,
    pub walker: WalkerKind,
    pub horizon: u64,
    /// Keys the path streams.
    pub seed: u64,
    /// Keys the count streams; defaults to a value derived from `seed`.
    pub count_seed: Option<u64>,
    pub limits: Limits,
}

impl FrogModelSpec {
    pub fn new(graph: GraphKind, rule: ConfigRule, walker: WalkerKind, horizon: u64, seed: u64) -> Self {
        FrogModelSpec {
            graph,
            rule,
            walker,
            horizon,
            seed,
            count_seed: None,
            limits: Limits::default(),
        }
    }

    pub fn count_seed(&self) -> u64 {
        self.count_seed
            .unwrap_or_else(|| derive_seed(self.seed, Domain::Count as u64))
    }

    /// Hex SHA-256 of the model description (seeds excluded).
    pub fn digest(&self) -> String {
        let text = format!(
            "graph={};rule={};walker={};horizon={}",
            self.graph, self.rule, self.walker, self.horizon
        );
        hex_digest(text.as_bytes())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Record of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimOutcome {
    pub horizon: u64,
    /// Last step at which any frog moved.
    pub last_move: u64,
    pub root_visits: u64,
    /// Root visits split by the origin of the visiting frog.
    pub root_visits_by_origin: BTreeMap<VertexLabel, u64>,
    /// Activated vertices with their activation times, root first at time 0,
    /// in activation order.
    pub activations: Vec<(VertexLabel, u64)>,
    /// `(step, cumulative root visits)` at each step where the count changed.
    pub visit_curve: Vec<(u64, u64)>,
    pub frogs_woken: u64,
}

impl SimOutcome {
    /// Number of non-root vertices activated by time `t`.
    pub fn visited_count(&self, t: u64) -> u64 {
        self.activations
            .iter()
            .filter(|(l, s)| *s <= t && !is_root_label(l, &self.activations))
            .count() as u64
    }

    /// Number of non-root vertices ever activated.
    pub fn visited_total(&self) -> u64 {
        self.activations.len().saturating_sub(1) as u64
    }

    pub fn activation_time(&self, label: &VertexLabel) -> Option<u64> {
        self.activations
            .iter()
            .find(|(l, _)| l == label)
            .map(|&(_, t)| t)
    }

    pub fn visited_labels(&self) -> impl Iterator<Item = &VertexLabel> {
        self.activations.iter().map(|(l, _)| l)
    }

    /// Cumulative root visits up to and including step `t`.
    pub fn root_visits_by(&self, t: u64) -> u64 {
        match self.visit_curve.partition_point(|&(s, _)| s <= t) {
            0 => 0,
            i => self.visit_curve[i - 1].1,
        }
    }

    /// The cumulative root-visit curve as a dense array of length
    /// `horizon + 1`.
    pub fn visits_by_step(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.horizon as usize + 1);
        let mut it = self.visit_curve.iter().peekable();
        let mut cur = 0;
        for t in 0..=self.horizon {
            while let Some(&&(s, c)) = it.peek() {
                if s <= t {
                    cur = c;
                    it.next();
                } else {
                    break;
                }
            }
            out.push(cur);
        }
        out
    }

    pub fn root_visits_from(&self, label: &VertexLabel) -> u64 {
        self.root_visits_by_origin.get(label).copied().unwrap_or(0)
    }
}

fn is_root_label(l: &VertexLabel, activations: &[(VertexLabel, u64)]) -> bool {
    activations.first().is_some_and(|(r, _)| r == l)
}

#[derive(Debug, Clone, Copy)]
struct ActiveFrog {
    key: FrogKey,
    pos: VertexId,
    prev: Option<VertexId>,
    moves: u64,
}

enum Counts {
    Rule(ConfigRule, u64),
    Fixed(Vec<u32>),
}

/// A run in progress. Owns its graph and is confined to one thread.
pub struct Simulation {
    graph: Graph,
    walker: WalkerKind,
    counts: Counts,
    seed: u64,
    horizon: u64,
    limits: Limits,
    time: u64,
    last_move: u64,
    active: Vec<ActiveFrog>,
    scratch: Vec<ActiveFrog>,
    woken: Vec<ActiveFrog>,
    activation: Vec<u64>,
    order: Vec<VertexId>,
    root_visits: u64,
    by_origin: FxHashMap<VertexId, u64>,
    curve: Vec<(u64, u64)>,
    frogs_woken: u64,
    shuffle_seed: Option<u64>,
}

impl Simulation {
    pub fn new(spec: &FrogModelSpec) -> Result<Self> {
        if spec.horizon == 0 {
            return Err(Error::config("horizon must be >= 1"));
        }
        spec.rule.validate()?;
        let graph = Graph::new(spec.graph.clone())?.with_vertex_limit(spec.limits.max_vertices);
        spec.walker.validate(&graph)?;
        Ok(Self::from_parts(
            graph,
            spec.walker.clone(),
            Counts::Rule(spec.rule.clone(), spec.count_seed()),
            spec.seed,
            spec.horizon,
            spec.limits,
        ))
    }

    fn from_parts(
        graph: Graph,
        walker: WalkerKind,
        counts: Counts,
        seed: u64,
        horizon: u64,
        limits: Limits,
    ) -> Self {
        Simulation {
            graph,
            walker,
            counts,
            seed,
            horizon,
            limits,
            time: 0,
            last_move: 0,
            active: vec![ActiveFrog {
                key: FrogKey::initial(),
                pos: VertexId::ROOT,
                prev: None,
                moves: 0,
            }],
            scratch: Vec::new(),
            woken: Vec::new(),
            activation: vec![0],
            order: vec![VertexId::ROOT],
            root_visits: 0,
            by_origin: FxHashMap::default(),
            curve: Vec::new(),
            frogs_woken: 1,
            shuffle_seed: None,
        }
    }

    /// Permute the order in which frogs move within each step. The dynamics
    /// do not depend on this order; the option exists to check that.
    pub fn with_move_shuffle(mut self, seed: u64) -> Self {
        self.shuffle_seed = Some(seed);
        self
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn active_frogs(&self) -> usize {
        self.active.len()
    }

    pub fn is_quiescent(&self) -> bool {
        self.active.is_empty()
    }

    pub fn root_visits(&self) -> u64 {
        self.root_visits
    }

    /// Activation time of `v`, if it has been visited.
    pub fn activation_time(&self, v: VertexId) -> Option<u64> {
        match self.activation.get(v.index()) {
            Some(&t) if t != UNVISITED => Some(t),
            _ => None,
        }
    }

    /// Activation time of the vertex with this label, if visited.
    pub fn activation_time_of(&self, label: &VertexLabel) -> Option<u64> {
        self.graph
            .lookup(label)
            .and_then(|v| self.activation_time(v))
    }

    /// Vertices activated so far, in activation order.
    pub fn activated(&self) -> &[VertexId] {
        &self.order
    }

    /// Advance one step. On hitting a resource cap the error carries the
    /// outcome up to the previous step.
    pub fn step(&mut self) -> Result<()> {
        match self.step_inner() {
            Ok(()) => Ok(()),
            Err(Error::VertexLimit(_)) => Err(self.capped(CapKind::Vertices)),
            Err(e) => Err(e),
        }
    }

    fn capped(&self, kind: CapKind) -> Error {
        Error::Capped {
            kind,
            step: self.time,
            partial: Box::new(self.snapshot(self.time)),
        }
    }

    fn step_inner(&mut self) -> Result<()> {
        let t = self.time + 1;
        let mut frogs = std::mem::take(&mut self.active);
        if let Some(s) = self.shuffle_seed {
            // Fisher-Yates with counter-based draws
            for i in (1..frogs.len()).rev() {
                let j = (draw(s, Domain::Replica, t, i as u64, 0) % (i as u64 + 1)) as usize;
                frogs.swap(i, j);
            }
        }
        let mut survivors = std::mem::take(&mut self.scratch);
        survivors.clear();
        let before = self.root_visits;
        let mut failure = None;
        for mut f in frogs.drain(..) {
            if failure.is_some() {
                survivors.push(f);
                continue;
            }
            let s = paths::step(
                &self.walker,
                &mut self.graph,
                f.key,
                f.pos,
                f.prev,
                f.moves,
                self.seed,
            );
            let w = match s {
                Ok(Step::Move(w)) => w,
                Ok(Step::Stopped) => continue,
                Err(e) => {
                    failure = Some(e);
                    survivors.push(f);
                    continue;
                }
            };
            f.prev = Some(f.pos);
            f.pos = w;
            f.moves += 1;
            self.last_move = t;
            if w.is_root() {
                self.root_visits += 1;
                *self.by_origin.entry(f.key.origin).or_insert(0) += 1;
            }
            if w.index() >= self.activation.len() {
                self.activation.resize(w.index() + 1, UNVISITED);
            }
            if self.activation[w.index()] == UNVISITED {
                self.activation[w.index()] = t;
                self.order.push(w);
                let n = match &self.counts {
                    Counts::Rule(rule, cs) => sample_count(rule, &self.graph, w, *cs),
                    Counts::Fixed(c) => Ok(c.get(w.index()).copied().unwrap_or(0)),
                };
                let n = match n {
                    Ok(n) => n,
                    Err(e) => {
                        failure = Some(e);
                        0
                    }
                };
                self.frogs_woken += u64::from(n);
                self.woken.extend((1..=n).map(|i| ActiveFrog {
                    key: FrogKey::new(w, i),
                    pos: w,
                    prev: None,
                    moves: 0,
                }));
            }
            survivors.push(f);
        }
        survivors.append(&mut self.woken);
        self.scratch = frogs;
        self.active = survivors;
        self.time = t;
        if self.root_visits != before {
            self.curve.push((t, self.root_visits));
        }
        if let Some(e) = failure {
            return Err(e);
        }
        if self.active.len() > self.limits.max_active_frogs {
            return Err(self.capped(CapKind::ActiveFrogs));
        }
        Ok(())
    }

    /// Step until the horizon or until no frog is active.
    pub fn run_to_horizon(&mut self) -> Result<()> {
        while self.time < self.horizon && !self.active.is_empty() {
            self.step()?;
        }
        Ok(())
    }

    /// Step until `stop` returns true, the horizon is reached, or no frog is
    /// active.
    pub fn run_until(&mut self, mut stop: impl FnMut(&Simulation) -> bool) -> Result<()> {
        while self.time < self.horizon && !self.active.is_empty() && !stop(self) {
            self.step()?;
        }
        Ok(())
    }

    fn snapshot(&self, horizon: u64) -> SimOutcome {
        let label = |v: VertexId| {
            self.graph
                .coordinates(v)
                .expect("activated vertices are issued by the graph")
        };
        SimOutcome {
            horizon,
            last_move: self.last_move,
            root_visits: self.root_visits,
            root_visits_by_origin: self
                .by_origin
                .iter()
                .map(|(&v, &c)| (label(v), c))
                .collect(),
            activations: self
                .order
                .iter()
                .map(|&v| (label(v), self.activation[v.index()]))
                .collect(),
            visit_curve: self.curve.clone(),
            frogs_woken: self.frogs_woken,
        }
    }

    /// The outcome at the configured horizon. Steps not yet simulated are
    /// treated as idle, which is exact once the run is quiescent.
    pub fn outcome(&self) -> SimOutcome {
        self.snapshot(self.horizon)
    }
}

/// Run `spec` for exactly `spec.horizon` steps (stopping early only once
/// every frog has stopped, which changes nothing).
pub fn run(spec: &FrogModelSpec) -> Result<SimOutcome> {
    let mut sim = Simulation::new(spec)?;
    sim.run_to_horizon()?;
    Ok(sim.outcome())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ExplicitGraph;
    use crate::paths::PathTable;
    use std::sync::Arc;

    fn z1_spec(rule: ConfigRule, horizon: u64, seed: u64) -> FrogModelSpec {
        FrogModelSpec::new(
            GraphKind::Lattice { dim: 1 },
            rule,
            WalkerKind::Srw,
            horizon,
            seed,
        )
    }

    #[test]
    fn seed_determinism() {
        let spec = z1_spec(ConfigRule::Deterministic(1), 300, 42);
        assert_eq!(run(&spec).unwrap(), run(&spec).unwrap());
    }

    #[test]
    fn outcome_invariants() {
        let spec = FrogModelSpec::new(
            GraphKind::Lattice { dim: 2 },
            ConfigRule::Deterministic(1),
            WalkerKind::Srw,
            60,
            7,
        );
        let out = run(&spec).unwrap();
        let curve = out.visits_by_step();
        assert_eq!(curve.len(), 61);
        assert!(curve.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(curve[60], out.root_visits);
        assert_eq!(curve[0], 0);
        assert_eq!(out.activations[0], (VertexLabel::Lattice(vec![0, 0]), 0));
        assert!(out.activations.iter().all(|&(_, t)| t <= 60));
        let by_origin: u64 = out.root_visits_by_origin.values().sum();
        assert_eq!(by_origin, out.root_visits);
    }

    #[test]
    fn single_walker_when_no_dormant_frogs() {
        let spec = z1_spec(ConfigRule::Deterministic(0), 200, 3);
        let out = run(&spec).unwrap();
        let mut g = Graph::new(GraphKind::Lattice { dim: 1 }).unwrap();
        let path = paths::prefix(&WalkerKind::Srw, &mut g, FrogKey::initial(), 200, 3).unwrap();
        let returns = path.iter().skip(1).filter(|v| v.is_root()).count() as u64;
        assert_eq!(out.root_visits, returns);
        let mut labels: Vec<_> = path.iter().map(|&v| g.coordinates(v).unwrap()).collect();
        labels.sort();
        labels.dedup();
        let mut visited: Vec<_> = out.visited_labels().cloned().collect();
        visited.sort();
        assert_eq!(visited, labels);
    }

    #[test]
    fn active_frog_cap_reports_partial_outcome() {
        let mut spec = FrogModelSpec::new(
            GraphKind::DaryTree {
                arity: 3,
                depth_cap: None,
            },
            ConfigRule::Deterministic(2),
            WalkerKind::Srw,
            1000,
            1,
        );
        spec.limits.max_active_frogs = 500;
        match run(&spec) {
            Err(Error::Capped {
                kind: CapKind::ActiveFrogs,
                partial,
                step,
            }) => {
                assert!(step < 1000);
                assert!(partial.visited_total() > 0);
            }
            other => panic!("expected cap, got {other:?}"),
        }
        spec.limits = Limits {
            max_active_frogs: usize::MAX,
            max_vertices: 50,
        };
        assert!(matches!(
            run(&spec),
            Err(Error::Capped {
                kind: CapKind::Vertices,
                ..
            })
        ));
    }

    #[test]
    fn move_order_does_not_matter() {
        let spec = FrogModelSpec::new(
            GraphKind::Lattice { dim: 2 },
            ConfigRule::Iid(crate::init_config::Pmf::poisson(1.0, 1e-12).unwrap()),
            WalkerKind::Srw,
            80,
            5,
        );
        let mut a = Simulation::new(&spec).unwrap();
        a.run_to_horizon().unwrap();
        let mut b = Simulation::new(&spec).unwrap().with_move_shuffle(9);
        b.run_to_horizon().unwrap();
        let (oa, ob) = (a.outcome(), b.outcome());
        assert_eq!(oa.root_visits, ob.root_visits);
        let ma: BTreeMap<_, _> = oa.activations.into_iter().collect();
        let mb: BTreeMap<_, _> = ob.activations.into_iter().collect();
        assert_eq!(ma, mb);
    }

    #[test]
    fn zero_horizon_rejected() {
        assert!(Simulation::new(&z1_spec(ConfigRule::Deterministic(1), 0, 1)).is_err());
    }

    #[test]
    fn explicit_rule_on_explicit_graph() {
        let g = Arc::new(ExplicitGraph::parse("root r\nr a\n").unwrap());
        let table = PathTable::parse("r 1 : r a r\na 1 : a r\n", &g).unwrap();
        let spec = FrogModelSpec::new(
            GraphKind::Explicit(g),
            ConfigRule::parse("explicit({a: 1})").unwrap(),
            WalkerKind::ExplicitTable(Arc::new(table)),
            10,
            0,
        );
        assert_eq!(run(&spec).unwrap().root_visits, 2);
    }
}
