//! Frog path generators.
//!
//! A frog is identified by its origin and index, and its `k`-th move draws
//! from the stream keyed by `(seed, origin label, index, k)`. The realized
//! path of a frog therefore does not depend on which other frogs exist.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{strip_comment, ExplicitGraph, Graph, GraphKind, VertexId};
use crate::stream::{index_below, uniform, Domain};

/// The `index`-th frog placed at `origin` (indices start at 1). The initial
/// active frog is `(root, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrogKey {
    pub origin: VertexId,
    pub index: u32,
}

impl FrogKey {
    pub fn new(origin: VertexId, index: u32) -> Self {
        FrogKey { origin, index }
    }

    pub fn initial() -> Self {
        FrogKey::new(VertexId::ROOT, 1)
    }
}

/// Stored paths for an explicit model.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathTable {
    paths: BTreeMap<FrogKey, Vec<VertexId>>,
}

impl PathTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &FrogKey) -> Option<&[VertexId]> {
        self.paths.get(key).map(Vec::as_slice)
    }

    pub fn insert(&mut self, key: FrogKey, path: Vec<VertexId>) -> Option<Vec<VertexId>> {
        self.paths.insert(key, path)
    }

    pub fn remove(&mut self, key: &FrogKey) -> Option<Vec<VertexId>> {
        self.paths.remove(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FrogKey, &Vec<VertexId>)> {
        self.paths.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &FrogKey> {
        self.paths.keys()
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Drop every entry originating at `v`.
    pub fn remove_origin(&mut self, v: VertexId) {
        self.paths.retain(|k, _| k.origin != v);
    }

    /// Check that every path starts at its origin and moves along edges.
    pub fn validate(&self, g: &ExplicitGraph) -> Result<()> {
        for (key, path) in &self.paths {
            let name = |v: VertexId| g.name(v).unwrap_or("?").to_string();
            if key.index == 0 {
                return Err(Error::config("frog indices start at 1"));
            }
            if key.origin.index() >= g.len() {
                return Err(Error::UnknownVertex(key.origin.0));
            }
            match path.first() {
                Some(&v0) if v0 == key.origin => {}
                _ => {
                    return Err(Error::config(format!(
                        "path of frog ({}, {}) does not start at its origin",
                        name(key.origin),
                        key.index
                    )))
                }
            }
            for w in path.windows(2) {
                if w[1].index() >= g.len() || !g.adjacent(w[0]).contains(&w[1].0) {
                    return Err(Error::config(format!(
                        "path of frog ({}, {}) steps between non-adjacent vertices",
                        name(key.origin),
                        key.index
                    )));
                }
            }
        }
        Ok(())
    }

    /// Parse `origin index : v0 v1 v2 ...` lines against a named graph.
    pub fn parse(text: &str, g: &ExplicitGraph) -> Result<Self> {
        let mut table = PathTable::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::parse(lineno + 1, msg);
            let (head, tail) = line
                .split_once(':')
                .ok_or_else(|| err("expected `origin index : v0 v1 ...`".into()))?;
            let head: Vec<&str> = head.split_whitespace().collect();
            let [origin, index] = head.as_slice() else {
                return Err(err("expected `origin index` before `:`".into()));
            };
            let origin = g
                .id(origin)
                .ok_or_else(|| err(format!("unknown vertex `{origin}`")))?;
            let index: u32 = index
                .parse()
                .map_err(|_| err(format!("bad frog index `{index}`")))?;
            let path = tail
                .split_whitespace()
                .map(|n| g.id(n).ok_or_else(|| err(format!("unknown vertex `{n}`"))))
                .collect::<Result<Vec<_>>>()?;
            if table.insert(FrogKey::new(origin, index), path).is_some() {
                return Err(err("duplicate frog key".into()));
            }
        }
        table.validate(g)?;
        Ok(table)
    }

    pub fn to_text(&self, g: &ExplicitGraph) -> String {
        let mut out = String::new();
        for (key, path) in &self.paths {
            let name = |v: VertexId| g.name(v).unwrap_or("?");
            out.push_str(&format!("{} {} :", name(key.origin), key.index));
            for &v in path {
                out.push(' ');
                out.push_str(name(v));
            }
            out.push('\n');
        }
        out
    }
}

/// How frogs move once awake.
#[derive(Debug, Clone, PartialEq)]
pub enum WalkerKind {
    /// Simple random walk: uniform over neighbors.
    Srw,
    /// Walk on Z stepping +1 with probability `p_right`.
    BiasedZ { p_right: f64 },
    /// Uniform over neighbors other than the previous vertex; stops on
    /// reaching a designated leaf.
    NonbacktrackingStoppedAtLeaves,
    /// Simple random walk that dies with probability `1 - survival` before
    /// each move.
    SrwWithDeath { survival: f64 },
    /// Replays stored paths.
    ExplicitTable(Arc<PathTable>),
}

impl fmt::Display for WalkerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WalkerKind::Srw => write!(f, "srw"),
            WalkerKind::BiasedZ { p_right } => write!(f, "biased({p_right})"),
            WalkerKind::NonbacktrackingStoppedAtLeaves => write!(f, "nonbacktracking"),
            WalkerKind::SrwWithDeath { survival } => write!(f, "death({survival})"),
            WalkerKind::ExplicitTable(t) => write!(f, "table({} paths)", t.len()),
        }
    }
}

impl WalkerKind {
    /// Reject walker/graph combinations that make no sense.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        match self {
            WalkerKind::BiasedZ { p_right } => {
                if !(*p_right > 0.0 && *p_right < 1.0) {
                    return Err(Error::config("biased walk needs p_right in (0,1)"));
                }
                if !matches!(g.kind(), GraphKind::Lattice { dim: 1 }) {
                    return Err(Error::config("biased walk is only defined on Z^1"));
                }
            }
            WalkerKind::SrwWithDeath { survival } => {
                if !(*survival > 0.0 && *survival <= 1.0) {
                    return Err(Error::config("survival probability must be in (0,1]"));
                }
            }
            WalkerKind::NonbacktrackingStoppedAtLeaves => {
                if !g.has_leaves() {
                    return Err(Error::config(
                        "nonbacktracking walk needs a graph with designated leaves",
                    ));
                }
            }
            WalkerKind::ExplicitTable(t) => {
                let eg = g
                    .explicit()
                    .ok_or_else(|| Error::config("path tables need an explicit graph"))?;
                t.validate(eg)?;
            }
            WalkerKind::Srw => {}
        }
        Ok(())
    }
}

/// Outcome of one move attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Move(VertexId),
    Stopped,
}

/// Make move number `step_index` (0-based) for frog `key` sitting at
/// `current`, having arrived from `previous`.
#[allow(clippy::too_many_arguments)]
pub fn step(
    walker: &WalkerKind,
    g: &mut Graph,
    key: FrogKey,
    current: VertexId,
    previous: Option<VertexId>,
    step_index: u64,
    seed: u64,
) -> Result<Step> {
    if let WalkerKind::ExplicitTable(table) = walker {
        let path = table.get(&key).ok_or_else(|| Error::MissingPath {
            origin: g
                .coordinates(key.origin)
                .map(|l| l.to_string())
                .unwrap_or_else(|_| key.origin.0.to_string()),
            index: key.index,
        })?;
        return Ok(match path.get(step_index as usize + 1) {
            Some(&v) => Step::Move(v),
            None => Step::Stopped,
        });
    }
    if g.is_absorbing(current) {
        return Ok(Step::Stopped);
    }
    let label = g.label_hash(key.origin);
    let index = u64::from(key.index);
    let u = uniform(seed, Domain::Move, label, index, step_index);
    match walker {
        WalkerKind::Srw => {
            let deg = g.degree(current)?;
            Ok(Step::Move(g.neighbor(current, index_below(u, deg))?))
        }
        WalkerKind::SrwWithDeath { survival } => {
            let d = uniform(seed, Domain::Death, label, index, step_index);
            if d >= *survival {
                return Ok(Step::Stopped);
            }
            let deg = g.degree(current)?;
            Ok(Step::Move(g.neighbor(current, index_below(u, deg))?))
        }
        WalkerKind::BiasedZ { p_right } => {
            let i = if u < *p_right { 0 } else { 1 };
            Ok(Step::Move(g.neighbor(current, i)?))
        }
        WalkerKind::NonbacktrackingStoppedAtLeaves => {
            if step_index > 0 && g.is_leaf(current) {
                return Ok(Step::Stopped);
            }
            let mut options = g.neighbors(current)?;
            if let Some(p) = previous {
                if options.len() >= 2 {
                    options.retain(|&w| w != p);
                }
            }
            if options.is_empty() {
                return Ok(Step::Stopped);
            }
            Ok(Step::Move(options[index_below(u, options.len())]))
        }
        WalkerKind::ExplicitTable(_) => unreachable!(),
    }
}

/// The first `length` moves of frog `key` (fewer if it stops), starting
/// with its origin.
pub fn prefix(
    walker: &WalkerKind,
    g: &mut Graph,
    key: FrogKey,
    length: usize,
    seed: u64,
) -> Result<Vec<VertexId>> {
    let mut path = vec![key.origin];
    let mut prev = None;
    for k in 0..length {
        let cur = *path.last().expect("path is never empty");
        match step(walker, g, key, cur, prev, k as u64, seed)? {
            Step::Move(w) => {
                prev = Some(cur);
                path.push(w);
            }
            Step::Stopped => break,
        }
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::VertexLabel;

    fn fig1() -> Graph {
        let g = ExplicitGraph::parse("root o\no p\np u\np v\n").unwrap();
        Graph::new(GraphKind::Explicit(Arc::new(g))).unwrap()
    }

    #[test]
    fn srw_on_z1_is_fair() {
        let mut g = Graph::new(GraphKind::Lattice { dim: 1 }).unwrap();
        let n = 100_000;
        let mut right = 0;
        for i in 0..n {
            let key = FrogKey::new(VertexId::ROOT, i + 1);
            if let Step::Move(w) = step(&WalkerKind::Srw, &mut g, key, VertexId::ROOT, None, 0, 3).unwrap()
            {
                if g.coordinates(w).unwrap() == VertexLabel::Lattice(vec![1]) {
                    right += 1;
                }
            }
        }
        let freq = right as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.01, "{freq}");
    }

    #[test]
    fn nonbacktracking_from_leaf_is_forced() {
        let mut g = fig1();
        let u = g.explicit().unwrap().id("u").unwrap();
        let p = g.explicit().unwrap().id("p").unwrap();
        for seed in 0..50 {
            let key = FrogKey::new(u, 1);
            let s = step(
                &WalkerKind::NonbacktrackingStoppedAtLeaves,
                &mut g,
                key,
                u,
                None,
                0,
                seed,
            )
            .unwrap();
            assert_eq!(s, Step::Move(p));
        }
    }

    #[test]
    fn nonbacktracking_paths_never_reverse() {
        let mut g = Graph::new(GraphKind::DaryTree {
            arity: 2,
            depth_cap: Some(6),
        })
        .unwrap();
        for i in 1..200 {
            let key = FrogKey::new(VertexId::ROOT, i);
            let path = prefix(
                &WalkerKind::NonbacktrackingStoppedAtLeaves,
                &mut g,
                key,
                20,
                11,
            )
            .unwrap();
            for w in path.windows(3) {
                assert_ne!(w[0], w[2]);
            }
            // stops exactly on reaching the cap
            assert_eq!(path.len(), 7);
        }
    }

    #[test]
    fn death_with_full_survival_never_stops() {
        let mut g = Graph::new(GraphKind::Lattice { dim: 2 }).unwrap();
        let w = WalkerKind::SrwWithDeath { survival: 1.0 };
        let path = prefix(&w, &mut g, FrogKey::initial(), 500, 5).unwrap();
        assert_eq!(path.len(), 501);
    }

    #[test]
    fn prefix_edge_cases() {
        let mut g = fig1();
        let eg = g.explicit().unwrap().clone();
        let p0 = prefix(&WalkerKind::Srw, &mut g, FrogKey::initial(), 0, 1).unwrap();
        assert_eq!(p0, vec![VertexId::ROOT]);

        let table = PathTable::parse("o 1 : o p u p\n", &eg).unwrap();
        let w = WalkerKind::ExplicitTable(Arc::new(table));
        let p = prefix(&w, &mut g, FrogKey::initial(), 10, 1).unwrap();
        assert_eq!(p.len(), 4);

        let a = prefix(&WalkerKind::Srw, &mut g, FrogKey::initial(), 30, 9).unwrap();
        let b = prefix(&WalkerKind::Srw, &mut g, FrogKey::initial(), 30, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_table_entry_is_an_error() {
        let mut g = fig1();
        let w = WalkerKind::ExplicitTable(Arc::new(PathTable::new()));
        let e = step(&w, &mut g, FrogKey::initial(), VertexId::ROOT, None, 0, 0);
        assert!(matches!(e, Err(Error::MissingPath { .. })));
    }

    #[test]
    fn table_parse_rejects_bad_paths() {
        let eg = ExplicitGraph::parse("root o\no p\np u\np v\n").unwrap();
        assert!(PathTable::parse("p 1 : o p\n", &eg).is_err());
        assert!(PathTable::parse("p 1 : p o p u v\n", &eg).is_err());
        assert!(PathTable::parse("p x : p\n", &eg).is_err());
        assert!(PathTable::parse("p 1 p\n", &eg).is_err());
        let t = PathTable::parse("p 1 : p o\np 2 : p u\n", &eg).unwrap();
        assert_eq!(PathTable::parse(&t.to_text(&eg), &eg).unwrap(), t);
    }

    #[test]
    fn biased_walk_validation() {
        let g = Graph::new(GraphKind::Lattice { dim: 2 }).unwrap();
        assert!(WalkerKind::BiasedZ { p_right: 0.6 }.validate(&g).is_err());
        let g1 = Graph::new(GraphKind::Lattice { dim: 1 }).unwrap();
        assert!(WalkerKind::BiasedZ { p_right: 0.6 }.validate(&g1).is_ok());
        assert!(WalkerKind::NonbacktrackingStoppedAtLeaves
            .validate(&g1)
            .is_err());
    }
}
