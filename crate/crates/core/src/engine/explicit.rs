use std::collections::BTreeMap;
use std::sync::Arc;

use super::{hex_digest, Counts, Limits, SimOutcome, Simulation};
use crate::error::{Error, Result};
use crate::graph::{ExplicitGraph, Graph, GraphKind, VertexId};
use crate::paths::{FrogKey, PathTable, WalkerKind};

/// A fully deterministic frog model: explicit graph, frog counts, and one
/// stored path per frog.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitModel {
    graph: Arc<ExplicitGraph>,
    counts: Vec<u32>,
    table: PathTable,
}

impl ExplicitModel {
    /// `counts[v]` frogs sleep at `v`; `table` must hold exactly the paths
    /// `(root, 1)` and `(v, i)` for `1 <= i <= counts[v]`.
    pub fn new(graph: Arc<ExplicitGraph>, counts: Vec<u32>, table: PathTable) -> Result<Self> {
        let mut counts = counts;
        if counts.len() > graph.len() {
            return Err(Error::config("more counts than vertices"));
        }
        counts.resize(graph.len(), 0);
        if counts[0] != 0 {
            return Err(Error::config("the root holds no dormant frogs"));
        }
        table.validate(&graph)?;
        let expected: usize = 1 + counts.iter().map(|&c| c as usize).sum::<usize>();
        let name = |v: VertexId| graph.name(v).unwrap_or("?").to_string();
        if table.get(&FrogKey::initial()).is_none() {
            return Err(Error::MissingPath {
                origin: name(VertexId::ROOT),
                index: 1,
            });
        }
        for v in graph.vertex_ids().skip(1) {
            for i in 1..=counts[v.index()] {
                if table.get(&FrogKey::new(v, i)).is_none() {
                    return Err(Error::MissingPath {
                        origin: name(v),
                        index: i,
                    });
                }
            }
        }
        if table.len() != expected {
            return Err(Error::config(
                "path table has entries for frogs that are not in the model",
            ));
        }
        Ok(ExplicitModel {
            graph,
            counts,
            table,
        })
    }

    /// Load from the adjacency and path-table text formats. Counts are read
    /// off the table: `v` holds as many frogs as it has table entries.
    pub fn parse(adjacency: &str, paths: &str) -> Result<Self> {
        let graph = Arc::new(ExplicitGraph::parse(adjacency)?);
        let table = PathTable::parse(paths, &graph)?;
        let mut counts = vec![0u32; graph.len()];
        for key in table.keys() {
            if !key.origin.is_root() {
                counts[key.origin.index()] = counts[key.origin.index()].max(key.index);
            }
        }
        Self::new(graph, counts, table)
    }

    pub fn graph(&self) -> &Arc<ExplicitGraph> {
        &self.graph
    }

    pub fn count(&self, v: VertexId) -> u32 {
        self.counts.get(v.index()).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn table(&self) -> &PathTable {
        &self.table
    }

    pub fn vertex(&self, name: &str) -> Result<VertexId> {
        self.graph
            .id(name)
            .ok_or_else(|| Error::UnknownName(name.to_string()))
    }

    /// Add one frog with path `path` at `path[0]`; it becomes frog
    /// `(path[0], count + 1)`.
    pub fn sigma_p(&self, path: &[VertexId]) -> Result<ExplicitModel> {
        let origin = *path
            .first()
            .ok_or_else(|| Error::config("cannot add a frog with an empty path"))?;
        if origin.is_root() {
            return Err(Error::config("frogs cannot be added at the root"));
        }
        if origin.index() >= self.graph.len() {
            return Err(Error::UnknownVertex(origin.0));
        }
        let mut next = self.clone();
        let i = next.counts[origin.index()] + 1;
        next.counts[origin.index()] = i;
        next.table.insert(FrogKey::new(origin, i), path.to_vec());
        next.table.validate(&next.graph)?;
        Ok(next)
    }

    /// Delete every frog that starts at `v`.
    pub fn kappa_v(&self, v: VertexId) -> Result<ExplicitModel> {
        if v.is_root() {
            return Err(Error::config("cannot delete the frogs at the root"));
        }
        if v.index() >= self.graph.len() {
            return Err(Error::UnknownVertex(v.0));
        }
        let mut next = self.clone();
        next.counts[v.index()] = 0;
        next.table.remove_origin(v);
        Ok(next)
    }

    /// Upper bound on the time the model takes to go quiet: one more than
    /// the total number of moves in the table, since a frog is retired on
    /// the step after its last move.
    pub fn quiescence_bound(&self) -> u64 {
        let moves: usize = self.table.iter().map(|(_, p)| p.len() - 1).sum();
        moves as u64 + 1
    }

    /// Hex SHA-256 over the graph and path table texts.
    pub fn digest(&self) -> String {
        let text = format!("{}--\n{}", self.graph.to_text(), self.table.to_text(&self.graph));
        hex_digest(text.as_bytes())
    }

    /// Path table keyed by names, for reports.
    pub fn named_paths(&self) -> BTreeMap<String, Vec<String>> {
        let name = |v: &VertexId| self.graph.name(*v).unwrap_or("?").to_string();
        self.table
            .iter()
            .map(|(k, p)| {
                (
                    format!("{}#{}", name(&k.origin), k.index),
                    p.iter().map(name).collect(),
                )
            })
            .collect()
    }
}

/// Run an explicit model to completion.
pub fn run_explicit(m: &ExplicitModel) -> Result<SimOutcome> {
    run_explicit_with(m, None)
}

/// As [`run_explicit`], with the order in which frogs move inside each step
/// permuted by `shuffle_seed`.
pub fn run_explicit_shuffled(m: &ExplicitModel, shuffle_seed: u64) -> Result<SimOutcome> {
    run_explicit_with(m, Some(shuffle_seed))
}

fn run_explicit_with(m: &ExplicitModel, shuffle: Option<u64>) -> Result<SimOutcome> {
    let graph = Graph::new(GraphKind::Explicit(Arc::clone(&m.graph)))?;
    let mut sim = Simulation::from_parts(
        graph,
        WalkerKind::ExplicitTable(Arc::new(m.table.clone())),
        Counts::Fixed(m.counts.clone()),
        0,
        m.quiescence_bound(),
        Limits::default(),
    );
    if let Some(s) = shuffle {
        sim = sim.with_move_shuffle(s);
    }
    sim.run_to_horizon()?;
    debug_assert!(sim.is_quiescent());
    Ok(sim.outcome())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::VertexLabel;

    fn two_vertex() -> ExplicitModel {
        ExplicitModel::parse("root r\nr a\n", "r 1 : r a r\na 1 : a r\n").unwrap()
    }

    #[test]
    fn hand_enumerated_two_frog_model() {
        let out = run_explicit(&two_vertex()).unwrap();
        assert_eq!(out.root_visits, 2);
        assert_eq!(
            out.activation_time(&VertexLabel::Name("a".into())),
            Some(1)
        );
        assert_eq!(out.root_visits_by(1), 0);
        assert_eq!(out.root_visits_by(2), 2);
    }

    #[test]
    fn no_returns() {
        let m = ExplicitModel::parse("root r\nr a\na b\n", "r 1 : r a b\n").unwrap();
        assert_eq!(run_explicit(&m).unwrap().root_visits, 0);
    }

    #[test]
    fn figure_one_graph() {
        // root frog walks o -> p -> u, waking p; p's frog walks p -> o
        let m = ExplicitModel::parse(
            "root o\no p\np u\np v\n",
            "o 1 : o p u\np 1 : p o\n",
        )
        .unwrap();
        assert_eq!(run_explicit(&m).unwrap().root_visits, 1);
    }

    #[test]
    fn sigma_adds_next_index() {
        let m = ExplicitModel::parse("root r\nr a\n", "r 1 : r a\n").unwrap();
        let a = m.vertex("a").unwrap();
        let r = m.vertex("r").unwrap();
        let m1 = m.sigma_p(&[a, r]).unwrap();
        assert_eq!(m1.count(a), 1);
        assert!(m1.table().get(&FrogKey::new(a, 1)).is_some());
        let m2 = m1.sigma_p(&[a]).unwrap();
        assert_eq!(m2.count(a), 2);
        assert!(m2.table().get(&FrogKey::new(a, 2)).is_some());
        // kappa undoes it
        let k = m2.kappa_v(a).unwrap();
        assert_eq!(k, m);
        assert_eq!(m.kappa_v(a).unwrap(), m);
    }

    #[test]
    fn sigma_order_is_irrelevant() {
        let m = ExplicitModel::parse("root r\nr a\na b\n", "r 1 : r a r\n").unwrap();
        let (r, a, b) = (
            m.vertex("r").unwrap(),
            m.vertex("a").unwrap(),
            m.vertex("b").unwrap(),
        );
        let p1 = [a, r, a, r];
        let p2 = [a, b];
        let x = run_explicit(&m.sigma_p(&p1).unwrap().sigma_p(&p2).unwrap()).unwrap();
        let y = run_explicit(&m.sigma_p(&p2).unwrap().sigma_p(&p1).unwrap()).unwrap();
        assert_eq!(x.root_visits, y.root_visits);
        assert_eq!(x.activations, y.activations);
    }

    #[test]
    fn operator_preconditions() {
        let m = two_vertex();
        let r = m.vertex("r").unwrap();
        assert!(m.sigma_p(&[]).is_err());
        assert!(m.sigma_p(&[r]).is_err());
        assert!(m.kappa_v(r).is_err());
    }

    #[test]
    fn malformed_models_are_rejected() {
        // missing initial frog
        assert!(ExplicitModel::parse("root r\nr a\n", "a 1 : a r\n").is_err());
        // gap in frog indices
        assert!(ExplicitModel::parse("root r\nr a\n", "r 1 : r\na 2 : a\n").is_err());
    }

    #[test]
    fn unvisited_pile_is_inert() {
        let m = ExplicitModel::parse("root r\nr a\na b\n", "r 1 : r a r\n").unwrap();
        let (r, a, b) = (
            m.vertex("r").unwrap(),
            m.vertex("a").unwrap(),
            m.vertex("b").unwrap(),
        );
        let with_b = m.sigma_p(&[b, a, r]).unwrap();
        assert_eq!(
            run_explicit(&with_b).unwrap().root_visits,
            run_explicit(&m).unwrap().root_visits
        );
        let _ = a;
        assert_eq!(
            run_explicit(&with_b.kappa_v(b).unwrap()).unwrap().root_visits,
            run_explicit(&with_b).unwrap().root_visits
        );
    }
}
