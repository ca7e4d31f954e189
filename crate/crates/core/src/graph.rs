//! Rooted, locally finite graphs with lazily materialized vertices.
//!
//! Infinite graphs (the integer lattice and regular trees) only ever touch a
//! finite ball during a run, so vertices are interned on first reference.
//! Handle 0 is always the root, and handles are issued in the order vertices
//! are first reached, so two runs with the same query sequence see the same
//! handles.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rustc_hash::FxHashMap;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::stream::{combine, hash_bytes};

const NONE: u32 = u32::MAX;

/// Dense vertex handle. `VertexId::ROOT` is handle 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub u32);

impl VertexId {
    pub const ROOT: VertexId = VertexId(0);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn is_root(self) -> bool {
        self.0 == 0
    }
}

/// Canonical, graph-independent name of a vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexLabel {
    /// Integer coordinates in Z^d.
    Lattice(Vec<i64>),
    /// Child indices along the root-to-vertex path.
    Tree(Vec<u32>),
    /// Name from an explicit graph file.
    Name(String),
}

impl VertexLabel {
    /// Squared Euclidean norm for lattice labels; `None` otherwise.
    pub fn norm_squared(&self) -> Option<f64> {
        match self {
            VertexLabel::Lattice(c) => Some(c.iter().map(|&x| (x as f64) * (x as f64)).sum()),
            _ => None,
        }
    }
}

impl fmt::Display for VertexLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexLabel::Lattice(c) => {
                write!(f, "(")?;
                for (i, x) in c.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            VertexLabel::Tree(path) => {
                let wide = path.iter().any(|&c| c >= 10);
                for (i, c) in path.iter().enumerate() {
                    if wide && i > 0 {
                        write!(f, ".")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
            VertexLabel::Name(n) => f.write_str(n),
        }
    }
}

impl Serialize for VertexLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A finite connected graph given by an edge list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitGraph {
    names: Vec<String>,
    adjacency: Vec<Vec<u32>>,
    index: HashMap<String, u32>,
}

impl ExplicitGraph {
    /// Build from a root name and an edge list. The root gets handle 0 and the
    /// remaining vertices are numbered by first appearance in `edges`.
    pub fn from_edges<S: AsRef<str>>(root: &str, edges: &[(S, S)]) -> Result<Self> {
        let mut g = ExplicitGraph {
            names: Vec::new(),
            adjacency: Vec::new(),
            index: HashMap::new(),
        };
        g.intern(root);
        for (a, b) in edges {
            let (a, b) = (a.as_ref(), b.as_ref());
            if a == b {
                return Err(Error::config(format!("self-loop at `{a}`")));
            }
            let ia = g.intern(a);
            let ib = g.intern(b);
            if g.adjacency[ia as usize].contains(&ib) {
                return Err(Error::config(format!("duplicate edge `{a} {b}`")));
            }
            g.adjacency[ia as usize].push(ib);
            g.adjacency[ib as usize].push(ia);
        }
        g.check_connected()?;
        Ok(g)
    }

    /// Parse the plain-text adjacency format: one `name1 name2` line per edge
    /// and one `root name` line. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut root: Option<String> = None;
        let mut edges: Vec<(String, String)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens.as_slice() {
                ["root", name] => {
                    if root.is_some() {
                        return Err(Error::parse(lineno + 1, "root declared twice"));
                    }
                    root = Some((*name).to_string());
                }
                [a, b] => edges.push(((*a).to_string(), (*b).to_string())),
                _ => {
                    return Err(Error::parse(
                        lineno + 1,
                        format!("expected `name1 name2` or `root name`, got `{line}`"),
                    ))
                }
            }
        }
        let root = root.ok_or_else(|| Error::parse(0, "missing `root` line"))?;
        Self::from_edges(&root, &edges)
    }

    /// Render back to the adjacency text format.
    pub fn to_text(&self) -> String {
        let mut out = format!("root {}\n", self.names[0]);
        for (a, nbrs) in self.adjacency.iter().enumerate() {
            for &b in nbrs {
                if (a as u32) < b {
                    out.push_str(&format!("{} {}\n", self.names[a], self.names[b as usize]));
                }
            }
        }
        out
    }

    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len() as u32;
        self.names.push(name.to_string());
        self.adjacency.push(Vec::new());
        self.index.insert(name.to_string(), i);
        i
    }

    fn check_connected(&self) -> Result<()> {
        let mut seen = vec![false; self.names.len()];
        let mut stack = vec![0u32];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &self.adjacency[v as usize] {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    stack.push(w);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::config(format!(
                "vertex `{}` is not connected to the root",
                self.names[i]
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, v: VertexId) -> Option<&str> {
        self.names.get(v.index()).map(String::as_str)
    }

    pub fn id(&self, name: &str) -> Option<VertexId> {
        self.index.get(name).map(|&i| VertexId(i))
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> {
        (0..self.names.len() as u32).map(VertexId)
    }

    pub fn adjacent(&self, v: VertexId) -> &[u32] {
        &self.adjacency[v.index()]
    }
}

pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => line[..i].trim(),
        None => line.trim(),
    }
}

/// The family a graph belongs to.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphKind {
    /// Z^d with nearest-neighbor edges.
    Lattice { dim: usize },
    /// Rooted tree where every vertex has `arity` children (root degree `arity`).
    DaryTree { arity: u32, depth_cap: Option<u32> },
    /// Tree where every vertex has degree `degree` (root has `degree` children).
    RegularTree { degree: u32, depth_cap: Option<u32> },
    Explicit(Arc<ExplicitGraph>),
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cap = |c: &Option<u32>| c.map_or("inf".to_string(), |c| c.to_string());
        match self {
            GraphKind::Lattice { dim } => write!(f, "lattice({dim})"),
            GraphKind::DaryTree { arity, depth_cap } => {
                write!(f, "dary_tree({arity}, {})", cap(depth_cap))
            }
            GraphKind::RegularTree { degree, depth_cap } => {
                write!(f, "regular_tree({degree}, {})", cap(depth_cap))
            }
            GraphKind::Explicit(g) => write!(f, "explicit({} vertices)", g.len()),
        }
    }
}

#[derive(Debug, Clone)]
enum Store {
    Lattice {
        dim: usize,
        coords: Vec<i64>,
        index: FxHashMap<Box<[i64]>, u32>,
        nbrs: Vec<u32>,
    },
    Tree {
        root_children: u32,
        children_per_vertex: u32,
        depth_cap: Option<u32>,
        parent: Vec<u32>,
        depth: Vec<u32>,
        child_index: Vec<u32>,
        children: Vec<u32>,
    },
    Explicit(Arc<ExplicitGraph>),
}

/// A graph instance. Lazy graphs mutate on lookup, so an instance belongs to a
/// single simulation worker.
#[derive(Debug, Clone)]
pub struct Graph {
    kind: GraphKind,
    store: Store,
    label_hash: Vec<u64>,
    max_vertices: usize,
}

impl Graph {
    pub fn new(kind: GraphKind) -> Result<Self> {
        let root_hash = hash_bytes(b"root");
        let store = match &kind {
            GraphKind::Lattice { dim } => {
                if *dim == 0 {
                    return Err(Error::config("lattice dimension must be >= 1"));
                }
                let origin: Box<[i64]> = vec![0; *dim].into_boxed_slice();
                let mut index = FxHashMap::default();
                index.insert(origin, 0);
                Store::Lattice {
                    dim: *dim,
                    coords: vec![0; *dim],
                    index,
                    nbrs: vec![NONE; 2 * dim],
                }
            }
            GraphKind::DaryTree { arity, depth_cap } => {
                if *arity < 2 {
                    return Err(Error::config("d-ary tree needs d >= 2"));
                }
                Self::tree_store(*arity, *arity, *depth_cap)
            }
            GraphKind::RegularTree { degree, depth_cap } => {
                if *degree < 3 {
                    return Err(Error::config("d-regular tree needs d >= 3"));
                }
                Self::tree_store(*degree, degree - 1, *depth_cap)
            }
            GraphKind::Explicit(g) => {
                if g.is_empty() {
                    return Err(Error::config("explicit graph has no vertices"));
                }
                Store::Explicit(Arc::clone(g))
            }
        };
        let label_hash = match &store {
            Store::Explicit(g) => g.names.iter().map(|n| hash_bytes(n.as_bytes())).collect(),
            _ => vec![root_hash],
        };
        Ok(Graph {
            kind,
            store,
            label_hash,
            max_vertices: usize::MAX,
        })
    }

    fn tree_store(root_children: u32, children_per_vertex: u32, depth_cap: Option<u32>) -> Store {
        let stride = root_children.max(children_per_vertex) as usize;
        Store::Tree {
            root_children,
            children_per_vertex,
            depth_cap,
            parent: vec![NONE],
            depth: vec![0],
            child_index: vec![0],
            children: vec![NONE; stride],
        }
    }

    /// Limit on the number of interned vertices; exceeding it is an error.
    pub fn with_vertex_limit(mut self, limit: usize) -> Self {
        self.max_vertices = limit;
        self
    }

    pub fn kind(&self) -> &GraphKind {
        &self.kind
    }

    pub fn root(&self) -> VertexId {
        VertexId::ROOT
    }

    /// Number of vertices issued so far.
    pub fn len(&self) -> usize {
        self.label_hash.len()
    }

    pub fn is_empty(&self) -> bool {
        self.label_hash.is_empty()
    }

    #[inline]
    fn check(&self, v: VertexId) -> Result<()> {
        if v.index() < self.label_hash.len() {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v.0))
        }
    }

    /// Stable per-vertex word used to key random streams.
    #[inline]
    pub fn label_hash(&self, v: VertexId) -> u64 {
        self.label_hash[v.index()]
    }

    pub fn degree(&self, v: VertexId) -> Result<usize> {
        self.check(v)?;
        Ok(match &self.store {
            Store::Lattice { dim, .. } => 2 * dim,
            Store::Tree {
                root_children,
                children_per_vertex,
                depth_cap,
                depth,
                ..
            } => {
                let d = depth[v.index()];
                let kids = if depth_cap.is_some_and(|c| d >= c) {
                    0
                } else if d == 0 {
                    *root_children
                } else {
                    *children_per_vertex
                };
                kids as usize + usize::from(d > 0)
            }
            Store::Explicit(g) => g.adjacency[v.index()].len(),
        })
    }

    /// The `i`-th neighbor of `v` in canonical order, materializing it if new.
    ///
    /// Lattice order is `+e_0, -e_0, +e_1, -e_1, ...`; tree order is parent
    /// first (if any), then children left to right.
    pub fn neighbor(&mut self, v: VertexId, i: usize) -> Result<VertexId> {
        let deg = self.degree(v)?;
        if i >= deg {
            return Err(Error::Usage(format!(
                "neighbor index {i} out of range for degree {deg}"
            )));
        }
        let limit = self.max_vertices;
        let issued = self.label_hash.len();
        match &mut self.store {
            Store::Lattice {
                dim,
                coords,
                index,
                nbrs,
            } => {
                let dim = *dim;
                let slot = v.index() * 2 * dim + i;
                if nbrs[slot] != NONE {
                    return Ok(VertexId(nbrs[slot]));
                }
                let mut c: Vec<i64> = coords[v.index() * dim..(v.index() + 1) * dim].to_vec();
                c[i / 2] += if i.is_multiple_of(2) { 1 } else { -1 };
                let key = c.into_boxed_slice();
                let w = match index.get(&key) {
                    Some(&w) => w,
                    None => {
                        if issued >= limit {
                            return Err(Error::VertexLimit(limit));
                        }
                        let w = issued as u32;
                        let h = key.iter().fold(0x6c61_7474u64, |h, &x| combine(h, x as u64));
                        coords.extend_from_slice(&key);
                        nbrs.extend(std::iter::repeat_n(NONE, 2 * dim));
                        index.insert(key, w);
                        self.label_hash.push(h);
                        w
                    }
                };
                nbrs[slot] = w;
                Ok(VertexId(w))
            }
            Store::Tree {
                parent,
                depth,
                child_index,
                children,
                ..
            } => {
                let d = depth[v.index()];
                if d > 0 && i == 0 {
                    return Ok(VertexId(parent[v.index()]));
                }
                let c = if d > 0 { i - 1 } else { i };
                let stride = children.len() / parent.len();
                let slot = v.index() * stride + c;
                if children[slot] != NONE {
                    return Ok(VertexId(children[slot]));
                }
                if issued >= limit {
                    return Err(Error::VertexLimit(limit));
                }
                let w = issued as u32;
                parent.push(v.0);
                depth.push(d + 1);
                child_index.push(c as u32);
                children.extend(std::iter::repeat_n(NONE, stride));
                children[slot] = w;
                let h = combine(self.label_hash[v.index()], c as u64 + 1);
                self.label_hash.push(h);
                Ok(VertexId(w))
            }
            Store::Explicit(g) => Ok(VertexId(g.adjacency[v.index()][i])),
        }
    }

    /// All neighbors of `v` in canonical order.
    pub fn neighbors(&mut self, v: VertexId) -> Result<Vec<VertexId>> {
        let deg = self.degree(v)?;
        (0..deg).map(|i| self.neighbor(v, i)).collect()
    }

    /// Canonical label: lattice coordinates, tree child-index string, or the
    /// explicit vertex name.
    pub fn coordinates(&self, v: VertexId) -> Result<VertexLabel> {
        self.check(v)?;
        Ok(match &self.store {
            Store::Lattice { dim, coords, .. } => {
                VertexLabel::Lattice(coords[v.index() * dim..(v.index() + 1) * dim].to_vec())
            }
            Store::Tree {
                parent,
                child_index,
                ..
            } => {
                let mut path = Vec::new();
                let mut cur = v.0;
                while cur != 0 {
                    path.push(child_index[cur as usize]);
                    cur = parent[cur as usize];
                }
                path.reverse();
                VertexLabel::Tree(path)
            }
            Store::Explicit(g) => VertexLabel::Name(g.names[v.index()].clone()),
        })
    }

    /// Find an already issued vertex by label without materializing anything.
    pub fn lookup(&self, label: &VertexLabel) -> Option<VertexId> {
        match (&self.store, label) {
            (Store::Lattice { index, dim, .. }, VertexLabel::Lattice(c)) if c.len() == *dim => {
                index.get(c.as_slice()).map(|&i| VertexId(i))
            }
            (Store::Tree { children, parent, .. }, VertexLabel::Tree(path)) => {
                let stride = children.len() / parent.len();
                let mut cur = 0u32;
                for &c in path {
                    if c as usize >= stride {
                        return None;
                    }
                    let next = children[cur as usize * stride + c as usize];
                    if next == NONE {
                        return None;
                    }
                    cur = next;
                }
                Some(VertexId(cur))
            }
            (Store::Explicit(g), VertexLabel::Name(n)) => g.id(n),
            _ => None,
        }
    }

    /// Tree depth of `v`; `None` on non-tree graphs.
    pub fn depth(&self, v: VertexId) -> Option<u32> {
        match &self.store {
            Store::Tree { depth, .. } => depth.get(v.index()).copied(),
            _ => None,
        }
    }

    /// Vertices on the truncation boundary of a depth-capped tree. Walkers
    /// that reach them stop for good.
    #[inline]
    pub fn is_absorbing(&self, v: VertexId) -> bool {
        match &self.store {
            Store::Tree {
                depth_cap: Some(cap),
                depth,
                ..
            } => depth[v.index()] >= *cap,
            _ => false,
        }
    }

    /// Designated leaves: the capped boundary of a tree, or degree-one
    /// vertices of an explicit graph.
    pub fn is_leaf(&self, v: VertexId) -> bool {
        match &self.store {
            Store::Explicit(g) => g.adjacency[v.index()].len() == 1,
            Store::Tree { .. } => self.is_absorbing(v),
            Store::Lattice { .. } => false,
        }
    }

    /// Whether this graph has designated leaves at all.
    pub fn has_leaves(&self) -> bool {
        match &self.store {
            Store::Explicit(_) => true,
            Store::Tree { depth_cap, .. } => depth_cap.is_some(),
            Store::Lattice { .. } => false,
        }
    }

    pub fn explicit(&self) -> Option<&ExplicitGraph> {
        match &self.store {
            Store::Explicit(g) => Some(g),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice(d: usize) -> Graph {
        Graph::new(GraphKind::Lattice { dim: d }).unwrap()
    }

    #[test]
    fn z1_root_neighbors() {
        let mut g = lattice(1);
        let n = g.neighbors(g.root()).unwrap();
        assert_eq!(n.len(), 2);
        assert_eq!(g.coordinates(n[0]).unwrap(), VertexLabel::Lattice(vec![1]));
        assert_eq!(g.coordinates(n[1]).unwrap(), VertexLabel::Lattice(vec![-1]));
    }

    #[test]
    fn z2_coordinates() {
        let mut g = lattice(2);
        assert_eq!(g.coordinates(g.root()).unwrap().to_string(), "(0,0)");
        let e1 = g.neighbor(g.root(), 0).unwrap();
        assert_eq!(g.coordinates(e1).unwrap(), VertexLabel::Lattice(vec![1, 0]));
        // going back returns the root handle
        assert_eq!(g.neighbor(e1, 1).unwrap(), VertexId::ROOT);
    }

    #[test]
    fn binary_tree_root_has_two_children() {
        let mut g = Graph::new(GraphKind::DaryTree {
            arity: 2,
            depth_cap: None,
        })
        .unwrap();
        let kids = g.neighbors(g.root()).unwrap();
        assert_eq!(kids.len(), 2);
        assert_eq!(g.coordinates(kids[0]).unwrap().to_string(), "0");
        // non-root: parent first
        let n = g.neighbors(kids[0]).unwrap();
        assert_eq!(n.len(), 3);
        assert_eq!(n[0], VertexId::ROOT);
        assert_eq!(g.coordinates(n[2]).unwrap().to_string(), "01");
    }

    #[test]
    fn regular_tree_degrees() {
        let mut g = Graph::new(GraphKind::RegularTree {
            degree: 3,
            depth_cap: Some(2),
        })
        .unwrap();
        assert_eq!(g.degree(g.root()).unwrap(), 3);
        let c = g.neighbor(g.root(), 1).unwrap();
        assert_eq!(g.degree(c).unwrap(), 3);
        let gc = g.neighbor(c, 2).unwrap();
        assert_eq!(g.degree(gc).unwrap(), 1);
        assert!(g.is_absorbing(gc));
        assert!(g.is_leaf(gc));
        assert!(!g.is_leaf(c));
    }

    #[test]
    fn explicit_path_graph() {
        let g = ExplicitGraph::parse("root r\nr a\na b\n").unwrap();
        let mut g = Graph::new(GraphKind::Explicit(Arc::new(g))).unwrap();
        let a = g.explicit().unwrap().id("a").unwrap();
        let n = g.neighbors(a).unwrap();
        let names: Vec<String> = n
            .iter()
            .map(|&v| g.coordinates(v).unwrap().to_string())
            .collect();
        assert_eq!(names, ["r", "b"]);
    }

    #[test]
    fn explicit_parse_errors() {
        assert!(ExplicitGraph::parse("r a\n").is_err());
        assert!(ExplicitGraph::parse("root r\nr a b\n").is_err());
        assert!(ExplicitGraph::parse("root r\nr a\nb c\n").is_err());
        assert!(ExplicitGraph::parse("root r\nr r\n").is_err());
    }

    #[test]
    fn unknown_handle_is_usage_error() {
        let mut g = lattice(2);
        assert!(matches!(
            g.neighbors(VertexId(99)),
            Err(Error::UnknownVertex(99))
        ));
        assert!(g.coordinates(VertexId(5)).is_err());
    }

    #[test]
    fn vertex_limit_is_enforced() {
        let mut g = lattice(1).with_vertex_limit(2);
        g.neighbor(g.root(), 0).unwrap();
        assert!(matches!(
            g.neighbor(g.root(), 1),
            Err(Error::VertexLimit(2))
        ));
    }

    #[test]
    fn lookup_finds_issued_vertices_only() {
        let mut g = lattice(2);
        let label = VertexLabel::Lattice(vec![1, 0]);
        assert_eq!(g.lookup(&label), None);
        let v = g.neighbor(g.root(), 0).unwrap();
        assert_eq!(g.lookup(&label), Some(v));

        let mut t = Graph::new(GraphKind::DaryTree {
            arity: 2,
            depth_cap: Some(3),
        })
        .unwrap();
        let c = t.neighbor(t.root(), 1).unwrap();
        let gc = t.neighbor(c, 1).unwrap();
        assert_eq!(t.lookup(&VertexLabel::Tree(vec![1, 0])), Some(gc));
        assert_eq!(t.lookup(&VertexLabel::Tree(vec![])), Some(VertexId::ROOT));
    }
}
