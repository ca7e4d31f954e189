//! Frog-model statistics and the frog-addition difference operator.
//!
//! A statistic is a function of an explicit model. The checks here work on
//! small random models: they expand iterated differences over all subsets
//! of added frogs and test the alternating sign condition
//! `(-1)^m * delta <= 0`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{run_explicit, ExplicitModel, SimOutcome};
use crate::error::{Error, Result};
use crate::graph::{ExplicitGraph, VertexId, VertexLabel};
use crate::paths::{FrogKey, PathTable};
use crate::stream::derive_seed;

/// Horizon value standing for "no time limit".
pub const UNBOUNDED: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StatisticKind {
    /// Total number of root visits.
    RootVisits,
    /// 1 if vertex `u` is activated by time `t`.
    VisitIndicator { u: String, t: u64 },
    /// Number of non-root vertices activated by time `t`.
    VisitedCount { t: u64 },
    /// Root visits made by frogs that started at `u`.
    RootVisitsFrom { u: String },
    Sum(Vec<StatisticKind>),
    /// Square of another statistic. Not closed under the sign conditions;
    /// used as a negative control.
    Squared(Box<StatisticKind>),
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t_str = |t: &u64| {
            if *t == UNBOUNDED {
                "inf".to_string()
            } else {
                t.to_string()
            }
        };
        match self {
            StatisticKind::RootVisits => write!(f, "root_visits"),
            StatisticKind::VisitIndicator { u, t } => write!(f, "visit_indicator({u}, {})", t_str(t)),
            StatisticKind::VisitedCount { t } => write!(f, "visited_count({})", t_str(t)),
            StatisticKind::RootVisitsFrom { u } => write!(f, "root_visits_from({u})"),
            StatisticKind::Sum(parts) => {
                write!(f, "sum(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ")")
            }
            StatisticKind::Squared(s) => write!(f, "squared({s})"),
        }
    }
}

impl StatisticKind {
    /// Check that named vertices exist in `m` and are not the root.
    pub fn check(&self, m: &ExplicitModel) -> Result<()> {
        match self {
            StatisticKind::VisitIndicator { u, .. } | StatisticKind::RootVisitsFrom { u } => {
                let v = m.vertex(u)?;
                if v.is_root() {
                    return Err(Error::Usage(format!("{self} is defined only off the root")));
                }
                Ok(())
            }
            StatisticKind::Sum(parts) => parts.iter().try_for_each(|p| p.check(m)),
            StatisticKind::Squared(s) => s.check(m),
            _ => Ok(()),
        }
    }

    /// Value of the statistic on a finished run.
    pub fn on_outcome(&self, out: &SimOutcome) -> u64 {
        match self {
            StatisticKind::RootVisits => out.root_visits,
            StatisticKind::VisitIndicator { u, t } => {
                let hit = out
                    .activation_time(&VertexLabel::Name(u.clone()))
                    .is_some_and(|s| s <= *t);
                u64::from(hit)
            }
            StatisticKind::VisitedCount { t } => out.visited_count(*t),
            StatisticKind::RootVisitsFrom { u } => out.root_visits_from(&VertexLabel::Name(u.clone())),
            StatisticKind::Sum(parts) => parts.iter().map(|p| p.on_outcome(out)).sum(),
            StatisticKind::Squared(s) => {
                let x = s.on_outcome(out);
                x * x
            }
        }
    }
}

pub fn evaluate(stat: &StatisticKind, m: &ExplicitModel) -> Result<u64> {
    stat.check(m)?;
    Ok(stat.on_outcome(&run_explicit(m)?))
}

/// Result of an iterated difference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Delta {
    Value(i64),
    /// Some subset model could not be run to completion.
    Indeterminate { subset: Vec<usize> },
}

/// Outcomes of `sigma_U(m)` for every subset `U` of the added paths, indexed
/// by the bitmask of `U`.
pub struct SubsetOutcomes {
    outcomes: Vec<std::result::Result<SimOutcome, Vec<usize>>>,
    m: usize,
}

impl SubsetOutcomes {
    pub fn new(model: &ExplicitModel, paths: &[Vec<VertexId>]) -> Result<Self> {
        let origin = check_paths(paths)?;
        if origin.index() >= model.graph().len() {
            return Err(Error::UnknownVertex(origin.0));
        }
        let m = paths.len();
        let mut outcomes = Vec::with_capacity(1 << m);
        for mask in 0usize..(1 << m) {
            let mut cur = model.clone();
            for (i, p) in paths.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    cur = cur.sigma_p(p)?;
                }
            }
            let subset: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
            outcomes.push(match run_explicit(&cur) {
                Ok(o) => Ok(o),
                Err(Error::Capped { .. }) => Err(subset),
                Err(e) => return Err(e),
            });
        }
        Ok(SubsetOutcomes { outcomes, m })
    }

    pub fn order(&self) -> usize {
        self.m
    }

    /// `sum over U of (-1)^(m - |U|) f(sigma_U(m))`.
    pub fn delta(&self, stat: &StatisticKind) -> Delta {
        let mut acc: i128 = 0;
        for (mask, o) in self.outcomes.iter().enumerate() {
            let value = match o {
                Ok(o) => i128::from(stat.on_outcome(o)),
                Err(subset) => {
                    return Delta::Indeterminate {
                        subset: subset.clone(),
                    }
                }
            };
            if (self.m - mask.count_ones() as usize).is_multiple_of(2) {
                acc += value;
            } else {
                acc -= value;
            }
        }
        Delta::Value(i64::try_from(acc).unwrap_or(if acc > 0 { i64::MAX } else { i64::MIN }))
    }
}

fn check_paths(paths: &[Vec<VertexId>]) -> Result<VertexId> {
    let first = paths
        .first()
        .ok_or_else(|| Error::config("need at least one added path"))?;
    let origin = *first
        .first()
        .ok_or_else(|| Error::config("added paths must be nonempty"))?;
    if origin.is_root() {
        return Err(Error::config("added paths cannot start at the root"));
    }
    for p in paths {
        if p.first() != Some(&origin) {
            return Err(Error::config("all added paths must start at the same vertex"));
        }
    }
    Ok(origin)
}

/// Iterated difference of `stat` along `paths`, all starting at one non-root
/// vertex.
pub fn delta(stat: &StatisticKind, model: &ExplicitModel, paths: &[Vec<VertexId>]) -> Result<Delta> {
    stat.check(model)?;
    Ok(SubsetOutcomes::new(model, paths)?.delta(stat))
}

/// Random small explicit models for exhaustive checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallModelGenerator {
    pub max_vertices: usize,
    pub max_count: u32,
    /// Maximum number of moves in a generated path.
    pub max_path_len: usize,
    pub extra_edge_prob: f64,
}

impl Default for SmallModelGenerator {
    fn default() -> Self {
        SmallModelGenerator {
            max_vertices: 6,
            max_count: 2,
            max_path_len: 6,
            extra_edge_prob: 0.3,
        }
    }
}

impl SmallModelGenerator {
    pub fn rng(seed: u64, index: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(derive_seed(seed, index))
    }

    pub fn model(&self, rng: &mut impl Rng) -> ExplicitModel {
        let n = rng.gen_range(2..=self.max_vertices.max(2));
        let name = |i: usize| if i == 0 { "o".to_string() } else { format!("v{i}") };
        let mut edges = Vec::new();
        for i in 1..n {
            edges.push((name(rng.gen_range(0..i)), name(i)));
        }
        for i in 0..n {
            for j in i + 1..n {
                let present = edges
                    .iter()
                    .any(|(a, b)| (*a == name(i) && *b == name(j)) || (*a == name(j) && *b == name(i)));
                if !present && rng.gen_bool(self.extra_edge_prob) {
                    edges.push((name(i), name(j)));
                }
            }
        }
        let graph = std::sync::Arc::new(
            ExplicitGraph::from_edges("o", &edges).expect("generated graph is connected"),
        );
        let mut counts = vec![0u32; graph.len()];
        let mut table = PathTable::new();
        let root_path = self.walk(&graph, VertexId::ROOT, 1, rng);
        table.insert(FrogKey::initial(), root_path);
        for v in graph.vertex_ids().skip(1) {
            counts[v.index()] = rng.gen_range(0..=self.max_count);
            for i in 1..=counts[v.index()] {
                let p = self.walk(&graph, v, 0, rng);
                table.insert(FrogKey::new(v, i), p);
            }
        }
        ExplicitModel::new(graph, counts, table).expect("generated model is valid")
    }

    /// A random walk path from `v` with between `min_len` and
    /// `max_path_len` moves.
    pub fn walk(&self, g: &ExplicitGraph, v: VertexId, min_len: usize, rng: &mut impl Rng) -> Vec<VertexId> {
        let len = rng.gen_range(min_len..=self.max_path_len.max(min_len));
        let mut path = vec![v];
        let mut cur = v;
        for _ in 0..len {
            let adj = g.adjacent(cur);
            cur = VertexId(adj[rng.gen_range(0..adj.len())]);
            path.push(cur);
        }
        path
    }

    /// `m` random paths from one random non-root vertex.
    pub fn added_paths(&self, model: &ExplicitModel, m: usize, rng: &mut impl Rng) -> Vec<Vec<VertexId>> {
        let g = model.graph();
        let v = VertexId(rng.gen_range(1..g.len() as u32));
        (0..m).map(|_| self.walk(g, v, 0, rng)).collect()
    }
}

/// A family of statistics, expanded per model over vertices and horizons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticFamily {
    RootVisits,
    VisitIndicator,
    VisitedCount,
    RootVisitsFrom,
    /// Visited count plus root visits, a sum of two families.
    VisitedPlusReturns,
    /// Squared root visits, expected to fail.
    RootVisitsSquared,
}

/// Horizons at which time-indexed statistics are checked.
pub const CHECK_HORIZONS: [u64; 8] = [0, 1, 2, 3, 4, 6, 9, UNBOUNDED];

impl StatisticFamily {
    pub const ALL_PGF: [StatisticFamily; 4] = [
        StatisticFamily::RootVisits,
        StatisticFamily::VisitIndicator,
        StatisticFamily::VisitedCount,
        StatisticFamily::RootVisitsFrom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StatisticFamily::RootVisits => "root_visits",
            StatisticFamily::VisitIndicator => "visit_indicator",
            StatisticFamily::VisitedCount => "visited_count",
            StatisticFamily::RootVisitsFrom => "root_visits_from",
            StatisticFamily::VisitedPlusReturns => "visited_plus_returns",
            StatisticFamily::RootVisitsSquared => "root_visits_squared",
        }
    }

    pub fn members(self, m: &ExplicitModel) -> Vec<StatisticKind> {
        let g = m.graph();
        let names = || {
            g.vertex_ids()
                .skip(1)
                .map(|v| g.name(v).unwrap_or_default().to_string())
        };
        match self {
            StatisticFamily::RootVisits => vec![StatisticKind::RootVisits],
            StatisticFamily::VisitIndicator => names()
                .flat_map(|u| {
                    CHECK_HORIZONS
                        .iter()
                        .map(move |&t| StatisticKind::VisitIndicator { u: u.clone(), t })
                })
                .collect(),
            StatisticFamily::VisitedCount => CHECK_HORIZONS
                .iter()
                .map(|&t| StatisticKind::VisitedCount { t })
                .collect(),
            StatisticFamily::RootVisitsFrom => names().map(|u| StatisticKind::RootVisitsFrom { u }).collect(),
            StatisticFamily::VisitedPlusReturns => CHECK_HORIZONS
                .iter()
                .map(|&t| {
                    StatisticKind::Sum(vec![StatisticKind::VisitedCount { t }, StatisticKind::RootVisits])
                })
                .collect(),
            StatisticFamily::RootVisitsSquared => {
                vec![StatisticKind::Squared(Box::new(StatisticKind::RootVisits))]
            }
        }
    }
}

/// One failed sign check.
#[derive(Debug, Clone, Serialize)]
pub struct SignFailure {
    pub model_digest: String,
    pub model: String,
    pub statistic: String,
    pub paths: Vec<Vec<String>>,
    pub m: usize,
    pub value: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatisticReport {
    pub statistic: String,
    pub m_max: usize,
    pub instances: usize,
    pub checks: u64,
    pub indeterminate: u64,
    pub failures: Vec<SignFailure>,
    pub failure_count: u64,
    pub passed: bool,
}

/// Failures kept verbatim in a report; the rest are only counted.
const MAX_REPORTED_FAILURES: usize = 20;
/// Random path tuples tried per order `m` per model.
const TUPLES_PER_ORDER: usize = 2;

fn describe(m: &ExplicitModel) -> String {
    format!("{}--\n{}", m.graph().to_text(), m.table().to_text(m.graph()))
}

fn named(m: &ExplicitModel, paths: &[Vec<VertexId>]) -> Vec<Vec<String>> {
    paths
        .iter()
        .map(|p| p.iter().map(|v| m.graph().name(*v).unwrap_or("?").to_string()).collect())
        .collect()
}

struct InstanceResult {
    checks: u64,
    indeterminate: u64,
    failures: Vec<SignFailure>,
}

fn check_instance(
    family: StatisticFamily,
    gen: &SmallModelGenerator,
    m_max: usize,
    seed: u64,
    index: u64,
) -> Result<InstanceResult> {
    let mut rng = SmallModelGenerator::rng(seed, index);
    let model = gen.model(&mut rng);
    let members = family.members(&model);
    let mut res = InstanceResult {
        checks: 0,
        indeterminate: 0,
        failures: Vec::new(),
    };
    for order in 1..=m_max {
        for _ in 0..TUPLES_PER_ORDER {
            let paths = gen.added_paths(&model, order, &mut rng);
            let subsets = SubsetOutcomes::new(&model, &paths)?;
            for stat in &members {
                res.checks += 1;
                match subsets.delta(stat) {
                    Delta::Value(d) => {
                        let signed = if order % 2 == 0 { d } else { -d };
                        if signed > 0 {
                            res.failures.push(SignFailure {
                                model_digest: model.digest(),
                                model: describe(&model),
                                statistic: stat.to_string(),
                                paths: named(&model, &paths),
                                m: order,
                                value: d,
                            });
                        }
                    }
                    Delta::Indeterminate { .. } => res.indeterminate += 1,
                }
            }
        }
    }
    Ok(res)
}

/// Check `(-1)^m * delta <= 0` for every `m <= m_max` on `n_instances`
/// random models. The `m = 1` case is the monotonicity condition.
pub fn verify_statistic_class(
    family: StatisticFamily,
    gen: &SmallModelGenerator,
    m_max: usize,
    n_instances: usize,
    seed: u64,
) -> Result<StatisticReport> {
    if m_max < 1 {
        return Err(Error::Usage("m_max must be at least 1".into()));
    }
    let results: Vec<InstanceResult> = (0..n_instances as u64)
        .into_par_iter()
        .map(|i| check_instance(family, gen, m_max, seed, i))
        .collect::<Result<_>>()?;
    let mut report = StatisticReport {
        statistic: family.name().to_string(),
        m_max,
        instances: n_instances,
        checks: 0,
        indeterminate: 0,
        failures: Vec::new(),
        failure_count: 0,
        passed: true,
    };
    for r in results {
        report.checks += r.checks;
        report.indeterminate += r.indeterminate;
        report.failure_count += r.failures.len() as u64;
        for f in r.failures {
            if report.failures.len() < MAX_REPORTED_FAILURES {
                report.failures.push(f);
            }
        }
    }
    report.passed = report.failure_count == 0;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct BuilderReport {
    pub instances: usize,
    /// Indicator equals the max over per-frog restrictions at a vertex.
    pub max_decomposition_checks: u64,
    /// Returns from `u` equal the sum over single-frog restrictions at `u`.
    pub sum_decomposition_checks: u64,
    /// Difference of a sum equals the sum of differences.
    pub linearity_checks: u64,
    pub sum_class: StatisticReport,
    pub failures: Vec<String>,
    pub passed: bool,
}

/// Models keeping only the `i`-th frog at `v` (plus everything elsewhere),
/// for each `i`, and the model with no frogs at `v`.
fn restrictions(m: &ExplicitModel, v: VertexId) -> Result<(ExplicitModel, Vec<ExplicitModel>)> {
    let base = m.kappa_v(v)?;
    let singles = (1..=m.count(v))
        .map(|i| {
            let p = m.table().get(&FrogKey::new(v, i)).expect("validated table");
            base.sigma_p(p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((base, singles))
}

fn builder_instance(gen: &SmallModelGenerator, seed: u64, index: u64) -> Result<(u64, u64, u64, Vec<String>)> {
    let mut rng = SmallModelGenerator::rng(seed, index);
    let model = gen.model(&mut rng);
    let full = run_explicit(&model)?;
    let g = model.graph();
    let mut failures = Vec::new();
    let (mut max_checks, mut sum_checks, mut lin_checks) = (0u64, 0u64, 0u64);
    for v in g.vertex_ids().skip(1) {
        let (base, singles) = restrictions(&model, v)?;
        let base_out = run_explicit(&base)?;
        let single_outs = singles.iter().map(run_explicit).collect::<Result<Vec<_>>>()?;
        let vname = g.name(v).unwrap_or_default().to_string();
        for u in g.vertex_ids().skip(1) {
            let uname = g.name(u).unwrap_or_default().to_string();
            for &t in &CHECK_HORIZONS {
                let stat = StatisticKind::VisitIndicator { u: uname.clone(), t };
                let lhs = stat.on_outcome(&full);
                let rhs = single_outs
                    .iter()
                    .map(|o| stat.on_outcome(o))
                    .fold(stat.on_outcome(&base_out), u64::max);
                max_checks += 1;
                if lhs != rhs {
                    failures.push(format!(
                        "max decomposition: {stat} at {vname}: {lhs} != {rhs} in model {}",
                        model.digest()
                    ));
                }
            }
        }
        // returns from v split over v's frogs
        let stat = StatisticKind::RootVisitsFrom { u: vname.clone() };
        let lhs = stat.on_outcome(&full);
        let rhs: u64 = single_outs.iter().map(|o| stat.on_outcome(o)).sum();
        sum_checks += 1;
        if lhs != rhs {
            failures.push(format!(
                "sum decomposition: {stat}: {lhs} != {rhs} in model {}",
                model.digest()
            ));
        }
    }
    for order in 1..=3 {
        let paths = gen.added_paths(&model, order, &mut rng);
        let subsets = SubsetOutcomes::new(&model, &paths)?;
        let parts = [
            StatisticKind::VisitedCount { t: 4 },
            StatisticKind::RootVisits,
            StatisticKind::RootVisitsFrom {
                u: g.name(paths[0][0]).unwrap_or_default().to_string(),
            },
        ];
        let sum = StatisticKind::Sum(parts.to_vec());
        let separate: Option<i64> = parts.iter().try_fold(0i64, |acc, p| match subsets.delta(p) {
            Delta::Value(d) => Some(acc + d),
            Delta::Indeterminate { .. } => None,
        });
        lin_checks += 1;
        if let (Delta::Value(joint), Some(sep)) = (subsets.delta(&sum), separate) {
            if joint != sep {
                failures.push(format!(
                    "linearity: delta of {sum} is {joint}, parts sum to {sep}"
                ));
            }
        }
    }
    Ok((max_checks, sum_checks, lin_checks, failures))
}

/// Check the max and sum decompositions and linearity of differences on
/// random models, and that a sum of pgf statistics passes the class check.
pub fn verify_builder_properties(n_instances: usize, seed: u64) -> Result<BuilderReport> {
    let gen = SmallModelGenerator::default();
    let results = (0..n_instances as u64)
        .into_par_iter()
        .map(|i| builder_instance(&gen, seed, i))
        .collect::<Result<Vec<_>>>()?;
    let sum_class = verify_statistic_class(
        StatisticFamily::VisitedPlusReturns,
        &gen,
        3,
        n_instances,
        derive_seed(seed, 1),
    )?;
    let mut report = BuilderReport {
        instances: n_instances,
        max_decomposition_checks: 0,
        sum_decomposition_checks: 0,
        linearity_checks: 0,
        passed: false,
        sum_class,
        failures: Vec::new(),
    };
    for (a, b, c, f) in results {
        report.max_decomposition_checks += a;
        report.sum_decomposition_checks += b;
        report.linearity_checks += c;
        report.failures.extend(f);
    }
    report.passed = report.failures.is_empty() && report.sum_class.passed;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_vertex() -> ExplicitModel {
        ExplicitModel::parse("root o\no a\n", "o 1 : o a o\na 1 : a o\n").unwrap()
    }

    fn name(s: &str) -> String {
        s.to_string()
    }

    #[test]
    fn evaluate_on_hand_model() {
        let m = two_vertex();
        assert_eq!(evaluate(&StatisticKind::RootVisits, &m).unwrap(), 2);
        let ind = |t| StatisticKind::VisitIndicator { u: name("a"), t };
        assert_eq!(evaluate(&ind(1), &m).unwrap(), 1);
        assert_eq!(evaluate(&ind(0), &m).unwrap(), 0);
        let from_a = StatisticKind::RootVisitsFrom { u: name("a") };
        assert_eq!(evaluate(&from_a, &m).unwrap(), 1);
        assert_eq!(evaluate(&StatisticKind::VisitedCount { t: UNBOUNDED }, &m).unwrap(), 1);
        let bad = StatisticKind::RootVisitsFrom { u: name("o") };
        assert!(evaluate(&bad, &m).is_err());
    }

    #[test]
    fn single_returning_frog() {
        let m = ExplicitModel::parse("root o\no a\n", "o 1 : o a\n").unwrap();
        let a = m.vertex("a").unwrap();
        let o = m.vertex("o").unwrap();
        let d = delta(&StatisticKind::RootVisits, &m, &[vec![a, o]]).unwrap();
        assert_eq!(d, Delta::Value(1));
    }

    #[test]
    fn inert_additions() {
        // b is never reached, so frogs added there change nothing
        let m = ExplicitModel::parse("root o\no a\na b\n", "o 1 : o a o\n").unwrap();
        let (a, b, o) = (m.vertex("a").unwrap(), m.vertex("b").unwrap(), m.vertex("o").unwrap());
        for k in 1..=3 {
            let paths: Vec<_> = (0..k).map(|_| vec![b, a, o]).collect();
            for stat in [StatisticKind::RootVisits, StatisticKind::VisitedCount { t: 5 }] {
                assert_eq!(delta(&stat, &m, &paths).unwrap(), Delta::Value(0));
            }
        }
    }

    #[test]
    fn overlapping_wakers_give_negative_second_difference() {
        // each added frog alone wakes b, whose k frogs return to the root
        for k in 1..=3u32 {
            let mut table = String::from("o 1 : o a\n");
            for i in 1..=k {
                table.push_str(&format!("b {i} : b a o\n"));
            }
            let m = ExplicitModel::parse("root o\no a\na b\n", &table).unwrap();
            let (a, b) = (m.vertex("a").unwrap(), m.vertex("b").unwrap());
            let paths = vec![vec![a, b], vec![a, b]];
            let d = delta(&StatisticKind::RootVisits, &m, &paths).unwrap();
            assert_eq!(d, Delta::Value(-i64::from(k)));
        }
    }

    #[test]
    fn squared_returns_break_the_sign_condition() {
        let m = ExplicitModel::parse("root o\no a\n", "o 1 : o a\n").unwrap();
        let (a, o) = (m.vertex("a").unwrap(), m.vertex("o").unwrap());
        let sq = StatisticKind::Squared(Box::new(StatisticKind::RootVisits));
        let d = delta(&sq, &m, &[vec![a, o], vec![a, o]]).unwrap();
        assert_eq!(d, Delta::Value(2));
        let report = verify_statistic_class(
            StatisticFamily::RootVisitsSquared,
            &SmallModelGenerator::default(),
            2,
            200,
            5,
        )
        .unwrap();
        assert!(!report.passed);
        assert!(report.failures.iter().any(|f| f.m == 2 && f.value > 0));
    }

    #[test]
    fn mixed_origins_rejected() {
        let m = ExplicitModel::parse("root o\no a\na b\n", "o 1 : o a\n").unwrap();
        let (a, b) = (m.vertex("a").unwrap(), m.vertex("b").unwrap());
        assert!(delta(&StatisticKind::RootVisits, &m, &[vec![a], vec![b]]).is_err());
        assert!(delta(&StatisticKind::RootVisits, &m, &[]).is_err());
        assert!(delta(&StatisticKind::RootVisits, &m, &[vec![]]).is_err());
        assert!(delta(&StatisticKind::RootVisits, &m, &[vec![VertexId::ROOT]]).is_err());
    }

    #[test]
    fn linearity_of_delta() {
        let gen = SmallModelGenerator::default();
        for i in 0..50 {
            let mut rng = SmallModelGenerator::rng(11, i);
            let m = gen.model(&mut rng);
            let paths = gen.added_paths(&m, 2, &mut rng);
            let s = SubsetOutcomes::new(&m, &paths).unwrap();
            let f = StatisticKind::RootVisits;
            let g = StatisticKind::VisitedCount { t: 3 };
            let (Delta::Value(a), Delta::Value(b), Delta::Value(c)) =
                (s.delta(&f), s.delta(&g), s.delta(&StatisticKind::Sum(vec![f, g])))
            else {
                panic!("explicit models always finish")
            };
            assert_eq!(a + b, c);
        }
    }

    #[test]
    fn pgf_families_pass_small_sweep() {
        let gen = SmallModelGenerator::default();
        for fam in StatisticFamily::ALL_PGF {
            let r = verify_statistic_class(fam, &gen, 3, 60, 3).unwrap();
            assert!(r.passed, "{:?}", r.failures.first());
            assert!(r.checks > 0);
        }
    }

    #[test]
    fn builder_properties_hold() {
        let r = verify_builder_properties(60, 9).unwrap();
        assert!(r.passed, "{:?}", r.failures.first());
        assert!(r.max_decomposition_checks > 0 && r.sum_decomposition_checks > 0);
    }

    #[test]
    fn generator_respects_bounds() {
        let gen = SmallModelGenerator::default();
        for i in 0..200 {
            let mut rng = SmallModelGenerator::rng(1, i);
            let m = gen.model(&mut rng);
            assert!(m.graph().len() <= 6);
            assert!(m.counts().iter().all(|&c| c <= 2));
            assert!(m.table().iter().all(|(_, p)| p.len() <= 7));
        }
    }

    #[test]
    fn report_is_deterministic() {
        let gen = SmallModelGenerator::default();
        let a = verify_statistic_class(StatisticFamily::RootVisitsSquared, &gen, 2, 40, 8).unwrap();
        let b = verify_statistic_class(StatisticFamily::RootVisitsSquared, &gen, 2, 40, 8).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
