//! The pmf operator induced by the frog model on a four-vertex tree.
//!
//! The tree has the root `o`, its single neighbor `p`, and two leaves `u`
//! and `v` hanging off `p`. One frog starts active at `o`, one sleeps at
//! `p`, and `u` and `v` hold independent draws from the input law. Frogs
//! follow nonbacktracking walks and stop on reaching a leaf. The output is
//! the law of the number of frogs that come to rest at `o`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{run, run_explicit, ExplicitModel, FrogModelSpec};
use crate::error::{Error, Result};
use crate::graph::{ExplicitGraph, GraphKind, VertexId};
use crate::init_config::{ConfigRule, Pmf};
use crate::orders::{self, check_exact, icv_two_point_dominator, OrderKind};
use crate::paths::{FrogKey, PathTable, WalkerKind};
use crate::stream::{derive_seed, uniform, Domain};

pub const DEFAULT_SUPPORT_CAP: u64 = 12;
/// Support cap used when iterating; larger mass is folded onto the cap.
pub const ITERATE_SUPPORT_CAP: u64 = 64;
/// Largest `i + j` the brute-force enumeration accepts.
pub const BRUTE_FORCE_MAX_FROGS: u32 = 14;

pub const TREE_TEXT: &str = "root o\no p\np u\np v\n";

pub fn tree() -> Arc<ExplicitGraph> {
    Arc::new(ExplicitGraph::parse(TREE_TEXT).expect("fixed tree parses"))
}

fn binomial_half(n: u32) -> Vec<f64> {
    let mut row = vec![1.0f64];
    for _ in 0..n {
        let mut next = vec![0.0; row.len() + 1];
        for (k, &c) in row.iter().enumerate() {
            next[k] += c * 0.5;
            next[k + 1] += c * 0.5;
        }
        row = next;
    }
    row
}

fn check_input(pi: &Pmf, support_cap: u64) -> Result<()> {
    if pi.at_infinity() > 0.0 {
        return Err(Error::config("input law has mass at infinity"));
    }
    if pi.max_support() > support_cap {
        return Err(Error::config(format!(
            "input support {} exceeds the cap {support_cap}",
            pi.max_support()
        )));
    }
    Ok(())
}

/// Mix per-count laws over `(i, j)` drawn from `pi` at `u` and `v`.
fn mix(pi: &Pmf, law: impl Fn(u32, u32) -> Result<Vec<f64>> + Sync) -> Result<Pmf> {
    let support: Vec<(u32, f64)> = pi
        .masses()
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > 0.0)
        .map(|(k, &m)| (k as u32, m))
        .collect();
    let pairs: Vec<(u32, u32, f64)> = support
        .iter()
        .flat_map(|&(i, a)| support.iter().map(move |&(j, b)| (i, j, a * b)))
        .collect();
    let parts = pairs
        .par_iter()
        .map(|&(i, j, w)| law(i, j).map(|l| (w, l)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![0.0; 2 * pi.max_support() as usize + 3];
    for (w, l) in parts {
        for (k, m) in l.into_iter().enumerate() {
            out[k] += w * m;
        }
    }
    Pmf::normalized(out, 0.0)
}

/// Law of the number of frogs resting at `o` given `i` frogs at `u` and `j`
/// at `v`, by running every equally likely path assignment through the
/// engine.
pub fn brute_force_law(i: u32, j: u32) -> Result<Vec<f64>> {
    if i + j > BRUTE_FORCE_MAX_FROGS {
        return Err(Error::config("too many frogs to enumerate"));
    }
    let g = tree();
    let id = |n: &str| g.id(n).expect("fixed vertex");
    let (o, p, u, v) = (id("o"), id("p"), id("u"), id("v"));
    let n = i + j;
    let combos = 2u64 * 3 * (1u64 << n);
    let mut hist = vec![0u64; n as usize + 3];
    for code in 0..combos {
        let root_side = if code % 2 == 0 { u } else { v };
        let p_first = [o, u, v][(code / 2 % 3) as usize];
        let bits = code / 6;
        let mut table = PathTable::new();
        table.insert(FrogKey::initial(), vec![o, p, root_side]);
        table.insert(FrogKey::new(p, 1), vec![p, p_first]);
        for k in 0..n {
            let (home, other) = if k < i { (u, v) } else { (v, u) };
            let index = if k < i { k + 1 } else { k - i + 1 };
            let end = if bits >> k & 1 == 0 { o } else { other };
            table.insert(FrogKey::new(home, index), vec![home, p, end]);
        }
        let mut counts = vec![0u32; g.len()];
        counts[p.index()] = 1;
        counts[u.index()] = i;
        counts[v.index()] = j;
        let model = ExplicitModel::new(Arc::clone(&g), counts, table)?;
        hist[run_explicit(&model)?.root_visits as usize] += 1;
    }
    Ok(hist.into_iter().map(|c| c as f64 / combos as f64).collect())
}

pub fn apply_brute_force(pi: &Pmf) -> Result<Pmf> {
    check_input(pi, u64::from(BRUTE_FORCE_MAX_FROGS / 2))?;
    mix(pi, brute_force_law)
}

/// Closed form of [`brute_force_law`]. The root frog picks a side `A`
/// (the other is `B`); `A` wakes at once and each of its frogs reaches `o`
/// with probability 1/2, otherwise crossing to `B`. The `p` frog goes to
/// `o`, `A` or `B` with probability 1/3 each. `B`'s frogs count only if `B`
/// is woken, and then each reaches `o` with probability 1/2.
pub fn exact_law(i: u32, j: u32) -> Vec<f64> {
    let mut out = vec![0.0; (i + j) as usize + 3];
    for (na, nb) in [(i, j), (j, i)] {
        let (ba, bb) = (binomial_half(na), binomial_half(nb));
        for (ka, &pa) in ba.iter().enumerate() {
            let crossed = (ka as u32) < na;
            for (kb, &pb) in bb.iter().enumerate() {
                let w = 0.5 * pa * pb / 3.0;
                // p frog to o, p frog to A, p frog to B
                let b_if_crossed = if crossed { kb } else { 0 };
                out[1 + ka + b_if_crossed] += w;
                out[ka + b_if_crossed] += w;
                out[ka + kb] += w;
            }
        }
    }
    out
}

/// Exact output law. The input must have no mass at infinity and support
/// at most `support_cap`.
pub fn apply_exact(pi: &Pmf, support_cap: u64) -> Result<Pmf> {
    check_input(pi, support_cap)?;
    mix(pi, |i, j| Ok(exact_law(i, j)))
}

/// Output counts of `reps` simulated runs on the tree, each with fresh
/// draws from `pi` at `u` and `v`.
pub fn apply_mc(pi: &Pmf, reps: usize, seed: u64) -> Result<Vec<u64>> {
    check_input(pi, u64::from(u32::MAX))?;
    let g = tree();
    (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let rep_seed = derive_seed(seed, r);
            let i = pi.sample(uniform(rep_seed, Domain::Count, 1, 0, 0))?;
            let j = pi.sample(uniform(rep_seed, Domain::Count, 2, 0, 0))?;
            let counts = [("p", 1u32), ("u", i as u32), ("v", j as u32)]
                .into_iter()
                .map(|(n, c)| (n.to_string(), c))
                .collect();
            let spec = FrogModelSpec::new(
                GraphKind::Explicit(Arc::clone(&g)),
                ConfigRule::ExplicitCounts(counts),
                WalkerKind::NonbacktrackingStoppedAtLeaves,
                // every frog stops within two moves of waking; waking chains
                // have at most three links
                8,
                rep_seed,
            );
            Ok(run(&spec)?.root_visits)
        })
        .collect()
}

/// Empirical pmf of nonnegative integer samples.
pub fn empirical_pmf(samples: &[u64]) -> Result<Pmf> {
    let top = samples.iter().copied().max().unwrap_or(0) as usize;
    let mut w = vec![0.0; top + 1];
    for &s in samples {
        w[s as usize] += 1.0;
    }
    Pmf::normalized(w, 0.0)
}

pub fn total_variation(a: &Pmf, b: &Pmf) -> f64 {
    let n = a.masses().len().max(b.masses().len()) as u64;
    let finite: f64 = (0..n).map(|k| (a.mass(k) - b.mass(k)).abs()).sum();
    0.5 * (finite + (a.at_infinity() - b.at_infinity()).abs())
}

#[derive(Debug, Clone, Serialize)]
pub struct PairResult {
    pub label: String,
    pub input_certified: bool,
    pub output_ordered: bool,
    /// Smallest output margin `G_{A x}(t) - G_{A y}(t)` over the grid.
    pub min_output_margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    pub pairs: usize,
    pub grid: usize,
    pub skipped_uncertified: usize,
    pub violations: Vec<PairResult>,
    pub passed: bool,
}

/// For each input pair certified as pgf-ordered on the grid, check that the
/// outputs are ordered the same way.
pub fn monotonicity_test(pairs: &[(String, Pmf, Pmf)], grid: usize) -> Result<MonotonicityReport> {
    let results = pairs
        .par_iter()
        .map(|(label, x, y)| {
            let input = check_exact(OrderKind::Pgf, x, y, grid);
            let (ax, ay) = (apply_exact(x, ITERATE_SUPPORT_CAP)?, apply_exact(y, ITERATE_SUPPORT_CAP)?);
            let out = check_exact(OrderKind::Pgf, &ax, &ay, grid);
            Ok(PairResult {
                label: label.clone(),
                input_certified: input.verdict.is_dominates(),
                output_ordered: out.verdict.is_dominates(),
                min_output_margin: out.curve.iter().map(|m| m.margin).fold(f64::INFINITY, f64::min),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let skipped = results.iter().filter(|r| !r.input_certified).count();
    let violations: Vec<PairResult> = results
        .into_iter()
        .filter(|r| r.input_certified && !r.output_ordered)
        .collect();
    Ok(MonotonicityReport {
        pairs: pairs.len(),
        grid,
        skipped_uncertified: skipped,
        passed: violations.is_empty(),
        violations,
    })
}

/// `count` pgf-ordered pairs with support at most `max_support`: point
/// pairs, thinning pairs `(thin(x, p), x)` and pairs `(x, d)` with `d` the
/// two-point icv dominator of `x`, in rotation.
pub fn constructed_pairs(count: usize, max_support: u64, seed: u64) -> Vec<(String, Pmf, Pmf)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|n| match n % 3 {
            0 => {
                let a = rng.gen_range(0..=max_support);
                let b = rng.gen_range(a..=max_support);
                (format!("point({a}) vs point({b})"), Pmf::point(a), Pmf::point(b))
            }
            1 => {
                let x = orders::random_pmf(&mut rng, max_support, 0.0);
                let p: f64 = rng.gen();
                let t = orders::thin(&x, p).expect("p in [0,1]");
                (format!("thinning p={p:.4}"), t, x)
            }
            _ => {
                let x = orders::random_pmf(&mut rng, max_support.saturating_sub(1), 0.0);
                let d = icv_two_point_dominator(&x).expect("finite mean");
                ("two-point dominator".to_string(), x, d)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Iterate {
    pub pmf: Pmf,
    /// Mass moved onto the support cap at this step.
    pub folded_mass: f64,
    /// `(t, G(t))` on the grid.
    pub g_curve: Vec<(f64, f64)>,
}

/// `pi_{k+1} = A pi_k`, with mass above [`ITERATE_SUPPORT_CAP`] folded onto
/// the cap. Returns `pi_0, ..., pi_n`.
pub fn iterate(pi0: &Pmf, n: usize, grid: usize) -> Result<Vec<Iterate>> {
    if n == 0 {
        return Err(Error::Usage("iterate needs n >= 1".into()));
    }
    let ts = orders::t_grid(grid);
    let curve = |p: &Pmf| ts.iter().map(|&t| (t, p.pgf(t))).collect();
    let mut out = vec![Iterate {
        pmf: pi0.clone(),
        folded_mass: 0.0,
        g_curve: curve(pi0),
    }];
    let mut cur = pi0.clone();
    for _ in 0..n {
        let next = apply_exact(&cur, ITERATE_SUPPORT_CAP)?;
        let (folded, mass) = fold(&next, ITERATE_SUPPORT_CAP);
        cur = Pmf::normalized(folded, 0.0)?;
        out.push(Iterate {
            g_curve: curve(&cur),
            pmf: cur.clone(),
            folded_mass: mass,
        });
    }
    Ok(out)
}

fn fold(p: &Pmf, cap: u64) -> (Vec<f64>, f64) {
    let cap = cap as usize;
    let mut m = p.masses().to_vec();
    if m.len() <= cap + 1 {
        return (m, 0.0);
    }
    let extra: f64 = m[cap + 1..].iter().sum();
    m.truncate(cap + 1);
    m[cap] += extra;
    (m, extra)
}

/// Vertex ids of the tree in the order `o, p, u, v`.
pub fn tree_vertices() -> [VertexId; 4] {
    let g = tree();
    ["o", "p", "u", "v"].map(|n| g.id(n).expect("fixed vertex"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orders::{check_exact, DEFAULT_T_GRID};

    #[test]
    fn brute_force_with_empty_leaves() {
        // only the p frog can reach o, with its first step uniform over three
        let law = brute_force_law(0, 0).unwrap();
        assert!((law[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((law[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!(law[2..].iter().all(|&m| m == 0.0));
    }

    #[test]
    fn brute_force_one_frog_at_u() {
        // root frog to u (1/2): p frog o/u/v, u frog o or v
        // root frog to v (1/2): u frog woken only if the p frog goes to u
        let law = brute_force_law(1, 0).unwrap();
        let p2 = 0.5 * (1.0 / 3.0) * 0.5;
        let p0 = 0.5 * (2.0 / 3.0) * 0.5 + 0.5 * (1.0 / 3.0 * 0.5 + 1.0 / 3.0);
        assert!((law[2] - p2).abs() < 1e-15);
        assert!((law[0] - p0).abs() < 1e-15);
        assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_brute_force() {
        for i in 0..=5 {
            for j in 0..=5 {
                let a = exact_law(i, j);
                let b = brute_force_law(i, j).unwrap();
                for k in 0..a.len().max(b.len()) {
                    let (x, y) = (a.get(k).copied().unwrap_or(0.0), b.get(k).copied().unwrap_or(0.0));
                    assert!((x - y).abs() < 1e-14, "({i},{j}) k={k}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn empty_input_gives_one_third() {
        let out = apply_exact(&Pmf::point(0), DEFAULT_SUPPORT_CAP).unwrap();
        assert!((out.mass(0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((out.mass(1) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(out.max_support(), 1);
    }

    #[test]
    fn input_validation() {
        assert!(apply_exact(&Pmf::point(13), DEFAULT_SUPPORT_CAP).is_err());
        let inf = Pmf::new(vec![0.5], 0.5).unwrap();
        assert!(apply_exact(&inf, DEFAULT_SUPPORT_CAP).is_err());
        assert!(apply_mc(&inf, 1, 0).is_err());
    }

    #[test]
    fn output_support_and_mass() {
        for k in 0..=6 {
            let out = apply_exact(&Pmf::point(k), DEFAULT_SUPPORT_CAP).unwrap();
            assert!((out.total_mass() - 1.0).abs() < 1e-12);
            assert!(out.max_support() <= 2 + 2 * k);
        }
    }

    #[test]
    fn point_inputs_are_increasing() {
        for k in 0..=5 {
            let a = apply_exact(&Pmf::point(k), DEFAULT_SUPPORT_CAP).unwrap();
            let b = apply_exact(&Pmf::point(k + 1), DEFAULT_SUPPORT_CAP).unwrap();
            assert!(check_exact(OrderKind::Pgf, &a, &b, DEFAULT_T_GRID).verdict.is_dominates());
        }
    }

    #[test]
    fn monte_carlo_empty_input() {
        let s = apply_mc(&Pmf::point(0), 100_000, 1).unwrap();
        let freq = s.iter().filter(|&&n| n == 1).count() as f64 / s.len() as f64;
        assert!((freq - 1.0 / 3.0).abs() < 0.01, "{freq}");
    }

    #[test]
    fn monte_carlo_matches_exact() {
        let pi = Pmf::bernoulli(0.5).unwrap();
        let s = apply_mc(&pi, 100_000, 2).unwrap();
        let tv = total_variation(&empirical_pmf(&s).unwrap(), &apply_exact(&pi, 12).unwrap());
        assert!(tv < 0.02, "{tv}");
        let one = apply_mc(&Pmf::point(3), 1, 9).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one[0] <= 2 + 3 + 3);
    }

    #[test]
    fn monotone_on_constructed_pairs() {
        let mut pairs = constructed_pairs(30, 6, 4);
        let x = Pmf::poisson(0.5, 1e-12).unwrap();
        pairs.push(("poisson".into(), x.clone(), icv_two_point_dominator(&x).unwrap()));
        let r = monotonicity_test(&pairs, DEFAULT_T_GRID).unwrap();
        assert!(r.passed, "{:?}", r.violations);
        assert_eq!(r.skipped_uncertified, 0);
    }

    #[test]
    fn iteration() {
        let it = iterate(&Pmf::point(0), 8, 32).unwrap();
        assert_eq!(it.len(), 9);
        assert!(it[1].pmf.max_support() <= 4);
        for s in &it {
            assert!((s.pmf.total_mass() - 1.0).abs() < 1e-12);
            assert!(s.pmf.max_support() <= ITERATE_SUPPORT_CAP);
        }
        // ordered seeds give ordered iterates
        let hi = iterate(&Pmf::point(1), 8, 32).unwrap();
        for (a, b) in it.iter().zip(&hi) {
            for (ga, gb) in a.g_curve.iter().zip(&b.g_curve) {
                assert!(ga.1 >= gb.1 - 1e-9);
            }
        }
        assert!(iterate(&Pmf::point(0), 0, 8).is_err());
    }
}
