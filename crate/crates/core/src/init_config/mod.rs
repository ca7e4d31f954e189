//! Sleeping-frog count distributions and initial-configuration rules.

mod pmf;

use std::collections::BTreeMap;
use std::fmt;

pub use pmf::{Pmf, MASS_TOLERANCE};

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::stream::{uniform, Domain};

/// Default truncation for Poisson count laws.
pub const POISSON_TAIL_EPS: f64 = 1e-12;

/// How many dormant frogs sit at each non-root vertex.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigRule {
    Deterministic(u32),
    Iid(Pmf),
    /// Bernoulli(min(1, alpha / |x|^2)) at lattice site x.
    SiteDependentBernoulli { alpha: f64 },
    /// Counts keyed by vertex label; missing vertices get 0.
    ExplicitCounts(BTreeMap<String, u32>),
}

impl ConfigRule {
    pub fn validate(&self) -> Result<()> {
        match self {
            ConfigRule::SiteDependentBernoulli { alpha } if !(*alpha > 0.0) => {
                Err(Error::config("site-dependent bernoulli needs alpha > 0"))
            }
            ConfigRule::Iid(p) if p.at_infinity() > 0.0 => Err(Error::config(
                "count laws with mass at infinity cannot be simulated",
            )),
            _ => Ok(()),
        }
    }

    /// The per-vertex law when it is the same at every vertex.
    pub fn marginal(&self) -> Option<Pmf> {
        match self {
            ConfigRule::Deterministic(k) => Some(Pmf::point(u64::from(*k))),
            ConfigRule::Iid(p) => Some(p.clone()),
            _ => None,
        }
    }

    /// Parse the textual rule syntax:
    ///
    /// ```text
    /// deterministic(1)
    /// iid(poisson(1, 1e-12))    iid(bernoulli(0.5))   iid({0: 0.5, 2: 0.5})
    /// site_bernoulli(2.5)
    /// explicit({a: 1, b: 2})
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let (name, arg) = call(text)?;
        let rule = match name {
            "deterministic" => ConfigRule::Deterministic(parse_num(arg)?),
            "iid" => ConfigRule::Iid(parse_pmf_expr(arg)?),
            "site_bernoulli" => ConfigRule::SiteDependentBernoulli {
                alpha: parse_num(arg)?,
            },
            "explicit" => {
                let body = arg
                    .strip_prefix('{')
                    .and_then(|s| s.strip_suffix('}'))
                    .ok_or_else(|| Error::parse(1, "explicit counts must be `{name: k, ...}`"))?;
                let mut map = BTreeMap::new();
                for entry in split_top_level(body).into_iter().filter(|e| !e.is_empty()) {
                    let (k, v) = entry
                        .rsplit_once(':')
                        .ok_or_else(|| Error::parse(1, format!("bad entry `{entry}`")))?;
                    map.insert(k.trim().to_string(), parse_num(v)?);
                }
                ConfigRule::ExplicitCounts(map)
            }
            other => return Err(Error::parse(1, format!("unknown rule `{other}`"))),
        };
        rule.validate()?;
        Ok(rule)
    }
}

impl fmt::Display for ConfigRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigRule::Deterministic(k) => write!(f, "deterministic({k})"),
            ConfigRule::Iid(p) => write!(f, "iid({p})"),
            ConfigRule::SiteDependentBernoulli { alpha } => write!(f, "site_bernoulli({alpha:?})"),
            ConfigRule::ExplicitCounts(m) => {
                write!(f, "explicit({{")?;
                for (i, (k, v)) in m.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{k}: {v}")?;
                }
                write!(f, "}})")
            }
        }
    }
}

/// Parse a pmf expression: a literal or one of the named constructors.
pub fn parse_pmf_expr(text: &str) -> Result<Pmf> {
    let text = text.trim();
    if text.starts_with('{') {
        return Pmf::parse_literal(text);
    }
    let (name, arg) = call(text)?;
    let args: Vec<&str> = arg.split(',').map(str::trim).collect();
    match (name, args.as_slice()) {
        ("poisson", [mu]) => Pmf::poisson(parse_num(mu)?, POISSON_TAIL_EPS),
        ("poisson", [mu, eps]) => Pmf::poisson(parse_num(mu)?, parse_num(eps)?),
        ("bernoulli", [p]) => Pmf::bernoulli(parse_num(p)?),
        ("point", [k]) => {
            let k: u64 = parse_num(k)?;
            if k > 1 << 20 {
                return Err(Error::config("point mass too large"));
            }
            Ok(Pmf::point(k))
        }
        ("two_point", [k, q]) => {
            let k: u64 = parse_num(k)?;
            if k > 1 << 20 {
                return Err(Error::config("two-point support too large"));
            }
            Pmf::two_point(k, parse_num(q)?)
        }
        _ => Err(Error::parse(1, format!("unknown pmf expression `{text}`"))),
    }
}

/// Split on commas that are not nested inside parentheses.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out
}

/// Split `name(arg)` into its parts.
fn call(text: &str) -> Result<(&str, &str)> {
    let text = text.trim();
    let open = text
        .find('(')
        .ok_or_else(|| Error::parse(1, format!("expected `name(...)`, got `{text}`")))?;
    let arg = text[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| Error::parse(1, format!("unbalanced parentheses in `{text}`")))?;
    Ok((text[..open].trim(), arg.trim()))
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::parse(1, format!("bad number `{}`", s.trim())))
}

/// Number of dormant frogs at non-root vertex `v`, deterministic given
/// `(rule, v, seed)`.
pub fn sample_count(rule: &ConfigRule, g: &Graph, v: VertexId, seed: u64) -> Result<u32> {
    if v.is_root() {
        return Err(Error::Usage(
            "the root carries the initial frog, not a dormant pile".into(),
        ));
    }
    match rule {
        ConfigRule::Deterministic(k) => Ok(*k),
        ConfigRule::Iid(p) => {
            let u = uniform(seed, Domain::Count, g.label_hash(v), 0, 0);
            let k = p.sample(u)?;
            u32::try_from(k).map_err(|_| Error::config("sampled count overflows u32"))
        }
        ConfigRule::SiteDependentBernoulli { alpha } => {
            let label = g.coordinates(v)?;
            let r2 = label
                .norm_squared()
                .ok_or_else(|| Error::config("site-dependent bernoulli needs lattice coordinates"))?;
            let p = (alpha / r2).min(1.0);
            let u = uniform(seed, Domain::Count, g.label_hash(v), 0, 0);
            Ok(u32::from(u < p))
        }
        ConfigRule::ExplicitCounts(map) => {
            let label = g.coordinates(v)?.to_string();
            Ok(map.get(&label).copied().unwrap_or(0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphKind;

    fn z2() -> Graph {
        Graph::new(GraphKind::Lattice { dim: 2 }).unwrap()
    }

    #[test]
    fn deterministic_counts() {
        let mut g = z2();
        let v = g.neighbor(g.root(), 2).unwrap();
        assert_eq!(sample_count(&ConfigRule::Deterministic(3), &g, v, 1).unwrap(), 3);
        assert!(sample_count(&ConfigRule::Deterministic(3), &g, g.root(), 1).is_err());
    }

    #[test]
    fn iid_poisson_sample_mean() {
        let pmf = Pmf::poisson(1.0, 1e-12).unwrap();
        let exact_mean = pmf.mean().unwrap();
        let rule = ConfigRule::Iid(pmf);
        let mut g = Graph::new(GraphKind::Lattice { dim: 1 }).unwrap();
        let mut v = g.root();
        let n = 100_000;
        let mut total = 0u64;
        for _ in 0..n {
            v = g.neighbor(v, 0).unwrap();
            total += u64::from(sample_count(&rule, &g, v, 17).unwrap());
        }
        let mean = total as f64 / n as f64;
        assert!((mean - exact_mean).abs() < 0.02, "{mean}");
    }

    #[test]
    fn site_bernoulli_near_origin() {
        let mut g = z2();
        let v = g.neighbor(g.root(), 0).unwrap(); // (1,0)
        let rule = ConfigRule::SiteDependentBernoulli { alpha: 0.3 };
        let mut ones = 0;
        let n = 20_000;
        for seed in 0..n {
            let c = sample_count(&rule, &g, v, seed).unwrap();
            assert!(c <= 1);
            ones += c;
        }
        let freq = f64::from(ones) / n as f64;
        assert!((freq - 0.3).abs() < 0.015, "{freq}");
        let clamp = ConfigRule::SiteDependentBernoulli { alpha: 4.0 };
        assert_eq!(sample_count(&clamp, &g, v, 0).unwrap(), 1);
    }

    #[test]
    fn counts_are_deterministic() {
        let mut g = z2();
        let v = g.neighbor(g.root(), 3).unwrap();
        let rule = ConfigRule::Iid(Pmf::poisson(2.0, 1e-12).unwrap());
        assert_eq!(
            sample_count(&rule, &g, v, 99).unwrap(),
            sample_count(&rule, &g, v, 99).unwrap()
        );
    }

    #[test]
    fn rule_syntax_round_trips() {
        for text in [
            "deterministic(2)",
            "iid({0: 0.5, 2: 0.5})",
            "site_bernoulli(2.5)",
            "explicit({a: 1, b: 2})",
        ] {
            let r = ConfigRule::parse(text).unwrap();
            assert_eq!(r.to_string(), text);
            assert_eq!(ConfigRule::parse(&r.to_string()).unwrap(), r);
        }
        let p = ConfigRule::parse("iid(poisson(1, 1e-12))").unwrap();
        assert_eq!(p.marginal().unwrap(), Pmf::poisson(1.0, 1e-12).unwrap());
        assert!(ConfigRule::parse("iid({1: 0.5, inf: 0.5})").is_err());
        assert!(ConfigRule::parse("site_bernoulli(0)").is_err());
        assert!(ConfigRule::parse("mystery(1)").is_err());
        assert!(ConfigRule::parse("deterministic(1").is_err());
    }

    #[test]
    fn explicit_counts_default_to_zero() {
        let mut g = z2();
        let v = g.neighbor(g.root(), 0).unwrap();
        let w = g.neighbor(g.root(), 1).unwrap();
        let rule = ConfigRule::parse("explicit({(1,0): 4})").unwrap();
        assert_eq!(sample_count(&rule, &g, v, 0).unwrap(), 4);
        assert_eq!(sample_count(&rule, &g, w, 0).unwrap(), 0);
    }
}
