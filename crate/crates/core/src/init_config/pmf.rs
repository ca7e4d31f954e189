use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Total-mass tolerance for a valid pmf.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Finite-support pmf on the nonnegative integers with an optional atom at
/// infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    mass: Vec<f64>,
    at_infinity: f64,
}

impl Pmf {
    /// `mass[k]` is `P[X = k]`. Trailing zeros are trimmed.
    pub fn new(mass: Vec<f64>, at_infinity: f64) -> Result<Self> {
        if mass.iter().chain(std::iter::once(&at_infinity)).any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::config("pmf masses must be finite and nonnegative"));
        }
        let total: f64 = mass.iter().sum::<f64>() + at_infinity;
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::config(format!("pmf masses sum to {total}, not 1")));
        }
        let mut p = Pmf { mass, at_infinity };
        p.trim();
        Ok(p)
    }

    /// Build from unnormalized nonnegative weights.
    pub fn normalized(weights: Vec<f64>, at_infinity: f64) -> Result<Self> {
        let total: f64 = weights.iter().sum::<f64>() + at_infinity;
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::config("weights must have positive finite total"));
        }
        let mass = weights.iter().map(|w| w / total).collect();
        let mut p = Pmf {
            mass,
            at_infinity: at_infinity / total,
        };
        if p.mass.iter().any(|&m| m < 0.0) || p.at_infinity < 0.0 {
            return Err(Error::config("weights must be nonnegative"));
        }
        p.trim();
        Ok(p)
    }

    pub fn from_map(map: &BTreeMap<u64, f64>, at_infinity: f64) -> Result<Self> {
        let len = map.keys().next_back().map_or(0, |&k| k as usize + 1);
        if len > 1 << 24 {
            return Err(Error::config("pmf support too large"));
        }
        let mut mass = vec![0.0; len];
        for (&k, &m) in map {
            mass[k as usize] += m;
        }
        Pmf::new(mass, at_infinity)
    }

    fn trim(&mut self) {
        while self.mass.last() == Some(&0.0) {
            self.mass.pop();
        }
    }

    pub fn point(k: u64) -> Self {
        let mut mass = vec![0.0; k as usize + 1];
        mass[k as usize] = 1.0;
        Pmf {
            mass,
            at_infinity: 0.0,
        }
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::config("bernoulli parameter must be in [0,1]"));
        }
        Pmf::new(vec![1.0 - p, p], 0.0)
    }

    /// Mass `1 - q` at `k` and `q` at `k + 1`; mean `k + q`.
    pub fn two_point(k: u64, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::config("two-point weight must be in [0,1]"));
        }
        let mut mass = vec![0.0; k as usize + 2];
        mass[k as usize] = 1.0 - q;
        mass[k as usize + 1] = q;
        Pmf::new(mass, 0.0)
    }

    /// Poisson(`mu`) truncated at the smallest `N` with `P[X > N] < tail_eps`,
    /// then renormalized.
    pub fn poisson(mu: f64, tail_eps: f64) -> Result<Self> {
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::config("poisson mean must be finite and >= 0"));
        }
        if !(tail_eps >= 1e-15) {
            return Err(Error::config("tail_eps must be at least 1e-15"));
        }
        if mu == 0.0 {
            return Ok(Pmf::point(0));
        }
        let mut mass = Vec::new();
        let mut log_term = -mu;
        let mut cum = 0.0;
        let mut k = 0u64;
        loop {
            let term = log_term.exp();
            mass.push(term);
            cum += term;
            let tail = (1.0 - cum).max(0.0);
            if tail < tail_eps {
                break;
            }
            k += 1;
            if k > 1_000_000 {
                return Err(Error::config("poisson truncation did not converge"));
            }
            log_term += mu.ln() - (k as f64).ln();
        }
        Pmf::normalized(mass, 0.0)
    }

    /// `P[X = k]`.
    pub fn mass(&self, k: u64) -> f64 {
        self.mass.get(k as usize).copied().unwrap_or(0.0)
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn at_infinity(&self) -> f64 {
        self.at_infinity
    }

    /// Largest finite `k` with positive mass (0 for an all-infinite pmf).
    pub fn max_support(&self) -> u64 {
        self.mass.len().saturating_sub(1) as u64
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum::<f64>() + self.at_infinity
    }

    /// Mean, or `None` when there is an atom at infinity.
    pub fn mean(&self) -> Option<f64> {
        if self.at_infinity > 0.0 {
            return None;
        }
        Some(
            self.mass
                .iter()
                .enumerate()
                .map(|(k, m)| k as f64 * m)
                .sum(),
        )
    }

    /// `E t^X` with `t^inf = 0` for `t < 1` (Horner evaluation). At `t = 1`
    /// this is `P[X < inf]`.
    pub fn pgf(&self, t: f64) -> f64 {
        self.mass.iter().rev().fold(0.0, |acc, &m| acc * t + m)
    }

    /// `P[X > t]`, counting the atom at infinity.
    pub fn survival(&self, t: u64) -> f64 {
        let above: f64 = self.mass.iter().skip(t as usize + 1).sum();
        above + self.at_infinity
    }

    /// `E min(X, k)` with `min(inf, k) = k`.
    pub fn expected_min(&self, k: u64) -> f64 {
        let below: f64 = self
            .mass
            .iter()
            .enumerate()
            .map(|(j, &m)| (j as u64).min(k) as f64 * m)
            .sum();
        below + k as f64 * self.at_infinity
    }

    /// Inverse-CDF draw from a uniform `u` in [0,1). Fails when the pmf has
    /// mass at infinity.
    pub fn sample(&self, u: f64) -> Result<u64> {
        if self.at_infinity > 0.0 {
            return Err(Error::config(
                "cannot sample counts from a pmf with mass at infinity",
            ));
        }
        let mut cum = 0.0;
        for (k, &m) in self.mass.iter().enumerate() {
            cum += m;
            if u < cum {
                return Ok(k as u64);
            }
        }
        Ok(self.max_support())
    }

    /// Parse a literal such as `{0: 0.5, 2: 0.5}` or `{1: 0.9, inf: 0.1}`.
    pub fn parse_literal(text: &str) -> Result<Self> {
        let err = |m: String| Error::parse(1, m);
        let body = text
            .trim()
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(|| err(format!("pmf literal must be wrapped in braces: `{text}`")))?;
        let mut map = BTreeMap::new();
        let mut inf = 0.0;
        let mut seen_inf = false;
        for entry in body.split(',') {
            let entry = entry.trim();
            if entry.is_empty() {
                continue;
            }
            let (k, v) = entry
                .split_once(':')
                .ok_or_else(|| err(format!("expected `key: probability`, got `{entry}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| err(format!("bad probability `{}`", v.trim())))?;
            match k.trim() {
                "inf" => {
                    if seen_inf {
                        return Err(err("duplicate `inf` key".into()));
                    }
                    seen_inf = true;
                    inf = v;
                }
                k => {
                    let k: u64 = k.parse().map_err(|_| err(format!("bad support point `{k}`")))?;
                    if map.insert(k, v).is_some() {
                        return Err(err(format!("duplicate support point {k}")));
                    }
                }
            }
        }
        Pmf::from_map(&map, inf)
    }
}

impl fmt::Display for Pmf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        let mut first = true;
        for (k, &m) in self.mass.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{k}: {m:?}")?;
        }
        if self.at_infinity > 0.0 {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "inf: {:?}", self.at_infinity)?;
        }
        write!(f, "}}")
    }
}
