//! Exact rational sequences: iterated forward differences and complete
//! monotonicity. Multilinear interpolation lives in [`multilinear`].

pub mod multilinear;

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

pub use multilinear::{
    interpolate, mixed_partial, verify_derivative_identity, vertex_extremum_check, ExtremumReport,
    MultilinearPoly, VertexTable,
};

use crate::error::{Error, Result};
use crate::graph::strip_comment;

/// Parse `p/q` or an integer.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((_, den)) = s.split_once('/') {
        if den.trim().parse::<BigInt>().is_ok_and(|d| d.is_zero()) {
            return Err(Error::parse(0, format!("zero denominator in `{s}`")));
        }
    }
    BigRational::from_str(s).map_err(|_| Error::parse(0, format!("bad rational `{s}`")))
}

fn at_line(e: Error, line: usize) -> Error {
    match e {
        Error::Parse { msg, .. } => Error::parse(line, msg),
        other => other,
    }
}

/// Finite sequence `f(0), ..., f(K)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalSeq(pub Vec<BigRational>);

impl RationalSeq {
    pub fn new(values: Vec<BigRational>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::config("a sequence needs at least one term"));
        }
        Ok(RationalSeq(values))
    }

    /// `f(k) = sum_j w_j u_j^k` for `k = 0..len`.
    pub fn moments(atoms: &[(BigRational, BigRational)], len: usize) -> Result<Self> {
        let mut out = vec![BigRational::zero(); len];
        for (w, u) in atoms {
            let mut pow = BigRational::one();
            for v in out.iter_mut() {
                *v += w * &pow;
                pow *= u;
            }
        }
        RationalSeq::new(out)
    }

    /// Index of the last term, `K`.
    pub fn last_index(&self) -> usize {
        self.0.len() - 1
    }

    /// Parse `k value` lines covering `0..=K` exactly once each.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(usize, BigRational)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(k), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(n + 1, "expected `k value`"));
            };
            let k: usize = k
                .parse()
                .map_err(|_| Error::parse(n + 1, format!("bad index `{k}`")))?;
            entries.push((k, parse_rational(v).map_err(|e| at_line(e, n + 1))?));
        }
        entries.sort_by_key(|(k, _)| *k);
        for (expect, (k, _)) in entries.iter().enumerate() {
            if *k != expect {
                return Err(Error::parse(0, format!("indices must run 0..=K without gaps; missing or repeated {expect}")));
            }
        }
        RationalSeq::new(entries.into_iter().map(|(_, v)| v).collect())
    }

    pub fn to_text(&self) -> String {
        self.0
            .iter()
            .enumerate()
            .map(|(k, v)| format!("{k} {v}\n"))
            .collect()
    }
}

fn binomial_row(n: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for i in 0..n {
        let next = &row[i] * BigInt::from(n - i) / BigInt::from(i + 1);
        row.push(next);
    }
    row
}

/// `D^n f(k) = sum_i (-1)^(n-i) C(n,i) f(k+i)`.
pub fn iterated_difference(f: &RationalSeq, n: usize, k: usize) -> Result<BigRational> {
    if k + n > f.last_index() {
        return Err(Error::Usage(format!(
            "D^{n} f({k}) needs terms up to {}, sequence ends at {}",
            k + n,
            f.last_index()
        )));
    }
    let row = binomial_row(n);
    let mut acc = BigRational::zero();
    for (i, c) in row.iter().enumerate() {
        let term = &f.0[k + i] * BigRational::from_integer(c.clone());
        if (n - i).is_multiple_of(2) {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HausdorffWitness {
    pub n: usize,
    pub k: usize,
    /// `(-1)^n D^n f(k)`, negative.
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HausdorffReport {
    pub passed: bool,
    pub checked: usize,
    pub witness: Option<HausdorffWitness>,
}

/// Check `(-1)^n D^n f(k) >= 0` for `n <= n_max` and `k <= K - n`, in order
/// of increasing `n` then `k`; the first failure is the witness.
pub fn hausdorff_check(f: &RationalSeq, n_max: usize) -> HausdorffReport {
    let mut checked = 0;
    // successive difference rows: row_n[k] = D^n f(k)
    let mut row = f.0.clone();
    for n in 0..=n_max.min(f.last_index()) {
        for (k, d) in row.iter().enumerate() {
            checked += 1;
            let signed = if n % 2 == 0 { d.clone() } else { -d.clone() };
            if signed.is_negative() {
                return HausdorffReport {
                    passed: false,
                    checked,
                    witness: Some(HausdorffWitness {
                        n,
                        k,
                        value: signed.to_string(),
                    }),
                };
            }
        }
        row = row.windows(2).map(|w| &w[1] - &w[0]).collect();
    }
    HausdorffReport {
        passed: true,
        checked,
        witness: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    fn seq(vals: &[&str]) -> RationalSeq {
        RationalSeq::new(vals.iter().map(|s| q(s)).collect()).unwrap()
    }

    fn linear(len: usize) -> RationalSeq {
        RationalSeq::new((0..len).map(|k| BigRational::from_integer(k.into())).collect()).unwrap()
    }

    #[test]
    fn constant_and_linear_differences() {
        let c = seq(&["5/3"; 6]);
        for k in 0..5 {
            assert!(iterated_difference(&c, 1, k).unwrap().is_zero());
        }
        let f = linear(8);
        for k in 0..6 {
            assert_eq!(iterated_difference(&f, 1, k).unwrap(), q("1"));
            assert!(iterated_difference(&f, 2, k).unwrap().is_zero());
        }
        assert_eq!(iterated_difference(&f, 0, 3).unwrap(), q("3"));
        assert!(iterated_difference(&f, 3, 5).is_err());
    }

    #[test]
    fn geometric_differences_closed_form() {
        let c = q("3/10");
        let f = RationalSeq::moments(&[(q("1"), c.clone())], 16).unwrap();
        let one_minus = q("1") - &c;
        for n in 0..=6 {
            for k in 0..=(15 - n) {
                let d = iterated_difference(&f, n, k).unwrap();
                let signed = if n % 2 == 0 { d } else { -d };
                let expect = num_traits::pow(c.clone(), k) * num_traits::pow(one_minus.clone(), n);
                assert_eq!(signed, expect);
            }
        }
    }

    #[test]
    fn two_atom_moment_sequence_passes() {
        let f = RationalSeq::moments(&[(q("1/2"), q("3/10")), (q("1/2"), q("9/10"))], 21).unwrap();
        let r = hausdorff_check(&f, 10);
        assert!(r.passed);
        assert!(r.checked > 0);
    }

    #[test]
    fn linear_sequence_fails_at_first_difference() {
        let r = hausdorff_check(&linear(10), 5);
        assert!(!r.passed);
        let w = r.witness.unwrap();
        assert_eq!((w.n, w.k), (1, 0));
        assert_eq!(w.value, "-1");
    }

    #[test]
    fn sequence_text_round_trip() {
        let f = seq(&["1", "1/2", "-3/4"]);
        assert_eq!(RationalSeq::parse(&f.to_text()).unwrap(), f);
        let parsed = RationalSeq::parse("# c\n1 2/4\n0 1\n").unwrap();
        assert_eq!(parsed, seq(&["1", "1/2"]));
        assert!(RationalSeq::parse("0 1\n2 1\n").is_err());
        assert!(RationalSeq::parse("0 1\n0 2\n").is_err());
        assert!(RationalSeq::parse("0 1/0\n").is_err());
        assert!(RationalSeq::parse("0 x\n").is_err());
        assert!(RationalSeq::parse("").is_err());
        assert!(RationalSeq::parse("0 1 2\n").is_err());
    }

    proptest! {
        #[test]
        fn difference_is_linear(
            a in proptest::collection::vec(-50i64..50, 8),
            b in proptest::collection::vec(-50i64..50, 8),
            alpha in -5i64..5,
            beta in -5i64..5,
        ) {
            let to = |v: &[i64]| RationalSeq::new(v.iter().map(|&x| BigRational::from_integer(x.into())).collect()).unwrap();
            let (f, g) = (to(&a), to(&b));
            let combo: Vec<i64> = a.iter().zip(&b).map(|(x, y)| alpha * x + beta * y).collect();
            let h = to(&combo);
            for n in 0..4 {
                for k in 0..(8 - n) {
                    let lhs = iterated_difference(&h, n, k).unwrap();
                    let rhs = BigRational::from_integer(alpha.into()) * iterated_difference(&f, n, k).unwrap()
                        + BigRational::from_integer(beta.into()) * iterated_difference(&g, n, k).unwrap();
                    prop_assert_eq!(lhs, rhs);
                }
            }
        }

        #[test]
        fn mixtures_of_geometrics_are_completely_monotone(
            atoms in proptest::collection::vec((1u32..20, 0u32..=12), 1..4)
        ) {
            let atoms: Vec<_> = atoms
                .into_iter()
                .map(|(w, u)| (BigRational::new(w.into(), 7.into()), BigRational::new(u.into(), 12.into())))
                .collect();
            let f = RationalSeq::moments(&atoms, 12).unwrap();
            prop_assert!(hausdorff_check(&f, 8).passed);
        }
    }
}
