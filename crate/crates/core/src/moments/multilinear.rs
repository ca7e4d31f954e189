use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::{at_line, parse_rational};
use crate::error::{Error, Result};
use crate::graph::strip_comment;

pub const MAX_INTERPOLATION_VARS: usize = 20;
pub const MAX_GRID_VARS: usize = 8;
/// Largest number of grid points an extremum check will evaluate.
pub const MAX_GRID_POINTS: usize = 1 << 22;

/// Values of a function on `{0,1}^n`. Vertex `x` is stored at the bitmask
/// with bit `i` set iff `x_i = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexTable {
    pub n: usize,
    pub values: Vec<Option<BigRational>>,
}

impl VertexTable {
    pub fn new(n: usize) -> Result<Self> {
        if n > MAX_INTERPOLATION_VARS {
            return Err(Error::config(format!("at most {MAX_INTERPOLATION_VARS} variables")));
        }
        Ok(VertexTable {
            n,
            values: vec![None; 1 << n],
        })
    }

    pub fn from_values(n: usize, values: Vec<BigRational>) -> Result<Self> {
        let mut t = VertexTable::new(n)?;
        if values.len() != 1 << n {
            return Err(Error::config("need one value per vertex"));
        }
        t.values = values.into_iter().map(Some).collect();
        Ok(t)
    }

    pub fn get(&self, mask: usize) -> Result<&BigRational> {
        self.values
            .get(mask)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::config(format!("no value at vertex {}", bitstring(mask, self.n))))
    }

    /// Parse `bitstring value` lines; the first character of the bitstring
    /// is the first coordinate.
    pub fn parse(text: &str) -> Result<Self> {
        let mut table: Option<VertexTable> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(bits), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(n + 1, "expected `bitstring value`"));
            };
            let t = match &mut table {
                Some(t) => t,
                None => table.insert(VertexTable::new(bits.len()).map_err(|e| at_line(e, n + 1))?),
            };
            if bits.len() != t.n {
                return Err(Error::parse(n + 1, "bitstrings must all have the same length"));
            }
            let mut mask = 0usize;
            for (i, c) in bits.chars().enumerate() {
                match c {
                    '0' => {}
                    '1' => mask |= 1 << i,
                    _ => return Err(Error::parse(n + 1, format!("bad bitstring `{bits}`"))),
                }
            }
            if t.values[mask].is_some() {
                return Err(Error::parse(n + 1, format!("repeated vertex `{bits}`")));
            }
            t.values[mask] = Some(parse_rational(v).map_err(|e| at_line(e, n + 1))?);
        }
        table.ok_or_else(|| Error::parse(0, "empty vertex table"))
    }
}

pub fn bitstring(mask: usize, n: usize) -> String {
    (0..n).map(|i| if mask >> i & 1 == 1 { '1' } else { '0' }).collect()
}

/// `sum_S c_S prod_{i in S} x_i`, with `S` encoded as a bitmask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultilinearPoly {
    pub n: usize,
    pub coeffs: Vec<BigRational>,
}

impl MultilinearPoly {
    pub fn coeff(&self, mask: usize) -> &BigRational {
        &self.coeffs[mask]
    }

    pub fn eval(&self, x: &[BigRational]) -> BigRational {
        assert_eq!(x.len(), self.n, "point has the wrong dimension");
        // contract one axis at a time: c[S] + x_i c[S + i]
        let mut c = self.coeffs.clone();
        for (i, xi) in x.iter().enumerate().rev() {
            let half = 1 << i;
            let (lo, hi) = c.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a += xi * b;
            }
            c.truncate(half);
        }
        c.pop().unwrap_or_else(BigRational::zero)
    }

    pub fn eval_vertex(&self, mask: usize) -> BigRational {
        // sum of coefficients over subsets of the vertex's support
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(s, _)| s & !mask == 0)
            .fold(BigRational::zero(), |acc, (_, c)| acc + c)
    }

    pub fn add(&self, other: &MultilinearPoly) -> MultilinearPoly {
        assert_eq!(self.n, other.n);
        MultilinearPoly {
            n: self.n,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

/// The unique multilinear polynomial agreeing with `g` on `{0,1}^n`.
///
/// Built as a tensor product: along each axis the one-variable interpolant
/// of `(h(0), h(1))` is `h(0) + (h(1) - h(0)) x`, and applying that map to
/// every axis in turn turns vertex values into monomial coefficients.
pub fn interpolate(g: &VertexTable) -> Result<MultilinearPoly> {
    let mut c = (0..1usize << g.n)
        .map(|m| g.get(m).cloned())
        .collect::<Result<Vec<_>>>()?;
    for i in 0..g.n {
        let bit = 1 << i;
        for mask in 0..c.len() {
            if mask & bit != 0 {
                let low = c[mask ^ bit].clone();
                c[mask] -= low;
            }
        }
    }
    Ok(MultilinearPoly { n: g.n, coeffs: c })
}

/// `prod_{b in B} d/dx_b` of `p`: monomials missing some `b` vanish, the
/// rest lose the variables in `B`.
pub fn mixed_partial(p: &MultilinearPoly, b: usize) -> MultilinearPoly {
    let coeffs = (0..p.coeffs.len())
        .map(|s| {
            if s & b == 0 {
                p.coeffs[s | b].clone()
            } else {
                BigRational::zero()
            }
        })
        .collect();
    MultilinearPoly { n: p.n, coeffs }
}

/// Check that the `B`-mixed partial of the interpolant at vertex `x` equals
/// the alternating sum `sum_{U <= B} (-1)^{|B|-|U|} g(x with B set to U)`.
pub fn verify_derivative_identity(g: &VertexTable, b: usize, x: usize) -> Result<bool> {
    let full = (1usize << g.n) - 1;
    if b & !full != 0 || x & !full != 0 {
        return Err(Error::Usage("subset or vertex outside the cube".into()));
    }
    let p = interpolate(g)?;
    let lhs = mixed_partial(&p, b).eval_vertex(x & !b);
    let mut rhs = BigRational::zero();
    let base = x & !b;
    let mut u = b;
    loop {
        let v = g.get(base | u)?;
        if (b.count_ones() - u.count_ones()).is_multiple_of(2) {
            rhs += v;
        } else {
            rhs -= v;
        }
        if u == 0 {
            break;
        }
        u = (u - 1) & b;
    }
    Ok(lhs == rhs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremumReport {
    pub passed: bool,
    pub grid_points: usize,
    pub grid_min: String,
    pub grid_max: String,
    pub vertex_min: String,
    pub vertex_max: String,
}

/// Evaluate `p` on the grid `{0, 1/(m-1), ..., 1}^n` and confirm that its
/// range there stays within the range over the cube's vertices.
pub fn vertex_extremum_check(p: &MultilinearPoly, grid_per_axis: usize) -> Result<ExtremumReport> {
    if p.n > MAX_GRID_VARS {
        return Err(Error::Usage(format!("at most {MAX_GRID_VARS} variables")));
    }
    if grid_per_axis < 2 {
        return Err(Error::Usage("grid needs at least 2 points per axis".into()));
    }
    let total = grid_per_axis
        .checked_pow(p.n as u32)
        .filter(|&t| t <= MAX_GRID_POINTS)
        .ok_or_else(|| Error::Usage("grid too large".into()))?;
    let ticks: Vec<BigRational> = (0..grid_per_axis)
        .map(|j| BigRational::new(j.into(), (grid_per_axis - 1).into()))
        .collect();
    let vertices: Vec<BigRational> = (0..1usize << p.n).map(|m| p.eval_vertex(m)).collect();
    let vmin = vertices.iter().min().cloned().unwrap_or_else(BigRational::zero);
    let vmax = vertices.iter().max().cloned().unwrap_or_else(BigRational::zero);
    let (mut gmin, mut gmax): (Option<BigRational>, Option<BigRational>) = (None, None);
    let mut idx = vec![0usize; p.n];
    for _ in 0..total {
        let x: Vec<BigRational> = idx.iter().map(|&j| ticks[j].clone()).collect();
        let v = p.eval(&x);
        if gmin.as_ref().is_none_or(|m| v < *m) {
            gmin = Some(v.clone());
        }
        if gmax.as_ref().is_none_or(|m| v > *m) {
            gmax = Some(v);
        }
        for d in idx.iter_mut() {
            *d += 1;
            if *d < grid_per_axis {
                break;
            }
            *d = 0;
        }
    }
    let gmin = gmin.unwrap_or_else(|| p.coeffs[0].clone());
    let gmax = gmax.unwrap_or_else(|| p.coeffs[0].clone());
    Ok(ExtremumReport {
        passed: gmin >= vmin && gmax <= vmax,
        grid_points: total,
        grid_min: gmin.to_string(),
        grid_max: gmax.to_string(),
        vertex_min: vmin.to_string(),
        vertex_max: vmax.to_string(),
    })
}

/// Random table with integer values in `[-range, range]`.
pub fn random_table(n: usize, range: i64, rng: &mut impl rand::Rng) -> VertexTable {
    let values = (0..1usize << n)
        .map(|_| BigRational::from_integer(rng.gen_range(-range..=range).into()))
        .collect();
    VertexTable::from_values(n, values).expect("sizes match")
}

/// Random polynomial with rational coefficients `a/6`, `|a| <= 12`.
pub fn random_poly(n: usize, rng: &mut impl rand::Rng) -> MultilinearPoly {
    let coeffs = (0..1usize << n)
        .map(|_| BigRational::new(rng.gen_range(-12i64..=12).into(), 6.into()))
        .collect();
    MultilinearPoly { n, coeffs }
}

impl MultilinearPoly {
    pub fn constant(n: usize, c: BigRational) -> Self {
        let mut coeffs = vec![BigRational::zero(); 1 << n];
        coeffs[0] = c;
        MultilinearPoly { n, coeffs }
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, BigRational::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    fn xor() -> VertexTable {
        VertexTable::parse("00 0\n10 1\n01 1\n11 0\n").unwrap()
    }

    #[test]
    fn xor_interpolant() {
        let p = interpolate(&xor()).unwrap();
        // x + y - 2xy
        assert_eq!(p.coeffs, vec![q("0"), q("1"), q("1"), q("-2")]);
        for m in 0..4 {
            assert_eq!(&p.eval_vertex(m), xor().get(m).unwrap());
        }
        assert_eq!(p.eval(&[q("1/2"), q("1/2")]), q("1/2"));
    }

    #[test]
    fn xor_mixed_partial() {
        let p = interpolate(&xor()).unwrap();
        let d = mixed_partial(&p, 0b11);
        assert_eq!(d.coeffs, vec![q("-2"), q("0"), q("0"), q("0")]);
        assert!(verify_derivative_identity(&xor(), 0b11, 0).unwrap());
        assert_eq!(mixed_partial(&p, 0), p);
    }

    #[test]
    fn xor_extremum() {
        let p = interpolate(&xor()).unwrap();
        let r = vertex_extremum_check(&p, 11).unwrap();
        assert!(r.passed);
        assert_eq!(r.grid_points, 121);
        assert_eq!((r.vertex_min.as_str(), r.vertex_max.as_str()), ("0", "1"));
        let c = MultilinearPoly::constant(3, q("7/2"));
        assert!(vertex_extremum_check(&c, 5).unwrap().passed);
        assert!(vertex_extremum_check(&MultilinearPoly::one(9), 2).is_err());
    }

    #[test]
    fn missing_vertex() {
        let t = VertexTable::parse("00 0\n10 1\n01 1\n").unwrap();
        assert!(interpolate(&t).is_err());
        assert!(VertexTable::parse("00 0\n0 1\n").is_err());
        assert!(VertexTable::parse("02 0\n").is_err());
        assert!(VertexTable::parse("01 0\n01 1\n").is_err());
        assert!(VertexTable::parse("").is_err());
    }

    #[test]
    fn derivative_identity_on_random_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let n = rand::Rng::gen_range(&mut rng, 1..=6);
            let g = random_table(n, 9, &mut rng);
            let b = rand::Rng::gen_range(&mut rng, 0..1usize << n);
            let x = rand::Rng::gen_range(&mut rng, 0..1usize << n);
            assert!(verify_derivative_identity(&g, b, x).unwrap());
        }
    }

    #[test]
    fn random_cubic_polys_peak_at_vertices() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let p = random_poly(3, &mut rng);
            assert!(vertex_extremum_check(&p, 6).unwrap().passed);
        }
    }

    proptest! {
        #[test]
        fn interpolation_round_trips(vals in proptest::collection::vec(-20i64..20, 8)) {
            let g = VertexTable::from_values(3, vals.iter().map(|&v| BigRational::from_integer(v.into())).collect()).unwrap();
            let p = interpolate(&g).unwrap();
            for m in 0..8 {
                prop_assert_eq!(&p.eval_vertex(m), g.get(m).unwrap());
                let x: Vec<BigRational> = (0..3).map(|i| BigRational::from_integer(((m >> i) & 1).into())).collect();
                prop_assert_eq!(&p.eval(&x), g.get(m).unwrap());
            }
        }

        #[test]
        fn interpolation_is_linear(
            a in proptest::collection::vec(-20i64..20, 16),
            b in proptest::collection::vec(-20i64..20, 16),
        ) {
            let t = |v: &[i64]| VertexTable::from_values(4, v.iter().map(|&x| BigRational::from_integer(x.into())).collect()).unwrap();
            let sum: Vec<i64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let lhs = interpolate(&t(&a)).unwrap().add(&interpolate(&t(&b)).unwrap());
            prop_assert_eq!(lhs, interpolate(&t(&sum)).unwrap());
        }
    }
}
