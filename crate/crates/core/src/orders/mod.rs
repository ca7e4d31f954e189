//! Stochastic orders on extended nonnegative integers.
//!
//! Every check asks whether `x` is below `y`. Margins are signed so that a
//! nonnegative margin means the required inequality holds at that point:
//!
//! * `St`: `P[Y > k] - P[X > k]`
//! * `Icv`: `E min(Y, k) - E min(X, k)`, plus `P[Y = inf] - P[X = inf]`
//! * `Pgf`: `E t^X - E t^Y`, plus the `t -> 0` and `t -> 1` limits

mod empirical;

use rand::Rng;
use serde::Serialize;

pub use empirical::{check_empirical, EmpiricalConfig, MIN_SAMPLES};

use crate::error::{Error, Result};
use crate::init_config::Pmf;

/// Slack allowed in exact comparisons of double-precision pmfs.
pub const TOLERANCE: f64 = 1e-9;
pub const DEFAULT_T_GRID: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderKind {
    St,
    Icv,
    Pgf,
}

impl std::str::FromStr for OrderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "st" => Ok(OrderKind::St),
            "icv" => Ok(OrderKind::Icv),
            "pgf" => Ok(OrderKind::Pgf),
            other => Err(Error::Usage(format!("unknown order `{other}`"))),
        }
    }
}

/// Where a test functional was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "at", content = "value", rename_all = "snake_case")]
pub enum TestPoint {
    /// Survival `P[. > k]`.
    Survival(u64),
    /// `E min(., k)`.
    Min(u64),
    /// Generating function at `t`.
    Pgf(f64),
    /// Zero probability of the `p`-thinning.
    Thinning(f64),
    /// Mass at infinity.
    Infinity,
    /// `P[. = 0]`, the `t -> 0` limit of the generating function.
    Zero,
    /// `P[. < inf]`, the `t -> 1` limit of the generating function.
    Finite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margin {
    pub point: TestPoint,
    /// Value of the test functional on `x`.
    pub x: f64,
    pub y: f64,
    pub margin: f64,
    /// Simultaneous confidence band for empirical checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<(f64, f64)>,
}

impl Margin {
    fn new(point: TestPoint, x: f64, y: f64, margin: f64) -> Self {
        Margin {
            point,
            x,
            y,
            margin,
            band: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum OrderVerdict {
    Dominates,
    Violated { witness: Margin },
    Inconclusive { min_margin: f64, level: f64 },
}

impl OrderVerdict {
    pub fn is_dominates(&self) -> bool {
        matches!(self, OrderVerdict::Dominates)
    }

    pub fn is_violated(&self) -> bool {
        matches!(self, OrderVerdict::Violated { .. })
    }
}

/// A verdict with the full margin curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderReport {
    pub kind: OrderKind,
    #[serde(flatten)]
    pub verdict: OrderVerdict,
    /// True when a `Pgf` verdict rests on a finite grid of `t` values.
    pub grid_certified: bool,
    pub curve: Vec<Margin>,
}

/// Interior grid `i / (n + 1)` for `i = 1..=n`.
pub fn t_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

fn exact_verdict(kind: OrderKind, curve: Vec<Margin>) -> OrderReport {
    let worst = curve
        .iter()
        .copied()
        .min_by(|a, b| a.margin.total_cmp(&b.margin));
    let verdict = match worst {
        Some(w) if w.margin < -TOLERANCE => OrderVerdict::Violated { witness: w },
        _ => OrderVerdict::Dominates,
    };
    OrderReport {
        kind,
        verdict,
        grid_certified: kind == OrderKind::Pgf,
        curve,
    }
}

/// Is `x` below `y` in the given order?
pub fn check_exact(kind: OrderKind, x: &Pmf, y: &Pmf, t_grid_size: usize) -> OrderReport {
    exact_verdict(kind, exact_curve(kind, x, y, t_grid_size))
}

pub fn exact_curve(kind: OrderKind, x: &Pmf, y: &Pmf, t_grid_size: usize) -> Vec<Margin> {
    let top = x.max_support().max(y.max_support());
    match kind {
        OrderKind::St => {
            let mut curve: Vec<Margin> = (0..=top)
                .map(|k| {
                    let (sx, sy) = (x.survival(k), y.survival(k));
                    Margin::new(TestPoint::Survival(k), sx, sy, sy - sx)
                })
                .collect();
            let (ix, iy) = (x.at_infinity(), y.at_infinity());
            curve.push(Margin::new(TestPoint::Infinity, ix, iy, iy - ix));
            curve
        }
        OrderKind::Icv => {
            // min-functionals are piecewise linear in k between support points,
            // so k up to the top of the support suffices
            let mut curve: Vec<Margin> = (1..=top.max(1))
                .map(|k| {
                    let (mx, my) = (x.expected_min(k), y.expected_min(k));
                    Margin::new(TestPoint::Min(k), mx, my, my - mx)
                })
                .collect();
            let (ix, iy) = (x.at_infinity(), y.at_infinity());
            curve.push(Margin::new(TestPoint::Infinity, ix, iy, iy - ix));
            curve
        }
        OrderKind::Pgf => {
            let mut curve: Vec<Margin> = t_grid(t_grid_size)
                .into_iter()
                .map(|t| {
                    let (gx, gy) = (x.pgf(t), y.pgf(t));
                    Margin::new(TestPoint::Pgf(t), gx, gy, gx - gy)
                })
                .collect();
            let (zx, zy) = (x.mass(0), y.mass(0));
            curve.push(Margin::new(TestPoint::Zero, zx, zy, zx - zy));
            let (fx, fy) = (1.0 - x.at_infinity(), 1.0 - y.at_infinity());
            curve.push(Margin::new(TestPoint::Finite, fx, fy, fx - fy));
            curve
        }
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..=n {
        acc += (i as f64).ln();
        out.push(acc);
    }
    out
}

/// The `p`-thinning: `Bin(N, p)` given `N`. Infinitely many frogs thin to
/// infinitely many when `p > 0` and to none when `p = 0`.
pub fn thin(x: &Pmf, p: f64) -> Result<Pmf> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::config("thinning probability must be in [0,1]"));
    }
    if p == 0.0 {
        return Ok(Pmf::point(0));
    }
    if p == 1.0 {
        return Ok(x.clone());
    }
    let n = x.max_support() as usize;
    let lf = ln_factorials(n);
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut out = vec![0.0; n + 1];
    for (k, &w) in x.masses().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (j, o) in out.iter_mut().enumerate().take(k + 1) {
            let ln_b = lf[k] - lf[j] - lf[k - j] + j as f64 * lp + (k - j) as f64 * lq;
            *o += w * ln_b.exp();
        }
    }
    Pmf::normalized(out, x.at_infinity())
}

/// Pgf check through thinnings: `P[thin_p X = 0] >= P[thin_p Y = 0]` for
/// each `p`, plus the `p = 1` point and the `p -> 0` limit `P[. < inf]`.
/// Since `P[thin_p N = 0] = G_N(1 - p)`, this agrees with the direct check.
pub fn pgf_via_thinning(x: &Pmf, y: &Pmf, p_grid: &[f64]) -> Result<OrderReport> {
    let mut curve = Vec::with_capacity(p_grid.len() + 2);
    for &p in p_grid {
        let (zx, zy) = (thin(x, p)?.mass(0), thin(y, p)?.mass(0));
        curve.push(Margin::new(TestPoint::Thinning(p), zx, zy, zx - zy));
    }
    let (zx, zy) = (x.mass(0), y.mass(0));
    curve.push(Margin::new(TestPoint::Zero, zx, zy, zx - zy));
    let (fx, fy) = (1.0 - x.at_infinity(), 1.0 - y.at_infinity());
    curve.push(Margin::new(TestPoint::Finite, fx, fy, fx - fy));
    Ok(exact_verdict(OrderKind::Pgf, curve))
}

/// The thinning grid matching [`t_grid`]: `p = 1 - t`.
pub fn p_grid(n: usize) -> Vec<f64> {
    t_grid(n).into_iter().map(|t| 1.0 - t).collect()
}

fn finite_mean(x: &Pmf) -> Result<f64> {
    x.mean()
        .ok_or_else(|| Error::config("dominator needs a finite mean (no mass at infinity)"))
}

/// The least integer at or above the mean, as a point mass.
pub fn icv_const_dominator(x: &Pmf) -> Result<Pmf> {
    let m = finite_mean(x)?;
    Ok(Pmf::point((m - 1e-12).ceil().max(0.0) as u64))
}

/// Two-point law on `{floor(m), floor(m) + 1}` with mean `m`.
pub fn icv_two_point_dominator(x: &Pmf) -> Result<Pmf> {
    let m = finite_mean(x)?;
    let k = m.floor();
    let q = (m - k).clamp(0.0, 1.0);
    Pmf::two_point(k as u64, q)
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub st: bool,
    pub icv: bool,
    pub pgf: bool,
    /// St implies Icv implies Pgf on this pair.
    pub consistent: bool,
}

pub fn implication_chain_check(x: &Pmf, y: &Pmf) -> ChainReport {
    let st = check_exact(OrderKind::St, x, y, DEFAULT_T_GRID).verdict.is_dominates();
    let icv = check_exact(OrderKind::Icv, x, y, DEFAULT_T_GRID).verdict.is_dominates();
    let pgf = check_exact(OrderKind::Pgf, x, y, DEFAULT_T_GRID).verdict.is_dominates();
    ChainReport {
        st,
        icv,
        pgf,
        consistent: (!st || icv) && (!icv || pgf),
    }
}

/// A random pmf on `{0..=max_support}`, with an atom at infinity of weight
/// up to `max_inf`.
pub fn random_pmf(rng: &mut impl Rng, max_support: u64, max_inf: f64) -> Pmf {
    let len = rng.gen_range(1..=max_support as usize + 1);
    let mut w: Vec<f64> = (0..len)
        .map(|_| if rng.gen_bool(0.25) { 0.0 } else { rng.gen::<f64>() })
        .collect();
    if w.iter().all(|&v| v == 0.0) {
        w[len - 1] = 1.0;
    }
    let inf = if max_inf > 0.0 && rng.gen_bool(0.3) {
        rng.gen::<f64>() * max_inf
    } else {
        0.0
    };
    let total: f64 = w.iter().sum();
    let scale = (1.0 - inf) / total;
    Pmf::normalized(w.iter().map(|v| v * scale).collect(), inf).expect("positive weights")
}

/// A law above `x` in the standard order, built by moving random fractions
/// of mass upward (possibly to infinity).
pub fn upward_shift(x: &Pmf, rng: &mut impl Rng, max_jump: u64) -> Pmf {
    let mut mass = x.masses().to_vec();
    let mut inf = x.at_infinity();
    let n = mass.len();
    for k in (0..n).rev() {
        if mass[k] == 0.0 || !rng.gen_bool(0.5) {
            continue;
        }
        let moved = mass[k] * rng.gen::<f64>();
        mass[k] -= moved;
        if rng.gen_bool(0.05) {
            inf += moved;
        } else {
            let to = k + rng.gen_range(1..=max_jump.max(1) as usize);
            if to >= mass.len() {
                mass.resize(to + 1, 0.0);
            }
            mass[to] += moved;
        }
    }
    Pmf::normalized(mass, inf).expect("mass is conserved")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn exact(kind: OrderKind, x: &Pmf, y: &Pmf) -> OrderVerdict {
        check_exact(kind, x, y, DEFAULT_T_GRID).verdict
    }

    #[test]
    fn point_masses() {
        let (p1, p2) = (Pmf::point(1), Pmf::point(2));
        for k in [OrderKind::St, OrderKind::Icv, OrderKind::Pgf] {
            assert!(exact(k, &p1, &p2).is_dominates(), "{k:?}");
        }
        assert!(exact(OrderKind::St, &p2, &p1).is_violated());
    }

    #[test]
    fn pgf_witness_near_half() {
        match exact(OrderKind::Pgf, &Pmf::point(2), &Pmf::point(1)) {
            OrderVerdict::Violated { witness } => {
                let TestPoint::Pgf(t) = witness.point else {
                    panic!("{witness:?}")
                };
                assert!((t - 0.5).abs() < 2e-3, "{t}");
                assert!((witness.margin + 0.25).abs() < 1e-5);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn poisson_below_its_mean_in_icv() {
        let x = Pmf::poisson(1.0, 1e-12).unwrap();
        assert!(exact(OrderKind::Icv, &x, &Pmf::point(1)).is_dominates());
        assert_eq!(icv_const_dominator(&x).unwrap(), Pmf::point(1));
        // not comparable in the standard order
        assert!(exact(OrderKind::St, &x, &Pmf::point(1)).is_violated());
    }

    #[test]
    fn two_point_dominator_of_bernoulli_is_itself() {
        let b = Pmf::bernoulli(0.3).unwrap();
        let d = icv_two_point_dominator(&b).unwrap();
        assert!((d.mass(0) - 0.7).abs() < 1e-15 && (d.mass(1) - 0.3).abs() < 1e-15);
        let with_inf = Pmf::new(vec![0.5], 0.5).unwrap();
        assert!(icv_two_point_dominator(&with_inf).is_err());
        assert!(icv_const_dominator(&with_inf).is_err());
    }

    #[test]
    fn infinity_atoms() {
        let x = Pmf::new(vec![0.5, 0.5], 0.0).unwrap();
        let y = Pmf::new(vec![0.5, 0.25], 0.25).unwrap();
        assert!(exact(OrderKind::St, &x, &y).is_dominates());
        assert!(exact(OrderKind::Pgf, &x, &y).is_dominates());
        let r = check_exact(OrderKind::Icv, &y, &x, 16);
        match r.verdict {
            OrderVerdict::Violated { witness } => assert_eq!(witness.point, TestPoint::Infinity),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn thinning_basics() {
        let b = thin(&Pmf::point(1), 0.5).unwrap();
        assert!((b.mass(0) - 0.5).abs() < 1e-15 && (b.mass(1) - 0.5).abs() < 1e-15);
        let x = Pmf::new(vec![0.2, 0.3, 0.5], 0.0).unwrap();
        assert_eq!(thin(&x, 1.0).unwrap(), x);
        assert_eq!(thin(&x, 0.0).unwrap(), Pmf::point(0));
        let inf = Pmf::new(vec![0.5], 0.5).unwrap();
        assert_eq!(thin(&inf, 0.3).unwrap().at_infinity(), 0.5);
        assert_eq!(thin(&inf, 0.0).unwrap(), Pmf::point(0));
        assert!(thin(&x, 1.5).is_err());
    }

    #[test]
    fn thinned_poisson_is_poisson() {
        let x = Pmf::poisson(3.0, 1e-12).unwrap();
        let t = thin(&x, 0.4).unwrap();
        let direct = Pmf::poisson(1.2, 1e-12).unwrap();
        for k in 0..20 {
            assert!((t.mass(k) - direct.mass(k)).abs() < 1e-10, "{k}");
        }
    }

    #[test]
    fn thinning_matches_pgf_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 64;
        for _ in 0..50 {
            let x = random_pmf(&mut rng, 8, 0.3);
            let y = random_pmf(&mut rng, 8, 0.3);
            let direct = check_exact(OrderKind::Pgf, &x, &y, n);
            let thinned = pgf_via_thinning(&x, &y, &p_grid(n)).unwrap();
            assert_eq!(direct.verdict.is_dominates(), thinned.verdict.is_dominates());
            for (a, b) in direct.curve.iter().zip(&thinned.curve) {
                assert!((a.margin - b.margin).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn p_zero_passes() {
        let r = pgf_via_thinning(&Pmf::point(5), &Pmf::point(0), &[0.0]).unwrap();
        assert_eq!(r.curve[0].margin, 0.0);
    }

    #[test]
    fn icv_min_functionals_are_complete() {
        // every bounded increasing concave integer function ranks icv pairs
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut tested = 0;
        while tested < 1000 {
            let x = random_pmf(&mut rng, 8, 0.0);
            let y = icv_two_point_dominator(&x).unwrap();
            let y = if rng.gen_bool(0.5) { upward_shift(&y, &mut rng, 2) } else { y };
            if !exact(OrderKind::Icv, &x, &y).is_dominates() {
                continue;
            }
            let top = x.max_support().max(y.max_support()) as usize;
            let mut incr: Vec<f64> = (0..top).map(|_| rng.gen::<f64>()).collect();
            incr.sort_by(|a, b| b.total_cmp(a));
            let phi = |k: usize| incr.iter().take(k).sum::<f64>();
            // phi is flat beyond the support, so phi(inf) = phi(top)
            let e = |p: &Pmf| {
                let finite: f64 = p.masses().iter().enumerate().map(|(k, m)| m * phi(k)).sum();
                finite + p.at_infinity() * phi(top)
            };
            assert!(e(&x) <= e(&y) + 1e-9);
            tested += 1;
        }
    }

    proptest! {
        #[test]
        fn chain_holds_on_st_pairs(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_pmf(&mut rng, 6, 0.2);
            let y = upward_shift(&x, &mut rng, 3);
            let c = implication_chain_check(&x, &y);
            prop_assert!(c.st);
            prop_assert!(c.consistent);
        }

        #[test]
        fn two_point_dominates_in_icv(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_pmf(&mut rng, 10, 0.0);
            prop_assert!(exact(OrderKind::Icv, &x, &icv_two_point_dominator(&x).unwrap()).is_dominates());
            prop_assert!(exact(OrderKind::Icv, &x, &icv_const_dominator(&x).unwrap()).is_dominates());
            let m = x.mean().unwrap();
            prop_assert!((icv_two_point_dominator(&x).unwrap().mean().unwrap() - m).abs() < 1e-9);
        }

        #[test]
        fn pgf_dominance_implies_endpoint_facts(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_pmf(&mut rng, 5, 0.3);
            let y = random_pmf(&mut rng, 5, 0.3);
            if exact(OrderKind::Pgf, &x, &y).is_dominates() {
                prop_assert!(x.at_infinity() <= y.at_infinity() + TOLERANCE);
                prop_assert!(x.mass(0) >= y.mass(0) - TOLERANCE);
            }
        }

        #[test]
        fn pgf_is_increasing_in_t(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_pmf(&mut rng, 12, 0.3);
            let g: Vec<f64> = t_grid(64).into_iter().map(|t| x.pgf(t)).collect();
            prop_assert!(g.windows(2).all(|w| w[0] <= w[1] + 1e-15));
        }

        #[test]
        fn thinning_conserves_mass(seed in any::<u64>(), p in 0.0f64..=1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_pmf(&mut rng, 20, 0.3);
            let t = thin(&x, p).unwrap();
            prop_assert!((t.total_mass() - 1.0).abs() < 1e-12);
            // thinning never adds frogs
            prop_assert!(exact(OrderKind::St, &t, &x).is_dominates());
        }
    }
}
