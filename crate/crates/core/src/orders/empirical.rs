//! Order checks on samples, with a bootstrap band that holds simultaneously
//! over all test points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{t_grid, Margin, OrderKind, OrderReport, OrderVerdict, TestPoint, TOLERANCE};
use crate::error::{Error, Result};
use crate::stream::derive_seed;

pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalConfig {
    pub t_grid: usize,
    pub bootstrap_reps: usize,
    /// Coverage of the simultaneous band.
    pub level: f64,
    pub seed: u64,
}

impl Default for EmpiricalConfig {
    fn default() -> Self {
        EmpiricalConfig {
            t_grid: super::DEFAULT_T_GRID,
            bootstrap_reps: 2000,
            level: 0.95,
            seed: 0,
        }
    }
}

/// Distinct values of the pooled samples and each sample's index into them.
struct Support {
    values: Vec<u64>,
    ix: Vec<usize>,
    iy: Vec<usize>,
}

impl Support {
    fn new(x: &[u64], y: &[u64]) -> Self {
        let mut values: Vec<u64> = x.iter().chain(y).copied().collect();
        values.sort_unstable();
        values.dedup();
        let find = |s: &[u64]| {
            s.iter()
                .map(|v| values.binary_search(v).expect("value is pooled"))
                .collect()
        };
        let (ix, iy) = (find(x), find(y));
        Support { values, ix, iy }
    }

    fn weights(&self, idx: &[usize]) -> Vec<f64> {
        let mut w = vec![0.0; self.values.len()];
        let unit = 1.0 / idx.len() as f64;
        for &i in idx {
            w[i] += unit;
        }
        w
    }

    fn resample(&self, idx: &[usize], rng: &mut impl Rng) -> Vec<f64> {
        let mut w = vec![0.0; self.values.len()];
        let unit = 1.0 / idx.len() as f64;
        for _ in 0..idx.len() {
            w[idx[rng.gen_range(0..idx.len())]] += unit;
        }
        w
    }
}

/// Test points and functionals for one order on a given support.
struct Functionals<'a> {
    kind: OrderKind,
    values: &'a [u64],
    grid: Vec<f64>,
    /// `t^v` for each grid point (rows) and support value (columns).
    powers: Vec<Vec<f64>>,
}

impl<'a> Functionals<'a> {
    fn new(kind: OrderKind, values: &'a [u64], grid_size: usize) -> Self {
        let grid = if kind == OrderKind::Pgf {
            t_grid(grid_size)
        } else {
            Vec::new()
        };
        let powers = grid
            .iter()
            .map(|&t| values.iter().map(|&v| t.powf(v as f64)).collect())
            .collect();
        Functionals {
            kind,
            values,
            grid,
            powers,
        }
    }

    fn points(&self) -> Vec<TestPoint> {
        match self.kind {
            OrderKind::St => self.values.iter().map(|&v| TestPoint::Survival(v)).collect(),
            OrderKind::Icv => self
                .values
                .iter()
                .filter(|&&v| v > 0)
                .map(|&v| TestPoint::Min(v))
                .collect(),
            OrderKind::Pgf => self
                .grid
                .iter()
                .map(|&t| TestPoint::Pgf(t))
                .chain(std::iter::once(TestPoint::Zero))
                .collect(),
        }
    }

    /// Functional values for weights `w` over the support.
    fn eval(&self, w: &[f64]) -> Vec<f64> {
        match self.kind {
            OrderKind::St => {
                // P[X > v_i] as a suffix sum
                let mut out = vec![0.0; w.len()];
                let mut acc = 0.0;
                for i in (0..w.len()).rev() {
                    out[i] = acc;
                    acc += w[i];
                }
                out
            }
            OrderKind::Icv => {
                // E min(X, v_i) = sum_{v_j < v_i} w_j v_j + v_i P[X >= v_i]
                let mut out = Vec::with_capacity(w.len());
                let mut below = 0.0;
                let mut mass_below = 0.0;
                for (i, &v) in self.values.iter().enumerate() {
                    if v > 0 {
                        out.push(below + v as f64 * (1.0 - mass_below));
                    }
                    below += w[i] * v as f64;
                    mass_below += w[i];
                }
                out
            }
            OrderKind::Pgf => {
                let mut out: Vec<f64> = self
                    .powers
                    .iter()
                    .map(|row| row.iter().zip(w).map(|(p, q)| p * q).sum())
                    .collect();
                let zero = if self.values.first() == Some(&0) { w[0] } else { 0.0 };
                out.push(zero);
                out
            }
        }
    }

    fn margins(&self, wx: &[f64], wy: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (fx, fy) = (self.eval(wx), self.eval(wy));
        let m = fx
            .iter()
            .zip(&fy)
            .map(|(a, b)| match self.kind {
                OrderKind::Pgf => a - b,
                _ => b - a,
            })
            .collect();
        (fx, fy, m)
    }
}

fn quantile(sorted: &[f64], level: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = (level * (sorted.len() - 1) as f64).ceil() as usize;
    sorted[pos.min(sorted.len() - 1)]
}

/// Is the law of `x` below that of `y`? Plug-in margins get a simultaneous
/// band from a studentized max-deviation bootstrap. `Violated` means the
/// band lies below zero at some point, `Dominates` that it stays above zero
/// everywhere.
pub fn check_empirical(
    kind: OrderKind,
    samples_x: &[u64],
    samples_y: &[u64],
    cfg: &EmpiricalConfig,
) -> Result<OrderReport> {
    if samples_x.len() < MIN_SAMPLES || samples_y.len() < MIN_SAMPLES {
        return Err(Error::Usage(format!(
            "empirical order checks need at least {MIN_SAMPLES} samples per side"
        )));
    }
    if !(cfg.level > 0.0 && cfg.level < 1.0) || cfg.bootstrap_reps == 0 {
        return Err(Error::Usage("level must be in (0,1) and reps positive".into()));
    }
    let support = Support::new(samples_x, samples_y);
    let funcs = Functionals::new(kind, &support.values, cfg.t_grid);
    let points = funcs.points();
    let (fx, fy, hat) = funcs.margins(&support.weights(&support.ix), &support.weights(&support.iy));

    let boot: Vec<Vec<f64>> = (0..cfg.bootstrap_reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, r));
            let wx = support.resample(&support.ix, &mut rng);
            let wy = support.resample(&support.iy, &mut rng);
            funcs.margins(&wx, &wy).2
        })
        .collect();

    let n = hat.len();
    let reps = boot.len() as f64;
    let se: Vec<f64> = (0..n)
        .map(|j| {
            let mean = boot.iter().map(|b| b[j]).sum::<f64>() / reps;
            let var = boot.iter().map(|b| (b[j] - mean).powi(2)).sum::<f64>() / (reps - 1.0).max(1.0);
            var.sqrt()
        })
        .collect();
    let mut max_dev: Vec<f64> = boot
        .iter()
        .map(|b| {
            (0..n)
                .filter(|&j| se[j] > 0.0)
                .map(|j| (b[j] - hat[j]).abs() / se[j])
                .fold(0.0, f64::max)
        })
        .collect();
    max_dev.sort_by(f64::total_cmp);
    let q = quantile(&max_dev, cfg.level);

    let curve: Vec<Margin> = (0..n)
        .map(|j| Margin {
            point: points[j],
            x: fx[j],
            y: fy[j],
            margin: hat[j],
            band: Some((hat[j] - q * se[j], hat[j] + q * se[j])),
        })
        .collect();
    let band = |m: &Margin| m.band.expect("empirical margins carry bands");
    let worst_upper = curve
        .iter()
        .min_by(|a, b| band(a).1.total_cmp(&band(b).1))
        .copied();
    let min_lower = curve.iter().map(|m| band(m).0).fold(f64::INFINITY, f64::min);
    let verdict = match worst_upper {
        Some(w) if band(&w).1 < -TOLERANCE => OrderVerdict::Violated { witness: w },
        _ if min_lower >= -TOLERANCE => OrderVerdict::Dominates,
        _ => OrderVerdict::Inconclusive {
            min_margin: min_lower,
            level: cfg.level,
        },
    };
    Ok(OrderReport {
        kind,
        verdict,
        grid_certified: kind == OrderKind::Pgf,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init_config::Pmf;

    fn draw(p: &Pmf, n: usize, rng: &mut impl Rng) -> Vec<u64> {
        (0..n).map(|_| p.sample(rng.gen()).unwrap()).collect()
    }

    fn cfg(seed: u64) -> EmpiricalConfig {
        EmpiricalConfig {
            t_grid: 64,
            bootstrap_reps: 400,
            level: 0.95,
            seed,
        }
    }

    #[test]
    fn separated_point_masses() {
        let (x, y) = (vec![1u64; 200], vec![2u64; 200]);
        for kind in [OrderKind::St, OrderKind::Icv, OrderKind::Pgf] {
            let r = check_empirical(kind, &x, &y, &cfg(1)).unwrap();
            assert!(r.verdict.is_dominates(), "{kind:?}: {:?}", r.verdict);
            let r = check_empirical(kind, &y, &x, &cfg(1)).unwrap();
            assert!(r.verdict.is_violated(), "{kind:?}");
        }
    }

    #[test]
    fn too_few_samples() {
        assert!(check_empirical(OrderKind::St, &[1; 99], &[1; 200], &cfg(0)).is_err());
    }

    #[test]
    fn plug_in_matches_exact_functionals() {
        let x = [0u64, 0, 1, 3, 3, 3, 7];
        let y = [2u64, 5, 5];
        let s = Support::new(&x, &y);
        let wx = s.weights(&s.ix);
        let px = Pmf::from_map(
            &[(0u64, 2.0 / 7.0), (1, 1.0 / 7.0), (3, 3.0 / 7.0), (7, 1.0 / 7.0)].into(),
            0.0,
        )
        .unwrap();
        let icv = Functionals::new(OrderKind::Icv, &s.values, 8).eval(&wx);
        let ks: Vec<u64> = s.values.iter().copied().filter(|&v| v > 0).collect();
        for (v, k) in icv.iter().zip(ks) {
            assert!((v - px.expected_min(k)).abs() < 1e-12);
        }
        let st = Functionals::new(OrderKind::St, &s.values, 8).eval(&wx);
        for (v, &k) in st.iter().zip(&s.values) {
            assert!((v - px.survival(k)).abs() < 1e-12);
        }
        let f = Functionals::new(OrderKind::Pgf, &s.values, 8);
        let g = f.eval(&wx);
        for (v, t) in g.iter().zip(&f.grid) {
            assert!((v - px.pgf(*t)).abs() < 1e-12);
        }
        assert!((g.last().unwrap() - px.mass(0)).abs() < 1e-12);
    }

    #[test]
    fn null_calibration() {
        // same law on both sides: false violations are rare
        let p = Pmf::poisson(2.0, 1e-12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let trials = 60;
        let mut violated = 0;
        for i in 0..trials {
            let (x, y) = (draw(&p, 300, &mut rng), draw(&p, 300, &mut rng));
            let c = EmpiricalConfig {
                level: 0.99,
                ..cfg(i)
            };
            if check_empirical(OrderKind::Pgf, &x, &y, &c).unwrap().verdict.is_violated() {
                violated += 1;
            }
        }
        assert!(violated as f64 <= 0.05 * trials as f64, "{violated}");
    }

    #[test]
    fn reproducible() {
        let p = Pmf::poisson(1.0, 1e-12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (x, y) = (draw(&p, 150, &mut rng), draw(&p, 150, &mut rng));
        let a = check_empirical(OrderKind::Icv, &x, &y, &cfg(5)).unwrap();
        let b = check_empirical(OrderKind::Icv, &x, &y, &cfg(5)).unwrap();
        assert_eq!(a, b);
    }
}
