//! Fixed-seed verification suites for the library modules.

use std::str::FromStr;

use frog_core::moments::{
    hausdorff_check, multilinear, vertex_extremum_check, verify_derivative_identity, RationalSeq,
};
use frog_core::operator_a::{
    apply_brute_force, apply_exact, apply_mc, brute_force_law, constructed_pairs, empirical_pmf,
    exact_law, monotonicity_test, total_variation, DEFAULT_SUPPORT_CAP,
};
use frog_core::orders::{
    check_exact, icv_const_dominator, icv_two_point_dominator, implication_chain_check, p_grid,
    pgf_via_thinning, random_pmf, upward_shift, OrderKind, DEFAULT_T_GRID, TOLERANCE,
};
use frog_core::statistics::{verify_builder_properties, verify_statistic_class, SmallModelGenerator};
use frog_core::{Pmf, StatisticFamily};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::{HarnessError, Result};

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Statistics,
    Orders,
    OperatorA,
    Moments,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Statistics, Suite::Orders, Suite::OperatorA, Suite::Moments];
}

impl FromStr for Suite {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "statistics" => Ok(Suite::Statistics),
            "orders" => Ok(Suite::Orders),
            "operator_a" => Ok(Suite::OperatorA),
            "moments" => Ok(Suite::Moments),
            other => Err(HarnessError::Config(format!(
                "unknown suite `{other}`; expected statistics, orders, operator_a or moments"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckCount {
    pub name: String,
    pub passed: u64,
    pub total: u64,
}

impl CheckCount {
    fn ok(&self) -> bool {
        self.passed == self.total
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckCount>,
    pub details: serde_json::Value,
}

impl SuiteReport {
    fn new(suite: Suite, seed: u64, checks: Vec<CheckCount>, details: serde_json::Value) -> Self {
        SuiteReport {
            suite,
            seed,
            passed: checks.iter().all(CheckCount::ok),
            checks,
            details,
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckCount> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn count(name: &str, passed: u64, total: u64) -> CheckCount {
    CheckCount {
        name: name.to_string(),
        passed,
        total,
    }
}

/// Sizes of the randomized parts of each suite.
#[derive(Debug, Clone, Copy)]
pub struct Scale {
    pub statistic_instances: usize,
    pub builder_instances: usize,
    pub order_pmfs: usize,
    pub chain_pairs: usize,
    pub thinning_pairs: usize,
    pub operator_pairs: usize,
    pub mc_reps: usize,
    pub moment_sequences: usize,
    pub derivative_cases: usize,
    pub extremum_cases: usize,
}

impl Default for Scale {
    fn default() -> Self {
        Scale {
            statistic_instances: 500,
            builder_instances: 200,
            order_pmfs: 200,
            chain_pairs: 500,
            thinning_pairs: 100,
            operator_pairs: 100,
            mc_reps: 100_000,
            moment_sequences: 50,
            derivative_cases: 200,
            extremum_cases: 100,
        }
    }
}

pub fn run_suite(suite: Suite, seed: u64, scale: &Scale) -> Result<SuiteReport> {
    match suite {
        Suite::Statistics => statistics(seed, scale),
        Suite::Orders => orders(seed, scale),
        Suite::OperatorA => operator_a(seed, scale),
        Suite::Moments => moments(seed, scale),
    }
}

fn statistics(seed: u64, scale: &Scale) -> Result<SuiteReport> {
    let gen = SmallModelGenerator::default();
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    for family in StatisticFamily::ALL_PGF {
        let r = verify_statistic_class(family, &gen, 3, scale.statistic_instances, seed)?;
        checks.push(count(
            &format!("sign/{}", r.statistic),
            r.checks - r.failure_count,
            r.checks,
        ));
        reports.push(r);
    }
    let builder = verify_builder_properties(scale.builder_instances, seed)?;
    let builder_total =
        builder.max_decomposition_checks + builder.sum_decomposition_checks + builder.linearity_checks;
    let builder_failed = builder.failures.len() as u64;
    checks.push(count("builder_properties", builder_total - builder_failed.min(builder_total), builder_total));
    // negative control: the square of the root visit count is not in the class
    let squared = verify_statistic_class(
        StatisticFamily::RootVisitsSquared,
        &gen,
        2,
        scale.statistic_instances.min(100),
        seed,
    )?;
    checks.push(count("control/squared_is_rejected", u64::from(!squared.passed), 1));
    Ok(SuiteReport::new(
        Suite::Statistics,
        seed,
        checks,
        json!({ "classes": reports, "builder": builder, "control_failures": squared.failure_count }),
    ))
}

fn orders(seed: u64, scale: &Scale) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut maximal_ok = 0;
    let mut first_bad = None;
    for i in 0..scale.order_pmfs {
        let x = random_pmf(&mut rng, 8, 0.0);
        let c = icv_const_dominator(&x)?;
        let d = icv_two_point_dominator(&x)?;
        let ok = check_exact(OrderKind::Icv, &x, &c, DEFAULT_T_GRID).verdict.is_dominates()
            && check_exact(OrderKind::Icv, &x, &d, DEFAULT_T_GRID).verdict.is_dominates()
            && (x.mean().unwrap_or(f64::NAN) - d.mean().unwrap_or(f64::NAN)).abs() < TOLERANCE;
        if ok {
            maximal_ok += 1;
        } else if first_bad.is_none() {
            first_bad = Some(format!("pmf #{i}: {x}"));
        }
    }
    let mut chain_ok = 0;
    for _ in 0..scale.chain_pairs {
        let x = random_pmf(&mut rng, 6, 0.2);
        let y = upward_shift(&x, &mut rng, 3);
        let c = implication_chain_check(&x, &y);
        chain_ok += u64::from(c.st && c.consistent);
    }
    let grid = p_grid(DEFAULT_T_GRID);
    let mut thinning_ok = 0;
    let mut ordered = 0;
    for i in 0..scale.thinning_pairs {
        let x = random_pmf(&mut rng, 6, 0.1);
        // half the pairs are ordered by construction, half are arbitrary
        let y = if i % 2 == 0 {
            upward_shift(&x, &mut rng, 3)
        } else {
            random_pmf(&mut rng, 6, 0.1)
        };
        let direct = check_exact(OrderKind::Pgf, &x, &y, DEFAULT_T_GRID);
        let thinned = pgf_via_thinning(&x, &y, &grid)?;
        ordered += u64::from(direct.verdict.is_dominates());
        let agree = direct.curve.len() == thinned.curve.len()
            && direct
                .curve
                .iter()
                .zip(&thinned.curve)
                .all(|(a, b)| (a.margin - b.margin).abs() < 1e-9)
            && direct.verdict.is_dominates() == thinned.verdict.is_dominates();
        thinning_ok += u64::from(agree);
    }
    let checks = vec![
        count("maximal_dominators", maximal_ok, scale.order_pmfs as u64),
        count("implication_chain", chain_ok, scale.chain_pairs as u64),
        count("thinning_agreement", thinning_ok, scale.thinning_pairs as u64),
    ];
    Ok(SuiteReport::new(
        Suite::Orders,
        seed,
        checks,
        json!({ "first_maximal_failure": first_bad, "ordered_thinning_pairs": ordered }),
    ))
}

fn operator_a(seed: u64, scale: &Scale) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    let image = apply_exact(&Pmf::point(0), DEFAULT_SUPPORT_CAP)?;
    let target = Pmf::bernoulli(1.0 / 3.0)?;
    let top = image.masses().len().max(target.masses().len()) as u64;
    let exact_err = (0..top)
        .map(|k| (image.mass(k) - target.mass(k)).abs())
        .fold(0.0, f64::max);
    checks.push(count("exact_point_zero", u64::from(exact_err <= 1e-12), 1));

    let mut agree = 0;
    let mut total = 0;
    for i in 0..=5u32 {
        for j in 0..=5u32 {
            let (law, brute) = (exact_law(i, j), brute_force_law(i, j)?);
            total += 1;
            agree += u64::from(
                law.len() == brute.len() && law.iter().zip(&brute).all(|(a, b)| (a - b).abs() < 1e-12),
            );
        }
    }
    for pi in [Pmf::point(0), Pmf::bernoulli(0.5)?, Pmf::two_point(1, 0.25)?] {
        let (a, b) = (apply_exact(&pi, DEFAULT_SUPPORT_CAP)?, apply_brute_force(&pi)?);
        total += 1;
        agree += u64::from(total_variation(&a, &b) < 1e-12);
    }
    checks.push(count("closed_form_matches_enumeration", agree, total));

    let mc = apply_mc(&Pmf::point(0), scale.mc_reps, seed)?;
    let emp = empirical_pmf(&mc)?;
    let mc_err = (0..4).map(|k| (emp.mass(k) - image.mass(k)).abs()).fold(0.0, f64::max);
    checks.push(count("monte_carlo_within_0.01", u64::from(mc_err <= 0.01), 1));

    let pairs = constructed_pairs(scale.operator_pairs, 6, seed);
    let mono = monotonicity_test(&pairs, DEFAULT_T_GRID)?;
    let certified = (mono.pairs - mono.skipped_uncertified) as u64;
    checks.push(count(
        "pgf_monotone",
        certified - mono.violations.len() as u64,
        certified,
    ));
    checks.push(count("pairs_certified", certified, mono.pairs as u64));
    Ok(SuiteReport::new(
        Suite::OperatorA,
        seed,
        checks,
        json!({
            "exact_point_zero": image,
            "exact_error": exact_err,
            "mc_reps": scale.mc_reps,
            "mc_max_error": mc_err,
            "monotonicity": mono,
        }),
    ))
}

fn rational(rng: &mut ChaCha8Rng, num_hi: i64, den: i64) -> BigRational {
    BigRational::new(rng.gen_range(0..=num_hi).into(), den.into())
}

fn moments(seed: u64, scale: &Scale) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let mut hausdorff_ok = 0;
    for _ in 0..scale.moment_sequences {
        let atoms: Vec<(BigRational, BigRational)> = (0..rng.gen_range(1..=4))
            .map(|_| {
                let w = BigRational::new(rng.gen_range(1i64..=9).into(), 4.into());
                (w, rational(&mut rng, 16, 16))
            })
            .collect();
        let f = RationalSeq::moments(&atoms, 21)?;
        hausdorff_ok += u64::from(hausdorff_check(&f, 10).passed);
    }
    checks.push(count("moment_sequences_pass", hausdorff_ok, scale.moment_sequences as u64));
    let linear = RationalSeq::new((0..21).map(|k| BigRational::from_integer(k.into())).collect())?;
    let lin = hausdorff_check(&linear, 10);
    let witness_ok = lin
        .witness
        .as_ref()
        .is_some_and(|w| w.n == 1 && w.k == 0 && w.value == "-1");
    checks.push(count("linear_sequence_witness", u64::from(!lin.passed && witness_ok), 1));

    let mut identity_ok = 0;
    for _ in 0..scale.derivative_cases {
        let n = rng.gen_range(1..=6);
        let g = multilinear::random_table(n, 20, &mut rng);
        let b = rng.gen_range(0..1usize << n);
        let x = rng.gen_range(0..1usize << n);
        identity_ok += u64::from(verify_derivative_identity(&g, b, x)?);
    }
    checks.push(count("derivative_identity", identity_ok, scale.derivative_cases as u64));

    let mut extremum_ok = 0;
    for _ in 0..scale.extremum_cases {
        let p = multilinear::random_poly(3, &mut rng);
        extremum_ok += u64::from(vertex_extremum_check(&p, 9)?.passed);
    }
    checks.push(count("vertex_extremum", extremum_ok, scale.extremum_cases as u64));
    Ok(SuiteReport::new(
        Suite::Moments,
        seed,
        checks,
        json!({ "linear_sequence": lin }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Scale {
        Scale {
            statistic_instances: 30,
            builder_instances: 20,
            order_pmfs: 30,
            chain_pairs: 30,
            thinning_pairs: 20,
            operator_pairs: 12,
            mc_reps: 20_000,
            moment_sequences: 10,
            derivative_cases: 30,
            extremum_cases: 10,
        }
    }

    #[test]
    fn every_suite_passes_at_small_scale() {
        for suite in Suite::ALL {
            let r = run_suite(suite, 5, &small()).unwrap();
            assert!(r.passed, "{suite:?}: {:?}", r.checks);
            assert!(r.checks.iter().all(|c| c.total > 0));
        }
    }

    #[test]
    fn suite_names_parse() {
        assert_eq!("operator_a".parse::<Suite>().unwrap(), Suite::OperatorA);
        assert!("everything".parse::<Suite>().is_err());
    }
}
