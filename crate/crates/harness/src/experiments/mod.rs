//! Experiment recipes. Each returns its records in a fixed order together
//! with a JSON summary and optional CSV tables.

mod compare;
mod death;
mod shape;
mod simulate;

pub use compare::compare;
pub use death::death;
pub use shape::shape;
pub use simulate::simulate;

use frog_core::engine::Simulation;
use frog_core::orders::{check_exact, OrderKind, TestPoint};
use frog_core::stream::derive_seed;
use frog_core::{CapKind, ConfigRule, Error as CoreError, FrogModelSpec, SimOutcome, WalkerKind};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::config::{Experiment, ExperimentName};
use crate::error::{exit, HarnessError, Result};
use crate::records::{CapNote, Csv, RunRecord};

/// Overall result of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Violation,
    Capped,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => exit::PASS,
            Status::Violation => exit::VIOLATION,
            Status::Capped => exit::CAPPED,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub records: Vec<RunRecord>,
    pub summary: serde_json::Value,
    pub tables: Vec<Csv>,
    pub status: Status,
}

/// Run whichever experiment the config names.
pub fn run_experiment(exp: &Experiment) -> Result<Report> {
    match exp.config.experiment {
        ExperimentName::Simulate => simulate(exp),
        ExperimentName::Compare => compare(exp),
        ExperimentName::Shape => shape(exp),
        ExperimentName::Death => death(exp),
    }
}

const COUNT_TAG: u64 = 0xC0;

/// Path seed of a replica. Every rule and survival level shares it.
pub fn replica_seed(seed: u64, replica: usize) -> u64 {
    derive_seed(seed, replica as u64)
}

/// Count seed of a replica under a given rule.
pub fn count_seed(replica_seed: u64, rule_index: usize) -> u64 {
    derive_seed(derive_seed(replica_seed, COUNT_TAG), rule_index as u64)
}

/// One finished (or cut short) run.
#[derive(Debug, Clone)]
pub(crate) struct Replica {
    pub outcome: SimOutcome,
    pub cap: Option<(CapKind, u64)>,
    /// Steps simulated.
    pub time: u64,
    pub quiescent: bool,
}

impl Replica {
    /// Cap note for a record that describes the run up to `horizon`.
    pub fn cap_note(&self, horizon: u64) -> Option<CapNote> {
        self.cap
            .filter(|&(_, step)| step <= horizon)
            .map(|(cap, step)| CapNote::Resource { cap, step })
    }
}

#[derive(Clone)]
pub(crate) struct Job {
    pub rule_index: usize,
    pub replica: usize,
    pub walker: WalkerKind,
}

impl Experiment {
    pub(crate) fn spec_for(&self, job: &Job) -> FrogModelSpec {
        let seed = replica_seed(self.config.seed, job.replica);
        FrogModelSpec {
            graph: self.graph.clone(),
            rule: self.rules[job.rule_index].clone(),
            walker: job.walker.clone(),
            horizon: self.max_horizon(),
            seed,
            count_seed: Some(count_seed(seed, job.rule_index)),
            limits: self.limits,
        }
    }

    pub(crate) fn record(&self, job: &Job, horizon: u64) -> RunRecord {
        let spec = self.spec_for(job);
        RunRecord {
            config_digest: self.digest.clone(),
            experiment: self.config.experiment.as_str(),
            rule_index: job.rule_index,
            rule: self.config.rules[job.rule_index].clone(),
            survival: None,
            horizon,
            replica: job.replica,
            replica_seed: spec.seed,
            count_seed: spec.count_seed(),
            capped: None,
            statistics: Default::default(),
            activation_times: None,
            visits_by_step: None,
        }
    }
}

/// Run every job in parallel; results come back in job order.
pub(crate) fn run_jobs<F>(exp: &Experiment, jobs: &[Job], stop: F) -> Result<Vec<Replica>>
where
    F: Fn(&Simulation) -> bool + Sync,
{
    jobs.par_iter()
        .map(|job| {
            let mut sim = Simulation::new(&exp.spec_for(job))?;
            match sim.run_until(&stop) {
                Ok(()) => Ok(Replica {
                    outcome: sim.outcome(),
                    cap: None,
                    time: sim.time(),
                    quiescent: sim.is_quiescent(),
                }),
                Err(CoreError::Capped {
                    kind,
                    step,
                    partial,
                }) => Ok(Replica {
                    outcome: *partial,
                    cap: Some((kind, step)),
                    time: step,
                    quiescent: false,
                }),
                Err(e) => Err(e.into()),
            }
        })
        .collect()
}

/// Refuse unless the per-vertex laws of `lower` and `upper` are ordered.
pub(crate) fn certify_rules(
    kind: OrderKind,
    lower: &ConfigRule,
    upper: &ConfigRule,
    t_grid: usize,
) -> Result<serde_json::Value> {
    let law = |r: &ConfigRule| {
        r.marginal().ok_or_else(|| {
            HarnessError::Precondition(format!(
                "rule `{r}` has no common per-vertex law, so it cannot be order-certified"
            ))
        })
    };
    let (x, y) = (law(lower)?, law(upper)?);
    let report = check_exact(kind, &x, &y, t_grid);
    if let frog_core::OrderVerdict::Violated { witness } = report.verdict {
        return Err(HarnessError::Precondition(format!(
            "per-vertex law of `{lower}` is not below that of `{upper}` in the {kind:?} order; \
             at {} the margin is {:.3e}",
            point_label(witness.point),
            witness.margin
        )));
    }
    Ok(serde_json::json!({
        "order": kind,
        "lower": lower.to_string(),
        "upper": upper.to_string(),
        "certified": true,
    }))
}

pub(crate) fn point_label(p: TestPoint) -> String {
    match p {
        TestPoint::Survival(k) => format!("survival:{k}"),
        TestPoint::Min(k) => format!("min:{k}"),
        TestPoint::Pgf(t) => format!("pgf:{t}"),
        TestPoint::Thinning(p) => format!("thinning:{p}"),
        TestPoint::Infinity => "infinity".into(),
        TestPoint::Zero => "zero".into(),
        TestPoint::Finite => "finite".into(),
    }
}

/// Two-sided normal quantile for a confidence level.
pub(crate) fn z_value(level: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(0.5 + level / 2.0)
}

/// Sample mean and standard deviation (`n - 1` denominator).
pub(crate) fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_shared_across_rules_but_counts_differ() {
        let s = replica_seed(3, 7);
        assert_eq!(s, replica_seed(3, 7));
        assert_ne!(s, replica_seed(3, 8));
        assert_ne!(count_seed(s, 0), count_seed(s, 1));
    }

    #[test]
    fn normal_quantile_and_moments() {
        assert!((z_value(0.95) - 1.959964).abs() < 1e-5);
        let (m, sd) = mean_sd(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((sd - 1.0).abs() < 1e-12);
    }

    #[test]
    fn certification_refuses_unordered_rules() {
        let lo = ConfigRule::parse("iid(poisson(1))").unwrap();
        let hi = ConfigRule::parse("deterministic(1)").unwrap();
        assert!(certify_rules(OrderKind::Pgf, &lo, &hi, 64).is_ok());
        let err = certify_rules(OrderKind::Pgf, &hi, &lo, 64).unwrap_err();
        assert!(matches!(err, HarnessError::Precondition(_)));
        assert!(certify_rules(OrderKind::St, &lo, &hi, 64).is_err());
        let site = ConfigRule::parse("site_bernoulli(1)").unwrap();
        assert!(certify_rules(OrderKind::Pgf, &site, &hi, 64).is_err());
    }
}
