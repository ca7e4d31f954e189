use frog_core::orders::{check_empirical, EmpiricalConfig, MIN_SAMPLES};
use frog_core::stream::derive_seed;
use serde_json::json;

use super::{certify_rules, point_label, run_jobs, Job, Report, Status};
use crate::config::Experiment;
use crate::error::{HarnessError, Result};
use crate::records::Csv;

const STATISTICS: [&str; 2] = ["root_visits", "visited"];

/// Paired replicas under the two rules: replica `i` uses the same path seed
/// under both, and a count seed of its own under each. The first rule must
/// be below the second in the configured order; the verdict then asks
/// whether the same holds for root visits and visited counts.
pub fn compare(exp: &Experiment) -> Result<Report> {
    let precondition = certify_rules(exp.order, &exp.rules[0], &exp.rules[1], exp.empirical.t_grid)?;
    let horizons = exp.horizons();
    let reps = exp.config.replicas;
    if reps < MIN_SAMPLES {
        return Err(HarnessError::Config(format!(
            "comparisons need at least {MIN_SAMPLES} replicas"
        )));
    }
    let jobs: Vec<Job> = (0..2)
        .flat_map(|rule_index| {
            (0..reps).map(move |replica| Job {
                rule_index,
                replica,
                walker: exp.walker.clone(),
            })
        })
        .collect();
    let runs = run_jobs(exp, &jobs, |_| false)?;

    let mut records = Vec::with_capacity(jobs.len() * horizons.len());
    let mut capped = 0usize;
    for rule_index in 0..2 {
        for &h in &horizons {
            for replica in 0..reps {
                let i = rule_index * reps + replica;
                let (job, run) = (&jobs[i], &runs[i]);
                let mut rec = exp.record(job, h);
                rec.capped = run.cap_note(h);
                capped += usize::from(rec.capped.is_some());
                rec.statistics.insert("root_visits", run.outcome.root_visits_by(h));
                rec.statistics.insert("visited", run.outcome.visited_count(h));
                records.push(rec);
            }
        }
    }

    let mut verdicts = Vec::new();
    let mut violated = false;
    let mut margins = Csv::new(
        "margins",
        &["statistic", "horizon", "point", "x", "y", "margin", "band_lo", "band_hi"],
    );
    for &h in &horizons {
        for (s, stat) in STATISTICS.iter().enumerate() {
            let sample = |rule_index: usize| -> Vec<u64> {
                let mut out = Vec::with_capacity(reps);
                for replica in 0..reps {
                    let i = rule_index * reps + replica;
                    if runs[i].cap_note(h).is_none() {
                        out.push(records_value(&runs[i].outcome, stat, h));
                    }
                }
                out
            };
            let (x, y) = (sample(0), sample(1));
            let cfg = EmpiricalConfig {
                seed: derive_seed(exp.empirical.seed, h.wrapping_mul(4) + s as u64),
                ..exp.empirical
            };
            if x.len() < MIN_SAMPLES || y.len() < MIN_SAMPLES {
                verdicts.push(json!({
                    "statistic": stat,
                    "horizon": h,
                    "verdict": "insufficient_uncapped_samples",
                    "samples": [x.len(), y.len()],
                }));
                continue;
            }
            let report = check_empirical(exp.order, &x, &y, &cfg)?;
            violated |= report.verdict.is_violated();
            for m in &report.curve {
                let (lo, hi) = m.band.unwrap_or((f64::NAN, f64::NAN));
                margins.row(vec![
                    stat.to_string(),
                    h.to_string(),
                    point_label(m.point),
                    m.x.to_string(),
                    m.y.to_string(),
                    m.margin.to_string(),
                    lo.to_string(),
                    hi.to_string(),
                ]);
            }
            verdicts.push(json!({
                "statistic": stat,
                "horizon": h,
                "samples": [x.len(), y.len()],
                "verdict": report.verdict,
            }));
        }
    }
    let status = if violated {
        Status::Violation
    } else if capped > 0 {
        Status::Capped
    } else {
        Status::Pass
    };
    let summary = json!({
        "experiment": "compare",
        "config_digest": exp.digest,
        "order": exp.order,
        "level": exp.empirical.level,
        "replicas": reps,
        "precondition": precondition,
        "capped_records": capped,
        "verdicts": verdicts,
    });
    Ok(Report {
        records,
        summary,
        tables: vec![margins],
        status,
    })
}

fn records_value(out: &frog_core::SimOutcome, stat: &str, h: u64) -> u64 {
    match stat {
        "root_visits" => out.root_visits_by(h),
        _ => out.visited_count(h),
    }
}
