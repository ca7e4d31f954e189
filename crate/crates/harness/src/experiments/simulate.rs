use serde_json::json;

use super::{mean_sd, run_jobs, z_value, Job, Report, Status};
use crate::config::Experiment;
use crate::error::Result;
use crate::records::Csv;

/// Finite-horizon growth only. No verdict about the infinite-time behaviour
/// is drawn from these numbers.
pub const GROWTH_CAVEAT: &str = "growth classes compare mean root visits between the smallest and \
largest horizons; they describe finite horizons only and are not recurrence or transience verdicts";

/// `replicas` runs per rule, read off at every configured horizon. Runs go
/// to the largest horizon once; the smaller horizons are prefixes of it.
pub fn simulate(exp: &Experiment) -> Result<Report> {
    let horizons = exp.horizons();
    let reps = exp.config.replicas;
    let jobs: Vec<Job> = (0..exp.rules.len())
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
    let mut per_rule = Vec::new();
    let mut curve = Csv::new(
        "growth",
        &["rule_index", "horizon", "mean_root_visits", "se_root_visits", "mean_visited"],
    );
    let z = z_value(exp.empirical.level);
    for rule_index in 0..exp.rules.len() {
        let block = &runs[rule_index * reps..(rule_index + 1) * reps];
        let mut rows = Vec::new();
        for &h in &horizons {
            let mut r = Vec::with_capacity(reps);
            let mut v = Vec::with_capacity(reps);
            for (replica, run) in block.iter().enumerate() {
                let job = &jobs[rule_index * reps + replica];
                let mut rec = exp.record(job, h);
                rec.capped = run.cap_note(h);
                capped += usize::from(rec.capped.is_some());
                let (rv, vv) = (run.outcome.root_visits_by(h), run.outcome.visited_count(h));
                rec.statistics.insert("root_visits", rv);
                rec.statistics.insert("visited", vv);
                if exp.config.record_curves {
                    let mut c = run.outcome.visits_by_step();
                    c.truncate(h as usize + 1);
                    rec.visits_by_step = Some(c);
                }
                records.push(rec);
                r.push(rv as f64);
                v.push(vv as f64);
            }
            let (mr, sr) = mean_sd(&r);
            let (mv, _) = mean_sd(&v);
            let se = sr / (reps as f64).sqrt();
            curve.row(vec![
                rule_index.to_string(),
                h.to_string(),
                mr.to_string(),
                se.to_string(),
                mv.to_string(),
            ]);
            rows.push(json!({
                "horizon": h,
                "mean_root_visits": mr,
                "se_root_visits": se,
                "mean_visited": mv,
            }));
        }
        // paired growth between the extreme horizons
        let (lo, hi) = (horizons[0], *horizons.last().expect("nonempty"));
        let d: Vec<f64> = block
            .iter()
            .map(|run| run.outcome.root_visits_by(hi) as f64 - run.outcome.root_visits_by(lo) as f64)
            .collect();
        let (md, sd) = mean_sd(&d);
        let hw = z * sd / (reps as f64).sqrt();
        let growth = if horizons.len() < 2 {
            "single_horizon"
        } else if md > hw && md > 0.0 {
            "increasing"
        } else {
            "flat"
        };
        per_rule.push(json!({
            "rule": exp.config.rules[rule_index],
            "horizons": rows,
            "growth": growth,
            "mean_increase": md,
            "increase_halfwidth": hw,
        }));
    }
    let summary = json!({
        "experiment": "simulate",
        "config_digest": exp.digest,
        "replicas": reps,
        "capped_records": capped,
        "rules": per_rule,
        "caveat": GROWTH_CAVEAT,
    });
    Ok(Report {
        records,
        summary,
        tables: vec![curve],
        status: if capped > 0 { Status::Capped } else { Status::Pass },
    })
}
