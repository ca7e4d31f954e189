use std::collections::BTreeMap;

use frog_core::VertexLabel;
use serde_json::json;

use super::{certify_rules, mean_sd, run_jobs, z_value, Job, Report, Status};
use crate::config::Experiment;
use crate::error::Result;
use crate::records::Csv;

/// Activation times of `n v` for each direction `v` and `n <= n_max`, under
/// both rules with paired path seeds. Runs stop once every target is
/// awake; targets still asleep at the horizon are censored.
///
/// With the first rule below the second, the second rule should wake each
/// target no later on average: the paired mean difference
/// `T_second - T_first` must not exceed its confidence half-width.
pub fn shape(exp: &Experiment) -> Result<Report> {
    let precondition = certify_rules(exp.order, &exp.rules[0], &exp.rules[1], exp.empirical.t_grid)?;
    let reps = exp.config.replicas;
    let n_max = exp.config.shape.n_max;
    let directions = &exp.config.shape.directions;
    let targets: Vec<(usize, u64, VertexLabel)> = directions
        .iter()
        .enumerate()
        .flat_map(|(d, v)| {
            (1..=n_max).map(move |n| {
                (d, n, VertexLabel::Lattice(v.iter().map(|&x| x * n as i64).collect()))
            })
        })
        .collect();
    // farthest first, so the stopping test usually fails on its first lookup
    let mut probe: Vec<&VertexLabel> = targets.iter().map(|(_, _, l)| l).collect();
    probe.reverse();

    let jobs: Vec<Job> = (0..2)
        .flat_map(|rule_index| {
            (0..reps).map(move |replica| Job {
                rule_index,
                replica,
                walker: exp.walker.clone(),
            })
        })
        .collect();
    let runs = run_jobs(exp, &jobs, |sim| {
        probe.iter().all(|l| sim.activation_time_of(l).is_some())
    })?;

    let horizon = exp.max_horizon();
    let mut records = Vec::with_capacity(jobs.len());
    let mut capped = 0usize;
    // times[rule][target][replica]
    let mut times = vec![vec![Vec::with_capacity(reps); targets.len()]; 2];
    for (job, run) in jobs.iter().zip(&runs) {
        let mut rec = exp.record(job, horizon);
        rec.capped = run.cap_note(horizon);
        capped += usize::from(rec.capped.is_some());
        rec.statistics.insert("root_visits", run.outcome.root_visits);
        rec.statistics.insert("visited", run.outcome.visited_total());
        rec.statistics.insert("stopped_at", run.time);
        let mut at = BTreeMap::new();
        for (k, (_, _, label)) in targets.iter().enumerate() {
            let t = run.outcome.activation_time(label);
            times[job.rule_index][k].push(t);
            at.insert(label.to_string(), t);
        }
        rec.activation_times = Some(at);
        records.push(rec);
    }

    let z = z_value(exp.empirical.level);
    let mut table = Csv::new(
        "activation",
        &[
            "direction", "n", "rule_index", "mean_time", "se_time", "mu", "censored",
        ],
    );
    let mut rows = Vec::new();
    let mut failures = 0usize;
    let mut censored_points = 0usize;
    for (k, (d, n, label)) in targets.iter().enumerate() {
        let mut per_rule = Vec::new();
        for (rule_index, by_rule) in times.iter().enumerate() {
            let seen: Vec<f64> = by_rule[k].iter().flatten().map(|&t| t as f64).collect();
            let censored = reps - seen.len();
            let (m, sd) = mean_sd(&seen);
            let se = sd / (seen.len() as f64).sqrt();
            let mu = m / *n as f64;
            table.row(vec![
                d.to_string(),
                n.to_string(),
                rule_index.to_string(),
                m.to_string(),
                se.to_string(),
                mu.to_string(),
                censored.to_string(),
            ]);
            per_rule.push(json!({ "mean_time": m, "se": se, "mu": mu, "censored": censored }));
        }
        let diffs: Vec<f64> = times[0][k]
            .iter()
            .zip(&times[1][k])
            .filter_map(|(a, b)| Some((*b)? as f64 - (*a)? as f64))
            .collect();
        let comparison = if diffs.len() < reps {
            censored_points += 1;
            json!({ "status": "censored", "paired": diffs.len() })
        } else {
            let (md, sd) = mean_sd(&diffs);
            let hw = z * sd / (diffs.len() as f64).sqrt();
            let ok = md <= hw;
            failures += usize::from(!ok);
            json!({
                "status": if ok { "ok" } else { "violated" },
                "mean_difference": md,
                "halfwidth": hw,
                "equal_within_ci": md.abs() <= hw,
            })
        };
        rows.push(json!({
            "direction": d,
            "n": n,
            "target": label.to_string(),
            "rules": per_rule,
            "comparison": comparison,
        }));
    }

    // activated set of the first replica of each rule, for plotting
    let dim = match exp.graph {
        frog_core::GraphKind::Lattice { dim } => dim,
        _ => unreachable!("validated as a lattice"),
    };
    let mut header: Vec<String> = vec!["rule_index".into()];
    header.extend((1..=dim).map(|i| format!("x{i}")));
    header.push("activation".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut cloud = Csv::new("cloud", &header);
    for rule_index in 0..2 {
        for (label, t) in &runs[rule_index * reps].outcome.activations {
            if let VertexLabel::Lattice(c) = label {
                let mut row = vec![rule_index.to_string()];
                row.extend(c.iter().map(i64::to_string));
                row.push(t.to_string());
                cloud.row(row);
            }
        }
    }

    let status = if failures > 0 {
        Status::Violation
    } else if capped > 0 {
        Status::Capped
    } else {
        Status::Pass
    };
    let summary = json!({
        "experiment": "shape",
        "config_digest": exp.digest,
        "replicas": reps,
        "level": exp.empirical.level,
        "precondition": precondition,
        "capped_records": capped,
        "censored_targets": censored_points,
        "violations": failures,
        "targets": rows,
    });
    Ok(Report {
        records,
        summary,
        tables: vec![table, cloud],
        status,
    })
}
