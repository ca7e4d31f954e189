//! Run records and their text encodings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use frog_core::CapKind;
use serde::Serialize;

/// One replica at one horizon. Records carry no wall-clock time so that
/// reruns are byte-identical; run metadata goes to a separate file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub config_digest: String,
    pub experiment: &'static str,
    pub rule_index: usize,
    pub rule: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub survival: Option<f64>,
    pub horizon: u64,
    pub replica: usize,
    pub replica_seed: u64,
    pub count_seed: u64,
    /// Set when a resource cap or the horizon cut the run short of what the
    /// record describes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capped: Option<CapNote>,
    pub statistics: BTreeMap<&'static str, u64>,
    /// Activation times of named targets; `null` when not reached.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub activation_times: Option<BTreeMap<String, Option<u64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visits_by_step: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CapNote {
    Resource { cap: CapKind, step: u64 },
    /// The run had not died out by the horizon.
    Unfinished,
}

/// Encode records as JSON lines.
pub fn to_json_lines(records: &[RunRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// A CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Csv {
    pub name: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Csv {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|c| quote(c)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}
