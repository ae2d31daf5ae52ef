//! Result rows, the tab-separated results table and the median summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qrobust::train::Metrics;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Baseline,
    Attacked,
    Defended,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Baseline => "baseline",
            Condition::Attacked => "attacked",
            Condition::Defended => "defended",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "baseline" => Condition::Baseline,
            "attacked" => Condition::Attacked,
            "defended" => Condition::Defended,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Pure,
    Noisy,
}

impl EvalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::Pure => "pure",
            EvalMode::Noisy => "noisy",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "pure" => EvalMode::Pure,
            "noisy" => EvalMode::Noisy,
            _ => return None,
        })
    }
}

/// One seed × model × condition × evaluation mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub cell: String,
    pub seed: u64,
    pub model: String,
    pub condition: Condition,
    pub mode: EvalMode,
    pub metrics: Metrics,
    /// Accuracy over the baseline accuracy in the same mode.
    pub relative_accuracy: f64,
    /// Percent of attacked test samples misclassified; set on attacked and
    /// defended rows.
    pub asr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub config_hash: String,
    /// Canonical TOML of the config that produced the rows.
    pub config_echo: String,
    pub tool_version: String,
    pub rows: Vec<Row>,
    pub runtime_secs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    Table,
    Summary,
    #[default]
    Both,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "table" => Ok(Self::Table),
            "summary" => Ok(Self::Summary),
            "both" => Ok(Self::Both),
            _ => Err(format!("unknown format '{s}' (table, summary, both)")),
        }
    }
}

pub const TABLE_FILE: &str = "results.tsv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const CONFIG_FILE: &str = "config.toml";

const HEADER: &str =
    "config_hash\tcell\tseed\tmodel\tcondition\tmode\taccuracy\tmacro_f1\tfpr\tfnr\trelative_accuracy\tasr";

/// Baseline-relative accuracy. Errors on a zero or non-finite baseline.
pub fn relative_accuracy(acc_attack: f64, acc_baseline: f64) -> Result<f64> {
    if !(acc_baseline > 0.0 && acc_baseline.is_finite()) {
        return Err(BenchError::Config(format!(
            "relative accuracy needs a positive baseline, got {acc_baseline}"
        )));
    }
    Ok(acc_attack / acc_baseline)
}

/// Median of a non-empty slice; even lengths average the middle pair.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn format_table(config_hash: &str, rows: &[Row]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in rows {
        let m = &r.metrics;
        let _ = write!(
            out,
            "{config_hash}\t{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t",
            r.cell,
            r.seed,
            r.model,
            r.condition.as_str(),
            r.mode.as_str(),
            m.accuracy,
            m.macro_f1,
            m.fpr,
            m.fnr,
            r.relative_accuracy
        );
        match r.asr {
            Some(a) => {
                let _ = writeln!(out, "{a:.6}");
            }
            None => out.push_str("-\n"),
        }
    }
    out
}

/// Reads a table written by [`format_table`]; returns the config hash and
/// rows. Values come back rounded to the table's six decimals.
pub fn parse_table(text: &str) -> Result<(String, Vec<Row>)> {
    let mut lines = text.lines();
    if lines.next() != Some(HEADER) {
        return Err(BenchError::Table {
            line: 1,
            msg: "unexpected header".into(),
        });
    }
    let mut hash = String::new();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let err = |msg: &str| BenchError::Table {
            line: lineno,
            msg: msg.to_string(),
        };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 12 {
            return Err(err(&format!("expected 12 fields, found {}", f.len())));
        }
        if hash.is_empty() {
            hash = f[0].to_string();
        } else if hash != f[0] {
            return Err(err("config hash differs from earlier rows"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(&format!("'{s}' is not a number")));
        rows.push(Row {
            cell: f[1].to_string(),
            seed: f[2].parse().map_err(|_| err("bad seed"))?,
            model: f[3].to_string(),
            condition: Condition::parse(f[4]).ok_or_else(|| err("bad condition"))?,
            mode: EvalMode::parse(f[5]).ok_or_else(|| err("bad mode"))?,
            metrics: Metrics {
                accuracy: num(f[6])?,
                macro_f1: num(f[7])?,
                fpr: num(f[8])?,
                fnr: num(f[9])?,
            },
            relative_accuracy: num(f[10])?,
            asr: if f[11] == "-" { None } else { Some(num(f[11])?) },
        });
    }
    Ok((hash, rows))
}

/// Medians over seeds, one line per (cell, model, condition, mode) in
/// first-seen order.
pub fn format_medians(rows: &[Row]) -> String {
    let mut keys: Vec<(&str, &str, Condition, EvalMode)> = Vec::new();
    for r in rows {
        let k = (r.cell.as_str(), r.model.as_str(), r.condition, r.mode);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut out = String::from("cell\tmodel\tcondition\tmode\tseeds\taccuracy\tmacro_f1\trelative\tasr\n");
    for k in keys {
        let group: Vec<&Row> = rows
            .iter()
            .filter(|r| (r.cell.as_str(), r.model.as_str(), r.condition, r.mode) == k)
            .collect();
        let pick = |f: &dyn Fn(&Row) -> f64| median(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
        let asr: Vec<f64> = group.iter().filter_map(|r| r.asr).collect();
        let _ = write!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{:.2}\t{:.2}\t{:.2}\t",
            k.0,
            k.1,
            k.2.as_str(),
            k.3.as_str(),
            group.len(),
            pick(&|r| r.metrics.accuracy),
            pick(&|r| r.metrics.macro_f1),
            pick(&|r| r.relative_accuracy),
        );
        if asr.is_empty() {
            out.push_str("-\n");
        } else {
            let _ = writeln!(out, "{:.2}", median(&asr));
        }
    }
    out
}

pub fn format_summary(report: &ExperimentReport) -> String {
    let mut seeds: Vec<u64> = report.rows.iter().map(|r| r.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    let seeds: Vec<String> = seeds.iter().map(u64::to_string).collect();
    format!(
        "experiment: {}\nconfig hash: {}\ntool: qrobust-bench {}\nseeds: {}\nruntime: {:.1} s\n\nmedians over seeds\n{}",
        report.name,
        report.config_hash,
        report.tool_version,
        seeds.join(" "),
        report.runtime_secs,
        format_medians(&report.rows)
    )
}

/// Writes the table, summary and config echo as selected by `format` and
/// returns the paths written.
pub fn emit_report(report: &ExperimentReport, out_dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| BenchError::Io { path, source }
    };
    std::fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let mut files = vec![(CONFIG_FILE, report.config_echo.clone())];
    if format != OutputFormat::Summary {
        files.push((TABLE_FILE, format_table(&report.config_hash, &report.rows)));
    }
    if format != OutputFormat::Table {
        files.push((SUMMARY_FILE, format_summary(report)));
    }
    let mut written = Vec::new();
    for (name, body) in files {
        let path = out_dir.join(name);
        std::fs::write(&path, body).map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}
