//! On-disk result formats.
//!
//! `report.jsonl` holds, for each method, one `"kind": "report"` header line
//! followed by one `"kind": "record"` line per problem. `passk.csv` and
//! `auroc.csv` are derived from it and can be regenerated at any time.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::runner::{EvalReport, Method, SampleRecord};
use crate::error::{Error, Result};
use crate::io::write_atomic;

pub const REPORT_FILE: &str = "report.jsonl";
pub const PASSK_FILE: &str = "passk.csv";
pub const AUROC_FILE: &str = "auroc.csv";

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Report(Header),
    Record(SampleRecord),
}

#[derive(Serialize, Deserialize)]
struct Header {
    method: Method,
    master_seed: u64,
    problems: usize,
    config: serde_json::Value,
    pass_at_k: Vec<f64>,
    auroc: BTreeMap<String, f64>,
    vote_accuracy: f64,
}

pub fn reports_to_jsonl(reports: &[EvalReport]) -> Result<String> {
    let mut out = String::new();
    for r in reports {
        let header = Header {
            method: r.method,
            master_seed: r.master_seed,
            problems: r.records.len(),
            config: r.config.clone(),
            pass_at_k: r.pass_at_k.clone(),
            auroc: r.auroc.clone(),
            vote_accuracy: r.vote_accuracy,
        };
        out.push_str(&serde_json::to_string(&Line::Report(header))?);
        out.push('\n');
        for rec in &r.records {
            out.push_str(&serde_json::to_string(&Line::Record(rec.clone()))?);
            out.push('\n');
        }
    }
    Ok(out)
}

pub fn parse_reports_jsonl(text: &str, origin: &Path) -> Result<Vec<EvalReport>> {
    let mut reports: Vec<(Header, Vec<SampleRecord>)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            record: format!("line {}", i + 1),
            message,
        };
        match serde_json::from_str::<Line>(line).map_err(|e| err(e.to_string()))? {
            Line::Report(h) => reports.push((h, Vec::new())),
            Line::Record(rec) => {
                let (h, records) = reports
                    .last_mut()
                    .ok_or_else(|| err("record appears before any report header".into()))?;
                if rec.method != h.method {
                    return Err(err(format!("record for {} under a {} header", rec.method, h.method)));
                }
                records.push(rec);
            }
        }
    }
    reports
        .into_iter()
        .map(|(h, records)| {
            if records.len() != h.problems {
                return Err(Error::Validation {
                    path: origin.to_path_buf(),
                    message: format!(
                        "{} header announces {} problems, found {}",
                        h.method,
                        h.problems,
                        records.len()
                    ),
                });
            }
            Ok(EvalReport {
                method: h.method,
                master_seed: h.master_seed,
                config: h.config,
                records,
                pass_at_k: h.pass_at_k,
                auroc: h.auroc,
                vote_accuracy: h.vote_accuracy,
            })
        })
        .collect()
}

pub fn load_reports(path: impl AsRef<Path>) -> Result<Vec<EvalReport>> {
    let path = path.as_ref();
    parse_reports_jsonl(&fs::read_to_string(path)?, path)
}

pub fn passk_csv(reports: &[EvalReport]) -> String {
    let mut s = String::from("method,k,mean_pass_at_k\n");
    for r in reports {
        for (i, v) in r.pass_at_k.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", r.method, i + 1, v);
        }
    }
    s
}

pub fn auroc_csv(reports: &[EvalReport]) -> String {
    let mut s = String::from("method,metric,auroc\n");
    for r in reports {
        for (metric, v) in &r.auroc {
            let _ = writeln!(s, "{},{},{}", r.method, metric, v);
        }
    }
    s
}

/// Writes both CSV tables into `dir`, returning their paths.
pub fn write_csvs(dir: &Path, reports: &[EvalReport]) -> Result<Vec<PathBuf>> {
    let passk = dir.join(PASSK_FILE);
    let auroc = dir.join(AUROC_FILE);
    write_atomic(&passk, passk_csv(reports).as_bytes())?;
    write_atomic(&auroc, auroc_csv(reports).as_bytes())?;
    Ok(vec![passk, auroc])
}

/// Writes `report.jsonl` plus both CSV tables into `dir`.
pub fn write_report_files(dir: &Path, reports: &[EvalReport]) -> Result<Vec<PathBuf>> {
    let jsonl = dir.join(REPORT_FILE);
    write_atomic(&jsonl, reports_to_jsonl(reports)?.as_bytes())?;
    let mut written = vec![jsonl];
    written.extend(write_csvs(dir, reports)?);
    Ok(written)
}
