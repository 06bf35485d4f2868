//! Report files.
//!
//! CSV has the columns `method,n_bits,alpha,k,map`, one row per method,
//! code size and observation level. JSON carries the same rows under a
//! metadata envelope, plus the VE/E/O aggregates where the grid allows.
//! Floats are written in shortest round-trip form.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

pub const CSV_HEADER: &str = "method,n_bits,alpha,k,map";

/// Observation levels of the very-early, early and overall aggregates.
const VE_ALPHAS: [f64; 2] = [0.1, 0.2];
const E_ALPHAS: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];
const O_ALPHAS: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub n_bits: usize,
    pub alpha: f64,
    pub k: usize,
    pub map: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub seed: u64,
    pub dataset_id: String,
    /// Unix seconds.
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub metadata: ReportMetadata,
    pub rows: Vec<ReportRow>,
}

/// Mean mAP over α ∈ {0.1, 0.2} (VE), α ∈ {0.1, …, 0.5} (E) and all ten levels (O).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: String,
    pub n_bits: usize,
    pub k: usize,
    pub ve: f64,
    pub e: f64,
    pub o: f64,
}

#[derive(Serialize, Deserialize)]
struct JsonReport {
    metadata: ReportMetadata,
    rows: Vec<ReportRow>,
    #[serde(default, skip_deserializing)]
    aggregates: Vec<Aggregate>,
}

fn same_alpha(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

impl EvalReport {
    /// Row for `(method, n_bits, k)` at `alpha`.
    pub fn get(&self, method: &str, n_bits: usize, k: usize, alpha: f64) -> Option<&ReportRow> {
        self.rows.iter().find(|r| {
            r.method == method && r.n_bits == n_bits && r.k == k && same_alpha(r.alpha, alpha)
        })
    }

    /// VE/E/O of every `(method, n_bits, k)` group, in first-seen order.
    /// Fails if a group lacks one of the ten levels.
    pub fn aggregate(&self) -> Result<Vec<Aggregate>> {
        let mut groups: Vec<(String, usize, usize)> = Vec::new();
        for r in &self.rows {
            let key = (r.method.clone(), r.n_bits, r.k);
            if !groups.contains(&key) {
                groups.push(key);
            }
        }
        groups
            .into_iter()
            .map(|(method, n_bits, k)| {
                let mean = |levels: &[f64]| -> Result<f64> {
                    let mut sum = 0.0;
                    for &a in levels {
                        let row = self.get(&method, n_bits, k, a);
                        ensure!(
                            row.is_some(),
                            InvalidInput,
                            "{method} at {n_bits} bits has no row for alpha {a}"
                        );
                        sum += row.unwrap().map;
                    }
                    Ok(sum / levels.len() as f64)
                };
                Ok(Aggregate {
                    ve: mean(&VE_ALPHAS)?,
                    e: mean(&E_ALPHAS)?,
                    o: mean(&O_ALPHAS)?,
                    method,
                    n_bits,
                    k,
                })
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.method, r.n_bits, r.alpha, r.k, r.map
            ));
        }
        out
    }

    /// Parses CSV rows. Metadata is not part of the CSV and comes back empty.
    pub fn from_csv(text: &str, path: &Path) -> Result<Self> {
        let bad = |line: usize, msg: String| Error::format(path, format!("line {line}: {msg}"));
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            _ => return Err(bad(1, format!("expected header `{CSV_HEADER}`"))),
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad(i + 1, format!("expected 5 fields, found {}", f.len())));
            }
            let num = |s: &str, what: &str| -> Result<f64> {
                s.trim()
                    .parse()
                    .map_err(|_| bad(i + 1, format!("bad {what} `{s}`")))
            };
            let int = |s: &str, what: &str| -> Result<usize> {
                s.trim()
                    .parse()
                    .map_err(|_| bad(i + 1, format!("bad {what} `{s}`")))
            };
            rows.push(ReportRow {
                method: f[0].to_string(),
                n_bits: int(f[1], "n_bits")?,
                alpha: num(f[2], "alpha")?,
                k: int(f[3], "k")?,
                map: num(f[4], "map")?,
            });
        }
        Ok(Self {
            metadata: ReportMetadata::default(),
            rows,
        })
    }

    pub fn to_json(&self) -> String {
        let doc = JsonReport {
            metadata: self.metadata.clone(),
            rows: self.rows.clone(),
            aggregates: self.aggregate().unwrap_or_default(),
        };
        serde_json::to_string_pretty(&doc).expect("report serializes")
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let doc: JsonReport =
            serde_json::from_str(text).map_err(|e| Error::format(path, e.to_string()))?;
        Ok(Self {
            metadata: doc.metadata,
            rows: doc.rows,
        })
    }

    /// Writes CSV or JSON, chosen by the `.json` extension.
    pub fn write(&self, path: &Path) -> Result<()> {
        ensure!(
            !self.rows.is_empty(),
            InvalidInput,
            "refusing to write an empty report"
        );
        for r in &self.rows {
            ensure!(
                !r.method.contains([',', '\n', '"']),
                InvalidInput,
                "method name `{}` cannot be written to CSV",
                r.method
            );
        }
        let text = if is_json(path) {
            self.to_json()
        } else {
            self.to_csv()
        };
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if is_json(path) {
            Self::from_json(&text, path)
        } else {
            Self::from_csv(&text, path)
        }
    }

    /// mAP by α for one method, as a plot-ready series.
    pub fn curve(&self, method: &str, n_bits: usize, k: usize) -> Vec<(f64, f64)> {
        let mut pts: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
        for r in self
            .rows
            .iter()
            .filter(|r| r.method == method && r.n_bits == n_bits && r.k == k)
        {
            pts.insert(r.alpha.to_bits(), (r.alpha, r.map));
        }
        let mut v: Vec<(f64, f64)> = pts.into_values().collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    }
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}
