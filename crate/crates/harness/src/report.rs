use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Computed and recorded without a claim attached.
    Reported,
    Skipped,
    /// Survived re-verification above the flagging threshold.
    Candidate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub id: String,
    pub verdict: Verdict,
    /// Whether a failure here contradicts a proved statement.
    pub asserted: bool,
    /// Identifiers of the bodies or functions involved.
    pub inputs: Vec<String>,
    pub values: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl CaseRecord {
    pub fn new(id: impl Into<String>, verdict: Verdict, asserted: bool) -> Self {
        Self { id: id.into(), verdict, asserted, inputs: vec![], values: BTreeMap::new(), witness: None, diagnostic: None }
    }

    pub fn skipped(id: impl Into<String>, why: impl Into<String>) -> Self {
        Self { diagnostic: Some(why.into()), ..Self::new(id, Verdict::Skipped, false) }
    }

    /// Pass when `ok`, otherwise fail.
    pub fn check(id: impl Into<String>, ok: bool, asserted: bool) -> Self {
        Self::new(id, if ok { Verdict::Pass } else { Verdict::Fail }, asserted)
    }

    /// Records a value; non-finite ones (empty folds) are left out because
    /// JSON cannot carry them.
    pub fn value(mut self, key: &str, v: f64) -> Self {
        if v.is_finite() {
            self.values.insert(key.to_string(), v);
        }
        self
    }

    pub fn inputs(mut self, inputs: Vec<String>) -> Self {
        self.inputs = inputs;
        self
    }

    pub fn witness(mut self, w: impl Serialize) -> Self {
        self.witness = serde_json::to_value(w).ok();
        self
    }

    pub fn diagnostic(mut self, d: impl Into<String>) -> Self {
        self.diagnostic = Some(d.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub cases: usize,
    pub passed: usize,
    pub failed: usize,
    pub asserted_failures: usize,
    pub skipped: usize,
    pub candidates: usize,
    /// Campaign-level aggregates such as the empirical maximum ratio.
    pub aggregates: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
}

impl Environment {
    pub fn current() -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            threads: rayon::current_num_threads(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    /// Everything needed to recompute the verdicts.
    pub config: Value,
    pub cases: Vec<CaseRecord>,
    pub summary: Summary,
    pub environment: Environment,
    /// SHA-256 of the report with `hash`, `timestamp` and `wall_clock_s` blanked.
    pub hash: String,
    pub timestamp: u64,
    pub wall_clock_s: f64,
}

/// Process exit codes of the CLI.
pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_THEOREM_VIOLATION: i32 = 2;
pub const EXIT_CANDIDATE: i32 = 3;

impl ExperimentReport {
    pub fn build(experiment: &str, config: Value, cases: Vec<CaseRecord>, mut aggregates: BTreeMap<String, f64>, started: Instant) -> Self {
        aggregates.retain(|_, v| v.is_finite());
        let count = |v: Verdict| cases.iter().filter(|c| c.verdict == v).count();
        let summary = Summary {
            cases: cases.len(),
            passed: count(Verdict::Pass),
            failed: count(Verdict::Fail),
            asserted_failures: cases.iter().filter(|c| c.asserted && c.verdict == Verdict::Fail).count(),
            skipped: count(Verdict::Skipped),
            candidates: count(Verdict::Candidate),
            aggregates,
        };
        let mut r = Self {
            experiment: experiment.to_string(),
            config,
            cases,
            summary,
            environment: Environment::current(),
            hash: String::new(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            wall_clock_s: started.elapsed().as_secs_f64(),
        };
        r.hash = r.content_hash();
        r
    }

    pub fn content_hash(&self) -> String {
        let blank = Self { hash: String::new(), timestamp: 0, wall_clock_s: 0.0, ..self.clone() };
        let bytes = serde_json::to_vec(&blank).expect("report serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn exit_code(&self) -> i32 {
        if self.summary.asserted_failures > 0 {
            EXIT_THEOREM_VIOLATION
        } else if self.summary.candidates > 0 {
            EXIT_CANDIDATE
        } else {
            EXIT_OK
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per case: id, verdict, asserted, then every value key.
    pub fn to_csv(&self) -> Result<String> {
        let keys: BTreeSet<&String> = self.cases.iter().flat_map(|c| c.values.keys()).collect();
        let mut w = csv::Writer::from_writer(vec![]);
        let mut header = vec!["id".to_string(), "verdict".into(), "asserted".into()];
        header.extend(keys.iter().map(|k| k.to_string()));
        w.write_record(&header)?;
        for c in &self.cases {
            let mut row = vec![c.id.clone(), format!("{:?}", c.verdict).to_lowercase(), c.asserted.to_string()];
            row.extend(keys.iter().map(|k| c.values.get(*k).map(|v| format!("{v:e}")).unwrap_or_default()));
            w.write_record(&row)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }

    /// Writes `<experiment>.json` and `<experiment>.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let json = dir.join(format!("{}.json", self.experiment));
        let table = dir.join(format!("{}.csv", self.experiment));
        std::fs::write(&json, self.to_json())?;
        std::fs::write(&table, self.to_csv()?)?;
        Ok((json, table))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}
