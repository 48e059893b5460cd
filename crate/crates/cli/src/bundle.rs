//! Scenario orchestration and the on-disk report bundle.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use colombeau_wave::experiments::{run_scenario, Check, EvidenceRow, ScenarioResult, ScenarioSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::exit;
use crate::plot;

pub const MANIFEST: &str = "manifest.json";
pub const RUNTIMES: &str = "runtimes.json";
pub const MANIFEST_VERSION: u32 = 1;

/// Fixed CSV header.
pub const CSV_COLUMNS: [&str; 9] =
    ["scenario", "epsilon", "region_or_cell", "alpha", "norm_kind", "norm_value", "fit_slope", "fit_r2", "verdict"];

#[derive(Debug, Clone)]
pub enum Outcome {
    Done(Box<ScenarioResult>),
    Error(String),
}

#[derive(Debug, Clone)]
pub struct SuiteRun {
    pub outcomes: Vec<(ScenarioSpec, Outcome)>,
}

impl SuiteRun {
    /// 2 if any scenario errored, else 1 if any failed, else 0.
    pub fn exit_code(&self) -> i32 {
        let mut code = exit::PASS;
        for (_, o) in &self.outcomes {
            match o {
                Outcome::Error(_) => return exit::ERROR,
                Outcome::Done(r) if !r.passed => code = exit::FAIL,
                Outcome::Done(_) => {}
            }
        }
        code
    }
}

/// Runs every scenario on a pool of `parallelism` threads; results keep the
/// configuration order and a failing scenario does not stop the others.
pub fn run_suite(cfg: &RunConfig) -> Result<SuiteRun, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| CliError::Config(format!("parallelism: {e}")))?;
    let outcomes = pool.install(|| {
        cfg.scenarios
            .par_iter()
            .map(|s| {
                let o = match run_scenario(s) {
                    Ok(r) => Outcome::Done(Box::new(r)),
                    Err(e) => Outcome::Error(e.to_string()),
                };
                (s.clone(), o)
            })
            .collect()
    });
    Ok(SuiteRun { outcomes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyOrder {
    pub norm_kind: String,
    pub region_or_cell: String,
    pub alpha: String,
    pub order: f64,
    pub r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub id: String,
    pub label: String,
    /// `pass`, `fail` or `error`.
    pub status: String,
    pub error: Option<String>,
    pub csv: Option<String>,
    pub checks: Vec<Check>,
    pub key_orders: Vec<KeyOrder>,
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub exit_code: i32,
    pub scenarios: Vec<ScenarioEntry>,
    /// Every emitted file except the manifest itself and the runtime sidecar.
    pub files: Vec<FileEntry>,
    /// Resolved configuration.
    pub config: serde_json::Value,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::Manifest(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Manifest(format!("corrupt {}: {e}", path.display())))
    }

    /// Recomputes every digest.
    pub fn verify(&self, dir: &Path) -> Result<(), CliError> {
        for f in &self.files {
            let bytes = fs::read(dir.join(&f.path))
                .map_err(|e| CliError::Manifest(format!("listed file {} unreadable: {e}", f.path)))?;
            let digest = sha256_hex(&bytes);
            if digest != f.sha256 {
                return Err(CliError::Manifest(format!(
                    "digest mismatch for {}: manifest {} but file {}",
                    f.path, f.sha256, digest
                )));
            }
        }
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Write-then-rename so readers never see partial files.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV bytes with the fixed header.
pub fn csv_bytes(rows: &[EvidenceRow]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            opt(r.epsilon),
            r.region_or_cell.clone(),
            r.alpha.clone(),
            r.norm_kind.clone(),
            r.norm_value.to_string(),
            opt(r.fit_slope),
            opt(r.fit_r2),
            r.verdict.clone(),
        ])?;
    }
    w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))
}

fn key_orders(rows: &[EvidenceRow]) -> Vec<KeyOrder> {
    rows.iter()
        .filter(|r| r.epsilon.is_none() && !r.region_or_cell.starts_with('['))
        .filter_map(|r| {
            r.fit_slope.map(|order| KeyOrder {
                norm_kind: r.norm_kind.clone(),
                region_or_cell: r.region_or_cell.clone(),
                alpha: r.alpha.clone(),
                order,
                r2: r.fit_r2,
            })
        })
        .take(6)
        .collect()
}

/// Writes CSVs, optional SVGs, the manifest and the runtime sidecar.
pub fn write_bundle(dir: &Path, cfg: &RunConfig, run: &SuiteRun, plots: bool) -> Result<Manifest, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut used: HashMap<String, usize> = HashMap::new();
    let mut files = Vec::new();
    let mut entries = Vec::new();
    let mut runtimes = BTreeMap::new();
    for (spec, outcome) in &run.outcomes {
        let id = spec.id.as_str().to_string();
        let n = used.entry(id.clone()).or_insert(0);
        let stem = if *n == 0 { id.clone() } else { format!("{id}_{n}") };
        *n += 1;
        let entry = match outcome {
            Outcome::Done(r) => {
                let csv_name = format!("{stem}.csv");
                let bytes = csv_bytes(&r.rows)?;
                write_atomic(&dir.join(&csv_name), &bytes)?;
                files.push(FileEntry { path: csv_name.clone(), sha256: sha256_hex(&bytes) });
                if plots {
                    for (name, svg) in plot::plots_for(&stem, r) {
                        write_atomic(&dir.join(&name), svg.as_bytes())?;
                        files.push(FileEntry { path: name, sha256: sha256_hex(svg.as_bytes()) });
                    }
                }
                runtimes.insert(stem.clone(), r.runtime_s);
                ScenarioEntry {
                    id,
                    label: r.label.clone(),
                    status: if r.passed { "pass" } else { "fail" }.into(),
                    error: None,
                    csv: Some(csv_name),
                    checks: r.checks.clone(),
                    key_orders: key_orders(&r.rows),
                    metadata: r.metadata.clone(),
                }
            }
            Outcome::Error(msg) => ScenarioEntry {
                id,
                label: spec.label.clone(),
                status: "error".into(),
                error: Some(msg.clone()),
                csv: None,
                checks: Vec::new(),
                key_orders: Vec::new(),
                metadata: BTreeMap::new(),
            },
        };
        entries.push(entry);
    }
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        exit_code: run.exit_code(),
        scenarios: entries,
        files,
        config: serde_json::json!({
            "scenarios": cfg.scenarios,
            "parallelism": cfg.parallelism,
            "seed": cfg.seed,
        }),
    };
    let text = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Manifest(e.to_string()))?;
    write_atomic(&dir.join(MANIFEST), &text)?;
    let rt = serde_json::to_vec_pretty(&runtimes).map_err(|e| CliError::Manifest(e.to_string()))?;
    write_atomic(&dir.join(RUNTIMES), &rt)?;
    Ok(manifest)
}

/// Paths of the CSVs listed in a manifest.
pub fn csv_paths(dir: &Path, m: &Manifest) -> Vec<PathBuf> {
    m.files.iter().filter(|f| f.path.ends_with(".csv")).map(|f| dir.join(&f.path)).collect()
}
