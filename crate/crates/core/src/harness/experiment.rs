use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engines::{EngineConfig, RunRecord};
use crate::error::{Error, Result};
use crate::instance::{load_instance, Instance};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RECORDS_DIR: &str = "records";

/// A named engine configuration; the name identifies the optimizer in
/// comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedConfig {
    pub name: String,
    pub config: EngineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    /// Instance files; each instance is labelled by its file stem.
    pub instances: Vec<PathBuf>,
    pub configs: Vec<NamedConfig>,
    /// Runs per (instance, config) cell; run `i` uses seed `master_seed + i`.
    pub seeds: u64,
    #[serde(default)]
    pub master_seed: u64,
    /// Overrides every config's FFE budget when set.
    #[serde(default)]
    pub budget: Option<u64>,
    pub output_dir: PathBuf,
}

impl ExperimentPlan {
    /// Reads a plan; relative instance and output paths are taken relative
    /// to the plan file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut plan: ExperimentPlan = serde_json::from_str(&text).map_err(|e| Error::Parse {
            location: format!("{}:{}:{}", path.display(), e.line(), e.column()),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in plan
            .instances
            .iter_mut()
            .chain(std::iter::once(&mut plan.output_dir))
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.instances.is_empty() || self.configs.is_empty() || self.seeds == 0 {
            return Err(Error::validation(
                "a plan needs at least one instance, one config and one seed",
            ));
        }
        let mut names = std::collections::BTreeSet::new();
        for nc in &self.configs {
            if nc.name.is_empty() || !names.insert(nc.name.as_str()) {
                return Err(Error::validation(format!(
                    "config names must be unique and non-empty ({:?})",
                    nc.name
                )));
            }
            self.effective(&nc.config, 0).validate()?;
        }
        let mut labels = std::collections::BTreeSet::new();
        for p in &self.instances {
            if !labels.insert(instance_label(p)) {
                return Err(Error::validation(format!(
                    "instance label {:?} is used twice",
                    instance_label(p)
                )));
            }
        }
        Ok(())
    }

    /// Config of one run: seed and optional budget applied.
    pub fn effective(&self, cfg: &EngineConfig, seed_index: u64) -> EngineConfig {
        let mut c = cfg.clone();
        c.seed = self.master_seed + seed_index;
        if let Some(b) = self.budget {
            c.ffe_budget = b;
        }
        c
    }

    /// Stable digest of the plan.
    pub fn hash(&self) -> String {
        sha256_hex(
            serde_json::to_string(self)
                .expect("plans serialise")
                .as_bytes(),
        )
    }
}

pub fn instance_label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub instance: String,
    pub optimizer: String,
    pub seed: u64,
    pub status: CellStatus,
    /// Record path relative to the output directory.
    pub record: Option<PathBuf>,
    pub sha256: Option<String>,
    pub ffe_used: Option<u64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub plan_hash: String,
    pub plan: ExperimentPlan,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            location: format!("{}:{}:{}", path.display(), e.line(), e.column()),
            message: e.to_string(),
        })
    }

    pub fn failures(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.status == CellStatus::Failed)
            .count()
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Runs every (instance, config, seed) cell on up to `workers` threads,
/// writes one record file per successful run and a manifest listing every
/// cell. A failing cell is recorded and does not stop the others.
pub fn run_experiment(plan: &ExperimentPlan, workers: usize) -> Result<Manifest> {
    plan.validate()?;
    let records_dir = plan.output_dir.join(RECORDS_DIR);
    std::fs::create_dir_all(&records_dir).map_err(|e| Error::io(&records_dir, e))?;

    let instances: BTreeMap<String, std::result::Result<Instance, String>> = plan
        .instances
        .iter()
        .map(|p| {
            (
                instance_label(p),
                load_instance(p).map_err(|e| e.to_string()),
            )
        })
        .collect();

    let mut cells = Vec::new();
    for path in &plan.instances {
        for nc in &plan.configs {
            for i in 0..plan.seeds {
                cells.push((instance_label(path), nc, i));
            }
        }
    }

    let run_cell = |(label, nc, i): &(String, &NamedConfig, u64)| -> ManifestEntry {
        let cfg = plan.effective(&nc.config, *i);
        let mut entry = ManifestEntry {
            instance: label.clone(),
            optimizer: nc.name.clone(),
            seed: cfg.seed,
            status: CellStatus::Failed,
            record: None,
            sha256: None,
            ffe_used: None,
            error: None,
        };
        let outcome = instances[label]
            .as_ref()
            .map_err(|e| e.clone())
            .and_then(|inst| cfg.run(inst).map_err(|e| e.to_string()))
            .and_then(|rec: RunRecord| {
                let rel = PathBuf::from(RECORDS_DIR).join(format!(
                    "{}__{}__s{}.json",
                    file_safe(label),
                    file_safe(&nc.name),
                    cfg.seed
                ));
                let json = rec.to_json();
                let path = plan.output_dir.join(&rel);
                std::fs::write(&path, &json)
                    .map_err(|e| Error::io(&path, e).to_string())
                    .map(|_| (rel, sha256_hex(json.as_bytes()), rec.ffe_used))
            });
        match outcome {
            Ok((rel, hash, used)) => {
                entry.status = CellStatus::Ok;
                entry.record = Some(rel);
                entry.sha256 = Some(hash);
                entry.ffe_used = Some(used);
            }
            Err(msg) => {
                log::warn!("cell {label}/{}/seed {} failed: {msg}", nc.name, cfg.seed);
                entry.error = Some(msg);
            }
        }
        entry
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::validation(format!("cannot start worker pool: {e}")))?;
    let entries: Vec<ManifestEntry> = pool.install(|| cells.par_iter().map(run_cell).collect());

    let manifest = Manifest {
        plan_hash: plan.hash(),
        plan: plan.clone(),
        entries,
    };
    let path = plan.output_dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
