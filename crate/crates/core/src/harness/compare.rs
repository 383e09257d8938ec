use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiment::{CellStatus, Manifest};
use crate::engines::RunRecord;
use crate::error::{Error, Result};
use crate::metrics::{
    hypervolume_2d, igd, joined_rank, normalize, pseudo_optimal_front, rank_table, reference_point,
    wilcoxon_signed_rank, Direction, Front, RankTable, WilcoxonReport, MIN_PAIRS,
};
use crate::objectives::ObjectivePoint;

pub const DEFAULT_ALPHA: f64 = 0.05;

/// The front of one run, labelled by its comparison cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub instance: String,
    pub optimizer: String,
    pub seed: u64,
    pub front: Vec<ObjectivePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSummary {
    pub optimizer: String,
    /// Run seeds, ascending; `hv[i]` and `igd[i]` belong to `seeds[i]`.
    pub seeds: Vec<u64>,
    pub hv: Vec<f64>,
    pub igd: Vec<f64>,
    pub mean_hv: f64,
    pub mean_igd: f64,
    pub normalized_hv: f64,
    pub normalized_igd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceComparison {
    pub instance: String,
    pub reference_point: ObjectivePoint,
    pub pseudo_optimal_front: Front,
    pub optimizers: Vec<OptimizerSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub instance: String,
    pub hv: Option<WilcoxonReport>,
    pub igd: Option<WilcoxonReport>,
    /// Why no test was run.
    pub note: Option<String>,
}

/// Instance counts where `a` has the better / worse mean than `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub a: String,
    pub b: String,
    pub hv_better: usize,
    pub hv_worse: usize,
    pub igd_better: usize,
    pub igd_worse: usize,
    pub tests: Vec<PairTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub alpha: f64,
    pub optimizers: Vec<String>,
    pub instances: Vec<String>,
    pub per_instance: Vec<InstanceComparison>,
    pub hv_ranks: RankTable,
    pub igd_ranks: RankTable,
    pub joined_rank: Vec<f64>,
    pub pairs: Vec<PairComparison>,
}

impl ComparisonReport {
    pub fn instance(&self, name: &str) -> Option<&InstanceComparison> {
        self.per_instance.iter().find(|i| i.instance == name)
    }

    pub fn pair(&self, a: &str, b: &str) -> Option<&PairComparison> {
        self.pairs.iter().find(|p| p.a == a && p.b == b)
    }
}

/// Loads an experiment output directory and compares every optimizer on
/// every instance of its plan.
pub fn compare_archive(dir: &Path, alpha: f64) -> Result<ComparisonReport> {
    let manifest = Manifest::load(dir)?;
    let instances: Vec<String> = manifest
        .plan
        .instances
        .iter()
        .map(|p| super::experiment::instance_label(p))
        .collect();
    let optimizers: Vec<String> = manifest
        .plan
        .configs
        .iter()
        .map(|c| c.name.clone())
        .collect();
    let mut runs = Vec::new();
    let mut failed = Vec::new();
    for e in &manifest.entries {
        match (&e.status, &e.record) {
            (CellStatus::Ok, Some(rel)) => {
                let rec = RunRecord::load(&dir.join(rel))?;
                runs.push(RunSummary {
                    instance: e.instance.clone(),
                    optimizer: e.optimizer.clone(),
                    seed: e.seed,
                    front: rec.front_points(),
                });
            }
            _ => failed.push(format!("{}/{}/seed {}", e.instance, e.optimizer, e.seed)),
        }
    }
    if !failed.is_empty() {
        return Err(Error::Coverage(format!(
            "failed cells: {}",
            failed.join(", ")
        )));
    }
    compare_with(&runs, &instances, &optimizers, alpha)
}

/// Compares the optimizers and instances present in `runs`.
pub fn compare_runs(runs: &[RunSummary], alpha: f64) -> Result<ComparisonReport> {
    let instances: Vec<String> = runs
        .iter()
        .map(|r| r.instance.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let optimizers: Vec<String> = runs
        .iter()
        .map(|r| r.optimizer.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    compare_with(runs, &instances, &optimizers, alpha)
}

/// Full comparison over the given instance and optimizer lists. Every
/// optimizer must have runs on every instance, with the same seeds.
pub fn compare_with(
    runs: &[RunSummary],
    instances: &[String],
    optimizers: &[String],
    alpha: f64,
) -> Result<ComparisonReport> {
    if instances.is_empty() || optimizers.is_empty() {
        return Err(Error::Coverage("nothing to compare".into()));
    }
    // cells[instance][optimizer][seed] = front
    let mut cells: BTreeMap<&str, BTreeMap<&str, BTreeMap<u64, &[ObjectivePoint]>>> =
        BTreeMap::new();
    for r in runs {
        if r.front.is_empty() {
            return Err(Error::contract(format!(
                "run {}/{}/seed {} has an empty front",
                r.instance, r.optimizer, r.seed
            )));
        }
        cells
            .entry(&r.instance)
            .or_default()
            .entry(&r.optimizer)
            .or_default()
            .insert(r.seed, &r.front);
    }
    check_coverage(&cells, instances, optimizers)?;

    let mut per_instance = Vec::with_capacity(instances.len());
    for inst in instances {
        let by_opt = &cells[inst.as_str()];
        let all: Vec<&[ObjectivePoint]> =
            by_opt.values().flat_map(|s| s.values().copied()).collect();
        let reference = reference_point(all.iter().copied())?;
        let fronts: Vec<Front> = all
            .iter()
            .map(|f| Front::from_points(f.iter().copied()))
            .collect();
        let pseudo = pseudo_optimal_front(&fronts)?;
        let mut summaries = Vec::with_capacity(optimizers.len());
        for opt in optimizers {
            let seeds = &by_opt[opt.as_str()];
            let mut hv = Vec::with_capacity(seeds.len());
            let mut ig = Vec::with_capacity(seeds.len());
            for f in seeds.values() {
                hv.push(hypervolume_2d(f, reference)?);
                ig.push(igd(&pseudo, f)?);
            }
            summaries.push(OptimizerSummary {
                optimizer: opt.clone(),
                seeds: seeds.keys().copied().collect(),
                mean_hv: mean(&hv),
                mean_igd: mean(&ig),
                hv,
                igd: ig,
                normalized_hv: 0.0,
                normalized_igd: 0.0,
            });
        }
        let (hv_lo, hv_hi) = bounds(summaries.iter().map(|s| s.mean_hv));
        let (ig_lo, ig_hi) = bounds(summaries.iter().map(|s| s.mean_igd));
        for s in &mut summaries {
            s.normalized_hv = normalize(s.mean_hv, hv_lo, hv_hi)?;
            s.normalized_igd = normalize(s.mean_igd, ig_lo, ig_hi)?;
        }
        per_instance.push(InstanceComparison {
            instance: inst.clone(),
            reference_point: reference,
            pseudo_optimal_front: pseudo,
            optimizers: summaries,
        });
    }

    let matrix = |pick: fn(&OptimizerSummary) -> f64| -> Vec<Vec<f64>> {
        (0..optimizers.len())
            .map(|o| {
                per_instance
                    .iter()
                    .map(|ic| pick(&ic.optimizers[o]))
                    .collect()
            })
            .collect()
    };
    let hv_ranks = rank_table(optimizers, &matrix(|s| s.mean_hv), Direction::Maximize)?;
    let igd_ranks = rank_table(optimizers, &matrix(|s| s.mean_igd), Direction::Minimize)?;
    let joined = joined_rank(&igd_ranks, &hv_ranks)?;

    let mut pairs = Vec::new();
    for a in 0..optimizers.len() {
        for b in 0..optimizers.len() {
            if a == b {
                continue;
            }
            let mut pc = PairComparison {
                a: optimizers[a].clone(),
                b: optimizers[b].clone(),
                hv_better: 0,
                hv_worse: 0,
                igd_better: 0,
                igd_worse: 0,
                tests: Vec::with_capacity(instances.len()),
            };
            for ic in &per_instance {
                let (sa, sb) = (&ic.optimizers[a], &ic.optimizers[b]);
                pc.hv_better += usize::from(sa.mean_hv > sb.mean_hv);
                pc.hv_worse += usize::from(sa.mean_hv < sb.mean_hv);
                pc.igd_better += usize::from(sa.mean_igd < sb.mean_igd);
                pc.igd_worse += usize::from(sa.mean_igd > sb.mean_igd);
                let mut test = PairTest {
                    instance: ic.instance.clone(),
                    hv: None,
                    igd: None,
                    note: None,
                };
                if sa.seeds.len() >= MIN_PAIRS {
                    test.hv = Some(wilcoxon_signed_rank(&sa.hv, &sb.hv, alpha)?);
                    test.igd = Some(wilcoxon_signed_rank(&sa.igd, &sb.igd, alpha)?);
                } else {
                    test.note = Some(format!(
                        "{} paired runs; the signed-rank test needs {MIN_PAIRS}",
                        sa.seeds.len()
                    ));
                }
                pc.tests.push(test);
            }
            pairs.push(pc);
        }
    }

    Ok(ComparisonReport {
        alpha,
        optimizers: optimizers.to_vec(),
        instances: instances.to_vec(),
        per_instance,
        hv_ranks,
        igd_ranks,
        joined_rank: joined,
        pairs,
    })
}

type Cells<'a> = BTreeMap<&'a str, BTreeMap<&'a str, BTreeMap<u64, &'a [ObjectivePoint]>>>;

fn check_coverage(cells: &Cells<'_>, instances: &[String], optimizers: &[String]) -> Result<()> {
    let mut missing = Vec::new();
    for inst in instances {
        let by_opt = cells.get(inst.as_str());
        let seeds: BTreeSet<u64> = by_opt
            .map(|m| m.values().flat_map(|s| s.keys().copied()).collect())
            .unwrap_or_default();
        for opt in optimizers {
            match by_opt.and_then(|m| m.get(opt.as_str())) {
                None => missing.push(format!("{inst}/{opt}")),
                Some(runs) => {
                    for s in seeds.iter().filter(|s| !runs.contains_key(s)) {
                        missing.push(format!("{inst}/{opt}/seed {s}"));
                    }
                }
            }
        }
    }
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Coverage(format!(
            "missing cells: {}",
            missing.join(", ")
        )))
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}
