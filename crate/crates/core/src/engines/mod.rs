//! NSGA-II and MOEA/D over the shared operator kit.
//!
//! Both engines evaluate through one [`FfeCounter`] per run and never start
//! an evaluation past the budget. A run is sequential and deterministic in
//! its seed; results are packaged as a [`RunRecord`].

mod moead;
mod nsga2;
mod sorting;

pub use moead::{moead_neighbourhoods, run_moead, run_moead_observed, tchebycheff, weight_vectors};
pub use nsga2::{run_nsga2, run_nsga2_observed};
pub use sorting::{crowding_distance, nondominated_sort};

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genotype::Genotype;
use crate::instance::Instance;
use crate::metrics::Front;
use crate::objectives::{evaluate, FfeCounter, ObjectivePoint, TelMode};
use crate::operators::{EventLog, OperatorConfig, MASK_SWAP_PROBABILITY, MUTATION_GATE};

pub const DEFAULT_FFE_BUDGET: u64 = 100_000;
pub const DEFAULT_POP_SIZE: usize = 100;
/// Candidates drawn per NSGA-II tournament.
pub const TOURNAMENT_SIZE: usize = 2;

/// Pareto dominance for minimisation.
pub fn dominates(p: &ObjectivePoint, q: &ObjectivePoint) -> bool {
    p.dominates(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EngineKind {
    #[serde(rename = "NSGA-II")]
    Nsga2,
    #[serde(rename = "MOEA/D")]
    Moead,
}

impl EngineKind {
    pub const ALL: &'static [EngineKind] = &[EngineKind::Nsga2, EngineKind::Moead];

    pub fn name(&self) -> &'static str {
        match self {
            EngineKind::Nsga2 => "NSGA-II",
            EngineKind::Moead => "MOEA/D",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nsga-ii" | "nsga2" | "nsgaii" => Ok(EngineKind::Nsga2),
            "moea/d" | "moead" => Ok(EngineKind::Moead),
            _ => Err(Error::validation(format!(
                "unknown engine {s:?}; expected NSGA-II or MOEA/D"
            ))),
        }
    }
}

/// How MOEA/D scalarizes objective vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scalarization {
    /// Tchebycheff on raw objective values.
    #[default]
    Raw,
    /// Tchebycheff after dividing each objective gap by the distance from
    /// the ideal point to the current population's worst value.
    Normalized,
}

impl fmt::Display for Scalarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scalarization::Raw => "raw",
            Scalarization::Normalized => "normalized",
        })
    }
}

impl FromStr for Scalarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Scalarization::Raw),
            "normalized" => Ok(Scalarization::Normalized),
            _ => Err(Error::validation(format!(
                "unknown scalarization {s:?}; expected raw or normalized"
            ))),
        }
    }
}

/// One evaluated feasible genotype.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub genotype: Genotype,
    pub objectives: ObjectivePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    pub engine: EngineKind,
    pub pop_size: usize,
    #[serde(default = "default_budget")]
    pub ffe_budget: u64,
    #[serde(default)]
    pub operators: OperatorConfig,
    /// MOEA/D neighbourhood size; `None` means max(2, ceil(0.1 * pop)).
    #[serde(default)]
    pub moead_neighborhood: Option<usize>,
    #[serde(default)]
    pub moead_scalarization: Scalarization,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tel_mode: TelMode,
}

fn default_budget() -> u64 {
    DEFAULT_FFE_BUDGET
}

impl EngineConfig {
    pub fn new(engine: EngineKind) -> Self {
        Self {
            engine,
            pop_size: DEFAULT_POP_SIZE,
            ffe_budget: DEFAULT_FFE_BUDGET,
            operators: OperatorConfig::default(),
            moead_neighborhood: None,
            moead_scalarization: Scalarization::default(),
            seed: 0,
            tel_mode: TelMode::default(),
        }
    }

    /// Neighbourhood size actually used by MOEA/D.
    pub fn neighbourhood(&self) -> usize {
        self.moead_neighborhood
            .unwrap_or_else(|| 2.max((self.pop_size as f64 * 0.1).ceil() as usize))
            .min(self.pop_size)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 2 {
            return Err(Error::validation(format!(
                "pop_size must be at least 2, got {}",
                self.pop_size
            )));
        }
        if self.ffe_budget < self.pop_size as u64 {
            return Err(Error::validation(format!(
                "ffe_budget {} cannot cover the initial population of {}",
                self.ffe_budget, self.pop_size
            )));
        }
        if let Some(k) = self.moead_neighborhood {
            if k == 0 || k > self.pop_size {
                return Err(Error::validation(format!(
                    "moead_neighborhood must lie in [1, pop_size = {}], got {k}",
                    self.pop_size
                )));
            }
        }
        self.operators.validate()
    }

    pub fn run(&self, inst: &Instance) -> Result<RunRecord> {
        match self.engine {
            EngineKind::Nsga2 => run_nsga2(inst, self),
            EngineKind::Moead => run_moead(inst, self),
        }
    }
}

/// Fixed algorithm constants echoed into every record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConstants {
    pub mutation_gate: f64,
    pub mask_swap_probability: f64,
    pub tournament_size: usize,
    /// Resolved neighbourhood size (MOEA/D only).
    pub moead_neighborhood: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontEntry {
    pub lap: f64,
    pub tel: f64,
    pub genotype: Genotype,
}

/// State after one generation (generation 0 is the initial population).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub generation: u64,
    pub ffe_used: u64,
    /// Size of the current non-dominated set (NSGA-II) or archive (MOEA/D).
    pub front_size: usize,
    pub best_lap: f64,
    pub best_tel: f64,
}

/// Full result of one engine run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: EngineConfig,
    pub constants: RunConstants,
    pub seed: u64,
    pub instance_id: String,
    pub ffe_budget: u64,
    pub ffe_used: u64,
    pub generations: u64,
    pub front: Vec<FrontEntry>,
    pub trace: Vec<TraceEntry>,
    pub events: EventLog,
}

impl RunRecord {
    pub fn front_points(&self) -> Vec<ObjectivePoint> {
        self.front
            .iter()
            .map(|e| ObjectivePoint::new(e.lap, e.tel))
            .collect()
    }

    pub fn pareto_front(&self) -> Front {
        Front::from_points(self.front_points())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run records always serialise")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            location: format!("{}:{}:{}", path.display(), e.line(), e.column()),
            message: e.to_string(),
        })
    }
}

/// Called after every generation with the generation index, FFEs used so
/// far and the current reported set.
pub type Observer<'o> = dyn FnMut(u64, u64, &[Solution]) + 'o;

/// Evaluation wrapper holding the per-run budget.
pub(crate) struct Evaluator<'a> {
    inst: &'a Instance,
    counter: FfeCounter,
    mode: TelMode,
}

impl<'a> Evaluator<'a> {
    pub(crate) fn new(inst: &'a Instance, cfg: &EngineConfig) -> Self {
        Self {
            inst,
            counter: FfeCounter::new(cfg.ffe_budget),
            mode: cfg.tel_mode,
        }
    }

    pub(crate) fn evaluate(&self, genotype: Genotype) -> Result<Solution> {
        let objectives = evaluate(&genotype, self.inst, &self.counter, self.mode)?;
        Ok(Solution {
            genotype,
            objectives,
        })
    }

    pub(crate) fn used(&self) -> u64 {
        self.counter.used()
    }

    pub(crate) fn remaining(&self) -> u64 {
        self.counter.remaining()
    }
}

/// Distinct objective points among `solutions` that no other dominates;
/// the first solution seen keeps each point.
pub(crate) fn nondominated_unique(solutions: &[Solution]) -> Vec<Solution> {
    let mut out: Vec<Solution> = Vec::new();
    for s in solutions {
        insert_nondominated(&mut out, s);
    }
    out
}

/// Archive insertion. Returns whether `s` was added.
pub(crate) fn insert_nondominated(archive: &mut Vec<Solution>, s: &Solution) -> bool {
    if archive
        .iter()
        .any(|a| a.objectives == s.objectives || a.objectives.dominates(&s.objectives))
    {
        return false;
    }
    archive.retain(|a| !s.objectives.dominates(&a.objectives));
    archive.push(s.clone());
    true
}

pub(crate) fn trace_entry(generation: u64, ffe_used: u64, set: &[Solution]) -> TraceEntry {
    TraceEntry {
        generation,
        ffe_used,
        front_size: set.len(),
        best_lap: set
            .iter()
            .map(|s| s.objectives.lap)
            .fold(f64::INFINITY, f64::min),
        best_tel: set
            .iter()
            .map(|s| s.objectives.tel)
            .fold(f64::INFINITY, f64::min),
    }
}

pub(crate) fn build_record(
    inst: &Instance,
    cfg: &EngineConfig,
    ffe_used: u64,
    generations: u64,
    front: &[Solution],
    trace: Vec<TraceEntry>,
    events: EventLog,
) -> RunRecord {
    let mut entries: Vec<FrontEntry> = front
        .iter()
        .map(|s| FrontEntry {
            lap: s.objectives.lap,
            tel: s.objectives.tel,
            genotype: s.genotype.clone(),
        })
        .collect();
    entries.sort_by(|a, b| a.lap.total_cmp(&b.lap).then(a.tel.total_cmp(&b.tel)));
    RunRecord {
        config: cfg.clone(),
        constants: RunConstants {
            mutation_gate: MUTATION_GATE,
            mask_swap_probability: MASK_SWAP_PROBABILITY,
            tournament_size: TOURNAMENT_SIZE,
            moead_neighborhood: (cfg.engine == EngineKind::Moead).then(|| cfg.neighbourhood()),
        },
        seed: cfg.seed,
        instance_id: inst.id(),
        ffe_budget: cfg.ffe_budget,
        ffe_used,
        generations,
        front: entries,
        trace,
        events,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, GeneratorParams};
    use crate::operators::CrossoverKind;

    #[test]
    fn dominance_examples() {
        let p = |a, b| ObjectivePoint::new(a, b);
        assert!(dominates(&p(1.0, 1.0), &p(2.0, 2.0)));
        assert!(!dominates(&p(1.0, 2.0), &p(2.0, 1.0)));
        assert!(!dominates(&p(1.0, 1.0), &p(1.0, 1.0)));
        assert!(dominates(&p(1.0, 1.0), &p(1.0, 2.0)));
    }

    #[test]
    fn engine_names_round_trip() {
        for kind in EngineKind::ALL {
            assert_eq!(kind.name().parse::<EngineKind>().unwrap(), *kind);
        }
        assert_eq!("moead".parse::<EngineKind>().unwrap(), EngineKind::Moead);
        assert!("spea2".parse::<EngineKind>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = EngineConfig::new(EngineKind::Moead);
        cfg.validate().unwrap();
        assert_eq!(cfg.neighbourhood(), 10);
        cfg.pop_size = 5;
        assert_eq!(cfg.neighbourhood(), 2);
        cfg.moead_neighborhood = Some(6);
        assert!(matches!(cfg.validate(), Err(Error::Validation(_))));
        cfg.moead_neighborhood = None;
        cfg.ffe_budget = 4;
        assert!(cfg.validate().is_err());
        cfg.ffe_budget = 5;
        cfg.operators.p_mut = 1.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_json_defaults() {
        let cfg: EngineConfig =
            serde_json::from_str(r#"{"engine": "MOEA/D", "pop_size": 20}"#).unwrap();
        assert_eq!(cfg.ffe_budget, DEFAULT_FFE_BUDGET);
        assert_eq!(cfg.operators, OperatorConfig::default());
        assert!(serde_json::from_str::<EngineConfig>(
            r#"{"engine": "MOEA/D", "pop_size": 2, "x": 1}"#
        )
        .is_err());
    }

    #[test]
    fn record_round_trips_through_json() {
        let inst = generate_instance(3, 8, 8, &GeneratorParams::default()).unwrap();
        let mut cfg = EngineConfig::new(EngineKind::Nsga2);
        cfg.pop_size = 8;
        cfg.ffe_budget = 40;
        cfg.operators.crossover = CrossoverKind::Drc;
        let rec = cfg.run(&inst).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        rec.save(&path).unwrap();
        assert_eq!(RunRecord::load(&path).unwrap(), rec);
    }

    #[test]
    fn archive_insertion() {
        let s = |a: f64, b: f64| Solution {
            genotype: Genotype::zeros(1),
            objectives: ObjectivePoint::new(a, b),
        };
        let mut arch = Vec::new();
        assert!(insert_nondominated(&mut arch, &s(2.0, 2.0)));
        assert!(!insert_nondominated(&mut arch, &s(2.0, 2.0)));
        assert!(!insert_nondominated(&mut arch, &s(3.0, 3.0)));
        assert!(insert_nondominated(&mut arch, &s(1.0, 3.0)));
        assert!(insert_nondominated(&mut arch, &s(1.0, 1.0)));
        assert_eq!(arch.len(), 1);
    }
}
