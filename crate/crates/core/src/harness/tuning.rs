use serde::{Deserialize, Serialize};

use crate::engines::EngineConfig;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::metrics::{hypervolume_2d, reference_point};
use crate::objectives::ObjectivePoint;
use crate::operators::RandomStream;

/// Population step and iteration count of the tuning climb.
pub const POP_STEP: f64 = 40.0;
/// Probability step of the tuning climb.
pub const PROB_STEP: f64 = 0.05;
pub const TUNE_ITERATIONS: usize = 10;
pub const TUNE_SEEDS: usize = 5;
pub const MIN_POP: f64 = 2.0;
/// Lower clamp for tuned probabilities, which must stay above zero.
pub const MIN_PROB: f64 = 0.01;

/// Admissible range of a tuned value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Guards {
    pub min: f64,
    pub max: f64,
    /// Round proposals to whole numbers.
    pub integer: bool,
}

impl Guards {
    pub fn apply(&self, v: f64) -> f64 {
        let v = if self.integer { v.round() } else { v };
        v.clamp(self.min, self.max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Step {
    #[serde(rename = "+")]
    Up,
    #[serde(rename = "-")]
    Down,
}

/// One evaluation of the climb.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneStep {
    pub value: f64,
    pub score: f64,
    /// Strictly better than the incumbent (ties keep the incumbent).
    pub accepted: bool,
    /// Step size and direction used to reach `value`; `None` for the start.
    pub step: Option<f64>,
    pub direction: Option<Step>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best: f64,
    pub best_score: f64,
    pub trace: Vec<TuneStep>,
}

/// Hill climb on one scalar. Evaluates `start`, then moves the incumbent by
/// `step` in the current direction each iteration. A worse or equal score
/// flips the direction; a flip from down to up halves the step first.
pub fn tune_parameter(
    objective: impl FnMut(f64) -> Result<f64>,
    start: f64,
    step: f64,
    iterations: usize,
    guards: Guards,
) -> Result<TuneResult> {
    tune_parameter_from(objective, start, None, step, iterations, guards)
}

/// As [`tune_parameter`], reusing `start_score` when the start is already
/// evaluated.
pub fn tune_parameter_from(
    mut objective: impl FnMut(f64) -> Result<f64>,
    start: f64,
    start_score: Option<f64>,
    mut step: f64,
    iterations: usize,
    guards: Guards,
) -> Result<TuneResult> {
    if iterations == 0 || !(step > 0.0) {
        return Err(Error::contract(format!(
            "tuning needs iterations >= 1 and step > 0 (got {iterations}, {step})"
        )));
    }
    let mut best = guards.apply(start);
    let mut trace = Vec::with_capacity(iterations + 1);
    let mut best_score = match start_score {
        Some(s) => s,
        None => {
            let s = objective(best)?;
            trace.push(TuneStep {
                value: best,
                score: s,
                accepted: true,
                step: None,
                direction: None,
            });
            s
        }
    };
    let mut direction = Step::Up;
    for _ in 0..iterations {
        let raw = match direction {
            Step::Up => best + step,
            Step::Down => best - step,
        };
        let value = guards.apply(raw);
        let score = objective(value)?;
        let accepted = score > best_score;
        trace.push(TuneStep {
            value,
            score,
            accepted,
            step: Some(step),
            direction: Some(direction),
        });
        if accepted {
            best = value;
            best_score = score;
        } else {
            direction = match direction {
                Step::Up => Step::Down,
                Step::Down => {
                    step /= 2.0;
                    Step::Up
                }
            };
        }
    }
    Ok(TuneResult {
        best,
        best_score,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneOptions {
    pub iterations: usize,
    pub seeds: usize,
    pub master_seed: u64,
    pub max_pop: usize,
    /// Starting (p_cross, p_mut) pairs, tried in order.
    pub starts: [(f64, f64); 2],
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self {
            iterations: TUNE_ITERATIONS,
            seeds: TUNE_SEEDS,
            master_seed: 0,
            max_pop: 1000,
            starts: [(0.5, 0.5), (0.9, 0.1)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterTrace {
    pub parameter: String,
    pub result: TuneResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartReport {
    pub p_cross: f64,
    pub p_mut: f64,
    pub config: EngineConfig,
    pub score: f64,
    pub parameters: Vec<ParameterTrace>,
}

impl StartReport {
    /// Number of scored configurations in this start.
    pub fn evaluations(&self) -> usize {
        self.parameters.iter().map(|p| p.result.trace.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub best: EngineConfig,
    pub best_score: f64,
    pub seeds: Vec<u64>,
    /// Per-instance HV reference point of the session.
    pub reference_points: Vec<ObjectivePoint>,
    pub starts: Vec<StartReport>,
}

/// Seeds of a tuning session, derived from the master seed.
pub fn tuning_seeds(master: u64, count: usize) -> Vec<u64> {
    let mut rng = RandomStream::new(master);
    (0..count).map(|_| rng.child_seed()).collect()
}

/// HV of the points inside the box bounded by `reference`; points outside
/// it add nothing.
fn clipped_hv(front: &[ObjectivePoint], reference: ObjectivePoint) -> f64 {
    let inside: Vec<ObjectivePoint> = front
        .iter()
        .copied()
        .filter(|p| p.lap <= reference.lap && p.tel <= reference.tel)
        .collect();
    hypervolume_2d(&inside, reference).expect("points are inside the box")
}

struct Session<'a> {
    instances: &'a [Instance],
    seeds: Vec<u64>,
    references: Option<Vec<ObjectivePoint>>,
}

impl Session<'_> {
    /// Mean HV over instances and seeds. The first call fixes each
    /// instance's reference point from its pooled fronts.
    fn score(&mut self, cfg: &EngineConfig) -> Result<f64> {
        let mut fronts: Vec<Vec<Vec<ObjectivePoint>>> = Vec::with_capacity(self.instances.len());
        for inst in self.instances {
            let mut per_seed = Vec::with_capacity(self.seeds.len());
            for &seed in &self.seeds {
                let mut c = cfg.clone();
                c.seed = seed;
                per_seed.push(c.run(inst)?.front_points());
            }
            fronts.push(per_seed);
        }
        if self.references.is_none() {
            let refs = fronts
                .iter()
                .map(|per_seed| reference_point(per_seed.iter().map(|f| f.as_slice())))
                .collect::<Result<Vec<_>>>()?;
            self.references = Some(refs);
        }
        let refs = self.references.as_ref().expect("set above");
        let mut total = 0.0;
        let mut count = 0;
        for (per_seed, &r) in fronts.iter().zip(refs) {
            for f in per_seed {
                total += clipped_hv(f, r);
                count += 1;
            }
        }
        Ok(total / count as f64)
    }
}

/// Tunes population size, then p_cross, then p_mut from each start point,
/// scoring by mean HV; returns the better start (the first on ties).
pub fn tune_config(
    instances: &[Instance],
    base: &EngineConfig,
    opts: &TuneOptions,
) -> Result<TuneReport> {
    base.validate()?;
    if instances.is_empty() || opts.seeds == 0 {
        return Err(Error::validation(
            "tuning needs at least one instance and one seed",
        ));
    }
    let mut session = Session {
        instances,
        seeds: tuning_seeds(opts.master_seed, opts.seeds),
        references: None,
    };
    let max_pop = (opts.max_pop as u64).min(base.ffe_budget) as f64;
    let pop_guard = Guards {
        min: MIN_POP,
        max: max_pop.max(MIN_POP),
        integer: true,
    };
    let prob_guard = Guards {
        min: MIN_PROB,
        max: 1.0,
        integer: false,
    };

    let mut starts = Vec::with_capacity(opts.starts.len());
    for &(p_cross, p_mut) in &opts.starts {
        let mut cfg = base.clone();
        cfg.operators.p_cross = p_cross;
        cfg.operators.p_mut = p_mut;
        let mut parameters = Vec::with_capacity(3);
        let mut score: Option<f64> = None;

        let with_pop = |cfg: &EngineConfig, v: f64| {
            let mut c = cfg.clone();
            c.pop_size = v as usize;
            if let Some(k) = c.moead_neighborhood {
                c.moead_neighborhood = Some(k.min(c.pop_size));
            }
            c
        };
        let r = tune_parameter_from(
            |v| session.score(&with_pop(&cfg, v)),
            cfg.pop_size as f64,
            score,
            POP_STEP,
            opts.iterations,
            pop_guard,
        )?;
        cfg = with_pop(&cfg, r.best);
        score = Some(r.best_score);
        parameters.push(ParameterTrace {
            parameter: "pop_size".into(),
            result: r,
        });

        for name in ["p_cross", "p_mut"] {
            let set = |cfg: &EngineConfig, v: f64| {
                let mut c = cfg.clone();
                if name == "p_cross" {
                    c.operators.p_cross = v;
                } else {
                    c.operators.p_mut = v;
                }
                c
            };
            let start = if name == "p_cross" {
                cfg.operators.p_cross
            } else {
                cfg.operators.p_mut
            };
            let r = tune_parameter_from(
                |v| session.score(&set(&cfg, v)),
                start,
                score,
                PROB_STEP,
                opts.iterations,
                prob_guard,
            )?;
            cfg = set(&cfg, r.best);
            score = Some(r.best_score);
            parameters.push(ParameterTrace {
                parameter: name.into(),
                result: r,
            });
        }
        starts.push(StartReport {
            p_cross,
            p_mut,
            config: cfg,
            score: score.expect("scored"),
            parameters,
        });
    }

    let mut best = 0;
    for (i, s) in starts.iter().enumerate() {
        if s.score > starts[best].score {
            best = i;
        }
    }
    Ok(TuneReport {
        best: starts[best].config.clone(),
        best_score: starts[best].score,
        seeds: session.seeds,
        reference_points: session.references.unwrap_or_default(),
        starts,
    })
}
