use crate::error::Result;
use crate::instance::Instance;
use crate::objectives::ObjectivePoint;
use crate::operators::{RandomStream, Variation};

use super::{
    build_record, insert_nondominated, nondominated_unique, trace_entry, EngineConfig, Evaluator,
    Observer, RunRecord, Scalarization, Solution,
};

/// Evenly spread weights `(i / (N-1), 1 - i / (N-1))`.
pub fn weight_vectors(n: usize) -> Vec<[f64; 2]> {
    assert!(n >= 2, "MOEA/D needs at least two subproblems");
    (0..n)
        .map(|i| {
            let w = i as f64 / (n - 1) as f64;
            [w, 1.0 - w]
        })
        .collect()
}

/// The `k` nearest weight vectors of each subproblem (itself included),
/// ties broken by index.
pub fn moead_neighbourhoods(weights: &[[f64; 2]], k: usize) -> Vec<Vec<usize>> {
    weights
        .iter()
        .map(|wi| {
            let dist = |j: usize| (wi[0] - weights[j][0]).hypot(wi[1] - weights[j][1]);
            let mut order: Vec<usize> = (0..weights.len()).collect();
            order.sort_by(|&a, &b| dist(a).total_cmp(&dist(b)).then(a.cmp(&b)));
            order.truncate(k);
            order
        })
        .collect()
}

/// Weighted Tchebycheff distance to the ideal point.
pub fn tchebycheff(f: &ObjectivePoint, weight: &[f64; 2], ideal: &ObjectivePoint) -> f64 {
    scaled_tchebycheff(f, weight, ideal, [1.0, 1.0])
}

/// Tchebycheff distance with each objective gap divided by `span`.
fn scaled_tchebycheff(
    f: &ObjectivePoint,
    weight: &[f64; 2],
    ideal: &ObjectivePoint,
    span: [f64; 2],
) -> f64 {
    (weight[0] * (f.lap - ideal.lap).abs() / span[0])
        .max(weight[1] * (f.tel - ideal.tel).abs() / span[1])
}

/// Per-objective divisors: 1 for raw scalarization, otherwise the gap
/// between the population's worst value and the ideal point.
fn spans(mode: Scalarization, pop: &[Solution], ideal: &ObjectivePoint) -> [f64; 2] {
    match mode {
        Scalarization::Raw => [1.0, 1.0],
        Scalarization::Normalized => {
            let worst_lap = pop
                .iter()
                .map(|s| s.objectives.lap)
                .fold(f64::NEG_INFINITY, f64::max);
            let worst_tel = pop
                .iter()
                .map(|s| s.objectives.tel)
                .fold(f64::NEG_INFINITY, f64::max);
            let guard = |gap: f64| if gap > 0.0 { gap } else { 1.0 };
            [guard(worst_lap - ideal.lap), guard(worst_tel - ideal.tel)]
        }
    }
}

pub fn run_moead(inst: &Instance, cfg: &EngineConfig) -> Result<RunRecord> {
    run_moead_observed(inst, cfg, &mut |_, _, _| {})
}

/// MOEA/D with Tchebycheff decomposition. Each subproblem breeds one child
/// from two neighbours, which then replaces every neighbour it improves.
/// The reported front is an external archive of all evaluated points.
pub fn run_moead_observed(
    inst: &Instance,
    cfg: &EngineConfig,
    observer: &mut Observer<'_>,
) -> Result<RunRecord> {
    cfg.validate()?;
    let ops = &cfg.operators;
    let n = cfg.pop_size;
    let weights = weight_vectors(n);
    let neighbours = moead_neighbourhoods(&weights, cfg.neighbourhood());
    let eval = Evaluator::new(inst, cfg);
    let mut var = Variation::with_stream(inst, RandomStream::new(cfg.seed));

    let mut pop: Vec<Solution> = var
        .initialize(ops.init, n)?
        .into_iter()
        .map(|g| eval.evaluate(g))
        .collect::<Result<_>>()?;
    let mut ideal = pop[0].objectives;
    for s in &pop {
        ideal.lap = ideal.lap.min(s.objectives.lap);
        ideal.tel = ideal.tel.min(s.objectives.tel);
    }
    let mut archive = nondominated_unique(&pop);

    let mut generation = 0;
    observer(generation, eval.used(), &archive);
    let mut trace = vec![trace_entry(generation, eval.used(), &archive)];

    while eval.remaining() > 0 {
        for i in 0..n {
            if eval.remaining() == 0 {
                break;
            }
            let hood = &neighbours[i];
            let (a, b) = if hood.len() >= 2 {
                let pick = var.rng().sample_indices(hood.len(), 2);
                (hood[pick[0]], hood[pick[1]])
            } else {
                (hood[0], hood[0])
            };
            let child = var.offspring(&pop[a].genotype, &pop[b].genotype, ops)?;
            let child = eval.evaluate(child)?;
            ideal.lap = ideal.lap.min(child.objectives.lap);
            ideal.tel = ideal.tel.min(child.objectives.tel);
            let span = spans(cfg.moead_scalarization, &pop, &ideal);
            for &j in hood {
                let w = &weights[j];
                let g = |f: &ObjectivePoint| scaled_tchebycheff(f, w, &ideal, span);
                if g(&child.objectives) < g(&pop[j].objectives) {
                    pop[j] = child.clone();
                }
            }
            insert_nondominated(&mut archive, &child);
        }
        generation += 1;
        observer(generation, eval.used(), &archive);
        trace.push(trace_entry(generation, eval.used(), &archive));
    }

    Ok(build_record(
        inst,
        cfg,
        eval.used(),
        generation,
        &archive,
        trace,
        var.into_events(),
    ))
}
