use crate::error::Result;
use crate::instance::Instance;
use crate::objectives::ObjectivePoint;
use crate::operators::{RandomStream, Variation};

use super::{
    build_record, crowding_distance, nondominated_sort, nondominated_unique, trace_entry,
    EngineConfig, Evaluator, Observer, RunRecord, Solution,
};

pub fn run_nsga2(inst: &Instance, cfg: &EngineConfig) -> Result<RunRecord> {
    run_nsga2_observed(inst, cfg, &mut |_, _, _| {})
}

/// Generational NSGA-II with elitist (mu + lambda) survival. A generation is
/// only started when the remaining budget covers all of its offspring.
pub fn run_nsga2_observed(
    inst: &Instance,
    cfg: &EngineConfig,
    observer: &mut Observer<'_>,
) -> Result<RunRecord> {
    cfg.validate()?;
    let ops = &cfg.operators;
    let n = cfg.pop_size;
    let eval = Evaluator::new(inst, cfg);
    let mut var = Variation::with_stream(inst, RandomStream::new(cfg.seed));

    let mut pop: Vec<Solution> = var
        .initialize(ops.init, n)?
        .into_iter()
        .map(|g| eval.evaluate(g))
        .collect::<Result<_>>()?;

    let mut generation = 0;
    let mut first = first_front(&pop);
    observer(generation, eval.used(), &first);
    let mut trace = vec![trace_entry(generation, eval.used(), &first)];

    while eval.remaining() >= n as u64 {
        let (rank, crowd) = rank_and_crowding(&pop);
        let mut children = Vec::with_capacity(n + 1);
        while children.len() < n {
            let a = tournament(&mut var, &rank, &crowd);
            let b = tournament(&mut var, &rank, &crowd);
            let (x, y) = var.breed(&pop[a].genotype, &pop[b].genotype, ops)?;
            children.push(x);
            children.push(y);
        }
        children.truncate(n);
        for g in children {
            pop.push(eval.evaluate(g)?);
        }
        pop = environmental_selection(pop, n);
        generation += 1;
        first = first_front(&pop);
        observer(generation, eval.used(), &first);
        trace.push(trace_entry(generation, eval.used(), &first));
    }

    Ok(build_record(
        inst,
        cfg,
        eval.used(),
        generation,
        &first,
        trace,
        var.into_events(),
    ))
}

fn objectives(pop: &[Solution]) -> Vec<ObjectivePoint> {
    pop.iter().map(|s| s.objectives).collect()
}

fn first_front(pop: &[Solution]) -> Vec<Solution> {
    let fronts = nondominated_sort(&objectives(pop));
    let members: Vec<Solution> = fronts[0].iter().map(|&i| pop[i].clone()).collect();
    nondominated_unique(&members)
}

/// Front index and crowding distance of every member.
fn rank_and_crowding(pop: &[Solution]) -> (Vec<usize>, Vec<f64>) {
    let pts = objectives(pop);
    let mut rank = vec![0; pop.len()];
    let mut crowd = vec![0.0; pop.len()];
    for (r, front) in nondominated_sort(&pts).iter().enumerate() {
        let fp: Vec<ObjectivePoint> = front.iter().map(|&i| pts[i]).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&fp)) {
            rank[i] = r;
            crowd[i] = d;
        }
    }
    (rank, crowd)
}

/// Binary tournament on (rank, crowding); full ties are settled by a coin.
fn tournament(var: &mut Variation<'_>, rank: &[usize], crowd: &[f64]) -> usize {
    let n = rank.len();
    let a = var.rng().below(n);
    let b = var.rng().below(n);
    if rank[a] != rank[b] {
        return if rank[a] < rank[b] { a } else { b };
    }
    if crowd[a] != crowd[b] {
        return if crowd[a] > crowd[b] { a } else { b };
    }
    if var.rng().chance(0.5) {
        a
    } else {
        b
    }
}

/// Keeps the best `n` by front, filling the last front by descending
/// crowding distance.
fn environmental_selection(merged: Vec<Solution>, n: usize) -> Vec<Solution> {
    let pts = objectives(&merged);
    let mut keep: Vec<usize> = Vec::with_capacity(n);
    for front in nondominated_sort(&pts) {
        if keep.len() + front.len() <= n {
            keep.extend(front);
            continue;
        }
        let fp: Vec<ObjectivePoint> = front.iter().map(|&i| pts[i]).collect();
        let d = crowding_distance(&fp);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
        keep.extend(order.into_iter().take(n - keep.len()).map(|k| front[k]));
        break;
    }
    let mut slots: Vec<Option<Solution>> = merged.into_iter().map(Some).collect();
    keep.into_iter()
        .map(|i| slots[i].take().expect("index kept once"))
        .collect()
}
