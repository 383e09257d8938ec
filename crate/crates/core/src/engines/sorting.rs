use crate::objectives::ObjectivePoint;

/// Fast non-dominated sort. Returns fronts as index lists; indices within a
/// front keep input order.
pub fn nondominated_sort(points: &[ObjectivePoint]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if points[i].dominates(&points[j]) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if points[j].dominates(&points[i]) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each point of one front. Boundary points per
/// objective get infinity; interior points sum the normalised gap between
/// their neighbours in each objective.
pub fn crowding_distance(front: &[ObjectivePoint]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    for objective in 0..2 {
        let value = |i: usize| front[i].as_array()[objective];
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)));
        let span = value(order[n - 1]) - value(order[0]);
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        if span <= 0.0 {
            continue;
        }
        for k in 1..n - 1 {
            dist[order[k]] += (value(order[k + 1]) - value(order[k - 1])) / span;
        }
    }
    dist
}
