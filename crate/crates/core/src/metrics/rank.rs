use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether lower or higher scores are better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Minimize,
    Maximize,
}

/// Per-instance ranks of each optimizer (1 = best, ties averaged) and their
/// summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub optimizers: Vec<String>,
    /// `ranks[o][i]`: rank of optimizer `o` on instance `i`.
    pub ranks: Vec<Vec<f64>>,
    pub median: Vec<f64>,
    pub average: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// Ranks optimizers per instance. `scores[o][i]` is optimizer `o` on
/// instance `i`; every entry must be present and finite.
pub fn rank_table(
    optimizers: &[String],
    scores: &[Vec<f64>],
    direction: Direction,
) -> Result<RankTable> {
    if optimizers.is_empty() || optimizers.len() != scores.len() {
        return Err(Error::contract(format!(
            "rank table needs one score row per optimizer ({} names, {} rows)",
            optimizers.len(),
            scores.len()
        )));
    }
    let instances = scores[0].len();
    if instances == 0 {
        return Err(Error::contract("rank table needs at least one instance"));
    }
    for (name, row) in optimizers.iter().zip(scores) {
        if row.len() != instances {
            return Err(Error::contract(format!(
                "optimizer {name} has {} scores, expected {instances}",
                row.len()
            )));
        }
        if let Some(i) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::contract(format!(
                "optimizer {name} is missing instance {i}"
            )));
        }
    }

    let m = optimizers.len();
    let mut ranks = vec![vec![0.0; instances]; m];
    for i in 0..instances {
        let column: Vec<f64> = scores
            .iter()
            .map(|row| match direction {
                Direction::Minimize => row[i],
                Direction::Maximize => -row[i],
            })
            .collect();
        for (o, r) in average_ranks(&column).into_iter().enumerate() {
            ranks[o][i] = r;
        }
    }

    let mut table = RankTable {
        optimizers: optimizers.to_vec(),
        median: Vec::with_capacity(m),
        average: Vec::with_capacity(m),
        min: Vec::with_capacity(m),
        max: Vec::with_capacity(m),
        ranks,
    };
    for row in &table.ranks {
        let mut sorted = row.clone();
        sorted.sort_by(f64::total_cmp);
        let k = sorted.len();
        let median = if k % 2 == 1 {
            sorted[k / 2]
        } else {
            (sorted[k / 2 - 1] + sorted[k / 2]) / 2.0
        };
        table.median.push(median);
        table.average.push(sorted.iter().sum::<f64>() / k as f64);
        table.min.push(sorted[0]);
        table.max.push(sorted[k - 1]);
    }
    Ok(table)
}

/// Mean of the IGD-based and HV-based average ranks, per optimizer.
pub fn joined_rank(igd: &RankTable, hv: &RankTable) -> Result<Vec<f64>> {
    if igd.optimizers != hv.optimizers {
        return Err(Error::contract(
            "IGD and HV rank tables list different optimizers",
        ));
    }
    Ok(igd
        .average
        .iter()
        .zip(&hv.average)
        .map(|(a, b)| (a + b) / 2.0)
        .collect())
}

/// Ascending 1-based ranks; tied values share the mean of their positions.
pub(crate) fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let shared = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = shared;
        }
        start = end;
    }
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("opt{i}")).collect()
    }

    #[test]
    fn average_ranks_share_ties() {
        assert_eq!(
            average_ranks(&[3.0, 1.0, 3.0, 2.0]),
            vec![3.5, 1.0, 3.5, 2.0]
        );
    }

    #[test]
    fn strictly_best_optimizer() {
        let t = rank_table(
            &names(2),
            &[vec![1.0, 1.0, 1.0], vec![2.0, 3.0, 4.0]],
            Direction::Minimize,
        )
        .unwrap();
        assert_eq!((t.average[0], t.min[0], t.max[0]), (1.0, 1.0, 1.0));
        assert_eq!(t.average[1], 2.0);
    }

    #[test]
    fn ties_get_one_and_a_half() {
        let t = rank_table(&names(2), &[vec![5.0], vec![5.0]], Direction::Maximize).unwrap();
        assert_eq!(t.ranks, vec![vec![1.5], vec![1.5]]);
    }

    #[test]
    fn hand_ranked_table() {
        // HV (maximise): instance 0 -> B, A, C; instance 1 -> A=C, B.
        let hv = rank_table(
            &names(3),
            &[vec![0.8, 0.9], vec![0.9, 0.1], vec![0.2, 0.9]],
            Direction::Maximize,
        )
        .unwrap();
        assert_eq!(
            hv.ranks,
            vec![vec![2.0, 1.5], vec![1.0, 3.0], vec![3.0, 1.5]]
        );
        assert_eq!(hv.average, vec![1.75, 2.0, 2.25]);
        assert_eq!(hv.median, vec![1.75, 2.0, 2.25]);
        assert_eq!(hv.min, vec![1.5, 1.0, 1.5]);
        assert_eq!(hv.max, vec![2.0, 3.0, 3.0]);
        // IGD (minimise): instance 0 -> A, B, C; instance 1 -> C, A, B.
        let igd = rank_table(
            &names(3),
            &[vec![1.0, 2.0], vec![2.0, 3.0], vec![3.0, 1.0]],
            Direction::Minimize,
        )
        .unwrap();
        assert_eq!(igd.average, vec![1.5, 2.5, 2.0]);
        assert_eq!(joined_rank(&igd, &hv).unwrap(), vec![1.625, 2.25, 2.125]);
    }

    #[test]
    fn missing_entries_are_rejected() {
        assert!(rank_table(&names(2), &[vec![1.0, 2.0], vec![1.0]], Direction::Minimize).is_err());
        assert!(rank_table(&names(2), &[vec![1.0], vec![f64::NAN]], Direction::Minimize).is_err());
    }

    proptest! {
        #[test]
        fn invariant_under_monotone_transform(
            scores in prop::collection::vec(prop::collection::vec(-5i32..5, 4), 3)
        ) {
            let raw: Vec<Vec<f64>> = scores.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
            let mapped: Vec<Vec<f64>> = raw.iter().map(|r| r.iter().map(|v| (v / 3.0).exp() * 7.0 + 1.0).collect()).collect();
            let a = rank_table(&names(3), &raw, Direction::Minimize).unwrap();
            let b = rank_table(&names(3), &mapped, Direction::Minimize).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn ranks_sum_to_triangular_number(
            scores in prop::collection::vec(prop::collection::vec(-3i32..3, 2), 2..6)
        ) {
            let raw: Vec<Vec<f64>> = scores.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
            let m = raw.len();
            let t = rank_table(&names(m), &raw, Direction::Maximize).unwrap();
            for i in 0..2 {
                let s: f64 = t.ranks.iter().map(|r| r[i]).sum();
                prop_assert_eq!(s, (m * (m + 1)) as f64 / 2.0);
            }
        }
    }
}
