//! The two minimised objectives and the evaluation budget.
//!
//! LAP is the soil value lost to conversion, normalised by the instance soil
//! total. TEL measures fragmentation of the category map. One call to
//! [`evaluate`] is one fitness-function evaluation (FFE); repairs and
//! clusterings are free.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genotype::{decode, DecodedMap, Genotype};
use crate::instance::{Instance, URBAN};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePoint {
    pub lap: f64,
    pub tel: f64,
}

impl ObjectivePoint {
    pub fn new(lap: f64, tel: f64) -> Self {
        Self { lap, tel }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.lap, self.tel]
    }

    /// Pareto dominance for minimisation: no worse in both, better in one.
    pub fn dominates(&self, other: &ObjectivePoint) -> bool {
        self.lap <= other.lap
            && self.tel <= other.tel
            && (self.lap < other.lap || self.tel < other.tel)
    }
}

/// How TEL is counted.
///
/// `Boundary` counts every adjacent cell pair with differing categories once,
/// plus one per cell side on the grid border. `Literal` is the same-category
/// neighbour sum taken over every cell (each equal pair counted twice).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TelMode {
    #[default]
    Boundary,
    Literal,
}

impl fmt::Display for TelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TelMode::Boundary => "boundary",
            TelMode::Literal => "literal",
        })
    }
}

impl FromStr for TelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boundary" => Ok(TelMode::Boundary),
            "literal" => Ok(TelMode::Literal),
            other => Err(Error::contract(format!(
                "unknown tel mode {other:?}; expected \"boundary\" or \"literal\""
            ))),
        }
    }
}

/// Loss of agricultural productivity of a decoded map.
pub fn eval_lap(m: &DecodedMap, inst: &Instance) -> f64 {
    let soil = inst.soil();
    let lost: f64 = inst
        .agricultural_cells()
        .iter()
        .filter(|&&c| m.cells()[c] == URBAN)
        .map(|&c| soil[c])
        .sum();
    lost / inst.soil_total()
}

/// Total edge length of a decoded map.
pub fn eval_tel(m: &DecodedMap, mode: TelMode) -> f64 {
    let (rows, cols) = (m.rows(), m.cols());
    let cells = m.cells();
    let mut equal_pairs = 0u64;
    let mut differing_pairs = 0u64;
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if c + 1 < cols {
                if cells[i] == cells[i + 1] {
                    equal_pairs += 1;
                } else {
                    differing_pairs += 1;
                }
            }
            if r + 1 < rows {
                if cells[i] == cells[i + cols] {
                    equal_pairs += 1;
                } else {
                    differing_pairs += 1;
                }
            }
        }
    }
    match mode {
        TelMode::Boundary => (differing_pairs + 2 * (rows + cols) as u64) as f64,
        TelMode::Literal => (2 * equal_pairs) as f64,
    }
}

/// Thread-safe FFE counter with a hard budget.
#[derive(Debug)]
pub struct FfeCounter {
    used: AtomicU64,
    budget: u64,
}

impl FfeCounter {
    pub fn new(budget: u64) -> Self {
        Self {
            used: AtomicU64::new(0),
            budget,
        }
    }

    pub fn used(&self) -> u64 {
        self.used.load(Ordering::SeqCst)
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn remaining(&self) -> u64 {
        self.budget - self.used()
    }

    pub fn is_exhausted(&self) -> bool {
        self.used() >= self.budget
    }

    /// Claims one evaluation, or reports the budget as spent.
    pub fn try_acquire(&self) -> Result<()> {
        self.used
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |u| {
                (u < self.budget).then_some(u + 1)
            })
            .map(|_| ())
            .map_err(|_| Error::BudgetExhausted {
                budget: self.budget,
            })
    }
}

/// Evaluates a feasible genotype, charging one FFE to `counter`.
pub fn evaluate(
    g: &Genotype,
    inst: &Instance,
    counter: &FfeCounter,
    mode: TelMode,
) -> Result<ObjectivePoint> {
    if g.len() != inst.genotype_len() || g.unitation() != inst.budget() {
        return Err(Error::contract(format!(
            "evaluate needs a feasible genotype (u = {}), got u = {} over {} positions",
            inst.budget(),
            g.unitation(),
            g.len()
        )));
    }
    counter.try_acquire()?;
    let map = decode(g, inst)?;
    Ok(ObjectivePoint::new(
        eval_lap(&map, inst),
        eval_tel(&map, mode),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genotype::decode;
    use crate::instance::{generate_instance, GeneratorParams};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn soil_grid() -> Instance {
        Instance::new(2, 2, vec![2; 4], vec![1.0, 2.0, 3.0, 4.0], 1).unwrap()
    }

    #[test]
    fn lap_examples() {
        let inst = soil_grid();
        let none = decode(&Genotype::zeros(4), &inst).unwrap();
        assert_eq!(eval_lap(&none, &inst), 0.0);
        let one = decode(&Genotype::from_positions(4, &[0]), &inst).unwrap();
        assert!((eval_lap(&one, &inst) - 0.1).abs() < 1e-15);
        let all = decode(&Genotype::from_bits(vec![true; 4]), &inst).unwrap();
        assert_eq!(eval_lap(&all, &inst), 1.0);
    }

    #[test]
    fn tel_examples() {
        let pair = DecodedMap::from_cells(1, 2, vec![2, 2]).unwrap();
        assert_eq!(eval_tel(&pair, TelMode::Literal), 2.0);
        assert_eq!(eval_tel(&pair, TelMode::Boundary), 6.0);
        let distinct = DecodedMap::from_cells(2, 2, vec![1, 2, 3, 4]).unwrap();
        assert_eq!(eval_tel(&distinct, TelMode::Literal), 0.0);
        assert_eq!(eval_tel(&distinct, TelMode::Boundary), 12.0);
    }

    #[test]
    fn tel_mode_parsing() {
        assert_eq!("literal".parse::<TelMode>().unwrap(), TelMode::Literal);
        assert!(matches!("area".parse::<TelMode>(), Err(Error::Contract(_))));
    }

    #[test]
    fn evaluate_charges_one_ffe_per_call() {
        let inst = soil_grid();
        let counter = FfeCounter::new(3);
        let g = Genotype::from_positions(4, &[0]);
        let p = evaluate(&g, &inst, &counter, TelMode::Boundary).unwrap();
        let q = evaluate(&g, &inst, &counter, TelMode::Boundary).unwrap();
        assert_eq!(p, q);
        assert_eq!(counter.used(), 2);
        assert!((p.lap - 0.1).abs() < 1e-15);
        // converted corner differs from its two neighbours, perimeter is 8
        assert_eq!(p.tel, 10.0);
        let lit = evaluate(&g, &inst, &counter, TelMode::Literal).unwrap();
        assert_eq!(lit.tel, 4.0);
    }

    #[test]
    fn evaluate_at_budget_signals_exhaustion() {
        let inst = soil_grid();
        let counter = FfeCounter::new(1);
        let g = Genotype::from_positions(4, &[1]);
        evaluate(&g, &inst, &counter, TelMode::Boundary).unwrap();
        let err = evaluate(&g, &inst, &counter, TelMode::Boundary).unwrap_err();
        assert!(matches!(err, Error::BudgetExhausted { budget: 1 }));
        assert_eq!(counter.used(), 1);
    }

    #[test]
    fn evaluate_rejects_infeasible() {
        let inst = soil_grid();
        let counter = FfeCounter::new(10);
        let g = Genotype::from_positions(4, &[1, 2]);
        assert!(matches!(
            evaluate(&g, &inst, &counter, TelMode::Boundary),
            Err(Error::Contract(_))
        ));
        assert_eq!(counter.used(), 0);
    }

    /// Scans every unordered adjacent pair explicitly.
    fn brute_pairs(cells: &[u8], cols: usize) -> (u64, u64) {
        let mut total = 0;
        let mut same = 0;
        for a in 0..cells.len() {
            for b in (a + 1)..cells.len() {
                let (ra, ca) = (a / cols, a % cols);
                let (rb, cb) = (b / cols, b % cols);
                if ra.abs_diff(rb) + ca.abs_diff(cb) == 1 {
                    total += 1;
                    if cells[a] == cells[b] {
                        same += 1;
                    }
                }
            }
        }
        (total, same)
    }

    #[test]
    fn boundary_tel_matches_pair_scanner_on_random_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..1000 {
            let rows = rng.random_range(1..9);
            let cols = rng.random_range(1..9);
            let k = rng.random_range(1..5u8);
            let cells: Vec<u8> = (0..rows * cols).map(|_| rng.random_range(1..=k)).collect();
            let map = DecodedMap::from_cells(rows, cols, cells.clone()).unwrap();
            let (total, same) = brute_pairs(&cells, cols);
            let literal = eval_tel(&map, TelMode::Literal);
            assert_eq!(literal, (2 * same) as f64);
            let perimeter = 2 * (rows + cols) as u64;
            assert_eq!(
                eval_tel(&map, TelMode::Boundary),
                (total + perimeter) as f64 - literal / 2.0
            );
        }
    }

    #[test]
    fn isolated_conversion_adds_four_boundary_edges() {
        let inst = Instance::new(5, 5, vec![2; 25], vec![1.0; 25], 1).unwrap();
        let before = decode(&Genotype::zeros(25), &inst).unwrap();
        let after = decode(&Genotype::from_positions(25, &[12]), &inst).unwrap();
        assert_eq!(
            eval_tel(&after, TelMode::Boundary) - eval_tel(&before, TelMode::Boundary),
            4.0
        );
    }

    proptest! {
        #[test]
        fn tel_invariant_under_relabelling(seed in 0u64..5000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (rows, cols) = (rng.random_range(1..7), rng.random_range(1..7));
            let cells: Vec<u8> = (0..rows * cols).map(|_| rng.random_range(1..=4u8)).collect();
            let perm = [0u8, 3, 1, 4, 2];
            let relabelled: Vec<u8> = cells.iter().map(|&k| perm[k as usize]).collect();
            let a = DecodedMap::from_cells(rows, cols, cells).unwrap();
            let b = DecodedMap::from_cells(rows, cols, relabelled).unwrap();
            for mode in [TelMode::Boundary, TelMode::Literal] {
                prop_assert_eq!(eval_tel(&a, mode), eval_tel(&b, mode));
            }
        }

        #[test]
        fn lap_is_within_unit_interval(seed in 0u64..500) {
            let inst = generate_instance(seed % 4, 8, 8, &GeneratorParams::default()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = Genotype::from_bits((0..inst.genotype_len()).map(|_| rng.random_bool(0.5)).collect());
            let lap = eval_lap(&decode(&g, &inst).unwrap(), &inst);
            prop_assert!((0.0..=1.0).contains(&lap));
        }
    }
}
