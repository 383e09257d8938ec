use crate::error::{Error, Result};
use crate::genotype::Genotype;
use crate::instance::URBAN;

use super::{InitKind, Variation};

/// Per-cell acceptance rule of the biased initialisers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Acceptance {
    /// 1 - sq, sq = soil / max soil.
    Soil,
    /// u / 4, u = urban neighbours on the evolving map.
    EdgeLength,
    /// sqrt((1 - sq) * u / 4).
    Hybrid,
}

impl Variation<'_> {
    /// Builds `pop_size` feasible genotypes with the chosen initialiser.
    pub fn initialize(&mut self, kind: InitKind, pop_size: usize) -> Result<Vec<Genotype>> {
        if pop_size < 2 {
            return Err(Error::contract(format!(
                "population size must be at least 2, got {pop_size}"
            )));
        }
        let half = pop_size.div_ceil(2);
        Ok((0..pop_size)
            .map(|i| match kind {
                InitKind::SpI => self.init_uniform(),
                InitKind::SqI => self.init_biased(Acceptance::Soil),
                InitKind::TelI => self.init_biased(Acceptance::EdgeLength),
                InitKind::HybI => self.init_biased(Acceptance::Hybrid),
                InitKind::HalI if i < half => self.init_biased(Acceptance::Soil),
                InitKind::HalI => self.init_biased(Acceptance::EdgeLength),
            })
            .collect())
    }

    /// SP-I: `T` positions uniformly without replacement.
    fn init_uniform(&mut self) -> Genotype {
        let n = self.inst.genotype_len();
        let picks = self.rng.sample_indices(n, self.inst.budget());
        Genotype::from_positions(n, &picks)
    }

    /// Biased initialisers. Untransformed agricultural cells are visited in
    /// random sweeps; each is converted with its acceptance probability
    /// evaluated on the current map. A sweep that converts nothing forces
    /// one conversion, uniform among cells with positive probability (or
    /// among all cells when none has any).
    fn init_biased(&mut self, rule: Acceptance) -> Genotype {
        let inst = self.inst;
        let n = inst.genotype_len();
        let t = inst.budget();
        let cells = inst.agricultural_cells();
        let mut map = inst.categories().to_vec();
        let mut g = Genotype::zeros(n);
        let mut placed = 0;
        let mut remaining: Vec<usize> = (0..n).collect();

        while placed < t {
            self.rng.shuffle(&mut remaining);
            let mut converted_any = false;
            for &pos in &remaining {
                if placed == t {
                    break;
                }
                if g.get(pos) {
                    continue;
                }
                let p = acceptance(inst, &map, rule, cells[pos]);
                if self.rng.chance(p) {
                    g.set(pos, true);
                    map[cells[pos]] = URBAN;
                    placed += 1;
                    converted_any = true;
                }
            }
            remaining.retain(|&pos| !g.get(pos));
            if !converted_any && placed < t {
                let positive: Vec<usize> = remaining
                    .iter()
                    .copied()
                    .filter(|&pos| acceptance(inst, &map, rule, cells[pos]) > 0.0)
                    .collect();
                let pool = if positive.is_empty() {
                    self.events.record("init_forced_uniform");
                    &remaining
                } else {
                    self.events.record("init_forced_positive");
                    &positive
                };
                let pos = pool[self.rng.below(pool.len())];
                g.set(pos, true);
                map[cells[pos]] = URBAN;
                placed += 1;
                remaining.retain(|&q| q != pos);
            }
        }
        g
    }
}

fn acceptance(inst: &crate::instance::Instance, map: &[u8], rule: Acceptance, cell: usize) -> f64 {
    let soil_term = || 1.0 - inst.soil()[cell] / inst.max_soil();
    let urban_term = || {
        inst.adjacent(cell)
            .iter()
            .filter(|&&n| map[n] == URBAN)
            .count() as f64
            / 4.0
    };
    match rule {
        Acceptance::Soil => soil_term(),
        Acceptance::EdgeLength => urban_term(),
        Acceptance::Hybrid => (soil_term() * urban_term()).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genotype::{decode, urban_regions};
    use crate::instance::{generate_instance, GeneratorParams, Instance};
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn pop_size_below_two_is_rejected() {
        let inst = generate_instance(1, 8, 8, &GeneratorParams::default()).unwrap();
        let mut v = Variation::new(&inst, 1);
        assert!(matches!(
            v.initialize(InitKind::SpI, 1),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn every_initializer_is_feasible() {
        let inst = generate_instance(2, 16, 16, &GeneratorParams::default()).unwrap();
        let mut v = Variation::new(&inst, 2);
        for kind in InitKind::ALL {
            let pop = v.initialize(*kind, 11).unwrap();
            assert_eq!(pop.len(), 11);
            assert!(pop.iter().all(|g| g.is_feasible(&inst)), "{kind}");
        }
    }

    #[test]
    fn sq_with_uniform_soil_matches_uniform_distribution() {
        // All sq = 1, so every conversion comes from the forced path.
        let inst = Instance::new(1, 4, vec![2; 4], vec![1.0; 4], 1).unwrap();
        let mut v = Variation::new(&inst, 3);
        let draws = 40_000;
        let mut counts = [0u64; 4];
        for g in v.initialize(InitKind::SqI, draws).unwrap() {
            counts[g.ones().next().unwrap()] += 1;
        }
        let e = draws as f64 / 4.0;
        let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        assert!(
            stat < ChiSquared::new(3.0).unwrap().inverse_cdf(0.99),
            "{counts:?}"
        );
    }

    #[test]
    fn sq_acceptance_frequencies_match_sweep_oracle() {
        // Two cells, T = 1, acceptance p0 = 1 - 1/4, p1 = 1 - 3/4 ... via
        // soil {1, 4}: sq = {0.25, 1.0} -> p = {0.75, 0.0}. Use soil {1, 2}:
        // p = {0.5, 0.0}. With a third cell of soil 1.6: p = 0.2.
        let inst = Instance::new(1, 3, vec![2; 3], vec![1.0, 2.0, 1.6], 1).unwrap();
        let p = [0.5, 0.0, 0.2];
        // Exact first-acceptance distribution over the 6 sweep orders, with
        // the forced pick uniform among positive-probability cells.
        let mut expected = [0.0f64; 3];
        let orders = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let positive: Vec<usize> = (0..3).filter(|&i| p[i] > 0.0).collect();
        for order in orders {
            let mut none = 1.0 / 6.0;
            for &c in &order {
                expected[c] += none * p[c];
                none *= 1.0 - p[c];
            }
            for &c in &positive {
                expected[c] += none / positive.len() as f64;
            }
        }
        let mut v = Variation::new(&inst, 17);
        let draws = 100_000;
        let mut counts = [0u64; 3];
        for g in v.initialize(InitKind::SqI, draws).unwrap() {
            counts[g.ones().next().unwrap()] += 1;
        }
        assert_eq!(counts[1], 0);
        let stat: f64 = [0, 2]
            .iter()
            .map(|&i| {
                let e = expected[i] * draws as f64;
                (counts[i] as f64 - e).powi(2) / e
            })
            .sum();
        assert!(
            stat < ChiSquared::new(1.0).unwrap().inverse_cdf(0.99),
            "{counts:?} vs {expected:?}"
        );
    }

    #[test]
    fn tel_init_without_urban_grows_one_region() {
        let inst = Instance::new(8, 8, vec![2; 64], vec![1.0; 64], 12).unwrap();
        let mut v = Variation::new(&inst, 5);
        for g in v.initialize(InitKind::TelI, 50).unwrap() {
            let map = decode(&g, &inst).unwrap();
            assert_eq!(urban_regions(&map).len(), 1);
        }
    }

    #[test]
    fn hal_splits_population() {
        let inst = Instance::new(6, 6, vec![2; 36], vec![1.0; 36], 5).unwrap();
        let mut v = Variation::new(&inst, 5);
        let pop = v.initialize(InitKind::HalI, 5).unwrap();
        // The TEL-I half (last 2) grows single regions on an empty map.
        for g in &pop[3..] {
            assert_eq!(urban_regions(&decode(g, &inst).unwrap()).len(), 1);
        }
    }

    #[test]
    fn initializers_are_deterministic() {
        let inst = generate_instance(7, 12, 12, &GeneratorParams::default()).unwrap();
        for kind in InitKind::ALL {
            let a = Variation::new(&inst, 9).initialize(*kind, 6).unwrap();
            let b = Variation::new(&inst, 9).initialize(*kind, 6).unwrap();
            assert_eq!(a, b);
        }
    }
}
