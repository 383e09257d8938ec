use crate::error::{Error, Result};
use crate::genotype::{decode_unchecked, Genotype};
use crate::instance::{AGRICULTURAL, URBAN};

use super::Variation;

impl Variation<'_> {
    /// Random repair: drops uniformly chosen conversions until exactly `T`
    /// remain. Never adds conversions.
    pub fn repair_rrm(&mut self, g: &Genotype) -> Result<Genotype> {
        self.check_len(g)?;
        let t = self.inst.budget();
        let ones: Vec<usize> = g.ones().collect();
        if ones.len() < t {
            return Err(Error::contract(format!(
                "RRM only removes conversions; unitation {} is below T = {t}",
                ones.len()
            )));
        }
        let mut out = g.clone();
        for i in self.rng.sample_indices(ones.len(), ones.len() - t) {
            out.set(ones[i], false);
        }
        Ok(out)
    }

    /// Biased repair: converts (deficiency) or reverts (excess) one cell at a
    /// time, choosing each with probability proportional to how many of its
    /// neighbours already have the cell's post-repair category on the
    /// current map. Weights are recomputed after every step; if all are zero
    /// the choice is uniform.
    pub fn repair_brm(&mut self, g: &Genotype) -> Result<Genotype> {
        self.check_len(g)?;
        let inst = self.inst;
        let t = inst.budget();
        let cells = inst.agricultural_cells();
        let mut out = g.clone();
        let mut u = out.unitation();
        if u == t {
            return Ok(out);
        }
        let mut map = decode_unchecked(&out, inst);
        let mut candidates: Vec<usize> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        while u != t {
            let deficient = u < t;
            let (want_bit, neighbour_cat) = if deficient {
                (false, URBAN)
            } else {
                (true, AGRICULTURAL)
            };
            candidates.clear();
            weights.clear();
            for (pos, &cell) in cells.iter().enumerate() {
                if out.get(pos) != want_bit {
                    continue;
                }
                let w = inst
                    .adjacent(cell)
                    .iter()
                    .filter(|&&n| map.cells()[n] == neighbour_cat)
                    .count();
                candidates.push(pos);
                weights.push(w as f64);
            }
            let pick = match self.rng.weighted(&weights) {
                Some(i) => i,
                None => {
                    self.events.record("brm_uniform_fallback");
                    self.rng.below(candidates.len())
                }
            };
            let pos = candidates[pick];
            out.set(pos, deficient);
            map.cells_mut()[cells[pos]] = if deficient { URBAN } else { AGRICULTURAL };
            if deficient {
                u += 1;
            } else {
                u -= 1;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, GeneratorParams, Instance};
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn line(n: usize, budget: usize) -> Instance {
        Instance::new(1, n, vec![2; n], vec![1.0; n], budget).unwrap()
    }

    #[test]
    fn rrm_keeps_subset_of_ones() {
        let inst = line(4, 2);
        let mut v = Variation::new(&inst, 1);
        let g = Genotype::from_bits(vec![true; 4]);
        let out = v.repair_rrm(&g).unwrap();
        assert_eq!(out.unitation(), 2);
        assert!(out.ones().all(|p| g.get(p)));
    }

    #[test]
    fn rrm_fixpoint_and_precondition() {
        let inst = line(4, 2);
        let mut v = Variation::new(&inst, 1);
        let g = Genotype::from_positions(4, &[0, 3]);
        assert_eq!(v.repair_rrm(&g).unwrap(), g);
        let short = Genotype::from_positions(4, &[0]);
        assert!(matches!(v.repair_rrm(&short), Err(Error::Contract(_))));
    }

    #[test]
    fn brm_fixpoint() {
        let inst = line(5, 2);
        let mut v = Variation::new(&inst, 1);
        let g = Genotype::from_positions(5, &[1, 2]);
        assert_eq!(v.repair_brm(&g).unwrap(), g);
    }

    #[test]
    fn brm_deficiency_picks_the_only_weighted_candidate() {
        // urban at column 0; only the cell next to it has an urban neighbour
        let inst = Instance::new(1, 5, vec![1, 2, 2, 2, 2], vec![1.0; 5], 1).unwrap();
        for seed in 0..50 {
            let mut v = Variation::new(&inst, seed);
            let out = v.repair_brm(&Genotype::zeros(4)).unwrap();
            assert_eq!(out, Genotype::from_positions(4, &[0]));
        }
    }

    #[test]
    fn brm_all_zero_weights_fall_back_to_uniform() {
        let inst = line(3, 1);
        let mut counts = [0usize; 3];
        for seed in 0..300 {
            let mut v = Variation::new(&inst, seed);
            let out = v.repair_brm(&Genotype::zeros(3)).unwrap();
            counts[out.ones().next().unwrap()] += 1;
            assert_eq!(v.events().count("brm_uniform_fallback"), 1);
        }
        assert!(counts.iter().all(|&c| c > 60), "{counts:?}");
    }

    #[test]
    fn brm_excess_weights_follow_agricultural_neighbours() {
        // 1x5 all agricultural; ones at 0,1,2 with T = 2:
        // pos0 has ag-neighbours {} -> 0, pos1 -> 0, pos2 -> {3} -> 1.
        let inst = line(5, 2);
        for seed in 0..50 {
            let mut v = Variation::new(&inst, seed);
            let out = v
                .repair_brm(&Genotype::from_positions(5, &[0, 1, 2]))
                .unwrap();
            assert_eq!(out, Genotype::from_positions(5, &[0, 1]));
        }
    }

    #[test]
    fn brm_deficiency_frequencies_match_weights() {
        // 3x3, urban centre, T = 1. Edge cells have 1 urban neighbour,
        // corners 0, so each of the four edge cells gets 1/4.
        #[rustfmt::skip]
        let cats = vec![
            2, 2, 2,
            2, 1, 2,
            2, 2, 2,
        ];
        let inst = Instance::new(3, 3, cats, vec![1.0; 9], 1).unwrap();
        let mut v = Variation::new(&inst, 99);
        let draws = 100_000;
        let mut counts = [0u64; 8];
        for _ in 0..draws {
            let out = v.repair_brm(&Genotype::zeros(8)).unwrap();
            counts[out.ones().next().unwrap()] += 1;
        }
        for corner in [0, 2, 5, 7] {
            assert_eq!(counts[corner], 0);
        }
        let e = draws as f64 / 4.0;
        let stat: f64 = [1, 3, 4, 6]
            .iter()
            .map(|&p| (counts[p] as f64 - e).powi(2) / e)
            .sum();
        assert!(stat < ChiSquared::new(3.0).unwrap().inverse_cdf(0.99));
    }

    #[test]
    fn repairs_are_feasible_and_respect_subset_rules() {
        let inst = generate_instance(4, 12, 12, &GeneratorParams::default()).unwrap();
        let n = inst.genotype_len();
        let mut v = Variation::new(&inst, 5);
        for _ in 0..300 {
            let density = v.rng().unit();
            let bits: Vec<bool> = (0..n).map(|_| v.rng().chance(density)).collect();
            let g = Genotype::from_bits(bits);
            let out = v.repair_brm(&g).unwrap();
            assert!(out.is_feasible(&inst));
            if g.unitation() <= inst.budget() {
                assert!(g.ones().all(|p| out.get(p)));
            } else {
                assert!(out.ones().all(|p| g.get(p)));
                let r = v.repair_rrm(&g).unwrap();
                assert!(r.is_feasible(&inst));
                assert!(r.ones().all(|p| g.get(p)));
            }
        }
    }
}
