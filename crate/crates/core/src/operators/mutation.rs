use crate::error::Result;
use crate::genotype::{decode_unchecked, urban_regions, Genotype};
use crate::instance::{AGRICULTURAL, URBAN};

use super::{MutationKind, OperatorConfig, Variation, MUTATION_GATE};

/// Which optional steps of a combined mutation fire. BRM always runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MutationPlan {
    pub rbm: bool,
    pub rcm: bool,
    pub bcpm: bool,
}

impl Variation<'_> {
    fn max_block(&self, cfg: Option<&OperatorConfig>) -> usize {
        cfg.and_then(|c| c.max_block)
            .unwrap_or_else(|| self.inst.rows().min(self.inst.cols()).div_ceil(4))
            .max(1)
    }

    /// Random block mutation: converts every agricultural cell inside a
    /// random in-bounds rectangle with sides in `[1, max_block]`.
    pub fn mutate_rbm(&mut self, g: &Genotype) -> Result<Genotype> {
        self.rbm_with_cap(g, self.max_block(None))
    }

    fn rbm_with_cap(&mut self, g: &Genotype, cap: usize) -> Result<Genotype> {
        self.check_len(g)?;
        let inst = self.inst;
        let height = self.rng.between(1, cap.min(inst.rows()));
        let width = self.rng.between(1, cap.min(inst.cols()));
        let top = self.rng.between(0, inst.rows() - height);
        let left = self.rng.between(0, inst.cols() - width);
        let mut out = g.clone();
        for r in top..top + height {
            for c in left..left + width {
                if let Some(pos) = inst.position_of(r * inst.cols() + c) {
                    out.set(pos, true);
                }
            }
        }
        Ok(out)
    }

    /// Random cell mutation: one conversion is reverted and one new cell is
    /// converted, both uniformly. A no-op when either side is empty.
    pub fn mutate_rcm(&mut self, g: &Genotype) -> Result<Genotype> {
        self.check_len(g)?;
        let ones: Vec<usize> = g.ones().collect();
        let zeros: Vec<usize> = g.zeros_iter().collect();
        if ones.is_empty() || zeros.is_empty() {
            self.events.record("rcm_noop");
            return Ok(g.clone());
        }
        let off = ones[self.rng.below(ones.len())];
        let on = zeros[self.rng.below(zeros.len())];
        let mut out = g.clone();
        out.set(off, false);
        out.set(on, true);
        Ok(out)
    }

    /// Biased cells patch mutation. Reverts the converted cells of one urban
    /// region (picked with probability inversely proportional to its size)
    /// and regrows the same number of conversions around another region
    /// (picked proportionally to size), each new cell chosen in proportion
    /// to its urban-neighbour count. Unitation is preserved.
    pub fn mutate_bcpm(&mut self, g: &Genotype) -> Result<Genotype> {
        self.check_len(g)?;
        let inst = self.inst;
        let mut map = decode_unchecked(g, inst);
        let regions = urban_regions(&map);
        let is_converted = |cell: usize| inst.position_of(cell).is_some();

        let removable: Vec<usize> = (0..regions.len())
            .filter(|&r| regions[r].iter().any(|&c| is_converted(c)))
            .collect();
        if removable.is_empty() {
            self.events.record("bcpm_noop");
            return Ok(g.clone());
        }
        let inverse: Vec<f64> = removable
            .iter()
            .map(|&r| 1.0 / regions[r].len() as f64)
            .collect();
        let removed = removable[self.rng.weighted(&inverse).expect("positive weights")];

        // Remaining growth targets, largest first when falling back.
        let mut targets: Vec<Vec<usize>> = regions
            .iter()
            .enumerate()
            .filter(|&(r, _)| r != removed)
            .map(|(_, cells)| cells.clone())
            .collect();
        if targets.is_empty() {
            let fixed: Vec<usize> = regions[removed]
                .iter()
                .copied()
                .filter(|&c| !is_converted(c))
                .collect();
            if fixed.is_empty() {
                self.events.record("bcpm_noop");
                return Ok(g.clone());
            }
            self.events.record("bcpm_regrow_around_fixed");
            targets.push(fixed);
        }

        let mut out = g.clone();
        let mut count = 0;
        for &cell in &regions[removed] {
            if let Some(pos) = inst.position_of(cell) {
                out.set(pos, false);
                map.cells_mut()[cell] = AGRICULTURAL;
                count += 1;
            }
        }

        let sizes: Vec<f64> = targets.iter().map(|t| t.len() as f64).collect();
        let first = self.rng.weighted(&sizes).expect("non-empty regions");
        let mut order: Vec<usize> = (0..targets.len()).filter(|&i| i != first).collect();
        order.sort_by_key(|&i| (std::cmp::Reverse(targets[i].len()), i));
        let mut order = order.into_iter();
        let mut patch = targets[first].clone();
        let mut in_patch = vec![false; inst.cell_count()];
        for &c in &patch {
            in_patch[c] = true;
        }

        let mut frontier = Vec::new();
        let mut weights = Vec::new();
        let mut placed = 0;
        while placed < count {
            frontier.clear();
            weights.clear();
            let mut seen = vec![false; inst.cell_count()];
            for &c in &patch {
                for &n in inst.adjacent(c) {
                    if !seen[n] && !in_patch[n] && map.cells()[n] == AGRICULTURAL {
                        seen[n] = true;
                        frontier.push(n);
                        let w = inst
                            .adjacent(n)
                            .iter()
                            .filter(|&&m| map.cells()[m] == URBAN)
                            .count();
                        weights.push(w as f64);
                    }
                }
            }
            if frontier.is_empty() {
                match order.next() {
                    Some(next) => {
                        self.events.record("bcpm_target_exhausted");
                        for &c in &targets[next] {
                            in_patch[c] = true;
                        }
                        patch.extend_from_slice(&targets[next]);
                    }
                    None => {
                        self.events.record("bcpm_uniform_fallback");
                        let zeros: Vec<usize> = out.zeros_iter().collect();
                        let pos = zeros[self.rng.below(zeros.len())];
                        out.set(pos, true);
                        let cell = inst.agricultural_cells()[pos];
                        map.cells_mut()[cell] = URBAN;
                        in_patch[cell] = true;
                        patch.push(cell);
                        placed += 1;
                    }
                }
                continue;
            }
            let cell = frontier[self.rng.weighted_or_uniform(&weights)];
            let pos = inst
                .position_of(cell)
                .expect("frontier cells are agricultural");
            out.set(pos, true);
            map.cells_mut()[cell] = URBAN;
            in_patch[cell] = true;
            patch.push(cell);
            placed += 1;
        }
        Ok(out)
    }

    /// Draws the three 10% gates of a combined mutation.
    pub fn draw_mutation_plan(&mut self) -> MutationPlan {
        MutationPlan {
            rbm: self.rng.chance(MUTATION_GATE),
            rcm: self.rng.chance(MUTATION_GATE),
            bcpm: self.rng.chance(MUTATION_GATE),
        }
    }

    /// MutC / MutC2: RBM (10%), then RRM only if RBM fired (MutC only),
    /// RCM (10%), BRM (always), BCPM (10%). The output is always feasible.
    pub fn mutate_combined(
        &mut self,
        g: &Genotype,
        variant: MutationKind,
        cfg: &OperatorConfig,
    ) -> Result<Genotype> {
        let plan = self.draw_mutation_plan();
        self.mutate_planned(g, variant, plan, cfg)
    }

    pub fn mutate_planned(
        &mut self,
        g: &Genotype,
        variant: MutationKind,
        plan: MutationPlan,
        cfg: &OperatorConfig,
    ) -> Result<Genotype> {
        self.check_len(g)?;
        let mut cur = g.clone();
        if plan.rbm {
            cur = self.rbm_with_cap(&cur, self.max_block(Some(cfg)))?;
            if variant == MutationKind::MutC {
                if cur.unitation() >= self.inst.budget() {
                    cur = self.repair_rrm(&cur)?;
                } else {
                    self.events.record("mutc_rrm_skipped_deficient");
                }
            }
        }
        if plan.rcm {
            cur = self.mutate_rcm(&cur)?;
        }
        cur = self.repair_brm(&cur)?;
        if plan.bcpm {
            cur = self.mutate_bcpm(&cur)?;
        }
        debug_assert_eq!(cur.unitation(), self.inst.budget());
        Ok(cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, GeneratorParams, Instance};
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn open_grid(rows: usize, cols: usize, budget: usize) -> Instance {
        Instance::new(
            rows,
            cols,
            vec![2; rows * cols],
            vec![1.0; rows * cols],
            budget,
        )
        .unwrap()
    }

    #[test]
    fn rbm_on_non_agricultural_block_is_identity() {
        let inst = Instance::new(1, 4, vec![1, 3, 3, 2], vec![1.0; 4], 1).unwrap();
        // 1x4 -> cap 1; any block lands on a single cell
        let g = Genotype::zeros(1);
        let mut hits = 0;
        for seed in 0..40 {
            let mut v = Variation::new(&inst, seed);
            let out = v.mutate_rbm(&g).unwrap();
            if out.get(0) {
                hits += 1;
            } else {
                assert_eq!(out, g);
            }
        }
        assert!(hits > 0 && hits < 40);
    }

    #[test]
    fn rbm_single_cell_flips_one_bit_and_is_idempotent_on_ones() {
        let inst = open_grid(4, 4, 2);
        let mut v = Variation::new(&inst, 3);
        let g = Genotype::zeros(16);
        let out = v.mutate_rbm(&g).unwrap();
        assert_eq!(out.unitation(), 1);
        let all = Genotype::from_bits(vec![true; 16]);
        assert_eq!(v.mutate_rbm(&all).unwrap(), all);
    }

    #[test]
    fn rbm_block_is_a_rectangle_within_cap() {
        let inst = open_grid(12, 12, 2);
        let mut v = Variation::new(&inst, 8);
        for _ in 0..200 {
            let out = v.mutate_rbm(&Genotype::zeros(144)).unwrap();
            let ones: Vec<usize> = out.ones().collect();
            let rows: Vec<usize> = ones.iter().map(|p| p / 12).collect();
            let cols: Vec<usize> = ones.iter().map(|p| p % 12).collect();
            let h = rows.iter().max().unwrap() - rows.iter().min().unwrap() + 1;
            let w = cols.iter().max().unwrap() - cols.iter().min().unwrap() + 1;
            assert_eq!(h * w, ones.len());
            assert!(h <= 3 && w <= 3);
        }
    }

    #[test]
    fn rcm_preserves_unitation_and_handles_edges() {
        let inst = open_grid(1, 2, 1);
        let mut v = Variation::new(&inst, 1);
        let out = v.mutate_rcm(&Genotype::from_positions(2, &[0])).unwrap();
        assert_eq!(out, Genotype::from_positions(2, &[1]));
        let full = Genotype::from_bits(vec![true; 2]);
        assert_eq!(v.mutate_rcm(&full).unwrap(), full);
        assert_eq!(v.events().count("rcm_noop"), 1);

        let inst = generate_instance(2, 10, 10, &GeneratorParams::default()).unwrap();
        let mut v = Variation::new(&inst, 2);
        for _ in 0..100 {
            let bits = (0..inst.genotype_len())
                .map(|_| v.rng().chance(0.3))
                .collect();
            let g = Genotype::from_bits(bits);
            assert_eq!(v.mutate_rcm(&g).unwrap().unitation(), g.unitation());
        }
    }

    #[test]
    fn bcpm_single_region_without_fixed_cells_is_noop() {
        let inst = open_grid(3, 3, 2);
        let g = Genotype::from_positions(9, &[0, 1]);
        let mut v = Variation::new(&inst, 4);
        assert_eq!(v.mutate_bcpm(&g).unwrap(), g);
        assert_eq!(v.events().count("bcpm_noop"), 1);
    }

    #[test]
    fn bcpm_regrows_around_fixed_cells_of_the_only_region() {
        // urban at centre; the only region is centre + converted (0,1)
        #[rustfmt::skip]
        let cats = vec![
            2, 2, 2,
            2, 1, 2,
            2, 2, 2,
        ];
        let inst = Instance::new(3, 3, cats, vec![1.0; 9], 1).unwrap();
        let g = Genotype::from_positions(8, &[1]);
        let mut v = Variation::new(&inst, 4);
        let out = v.mutate_bcpm(&g).unwrap();
        assert_eq!(out.unitation(), 1);
        assert!([1, 3, 4, 6].contains(&out.ones().next().unwrap()));
        assert_eq!(v.events().count("bcpm_regrow_around_fixed"), 1);
    }

    #[test]
    fn bcpm_preserves_unitation() {
        let inst = generate_instance(6, 15, 15, &GeneratorParams::default()).unwrap();
        let mut v = Variation::new(&inst, 6);
        for _ in 0..300 {
            let bits = (0..inst.genotype_len())
                .map(|_| v.rng().chance(0.2))
                .collect();
            let g = Genotype::from_bits(bits);
            assert_eq!(v.mutate_bcpm(&g).unwrap().unitation(), g.unitation());
        }
    }

    #[test]
    fn bcpm_removal_frequencies_are_inverse_to_size() {
        // 1x16 all agricultural: a single converted cell at 0 and a 9-cell
        // converted run at 6..15. Removal odds are 1 : 1/9 -> 0.9 / 0.1.
        let inst = open_grid(1, 16, 10);
        let mut ones = vec![0];
        ones.extend(6..15);
        let g = Genotype::from_positions(16, &ones);
        let mut v = Variation::new(&inst, 12);
        let draws = 100_000;
        let mut small_removed = 0u64;
        for _ in 0..draws {
            let out = v.mutate_bcpm(&g).unwrap();
            if !out.get(0) {
                small_removed += 1;
            }
        }
        let observed = [small_removed as f64, (draws - small_removed) as f64];
        let expected = [0.9 * draws as f64, 0.1 * draws as f64];
        let stat: f64 = observed
            .iter()
            .zip(&expected)
            .map(|(o, e)| (o - e).powi(2) / e)
            .sum();
        assert!(
            stat < ChiSquared::new(1.0).unwrap().inverse_cdf(0.99),
            "chi2 {stat}"
        );
    }

    #[test]
    fn combined_mutation_with_gates_off_equals_brm() {
        let inst = generate_instance(9, 12, 12, &GeneratorParams::default()).unwrap();
        let cfg = OperatorConfig::default();
        let mut probe = Variation::new(&inst, 0);
        for seed in 0..30 {
            let bits = (0..inst.genotype_len())
                .map(|_| probe.rng().chance(0.15))
                .collect();
            let g = Genotype::from_bits(bits);
            let mut a = Variation::new(&inst, seed);
            let mut b = Variation::new(&inst, seed);
            let planned = a
                .mutate_planned(&g, MutationKind::MutC, MutationPlan::default(), &cfg)
                .unwrap();
            assert_eq!(planned, b.repair_brm(&g).unwrap());
        }
        let feasible = Variation::new(&inst, 1)
            .repair_brm(&Genotype::zeros(inst.genotype_len()))
            .unwrap();
        let mut v = Variation::new(&inst, 2);
        let out = v
            .mutate_planned(
                &feasible,
                MutationKind::MutC2,
                MutationPlan::default(),
                &cfg,
            )
            .unwrap();
        assert_eq!(out, feasible);
    }

    #[test]
    fn combined_mutation_is_always_feasible() {
        let inst = generate_instance(10, 14, 14, &GeneratorParams::default()).unwrap();
        let cfg = OperatorConfig::default();
        let mut v = Variation::new(&inst, 10);
        for i in 0..2000 {
            let density = v.rng().unit() * 0.5;
            let bits = (0..inst.genotype_len())
                .map(|_| v.rng().chance(density))
                .collect();
            let g = Genotype::from_bits(bits);
            let all = MutationPlan {
                rbm: true,
                rcm: true,
                bcpm: true,
            };
            for variant in [MutationKind::MutC, MutationKind::MutC2] {
                let out = if i % 2 == 0 {
                    v.mutate_combined(&g, variant, &cfg).unwrap()
                } else {
                    v.mutate_planned(&g, variant, all, &cfg).unwrap()
                };
                assert!(out.is_feasible(&inst));
            }
        }
    }
}
