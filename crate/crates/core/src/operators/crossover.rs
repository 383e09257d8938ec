use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::genotype::{cluster_drc_with, cluster_idrc_with, cluster_src, Genotype, MaskSet};

use super::{CrossoverKind, OperatorConfig, Variation, MASK_SWAP_PROBABILITY};

impl Variation<'_> {
    /// Dispatches to the configured crossover.
    pub fn crossover(
        &mut self,
        a: &Genotype,
        b: &Genotype,
        cfg: &OperatorConfig,
    ) -> Result<(Genotype, Genotype)> {
        match cfg.crossover {
            CrossoverKind::Ac => self.crossover_ac(a, b),
            kind => self.crossover_masked_with(a, b, kind, cfg.drc_bridge_fixed_urban),
        }
    }

    /// Angle crossover with a uniformly drawn split angle.
    pub fn crossover_ac(&mut self, a: &Genotype, b: &Genotype) -> Result<(Genotype, Genotype)> {
        let theta = self.rng.unit() * PI;
        self.crossover_ac_at(a, b, theta)
    }

    /// Splits the grid by the line through its centre at angle `theta`
    /// (measured from the column axis). The first child takes `a` on the
    /// non-negative side and `b` elsewhere; the second child mirrors it.
    pub fn crossover_ac_at(
        &self,
        a: &Genotype,
        b: &Genotype,
        theta: f64,
    ) -> Result<(Genotype, Genotype)> {
        self.check_len(a)?;
        self.check_len(b)?;
        let inst = self.inst;
        let centre_r = (inst.rows() as f64 - 1.0) / 2.0;
        let centre_c = (inst.cols() as f64 - 1.0) / 2.0;
        let (dir_c, dir_r) = (theta.cos(), theta.sin());
        let mut x = a.clone();
        let mut y = b.clone();
        for (pos, &cell) in inst.agricultural_cells().iter().enumerate() {
            let idx = inst.unflat(cell);
            let dr = idx.row as f64 - centre_r;
            let dc = idx.col as f64 - centre_c;
            let side = dir_c * dr - dir_r * dc;
            if side < 0.0 {
                x.set(pos, b.get(pos));
                y.set(pos, a.get(pos));
            }
        }
        Ok((x, y))
    }

    /// Region-mask crossover (SRC, DRC or IDRC). Masks are processed in a
    /// random order and always exchanged whole.
    pub fn crossover_masked(
        &mut self,
        a: &Genotype,
        b: &Genotype,
        kind: CrossoverKind,
    ) -> Result<(Genotype, Genotype)> {
        self.crossover_masked_with(a, b, kind, false)
    }

    fn crossover_masked_with(
        &mut self,
        a: &Genotype,
        b: &Genotype,
        kind: CrossoverKind,
        bridge: bool,
    ) -> Result<(Genotype, Genotype)> {
        let masks = match kind {
            CrossoverKind::Src => cluster_src(a, b, self.inst)?,
            CrossoverKind::Drc => cluster_drc_with(a, b, self.inst, bridge)?,
            CrossoverKind::Idrc => cluster_idrc_with(a, b, self.inst, bridge)?,
            CrossoverKind::Ac => {
                return Err(Error::contract("AC is not a mask crossover"));
            }
        };
        Ok(self.exchange_masks(a, b, masks, kind == CrossoverKind::Src))
    }

    fn exchange_masks(
        &mut self,
        a: &Genotype,
        b: &Genotype,
        masks: MaskSet,
        half_split: bool,
    ) -> (Genotype, Genotype) {
        let mut masks = masks.into_masks();
        self.rng.shuffle(&mut masks);
        let mut x = a.clone();
        let mut y = b.clone();
        let keep_from_a = masks.len() / 2;
        for (i, mask) in masks.iter().enumerate() {
            let take_b = if half_split {
                i >= keep_from_a
            } else {
                self.rng.chance(MASK_SWAP_PROBABILITY)
            };
            if take_b {
                for &p in mask {
                    x.set(p, b.get(p));
                    y.set(p, a.get(p));
                }
            }
        }
        (x, y)
    }
}
