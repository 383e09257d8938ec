//! The immutable land-use grid: categories, soil field, conversion budget.
//!
//! Category codes are fixed: [`URBAN`] = 1, [`AGRICULTURAL`] = 2, and every
//! code above 2 is an immutable "other" use (forest, water, ...). Only
//! agricultural cells are decision variables; they are numbered in row-major
//! order and that numbering is the genotype layout.

use std::fs;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const URBAN: u8 = 1;
pub const AGRICULTURAL: u8 = 2;

/// Position of a cell on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellIndex {
    pub row: usize,
    pub col: usize,
}

impl CellIndex {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// On-disk representation. `urban_target` and `soil_total` are derived and
/// never stored.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub rows: usize,
    pub cols: usize,
    pub categories: Vec<u8>,
    pub soil: Vec<f64>,
    pub budget: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    rows: usize,
    cols: usize,
    categories: Vec<u8>,
    soil: Vec<f64>,
    budget: usize,
    urban_target: usize,
    soil_total: f64,
    max_soil: f64,
    /// Flat cell index of every genotype position.
    agricultural: Vec<usize>,
    /// Inverse of `agricultural`; `None` for non-agricultural cells.
    position: Vec<Option<usize>>,
    /// Flat von Neumann neighbours of every cell.
    adjacency: Vec<Vec<usize>>,
}

impl Instance {
    /// Builds and validates an instance. Soil values of non-agricultural
    /// cells are stored as zero and never contribute to the soil total.
    pub fn new(
        rows: usize,
        cols: usize,
        categories: Vec<u8>,
        soil: Vec<f64>,
        budget: usize,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::validation(
                "grid must have at least one row and one column",
            ));
        }
        let cells = rows * cols;
        if categories.len() != cells {
            return Err(Error::validation(format!(
                "categories has {} entries, expected rows*cols = {cells}",
                categories.len()
            )));
        }
        if soil.len() != cells {
            return Err(Error::validation(format!(
                "soil has {} entries, expected rows*cols = {cells}",
                soil.len()
            )));
        }
        if let Some(i) = categories.iter().position(|&k| k == 0) {
            return Err(Error::validation(format!(
                "category code at cell {i} is 0; codes start at 1"
            )));
        }
        if let Some(i) = soil.iter().position(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::validation(format!(
                "soil value at cell {i} must be finite and non-negative, got {}",
                soil[i]
            )));
        }
        if budget == 0 {
            return Err(Error::validation("budget T must be positive"));
        }

        let agricultural: Vec<usize> = (0..cells)
            .filter(|&c| categories[c] == AGRICULTURAL)
            .collect();
        if agricultural.len() < budget {
            return Err(Error::validation(format!(
                "budget T = {budget} exceeds the {} agricultural cells; no feasible solution exists",
                agricultural.len()
            )));
        }
        let mut position = vec![None; cells];
        for (pos, &cell) in agricultural.iter().enumerate() {
            position[cell] = Some(pos);
        }
        let soil: Vec<f64> = soil
            .into_iter()
            .zip(&categories)
            .map(|(a, &k)| if k == AGRICULTURAL { a } else { 0.0 })
            .collect();
        let soil_total: f64 = agricultural.iter().map(|&c| soil[c]).sum();
        if !(soil_total > 0.0) {
            return Err(Error::validation(
                "soil total A over agricultural cells must be positive",
            ));
        }
        let max_soil = agricultural.iter().map(|&c| soil[c]).fold(0.0, f64::max);
        let urban = categories.iter().filter(|&&k| k == URBAN).count();

        let adjacency = (0..cells)
            .map(|c| {
                let (r, col) = (c / cols, c % cols);
                let mut out = Vec::with_capacity(4);
                if r > 0 {
                    out.push(c - cols);
                }
                if col > 0 {
                    out.push(c - 1);
                }
                if col + 1 < cols {
                    out.push(c + 1);
                }
                if r + 1 < rows {
                    out.push(c + cols);
                }
                out
            })
            .collect();

        Ok(Self {
            rows,
            cols,
            categories,
            soil,
            budget,
            urban_target: urban + budget,
            soil_total,
            max_soil,
            agricultural,
            position,
            adjacency,
        })
    }

    pub fn from_file_repr(file: InstanceFile) -> Result<Self> {
        Self::new(
            file.rows,
            file.cols,
            file.categories,
            file.soil,
            file.budget,
        )
    }

    pub fn to_file_repr(&self) -> InstanceFile {
        InstanceFile {
            rows: self.rows,
            cols: self.cols,
            categories: self.categories.clone(),
            soil: self.soil.clone(),
            budget: self.budget,
        }
    }

    pub fn from_json_str(text: &str, origin: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("{origin}:{}:{}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        Self::from_file_repr(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file_repr()).expect("instance serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    /// Content hash of the canonical JSON form.
    pub fn id(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Row-major category codes.
    pub fn categories(&self) -> &[u8] {
        &self.categories
    }

    pub fn category(&self, idx: CellIndex) -> u8 {
        self.categories[self.flat(idx)]
    }

    /// Row-major soil values (zero outside agricultural cells).
    pub fn soil(&self) -> &[f64] {
        &self.soil
    }

    /// Largest soil value among agricultural cells.
    pub fn max_soil(&self) -> f64 {
        self.max_soil
    }

    /// Conversion budget T.
    pub fn budget(&self) -> usize {
        self.budget
    }

    /// Required urban count U after conversion.
    pub fn urban_target(&self) -> usize {
        self.urban_target
    }

    /// Soil total A over agricultural cells.
    pub fn soil_total(&self) -> f64 {
        self.soil_total
    }

    pub fn initial_urban(&self) -> usize {
        self.urban_target - self.budget
    }

    /// Maximum category code present (K).
    pub fn category_count(&self) -> u8 {
        self.categories.iter().copied().max().unwrap_or(0)
    }

    /// Genotype length n.
    pub fn genotype_len(&self) -> usize {
        self.agricultural.len()
    }

    /// Flat cell index of every genotype position.
    pub fn agricultural_cells(&self) -> &[usize] {
        &self.agricultural
    }

    /// Genotype position of a flat cell, if it is agricultural.
    pub fn position_of(&self, cell: usize) -> Option<usize> {
        self.position[cell]
    }

    pub fn flat(&self, idx: CellIndex) -> usize {
        idx.row * self.cols + idx.col
    }

    pub fn unflat(&self, cell: usize) -> CellIndex {
        CellIndex::new(cell / self.cols, cell % self.cols)
    }

    pub fn contains(&self, idx: CellIndex) -> bool {
        idx.row < self.rows && idx.col < self.cols
    }

    /// Von Neumann neighbours of a flat cell index.
    pub fn adjacent(&self, cell: usize) -> &[usize] {
        &self.adjacency[cell]
    }

    /// Re-runs every construction check on this instance.
    pub fn validate(&self) -> Result<()> {
        Self::from_file_repr(self.to_file_repr()).map(|_| ())
    }
}

/// Reads and validates an instance file.
pub fn load_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Instance::from_json_str(&text, &path.display().to_string())
}

/// The 2 to 4 in-bounds orthogonal neighbours of `idx`, in the order
/// up, left, right, down.
pub fn neighbors(idx: CellIndex, inst: &Instance) -> Vec<CellIndex> {
    debug_assert!(inst.contains(idx));
    inst.adjacent(inst.flat(idx))
        .iter()
        .map(|&c| inst.unflat(c))
        .collect()
}

/// Knobs of the synthetic instance generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorParams {
    /// T as a fraction of the agricultural cell count.
    pub budget_fraction: f64,
    /// Number of contiguous initial urban regions.
    pub urban_seeds: usize,
    /// Share of all cells that start out urban.
    pub urban_fraction: f64,
    /// Place fixed non-urban, non-agricultural patches.
    pub include_fixed: bool,
    pub fixed_patches: usize,
    /// Share of all cells covered by fixed patches.
    pub fixed_fraction: f64,
    /// Number of distinct fixed codes, assigned from 3 upwards.
    pub fixed_categories: u8,
    /// Lattice spacing (in cells) of the coarsest soil-noise octave.
    pub noise_scale: usize,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            budget_fraction: 0.1,
            urban_seeds: 3,
            urban_fraction: 0.06,
            include_fixed: true,
            fixed_patches: 4,
            fixed_fraction: 0.08,
            fixed_categories: 3,
            noise_scale: 8,
        }
    }
}

impl GeneratorParams {
    fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        if rows < 4 || cols < 4 {
            return Err(Error::validation(format!(
                "generated grids need rows, cols >= 4, got {rows}x{cols}"
            )));
        }
        if !(self.budget_fraction > 0.0 && self.budget_fraction < 1.0) {
            return Err(Error::validation(format!(
                "budget_fraction must lie in (0, 1), got {}",
                self.budget_fraction
            )));
        }
        for (name, v) in [
            ("urban_fraction", self.urban_fraction),
            ("fixed_fraction", self.fixed_fraction),
        ] {
            if !(0.0..0.5).contains(&v) {
                return Err(Error::validation(format!(
                    "{name} must lie in [0, 0.5), got {v}"
                )));
            }
        }
        if self.include_fixed && self.fixed_patches > 0 && self.fixed_categories == 0 {
            return Err(Error::validation("fixed_categories must be >= 1"));
        }
        if self.fixed_categories > 250 {
            return Err(Error::validation("fixed_categories must be <= 250"));
        }
        if self.noise_scale == 0 {
            return Err(Error::validation("noise_scale must be >= 1"));
        }
        Ok(())
    }
}

/// Seeded synthetic instance: a few contiguous urban regions, optional fixed
/// patches, and a spatially smooth soil field normalised to [0, 1] over the
/// agricultural cells. Pure function of its arguments.
pub fn generate_instance(
    seed: u64,
    rows: usize,
    cols: usize,
    params: &GeneratorParams,
) -> Result<Instance> {
    params.validate(rows, cols)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = rows * cols;
    let mut categories = vec![AGRICULTURAL; cells];

    let urban_cells = (params.urban_fraction * cells as f64).round() as usize;
    if params.urban_seeds > 0 {
        let per_seed = (urban_cells / params.urban_seeds).max(1);
        for _ in 0..params.urban_seeds {
            grow_patch(&mut categories, rows, cols, URBAN, per_seed, &mut rng);
        }
    }
    if params.include_fixed && params.fixed_patches > 0 {
        let fixed_cells = (params.fixed_fraction * cells as f64).round() as usize;
        let per_patch = (fixed_cells / params.fixed_patches).max(1);
        for p in 0..params.fixed_patches {
            let code = 3 + (p % params.fixed_categories as usize) as u8;
            grow_patch(&mut categories, rows, cols, code, per_patch, &mut rng);
        }
    }

    let noise = value_noise(rows, cols, params.noise_scale, &mut rng);
    let (lo, hi) = categories
        .iter()
        .zip(&noise)
        .filter(|(&k, _)| k == AGRICULTURAL)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, &v)| {
            (lo.min(v), hi.max(v))
        });
    let soil: Vec<f64> = categories
        .iter()
        .zip(&noise)
        .map(|(&k, &v)| {
            if k != AGRICULTURAL {
                0.0
            } else if hi > lo {
                (v - lo) / (hi - lo)
            } else {
                1.0
            }
        })
        .collect();

    let ag = categories.iter().filter(|&&k| k == AGRICULTURAL).count();
    if ag == 0 {
        return Err(Error::validation("generator left no agricultural cells"));
    }
    let budget = ((params.budget_fraction * ag as f64).round() as usize).clamp(1, ag);
    Instance::new(rows, cols, categories, soil, budget)
}

/// Grows one contiguous patch of `code` over agricultural cells from a
/// random agricultural seed cell.
fn grow_patch(
    categories: &mut [u8],
    rows: usize,
    cols: usize,
    code: u8,
    size: usize,
    rng: &mut ChaCha8Rng,
) {
    let free: Vec<usize> = (0..categories.len())
        .filter(|&c| categories[c] == AGRICULTURAL)
        .collect();
    // Keep at least a handful of agricultural cells.
    if free.len() <= size + 4 {
        return;
    }
    let start = *free.choose(rng).expect("non-empty");
    categories[start] = code;
    let mut frontier = Vec::new();
    push_free_neighbours(categories, rows, cols, start, &mut frontier);
    let mut placed = 1;
    while placed < size && !frontier.is_empty() {
        let i = rng.random_range(0..frontier.len());
        let cell = frontier.swap_remove(i);
        if categories[cell] != AGRICULTURAL {
            continue;
        }
        categories[cell] = code;
        placed += 1;
        push_free_neighbours(categories, rows, cols, cell, &mut frontier);
    }
}

fn push_free_neighbours(
    categories: &[u8],
    rows: usize,
    cols: usize,
    c: usize,
    out: &mut Vec<usize>,
) {
    let (r, col) = (c / cols, c % cols);
    let mut push = |n: usize| {
        if categories[n] == AGRICULTURAL {
            out.push(n);
        }
    };
    if r > 0 {
        push(c - cols);
    }
    if col > 0 {
        push(c - 1);
    }
    if col + 1 < cols {
        push(c + 1);
    }
    if r + 1 < rows {
        push(c + cols);
    }
}

/// Two-octave value noise with smoothstep interpolation.
fn value_noise(rows: usize, cols: usize, scale: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    let mut amplitude = 1.0;
    let mut spacing = scale as f64;
    for _ in 0..2 {
        let lr = (rows as f64 / spacing).ceil() as usize + 2;
        let lc = (cols as f64 / spacing).ceil() as usize + 2;
        let lattice: Vec<f64> = (0..lr * lc).map(|_| rng.random::<f64>()).collect();
        for r in 0..rows {
            for c in 0..cols {
                let y = r as f64 / spacing;
                let x = c as f64 / spacing;
                let (y0, x0) = (y.floor() as usize, x.floor() as usize);
                let (ty, tx) = (smoothstep(y.fract()), smoothstep(x.fract()));
                let at = |i: usize, j: usize| lattice[i * lc + j];
                let top = at(y0, x0) * (1.0 - tx) + at(y0, x0 + 1) * tx;
                let bottom = at(y0 + 1, x0) * (1.0 - tx) + at(y0 + 1, x0 + 1) * tx;
                out[r * cols + c] += amplitude * (top * (1.0 - ty) + bottom * ty);
            }
        }
        amplitude *= 0.5;
        spacing = (spacing / 2.0).max(1.0);
    }
    out
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}
