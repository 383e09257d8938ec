//! Binary encoding over agricultural cells, map decoding, and the region
//! analysis behind the mask crossovers.
//!
//! Position `i` of a [`Genotype`] refers to the `i`-th agricultural cell in
//! row-major order; a one converts that cell to urban. All connectivity is
//! von Neumann (4-neighbourhood).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::instance::{Instance, URBAN};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Genotype(Vec<bool>);

impl Genotype {
    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    /// Genotype of length `n` with ones exactly at `positions`.
    pub fn from_positions(n: usize, positions: &[usize]) -> Self {
        let mut g = Self::zeros(n);
        for &p in positions {
            g.0[p] = true;
        }
        g
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.0[i] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Positions holding a one, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
    }

    /// Positions holding a zero, ascending.
    pub fn zeros_iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &b)| !b)
            .map(|(i, _)| i)
    }

    pub fn unitation(&self) -> usize {
        unitation(self)
    }

    pub fn is_feasible(&self, inst: &Instance) -> bool {
        self.len() == inst.genotype_len() && self.unitation() == inst.budget()
    }

    pub fn to_bit_string(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl fmt::Debug for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Genotype({})", self.to_bit_string())
    }
}

impl fmt::Display for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bit_string())
    }
}

impl FromStr for Genotype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .enumerate()
            .map(|(i, ch)| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse {
                    location: format!("genotype character {i}"),
                    message: format!("expected '0' or '1', found {other:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(Genotype)
    }
}

impl Serialize for Genotype {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_bit_string())
    }
}

impl<'de> Deserialize<'de> for Genotype {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Number of ones.
pub fn unitation(g: &Genotype) -> usize {
    g.0.iter().filter(|&&b| b).count()
}

/// Category grid after applying a genotype.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedMap {
    rows: usize,
    cols: usize,
    cells: Vec<u8>,
}

impl DecodedMap {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major category codes.
    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub(crate) fn cells_mut(&mut self) -> &mut [u8] {
        &mut self.cells
    }

    pub fn from_cells(rows: usize, cols: usize, cells: Vec<u8>) -> Result<Self> {
        if rows * cols != cells.len() || rows == 0 || cols == 0 {
            return Err(Error::contract(format!(
                "map of {rows}x{cols} needs {} cells, got {}",
                rows * cols,
                cells.len()
            )));
        }
        Ok(Self { rows, cols, cells })
    }

    pub fn urban_count(&self) -> usize {
        self.cells.iter().filter(|&&k| k == URBAN).count()
    }

    /// Flat von Neumann neighbours of `cell`.
    pub fn neighbours(&self, cell: usize) -> impl Iterator<Item = usize> {
        grid_neighbours(self.rows, self.cols, cell)
    }
}

pub(crate) fn grid_neighbours(
    rows: usize,
    cols: usize,
    cell: usize,
) -> impl Iterator<Item = usize> {
    let (r, c) = (cell / cols, cell % cols);
    [
        (r > 0).then(|| cell - cols),
        (c > 0).then(|| cell - 1),
        (c + 1 < cols).then(|| cell + 1),
        (r + 1 < rows).then(|| cell + cols),
    ]
    .into_iter()
    .flatten()
}

fn check_len(g: &Genotype, inst: &Instance) -> Result<()> {
    if g.len() != inst.genotype_len() {
        return Err(Error::contract(format!(
            "genotype has length {}, instance expects {}",
            g.len(),
            inst.genotype_len()
        )));
    }
    Ok(())
}

/// Applies `g` to the instance map: every agricultural cell whose bit is one
/// becomes urban.
pub fn decode(g: &Genotype, inst: &Instance) -> Result<DecodedMap> {
    check_len(g, inst)?;
    Ok(decode_unchecked(g, inst))
}

pub(crate) fn decode_unchecked(g: &Genotype, inst: &Instance) -> DecodedMap {
    let mut cells = inst.categories().to_vec();
    for (pos, &cell) in inst.agricultural_cells().iter().enumerate() {
        if g.get(pos) {
            cells[cell] = URBAN;
        }
    }
    DecodedMap {
        rows: inst.rows(),
        cols: inst.cols(),
        cells,
    }
}

/// Reads the genotype back from a decoded map.
pub fn encode(map: &DecodedMap, inst: &Instance) -> Genotype {
    Genotype(
        inst.agricultural_cells()
            .iter()
            .map(|&c| map.cells[c] == URBAN)
            .collect(),
    )
}

/// Connected components of the cells selected by `member`, where two
/// adjacent members are joined only if `linked` holds. Components are
/// listed by their smallest cell; cells inside a component ascend.
pub(crate) fn label_components(
    rows: usize,
    cols: usize,
    member: impl Fn(usize) -> bool,
    linked: impl Fn(usize, usize) -> bool,
) -> Vec<Vec<usize>> {
    let n = rows * cols;
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] || !member(start) {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut comp = Vec::new();
        while let Some(c) = stack.pop() {
            comp.push(c);
            for nb in grid_neighbours(rows, cols, c) {
                if !seen[nb] && member(nb) && linked(c, nb) {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Maximal 4-connected groups of urban cells (fixed and converted alike),
/// as flat cell indices.
pub fn urban_regions(m: &DecodedMap) -> Vec<Vec<usize>> {
    label_components(m.rows, m.cols, |c| m.cells[c] == URBAN, |_, _| true)
}

/// Disjoint clusters of genotype positions exchanged atomically by the mask
/// crossovers. Masks are non-empty, listed by smallest position, and sorted
/// internally.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MaskSet(Vec<Vec<usize>>);

impl MaskSet {
    fn from_masks(mut masks: Vec<Vec<usize>>) -> Self {
        masks.retain(|m| !m.is_empty());
        for m in &mut masks {
            m.sort_unstable();
        }
        masks.sort_unstable_by_key(|m| m[0]);
        Self(masks)
    }

    pub fn masks(&self) -> &[Vec<usize>] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn covered(&self) -> usize {
        self.0.iter().map(Vec::len).sum()
    }

    pub fn into_masks(self) -> Vec<Vec<usize>> {
        self.0
    }
}

fn check_pair(a: &Genotype, b: &Genotype, inst: &Instance) -> Result<()> {
    check_len(a, inst)?;
    check_len(b, inst)
}

fn positions_of(cells: &[usize], inst: &Instance) -> Vec<usize> {
    cells.iter().filter_map(|&c| inst.position_of(c)).collect()
}

/// Simple-region clustering: every urban region of either parent yields the
/// positions of its converted cells (fixed urban cells only connect), and
/// regions sharing a position are merged.
pub fn cluster_src(a: &Genotype, b: &Genotype, inst: &Instance) -> Result<MaskSet> {
    check_pair(a, b, inst)?;
    let n = inst.genotype_len();
    let mut uf = UnionFind::new(n);
    let mut covered = vec![false; n];
    for parent in [a, b] {
        let map = decode_unchecked(parent, inst);
        for region in urban_regions(&map) {
            let positions = positions_of(&region, inst);
            if let Some((&first, rest)) = positions.split_first() {
                covered[first] = true;
                for &p in rest {
                    covered[p] = true;
                    uf.union(first, p);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for p in (0..n).filter(|&p| covered[p]) {
        groups[uf.find(p)].push(p);
    }
    Ok(MaskSet::from_masks(groups))
}

/// Differing-region clustering: connected components of the cells where the
/// parents differ, adjacency taken among differing cells only.
pub fn cluster_drc(a: &Genotype, b: &Genotype, inst: &Instance) -> Result<MaskSet> {
    cluster_drc_with(a, b, inst, false)
}

/// As [`cluster_drc`]; with `bridge_fixed_urban` set, initially urban cells
/// also connect differing cells they touch.
pub fn cluster_drc_with(
    a: &Genotype,
    b: &Genotype,
    inst: &Instance,
    bridge_fixed_urban: bool,
) -> Result<MaskSet> {
    check_pair(a, b, inst)?;
    let diff = difference_direction(a, b, inst);
    Ok(differing_components(
        inst,
        &diff,
        bridge_fixed_urban,
        |_, _| true,
    ))
}

/// Like DRC, but a cluster holds only cells that differ in the same
/// direction (converted in `a` only, or in `b` only).
pub fn cluster_idrc(a: &Genotype, b: &Genotype, inst: &Instance) -> Result<MaskSet> {
    cluster_idrc_with(a, b, inst, false)
}

pub fn cluster_idrc_with(
    a: &Genotype,
    b: &Genotype,
    inst: &Instance,
    bridge_fixed_urban: bool,
) -> Result<MaskSet> {
    check_pair(a, b, inst)?;
    let diff = difference_direction(a, b, inst);
    if !bridge_fixed_urban {
        return Ok(differing_components(inst, &diff, false, |x, y| x == y));
    }
    // With bridging, each direction class is labelled on its own so that a
    // shared fixed block never joins opposite directions.
    let mut masks = Vec::new();
    for dir in [Direction::OnlyA, Direction::OnlyB] {
        let class: Vec<Option<Direction>> = diff.iter().map(|d| d.filter(|&x| x == dir)).collect();
        masks.extend(differing_components(inst, &class, true, |_, _| true).into_masks());
    }
    Ok(MaskSet::from_masks(masks))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    OnlyA,
    OnlyB,
}

/// Per flat cell: which parent converts it, when the parents differ there.
fn difference_direction(a: &Genotype, b: &Genotype, inst: &Instance) -> Vec<Option<Direction>> {
    let mut out = vec![None; inst.cell_count()];
    for (pos, &cell) in inst.agricultural_cells().iter().enumerate() {
        out[cell] = match (a.get(pos), b.get(pos)) {
            (true, false) => Some(Direction::OnlyA),
            (false, true) => Some(Direction::OnlyB),
            _ => None,
        };
    }
    out
}

fn differing_components(
    inst: &Instance,
    diff: &[Option<Direction>],
    bridge_fixed_urban: bool,
    same_class: impl Fn(Direction, Direction) -> bool,
) -> MaskSet {
    let cats = inst.categories();
    let member = |c: usize| diff[c].is_some() || (bridge_fixed_urban && cats[c] == URBAN);
    let linked = |x: usize, y: usize| match (diff[x], diff[y]) {
        (Some(dx), Some(dy)) => same_class(dx, dy),
        _ => true,
    };
    let comps = label_components(inst.rows(), inst.cols(), member, linked);
    MaskSet::from_masks(
        comps
            .iter()
            .map(|comp| {
                comp.iter()
                    .filter(|&&c| diff[c].is_some())
                    .filter_map(|&c| inst.position_of(c))
                    .collect()
            })
            .collect(),
    )
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}
