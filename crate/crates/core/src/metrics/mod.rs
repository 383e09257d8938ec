//! Front quality indicators and the statistics used to compare optimizers.
//!
//! Both objectives are minimised. IGD is measured in raw objective units;
//! normalisation across optimizers happens afterwards.

mod rank;
mod wilcoxon;

pub use rank::{joined_rank, rank_table, Direction, RankTable};
pub use wilcoxon::{
    wilcoxon_signed_rank, wilcoxon_signed_rank_with, WilcoxonDecision, WilcoxonMethod,
    WilcoxonReport, EXACT_LIMIT, MIN_PAIRS,
};

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::ObjectivePoint;

/// Relative margin applied to the pooled maximum when building a reference
/// point.
pub const REFERENCE_SCALE: f64 = 1.01;
/// Additive margin used instead when a pooled maximum is zero.
pub const REFERENCE_ZERO_OFFSET: f64 = 0.01;

/// A set of mutually non-dominated, distinct objective points, sorted by LAP.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Front(Vec<ObjectivePoint>);

impl Front {
    /// Keeps the non-dominated, distinct subset of `points`.
    pub fn from_points(points: impl IntoIterator<Item = ObjectivePoint>) -> Self {
        let mut pts: Vec<ObjectivePoint> = points.into_iter().collect();
        pts.sort_by(|a, b| a.lap.total_cmp(&b.lap).then(a.tel.total_cmp(&b.tel)));
        pts.dedup();
        // After sorting by (lap, tel), a point survives iff its tel is
        // strictly below every tel seen so far.
        let mut out: Vec<ObjectivePoint> = Vec::with_capacity(pts.len());
        for p in pts {
            if out.last().is_none_or(|last| p.tel < last.tel) {
                out.push(p);
            }
        }
        Front(out)
    }

    pub fn points(&self) -> &[ObjectivePoint] {
        &self.0
    }

    pub fn into_points(self) -> Vec<ObjectivePoint> {
        self.0
    }
}

impl Deref for Front {
    type Target = [ObjectivePoint];

    fn deref(&self) -> &[ObjectivePoint] {
        &self.0
    }
}

impl FromIterator<ObjectivePoint> for Front {
    fn from_iter<I: IntoIterator<Item = ObjectivePoint>>(iter: I) -> Self {
        Front::from_points(iter)
    }
}

/// Non-dominated union of several fronts.
pub fn pseudo_optimal_front(fronts: &[Front]) -> Result<Front> {
    if fronts.iter().all(|f| f.is_empty()) {
        return Err(Error::contract(
            "pseudo-optimal front needs a non-empty input",
        ));
    }
    Ok(Front::from_points(
        fronts.iter().flat_map(|f| f.iter().copied()),
    ))
}

fn distance(a: &ObjectivePoint, b: &ObjectivePoint) -> f64 {
    (a.lap - b.lap).hypot(a.tel - b.tel)
}

/// Mean distance from each reference point to its nearest evaluated point.
pub fn igd(reference: &[ObjectivePoint], evaluated: &[ObjectivePoint]) -> Result<f64> {
    if reference.is_empty() || evaluated.is_empty() {
        return Err(Error::contract(
            "IGD needs non-empty reference and evaluated fronts",
        ));
    }
    let total: f64 = reference
        .iter()
        .map(|r| {
            evaluated
                .iter()
                .map(|e| distance(r, e))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(total / reference.len() as f64)
}

/// Area dominated by `front` and bounded by `reference`. Dominated and
/// duplicate points are allowed and contribute nothing.
pub fn hypervolume_2d(front: &[ObjectivePoint], reference: ObjectivePoint) -> Result<f64> {
    if let Some(p) = front
        .iter()
        .find(|p| !(p.lap <= reference.lap && p.tel <= reference.tel))
    {
        return Err(Error::contract(format!(
            "point ({}, {}) lies beyond the reference point ({}, {})",
            p.lap, p.tel, reference.lap, reference.tel
        )));
    }
    let mut pts = front.to_vec();
    pts.sort_by(|a, b| a.lap.total_cmp(&b.lap).then(a.tel.total_cmp(&b.tel)));
    let mut area = 0.0;
    let mut ceiling = reference.tel;
    for p in pts {
        if p.tel < ceiling {
            area += (reference.lap - p.lap) * (ceiling - p.tel);
            ceiling = p.tel;
        }
    }
    Ok(area)
}

/// Componentwise maximum over all points, pushed outward by
/// [`REFERENCE_SCALE`] (or by [`REFERENCE_ZERO_OFFSET`] when a maximum is 0).
pub fn reference_point<'a>(
    fronts: impl IntoIterator<Item = &'a [ObjectivePoint]>,
) -> Result<ObjectivePoint> {
    let mut max: Option<[f64; 2]> = None;
    for p in fronts.into_iter().flatten() {
        let m = max.get_or_insert([p.lap, p.tel]);
        m[0] = m[0].max(p.lap);
        m[1] = m[1].max(p.tel);
    }
    let [lap, tel] =
        max.ok_or_else(|| Error::contract("reference point needs at least one point"))?;
    let widen = |v: f64| {
        if v == 0.0 {
            REFERENCE_ZERO_OFFSET
        } else if v > 0.0 {
            v * REFERENCE_SCALE
        } else {
            v / REFERENCE_SCALE
        }
    };
    Ok(ObjectivePoint::new(widen(lap), widen(tel)))
}

/// Min-max normalisation; a degenerate span maps to 0.5.
pub fn normalize(value: f64, vmin: f64, vmax: f64) -> Result<f64> {
    if !(vmax >= vmin) {
        return Err(Error::contract(format!(
            "normalize bounds reversed: [{vmin}, {vmax}]"
        )));
    }
    if !(vmin..=vmax).contains(&value) {
        return Err(Error::contract(format!(
            "value {value} outside normalisation bounds [{vmin}, {vmax}]"
        )));
    }
    if vmax == vmin {
        return Ok(0.5);
    }
    Ok((value - vmin) / (vmax - vmin))
}
