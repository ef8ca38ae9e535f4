//! Reconstruction quality against known geometry.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{Direction, Interval};
use crate::indicator::{threshold_mask, IndicatorField, Mask};

/// Hull of the projections onto `direction` of the nodes where the field is
/// at least `eps`; `None` when no node qualifies.
pub fn recovered_interval(field: &IndicatorField, direction: &Direction, eps: f64) -> Option<Interval> {
    mask_projection(&threshold_mask(field, eps), direction)
}

/// Hull of the projections of the selected nodes.
pub fn mask_projection(mask: &Mask, direction: &Direction) -> Option<Interval> {
    let mut it = mask.selected().map(|p| direction.project(&p));
    let first = it.next()?;
    let (lo, hi) = it.fold((first, first), |(lo, hi), p| (lo.min(p), hi.max(p)));
    Interval::new(lo, hi).ok()
}

/// Precision and recall; `None` when the mask (precision) or the truth
/// (recall) selects no node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

pub fn classification_scores(mask: &Mask, truth: &Mask) -> Result<Classification> {
    if mask.grid() != truth.grid() {
        return Err(Error::GridMismatch("mask and truth must share one grid".into()));
    }
    let mut both = 0usize;
    let mut selected = 0usize;
    let mut actual = 0usize;
    for (&m, &t) in mask.values().iter().zip(truth.values()) {
        selected += m as usize;
        actual += t as usize;
        both += (m && t) as usize;
    }
    let ratio = |n: usize, d: usize| (d > 0).then(|| n as f64 / d as f64);
    Ok(Classification {
        precision: ratio(both, selected),
        recall: ratio(both, actual),
    })
}

/// `‖field − oracle‖ / ‖oracle‖` over the nodes selected by `region`.
pub fn oracle_l2(field: &IndicatorField, oracle: &IndicatorField, region: &Mask) -> Result<f64> {
    if field.grid() != oracle.grid() || field.grid() != region.grid() {
        return Err(Error::GridMismatch("field, oracle and region must share one grid".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for ((a, b), &r) in field.values().iter().zip(oracle.values()).zip(region.values()) {
        if r {
            num += (a - b) * (a - b);
            den += b * b;
        }
    }
    if den == 0.0 {
        return Err(Error::DegenerateRange("oracle vanishes on the region".into()));
    }
    Ok((num / den).sqrt())
}

/// Face-connected components of a mask (4-neighbours in 2D, 6 in 3D),
/// each listed as node indices in increasing order. Components are ordered
/// by their smallest index.
pub fn connected_components(mask: &Mask) -> Vec<Vec<usize>> {
    let grid = mask.grid();
    let res = grid.resolution();
    let dim = grid.dim();
    let mut label = vec![usize::MAX; grid.len()];
    let mut out = Vec::new();
    for start in 0..grid.len() {
        if !mask.values()[start] || label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut comp = Vec::new();
        let mut stack = vec![start];
        label[start] = id;
        while let Some(i) = stack.pop() {
            comp.push(i);
            let ijk = grid.unravel(i);
            for axis in 0..dim {
                for step in [-1i64, 1] {
                    let c = ijk[axis] as i64 + step;
                    if c < 0 || c >= res[axis] as i64 {
                        continue;
                    }
                    let mut n = ijk;
                    n[axis] = c as usize;
                    let j = grid.index(n);
                    if mask.values()[j] && label[j] == usize::MAX {
                        label[j] = id;
                        stack.push(j);
                    }
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecoveryReport {
    pub strip_boundary_error: Option<f64>,
    pub classification: Option<Classification>,
    pub oracle_l2: Option<f64>,
    /// Wall-clock milliseconds per named stage.
    pub runtime_ms: Vec<(String, f64)>,
}

impl RecoveryReport {
    fn entries(&self, with_runtime: bool) -> Vec<(String, String)> {
        let opt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| x.to_string());
        let mut e = vec![
            ("strip_boundary_error".to_string(), opt(self.strip_boundary_error)),
            ("precision".to_string(), opt(self.classification.and_then(|c| c.precision))),
            ("recall".to_string(), opt(self.classification.and_then(|c| c.recall))),
            ("oracle_l2".to_string(), opt(self.oracle_l2)),
        ];
        if with_runtime {
            for (stage, ms) in &self.runtime_ms {
                e.push((format!("runtime_ms.{stage}"), format!("{ms:.3}")));
            }
        }
        e
    }

    /// One `key=value` line per entry.
    pub fn to_key_values(&self, with_runtime: bool) -> String {
        let mut s = String::new();
        for (k, v) in self.entries(with_runtime) {
            writeln!(s, "{k}={v}").unwrap();
        }
        s
    }

    pub fn csv_header(&self, with_runtime: bool) -> String {
        self.entries(with_runtime).into_iter().map(|(k, _)| k).collect::<Vec<_>>().join(",")
    }

    pub fn csv_row(&self, with_runtime: bool) -> String {
        self.entries(with_runtime).into_iter().map(|(_, v)| v).collect::<Vec<_>>().join(",")
    }
}
