use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::record::{ImageRecord, MetricKey, SelectionConfig};
use crate::error::{Error, Result};

/// Set `in_s` from the absolute resolution, sharpness and edge thresholds.
/// Records without metrics never enter S.
pub fn preliminary_filter(records: &mut [ImageRecord], cfg: &SelectionConfig) {
    for r in records.iter_mut() {
        r.in_s = match &r.metrics {
            Some(m) => {
                r.avg_resolution() >= cfg.min_avg_resolution
                    && m.laplacian_var >= cfg.laplacian_min
                    && m.sobel_edge_density >= cfg.sobel_density_min
            }
            None => false,
        };
    }
}

/// `ceil(fraction * n)`, robust to products like `0.7 * 10 = 7.000000000000001`.
pub fn top_count(fraction: f64, n: usize) -> usize {
    let x = fraction * n as f64;
    let nearest = x.round();
    let k = if (x - nearest).abs() < 1e-9 { nearest } else { x.ceil() };
    (k as usize).min(n)
}

/// Flags the top `ceil(fraction * |S|)` records of S by `key`, descending,
/// ties broken by ascending path. Records outside S are never flagged.
pub fn percentile_select(records: &[ImageRecord], key: MetricKey, fraction: f64) -> Result<Vec<bool>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("fraction must be in (0, 1], got {fraction}")));
    }
    let mut ranked = Vec::new();
    for (i, r) in records.iter().enumerate().filter(|(_, r)| r.in_s) {
        let v = key.value(r).ok_or_else(|| {
            Error::invalid(format!("record {} has no {} value", r.path, key.name()))
        })?;
        ranked.push((i, v));
    }
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| records[a.0].path.cmp(&records[b.0].path))
    });
    let mut flags = vec![false; records.len()];
    for &(i, _) in ranked.iter().take(top_count(fraction, ranked.len())) {
        flags[i] = true;
    }
    Ok(flags)
}

/// `selected = in_sg && in_se && in_sa`.
pub fn intersect(records: &mut [ImageRecord]) {
    for r in records.iter_mut() {
        r.selected = r.in_sg && r.in_se && r.in_sa;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SubsetCounts {
    pub total: usize,
    pub s: usize,
    pub sg: usize,
    pub se: usize,
    pub sa: usize,
    pub selected: usize,
    /// Records in S without an aesthetic score (excluded from S_A).
    pub unscored_in_s: usize,
}

impl SubsetCounts {
    pub fn of(records: &[ImageRecord]) -> Self {
        let count = |f: fn(&ImageRecord) -> bool| records.iter().filter(|r| f(r)).count();
        Self {
            total: records.len(),
            s: count(|r| r.in_s),
            sg: count(|r| r.in_sg),
            se: count(|r| r.in_se),
            sa: count(|r| r.in_sa),
            selected: count(|r| r.selected),
            unscored_in_s: count(|r| r.in_s && r.aesthetic().is_none()),
        }
    }
}

/// Full subset construction: S, then S_G, S_E, S_A from S, then their
/// intersection. Unscored records in S are left out of S_A; the aesthetic
/// cut is taken over the scored part of S.
pub fn run_selection(records: &mut [ImageRecord], cfg: &SelectionConfig) -> Result<SubsetCounts> {
    cfg.validate()?;
    for r in records.iter_mut() {
        r.clear_selection();
    }
    preliminary_filter(records, cfg);

    let sg = percentile_select(records, MetricKey::GlcmAggregate, cfg.top_fraction)?;
    let se = percentile_select(records, MetricKey::ShannonEntropy, cfg.top_fraction)?;

    // Rank aesthetics only among scored members of S.
    let scored: Vec<ImageRecord> = records
        .iter()
        .map(|r| {
            let mut c = r.clone();
            c.in_s = r.in_s && r.aesthetic().is_some();
            c
        })
        .collect();
    let sa = percentile_select(&scored, MetricKey::Aesthetic, cfg.top_fraction)?;

    for (((r, g), e), a) in records.iter_mut().zip(sg).zip(se).zip(sa) {
        r.in_sg = g;
        r.in_se = e;
        r.in_sa = a;
    }
    intersect(records);
    Ok(SubsetCounts::of(records))
}
