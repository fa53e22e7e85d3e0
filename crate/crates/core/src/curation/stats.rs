use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::record::{ImageRecord, MetricKey};
use super::select::SubsetCounts;

pub const HISTOGRAM_BINS: usize = 10;

/// Equal-width histogram over `[min, max]`; the last bin is closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub name: String,
    pub count: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn build(name: &str, values: &[f64], bins: usize) -> Self {
        let vals: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        if vals.is_empty() || bins == 0 {
            return Self {
                name: name.into(),
                count: 0,
                min: None,
                max: None,
                edges: Vec::new(),
                counts: Vec::new(),
            };
        }
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins)
            .map(|i| if i == bins { hi } else { lo + width * i as f64 })
            .collect();
        let mut counts = vec![0; bins];
        for v in &vals {
            let b = if width > 0.0 { ((v - lo) / width) as usize } else { 0 };
            counts[b.min(bins - 1)] += 1;
        }
        Self {
            name: name.into(),
            count: vals.len(),
            min: Some(lo),
            max: Some(hi),
            edges,
            counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub counts: SubsetCounts,
    pub captioned: usize,
    pub histograms: Vec<Histogram>,
}

pub fn stats_report(records: &[ImageRecord]) -> StatsReport {
    let collect = |f: &dyn Fn(&ImageRecord) -> Option<f64>| -> Vec<f64> { records.iter().filter_map(f).collect() };
    let mut histograms = vec![
        Histogram::build("avg_resolution", &collect(&|r| Some(r.avg_resolution())), HISTOGRAM_BINS),
        Histogram::build("width", &collect(&|r| Some(f64::from(r.width))), HISTOGRAM_BINS),
        Histogram::build("height", &collect(&|r| Some(f64::from(r.height))), HISTOGRAM_BINS),
        Histogram::build("caption_len", &collect(&|r| r.caption_len.map(f64::from)), HISTOGRAM_BINS),
    ];
    for key in [
        MetricKey::LaplacianVar,
        MetricKey::SobelEdgeDensity,
        MetricKey::GlcmAggregate,
        MetricKey::ShannonEntropy,
        MetricKey::Aesthetic,
    ] {
        histograms.push(Histogram::build(key.name(), &collect(&|r| key.value(r)), HISTOGRAM_BINS));
    }
    StatsReport {
        counts: SubsetCounts::of(records),
        captioned: records.iter().filter(|r| r.caption.is_some()).count(),
        histograms,
    }
}

impl StatsReport {
    pub fn to_text(&self) -> String {
        let c = &self.counts;
        let mut s = String::new();
        let _ = writeln!(s, "subset      count");
        for (name, n) in [
            ("total", c.total),
            ("S", c.s),
            ("S_G", c.sg),
            ("S_E", c.se),
            ("S_A", c.sa),
            ("selected", c.selected),
            ("unscored", c.unscored_in_s),
            ("captioned", self.captioned),
        ] {
            let _ = writeln!(s, "{name:<10} {n:>6}");
        }
        for h in &self.histograms {
            let _ = writeln!(s);
            match (h.min, h.max) {
                (Some(lo), Some(hi)) => {
                    let _ = writeln!(s, "{} (n={}, min={lo:.4}, max={hi:.4})", h.name, h.count);
                    for (i, n) in h.counts.iter().enumerate() {
                        let _ = writeln!(s, "  [{:>14.4}, {:>14.4}{} {n:>6}", h.edges[i], h.edges[i + 1], if i + 1 == h.counts.len() { "]" } else { ")" });
                    }
                }
                _ => {
                    let _ = writeln!(s, "{} (n=0)", h.name);
                }
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_corpus() {
        let r = stats_report(&[]);
        assert_eq!(r.counts, SubsetCounts::default());
        assert!(r.histograms.iter().all(|h| h.count == 0 && h.counts.is_empty()));
        assert!(r.to_text().contains("selected        0"));
    }

    #[test]
    fn histogram_edges_and_counts() {
        let h = Histogram::build("x", &[0.0, 1.0, 2.5, 9.99, 10.0], 10);
        assert_eq!(h.edges.first(), Some(&0.0));
        assert_eq!(h.edges.last(), Some(&10.0));
        assert_eq!(h.counts.iter().sum::<usize>(), 5);
        assert_eq!(h.counts[0], 1);
        assert_eq!(h.counts[1], 1);
        assert_eq!(h.counts[2], 1);
        assert_eq!(h.counts[9], 2);
        let flat = Histogram::build("y", &[3.0, 3.0], 10);
        assert_eq!(flat.counts[0], 2);
    }

    #[test]
    fn resolution_floor_shows_in_min_bin() {
        let recs: Vec<ImageRecord> = [(3000, 3000), (3840, 2160), (5000, 4000)]
            .iter()
            .map(|&(w, h)| ImageRecord::stub("a.png", w, h))
            .collect();
        let r = stats_report(&recs);
        let h = &r.histograms[0];
        assert_eq!(h.name, "avg_resolution");
        assert!(h.edges[0] >= 3000.0);
        let json = serde_json::to_string(&r).unwrap();
        let back: StatsReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
