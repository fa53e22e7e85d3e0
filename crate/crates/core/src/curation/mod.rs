//! Corpus scanning, metric runs, aesthetic scoring, subset selection,
//! captions, manifests and summary statistics.

mod captions;
mod manifest;
mod record;
mod run;
mod scan;
mod scorer;
mod select;
mod stats;

pub use captions::{caption_path, merge_captions, word_count};
pub use manifest::{
    decode_manifest, decode_record, encode_manifest, encode_record, format_float, quantize, read_manifest,
    read_manifest_prefix, write_manifest,
};
pub use record::{ImageRecord, MetricKey, SelectionConfig};
pub use run::{partial_path, run_metrics, RunOptions, RunStatus};
pub use scan::{list_candidates, load_gray, load_rgb, measure_all, measure_image, relative_path, scan_corpus};
pub use scorer::{
    aesthetic_score, colorfulness, heuristic_score, read_score_file, rms_contrast, ScorerSpec, SubprocessScorer,
    MAX_RETRIES, RESPONSE_TIMEOUT,
};
pub use select::{intersect, percentile_select, preliminary_filter, run_selection, top_count, SubsetCounts};
pub use stats::{stats_report, Histogram, StatsReport, HISTOGRAM_BINS};
