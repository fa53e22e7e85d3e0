//! JSON-lines persistence of [`ImageRecord`]s.
//!
//! One object per line with a fixed key order:
//!
//! ```text
//! {"path", "width", "height",
//!  "metrics": null | {"laplacian_var", "sobel_edge_density",
//!                     "glcm": {"aggregate", "directions": [4 x {"contrast", "entropy",
//!                              "correlation", "degenerate"}]},
//!                     "shannon_entropy", "aesthetic"},
//!  "caption", "caption_len", "in_s", "in_sg", "in_se", "in_sa", "selected"}
//! ```
//!
//! GLCM directions are ordered 0, 45, 90, 135 degrees. Floats carry nine
//! significant digits, so a manifest re-written after reading is byte-identical.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Deserialize;

use super::record::ImageRecord;
use crate::error::{Error, Result};
use crate::metrics::{GlcmFeatures, GlcmScore, MetricVector};

/// `%.9g`-style rendering that is also valid JSON.
pub fn format_float(v: f64) -> String {
    debug_assert!(v.is_finite());
    if v == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Round to the value a manifest round trip would produce.
pub fn quantize(v: f64) -> f64 {
    format_float(v).parse().expect("formatted float parses")
}

fn push_json_str(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("string serializes"));
}

fn push_opt_f64(out: &mut String, v: Option<f64>) {
    match v {
        Some(v) => out.push_str(&format_float(v)),
        None => out.push_str("null"),
    }
}

fn check_finite(record: &ImageRecord) -> Result<()> {
    if let Some(m) = &record.metrics {
        let mut vals = vec![m.laplacian_var, m.sobel_edge_density, m.glcm.aggregate, m.shannon_entropy];
        vals.extend(m.aesthetic);
        for d in &m.glcm.directions {
            vals.extend([d.contrast, d.entropy, d.correlation]);
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("record {} has non-finite metrics", record.path)));
        }
    }
    Ok(())
}

/// Serialize one record (without the trailing newline).
pub fn encode_record(r: &ImageRecord) -> Result<String> {
    check_finite(r)?;
    let mut s = String::with_capacity(512);
    s.push_str("{\"path\":");
    push_json_str(&mut s, &r.path);
    let _ = write!(s, ",\"width\":{},\"height\":{},\"metrics\":", r.width, r.height);
    match &r.metrics {
        None => s.push_str("null"),
        Some(m) => {
            s.push_str("{\"laplacian_var\":");
            s.push_str(&format_float(m.laplacian_var));
            s.push_str(",\"sobel_edge_density\":");
            s.push_str(&format_float(m.sobel_edge_density));
            s.push_str(",\"glcm\":{\"aggregate\":");
            s.push_str(&format_float(m.glcm.aggregate));
            s.push_str(",\"directions\":[");
            for (i, d) in m.glcm.directions.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                let _ = write!(
                    s,
                    "{{\"contrast\":{},\"entropy\":{},\"correlation\":{},\"degenerate\":{}}}",
                    format_float(d.contrast),
                    format_float(d.entropy),
                    format_float(d.correlation),
                    d.degenerate
                );
            }
            s.push_str("]},\"shannon_entropy\":");
            s.push_str(&format_float(m.shannon_entropy));
            s.push_str(",\"aesthetic\":");
            push_opt_f64(&mut s, m.aesthetic);
            s.push('}');
        }
    }
    s.push_str(",\"caption\":");
    match &r.caption {
        Some(c) => push_json_str(&mut s, c),
        None => s.push_str("null"),
    }
    s.push_str(",\"caption_len\":");
    match r.caption_len {
        Some(n) => {
            let _ = write!(s, "{n}");
        }
        None => s.push_str("null"),
    }
    let _ = write!(
        s,
        ",\"in_s\":{},\"in_sg\":{},\"in_se\":{},\"in_sa\":{},\"selected\":{}}}",
        r.in_s, r.in_sg, r.in_se, r.in_sa, r.selected
    );
    Ok(s)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LineDirection {
    contrast: f64,
    entropy: f64,
    correlation: f64,
    degenerate: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LineGlcm {
    aggregate: f64,
    directions: [LineDirection; 4],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LineMetrics {
    laplacian_var: f64,
    sobel_edge_density: f64,
    glcm: LineGlcm,
    shannon_entropy: f64,
    aesthetic: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Line {
    path: String,
    width: u32,
    height: u32,
    metrics: Option<LineMetrics>,
    caption: Option<String>,
    caption_len: Option<u32>,
    in_s: bool,
    in_sg: bool,
    in_se: bool,
    in_sa: bool,
    selected: bool,
}

impl From<Line> for ImageRecord {
    fn from(l: Line) -> Self {
        let metrics = l.metrics.map(|m| MetricVector {
            laplacian_var: m.laplacian_var,
            sobel_edge_density: m.sobel_edge_density,
            glcm: GlcmScore {
                aggregate: m.glcm.aggregate,
                directions: m.glcm.directions.map(|d| GlcmFeatures {
                    contrast: d.contrast,
                    entropy: d.entropy,
                    correlation: d.correlation,
                    degenerate: d.degenerate,
                }),
            },
            shannon_entropy: m.shannon_entropy,
            aesthetic: m.aesthetic,
        });
        ImageRecord {
            path: l.path,
            width: l.width,
            height: l.height,
            metrics,
            caption: l.caption,
            caption_len: l.caption_len,
            in_s: l.in_s,
            in_sg: l.in_sg,
            in_se: l.in_se,
            in_sa: l.in_sa,
            selected: l.selected,
        }
    }
}

/// Parse one manifest line; `line_no` is 1-based and only used in errors.
pub fn decode_record(line: &str, line_no: usize) -> Result<ImageRecord> {
    let parsed: Line = serde_json::from_str(line).map_err(|e| Error::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    if parsed.width == 0 || parsed.height == 0 {
        return Err(Error::Parse {
            line: line_no,
            message: "width and height must be positive".into(),
        });
    }
    Ok(parsed.into())
}

pub fn encode_manifest(records: &[ImageRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&encode_record(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn decode_manifest(text: &str) -> Result<Vec<ImageRecord>> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() {
        return Ok(Vec::new());
    }
    body.split('\n')
        .enumerate()
        .map(|(i, line)| decode_record(line, i + 1))
        .collect()
}

/// Write atomically (temporary file, then rename).
pub fn write_manifest(records: &[ImageRecord], path: &Path) -> Result<()> {
    let text = encode_manifest(records)?;
    let tmp = path.with_extension("jsonl.tmp");
    {
        let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(text.as_bytes()).map_err(|e| Error::io(&tmp, e))?;
        w.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ImageRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_manifest(&text)
}

/// Complete, parseable records at the head of a possibly interrupted
/// manifest, and the byte length they occupy.
pub fn read_manifest_prefix(text: &str) -> (Vec<ImageRecord>, usize) {
    let mut records = Vec::new();
    let mut offset = 0;
    for (i, chunk) in text.split_inclusive('\n').enumerate() {
        let Some(line) = chunk.strip_suffix('\n') else {
            break;
        };
        match decode_record(line, i + 1) {
            Ok(r) => records.push(r),
            Err(_) => break,
        }
        offset += chunk.len();
    }
    (records, offset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn float_rendering() {
        assert_eq!(format_float(0.0), "0");
        assert_eq!(format_float(3000.0), "3000");
        assert_eq!(format_float(0.5), "0.5");
        assert_eq!(format_float(1.0 / 3.0), "0.333333333");
        assert_eq!(format_float(-2.5e-7), "-2.5e-7");
        assert_eq!(format_float(123456789012.0), "1.23456789e11");
        assert_eq!(format_float(99999.99999), "100000");
        assert_eq!(format_float(std::f64::consts::LN_2), "0.693147181");
    }

    #[test]
    fn empty_list_is_empty_file() {
        assert_eq!(encode_manifest(&[]).unwrap(), "");
        assert!(decode_manifest("").unwrap().is_empty());
    }

    #[test]
    fn truncated_final_line_names_the_line() {
        let mut r = ImageRecord::stub("a.png", 10, 20);
        r.caption = Some("a \"quoted\" caption".into());
        let mut text = encode_manifest(&[r.clone(), r.clone()]).unwrap();
        text.truncate(text.len() - 20);
        match decode_manifest(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let (prefix, used) = read_manifest_prefix(&text);
        assert_eq!(prefix, vec![r]);
        assert_eq!(&text[used..used + 1], "{");
    }

    #[test]
    fn unknown_keys_and_zero_sizes_rejected() {
        let line = encode_record(&ImageRecord::stub("x.png", 4, 4)).unwrap();
        let extra = line.replacen("{", "{\"bogus\":1,", 1);
        assert!(decode_record(&extra, 7).is_err());
        let zero = line.replace("\"width\":4", "\"width\":0");
        assert!(matches!(decode_record(&zero, 3), Err(Error::Parse { line: 3, .. })));
    }

    prop_compose! {
        fn finite()(v in prop_oneof![
            -1e12f64..1e12,
            -1.0f64..1.0,
            (1e-300f64..1e300).prop_map(|x| x),
            Just(0.0),
        ]) -> f64 { v }
    }

    prop_compose! {
        fn features()(c in finite(), e in finite(), r in -1.0f64..=1.0, d in any::<bool>()) -> GlcmFeatures {
            GlcmFeatures { contrast: c, entropy: e, correlation: r, degenerate: d }
        }
    }

    prop_compose! {
        fn record()(
            path in "[a-z0-9_/ .\u{e9}\"\\\\]{1,24}",
            width in 1u32..20000, height in 1u32..20000,
            has_metrics in any::<bool>(),
            vals in proptest::collection::vec(finite(), 5),
            aesthetic in proptest::option::of(finite()),
            dirs in proptest::array::uniform4(features()),
            caption in proptest::option::of(".{0,40}"),
            caption_len in proptest::option::of(0u32..1000),
            flags in proptest::array::uniform5(any::<bool>()),
        ) -> ImageRecord {
            let q = |v: f64| quantize(v);
            let metrics = has_metrics.then(|| MetricVector {
                laplacian_var: q(vals[0]),
                sobel_edge_density: q(vals[1]),
                glcm: GlcmScore {
                    aggregate: q(vals[2]),
                    directions: dirs.map(|d| GlcmFeatures {
                        contrast: q(d.contrast), entropy: q(d.entropy), correlation: q(d.correlation), degenerate: d.degenerate,
                    }),
                },
                shannon_entropy: q(vals[3]),
                aesthetic: aesthetic.map(q),
            });
            ImageRecord {
                path, width, height, metrics, caption, caption_len,
                in_s: flags[0], in_sg: flags[1], in_se: flags[2], in_sa: flags[3], selected: flags[4],
            }
        }
    }

    proptest! {
        #[test]
        fn read_after_write_is_identity(records in proptest::collection::vec(record(), 0..20)) {
            let text = encode_manifest(&records).unwrap();
            prop_assert_eq!(decode_manifest(&text).unwrap(), records);
        }

        #[test]
        fn rendering_is_idempotent(v in finite()) {
            let once = format_float(v);
            let twice = format_float(once.parse().unwrap());
            prop_assert_eq!(&once, &twice);
            let back: f64 = once.parse().unwrap();
            prop_assert!(v == 0.0 || ((back - v) / v).abs() <= 5e-9);
        }
    }
}
