use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;

use super::record::ImageRecord;
use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, to_grayscale, GrayImage, MetricConfig};

const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg", "bmp", "tif", "tiff", "webp", "pgm", "ppm", "pnm"];

fn has_image_extension(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

/// `/`-joined path of `path` relative to `root`.
pub fn relative_path(root: &Path, path: &Path) -> Result<String> {
    let rel = path
        .strip_prefix(root)
        .map_err(|_| Error::invalid(format!("{} is not under {}", path.display(), root.display())))?;
    let parts: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
    Ok(parts.join("/"))
}

/// Files under `root` with an image extension, as (relative path, absolute path),
/// sorted by relative path.
pub fn list_candidates(root: &Path) -> Result<Vec<(String, PathBuf)>> {
    let meta = std::fs::metadata(root).map_err(|e| Error::io(root, e))?;
    if !meta.is_dir() {
        return Err(Error::invalid(format!("{} is not a directory", root.display())));
    }
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(root).follow_links(true) {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                if e.depth() == 0 {
                    let path = e.path().map(Path::to_path_buf).unwrap_or_else(|| root.to_path_buf());
                    let io = e.into_io_error().unwrap_or_else(|| std::io::Error::other("walk failed"));
                    return Err(Error::io(path, io));
                }
                warn!("skipping unreadable entry: {e}");
                continue;
            }
        };
        if entry.file_type().is_file() && has_image_extension(entry.path()) {
            out.push((relative_path(root, entry.path())?, entry.path().to_path_buf()));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Decodes an image file into luma.
pub fn load_gray(path: &Path) -> Result<GrayImage> {
    let img = image::open(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    to_grayscale(rgb.as_raw(), w as usize, h as usize)
}

/// Decodes an image file into packed RGB8.
pub fn load_rgb(path: &Path) -> Result<(Vec<u8>, usize, usize)> {
    let img = image::open(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    Ok((rgb.into_raw(), w as usize, h as usize))
}

pub(crate) fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::invalid("workers must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))
}

/// One stub per decodable image under `root`, sorted by path. Files that fail
/// to decode are logged and skipped.
pub fn scan_corpus(root: &Path, workers: usize) -> Result<Vec<ImageRecord>> {
    let candidates = list_candidates(root)?;
    let pool = thread_pool(workers)?;
    let decoded: Vec<Option<ImageRecord>> = pool.install(|| {
        candidates
            .par_iter()
            .map(|(rel, abs)| match load_gray(abs) {
                Ok(g) => Some(ImageRecord::stub(rel.clone(), g.width() as u32, g.height() as u32)),
                Err(e) => {
                    warn!("excluding {rel}: {e}");
                    None
                }
            })
            .collect()
    });
    Ok(decoded.into_iter().flatten().collect())
}

/// Decodes one file and computes its metric vector.
pub fn measure_image(root: &Path, rel: &str, cfg: &MetricConfig) -> Result<ImageRecord> {
    let abs = root.join(rel);
    let gray = load_gray(&abs)?;
    let metrics = compute_metrics(&gray, cfg)?;
    let mut r = ImageRecord::stub(rel, gray.width() as u32, gray.height() as u32);
    r.metrics = Some(metrics);
    Ok(r)
}

/// Metrics for each path in `rels`, in the same order. Files that cannot be
/// decoded or measured are logged and dropped.
pub fn measure_all(root: &Path, rels: &[String], cfg: &MetricConfig, pool: &rayon::ThreadPool) -> Result<Vec<ImageRecord>> {
    cfg.validate()?;
    let results: Vec<Result<ImageRecord>> =
        pool.install(|| rels.par_iter().map(|rel| measure_image(root, rel, cfg)).collect());
    let mut out = Vec::with_capacity(results.len());
    for (rel, r) in rels.iter().zip(results) {
        match r {
            Ok(rec) => out.push(rec),
            Err(e) => warn!("excluding {rel}: {e}"),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_png(path: &Path, w: u32, h: u32) {
        let img = image::RgbImage::from_fn(w, h, |x, y| image::Rgb([(x * 7) as u8, (y * 3) as u8, 9]));
        img.save(path).unwrap();
    }

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        assert!(scan_corpus(dir.path(), 1).unwrap().is_empty());
    }

    #[test]
    fn images_sorted_text_ignored() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("sub")).unwrap();
        write_png(&dir.path().join("b.png"), 4, 3);
        write_png(&dir.path().join("a.png"), 5, 2);
        write_png(&dir.path().join("sub/c.png"), 2, 2);
        std::fs::write(dir.path().join("notes.txt"), "hi").unwrap();
        let recs = scan_corpus(dir.path(), 2).unwrap();
        let paths: Vec<&str> = recs.iter().map(|r| r.path.as_str()).collect();
        assert_eq!(paths, vec!["a.png", "b.png", "sub/c.png"]);
        assert_eq!((recs[0].width, recs[0].height), (5, 2));
    }

    #[test]
    fn corrupt_file_excluded() {
        let dir = tempfile::tempdir().unwrap();
        write_png(&dir.path().join("good.png"), 8, 8);
        let bytes = std::fs::read(dir.path().join("good.png")).unwrap();
        std::fs::write(dir.path().join("bad.png"), &bytes[..bytes.len() / 3]).unwrap();
        std::fs::write(dir.path().join("junk.jpg"), b"not an image").unwrap();
        let recs = scan_corpus(dir.path(), 1).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].path, "good.png");
    }

    #[test]
    fn missing_root_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = scan_corpus(&dir.path().join("nope"), 1).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn zero_workers_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(scan_corpus(dir.path(), 0), Err(Error::InvalidInput(_))));
    }
}
