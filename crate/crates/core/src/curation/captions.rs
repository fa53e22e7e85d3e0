use std::path::{Path, PathBuf};

use super::record::ImageRecord;
use crate::error::{Error, Result};

/// Sidecar caption location: the record's relative path under `caption_dir`
/// with its extension replaced by `.txt`.
pub fn caption_path(caption_dir: &Path, rel: &str) -> PathBuf {
    caption_dir.join(rel).with_extension("txt")
}

pub fn word_count(text: &str) -> u32 {
    text.split_whitespace().count() as u32
}

/// Attaches sidecar captions. Missing or empty sidecars leave the caption
/// absent. Returns the number of captions attached.
pub fn merge_captions(records: &mut [ImageRecord], caption_dir: &Path) -> Result<usize> {
    let meta = std::fs::metadata(caption_dir).map_err(|e| Error::io(caption_dir, e))?;
    if !meta.is_dir() {
        return Err(Error::invalid(format!("{} is not a directory", caption_dir.display())));
    }
    let mut attached = 0;
    for r in records.iter_mut() {
        let p = caption_path(caption_dir, &r.path);
        let text = match std::fs::read_to_string(&p) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                r.caption = None;
                r.caption_len = None;
                continue;
            }
            Err(e) => return Err(Error::io(p, e)),
        };
        let text = text.trim();
        if text.is_empty() {
            r.caption = None;
            r.caption_len = None;
            continue;
        }
        r.caption_len = Some(word_count(text));
        r.caption = Some(text.to_string());
        attached += 1;
    }
    Ok(attached)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn present_absent_and_counted() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("sub")).unwrap();
        let words: Vec<String> = (0..120).map(|i| format!("w{i}")).collect();
        std::fs::write(dir.path().join("sub/a.txt"), words.join(" \n\t")).unwrap();
        std::fs::write(dir.path().join("b.txt"), "  A red barn.  \n").unwrap();
        std::fs::write(dir.path().join("c.txt"), "  \n").unwrap();
        let mut recs = vec![
            ImageRecord::stub("sub/a.png", 1, 1),
            ImageRecord::stub("b.jpg", 1, 1),
            ImageRecord::stub("c.png", 1, 1),
            ImageRecord::stub("d.png", 1, 1),
        ];
        assert_eq!(merge_captions(&mut recs, dir.path()).unwrap(), 2);
        assert_eq!(recs[0].caption_len, Some(120));
        assert_eq!(recs[1].caption.as_deref(), Some("A red barn."));
        assert_eq!(recs[1].caption_len, Some(3));
        assert_eq!(recs[2].caption, None);
        assert_eq!(recs[3].caption_len, None);
        assert_eq!(recs.len(), 4);
    }

    #[test]
    fn missing_dir() {
        let dir = tempfile::tempdir().unwrap();
        assert!(merge_captions(&mut [], &dir.path().join("x")).is_err());
    }
}
