use super::image::GrayImage;

/// Shannon entropy in bits of the 256-bin histogram of rounded pixel values.
pub fn shannon_entropy(img: &GrayImage) -> f64 {
    let mut hist = [0u64; 256];
    for &v in img.data() {
        hist[v.round().clamp(0.0, 255.0) as usize] += 1;
    }
    let n = img.data().len() as f64;
    let h: f64 = hist
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    // A single bin gives -0.0.
    if h <= 0.0 {
        0.0
    } else {
        h.min(8.0)
    }
}
