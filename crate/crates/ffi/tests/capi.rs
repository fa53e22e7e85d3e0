use std::ffi::CString;
use std::os::raw::c_char;
use std::ptr;

use uhrkit_ffi::*;

fn last_error() -> String {
    unsafe {
        let n = uhr_last_error_message(ptr::null_mut(), 0);
        if n == 0 {
            return String::new();
        }
        let mut buf = vec![0u8; n];
        uhr_last_error_message(buf.as_mut_ptr() as *mut c_char, n);
        String::from_utf8(buf[..n - 1].to_vec()).unwrap()
    }
}

#[test]
fn constant_image_metrics_are_zero() {
    let px = vec![77.0; 40 * 30];
    let mut img = ptr::null_mut();
    unsafe {
        assert_eq!(uhr_gray_image_new(40, 30, px.as_ptr(), &mut img), UhrStatus::Ok);
        let (mut w, mut h) = (0, 0);
        assert_eq!(uhr_gray_image_size(img, &mut w, &mut h), UhrStatus::Ok);
        assert_eq!((w, h), (40, 30));
        let mut m = UhrMetrics::default();
        assert_eq!(uhr_metrics_compute(img, ptr::null(), &mut m), UhrStatus::Ok);
        assert_eq!(m.laplacian_var, 0.0);
        assert_eq!(m.sobel_edge_density, 0.0);
        assert_eq!(m.glcm_aggregate, 0.0);
        assert_eq!(m.shannon_entropy, 0.0);
        let cfg = uhr_metric_config_default();
        assert_eq!(cfg.glcm_levels, 32);
        assert_eq!(uhr_metrics_compute(img, &cfg, &mut m), UhrStatus::Ok);
        uhr_gray_image_free(img);
    }
}

#[test]
fn uniform_histogram_entropy() {
    let px: Vec<f64> = (0..256).map(f64::from).collect();
    let mut img = ptr::null_mut();
    let mut e = 0.0;
    unsafe {
        assert_eq!(uhr_gray_image_new(16, 16, px.as_ptr(), &mut img), UhrStatus::Ok);
        assert_eq!(uhr_shannon_entropy(img, &mut e), UhrStatus::Ok);
        uhr_gray_image_free(img);
    }
    assert!((e - 8.0).abs() < 1e-12);
}

#[test]
fn rgb_gray_pixels_keep_their_value() {
    let rgb = [10u8, 10, 10, 200, 200, 200];
    let mut img = ptr::null_mut();
    let mut lap = -1.0;
    unsafe {
        assert_eq!(uhr_gray_image_from_rgb8(2, 1, rgb.as_ptr(), &mut img), UhrStatus::Ok);
        assert_eq!(uhr_laplacian_variance(img, &mut lap), UhrStatus::InvalidInput);
        assert!(last_error().contains("3x3"));
        uhr_gray_image_free(img);
    }
}

#[test]
fn errors_are_reported() {
    let mut img = ptr::null_mut();
    unsafe {
        assert_eq!(uhr_gray_image_new(2, 2, ptr::null(), &mut img), UhrStatus::NullPointer);
        assert!(last_error().contains("data"));
        let bad = [300.0; 4];
        assert_eq!(uhr_gray_image_new(2, 2, bad.as_ptr(), &mut img), UhrStatus::InvalidInput);
        assert!(img.is_null());
        let path = CString::new("/nonexistent/x.png").unwrap();
        assert_eq!(uhr_gray_image_load(path.as_ptr(), &mut img), UhrStatus::Decode);
        let mut w = 0.0;
        assert_eq!(uhr_soft_weight(0.5, -1.0, 4.0, &mut w), UhrStatus::InvalidInput);
        assert_eq!(uhr_soft_weight(0.5, 1.0, 4.0, &mut w), UhrStatus::Ok);
        assert_eq!(last_error(), "");
        // Freeing null is a no-op.
        uhr_gray_image_free(ptr::null_mut());
        uhr_beta_sampler_free(ptr::null_mut());
        uhr_manifest_free(ptr::null_mut());
    }
}

#[test]
fn soft_weight_endpoints_and_reference() {
    let mut w = 0.0;
    unsafe {
        assert_eq!(uhr_soft_weight(0.0, 2.0, 8.0, &mut w), UhrStatus::Ok);
        assert_eq!(w, 1.0);
        assert_eq!(uhr_soft_weight(1.0, 2.0, 8.0, &mut w), UhrStatus::Ok);
        assert_eq!(w, 3.0);
        // 1 + (e^0.5 - 1)/(e - 1)
        assert_eq!(uhr_soft_weight(0.5, 1.0, 1.0, &mut w), UhrStatus::Ok);
    }
    assert!((w - 1.377_540_668_798_145_4).abs() < 1e-15);
}

#[test]
fn freq_loss_reduces_to_mse_and_gradient_matches() {
    let (h, w) = (6, 5);
    let x: Vec<f64> = (0..h * w).map(|i| ((i * 7919) % 13) as f64 / 13.0).collect();
    let y: Vec<f64> = (0..h * w).map(|i| ((i * 104_729) % 11) as f64 / 11.0).collect();
    let mse = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (h * w) as f64;
    let mut l = 0.0;
    unsafe {
        assert_eq!(uhr_freq_loss(x.as_ptr(), y.as_ptr(), h, w, 0.0, 4.0, &mut l), UhrStatus::Ok);
    }
    assert!((l - mse).abs() < 1e-12);

    let mut g = vec![0.0; h * w];
    unsafe {
        assert_eq!(uhr_freq_loss_grad(x.as_ptr(), y.as_ptr(), h, w, 1.5, 4.0, g.as_mut_ptr()), UhrStatus::Ok);
    }
    let eps = 1e-5;
    for k in [0, 7, 29] {
        let eval = |d: f64| {
            let mut xp = x.clone();
            xp[k] += d;
            let mut v = 0.0;
            unsafe { uhr_freq_loss(xp.as_ptr(), y.as_ptr(), h, w, 1.5, 4.0, &mut v) };
            v
        };
        let fd = (eval(eps) - eval(-eps)) / (2.0 * eps);
        assert!((fd - g[k]).abs() < 1e-8, "{k}: {fd} vs {}", g[k]);
    }
}

#[test]
fn beta_functions_and_sampler() {
    let (mut p, mut c) = (0.0, 0.0);
    unsafe {
        assert_eq!(uhr_beta_pdf(0.25, 2.0, 4.0, &mut p), UhrStatus::Ok);
        assert_eq!(uhr_beta_cdf(0.25, 2.0, 4.0, &mut c), UhrStatus::Ok);
        assert_eq!(uhr_beta_pdf(0.0, 2.0, 4.0, &mut p), UhrStatus::InvalidInput);
    }
    assert!((c - 0.367_187_5).abs() < 1e-12);

    let draw = |seed| {
        let mut s = ptr::null_mut();
        let mut buf = vec![0.0; 20_000];
        unsafe {
            assert_eq!(uhr_beta_sampler_new(2.0, 4.0, seed, &mut s), UhrStatus::Ok);
            assert_eq!(uhr_beta_sampler_fill(s, buf.as_mut_ptr(), buf.len()), UhrStatus::Ok);
            uhr_beta_sampler_free(s);
        }
        buf
    };
    let a = draw(9);
    assert_eq!(a, draw(9));
    assert_ne!(a, draw(10));
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    // Mean 1/3, sd of the mean sqrt(2/63 / 20000) ~ 0.00126.
    assert!((mean - 1.0 / 3.0).abs() < 0.005, "{mean}");
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(uhr_beta_sampler_new(0.0, 4.0, 1, &mut s), UhrStatus::InvalidInput);
    }
}

#[test]
fn manifest_round_trip_and_selection() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("m.jsonl");
    let mut text = String::new();
    for (i, (side, glcm, ent, aes)) in [(4000, 5.0, 7.0, 6.0), (4000, 4.0, 6.0, 5.0), (1000, 9.0, 9.0, 9.0), (3000, 1.0, 1.0, 1.0)]
        .iter()
        .enumerate()
    {
        text.push_str(&format!(
            concat!(
                "{{\"path\":\"img{}.png\",\"width\":{},\"height\":{},\"metrics\":{{\"laplacian_var\":500,",
                "\"sobel_edge_density\":0.3,\"glcm\":{{\"aggregate\":{},\"directions\":[",
                "{{\"contrast\":1,\"entropy\":1,\"correlation\":0.5,\"degenerate\":false}},",
                "{{\"contrast\":1,\"entropy\":1,\"correlation\":0.5,\"degenerate\":false}},",
                "{{\"contrast\":1,\"entropy\":1,\"correlation\":0.5,\"degenerate\":false}},",
                "{{\"contrast\":1,\"entropy\":1,\"correlation\":0.5,\"degenerate\":false}}]}},",
                "\"shannon_entropy\":{},\"aesthetic\":{}}},\"caption\":null,\"caption_len\":null,",
                "\"in_s\":false,\"in_sg\":false,\"in_se\":false,\"in_sa\":false,\"selected\":false}}\n"
            ),
            i, side, side, glcm, ent, aes
        ));
    }
    std::fs::write(&src, &text).unwrap();
    let path = CString::new(src.to_str().unwrap()).unwrap();
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(uhr_manifest_read(path.as_ptr(), &mut m), UhrStatus::Ok, "{}", last_error());
        let mut n = 0;
        assert_eq!(uhr_manifest_len(m, &mut n), UhrStatus::Ok);
        assert_eq!(n, 4);

        let mut needed = 0;
        assert_eq!(uhr_manifest_path(m, 2, ptr::null_mut(), 0, &mut needed), UhrStatus::Ok);
        assert_eq!(needed, "img2.png".len() + 1);
        let mut buf = vec![0 as c_char; needed];
        assert_eq!(uhr_manifest_path(m, 2, buf.as_mut_ptr(), needed, &mut needed), UhrStatus::Ok);
        let s = std::ffi::CStr::from_ptr(buf.as_ptr()).to_str().unwrap();
        assert_eq!(s, "img2.png");

        let mut sel = 0;
        assert_eq!(uhr_manifest_select(m, ptr::null(), &mut sel), UhrStatus::Ok);
        // S = {img0, img1, img3}; top ceil(1.5) = 2 of each key are img0, img1.
        assert_eq!(sel, 2);
        let mut info = UhrRecordInfo::default();
        assert_eq!(uhr_manifest_record(m, 2, &mut info), UhrStatus::Ok);
        assert!(!info.in_s && info.has_aesthetic && info.width == 1000);
        assert_eq!(uhr_manifest_record(m, 0, &mut info), UhrStatus::Ok);
        assert!(info.selected);
        assert_eq!(uhr_manifest_record(m, 4, &mut info), UhrStatus::OutOfRange);

        let mut cfg = uhr_selection_config_default();
        assert_eq!(cfg.top_fraction, 0.5);
        cfg.top_fraction = 0.0;
        assert_eq!(uhr_manifest_select(m, &cfg, ptr::null_mut()), UhrStatus::InvalidInput);

        let dst = CString::new(dir.path().join("out.jsonl").to_str().unwrap()).unwrap();
        assert_eq!(uhr_manifest_write(m, dst.as_ptr()), UhrStatus::Ok);
        uhr_manifest_free(m);
    }
    std::fs::write(&src, &text[..text.len() - 40]).unwrap();
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(uhr_manifest_read(path.as_ptr(), &mut m), UhrStatus::Parse);
    }
    assert!(last_error().contains("line 4"), "{}", last_error());
}

#[test]
fn header_compiles_as_c() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/uhrkit.h");
    assert!(header.exists());
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        format!(
            r#"#include "{}"
int main(void) {{
    double px[9] = {{0}};
    UhrGrayImage *img = NULL;
    UhrMetrics m;
    char msg[256];
    if (uhr_gray_image_new(3, 3, px, &img) != UHR_STATUS_OK) {{
        uhr_last_error_message(msg, sizeof msg);
        return 1;
    }}
    UhrStatus st = uhr_metrics_compute(img, NULL, &m);
    uhr_gray_image_free(img);
    return st == UHR_STATUS_OK ? 0 : 1;
}}
"#,
            header.display()
        ),
    )
    .unwrap();
    match std::process::Command::new(&cc).args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).output() {
        Ok(o) => assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr)),
        Err(e) => eprintln!("skipping: no C compiler ({e})"),
    }
}
