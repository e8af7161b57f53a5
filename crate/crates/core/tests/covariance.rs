use adf_core::covariance::{
    decision_d5, describe, encode_pgm, load_image, load_manifest, pixel_features, region_covariance,
    region_feature, BorderPolicy, ImageFormat, ImageRegion, PixelFeature,
};
use adf_core::fusion::OracleLabel;
use proptest::prelude::*;

/// Textbook two-pass covariance: subtract the mean, average outer products.
fn naive_covariance(zs: &[PixelFeature]) -> [[f64; 9]; 9] {
    let n = zs.len() as f64;
    let mut mean = [0.0; 9];
    for z in zs {
        for i in 0..9 {
            mean[i] += z[i];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut c = [[0.0; 9]; 9];
    for z in zs {
        for i in 0..9 {
            for j in 0..9 {
                c[i][j] += (z[i] - mean[i]) * (z[j] - mean[j]);
            }
        }
    }
    c.iter_mut().flatten().for_each(|v| *v /= n - 1.0);
    c
}

/// Interior features computed straight from the definition.
fn naive_interior(region: &ImageRegion) -> Vec<PixelFeature> {
    let y = |c: usize, r: usize| region.y_at(c, r);
    let mut out = Vec::new();
    for r in 1..region.height() - 1 {
        for c in 1..region.width() - 1 {
            out.push([
                c as f64,
                r as f64,
                y(c, r),
                region.u_at(c, r),
                region.v_at(c, r),
                (y(c + 1, r) - y(c - 1, r)).abs(),
                (y(c, r + 1) - y(c, r - 1)).abs(),
                (2.0 * y(c, r) - y(c - 1, r) - y(c + 1, r)).abs(),
                (2.0 * y(c, r) - y(c, r - 1) - y(c, r + 1)).abs(),
            ]);
        }
    }
    out
}

fn random_region() -> impl Strategy<Value = ImageRegion> {
    (4usize..=64, 4usize..=64).prop_flat_map(|(w, h)| {
        let n = w * h;
        (
            prop::collection::vec(0.0f64..255.0, n),
            prop::collection::vec(-100.0f64..100.0, n),
            prop::collection::vec(-150.0f64..150.0, n),
        )
            .prop_map(move |(y, u, v)| ImageRegion::new(w, h, y, u, v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn fast_covariance_matches_two_pass(region in random_region()) {
        let grid = pixel_features(&region);
        let interior = naive_interior(&region);
        let fast_features: Vec<PixelFeature> = grid.contributing(BorderPolicy::InteriorOnly).copied().collect();
        prop_assert_eq!(&fast_features, &interior);

        let fast = region_covariance(&grid, BorderPolicy::InteriorOnly).unwrap();
        let naive = naive_covariance(&interior);
        prop_assert_eq!(fast.n_px, interior.len());
        for i in 0..9 {
            for j in 0..9 {
                let scale = naive[i][j].abs().max(1.0);
                prop_assert!((fast.c[i][j] - naive[i][j]).abs() <= 1e-9 * scale,
                    "c({},{}) fast {} naive {}", i + 1, j + 1, fast.c[i][j], naive[i][j]);
                prop_assert_eq!(fast.c[i][j], fast.c[j][i]);
            }
            prop_assert!(fast.c[i][i] >= -1e-9);
        }

        let all: Vec<PixelFeature> = grid.contributing(BorderPolicy::ReplicateEdge).copied().collect();
        let full = region_covariance(&grid, BorderPolicy::ReplicateEdge).unwrap();
        let naive = naive_covariance(&all);
        for i in 0..9 {
            for j in 0..9 {
                prop_assert!((full.c[i][j] - naive[i][j]).abs() <= 1e-9 * naive[i][j].abs().max(1.0));
            }
        }
    }

    #[test]
    fn descriptor_ignores_frame_position(region in random_region(), dx in 0usize..5, dy in 0usize..5) {
        // Embed the same pixels at an offset inside a larger frame.
        let (w, h) = (region.width(), region.height());
        let (fw, fh) = (w + dx + 2, h + dy + 3);
        let mut planes = [vec![7.0; fw * fh], vec![0.0; fw * fh], vec![0.0; fw * fh]];
        for r in 0..h {
            for c in 0..w {
                let k = (r + dy) * fw + c + dx;
                planes[0][k] = region.y_at(c, r);
                planes[1][k] = region.u_at(c, r);
                planes[2][k] = region.v_at(c, r);
            }
        }
        let [y, u, v] = planes;
        let frame = ImageRegion::new(fw, fh, y, u, v).unwrap();
        let moved = frame.crop(dx, dy, w, h).unwrap();
        prop_assert_eq!(moved.origin, (dx, dy));
        prop_assert_eq!(
            describe(&moved, BorderPolicy::InteriorOnly).unwrap(),
            describe(&region, BorderPolicy::InteriorOnly).unwrap()
        );
    }

    #[test]
    fn d5_is_affine_and_monotone(p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
        let (a, b) = (decision_d5(p).unwrap(), decision_d5(q).unwrap());
        prop_assert!((-1.0..=1.0).contains(&a));
        prop_assert_eq!(p <= q, a <= b);
        prop_assert!((decision_d5((p + q) / 2.0).unwrap() - (a + b) / 2.0).abs() <= 1e-15);
    }
}

#[test]
fn identical_features_give_zero_covariance() {
    // Coordinates always vary across a real region; pin them by hand.
    let region = ImageRegion::from_luma(5, 5, vec![3.0; 25]).unwrap();
    let mut grid = pixel_features(&region);
    for f in &mut grid.features {
        f[0] = 1.0;
        f[1] = 2.0;
    }
    let c = region_covariance(&grid, BorderPolicy::ReplicateEdge).unwrap();
    assert!(c.c.iter().flatten().all(|&v| v == 0.0));
    assert!(region_feature(&c).as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn constant_luma_leaves_only_the_coordinate_block() {
    let region = ImageRegion::from_luma(9, 7, vec![42.0; 63]).unwrap();
    let c = region_covariance(&pixel_features(&region), BorderPolicy::InteriorOnly).unwrap();
    for i in 0..9 {
        for j in 0..9 {
            if i < 2 && j < 2 {
                continue;
            }
            assert_eq!(c.c[i][j], 0.0, "c({},{})", i + 1, j + 1);
        }
    }
    assert!(c.c[0][0] > 0.0 && c.c[1][1] > 0.0);
    let f = region_feature(&c);
    assert_eq!(f.as_slice().len(), 42);
    assert!(f.as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn manifest_and_images_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.pgm"), encode_pgm(4, 4, &[128; 16])).unwrap();
    let mut ppm = b"P6\n4 4\n255\n".to_vec();
    ppm.extend(std::iter::repeat_n([255u8, 0, 0], 16).flatten());
    std::fs::write(dir.path().join("b.ppm"), ppm).unwrap();
    std::fs::write(dir.path().join("m.csv"), "path,label\na.pgm,-1\nb.ppm,1\n").unwrap();

    let entries = load_manifest(&dir.path().join("m.csv")).unwrap();
    assert_eq!(entries.len(), 2);
    assert_eq!(entries[1].label, OracleLabel::Present);
    let a = load_image(&entries[0].path, ImageFormat::Pgm).unwrap();
    assert_eq!(a.y_at(3, 3), 128.0);
    let b = load_image(&entries[1].path, ImageFormat::Ppm).unwrap();
    assert!((b.y_at(0, 0) - 76.245).abs() < 1e-12);

    std::fs::write(dir.path().join("bad.csv"), "path,label\na.pgm,0\n").unwrap();
    assert!(load_manifest(&dir.path().join("bad.csv")).is_err());
}
