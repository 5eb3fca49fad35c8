//! Integral-image and cascade fixtures with ground truth fixed by construction.

use halfface::axis::cascade::{HaarFeature, Stage, WeakClassifier, WeightedRect};
use halfface::axis::{axis_from_nose, detect_nose, CascadeModel, DetectParams, IntegralImage};
use halfface::image::{GrayImage, Rect};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn every_subrectangle_of_a_random_5x5() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let img = GrayImage::from_fn(5, 5, |_, _| rng.random()).unwrap();
    let ii = IntegralImage::new(&img);
    let mut count = 0;
    for y0 in 0..5 {
        for x0 in 0..5 {
            for h in 1..=5 - y0 {
                for w in 1..=5 - x0 {
                    let mut brute = 0.0;
                    for y in y0..y0 + h {
                        for x in x0..x0 + w {
                            brute += img.get(x, y);
                        }
                    }
                    assert!((ii.rect_sum(Rect::new(x0, y0, w, h)) - brute).abs() < 1e-9);
                    count += 1;
                }
            }
        }
    }
    assert_eq!(count, 225);
}

/// Centre-surround stump: fires when the central ninth of the window is
/// darker than the window as a whole by more than 1.8 window deviations.
fn blob_cascade() -> CascadeModel {
    let rects = vec![
        WeightedRect {
            rect: Rect::new(0, 0, 12, 12),
            weight: 1.0,
        },
        WeightedRect {
            rect: Rect::new(4, 4, 4, 4),
            weight: -9.0,
        },
    ];
    CascadeModel::new(
        (12, 12),
        vec![Stage {
            threshold: 0.5,
            classifiers: vec![WeakClassifier {
                feature: HaarFeature { rects },
                threshold: 1.8,
                left_val: -1.0,
                right_val: 1.0,
            }],
        }],
    )
    .unwrap()
}

/// Light noisy background with a 4x4 dark square whose top-left corner is
/// at `(bx, by)`. The noise field is tied to scene coordinates, so moving the
/// square moves everything.
fn blob_scene(bx: usize, by: usize) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let field: Vec<f64> = (0..200 * 200)
        .map(|_| 0.04 * rng.random::<f64>() - 0.02)
        .collect();
    GrayImage::from_fn(80, 60, |x, y| {
        let n = field[(y + 100 - by) * 200 + (x + 100 - bx)];
        let dark = (bx..bx + 4).contains(&x) && (by..by + 4).contains(&y);
        (if dark { 0.2 } else { 0.8 }) + n
    })
    .unwrap()
}

#[test]
fn dark_blob_is_found_at_its_centre() {
    let img = blob_scene(38, 28);
    let bb = detect_nose(&img, &blob_cascade(), &DetectParams::default())
        .unwrap()
        .unwrap();
    let axis = axis_from_nose(&bb);
    assert!((axis.column - 40.0).abs() <= 2.0, "column {}", axis.column);
    let (_, cy) = bb.centroid_px();
    assert!((cy as f64 - 30.0).abs() <= 2.0);
}

#[test]
fn detection_follows_translation() {
    let base = detect_nose(
        &blob_scene(38, 28),
        &blob_cascade(),
        &DetectParams::default(),
    )
    .unwrap()
    .unwrap();
    for (dx, dy) in [(5i64, 3i64), (-9, 4), (12, -7), (-20, -10)] {
        let moved = blob_scene((38 + dx) as usize, (28 + dy) as usize);
        let bb = detect_nose(&moved, &blob_cascade(), &DetectParams::default())
            .unwrap()
            .unwrap();
        assert!(
            (bb.rect.x0 as i64 - base.rect.x0 as i64 - dx).abs() <= 1,
            "dx {dx}: {:?} vs {:?}",
            bb.rect,
            base.rect
        );
        assert!(
            (bb.rect.y0 as i64 - base.rect.y0 as i64 - dy).abs() <= 1,
            "dy {dy}"
        );
    }
}
