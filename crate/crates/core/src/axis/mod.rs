//! Locating the vertical symmetry axis of a face.
//!
//! Two routes are offered: the centroid of a cascade-detected nose rectangle,
//! and a self-contained scan that correlates each candidate column's left
//! band with the mirrored right band. Axis columns are continuous x
//! coordinates where pixel `k` spans `[k, k+1)`.

pub mod cascade;
mod detect;
mod integral;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{GrayImage, Rect};
use crate::stitch::StitchParams;

pub use cascade::{load_cascade, parse_cascade, CascadeModel};
pub use detect::{detect_nose, BoundingBox, DetectParams};
pub use integral::IntegralImage;

/// Widest band compared on each side of a candidate column.
pub const MAX_MIRROR_BAND: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisMethod {
    Cascade,
    MirrorSearch,
    /// Supplied by the caller.
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryAxis {
    pub column: f64,
    pub method: AxisMethod,
    pub confidence: f64,
}

impl SymmetryAxis {
    pub fn manual(column: f64) -> Self {
        Self {
            column,
            method: AxisMethod::Manual,
            confidence: 1.0,
        }
    }
}

/// The vertical line through the nose rectangle's centre.
pub fn axis_from_nose(bb: &BoundingBox) -> SymmetryAxis {
    SymmetryAxis {
        column: bb.rect.x0 as f64 + bb.rect.w as f64 / 2.0,
        method: AxisMethod::Cascade,
        confidence: bb.score,
    }
}

/// Default candidate range: the middle half of the image, kept inside
/// `[1, width - 2]`.
pub fn default_search_range(width: usize) -> (usize, usize) {
    let hi_limit = width.saturating_sub(2).max(1);
    let lo = ((0.25 * width as f64).ceil() as usize).clamp(1, hi_limit);
    let hi = ((0.75 * width as f64).floor() as usize).clamp(lo, hi_limit);
    (lo, hi)
}

/// Scans candidate columns `c_min..=c_max` and returns the one whose left
/// band best matches its mirrored right band.
///
/// For column `c` the band width is `min(c, width - 1 - c, 40)`; the left band
/// is columns `[c - b, c)` and the right band `[c, c + b)` flipped. Columns with
/// an empty or constant band are skipped; the smallest column wins ties.
pub fn mirror_search_axis(img: &GrayImage, c_min: usize, c_max: usize) -> Result<SymmetryAxis> {
    let w = img.width();
    if c_min < 1 || c_min > c_max || c_max + 2 > w {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= c_min <= c_max <= width - 2, got [{c_min}, {c_max}] for width {w}"
        )));
    }
    let flipped = img.hflip();
    let h = img.height();
    let scores: Vec<Option<f64>> = (c_min..=c_max)
        .into_par_iter()
        .map(|c| {
            let band = c.min(w - 1 - c).min(MAX_MIRROR_BAND);
            if band == 0 {
                return None;
            }
            // right band [c, c + band) read right-to-left is [w - c - band, w - c) of the flipped image
            let left = Rect::new(c - band, 0, band, h);
            crate::stitch::ncc_kernel(img, left, &flipped, w - c - band, 0)
        })
        .collect();
    if scores.iter().all(|s| s.is_none()) {
        let any_band = (c_min..=c_max).any(|c| c.min(w - 1 - c) > 0);
        return Err(if any_band {
            Error::UndefinedCorrelation("every candidate band has zero variance".into())
        } else {
            Error::DegenerateBand("every candidate band is empty".into())
        });
    }
    let mut best = (0usize, f64::NEG_INFINITY);
    for (c, s) in (c_min..=c_max).zip(&scores) {
        if let Some(v) = *s {
            if v > best.1 {
                best = (c, v);
            }
        }
    }
    Ok(SymmetryAxis {
        column: best.0 as f64,
        method: AxisMethod::MirrorSearch,
        confidence: best.1,
    })
}

/// How to obtain an axis for an image.
#[derive(Debug, Clone)]
pub enum AxisSource {
    Manual(f64),
    MirrorSearch,
    Cascade(CascadeModel, DetectParams),
}

impl AxisSource {
    /// Resolves the axis. Cascade misses fall back to the mirror search.
    pub fn locate(&self, img: &GrayImage) -> Result<SymmetryAxis> {
        match self {
            AxisSource::Manual(c) => Ok(SymmetryAxis::manual(*c)),
            AxisSource::MirrorSearch => {
                let (lo, hi) = default_search_range(img.width());
                mirror_search_axis(img, lo, hi)
            }
            AxisSource::Cascade(model, params) => match detect_nose(img, model, params)? {
                Some(bb) => Ok(axis_from_nose(&bb)),
                None => {
                    log::warn!("no nose detected; falling back to mirror search");
                    let (lo, hi) = default_search_range(img.width());
                    mirror_search_axis(img, lo, hi)
                }
            },
        }
    }
}

/// Convenience: locate the axis and stitch in one call.
pub fn complete_face(
    img: &GrayImage,
    source: &AxisSource,
    params: &StitchParams,
) -> Result<crate::stitch::StitchOutcome> {
    let axis = source.locate(img)?;
    crate::stitch::stitch_face(img, &axis, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nose_centroid_columns() {
        let bb = |x0, y0, w, h| BoundingBox {
            rect: Rect::new(x0, y0, w, h),
            score: 1.0,
        };
        assert_eq!(axis_from_nose(&bb(80, 60, 20, 24)).column, 90.0);
        assert_eq!(axis_from_nose(&bb(0, 0, 2, 2)).column, 1.0);
        assert_eq!(axis_from_nose(&bb(85, 70, 21, 25)).column, 95.5);
        assert_eq!(axis_from_nose(&bb(1, 1, 2, 2)).method, AxisMethod::Cascade);
    }

    #[test]
    fn nose_axis_scales_with_image() {
        for s in 1..5usize {
            let base = BoundingBox {
                rect: Rect::new(17, 3, 9, 4),
                score: 1.0,
            };
            let scaled = BoundingBox {
                rect: Rect::new(17 * s, 3 * s, 9 * s, 4 * s),
                score: 1.0,
            };
            assert_eq!(
                axis_from_nose(&scaled).column,
                axis_from_nose(&base).column * s as f64
            );
        }
    }

    #[test]
    fn exact_symmetry_about_ninety() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let half: Vec<f64> = (0..90 * 20).map(|_| rng.random()).collect();
        let img = GrayImage::from_fn(180, 20, |x, y| {
            let k = if x < 90 { x } else { 179 - x };
            half[y * 90 + k]
        })
        .unwrap();
        let (lo, hi) = default_search_range(180);
        let axis = mirror_search_axis(&img, lo, hi).unwrap();
        assert_eq!(axis.column, 90.0);
        assert!((axis.confidence - 1.0).abs() < 1e-6);
        assert_eq!(axis.method, AxisMethod::MirrorSearch);
    }

    #[test]
    fn noisy_mirror_about_twenty() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let base: Vec<f64> = (0..64 * 24)
            .map(|_| rng.random::<f64>() * 0.9 + 0.05)
            .collect();
        let img = GrayImage::from_fn(64, 24, |x, y| {
            let src = if (20..40).contains(&x) { 39 - x } else { x };
            let n: f64 = rng.random::<f64>() - 0.5;
            (base[y * 64 + src] + 0.01 * 3.0f64.sqrt() * 2.0 * n).clamp(0.0, 1.0)
        })
        .unwrap();
        let axis = mirror_search_axis(&img, 5, 58).unwrap();
        assert!((axis.column - 20.0).abs() <= 1.0, "got {}", axis.column);
    }

    #[test]
    fn constant_image_is_undefined() {
        let img = GrayImage::filled(50, 10, 0.5).unwrap();
        assert!(matches!(
            mirror_search_axis(&img, 10, 40),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn range_is_validated() {
        let img = GrayImage::filled(10, 10, 0.5).unwrap();
        assert!(mirror_search_axis(&img, 0, 5).is_err());
        assert!(mirror_search_axis(&img, 6, 5).is_err());
        assert!(mirror_search_axis(&img, 2, 9).is_err());
    }

    #[test]
    fn default_range_is_middle_half() {
        assert_eq!(default_search_range(180), (45, 135));
        assert_eq!(default_search_range(4), (1, 2));
    }
}
