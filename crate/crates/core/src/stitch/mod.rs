//! Half-face completion: crop the visible half at the symmetry axis, mirror
//! it, register the mirrored half against the seam, and blend.

mod blend;
mod ncc;
mod search;

use serde::{Deserialize, Serialize};

use crate::axis::SymmetryAxis;
use crate::error::{Error, Result};
use crate::image::{GrayImage, Rect};

pub use blend::multiband_blend;
pub use ncc::{ncc, Offset};
pub use search::{find_best_offset, TIE_EPS};

pub(crate) use ncc::ncc_at as ncc_kernel;

/// Knobs for alignment and blending.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StitchParams {
    /// Largest `|i|` and `|j|` tried by the offset search.
    pub search_radius: usize,
    /// Width in pixels of the correlation box at the seam.
    pub band_width: usize,
    /// Pyramid levels used by the blend.
    pub blend_levels: usize,
    /// Width of the linear seam ramp at full resolution.
    pub feather_width: usize,
}

impl Default for StitchParams {
    fn default() -> Self {
        Self {
            search_radius: 10,
            band_width: 16,
            blend_levels: 4,
            feather_width: 8,
        }
    }
}

impl StitchParams {
    pub fn validate(&self) -> Result<()> {
        if self.band_width < 2 {
            return Err(Error::InvalidParameter(format!(
                "band_width must be at least 2, got {}",
                self.band_width
            )));
        }
        if self.blend_levels < 1 {
            return Err(Error::InvalidParameter(
                "blend_levels must be at least 1".into(),
            ));
        }
        if self.search_radius > i32::MAX as usize / 2 {
            return Err(Error::InvalidParameter("search_radius too large".into()));
        }
        Ok(())
    }
}

/// Which side of the axis supplied the pixels that were mirrored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceSide {
    Left,
    Right,
}

/// A completed face and how it was assembled.
#[derive(Debug, Clone, PartialEq)]
pub struct StitchOutcome {
    pub image: GrayImage,
    pub offset: Offset,
    pub peak_ncc: f64,
    pub axis: SymmetryAxis,
    pub source: SourceSide,
}

/// Completes a face from the half on one side of `axis`.
///
/// The axis column is a continuous x coordinate (pixel `k` spans `[k, k+1)`),
/// so the visible half is columns `[0, floor(column))`. When the right-hand
/// side is strictly wider it is used instead, by working on the mirrored
/// image and flipping the result back.
///
/// The mirrored copy is registered against the seam band of the visible half
/// as seen through the mirror: columns at distance `x` from the seam on either
/// side are paired, so a perfectly mirrored half scores 1.0 at `(0, 0)`.
/// The pair is then blended at the chosen offset.
pub fn stitch_face(
    img: &GrayImage,
    axis: &SymmetryAxis,
    p: &StitchParams,
) -> Result<StitchOutcome> {
    let cut = check_axis(img, axis)?;
    let side = if img.width() - cut > cut {
        SourceSide::Right
    } else {
        SourceSide::Left
    };
    stitch_face_from(img, axis, side, p)
}

/// [`stitch_face`] with the source side chosen by the caller, for when it is
/// known which half is hidden.
pub fn stitch_face_from(
    img: &GrayImage,
    axis: &SymmetryAxis,
    side: SourceSide,
    p: &StitchParams,
) -> Result<StitchOutcome> {
    p.validate()?;
    let cut = check_axis(img, axis)?;
    match side {
        SourceSide::Left => stitch_left(img, cut, axis, p),
        SourceSide::Right => {
            let mut out = stitch_left(&img.hflip(), img.width() - cut, axis, p)?;
            out.image = out.image.hflip();
            out.source = SourceSide::Right;
            Ok(out)
        }
    }
}

fn check_axis(img: &GrayImage, axis: &SymmetryAxis) -> Result<usize> {
    let width = img.width() as f64;
    if !(axis.column > 1.0 && axis.column < width - 1.0) {
        return Err(Error::InvalidParameter(format!(
            "axis column {} must lie strictly inside (1, {})",
            axis.column,
            width - 1.0
        )));
    }
    Ok(axis.column.floor() as usize)
}

fn stitch_left(
    img: &GrayImage,
    cut: usize,
    axis: &SymmetryAxis,
    p: &StitchParams,
) -> Result<StitchOutcome> {
    let visible = img.crop(Rect::new(0, 0, cut, img.height()))?;
    let mirrored = visible.hflip();
    // The seam band read outward from the seam: for the visible half that is
    // its last columns reversed, which is exactly the mirrored half's first
    // columns.
    let band = p.band_width.min(cut);
    if band < 2 {
        return Err(Error::InvalidParameter(format!(
            "visible half is only {cut} px wide"
        )));
    }
    let seam_view = mirrored.crop(Rect::new(0, 0, band, img.height()))?;
    let search = StitchParams {
        band_width: band,
        ..*p
    };
    let (offset, peak_ncc) = find_best_offset(&seam_view, &mirrored, &search)?;
    let image = multiband_blend(&visible, &mirrored, offset, p)?;
    Ok(StitchOutcome {
        image,
        offset,
        peak_ncc,
        axis: *axis,
        source: SourceSide::Left,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axis::AxisMethod;
    use crate::quality;

    fn axis(column: f64) -> SymmetryAxis {
        SymmetryAxis {
            column,
            method: AxisMethod::Manual,
            confidence: 1.0,
        }
    }

    /// Smooth face-like fixture, mirror-symmetric about x = width / 2.
    fn symmetric_face(w: usize, h: usize) -> GrayImage {
        let c = w as f64 / 2.0;
        GrayImage::from_fn(w, h, |x, y| {
            let dx = (x as f64 + 0.5 - c).abs() / c;
            let dy = y as f64 / h as f64;
            let eye = (-((dx - 0.4).powi(2) + (dy - 0.35).powi(2)) * 60.0).exp();
            let mouth = (-((dx).powi(2) * 4.0 + (dy - 0.75).powi(2) * 200.0)).exp();
            (0.7 - 0.3 * dx * dx - 0.5 * eye - 0.3 * mouth + 0.05 * (dy * 9.0).sin())
                .clamp(0.0, 1.0)
        })
        .unwrap()
    }

    #[test]
    fn symmetric_input_is_reproduced() {
        let img = symmetric_face(180, 200);
        let out = stitch_face(&img, &axis(90.0), &StitchParams::default()).unwrap();
        assert_eq!(out.offset, Offset::ZERO);
        assert!((out.peak_ncc - 1.0).abs() < 1e-9);
        assert_eq!(out.image.dims(), (180, 200));
        assert!(quality::cr(&img, &out.image).unwrap() >= 0.999);
        assert!(quality::mse(&img, &out.image).unwrap() < 1e-6);
    }

    #[test]
    fn blanked_right_half_is_mirror_of_left() {
        let full =
            GrayImage::from_fn(100, 60, |x, y| ((x * 13 + y * 7) % 17) as f64 / 16.0).unwrap();
        let img =
            GrayImage::from_fn(100, 60, |x, y| if x < 50 { full.get(x, y) } else { 0.0 }).unwrap();
        let p = StitchParams::default();
        let out = stitch_face(&img, &axis(50.0), &p).unwrap();
        assert_eq!(out.source, SourceSide::Left);
        let half = p.feather_width / 2;
        for y in 0..60 {
            for x in (50 + half)..100 {
                assert!((out.image.get(x, y) - img.get(99 - x, y)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn forced_side_uses_the_visible_half() {
        let full = GrayImage::from_fn(60, 40, |x, y| {
            let m = if x < 30 { x } else { 59 - x };
            ((m * 5 + y * 3) % 13) as f64 / 12.0
        })
        .unwrap();
        let hidden_left =
            GrayImage::from_fn(60, 40, |x, y| if x < 30 { 0.0 } else { full.get(x, y) }).unwrap();
        let out = stitch_face_from(
            &hidden_left,
            &axis(30.0),
            SourceSide::Right,
            &StitchParams::default(),
        )
        .unwrap();
        assert_eq!(out.source, SourceSide::Right);
        assert_eq!(out.image.dims(), (60, 40));
        assert!(quality::mse(&full, &out.image).unwrap() < 1e-6);
    }

    #[test]
    fn output_is_mirror_symmetric_at_zero_offset() {
        let img = GrayImage::from_fn(80, 50, |x, y| ((x * x + 3 * y) % 23) as f64 / 22.0).unwrap();
        let p = StitchParams::default();
        let out = stitch_face(&img, &axis(43.0), &p).unwrap();
        assert_eq!(out.offset, Offset::ZERO);
        let flipped = out.image.hflip();
        assert_eq!(out.image.width(), 86);
        for y in 0..50 {
            for x in 0..86 {
                assert!((out.image.get(x, y) - flipped.get(x, y)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn wider_right_side_is_used() {
        let img = symmetric_face(120, 80);
        let out = stitch_face(&img, &axis(40.5), &StitchParams::default()).unwrap();
        assert_eq!(out.source, SourceSide::Right);
        // right side spans [40, 120): 80 columns mirrored
        assert_eq!(out.image.width(), 160);
        assert_eq!(out.axis.column, 40.5);
    }

    #[test]
    fn axis_outside_image_is_rejected() {
        let img = symmetric_face(40, 40);
        assert!(stitch_face(&img, &axis(0.5), &StitchParams::default()).is_err());
        assert!(stitch_face(&img, &axis(39.5), &StitchParams::default()).is_err());
    }

    #[test]
    fn constant_half_propagates_search_error() {
        let img = GrayImage::filled(60, 40, 0.5).unwrap();
        assert!(matches!(
            stitch_face(&img, &axis(30.0), &StitchParams::default()),
            Err(Error::UndefinedCorrelation(_))
        ));
    }
}
