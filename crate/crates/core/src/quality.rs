//! Stitch-quality scores between an original face and its reconstruction.
//!
//! MSE is reported on the 8-bit scale (samples multiplied by 255 before
//! differencing) so the numbers are comparable to 0..255 pixel codes.
//! CR is the Pearson correlation over all pixels and is scale-free.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// MSE and correlation between an original and a stitched image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub mse: f64,
    pub cr: f64,
}

fn check_dims(a: &GrayImage, b: &GrayImage) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::GeometryMismatch {
            expected: a.dims(),
            actual: b.dims(),
        });
    }
    Ok(())
}

/// Mean of squared differences on the 8-bit scale.
pub fn mse(original: &GrayImage, stitched: &GrayImage) -> Result<f64> {
    check_dims(original, stitched)?;
    let n = original.data().len() as f64;
    let sum: f64 = original
        .data()
        .iter()
        .zip(stitched.data())
        .map(|(a, b)| {
            let d = (a - b) * 255.0;
            d * d
        })
        .sum();
    Ok(sum / n)
}

/// The unsquared mean difference `mean(OI - SI)` on the 8-bit scale.
///
/// Positive and negative errors cancel, so this is not a quality score on
/// its own; it is kept alongside [`mse`] for comparison with the literal
/// (unsquared) form of the formula.
pub fn mean_signed_error(original: &GrayImage, stitched: &GrayImage) -> Result<f64> {
    check_dims(original, stitched)?;
    let n = original.data().len() as f64;
    let sum: f64 = original
        .data()
        .iter()
        .zip(stitched.data())
        .map(|(a, b)| (a - b) * 255.0)
        .sum();
    Ok(sum / n)
}

/// Pearson correlation coefficient over all pixels.
pub fn cr(original: &GrayImage, stitched: &GrayImage) -> Result<f64> {
    check_dims(original, stitched)?;
    pearson(original.data(), stitched.data())
}

pub(crate) fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let da = a - mx;
        let db = b - my;
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::UndefinedCorrelation(
            "zero variance in one of the images".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Computes both scores.
pub fn assess(original: &GrayImage, stitched: &GrayImage) -> Result<QualityReport> {
    Ok(QualityReport {
        mse: mse(original, stitched)?,
        cr: cr(original, stitched)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn img(w: usize, h: usize, d: &[f64]) -> GrayImage {
        GrayImage::new(w, h, d.to_vec()).unwrap()
    }

    #[test]
    fn mse_examples() {
        let a = img(2, 1, &[0.0, 0.0]);
        let b = img(2, 1, &[1.0 / 255.0, 0.0]);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert!((mse(&a, &b).unwrap() - 0.5).abs() < 1e-12);
        assert!((mean_signed_error(&a, &b).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn cr_examples() {
        let x = img(2, 1, &[0.0, 1.0]);
        let y = img(2, 1, &[1.0, 0.0]);
        assert!((cr(&x, &y).unwrap() + 1.0).abs() < 1e-12);
        assert!((cr(&x, &x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let a = img(2, 1, &[0.0, 1.0]);
        let b = img(1, 2, &[0.0, 1.0]);
        assert!(matches!(mse(&a, &b), Err(Error::GeometryMismatch { .. })));
        let c = img(2, 1, &[0.4, 0.4]);
        assert!(matches!(cr(&a, &c), Err(Error::UndefinedCorrelation(_))));
    }

    fn triple() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (2usize..40).prop_flat_map(|n| {
            (
                proptest::collection::vec(0.0f64..=1.0, n),
                proptest::collection::vec(0.0f64..=1.0, n),
                proptest::collection::vec(0.0f64..=1.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn mse_symmetric_and_bounded((a, b, c) in triple()) {
            let n = a.len();
            let (a, b, c) = (img(n, 1, &a), img(n, 1, &b), img(n, 1, &c));
            let ab = mse(&a, &b).unwrap();
            prop_assert_eq!(ab, mse(&b, &a).unwrap());
            let bc = mse(&b, &c).unwrap();
            let ac = mse(&a, &c).unwrap();
            prop_assert!(ac <= 2.0 * (ab + bc) + 1e-9);
        }

        #[test]
        fn cr_sign_under_affine_maps(
            (x, y, _) in triple(),
            a in prop_oneof![-3.0f64..-0.1, 0.1f64..3.0],
            c in prop_oneof![-3.0f64..-0.1, 0.1f64..3.0],
            b in -1.0f64..1.0,
            e in -1.0f64..1.0,
        ) {
            let base = match pearson(&x, &y) { Ok(v) => v, Err(_) => return Ok(()) };
            let xa: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let yc: Vec<f64> = y.iter().map(|v| c * v + e).collect();
            let mapped = pearson(&xa, &yc).unwrap();
            prop_assert!((mapped - (a * c).signum() * base).abs() < 1e-9);
        }
    }
}
