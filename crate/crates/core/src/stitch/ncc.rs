use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{GrayImage, Rect};

/// Per-sample variance below which a region counts as constant.
pub(crate) const MIN_VARIANCE: f64 = 1e-20;

/// Integer displacement `(i, j)` applied to the second operand of a
/// correlation: sample `(x, y)` of the first image is paired with
/// `(x + i, y + j)` of the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Offset {
    pub i: i32,
    pub j: i32,
}

impl Offset {
    pub const ZERO: Offset = Offset { i: 0, j: 0 };

    pub fn new(i: i32, j: i32) -> Self {
        Self { i, j }
    }

    pub fn l1(&self) -> u32 {
        self.i.unsigned_abs() + self.j.unsigned_abs()
    }
}

/// Zero-mean normalized cross-correlation between `region` of `w_img` and the
/// same-sized region of `f_img` displaced by `off`.
///
/// Both means are taken inside their own box. Fails when the displaced box
/// leaves `f_img` or either box has zero variance.
pub fn ncc(w_img: &GrayImage, f_img: &GrayImage, off: Offset, region: Rect) -> Result<f64> {
    if !region.fits_in(w_img.width(), w_img.height()) {
        return Err(Error::OutOfBounds {
            rect: region,
            width: w_img.width(),
            height: w_img.height(),
        });
    }
    let fx0 = region.x0 as i64 + off.i as i64;
    let fy0 = region.y0 as i64 + off.j as i64;
    if fx0 < 0
        || fy0 < 0
        || fx0 as usize + region.w > f_img.width()
        || fy0 as usize + region.h > f_img.height()
    {
        return Err(Error::InvalidParameter(format!(
            "region {region:?} displaced by ({}, {}) leaves the {}x{} image",
            off.i,
            off.j,
            f_img.width(),
            f_img.height()
        )));
    }
    ncc_at(w_img, region, f_img, fx0 as usize, fy0 as usize).ok_or_else(|| {
        Error::UndefinedCorrelation(format!(
            "zero variance in region {region:?} at offset ({}, {})",
            off.i, off.j
        ))
    })
}

/// Unchecked kernel: correlates `wr` of `w` with the box of the same size at
/// `(fx0, fy0)` in `f`. Returns `None` for a constant operand.
pub(crate) fn ncc_at(
    w: &GrayImage,
    wr: Rect,
    f: &GrayImage,
    fx0: usize,
    fy0: usize,
) -> Option<f64> {
    let n = wr.area() as f64;
    let (mut sw, mut sf) = (0.0, 0.0);
    for y in 0..wr.h {
        let wrow = &w.row(wr.y0 + y)[wr.x0..wr.x1()];
        let frow = &f.row(fy0 + y)[fx0..fx0 + wr.w];
        sw += wrow.iter().sum::<f64>();
        sf += frow.iter().sum::<f64>();
    }
    let (mw, mf) = (sw / n, sf / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for y in 0..wr.h {
        let wrow = &w.row(wr.y0 + y)[wr.x0..wr.x1()];
        let frow = &f.row(fy0 + y)[fx0..fx0 + wr.w];
        for (a, b) in wrow.iter().zip(frow) {
            let da = a - mw;
            let db = b - mf;
            sxy += da * db;
            sxx += da * da;
            syy += db * db;
        }
    }
    if sxx <= MIN_VARIANCE * n || syy <= MIN_VARIANCE * n {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(rows: &[[f64; 3]; 3]) -> GrayImage {
        GrayImage::new(3, 3, rows.iter().flatten().copied().collect()).unwrap()
    }

    /// Literal double-sum evaluation, kept separate from the kernel.
    fn oracle(w: &GrayImage, f: &GrayImage) -> f64 {
        let (lw, kh) = w.dims();
        let mut wbar = 0.0;
        let mut fbar = 0.0;
        for x in 0..lw {
            for y in 0..kh {
                wbar += w.get(x, y);
                fbar += f.get(x, y);
            }
        }
        wbar /= (lw * kh) as f64;
        fbar /= (lw * kh) as f64;
        let mut num = 0.0;
        let mut dw = 0.0;
        let mut df = 0.0;
        for x in 0..lw {
            for y in 0..kh {
                num += (w.get(x, y) - wbar) * (f.get(x, y) - fbar);
                dw += (w.get(x, y) - wbar).powi(2);
                df += (f.get(x, y) - fbar).powi(2);
            }
        }
        num / (dw.sqrt() * df.sqrt())
    }

    #[test]
    fn cross_fixture_matches_oracle() {
        let w = grid(&[[0.0, 1.0, 0.0], [1.0, 1.0, 1.0], [0.0, 1.0, 0.0]]);
        let f = grid(&[[1.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 1.0]]);
        let expected = oracle(&w, &f);
        assert!((expected + 1.0).abs() < 1e-12);
        let got = ncc(&w, &f, Offset::ZERO, w.full_rect()).unwrap();
        assert!((got - expected).abs() < 1e-9);
    }

    #[test]
    fn constant_region_is_undefined() {
        let w = GrayImage::filled(4, 4, 0.2).unwrap();
        let f = GrayImage::from_fn(4, 4, |x, _| x as f64 / 4.0).unwrap();
        assert!(matches!(
            ncc(&w, &f, Offset::ZERO, w.full_rect()),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn displaced_region_must_fit() {
        let w = GrayImage::from_fn(4, 4, |x, y| (x + y) as f64 / 8.0).unwrap();
        assert!(ncc(&w, &w, Offset::new(1, 0), w.full_rect()).is_err());
        assert!(ncc(&w, &w, Offset::new(-1, 0), Rect::new(1, 0, 3, 4)).is_ok());
    }

    #[test]
    fn displacement_reads_shifted_box() {
        let f = GrayImage::from_fn(6, 6, |x, y| ((x * 7 + y * 13) % 11) as f64 / 10.0).unwrap();
        let w = f.crop(Rect::new(2, 1, 3, 3)).unwrap();
        let v = ncc(&w, &f, Offset::new(2, 1), w.full_rect()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn range_and_affine_invariance(
            d1 in proptest::collection::vec(0.0f64..=1.0, 25),
            d2 in proptest::collection::vec(0.0f64..=1.0, 25),
            a in 0.05f64..1.0,
            b in 0.0f64..0.5,
        ) {
            let w = GrayImage::new(5, 5, d1).unwrap();
            let f = GrayImage::new(5, 5, d2).unwrap();
            if let Ok(v) = ncc(&w, &f, Offset::ZERO, w.full_rect()) {
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&v));
                let g = GrayImage::new(5, 5, f.data().iter().map(|x| b + (1.0 - b) * a * x).collect()).unwrap();
                let v2 = ncc(&w, &g, Offset::ZERO, w.full_rect()).unwrap();
                prop_assert!((v - v2).abs() < 1e-9);
            }
        }
    }
}
