//! Grayscale raster type and the elementary transforms the pipeline is built from.
//!
//! Pixels are stored as `f64` luminance in `[0, 1]`, row-major. Quantization to
//! 8-bit codes happens only when writing files (see [`io`]).

pub mod io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_image, save_image};

/// An axis-aligned pixel rectangle, origin at the top-left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn new(x0: usize, y0: usize, w: usize, h: usize) -> Self {
        Self { x0, y0, w, h }
    }

    /// Column one past the right edge.
    pub fn x1(&self) -> usize {
        self.x0 + self.w
    }

    /// Row one past the bottom edge.
    pub fn y1(&self) -> usize {
        self.y0 + self.h
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.w >= 1 && self.h >= 1 && self.x1() <= width && self.y1() <= height
    }

    pub fn translate(&self, dx: usize, dy: usize) -> Rect {
        Rect::new(self.x0 + dx, self.y0 + dy, self.w, self.h)
    }

    pub fn intersection_area(&self, other: &Rect) -> usize {
        let x0 = self.x0.max(other.x0);
        let y0 = self.y0.max(other.y0);
        let x1 = self.x1().min(other.x1());
        let y1 = self.y1().min(other.y1());
        if x1 <= x0 || y1 <= y0 {
            0
        } else {
            (x1 - x0) * (y1 - y0)
        }
    }

    pub fn iou(&self, other: &Rect) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// A 2-D luminance raster with samples in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    /// Builds an image from row-major samples, validating size and range.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "expected {} samples for {width}x{height}, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some((i, v)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::InvalidImage(format!(
                "sample {i} = {v} is outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Like [`GrayImage::new`] but clamps every sample into `[0, 1]` first.
    /// Non-finite samples are still rejected.
    pub fn from_clamped(width: usize, height: usize, mut data: Vec<f64>) -> Result<Self> {
        for v in data.iter_mut() {
            if v.is_finite() {
                *v = v.clamp(0.0, 1.0);
            }
        }
        Self::new(width, height, data)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn full_rect(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Extracts the sub-image covered by `r`.
    pub fn crop(&self, r: Rect) -> Result<GrayImage> {
        if !r.fits_in(self.width, self.height) {
            return Err(Error::OutOfBounds {
                rect: r,
                width: self.width,
                height: self.height,
            });
        }
        let mut data = Vec::with_capacity(r.area());
        for y in r.y0..r.y1() {
            data.extend_from_slice(&self.row(y)[r.x0..r.x1()]);
        }
        Ok(GrayImage {
            width: r.w,
            height: r.h,
            data,
        })
    }

    /// Mirrors the image left-to-right.
    pub fn hflip(&self) -> GrayImage {
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..self.height {
            data.extend(self.row(y).iter().rev());
        }
        GrayImage {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Standardizes to zero mean and unit deviation, then remaps the result
    /// affinely onto `[0, 1]`. A constant image becomes the constant 0.5 image.
    pub fn photometric_normalize(&self) -> GrayImage {
        let n = self.data.len() as f64;
        let mean = self.mean();
        let var = self
            .data
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / n;
        let std = var.sqrt();
        let flat = GrayImage {
            width: self.width,
            height: self.height,
            data: vec![0.5; self.data.len()],
        };
        // rounding in the mean leaves a residue of ~1e-17 on constant images
        if std <= 1e-12 {
            return flat;
        }
        let z: Vec<f64> = self.data.iter().map(|v| (v - mean) / std).collect();
        let (lo, hi) = z
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let span = hi - lo;
        if !(span > 0.0) {
            return flat;
        }
        let data = z
            .into_iter()
            .map(|v| ((v - lo) / span).clamp(0.0, 1.0))
            .collect();
        GrayImage {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Flattened row-major sample vector.
    pub fn to_vector(&self) -> Vec<f64> {
        self.data.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(w: usize, h: usize) -> GrayImage {
        let n = (w * h) as f64;
        GrayImage::from_fn(w, h, |x, y| (y * w + x) as f64 / n).unwrap()
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(GrayImage::new(0, 1, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0.0; 3]).is_err());
        assert!(GrayImage::new(1, 1, vec![1.5]).is_err());
        assert!(GrayImage::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn crop_full_rect_is_identity() {
        let img = ramp(5, 3);
        assert_eq!(img.crop(img.full_rect()).unwrap(), img);
    }

    #[test]
    fn crop_left_half_of_ramp() {
        let img = ramp(4, 4);
        let left = img.crop(Rect::new(0, 0, 2, 4)).unwrap();
        assert_eq!(left.dims(), (2, 4));
        for y in 0..4 {
            for x in 0..2 {
                assert_eq!(left.get(x, y), img.get(x, y));
            }
        }
    }

    #[test]
    fn crop_out_of_bounds() {
        let img = ramp(4, 4);
        assert!(matches!(
            img.crop(Rect::new(0, 0, 5, 4)),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn hflip_definition_and_fixed_point() {
        let img = GrayImage::new(3, 1, vec![0.1, 0.2, 0.3]).unwrap();
        assert_eq!(img.hflip().data(), &[0.3, 0.2, 0.1]);
        let col = GrayImage::new(1, 3, vec![0.1, 0.2, 0.3]).unwrap();
        assert_eq!(col.hflip(), col);
    }

    #[test]
    fn normalize_constant_and_two_pixel() {
        let c = GrayImage::filled(3, 2, 0.3).unwrap();
        assert!(c.photometric_normalize().data().iter().all(|&v| v == 0.5));
        // 128/255 over an image whose size makes the mean inexact
        let q = GrayImage::filled(48, 56, 128.0 / 255.0).unwrap();
        assert!(q.photometric_normalize().data().iter().all(|&v| v == 0.5));
        let two = GrayImage::new(2, 1, vec![0.2, 0.8]).unwrap();
        let n = two.photometric_normalize();
        assert!((n.data()[0] - 0.0).abs() < 1e-12);
        assert!((n.data()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iou_of_identical_and_disjoint() {
        let a = Rect::new(0, 0, 4, 4);
        assert_eq!(a.iou(&a), 1.0);
        assert_eq!(a.iou(&Rect::new(4, 4, 2, 2)), 0.0);
    }

    fn arb_image() -> impl Strategy<Value = GrayImage> {
        (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
            proptest::collection::vec(0.0f64..=1.0, w * h)
                .prop_map(move |d| GrayImage::new(w, h, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn hflip_is_involution_preserving_multiset(img in arb_image()) {
            let f = img.hflip();
            prop_assert_eq!(&f.hflip(), &img);
            let mut a = img.data().to_vec();
            let mut b = f.data().to_vec();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn normalize_is_bounded_and_idempotent(img in arb_image()) {
            let n1 = img.photometric_normalize();
            prop_assert!(n1.data().iter().all(|v| (0.0..=1.0).contains(v)));
            let n2 = n1.photometric_normalize();
            for (a, b) in n1.data().iter().zip(n2.data()) {
                prop_assert!((a - b).abs() <= 1e-9);
            }
        }

        #[test]
        fn crop_composes(
            img in arb_image(),
            a in (0usize..12, 0usize..12, 1usize..12, 1usize..12),
            b in (0usize..12, 0usize..12, 1usize..12, 1usize..12),
        ) {
            let ra = Rect::new(a.0, a.1, a.2, a.3);
            let rb = Rect::new(b.0, b.1, b.2, b.3);
            if let Ok(outer) = img.crop(ra) {
                if let Ok(inner) = outer.crop(rb) {
                    let direct = img.crop(rb.translate(ra.x0, ra.y0)).unwrap();
                    prop_assert_eq!(inner, direct);
                }
            }
        }
    }
}
