use crate::image::{GrayImage, Rect};

/// Summed-area table with a zero guard row and column.
#[derive(Debug, Clone)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    // (width + 1) x (height + 1)
    table: Vec<f64>,
}

impl IntegralImage {
    pub fn new(img: &GrayImage) -> Self {
        Self::build(img, |v| v)
    }

    /// Table of squared samples, for window variance.
    pub fn squared(img: &GrayImage) -> Self {
        Self::build(img, |v| v * v)
    }

    fn build(img: &GrayImage, f: impl Fn(f64) -> f64) -> Self {
        let (w, h) = img.dims();
        let stride = w + 1;
        let mut table = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut row_sum = 0.0;
            for x in 0..w {
                row_sum += f(img.get(x, y));
                table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row_sum;
            }
        }
        Self {
            width: w,
            height: h,
            table,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Inclusive prefix sum `S(x, y) = sum of img(u, v) for u <= x, v <= y`.
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.table[(y + 1) * (self.width + 1) + x + 1]
    }

    /// Sum over `r` in four lookups. `r` must lie inside the image.
    #[inline]
    pub fn rect_sum(&self, r: Rect) -> f64 {
        let s = self.width + 1;
        let (x0, y0, x1, y1) = (r.x0, r.y0, r.x1(), r.y1());
        self.table[y1 * s + x1] - self.table[y0 * s + x1] - self.table[y1 * s + x0]
            + self.table[y0 * s + x0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn all_ones() {
        let img = GrayImage::filled(3, 3, 1.0).unwrap();
        let ii = IntegralImage::new(&img);
        assert_eq!(ii.at(2, 2), 9.0);
        assert_eq!(ii.rect_sum(Rect::new(1, 1, 2, 2)), 4.0);
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            (w, h, data) in (1usize..=32, 1usize..=32).prop_flat_map(|(w, h)| {
                (Just(w), Just(h), proptest::collection::vec(0.0f64..=1.0, w * h))
            }),
            seed in any::<u64>(),
        ) {
            let img = GrayImage::new(w, h, data).unwrap();
            let ii = IntegralImage::new(&img);
            let sq = IntegralImage::squared(&img);
            let x0 = (seed % w as u64) as usize;
            let y0 = ((seed >> 16) % h as u64) as usize;
            let rw = 1 + ((seed >> 32) % (w - x0) as u64) as usize;
            let rh = 1 + ((seed >> 48) % (h - y0) as u64) as usize;
            let r = Rect::new(x0, y0, rw, rh);
            let mut brute = 0.0;
            let mut brute_sq = 0.0;
            for y in y0..y0 + rh {
                for x in x0..x0 + rw {
                    brute += img.get(x, y);
                    brute_sq += img.get(x, y).powi(2);
                }
            }
            prop_assert!((ii.rect_sum(r) - brute).abs() < 1e-9);
            prop_assert!((sq.rect_sum(r) - brute_sq).abs() < 1e-9);
        }
    }
}
