//! Laplacian-pyramid (multi-band) compositing of two placed halves.

use super::ncc::Offset;
use super::StitchParams;
use crate::error::{Error, Result};
use crate::image::GrayImage;

const KERNEL: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

/// Unbounded scalar plane used for pyramid levels.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Plane {
    pub w: usize,
    pub h: usize,
    pub data: Vec<f64>,
}

impl Plane {
    fn new(w: usize, h: usize) -> Self {
        Self {
            w,
            h,
            data: vec![0.0; w * h],
        }
    }

    #[inline]
    fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.w + x]
    }
}

/// Mirror index into `0..n` without repeating the edge sample.
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

fn blur_rows(p: &Plane) -> Plane {
    let mut out = Plane::new(p.w, p.h);
    for y in 0..p.h {
        for x in 0..p.w {
            let mut acc = 0.0;
            for (k, wt) in KERNEL.iter().enumerate() {
                acc += wt * p.at(reflect(x as isize + k as isize - 2, p.w), y);
            }
            out.data[y * p.w + x] = acc;
        }
    }
    out
}

fn blur_cols(p: &Plane) -> Plane {
    let mut out = Plane::new(p.w, p.h);
    for y in 0..p.h {
        for x in 0..p.w {
            let mut acc = 0.0;
            for (k, wt) in KERNEL.iter().enumerate() {
                acc += wt * p.at(x, reflect(y as isize + k as isize - 2, p.h));
            }
            out.data[y * p.w + x] = acc;
        }
    }
    out
}

/// Blur, then keep every other sample.
fn reduce(p: &Plane) -> Plane {
    let b = blur_cols(&blur_rows(p));
    let (w, h) = (p.w.div_ceil(2), p.h.div_ceil(2));
    let mut out = Plane::new(w, h);
    for y in 0..h {
        for x in 0..w {
            out.data[y * w + x] = b.at(2 * x, 2 * y);
        }
    }
    out
}

/// Zero-insert up to `w x h`, blur, and restore the gain.
fn expand(p: &Plane, w: usize, h: usize) -> Plane {
    let mut up = Plane::new(w, h);
    for y in (0..h).step_by(2) {
        for x in (0..w).step_by(2) {
            up.data[y * w + x] = 4.0 * p.at(x / 2, y / 2);
        }
    }
    blur_cols(&blur_rows(&up))
}

fn gaussian_pyramid(base: Plane, levels: usize) -> Vec<Plane> {
    let mut pyr = vec![base];
    for _ in 1..levels {
        let next = reduce(pyr.last().unwrap());
        pyr.push(next);
    }
    pyr
}

fn laplacian_pyramid(base: Plane, levels: usize) -> Vec<Plane> {
    let g = gaussian_pyramid(base, levels);
    let mut lap = Vec::with_capacity(levels);
    for l in 0..levels - 1 {
        let up = expand(&g[l + 1], g[l].w, g[l].h);
        let data = g[l].data.iter().zip(&up.data).map(|(a, b)| a - b).collect();
        lap.push(Plane {
            w: g[l].w,
            h: g[l].h,
            data,
        });
    }
    lap.push(g[levels - 1].clone());
    lap
}

fn collapse(mut lap: Vec<Plane>) -> Plane {
    let mut acc = lap.pop().unwrap();
    while let Some(level) = lap.pop() {
        let up = expand(&acc, level.w, level.h);
        let data = level
            .data
            .iter()
            .zip(&up.data)
            .map(|(a, b)| a + b)
            .collect();
        acc = Plane {
            w: level.w,
            h: level.h,
            data,
        };
    }
    acc
}

/// Largest usable level count for a `w x h` canvas, capped at `requested`.
pub(crate) fn effective_levels(w: usize, h: usize, requested: usize) -> usize {
    let mut levels = 1;
    while levels < requested && (1usize << (levels + 1)) <= w.min(h) {
        levels += 1;
    }
    levels
}

/// Composite geometry of `left` and `right` placed at `off`.
pub(crate) struct Layout {
    pub width: usize,
    pub height: usize,
    /// Top-left of `right` in canvas coordinates.
    pub origin: (isize, isize),
    /// Seam position as a continuous x coordinate.
    pub seam: f64,
}

pub(crate) fn layout(left: &GrayImage, right: &GrayImage, off: Offset) -> Result<Layout> {
    let ox = left.width() as isize - off.i as isize;
    let oy = -(off.j as isize);
    if ox < 1 {
        return Err(Error::InvalidParameter(format!(
            "offset ({}, {}) places the right half past the left edge",
            off.i, off.j
        )));
    }
    let width = (left.width() as isize).max(ox + right.width() as isize) as usize;
    Ok(Layout {
        width,
        height: left.height(),
        origin: (ox, oy),
        seam: (left.width() as f64 + ox as f64) / 2.0,
    })
}

/// Fills every `None` by replicating the nearest covered sample in its
/// column; columns with no coverage copy the nearest covered column.
fn fill_uncovered(w: usize, h: usize, cells: Vec<Option<f64>>) -> Plane {
    let mut out = Plane::new(w, h);
    let mut col_has = vec![false; w];
    for x in 0..w {
        let covered: Vec<usize> = (0..h).filter(|&y| cells[y * w + x].is_some()).collect();
        if covered.is_empty() {
            continue;
        }
        col_has[x] = true;
        for y in 0..h {
            let src = covered
                .iter()
                .copied()
                .min_by_key(|&c| (c.abs_diff(y), c))
                .unwrap();
            out.data[y * w + x] = cells[src * w + x].unwrap();
        }
    }
    for x in 0..w {
        if col_has[x] {
            continue;
        }
        let nearest = (0..w)
            .filter(|&c| col_has[c])
            .min_by_key(|&c| (c.abs_diff(x), c))
            .expect("left half covers at least one column");
        for y in 0..h {
            out.data[y * w + x] = out.data[y * w + nearest];
        }
    }
    out
}

/// Two full-canvas renderings: one where `left` wins overlaps, one where
/// `right` wins. Samples covered by neither are edge-replicated.
fn render(left: &GrayImage, right: &GrayImage, lay: &Layout) -> (Plane, Plane) {
    let (w, h) = (lay.width, lay.height);
    let right_at = |x: usize, y: usize| -> Option<f64> {
        let rx = x as isize - lay.origin.0;
        let ry = y as isize - lay.origin.1;
        if rx >= 0 && ry >= 0 && (rx as usize) < right.width() && (ry as usize) < right.height() {
            Some(right.get(rx as usize, ry as usize))
        } else {
            None
        }
    };
    let left_at = |x: usize, y: usize| -> Option<f64> {
        (x < left.width() && y < left.height()).then(|| left.get(x, y))
    };
    let mut lc = Vec::with_capacity(w * h);
    let mut rc = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (l, r) = (left_at(x, y), right_at(x, y));
            lc.push(l.or(r));
            rc.push(r.or(l));
        }
    }
    (fill_uncovered(w, h, lc), fill_uncovered(w, h, rc))
}

/// Weight of the left rendering at column `x`: a linear ramp `feather`
/// columns wide centred on the seam, or a hard step when `feather` is 0.
fn seam_mask(w: usize, h: usize, seam: f64, feather: usize) -> Plane {
    let mut m = Plane::new(w, h);
    for x in 0..w {
        let c = x as f64 + 0.5;
        let v = if feather == 0 {
            if c < seam {
                1.0
            } else {
                0.0
            }
        } else {
            (0.5 - (c - seam) / feather as f64).clamp(0.0, 1.0)
        };
        for y in 0..h {
            m.data[y * w + x] = v;
        }
    }
    m
}

/// Places `right` at `off` next to `left` and blends the two across the seam.
///
/// The right half's top-left lands at `(left.width - i, -j)`. Each half is
/// rendered over the whole canvas (the other half fills its gaps), both
/// renderings are decomposed into Laplacian pyramids, every level is mixed
/// with the matching level of a Gaussian pyramid of the seam mask, and the
/// result is collapsed and clamped to `[0, 1]`. The output keeps the left
/// half's height. With one level this is plain linear feathering.
pub fn multiband_blend(
    left: &GrayImage,
    right: &GrayImage,
    off: Offset,
    p: &StitchParams,
) -> Result<GrayImage> {
    p.validate()?;
    let r = p.search_radius as i32;
    if off.i.abs() > r || off.j.abs() > r {
        return Err(Error::InvalidParameter(format!(
            "offset ({}, {}) exceeds search radius {r}",
            off.i, off.j
        )));
    }
    let lay = layout(left, right, off)?;
    let (lc, rc) = render(left, right, &lay);
    let levels = effective_levels(lay.width, lay.height, p.blend_levels);
    let mask = seam_mask(lay.width, lay.height, lay.seam, p.feather_width);

    let gm = gaussian_pyramid(mask, levels);
    let la = laplacian_pyramid(lc, levels);
    let lb = laplacian_pyramid(rc, levels);
    let blended: Vec<Plane> = la
        .iter()
        .zip(&lb)
        .zip(&gm)
        .map(|((a, b), m)| Plane {
            w: a.w,
            h: a.h,
            data: a
                .data
                .iter()
                .zip(&b.data)
                .zip(&m.data)
                .map(|((&va, &vb), &wm)| {
                    if va == vb {
                        va
                    } else {
                        wm * va + (1.0 - wm) * vb
                    }
                })
                .collect(),
        })
        .collect();
    let out = collapse(blended);
    GrayImage::from_clamped(out.w, out.h, out.data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Rect;
    use crate::quality;

    fn textured(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |x, y| {
            let fx = x as f64 / w as f64;
            let fy = y as f64 / h as f64;
            0.5 + 0.3 * (6.0 * fx).sin() * (4.0 * fy).cos()
                + 0.1 * ((x * 31 + y * 17) % 7) as f64 / 7.0
        })
        .unwrap()
    }

    #[test]
    fn reflect_indices() {
        assert_eq!(reflect(-1, 5), 1);
        assert_eq!(reflect(-2, 5), 2);
        assert_eq!(reflect(5, 5), 3);
        assert_eq!(reflect(6, 5), 2);
        assert_eq!(reflect(3, 1), 0);
        assert_eq!(reflect(-1, 2), 1);
        assert_eq!(reflect(2, 2), 0);
    }

    #[test]
    fn pyramid_reconstructs_exactly() {
        let img = textured(37, 23);
        let base = Plane {
            w: 37,
            h: 23,
            data: img.data().to_vec(),
        };
        let back = collapse(laplacian_pyramid(base.clone(), 4));
        for (a, b) in back.data.iter().zip(&base.data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constants_are_preserved() {
        let p = StitchParams::default();
        let a = GrayImage::filled(30, 40, 0.37).unwrap();
        for off in [Offset::ZERO, Offset::new(3, -2), Offset::new(-4, 5)] {
            let out = multiband_blend(&a, &a, off, &p).unwrap();
            assert!(
                out.data().iter().all(|&v| (v - 0.37).abs() < 1e-12),
                "offset {off:?}"
            );
        }
    }

    #[test]
    fn exact_split_reassembles() {
        let img = textured(64, 48);
        let left = img.crop(Rect::new(0, 0, 30, 48)).unwrap();
        let right = img.crop(Rect::new(30, 0, 34, 48)).unwrap();
        let out = multiband_blend(&left, &right, Offset::ZERO, &StitchParams::default()).unwrap();
        assert_eq!(out.dims(), img.dims());
        assert!(quality::mse(&img, &out).unwrap() < 1e-4);
    }

    #[test]
    fn single_level_is_linear_feathering() {
        let left = textured(20, 16);
        let right = left.hflip();
        let p = StitchParams {
            blend_levels: 1,
            ..StitchParams::default()
        };
        // an overlap of four columns so the two renderings differ
        let off = Offset::new(4, 0);
        let out = multiband_blend(&left, &right, off, &p).unwrap();
        assert_eq!(out.dims(), (36, 16));
        let seam = (20.0 + 16.0) / 2.0;
        for y in 0..16 {
            for x in 0..36 {
                let l = if x < 20 {
                    left.get(x, y)
                } else {
                    right.get(x - 16, y)
                };
                let r = if x >= 16 {
                    right.get(x - 16, y)
                } else {
                    left.get(x, y)
                };
                let wl: f64 = (0.5 - (x as f64 + 0.5 - seam) / 8.0).clamp(0.0, 1.0);
                let expect = wl * l + (1.0 - wl) * r;
                assert!((out.get(x, y) - expect).abs() < 1e-12, "({x}, {y})");
            }
        }
    }

    #[test]
    fn vertical_gap_rows_replicate_edges() {
        let left = textured(20, 24);
        let right = GrayImage::from_fn(20, 24, |x, y| (x + y) as f64 / 44.0).unwrap();
        let p = StitchParams {
            blend_levels: 1,
            feather_width: 0,
            ..StitchParams::default()
        };
        // right moved up by 3: its last three canvas rows are uncovered on the right side
        let out = multiband_blend(&left, &right, Offset::new(0, 3), &p).unwrap();
        for y in 21..24 {
            for x in 20..40 {
                assert_eq!(out.get(x, y), right.get(x - 20, 23));
            }
        }
    }

    #[test]
    fn output_stays_in_unit_range() {
        let left = GrayImage::from_fn(32, 32, |x, _| if x % 2 == 0 { 0.0 } else { 1.0 }).unwrap();
        let right = GrayImage::from_fn(32, 32, |_, y| if y % 2 == 0 { 1.0 } else { 0.0 }).unwrap();
        let out =
            multiband_blend(&left, &right, Offset::new(5, 2), &StitchParams::default()).unwrap();
        assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn level_count_shrinks_for_small_canvases() {
        assert_eq!(effective_levels(200, 180, 4), 4);
        assert_eq!(effective_levels(9, 200, 4), 3);
        assert_eq!(effective_levels(3, 3, 4), 1);
    }
}
