use rayon::prelude::*;

use super::ncc::{ncc_at, Offset};
use super::StitchParams;
use crate::error::{Error, Result};
use crate::image::{GrayImage, Rect};

/// Peaks closer than this are ties; rounding alone separates equal scores
/// computed over different boxes.
pub const TIE_EPS: f64 = 1e-12;

/// Exhaustive seam alignment.
///
/// The box is the rightmost `band_width` columns of `left` over rows
/// `[radius, H - radius)`, `H` being the shorter of the two heights. For each
/// `(i, j)` with `|i|, |j| <= radius` it is correlated with `right` sampled at
/// `(x + i, y + j)`, `x` counting from the first band column. Columns that fall
/// off the left edge of `right` (negative `i`) are dropped from the box for that
/// candidate. Candidates with a constant box are skipped.
///
/// Ties on the peak (within [`TIE_EPS`]) go to the smallest `|i| + |j|`, then smallest `j`, then
/// smallest `i`. Candidates are scored in parallel and reduced sequentially,
/// so the result does not depend on the thread count.
pub fn find_best_offset(
    left: &GrayImage,
    right: &GrayImage,
    p: &StitchParams,
) -> Result<(Offset, f64)> {
    p.validate()?;
    let r = p.search_radius as i32;
    let bw = p.band_width;
    let height = left.height().min(right.height());
    if left.width() < bw || right.width() < bw {
        return Err(Error::InvalidParameter(format!(
            "both halves must be at least {bw} px wide (got {} and {})",
            left.width(),
            right.width()
        )));
    }
    if height < 2 * p.search_radius + 2 {
        return Err(Error::InvalidParameter(format!(
            "halves must be at least {} px tall for search radius {}",
            2 * p.search_radius + 2,
            p.search_radius
        )));
    }
    let rows = (p.search_radius, height - p.search_radius);
    let band_x0 = left.width() - bw;

    let candidates: Vec<Offset> = (-r..=r)
        .flat_map(|j| (-r..=r).map(move |i| Offset::new(i, j)))
        .collect();

    let scores: Vec<Option<f64>> = candidates
        .par_iter()
        .map(|off| {
            // band columns x in [x_lo, x_hi) map to right columns x + i
            let x_lo = (-off.i).max(0) as usize;
            let x_hi = (bw as i64).min(right.width() as i64 - off.i as i64);
            if x_hi <= x_lo as i64 + 1 {
                return None;
            }
            let x_hi = x_hi as usize;
            let region = Rect::new(band_x0 + x_lo, rows.0, x_hi - x_lo, rows.1 - rows.0);
            let fx0 = (x_lo as i64 + off.i as i64) as usize;
            let fy0 = (rows.0 as i64 + off.j as i64) as usize;
            ncc_at(left, region, right, fx0, fy0)
        })
        .collect();

    let mut best: Option<(Offset, f64)> = None;
    for (off, score) in candidates.iter().zip(&scores) {
        let Some(s) = *score else { continue };
        let better = match best {
            None => true,
            Some((b, bs)) => {
                s > bs + TIE_EPS
                    || ((s - bs).abs() <= TIE_EPS && (off.l1(), off.j, off.i) < (b.l1(), b.j, b.i))
            }
        };
        if better {
            best = Some((*off, s));
        }
    }
    best.ok_or_else(|| {
        Error::UndefinedCorrelation("seam band is constant at every candidate offset".into())
    })
}
