use serde::{Deserialize, Serialize};

use super::cascade::{CascadeModel, WeightedRect};
use super::integral::IntegralImage;
use crate::error::{Error, Result};
use crate::image::{GrayImage, Rect};

/// Windows whose pixel deviation falls below this are never evaluated.
const MIN_WINDOW_STD: f64 = 1e-6;
/// Two raw detections belong to one group at this intersection-over-union.
const GROUP_IOU: f64 = 0.5;

/// A grouped detection. `score` is the number of raw windows in the group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub rect: Rect,
    pub score: f64,
}

impl BoundingBox {
    /// Centroid `(column, row)` at the diagonal intersection, rounded down to
    /// a pixel index.
    pub fn centroid_px(&self) -> (usize, usize) {
        (
            self.rect.x0 + self.rect.w / 2,
            self.rect.y0 + self.rect.h / 2,
        )
    }
}

/// Detection settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectParams {
    pub scale_step: f64,
    pub min_neighbors: usize,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            scale_step: 1.1,
            min_neighbors: 3,
        }
    }
}

struct Hit {
    rect: Rect,
    confidence: f64,
}

struct Scaled {
    rects: Vec<(Rect, f64)>,
    threshold: f64,
    left_val: f64,
    right_val: f64,
}

fn scale_rect(r: Rect, s: f64) -> Rect {
    let x0 = (r.x0 as f64 * s).round() as usize;
    let y0 = (r.y0 as f64 * s).round() as usize;
    let w = ((r.w as f64 * s).round() as usize).max(1);
    let h = ((r.h as f64 * s).round() as usize).max(1);
    Rect::new(x0, y0, w, h)
}

/// Rounding rectangle corners at a non-integer scale changes their areas, so
/// a feature that sums to zero over a flat patch stops doing so. As in the
/// reference detector, the first rectangle's weight is re-derived from the
/// scaled areas of the others whenever the base feature is zero-sum.
fn rebalance(base: &[WeightedRect], scaled: &mut [(Rect, f64)]) {
    let base_sum: f64 = base
        .iter()
        .map(|wr| wr.weight * wr.rect.area() as f64)
        .sum();
    let scale: f64 = base
        .iter()
        .map(|wr| (wr.weight * wr.rect.area() as f64).abs())
        .sum();
    if scaled.len() < 2 || base_sum.abs() > 1e-9 * scale {
        return;
    }
    let rest: f64 = scaled[1..].iter().map(|(r, w)| w * r.area() as f64).sum();
    scaled[0].1 = -rest / scaled[0].0.area() as f64;
}

/// Runs every stage on the window at `(wx, wy)`. Returns the last stage's
/// vote sum when all stages pass.
fn eval_window(
    ii: &IntegralImage,
    sq: &IntegralImage,
    win: Rect,
    stages: &[(f64, Vec<Scaled>)],
) -> Option<f64> {
    let area = win.area() as f64;
    let mean = ii.rect_sum(win) / area;
    let var = sq.rect_sum(win) / area - mean * mean;
    let std = var.max(0.0).sqrt();
    if std < MIN_WINDOW_STD {
        return None;
    }
    let norm = 1.0 / (area * std);
    let mut last = 0.0;
    for (threshold, stumps) in stages {
        let mut sum = 0.0;
        for st in stumps {
            let value: f64 = st
                .rects
                .iter()
                .map(|(r, wgt)| wgt * ii.rect_sum(r.translate(win.x0, win.y0)))
                .sum::<f64>()
                * norm;
            sum += if value < st.threshold {
                st.left_val
            } else {
                st.right_val
            };
        }
        if sum < *threshold {
            return None;
        }
        last = sum;
    }
    Some(last)
}

/// Slides the cascade over `img` at scales `base * scale_step^k` and returns
/// the strongest group of overlapping detections, if any survives.
///
/// Feature sums are divided by window area times window pixel deviation, so a
/// stump threshold is a contrast in units of the window's own deviation.
/// Zero-sum features stay zero-sum at every scale (see `rebalance`).
/// Positions advance one pixel below scale 2 and two pixels above.
/// Groups are connected components under IoU >= 0.5; the group rectangle is
/// the coordinate-wise mean. Groups smaller than `min_neighbors` are dropped
/// and ties on group size go to the larger summed confidence.
pub fn detect_nose(
    img: &GrayImage,
    model: &CascadeModel,
    params: &DetectParams,
) -> Result<Option<BoundingBox>> {
    let (bw, bh) = model.window();
    if img.width() < bw || img.height() < bh {
        return Err(Error::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            win_w: bw,
            win_h: bh,
        });
    }
    if !(params.scale_step > 1.0) || !params.scale_step.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "scale_step must exceed 1, got {}",
            params.scale_step
        )));
    }
    let ii = IntegralImage::new(img);
    let sq = IntegralImage::squared(img);

    let mut hits = Vec::new();
    let mut s = 1.0;
    loop {
        let ww = (bw as f64 * s).round() as usize;
        let wh = (bh as f64 * s).round() as usize;
        if ww > img.width() || wh > img.height() {
            break;
        }
        let stages: Vec<(f64, Vec<Scaled>)> = model
            .stages()
            .iter()
            .map(|st| {
                let stumps = st
                    .classifiers
                    .iter()
                    .map(|c| {
                        let mut rects: Vec<(Rect, f64)> = c
                            .feature
                            .rects
                            .iter()
                            .map(|wr| {
                                let mut r = scale_rect(wr.rect, s);
                                r.x0 = r.x0.min(ww - 1);
                                r.y0 = r.y0.min(wh - 1);
                                r.w = r.w.min(ww - r.x0);
                                r.h = r.h.min(wh - r.y0);
                                (r, wr.weight)
                            })
                            .collect();
                        rebalance(&c.feature.rects, &mut rects);
                        Scaled {
                            rects,
                            threshold: c.threshold,
                            left_val: c.left_val,
                            right_val: c.right_val,
                        }
                    })
                    .collect();
                (st.threshold, stumps)
            })
            .collect();
        let step = if s < 2.0 { 1 } else { 2 };
        for y in (0..=img.height() - wh).step_by(step) {
            for x in (0..=img.width() - ww).step_by(step) {
                let win = Rect::new(x, y, ww, wh);
                if let Some(confidence) = eval_window(&ii, &sq, win, &stages) {
                    hits.push(Hit {
                        rect: win,
                        confidence,
                    });
                }
            }
        }
        s *= params.scale_step;
    }
    Ok(group(&hits, params.min_neighbors))
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn group(hits: &[Hit], min_neighbors: usize) -> Option<BoundingBox> {
    let n = hits.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for a in 0..n {
        for b in a + 1..n {
            if hits[a].rect.iou(&hits[b].rect) >= GROUP_IOU {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    // root -> (count, sums of x0, y0, w, h, confidence)
    let mut groups: std::collections::BTreeMap<usize, (usize, [f64; 4], f64)> = Default::default();
    for (i, hit) in hits.iter().enumerate() {
        let root = find(&mut parent, i);
        let e = groups.entry(root).or_insert((0, [0.0; 4], 0.0));
        e.0 += 1;
        e.1[0] += hit.rect.x0 as f64;
        e.1[1] += hit.rect.y0 as f64;
        e.1[2] += hit.rect.w as f64;
        e.1[3] += hit.rect.h as f64;
        e.2 += hit.confidence;
    }
    let mut best: Option<(usize, f64, Rect)> = None;
    for (count, sums, conf) in groups.into_values() {
        if count < min_neighbors.max(1) {
            continue;
        }
        let c = count as f64;
        let rect = Rect::new(
            (sums[0] / c).round() as usize,
            (sums[1] / c).round() as usize,
            ((sums[2] / c).round() as usize).max(1),
            ((sums[3] / c).round() as usize).max(1),
        );
        let better = match best {
            None => true,
            Some((bc, bconf, _)) => count > bc || (count == bc && conf > bconf),
        };
        if better {
            best = Some((count, conf, rect));
        }
    }
    best.map(|(count, _, rect)| BoundingBox {
        rect,
        score: count as f64,
    })
}
