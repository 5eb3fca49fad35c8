use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::{split, Corpus, CorpusSummary};
use super::{occlude, AxisChoice, ExperimentConfig, GallerySource, Occlusion};
use crate::axis::{default_search_range, mirror_search_axis, SymmetryAxis};
use crate::eigen::{train_vectors, Metric};
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::quality::{assess, QualityReport};
use crate::stitch::{stitch_face, stitch_face_from, SourceSide};

/// Exact CSV header of [`SweepReport::to_csv`].
pub const CSV_HEADER: &str = "k,metric,correct,total,rate,mean_mse,mean_cr";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub metric: Metric,
    pub correct: usize,
    pub total: usize,
    /// `correct / total`.
    pub rate: f64,
    pub mean_mse: Option<f64>,
    pub mean_cr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeFailure {
    pub path: String,
    pub person: String,
    pub error: String,
}

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub train_s: f64,
    pub evaluate_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: ExperimentConfig,
    pub corpus: CorpusSummary,
    pub train_images: usize,
    pub test_images: usize,
    pub rows: Vec<SweepRow>,
    /// Probes that could not be completed; each is counted as misclassified.
    pub failures: Vec<ProbeFailure>,
    pub timings: Timings,
}

impl SweepReport {
    pub fn row(&self, k: usize, metric: Metric) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.k == k && r.metric == metric)
    }

    /// One line per `(k, metric)`, LF endings, empty quality fields when the
    /// sweep did not stitch.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.k,
                r.metric,
                r.correct,
                r.total,
                r.rate,
                opt(r.mean_mse),
                opt(r.mean_cr)
            );
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always representable")
    }

    /// Writes `sweep.csv` and `sweep.json` into `dir`, creating it if needed.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv = dir.join("sweep.csv");
        std::fs::write(&csv, self.to_csv()).map_err(|e| Error::io(&csv, e))?;
        let json = dir.join("sweep.json");
        std::fs::write(&json, self.to_json()).map_err(|e| Error::io(&json, e))
    }

    /// Copy with timings zeroed, for comparing runs.
    pub fn without_timings(&self) -> SweepReport {
        SweepReport {
            timings: Timings::default(),
            ..self.clone()
        }
    }
}

/// Resamples to `width x height` by cropping or repeating edge pixels.
/// With `anchor_right` the right edges are aligned, otherwise the left.
pub fn fit_to(img: &GrayImage, width: usize, height: usize, anchor_right: bool) -> GrayImage {
    if img.dims() == (width, height) {
        return img.clone();
    }
    let (iw, ih) = (img.width() as isize, img.height() as isize);
    let shift = if anchor_right { iw - width as isize } else { 0 };
    GrayImage::from_fn(width, height, |x, y| {
        let sx = (x as isize + shift).clamp(0, iw - 1) as usize;
        let sy = (y as isize).min(ih - 1) as usize;
        img.get(sx, sy)
    })
    .expect("samples come from a valid image")
}

/// Occlusion, optional completion, and normalization, as applied to a probe.
/// Returns the prepared image and, when stitched, its quality against `original`.
fn prepare(
    original: &GrayImage,
    cfg: &ExperimentConfig,
) -> Result<(GrayImage, Option<QualityReport>)> {
    let occluded = occlude(original, cfg.occlusion);
    let (w, h) = original.dims();
    let (completed, quality) = if cfg.stitch_enabled {
        let boundary = SymmetryAxis::manual((w / 2) as f64);
        let out = match (cfg.axis, cfg.occlusion) {
            (AxisChoice::MirrorSearch, _) | (AxisChoice::Auto, Occlusion::None) => {
                let (lo, hi) = default_search_range(w);
                let axis = mirror_search_axis(&occluded, lo, hi)?;
                stitch_face(&occluded, &axis, &cfg.stitch)?
            }
            (_, Occlusion::MaskRightHalf) => {
                stitch_face_from(&occluded, &boundary, SourceSide::Left, &cfg.stitch)?
            }
            (_, Occlusion::MaskLeftHalf) => {
                stitch_face_from(&occluded, &boundary, SourceSide::Right, &cfg.stitch)?
            }
            (AxisChoice::MaskBoundary, Occlusion::None) => {
                stitch_face(&occluded, &boundary, &cfg.stitch)?
            }
        };
        let fitted = fit_to(&out.image, w, h, out.source == SourceSide::Right);
        let q = assess(original, &fitted).ok();
        (fitted, q)
    } else {
        (occluded, None)
    };
    let prepared = if cfg.normalize {
        completed.photometric_normalize()
    } else {
        completed
    };
    Ok((prepared, quality))
}

struct Probe {
    coeffs: Option<Vec<f64>>,
    quality: Option<QualityReport>,
    failure: Option<String>,
}

/// Trains once on the gallery split and scores every probe at each
/// `(k, metric)` of the config.
///
/// One model is trained at the largest `k`; smaller `k` use its leading
/// eigenfaces, which is the same basis a separate training run would find.
/// A probe counts as correct when its nearest gallery label is its own
/// person; the known/unknown threshold does not enter the rate. Probes are
/// processed in parallel and tallied in corpus order, so the report is
/// identical for any thread count.
pub fn run_sweep(corpus: &Corpus, cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let t0 = Instant::now();
    let sp = split(corpus, &cfg.split, cfg.seed)?;
    let k_max = *cfg.k_values.iter().max().expect("validated non-empty");
    if k_max + 1 > sp.train.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {k_max} needs at least {} training images, the split gives {}",
            k_max + 1,
            sp.train.len()
        )));
    }
    let (w, h) = corpus.geometry();

    let gallery_cfg = match cfg.gallery {
        GallerySource::Original => ExperimentConfig {
            occlusion: Occlusion::None,
            stitch_enabled: false,
            ..cfg.clone()
        },
        GallerySource::Stitched => cfg.clone(),
    };
    let vectors: Vec<Vec<f64>> = sp
        .train
        .par_iter()
        .map(|&i| {
            let img = corpus.load(i)?;
            let prepared = match prepare(&img, &gallery_cfg) {
                Ok((p, _)) => p,
                Err(e) => {
                    log::warn!(
                        "gallery image {} kept unstitched: {e}",
                        corpus.entries()[i].path.display()
                    );
                    if cfg.normalize {
                        img.photometric_normalize()
                    } else {
                        img
                    }
                }
            };
            Ok(prepared.into_data())
        })
        .collect::<Result<_>>()?;
    let labels: Vec<String> = sp
        .train
        .iter()
        .map(|&i| corpus.entries()[i].person.clone())
        .collect();
    let model = train_vectors(vectors, w, h, &labels, k_max)?;
    let train_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let probes: Vec<Probe> = sp
        .test
        .par_iter()
        .map(|&i| {
            let outcome = corpus
                .load(i)
                .and_then(|img| prepare(&img, cfg))
                .and_then(|(p, q)| Ok((model.project(&p)?, q)));
            match outcome {
                Ok((coeffs, quality)) => Probe {
                    coeffs: Some(coeffs),
                    quality,
                    failure: None,
                },
                Err(e) => {
                    log::warn!(
                        "probe {} counted as a miss: {e}",
                        corpus.entries()[i].path.display()
                    );
                    Probe {
                        coeffs: None,
                        quality: None,
                        failure: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();

    let qualities: Vec<&QualityReport> = probes.iter().filter_map(|p| p.quality.as_ref()).collect();
    let (mean_mse, mean_cr) = if cfg.stitch_enabled && !qualities.is_empty() {
        let n = qualities.len() as f64;
        (
            Some(qualities.iter().map(|q| q.mse).sum::<f64>() / n),
            Some(qualities.iter().map(|q| q.cr).sum::<f64>() / n),
        )
    } else {
        (None, None)
    };

    let mut rows = Vec::new();
    for &k in &cfg.k_values {
        let tm = model.truncate(k)?;
        for &metric in &cfg.metrics {
            let mut correct = 0;
            for (probe, &i) in probes.iter().zip(&sp.test) {
                let Some(c) = &probe.coeffs else { continue };
                if tm.classify_coefficients(c, metric)?.nearest_label == corpus.entries()[i].person
                {
                    correct += 1;
                }
            }
            let total = sp.test.len();
            rows.push(SweepRow {
                k,
                metric,
                correct,
                total,
                rate: correct as f64 / total as f64,
                mean_mse,
                mean_cr,
            });
        }
    }
    let failures = probes
        .iter()
        .zip(&sp.test)
        .filter_map(|(p, &i)| {
            p.failure.as_ref().map(|e| ProbeFailure {
                path: corpus.entries()[i].path.display().to_string(),
                person: corpus.entries()[i].person.clone(),
                error: e.clone(),
            })
        })
        .collect();

    Ok(SweepReport {
        config: cfg.clone(),
        corpus: corpus.summary(),
        train_images: sp.train.len(),
        test_images: sp.test.len(),
        rows,
        failures,
        timings: Timings {
            train_s,
            evaluate_s: t1.elapsed().as_secs_f64(),
            total_s: t0.elapsed().as_secs_f64(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_pads_and_crops_from_the_anchor() {
        let img = GrayImage::from_fn(3, 2, |x, y| (x + 3 * y) as f64 / 5.0).unwrap();
        let wide = fit_to(&img, 5, 2, false);
        assert_eq!(wide.row(0), &[0.0, 0.2, 0.4, 0.4, 0.4]);
        let wide_r = fit_to(&img, 5, 2, true);
        assert_eq!(wide_r.row(1), &[0.6, 0.6, 0.6, 0.8, 1.0]);
        let narrow_r = fit_to(&img, 2, 2, true);
        assert_eq!(narrow_r.row(0), &[0.2, 0.4]);
        assert_eq!(fit_to(&img, 3, 2, true), img);
    }

    #[test]
    fn csv_layout() {
        let report = SweepReport {
            config: ExperimentConfig::default(),
            corpus: CorpusSummary {
                root: "r".into(),
                persons: 1,
                images: 2,
                width: 1,
                height: 1,
            },
            train_images: 1,
            test_images: 1,
            rows: vec![SweepRow {
                k: 1,
                metric: Metric::CityBlock,
                correct: 1,
                total: 4,
                rate: 0.25,
                mean_mse: None,
                mean_cr: Some(0.5),
            }],
            failures: vec![],
            timings: Timings::default(),
        };
        assert_eq!(
            report.to_csv(),
            "k,metric,correct,total,rate,mean_mse,mean_cr\n1,city_block,1,4,0.25,,0.5\n"
        );
        let back: SweepReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back, report);
    }
}
