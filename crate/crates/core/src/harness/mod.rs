//! Experiment plumbing: corpus ingestion, gallery/probe splits, synthetic
//! half-face occlusion and the eigenface-count sweep.

mod corpus;
mod sweep;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eigen::Metric;
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::stitch::StitchParams;

pub use corpus::{
    ingest, split, Corpus, CorpusEntry, CorpusSummary, Split, SplitSpec, IMAGE_EXTENSIONS,
};
pub use sweep::{fit_to, run_sweep, ProbeFailure, SweepReport, SweepRow, Timings, CSV_HEADER};

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "HALFFACE_THREADS";

/// Which half of a probe is hidden.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Occlusion {
    None,
    MaskRightHalf,
    MaskLeftHalf,
}

/// Blanks one half: `MaskRightHalf` zeroes columns `>= width / 2` (rounded
/// down), `MaskLeftHalf` zeroes the columns below it.
pub fn occlude(img: &GrayImage, mode: Occlusion) -> GrayImage {
    let half = img.width() / 2;
    match mode {
        Occlusion::None => img.clone(),
        Occlusion::MaskRightHalf => GrayImage::from_fn(img.width(), img.height(), |x, y| {
            if x >= half {
                0.0
            } else {
                img.get(x, y)
            }
        })
        .expect("same geometry"),
        Occlusion::MaskLeftHalf => GrayImage::from_fn(img.width(), img.height(), |x, y| {
            if x < half {
                0.0
            } else {
                img.get(x, y)
            }
        })
        .expect("same geometry"),
    }
}

/// Where the stitcher takes its axis from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisChoice {
    /// The mask boundary for masked probes, the mirror search otherwise.
    Auto,
    MirrorSearch,
    /// Always `width / 2`.
    MaskBoundary,
}

/// What the gallery is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GallerySource {
    /// Unoccluded training images.
    Original,
    /// Training images sent through the same occlusion and stitching as the probes.
    Stitched,
}

/// One sweep, as read from a TOML file. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k_values: Vec<usize>,
    pub metrics: Vec<Metric>,
    pub split: SplitSpec,
    pub occlusion: Occlusion,
    pub stitch_enabled: bool,
    pub seed: u64,
    /// Z-score then min-max each image before projection.
    pub normalize: bool,
    pub gallery: GallerySource,
    pub axis: AxisChoice,
    pub stitch: StitchParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k_values: vec![100, 150, 200, 250, 300],
            metrics: Metric::ALL.to_vec(),
            split: SplitSpec::Fraction(0.8),
            occlusion: Occlusion::MaskRightHalf,
            stitch_enabled: true,
            seed: 42,
            normalize: true,
            gallery: GallerySource::Original,
            axis: AxisChoice::Auto,
            stitch: StitchParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return Err(Error::Config(
                "k_values must be non-empty and all >= 1".into(),
            ));
        }
        let mut ks = self.k_values.clone();
        ks.sort_unstable();
        ks.dedup();
        if ks.len() != self.k_values.len() {
            return Err(Error::Config("k_values contains duplicates".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::Config("metrics must not be empty".into()));
        }
        if self.metrics.len() == 2 && self.metrics[0] == self.metrics[1] {
            return Err(Error::Config("metrics contains duplicates".into()));
        }
        self.split.validate()?;
        self.stitch
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }
}

/// Worker count requested through `HALFFACE_THREADS`, if set and positive.
pub fn configured_threads() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// A rayon pool sized by `HALFFACE_THREADS` (rayon's default otherwise).
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = configured_threads() {
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))
}
