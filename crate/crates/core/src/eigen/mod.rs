//! Eigenfaces: PCA over a face corpus and nearest-neighbour recognition in
//! the eigenface subspace.
//!
//! Training uses the snapshot method. With `N` centred faces of `d` pixels
//! stacked as columns of `A`, the covariance `A Aᵀ / N` is `d x d`, far too
//! large for face-sized `d`. Its non-zero spectrum is shared with the `N x N`
//! Gram matrix `Aᵀ A / N`; an eigenvector `v` of the latter maps to the
//! eigenface `A v / ||A v||`.

mod io;
pub mod jacobi;

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;

pub use io::{
    decode_model, encode_model, load_model, read_model, save_model, write_model, MODEL_MAGIC,
    MODEL_VERSION,
};
use jacobi::{jacobi_eigen, SymMatrix};

/// Orthonormality tolerance checked on every model.
pub const ORTHONORMAL_TOL: f64 = 1e-6;
/// Eigenvalues above this (negative) floor are clamped to zero.
pub const NEGATIVE_EIGEN_FLOOR: f64 = -1e-9;
/// Label reported for rejected probes.
pub const UNKNOWN_LABEL: &str = "unknown";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    SquaredEuclidean,
    CityBlock,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::SquaredEuclidean, Metric::CityBlock];

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::SquaredEuclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
            Metric::CityBlock => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::SquaredEuclidean => "squared_euclidean",
            Metric::CityBlock => "city_block",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared_euclidean" | "sed" | "euclidean" => Ok(Metric::SquaredEuclidean),
            "city_block" | "cityblock" | "manhattan" => Ok(Metric::CityBlock),
            other => Err(Error::InvalidParameter(format!("unknown metric {other:?}"))),
        }
    }
}

/// Known/unknown cut-offs, one per metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub squared_euclidean: f64,
    pub city_block: f64,
}

impl Thresholds {
    pub const UNBOUNDED: Thresholds = Thresholds {
        squared_euclidean: f64::INFINITY,
        city_block: f64::INFINITY,
    };

    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::SquaredEuclidean => self.squared_euclidean,
            Metric::CityBlock => self.city_block,
        }
    }

    pub fn set(&mut self, m: Metric, v: f64) {
        match m {
            Metric::SquaredEuclidean => self.squared_euclidean = v,
            Metric::CityBlock => self.city_block = v,
        }
    }
}

/// A trained eigenface model.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenModel {
    pub(crate) width: usize,
    pub(crate) height: usize,
    pub(crate) mean: Vec<f64>,
    pub(crate) basis: Vec<Vec<f64>>,
    pub(crate) eigenvalues: Vec<f64>,
    pub(crate) gallery: Vec<Vec<f64>>,
    pub(crate) labels: Vec<String>,
    pub(crate) thresholds: Thresholds,
}

/// Outcome of classifying one probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognitionResult {
    /// Nearest gallery label, or `"unknown"` when the distance exceeds the
    /// model threshold.
    pub label: String,
    pub nearest_label: String,
    pub gallery_index: usize,
    pub distance: f64,
    pub metric: Metric,
    /// Distance to the second-closest gallery entry (`inf` for a one-entry gallery).
    pub runner_up_distance: f64,
}

impl RecognitionResult {
    pub fn is_known(&self) -> bool {
        self.label != UNKNOWN_LABEL
    }
}

fn check_geometry(images: &[GrayImage]) -> Result<(usize, usize)> {
    let dims = images[0].dims();
    for img in images {
        if img.dims() != dims {
            return Err(Error::GeometryMismatch {
                expected: dims,
                actual: img.dims(),
            });
        }
    }
    Ok(dims)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Trains an eigenface model on `images` with one label per image, keeping
/// the `k` leading eigenfaces.
///
/// Eigenvalues are variances (the Gram matrix is scaled by `1 / N`). Directions
/// with (numerically) zero variance are completed with an orthonormal basis
/// of the complement, so every model carries exactly `k` orthonormal vectors.
/// Each eigenface is signed so that its largest-magnitude entry is positive.
pub fn train(images: &[GrayImage], labels: &[String], k: usize) -> Result<EigenModel> {
    if images.is_empty() {
        return Err(Error::InvalidParameter(
            "training needs at least 2 images, got 0".into(),
        ));
    }
    let (width, height) = check_geometry(images)?;
    let vectors: Vec<Vec<f64>> = images.iter().map(|i| i.data().to_vec()).collect();
    train_vectors(vectors, width, height, labels, k)
}

/// [`train`] over raw row-major vectors of a `width x height` geometry.
/// Values are not restricted to `[0, 1]`. The vectors are centred in place,
/// so no second copy of the corpus is made.
pub fn train_vectors(
    mut vectors: Vec<Vec<f64>>,
    width: usize,
    height: usize,
    labels: &[String],
    k: usize,
) -> Result<EigenModel> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "training needs at least 2 images, got {n}"
        )));
    }
    if labels.len() != n {
        return Err(Error::InvalidParameter(format!(
            "{n} images but {} labels",
            labels.len()
        )));
    }
    if k < 1 || k > n - 1 {
        return Err(Error::InvalidParameter(format!(
            "k must be in [1, {}], got {k}",
            n - 1
        )));
    }
    let d = width * height;
    if k > d {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds the pixel count {d}"
        )));
    }
    for v in &vectors {
        if v.len() != d {
            return Err(Error::InvalidParameter(format!(
                "vector of length {} does not match {width}x{height}",
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "training vector has non-finite entries".into(),
            ));
        }
    }

    let mut mean = vec![0.0; d];
    for img in &vectors {
        for (m, v) in mean.iter_mut().zip(img) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    vectors
        .par_iter_mut()
        .for_each(|img| img.iter_mut().zip(&mean).for_each(|(v, m)| *v -= m));
    let centered = vectors;

    let scale = 1.0 / n as f64;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            (a..n)
                .map(|b| dot(&centered[a], &centered[b]) * scale)
                .collect()
        })
        .collect();
    let mut gram = SymMatrix::zeros(n);
    for (a, row) in rows.iter().enumerate() {
        for (off, v) in row.iter().enumerate() {
            gram.set(a, a + off, *v);
        }
    }
    let eig = jacobi_eigen(&gram)?;
    log::debug!("jacobi converged in {} sweeps for N = {n}", eig.sweeps);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.values[b].total_cmp(&eig.values[a]));
    let top = order[0];
    let lambda_max = eig.values[top].max(0.0);
    let null_tol = lambda_max * 1e-12;

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut eigenvalues = Vec::with_capacity(k);
    let mut needs_completion = 0;
    for &idx in order.iter().take(k) {
        let lambda = eig.values[idx];
        let lambda = if lambda < NEGATIVE_EIGEN_FLOOR {
            log::warn!("clamping eigenvalue {lambda:e} to zero");
            0.0
        } else {
            lambda.max(0.0)
        };
        if lambda <= null_tol || lambda == 0.0 {
            needs_completion += 1;
            eigenvalues.push(lambda);
            continue;
        }
        let v = &eig.vectors[idx];
        let mut u: Vec<f64> = (0..d)
            .into_par_iter()
            .map(|p| (0..n).map(|s| v[s] * centered[s][p]).sum())
            .collect();
        let norm = dot(&u, &u).sqrt();
        u.iter_mut().for_each(|x| *x /= norm);
        normalize_sign(&mut u);
        basis.push(u);
        eigenvalues.push(lambda);
    }
    complete_basis(&mut basis, d, needs_completion);

    let mut model = EigenModel {
        width,
        height,
        mean,
        basis,
        eigenvalues,
        gallery: Vec::new(),
        labels: labels.to_vec(),
        thresholds: Thresholds::UNBOUNDED,
    };
    model.gallery = centered
        .par_iter()
        .map(|c| model.project_centered(c))
        .collect();
    model.thresholds = model.calibrate_thresholds();
    Ok(model)
}

/// Appends `count` unit vectors orthogonal to `basis`, drawn from the
/// standard basis by Gram-Schmidt.
fn complete_basis(basis: &mut Vec<Vec<f64>>, d: usize, count: usize) {
    let mut added = 0;
    let mut e = 0;
    while added < count && e < d {
        let mut v = vec![0.0; d];
        v[e] = 1.0;
        e += 1;
        for _ in 0..2 {
            for b in basis.iter() {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm < 1e-6 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        normalize_sign(&mut v);
        basis.push(v);
        added += 1;
    }
}

impl EigenModel {
    /// Assembles a model from raw parts and checks every invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        width: usize,
        height: usize,
        mean: Vec<f64>,
        basis: Vec<Vec<f64>>,
        eigenvalues: Vec<f64>,
        gallery: Vec<Vec<f64>>,
        labels: Vec<String>,
        thresholds: Thresholds,
    ) -> Result<Self> {
        let model = Self {
            width,
            height,
            mean,
            basis,
            eigenvalues,
            gallery,
            labels,
            thresholds,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvariantViolation(m));
        let d = self.width * self.height;
        if d == 0 {
            return bad("zero image geometry".into());
        }
        if self.mean.len() != d || self.mean.iter().any(|v| !v.is_finite()) {
            return bad(format!("mean must hold {d} finite values"));
        }
        let k = self.basis.len();
        if k == 0 {
            return bad("basis is empty".into());
        }
        if self.eigenvalues.len() != k {
            return bad(format!(
                "{} eigenvalues for {k} basis vectors",
                self.eigenvalues.len()
            ));
        }
        for (i, e) in self.eigenvalues.iter().enumerate() {
            if !e.is_finite() || *e < 0.0 {
                return bad(format!("eigenvalue {i} = {e} is negative or non-finite"));
            }
            if i > 0 && *e > self.eigenvalues[i - 1] {
                return bad(format!("eigenvalues not descending at index {i}"));
            }
        }
        for (i, b) in self.basis.iter().enumerate() {
            if b.len() != d || b.iter().any(|v| !v.is_finite()) {
                return bad(format!("basis vector {i} must hold {d} finite values"));
            }
        }
        let worst = self.orthonormality_error();
        if worst >= ORTHONORMAL_TOL {
            return bad(format!("basis deviates from orthonormal by {worst:e}"));
        }
        if self.gallery.len() != self.labels.len() {
            return bad(format!(
                "{} gallery vectors but {} labels",
                self.gallery.len(),
                self.labels.len()
            ));
        }
        for (i, g) in self.gallery.iter().enumerate() {
            if g.len() != k || g.iter().any(|v| !v.is_finite()) {
                return bad(format!("gallery vector {i} must hold {k} finite values"));
            }
        }
        for m in Metric::ALL {
            let t = self.thresholds.get(m);
            if t.is_nan() || t < 0.0 {
                return bad(format!("{m} threshold {t} must be non-negative"));
            }
        }
        Ok(())
    }

    /// `max |BᵀB - I|` over all entries.
    pub fn orthonormality_error(&self) -> f64 {
        let k = self.basis.len();
        let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a..k).map(move |b| (a, b))).collect();
        pairs
            .par_iter()
            .map(|&(a, b)| {
                let target = if a == b { 1.0 } else { 0.0 };
                (dot(&self.basis[a], &self.basis[b]) - target).abs()
            })
            .reduce(|| 0.0, f64::max)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn k(&self) -> usize {
        self.basis.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn gallery(&self) -> &[Vec<f64>] {
        &self.gallery
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn thresholds(&self) -> Thresholds {
        self.thresholds
    }

    pub fn set_threshold(&mut self, metric: Metric, value: f64) -> Result<()> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "threshold must be non-negative, got {value}"
            )));
        }
        self.thresholds.set(metric, value);
        Ok(())
    }

    /// Mean face as an image (values may leave `[0, 1]` only through rounding).
    pub fn mean_image(&self) -> Result<GrayImage> {
        GrayImage::from_clamped(self.width, self.height, self.mean.clone())
    }

    fn project_centered(&self, centered: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|b| dot(b, centered)).collect()
    }

    fn check_image(&self, img: &GrayImage) -> Result<()> {
        if img.dims() != self.dims() {
            return Err(Error::GeometryMismatch {
                expected: self.dims(),
                actual: img.dims(),
            });
        }
        Ok(())
    }

    /// Coefficients `Bᵀ(x - mean)`.
    pub fn project(&self, img: &GrayImage) -> Result<Vec<f64>> {
        self.check_image(img)?;
        self.project_vector(img.data())
    }

    /// [`EigenModel::project`] for a raw vector.
    pub fn project_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::InvalidParameter(format!(
                "expected a vector of length {}, got {}",
                self.mean.len(),
                x.len()
            )));
        }
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(v, m)| v - m).collect();
        Ok(self.project_centered(&centered))
    }

    /// `mean + B c` as a flat vector, unclamped.
    pub fn reconstruct_vector(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.k() {
            return Err(Error::InvalidParameter(format!(
                "expected {} coefficients, got {}",
                self.k(),
                coeffs.len()
            )));
        }
        let mut out = self.mean.clone();
        for (c, b) in coeffs.iter().zip(&self.basis) {
            out.iter_mut().zip(b).for_each(|(o, v)| *o += c * v);
        }
        Ok(out)
    }

    /// Reconstruction as an image. Samples outside `[0, 1]` are clamped only
    /// to satisfy the image type; use [`EigenModel::reconstruct_vector`] for
    /// the raw values.
    pub fn reconstruct(&self, coeffs: &[f64]) -> Result<GrayImage> {
        GrayImage::from_clamped(self.width, self.height, self.reconstruct_vector(coeffs)?)
    }

    /// Nearest gallery entry for a probe image.
    pub fn classify(&self, img: &GrayImage, metric: Metric) -> Result<RecognitionResult> {
        let coeffs = self.project(img)?;
        self.classify_coefficients(&coeffs, metric)
    }

    /// Nearest gallery entry for precomputed coefficients. Only the first
    /// `k` coefficients are used, so a projection onto a larger basis can be
    /// reused for a truncated model.
    pub fn classify_coefficients(
        &self,
        coeffs: &[f64],
        metric: Metric,
    ) -> Result<RecognitionResult> {
        if self.gallery.is_empty() {
            return Err(Error::EmptyGallery);
        }
        let k = self.k();
        if coeffs.len() < k {
            return Err(Error::InvalidParameter(format!(
                "expected at least {k} coefficients, got {}",
                coeffs.len()
            )));
        }
        let probe = &coeffs[..k];
        let mut best = (0usize, f64::INFINITY);
        let mut second = f64::INFINITY;
        for (i, g) in self.gallery.iter().enumerate() {
            let dist = metric.distance(probe, g);
            if dist < best.1 {
                second = best.1;
                best = (i, dist);
            } else if dist < second {
                second = dist;
            }
        }
        let nearest = self.labels[best.0].clone();
        let label = if best.1 > self.thresholds.get(metric) {
            UNKNOWN_LABEL.to_string()
        } else {
            nearest.clone()
        };
        Ok(RecognitionResult {
            label,
            nearest_label: nearest,
            gallery_index: best.0,
            distance: best.1,
            metric,
            runner_up_distance: second,
        })
    }

    /// Keeps the leading `k` eigenfaces; thresholds are recalibrated.
    pub fn truncate(&self, k: usize) -> Result<EigenModel> {
        if k < 1 || k > self.k() {
            return Err(Error::InvalidParameter(format!(
                "cannot truncate a {}-eigenface model to {k}",
                self.k()
            )));
        }
        let mut m = EigenModel {
            width: self.width,
            height: self.height,
            mean: self.mean.clone(),
            basis: self.basis[..k].to_vec(),
            eigenvalues: self.eigenvalues[..k].to_vec(),
            gallery: self.gallery.iter().map(|g| g[..k].to_vec()).collect(),
            labels: self.labels.clone(),
            thresholds: Thresholds::UNBOUNDED,
        };
        m.thresholds = m.calibrate_thresholds();
        Ok(m)
    }

    /// `mean + 2 * std` of each gallery entry's distance to its nearest
    /// same-label neighbour, per metric. Unbounded when any label has a
    /// single entry.
    pub fn calibrate_thresholds(&self) -> Thresholds {
        let mut by_label: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, l) in self.labels.iter().enumerate() {
            by_label.entry(l.as_str()).or_default().push(i);
        }
        if by_label.is_empty() || by_label.values().any(|v| v.len() < 2) {
            return Thresholds::UNBOUNDED;
        }
        let mut t = Thresholds::UNBOUNDED;
        for metric in Metric::ALL {
            let mut dists = Vec::with_capacity(self.labels.len());
            for members in by_label.values() {
                for &a in members {
                    let nearest = members
                        .iter()
                        .filter(|&&b| b != a)
                        .map(|&b| metric.distance(&self.gallery[a], &self.gallery[b]))
                        .fold(f64::INFINITY, f64::min);
                    dists.push(nearest);
                }
            }
            let n = dists.len() as f64;
            let mu = dists.iter().sum::<f64>() / n;
            let var = dists.iter().map(|d| (d - mu).powi(2)).sum::<f64>() / n;
            t.set(metric, mu + 2.0 * var.sqrt());
        }
        t
    }
}
