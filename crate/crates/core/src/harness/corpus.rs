use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{load_image, GrayImage};

/// File extensions picked up by [`ingest`], compared case-insensitively.
pub const IMAGE_EXTENSIONS: [&str; 3] = ["pgm", "pnm", "png"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub person: String,
    pub path: PathBuf,
}

/// A labelled face collection with one shared geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    root: PathBuf,
    entries: Vec<CorpusEntry>,
    width: usize,
    height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub root: String,
    pub persons: usize,
    pub images: usize,
    pub width: usize,
    pub height: usize,
}

impl Corpus {
    /// Builds a corpus from explicit entries, loading each image to check
    /// that all share the first one's geometry.
    pub fn from_entries(root: impl Into<PathBuf>, entries: Vec<CorpusEntry>) -> Result<Self> {
        let root = root.into();
        let first = entries
            .first()
            .ok_or_else(|| Error::EmptyCorpus(root.clone()))?;
        let (width, height) = load_image(&first.path)?.dims();
        entries.par_iter().try_for_each(|e| {
            let dims = load_image(&e.path)?.dims();
            if dims != (width, height) {
                log::error!(
                    "{} is {}x{}, expected {width}x{height}",
                    e.path.display(),
                    dims.0,
                    dims.1
                );
                return Err(Error::GeometryMismatch {
                    expected: (width, height),
                    actual: dims,
                });
            }
            Ok(())
        })?;
        Ok(Self {
            root,
            entries,
            width,
            height,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[CorpusEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn geometry(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Distinct person ids in enumeration order.
    pub fn persons(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for e in &self.entries {
            if out.last() != Some(&e.person.as_str()) {
                out.push(&e.person);
            }
        }
        out.dedup();
        out
    }

    pub fn load(&self, index: usize) -> Result<GrayImage> {
        let e = &self.entries[index];
        let img = load_image(&e.path)?;
        if img.dims() != self.geometry() {
            return Err(Error::GeometryMismatch {
                expected: self.geometry(),
                actual: img.dims(),
            });
        }
        Ok(img)
    }

    pub fn summary(&self) -> CorpusSummary {
        CorpusSummary {
            root: self.root.display().to_string(),
            persons: self.persons().len(),
            images: self.len(),
            width: self.width,
            height: self.height,
        }
    }
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.iter().any(|x| x.eq_ignore_ascii_case(e)))
        .unwrap_or(false)
}

fn sorted_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if entry.file_name().to_string_lossy().starts_with('.') {
            continue;
        }
        out.push(entry.path());
    }
    out.sort();
    Ok(out)
}

/// Reads a `root/<person>/<image>` tree.
///
/// Persons and files are enumerated in lexicographic order; hidden entries,
/// loose files in `root` and files without an image extension are ignored,
/// and person directories without images are skipped.
pub fn ingest(root: impl AsRef<Path>) -> Result<Corpus> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(Error::NotFound(root.to_path_buf()));
    }
    let mut entries = Vec::new();
    for dir in sorted_dir(root)? {
        if !dir.is_dir() {
            continue;
        }
        let person = dir
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        let before = entries.len();
        for file in sorted_dir(&dir)? {
            if file.is_file() && is_image(&file) {
                entries.push(CorpusEntry {
                    person: person.clone(),
                    path: file,
                });
            }
        }
        if entries.len() == before {
            log::warn!("{} holds no images; skipped", dir.display());
        }
    }
    Corpus::from_entries(root, entries)
}

/// How each person's images are divided between gallery and probes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitSpec {
    /// Share of each person's images used for training, rounded to nearest
    /// and kept within `[1, n - 1]`.
    Fraction(f64),
    /// Exact number of training images per person.
    Count(usize),
    /// Every image is both trained on and tested.
    Resubstitution,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SplitSpec::Fraction(f) if !(f > 0.0 && f < 1.0) => Err(Error::Config(format!(
                "split fraction must lie in (0, 1), got {f}"
            ))),
            SplitSpec::Count(0) => Err(Error::Config("split count must be at least 1".into())),
            _ => Ok(()),
        }
    }

    fn train_count(&self, person: &str, n: usize) -> Result<usize> {
        let infeasible = |need: usize| {
            Err(Error::InfeasibleSplit(format!(
                "{person} has {n} image(s), the split needs at least {need}"
            )))
        };
        match *self {
            SplitSpec::Fraction(f) => {
                if n < 2 {
                    return infeasible(2);
                }
                Ok(((f * n as f64).round() as usize).clamp(1, n - 1))
            }
            SplitSpec::Count(c) => {
                if n < c + 1 {
                    return infeasible(c + 1);
                }
                Ok(c)
            }
            SplitSpec::Resubstitution => Ok(n),
        }
    }
}

/// Indices into [`Corpus::entries`], each list in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per-person shuffle and cut. One generator seeded with `seed` is drawn
/// from person by person in enumeration order, so the result depends only on
/// the corpus listing, the spec and the seed.
pub fn split(corpus: &Corpus, spec: &SplitSpec, seed: u64) -> Result<Split> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut start = 0;
    let entries = corpus.entries();
    while start < entries.len() {
        let person = &entries[start].person;
        let end = start
            + entries[start..]
                .iter()
                .take_while(|e| &e.person == person)
                .count();
        let mut idx: Vec<usize> = (start..end).collect();
        let n_train = spec.train_count(person, idx.len())?;
        if matches!(spec, SplitSpec::Resubstitution) {
            train.extend(&idx);
            test.extend(&idx);
        } else {
            idx.shuffle(&mut rng);
            train.extend(&idx[..n_train]);
            test.extend(&idx[n_train..]);
        }
        start = end;
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}
