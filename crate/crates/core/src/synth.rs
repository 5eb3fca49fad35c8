//! Deterministic synthetic faces for demos and tests.
//!
//! Faces are drawn from a handful of smooth features (head oval, eyes,
//! brows, nose, mouth) plus a low-frequency texture, all functions of the
//! distance to the vertical centre line, so an unperturbed face is exactly
//! mirror-symmetric about `x = width / 2`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{save_image, GrayImage};

/// Shape parameters of one synthetic identity.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceParams {
    pub skin: f64,
    pub background: f64,
    pub head_rx: f64,
    pub head_ry: f64,
    pub eye_dx: f64,
    pub eye_y: f64,
    pub eye_r: f64,
    pub brow_gap: f64,
    pub nose_len: f64,
    pub mouth_y: f64,
    pub mouth_w: f64,
    /// Texture amplitudes for a small cosine basis in `(|dx|, y)`.
    pub texture: [f64; 6],
}

impl FaceParams {
    pub fn random(rng: &mut impl Rng) -> Self {
        let mut u = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
        Self {
            skin: u(0.55, 0.8),
            background: u(0.1, 0.3),
            head_rx: u(0.36, 0.46),
            head_ry: u(0.40, 0.47),
            eye_dx: u(0.14, 0.22),
            eye_y: u(0.36, 0.44),
            eye_r: u(0.035, 0.06),
            brow_gap: u(0.05, 0.08),
            nose_len: u(0.10, 0.18),
            mouth_y: u(0.68, 0.76),
            mouth_w: u(0.10, 0.18),
            texture: [
                u(-0.05, 0.05),
                u(-0.05, 0.05),
                u(-0.05, 0.05),
                u(-0.05, 0.05),
                u(-0.05, 0.05),
                u(-0.05, 0.05),
            ],
        }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::random(&mut ChaCha8Rng::seed_from_u64(seed))
    }
}

fn bump(d2: f64, r: f64) -> f64 {
    (-d2 / (2.0 * r * r)).exp()
}

/// Renders `p` at `width x height`. Coordinates are normalized by height so
/// features keep their proportions at any aspect ratio.
pub fn render_face(width: usize, height: usize, p: &FaceParams) -> GrayImage {
    let h = height as f64;
    let cx = width as f64 / 2.0;
    GrayImage::from_fn(width, height, |x, y| {
        let dx = (x as f64 + 0.5 - cx).abs() / h;
        let yy = (y as f64 + 0.5) / h;
        let head = (dx / p.head_rx).powi(2) + ((yy - 0.5) / p.head_ry).powi(2);
        let inside = 1.0 / (1.0 + ((head - 1.0) * 25.0).exp());
        let mut v = p.background + (p.skin - p.background) * inside;
        let eye = bump((dx - p.eye_dx).powi(2) + (yy - p.eye_y).powi(2), p.eye_r);
        let brow = bump(
            (dx - p.eye_dx).powi(2) * 0.15 + (yy - p.eye_y + p.brow_gap).powi(2),
            0.012,
        );
        let nose_t = ((yy - p.eye_y) / p.nose_len).clamp(0.0, 1.0);
        let nose = bump(dx * dx, 0.01 + 0.02 * nose_t)
            * if yy > p.eye_y && yy < p.eye_y + p.nose_len {
                1.0
            } else {
                0.0
            };
        let mouth = bump(
            (dx / p.mouth_w).powi(2) * 0.02 + (yy - p.mouth_y).powi(2),
            0.012,
        ) * if dx < p.mouth_w { 1.0 } else { 0.3 };
        v -= inside * (0.45 * eye + 0.3 * brow + 0.3 * mouth);
        v += inside * 0.12 * nose;
        let t = &p.texture;
        let pi = std::f64::consts::PI;
        v += inside
            * (t[0] * (pi * dx * 3.0).cos()
                + t[1] * (pi * yy * 4.0).cos()
                + t[2] * (pi * dx * 5.0).cos() * (pi * yy * 3.0).cos()
                + t[3] * (pi * yy * 7.0).sin()
                + t[4] * (pi * dx * 8.0).cos() * (pi * yy * 6.0).sin()
                + t[5] * (pi * dx * 11.0).cos());
        v.clamp(0.0, 1.0)
    })
    .expect("rendered samples are clamped")
}

/// A mirror-symmetric face for identity `seed`.
pub fn symmetric_face(width: usize, height: usize, seed: u64) -> GrayImage {
    render_face(width, height, &FaceParams::from_seed(seed))
}

/// One photograph of identity `person`: the identity's face under a random
/// gain and offset, with pixel noise of standard deviation `noise`. The noise
/// is mirrored when `symmetric_noise` is set, so the sample stays symmetric.
pub fn face_sample(
    width: usize,
    height: usize,
    person: u64,
    sample: u64,
    noise: f64,
    symmetric_noise: bool,
) -> GrayImage {
    let base = symmetric_face(width, height, person);
    let mut rng = ChaCha8Rng::seed_from_u64(person.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ sample);
    let gain: f64 = 0.9 + 0.2 * rng.random::<f64>();
    let offset: f64 = -0.04 + 0.08 * rng.random::<f64>();
    let sd = noise * 3f64.sqrt();
    let field: Vec<f64> = (0..width * height)
        .map(|_| sd * (2.0 * rng.random::<f64>() - 1.0))
        .collect();
    GrayImage::from_fn(width, height, |x, y| {
        let nx = if symmetric_noise && x >= width / 2 {
            width - 1 - x
        } else {
            x
        };
        (base.get(x, y) * gain + offset + field[y * width + nx]).clamp(0.0, 1.0)
    })
    .expect("samples are clamped")
}

/// Writes `persons x per_person` PGM faces as `dir/pNN/NN.pgm`.
pub fn write_corpus(
    dir: impl AsRef<Path>,
    persons: usize,
    per_person: usize,
    (width, height): (usize, usize),
    seed: u64,
) -> Result<()> {
    let dir = dir.as_ref();
    for p in 0..persons {
        let pd = dir.join(format!("p{p:03}"));
        std::fs::create_dir_all(&pd).map_err(|e| Error::io(&pd, e))?;
        for s in 0..per_person {
            let img = face_sample(
                width,
                height,
                seed.wrapping_add(p as u64),
                s as u64,
                0.02,
                true,
            );
            save_image(&img, pd.join(format!("{s:02}.pgm")))?;
        }
    }
    Ok(())
}
