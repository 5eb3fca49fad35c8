//! Half-face completion and Eigenfaces recognition.
//!
//! A frontal face photographed with one side hidden is completed by finding
//! its vertical symmetry axis, mirroring the visible half, registering the two
//! halves with normalized cross-correlation and blending the seam over a
//! Laplacian pyramid. Completed faces are recognized against an Eigenfaces
//! model with squared-Euclidean or city-block nearest-neighbour matching.
//!
//! ```
//! use halfface::{image::GrayImage, axis::SymmetryAxis, stitch::{stitch_face, StitchParams}};
//!
//! let face = GrayImage::from_fn(40, 30, |x, y| {
//!     let m = if x < 20 { x } else { 39 - x };
//!     ((m * 5 + y * 3) % 17) as f64 / 16.0
//! })?;
//! let out = stitch_face(&face, &SymmetryAxis::manual(20.0), &StitchParams::default())?;
//! assert_eq!(out.image.dims(), (40, 30));
//! # Ok::<(), halfface::Error>(())
//! ```

pub mod axis;
pub mod eigen;
pub mod error;
pub mod harness;
pub mod image;
pub mod quality;
pub mod stitch;
pub mod synth;

pub use error::{Error, Result};
