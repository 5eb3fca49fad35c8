//! Hide the right half of a synthetic face and grow it back from the left.
//!
//! ```text
//! cargo run --example stitch_half_face -- [out_dir]
//! ```
//! With an output directory the original, masked and completed faces are
//! written there as PGM.

use halfface::axis::SymmetryAxis;
use halfface::harness::{occlude, Occlusion};
use halfface::image::save_image;
use halfface::stitch::{stitch_face, StitchParams};
use halfface::{quality, synth};

fn main() -> halfface::Result<()> {
    let face = synth::symmetric_face(180, 200, 7);
    let masked = occlude(&face, Occlusion::MaskRightHalf);

    let axis = SymmetryAxis::manual(90.0);
    let out = stitch_face(&masked, &axis, &StitchParams::default())?;
    let q = quality::assess(&face, &out.image)?;
    println!(
        "offset ({}, {}), peak NCC {:.4}, source {:?}",
        out.offset.i, out.offset.j, out.peak_ncc, out.source
    );
    println!("MSE {:.4} (8-bit units), CR {:.5}", q.mse, q.cr);

    if let Some(dir) = std::env::args_os().nth(1) {
        let dir = std::path::PathBuf::from(dir);
        std::fs::create_dir_all(&dir).map_err(|e| halfface::Error::io(&dir, e))?;
        save_image(&face, dir.join("original.pgm"))?;
        save_image(&masked, dir.join("masked.pgm"))?;
        save_image(&out.image, dir.join("completed.pgm"))?;
        println!("wrote images to {}", dir.display());
    }
    Ok(())
}
