//! Find the symmetry axis of a face that is not centred in its frame.

use halfface::axis::{default_search_range, mirror_search_axis};
use halfface::image::{GrayImage, Rect};
use halfface::synth;

fn main() -> halfface::Result<()> {
    let wide = synth::symmetric_face(220, 200, 11);
    // Crop so the true axis (column 110 of the wide render) lands at 96.
    let face = wide.crop(Rect::new(14, 0, 180, 200))?;
    let (lo, hi) = default_search_range(face.width());
    let axis = mirror_search_axis(&face, lo, hi)?;
    println!("searched columns {lo}..={hi}");
    println!(
        "axis at {} (expected 96), score {:.4}",
        axis.column, axis.confidence
    );

    // A featureless frame has no axis to find, and the search says so.
    let flat = GrayImage::filled(60, 40, 0.5)?;
    let (lo, hi) = default_search_range(flat.width());
    match mirror_search_axis(&flat, lo, hi) {
        Ok(a) => println!("flat image: axis {}", a.column),
        Err(e) => println!("flat image: {e}"),
    }
    Ok(())
}
