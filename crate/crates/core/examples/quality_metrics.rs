//! How the two completion scores react to common distortions.
//!
//! MSE is in 8-bit grey levels squared; CR is the correlation coefficient,
//! blind to brightness and contrast changes but not to structure.

use halfface::image::GrayImage;
use halfface::{quality, synth};

fn main() -> halfface::Result<()> {
    let face = synth::symmetric_face(90, 100, 3);
    let (w, h) = face.dims();
    let map = |f: &dyn Fn(usize, usize, f64) -> f64| {
        GrayImage::from_clamped(
            w,
            h,
            (0..w * h)
                .map(|i| f(i % w, i / w, face.data()[i]))
                .collect(),
        )
    };

    let cases = [
        ("identical", face.clone()),
        ("contrast reduced", map(&|_, _, v| v * 0.9 + 0.1)?),
        ("one grey level off", map(&|_, _, v| v + 1.0 / 255.0)?),
        (
            "shifted 2px right",
            map(&|x, y, _| face.get(x.saturating_sub(2), y))?,
        ),
        ("mirrored", face.hflip()),
        (
            "left half blanked",
            map(&|x, _, v| if x < w / 2 { 0.0 } else { v })?,
        ),
    ];
    println!("{:<20} {:>12} {:>10}", "distortion", "MSE", "CR");
    for (name, img) in &cases {
        let q = quality::assess(&face, img)?;
        println!("{name:<20} {:>12.4} {:>10.6}", q.mse, q.cr);
    }
    Ok(())
}
