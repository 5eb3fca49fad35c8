//! Locate a "nose" with a boosted Haar cascade and derive the axis from it.
//!
//! ```text
//! cargo run --example nose_cascade -- [cascade.xml image.pgm]
//! ```
//! Without arguments a one-stage centre-surround cascade is built in code
//! and run on a scene with a dark blob. The cascade is printed as XML so it
//! can be saved and fed back in.

use halfface::axis::cascade::{HaarFeature, Stage, WeakClassifier, WeightedRect};
use halfface::axis::{
    axis_from_nose, detect_nose, load_cascade, parse_cascade, CascadeModel, DetectParams,
};
use halfface::image::{load_image, GrayImage, Rect};

fn blob_cascade() -> halfface::Result<CascadeModel> {
    let rects = vec![
        WeightedRect {
            rect: Rect::new(0, 0, 12, 12),
            weight: 1.0,
        },
        WeightedRect {
            rect: Rect::new(4, 4, 4, 4),
            weight: -9.0,
        },
    ];
    let stump = WeakClassifier {
        feature: HaarFeature { rects },
        threshold: 1.8,
        left_val: -1.0,
        right_val: 1.0,
    };
    CascadeModel::new(
        (12, 12),
        vec![Stage {
            threshold: 0.5,
            classifiers: vec![stump],
        }],
    )
}

fn main() -> halfface::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (model, img) = if let [xml, image] = args.as_slice() {
        (load_cascade(xml)?, load_image(image)?)
    } else {
        let model = blob_cascade()?;
        let xml = model.to_xml();
        println!("{xml}");
        let scene = GrayImage::from_fn(90, 70, |x, y| {
            let dark = (50..56).contains(&x) && (30..36).contains(&y);
            if dark {
                0.15
            } else {
                0.8 + 0.01 * ((x * 7 + y * 3) % 5) as f64
            }
        })?;
        (parse_cascade(&xml)?, scene)
    };

    match detect_nose(&img, &model, &DetectParams::default())? {
        Some(bb) => {
            let axis = axis_from_nose(&bb);
            println!(
                "box {:?}, {} raw windows, axis column {}",
                bb.rect, bb.score, axis.column
            );
        }
        None => println!("nothing detected"),
    }
    Ok(())
}
