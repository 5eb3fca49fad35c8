//! Train an eigenface model, save it, reload it and identify new photos.

use halfface::eigen::{load_model, save_model, train, Metric};
use halfface::synth;

fn main() -> halfface::Result<()> {
    let (w, h) = (48, 56);
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for person in 0..6u64 {
        for sample in 0..4 {
            images
                .push(synth::face_sample(w, h, person, sample, 0.02, true).photometric_normalize());
            labels.push(format!("person{person}"));
        }
    }
    let model = train(&images, &labels, 12)?;
    println!(
        "k = {}, leading eigenvalues {:.4?}",
        model.k(),
        &model.eigenvalues()[..4]
    );

    let path = std::env::temp_dir().join("halfface-example.eigf");
    save_model(&model, &path)?;
    let model = load_model(&path)?;
    let _ = std::fs::remove_file(&path);

    // Unseen photos of known people, plus a stranger.
    for (person, sample) in [(0u64, 9u64), (3, 9), (5, 10), (40, 0)] {
        let probe = synth::face_sample(w, h, person, sample, 0.02, false).photometric_normalize();
        for metric in Metric::ALL {
            let r = model.classify(&probe, metric)?;
            println!(
                "person{person:<2} {metric:<17} -> {:<8} (nearest {}, distance {:.3}, runner-up {:.3})",
                r.label, r.nearest_label, r.distance, r.runner_up_distance
            );
        }
    }
    Ok(())
}
