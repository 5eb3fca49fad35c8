//! Run a complete recognition sweep on a generated corpus.
//!
//! ```text
//! cargo run --release --example synthetic_sweep -- [out_dir]
//! ```
//! Twelve people with six photos each are written to a temporary
//! directory. The photos carry independent noise on each side, so a
//! completed half-face is never an exact copy of the original. Probes lose
//! their right half and are completed before matching. The CSV goes to stdout; with an output directory the CSV and
//! the JSON report are kept there.

use halfface::harness::{ingest, run_sweep, ExperimentConfig, SplitSpec};
use halfface::image::save_image;
use halfface::synth;

fn main() -> halfface::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| halfface::Error::io(std::env::temp_dir(), e))?;
    for person in 0..12u64 {
        let pd = dir.path().join(format!("p{person:02}"));
        std::fs::create_dir_all(&pd).map_err(|e| halfface::Error::io(&pd, e))?;
        for sample in 0..6 {
            let img = synth::face_sample(64, 72, 2024 + person, sample, 0.05, false);
            save_image(&img, pd.join(format!("{sample}.pgm")))?;
        }
    }
    let corpus = ingest(dir.path())?;
    let s = corpus.summary();
    eprintln!(
        "{} images of {} people, {}x{}",
        s.images, s.persons, s.width, s.height
    );

    let cfg = ExperimentConfig {
        k_values: vec![5, 10, 20, 40],
        split: SplitSpec::Fraction(0.7),
        ..ExperimentConfig::default()
    };
    let report = run_sweep(&corpus, &cfg)?;
    print!("{}", report.to_csv());
    eprintln!(
        "train {:.2}s, evaluate {:.2}s, {} probe failures",
        report.timings.train_s,
        report.timings.evaluate_s,
        report.failures.len()
    );
    if let Some(out) = std::env::args_os().nth(1) {
        report.write(&out)?;
    }
    Ok(())
}
