use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use halfface::axis::{load_cascade, AxisSource, DetectParams};
use halfface::eigen::{self, Metric};
use halfface::harness::{self, ExperimentConfig};
use halfface::image::{load_image, save_image, GrayImage};
use halfface::stitch::StitchParams;
use halfface::{quality, Error, Result};

#[derive(Parser)]
#[command(
    name = "halfface",
    version,
    about = "Complete half-visible faces and recognize them with Eigenfaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summarize a person-per-directory image tree
    Ingest {
        dir: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Train an eigenface model on a whole corpus
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        no_normalize: bool,
    },
    /// Identify one face
    Recognize {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "sed")]
        metric: Metric,
        /// Classify the input as is, without completing it first
        #[arg(long)]
        no_stitch: bool,
        #[arg(long)]
        no_normalize: bool,
        /// Replace the model's known/unknown cut-off for the chosen metric
        #[arg(long)]
        threshold: Option<f64>,
        #[command(flatten)]
        axis: AxisArgs,
        #[arg(long)]
        json: bool,
    },
    /// Run a recognition sweep and write sweep.csv and sweep.json
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Complete a face from its visible half
    Stitch {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        axis: AxisArgs,
        #[arg(long)]
        radius: Option<usize>,
        #[arg(long)]
        band: Option<usize>,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        output: PathBuf,
        /// Write a JSON report here
        #[arg(long)]
        report: Option<PathBuf>,
        /// Full face to score the result against
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Compare a completed face with the original
    Quality {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        stitched: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct AxisArgs {
    /// Haar cascade XML used to find the nose
    #[arg(long, conflicts_with = "axis")]
    cascade: Option<PathBuf>,
    /// Axis column, as a continuous x coordinate
    #[arg(long)]
    axis: Option<f64>,
}

impl AxisArgs {
    fn source(&self) -> Result<AxisSource> {
        Ok(match (self.axis, &self.cascade) {
            (Some(c), _) => AxisSource::Manual(c),
            (None, Some(path)) => AxisSource::Cascade(load_cascade(path)?, DetectParams::default()),
            (None, None) => AxisSource::MirrorSearch,
        })
    }
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize")
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { dir, json } => {
            let corpus = harness::ingest(&dir)?;
            let summary = corpus.summary();
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&summary).expect("summary serializes")
                );
            } else {
                println!(
                    "{} images of {} persons, {}x{}",
                    summary.images, summary.persons, summary.width, summary.height
                );
            }
        }
        Command::Train {
            corpus,
            k,
            out,
            no_normalize,
        } => {
            let corpus = harness::ingest(&corpus)?;
            let mut images = Vec::with_capacity(corpus.len());
            for i in 0..corpus.len() {
                let img = corpus.load(i)?;
                images.push(if no_normalize {
                    img
                } else {
                    img.photometric_normalize()
                });
            }
            let labels: Vec<String> = corpus.entries().iter().map(|e| e.person.clone()).collect();
            let model = eigen::train(&images, &labels, k)?;
            eigen::save_model(&model, &out)?;
            let t = model.thresholds();
            println!(
                "trained k={} on {} images; thresholds sed={} cityblock={}",
                model.k(),
                images.len(),
                t.squared_euclidean,
                t.city_block
            );
        }
        Command::Recognize {
            model,
            input,
            metric,
            no_stitch,
            no_normalize,
            threshold,
            axis,
            json,
        } => {
            let mut model = eigen::load_model(&model)?;
            if let Some(t) = threshold {
                model.set_threshold(metric, t)?;
            }
            let img = load_image(&input)?;
            let (w, h) = model.dims();
            let prepared = if no_stitch {
                img
            } else {
                let out =
                    halfface::axis::complete_face(&img, &axis.source()?, &StitchParams::default())?;
                let right = out.source == halfface::stitch::SourceSide::Right;
                harness::fit_to(&out.image, w, h, right)
            };
            let prepared = if no_normalize {
                prepared
            } else {
                prepared.photometric_normalize()
            };
            let r = model.classify(&prepared, metric)?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&r).expect("result serializes")
                );
            } else {
                println!(
                    "label={} nearest={} distance={} runner_up={} metric={}",
                    r.label, r.nearest_label, r.distance, r.runner_up_distance, r.metric
                );
            }
        }
        Command::Evaluate {
            corpus,
            config,
            out,
        } => {
            let cfg = match config {
                Some(p) => ExperimentConfig::load(p)?,
                None => ExperimentConfig::default(),
            };
            let corpus = harness::ingest(&corpus)?;
            let report = harness::run_sweep(&corpus, &cfg)?;
            report.write(&out)?;
            print!("{}", report.to_csv());
            if !report.failures.is_empty() {
                eprintln!("{} probe(s) could not be completed", report.failures.len());
            }
        }
        Command::Stitch {
            input,
            axis,
            radius,
            band,
            levels,
            output,
            report,
            reference,
        } => {
            let mut p = StitchParams::default();
            p.search_radius = radius.unwrap_or(p.search_radius);
            p.band_width = band.unwrap_or(p.band_width);
            p.blend_levels = levels.unwrap_or(p.blend_levels);
            let img = load_image(&input)?;
            let out = halfface::axis::complete_face(&img, &axis.source()?, &p)?;
            save_image(&out.image, &output)?;
            let mut doc = json!({
                "axis_column": out.axis.column,
                "axis_method": out.axis.method,
                "axis_confidence": out.axis.confidence,
                "source": out.source,
                "offset": { "i": out.offset.i, "j": out.offset.j },
                "peak_ncc": out.peak_ncc,
                "width": out.image.width(),
                "height": out.image.height(),
            });
            if let Some(r) = reference {
                let q = quality::assess(&load_image(&r)?, &out.image)?;
                doc["mse"] = json!(q.mse);
                doc["cr"] = json!(q.cr);
            }
            match report {
                Some(path) => {
                    std::fs::write(&path, pretty(&doc) + "\n").map_err(|e| Error::io(&path, e))?
                }
                None => println!("{}", pretty(&doc)),
            }
        }
        Command::Quality {
            original,
            stitched,
            json,
        } => {
            let a: GrayImage = load_image(&original)?;
            let b = load_image(&stitched)?;
            let q = quality::assess(&a, &b)?;
            if json {
                println!("{}", pretty(&json!({ "mse": q.mse, "cr": q.cr })));
            } else {
                println!("MSE={} CR={}", q.mse, q.cr);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let pool = match harness::thread_pool() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match pool.install(|| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
