use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use rayon::prelude::*;

use cosfire_scene::cosfire::{configure_filter, load_bank, save_bank, BankContext, ConfigSpec, TupleWeighting};
use cosfire_scene::formats::{
    read_labels, read_manifest, read_prototypes, read_truth, save_labels, write_events, write_file, PrototypeEntry,
};
use cosfire_scene::gabor::{uniform_orientations, GaborBank};
use cosfire_scene::imaging::load_gray;
use cosfire_scene::inhibition::InhibitionParams;
use cosfire_scene::metrics::{evaluate_scene, summary_report};
use cosfire_scene::scene::{label_frame, FrameLabel, LabelOptions, SceneBank};
use cosfire_scene::synth::{write_corpus, CorpusSpec};
use cosfire_scene::timeline::{fill_holes, segment_events, SmoothingParams};
use cosfire_scene::GrayImage;

use crate::args::{BankArgs, ConfigureArgs, EvaluateArgs, GenCorpusArgs, LabelArgs, SegmentArgs, SmoothArgs};
use crate::{parse, usage};

fn bank_context(a: &BankArgs) -> Result<BankContext<f64>> {
    if a.orientations == 0 {
        return Err(usage("--orientations must be at least 1"));
    }
    let inhibition = (a.inhibition_alpha != 0.0).then_some(InhibitionParams {
        alpha: a.inhibition_alpha,
        surround_ratio: a.inhibition_ratio,
    });
    let context = BankContext {
        gabor: GaborBank {
            lambdas: parse::numbers(&a.lambdas, "--lambdas")?,
            thetas: uniform_orientations(a.orientations),
            gamma: a.gamma,
            sigma_over_lambda: a.sigma_over_lambda,
            t1: a.t1,
        },
        inhibition,
    };
    context.validate()?;
    Ok(context)
}

fn config_spec(a: &ConfigureArgs) -> Result<ConfigSpec<f64>> {
    let weighting = match a.weight_sigma.trim() {
        "uniform" => TupleWeighting::Uniform,
        s => TupleWeighting::Gaussian(
            s.parse::<f64>()
                .map_err(|_| usage(format!("--weight-sigma must be 'uniform' or a number, got '{s}'")))?,
        ),
    };
    let spec = ConfigSpec {
        radii: parse::numbers(&a.radii, "--radii")?,
        angular_step: parse::angle(&a.angular_step)?,
        context: bank_context(&a.bank)?,
        t2: a.t2,
        t3: a.t3,
        sigma0: a.sigma0,
        alpha_blur: a.alpha_blur,
        weighting,
    };
    spec.validate()?;
    Ok(spec)
}

fn prototype_entries(a: &ConfigureArgs) -> Result<Vec<PrototypeEntry>> {
    let n = a.images.len();
    if a.keypoints.len() != n || a.scenes.len() != n || a.names.len() != n {
        return Err(usage(format!(
            "--image, --keypoint, --scene and --name must be given the same number of times (got {}, {}, {}, {})",
            n,
            a.keypoints.len(),
            a.scenes.len(),
            a.names.len()
        )));
    }
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        entries.push(PrototypeEntry {
            image: a.images[i].clone(),
            keypoint: parse::keypoint(&a.keypoints[i])?,
            scene: a.scenes[i].clone(),
            name: a.names[i].clone(),
        });
    }
    if let Some(path) = &a.entries {
        entries.extend(read_prototypes(path)?);
    }
    Ok(entries)
}

pub fn configure(a: ConfigureArgs) -> Result<()> {
    if !(a.detection_threshold > 0.0 && a.detection_threshold <= 1.0) {
        return Err(usage(format!(
            "--detection-threshold {} outside (0, 1]",
            a.detection_threshold
        )));
    }
    let spec = config_spec(&a)?;
    let entries = prototype_entries(&a)?;
    if entries.is_empty() {
        bail!("no prototype entries given; refusing to write an empty filter bank");
    }

    let mut images: HashMap<&Path, GrayImage> = HashMap::new();
    for e in &entries {
        if !images.contains_key(e.image.as_path()) {
            let img = load_gray(&e.image, None).with_context(|| format!("prototype '{}'", e.name))?;
            images.insert(e.image.as_path(), img);
        }
    }
    let filters = entries
        .par_iter()
        .map(|e| {
            configure_filter(&images[e.image.as_path()], e.keypoint, &spec, &e.name, &e.scene)
                .with_context(|| format!("prototype '{}' ({})", e.name, e.image.display()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut bank = SceneBank::new(spec.context.gabor.clone(), spec.context.inhibition);
    for f in filters {
        println!(
            "{}\tscene={}\ttuples={}\tprototype_response={}",
            f.name,
            f.scene,
            f.tuples.len(),
            f.prototype_response
        );
        bank.add_filter(f, a.detection_threshold)?;
    }
    save_bank(&bank, &a.out)?;
    let counts: Vec<String> = bank
        .scenes
        .iter()
        .map(|s| format!("{}: {}", s.name, s.filters.len()))
        .collect();
    println!("wrote {} ({})", a.out.display(), counts.join(", "));
    Ok(())
}

pub fn label(a: LabelArgs, stamp: Option<&str>) -> Result<()> {
    let bank: SceneBank<f64> = load_bank(&a.bank)?;
    let step = bank
        .context
        .gabor
        .orientation_step()
        .ok_or_else(|| usage("--psis needs a bank with evenly spaced orientations"))?;
    let options = LabelOptions {
        psis: parse::psis(&a.psis, step)?,
        detection_threshold: a.detection_threshold,
    };
    options.validate()?;
    if a.resize_max == Some(0) {
        return Err(usage("--resize-max must be positive"));
    }
    let manifest = read_manifest(&a.manifest)?;
    let scenes = bank.scene_names();

    let started = Instant::now();
    let warnings = AtomicUsize::new(0);
    let done = AtomicUsize::new(0);
    let total = manifest.len();
    let labels = manifest
        .par_iter()
        .map(|entry| {
            let labelled = load_gray(&entry.path, a.resize_max).map_err(anyhow::Error::from).and_then(|img| {
                Ok(label_frame(&entry.frame_id, entry.timestamp, &img, &bank, &options)?)
            });
            let n = done.fetch_add(1, Ordering::Relaxed) + 1;
            info!("labelled {n}/{total}: {}", entry.frame_id);
            match labelled {
                Ok(l) => Ok(l),
                Err(e) if is_frame_error(&e) => {
                    warnings.fetch_add(1, Ordering::Relaxed);
                    warn!("frame '{}': {e:#}; labelled unknown", entry.frame_id);
                    Ok(FrameLabel::unknown(&entry.frame_id, entry.timestamp, &scenes))
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    save_labels(&a.out, &scenes, &labels, stamp)?;
    eprintln!(
        "labelled {} frames in {:.1}s; {} warning(s)",
        labels.len(),
        started.elapsed().as_secs_f64(),
        warnings.load(Ordering::Relaxed)
    );
    Ok(())
}

fn is_frame_error(e: &anyhow::Error) -> bool {
    use cosfire_scene::Error as E;
    matches!(
        e.downcast_ref::<E>(),
        Some(E::Image { .. } | E::Io { .. } | E::UnsupportedFormat { .. } | E::InvalidInput(_))
    )
}

pub fn smooth(a: SmoothArgs, stamp: Option<&str>) -> Result<()> {
    let params = SmoothingParams::new(a.k)?;
    let (scenes, labels) = read_labels(&a.labels)?;
    let smoothed = fill_holes(&labels, params);
    let filled = labels
        .iter()
        .zip(&smoothed)
        .filter(|(a, b)| a.label != b.label)
        .count();
    save_labels(&a.out, &scenes, &smoothed, stamp)?;
    eprintln!("filled {filled} hole(s) in {} frames", labels.len());
    Ok(())
}

pub fn segment(a: SegmentArgs, stamp: Option<&str>) -> Result<()> {
    let (_, labels) = read_labels(&a.labels)?;
    let events = segment_events(&labels);
    write_file(&a.out, |w| write_events(w, &events, stamp))?;
    eprintln!("{} event(s)", events.len());
    Ok(())
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let (columns, labels) = read_labels(&a.labels)?;
    let truth = read_truth(&a.truth)?;
    let scenes: Vec<String> = match &a.scenes {
        Some(s) => s.split(',').map(|x| x.trim().to_string()).collect(),
        None => columns,
    };
    let scores = scenes
        .iter()
        .map(|s| evaluate_scene(&labels, &truth, s))
        .collect::<cosfire_scene::Result<Vec<_>>>()?;
    let report = summary_report(scores)?;
    print!("{}", report.to_table());
    if let Some(path) = &a.json {
        std::fs::write(path, report.to_json() + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

pub fn gen_corpus(a: GenCorpusArgs) -> Result<()> {
    if a.frames == 0 || a.size < 64 {
        return Err(usage("--frames must be positive and --size at least 64"));
    }
    let spec = CorpusSpec {
        frames: a.frames,
        seed: a.seed,
        width: a.size,
        height: a.size,
        ..CorpusSpec::default()
    };
    let layout = write_corpus(&a.out, &spec)?;
    println!(
        "wrote {} frames and {} prototype images to {}",
        layout.frames,
        layout.prototype_images,
        a.out.display()
    );
    Ok(())
}
