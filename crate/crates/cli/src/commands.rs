use std::io::Write;
use std::path::Path;

use anyhow::Context;

use palmtri::evaluation::{self, Classifier};
use palmtri::synthgen::{generate_corpus, SampleParams};
use palmtri::{pipeline, Config, GalleryEntry, GrayImage, RankedCandidate, Template, TemplateMeta};

use crate::Failure;

pub(crate) fn extract(
    image: &Path,
    out: &Path,
    debug_dir: Option<&Path>,
    cfg: &Config,
) -> Result<(), Failure> {
    let img = GrayImage::load_with(image, cfg.downconvert_16bit)?;
    let result = pipeline::run(&img, &cfg.niblack)?;

    if let Some(dir) = debug_dir {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create debug dir {}", dir.display()))?;
        result.binary.write_pgm(dir.join("binarized.pgm"))?;
        result.skeleton.write_pgm(dir.join("skeleton.pgm"))?;
        result.cleaned.write_pgm(dir.join("cleaned.pgm"))?;
        std::fs::write(
            dir.join("triangulation.txt"),
            result.triangulation.to_debug_string(),
        )
        .with_context(|| "cannot write triangulation listing")?;
    }

    let template = Template {
        features: result.features,
        meta: TemplateMeta {
            source: image.display().to_string(),
            params_hash: cfg.params_hash(),
        },
    };
    template.save(out)?;
    eprintln!(
        "wrote {} ({} sites, {} triangles)",
        out.display(),
        result.endpoints.len(),
        template.features.triangle_count
    );
    Ok(())
}

pub(crate) fn match_templates(a: &Path, b: &Path, cfg: &Config) -> Result<(), Failure> {
    let ta = Template::load(a)?;
    let tb = Template::load(b)?;
    let score = palmtri::weighted_score(&ta.features, &tb.features, &cfg.weights)?;
    let mut stdout = std::io::stdout().lock();
    for (name, value) in [
        ("d_DL", score.per_group[0]),
        ("d_DA", score.per_group[1]),
        ("d_Dtheta", score.per_group[2]),
        ("d_DC", score.per_group[3]),
        ("total", score.total),
    ] {
        writeln!(stdout, "{name} {value}").context("stdout")?;
    }
    Ok(())
}

/// Loads a gallery of template JSONs. A subdirectory names the label of the
/// templates inside it; loose files use their stem as both label and sample.
fn load_gallery(dir: &Path) -> Result<Vec<GalleryEntry>, Failure> {
    let mut out = Vec::new();
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read gallery {}", dir.display()))?
        .collect::<std::io::Result<Vec<_>>>()
        .context("gallery listing")?
        .into_iter()
        .map(|e| e.path())
        .collect();
    paths.sort();

    for path in paths {
        if path.is_dir() {
            let label = path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let mut files: Vec<_> = std::fs::read_dir(&path)
                .with_context(|| format!("cannot read {}", path.display()))?
                .collect::<std::io::Result<Vec<_>>>()
                .context("gallery listing")?
                .into_iter()
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|e| e == "json"))
                .collect();
            files.sort();
            for file in files {
                let sample_id = file
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                out.push(GalleryEntry {
                    label: label.clone(),
                    sample_id,
                    features: Template::load(&file)?.features,
                });
            }
        } else if path.extension().is_some_and(|e| e == "json") {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            out.push(GalleryEntry {
                label: stem.clone(),
                sample_id: stem,
                features: Template::load(&path)?.features,
            });
        }
    }
    Ok(out)
}

fn ranking_csv(query_id: &str, ranked: &[RankedCandidate]) -> String {
    let mut csv = String::from(
        "query_id,candidate_label,candidate_sample,d_DL,d_DA,d_Dtheta,d_DC,total,rank\n",
    );
    for c in ranked {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            query_id,
            c.label,
            c.sample_id,
            c.score.per_group[0],
            c.score.per_group[1],
            c.score.per_group[2],
            c.score.per_group[3],
            c.score.total,
            c.rank
        ));
    }
    csv
}

pub(crate) fn identify(
    query: &Path,
    gallery_dir: &Path,
    out: Option<&Path>,
    cfg: &Config,
) -> Result<(), Failure> {
    let features = if query.extension().is_some_and(|e| e == "json") {
        Template::load(query)?.features
    } else {
        let img = GrayImage::load_with(query, cfg.downconvert_16bit)?;
        pipeline::run(&img, &cfg.niblack)?.features
    };
    let gallery = load_gallery(gallery_dir)?;
    let ranked = palmtri::identify(&features, &gallery, &cfg.weights, cfg.tau)?;
    let query_id = query
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let csv = ranking_csv(&query_id, &ranked);
    match out {
        Some(path) => {
            std::fs::write(path, csv).with_context(|| format!("cannot write {}", path.display()))?
        }
        None => {
            std::io::stdout()
                .lock()
                .write_all(csv.as_bytes())
                .context("stdout")?;
        }
    }
    Ok(())
}

pub(crate) fn evaluate(
    corpus: &Path,
    classifier: Classifier,
    timing: bool,
    out: &Path,
    cfg: &Config,
) -> Result<(), Failure> {
    let dataset = evaluation::load_dataset(corpus)?;
    for skipped in &dataset.skipped_subjects {
        eprintln!("warning: subject {skipped} has fewer than 2 samples; excluded");
    }

    let mut report = evaluation::leave_one_out(&dataset, classifier, cfg)?;
    if timing {
        report.timing = Some(evaluation::timing_report(&dataset, cfg)?);
    }

    let json_path = out.with_extension("json");
    let csv_path = out.with_extension("csv");
    std::fs::write(&json_path, report.to_json())
        .with_context(|| format!("cannot write {}", json_path.display()))?;
    std::fs::write(&csv_path, report.to_csv())
        .with_context(|| format!("cannot write {}", csv_path.display()))?;

    println!(
        "recognition rate {:.4} ({} / {} queries, {})",
        report.recognition_rate, report.correct, report.total_queries, report.classifier
    );
    if let Some(t) = &report.timing {
        println!(
            "mean per-image pipeline {:.4}s over {} images (binarize {:.4}s, skeleton+endpoints {:.4}s, triangulate {:.4}s, features {:.4}s)",
            t.per_image_total_s,
            t.images,
            t.binarize_s,
            t.skeleton_endpoints_s,
            t.triangulate_s,
            t.features_s
        );
    }
    eprintln!("wrote {} and {}", json_path.display(), csv_path.display());
    Ok(())
}

pub(crate) fn synth(
    out_dir: &Path,
    subjects: usize,
    samples: usize,
    cfg: &Config,
) -> Result<(), Failure> {
    let dataset = generate_corpus(
        out_dir,
        subjects,
        samples,
        &SampleParams::default(),
        cfg.seed,
    )?;
    println!(
        "generated {} images for {} subjects under {} (seed {})",
        dataset.entries.len(),
        subjects,
        out_dir.display(),
        cfg.seed
    );
    Ok(())
}
