//! Corpus loading, leave-one-out identification and stage timing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureVector};
use crate::imaging::{clean, detect_endpoints, niblack_binarize, skeletonize, GrayImage};
use crate::matching::{identify, knn_classify, GalleryEntry};
use crate::pipeline;
use crate::triangulation::delaunay;

/// Where a dataset entry gets its features from.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleSource {
    ImagePath(PathBuf),
    Features(FeatureVector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub label: String,
    pub sample_id: String,
    pub source: SampleSource,
}

/// A labeled corpus. Leave-one-out needs a same-subject mate for every
/// query, so subjects with fewer than two samples are excluded at load time
/// and recorded in `skipped_subjects`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub entries: Vec<DatasetEntry>,
    pub skipped_subjects: Vec<String>,
}

impl Dataset {
    pub fn subject_count(&self) -> usize {
        let mut labels: Vec<&str> = self.entries.iter().map(|e| e.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        labels.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.subject_count() < 2 {
            return Err(Error::InvalidDataset(
                "need at least 2 subjects with 2 samples each".into(),
            ));
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for e in &self.entries {
            *counts.entry(e.label.as_str()).or_default() += 1;
        }
        if let Some((label, _)) = counts.iter().find(|(_, &c)| c < 2) {
            return Err(Error::InvalidDataset(format!(
                "subject {label} has fewer than 2 samples"
            )));
        }
        Ok(())
    }
}

/// Loads `root/<subject>/<sample>.(pgm|png)` with deterministic
/// (lexicographic) ordering. Subjects with fewer than two samples are
/// skipped.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<Dataset> {
    let root = root.as_ref();
    let mut subject_dirs = Vec::new();
    let rd = std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    for entry in rd {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        if entry.path().is_dir() {
            subject_dirs.push(entry.path());
        }
    }
    subject_dirs.sort();
    if subject_dirs.is_empty() {
        return Err(Error::InvalidDataset(format!(
            "no subject directories under {}",
            root.display()
        )));
    }

    let mut dataset = Dataset::default();
    for dir in subject_dirs {
        let label = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut files = Vec::new();
        let rd = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
        for entry in rd {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            let path = entry.path();
            let ext = path
                .extension()
                .map(|e| e.to_string_lossy().to_ascii_lowercase());
            if matches!(ext.as_deref(), Some("pgm") | Some("png")) {
                files.push(path);
            }
        }
        files.sort();
        if files.len() < 2 {
            dataset.skipped_subjects.push(label);
            continue;
        }
        for path in files {
            let sample_id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            dataset.entries.push(DatasetEntry {
                label: label.clone(),
                sample_id,
                source: SampleSource::ImagePath(path),
            });
        }
    }
    if dataset.entries.is_empty() {
        return Err(Error::InvalidDataset(
            "no subject has two or more samples".into(),
        ));
    }
    Ok(dataset)
}

/// Which decision rule scores a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classifier {
    /// Rank-1 of the filtered, weighted-sum ranking.
    WeightedRank1,
    /// Majority vote over the k nearest entries (k from the config).
    Knn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub label: String,
    pub sample_id: String,
    pub predicted: String,
    pub top_score: f64,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectStats {
    pub label: String,
    pub queries: usize,
    pub correct: usize,
}

/// Mean wall-clock seconds per stage, measured single-threaded with image
/// decoding excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeStats {
    pub images: usize,
    pub binarize_s: f64,
    pub skeleton_endpoints_s: f64,
    pub triangulate_s: f64,
    pub features_s: f64,
    /// Mean of the whole per-image pipeline span; at least the stage sum.
    pub per_image_total_s: f64,
}

/// Scored at rank 1: a query counts as correct iff the predicted label
/// equals its true label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognitionReport {
    pub classifier: String,
    pub total_queries: usize,
    pub correct: usize,
    pub recognition_rate: f64,
    pub per_subject: Vec<SubjectStats>,
    pub per_query: Vec<QueryOutcome>,
    pub config: Config,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<RuntimeStats>,
}

impl RecognitionReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One CSV row per query.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,sample_id,predicted,top_score,correct\n");
        for q in &self.per_query {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                q.label, q.sample_id, q.predicted, q.top_score, q.correct
            ));
        }
        out
    }
}

fn features_for(entry: &DatasetEntry, cfg: &Config) -> Result<FeatureVector> {
    match &entry.source {
        SampleSource::Features(f) => Ok(f.clone()),
        SampleSource::ImagePath(path) => {
            let img = GrayImage::load_with(path, cfg.downconvert_16bit)?;
            Ok(pipeline::run(&img, &cfg.niblack)?.features)
        }
    }
}

/// Leave-one-out identification over the dataset: each entry is queried
/// against all the others. Features are computed once per entry before the
/// query loop.
pub fn leave_one_out(
    ds: &Dataset,
    classifier: Classifier,
    cfg: &Config,
) -> Result<RecognitionReport> {
    ds.validate()?;
    cfg.validate()?;

    let features: Vec<FeatureVector> = ds
        .entries
        .par_iter()
        .map(|e| features_for(e, cfg))
        .collect::<Result<_>>()?;

    let gallery: Vec<GalleryEntry> = ds
        .entries
        .iter()
        .zip(&features)
        .map(|(e, f)| GalleryEntry {
            label: e.label.clone(),
            sample_id: e.sample_id.clone(),
            features: f.clone(),
        })
        .collect();

    let outcomes: Vec<QueryOutcome> = ds
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, entry)| -> Result<QueryOutcome> {
            let others: Vec<GalleryEntry> = gallery
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, g)| g.clone())
                .collect();
            let query = &features[i];
            let (predicted, top_score) = match classifier {
                Classifier::WeightedRank1 => {
                    let ranked = identify(query, &others, &cfg.weights, cfg.tau)?;
                    (ranked[0].label.clone(), ranked[0].score.total)
                }
                Classifier::Knn => {
                    let label = knn_classify(query, &others, cfg.knn_k, &cfg.weights)?;
                    let ranked = identify(query, &others, &cfg.weights, 1.0)?;
                    (label, ranked[0].score.total)
                }
            };
            Ok(QueryOutcome {
                label: entry.label.clone(),
                sample_id: entry.sample_id.clone(),
                predicted: predicted.clone(),
                top_score,
                correct: predicted == entry.label,
            })
        })
        .collect::<Result<_>>()?;

    let mut per_subject: BTreeMap<String, SubjectStats> = BTreeMap::new();
    for q in &outcomes {
        let s = per_subject
            .entry(q.label.clone())
            .or_insert_with(|| SubjectStats {
                label: q.label.clone(),
                queries: 0,
                correct: 0,
            });
        s.queries += 1;
        if q.correct {
            s.correct += 1;
        }
    }

    let correct = outcomes.iter().filter(|q| q.correct).count();
    let total = outcomes.len();
    Ok(RecognitionReport {
        classifier: match classifier {
            Classifier::WeightedRank1 => "weighted-rank1".to_string(),
            Classifier::Knn => format!("knn(k={})", cfg.knn_k),
        },
        total_queries: total,
        correct,
        recognition_rate: correct as f64 / total as f64,
        per_subject: per_subject.into_values().collect(),
        per_query: outcomes,
        config: cfg.clone(),
        timing: None,
    })
}

/// Times each pipeline stage over every image entry, single-threaded, with
/// decoding done up front so file I/O stays out of the numbers.
pub fn timing_report(ds: &Dataset, cfg: &Config) -> Result<RuntimeStats> {
    cfg.validate()?;
    let mut images = Vec::new();
    for e in &ds.entries {
        if let SampleSource::ImagePath(path) = &e.source {
            images.push(GrayImage::load_with(path, cfg.downconvert_16bit)?);
        }
    }
    if images.is_empty() {
        return Err(Error::InvalidDataset(
            "timing needs at least one image-backed entry".into(),
        ));
    }

    let n = images.len() as f64;
    let mut stage = [0.0f64; 4];
    let mut total = 0.0f64;
    for img in &images {
        let whole = Instant::now();

        let t = Instant::now();
        let binary = niblack_binarize(img, &cfg.niblack)?;
        stage[0] += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let skeleton = skeletonize(&binary);
        let cleaned = clean(&skeleton, &cfg.niblack);
        let endpoints = detect_endpoints(&cleaned);
        stage[1] += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let tri = delaunay(&endpoints)?;
        stage[2] += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let _features = extract_features(&tri)?;
        stage[3] += t.elapsed().as_secs_f64();

        total += whole.elapsed().as_secs_f64();
    }

    Ok(RuntimeStats {
        images: images.len(),
        binarize_s: stage[0] / n,
        skeleton_endpoints_s: stage[1] / n,
        triangulate_s: stage[2] / n,
        features_s: stage[3] / n,
        per_image_total_s: total / n,
    })
}
