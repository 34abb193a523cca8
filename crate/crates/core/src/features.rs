//! The 21-bin invariant descriptor extracted from a triangulation.
//!
//! Edge lengths, triangle areas and inradii are made scale-free by dividing
//! by their per-triangulation maximum, then binned into fixed classes along
//! with edge angles. Class counts are normalized to proportions so palms
//! with different triangle counts stay comparable, and the triangle count
//! itself rides along as a quantitative feature.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::triangulation::Triangulation;

/// Ratio class boundaries. The first class is closed on both ends
/// (0.2 <= v <= 0.4) and values under 0.2 are merged into it, so every
/// element lands somewhere; later classes are half-open (lo < v <= hi).
/// The top class reaches past 1.0 and is structurally empty for ratios.
const RATIO_BOUNDS: [f64; 5] = [0.4, 0.6, 0.8, 1.0, 1.8];
/// The incenter group uses a narrower dead top class.
const INCENTER_BOUNDS: [f64; 5] = [0.4, 0.6, 0.8, 1.0, 1.2];
/// Angle classes are right-open 30-degree intervals over [0, 180).
const ANGLE_BOUNDS: [f64; 6] = [30.0, 60.0, 90.0, 120.0, 150.0, 180.0];

/// Which measurement a bin scheme discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureGroup {
    RelativeLength,
    RelativeArea,
    Angle,
    RelativeIncenter,
}

/// Ordered class boundaries plus the inclusion rule for one feature group.
#[derive(Debug, Clone, PartialEq)]
pub struct BinScheme {
    pub group: FeatureGroup,
    pub boundaries: Vec<f64>,
}

impl BinScheme {
    pub fn for_group(group: FeatureGroup) -> Self {
        let boundaries = match group {
            FeatureGroup::RelativeLength | FeatureGroup::RelativeArea => RATIO_BOUNDS.to_vec(),
            FeatureGroup::RelativeIncenter => INCENTER_BOUNDS.to_vec(),
            FeatureGroup::Angle => ANGLE_BOUNDS.to_vec(),
        };
        BinScheme { group, boundaries }
    }

    pub fn class_count(&self) -> usize {
        self.boundaries.len()
    }

    /// Class index for one value.
    pub fn classify_value(&self, v: f64) -> Result<usize> {
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite value {v}")));
        }
        match self.group {
            FeatureGroup::Angle => {
                if !(0.0..180.0).contains(&v) {
                    return Err(Error::OutOfRange(v, 180.0));
                }
                Ok((v / 30.0).floor() as usize)
            }
            _ => {
                if v <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "ratio features need positive values, got {v}"
                    )));
                }
                let last = *self.boundaries.last().unwrap();
                if v > last {
                    return Err(Error::OutOfRange(v, last));
                }
                // Underflow merge keeps sub-0.2 ratios in class 1.
                Ok(self
                    .boundaries
                    .iter()
                    .position(|&hi| v <= hi)
                    .expect("bounded above by the final boundary"))
            }
        }
    }
}

/// Divides every value by the maximum of the list; the maximum itself maps
/// to exactly 1.
pub fn relative_ratios(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot take ratios of an empty list".into(),
        ));
    }
    if values.iter().any(|&v| v.is_nan() || v <= 0.0) {
        return Err(Error::InvalidParameter(
            "ratio features need positive values".into(),
        ));
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(values.iter().map(|&v| v / max).collect())
}

/// Class counts for a list of values under a scheme.
pub fn classify(values: &[f64], scheme: &BinScheme) -> Result<Vec<usize>> {
    let mut counts = vec![0usize; scheme.class_count()];
    for &v in values {
        counts[scheme.classify_value(v)?] += 1;
    }
    Ok(counts)
}

/// The invariant descriptor: four normalized histograms plus the triangle
/// count. Each group sums to 1; the top classes of the ratio groups are
/// structurally zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub dl: [f64; 5],
    pub da: [f64; 5],
    pub dtheta: [f64; 6],
    pub dc: [f64; 5],
    #[serde(rename = "n_triangles")]
    pub triangle_count: usize,
}

impl FeatureVector {
    /// Bin groups in weight order: DL, DA, Dtheta, DC.
    pub fn groups(&self) -> [&[f64]; 4] {
        [&self.dl, &self.da, &self.dtheta, &self.dc]
    }
}

fn normalized<const N: usize>(counts: &[usize]) -> [f64; N] {
    let total: usize = counts.iter().sum();
    let mut out = [0.0; N];
    if total > 0 {
        for (o, &c) in out.iter_mut().zip(counts) {
            *o = c as f64 / total as f64;
        }
    }
    out
}

/// Builds the descriptor from a triangulation with at least one triangle.
/// DL and Dtheta run over the deduplicated edge set; DA and DC run over the
/// triangles.
pub fn extract_features(t: &Triangulation) -> Result<FeatureVector> {
    if t.triangle_count() == 0 {
        return Err(Error::EmptyTriangulation);
    }

    let lengths: Vec<f64> = t.iter_edges().map(|e| e.length()).collect();
    let angles: Vec<f64> = t
        .iter_edges()
        .map(|e| e.angle_degrees())
        .collect::<Result<Vec<_>>>()?;
    let areas: Vec<f64> = t.iter_triangles().map(|tr| tr.area()).collect();
    let inradii: Vec<f64> = t
        .iter_triangles()
        .map(|tr| tr.inradius())
        .collect::<Result<Vec<_>>>()?;

    let dl = classify(
        &relative_ratios(&lengths)?,
        &BinScheme::for_group(FeatureGroup::RelativeLength),
    )?;
    let da = classify(
        &relative_ratios(&areas)?,
        &BinScheme::for_group(FeatureGroup::RelativeArea),
    )?;
    let dtheta = classify(&angles, &BinScheme::for_group(FeatureGroup::Angle))?;
    let dc = classify(
        &relative_ratios(&inradii)?,
        &BinScheme::for_group(FeatureGroup::RelativeIncenter),
    )?;

    Ok(FeatureVector {
        dl: normalized(&dl),
        da: normalized(&da),
        dtheta: normalized(&dtheta),
        dc: normalized(&dc),
        triangle_count: t.triangle_count(),
    })
}

/// Provenance carried by enrollment templates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateMeta {
    pub source: String,
    #[serde(rename = "params-hash")]
    pub params_hash: String,
}

/// The enrollment template format: a feature vector plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Template {
    #[serde(flatten)]
    pub features: FeatureVector,
    pub meta: TemplateMeta,
}

impl Template {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut json = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        json.push('\n');
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&data).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}
