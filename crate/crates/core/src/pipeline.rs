//! The per-image pipeline: binarize, thin, clean, detect endpoints,
//! triangulate, extract features. Every stage output is kept so callers can
//! dump intermediates or time individual stages.

use crate::error::Result;
use crate::features::{extract_features, FeatureVector};
use crate::imaging::{
    clean, detect_endpoints, niblack_binarize, skeletonize, BinaryImage, GrayImage, NiblackParams,
    PointSet,
};
use crate::triangulation::{delaunay, Triangulation};

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub binary: BinaryImage,
    pub skeleton: BinaryImage,
    pub cleaned: BinaryImage,
    pub endpoints: PointSet,
    pub triangulation: Triangulation,
    pub features: FeatureVector,
}

/// Runs the full pipeline on one image. Fails when fewer than three
/// endpoints survive cleanup or all of them are collinear.
pub fn run(img: &GrayImage, params: &NiblackParams) -> Result<PipelineOutput> {
    let binary = niblack_binarize(img, params)?;
    let skeleton = skeletonize(&binary);
    let cleaned = clean(&skeleton, params);
    let endpoints = detect_endpoints(&cleaned);
    let triangulation = delaunay(&endpoints)?;
    let features = extract_features(&triangulation)?;
    Ok(PipelineOutput {
        binary,
        skeleton,
        cleaned,
        endpoints,
        triangulation,
        features,
    })
}
