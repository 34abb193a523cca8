//! Palmprint recognition from Delaunay triangulations of palm-line
//! endpoints.
//!
//! The pipeline extracts palm lines from a grayscale ROI with Niblack
//! binarization, thins them to skeletons, detects line endpoints, and builds
//! the Delaunay triangulation of those endpoints. Relative edge lengths,
//! relative triangle areas, edge angles and relative inradii are binned into
//! a 21-value descriptor that is invariant to translation and scale (and,
//! outside the angle group, to rotation). Descriptors are compared with
//! Sorensen distances fused by a weighted sum; identification, k-NN
//! classification, a leave-one-out evaluation harness and a synthetic corpus
//! generator sit on top.

pub mod config;
mod error;
pub mod evaluation;
pub mod features;
pub mod imaging;
pub mod matching;
pub mod pipeline;
pub mod synthgen;
pub mod triangulation;

pub use config::Config;
pub use error::{Error, Result};
pub use features::{extract_features, FeatureVector, Template, TemplateMeta};
pub use imaging::{
    clean, detect_endpoints, niblack_binarize, skeletonize, BinaryImage, GrayImage, NiblackParams,
    PointSet,
};
pub use matching::{
    identify, knn_classify, sorensen, triangle_count_filter, weighted_score, GalleryEntry,
    MatchScore, MatchWeights, RankedCandidate,
};
pub use triangulation::{delaunay, Edge, Triangle, Triangulation};
