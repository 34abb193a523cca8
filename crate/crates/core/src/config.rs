//! Pipeline configuration, echoed into every output artifact.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::imaging::NiblackParams;
use crate::matching::MatchWeights;

/// Every tunable in one place. The bin boundaries are fixed and serialized
/// read-only for provenance; values supplied for them in a config file are
/// ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub niblack: NiblackParams,
    pub weights: MatchWeights,
    /// Triangle-count prefilter tolerance.
    pub tau: f64,
    /// Neighborhood size for the k-NN classifier.
    pub knn_k: usize,
    /// Seed for synthetic corpus generation.
    pub seed: u64,
    /// Accept 16-bit inputs by dropping the low byte.
    pub downconvert_16bit: bool,
    #[serde(skip_deserializing)]
    pub bins: BinsEcho,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            niblack: NiblackParams::default(),
            weights: MatchWeights::default(),
            tau: 0.3,
            knn_k: 1,
            seed: 7,
            downconvert_16bit: false,
            bins: BinsEcho::default(),
        }
    }
}

/// Read-only echo of the fixed class boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinsEcho {
    pub dl_upper: [f64; 5],
    pub da_upper: [f64; 5],
    pub dtheta_upper: [f64; 6],
    pub dc_upper: [f64; 5],
}

impl Default for BinsEcho {
    fn default() -> Self {
        use crate::features::{BinScheme, FeatureGroup};
        let bounds = |g| BinScheme::for_group(g).boundaries;
        let arr5 = |v: Vec<f64>| -> [f64; 5] { v.try_into().unwrap() };
        let arr6 = |v: Vec<f64>| -> [f64; 6] { v.try_into().unwrap() };
        BinsEcho {
            dl_upper: arr5(bounds(FeatureGroup::RelativeLength)),
            da_upper: arr5(bounds(FeatureGroup::RelativeArea)),
            dtheta_upper: arr6(bounds(FeatureGroup::Angle)),
            dc_upper: arr5(bounds(FeatureGroup::RelativeIncenter)),
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.niblack.validate()?;
        self.weights.validate()?;
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::InvalidParameter(format!(
                "tau must be in [0, 1], got {}",
                self.tau
            )));
        }
        if self.knn_k == 0 {
            return Err(Error::InvalidParameter("knn_k must be >= 1".into()));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Config = serde_json::from_str(&data).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Short hash of the canonical JSON form, stamped into templates so a
    /// gallery built under different parameters is recognizable.
    pub fn params_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config always serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(&digest[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        Config::default().validate().unwrap();
    }

    #[test]
    fn params_hash_tracks_parameter_changes() {
        let a = Config::default();
        let mut b = Config::default();
        assert_eq!(a.params_hash(), b.params_hash());
        b.tau = 0.5;
        assert_ne!(a.params_hash(), b.params_hash());
        assert_eq!(a.params_hash().len(), 16);
    }

    #[test]
    fn config_round_trips_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        let mut cfg = Config::default();
        cfg.niblack.window = 11;
        cfg.knn_k = 3;
        std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
        let back = Config::load(&path).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_config_files_fill_in_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("partial.json");
        std::fs::write(&path, r#"{"tau": 0.5}"#).unwrap();
        let cfg = Config::load(&path).unwrap();
        assert_eq!(cfg.tau, 0.5);
        assert_eq!(cfg.knn_k, Config::default().knn_k);
    }

    #[test]
    fn invalid_values_are_rejected() {
        let cfg = Config {
            tau: 1.5,
            ..Config::default()
        };
        assert!(cfg.validate().is_err());

        let mut cfg = Config::default();
        cfg.niblack.window = 8;
        assert!(cfg.validate().is_err());

        let mut cfg = Config::default();
        cfg.weights.alpha = 0.9;
        assert!(cfg.validate().is_err());
    }
}
