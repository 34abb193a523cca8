//! Template comparison and identification.
//!
//! Feature groups are compared with the Sorensen distance and fused by a
//! weighted sum; 0 is a perfect match. Identification prefilters the gallery
//! by triangle count, ranks the survivors by fused distance, and a k-NN
//! classifier over the same distance serves as the comparison baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;

/// Nonnegative weights over the DL, DA, Dtheta and DC distances; they must
/// sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl Default for MatchWeights {
    fn default() -> Self {
        // Length and area carry the most discriminative power.
        MatchWeights {
            alpha: 0.3,
            beta: 0.3,
            gamma: 0.2,
            delta: 0.2,
        }
    }
}

impl MatchWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.gamma, self.delta];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = all.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(format!(
                "weights must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }

    fn as_array(&self) -> [f64; 4] {
        [self.alpha, self.beta, self.gamma, self.delta]
    }
}

/// Fused distance plus the per-group Sorensen distances it was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchScore {
    pub total: f64,
    /// d_DL, d_DA, d_Dtheta, d_DC.
    pub per_group: [f64; 4],
}

/// One enrolled template.
#[derive(Debug, Clone, PartialEq)]
pub struct GalleryEntry {
    pub label: String,
    pub sample_id: String,
    pub features: FeatureVector,
}

/// A gallery entry with its fused distance to some query, rank starting
/// at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedCandidate {
    pub label: String,
    pub sample_id: String,
    pub score: MatchScore,
    pub rank: usize,
}

/// Sorensen distance: sum |u - v| / (sum u + sum v), in [0, 1] for
/// nonnegative inputs. Errors on length mismatch and on the undefined
/// all-zero / all-zero case.
pub fn sorensen(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch(u.len(), v.len()));
    }
    debug_assert!(
        u.iter().chain(v.iter()).all(|x| *x >= 0.0),
        "sorensen is defined over nonnegative vectors"
    );
    let numerator: f64 = u.iter().zip(v).map(|(a, b)| (a - b).abs()).sum();
    let denominator: f64 = u.iter().sum::<f64>() + v.iter().sum::<f64>();
    if denominator == 0.0 {
        return Err(Error::BothZero);
    }
    Ok((numerator / denominator).clamp(0.0, 1.0))
}

/// Weighted sum of per-group Sorensen distances. A group that is all-zero
/// on both sides contributes distance 0: both palms lack that evidence.
pub fn weighted_score(
    a: &FeatureVector,
    b: &FeatureVector,
    w: &MatchWeights,
) -> Result<MatchScore> {
    w.validate()?;
    let mut per_group = [0.0; 4];
    for (i, (ga, gb)) in a.groups().iter().zip(b.groups().iter()).enumerate() {
        let both_zero = ga.iter().all(|&x| x == 0.0) && gb.iter().all(|&x| x == 0.0);
        per_group[i] = if both_zero { 0.0 } else { sorensen(ga, gb)? };
    }
    let total: f64 = per_group
        .iter()
        .zip(w.as_array())
        .map(|(d, wi)| d * wi)
        .sum();
    Ok(MatchScore {
        total: total.clamp(0.0, 1.0),
        per_group,
    })
}

/// Quantitative prefilter: keep a candidate iff the relative difference in
/// triangle counts stays within tau.
pub fn triangle_count_filter(n_query: usize, n_gallery: usize, tau: f64) -> bool {
    debug_assert!(n_query >= 1 && n_gallery >= 1);
    debug_assert!((0.0..=1.0).contains(&tau));
    let diff = n_query.abs_diff(n_gallery) as f64;
    let max = n_query.max(n_gallery) as f64;
    diff / max <= tau
}

/// Ranks the gallery against a query: triangle-count filter, then ascending
/// fused distance with (label, sample_id) breaking ties. If the filter
/// leaves nothing, it is bypassed so a nonempty gallery always yields a
/// ranking.
pub fn identify(
    query: &FeatureVector,
    gallery: &[GalleryEntry],
    w: &MatchWeights,
    tau: f64,
) -> Result<Vec<RankedCandidate>> {
    if gallery.is_empty() {
        return Err(Error::EmptyGallery);
    }
    w.validate()?;
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidParameter(format!(
            "tau must be in [0, 1], got {tau}"
        )));
    }

    let passing: Vec<&GalleryEntry> = gallery
        .iter()
        .filter(|e| triangle_count_filter(query.triangle_count, e.features.triangle_count, tau))
        .collect();
    let candidates: Vec<&GalleryEntry> = if passing.is_empty() {
        gallery.iter().collect()
    } else {
        passing
    };

    let mut scored: Vec<(&GalleryEntry, MatchScore)> = candidates
        .into_iter()
        .map(|e| weighted_score(query, &e.features, w).map(|s| (e, s)))
        .collect::<Result<_>>()?;
    scored.sort_by(|(ea, sa), (eb, sb)| {
        sa.total
            .total_cmp(&sb.total)
            .then_with(|| ea.label.cmp(&eb.label))
            .then_with(|| ea.sample_id.cmp(&eb.sample_id))
    });

    Ok(scored
        .into_iter()
        .enumerate()
        .map(|(i, (e, score))| RankedCandidate {
            label: e.label.clone(),
            sample_id: e.sample_id.clone(),
            score,
            rank: i + 1,
        })
        .collect())
}

/// Majority label among the k nearest gallery entries under the fused
/// distance (no prefilter). Majority ties go to the smaller summed distance,
/// then to the lexicographically smaller label.
pub fn knn_classify(
    query: &FeatureVector,
    gallery: &[GalleryEntry],
    k: usize,
    w: &MatchWeights,
) -> Result<String> {
    if gallery.is_empty() {
        return Err(Error::EmptyGallery);
    }
    if k == 0 || k > gallery.len() {
        return Err(Error::InvalidK {
            k,
            gallery: gallery.len(),
        });
    }
    w.validate()?;

    let mut scored: Vec<(&GalleryEntry, f64)> = gallery
        .iter()
        .map(|e| weighted_score(query, &e.features, w).map(|s| (e, s.total)))
        .collect::<Result<_>>()?;
    scored.sort_by(|(ea, sa), (eb, sb)| {
        sa.total_cmp(sb)
            .then_with(|| ea.label.cmp(&eb.label))
            .then_with(|| ea.sample_id.cmp(&eb.sample_id))
    });

    let mut votes: std::collections::BTreeMap<&str, (usize, f64)> =
        std::collections::BTreeMap::new();
    for (e, d) in scored.iter().take(k) {
        let entry = votes.entry(e.label.as_str()).or_insert((0, 0.0));
        entry.0 += 1;
        entry.1 += d;
    }
    let winner = votes
        .iter()
        .max_by(|(la, (ca, da)), (lb, (cb, db))| {
            ca.cmp(cb)
                .then_with(|| db.total_cmp(da)) // smaller summed distance wins
                .then_with(|| lb.cmp(la)) // then lexicographically smaller label
        })
        .map(|(label, _)| label.to_string())
        .expect("k >= 1 guarantees at least one vote");
    Ok(winner)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(dl: [f64; 5], da: [f64; 5], dtheta: [f64; 6], dc: [f64; 5], n: usize) -> FeatureVector {
        FeatureVector {
            dl,
            da,
            dtheta,
            dc,
            triangle_count: n,
        }
    }

    fn uniformish(n: usize) -> FeatureVector {
        fv(
            [0.25, 0.25, 0.25, 0.25, 0.0],
            [0.25, 0.25, 0.25, 0.25, 0.0],
            [0.5, 0.1, 0.1, 0.1, 0.1, 0.1],
            [0.25, 0.25, 0.25, 0.25, 0.0],
            n,
        )
    }

    fn entry(label: &str, sample: &str, features: FeatureVector) -> GalleryEntry {
        GalleryEntry {
            label: label.into(),
            sample_id: sample.into(),
            features,
        }
    }

    #[test]
    fn sorensen_examples() {
        assert_eq!(sorensen(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert_eq!(sorensen(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(sorensen(&[2.0, 1.0], &[1.0, 3.0]).unwrap(), 3.0 / 7.0);
        assert!(matches!(
            sorensen(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch(1, 2))
        ));
        assert!(matches!(
            sorensen(&[0.0, 0.0], &[0.0, 0.0]),
            Err(Error::BothZero)
        ));
    }

    #[test]
    fn sorensen_is_invariant_to_common_scaling_of_counts() {
        // Doubling both raw count vectors before normalization leaves the
        // distance unchanged.
        let u = [3.0, 1.0, 0.0, 2.0];
        let v = [1.0, 1.0, 4.0, 0.0];
        let u2: Vec<f64> = u.iter().map(|x| x * 2.0).collect();
        let v2: Vec<f64> = v.iter().map(|x| x * 2.0).collect();
        let a = sorensen(&u, &v).unwrap();
        let b = sorensen(&u2, &v2).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn weighted_score_is_the_dot_product_of_group_distances() {
        // Group distances engineered to 0.2, 0.4, 0.4, 0.2.
        let a = fv(
            [0.7, 0.3, 0.0, 0.0, 0.0],
            [0.7, 0.3, 0.0, 0.0, 0.0],
            [0.7, 0.3, 0.0, 0.0, 0.0, 0.0],
            [0.6, 0.4, 0.0, 0.0, 0.0],
            10,
        );
        let b = fv(
            [0.5, 0.5, 0.0, 0.0, 0.0],
            [0.3, 0.7, 0.0, 0.0, 0.0],
            [0.3, 0.7, 0.0, 0.0, 0.0, 0.0],
            [0.4, 0.6, 0.0, 0.0, 0.0],
            10,
        );
        let w = MatchWeights {
            alpha: 0.25,
            beta: 0.25,
            gamma: 0.25,
            delta: 0.25,
        };
        let s = weighted_score(&a, &b, &w).unwrap();
        let expected = [0.2, 0.4, 0.4, 0.2];
        for (got, want) in s.per_group.iter().zip(expected.iter()) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((s.total - 0.3).abs() < 1e-12);
    }

    #[test]
    fn identical_vectors_are_a_perfect_match() {
        let v = uniformish(25);
        let s = weighted_score(&v, &v, &MatchWeights::default()).unwrap();
        assert_eq!(s.total, 0.0);
        assert_eq!(s.per_group, [0.0; 4]);
    }

    #[test]
    fn all_zero_groups_contribute_zero() {
        let mut a = uniformish(4);
        let mut b = uniformish(4);
        a.dc = [0.0; 5];
        b.dc = [0.0; 5];
        b.dl = [0.0, 0.5, 0.25, 0.25, 0.0];
        let s = weighted_score(&a, &b, &MatchWeights::default()).unwrap();
        assert_eq!(s.per_group[3], 0.0);
        assert!(s.per_group[0] > 0.0);
    }

    #[test]
    fn bad_weights_are_rejected() {
        let v = uniformish(4);
        let w = MatchWeights {
            alpha: 0.5,
            beta: 0.5,
            gamma: 0.5,
            delta: 0.0,
        };
        assert!(matches!(
            weighted_score(&v, &v, &w),
            Err(Error::InvalidWeights(_))
        ));
        let neg = MatchWeights {
            alpha: -0.5,
            beta: 1.5,
            gamma: 0.0,
            delta: 0.0,
        };
        assert!(neg.validate().is_err());
    }

    #[test]
    fn count_filter_arithmetic() {
        assert!(triangle_count_filter(100, 100, 0.0));
        assert!(!triangle_count_filter(100, 50, 0.3), "0.5 > 0.3");
        assert!(triangle_count_filter(100, 80, 0.3), "0.2 <= 0.3");
    }

    #[test]
    fn identify_ranks_the_exact_copy_first() {
        let q = uniformish(25);
        let gallery = vec![
            entry(
                "b",
                "1",
                fv(
                    [0.1, 0.3, 0.3, 0.3, 0.0],
                    [0.25, 0.25, 0.25, 0.25, 0.0],
                    [0.4, 0.2, 0.1, 0.1, 0.1, 0.1],
                    [0.25, 0.25, 0.25, 0.25, 0.0],
                    24,
                ),
            ),
            entry("a", "1", q.clone()),
        ];
        let ranked = identify(&q, &gallery, &MatchWeights::default(), 0.3).unwrap();
        assert_eq!(ranked[0].label, "a");
        assert_eq!(ranked[0].score.total, 0.0);
        assert_eq!(ranked[0].rank, 1);
        assert!(ranked[1].score.total > 0.0);
        assert_eq!(ranked[1].rank, 2);
    }

    #[test]
    fn identify_filters_on_triangle_count_and_falls_back() {
        let q = uniformish(100);
        let near = entry("near", "1", uniformish(100));
        let far = entry("far", "1", uniformish(300));
        let ranked = identify(
            &q,
            &[near.clone(), far.clone()],
            &MatchWeights::default(),
            0.3,
        )
        .unwrap();
        assert_eq!(ranked.len(), 1, "far entry must be excluded before ranking");
        assert_eq!(ranked[0].label, "near");

        // All entries filtered out: the filter is bypassed instead of
        // returning nothing.
        let ranked = identify(&q, &[far], &MatchWeights::default(), 0.3).unwrap();
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].label, "far");
    }

    #[test]
    fn identify_is_invariant_under_gallery_permutation() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let q = uniformish(25);
        let mut gallery: Vec<GalleryEntry> = (0..12)
            .map(|i| {
                let mut f = uniformish(20 + i);
                f.dl[0] = 0.1 + 0.05 * i as f64;
                f.dl[1] = 0.9 - 0.05 * i as f64;
                f.dl[2] = 0.0;
                f.dl[3] = 0.0;
                entry(&format!("s{}", i % 4), &format!("{i}"), f)
            })
            .collect();
        let baseline = identify(&q, &gallery, &MatchWeights::default(), 0.3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            gallery.shuffle(&mut rng);
            let ranked = identify(&q, &gallery, &MatchWeights::default(), 0.3).unwrap();
            assert_eq!(ranked, baseline);
        }
    }

    #[test]
    fn identify_rejects_empty_gallery() {
        let q = uniformish(10);
        assert!(matches!(
            identify(&q, &[], &MatchWeights::default(), 0.3),
            Err(Error::EmptyGallery)
        ));
    }

    #[test]
    fn knn_reduces_to_nearest_neighbor_at_k1() {
        let q = uniformish(25);
        let mut other = uniformish(25);
        other.dl = [0.0, 0.2, 0.3, 0.5, 0.0];
        let gallery = vec![entry("away", "1", other), entry("here", "1", q.clone())];
        assert_eq!(
            knn_classify(&q, &gallery, 1, &MatchWeights::default()).unwrap(),
            "here"
        );
    }

    #[test]
    fn knn_majority_and_tie_breaks() {
        let q = uniformish(25);
        let close = |eps: f64| {
            let mut f = uniformish(25);
            f.dtheta = [0.5 - eps, 0.1 + eps, 0.1, 0.1, 0.1, 0.1];
            f
        };
        let gallery = vec![
            entry("a", "1", close(0.01)),
            entry("a", "2", close(0.02)),
            entry("b", "1", close(0.001)),
        ];
        // k = 3, labels {a, a, b}: majority a.
        assert_eq!(
            knn_classify(&q, &gallery, 3, &MatchWeights::default()).unwrap(),
            "a"
        );

        // k = 2 over {a, b} with a closer: summed distance breaks the tie.
        let gallery = vec![entry("b", "1", close(0.03)), entry("a", "1", close(0.01))];
        assert_eq!(
            knn_classify(&q, &gallery, 2, &MatchWeights::default()).unwrap(),
            "a"
        );

        // Exactly tied distances fall back to the lexicographic label.
        let gallery = vec![entry("d", "1", close(0.02)), entry("c", "1", close(0.02))];
        assert_eq!(
            knn_classify(&q, &gallery, 2, &MatchWeights::default()).unwrap(),
            "c"
        );
    }

    #[test]
    fn knn_validates_k() {
        let q = uniformish(10);
        let gallery = vec![entry("a", "1", uniformish(10))];
        assert!(matches!(
            knn_classify(&q, &gallery, 0, &MatchWeights::default()),
            Err(Error::InvalidK { .. })
        ));
        assert!(matches!(
            knn_classify(&q, &gallery, 2, &MatchWeights::default()),
            Err(Error::InvalidK { .. })
        ));
        assert!(matches!(
            knn_classify(&q, &[], 1, &MatchWeights::default()),
            Err(Error::EmptyGallery)
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn vector_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
            (1..16usize).prop_flat_map(|n| {
                (
                    proptest::collection::vec(0.0..8.0f64, n),
                    proptest::collection::vec(0.0..8.0f64, n),
                )
            })
        }

        proptest! {
            #[test]
            fn sorensen_is_symmetric_bounded_and_zero_on_identity(
                (u, v) in vector_pair()
            ) {
                let duv = sorensen(&u, &v).unwrap();
                let dvu = sorensen(&v, &u).unwrap();
                prop_assert_eq!(duv, dvu);
                prop_assert!((0.0..=1.0).contains(&duv));
                prop_assert_eq!(sorensen(&u, &u).unwrap(), 0.0);
                if duv == 0.0 {
                    for (a, b) in u.iter().zip(v.iter()) {
                        prop_assert!((a - b).abs() < 1e-12);
                    }
                }
            }

            #[test]
            fn count_filter_is_symmetric(
                a in 1..400usize, b in 1..400usize, tau in 0.0..=1.0f64
            ) {
                prop_assert_eq!(
                    triangle_count_filter(a, b, tau),
                    triangle_count_filter(b, a, tau)
                );
                prop_assert!(triangle_count_filter(a, a, tau));
            }
        }
    }
}
