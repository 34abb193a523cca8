//! Synthetic palm-line corpus with ground-truth endpoints.
//!
//! Each subject is a deterministic template of smooth dark strokes; each
//! sample re-renders the template with control-point jitter, a small
//! rotation and scale change, and background texture noise. The true stroke
//! endpoints are exported after the same transform, so triangulation,
//! features and matching can be exercised end to end without any licensed
//! imagery.

use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{Dataset, DatasetEntry, SampleSource};
use crate::imaging::{GrayImage, PointSet};

/// One smooth polyline stroke in unit-square coordinates.
///
/// Palm creases rarely print as unbroken curves, so a stroke renders as one
/// or more dashes: sub-intervals of normalized arc length. Every dash tip
/// is a true line endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    pub control: Vec<(f64, f64)>,
    /// Rendered width in pixels.
    pub width: f64,
    /// Ink intensity in gray levels.
    pub intensity: f64,
    /// Drawn arc-length intervals, disjoint and ascending within [0, 1].
    pub dashes: Vec<(f64, f64)>,
}

/// A subject: a deterministic set of strokes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineTemplate {
    pub seed: u64,
    pub strokes: Vec<Stroke>,
}

/// Per-sample rendering parameters. Rotation and scale are concrete values
/// here; corpus generation draws them per sample from symmetric ranges
/// around the base values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleParams {
    /// Control-point noise, pixels.
    pub jitter_sigma: f64,
    pub rotation_deg: f64,
    pub scale: f64,
    /// Background noise, gray levels.
    pub noise_sigma: f64,
    /// Square image side, pixels.
    pub size: u32,
    /// Drives jitter and background noise.
    pub seed: u64,
}

impl Default for SampleParams {
    fn default() -> Self {
        // Calibrated to mimic registered ROI crops of the same palm. The
        // noise default is deliberately mild: with the standard Niblack
        // coefficient, heavier i.i.d. background noise marks a large
        // fraction of background pixels and floods the skeleton with
        // speckle that survives component filtering.
        SampleParams {
            jitter_sigma: 0.3,
            rotation_deg: 3.0,
            scale: 1.05,
            noise_sigma: 0.1,
            size: 128,
            seed: 0,
        }
    }
}

impl SampleParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.8..=1.25).contains(&self.scale) {
            return Err(Error::InvalidParameter(format!(
                "scale must lie in [0.8, 1.25], got {}",
                self.scale
            )));
        }
        if self.rotation_deg.abs() > 20.0 {
            return Err(Error::InvalidParameter(format!(
                "rotation must lie in [-20, 20] degrees, got {}",
                self.rotation_deg
            )));
        }
        if self.size < 16 {
            return Err(Error::InvalidParameter("image size must be >= 16".into()));
        }
        if self.jitter_sigma < 0.0 || self.noise_sigma < 0.0 {
            return Err(Error::InvalidParameter("noise sigmas must be >= 0".into()));
        }
        Ok(())
    }
}

/// Strokes keep every control point within this radius of the image center
/// (unit coordinates). Default corpus transforms keep everything in frame;
/// the extreme ends of the allowed parameter ranges may clip stroke
/// interiors at the border.
const CONTENT_RADIUS: f64 = 0.38;
const MAX_BOW: f64 = 0.05;
const SUBDIVISIONS: usize = 24;

/// Reference size for clearance checks inside templates.
const REFERENCE_EXTENT: f64 = 127.0;
/// Minimum distance, in reference pixels, between a dash tip and any other
/// stroke; closer tips fuse into the crossing line and stop being endpoints.
/// Wide enough to hold up under default jitter.
const TIP_CLEARANCE: f64 = 7.0;

/// Deterministic template for a seed: 6-12 long strokes whose control points
/// stay inside the 10% margin, each broken into dashes the way creases
/// print. Dash tips are the endpoint sites, so a template carries tens of
/// them and one marginal detection barely moves the histograms. Strokes are
/// resampled until their dash tips keep clearance from other strokes, so
/// the declared ground truth stays recoverable.
pub fn generate_template(seed: u64) -> LineTemplate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_strokes = rng.random_range(6..=12usize);
    // Subject signature: two crease-direction bands, a characteristic dash
    // length, and a preferred stroke length. These shape the angle and
    // length histograms differently per palm.
    let band_center = rng.random_range(0.0..std::f64::consts::PI);
    let traits = SubjectTraits {
        band_center,
        band_width: rng.random_range(0.20..0.50),
        second_center: (band_center + rng.random_range(0.9..2.2)).rem_euclid(std::f64::consts::PI),
        second_weight: rng.random_range(0.15..0.45),
        dash_target_px: rng.random_range(13.0..52.0),
        length_bias: rng.random_range(0.0..1.0),
    };
    let mut strokes: Vec<Stroke> = Vec::with_capacity(n_strokes);
    let mut polylines: Vec<Vec<(f64, f64)>> = Vec::with_capacity(n_strokes);
    let mut tips: Vec<(f64, f64)> = Vec::new();

    for _ in 0..n_strokes {
        let mut accepted = None;
        for _attempt in 0..120 {
            let stroke = draw_stroke(&mut rng, &traits);
            let control_px: Vec<(f64, f64)> = stroke
                .control
                .iter()
                .map(|&(x, y)| (x * REFERENCE_EXTENT, y * REFERENCE_EXTENT))
                .collect();
            let poly = sample_polyline(&control_px);
            let mut stroke_tips = Vec::new();
            for &dash in &stroke.dashes {
                let piece = dash_polyline(&poly, dash);
                stroke_tips.push(*piece.first().unwrap());
                stroke_tips.push(*piece.last().unwrap());
            }

            let new_tips_clear = stroke_tips.iter().all(|&t| {
                polylines
                    .iter()
                    .all(|p| polyline_distance(t, p) >= TIP_CLEARANCE)
            });
            let old_tips_clear = tips
                .iter()
                .all(|&t| polyline_distance(t, &poly) >= TIP_CLEARANCE);
            if new_tips_clear && old_tips_clear {
                accepted = Some((stroke, poly, stroke_tips));
                break;
            }
        }
        // A stroke that cannot keep its declared endpoints recoverable is
        // dropped; the ground truth must stay honest.
        if let Some((stroke, poly, stroke_tips)) = accepted {
            strokes.push(stroke);
            polylines.push(poly);
            tips.extend(stroke_tips);
        }
    }
    LineTemplate { seed, strokes }
}

struct SubjectTraits {
    band_center: f64,
    band_width: f64,
    second_center: f64,
    second_weight: f64,
    dash_target_px: f64,
    /// 0 prefers the shortest strokes an offset allows, 1 the longest.
    length_bias: f64,
}

fn draw_stroke(rng: &mut ChaCha8Rng, traits: &SubjectTraits) -> Stroke {
    // A stroke is a bowed chord of the content disc: direction, perpendicular
    // offset, then as much length as the disc allows at that offset. This
    // spreads strokes across the region instead of piling them through the
    // center.
    let u = rng.random::<f64>();
    let spread = rng.random_range(-traits.band_width / 2.0..traits.band_width / 2.0);
    let phi = if u < 0.85 - traits.second_weight {
        (traits.band_center + spread).rem_euclid(std::f64::consts::PI)
    } else if u < 0.85 {
        (traits.second_center + spread).rem_euclid(std::f64::consts::PI)
    } else {
        rng.random_range(0.0..std::f64::consts::PI)
    };
    let dir = (phi.cos(), phi.sin());
    let normal = (-dir.1, dir.0);
    let r_eff = CONTENT_RADIUS - MAX_BOW - 0.02;
    let h = rng.random_range(-0.26..0.26f64);
    let max_half = (r_eff * r_eff - h * h).sqrt() * 0.95;
    let half_len = if max_half <= 0.17 {
        max_half
    } else {
        let lo = 0.17 + (max_half - 0.17) * (traits.length_bias * 0.6);
        let hi = max_half - (max_half - 0.17) * ((1.0 - traits.length_bias) * 0.3);
        rng.random_range(lo..hi.max(lo + 1e-6))
    };
    let len = 2.0 * half_len;
    let slide_max = (max_half - half_len).max(0.0);
    let slide = if slide_max > 0.0 {
        rng.random_range(-slide_max..=slide_max)
    } else {
        0.0
    };
    let center = (
        0.5 + h * normal.0 + slide * dir.0,
        0.5 + h * normal.1 + slide * dir.1,
    );
    let p0 = (center.0 - dir.0 * half_len, center.1 - dir.1 * half_len);
    let p1 = (center.0 + dir.0 * half_len, center.1 + dir.1 * half_len);

    let bow = rng.random_range(-MAX_BOW..MAX_BOW);
    let n_mid = rng.random_range(2..=3usize);
    let mut control = vec![p0];
    for i in 1..=n_mid {
        let t = i as f64 / (n_mid + 1) as f64;
        let along = (p0.0 + (p1.0 - p0.0) * t, p0.1 + (p1.1 - p0.1) * t);
        let amp = bow * (std::f64::consts::PI * t).sin() + rng.random_range(-0.01..0.01);
        control.push((along.0 + normal.0 * amp, along.1 + normal.1 * amp));
    }
    control.push(p1);

    // Gaps must be wide enough that antialiased dash ends cannot bridge
    // them under the local threshold, and every dash must keep at least
    // 14 px of ink after the 10 px gaps so its skeleton outlasts the
    // component filter.
    let stroke_px = len * REFERENCE_EXTENT;
    let n_dashes = ((stroke_px / traits.dash_target_px).round() as usize).clamp(1, 5);
    let n_dashes = n_dashes.min(((stroke_px + 10.0) / 24.0) as usize).max(1);
    let gap = 10.0 / stroke_px;
    let mut dashes = Vec::with_capacity(n_dashes);
    let cell = 1.0 / n_dashes as f64;
    for d in 0..n_dashes {
        let lo = d as f64 * cell + if d == 0 { 0.0 } else { gap / 2.0 };
        let hi = (d + 1) as f64 * cell - if d + 1 == n_dashes { 0.0 } else { gap / 2.0 };
        let wobble = rng.random_range(-0.01..0.01);
        dashes.push((lo, (hi + wobble).min(1.0)));
    }

    Stroke {
        control,
        width: rng.random_range(2.2..3.0),
        intensity: rng.random_range(55.0..105.0),
        dashes,
    }
}

fn polyline_distance(p: (f64, f64), poly: &[(f64, f64)]) -> f64 {
    poly.windows(2)
        .map(|w| point_segment_distance(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

/// Cuts a dense polyline at the arc-length fractions of a dash interval.
/// The cut tips interpolate on the curve, so they are exact under any
/// similarity transform of the polyline.
fn dash_polyline(polyline: &[(f64, f64)], dash: (f64, f64)) -> Vec<(f64, f64)> {
    let mut cumulative = Vec::with_capacity(polyline.len());
    let mut total = 0.0;
    cumulative.push(0.0);
    for seg in polyline.windows(2) {
        total += ((seg[1].0 - seg[0].0).powi(2) + (seg[1].1 - seg[0].1).powi(2)).sqrt();
        cumulative.push(total);
    }
    let at = |target: f64| -> (f64, f64) {
        let target = target.clamp(0.0, total);
        let i = match cumulative.binary_search_by(|c| c.total_cmp(&target)) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1).min(polyline.len() - 2),
        };
        if i + 1 >= polyline.len() {
            return polyline[polyline.len() - 1];
        }
        let span = cumulative[i + 1] - cumulative[i];
        let t = if span == 0.0 {
            0.0
        } else {
            (target - cumulative[i]) / span
        };
        (
            polyline[i].0 + (polyline[i + 1].0 - polyline[i].0) * t,
            polyline[i].1 + (polyline[i + 1].1 - polyline[i].1) * t,
        )
    };

    let (lo, hi) = (dash.0 * total, dash.1 * total);
    let mut out = vec![at(lo)];
    for (i, &p) in polyline.iter().enumerate() {
        if cumulative[i] > lo && cumulative[i] < hi {
            out.push(p);
        }
    }
    out.push(at(hi));
    out
}

/// Catmull-Rom point for one segment.
fn catmull_rom(
    p0: (f64, f64),
    p1: (f64, f64),
    p2: (f64, f64),
    p3: (f64, f64),
    t: f64,
) -> (f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let f = |a: f64, b: f64, c: f64, d: f64| {
        0.5 * (2.0 * b
            + (c - a) * t
            + (2.0 * a - 5.0 * b + 4.0 * c - d) * t2
            + (3.0 * b - a - 3.0 * c + d) * t3)
    };
    (f(p0.0, p1.0, p2.0, p3.0), f(p0.1, p1.1, p2.1, p3.1))
}

/// Densely samples the spline through the control points; the curve passes
/// through every control point, tips included.
fn sample_polyline(control: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let n = control.len();
    let mut out = Vec::with_capacity((n - 1) * SUBDIVISIONS + 1);
    for i in 0..n - 1 {
        let p0 = control[i.saturating_sub(1)];
        let p1 = control[i];
        let p2 = control[i + 1];
        let p3 = control[(i + 2).min(n - 1)];
        for s in 0..SUBDIVISIONS {
            out.push(catmull_rom(p0, p1, p2, p3, s as f64 / SUBDIVISIONS as f64));
        }
    }
    out.push(control[n - 1]);
    out
}

/// A stroke placed in pixel space: dense polyline, width, intensity.
struct PlacedStroke {
    polyline: Vec<(f64, f64)>,
    width: f64,
    intensity: f64,
}

/// Applies jitter and the sample transform to every stroke, then splits it
/// into its dashes. Jitter draws come first and in a fixed order, so two
/// renders from the same seed see identical perturbations regardless of
/// rotation or scale.
fn place_strokes(t: &LineTemplate, p: &SampleParams, rng: &mut ChaCha8Rng) -> Vec<PlacedStroke> {
    let jitter = Normal::new(0.0, p.jitter_sigma).expect("finite sigma");
    let extent = (p.size - 1) as f64;
    let center = extent / 2.0;
    let (sin, cos) = p.rotation_deg.to_radians().sin_cos();

    let mut placed = Vec::new();
    for stroke in &t.strokes {
        let control_px: Vec<(f64, f64)> = stroke
            .control
            .iter()
            .map(|&(x, y)| {
                let jx = jitter.sample(rng);
                let jy = jitter.sample(rng);
                let dx = x * extent + jx - center;
                let dy = y * extent + jy - center;
                (
                    center + p.scale * (dx * cos - dy * sin),
                    center + p.scale * (dx * sin + dy * cos),
                )
            })
            .collect();
        let full = sample_polyline(&control_px);
        for &dash in &stroke.dashes {
            placed.push(PlacedStroke {
                polyline: dash_polyline(&full, dash),
                width: stroke.width,
                intensity: stroke.intensity,
            });
        }
    }
    placed
}

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let (wx, wy) = (p.0 - a.0, p.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((wx * vx + wy * vy) / len2).clamp(0.0, 1.0)
    };
    let (dx, dy) = (wx - t * vx, wy - t * vy);
    (dx * dx + dy * dy).sqrt()
}

/// Minimum distance from each nearby pixel to the stroke, as a buffer.
fn distance_field(stroke: &PlacedStroke, size: u32) -> Vec<f32> {
    let n = size as usize;
    let mut dist = vec![f32::INFINITY; n * n];
    let pad = stroke.width / 2.0 + 1.5;
    for seg in stroke.polyline.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let x0 = ((a.0.min(b.0) - pad).floor().max(0.0)) as usize;
        let x1 = ((a.0.max(b.0) + pad).ceil().min((n - 1) as f64)) as usize;
        let y0 = ((a.1.min(b.1) - pad).floor().max(0.0)) as usize;
        let y1 = ((a.1.max(b.1) + pad).ceil().min((n - 1) as f64)) as usize;
        if a.0.max(b.0) < -pad || a.1.max(b.1) < -pad {
            continue;
        }
        for y in y0..=y1 {
            for x in x0..=x1 {
                let d = point_segment_distance((x as f64, y as f64), a, b) as f32;
                let cell = &mut dist[y * n + x];
                if d < *cell {
                    *cell = d;
                }
            }
        }
    }
    dist
}

/// Renders one sample and returns the image together with the true stroke
/// endpoints after the same transform.
pub fn render_sample(t: &LineTemplate, p: &SampleParams) -> Result<(GrayImage, PointSet)> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let placed = place_strokes(t, p, &mut rng);

    let n = p.size as usize;
    let noise = Normal::new(0.0, p.noise_sigma).expect("finite sigma");
    let mut buf: Vec<f64> = (0..n * n).map(|_| 200.0 + noise.sample(&mut rng)).collect();

    for stroke in &placed {
        let dist = distance_field(stroke, p.size);
        let half = stroke.width / 2.0;
        for (cell, &d) in buf.iter_mut().zip(dist.iter()) {
            let coverage = (half + 0.5 - d as f64).clamp(0.0, 1.0);
            if coverage > 0.0 {
                let shaded = *cell * (1.0 - coverage) + stroke.intensity * coverage;
                if shaded < *cell {
                    *cell = shaded;
                }
            }
        }
    }

    let pixels: Vec<u8> = buf
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    let img = GrayImage::new(p.size, p.size, pixels)?;

    let mut tips = Vec::new();
    for stroke in &placed {
        tips.push(*stroke.polyline.first().unwrap());
        tips.push(*stroke.polyline.last().unwrap());
    }
    Ok((img, PointSet::new(tips)))
}

/// Template tip coordinates in pixel units at the given size, untransformed.
fn template_endpoints_px(t: &LineTemplate, size: u32) -> Vec<(f64, f64)> {
    let extent = (size - 1) as f64;
    let mut tips = Vec::new();
    for s in &t.strokes {
        let control_px: Vec<(f64, f64)> = s
            .control
            .iter()
            .map(|&(x, y)| (x * extent, y * extent))
            .collect();
        let full = sample_polyline(&control_px);
        for &dash in &s.dashes {
            let piece = dash_polyline(&full, dash);
            tips.push(*piece.first().unwrap());
            tips.push(*piece.last().unwrap());
        }
    }
    PointSet::new(tips).as_slice().to_vec()
}

/// Greedy one-to-one matching within `radius`; returns matched / max(|a|,|b|).
pub(crate) fn endpoint_match_fraction(a: &[(f64, f64)], b: &[(f64, f64)], radius: f64) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut pairs = Vec::new();
    for (i, pa) in a.iter().enumerate() {
        for (j, pb) in b.iter().enumerate() {
            let d = ((pa.0 - pb.0).powi(2) + (pa.1 - pb.1).powi(2)).sqrt();
            if d <= radius {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut matched = 0usize;
    for (_, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            matched += 1;
        }
    }
    matched as f64 / a.len().max(b.len()) as f64
}

/// Two templates collide when more than this fraction of their endpoints
/// coincide within 3 px.
const COLLISION_FRACTION: f64 = 0.8;
const TEMPLATE_ATTEMPTS: u64 = 64;

/// RNG stream ids: templates use `subject * TEMPLATE_ATTEMPTS + attempt`,
/// samples use a disjoint block.
const SAMPLE_STREAM_BASE: u64 = 1 << 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSample {
    pub file: String,
    pub session: u8,
    pub rotation: f64,
    pub scale: f64,
    pub endpoints: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSubject {
    pub label: String,
    pub samples: Vec<ManifestSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub seed: u64,
    pub params: SampleParams,
    pub subjects: Vec<ManifestSubject>,
}

/// Writes `root/<subject>/<sample>.png` plus `root/manifest.json` and
/// returns the corresponding dataset. Fully reproducible from the seed:
/// rerunning with the same arguments is byte-identical.
///
/// `base` supplies jitter, noise and size directly; each sample draws its
/// rotation uniformly from [-base.rotation_deg, +base.rotation_deg] and its
/// scale uniformly from [2 - base.scale, base.scale], so the base scale must
/// be at least 1.
pub fn generate_corpus(
    root: impl AsRef<Path>,
    n_subjects: usize,
    samples_per_subject: usize,
    base: &SampleParams,
    seed: u64,
) -> Result<Dataset> {
    let root = root.as_ref();
    if n_subjects < 2 || samples_per_subject < 2 {
        return Err(Error::InvalidParameter(
            "corpus needs at least 2 subjects and 2 samples per subject".into(),
        ));
    }
    base.validate()?;
    if base.scale < 1.0 {
        return Err(Error::InvalidParameter(
            "corpus base scale is the upper end of the symmetric range and must be >= 1".into(),
        ));
    }
    if base.rotation_deg < 0.0 {
        return Err(Error::InvalidParameter(
            "corpus base rotation is a half-range and must be >= 0".into(),
        ));
    }
    std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;

    let mut manifest = CorpusManifest {
        seed,
        params: base.clone(),
        subjects: Vec::with_capacity(n_subjects),
    };
    let mut dataset = Dataset::default();
    let mut accepted_endpoints: Vec<Vec<(f64, f64)>> = Vec::with_capacity(n_subjects);

    for si in 0..n_subjects {
        let label = format!("subject_{:03}", si + 1);

        let mut chosen = None;
        for attempt in 0..TEMPLATE_ATTEMPTS {
            let mut seeder = ChaCha8Rng::seed_from_u64(seed);
            seeder.set_stream(si as u64 * TEMPLATE_ATTEMPTS + attempt);
            let template = generate_template(seeder.next_u64());
            let endpoints = template_endpoints_px(&template, base.size);
            let collides = accepted_endpoints
                .iter()
                .any(|other| endpoint_match_fraction(&endpoints, other, 3.0) > COLLISION_FRACTION);
            if !collides {
                chosen = Some((template, endpoints));
                break;
            }
        }
        let (template, endpoints) = chosen
            .ok_or_else(|| Error::Synthesis(format!("no distinct template found for {label}")))?;
        accepted_endpoints.push(endpoints);

        let subject_dir = root.join(&label);
        std::fs::create_dir_all(&subject_dir).map_err(|e| Error::io(&subject_dir, e))?;

        let mut samples = Vec::with_capacity(samples_per_subject);
        for sj in 0..samples_per_subject {
            let mut srng = ChaCha8Rng::seed_from_u64(seed);
            srng.set_stream(SAMPLE_STREAM_BASE + si as u64 * 1024 + sj as u64);
            let rotation = if base.rotation_deg > 0.0 {
                srng.random_range(-base.rotation_deg..base.rotation_deg)
            } else {
                0.0
            };
            let scale = if base.scale > 1.0 {
                srng.random_range((2.0 - base.scale)..base.scale)
            } else {
                1.0
            };
            let params = SampleParams {
                jitter_sigma: base.jitter_sigma,
                rotation_deg: rotation,
                scale,
                noise_sigma: base.noise_sigma,
                size: base.size,
                seed: srng.next_u64(),
            };
            let (img, truth) = render_sample(&template, &params)?;

            let file_name = format!("sample_{:02}.png", sj + 1);
            let path = subject_dir.join(&file_name);
            let buffer = image::ImageBuffer::<image::Luma<u8>, Vec<u8>>::from_raw(
                img.width(),
                img.height(),
                img.pixels().to_vec(),
            )
            .expect("buffer matches dimensions");
            buffer
                .save(&path)
                .map_err(|e| Error::Synthesis(format!("cannot write {}: {e}", path.display())))?;

            samples.push(ManifestSample {
                file: format!("{label}/{file_name}"),
                session: if sj < samples_per_subject / 2 { 1 } else { 2 },
                rotation,
                scale,
                endpoints: truth.as_slice().to_vec(),
            });
            dataset.entries.push(DatasetEntry {
                label: label.clone(),
                sample_id: format!("sample_{:02}", sj + 1),
                source: SampleSource::ImagePath(path),
            });
        }
        manifest.subjects.push(ManifestSubject { label, samples });
    }

    let manifest_path = root.join("manifest.json");
    let mut json = serde_json::to_string_pretty(&manifest).map_err(|source| Error::Json {
        path: manifest_path.clone(),
        source,
    })?;
    json.push('\n');
    std::fs::write(&manifest_path, json).map_err(|e| Error::io(&manifest_path, e))?;

    Ok(dataset)
}
