//! Local adaptive thresholding.

use crate::error::{Error, Result};
use crate::imaging::{BinaryImage, GrayImage, NiblackParams};

/// Binarizes with a per-pixel threshold T = mean + k * stddev computed over
/// the window centered on the pixel, with image borders replicated so every
/// pixel sees a full window.
///
/// With the default polarity a pixel is a line pixel iff its intensity is
/// strictly below T; `invert` flips the comparison for bright-line corpora.
pub fn niblack_binarize(img: &GrayImage, p: &NiblackParams) -> Result<BinaryImage> {
    p.validate()?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if p.window > w || p.window > h {
        return Err(Error::WindowTooLarge {
            window: p.window,
            width: img.width(),
            height: img.height(),
        });
    }

    let r = p.window / 2;
    let (pw, ph) = (w + 2 * r, h + 2 * r);

    // Integral images over the replicated-border extension. Sums of u8
    // pixels and their squares stay well inside u64.
    let mut sum = vec![0u64; (pw + 1) * (ph + 1)];
    let mut sq = vec![0u64; (pw + 1) * (ph + 1)];
    let stride = pw + 1;
    for py in 0..ph {
        let src_y = (py as i64 - r as i64).clamp(0, h as i64 - 1) as usize;
        for px in 0..pw {
            let src_x = (px as i64 - r as i64).clamp(0, w as i64 - 1) as usize;
            let v = img.pixels()[src_y * w + src_x] as u64;
            let idx = (py + 1) * stride + (px + 1);
            sum[idx] = v + sum[idx - 1] + sum[idx - stride] - sum[idx - stride - 1];
            sq[idx] = v * v + sq[idx - 1] + sq[idx - stride] - sq[idx - stride - 1];
        }
    }

    let area = (p.window * p.window) as f64;
    let window_sum = |table: &[u64], x: usize, y: usize| -> u64 {
        // Window top-left in padded coordinates is exactly (x, y).
        let (x0, y0) = (x, y);
        let (x1, y1) = (x + p.window, y + p.window);
        table[y1 * stride + x1] + table[y0 * stride + x0]
            - table[y0 * stride + x1]
            - table[y1 * stride + x0]
    };

    let mut out = BinaryImage::new(img.width(), img.height());
    for y in 0..h {
        for x in 0..w {
            let s = window_sum(&sum, x, y) as f64;
            let s2 = window_sum(&sq, x, y) as f64;
            let mean = s / area;
            let var = (s2 / area - mean * mean).max(0.0);
            let std = var.sqrt();
            let value = img.pixels()[y * w + x] as f64;
            let is_line = if p.invert {
                value > mean - p.k * std
            } else {
                value < mean + p.k * std
            };
            if is_line {
                out.set(x as u32, y as u32, true);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(w: u32, h: u32, f: impl Fn(u32, u32) -> u8) -> GrayImage {
        let mut px = Vec::with_capacity((w * h) as usize);
        for y in 0..h {
            for x in 0..w {
                px.push(f(x, y));
            }
        }
        GrayImage::new(w, h, px).unwrap()
    }

    /// Direct-summation oracle: recompute mean and stddev per window over the
    /// replicated border, then apply the threshold.
    fn oracle(img: &GrayImage, p: &NiblackParams) -> BinaryImage {
        let r = p.window as i64 / 2;
        let (w, h) = (img.width() as i64, img.height() as i64);
        let mut out = BinaryImage::new(img.width(), img.height());
        for y in 0..h {
            for x in 0..w {
                let mut vals = Vec::new();
                for dy in -r..=r {
                    for dx in -r..=r {
                        let sx = (x + dx).clamp(0, w - 1) as u32;
                        let sy = (y + dy).clamp(0, h - 1) as u32;
                        vals.push(img.get(sx, sy) as f64);
                    }
                }
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                let t = mean + p.k * var.sqrt();
                let v = img.get(x as u32, y as u32) as f64;
                let line = if p.invert {
                    v > mean - p.k * var.sqrt()
                } else {
                    v < t
                };
                out.set(x as u32, y as u32, line);
            }
        }
        out
    }

    #[test]
    fn constant_image_yields_empty_mask() {
        let img = gray(32, 32, |_, _| 128);
        let p = NiblackParams::default();
        let mask = niblack_binarize(&img, &p).unwrap();
        assert_eq!(mask.count_true(), 0);
    }

    #[test]
    fn constant_image_is_empty_for_any_negative_k() {
        for k in [-0.01, -0.2, -0.5, -2.0] {
            let img = gray(24, 24, |_, _| 7);
            let p = NiblackParams {
                k,
                ..NiblackParams::default()
            };
            assert_eq!(niblack_binarize(&img, &p).unwrap().count_true(), 0);
        }
    }

    #[test]
    fn dark_row_on_bright_field_is_detected_and_matches_oracle() {
        let img = gray(40, 40, |_, y| if y == 20 { 0 } else { 255 });
        let p = NiblackParams::default();
        let mask = niblack_binarize(&img, &p).unwrap();
        for x in 0..40 {
            assert!(mask.get(x, 20), "dark row pixel {x} not marked");
        }
        let expect = oracle(&img, &p);
        assert_eq!(mask, expect);
    }

    #[test]
    fn bright_line_is_ignored_unless_inverted() {
        let img = gray(40, 40, |_, y| if y == 20 { 255 } else { 0 });
        let p = NiblackParams::default();
        let mask = niblack_binarize(&img, &p).unwrap();
        for x in 0..40 {
            assert!(!mask.get(x, 20), "bright line wrongly detected at {x}");
        }

        let inv = NiblackParams { invert: true, ..p };
        let mask = niblack_binarize(&img, &inv).unwrap();
        for x in 0..40 {
            assert!(
                mask.get(x, 20),
                "inverted polarity missed bright line at {x}"
            );
        }
    }

    #[test]
    fn random_image_matches_direct_summation_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut px = vec![0u8; 33 * 29];
        rng.fill(&mut px[..]);
        let img = GrayImage::new(33, 29, px).unwrap();
        for window in [3, 7, 15] {
            let p = NiblackParams {
                window,
                ..NiblackParams::default()
            };
            assert_eq!(niblack_binarize(&img, &p).unwrap(), oracle(&img, &p));
        }
    }

    #[test]
    fn oversized_window_is_rejected() {
        let img = gray(20, 20, |_, _| 0);
        let p = NiblackParams {
            window: 21,
            ..NiblackParams::default()
        };
        assert!(matches!(
            niblack_binarize(&img, &p),
            Err(Error::WindowTooLarge { .. })
        ));
    }

    #[test]
    fn even_or_tiny_window_is_rejected() {
        let img = gray(20, 20, |_, _| 0);
        for window in [2, 4, 1] {
            let p = NiblackParams {
                window,
                ..NiblackParams::default()
            };
            assert!(niblack_binarize(&img, &p).is_err());
        }
    }
}
