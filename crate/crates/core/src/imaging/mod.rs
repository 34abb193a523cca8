//! Raster types and the palm-line extraction stages.
//!
//! A grayscale input is binarized with a local Niblack threshold, thinned to a
//! 1-pixel skeleton, cleaned of speckle and short spurs, and reduced to the
//! set of line endpoints that seed the triangulation.

mod niblack;
mod thin;

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use niblack::niblack_binarize;
pub use thin::{clean, skeletonize};

/// Smallest accepted image side; local windows need some room to work with.
pub const MIN_IMAGE_SIDE: u32 = 16;

/// An 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width < MIN_IMAGE_SIDE || height < MIN_IMAGE_SIDE {
            return Err(Error::ImageTooSmall { width, height });
        }
        if pixels.len() != (width as usize) * (height as usize) {
            return Err(Error::PixelCountMismatch {
                width,
                height,
                got: pixels.len(),
            });
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    /// Loads a PGM or PNG image, rejecting anything deeper than 8 bits.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::load_with(path, false)
    }

    /// Loads an image; with `downconvert_16bit` set, 16-bit inputs are
    /// reduced to their high byte instead of being rejected.
    pub fn load_with(path: impl AsRef<Path>, downconvert_16bit: bool) -> Result<Self> {
        use image::DynamicImage;

        let path = path.as_ref();
        let dynamic = image::open(path).map_err(|e| match e {
            // A truncated or empty file surfaces as an I/O error from the
            // decoder; only genuine filesystem failures stay Io.
            image::ImageError::IoError(source)
                if matches!(
                    source.kind(),
                    std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied
                ) =>
            {
                Error::io(path, source)
            }
            other => Error::UnsupportedFormat {
                path: path.to_path_buf(),
                detail: other.to_string(),
            },
        })?;

        let deep = matches!(
            dynamic,
            DynamicImage::ImageLuma16(_)
                | DynamicImage::ImageLumaA16(_)
                | DynamicImage::ImageRgb16(_)
                | DynamicImage::ImageRgba16(_)
                | DynamicImage::ImageRgb32F(_)
                | DynamicImage::ImageRgba32F(_)
        );
        if deep && !downconvert_16bit {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                detail: "more than 8 bits per channel (set downconvert_16bit to accept)".into(),
            });
        }

        let luma = if deep {
            // Keep the high byte of each 16-bit luminance sample.
            let wide = dynamic.into_luma16();
            let (w, h) = wide.dimensions();
            let narrow: Vec<u8> = wide.into_raw().iter().map(|&v| (v >> 8) as u8).collect();
            image::GrayImage::from_raw(w, h, narrow).expect("buffer matches dimensions")
        } else {
            dynamic.into_luma8()
        };
        let (width, height) = luma.dimensions();
        if width == 0 || height == 0 {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                detail: "zero-dimension image".into(),
            });
        }
        GrayImage::new(width, height, luma.into_raw())
    }

    /// Writes a binary (P5) PGM.
    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut data = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        data.extend_from_slice(&self.pixels);
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&data))
            .map_err(|e| Error::io(path, e))
    }
}

/// A boolean mask over the same grid as its source image; `true` marks line
/// pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: u32, height: u32) -> Self {
        BinaryImage {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width as usize * height as usize {
            return Err(Error::PixelCountMismatch {
                width,
                height,
                got: bits.len(),
            });
        }
        Ok(BinaryImage {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = value;
    }

    /// `false` for out-of-bounds coordinates.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            false
        } else {
            self.bits[y as usize * self.width as usize + x as usize]
        }
    }

    pub fn count_true(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Number of `true` 8-neighbors of (x, y).
    pub fn neighbor_count(&self, x: u32, y: u32) -> usize {
        let (xi, yi) = (x as i64, y as i64);
        NEIGHBORS_8
            .iter()
            .filter(|(dx, dy)| self.get_signed(xi + dx, yi + dy))
            .count()
    }

    /// Writes the mask as a P5 PGM with lines white on black.
    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut data = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        data.extend(self.bits.iter().map(|&b| if b { 255u8 } else { 0u8 }));
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&data))
            .map_err(|e| Error::io(path, e))
    }
}

/// 8-neighborhood offsets in clockwise order starting north.
pub(crate) const NEIGHBORS_8: [(i64, i64); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

/// Parameters for binarization and skeleton cleanup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NiblackParams {
    /// Odd side length of the local threshold window.
    pub window: usize,
    /// Threshold coefficient; negative picks up pixels darker than the local
    /// mean.
    pub k: f64,
    /// Connected components smaller than this many pixels are removed.
    pub min_component: usize,
    /// Skeleton branches shorter than this many pixels are pruned off
    /// junctions.
    pub min_spur: usize,
    /// Flip polarity for corpora with bright lines on dark skin.
    pub invert: bool,
}

impl Default for NiblackParams {
    fn default() -> Self {
        NiblackParams {
            window: 15,
            k: -0.2,
            min_component: 10,
            min_spur: 4,
            invert: false,
        }
    }
}

impl NiblackParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "window must be odd and >= 3, got {}",
                self.window
            )));
        }
        if self.min_component < 1 {
            return Err(Error::InvalidParameter("min_component must be >= 1".into()));
        }
        if !self.k.is_finite() {
            return Err(Error::InvalidParameter("k must be finite".into()));
        }
        Ok(())
    }
}

/// A set of planar points with exact duplicates removed.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<(f64, f64)>,
}

impl PointSet {
    /// Keeps the first occurrence of each coordinate pair; equality is exact
    /// (with -0.0 folded onto 0.0).
    pub fn new(points: Vec<(f64, f64)>) -> Self {
        let mut seen = HashSet::with_capacity(points.len());
        let mut unique = Vec::with_capacity(points.len());
        for (x, y) in points {
            let key = ((x + 0.0).to_bits(), (y + 0.0).to_bits());
            if seen.insert(key) {
                unique.push((x, y));
            }
        }
        PointSet { points: unique }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn as_slice(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn iter(&self) -> impl Iterator<Item = &(f64, f64)> {
        self.points.iter()
    }
}

/// Returns the skeleton pixels with exactly one `true` 8-neighbor, as
/// (column, row) coordinates. Isolated pixels are not endpoints.
pub fn detect_endpoints(skel: &BinaryImage) -> PointSet {
    let mut points = Vec::new();
    for y in 0..skel.height() {
        for x in 0..skel.width() {
            if skel.get(x, y) && skel.neighbor_count(x, y) == 1 {
                points.push((x as f64, y as f64));
            }
        }
    }
    PointSet::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_from_rows(rows: &[&str]) -> BinaryImage {
        let height = rows.len() as u32;
        let width = rows[0].len() as u32;
        let mut m = BinaryImage::new(width, height);
        for (y, row) in rows.iter().enumerate() {
            for (x, c) in row.chars().enumerate() {
                if c == '#' {
                    m.set(x as u32, y as u32, true);
                }
            }
        }
        m
    }

    #[test]
    fn gray_image_rejects_tiny_and_mismatched_buffers() {
        assert!(matches!(
            GrayImage::new(8, 8, vec![0; 64]),
            Err(Error::ImageTooSmall { .. })
        ));
        assert!(matches!(
            GrayImage::new(16, 16, vec![0; 10]),
            Err(Error::PixelCountMismatch { .. })
        ));
        assert!(GrayImage::new(16, 16, vec![0; 256]).is_ok());
    }

    #[test]
    fn load_round_trips_a_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ramp.pgm");
        let pixels: Vec<u8> = (0..128u32 * 128).map(|i| (i % 256) as u8).collect();
        let img = GrayImage::new(128, 128, pixels.clone()).unwrap();
        img.write_pgm(&path).unwrap();

        let back = GrayImage::load(&path).unwrap();
        assert_eq!(back.width(), 128);
        assert_eq!(back.height(), 128);
        assert_eq!(back.pixels(), &pixels[..]);
    }

    #[test]
    fn load_rejects_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.pgm");
        std::fs::write(&path, b"").unwrap();
        assert!(matches!(
            GrayImage::load(&path),
            Err(Error::UnsupportedFormat { .. })
        ));
    }

    #[test]
    fn load_missing_file_is_io_error() {
        assert!(matches!(
            GrayImage::load("/nonexistent/nowhere.png"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn sixteen_bit_png_errors_unless_downconversion_is_allowed() {
        // Oracle: write a known 16-bit ramp, reload, and compare against the
        // high byte of every sample.
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("deep.png");
        let buf = image::ImageBuffer::from_fn(32, 32, |x, y| {
            image::Luma([(x as u16 * 2048).wrapping_add(y as u16 * 17)])
        });
        buf.save(&path).unwrap();

        assert!(matches!(
            GrayImage::load(&path),
            Err(Error::UnsupportedFormat { .. })
        ));

        let img = GrayImage::load_with(&path, true).unwrap();
        for y in 0..32u32 {
            for x in 0..32u32 {
                let expected = ((x as u16 * 2048).wrapping_add(y as u16 * 17) >> 8) as u8;
                assert_eq!(img.get(x, y), expected, "at ({x},{y})");
            }
        }
    }

    #[test]
    fn point_set_deduplicates_exact_coordinates() {
        let ps = PointSet::new(vec![
            (1.0, 2.0),
            (3.0, 4.0),
            (1.0, 2.0),
            (-0.0, 0.0),
            (0.0, -0.0),
        ]);
        assert_eq!(ps.len(), 3);
        assert_eq!(ps.as_slice()[0], (1.0, 2.0));
    }

    #[test]
    fn endpoints_of_open_segment() {
        let mut m = BinaryImage::new(20, 7);
        for x in 5..15 {
            m.set(x, 3, true);
        }
        let eps = detect_endpoints(&m);
        assert_eq!(eps.len(), 2);
        assert!(eps.as_slice().contains(&(5.0, 3.0)));
        assert!(eps.as_slice().contains(&(14.0, 3.0)));
    }

    #[test]
    fn endpoints_of_closed_ring_are_absent() {
        let m = mask_from_rows(&[
            "........", ".######.", ".#....#.", ".#....#.", ".######.", "........",
        ]);
        assert_eq!(detect_endpoints(&m).len(), 0);
    }

    #[test]
    fn endpoints_of_cross() {
        // Oracle: count 8-neighbors of every pixel directly.
        let m = mask_from_rows(&[
            "....#....",
            "....#....",
            "....#....",
            "....#....",
            "#########",
            "....#....",
            "....#....",
            "....#....",
            "....#....",
        ]);
        let eps = detect_endpoints(&m);
        assert_eq!(eps.len(), 4);
        for &(x, y) in eps.as_slice() {
            assert_eq!(m.neighbor_count(x as u32, y as u32), 1);
        }
        let expected = [(4.0, 0.0), (4.0, 8.0), (0.0, 4.0), (8.0, 4.0)];
        for p in expected {
            assert!(eps.as_slice().contains(&p), "missing {p:?}");
        }
    }

    #[test]
    fn isolated_pixel_is_not_an_endpoint() {
        let mut m = BinaryImage::new(16, 16);
        m.set(8, 8, true);
        assert_eq!(detect_endpoints(&m).len(), 0);
    }

    #[test]
    fn endpoint_set_translates_with_content() {
        let mut a = BinaryImage::new(32, 32);
        for i in 0..6 {
            a.set(4 + i, 4 + i, true);
        }
        let mut b = BinaryImage::new(32, 32);
        for i in 0..6 {
            b.set(9 + i, 11 + i, true);
        }
        let ea = detect_endpoints(&a);
        let eb = detect_endpoints(&b);
        let shifted: Vec<_> = ea.iter().map(|&(x, y)| (x + 5.0, y + 7.0)).collect();
        assert_eq!(shifted, eb.as_slice());
    }
}
