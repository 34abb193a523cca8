//! Skeletonization and skeleton cleanup.
//!
//! Thinning peels directional border layers, deleting a pixel only when the
//! 3x3 neighborhood proves the deletion cannot change topology (one
//! foreground 8-component, one background 4-component against the pixel) and
//! the pixel is not a line end. Deletions inside a pass are applied
//! sequentially against the live image, so connectivity is preserved exactly
//! and the result is a fixed point of the procedure.

use crate::imaging::{BinaryImage, NiblackParams, NEIGHBORS_8};

/// Orthogonal peel directions, one border layer per pass.
const DIRECTIONS: [(i64, i64); 4] = [(0, -1), (0, 1), (1, 0), (-1, 0)];

/// Thins a mask to 1-pixel-wide curves. Connected components of the input
/// stay connected, line ends and isolated pixels are never deleted, and the
/// operation is idempotent.
pub fn skeletonize(bin: &BinaryImage) -> BinaryImage {
    let mut img = bin.clone();
    let (w, h) = (img.width(), img.height());
    loop {
        let mut changed = false;
        for (dx, dy) in DIRECTIONS {
            // Border membership is frozen at pass start so each pass peels
            // exactly one layer per direction.
            let mut border = Vec::new();
            for y in 0..h {
                for x in 0..w {
                    if img.get(x, y) && !img.get_signed(x as i64 + dx, y as i64 + dy) {
                        border.push((x, y));
                    }
                }
            }
            for (x, y) in border {
                if img.neighbor_count(x, y) >= 2 && is_simple(&img, x, y) {
                    img.set(x, y, false);
                    changed = true;
                }
            }
        }
        if !changed {
            return img;
        }
    }
}

/// Removes 8-connected components below `min_component` pixels, then prunes
/// branches shorter than `min_spur` pixels off junctions.
pub fn clean(skel: &BinaryImage, p: &NiblackParams) -> BinaryImage {
    let mut img = remove_small_components(skel, p.min_component);
    prune_spurs(&mut img, p.min_spur);
    img
}

/// Deleting (x, y) preserves topology iff its foreground neighbors form one
/// 8-connected component and the background touches the pixel through
/// exactly one 4-connected component.
fn is_simple(img: &BinaryImage, x: u32, y: u32) -> bool {
    let fg = neighborhood(img, x, y);
    foreground_components(&fg) == 1 && background_components_at_pixel(&fg) == 1
}

fn neighborhood(img: &BinaryImage, x: u32, y: u32) -> [bool; 8] {
    let (xi, yi) = (x as i64, y as i64);
    let mut fg = [false; 8];
    for (i, (dx, dy)) in NEIGHBORS_8.iter().enumerate() {
        fg[i] = img.get_signed(xi + dx, yi + dy);
    }
    fg
}

/// Number of distinct curve branches meeting at a pixel: connected runs of
/// foreground neighbors, so a diagonal touch against a straight line does
/// not read as a junction.
fn branch_degree(img: &BinaryImage, x: u32, y: u32) -> usize {
    foreground_components(&neighborhood(img, x, y))
}

/// Number of 8-connected components among the foreground ring cells.
fn foreground_components(fg: &[bool; 8]) -> usize {
    let adjacent = |i: usize, j: usize| {
        let (ax, ay) = NEIGHBORS_8[i];
        let (bx, by) = NEIGHBORS_8[j];
        (ax - bx).abs().max((ay - by).abs()) <= 1
    };
    let mut visited = [false; 8];
    let mut count = 0;
    for start in 0..8 {
        if !fg[start] || visited[start] {
            continue;
        }
        count += 1;
        visited[start] = true;
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for j in 0..8 {
                if fg[j] && !visited[j] && adjacent(i, j) {
                    visited[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    count
}

/// Number of 4-connected background runs on the ring that include an
/// orthogonal neighbor of the center. Ring cells are 4-adjacent exactly when
/// cyclically consecutive; orthogonal positions sit at even ring indices.
fn background_components_at_pixel(fg: &[bool; 8]) -> usize {
    let Some(anchor) = (0..8).find(|&i| fg[i]) else {
        return 0; // no foreground at all; caller rejects via the component count
    };
    let mut count = 0;
    let mut in_run = false;
    let mut run_touches_center = false;
    for step in 1..=8 {
        let i = (anchor + step) % 8;
        if !fg[i] {
            in_run = true;
            if i % 2 == 0 {
                run_touches_center = true;
            }
        } else {
            if in_run && run_touches_center {
                count += 1;
            }
            in_run = false;
            run_touches_center = false;
        }
    }
    count
}

fn remove_small_components(img: &BinaryImage, min_component: usize) -> BinaryImage {
    if min_component <= 1 {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    let mut visited = vec![false; (w as usize) * (h as usize)];
    let idx = |x: u32, y: u32| y as usize * w as usize + x as usize;
    for y in 0..h {
        for x in 0..w {
            if !img.get(x, y) || visited[idx(x, y)] {
                continue;
            }
            let mut component = vec![(x, y)];
            visited[idx(x, y)] = true;
            let mut head = 0;
            while head < component.len() {
                let (cx, cy) = component[head];
                head += 1;
                for (dx, dy) in NEIGHBORS_8 {
                    let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                    if img.get_signed(nx, ny) && !visited[idx(nx as u32, ny as u32)] {
                        visited[idx(nx as u32, ny as u32)] = true;
                        component.push((nx as u32, ny as u32));
                    }
                }
            }
            if component.len() < min_component {
                for (cx, cy) in component {
                    out.set(cx, cy, false);
                }
            }
        }
    }
    out
}

fn prune_spurs(img: &mut BinaryImage, min_spur: usize) {
    if min_spur == 0 {
        return;
    }
    let mut endpoints = Vec::new();
    for y in 0..img.height() {
        for x in 0..img.width() {
            if img.get(x, y) && img.neighbor_count(x, y) == 1 {
                endpoints.push((x, y));
            }
        }
    }
    // Collect every spur against the same snapshot, then delete; branches
    // hanging off one junction do not shadow each other.
    let mut doomed = Vec::new();
    for e in endpoints {
        if let Some(path) = spur_path(img, e, min_spur) {
            doomed.extend(path);
        }
    }
    for (x, y) in doomed {
        img.set(x, y, false);
    }
}

/// Walks from an endpoint along the curve. Returns the walked pixels if a
/// junction is reached before the branch grows to `min_spur` pixels.
fn spur_path(img: &BinaryImage, endpoint: (u32, u32), min_spur: usize) -> Option<Vec<(u32, u32)>> {
    let mut path = vec![endpoint];
    let mut prev: Option<(u32, u32)> = None;
    let mut cur = endpoint;
    loop {
        if path.len() >= min_spur {
            return None;
        }
        let mut next = Vec::new();
        for (dx, dy) in NEIGHBORS_8 {
            let (nx, ny) = (cur.0 as i64 + dx, cur.1 as i64 + dy);
            if img.get_signed(nx, ny) {
                let n = (nx as u32, ny as u32);
                if Some(n) != prev {
                    next.push(n);
                }
            }
        }
        match next.len() {
            0 => return None, // open curve with no junction
            1 => {
                let n = next[0];
                if branch_degree(img, n.0, n.1) >= 3 {
                    return Some(path);
                }
                path.push(n);
                prev = Some(cur);
                cur = n;
            }
            _ => return Some(path), // walked into a junction cluster
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(w: u32, h: u32, pixels: &[(u32, u32)]) -> BinaryImage {
        let mut m = BinaryImage::new(w, h);
        for &(x, y) in pixels {
            m.set(x, y, true);
        }
        m
    }

    /// Independent 8-connected component counter.
    fn component_count(img: &BinaryImage) -> usize {
        let (w, h) = (img.width(), img.height());
        let mut seen = vec![false; (w * h) as usize];
        let idx = |x: u32, y: u32| (y * w + x) as usize;
        let mut count = 0;
        for y in 0..h {
            for x in 0..w {
                if !img.get(x, y) || seen[idx(x, y)] {
                    continue;
                }
                count += 1;
                let mut stack = vec![(x, y)];
                seen[idx(x, y)] = true;
                while let Some((cx, cy)) = stack.pop() {
                    for (dx, dy) in NEIGHBORS_8 {
                        let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                        if img.get_signed(nx, ny) && !seen[idx(nx as u32, ny as u32)] {
                            seen[idx(nx as u32, ny as u32)] = true;
                            stack.push((nx as u32, ny as u32));
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn empty_mask_stays_empty() {
        let m = BinaryImage::new(24, 24);
        assert_eq!(skeletonize(&m), m);
    }

    #[test]
    fn isolated_pixel_survives() {
        let m = mask(16, 16, &[(8, 8)]);
        assert_eq!(skeletonize(&m), m);
    }

    #[test]
    fn thick_bar_thins_to_single_row() {
        let mut m = BinaryImage::new(28, 16);
        for y in 7..10 {
            for x in 4..24 {
                m.set(x, y, true);
            }
        }
        let s = skeletonize(&m);
        // Oracle: every output pixel has at most two neighbors and the
        // component count is preserved.
        for y in 0..16 {
            for x in 0..28 {
                if s.get(x, y) {
                    assert!(s.neighbor_count(x, y) <= 2);
                }
            }
        }
        assert_eq!(component_count(&s), 1);
        let mut occupied_rows = std::collections::HashSet::new();
        let mut count = 0;
        for y in 0..16 {
            for x in 0..28 {
                if s.get(x, y) {
                    occupied_rows.insert(y);
                    count += 1;
                }
            }
        }
        assert_eq!(occupied_rows.len(), 1, "bar should thin to one row");
        assert!(
            (18..=20).contains(&count),
            "unexpected skeleton length {count}"
        );
    }

    #[test]
    fn skeletonize_is_idempotent_and_never_grows() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let mut m = BinaryImage::new(40, 40);
            for _ in 0..4 {
                let cx = rng.random_range(5..35i64);
                let cy = rng.random_range(5..35i64);
                let r = rng.random_range(2..6i64);
                for y in (cy - r).max(0)..(cy + r).min(40) {
                    for x in (cx - r).max(0)..(cx + r).min(40) {
                        if (x - cx).pow(2) + (y - cy).pow(2) <= r * r {
                            m.set(x as u32, y as u32, true);
                        }
                    }
                }
            }
            let once = skeletonize(&m);
            let twice = skeletonize(&once);
            assert_eq!(once, twice, "thinning must be idempotent");
            assert!(once.count_true() <= m.count_true());
            assert_eq!(component_count(&m), component_count(&once));
        }
    }

    #[test]
    fn two_by_two_block_keeps_its_component() {
        let m = mask(16, 16, &[(5, 5), (6, 5), (5, 6), (6, 6)]);
        let s = skeletonize(&m);
        assert!(s.count_true() >= 1);
        assert_eq!(component_count(&s), 1);
    }

    #[test]
    fn clean_removes_small_speck() {
        let mut m = BinaryImage::new(24, 24);
        for x in 2..20 {
            m.set(x, 5, true);
        }
        m.set(2, 15, true);
        m.set(3, 15, true);
        let p = NiblackParams {
            min_component: 5,
            min_spur: 0,
            ..NiblackParams::default()
        };
        let c = clean(&m, &p);
        assert!(!c.get(2, 15) && !c.get(3, 15), "speck should be gone");
        assert!(c.get(2, 5) && c.get(19, 5), "main line should survive");
    }

    #[test]
    fn clean_prunes_short_spur_from_junction() {
        // Horizontal line with a 3-pixel vertical spur at x = 10.
        let mut m = BinaryImage::new(24, 24);
        for x in 2..20 {
            m.set(x, 8, true);
        }
        for y in 5..8 {
            m.set(10, y, true);
        }
        // Oracle: walk branch lengths from the junction. The spur is 3 px,
        // the two arms are 8 and 9 px.
        let p = NiblackParams {
            min_component: 1,
            min_spur: 5,
            ..NiblackParams::default()
        };
        let c = clean(&m, &p);
        for y in 5..8 {
            assert!(!c.get(10, y), "spur pixel (10,{y}) should be pruned");
        }
        for x in 2..20 {
            assert!(c.get(x, 8), "main line pixel ({x},8) should remain");
        }
    }

    #[test]
    fn clean_with_disabled_thresholds_is_identity() {
        let mut m = BinaryImage::new(20, 20);
        m.set(3, 3, true);
        for x in 5..9 {
            m.set(x, 10, true);
        }
        let p = NiblackParams {
            min_component: 1,
            min_spur: 0,
            ..NiblackParams::default()
        };
        assert_eq!(clean(&m, &p), m);
    }

    #[test]
    fn long_branches_survive_spur_pruning() {
        let mut m = BinaryImage::new(24, 24);
        for x in 2..20 {
            m.set(x, 8, true);
        }
        for y in 2..8 {
            m.set(10, y, true); // 6-pixel branch, longer than min_spur
        }
        let p = NiblackParams {
            min_component: 1,
            min_spur: 4,
            ..NiblackParams::default()
        };
        let c = clean(&m, &p);
        assert_eq!(c, m, "branch at min_spur or longer must be kept");
    }
}
