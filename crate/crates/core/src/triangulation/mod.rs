//! Delaunay triangulation of endpoint sites and per-element measurements.
//!
//! Construction is incremental Bowyer-Watson over a far-away super-triangle
//! with sign-exact predicates. Sites are inserted in lexicographic order, so
//! the triangle set does not depend on detection order, and cocircular
//! configurations are canonicalized by a fixed diagonal preference; the
//! output is fully deterministic for a given site set.

mod bowyer_watson;
mod predicates;

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::imaging::PointSet;

use bowyer_watson::Builder;
use predicates::orient2d;

/// Tolerance on the incircle determinant over coordinates normalized to the
/// bounding square; configurations within it count as cocircular, and points
/// within it of a circle count as outside.
pub const INCIRCLE_EPS: f64 = 1e-10;

/// An undirected segment between two sites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub endpoints: [(f64, f64); 2],
}

impl Edge {
    pub fn new(a: (f64, f64), b: (f64, f64)) -> Self {
        Edge { endpoints: [a, b] }
    }

    /// Euclidean length in pixels.
    pub fn length(&self) -> f64 {
        let [(x1, y1), (x2, y2)] = self.endpoints;
        ((x2 - x1).powi(2) + (y2 - y1).powi(2)).sqrt()
    }

    /// Angle against the positive x axis, reduced to [0, 180) degrees.
    /// Swapping the endpoints leaves the angle unchanged.
    pub fn angle_degrees(&self) -> Result<f64> {
        let [(x1, y1), (x2, y2)] = self.endpoints;
        if x1 == x2 && y1 == y2 {
            return Err(Error::ZeroLengthEdge);
        }
        let deg = (y2 - y1).atan2(x2 - x1).to_degrees();
        // rem_euclid of a tiny negative rounds to exactly 180.0; the extra
        // modulo folds that back to 0.
        Ok(deg.rem_euclid(180.0) % 180.0)
    }
}

/// A triangle given by its vertex coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub vertices: [(f64, f64); 3],
}

impl Triangle {
    pub fn new(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Self {
        Triangle {
            vertices: [a, b, c],
        }
    }

    /// Half the absolute cross product of two edge vectors; 0 for collinear
    /// vertices.
    pub fn area(&self) -> f64 {
        let [(ax, ay), (bx, by), (cx, cy)] = self.vertices;
        ((bx - ax) * (cy - ay) - (by - ay) * (cx - ax)).abs() / 2.0
    }

    /// Inscribed-circle radius, area / semiperimeter.
    pub fn inradius(&self) -> Result<f64> {
        let area = self.area();
        if area == 0.0 {
            return Err(Error::DegenerateTriangle);
        }
        let [a, b, c] = self.vertices;
        let s =
            (Edge::new(a, b).length() + Edge::new(b, c).length() + Edge::new(c, a).length()) / 2.0;
        Ok(area / s)
    }

    /// True iff `p` lies strictly inside the circumcircle, judged by the
    /// incircle determinant over coordinates normalized to the bounding
    /// square of the four points; anything within [`INCIRCLE_EPS`] of the
    /// circle counts as outside.
    pub fn circumcircle_contains(&self, p: (f64, f64)) -> Result<bool> {
        if self.area() == 0.0 {
            return Err(Error::DegenerateTriangle);
        }
        let [a, b, c] = self.vertices;
        let all = [a, b, c, p];
        let min_x = all.iter().map(|q| q.0).fold(f64::INFINITY, f64::min);
        let min_y = all.iter().map(|q| q.1).fold(f64::INFINITY, f64::min);
        let max_x = all.iter().map(|q| q.0).fold(f64::NEG_INFINITY, f64::max);
        let max_y = all.iter().map(|q| q.1).fold(f64::NEG_INFINITY, f64::max);
        let extent = (max_x - min_x).max(max_y - min_y).max(f64::MIN_POSITIVE);
        let n = |q: (f64, f64)| ((q.0 - min_x) / extent, (q.1 - min_y) / extent);

        let (na, nb, nc, np) = (n(a), n(b), n(c), n(p));
        let det = if orient2d(a, b, c) >= 0 {
            incircle_det(na, nb, nc, np)
        } else {
            incircle_det(na, nc, nb, np)
        };
        Ok(det > INCIRCLE_EPS)
    }
}

/// Plain f64 incircle determinant; positive when d is inside the circle
/// through the counterclockwise triple (a, b, c).
fn incircle_det(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> f64 {
    let adx = a.0 - d.0;
    let ady = a.1 - d.1;
    let bdx = b.0 - d.0;
    let bdy = b.1 - d.1;
    let cdx = c.0 - d.0;
    let cdy = c.1 - d.1;
    let alift = adx * adx + ady * ady;
    let blift = bdx * bdx + bdy * bdy;
    let clift = cdx * cdx + cdy * cdy;
    alift * (bdx * cdy - cdx * bdy)
        + blift * (cdx * ady - adx * cdy)
        + clift * (adx * bdy - bdx * ady)
}

/// A Delaunay triangulation over a point set.
///
/// Triangles are vertex-index triples in counterclockwise order, rotated so
/// the smallest index comes first and sorted; edges are deduplicated
/// ascending pairs. Indices refer to positions in `sites`.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    sites: PointSet,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
}

impl Triangulation {
    pub fn sites(&self) -> &PointSet {
        &self.sites
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn triangle(&self, i: usize) -> Triangle {
        let [a, b, c] = self.triangles[i];
        let s = self.sites.as_slice();
        Triangle::new(s[a], s[b], s[c])
    }

    pub fn edge(&self, i: usize) -> Edge {
        let [a, b] = self.edges[i];
        let s = self.sites.as_slice();
        Edge::new(s[a], s[b])
    }

    pub fn iter_triangles(&self) -> impl Iterator<Item = Triangle> + '_ {
        (0..self.triangles.len()).map(|i| self.triangle(i))
    }

    pub fn iter_edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.edges.len()).map(|i| self.edge(i))
    }

    /// Plain-text listing of sites and triangle index triples for external
    /// visualization.
    pub fn to_debug_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("sites {}\n", self.sites.len()));
        for (i, (x, y)) in self.sites.iter().enumerate() {
            out.push_str(&format!("{i} {x} {y}\n"));
        }
        out.push_str(&format!("triangles {}\n", self.triangles.len()));
        for [a, b, c] in &self.triangles {
            out.push_str(&format!("{a} {b} {c}\n"));
        }
        out
    }
}

/// Builds the Delaunay triangulation of the point set.
///
/// Needs at least 3 sites, not all collinear. The result is deterministic:
/// sites are inserted in lexicographic coordinate order and cocircular
/// diagonal choices prefer the diagonal whose lexicographically smallest
/// endpoint is smallest.
pub fn delaunay(points: &PointSet) -> Result<Triangulation> {
    let pts = points.as_slice();
    let n = pts.len();
    if n < 3 {
        return Err(Error::InsufficientSites(n));
    }
    if pts.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::InvalidParameter("non-finite site coordinate".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| cmp_point(pts[i], pts[j]));

    // Collinearity is checked exactly against the line through the two
    // lexicographic extremes.
    let lo = pts[order[0]];
    let hi = pts[order[n - 1]];
    if order.iter().all(|&k| orient2d(lo, hi, pts[k]) == 0) {
        return Err(Error::DegenerateSites);
    }

    let sorted: Vec<(f64, f64)> = order.iter().map(|&i| pts[i]).collect();
    let raw = Builder::new(&sorted).run();
    let mut triangles: Vec<[usize; 3]> = raw
        .iter()
        .map(|t| [order[t[0]], order[t[1]], order[t[2]]])
        .collect();

    canonicalize_cocircular(&mut triangles, pts);

    for t in &mut triangles {
        rotate_min_first(t);
    }
    triangles.sort_unstable();

    let mut edge_set = BTreeSet::new();
    for &[a, b, c] in &triangles {
        for [u, w] in [[a, b], [b, c], [c, a]] {
            edge_set.insert([u.min(w), u.max(w)]);
        }
    }

    Ok(Triangulation {
        sites: points.clone(),
        triangles,
        edges: edge_set.into_iter().collect(),
    })
}

fn cmp_point(a: (f64, f64), b: (f64, f64)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1))
}

/// Rotates the triple so the smallest index leads, preserving cyclic
/// (counterclockwise) order.
fn rotate_min_first(t: &mut [usize; 3]) {
    let k = (0..3).min_by_key(|&i| t[i]).unwrap();
    t.rotate_left(k);
}

/// Enforces the cocircular tie-break: wherever the quad around an interior
/// edge is cocircular within [`INCIRCLE_EPS`] (over normalized coordinates),
/// the diagonal whose lexicographically smallest endpoint is smallest wins.
/// Every flip strictly lowers that key, so the sweep terminates.
fn canonicalize_cocircular(triangles: &mut [[usize; 3]], pts: &[(f64, f64)]) {
    let min_x = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let min_y = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let max_x = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let max_y = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let extent = (max_x - min_x).max(max_y - min_y).max(f64::MIN_POSITIVE);
    let norm = |i: usize| ((pts[i].0 - min_x) / extent, (pts[i].1 - min_y) / extent);

    let mut guard = 0usize;
    'sweep: loop {
        guard += 1;
        if guard > 10_000 {
            debug_assert!(false, "cocircular canonicalization did not settle");
            return;
        }

        // Interior edges with their two flanking triangles.
        let mut by_edge: std::collections::BTreeMap<[usize; 2], Vec<(usize, usize)>> =
            std::collections::BTreeMap::new();
        for (ti, &[a, b, c]) in triangles.iter().enumerate() {
            for (u, w, opp) in [(a, b, c), (b, c, a), (c, a, b)] {
                by_edge
                    .entry([u.min(w), u.max(w)])
                    .or_default()
                    .push((ti, opp));
            }
        }

        for ([a, b], flank) in &by_edge {
            if flank.len() != 2 {
                continue;
            }
            let (t1, c) = flank[0];
            let (t2, d) = flank[1];
            let (a, b, c, d) = (*a, *b, c, d);

            let det = incircle_det(norm(a), norm(b), norm(c), norm(d));
            if det.abs() > INCIRCLE_EPS {
                continue;
            }
            // Strict convexity: the new diagonal must properly cross the old.
            if orient2d(pts[c], pts[d], pts[a]) * orient2d(pts[c], pts[d], pts[b]) >= 0 {
                continue;
            }
            let cur_key = min_point(pts[a], pts[b]);
            let new_key = min_point(pts[c], pts[d]);
            if cmp_point(new_key, cur_key) == std::cmp::Ordering::Less {
                triangles[t1] = ccw_triple(pts, [a, c, d]);
                triangles[t2] = ccw_triple(pts, [b, c, d]);
                continue 'sweep;
            }
        }
        return;
    }
}

fn min_point(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    if cmp_point(a, b) == std::cmp::Ordering::Greater {
        b
    } else {
        a
    }
}

fn ccw_triple(pts: &[(f64, f64)], mut t: [usize; 3]) -> [usize; 3] {
    if orient2d(pts[t[0]], pts[t[1]], pts[t[2]]) < 0 {
        t.swap(1, 2);
    }
    t
}
