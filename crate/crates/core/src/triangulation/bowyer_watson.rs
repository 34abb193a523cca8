//! Incremental Bowyer-Watson construction.
//!
//! Sites are inserted one at a time into a super-triangle placed far outside
//! the site bounding box. Each insertion carves out the cavity of triangles
//! whose circumcircle contains the new site and fans new triangles from the
//! site to the cavity boundary. All predicate decisions are sign-exact, so
//! the result is the Delaunay triangulation of the inserted coordinates;
//! cocircular ties fall wherever insertion order puts them and are
//! canonicalized afterwards.

use std::collections::HashMap;

use crate::triangulation::predicates::{incircle, orient2d, Point};

const NONE: usize = usize::MAX;

/// Super-triangle reach as a multiple of the site bounding-box extent.
const SUPER_SCALE: f64 = 1.0e8;

#[derive(Debug, Clone)]
struct Tri {
    /// Vertex indices, counterclockwise.
    v: [usize; 3],
    /// nbr[i] lies across the edge opposite v[i].
    nbr: [usize; 3],
    alive: bool,
}

pub(crate) struct Builder {
    pts: Vec<Point>,
    site_count: usize,
    tris: Vec<Tri>,
    last_alive: usize,
}

impl Builder {
    /// Sites must be deduplicated and not all collinear.
    pub(crate) fn new(sites: &[Point]) -> Self {
        let n = sites.len();
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in sites {
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
        }
        let cx = (min_x + max_x) / 2.0;
        let cy = (min_y + max_y) / 2.0;
        let extent = (max_x - min_x).max(max_y - min_y).max(f64::MIN_POSITIVE);
        let reach = extent * SUPER_SCALE;

        let mut pts = sites.to_vec();
        pts.push((cx - reach, cy - reach));
        pts.push((cx + reach, cy - reach));
        pts.push((cx, cy + reach));

        let tris = vec![Tri {
            v: [n, n + 1, n + 2],
            nbr: [NONE; 3],
            alive: true,
        }];
        Builder {
            pts,
            site_count: n,
            tris,
            last_alive: 0,
        }
    }

    /// Inserts every site in index order and returns the triangles made of
    /// real sites only, still in builder index space.
    pub(crate) fn run(mut self) -> Vec<[usize; 3]> {
        for i in 0..self.site_count {
            self.insert(i);
        }
        self.tris
            .iter()
            .filter(|t| t.alive && t.v.iter().all(|&v| v < self.site_count))
            .map(|t| t.v)
            .collect()
    }

    fn insert(&mut self, p: usize) {
        let seed = self.locate(self.pts[p]);
        let cavity = self.cavity(seed, self.pts[p]);
        self.fill(p, &cavity);
    }

    /// Straight walk toward the point; terminates on Delaunay triangulations.
    fn locate(&self, p: Point) -> usize {
        let mut t = self.last_alive;
        debug_assert!(self.tris[t].alive);
        loop {
            let tri = &self.tris[t];
            let mut next = None;
            for i in 0..3 {
                let u = tri.v[(i + 1) % 3];
                let w = tri.v[(i + 2) % 3];
                if orient2d(self.pts[u], self.pts[w], p) < 0 {
                    next = Some(tri.nbr[i]);
                    break;
                }
            }
            match next {
                Some(n) => {
                    assert!(n != NONE, "site outside the super-triangle");
                    t = n;
                }
                None => return t,
            }
        }
    }

    /// All triangles whose circumcircle strictly contains p, grown from the
    /// triangle that contains p.
    fn cavity(&self, seed: usize, p: Point) -> Vec<usize> {
        debug_assert!(self.in_circumcircle(seed, p), "seed must be in cavity");
        let mut visited = vec![false; self.tris.len()];
        let mut cavity = vec![seed];
        let mut stack = vec![seed];
        visited[seed] = true;
        while let Some(t) = stack.pop() {
            for i in 0..3 {
                let n = self.tris[t].nbr[i];
                if n == NONE || visited[n] {
                    continue;
                }
                visited[n] = true;
                if self.in_circumcircle(n, p) {
                    cavity.push(n);
                    stack.push(n);
                }
            }
        }
        cavity
    }

    fn in_circumcircle(&self, t: usize, p: Point) -> bool {
        let [a, b, c] = self.tris[t].v;
        incircle(self.pts[a], self.pts[b], self.pts[c], p) > 0
    }

    /// Replaces the cavity with a fan of triangles around p.
    fn fill(&mut self, p: usize, cavity: &[usize]) {
        let mut in_cavity = vec![false; self.tris.len()];
        for &t in cavity {
            in_cavity[t] = true;
        }

        // Directed boundary edges (u, w) with the surviving outer neighbor.
        let mut boundary = Vec::new();
        for &t in cavity {
            for i in 0..3 {
                let outer = self.tris[t].nbr[i];
                if outer == NONE || !in_cavity[outer] {
                    let u = self.tris[t].v[(i + 1) % 3];
                    let w = self.tris[t].v[(i + 2) % 3];
                    boundary.push((u, w, outer));
                }
            }
        }
        for &t in cavity {
            self.tris[t].alive = false;
        }

        // One new triangle (p, u, w) per boundary edge. p is strictly left of
        // every boundary edge, so the triple is counterclockwise.
        let mut starts: HashMap<usize, usize> = HashMap::new();
        let mut ends: HashMap<usize, usize> = HashMap::new();
        let mut first_new = NONE;
        for &(u, w, outer) in &boundary {
            let id = self.tris.len();
            self.tris.push(Tri {
                v: [p, u, w],
                nbr: [outer, NONE, NONE],
                alive: true,
            });
            if first_new == NONE {
                first_new = id;
            }
            if outer != NONE {
                let o = &mut self.tris[outer];
                for i in 0..3 {
                    let ou = o.v[(i + 1) % 3];
                    let ow = o.v[(i + 2) % 3];
                    if ou == w && ow == u {
                        o.nbr[i] = id;
                        break;
                    }
                }
            }
            // Fan stitching: edge (w, p) meets the triangle whose boundary
            // edge starts at w; edge (p, u) meets the one ending at u.
            if let Some(&succ) = starts.get(&w) {
                self.tris[id].nbr[1] = succ;
                self.tris[succ].nbr[2] = id;
            }
            if let Some(&pred) = ends.get(&u) {
                self.tris[id].nbr[2] = pred;
                self.tris[pred].nbr[1] = id;
            }
            starts.insert(u, id);
            ends.insert(w, id);
        }
        debug_assert!(first_new != NONE);
        self.last_alive = first_new;
    }
}
