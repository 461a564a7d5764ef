//! Uniform-grid index of polyline segments on the torus for nearest-distance
//! queries.

use std::f64::consts::{PI, TAU};

use crate::flow::{wrap, wrap_signed, TorusPoint};

use super::boundary::BoundaryLoop;

/// Finest cell count per side.
const MAX_CELLS: usize = 4096;
/// Cap on the average number of grid cells registered per edge.
const CELLS_PER_EDGE: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Piece {
    /// Start in `[0, 2 pi)^2`.
    a: [f64; 2],
    /// `b - a` in lifted coordinates.
    d: [f64; 2],
    /// Loop index and edge index within the loop.
    owner: (u8, u32),
}

/// Edges of one or more loops bucketed by the grid cells they pass through,
/// stored in compressed-row form.
pub struct SegmentIndex {
    g: usize,
    cell: f64,
    offsets: Vec<u32>,
    items: Vec<u32>,
    pieces: Vec<Piece>,
    loop_sizes: Vec<usize>,
    /// Offset of each loop's first edge in `pieces`.
    loop_starts: Vec<usize>,
}

fn point_segment_dist(p: [f64; 2], a: [f64; 2], d: [f64; 2]) -> f64 {
    let (px, py) = (p[0] - a[0], p[1] - a[1]);
    let dd = d[0] * d[0] + d[1] * d[1];
    let t = if dd > 0.0 {
        ((px * d[0] + py * d[1]) / dd).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (px - t * d[0]).hypot(py - t * d[1])
}

/// Unwrapped cells crossed by the segment `a -> a + d`, in order.
fn cells_crossed(a: [f64; 2], d: [f64; 2], cell: f64, mut f: impl FnMut(i64, i64)) {
    let (mut i, mut j) = ((a[0] / cell).floor() as i64, (a[1] / cell).floor() as i64);
    let ie = ((a[0] + d[0]) / cell).floor() as i64;
    let je = ((a[1] + d[1]) / cell).floor() as i64;
    let axis = |x: f64, d: f64, k: i64| -> (i64, f64, f64) {
        if d > 0.0 {
            (1, ((k + 1) as f64 * cell - x) / d, cell / d)
        } else if d < 0.0 {
            (-1, (k as f64 * cell - x) / d, -cell / d)
        } else {
            (0, f64::INFINITY, f64::INFINITY)
        }
    };
    let (si, mut ti, dti) = axis(a[0], d[0], i);
    let (sj, mut tj, dtj) = axis(a[1], d[1], j);
    f(i, j);
    // the transition count fixes termination whatever the rounding
    let mut left_i = (ie - i).abs();
    let mut left_j = (je - j).abs();
    while left_i + left_j > 0 {
        if left_j == 0 || (left_i > 0 && ti <= tj) {
            i += si;
            ti += dti;
            left_i -= 1;
        } else {
            j += sj;
            tj += dtj;
            left_j -= 1;
        }
        f(i, j);
    }
}

impl SegmentIndex {
    pub fn build(loops: &[&BoundaryLoop]) -> Self {
        let n_edges: usize = loops.iter().map(|l| l.len()).sum();
        let total_len: f64 = loops.iter().map(|l| l.length()).sum();
        // fine enough that a cell holds a handful of edges, coarse enough
        // that the cell lists stay proportional to the edge count
        let wanted = 2.0 * (n_edges as f64).sqrt();
        let affordable = CELLS_PER_EDGE * (n_edges.max(1) as f64) * TAU / total_len.max(TAU);
        let g = (wanted.min(affordable) as usize).clamp(8, MAX_CELLS);
        let cell = TAU / g as f64;
        let mut pieces = Vec::with_capacity(n_edges);
        let mut loop_starts = Vec::with_capacity(loops.len());
        for (li, l) in loops.iter().enumerate() {
            loop_starts.push(pieces.len());
            for (k, (a, b)) in l.edges().enumerate() {
                pieces.push(Piece {
                    a: [wrap(a[0]), wrap(a[1])],
                    d: [b[0] - a[0], b[1] - a[1]],
                    owner: (li as u8, k as u32),
                });
            }
        }
        let flat = |i: i64, j: i64| j.rem_euclid(g as i64) as usize * g + i.rem_euclid(g as i64) as usize;
        let mut counts = vec![0u32; g * g + 1];
        for p in &pieces {
            cells_crossed(p.a, p.d, cell, |i, j| counts[flat(i, j) + 1] += 1);
        }
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; *counts.last().unwrap() as usize];
        for (pi, p) in pieces.iter().enumerate() {
            cells_crossed(p.a, p.d, cell, |i, j| {
                let f = flat(i, j);
                items[fill[f] as usize] = pi as u32;
                fill[f] += 1;
            });
        }
        SegmentIndex {
            g,
            cell,
            offsets: counts,
            items,
            pieces,
            loop_sizes: loops.iter().map(|l| l.len()).collect(),
            loop_starts,
        }
    }

    /// Number of indexed edges.
    pub fn n_edges(&self) -> usize {
        self.pieces.len()
    }

    fn cell_items(&self, i: i64, j: i64) -> &[u32] {
        let g = self.g as i64;
        let f = j.rem_euclid(g) as usize * self.g + i.rem_euclid(g) as usize;
        &self.items[self.offsets[f] as usize..self.offsets[f + 1] as usize]
    }

    /// Distance from `p` to a piece, over the lifts of `p` nearest to it.
    fn piece_dist(&self, p: [f64; 2], q: &Piece) -> f64 {
        let dx = wrap_signed(p[0] - q.a[0]);
        let dy = wrap_signed(p[1] - q.a[1]);
        let mut best = point_segment_dist([dx, dy], [0.0, 0.0], q.d);
        // the nearest lift can differ when p sits almost antipodal to a
        let reach = self.cell + q.d[0].abs().max(q.d[1].abs());
        if dx.abs() > PI - reach || dy.abs() > PI - reach {
            for sx in [-TAU, 0.0, TAU] {
                for sy in [-TAU, 0.0, TAU] {
                    best = best.min(point_segment_dist([dx + sx, dy + sy], [0.0, 0.0], q.d));
                }
            }
        }
        best
    }

    /// Torus distance from `p` to the union of all indexed segments.
    pub fn distance(&self, p: TorusPoint) -> f64 {
        let x = p.to_array();
        let ci = (x[0] / self.cell).floor() as i64;
        let cj = (x[1] / self.cell).floor() as i64;
        // distance from p to the border of its own cell
        let inner = [
            x[0] - ci as f64 * self.cell,
            (ci + 1) as f64 * self.cell - x[0],
            x[1] - cj as f64 * self.cell,
            (cj + 1) as f64 * self.cell - x[1],
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
        let mut best = f64::INFINITY;
        let max_ring = (self.g / 2 + 1) as i64;
        for ring in 0..=max_ring {
            // every unvisited cell lies outside the block of radius ring - 1
            if ring > 0 && best <= inner + (ring - 1) as f64 * self.cell {
                break;
            }
            let mut visit = |i: i64, j: i64| {
                for &k in self.cell_items(i, j) {
                    best = best.min(self.piece_dist(x, &self.pieces[k as usize]));
                }
            };
            if ring == 0 {
                visit(ci, cj);
                continue;
            }
            for i in ci - ring..=ci + ring {
                visit(i, cj - ring);
                visit(i, cj + ring);
            }
            for j in cj - ring + 1..cj + ring {
                visit(ci - ring, j);
                visit(ci + ring, j);
            }
        }
        best
    }

    /// Count transversal crossings between the sampled edges and any
    /// non-adjacent edge sharing a grid cell with them.
    pub fn crossings_for_edges(&self, sample: &[(u8, u32)]) -> usize {
        let mut hits = 0;
        let mut seen = Vec::new();
        for &(li, k) in sample {
            let pi = self.loop_starts[li as usize] + k as usize;
            let p = &self.pieces[pi];
            seen.clear();
            cells_crossed(p.a, p.d, self.cell, |i, j| {
                for &q in self.cell_items(i, j) {
                    if q as usize != pi && !seen.contains(&q) {
                        seen.push(q);
                    }
                }
            });
            for &q in &seen {
                let other = &self.pieces[q as usize];
                if !self.adjacent(p.owner, other.owner) && crosses(p, other) {
                    hits += 1;
                }
            }
        }
        hits
    }

    fn adjacent(&self, a: (u8, u32), b: (u8, u32)) -> bool {
        if a.0 != b.0 {
            return false;
        }
        let n = self.loop_sizes[a.0 as usize] as i64;
        let d = (a.1 as i64 - b.1 as i64).rem_euclid(n);
        d == 0 || d == 1 || d == n - 1
    }
}

/// Proper intersection of two pieces, with the second translated to the
/// lift nearest the first.
fn crosses(p: &Piece, q: &Piece) -> bool {
    let off = [wrap_signed(q.a[0] - p.a[0]), wrap_signed(q.a[1] - p.a[1])];
    let a = [0.0, 0.0];
    let b = p.d;
    let c = off;
    let d = [off[0] + q.d[0], off[1] + q.d[1]];
    let orient = |o: [f64; 2], u: [f64; 2], v: [f64; 2]| (u[0] - o[0]) * (v[1] - o[1]) - (u[1] - o[1]) * (v[0] - o[0]);
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::boundary::{initial_boundary, push_boundary, RefinementOptions};
    use crate::flow::Schedule;
    use crate::seed;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn strip_distances() {
        let (a, b) = initial_boundary(&RefinementOptions::default()).unwrap();
        let idx = SegmentIndex::build(&[&a, &b]);
        for x2 in [0.0, 1.0, 3.3, 6.2] {
            assert!((idx.distance(TorusPoint::new(PI / 2.0, x2)) - PI / 2.0).abs() < 1e-12);
            assert!((idx.distance(TorusPoint::new(FRAC_PI_4, x2)) - FRAC_PI_4).abs() < 1e-12);
            assert!((idx.distance(TorusPoint::new(TAU - 0.1, x2)) - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_brute_force() {
        let s = Schedule::from_magnitudes(&[2.0, 1.5, 1.0, 0.5]).unwrap();
        let (a, b) = push_boundary(&s, &RefinementOptions::default()).unwrap();
        let idx = SegmentIndex::build(&[&a, &b]);
        let mut rng = seed::stream_rng(1, 0);
        for _ in 0..200 {
            let p = TorusPoint::random(&mut rng);
            let want = idx
                .pieces
                .iter()
                .map(|q| {
                    let mut m = f64::INFINITY;
                    for sx in [-TAU, 0.0, TAU] {
                        for sy in [-TAU, 0.0, TAU] {
                            let pp = [p.x1() + sx, p.x2() + sy];
                            m = m.min(point_segment_dist(pp, q.a, q.d));
                        }
                    }
                    m
                })
                .fold(f64::INFINITY, f64::min);
            assert!((idx.distance(p) - want).abs() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn traversal_covers_sampled_cells() {
        use rand::Rng;
        let mut rng = seed::stream_rng(4, 0);
        let cell = 0.1;
        for _ in 0..500 {
            let a = [rng.random::<f64>() * TAU, rng.random::<f64>() * TAU];
            let d = [rng.random_range(-0.7..0.7), rng.random_range(-0.7..0.7)];
            let mut got = Vec::new();
            cells_crossed(a, d, cell, |i, j| got.push((i, j)));
            // consecutive cells are 4-neighbours
            for w in got.windows(2) {
                assert_eq!((w[0].0 - w[1].0).abs() + (w[0].1 - w[1].1).abs(), 1);
            }
            for k in 0..=2000 {
                let t = k as f64 / 2000.0;
                let c = (((a[0] + t * d[0]) / cell).floor() as i64, ((a[1] + t * d[1]) / cell).floor() as i64);
                assert!(got.contains(&c), "{a:?} {d:?} {c:?}");
            }
        }
    }

    #[test]
    fn crossing_predicate() {
        let mk = |a: [f64; 2], d: [f64; 2]| Piece { a, d, owner: (0, 0) };
        assert!(crosses(&mk([1.0, 1.0], [0.2, 0.2]), &mk([1.0, 1.2], [0.2, -0.2])));
        assert!(!crosses(&mk([1.0, 1.0], [0.2, 0.0]), &mk([1.0, 1.1], [0.2, 0.0])));
        // across the seam
        assert!(crosses(&mk([TAU - 0.1, 1.0], [0.2, 0.0]), &mk([0.0, 0.9], [0.0, 0.2])));
    }

    #[test]
    fn sheared_loops_do_not_cross() {
        let s = Schedule::from_magnitudes(&[3.0, 2.0, 2.5, 1.0]).unwrap();
        let (a, b) = push_boundary(&s, &RefinementOptions::default()).unwrap();
        let idx = SegmentIndex::build(&[&a, &b]);
        let sample: Vec<(u8, u32)> = (0..a.len() as u32).step_by(7).map(|k| (0, k)).collect();
        assert_eq!(idx.crossings_for_edges(&sample), 0);
    }
}
