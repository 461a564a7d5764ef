//! Images of the two boundary circles of the strip `0 < x1 < pi`, tracked as
//! adaptive polylines in lifted coordinates.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::flow::{shear_lifted, wrap, Schedule, ShearStep};

/// Default refinement tolerance on the chord-midpoint deviation.
pub const DEFAULT_REFINEMENT_TOL: f64 = 1e-3;
/// Maximum bisection depth below the initial sampling.
pub const DEFAULT_DEPTH_CAP: u8 = 24;
/// Vertex budget of each loop.
pub const DEFAULT_VERTEX_BUDGET: usize = 10_000_000;
/// Vertices per circle before any step.
pub const DEFAULT_INITIAL_VERTICES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementOptions {
    pub tol: f64,
    pub depth_cap: u8,
    pub vertex_budget: usize,
    pub initial_vertices: usize,
}

impl Default for RefinementOptions {
    fn default() -> Self {
        RefinementOptions {
            tol: DEFAULT_REFINEMENT_TOL,
            depth_cap: DEFAULT_DEPTH_CAP,
            vertex_budget: DEFAULT_VERTEX_BUDGET,
            initial_vertices: DEFAULT_INITIAL_VERTICES,
        }
    }
}

impl RefinementOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(invalid("refinement tolerance must be positive"));
        }
        if self.initial_vertices < 16 {
            return Err(invalid("each loop needs at least 16 initial vertices"));
        }
        if self.vertex_budget < self.initial_vertices {
            return Err(invalid("vertex budget below the initial sampling"));
        }
        Ok(())
    }
}

/// Closed polyline image of the circle `{x1 = c}`.
///
/// Vertex `k` stores its lifted position in `R^2` and the parameter `s` (the
/// initial `x2`) it came from. The lifted curve satisfies
/// `gamma(s + 2 pi) = gamma(s) + (0, 2 pi)`, so the closing edge runs from the
/// last vertex to the first one translated by `(0, 2 pi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryLoop {
    c: f64,
    pos: Vec<[f64; 2]>,
    s: Vec<f64>,
    level: Vec<u8>,
    refinement_tol: f64,
    /// Edges left unrefined because the depth cap was reached.
    capped_edges: usize,
}

/// Deck translation carried by the closing edge.
pub const DECK: [f64; 2] = [0.0, TAU];

fn map_lifted(mut p: [f64; 2], steps: &[ShearStep]) -> [f64; 2] {
    for s in steps {
        let (a, b) = shear_lifted(p[0], p[1], s.direction(), s.tau());
        p = [a, b];
    }
    p
}

impl BoundaryLoop {
    /// The circle `{x1 = c}` sampled at `m` equally spaced vertices.
    pub fn circle(c: f64, m: usize, refinement_tol: f64) -> Self {
        let s: Vec<f64> = (0..m).map(|k| TAU * k as f64 / m as f64).collect();
        BoundaryLoop {
            c,
            pos: s.iter().map(|&t| [c, t]).collect(),
            s,
            level: vec![0; m],
            refinement_tol,
            capped_edges: 0,
        }
    }

    pub fn base_x1(&self) -> f64 {
        self.c
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    pub fn refinement_tol(&self) -> f64 {
        self.refinement_tol
    }

    pub fn capped_edges(&self) -> usize {
        self.capped_edges
    }

    /// Lifted vertex positions.
    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.pos
    }

    pub fn parameters(&self) -> &[f64] {
        &self.s
    }

    /// Edge `k` as a lifted segment; the last edge closes the loop.
    pub fn edge(&self, k: usize) -> ([f64; 2], [f64; 2]) {
        let a = self.pos[k];
        let b = if k + 1 == self.pos.len() {
            [self.pos[0][0] + DECK[0], self.pos[0][1] + DECK[1]]
        } else {
            self.pos[k + 1]
        };
        (a, b)
    }

    pub fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        (0..self.pos.len()).map(|k| self.edge(k))
    }

    /// Euclidean length of the polyline.
    pub fn length(&self) -> f64 {
        self.edges().map(|(a, b)| (b[0] - a[0]).hypot(b[1] - a[1])).sum()
    }

    /// Largest gap in `x2 mod 2 pi` left uncovered by the edges' `x2`
    /// ranges (0 for a curve winding once vertically).
    pub fn x2_coverage_gap(&self) -> f64 {
        let mut iv: Vec<(f64, f64)> = Vec::new();
        for (a, b) in self.edges() {
            let (lo, hi) = if a[1] <= b[1] { (a[1], b[1]) } else { (b[1], a[1]) };
            if hi - lo >= TAU {
                return 0.0;
            }
            let l = wrap(lo);
            let h = l + (hi - lo);
            if h > TAU {
                iv.push((l, TAU));
                iv.push((0.0, h - TAU));
            } else {
                iv.push((l, h));
            }
        }
        iv.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut gap: f64 = 0.0;
        let mut reach = 0.0;
        for (l, h) in iv {
            gap = gap.max(l - reach);
            reach = f64::max(reach, h);
        }
        gap.max(TAU - reach)
    }

    /// Apply one step to every vertex, then bisect edges whose midpoint
    /// image deviates from the chord midpoint by more than the tolerance.
    /// `history` holds all steps applied so far, including `step`.
    fn advance(&mut self, history: &[ShearStep], opts: &RefinementOptions, budget: usize) -> Result<()> {
        let step = *history.last().expect("non-empty history");
        for p in &mut self.pos {
            let (a, b) = shear_lifted(p[0], p[1], step.direction(), step.tau());
            *p = [a, b];
        }
        if step.tau() == 0.0 {
            return Ok(());
        }
        let m = self.pos.len();
        let mut out = Refiner {
            c: self.c,
            history,
            tol: self.refinement_tol,
            depth_cap: opts.depth_cap,
            budget,
            pos: Vec::with_capacity(m),
            s: Vec::with_capacity(m),
            level: Vec::with_capacity(m),
            capped: 0,
        };
        for k in 0..m {
            out.push(self.pos[k], self.s[k], self.level[k])?;
            let (b, sb) = if k + 1 == m {
                ([self.pos[0][0] + DECK[0], self.pos[0][1] + DECK[1]], self.s[0] + TAU)
            } else {
                (self.pos[k + 1], self.s[k + 1])
            };
            let lb = self.level[(k + 1) % m];
            out.split(self.pos[k], self.s[k], self.level[k], b, sb, lb)?;
        }
        self.capped_edges = out.capped;
        self.pos = out.pos;
        self.s = out.s;
        self.level = out.level;
        Ok(())
    }

    /// SVG polylines of the loop on the torus drawn in a `size`-pixel square,
    /// broken wherever an edge leaves the fundamental domain.
    pub fn write_svg_paths<W: Write>(&self, mut w: W, size: f64, stroke: &str) -> std::io::Result<()> {
        let sc = size / TAU;
        let mut run: Vec<(f64, f64)> = Vec::new();
        let flush = |run: &mut Vec<(f64, f64)>, w: &mut W| -> std::io::Result<()> {
            if run.len() > 1 {
                let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                writeln!(
                    w,
                    r#"<polyline fill="none" stroke="{stroke}" stroke-width="0.5" points="{}"/>"#,
                    pts.join(" ")
                )?;
            }
            run.clear();
            Ok(())
        };
        for (a, b) in self.edges() {
            let (ax, ay) = (wrap(a[0]), wrap(a[1]));
            let (bx, by) = (ax + b[0] - a[0], ay + b[1] - a[1]);
            if !(0.0..=TAU).contains(&bx) || !(0.0..=TAU).contains(&by) {
                flush(&mut run, &mut w)?;
                continue;
            }
            if run.is_empty() {
                run.push((ax * sc, size - ay * sc));
            }
            run.push((bx * sc, size - by * sc));
        }
        flush(&mut run, &mut w)
    }
}

struct Refiner<'a> {
    c: f64,
    history: &'a [ShearStep],
    tol: f64,
    depth_cap: u8,
    budget: usize,
    pos: Vec<[f64; 2]>,
    s: Vec<f64>,
    level: Vec<u8>,
    capped: usize,
}

impl Refiner<'_> {
    fn push(&mut self, p: [f64; 2], s: f64, l: u8) -> Result<()> {
        if self.pos.len() >= self.budget {
            return Err(Error::RefinementOverflow {
                vertices: self.pos.len() + 1,
                budget: self.budget,
            });
        }
        self.pos.push(p);
        self.s.push(s);
        self.level.push(l);
        Ok(())
    }

    /// Insert the refined interior of the edge `a -> b` (exclusive).
    fn split(&mut self, a: [f64; 2], sa: f64, la: u8, b: [f64; 2], sb: f64, lb: u8) -> Result<()> {
        let sm = 0.5 * (sa + sb);
        let pm = map_lifted([self.c, sm], self.history);
        let dev = (pm[0] - 0.5 * (a[0] + b[0])).hypot(pm[1] - 0.5 * (a[1] + b[1]));
        if dev <= self.tol {
            return Ok(());
        }
        let lm = la.max(lb) + 1;
        if lm > self.depth_cap || sm <= sa || sm >= sb {
            self.capped += 1;
            return Ok(());
        }
        self.split(a, sa, la, pm, sm, lm)?;
        self.push(pm, sm, lm)?;
        self.split(pm, sm, lm, b, sb, lb)
    }
}

/// Two vertical circles `{x1 = 0}` and `{x1 = pi}`.
pub fn initial_boundary(opts: &RefinementOptions) -> Result<(BoundaryLoop, BoundaryLoop)> {
    opts.validate()?;
    Ok((
        BoundaryLoop::circle(0.0, opts.initial_vertices, opts.tol),
        BoundaryLoop::circle(PI, opts.initial_vertices, opts.tol),
    ))
}

/// Boundary images tracked step by step along a schedule.
#[derive(Clone, Debug)]
pub struct BoundaryTracker {
    loops: (BoundaryLoop, BoundaryLoop),
    history: Vec<ShearStep>,
    opts: RefinementOptions,
}

impl BoundaryTracker {
    pub fn new(opts: RefinementOptions) -> Result<Self> {
        Ok(BoundaryTracker {
            loops: initial_boundary(&opts)?,
            history: Vec::new(),
            opts,
        })
    }

    pub fn loops(&self) -> &(BoundaryLoop, BoundaryLoop) {
        &self.loops
    }

    pub fn vertex_count(&self) -> usize {
        self.loops.0.len() + self.loops.1.len()
    }

    pub fn step(&mut self, step: ShearStep) -> Result<()> {
        self.history.push(step);
        let (l0, l1) = &mut self.loops;
        let hist = &self.history;
        let opts = &self.opts;
        let (a, b) = rayon::join(
            || l0.advance(hist, opts, opts.vertex_budget),
            || l1.advance(hist, opts, opts.vertex_budget),
        );
        a.and(b)
    }
}

/// Push both loops through every step of `sched`, refining after each step.
pub fn push_boundary(sched: &Schedule, opts: &RefinementOptions) -> Result<(BoundaryLoop, BoundaryLoop)> {
    let mut t = BoundaryTracker::new(*opts)?;
    for &s in sched.steps() {
        t.step(s)?;
    }
    Ok(t.loops)
}

/// SVG document overlaying both loops.
pub fn write_loops_svg<W: Write>(loops: &(BoundaryLoop, BoundaryLoop), mut w: W, size: f64) -> std::io::Result<()> {
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    )?;
    writeln!(w, r#"<rect width="{size}" height="{size}" fill="white" stroke="black"/>"#)?;
    loops.0.write_svg_paths(&mut w, size, "#3b518b")?;
    loops.1.write_svg_paths(&mut w, size, "#d1495b")?;
    writeln!(w, "</svg>")
}
