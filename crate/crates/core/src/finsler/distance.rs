//! Asymmetric shortest paths on a directed grid graph, with optional
//! coordinate-descent refinement of the returned polyline.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quad::{adaptive_integrate, GaussLegendre};
use super::{segment_length, Domain, Drift, FinslerMetric, Polyline, RandersStructure};
use crate::error::{Error, Result};
use crate::geom::{self, Point, TAU};

pub const DEFAULT_GRID_1D: usize = 4096;
pub const DEFAULT_GRID_2D: usize = 256;
pub const REFINE_STOP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Nodes per axis; `None` picks 4096 in 1D and 256 in 2D.
    pub grid_n: Option<usize>,
    /// Gauss–Legendre nodes per edge.
    pub quad_n: usize,
    pub refine: bool,
    pub max_sweeps: usize,
    /// Padding of the query bounding box, relative to its extent.
    pub pad: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { grid_n: None, quad_n: 4, refine: false, max_sweeps: 200, pad: 0.1 }
    }
}

impl SolverOptions {
    pub fn with_grid(mut self, n: usize) -> Self {
        self.grid_n = Some(n);
        self
    }

    pub fn with_refine(mut self, refine: bool) -> Self {
        self.refine = refine;
        self
    }

    fn grid_for(&self, dim: usize) -> usize {
        self.grid_n.unwrap_or(if dim == 1 { DEFAULT_GRID_1D } else { DEFAULT_GRID_2D })
    }
}

/// Length of an explicit path from `x` to `y`, hence an upper bound on the
/// distance up to quadrature error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub estimate: f64,
    /// Graph shortest-path value before refinement.
    pub graph_estimate: f64,
    /// `None` when `x == y`.
    pub witness: Option<Polyline>,
    pub upper_bound: bool,
    pub sweeps: usize,
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    to: u32,
    weight: f64,
    disp: Point,
}

struct Graph {
    pos: Vec<Point>,
    adj: Vec<Vec<Edge>>,
    /// Node index of each query point.
    extras: Vec<usize>,
}

struct Pending {
    from: usize,
    to: usize,
    disp: Point,
}

fn build_graph<M: FinslerMetric + ?Sized>(metric: &M, points: &[Point], opts: &SolverOptions) -> Result<Graph> {
    let domain = *metric.domain();
    let n = opts.grid_for(domain.dim());
    if n < 2 {
        return Err(Error::InvalidArgument(format!("grid_n must be at least 2, got {n}")));
    }
    if opts.quad_n == 0 {
        return Err(Error::InvalidArgument("quad_n must be at least 1".into()));
    }
    for &p in points {
        domain.check(p)?;
    }
    let mut pos = Vec::new();
    let mut pending = Vec::new();
    let mut extras = Vec::new();
    match domain {
        Domain::Line { min, max } => {
            let (lo, hi) = padded_range(points.iter().map(|p| p[0]), opts.pad, min, max);
            let h = (hi - lo) / (n - 1) as f64;
            pos.extend((0..n).map(|i| [if i + 1 == n { hi } else { lo + i as f64 * h }, 0.0]));
            for i in 0..n - 1 {
                pending.push(Pending { from: i, to: i + 1, disp: [pos[i + 1][0] - pos[i][0], 0.0] });
                pending.push(Pending { from: i + 1, to: i, disp: [pos[i][0] - pos[i + 1][0], 0.0] });
            }
            for &p in points {
                let id = pos.len();
                pos.push([p[0], 0.0]);
                extras.push(id);
                let k = (((p[0] - lo) / h).floor().max(0.0) as usize).min(n - 2);
                for node in [k, k + 1] {
                    link(&mut pending, id, node, [pos[node][0] - p[0], 0.0]);
                }
            }
            link_extras(&mut pending, &pos, &extras, h, |a, b| geom::sub(b, a));
        }
        Domain::Circle => {
            let h = TAU / n as f64;
            pos.extend((0..n).map(|i| [i as f64 * h, 0.0]));
            for i in 0..n {
                let j = (i + 1) % n;
                pending.push(Pending { from: i, to: j, disp: [h, 0.0] });
                pending.push(Pending { from: j, to: i, disp: [-h, 0.0] });
            }
            for &p in points {
                let theta = geom::wrap_angle(p[0]);
                let id = pos.len();
                pos.push([theta, 0.0]);
                extras.push(id);
                let k = ((theta / h).floor() as usize).min(n - 1);
                let below = k as f64 * h - theta;
                link(&mut pending, id, k, [below, 0.0]);
                link(&mut pending, id, (k + 1) % n, [below + h, 0.0]);
            }
            link_extras(&mut pending, &pos, &extras, h, |a, b| {
                let mut d = b[0] - a[0];
                if d > TAU / 2.0 {
                    d -= TAU;
                } else if d < -TAU / 2.0 {
                    d += TAU;
                }
                [d, 0.0]
            });
        }
        Domain::Plane { min, max } => {
            let (lo, hi) = square_box(points, opts.pad, min, max);
            let hx = (hi[0] - lo[0]) / (n - 1) as f64;
            let hy = (hi[1] - lo[1]) / (n - 1) as f64;
            let coord = |i: usize, lo: f64, hi: f64, h: f64| if i + 1 == n { hi } else { lo + i as f64 * h };
            for j in 0..n {
                for i in 0..n {
                    pos.push([coord(i, lo[0], hi[0], hx), coord(j, lo[1], hi[1], hy)]);
                }
            }
            let idx = |i: usize, j: usize| j * n + i;
            for j in 0..n {
                for i in 0..n {
                    for (di, dj) in [(-1i64, -1i64), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)] {
                        let (ni, nj) = (i as i64 + di, j as i64 + dj);
                        if ni < 0 || nj < 0 || ni >= n as i64 || nj >= n as i64 {
                            continue;
                        }
                        let (a, b) = (idx(i, j), idx(ni as usize, nj as usize));
                        pending.push(Pending { from: a, to: b, disp: geom::sub(pos[b], pos[a]) });
                    }
                }
            }
            for &p in points {
                let id = pos.len();
                pos.push(p);
                extras.push(id);
                let ci = (((p[0] - lo[0]) / hx).floor().max(0.0) as usize).min(n - 2);
                let cj = (((p[1] - lo[1]) / hy).floor().max(0.0) as usize).min(n - 2);
                for j in cj.saturating_sub(1)..=(cj + 2).min(n - 1) {
                    for i in ci.saturating_sub(1)..=(ci + 2).min(n - 1) {
                        let node = idx(i, j);
                        link(&mut pending, id, node, geom::sub(pos[node], p));
                    }
                }
            }
            link_extras(&mut pending, &pos, &extras, 2.0 * hx.max(hy), |a, b| geom::sub(b, a));
        }
    }

    // every node must carry a positive structure before any weight is trusted
    let first_bad = pos.par_iter().map(|&p| metric.check_point(p).err()).find_first(|e| e.is_some());
    if let Some(Some(e)) = first_bad {
        return Err(e);
    }

    let rule = GaussLegendre::new(opts.quad_n);
    let weights: Vec<f64> = pending
        .par_iter()
        .map(|e| {
            let a = pos[e.from];
            segment_length(metric, &rule, a, geom::add(a, e.disp))
        })
        .collect();
    let mut adj = vec![Vec::new(); pos.len()];
    for (e, w) in pending.iter().zip(weights) {
        adj[e.from].push(Edge { to: e.to as u32, weight: w, disp: e.disp });
    }
    Ok(Graph { pos, adj, extras })
}

fn link(pending: &mut Vec<Pending>, extra: usize, node: usize, disp: Point) {
    pending.push(Pending { from: extra, to: node, disp });
    pending.push(Pending { from: node, to: extra, disp: geom::scale(disp, -1.0) });
}

fn link_extras(pending: &mut Vec<Pending>, pos: &[Point], extras: &[usize], reach: f64, delta: impl Fn(Point, Point) -> Point) {
    for (k, &a) in extras.iter().enumerate() {
        for &b in &extras[k + 1..] {
            let d = delta(pos[a], pos[b]);
            if d[0].abs().max(d[1].abs()) <= reach {
                link(pending, a, b, d);
            }
        }
    }
}

fn padded_range(xs: impl Iterator<Item = f64>, pad: f64, min: f64, max: f64) -> (f64, f64) {
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let ext = hi - lo;
    let margin = if ext > 0.0 { pad * ext } else { pad.max(1e-3) };
    let (mut a, mut b) = ((lo - margin).max(min), (hi + margin).min(max));
    if b <= a {
        a = lo - 1e-3;
        b = hi + 1e-3;
    }
    (a, b)
}

fn square_box(points: &[Point], pad: f64, min: Point, max: Point) -> (Point, Point) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let ext = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let half = if ext > 0.0 { 0.5 * ext * (1.0 + 2.0 * pad) } else { pad.max(1e-3) };
    let mut a = [0.0; 2];
    let mut b = [0.0; 2];
    for k in 0..2 {
        let c = 0.5 * (lo[k] + hi[k]);
        a[k] = (c - half).max(min[k]);
        b[k] = (c + half).min(max[k]);
    }
    (a, b)
}

#[derive(Clone, Copy, PartialEq)]
struct State {
    cost: f64,
    node: u32,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost, ties broken by node index
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Label-setting search from `source`; returns distances and the incoming
/// edge `(from, edge index)` of each settled node.
fn dijkstra(graph: &Graph, source: usize) -> (Vec<f64>, Vec<Option<(u32, u32)>>) {
    let n = graph.pos.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(State { cost: 0.0, node: source as u32 });
    while let Some(State { cost, node }) = heap.pop() {
        let u = node as usize;
        if cost > dist[u] {
            continue;
        }
        for (k, e) in graph.adj[u].iter().enumerate() {
            let next = cost + e.weight;
            let v = e.to as usize;
            if next < dist[v] {
                dist[v] = next;
                pred[v] = Some((node, k as u32));
                heap.push(State { cost: next, node: e.to });
            }
        }
    }
    (dist, pred)
}

fn trace(graph: &Graph, pred: &[Option<(u32, u32)>], start: Point, target: usize) -> Vec<Point> {
    let mut disps = Vec::new();
    let mut v = target;
    while let Some((u, k)) = pred[v] {
        disps.push(graph.adj[u as usize][k as usize].disp);
        v = u as usize;
    }
    disps.reverse();
    let mut verts = vec![start];
    let mut cur = start;
    for d in disps {
        if d == [0.0, 0.0] {
            continue;
        }
        cur = geom::add(cur, d);
        verts.push(cur);
    }
    verts
}

/// Upper-bound estimate of `d_F(x, y)` with default options.
pub fn finsler_distance<M: FinslerMetric + ?Sized>(metric: &M, x: Point, y: Point, grid_n: usize, refine: bool) -> Result<DistanceEstimate> {
    finsler_distance_with(metric, x, y, &SolverOptions::default().with_grid(grid_n).with_refine(refine))
}

pub fn finsler_distance_with<M: FinslerMetric + ?Sized>(metric: &M, x: Point, y: Point, opts: &SolverOptions) -> Result<DistanceEstimate> {
    let domain = *metric.domain();
    let (x, y) = if domain.dim() == 1 { ([x[0], 0.0], [y[0], 0.0]) } else { (x, y) };
    domain.check(x)?;
    domain.check(y)?;
    let same = match domain {
        Domain::Circle => geom::wrap_angle(x[0]) == geom::wrap_angle(y[0]),
        _ => x == y,
    };
    if same {
        metric.check_point(x)?;
        return Ok(DistanceEstimate { estimate: 0.0, graph_estimate: 0.0, witness: None, upper_bound: true, sweeps: 0 });
    }
    let graph = build_graph(metric, &[x, y], opts)?;
    let (src, dst) = (graph.extras[0], graph.extras[1]);
    let (dist, pred) = dijkstra(&graph, src);
    let graph_estimate = dist[dst];
    if !graph_estimate.is_finite() {
        return Err(Error::Unreachable);
    }
    let mut verts = trace(&graph, &pred, x, dst);
    if !domain.is_periodic() {
        *verts.last_mut().unwrap() = y;
    }
    let mut estimate = graph_estimate;
    let mut sweeps = 0;
    if opts.refine && domain.dim() == 2 {
        let rule = GaussLegendre::new(opts.quad_n);
        let (refined, len, used) = refine_path(metric, &rule, &verts, opts.max_sweeps);
        sweeps = used;
        if len < estimate {
            estimate = len;
            verts = refined;
        }
    }
    let witness = Some(Polyline::new(dedupe(verts))?);
    Ok(DistanceEstimate { estimate, graph_estimate, witness, upper_bound: true, sweeps })
}

/// Pairwise graph distances between `points` (row = from), sharing one graph.
pub fn distance_matrix<M: FinslerMetric + ?Sized>(metric: &M, points: &[Point], opts: &SolverOptions) -> Result<Vec<Vec<f64>>> {
    let dim = metric.dim();
    let points: Vec<Point> = points.iter().map(|&p| if dim == 1 { [p[0], 0.0] } else { p }).collect();
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let graph = build_graph(metric, &points, opts)?;
    let rows: Vec<Result<Vec<f64>>> = graph
        .extras
        .par_iter()
        .enumerate()
        .map(|(i, &src)| {
            let (dist, _) = dijkstra(&graph, src);
            graph
                .extras
                .iter()
                .enumerate()
                .map(|(j, &t)| if i == j { Ok(0.0) } else if dist[t].is_finite() { Ok(dist[t]) } else { Err(Error::Unreachable) })
                .collect()
        })
        .collect();
    rows.into_iter().collect()
}

fn dedupe(mut verts: Vec<Point>) -> Vec<Point> {
    verts.dedup();
    verts
}

fn total_length<M: FinslerMetric + ?Sized>(metric: &M, rule: &GaussLegendre, verts: &[Point]) -> f64 {
    verts.windows(2).map(|w| segment_length(metric, rule, w[0], w[1])).sum()
}

/// Removes interior vertices lying on the straight line through their neighbours.
fn simplify(verts: &[Point]) -> Vec<Point> {
    let mut out: Vec<Point> = vec![verts[0]];
    for k in 1..verts.len() - 1 {
        let a = *out.last().unwrap();
        let (b, c) = (verts[k], verts[k + 1]);
        let u = geom::sub(b, a);
        let v = geom::sub(c, b);
        let cross = u[0] * v[1] - u[1] * v[0];
        let straight = cross.abs() <= 1e-12 * geom::norm(u) * geom::norm(v) && geom::dot(u, v) > 0.0;
        if !straight {
            out.push(b);
        }
    }
    out.push(*verts.last().unwrap());
    out
}

/// `segments + 1` vertices equally spaced by coordinate arclength.
fn resample(verts: &[Point], segments: usize) -> Vec<Point> {
    let cum: Vec<f64> = std::iter::once(0.0)
        .chain(verts.windows(2).scan(0.0, |s, w| {
            *s += geom::norm(geom::sub(w[1], w[0]));
            Some(*s)
        }))
        .collect();
    let total = *cum.last().unwrap();
    let mut out = vec![verts[0]];
    let mut seg = 0;
    for k in 1..segments {
        let target = total * k as f64 / segments as f64;
        while seg + 1 < cum.len() - 1 && cum[seg + 1] < target {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let t = if span > 0.0 { (target - cum[seg]) / span } else { 0.0 };
        out.push(geom::lerp(verts[seg], verts[seg + 1], t));
    }
    out.push(*verts.last().unwrap());
    out
}

fn subdivide(verts: &[Point]) -> Vec<Point> {
    let mut out = Vec::with_capacity(2 * verts.len());
    for w in verts.windows(2) {
        out.push(w[0]);
        out.push(geom::lerp(w[0], w[1], 0.5));
    }
    out.push(*verts.last().unwrap());
    out
}

const DIRECTIONS: [Point; 8] = [
    [1.0, 0.0],
    [-1.0, 0.0],
    [0.0, 1.0],
    [0.0, -1.0],
    [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2],
    [-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2],
    [std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2],
    [-std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2],
];

/// Compass search on one vertex with its neighbours fixed.
fn relax_vertex<M: FinslerMetric + ?Sized>(metric: &M, rule: &GaussLegendre, prev: Point, cur: Point, next: Point) -> Point {
    let local = |p: Point| segment_length(metric, rule, prev, p) + segment_length(metric, rule, p, next);
    let scale = geom::norm(geom::sub(cur, prev)).min(geom::norm(geom::sub(next, cur)));
    if scale == 0.0 {
        return cur;
    }
    let floor = 1e-13 * scale.max(1e-300);
    let mut best_p = cur;
    let mut best = local(cur);
    // the length is convex along the line towards the chord midpoint, so a
    // golden-section search there handles the non-smooth ridge that defeats
    // axis-aligned probing
    let mid = geom::lerp(prev, next, 0.5);
    let toward = |s: f64| geom::lerp(cur, mid, s);
    let s = golden_min(&|s| local(toward(s)), 0.0, 1.0, 1e-12);
    let cand = toward(s);
    if metric.domain().contains(cand) {
        let v = local(cand);
        if v < best {
            best = v;
            best_p = cand;
        }
    }
    let mut step = 0.25 * scale;
    while step > floor {
        let mut moved = false;
        let mut cand_best = (best, best_p);
        for d in DIRECTIONS {
            let cand = geom::add(best_p, geom::scale(d, step));
            if !metric.domain().contains(cand) {
                continue;
            }
            let v = local(cand);
            if v < cand_best.0 {
                cand_best = (v, cand);
                moved = true;
            }
        }
        if moved {
            best = cand_best.0;
            best_p = cand_best.1;
        } else {
            step *= 0.5;
        }
    }
    best_p
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Coordinate descent on the interior vertices, coarse to fine: the graph
/// path is simplified, resampled to 8 segments and relaxed, then repeatedly
/// subdivided up to 64 segments. Each level sweeps until the length drops by
/// less than [`REFINE_STOP`] or `max_sweeps` is reached.
fn refine_path<M: FinslerMetric + ?Sized>(metric: &M, rule: &GaussLegendre, verts: &[Point], max_sweeps: usize) -> (Vec<Point>, f64, usize) {
    let mut path = resample(&simplify(verts), 8);
    let mut len = total_length(metric, rule, &path);
    let mut sweeps = 0;
    loop {
        for _ in 0..max_sweeps {
            for k in 1..path.len() - 1 {
                path[k] = relax_vertex(metric, rule, path[k - 1], path[k], path[k + 1]);
            }
            sweeps += 1;
            let new_len = total_length(metric, rule, &path);
            let gain = len - new_len;
            len = new_len.min(len);
            if gain < REFINE_STOP {
                break;
            }
        }
        if path.len() > 64 {
            break;
        }
        path = subdivide(&path);
        len = total_length(metric, rule, &path);
    }
    (path, len, sweeps)
}

/// `|x - y| + Φ(x) - Φ(y)` for the line structure `F(t, v) = |v| - b(t) v`,
/// where `Φ' = b`. Uses `antiderivative` when given, else adaptive quadrature.
pub fn randers_line_distance(b: &dyn Fn(f64) -> f64, antiderivative: Option<&dyn Fn(f64) -> f64>, x: f64, y: f64) -> Result<f64> {
    let (lo, hi) = (x.min(y), x.max(y));
    const CHECKS: usize = 1024;
    for k in 0..=CHECKS {
        let t = lo + (hi - lo) * k as f64 / CHECKS as f64;
        let bt = b(t);
        if !(bt.abs() < 1.0) {
            return Err(Error::DriftTooLarge { point: [t, 0.0], norm: bt.abs() });
        }
    }
    let shift = match antiderivative {
        Some(phi) => phi(x) - phi(y),
        None => adaptive_integrate(b, y, x, 1e-11),
    };
    Ok((x - y).abs() + shift)
}

/// Closed-form or quadrature distance for a Euclidean-based Randers line, when
/// the structure admits one.
pub fn line_oracle(metric: &RandersStructure, x: f64, y: f64) -> Option<Result<f64>> {
    if !matches!(metric.domain(), Domain::Line { .. }) || metric.base() != &super::Base::Euclidean {
        return None;
    }
    let r = match metric.drift() {
        Drift::Zero => randers_line_distance(&|_| 0.0, Some(&|_| 0.0), x, y),
        Drift::Constant(w) => {
            let b = -w[0];
            randers_line_distance(&|_| b, Some(&|t| b * t), x, y)
        }
        Drift::ArctanPotential => {
            randers_line_distance(&|t| t * t / (1.0 + t * t), Some(&|t: f64| t - t.atan()), x, y)
        }
        _ => randers_line_distance(&|t| metric.line_drift(t), None, x, y),
    };
    Some(r)
}

/// Exact one-dimensional distances between sorted nodes on a line: the
/// straight path is the only candidate, so `d(i, j)` is a prefix-sum
/// difference of per-cell lengths.
#[derive(Debug, Clone)]
pub struct LineDistances {
    forward: Vec<f64>,
    backward: Vec<f64>,
}

impl LineDistances {
    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            Ordering::Less => self.forward[j] - self.forward[i],
            Ordering::Greater => self.backward[i] - self.backward[j],
            Ordering::Equal => 0.0,
        }
    }
}

pub fn line_distance_table<M: FinslerMetric + ?Sized>(metric: &M, nodes: &[f64], quad_n: usize) -> Result<LineDistances> {
    if !matches!(metric.domain(), Domain::Line { .. }) {
        return Err(Error::InvalidArgument("line distance table needs a line domain".into()));
    }
    if nodes.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("nodes must be strictly increasing".into()));
    }
    for &t in nodes {
        metric.domain().check([t, 0.0])?;
        metric.check_point([t, 0.0])?;
    }
    let rule = GaussLegendre::new(quad_n.max(1));
    let mut forward = Vec::with_capacity(nodes.len());
    let mut backward = Vec::with_capacity(nodes.len());
    let (mut f, mut b) = (0.0, 0.0);
    for (k, &t) in nodes.iter().enumerate() {
        if k > 0 {
            let s = nodes[k - 1];
            f += segment_length(metric, &rule, [s, 0.0], [t, 0.0]);
            b += segment_length(metric, &rule, [t, 0.0], [s, 0.0]);
        }
        forward.push(f);
        backward.push(b);
    }
    Ok(LineDistances { forward, backward })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn arctan_oracle(x: f64, y: f64) -> f64 {
        randers_line_distance(&|t| t * t / (1.0 + t * t), Some(&|t: f64| t - t.atan()), x, y).unwrap()
    }

    #[test]
    fn oracle_values() {
        assert!((arctan_oracle(0.0, 1.0) - FRAC_PI_4).abs() < 1e-15);
        assert!((arctan_oracle(1.0, 0.0) - (2.0 - FRAC_PI_4)).abs() < 1e-15);
        assert!((arctan_oracle(0.0, 2.0) - 2f64.atan()).abs() < 1e-15);
        assert!((arctan_oracle(2.0, 0.0) - (4.0 - 2f64.atan())).abs() < 1e-14);
        assert_eq!(randers_line_distance(&|_| 0.0, None, -1.5, 2.0).unwrap(), 3.5);
        // quadrature route agrees with the antiderivative route
        let q = randers_line_distance(&|t| t * t / (1.0 + t * t), None, 0.0, 2.0).unwrap();
        assert!((q - 2f64.atan()).abs() < 1e-10);
        assert!(matches!(randers_line_distance(&|t| t, None, 0.0, 2.0), Err(Error::DriftTooLarge { .. })));
    }

    #[test]
    fn arctan_line_distances_match_oracle() {
        let f = RandersStructure::arctan_line();
        let fwd = finsler_distance(&f, [0.0, 0.0], [1.0, 0.0], 4096, false).unwrap();
        assert!((fwd.estimate - FRAC_PI_4).abs() < 1e-3);
        assert!(fwd.estimate >= FRAC_PI_4 - 1e-12);
        let back = finsler_distance(&f, [1.0, 0.0], [0.0, 0.0], 4096, true).unwrap();
        assert!((back.estimate - (2.0 - FRAC_PI_4)).abs() < 1e-3);
        let w = fwd.witness.unwrap();
        assert_eq!(w.start(), [0.0, 0.0]);
        assert_eq!(w.end(), [1.0, 0.0]);
    }

    #[test]
    fn constant_plane_distances() {
        let f = RandersStructure::constant_plane([0.3, 0.0]);
        let fwd = finsler_distance(&f, [0.0, 0.0], [1.0, 0.0], 256, true).unwrap();
        assert!((fwd.estimate - 1.3).abs() < 1e-3, "{}", fwd.estimate);
        let back = finsler_distance(&f, [1.0, 0.0], [0.0, 0.0], 256, true).unwrap();
        assert!((back.estimate - 0.7).abs() < 1e-3, "{}", back.estimate);
        assert!(back.estimate <= back.graph_estimate);
    }

    #[test]
    fn diagonal_query_refines_towards_straight_line() {
        let f = RandersStructure::constant_plane([0.2, -0.1]);
        let (x, y) = ([0.0, 0.0], [1.0, 0.7]);
        let exact = geom::norm(y) + 0.2 * 1.0 - 0.1 * 0.7;
        let est = finsler_distance(&f, x, y, 64, true).unwrap();
        assert!(est.estimate >= exact - 1e-12);
        assert!(est.estimate - exact < 1e-6, "{} vs {exact}", est.estimate);
        assert!(est.graph_estimate >= est.estimate);
    }

    #[test]
    fn zero_distance_to_self() {
        let f = RandersStructure::constant_plane([0.3, 0.0]);
        let e = finsler_distance(&f, [0.5, 0.5], [0.5, 0.5], 16, true).unwrap();
        assert_eq!(e.estimate, 0.0);
        assert!(e.witness.is_none());
    }

    #[test]
    fn too_large_drift_is_reported() {
        let f = RandersStructure::constant_plane([1.0, 0.0]);
        assert!(matches!(finsler_distance(&f, [0.0, 0.0], [1.0, 0.0], 16, false), Err(Error::DriftTooLarge { .. })));
    }

    #[test]
    fn circle_distances_take_the_shorter_arc() {
        let f = RandersStructure::euclidean_circle();
        let e = finsler_distance(&f, [0.1, 0.0], [TAU - 0.1, 0.0], 512, false).unwrap();
        assert!((e.estimate - 0.2).abs() < 1e-12, "{}", e.estimate);
        let g = RandersStructure::sine_circle(0.5);
        // d_G(a, b) = d(a, b) + φ(a) - φ(b) with φ = 0.5 sin
        let (a, b): (f64, f64) = (0.3, 2.0);
        let exact = (b - a) + 0.5 * (a.sin() - b.sin());
        let e = finsler_distance(&g, [a, 0.0], [b, 0.0], 1024, false).unwrap();
        assert!((e.estimate - exact).abs() < 1e-10, "{} vs {exact}", e.estimate);
    }

    #[test]
    fn matrix_matches_single_queries_in_1d() {
        let f = RandersStructure::arctan_line();
        let pts = [[-1.0, 0.0], [0.0, 0.0], [0.5, 0.0], [2.0, 0.0]];
        let m = distance_matrix(&f, &pts, &SolverOptions::default().with_grid(512)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let exact = if i == j { 0.0 } else { arctan_oracle(pts[i][0], pts[j][0]) };
                assert!((m[i][j] - exact).abs() < 1e-12, "({i},{j}) {} vs {exact}", m[i][j]);
            }
        }
    }

    #[test]
    fn line_table_matches_oracle() {
        let f = RandersStructure::arctan_line();
        let nodes: Vec<f64> = (0..=20).map(|k| -2.0 + 0.2 * k as f64).collect();
        let t = line_distance_table(&f, &nodes, 6).unwrap();
        for (i, j) in [(0, 20), (20, 0), (3, 11), (11, 3)] {
            assert!((t.d(i, j) - arctan_oracle(nodes[i], nodes[j])).abs() < 1e-9);
        }
        assert!(line_distance_table(&f, &[1.0, 0.0], 2).is_err());
    }

    #[test]
    fn oracle_dispatch() {
        let f = RandersStructure::constant_line(0.25);
        // F = |v| + 0.25 v: rightwards costs 1.25
        assert!((line_oracle(&f, 0.0, 2.0).unwrap().unwrap() - 2.5).abs() < 1e-15);
        assert!((line_oracle(&f, 2.0, 0.0).unwrap().unwrap() - 1.5).abs() < 1e-15);
        assert!(line_oracle(&RandersStructure::euclidean_plane(), 0.0, 1.0).is_none());
    }
}
