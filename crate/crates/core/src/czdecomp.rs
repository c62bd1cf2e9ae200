//! Stopping-time dyadic quadtree adapted to the data.
//!
//! A square is split when the surrogate diameter at one of its probe points is
//! below `C0 * side`, or when a failing probe recorded anywhere in its double
//! demands it (which is what keeps touching squares within a factor 4). Squares
//! whose double holds no data are never split.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::convexgeom::{DepthSet, SigmaOracle};
pub use crate::error::SquareKey;
use crate::error::{Error, Result};
use crate::jetcore::{check_points, Config, Point2};
use crate::oned::{extend_linear, OneDData, OneDFunction};
use crate::spatial::PointGrid;

/// `[2^k i, 2^k (i+1)) x [2^k j, 2^k (j+1))` in units of `unit_scale`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicSquare {
    pub i: i64,
    pub j: i64,
    pub k: i32,
}

impl DyadicSquare {
    pub const fn new(i: i64, j: i64, k: i32) -> Self {
        DyadicSquare { i, j, k }
    }

    pub fn key(&self) -> SquareKey {
        (self.i, self.j, self.k)
    }

    pub fn side(&self, unit: f64) -> f64 {
        unit * 2f64.powi(self.k)
    }

    pub fn lo(&self, unit: f64) -> Point2 {
        let s = self.side(unit);
        Point2::new(self.i as f64 * s, self.j as f64 * s)
    }

    pub fn center(&self, unit: f64) -> Point2 {
        let s = self.side(unit);
        Point2::new((self.i as f64 + 0.5) * s, (self.j as f64 + 0.5) * s)
    }

    /// Closed box of the dilation `lambda Q` about the center.
    pub fn dilate(&self, lambda: f64, unit: f64) -> (Point2, Point2) {
        let c = self.center(unit);
        let h = 0.5 * lambda * self.side(unit);
        (Point2::new(c.x1 - h, c.x2 - h), Point2::new(c.x1 + h, c.x2 + h))
    }

    pub fn contains(&self, p: &Point2, unit: f64) -> bool {
        let s = self.side(unit);
        let lo = self.lo(unit);
        p.x1 >= lo.x1 && p.x1 < lo.x1 + s && p.x2 >= lo.x2 && p.x2 < lo.x2 + s
    }

    pub fn parent(&self) -> DyadicSquare {
        DyadicSquare::new(self.i.div_euclid(2), self.j.div_euclid(2), self.k + 1)
    }

    pub fn children(&self) -> [DyadicSquare; 4] {
        let (i, j, k) = (2 * self.i, 2 * self.j, self.k - 1);
        [
            DyadicSquare::new(i, j, k),
            DyadicSquare::new(i + 1, j, k),
            DyadicSquare::new(i, j + 1, k),
            DyadicSquare::new(i + 1, j + 1, k),
        ]
    }

    /// The square of level `k` containing `p`.
    pub fn containing(p: &Point2, k: i32, unit: f64) -> DyadicSquare {
        let s = unit * 2f64.powi(k);
        DyadicSquare::new((p.x1 / s).floor() as i64, (p.x2 / s).floor() as i64, k)
    }
}

fn in_box(p: &Point2, b: &(Point2, Point2)) -> bool {
    p.x1 >= b.0.x1 && p.x1 <= b.1.x1 && p.x2 >= b.0.x2 && p.x2 <= b.1.x2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Sharp,
    Empty,
    Trivial,
}

/// Rotated graph coordinates `t = (s1, s2 - curve(s1))` with `s = R (y - origin)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Straightening {
    pub rotation: [[f64; 2]; 2],
    pub origin: Point2,
    pub curve: OneDFunction,
    pub square: DyadicSquare,
    /// Data index of each knot of `curve`.
    pub knot_data: Vec<usize>,
    /// Sampled `max |curve'|` over the window of `2Q`.
    pub slope_max: f64,
    /// Sampled `max |curve''| * side` over the window of `2Q`.
    pub curvature_max: f64,
}

impl Straightening {
    pub fn rotate(&self, y: &Point2) -> [f64; 2] {
        let d = y.diff(&self.origin);
        let r = &self.rotation;
        [r[0][0] * d[0] + r[0][1] * d[1], r[1][0] * d[0] + r[1][1] * d[1]]
    }

    /// Straightened coordinates of `y`.
    pub fn forward(&self, y: &Point2) -> [f64; 2] {
        let s = self.rotate(y);
        [s[0], s[1] - self.curve.eval(s[0]).0]
    }

    /// Straightened coordinates with their first and second derivatives in `y`:
    /// `(t, dt1, dt2, d2t2)` where `d2t2` is the (symmetric) Hessian of `t2`; `t1` is linear.
    pub fn forward_jet(&self, y: &Point2) -> ([f64; 2], [f64; 2], [f64; 2], [[f64; 2]; 2]) {
        let s = self.rotate(y);
        let (phi, dphi, ddphi) = self.curve.eval(s[0]);
        let r0 = self.rotation[0];
        let r1 = self.rotation[1];
        let dt2 = [r1[0] - dphi * r0[0], r1[1] - dphi * r0[1]];
        let h = [[-ddphi * r0[0] * r0[0], -ddphi * r0[0] * r0[1]], [-ddphi * r0[1] * r0[0], -ddphi * r0[1] * r0[1]]];
        ([s[0], s[1] - phi], r0, dt2, h)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SquareInfo {
    pub square: DyadicSquare,
    pub label: Label,
    pub rep: Point2,
    /// Distance from `rep` to the data (infinite without data).
    pub rep_dist: f64,
    /// Data indices in the closed double `2Q`.
    pub data_2q: Vec<usize>,
    /// For Empty squares, the index of the Sharp square `mu(Q)`.
    pub mu: Option<usize>,
    pub straightening: Option<Straightening>,
}

#[derive(Debug, Clone)]
pub struct CZDecomposition {
    unit: f64,
    points: Vec<Point2>,
    grid: PointGrid,
    squares: Vec<SquareInfo>,
    index: HashMap<SquareKey, usize>,
    min_level: i32,
    bounds: (Point2, Point2),
    probes_evaluated: usize,
}

/// Neighbor lookup result with the number of index probes spent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborHits {
    pub squares: Vec<usize>,
    pub visited: usize,
}

struct Builder<'a> {
    unit: f64,
    c0: f64,
    max_depth: i32,
    grid: &'a PointGrid,
    oracle: &'a SigmaOracle,
    memo: HashMap<(u64, u64), f64>,
    leaves: HashSet<SquareKey>,
    witnesses: Vec<(Point2, f64)>,
    witness_seen: HashSet<(u64, u64)>,
}

impl Builder<'_> {
    fn diameter(&mut self, p: Point2) -> f64 {
        let key = p.bits();
        if let Some(&d) = self.memo.get(&key) {
            return d;
        }
        let d = self.oracle.probe(p).diameter;
        self.memo.insert(key, d);
        d
    }

    fn data_in_double(&self, q: &DyadicSquare) -> Vec<usize> {
        let (lo, hi) = q.dilate(2.0, self.unit);
        self.grid.in_box(lo, hi)
    }

    /// Refines `q` until every descendant passes its own probes.
    fn refine(&mut self, q: DyadicSquare) -> Result<()> {
        let mut stack = vec![q];
        while let Some(q) = stack.pop() {
            let data = self.data_in_double(&q);
            if data.is_empty() {
                self.leaves.insert(q.key());
                continue;
            }
            let delta = q.side(self.unit);
            let (lo, hi) = q.dilate(2.0, self.unit);
            let mut probes = vec![q.center(self.unit), lo, Point2::new(hi.x1, lo.x2), Point2::new(lo.x1, hi.x2), hi];
            probes.extend(data.iter().map(|&i| self.grid.points()[i]));
            let mut split = false;
            for p in probes {
                let d = self.diameter(p);
                if d < self.c0 * delta {
                    split = true;
                    if self.witness_seen.insert(p.bits()) {
                        self.witnesses.push((p, d));
                    }
                }
            }
            if split {
                if q.k <= -self.max_depth {
                    return Err(Error::MaxDepthExceeded(q.key()));
                }
                stack.extend(q.children().iter().rev());
            } else {
                self.leaves.insert(q.key());
            }
        }
        Ok(())
    }

    /// Splits leaves whose double contains a recorded failing probe that is too small for them.
    fn enforce_witnesses(&mut self) -> Result<()> {
        loop {
            let mut changed = false;
            let mut w = 0;
            while w < self.witnesses.len() {
                let (p, d) = self.witnesses[w];
                w += 1;
                let mut k = 0;
                loop {
                    let delta = self.unit * 2f64.powi(k);
                    if !(d < self.c0 * delta) || k < -self.max_depth {
                        break;
                    }
                    let i0 = (p.x1 / delta - 1.5).ceil() as i64;
                    let i1 = (p.x1 / delta + 0.5).floor() as i64;
                    let j0 = (p.x2 / delta - 1.5).ceil() as i64;
                    let j1 = (p.x2 / delta + 0.5).floor() as i64;
                    for i in i0..=i1 {
                        for j in j0..=j1 {
                            let q = DyadicSquare::new(i, j, k);
                            if !self.leaves.contains(&q.key()) {
                                continue;
                            }
                            if !in_box(&p, &q.dilate(2.0, self.unit)) || self.data_in_double(&q).is_empty() {
                                continue;
                            }
                            if q.k <= -self.max_depth {
                                return Err(Error::MaxDepthExceeded(q.key()));
                            }
                            self.leaves.remove(&q.key());
                            for c in q.children() {
                                self.refine(c)?;
                            }
                            changed = true;
                        }
                    }
                    k -= 1;
                }
            }
            if !changed {
                return Ok(());
            }
        }
    }
}

impl CZDecomposition {
    pub fn unit(&self) -> f64 {
        self.unit
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn grid(&self) -> &PointGrid {
        &self.grid
    }

    pub fn squares(&self) -> &[SquareInfo] {
        &self.squares
    }

    pub fn square(&self, idx: usize) -> &SquareInfo {
        &self.squares[idx]
    }

    pub fn find(&self, q: &DyadicSquare) -> Option<usize> {
        self.index.get(&q.key()).copied()
    }

    /// Closed box tiled by the squares.
    pub fn bounds(&self) -> (Point2, Point2) {
        self.bounds
    }

    pub fn min_level(&self) -> i32 {
        self.min_level
    }

    /// Number of distinct diameter evaluations made while building.
    pub fn probes_evaluated(&self) -> usize {
        self.probes_evaluated
    }

    pub fn side(&self, idx: usize) -> f64 {
        self.squares[idx].square.side(self.unit)
    }

    /// Index of the square containing `p`, if `p` lies in the tiled box.
    pub fn locate(&self, p: &Point2) -> Option<usize> {
        let mut k = 0;
        while k >= self.min_level {
            let q = DyadicSquare::containing(p, k, self.unit);
            if let Some(&idx) = self.index.get(&q.key()) {
                return Some(idx);
            }
            k -= 1;
        }
        None
    }

    /// Squares whose open `9/8` dilation contains `x`.
    pub fn neighbors_counted(&self, x: &Point2) -> NeighborHits {
        let mut hits = NeighborHits { squares: Vec::new(), visited: 0 };
        let Some(home) = self.locate(x) else {
            return hits;
        };
        let k0 = self.squares[home].square.k;
        for k in (k0 - 2)..=(k0 + 2).min(0) {
            if k < self.min_level {
                continue;
            }
            let delta = self.unit * 2f64.powi(k);
            let range = |v: f64| ((v / delta - 1.0625).floor() as i64, (v / delta + 0.0625).floor() as i64);
            let (i0, i1) = range(x.x1);
            let (j0, j1) = range(x.x2);
            for i in i0..=i1 {
                for j in j0..=j1 {
                    hits.visited += 1;
                    if let Some(&idx) = self.index.get(&(i, j, k)) {
                        let c = self.squares[idx].square.center(self.unit);
                        let h = 0.5625 * delta;
                        if (x.x1 - c.x1).abs() < h && (x.x2 - c.x2).abs() < h {
                            hits.squares.push(idx);
                        }
                    }
                }
            }
        }
        hits.squares.sort_unstable();
        hits
    }

    pub fn neighbors(&self, x: &Point2) -> Vec<DyadicSquare> {
        self.neighbors_counted(x).squares.iter().map(|&i| self.squares[i].square).collect()
    }

    /// Probe points of the stopping test for square `idx`.
    pub fn probes(&self, idx: usize) -> Vec<Point2> {
        let info = &self.squares[idx];
        let (lo, hi) = info.square.dilate(2.0, self.unit);
        let mut v = vec![info.square.center(self.unit), lo, Point2::new(hi.x1, lo.x2), Point2::new(lo.x1, hi.x2), hi];
        v.extend(info.data_2q.iter().map(|&i| self.points[i]));
        v
    }

    /// Touching pairs `(small, large)` with `side(small) <= side(large)`, each
    /// found from its smaller member; equal-size pairs appear in both orders.
    pub fn touching_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (n, info) in self.squares.iter().enumerate() {
            let q = info.square;
            let s = q.side(self.unit);
            let c = q.center(self.unit);
            let off = 0.75 * s;
            let mut seen: Vec<usize> = Vec::new();
            for (dx, dy) in
                [(-1.0, -1.0), (0.0, -1.0), (1.0, -1.0), (-1.0, 0.0), (1.0, 0.0), (-1.0, 1.0), (0.0, 1.0), (1.0, 1.0)]
            {
                let p = Point2::new(c.x1 + dx * off, c.x2 + dy * off);
                if let Some(idx) = self.locate(&p) {
                    if self.squares[idx].square.k >= q.k && !seen.contains(&idx) {
                        seen.push(idx);
                        out.push((n, idx));
                    }
                }
            }
        }
        out
    }

    /// Largest side ratio over touching pairs.
    pub fn max_touching_ratio(&self) -> f64 {
        self.touching_pairs().iter().map(|&(a, b)| self.side(b) / self.side(a)).fold(1.0, f64::max)
    }

    pub fn count(&self, label: Label) -> usize {
        self.squares.iter().filter(|s| s.label == label).count()
    }

    pub fn mu_map(&self, idx: usize) -> Result<usize> {
        let info = &self.squares[idx];
        match (info.label, info.mu) {
            (Label::Empty, Some(m)) => Ok(m),
            _ => Err(Error::InvalidArgument("mu is defined on Empty squares only".into())),
        }
    }

    /// Versioned, order-stable summary for serialization and comparisons.
    pub fn to_doc(&self) -> DecompositionDoc {
        let squares = self
            .squares
            .iter()
            .map(|s| SquareDoc {
                i: s.square.i,
                j: s.square.j,
                k: s.square.k,
                label: s.label,
                rep: [s.rep.x1, s.rep.x2],
            })
            .collect();
        let mu = self
            .squares
            .iter()
            .filter_map(|s| {
                s.mu.map(|m| {
                    ([s.square.i, s.square.j, s.square.k as i64], {
                        let t = self.squares[m].square;
                        [t.i, t.j, t.k as i64]
                    })
                })
            })
            .collect();
        DecompositionDoc { version: 1, unit_scale: self.unit, squares, mu }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareDoc {
    pub i: i64,
    pub j: i64,
    pub k: i32,
    pub label: Label,
    pub rep: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionDoc {
    pub version: u32,
    pub unit_scale: f64,
    pub squares: Vec<SquareDoc>,
    pub mu: Vec<([i64; 3], [i64; 3])>,
}

pub fn build_decomposition(e: &[Point2], cfg: &Config) -> Result<CZDecomposition> {
    cfg.validate()?;
    check_points(e)?;
    let unit = cfg.unit_scale;
    let grid = PointGrid::new(e);
    let oracle = SigmaOracle::new(e, cfg)?;
    let (mut lo, mut hi) = match e.first() {
        Some(&p) => (p, p),
        None => (Point2::new(0.0, 0.0), Point2::new(unit * 0.5, unit * 0.5)),
    };
    for p in e {
        lo = Point2::new(lo.x1.min(p.x1), lo.x2.min(p.x2));
        hi = Point2::new(hi.x1.max(p.x1), hi.x2.max(p.x2));
    }
    let i0 = (lo.x1 / unit).floor() as i64 - 3;
    let i1 = (hi.x1 / unit).floor() as i64 + 3;
    let j0 = (lo.x2 / unit).floor() as i64 - 3;
    let j1 = (hi.x2 / unit).floor() as i64 + 3;
    let mut b = Builder {
        unit,
        c0: cfg.c0,
        max_depth: cfg.max_depth as i32,
        grid: &grid,
        oracle: &oracle,
        memo: HashMap::new(),
        leaves: HashSet::new(),
        witnesses: Vec::new(),
        witness_seen: HashSet::new(),
    };
    for i in i0..=i1 {
        for j in j0..=j1 {
            b.refine(DyadicSquare::new(i, j, 0))?;
        }
    }
    b.enforce_witnesses()?;
    let probes_evaluated = b.memo.len();
    let mut keys: Vec<SquareKey> = b.leaves.into_iter().collect();
    keys.sort_unstable_by_key(|a| (a.2, a.0, a.1));
    let mut index = HashMap::with_capacity(keys.len());
    let mut squares = Vec::with_capacity(keys.len());
    let mut min_level = 0;
    for (n, &(i, j, k)) in keys.iter().enumerate() {
        let q = DyadicSquare::new(i, j, k);
        min_level = min_level.min(k);
        index.insert(q.key(), n);
        let (dlo, dhi) = q.dilate(2.0, unit);
        let data_2q = grid.in_box(dlo, dhi);
        let label = if !data_2q.is_empty() {
            Label::Sharp
        } else if k < 0 {
            Label::Empty
        } else {
            Label::Trivial
        };
        squares.push(SquareInfo {
            square: q,
            label,
            rep: q.center(unit),
            rep_dist: f64::INFINITY,
            data_2q,
            mu: None,
            straightening: None,
        });
    }
    let bounds =
        (Point2::new(i0 as f64 * unit, j0 as f64 * unit), Point2::new((i1 + 1) as f64 * unit, (j1 + 1) as f64 * unit));
    let mut dec =
        CZDecomposition { unit, points: e.to_vec(), grid, squares, index, min_level, bounds, probes_evaluated };
    for n in 0..dec.squares.len() {
        match dec.squares[n].label {
            Label::Sharp => {
                let (rep, dist) = representative_point(&dec, n)?;
                dec.squares[n].rep = rep;
                dec.squares[n].rep_dist = dist;
                let st = build_straightening(&dec, n, &oracle, cfg)?;
                dec.squares[n].straightening = Some(st);
            }
            Label::Empty => {
                dec.squares[n].rep_dist = dec.grid.nearest(&dec.squares[n].rep).map_or(f64::INFINITY, |x| x.1);
                let m = mu_target(&dec, n)?;
                dec.squares[n].mu = Some(m);
            }
            Label::Trivial => {
                dec.squares[n].rep_dist = dec.grid.nearest(&dec.squares[n].rep).map_or(f64::INFINITY, |x| x.1);
            }
        }
    }
    Ok(dec)
}

/// Max-distance node of a `5 x 5` grid on `Q` (finer grids only as a fallback), with its distance.
pub fn representative_point(dec: &CZDecomposition, idx: usize) -> Result<(Point2, f64)> {
    let info = &dec.squares[idx];
    let q = info.square;
    if info.data_2q.is_empty() {
        let c = q.center(dec.unit);
        return Ok((c, dec.grid.nearest(&c).map_or(f64::INFINITY, |x| x.1)));
    }
    let s = q.side(dec.unit);
    let lo = q.lo(dec.unit);
    for n in [4usize, 8, 16] {
        let mut best = (lo, -1.0);
        for a in 0..=n {
            for b in 0..=n {
                let p = Point2::new(lo.x1 + s * a as f64 / n as f64, lo.x2 + s * b as f64 / n as f64);
                let d = dec.grid.nearest(&p).map_or(f64::INFINITY, |x| x.1);
                if d > best.1 {
                    best = (p, d);
                }
            }
        }
        if best.1 >= s / 8.0 {
            return Ok(best);
        }
    }
    Err(Error::RepresentativePoint(q.key()))
}

fn rotation_from_normal(n: [f64; 2]) -> [[f64; 2]; 2] {
    // Second axis along n, first axis its clockwise perpendicular.
    [[n[1], -n[0]], n]
}

fn principal_axis(pts: &[Point2]) -> [f64; 2] {
    let m = pts.len() as f64;
    let cx = pts.iter().map(|p| p.x1).sum::<f64>() / m;
    let cy = pts.iter().map(|p| p.x2).sum::<f64>() / m;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p.x1 - cx, p.x2 - cy);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let th = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    [th.cos(), th.sin()]
}

/// Knots sorted by the first rotated coordinate, or `None` when two coincide.
fn graph_knots(
    dec: &CZDecomposition,
    idx: &[usize],
    rot: &[[f64; 2]; 2],
    origin: Point2,
) -> Option<(Vec<f64>, Vec<f64>, Vec<usize>)> {
    let mut rows: Vec<(f64, f64, usize)> = idx
        .iter()
        .map(|&i| {
            let d = dec.points[i].diff(&origin);
            (rot[0][0] * d[0] + rot[0][1] * d[1], rot[1][0] * d[0] + rot[1][1] * d[1], i)
        })
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
    if rows.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return None;
    }
    Some((rows.iter().map(|r| r.0).collect(), rows.iter().map(|r| r.1).collect(), rows.iter().map(|r| r.2).collect()))
}

fn build_straightening(dec: &CZDecomposition, idx: usize, oracle: &SigmaOracle, cfg: &Config) -> Result<Straightening> {
    let info = &dec.squares[idx];
    let q = info.square;
    let origin = q.center(dec.unit);
    let data = &info.data_2q;
    let mut rotation = [[1.0, 0.0], [0.0, 1.0]];
    if data.len() > 1 {
        let ex = oracle.probe(dec.points[data[0]]).extreme;
        let g = (ex[1] * ex[1] + ex[2] * ex[2]).sqrt();
        if g > 0.0 {
            rotation = rotation_from_normal([ex[1] / g, ex[2] / g]);
        }
    }
    let knots = match graph_knots(dec, data, &rotation, origin) {
        Some(k) => k,
        None => {
            let pts: Vec<Point2> = data.iter().map(|&i| dec.points[i]).collect();
            let a = principal_axis(&pts);
            rotation = [a, [-a[1], a[0]]];
            graph_knots(dec, data, &rotation, origin).ok_or(Error::NotGraphLike(q.key()))?
        }
    };
    let (t, s, knot_data) = knots;
    let curve = extend_linear(&OneDData::new(t, s)?);
    let side = q.side(dec.unit);
    let mut slope_max: f64 = 0.0;
    let mut curvature_max: f64 = 0.0;
    let half = side * std::f64::consts::SQRT_2;
    for n in 0..=64 {
        let t = -half + 2.0 * half * n as f64 / 64.0;
        let (_, d1, d2) = curve.eval(t);
        slope_max = slope_max.max(d1.abs());
        curvature_max = curvature_max.max(d2.abs() * side);
    }
    let _ = cfg;
    Ok(Straightening { rotation, origin, curve, square: q, knot_data, slope_max, curvature_max })
}

/// The Sharp square holding the lowest-index data point of the parent's double.
fn mu_target(dec: &CZDecomposition, idx: usize) -> Result<usize> {
    let q = dec.squares[idx].square;
    let (lo, hi) = q.parent().dilate(2.0, dec.unit);
    let data = dec.grid.in_box(lo, hi);
    let first = *data.first().ok_or(Error::MuUndefined(q.key()))?;
    let target = dec.locate(&dec.points[first]).ok_or(Error::MuUndefined(q.key()))?;
    if dec.squares[target].label != Label::Sharp {
        return Err(Error::MuUndefined(q.key()));
    }
    Ok(target)
}

/// Data indices of the knots of a straightening, as a depth set.
pub fn knot_depth(st: &Straightening, knots: &DepthSet) -> DepthSet {
    DepthSet::from_unsorted(knots.indices.iter().map(|&k| st.knot_data[k]).collect())
}
