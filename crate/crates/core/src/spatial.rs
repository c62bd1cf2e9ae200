//! Uniform bucket grid over the data sites: nearest-first traversal and box queries.

use crate::jetcore::Point2;

#[derive(Debug, Clone)]
pub struct PointGrid {
    points: Vec<Point2>,
    origin: Point2,
    cell: f64,
    nx: i64,
    ny: i64,
    starts: Vec<usize>,
    items: Vec<usize>,
}

impl PointGrid {
    pub fn new(points: &[Point2]) -> Self {
        let n = points.len();
        if n == 0 {
            return PointGrid {
                points: Vec::new(),
                origin: Point2::new(0.0, 0.0),
                cell: 1.0,
                nx: 0,
                ny: 0,
                starts: vec![0],
                items: Vec::new(),
            };
        }
        let (mut lo, mut hi) = (points[0], points[0]);
        for p in points {
            lo.x1 = lo.x1.min(p.x1);
            lo.x2 = lo.x2.min(p.x2);
            hi.x1 = hi.x1.max(p.x1);
            hi.x2 = hi.x2.max(p.x2);
        }
        let w = (hi.x1 - lo.x1).max(1e-300);
        let h = (hi.x2 - lo.x2).max(1e-300);
        let extent = w.max(h);
        // About one point per cell, never more than ~4N cells.
        let mut cell = ((w * h) / n as f64).sqrt();
        if !(cell > extent / (4.0 * n as f64)) {
            cell = extent / (n as f64).max(1.0);
        }
        if !(cell > 0.0) || !cell.is_finite() {
            cell = 1.0;
        }
        let nx = ((w / cell).floor() as i64 + 1).max(1);
        let ny = ((h / cell).floor() as i64 + 1).max(1);
        let ncell = (nx * ny) as usize;
        let mut counts = vec![0usize; ncell + 1];
        let mut which = Vec::with_capacity(n);
        for p in points {
            let c = Self::cell_index(lo, cell, nx, ny, p);
            which.push(c);
            counts[c + 1] += 1;
        }
        for c in 0..ncell {
            counts[c + 1] += counts[c];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut items = vec![0usize; n];
        for (i, &c) in which.iter().enumerate() {
            items[fill[c]] = i;
            fill[c] += 1;
        }
        PointGrid { points: points.to_vec(), origin: lo, cell, nx, ny, starts, items }
    }

    fn cell_index(origin: Point2, cell: f64, nx: i64, ny: i64, p: &Point2) -> usize {
        let ci = (((p.x1 - origin.x1) / cell).floor() as i64).clamp(0, nx - 1);
        let cj = (((p.x2 - origin.x2) / cell).floor() as i64).clamp(0, ny - 1);
        (cj * nx + ci) as usize
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn cell_items(&self, ci: i64, cj: i64) -> &[usize] {
        let c = (cj * self.nx + ci) as usize;
        &self.items[self.starts[c]..self.starts[c + 1]]
    }

    /// Cell coordinates of `p`, clamped for far-away queries; the flag reports clamping.
    fn raw_cell(&self, p: &Point2) -> (i64, i64, bool) {
        let fi = ((p.x1 - self.origin.x1) / self.cell).floor();
        let fj = ((p.x2 - self.origin.x2) / self.cell).floor();
        let lim = 4.0 * (self.nx.max(self.ny) as f64) + 8.0;
        let clamped = !(fi.abs() <= lim && fj.abs() <= lim);
        (fi.clamp(-lim, lim) as i64, fj.clamp(-lim, lim) as i64, clamped)
    }

    /// Visits points ring by ring around `p`. The callback receives the ring's
    /// indices and a lower bound on the distance of every point not yet visited;
    /// returning `false` stops the traversal.
    pub fn rings<F: FnMut(&[usize], f64) -> bool>(&self, p: &Point2, mut visit: F) {
        if self.points.is_empty() {
            return;
        }
        let (ci, cj, clamped) = self.raw_cell(p);
        let kmax = (ci.abs().max((ci - self.nx + 1).abs())).max(cj.abs().max((cj - self.ny + 1).abs()));
        let mut buf = Vec::new();
        for k in 0..=kmax {
            buf.clear();
            let (i0, i1, j0, j1) = (ci - k, ci + k, cj - k, cj + k);
            for j in j0.max(0)..=j1.min(self.ny - 1) {
                if j == j0 || j == j1 {
                    for i in i0.max(0)..=i1.min(self.nx - 1) {
                        buf.extend_from_slice(self.cell_items(i, j));
                    }
                } else {
                    if i0 >= 0 && i0 < self.nx {
                        buf.extend_from_slice(self.cell_items(i0, j));
                    }
                    if i1 != i0 && i1 >= 0 && i1 < self.nx {
                        buf.extend_from_slice(self.cell_items(i1, j));
                    }
                }
            }
            let bound = if k == kmax {
                f64::INFINITY
            } else if clamped {
                0.0
            } else {
                k as f64 * self.cell
            };
            if !visit(&buf, bound) {
                return;
            }
        }
    }

    /// Nearest site (ties to the lower index) and its distance.
    pub fn nearest(&self, p: &Point2) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        self.rings(p, |idx, bound| {
            for &i in idx {
                let d2 = self.points[i].dist2(p);
                best = match best {
                    Some((bi, bd)) if bd < d2 || (bd == d2 && bi < i) => Some((bi, bd)),
                    _ => Some((i, d2)),
                };
            }
            match best {
                Some((_, bd)) => bd.sqrt() >= bound,
                None => true,
            }
        });
        best.map(|(i, d2)| (i, d2.sqrt()))
    }

    /// The `k` nearest sites ordered by distance, ties broken by index.
    pub fn k_nearest(&self, p: &Point2, k: usize) -> Vec<usize> {
        if k == 0 {
            return Vec::new();
        }
        if k >= self.points.len() {
            let mut all: Vec<(f64, usize)> = self.points.iter().enumerate().map(|(i, q)| (q.dist2(p), i)).collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            return all.into_iter().map(|(_, i)| i).collect();
        }
        let mut cand: Vec<(f64, usize)> = Vec::new();
        self.rings(p, |idx, bound| {
            cand.extend(idx.iter().map(|&i| (self.points[i].dist2(p), i)));
            if cand.len() < k {
                return true;
            }
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.truncate(k);
            !(cand[k - 1].0.sqrt() < bound)
        });
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        cand.truncate(k);
        cand.into_iter().map(|(_, i)| i).collect()
    }

    /// Indices (ascending) of sites in the closed box `[lo, hi]`.
    pub fn in_box(&self, lo: Point2, hi: Point2) -> Vec<usize> {
        let mut out = Vec::new();
        if self.points.is_empty() || lo.x1 > hi.x1 || lo.x2 > hi.x2 {
            return out;
        }
        let f = |v: f64, o: f64, n: i64| (((v - o) / self.cell).floor() as i64).clamp(0, n - 1);
        let (i0, i1) = (f(lo.x1, self.origin.x1, self.nx), f(hi.x1, self.origin.x1, self.nx));
        let (j0, j1) = (f(lo.x2, self.origin.x2, self.ny), f(hi.x2, self.origin.x2, self.ny));
        for j in j0..=j1 {
            for i in i0..=i1 {
                for &k in self.cell_items(i, j) {
                    let q = self.points[k];
                    if q.x1 >= lo.x1 && q.x1 <= hi.x1 && q.x2 >= lo.x2 && q.x2 <= hi.x2 {
                        out.push(k);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}
