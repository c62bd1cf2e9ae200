//! Computable stand-ins for the convex jet sets: the sigma surrogate body and
//! its diameter, nearest-point depth sets, and the convex programs behind the
//! feasible jet set and the prescribed jet.

mod fieldopt;
pub mod polytope;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jetcore::{check_points, Config, Jet, Point2, WhitneyField};
use crate::spatial::PointGrid;

pub use fieldopt::{FieldProgram, Site};
use polytope::{Polygon, Polytope};

/// Sorted, duplicate-free list of data indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct DepthSet {
    pub indices: Vec<usize>,
}

impl DepthSet {
    pub fn from_sorted(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        DepthSet { indices }
    }

    pub fn from_unsorted(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        DepthSet { indices }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn union(&self, other: &DepthSet) -> DepthSet {
        let mut v = Vec::with_capacity(self.len() + other.len());
        let (mut a, mut b) = (0, 0);
        while a < self.indices.len() || b < other.indices.len() {
            let next = match (self.indices.get(a), other.indices.get(b)) {
                (Some(&x), Some(&y)) if x == y => {
                    a += 1;
                    b += 1;
                    x
                }
                (Some(&x), Some(&y)) if x < y => {
                    a += 1;
                    x
                }
                (Some(_), Some(&y)) => {
                    b += 1;
                    y
                }
                (Some(&x), None) => {
                    a += 1;
                    x
                }
                (None, Some(&y)) => {
                    b += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            v.push(next);
        }
        DepthSet { indices: v }
    }
}

/// Symmetric body of jets at `center`:
/// `|P(center)| <= value_cap`, `|grad P| <= grad_cap`, and `|P(y)| <= value_bound` per constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaBody {
    pub center: Point2,
    pub caps: (f64, f64),
    pub point_constraints: Vec<(Point2, f64, f64)>,
    /// `center` is itself a constraint point, so `P(center) = 0`.
    pub degenerate: bool,
}

impl SigmaBody {
    pub fn contains(&self, p: &Jet, tol: f64) -> bool {
        let q = p.reexpand(self.center);
        let g = (q.grad[0] * q.grad[0] + q.grad[1] * q.grad[1]).sqrt();
        if g > self.caps.1 + tol {
            return false;
        }
        if self.degenerate {
            if q.value.abs() > tol {
                return false;
            }
        } else if q.value.abs() > self.caps.0 + tol {
            return false;
        }
        self.point_constraints.iter().all(|(y, vb, gb)| q.evaluate(y).abs() <= vb + tol && g <= gb + tol)
    }
}

pub fn sigma_body(x: Point2, s: &[Point2], cfg: &Config) -> SigmaBody {
    let cap = cfg.norm_cap;
    let degenerate = s.contains(&x);
    let point_constraints = s.iter().filter(|y| **y != x).map(|y| (*y, x.dist2(y), cap)).collect();
    SigmaBody { center: x, caps: (cap, cap), point_constraints, degenerate }
}

/// Number of sides of the polygon standing in for the gradient disk.
pub fn disk_sides(cfg: &Config) -> usize {
    (cfg.direction_samples / 16).clamp(6, 64)
}

/// Result of a diameter probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaProbe {
    pub diameter: f64,
    /// Jet `(value, grad1, grad2)` at the probe point realizing half the diameter.
    pub extreme: [f64; 3],
}

/// Diameter evaluator for one data set, with a spatial index for nearest-first constraint order.
#[derive(Debug, Clone)]
pub struct SigmaOracle {
    grid: PointGrid,
    cap: f64,
    sides: usize,
}

impl SigmaOracle {
    pub fn new(points: &[Point2], cfg: &Config) -> Result<Self> {
        cfg.validate()?;
        Ok(SigmaOracle { grid: PointGrid::new(points), cap: cfg.norm_cap, sides: disk_sides(cfg) })
    }

    pub fn grid(&self) -> &PointGrid {
        &self.grid
    }

    /// Ring-norm diameter of the surrogate body at `x` for the whole data set.
    pub fn probe(&self, x: Point2) -> SigmaProbe {
        let pts = self.grid.points();
        let on_data = self.grid.nearest(&x).is_some_and(|(_, d)| d == 0.0);
        if on_data {
            let mut poly = Polygon::disk(self.cap, self.sides);
            self.grid.rings(&x, |idx, bound| {
                for &i in idx {
                    let w = pts[i].diff(&x);
                    let r2 = w[0] * w[0] + w[1] * w[1];
                    if r2 == 0.0 {
                        continue;
                    }
                    poly.clip(w, r2);
                    poly.clip([-w[0], -w[1]], r2);
                }
                // |g.w| <= rho |w| <= |w|^2 once |w| >= rho.
                poly.farthest().0 > bound
            });
            let (r, v) = poly.farthest();
            return SigmaProbe { diameter: 2.0 * r, extreme: [0.0, v[0], v[1]] };
        }
        let mut body = Polytope::prism(self.cap, self.sides);
        self.grid.rings(&x, |idx, bound| {
            for &i in idx {
                let w = pts[i].diff(&x);
                let r2 = w[0] * w[0] + w[1] * w[1];
                body.clip([1.0, w[0], w[1]], r2);
                body.clip([-1.0, -w[0], -w[1]], r2);
            }
            // |v + g.w| <= rho sqrt(1 + r^2) <= r^2 makes every farther point redundant.
            let rho = body.farthest().0;
            !(bound * bound >= rho * (1.0 + bound * bound).sqrt())
        });
        let (r, v) = body.farthest();
        SigmaProbe { diameter: 2.0 * r, extreme: v }
    }
}

/// Ring-norm diameter of the surrogate for subsets of size at most `k`; the
/// surrogate's constraints are per point, so this is the diameter for all of `e`.
pub fn sigma_sharp_diameter(x: Point2, e: &[Point2], k: usize, cfg: &Config) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    Ok(SigmaOracle::new(e, cfg)?.probe(x).diameter)
}

/// The `48 k0` data points nearest to `x0` (ties to the lower index), as sorted indices.
#[allow(non_snake_case)]
pub fn depth_set_S(x0: Point2, e: &[Point2], cfg: &Config) -> DepthSet {
    depth_set_in(x0, &PointGrid::new(e), cfg)
}

pub fn depth_set_in(x0: Point2, grid: &PointGrid, cfg: &Config) -> DepthSet {
    DepthSet::from_unsorted(grid.k_nearest(&x0, cfg.depth_cap()))
}

/// Jets at `x0` compatible with the data under the budget `Q + M <= C_T M^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleJetProblem {
    pub x0: Point2,
    pub constrained_points: Vec<(Point2, f64)>,
    pub free_points: Vec<Point2>,
    pub m: f64,
    pub c_t: f64,
}

impl FeasibleJetProblem {
    pub fn budget(&self) -> f64 {
        self.c_t * self.m * self.m
    }

    fn validate(&self) -> Result<()> {
        if !(self.m >= 0.0) || !self.m.is_finite() || !(self.c_t > 0.0) {
            return Err(Error::InvalidArgument("M must be >= 0 and C_T > 0".into()));
        }
        let mut pts: Vec<Point2> = self.constrained_points.iter().map(|c| c.0).collect();
        for (index, c) in self.constrained_points.iter().enumerate() {
            if !(c.1 >= 0.0) {
                return Err(Error::NegativeValue { index, value: c.1 });
            }
        }
        pts.extend(self.free_points.iter().copied());
        check_points(&pts)?;
        if !self.x0.is_finite() {
            return Err(Error::InvalidArgument("x0 must be finite".into()));
        }
        Ok(())
    }
}

/// Data sites with pinned values; gradients free except where the value is 0.
fn data_sites(points: &[(Point2, f64)], grads: Option<&[[f64; 2]]>) -> Vec<Site> {
    points
        .iter()
        .enumerate()
        .map(|(i, &(at, value))| Site {
            at,
            value,
            grad: if value > 0.0 { grads.map_or([0.0, 0.0], |g| g[i]) } else { [0.0, 0.0] },
            value_free: false,
            grad_free: value > 0.0 && grads.is_none(),
        })
        .collect()
}

/// Minimal `Q + M` over gradients with the values pinned: the data-only field.
pub fn data_field(points: &[(Point2, f64)]) -> Result<(Vec<[f64; 2]>, f64)> {
    let mut prog = FieldProgram::new(data_sites(points, None), None);
    let f = prog.minimize(0.0)?;
    Ok((prog.sites().iter().map(|s| s.grad).collect(), f))
}

/// Minimal-norm interpolating field under the smooth proxy `Q + M`, and `sqrt(Q + M)`.
pub fn field_min_norm(points: &[Point2], values: &[f64]) -> Result<(WhitneyField, f64)> {
    if points.len() != values.len() {
        return Err(Error::InvalidArgument("points and values differ in length".into()));
    }
    check_points(points)?;
    for (index, &value) in values.iter().enumerate() {
        if !(value >= 0.0) {
            return Err(Error::NegativeValue { index, value });
        }
    }
    let data: Vec<(Point2, f64)> = points.iter().copied().zip(values.iter().copied()).collect();
    let (grads, f) = data_field(&data)?;
    let jets = data.iter().zip(&grads).map(|(&(p, v), &g)| Jet::new(p, v, g)).collect();
    Ok((WhitneyField::new(jets)?, f.max(0.0).sqrt()))
}

/// The convex program over fields on the problem's points. Data gradients are
/// frozen at `frozen` when given.
struct JetProgram {
    prog: FieldProgram,
    ring: usize,
    /// `x0` coincides with a constrained point.
    pinned_x0: bool,
}

fn jet_program(prob: &FeasibleJetProblem, frozen: Option<&[[f64; 2]]>) -> JetProgram {
    let mut sites = data_sites(&prob.constrained_points, frozen);
    let ring = sites.iter().position(|s| s.at == prob.x0);
    let (ring, pinned_x0) = match ring {
        Some(r) => {
            if sites[r].value > 0.0 {
                sites[r].grad_free = true;
            }
            (r, true)
        }
        None => {
            let vmax = prob.constrained_points.iter().fold(0.0f64, |m, c| m.max(c.1));
            sites.push(Site {
                at: prob.x0,
                value: if vmax > 0.0 { 0.5 * vmax } else { 1.0 },
                grad: [0.0, 0.0],
                value_free: true,
                grad_free: true,
            });
            (sites.len() - 1, false)
        }
    };
    for &p in &prob.free_points {
        if p != prob.x0 {
            sites.push(Site { at: p, value: 1.0, grad: [0.0, 0.0], value_free: true, grad_free: true });
        }
    }
    JetProgram { prog: FieldProgram::new(sites, Some(ring)), ring, pinned_x0 }
}

/// Whether data gradients are solved jointly with the jet or frozen at the data-only field.
fn frozen_needed(prob: &FeasibleJetProblem, cfg: &Config) -> bool {
    prob.constrained_points.len() > cfg.joint_limit
}

fn frozen_field(prob: &FeasibleJetProblem, cfg: &Config, given: Option<&[[f64; 2]]>) -> Result<Option<Vec<[f64; 2]>>> {
    if !frozen_needed(prob, cfg) {
        return Ok(None);
    }
    match given {
        Some(g) => Ok(Some(g.to_vec())),
        None => Ok(Some(data_field(&prob.constrained_points)?.0)),
    }
}

fn min_objective(prob: &FeasibleJetProblem, frozen: Option<&[[f64; 2]]>) -> Result<(f64, JetProgram)> {
    let mut jp = jet_program(prob, frozen);
    let f = jp.prog.minimize(0.0)?;
    Ok((f, jp))
}

fn within(f: f64, budget: f64, tol: f64) -> bool {
    f <= budget * (1.0 + tol) + f64::MIN_POSITIVE
}

/// Whether some field interpolating the data attains `Q + M <= C_T M^2`.
pub fn gset_feasible(prob: &FeasibleJetProblem, cfg: &Config) -> Result<bool> {
    prob.validate()?;
    if prob.constrained_points.iter().all(|c| c.1 == 0.0) {
        return Ok(true);
    }
    let frozen = frozen_field(prob, cfg, None)?;
    let (f, _) = min_objective(prob, frozen.as_deref())?;
    Ok(within(f, prob.budget(), cfg.qp_tol))
}

/// Least ring-norm jet at `x0` among feasible fields; the zero jet when infeasible.
pub fn prescribed_jet(prob: &FeasibleJetProblem, cfg: &Config) -> Result<Jet> {
    prescribed_jet_with(prob, cfg, None)
}

/// As [`prescribed_jet`], reusing a precomputed data-only field (used for large depth sets).
pub fn prescribed_jet_with(prob: &FeasibleJetProblem, cfg: &Config, data_grads: Option<&[[f64; 2]]>) -> Result<Jet> {
    prob.validate()?;
    let zero = Jet::zero(prob.x0);
    if prob.constrained_points.iter().all(|c| c.1 == 0.0) {
        return Ok(zero);
    }
    let frozen = frozen_field(prob, cfg, data_grads)?;
    let frozen = frozen.as_deref();
    let budget = prob.budget();
    let tol = cfg.qp_tol;
    let probe = jet_program(prob, frozen);
    if !probe.pinned_x0 {
        // Is the zero jet itself admissible?
        let mut sites = probe.prog.sites().to_vec();
        let r = probe.ring;
        sites[r].value = 0.0;
        sites[r].value_free = false;
        sites[r].grad_free = false;
        let mut p0 = FieldProgram::new(sites, None);
        let f0 = p0.minimize(0.0)?;
        if within(f0, budget, tol) {
            return Ok(zero);
        }
    }
    let (fmin, mut best) = min_objective(prob, frozen)?;
    if !within(fmin, budget, tol) {
        return Ok(zero);
    }
    let ring = best.ring;
    let jet_of = |p: &FieldProgram| {
        let s = p.sites()[ring];
        Jet::new(prob.x0, s.value, s.grad)
    };
    if fmin >= budget {
        return Ok(jet_of(&best.prog));
    }
    // Lagrangian path: z(mu) minimizes mu |P|^2 + Q + M; Q + M increases along it.
    // Find mu with Q + M = budget by safeguarded secant in log mu.
    let r2 = best.prog.ring2().max(f64::MIN_POSITIVE);
    let mut lo: (f64, f64, FieldProgram) = (f64::NEG_INFINITY, fmin, best.prog.clone());
    let mut hi: Option<(f64, f64, FieldProgram)> = None;
    let mut ell = ((budget - fmin).max(budget * 1e-3) / r2).max(1e-300).ln();
    for _ in 0..200 {
        let mut p = if let Some(h) = &hi {
            if (ell - h.0).abs() < (ell - lo.0).abs() {
                h.2.clone()
            } else {
                lo.2.clone()
            }
        } else {
            lo.2.clone()
        };
        let f = p.minimize(ell.exp())?;
        if f <= budget {
            lo = (ell, f, p);
        } else {
            hi = Some((ell, f, p));
        }
        let gap = budget - lo.1;
        if gap <= 1e-12 * budget {
            break;
        }
        match &hi {
            None => ell += 3.0,
            Some(h) => {
                if h.0 - lo.0 < 1e-13 * (1.0 + h.0.abs()) {
                    break;
                }
                let next = if lo.0.is_finite() {
                    // Secant on (log mu, Q + M), clamped into the bracket.
                    let t = (budget - lo.1) / (h.1 - lo.1);
                    let cand = lo.0 + t * (h.0 - lo.0);
                    let w = h.0 - lo.0;
                    cand.clamp(lo.0 + 0.02 * w, h.0 - 0.02 * w)
                } else {
                    h.0 - 3.0
                };
                ell = next;
            }
        }
    }
    best.prog = lo.2;
    Ok(jet_of(&best.prog))
}
