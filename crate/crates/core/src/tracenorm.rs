//! Order-of-magnitude estimate of the nonnegative trace norm, and a brute-force
//! oracle for tiny instances.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::convexgeom::{depth_set_in, field_min_norm, DepthSet};
use crate::czdecomp::{build_decomposition, CZDecomposition, DyadicSquare, Label};
use crate::error::{Error, Result};
use crate::jetcore::{check_points, Config, Jet, Point2, WhitneyField};
use crate::linalg::spd_solve;

/// Largest instance accepted by [`oracle_norm`].
pub const ORACLE_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub m_hat: f64,
    /// Local value per Sharp square.
    pub per_square: Vec<(DyadicSquare, f64)>,
    /// Square and depth set attaining `m_hat`; `None` without Sharp squares.
    pub lower_witness: Option<(DyadicSquare, DepthSet)>,
}

fn check_values(f: &[f64], n: usize) -> Result<()> {
    if f.len() != n {
        return Err(Error::InvalidArgument(format!("{} values for {} points", f.len(), n)));
    }
    for (index, &value) in f.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if value < 0.0 {
            return Err(Error::NegativeValue { index, value });
        }
    }
    Ok(())
}

pub fn estimate_norm(e: &[Point2], f: &[f64], cfg: &Config) -> Result<NormEstimate> {
    check_values(f, e.len())?;
    let dec = build_decomposition(e, cfg)?;
    estimate_norm_on(&dec, f, cfg)
}

/// Max over Sharp squares of the least `sqrt(Q + M)` over fields interpolating
/// the data of the square's depth set. Identical depth sets are solved once.
pub fn estimate_norm_on(dec: &CZDecomposition, f: &[f64], cfg: &Config) -> Result<NormEstimate> {
    check_values(f, dec.points().len())?;
    let pts = dec.points();
    let mut solved: HashMap<DepthSet, f64> = HashMap::new();
    let mut est = NormEstimate { m_hat: 0.0, per_square: Vec::new(), lower_witness: None };
    for (idx, info) in dec.squares().iter().enumerate() {
        if info.label != Label::Sharp {
            continue;
        }
        let depth = depth_set_in(dec.square(idx).rep, dec.grid(), cfg);
        let value = match solved.get(&depth) {
            Some(&v) => v,
            None => {
                let p: Vec<Point2> = depth.indices.iter().map(|&i| pts[i]).collect();
                let v: Vec<f64> = depth.indices.iter().map(|&i| f[i]).collect();
                let r = field_min_norm(&p, &v)?.1;
                solved.insert(depth.clone(), r);
                r
            }
        };
        est.per_square.push((info.square, value));
        if est.lower_witness.is_none() || value > est.m_hat {
            est.m_hat = value;
            est.lower_witness = Some((info.square, depth));
        }
    }
    Ok(est)
}

/// Whitney-field norm of the oracle: pair quotients, cushions and ring norms, each as a max.
pub fn oracle_objective(v: &WhitneyField) -> f64 {
    let jets = v.jets();
    let mut pair = 0.0f64;
    let mut cushion = 0.0f64;
    let mut ring = 0.0f64;
    for (a, pa) in jets.iter().enumerate() {
        ring = ring.max(pa.ring_norm());
        cushion = cushion.max(pa.cushion().finite().unwrap_or(f64::INFINITY));
        for (b, pb) in jets.iter().enumerate() {
            if a == b {
                continue;
            }
            let d = pa.base.dist(&pb.base);
            let dv = pa.value - pb.evaluate(&pa.base);
            pair = pair
                .max(dv.abs() / (d * d))
                .max((pa.grad[0] - pb.grad[0]).abs() / d)
                .max((pa.grad[1] - pb.grad[1]).abs() / d);
        }
    }
    pair + cushion + ring
}

/// One barrier term `-log s(z)` with `s` given by value, gradient and Hessian.
struct Barrier<'a> {
    n: usize,
    grad: &'a mut [f64],
    hess: &'a mut [f64],
}

impl Barrier<'_> {
    fn add(&mut self, s: f64, ds: &[(usize, f64)], dds: &[(usize, f64)]) -> f64 {
        for &(i, gi) in ds {
            self.grad[i] -= gi / s;
            for &(j, gj) in ds {
                self.hess[i * self.n + j] += gi * gj / (s * s);
            }
        }
        for &(i, h) in dds {
            self.hess[i * self.n + i] -= h / s;
        }
        -s.ln()
    }
}

/// Variables: free gradients (two per site), then the epigraph variables for the
/// pair, cushion and ring maxima.
struct OracleProblem {
    pts: Vec<Point2>,
    vals: Vec<f64>,
    /// Variable offset of each site's gradient, if free.
    gvar: Vec<Option<usize>>,
    n: usize,
    t_pair: Option<usize>,
    t_cush: usize,
    t_ring: usize,
}

/// Linear form `c + a.z` in sparse form.
type Lin = (f64, Vec<(usize, f64)>);

impl OracleProblem {
    fn grad(&self, z: &[f64], i: usize) -> [f64; 2] {
        self.gvar[i].map_or([0.0, 0.0], |o| [z[o], z[o + 1]])
    }

    /// The signed quantities whose absolute values enter the pair maximum.
    fn pair_forms(&self) -> Vec<Lin> {
        let mut out = Vec::new();
        let n = self.pts.len();
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let u = self.pts[a].diff(&self.pts[b]);
                let d = self.pts[a].dist(&self.pts[b]);
                // (v_a - v_b - g_b.u) / d^2
                let mut coef = Vec::new();
                if let Some(o) = self.gvar[b] {
                    coef.push((o, -u[0] / (d * d)));
                    coef.push((o + 1, -u[1] / (d * d)));
                }
                out.push(((self.vals[a] - self.vals[b]) / (d * d), coef));
                if a < b {
                    for k in 0..2 {
                        let mut coef = Vec::new();
                        if let Some(o) = self.gvar[a] {
                            coef.push((o + k, 1.0 / d));
                        }
                        if let Some(o) = self.gvar[b] {
                            coef.push((o + k, -1.0 / d));
                        }
                        out.push((0.0, coef));
                    }
                }
            }
        }
        out
    }

    /// Barrier value, gradient and Hessian at `z` (infinite outside the domain).
    fn barrier(&self, z: &[f64], forms: &[Lin], grad: &mut [f64], hess: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        hess.iter_mut().for_each(|h| *h = 0.0);
        let mut b = Barrier { n: self.n, grad, hess };
        let mut total = 0.0;
        if let Some(tp) = self.t_pair {
            for (c, coef) in forms {
                let l = c + coef.iter().map(|&(i, a)| a * z[i]).sum::<f64>();
                for sign in [1.0, -1.0] {
                    let s = z[tp] - sign * l;
                    if !(s > 0.0) {
                        return f64::INFINITY;
                    }
                    let mut ds: Vec<(usize, f64)> = coef.iter().map(|&(i, a)| (i, -sign * a)).collect();
                    ds.push((tp, 1.0));
                    total += b.add(s, &ds, &[]);
                }
            }
        }
        let (tc, tr) = (self.t_cush, self.t_ring);
        if !(z[tc] > 0.0) {
            return f64::INFINITY;
        }
        total += b.add(z[tc], &[(tc, 1.0)], &[]);
        for i in 0..self.pts.len() {
            let g = self.grad(z, i);
            let g2 = g[0] * g[0] + g[1] * g[1];
            let v = self.vals[i];
            if let Some(o) = self.gvar[i] {
                // t_c - |g|^2 / (4 v) > 0
                let s = z[tc] - g2 / (4.0 * v);
                if !(s > 0.0) {
                    return f64::INFINITY;
                }
                let ds = [(tc, 1.0), (o, -g[0] / (2.0 * v)), (o + 1, -g[1] / (2.0 * v))];
                let dds = [(o, -1.0 / (2.0 * v)), (o + 1, -1.0 / (2.0 * v))];
                total += b.add(s, &ds, &dds);
            }
            // t_r^2 - v^2 - |g|^2 > 0 with t_r > 0
            let s = z[tr] * z[tr] - v * v - g2;
            if !(s > 0.0) || !(z[tr] > 0.0) {
                return f64::INFINITY;
            }
            let mut ds = vec![(tr, 2.0 * z[tr])];
            let mut dds = vec![(tr, 2.0)];
            if let Some(o) = self.gvar[i] {
                ds.push((o, -2.0 * g[0]));
                ds.push((o + 1, -2.0 * g[1]));
                dds.push((o, -2.0));
                dds.push((o + 1, -2.0));
            }
            total += b.add(s, &ds, &dds);
        }
        total += b.add(z[tr], &[(tr, 1.0)], &[]);
        total
    }

    fn field(&self, z: &[f64]) -> Result<WhitneyField> {
        WhitneyField::new((0..self.pts.len()).map(|i| Jet::new(self.pts[i], self.vals[i], self.grad(z, i))).collect())
    }
}

/// Least oracle objective over fields interpolating `f` on `e`, by a barrier method.
pub fn oracle_norm(e: &[Point2], f: &[f64], cfg: &Config) -> Result<f64> {
    Ok(oracle_field(e, f, cfg)?.1)
}

/// The minimizing field and its objective.
pub fn oracle_field(e: &[Point2], f: &[f64], cfg: &Config) -> Result<(Option<WhitneyField>, f64)> {
    if e.len() > ORACLE_LIMIT {
        return Err(Error::SizeCap { n: e.len(), limit: ORACLE_LIMIT });
    }
    check_points(e)?;
    check_values(f, e.len())?;
    if e.is_empty() {
        return Ok((None, 0.0));
    }
    if f.iter().all(|&v| v == 0.0) {
        let zero = WhitneyField::new(e.iter().map(|&p| Jet::zero(p)).collect())?;
        return Ok((Some(zero), 0.0));
    }
    let mut gvar = Vec::with_capacity(e.len());
    let mut n = 0;
    for &v in f {
        if v > 0.0 {
            gvar.push(Some(n));
            n += 2;
        } else {
            gvar.push(None);
        }
    }
    let t_pair = if e.len() > 1 {
        n += 1;
        Some(n - 1)
    } else {
        None
    };
    let (t_cush, t_ring) = (n, n + 1);
    n += 2;
    let prob = OracleProblem { pts: e.to_vec(), vals: f.to_vec(), gvar, n, t_pair, t_cush, t_ring };
    let forms = prob.pair_forms();
    let mut z = vec![0.0; n];
    let vmax = f.iter().fold(0.0f64, |a, &b| a.max(b));
    if let Some(tp) = t_pair {
        z[tp] = forms.iter().map(|(c, _)| c.abs()).fold(0.0, f64::max) + 1.0;
    }
    z[t_cush] = 1.0;
    z[t_ring] = vmax + 1.0;
    let mut weights = vec![0.0; n];
    if let Some(tp) = t_pair {
        weights[tp] = 1.0;
    }
    weights[t_cush] = 1.0;
    weights[t_ring] = 1.0;
    let ncons = 2 * forms.len() * usize::from(t_pair.is_some()) + 2 * e.len() + 2;
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n * n];
    let mut g2 = vec![0.0; n];
    let mut h2 = vec![0.0; n * n];
    let mut t = 1.0 / (vmax + 1.0);
    let target = cfg.qp_tol.min(1e-9) * (vmax + 1.0);
    loop {
        for _ in 0..200 {
            let phi = prob.barrier(&z, &forms, &mut grad, &mut hess);
            let obj = t * weights.iter().zip(&z).map(|(w, x)| w * x).sum::<f64>() + phi;
            let rhs: Vec<f64> = (0..n).map(|i| -(t * weights[i] + grad[i])).collect();
            let step = spd_solve(n, &hess, &rhs)
                .ok_or_else(|| Error::NonConvergence("oracle barrier Hessian is singular".into()))?;
            let dec: f64 = -rhs.iter().zip(&step).map(|(a, b)| a * b).sum::<f64>();
            if dec.abs() < 1e-12 {
                break;
            }
            let mut alpha = 1.0;
            loop {
                let trial: Vec<f64> = z.iter().zip(&step).map(|(a, b)| a + alpha * b).collect();
                let phi_t = prob.barrier(&trial, &forms, &mut g2, &mut h2);
                let obj_t = t * weights.iter().zip(&trial).map(|(w, x)| w * x).sum::<f64>() + phi_t;
                if obj_t <= obj - 0.25 * alpha * dec {
                    z = trial;
                    break;
                }
                alpha *= 0.5;
                if alpha < 1e-14 {
                    break;
                }
            }
            if alpha < 1e-14 {
                break;
            }
        }
        if ncons as f64 / t < target {
            break;
        }
        t *= 8.0;
    }
    let field = prob.field(&z)?;
    let value = oracle_objective(&field);
    Ok((Some(field), value))
}
