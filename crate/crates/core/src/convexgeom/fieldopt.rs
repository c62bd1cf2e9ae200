//! Damped Newton minimization of `Q + M` over Whitney fields with some
//! coordinates pinned, plus an optional weight on the ring norm at one point.

use crate::error::{Error, Result};
use crate::jetcore::Point2;
use crate::linalg::spd_solve;

const MAX_NEWTON: usize = 300;

/// One site of the field: position, initial value/gradient, and which coordinates move.
#[derive(Debug, Clone, Copy)]
pub struct Site {
    pub at: Point2,
    pub value: f64,
    pub grad: [f64; 2],
    pub value_free: bool,
    pub grad_free: bool,
}

#[derive(Debug, Clone)]
pub struct FieldProgram {
    sites: Vec<Site>,
    vvar: Vec<Option<usize>>,
    gvar: Vec<Option<usize>>,
    active: Vec<bool>,
    nvar: usize,
    /// Terms that involve no free coordinate.
    constant: f64,
    /// Site whose squared ring norm is weighted by `mu`.
    ring_site: Option<usize>,
}

/// Objective value, gradient and row-major Hessian.
struct Eval {
    value: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

impl FieldProgram {
    pub fn new(sites: Vec<Site>, ring_site: Option<usize>) -> Self {
        let mut nvar = 0;
        let mut vvar = Vec::with_capacity(sites.len());
        let mut gvar = Vec::with_capacity(sites.len());
        for s in &sites {
            vvar.push(if s.value_free {
                nvar += 1;
                Some(nvar - 1)
            } else {
                None
            });
            gvar.push(if s.grad_free {
                nvar += 2;
                Some(nvar - 2)
            } else {
                None
            });
        }
        let active: Vec<bool> = sites.iter().map(|s| s.value_free || s.grad_free).collect();
        let mut prog = FieldProgram { sites, vvar, gvar, active, nvar, constant: 0.0, ring_site };
        prog.constant = prog.frozen_part();
        prog
    }

    pub fn nvar(&self) -> usize {
        self.nvar
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    /// Current coordinates as a variable vector.
    pub fn pack(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.nvar];
        for (i, s) in self.sites.iter().enumerate() {
            if let Some(k) = self.vvar[i] {
                z[k] = s.value;
            }
            if let Some(k) = self.gvar[i] {
                z[k] = s.grad[0];
                z[k + 1] = s.grad[1];
            }
        }
        z
    }

    pub fn unpack(&mut self, z: &[f64]) {
        for i in 0..self.sites.len() {
            if let Some(k) = self.vvar[i] {
                self.sites[i].value = z[k];
            }
            if let Some(k) = self.gvar[i] {
                self.sites[i].grad = [z[k], z[k + 1]];
            }
        }
    }

    fn frozen_part(&self) -> f64 {
        let n = self.sites.len();
        let mut total = 0.0;
        for a in 0..n {
            if self.active[a] {
                continue;
            }
            let s = &self.sites[a];
            total += s.value * s.value + s.grad[0] * s.grad[0] + s.grad[1] * s.grad[1];
            total += m_value(s.value, s.grad);
            for b in a + 1..n {
                if !self.active[b] {
                    total += pair_value(s, &self.sites[b]);
                }
            }
        }
        total
    }

    /// `Q + M` at the current coordinates (`+inf` outside the domain).
    pub fn objective(&self) -> f64 {
        self.eval(None, 0.0, false).map_or(f64::INFINITY, |e| e.value)
    }

    /// Ring norm squared at the weighted site.
    pub fn ring2(&self) -> f64 {
        self.ring_site.map_or(0.0, |r| {
            let s = &self.sites[r];
            s.value * s.value + s.grad[0] * s.grad[0] + s.grad[1] * s.grad[1]
        })
    }

    /// Evaluates `mu * ring2 + Q + M` at `z` (or at the stored coordinates).
    fn eval(&self, z: Option<&[f64]>, mu: f64, derivs: bool) -> Option<Eval> {
        let n = self.sites.len();
        let nv = self.nvar;
        let mut sites_buf;
        let sites: &[Site] = match z {
            Some(z) => {
                sites_buf = self.sites.clone();
                for i in 0..n {
                    if let Some(k) = self.vvar[i] {
                        sites_buf[i].value = z[k];
                    }
                    if let Some(k) = self.gvar[i] {
                        sites_buf[i].grad = [z[k], z[k + 1]];
                    }
                }
                &sites_buf
            }
            None => &self.sites,
        };
        let mut e = Eval {
            value: self.constant,
            grad: if derivs { vec![0.0; nv] } else { Vec::new() },
            hess: if derivs { vec![0.0; nv * nv] } else { Vec::new() },
        };
        for a in 0..n {
            if !self.active[a] {
                continue;
            }
            let s = &sites[a];
            let weight = if self.ring_site == Some(a) { 1.0 + mu } else { 1.0 };
            // Self terms.
            e.value += weight * (s.value * s.value + s.grad[0] * s.grad[0] + s.grad[1] * s.grad[1]);
            if derivs {
                if let Some(k) = self.vvar[a] {
                    e.grad[k] += 2.0 * weight * s.value;
                    e.hess[k * nv + k] += 2.0 * weight;
                }
                if let Some(k) = self.gvar[a] {
                    for c in 0..2 {
                        e.grad[k + c] += 2.0 * weight * s.grad[c];
                        e.hess[(k + c) * nv + k + c] += 2.0 * weight;
                    }
                }
            }
            if !self.add_m_term(&mut e, a, s, derivs) {
                return None;
            }
        }
        for a in 0..n {
            for b in a + 1..n {
                if !(self.active[a] || self.active[b]) {
                    continue;
                }
                let (sa, sb) = (&sites[a], &sites[b]);
                let u = sa.at.diff(&sb.at);
                let d2 = u[0] * u[0] + u[1] * u[1];
                let inv2 = 1.0 / d2;
                // Value terms in both orders: (v_a - v_b - g_b.u)/d^2 and (v_b - v_a + g_a.u)/d^2.
                let r1 = (sa.value - sb.value - (sb.grad[0] * u[0] + sb.grad[1] * u[1])) * inv2;
                let r2 = (sb.value - sa.value + (sa.grad[0] * u[0] + sa.grad[1] * u[1])) * inv2;
                e.value += r1 * r1 + r2 * r2;
                // Gradient terms, counted for both orders.
                let dg = [sa.grad[0] - sb.grad[0], sa.grad[1] - sb.grad[1]];
                e.value += 2.0 * (dg[0] * dg[0] + dg[1] * dg[1]) * inv2;
                if !derivs {
                    continue;
                }
                let mut idx: [usize; 6] = [usize::MAX; 6];
                let mut c1 = [0.0; 6];
                let mut c2 = [0.0; 6];
                if let Some(k) = self.vvar[a] {
                    idx[0] = k;
                    c1[0] = inv2;
                    c2[0] = -inv2;
                }
                if let Some(k) = self.vvar[b] {
                    idx[1] = k;
                    c1[1] = -inv2;
                    c2[1] = inv2;
                }
                if let Some(k) = self.gvar[a] {
                    idx[2] = k;
                    idx[3] = k + 1;
                    c2[2] = u[0] * inv2;
                    c2[3] = u[1] * inv2;
                }
                if let Some(k) = self.gvar[b] {
                    idx[4] = k;
                    idx[5] = k + 1;
                    c1[4] = -u[0] * inv2;
                    c1[5] = -u[1] * inv2;
                }
                for p in 0..6 {
                    if idx[p] == usize::MAX {
                        continue;
                    }
                    e.grad[idx[p]] += 2.0 * (r1 * c1[p] + r2 * c2[p]);
                    for q in 0..6 {
                        if idx[q] == usize::MAX {
                            continue;
                        }
                        e.hess[idx[p] * nv + idx[q]] += 2.0 * (c1[p] * c1[q] + c2[p] * c2[q]);
                    }
                }
                let ga = self.gvar[a];
                let gb = self.gvar[b];
                for c in 0..2 {
                    let g = 4.0 * dg[c] * inv2;
                    let h = 4.0 * inv2;
                    if let Some(ka) = ga {
                        e.grad[ka + c] += g;
                        e.hess[(ka + c) * nv + ka + c] += h;
                    }
                    if let Some(kb) = gb {
                        e.grad[kb + c] -= g;
                        e.hess[(kb + c) * nv + kb + c] += h;
                    }
                    if let (Some(ka), Some(kb)) = (ga, gb) {
                        e.hess[(ka + c) * nv + kb + c] -= h;
                        e.hess[(kb + c) * nv + ka + c] -= h;
                    }
                }
            }
        }
        Some(e)
    }

    /// Adds `|g|^4 / v^2`; returns `false` outside the domain.
    fn add_m_term(&self, e: &mut Eval, a: usize, s: &Site, derivs: bool) -> bool {
        let g = s.grad;
        let q = g[0] * g[0] + g[1] * g[1];
        let v = s.value;
        if v < 0.0 || (v == 0.0 && q != 0.0) {
            return false;
        }
        if v == 0.0 {
            return true;
        }
        let iv2 = 1.0 / (v * v);
        e.value += q * q * iv2;
        if !derivs {
            return true;
        }
        let nv = self.nvar;
        if let Some(k) = self.gvar[a] {
            for c in 0..2 {
                e.grad[k + c] += 4.0 * q * g[c] * iv2;
                for d in 0..2 {
                    let delta = if c == d { 4.0 * q } else { 0.0 };
                    e.hess[(k + c) * nv + k + d] += (delta + 8.0 * g[c] * g[d]) * iv2;
                }
            }
        }
        if let Some(kv) = self.vvar[a] {
            e.grad[kv] += -2.0 * q * q * iv2 / v;
            e.hess[kv * nv + kv] += 6.0 * q * q * iv2 * iv2;
            if let Some(k) = self.gvar[a] {
                for c in 0..2 {
                    let h = -8.0 * q * g[c] * iv2 / v;
                    e.hess[kv * nv + k + c] += h;
                    e.hess[(k + c) * nv + kv] += h;
                }
            }
        }
        true
    }

    /// Minimizes `mu * ring2 + Q + M` from the stored coordinates (which must be in the domain).
    /// Returns the attained `Q + M`.
    pub fn minimize(&mut self, mu: f64) -> Result<f64> {
        let nv = self.nvar;
        let mut z = self.pack();
        let mut cur = self
            .eval(Some(&z), mu, true)
            .ok_or_else(|| Error::NonConvergence("starting point outside the domain".into()))?;
        if nv == 0 {
            return Ok(cur.value);
        }
        let mut converged = false;
        for _ in 0..MAX_NEWTON {
            let step = self.newton_step(&cur)?;
            let slope: f64 = step.iter().zip(&cur.grad).map(|(s, g)| s * g).sum();
            let dec = -slope;
            if !(dec > 1e-13 * cur.value.abs().max(1e-300)) {
                converged = true;
                break;
            }
            let mut t = 1.0;
            let mut accepted = None;
            while t > 1e-18 {
                let trial: Vec<f64> = z.iter().zip(&step).map(|(a, s)| a + t * s).collect();
                if let Some(e) = self.eval(Some(&trial), mu, false) {
                    if e.value <= cur.value + 1e-4 * t * slope {
                        accepted = Some(trial);
                        break;
                    }
                }
                t *= 0.5;
            }
            match accepted {
                Some(trial) => {
                    let next = self.eval(Some(&trial), mu, true).expect("accepted point lies in the domain");
                    // A step that no longer lowers the objective has hit rounding.
                    let stalled = next.value >= cur.value;
                    z = trial;
                    cur = next;
                    if stalled {
                        converged = true;
                        break;
                    }
                }
                None => {
                    // No representable descent: the iterate is optimal to working precision.
                    converged = true;
                    break;
                }
            }
        }
        if !converged {
            return Err(Error::NonConvergence(format!("Newton iteration cap reached ({nv} variables)")));
        }
        self.unpack(&z);
        Ok(self.objective())
    }

    fn newton_step(&self, e: &Eval) -> Result<Vec<f64>> {
        let nv = self.nvar;
        let rhs: Vec<f64> = e.grad.iter().map(|g| -g).collect();
        if let Some(s) = spd_solve(nv, &e.hess, &rhs) {
            return Ok(s);
        }
        // Regularize when the factorization breaks down.
        let scale = (0..nv).map(|i| e.hess[i * nv + i].abs()).fold(1e-300, f64::max);
        let mut lam = 1e-12 * scale;
        for _ in 0..40 {
            let mut h = e.hess.clone();
            for i in 0..nv {
                h[i * nv + i] += lam;
            }
            if let Some(s) = spd_solve(nv, &h, &rhs) {
                return Ok(s);
            }
            lam *= 10.0;
        }
        Err(Error::NonConvergence("Hessian factorization failed".into()))
    }

    /// `d(Q+M)/d mu` along the optimal path, `mu * r' H^{-1} r` with `r = grad(ring2)`.
    pub fn path_slope(&self, mu: f64) -> Option<f64> {
        let e = self.eval(None, mu, true)?;
        let r = self.ring_site?;
        let nv = self.nvar;
        let mut rg = vec![0.0; nv];
        let s = &self.sites[r];
        if let Some(k) = self.vvar[r] {
            rg[k] = 2.0 * s.value;
        }
        if let Some(k) = self.gvar[r] {
            rg[k] = 2.0 * s.grad[0];
            rg[k + 1] = 2.0 * s.grad[1];
        }
        let x = self.newton_step(&Eval { value: e.value, grad: rg.iter().map(|v| -v).collect(), hess: e.hess }).ok()?;
        Some(mu * rg.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>())
    }
}

fn pair_value(sa: &Site, sb: &Site) -> f64 {
    let u = sa.at.diff(&sb.at);
    let d2 = u[0] * u[0] + u[1] * u[1];
    let r1 = (sa.value - sb.value - (sb.grad[0] * u[0] + sb.grad[1] * u[1])) / d2;
    let r2 = (sb.value - sa.value + (sa.grad[0] * u[0] + sa.grad[1] * u[1])) / d2;
    let dg = [sa.grad[0] - sb.grad[0], sa.grad[1] - sb.grad[1]];
    r1 * r1 + r2 * r2 + 2.0 * (dg[0] * dg[0] + dg[1] * dg[1]) / d2
}

fn m_value(v: f64, g: [f64; 2]) -> f64 {
    let q = g[0] * g[0] + g[1] * g[1];
    if v > 0.0 {
        q * q / (v * v)
    } else if q == 0.0 && v == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}
