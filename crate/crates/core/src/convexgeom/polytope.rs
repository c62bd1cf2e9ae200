//! Convex polytopes in jet space `(value, grad1, grad2)` cut down by symmetric slabs.
//!
//! The body is kept as a list of convex faces and clipped one halfspace at a
//! time: each face is clipped Sutherland-Hodgman style and the new face is
//! the planar hull of the section points. Section points are computed with
//! the edge endpoints in a canonical order so that the two faces sharing an
//! edge produce bit-identical vertices.

type V3 = [f64; 3];

fn dot(a: &V3, b: &V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &V3) -> f64 {
    dot(a, a).sqrt()
}

fn cross(a: &V3, b: &V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn lex_less(a: &V3, b: &V3) -> bool {
    for k in 0..3 {
        if a[k] != b[k] {
            return a[k] < b[k];
        }
    }
    false
}

/// Point where the segment crosses the plane, with endpoints canonically ordered.
fn section(p: &V3, q: &V3, dp: f64, dq: f64) -> V3 {
    let (p, q, dp, dq) = if lex_less(q, p) { (q, p, dq, dp) } else { (p, q, dp, dq) };
    let t = dp / (dp - dq);
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]), p[2] + t * (q[2] - p[2])]
}

/// Regular polygon inscribed in the circle of radius `r`.
pub fn disk_polygon(r: f64, sides: usize) -> Vec<[f64; 2]> {
    (0..sides)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / sides as f64;
            [r * th.cos(), r * th.sin()]
        })
        .collect()
}

/// Andrew's monotone chain; returns hull vertices counter-clockwise, dropping near-duplicates.
fn hull2d(pts: &mut Vec<([f64; 2], usize)>, tol: f64) -> Vec<usize> {
    pts.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]).then(a.0[1].total_cmp(&b.0[1])));
    pts.dedup_by(|a, b| (a.0[0] - b.0[0]).abs() <= tol && (a.0[1] - b.0[1]).abs() <= tol);
    if pts.len() < 3 {
        return pts.iter().map(|p| p.1).collect();
    }
    let turn = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut lower: Vec<([f64; 2], usize)> = Vec::new();
    for p in pts.iter() {
        while lower.len() >= 2 && turn(&lower[lower.len() - 2].0, &lower[lower.len() - 1].0, &p.0) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<([f64; 2], usize)> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && turn(&upper[upper.len() - 2].0, &upper[upper.len() - 1].0, &p.0) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.into_iter().chain(upper).map(|p| p.1).collect()
}

#[derive(Debug, Clone)]
pub struct Polytope {
    faces: Vec<Vec<V3>>,
}

impl Polytope {
    /// `|value| <= cap` times a `sides`-gon of radius `cap` in the gradient plane.
    pub fn prism(cap: f64, sides: usize) -> Self {
        let ring = disk_polygon(cap, sides);
        let top: Vec<V3> = ring.iter().map(|g| [cap, g[0], g[1]]).collect();
        let bottom: Vec<V3> = ring.iter().rev().map(|g| [-cap, g[0], g[1]]).collect();
        let mut faces = vec![top, bottom];
        for k in 0..sides {
            let (a, b) = (ring[k], ring[(k + 1) % sides]);
            faces.push(vec![[cap, a[0], a[1]], [-cap, a[0], a[1]], [-cap, b[0], b[1]], [cap, b[0], b[1]]]);
        }
        Polytope { faces }
    }

    pub fn vertices(&self) -> impl Iterator<Item = &V3> {
        self.faces.iter().flatten()
    }

    /// Largest Euclidean norm of a vertex and the vertex attaining it.
    pub fn farthest(&self) -> (f64, V3) {
        let mut best = (0.0, [0.0; 3]);
        for v in self.vertices() {
            let r = norm(v);
            if r > best.0 {
                best = (r, *v);
            }
        }
        best
    }

    /// Intersects with `{z : a.z <= b}`; returns whether anything was cut.
    pub fn clip(&mut self, a: V3, b: f64) -> bool {
        let rho = self.farthest().0;
        let eps = 1e-13 * (b.abs() + norm(&a) * rho);
        if self.vertices().all(|v| dot(&a, v) - b <= eps) {
            return false;
        }
        let mut faces = Vec::with_capacity(self.faces.len() + 1);
        let mut cut: Vec<V3> = Vec::new();
        for face in &self.faces {
            let n = face.len();
            let d: Vec<f64> = face.iter().map(|v| dot(&a, v) - b).collect();
            let mut out = Vec::with_capacity(n + 1);
            for k in 0..n {
                let (p, q) = (&face[k], &face[(k + 1) % n]);
                let (dp, dq) = (d[k], d[(k + 1) % n]);
                if dp <= eps {
                    out.push(*p);
                    if dp >= -eps {
                        cut.push(*p);
                    }
                }
                if (dp < -eps && dq > eps) || (dp > eps && dq < -eps) {
                    let x = section(p, q, dp, dq);
                    out.push(x);
                    cut.push(x);
                }
            }
            if out.len() >= 3 {
                faces.push(out);
            }
        }
        // Planar hull of the section.
        let an = norm(&a);
        let nrm = [a[0] / an, a[1] / an, a[2] / an];
        let axis = if nrm[0].abs() <= nrm[1].abs() && nrm[0].abs() <= nrm[2].abs() {
            [1.0, 0.0, 0.0]
        } else if nrm[1].abs() <= nrm[2].abs() {
            [0.0, 1.0, 0.0]
        } else {
            [0.0, 0.0, 1.0]
        };
        let u = cross(&nrm, &axis);
        let un = norm(&u);
        let u = [u[0] / un, u[1] / un, u[2] / un];
        let w = cross(&nrm, &u);
        let mut proj: Vec<([f64; 2], usize)> =
            cut.iter().enumerate().map(|(i, p)| ([dot(&u, p), dot(&w, p)], i)).collect();
        let hull = hull2d(&mut proj, 1e-14 * rho.max(f64::MIN_POSITIVE));
        if hull.len() >= 3 {
            faces.push(hull.into_iter().map(|i| cut[i]).collect());
        }
        self.faces = faces;
        true
    }
}

/// Convex polygon in the gradient plane clipped by symmetric strips `|g.w| <= b`.
#[derive(Debug, Clone)]
pub struct Polygon {
    verts: Vec<[f64; 2]>,
}

impl Polygon {
    pub fn disk(cap: f64, sides: usize) -> Self {
        Polygon { verts: disk_polygon(cap, sides) }
    }

    pub fn farthest(&self) -> (f64, [f64; 2]) {
        let mut best = (0.0, [0.0; 2]);
        for v in &self.verts {
            let r = (v[0] * v[0] + v[1] * v[1]).sqrt();
            if r > best.0 {
                best = (r, *v);
            }
        }
        best
    }

    /// Intersects with `{g : a.g <= b}`.
    pub fn clip(&mut self, a: [f64; 2], b: f64) -> bool {
        let rho = self.farthest().0;
        let an = (a[0] * a[0] + a[1] * a[1]).sqrt();
        let eps = 1e-13 * (b.abs() + an * rho);
        let d: Vec<f64> = self.verts.iter().map(|v| a[0] * v[0] + a[1] * v[1] - b).collect();
        if d.iter().all(|&x| x <= eps) {
            return false;
        }
        let n = self.verts.len();
        let mut out = Vec::with_capacity(n + 1);
        for k in 0..n {
            let (p, q) = (self.verts[k], self.verts[(k + 1) % n]);
            let (dp, dq) = (d[k], d[(k + 1) % n]);
            if dp <= eps {
                out.push(p);
            }
            if (dp < -eps && dq > eps) || (dp > eps && dq < -eps) {
                let t = dp / (dp - dq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
        self.verts = out;
        true
    }
}
