//! One-jets, Whitney fields and the scalar functionals built on them.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x1: f64,
    pub x2: f64,
}

impl Point2 {
    pub const fn new(x1: f64, x2: f64) -> Self {
        Point2 { x1, x2 }
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    /// Componentwise `self - other`.
    pub fn diff(&self, other: &Point2) -> [f64; 2] {
        [self.x1 - other.x1, self.x2 - other.x2]
    }

    pub fn dist2(&self, other: &Point2) -> f64 {
        let d = self.diff(other);
        d[0] * d[0] + d[1] * d[1]
    }

    pub fn dist(&self, other: &Point2) -> f64 {
        self.dist2(other).sqrt()
    }

    /// Exact bit pattern, used as a hash key.
    pub fn bits(&self) -> (u64, u64) {
        // Normalize -0.0 so equal points hash equally.
        ((self.x1 + 0.0).to_bits(), (self.x2 + 0.0).to_bits())
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x1, self.x2)
    }
}

/// Rejects non-finite and duplicate points.
pub fn check_points(points: &[Point2]) -> Result<()> {
    let mut seen = HashSet::with_capacity(points.len());
    for (index, p) in points.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if !seen.insert(p.bits()) {
            return Err(Error::DuplicatePoint { index });
        }
    }
    Ok(())
}

/// A nonnegative real or `+infinity`, kept distinct from large floats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(*v),
            ExtReal::Infinite => None,
        }
    }

    pub fn add(self, other: ExtReal) -> ExtReal {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::Infinite,
        }
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a.max(b)),
            _ => ExtReal::Infinite,
        }
    }
}

/// The affine polynomial `value + grad . (y - base)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jet {
    pub base: Point2,
    pub value: f64,
    pub grad: [f64; 2],
}

impl Jet {
    pub const fn new(base: Point2, value: f64, grad: [f64; 2]) -> Self {
        Jet { base, value, grad }
    }

    pub const fn zero(base: Point2) -> Self {
        Jet { base, value: 0.0, grad: [0.0, 0.0] }
    }

    pub fn evaluate(&self, y: &Point2) -> f64 {
        let d = y.diff(&self.base);
        self.value + self.grad[0] * d[0] + self.grad[1] * d[1]
    }

    /// Same polynomial anchored at `x`.
    pub fn reexpand(&self, x: Point2) -> Jet {
        Jet { base: x, value: self.evaluate(&x), grad: self.grad }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0.0 && self.grad[0] == 0.0 && self.grad[1] == 0.0
    }

    pub fn ring_norm(&self) -> f64 {
        (self.value * self.value + self.grad[0] * self.grad[0] + self.grad[1] * self.grad[1]).sqrt()
    }

    /// Least `M >= 0` with `P(y) + M|y - base|^2 >= 0` everywhere.
    pub fn cushion(&self) -> ExtReal {
        let g2 = self.grad[0] * self.grad[0] + self.grad[1] * self.grad[1];
        if self.value > 0.0 {
            ExtReal::Finite(g2 / (4.0 * self.value))
        } else if self.value == 0.0 && g2 == 0.0 {
            ExtReal::Finite(0.0)
        } else {
            ExtReal::Infinite
        }
    }
}

pub fn jet_evaluate(p: &Jet, y: &Point2) -> f64 {
    p.evaluate(y)
}

pub fn ring_norm(p: &Jet) -> f64 {
    p.ring_norm()
}

pub fn nonneg_cushion(p: &Jet) -> ExtReal {
    p.cushion()
}

/// Finite set of jets, each anchored at its own key point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhitneyField {
    jets: Vec<Jet>,
}

impl WhitneyField {
    pub fn new(jets: Vec<Jet>) -> Result<Self> {
        if jets.is_empty() {
            return Err(Error::InvalidArgument("a Whitney field needs at least one point".into()));
        }
        let bases: Vec<Point2> = jets.iter().map(|j| j.base).collect();
        check_points(&bases)?;
        Ok(WhitneyField { jets })
    }

    pub fn jets(&self) -> &[Jet] {
        &self.jets
    }

    pub fn len(&self) -> usize {
        self.jets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jets.is_empty()
    }

    pub fn get(&self, key: &Point2) -> Option<&Jet> {
        self.jets.iter().find(|j| j.base == *key)
    }
}

/// Scaled differences `|d^a (P^x - P^y)(x)| / |x - y|^(2-|a|)` for `|a| <= 1`.
fn pair_quotients(px: &Jet, py: &Jet) -> [f64; 3] {
    let d = px.base.dist(&py.base);
    let dv = px.value - py.evaluate(&px.base);
    [dv.abs() / (d * d), (px.grad[0] - py.grad[0]).abs() / d, (px.grad[1] - py.grad[1]).abs() / d]
}

pub fn whitney_seminorm(v: &WhitneyField) -> f64 {
    let mut best = 0.0f64;
    for (a, pa) in v.jets.iter().enumerate() {
        for (b, pb) in v.jets.iter().enumerate() {
            if a != b {
                for q in pair_quotients(pa, pb) {
                    best = best.max(q);
                }
            }
        }
    }
    best
}

pub fn wplus_norm(v: &WhitneyField) -> ExtReal {
    let cushion = v.jets.iter().fold(ExtReal::Finite(0.0), |acc, j| acc.max(j.cushion()));
    ExtReal::Finite(whitney_seminorm(v)).add(cushion)
}

pub fn q_functional(v: &WhitneyField) -> f64 {
    let mut total = 0.0;
    for (a, pa) in v.jets.iter().enumerate() {
        total += pa.value * pa.value + pa.grad[0] * pa.grad[0] + pa.grad[1] * pa.grad[1];
        for (b, pb) in v.jets.iter().enumerate() {
            if a != b {
                for q in pair_quotients(pa, pb) {
                    total += q * q;
                }
            }
        }
    }
    total
}

/// `|grad|^4 / value^2` for one jet, with `0/0 = 0`.
pub fn m_term(value: f64, grad: [f64; 2]) -> ExtReal {
    let g2 = grad[0] * grad[0] + grad[1] * grad[1];
    if value > 0.0 {
        ExtReal::Finite(g2 * g2 / (value * value))
    } else if value == 0.0 && g2 == 0.0 {
        ExtReal::Finite(0.0)
    } else {
        ExtReal::Infinite
    }
}

pub fn m_functional(v: &WhitneyField) -> ExtReal {
    v.jets.iter().fold(ExtReal::Finite(0.0), |acc, j| acc.add(m_term(j.value, j.grad)))
}

/// Membership of `P` in the scaled ball `scale * B(x, delta)`.
pub fn ball_membership(p: &Jet, x: Point2, delta: f64, scale: f64) -> Result<bool> {
    if !(delta > 0.0) || !(scale > 0.0) {
        return Err(Error::InvalidArgument("delta and scale must be positive".into()));
    }
    let q = p.reexpand(x);
    let g = (q.grad[0] * q.grad[0] + q.grad[1] * q.grad[1]).sqrt();
    Ok(q.value.abs() <= scale * delta * delta && g <= scale * delta)
}

/// Universal constants and numerical tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub k0: usize,
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(rename = "C_T")]
    pub c_t: f64,
    /// Multiplier of `M delta^2` below which the big-residual path blends into the safe path.
    pub cushion: f64,
    /// Caps on `|P(x)|` and `|grad P|` in the sigma surrogate.
    pub norm_cap: f64,
    pub direction_samples: usize,
    pub qp_tol: f64,
    pub grid_eps: f64,
    pub unit_scale: f64,
    pub max_depth: u32,
    /// Largest depth set solved with all data gradients free when prescribing jets.
    pub joint_limit: usize,
    /// Enforce `k0 >= 4` and `C0 >= 1000`, the sizes the guarantees are proved for.
    pub proof_constants: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            k0: 4,
            c0: 4.0,
            c_t: 10.0,
            cushion: 1.0,
            norm_cap: 3.0,
            direction_samples: 256,
            qp_tol: 1e-9,
            grid_eps: 1e-9,
            unit_scale: 1.0,
            max_depth: 40,
            joint_limit: 24,
            proof_constants: false,
        }
    }
}

impl Config {
    /// Constants at the sizes the proofs require.
    pub fn proof_scale() -> Self {
        Config { c0: 1000.0, norm_cap: 750.0, proof_constants: true, ..Config::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.k0 == 0 || (self.proof_constants && self.k0 < 4) {
            return bad("k0 must be >= 4 with proof constants and >= 1 otherwise");
        }
        if self.proof_constants && self.c0 < 1000.0 {
            return bad("C0 must be >= 1000 with proof constants");
        }
        for (name, v) in [
            ("C0", self.c0),
            ("C_T", self.c_t),
            ("cushion", self.cushion),
            ("norm_cap", self.norm_cap),
            ("qp_tol", self.qp_tol),
            ("grid_eps", self.grid_eps),
            ("unit_scale", self.unit_scale),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be positive and finite")));
            }
        }
        if self.direction_samples < 6 {
            return Err(Error::TooFewDirections(self.direction_samples));
        }
        if self.max_depth == 0 || self.max_depth > 60 {
            return bad("max_depth must lie in 1..=60");
        }
        Ok(())
    }

    /// Size cap on the depth sets `S^{x0}`.
    pub fn depth_cap(&self) -> usize {
        48 * self.k0
    }
}
