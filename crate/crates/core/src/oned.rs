//! One-dimensional C2 extension operators with three- and four-point stencils.
//!
//! Each knot carries a quadratic jet `v + m s + c s^2` (with `s = t - t_i`)
//! derived from the parabola through its stencil. Between consecutive knots
//! the two jets are blended with the quintic `w(s) = s^3 (10 - 15 s + 6 s^2)`,
//! whose first two derivatives vanish at both ends, so the result is C2 and
//! reproduces each knot jet exactly. Beyond the knot range the boundary jet is
//! blended into the boundary value over a unit distance.

use serde::{Deserialize, Serialize};

use crate::convexgeom::DepthSet;
use crate::error::{Error, Result};

/// Distance over which the boundary jet is damped to a constant.
pub const DAMP_LENGTH: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneDData {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl OneDData {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::EmptyKnots);
        }
        if knots.len() != values.len() {
            return Err(Error::InvalidArgument("knots and values differ in length".into()));
        }
        for (index, (t, v)) in knots.iter().zip(&values).enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(Error::NonFinite { index });
            }
        }
        check_sorted(&knots)?;
        Ok(OneDData { knots, values })
    }
}

fn check_sorted(knots: &[f64]) -> Result<()> {
    if knots.is_empty() {
        return Err(Error::EmptyKnots);
    }
    for i in 1..knots.len() {
        if !(knots[i] > knots[i - 1]) {
            return Err(Error::UnsortedKnots { index: i });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Mode {
    /// Nonnegative operator with slope cap `2 sqrt(M v)`.
    Nonneg { m: f64 },
    /// Linear operator; knot jets are the stencil parabolas themselves.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneDFunction {
    knots: Vec<f64>,
    /// Per-knot `(value, slope, quadratic coefficient)`.
    jets: Vec<[f64; 3]>,
    mode: Mode,
}

/// Closed-form piece: constant beyond the damping, damped boundary jet, or a blend.
#[derive(Debug, Clone, Copy)]
enum Piece {
    Flat(usize),
    Damped(usize),
    Blend(usize),
}

/// Where `t` falls relative to the knots; determines both stencil and formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Loc {
    Single,
    Left,
    Right,
    /// Blend of the jets at knots `i` and `i + 1`.
    Between(usize),
}

fn locate(t: f64, knots: &[f64]) -> Loc {
    let n = knots.len();
    if n == 1 {
        return Loc::Single;
    }
    if t < knots[0] {
        return Loc::Left;
    }
    if t > knots[n - 1] {
        return Loc::Right;
    }
    if t <= knots[1] {
        return Loc::Between(0);
    }
    if t >= knots[n - 2] {
        return Loc::Between(n - 2);
    }
    // knots[1] < t < knots[n-2]: the interval with knots[i] <= t < knots[i+1].
    let i = knots.partition_point(|&k| k <= t) - 1;
    Loc::Between(i)
}

fn stencil_range(loc: Loc, n: usize) -> (usize, usize) {
    if n <= 3 {
        return (0, n);
    }
    match loc {
        Loc::Single => (0, n),
        Loc::Left => (0, 3),
        Loc::Right => (n - 3, n),
        Loc::Between(0) => (0, 3),
        Loc::Between(i) if i == n - 2 => (n - 3, n),
        Loc::Between(i) => (i - 1, i + 3),
    }
}

/// Knot positions on which the extension at `t` depends.
pub fn stencil(t: f64, knots: &[f64]) -> Result<DepthSet> {
    check_sorted(knots)?;
    let (a, b) = stencil_range(locate(t, knots), knots.len());
    Ok(DepthSet::from_sorted((a..b).collect()))
}

/// Value, slope and second derivative at `knots[i]` of the parabola through the three given knots.
fn parabola_jet(knots: &[f64], values: &[f64], idx: [usize; 3], i: usize) -> [f64; 3] {
    let [a, b, c] = idx;
    let (ta, tb, tc) = (knots[a], knots[b], knots[c]);
    let d_ab = (values[b] - values[a]) / (tb - ta);
    let d_bc = (values[c] - values[b]) / (tc - tb);
    let d_abc = (d_bc - d_ab) / (tc - ta);
    let ti = knots[i];
    let slope = d_ab + d_abc * ((ti - ta) + (ti - tb));
    [values[i], slope, 2.0 * d_abc]
}

fn knot_parabolas(knots: &[f64], values: &[f64]) -> Vec<[f64; 3]> {
    let n = knots.len();
    match n {
        1 => vec![[values[0], 0.0, 0.0]],
        2 => {
            let slope = (values[1] - values[0]) / (knots[1] - knots[0]);
            vec![[values[0], slope, 0.0], [values[1], slope, 0.0]]
        }
        _ => (0..n)
            .map(|i| {
                let idx = if i == 0 {
                    [0, 1, 2]
                } else if i == n - 1 {
                    [n - 3, n - 2, n - 1]
                } else {
                    [i - 1, i, i + 1]
                };
                parabola_jet(knots, values, idx, i)
            })
            .collect(),
    }
}

/// Linear extension: interpolating, C2, reproduces affine data.
pub fn extend_linear(data: &OneDData) -> OneDFunction {
    let jets = knot_parabolas(&data.knots, &data.values).into_iter().map(|[v, m, k]| [v, m, 0.5 * k]).collect();
    OneDFunction { knots: data.knots.clone(), jets, mode: Mode::Linear }
}

/// Nonnegative extension of nonnegative data; slopes are capped by `2 sqrt(M v)`.
pub fn extend_nonneg(data: &OneDData, m: f64) -> Result<OneDFunction> {
    if !(m >= 0.0) || !m.is_finite() {
        return Err(Error::InvalidArgument("M must be finite and nonnegative".into()));
    }
    for (index, &v) in data.values.iter().enumerate() {
        if v < 0.0 {
            return Err(Error::NegativeValue { index, value: v });
        }
    }
    let jets = knot_parabolas(&data.knots, &data.values)
        .into_iter()
        .map(|[v, slope, _]| {
            if v > 0.0 {
                let cap = 2.0 * (m * v).sqrt();
                let s = slope.clamp(-cap, cap);
                [v, s, s * s / (4.0 * v)]
            } else {
                [0.0, 0.0, 0.0]
            }
        })
        .collect();
    Ok(OneDFunction { knots: data.knots.clone(), jets, mode: Mode::Nonneg { m } })
}

/// `w`, `w'`, `w''` of the quintic blend, flat at both ends.
pub fn blend(s: f64) -> [f64; 3] {
    if s <= 0.0 {
        return [0.0, 0.0, 0.0];
    }
    if s >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    let s2 = s * s;
    let r = 1.0 - s;
    [
        // Clamped so that the complementary weight never rounds negative.
        (s2 * s * (10.0 - 15.0 * s + 6.0 * s2)).clamp(0.0, 1.0),
        30.0 * s2 * r * r,
        60.0 * s * r * (1.0 - 2.0 * s),
    ]
}

fn jet_eval(j: &[f64; 3], s: f64) -> [f64; 3] {
    [j[0] + s * (j[1] + s * j[2]), j[1] + 2.0 * j[2] * s, 2.0 * j[2]]
}

/// A cushioned knot jet `v + m s + m^2 s^2 / (4v)` is the square `v (1 + m s / (2v))^2`;
/// evaluating it in that form keeps the value exactly nonnegative.
fn square_eval(j: &[f64; 3], s: f64) -> [f64; 3] {
    if j[0] <= 0.0 {
        return [0.0, 0.0, 0.0];
    }
    let r = 1.0 + j[1] * s / (2.0 * j[0]);
    [j[0] * r * r, j[1] * r, 2.0 * j[2]]
}

impl OneDFunction {
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Per-knot `(value, slope, quadratic coefficient)`.
    pub fn knot_jets(&self) -> &[[f64; 3]] {
        &self.jets
    }

    /// Points where the closed form switches: the knots and the two damping ends.
    pub fn breakpoints(&self) -> Vec<f64> {
        let n = self.knots.len();
        let mut out = vec![self.knots[0] - DAMP_LENGTH];
        out.extend_from_slice(&self.knots);
        out.push(self.knots[n - 1] + DAMP_LENGTH);
        out
    }

    pub fn stencil(&self, t: f64) -> DepthSet {
        let (a, b) = stencil_range(locate(t, &self.knots), self.knots.len());
        DepthSet::from_sorted((a..b).collect())
    }

    /// Value, first and second derivative at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let r = self.eval_piece(self.piece_at(t), t);
        (r[0], r[1], r[2])
    }

    /// Left and right limits of value and derivatives at `t`: the closed forms
    /// of the two adjacent pieces, both evaluated at `t` itself.
    pub fn one_sided(&self, t: f64) -> ([f64; 3], [f64; 3]) {
        (self.eval_piece(self.piece_at(t.next_down()), t), self.eval_piece(self.piece_at(t.next_up()), t))
    }

    fn piece_at(&self, t: f64) -> Piece {
        let n = self.knots.len();
        let outer = |i: usize| {
            if (t - self.knots[i]).abs() >= DAMP_LENGTH {
                Piece::Flat(i)
            } else {
                Piece::Damped(i)
            }
        };
        match locate(t, &self.knots) {
            Loc::Single | Loc::Left => outer(0),
            Loc::Right => outer(n - 1),
            Loc::Between(i) => Piece::Blend(i),
        }
    }

    fn eval_piece(&self, piece: Piece, t: f64) -> [f64; 3] {
        match piece {
            Piece::Flat(i) => [self.jets[i][0], 0.0, 0.0],
            Piece::Damped(i) => self.damped(i, t),
            Piece::Blend(i) => {
                let (t0, t1) = (self.knots[i], self.knots[i + 1]);
                let h = t1 - t0;
                let s = (t - t0) / h;
                let qa = self.knot_eval(i, t - t0);
                let qb = self.knot_eval(i + 1, t - t1);
                let [w, w1, w2] = blend(s);
                let (w1, w2) = (w1 / h, w2 / (h * h));
                let u = 1.0 - w;
                [
                    u * qa[0] + w * qb[0],
                    u * qa[1] + w * qb[1] + w1 * (qb[0] - qa[0]),
                    u * qa[2] + w * qb[2] + 2.0 * w1 * (qb[1] - qa[1]) + w2 * (qb[0] - qa[0]),
                ]
            }
        }
    }

    fn knot_eval(&self, i: usize, s: f64) -> [f64; 3] {
        match self.mode {
            Mode::Nonneg { .. } => square_eval(&self.jets[i], s),
            Mode::Linear => jet_eval(&self.jets[i], s),
        }
    }

    /// Boundary jet at knot `i`, blended into its value over `DAMP_LENGTH`.
    fn damped(&self, i: usize, t: f64) -> [f64; 3] {
        let j = &self.jets[i];
        let d = t - self.knots[i];
        let dist = d.abs();
        let q = self.knot_eval(i, d);
        let [w, w1, w2] = blend(dist / DAMP_LENGTH);
        // dW/dt carries the sign of d.
        let sgn = d.signum();
        let (w1, w2) = (sgn * w1 / DAMP_LENGTH, w2 / (DAMP_LENGTH * DAMP_LENGTH));
        let u = 1.0 - w;
        [u * q[0] + w * j[0], u * q[1] - w1 * (q[0] - j[0]), u * q[2] - 2.0 * w1 * q[1] - w2 * (q[0] - j[0])]
    }
}

pub fn eval_oned(f: &OneDFunction, t: f64) -> (f64, f64, f64) {
    f.eval(t)
}
