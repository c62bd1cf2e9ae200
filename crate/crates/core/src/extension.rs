//! Local pieces: cushioned Taylor-Whitney extensions and the per-square
//! operator built from a prescribed jet, a straightening and 1D extensions.
//!
//! A Sharp square's piece is `psi * Tc + (1 - psi) * H`, where `Tc` is the
//! prescribed jet plus its nonnegativity cushion, `psi` a cutoff around the
//! representative point, and `H` a vertical extension of 1D data along the
//! straightened curve. Both summands are nonnegative, so the piece is too.

use serde::{Deserialize, Serialize};

use crate::convexgeom::{depth_set_in, prescribed_jet, DepthSet, FeasibleJetProblem};
use crate::czdecomp::{CZDecomposition, DyadicSquare, Label, Straightening};
use crate::error::{Error, Result};
use crate::jetcore::{wplus_norm, Config, ExtReal, Jet, Point2, WhitneyField};
use crate::oned::{blend, extend_linear, extend_nonneg, OneDData, OneDFunction};

/// Transverse damper: 1 up to `DAMP_INNER * side` from the curve, 0 beyond `DAMP_OUTER * side`.
pub const DAMP_INNER: f64 = 4.0;
pub const DAMP_OUTER: f64 = 8.0;

/// Value, gradient and Hessian of a function at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SecondJet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl SecondJet {
    pub const ZERO: SecondJet = SecondJet { value: 0.0, grad: [0.0; 2], hess: [[0.0; 2]; 2] };

    pub fn constant(value: f64) -> Self {
        SecondJet { value, ..SecondJet::ZERO }
    }

    pub fn add(&self, o: &SecondJet) -> SecondJet {
        let mut r = *self;
        r.value += o.value;
        for a in 0..2 {
            r.grad[a] += o.grad[a];
            for b in 0..2 {
                r.hess[a][b] += o.hess[a][b];
            }
        }
        r
    }

    pub fn sub(&self, o: &SecondJet) -> SecondJet {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> SecondJet {
        let mut r = *self;
        r.value *= s;
        for a in 0..2 {
            r.grad[a] *= s;
            for b in 0..2 {
                r.hess[a][b] *= s;
            }
        }
        r
    }

    /// Product rule.
    pub fn mul(&self, o: &SecondJet) -> SecondJet {
        let mut r = SecondJet { value: self.value * o.value, ..SecondJet::ZERO };
        for a in 0..2 {
            r.grad[a] = self.grad[a] * o.value + self.value * o.grad[a];
            for b in 0..2 {
                r.hess[a][b] = self.hess[a][b] * o.value
                    + self.grad[a] * o.grad[b]
                    + self.grad[b] * o.grad[a]
                    + self.value * o.hess[a][b];
            }
        }
        r
    }

    /// `g(self)` given `(g, g', g'')` at `self.value`.
    pub fn compose(&self, g: [f64; 3]) -> SecondJet {
        let mut r = SecondJet { value: g[0], ..SecondJet::ZERO };
        for a in 0..2 {
            r.grad[a] = g[1] * self.grad[a];
            for b in 0..2 {
                r.hess[a][b] = g[2] * self.grad[a] * self.grad[b] + g[1] * self.hess[a][b];
            }
        }
        r
    }

    /// A function of one coordinate `t` with gradient `dt` and Hessian `ddt`.
    fn along(f: (f64, f64, f64), dt: [f64; 2], ddt: Option<&[[f64; 2]; 2]>) -> SecondJet {
        let base = SecondJet { value: 0.0, grad: dt, hess: ddt.copied().unwrap_or([[0.0; 2]; 2]) };
        base.compose([f.0, f.1, f.2])
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().flatten().all(|h| h.is_finite())
    }
}

/// Radial cutoff: 1 within `inner_radius`, 0 beyond `outer_radius`, a quintic
/// blend in the squared radius in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub center: Point2,
    pub inner_radius: f64,
    pub outer_radius: f64,
}

impl CutoffSpec {
    pub fn new(center: Point2, inner_radius: f64, outer_radius: f64) -> Result<Self> {
        if !(inner_radius >= 0.0 && outer_radius > inner_radius && outer_radius.is_finite()) {
            return Err(Error::InvalidArgument("cutoff radii must satisfy 0 <= inner < outer".into()));
        }
        Ok(CutoffSpec { center, inner_radius, outer_radius })
    }

    pub fn eval(&self, y: &Point2) -> SecondJet {
        let d = y.diff(&self.center);
        let r2 = d[0] * d[0] + d[1] * d[1];
        let (a2, b2) = (self.inner_radius * self.inner_radius, self.outer_radius * self.outer_radius);
        if r2 <= a2 {
            return SecondJet::constant(1.0);
        }
        if r2 >= b2 {
            return SecondJet::ZERO;
        }
        let span = b2 - a2;
        let u = SecondJet {
            value: (r2 - a2) / span,
            grad: [2.0 * d[0] / span, 2.0 * d[1] / span],
            hess: [[2.0 / span, 0.0], [0.0, 2.0 / span]],
        };
        let [w, w1, w2] = blend(u.value);
        u.compose([1.0 - w, -w1, -w2])
    }
}

/// `P(y) + c |y - base|^2` with derivatives.
fn cushioned(p: &Jet, c: f64, y: &Point2) -> SecondJet {
    let d = y.diff(&p.base);
    SecondJet {
        value: p.evaluate(y) + c * (d[0] * d[0] + d[1] * d[1]),
        grad: [p.grad[0] + 2.0 * c * d[0], p.grad[1] + 2.0 * c * d[1]],
        hess: [[2.0 * c, 0.0], [0.0, 2.0 * c]],
    }
}

fn finite_cushion(p: &Jet) -> Result<f64> {
    match p.cushion() {
        ExtReal::Finite(c) => Ok(c),
        ExtReal::Infinite => Err(Error::InfiniteCushion),
    }
}

/// Sum of cutoff-localized cushioned jets with pairwise disjoint supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorWhitney {
    terms: Vec<(CutoffSpec, Jet, f64)>,
}

impl TaylorWhitney {
    pub fn eval(&self, y: &Point2) -> SecondJet {
        let mut out = SecondJet::ZERO;
        for (chi, p, c) in &self.terms {
            let w = chi.eval(y);
            if w.value == 0.0 && w.grad == [0.0; 2] {
                continue;
            }
            if w.value == 1.0 && w.grad == [0.0; 2] {
                out = out.add(&cushioned(p, *c, y));
            } else {
                out = out.add(&w.mul(&cushioned(p, *c, y)));
            }
        }
        out
    }

    pub fn jets(&self) -> impl Iterator<Item = &Jet> {
        self.terms.iter().map(|t| &t.1)
    }
}

pub fn taylor_whitney_singleton(p: &Jet) -> Result<TaylorWhitney> {
    let c = finite_cushion(p)?;
    if p.is_zero() {
        return Ok(TaylorWhitney { terms: Vec::new() });
    }
    Ok(TaylorWhitney { terms: vec![(CutoffSpec::new(p.base, 0.5, 1.0)?, *p, c)] })
}

/// Nonnegative C2 function with the given jets at the keys.
pub fn taylor_whitney_field(v: &WhitneyField) -> Result<TaylorWhitney> {
    if !wplus_norm(v).is_finite() {
        return Err(Error::InfiniteCushion);
    }
    let jets = v.jets();
    let mut terms = Vec::with_capacity(jets.len());
    for (a, p) in jets.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        let gap = jets
            .iter()
            .enumerate()
            .filter(|(b, _)| *b != a)
            .map(|(_, q)| q.base.dist(&p.base))
            .fold(f64::INFINITY, f64::min);
        let r = (0.5 * gap).min(1.0);
        terms.push((CutoffSpec::new(p.base, 0.5 * r, r)?, *p, finite_cushion(p)?));
    }
    Ok(TaylorWhitney { terms })
}

/// 1 when the prescribed jet is not the zero polynomial.
pub fn delta_flag(t: &Jet) -> u8 {
    u8::from(t.ring_norm() > 0.0)
}

/// `u^4 (35 - 84 u + 70 u^2 - 20 u^3)` on `[0, 1]`, clamped outside; C3.
fn guard_step(u: f64) -> [f64; 3] {
    if u <= 0.0 {
        return [0.0, 0.0, 0.0];
    }
    if u >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    let u2 = u * u;
    let u3 = u2 * u;
    let r = 1.0 - u;
    [u2 * u2 * (35.0 - 84.0 * u + 70.0 * u2 - 20.0 * u3), 140.0 * u3 * r * r * r, 420.0 * u2 * r * r * (1.0 - 2.0 * u)]
}

/// Prescribed jet at a square's representative point with its depth set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareJet {
    pub jet: Jet,
    pub depth: DepthSet,
    /// The solver returned a jet with infinite cushion and it was clamped.
    pub clamped: bool,
}

/// Inputs shared by all pieces of one interpolant.
#[derive(Debug, Clone, Copy)]
pub struct PieceContext<'a> {
    pub dec: &'a CZDecomposition,
    pub values: &'a [f64],
    pub m: f64,
    pub cfg: &'a Config,
}

/// The feasible-jet problem at the representative point of Sharp square `idx`, with its depth set.
pub fn square_problem(ctx: &PieceContext, idx: usize) -> Result<(FeasibleJetProblem, DepthSet)> {
    let info = ctx.dec.square(idx);
    if info.label != Label::Sharp {
        return Err(Error::InvalidArgument("prescribed jets live on Sharp squares".into()));
    }
    let x0 = info.rep;
    let depth = depth_set_in(x0, ctx.dec.grid(), ctx.cfg);
    let pts = ctx.dec.points();
    let prob = FeasibleJetProblem {
        x0,
        constrained_points: depth.indices.iter().map(|&i| (pts[i], ctx.values[i])).collect(),
        free_points: Vec::new(),
        m: ctx.m,
        c_t: ctx.cfg.c_t,
    };
    Ok((prob, depth))
}

/// Least-norm feasible jet at the representative point of Sharp square `idx`.
pub fn square_jet(ctx: &PieceContext, idx: usize) -> Result<SquareJet> {
    let (prob, depth) = square_problem(ctx, idx)?;
    Ok(clamp_jet(prescribed_jet(&prob, ctx.cfg)?, depth))
}

/// Zeroes the gradient of a jet whose value is not positive (solver slop at the boundary).
pub fn clamp_jet(jet: Jet, depth: DepthSet) -> SquareJet {
    if jet.value > 0.0 || jet.is_zero() {
        return SquareJet { jet, depth, clamped: false };
    }
    SquareJet { jet: Jet::zero(jet.base), depth, clamped: true }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Type1Piece {
    pub jet: Jet,
    pub cushion: f64,
    pub cutoff: CutoffSpec,
    pub straightening: Straightening,
    /// Nonnegative extension of the raw values along the curve.
    pub safe: OneDFunction,
    /// Linear extension of the residuals `f - T` when the jet is nonzero.
    pub big: Option<OneDFunction>,
    /// Residual level below which `big` hands over to `safe`.
    pub guard: f64,
    pub side: f64,
    pub depth: DepthSet,
}

impl Type1Piece {
    fn damper(&self, t2: f64) -> [f64; 3] {
        let (a, b) = (DAMP_INNER * self.side, DAMP_OUTER * self.side);
        let r = t2.abs();
        if r <= a {
            return [1.0, 0.0, 0.0];
        }
        if r >= b {
            return [0.0, 0.0, 0.0];
        }
        let h = b - a;
        let [w, w1, w2] = blend((r - a) / h);
        [1.0 - w, -t2.signum() * w1 / h, -w2 / (h * h)]
    }

    fn vertical(&self, y: &Point2) -> SecondJet {
        let (t, dt1, dt2, h2) = self.straightening.forward_jet(y);
        let damp = SecondJet::along(
            {
                let d = self.damper(t[1]);
                (d[0], d[1], d[2])
            },
            dt2,
            Some(&h2),
        );
        let safe = SecondJet::along(self.safe.eval(t[0]), dt1, None).mul(&damp);
        let Some(big) = &self.big else {
            return safe;
        };
        if !(self.guard > 0.0) {
            return safe;
        }
        let tj = cushioned(&self.jet, 0.0, y);
        let hbig = tj.add(&SecondJet::along(big.eval(t[0]), dt1, None).mul(&damp));
        let lam = hbig.scale(1.0 / self.guard).compose(guard_step(hbig.value / self.guard));
        if lam.value == 1.0 && lam.grad == [0.0; 2] {
            return hbig;
        }
        if lam.value == 0.0 && lam.grad == [0.0; 2] {
            return safe;
        }
        safe.add(&lam.mul(&hbig.sub(&safe)))
    }

    pub fn eval(&self, y: &Point2) -> SecondJet {
        let psi = self.cutoff.eval(y);
        if psi.value == 1.0 && psi.grad == [0.0; 2] {
            return cushioned(&self.jet, self.cushion, y);
        }
        let h = self.vertical(y);
        if psi.value == 0.0 && psi.grad == [0.0; 2] {
            return h;
        }
        h.add(&psi.mul(&cushioned(&self.jet, self.cushion, y).sub(&h)))
    }

    /// Data indices read when evaluating at `y`.
    pub fn depth_at(&self, y: &Point2) -> DepthSet {
        let t1 = self.straightening.forward(y)[0];
        let st = &self.straightening;
        let knots = self.safe.stencil(t1);
        self.depth.union(&DepthSet::from_unsorted(knots.indices.iter().map(|&k| st.knot_data[k]).collect()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PieceKind {
    Type1(Box<Type1Piece>),
    Type2 { extension: TaylorWhitney, depth: DepthSet },
    Type3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalPiece {
    pub square: DyadicSquare,
    pub kind: PieceKind,
}

impl LocalPiece {
    pub fn eval(&self, y: &Point2) -> SecondJet {
        match &self.kind {
            PieceKind::Type1(p) => p.eval(y),
            PieceKind::Type2 { extension, .. } => extension.eval(y),
            PieceKind::Type3 => SecondJet::ZERO,
        }
    }

    pub fn depth_at(&self, y: &Point2) -> DepthSet {
        match &self.kind {
            PieceKind::Type1(p) => p.depth_at(y),
            PieceKind::Type2 { depth, .. } => depth.clone(),
            PieceKind::Type3 => DepthSet::default(),
        }
    }
}

/// The Sharp-square operator from an already computed prescribed jet.
pub fn local_extend_with(ctx: &PieceContext, idx: usize, t: &SquareJet) -> Result<LocalPiece> {
    let dec = ctx.dec;
    let info = dec.square(idx);
    let st = info.straightening.clone().ok_or_else(|| Error::InvalidArgument("square has no straightening".into()))?;
    let side = dec.side(idx);
    let pts = dec.points();
    let knots: Vec<f64> = st.knot_data.iter().map(|&i| st.rotate(&pts[i])[0]).collect();
    let raw: Vec<f64> = st.knot_data.iter().map(|&i| ctx.values[i]).collect();
    let safe = extend_nonneg(&OneDData::new(knots.clone(), raw)?, ctx.m)?;
    let jet = t.jet;
    let big = if delta_flag(&jet) == 1 {
        let resid: Vec<f64> = st.knot_data.iter().map(|&i| ctx.values[i] - jet.evaluate(&pts[i])).collect();
        Some(extend_linear(&OneDData::new(knots, resid)?))
    } else {
        None
    };
    let cushion = finite_cushion(&jet)?;
    let outer = 0.5 * info.rep_dist.min(side);
    let cutoff = CutoffSpec::new(info.rep, 0.5 * outer, outer)?;
    Ok(LocalPiece {
        square: info.square,
        kind: PieceKind::Type1(Box::new(Type1Piece {
            jet,
            cushion,
            cutoff,
            straightening: st,
            safe,
            big,
            guard: ctx.cfg.cushion * ctx.m * side * side,
            side,
            depth: t.depth.clone(),
        })),
    })
}

pub fn local_extend(ctx: &PieceContext, idx: usize) -> Result<LocalPiece> {
    let t = square_jet(ctx, idx)?;
    local_extend_with(ctx, idx, &t)
}

/// The Empty-square operator: cushioned singleton extension of the jet of `mu(Q)`.
pub fn empty_piece_with(ctx: &PieceContext, idx: usize, t: &SquareJet) -> Result<LocalPiece> {
    Ok(LocalPiece {
        square: ctx.dec.square(idx).square,
        kind: PieceKind::Type2 { extension: taylor_whitney_singleton(&t.jet)?, depth: t.depth.clone() },
    })
}

pub fn assign_operator(ctx: &PieceContext, idx: usize) -> Result<LocalPiece> {
    let info = ctx.dec.square(idx);
    match info.label {
        Label::Sharp => local_extend(ctx, idx),
        Label::Empty => {
            let target = ctx.dec.mu_map(idx)?;
            let t = square_jet(ctx, target)?;
            empty_piece_with(ctx, idx, &t)
        }
        Label::Trivial => Ok(LocalPiece { square: info.square, kind: PieceKind::Type3 }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::czdecomp::build_decomposition;

    fn fd_check(f: impl Fn(&Point2) -> SecondJet, x: Point2, h: f64, tol: f64) {
        let a = f(&x);
        for k in 0..2 {
            let mut p = x;
            let mut m = x;
            if k == 0 {
                p.x1 += h;
                m.x1 -= h;
            } else {
                p.x2 += h;
                m.x2 -= h;
            }
            let (fp, fm) = (f(&p), f(&m));
            let g = (fp.value - fm.value) / (2.0 * h);
            assert!((g - a.grad[k]).abs() <= tol * (1.0 + a.grad[k].abs()), "grad {k}: {g} vs {}", a.grad[k]);
            for j in 0..2 {
                let hh = (fp.grad[j] - fm.grad[j]) / (2.0 * h);
                assert!(
                    (hh - a.hess[k][j]).abs() <= tol * (1.0 + a.hess[k][j].abs()),
                    "hess {k}{j}: {hh} vs {}",
                    a.hess[k][j]
                );
            }
        }
    }

    #[test]
    fn cutoff_plateaus_and_derivatives() {
        let c = CutoffSpec::new(Point2::new(0.0, 0.0), 0.5, 1.0).unwrap();
        assert_eq!(c.eval(&Point2::new(0.3, 0.3)).value, 1.0);
        assert_eq!(c.eval(&Point2::new(0.8, 0.7)), SecondJet::ZERO);
        for x in [Point2::new(0.6, 0.1), Point2::new(-0.4, 0.5), Point2::new(0.2, -0.85)] {
            let v = c.eval(&x).value;
            assert!((0.0..=1.0).contains(&v));
            fd_check(|y| c.eval(y), x, 1e-6, 1e-5);
        }
    }

    #[test]
    fn singleton_extensions() {
        let base = Point2::new(0.2, -0.1);
        let z = taylor_whitney_singleton(&Jet::zero(base)).unwrap();
        assert_eq!(z.eval(&Point2::new(0.4, 0.0)), SecondJet::ZERO);
        let one = taylor_whitney_singleton(&Jet::new(base, 1.0, [0.0, 0.0])).unwrap();
        let at = one.eval(&base);
        assert_eq!(at.value, 1.0);
        assert_eq!(at.grad, [0.0, 0.0]);
        let slope = Jet::new(base, 1.0, [2.0, 0.0]);
        assert_eq!(slope.cushion(), ExtReal::Finite(1.0));
        let f = taylor_whitney_singleton(&slope).unwrap();
        let at = f.eval(&base);
        assert_eq!((at.value, at.grad), (1.0, [2.0, 0.0]));
        for a in -60..=60 {
            for b in -60..=60 {
                let y = Point2::new(base.x1 + a as f64 * 0.05, base.x2 + b as f64 * 0.05);
                assert!(f.eval(&y).value >= -1e-14);
            }
        }
        fd_check(|y| f.eval(y), Point2::new(0.9, 0.3), 1e-6, 1e-5);
        let bad = Jet::new(base, 0.0, [1.0, 0.0]);
        assert_eq!(taylor_whitney_singleton(&bad).unwrap_err(), Error::InfiniteCushion);
    }

    #[test]
    fn field_extension_matches_singleton_and_interpolates() {
        let p = Jet::new(Point2::new(0.0, 0.0), 0.7, [0.3, -0.2]);
        let s = taylor_whitney_singleton(&p).unwrap();
        let f = taylor_whitney_field(&WhitneyField::new(vec![p]).unwrap()).unwrap();
        for y in [Point2::new(0.1, 0.2), Point2::new(0.6, -0.5), Point2::new(2.0, 0.0)] {
            assert_eq!(s.eval(&y), f.eval(&y));
        }
        let q = Jet::new(Point2::new(1.0, 0.0), 0.4, [-0.1, 0.0]);
        let two = taylor_whitney_field(&WhitneyField::new(vec![p, q]).unwrap()).unwrap();
        for j in [p, q] {
            let at = two.eval(&j.base);
            assert_eq!(at.value, j.value);
            assert_eq!(at.grad, j.grad);
        }
        fd_check(|y| two.eval(y), Point2::new(0.3, 0.1), 1e-6, 1e-5);
        let zeros = WhitneyField::new(vec![Jet::zero(p.base), Jet::zero(q.base)]).unwrap();
        assert_eq!(taylor_whitney_field(&zeros).unwrap().eval(&Point2::new(0.3, 0.0)), SecondJet::ZERO);
    }

    #[test]
    fn delta_flag_is_exact() {
        let b = Point2::new(0.0, 0.0);
        assert_eq!(delta_flag(&Jet::zero(b)), 0);
        assert_eq!(delta_flag(&Jet::new(b, 1e-30, [0.0, 0.0])), 1);
    }

    #[test]
    fn guard_step_is_smooth() {
        for u in [0.1, 0.37, 0.5, 0.81] {
            let h = 1e-6;
            let [_, d1, d2] = guard_step(u);
            let fd1 = (guard_step(u + h)[0] - guard_step(u - h)[0]) / (2.0 * h);
            let fd2 = (guard_step(u + h)[1] - guard_step(u - h)[1]) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-6 && (d2 - fd2).abs() < 1e-5);
        }
        assert_eq!(guard_step(1.0), [1.0, 0.0, 0.0]);
    }

    fn single_point_ctx(value: f64) -> (CZDecomposition, Vec<f64>, Config) {
        let e = [Point2::new(0.4, 0.6)];
        let cfg = Config::default();
        (build_decomposition(&e, &cfg).unwrap(), vec![value], cfg)
    }

    #[test]
    fn zero_data_gives_zero_pieces() {
        let (dec, f, cfg) = single_point_ctx(0.0);
        let ctx = PieceContext { dec: &dec, values: &f, m: 1.0, cfg: &cfg };
        for idx in 0..dec.squares().len() {
            let piece = assign_operator(&ctx, idx).unwrap();
            let c = dec.square(idx).square.center(1.0);
            assert_eq!(piece.eval(&c).value, 0.0);
        }
    }

    #[test]
    fn sharp_piece_interpolates_and_carries_its_jet() {
        let (dec, f, cfg) = single_point_ctx(1.0);
        let ctx = PieceContext { dec: &dec, values: &f, m: 2.0, cfg: &cfg };
        for (idx, info) in dec.squares().iter().enumerate() {
            match info.label {
                Label::Sharp => {
                    let t = square_jet(&ctx, idx).unwrap();
                    let piece = local_extend_with(&ctx, idx, &t).unwrap();
                    assert_eq!(piece.eval(&dec.points()[0]).value, 1.0);
                    let at = piece.eval(&info.rep);
                    assert_eq!(at.value, t.jet.value);
                    assert_eq!(at.grad, t.jet.grad);
                    fd_check(|y| piece.eval(y), Point2::new(info.rep.x1 + 0.21, info.rep.x2 - 0.13), 1e-6, 1e-4);
                }
                Label::Trivial => assert_eq!(assign_operator(&ctx, idx).unwrap().kind, PieceKind::Type3),
                Label::Empty => {
                    let target = dec.mu_map(idx).unwrap();
                    let t = square_jet(&ctx, target).unwrap();
                    let piece = assign_operator(&ctx, idx).unwrap();
                    let at = piece.eval(&dec.square(target).rep);
                    assert_eq!((at.value, at.grad), (t.jet.value, t.jet.grad));
                }
            }
        }
    }

    #[test]
    fn empty_square_next_to_lone_point_uses_mu_jet() {
        let e = [Point2::new(0.5, 0.5), Point2::new(0.52, 0.5), Point2::new(0.5, 0.53), Point2::new(2.6, 1.9)];
        let cfg = Config::default();
        let dec = build_decomposition(&e, &cfg).unwrap();
        let f = [1.0, 0.9, 0.8, 0.5];
        let ctx = PieceContext { dec: &dec, values: &f, m: 10.0, cfg: &cfg };
        let idx = (0..dec.squares().len()).find(|&i| dec.square(i).label == Label::Empty).unwrap();
        let target = dec.mu_map(idx).unwrap();
        let t = square_jet(&ctx, target).unwrap();
        match assign_operator(&ctx, idx).unwrap().kind {
            PieceKind::Type2 { extension, depth } => {
                assert_eq!(extension.jets().next().copied(), if t.jet.is_zero() { None } else { Some(t.jet) });
                assert_eq!(depth, t.depth);
            }
            other => panic!("unexpected piece {other:?}"),
        }
    }
}
