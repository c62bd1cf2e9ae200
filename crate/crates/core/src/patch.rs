//! The global interpolant: local pieces glued by a partition of unity over the
//! 9/8-dilated squares, with per-query depth sets and the depth audit.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convexgeom::{data_field, prescribed_jet_with, DepthSet};
use crate::czdecomp::{build_decomposition, CZDecomposition, Label};
use crate::error::{Error, Result};
use crate::extension::{
    clamp_jet, empty_piece_with, local_extend_with, square_problem, LocalPiece, PieceContext, PieceKind, SecondJet,
    SquareJet,
};
use crate::jetcore::{Config, Point2};

/// Half-width of a partition bump relative to the side of its square.
pub const BUMP_HALF_WIDTH: f64 = 9.0 / 16.0;

/// Value with derivatives at a query point and the data indices they depend on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub value: f64,
    pub grad: [f64; 2],
    /// `(d11, d12, d22)`.
    pub hess: [f64; 3],
    pub depth_set: DepthSet,
    /// Index lookups spent locating the overlapping squares.
    pub squares_visited: usize,
}

impl EvalResult {
    /// Bit patterns of value, gradient and Hessian.
    pub fn bits(&self) -> [u64; 6] {
        [
            self.value.to_bits(),
            self.grad[0].to_bits(),
            self.grad[1].to_bits(),
            self.hess[0].to_bits(),
            self.hess[1].to_bits(),
            self.hess[2].to_bits(),
        ]
    }
}

/// `(1 - s^2)^4` on `|s| < 1` with its first two derivatives; C3 at the ends.
fn bump1(s: f64) -> [f64; 3] {
    if s.abs() >= 1.0 {
        return [0.0, 0.0, 0.0];
    }
    let r = 1.0 - s * s;
    let r2 = r * r;
    [r2 * r2, -8.0 * s * r2 * r, -8.0 * r2 * r + 48.0 * s * s * r2]
}

/// Unnormalized tensor bump of square `idx`, supported on the open `9/8 Q`.
pub fn square_bump(dec: &CZDecomposition, idx: usize, x: &Point2) -> SecondJet {
    let q = dec.square(idx).square;
    let c = q.center(dec.unit());
    let h = BUMP_HALF_WIDTH * q.side(dec.unit());
    let a = bump1((x.x1 - c.x1) / h);
    let b = bump1((x.x2 - c.x2) / h);
    SecondJet {
        value: a[0] * b[0],
        grad: [a[1] * b[0] / h, a[0] * b[1] / h],
        hess: [[a[2] * b[0] / (h * h), a[1] * b[1] / (h * h)], [a[1] * b[1] / (h * h), a[0] * b[2] / (h * h)]],
    }
}

/// The global operator for fixed data and norm bound. Pieces are assembled on
/// first use and then immutable.
#[derive(Debug)]
pub struct Interpolant {
    dec: Arc<CZDecomposition>,
    values: Vec<f64>,
    m: f64,
    cfg: Config,
    jets: Vec<OnceLock<Result<SquareJet>>>,
    pieces: Vec<OnceLock<Result<LocalPiece>>>,
    frozen: Mutex<HashMap<DepthSet, Arc<Vec<[f64; 2]>>>>,
    fingerprint: u64,
}

fn check_values(values: &[f64], n: usize) -> Result<()> {
    if values.len() != n {
        return Err(Error::InvalidArgument(format!("{} values for {} points", values.len(), n)));
    }
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if value < 0.0 {
            return Err(Error::NegativeValue { index, value });
        }
    }
    Ok(())
}

/// Eagerly assembled interpolant.
pub fn build_interpolant(e: &[Point2], f: &[f64], m: f64, cfg: &Config) -> Result<Interpolant> {
    let it = Interpolant::lazy(e, f, m, cfg)?;
    it.assemble_all()?;
    Ok(it)
}

impl Interpolant {
    /// Builds the decomposition; pieces are assembled on demand.
    pub fn lazy(e: &[Point2], f: &[f64], m: f64, cfg: &Config) -> Result<Self> {
        check_values(f, e.len())?;
        let dec = build_decomposition(e, cfg)?;
        Self::with_decomposition(Arc::new(dec), f.to_vec(), m, cfg)
    }

    /// Reuses a decomposition of the same sites (it does not depend on the values).
    pub fn with_decomposition(dec: Arc<CZDecomposition>, values: Vec<f64>, m: f64, cfg: &Config) -> Result<Self> {
        check_values(&values, dec.points().len())?;
        if !(m >= 0.0) || !m.is_finite() {
            return Err(Error::InvalidArgument("M must be finite and nonnegative".into()));
        }
        let n = dec.squares().len();
        let mut h = DefaultHasher::new();
        for (p, v) in dec.points().iter().zip(&values) {
            p.bits().hash(&mut h);
            v.to_bits().hash(&mut h);
        }
        Ok(Interpolant {
            jets: (0..n).map(|_| OnceLock::new()).collect(),
            pieces: (0..n).map(|_| OnceLock::new()).collect(),
            dec,
            values,
            m,
            cfg: cfg.clone(),
            frozen: Mutex::new(HashMap::new()),
            fingerprint: h.finish(),
        })
    }

    pub fn decomposition(&self) -> &CZDecomposition {
        &self.dec
    }

    pub fn shared_decomposition(&self) -> Arc<CZDecomposition> {
        Arc::clone(&self.dec)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm_bound(&self) -> f64 {
        self.m
    }

    pub fn config(&self) -> &Config {
        &self.cfg
    }

    /// Hash of the sites and values.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    fn ctx(&self) -> PieceContext<'_> {
        PieceContext { dec: &self.dec, values: &self.values, m: self.m, cfg: &self.cfg }
    }

    /// Prescribed jet of Sharp square `idx`.
    pub fn square_jet(&self, idx: usize) -> Result<&SquareJet> {
        self.jets[idx].get_or_init(|| self.compute_jet(idx)).as_ref().map_err(Clone::clone)
    }

    fn compute_jet(&self, idx: usize) -> Result<SquareJet> {
        let ctx = self.ctx();
        let (prob, depth) = square_problem(&ctx, idx)?;
        let grads = if prob.constrained_points.len() > self.cfg.joint_limit {
            let cached = self.frozen.lock().expect("cache lock").get(&depth).cloned();
            let g = match cached {
                Some(g) => g,
                None => {
                    let g = Arc::new(data_field(&prob.constrained_points)?.0);
                    self.frozen.lock().expect("cache lock").insert(depth.clone(), Arc::clone(&g));
                    g
                }
            };
            Some(g)
        } else {
            None
        };
        let jet = prescribed_jet_with(&prob, &self.cfg, grads.as_deref().map(|g| g.as_slice()))?;
        Ok(clamp_jet(jet, depth))
    }

    pub fn piece(&self, idx: usize) -> Result<&LocalPiece> {
        self.pieces[idx].get_or_init(|| self.compute_piece(idx)).as_ref().map_err(Clone::clone)
    }

    fn compute_piece(&self, idx: usize) -> Result<LocalPiece> {
        let ctx = self.ctx();
        let info = self.dec.square(idx);
        match info.label {
            Label::Sharp => local_extend_with(&ctx, idx, self.square_jet(idx)?),
            Label::Empty => {
                let target = self.dec.mu_map(idx)?;
                empty_piece_with(&ctx, idx, self.square_jet(target)?)
            }
            Label::Trivial => Ok(LocalPiece { square: info.square, kind: PieceKind::Type3 }),
        }
    }

    pub fn assemble_all(&self) -> Result<()> {
        for idx in 0..self.pieces.len() {
            self.piece(idx)?;
        }
        Ok(())
    }

    /// Number of squares whose prescribed jet was clamped.
    pub fn clamped_jets(&self) -> usize {
        self.jets.iter().filter(|j| matches!(j.get(), Some(Ok(s)) if s.clamped)).count()
    }

    /// Partition functions `theta_Q` at `x` for the overlapping squares.
    pub fn partition_at(&self, x: &Point2) -> Vec<(usize, SecondJet)> {
        partition(&self.dec, &self.dec.neighbors_counted(x).squares, x)
    }

    pub fn query(&self, x: &Point2) -> Result<EvalResult> {
        let hits = self.dec.neighbors_counted(x);
        let mut acc = SecondJet::ZERO;
        let mut depth = DepthSet::default();
        for (idx, theta) in partition(&self.dec, &hits.squares, x) {
            let piece = self.piece(idx)?;
            if matches!(piece.kind, PieceKind::Type3) {
                continue;
            }
            acc = acc.add(&theta.mul(&piece.eval(x)));
            depth = depth.union(&piece.depth_at(x));
        }
        Ok(EvalResult {
            value: acc.value,
            grad: acc.grad,
            hess: [acc.hess[0][0], 0.5 * (acc.hess[0][1] + acc.hess[1][0]), acc.hess[1][1]],
            depth_set: depth,
            squares_visited: hits.visited,
        })
    }

    pub fn query_value(&self, x: &Point2) -> Result<f64> {
        Ok(self.query(x)?.value)
    }
}

fn partition(dec: &CZDecomposition, squares: &[usize], x: &Point2) -> Vec<(usize, SecondJet)> {
    let bumps: Vec<(usize, SecondJet)> = squares.iter().map(|&q| (q, square_bump(dec, q, x))).collect();
    let total = bumps.iter().fold(SecondJet::ZERO, |s, b| s.add(&b.1));
    if !(total.value > 0.0) {
        return Vec::new();
    }
    let t = total.value;
    let inv = total.compose([1.0 / t, -1.0 / (t * t), 2.0 / (t * t * t)]);
    bumps.into_iter().map(|(q, b)| (q, b.mul(&inv))).collect()
}

/// One detected dependence on data outside the reported depth set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leak {
    pub at: Point2,
    pub trial: usize,
    /// A perturbed index that changes the jets on its own, if one was isolated.
    pub index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub queries: usize,
    pub trials: usize,
    pub leaks: Vec<Leak>,
    /// Largest depth set over the queries: the empirical depth.
    pub max_depth: usize,
}

/// Perturbs values outside each query's depth set, rebuilds the pieces from
/// scratch on the perturbed data (same sites, same norm bound) and requires
/// bit-identical jets.
pub fn depth_audit(it: &Interpolant, queries: &[Point2], trials: usize, seed: u64) -> Result<AuditReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = it.values.len();
    let top = it.values.iter().fold(0.0f64, |a, &b| a.max(b)).max(1.0);
    let mut report = AuditReport { queries: queries.len(), trials, leaks: Vec::new(), max_depth: 0 };
    for x in queries {
        let base = it.query(x)?;
        report.max_depth = report.max_depth.max(base.depth_set.len());
        let off: Vec<usize> = (0..n).filter(|&i| !base.depth_set.contains(i)).collect();
        if off.is_empty() {
            continue;
        }
        let rerun = |vals: Vec<f64>| -> Result<EvalResult> {
            Interpolant::with_decomposition(it.shared_decomposition(), vals, it.m, &it.cfg)?.query(x)
        };
        for trial in 0..trials {
            let mut chosen: Vec<usize> = off.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
            if chosen.is_empty() {
                chosen.push(off[rng.gen_range(0..off.len())]);
            }
            let mut vals = it.values.clone();
            for &i in &chosen {
                vals[i] = rng.gen_range(0.0..top);
            }
            let got = rerun(vals.clone())?;
            if got.bits() == base.bits() && got.depth_set == base.depth_set {
                continue;
            }
            let mut index = None;
            for &i in &chosen {
                let mut single = it.values.clone();
                single[i] = vals[i];
                if rerun(single)?.bits() != base.bits() {
                    index = Some(i);
                    break;
                }
            }
            report.leaks.push(Leak { at: *x, trial, index });
        }
    }
    Ok(report)
}
