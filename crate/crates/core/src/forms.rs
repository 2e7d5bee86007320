//! Test functions with closed-form horizontal derivatives, midpoint
//! quadrature of the quadratic forms, the ground-state conjugation identity
//! and central Weyl quasi-modes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::group::{inverse, multiply_unchecked, CVec, GroupPoint, HVec, MetivierStructure};
use crate::norm::{check_alpha, kaplan_norm};
use crate::potential::{grad_norm, potential_unchecked};
use crate::sampling::{self, chunk_ranges, map_chunks, pairwise_sum};

/// Axis-aligned box containing the support of a test function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// A function on the group together with its exact horizontal derivatives.
pub trait TestFunction: Sync {
    fn value(&self, s: &MetivierStructure, p: &GroupPoint) -> f64;
    /// `X_j f(p)`, `j` zero-based.
    fn xj(&self, s: &MetivierStructure, j: usize, p: &GroupPoint) -> f64;
    /// `sum_j X_j^2 f(p)`.
    fn sum_xj2(&self, s: &MetivierStructure, p: &GroupPoint) -> f64;
    /// `None` for functions without compact support.
    fn support(&self, s: &MetivierStructure) -> Option<SupportBox>;
}

/// The flat profile `g(s) = exp(-1/(1-s))` on `s < 1`, zero otherwise,
/// with its first two derivatives.
pub fn bump_profile(s: f64) -> (f64, f64, f64) {
    if s >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let q = 1.0 - s;
    let e = (-1.0 / q).exp();
    let q2 = q * q;
    (e, -e / q2, e * (1.0 / (q2 * q2) - 2.0 / (q2 * q)))
}

/// `psi(x, t) = g(|x|^2 / a^2) g(|t|^2 / b^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothBump {
    pub x_radius: f64,
    pub t_radius: f64,
}

impl SmoothBump {
    pub fn new(x_radius: f64, t_radius: f64) -> Result<Self> {
        if !(x_radius > 0.0 && t_radius > 0.0) {
            return Err(invalid("radius", format!("bump radii must be positive, got ({x_radius}, {t_radius})")));
        }
        Ok(Self { x_radius, t_radius })
    }

    pub fn unit() -> Self {
        Self { x_radius: 1.0, t_radius: 1.0 }
    }

    fn profiles(&self, p: &GroupPoint) -> ((f64, f64, f64), (f64, f64, f64)) {
        let a2 = self.x_radius * self.x_radius;
        let b2 = self.t_radius * self.t_radius;
        (bump_profile(p.x_norm_sq() / a2), bump_profile(p.t_norm_sq() / b2))
    }
}

impl TestFunction for SmoothBump {
    fn value(&self, _s: &MetivierStructure, p: &GroupPoint) -> f64 {
        let ((g, _, _), (h, _, _)) = self.profiles(p);
        g * h
    }

    fn xj(&self, s: &MetivierStructure, j: usize, p: &GroupPoint) -> f64 {
        let ((g, g1, _), (h, h1, _)) = self.profiles(p);
        if g == 0.0 || h == 0.0 {
            return 0.0;
        }
        let a2 = self.x_radius * self.x_radius;
        let b2 = self.t_radius * self.t_radius;
        // X_j |t|^2 = (J_t x)_j
        let jtx = s.apply_jt(&p.t, &p.x);
        g1 * h * 2.0 * p.x[j] / a2 + g * h1 * jtx[j] / b2
    }

    fn sum_xj2(&self, s: &MetivierStructure, p: &GroupPoint) -> f64 {
        let ((g, g1, g2), (h, h1, h2)) = self.profiles(p);
        if g == 0.0 || h == 0.0 {
            return 0.0;
        }
        let a2 = self.x_radius * self.x_radius;
        let b2 = self.t_radius * self.t_radius;
        let x2 = p.x_norm_sq();
        let jtx2: f64 = s.apply_jt(&p.t, &p.x).iter().map(|v| v * v).sum();
        let jk2 = s.sum_jk_sq(&p.x);
        let n = s.n() as f64;
        // The mixed terms carry (x, J_t x) = 0.
        g2 * h * 4.0 * x2 / (a2 * a2) + g * h2 * jtx2 / (b2 * b2) + g1 * h * 4.0 * n / a2 + g * h1 * jk2 / (2.0 * b2)
    }

    fn support(&self, s: &MetivierStructure) -> Option<SupportBox> {
        let d = s.dim_x();
        let mut lo = vec![-self.x_radius; d];
        let mut hi = vec![self.x_radius; d];
        lo.extend(std::iter::repeat(-self.t_radius).take(s.m()));
        hi.extend(std::iter::repeat(self.t_radius).take(s.m()));
        Some(SupportBox { lo, hi })
    }
}

/// Polynomial probes used to check the derivative code.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Probe {
    /// `f = t_k`.
    Central(usize),
    /// `f = x_i`.
    Horizontal(usize),
    /// `f = |x|^2`.
    XNormSq,
}

impl TestFunction for Probe {
    fn value(&self, _s: &MetivierStructure, p: &GroupPoint) -> f64 {
        match *self {
            Probe::Central(k) => p.t[k],
            Probe::Horizontal(i) => p.x[i],
            Probe::XNormSq => p.x_norm_sq(),
        }
    }

    fn xj(&self, s: &MetivierStructure, j: usize, p: &GroupPoint) -> f64 {
        match *self {
            Probe::Central(k) => {
                let mut buf: HVec = smallvec::smallvec![0.0; s.dim_x()];
                s.apply_jk(k, &p.x, &mut buf);
                0.5 * buf[j]
            }
            Probe::Horizontal(i) => f64::from(u8::from(i == j)),
            Probe::XNormSq => 2.0 * p.x[j],
        }
    }

    fn sum_xj2(&self, s: &MetivierStructure, _p: &GroupPoint) -> f64 {
        match *self {
            // X_j (J_k x)_j / 2 = (J_k)_jj / 2 = 0
            Probe::Central(_) | Probe::Horizontal(_) => 0.0,
            Probe::XNormSq => 2.0 * s.dim_x() as f64,
        }
    }

    fn support(&self, _s: &MetivierStructure) -> Option<SupportBox> {
        None
    }
}

/// Left translate `p -> f(g^{-1} p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Shifted<F> {
    pub inner: F,
    pub by: GroupPoint,
    by_inv: GroupPoint,
}

impl<F: TestFunction> Shifted<F> {
    pub fn new(inner: F, by: GroupPoint) -> Self {
        let by_inv = inverse(&by);
        Self { inner, by, by_inv }
    }

    fn pull(&self, s: &MetivierStructure, p: &GroupPoint) -> GroupPoint {
        multiply_unchecked(s, &self.by_inv, p)
    }
}

impl<F: TestFunction> TestFunction for Shifted<F> {
    fn value(&self, s: &MetivierStructure, p: &GroupPoint) -> f64 {
        self.inner.value(s, &self.pull(s, p))
    }

    fn xj(&self, s: &MetivierStructure, j: usize, p: &GroupPoint) -> f64 {
        self.inner.xj(s, j, &self.pull(s, p))
    }

    fn sum_xj2(&self, s: &MetivierStructure, p: &GroupPoint) -> f64 {
        self.inner.sum_xj2(s, &self.pull(s, p))
    }

    fn support(&self, s: &MetivierStructure) -> Option<SupportBox> {
        // g (x', t') = (g_x + x', g_t + t' + 1/2 (J_k g_x, x'))
        let inner = self.inner.support(s)?;
        let d = s.dim_x();
        let reach = inner.lo[..d]
            .iter()
            .zip(&inner.hi[..d])
            .map(|(l, h)| l.abs().max(h.abs()).powi(2))
            .sum::<f64>()
            .sqrt();
        let mut lo = Vec::with_capacity(inner.lo.len());
        let mut hi = Vec::with_capacity(inner.hi.len());
        for i in 0..d {
            lo.push(inner.lo[i] + self.by.x[i]);
            hi.push(inner.hi[i] + self.by.x[i]);
        }
        let mut buf: HVec = smallvec::smallvec![0.0; d];
        for k in 0..s.m() {
            s.apply_jk(k, &self.by.x, &mut buf);
            let slack = 0.5 * buf.iter().map(|v| v * v).sum::<f64>().sqrt() * reach;
            lo.push(inner.lo[d + k] + self.by.t[k] - slack);
            hi.push(inner.hi[d + k] + self.by.t[k] + slack);
        }
        Some(SupportBox { lo, hi })
    }
}

/// `c f`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled<F> {
    pub inner: F,
    pub factor: f64,
}

impl<F: TestFunction> TestFunction for Scaled<F> {
    fn value(&self, s: &MetivierStructure, p: &GroupPoint) -> f64 {
        self.factor * self.inner.value(s, p)
    }
    fn xj(&self, s: &MetivierStructure, j: usize, p: &GroupPoint) -> f64 {
        self.factor * self.inner.xj(s, j, p)
    }
    fn sum_xj2(&self, s: &MetivierStructure, p: &GroupPoint) -> f64 {
        self.factor * self.inner.sum_xj2(s, p)
    }
    fn support(&self, s: &MetivierStructure) -> Option<SupportBox> {
        self.inner.support(s)
    }
}

/// The zero function (empty support).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Zero;

impl TestFunction for Zero {
    fn value(&self, _s: &MetivierStructure, _p: &GroupPoint) -> f64 {
        0.0
    }
    fn xj(&self, _s: &MetivierStructure, _j: usize, _p: &GroupPoint) -> f64 {
        0.0
    }
    fn sum_xj2(&self, _s: &MetivierStructure, _p: &GroupPoint) -> f64 {
        0.0
    }
    fn support(&self, s: &MetivierStructure) -> Option<SupportBox> {
        let d = s.dim_x() + s.m();
        Some(SupportBox { lo: vec![0.0; d], hi: vec![0.0; d] })
    }
}

/// `X_j f(p)` with a range check on `j` (zero-based).
pub fn apply_xj(s: &MetivierStructure, f: &dyn TestFunction, j: usize, p: &GroupPoint) -> Result<f64> {
    s.check_point(p)?;
    if j >= s.dim_x() {
        return Err(invalid("j", format!("index {j} out of range for {} horizontal fields", s.dim_x())));
    }
    Ok(f.xj(s, j, p))
}

/// `L f(p) = -sum_j X_j^2 f(p)`.
pub fn apply_sub_laplacian(s: &MetivierStructure, f: &dyn TestFunction, p: &GroupPoint) -> Result<f64> {
    s.check_point(p)?;
    Ok(-f.sum_xj2(s, p))
}

/// Tensor-product midpoint rule on a box in `(x, t)` coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<usize>,
}

const NODES_PER_CHUNK: usize = 4096;

impl QuadratureGrid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != counts.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len().min(counts.len()) });
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(h > l)) || counts.contains(&0) {
            return Err(invalid("grid", "every axis needs hi > lo and at least one node"));
        }
        Ok(Self { lo, hi, counts })
    }

    /// Box `center +- (x_half, t_half)` with `nx` nodes per horizontal axis and
    /// `nt` per central axis.
    pub fn centered(
        s: &MetivierStructure,
        center: &GroupPoint,
        x_half: f64,
        t_half: f64,
        nx: usize,
        nt: usize,
    ) -> Result<Self> {
        s.check_point(center)?;
        let lo = center.x.iter().map(|c| c - x_half).chain(center.t.iter().map(|c| c - t_half)).collect();
        let hi = center.x.iter().map(|c| c + x_half).chain(center.t.iter().map(|c| c + t_half)).collect();
        let counts = std::iter::repeat(nx).take(s.dim_x()).chain(std::iter::repeat(nt).take(s.m())).collect();
        Self::new(lo, hi, counts)
    }

    /// The support box of `f`, resolved with `nx` / `nt` nodes per axis.
    pub fn around(s: &MetivierStructure, f: &dyn TestFunction, nx: usize, nt: usize) -> Result<Self> {
        let sb = f.support(s).ok_or(Error::SupportNotCovered)?;
        let d = s.dim_x();
        let counts = (0..sb.lo.len()).map(|i| if i < d { nx } else { nt }).collect();
        let hi = sb.lo.iter().zip(&sb.hi).map(|(l, h)| if h > l { *h } else { l + 1.0 }).collect();
        Self::new(sb.lo, hi, counts)
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.counts[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.counts.len()).map(|a| self.spacing(a)).product()
    }

    pub fn node_count(&self) -> usize {
        self.counts.iter().product()
    }

    /// Same box with every count multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self { lo: self.lo.clone(), hi: self.hi.clone(), counts: self.counts.iter().map(|c| c * factor).collect() }
    }

    /// Same grid moved by `shift` along central axis `k`.
    pub fn shifted_t(&self, s: &MetivierStructure, k: usize, shift: f64) -> Self {
        let mut g = self.clone();
        let a = s.dim_x() + k;
        g.lo[a] += shift;
        g.hi[a] += shift;
        g
    }

    pub fn covers(&self, sb: &SupportBox) -> bool {
        let tol = 1e-12;
        sb.lo.len() == self.lo.len()
            && (0..self.lo.len()).all(|i| {
                let w = (self.hi[i] - self.lo[i]).abs().max(1.0);
                self.lo[i] <= sb.lo[i] + tol * w && self.hi[i] >= sb.hi[i] - tol * w
            })
    }

    pub fn check_covers(&self, s: &MetivierStructure, f: &dyn TestFunction) -> Result<()> {
        match f.support(s) {
            Some(sb) if self.covers(&sb) => Ok(()),
            _ => Err(Error::SupportNotCovered),
        }
    }

    fn node(&self, s: &MetivierStructure, mut idx: usize) -> GroupPoint {
        let d = s.dim_x();
        let mut x: HVec = smallvec::smallvec![0.0; d];
        let mut t: CVec = smallvec::smallvec![0.0; s.m()];
        for a in (0..self.counts.len()).rev() {
            let i = idx % self.counts[a];
            idx /= self.counts[a];
            let v = self.lo[a] + (i as f64 + 0.5) * self.spacing(a);
            if a < d {
                x[a] = v;
            } else {
                t[a - d] = v;
            }
        }
        GroupPoint { x, t }
    }

    /// Midpoint-rule integral of `f` over the box. Chunks are summed in a
    /// fixed pairwise order, so the value does not depend on the thread count.
    pub fn integrate<F>(&self, s: &MetivierStructure, f: F) -> f64
    where
        F: Fn(&GroupPoint) -> f64 + Sync + Send,
    {
        self.integrate_many::<1, _>(s, |p| [f(p)])[0]
    }

    /// Several integrals in one sweep.
    pub fn integrate_many<const K: usize, F>(&self, s: &MetivierStructure, f: F) -> [f64; K]
    where
        F: Fn(&GroupPoint) -> [f64; K] + Sync + Send,
    {
        let chunks = chunk_ranges(self.node_count(), NODES_PER_CHUNK);
        let partial: Vec<[f64; K]> = map_chunks(chunks.len(), |c| {
            let (start, len) = chunks[c];
            let mut acc = [0.0; K];
            for idx in start..start + len {
                let v = f(&self.node(s, idx));
                for k in 0..K {
                    acc[k] += v[k];
                }
            }
            acc
        });
        let vol = self.cell_volume();
        std::array::from_fn(|k| {
            let col: Vec<f64> = partial.iter().map(|a| a[k]).collect();
            pairwise_sum(&col) * vol
        })
    }
}

/// `int |grad_H f|^2 w_alpha`.
pub fn dirichlet_form(alpha: f64, s: &MetivierStructure, f: &dyn TestFunction, grid: &QuadratureGrid) -> Result<f64> {
    check_alpha(alpha)?;
    grid.check_covers(s, f)?;
    Ok(grid.integrate(s, |p| {
        let g2: f64 = (0..s.dim_x()).map(|j| f.xj(s, j, p).powi(2)).sum();
        if g2 == 0.0 {
            0.0
        } else {
            g2 * (-kaplan_norm(s, p).powf(alpha)).exp()
        }
    }))
}

/// Both sides of `int |grad f|^2 w = int |grad(f sqrt w)|^2 + V (f sqrt w)^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugationTerms {
    pub lhs: f64,
    pub rhs: f64,
}

impl ConjugationTerms {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

pub fn conjugation_terms(
    alpha: f64,
    s: &MetivierStructure,
    f: &dyn TestFunction,
    grid: &QuadratureGrid,
) -> Result<ConjugationTerms> {
    check_alpha(alpha)?;
    if alpha < 2.0 {
        return Err(invalid("alpha", format!("the conjugation check needs alpha >= 2, got {alpha}")));
    }
    grid.check_covers(s, f)?;
    let d = s.dim_x();
    let [lhs, rhs] = grid.integrate_many(s, |p| {
        let fv = f.value(s, p);
        let grad_f: HVec = (0..d).map(|j| f.xj(s, j, p)).collect();
        if fv == 0.0 && grad_f.iter().all(|v| *v == 0.0) {
            return [0.0, 0.0];
        }
        let n = kaplan_norm(s, p);
        let w = (-n.powf(alpha)).exp();
        let gf2: f64 = grad_f.iter().map(|v| v * v).sum();
        if p.is_identity() {
            return [gf2 * w, gf2 * w];
        }
        let gn = grad_norm(s, p).expect("non-identity node");
        // grad(f sqrt w) = sqrt w (grad f - f (alpha/2) N^(alpha-1) grad N)
        let c = 0.5 * alpha * n.powf(alpha - 1.0) * fv;
        let gu2: f64 = grad_f.iter().zip(&gn).map(|(a, b)| (a - c * b).powi(2)).sum();
        let v = potential_unchecked(alpha, s, p);
        [gf2 * w, w * (gu2 + v * fv * fv)]
    });
    Ok(ConjugationTerms { lhs, rhs })
}

/// `|lhs - rhs|` of the conjugation identity; zero up to quadrature error.
pub fn conjugation_residual(
    alpha: f64,
    s: &MetivierStructure,
    f: &dyn TestFunction,
    grid: &QuadratureGrid,
) -> Result<f64> {
    Ok(conjugation_terms(alpha, s, f, grid)?.residual())
}

/// `psi_n(x, t) = psi((0, -n u_1)(x, t)) = psi(x, t - n u_1)`.
pub fn weyl_sequence(s: &MetivierStructure, psi: SmoothBump, n: i64) -> Result<Shifted<SmoothBump>> {
    if n < 0 {
        return Err(invalid("n", format!("translation index must be non-negative, got {n}")));
    }
    Ok(Shifted::new(psi, central_point(s, n as f64)))
}

fn central_point(s: &MetivierStructure, c: f64) -> GroupPoint {
    let mut g = s.identity();
    g.t[0] = c;
    g
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylRecord {
    pub n_index: i64,
    /// `||(lambda + L + V_alpha) psi_n||_2`.
    pub residual: f64,
    pub psi_norm: f64,
    /// `||psi_n - psi_m||^2` for `m = n + 2 ceil(t_radius)`.
    pub overlap_check: f64,
    pub overlap_index: i64,
}

/// Residual of the quasi-mode `psi_n`. `grid` is a grid for `psi` itself
/// (covering its support); it is moved along with the bump so that every
/// `n` is integrated on congruent nodes.
pub fn weyl_residual(
    alpha: f64,
    s: &MetivierStructure,
    psi: SmoothBump,
    n: i64,
    lambda: f64,
    grid: &QuadratureGrid,
) -> Result<WeylRecord> {
    check_alpha(alpha)?;
    if n < 0 {
        return Err(invalid("n", format!("translation index must be non-negative, got {n}")));
    }
    grid.check_covers(s, &psi)?;
    let psi_n = weyl_sequence(s, psi, n)?;
    let grid_n = grid.shifted_t(s, 0, n as f64);
    let [res2, norm2] = grid_n.integrate_many(s, |p| {
        let v = psi_n.value(s, p);
        let lv = -psi_n.sum_xj2(s, p);
        if v == 0.0 && lv == 0.0 {
            return [0.0, 0.0];
        }
        let pot = if p.is_identity() { 0.0 } else { potential_unchecked(alpha, s, p) };
        let r = lambda * v + lv + pot * v;
        [r * r, v * v]
    });

    let gap = (2.0 * psi.t_radius).ceil() as i64;
    let m = n + gap.max(1);
    let psi_m = weyl_sequence(s, psi, m)?;
    let ht = grid.spacing(s.dim_x());
    let extra = ((m - n) as f64 / ht).round() as usize;
    let mut union = grid_n.clone();
    let a = s.dim_x();
    union.hi[a] = grid_n.lo[a] + (grid_n.counts[a] + extra) as f64 * ht;
    union.counts[a] += extra;
    let overlap_check = union.integrate(s, |p| (psi_n.value(s, p) - psi_m.value(s, p)).powi(2));

    Ok(WeylRecord { n_index: n, residual: res2.sqrt(), psi_norm: norm2.sqrt(), overlap_check, overlap_index: m })
}

/// `(|lambda| + C) ||psi|| + ||L psi||` with `C` the sampled sup of `|V_alpha|`
/// over the cylinder `{|x| <= x_radius, N >= 1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylBound {
    pub lambda: f64,
    pub v_sup: f64,
    pub psi_norm: f64,
    pub l_psi_norm: f64,
    pub bound: f64,
}

pub fn weyl_bound(
    alpha: f64,
    s: &MetivierStructure,
    psi: SmoothBump,
    lambda: f64,
    grid: &QuadratureGrid,
    samples: usize,
    seed: u64,
) -> Result<WeylBound> {
    check_alpha(alpha)?;
    grid.check_covers(s, &psi)?;
    let [n2, l2] = grid.integrate_many(s, |p| [psi.value(s, p).powi(2), psi.sum_xj2(s, p).powi(2)]);
    let v_sup = cylinder_sup_abs_potential(alpha, s, psi.x_radius, samples, seed)?;
    let psi_norm = n2.sqrt();
    let l_psi_norm = l2.sqrt();
    Ok(WeylBound { lambda, v_sup, psi_norm, l_psi_norm, bound: (lambda.abs() + v_sup) * psi_norm + l_psi_norm })
}

/// Sampled `sup |V_alpha|` over `{|x| <= x_radius, N >= 1}`: a deterministic
/// `(|x|, N)` lattice along the first axes plus `samples` random points with
/// `N` log-uniform in `[1, 10^4]`.
pub fn cylinder_sup_abs_potential(
    alpha: f64,
    s: &MetivierStructure,
    x_radius: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    check_alpha(alpha)?;
    let d = s.dim_x();
    let point = |xdir: &[f64], xr: f64, tdir: &[f64], n: f64| -> Option<GroupPoint> {
        let x4 = xr.powi(4);
        let n4 = n.powi(4);
        if n4 < x4 {
            return None;
        }
        let tr = ((n4 - x4) / 16.0).sqrt();
        let x: HVec = xdir.iter().map(|v| v * xr).collect();
        let t: CVec = tdir.iter().map(|v| v * tr).collect();
        let p = GroupPoint { x, t };
        (!p.is_identity()).then_some(p)
    };
    let mut e1 = vec![0.0; d];
    e1[0] = 1.0;
    let mut u1 = vec![0.0; s.m()];
    u1[0] = 1.0;
    let mut best = 0.0_f64;
    for i in 0..=64 {
        let xr = x_radius * i as f64 / 64.0;
        for k in 0..=64 {
            let n = 10f64.powf(4.0 * k as f64 / 64.0).max(xr);
            if let Some(p) = point(&e1, xr, &u1, n) {
                best = best.max(potential_unchecked(alpha, s, &p).abs());
            }
        }
    }
    let mut rng = sampling::rng(seed, 0);
    for _ in 0..samples {
        let xdir = sampling::unit_vector(&mut rng, d);
        let tdir = sampling::unit_vector(&mut rng, s.m());
        let xr = x_radius * rng.random::<f64>().powf(1.0 / d as f64);
        let n = 10f64.powf(4.0 * rng.random::<f64>()).max(xr);
        if let Some(p) = point(&xdir, xr, &tdir, n) {
            best = best.max(potential_unchecked(alpha, s, &p).abs());
        }
    }
    Ok(best)
}
