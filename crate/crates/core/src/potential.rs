//! Horizontal derivatives of the Kaplan norm and of `w_alpha`, the
//! Schrödinger potential `V_alpha` and its two-sided bounds.
//!
//! With `phi = N^alpha / 2` the ground-state transform gives
//! `V_alpha = |grad_H phi|^2 + L phi`, which expands to
//!
//! ```text
//! V = 1/4 a^2 N^(2a-2) |grad N|^2 - 1/2 a(a-1) N^(a-2) |grad N|^2 + 1/2 a N^(a-1) LN
//! ```
//!
//! All formulas carry a factor `|x|^2` and extend continuously by zero to
//! `x = 0`; the identity itself is rejected.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::group::{dilate_unchecked, homogeneous_dimension, ConditionEstimate, GroupPoint, HVec, MetivierStructure};
use crate::norm::{check_alpha, kaplan_norm, unit_sphere_point};
use crate::sampling;

fn require_nonidentity(p: &GroupPoint) -> Result<()> {
    if p.is_identity() {
        Err(Error::IdentityPoint)
    } else {
        Ok(())
    }
}

/// Coefficients `X_j N = (|x|^2 x_j + 4 (J_t x)_j) / N^3`.
pub fn grad_norm(s: &MetivierStructure, p: &GroupPoint) -> Result<HVec> {
    s.check_point(p)?;
    require_nonidentity(p)?;
    let n = kaplan_norm(s, p);
    let x2 = p.x_norm_sq();
    let jtx = s.apply_jt(&p.t, &p.x);
    let n3 = n * n * n;
    Ok(p.x.iter().zip(&jtx).map(|(xj, j)| (x2 * xj + 4.0 * j) / n3).collect())
}

/// `|grad_H N|^2 = (|x|^2 / N^6)(|x|^4 + 16 |t|^2 |J_{sgn t} sgn x|^2)`.
pub fn grad_norm_sq(s: &MetivierStructure, p: &GroupPoint) -> Result<f64> {
    s.check_point(p)?;
    require_nonidentity(p)?;
    Ok(grad_norm_sq_unchecked(s, p))
}

fn grad_norm_sq_unchecked(s: &MetivierStructure, p: &GroupPoint) -> f64 {
    let x2 = p.x_norm_sq();
    let n2 = (x2 * x2 + 16.0 * p.t_norm_sq()).sqrt();
    let jtx2: f64 = s.apply_jt(&p.t, &p.x).iter().map(|v| v * v).sum();
    (x2 * x2 * x2 + 16.0 * jtx2) / (n2 * n2 * n2)
}

/// `LN = (3/N)|grad_H N|^2 - (|x|^2/N^3)(2 + 2n + 2 sum_k |J_k sgn x|^2)`.
pub fn sub_laplacian_norm(s: &MetivierStructure, p: &GroupPoint) -> Result<f64> {
    s.check_point(p)?;
    require_nonidentity(p)?;
    Ok(sub_laplacian_norm_unchecked(s, p))
}

fn sub_laplacian_norm_unchecked(s: &MetivierStructure, p: &GroupPoint) -> f64 {
    let n = kaplan_norm(s, p);
    let x2 = p.x_norm_sq();
    // |x|^2 sum_k |J_k sgn x|^2 = sum_k |J_k x|^2
    let jk2 = s.sum_jk_sq(&p.x);
    3.0 * grad_norm_sq_unchecked(s, p) / n - (2.0 * (1.0 + s.n() as f64) * x2 + 2.0 * jk2) / (n * n * n)
}

/// `grad_H w_alpha = -alpha w_alpha N^(alpha-1) grad_H N`.
pub fn grad_weight(alpha: f64, s: &MetivierStructure, p: &GroupPoint) -> Result<HVec> {
    check_alpha(alpha)?;
    let g = grad_norm(s, p)?;
    let n = kaplan_norm(s, p);
    let f = -alpha * (-n.powf(alpha)).exp() * n.powf(alpha - 1.0);
    Ok(g.into_iter().map(|v| f * v).collect())
}

/// `L w_alpha = w [-a^2 N^(2a-2) |grad N|^2 + a(a-1) N^(a-2) |grad N|^2 - a N^(a-1) LN]`.
pub fn laplacian_weight(alpha: f64, s: &MetivierStructure, p: &GroupPoint) -> Result<f64> {
    check_alpha(alpha)?;
    s.check_point(p)?;
    require_nonidentity(p)?;
    let n = kaplan_norm(s, p);
    let g2 = grad_norm_sq_unchecked(s, p);
    let ln = sub_laplacian_norm_unchecked(s, p);
    let w = (-n.powf(alpha)).exp();
    let bracket = -alpha * alpha * n.powf(2.0 * alpha - 2.0) * g2 + alpha * (alpha - 1.0) * n.powf(alpha - 2.0) * g2
        - alpha * n.powf(alpha - 1.0) * ln;
    Ok(w * bracket)
}

/// `V_alpha` from the expanded ground-state formula.
pub fn potential_value(alpha: f64, s: &MetivierStructure, p: &GroupPoint) -> Result<f64> {
    check_alpha(alpha)?;
    s.check_point(p)?;
    require_nonidentity(p)?;
    Ok(potential_unchecked(alpha, s, p))
}

pub(crate) fn potential_unchecked(alpha: f64, s: &MetivierStructure, p: &GroupPoint) -> f64 {
    if p.x.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    let n = kaplan_norm(s, p);
    let g2 = grad_norm_sq_unchecked(s, p);
    let ln = sub_laplacian_norm_unchecked(s, p);
    0.25 * alpha * alpha * n.powf(2.0 * alpha - 2.0) * g2 - 0.5 * alpha * (alpha - 1.0) * n.powf(alpha - 2.0) * g2
        + 0.5 * alpha * n.powf(alpha - 1.0) * ln
}

/// `V = -1/4 |grad w|^2 / w^2 - 1/2 Lw / w`, evaluated from [`grad_weight`]
/// and [`laplacian_weight`]. Loses accuracy once `w` underflows.
pub fn potential_from_weight(alpha: f64, s: &MetivierStructure, p: &GroupPoint) -> Result<f64> {
    let w = crate::norm::weight(alpha, s, p)?;
    let gw2: f64 = grad_weight(alpha, s, p)?.iter().map(|v| v * v).sum();
    let lw = laplacian_weight(alpha, s, p)?;
    Ok(-0.25 * gw2 / (w * w) - 0.5 * lw / w)
}

/// H-type closed form `(a^2/4) N^(2a-4) |x|^2 - (a/2)(Q+a-2) N^(a-4) |x|^2`.
pub fn potential_htype(alpha: f64, s: &MetivierStructure, p: &GroupPoint) -> Result<f64> {
    check_alpha(alpha)?;
    s.check_point(p)?;
    require_nonidentity(p)?;
    let n = kaplan_norm(s, p);
    let x2 = p.x_norm_sq();
    let q = homogeneous_dimension(s) as f64;
    Ok(0.25 * alpha * alpha * n.powf(2.0 * alpha - 4.0) * x2 - 0.5 * alpha * (q + alpha - 2.0) * n.powf(alpha - 4.0) * x2)
}

/// Constants of the two-sided bound
/// `N^(2a-4)|x|^2 (c_a1 - c_a2/N^a) <= V_alpha <= N^(2a-4)|x|^2 (c_a3 - c_a4/N^a)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialConstants {
    pub c0: f64,
    #[serde(rename = "C0")]
    pub big_c0: f64,
    pub c: f64,
    #[serde(rename = "C")]
    pub big_c: f64,
    pub c_a1: f64,
    pub c_a2: f64,
    pub c_a3: f64,
    pub c_a4: f64,
    pub alpha: f64,
    #[serde(rename = "Q")]
    pub q: usize,
}

impl PotentialConstants {
    pub fn lower_bound(&self, s: &MetivierStructure, p: &GroupPoint) -> f64 {
        let (a, b) = self.radial_factors(s, p);
        a * self.c_a1 - b * self.c_a2
    }

    pub fn upper_bound(&self, s: &MetivierStructure, p: &GroupPoint) -> f64 {
        let (a, b) = self.radial_factors(s, p);
        a * self.c_a3 - b * self.c_a4
    }

    /// `(N^(2a-4)|x|^2, N^(a-4)|x|^2)`, zero on `x = 0`.
    fn radial_factors(&self, s: &MetivierStructure, p: &GroupPoint) -> (f64, f64) {
        let x2 = p.x_norm_sq();
        if x2 == 0.0 {
            return (0.0, 0.0);
        }
        let n = kaplan_norm(s, p);
        (n.powf(2.0 * self.alpha - 4.0) * x2, n.powf(self.alpha - 4.0) * x2)
    }

    /// Lower bound in the `(N, u = |x|^2)` variables.
    pub fn lower_bound_nu(&self, n: f64, u: f64) -> f64 {
        u * (self.c_a1 * n.powf(2.0 * self.alpha - 4.0) - self.c_a2 * n.powf(self.alpha - 4.0))
    }

    /// Infimum over `G` of the lower bound, using `|x| <= N`.
    ///
    /// `None` when `alpha < 2` (the bound is unbounded below near the origin).
    pub fn analytic_floor(&self) -> Option<f64> {
        let a = self.alpha;
        if a < 2.0 {
            return None;
        }
        if a == 2.0 {
            // c_a1 N^2 - c_a2, approached as N -> 0
            return Some(-self.c_a2);
        }
        let n_star = ((a - 2.0) * self.c_a2 / ((2.0 * a - 2.0) * self.c_a1)).powf(1.0 / a);
        Some(-n_star.powf(a - 2.0) * self.c_a2 * a / (2.0 * a - 2.0))
    }
}

/// Sandwich constants with `c = min(c0, 1)`, `C = max(C0, 1)`. H-type
/// structures use the exact values `c0 = C0 = 1`.
pub fn potential_bounds(alpha: f64, est: &ConditionEstimate, s: &MetivierStructure) -> Result<PotentialConstants> {
    check_alpha(alpha)?;
    let (c0, big_c0) = if s.is_h_type() { (1.0, 1.0) } else { (est.c0_min, est.c0_max) };
    if !(c0 > 1e-12) {
        return Err(Error::NotMetivier(format!("sampled c0 = {c0:e}")));
    }
    if big_c0 < c0 {
        return Err(invalid("est", format!("C0 = {big_c0} is below c0 = {c0}")));
    }
    let c = c0.min(1.0);
    let big_c = big_c0.max(1.0);
    let n = s.n() as f64;
    let m = s.m() as f64;
    let a2 = alpha * alpha;
    Ok(PotentialConstants {
        c0,
        big_c0,
        c,
        big_c,
        c_a1: c * a2 / 4.0,
        c_a2: big_c * a2 / 2.0 - alpha / 2.0 * (4.0 * c - 2.0 * n - 2.0 - 2.0 * m * big_c0),
        c_a3: big_c * a2 / 4.0,
        c_a4: c * a2 / 2.0 - alpha / 2.0 * (4.0 * big_c - 2.0 * n - 2.0 - 2.0 * m * c0),
        alpha,
        q: homogeneous_dimension(s),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichViolation {
    pub index: usize,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// Negative amount by which the violated bound is exceeded.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub points: usize,
    pub violations: Vec<SandwichViolation>,
    /// Largest `(V - lower) / scale` over the points.
    pub max_lower_gap: f64,
    /// Largest `(upper - V) / scale` over the points.
    pub max_upper_gap: f64,
    pub constants: PotentialConstants,
}

impl SandwichReport {
    /// Both bounds hold with equality to relative tolerance `tol`.
    pub fn is_tight(&self, tol: f64) -> bool {
        self.max_lower_gap <= tol && self.max_upper_gap <= tol
    }

    /// Some point separates `V` from one of the bounds by more than `tol`.
    pub fn is_strict_somewhere(&self, tol: f64) -> bool {
        self.max_lower_gap > tol || self.max_upper_gap > tol
    }
}

/// Relative slack allowed before a point counts as a violation.
pub const SANDWICH_TOL: f64 = 1e-12;

/// Checks the two-sided bound at every point. Gaps are measured relative to
/// `max(1, |individual terms|)` so that they are meaningful near the origin
/// and far out alike.
pub fn check_sandwich(
    alpha: f64,
    s: &MetivierStructure,
    constants: &PotentialConstants,
    points: &[GroupPoint],
) -> Result<SandwichReport> {
    check_alpha(alpha)?;
    for p in points {
        s.check_point(p)?;
        require_nonidentity(p)?;
    }
    let per_point: Vec<(f64, f64, f64, f64)> = points
        .par_iter()
        .map(|p| {
            let v = potential_unchecked(alpha, s, p);
            let lo = constants.lower_bound(s, p);
            let hi = constants.upper_bound(s, p);
            let (a, b) = constants.radial_factors(s, p);
            let scale = (a * (constants.c_a1 + constants.c_a3) + b * (constants.c_a2.abs() + constants.c_a4.abs()))
                .max(1.0);
            (v, lo, hi, scale)
        })
        .collect();
    let mut violations = Vec::new();
    let mut max_lower_gap = 0.0_f64;
    let mut max_upper_gap = 0.0_f64;
    for (index, &(value, lower, upper, scale)) in per_point.iter().enumerate() {
        let gl = (value - lower) / scale;
        let gu = (upper - value) / scale;
        max_lower_gap = max_lower_gap.max(gl);
        max_upper_gap = max_upper_gap.max(gu);
        if gl < -SANDWICH_TOL || gu < -SANDWICH_TOL {
            violations.push(SandwichViolation { index, value, lower, upper, margin: gl.min(gu) * scale });
        }
    }
    Ok(SandwichReport { points: points.len(), violations, max_lower_gap, max_upper_gap, constants: *constants })
}

/// Points for probing a function of the group on the norm spheres `N = rho`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellSampler {
    /// Shell radii (values of `N`).
    pub radii: Vec<f64>,
    pub per_shell: usize,
    pub seed: u64,
    /// Running minima below this are reported as unbounded.
    pub sentinel: f64,
}

impl ShellSampler {
    /// Radii `10^lo, ..., 10^hi` with `per_decade` shells per decade.
    pub fn graded(lo: i32, hi: i32, per_decade: usize, per_shell: usize, seed: u64) -> Self {
        let steps = ((hi - lo) as usize) * per_decade;
        let radii = (0..=steps)
            .map(|i| 10f64.powf(lo as f64 + i as f64 / per_decade as f64))
            .collect();
        Self { radii, per_shell, seed, sentinel: -1e6 }
    }

    /// Points with `N = rho`: the x-axis point, the t-axis point, the unit-x
    /// point with maximal `|x|` relative to `N`, and `per_shell` random points.
    pub fn shell(&self, s: &MetivierStructure, index: usize) -> Vec<GroupPoint> {
        shell_points(s, self.radii[index], self.per_shell, self.seed, index as u64)
    }
}

pub(crate) fn shell_points(s: &MetivierStructure, rho: f64, count: usize, seed: u64, stream: u64) -> Vec<GroupPoint> {
    let mut pts = Vec::with_capacity(count + 4);
    let mut e1 = vec![0.0; s.dim_x()];
    e1[0] = 1.0;
    pts.push(dilate_unchecked(rho, &GroupPoint::new(&e1, &vec![0.0; s.m()])));
    let mut u1 = vec![0.0; s.m()];
    u1[0] = 0.5;
    pts.push(dilate_unchecked(rho, &GroupPoint::new(&vec![0.0; s.dim_x()], &u1)));
    // |x|^4 = 1/2, 16|t|^2 = 1/2
    let xs = 0.5f64.powf(0.25);
    let mut xm = vec![0.0; s.dim_x()];
    xm[0] = xs;
    let mut tm = vec![0.0; s.m()];
    tm[0] = 0.5f64.sqrt() / 4.0;
    pts.push(dilate_unchecked(rho, &GroupPoint::new(&xm, &tm)));
    let mut rng = sampling::rng(seed, stream);
    for _ in 0..count {
        pts.push(dilate_unchecked(rho, &unit_sphere_point(s, &mut rng)));
    }
    pts
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfEstimate {
    pub alpha: f64,
    pub sampled_min: f64,
    pub argmin: GroupPoint,
    /// `(rho, min of V on the shell N = rho)`.
    pub shell_minima: Vec<(f64, f64)>,
    /// Infimum of the lower sandwich bound, when finite.
    pub analytic_floor: Option<f64>,
    pub unbounded_below: bool,
}

/// Sampled infimum of `V_alpha` over a dilation-graded cloud.
///
/// Unboundedness is flagged when the minimum crosses the sentinel or when
/// the shell minima on the innermost decades keep decreasing with a log-log
/// rate steeper than `-0.05` as `N -> 0`.
pub fn essential_inf_estimate(
    alpha: f64,
    s: &MetivierStructure,
    constants: Option<&PotentialConstants>,
    sampler: &ShellSampler,
) -> Result<InfEstimate> {
    check_alpha(alpha)?;
    if sampler.radii.is_empty() || sampler.radii.iter().any(|r| !(*r > 0.0)) {
        return Err(invalid("sampler", "radii must be positive and non-empty"));
    }
    let shells: Vec<(f64, f64, GroupPoint)> = (0..sampler.radii.len())
        .into_par_iter()
        .map(|i| {
            let pts = sampler.shell(s, i);
            let (v, p) = pts
                .into_iter()
                .map(|p| (potential_unchecked(alpha, s, &p), p))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .expect("shell is non-empty");
            (sampler.radii[i], v, p)
        })
        .collect();
    let (sampled_min, argmin) = shells
        .iter()
        .map(|(_, v, p)| (*v, p.clone()))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one shell");

    let mut sorted: Vec<(f64, f64)> = shells.iter().map(|(r, v, _)| (*r, *v)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let inner: Vec<(f64, f64)> = sorted.iter().copied().filter(|(r, _)| *r <= 1e-2).collect();
    let diverging = inner.len() >= 3 && inner.iter().all(|(_, v)| *v < 0.0) && {
        let xs: Vec<f64> = inner.iter().map(|(r, _)| r.ln()).collect();
        let ys: Vec<f64> = inner.iter().map(|(_, v)| (-v).ln()).collect();
        let slope = least_squares_slope(&xs, &ys);
        let monotone = inner.windows(2).all(|w| w[0].1 < w[1].1);
        monotone && slope < -0.05
    };
    Ok(InfEstimate {
        alpha,
        sampled_min,
        argmin,
        shell_minima: sorted,
        analytic_floor: constants.and_then(|c| c.analytic_floor()),
        unbounded_below: sampled_min < sampler.sentinel || diverging,
    })
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Numerical probe of the self-adjointness hypotheses for `w_alpha`:
/// (a) `grad_H w in L^inf_loc` and `L w in L^Q_loc`;
/// (b) `|grad_H w| / ((1 + N) w) in L^inf`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub alpha: f64,
    /// `(rho, sup |grad_H w|)` on shrinking shells.
    pub local_grad_sup: Vec<(f64, f64)>,
    pub local_grad_slope: f64,
    pub local_grad_bounded: bool,
    /// `(rho, sup |L w|)` on shrinking shells.
    pub local_lw_sup: Vec<(f64, f64)>,
    /// Decay rate of `sup_shell |Lw|^Q * rho^Q` as `rho -> 0`.
    pub lw_shell_exponent: f64,
    pub lw_in_lq_loc: bool,
    /// `(rho, sup |grad_H w| / ((1 + N) w))` over all scales.
    pub global_ratio_sup: Vec<(f64, f64)>,
    pub global_ratio_bounded: bool,
    pub condition_a: bool,
    pub condition_b: bool,
}

pub fn admissibility_report(alpha: f64, s: &MetivierStructure, seed: u64) -> Result<AdmissibilityReport> {
    check_alpha(alpha)?;
    let q = homogeneous_dimension(s) as f64;
    let per_shell = 64;
    let sup_on_shell = |rho: f64, stream: u64, f: &(dyn Fn(&GroupPoint) -> f64 + Sync)| -> f64 {
        shell_points(s, rho, per_shell, seed, stream)
            .iter()
            .map(f)
            .fold(0.0, f64::max)
    };
    // |grad_H w| = alpha w N^(a-1) |grad N|, written through N and |grad N| to
    // avoid 0 * inf near the origin.
    let grad_mag = |p: &GroupPoint| {
        let n = kaplan_norm(s, p);
        alpha * (-n.powf(alpha)).exp() * n.powf(alpha - 1.0) * grad_norm_sq_unchecked(s, p).sqrt()
    };
    let lw_mag = |p: &GroupPoint| {
        let n = kaplan_norm(s, p);
        let g2 = grad_norm_sq_unchecked(s, p);
        let ln = sub_laplacian_norm_unchecked(s, p);
        let br = -alpha * alpha * n.powf(2.0 * alpha - 2.0) * g2 + alpha * (alpha - 1.0) * n.powf(alpha - 2.0) * g2
            - alpha * n.powf(alpha - 1.0) * ln;
        ((-n.powf(alpha)).exp() * br).abs()
    };
    let ratio = |p: &GroupPoint| {
        let n = kaplan_norm(s, p);
        alpha * n.powf(alpha - 1.0) * grad_norm_sq_unchecked(s, p).sqrt() / (1.0 + n)
    };

    let local_radii: Vec<f64> = (0..=6).map(|i| 10f64.powi(-i)).collect();
    let local_grad_sup: Vec<(f64, f64)> =
        local_radii.iter().enumerate().map(|(i, &r)| (r, sup_on_shell(r, i as u64, &grad_mag))).collect();
    let local_lw_sup: Vec<(f64, f64)> =
        local_radii.iter().enumerate().map(|(i, &r)| (r, sup_on_shell(r, i as u64, &lw_mag))).collect();
    let global_radii: Vec<f64> = (-3..=3).map(|i| 10f64.powi(i)).collect();
    let global_ratio_sup: Vec<(f64, f64)> =
        global_radii.iter().enumerate().map(|(i, &r)| (r, sup_on_shell(r, 100 + i as u64, &ratio))).collect();

    let tail = |v: &[(f64, f64)], from_small: bool| -> f64 {
        // log-log slope over the three shells at the chosen end
        let pick: Vec<(f64, f64)> = if from_small { v[v.len() - 3..].to_vec() } else { v[..3].to_vec() };
        let xs: Vec<f64> = pick.iter().map(|(r, _)| r.ln()).collect();
        let ys: Vec<f64> = pick.iter().map(|(_, y)| y.max(1e-300).ln()).collect();
        least_squares_slope(&xs, &ys)
    };
    let local_grad_slope = tail(&local_grad_sup, true);
    let local_grad_bounded = local_grad_slope > -0.1;
    // sup|Lw|^Q rho^Q on the shell at rho scales like rho^(Q * (slope + 1))
    let lw_shell_exponent = q * (tail(&local_lw_sup, true) + 1.0);
    let lw_in_lq_loc = lw_shell_exponent > 0.1;
    let small_end = tail(&global_ratio_sup, false);
    let large_end = tail(&global_ratio_sup, true);
    let global_ratio_bounded = small_end > -0.1 && large_end < 0.1;
    Ok(AdmissibilityReport {
        alpha,
        local_grad_sup,
        local_grad_slope,
        local_grad_bounded,
        local_lw_sup,
        lw_shell_exponent,
        lw_in_lq_loc,
        global_ratio_sup,
        global_ratio_bounded,
        condition_a: local_grad_bounded && lw_in_lq_loc,
        condition_b: local_grad_bounded && global_ratio_bounded,
    })
}

/// Uniform random points in the box `[-hx, hx]^{2n} x [-ht, ht]^m`, skipping the identity.
pub fn random_box_points(s: &MetivierStructure, count: usize, hx: f64, ht: f64, seed: u64) -> Vec<GroupPoint> {
    let mut rng = sampling::rng(seed, 0);
    (0..count)
        .map(|_| loop {
            let p = GroupPoint {
                x: (0..s.dim_x()).map(|_| rng.random_range(-hx..=hx)).collect(),
                t: (0..s.m()).map(|_| rng.random_range(-ht..=ht)).collect(),
            };
            if !p.is_identity() {
                break p;
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{make_block_diagonal, make_heisenberg, verify_metivier};

    fn pt(x: &[f64], t: &[f64]) -> GroupPoint {
        GroupPoint::new(x, t)
    }

    #[test]
    fn grad_norm_sq_examples() {
        let h = make_heisenberg();
        assert!((grad_norm_sq(&h, &pt(&[1.0, 0.0], &[0.0])).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(grad_norm_sq(&h, &pt(&[0.0, 0.0], &[2.0])).unwrap(), 0.0);
        let v = grad_norm_sq(&h, &pt(&[1.0, 0.0], &[1.0])).unwrap();
        assert!((v - 1.0 / 17f64.sqrt()).abs() < 1e-15);
        assert!(matches!(grad_norm_sq(&h, &h.identity()), Err(Error::IdentityPoint)));
    }

    #[test]
    fn grad_norm_vector_matches_square() {
        let s = make_block_diagonal(&[1.0, 2.0]).unwrap();
        for p in random_box_points(&s, 200, 2.0, 2.0, 4) {
            let g: f64 = grad_norm(&s, &p).unwrap().iter().map(|v| v * v).sum();
            let g2 = grad_norm_sq(&s, &p).unwrap();
            assert!((g - g2).abs() <= 1e-13 * g2.max(1.0));
        }
    }

    #[test]
    fn sub_laplacian_norm_examples() {
        let h = make_heisenberg();
        assert!((sub_laplacian_norm(&h, &pt(&[1.0, 0.0], &[0.0])).unwrap() + 3.0).abs() < 1e-14);
        assert_eq!(sub_laplacian_norm(&h, &pt(&[0.0, 0.0], &[0.3])).unwrap(), 0.0);
        for p in random_box_points(&h, 1000, 3.0, 3.0, 2) {
            let n = kaplan_norm(&h, &p);
            let expect = -3.0 * p.x_norm_sq() / (n * n * n);
            let got = sub_laplacian_norm(&h, &p).unwrap();
            assert!((got - expect).abs() <= 1e-12 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn weight_derivative_examples() {
        let h = make_heisenberg();
        let p = pt(&[1.0, 0.0], &[0.0]);
        let g = grad_weight(2.0, &h, &p).unwrap();
        let mag = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((mag - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!(grad_weight(2.0, &h, &pt(&[0.0, 0.0], &[1.0])).unwrap().iter().all(|v| *v == 0.0));
        // bracket -4 + 2 - 2 * (-3) = 4
        let lw = laplacian_weight(2.0, &h, &p).unwrap();
        assert!((lw - 4.0 * (-1.0f64).exp()).abs() < 1e-14);
        assert_eq!(laplacian_weight(3.0, &h, &pt(&[0.0, 0.0], &[1.0])).unwrap(), 0.0);
    }

    #[test]
    fn potential_examples() {
        let h = make_heisenberg();
        let p = pt(&[1.0, 0.0], &[0.0]);
        assert!((potential_value(2.0, &h, &p).unwrap() + 3.0).abs() < 1e-14);
        assert!((potential_value(4.0, &h, &p).unwrap() + 8.0).abs() < 1e-14);
        assert_eq!(potential_value(3.0, &h, &pt(&[0.0, 0.0], &[1.0])).unwrap(), 0.0);
        assert!(potential_value(0.0, &h, &p).is_err());
    }

    #[test]
    fn three_routes_to_v_agree() {
        let s = make_block_diagonal(&[1.0, 2.0]).unwrap();
        for alpha in [1.0, 2.0, 3.0] {
            for p in random_box_points(&s, 200, 1.0, 0.5, 5) {
                let a = potential_value(alpha, &s, &p).unwrap();
                let b = potential_from_weight(alpha, &s, &p).unwrap();
                assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{a} vs {b}");
            }
        }
        let h = make_heisenberg();
        for alpha in [0.5, 2.5] {
            for p in random_box_points(&h, 500, 4.0, 4.0, 6) {
                let a = potential_value(alpha, &h, &p).unwrap();
                let c = potential_htype(alpha, &h, &p).unwrap();
                assert!((a - c).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn bounds_constants_examples() {
        let h = make_heisenberg();
        let est = verify_metivier(&h, 100, 0).unwrap();
        let k3 = potential_bounds(3.0, &est, &h).unwrap();
        assert!((k3.c_a1 - 2.25).abs() < 1e-15 && (k3.c_a2 - 7.5).abs() < 1e-14);
        assert_eq!(k3.c_a1, k3.c_a3);
        assert_eq!(k3.c_a2, k3.c_a4);
        let k2 = potential_bounds(2.0, &est, &h).unwrap();
        assert!((k2.c_a1 - 1.0).abs() < 1e-15 && (k2.c_a2 - 4.0).abs() < 1e-14);
        assert_eq!(k2.q, 4);
    }

    #[test]
    fn bounds_reject_degenerate() {
        let s = make_block_diagonal(&[1.0, 0.0]).unwrap();
        let est = verify_metivier(&s, 1000, 0).unwrap();
        assert!(matches!(potential_bounds(2.0, &est, &s), Err(Error::NotMetivier(_))));
    }

    #[test]
    fn analytic_floor_values() {
        let h = make_heisenberg();
        let est = verify_metivier(&h, 10, 0).unwrap();
        let f = |a: f64| potential_bounds(a, &est, &h).unwrap().analytic_floor();
        assert_eq!(f(2.0), Some(-4.0));
        assert!((f(4.0).unwrap() + 8.0).abs() < 1e-12);
        assert!(f(1.5).is_none());
        // grid search over (N, u) with u <= N^2
        for a in [2.5, 3.0, 4.0, 6.0] {
            let k = potential_bounds(a, &est, &h).unwrap();
            let mut best = f64::INFINITY;
            for i in 1..40_000 {
                let n = i as f64 * 1e-4;
                best = best.min(k.lower_bound_nu(n, n * n));
            }
            let fl = k.analytic_floor().unwrap();
            assert!(fl <= best + 1e-12 && best - fl < 1e-5, "{a}: {fl} vs {best}");
        }
    }

    #[test]
    fn sandwich_tight_on_heisenberg_and_strict_elsewhere() {
        let h = make_heisenberg();
        let est = verify_metivier(&h, 100, 0).unwrap();
        let pts = random_box_points(&h, 2000, 3.0, 3.0, 8);
        for a in [1.0, 2.0, 3.5] {
            let k = potential_bounds(a, &est, &h).unwrap();
            let r = check_sandwich(a, &h, &k, &pts).unwrap();
            assert!(r.violations.is_empty());
            assert!(r.is_tight(1e-10), "{} {}", r.max_lower_gap, r.max_upper_gap);
        }
        let s = make_block_diagonal(&[1.0, 2.0]).unwrap();
        let est = verify_metivier(&s, 100, 0).unwrap();
        let pts = random_box_points(&s, 2000, 3.0, 3.0, 8);
        let k = potential_bounds(3.0, &est, &s).unwrap();
        let r = check_sandwich(3.0, &s, &k, &pts).unwrap();
        assert!(r.violations.is_empty());
        assert!(r.is_strict_somewhere(1e-6));
    }

    #[test]
    fn sandwich_at_x_zero() {
        let h = make_heisenberg();
        let est = verify_metivier(&h, 10, 0).unwrap();
        let k = potential_bounds(2.0, &est, &h).unwrap();
        let p = pt(&[0.0, 0.0], &[1.5]);
        assert_eq!(k.lower_bound(&h, &p), 0.0);
        assert_eq!(k.upper_bound(&h, &p), 0.0);
        assert!(check_sandwich(2.0, &h, &k, &[p]).unwrap().violations.is_empty());
    }

    #[test]
    fn essential_inf_classification() {
        let h = make_heisenberg();
        let est = verify_metivier(&h, 10, 0).unwrap();
        let sampler = ShellSampler::graded(-4, 2, 4, 64, 1);
        let k2 = potential_bounds(2.0, &est, &h).unwrap();
        let e2 = essential_inf_estimate(2.0, &h, Some(&k2), &sampler).unwrap();
        assert!(!e2.unbounded_below);
        assert!(e2.sampled_min >= -4.0 && e2.sampled_min < -3.99);
        let k4 = potential_bounds(4.0, &est, &h).unwrap();
        let e4 = essential_inf_estimate(4.0, &h, Some(&k4), &sampler).unwrap();
        assert!(!e4.unbounded_below && e4.sampled_min >= -12.0 && e4.sampled_min >= -8.0 - 1e-12);
        let e15 = essential_inf_estimate(1.5, &h, None, &sampler).unwrap();
        assert!(e15.unbounded_below);
        assert!(e15.analytic_floor.is_none());
    }

    #[test]
    fn admissibility_classification() {
        let h = make_heisenberg();
        let r1 = admissibility_report(1.0, &h, 0).unwrap();
        assert!(r1.local_grad_bounded && r1.global_ratio_bounded && r1.condition_b);
        assert!(r1.local_grad_sup.iter().all(|(_, v)| *v <= 1.0 + 1e-12));
        let r3 = admissibility_report(3.0, &h, 0).unwrap();
        assert!(r3.condition_a);
        let rh = admissibility_report(0.5, &h, 0).unwrap();
        assert!(!rh.local_grad_bounded && !rh.condition_a && !rh.condition_b);
    }
}
