//! Sublevel sets `Omega_{alpha,M} = {V_alpha <= M}`: the cylinder bound,
//! Monte Carlo measures of `Omega ∩ B(y, r)`, the thinness integral and
//! the `|t|`-scaling of ball intersections.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, Error, Result};
use crate::group::{CVec, ConditionEstimate, GroupPoint, HVec, MetivierStructure};
use crate::norm::{check_alpha, estimate_gamma, kaplan_norm, quasi_distance};
use crate::potential::{least_squares_slope, potential_bounds, potential_unchecked, PotentialConstants};
use crate::sampling::{self, chunk_ranges, map_chunks, pairwise_sum, unit_ball_volume};

const SAMPLES_PER_CHUNK: usize = 8192;
/// Pairs used for the quasi-triangle constant inside the thinness geometry.
pub const GAMMA_SAMPLES: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SublevelSpec {
    pub alpha: f64,
    #[serde(rename = "M")]
    pub m_level: f64,
}

impl SublevelSpec {
    pub fn new(alpha: f64, m_level: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if m_level.is_nan() {
            return Err(invalid("M", "level is NaN"));
        }
        Ok(Self { alpha, m_level })
    }
}

/// `V_alpha(p) <= M`. At the identity `V` is extended by `0` for `alpha >= 2`;
/// for `alpha < 2` it is singular there and the identity is rejected.
pub fn in_sublevel(spec: &SublevelSpec, s: &MetivierStructure, p: &GroupPoint) -> Result<bool> {
    s.check_point(p)?;
    if p.is_identity() {
        if spec.alpha < 2.0 {
            return Err(Error::IdentityPoint);
        }
        return Ok(0.0 <= spec.m_level);
    }
    Ok(potential_unchecked(spec.alpha, s, p) <= spec.m_level)
}

fn member(spec: &SublevelSpec, s: &MetivierStructure, p: &GroupPoint) -> bool {
    if p.is_identity() {
        spec.alpha < 2.0 || 0.0 <= spec.m_level
    } else {
        potential_unchecked(spec.alpha, s, p) <= spec.m_level
    }
}

/// `h(N) = c_a1 N^(2a-4) - c_a2 N^(a-4)`, so that the lower bound is `|x|^2 h(N)`.
fn radial_h(k: &PotentialConstants, n: f64) -> f64 {
    k.c_a1 * n.powf(2.0 * k.alpha - 4.0) - k.c_a2 * n.powf(k.alpha - 4.0)
}

/// Location of the minimum of `h` on `(0, inf)`; zero when `h` is increasing.
fn h_argmin(k: &PotentialConstants) -> f64 {
    let a = k.alpha;
    if a <= 4.0 {
        0.0
    } else {
        ((a - 4.0) * k.c_a2 / ((2.0 * a - 4.0) * k.c_a1)).powf(1.0 / a)
    }
}

/// `min_{N >= n_min} h(N)`, or `-inf` if `h` is unbounded below there.
fn h_min_beyond(k: &PotentialConstants, n_min: f64) -> f64 {
    let n = n_min.max(h_argmin(k));
    if n == 0.0 {
        return if k.alpha == 4.0 { -k.c_a2 } else { f64::NEG_INFINITY };
    }
    radial_h(k, n)
}

/// `F(u) = u^2 min_{N >= u} h(N)`: the least value the lower bound can take with `|x| = u`.
fn cylinder_profile(k: &PotentialConstants, u: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    u * u * h_min_beyond(k, u)
}

/// Radius `c(alpha, M)` with `|x| <= c` on `Omega_{alpha,M}`, from the lower
/// sandwich bound. Returns `0` when the bound excludes every point.
pub fn cylinder_radius(spec: &SublevelSpec, s: &MetivierStructure, est: &ConditionEstimate) -> Result<f64> {
    if spec.alpha <= 2.0 {
        return Err(invalid("alpha", format!("the cylinder bound needs alpha > 2, got {}", spec.alpha)));
    }
    let k = potential_bounds(spec.alpha, est, s)?;
    Ok(cylinder_radius_from(&k, spec.m_level))
}

pub(crate) fn cylinder_radius_from(k: &PotentialConstants, m_level: f64) -> f64 {
    let a = k.alpha;
    let m = m_level;
    // F is increasing beyond u0.
    let r_star = ((a - 2.0) * k.c_a2 / ((2.0 * a - 2.0) * k.c_a1)).powf(1.0 / a);
    let u0 = r_star.max(h_argmin(k));
    let f = |u: f64| cylinder_profile(k, u);
    let root = |mut lo: f64, mut hi: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) <= m {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi * (1.0 + 1e-12)
    };
    if f(u0) <= m {
        let mut hi = u0.max(1.0);
        while f(hi) <= m {
            hi *= 2.0;
        }
        return root(u0, hi);
    }
    // The sublevel lies below u0, if anywhere.
    let steps = 20_000;
    let last = (0..=steps).rev().map(|i| u0 * i as f64 / steps as f64).find(|&u| u > 0.0 && f(u) <= m);
    match last {
        Some(u) => root(u, (u + u0 / steps as f64).min(u0)),
        None => 0.0,
    }
}

/// Monte Carlo measure with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub hits: u64,
    /// Measure of the sampling region.
    pub region_volume: f64,
}

/// Precomputed bounds shared by the volume estimators.
#[derive(Clone, Debug)]
struct Geometry {
    spec: SublevelSpec,
    constants: Option<PotentialConstants>,
    /// `c(alpha, M)`; infinite when unavailable.
    cyl: f64,
}

impl Geometry {
    fn new(spec: &SublevelSpec, s: &MetivierStructure, est: Option<&ConditionEstimate>) -> Result<Self> {
        let constants = match est {
            Some(e) => Some(potential_bounds(spec.alpha, e, s)?),
            None => None,
        };
        let cyl = match &constants {
            Some(k) if spec.alpha > 2.0 => cylinder_radius_from(k, spec.m_level),
            _ => f64::INFINITY,
        };
        Ok(Self { spec: *spec, constants, cyl })
    }

    /// Sampling region for `B(center, r)`: `(x centre, x radius, t centre, t radius)`.
    /// A zero x radius means the intersection is empty.
    fn region(&self, s: &MetivierStructure, center: &GroupPoint, r: f64) -> (HVec, f64, CVec, f64) {
        let jx2: f64 = s.sum_jk_sq(&center.x);
        let t_half = r * r / 4.0 + 0.5 * jx2.sqrt() * r;
        let mut x_center = center.x.clone();
        let mut x_rad = r;
        let mut bound = self.cyl;
        if let (Some(k), true) = (&self.constants, self.spec.alpha > 2.0) {
            let t0 = center.t.iter().map(|v| v * v).sum::<f64>().sqrt();
            let n_min = if t0 > t_half { 2.0 * (t0 - t_half).sqrt() } else { 0.0 };
            let hmin = h_min_beyond(k, n_min);
            if hmin > 0.0 {
                if self.spec.m_level < 0.0 {
                    bound = 0.0;
                } else {
                    bound = bound.min((self.spec.m_level / hmin).sqrt());
                }
            }
        }
        if bound < x_rad {
            x_rad = bound;
            x_center = smallvec::smallvec![0.0; s.dim_x()];
        }
        (x_center, x_rad, center.t.clone(), t_half)
    }
}

fn sample_in(rng: &mut ChaCha8Rng, xc: &[f64], xr: f64, tc: &[f64], tr: f64) -> GroupPoint {
    let bx = sampling::unit_ball_point(rng, xc.len());
    let bt = sampling::unit_ball_point(rng, tc.len());
    GroupPoint {
        x: xc.iter().zip(&bx).map(|(c, b)| c + xr * b).collect(),
        t: tc.iter().zip(&bt).map(|(c, b)| c + tr * b).collect(),
    }
}

fn region_volume(s: &MetivierStructure, xr: f64, tr: f64) -> f64 {
    unit_ball_volume(s.dim_x()) * xr.powi(s.dim_x() as i32) * unit_ball_volume(s.m()) * tr.powi(s.m() as i32)
}

/// Hits of `Omega ∩ B(center, r)` among `n` uniform draws in the region.
fn intersection_hits(
    geom: &Geometry,
    s: &MetivierStructure,
    center: &GroupPoint,
    r: f64,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> (u64, f64) {
    let (xc, xr, tc, tr) = geom.region(s, center, r);
    if xr <= 0.0 {
        return (0, 0.0);
    }
    let mut hits = 0;
    for _ in 0..n {
        let p = sample_in(rng, &xc, xr, &tc, tr);
        if quasi_distance(s, center, &p) < r && member(&geom.spec, s, &p) {
            hits += 1;
        }
    }
    (hits, region_volume(s, xr, tr))
}

/// Monte Carlo estimate of `|Omega_{alpha,M} ∩ B(center, r)|`.
///
/// Samples are drawn uniformly in a region containing the intersection: the
/// ball's own bounding cylinder, narrowed in `x` by the cylinder radius and,
/// far out in `t`, by the lower sandwich bound. Pass `est = None` to use the
/// ball's bounding cylinder only.
pub fn ball_intersection_volume(
    spec: &SublevelSpec,
    s: &MetivierStructure,
    est: Option<&ConditionEstimate>,
    center: &GroupPoint,
    r: f64,
    n_samples: usize,
    seed: u64,
) -> Result<VolumeEstimate> {
    s.check_point(center)?;
    if !(r > 0.0) {
        return Err(invalid("r", format!("must be positive, got {r}")));
    }
    if n_samples == 0 {
        return Err(invalid("n_samples", "must be at least 1"));
    }
    let geom = Geometry::new(spec, s, est)?;
    let chunks = chunk_ranges(n_samples, SAMPLES_PER_CHUNK);
    let parts: Vec<(u64, f64)> = map_chunks(chunks.len(), |c| {
        let mut rng = sampling::rng(seed, c as u64);
        intersection_hits(&geom, s, center, r, chunks[c].1, &mut rng)
    });
    let hits: u64 = parts.iter().map(|p| p.0).sum();
    let vol = parts.first().map(|p| p.1).unwrap_or(0.0);
    let n = n_samples as f64;
    let frac = hits as f64 / n;
    Ok(VolumeEstimate {
        value: vol * frac,
        std_error: vol * (frac * (1.0 - frac) / n).sqrt(),
        samples: n_samples,
        hits,
        region_volume: vol,
    })
}

/// Haar measure of the unit Kaplan ball `{|x|^4 + 16|t|^2 < 1}`.
pub fn unit_ball_measure(s: &MetivierStructure) -> f64 {
    // int_{|x|<1} omega_m ((1 - |x|^4)^(1/2) / 4)^m dx, radial midpoint rule
    let d = s.dim_x();
    let m = s.m() as i32;
    let sphere = d as f64 * unit_ball_volume(d);
    let steps = 200_000;
    let h = 1.0 / steps as f64;
    let vals: Vec<f64> = (0..steps)
        .map(|i| {
            let rho = (i as f64 + 0.5) * h;
            sphere * rho.powi(d as i32 - 1) * ((1.0 - rho.powi(4)).sqrt() / 4.0).powi(m)
        })
        .collect();
    unit_ball_volume(s.m()) * pairwise_sum(&vals) * h
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinnessEstimate {
    pub ell: f64,
    pub r: f64,
    /// Estimate of `int_{Omega ∩ {|t| <= T}} |Omega ∩ B(y, r)|^ell dy`.
    pub value: f64,
    pub std_error: f64,
    pub outer_samples: usize,
    pub inner_samples: usize,
    pub outer_hits: u64,
    pub truncation_t: f64,
    /// Bound on the part with `|t| > T`; `None` when it diverges.
    pub tail_bound: Option<f64>,
    pub tail_finite: bool,
    /// `m / (n (alpha - 2))`; the tail is finite iff `ell` exceeds it.
    pub ell_threshold: f64,
    pub threshold_k: f64,
    pub cylinder_radius: f64,
    pub gamma_hat: f64,
    pub seed: u64,
}

/// Threshold `k` beyond which `c_a1 - c_a2 / N^alpha >= c_a1 / 2` on every
/// cylinder `C_R(0, t)`, `|t| > k`: `k = R^2 + (2 c_a2 / c_a1)^(2/alpha)`.
pub fn threshold_k(k: &PotentialConstants, big_r: f64) -> f64 {
    big_r * big_r + (2.0 * k.c_a2 / k.c_a1).powf(2.0 / k.alpha)
}

/// Bound on `int_{Omega, |t| > T} |Omega ∩ B(y, r)|^ell dy`.
///
/// Beyond `k` the lemma bound `|Omega ∩ B| <= A (|t| - R^2)^(-n(alpha-2))`
/// with `A = omega_m R^(2m) omega_{2n} (2M / c_a1)^n` applies; between `T`
/// and `k` the ball measure `|B(0, r)|` is used.
fn tail_bound(
    s: &MetivierStructure,
    k: &PotentialConstants,
    m_level: f64,
    cyl: f64,
    r: f64,
    ell: f64,
    big_r: f64,
    kk: f64,
    t_trunc: f64,
) -> Option<f64> {
    let n = s.n() as f64;
    let m = s.m();
    let p = ell * n * (k.alpha - 2.0);
    if p <= m as f64 {
        return None;
    }
    if cyl == 0.0 || m_level <= 0.0 {
        return Some(0.0);
    }
    let base = unit_ball_volume(s.dim_x()) * cyl.powi(s.dim_x() as i32);
    let sphere_m = m as f64 * unit_ball_volume(m);
    let a = unit_ball_volume(m) * big_r.powi(2 * m as i32) * unit_ball_volume(s.dim_x()) * (2.0 * m_level / k.c_a1).powf(n);
    let start = t_trunc.max(kk);
    // int_start^inf rho^(m-1) (rho - R^2)^(-p) d rho via rho = s + R^2
    let s0 = start - big_r * big_r;
    let r2 = big_r * big_r;
    let mut radial = 0.0;
    let mut binom = 1.0;
    for i in 0..m {
        radial += binom * r2.powi((m - 1 - i) as i32) * s0.powf(i as f64 + 1.0 - p) / (p - i as f64 - 1.0);
        binom = binom * (m - 1 - i) as f64 / (i + 1) as f64;
    }
    let mut tail = base * sphere_m * a.powf(ell) * radial;
    if t_trunc < kk {
        let ball = unit_ball_measure(s) * r.powi(crate::group::homogeneous_dimension(s) as i32);
        let shell = unit_ball_volume(m) * (kk.powi(m as i32) - t_trunc.powi(m as i32));
        tail += base * shell * ball.powf(ell);
    }
    Some(tail)
}

/// Geometry shared by the thinness routines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinnessGeometry {
    pub constants: PotentialConstants,
    pub cylinder_radius: f64,
    pub gamma_hat: f64,
    /// `R = gamma_hat (r + c)`.
    pub big_r: f64,
    pub threshold_k: f64,
}

pub fn thinness_geometry(
    spec: &SublevelSpec,
    s: &MetivierStructure,
    est: &ConditionEstimate,
    r: f64,
    seed: u64,
) -> Result<ThinnessGeometry> {
    if spec.alpha <= 2.0 {
        return Err(invalid("alpha", format!("thinness needs alpha > 2, got {}", spec.alpha)));
    }
    if !(r > 0.0) {
        return Err(invalid("r", format!("must be positive, got {r}")));
    }
    let constants = potential_bounds(spec.alpha, est, s)?;
    let cyl = cylinder_radius_from(&constants, spec.m_level);
    let gamma_hat = estimate_gamma(s, GAMMA_SAMPLES, seed)?.gamma_hat;
    let big_r = gamma_hat * (r + cyl);
    Ok(ThinnessGeometry {
        constants,
        cylinder_radius: cyl,
        gamma_hat,
        big_r,
        threshold_k: threshold_k(&constants, big_r),
    })
}

/// Parameters of [`thinness_integral`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinnessParams {
    pub r: f64,
    pub ell: f64,
    pub truncation_t: f64,
    pub outer_samples: usize,
    pub inner_samples: usize,
    pub seed: u64,
}

/// Monte Carlo estimate of the truncated thinness integral plus an analytic
/// tail bound.
///
/// Outer points are uniform in `{|x| <= c(alpha, M), |t| <= T}`; at each
/// outer point inside `Omega`, `|Omega ∩ B(y, r)|` is estimated from
/// `inner_samples` draws.
pub fn thinness_integral(
    spec: &SublevelSpec,
    s: &MetivierStructure,
    est: &ConditionEstimate,
    params: &ThinnessParams,
) -> Result<ThinnessEstimate> {
    let ThinnessParams { r, ell, truncation_t, outer_samples, inner_samples, seed } = *params;
    if !(ell > 0.0) {
        return Err(invalid("ell", format!("must be positive, got {ell}")));
    }
    if !(truncation_t > 0.0) {
        return Err(invalid("truncation", format!("must be positive, got {truncation_t}")));
    }
    if outer_samples == 0 || inner_samples == 0 {
        return Err(invalid("samples", "outer and inner sample counts must be positive"));
    }
    let g = thinness_geometry(spec, s, est, r, seed)?;
    let geom = Geometry::new(spec, s, Some(est))?;
    let n = s.n() as f64;
    let ell_threshold = s.m() as f64 / (n * (spec.alpha - 2.0));
    let tail = tail_bound(
        s,
        &g.constants,
        spec.m_level,
        g.cylinder_radius,
        r,
        ell,
        g.big_r,
        g.threshold_k,
        truncation_t,
    );
    let cyl = g.cylinder_radius;
    let outer_vol = region_volume(s, cyl, truncation_t);

    let (value, std_error, outer_hits) = if cyl == 0.0 {
        (0.0, 0.0, 0)
    } else {
        let zero_x: HVec = smallvec::smallvec![0.0; s.dim_x()];
        let zero_t: CVec = smallvec::smallvec![0.0; s.m()];
        let chunks = chunk_ranges(outer_samples, 1024);
        // per chunk: (sum f, sum f^2, hits)
        let parts: Vec<(f64, f64, u64)> = map_chunks(chunks.len(), |c| {
            let (start, len) = chunks[c];
            let mut rng = sampling::rng(seed, c as u64);
            let (mut s1, mut s2, mut hits) = (0.0, 0.0, 0u64);
            for i in start..start + len {
                let y = sample_in(&mut rng, &zero_x, cyl, &zero_t, truncation_t);
                if !member(spec, s, &y) {
                    continue;
                }
                hits += 1;
                let mut inner_rng = sampling::rng(seed ^ 0x5eed_0f_1a11e4, i as u64);
                let (h, vol) = intersection_hits(&geom, s, &y, r, inner_samples, &mut inner_rng);
                let f = (vol * h as f64 / inner_samples as f64).powf(ell);
                s1 += f;
                s2 += f * f;
            }
            (s1, s2, hits)
        });
        let s1 = pairwise_sum(&parts.iter().map(|p| p.0).collect::<Vec<_>>());
        let s2 = pairwise_sum(&parts.iter().map(|p| p.1).collect::<Vec<_>>());
        let hits: u64 = parts.iter().map(|p| p.2).sum();
        let nn = outer_samples as f64;
        let mean = s1 / nn;
        let var = (s2 / nn - mean * mean).max(0.0);
        (outer_vol * mean, outer_vol * (var / nn).sqrt(), hits)
    };

    Ok(ThinnessEstimate {
        ell,
        r,
        value,
        std_error,
        outer_samples,
        inner_samples,
        outer_hits,
        truncation_t,
        tail_bound: tail,
        tail_finite: tail.is_some(),
        ell_threshold,
        threshold_k: g.threshold_k,
        cylinder_radius: cyl,
        gamma_hat: g.gamma_hat,
        seed,
    })
}

/// Draws `count` members of `Omega` uniformly from the region
/// `{|x| <= x_radius, |t| <= t_half}` by rejection.
///
/// Fails when fewer than one draw in `10^6` is accepted.
pub fn sample_sublevel(
    spec: &SublevelSpec,
    s: &MetivierStructure,
    x_radius: f64,
    t_half: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<GroupPoint>> {
    let zero_x: HVec = smallvec::smallvec![0.0; s.dim_x()];
    let zero_t: CVec = smallvec::smallvec![0.0; s.m()];
    let mut rng = sampling::rng(seed, 0);
    let mut out = Vec::with_capacity(count);
    let mut attempts: u64 = 0;
    while out.len() < count {
        let p = sample_in(&mut rng, &zero_x, x_radius, &zero_t, t_half);
        attempts += 1;
        if !p.is_identity() && member(spec, s, &p) {
            out.push(p);
        }
        if attempts >= 1_000_000 && (out.len() as f64) < 1e-6 * attempts as f64 {
            return Err(invalid("region", format!("acceptance rate below 1e-6 after {attempts} draws")));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub t: f64,
    pub volume: VolumeEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Fitted exponent of `|Omega ∩ B((x0, t u_1), r)|` against `|t|`.
    pub slope: f64,
    pub intercept: f64,
    /// 95% Student-t interval for the slope.
    pub slope_ci: (f64, f64),
    /// `n (2 - alpha)`.
    pub expected_slope: f64,
    pub points: Vec<ScalingPoint>,
    pub threshold_k: f64,
    pub x_offset: f64,
    pub r: f64,
    pub seed: u64,
}

/// Horizontal offset of the ball centres used by [`scaling_fit`].
pub const SCALING_X_OFFSET: f64 = 0.5;

/// Least-squares fit of `log |Omega ∩ B(((x0, 0, ...), t u_1), r)|` against
/// `log t` with `x0 = 0.5`.
pub fn scaling_fit(
    spec: &SublevelSpec,
    s: &MetivierStructure,
    est: &ConditionEstimate,
    r: f64,
    t_values: &[f64],
    samples: usize,
    seed: u64,
) -> Result<ScalingFit> {
    if t_values.len() < 4 {
        return Err(invalid("t_values", format!("need at least 4 values, got {}", t_values.len())));
    }
    let g = thinness_geometry(spec, s, est, r, seed)?;
    if let Some(t) = t_values.iter().find(|t| **t <= g.threshold_k) {
        return Err(invalid("t_values", format!("|t| = {t} does not exceed the threshold k = {}", g.threshold_k)));
    }
    let mut points = Vec::with_capacity(t_values.len());
    for (i, &t) in t_values.iter().enumerate() {
        let mut center = s.identity();
        center.x[0] = SCALING_X_OFFSET;
        center.t[0] = t;
        let v = ball_intersection_volume(spec, s, Some(est), &center, r, samples, seed.wrapping_add(i as u64 + 1))?;
        if v.hits == 0 {
            return Err(Error::ZeroCount(t));
        }
        points.push(ScalingPoint { t, volume: v });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.t.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.volume.value.ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    let nn = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / nn;
    let my = ys.iter().sum::<f64>() / nn;
    let intercept = my - slope * mx;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let se = (sse / (nn - 2.0) / sxx).sqrt();
    let tq = StudentsT::new(0.0, 1.0, nn - 2.0).map(|d| d.inverse_cdf(0.975)).unwrap_or(f64::NAN);
    Ok(ScalingFit {
        slope,
        intercept,
        slope_ci: (slope - tq * se, slope + tq * se),
        expected_slope: s.n() as f64 * (2.0 - spec.alpha),
        points,
        threshold_k: g.threshold_k,
        x_offset: SCALING_X_OFFSET,
        r,
        seed,
    })
}

/// Draws a point of `Omega` near `(x0, t)` for diagnostics; `None` if none is found.
pub fn find_member_near<R: Rng + ?Sized>(
    spec: &SublevelSpec,
    s: &MetivierStructure,
    center: &GroupPoint,
    spread: f64,
    tries: usize,
    rng: &mut R,
) -> Option<GroupPoint> {
    (0..tries).find_map(|_| {
        let p = GroupPoint {
            x: center.x.iter().map(|c| c + spread * rng.random_range(-1.0..1.0)).collect(),
            t: center.t.iter().map(|c| c + spread * rng.random_range(-1.0..1.0)).collect(),
        };
        (!p.is_identity() && member(spec, s, &p)).then_some(p)
    })
}

/// Kaplan norm of the centre, exposed for reporting.
pub fn center_norm(s: &MetivierStructure, p: &GroupPoint) -> f64 {
    kaplan_norm(s, p)
}
