//! Bundled numerical checks of the group law, the norm and the closed-form
//! derivative formulas.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::group::{
    dilate_unchecked, homogeneous_dimension, inverse, multiply_unchecked, random_point, verify_metivier, GroupPoint,
    MetivierStructure,
};
use crate::norm::{kaplan_norm, quasi_distance};
use crate::potential::{
    check_sandwich, grad_norm_sq, laplacian_weight, potential_bounds, potential_htype, potential_unchecked,
    random_box_points, sub_laplacian_norm,
};
use crate::sampling;

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub points: usize,
    /// Worst error (or the statistic being tested).
    pub value: f64,
    /// Accepted range `[lo, hi]` for `value`.
    pub lo: f64,
    pub hi: f64,
    pub passed: bool,
}

impl CheckResult {
    fn at_most(name: &str, points: usize, value: f64, tol: f64) -> Self {
        Self { name: name.into(), points, value, lo: 0.0, hi: tol, passed: value <= tol }
    }

    fn within(name: &str, points: usize, value: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), points, value, lo, hi, passed: value >= lo && value <= hi }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// `max |a - b|_inf / max(1, |a|_inf)`.
fn rel_diff(a: &GroupPoint, b: &GroupPoint) -> f64 {
    let scale = a.x.iter().chain(&a.t).fold(1.0_f64, |m, v| m.max(v.abs()));
    a.max_abs_diff(b) / scale
}

/// Tolerance of the algebraic identities, relative to the size of the coordinates.
pub const ALGEBRA_TOL: f64 = 1e-12;
/// Tolerance of the finite-difference Jacobian determinant.
pub const JACOBIAN_TOL: f64 = 1e-8;

/// Associativity, dilation automorphism, homogeneity of `N` and left
/// invariance at `samples` random triples in `[-10, 10]` boxes.
pub fn group_checks(s: &MetivierStructure, samples: usize, seed: u64) -> Vec<CheckResult> {
    let mut rng = sampling::rng(seed, 0);
    let (mut assoc, mut dil, mut hom, mut inv, mut dist, mut back) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..samples {
        let p = random_point(s, &mut rng, 10.0);
        let q = random_point(s, &mut rng, 10.0);
        let r = random_point(s, &mut rng, 10.0);
        let lam = rng.random_range(0.1..10.0);

        let a = multiply_unchecked(s, &multiply_unchecked(s, &p, &q), &r);
        let b = multiply_unchecked(s, &p, &multiply_unchecked(s, &q, &r));
        assoc = assoc.max(rel_diff(&a, &b));

        let a = dilate_unchecked(lam, &multiply_unchecked(s, &p, &q));
        let b = multiply_unchecked(s, &dilate_unchecked(lam, &p), &dilate_unchecked(lam, &q));
        dil = dil.max(rel_diff(&a, &b));

        let np = kaplan_norm(s, &p);
        hom = hom.max((kaplan_norm(s, &dilate_unchecked(lam, &p)) - lam * np).abs() / (lam * np).max(1.0));

        let e = multiply_unchecked(s, &p, &inverse(&p));
        inv = inv.max(rel_diff(&p, &e).min(e.x.iter().chain(&e.t).fold(0.0_f64, |m, v| m.max(v.abs()))));

        let d0 = quasi_distance(s, &q, &r);
        let d1 = quasi_distance(s, &multiply_unchecked(s, &p, &q), &multiply_unchecked(s, &p, &r));
        dist = dist.max((d1 - d0).abs() / d0.max(1.0));

        let moved = multiply_unchecked(s, &inverse(&p), &multiply_unchecked(s, &p, &q));
        back = back.max(rel_diff(&multiply_unchecked(s, &p, &q), &multiply_unchecked(s, &p, &moved)).max(
            q.max_abs_diff(&moved) / q.x.iter().chain(&q.t).fold(1.0_f64, |m, v| m.max(v.abs())),
        ));
    }
    vec![
        CheckResult::at_most("associativity", samples, assoc, ALGEBRA_TOL),
        CheckResult::at_most("dilation_automorphism", samples, dil, ALGEBRA_TOL),
        CheckResult::at_most("norm_homogeneity", samples, hom, ALGEBRA_TOL),
        CheckResult::at_most("inverse", samples, inv, ALGEBRA_TOL),
        CheckResult::at_most("left_invariant_distance", samples, dist, ALGEBRA_TOL),
        CheckResult::at_most("left_translation_inverse", samples, back, ALGEBRA_TOL),
    ]
}

fn determinant(mut a: Vec<f64>, n: usize) -> f64 {
    let mut det = 1.0;
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i * n + c].abs().total_cmp(&a[j * n + c].abs())).unwrap_or(c);
        if a[piv * n + c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            for k in 0..n {
                a.swap(piv * n + k, c * n + k);
            }
            det = -det;
        }
        det *= a[c * n + c];
        for r in c + 1..n {
            let f = a[r * n + c] / a[c * n + c];
            for k in c..n {
                a[r * n + k] -= f * a[c * n + k];
            }
        }
    }
    det
}

/// Largest `|det D(p -> g p) - 1|` from centred differences at random `(g, p)`.
pub fn jacobian_check(s: &MetivierStructure, samples: usize, seed: u64) -> CheckResult {
    let mut rng = sampling::rng(seed, 1);
    let dim = s.dim_x() + s.m();
    let h = 1e-3;
    let mut worst = 0.0_f64;
    let coords = |p: &GroupPoint| -> Vec<f64> { p.x.iter().chain(&p.t).copied().collect() };
    for _ in 0..samples {
        let g = random_point(s, &mut rng, 10.0);
        let p = random_point(s, &mut rng, 10.0);
        let mut jac = vec![0.0; dim * dim];
        for c in 0..dim {
            let mut plus = p.clone();
            let mut minus = p.clone();
            if c < s.dim_x() {
                plus.x[c] += h;
                minus.x[c] -= h;
            } else {
                plus.t[c - s.dim_x()] += h;
                minus.t[c - s.dim_x()] -= h;
            }
            let fp = coords(&multiply_unchecked(s, &g, &plus));
            let fm = coords(&multiply_unchecked(s, &g, &minus));
            for r in 0..dim {
                jac[r * dim + c] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        worst = worst.max((determinant(jac, dim) - 1.0).abs());
    }
    CheckResult::at_most("left_translation_jacobian", samples, worst, JACOBIAN_TOL)
}

/// Step sizes of the Richardson test.
pub const FD_STEPS: (f64, f64) = (1e-2, 5e-3);
/// Accepted range of the error ratio under step halving.
pub const RICHARDSON_RANGE: (f64, f64) = (3.5, 4.5);

/// `(sum_j (D_h f)^2, sum_j D2_h f)` with centred differences along the flows `p exp(h X_j)`.
fn flow_differences(s: &MetivierStructure, f: &dyn Fn(&GroupPoint) -> f64, p: &GroupPoint, h: f64) -> (f64, f64) {
    let f0 = f(p);
    let mut grad2 = 0.0;
    let mut lap = 0.0;
    let mut e = s.identity();
    for j in 0..s.dim_x() {
        e.x[j] = h;
        let fp = f(&multiply_unchecked(s, p, &e));
        e.x[j] = -h;
        let fm = f(&multiply_unchecked(s, p, &e));
        e.x[j] = 0.0;
        let d1 = (fp - fm) / (2.0 * h);
        grad2 += d1 * d1;
        lap += (fp - 2.0 * f0 + fm) / (h * h);
    }
    (grad2, lap)
}

/// Ratio `E(h) / E(h/2)` of summed absolute errors between a closed form and
/// its flow-difference oracle.
fn richardson(
    name: &str,
    s: &MetivierStructure,
    points: &[GroupPoint],
    exact: &dyn Fn(&GroupPoint) -> f64,
    oracle: &dyn Fn(&GroupPoint, f64) -> f64,
) -> CheckResult {
    let (h1, h2) = FD_STEPS;
    let e1: f64 = points.iter().map(|p| (oracle(p, h1) - exact(p)).abs()).sum();
    let e2: f64 = points.iter().map(|p| (oracle(p, h2) - exact(p)).abs()).sum();
    let _ = s;
    CheckResult::within(name, points.len(), e1 / e2, RICHARDSON_RANGE.0, RICHARDSON_RANGE.1)
}

/// Random points with `N` in a moderate range, away from the singular origin.
pub fn formula_points(s: &MetivierStructure, count: usize, seed: u64) -> Vec<GroupPoint> {
    let mut rng = sampling::rng(seed, 2);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = random_point(s, &mut rng, 1.5);
        let n = kaplan_norm(s, &p);
        if (0.5..=1.5).contains(&n) && p.x_norm_sq() > 0.05 {
            out.push(p);
        }
    }
    out
}

/// Richardson checks of `|grad_H N|^2`, `L N` and `L w_alpha` against
/// flow differences along the `X_j`.
pub fn formula_checks(s: &MetivierStructure, alphas: &[f64], count: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let pts = formula_points(s, count, seed);
    let norm = |p: &GroupPoint| kaplan_norm(s, p);
    // validate once so the closures below can unwrap
    for p in &pts {
        grad_norm_sq(s, p)?;
    }
    let mut out = vec![
        richardson(
            "grad_norm_sq_richardson",
            s,
            &pts,
            &|p| grad_norm_sq(s, p).expect("validated point"),
            &|p, h| flow_differences(s, &norm, p, h).0,
        ),
        richardson(
            "sub_laplacian_norm_richardson",
            s,
            &pts,
            &|p| sub_laplacian_norm(s, p).expect("validated point"),
            &|p, h| -flow_differences(s, &norm, p, h).1,
        ),
    ];
    for &a in alphas {
        let w = move |p: &GroupPoint| (-kaplan_norm(s, p).powf(a)).exp();
        out.push(richardson(
            &format!("laplacian_weight_richardson_alpha_{a}"),
            s,
            &pts,
            &|p| laplacian_weight(a, s, p).expect("validated point"),
            &|p, h| -flow_differences(s, &w, p, h).1,
        ));
    }
    Ok(out)
}

/// Tolerance of the H-type closed form, relative to `max(1, |terms|)`.
pub const HTYPE_TOL: f64 = 1e-12;

/// Generic `V_alpha` against the H-type closed form.
pub fn htype_check(s: &MetivierStructure, alpha: f64, count: usize, seed: u64) -> Result<CheckResult> {
    let pts = random_box_points(s, count, 3.0, 3.0, seed);
    let q = homogeneous_dimension(s) as f64;
    let mut worst = 0.0_f64;
    for p in &pts {
        let v = potential_unchecked(alpha, s, p);
        let c = potential_htype(alpha, s, p)?;
        let n = kaplan_norm(s, p);
        let x2 = p.x_norm_sq();
        let scale = (0.25 * alpha * alpha * n.powf(2.0 * alpha - 4.0) * x2
            + 0.5 * alpha * (q + alpha - 2.0) * n.powf(alpha - 4.0) * x2)
            .max(1.0);
        worst = worst.max((v - c).abs() / scale);
    }
    Ok(CheckResult::at_most(&format!("htype_closed_form_alpha_{alpha}"), count, worst, HTYPE_TOL))
}

/// Number of sandwich violations at random points.
pub fn sandwich_check(s: &MetivierStructure, alpha: f64, count: usize, seed: u64) -> Result<CheckResult> {
    let est = verify_metivier(s, 1000, seed)?;
    let k = potential_bounds(alpha, &est, s)?;
    let pts = random_box_points(s, count, 3.0, 3.0, seed.wrapping_add(1));
    let rep = check_sandwich(alpha, s, &k, &pts)?;
    Ok(CheckResult::at_most(&format!("sandwich_alpha_{alpha}"), count, rep.violations.len() as f64, 0.0))
}

/// Sizes of the bundled suite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSizes {
    pub group_samples: usize,
    pub jacobian_samples: usize,
    pub formula_points: usize,
    pub potential_points: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        Self { group_samples: 10_000, jacobian_samples: 1_000, formula_points: 100, potential_points: 10_000 }
    }
}

/// Runs every check; the H-type comparison only on H-type structures.
pub fn run_suite(s: &MetivierStructure, sizes: &SuiteSizes, seed: u64) -> Result<SuiteReport> {
    let mut checks = group_checks(s, sizes.group_samples, seed);
    checks.push(jacobian_check(s, sizes.jacobian_samples, seed));
    checks.extend(formula_checks(s, &[1.5, 2.0, 3.0], sizes.formula_points, seed)?);
    for a in [1.0, 2.0, 3.0, 4.0] {
        if s.is_h_type() {
            checks.push(htype_check(s, a, sizes.potential_points, seed)?);
        }
        checks.push(sandwich_check(s, a, sizes.potential_points, seed)?);
    }
    Ok(SuiteReport { seed, checks })
}
