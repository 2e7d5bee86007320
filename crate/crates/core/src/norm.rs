//! Kaplan norm, quasi-distance, balls and the weights `w_alpha = exp(-N^alpha)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::group::{dilate_unchecked, inverse, multiply_unchecked, GroupPoint, MetivierStructure};
use crate::sampling;

/// `N(x, t) = (|x|^4 + 16 |t|^2)^(1/4)`.
pub fn kaplan_norm(_s: &MetivierStructure, p: &GroupPoint) -> f64 {
    norm_from_parts(p.x_norm_sq(), p.t_norm_sq())
}

#[inline]
pub(crate) fn norm_from_parts(x2: f64, t2: f64) -> f64 {
    (x2 * x2 + 16.0 * t2).sqrt().sqrt()
}

/// Left-invariant quasi-distance `d(p, q) = N(p^{-1} q)`.
pub fn quasi_distance(s: &MetivierStructure, p: &GroupPoint, q: &GroupPoint) -> f64 {
    kaplan_norm(s, &multiply_unchecked(s, &inverse(p), q))
}

/// Open ball `{q : d(center, q) < radius}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub center: GroupPoint,
    pub radius: f64,
}

impl BallSpec {
    pub fn new(center: GroupPoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid("radius", format!("must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }
}

pub fn in_ball(s: &MetivierStructure, ball: &BallSpec, p: &GroupPoint) -> bool {
    quasi_distance(s, &ball.center, p) < ball.radius
}

/// `exp(-N(p)^alpha)`.
pub fn weight(alpha: f64, s: &MetivierStructure, p: &GroupPoint) -> Result<f64> {
    check_alpha(alpha)?;
    Ok((-kaplan_norm(s, p).powf(alpha)).exp())
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(invalid("alpha", format!("must be positive, got {alpha}")))
    }
}

/// Empirical lower bound for the constant in `N(p q) <= gamma (N(p) + N(q))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub gamma_hat: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Maximizes `N(p q) / (N(p) + N(q))` over sampled pairs.
///
/// The ratio is dilation invariant, so `p` is drawn on the unit sphere of `N`
/// and `q` at a log-uniform scale in `[e^-3, e^3]`. A single stream is used:
/// extending `samples` under the same seed never lowers the estimate.
pub fn estimate_gamma(s: &MetivierStructure, samples: usize, seed: u64) -> Result<GammaEstimate> {
    if samples == 0 {
        return Err(invalid("samples", "must be at least 1"));
    }
    let mut rng = sampling::rng(seed, 0);
    // p = identity gives exactly 1.
    let mut best = 1.0_f64;
    for _ in 0..samples {
        let p = unit_sphere_point(s, &mut rng);
        let q = dilate_unchecked(rng.random_range(-3.0..3.0_f64).exp(), &unit_sphere_point(s, &mut rng));
        let ratio = kaplan_norm(s, &multiply_unchecked(s, &p, &q)) / (kaplan_norm(s, &p) + kaplan_norm(s, &q));
        best = best.max(ratio);
    }
    Ok(GammaEstimate { gamma_hat: best, samples, seed })
}

/// Random point with `N = 1`: a Gaussian direction in `(x, t)` pushed onto the
/// unit sphere by dilation.
pub fn unit_sphere_point<R: Rng + ?Sized>(s: &MetivierStructure, rng: &mut R) -> GroupPoint {
    loop {
        let raw = sampling::unit_vector(rng, s.dim_x() + s.m());
        let p = GroupPoint::new(&raw[..s.dim_x()], &raw[s.dim_x()..]);
        let n = kaplan_norm(s, &p);
        if n > 1e-150 {
            return dilate_unchecked(1.0 / n, &p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{dilate, make_heisenberg, random_point};

    #[test]
    fn norm_examples() {
        let h = make_heisenberg();
        assert_eq!(kaplan_norm(&h, &GroupPoint::new(&[1.0, 0.0], &[0.0])), 1.0);
        assert_eq!(kaplan_norm(&h, &GroupPoint::new(&[0.0, 0.0], &[1.0])), 2.0);
        let v = kaplan_norm(&h, &GroupPoint::new(&[1.0, 1.0], &[0.5]));
        assert!((v - 8f64.powf(0.25)).abs() < 1e-15);
        assert_eq!(kaplan_norm(&h, &h.identity()), 0.0);
    }

    #[test]
    fn distance_examples() {
        let h = make_heisenberg();
        let p = GroupPoint::new(&[0.3, -1.0], &[2.0]);
        assert_eq!(quasi_distance(&h, &p, &p), 0.0);
        assert_eq!(quasi_distance(&h, &h.identity(), &GroupPoint::new(&[0.0, 0.0], &[1.0])), 2.0);
    }

    #[test]
    fn ball_examples() {
        let h = make_heisenberg();
        let c = GroupPoint::new(&[0.2, 0.1], &[-1.0]);
        let b = BallSpec::new(c.clone(), 0.5).unwrap();
        assert!(in_ball(&h, &b, &c));
        let unit = BallSpec::new(h.identity(), 1.0).unwrap();
        assert!(!in_ball(&h, &unit, &GroupPoint::new(&[0.0, 0.0], &[1.0])));
        let b5 = BallSpec::new(GroupPoint::new(&[0.0, 0.0], &[5.0]), 1.0).unwrap();
        let q = GroupPoint::new(&[0.0, 0.0], &[5.2]);
        let d = quasi_distance(&h, &b5.center, &q);
        assert!((d - 2.0 * 0.2f64.sqrt()).abs() < 1e-12);
        assert!(in_ball(&h, &b5, &q));
        assert!(BallSpec::new(h.identity(), 0.0).is_err());
    }

    #[test]
    fn weight_examples() {
        let h = make_heisenberg();
        assert_eq!(weight(1.7, &h, &h.identity()).unwrap(), 1.0);
        let w = weight(2.0, &h, &GroupPoint::new(&[1.0, 0.0], &[0.0])).unwrap();
        assert!((w - (-1.0f64).exp()).abs() < 1e-16);
        let w = weight(4.0, &h, &GroupPoint::new(&[0.0, 0.0], &[1.0])).unwrap();
        assert!((w - (-16.0f64).exp()).abs() < 1e-22);
        assert!(weight(0.0, &h, &h.identity()).is_err());
        assert!(weight(-1.0, &h, &h.identity()).is_err());
    }

    #[test]
    fn gamma_examples() {
        let h = make_heisenberg();
        // central pairs commute and the norm is subadditive there
        for (a, b) in [(1.0, 2.0), (-0.5, 3.0), (0.1, 0.1)] {
            let p = GroupPoint::new(&[0.0, 0.0], &[a]);
            let q = GroupPoint::new(&[0.0, 0.0], &[b]);
            let r = kaplan_norm(&h, &multiply_unchecked(&h, &p, &q)) / (kaplan_norm(&h, &p) + kaplan_norm(&h, &q));
            assert!(r <= 1.0 + 1e-15);
        }
        let p = GroupPoint::new(&[1.0, 0.0], &[0.0]);
        let pp = multiply_unchecked(&h, &p, &p);
        assert_eq!(kaplan_norm(&h, &pp) / (2.0 * kaplan_norm(&h, &p)), 1.0);
        let g = estimate_gamma(&h, 2000, 9).unwrap();
        assert!(g.gamma_hat >= 1.0);
        assert!(estimate_gamma(&h, 0, 9).is_err());
    }

    #[test]
    fn gamma_monotone_in_samples() {
        let h = make_heisenberg();
        let mut prev = 0.0;
        for n in [1, 10, 100, 1000] {
            let g = estimate_gamma(&h, n, 4).unwrap().gamma_hat;
            assert!(g >= prev);
            prev = g;
        }
    }

    #[test]
    fn homogeneity_and_symmetry() {
        let h = make_heisenberg();
        let mut rng = sampling::rng(11, 0);
        for _ in 0..1000 {
            let p = random_point(&h, &mut rng, 5.0);
            let r = rng.random_range(0.01..10.0);
            let lhs = kaplan_norm(&h, &dilate(r, &p).unwrap());
            assert!((lhs - r * kaplan_norm(&h, &p)).abs() <= 1e-12 * lhs.max(1.0));
            assert_eq!(kaplan_norm(&h, &inverse(&p)), kaplan_norm(&h, &p));
        }
    }
}
