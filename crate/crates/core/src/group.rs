//! Two-step (Métivier) groups realized as R^{2n} x R^m in exponential
//! coordinates.
//!
//! The structure is given by m skew-symmetric 2n x 2n matrices `J_k` with the
//! convention `(J_t x)_i = sum_j (J_t)_{ij} x_j`, `J_t = sum_k t_k J_k`. The
//! group law is
//!
//! ```text
//! (x, t) . (x', t') = (x + x', t + t' + 1/2 sum_k (J_k x, x') u_k)
//! ```
//!
//! and the left-invariant horizontal fields are
//! `X_j = d/dx_j + 1/2 sum_k (J_k x)_j d/dt_k`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};
use crate::linalg::symmetric_eigenvalues;
use crate::sampling;

/// Horizontal coordinates.
pub type HVec = SmallVec<[f64; 6]>;
/// Central coordinates.
pub type CVec = SmallVec<[f64; 3]>;

const SKEW_TOL: f64 = 1e-14;
const HTYPE_TOL: f64 = 1e-12;

/// An element `(x, t)` of the group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint {
    pub x: HVec,
    pub t: CVec,
}

impl GroupPoint {
    pub fn new(x: &[f64], t: &[f64]) -> Self {
        Self {
            x: HVec::from_slice(x),
            t: CVec::from_slice(t),
        }
    }

    pub fn identity(horizontal_dim: usize, central_dim: usize) -> Self {
        Self {
            x: smallvec::smallvec![0.0; horizontal_dim],
            t: smallvec::smallvec![0.0; central_dim],
        }
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().chain(self.t.iter()).all(|v| *v == 0.0)
    }

    pub fn x_norm_sq(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum()
    }

    pub fn t_norm_sq(&self) -> f64 {
        self.t.iter().map(|v| v * v).sum()
    }

    /// Max-norm distance between coordinate vectors.
    pub fn max_abs_diff(&self, other: &GroupPoint) -> f64 {
        self.x
            .iter()
            .zip(other.x.iter())
            .chain(self.t.iter().zip(other.t.iter()))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Sampled extremes of `|J_t x|^2` over unit `x` and unit `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionEstimate {
    /// c0: minimum of `|J_t x|^2`.
    #[serde(rename = "c0")]
    pub c0_min: f64,
    /// C0: maximum of `|J_t x|^2`.
    #[serde(rename = "C0")]
    pub c0_max: f64,
    pub sample_count: usize,
    pub seed: u64,
}

impl ConditionEstimate {
    /// Whether the sampled minimum certifies non-degeneracy of every sampled `J_t`.
    pub fn is_metivier(&self) -> bool {
        self.c0_min > 1e-12 * self.c0_max.max(1.0)
    }
}

/// Dimensions and structure maps of a Métivier group.
#[derive(Clone, Debug, PartialEq)]
pub struct MetivierStructure {
    n: usize,
    m: usize,
    /// `m` row-major `2n x 2n` matrices.
    j: Vec<Vec<f64>>,
    h_type: bool,
}

impl MetivierStructure {
    /// Builds a structure from its maps `J_{u_k}` (row-major, `2n x 2n` each).
    ///
    /// Validates shapes and skew-symmetry, and detects the H-type identity
    /// `J_t^2 = -|t|^2 I`. Non-degeneracy is not enforced here; see
    /// [`verify_metivier`].
    pub fn new(n: usize, m: usize, j: Vec<Vec<f64>>) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidStructure(format!("n = {n}, m = {m} must be positive")));
        }
        if j.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: j.len() });
        }
        let d = 2 * n;
        for (k, jk) in j.iter().enumerate() {
            if jk.len() != d * d {
                return Err(Error::InvalidStructure(format!(
                    "J_{} has {} entries, expected {}",
                    k + 1,
                    jk.len(),
                    d * d
                )));
            }
            if jk.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidStructure(format!("J_{} has non-finite entries", k + 1)));
            }
            let asym = (0..d)
                .flat_map(|r| (0..d).map(move |c| (r, c)))
                .map(|(r, c)| (jk[r * d + c] + jk[c * d + r]).abs())
                .fold(0.0, f64::max);
            if asym > SKEW_TOL {
                return Err(Error::InvalidStructure(format!(
                    "J_{} is not skew-symmetric (max |J + J^T| = {asym:e})",
                    k + 1
                )));
            }
        }
        let mut s = Self { n, m, j, h_type: false };
        s.h_type = s.check_h_type();
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Horizontal dimension `2n`.
    pub fn dim_x(&self) -> usize {
        2 * self.n
    }

    pub fn is_h_type(&self) -> bool {
        self.h_type
    }

    /// Row-major entries of `J_{u_k}`.
    pub fn j_matrix(&self, k: usize) -> &[f64] {
        &self.j[k]
    }

    pub fn identity(&self) -> GroupPoint {
        GroupPoint::identity(self.dim_x(), self.m)
    }

    pub fn check_point(&self, p: &GroupPoint) -> Result<()> {
        if p.x.len() != self.dim_x() {
            return Err(Error::DimensionMismatch { expected: self.dim_x(), got: p.x.len() });
        }
        if p.t.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: p.t.len() });
        }
        Ok(())
    }

    /// `out = J_k x`.
    pub fn apply_jk(&self, k: usize, x: &[f64], out: &mut [f64]) {
        let d = self.dim_x();
        let jk = &self.j[k];
        for r in 0..d {
            let row = &jk[r * d..(r + 1) * d];
            out[r] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// `J_t x`.
    pub fn apply_jt(&self, t: &[f64], x: &[f64]) -> HVec {
        let d = self.dim_x();
        let mut out: HVec = smallvec::smallvec![0.0; d];
        for (k, &tk) in t.iter().enumerate() {
            if tk == 0.0 {
                continue;
            }
            let jk = &self.j[k];
            for r in 0..d {
                let row = &jk[r * d..(r + 1) * d];
                out[r] += tk * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        out
    }

    /// `sum_k |J_k x|^2`.
    pub fn sum_jk_sq(&self, x: &[f64]) -> f64 {
        let d = self.dim_x();
        let mut buf: HVec = smallvec::smallvec![0.0; d];
        (0..self.m)
            .map(|k| {
                self.apply_jk(k, x, &mut buf);
                buf.iter().map(|v| v * v).sum::<f64>()
            })
            .sum()
    }

    /// The bilinear central increment `1/2 sum_k (J_k x, x') u_k`.
    pub fn central_increment(&self, x: &[f64], xp: &[f64]) -> CVec {
        let d = self.dim_x();
        let mut buf: HVec = smallvec::smallvec![0.0; d];
        (0..self.m)
            .map(|k| {
                self.apply_jk(k, x, &mut buf);
                0.5 * buf.iter().zip(xp).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    /// Dense `J_t` (row-major).
    pub fn jt_matrix(&self, t: &[f64]) -> Vec<f64> {
        let d = self.dim_x();
        let mut out = vec![0.0; d * d];
        for (k, &tk) in t.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(&self.j[k]) {
                *o += tk * v;
            }
        }
        out
    }

    fn check_h_type(&self) -> bool {
        let mut dirs: Vec<Vec<f64>> = (0..self.m)
            .map(|k| {
                let mut e = vec![0.0; self.m];
                e[k] = 1.0;
                e
            })
            .collect();
        let mut rng = sampling::rng(0x4854_7970, 0);
        for _ in 0..32 {
            dirs.push(sampling::unit_vector(&mut rng, self.m).to_vec());
        }
        dirs.iter().all(|t| self.h_type_defect(t) <= HTYPE_TOL)
    }

    /// `max |J_t^2 + |t|^2 I|` for the given `t`.
    pub fn h_type_defect(&self, t: &[f64]) -> f64 {
        let d = self.dim_x();
        let jt = self.jt_matrix(t);
        let t2: f64 = t.iter().map(|v| v * v).sum();
        let mut worst = 0.0_f64;
        for r in 0..d {
            for c in 0..d {
                let mut acc: f64 = (0..d).map(|i| jt[r * d + i] * jt[i * d + c]).sum();
                if r == c {
                    acc += t2;
                }
                worst = worst.max(acc.abs());
            }
        }
        worst
    }

    /// Max entry of `J_k + J_k^T` over all k.
    pub fn skew_defect(&self) -> f64 {
        let d = self.dim_x();
        self.j
            .iter()
            .flat_map(|jk| {
                (0..d).flat_map(move |r| (0..d).map(move |c| (jk[r * d + c] + jk[c * d + r]).abs()))
            })
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> StructureJson {
        StructureJson {
            n: self.n,
            m: self.m,
            j: self.j.iter().map(|jk| JMatrixJson::Flat(jk.clone())).collect(),
            h_type: self.h_type,
        }
    }

    pub fn from_json(doc: &StructureJson) -> Result<Self> {
        let d = 2 * doc.n;
        let j = doc
            .j
            .iter()
            .map(|mat| match mat {
                JMatrixJson::Flat(v) => Ok(v.clone()),
                JMatrixJson::Rows(rows) => {
                    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                        Err(Error::InvalidStructure(format!("J must be {d} x {d}")))
                    } else {
                        Ok(rows.concat())
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let s = Self::new(doc.n, doc.m, j)?;
        if doc.h_type && !s.h_type {
            return Err(Error::InvalidStructure(
                "file declares h_type but J_t^2 = -|t|^2 I fails".into(),
            ));
        }
        Ok(s)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: StructureJson = serde_json::from_str(text)?;
        Self::from_json(&doc)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("structure serializes")
    }
}

/// Serialized form `{n, m, J: [...], h_type}`. Each `J` entry is written as a
/// flat row-major array; nested row arrays are accepted on input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureJson {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "J")]
    pub j: Vec<JMatrixJson>,
    pub h_type: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JMatrixJson {
    Flat(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

/// The Heisenberg group: n = m = 1, `J = [[0, 1], [-1, 0]]`, so that
/// `X_1 = d/dx_1 + (x_2/2) d/dt` and `X_2 = d/dx_2 - (x_1/2) d/dt`.
pub fn make_heisenberg() -> MetivierStructure {
    MetivierStructure::new(1, 1, vec![vec![0.0, 1.0, -1.0, 0.0]]).expect("Heisenberg structure is valid")
}

/// Block-diagonal structure with one central direction, `J = diag(s_1 A, ..., s_n A)`
/// where `A = [[0, 1], [-1, 0]]`. Singular values of `J` are the `s_i`.
pub fn make_block_diagonal(scales: &[f64]) -> Result<MetivierStructure> {
    let n = scales.len();
    let d = 2 * n;
    let mut j = vec![0.0; d * d];
    for (b, &s) in scales.iter().enumerate() {
        let r = 2 * b;
        j[r * d + r + 1] = s;
        j[(r + 1) * d + r] = -s;
    }
    MetivierStructure::new(n, 1, vec![j])
}

/// Homogeneous dimension `Q = 2n + 2m` of the two-step group.
pub fn homogeneous_dimension(s: &MetivierStructure) -> usize {
    2 * s.n + 2 * s.m
}

pub fn multiply(s: &MetivierStructure, p: &GroupPoint, q: &GroupPoint) -> Result<GroupPoint> {
    s.check_point(p)?;
    s.check_point(q)?;
    Ok(multiply_unchecked(s, p, q))
}

pub(crate) fn multiply_unchecked(s: &MetivierStructure, p: &GroupPoint, q: &GroupPoint) -> GroupPoint {
    let inc = s.central_increment(&p.x, &q.x);
    GroupPoint {
        x: p.x.iter().zip(&q.x).map(|(a, b)| a + b).collect(),
        t: p.t.iter().zip(&q.t).zip(&inc).map(|((a, b), c)| a + b + c).collect(),
    }
}

/// In exponential coordinates of a two-step group the inverse is `(-x, -t)`.
pub fn inverse(p: &GroupPoint) -> GroupPoint {
    GroupPoint {
        x: p.x.iter().map(|v| -v).collect(),
        t: p.t.iter().map(|v| -v).collect(),
    }
}

/// `delta_r (x, t) = (r x, r^2 t)`.
pub fn dilate(r: f64, p: &GroupPoint) -> Result<GroupPoint> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(invalid("r", format!("dilation factor must be positive, got {r}")));
    }
    Ok(dilate_unchecked(r, p))
}

pub(crate) fn dilate_unchecked(r: f64, p: &GroupPoint) -> GroupPoint {
    GroupPoint {
        x: p.x.iter().map(|v| r * v).collect(),
        t: p.t.iter().map(|v| r * r * v).collect(),
    }
}

/// Estimates `c0 = min |J_t x|^2` and `C0 = max |J_t x|^2` over `|x| = |t| = 1`.
///
/// Each of the `samples` draws picks a uniform unit `t`; the extremes over
/// unit `x` for that `t` are computed exactly as the extreme eigenvalues of
/// `J_t^T J_t`. For m = 1 the result is therefore exact.
pub fn verify_metivier(s: &MetivierStructure, samples: usize, seed: u64) -> Result<ConditionEstimate> {
    if samples == 0 {
        return Err(invalid("samples", "must be at least 1"));
    }
    let d = s.dim_x();
    let mut rng: ChaCha8Rng = sampling::rng(seed, 0);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    let mut gram = vec![0.0; d * d];
    for i in 0..samples {
        let t = if s.m == 1 {
            // The sphere S^0 is {+1, -1}; both give the same J_t^T J_t.
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            CVec::from_slice(&[sign])
        } else if i < s.m {
            let mut e: CVec = smallvec::smallvec![0.0; s.m];
            e[i] = 1.0;
            e
        } else {
            sampling::unit_vector(&mut rng, s.m)
        };
        let jt = s.jt_matrix(&t);
        for r in 0..d {
            for c in 0..d {
                gram[r * d + c] = (0..d).map(|k| jt[k * d + r] * jt[k * d + c]).sum();
            }
        }
        let ev = symmetric_eigenvalues(&gram, d);
        lo = lo.min(ev[0].max(0.0));
        hi = hi.max(ev[d - 1]);
    }
    Ok(ConditionEstimate { c0_min: lo, c0_max: hi, sample_count: samples, seed })
}

/// Random point with every coordinate uniform in `[-half_width, half_width]`.
pub fn random_point<R: Rng + ?Sized>(s: &MetivierStructure, rng: &mut R, half_width: f64) -> GroupPoint {
    GroupPoint {
        x: (0..s.dim_x()).map(|_| rng.random_range(-half_width..=half_width)).collect(),
        t: (0..s.m).map(|_| rng.random_range(-half_width..=half_width)).collect(),
    }
}
