//! Lanczos iteration with full reorthogonalization for the lowest
//! eigenpairs of a sparse symmetric operator.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{tridiagonal_eigenvalues, tridiagonal_eigenvector};
use crate::sampling;
use crate::sparse::SparseSymmetricOperator;
use crate::spectral::Grid3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `||A v - lambda v||_2` for unit Ritz vectors.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub tol: f64,
    pub seed: u64,
    pub grid: Option<Grid3>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(b, a)| *b += alpha * a);
}

/// Resumable Lanczos process; the Krylov basis is kept for reorthogonalization
/// and for forming Ritz vectors.
pub struct LanczosState<'a> {
    op: &'a SparseSymmetricOperator,
    basis: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    /// `beta[i]` couples `basis[i]` and `basis[i + 1]`.
    beta: Vec<f64>,
    pending: Option<Vec<f64>>,
    restarts: u64,
    seed: u64,
    scale: f64,
}

impl<'a> LanczosState<'a> {
    pub fn new(op: &'a SparseSymmetricOperator, seed: u64) -> Result<Self> {
        if op.dim() == 0 {
            return Err(invalid("operator", "dimension is zero"));
        }
        let defect = op.symmetry_defect();
        if defect > 0.0 {
            return Err(Error::NotSymmetric(defect));
        }
        let (lo, hi) = op.gershgorin_bounds();
        let mut st = Self {
            op,
            basis: Vec::new(),
            alpha: Vec::new(),
            beta: Vec::new(),
            pending: None,
            restarts: 0,
            seed,
            scale: lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE),
        };
        let v = st.fresh_vector().expect("empty basis admits a start vector");
        st.pending = Some(v);
        Ok(st)
    }

    pub fn iterations(&self) -> usize {
        self.alpha.len()
    }

    /// Random unit vector orthogonal to the current basis, or `None` once the
    /// basis spans the whole space.
    fn fresh_vector(&mut self) -> Option<Vec<f64>> {
        let n = self.op.dim();
        if self.basis.len() >= n {
            return None;
        }
        for _ in 0..8 {
            let mut rng = sampling::rng(self.seed, self.restarts);
            self.restarts += 1;
            let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let before = dot(&v, &v).sqrt();
            self.orthogonalize(&mut v);
            self.orthogonalize(&mut v);
            let nrm = dot(&v, &v).sqrt();
            if nrm > 1e-8 * before {
                v.iter_mut().for_each(|a| *a /= nrm);
                return Some(v);
            }
        }
        None
    }

    fn orthogonalize(&self, w: &mut [f64]) {
        let coeffs: Vec<f64> = self.basis.iter().map(|q| dot(q, w)).collect();
        for (q, c) in self.basis.iter().zip(coeffs) {
            axpy(-c, q, w);
        }
    }

    /// One Lanczos step. Returns `false` when the space is exhausted.
    fn step(&mut self) -> bool {
        let Some(q) = self.pending.take() else {
            return false;
        };
        let n = self.op.dim();
        let mut w = vec![0.0; n];
        self.op.matvec(&q, &mut w);
        let a = dot(&q, &w);
        axpy(-a, &q, &mut w);
        if let (Some(prev), Some(b)) = (self.basis.last(), self.beta.last()) {
            axpy(-b, prev, &mut w);
        }
        self.basis.push(q);
        self.alpha.push(a);
        self.orthogonalize(&mut w);
        self.orthogonalize(&mut w);
        let b = dot(&w, &w).sqrt();
        if b > 1e-12 * self.scale {
            w.iter_mut().for_each(|v| *v /= b);
            self.beta.push(b);
            self.pending = Some(w);
        } else {
            // invariant subspace: continue in the orthogonal complement
            self.beta.push(0.0);
            self.pending = self.fresh_vector();
        }
        true
    }

    /// Ritz values of the current tridiagonal matrix and the residual
    /// estimates `|beta_j s_j|` of the lowest `k`.
    fn ritz(&self, k: usize) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
        let j = self.alpha.len();
        let off = &self.beta[..j - 1];
        let theta = tridiagonal_eigenvalues(&self.alpha, off);
        let last_beta = if self.pending.is_some() { self.beta[j - 1] } else { 0.0 };
        let mut est = Vec::with_capacity(k);
        let mut vecs = Vec::with_capacity(k);
        for &t in theta.iter().take(k) {
            let s = tridiagonal_eigenvector(&self.alpha, off, t);
            est.push((last_beta * s[j - 1]).abs());
            vecs.push(s);
        }
        (theta, est, vecs)
    }

    fn ritz_vector(&self, s: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.op.dim()];
        for (q, c) in self.basis.iter().zip(s) {
            axpy(*c, q, &mut y);
        }
        let nrm = dot(&y, &y).sqrt();
        y.iter_mut().for_each(|v| *v /= nrm);
        y
    }

    fn true_residual(&self, y: &[f64], theta: f64) -> f64 {
        let mut ay = vec![0.0; y.len()];
        self.op.matvec(y, &mut ay);
        axpy(-theta, y, &mut ay);
        dot(&ay, &ay).sqrt()
    }

    /// Iterates until the lowest `k` Ritz pairs have residual `<= tol`, or
    /// until `max_iter` total iterations.
    pub fn run_until(&mut self, k: usize, tol: f64, max_iter: usize) -> Result<SpectrumResult> {
        let n = self.op.dim();
        if k == 0 || k > n {
            return Err(invalid("k", format!("need 1 <= k <= {n}, got {k}")));
        }
        let max_iter = max_iter.min(n);
        let mut next_check = self.alpha.len().max(k);
        loop {
            let j = self.alpha.len();
            let exhausted = self.pending.is_none();
            if j >= next_check || j >= max_iter || exhausted {
                let (theta, est, vecs) = self.ritz(k);
                if theta.len() >= k && est.iter().all(|e| *e <= tol) {
                    let residuals: Vec<f64> = vecs
                        .iter()
                        .zip(&theta)
                        .map(|(s, t)| self.true_residual(&self.ritz_vector(s), *t))
                        .collect();
                    if residuals.iter().all(|r| *r <= tol) || exhausted {
                        return Ok(self.result(theta[..k].to_vec(), residuals, tol));
                    }
                }
                if j >= max_iter || exhausted {
                    let kk = k.min(theta.len());
                    let residuals: Vec<f64> = vecs
                        .iter()
                        .zip(&theta)
                        .take(kk)
                        .map(|(s, t)| self.true_residual(&self.ritz_vector(s), *t))
                        .collect();
                    return Err(Error::NotConverged {
                        iterations: j,
                        worst_residual: residuals.iter().copied().fold(0.0, f64::max),
                        ritz_values: theta[..kk].to_vec(),
                        residuals,
                    });
                }
                let stride = if j < 200 { 10 } else { 25 };
                next_check = j + stride;
            }
            self.step();
        }
    }

    fn result(&self, eigenvalues: Vec<f64>, residuals: Vec<f64>, tol: f64) -> SpectrumResult {
        SpectrumResult { eigenvalues, residuals, iterations: self.alpha.len(), tol, seed: self.seed, grid: None }
    }
}

/// Lowest `k` eigenpairs (values and residual norms) of `h`.
pub fn lanczos_lowest(
    h: &SparseSymmetricOperator,
    k: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<SpectrumResult> {
    if k == 0 || k >= h.dim() {
        return Err(invalid("k", format!("need 1 <= k < {}, got {k}", h.dim())));
    }
    if !(tol > 0.0) {
        return Err(invalid("tol", format!("must be positive, got {tol}")));
    }
    LanczosState::new(h, seed)?.run_until(k, tol, max_iter)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenCount {
    pub lambda: f64,
    pub count: usize,
    /// Set when every requested eigenvalue was below `lambda`, so the true
    /// count may be larger.
    pub lower_bound: bool,
    pub k_used: usize,
    pub eigenvalues: Vec<f64>,
    pub iterations: usize,
}

/// Limits for [`eigen_count_below`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountBudget {
    pub k_max: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for CountBudget {
    fn default() -> Self {
        Self { k_max: 50, tol: 1e-8, max_iter: 5000, seed: 0 }
    }
}

/// Number of eigenvalues below `lambda`, growing `k` through 8, 16, 32, ...
/// (capped at `budget.k_max`) on a single resumed Lanczos run.
pub fn eigen_count_below(h: &SparseSymmetricOperator, lambda: f64, budget: &CountBudget) -> Result<EigenCount> {
    let cap = budget.k_max.min(h.dim()).max(1);
    let mut state = LanczosState::new(h, budget.seed)?;
    let mut k = 8.min(cap);
    loop {
        let res = state.run_until(k, budget.tol, budget.max_iter)?;
        let top = *res.eigenvalues.last().expect("k >= 1");
        if top >= lambda || k == cap {
            let count = res.eigenvalues.iter().filter(|v| **v < lambda).count();
            return Ok(EigenCount {
                lambda,
                count,
                lower_bound: top < lambda && k < h.dim(),
                k_used: k,
                eigenvalues: res.eigenvalues,
                iterations: res.iterations,
            });
        }
        k = (2 * k).min(cap);
    }
}
