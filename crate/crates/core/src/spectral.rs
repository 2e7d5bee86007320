//! Finite-difference discretization of `L + V_alpha` on a Dirichlet box.
//!
//! Each horizontal field is discretized as a first-order factor
//!
//! ```text
//! (D_j u)(r) = (u(r) - u(r - e_j)) / h_x + sum_k c_jk(x(r)) (u(r) - u(r - e_tk)) / h_t
//! ```
//!
//! with `c_jk = 1/2 (J_k x)_j` and zero values outside the box. Because
//! `c_jk` does not depend on `x_j` or `t`, the symmetric form
//! `sum_j D_j^T D_j` is a second-order approximation of `-sum_j X_j^2`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::group::{GroupPoint, HVec, MetivierStructure};
use crate::lanczos::{lanczos_lowest, SpectrumResult};
use crate::norm::{check_alpha, kaplan_norm};
use crate::potential::potential_unchecked;
use crate::sparse::{CsrMatrix, SparseSymmetricOperator};

/// Cell-midpoint grid on `[-lx, lx]^{2n} x [-lt, lt]^m`. Even counts keep the
/// origin off the grid; at a node with `x = 0` the potential is taken as `0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    pub lx: f64,
    pub lt: f64,
    pub nx: usize,
    pub nt: usize,
}

impl Grid3 {
    pub fn new(lx: f64, lt: f64, nx: usize, nt: usize) -> Result<Self> {
        if !(lx > 0.0 && lt > 0.0) || !lx.is_finite() || !lt.is_finite() {
            return Err(invalid("grid", format!("half-widths must be positive, got lx = {lx}, lt = {lt}")));
        }
        if nx < 3 || nt < 3 {
            return Err(invalid("grid", format!("need at least 3 points per axis, got nx = {nx}, nt = {nt}")));
        }
        Ok(Self { lx, lt, nx, nt })
    }

    pub fn hx(&self) -> f64 {
        2.0 * self.lx / self.nx as f64
    }

    pub fn ht(&self) -> f64 {
        2.0 * self.lt / self.nt as f64
    }

    fn axis_counts(&self, s: &MetivierStructure) -> Vec<usize> {
        std::iter::repeat(self.nx).take(s.dim_x()).chain(std::iter::repeat(self.nt).take(s.m())).collect()
    }

    pub fn node_count(&self, s: &MetivierStructure) -> usize {
        self.axis_counts(s).iter().product()
    }

    fn coord(&self, s: &MetivierStructure, axis: usize, i: usize) -> f64 {
        if axis < s.dim_x() {
            -self.lx + (i as f64 + 0.5) * self.hx()
        } else {
            -self.lt + (i as f64 + 0.5) * self.ht()
        }
    }

    /// Node with the given multi-index (x axes first, last axis fastest).
    pub fn node(&self, s: &MetivierStructure, multi: &[usize]) -> GroupPoint {
        let d = s.dim_x();
        GroupPoint {
            x: (0..d).map(|a| self.coord(s, a, multi[a])).collect(),
            t: (0..s.m()).map(|k| self.coord(s, d + k, multi[d + k])).collect(),
        }
    }

    pub fn nodes(&self, s: &MetivierStructure) -> Vec<GroupPoint> {
        let counts = self.axis_counts(s);
        (0..self.node_count(s)).map(|i| self.node(s, &unflatten(i, &counts))).collect()
    }

    /// Whether `self` sits inside `larger` with node-aligned coordinates.
    pub fn nests_in(&self, larger: &Grid3) -> bool {
        let aligned = |h: f64, hl: f64, l: f64, ll: f64| {
            let shift = (ll - l) / h;
            (h - hl).abs() <= 1e-12 * h && (shift - shift.round()).abs() <= 1e-9 && ll >= l - 1e-12
        };
        aligned(self.hx(), larger.hx(), self.lx, larger.lx) && aligned(self.ht(), larger.ht(), self.lt, larger.lt)
    }
}

fn unflatten(mut idx: usize, counts: &[usize]) -> Vec<usize> {
    let mut out = vec![0; counts.len()];
    for a in (0..counts.len()).rev() {
        out[a] = idx % counts[a];
        idx /= counts[a];
    }
    out
}

fn flatten(multi: &[usize], counts: &[usize]) -> usize {
    multi.iter().zip(counts).fold(0, |acc, (i, c)| acc * c + i)
}

/// The factor `D_j` (zero-based `j`) as a `(nx+1)^{2n}(nt+1)^m x N` matrix.
pub fn assemble_derivative(s: &MetivierStructure, grid: &Grid3, j: usize) -> Result<CsrMatrix> {
    let d = s.dim_x();
    if j >= d {
        return Err(invalid("j", format!("index {j} out of range for {d} horizontal fields")));
    }
    let counts = grid.axis_counts(s);
    let padded: Vec<usize> = counts.iter().map(|c| c + 1).collect();
    let rows: usize = padded.iter().product();
    let cols: usize = counts.iter().product();
    let (hx, ht) = (grid.hx(), grid.ht());
    let mut trip = Vec::with_capacity(rows * (2 + 2 * s.m()));
    let mut jk: HVec = smallvec::smallvec![0.0; d];
    for r in 0..rows {
        let multi = unflatten(r, &padded);
        let inside = |m: &[usize]| m.iter().zip(&counts).all(|(i, c)| i < c);
        let mut push = |m: &[usize], v: f64| {
            if inside(m) {
                trip.push((r, flatten(m, &counts), v));
            }
        };
        push(&multi, 1.0 / hx);
        if multi[j] > 0 {
            let mut m = multi.clone();
            m[j] -= 1;
            push(&m, -1.0 / hx);
        }
        let x: HVec = (0..d).map(|a| grid.coord(s, a, multi[a])).collect();
        for k in 0..s.m() {
            s.apply_jk(k, &x, &mut jk);
            let c = 0.5 * jk[j];
            if c == 0.0 {
                continue;
            }
            push(&multi, c / ht);
            if multi[d + k] > 0 {
                let mut m = multi.clone();
                m[d + k] -= 1;
                push(&m, -c / ht);
            }
        }
    }
    Ok(CsrMatrix::from_triplets(rows, cols, trip))
}

/// Triplets of `sum_j D_j^T D_j`.
fn kinetic_triplets(s: &MetivierStructure, grid: &Grid3) -> Result<Vec<(usize, usize, f64)>> {
    let mut trip = Vec::new();
    for j in 0..s.dim_x() {
        trip.extend(assemble_derivative(s, grid, j)?.gram_triplets());
    }
    Ok(trip)
}

/// `sum_j D_j^T D_j` alone (zero potential).
pub fn assemble_kinetic(s: &MetivierStructure, grid: &Grid3) -> Result<SparseSymmetricOperator> {
    Ok(SparseSymmetricOperator::from_triplets(grid.node_count(s), kinetic_triplets(s, grid)?))
}

/// `H = sum_j D_j^T D_j + diag(V_alpha(nodes))`.
pub fn assemble_operator(alpha: f64, s: &MetivierStructure, grid: &Grid3) -> Result<SparseSymmetricOperator> {
    check_alpha(alpha)?;
    let mut trip = kinetic_triplets(s, grid)?;
    for (i, p) in grid.nodes(s).iter().enumerate() {
        trip.push((i, i, potential_unchecked(alpha, s, p)));
    }
    Ok(SparseSymmetricOperator::from_triplets(grid.node_count(s), trip))
}

/// `H` restricted to the nodes with `N < radius` (the potential is `+inf`
/// outside that ball).
pub fn assemble_clamped(
    alpha: f64,
    s: &MetivierStructure,
    grid: &Grid3,
    radius: f64,
) -> Result<SparseSymmetricOperator> {
    if !(radius > 0.0) {
        return Err(invalid("radius", format!("must be positive, got {radius}")));
    }
    let h = assemble_operator(alpha, s, grid)?;
    let keep: Vec<usize> =
        grid.nodes(s).iter().enumerate().filter(|(_, p)| kaplan_norm(s, p) < radius).map(|(i, _)| i).collect();
    if keep.is_empty() {
        return Err(invalid("radius", "no grid node lies inside the clamping ball"));
    }
    Ok(h.restrict(&keep))
}

/// Lowest eigenvalues on one box of a study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxRow {
    pub grid: Grid3,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    /// `max_i |lambda_i - lambda_i^prev| / |lambda_i^prev|` against the previous box.
    pub max_rel_change: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Restrict to `N < radius` when set.
    pub clamp_radius: Option<f64>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 5000, seed: 0, clamp_radius: None }
    }
}

/// Solves on each box of a nested sequence and records successive relative changes.
pub fn box_convergence_study(
    alpha: f64,
    s: &MetivierStructure,
    boxes: &[Grid3],
    k: usize,
    settings: &SolverSettings,
) -> Result<Vec<BoxRow>> {
    for w in boxes.windows(2) {
        if !w[0].nests_in(&w[1]) {
            return Err(invalid("boxes", "each box must nest node-aligned inside the next"));
        }
    }
    let mut rows: Vec<BoxRow> = Vec::with_capacity(boxes.len());
    for g in boxes {
        let res = solve_box(alpha, s, g, k, settings)?;
        let max_rel_change = rows.last().map(|prev| {
            prev.eigenvalues
                .iter()
                .zip(&res.eigenvalues)
                .map(|(a, b)| (b - a).abs() / a.abs().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max)
        });
        rows.push(BoxRow {
            grid: *g,
            eigenvalues: res.eigenvalues,
            residuals: res.residuals,
            iterations: res.iterations,
            max_rel_change,
        });
    }
    Ok(rows)
}

/// Assembles and solves for the lowest `k` eigenvalues on one box.
pub fn solve_box(
    alpha: f64,
    s: &MetivierStructure,
    grid: &Grid3,
    k: usize,
    settings: &SolverSettings,
) -> Result<SpectrumResult> {
    let h = match settings.clamp_radius {
        Some(r) => assemble_clamped(alpha, s, grid, r)?,
        None => assemble_operator(alpha, s, grid)?,
    };
    let mut res = lanczos_lowest(&h, k, settings.tol, settings.max_iter, settings.seed)?;
    res.grid = Some(*grid);
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::make_heisenberg;

    #[test]
    fn grid_validation_and_spacing() {
        assert!(Grid3::new(1.0, 1.0, 2, 5).is_err());
        assert!(Grid3::new(0.0, 1.0, 5, 5).is_err());
        let g = Grid3::new(3.0, 8.0, 24, 24).unwrap();
        assert_eq!(g.hx(), 0.25);
        let big = Grid3::new(3.0, 16.0, 24, 48).unwrap();
        assert!(g.nests_in(&big));
        assert!(!big.nests_in(&g));
        assert!(!Grid3::new(3.0, 16.0, 24, 40).unwrap().nests_in(&Grid3::new(3.0, 17.0, 24, 40).unwrap()));
    }

    #[test]
    fn origin_is_never_a_node() {
        let h = make_heisenberg();
        for n in [4, 6, 8] {
            let g = Grid3::new(1.0, 1.0, n, n).unwrap();
            assert!(g.nodes(&h).iter().all(|p| !p.is_identity()));
        }
        // odd counts put a node on the origin
        assert!(Grid3::new(1.0, 1.0, 3, 3).unwrap().nodes(&h).iter().any(|p| p.is_identity()));
    }

    #[test]
    fn derivative_of_constants_and_coordinates() {
        let h = make_heisenberg();
        let g = Grid3::new(1.0, 1.0, 8, 8).unwrap();
        let nodes = g.nodes(&h);
        let padded = [9usize, 9, 9];
        for j in 0..2 {
            let d = assemble_derivative(&h, &g, j).unwrap();
            let mut out = vec![0.0; d.rows];
            d.matvec(&vec![1.0; nodes.len()], &mut out);
            let xj: Vec<f64> = nodes.iter().map(|p| p.x[j]).collect();
            let mut dx = vec![0.0; d.rows];
            d.matvec(&xj, &mut dx);
            let t: Vec<f64> = nodes.iter().map(|p| p.t[0]).collect();
            let mut dt = vec![0.0; d.rows];
            d.matvec(&t, &mut dt);
            for r in 0..d.rows {
                let m = unflatten(r, &padded);
                // interior rows: both neighbours exist in every direction
                if m.iter().all(|i| *i >= 1 && *i < 8) {
                    assert!(out[r].abs() < 1e-12);
                    assert!((dx[r] - 1.0).abs() < 1e-12);
                    let p = g.node(&h, &m);
                    let c = if j == 0 { p.x[1] / 2.0 } else { -p.x[0] / 2.0 };
                    assert!((dt[r] - c).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_potential_is_positive_semidefinite() {
        let h = make_heisenberg();
        let g = Grid3::new(1.0, 1.0, 5, 5).unwrap();
        let k = assemble_kinetic(&h, &g).unwrap();
        assert_eq!(k.symmetry_defect(), 0.0);
        let ev = crate::linalg::symmetric_eigenvalues(&k.to_dense(), k.dim());
        assert!(ev[0] >= -1e-10);
    }

    /// Max error of the kinetic part on `u = exp(-|x|^2 - t^2)`, for which
    /// `sum_j X_j^2 u = (-4 + 7/2 |x|^2 + |x|^2 t^2) u` on the Heisenberg group.
    fn consistency_error(n: usize) -> f64 {
        let h = make_heisenberg();
        let g = Grid3::new(4.0, 4.0, n, n).unwrap();
        let k = assemble_kinetic(&h, &g).unwrap();
        let nodes = g.nodes(&h);
        let f = |p: &GroupPoint| (-p.x_norm_sq() - p.t_norm_sq()).exp();
        let u: Vec<f64> = nodes.iter().map(f).collect();
        let mut ku = vec![0.0; u.len()];
        k.matvec(&u, &mut ku);
        nodes
            .iter()
            .zip(&ku)
            .map(|(p, v)| {
                let r2 = p.x_norm_sq();
                (v + (-4.0 + 3.5 * r2 + r2 * p.t_norm_sq()) * f(p)).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn second_order_consistency() {
        let e1 = consistency_error(32);
        let e2 = consistency_error(64);
        let ratio = e1 / e2;
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio} ({e1}, {e2})");
    }

    #[test]
    fn clamped_spectrum_is_box_independent() {
        let h = make_heisenberg();
        let small = Grid3::new(1.5, 1.5, 9, 9).unwrap();
        let big = Grid3::new(2.5, 2.5, 15, 15).unwrap();
        assert!(small.nests_in(&big));
        let settings = SolverSettings { clamp_radius: Some(1.4), ..Default::default() };
        let rows = box_convergence_study(3.0, &h, &[small, big], 4, &settings).unwrap();
        for (a, b) in rows[0].eigenvalues.iter().zip(&rows[1].eigenvalues) {
            assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "{a} vs {b}");
        }
    }
}
