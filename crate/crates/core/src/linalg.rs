//! Small dense and tridiagonal symmetric eigenvalue routines.
//!
//! These serve the structure checks (2n x 2n matrices) and the Rayleigh-Ritz
//! step inside Lanczos. They are not meant for large dense problems.

/// Eigenvalues of a small symmetric matrix (row-major, `dim x dim`) by cyclic
/// Jacobi rotations. Returned in ascending order.
pub fn symmetric_eigenvalues(a: &[f64], dim: usize) -> Vec<f64> {
    assert_eq!(a.len(), dim * dim);
    let mut m = a.to_vec();
    let scale: f64 = m.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..dim {
            for q in (p + 1)..dim {
                off += m[p * dim + q] * m[p * dim + q];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = m[p * dim + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m[p * dim + p];
                let aqq = m[q * dim + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..dim {
                    let akp = m[k * dim + p];
                    let akq = m[k * dim + q];
                    m[k * dim + p] = c * akp - s * akq;
                    m[k * dim + q] = s * akp + c * akq;
                }
                for k in 0..dim {
                    let apk = m[p * dim + k];
                    let aqk = m[q * dim + k];
                    m[p * dim + k] = c * apk - s * aqk;
                    m[q * dim + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..dim).map(|i| m[i * dim + i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (`off.len() == diag.len() - 1`), by implicit QL with
/// Wilkinson shifts. Ascending order.
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    if n == 0 {
        return Vec::new();
    }
    assert_eq!(off.len() + 1, n);
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    d
}

/// Unit eigenvector of a symmetric tridiagonal matrix for the (accurate)
/// eigenvalue `lambda`, by inverse iteration with a tiny shift perturbation.
pub fn tridiagonal_eigenvector(diag: &[f64], off: &[f64], lambda: f64) -> Vec<f64> {
    let n = diag.len();
    let scale = diag
        .iter()
        .chain(off.iter())
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    let shift = lambda + 1e-13 * scale;
    // Deterministic start vector with no special structure.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7 + 3) % 11) as f64).collect();
    normalize(&mut v);
    for _ in 0..3 {
        v = solve_shifted_tridiagonal(diag, off, shift, &v);
        normalize(&mut v);
    }
    v
}

fn normalize(v: &mut [f64]) {
    let nrm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nrm > 0.0 {
        v.iter_mut().for_each(|a| *a /= nrm);
    }
}

/// Solves (T - shift I) y = b with partial pivoting (T tridiagonal).
fn solve_shifted_tridiagonal(diag: &[f64], off: &[f64], shift: f64, b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    if n == 1 {
        let p = diag[0] - shift;
        let p = if p.abs() < 1e-300 { 1e-300 } else { p };
        return vec![b[0] / p];
    }
    // Banded LU with pivoting: U has up to two superdiagonals.
    let tiny = 1e-300;
    let mut u0: Vec<f64> = diag.iter().map(|d| d - shift).collect();
    let mut u1: Vec<f64> = off.to_vec();
    u1.push(0.0);
    let mut u2 = vec![0.0; n];
    let mut lower = vec![0.0; n];
    let mut sub: Vec<f64> = off.to_vec();
    sub.push(0.0);
    let mut rhs = b.to_vec();
    for k in 0..n - 1 {
        if sub[k].abs() > u0[k].abs() {
            // swap rows k and k+1
            let (a0, a1, a2) = (u0[k], u1[k], u2[k]);
            u0[k] = sub[k];
            u1[k] = u0[k + 1];
            u2[k] = u1[k + 1];
            let piv = u0[k];
            let l = a0 / piv;
            lower[k] = l;
            u0[k + 1] = a1 - l * u1[k];
            u1[k + 1] = a2 - l * u2[k];
            rhs.swap(k, k + 1);
        } else {
            let piv = if u0[k].abs() < tiny { tiny } else { u0[k] };
            u0[k] = piv;
            let l = sub[k] / piv;
            lower[k] = l;
            u0[k + 1] -= l * u1[k];
            u1[k + 1] -= l * u2[k];
        }
        rhs[k + 1] -= lower[k] * rhs[k];
        sub[k] = 0.0;
    }
    if u0[n - 1].abs() < tiny {
        u0[n - 1] = tiny;
    }
    let mut y = vec![0.0; n];
    for k in (0..n).rev() {
        let mut acc = rhs[k];
        if k + 1 < n {
            acc -= u1[k] * y[k + 1];
        }
        if k + 2 < n {
            acc -= u2[k] * y[k + 2];
        }
        y[k] = acc / u0[k];
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonalizes_known_matrix() {
        // [[2,1],[1,2]] -> {1,3}
        let ev = symmetric_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn tridiagonal_matches_discrete_laplacian() {
        // 1-d Dirichlet Laplacian: 2 - 2 cos(k pi / (n+1))
        let n = 40;
        let d = vec![2.0; n];
        let e = vec![-1.0; n - 1];
        let ev = tridiagonal_eigenvalues(&d, &e);
        for (k, v) in ev.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-12, "{k}: {v} vs {exact}");
        }
    }

    #[test]
    fn inverse_iteration_gives_eigenvector() {
        let n = 30;
        let d: Vec<f64> = (0..n).map(|i| (i as f64).sin() * 3.0).collect();
        let e: Vec<f64> = (0..n - 1).map(|i| 1.0 + 0.1 * i as f64).collect();
        let ev = tridiagonal_eigenvalues(&d, &e);
        for &lam in &[ev[0], ev[5], ev[n - 1]] {
            let v = tridiagonal_eigenvector(&d, &e, lam);
            let mut res = 0.0_f64;
            for i in 0..n {
                let mut tv = d[i] * v[i];
                if i > 0 {
                    tv += e[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    tv += e[i] * v[i + 1];
                }
                res = res.max((tv - lam * v[i]).abs());
            }
            assert!(res < 1e-10, "residual {res}");
        }
    }
}
