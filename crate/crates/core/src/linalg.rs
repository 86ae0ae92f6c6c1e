//! Small dense and tridiagonal linear algebra.

use crate::error::{Error, Result};
use crate::numeric::C64;
use nalgebra::{DMatrix, DVector};

/// Eigenvalues and first eigenvector components of the symmetric tridiagonal
/// matrix with diagonal `diag` and off-diagonal `offdiag` (length n-1), by
/// implicit QL with Wilkinson-type shifts. Eigenvalues come back ascending.
pub fn tridiag_eigen(diag: &[f64], offdiag: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    if n == 0 {
        return Ok((vec![], vec![]));
    }
    if offdiag.len() + 1 != n {
        return Err(Error::InvalidSpec(format!(
            "tridiagonal sizes {} and {} do not match",
            n,
            offdiag.len()
        )));
    }
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(offdiag);
    let mut z = vec![0.0; n];
    z[0] = 1.0;

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
                return Err(Error::EigenFailure(format!(
                    "QL iteration did not converge for eigenvalue {l}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut cs, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = cs * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                cs = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * cs * b;
                p = s * r;
                d[i + 1] = g + p;
                g = cs * r - b;
                let fz = z[i + 1];
                z[i + 1] = s * z[i] + cs * fz;
                z[i] = cs * z[i] - s * fz;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    Ok((
        idx.iter().map(|&i| d[i]).collect(),
        idx.iter().map(|&i| z[i]).collect(),
    ))
}

/// Solution of a small dense complex system together with the 2-norm
/// condition estimate of the equilibrated matrix.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub x: Vec<C64>,
    pub cond: f64,
}

/// Solve `a x = b` after row and column equilibration. The condition estimate
/// refers to the equilibrated matrix, which is what governs the accuracy of
/// the computed `x`.
pub fn solve_equilibrated(a: &DMatrix<C64>, b: &[C64]) -> Result<SolveOutcome> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.len());
    if n == 0 {
        return Ok(SolveOutcome {
            x: vec![],
            cond: 1.0,
        });
    }
    let mut m = a.clone();
    let mut rhs = DVector::from_column_slice(b);
    for i in 0..n {
        let s = m.row(i).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if s > 0.0 {
            for j in 0..n {
                m[(i, j)] /= s;
            }
            rhs[i] /= s;
        }
    }
    let mut col_scale = vec![1.0; n];
    for j in 0..n {
        let s = m.column(j).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if s > 0.0 {
            col_scale[j] = s;
            for i in 0..n {
                m[(i, j)] /= s;
            }
        }
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !cond.is_finite() {
        return Err(Error::SingularSystem { n, cond });
    }
    let y = m
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularSystem { n, cond })?;
    let x = y
        .iter()
        .zip(&col_scale)
        .map(|(v, s)| v / s)
        .collect();
    Ok(SolveOutcome { x, cond })
}

/// Eigenvalues of a general complex matrix via the complex Schur form.
pub fn complex_eigenvalues(m: DMatrix<C64>) -> Result<Vec<C64>> {
    let n = m.nrows();
    let schur = m
        .try_schur(f64::EPSILON, 10_000)
        .ok_or_else(|| Error::EigenFailure(format!("Schur iteration failed for size {n}")))?;
    schur
        .eigenvalues()
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::EigenFailure("Schur form not triangular".into()))
}
