//! Independent reference computations shared by the integration tests. None
//! of these go through the library's recurrences, quadrature or solvers; the
//! only shared piece is the double-double arithmetic type.
#![allow(dead_code)]

use orthoasym::measure::{BaseMeasureSpec, PolyInBasis, RecurrenceTable, WeightKind};
use orthoasym::modified::RationalModifier;
use orthoasym::numeric::{c, CDd, Dd, C64};
use orthoasym::sobolev::SobolevSpec;
use std::f64::consts::PI;

fn zero() -> CDd {
    CDd::from(c(0.0, 0.0))
}

/// Nodes and weights of a rule for `dμ` with no point masses, built from
/// closed forms (Chebyshev-type weights) or Newton on the Legendre
/// recurrence. Exact for polynomials of degree below `2m`.
pub fn oracle_rule(weight: &WeightKind, m: usize) -> Vec<(f64, f64)> {
    let theta = |k: usize| (2 * k + 1) as f64 * PI / (2 * m) as f64;
    match weight {
        WeightKind::ChebyshevFirstKind => (0..m).map(|k| (theta(k).cos(), PI / m as f64)).collect(),
        WeightKind::ChebyshevSecondKind => (0..m)
            .map(|k| (theta(k).cos(), PI / m as f64 * theta(k).sin().powi(2)))
            .collect(),
        WeightKind::Jacobi { alpha, beta }
            if ((alpha.abs() - 0.5).abs() < 1e-15) && ((beta.abs() - 0.5).abs() < 1e-15) =>
        {
            // (1-x)^a (1+x)^b dx = (1-cos)^(a+1/2) (1+cos)^(b+1/2) dθ
            (0..m)
                .map(|k| {
                    let x = theta(k).cos();
                    let w = (1.0 - x).powf(alpha + 0.5) * (1.0 + x).powf(beta + 0.5);
                    (x, PI / m as f64 * w)
                })
                .collect()
        }
        WeightKind::Legendre => gauss_legendre(m),
        WeightKind::Jacobi { alpha, beta } if *alpha == 0.0 && *beta == 0.0 => gauss_legendre(m),
        other => panic!("no oracle rule for {other:?}"),
    }
}

/// Gauss-Legendre by Newton iteration on the three-term recurrence.
pub fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        let mut x = (PI * (k as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=m {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if m == 0 { 1.0 } else { p1 };
            let pm1 = p0;
            dp = m as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Chebyshev values `T_0..=T_n` and their derivatives up to `order` at z.
pub fn chebyshev_jets(n: usize, z: CDd, order: usize) -> Vec<Vec<CDd>> {
    let mut t = vec![vec![zero(); order + 1]; n + 1];
    t[0][0] = CDd::from(c(1.0, 0.0));
    if n >= 1 {
        t[1][0] = z;
        if order >= 1 {
            t[1][1] = CDd::from(c(1.0, 0.0));
        }
    }
    let two = CDd::from(c(2.0, 0.0));
    for k in 1..n {
        for d in 0..=order {
            let mut v = two * z * t[k][d] - t[k - 1][d];
            if d > 0 {
                v += CDd::from(c(2.0 * d as f64, 0.0)) * t[k][d - 1];
            }
            t[k + 1][d] = v;
        }
    }
    t
}

/// Monomial coefficients of `T_0..=T_n` (exact integers for moderate n).
pub fn chebyshev_monomials(n: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![0.0; n + 1]; n + 1];
    t[0][0] = 1.0;
    if n >= 1 {
        t[1][1] = 1.0;
    }
    for k in 1..n {
        for j in 0..=n {
            let mut v = -t[k - 1][j];
            if j > 0 {
                v += 2.0 * t[k][j - 1];
            }
            t[k + 1][j] = v;
        }
    }
    t
}

/// Point functionals entering the bilinear form
/// `<h, g> = ∫ h g w dμ + sum_j sum_i h^{(i)}(c_j) L_{j,i}(g)`.
#[derive(Clone, Default)]
pub struct OracleForm {
    pub weight: Option<RationalModifier>,
    pub sobolev: Option<SobolevSpec>,
}

/// Monic degree-n orthogonal polynomial of the form on `spec`, by
/// Gram-Schmidt over the Chebyshev basis with double-double accumulation
/// and elimination. Returns monomial coefficients, lowest first.
pub fn gram_schmidt(n: usize, spec: &BaseMeasureSpec, form: &OracleForm, nodes: usize) -> Vec<C64> {
    let mut pts: Vec<(f64, f64)> = oracle_rule(&spec.weight, nodes);
    for mp in &spec.mass_points {
        pts.push((mp.location, mp.mass));
    }
    let mut gram = vec![vec![zero(); n + 1]; n + 1];
    for &(x, w) in &pts {
        let rw = match &form.weight {
            Some(r) => r.eval(c(x, 0.0)) * w,
            None => c(w, 0.0),
        };
        let t = chebyshev_jets(n, CDd::from(c(x, 0.0)), 0);
        let rw = CDd::from(rw);
        for k in 0..=n {
            let left = t[k][0] * rw;
            for m in 0..=n {
                gram[k][m] += left * t[m][0];
            }
        }
    }
    if let Some(s) = &form.sobolev {
        for term in &s.terms {
            let order = term.order.max(term.gamma[0].len() - 1);
            let t = chebyshev_jets(n, CDd::from(term.c), order);
            for k in 0..=n {
                for i in 0..=term.order {
                    for m in 0..=n {
                        let mut l = zero();
                        for (kk, g) in term.gamma[i].iter().enumerate() {
                            l += CDd::from(*g) * t[m][kk];
                        }
                        gram[k][m] += t[k][i] * l;
                    }
                }
            }
        }
    }
    // G[0..n, 0..n] s = -G[0..n, n], s_n = 1
    let mut a: Vec<Vec<CDd>> = (0..n)
        .map(|k| {
            let mut row = gram[k][..n].to_vec();
            row.push(-gram[k][n]);
            row
        })
        .collect();
    let sol = solve_dd(&mut a, n);
    let mut s = sol;
    s.push(CDd::from(c(1.0, 0.0)));
    let tm = chebyshev_monomials(n);
    let mut mono = vec![zero(); n + 1];
    for (k, sk) in s.iter().enumerate() {
        for j in 0..=k {
            mono[j] += sk.scale(Dd::new(tm[k][j]));
        }
    }
    let lead = mono[n];
    mono.iter().map(|v| (*v / lead).to_c64()).collect()
}

/// Gaussian elimination with partial pivoting on an augmented n x (n+1)
/// matrix.
pub fn solve_dd(a: &mut [Vec<CDd>], n: usize) -> Vec<CDd> {
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        let p = a[col][col];
        for row in col + 1..n {
            let f = a[row][col] / p;
            for k in col..=n {
                let v = a[col][k];
                a[row][k] = a[row][k] - f * v;
            }
        }
    }
    let mut x = vec![zero(); n];
    for row in (0..n).rev() {
        let mut v = a[row][n];
        for k in row + 1..n {
            v = v - a[row][k] * x[k];
        }
        x[row] = v / a[row][row];
    }
    x
}

/// Largest coefficient difference relative to the largest coefficient.
pub fn coeff_diff(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

/// Adaptive Simpson with Richardson correction on [lo, hi].
pub fn adaptive_simpson<F: Fn(f64) -> C64>(f: &F, lo: f64, hi: f64, tol: f64) -> C64 {
    fn rec<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64, fa: C64, fm: C64, fb: C64, whole: C64, tol: f64, depth: u32) -> C64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.norm() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb) = (f(lo), f(hi));
    let m = 0.5 * (lo + hi);
    let fm = f(m);
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, lo, hi, fa, fm, fb, whole, tol, 50)
}

/// `(1/pi) ∫ T_nu(x) / ((z - x) sqrt(1 - x^2)) dx` in the angle variable.
pub fn chebyshev_transform_quadrature(nu: u32, z: C64) -> C64 {
    let f = |t: f64| (nu as f64 * t).cos() / (z - t.cos());
    adaptive_simpson(&f, 0.0, PI, 1e-14) / PI
}

/// Value and derivative of a polynomial over the orthonormal basis of the
/// table, in double-double.
fn orth_eval_dd(coeffs: &[C64], table: &RecurrenceTable, z: CDd) -> (CDd, CDd) {
    let n = coeffs.len() - 1;
    let mut l_prev = zero();
    let mut d_prev = zero();
    let mut l = CDd::from(c(table.tau(0), 0.0));
    let mut d = zero();
    let mut val = l * CDd::from(coeffs[0]);
    let mut der = zero();
    for k in 0..n {
        let ak1 = Dd::new(table.a(k + 1));
        let bk = CDd::from(c(table.b(k), 0.0));
        let ak = CDd::from(c(table.a(k), 0.0));
        let shifted = z - bk;
        let l_next = (shifted * l - ak * l_prev) / CDd::from(ak1);
        let d_next = (shifted * d + l - ak * d_prev) / CDd::from(ak1);
        l_prev = l;
        d_prev = d;
        l = l_next;
        d = d_next;
        val += l * CDd::from(coeffs[k + 1]);
        der += d * CDd::from(coeffs[k + 1]);
    }
    (val, der)
}

/// Roots by Aberth-Ehrlich iteration in double-double, evaluating through
/// the recurrence of the table.
pub fn aberth_roots(p: &PolyInBasis, table: &RecurrenceTable) -> Vec<C64> {
    let orth = p.to_basis(table, orthoasym::measure::Basis::OrthonormalMu);
    let n = orth.coeffs.len() - 1;
    let mut z: Vec<CDd> = (0..n)
        .map(|k| {
            let t = 2.0 * PI * (k as f64 + 0.25) / n as f64;
            CDd::from(c(1.3 * t.cos(), 0.7 * t.sin()))
        })
        .collect();
    for _ in 0..500 {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let (v, d) = orth_eval_dd(&orth.coeffs, table, z[i]);
            if v.abs() == 0.0 {
                continue;
            }
            let ratio = v / d;
            let mut s = zero();
            for j in 0..n {
                if j != i {
                    s += CDd::from(c(1.0, 0.0)) / (z[i] - z[j]);
                }
            }
            let step = ratio / (CDd::from(c(1.0, 0.0)) - ratio * s);
            z[i] = z[i] - step;
            moved = moved.max(step.abs());
        }
        if moved < 1e-28 {
            break;
        }
    }
    let mut out: Vec<C64> = z.iter().map(|v| v.to_c64()).collect();
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    out
}

/// Greedy matching distance between two root sets.
pub fn root_set_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// Monomial coefficients of a polynomial given over a basis of the table,
/// built by repeated multiplication in double-double.
pub fn monomial_coefficients(p: &PolyInBasis, table: &RecurrenceTable) -> Vec<C64> {
    let orth = p.to_basis(table, orthoasym::measure::Basis::OrthonormalMu);
    let n = orth.coeffs.len() - 1;
    // l_k as monomial coefficient vectors
    let mut basis: Vec<Vec<CDd>> = Vec::with_capacity(n + 1);
    basis.push(vec![CDd::from(c(table.tau(0), 0.0))]);
    for k in 0..n {
        let mut next = vec![zero(); k + 2];
        for (j, v) in basis[k].iter().enumerate() {
            next[j + 1] += *v;
            next[j] = next[j] - v.scale(Dd::new(table.b(k)));
        }
        if k > 0 {
            for (j, v) in basis[k - 1].iter().enumerate() {
                next[j] = next[j] - v.scale(Dd::new(table.a(k)));
            }
        }
        let inv = Dd::new(table.a(k + 1)).recip();
        basis.push(next.into_iter().map(|v| v.scale(inv)).collect());
    }
    let mut out = vec![zero(); n + 1];
    for (k, ck) in orth.coeffs.iter().enumerate() {
        for (j, v) in basis[k].iter().enumerate() {
            out[j] += CDd::from(*ck) * *v;
        }
    }
    let lead = out[n];
    out.iter().map(|v| (*v / lead).to_c64()).collect()
}
