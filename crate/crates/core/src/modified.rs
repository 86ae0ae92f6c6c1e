//! Orthogonal polynomials `Q_n` for `r dμ` with a complex rational factor
//! `r = S/T`. `S Q_n` is written as a short combination of the monic
//! polynomials of μ, `S Q_n = sum_k lambda_k L_{n+A-k}`, and the `A + B`
//! unknown coefficients come from divisibility by `S` and from the
//! orthogonality conditions that involve the poles of `r`.

use crate::error::{Error, Result};
use crate::linalg::solve_equilibrated;
use crate::measure::{
    basis_jets, Basis, BaseMeasureSpec, PolyInBasis, QuadratureRule, RecurrenceTable,
    TabulatedBasis,
};
use crate::numeric::{c, CompensatedSum, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Condition estimate above which a solve is treated as pre-asymptotic.
pub const COND_LIMIT: f64 = 1e10;
/// Agreement required between successive rule doublings.
pub const QUAD_TOL: f64 = 1e-12;
/// Extra Gauss nodes beyond the polynomial degree for integrands with poles.
pub const POLE_RULE_MARGIN: usize = 50;

/// `r(x) = prod (x - c_i)^{A_i} / prod (x - d_j)^{B_j}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RationalModifier {
    #[serde(default)]
    pub zeros: Vec<(C64, u32)>,
    #[serde(default)]
    pub poles: Vec<(C64, u32)>,
}

impl RationalModifier {
    pub fn new(zeros: Vec<(C64, u32)>, poles: Vec<(C64, u32)>) -> Self {
        RationalModifier { zeros, poles }
    }

    pub fn zero_degree(&self) -> usize {
        self.zeros.iter().map(|z| z.1 as usize).sum()
    }

    pub fn pole_degree(&self) -> usize {
        self.poles.iter().map(|p| p.1 as usize).sum()
    }

    pub fn is_trivial(&self) -> bool {
        self.zeros.is_empty() && self.poles.is_empty()
    }

    pub fn validate(&self, spec: &BaseMeasureSpec) -> Result<()> {
        let all: Vec<(C64, u32)> = self.zeros.iter().chain(&self.poles).copied().collect();
        for (i, &(p, m)) in all.iter().enumerate() {
            if m == 0 {
                return Err(Error::InvalidSpec(format!("zero multiplicity at {p}")));
            }
            if spec.distance_to_support(p) < 1e-12 {
                return Err(Error::InvalidSpec(format!("{p} lies on the support")));
            }
            if all[..i].iter().any(|q| (q.0 - p).norm() < 1e-12) {
                return Err(Error::InvalidSpec(format!(
                    "{p} repeated; give each factor once in lowest terms"
                )));
            }
        }
        Ok(())
    }

    /// `S(x)`.
    pub fn numerator(&self, x: C64) -> C64 {
        self.zeros
            .iter()
            .fold(c(1.0, 0.0), |acc, &(p, m)| acc * (x - p).powi(m as i32))
    }

    /// `T(x)`.
    pub fn denominator(&self, x: C64) -> C64 {
        self.poles
            .iter()
            .fold(c(1.0, 0.0), |acc, &(p, m)| acc * (x - p).powi(m as i32))
    }

    pub fn eval(&self, x: C64) -> C64 {
        self.numerator(x) / self.denominator(x)
    }
}

/// Integrate a batch of integrands on Gauss rules of size m0, 2 m0, ...
/// until two successive results agree. `f` returns `(value, scale)` pairs
/// where `scale` is the integral of the absolute integrand.
pub(crate) fn integrate_until_stable<F>(rule: &QuadratureRule, m0: usize, f: F) -> Result<Vec<C64>>
where
    F: Fn(&QuadratureRule) -> Result<Vec<(C64, f64)>>,
{
    let mut m = m0.max(2);
    let mut prev = f(&rule.resized(m)?)?;
    let mut change = f64::INFINITY;
    for _ in 0..4 {
        m *= 2;
        let next = f(&rule.resized(m)?)?;
        change = prev
            .iter()
            .zip(&next)
            .map(|(u, v)| (u.0 - v.0).norm() / v.1.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        prev = next;
        if change < QUAD_TOL {
            return Ok(prev.into_iter().map(|v| v.0).collect());
        }
    }
    Err(Error::QuadratureNonconvergence { change })
}

/// Weighted integral and absolute integral of tabulated values.
pub(crate) fn weighted(tab: &TabulatedBasis, values: impl Iterator<Item = C64>) -> (C64, f64) {
    let mut sum = CompensatedSum::new();
    let mut abs = 0.0;
    for (v, w) in values.zip(&tab.weights) {
        sum.add(v * *w);
        abs += v.norm() * w.abs();
    }
    (sum.value(), abs)
}

/// One member of the modified family.
#[derive(Debug, Clone)]
pub struct ModifiedOP {
    pub n: usize,
    /// lambda_0 = 1, lambda_1, ..., lambda_{A+B}
    pub lambda: Vec<C64>,
    /// `S Q_n` over the monic basis.
    pub rep: PolyInBasis,
    /// `Q_n` over the orthonormal basis.
    pub q: PolyInBasis,
    /// `∫ Q_n^2 r dμ`
    pub kappa_sq_inv: C64,
    /// `∫ x Q_n^2 r dμ`
    pub x_moment: C64,
    /// Condition estimate of the equilibrated system.
    pub cond: f64,
}

impl ModifiedOP {
    /// `kappa_n^2 = 1 / ∫ Q_n^2 r dμ`.
    pub fn kappa_sq(&self) -> C64 {
        1.0 / self.kappa_sq_inv
    }
}

/// `∫ l_j l_m / (x - d)^nu dμ` for every j in `rows` against a fixed m,
/// one entry per (pole, nu) pair in `poles`.
fn pole_integrals(
    rows: &[usize],
    m: usize,
    poles: &[(C64, u32)],
    table: &RecurrenceTable,
    rule: &QuadratureRule,
    m0: usize,
) -> Result<Vec<C64>> {
    let top = rows.iter().copied().max().unwrap_or(0).max(m);
    integrate_until_stable(rule, m0, |qr| {
        let tab = TabulatedBasis::new(table, qr, top, 0);
        let vals = &tab.values[0];
        let mut out = Vec::new();
        for &(d, mult) in poles {
            for nu in 1..=mult {
                let kernel: Vec<C64> = tab
                    .abscissae
                    .iter()
                    .map(|&x| 1.0 / (c(x, 0.0) - d).powi(nu as i32))
                    .collect();
                for &j in rows {
                    out.push(weighted(
                        &tab,
                        (0..tab.abscissae.len()).map(|i| kernel[i] * vals[j][i] * vals[m][i]),
                    ));
                }
            }
        }
        Ok(out)
    })
}

/// Build `Q_n` for `r dμ`. The table must reach degree `n + A + 1`.
pub fn solve_q(
    n: usize,
    r: &RationalModifier,
    table: &RecurrenceTable,
    rule: &QuadratureRule,
) -> Result<ModifiedOP> {
    let a = r.zero_degree();
    let b = r.pole_degree();
    let p = a + b;
    if n < p + 1 {
        return Err(Error::InvalidSpec(format!(
            "degree {n} too small for a modifier of total degree {p}"
        )));
    }
    if table.nmax() < n + a + 1 {
        return Err(Error::InvalidSpec(format!(
            "recurrence table stops at {}, need {}",
            table.nmax(),
            n + a + 1
        )));
    }

    let mut lambda = vec![c(1.0, 0.0)];
    let mut cond = 1.0;
    if p > 0 {
        let mut mat = DMatrix::from_element(p, p, c(0.0, 0.0));
        let mut rhs = vec![c(0.0, 0.0); p];
        let mut row = 0;
        for &(ci, ai) in &r.zeros {
            let jets = basis_jets(table, n + a, ci, ai as usize - 1, Basis::MonicMu);
            for nu in 0..ai as usize {
                rhs[row] = -jets[n + a][nu];
                for k in 1..=p {
                    mat[(row, k - 1)] = jets[n + a - k][nu];
                }
                row += 1;
            }
        }
        if b > 0 {
            let degs: Vec<usize> = (0..=p).map(|k| n + a - k).collect();
            let ints = pole_integrals(&degs, n - b, &r.poles, table, rule, n + p + POLE_RULE_MARGIN)?;
            for chunk in ints.chunks(p + 1) {
                // convert l_{n+A-k} to L_{n+A-k}
                rhs[row] = -chunk[0] / table.tau(degs[0]);
                for k in 1..=p {
                    mat[(row, k - 1)] = chunk[k] / table.tau(degs[k]);
                }
                row += 1;
            }
        }
        let out = solve_equilibrated(&mat, &rhs).map_err(|e| match e {
            Error::SingularSystem { cond, .. } => Error::SingularSystem { n, cond },
            other => other,
        })?;
        if out.cond > COND_LIMIT || out.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem { n, cond: out.cond });
        }
        cond = out.cond;
        lambda.extend(out.x);
    }

    let mut rep_coeffs = vec![c(0.0, 0.0); n + a + 1];
    for (k, l) in lambda.iter().enumerate() {
        rep_coeffs[n + a - k] = *l;
    }
    let rep = PolyInBasis::new(Basis::MonicMu, rep_coeffs);

    // Q_n = R_n / S by projection on the orthonormal basis; the rule is exact
    // for the polynomial integrands involved
    let exact = rule.resized(n + a + 2)?;
    let tab = TabulatedBasis::new(table, &exact, n + a, 0);
    let r_vals = tab.poly_values(table, &rep, 0);
    let quotient: Vec<C64> = tab
        .abscissae
        .iter()
        .zip(&r_vals)
        .map(|(&x, v)| v / r.numerator(c(x, 0.0)))
        .collect();
    let coeffs: Vec<C64> = (0..=n)
        .map(|k| tab.integrate(&quotient.iter().zip(&tab.values[0][k]).map(|(v, l)| v * l).collect::<Vec<_>>()))
        .collect();
    let q = PolyInBasis::new(Basis::OrthonormalMu, coeffs);
    let lead = q.leading_coefficient(table);
    if q.degree() != Some(n) || (lead - 1.0).norm() > 1e-6 {
        return Err(Error::PreAsymptotic {
            n,
            reason: format!("quotient by the numerator is not monic of degree n (lead {lead})"),
        });
    }

    let (kappa_sq_inv, x_moment) = if b == 0 {
        let qv = tab.poly_values(table, &q, 0);
        let rv: Vec<C64> = tab.abscissae.iter().map(|&x| r.eval(c(x, 0.0))).collect();
        let k0 = weighted(&tab, (0..qv.len()).map(|i| qv[i] * qv[i] * rv[i])).0;
        let k1 = weighted(&tab, (0..qv.len()).map(|i| tab.abscissae[i] * qv[i] * qv[i] * rv[i])).0;
        (k0, k1)
    } else {
        let v = integrate_until_stable(rule, n + p + POLE_RULE_MARGIN, |qr| {
            let t = TabulatedBasis::new(table, qr, n, 0);
            let qv = t.poly_values(table, &q, 0);
            let rv: Vec<C64> = t.abscissae.iter().map(|&x| r.eval(c(x, 0.0))).collect();
            Ok(vec![
                weighted(&t, (0..qv.len()).map(|i| qv[i] * qv[i] * rv[i])),
                weighted(&t, (0..qv.len()).map(|i| t.abscissae[i] * qv[i] * qv[i] * rv[i])),
            ])
        })?;
        (v[0], v[1])
    };
    if !(kappa_sq_inv.norm() > 0.0) {
        return Err(Error::PreAsymptotic {
            n,
            reason: "vanishing norm integral".into(),
        });
    }

    Ok(ModifiedOP {
        n,
        lambda,
        rep,
        q,
        kappa_sq_inv,
        x_moment,
        cond,
    })
}

/// Coefficients of `x p` over the orthonormal basis.
pub fn times_x(p: &PolyInBasis, table: &RecurrenceTable) -> PolyInBasis {
    assert_eq!(p.basis, Basis::OrthonormalMu);
    let len = p.coeffs.len() + 1;
    let mut out = vec![c(0.0, 0.0); len];
    for (k, v) in p.coeffs.iter().enumerate() {
        out[k + 1] += v * table.a(k + 1);
        out[k] += v * table.b(k);
        if k > 0 {
            out[k - 1] += v * table.a(k);
        }
    }
    PolyInBasis::new(Basis::OrthonormalMu, out)
}

/// Recurrence data at one index.
#[derive(Debug, Clone, Copy)]
pub struct RecurrenceStep {
    pub alpha_sq: C64,
    pub beta: C64,
    /// Relative residual of `Q_{n+1} = (x - beta) Q_n - alpha^2 Q_{n-1}`.
    pub residual: f64,
}

/// `beta_n = kappa_n^2 ∫ x Q_n^2 r dμ`, `alpha_n^2 = kappa_{n-1}^2 / kappa_n^2`.
pub fn recurrence_extract(
    prev: &ModifiedOP,
    cur: &ModifiedOP,
    next: &ModifiedOP,
    table: &RecurrenceTable,
) -> Result<RecurrenceStep> {
    if prev.n + 1 != cur.n || cur.n + 1 != next.n {
        return Err(Error::InvalidSpec("recurrence needs consecutive degrees".into()));
    }
    if prev.kappa_sq_inv.norm() == 0.0 || cur.kappa_sq_inv.norm() == 0.0 {
        return Err(Error::PreAsymptotic {
            n: cur.n,
            reason: "vanishing norm integral".into(),
        });
    }
    let beta = cur.x_moment / cur.kappa_sq_inv;
    let alpha_sq = cur.kappa_sq_inv / prev.kappa_sq_inv;
    let xq = times_x(&cur.q, table);
    let parts = [
        (next.q.clone(), c(1.0, 0.0)),
        (xq, c(-1.0, 0.0)),
        (cur.q.clone(), beta),
        (prev.q.clone(), alpha_sq),
    ];
    let len = parts.iter().map(|p| p.0.coeffs.len()).max().unwrap();
    let mut res = vec![c(0.0, 0.0); len];
    let mut scale = 0.0;
    for (poly, s) in &parts {
        let mut norm = 0.0;
        for (k, v) in poly.coeffs.iter().enumerate() {
            res[k] += v * s;
            norm += (v * s).norm_sqr();
        }
        scale += norm.sqrt();
    }
    let residual = res.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() / scale;
    Ok(RecurrenceStep {
        alpha_sq,
        beta,
        residual,
    })
}

/// Largest `|∫ l_k Q_n r dμ|` for k < n, each relative to `∫ |l_k Q_n r| dμ`.
pub fn orthogonality_residual(
    op: &ModifiedOP,
    r: &RationalModifier,
    table: &RecurrenceTable,
    rule: &QuadratureRule,
) -> Result<f64> {
    let n = op.n;
    let eval = |qr: &QuadratureRule| -> Result<Vec<(C64, f64)>> {
        let tab = TabulatedBasis::new(table, qr, n, 0);
        let qv = tab.poly_values(table, &op.q, 0);
        let qr_vals: Vec<C64> = tab
            .abscissae
            .iter()
            .zip(&qv)
            .map(|(&x, v)| v * r.eval(c(x, 0.0)))
            .collect();
        Ok((0..n)
            .map(|k| weighted(&tab, (0..qv.len()).map(|i| qr_vals[i] * tab.values[0][k][i])))
            .collect())
    };
    let m0 = n + r.zero_degree() + r.pole_degree() + POLE_RULE_MARGIN;
    let (vals, scales) = if r.poles.is_empty() {
        let v = eval(&rule.resized(n + r.zero_degree() + 2)?)?;
        (v.iter().map(|x| x.0).collect::<Vec<_>>(), v.iter().map(|x| x.1).collect::<Vec<_>>())
    } else {
        let vals = integrate_until_stable(rule, m0, &eval)?;
        let scales = eval(&rule.resized(2 * m0)?)?.into_iter().map(|x| x.1).collect();
        (vals, scales)
    };
    Ok(vals
        .iter()
        .zip(&scales)
        .map(|(v, s)| v.norm() / s.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max))
}

/// Largest `|R_n^{(nu)}(c_i)|` relative to the sum of the absolute terms
/// that make it up.
pub fn divisibility_residual(op: &ModifiedOP, r: &RationalModifier, table: &RecurrenceTable) -> f64 {
    let d = op.rep.degree_or_zero();
    let mut worst: f64 = 0.0;
    for &(ci, ai) in &r.zeros {
        let order = ai as usize - 1;
        let jets = basis_jets(table, d, ci, order, Basis::MonicMu);
        let val = op.rep.combine_jets(&jets, order);
        let abs = op.rep.abs_jet(&jets, order);
        for nu in 0..=order {
            worst = worst.max(val[nu].norm() / abs[nu].max(f64::MIN_POSITIVE));
        }
    }
    worst
}

/// Orthonormalized family over consecutive degrees with the branch of
/// `kappa_n` carried along by `kappa_{n+1} = kappa_n / alpha_{n+1}`.
#[derive(Debug, Clone)]
pub struct OrthonormalChain {
    pub start: usize,
    pub ops: Vec<ModifiedOP>,
    pub kappa: Vec<C64>,
}

impl OrthonormalChain {
    pub fn build(
        start: usize,
        end: usize,
        r: &RationalModifier,
        table: &RecurrenceTable,
        rule: &QuadratureRule,
    ) -> Result<Self> {
        let ops = (start..=end)
            .map(|n| solve_q(n, r, table, rule))
            .collect::<Result<Vec<_>>>()?;
        let mut kappa = vec![ops[0].kappa_sq().sqrt()];
        for w in ops.windows(2) {
            let alpha = (w[1].kappa_sq_inv / w[0].kappa_sq_inv).sqrt();
            let prev = *kappa.last().unwrap();
            kappa.push(prev / alpha);
        }
        Ok(OrthonormalChain { start, ops, kappa })
    }

    pub fn op(&self, n: usize) -> &ModifiedOP {
        &self.ops[n - self.start]
    }

    pub fn kappa(&self, n: usize) -> C64 {
        self.kappa[n - self.start]
    }
}

/// Result of a weak-limit comparison.
#[derive(Debug, Clone, Copy)]
pub struct WeakLimit {
    pub lhs: C64,
    pub rhs: C64,
}

/// `(1/pi) ∫ f(x) T_nu(x) / sqrt(1 - x^2) dx` by Gauss-Chebyshev quadrature.
pub fn chebyshev_moment(f: &PolyInBasis, nu: usize, table: &RecurrenceTable) -> C64 {
    let m = f.degree_or_zero() + nu + 2;
    (1..=m)
        .map(|k| {
            let theta = (2 * k - 1) as f64 * std::f64::consts::PI / (2 * m) as f64;
            f.eval(table, c(theta.cos(), 0.0)) * (nu as f64 * theta).cos() / m as f64
        })
        .collect::<CompensatedSum>()
        .value()
}

/// Compare `∫ f q_n q_{n+nu} r dμ` with `(1/pi) ∫ f T_nu / sqrt(1 - x^2) dx`
/// where `q_n = kappa_n Q_n` are orthonormalized along the chain.
pub fn weak_limit_probe(
    f: &PolyInBasis,
    nu: usize,
    n: usize,
    r: &RationalModifier,
    table: &RecurrenceTable,
    rule: &QuadratureRule,
) -> Result<WeakLimit> {
    let chain = OrthonormalChain::build(n, n + nu, r, table, rule)?;
    let lhs = weak_limit_lhs(&chain, f, nu, n, r, table, rule)?;
    Ok(WeakLimit {
        lhs,
        rhs: chebyshev_moment(f, nu, table),
    })
}

/// `∫ f q_n q_{n+nu} r dμ` on an existing chain.
pub fn weak_limit_lhs(
    chain: &OrthonormalChain,
    f: &PolyInBasis,
    nu: usize,
    n: usize,
    r: &RationalModifier,
    table: &RecurrenceTable,
    rule: &QuadratureRule,
) -> Result<C64> {
    let qa = &chain.op(n).q;
    let qb = &chain.op(n + nu).q;
    let deg = f.degree_or_zero().max(n + nu);
    let m0 = n + nu + f.degree_or_zero() + r.zero_degree() + r.pole_degree() + POLE_RULE_MARGIN;
    let v = integrate_until_stable(rule, m0, |qr| {
        let tab = TabulatedBasis::new(table, qr, deg, 0);
        let fa = tab.poly_values(table, f, 0);
        let va = tab.poly_values(table, qa, 0);
        let vb = tab.poly_values(table, qb, 0);
        Ok(vec![weighted(
            &tab,
            (0..va.len()).map(|i| fa[i] * va[i] * vb[i] * r.eval(c(tab.abscissae[i], 0.0))),
        )])
    })?;
    Ok(v[0] * chain.kappa(n) * chain.kappa(n + nu))
}

/// `∫ l_{n+k} l_n / (z - x)^nu dμ`.
pub fn bilinear_pole_integral(
    n: usize,
    k: i64,
    nu: u32,
    z: C64,
    table: &RecurrenceTable,
    rule: &QuadratureRule,
) -> Result<C64> {
    let m = n as i64 + k;
    if m < 0 || m as usize > table.nmax() || n > table.nmax() {
        return Err(Error::InvalidSpec(format!("index {m} outside the table")));
    }
    let m = m as usize;
    let top = m.max(n);
    let v = integrate_until_stable(rule, top + POLE_RULE_MARGIN, |qr| {
        let tab = TabulatedBasis::new(table, qr, top, 0);
        let vals = &tab.values[0];
        Ok(vec![weighted(
            &tab,
            (0..tab.abscissae.len())
                .map(|i| vals[m][i] * vals[n][i] / (z - tab.abscissae[i]).powi(nu as i32)),
        )])
    })?;
    Ok(v[0])
}
