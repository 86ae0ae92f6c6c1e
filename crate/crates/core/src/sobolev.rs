//! Monic orthogonal polynomials `S_n` for generalized discrete Sobolev inner
//! products
//!
//! `<h, g> = ∫ h g dμ + sum_j sum_i h^{(i)}(c_j) L_{j,i}(g; c_j)`,
//! `L_{j,i}(g; c) = sum_k gamma^j_{i,k} g^{(k)}(c)`.
//!
//! Two constructions are provided. [`sn_kernel`] handles the diagonal
//! positive case through the reproducing kernel of μ. [`sn_lambda`] handles
//! any regular product by combining the orthogonal polynomials of `s dμ`,
//! `s = prod (x - c_j)^{N_j + 1}`.

use crate::error::{Error, Result};
use crate::joukowski::phi;
use crate::linalg::solve_equilibrated;
use crate::measure::{basis_jets, Basis, PolyInBasis, QuadratureRule, RecurrenceTable, TabulatedBasis};
use crate::modified::{solve_q, times_x, weighted, ModifiedOP, RationalModifier, COND_LIMIT};
use crate::numeric::{binomial, c, factorial, CompensatedSum, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Point functionals attached to one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevTerm {
    pub c: C64,
    #[serde(rename = "N")]
    pub order: usize,
    /// `gamma[i][k]`, i = 0..=N, k = 0..=J.
    #[serde(default)]
    pub gamma: Vec<Vec<C64>>,
}

impl SobolevTerm {
    /// Highest derivative order J appearing in the operators.
    pub fn max_derivative(&self) -> usize {
        self.gamma.first().map_or(0, |r| r.len().saturating_sub(1))
    }

    /// `L_i(g)` from the jet `(g, g', ...)` at the point.
    pub fn apply(&self, i: usize, jet: &[C64]) -> C64 {
        self.gamma[i]
            .iter()
            .zip(jet)
            .map(|(g, v)| g * v)
            .collect::<CompensatedSum>()
            .value()
    }

    /// Sum of |gamma_{i,k} g^{(k)}|.
    pub fn apply_abs(&self, i: usize, jet: &[C64]) -> f64 {
        self.gamma[i].iter().zip(jet).map(|(g, v)| (g * v).norm()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevSpec {
    pub terms: Vec<SobolevTerm>,
    /// Per point, the diagonal coefficients `M_{j,0..=N_j}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal: Option<Vec<Vec<C64>>>,
}

impl SobolevSpec {
    /// `∫ h g dμ + sum M_{j,i} h^{(i)}(c_j) g^{(i)}(c_j)`.
    pub fn diagonal_form(points: &[(C64, Vec<C64>)]) -> Self {
        let terms = points
            .iter()
            .map(|(cj, ms)| {
                let n = ms.len() - 1;
                let mut gamma = vec![vec![c(0.0, 0.0); n + 1]; n + 1];
                for (i, m) in ms.iter().enumerate() {
                    gamma[i][i] = *m;
                }
                SobolevTerm {
                    c: *cj,
                    order: n,
                    gamma,
                }
            })
            .collect();
        SobolevSpec {
            terms,
            diagonal: Some(points.iter().map(|p| p.1.clone()).collect()),
        }
    }

    /// The product whose orthogonal polynomials are the Padé denominators of
    /// `∫ dμ(x)/(z - x) + sum_j sum_i A_{j,i} i! / (z - c_j)^{i+1}`:
    /// `gamma_{i,m} = A_{i+m} binom(i+m, i)`.
    pub fn pade_form(poles: &[(C64, Vec<C64>)]) -> Self {
        let terms = poles
            .iter()
            .map(|(cj, a)| {
                let n = a.len() - 1;
                let mut gamma = vec![vec![c(0.0, 0.0); n + 1]; n + 1];
                for (i, row) in gamma.iter_mut().enumerate() {
                    for (m, g) in row.iter_mut().enumerate().take(n + 1 - i) {
                        *g = a[i + m] * binomial(i + m, i);
                    }
                }
                SobolevTerm {
                    c: *cj,
                    order: n,
                    gamma,
                }
            })
            .collect();
        SobolevSpec {
            terms,
            diagonal: None,
        }
    }

    /// Fill operator matrices from the diagonal shortcut when absent and
    /// check shapes.
    pub fn normalized(mut self) -> Result<Self> {
        if let Some(diag) = &self.diagonal {
            if diag.len() != self.terms.len() {
                return Err(Error::InvalidSpec(format!(
                    "{} diagonal rows for {} points",
                    diag.len(),
                    self.terms.len()
                )));
            }
            for (t, ms) in self.terms.iter_mut().zip(diag) {
                if ms.len() != t.order + 1 {
                    return Err(Error::InvalidSpec(format!(
                        "point {} has N = {} but {} diagonal coefficients",
                        t.c,
                        t.order,
                        ms.len()
                    )));
                }
                let n = t.order;
                let mut full = vec![vec![c(0.0, 0.0); n + 1]; n + 1];
                for (i, m) in ms.iter().enumerate() {
                    full[i][i] = *m;
                }
                if t.gamma.is_empty() {
                    t.gamma = full;
                } else if t.gamma != full {
                    return Err(Error::InvalidSpec(format!(
                        "operator matrix at {} disagrees with its diagonal shortcut",
                        t.c
                    )));
                }
            }
        }
        for t in &self.terms {
            if t.gamma.len() != t.order + 1 {
                return Err(Error::InvalidSpec(format!(
                    "point {} needs {} operator rows, found {}",
                    t.c,
                    t.order + 1,
                    t.gamma.len()
                )));
            }
            let width = t.gamma[0].len();
            if width == 0 || t.gamma.iter().any(|r| r.len() != width) {
                return Err(Error::InvalidSpec(format!("ragged operator matrix at {}", t.c)));
            }
            if t.gamma[t.order].iter().all(|g| g.norm() == 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "last operator at {} vanishes identically",
                    t.c
                )));
            }
        }
        Ok(self)
    }

    /// `A = sum_j (N_j + 1)`.
    pub fn total_order(&self) -> usize {
        self.terms.iter().map(|t| t.order + 1).sum()
    }

    /// `s = prod (x - c_j)^{N_j + 1}` as a modifier.
    pub fn point_polynomial(&self) -> RationalModifier {
        RationalModifier::new(
            self.terms.iter().map(|t| (t.c, t.order as u32 + 1)).collect(),
            vec![],
        )
    }

    /// Diagonal coefficients when every operator matrix is diagonal.
    pub fn as_diagonal(&self) -> Option<Vec<Vec<C64>>> {
        self.terms
            .iter()
            .map(|t| {
                let square = t.gamma.iter().all(|r| r.len() == t.order + 1);
                let off = t
                    .gamma
                    .iter()
                    .enumerate()
                    .any(|(i, r)| r.iter().enumerate().any(|(k, g)| k != i && g.norm() != 0.0));
                (square && !off).then(|| (0..=t.order).map(|i| t.gamma[i][i]).collect())
            })
            .collect()
    }

}

/// Per-point regularity data.
#[derive(Debug, Clone, PartialEq)]
pub struct TermRegularity {
    pub is_regular: bool,
    /// Dimension of the reduced matrix; the number of zeros the point attracts.
    pub dim: usize,
    pub det_gamma_star: C64,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub terms: Vec<TermRegularity>,
    pub overall_regular: bool,
    /// `sum_j (N_j + 1)`
    pub a_total: usize,
    /// `sum_j I_j`
    pub n_total: usize,
}

impl RegularityReport {
    /// `(c_j, I_j)` pairs for the limit functions.
    pub fn attraction(&self, spec: &SobolevSpec) -> Vec<(C64, u32)> {
        spec.terms
            .iter()
            .zip(&self.terms)
            .map(|(t, r)| (t.c, r.dim as u32))
            .collect()
    }
}

/// Relative determinant threshold for the reduced matrices.
pub const REGULARITY_TOL: f64 = 1e-12;

/// Delete zero rows and columns of each operator matrix and test that what
/// remains is square and nonsingular.
pub fn regularity(spec: &SobolevSpec) -> RegularityReport {
    let terms: Vec<TermRegularity> = spec
        .terms
        .iter()
        .map(|t| {
            let rows: Vec<usize> = (0..t.gamma.len())
                .filter(|&i| t.gamma[i].iter().any(|g| g.norm() != 0.0))
                .collect();
            let width = t.gamma.first().map_or(0, |r| r.len());
            let cols: Vec<usize> = (0..width)
                .filter(|&k| t.gamma.iter().any(|r| r[k].norm() != 0.0))
                .collect();
            if rows.len() != cols.len() || rows.is_empty() {
                return TermRegularity {
                    is_regular: false,
                    dim: rows.len().min(cols.len()),
                    det_gamma_star: c(0.0, 0.0),
                    rows,
                    cols,
                };
            }
            let d = rows.len();
            let m = DMatrix::from_fn(d, d, |i, k| t.gamma[rows[i]][cols[k]]);
            let det = m.determinant();
            let hadamard: f64 = (0..d)
                .map(|i| m.row(i).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
                .product();
            TermRegularity {
                is_regular: det.norm() > REGULARITY_TOL * hadamard,
                dim: d,
                det_gamma_star: det,
                rows,
                cols,
            }
        })
        .collect();
    RegularityReport {
        overall_regular: terms.iter().all(|t| t.is_regular),
        a_total: spec.total_order(),
        n_total: terms.iter().map(|t| t.dim).sum(),
        terms,
    }
}

/// `<h, g>`.
pub fn sobolev_inner(
    h: &PolyInBasis,
    g: &PolyInBasis,
    spec: &SobolevSpec,
    table: &RecurrenceTable,
    rule: &QuadratureRule,
) -> Result<C64> {
    let mut total = CompensatedSum::new();
    total.add(crate::measure::inner_mu(h, g, table, rule)?);
    for t in &spec.terms {
        let hj = h.eval_jet(table, t.c, t.order);
        let gj = g.eval_jet(table, t.c, t.max_derivative());
        for (i, hv) in hj.iter().enumerate() {
            total.add(hv * t.apply(i, &gj));
        }
    }
    Ok(total.value())
}

/// A Sobolev orthogonal polynomial with the point data needed downstream.
#[derive(Debug, Clone)]
pub struct SobolevOP {
    pub n: usize,
    /// Monic `S_n` over the monic basis of μ.
    pub rep: PolyInBasis,
    /// Coefficients over the orthonormal basis.
    pub orth: PolyInBasis,
    /// `L_{j,i}(S_n; c_j)`.
    pub point_values: Vec<Vec<C64>>,
    /// `S_n^{(k)}(c_j)` for k = 0..=max order.
    pub derivatives: Vec<Vec<C64>>,
    /// `lambda_{n,0..=A}` over the modified family, for the λ construction.
    pub lambda: Option<Vec<C64>>,
    /// `<S_n, S_n>`.
    pub norm_sq: C64,
    pub cond: f64,
}

impl SobolevOP {
    /// Jet of `S_n` at z.
    pub fn eval_jet(&self, table: &RecurrenceTable, z: C64, order: usize) -> Vec<C64> {
        self.orth.eval_jet(table, z, order)
    }
}

fn finish(
    n: usize,
    orth: PolyInBasis,
    point_values: Vec<Vec<C64>>,
    derivatives: Vec<Vec<C64>>,
    lambda: Option<Vec<C64>>,
    cond: f64,
    spec: &SobolevSpec,
    table: &RecurrenceTable,
) -> Result<SobolevOP> {
    let lead = orth.leading_coefficient(table);
    if orth.degree() != Some(n) || (lead - 1.0).norm() > 1e-6 {
        return Err(Error::PreAsymptotic {
            n,
            reason: format!("least-degree solution is not monic of degree n (lead {lead})"),
        });
    }
    // <S_n, S_n> = <L_n, S_n> = 1/tau_n^2 + sum L_n^{(i)}(c_j) L_{j,i}(S_n)
    let mut norm = CompensatedSum::new();
    norm.add(c(1.0 / (table.tau(n) * table.tau(n)), 0.0));
    for (t, pv) in spec.terms.iter().zip(&point_values) {
        let jets = basis_jets(table, n, t.c, t.order, Basis::MonicMu);
        for (i, v) in pv.iter().enumerate() {
            norm.add(jets[n][i] * v);
        }
    }
    Ok(SobolevOP {
        n,
        rep: orth.to_basis(table, Basis::MonicMu),
        orth,
        point_values,
        derivatives,
        lambda,
        norm_sq: norm.value(),
        cond,
    })
}

/// Kernel construction for diagonal products:
/// `S_n = L_n - sum_{j,i} M_{j,i} S_n^{(i)}(c_j) K_{n-1}^{(0,i)}(x, c_j)`
/// with the point derivatives solved from a bordered system.
pub fn sn_kernel(
    n: usize,
    spec: &SobolevSpec,
    table: &RecurrenceTable,
    _rule: &QuadratureRule,
) -> Result<SobolevOP> {
    let diag = spec
        .as_diagonal()
        .ok_or_else(|| Error::InvalidSpec("kernel construction needs diagonal operators".into()))?;
    if table.nmax() < n {
        return Err(Error::InvalidSpec(format!(
            "recurrence table stops at {}, need {n}",
            table.nmax()
        )));
    }
    // active (point, derivative) pairs
    let mut active = Vec::new();
    for (j, ms) in diag.iter().enumerate() {
        for (i, m) in ms.iter().enumerate() {
            if m.norm() != 0.0 {
                active.push((j, i, *m));
            }
        }
    }
    let jets: Vec<Vec<Vec<C64>>> = spec
        .terms
        .iter()
        .map(|t| basis_jets(table, n, t.c, t.order, Basis::OrthonormalMu))
        .collect();
    let na = active.len();
    let mut mat = DMatrix::from_element(na, na, c(0.0, 0.0));
    let mut rhs = vec![c(0.0, 0.0); na];
    for (r, &(j1, i1, _)) in active.iter().enumerate() {
        rhs[r] = jets[j1][n][i1] / table.tau(n);
        for (s, &(j2, i2, m2)) in active.iter().enumerate() {
            let k: C64 = (0..n)
                .map(|k| jets[j1][k][i1] * jets[j2][k][i2])
                .collect::<CompensatedSum>()
                .value();
            mat[(r, s)] = k * m2 + if r == s { 1.0 } else { 0.0 };
        }
    }
    let (u, cond) = if na > 0 {
        let out = solve_equilibrated(&mat, &rhs).map_err(|_| Error::SingularSystem {
            n,
            cond: f64::INFINITY,
        })?;
        (out.x, out.cond)
    } else {
        (vec![], 1.0)
    };

    let mut coeffs = vec![c(0.0, 0.0); n + 1];
    coeffs[n] = c(1.0 / table.tau(n), 0.0);
    for (a, &(j, i, m)) in active.iter().enumerate() {
        let w = m * u[a];
        for k in 0..n {
            coeffs[k] -= w * jets[j][k][i];
        }
    }
    let orth = PolyInBasis::new(Basis::OrthonormalMu, coeffs);

    let mut derivatives = Vec::new();
    let mut point_values = Vec::new();
    for (j, t) in spec.terms.iter().enumerate() {
        let mut d = orth.eval_jet(table, t.c, t.order);
        let mut pv = vec![c(0.0, 0.0); t.order + 1];
        for (a, &(jj, i, m)) in active.iter().enumerate() {
            if jj == j {
                d[i] = u[a];
                pv[i] = m * u[a];
            }
        }
        point_values.push(pv);
        derivatives.push(d);
    }
    finish(n, orth, point_values, derivatives, None, cond, spec, table)
}

/// Coefficients `h_{j,e}`, e = 1..=N_j+1, of the principal part at `c_j` of
/// `H / s`, where `H` is the Hermite cardinal polynomial of degree < A with
/// `H^{(i)}(c_{j'}) = delta_{j j'} delta_{i I}`.
fn cardinal_partial_fraction(spec: &SobolevSpec, j: usize, big_i: usize) -> Vec<C64> {
    let t = &spec.terms[j];
    let len = t.order + 1;
    // Taylor coefficients of 1 / prod_{j' != j} (x - c_j')^{N_j'+1} at c_j
    let mut series = vec![c(0.0, 0.0); len];
    series[0] = c(1.0, 0.0);
    for (jj, other) in spec.terms.iter().enumerate() {
        if jj == j {
            continue;
        }
        let m = other.order + 1;
        let delta = t.c - other.c;
        let factor: Vec<C64> = (0..len)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * binomial(m + k - 1, k) / delta.powi((m + k) as i32)
            })
            .collect();
        let mut next = vec![c(0.0, 0.0); len];
        for a in 0..len {
            for b in 0..len - a {
                next[a + b] += series[a] * factor[b];
            }
        }
        series = next;
    }
    let mut h = vec![c(0.0, 0.0); len];
    let inv_fact = 1.0 / factorial(big_i);
    for (tt, s) in series.iter().enumerate().take(t.order - big_i + 1) {
        let e = t.order + 1 - big_i - tt;
        h[e - 1] = s * inv_fact;
    }
    h
}

/// `F(j, e) = ∫ Q / (x - c_j)^e s dμ` for e = 1..=N_j+1, written through
/// polynomial integrands:
/// `F Q(c) = sum_{eta < e} (-1)^eta / eta! ∫ Q^{(eta)} Q s / (x - c)^{e - eta} dμ`.
fn cauchy_moments(
    op: &ModifiedOP,
    spec: &SobolevSpec,
    table: &RecurrenceTable,
    rule: &QuadratureRule,
) -> Result<Vec<Vec<C64>>> {
    let m = op.n;
    let a = spec.total_order();
    let order = spec.terms.iter().map(|t| t.order).max().unwrap_or(0);
    let exact = rule.resized(m + a + 2)?;
    let tab = TabulatedBasis::new(table, &exact, m, order);
    let derivs: Vec<Vec<C64>> = (0..=order).map(|eta| tab.poly_values(table, &op.q, eta)).collect();
    let mut values = Vec::new();
    for (j, t) in spec.terms.iter().enumerate() {
        let qc = op.q.eval(table, t.c);
        // s / (x - c_j)^k for k = 0..=N_j+1
        let reduced: Vec<Vec<C64>> = (0..=t.order + 1)
            .map(|k| {
                tab.abscissae
                    .iter()
                    .map(|&x| {
                        let x = c(x, 0.0);
                        spec.terms
                            .iter()
                            .enumerate()
                            .fold(c(1.0, 0.0), |acc, (jj, tt)| {
                                let p = if jj == j { tt.order + 1 - k } else { tt.order + 1 };
                                acc * (x - tt.c).powi(p as i32)
                            })
                    })
                    .collect()
            })
            .collect();
        let mut fv = Vec::new();
        for e in 1..=t.order + 1 {
            let mut sum = CompensatedSum::new();
            for eta in 0..e {
                let sign = if eta % 2 == 0 { 1.0 } else { -1.0 };
                let coef = sign / factorial(eta);
                let (v, _) = weighted(
                    &tab,
                    (0..tab.abscissae.len()).map(|i| derivs[eta][i] * derivs[0][i] * reduced[e - eta][i]),
                );
                sum.add(v * coef);
            }
            fv.push(sum.value() / qc);
        }
        values.push(fv);
    }
    Ok(values)
}

/// `<H_{j,I}, Q>` split into the integral part and the point part.
#[derive(Clone)]
struct CardinalRows {
    integral: Vec<C64>,
    point: Vec<C64>,
}

fn cardinal_rows(
    op: &ModifiedOP,
    spec: &SobolevSpec,
    hcoef: &[Vec<Vec<C64>>],
    table: &RecurrenceTable,
    rule: &QuadratureRule,
) -> Result<CardinalRows> {
    let fv = cauchy_moments(op, spec, table, rule)?;
    let mut rows = CardinalRows {
        integral: vec![],
        point: vec![],
    };
    for (j, t) in spec.terms.iter().enumerate() {
        let jet = op.q.eval_jet(table, t.c, t.max_derivative());
        for big_i in 0..=t.order {
            let h = &hcoef[j][big_i];
            let sum: CompensatedSum = h.iter().zip(&fv[j]).map(|(he, f)| he * f).collect();
            rows.integral.push(sum.value());
            rows.point.push(t.apply(big_i, &jet));
        }
    }
    Ok(rows)
}

/// The polynomials of `s dμ` needed for `S_n` and the partial fractions of
/// the cardinal test functions; reusable across consecutive n.
pub struct LambdaWorkspace<'a> {
    spec: &'a SobolevSpec,
    table: &'a RecurrenceTable,
    rule: &'a QuadratureRule,
    s: RationalModifier,
    hcoef: Vec<Vec<Vec<C64>>>,
    cache: std::collections::BTreeMap<usize, (ModifiedOP, CardinalRows)>,
}

impl<'a> LambdaWorkspace<'a> {
    pub fn new(spec: &'a SobolevSpec, table: &'a RecurrenceTable, rule: &'a QuadratureRule) -> Result<Self> {
        let report = regularity(spec);
        if !report.overall_regular {
            return Err(Error::NotRegular(
                "a reduced operator matrix is not square and nonsingular".into(),
            ));
        }
        let hcoef = spec
            .terms
            .iter()
            .enumerate()
            .map(|(j, t)| (0..=t.order).map(|i| cardinal_partial_fraction(spec, j, i)).collect())
            .collect();
        Ok(LambdaWorkspace {
            spec,
            table,
            rule,
            s: spec.point_polynomial(),
            hcoef,
            cache: Default::default(),
        })
    }

    fn member(&mut self, m: usize) -> Result<&(ModifiedOP, CardinalRows)> {
        if !self.cache.contains_key(&m) {
            let op = solve_q(m, &self.s, self.table, self.rule)?;
            let rows = cardinal_rows(&op, self.spec, &self.hcoef, self.table, self.rule)?;
            self.cache.insert(m, (op, rows));
        }
        Ok(&self.cache[&m])
    }

    /// Build `S_n = sum_{k=0}^{A} lambda_k Q_{n-k}` from the A conditions
    /// `<H_{j,I}, S_n> = 0`.
    pub fn solve(&mut self, n: usize) -> Result<SobolevOP> {
        let spec = self.spec;
        let table = self.table;
        let a = spec.total_order();
        if n < 2 * a + 1 {
            return Err(Error::InvalidSpec(format!(
                "degree {n} below 2A+1 = {} for the λ construction",
                2 * a + 1
            )));
        }
        let members: Vec<(ModifiedOP, CardinalRows)> = (0..=a)
            .map(|k| self.member(n - k).cloned())
            .collect::<Result<_>>()?;
        let row = |k: usize, r: usize| members[k].1.integral[r] + members[k].1.point[r];
        let mut mat = DMatrix::from_element(a, a, c(0.0, 0.0));
        let mut rhs = vec![c(0.0, 0.0); a];
        for r in 0..a {
            rhs[r] = -row(0, r);
            for k in 1..=a {
                mat[(r, k - 1)] = row(k, r);
            }
        }
        let out = solve_equilibrated(&mat, &rhs).map_err(|e| match e {
            Error::SingularSystem { cond, .. } => Error::SingularSystem { n, cond },
            other => other,
        })?;
        if out.cond > COND_LIMIT || out.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem { n, cond: out.cond });
        }
        let mut lambda = vec![c(1.0, 0.0)];
        lambda.extend(out.x);

        let mut coeffs = vec![c(0.0, 0.0); n + 1];
        for (k, l) in lambda.iter().enumerate() {
            for (i, q) in members[k].0.q.coeffs.iter().enumerate() {
                coeffs[i] += l * q;
            }
        }
        let orth = PolyInBasis::new(Basis::OrthonormalMu, coeffs);

        // point values from the conditions: L_{j,I}(S_n) = -∫ H_{j,I} S_n dμ
        let regular = regularity(spec);
        let mut point_values = Vec::new();
        let mut derivatives = Vec::new();
        let mut r = 0;
        for (t, reg) in spec.terms.iter().zip(&regular.terms) {
            let mut pv = Vec::new();
            for _ in 0..=t.order {
                let sum: CompensatedSum = lambda
                    .iter()
                    .zip(&members)
                    .map(|(l, m)| -l * m.1.integral[r])
                    .collect();
                pv.push(sum.value());
                r += 1;
            }
            let width = t.max_derivative().max(t.order);
            let mut d = orth.eval_jet(table, t.c, width);
            let dim = reg.dim;
            let g = DMatrix::from_fn(dim, dim, |i, k| t.gamma[reg.rows[i]][reg.cols[k]]);
            let b: Vec<C64> = reg.rows.iter().map(|&i| pv[i]).collect();
            if let Ok(sol) = solve_equilibrated(&g, &b) {
                for (k, &col) in reg.cols.iter().enumerate() {
                    d[col] = sol.x[k];
                }
            }
            point_values.push(pv);
            derivatives.push(d);
        }
        finish(
            n,
            orth,
            point_values,
            derivatives,
            Some(lambda),
            out.cond,
            spec,
            table,
        )
    }
}

/// λ construction of `S_n` for a regular product.
pub fn sn_lambda(
    n: usize,
    spec: &SobolevSpec,
    table: &RecurrenceTable,
    rule: &QuadratureRule,
) -> Result<SobolevOP> {
    LambdaWorkspace::new(spec, table, rule)?.solve(n)
}

/// Test functions for orthogonality residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestBasis {
    Orthonormal,
    Monomial,
}

/// Orthonormal-basis coefficients of `x^k`, k = 0..n.
pub fn monomials(n: usize, table: &RecurrenceTable) -> Vec<PolyInBasis> {
    let mut out = Vec::with_capacity(n);
    let mut cur = PolyInBasis::new(Basis::OrthonormalMu, vec![c(1.0 / table.tau(0), 0.0)]);
    for _ in 0..n {
        let next = times_x(&cur, table);
        out.push(cur);
        cur = next;
    }
    out
}

/// `sum |p_k|^2 + sum |L_{j,i}(p)|^2` over orthonormal coefficients and
/// point functionals; bounds `|<p, q>|` by Cauchy-Schwarz.
fn hermitian_norm(coeffs: &[C64], point_terms: &[C64]) -> f64 {
    coeffs
        .iter()
        .chain(point_terms)
        .map(|v| v.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Largest `|<p_k, S_n>|` over k < n relative to `|p_k| |S_n|` in the
/// Hermitian norm that pairs μ-coefficients with point data.
pub fn sobolev_residual(
    op: &SobolevOP,
    spec: &SobolevSpec,
    table: &RecurrenceTable,
    test: TestBasis,
) -> f64 {
    let n = op.n;
    let tests: Vec<PolyInBasis> = match test {
        TestBasis::Orthonormal => (0..n).map(|k| PolyInBasis::unit(Basis::OrthonormalMu, k)).collect(),
        TestBasis::Monomial => monomials(n, table),
    };
    let s_points: Vec<C64> = op.point_values.iter().flatten().copied().collect();
    let s_norm = hermitian_norm(&op.orth.coeffs, &s_points);
    let mut worst: f64 = 0.0;
    for p in &tests {
        let mut sum: CompensatedSum = p.coeffs.iter().zip(&op.orth.coeffs).map(|(a, b)| a * b).collect();
        let mut p_points = Vec::new();
        for (j, t) in spec.terms.iter().enumerate() {
            let jet = p.eval_jet(table, t.c, t.order);
            for i in 0..=t.order {
                sum.add(jet[i] * op.point_values[j][i]);
                p_points.push(jet[i]);
            }
        }
        let scale = hermitian_norm(&p.coeffs, &p_points) * s_norm;
        worst = worst.max(sum.value().norm() / scale.max(f64::MIN_POSITIVE));
    }
    worst
}

/// `gamma_n = <S_n, S_n>^{-1/2}` along consecutive n: principal branch at the
/// first index, then the sign that keeps `gamma_{n+1} / gamma_n` nearest 2.
pub fn normalization_sequence(ops: &[SobolevOP]) -> Vec<C64> {
    let mut out: Vec<C64> = Vec::with_capacity(ops.len());
    for op in ops {
        let g = 1.0 / op.norm_sq.sqrt();
        let g = match out.last() {
            Some(prev) if (-g / prev - 2.0).norm() < (g / prev - 2.0).norm() => -g,
            _ => g,
        };
        out.push(g);
    }
    out
}

/// `prod_j phi(c_j)^{-I_j}`, the limit of `gamma_n / tau_n`.
pub fn gamma_tau_limit(attraction: &[(C64, u32)]) -> Result<C64> {
    attraction
        .iter()
        .try_fold(c(1.0, 0.0), |acc, &(cj, e)| Ok(acc / phi(cj)?.powi(e as i32)))
}
