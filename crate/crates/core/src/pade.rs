//! `[n-1, n]` Padé approximants at infinity of
//! `f(z) = ∫ dμ(x) / (z - x) + sum_j sum_i A_{j,i} i! / (z - c_j)^{i+1}`.
//!
//! The denominators are the Sobolev orthogonal polynomials of the equivalent
//! product with operators `gamma_{i,m} = A_{i+m} binom(i+m, i)`. Errors come
//! from the remainder identity
//! `f(z) - P_n(z)/Q_n(z) = ∫ Q_n s / (z - x) dμ / (s(z) Q_n(z))`,
//! `s = prod (x - c_j)^{N_j + 1}`, summed over the few second-kind
//! functions that survive orthogonality, so they keep full relative
//! precision far below the size of f.

use crate::error::{Error, Result};
use crate::joukowski::{phi, CUT_TOL};
use crate::measure::{
    cauchy_transforms, stieltjes_transform, BaseMeasureSpec, Basis, PolyInBasis, QuadratureRule,
    RecurrenceTable, TabulatedBasis,
};
use crate::modified::times_x;
use crate::numeric::{c, factorial, CompensatedSum, C64};
use crate::sobolev::{sn_kernel, sobolev_residual, LambdaWorkspace, SobolevOP, SobolevSpec, TestBasis};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleTerm {
    pub c: C64,
    /// `A_{j,0..=N_j}`
    #[serde(rename = "A")]
    pub coeffs: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StieltjesFn {
    pub base: BaseMeasureSpec,
    #[serde(default)]
    pub poles: Vec<PoleTerm>,
}

impl StieltjesFn {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        for (j, p) in self.poles.iter().enumerate() {
            match p.coeffs.last() {
                None => return Err(Error::InvalidSpec(format!("pole {} has no coefficients", p.c))),
                Some(a) if a.norm() == 0.0 => {
                    return Err(Error::InvalidSpec(format!(
                        "leading coefficient at pole {} vanishes",
                        p.c
                    )))
                }
                _ => {}
            }
            if self.base.distance_to_support(p.c) <= CUT_TOL {
                return Err(Error::InvalidSpec(format!("pole {} lies on the support", p.c)));
            }
            if self.poles[..j].iter().any(|q| (q.c - p.c).norm() <= CUT_TOL) {
                return Err(Error::InvalidSpec(format!("pole {} repeated", p.c)));
            }
        }
        Ok(())
    }

    /// The product whose orthogonal polynomials are the denominators.
    pub fn sobolev_spec(&self) -> SobolevSpec {
        let poles: Vec<(C64, Vec<C64>)> = self.poles.iter().map(|p| (p.c, p.coeffs.clone())).collect();
        SobolevSpec::pade_form(&poles)
    }

    /// `sum_j (N_j + 1)`
    pub fn total_order(&self) -> usize {
        self.poles.iter().map(|p| p.coeffs.len()).sum()
    }

    /// `(c_j, N_j + 1)`: each pole attracts that many zeros.
    pub fn attraction(&self) -> Vec<(C64, u32)> {
        self.poles.iter().map(|p| (p.c, p.coeffs.len() as u32)).collect()
    }

    /// `s(z) = prod (z - c_j)^{N_j + 1}`
    pub fn point_polynomial(&self, z: C64) -> C64 {
        self.poles
            .iter()
            .fold(c(1.0, 0.0), |acc, p| acc * (z - p.c).powi(p.coeffs.len() as i32))
    }

    pub fn pole_part(&self, z: C64) -> C64 {
        self.poles
            .iter()
            .flat_map(|p| {
                p.coeffs
                    .iter()
                    .enumerate()
                    .map(move |(i, a)| a * factorial(i) / (z - p.c).powi(i as i32 + 1))
            })
            .collect::<CompensatedSum>()
            .value()
    }

    pub fn eval(&self, z: C64, table: &RecurrenceTable) -> Result<C64> {
        if self.base.distance_to_support(z) <= CUT_TOL {
            return Err(Error::OnCut {
                re: z.re,
                im: z.im,
                tol: CUT_TOL,
            });
        }
        Ok(stieltjes_transform(table, z)? + self.pole_part(z))
    }

    /// `f(z) = sum_k moment_k z^{-k-1}`:
    /// `moment_k = ∫ x^k dμ + sum A_{j,i} k!/(k-i)! c_j^{k-i}`.
    pub fn moments(&self, count: usize, rule: &QuadratureRule) -> Result<Vec<C64>> {
        let exact = rule.resized(count / 2 + 1)?;
        (0..count)
            .map(|k| {
                let mut m = CompensatedSum::new();
                m.add(exact.integrate(|x| c(x.powi(k as i32), 0.0)));
                for p in &self.poles {
                    for (i, a) in p.coeffs.iter().enumerate().take(k + 1) {
                        m.add(a * (factorial(k) / factorial(k - i)) * p.c.powi((k - i) as i32));
                    }
                }
                Ok(m.value())
            })
            .collect()
    }
}

/// `Q_n` for every n in `ns`, sharing the modified-family cache.
pub fn pade_denominators(
    ns: &[usize],
    f: &StieltjesFn,
    table: &RecurrenceTable,
    rule: &QuadratureRule,
) -> Result<Vec<Result<SobolevOP>>> {
    f.validate()?;
    let spec = f.sobolev_spec();
    if spec.terms.is_empty() {
        return Ok(ns.iter().map(|&n| sn_kernel(n, &spec, table, rule)).collect());
    }
    let mut ws = LambdaWorkspace::new(&spec, table, rule)?;
    Ok(ns.iter().map(|&n| ws.solve(n)).collect())
}

/// Monic `Q_n` together with its point data at the poles.
pub fn pade_denominator(
    n: usize,
    f: &StieltjesFn,
    table: &RecurrenceTable,
    rule: &QuadratureRule,
) -> Result<SobolevOP> {
    pade_denominators(&[n], f, table, rule)?.remove(0)
}

/// Largest `|σ(x^k Q_n)|`, k < n, relative to the Cauchy-Schwarz scale, with
/// `σ(g) = ∫ g dμ + sum A_{j,i} g^{(i)}(c_j)`.
pub fn pade_residual(op: &SobolevOP, f: &StieltjesFn, table: &RecurrenceTable) -> f64 {
    sobolev_residual(op, &f.sobolev_spec(), table, TestBasis::Monomial)
}

/// `P_n(z) = σ_t((Q_n(z) - Q_n(t)) / (z - t))`, projected onto the monic basis
/// from its values on a Gauss rule.
pub fn pade_numerator(
    q: &SobolevOP,
    f: &StieltjesFn,
    table: &RecurrenceTable,
    rule: &QuadratureRule,
) -> Result<PolyInBasis> {
    let n = q.n;
    if n == 0 {
        return Ok(PolyInBasis::zero(Basis::MonicMu));
    }
    let exact = rule.resized(n)?;
    let tab = TabulatedBasis::new(table, &exact, n, 0);
    let qvals = tab.poly_values(table, &q.orth, 0);
    let monic = q.orth.to_basis(table, Basis::MonicMu);
    let values: Vec<C64> = tab
        .abscissae
        .iter()
        .enumerate()
        .map(|(node, &x)| {
            let x = c(x, 0.0);
            let mut sum = CompensatedSum::new();
            // second-kind part: sum q_k M_k(x), M_0 = 0, M_1 = mass
            let (mut prev, mut cur) = (c(0.0, 0.0), c(table.mass(), 0.0));
            for (k, qk) in monic.coeffs.iter().enumerate().skip(1) {
                sum.add(qk * cur);
                let next = (x - table.b(k)) * cur - table.a(k) * table.a(k) * prev;
                prev = cur;
                cur = next;
            }
            // A_i i! Q[x, c, ..., c] with c repeated i+1 times
            for (p, jet) in f.poles.iter().zip(&q.derivatives) {
                let h = x - p.c;
                let mut taylor = c(0.0, 0.0);
                for (i, a) in p.coeffs.iter().enumerate() {
                    taylor += jet[i] * h.powi(i as i32) / factorial(i);
                    sum.add(a * factorial(i) * (qvals[node] - taylor) / h.powi(i as i32 + 1));
                }
            }
            sum.value()
        })
        .collect();
    let coeffs: Vec<C64> = (0..n)
        .map(|k| {
            tab.integrate(
                &values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v * tab.values[0][k][i])
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    Ok(PolyInBasis::new(Basis::OrthonormalMu, coeffs).to_basis(table, Basis::MonicMu))
}

/// `f(z) - P_n(z)/Q_n(z)` by the remainder identity.
pub fn approximation_error(
    q: &SobolevOP,
    f: &StieltjesFn,
    z: C64,
    table: &RecurrenceTable,
) -> Result<C64> {
    let n = q.n;
    let a = f.total_order();
    // orthonormal coefficients of s Q_n; those below n - A vanish
    let mut prod = q.orth.clone();
    for p in &f.poles {
        for _ in 0..p.coeffs.len() {
            prod = times_x(&prod, table).axpy(-p.c, &prod);
        }
    }
    let psi = cauchy_transforms(table, z, n + a)?;
    let tail: C64 = (n.saturating_sub(a)..=n + a)
        .map(|k| prod.coeffs.get(k).copied().unwrap_or_default() * psi[k])
        .collect::<CompensatedSum>()
        .value();
    Ok(tail / (f.point_polynomial(z) * q.orth.eval(table, z)))
}

/// Smallest error magnitude treated as resolved.
pub const SATURATION_FLOOR: f64 = 1e-290;

/// `(f - pi_{n+1}) / (f - pi_n)` at z; the limit is `1/phi(z)^2`.
pub fn error_ratio(
    n: usize,
    z: C64,
    f: &StieltjesFn,
    table: &RecurrenceTable,
    rule: &QuadratureRule,
) -> Result<C64> {
    let ops = pade_denominators(&[n, n + 1], f, table, rule)?;
    let mut errs = Vec::new();
    for op in ops {
        errs.push(approximation_error(&op?, f, z, table)?);
    }
    ratio_of_errors(errs[0], errs[1])
}

pub(crate) fn ratio_of_errors(e_n: C64, e_next: C64) -> Result<C64> {
    if !(e_n.norm() > SATURATION_FLOOR) || !e_next.is_finite() {
        return Err(Error::Saturated { err: e_n.norm() });
    }
    Ok(e_next / e_n)
}

/// `1/phi(z)^2`
pub fn error_ratio_limit(z: C64) -> Result<C64> {
    Ok(1.0 / phi(z)?.powi(2))
}

/// Monomial coefficients, lowest first; for modest degrees only.
pub fn to_monomial(p: &PolyInBasis, table: &RecurrenceTable) -> Vec<C64> {
    let monic = p.to_basis(table, Basis::MonicMu);
    let d = monic.coeffs.len();
    let mut out = vec![c(0.0, 0.0); d.max(1)];
    let mut prev: Vec<C64> = vec![];
    let mut cur = vec![c(1.0, 0.0)];
    for (k, pk) in monic.coeffs.iter().enumerate() {
        for (i, v) in cur.iter().enumerate() {
            out[i] += pk * v;
        }
        let mut next = vec![c(0.0, 0.0); cur.len() + 1];
        for (i, v) in cur.iter().enumerate() {
            next[i + 1] += v;
            next[i] -= v * table.b(k);
        }
        let a2 = table.a(k) * table.a(k);
        for (i, v) in prev.iter().enumerate() {
            next[i] -= v * a2;
        }
        prev = cur;
        cur = next;
    }
    out
}

/// First `count` coefficients of `P/Q = sum e_k z^{-k-1}` at infinity.
pub fn laurent_coefficients(
    p: &PolyInBasis,
    q: &PolyInBasis,
    table: &RecurrenceTable,
    count: usize,
) -> Vec<C64> {
    let pm = to_monomial(p, table);
    let qm = to_monomial(q, table);
    let n = qm.len() - 1;
    let lead = qm[n];
    let mut e: Vec<C64> = Vec::with_capacity(count);
    for k in 0..count {
        let mut v = if k < n { pm.get(n - 1 - k).copied().unwrap_or_default() } else { c(0.0, 0.0) };
        for l in 1..=k.min(n) {
            v -= qm[n - l] * e[k - l];
        }
        e.push(v / lead);
    }
    e
}
