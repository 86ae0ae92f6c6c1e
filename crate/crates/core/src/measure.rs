//! Base measures: recurrence coefficients, Gauss rules, and evaluation of the
//! monic (`L_n`) and orthonormal (`l_n = tau_n L_n`) polynomials together with
//! their derivatives.

use crate::error::{Error, Result};
use crate::linalg::tridiag_eigen;
use crate::numeric::{c, CDd, CompensatedSum, Dd, C64};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

/// Absolutely continuous part of a base measure on [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    /// (1 - x^2)^(-1/2), total mass pi.
    ChebyshevFirstKind,
    /// (1 - x^2)^(1/2), total mass pi/2.
    ChebyshevSecondKind,
    /// Constant 1, total mass 2.
    Legendre,
    /// (1 - x)^alpha (1 + x)^beta.
    Jacobi { alpha: f64, beta: f64 },
}

impl WeightKind {
    pub fn jacobi_params(&self) -> (f64, f64) {
        match *self {
            WeightKind::ChebyshevFirstKind => (-0.5, -0.5),
            WeightKind::ChebyshevSecondKind => (0.5, 0.5),
            WeightKind::Legendre => (0.0, 0.0),
            WeightKind::Jacobi { alpha, beta } => (alpha, beta),
        }
    }

    pub fn mass(&self) -> f64 {
        match *self {
            WeightKind::ChebyshevFirstKind => PI,
            WeightKind::ChebyshevSecondKind => PI / 2.0,
            WeightKind::Legendre => 2.0,
            WeightKind::Jacobi { alpha, beta } => {
                let ln = (alpha + beta + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0)
                    + ln_gamma(beta + 1.0)
                    - ln_gamma(alpha + beta + 2.0);
                ln.exp()
            }
        }
    }

    /// Weight function value at x in (-1, 1).
    pub fn density(&self, x: f64) -> f64 {
        let (a, b) = self.jacobi_params();
        (1.0 - x).powf(a) * (1.0 + x).powf(b)
    }

    /// Orthonormal recurrence coefficients of the pure weight:
    /// `a[k] = a_{k+1}` for k < n and `b[k] = b_k` for k <= n.
    pub fn recurrence(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        if let WeightKind::ChebyshevFirstKind = self {
            let a = (1..=n)
                .map(|k| if k == 1 { std::f64::consts::FRAC_1_SQRT_2 } else { 0.5 })
                .collect();
            return (a, vec![0.0; n + 1]);
        }
        let (al, be) = self.jacobi_params();
        let ab = al + be;
        let b = (0..=n)
            .map(|k| {
                if k == 0 {
                    (be - al) / (ab + 2.0)
                } else {
                    let t = 2.0 * k as f64 + ab;
                    (be * be - al * al) / (t * (t + 2.0))
                }
            })
            .collect();
        let a = (1..=n)
            .map(|k| {
                let kf = k as f64;
                let monic = if k == 1 {
                    4.0 * (1.0 + al) * (1.0 + be) / ((2.0 + ab).powi(2) * (3.0 + ab))
                } else {
                    let t = 2.0 * kf + ab;
                    4.0 * kf * (kf + al) * (kf + be) * (kf + ab) / (t * t * (t + 1.0) * (t - 1.0))
                };
                monic.sqrt()
            })
            .collect();
        (a, b)
    }
}

/// Point mass outside [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassPoint {
    pub location: f64,
    pub mass: f64,
}

/// A measure in the Nevai class built from a Jacobi-type weight plus finitely
/// many point masses off the interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseMeasureSpec {
    pub weight: WeightKind,
    #[serde(default)]
    pub mass_points: Vec<MassPoint>,
}

impl BaseMeasureSpec {
    pub fn pure(weight: WeightKind) -> Self {
        BaseMeasureSpec {
            weight,
            mass_points: vec![],
        }
    }

    pub fn with_atom(mut self, location: f64, mass: f64) -> Self {
        self.mass_points.push(MassPoint { location, mass });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let WeightKind::Jacobi { alpha, beta } = self.weight {
            if !(alpha > -1.0 && beta > -1.0) {
                return Err(Error::InvalidSpec(format!(
                    "Jacobi parameters must exceed -1, got ({alpha}, {beta})"
                )));
            }
        }
        for p in &self.mass_points {
            if !(p.location.abs() > 1.0) || !p.location.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "mass point at {} is not outside [-1, 1]",
                    p.location
                )));
            }
            if !(p.mass > 0.0) || !p.mass.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "mass {} at {} is not positive",
                    p.mass, p.location
                )));
            }
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.weight.mass() + self.mass_points.iter().map(|p| p.mass).sum::<f64>()
    }

    /// Distance from z to the support of the measure.
    pub fn distance_to_support(&self, z: C64) -> f64 {
        let d = interval_distance(z);
        self.mass_points
            .iter()
            .map(|p| (z - p.location).norm())
            .fold(d, f64::min)
    }
}

/// Distance from z to [-1, 1].
pub fn interval_distance(z: C64) -> f64 {
    let x = z.re.clamp(-1.0, 1.0);
    (z - x).norm()
}

/// Orthonormal three-term recurrence
/// `x l_n = a_{n+1} l_{n+1} + b_n l_n + a_n l_{n-1}` and leading coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceTable {
    /// a_1 ..= a_nmax
    pub a: Vec<f64>,
    /// b_0 ..= b_nmax
    pub b: Vec<f64>,
    /// tau_0 ..= tau_nmax
    pub tau: Vec<f64>,
}

impl RecurrenceTable {
    pub fn from_coefficients(a: Vec<f64>, b: Vec<f64>, mass: f64) -> Self {
        assert_eq!(a.len() + 1, b.len());
        let mut tau = Vec::with_capacity(b.len());
        tau.push(1.0 / mass.sqrt());
        for ak in &a {
            let prev = *tau.last().unwrap();
            tau.push(prev / ak);
        }
        RecurrenceTable { a, b, tau }
    }

    pub fn nmax(&self) -> usize {
        self.a.len()
    }

    /// a_n for n >= 1; a_0 is taken as 0.
    #[inline]
    pub fn a(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.a[n - 1]
        }
    }

    #[inline]
    pub fn b(&self, n: usize) -> f64 {
        self.b[n]
    }

    #[inline]
    pub fn tau(&self, n: usize) -> f64 {
        self.tau[n]
    }

    /// Total mass recovered from tau_0.
    pub fn mass(&self) -> f64 {
        1.0 / (self.tau[0] * self.tau[0])
    }

    pub fn truncated(&self, nmax: usize) -> RecurrenceTable {
        assert!(nmax <= self.nmax());
        RecurrenceTable {
            a: self.a[..nmax].to_vec(),
            b: self.b[..=nmax].to_vec(),
            tau: self.tau[..=nmax].to_vec(),
        }
    }
}

/// Relative agreement required between two tail depths of the continued
/// fraction in [`cauchy_transforms`].
pub const TAIL_TOL: f64 = 1e-14;

/// `psi_k(z) = ∫ l_k(t) / (z - t) dμ(t)` for k = 0..=kmax, the minimal
/// solution of the recurrence, from its backward continued fraction.
/// The tail starts at the end of the table and again halfway there; the two
/// must agree to [`TAIL_TOL`].
pub fn cauchy_transforms(table: &RecurrenceTable, z: C64, kmax: usize) -> Result<Vec<C64>> {
    let top = table.nmax().saturating_sub(1);
    if top < kmax + 8 {
        return Err(Error::InvalidSpec(format!(
            "recurrence table stops at {}, too short for second-kind functions up to {kmax}",
            table.nmax()
        )));
    }
    let len = kmax.max(1);
    let ratios = |start: usize| {
        let mut out = vec![c(0.0, 0.0); len + 1];
        let mut r = c(0.0, 0.0);
        for k in (1..=start).rev() {
            r = table.a(k) / (z - table.b(k) - table.a(k + 1) * r);
            if k <= len {
                out[k] = r;
            }
        }
        out
    };
    let deep = ratios(top);
    let shallow = ratios(len + (top - len) / 2);
    let change = deep
        .iter()
        .zip(&shallow)
        .skip(1)
        .map(|(u, v)| (u - v).norm() / u.norm().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    if change > TAIL_TOL {
        return Err(Error::QuadratureNonconvergence { change });
    }
    let mut out = Vec::with_capacity(kmax + 1);
    out.push(1.0 / (table.tau(0) * (z - table.b(0) - table.a(1) * deep[1])));
    for k in 1..=kmax {
        let prev = out[k - 1];
        out.push(prev * deep[k]);
    }
    Ok(out)
}

/// `∫ dμ(t) / (z - t)`.
pub fn stieltjes_transform(table: &RecurrenceTable, z: C64) -> Result<C64> {
    Ok(cauchy_transforms(table, z, 0)?[0] / table.tau(0))
}

fn stieltjes(nodes: &[f64], weights: &[f64], nmax: usize) -> (Vec<f64>, Vec<f64>) {
    use crate::numeric::sum_real;
    let dot = |u: &[f64], v: &[f64]| sum_real(u.iter().zip(v).map(|(x, y)| x * y));
    let mass = sum_real(weights.iter().copied());
    let q0: Vec<f64> = weights.iter().map(|w| (w / mass).sqrt()).collect();
    // Lanczos with full reorthogonalization; atoms off the interval make the
    // plain three-term version lose orthogonality quickly.
    let mut basis: Vec<Vec<f64>> = vec![q0];
    let mut a = Vec::with_capacity(nmax);
    let mut b = Vec::with_capacity(nmax + 1);
    for k in 0..=nmax {
        let q = &basis[k];
        let bk = sum_real(nodes.iter().zip(q).map(|(x, v)| x * v * v));
        b.push(bk);
        if k == nmax {
            break;
        }
        let mut r: Vec<f64> = nodes.iter().zip(q).map(|(x, v)| x * v).collect();
        for _ in 0..2 {
            for v in &basis {
                let d = dot(&r, v);
                for (ri, vi) in r.iter_mut().zip(v) {
                    *ri -= d * vi;
                }
            }
        }
        let norm = dot(&r, &r).sqrt();
        a.push(norm);
        for v in r.iter_mut() {
            *v /= norm;
        }
        basis.push(r);
    }
    (a, b)
}

/// Discretization tolerance for the Stieltjes procedure.
pub const STIELTJES_TOL: f64 = 1e-12;

/// Recurrence table of the measure up to degree `nmax`: analytic Jacobi
/// coefficients for pure weights, a discretized Stieltjes procedure otherwise.
pub fn recurrence_for(spec: &BaseMeasureSpec, nmax: usize) -> Result<RecurrenceTable> {
    spec.validate()?;
    if nmax < 1 {
        return Err(Error::InvalidSpec("nmax must be at least 1".into()));
    }
    if spec.mass_points.is_empty() {
        let (a, b) = spec.weight.recurrence(nmax);
        return Ok(RecurrenceTable::from_coefficients(a, b, spec.weight.mass()));
    }
    let discretized = |m: usize| -> Result<(Vec<f64>, Vec<f64>)> {
        let rule = QuadratureRule::for_measure(spec, m)?;
        let (xs, ws): (Vec<f64>, Vec<f64>) = rule
            .nodes
            .iter()
            .copied()
            .zip(rule.weights.iter().copied())
            .chain(rule.discrete_atoms.iter().map(|p| (p.location, p.mass)))
            .unzip();
        Ok(stieltjes(&xs, &ws, nmax))
    };
    let mut m = (4 * nmax).max(200);
    let mut current = discretized(m)?;
    let mut change = f64::INFINITY;
    for _ in 0..3 {
        m *= 2;
        let next = discretized(m)?;
        change = current
            .0
            .iter()
            .zip(&next.0)
            .chain(current.1.iter().zip(&next.1))
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max);
        current = next;
        if change < STIELTJES_TOL {
            let (a, b) = current;
            return Ok(RecurrenceTable::from_coefficients(a, b, spec.total_mass()));
        }
    }
    Err(Error::DiscretizationNonconvergence { change })
}

/// Gauss rule for the continuous part of a measure plus its copied atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub discrete_atoms: Vec<MassPoint>,
    pub weight: Option<WeightKind>,
}

impl QuadratureRule {
    /// m-point Gauss rule of the pure weight plus the measure's atoms.
    pub fn for_measure(spec: &BaseMeasureSpec, m: usize) -> Result<Self> {
        spec.validate()?;
        if m == 0 {
            return Err(Error::InvalidSpec("rule needs at least one node".into()));
        }
        let (nodes, weights) = match spec.weight {
            WeightKind::ChebyshevFirstKind => {
                // ascending nodes
                let nodes = (1..=m)
                    .rev()
                    .map(|k| ((2 * k - 1) as f64 * PI / (2 * m) as f64).cos())
                    .collect();
                (nodes, vec![PI / m as f64; m])
            }
            w => {
                let (a, b) = w.recurrence(m);
                let (x, z) = tridiag_eigen(&b[..m], &a[..m - 1])?;
                let mass = w.mass();
                (x, z.iter().map(|v| mass * v * v).collect())
            }
        };
        Ok(QuadratureRule {
            nodes,
            weights,
            discrete_atoms: spec.mass_points.clone(),
            weight: Some(spec.weight),
        })
    }

    /// Same measure, different number of nodes.
    pub fn resized(&self, m: usize) -> Result<Self> {
        match self.weight {
            Some(w) => QuadratureRule::for_measure(
                &BaseMeasureSpec {
                    weight: w,
                    mass_points: self.discrete_atoms.clone(),
                },
                m,
            ),
            None => Err(Error::InvalidSpec(
                "rule built from a bare table cannot be resized".into(),
            )),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exact_degree(&self) -> usize {
        2 * self.nodes.len() - 1
    }

    pub fn check_degree(&self, degree: usize) -> Result<()> {
        if degree > self.exact_degree() {
            Err(Error::InsufficientRule {
                nodes: self.len(),
                degree,
            })
        } else {
            Ok(())
        }
    }

    /// All abscissae: Gauss nodes followed by atom locations.
    pub fn abscissae(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .copied()
            .chain(self.discrete_atoms.iter().map(|p| p.location))
            .collect()
    }

    /// Weights aligned with [`abscissae`](Self::abscissae).
    pub fn all_weights(&self) -> Vec<f64> {
        self.weights
            .iter()
            .copied()
            .chain(self.discrete_atoms.iter().map(|p| p.mass))
            .collect()
    }

    pub fn integrate<F: Fn(f64) -> C64>(&self, f: F) -> C64 {
        self.abscissae()
            .into_iter()
            .zip(self.all_weights())
            .map(|(x, w)| f(x) * w)
            .collect::<CompensatedSum>()
            .value()
    }

    pub fn continuous_mass(&self) -> f64 {
        crate::numeric::sum_real(self.weights.iter().copied())
    }
}

/// Gauss rule of the measure described by `table` itself (Golub-Welsch on its
/// first m coefficients). Nodes may lie outside [-1, 1] when the table comes
/// from a measure with atoms.
pub fn gauss_rule(table: &RecurrenceTable, m: usize) -> Result<QuadratureRule> {
    if m == 0 || m > table.nmax() {
        return Err(Error::InvalidSpec(format!(
            "rule size {m} outside 1..={}",
            table.nmax()
        )));
    }
    let (x, z) = tridiag_eigen(&table.b[..m], &table.a[..m - 1])?;
    let mass = table.mass();
    Ok(QuadratureRule {
        nodes: x,
        weights: z.iter().map(|v| mass * v * v).collect(),
        discrete_atoms: vec![],
        weight: None,
    })
}

/// Which normalization a polynomial basis uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    MonicMu,
    OrthonormalMu,
}

/// Working precision for recurrence evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    #[default]
    Double,
    Extended,
}

/// Jets `p_k^{(j)}(z)` for k = 0..=n, j = 0..=order; indexed `[k][j]`.
pub fn basis_jets(
    table: &RecurrenceTable,
    n: usize,
    z: C64,
    order: usize,
    basis: Basis,
) -> Vec<Vec<C64>> {
    assert!(n <= table.nmax(), "degree {n} beyond table nmax {}", table.nmax());
    let mut out = vec![vec![C64::new(0.0, 0.0); order + 1]; n + 1];
    out[0][0] = match basis {
        Basis::MonicMu => c(1.0, 0.0),
        Basis::OrthonormalMu => c(table.tau(0), 0.0),
    };
    for k in 0..n {
        let shift = z - table.b(k);
        for j in 0..=order {
            let mut v = shift * out[k][j];
            if j > 0 {
                v += out[k][j - 1] * j as f64;
            }
            if k > 0 {
                let coef = match basis {
                    Basis::MonicMu => table.a(k) * table.a(k),
                    Basis::OrthonormalMu => table.a(k),
                };
                v -= out[k - 1][j] * coef;
            }
            if let Basis::OrthonormalMu = basis {
                v /= table.a(k + 1);
            }
            out[k + 1][j] = v;
        }
    }
    out
}

/// Same as [`basis_jets`] but carried out in double-double arithmetic.
pub fn basis_jets_extended(
    table: &RecurrenceTable,
    n: usize,
    z: C64,
    order: usize,
    basis: Basis,
) -> Vec<Vec<C64>> {
    assert!(n <= table.nmax());
    let zz = CDd::from(z);
    let mut out = vec![vec![CDd::ZERO; order + 1]; n + 1];
    out[0][0] = match basis {
        Basis::MonicMu => CDd::ONE,
        Basis::OrthonormalMu => CDd::from(Dd::new(table.tau(0))),
    };
    for k in 0..n {
        let shift = zz - CDd::from(Dd::new(table.b(k)));
        for j in 0..=order {
            let mut v = shift * out[k][j];
            if j > 0 {
                v += out[k][j - 1].scale(Dd::new(j as f64));
            }
            if k > 0 {
                let coef = match basis {
                    Basis::MonicMu => Dd::new(table.a(k)) * Dd::new(table.a(k)),
                    Basis::OrthonormalMu => Dd::new(table.a(k)),
                };
                v = v - out[k - 1][j].scale(coef);
            }
            if let Basis::OrthonormalMu = basis {
                v = v.scale(Dd::new(table.a(k + 1)).recip());
            }
            out[k + 1][j] = v;
        }
    }
    out.into_iter()
        .map(|row| row.into_iter().map(CDd::to_c64).collect())
        .collect()
}

/// `(p_n(z), p_n'(z), ..., p_n^{(order)}(z))` for the monic or orthonormal
/// polynomial of degree n, by differentiating the recurrence.
pub fn eval_jet(
    table: &RecurrenceTable,
    n: usize,
    z: C64,
    order: usize,
    basis: Basis,
) -> Vec<C64> {
    basis_jets(table, n, z, order, basis).swap_remove(n)
}

/// A polynomial stored as coefficients over the monic or orthonormal basis of
/// the base measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyInBasis {
    pub basis: Basis,
    pub coeffs: Vec<C64>,
}

impl PolyInBasis {
    /// Trailing exact zeros are dropped so the top coefficient is nonzero.
    pub fn new(basis: Basis, mut coeffs: Vec<C64>) -> Self {
        while coeffs.last().is_some_and(|z| *z == C64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        PolyInBasis { basis, coeffs }
    }

    pub fn zero(basis: Basis) -> Self {
        PolyInBasis {
            basis,
            coeffs: vec![],
        }
    }

    /// The n-th basis element itself.
    pub fn unit(basis: Basis, n: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); n + 1];
        coeffs[n] = c(1.0, 0.0);
        PolyInBasis { basis, coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn degree_or_zero(&self) -> usize {
        self.degree().unwrap_or(0)
    }

    /// Coefficient of x^deg.
    pub fn leading_coefficient(&self, table: &RecurrenceTable) -> C64 {
        match self.degree() {
            None => c(0.0, 0.0),
            Some(d) => match self.basis {
                Basis::MonicMu => self.coeffs[d],
                Basis::OrthonormalMu => self.coeffs[d] * table.tau(d),
            },
        }
    }

    pub fn to_basis(&self, table: &RecurrenceTable, basis: Basis) -> PolyInBasis {
        if basis == self.basis {
            return self.clone();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, v)| match basis {
                // sum c_k L_k = sum (c_k / tau_k) l_k
                Basis::OrthonormalMu => v / table.tau(k),
                Basis::MonicMu => v * table.tau(k),
            })
            .collect();
        PolyInBasis::new(basis, coeffs)
    }

    pub fn scaled(&self, s: C64) -> PolyInBasis {
        PolyInBasis::new(self.basis, self.coeffs.iter().map(|v| v * s).collect())
    }

    /// `self + s * other`; both must share a basis.
    pub fn axpy(&self, s: C64, other: &PolyInBasis) -> PolyInBasis {
        assert_eq!(self.basis, other.basis);
        let len = self.coeffs.len().max(other.coeffs.len());
        let zero = c(0.0, 0.0);
        let coeffs = (0..len)
            .map(|k| {
                self.coeffs.get(k).copied().unwrap_or(zero)
                    + s * other.coeffs.get(k).copied().unwrap_or(zero)
            })
            .collect();
        PolyInBasis::new(self.basis, coeffs)
    }

    /// Jet `(p(z), p'(z), ..., p^{(order)}(z))`.
    pub fn eval_jet(&self, table: &RecurrenceTable, z: C64, order: usize) -> Vec<C64> {
        self.eval_jet_with(table, z, order, Precision::Double)
    }

    pub fn eval_jet_with(
        &self,
        table: &RecurrenceTable,
        z: C64,
        order: usize,
        precision: Precision,
    ) -> Vec<C64> {
        let Some(d) = self.degree() else {
            return vec![c(0.0, 0.0); order + 1];
        };
        let jets = match precision {
            Precision::Double => basis_jets(table, d, z, order, self.basis),
            Precision::Extended => basis_jets_extended(table, d, z, order, self.basis),
        };
        self.combine_jets(&jets, order)
    }

    /// Combine precomputed basis jets `[k][j]` with the coefficients.
    pub fn combine_jets(&self, jets: &[Vec<C64>], order: usize) -> Vec<C64> {
        (0..=order)
            .map(|j| {
                self.coeffs
                    .iter()
                    .zip(jets)
                    .map(|(cf, row)| cf * row[j])
                    .collect::<CompensatedSum>()
                    .value()
            })
            .collect()
    }

    /// Sum of |c_k p_k^{(j)}(z)| for each j: the magnitude scale of an
    /// evaluation, used to judge residuals.
    pub fn abs_jet(&self, jets: &[Vec<C64>], order: usize) -> Vec<f64> {
        (0..=order)
            .map(|j| {
                self.coeffs
                    .iter()
                    .zip(jets)
                    .map(|(cf, row)| (cf * row[j]).norm())
                    .sum()
            })
            .collect()
    }

    pub fn eval(&self, table: &RecurrenceTable, z: C64) -> C64 {
        self.eval_jet(table, z, 0)[0]
    }
}

/// Orthonormal basis values (and optionally derivatives) tabulated on the
/// abscissae of a quadrature rule: `values[j][k][i] = l_k^{(j)}(x_i)`.
#[derive(Debug, Clone)]
pub struct TabulatedBasis {
    pub abscissae: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<Vec<Vec<f64>>>,
    pub degree: usize,
}

impl TabulatedBasis {
    pub fn new(table: &RecurrenceTable, rule: &QuadratureRule, degree: usize, order: usize) -> Self {
        let abscissae = rule.abscissae();
        let weights = rule.all_weights();
        let mut values = vec![vec![vec![0.0; abscissae.len()]; degree + 1]; order + 1];
        for (i, &x) in abscissae.iter().enumerate() {
            let jets = basis_jets(table, degree, c(x, 0.0), order, Basis::OrthonormalMu);
            for (k, row) in jets.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    values[j][k][i] = v.re;
                }
            }
        }
        TabulatedBasis {
            abscissae,
            weights,
            values,
            degree,
        }
    }

    /// Values of the `order`-th derivative of p on the abscissae.
    pub fn poly_values(&self, table: &RecurrenceTable, p: &PolyInBasis, order: usize) -> Vec<C64> {
        let Some(d) = p.degree() else {
            return vec![c(0.0, 0.0); self.abscissae.len()];
        };
        assert!(d <= self.degree, "polynomial degree {d} beyond tabulation {}", self.degree);
        let orth = p.to_basis(table, Basis::OrthonormalMu);
        (0..self.abscissae.len())
            .map(|i| {
                orth.coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, cf)| cf * self.values[order][k][i])
                    .collect::<CompensatedSum>()
                    .value()
            })
            .collect()
    }

    /// Weighted sum of pointwise values.
    pub fn integrate(&self, f: &[C64]) -> C64 {
        f.iter()
            .zip(&self.weights)
            .map(|(v, w)| v * *w)
            .collect::<CompensatedSum>()
            .value()
    }

    /// Sum of |w_i f_i|.
    pub fn integrate_abs(&self, f: &[C64]) -> f64 {
        f.iter().zip(&self.weights).map(|(v, w)| v.norm() * w).sum()
    }
}

/// `∫ p q dμ` including atomic terms.
pub fn inner_mu(
    p: &PolyInBasis,
    q: &PolyInBasis,
    table: &RecurrenceTable,
    rule: &QuadratureRule,
) -> Result<C64> {
    let (Some(dp), Some(dq)) = (p.degree(), q.degree()) else {
        return Ok(c(0.0, 0.0));
    };
    rule.check_degree(dp + dq)?;
    let tab = TabulatedBasis::new(table, rule, dp.max(dq), 0);
    let pv = tab.poly_values(table, p, 0);
    let qv = tab.poly_values(table, q, 0);
    let prod: Vec<C64> = pv.iter().zip(&qv).map(|(a, b)| a * b).collect();
    Ok(tab.integrate(&prod))
}

/// A base measure bundled with a recurrence table of sufficient length.
#[derive(Debug, Clone)]
pub struct BaseMeasure {
    pub spec: BaseMeasureSpec,
    pub table: RecurrenceTable,
}

impl BaseMeasure {
    pub fn new(spec: BaseMeasureSpec, nmax: usize) -> Result<Self> {
        let table = recurrence_for(&spec, nmax)?;
        Ok(BaseMeasure { spec, table })
    }

    /// Gauss rule with m nodes plus the atoms.
    pub fn rule(&self, m: usize) -> Result<QuadratureRule> {
        QuadratureRule::for_measure(&self.spec, m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cheb() -> BaseMeasureSpec {
        BaseMeasureSpec::pure(WeightKind::ChebyshevFirstKind)
    }

    #[test]
    fn chebyshev_table_is_classical() {
        let t = recurrence_for(&cheb(), 5).unwrap();
        assert_eq!(t.b, vec![0.0; 6]);
        assert_abs_diff_eq!(t.a[0], 0.5f64.sqrt(), epsilon = 1e-15);
        for k in 2..=5 {
            assert_abs_diff_eq!(t.a(k), 0.5, epsilon = 1e-15);
        }
        // tau_{n+1} / tau_n = 1 / a_{n+1}
        for k in 0..5 {
            assert_abs_diff_eq!(t.tau(k + 1) / t.tau(k), 1.0 / t.a(k + 1), epsilon = 1e-12);
        }
    }

    #[test]
    fn jacobi_reduces_to_named_weights() {
        let named = WeightKind::ChebyshevFirstKind.recurrence(10);
        let generic = WeightKind::Jacobi { alpha: -0.5, beta: -0.5 }.recurrence(10);
        for (u, v) in named.0.iter().zip(&generic.0) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-14);
        }
        let m = WeightKind::Jacobi { alpha: 0.0, beta: 0.0 }.mass();
        assert_abs_diff_eq!(m, 2.0, epsilon = 1e-13);
        let m = WeightKind::Jacobi { alpha: -0.5, beta: -0.5 }.mass();
        assert_abs_diff_eq!(m, PI, epsilon = 1e-13);
    }

    #[test]
    fn legendre_coefficients() {
        let t = recurrence_for(&BaseMeasureSpec::pure(WeightKind::Legendre), 12).unwrap();
        for n in 1..=12 {
            let nf = n as f64;
            assert_abs_diff_eq!(t.a(n).powi(2), nf * nf / (4.0 * nf * nf - 1.0), epsilon = 1e-14);
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = cheb().with_atom(0.5, 1.0);
        assert!(matches!(recurrence_for(&bad, 4), Err(Error::InvalidSpec(_))));
        let bad = cheb().with_atom(2.0, -1.0);
        assert!(bad.validate().is_err());
        assert!(recurrence_for(&cheb(), 0).is_err());
        let bad = BaseMeasureSpec::pure(WeightKind::Jacobi { alpha: -1.5, beta: 0.0 });
        assert!(bad.validate().is_err());
    }

    #[test]
    fn gauss_chebyshev_three_points() {
        let t = recurrence_for(&cheb(), 5).unwrap();
        let r = gauss_rule(&t, 3).unwrap();
        let mut expect: Vec<f64> = (1..=3).map(|k| ((2 * k - 1) as f64 * PI / 6.0).cos()).collect();
        expect.sort_by(f64::total_cmp);
        for (x, e) in r.nodes.iter().zip(&expect) {
            assert_abs_diff_eq!(x, e, epsilon = 1e-14);
        }
        for w in &r.weights {
            assert_abs_diff_eq!(*w, PI / 3.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn gauss_legendre_two_points() {
        let t = recurrence_for(&BaseMeasureSpec::pure(WeightKind::Legendre), 4).unwrap();
        let r = gauss_rule(&t, 2).unwrap();
        assert_abs_diff_eq!(r.nodes[0], -1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(r.nodes[1], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(r.weights[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.weights[1], 1.0, epsilon = 1e-14);
        let r = QuadratureRule::for_measure(&BaseMeasureSpec::pure(WeightKind::Legendre), 2).unwrap();
        assert_abs_diff_eq!(r.continuous_mass(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn monic_chebyshev_values() {
        let t = recurrence_for(&cheb(), 6).unwrap();
        let v = eval_jet(&t, 2, c(2.0, 0.0), 0, Basis::MonicMu);
        assert_abs_diff_eq!(v[0].re, 3.5, epsilon = 1e-14);
        let v = eval_jet(&t, 3, c(0.0, 0.0), 1, Basis::MonicMu);
        assert_abs_diff_eq!(v[1].re, -0.75, epsilon = 1e-14);
    }

    #[test]
    fn monic_and_orthonormal_agree() {
        let spec = cheb().with_atom(2.0, 0.5);
        let t = recurrence_for(&spec, 30).unwrap();
        for &z in &[c(3.0, 0.0), c(0.3, 0.2), c(-1.5, 1.5)] {
            for n in [0, 1, 7, 30] {
                let m = eval_jet(&t, n, z, 2, Basis::MonicMu);
                let o = eval_jet(&t, n, z, 2, Basis::OrthonormalMu);
                for j in 0..3 {
                    let lhs = o[j];
                    let rhs = m[j] * t.tau(n);
                    assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1e-300), "{n} {j}");
                }
            }
        }
    }

    #[test]
    fn extended_evaluation_matches_double() {
        let t = recurrence_for(&BaseMeasureSpec::pure(WeightKind::Legendre), 60).unwrap();
        let z = c(1.2, 0.4);
        let d = eval_jet(&t, 60, z, 2, Basis::OrthonormalMu);
        let e = basis_jets_extended(&t, 60, z, 2, Basis::OrthonormalMu).swap_remove(60);
        for j in 0..3 {
            assert!((d[j] - e[j]).norm() < 1e-12 * e[j].norm());
        }
    }

    #[test]
    fn orthonormal_inner_products() {
        let spec = cheb();
        let t = recurrence_for(&spec, 10).unwrap();
        let rule = QuadratureRule::for_measure(&spec, 8).unwrap();
        let l3 = PolyInBasis::unit(Basis::OrthonormalMu, 3);
        let l5 = PolyInBasis::unit(Basis::OrthonormalMu, 5);
        assert_abs_diff_eq!(inner_mu(&l3, &l3, &t, &rule).unwrap().re, 1.0, epsilon = 1e-13);
        assert!(inner_mu(&l3, &l5, &t, &rule).unwrap().norm() < 1e-14);
        let l10 = PolyInBasis::unit(Basis::OrthonormalMu, 10);
        assert!(matches!(
            inner_mu(&l10, &l10, &t, &rule),
            Err(Error::InsufficientRule { .. })
        ));
    }

    #[test]
    fn basis_conversion_roundtrip() {
        let t = recurrence_for(&BaseMeasureSpec::pure(WeightKind::Legendre), 8).unwrap();
        let p = PolyInBasis::new(Basis::MonicMu, vec![c(1.0, 2.0), c(0.0, -1.0), c(3.0, 0.0)]);
        let q = p.to_basis(&t, Basis::OrthonormalMu).to_basis(&t, Basis::MonicMu);
        for (u, v) in p.coeffs.iter().zip(&q.coeffs) {
            assert!((u - v).norm() < 1e-14);
        }
        let z = c(0.7, -0.1);
        let a = p.eval(&t, z);
        let b = p.to_basis(&t, Basis::OrthonormalMu).eval(&t, z);
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn table_json_roundtrip() {
        let t = recurrence_for(&cheb(), 4).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.starts_with("{\"a\":"));
        let back: RecurrenceTable = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn second_kind_functions_for_chebyshev() {
        let t = recurrence_for(&BaseMeasureSpec::pure(WeightKind::ChebyshevFirstKind), 200).unwrap();
        let z = c(3.0, 0.5);
        let root = (z - 1.0).sqrt() * (z + 1.0).sqrt();
        let phi = z + root;
        let psi = cauchy_transforms(&t, z, 30).unwrap();
        assert!((stieltjes_transform(&t, z).unwrap() - std::f64::consts::PI / root).norm() < 1e-14);
        for k in 1..30 {
            assert!((psi[k + 1] / psi[k] - 1.0 / phi).norm() < 1e-13);
        }
        let near = recurrence_for(&BaseMeasureSpec::pure(WeightKind::ChebyshevFirstKind), 20).unwrap();
        assert!(cauchy_transforms(&near, c(1.0, 0.01), 5).is_err());
    }
}
