//! Roots of polynomials given over the basis of μ and counts of the zeros
//! attracted by each point.

use crate::error::{Error, Result};
use crate::linalg::complex_eigenvalues;
use crate::measure::{basis_jets, interval_distance, Basis, PolyInBasis, RecurrenceTable};
use crate::numeric::{c, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Newton steps applied to each eigenvalue.
const POLISH_STEPS: usize = 3;

/// `|p(root)|` relative to `sum |p_k l_k(root)|`.
pub fn root_residual(p: &PolyInBasis, table: &RecurrenceTable, z: C64) -> f64 {
    let orth = p.to_basis(table, Basis::OrthonormalMu);
    let d = orth.coeffs.len() - 1;
    let jets = basis_jets(table, d, z, 0, Basis::OrthonormalMu);
    let abs: f64 = orth.coeffs.iter().zip(&jets).map(|(a, l)| (a * l[0]).norm()).sum();
    orth.combine_jets(&jets, 0)[0].norm() / abs.max(f64::MIN_POSITIVE)
}

/// All roots from the eigenvalues of the comrade matrix, polished by Newton
/// steps that are kept only when they lower the residual.
pub fn roots(p: &PolyInBasis, table: &RecurrenceTable) -> Result<Vec<C64>> {
    let orth = p.to_basis(table, Basis::OrthonormalMu);
    let n = orth
        .degree()
        .ok_or(Error::DegreeMismatch { expected: 1, found: 0 })?;
    if n == 0 {
        return Ok(vec![]);
    }
    if n > table.nmax() {
        return Err(Error::DegreeMismatch {
            expected: table.nmax(),
            found: n,
        });
    }
    let lead = orth.coeffs[n];
    let mut m = DMatrix::from_element(n, n, c(0.0, 0.0));
    for k in 0..n {
        m[(k, k)] = c(table.b(k), 0.0);
        if k + 1 < n {
            m[(k, k + 1)] = c(table.a(k + 1), 0.0);
            m[(k + 1, k)] = c(table.a(k + 1), 0.0);
        }
    }
    for k in 0..n {
        m[(n - 1, k)] -= table.a(n) * orth.coeffs[k] / lead;
    }
    let mut out = complex_eigenvalues(m)?;
    for z in out.iter_mut() {
        let mut best = root_residual(&orth, table, *z);
        for _ in 0..POLISH_STEPS {
            let jet = orth.eval_jet(table, *z, 1);
            if jet[1].norm() == 0.0 {
                break;
            }
            let trial = *z - jet[0] / jet[1];
            let res = root_residual(&orth, table, trial);
            if !(res < best) {
                break;
            }
            *z = trial;
            best = res;
        }
    }
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroReport {
    pub roots: Vec<C64>,
    pub centers: Vec<C64>,
    pub cluster_counts: Vec<usize>,
    pub support_count: usize,
    pub unassigned: Vec<C64>,
    pub radius: f64,
    pub support_band: f64,
}

pub const DEFAULT_RADIUS_FRACTION: f64 = 0.1;
pub const DEFAULT_SUPPORT_BAND: f64 = 0.05;

/// Smallest distance from any center to [-1, 1] or to another center.
pub fn separation(centers: &[C64]) -> f64 {
    let mut d = f64::INFINITY;
    for (i, a) in centers.iter().enumerate() {
        d = d.min(interval_distance(*a));
        for b in &centers[..i] {
            d = d.min((a - b).norm());
        }
    }
    d
}

pub fn default_radius(centers: &[C64]) -> f64 {
    let s = separation(centers);
    if s.is_finite() {
        DEFAULT_RADIUS_FRACTION * s
    } else {
        DEFAULT_SUPPORT_BAND
    }
}

/// Count roots within `radius` of each center and within `support_band` of
/// [-1, 1]; everything else is listed as unassigned.
pub fn cluster(
    roots: &[C64],
    centers: &[C64],
    radius: Option<f64>,
    support_band: Option<f64>,
) -> Result<ZeroReport> {
    let radius = radius.unwrap_or_else(|| default_radius(centers));
    let band = support_band.unwrap_or(DEFAULT_SUPPORT_BAND);
    if !(radius > 0.0) || !(band >= 0.0) {
        return Err(Error::Config(format!("radius {radius} and band {band} must be positive")));
    }
    if !centers.is_empty() && radius >= 0.5 * separation(centers) {
        return Err(Error::Config(format!(
            "radius {radius} overlaps: centers are only {} apart from each other or from [-1, 1]",
            separation(centers)
        )));
    }
    let mut counts = vec![0; centers.len()];
    let mut support = 0;
    let mut unassigned = Vec::new();
    for z in roots {
        if let Some(j) = centers.iter().position(|cj| (z - cj).norm() <= radius) {
            counts[j] += 1;
        } else if interval_distance(*z) <= band {
            support += 1;
        } else {
            unassigned.push(*z);
        }
    }
    Ok(ZeroReport {
        roots: roots.to_vec(),
        centers: centers.to_vec(),
        cluster_counts: counts,
        support_count: support,
        unassigned,
        radius,
        support_band: band,
    })
}

/// Whether the per-center counts survive halving the radius.
pub fn stable_under_halving(report: &ZeroReport) -> Result<bool> {
    let half = cluster(
        &report.roots,
        &report.centers,
        Some(0.5 * report.radius),
        Some(report.support_band),
    )?;
    Ok(half.cluster_counts == report.cluster_counts)
}
