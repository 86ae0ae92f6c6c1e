//! The exterior conformal map `phi(z) = z + sqrt(z^2 - 1)` of the cut plane
//! and the closed-form limit functions built from it.

use crate::error::{Error, Result};
use crate::measure::interval_distance;
use crate::modified::RationalModifier;
use crate::numeric::{c, C64};

/// Inputs closer than this to [-1, 1] are rejected.
pub const CUT_TOL: f64 = 1e-12;

fn check_off_cut(z: C64) -> Result<()> {
    if !z.re.is_finite() || !z.im.is_finite() || interval_distance(z) < CUT_TOL {
        return Err(Error::OnCut {
            re: z.re,
            im: z.im,
            tol: CUT_TOL,
        });
    }
    Ok(())
}

/// `sqrt(z^2 - 1)` on the branch positive for z > 1 and continuous off the cut.
pub fn sqrt_z2m1(z: C64) -> Result<C64> {
    check_off_cut(z)?;
    Ok((z - 1.0).sqrt() * (z + 1.0).sqrt())
}

pub fn phi(z: C64) -> Result<C64> {
    Ok(z + sqrt_z2m1(z)?)
}

/// `phi'(z) = phi(z) / sqrt(z^2 - 1)`.
pub fn phi_prime(z: C64) -> Result<C64> {
    let w = sqrt_z2m1(z)?;
    Ok((z + w) / w)
}

/// Cauchy transform of the normalized Chebyshev polynomial `T_nu` against
/// the arcsine weight: `(1/pi) ∫ T_nu(x) / ((z - x) sqrt(1 - x^2)) dx`,
/// which equals `1 / (phi(z)^nu sqrt(z^2 - 1))`.
pub fn cheb_transform(nu: u32, z: C64) -> Result<C64> {
    let w = sqrt_z2m1(z)?;
    let f = z + w;
    Ok(1.0 / (f.powi(nu as i32) * w))
}

/// `(phi(z) - phi(c)) / (z - c)`, continued by `phi'(c)` at z = c.
fn phi_difference_quotient(z: C64, cpt: C64) -> Result<C64> {
    let fz = phi(z)?;
    let fc = phi(cpt)?;
    let h = z - cpt;
    if h.norm() <= 1e-10 * (1.0 + cpt.norm()) {
        return phi_prime(cpt);
    }
    Ok((fz - fc) / h)
}

/// `prod_j ((phi(z) - phi(c_j))^2 / (2 phi(z) (z - c_j)))^{e_j}`.
pub fn limit_sobolev(z: C64, factors: &[(C64, u32)]) -> Result<C64> {
    let fz = phi(z)?;
    let mut out = c(1.0, 0.0);
    for &(cj, e) in factors {
        let fc = phi(cj)?;
        let h = z - cj;
        let base = if h.norm() <= 1e-10 * (1.0 + cj.norm()) {
            // (phi(z)-phi(c))^2/(z-c) -> 0 as z -> c
            c(0.0, 0.0)
        } else {
            (fz - fc) * (fz - fc) / (2.0 * fz * h)
        };
        out *= base.powi(e as i32);
    }
    Ok(out)
}

/// `(1/2)^A prod (1 - 1/(phi(z) phi(d_j)))^{B_j} prod ((phi(z) - phi(c_i))/(z - c_i))^{A_i}`.
pub fn limit_modified(z: C64, r: &RationalModifier) -> Result<C64> {
    let fz = phi(z)?;
    let mut out = c(0.5f64.powi(r.zero_degree() as i32), 0.0);
    for &(d, b) in &r.poles {
        let fd = phi(d)?;
        out *= (1.0 - 1.0 / (fz * fd)).powi(b as i32);
    }
    for &(ci, a) in &r.zeros {
        out *= phi_difference_quotient(z, ci)?.powi(a as i32);
    }
    Ok(out)
}

/// Limit of `kappa_n^2 / tau_n^2`:
/// `(-2)^{A-B} prod phi(d_j)^{B_j} / prod phi(c_i)^{A_i}`.
pub fn kappa_tau_limit(r: &RationalModifier) -> Result<C64> {
    let a = r.zero_degree() as i32;
    let b = r.pole_degree() as i32;
    let mut out = c(-2.0, 0.0).powi(a - b);
    for &(d, m) in &r.poles {
        out *= phi(d)?.powi(m as i32);
    }
    for &(ci, m) in &r.zeros {
        out /= phi(ci)?.powi(m as i32);
    }
    Ok(out)
}

/// `|((phi(z) - phi(c)) / (2 (z - c))) (1 - 1/(phi(z) phi(c))) - 1|`.
pub fn factor_identity_check(z: C64, cpt: C64) -> Result<f64> {
    let q = phi_difference_quotient(z, cpt)? / 2.0;
    let lhs = q * (1.0 - 1.0 / (phi(z)? * phi(cpt)?));
    Ok((lhs - 1.0).norm())
}

/// Exponent data for the limit functions: attraction points with the number
/// of zeros each one attracts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LimitSpec {
    pub sobolev_factors: Vec<(C64, u32)>,
    pub modifier: Option<RationalModifier>,
    pub pade_factors: Vec<(C64, u32)>,
}

impl LimitSpec {
    pub fn validate(&self) -> Result<()> {
        let points = self
            .sobolev_factors
            .iter()
            .chain(&self.pade_factors)
            .map(|p| p.0);
        for p in points {
            check_off_cut(p)?;
        }
        if let Some(r) = &self.modifier {
            for p in r.zeros.iter().chain(&r.poles) {
                check_off_cut(p.0)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn phi_reference_values() {
        let s3 = 3f64.sqrt();
        assert!(close(phi(c(2.0, 0.0)).unwrap(), c(2.0 + s3, 0.0), 1e-15));
        assert!(close(phi(c(-2.0, 0.0)).unwrap(), c(-2.0 - s3, 0.0), 1e-15));
        let expect = c(0.0, 1.0 + 2f64.sqrt());
        assert!(close(phi(c(0.0, 1.0)).unwrap(), expect, 1e-15));
    }

    #[test]
    fn phi_matches_path_continuation() {
        // follow the root of t^2 - 2 z t + 1 = 0 from z = 2 to z = i along a
        // path avoiding the cut, picking the root nearest the previous one
        let steps = 4000;
        let mut t = c(2.0 + 3f64.sqrt(), 0.0);
        for k in 1..=steps {
            let s = k as f64 / steps as f64;
            // quarter circle of radius 2 then straight down to i
            let z = if s <= 0.5 {
                let th = PI * s;
                c(2.0 * th.cos(), 2.0 * th.sin())
            } else {
                c(0.0, 2.0 - 2.0 * (s - 0.5))
            };
            let disc = (z * z - 1.0).sqrt();
            let r1 = z + disc;
            let r2 = z - disc;
            t = if (r1 - t).norm() < (r2 - t).norm() { r1 } else { r2 };
        }
        assert!(close(phi(c(0.0, 1.0)).unwrap(), t, 1e-12));
    }

    #[test]
    fn cut_points_rejected() {
        assert!(matches!(phi(c(0.3, 0.0)), Err(Error::OnCut { .. })));
        assert!(matches!(phi(c(1.0, 1e-14)), Err(Error::OnCut { .. })));
        assert!(cheb_transform(0, c(-1.0, 0.0)).is_err());
        assert!(phi(c(1.0 + 1e-9, 0.0)).is_ok());
    }

    #[test]
    fn cheb_transform_reference_values() {
        let s3 = 3f64.sqrt();
        assert!(close(cheb_transform(0, c(2.0, 0.0)).unwrap(), c(1.0 / s3, 0.0), 1e-15));
        assert!(close(cheb_transform(1, c(2.0, 0.0)).unwrap(), c(2.0 / s3 - 1.0, 0.0), 1e-14));
    }

    #[test]
    fn cheb_transform_recurrence() {
        // from x T_nu = (T_{nu+1} + T_{nu-1})/2 and T_1 = x T_0:
        // C_1 = z C_0 - 1, C_{nu+1} = 2 z C_nu - C_{nu-1}
        for &z in &[c(2.0, 0.0), c(1.5, 0.0), c(0.0, 2.0), c(-3.0, 0.0), c(0.4, 0.7)] {
            let v: Vec<C64> = (0..=10).map(|k| cheb_transform(k, z).unwrap()).collect();
            assert!(close(v[1], z * v[0] - 1.0, 1e-13));
            for k in 1..10 {
                let rhs = 2.0 * z * v[k] - v[k - 1];
                assert!((v[k + 1] - rhs).norm() < 1e-11, "{z} {k}");
            }
        }
    }

    #[test]
    fn limit_reference_values() {
        let z = c(3.0, 0.0);
        let f3 = phi(z).unwrap();
        let f2 = phi(c(2.0, 0.0)).unwrap();
        let v = limit_sobolev(z, &[(c(2.0, 0.0), 1)]).unwrap();
        assert!(close(v, (f3 - f2) * (f3 - f2) / (2.0 * f3), 1e-14));
        // 3 + 2 sqrt 2 = 5.828..., 2 + sqrt 3 = 3.732...
        assert!((v.re - 0.377_013_692_473_103_8).abs() < 1e-12, "{v}");
        assert_eq!(limit_sobolev(z, &[]).unwrap(), c(1.0, 0.0));
        assert_eq!(limit_sobolev(c(2.0, 0.0), &[(c(2.0, 0.0), 1)]).unwrap(), c(0.0, 0.0));

        let one = RationalModifier::default();
        assert_eq!(limit_modified(z, &one).unwrap(), c(1.0, 0.0));
        assert_eq!(kappa_tau_limit(&one).unwrap(), c(1.0, 0.0));

        let zero2 = RationalModifier::new(vec![(c(2.0, 0.0), 1)], vec![]);
        assert!(close(limit_modified(z, &zero2).unwrap(), (f3 - f2) / 2.0, 1e-14));
        assert!(close(kappa_tau_limit(&zero2).unwrap(), -2.0 / f2, 1e-14));

        let pole = RationalModifier::new(vec![], vec![(c(0.0, 2.0), 1)]);
        let f2i = phi(c(0.0, 2.0)).unwrap();
        assert!(close(limit_modified(z, &pole).unwrap(), 1.0 - 1.0 / (f3 * f2i), 1e-14));
    }

    #[test]
    fn factor_identity_examples() {
        assert!(factor_identity_check(c(3.0, 0.0), c(2.0, 0.0)).unwrap() < 1e-13);
        assert!(factor_identity_check(c(0.0, 2.0), c(-3.0, 0.0)).unwrap() < 1e-13);
        assert!(factor_identity_check(c(1.01, 0.0), c(1.02, 0.0)).unwrap() < 1e-10);
    }

    #[test]
    fn limit_spec_validation() {
        let ok = LimitSpec {
            sobolev_factors: vec![(c(2.0, 0.0), 1)],
            ..Default::default()
        };
        assert!(ok.validate().is_ok());
        let bad = LimitSpec {
            pade_factors: vec![(c(0.5, 0.0), 1)],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    fn off_cut() -> impl Strategy<Value = C64> {
        (-4.0f64..4.0, -4.0f64..4.0)
            .prop_filter("off the cut", |(x, y)| interval_distance(c(*x, *y)) > 1e-3)
            .prop_map(|(x, y)| c(x, y))
    }

    proptest! {
        #[test]
        fn phi_inverts_joukowski(z in off_cut()) {
            let f = phi(z).unwrap();
            prop_assert!(f.norm() > 1.0);
            prop_assert!((f + 1.0 / f - 2.0 * z).norm() <= 1e-13 * (1.0 + z.norm()));
        }

        #[test]
        fn phi_is_conjugate_symmetric(z in off_cut()) {
            let a = phi(z.conj()).unwrap();
            let b = phi(z).unwrap().conj();
            prop_assert!((a - b).norm() <= 1e-14 * b.norm());
        }

        #[test]
        fn factor_identity_holds(z in off_cut(), w in off_cut()) {
            prop_assert!(factor_identity_check(z, w).unwrap() < 1e-9);
        }
    }
}
