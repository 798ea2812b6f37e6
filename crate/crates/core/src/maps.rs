//! The three elementary maps of the phase representation.
//!
//! * `H(phi, eps) = U^-1(U(phi) + eps)` — sub-threshold interaction,
//! * `J(phi, eps) = U^-1(R(U(phi) + eps - 1))` — supra-threshold
//!   interaction (fire and partially reset),
//! * `S(phi, sigma) = phi + sigma` — free evolution (phase shift).
//!
//! The checked entry points enforce the phase-space domains: `H`
//! rejects inputs that would cross the threshold (callers must route
//! those to `J`), `J` rejects sub-threshold inputs. Analysis code that
//! follows the maps outside `[0, 1]` uses [`h_ext`] instead, which
//! propagates `inf` past the rise function's natural domain.

use crate::error::{Error, Result};
use crate::reset::PartialReset;
use crate::rise::RiseFunction;
use crate::{THRESHOLD, THRESHOLD_TOL};

/// Sub-threshold interaction `H_eps(phi) = U^-1(U(phi) + eps)`.
///
/// Requires `eps >= 0` and `U(phi) + eps <= 1`.
pub fn h(phi: f64, eps: f64, u: &RiseFunction) -> Result<f64> {
    if eps < 0.0 {
        return Err(Error::InvalidParameter {
            name: "eps",
            value: eps,
            requirement: "eps >= 0 (use h_inverse for negative strengths)",
        });
    }
    let total = u.eval(phi) + eps;
    if total > THRESHOLD + THRESHOLD_TOL {
        return Err(Error::SupraThreshold { total });
    }
    Ok(u.inv(total.min(THRESHOLD)))
}

/// Inverse interaction `H_eps^-1 = H_{-eps}`: `U^-1(U(phi) - eps)`.
///
/// Requires `eps >= 0` and `U(phi) - eps >= 0`.
pub fn h_inverse(phi: f64, eps: f64, u: &RiseFunction) -> Result<f64> {
    if eps < 0.0 {
        return Err(Error::InvalidParameter {
            name: "eps",
            value: eps,
            requirement: "eps >= 0",
        });
    }
    let total = u.eval(phi) - eps;
    if total < -THRESHOLD_TOL {
        return Err(Error::BelowReset { total });
    }
    Ok(u.inv(total.max(0.0)))
}

/// Supra-threshold interaction
/// `J_eps(phi) = U^-1(R(U(phi) + eps - 1))`.
///
/// Requires `zeta = U(phi) + eps - 1 >= 0` and a reset landing strictly
/// below threshold.
pub fn j(phi: f64, eps: f64, r: &PartialReset, u: &RiseFunction) -> Result<f64> {
    let zeta = u.eval(phi) + eps - THRESHOLD;
    if zeta < -THRESHOLD_TOL {
        return Err(Error::NegativeSurplus { zeta });
    }
    let reset = r.evaluate(zeta.max(0.0));
    if reset >= THRESHOLD {
        return Err(Error::ResetAboveThreshold { reset });
    }
    Ok(u.inv(reset))
}

/// Phase shift `S(phi, sigma) = phi + sigma`. No wrapping; callers
/// manage section normalization.
#[inline]
pub fn s(phi: f64, sigma: f64) -> f64 {
    phi + sigma
}

/// Applies `S_sigma . H_eps` for each `(sigma, eps)` pair in order
/// (interaction first, then shift). Domain errors carry the 0-based
/// index of the failing pair.
pub fn compose_chain(phi: f64, chain: &[(f64, f64)], u: &RiseFunction) -> Result<f64> {
    let mut cur = phi;
    for (idx, &(sigma, eps)) in chain.iter().enumerate() {
        cur = h(cur, eps, u).map_err(|e| Error::ChainStep {
            index: idx,
            source: Box::new(e),
        })?;
        cur = s(cur, sigma);
    }
    Ok(cur)
}

/// Unchecked `H`: follows the closed form wherever the rise function is
/// defined and yields `inf` past its domain. `eps` may be negative.
#[inline]
pub fn h_ext(phi: f64, eps: f64, u: &RiseFunction) -> f64 {
    let x = u.eval(phi);
    if !x.is_finite() {
        return x;
    }
    u.inv(x + eps)
}

/// Derivative of `H_eps` at `phi`: `U'(phi) / U'(H_eps(phi))`.
#[inline]
pub fn h_prime_ext(phi: f64, eps: f64, u: &RiseFunction) -> f64 {
    let img = h_ext(phi, eps, u);
    if !img.is_finite() {
        return f64::NAN;
    }
    u.d1(phi) / u.d1(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn h_identity_cases() {
        let id = RiseFunction::identity();
        assert_abs_diff_eq!(h(0.4, 0.0, &id).unwrap(), 0.4);
        assert_abs_diff_eq!(h(0.3, 0.2, &id).unwrap(), 0.5);
        let ub = RiseFunction::ub(-3.0).unwrap();
        assert_abs_diff_eq!(h(0.4, 0.0, &ub).unwrap(), 0.4, epsilon = 1e-14);
    }

    #[test]
    fn h_ub_frozen_value() {
        // U_b^-1(U_b(0.5) + 0.1) at b = -3, high-precision reference
        let ub = RiseFunction::ub(-3.0).unwrap();
        assert_abs_diff_eq!(
            h(0.5, 0.1, &ub).unwrap(),
            0.64317089950436545663,
            epsilon = 1e-15
        );
    }

    #[test]
    fn h_domain_errors() {
        let id = RiseFunction::identity();
        assert!(matches!(
            h(0.9, 0.2, &id),
            Err(Error::SupraThreshold { .. })
        ));
        assert!(h(0.8, 0.2, &id).is_ok()); // exactly at threshold is fine
        assert!(matches!(
            h(0.5, -0.1, &id),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn h_inverse_round_trip_and_values() {
        let id = RiseFunction::identity();
        assert_abs_diff_eq!(h_inverse(0.5, 0.2, &id).unwrap(), 0.3);
        let ub = RiseFunction::ub(-3.0).unwrap();
        let fwd = h(0.3, 0.2, &ub).unwrap();
        assert_abs_diff_eq!(h_inverse(fwd, 0.2, &ub).unwrap(), 0.3, epsilon = 1e-12);
        // U_b(x) = U_b(0.9) - 0.05, high-precision reference
        assert_abs_diff_eq!(
            h_inverse(0.9, 0.05, &ub).unwrap(),
            0.87533715786328831967,
            epsilon = 1e-15
        );
        assert!(matches!(
            h_inverse(0.1, 0.5, &id),
            Err(Error::BelowReset { .. })
        ));
    }

    #[test]
    fn j_cases() {
        let id = RiseFunction::identity();
        let rc = PartialReset::linear(0.5).unwrap();
        // zeta = 0 resets to 0
        assert_abs_diff_eq!(j(0.8, 0.2, &rc, &id).unwrap(), 0.0);
        // hand computation: zeta = 0.6, R = 0.3
        assert_abs_diff_eq!(j(1.0, 0.6, &rc, &id).unwrap(), 0.3);
        // absorption rule
        let r0 = PartialReset::absorption();
        assert_abs_diff_eq!(j(1.0, 0.9, &r0, &id).unwrap(), 0.0);
        assert!(matches!(
            j(0.5, 0.2, &rc, &id),
            Err(Error::NegativeSurplus { .. })
        ));
        // reset at/above threshold rejected
        let r1 = PartialReset::linear(1.0).unwrap();
        assert!(matches!(
            j(1.0, 1.2, &r1, &id),
            Err(Error::ResetAboveThreshold { .. })
        ));
    }

    #[test]
    fn shift_is_plain_addition() {
        assert_eq!(s(0.2, 0.3), 0.5);
        assert_eq!(s(0.7, 0.0), 0.7);
        assert_abs_diff_eq!(s(s(0.1, 0.2), -0.2), 0.1);
    }

    #[test]
    fn compose_chain_cases() {
        let id = RiseFunction::identity();
        assert_abs_diff_eq!(compose_chain(0.7, &[], &id).unwrap(), 0.7);
        // H first, then S: 0.3 + 0.2 + 0.1
        assert_abs_diff_eq!(compose_chain(0.3, &[(0.1, 0.2)], &id).unwrap(), 0.6);
        let err = compose_chain(0.3, &[(0.0, 0.2), (0.0, 0.9)], &id).unwrap_err();
        match err {
            Error::ChainStep { index, .. } => assert_eq!(index, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn chain_difference_scales_by_exp_b_eps_for_ub() {
        // (chain(phi) - chain(psi)) / (phi - psi) = e^(b (e1 + e2)),
        // independent of phi and of the interleaved shifts
        let ub = RiseFunction::ub(-3.0).unwrap();
        let chain = [(0.05, 0.12), (0.02, 0.08)];
        let factor = (-3.0_f64 * 0.2).exp();
        for (phi, psi) in [(0.3, 0.1), (0.55, 0.5), (0.62, 0.01)] {
            let a = compose_chain(phi, &chain, &ub).unwrap();
            let b = compose_chain(psi, &chain, &ub).unwrap();
            assert_abs_diff_eq!((a - b) / (phi - psi), factor, epsilon = 1e-12);
        }
    }

    #[test]
    fn h_semigroup_property() {
        let ub = RiseFunction::ub(-2.0).unwrap();
        let one = h(h(0.2, 0.3, &ub).unwrap(), 0.25, &ub).unwrap();
        let two = h(0.2, 0.55, &ub).unwrap();
        assert_abs_diff_eq!(one, two, epsilon = 1e-12);
    }

    #[test]
    fn h_ext_past_domain_is_infinite() {
        let ub = RiseFunction::ub(-3.0).unwrap();
        assert!(h_ext(0.5, 0.2, &ub).is_finite());
        assert_eq!(h_ext(ub.phi_sup() + 0.01, 0.1, &ub), f64::INFINITY);
        let lif = RiseFunction::lif(1.2, 1.0).unwrap();
        // pushing past u_sup = E_eq
        assert_eq!(h_ext(0.99, 0.5, &lif), f64::INFINITY);
    }
}
