//! Rise function families.
//!
//! A rise function `U` is smooth, strictly increasing and normalized to
//! `U(0) = 0`, `U(1) = 1`. It encodes the free sub-threshold dynamics:
//! the potential of an oscillator at phase `phi` is `U(phi)`.
//!
//! All families here have closed-form inverses and first three
//! derivatives. Evaluation extends beyond `[0, 1]` to the natural
//! maximal domain of the closed form; past it, [`RiseFunction::eval`]
//! returns `+inf` (resp. `-inf`), which root-finding code treats as
//! "definitely past threshold".

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Identity,
    Ub,
    Lif,
    LifCb,
    Qif,
    QifCb,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RiseFunction {
    /// `U(phi) = phi`; the rise function of a perfect integrator.
    Identity,
    /// `U_b(phi) = ln(1 + (e^b - 1) phi) / b`, `b != 0`. Convex for
    /// `b < 0`, concave for `b > 0`; the unique family for which a pulse
    /// rescales phase differences by exactly `e^(b eps)` independent of
    /// the base phase (both icpd and dcpd).
    Ub { b: f64, k: f64 },
    /// Leaky integrate-and-fire: `U(phi) = E_eq (1 - e^(-rate phi))`
    /// with `rate = g_l T = -ln(1 - 1/E_eq)`.
    Lif { e_eq: f64, g_l: f64, rate: f64 },
    /// Quadratic integrate-and-fire:
    /// `U(phi) = (alpha - tan(atan(alpha) - phi span)) / (alpha - beta)`
    /// with `span = atan(alpha) - atan(beta)`.
    Qif {
        alpha: f64,
        beta: f64,
        atan_a: f64,
        span: f64,
    },
    /// Conductance-based transform of another rise function:
    /// `U_cb(phi) = ln(1 - U(phi)/E_syn) / ln(1 - 1/E_syn)`.
    Cb {
        base: Box<RiseFunction>,
        e_syn: f64,
        log_gap: f64,
    },
}

impl RiseFunction {
    pub fn identity() -> Self {
        RiseFunction::Identity
    }

    pub fn ub(b: f64) -> Result<Self> {
        if !b.is_finite() || b == 0.0 {
            return Err(Error::InvalidParameter {
                name: "b",
                value: b,
                requirement: "finite and != 0 (use the identity rise function for b = 0)",
            });
        }
        Ok(RiseFunction::Ub { b, k: b.exp_m1() })
    }

    pub fn lif(e_eq: f64, g_l: f64) -> Result<Self> {
        if !(e_eq > 1.0) || !e_eq.is_finite() {
            return Err(Error::InvalidParameter {
                name: "e_eq",
                value: e_eq,
                requirement: "E_eq > 1",
            });
        }
        if !(g_l > 0.0) {
            return Err(Error::InvalidParameter {
                name: "g_l",
                value: g_l,
                requirement: "g_l > 0",
            });
        }
        // rate = g_l * T_LIF is independent of g_l once T_LIF is fixed by
        // the normalization U(1) = 1.
        Ok(RiseFunction::Lif {
            e_eq,
            g_l,
            rate: -(-1.0 / e_eq).ln_1p(),
        })
    }

    pub fn qif(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                requirement: "0 <= alpha < inf",
            });
        }
        if !(beta <= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: beta,
                requirement: "-inf < beta <= 0",
            });
        }
        if !(alpha > beta) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                requirement: "alpha > beta",
            });
        }
        let atan_a = alpha.atan();
        Ok(RiseFunction::Qif {
            alpha,
            beta,
            atan_a,
            span: atan_a - beta.atan(),
        })
    }

    /// Wraps `self` in the conductance-based transform with reversal
    /// potential `e_syn > 1`.
    pub fn conductance_based(self, e_syn: f64) -> Result<Self> {
        if !(e_syn > 1.0) || !e_syn.is_finite() {
            return Err(Error::InvalidParameter {
                name: "e_syn",
                value: e_syn,
                requirement: "E_syn > 1",
            });
        }
        Ok(RiseFunction::Cb {
            base: Box::new(self),
            e_syn,
            log_gap: (-1.0 / e_syn).ln_1p(),
        })
    }

    pub fn family(&self) -> Family {
        match self {
            RiseFunction::Identity => Family::Identity,
            RiseFunction::Ub { .. } => Family::Ub,
            RiseFunction::Lif { .. } => Family::Lif,
            RiseFunction::Qif { .. } => Family::Qif,
            RiseFunction::Cb { base, .. } => match **base {
                RiseFunction::Lif { .. } => Family::LifCb,
                RiseFunction::Qif { .. } => Family::QifCb,
                _ => Family::Custom,
            },
        }
    }

    /// Supremum of the phase domain of the closed form (`>= 1`).
    pub fn phi_sup(&self) -> f64 {
        match self {
            RiseFunction::Identity => f64::INFINITY,
            RiseFunction::Ub { b, k } => {
                if *b < 0.0 {
                    -1.0 / k
                } else {
                    f64::INFINITY
                }
            }
            RiseFunction::Lif { .. } => f64::INFINITY,
            RiseFunction::Qif { atan_a, span, .. } => (atan_a + std::f64::consts::FRAC_PI_2) / span,
            RiseFunction::Cb { base, e_syn, .. } => {
                if *e_syn < base.u_sup() {
                    base.inv(*e_syn)
                } else {
                    base.phi_sup()
                }
            }
        }
    }

    /// Supremum of the potential range (`> 1`), the domain bound of
    /// [`RiseFunction::inv`].
    pub fn u_sup(&self) -> f64 {
        match self {
            RiseFunction::Identity | RiseFunction::Ub { .. } | RiseFunction::Qif { .. } => {
                f64::INFINITY
            }
            RiseFunction::Lif { e_eq, .. } => *e_eq,
            RiseFunction::Cb {
                base,
                e_syn,
                log_gap,
            } => {
                let base_sup = base.u_sup();
                if *e_syn <= base_sup {
                    f64::INFINITY
                } else {
                    (-base_sup / e_syn).ln_1p() / log_gap
                }
            }
        }
    }

    /// `U(phi)`. Returns `+inf` at or past [`RiseFunction::phi_sup`].
    pub fn eval(&self, phi: f64) -> f64 {
        match self {
            RiseFunction::Identity => phi,
            RiseFunction::Ub { b, k } => {
                let arg = k * phi;
                if arg <= -1.0 {
                    return if *b < 0.0 {
                        f64::INFINITY
                    } else {
                        f64::NEG_INFINITY
                    };
                }
                arg.ln_1p() / b
            }
            RiseFunction::Lif { e_eq, rate, .. } => -e_eq * (-rate * phi).exp_m1(),
            RiseFunction::Qif {
                alpha,
                beta,
                atan_a,
                span,
            } => {
                let arg = atan_a - phi * span;
                if arg <= -std::f64::consts::FRAC_PI_2 {
                    return f64::INFINITY;
                }
                if arg >= std::f64::consts::FRAC_PI_2 {
                    return f64::NEG_INFINITY;
                }
                (alpha - arg.tan()) / (alpha - beta)
            }
            RiseFunction::Cb {
                base,
                e_syn,
                log_gap,
            } => {
                let x = base.eval(phi);
                if x >= *e_syn {
                    return f64::INFINITY;
                }
                (-x / e_syn).ln_1p() / log_gap
            }
        }
    }

    /// `U^-1(u)`. Returns `+inf` at or past [`RiseFunction::u_sup`].
    pub fn inv(&self, u: f64) -> f64 {
        match self {
            RiseFunction::Identity => u,
            RiseFunction::Ub { b, k } => (b * u).exp_m1() / k,
            RiseFunction::Lif { e_eq, rate, .. } => {
                if u >= *e_eq {
                    return f64::INFINITY;
                }
                -(-u / e_eq).ln_1p() / rate
            }
            RiseFunction::Qif {
                alpha,
                beta,
                atan_a,
                span,
            } => (atan_a - (alpha - u * (alpha - beta)).atan()) / span,
            RiseFunction::Cb {
                base,
                e_syn,
                log_gap,
            } => base.inv(-e_syn * (u * log_gap).exp_m1()),
        }
    }

    /// `U'(phi)`.
    pub fn d1(&self, phi: f64) -> f64 {
        match self {
            RiseFunction::Identity => 1.0,
            RiseFunction::Ub { b, k } => k / (b * (1.0 + k * phi)),
            RiseFunction::Lif { e_eq, rate, .. } => e_eq * rate * (-rate * phi).exp(),
            RiseFunction::Qif {
                alpha,
                beta,
                atan_a,
                span,
            } => {
                let y = (atan_a - phi * span).tan();
                span * (1.0 + y * y) / (alpha - beta)
            }
            RiseFunction::Cb {
                base,
                e_syn,
                log_gap,
            } => {
                let x = base.eval(phi);
                -base.d1(phi) / (log_gap * (e_syn - x))
            }
        }
    }

    /// `U''(phi)`.
    pub fn d2(&self, phi: f64) -> f64 {
        match self {
            RiseFunction::Identity => 0.0,
            RiseFunction::Ub { b, k } => {
                let d = 1.0 + k * phi;
                -k * k / (b * d * d)
            }
            RiseFunction::Lif { e_eq, rate, .. } => -e_eq * rate * rate * (-rate * phi).exp(),
            RiseFunction::Qif {
                alpha,
                beta,
                atan_a,
                span,
            } => {
                let y = (atan_a - phi * span).tan();
                -2.0 * span * span * y * (1.0 + y * y) / (alpha - beta)
            }
            RiseFunction::Cb {
                base,
                e_syn,
                log_gap,
            } => {
                let x = base.eval(phi);
                let gap = e_syn - x;
                let d1 = base.d1(phi);
                let g1 = -1.0 / (log_gap * gap);
                let g2 = -1.0 / (log_gap * gap * gap);
                g2 * d1 * d1 + g1 * base.d2(phi)
            }
        }
    }

    /// `U'''(phi)`.
    pub fn d3(&self, phi: f64) -> f64 {
        match self {
            RiseFunction::Identity => 0.0,
            RiseFunction::Ub { b, k } => {
                let d = 1.0 + k * phi;
                2.0 * k * k * k / (b * d * d * d)
            }
            RiseFunction::Lif { e_eq, rate, .. } => {
                e_eq * rate * rate * rate * (-rate * phi).exp()
            }
            RiseFunction::Qif {
                alpha,
                beta,
                atan_a,
                span,
            } => {
                let y = (atan_a - phi * span).tan();
                let y2 = y * y;
                2.0 * span * span * span * (1.0 + y2) * (1.0 + 3.0 * y2) / (alpha - beta)
            }
            RiseFunction::Cb {
                base,
                e_syn,
                log_gap,
            } => {
                let x = base.eval(phi);
                let gap = e_syn - x;
                let d1 = base.d1(phi);
                let d2 = base.d2(phi);
                let g1 = -1.0 / (log_gap * gap);
                let g2 = -1.0 / (log_gap * gap * gap);
                let g3 = -2.0 / (log_gap * gap * gap * gap);
                g3 * d1 * d1 * d1 + 3.0 * g2 * d1 * d2 + g1 * base.d3(phi)
            }
        }
    }
}
