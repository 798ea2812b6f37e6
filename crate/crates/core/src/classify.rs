//! Shape classification of rise functions.
//!
//! Curvature (convex / concave / sigmoidal) is read off the second
//! derivative. The icpd/dcpd properties — whether a sub-threshold pulse
//! grows or shrinks phase differences as the base phase increases —
//! are decided three ways and cross-checked:
//!
//! 1. closed-form parameter conditions per family (the table route),
//! 2. a numeric scan of `d(Delta H)/d phi` over the domain `D` of the
//!    definition,
//! 3. the non-local third-derivative sufficient condition.
//!
//! A disagreement between the table and the scan is an error, except
//! for the QIF-CB family whose printed conditions are ambiguous; there
//! the scan is authoritative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::h_ext;
use crate::rise::{Family, RiseFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassifyMethod {
    ClosedFormTable,
    NumericScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    pub convex: bool,
    pub concave: bool,
    pub sigmoidal: bool,
    pub icpd: bool,
    pub dcpd: bool,
    pub method: ClassifyMethod,
}

/// Grid densities for the numeric scans. The defaults match the sizes
/// the acceptance suite runs at.
#[derive(Debug, Clone, Copy)]
pub struct ScanSettings {
    /// grid points per phase axis (phi and delta-phi)
    pub n_phi: usize,
    /// grid points on the pulse-strength axis
    pub n_eps: usize,
    /// largest pulse strength scanned
    pub eps_cap: f64,
    /// finite-difference step
    pub fd_step: f64,
    /// violations smaller than this are treated as zero
    pub slack: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings {
            n_phi: 50,
            n_eps: 20,
            eps_cap: 0.5,
            fd_step: 1e-5,
            slack: 1e-7,
        }
    }
}

/// Classifies a rise function with default scan settings.
pub fn classify(u: &RiseFunction) -> Result<ShapeReport> {
    classify_with(u, ScanSettings::default())
}

pub fn classify_with(u: &RiseFunction, settings: ScanSettings) -> Result<ShapeReport> {
    let (convex, concave, sigmoidal) = curvature_scan(u);
    let (icpd_scan, dcpd_scan) = icpd_dcpd_scan(u, settings);
    let (icpd_nl, dcpd_nl) = third_derivative_condition(u);

    // The non-local condition is sufficient; it may never contradict
    // the direct scan.
    if icpd_nl && !icpd_scan {
        return Err(Error::ClassifyConflict {
            family: family_name(u.family()),
            property: "icpd (third-derivative condition vs scan)",
            table: true,
            scan: false,
        });
    }
    if dcpd_nl && !dcpd_scan {
        return Err(Error::ClassifyConflict {
            family: family_name(u.family()),
            property: "dcpd (third-derivative condition vs scan)",
            table: true,
            scan: false,
        });
    }

    let method = match table_conditions(u) {
        Some(table) => {
            if u.family() == Family::QifCb {
                // printed conditions for this row are ambiguous; the scan decides
                ClassifyMethod::NumericScan
            } else {
                for (property, tab, scan) in [
                    ("convex", table.convex, convex),
                    ("concave", table.concave, concave),
                    ("sigmoidal", table.sigmoidal, sigmoidal),
                    ("icpd", table.icpd, icpd_scan),
                    ("dcpd", table.dcpd, dcpd_scan),
                ] {
                    if tab != scan {
                        return Err(Error::ClassifyConflict {
                            family: family_name(u.family()),
                            property,
                            table: tab,
                            scan,
                        });
                    }
                }
                ClassifyMethod::ClosedFormTable
            }
        }
        None => ClassifyMethod::NumericScan,
    };

    Ok(ShapeReport {
        convex,
        concave,
        sigmoidal,
        icpd: icpd_scan,
        dcpd: dcpd_scan,
        method,
    })
}

fn family_name(f: Family) -> &'static str {
    match f {
        Family::Identity => "identity",
        Family::Ub => "Ub",
        Family::Lif => "LIF",
        Family::LifCb => "LIF-CB",
        Family::Qif => "QIF",
        Family::QifCb => "QIF-CB",
        Family::Custom => "custom",
    }
}

struct TableRow {
    convex: bool,
    concave: bool,
    sigmoidal: bool,
    icpd: bool,
    dcpd: bool,
}

/// Closed-form parameter conditions per family. `None` when no row
/// applies (custom compositions).
fn table_conditions(u: &RiseFunction) -> Option<TableRow> {
    match u {
        RiseFunction::Identity => Some(TableRow {
            convex: true,
            concave: true,
            sigmoidal: false,
            icpd: true,
            dcpd: true,
        }),
        RiseFunction::Ub { b, .. } => Some(TableRow {
            convex: *b < 0.0,
            concave: *b > 0.0,
            sigmoidal: false,
            icpd: true,
            dcpd: true,
        }),
        RiseFunction::Lif { .. } => Some(TableRow {
            convex: false,
            concave: true,
            sigmoidal: false,
            icpd: true,
            dcpd: false,
        }),
        RiseFunction::Qif { alpha, beta, .. } => Some(TableRow {
            convex: *alpha == 0.0,
            concave: *beta == 0.0,
            sigmoidal: *beta < 0.0 && *alpha > 0.0,
            icpd: false,
            dcpd: *alpha <= 1.0 && *beta >= -1.0,
        }),
        RiseFunction::Cb { base, e_syn, .. } => match **base {
            RiseFunction::Lif { e_eq, .. } => Some(TableRow {
                convex: *e_syn < e_eq,
                concave: *e_syn > e_eq,
                sigmoidal: false,
                icpd: *e_syn >= e_eq,
                dcpd: *e_syn <= e_eq,
            }),
            RiseFunction::Qif { alpha, beta, .. } => {
                let eta = e_syn * (alpha - beta);
                let split = 1.0 + alpha * (alpha - 2.0 * eta);
                let dcpd = alpha * alpha <= eta / (eta - alpha - safe_recip(alpha))
                    && beta * beta <= (eta - alpha + beta) / (eta - alpha - safe_recip(beta));
                Some(TableRow {
                    convex: split >= 0.0,
                    concave: false,
                    sigmoidal: split < 0.0,
                    icpd: false,
                    dcpd,
                })
            }
            _ => None,
        },
    }
}

fn safe_recip(x: f64) -> f64 {
    if x == 0.0 {
        f64::INFINITY
    } else {
        1.0 / x
    }
}

/// Sign of `U''` on a 1000-point grid. Convex and concave use weak
/// inequalities so the identity reports both.
fn curvature_scan(u: &RiseFunction) -> (bool, bool, bool) {
    let n = 1000;
    let mut max_d2: f64 = 0.0;
    let mut min_d2: f64 = 0.0;
    for i in 0..=n {
        let phi = i as f64 / n as f64;
        let d2 = u.d2(phi);
        max_d2 = max_d2.max(d2);
        min_d2 = min_d2.min(d2);
    }
    let scale = 1e-10 * (1.0 + max_d2.abs().max(min_d2.abs()));
    let convex = min_d2 >= -scale;
    let concave = max_d2 <= scale;
    let sigmoidal = !convex && !concave;
    (convex, concave, sigmoidal)
}

/// Direct scan of the defining inequality: central finite difference of
/// `Delta H(phi, dphi, eps) = H_eps(phi + dphi) - H_eps(phi)` in `phi`,
/// over a grid on `D = {0 <= phi, 0 <= dphi <= U^-1(1 - eps) - phi}`.
fn icpd_dcpd_scan(u: &RiseFunction, st: ScanSettings) -> (bool, bool) {
    let mut icpd = true;
    let mut dcpd = true;
    let h = st.fd_step;
    for ie in 1..=st.n_eps {
        let eps = st.eps_cap * ie as f64 / st.n_eps as f64;
        let lim = u.inv(1.0 - eps);
        if lim <= 2.0 * h {
            continue;
        }
        for ip in 0..=st.n_phi {
            let phi = h + (lim - 2.0 * h) * ip as f64 / st.n_phi as f64;
            for id in 0..=st.n_phi {
                let dphi = (lim - phi - h) * id as f64 / st.n_phi as f64;
                if dphi < 0.0 {
                    continue;
                }
                let upper = (h_ext(phi + h + dphi, eps, u) - h_ext(phi + h, eps, u))
                    - (h_ext(phi - h + dphi, eps, u) - h_ext(phi - h, eps, u));
                let der = upper / (2.0 * h);
                if der < -st.slack {
                    icpd = false;
                }
                if der > st.slack {
                    dcpd = false;
                }
                if !icpd && !dcpd {
                    return (false, false);
                }
            }
        }
    }
    (icpd, dcpd)
}

/// Non-local sufficient conditions on the third derivative, sampled
/// over `0 <= psi <= phi <= 1`:
/// icpd if `U'''(phi) <= 3 U''(phi)^2 / U'(phi)
///          - U''(psi) U''(phi) U'(phi) / U'(psi)^2` everywhere,
/// dcpd with the reversed inequality.
fn third_derivative_condition(u: &RiseFunction) -> (bool, bool) {
    let n = 60;
    let slack = 1e-9;
    let mut icpd = true;
    let mut dcpd = true;
    for i in 0..=n {
        let phi = i as f64 / n as f64;
        let lhs = u.d3(phi);
        let d2p = u.d2(phi);
        let d1p = u.d1(phi);
        for jj in 0..=i {
            let psi = jj as f64 / n as f64;
            let rhs = 3.0 * d2p * d2p / d1p - u.d2(psi) * d2p * d1p / (u.d1(psi) * u.d1(psi));
            let scale = 1.0 + lhs.abs().max(rhs.abs());
            if lhs > rhs + slack * scale {
                icpd = false;
            }
            if lhs < rhs - slack * scale {
                dcpd = false;
            }
            if !icpd && !dcpd {
                return (false, false);
            }
        }
    }
    (icpd, dcpd)
}
