//! Executable stability theory: splay-state existence, linear
//! stability of asynchronous states, cluster invariance bounds and the
//! exact bifurcation curve for the `U_b` family.

use nalgebra::{DMatrix, DVector};

use crate::classify::ShapeReport;
use crate::coupling::CouplingMatrix;
use crate::engine::{return_map, NetworkState};
use crate::error::{Error, Result};
use crate::maps::{h_ext, h_prime_ext};
use crate::reset::PartialReset;
use crate::rise::RiseFunction;
use crate::THRESHOLD;

/// A periodic asynchronous (splay) state of a meta-oscillator network.
#[derive(Debug, Clone)]
pub struct SplaySolution {
    /// Inter-firing shifts, one per oscillator, all positive.
    pub sigma_star: Vec<f64>,
    /// The fixed-point section state (oscillator 0 at threshold).
    pub state: NetworkState,
    /// Max-norm residual of the period-closure equations.
    pub residual: f64,
}

/// Per-oscillator coupling data extracted from a meta-form matrix.
struct MetaCoupling {
    /// Pulse strength delivered to every other oscillator.
    eps_out: Vec<f64>,
    /// Self-interaction strength (diagonal).
    eps_self: Vec<f64>,
}

fn meta_coupling(coupling: &CouplingMatrix) -> Result<MetaCoupling> {
    let n = coupling.n();
    let mut eps_out = Vec::with_capacity(n);
    let mut eps_self = Vec::with_capacity(n);
    for j in 0..n {
        match coupling.sender_strength(j) {
            Some(e) => eps_out.push(e),
            None => {
                return Err(Error::InvalidParameter {
                    name: "coupling",
                    value: j as f64,
                    requirement: "meta-form matrix (column-constant off the diagonal)",
                })
            }
        }
        eps_self.push(coupling.get(j, j));
    }
    Ok(MetaCoupling { eps_out, eps_self })
}

/// Evaluates the period-closure map `L_i(Sigma, 1)` together with its
/// gradient with respect to `Sigma`. The chain starts at the reset
/// image of oscillator `i` firing from threshold (`J` with the
/// self-interaction), then alternates shifts and pulse interactions of
/// the remaining oscillators around the cycle. Out-of-domain values
/// propagate as `inf`.
fn eval_l_row(
    i: usize,
    sigma: &[f64],
    mc: &MetaCoupling,
    reset: &PartialReset,
    rise: &RiseFunction,
) -> (f64, Vec<f64>) {
    let n = sigma.len();
    let mut grad = vec![0.0; n];
    let reset_val = reset.evaluate(mc.eps_self[i].max(0.0));
    let mut phi = rise.inv(reset_val) + sigma[i];
    grad[i] = 1.0;
    for t in 1..n {
        let s = (i + t) % n;
        if !phi.is_finite() {
            return (f64::INFINITY, grad);
        }
        let hp = h_prime_ext(phi, mc.eps_out[s], rise);
        phi = h_ext(phi, mc.eps_out[s], rise);
        if !phi.is_finite() || !hp.is_finite() {
            return (f64::INFINITY, grad);
        }
        for g in grad.iter_mut() {
            *g *= hp;
        }
        phi += sigma[s];
        grad[s] += 1.0;
    }
    (phi, grad)
}

/// Scalar closure map for the fully symmetric case (all strengths and
/// self-interactions equal): every shift is the same `sigma`.
fn eval_l_scalar(
    sigma: f64,
    n: usize,
    eps_out: f64,
    eps_self: f64,
    reset: &PartialReset,
    rise: &RiseFunction,
) -> f64 {
    let mut phi = rise.inv(reset.evaluate(eps_self.max(0.0))) + sigma;
    for _ in 1..n {
        if !phi.is_finite() {
            return f64::INFINITY;
        }
        phi = h_ext(phi, eps_out, rise) + sigma;
    }
    phi
}

const SPLAY_TOL: f64 = 1e-13;

/// Solves the splay-state existence equations `L(Sigma, 1) = 1` for a
/// meta-form coupling matrix.
///
/// * `Ok(Some(..))` — a solution with all shifts positive exists; the
///   asynchronous state is returned as a section fixed point.
/// * `Ok(None)` — certified non-existence: the closure equations have a
///   converged root with some shift `<= 0`.
/// * `Err(NonConvergence)` — the solver failed; this is never reported
///   as non-existence.
///
/// The symmetric case reduces to a scalar equation solved by bisection
/// (a root always exists). The general case runs Newton iterations on
/// the full system with the chain-rule Jacobian, seeded by the
/// symmetric solution scaled per oscillator.
pub fn solve_splay(
    coupling: &CouplingMatrix,
    reset: &PartialReset,
    rise: &RiseFunction,
) -> Result<Option<SplaySolution>> {
    let n = coupling.n();
    let mc = meta_coupling(coupling)?;
    if n == 1 {
        // a lone oscillator is trivially asynchronous with period 1
        let (state, _) = NetworkState::from_phases(&[1.0])?;
        return Ok(Some(SplaySolution {
            sigma_star: vec![1.0 - rise.inv(reset.evaluate(mc.eps_self[0].max(0.0)))],
            state,
            residual: 0.0,
        }));
    }

    let symmetric = mc
        .eps_out
        .iter()
        .all(|&e| (e - mc.eps_out[0]).abs() < 1e-15)
        && mc
            .eps_self
            .iter()
            .all(|&e| (e - mc.eps_self[0]).abs() < 1e-15);

    // symmetric seed: total pulse strength received over one period is
    // the common row sum, so a uniform shift near (1 - row_sum) / n
    let scalar_root = {
        let eps_out = mc.eps_out.iter().sum::<f64>() / n as f64;
        let eps_self = 0.0;
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if eval_l_scalar(mid, n, eps_out, eps_self, reset, rise) < THRESHOLD {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };

    let mut sigma: Vec<f64> = if symmetric {
        let eps_out = mc.eps_out[0];
        let eps_self = mc.eps_self[0];
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if eval_l_scalar(mid, n, eps_out, eps_self, reset, rise) < THRESHOLD {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        vec![0.5 * (lo + hi); n]
    } else {
        // scale the uniform solution by the relative sender strengths,
        // which for meta reductions is the cluster size
        let mean: f64 = mc.eps_out.iter().sum::<f64>() / n as f64;
        mc.eps_out
            .iter()
            .map(|&e| {
                if mean > 0.0 {
                    scalar_root * e / mean
                } else {
                    scalar_root
                }
            })
            .collect()
    };

    // Newton iterations with the analytic chain-rule Jacobian
    let max_iter = 500;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let mut rows = Vec::with_capacity(n);
        let mut finite = true;
        for i in 0..n {
            let row = eval_l_row(i, &sigma, &mc, reset, rise);
            finite &= row.0.is_finite();
            rows.push(row);
        }
        if !finite {
            // pull back toward the interior of the domain
            for s in sigma.iter_mut() {
                *s *= 0.5;
            }
            continue;
        }
        residual = rows
            .iter()
            .map(|(v, _)| (v - THRESHOLD).abs())
            .fold(0.0, f64::max);
        if residual < SPLAY_TOL {
            break;
        }
        let jac = DMatrix::from_fn(n, n, |r, c| rows[r].1[c]);
        let rhs = DVector::from_fn(n, |r, _| THRESHOLD - rows[r].0);
        match jac.lu().solve(&rhs) {
            Some(step) => {
                let cap = step.amax();
                let damp = if cap > 0.25 { 0.25 / cap } else { 1.0 };
                for (s, d) in sigma.iter_mut().zip(step.iter()) {
                    *s += damp * d;
                }
            }
            None => {
                return Err(Error::NonConvergence {
                    iterations: max_iter,
                    residual,
                })
            }
        }
    }
    if !(residual < SPLAY_TOL) {
        return Err(Error::NonConvergence {
            iterations: max_iter,
            residual,
        });
    }

    if sigma.iter().any(|&s| s <= 0.0) {
        return Ok(None);
    }

    // fixed-point phases by running the closure construction backwards
    let mut phases = vec![0.0; n];
    phases[0] = THRESHOLD;
    for i in 1..n {
        let mut x = THRESHOLD;
        for k in (0..i).rev() {
            x = h_ext(x - sigma[k], -mc.eps_out[k], rise);
        }
        phases[i] = x;
    }
    let (state, _) = NetworkState::from_phases(&phases)?;
    Ok(Some(SplaySolution {
        sigma_star: sigma,
        state,
        residual,
    }))
}

/// Linear stability of an asynchronous fixed point.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// Firing-map Jacobians `A^(s)`, one per firing step.
    pub jacobians: Vec<DMatrix<f64>>,
    /// The non-zero entries `a_i^(s) = U'(phi_i)/U'(H_eps(phi_i))`.
    pub entries: Vec<Vec<f64>>,
    /// Enestroem-Kakeya bound: the largest entry.
    pub ek_bound: f64,
    /// Spectral radius of the period product of the Jacobians.
    pub spectral_radius: f64,
    pub stable: bool,
}

/// Builds the firing-map Jacobians along one period of an asynchronous
/// fixed point and bounds the spectral radius of their product.
///
/// The state must be a splay fixed point (return-map residual below
/// 1e-9 with singleton avalanches throughout).
pub fn jacobian_at(
    state: &NetworkState,
    coupling: &CouplingMatrix,
    reset: &PartialReset,
    rise: &RiseFunction,
) -> Result<StabilityReport> {
    let n = state.n();
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "state",
            value: n as f64,
            requirement: "at least two oscillators",
        });
    }
    let ref_osc = state.perm()[0];
    let (back, seq) = return_map(state, ref_osc, coupling, reset, rise)?;
    let residual = state
        .phases()
        .iter()
        .zip(back.phases())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if residual > 1e-9 {
        return Err(Error::NotFixedPoint { residual });
    }
    if seq.events.iter().any(|e| e.members.len() != 1) || seq.events.len() != n {
        return Err(Error::NotFixedPoint { residual: f64::MAX });
    }

    let mut jacobians = Vec::with_capacity(n);
    let mut entries = Vec::with_capacity(n);
    let mut ek_bound: f64 = 0.0;
    let mut cur = state.clone();
    for _ in 0..n {
        let firing = cur.perm()[0];
        let eps_s = coupling.sender_strength(firing).ok_or(Error::InvalidParameter {
            name: "coupling",
            value: firing as f64,
            requirement: "meta-form matrix (column-constant off the diagonal)",
        })?;
        let phis = cur.phases();
        let a: Vec<f64> = (1..n)
            .map(|pos| {
                let phi = phis[pos];
                rise.d1(phi) / rise.d1(h_ext(phi, eps_s, rise))
            })
            .collect();
        for &v in &a {
            ek_bound = ek_bound.max(v);
        }
        let m = n - 1;
        let mut mat = DMatrix::zeros(m, m);
        for r in 0..m {
            mat[(r, 0)] = -a[0];
            if r + 1 < m {
                mat[(r, r + 1)] = a[r + 1];
            }
        }
        jacobians.push(mat);
        entries.push(a);
        let (next, _, _) = crate::engine::firing_map(&cur, coupling, reset, rise)?;
        cur = next;
    }

    let mut product = DMatrix::identity(n - 1, n - 1);
    for a in &jacobians {
        product = a * &product;
    }
    let spectral_radius = spectral_radius_norm_squaring(&product, 1e-10);
    Ok(StabilityReport {
        jacobians,
        entries,
        ek_bound,
        stable: spectral_radius < 1.0,
        spectral_radius,
    })
}

fn max_column_sum(m: &DMatrix<f64>) -> f64 {
    let mut best: f64 = 0.0;
    for c in 0..m.ncols() {
        let s: f64 = m.column(c).iter().map(|v| v.abs()).sum();
        best = best.max(s);
    }
    best
}

/// Spectral radius via norm-based power iteration with repeated
/// squaring: `rho = lim ||P^(2^k)||^(1 / 2^k)`. Converges for any
/// spectrum (complex dominant pairs and degenerate moduli included),
/// which plain vector power iteration does not.
pub fn spectral_radius_norm_squaring(p: &DMatrix<f64>, tol: f64) -> f64 {
    let s0 = max_column_sum(p);
    if s0 == 0.0 {
        return 0.0;
    }
    let mut q = p / s0;
    let mut log_rho = s0.ln();
    let mut weight = 1.0;
    for _ in 0..64 {
        weight *= 0.5;
        let sq = &q * &q;
        let s = max_column_sum(&sq);
        if s == 0.0 {
            return 0.0;
        }
        q = sq / s;
        let term = weight * s.ln();
        log_rho += term;
        if term.abs() < tol * 1e-3 && weight < 1e-6 {
            break;
        }
    }
    log_rho.exp()
}

/// Upper bound on polynomial root moduli for strictly positive
/// coefficients `c_0..c_n`: every root of `sum c_j z^j` satisfies
/// `|z| <= max c_i / c_{i+1}`.
pub fn ek_root_bound(coeffs: &[f64]) -> Result<f64> {
    if coeffs.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "coeffs",
            value: coeffs.len() as f64,
            requirement: "degree >= 1 (at least two coefficients)",
        });
    }
    for &c in coeffs {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter {
                name: "coeffs",
                value: c,
                requirement: "strictly positive",
            });
        }
    }
    Ok(coeffs
        .windows(2)
        .map(|w| w[0] / w[1])
        .fold(0.0, f64::max))
}

/// Invariance / instability certificates for an avalanche of size `a1`
/// in a homogeneous network of `n` oscillators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterBound {
    pub a1: usize,
    /// The sufficient invariance conditions hold for every sub-split.
    pub sufficient_ok: bool,
    /// The necessary invariance conditions hold for every sub-split.
    pub necessary_ok: bool,
    /// The return-map contraction certificate for non-invariance holds.
    pub instability_ok: bool,
}

fn eq35_holds(
    a1: usize,
    a: usize,
    n: usize,
    eps: f64,
    reset: &PartialReset,
    rise: &RiseFunction,
) -> bool {
    let slack = 1e-12;
    let za1 = (a1 as f64 - 1.0) * eps;
    let za = (a1 as f64 - 1.0 - a as f64) * eps;
    let out = (n - a1) as f64 * eps;
    let lhs = rise.inv(reset.evaluate(za1)) - rise.inv(reset.evaluate(za));
    let rhs = rise.inv(1.0 - out) - rise.inv(1.0 - out - a as f64 * eps);
    lhs <= rhs + slack
}

fn eq36_holds(
    a1: usize,
    a: usize,
    n: usize,
    eps: f64,
    reset: &PartialReset,
    rise: &RiseFunction,
) -> bool {
    let slack = 1e-12;
    let za1 = (a1 as f64 - 1.0) * eps;
    let za = (a1 as f64 - 1.0 - a as f64) * eps;
    let out = (n - a1) as f64 * eps;
    let lhs = rise.inv(reset.evaluate(za1) + out) - rise.inv(reset.evaluate(za) + out);
    let rhs = 1.0 - rise.inv(1.0 - a as f64 * eps);
    lhs <= rhs + slack
}

/// Evaluates the invariance bounds for an `a1`-avalanche under the
/// return map. For icpd rise functions the first family of conditions
/// is sufficient and the second necessary; for dcpd rise functions the
/// roles are swapped. Errors when the rise function is neither.
pub fn cluster_bounds(
    a1: usize,
    n: usize,
    eps: f64,
    reset: &PartialReset,
    rise: &RiseFunction,
    shape: &ShapeReport,
) -> Result<ClusterBound> {
    if !shape.icpd && !shape.dcpd {
        return Err(Error::BoundsNotApplicable);
    }
    if a1 == 0 || a1 > n {
        return Err(Error::InvalidParameter {
            name: "a1",
            value: a1 as f64,
            requirement: "1 <= a1 <= n",
        });
    }
    if (n as f64 - 1.0) * eps >= 1.0 {
        return Err(Error::CouplingUnsafe {
            row: 0,
            sum: (n as f64 - 1.0) * eps,
        });
    }
    let all35 = (1..a1).all(|a| eq35_holds(a1, a, n, eps, reset, rise));
    let all36 = (1..a1).all(|a| eq36_holds(a1, a, n, eps, reset, rise));
    let (sufficient_ok, necessary_ok) = if shape.icpd {
        (all35, all36)
    } else {
        (all36, all35)
    };
    Ok(ClusterBound {
        a1,
        sufficient_ok,
        necessary_ok,
        instability_ok: cluster_instability(a1, n, eps, reset, rise),
    })
}

/// Return-map contraction certificate: an `a1`-cluster splits up after
/// finitely many returns when
/// `R'(z) > U'(U^-1(R(z))) / U'(U^-1(1 - (N-1) eps + z))` on the whole
/// charge interval `[(a1-2) eps, (a1-1) eps]` (200-point grid).
///
/// Rigorous for dcpd rise functions at any `a1`, and for `a1 = n` (the
/// synchronous state) for arbitrary rise functions.
pub fn cluster_instability(
    a1: usize,
    n: usize,
    eps: f64,
    reset: &PartialReset,
    rise: &RiseFunction,
) -> bool {
    if a1 < 2 {
        return false;
    }
    let lo = ((a1 as f64 - 2.0) * eps).max(0.0);
    let hi = (a1 as f64 - 1.0) * eps;
    let grid = 200;
    for k in 0..=grid {
        let z = lo + (hi - lo) * k as f64 / grid as f64;
        let rhs = rise.d1(rise.inv(reset.evaluate(z)))
            / rise.d1(rise.inv(1.0 - (n as f64 - 1.0) * eps + z));
        if !(reset.derivative(z) > rhs) {
            return false;
        }
    }
    true
}

/// Row of a bifurcation table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BifurcationPoint {
    pub a: usize,
    pub c_cr: f64,
    /// true when the closed form for a = 2 produced the value
    pub closed_form: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BifurcationCurve {
    pub points: Vec<BifurcationPoint>,
}

fn c_crit_sides(c: f64, a: usize, n: usize, eps: f64, b: f64) -> (f64, f64) {
    let lhs = (b * (1.0 - ((n - a) as f64 + c * (a as f64 - 1.0)) * eps)).exp();
    let rhs = (-b * c * eps).exp_m1() / (-b * eps).exp_m1();
    (lhs, rhs)
}

/// Critical linear reset strength above which avalanches of size `>= a`
/// lose invariance under the return map, for the convex `U_b` family
/// (`b < 0`). Solved by bisection on `(0, 1)` to 1e-12.
pub fn c_critical(a: usize, n: usize, eps: f64, b: f64) -> Result<f64> {
    if !(b < 0.0) {
        return Err(Error::InvalidParameter {
            name: "b",
            value: b,
            requirement: "b < 0 (convex U_b)",
        });
    }
    if a < 2 || a > n {
        return Err(Error::InvalidParameter {
            name: "a",
            value: a as f64,
            requirement: "2 <= a <= n",
        });
    }
    if (n as f64 - 1.0) * eps >= 1.0 || eps <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "eps",
            value: eps,
            requirement: "0 < (n-1) eps < 1",
        });
    }
    let f = |c: f64| {
        let (l, r) = c_crit_sides(c, a, n, eps, b);
        l - r
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    if !(f(1e-12) > 0.0 && f(1.0) < 0.0) {
        return Err(Error::NoBracket {
            name: "c",
            lo: 0.0,
            hi: 1.0,
        });
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Closed form of the `a = 2` bifurcation point:
/// `c = ln(1 + e^(-b (N-2) eps + b) (1 - e^(-b eps))) / (b eps)`.
pub fn c_critical_closed_form_2(n: usize, eps: f64, b: f64) -> Result<f64> {
    if !(b < 0.0) {
        return Err(Error::InvalidParameter {
            name: "b",
            value: b,
            requirement: "b < 0",
        });
    }
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: n as f64,
            requirement: "n >= 2",
        });
    }
    let inner = (-b * ((n - 2) as f64) * eps + b).exp() * (-(-b * eps).exp_m1());
    Ok(inner.ln_1p() / (b * eps))
}

/// All `n - 1` bifurcation points `a = 2..n`; strictly decreasing in a.
pub fn bifurcation_curve(n: usize, eps: f64, b: f64) -> Result<BifurcationCurve> {
    let mut points = Vec::with_capacity(n.saturating_sub(1));
    for a in 2..=n {
        let (c, closed_form) = if a == 2 {
            (c_critical_closed_form_2(n, eps, b)?, true)
        } else {
            (c_critical(a, n, eps, b)?, false)
        };
        let (l, r) = c_crit_sides(c, a, n, eps, b);
        points.push(BifurcationPoint {
            a,
            c_cr: c,
            closed_form,
            residual: (l - r).abs(),
        });
    }
    Ok(BifurcationCurve { points })
}

/// Exact return map of the leading phase difference of an
/// `a1`-avalanche for `U_b` (`b < 0`) with linear reset `R_c`:
///
/// `dM(dphi) = e^(b eps (N - a1 + c (a1-1))) / (1 - e^b)
///             * (e^(-b c) (e^b + (1 - e^b) dphi)^c - 1)`.
///
/// Independent of the intermediate avalanche structure; defined for
/// `dphi` in `[0, 1 - U_b^-1(1 - eps)]`.
pub fn delta_return_map_ub(
    dphi: f64,
    a1: usize,
    n: usize,
    eps: f64,
    c: f64,
    b: f64,
) -> Result<f64> {
    if !(b < 0.0) {
        return Err(Error::InvalidParameter {
            name: "b",
            value: b,
            requirement: "b < 0",
        });
    }
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidParameter {
            name: "c",
            value: c,
            requirement: "0 <= c <= 1 (neuronal linear reset)",
        });
    }
    if a1 < 1 || a1 > n {
        return Err(Error::InvalidParameter {
            name: "a1",
            value: a1 as f64,
            requirement: "1 <= a1 <= n",
        });
    }
    let ub = RiseFunction::ub(b)?;
    let dmax = 1.0 - ub.inv(1.0 - eps);
    if !((-1e-12..=dmax + 1e-12).contains(&dphi)) {
        return Err(Error::InvalidParameter {
            name: "dphi",
            value: dphi,
            requirement: "0 <= dphi <= 1 - U_b^-1(1 - eps)",
        });
    }
    let eb = b.exp();
    let pre = (b * eps * ((n - a1) as f64 + c * (a1 as f64 - 1.0))).exp() / (1.0 - eb);
    Ok(pre * ((-b * c).exp() * (eb + (1.0 - eb) * dphi).powf(c) - 1.0))
}

/// `c` threshold below which the sufficient invariance conditions hold
/// and below which the necessary ones hold, for the linear reset
/// family. Returns `(c_sufficient_below, c_necessary_below)`; 1.0 means
/// the condition holds on the whole neuronal range.
pub fn rc_invariance_thresholds(
    a1: usize,
    n: usize,
    eps: f64,
    rise: &RiseFunction,
    icpd: bool,
) -> Result<(f64, f64)> {
    let hold35 = |c: f64| -> Result<bool> {
        let r = PartialReset::linear(c)?;
        Ok((1..a1).all(|a| eq35_holds(a1, a, n, eps, &r, rise)))
    };
    let hold36 = |c: f64| -> Result<bool> {
        let r = PartialReset::linear(c)?;
        Ok((1..a1).all(|a| eq36_holds(a1, a, n, eps, &r, rise)))
    };
    let t35 = first_failure_threshold(&hold35)?;
    let t36 = first_failure_threshold(&hold36)?;
    Ok(if icpd { (t35, t36) } else { (t36, t35) })
}

/// Smallest `c` at which the instability certificate starts to hold, if
/// it holds anywhere on `[0, 1]`.
pub fn rc_instability_threshold(
    a1: usize,
    n: usize,
    eps: f64,
    rise: &RiseFunction,
) -> Result<Option<f64>> {
    let holds = |c: f64| -> Result<bool> {
        let r = PartialReset::linear(c)?;
        Ok(cluster_instability(a1, n, eps, &r, rise))
    };
    if !holds(1.0)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Scans `[0, 1]` for the first c where `holds` fails, refined by
/// bisection; 1.0 when it never fails.
fn first_failure_threshold(holds: &dyn Fn(f64) -> Result<bool>) -> Result<f64> {
    let grid = 100;
    let mut prev = 0.0;
    for k in 0..=grid {
        let c = k as f64 / grid as f64;
        if !holds(c)? {
            let (mut lo, mut hi) = (prev, c);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if holds(mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        prev = c;
    }
    Ok(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::classify;
    use approx::assert_abs_diff_eq;

    #[test]
    fn splay_two_identity_oscillators() {
        // 2 sigma + eps = 1 with identity U: sigma = 0.4
        let coupling = CouplingMatrix::homogeneous(2, 0.2).unwrap();
        let reset = PartialReset::linear(0.5).unwrap();
        let sol = solve_splay(&coupling, &reset, &RiseFunction::identity())
            .unwrap()
            .unwrap();
        assert_abs_diff_eq!(sol.sigma_star[0], 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.sigma_star[1], 0.4, epsilon = 1e-12);
        assert!(sol.residual < 1e-12);
    }

    #[test]
    fn homogeneous_splay_always_exists() {
        for (n, eps, c, b) in [
            (3, 0.1, 0.2, -2.0),
            (10, 0.05, 0.9, -3.0),
            (25, 0.02, 0.0, -1.0),
            (7, 0.12, 0.5, 2.0),
        ] {
            let coupling = CouplingMatrix::homogeneous(n, eps).unwrap();
            let reset = PartialReset::linear(c).unwrap();
            let rise = RiseFunction::ub(b).unwrap();
            let sol = solve_splay(&coupling, &reset, &rise).unwrap().unwrap();
            assert!(sol.residual < 1e-12, "residual {}", sol.residual);
            assert!(sol.sigma_star.iter().all(|&s| s > 0.0));
        }
    }

    #[test]
    fn splay_fixed_point_closes_under_return_map() {
        let coupling = CouplingMatrix::homogeneous(10, 0.05).unwrap();
        let reset = PartialReset::linear(0.9).unwrap();
        let rise = RiseFunction::ub(-3.0).unwrap();
        let sol = solve_splay(&coupling, &reset, &rise).unwrap().unwrap();
        let ref_osc = sol.state.perm()[0];
        let (back, seq) = return_map(&sol.state, ref_osc, &coupling, &reset, &rise).unwrap();
        for (a, b) in sol.state.phases().iter().zip(back.phases()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
        assert_eq!(seq.events.len(), 10);
        assert!(seq.events.iter().all(|e| e.members.len() == 1));
    }

    #[test]
    fn meta_gap_configurations_certified_nonexistent() {
        // Fig-3 parameters at small c: large-cluster meta states have a
        // converged root with non-positive shifts
        let reset = PartialReset::linear(0.025).unwrap();
        let rise = RiseFunction::ub(-3.0).unwrap();
        for sizes in [vec![49, 1], vec![45, 5], vec![45, 1, 1, 1, 1, 1]] {
            let coupling = CouplingMatrix::meta(&sizes, 0.0175).unwrap();
            let out = solve_splay(&coupling, &reset, &rise).unwrap();
            assert!(out.is_none(), "sizes {sizes:?} unexpectedly exist");
        }
    }

    #[test]
    fn meta_state_exists_below_gap() {
        let reset = PartialReset::linear(0.5).unwrap();
        let rise = RiseFunction::ub(-3.0).unwrap();
        let coupling = CouplingMatrix::meta(&[42, 8], 0.0175).unwrap();
        let sol = solve_splay(&coupling, &reset, &rise).unwrap().unwrap();
        assert!(sol.sigma_star.iter().all(|&s| s > 0.0));
        assert!(sol.residual < 1e-12);
        // and the engine confirms the fixed point
        let ref_osc = sol.state.perm()[0];
        let (back, _) = return_map(&sol.state, ref_osc, &coupling, &reset, &rise).unwrap();
        for (a, b) in sol.state.phases().iter().zip(back.phases()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn jacobian_identity_u_is_marginal() {
        let coupling = CouplingMatrix::homogeneous(5, 0.04).unwrap();
        let reset = PartialReset::linear(0.5).unwrap();
        let rise = RiseFunction::identity();
        let sol = solve_splay(&coupling, &reset, &rise).unwrap().unwrap();
        let rep = jacobian_at(&sol.state, &coupling, &reset, &rise).unwrap();
        for a in &rep.entries {
            for &v in a {
                assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
            }
        }
        assert_abs_diff_eq!(rep.ek_bound, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.spectral_radius, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn jacobian_ub_splay_is_stable_with_known_radius() {
        // for U_b every entry is e^(b eps) and the period product is
        // exactly e^(b eps n) times the identity
        let (n, eps, b) = (10, 0.05, -3.0);
        let coupling = CouplingMatrix::homogeneous(n, eps).unwrap();
        let reset = PartialReset::linear(0.3).unwrap();
        let rise = RiseFunction::ub(b).unwrap();
        let sol = solve_splay(&coupling, &reset, &rise).unwrap().unwrap();
        let rep = jacobian_at(&sol.state, &coupling, &reset, &rise).unwrap();
        assert!(rep.stable);
        assert_abs_diff_eq!(rep.ek_bound, (b * eps).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(
            rep.spectral_radius,
            (b * eps * n as f64).exp(),
            epsilon = 1e-9
        );
        assert!(rep.spectral_radius <= rep.ek_bound + 1e-9);
    }

    #[test]
    fn spectral_radius_matches_eigenvalues_on_random_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for size in [2usize, 3, 5, 8] {
            for _ in 0..5 {
                let m = DMatrix::from_fn(size, size, |_, _| rng.random_range(-1.0..1.0));
                let ours = spectral_radius_norm_squaring(&m, 1e-10);
                let eig = m
                    .complex_eigenvalues()
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max);
                assert_abs_diff_eq!(ours, eig, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn ek_bound_simple_polynomials() {
        // 1 + z: root -1, bound 1
        assert_abs_diff_eq!(ek_root_bound(&[1.0, 1.0]).unwrap(), 1.0);
        // 2 + z + z^2: roots |z| = sqrt(2) <= 2
        let beta = ek_root_bound(&[2.0, 1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(beta, 2.0);
        assert!(2.0_f64.sqrt() <= beta);
        assert!(ek_root_bound(&[1.0, 0.0, 1.0]).is_err());
        assert!(ek_root_bound(&[1.0]).is_err());
    }

    #[test]
    fn c_critical_matches_closed_form_and_reference() {
        let c2 = c_critical(2, 50, 0.0175, -3.0).unwrap();
        let cf = c_critical_closed_form_2(50, 0.0175, -3.0).unwrap();
        assert_abs_diff_eq!(c2, cf, epsilon = 1e-10);
        // high-precision reference value
        assert_abs_diff_eq!(cf, 0.64615127154609460184, epsilon = 1e-14);
        // strongly convex oscillators desynchronize at arbitrarily weak resets
        let c2_strong = c_critical(2, 50, 0.0175, -20.0).unwrap();
        assert!(c2_strong < 0.1 * c2, "c_cr(2) at b=-20 is {c2_strong}");
    }

    #[test]
    fn bifurcation_curve_strictly_decreasing() {
        let curve = bifurcation_curve(50, 0.0175, -3.0).unwrap();
        assert_eq!(curve.points.len(), 49);
        for w in curve.points.windows(2) {
            assert!(w[1].c_cr < w[0].c_cr);
        }
        assert!(curve.points.iter().all(|p| p.residual < 1e-10));
        // reference interior values
        let c50 = curve.points.last().unwrap();
        assert_eq!(c50.a, 50);
        assert_abs_diff_eq!(c50.c_cr, 0.0594751315168874, epsilon = 1e-10);
    }

    #[test]
    fn delta_return_map_properties() {
        let (a1, n, eps, c, b) = (5, 20, 0.03, 0.6, -3.0);
        assert_abs_diff_eq!(
            delta_return_map_ub(0.0, a1, n, eps, c, b).unwrap(),
            0.0,
            epsilon = 1e-14
        );
        let ub = RiseFunction::ub(b).unwrap();
        let dmax = 1.0 - ub.inv(1.0 - eps);
        let m = 200;
        let mut prev = 0.0;
        let mut prev_slope = f64::INFINITY;
        for k in 1..=m {
            let x = dmax * k as f64 / m as f64;
            let v = delta_return_map_ub(x, a1, n, eps, c, b).unwrap();
            let slope = (v - prev) / (dmax / m as f64);
            assert!(slope >= -1e-12, "nondecreasing");
            assert!(slope <= prev_slope + 1e-9, "concave");
            prev = v;
            prev_slope = slope;
        }
        assert!(delta_return_map_ub(dmax * 1.5, a1, n, eps, c, b).is_err());
    }

    #[test]
    fn cluster_bounds_absorption_always_sufficient() {
        let rise = RiseFunction::ub(-3.0).unwrap();
        let shape = classify(&rise).unwrap();
        let reset = PartialReset::absorption();
        for a1 in [2usize, 10, 40, 50] {
            let b = cluster_bounds(a1, 50, 0.0175, &reset, &rise, &shape).unwrap();
            assert!(b.sufficient_ok, "a1 = {a1}");
            assert!(b.necessary_ok);
            assert!(!b.instability_ok);
        }
    }

    #[test]
    fn full_conservation_destabilizes_every_cluster() {
        // R' = 1 exceeds the slope ratio for convex U: all avalanches split
        let rise = RiseFunction::ub(-3.0).unwrap();
        let reset = PartialReset::linear(1.0).unwrap();
        for a1 in 2..=20 {
            assert!(cluster_instability(a1, 20, 0.04, &reset, &rise));
        }
        assert!(!cluster_instability(5, 20, 0.04, &PartialReset::absorption(), &rise));
    }

    #[test]
    fn sufficient_implies_necessary_on_a_grid() {
        let rise = RiseFunction::ub(-3.0).unwrap();
        let shape = classify(&rise).unwrap();
        for ci in 0..=10 {
            let c = ci as f64 / 10.0;
            let reset = PartialReset::linear(c).unwrap();
            for a1 in [2usize, 5, 17, 33, 50] {
                let b = cluster_bounds(a1, 50, 0.0175, &reset, &rise, &shape).unwrap();
                if b.sufficient_ok {
                    assert!(b.necessary_ok, "a1={a1} c={c}");
                    assert!(!b.instability_ok, "a1={a1} c={c}: certified both ways");
                }
            }
        }
    }

    #[test]
    fn bounds_error_when_neither_icpd_nor_dcpd() {
        let rise = RiseFunction::qif(1.0, -1.0)
            .unwrap()
            .conductance_based(2.0)
            .unwrap();
        let shape = classify(&rise).unwrap();
        let reset = PartialReset::linear(0.5).unwrap();
        assert!(matches!(
            cluster_bounds(3, 10, 0.01, &reset, &rise, &shape),
            Err(Error::BoundsNotApplicable)
        ));
    }

    #[test]
    fn rc_thresholds_reproduce_fig6_band_shape() {
        // convex LIF-CB: thresholds decrease with a1 and the sync
        // instability onset sits near the stable-below curve at a1 = n
        let rise = RiseFunction::lif(3.0, 1.0)
            .unwrap()
            .conductance_based(1.1)
            .unwrap();
        let n = 100;
        let eps = 0.009;
        let (s2, n2) = rc_invariance_thresholds(2, n, eps, &rise, false).unwrap();
        let (s100, n100) = rc_invariance_thresholds(100, n, eps, &rise, false).unwrap();
        assert!(s2 > s100 && n2 > n100);
        assert!(s2 <= n2 + 1e-12 && s100 <= n100 + 1e-12);
        let instab = rc_instability_threshold(n, n, eps, &rise).unwrap().unwrap();
        assert_abs_diff_eq!(instab, 0.18, epsilon = 0.01);
    }
}
