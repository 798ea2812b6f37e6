//! Exact event-driven network simulation.
//!
//! Between avalanches every phase advances at unit rate, so time is
//! handled exactly: the network state lives on the Poincare section
//! "some oscillator is at threshold" and each event advances time by
//! the shift that brings the next oscillator to threshold. There is no
//! time discretization anywhere.

use std::io::Write;

use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};
use crate::reset::PartialReset;
use crate::rise::RiseFunction;
use crate::{THRESHOLD, THRESHOLD_TOL};

/// Network state on the Poincare section: phases sorted non-increasing
/// with `phases[0] = 1`, plus the permutation mapping sorted positions
/// to oscillator identities.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    phases: Vec<f64>,
    perm: Vec<usize>,
}

impl NetworkState {
    /// Builds a section state from phases indexed by oscillator id.
    /// The whole vector is advanced uniformly so the largest phase sits
    /// at threshold; the returned offset `1 - max(phases)` is the free
    /// evolution time spent, which is exact because `dphi/dt = 1`.
    /// Oscillators tied at the maximum end up in the triggering set
    /// together.
    pub fn from_phases(phases_by_id: &[f64]) -> Result<(Self, f64)> {
        if phases_by_id.is_empty() {
            return Err(Error::InvalidParameter {
                name: "phases",
                value: 0.0,
                requirement: "at least one oscillator",
            });
        }
        let mut max = f64::NEG_INFINITY;
        for &p in phases_by_id {
            if !(0.0..=1.0 + THRESHOLD_TOL).contains(&p) {
                return Err(Error::InvalidParameter {
                    name: "phase",
                    value: p,
                    requirement: "0 <= phase <= 1",
                });
            }
            max = max.max(p);
        }
        let offset = THRESHOLD - max;
        let mut idx: Vec<usize> = (0..phases_by_id.len()).collect();
        idx.sort_by(|&a, &b| {
            phases_by_id[b]
                .partial_cmp(&phases_by_id[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut phases: Vec<f64> = idx.iter().map(|&i| phases_by_id[i] + offset).collect();
        phases[0] = THRESHOLD;
        Ok((NetworkState { phases, perm: idx }, offset))
    }

    /// Sorted phase vector (non-increasing, `[0] = 1`).
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// `perm()[k]` is the oscillator id holding the k-th largest phase.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn n(&self) -> usize {
        self.phases.len()
    }

    /// Phases re-indexed by oscillator id.
    pub fn phases_by_id(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.phases.len()];
        for (pos, &osc) in self.perm.iter().enumerate() {
            out[osc] = self.phases[pos];
        }
        out
    }

    /// Oscillator ids currently at threshold (the triggering set).
    pub fn triggering_set(&self) -> Vec<usize> {
        let mut setv: Vec<usize> = self
            .phases
            .iter()
            .zip(&self.perm)
            .filter(|(p, _)| **p >= THRESHOLD - THRESHOLD_TOL)
            .map(|(_, &osc)| osc)
            .collect();
        setv.sort_unstable();
        setv
    }
}

/// Outcome of one avalanche in potential coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct AvalancheResult {
    /// All oscillators that fired, sorted by id.
    pub members: Vec<usize>,
    /// Generations of the cascade; they partition `members`.
    pub steps: Vec<Vec<usize>>,
    /// Potentials after the avalanche, by oscillator id. Members carry
    /// their reset value `R(zeta)`.
    pub potentials: Vec<f64>,
}

/// Resolves one avalanche: starting from the triggering set, repeatedly
/// collects oscillators pushed over threshold by the pulses fired so
/// far. Potentials accumulate the input of every member and the members
/// are reset once, at the end, to `R(u + total_input - 1)`.
pub fn resolve_avalanche(
    potentials: &[f64],
    trigger: &[usize],
    coupling: &CouplingMatrix,
    reset: &PartialReset,
) -> Result<AvalancheResult> {
    let n = potentials.len();
    debug_assert_eq!(coupling.n(), n);
    if trigger.is_empty() {
        return Err(Error::InvalidParameter {
            name: "trigger",
            value: 0.0,
            requirement: "non-empty triggering set",
        });
    }
    let mut acc = potentials.to_vec();
    let mut member = vec![false; n];
    let mut steps: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = trigger.to_vec();
    for &j in &current {
        member[j] = true;
    }

    while !current.is_empty() {
        if steps.len() > n {
            return Err(Error::AvalancheRunaway { max: n });
        }
        // deliver this generation's pulses to everyone; diagonal entries
        // carry the self-interaction of meta-oscillators
        for i in 0..n {
            let mut inp = 0.0;
            for &jj in &current {
                inp += coupling.get(i, jj);
            }
            acc[i] += inp;
        }
        steps.push(std::mem::take(&mut current));
        for (i, &u) in acc.iter().enumerate() {
            if !member[i] && u >= THRESHOLD - THRESHOLD_TOL {
                member[i] = true;
                current.push(i);
            }
        }
    }

    let mut members: Vec<usize> = (0..n).filter(|&i| member[i]).collect();
    members.sort_unstable();
    let mut potentials_after = acc;
    for &i in &members {
        let zeta = potentials_after[i] - THRESHOLD;
        if zeta < -THRESHOLD_TOL {
            return Err(Error::NegativeSurplus { zeta });
        }
        let r = reset.evaluate(zeta.max(0.0));
        if r >= THRESHOLD {
            return Err(Error::ResetAboveThreshold { reset: r });
        }
        potentials_after[i] = r;
    }
    Ok(AvalancheResult {
        members,
        steps,
        potentials: potentials_after,
    })
}

/// One event of a firing sequence: the avalanche set and the shift to
/// the next section.
#[derive(Debug, Clone, PartialEq)]
pub struct FiringEvent {
    pub members: Vec<usize>,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FiringSequence {
    pub events: Vec<FiringEvent>,
}

impl FiringSequence {
    /// Total time spanned by the sequence.
    pub fn total_shift(&self) -> f64 {
        self.events.iter().map(|e| e.sigma).sum()
    }
}

/// The Poincare map of the section: fires the current triggering set,
/// resolves the avalanche in potential coordinates, maps back to
/// phases, and shifts everyone so the next oscillator sits at
/// threshold. Returns the new state, the avalanche members (by id) and
/// the shift `sigma`.
pub fn firing_map(
    state: &NetworkState,
    coupling: &CouplingMatrix,
    reset: &PartialReset,
    rise: &RiseFunction,
) -> Result<(NetworkState, Vec<usize>, f64)> {
    let trigger = state.triggering_set();
    let by_id = state.phases_by_id();
    let potentials: Vec<f64> = by_id.iter().map(|&p| rise.eval(p)).collect();
    let res = resolve_avalanche(&potentials, &trigger, coupling, reset)?;

    let n = by_id.len();
    let mut member = vec![false; n];
    for &m in &res.members {
        member[m] = true;
    }
    let mut new_phases = vec![0.0; n];
    for i in 0..n {
        let p = rise.inv(res.potentials[i]);
        if !p.is_finite() {
            return Err(Error::NonConvergence {
                iterations: 0,
                residual: res.potentials[i],
            });
        }
        new_phases[i] = p;
        if !member[i] && p > THRESHOLD {
            // rounding from the U/U^-1 round trip
            new_phases[i] = THRESHOLD;
        }
    }
    let max = new_phases.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sigma = THRESHOLD - max;
    for p in &mut new_phases {
        *p += sigma;
    }
    let (next, _) = NetworkState::from_phases(&new_phases)?;
    Ok((next, res.members, sigma))
}

/// Composes firing maps from a state in which `ref_osc` fires until it
/// is about to fire again. Returns the final section state (with
/// `ref_osc` back at threshold) and the full firing sequence.
pub fn return_map(
    state: &NetworkState,
    ref_osc: usize,
    coupling: &CouplingMatrix,
    reset: &PartialReset,
    rise: &RiseFunction,
) -> Result<(NetworkState, FiringSequence)> {
    if !state.triggering_set().contains(&ref_osc) {
        return Err(Error::RefNotTriggering { osc: ref_osc });
    }
    let n = state.n();
    let limit = n * n;
    let mut seq = FiringSequence::default();
    let mut cur = state.clone();
    for _ in 0..limit.max(1) {
        let (next, members, sigma) = firing_map(&cur, coupling, reset, rise)?;
        seq.events.push(FiringEvent { members, sigma });
        cur = next;
        if cur.triggering_set().contains(&ref_osc) {
            return Ok((cur, seq));
        }
    }
    Err(Error::Livelock {
        osc: ref_osc,
        limit,
    })
}

/// One logged avalanche.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    /// Sorted oscillator ids.
    pub members: Vec<usize>,
}

/// Section snapshot taken just before an avalanche in which the
/// reference oscillator fires.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionSnapshot {
    pub record_index: usize,
    pub time: f64,
    /// Phases by oscillator id.
    pub phases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub n: usize,
    pub ref_osc: usize,
    pub records: Vec<EventRecord>,
    pub snapshots: Vec<SectionSnapshot>,
}

impl EventLog {
    pub fn total_spikes(&self) -> u64 {
        self.records.iter().map(|r| r.members.len() as u64).sum()
    }

    /// Writes one record per line: `t=<17 significant digits>
    /// members=<sorted,comma,separated>`. With `snapshot_every = k > 0`
    /// every k-th stored section snapshot is written on its own
    /// `section ...` line.
    pub fn write_text(&self, mut w: impl Write, snapshot_every: usize) -> Result<()> {
        let mut snap_iter = self.snapshots.iter().enumerate().peekable();
        for (idx, rec) in self.records.iter().enumerate() {
            while let Some(&(si, snap)) = snap_iter.peek() {
                if snap.record_index != idx {
                    break;
                }
                if snapshot_every > 0 && si % snapshot_every == 0 {
                    let phases: Vec<String> =
                        snap.phases.iter().map(|p| format!("{p:.16e}")).collect();
                    writeln!(w, "section t={:.16e} phases={}", snap.time, phases.join(","))?;
                }
                snap_iter.next();
            }
            let members: Vec<String> = rec.members.iter().map(|m| m.to_string()).collect();
            writeln!(w, "t={:.16e} members={}", rec.time, members.join(","))?;
        }
        Ok(())
    }
}

/// Stop condition for [`simulate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    /// Total pulses fired (an avalanche of size a counts a).
    Spikes(u64),
    /// Simulated time.
    Time(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct SimulateOptions {
    pub budget: Budget,
    /// Oscillator whose firings define sections and periodicity checks.
    pub ref_osc: usize,
    /// Stop as soon as the section state recurs within this tolerance
    /// (compared over the last `recurrence_window` reference sections).
    pub stop_on_recurrence: Option<f64>,
    /// How many past reference sections to keep for recurrence checks.
    pub recurrence_window: usize,
}

impl SimulateOptions {
    pub fn spikes(n_spikes: u64) -> Self {
        SimulateOptions {
            budget: Budget::Spikes(n_spikes),
            ref_osc: 0,
            stop_on_recurrence: None,
            recurrence_window: 0,
        }
    }
}

/// Event-driven loop: advance time to the next threshold crossing,
/// fire, log, repeat. Exact to floating point. Returns the log and the
/// final section state.
pub fn simulate(
    initial: &NetworkState,
    t0: f64,
    coupling: &CouplingMatrix,
    reset: &PartialReset,
    rise: &RiseFunction,
    opts: &SimulateOptions,
) -> Result<(EventLog, NetworkState)> {
    let n = initial.n();
    let mut log = EventLog {
        n,
        ref_osc: opts.ref_osc,
        records: Vec::new(),
        snapshots: Vec::new(),
    };
    let mut state = initial.clone();
    let mut t = t0;
    let mut spikes: u64 = 0;
    loop {
        match opts.budget {
            Budget::Spikes(maxs) => {
                if spikes >= maxs {
                    break;
                }
            }
            Budget::Time(maxt) => {
                if t > maxt {
                    break;
                }
            }
        }
        let fires_ref = state.triggering_set().contains(&opts.ref_osc);
        if fires_ref {
            log.snapshots.push(SectionSnapshot {
                record_index: log.records.len(),
                time: t,
                phases: state.phases_by_id(),
            });
        }
        let (next, members, sigma) = firing_map(&state, coupling, reset, rise)?;
        spikes += members.len() as u64;
        log.records.push(EventRecord { time: t, members });
        state = next;
        t += sigma;

        if fires_ref {
            if let Some(tol) = opts.stop_on_recurrence {
                if recurrence_found(&log.snapshots, tol, opts.recurrence_window) {
                    break;
                }
            }
        }
    }
    Ok((log, state))
}

fn recurrence_found(snaps: &[SectionSnapshot], tol: f64, window: usize) -> bool {
    if snaps.len() < 2 {
        return false;
    }
    let last = snaps.len() - 1;
    let lo = last.saturating_sub(window.max(1));
    let cur = sorted_desc(&snaps[last].phases);
    for j in (lo..last).rev() {
        let other = sorted_desc(&snaps[j].phases);
        if max_abs_diff(&cur, &other) <= tol {
            return true;
        }
    }
    false
}

fn sorted_desc(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    out.sort_by(|a, b| b.partial_cmp(a).unwrap());
    out
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Asymptotic cluster structure extracted from an event log.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPartition {
    /// Cluster sizes, sorted descending; they sum to the network size.
    pub sizes: Vec<usize>,
    pub periodic: bool,
    pub period: Option<f64>,
}

impl ClusterPartition {
    pub fn max_cluster(&self) -> usize {
        self.sizes.first().copied().unwrap_or(0)
    }
}

/// Detects periodicity and clusters in the trailing `window` reference
/// sections of a log.
///
/// Periodicity: the sorted section phase vector at the reference
/// oscillator's firings recurs within `tol`. Clusters: oscillators
/// grouped by the avalanche membership set of their most recent firing
/// inside the detected cycle (pulse synchrony, not phase proximity).
/// When no recurrence is found the partition of the trailing window is
/// reported with `periodic = false`; that is a result, not an error.
pub fn detect_clusters(log: &EventLog, window: usize, tol: f64) -> ClusterPartition {
    let snaps = &log.snapshots;
    if snaps.len() >= 2 {
        let last = snaps.len() - 1;
        let target = sorted_desc(&snaps[last].phases);
        let lo = last.saturating_sub(window.max(1));
        for j in (lo..last).rev() {
            let cand = sorted_desc(&snaps[j].phases);
            if max_abs_diff(&target, &cand) <= tol {
                let period = snaps[last].time - snaps[j].time;
                let sizes = partition_sizes(log, snaps[j].record_index, snaps[last].record_index);
                return ClusterPartition {
                    sizes,
                    periodic: true,
                    period: Some(period),
                };
            }
        }
    }
    // aperiodic: partition the trailing window of events
    let hi = log.records.len();
    let lo = hi.saturating_sub(window.max(1) * log.n);
    ClusterPartition {
        sizes: partition_sizes(log, lo, hi),
        periodic: false,
        period: None,
    }
}

/// Groups oscillators by the member set of their most recent avalanche
/// within `records[lo..hi]`; sizes sorted descending, padded with
/// singletons for oscillators that did not fire in the range.
fn partition_sizes(log: &EventLog, lo: usize, hi: usize) -> Vec<usize> {
    let mut last_event: Vec<Option<usize>> = vec![None; log.n];
    for idx in lo..hi {
        for &m in &log.records[idx].members {
            last_event[m] = Some(idx);
        }
    }
    let mut counts: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
    let mut silent = 0usize;
    for osc in 0..log.n {
        match last_event[osc] {
            Some(e) => *counts.entry(e).or_insert(0) += 1,
            None => silent += 1,
        }
    }
    let mut sizes: Vec<usize> = counts.into_values().collect();
    sizes.extend(std::iter::repeat(1).take(silent));
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn identity() -> RiseFunction {
        RiseFunction::identity()
    }

    #[test]
    fn avalanche_hand_example() {
        // N = 4 all-to-all, identity U, eps = 0.3, R_c c = 0.5,
        // potentials (1.0, 0.8, 0.5, 0.05): cascade {0},{1},{2}
        let coupling = CouplingMatrix::homogeneous(4, 0.3).unwrap();
        let reset = PartialReset::linear(0.5).unwrap();
        let res = resolve_avalanche(&[1.0, 0.8, 0.5, 0.05], &[0], &coupling, &reset).unwrap();
        assert_eq!(res.members, vec![0, 1, 2]);
        assert_eq!(res.steps, vec![vec![0], vec![1], vec![2]]);
        assert_abs_diff_eq!(res.potentials[3], 0.95, epsilon = 1e-12);
        assert_abs_diff_eq!(res.potentials[0], 0.3, epsilon = 1e-12); // R(0.6)
        assert_abs_diff_eq!(res.potentials[1], 0.2, epsilon = 1e-12); // R(0.4)
        assert_abs_diff_eq!(res.potentials[2], 0.05, epsilon = 1e-12); // R(0.1)
    }

    #[test]
    fn lone_trigger_single_generation() {
        let coupling = CouplingMatrix::homogeneous(3, 0.1).unwrap();
        let reset = PartialReset::linear(0.5).unwrap();
        let res = resolve_avalanche(&[1.0, 0.5, 0.2], &[0], &coupling, &reset).unwrap();
        assert_eq!(res.members, vec![0]);
        assert_eq!(res.steps.len(), 1);
        assert_abs_diff_eq!(res.potentials[0], 0.0);
        assert_abs_diff_eq!(res.potentials[1], 0.6);
    }

    #[test]
    fn absorption_resets_members_to_zero() {
        let coupling = CouplingMatrix::homogeneous(3, 0.4).unwrap();
        let reset = PartialReset::absorption();
        let res = resolve_avalanche(&[1.0, 0.9, 0.7], &[0], &coupling, &reset).unwrap();
        assert_eq!(res.members, vec![0, 1, 2]);
        for &m in &res.members {
            assert_eq!(res.potentials[m], 0.0);
        }
    }

    #[test]
    fn firing_map_two_oscillators() {
        // N = 2, identity U, phases (1, 0.3), eps = 0.2:
        // after firing, osc 1 is at 0.5, osc 0 reset to 0; sigma = 0.5
        let coupling = CouplingMatrix::homogeneous(2, 0.2).unwrap();
        let reset = PartialReset::linear(0.5).unwrap();
        let (state, _) = NetworkState::from_phases(&[1.0, 0.3]).unwrap();
        let (next, members, sigma) = firing_map(&state, &coupling, &reset, &identity()).unwrap();
        assert_eq!(members, vec![0]);
        assert_abs_diff_eq!(sigma, 0.5, epsilon = 1e-15);
        assert_eq!(next.perm()[0], 1);
        assert_abs_diff_eq!(next.phases()[0], 1.0);
        assert_abs_diff_eq!(next.phases()[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn fully_synchronous_firing() {
        // all at threshold: one avalanche of N, sigma = 1 - U^-1(R((N-1) eps))
        let n = 5;
        let eps = 0.1;
        let c = 0.5;
        let coupling = CouplingMatrix::homogeneous(n, eps).unwrap();
        let reset = PartialReset::linear(c).unwrap();
        let (state, _) = NetworkState::from_phases(&vec![1.0; n]).unwrap();
        let (_, members, sigma) = firing_map(&state, &coupling, &reset, &identity()).unwrap();
        assert_eq!(members.len(), n);
        let expected = 1.0 - c * (n as f64 - 1.0) * eps;
        assert_abs_diff_eq!(sigma, expected, epsilon = 1e-12);
    }

    #[test]
    fn return_map_synchronous_state_single_event() {
        let coupling = CouplingMatrix::homogeneous(4, 0.1).unwrap();
        let reset = PartialReset::linear(0.3).unwrap();
        let (state, _) = NetworkState::from_phases(&vec![1.0; 4]).unwrap();
        let (next, seq) = return_map(&state, 2, &coupling, &reset, &identity()).unwrap();
        assert_eq!(seq.events.len(), 1);
        assert_eq!(seq.events[0].members.len(), 4);
        assert_eq!(next.triggering_set(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn return_map_requires_ref_in_first_avalanche() {
        let coupling = CouplingMatrix::homogeneous(2, 0.2).unwrap();
        let reset = PartialReset::absorption();
        let (state, _) = NetworkState::from_phases(&[1.0, 0.4]).unwrap();
        assert!(matches!(
            return_map(&state, 1, &coupling, &reset, &identity()),
            Err(Error::RefNotTriggering { osc: 1 })
        ));
    }

    #[test]
    fn single_oscillator_fires_at_integer_times() {
        let coupling = CouplingMatrix::homogeneous(1, 0.0).unwrap();
        let reset = PartialReset::absorption();
        let (state, t0) = NetworkState::from_phases(&[0.0]).unwrap();
        let (log, _) = simulate(
            &state,
            t0,
            &coupling,
            &reset,
            &identity(),
            &SimulateOptions::spikes(3),
        )
        .unwrap();
        let times: Vec<f64> = log.records.iter().map(|r| r.time).collect();
        assert_eq!(times.len(), 3);
        assert_abs_diff_eq!(times[0], 1.0);
        assert_abs_diff_eq!(times[1], 2.0);
        assert_abs_diff_eq!(times[2], 3.0);
    }

    #[test]
    fn synchronous_state_stays_synchronous() {
        let n = 6;
        let coupling = CouplingMatrix::homogeneous(n, 0.05).unwrap();
        let reset = PartialReset::linear(0.4).unwrap();
        let ub = RiseFunction::ub(-2.0).unwrap();
        let (state, t0) = NetworkState::from_phases(&vec![1.0; n]).unwrap();
        let (log, _) = simulate(
            &state,
            t0,
            &coupling,
            &reset,
            &ub,
            &SimulateOptions::spikes(60),
        )
        .unwrap();
        let mut gap = None;
        for w in log.records.windows(2) {
            assert_eq!(w[0].members.len(), n);
            let dt = w[1].time - w[0].time;
            match gap {
                None => gap = Some(dt),
                Some(g) => assert_abs_diff_eq!(dt, g, epsilon = 1e-12),
            }
        }
        let part = detect_clusters(&log, 10 * n, 1e-7);
        assert!(part.periodic);
        assert_eq!(part.sizes, vec![n]);
    }

    #[test]
    fn determinism_bit_identical_logs() {
        let n = 8;
        let coupling = CouplingMatrix::homogeneous(n, 0.02).unwrap();
        let reset = PartialReset::linear(0.6).unwrap();
        let ub = RiseFunction::ub(-3.0).unwrap();
        let phases: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let (state, t0) = NetworkState::from_phases(&phases).unwrap();
        let opts = SimulateOptions::spikes(400);
        let (log_a, _) = simulate(&state, t0, &coupling, &reset, &ub, &opts).unwrap();
        let (log_b, _) = simulate(&state, t0, &coupling, &reset, &ub, &opts).unwrap();
        assert_eq!(log_a, log_b);
    }

    #[test]
    fn splay_like_log_detects_singletons() {
        let n = 5;
        let coupling = CouplingMatrix::homogeneous(n, 0.02).unwrap();
        let reset = PartialReset::linear(0.5).unwrap();
        let ub = RiseFunction::ub(-3.0).unwrap();
        let phases: Vec<f64> = (0..n).map(|i| 1.0 - 0.19 * i as f64).collect();
        let (state, t0) = NetworkState::from_phases(&phases).unwrap();
        let (log, _) = simulate(
            &state,
            t0,
            &coupling,
            &reset,
            &ub,
            &SimulateOptions::spikes(600),
        )
        .unwrap();
        let part = detect_clusters(&log, 10 * n, 1e-7);
        assert!(part.periodic, "splay-like run should settle to periodic");
        assert_eq!(part.sizes, vec![1; n]);
        // excitatory pulses shorten the period below the free period 1
        let period = part.period.unwrap();
        assert!(period > 0.5 && period < 1.0, "period = {period}");
    }

    #[test]
    fn meta_oscillator_equivalence() {
        // phase-synchronized clusters in the full network evolve exactly
        // like the reduced meta network
        let eps = 0.03;
        let sizes = [3usize, 2, 1];
        let reset = PartialReset::linear(0.5).unwrap();
        let ub = RiseFunction::ub(-2.0).unwrap();

        let full = CouplingMatrix::homogeneous(6, eps).unwrap();
        let full_phases = vec![1.0, 1.0, 1.0, 0.55, 0.55, 0.2];
        let (fs, ft0) = NetworkState::from_phases(&full_phases).unwrap();
        let (flog, _) =
            simulate(&fs, ft0, &full, &reset, &ub, &SimulateOptions::spikes(600)).unwrap();

        let meta = CouplingMatrix::meta(&sizes, eps).unwrap();
        let meta_phases = vec![1.0, 0.55, 0.2];
        let (ms, mt0) = NetworkState::from_phases(&meta_phases).unwrap();
        let (mlog, _) =
            simulate(&ms, mt0, &meta, &reset, &ub, &SimulateOptions::spikes(100)).unwrap();

        // avalanche times must match one-for-one
        let n_common = mlog.records.len().min(flog.records.len());
        assert!(n_common > 50);
        for k in 0..n_common {
            assert_abs_diff_eq!(flog.records[k].time, mlog.records[k].time, epsilon = 1e-9);
        }
        // clusters in the full network stay invariant
        for rec in flog.records.iter() {
            let sz = rec.members.len();
            assert!(sz == 3 || sz == 2 || sz == 1);
            if sz == 3 {
                assert_eq!(rec.members, vec![0, 1, 2]);
            }
            if sz == 2 {
                assert_eq!(rec.members, vec![3, 4]);
            }
        }
    }

    #[test]
    fn firing_order_preserved_each_fires_once_per_period() {
        // asynchronous start, neuronal reset: between two firings of the
        // reference every other oscillator fires exactly once
        let n = 7;
        let coupling = CouplingMatrix::homogeneous(n, 0.03).unwrap();
        let reset = PartialReset::linear(0.8).unwrap();
        let ub = RiseFunction::ub(-3.0).unwrap();
        let phases: Vec<f64> = (0..n).map(|i| (0.83 * (i as f64 + 1.0)).fract()).collect();
        let (state, t0) = NetworkState::from_phases(&phases).unwrap();
        let (log, _) = simulate(
            &state,
            t0,
            &coupling,
            &reset,
            &ub,
            &SimulateOptions::spikes(700),
        )
        .unwrap();
        let ref_events: Vec<usize> = log
            .records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.members.contains(&0))
            .map(|(i, _)| i)
            .collect();
        assert!(ref_events.len() > 3);
        for w in ref_events.windows(2) {
            let mut fired = vec![0usize; n];
            for rec in &log.records[w[0]..w[1]] {
                for &m in &rec.members {
                    fired[m] += 1;
                }
            }
            assert_eq!(fired, vec![1; n], "between refs each fires exactly once");
        }
    }

    #[test]
    fn event_log_text_round_trip_precision() {
        let coupling = CouplingMatrix::homogeneous(2, 0.2).unwrap();
        let reset = PartialReset::absorption();
        let (state, t0) = NetworkState::from_phases(&[1.0, 0.123456789012345]).unwrap();
        let (log, _) = simulate(
            &state,
            t0,
            &coupling,
            &reset,
            &identity(),
            &SimulateOptions::spikes(5),
        )
        .unwrap();
        let mut buf = Vec::new();
        log.write_text(&mut buf, 0).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for (line, rec) in text.lines().zip(&log.records) {
            let t_str = line
                .split_whitespace()
                .next()
                .unwrap()
                .strip_prefix("t=")
                .unwrap();
            let parsed: f64 = t_str.parse().unwrap();
            assert_eq!(parsed, rec.time, "17 significant digits round-trip");
        }
    }
}
