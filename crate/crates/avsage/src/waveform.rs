//! Workload-to-stimulus conversion: equivalent long-period waveforms for BTI
//! extrapolation, the transition-shape factor for HCI, and HCI time
//! accumulation.
//!
//! Cycle-by-cycle simulation of a multi-year lifetime is infeasible (a base
//! stress/recovery period is a few hundred nanoseconds), so the engine builds
//! a ladder of equivalent waveforms. Each lift replaces `N` periods of the
//! current waveform by a single period `N` times longer whose effective
//! stress and recovery voltages are solved so the threshold-voltage shift
//! matches at the phase boundaries.

use serde::{Deserialize, Serialize};

use crate::aging::{
    apply_stress_segment, equivalent_time, hci_law, AgingParams, DeviceAgingState,
    StressMode, TrapSpecies,
};
use crate::error::{Error, Result};

/// Average switching statistics of the cells driving the critical paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkloadStats {
    /// Fraction of a toggle period spent under stress, in [0, 1].
    pub duty_factor: f64,
    /// Transitions per clock cycle, in (0, 1].
    pub toggle_rate: f64,
    /// Clock period (s).
    pub t_clk_s: f64,
    /// Signal transition time (s), shorter than the clock period.
    pub transition_time_s: f64,
}

impl WorkloadStats {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.duty_factor) {
            return Err(Error::Domain(format!(
                "duty_factor must be in [0,1], got {}",
                self.duty_factor
            )));
        }
        if !(self.toggle_rate > 0.0 && self.toggle_rate <= 1.0) {
            return Err(Error::Domain(format!(
                "toggle_rate must be in (0,1], got {}",
                self.toggle_rate
            )));
        }
        if !(self.t_clk_s > 0.0) {
            return Err(Error::Domain(format!("t_clk must be > 0, got {}", self.t_clk_s)));
        }
        if !(self.transition_time_s >= 0.0 && self.transition_time_s < self.t_clk_s) {
            return Err(Error::Domain(format!(
                "transition_time must be in [0, t_clk), got {}",
                self.transition_time_s
            )));
        }
        Ok(())
    }

    /// Base stress/recovery period: one toggle interval.
    pub fn base_period_s(&self) -> f64 {
        self.t_clk_s / self.toggle_rate
    }
}

impl Default for WorkloadStats {
    fn default() -> Self {
        WorkloadStats {
            duty_factor: 0.5,
            toggle_rate: 0.0075,
            t_clk_s: 1.6e-9,
            transition_time_s: 1.0e-10,
        }
    }
}

/// A single stress-then-recovery cycle standing in for many shorter ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalentWaveform {
    /// Cycle period (s).
    pub period_s: f64,
    /// Effective stress voltage (V).
    pub v_geff_stress: f64,
    /// Effective recovery voltage (V).
    pub v_geff_recovery: f64,
    /// Fraction of the period under stress (the duty factor).
    pub stress_fraction: f64,
    /// Extrapolation depth; level 0 is the raw toggle waveform.
    pub level: u32,
    /// How many base periods one cycle of this waveform represents.
    pub cycles_represented: u64,
}

impl EquivalentWaveform {
    pub fn stress_duration_s(&self) -> f64 {
        self.period_s * self.stress_fraction
    }

    pub fn recovery_duration_s(&self) -> f64 {
        self.period_s * (1.0 - self.stress_fraction)
    }
}

/// Level-0 waveform for the given workload: stress at `v_dd` for the duty
/// fraction of one toggle interval, recovery at 0 V for the rest.
pub fn base_waveform(stats: &WorkloadStats, v_dd: f64) -> Result<EquivalentWaveform> {
    stats.validate()?;
    if !(v_dd > 0.0 && v_dd.is_finite()) {
        return Err(Error::Domain(format!("V_DD must be > 0, got {v_dd}")));
    }
    Ok(EquivalentWaveform {
        period_s: stats.base_period_s(),
        v_geff_stress: v_dd,
        v_geff_recovery: 0.0,
        stress_fraction: stats.duty_factor,
        level: 0,
        cycles_represented: 1,
    })
}

/// Apply one full cycle of `w` to a device state. Returns the state at the
/// end of the stress phase (the peak) and at the end of the cycle.
fn apply_cycle(
    state: &DeviceAgingState,
    w: &EquivalentWaveform,
    traps: &[TrapSpecies],
    temp_k: f64,
) -> Result<(DeviceAgingState, DeviceAgingState)> {
    let peak = apply_stress_segment(
        state,
        traps,
        w.v_geff_stress,
        temp_k,
        w.stress_duration_s(),
        StressMode::Stress,
    )?;
    let t_rec = w.recovery_duration_s();
    let end = if t_rec > 0.0 {
        apply_stress_segment(&peak, traps, w.v_geff_recovery, temp_k, t_rec, StressMode::Recovery)?
    } else {
        peak.clone()
    };
    Ok((peak, end))
}

const LIFT_V_TOL: f64 = 1e-9;
const LIFT_MAX_ITERS: usize = 100;

/// Find `v` with `f(v) = 0` for non-decreasing `f`. Residuals within a small
/// fraction of `scale` count as matched, which covers waveforms whose
/// recovery (or stress) response is flat over the bracket.
fn bisect_voltage<F: Fn(f64) -> Result<f64>>(f: F, lo0: f64, hi0: f64, scale: f64) -> Result<f64> {
    let tol = 1e-6 * scale.abs().max(f64::MIN_POSITIVE);
    let f_lo = f(lo0)?;
    let f_hi = f(hi0)?;
    if f_lo > tol || f_hi < -tol {
        return Err(Error::Extrapolation(format!(
            "no root in [{lo0:.3}, {hi0:.3}] V (f(lo) = {f_lo:.3e}, f(hi) = {f_hi:.3e}); \
             model and waveform parameters are inconsistent"
        )));
    }
    if f_lo >= 0.0 || f_hi <= 0.0 {
        // Flat response within tolerance; the lowest voltage is canonical.
        return Ok(lo0);
    }
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..LIFT_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= LIFT_V_TOL {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Lift a waveform by a factor `n`: construct a cycle `n` times longer whose
/// single stress and recovery phases reproduce, at the phase boundaries, the
/// total BTI shift of `n` consecutive cycles of `w` applied to a fresh state.
pub fn lift_waveform(
    w: &EquivalentWaveform,
    n: u32,
    traps: &[TrapSpecies],
    temp_k: f64,
) -> Result<EquivalentWaveform> {
    if n == 0 {
        return Err(Error::Domain("lift factor must be >= 1".into()));
    }
    if n == 1 {
        return Ok(*w);
    }
    if traps.is_empty() {
        // No BTI species: the waveform only matters through its period.
        return Ok(EquivalentWaveform {
            period_s: w.period_s * n as f64,
            level: w.level + 1,
            cycles_represented: w.cycles_represented * n as u64,
            ..*w
        });
    }
    let t_stress = w.stress_duration_s() * n as f64;
    let t_rec = w.recovery_duration_s() * n as f64;
    if w.recovery_duration_s() == 0.0 {
        // Stress-only waveform is already equivalent at any scale.
        return Ok(EquivalentWaveform {
            period_s: w.period_s * n as f64,
            level: w.level + 1,
            cycles_represented: w.cycles_represented * n as u64,
            ..*w
        });
    }

    // Cycle-by-cycle reference over n periods.
    let fresh = DeviceAgingState::fresh(traps.len());
    let mut state = fresh.clone();
    let mut peak_target = 0.0;
    for _ in 0..n {
        let (peak, end) = apply_cycle(&state, w, traps, temp_k)?;
        peak_target = peak.bti_total();
        state = end;
    }
    let end_target = state.bti_total();

    // Effective stress voltage: a single stress phase of n*t_stress must
    // reach the reference peak.
    let hi = 2.0 * w.v_geff_stress;
    let v_stress = bisect_voltage(
        |v| {
            let s = apply_stress_segment(&fresh, traps, v, temp_k, t_stress, StressMode::Stress)?;
            Ok(s.bti_total() - peak_target)
        },
        0.0,
        hi,
        peak_target,
    )?;

    // Effective recovery voltage: recovering from the lifted peak for
    // n*t_rec must land on the reference end value.
    let peak_state =
        apply_stress_segment(&fresh, traps, v_stress, temp_k, t_stress, StressMode::Stress)?;
    let v_rec = bisect_voltage(
        |v| {
            let s =
                apply_stress_segment(&peak_state, traps, v, temp_k, t_rec, StressMode::Recovery)?;
            Ok(s.bti_total() - end_target)
        },
        0.0,
        hi,
        end_target,
    )?;

    Ok(EquivalentWaveform {
        period_s: w.period_s * n as f64,
        v_geff_stress: v_stress,
        v_geff_recovery: v_rec,
        stress_fraction: w.stress_fraction,
        level: w.level + 1,
        cycles_represented: w.cycles_represented * n as u64,
    })
}

/// Where in the waveform a trajectory sample was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryKind {
    /// End of a stress phase (local maximum of the shift).
    StressEnd,
    /// End of a full cycle, after recovery; these form the monotone envelope.
    CycleEnd,
}

/// One BTI trajectory sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BtiSample {
    /// Time since the start of the extrapolation (s).
    pub t_s: f64,
    /// Total BTI shift (V).
    pub total: f64,
    /// Per-species shifts (V).
    pub per_species: Vec<f64>,
    pub kind: BoundaryKind,
}

/// BTI shift over time from the equivalent-waveform extrapolation.
///
/// The cycle-end samples form a monotone envelope; `total_at` interpolates it
/// log-linearly in time, which is the curve the AVS loop and the reports
/// consume.
#[derive(Debug, Clone, Serialize)]
pub struct BtiTrajectory {
    samples: Vec<BtiSample>,
    /// Indexes of cycle-end samples, in time order.
    envelope: Vec<usize>,
    n_species: usize,
}

impl BtiTrajectory {
    pub fn samples(&self) -> &[BtiSample] {
        &self.samples
    }

    /// (t, total) pairs of the monotone cycle-end envelope.
    pub fn envelope_points(&self) -> Vec<(f64, f64)> {
        self.envelope.iter().map(|&i| (self.samples[i].t_s, self.samples[i].total)).collect()
    }

    pub fn final_t(&self) -> f64 {
        self.envelope.last().map(|&i| self.samples[i].t_s).unwrap_or(0.0)
    }

    pub fn final_total(&self) -> f64 {
        self.envelope.last().map(|&i| self.samples[i].total).unwrap_or(0.0)
    }

    fn interp(&self, t: f64, f: impl Fn(&BtiSample) -> f64) -> f64 {
        if self.envelope.is_empty() || t <= 0.0 {
            return 0.0;
        }
        let first = &self.samples[self.envelope[0]];
        if t <= first.t_s {
            // Linear ramp from the origin over the first cycle.
            return f(first) * t / first.t_s;
        }
        let last = &self.samples[*self.envelope.last().unwrap()];
        if t >= last.t_s {
            return f(last);
        }
        // Binary search over envelope times.
        let mut lo = 0usize;
        let mut hi = self.envelope.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.samples[self.envelope[mid]].t_s <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let a = &self.samples[self.envelope[lo]];
        let b = &self.samples[self.envelope[hi]];
        let u = (t.ln() - a.t_s.ln()) / (b.t_s.ln() - a.t_s.ln());
        f(a) + u * (f(b) - f(a))
    }

    /// Total BTI shift at time `t` (s), interpolated on the envelope.
    pub fn total_at(&self, t: f64) -> f64 {
        self.interp(t, |s| s.total)
    }

    /// Per-species shifts at time `t`.
    pub fn species_at(&self, t: f64) -> Vec<f64> {
        (0..self.n_species).map(|i| self.interp(t, |s| s.per_species[i])).collect()
    }
}

fn push_sample(samples: &mut Vec<BtiSample>, t: f64, state: &DeviceAgingState, kind: BoundaryKind) {
    samples.push(BtiSample {
        t_s: t,
        total: state.bti_total(),
        per_species: state.species_dvth(),
        kind,
    });
}

/// Extrapolate BTI from an arbitrary starting state. The ladder lifts the
/// waveform by `n` whenever the elapsed local time reaches the next power of
/// `n` in base periods, and stops lifting once a single period covers the
/// horizon.
pub fn extrapolate_bti_from(
    state0: &DeviceAgingState,
    stats: &WorkloadStats,
    v_dd: f64,
    params: &AgingParams,
    horizon_s: f64,
    branch_factor: u32,
) -> Result<BtiTrajectory> {
    if !(horizon_s > 0.0) {
        return Err(Error::Domain(format!("horizon must be > 0, got {horizon_s}")));
    }
    if branch_factor < 2 {
        return Err(Error::Domain(format!(
            "branch factor must be >= 2, got {branch_factor}"
        )));
    }
    let traps = &params.bti_traps;
    let temp = params.bti_temp_k();
    let mut w = base_waveform(stats, v_dd)?;
    let mut state = state0.clone();
    let mut samples = Vec::new();
    let mut envelope = Vec::new();
    let mut t = 0.0_f64;
    let mut next_lift_at = w.period_s * branch_factor as f64;

    loop {
        let (peak, end) = apply_cycle(&state, &w, traps, temp)?;
        let t_peak = t + w.stress_duration_s();
        t += w.period_s;
        push_sample(&mut samples, t_peak, &peak, BoundaryKind::StressEnd);
        push_sample(&mut samples, t, &end, BoundaryKind::CycleEnd);
        envelope.push(samples.len() - 1);
        state = end;
        if t >= horizon_s {
            break;
        }
        if t >= next_lift_at - 0.5 * w.period_s {
            if w.period_s < horizon_s {
                w = lift_waveform(&w, branch_factor, traps, temp)?;
                next_lift_at *= branch_factor as f64;
            } else {
                next_lift_at = f64::INFINITY;
            }
        }
    }

    Ok(BtiTrajectory { samples, envelope, n_species: traps.len() })
}

/// Extrapolate BTI from a fresh device over `horizon_s` seconds.
pub fn extrapolate_bti(
    stats: &WorkloadStats,
    v_dd: f64,
    params: &AgingParams,
    horizon_s: f64,
    branch_factor: u32,
) -> Result<BtiTrajectory> {
    let state0 = DeviceAgingState::for_params(params);
    extrapolate_bti_from(&state0, stats, v_dd, params, horizon_s, branch_factor)
}

/// A sampled gate-voltage transition, expressed as intervals. Interval `i`
/// spans `(t[i-1], t[i]]` and is evaluated at voltage `v[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionWaveform {
    /// (interval end time in s, representative voltage in V), strictly
    /// increasing in time. The last entry defines the transition time.
    pub points: Vec<(f64, f64)>,
}

impl TransitionWaveform {
    /// Linear 0 -> `v_dd` ramp over `transition_time_s`, split into `n`
    /// intervals sampled at their midpoints.
    pub fn linear_ramp(v_dd: f64, transition_time_s: f64, n: usize) -> Self {
        let dt = transition_time_s / n as f64;
        let points = (1..=n)
            .map(|i| (i as f64 * dt, v_dd * ((i as f64 - 0.5) / n as f64)))
            .collect();
        TransitionWaveform { points }
    }

    pub fn transition_time_s(&self) -> f64 {
        self.points.last().map(|p| p.0).unwrap_or(0.0)
    }

    pub fn validate(&self, v_dd: f64) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::Domain("transition waveform has no samples".into()));
        }
        let mut prev = 0.0;
        for &(t, v) in &self.points {
            if !(t > prev) {
                return Err(Error::Domain(format!(
                    "transition samples must be strictly increasing in time (t = {t})"
                )));
            }
            if !(0.0..=v_dd * (1.0 + 1e-9)).contains(&v) {
                return Err(Error::Domain(format!(
                    "transition voltage {v} outside [0, V_DD = {v_dd}]"
                )));
            }
            prev = t;
        }
        Ok(())
    }
}

/// Effective HCI degradation factor: the fraction of the transition time
/// that, at constant `v_dd`, produces the same HCI shift as the sampled
/// transition. Computed by accumulating HCI across the intervals with
/// equivalent-time continuation and inverting the single-segment law.
pub fn gamma_factor(
    waveform: &TransitionWaveform,
    hci: &crate::aging::HciParams,
    v_dd: f64,
    temp_k: f64,
) -> Result<f64> {
    waveform.validate(v_dd)?;
    let tau = waveform.transition_time_s();
    if waveform.points.iter().all(|&(_, v)| v == v_dd) {
        return Ok(1.0);
    }
    let mut dvth = 0.0_f64;
    let mut t_eq = 0.0_f64;
    let mut last_v = f64::NAN;
    let mut prev_t = 0.0_f64;
    for &(t, v) in &waveform.points {
        let dt = t - prev_t;
        if v != last_v {
            t_eq = equivalent_time(|x| hci_law(hci, v, temp_k, x).unwrap_or(f64::NAN), dvth, tau)?;
            last_v = v;
        }
        t_eq += dt;
        dvth = hci_law(hci, v, temp_k, t_eq)?;
        prev_t = t;
    }
    let t_total =
        equivalent_time(|x| hci_law(hci, v_dd, temp_k, x).unwrap_or(f64::NAN), dvth, tau)?;
    Ok((t_total / tau).min(1.0))
}

/// Advance the HCI component of `state` by `total_time` seconds of operation
/// at `v_dd`. The accumulated HCI stress time is
/// `gamma * transition_time / t_clk * toggle_rate * total_time`, continued
/// through the equivalent time at the current voltage.
pub fn accumulate_hci(
    state: &DeviceAgingState,
    gamma: f64,
    stats: &WorkloadStats,
    total_time_s: f64,
    v_dd: f64,
    hci: &crate::aging::HciParams,
    temp_k: f64,
) -> Result<DeviceAgingState> {
    if !(total_time_s >= 0.0) {
        return Err(Error::Domain(format!("total_time must be >= 0, got {total_time_s}")));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Domain(format!("gamma must be in (0,1], got {gamma}")));
    }
    stats.validate()?;
    let mut out = state.clone();
    if total_time_s == 0.0 {
        return Ok(out);
    }
    let t_hci = hci_stress_time(gamma, stats, total_time_s);
    if out.hci_last_v != v_dd || out.hci_dvth == 0.0 {
        out.hci_t_eq = equivalent_time(
            |x| hci_law(hci, v_dd, temp_k, x).unwrap_or(f64::NAN),
            out.hci_dvth,
            t_hci,
        )?;
        out.hci_last_v = v_dd;
    }
    out.hci_t_eq += t_hci;
    let next = hci_law(hci, v_dd, temp_k, out.hci_t_eq)?;
    // HCI never recovers.
    out.hci_dvth = next.max(out.hci_dvth);
    Ok(out)
}

/// Accumulated HCI stress time for `total_time` seconds of operation.
pub fn hci_stress_time(gamma: f64, stats: &WorkloadStats, total_time_s: f64) -> f64 {
    gamma * (stats.transition_time_s / stats.t_clk_s) * stats.toggle_rate * total_time_s
}

/// Average per-cell rows of a workload trace into a single WorkloadStats.
pub fn average_workload(
    rows: &[(f64, f64)],
    t_clk_s: f64,
    transition_time_s: f64,
) -> Result<WorkloadStats> {
    if rows.is_empty() {
        return Err(Error::Domain("workload trace has no rows".into()));
    }
    let n = rows.len() as f64;
    let stats = WorkloadStats {
        duty_factor: rows.iter().map(|r| r.0).sum::<f64>() / n,
        toggle_rate: rows.iter().map(|r| r.1).sum::<f64>() / n,
        t_clk_s,
        transition_time_s,
    };
    stats.validate()?;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aging::HciParams;

    const T: f64 = 298.15;

    fn species() -> Vec<TrapSpecies> {
        crate::aging::calibrated_models().pmos.bti_traps
    }

    fn params() -> AgingParams {
        crate::aging::calibrated_models().pmos
    }

    fn hci() -> HciParams {
        crate::aging::calibrated_models().pmos.hci
    }

    #[test]
    fn base_waveform_durations() {
        let stats = WorkloadStats {
            duty_factor: 0.5,
            toggle_rate: 0.0075,
            t_clk_s: 1.6e-9,
            transition_time_s: 1e-10,
        };
        let w = base_waveform(&stats, 0.9).unwrap();
        assert!((w.period_s - 213.33333333333334e-9).abs() < 1e-18);
        assert!((w.stress_duration_s() - 106.66666666666667e-9).abs() < 1e-18);
        assert!((w.recovery_duration_s() - 106.66666666666667e-9).abs() < 1e-18);
        assert_eq!(w.v_geff_stress, 0.9);
        assert_eq!(w.v_geff_recovery, 0.0);
    }

    #[test]
    fn base_waveform_full_duty_has_no_recovery() {
        let stats = WorkloadStats { duty_factor: 1.0, ..WorkloadStats::default() };
        let w = base_waveform(&stats, 0.9).unwrap();
        assert_eq!(w.recovery_duration_s(), 0.0);
    }

    #[test]
    fn base_waveform_unit_toggle() {
        let stats = WorkloadStats { toggle_rate: 1.0, ..WorkloadStats::default() };
        let w = base_waveform(&stats, 0.9).unwrap();
        assert!((w.period_s - 1.6e-9).abs() < 1e-24);
    }

    #[test]
    fn lift_identity_at_n_1() {
        let w = base_waveform(&WorkloadStats::default(), 0.9).unwrap();
        let l = lift_waveform(&w, 1, &species(), T).unwrap();
        assert_eq!(w, l);
    }

    #[test]
    fn lift_full_duty_keeps_vdd() {
        let stats = WorkloadStats { duty_factor: 1.0, ..WorkloadStats::default() };
        let w = base_waveform(&stats, 0.9).unwrap();
        for n in [2, 7, 32] {
            let l = lift_waveform(&w, n, &species(), T).unwrap();
            assert_eq!(l.v_geff_stress, 0.9);
            assert_eq!(l.cycles_represented, n as u64);
        }
    }

    #[test]
    fn lift_matches_cycle_by_cycle_boundary() {
        let stats = WorkloadStats::default();
        let w = base_waveform(&stats, 0.9).unwrap();
        let traps = species();
        let n = 32;
        let lifted = lift_waveform(&w, n, &traps, T).unwrap();
        assert!(lifted.v_geff_stress <= 0.9 + 1e-6);
        assert!(lifted.v_geff_recovery >= 0.0);

        let mut brute = DeviceAgingState::fresh(traps.len());
        for _ in 0..n {
            let (_, end) = apply_cycle(&brute, &w, &traps, T).unwrap();
            brute = end;
        }
        let (_, one) =
            apply_cycle(&DeviceAgingState::fresh(traps.len()), &lifted, &traps, T).unwrap();
        let rel = (one.bti_total() - brute.bti_total()).abs() / brute.bti_total();
        assert!(rel < 0.01, "boundary mismatch {rel}");
    }

    #[test]
    fn lift_order_insensitive() {
        let stats = WorkloadStats::default();
        let w = base_waveform(&stats, 0.9).unwrap();
        let traps = species();
        let ab = lift_waveform(&lift_waveform(&w, 4, &traps, T).unwrap(), 8, &traps, T).unwrap();
        let ba = lift_waveform(&lift_waveform(&w, 8, &traps, T).unwrap(), 4, &traps, T).unwrap();
        let fresh = DeviceAgingState::fresh(traps.len());
        let (_, end_ab) = apply_cycle(&fresh, &ab, &traps, T).unwrap();
        let (_, end_ba) = apply_cycle(&fresh, &ba, &traps, T).unwrap();
        let rel = (end_ab.bti_total() - end_ba.bti_total()).abs() / end_ab.bti_total();
        assert!(rel < 0.01, "order sensitivity {rel}");
    }

    #[test]
    fn extrapolation_single_period_no_lift() {
        let stats = WorkloadStats::default();
        let p = params();
        let w = base_waveform(&stats, 0.9).unwrap();
        let traj = extrapolate_bti(&stats, 0.9, &p, w.period_s, 10).unwrap();
        let fresh = DeviceAgingState::for_params(&p);
        let (_, end) = apply_cycle(&fresh, &w, &p.bti_traps, p.bti_temp_k()).unwrap();
        assert_eq!(traj.envelope_points().len(), 1);
        assert!((traj.final_total() - end.bti_total()).abs() < 1e-15);
    }

    #[test]
    fn extrapolation_matches_brute_force_10k_periods() {
        let stats = WorkloadStats::default();
        let p = params();
        let w = base_waveform(&stats, 0.9).unwrap();
        let horizon = w.period_s * 1e4;
        let traj = extrapolate_bti(&stats, 0.9, &p, horizon, 10).unwrap();

        let traps = &p.bti_traps;
        let mut brute = DeviceAgingState::fresh(traps.len());
        for _ in 0..10_000 {
            let (_, end) = apply_cycle(&brute, &w, traps, p.bti_temp_k()).unwrap();
            brute = end;
        }
        let rel = (traj.final_total() - brute.bti_total()).abs() / brute.bti_total();
        assert!(rel < 0.01, "extrapolation error {rel}");
    }

    #[test]
    fn envelope_is_monotone() {
        let stats = WorkloadStats::default();
        let p = params();
        let traj = extrapolate_bti(&stats, 0.9, &p, 1.0, 10).unwrap();
        let pts = traj.envelope_points();
        assert!(pts.windows(2).all(|ab| ab[1].1 >= ab[0].1));
        // Stress-end samples are monotone too.
        let peaks: Vec<f64> = traj
            .samples()
            .iter()
            .filter(|s| s.kind == BoundaryKind::StressEnd)
            .map(|s| s.total)
            .collect();
        assert!(peaks.windows(2).all(|ab| ab[1] >= ab[0]));
    }

    #[test]
    fn recovery_modeling_reduces_shift() {
        let stats = WorkloadStats::default();
        let p = params();
        let horizon = 3.1536e7; // one year is plenty to see the effect
        let traj = extrapolate_bti(&stats, 0.9, &p, horizon, 10).unwrap();
        // Compare at the final cycle boundary: exact envelope values on both
        // sides, no interpolation.
        let with_recovery = traj.final_total();
        let fresh = DeviceAgingState::for_params(&p);
        let no_recovery = apply_stress_segment(
            &fresh,
            &p.bti_traps,
            0.9,
            p.bti_temp_k(),
            stats.duty_factor * traj.final_t(),
            StressMode::Stress,
        )
        .unwrap()
        .bti_total();
        assert!(
            with_recovery < no_recovery,
            "recovery must reduce: {with_recovery} vs {no_recovery}"
        );
    }

    #[test]
    fn gamma_constant_vdd_is_one() {
        let tw = TransitionWaveform { points: vec![(1e-10, 0.9)] };
        let g = gamma_factor(&tw, &hci(), 0.9, T).unwrap();
        assert_eq!(g, 1.0);
        let tw2 = TransitionWaveform {
            points: (1..=100).map(|i| (i as f64 * 1e-12, 0.9)).collect(),
        };
        assert_eq!(gamma_factor(&tw2, &hci(), 0.9, T).unwrap(), 1.0);
    }

    #[test]
    fn gamma_ramp_in_unit_interval() {
        let tw = TransitionWaveform::linear_ramp(0.9, 1e-10, 1000);
        let g = gamma_factor(&tw, &hci(), 0.9, T).unwrap();
        assert!(g > 0.0 && g < 1.0, "{g}");
    }

    #[test]
    fn gamma_ramp_refinement_converges() {
        let h = hci();
        let g1 = gamma_factor(&TransitionWaveform::linear_ramp(0.9, 1e-10, 1000), &h, 0.9, T)
            .unwrap();
        let g2 = gamma_factor(&TransitionWaveform::linear_ramp(0.9, 1e-10, 100_000), &h, 0.9, T)
            .unwrap();
        assert!((g1 - g2).abs() / g2 < 1e-3, "{g1} vs {g2}");
    }

    #[test]
    fn gamma_rejects_non_monotone() {
        let tw = TransitionWaveform { points: vec![(2e-11, 0.2), (1e-11, 0.5)] };
        assert!(gamma_factor(&tw, &hci(), 0.9, T).is_err());
    }

    #[test]
    fn hci_time_formula() {
        let stats = WorkloadStats {
            duty_factor: 0.5,
            toggle_rate: 0.0075,
            t_clk_s: 1.6e-9,
            transition_time_s: 1e-10,
        };
        let t = hci_stress_time(0.5, &stats, 3.156e8);
        assert!((t - 7.3969e4).abs() / 7.3969e4 < 1e-4, "{t}");
    }

    #[test]
    fn hci_accumulation_zero_time_identity() {
        let st = DeviceAgingState::fresh(0);
        let out = accumulate_hci(&st, 0.5, &WorkloadStats::default(), 0.0, 0.9, &hci(), T).unwrap();
        assert_eq!(st, out);
    }

    #[test]
    fn hci_accumulation_is_additive() {
        let stats = WorkloadStats::default();
        let h = hci();
        let st = DeviceAgingState::fresh(0);
        let one = accumulate_hci(&st, 0.4, &stats, 2e8, 0.9, &h, T).unwrap();
        let a = accumulate_hci(&st, 0.4, &stats, 0.7e8, 0.9, &h, T).unwrap();
        let b = accumulate_hci(&a, 0.4, &stats, 1.3e8, 0.9, &h, T).unwrap();
        assert!((one.hci_dvth - b.hci_dvth).abs() < 1e-9);
    }

    #[test]
    fn hci_history_below_constant_high_voltage() {
        let stats = WorkloadStats::default();
        let h = hci();
        let st = DeviceAgingState::fresh(0);
        let half = 1.5768e8;
        let mixed = accumulate_hci(&st, 0.4, &stats, half, 0.90, &h, T).unwrap();
        let mixed = accumulate_hci(&mixed, 0.4, &stats, half, 1.02, &h, T).unwrap();
        let constant = accumulate_hci(&st, 0.4, &stats, 2.0 * half, 1.02, &h, T).unwrap();
        assert!(mixed.hci_dvth < constant.hci_dvth);
    }

    #[test]
    fn average_workload_means_rows() {
        let rows = vec![(0.4, 0.006), (0.6, 0.009)];
        let stats = average_workload(&rows, 1.6e-9, 1e-10).unwrap();
        assert!((stats.duty_factor - 0.5).abs() < 1e-15);
        assert!((stats.toggle_rate - 0.0075).abs() < 1e-15);
    }
}
