//! Closed-loop lifetime simulation: aging advances under the current supply
//! voltage, the delay surrogate senses the critical path, and the supply
//! steps up whenever the sensed delay crosses the active threshold.
//!
//! Within a constant-voltage epoch the PMOS BTI curve comes from the
//! equivalent-waveform extrapolation (its cycle-end envelope, log-time
//! interpolated) and both HCI components advance analytically through their
//! equivalent times, so delay is monotone in time and the violation instant
//! can be bisected.

use serde::{Deserialize, Serialize};

use crate::aging::{
    apply_stress_segment, equivalent_time, hci_law, AgingModels, AgingParams, DeviceAgingState,
    HciParams, StressMode,
};
use crate::delay::DelaySurrogate;
use crate::error::{Error, Result};
use crate::waveform::{
    accumulate_hci, extrapolate_bti_from, gamma_factor, hci_stress_time, BtiTrajectory,
    TransitionWaveform, WorkloadStats,
};

/// Violation localization tolerance: one simulated hour.
pub const VIOLATION_TOL_S: f64 = 3600.0;

/// AVS loop configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvsConfig {
    /// Initial supply voltage (V).
    pub v_init: f64,
    /// Voltage increment per violation (V).
    pub v_step: f64,
    /// Safety cap; the run stops (flagged) rather than step above it.
    pub v_max_cap: f64,
    /// Clock period (s).
    pub t_clk_s: f64,
    /// Delay threshold triggering a step (s); defaults to the clock period.
    /// The resilience policy overrides this per operator.
    pub delay_threshold_s: Option<f64>,
    /// Simulated lifetime (s).
    pub horizon_s: f64,
    /// Reporting checkpoints per decade of time.
    pub checkpoints_per_decade: u32,
    /// Equivalent-waveform lift factor.
    pub branch_factor: u32,
    /// Intervals used to sample the transition ramp for the HCI gamma factor.
    pub gamma_intervals: u32,
}

impl Default for AvsConfig {
    fn default() -> Self {
        AvsConfig {
            v_init: 0.90,
            v_step: 0.010,
            v_max_cap: 1.10,
            t_clk_s: 1.6e-9,
            delay_threshold_s: None,
            horizon_s: 3.1536e8,
            checkpoints_per_decade: 50,
            branch_factor: 10,
            gamma_intervals: 1000,
        }
    }
}

impl AvsConfig {
    pub fn threshold_s(&self) -> f64 {
        self.delay_threshold_s.unwrap_or(self.t_clk_s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_step > 0.0) {
            return Err(Error::Config(format!("v_step must be > 0, got {}", self.v_step)));
        }
        if !(self.v_init > 0.0 && self.v_init <= self.v_max_cap) {
            return Err(Error::Config(format!(
                "v_init must be in (0, v_max_cap = {}], got {}",
                self.v_max_cap, self.v_init
            )));
        }
        if !(self.t_clk_s > 0.0 && self.horizon_s > 0.0) {
            return Err(Error::Config("t_clk and horizon must be > 0".into()));
        }
        if self.threshold_s() < 0.0 {
            return Err(Error::Config("delay threshold must be >= 0".into()));
        }
        if self.checkpoints_per_decade == 0 || self.branch_factor < 2 || self.gamma_intervals == 0
        {
            return Err(Error::Config(
                "checkpoint density, branch factor and gamma intervals must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One reporting checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t_s: f64,
    pub v_dd: f64,
    pub delay_ns: f64,
    pub dvth_p_v: f64,
    pub dvth_n_v: f64,
}

/// One supply-voltage step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepEvent {
    pub t_s: f64,
    pub v_from: f64,
    pub v_to: f64,
}

/// End-of-run summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvsSummary {
    pub v_final: f64,
    pub steps: u32,
    pub dvth_p_v: f64,
    pub dvth_n_v: f64,
    pub pmos_bti_v: f64,
    pub pmos_hci_v: f64,
    pub v_eff: f64,
    /// The run stopped because the next step would exceed the voltage cap.
    pub capped: bool,
    /// Some delay evaluation left the surrogate's fit domain.
    pub domain_warning: bool,
}

/// Full simulation record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvsTrajectory {
    pub checkpoints: Vec<Checkpoint>,
    pub step_events: Vec<StepEvent>,
    pub violation_times_s: Vec<f64>,
    pub summary: AvsSummary,
    pub v_init: f64,
    pub end_t_s: f64,
}

impl AvsTrajectory {
    /// Piecewise-constant voltage schedule as (voltage, duration) epochs.
    pub fn voltage_epochs(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut v = self.v_init;
        let mut t_prev = 0.0;
        for ev in &self.step_events {
            out.push((v, ev.t_s - t_prev));
            t_prev = ev.t_s;
            v = ev.v_to;
        }
        out.push((v, self.end_t_s - t_prev));
        out
    }
}

/// Locate the last compliant instant before a threshold crossing by
/// bisection, to within one simulated hour. Requires
/// `delay(t_lo) <= threshold < delay(t_hi)`.
pub fn locate_violation<F: Fn(f64) -> f64>(
    delay_s: F,
    threshold_s: f64,
    t_lo: f64,
    t_hi: f64,
) -> Result<f64> {
    let d_lo = delay_s(t_lo);
    let d_hi = delay_s(t_hi);
    if !(d_lo <= threshold_s && threshold_s < d_hi) {
        return Err(Error::Internal(format!(
            "invalid violation bracket: delay({t_lo:.3e}) = {d_lo:.6e}, \
             delay({t_hi:.3e}) = {d_hi:.6e}, threshold = {threshold_s:.6e}; \
             delay is expected to be monotone within an epoch"
        )));
    }
    let (mut lo, mut hi) = (t_lo, t_hi);
    while hi - lo > VIOLATION_TOL_S {
        let mid = 0.5 * (lo + hi);
        if delay_s(mid) <= threshold_s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Analytic HCI continuation within one constant-voltage epoch.
#[derive(Debug, Clone)]
struct HciSegment {
    params: HciParams,
    temp_k: f64,
    v: f64,
    dvth0: f64,
    t_eq0: f64,
    /// Accumulated HCI stress seconds per second of wall time.
    rate: f64,
}

impl HciSegment {
    fn new(
        state: &DeviceAgingState,
        params: &AgingParams,
        stats: &WorkloadStats,
        gamma: f64,
        v: f64,
    ) -> Result<Self> {
        let temp_k = params.hci_temp_k();
        let rate = hci_stress_time(gamma, stats, 1.0);
        let hint = rate * 3.1536e7 + 1.0;
        let t_eq0 = equivalent_time(
            |t| hci_law(&params.hci, v, temp_k, t).unwrap_or(f64::NAN),
            state.hci_dvth,
            hint,
        )?;
        Ok(HciSegment { params: params.hci.clone(), temp_k, v, dvth0: state.hci_dvth, t_eq0, rate })
    }

    fn dvth_at(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            return self.dvth0;
        }
        hci_law(&self.params, self.v, self.temp_k, self.t_eq0 + self.rate * tau)
            .unwrap_or(self.dvth0)
            .max(self.dvth0)
    }
}

/// Aging curves of one constant-voltage epoch, over epoch-relative time.
struct EpochCurves {
    v: f64,
    bti_p: BtiTrajectory,
    hci_p: HciSegment,
    hci_n: HciSegment,
}

impl EpochCurves {
    fn build(
        pmos_state: &DeviceAgingState,
        nmos_state: &DeviceAgingState,
        models: &AgingModels,
        stats: &WorkloadStats,
        v: f64,
        duration_s: f64,
        cfg: &AvsConfig,
    ) -> Result<Self> {
        let ramp_p = TransitionWaveform::linear_ramp(
            v,
            stats.transition_time_s,
            cfg.gamma_intervals as usize,
        );
        let gamma_p = gamma_factor(&ramp_p, &models.pmos.hci, v, models.pmos.hci_temp_k())?;
        let gamma_n = gamma_factor(&ramp_p, &models.nmos.hci, v, models.nmos.hci_temp_k())?;
        let bti_p = extrapolate_bti_from(
            pmos_state,
            stats,
            v,
            &models.pmos,
            duration_s,
            cfg.branch_factor,
        )?;
        let hci_p = HciSegment::new(pmos_state, &models.pmos, stats, gamma_p, v)?;
        let hci_n = HciSegment::new(nmos_state, &models.nmos, stats, gamma_n, v)?;
        Ok(EpochCurves { v, bti_p, hci_p, hci_n })
    }

    fn dvth_p(&self, tau: f64) -> f64 {
        self.bti_p.total_at(tau) + self.hci_p.dvth_at(tau)
    }

    fn dvth_n(&self, tau: f64) -> f64 {
        self.hci_n.dvth_at(tau)
    }

    fn delay_flagged(&self, model: &DelaySurrogate, tau: f64) -> (f64, bool) {
        let (ns, outside) = model.eval_flagged(self.dvth_p(tau), self.dvth_n(tau), self.v);
        (ns * 1e-9, outside)
    }

    /// Hand the epoch state at `tau` back as device states.
    fn states_at(
        &self,
        tau: f64,
        pmos_state: &DeviceAgingState,
        nmos_state: &DeviceAgingState,
    ) -> (DeviceAgingState, DeviceAgingState) {
        let mut p = pmos_state.clone();
        p.reset_bti_to(&self.bti_p.species_at(tau));
        p.hci_dvth = self.hci_p.dvth_at(tau);
        p.hci_t_eq = self.hci_p.t_eq0 + self.hci_p.rate * tau;
        p.hci_last_v = self.v;
        let mut n = nmos_state.clone();
        n.hci_dvth = self.hci_n.dvth_at(tau);
        n.hci_t_eq = self.hci_n.t_eq0 + self.hci_n.rate * tau;
        n.hci_last_v = self.v;
        (p, n)
    }
}

/// Log-spaced reporting times from 1 s to the horizon.
fn checkpoint_grid(horizon_s: f64, per_decade: u32) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 0u32;
    loop {
        let t = 10f64.powf(k as f64 / per_decade as f64);
        if t >= horizon_s * (1.0 - 1e-12) {
            break;
        }
        out.push(t);
        k += 1;
    }
    out.push(horizon_s);
    out
}

/// Run the AVS loop over the configured lifetime.
pub fn simulate(
    cfg: &AvsConfig,
    models: &AgingModels,
    stats: &WorkloadStats,
    model: &DelaySurrogate,
) -> Result<AvsTrajectory> {
    cfg.validate()?;
    models.validate()?;
    stats.validate()?;
    let threshold = cfg.threshold_s();
    let nominal_s = model.eval(0.0, 0.0, cfg.v_init) * 1e-9;
    if nominal_s > threshold {
        return Err(Error::Config(format!(
            "nominal delay {:.4} ns already exceeds the threshold {:.4} ns at v_init",
            nominal_s * 1e9,
            threshold * 1e9
        )));
    }

    let grid = checkpoint_grid(cfg.horizon_s, cfg.checkpoints_per_decade);
    let mut grid_idx = 0usize;

    let mut pmos = DeviceAgingState::for_params(&models.pmos);
    let mut nmos = DeviceAgingState::for_params(&models.nmos);
    let mut v = cfg.v_init;
    let mut t0 = 0.0_f64;
    let mut steps: Vec<StepEvent> = Vec::new();
    let mut violations: Vec<f64> = Vec::new();
    let mut checkpoints: Vec<Checkpoint> = Vec::new();
    let mut domain_warning = false;
    let mut capped = false;

    checkpoints.push(Checkpoint {
        t_s: 0.0,
        v_dd: v,
        delay_ns: nominal_s * 1e9,
        dvth_p_v: 0.0,
        dvth_n_v: 0.0,
    });

    loop {
        let remaining = cfg.horizon_s - t0;
        if remaining <= 0.0 {
            break;
        }
        let curves = EpochCurves::build(&pmos, &nmos, models, stats, v, remaining, cfg)?;

        // Locate the epoch end: either the horizon or a threshold crossing.
        let (d_end, end_outside) = curves.delay_flagged(model, remaining);
        let epoch_len = if d_end <= threshold {
            domain_warning |= end_outside;
            remaining
        } else {
            // Bracket on the envelope points, then bisect the interpolant.
            let mut lo = 0.0_f64;
            let mut hi = remaining;
            for (t_env, _) in curves.bti_p.envelope_points() {
                if t_env >= remaining {
                    break;
                }
                let (d, out) = curves.delay_flagged(model, t_env);
                domain_warning |= out;
                if d <= threshold {
                    lo = t_env;
                } else {
                    hi = t_env;
                    break;
                }
            }
            locate_violation(|tau| curves.delay_flagged(model, tau).0, threshold, lo, hi)?
        };

        // Reporting checkpoints inside (t0, t0 + epoch_len].
        while grid_idx < grid.len() && grid[grid_idx] <= t0 + epoch_len {
            let tg = grid[grid_idx];
            let tau = tg - t0;
            let (d, out) = curves.delay_flagged(model, tau);
            domain_warning |= out;
            checkpoints.push(Checkpoint {
                t_s: tg,
                v_dd: v,
                delay_ns: d * 1e9,
                dvth_p_v: curves.dvth_p(tau),
                dvth_n_v: curves.dvth_n(tau),
            });
            grid_idx += 1;
        }

        let (p_next, n_next) = curves.states_at(epoch_len, &pmos, &nmos);
        pmos = p_next;
        nmos = n_next;
        t0 += epoch_len;

        if epoch_len >= remaining {
            break;
        }

        // Threshold crossing: record it and step the supply.
        violations.push(t0);
        if checkpoints.last().map(|c| c.t_s < t0).unwrap_or(true) {
            let (d, out) = curves.delay_flagged(model, epoch_len);
            domain_warning |= out;
            checkpoints.push(Checkpoint {
                t_s: t0,
                v_dd: v,
                delay_ns: d * 1e9,
                dvth_p_v: curves.dvth_p(epoch_len),
                dvth_n_v: curves.dvth_n(epoch_len),
            });
        }
        if v + cfg.v_step > cfg.v_max_cap + 1e-12 {
            capped = true;
            break;
        }
        let v_next = v + cfg.v_step;
        steps.push(StepEvent { t_s: t0, v_from: v, v_to: v_next });
        v = v_next;
    }

    let end_t = t0;
    let v_eff = crate::power::rms_of_epochs(
        &{
            let mut eps = Vec::new();
            let mut vv = cfg.v_init;
            let mut prev = 0.0;
            for ev in &steps {
                eps.push((vv, ev.t_s - prev));
                prev = ev.t_s;
                vv = ev.v_to;
            }
            eps.push((vv, end_t - prev));
            eps
        },
    )?;

    let summary = AvsSummary {
        v_final: v,
        steps: steps.len() as u32,
        dvth_p_v: pmos.total(),
        dvth_n_v: nmos.total(),
        pmos_bti_v: pmos.bti_total(),
        pmos_hci_v: pmos.hci_dvth,
        v_eff,
        capped,
        domain_warning,
    };
    Ok(AvsTrajectory {
        checkpoints,
        step_events: steps,
        violation_times_s: violations,
        summary,
        v_init: cfg.v_init,
        end_t_s: end_t,
    })
}

/// One scenario row of the evaluation comparison, in volts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub label: String,
    pub pmos_hci_v: f64,
    pub pmos_bti_v: f64,
    pub pmos_total_v: f64,
    pub nmos_v: f64,
}

/// Four-way comparison of aging-evaluation approaches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    /// Rows: constant nominal voltage without recovery, with recovery,
    /// constant final voltage without recovery, and the full AVS history.
    pub rows: Vec<ScenarioRow>,
    pub v_nom: f64,
    pub v_max: f64,
    /// Relative reduction of the recovery-aware nominal row vs. the
    /// recovery-free one (PMOS total, NMOS), percent.
    pub recovery_reduction_pmos_pct: f64,
    pub recovery_reduction_nmos_pct: f64,
    /// Relative reduction of the AVS-history row vs. constant V_max, percent.
    pub avs_reduction_pmos_pct: f64,
    pub avs_reduction_nmos_pct: f64,
    pub avs: AvsTrajectory,
}

fn stressed_bti(params: &AgingParams, v: f64, duration_s: f64) -> Result<f64> {
    let fresh = DeviceAgingState::for_params(params);
    let out = apply_stress_segment(
        &fresh,
        &params.bti_traps,
        v,
        params.bti_temp_k(),
        duration_s,
        StressMode::Stress,
    )?;
    Ok(out.bti_total())
}

fn hci_over(
    params: &AgingParams,
    stats: &WorkloadStats,
    v: f64,
    duration_s: f64,
    gamma_intervals: usize,
) -> Result<f64> {
    let ramp = TransitionWaveform::linear_ramp(v, stats.transition_time_s, gamma_intervals);
    let gamma = gamma_factor(&ramp, &params.hci, v, params.hci_temp_k())?;
    let fresh = DeviceAgingState::fresh(0);
    let out =
        accumulate_hci(&fresh, gamma, stats, duration_s, v, &params.hci, params.hci_temp_k())?;
    Ok(out.hci_dvth)
}

/// Run the four-scenario comparison: (a) constant nominal voltage with
/// recovery disabled, (b) constant nominal voltage with recovery, (c)
/// constant final voltage (from a prior AVS run) with recovery disabled,
/// (d) the full AVS history.
pub fn compare_scenarios(
    cfg: &AvsConfig,
    models: &AgingModels,
    stats: &WorkloadStats,
    model: &DelaySurrogate,
) -> Result<ScenarioReport> {
    let avs = simulate(cfg, models, stats, model)?;
    let v_nom = cfg.v_init;
    let v_max = avs.summary.v_final;
    let horizon = cfg.horizon_s;
    let gi = cfg.gamma_intervals as usize;

    let stress_time = stats.duty_factor * horizon;
    let hci_p_nom = hci_over(&models.pmos, stats, v_nom, horizon, gi)?;
    let hci_n_nom = hci_over(&models.nmos, stats, v_nom, horizon, gi)?;
    let hci_p_max = hci_over(&models.pmos, stats, v_max, horizon, gi)?;
    let hci_n_max = hci_over(&models.nmos, stats, v_max, horizon, gi)?;

    // (a) nominal voltage, detrapping skipped: stress acts for the duty
    // fraction of the lifetime, recovery phases contribute nothing.
    let bti_a = stressed_bti(&models.pmos, v_nom, stress_time)?;
    let row_a = ScenarioRow {
        label: "vnom_norec".into(),
        pmos_hci_v: hci_p_nom,
        pmos_bti_v: bti_a,
        pmos_total_v: bti_a + hci_p_nom,
        nmos_v: hci_n_nom,
    };

    // (b) nominal voltage with stress/recovery alternation.
    let traj_b = crate::waveform::extrapolate_bti(
        stats,
        v_nom,
        &models.pmos,
        horizon,
        cfg.branch_factor,
    )?;
    let bti_b = traj_b.total_at(horizon);
    let row_b = ScenarioRow {
        label: "vnom_rec".into(),
        pmos_hci_v: hci_p_nom,
        pmos_bti_v: bti_b,
        pmos_total_v: bti_b + hci_p_nom,
        nmos_v: hci_n_nom,
    };

    // (c) constant V_max for the whole horizon, recovery disabled.
    let bti_c = stressed_bti(&models.pmos, v_max, stress_time)?;
    let row_c = ScenarioRow {
        label: "vmax_norec".into(),
        pmos_hci_v: hci_p_max,
        pmos_bti_v: bti_c,
        pmos_total_v: bti_c + hci_p_max,
        nmos_v: hci_n_max,
    };

    // (d) full AVS with history.
    let row_d = ScenarioRow {
        label: "avs_history".into(),
        pmos_hci_v: avs.summary.pmos_hci_v,
        pmos_bti_v: avs.summary.pmos_bti_v,
        pmos_total_v: avs.summary.dvth_p_v,
        nmos_v: avs.summary.dvth_n_v,
    };

    let pct = |new: f64, old: f64| 100.0 * (1.0 - new / old);
    Ok(ScenarioReport {
        recovery_reduction_pmos_pct: pct(row_b.pmos_total_v, row_a.pmos_total_v),
        recovery_reduction_nmos_pct: pct(row_b.nmos_v, row_a.nmos_v),
        avs_reduction_pmos_pct: pct(row_d.pmos_total_v, row_c.pmos_total_v),
        avs_reduction_nmos_pct: pct(row_d.nmos_v, row_c.nmos_v),
        rows: vec![row_a, row_b, row_c, row_d],
        v_nom,
        v_max,
        avs,
    })
}
