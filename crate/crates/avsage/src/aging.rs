//! Compact aging models: BTI trapping/detrapping and HCI.
//!
//! The default law family uses exponential voltage acceleration and an
//! Arrhenius temperature factor on top of power-law (trapping, HCI) or
//! stretched-exponential (detrapping) time kinetics:
//!
//! ```text
//! trapping:   dVth(t) = A_c * exp(B_c*Vg) * exp(-E_ac/kT) * t^n_c
//! detrapping: dVth(t) = dVth0 * (r_perm + (1-r_perm) * exp(-(rate*t)^beta_e))
//!             rate    = A_e * exp(-B_e*Vrec) * exp(-E_ae/kT)
//! HCI:        dVth(t) = A_h * exp(B_h*V) * exp(-E_ah/kT) * t^n_h
//! ```
//!
//! All laws are monotone in time, which is what the equivalent-time
//! continuation below relies on. The shipped parameter values are calibration
//! fixtures tuned against a reference scenario table; they are not physical
//! extractions from any process kit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boltzmann constant in eV/K.
pub const BOLTZMANN_EV_PER_K: f64 = 8.617_333_262e-5;

/// Seconds per simulated year (365 days).
pub const SECONDS_PER_YEAR: f64 = 3.1536e7;

/// One BTI trap species. Two are used by default: a fast-emitting and a
/// slow-emitting population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapSpecies {
    /// Capture prefactor (V).
    #[serde(rename = "A_c")]
    pub a_c: f64,
    /// Capture voltage acceleration (1/V).
    #[serde(rename = "B_c")]
    pub b_c: f64,
    /// Capture activation energy (eV).
    #[serde(rename = "E_ac")]
    pub e_ac: f64,
    /// Capture time exponent, in (0, 1).
    #[serde(rename = "n_c")]
    pub n_c: f64,
    /// Emission rate prefactor (1/s).
    #[serde(rename = "A_e")]
    pub a_e: f64,
    /// Emission voltage sensitivity (1/V); recovery slows as the gate
    /// voltage rises.
    #[serde(rename = "B_e")]
    pub b_e: f64,
    /// Emission activation energy (eV).
    #[serde(rename = "E_ae")]
    pub e_ae: f64,
    /// Stretch exponent of the emission transient, in (0, 1].
    #[serde(rename = "beta_e")]
    pub beta_e: f64,
    /// Permanent (non-recoverable) fraction, in [0, 1].
    #[serde(rename = "r_perm")]
    pub r_perm: f64,
}

impl TrapSpecies {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.a_c, self.b_c, self.e_ac, self.n_c, self.a_e, self.b_e, self.e_ae, self.beta_e,
            self.r_perm,
        ];
        if fields.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite trap species parameter".into()));
        }
        if self.a_c < 0.0 || self.a_e < 0.0 {
            return Err(Error::Domain("trap prefactors must be >= 0".into()));
        }
        if !(self.n_c > 0.0 && self.n_c < 1.0) {
            return Err(Error::Domain(format!("n_c must be in (0,1), got {}", self.n_c)));
        }
        if !(self.beta_e > 0.0 && self.beta_e <= 1.0) {
            return Err(Error::Domain(format!("beta_e must be in (0,1], got {}", self.beta_e)));
        }
        if !(0.0..=1.0).contains(&self.r_perm) {
            return Err(Error::Domain(format!("r_perm must be in [0,1], got {}", self.r_perm)));
        }
        Ok(())
    }
}

/// HCI compact-model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HciParams {
    /// Prefactor (V).
    #[serde(rename = "A_h")]
    pub a_h: f64,
    /// Voltage acceleration (1/V).
    #[serde(rename = "B_h")]
    pub b_h: f64,
    /// Activation energy (eV).
    #[serde(rename = "E_ah")]
    pub e_ah: f64,
    /// Time exponent, in (0, 1).
    #[serde(rename = "n_h")]
    pub n_h: f64,
}

impl HciParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [self.a_h, self.b_h, self.e_ah, self.n_h];
        if fields.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite HCI parameter".into()));
        }
        if self.a_h < 0.0 {
            return Err(Error::Domain("A_h must be >= 0".into()));
        }
        if !(self.n_h > 0.0 && self.n_h < 1.0) {
            return Err(Error::Domain(format!("n_h must be in (0,1), got {}", self.n_h)));
        }
        Ok(())
    }
}

/// Technology parameters for one device (PMOS carries BTI + HCI, NMOS carries
/// HCI only; its trap list is empty).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgingParams {
    pub bti_traps: Vec<TrapSpecies>,
    pub hci: HciParams,
    /// Ambient temperature (K).
    #[serde(rename = "temperature_K")]
    pub temperature_k: f64,
    /// Optional self-heating offset applied to BTI evaluations (K).
    #[serde(default)]
    pub temp_offset_bti_k: f64,
    /// Optional self-heating offset applied to HCI evaluations (K).
    #[serde(default)]
    pub temp_offset_hci_k: f64,
}

impl AgingParams {
    pub fn validate(&self) -> Result<()> {
        for sp in &self.bti_traps {
            sp.validate()?;
        }
        self.hci.validate()?;
        if !(self.temperature_k > 0.0) {
            return Err(Error::Domain(format!(
                "temperature must be > 0 K, got {}",
                self.temperature_k
            )));
        }
        Ok(())
    }

    /// Effective temperature seen by the BTI laws.
    pub fn bti_temp_k(&self) -> f64 {
        self.temperature_k + self.temp_offset_bti_k
    }

    /// Effective temperature seen by the HCI law.
    pub fn hci_temp_k(&self) -> f64 {
        self.temperature_k + self.temp_offset_hci_k
    }
}

/// PMOS and NMOS parameter sets for one technology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgingModels {
    pub pmos: AgingParams,
    pub nmos: AgingParams,
}

impl AgingModels {
    pub fn validate(&self) -> Result<()> {
        self.pmos.validate()?;
        self.nmos.validate()
    }
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::Domain(format!("{name} is not finite: {v}")));
    }
    Ok(())
}

/// BTI trapping law: threshold-voltage shift after `t` seconds of constant
/// stress at gate voltage `v_g`.
pub fn bti_trapping(sp: &TrapSpecies, v_g: f64, temp_k: f64, t: f64) -> Result<f64> {
    check_finite("V_g", v_g)?;
    check_finite("T", temp_k)?;
    check_finite("t", t)?;
    if t < 0.0 {
        return Err(Error::Domain(format!("stress time must be >= 0, got {t}")));
    }
    if v_g < 0.0 {
        return Err(Error::Domain(format!("gate voltage must be >= 0, got {v_g}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let k = sp.a_c * (sp.b_c * v_g).exp() * (-sp.e_ac / (BOLTZMANN_EV_PER_K * temp_k)).exp();
    Ok(k * t.powf(sp.n_c))
}

/// Emission (recovery) rate at recovery voltage `v_rec`.
fn emission_rate(sp: &TrapSpecies, v_rec: f64, temp_k: f64) -> f64 {
    sp.a_e * (-sp.b_e * v_rec).exp() * (-sp.e_ae / (BOLTZMANN_EV_PER_K * temp_k)).exp()
}

/// BTI detrapping law: shift remaining after `t` seconds of recovery at
/// `v_g_rec`, starting from `dvth_0`. Decays toward the permanent floor
/// `r_perm * dvth_0`.
pub fn bti_detrapping(sp: &TrapSpecies, dvth_0: f64, v_g_rec: f64, temp_k: f64, t: f64) -> Result<f64> {
    check_finite("dvth_0", dvth_0)?;
    check_finite("V_g_rec", v_g_rec)?;
    check_finite("T", temp_k)?;
    check_finite("t", t)?;
    if dvth_0 < 0.0 {
        return Err(Error::Domain(format!("dvth_0 must be >= 0, got {dvth_0}")));
    }
    if t < 0.0 {
        return Err(Error::Domain(format!("recovery time must be >= 0, got {t}")));
    }
    if dvth_0 == 0.0 {
        return Ok(0.0);
    }
    let rate = emission_rate(sp, v_g_rec, temp_k);
    let transient = (-(rate * t).powf(sp.beta_e)).exp();
    Ok(dvth_0 * (sp.r_perm + (1.0 - sp.r_perm) * transient))
}

/// HCI law: non-recoverable shift after `t` seconds of accumulated transition
/// stress at supply voltage `v`.
pub fn hci_law(h: &HciParams, v: f64, temp_k: f64, t: f64) -> Result<f64> {
    check_finite("V", v)?;
    check_finite("T", temp_k)?;
    check_finite("t", t)?;
    if t < 0.0 {
        return Err(Error::Domain(format!("HCI time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let k = h.a_h * (h.b_h * v).exp() * (-h.e_ah / (BOLTZMANN_EV_PER_K * temp_k)).exp();
    Ok(k * t.powf(h.n_h))
}

/// Relative tolerance of the equivalent-time bisection.
const EQ_TIME_REL_TOL: f64 = 1e-10;
const EQ_TIME_MAX_ITERS: usize = 200;

/// Invert a monotone-increasing law: find `t_eq` with `law(t_eq) = target`.
///
/// `law` must be non-decreasing with `law(0) = 0`. The bracket starts at
/// `[0, 10 * horizon_hint]` and is widened geometrically before giving up, so
/// the hint only needs to be the right order of magnitude. A target that the
/// law cannot reach raises a continuation error.
pub fn equivalent_time<F: Fn(f64) -> f64>(law: F, target: f64, horizon_hint: f64) -> Result<f64> {
    if !target.is_finite() {
        return Err(Error::Continuation(format!("target dVth is not finite: {target}")));
    }
    if target < 0.0 {
        return Err(Error::Continuation(format!("target dVth must be >= 0, got {target}")));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    let mut hi = (horizon_hint.max(1e-12)) * 10.0;
    let mut expansions = 0;
    while law(hi) < target {
        hi *= 2.0;
        expansions += 1;
        if expansions > 200 || !hi.is_finite() {
            return Err(Error::Continuation(format!(
                "dVth = {target:.6e} V unreachable under this law (searched up to t = {hi:.3e} s)"
            )));
        }
    }
    let mut lo = 0.0_f64;
    for _ in 0..EQ_TIME_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if law(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= EQ_TIME_REL_TOL * hi.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Invert a monotone-decreasing transient: find `t` with `law(t) = target`,
/// bracketing the same way as [`equivalent_time`].
fn invert_decreasing<F: Fn(f64) -> f64>(law: F, target: f64, horizon_hint: f64) -> Result<f64> {
    let start = law(0.0);
    if target >= start {
        return Ok(0.0);
    }
    let mut hi = (horizon_hint.max(1e-12)) * 10.0;
    let mut expansions = 0;
    while law(hi) > target {
        hi *= 2.0;
        expansions += 1;
        if expansions > 200 || !hi.is_finite() {
            // The transient saturates above the target; the caller treats the
            // state as fully relaxed.
            return Err(Error::Continuation(format!(
                "recovery target {target:.6e} V below reachable floor"
            )));
        }
    }
    let mut lo = 0.0_f64;
    for _ in 0..EQ_TIME_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if law(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= EQ_TIME_REL_TOL * hi.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Which half of the gate waveform a segment belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StressMode {
    Stress,
    Recovery,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum Phase {
    Stress,
    Recovery,
}

/// Continuation state of one trap species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesState {
    /// Current threshold-voltage shift contributed by this species (V).
    pub dvth: f64,
    phase: Phase,
    /// Shift at the most recent stress-to-recovery transition; the
    /// detrapping transient is anchored here.
    anchor: f64,
    /// Equivalent time inside the current phase law (s).
    t_eq: f64,
    /// Gate voltage the current phase law was last evaluated at (V).
    last_v: f64,
}

impl SpeciesState {
    fn fresh() -> Self {
        SpeciesState { dvth: 0.0, phase: Phase::Stress, anchor: 0.0, t_eq: 0.0, last_v: 0.0 }
    }
}

/// Accumulated aging of one device, decomposed by mechanism. BTI entries
/// parallel `AgingParams::bti_traps`; an NMOS state has none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceAgingState {
    pub bti: Vec<SpeciesState>,
    /// HCI shift (V); non-decreasing across any update sequence.
    pub hci_dvth: f64,
    /// Equivalent HCI stress time at `hci_last_v` (s).
    pub hci_t_eq: f64,
    pub hci_last_v: f64,
}

impl DeviceAgingState {
    pub fn fresh(n_species: usize) -> Self {
        DeviceAgingState {
            bti: vec![SpeciesState::fresh(); n_species],
            hci_dvth: 0.0,
            hci_t_eq: 0.0,
            hci_last_v: 0.0,
        }
    }

    pub fn for_params(params: &AgingParams) -> Self {
        Self::fresh(params.bti_traps.len())
    }

    /// Sum of the BTI species shifts (V).
    pub fn bti_total(&self) -> f64 {
        self.bti.iter().map(|s| s.dvth).sum()
    }

    /// Total shift, BTI plus HCI (V).
    pub fn total(&self) -> f64 {
        self.bti_total() + self.hci_dvth
    }

    /// Per-species shifts (V).
    pub fn species_dvth(&self) -> Vec<f64> {
        self.bti.iter().map(|s| s.dvth).collect()
    }

    /// Overwrite the BTI species shifts, resetting phase bookkeeping. Used
    /// when a simulation hands a state across a supply-voltage step; the next
    /// segment re-derives its equivalent time at the new voltage.
    pub fn reset_bti_to(&mut self, dvth: &[f64]) {
        assert_eq!(dvth.len(), self.bti.len());
        for (st, &d) in self.bti.iter_mut().zip(dvth) {
            *st = SpeciesState { dvth: d, ..SpeciesState::fresh() };
        }
    }
}

/// Advance the BTI state of a device by one constant-voltage segment.
///
/// Stress segments continue the trapping law through its equivalent time;
/// recovery segments continue the detrapping transient anchored at the last
/// stress-to-recovery transition. HCI is untouched (it advances only through
/// [`crate::waveform::accumulate_hci`]). `dt = 0` is the identity.
pub fn apply_stress_segment(
    state: &DeviceAgingState,
    traps: &[TrapSpecies],
    v: f64,
    temp_k: f64,
    dt: f64,
    mode: StressMode,
) -> Result<DeviceAgingState> {
    check_finite("V", v)?;
    check_finite("dt", dt)?;
    if dt < 0.0 {
        return Err(Error::Domain(format!("segment duration must be >= 0, got {dt}")));
    }
    if state.bti.len() != traps.len() {
        return Err(Error::Internal(format!(
            "state carries {} BTI species but parameters define {}",
            state.bti.len(),
            traps.len()
        )));
    }
    let mut out = state.clone();
    if dt == 0.0 {
        return Ok(out);
    }
    for (st, sp) in out.bti.iter_mut().zip(traps) {
        match mode {
            StressMode::Stress => {
                if st.phase != Phase::Stress || st.last_v != v {
                    let hint = st.t_eq.max(dt);
                    st.t_eq = equivalent_time(
                        |t| bti_trapping(sp, v, temp_k, t).unwrap_or(f64::NAN),
                        st.dvth,
                        hint,
                    )?;
                    st.phase = Phase::Stress;
                    st.last_v = v;
                }
                st.t_eq += dt;
                st.dvth = bti_trapping(sp, v, temp_k, st.t_eq)?;
            }
            StressMode::Recovery => {
                if st.phase != Phase::Recovery {
                    st.anchor = st.dvth;
                    st.t_eq = 0.0;
                    st.phase = Phase::Recovery;
                    st.last_v = v;
                } else if st.last_v != v {
                    let anchor = st.anchor;
                    let hint = st.t_eq.max(dt);
                    match invert_decreasing(
                        |t| bti_detrapping(sp, anchor, v, temp_k, t).unwrap_or(f64::NAN),
                        st.dvth,
                        hint,
                    ) {
                        Ok(t) => st.t_eq = t,
                        // Already at the permanent floor: nothing left to emit.
                        Err(_) => {
                            st.last_v = v;
                            continue;
                        }
                    }
                    st.last_v = v;
                }
                if st.anchor > 0.0 {
                    st.t_eq += dt;
                    let next = bti_detrapping(sp, st.anchor, v, temp_k, st.t_eq)?;
                    // Guard against bisection round-off re-inflating the state.
                    st.dvth = next.min(st.dvth);
                }
            }
        }
    }
    Ok(out)
}

/// Calibrated default parameters. These reproduce the reference scenario
/// table used by the acceptance suite; the values are fitting artifacts, not
/// silicon extractions.
pub fn calibrated_models() -> AgingModels {
    AgingModels {
        pmos: AgingParams {
            bti_traps: vec![
                // Fast-emitting population: month-scale emission constant,
                // mostly relaxed by end of life.
                TrapSpecies {
                    a_c: crate::calibrate::PMOS_BTI_A_FAST,
                    b_c: crate::calibrate::PMOS_BTI_B,
                    e_ac: 0.10,
                    n_c: crate::calibrate::PMOS_BTI_N,
                    a_e: crate::calibrate::PMOS_BTI_AE_FAST,
                    b_e: 6.0,
                    e_ae: 0.15,
                    beta_e: 1.0,
                    r_perm: crate::calibrate::PMOS_BTI_R_PERM,
                },
                // Slow-emitting population: decade-scale emission constant.
                TrapSpecies {
                    a_c: crate::calibrate::PMOS_BTI_A_SLOW,
                    b_c: crate::calibrate::PMOS_BTI_B,
                    e_ac: 0.10,
                    n_c: crate::calibrate::PMOS_BTI_N,
                    a_e: crate::calibrate::PMOS_BTI_AE_SLOW,
                    b_e: 6.0,
                    e_ae: 0.15,
                    beta_e: 1.0,
                    r_perm: crate::calibrate::PMOS_BTI_R_PERM,
                },
            ],
            hci: HciParams {
                a_h: crate::calibrate::PMOS_HCI_A,
                b_h: crate::calibrate::PMOS_HCI_B,
                e_ah: 0.05,
                n_h: crate::calibrate::PMOS_HCI_N,
            },
            temperature_k: 298.15,
            temp_offset_bti_k: 0.0,
            temp_offset_hci_k: 0.0,
        },
        nmos: AgingParams {
            bti_traps: Vec::new(),
            hci: HciParams {
                a_h: crate::calibrate::NMOS_HCI_A,
                b_h: crate::calibrate::NMOS_HCI_B,
                e_ah: 0.05,
                n_h: crate::calibrate::NMOS_HCI_N,
            },
            temperature_k: 298.15,
            temp_offset_bti_k: 0.0,
            temp_offset_hci_k: 0.0,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn species() -> TrapSpecies {
        TrapSpecies {
            a_c: 1.0e-3,
            b_c: 4.0,
            e_ac: 0.10,
            n_c: 0.20,
            a_e: 1.0e-4,
            b_e: 6.0,
            e_ae: 0.15,
            beta_e: 0.5,
            r_perm: 0.85,
        }
    }

    fn hci() -> HciParams {
        HciParams { a_h: 1.0e-4, b_h: 3.0, e_ah: 0.05, n_h: 0.9 }
    }

    const T: f64 = 298.15;

    #[test]
    fn trapping_zero_time_is_zero() {
        let v = bti_trapping(&species(), 0.9, T, 0.0).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn trapping_doubling_time_scales_by_power_law() {
        let sp = species();
        let a = bti_trapping(&sp, 0.9, T, 1000.0).unwrap();
        let b = bti_trapping(&sp, 0.9, T, 2000.0).unwrap();
        let ratio = b / a;
        assert!((ratio - 2f64.powf(sp.n_c)).abs() < 1e-12);
    }

    #[test]
    fn trapping_monotone_in_time_and_voltage() {
        let sp = species();
        let a = bti_trapping(&sp, 0.9, T, 100.0).unwrap();
        let b = bti_trapping(&sp, 0.9, T, 200.0).unwrap();
        let c = bti_trapping(&sp, 1.0, T, 100.0).unwrap();
        assert!(b > a);
        assert!(c > a);
    }

    #[test]
    fn trapping_rejects_negative_time() {
        assert!(bti_trapping(&species(), 0.9, T, -1.0).is_err());
        assert!(bti_trapping(&species(), 0.9, T, f64::NAN).is_err());
    }

    #[test]
    fn detrapping_zero_time_identity() {
        let v = bti_detrapping(&species(), 0.010, 0.0, T, 0.0).unwrap();
        assert!((v - 0.010).abs() < 1e-18);
    }

    #[test]
    fn detrapping_zero_input_stays_zero() {
        let v = bti_detrapping(&species(), 0.0, 0.0, T, 1e9).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn detrapping_asymptote_is_permanent_fraction() {
        let mut sp = species();
        sp.r_perm = 0.3;
        let v = bti_detrapping(&sp, 0.010, 0.0, T, 1e18).unwrap();
        assert!((v - 0.003).abs() < 1e-9, "{v}");
    }

    #[test]
    fn detrapping_monotone_non_increasing() {
        let sp = species();
        let mut prev = f64::INFINITY;
        for t in [0.0, 1.0, 1e3, 1e6, 1e9] {
            let v = bti_detrapping(&sp, 0.010, 0.0, T, t).unwrap();
            assert!(v <= prev);
            assert!(v >= sp.r_perm * 0.010 - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn detrapping_rejects_negative_input() {
        assert!(bti_detrapping(&species(), -1e-3, 0.0, T, 1.0).is_err());
    }

    #[test]
    fn hci_zero_time_is_zero() {
        assert_eq!(hci_law(&hci(), 0.9, T, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn hci_power_law_scaling() {
        let h = hci();
        let a = hci_law(&h, 0.9, T, 500.0).unwrap();
        let b = hci_law(&h, 0.9, T, 2000.0).unwrap();
        assert!((b / a - 4f64.powf(h.n_h)).abs() < 1e-12);
    }

    #[test]
    fn equivalent_time_zero_target() {
        let t = equivalent_time(|t| t, 0.0, 1.0).unwrap();
        assert_eq!(t, 0.0);
    }

    #[test]
    fn equivalent_time_round_trip() {
        let sp = species();
        for t in [1e-3, 1.0, 1000.0, 3.15e7] {
            let dv = bti_trapping(&sp, 0.9, T, t).unwrap();
            let t_eq = equivalent_time(
                |x| bti_trapping(&sp, 0.9, T, x).unwrap(),
                dv,
                t,
            )
            .unwrap();
            assert!((t_eq - t).abs() <= 1e-8 * t, "t={t} t_eq={t_eq}");
        }
    }

    #[test]
    fn equivalent_time_closed_form_power_law() {
        // K * t^n with K = 1e-3, n = 0.2; target 2e-3 inverts to t = 2^(1/0.2) = 32 s.
        let t = equivalent_time(|t: f64| 1e-3 * t.powf(0.2), 2e-3, 1.0).unwrap();
        assert!((t - 32.0).abs() < 32.0 * 1e-8, "{t}");
    }

    #[test]
    fn equivalent_time_unreachable_errors() {
        // Saturating law capped at 1.0.
        let r = equivalent_time(|t: f64| 1.0 - (-t).exp(), 2.0, 1.0);
        assert!(matches!(r, Err(Error::Continuation(_))));
    }

    #[test]
    fn segment_zero_dt_is_identity() {
        let traps = vec![species()];
        let st = DeviceAgingState::fresh(1);
        let out = apply_stress_segment(&st, &traps, 0.9, T, 0.0, StressMode::Stress).unwrap();
        assert_eq!(st, out);
    }

    #[test]
    fn consecutive_stress_segments_compose() {
        let traps = vec![species()];
        let st = DeviceAgingState::fresh(1);
        let one = apply_stress_segment(&st, &traps, 0.9, T, 200.0, StressMode::Stress).unwrap();
        let a = apply_stress_segment(&st, &traps, 0.9, T, 120.0, StressMode::Stress).unwrap();
        let two = apply_stress_segment(&a, &traps, 0.9, T, 80.0, StressMode::Stress).unwrap();
        assert!((one.bti_total() - two.bti_total()).abs() < 1e-9);
    }

    #[test]
    fn split_into_k_segments_matches_single() {
        let traps = vec![species()];
        let st = DeviceAgingState::fresh(1);
        let single = apply_stress_segment(&st, &traps, 0.9, T, 1e6, StressMode::Stress).unwrap();
        let mut split = st.clone();
        for _ in 0..16 {
            split = apply_stress_segment(&split, &traps, 0.9, T, 1e6 / 16.0, StressMode::Stress)
                .unwrap();
        }
        assert!((single.bti_total() - split.bti_total()).abs() < 1e-9);

        // Same for recovery continuation at constant voltage.
        let single_r =
            apply_stress_segment(&single, &traps, 0.0, T, 1e6, StressMode::Recovery).unwrap();
        let mut split_r = single.clone();
        for _ in 0..16 {
            split_r =
                apply_stress_segment(&split_r, &traps, 0.0, T, 1e6 / 16.0, StressMode::Recovery)
                    .unwrap();
        }
        assert!((single_r.bti_total() - split_r.bti_total()).abs() < 1e-9);
    }

    #[test]
    fn recovery_reduces_but_respects_floor() {
        let traps = vec![species()];
        let st = DeviceAgingState::fresh(1);
        let stressed = apply_stress_segment(&st, &traps, 0.9, T, 1.0, StressMode::Stress).unwrap();
        let recovered =
            apply_stress_segment(&stressed, &traps, 0.0, T, 1.0, StressMode::Recovery).unwrap();
        assert!(recovered.bti_total() < stressed.bti_total());
        assert!(recovered.bti_total() >= traps[0].r_perm * stressed.bti_total() - 1e-15);
    }

    #[test]
    fn recovery_then_stress_continues_cleanly() {
        let traps = vec![species()];
        let st = DeviceAgingState::fresh(1);
        let s1 = apply_stress_segment(&st, &traps, 0.9, T, 1e4, StressMode::Stress).unwrap();
        let r1 = apply_stress_segment(&s1, &traps, 0.0, T, 1e4, StressMode::Recovery).unwrap();
        let s2 = apply_stress_segment(&r1, &traps, 0.9, T, 1e4, StressMode::Stress).unwrap();
        assert!(s2.bti_total() > r1.bti_total());
        // Re-stressing from a recovered state stays below uninterrupted stress.
        let direct = apply_stress_segment(&s1, &traps, 0.9, T, 1e4, StressMode::Stress).unwrap();
        assert!(s2.bti_total() < direct.bti_total());
    }

    #[test]
    fn recovery_voltage_change_continues() {
        let traps = vec![species()];
        let st = DeviceAgingState::fresh(1);
        let s = apply_stress_segment(&st, &traps, 0.9, T, 1e5, StressMode::Stress).unwrap();
        let r1 = apply_stress_segment(&s, &traps, 0.0, T, 1e5, StressMode::Recovery).unwrap();
        let r2 = apply_stress_segment(&r1, &traps, 0.2, T, 1e5, StressMode::Recovery).unwrap();
        assert!(r2.bti_total() <= r1.bti_total());
        assert!(r2.bti_total() >= traps[0].r_perm * s.bti_total() - 1e-15);
    }

    #[test]
    fn calibrated_models_validate() {
        calibrated_models().validate().unwrap();
        assert_eq!(calibrated_models().pmos.bti_traps.len(), 2);
        assert!(calibrated_models().nmos.bti_traps.is_empty());
    }
}
