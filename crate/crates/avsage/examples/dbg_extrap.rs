use avsage::aging::{calibrated_models, DeviceAgingState};
use avsage::waveform::*;
use avsage::aging::{apply_stress_segment, StressMode};

fn apply_cycle(st: &DeviceAgingState, w: &EquivalentWaveform, traps: &[avsage::TrapSpecies], t: f64)
    -> DeviceAgingState {
    let peak = apply_stress_segment(st, traps, w.v_geff_stress, t, w.period_s * w.stress_fraction, StressMode::Stress).unwrap();
    apply_stress_segment(&peak, traps, w.v_geff_recovery, t, w.period_s * (1.0 - w.stress_fraction), StressMode::Recovery).unwrap()
}

fn main() {
    let stats = WorkloadStats::default();
    let p = calibrated_models().pmos;
    let temp = p.bti_temp_k();
    let traps = &p.bti_traps;
    let w0 = base_waveform(&stats, 0.9).unwrap();

    // brute force over 10^4 cycles, recording at decade boundaries
    let mut brute = DeviceAgingState::fresh(traps.len());
    let mut brute_at = vec![];
    for i in 1..=10_000u32 {
        brute = apply_cycle(&brute, &w0, traps, temp);
        if i == 10 || i == 100 || i == 1000 || i == 10000 {
            brute_at.push((i, brute.bti_total(), brute.species_dvth()));
        }
    }

    // extrapolation trajectory
    let horizon = w0.period_s * 1e4;
    let traj = extrapolate_bti(&stats, 0.9, &p, horizon, 10).unwrap();
    for (i, b, sp) in &brute_at {
        let t = w0.period_s * (*i as f64);
        let e = traj.total_at(t);
        println!("cycles {:>6}: brute {:.6e} (f={:.3e} s={:.3e}) extrap {:.6e} rel {:+.3}%",
            i, b, sp[0], sp[1], e, 100.0*(e-b)/b);
    }

    // single lift check: w1 matches 10 cycles exactly?
    let w1 = lift_waveform(&w0, 10, traps, temp).unwrap();
    println!("w1: v_s={:.6} v_r={:.6}", w1.v_geff_stress, w1.v_geff_recovery);
    let one = apply_cycle(&DeviceAgingState::fresh(traps.len()), &w1, traps, temp);
    println!("one w1 cycle total {:.6e} vs brute10 {:.6e}", one.bti_total(), brute_at[0].1);
    // two w1 cycles vs brute 20?
    let mut b20 = DeviceAgingState::fresh(traps.len());
    for _ in 0..20 { b20 = apply_cycle(&b20, &w0, traps, temp); }
    let two = apply_cycle(&one, &w1, traps, temp);
    println!("two w1 cycles total {:.6e} vs brute20 {:.6e} rel {:+.3}%",
        two.bti_total(), b20.bti_total(), 100.0*(two.bti_total()-b20.bti_total())/b20.bti_total());
    // per-species at 10 cycles
    println!("one w1 species {:?} vs brute {:?}", one.species_dvth(), brute_at[0].2);
}
