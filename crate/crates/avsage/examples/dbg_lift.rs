use avsage::aging::*;
use avsage::waveform::*;

fn main() {
    let stats = WorkloadStats::default();
    let p = calibrated_models().pmos;
    let temp = p.bti_temp_k();
    let traps = &p.bti_traps;
    let mut w = base_waveform(&stats, 0.9).unwrap();
    let mut state = DeviceAgingState::fresh(traps.len());
    let horizon = 3.1536e7_f64; // 1 year
    let mut t = 0.0;
    let n = 10u32;
    let mut next_lift = w.period_s * 10.0;
    loop {
        let peak = apply_stress_segment(&state, traps, w.v_geff_stress, temp, w.stress_duration_s(), StressMode::Stress).unwrap();
        let end = apply_stress_segment(&peak, traps, w.v_geff_recovery, temp, w.recovery_duration_s(), StressMode::Recovery).unwrap();
        t += w.period_s;
        state = end;
        if t >= horizon { break; }
        if t >= next_lift - 0.5 * w.period_s {
            if w.period_s < horizon {
                match lift_waveform(&w, n, traps, temp) {
                    Ok(nw) => {
                        println!("lift level {} -> {}: period {:.3e} s, v_s {:.6}, v_r {:.6}, state total {:.4e} (f {:.3e} / s {:.3e})",
                            w.level, nw.level, nw.period_s, nw.v_geff_stress, nw.v_geff_recovery,
                            state.bti_total(), state.species_dvth()[0], state.species_dvth()[1]);
                        w = nw;
                    }
                    Err(e) => {
                        println!("LIFT FAILED at level {} period {:.3e}: {}", w.level, w.period_s, e);
                        // print diagnostics: brute N cycles of w from fresh
                        let fresh = DeviceAgingState::fresh(traps.len());
                        let mut st = fresh.clone();
                        let mut pk = 0.0;
                        let mut pk_split = vec![];
                        for _ in 0..n {
                            let p2 = apply_stress_segment(&st, traps, w.v_geff_stress, temp, w.stress_duration_s(), StressMode::Stress).unwrap();
                            pk = p2.bti_total(); pk_split = p2.species_dvth();
                            st = apply_stress_segment(&p2, traps, w.v_geff_recovery, temp, w.recovery_duration_s(), StressMode::Recovery).unwrap();
                        }
                        println!("brute peak {:.6e} split {:?}", pk, pk_split);
                        println!("brute end  {:.6e} split {:?}", st.bti_total(), st.species_dvth());
                        return;
                    }
                }
                next_lift *= 10.0;
            } else { next_lift = f64::INFINITY; }
        }
    }
    println!("done t={:.3e} total {:.4e}", t, state.bti_total());
}
