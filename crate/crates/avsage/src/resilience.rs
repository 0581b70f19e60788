//! Fault-tolerant voltage scaling policy: maps a relaxed delay threshold to
//! a bit error rate under uniform path-delay scaling, inverts per-operator
//! resilience curves against an accuracy budget, and emits per-operator
//! `delay_max` thresholds for the AVS loop.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The nine network operators a policy covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Operator {
    Q,
    K,
    V,
    QkT,
    Sv,
    O,
    Gate,
    Up,
    Down,
}

impl Operator {
    pub const ALL: [Operator; 9] = [
        Operator::Q,
        Operator::K,
        Operator::V,
        Operator::QkT,
        Operator::Sv,
        Operator::O,
        Operator::Gate,
        Operator::Up,
        Operator::Down,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Operator::Q => "Q",
            Operator::K => "K",
            Operator::V => "V",
            Operator::QkT => "QK^T",
            Operator::Sv => "SV",
            Operator::O => "O",
            Operator::Gate => "Gate",
            Operator::Up => "Up",
            Operator::Down => "Down",
        }
    }

    /// Lower-case name safe for file stems.
    pub fn stem(&self) -> &'static str {
        match self {
            Operator::Q => "q",
            Operator::K => "k",
            Operator::V => "v",
            Operator::QkT => "qkt",
            Operator::Sv => "sv",
            Operator::O => "o",
            Operator::Gate => "gate",
            Operator::Up => "up",
            Operator::Down => "down",
        }
    }

    pub fn parse(s: &str) -> Result<Operator> {
        let norm = s.trim().to_ascii_lowercase();
        let op = match norm.as_str() {
            "q" => Operator::Q,
            "k" => Operator::K,
            "v" => Operator::V,
            "qk^t" | "qkt" | "qk_t" => Operator::QkT,
            "sv" => Operator::Sv,
            "o" => Operator::O,
            "gate" => Operator::Gate,
            "up" => Operator::Up,
            "down" => Operator::Down,
            _ => return Err(Error::Config(format!("unknown operator name: {s}"))),
        };
        Ok(op)
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One monitored timing path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathTiming {
    /// Nominal path delay (s).
    pub delay_s: f64,
    /// Errors-per-cycle contribution when the path violates (its activation
    /// rate).
    pub activation: f64,
}

/// Population of monitored timing paths with the output bit count used to
/// normalize BER.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPopulation {
    pub paths: Vec<PathTiming>,
    /// Monitored output bit count: the BER denominator.
    pub monitored_bits: u64,
}

/// Deterministic 64-bit mixer used for fixture generation.
struct SplitMix64(u64);

impl SplitMix64 {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Standard normal via the polar method.
    fn next_normal(&mut self) -> f64 {
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                return u * (-2.0 * s.ln() / s).sqrt();
            }
        }
    }
}

/// Seed of the shipped path-population fixture.
pub const PATH_FIXTURE_SEED: u64 = 0x5eed_0f_ab5a_6e01;

impl PathPopulation {
    pub fn validate(&self) -> Result<()> {
        if self.paths.is_empty() {
            return Err(Error::Domain("path population is empty".into()));
        }
        if self.monitored_bits == 0 {
            return Err(Error::Domain("monitored bit count must be >= 1".into()));
        }
        for p in &self.paths {
            if !(p.delay_s > 0.0) || !(p.activation >= 0.0) {
                return Err(Error::Domain(format!("invalid path entry {p:?}")));
            }
        }
        Ok(())
    }

    /// Shipped fixture: 100 paths. Path 0 is the critical path at exactly
    /// 1.542 ns; the rest draw from a half-normal below it (sigma 15 ps),
    /// with activation rates uniform over the observed toggle-rate band.
    /// The bit count is the full 256-output x 32-bit result bus.
    pub fn fixture() -> PathPopulation {
        let mut rng = SplitMix64(PATH_FIXTURE_SEED);
        let mut paths = vec![PathTiming { delay_s: 1.542e-9, activation: 0.0075 }];
        for _ in 1..100 {
            let z = rng.next_normal().abs();
            let delay_s = 1.542e-9 - 15e-12 * z;
            let activation = 0.006 + 0.003 * rng.next_f64();
            paths.push(PathTiming { delay_s, activation });
        }
        PathPopulation { paths, monitored_bits: 256 * 32 }
    }

    /// Maximum nominal path delay (s).
    pub fn max_delay_s(&self) -> f64 {
        self.paths.iter().map(|p| p.delay_s).fold(0.0, f64::max)
    }

    /// Total BER when every path violates.
    pub fn max_ber(&self) -> f64 {
        self.paths.iter().map(|p| p.activation).sum::<f64>() / self.monitored_bits as f64
    }

    /// Ascending distinct scale breakpoints `t_clk / d_p` with the BER level
    /// reached once each breakpoint is crossed.
    fn levels(&self, t_clk_s: f64) -> Vec<(f64, f64)> {
        let mut br: Vec<(f64, f64)> =
            self.paths.iter().map(|p| (t_clk_s / p.delay_s, p.activation)).collect();
        br.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut cum = 0.0;
        let bits = self.monitored_bits as f64;
        for (b, a) in br {
            cum += a / bits;
            match out.last_mut() {
                Some(last) if last.0 == b => last.1 = cum,
                _ => out.push((b, cum)),
            }
        }
        out
    }
}

/// BER under uniform aging: every path delay scales by `s`; a timing error
/// is a scaled delay exceeding the clock period.
pub fn ber_of_scale(pop: &PathPopulation, s: f64, t_clk_s: f64) -> Result<f64> {
    pop.validate()?;
    if !(s >= 1.0) {
        return Err(Error::Domain(format!("scale must be >= 1, got {s}")));
    }
    let bits = pop.monitored_bits as f64;
    let sum: f64 =
        pop.paths.iter().filter(|p| s * p.delay_s > t_clk_s).map(|p| p.activation).sum();
    Ok(sum / bits)
}

/// Measured (BER, accuracy-loss) curve of one operator. Interpolation is
/// piecewise-linear in log10(BER).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResilienceProfile {
    pub operator: Operator,
    /// Strictly increasing BER sample points with non-decreasing loss.
    pub points: Vec<(f64, f64)>,
}

impl ResilienceProfile {
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::Domain(format!("empty resilience profile for {}", self.operator)));
        }
        let mut prev_ber = 0.0;
        let mut prev_loss = -1.0;
        for &(ber, loss) in &self.points {
            if !(ber > prev_ber && ber <= 1.0) {
                return Err(Error::Domain(format!(
                    "profile BER points must be strictly increasing in (0,1], got {ber}"
                )));
            }
            if loss < prev_loss || loss < 0.0 {
                return Err(Error::Domain(format!(
                    "profile loss must be non-negative and non-decreasing, got {loss}"
                )));
            }
            prev_ber = ber;
            prev_loss = loss;
        }
        Ok(())
    }

    /// Three-point knee profile: loss is zero at the anchor BER, hits the
    /// reference budget (0.5%) exactly at `knee`, and grows past it.
    fn knee_profile(op: Operator, knee: f64) -> ResilienceProfile {
        ResilienceProfile {
            operator: op,
            points: vec![(1e-8, 0.0), (knee, 0.005), (knee * 100.0, 0.08)],
        }
    }

    /// Shipped illustrative fixtures. Knee BERs are chosen so the reference
    /// 0.5% budget reproduces the expected per-operator AVS structure; they
    /// are stand-ins for real injection measurements and are replaceable via
    /// CSV.
    pub fn fixtures() -> BTreeMap<Operator, ResilienceProfile> {
        let mut m = BTreeMap::new();
        for op in Operator::ALL {
            let knee = match op {
                Operator::O => crate::calibrate::KNEE_O,
                Operator::Down => crate::calibrate::KNEE_DOWN,
                Operator::K => crate::calibrate::KNEE_K,
                _ => crate::calibrate::KNEE_RELAXED,
            };
            m.insert(op, Self::knee_profile(op, knee));
        }
        m
    }
}

/// Outcome flag of a tolerable-BER lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BerBound {
    Interpolated,
    /// Budget below the lowest sampled loss: the profile minimum is returned.
    BelowProfile,
    /// Budget above the highest sampled loss: the profile maximum is
    /// returned (extrapolation boundary).
    AboveProfile,
}

/// Largest BER whose predicted accuracy loss stays within `budget`,
/// log-linearly interpolated between profile samples.
pub fn tolerable_ber(profile: &ResilienceProfile, budget: f64) -> Result<(f64, BerBound)> {
    profile.validate()?;
    if !(budget >= 0.0) {
        return Err(Error::Domain(format!("budget must be >= 0, got {budget}")));
    }
    let pts = &profile.points;
    let (min_ber, min_loss) = pts[0];
    let (max_ber, max_loss) = *pts.last().unwrap();
    if budget < min_loss {
        return Ok((min_ber, BerBound::BelowProfile));
    }
    if budget >= max_loss {
        return Ok((max_ber, BerBound::AboveProfile));
    }
    // Largest i with loss_i <= budget; the crossing lies in [i, i+1].
    let i = pts.iter().rposition(|&(_, loss)| loss <= budget).unwrap();
    let (b0, l0) = pts[i];
    let (b1, l1) = pts[i + 1];
    if budget == l0 {
        return Ok((b0, BerBound::Interpolated));
    }
    let frac = (budget - l0) / (l1 - l0);
    let log_ber = b0.log10() + frac * (b1.log10() - b0.log10());
    Ok((10f64.powf(log_ber), BerBound::Interpolated))
}

/// Result of mapping a BER allowance onto the path population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayMaxResult {
    pub delay_max_s: f64,
    /// Delay scale factor; `f64::INFINITY` when capped.
    pub scale: f64,
    pub tolerable_ber: f64,
    /// The population never reaches the tolerable BER within the scale cap.
    pub capped: bool,
    pub bound: BerBound,
}

/// Derive the operator's `delay_max`: the largest uniform delay scale whose
/// BER stays within the tolerable bound, floored at the clock period.
pub fn delay_max_for(
    pop: &PathPopulation,
    profile: &ResilienceProfile,
    budget: f64,
    t_clk_s: f64,
    nominal_delay_s: f64,
    s_cap: f64,
) -> Result<DelayMaxResult> {
    pop.validate()?;
    if !(t_clk_s > 0.0 && nominal_delay_s > 0.0 && s_cap > 1.0) {
        return Err(Error::Domain("t_clk, nominal delay and s_cap must be positive".into()));
    }
    let (ber_star, bound) = tolerable_ber(profile, budget)?;
    let levels = pop.levels(t_clk_s);
    // ber(s) <= ber_star holds up to (and including) the first breakpoint
    // whose crossing would exceed the bound.
    let mut s_star = f64::INFINITY;
    for &(b, level_after) in &levels {
        if level_after > ber_star {
            s_star = b;
            break;
        }
    }
    if s_star.is_infinite() {
        // Even full violation stays within the bound: cap the scale.
        return Ok(DelayMaxResult {
            delay_max_s: (s_cap * nominal_delay_s).max(t_clk_s),
            scale: f64::INFINITY,
            tolerable_ber: ber_star,
            capped: true,
            bound,
        });
    }
    let first_breakpoint = levels[0].0;
    let delay_max_s = if s_star == first_breakpoint {
        // The critical path itself may not violate.
        t_clk_s
    } else {
        (s_star * nominal_delay_s).max(t_clk_s)
    };
    Ok(DelayMaxResult { delay_max_s, scale: s_star, tolerable_ber: ber_star, capped: false, bound })
}

/// One operator's policy entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRow {
    pub operator: Operator,
    pub tolerable_ber: f64,
    pub scale: f64,
    pub delay_max_s: f64,
    pub capped: bool,
}

/// Per-operator delay thresholds feeding the AVS engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    pub rows: Vec<PolicyRow>,
    pub budget: f64,
}

impl PolicyTable {
    pub fn row(&self, op: Operator) -> &PolicyRow {
        self.rows.iter().find(|r| r.operator == op).unwrap()
    }
}

/// Build the policy table. Every operator must have a population and a
/// profile; the default setup shares one population fixture across all nine.
pub fn build_policy(
    populations: &BTreeMap<Operator, PathPopulation>,
    profiles: &BTreeMap<Operator, ResilienceProfile>,
    budget: f64,
    t_clk_s: f64,
    nominal_delay_s: f64,
    s_cap: f64,
) -> Result<PolicyTable> {
    let mut rows = Vec::new();
    for op in Operator::ALL {
        let pop = populations
            .get(&op)
            .ok_or_else(|| Error::Config(format!("missing path population for operator {op}")))?;
        let profile = profiles
            .get(&op)
            .ok_or_else(|| Error::Config(format!("missing resilience profile for operator {op}")))?;
        let r = delay_max_for(pop, profile, budget, t_clk_s, nominal_delay_s, s_cap)?;
        rows.push(PolicyRow {
            operator: op,
            tolerable_ber: r.tolerable_ber,
            scale: r.scale,
            delay_max_s: r.delay_max_s,
            capped: r.capped,
        });
    }
    Ok(PolicyTable { rows, budget })
}

#[cfg(test)]
mod tests {
    use super::*;

    const T_CLK: f64 = 1.6e-9;

    fn single_path_pop() -> PathPopulation {
        PathPopulation {
            paths: vec![PathTiming { delay_s: 1.542e-9, activation: 0.007 }],
            monitored_bits: 32,
        }
    }

    #[test]
    fn ber_zero_when_no_violation() {
        let pop = single_path_pop();
        assert_eq!(ber_of_scale(&pop, 1.0, T_CLK).unwrap(), 0.0);
    }

    #[test]
    fn ber_single_path_example() {
        let pop = single_path_pop();
        // 1.05 * 1.542 = 1.619 ns > 1.6 ns: the path violates.
        let ber = ber_of_scale(&pop, 1.05, T_CLK).unwrap();
        assert!((ber - 0.007 / 32.0).abs() < 1e-18);
        assert!((ber - 2.19e-4).abs() < 1e-5);
    }

    #[test]
    fn ber_saturates_at_population_max() {
        let pop = PathPopulation::fixture();
        let ber = ber_of_scale(&pop, 10.0, T_CLK).unwrap();
        assert!((ber - pop.max_ber()).abs() < 1e-18);
    }

    #[test]
    fn ber_is_monotone_in_scale() {
        let pop = PathPopulation::fixture();
        let mut prev = 0.0;
        for i in 0..200 {
            let s = 1.0 + i as f64 * 0.001;
            let b = ber_of_scale(&pop, s, T_CLK).unwrap();
            assert!(b >= prev);
            prev = b;
        }
    }

    #[test]
    fn ber_rejects_scale_below_one() {
        assert!(ber_of_scale(&single_path_pop(), 0.99, T_CLK).is_err());
    }

    #[test]
    fn fixture_population_shape() {
        let pop = PathPopulation::fixture();
        pop.validate().unwrap();
        assert_eq!(pop.paths.len(), 100);
        assert_eq!(pop.max_delay_s(), 1.542e-9);
        assert!(pop.paths.iter().all(|p| p.delay_s <= 1.542e-9 && p.delay_s > 1.4e-9));
        assert!(pop
            .paths
            .iter()
            .all(|p| (0.006..=0.009).contains(&p.activation) || p.activation == 0.0075));
        // Deterministic regeneration.
        let again = PathPopulation::fixture();
        assert_eq!(pop, again);
    }

    #[test]
    fn tolerable_ber_flat_knee() {
        let profile = ResilienceProfile {
            operator: Operator::Q,
            points: vec![(1e-8, 0.0), (1e-4, 0.005), (1e-2, 0.5)],
        };
        let (ber, bound) = tolerable_ber(&profile, 0.005).unwrap();
        assert_eq!(ber, 1e-4);
        assert_eq!(bound, BerBound::Interpolated);
    }

    #[test]
    fn tolerable_ber_above_profile_flags() {
        let profile = ResilienceProfile {
            operator: Operator::Q,
            points: vec![(1e-6, 0.0), (1e-4, 0.01)],
        };
        let (ber, bound) = tolerable_ber(&profile, 0.5).unwrap();
        assert_eq!(ber, 1e-4);
        assert_eq!(bound, BerBound::AboveProfile);
    }

    #[test]
    fn tolerable_ber_zero_budget_returns_lowest() {
        let profile = ResilienceProfile {
            operator: Operator::Q,
            points: vec![(1e-7, 0.0), (1e-5, 0.02)],
        };
        let (ber, bound) = tolerable_ber(&profile, 0.0).unwrap();
        assert_eq!(ber, 1e-7);
        assert_eq!(bound, BerBound::Interpolated);
    }

    #[test]
    fn delay_max_floor_when_no_violation_allowed() {
        let pop = PathPopulation::fixture();
        let profile = ResilienceProfile {
            operator: Operator::O,
            points: vec![(1e-8, 0.0), (1e-7, 0.005), (1e-5, 0.08)],
        };
        // Tolerable BER 1e-7 is below the first population level.
        let r = delay_max_for(&pop, &profile, 0.005, T_CLK, 1.542e-9, 1.5).unwrap();
        assert_eq!(r.delay_max_s, T_CLK);
        assert!(!r.capped);
    }

    #[test]
    fn delay_max_caps_above_population() {
        let pop = PathPopulation::fixture();
        let profile = ResilienceProfile {
            operator: Operator::Q,
            points: vec![(1e-8, 0.0), (1e-3, 0.005), (1e-1, 0.08)],
        };
        let r = delay_max_for(&pop, &profile, 0.005, T_CLK, 1.542e-9, 1.5).unwrap();
        assert!(r.capped);
        assert!((r.delay_max_s - 1.5 * 1.542e-9).abs() < 1e-24);
    }

    #[test]
    fn delay_max_two_path_breakpoints() {
        let pop = PathPopulation {
            paths: vec![
                PathTiming { delay_s: 1.55e-9, activation: 0.008 },
                PathTiming { delay_s: 1.50e-9, activation: 0.006 },
            ],
            monitored_bits: 32,
        };
        // Levels: b1 = 1.6/1.55 = 1.0323 -> 2.5e-4, b2 = 1.6/1.50 = 1.0667 -> 4.375e-4.
        let profile = ResilienceProfile {
            operator: Operator::K,
            points: vec![(1e-8, 0.0), (3e-4, 0.005), (3e-2, 0.08)],
        };
        let r = delay_max_for(&pop, &profile, 0.005, T_CLK, 1.55e-9, 2.0).unwrap();
        // BER* = 3e-4 sits between the two levels: s* is the larger breakpoint.
        assert!((r.scale - 1.6 / 1.50).abs() < 1e-12);
    }

    #[test]
    fn policy_budget_zero_floors_everything() {
        let pops: BTreeMap<Operator, PathPopulation> =
            Operator::ALL.iter().map(|&op| (op, PathPopulation::fixture())).collect();
        let profiles = ResilienceProfile::fixtures();
        let table = build_policy(&pops, &profiles, 0.0, T_CLK, 1.542e-9, 1.5).unwrap();
        for row in &table.rows {
            assert_eq!(row.delay_max_s, T_CLK, "operator {}", row.operator);
        }
    }

    #[test]
    fn policy_identical_profiles_identical_rows() {
        let pops: BTreeMap<Operator, PathPopulation> =
            Operator::ALL.iter().map(|&op| (op, PathPopulation::fixture())).collect();
        let mut profiles = BTreeMap::new();
        for op in Operator::ALL {
            profiles.insert(
                op,
                ResilienceProfile {
                    operator: op,
                    points: vec![(1e-8, 0.0), (2e-5, 0.005), (2e-3, 0.08)],
                },
            );
        }
        let table = build_policy(&pops, &profiles, 0.005, T_CLK, 1.542e-9, 1.5).unwrap();
        let first = table.rows[0].delay_max_s;
        assert!(table.rows.iter().all(|r| r.delay_max_s == first));
    }

    #[test]
    fn policy_missing_operator_errors() {
        let mut pops: BTreeMap<Operator, PathPopulation> =
            Operator::ALL.iter().map(|&op| (op, PathPopulation::fixture())).collect();
        pops.remove(&Operator::Gate);
        let profiles = ResilienceProfile::fixtures();
        let err = build_policy(&pops, &profiles, 0.005, T_CLK, 1.542e-9, 1.5).unwrap_err();
        assert!(err.to_string().contains("Gate"));
    }

    #[test]
    fn policy_monotone_in_budget() {
        let pops: BTreeMap<Operator, PathPopulation> =
            Operator::ALL.iter().map(|&op| (op, PathPopulation::fixture())).collect();
        let profiles = ResilienceProfile::fixtures();
        let mut prev: Option<PolicyTable> = None;
        for budget in [0.0, 0.001, 0.005, 0.02, 0.1] {
            let table = build_policy(&pops, &profiles, budget, T_CLK, 1.542e-9, 1.5).unwrap();
            if let Some(p) = &prev {
                for (a, b) in p.rows.iter().zip(&table.rows) {
                    assert!(b.delay_max_s >= a.delay_max_s);
                }
            }
            prev = Some(table);
        }
    }

    #[test]
    fn fixture_knees_give_o_and_down_smallest() {
        let pops: BTreeMap<Operator, PathPopulation> =
            Operator::ALL.iter().map(|&op| (op, PathPopulation::fixture())).collect();
        let profiles = ResilienceProfile::fixtures();
        let table = build_policy(&pops, &profiles, 0.005, T_CLK, 1.542e-9, 1.5).unwrap();
        let mut sorted = table.rows.clone();
        sorted.sort_by(|a, b| a.delay_max_s.partial_cmp(&b.delay_max_s).unwrap());
        let two_smallest = [sorted[0].operator, sorted[1].operator];
        assert!(two_smallest.contains(&Operator::O));
        assert!(two_smallest.contains(&Operator::Down));
    }

    #[test]
    fn operator_names_round_trip() {
        for op in Operator::ALL {
            assert_eq!(Operator::parse(op.name()).unwrap(), op);
            assert_eq!(Operator::parse(op.stem()).unwrap(), op);
        }
    }
}
