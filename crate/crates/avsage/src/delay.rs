//! Trivariate polynomial delay surrogate and the synthetic sweep generator
//! that stands in for circuit-level characterization.
//!
//! The surrogate maps `(dVth_p, dVth_n, V_DD)` to a path delay in ns. Fitting
//! normalizes each input to `[-1, 1]` over the sample box and scales design
//! columns to unit RMS before the orthogonal least-squares solve, which keeps
//! degree-6 fits well conditioned; coefficients are stored over the
//! normalized variables together with the domain box.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One characterization point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelaySample {
    pub dvth_p_v: f64,
    pub dvth_n_v: f64,
    pub vdd_v: f64,
    pub delay_ns: f64,
    pub transition_ns: Option<f64>,
}

impl DelaySample {
    fn coords(&self) -> [f64; 3] {
        [self.dvth_p_v, self.dvth_n_v, self.vdd_v]
    }
}

/// Monomial basis layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisKind {
    /// All monomials with total degree <= `degree` (84 terms at degree 6).
    TotalDegree,
    /// Tensor basis with per-variable degree <= `degree` (343 terms at 6).
    TensorPerVariable,
}

impl BasisKind {
    /// Exponent triples in a fixed, documented order.
    pub fn exponents(&self, degree: u32) -> Vec<(u32, u32, u32)> {
        let d = degree;
        let mut out = Vec::new();
        match self {
            BasisKind::TotalDegree => {
                for a in 0..=d {
                    for b in 0..=(d - a) {
                        for c in 0..=(d - a - b) {
                            out.push((a, b, c));
                        }
                    }
                }
            }
            BasisKind::TensorPerVariable => {
                for a in 0..=d {
                    for b in 0..=d {
                        for c in 0..=d {
                            out.push((a, b, c));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn coefficient_count(&self, degree: u32) -> usize {
        match self {
            BasisKind::TotalDegree => {
                let d = degree as usize;
                (d + 1) * (d + 2) * (d + 3) / 6
            }
            BasisKind::TensorPerVariable => (degree as usize + 1).pow(3),
        }
    }
}

fn monomial_name(e: (u32, u32, u32)) -> String {
    let mut s = String::new();
    for (sym, p) in [("dvth_p", e.0), ("dvth_n", e.1), ("vdd", e.2)] {
        if p > 0 {
            if !s.is_empty() {
                s.push('*');
            }
            let _ = write!(s, "{sym}");
            if p > 1 {
                let _ = write!(s, "^{p}");
            }
        }
    }
    if s.is_empty() {
        s.push('1');
    }
    s
}

/// Fitted polynomial delay model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelaySurrogate {
    pub degree: u32,
    pub basis: BasisKind,
    /// Coefficients over the box-normalized variables, ordered per
    /// `BasisKind::exponents`.
    coeffs: Vec<f64>,
    /// Fit domain, `[(lo, hi); 3]` for (dvth_p, dvth_n, vdd).
    domain: [(f64, f64); 3],
    /// Root-mean-square residual over the fitting samples (ns).
    rmse_ns: f64,
}

fn normalize(x: f64, (lo, hi): (f64, f64)) -> f64 {
    2.0 * (x - lo) / (hi - lo) - 1.0
}

impl DelaySurrogate {
    pub fn rmse_ns(&self) -> f64 {
        self.rmse_ns
    }

    pub fn domain(&self) -> [(f64, f64); 3] {
        self.domain
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Least-squares fit over the samples. Requires at least as many samples
    /// as coefficients and a non-degenerate bounding box.
    pub fn fit(samples: &[DelaySample], degree: u32, basis: BasisKind) -> Result<Self> {
        let exps = basis.exponents(degree);
        let n_coef = exps.len();
        if samples.len() < n_coef {
            return Err(Error::Fit(format!(
                "need at least {n_coef} samples for degree {degree}, got {}",
                samples.len()
            )));
        }
        for s in samples {
            let ok = s.coords().iter().all(|x| x.is_finite()) && s.delay_ns.is_finite();
            if !ok || s.delay_ns <= 0.0 || s.vdd_v <= 0.0 || s.dvth_p_v < 0.0 || s.dvth_n_v < 0.0 {
                return Err(Error::Fit(format!("invalid sample {s:?}")));
            }
        }
        let mut domain = [(f64::INFINITY, f64::NEG_INFINITY); 3];
        for s in samples {
            for (d, x) in domain.iter_mut().zip(s.coords()) {
                d.0 = d.0.min(x);
                d.1 = d.1.max(x);
            }
        }
        let axis_names = ["dvth_p", "dvth_n", "vdd"];
        for (name, (lo, hi)) in axis_names.iter().zip(domain) {
            if !(hi > lo) {
                return Err(Error::Fit(format!(
                    "samples are degenerate along {name}: the fit box has zero width"
                )));
            }
        }

        let m = samples.len();
        let mut a = DMatrix::<f64>::zeros(m, n_coef);
        for (i, s) in samples.iter().enumerate() {
            let u: Vec<f64> =
                s.coords().iter().zip(domain).map(|(&x, d)| normalize(x, d)).collect();
            for (j, &(p, q, r)) in exps.iter().enumerate() {
                a[(i, j)] = u[0].powi(p as i32) * u[1].powi(q as i32) * u[2].powi(r as i32);
            }
        }
        let y = DVector::from_iterator(m, samples.iter().map(|s| s.delay_ns));

        // Column scaling to unit RMS.
        let mut col_scale = vec![0.0_f64; n_coef];
        for j in 0..n_coef {
            let norm = a.column(j).norm() / (m as f64).sqrt();
            if norm == 0.0 {
                return Err(Error::Fit(format!(
                    "rank-deficient design matrix: column for {} is identically zero",
                    monomial_name(exps[j])
                )));
            }
            col_scale[j] = norm;
            for i in 0..m {
                a[(i, j)] /= norm;
            }
        }

        let svd = a.clone().svd(true, true);
        let sv_max = svd.singular_values.max();
        let tol = sv_max * 1e-12;
        if let Some(&sv_min) = svd
            .singular_values
            .iter()
            .min_by(|a, b| a.partial_cmp(b).unwrap())
        {
            if sv_min < tol {
                // Name the monomials dominating the near-null directions.
                let v_t = svd.v_t.as_ref().unwrap();
                let mut names = Vec::new();
                for (k, &sv) in svd.singular_values.iter().enumerate() {
                    if sv < tol {
                        let row = v_t.row(k);
                        let mut idx: Vec<usize> = (0..n_coef).collect();
                        idx.sort_by(|&x, &y| {
                            row[y].abs().partial_cmp(&row[x].abs()).unwrap()
                        });
                        for &j in idx.iter().take(3) {
                            let name = monomial_name(exps[j]);
                            if !names.contains(&name) {
                                names.push(name);
                            }
                        }
                    }
                }
                return Err(Error::Fit(format!(
                    "rank-deficient design matrix; deficient monomials: {}",
                    names.join(", ")
                )));
            }
        }

        let mut c = svd.solve(&y, 0.0).map_err(|e| Error::Fit(e.to_string()))?;
        // One step of iterative refinement to push the residual to round-off.
        let r = &y - &a * &c;
        let dc = svd.solve(&r, 0.0).map_err(|e| Error::Fit(e.to_string()))?;
        c += dc;

        let coeffs: Vec<f64> = c.iter().zip(&col_scale).map(|(&ci, &s)| ci / s).collect();
        let mut model = DelaySurrogate { degree, basis, coeffs, domain, rmse_ns: 0.0 };
        // Stored RMSE is the recomputed residual RMS over the inputs.
        let ss: f64 = samples
            .iter()
            .map(|s| {
                let e = model.eval(s.dvth_p_v, s.dvth_n_v, s.vdd_v) - s.delay_ns;
                e * e
            })
            .sum();
        model.rmse_ns = (ss / m as f64).sqrt();
        Ok(model)
    }

    /// Evaluate the model (ns). Out-of-domain inputs extrapolate the
    /// polynomial; use [`DelaySurrogate::eval_flagged`] to detect them.
    pub fn eval(&self, dvth_p: f64, dvth_n: f64, vdd: f64) -> f64 {
        let u = normalize(dvth_p, self.domain[0]);
        let v = normalize(dvth_n, self.domain[1]);
        let w = normalize(vdd, self.domain[2]);
        let d = self.degree as usize;
        // Power tables, then accumulation in the fixed basis order.
        let mut pu = vec![1.0; d + 1];
        let mut pv = vec![1.0; d + 1];
        let mut pw = vec![1.0; d + 1];
        for i in 1..=d {
            pu[i] = pu[i - 1] * u;
            pv[i] = pv[i - 1] * v;
            pw[i] = pw[i - 1] * w;
        }
        let mut acc = 0.0;
        for (&c, &(p, q, r)) in self.coeffs.iter().zip(self.basis.exponents(self.degree).iter()) {
            acc += c * pu[p as usize] * pv[q as usize] * pw[r as usize];
        }
        acc
    }

    /// Evaluate and report whether the point lies outside the fit domain.
    pub fn eval_flagged(&self, dvth_p: f64, dvth_n: f64, vdd: f64) -> (f64, bool) {
        let outside = [dvth_p, dvth_n, vdd]
            .iter()
            .zip(self.domain)
            .any(|(&x, (lo, hi))| {
                let tol = 1e-9 * (hi - lo);
                x < lo - tol || x > hi + tol
            });
        (self.eval(dvth_p, dvth_n, vdd), outside)
    }

    pub fn contains(&self, dvth_p: f64, dvth_n: f64, vdd: f64) -> bool {
        !self.eval_flagged(dvth_p, dvth_n, vdd).1
    }

    /// Coefficients re-expanded onto raw (un-normalized) monomials, same
    /// ordering as the normalized vector. Exact up to round-off; note the
    /// expansion amplifies noise at high degree on narrow boxes.
    pub fn coefficients_raw(&self) -> Vec<f64> {
        let exps = self.basis.exponents(self.degree);
        let d = self.degree;
        // Per-axis 1-D expansion: u^p = sum_k t[p][k] x^k with
        // u = sx*x + ox.
        let axis_poly = |(lo, hi): (f64, f64)| -> Vec<Vec<f64>> {
            let sx = 2.0 / (hi - lo);
            let ox = -2.0 * lo / (hi - lo) - 1.0;
            let mut t: Vec<Vec<f64>> = vec![vec![0.0; d as usize + 1]; d as usize + 1];
            t[0][0] = 1.0;
            for p in 1..=d as usize {
                for k in 0..=p {
                    let mut v = 0.0;
                    if k > 0 {
                        v += t[p - 1][k - 1] * sx;
                    }
                    v += t[p - 1][k] * ox;
                    t[p][k] = v;
                }
            }
            t
        };
        let tx = axis_poly(self.domain[0]);
        let ty = axis_poly(self.domain[1]);
        let tz = axis_poly(self.domain[2]);
        let index: std::collections::BTreeMap<(u32, u32, u32), usize> =
            exps.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut raw = vec![0.0; self.coeffs.len()];
        for (&c, &(p, q, r)) in self.coeffs.iter().zip(exps.iter()) {
            for k in 0..=p {
                for l in 0..=q {
                    for s in 0..=r {
                        let w = c
                            * tx[p as usize][k as usize]
                            * ty[q as usize][l as usize]
                            * tz[r as usize][s as usize];
                        if let Some(&i) = index.get(&(k, l, s)) {
                            raw[i] += w;
                        }
                    }
                }
            }
        }
        raw
    }

    /// Serialize as structured text: degree, basis, domain box, RMSE, and
    /// coefficients at 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "degree = {}", self.degree);
        let basis = match self.basis {
            BasisKind::TotalDegree => "total",
            BasisKind::TensorPerVariable => "tensor",
        };
        let _ = writeln!(s, "basis = {basis}");
        let names = ["dvth_p_v", "dvth_n_v", "vdd_v"];
        for (name, (lo, hi)) in names.iter().zip(self.domain) {
            let _ = writeln!(s, "domain_{name} = {lo:.16e} {hi:.16e}");
        }
        let _ = writeln!(s, "rmse_ns = {:.16e}", self.rmse_ns);
        let _ = writeln!(s, "n_coeffs = {}", self.coeffs.len());
        for (&c, &(p, q, r)) in self.coeffs.iter().zip(self.basis.exponents(self.degree).iter()) {
            let _ = writeln!(s, "coeff {p} {q} {r} {c:.16e}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut degree = None;
        let mut basis = None;
        let mut domain = [(0.0, 0.0); 3];
        let mut rmse = 0.0;
        let mut coeff_map = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::Config(format!("malformed model line: {line}"));
            if let Some(rest) = line.strip_prefix("coeff ") {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 4 {
                    return Err(bad());
                }
                let p: u32 = parts[0].parse().map_err(|_| bad())?;
                let q: u32 = parts[1].parse().map_err(|_| bad())?;
                let r: u32 = parts[2].parse().map_err(|_| bad())?;
                let c: f64 = parts[3].parse().map_err(|_| bad())?;
                coeff_map.push(((p, q, r), c));
                continue;
            }
            let (key, val) = line.split_once('=').ok_or_else(bad)?;
            let (key, val) = (key.trim(), val.trim());
            match key {
                "degree" => degree = Some(val.parse::<u32>().map_err(|_| bad())?),
                "basis" => {
                    basis = Some(match val {
                        "total" => BasisKind::TotalDegree,
                        "tensor" => BasisKind::TensorPerVariable,
                        _ => return Err(bad()),
                    })
                }
                "domain_dvth_p_v" | "domain_dvth_n_v" | "domain_vdd_v" => {
                    let idx = match key {
                        "domain_dvth_p_v" => 0,
                        "domain_dvth_n_v" => 1,
                        _ => 2,
                    };
                    let parts: Vec<&str> = val.split_whitespace().collect();
                    if parts.len() != 2 {
                        return Err(bad());
                    }
                    domain[idx] = (
                        parts[0].parse().map_err(|_| bad())?,
                        parts[1].parse().map_err(|_| bad())?,
                    );
                }
                "rmse_ns" => rmse = val.parse().map_err(|_| bad())?,
                "n_coeffs" => {}
                _ => return Err(bad()),
            }
        }
        let degree = degree.ok_or_else(|| Error::Config("model file missing degree".into()))?;
        let basis = basis.ok_or_else(|| Error::Config("model file missing basis".into()))?;
        let exps = basis.exponents(degree);
        if coeff_map.len() != exps.len() {
            return Err(Error::Config(format!(
                "model file has {} coefficients, expected {}",
                coeff_map.len(),
                exps.len()
            )));
        }
        let lookup: std::collections::BTreeMap<(u32, u32, u32), f64> =
            coeff_map.into_iter().collect();
        let coeffs = exps
            .iter()
            .map(|e| {
                lookup
                    .get(e)
                    .copied()
                    .ok_or_else(|| Error::Config(format!("model file missing coeff {e:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(DelaySurrogate { degree, basis, coeffs, domain, rmse_ns: rmse })
    }
}

/// Configuration of the synthetic delay generator: an alpha-power style
/// surface `delay = c0 * V / (V - Vth_eff)^alpha` with
/// `Vth_eff = vth0 + w_p*dvth_p + w_n*dvth_n`, calibrated so the nominal
/// point evaluates to `nominal_delay_ns`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub nominal_delay_ns: f64,
    pub v_nominal: f64,
    pub vth0_v: f64,
    pub alpha: f64,
    pub w_p: f64,
    pub w_n: f64,
    pub dvth_max_v: f64,
    pub dvth_step_v: f64,
    pub vdd_min_v: f64,
    pub vdd_max_v: f64,
    pub vdd_step_v: f64,
    pub transition_nominal_ns: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            nominal_delay_ns: 1.542,
            v_nominal: 0.90,
            vth0_v: 0.35,
            alpha: crate::calibrate::SYNTH_ALPHA,
            w_p: crate::calibrate::SYNTH_W_P,
            w_n: crate::calibrate::SYNTH_W_N,
            dvth_max_v: 0.12,
            dvth_step_v: 0.01,
            vdd_min_v: 0.88,
            vdd_max_v: 1.06,
            vdd_step_v: 0.01,
            transition_nominal_ns: 0.1,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.nominal_delay_ns,
            self.v_nominal,
            self.vth0_v,
            self.alpha,
            self.w_p,
            self.w_n,
            self.dvth_max_v,
            self.dvth_step_v,
            self.vdd_min_v,
            self.vdd_max_v,
            self.vdd_step_v,
        ];
        if fields.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite synthetic generator parameter".into()));
        }
        if self.nominal_delay_ns <= 0.0 || self.alpha <= 0.0 {
            return Err(Error::Domain("nominal delay and alpha must be > 0".into()));
        }
        if self.v_nominal <= self.vth0_v {
            return Err(Error::Domain("nominal voltage must exceed vth0".into()));
        }
        if self.dvth_step_v <= 0.0 || self.vdd_step_v <= 0.0 || self.vdd_max_v <= self.vdd_min_v {
            return Err(Error::Domain("invalid sweep ranges".into()));
        }
        Ok(())
    }

    /// Ground-truth delay (ns) at one point.
    pub fn delay_ns(&self, dvth_p: f64, dvth_n: f64, vdd: f64) -> Result<f64> {
        let vth_eff = self.vth0_v + self.w_p * dvth_p + self.w_n * dvth_n;
        if vdd <= vth_eff {
            return Err(Error::Domain(format!(
                "V_DD = {vdd} below effective threshold {vth_eff}; \
                 sweep leaves the generator's domain"
            )));
        }
        let c0 = self.nominal_delay_ns * (self.v_nominal - self.vth0_v).powf(self.alpha)
            / self.v_nominal;
        Ok(c0 * vdd / (vdd - vth_eff).powf(self.alpha))
    }

    /// Deterministic sweep over the configured grid.
    pub fn sweep(&self) -> Result<Vec<DelaySample>> {
        self.validate()?;
        let n_dvth = (self.dvth_max_v / self.dvth_step_v).round() as usize;
        let n_vdd = ((self.vdd_max_v - self.vdd_min_v) / self.vdd_step_v).round() as usize;
        let mut out = Vec::new();
        for i in 0..=n_dvth {
            let dp = i as f64 * self.dvth_step_v;
            for j in 0..=n_dvth {
                let dn = j as f64 * self.dvth_step_v;
                for k in 0..=n_vdd {
                    let v = self.vdd_min_v + k as f64 * self.vdd_step_v;
                    let delay = self.delay_ns(dp, dn, v)?;
                    out.push(DelaySample {
                        dvth_p_v: dp,
                        dvth_n_v: dn,
                        vdd_v: v,
                        delay_ns: delay,
                        transition_ns: Some(
                            self.transition_nominal_ns * delay / self.nominal_delay_ns,
                        ),
                    });
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic_truth(x: f64, y: f64, z: f64) -> f64 {
        1.5 + 0.8 * x - 0.5 * y + 0.3 * z + 0.2 * x * z - 0.1 * y * y + 0.05 * x * y * z
            + 0.4 * z * z * z
    }

    fn cubic_samples() -> Vec<DelaySample> {
        let mut out = Vec::new();
        for i in 0..6 {
            for j in 0..6 {
                for k in 0..6 {
                    let x = i as f64 * 0.02;
                    let y = j as f64 * 0.02;
                    let z = 0.88 + k as f64 * 0.03;
                    out.push(DelaySample {
                        dvth_p_v: x,
                        dvth_n_v: y,
                        vdd_v: z,
                        delay_ns: cubic_truth(x, y, z),
                        transition_ns: None,
                    });
                }
            }
        }
        out
    }

    #[test]
    fn coefficient_counts() {
        assert_eq!(BasisKind::TotalDegree.coefficient_count(6), 84);
        assert_eq!(BasisKind::TotalDegree.exponents(6).len(), 84);
        assert_eq!(BasisKind::TensorPerVariable.coefficient_count(6), 343);
    }

    #[test]
    fn cubic_interpolates_exactly() {
        let samples = cubic_samples();
        let m = DelaySurrogate::fit(&samples, 3, BasisKind::TotalDegree).unwrap();
        assert!(m.rmse_ns() < 1e-12, "rmse {}", m.rmse_ns());
    }

    #[test]
    fn cubic_coefficients_recovered_in_raw_basis() {
        let samples = cubic_samples();
        let m = DelaySurrogate::fit(&samples, 3, BasisKind::TotalDegree).unwrap();
        let raw = m.coefficients_raw();
        let exps = BasisKind::TotalDegree.exponents(3);
        let expected = |e: (u32, u32, u32)| match e {
            (0, 0, 0) => 1.5,
            (1, 0, 0) => 0.8,
            (0, 1, 0) => -0.5,
            (0, 0, 1) => 0.3,
            (1, 0, 1) => 0.2,
            (0, 2, 0) => -0.1,
            (1, 1, 1) => 0.05,
            (0, 0, 3) => 0.4,
            _ => 0.0,
        };
        for (&c, &e) in raw.iter().zip(exps.iter()) {
            assert!((c - expected(e)).abs() < 1e-9, "coeff {e:?} = {c}");
        }
    }

    #[test]
    fn constant_samples_give_constant_model() {
        let mut samples = cubic_samples();
        for s in &mut samples {
            s.delay_ns = 2.25;
        }
        let m = DelaySurrogate::fit(&samples, 4, BasisKind::TotalDegree).unwrap();
        let exps = BasisKind::TotalDegree.exponents(4);
        for (&c, &e) in m.coefficients().iter().zip(exps.iter()) {
            if e == (0, 0, 0) {
                assert!((c - 2.25).abs() < 1e-12);
            } else {
                assert!(c.abs() < 1e-12, "coeff {e:?} = {c}");
            }
        }
    }

    #[test]
    fn degree_zero_model_is_constant() {
        let samples = cubic_samples();
        let m = DelaySurrogate::fit(&samples, 0, BasisKind::TotalDegree).unwrap();
        let c = m.coefficients()[0];
        assert_eq!(m.eval(0.01, 0.02, 0.95), c);
        assert_eq!(m.eval(0.0, 0.0, 0.88), c);
    }

    #[test]
    fn degenerate_axis_is_rejected() {
        let mut samples = cubic_samples();
        for s in &mut samples {
            s.dvth_n_v = 0.0;
        }
        let err = DelaySurrogate::fit(&samples, 3, BasisKind::TotalDegree).unwrap_err();
        assert!(err.to_string().contains("dvth_n"), "{err}");
    }

    #[test]
    fn synthetic_nominal_point() {
        let cfg = SyntheticConfig::default();
        let d = cfg.delay_ns(0.0, 0.0, 0.90).unwrap();
        assert!((d - 1.542).abs() < 1e-12, "{d}");
    }

    #[test]
    fn synthetic_symmetry_under_weight_swap() {
        let cfg = SyntheticConfig { w_p: 0.3, w_n: 0.3, ..SyntheticConfig::default() };
        let a = cfg.delay_ns(0.03, 0.07, 0.95).unwrap();
        let b = cfg.delay_ns(0.07, 0.03, 0.95).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn synthetic_monotone_in_vdd() {
        let cfg = SyntheticConfig::default();
        let mut prev = f64::INFINITY;
        for k in 0..=18 {
            let v = 0.88 + 0.01 * k as f64;
            let d = cfg.delay_ns(0.05, 0.05, v).unwrap();
            assert!(d < prev);
            prev = d;
        }
    }

    #[test]
    fn synthetic_below_threshold_errors() {
        let cfg = SyntheticConfig { vth0_v: 0.85, ..SyntheticConfig::default() };
        assert!(cfg.delay_ns(0.12, 0.12, 0.88).is_err());
    }

    #[test]
    fn degree6_fit_on_synthetic_sweep() {
        let cfg = SyntheticConfig::default();
        let samples = cfg.sweep().unwrap();
        let m = DelaySurrogate::fit(&samples, 6, BasisKind::TotalDegree).unwrap();
        assert!(m.rmse_ns() <= 1e-4, "rmse {}", m.rmse_ns());
        let (nominal, outside) = m.eval_flagged(0.0, 0.0, 0.90);
        assert!(!outside);
        assert!((nominal - 1.542).abs() < 1e-3, "{nominal}");
    }

    #[test]
    fn fitted_model_monotone_over_domain() {
        let cfg = SyntheticConfig::default();
        let samples = cfg.sweep().unwrap();
        let m = DelaySurrogate::fit(&samples, 6, BasisKind::TotalDegree).unwrap();
        // Grid scan: increasing in both shifts, decreasing in vdd.
        for i in 0..12 {
            for k in 0..18 {
                let dp = i as f64 * 0.01;
                let v = 0.88 + 0.01 * k as f64;
                assert!(m.eval(dp + 0.01, 0.0, v) > m.eval(dp, 0.0, v));
                assert!(m.eval(0.0, dp + 0.01, v) > m.eval(0.0, dp, v));
                assert!(m.eval(dp, dp, v + 0.01) < m.eval(dp, dp, v));
            }
        }
    }

    #[test]
    fn fit_idempotence() {
        let cfg = SyntheticConfig::default();
        let samples = cfg.sweep().unwrap();
        let m = DelaySurrogate::fit(&samples, 4, BasisKind::TotalDegree).unwrap();
        let refit_samples: Vec<DelaySample> = samples
            .iter()
            .map(|s| DelaySample {
                delay_ns: m.eval(s.dvth_p_v, s.dvth_n_v, s.vdd_v),
                ..*s
            })
            .collect();
        let m2 = DelaySurrogate::fit(&refit_samples, 4, BasisKind::TotalDegree).unwrap();
        for (a, b) in m.coefficients().iter().zip(m2.coefficients()) {
            let scale = a.abs().max(1e-12);
            assert!((a - b).abs() / scale < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let cfg = SyntheticConfig::default();
        let samples = cfg.sweep().unwrap();
        let m = DelaySurrogate::fit(&samples, 6, BasisKind::TotalDegree).unwrap();
        let text = m.to_text();
        let m2 = DelaySurrogate::from_text(&text).unwrap();
        assert_eq!(m.eval(0.05, 0.03, 0.97), m2.eval(0.05, 0.03, 0.97));
    }

    #[test]
    fn out_of_domain_flag() {
        let cfg = SyntheticConfig::default();
        let samples = cfg.sweep().unwrap();
        let m = DelaySurrogate::fit(&samples, 6, BasisKind::TotalDegree).unwrap();
        assert!(!m.eval_flagged(0.05, 0.05, 0.95).1);
        assert!(m.eval_flagged(0.05, 0.05, 1.09).1);
        assert!(m.eval_flagged(0.13, 0.05, 0.95).1);
    }
}
