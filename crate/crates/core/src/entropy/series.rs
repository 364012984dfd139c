//! Entropy time series, W-entropies and their finite-difference slopes.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use super::StateCalculus;
use crate::error::{config, domain, Error, Result};
use crate::flows::{FlowKind, FlowTrajectory};
use crate::verify::fd::{differentiate_series, uniform_step};

/// Scalar functionals along a trajectory plus 4th-order differences.
/// Derivative entries within [`crate::verify::fd::HALF_WIDTH`] samples of either end are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropySeries {
    pub times: Vec<f64>,
    pub ent: Vec<f64>,
    pub fisher: Vec<f64>,
    /// NaN for states without a potential (heat).
    pub kin: Vec<f64>,
    /// ∫∇φ·∇ρ dμ by quadrature (NaN without a potential).
    pub d_ent_quad: Vec<f64>,
    /// Present for finite c.
    pub h: Option<Vec<f64>>,
    pub w: Option<WEntropy>,
    pub d_ent: Vec<f64>,
    pub d2_ent: Vec<f64>,
    pub d_h: Option<Vec<f64>>,
    pub d2_h: Option<Vec<f64>>,
    /// Extra columns, written as `rhs_<name>`.
    pub rhs: BTreeMap<String, Vec<f64>>,
    pub stencil_order: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WMode {
    /// H_m = Ent + (m/2)(1 + log 4πt).
    Heat,
    /// H_m = Ent + (m/2)(1 + log 4πt²).
    Geodesic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WEntropy {
    pub hm: Vec<f64>,
    pub wm: Vec<f64>,
    pub d_wm: Vec<f64>,
}

impl EntropySeries {
    /// Series from precomputed per-snapshot calculus. H_m/W_m are attached
    /// for heat and geodesic kinds when `m` is given and all times are > 0.
    pub fn from_calcs(times: &[f64], calcs: &[StateCalculus], kind: FlowKind, m: Option<f64>) -> Result<Self> {
        if times.len() != calcs.len() {
            return config("times and states differ in length");
        }
        let ent: Vec<f64> = calcs.iter().map(|c| c.ent).collect();
        let fisher = calcs.iter().map(|c| c.fisher).collect();
        let kin = calcs.iter().map(|c| c.kin.unwrap_or(f64::NAN)).collect();
        let d_ent_quad = calcs.iter().map(|c| c.d_ent.unwrap_or(f64::NAN)).collect();
        let h: Option<Vec<f64>> = match kind {
            FlowKind::Langevin { c } | FlowKind::Euler { c } => {
                Some(calcs.iter().map(|s| 0.5 * c * c * s.kin.unwrap_or(f64::NAN) + s.ent).collect())
            }
            _ => None,
        };
        let d_ent = differentiate_series(&ent, times, 1)?;
        let d2_ent = differentiate_series(&ent, times, 2)?;
        let (d_h, d2_h) = match &h {
            Some(h) => (Some(differentiate_series(h, times, 1)?), Some(differentiate_series(h, times, 2)?)),
            None => (None, None),
        };
        let mut s = EntropySeries {
            times: times.to_vec(),
            ent,
            fisher,
            kin,
            d_ent_quad,
            h,
            w: None,
            d_ent,
            d2_ent,
            d_h,
            d2_h,
            rhs: BTreeMap::new(),
            stencil_order: 4,
        };
        let mode = match kind {
            FlowKind::Heat => Some(WMode::Heat),
            FlowKind::Geodesic => Some(WMode::Geodesic),
            _ => None,
        };
        if let (Some(mode), Some(m)) = (mode, m) {
            if times.iter().all(|&t| t > 0.0) {
                s.w = Some(hm_wm(&s, mode, m)?);
            }
        }
        Ok(s)
    }

    pub fn from_trajectory(traj: &FlowTrajectory, m: Option<f64>) -> Result<Self> {
        let calcs = traj.snapshots.iter().map(StateCalculus::from_state).collect::<Result<Vec<_>>>()?;
        Self::from_calcs(&traj.times(), &calcs, traj.kind, m)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn add_rhs(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.len() {
            return config(format!("rhs column {name} has {} rows, series has {}", values.len(), self.len()));
        }
        self.rhs.insert(name.to_string(), values);
        Ok(())
    }

    pub const BASE_COLUMNS: [&'static str; 12] =
        ["t", "Ent", "Fisher", "Kin", "H", "Hm", "Wm", "dEnt", "d2Ent", "dH", "d2H", "dWm"];

    pub fn headers(&self) -> Vec<String> {
        let mut h: Vec<String> = Self::BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
        h.extend(self.rhs.keys().map(|k| format!("rhs_{k}")));
        h
    }

    /// CSV with the fixed columns (NaN where a quantity does not apply).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.headers()).map_err(io_err)?;
        let opt = |v: &Option<Vec<f64>>, i: usize| v.as_ref().map_or(f64::NAN, |v| v[i]);
        for i in 0..self.len() {
            let (hm, wm, dwm) = match &self.w {
                Some(w) => (w.hm[i], w.wm[i], w.d_wm[i]),
                None => (f64::NAN, f64::NAN, f64::NAN),
            };
            let mut row = vec![
                self.times[i],
                self.ent[i],
                self.fisher[i],
                self.kin[i],
                opt(&self.h, i),
                hm,
                wm,
                self.d_ent[i],
                self.d2_ent[i],
                opt(&self.d_h, i),
                opt(&self.d2_h, i),
                dwm,
            ];
            row.extend(self.rhs.values().map(|v| v[i]));
            w.write_record(row.iter().map(|v| fmt_num(*v))).map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::Numeric(format!("write failed: {e}")))?;
        Ok(())
    }
}

pub(crate) fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:e}")
    }
}

fn io_err(e: csv::Error) -> Error {
    Error::Numeric(format!("csv write failed: {e}"))
}

/// H_m and W_m = d/dt(tH_m) = H_m + t·H_m′, with
/// dW_m/dt = 2H_m′ + tH_m″ from the same 5-point stencils.
pub fn hm_wm(series: &EntropySeries, mode: WMode, m: f64) -> Result<WEntropy> {
    if let Some(t) = series.times.iter().find(|&&t| !(t > 0.0)) {
        return domain(format!("H_m/W_m need t > 0, got t = {t}"));
    }
    let hm: Vec<f64> = series
        .times
        .iter()
        .zip(&series.ent)
        .map(|(&t, e)| {
            let s = match mode {
                WMode::Heat => t,
                WMode::Geodesic => t * t,
            };
            e + 0.5 * m * (1.0 + (4.0 * PI * s).ln())
        })
        .collect();
    let d1 = differentiate_series(&hm, &series.times, 1)?;
    let d2 = differentiate_series(&hm, &series.times, 2)?;
    let wm = (0..hm.len()).map(|i| hm[i] + series.times[i] * d1[i]).collect();
    let d_wm = (0..hm.len()).map(|i| 2.0 * d1[i] + series.times[i] * d2[i]).collect();
    Ok(WEntropy { hm, wm, d_wm })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WGeneral {
    pub w: Vec<f64>,
    pub d_w: Vec<f64>,
    /// dW/dt − (−mα²).
    pub excess: Vec<f64>,
}

/// W = Ent′ + ∫₀ᵗ(2α + 1/c²)Ent′ ds − (1/c²)∫₀ᵗ Fisher ds, with Ent′ taken from
/// quadrature and the time integrals by the trapezoid rule from the first
/// sample; dW/dt by 4th-order differences.
pub fn w_general(series: &EntropySeries, alpha: &[f64], c: f64, m: f64) -> Result<WGeneral> {
    if alpha.len() != series.len() {
        return config("alpha series length differs from the entropy series");
    }
    if !(c > 0.0) {
        return config("w_general needs c > 0 (c = ∞ allowed)");
    }
    if series.d_ent_quad.iter().any(|v| v.is_nan()) {
        return config("w_general needs a transport potential");
    }
    uniform_step(&series.times)?;
    let gamma = if c.is_finite() { 1.0 / (c * c) } else { 0.0 };
    let de = &series.d_ent_quad;
    let integrand: Vec<f64> = (0..series.len()).map(|i| (2.0 * alpha[i] + gamma) * de[i] - gamma * series.fisher[i]).collect();
    let mut acc = 0.0;
    let mut w = Vec::with_capacity(series.len());
    for i in 0..series.len() {
        if i > 0 {
            acc += 0.5 * (series.times[i] - series.times[i - 1]) * (integrand[i] + integrand[i - 1]);
        }
        w.push(de[i] + acc);
    }
    let d_w = differentiate_series(&w, &series.times, 1)?;
    let excess = d_w.iter().zip(alpha).map(|(d, a)| d + m * a * a).collect();
    Ok(WGeneral { w, d_w, excess })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WTarget {
    /// W_{H,c} = H + (c²/2)(1 − e^{2t/c²})H′.
    H,
    /// W_{Ent,c} = Ent + c²(1 − e^{t/c²})Ent′.
    Ent,
}

/// (W, dW/dt); the slope is (1 + a′)X′ + aX″ with the differenced X′, X″.
pub fn w_exponential(series: &EntropySeries, c: f64, target: WTarget) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(c > 0.0 && c.is_finite()) {
        return domain(format!("exponential W-entropy needs finite c > 0, got {c}"));
    }
    let c2 = c * c;
    let (x, d1, d2) = match target {
        WTarget::H => match (&series.h, &series.d_h, &series.d2_h) {
            (Some(h), Some(a), Some(b)) => (h, a, b),
            _ => return config("W_{H,c} needs a Hamiltonian series"),
        },
        WTarget::Ent => (&series.ent, &series.d_ent, &series.d2_ent),
    };
    let coef = |t: f64| match target {
        WTarget::H => (0.5 * c2 * (1.0 - (2.0 * t / c2).exp()), -(2.0 * t / c2).exp()),
        WTarget::Ent => (c2 * (1.0 - (t / c2).exp()), -(t / c2).exp()),
    };
    let mut w = Vec::with_capacity(x.len());
    let mut dw = Vec::with_capacity(x.len());
    for (i, &t) in series.times.iter().enumerate() {
        let (a, ap) = coef(t);
        w.push(x[i] + a * d1[i]);
        dw.push((1.0 + ap) * d1[i] + a * d2[i]);
    }
    Ok((w, dw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{normalize, run_geodesic, SolverConfig};
    use crate::geometry::{build_geometry, GeometryDescriptor, ScalarField};
    use crate::reference::{model_entropy, preset_geodesic};
    use crate::verify::fd::HALF_WIDTH;
    use std::sync::Arc;

    fn synthetic(times: Vec<f64>, ent: Vec<f64>) -> EntropySeries {
        let n = times.len();
        EntropySeries {
            d_ent: differentiate_series(&ent, &times, 1).unwrap(),
            d2_ent: differentiate_series(&ent, &times, 2).unwrap(),
            times,
            ent,
            fisher: vec![0.0; n],
            kin: vec![0.0; n],
            d_ent_quad: vec![0.0; n],
            h: None,
            w: None,
            d_h: None,
            d2_h: None,
            rhs: BTreeMap::new(),
            stencil_order: 4,
        }
    }

    #[test]
    fn model_entropy_has_zero_hm_and_wm() {
        let m = 2;
        let g = preset_geodesic(m, 1.0, 0.01).unwrap();
        let times: Vec<f64> = g.times[20..].to_vec();
        let ent = times.iter().map(|&t| model_entropy(m, t)).collect();
        let w = hm_wm(&synthetic(times.clone(), ent), WMode::Geodesic, m as f64).unwrap();
        assert!(w.hm.iter().all(|v| v.abs() < 1e-14));
        assert!(w.wm[HALF_WIDTH..times.len() - HALF_WIDTH].iter().all(|v| v.abs() < 1e-12));
        assert!(w.wm[0].is_nan());
        // heat kernel: Ent = −(m/2)(1 + log 4πt)
        let ent = times.iter().map(|&t| -(1.0 + (4.0 * PI * t).ln())).collect();
        let w = hm_wm(&synthetic(times, ent), WMode::Heat, 2.0).unwrap();
        assert!(w.hm.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn stationary_geodesic_wm() {
        // Ent constant: W_m = H_m + m exactly, dW_m/dt = m/t; the stencils see
        // only (m/2)log t², with 4th-order truncation ∝ h⁴/t⁴
        let (m, ent0) = (2.0, -(2.0 * PI).ln());
        let errs = |h: f64| {
            let n = (0.5 / h).round() as usize;
            let times: Vec<f64> = (0..=n).map(|k| 0.5 + h * k as f64).collect();
            let w = hm_wm(&synthetic(times.clone(), vec![ent0; n + 1]), WMode::Geodesic, m).unwrap();
            let (mut e1, mut e2) = (0.0f64, 0.0f64);
            for i in HALF_WIDTH..=n - HALF_WIDTH {
                let t = times[i];
                let wm = ent0 + 0.5 * m * (1.0 + (4.0 * PI * t * t).ln()) + m;
                let bound = h.powi(4) * m / t.powi(4);
                e1 = e1.max((w.wm[i] - wm).abs() / bound);
                e2 = e2.max((w.d_wm[i] - m / t).abs() / bound);
            }
            (e1, e2)
        };
        let (a1, a2) = errs(0.01);
        let (b1, b2) = errs(0.005);
        assert!(a1 < 1.0 && a2 < 1.0, "{a1} {a2}");
        assert!(b1 < 1.0 && b2 < 1.0, "{b1} {b2}");
    }

    #[test]
    fn hm_rejects_nonpositive_time() {
        let times: Vec<f64> = (0..10).map(|k| k as f64 * 0.1).collect();
        assert!(matches!(hm_wm(&synthetic(times, vec![0.0; 10]), WMode::Heat, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn w_general_on_stationary_state_is_zero() {
        let times: Vec<f64> = (0..20).map(|k| k as f64 * 0.05).collect();
        let s = synthetic(times, vec![-1.8; 20]);
        let alpha: Vec<f64> = s.times.iter().map(|t| (3.0 * t).sin()).collect();
        let w = w_general(&s, &alpha, 1.0, 3.0).unwrap();
        assert!(w.w.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn exponential_w_at_start_and_errors() {
        let times: Vec<f64> = (0..20).map(|k| k as f64 * 0.05).collect();
        let ent: Vec<f64> = times.iter().map(|t| (-t).exp()).collect();
        let s = synthetic(times, ent);
        let (w, _) = w_exponential(&s, 1.0, WTarget::Ent).unwrap();
        assert!(w[0].is_nan() || w[0] == s.ent[0]);
        assert!((w[5] - s.ent[5] - (1.0 - (0.25f64).exp()) * s.d_ent[5]).abs() < 1e-15);
        assert!(w_exponential(&s, f64::INFINITY, WTarget::Ent).is_err());
        assert!(w_exponential(&s, 1.0, WTarget::H).is_err());
    }

    #[test]
    fn dissipation_two_ways_along_geodesic() {
        let g = Arc::new(build_geometry(&GeometryDescriptor::line(64, vec![crate::FourierTerm::cos(&[1], 0.3)], None)).unwrap());
        let rho = normalize(&ScalarField::from_fn(g.clone(), |x| 1.0 + 0.2 * x[0].cos()));
        let phi = ScalarField::from_fn(g, |x| 0.1 * x[0].cos());
        let err = |dt: f64| {
            let tr = run_geodesic(&rho, &phi, &SolverConfig::new(dt, 0.0, 0.3, (0.01 / dt).round() as usize)).unwrap();
            let s = EntropySeries::from_trajectory(&tr, None).unwrap();
            (3..s.len() - 3).map(|i| (s.d_ent[i] - s.d_ent_quad[i]).abs()).fold(0.0, f64::max)
        };
        let (a, b) = (err(1e-3), err(5e-4));
        assert!(a <= 1e-6 && b <= 1e-6, "{a} {b}");
    }
}
