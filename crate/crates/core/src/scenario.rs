//! JSON scenario configs: geometry, flow kind, initial data, solver settings
//! and the checks to run on them.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::flows::{
    normalize, run_euler_damped, run_finite_dim, run_geodesic, run_heat, run_langevin, FiniteDimTrajectory, FlowTrajectory,
    PotentialV, SolverConfig,
};
use crate::geometry::{build_geometry, FourierTerm, GeometryDescriptor, ScalarField, TorusGeometry, VectorField};
use crate::verify::CheckRequest;

/// Named or explicit scalar initial data. Densities are normalised to
/// probability with respect to μ after evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldInit {
    /// ρ: constant; φ: 0.
    Uniform,
    Constant { value: f64 },
    /// 1 + a·cos(2πx₁/L₁).
    PerturbedUniform { a: f64 },
    /// Periodised exp(−|x − x_c|²/(4u0²)) centred in the cell (densities only).
    ModelPatch { u0: f64 },
    /// base + Σ trig terms, same convention as the weight f.
    Fourier {
        #[serde(default)]
        base: f64,
        terms: Vec<FourierTerm>,
    },
    /// Random trig polynomial with |k_i| ≤ modes; needs a seed. For
    /// densities 1 + amplitude·p with sup|p| ≤ 1.
    Random { modes: u32, amplitude: f64 },
    /// φ = log ρ₀ + 1 (potentials only).
    LogRhoPlusOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityInit {
    Gradient { phi: FieldInit },
    Components { components: Vec<FieldInit> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowName {
    Heat,
    Geodesic,
    Langevin,
    Euler,
    FiniteDim,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowDescriptor {
    pub kind: FlowName,
    /// Finite coupling for langevin, euler and finite_dim.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<FieldInit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi0: Option<FieldInit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<VelocityInit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialV>,
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Required for every kind except finite_dim.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryDescriptor>,
    pub flow: FlowDescriptor,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Sampled initial data on a built geometry.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub geometry: Arc<TorusGeometry>,
    pub rho0: ScalarField,
    pub phi0: Option<ScalarField>,
    pub u0: Option<VectorField>,
}

#[derive(Debug, Clone)]
pub enum RunOutput {
    Pde(FlowTrajectory),
    FiniteDim(FiniteDimTrajectory),
}

/// serde_json errors carry line/column; keep them at the front.
pub fn parse_error(e: &serde_json::Error) -> Error {
    let msg = e.to_string();
    let msg = msg.rsplit_once(" at line ").map_or(msg.as_str(), |(m, _)| m);
    Error::Config(format!("line {} column {}: {msg}", e.line(), e.column()))
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| parse_error(&e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let f = &self.flow;
        f.solver.validate()?;
        let needs_c = matches!(f.kind, FlowName::Langevin | FlowName::Euler | FlowName::FiniteDim);
        match (needs_c, f.c) {
            (true, Some(c)) if c > 0.0 && c.is_finite() => {}
            (true, _) => return config("flow.c must be a finite positive number for langevin, euler and finite_dim"),
            (false, Some(_)) => return config("flow.c is only valid for langevin, euler and finite_dim (heat is c = 0, geodesic c = ∞)"),
            (false, None) => {}
        }
        if f.kind == FlowName::FiniteDim {
            if f.x0.is_none() || f.v0.is_none() || f.potential.is_none() {
                return config("finite_dim needs flow.x0, flow.v0 and flow.potential");
            }
            return Ok(());
        }
        let g = match &self.geometry {
            Some(g) => g,
            None => return config("geometry is required for PDE flows"),
        };
        if f.rho0.is_none() {
            return config("flow.rho0 is required");
        }
        match f.kind {
            FlowName::Heat if f.phi0.is_some() || f.u0.is_some() => return config("heat flow takes no phi0/u0"),
            FlowName::Geodesic | FlowName::Langevin if f.phi0.is_none() => return config("flow.phi0 is required"),
            FlowName::Euler if f.u0.is_none() => return config("flow.u0 is required for euler"),
            FlowName::Euler if f.phi0.is_some() => return config("euler takes u0, not phi0"),
            _ => {}
        }
        if let Some(VelocityInit::Components { components }) = &f.u0 {
            if components.len() != g.dim {
                return config(format!("u0 has {} components for dim {}", components.len(), g.dim));
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<Arc<TorusGeometry>> {
        match &self.geometry {
            Some(d) => Ok(Arc::new(build_geometry(d)?)),
            None => config("scenario has no geometry"),
        }
    }

    /// `seed` overrides the config seed.
    pub fn initial_data(&self, seed: Option<u64>) -> Result<InitialData> {
        let seed = seed.or(self.seed);
        let geom = self.geometry()?;
        let f = &self.flow;
        let rho_init = f.rho0.as_ref().expect("validated");
        let rho0 = density(&geom, rho_init, seed)?;
        let phi0 = f.phi0.as_ref().map(|p| potential(&geom, p, &rho0, seed)).transpose()?;
        let u0 = match &f.u0 {
            None => None,
            Some(VelocityInit::Gradient { phi }) => {
                let p = potential(&geom, phi, &rho0, seed)?;
                Some(VectorField::new(geom.clone(), geom.grad_values(p.values()))?)
            }
            Some(VelocityInit::Components { components }) => {
                let comps = components
                    .iter()
                    .enumerate()
                    .map(|(i, c)| potential(&geom, c, &rho0, seed.map(|s| s + i as u64 + 1)).map(|f| f.into_values()))
                    .collect::<Result<Vec<_>>>()?;
                Some(VectorField::new(geom.clone(), comps)?)
            }
        };
        Ok(InitialData { geometry: geom, rho0, phi0, u0 })
    }

    pub fn run(&self, seed: Option<u64>) -> Result<RunOutput> {
        let f = &self.flow;
        if f.kind == FlowName::FiniteDim {
            let (x0, v0, pot) = (f.x0.as_ref().unwrap(), f.v0.as_ref().unwrap(), f.potential.as_ref().unwrap());
            return Ok(RunOutput::FiniteDim(run_finite_dim(x0, v0, pot, f.c.unwrap(), &f.solver)?));
        }
        let d = self.initial_data(seed)?;
        let cfg = &f.solver;
        let tr = match f.kind {
            FlowName::Heat => run_heat(&d.rho0, cfg)?,
            FlowName::Geodesic => run_geodesic(&d.rho0, d.phi0.as_ref().unwrap(), cfg)?,
            FlowName::Langevin => run_langevin(&d.rho0, d.phi0.as_ref().unwrap(), f.c.unwrap(), cfg)?,
            FlowName::Euler => run_euler_damped(&d.rho0, d.u0.as_ref().unwrap(), f.c.unwrap(), cfg)?,
            FlowName::FiniteDim => unreachable!(),
        };
        Ok(RunOutput::Pde(tr))
    }

    /// Grid doubled, dt halved, output stride kept.
    pub fn refined(&self) -> Self {
        let mut s = self.clone();
        s.geometry = s.geometry.map(|g| g.refined());
        s.flow.solver = s.flow.solver.refined();
        s
    }
}

fn random_terms(dim: usize, modes: u32, seed: Option<u64>) -> Result<Vec<FourierTerm>> {
    let seed = match seed {
        Some(s) => s,
        None => return config("the random preset needs an explicit seed (config \"seed\" or --seed)"),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = modes as i32;
    let mut ks: Vec<Vec<i32>> = Vec::new();
    // one representative of each ±k pair, excluding k = 0
    match dim {
        1 => ks.extend((1..=m).map(|k| vec![k])),
        _ => {
            for a in 0..=m {
                for b in -m..=m {
                    if a > 0 || b > 0 {
                        ks.push(vec![a, b]);
                    }
                }
            }
        }
    }
    let mut terms: Vec<FourierTerm> =
        ks.into_iter().map(|k| FourierTerm { k, cos: rng.gen_range(-1.0..=1.0), sin: rng.gen_range(-1.0..=1.0) }).collect();
    let total: f64 = terms.iter().map(|t| t.cos.abs() + t.sin.abs()).sum();
    if total > 0.0 {
        terms.iter_mut().for_each(|t| {
            t.cos /= total;
            t.sin /= total;
        });
    }
    Ok(terms)
}

fn sample(geom: &Arc<TorusGeometry>, init: &FieldInit, seed: Option<u64>, unit_base: bool) -> Result<ScalarField> {
    let base = if unit_base { 1.0 } else { 0.0 };
    let vals = match init {
        FieldInit::Uniform => vec![base; geom.len()],
        FieldInit::Constant { value } => vec![*value; geom.len()],
        FieldInit::PerturbedUniform { a } => {
            let l = geom.periods()[0];
            geom.sample(|x| 1.0 + a * (2.0 * PI * x[0] / l).cos())
        }
        FieldInit::ModelPatch { u0 } => {
            if !(*u0 > 0.0 && u0.is_finite()) {
                return config(format!("model_patch u0 = {u0} must be positive"));
            }
            let periods = geom.periods().to_vec();
            geom.sample(|x| {
                // images within ±3 cells are enough for u0 well below the period
                let per_axis: Vec<f64> = x
                    .iter()
                    .zip(&periods)
                    .map(|(&xi, &l)| {
                        (-3..=3)
                            .map(|j| {
                                let d = xi - 0.5 * l + j as f64 * l;
                                (-d * d / (4.0 * u0 * u0)).exp()
                            })
                            .sum::<f64>()
                    })
                    .collect();
                per_axis.iter().product()
            })
        }
        FieldInit::Fourier { base, terms } => {
            for t in terms {
                if t.k.len() != geom.dim() {
                    return config(format!("initial-data wavevector {:?} has wrong length", t.k));
                }
            }
            geom.sample(|x| base + geom.eval_trig(terms, x))
        }
        FieldInit::Random { modes, amplitude } => {
            let terms = random_terms(geom.dim(), *modes, seed)?;
            geom.sample(|x| base + amplitude * geom.eval_trig(&terms, x))
        }
        FieldInit::LogRhoPlusOne => return config("log_rho_plus_one is only valid for potentials"),
    };
    ScalarField::new(geom.clone(), vals)
}

pub fn density(geom: &Arc<TorusGeometry>, init: &FieldInit, seed: Option<u64>) -> Result<ScalarField> {
    let raw = sample(geom, init, seed, true)?;
    if let Some(i) = raw.values().iter().position(|v| !(*v > 0.0)) {
        return config(format!("initial density is not positive at node {i}"));
    }
    Ok(normalize(&raw))
}

pub fn potential(geom: &Arc<TorusGeometry>, init: &FieldInit, rho0: &ScalarField, seed: Option<u64>) -> Result<ScalarField> {
    match init {
        FieldInit::LogRhoPlusOne => Ok(rho0.map(|r| r.ln() + 1.0)),
        FieldInit::ModelPatch { .. } => config("model_patch is a density preset; φ_m is not periodic"),
        other => sample(geom, other, seed, false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GEO: &str = r#"{
      "geometry": {"dim": 1, "grid": [64], "f_coeffs": [{"k": [1], "cos": 0.3}], "m": 3},
      "flow": {"kind": "geodesic", "rho0": {"preset": "perturbed_uniform", "a": 0.2},
               "phi0": {"preset": "fourier", "terms": [{"k": [1], "cos": 0.1}]},
               "solver": {"dt": 0.001, "t_start": 0.5, "t_end": 0.6, "output_stride": 10}}
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let c = ScenarioConfig::from_json(GEO).unwrap();
        assert_eq!(ScenarioConfig::from_json(&c.to_json()).unwrap(), c);
        let d = c.initial_data(None).unwrap();
        let g = &d.geometry;
        assert!((g.integrate_mu_values(d.rho0.values()) - 1.0).abs() < 1e-12);
        let phi = d.phi0.unwrap();
        assert!((phi.values()[0] - 0.1).abs() < 1e-15);
        let RunOutput::Pde(tr) = c.run(None).unwrap() else { panic!() };
        assert_eq!(tr.snapshots.len(), 11);
    }

    #[test]
    fn schema_errors_are_line_anchored() {
        let bad = GEO.replace("\"output_stride\"", "\"stride\"");
        let Err(Error::Config(msg)) = ScenarioConfig::from_json(&bad) else { panic!() };
        assert!(msg.starts_with("line 5"), "{msg}");
        let bad = GEO.replace("perturbed_uniform", "perturbed");
        assert!(ScenarioConfig::from_json(&bad).is_err());
        let bad = GEO.replace("\"kind\": \"geodesic\"", "\"kind\": \"heat\"");
        assert!(ScenarioConfig::from_json(&bad).is_err());
    }

    #[test]
    fn random_needs_seed_and_is_deterministic() {
        let g = Arc::new(build_geometry(&GeometryDescriptor::plane([16, 16], vec![], None)).unwrap());
        let init = FieldInit::Random { modes: 2, amplitude: 0.5 };
        assert!(density(&g, &init, None).is_err());
        let a = density(&g, &init, Some(7)).unwrap();
        let b = density(&g, &init, Some(7)).unwrap();
        let c = density(&g, &init, Some(8)).unwrap();
        assert_eq!(a.values(), b.values());
        assert_ne!(a.values(), c.values());
        assert!(a.min() > 0.0);
    }

    #[test]
    fn model_patch_is_periodised_gaussian() {
        let g = Arc::new(build_geometry(&GeometryDescriptor::line(64, vec![], None)).unwrap());
        let rho = density(&g, &FieldInit::ModelPatch { u0: 0.5 }, None).unwrap();
        // symmetric about the cell centre, peaked there
        let v = rho.values();
        assert!((v[10] - v[54]).abs() < 1e-14);
        assert_eq!(v.iter().cloned().fold(0.0, f64::max), v[32]);
        assert!(potential(&g, &FieldInit::ModelPatch { u0: 0.5 }, &rho, None).is_err());
    }
}
