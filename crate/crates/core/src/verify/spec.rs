//! Check specifications, parameter overrides and the canonical configs of
//! the default suite.

use serde::{Deserialize, Serialize};

use super::{CheckId, IdentityId, InequalityId, OracleId};
use crate::error::{config, Result};
use crate::flows::{PotentialV, SolverConfig};
use crate::geometry::{FourierTerm, GeometryDescriptor};
use crate::scenario::{FieldInit, FlowDescriptor, FlowName, ScenarioConfig, VelocityInit};

/// Where α(t) comes from in the Langevin identities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlphaSource {
    /// α = u′/u from the reference ODE with the flow's c and m.
    ReferenceOde { u0: f64, up0: f64 },
    /// α = a0 + a1·t.
    Affine { a0: f64, a1: f64 },
}

/// Reference-model sweep for the model checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub c: Vec<f64>,
    pub m: Vec<usize>,
    pub u0: f64,
    pub up0: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Spacetime samples per (c, m) for the residual check.
    pub samples: usize,
    pub seed: u64,
}

/// Per-check overrides; unset fields fall back to the canonical values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<AlphaSource>,
    /// Requested time window (the backward time τ for reversed-heat checks).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    /// Identity/oracle tolerance or inequality slack.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine: Option<bool>,
    /// T in τ = T − s; defaults to t_start + t_end of the heat run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reverse_horizon: Option<f64>,
    /// N in the entropic curvature-dimension checks (defaults to m).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_eks: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelParams>,
    /// Debug: measure the transport residual with the flipped divergence sign.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub wrong_sign: bool,
}

impl CheckParams {
    /// `over` wins field by field.
    pub fn merged(&self, over: &CheckParams) -> CheckParams {
        CheckParams {
            m: over.m.or(self.m),
            alpha: over.alpha.clone().or_else(|| self.alpha.clone()),
            window: over.window.or(self.window),
            tolerance: over.tolerance.or(self.tolerance),
            refine: over.refine.or(self.refine),
            reverse_horizon: over.reverse_horizon.or(self.reverse_horizon),
            n_eks: over.n_eks.or(self.n_eks),
            model: over.model.clone().or_else(|| self.model.clone()),
            wrong_sign: over.wrong_sign || self.wrong_sign,
        }
    }
}

/// A check as listed in a scenario config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckRequest {
    pub id: CheckId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub params: CheckParams,
}

/// Fully resolved check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSpec {
    pub name: String,
    pub id: CheckId,
    pub scenario: Option<ScenarioConfig>,
    pub params: CheckParams,
}

/// Flow kind a check runs on (None: no scenario).
pub fn required_flow(id: CheckId) -> Option<FlowName> {
    use FlowName::*;
    Some(match id {
        CheckId::Identity(i) => match i {
            IdentityId::GeoWm | IdentityId::GeoDissipation => Geodesic,
            IdentityId::HeatWm | IdentityId::HeatCdkm => Heat,
            IdentityId::LangevinMf3
            | IdentityId::Hamiltonian2nd
            | IdentityId::Hamiltonian1st
            | IdentityId::WComparison
            | IdentityId::WExp => Langevin,
            IdentityId::FdLangevin | IdentityId::FdVh | IdentityId::FdW => FiniteDim,
            IdentityId::ModelIdentity => return None,
        },
        CheckId::Inequality(i) => match i {
            InequalityId::GeoMonotone | InequalityId::EksGeo => Geodesic,
            InequalityId::HeatMonotone | InequalityId::CsBound | InequalityId::EksGrad => Heat,
            InequalityId::EksLangevin | InequalityId::WhcMonotone | InequalityId::WComparisonMonotone => Langevin,
            InequalityId::VorticityDecay | InequalityId::Closedness => Euler,
        },
        CheckId::Oracle(o) => match o {
            OracleId::ModelResidual | OracleId::ClosedForms => return None,
            OracleId::EulerEquivalence | OracleId::PotentialRecovery => Langevin,
            OracleId::HopfLax => Geodesic,
            OracleId::FiniteDimOracle => FiniteDim,
        },
    })
}

impl CheckSpec {
    /// Check `id` on a user scenario, with canonical parameters underneath
    /// the request's overrides.
    pub fn from_request(req: &CheckRequest, scenario: &ScenarioConfig) -> Result<Self> {
        let base = canonical(req.id).into_iter().next().expect("every id has a canonical spec");
        let scenario = match required_flow(req.id) {
            None => None,
            Some(kind) if kind == scenario.flow.kind => {
                let mut s = scenario.clone();
                s.checks.clear();
                Some(s)
            }
            Some(kind) => {
                return config(format!("check {} needs a {:?} flow, config has {:?}", req.id, kind, scenario.flow.kind))
            }
        };
        // user scenarios verify over their whole run unless a window is given
        let mut params = base.params.clone();
        params.window = None;
        if scenario.is_some() {
            params.reverse_horizon = None;
        }
        Ok(CheckSpec {
            name: req.name.clone().unwrap_or_else(|| req.id.name().to_string()),
            id: req.id,
            scenario,
            params: params.merged(&req.params),
        })
    }

    /// Same check at twice the grid and half the step.
    pub fn refined(&self) -> Self {
        let mut s = self.clone();
        s.scenario = s.scenario.map(|c| c.refined());
        s
    }
}

// ---- canonical configs -------------------------------------------------

fn line(n: usize, f: Vec<FourierTerm>, m: f64) -> GeometryDescriptor {
    GeometryDescriptor::line(n, f, Some(m))
}

fn f03() -> Vec<FourierTerm> {
    vec![FourierTerm::cos(&[1], 0.3)]
}

fn cos_phi(a: f64) -> FieldInit {
    FieldInit::Fourier { base: 0.0, terms: vec![FourierTerm::cos(&[1], a)] }
}

fn pde(geometry: GeometryDescriptor, kind: FlowName, c: Option<f64>, phi0: Option<FieldInit>, solver: SolverConfig) -> ScenarioConfig {
    ScenarioConfig {
        geometry: Some(geometry),
        flow: FlowDescriptor {
            kind,
            c,
            rho0: Some(FieldInit::PerturbedUniform { a: 0.2 }),
            phi0,
            u0: None,
            x0: None,
            v0: None,
            potential: None,
            solver,
        },
        checks: vec![],
        output: None,
        seed: None,
    }
}

fn geodesic(f: Vec<FourierTerm>) -> ScenarioConfig {
    pde(line(128, f, 3.0), FlowName::Geodesic, None, Some(cos_phi(0.1)), SolverConfig::new(1e-3, 0.47, 1.03, 10))
}

fn heat(f: Vec<FourierTerm>) -> ScenarioConfig {
    pde(line(128, f, 3.0), FlowName::Heat, None, None, SolverConfig::new(5e-4, 0.07, 1.13, 10))
}

fn langevin(f: Vec<FourierTerm>, c: f64, stride: usize, t_end: f64) -> ScenarioConfig {
    pde(line(64, f, 3.0), FlowName::Langevin, Some(c), Some(cos_phi(0.1)), SolverConfig::new(1e-3, 0.0, t_end, stride))
}

fn euler_2d(f: Vec<FourierTerm>, u0: VelocityInit) -> ScenarioConfig {
    let mut s = pde(
        GeometryDescriptor::plane([64, 64], f, None),
        FlowName::Euler,
        Some(1.0),
        None,
        SolverConfig::new(5e-3, 0.0, 0.5, 10),
    );
    s.flow.u0 = Some(u0);
    s
}

fn finite_dim(stride: usize) -> ScenarioConfig {
    ScenarioConfig {
        geometry: None,
        flow: FlowDescriptor {
            kind: FlowName::FiniteDim,
            c: Some(1.0),
            rho0: None,
            phi0: None,
            u0: None,
            x0: Some(vec![1.0]),
            v0: Some(vec![0.0]),
            potential: Some(PotentialV::harmonic(1)),
            solver: SolverConfig::new(1e-3, 0.0, 1.0, stride),
        },
        checks: vec![],
        output: None,
        seed: None,
    }
}

fn ode_alpha() -> Option<AlphaSource> {
    Some(AlphaSource::ReferenceOde { u0: 1.0, up0: 0.0 })
}

fn params(tolerance: f64, window: Option<[f64; 2]>) -> CheckParams {
    CheckParams { tolerance: Some(tolerance), window, ..Default::default() }
}

fn spec(name: &str, id: CheckId, scenario: Option<ScenarioConfig>, params: CheckParams) -> CheckSpec {
    CheckSpec { name: name.to_string(), id, scenario, params }
}

/// Canonical instances of `id` (two for the Langevin identity: ODE and affine α).
pub fn canonical(id: CheckId) -> Vec<CheckSpec> {
    let n = id.name();
    let geo_win = Some([0.5, 1.0]);
    let heat_win = Some([0.1, 1.0]);
    let lang_win = Some([0.03, 0.5]);
    match id {
        CheckId::Identity(i) => match i {
            IdentityId::GeoWm => {
                vec![spec(n, id, Some(geodesic(f03())), CheckParams { refine: Some(true), ..params(1e-3, geo_win) })]
            }
            IdentityId::GeoDissipation => vec![spec(n, id, Some(geodesic(f03())), params(1e-3, geo_win))],
            // the reversed-time form differentiates Ent directly and already sits at the
            // roundoff floor, where a coarse/fine ratio carries no information
            IdentityId::HeatWm | IdentityId::HeatCdkm => {
                let refine = Some(i == IdentityId::HeatWm);
                vec![spec(n, id, Some(heat(f03())), CheckParams { refine, ..params(1e-3, heat_win) })]
            }
            IdentityId::LangevinMf3 => vec![
                spec(
                    "langevin_mf3_ode",
                    id,
                    Some(langevin(f03(), 1.0, 10, 0.53)),
                    CheckParams { alpha: ode_alpha(), ..params(1e-3, lang_win) },
                ),
                spec(
                    "langevin_mf3_affine",
                    id,
                    Some(langevin(f03(), 1.0, 10, 0.53)),
                    CheckParams { alpha: Some(AlphaSource::Affine { a0: 0.3, a1: 0.1 }), ..params(1e-3, lang_win) },
                ),
            ],
            IdentityId::Hamiltonian2nd | IdentityId::Hamiltonian1st => {
                vec![spec(n, id, Some(langevin(f03(), 0.8, 10, 0.53)), params(1e-3, lang_win))]
            }
            IdentityId::WComparison => {
                vec![spec(n, id, Some(langevin(f03(), 1.0, 10, 0.53)), CheckParams { alpha: ode_alpha(), ..params(1e-3, lang_win) })]
            }
            IdentityId::WExp => vec![spec(n, id, Some(langevin(f03(), 1.0, 10, 0.53)), params(1e-3, lang_win))],
            IdentityId::ModelIdentity => vec![spec(
                n,
                id,
                None,
                CheckParams {
                    model: Some(ModelParams { c: vec![1.0], m: vec![1, 2], u0: 1.0, up0: 0.0, t_end: 0.55, dt: 1e-3, samples: 0, seed: 0 }),
                    ..params(1e-6, Some([0.0, 0.5]))
                },
            )],
            IdentityId::FdLangevin | IdentityId::FdVh | IdentityId::FdW => {
                vec![spec(n, id, Some(finite_dim(10)), params(1e-7, None))]
            }
        },
        CheckId::Inequality(i) => match i {
            InequalityId::GeoMonotone => vec![spec(n, id, Some(geodesic(vec![])), params(1e-8, geo_win))],
            InequalityId::EksGeo => vec![spec(n, id, Some(geodesic(f03())), params(1e-6, geo_win))],
            InequalityId::HeatMonotone => vec![spec(n, id, Some(heat(vec![])), params(1e-8, heat_win))],
            InequalityId::CsBound | InequalityId::EksGrad => vec![spec(n, id, Some(heat(f03())), params(1e-6, heat_win))],
            InequalityId::EksLangevin => {
                vec![spec(n, id, Some(langevin(f03(), 1.0, 10, 0.53)), CheckParams { alpha: ode_alpha(), ..params(1e-6, lang_win) })]
            }
            InequalityId::WhcMonotone => vec![spec(n, id, Some(langevin(vec![], 1.0, 10, 0.53)), params(1e-6, lang_win))],
            InequalityId::WComparisonMonotone => vec![spec(
                n,
                id,
                Some(langevin(vec![], 1.0, 10, 0.53)),
                CheckParams { alpha: ode_alpha(), ..params(1e-6, lang_win) },
            )],
            InequalityId::VorticityDecay => {
                let u0 = VelocityInit::Components {
                    components: vec![
                        FieldInit::Fourier { base: 0.0, terms: vec![FourierTerm::sin(&[0, 1], 1.0)] },
                        FieldInit::Constant { value: 0.0 },
                    ],
                };
                vec![spec(n, id, Some(euler_2d(vec![], u0)), params(1e-6, None))]
            }
            InequalityId::Closedness => {
                let f = vec![FourierTerm::cos(&[1, 0], 0.2), FourierTerm::cos(&[0, 1], 0.1)];
                // ∇(0.1·cos x cos y), with cos x cos y = ½cos(x+y) + ½cos(x−y)
                let phi = FieldInit::Fourier {
                    base: 0.0,
                    terms: vec![FourierTerm::cos(&[1, 1], 0.05), FourierTerm::cos(&[1, -1], 0.05)],
                };
                vec![spec(n, id, Some(euler_2d(f, VelocityInit::Gradient { phi })), params(1e-6, None))]
            }
        },
        CheckId::Oracle(o) => match o {
            OracleId::ModelResidual => vec![spec(
                n,
                id,
                None,
                CheckParams {
                    model: Some(ModelParams {
                        c: vec![0.5, 1.0, 2.0],
                        m: vec![1, 2],
                        u0: 0.5,
                        up0: 0.5,
                        t_end: 0.55,
                        dt: 1e-3,
                        samples: 100,
                        seed: 7,
                    }),
                    ..params(1e-6, Some([0.0, 0.5]))
                },
            )],
            OracleId::EulerEquivalence => vec![spec(n, id, Some(langevin(f03(), 1.0, 10, 0.5)), params(1e-4, None))],
            OracleId::PotentialRecovery => vec![spec(n, id, Some(langevin(f03(), 1.0, 1, 0.5)), params(1e-4, None))],
            OracleId::HopfLax => {
                let mut s = pde(line(256, vec![], 1.0), FlowName::Geodesic, None, Some(cos_phi(0.1)), SolverConfig::new(1e-3, 0.0, 0.2, 200));
                s.flow.rho0 = Some(FieldInit::Uniform);
                vec![spec(n, id, Some(s), params(1e-3, None))]
            }
            OracleId::ClosedForms => vec![spec(n, id, None, params(1e-8, None))],
            OracleId::FiniteDimOracle => vec![spec(n, id, Some(finite_dim(100)), params(1e-9, None))],
        },
    }
}

/// Every check id with its canonical configs, in a fixed order.
pub fn default_suite() -> Vec<CheckSpec> {
    CheckId::all().into_iter().flat_map(canonical).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn suite_covers_every_id_with_unique_names() {
        let suite = default_suite();
        let ids: BTreeSet<CheckId> = suite.iter().map(|s| s.id).collect();
        assert_eq!(ids.len(), CheckId::all().len());
        let names: BTreeSet<&str> = suite.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names.len(), suite.len());
        for s in &suite {
            assert_eq!(s.scenario.as_ref().map(|c| c.flow.kind), required_flow(s.id), "{}", s.name);
            if let Some(c) = &s.scenario {
                c.validate().unwrap();
            }
        }
    }

    #[test]
    fn requests_merge_over_canonical_params() {
        let scn = geodesic(f03());
        let req: CheckRequest = serde_json::from_str(r#"{"id": "geo_wm", "params": {"tolerance": 0.01}}"#).unwrap();
        let s = CheckSpec::from_request(&req, &scn).unwrap();
        assert_eq!(s.params.tolerance, Some(0.01));
        assert_eq!(s.params.refine, Some(true));
        assert_eq!(s.params.window, None);
        let req: CheckRequest = serde_json::from_str(r#"{"id": "heat_wm"}"#).unwrap();
        assert!(CheckSpec::from_request(&req, &scn).is_err());
        assert!(serde_json::from_str::<CheckRequest>(r#"{"id": "geo_wm", "params": {"tol": 1}}"#).is_err());
    }
}
