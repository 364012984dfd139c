//! Fixed-step RK4 integration of the heat, geodesic, Langevin and damped
//! Euler flows, plus the independent oracles used to cross-check them.

mod finite_dim;
mod oracles;
mod pde;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::geometry::{ScalarField, TorusGeometry, VectorField};

pub use finite_dim::{run_finite_dim, FiniteDimState, FiniteDimTrajectory, PotentialV};
pub use oracles::{closedness_defect, grad_u_sup, hopf_lax_oracle, recover_potential, vorticity, vorticity_norms};
pub use pde::{run_euler_damped, run_geodesic, run_heat, run_langevin};

fn d_t_start() -> f64 {
    0.0
}
fn d_stride() -> usize {
    1
}
fn d_rho_floor() -> f64 {
    1e-10
}
fn d_hess_ceiling() -> f64 {
    1e3
}
fn d_true() -> bool {
    true
}
fn d_tail() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "d_t_start")]
    pub t_start: f64,
    #[serde(default = "d_stride")]
    pub output_stride: usize,
    #[serde(default = "d_rho_floor")]
    pub rho_floor: f64,
    #[serde(default = "d_hess_ceiling")]
    pub hess_ceiling: f64,
    #[serde(default = "d_true")]
    pub dealias: bool,
    /// Spectral-tail blow-up threshold (upper half of the retained band
    /// relative to the largest coefficient).
    #[serde(default = "d_tail")]
    pub tail_ceiling: f64,
}

impl SolverConfig {
    pub fn new(dt: f64, t_start: f64, t_end: f64, output_stride: usize) -> Self {
        Self {
            dt,
            t_end,
            t_start,
            output_stride,
            rho_floor: d_rho_floor(),
            hess_ceiling: d_hess_ceiling(),
            dealias: true,
            tail_ceiling: d_tail(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let span = self.t_end - self.t_start;
        if !(self.dt > 0.0 && self.dt.is_finite() && self.t_start.is_finite() && self.t_end.is_finite()) {
            return config("dt, t_start, t_end must be finite with dt > 0");
        }
        if !(self.dt < span) {
            return config(format!("dt = {} must be smaller than t_end − t_start = {span}", self.dt));
        }
        if self.output_stride == 0 {
            return config("output_stride must be >= 1");
        }
        if !(self.rho_floor > 0.0 && self.hess_ceiling > 0.0 && self.tail_ceiling > 0.0) {
            return config("rho_floor, hess_ceiling, tail_ceiling must be positive");
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt).round() as usize
    }

    /// Output spacing dt·stride.
    pub fn output_dt(&self) -> f64 {
        self.dt * self.output_stride as f64
    }

    /// Half the step with the same stride, so the finite-difference output
    /// grid is refined together with the integrator.
    pub fn refined(&self) -> Self {
        let mut c = self.clone();
        c.dt *= 0.5;
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlowKind {
    Heat,
    Geodesic,
    Langevin { c: f64 },
    Euler { c: f64 },
    FiniteDim { c: f64 },
}

impl FlowKind {
    pub fn name(&self) -> &'static str {
        match self {
            FlowKind::Heat => "heat",
            FlowKind::Geodesic => "geodesic",
            FlowKind::Langevin { .. } => "langevin",
            FlowKind::Euler { .. } => "euler",
            FlowKind::FiniteDim { .. } => "finite_dim",
        }
    }
    pub fn c(&self) -> Option<f64> {
        match *self {
            FlowKind::Langevin { c } | FlowKind::Euler { c } | FlowKind::FiniteDim { c } => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Potential {
    /// Heat flow carries no independent potential.
    None,
    Phi(ScalarField),
    Velocity(VectorField),
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    /// Density with respect to μ.
    pub rho: ScalarField,
    pub potential: Potential,
    pub kind: FlowKind,
}

impl FlowState {
    pub fn phi(&self) -> Option<&ScalarField> {
        match &self.potential {
            Potential::Phi(p) => Some(p),
            _ => None,
        }
    }
    pub fn u(&self) -> Option<&VectorField> {
        match &self.potential {
            Potential::Velocity(u) => Some(u),
            _ => None,
        }
    }
    pub fn geometry(&self) -> &Arc<TorusGeometry> {
        self.rho.geometry()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    BlowUp,
    RhoFloor,
    HessCeiling,
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::BlowUp => "blow_up",
            Termination::RhoFloor => "rho_floor",
            Termination::HessCeiling => "hess_ceiling",
        }
    }
}

/// Per-snapshot diagnostics exported with every trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub t: f64,
    pub min_rho: f64,
    pub mass: f64,
    /// sup ‖Hess φ‖ (Euler: sup ‖∇u‖, heat: sup ‖Hess log ρ‖).
    pub hess_sup: f64,
    pub vorticity_l2: f64,
    pub vorticity_sup: f64,
    pub tail: f64,
}

#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub kind: FlowKind,
    pub config: SolverConfig,
    pub snapshots: Vec<FlowState>,
    pub diagnostics: Vec<Diagnostics>,
    pub termination: Termination,
    pub steps_taken: usize,
}

impl FlowTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }
    pub fn last(&self) -> &FlowState {
        self.snapshots.last().expect("trajectory always holds the initial state")
    }
    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }
}

/// ρ / ∫ρ dμ.
pub fn normalize(rho: &ScalarField) -> ScalarField {
    let mass = rho.geometry().integrate_mu_values(rho.values());
    rho.map(|v| v / mass)
}
