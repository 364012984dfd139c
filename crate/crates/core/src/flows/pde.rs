//! Pseudospectral right-hand sides and the shared RK4 driver.
//!
//! Transport is integrated for the Lebesgue density ρ̃ = ρe^{−f} in the
//! conservative form ∂tρ̃ = −∇·(ρ̃∇φ), which equals ∂tρ = −div_μ(ρ∇φ) but keeps
//! the zero mode (the mass) untouched by the dealiasing filter.

use std::f64::consts::PI;
use std::sync::Arc;

use super::oracles::{frobenius_sup, vorticity_norms};
use super::{Diagnostics, FlowKind, FlowState, FlowTrajectory, Potential, SolverConfig, Termination};
use crate::error::{config, domain, Result};
use crate::geometry::{ScalarField, TorusGeometry, VectorField};

type Comps = Vec<Vec<f64>>;

fn axpy(y: &Comps, k: &Comps, s: f64) -> Comps {
    y.iter().zip(k).map(|(a, b)| a.iter().zip(b).map(|(x, d)| x + s * d).collect()).collect()
}

fn rk4_step(y: &Comps, dt: f64, rhs: &impl Fn(&Comps) -> Comps) -> Comps {
    let k1 = rhs(y);
    let k2 = rhs(&axpy(y, &k1, 0.5 * dt));
    let k3 = rhs(&axpy(y, &k2, 0.5 * dt));
    let k4 = rhs(&axpy(y, &k3, dt));
    y.iter()
        .enumerate()
        .map(|(c, yc)| {
            yc.iter()
                .enumerate()
                .map(|(i, v)| v + dt / 6.0 * (k1[c][i] + 2.0 * k2[c][i] + 2.0 * k3[c][i] + k4[c][i]))
                .collect()
        })
        .collect()
}

/// Largest wavenumber the integrator can carry.
fn k_limit(geom: &TorusGeometry, cfg: &SolverConfig) -> f64 {
    if cfg.dealias {
        geom.k_max()
    } else {
        geom.periods()
            .iter()
            .zip(geom.grid())
            .map(|(l, &n)| (PI * n as f64 / l).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

fn sup_norm_vec(comps: &[Vec<f64>]) -> f64 {
    (0..comps[0].len())
        .map(|i| comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

fn check_rho0(rho0: &ScalarField, cfg: &SolverConfig) -> Result<()> {
    let g = rho0.geometry();
    if rho0.values().iter().any(|v| !(v.is_finite() && *v > cfg.rho_floor)) {
        return domain("initial density must exceed rho_floor everywhere");
    }
    let mass = g.integrate_mu_values(rho0.values());
    if (mass - 1.0).abs() > 1e-8 {
        return domain(format!("initial density has mass {mass}, expected 1"));
    }
    Ok(())
}

fn same_geometry(a: &Arc<TorusGeometry>, b: &Arc<TorusGeometry>) -> Result<()> {
    if Arc::ptr_eq(a, b) {
        Ok(())
    } else {
        config("initial fields live on different geometries")
    }
}

struct Driver<'a> {
    geom: &'a Arc<TorusGeometry>,
    cfg: &'a SolverConfig,
    kind: FlowKind,
}

impl Driver<'_> {
    fn filter(&self, mut out: Comps) -> Comps {
        if self.cfg.dealias {
            out = out.iter().map(|c| self.geom.dealias_values(c)).collect();
        }
        out
    }

    fn state(&self, t: f64, y: &Comps) -> FlowState {
        let g = self.geom;
        let rho: Vec<f64> = y[0].iter().zip(g.f()).map(|(r, f)| r * f.exp()).collect();
        let rho = ScalarField::new(g.clone(), rho).expect("shape");
        let potential = match self.kind {
            FlowKind::Heat => Potential::None,
            FlowKind::Euler { .. } => Potential::Velocity(VectorField::new(g.clone(), y[1..].to_vec()).expect("shape")),
            _ => Potential::Phi(ScalarField::new(g.clone(), y[1].clone()).expect("shape")),
        };
        FlowState { t, rho, potential, kind: self.kind }
    }

    fn diagnostics(&self, s: &FlowState, y: &Comps) -> Diagnostics {
        let g = self.geom;
        let hess_sup = match &s.potential {
            Potential::Phi(p) => frobenius_sup(&g.hess_values(p.values())),
            Potential::Velocity(u) => super::oracles::grad_u_sup(u),
            Potential::None => {
                let lr: Vec<f64> = s.rho.values().iter().map(|v| v.ln()).collect();
                frobenius_sup(&g.hess_values(&lr))
            }
        };
        let (vorticity_l2, vorticity_sup) = match s.u() {
            Some(_) => vorticity_norms(s),
            None => (0.0, 0.0),
        };
        let tail = y.iter().map(|c| g.tail_ratio(c)).fold(0.0, f64::max);
        Diagnostics {
            t: s.t,
            min_rho: s.rho.min(),
            mass: g.integrate_mu_values(s.rho.values()),
            hess_sup,
            vorticity_l2,
            vorticity_sup,
            tail,
        }
    }

    fn run(&self, y0: Comps, rhs: impl Fn(&Comps) -> Comps) -> FlowTrajectory {
        let cfg = self.cfg;
        let g = self.geom;
        let mut y = self.filter(y0);
        let s0 = self.state(cfg.t_start, &y);
        let d0 = self.diagnostics(&s0, &y);
        let mut traj = FlowTrajectory {
            kind: self.kind,
            config: cfg.clone(),
            snapshots: vec![s0],
            diagnostics: vec![d0],
            termination: Termination::Completed,
            steps_taken: 0,
        };
        let steps = cfg.steps();
        for step in 1..=steps {
            let next = rk4_step(&y, cfg.dt, &rhs);
            traj.steps_taken = step;
            if next.iter().any(|c| c.iter().any(|v| !v.is_finite())) {
                traj.termination = Termination::BlowUp;
                break;
            }
            if next[0].iter().zip(g.f()).any(|(r, f)| r * f.exp() <= cfg.rho_floor) {
                traj.termination = Termination::RhoFloor;
                break;
            }
            y = next;
            if step % cfg.output_stride == 0 {
                let s = self.state(cfg.t_start + step as f64 * cfg.dt, &y);
                let d = self.diagnostics(&s, &y);
                if d.hess_sup > cfg.hess_ceiling {
                    traj.termination = Termination::HessCeiling;
                    break;
                }
                if d.tail > cfg.tail_ceiling {
                    traj.termination = Termination::BlowUp;
                    break;
                }
                traj.snapshots.push(s);
                traj.diagnostics.push(d);
            }
        }
        traj
    }
}

/// ∂tρ = Lρ, i.e. ∂tρ̃ = ∇·(∇ρ̃ + ρ̃∇f).
pub fn run_heat(rho0: &ScalarField, cfg: &SolverConfig) -> Result<FlowTrajectory> {
    cfg.validate()?;
    check_rho0(rho0, cfg)?;
    let g = rho0.geometry();
    let k = k_limit(g, cfg);
    let drift = sup_norm_vec(g.grad_f());
    if cfg.dt * (k * k + k * drift) > 2.5 {
        return config(format!("dt = {} violates the diffusive RK4 bound 2.5/(k²+k|∇f|) with k = {k:.1}", cfg.dt));
    }
    let drv = Driver { geom: g, cfg, kind: FlowKind::Heat };
    let y0 = vec![lebesgue(rho0)];
    Ok(drv.run(y0, |y| {
        let grad = g.grad_values(&y[0]);
        let flux: Comps = grad
            .iter()
            .enumerate()
            .map(|(a, d)| d.iter().zip(&y[0]).zip(&g.grad_f()[a]).map(|((d, r), gf)| d + r * gf).collect())
            .collect();
        drv.filter(vec![g.divergence_values(&flux)])
    }))
}

fn lebesgue(rho: &ScalarField) -> Vec<f64> {
    rho.values().iter().zip(rho.geometry().density()).map(|(r, w)| r * w).collect()
}

/// −∇·(ρ̃ v).
fn transport(g: &TorusGeometry, rt: &[f64], v: &[Vec<f64>]) -> Vec<f64> {
    let flux: Comps = v.iter().map(|c| c.iter().zip(rt).map(|(a, r)| a * r).collect()).collect();
    g.divergence_values(&flux).into_iter().map(|x| -x).collect()
}

fn half_sq(v: &[Vec<f64>]) -> Vec<f64> {
    (0..v[0].len()).map(|i| 0.5 * v.iter().map(|c| c[i] * c[i]).sum::<f64>()).collect()
}

/// Wasserstein geodesic: ∂tρ + div_μ(ρ∇φ) = 0, ∂tφ + |∇φ|²/2 = 0.
pub fn run_geodesic(rho0: &ScalarField, phi0: &ScalarField, cfg: &SolverConfig) -> Result<FlowTrajectory> {
    cfg.validate()?;
    check_rho0(rho0, cfg)?;
    let g = rho0.geometry();
    same_geometry(g, phi0.geometry())?;
    let k = k_limit(g, cfg);
    let speed = sup_norm_vec(&g.grad_values(phi0.values()));
    if cfg.dt * k * speed > 1.0 {
        return config(format!("dt = {} violates the advective CFL bound (k = {k:.1}, |∇φ₀| = {speed:.3})", cfg.dt));
    }
    let drv = Driver { geom: g, cfg, kind: FlowKind::Geodesic };
    let y0 = vec![lebesgue(rho0), phi0.values().to_vec()];
    Ok(drv.run(y0, |y| {
        let v = g.grad_values(&y[1]);
        let dphi = half_sq(&v).into_iter().map(|x| -x).collect();
        drv.filter(vec![transport(g, &y[0], &v), dphi])
    }))
}

fn check_finite_c(c: f64, cfg: &SolverConfig, k: f64, speed: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return config(format!("coupling c = {c} must be finite and positive"));
    }
    let relax = 0.5 * c * c;
    let wave = 2.0 * c / k;
    let adv = if speed > 0.0 { 1.0 / (k * speed) } else { f64::INFINITY };
    let bound = relax.min(wave).min(adv);
    if cfg.dt > bound {
        return config(format!(
            "dt = {} exceeds min(c²/2 = {relax:.3e}, 2c/k = {wave:.3e}, 1/(k|u|) = {adv:.3e})",
            cfg.dt
        ));
    }
    Ok(())
}

/// Langevin deformation: transport plus c²(∂tφ + |∇φ|²/2) = −φ + log ρ + 1.
pub fn run_langevin(rho0: &ScalarField, phi0: &ScalarField, c: f64, cfg: &SolverConfig) -> Result<FlowTrajectory> {
    cfg.validate()?;
    check_rho0(rho0, cfg)?;
    let g = rho0.geometry();
    same_geometry(g, phi0.geometry())?;
    let k = k_limit(g, cfg);
    check_finite_c(c, cfg, k, sup_norm_vec(&g.grad_values(phi0.values())))?;
    let gamma = 1.0 / (c * c);
    let drv = Driver { geom: g, cfg, kind: FlowKind::Langevin { c } };
    let y0 = vec![lebesgue(rho0), phi0.values().to_vec()];
    Ok(drv.run(y0, |y| {
        let v = g.grad_values(&y[1]);
        let dphi = half_sq(&v)
            .into_iter()
            .zip(&y[1])
            .zip(&y[0])
            .zip(g.f())
            .map(|(((k, p), r), f)| -k + gamma * (-p + r.ln() + f + 1.0))
            .collect();
        drv.filter(vec![transport(g, &y[0], &v), dphi])
    }))
}

/// Damped compressible Euler: transport plus ∂tu + u·∇u = −γu + γ∇ρ/ρ.
pub fn run_euler_damped(rho0: &ScalarField, u0: &VectorField, c: f64, cfg: &SolverConfig) -> Result<FlowTrajectory> {
    cfg.validate()?;
    check_rho0(rho0, cfg)?;
    let g = rho0.geometry();
    same_geometry(g, u0.geometry())?;
    let k = k_limit(g, cfg);
    check_finite_c(c, cfg, k, sup_norm_vec(u0.components()))?;
    let gamma = 1.0 / (c * c);
    let dim = g.dim();
    let drv = Driver { geom: g, cfg, kind: FlowKind::Euler { c } };
    let mut y0 = vec![lebesgue(rho0)];
    y0.extend(u0.components().iter().cloned());
    Ok(drv.run(y0, |y| {
        let u = &y[1..];
        let grad_rho = g.grad_values(&y[0]);
        let mut out = vec![transport(g, &y[0], u)];
        for a in 0..dim {
            let du = g.grad_values(&u[a]);
            let comp = (0..g.len())
                .map(|i| {
                    let adv: f64 = (0..dim).map(|b| u[b][i] * du[b][i]).sum();
                    let glog = grad_rho[a][i] / y[0][i] + g.grad_f()[a][i];
                    -adv - gamma * u[a][i] + gamma * glog
                })
                .collect();
            out.push(comp);
        }
        drv.filter(out)
    }))
}
