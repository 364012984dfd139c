//! Solver-independent oracles and structural diagnostics.

use super::{FlowKind, FlowState, FlowTrajectory};
use crate::error::{config, domain, Result};
use crate::geometry::{ScalarField, VectorField};

/// Tolerance for "u₀ is a gradient" in potential recovery.
const CLOSED_TOL: f64 = 1e-8;

/// sup over nodes of the Frobenius norm of a packed symmetric tensor.
pub(crate) fn frobenius_sup(packed: &[Vec<f64>]) -> f64 {
    let n = packed[0].len();
    (0..n)
        .map(|i| match packed.len() {
            1 => packed[0][i].abs(),
            _ => (packed[0][i].powi(2) + 2.0 * packed[1][i].powi(2) + packed[2][i].powi(2)).sqrt(),
        })
        .fold(0.0, f64::max)
}

/// sup over nodes of |∇u| (Frobenius).
pub fn grad_u_sup(u: &VectorField) -> f64 {
    let g = u.geometry();
    let grads: Vec<Vec<Vec<f64>>> = u.components().iter().map(|c| g.grad_values(c)).collect();
    (0..g.len())
        .map(|i| grads.iter().flat_map(|ga| ga.iter().map(move |d| d[i] * d[i])).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

fn curl(u: &VectorField) -> Vec<f64> {
    let g = u.geometry();
    if g.dim() == 1 {
        return vec![0.0; g.len()];
    }
    let d1u2 = g.derivative_values(&u.components()[1], 0);
    let d2u1 = g.derivative_values(&u.components()[0], 1);
    d1u2.iter().zip(&d2u1).map(|(a, b)| a - b).collect()
}

/// ω = ∂₁u₂ − ∂₂u₁ (identically zero in 1D or for potential states).
pub fn vorticity(state: &FlowState) -> ScalarField {
    let g = state.geometry().clone();
    match state.u() {
        Some(u) => ScalarField::new(g, curl(u)).expect("shape"),
        None => ScalarField::constant(g, 0.0),
    }
}

/// (‖ω‖_{L²(μ)}, ‖ω‖_∞).
pub fn vorticity_norms(state: &FlowState) -> (f64, f64) {
    let w = vorticity(state);
    let g = w.geometry();
    let sq: Vec<f64> = w.values().iter().map(|v| v * v).collect();
    (g.integrate_mu_values(&sq).sqrt(), w.sup_norm())
}

/// sup |ω|: zero for gradient velocity fields.
pub fn closedness_defect(state: &FlowState) -> f64 {
    vorticity_norms(state).1
}

/// Brute-force Hopf–Lax: φ(x,t) = min_y φ₀(y) + d(x,y)²/(2t) over grid nodes y.
pub fn hopf_lax_oracle(phi0: &ScalarField, t: f64) -> Result<ScalarField> {
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("Hopf–Lax needs t > 0, got {t}"));
    }
    let g = phi0.geometry();
    let nodes: Vec<Vec<f64>> = (0..g.len()).map(|i| g.node(i)).collect();
    let vals = (0..g.len())
        .map(|i| {
            nodes
                .iter()
                .zip(phi0.values())
                .map(|(y, p)| {
                    let d = g.torus_distance(&nodes[i], y);
                    p + d * d / (2.0 * t)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    ScalarField::new(g.clone(), vals)
}

/// Potential recovered from an Euler trajectory by trapezoid quadrature of
/// φ(t) = e^{−γt}φ₀ + e^{−γt}∫₀ᵗ e^{γs}(γ(log ρ + 1) − |u|²/2) ds.
pub fn recover_potential(traj: &FlowTrajectory, phi0: &ScalarField) -> Result<Vec<ScalarField>> {
    let c = match traj.kind {
        FlowKind::Euler { c } => c,
        _ => return config("potential recovery needs an Euler trajectory"),
    };
    let gamma = 1.0 / (c * c);
    let first = &traj.snapshots[0];
    let g = first.geometry().clone();
    let u0 = first.u().expect("euler state");
    if closedness_defect(first) > CLOSED_TOL {
        return domain("u₀ is not a gradient field");
    }
    let grad_phi0 = g.grad_values(phi0.values());
    let mismatch = u0
        .components()
        .iter()
        .zip(&grad_phi0)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    if mismatch > 1e-6 {
        return domain(format!("u₀ differs from ∇φ₀ by {mismatch:.2e}"));
    }
    let t0 = first.t;
    let integrand = |s: &FlowState| -> Vec<f64> {
        let w = (gamma * (s.t - t0)).exp();
        let u = s.u().expect("euler state").components();
        s.rho
            .values()
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let k: f64 = u.iter().map(|c| c[i] * c[i]).sum();
                w * (gamma * (r.ln() + 1.0) - 0.5 * k)
            })
            .collect()
    };
    let mut acc = vec![0.0; g.len()];
    let mut prev = integrand(first);
    let mut out = vec![phi0.clone()];
    for w in traj.snapshots.windows(2) {
        let h = w[1].t - w[0].t;
        let cur = integrand(&w[1]);
        for ((a, p), q) in acc.iter_mut().zip(&prev).zip(&cur) {
            *a += 0.5 * h * (p + q);
        }
        let decay = (-gamma * (w[1].t - t0)).exp();
        let vals = phi0.values().iter().zip(&acc).map(|(p, a)| decay * (p + a)).collect();
        out.push(ScalarField::new(g.clone(), vals)?);
        prev = cur;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{normalize, run_euler_damped, SolverConfig};
    use crate::geometry::{build_geometry, GeometryDescriptor};
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn vorticity_of_shear_and_gradient() {
        let p = Arc::new(build_geometry(&GeometryDescriptor::plane([32, 32], vec![], None)).unwrap());
        let rho = normalize(&ScalarField::constant(p.clone(), 1.0));
        let shear = VectorField::new(p.clone(), vec![p.sample(|x| x[1].sin()), vec![0.0; p.len()]]).unwrap();
        let s = FlowState { t: 0.0, rho: rho.clone(), potential: super::super::Potential::Velocity(shear), kind: FlowKind::Euler { c: 1.0 } };
        let w = vorticity(&s);
        let want = p.sample(|x| -x[1].cos());
        assert!(w.values().iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-12));
        let phi = p.sample(|x| x[0].cos() * x[1].sin() + 0.3 * (2.0 * x[0]).sin());
        let grad = VectorField::new(p.clone(), p.grad_values(&phi)).unwrap();
        let s = FlowState { t: 0.0, rho, potential: super::super::Potential::Velocity(grad), kind: FlowKind::Euler { c: 1.0 } };
        assert!(closedness_defect(&s) <= 1e-10);
    }

    #[test]
    fn hopf_lax_limits() {
        let g = Arc::new(build_geometry(&GeometryDescriptor::line(64, vec![], None)).unwrap());
        let zero = ScalarField::constant(g.clone(), 0.0);
        assert!(hopf_lax_oracle(&zero, 0.3).unwrap().values().iter().all(|&v| v == 0.0));
        // small t on the grid: the minimiser is the node itself
        let phi0 = ScalarField::from_fn(g.clone(), |x| 0.1 * x[0].cos());
        let h = 2.0 * PI / 64.0;
        let hl = hopf_lax_oracle(&phi0, 1e-4).unwrap();
        let bound = h * 0.1;
        assert!(hl.values().iter().zip(phi0.values()).all(|(a, b)| (a - b).abs() <= bound));
        assert!(hopf_lax_oracle(&phi0, 0.0).is_err());
    }

    #[test]
    fn recovery_of_stationary_data() {
        let g = Arc::new(build_geometry(&GeometryDescriptor::line(32, vec![], None)).unwrap());
        let rho = normalize(&ScalarField::constant(g.clone(), 1.0));
        let phi0 = rho.map(|r| r.ln() + 1.0);
        let u0 = VectorField::new(g.clone(), vec![vec![0.0; g.len()]]).unwrap();
        let tr = run_euler_damped(&rho, &u0, 1.0, &SolverConfig::new(0.01, 0.0, 0.5, 1)).unwrap();
        let rec = recover_potential(&tr, &phi0).unwrap();
        let want = phi0.values()[0];
        // trapezoid error on ∫e^{γs}ds at h = 0.01
        for r in &rec {
            assert!(r.values().iter().all(|v| (v - want).abs() < 1e-5));
        }
        // nonconstant φ₀ with stationary ρ, u₀ = ∇φ₀ ≠ 0 is rejected only if mismatched
        let bad = ScalarField::from_fn(g.clone(), |x| x[0].sin());
        assert!(recover_potential(&tr, &bad).is_err());
    }
}
