//! Energy functionals of the finite-dimensional deformation and their
//! analytic derivatives.

use serde::Serialize;

use crate::flows::{FiniteDimState, PotentialV};

/// Values at one state; H = |v|²/2 + V(x), `core` = ∇²V(v,v) + |∇V|².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteDimFunctionals {
    pub h: f64,
    pub v: f64,
    /// dH/dt = −|v|²/c² + 2∇V·v/c.
    pub dh: f64,
    /// dV/dt = ∇V·v/c.
    pub dv: f64,
    /// 2|v̇|² + 2∇²V(v/c, v/c), the second derivative of H.
    pub rhs_d2h: f64,
    /// core/c², equal to (d² + c⁻²d)V.
    pub rhs_damped_v: f64,
    /// 2·core/c², equal to (d² + 2c⁻²d)H.
    pub rhs_damped_h: f64,
    pub core: f64,
    /// (1 − e^{2t/c²})·core, the slope of W_{H,c}.
    pub rhs_w_h: f64,
    /// (1 − e^{t/c²})·core, the slope of W_{V,c}.
    pub rhs_w_v: f64,
}

pub fn finite_dim_functionals(state: &FiniteDimState, pot: &PotentialV) -> FiniteDimFunctionals {
    let (x, v, c, t) = (&state.x, &state.v, state.c, state.t);
    let c2 = c * c;
    let g = pot.grad(x);
    let hs = pot.hess(x);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let vv = dot(v, v);
    let gv = dot(&g, v);
    let hvv: f64 = (0..x.len()).map(|i| (0..x.len()).map(|j| v[i] * hs[i][j] * v[j]).sum::<f64>()).sum();
    let vdot: Vec<f64> = v.iter().zip(&g).map(|(vi, gi)| -vi / c2 + gi / c).collect();
    let core = hvv + dot(&g, &g);
    let pv = pot.value(x);
    FiniteDimFunctionals {
        h: 0.5 * vv + pv,
        v: pv,
        dh: -vv / c2 + 2.0 * gv / c,
        dv: gv / c,
        rhs_d2h: 2.0 * dot(&vdot, &vdot) + 2.0 * hvv / c2,
        rhs_damped_v: core / c2,
        rhs_damped_h: 2.0 * core / c2,
        core,
        rhs_w_h: (1.0 - (2.0 * t / c2).exp()) * core,
        rhs_w_v: (1.0 - (t / c2).exp()) * core,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{run_finite_dim, SolverConfig};
    use crate::verify::fd::differentiate_series;

    fn state(x: f64, v: f64, c: f64) -> FiniteDimState {
        FiniteDimState { t: 0.0, x: vec![x], v: vec![v], c }
    }

    #[test]
    fn hand_values() {
        let f = finite_dim_functionals(&state(1.0, 0.0, 1.0), &PotentialV::harmonic(1));
        assert_eq!(f.rhs_damped_v, 1.0);
        assert_eq!(f.rhs_damped_h, 2.0);
        assert_eq!((f.h, f.dh, f.dv, f.rhs_w_h), (0.5, 0.0, 0.0, 0.0));
        let f = finite_dim_functionals(&state(0.0, 0.0, 0.7), &PotentialV::harmonic(1));
        assert_eq!((f.core, f.rhs_d2h, f.dh), (0.0, 0.0, 0.0));
    }

    #[test]
    fn identities_along_trajectory() {
        let pot = PotentialV::Separable { coeffs: vec![0.0, 0.1, 0.5, 0.0, 0.05] };
        let c = 0.8;
        let tr = run_finite_dim(&[0.6, -0.3], &[0.2, 0.4], &pot, c, &SolverConfig::new(1e-3, 0.0, 1.0, 10)).unwrap();
        let fs: Vec<_> = tr.states.iter().map(|s| finite_dim_functionals(s, &pot)).collect();
        let times = tr.times();
        let h: Vec<f64> = fs.iter().map(|f| f.h).collect();
        let v: Vec<f64> = fs.iter().map(|f| f.v).collect();
        let (dh, d2h) = (differentiate_series(&h, &times, 1).unwrap(), differentiate_series(&h, &times, 2).unwrap());
        let (dv, d2v) = (differentiate_series(&v, &times, 1).unwrap(), differentiate_series(&v, &times, 2).unwrap());
        let g = 1.0 / (c * c);
        for i in 3..fs.len() - 3 {
            assert!((dh[i] - fs[i].dh).abs() < 1e-7);
            assert!((dv[i] - fs[i].dv).abs() < 1e-7);
            assert!((d2h[i] - fs[i].rhs_d2h).abs() < 1e-6, "{} {}", d2h[i], fs[i].rhs_d2h);
            assert!((d2v[i] + g * dv[i] - fs[i].rhs_damped_v).abs() < 1e-6);
            assert!((d2h[i] + 2.0 * g * dh[i] - fs[i].rhs_damped_h).abs() < 1e-6);
        }
    }
}
