//! ẋ = v/c, v̇ = −v/c² + ∇V(x)/c on ℝ^d.

use serde::{Deserialize, Serialize};

use super::SolverConfig;
use crate::error::{config, Result};

/// Potentials with analytic gradient and Hessian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PotentialV {
    /// V(x) = ½xᵀAx + bᵀx (A symmetrised on use).
    Quadratic { a: Vec<Vec<f64>>, b: Vec<f64> },
    /// V(x) = Σ_i Σ_k coeffs[k]·x_i^k.
    Separable { coeffs: Vec<f64> },
}

impl PotentialV {
    pub fn harmonic(d: usize) -> Self {
        let a = (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        PotentialV::Quadratic { a, b: vec![0.0; d] }
    }

    fn sym(a: &[Vec<f64>], i: usize, j: usize) -> f64 {
        0.5 * (a[i][j] + a[j][i])
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            PotentialV::Quadratic { a, b } => {
                let d = x.len();
                let mut v = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        v += 0.5 * x[i] * Self::sym(a, i, j) * x[j];
                    }
                    v += b[i] * x[i];
                }
                v
            }
            PotentialV::Separable { coeffs } => {
                x.iter().map(|&xi| coeffs.iter().enumerate().map(|(k, c)| c * xi.powi(k as i32)).sum::<f64>()).sum()
            }
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        match self {
            PotentialV::Quadratic { a, b } => {
                (0..x.len()).map(|i| (0..x.len()).map(|j| Self::sym(a, i, j) * x[j]).sum::<f64>() + b[i]).collect()
            }
            PotentialV::Separable { coeffs } => x
                .iter()
                .map(|&xi| coeffs.iter().enumerate().skip(1).map(|(k, c)| c * k as f64 * xi.powi(k as i32 - 1)).sum())
                .collect(),
        }
    }

    pub fn hess(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let d = x.len();
        match self {
            PotentialV::Quadratic { a, .. } => (0..d).map(|i| (0..d).map(|j| Self::sym(a, i, j)).collect()).collect(),
            PotentialV::Separable { coeffs } => (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| {
                            if i != j {
                                return 0.0;
                            }
                            coeffs
                                .iter()
                                .enumerate()
                                .skip(2)
                                .map(|(k, c)| c * (k * (k - 1)) as f64 * x[i].powi(k as i32 - 2))
                                .sum()
                        })
                        .collect()
                })
                .collect(),
        }
    }

    fn check(&self, d: usize) -> Result<()> {
        let ok = match self {
            PotentialV::Quadratic { a, b } => a.len() == d && a.iter().all(|r| r.len() == d) && b.len() == d,
            PotentialV::Separable { .. } => true,
        };
        if ok {
            Ok(())
        } else {
            config("potential dimension does not match x0")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteDimState {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDimTrajectory {
    pub potential: PotentialV,
    pub c: f64,
    pub states: Vec<FiniteDimState>,
}

impl FiniteDimTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }
}

fn rhs(pot: &PotentialV, c: f64, x: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let g = pot.grad(x);
    let dx = v.iter().map(|vi| vi / c).collect();
    let dv = v.iter().zip(&g).map(|(vi, gi)| -vi / (c * c) + gi / c).collect();
    (dx, dv)
}

fn shift(a: &[f64], d: &[f64], s: f64) -> Vec<f64> {
    a.iter().zip(d).map(|(x, y)| x + s * y).collect()
}

pub fn run_finite_dim(x0: &[f64], v0: &[f64], pot: &PotentialV, c: f64, cfg: &SolverConfig) -> Result<FiniteDimTrajectory> {
    cfg.validate()?;
    if x0.len() != v0.len() || x0.is_empty() {
        return config("x0 and v0 must have the same positive dimension");
    }
    if !(c > 0.0 && c.is_finite()) {
        return config("c must be finite and positive");
    }
    if x0.iter().chain(v0).any(|v| !v.is_finite()) {
        return config("non-finite initial data");
    }
    pot.check(x0.len())?;
    let h = cfg.dt;
    let (mut x, mut v) = (x0.to_vec(), v0.to_vec());
    let mut states = vec![FiniteDimState { t: cfg.t_start, x: x.clone(), v: v.clone(), c }];
    for step in 1..=cfg.steps() {
        let (a1, b1) = rhs(pot, c, &x, &v);
        let (a2, b2) = rhs(pot, c, &shift(&x, &a1, 0.5 * h), &shift(&v, &b1, 0.5 * h));
        let (a3, b3) = rhs(pot, c, &shift(&x, &a2, 0.5 * h), &shift(&v, &b2, 0.5 * h));
        let (a4, b4) = rhs(pot, c, &shift(&x, &a3, h), &shift(&v, &b3, h));
        for i in 0..x.len() {
            x[i] += h / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
            v[i] += h / 6.0 * (b1[i] + 2.0 * b2[i] + 2.0 * b3[i] + b4[i]);
        }
        if step % cfg.output_stride == 0 {
            states.push(FiniteDimState { t: cfg.t_start + step as f64 * h, x: x.clone(), v: v.clone(), c });
        }
    }
    Ok(FiniteDimTrajectory { potential: pot.clone(), c, states })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_point_is_stationary() {
        let pot = PotentialV::Separable { coeffs: vec![0.0, 0.0, 0.5, 0.0, 0.1] };
        let tr = run_finite_dim(&[0.0, 0.0], &[0.0, 0.0], &pot, 1.0, &SolverConfig::new(0.01, 0.0, 1.0, 10)).unwrap();
        assert!(tr.states.iter().all(|s| s.x == vec![0.0, 0.0] && s.v == vec![0.0, 0.0]));
    }

    #[test]
    fn harmonic_matches_eigen_solution() {
        // (ẋ, v̇) = (v, x − v): eigenvalues λ± = (−1 ± √5)/2
        let tr = run_finite_dim(&[1.0], &[0.0], &PotentialV::harmonic(1), 1.0, &SolverConfig::new(1e-3, 0.0, 1.0, 1000)).unwrap();
        let s5 = 5f64.sqrt();
        let (lp, lm) = ((-1.0 + s5) / 2.0, (-1.0 - s5) / 2.0);
        // x = A e^{λ+ t} + B e^{λ− t}, x(0)=1, ẋ(0)=0
        let a = -lm / (lp - lm);
        let b = lp / (lp - lm);
        let x1 = a * lp.exp() + b * lm.exp();
        let v1 = a * lp * lp.exp() + b * lm * lm.exp();
        let s = tr.states.last().unwrap();
        assert!((s.t - 1.0).abs() < 1e-12);
        assert!((s.x[0] - x1).abs() <= 1e-9 && (s.v[0] - v1).abs() <= 1e-9);
    }

    #[test]
    fn potential_derivatives() {
        let pot = PotentialV::Separable { coeffs: vec![1.0, 0.0, 0.5, 0.0, 0.25] };
        let x = [0.7];
        let e = 1e-5;
        let fd = (pot.value(&[x[0] + e]) - pot.value(&[x[0] - e])) / (2.0 * e);
        assert!((fd - pot.grad(&x)[0]).abs() < 1e-9);
        let fd2 = (pot.grad(&[x[0] + e])[0] - pot.grad(&[x[0] - e])[0]) / (2.0 * e);
        assert!((fd2 - pot.hess(&x)[0][0]).abs() < 1e-8);
    }
}
