//! Weighted flat tori, spectral calculus and Bakry–Émery tensors.
//!
//! The weight `f` is a finite trigonometric polynomial
//! `f(x) = Σ cos_j·cos(k_j·θ) + sin_j·sin(k_j·θ)` with `θ_i = 2π x_i / L_i`,
//! so `f`, `∇f` and `Hess f` are sampled analytically.

mod field;
mod spectral;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};
pub use field::{div_mu, grad, hess, integrate_mu, witten_laplacian, ScalarField, SymTensorField, VectorField};
pub(crate) use spectral::Spectral;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierTerm {
    pub k: Vec<i32>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

impl FourierTerm {
    pub fn cos(k: &[i32], a: f64) -> Self {
        Self { k: k.to_vec(), cos: a, sin: 0.0 }
    }
    pub fn sin(k: &[i32], a: f64) -> Self {
        Self { k: k.to_vec(), cos: 0.0, sin: a }
    }
}

fn default_periods() -> Option<Vec<f64>> {
    None
}

/// JSON-facing geometry description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryDescriptor {
    pub dim: usize,
    #[serde(default = "default_periods", skip_serializing_if = "Option::is_none")]
    pub periods: Option<Vec<f64>>,
    pub grid: Vec<usize>,
    #[serde(default)]
    pub f_coeffs: Vec<FourierTerm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
}

impl GeometryDescriptor {
    /// 1D torus of period 2π.
    pub fn line(n: usize, f_coeffs: Vec<FourierTerm>, m: Option<f64>) -> Self {
        Self { dim: 1, periods: None, grid: vec![n], f_coeffs, m }
    }

    pub fn plane(n: [usize; 2], f_coeffs: Vec<FourierTerm>, m: Option<f64>) -> Self {
        Self { dim: 2, periods: None, grid: n.to_vec(), f_coeffs, m }
    }

    /// Same geometry with every grid size doubled.
    pub fn refined(&self) -> Self {
        let mut d = self.clone();
        d.grid.iter_mut().for_each(|n| *n *= 2);
        d
    }
}

#[derive(Debug)]
pub struct TorusGeometry {
    dim: usize,
    periods: Vec<f64>,
    grid: Vec<usize>,
    weight: Vec<FourierTerm>,
    m: Option<f64>,
    f: Vec<f64>,
    grad_f: Vec<Vec<f64>>,
    hess_f: Vec<Vec<f64>>,
    density: Vec<f64>,
    cell_volume: f64,
    spectral: Spectral,
}

pub fn build_geometry(desc: &GeometryDescriptor) -> Result<TorusGeometry> {
    TorusGeometry::new(desc)
}

impl TorusGeometry {
    pub fn new(desc: &GeometryDescriptor) -> Result<Self> {
        let dim = desc.dim;
        if !(1..=2).contains(&dim) {
            return config(format!("dim must be 1 or 2, got {dim}"));
        }
        if desc.grid.len() != dim {
            return config(format!("grid has {} entries for dim {dim}", desc.grid.len()));
        }
        for &n in &desc.grid {
            if n < 16 || n % 2 != 0 {
                return config(format!("grid size {n} must be even and >= 16"));
            }
        }
        let periods = desc.periods.clone().unwrap_or_else(|| vec![2.0 * PI; dim]);
        if periods.len() != dim || periods.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return config("periods must be dim positive finite reals");
        }
        for t in &desc.f_coeffs {
            if t.k.len() != dim {
                return config(format!("weight wavevector {:?} has wrong length", t.k));
            }
            if !(t.cos.is_finite() && t.sin.is_finite()) {
                return config("non-finite weight coefficient");
            }
        }
        if let Some(m) = desc.m {
            if !m.is_finite() {
                return config("m must be finite");
            }
        }

        let len: usize = desc.grid.iter().product();
        let mut geom = TorusGeometry {
            dim,
            grid: desc.grid.clone(),
            weight: desc.f_coeffs.clone(),
            m: desc.m,
            f: Vec::with_capacity(len),
            grad_f: vec![Vec::with_capacity(len); dim],
            hess_f: vec![Vec::with_capacity(len); dim * (dim + 1) / 2],
            density: Vec::with_capacity(len),
            cell_volume: 0.0,
            spectral: Spectral::new(&desc.grid, &periods),
            periods,
        };
        geom.cell_volume = geom.periods.iter().zip(&geom.grid).map(|(l, &n)| l / n as f64).product();
        for idx in 0..len {
            let x = geom.node(idx);
            let f = geom.eval_f(&x);
            geom.f.push(f);
            geom.density.push((-f).exp());
            for (a, g) in geom.eval_grad_f(&x).into_iter().enumerate() {
                geom.grad_f[a].push(g);
            }
            for (a, h) in geom.eval_hess_f(&x).into_iter().enumerate() {
                geom.hess_f[a].push(h);
            }
        }
        Ok(geom)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn periods(&self) -> &[f64] {
        &self.periods
    }
    pub fn grid(&self) -> &[usize] {
        &self.grid
    }
    pub fn len(&self) -> usize {
        self.f.len()
    }
    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }
    pub fn weight(&self) -> &[FourierTerm] {
        &self.weight
    }
    /// Synthetic dimension from the descriptor, if given.
    pub fn m(&self) -> Option<f64> {
        self.m
    }
    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }
    pub fn f(&self) -> &[f64] {
        &self.f
    }
    pub fn grad_f(&self) -> &[Vec<f64>] {
        &self.grad_f
    }
    /// Packed upper triangle of Hess f.
    pub fn hess_f(&self) -> &[Vec<f64>] {
        &self.hess_f
    }
    /// e^{-f} at the nodes.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Coordinates of a node in the fundamental domain [0, L).
    pub fn node(&self, idx: usize) -> Vec<f64> {
        match self.dim {
            1 => vec![idx as f64 * self.periods[0] / self.grid[0] as f64],
            _ => {
                let (i, j) = (idx / self.grid[1], idx % self.grid[1]);
                vec![
                    i as f64 * self.periods[0] / self.grid[0] as f64,
                    j as f64 * self.periods[1] / self.grid[1] as f64,
                ]
            }
        }
    }

    /// Sample a function of position at every node.
    pub fn sample(&self, g: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|i| g(&self.node(i))).collect()
    }

    fn phase(&self, t: &FourierTerm, x: &[f64]) -> f64 {
        (0..self.dim).map(|a| 2.0 * PI * t.k[a] as f64 * x[a] / self.periods[a]).sum()
    }

    fn wave(&self, t: &FourierTerm, a: usize) -> f64 {
        2.0 * PI * t.k[a] as f64 / self.periods[a]
    }

    pub fn eval_f(&self, x: &[f64]) -> f64 {
        self.eval_trig(&self.weight, x)
    }

    /// Σ cos_j·cos(k_j·θ) + sin_j·sin(k_j·θ) with this torus's periods.
    pub fn eval_trig(&self, terms: &[FourierTerm], x: &[f64]) -> f64 {
        terms
            .iter()
            .map(|t| {
                let p = self.phase(t, x);
                t.cos * p.cos() + t.sin * p.sin()
            })
            .sum()
    }

    pub fn eval_grad_f(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for t in &self.weight {
            let p = self.phase(t, x);
            let d = -t.cos * p.sin() + t.sin * p.cos();
            for (a, ga) in g.iter_mut().enumerate() {
                *ga += self.wave(t, a) * d;
            }
        }
        g
    }

    pub fn eval_hess_f(&self, x: &[f64]) -> Vec<f64> {
        let mut h = vec![0.0; self.dim * (self.dim + 1) / 2];
        for t in &self.weight {
            let p = self.phase(t, x);
            let v = -(t.cos * p.cos() + t.sin * p.sin());
            let mut slot = 0;
            for a in 0..self.dim {
                for b in a..self.dim {
                    h[slot] += self.wave(t, a) * self.wave(t, b) * v;
                    slot += 1;
                }
            }
        }
        h
    }

    /// True when every non-zero wavevector carries zero coefficients.
    pub fn f_is_constant(&self) -> bool {
        self.weight.iter().all(|t| t.k.iter().all(|&k| k == 0) || (t.cos == 0.0 && t.sin == 0.0))
    }

    /// Largest wavenumber kept by the 2/3 rule.
    pub fn k_max(&self) -> f64 {
        self.spectral.k_max(&self.periods)
    }

    /// Uniform grid spacing per axis.
    pub fn spacing(&self) -> Vec<f64> {
        self.periods.iter().zip(&self.grid).map(|(l, &n)| l / n as f64).collect()
    }

    // ---- slice-level calculus, used by the integrators ----

    pub fn grad_values(&self, v: &[f64]) -> Vec<Vec<f64>> {
        self.spectral.gradient(v)
    }

    pub fn hess_values(&self, v: &[f64]) -> Vec<Vec<f64>> {
        self.spectral.hessian(v)
    }

    pub fn derivative_values(&self, v: &[f64], axis: usize) -> Vec<f64> {
        self.spectral.derivative(v, axis)
    }

    /// Flat divergence ∇·X.
    pub fn divergence_values(&self, comps: &[Vec<f64>]) -> Vec<f64> {
        self.spectral.divergence(comps)
    }

    /// div_μ X = ∇·X − ⟨∇f, X⟩.
    pub fn div_mu_values(&self, comps: &[Vec<f64>]) -> Vec<f64> {
        let mut d = self.divergence_values(comps);
        for (a, c) in comps.iter().enumerate() {
            for ((di, gi), ci) in d.iter_mut().zip(&self.grad_f[a]).zip(c) {
                *di -= gi * ci;
            }
        }
        d
    }

    /// L h = Δh − ⟨∇f, ∇h⟩.
    pub fn witten_laplacian_values(&self, h: &[f64]) -> Vec<f64> {
        let hess = self.hess_values(h);
        let grad = self.grad_values(h);
        let mut out = vec![0.0; self.len()];
        for (i, o) in out.iter_mut().enumerate() {
            let lap = match self.dim {
                1 => hess[0][i],
                _ => hess[0][i] + hess[2][i],
            };
            let drift: f64 = (0..self.dim).map(|a| self.grad_f[a][i] * grad[a][i]).sum();
            *o = lap - drift;
        }
        out
    }

    pub fn dealias_values(&self, v: &[f64]) -> Vec<f64> {
        self.spectral.dealias(v)
    }

    pub fn tail_ratio(&self, v: &[f64]) -> f64 {
        self.spectral.tail_ratio(v)
    }

    /// ∫ h dμ as a grid sum.
    pub fn integrate_mu_values(&self, h: &[f64]) -> f64 {
        h.iter().zip(&self.density).map(|(a, w)| a * w).sum::<f64>() * self.cell_volume
    }

    /// ∫ h dx (Lebesgue).
    pub fn integrate_values(&self, h: &[f64]) -> f64 {
        h.iter().sum::<f64>() * self.cell_volume
    }

    /// Periodic distance between two points of the fundamental domain.
    pub fn torus_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.dim)
            .map(|a| {
                let d = (x[a] - y[a]).abs().rem_euclid(self.periods[a]);
                let d = d.min(self.periods[a] - d);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

pub fn torus_distance(geom: &TorusGeometry, x: &[f64], y: &[f64]) -> f64 {
    geom.torus_distance(x, y)
}

fn check_m(geom: &TorusGeometry, m: f64) -> Result<()> {
    let n = geom.dim as f64;
    if !m.is_finite() || m < n {
        return domain(format!("synthetic dimension m = {m} must be >= n = {n}"));
    }
    if m == n && !geom.f_is_constant() {
        return domain("m = n requires a constant weight f");
    }
    Ok(())
}

/// Ric_{m,n}(L) = Hess f − ∇f⊗∇f/(m−n) on the flat torus, packed.
pub fn bakry_emery_values(geom: &TorusGeometry, m: f64) -> Result<Vec<Vec<f64>>> {
    check_m(geom, m)?;
    let n = geom.dim as f64;
    let mut out = geom.hess_f.clone();
    if m > n {
        let inv = 1.0 / (m - n);
        let mut slot = 0;
        for a in 0..geom.dim {
            for b in a..geom.dim {
                for (i, v) in out[slot].iter_mut().enumerate() {
                    *v -= geom.grad_f[a][i] * geom.grad_f[b][i] * inv;
                }
                slot += 1;
            }
        }
    }
    Ok(out)
}

/// Smallest eigenvalue of a packed symmetric 1×1 or 2×2 tensor.
pub(crate) fn min_eigen(packed: &[f64]) -> f64 {
    match packed.len() {
        1 => packed[0],
        _ => {
            let (a, b, c) = (packed[0], packed[1], packed[2]);
            let mean = 0.5 * (a + c);
            let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            mean - r
        }
    }
}

pub fn bakry_emery(geom: &std::sync::Arc<TorusGeometry>, m: f64) -> Result<SymTensorField> {
    let comps = bakry_emery_values(geom, m)?;
    SymTensorField::new(geom.clone(), comps)
}

/// K_eff: minimum over nodes of the smallest eigenvalue of Ric_{m,n}(L).
pub fn cd_lower_bound(geom: &TorusGeometry, m: f64) -> Result<f64> {
    let comps = bakry_emery_values(geom, m)?;
    let mut k = f64::INFINITY;
    let mut buf = vec![0.0; comps.len()];
    for i in 0..geom.len() {
        for (s, c) in buf.iter_mut().zip(&comps) {
            *s = c[i];
        }
        k = k.min(min_eigen(&buf));
    }
    if k.is_finite() {
        Ok(k)
    } else {
        Err(Error::Numeric("non-finite curvature".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn line(n: usize, f: &[(i32, f64)]) -> Arc<TorusGeometry> {
        let terms = f.iter().map(|&(k, a)| FourierTerm::cos(&[k], a)).collect();
        Arc::new(build_geometry(&GeometryDescriptor::line(n, terms, None)).unwrap())
    }

    fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn rejects_bad_grids() {
        for grid in [vec![15], vec![8], vec![17]] {
            let d = GeometryDescriptor { dim: 1, periods: None, grid, f_coeffs: vec![], m: None };
            assert!(matches!(build_geometry(&d), Err(Error::Config(_))));
        }
        let d = GeometryDescriptor::line(32, vec![FourierTerm::cos(&[1], f64::NAN)], None);
        assert!(matches!(build_geometry(&d), Err(Error::Config(_))));
    }

    #[test]
    fn flat_weight_is_unit_density() {
        let g = line(64, &[]);
        assert!(g.density().iter().all(|&w| w == 1.0));
    }

    #[test]
    fn weight_derivatives_match_hand_values() {
        let g = line(64, &[(1, 0.3)]);
        assert!((g.hess_f()[0][0] + 0.3).abs() < 1e-15);
        let g2 = Arc::new(
            build_geometry(&GeometryDescriptor::plane(
                [64, 64],
                vec![FourierTerm::cos(&[1, 0], 0.2), FourierTerm::cos(&[0, 1], 0.1)],
                None,
            ))
            .unwrap(),
        );
        assert_eq!(g2.grad_f()[0][0], 0.0);
        assert_eq!(g2.grad_f()[1][0], 0.0);
        // spectral derivative of the sampled f agrees with the analytic one
        let d = g.grad_values(g.f());
        assert!(sup_diff(&d[0], &g.grad_f()[0]) < 1e-13);
    }

    #[test]
    fn spectral_derivatives_of_trig_polynomials() {
        let g = line(64, &[]);
        let phi = g.sample(|x| (3.0 * x[0]).cos());
        let want = g.sample(|x| -3.0 * (3.0 * x[0]).sin());
        assert!(sup_diff(&g.grad_values(&phi)[0], &want) < 1e-12);
        // every mode up to N/3
        for k in 1..=21 {
            let phi = g.sample(|x| (k as f64 * x[0]).sin());
            let want = g.sample(|x| k as f64 * (k as f64 * x[0]).cos());
            assert!(sup_diff(&g.grad_values(&phi)[0], &want) < 1e-11, "k={k}");
        }
        let p = Arc::new(build_geometry(&GeometryDescriptor::plane([32, 32], vec![], None)).unwrap());
        let phi = p.sample(|x| x[0].sin() + x[1].sin());
        let h = p.hess_values(&phi);
        assert!(sup_diff(&h[0], &p.sample(|x| -x[0].sin())) < 1e-12);
        assert!(h[1].iter().all(|v| v.abs() < 1e-12));
        assert!(sup_diff(&h[2], &p.sample(|x| -x[1].sin())) < 1e-12);
    }

    #[test]
    fn weighted_divergence_and_witten_laplacian() {
        let g = line(64, &[]);
        let x = g.sample(|x| x[0].cos());
        assert!(sup_diff(&g.div_mu_values(&[x]), &g.sample(|x| -x[0].sin())) < 1e-12);
        let g = line(64, &[(1, 1.0)]);
        let one = vec![1.0; g.len()];
        assert!(sup_diff(&g.div_mu_values(&[one]), &g.sample(|x| x[0].sin())) < 1e-13);
        let h = g.sample(|x| x[0].sin());
        let want = g.sample(|x| -x[0].sin() + x[0].sin() * x[0].cos());
        let lh = g.witten_laplacian_values(&h);
        assert!(sup_diff(&lh, &want) < 1e-12);
        let via_div = g.div_mu_values(&g.grad_values(&h));
        assert!(sup_diff(&lh, &via_div) < 1e-10);
        let c = vec![2.5; g.len()];
        assert!(g.witten_laplacian_values(&c).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn weighted_integrals() {
        let g = line(64, &[]);
        assert!((g.integrate_mu_values(&vec![1.0; 64]) - 2.0 * PI).abs() < 1e-13);
        assert!(g.integrate_mu_values(&g.sample(|x| x[0].cos())).abs() < 1e-12);
        // 2π I₀(1); N=64 is already converged for this analytic integrand
        let g = line(64, &[(1, 1.0)]);
        assert!((g.integrate_mu_values(&vec![1.0; 64]) - 7.954_926_521_012_845).abs() < 1e-12);
    }

    #[test]
    fn distances_wrap() {
        let g = line(32, &[]);
        assert_eq!(g.torus_distance(&[0.0], &[0.0]), 0.0);
        assert!((g.torus_distance(&[0.1], &[2.0 * PI - 0.1]) - 0.2).abs() < 1e-14);
        let p = build_geometry(&GeometryDescriptor::plane([16, 16], vec![], None)).unwrap();
        assert!((p.torus_distance(&[0.0, 0.0], &[PI, PI]) - PI * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn curvature_bounds() {
        let g = line(64, &[]);
        assert_eq!(cd_lower_bound(&g, 1.0).unwrap(), 0.0);
        assert_eq!(cd_lower_bound(&g, 3.0).unwrap(), 0.0);
        let g = line(64, &[(1, 1.0)]);
        let ric = bakry_emery(&g, 3.0).unwrap();
        assert!((ric.components()[0][0] + 1.0).abs() < 1e-15);
        assert!(matches!(cd_lower_bound(&g, 1.0), Err(Error::Domain(_))));
        assert!(matches!(cd_lower_bound(&g, 0.5), Err(Error::Domain(_))));
        let g = line(128, &[(1, 0.3)]);
        let k = cd_lower_bound(&g, 3.0).unwrap();
        assert!(k < 0.0);
        assert!((k + 0.3).abs() < 1e-12);
    }

    #[test]
    fn min_eigen_of_2x2() {
        assert!((min_eigen(&[2.0, 0.0, 1.0]) - 1.0).abs() < 1e-15);
        assert!((min_eigen(&[0.0, 1.0, 0.0]) + 1.0).abs() < 1e-15);
    }
}
