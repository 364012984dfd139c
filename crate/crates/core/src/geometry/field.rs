use std::sync::Arc;

use super::TorusGeometry;
use crate::error::{config, Error, Result};

#[derive(Debug, Clone)]
pub struct ScalarField {
    geom: Arc<TorusGeometry>,
    values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct VectorField {
    geom: Arc<TorusGeometry>,
    components: Vec<Vec<f64>>,
}

/// Symmetric tensor, packed upper triangle (`[h00]` or `[h00, h01, h11]`).
#[derive(Debug, Clone)]
pub struct SymTensorField {
    geom: Arc<TorusGeometry>,
    components: Vec<Vec<f64>>,
}

impl ScalarField {
    pub fn new(geom: Arc<TorusGeometry>, values: Vec<f64>) -> Result<Self> {
        if values.len() != geom.len() {
            return config(format!("scalar field has {} values, grid has {}", values.len(), geom.len()));
        }
        Ok(Self { geom, values })
    }

    pub fn from_fn(geom: Arc<TorusGeometry>, g: impl Fn(&[f64]) -> f64) -> Self {
        let values = geom.sample(g);
        Self { geom, values }
    }

    pub fn constant(geom: Arc<TorusGeometry>, c: f64) -> Self {
        let values = vec![c; geom.len()];
        Self { geom, values }
    }

    pub fn geometry(&self) -> &Arc<TorusGeometry> {
        &self.geom
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
    pub fn map(&self, g: impl Fn(f64) -> f64) -> Self {
        Self { geom: self.geom.clone(), values: self.values.iter().map(|&v| g(v)).collect() }
    }
}

impl VectorField {
    pub fn new(geom: Arc<TorusGeometry>, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != geom.dim() || components.iter().any(|c| c.len() != geom.len()) {
            return config("vector field shape does not match geometry");
        }
        Ok(Self { geom, components })
    }
    pub fn geometry(&self) -> &Arc<TorusGeometry> {
        &self.geom
    }
    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }
    /// Pointwise Euclidean norm.
    pub fn norm(&self) -> ScalarField {
        let values = (0..self.geom.len())
            .map(|i| self.components.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .collect();
        ScalarField { geom: self.geom.clone(), values }
    }
}

impl SymTensorField {
    pub fn new(geom: Arc<TorusGeometry>, components: Vec<Vec<f64>>) -> Result<Self> {
        let d = geom.dim();
        if components.len() != d * (d + 1) / 2 || components.iter().any(|c| c.len() != geom.len()) {
            return config("tensor field shape does not match geometry");
        }
        Ok(Self { geom, components })
    }
    pub fn geometry(&self) -> &Arc<TorusGeometry> {
        &self.geom
    }
    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }
    /// Entry (a, b) at node i.
    pub fn get(&self, i: usize, a: usize, b: usize) -> f64 {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let slot = match (self.geom.dim(), a, b) {
            (1, _, _) => 0,
            (_, 0, 0) => 0,
            (_, 0, 1) => 1,
            _ => 2,
        };
        self.components[slot][i]
    }
}

pub fn grad(phi: &ScalarField) -> VectorField {
    let components = phi.geom.grad_values(&phi.values);
    VectorField { geom: phi.geom.clone(), components }
}

pub fn hess(phi: &ScalarField) -> SymTensorField {
    let components = phi.geom.hess_values(&phi.values);
    SymTensorField { geom: phi.geom.clone(), components }
}

pub fn div_mu(x: &VectorField) -> ScalarField {
    let values = x.geom.div_mu_values(&x.components);
    ScalarField { geom: x.geom.clone(), values }
}

pub fn witten_laplacian(h: &ScalarField) -> ScalarField {
    let values = h.geom.witten_laplacian_values(&h.values);
    ScalarField { geom: h.geom.clone(), values }
}

pub fn integrate_mu(h: &ScalarField) -> Result<f64> {
    let v = h.geom.integrate_mu_values(&h.values);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric("non-finite integrand".into()))
    }
}
