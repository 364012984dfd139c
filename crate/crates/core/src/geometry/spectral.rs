//! FFT-based differentiation on a 1D or 2D periodic grid.
//!
//! Layout is row-major: node `(i, j)` of a 2D grid lives at `i * n1 + j`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Spectral {
    sizes: Vec<usize>,
    fwd: Vec<Arc<dyn Fft<f64>>>,
    inv: Vec<Arc<dyn Fft<f64>>>,
    /// Angular wavenumbers per axis; the Nyquist entry is zeroed.
    wavenumbers: Vec<Vec<f64>>,
    /// Signed integer frequencies per axis.
    freqs: Vec<Vec<i64>>,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral").field("sizes", &self.sizes).finish()
    }
}

fn signed_freq(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

impl Spectral {
    pub(crate) fn new(sizes: &[usize], periods: &[f64]) -> Self {
        let mut planner = FftPlanner::new();
        let mut fwd = Vec::new();
        let mut inv = Vec::new();
        let mut wavenumbers = Vec::new();
        let mut freqs = Vec::new();
        for (&n, &l) in sizes.iter().zip(periods) {
            fwd.push(planner.plan_fft_forward(n));
            inv.push(planner.plan_fft_inverse(n));
            let fr: Vec<i64> = (0..n).map(|j| signed_freq(j, n)).collect();
            let k = fr
                .iter()
                .map(|&q| if q.unsigned_abs() as usize * 2 == n { 0.0 } else { 2.0 * PI * q as f64 / l })
                .collect();
            wavenumbers.push(k);
            freqs.push(fr);
        }
        Self { sizes: sizes.to_vec(), fwd, inv, wavenumbers, freqs }
    }

    pub(crate) fn len(&self) -> usize {
        self.sizes.iter().product()
    }

    fn transform(&self, buf: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        match self.sizes.len() {
            1 => plans[0].process(buf),
            _ => {
                let (n0, n1) = (self.sizes[0], self.sizes[1]);
                // rows are contiguous
                for row in buf.chunks_mut(n1) {
                    plans[1].process(row);
                }
                let mut col = vec![Complex64::new(0.0, 0.0); n0];
                for j in 0..n1 {
                    for i in 0..n0 {
                        col[i] = buf[i * n1 + j];
                    }
                    plans[0].process(&mut col);
                    for i in 0..n0 {
                        buf[i * n1 + j] = col[i];
                    }
                }
            }
        }
    }

    pub(crate) fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.fwd);
        buf
    }

    pub(crate) fn inverse(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut spec, &self.inv);
        let scale = 1.0 / self.len() as f64;
        spec.iter().map(|c| c.re * scale).collect()
    }

    /// Per-axis index of a flat spectral index.
    #[inline]
    fn split(&self, idx: usize) -> (usize, usize) {
        if self.sizes.len() == 1 {
            (idx, 0)
        } else {
            (idx / self.sizes[1], idx % self.sizes[1])
        }
    }

    #[inline]
    pub(crate) fn wavenumber(&self, idx: usize, axis: usize) -> f64 {
        let (i, j) = self.split(idx);
        self.wavenumbers[axis][if axis == 0 { i } else { j }]
    }

    #[inline]
    fn freq(&self, idx: usize, axis: usize) -> i64 {
        let (i, j) = self.split(idx);
        self.freqs[axis][if axis == 0 { i } else { j }]
    }

    /// 2/3-rule: keep |q_i| ≤ N_i/3 on every axis, drop the Nyquist line.
    #[inline]
    pub(crate) fn retained(&self, idx: usize) -> bool {
        (0..self.sizes.len()).all(|a| {
            let q = self.freq(idx, a).unsigned_abs() as usize;
            3 * q <= self.sizes[a] && 2 * q != self.sizes[a]
        })
    }

    /// Upper half of the retained band: some |q_i| > N_i/6.
    #[inline]
    fn in_tail(&self, idx: usize) -> bool {
        (0..self.sizes.len()).any(|a| 6 * self.freq(idx, a).unsigned_abs() as usize > self.sizes[a])
    }

    /// Largest retained angular wavenumber magnitude.
    pub(crate) fn k_max(&self, periods: &[f64]) -> f64 {
        self.sizes
            .iter()
            .zip(periods)
            .map(|(&n, &l)| 2.0 * PI * (n / 3) as f64 / l)
            .map(|k| k * k)
            .sum::<f64>()
            .sqrt()
    }

    /// Multiply spectrum by (i k_axis).
    pub(crate) fn d_spec(&self, spec: &[Complex64], axis: usize) -> Vec<Complex64> {
        spec.iter()
            .enumerate()
            .map(|(idx, c)| c * Complex64::new(0.0, self.wavenumber(idx, axis)))
            .collect()
    }

    pub(crate) fn derivative(&self, values: &[f64], axis: usize) -> Vec<f64> {
        let spec = self.forward(values);
        self.inverse(self.d_spec(&spec, axis))
    }

    pub(crate) fn gradient(&self, values: &[f64]) -> Vec<Vec<f64>> {
        let spec = self.forward(values);
        (0..self.sizes.len()).map(|a| self.inverse(self.d_spec(&spec, a))).collect()
    }

    /// Packed upper triangle: 1D `[h00]`, 2D `[h00, h01, h11]`.
    pub(crate) fn hessian(&self, values: &[f64]) -> Vec<Vec<f64>> {
        let spec = self.forward(values);
        let n = self.sizes.len();
        let mut out = Vec::new();
        for a in 0..n {
            for b in a..n {
                let s: Vec<Complex64> = spec
                    .iter()
                    .enumerate()
                    .map(|(idx, c)| c * (-self.wavenumber(idx, a) * self.wavenumber(idx, b)))
                    .collect();
                out.push(self.inverse(s));
            }
        }
        out
    }

    pub(crate) fn divergence(&self, comps: &[Vec<f64>]) -> Vec<f64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.len()];
        for (a, comp) in comps.iter().enumerate() {
            let spec = self.forward(comp);
            for (idx, (s, c)) in acc.iter_mut().zip(spec).enumerate() {
                *s += c * Complex64::new(0.0, self.wavenumber(idx, a));
            }
        }
        self.inverse(acc)
    }

    pub(crate) fn dealias(&self, values: &[f64]) -> Vec<f64> {
        let mut spec = self.forward(values);
        for (idx, c) in spec.iter_mut().enumerate() {
            if !self.retained(idx) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        self.inverse(spec)
    }

    /// max |ĉ| over the upper retained band / max |ĉ| overall.
    pub(crate) fn tail_ratio(&self, values: &[f64]) -> f64 {
        let spec = self.forward(values);
        let mut all = 0.0f64;
        let mut tail = 0.0f64;
        for (idx, c) in spec.iter().enumerate() {
            let a = c.norm();
            all = all.max(a);
            if self.in_tail(idx) {
                tail = tail.max(a);
            }
        }
        if all == 0.0 {
            0.0
        } else {
            tail / all
        }
    }
}
