//! Periodic horizontal grids, 2D FFTs and sampled fields.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::spectral_core::Frequency;

/// Square torus of side `period` sampled on `n × n` points.
///
/// Point (i, j) sits at x = (i·h, j·h) with h = period/n; arrays are row-major
/// with i as the slow index. Fourier index (a, b) carries wavenumber
/// (2π/period)·(signed(a), signed(b)), signed(k) ∈ [−n/2, n/2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Torus {
    pub period: f64,
    pub n: usize,
}

impl Torus {
    pub fn new(period: f64, n: usize) -> Self {
        Self { period, n }
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    pub fn signed(&self, k: usize) -> i64 {
        let n = self.n as i64;
        let k = k as i64;
        if k >= n / 2 + n % 2 { k - n } else { k }
    }

    pub fn wavenumber(&self, k: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.signed(k) as f64 / self.period
    }

    pub fn is_nyquist(&self, k: usize) -> bool {
        self.n.is_multiple_of(2) && k == self.n / 2
    }

    pub fn frequency(&self, a: usize, b: usize) -> Frequency {
        Frequency::new(self.wavenumber(a), self.wavenumber(b))
    }

    /// Frequencies whose average defines a symbol at index (a, b).
    ///
    /// Nyquist coordinates are ambiguous in sign; averaging over both signs
    /// keeps symbols of real operators Hermitian on the grid.
    pub fn aliases(&self, a: usize, b: usize) -> Vec<Frequency> {
        let f = self.frequency(a, b);
        let s1: &[f64] = if self.is_nyquist(a) { &[1.0, -1.0] } else { &[1.0] };
        let s2: &[f64] = if self.is_nyquist(b) { &[1.0, -1.0] } else { &[1.0] };
        let mut out = Vec::with_capacity(4);
        for &p in s1 {
            for &q in s2 {
                out.push(Frequency::new(p * f.xi1, q * f.xi2));
            }
        }
        out
    }

    /// Spectral derivative factor iξ_axis at index (a, b); zero on Nyquist rows.
    pub fn deriv_factor(&self, a: usize, b: usize, axis: usize) -> C64 {
        let k = if axis == 0 { a } else { b };
        if self.is_nyquist(k) {
            C64::new(0.0, 0.0)
        } else {
            C64::new(0.0, self.wavenumber(k))
        }
    }

    /// Index of the frequency −ξ.
    pub fn conjugate_index(&self, a: usize, b: usize) -> (usize, usize) {
        ((self.n - a) % self.n, (self.n - b) % self.n)
    }
}

/// Forward and inverse 2D FFT on an `n × n` row-major buffer.
///
/// The forward transform is unnormalised; the inverse divides by n².
#[derive(Clone)]
pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    fn pass(&self, plan: &Arc<dyn Fft<f64>>, data: &mut [C64]) {
        let n = self.n;
        plan.process(data);
        let mut col = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = data[i * n + j];
            }
            plan.process(&mut col);
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
    }

    pub fn forward(&self, data: &mut [C64]) {
        self.pass(&self.fwd, data);
    }

    pub fn inverse(&self, data: &mut [C64]) {
        self.pass(&self.inv, data);
        let s = 1.0 / (self.n * self.n) as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    pub fn forward_real(&self, data: &[f64]) -> Vec<C64> {
        let mut buf: Vec<C64> = data.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    /// Inverse transform returning real parts and the largest discarded imaginary part.
    pub fn inverse_real(&self, mut data: Vec<C64>) -> (Vec<f64>, f64) {
        self.inverse(&mut data);
        let imag = data.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
        (data.into_iter().map(|v| v.re).collect(), imag)
    }
}

/// Named real components sampled on a torus at a list of vertical levels.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldGrid {
    pub torus: Torus,
    pub levels: Vec<f64>,
    pub names: Vec<String>,
    /// `data[c][(l·n + i)·n + j]`
    pub data: Vec<Vec<f64>>,
}

impl FieldGrid {
    pub fn zeros(torus: Torus, levels: Vec<f64>, names: &[&str]) -> Self {
        let size = levels.len() * torus.len();
        Self {
            torus,
            levels,
            names: names.iter().map(|s| s.to_string()).collect(),
            data: vec![vec![0.0; size]; names.len()],
        }
    }

    pub fn component(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|c| self.data[c].as_slice())
    }

    pub fn level_slice(&self, c: usize, l: usize) -> &[f64] {
        let m = self.torus.len();
        &self.data[c][l * m..(l + 1) * m]
    }

    pub fn level_slice_mut(&mut self, c: usize, l: usize) -> &mut [f64] {
        let m = self.torus.len();
        &mut self.data[c][l * m..(l + 1) * m]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signed_indices_cover_half_open_range() {
        let t = Torus::new(1.0, 8);
        let s: Vec<i64> = (0..8).map(|k| t.signed(k)).collect();
        assert_eq!(s, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        let t = Torus::new(1.0, 5);
        let s: Vec<i64> = (0..5).map(|k| t.signed(k)).collect();
        assert_eq!(s, vec![0, 1, 2, -2, -1]);
    }

    #[test]
    fn fft_roundtrip_and_single_mode() {
        let t = Torus::new(2.0, 8);
        let fft = Fft2::new(8);
        let f: Vec<f64> = (0..64)
            .map(|p| {
                let (i, j) = (p / 8, p % 8);
                (std::f64::consts::PI * (t.coord(i) + 2.0 * t.coord(j))).cos()
            })
            .collect();
        let spec = fft.forward_real(&f);
        // cos(k·x) with k = (π, 2π) = 2π/period·(1, 2)
        assert!((spec[8 + 2].re - 32.0).abs() < 1e-12);
        let (back, imag) = fft.inverse_real(spec);
        assert!(imag < 1e-14);
        for (a, b) in back.iter().zip(&f) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn nyquist_aliases_come_in_sign_pairs() {
        let t = Torus::new(1.0, 4);
        assert_eq!(t.aliases(2, 2).len(), 4);
        assert_eq!(t.aliases(2, 1).len(), 2);
        assert_eq!(t.aliases(1, 3).len(), 1);
        assert_eq!(t.deriv_factor(2, 1, 0), C64::new(0.0, 0.0));
    }
}
