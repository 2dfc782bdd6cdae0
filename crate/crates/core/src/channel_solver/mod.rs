//! The reduced problem in the channel ω(x_h) < x₃ < 0 with the transparent
//! DtN condition on x₃ = 0.
//!
//! Bottom data u₀ are lifted by V = (u₀,h, u₀,₃ − ∇_h·u₀,h (x₃ − ω)), leaving a
//! correction w = u − V with w = 0 on the bottom, body force f = ΔV − e₃×V and
//! top condition −∂₃w + pe₃ = DtN(w|₀) + F, F = DtN(V|₀) + ∂₃V|₀.

mod banded;
mod flat;
mod krylov;
mod manufactured;
mod mapped;

pub use banded::BandMatrix;
pub use flat::{channel_modes, solve_channel_flat, ChannelModes, EkmanChannel, FlatChannel};
pub use krylov::{gmres, KrylovReport};
pub use manufactured::{Manufactured, Separable};
pub use mapped::{
    energy_balance, h1_norm, solve_capped, solve_channel_bumpy, solve_forced, weak_residual, EnergyBalance,
    SolverOptions, Top,
};

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::dtn_operator::dtn_apply;
use crate::error::{Error, Result};
use crate::grid::{Fft2, FieldGrid, Torus};
use crate::halfspace_solver::{check_fields, solve_field, BoundaryTrace, TRACE_TOL};

/// Bottom height on the torus with the vertical resolution of the mapped grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelGeometry {
    pub torus: Torus,
    pub omega: Vec<f64>,
    /// velocity nodes per column, bottom and top included
    pub n_v: usize,
    /// max |∇_h ω| of the spectral gradient
    pub lipschitz: f64,
    pub grad: [Vec<f64>; 2],
}

impl ChannelGeometry {
    pub fn new(torus: Torus, omega: Vec<f64>, n_v: usize) -> Result<Self> {
        check_fields(&torus, std::slice::from_ref(&omega))?;
        if n_v < 2 {
            return Err(Error::Input(format!("n_v = {n_v}: a column needs at least two nodes")));
        }
        let sup = omega.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let inf = omega.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(sup < 0.0) {
            return Err(Error::Geometry(format!("sup ω = {sup} must be negative")));
        }
        if inf < -1.0 {
            return Err(Error::Geometry(format!("inf ω = {inf} lies below −1")));
        }
        let fft = Fft2::new(torus.n);
        let grad = gradient(&torus, &fft, &omega);
        let lipschitz = (0..torus.len()).map(|p| grad[0][p].hypot(grad[1][p])).fold(0.0, f64::max);
        Ok(Self { torus, omega, n_v, lipschitz, grad })
    }

    pub fn flat(torus: Torus, depth: f64, n_v: usize) -> Result<Self> {
        Self::new(torus, vec![-depth; torus.len()], n_v)
    }

    pub fn cells(&self) -> usize {
        self.n_v - 1
    }

    pub fn is_flat(&self) -> bool {
        let w0 = self.omega[0];
        self.omega.iter().all(|w| *w == w0)
    }

    pub fn mean_depth(&self) -> f64 {
        -self.omega.iter().sum::<f64>() / self.omega.len() as f64
    }

    /// Physical height of mapped coordinate σ above point `idx`.
    pub fn height(&self, idx: usize, sigma: f64) -> f64 {
        self.omega[idx] * (1.0 - sigma)
    }

    pub fn sigma_nodes(&self) -> Vec<f64> {
        let k = self.cells();
        (0..=k).map(|i| i as f64 / k as f64).collect()
    }

    /// Same grid with the bottom translated by (di, dj) grid steps.
    pub fn shifted(&self, di: usize, dj: usize) -> Result<Self> {
        Self::new(self.torus, shift_field(&self.torus, &self.omega, di, dj), self.n_v)
    }
}

/// f(x − (di, dj)h) on the grid.
pub fn shift_field(torus: &Torus, f: &[f64], di: usize, dj: usize) -> Vec<f64> {
    let n = torus.n;
    (0..n * n)
        .map(|p| {
            let (i, j) = (p / n, p % n);
            f[((i + n - di % n) % n) * n + (j + n - dj % n) % n]
        })
        .collect()
}

pub(crate) fn spectral(torus: &Torus, fft: &Fft2, f: &[f64], mult: impl Fn(usize, usize) -> C64) -> Vec<f64> {
    let n = torus.n;
    let mut s = fft.forward_real(f);
    for (idx, v) in s.iter_mut().enumerate() {
        *v *= mult(idx / n, idx % n);
    }
    fft.inverse_real(s).0
}

pub(crate) fn gradient(torus: &Torus, fft: &Fft2, f: &[f64]) -> [Vec<f64>; 2] {
    [
        spectral(torus, fft, f, |a, b| torus.deriv_factor(a, b, 0)),
        spectral(torus, fft, f, |a, b| torus.deriv_factor(a, b, 1)),
    ]
}

pub(crate) fn laplacian(torus: &Torus, fft: &Fft2, f: &[f64]) -> Vec<f64> {
    spectral(torus, fft, f, |a, b| {
        let (d1, d2) = (torus.deriv_factor(a, b, 0), torus.deriv_factor(a, b, 1));
        d1 * d1 + d2 * d2
    })
}

pub(crate) fn divergence(torus: &Torus, fft: &Fft2, f: &[Vec<f64>]) -> Vec<f64> {
    let a = spectral(torus, fft, &f[0], |a, b| torus.deriv_factor(a, b, 0));
    let b = spectral(torus, fft, &f[1], |a, b| torus.deriv_factor(a, b, 1));
    a.iter().zip(&b).map(|(x, y)| x + y).collect()
}

/// Horizontal potential with ∇_h·U_h = u₀,₃ − ∇_hω·u₀,h.
pub fn compatibility_construct(torus: &Torus, u0: &[Vec<f64>; 3], omega: &[f64]) -> Result<[Vec<f64>; 2]> {
    check_fields(torus, u0)?;
    check_fields(torus, std::slice::from_ref(&omega.to_vec()))?;
    let fft = Fft2::new(torus.n);
    let g = gradient(torus, &fft, omega);
    let slope: Vec<f64> = (0..torus.len()).map(|p| g[0][p] * u0[0][p] + g[1][p] * u0[1][p]).collect();
    let target: Vec<f64> = u0[2].iter().zip(&slope).map(|(a, b)| a - b).collect();
    let scale = u0[2].iter().chain(&slope).fold(0.0f64, |m, v| m.max(v.abs()));
    let mean = target.iter().sum::<f64>() / target.len() as f64;
    if mean.abs() > TRACE_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Compatibility { mean });
    }
    let inv = |a: usize, b: usize, axis: usize| {
        let (d1, d2) = (torus.deriv_factor(a, b, 0), torus.deriv_factor(a, b, 1));
        let nrm = d1.norm_sqr() + d2.norm_sqr();
        if nrm == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            torus.deriv_factor(a, b, axis).conj() / nrm
        }
    };
    Ok([spectral(torus, &fft, &target, |a, b| inv(a, b, 0)), spectral(torus, &fft, &target, |a, b| inv(a, b, 1))])
}

/// Body force and top source seen by the correction w, and the field added to w
/// to form the velocity.
pub trait Forcing: Sync {
    fn body(&self, idx: usize, x3: f64) -> [f64; 3];
    fn top(&self) -> &[Vec<f64>; 3];
    fn offset(&self, idx: usize, x3: f64) -> [f64; 3];
}

/// The lift V and its sources, stored by their x₃-independent coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Lift {
    pub vh: [Vec<f64>; 2],
    pub div_h: Vec<f64>,
    /// V₃ = v3_top − div_h·x₃
    pub v3_top: Vec<f64>,
    pub f_h: [Vec<f64>; 2],
    /// f₃ = f3[0] + x₃ f3[1]
    pub f3: [Vec<f64>; 2],
    pub traction: [Vec<f64>; 3],
}

impl Lift {
    pub fn velocity(&self, idx: usize, x3: f64) -> [f64; 3] {
        [self.vh[0][idx], self.vh[1][idx], self.v3_top[idx] - self.div_h[idx] * x3]
    }

    pub fn top_trace(&self) -> [Vec<f64>; 3] {
        [self.vh[0].clone(), self.vh[1].clone(), self.v3_top.clone()]
    }

    /// V sampled on the mapped grid.
    pub fn field(&self, geometry: &ChannelGeometry) -> FieldGrid {
        let sigma = geometry.sigma_nodes();
        let m = geometry.torus.len();
        let mut out = FieldGrid::zeros(geometry.torus, sigma.clone(), &["u1", "u2", "u3"]);
        for (l, &s) in sigma.iter().enumerate() {
            for p in 0..m {
                let v = self.velocity(p, geometry.height(p, s));
                for c in 0..3 {
                    out.data[c][l * m + p] = v[c];
                }
            }
        }
        out
    }
}

impl Forcing for Lift {
    fn body(&self, idx: usize, x3: f64) -> [f64; 3] {
        [self.f_h[0][idx], self.f_h[1][idx], self.f3[0][idx] + x3 * self.f3[1][idx]]
    }

    fn top(&self) -> &[Vec<f64>; 3] {
        &self.traction
    }

    fn offset(&self, idx: usize, x3: f64) -> [f64; 3] {
        self.velocity(idx, x3)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelProblem {
    pub geometry: ChannelGeometry,
    pub u0: [Vec<f64>; 3],
    pub uh: [Vec<f64>; 2],
    pub lift: Lift,
}

impl ChannelProblem {
    pub fn new(geometry: ChannelGeometry, u0: [Vec<f64>; 3]) -> Result<Self> {
        let uh = compatibility_construct(&geometry.torus, &u0, &geometry.omega)?;
        let lift = lift_boundary(&geometry, &u0)?;
        Ok(Self { geometry, u0, uh, lift })
    }

    /// max |u₀,₃ − ∇_hω·u₀,h − ∇_h·U_h| relative to the largest of the terms.
    pub fn compatibility_residual(&self) -> f64 {
        let t = &self.geometry.torus;
        let fft = Fft2::new(t.n);
        let div = divergence(t, &fft, &self.uh);
        let g = &self.geometry.grad;
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for p in 0..t.len() {
            let slope = g[0][p] * self.u0[0][p] + g[1][p] * self.u0[1][p];
            worst = worst.max((self.u0[2][p] - slope - div[p]).abs());
            scale = scale.max(self.u0[2][p].abs()).max(slope.abs());
        }
        if scale > 0.0 { worst / scale } else { worst }
    }
}

/// Builds V, f = ΔV − e₃×V = Δ_hV − e₃×V and F = DtN(V|₀) + ∂₃V|₀.
pub fn lift_boundary(geometry: &ChannelGeometry, u0: &[Vec<f64>; 3]) -> Result<Lift> {
    let t = &geometry.torus;
    check_fields(t, u0)?;
    let fft = Fft2::new(t.n);
    let div_h = divergence(t, &fft, &u0[..2]);
    let v3_top: Vec<f64> = (0..t.len()).map(|p| u0[2][p] + geometry.omega[p] * div_h[p]).collect();
    let lap = |f: &[f64]| laplacian(t, &fft, f);
    let (l1, l2) = (lap(&u0[0]), lap(&u0[1]));
    let f_h = [
        l1.iter().zip(&u0[1]).map(|(a, b)| a + b).collect(),
        l2.iter().zip(&u0[0]).map(|(a, b)| a - b).collect(),
    ];
    let f3 = [lap(&v3_top), lap(&div_h).into_iter().map(|v| -v).collect()];
    let trace = BoundaryTrace::from_velocity(*t, [u0[0].clone(), u0[1].clone(), v3_top.clone()])?;
    let [d0, d1, d2] = dtn_apply(&trace)?;
    let traction = [d0, d1, d2.iter().zip(&div_h).map(|(a, b)| a - b).collect()];
    Ok(Lift { vh: [u0[0].clone(), u0[1].clone()], div_h, v3_top, f_h, f3, traction })
}

/// Velocity, pressure and diagnostics on the mapped grid.
#[derive(Clone, Debug)]
pub struct ChannelSolution {
    pub geometry: ChannelGeometry,
    pub top: Top,
    /// velocity at the σ nodes (u1, u2, u3)
    pub velocity: FieldGrid,
    /// pressure at the cell centres
    pub pressure: FieldGrid,
    /// velocity on x₃ = 0
    pub trace: [Vec<f64>; 3],
    pub diagnostics: Diagnostics,
    /// per-frequency representation of a flat-bottom solve
    pub exact: Option<FlatChannel>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub iterations: usize,
    pub history: Vec<f64>,
    pub relative_residual: f64,
    pub warnings: Vec<String>,
    pub energy: Option<EnergyBalance>,
}

impl ChannelSolution {
    /// Mean-square velocity difference over the common σ nodes, relative to `other`.
    pub fn relative_difference(&self, other: &ChannelSolution) -> f64 {
        let m = self.geometry.torus.len();
        let nodes = self.geometry.n_v.min(other.geometry.n_v);
        assert_eq!(self.geometry.n_v, other.geometry.n_v, "solutions on different vertical grids");
        let (mut num, mut den) = (0.0, 0.0);
        for c in 0..3 {
            for i in 0..nodes * m {
                num += (self.velocity.data[c][i] - other.velocity.data[c][i]).powi(2);
                den += other.velocity.data[c][i].powi(2);
            }
        }
        (num / den.max(f64::MIN_POSITIVE)).sqrt()
    }
}

/// Half-space solution above x₃ = 0 with Dirichlet data v₀.
///
/// The mean of v₀,₃ must vanish to `mean_tol` relative to max |v₀|; the residual
/// mean (solver noise) is removed before delegating.
pub fn extend_to_halfspace(torus: Torus, v0: &[Vec<f64>; 3], x3_levels: &[f64], mean_tol: f64) -> Result<FieldGrid> {
    check_fields(&torus, v0)?;
    let size = v0.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mean = v0[2].iter().sum::<f64>() / torus.len() as f64;
    if mean.abs() > mean_tol * size.max(f64::MIN_POSITIVE) {
        return Err(Error::Compatibility { mean });
    }
    let v3: Vec<f64> = v0[2].iter().map(|v| v - mean).collect();
    let trace = BoundaryTrace::from_velocity(torus, [v0[0].clone(), v0[1].clone(), v3])?;
    solve_field(&trace, x3_levels)
}

/// Traction −∂₃u + pe₃ at x₃ = 0 of the half-space solution with data v₀, from
/// the mode coefficients and exact vertical derivatives.
pub fn halfspace_traction(torus: Torus, v0: &[Vec<f64>; 3]) -> Result<[Vec<f64>; 3]> {
    use crate::halfspace_solver::{evaluate_pressure, evaluate_velocity_with_derivative, solve_coefficients_with, zero_mode_solution};
    use crate::spectral_core::characteristic_roots;
    let trace = BoundaryTrace::from_velocity(torus, v0.clone())?;
    let (v, _) = trace.spectra();
    let n = torus.n;
    let cols: Vec<[C64; 3]> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let d = [v[0][idx], v[1][idx], v[2][idx]];
            if idx == 0 {
                return Ok(zero_mode_solution(&[d[0], d[1], C64::new(0.0, 0.0)])?.traction());
            }
            let al = torus.aliases(idx / n, idx % n);
            let mut out = [C64::new(0.0, 0.0); 3];
            for xi in &al {
                let roots = characteristic_roots(xi);
                let co = solve_coefficients_with(xi, &roots, &d)?;
                let (_, du) = evaluate_velocity_with_derivative(xi, &co, &roots, 0.0)?;
                let p = evaluate_pressure(xi, &co, &roots, 0.0)?;
                let w = 1.0 / al.len() as f64;
                out[0] -= du[0] * w;
                out[1] -= du[1] * w;
                out[2] += (p - du[2]) * w;
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let fft = Fft2::new(n);
    Ok(std::array::from_fn(|c| fft.inverse_real(cols.iter().map(|t| t[c]).collect()).0))
}
