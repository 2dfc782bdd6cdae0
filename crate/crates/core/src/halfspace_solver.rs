//! Closed-form Fourier solution of the Stokes-Coriolis system in x₃ > 0.
//!
//! At a frequency ξ ≠ 0 the decaying solution with Dirichlet data v̂₀ is
//! û = Σ_k A_k b_k e^{−λ_k x₃}, p̂ = Σ_k A_k (w_k/λ_k) e^{−λ_k x₃}, where
//! b_k = ((i/|ξ|²)(−λ_k ξ + (λ_k/w_k) ξ⊥), 1) and w_k = |ξ|² − λ_k².

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Fft2, FieldGrid, Torus};
use crate::numerics::cdot2;
use crate::spectral_core::{characteristic_roots, j, Frequency, SpectralRoots};

pub type CVec3 = [C64; 3];

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// (v̂₃, iξ·v̂_h, −iξ⊥·v̂_h)
pub fn mode_rhs(xi: &Frequency, v: &CVec3) -> CVec3 {
    let p = xi.perp();
    [v[2], I * (v[0] * xi.xi1 + v[1] * xi.xi2), -I * (v[0] * p.xi1 + v[1] * p.xi2)]
}

/// Mode profile b_k (velocity per unit amplitude at x₃ = 0).
pub fn mode_vector(xi: &Frequency, roots: &SpectralRoots, k: usize) -> CVec3 {
    let s = xi.modulus_sq();
    let (l, w) = (roots.lambda[k], roots.w[k]);
    let p = xi.perp();
    let g = l / w;
    [
        I / s * (-l * xi.xi1 + g * p.xi1),
        I / s * (-l * xi.xi2 + g * p.xi2),
        c(1.0),
    ]
}

#[derive(Clone, Debug)]
pub struct ModeSystem {
    pub m: Matrix3<C64>,
    pub det_closed: C64,
    pub l: [Matrix3<C64>; 3],
    pub q: [Vector3<C64>; 3],
}

/// Solves M A = rhs through the row-equilibrated system with row 2 replaced by
/// row 2 − |ξ|·row 1, whose entries λ_k − |ξ| = −w_k/(λ_k + |ξ|) carry no cancellation.
///
/// A is large compared with the data at high frequency, so two refinement steps
/// with compensated residuals of the unreduced rows bring M A − rhs to rounding
/// level relative to rhs.
fn solve_mode_system(xi: &Frequency, roots: &SpectralRoots, rhs: &[CVec3]) -> Result<Vec<CVec3>> {
    let r = xi.modulus();
    let mut a = Matrix3::<C64>::zeros();
    for k in 0..3 {
        let (l, w) = (roots.lambda[k], roots.w[k]);
        a[(0, k)] = c(1.0);
        a[(1, k)] = -w / (l + r);
        a[(2, k)] = l / w;
    }
    let mut scale = [1.0; 3];
    for (i, sc) in scale.iter_mut().enumerate() {
        let m = (0..3).map(|k| a[(i, k)].norm()).fold(0.0, f64::max);
        *sc = 1.0 / m;
        for k in 0..3 {
            a[(i, k)] *= *sc;
        }
    }
    let lu = a.lu();
    let solve = |b: &CVec3| -> Result<CVec3> {
        let v = Vector3::new(b[0] * scale[0], (b[1] - b[0] * r) * scale[1], b[2] * scale[2]);
        let x = lu.solve(&v).ok_or_else(|| Error::Numerical("singular mode matrix".into()))?;
        Ok([x[0], x[1], x[2]])
    };
    let rows = mode_rows(roots);
    rhs.iter()
        .map(|b| {
            let mut x = solve(b)?;
            for _ in 0..2 {
                let mut res = [c(0.0); 3];
                for i in 0..3 {
                    let vals = [b[i], -x[0], -x[1], -x[2]];
                    res[i] = cdot2(&vals, &[c(1.0), rows[i][0], rows[i][1], rows[i][2]]);
                }
                let d = solve(&res)?;
                for k in 0..3 {
                    x[k] += d[k];
                }
            }
            Ok(x)
        })
        .collect()
}

/// Rows (1, λ_k, λ_k/w_k) of the mode matrix, shared by the solve and the evaluation.
fn mode_rows(roots: &SpectralRoots) -> [CVec3; 3] {
    let g = |k: usize| roots.lambda[k] / roots.w[k];
    [[c(1.0); 3], roots.lambda, [g(0), g(1), g(2)]]
}

fn require_nonzero(xi: &Frequency) -> Result<()> {
    if xi.is_zero() { Err(Error::SingularFrequency) } else { Ok(()) }
}

/// Determinant (λ₁−λ₂)(λ₂−λ₃)(λ₃−λ₁)(|ξ|+λ₁+λ₂+λ₃).
pub fn det_closed(xi: &Frequency, roots: &SpectralRoots) -> C64 {
    let [l1, l2, l3] = roots.lambda;
    (l1 - l2) * (l2 - l3) * (l3 - l1) * (xi.modulus() + l1 + l2 + l3)
}

pub fn mode_matrix(xi: &Frequency, roots: &SpectralRoots) -> Result<ModeSystem> {
    require_nonzero(xi)?;
    let rows = mode_rows(roots);
    let m = Matrix3::from_fn(|i, k| rows[i][k]);
    // columns of R map v̂₀ to the right-hand side
    let cols: Vec<CVec3> = (0..3)
        .map(|jx| {
            let mut e = [c(0.0); 3];
            e[jx] = c(1.0);
            mode_rhs(xi, &e)
        })
        .collect();
    let sol = solve_mode_system(xi, roots, &cols)?;
    let mut l = [Matrix3::<C64>::zeros(); 3];
    let mut q = [Vector3::<C64>::zeros(); 3];
    for k in 0..3 {
        let b = mode_vector(xi, roots, k);
        let press = roots.w[k] / roots.lambda[k];
        for col in 0..3 {
            let row_k = sol[col][k];
            for i in 0..3 {
                l[k][(i, col)] = b[i] * row_k;
            }
            q[k][col] = press * row_k;
        }
    }
    Ok(ModeSystem { m, det_closed: det_closed(xi, roots), l, q })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeCoefficients {
    pub a: CVec3,
    pub b: CVec3,
}

impl ModeCoefficients {
    pub fn from_a(a: CVec3) -> Self {
        let jj = j();
        let j2 = jj * jj;
        let b = [a[0] + a[1] + a[2], a[0] + j2 * a[1] + jj * a[2], a[0] + jj * a[1] + j2 * a[2]];
        Self { a, b }
    }
}

pub fn solve_coefficients_with(xi: &Frequency, roots: &SpectralRoots, v0hat: &CVec3) -> Result<ModeCoefficients> {
    require_nonzero(xi)?;
    let a = solve_mode_system(xi, roots, &[mode_rhs(xi, v0hat)])?[0];
    Ok(ModeCoefficients::from_a(a))
}

pub fn solve_coefficients(xi: &Frequency, v0hat: &CVec3) -> Result<ModeCoefficients> {
    solve_coefficients_with(xi, &characteristic_roots(xi), v0hat)
}

fn check_level(xi: &Frequency, x3: f64) -> Result<()> {
    require_nonzero(xi)?;
    if x3 < 0.0 || x3.is_nan() {
        return Err(Error::Domain(format!("x3 = {x3} lies below the boundary")));
    }
    Ok(())
}

fn decay(l: C64, x3: f64) -> C64 {
    C64::from_polar((-l.re * x3).exp(), -l.im * x3)
}

/// Velocity and its vertical derivative at height x₃.
///
/// The horizontal part is assembled from the row sums Σ A_k λ_k e_k and
/// Σ A_k (λ_k/w_k) e_k, so that at x₃ = 0 it reproduces the solved rows exactly.
pub fn evaluate_velocity_with_derivative(
    xi: &Frequency,
    coeffs: &ModeCoefficients,
    roots: &SpectralRoots,
    x3: f64,
) -> Result<(CVec3, CVec3)> {
    check_level(xi, x3)?;
    let rows = mode_rows(roots);
    let ae: CVec3 = std::array::from_fn(|k| coeffs.a[k] * decay(roots.lambda[k], x3));
    let dae: CVec3 = std::array::from_fn(|k| -roots.lambda[k] * ae[k]);
    let s = xi.modulus_sq();
    let p = xi.perp();
    let assemble = |amp: &CVec3| -> CVec3 {
        let s1 = cdot2(amp, &rows[1]);
        let s2 = cdot2(amp, &rows[2]);
        [
            I / s * (-s1 * xi.xi1 + s2 * p.xi1),
            I / s * (-s1 * xi.xi2 + s2 * p.xi2),
            cdot2(amp, &rows[0]),
        ]
    };
    Ok((assemble(&ae), assemble(&dae)))
}

pub fn evaluate_velocity(xi: &Frequency, coeffs: &ModeCoefficients, roots: &SpectralRoots, x3: f64) -> Result<CVec3> {
    Ok(evaluate_velocity_with_derivative(xi, coeffs, roots, x3)?.0)
}

pub fn evaluate_pressure(xi: &Frequency, coeffs: &ModeCoefficients, roots: &SpectralRoots, x3: f64) -> Result<C64> {
    check_level(xi, x3)?;
    Ok((0..3).map(|k| coeffs.a[k] * roots.w[k] / roots.lambda[k] * decay(roots.lambda[k], x3)).sum())
}

/// Residuals of the Fourier-transformed system, with the magnitude of the
/// largest term of each equation for normalisation.
#[derive(Clone, Copy, Debug)]
pub struct PdeResidual {
    pub momentum: CVec3,
    pub divergence: C64,
    pub scales: [f64; 4],
}

impl PdeResidual {
    pub fn relative(&self) -> f64 {
        let vals = [self.momentum[0], self.momentum[1], self.momentum[2], self.divergence];
        vals.iter()
            .zip(&self.scales)
            .map(|(v, s)| if *s > 0.0 { v.norm() / s } else { v.norm() })
            .fold(0.0, f64::max)
    }
}

/// Evaluates (|ξ|²−∂₃²)û_h + e₃×û_h + iξp̂, (|ξ|²−∂₃²)û₃ + ∂₃p̂ and iξ·û_h + ∂₃û₃
/// mode by mode with exact vertical derivatives.
pub fn pde_residual(xi: &Frequency, coeffs: &ModeCoefficients, roots: &SpectralRoots, x3: f64) -> Result<PdeResidual> {
    check_level(xi, x3)?;
    let s = xi.modulus_sq();
    let mut terms: [Vec<C64>; 4] = Default::default();
    for k in 0..3 {
        let l = roots.lambda[k];
        let b = mode_vector(xi, roots, k);
        let e = coeffs.a[k] * decay(l, x3);
        let u = [b[0] * e, b[1] * e, b[2] * e];
        let p = roots.w[k] / l * e;
        let d2 = l * l;
        terms[0].extend([u[0] * s, -d2 * u[0], -u[1], I * xi.xi1 * p]);
        terms[1].extend([u[1] * s, -d2 * u[1], u[0], I * xi.xi2 * p]);
        terms[2].extend([u[2] * s, -d2 * u[2], -l * p]);
        terms[3].extend([I * xi.xi1 * u[0], I * xi.xi2 * u[1], -l * u[2]]);
    }
    let sum = |t: &Vec<C64>| t.iter().sum::<C64>();
    let big = |t: &Vec<C64>| t.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(PdeResidual {
        momentum: [sum(&terms[0]), sum(&terms[1]), sum(&terms[2])],
        divergence: sum(&terms[3]),
        scales: [big(&terms[0]), big(&terms[1]), big(&terms[2]), big(&terms[3])],
    })
}

/// ∫₀^∞ (|ξ|²|û|² + |∂₃û|²) dx₃ from the pairwise exponential integrals.
pub fn energy_density(xi: &Frequency, coeffs: &ModeCoefficients, roots: &SpectralRoots) -> Result<f64> {
    require_nonzero(xi)?;
    let s = xi.modulus_sq();
    let b: Vec<CVec3> = (0..3).map(|k| mode_vector(xi, roots, k)).collect();
    let mut e = c(0.0);
    for k in 0..3 {
        for l in 0..3 {
            let (lk, ll) = (roots.lambda[k], roots.lambda[l].conj());
            let g: C64 = (0..3).map(|i| b[k][i] * b[l][i].conj()).sum();
            e += coeffs.a[k] * coeffs.a[l].conj() * g * (s + lk * ll) / (lk + ll);
        }
    }
    Ok(e.re)
}

/// Ekman spiral at ξ = 0: with w = û₁ + iû₂ and z = û₁ − iû₂ the system
/// −∂₃²û_h + e₃×û_h = 0 decouples into w'' = iw and z'' = −iz.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroModeProfile {
    pub w0: C64,
    pub z0: C64,
}

impl ZeroModeProfile {
    fn rates() -> (C64, C64) {
        let e = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        (e, e.conj())
    }

    pub fn velocity(&self, x3: f64) -> CVec3 {
        let (a, b) = Self::rates();
        let w = self.w0 * decay(a, x3);
        let z = self.z0 * decay(b, x3);
        [(w + z) * 0.5, (w - z) / (2.0 * I), c(0.0)]
    }

    pub fn derivative(&self, x3: f64) -> CVec3 {
        let (a, b) = Self::rates();
        let w = -a * self.w0 * decay(a, x3);
        let z = -b * self.z0 * decay(b, x3);
        [(w + z) * 0.5, (w - z) / (2.0 * I), c(0.0)]
    }

    pub fn second_derivative(&self, x3: f64) -> CVec3 {
        let (a, b) = Self::rates();
        let w = a * a * self.w0 * decay(a, x3);
        let z = b * b * self.z0 * decay(b, x3);
        [(w + z) * 0.5, (w - z) / (2.0 * I), c(0.0)]
    }

    /// ∫₀^∞ |∂₃û|² dx₃.
    pub fn energy(&self) -> f64 {
        (self.w0.norm_sqr() + self.z0.norm_sqr()) / (2.0 * std::f64::consts::SQRT_2)
    }

    /// −∂₃û + p̂e₃ at x₃ = 0; the zero-mode pressure vanishes.
    pub fn traction(&self) -> CVec3 {
        let d = self.derivative(0.0);
        [-d[0], -d[1], c(0.0)]
    }
}

/// Relative size above which zero-mode vertical data is rejected.
pub const ZERO_MODE_TOL: f64 = 1e-12;

pub fn zero_mode_solution(v0hat0: &CVec3) -> Result<ZeroModeProfile> {
    let scale = v0hat0.iter().map(|z| z.norm()).sum::<f64>();
    if v0hat0[2].norm() > ZERO_MODE_TOL * scale {
        return Err(Error::Compatibility { mean: v0hat0[2].norm() });
    }
    Ok(ZeroModeProfile { w0: v0hat0[0] + I * v0hat0[1], z0: v0hat0[0] - I * v0hat0[1] })
}

/// Boundary data on the torus with a horizontal potential for the vertical part.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTrace {
    pub torus: Torus,
    pub v0: [Vec<f64>; 3],
    pub vh: [Vec<f64>; 2],
}

/// Relative tolerance of the discrete identity v̂₀,₃ = iξ·V̂_h.
pub const TRACE_TOL: f64 = 1e-12;

impl BoundaryTrace {
    /// Builds V_h as the gradient potential V̂_h = −iξ v̂₀,₃/|ξ|².
    pub fn from_velocity(torus: Torus, v0: [Vec<f64>; 3]) -> Result<Self> {
        check_fields(&torus, &v0)?;
        let fft = Fft2::new(torus.n);
        let v3 = fft.forward_real(&v0[2]);
        let n = torus.n;
        let mut p1 = vec![c(0.0); n * n];
        let mut p2 = vec![c(0.0); n * n];
        for a in 0..n {
            for b in 0..n {
                let d1 = torus.deriv_factor(a, b, 0);
                let d2 = torus.deriv_factor(a, b, 1);
                let nrm = d1.norm_sqr() + d2.norm_sqr();
                if nrm > 0.0 {
                    let idx = a * n + b;
                    p1[idx] = d1.conj() * v3[idx] / nrm;
                    p2[idx] = d2.conj() * v3[idx] / nrm;
                }
            }
        }
        let vh = [fft.inverse_real(p1).0, fft.inverse_real(p2).0];
        let trace = Self { torus, v0, vh };
        trace.validate()?;
        Ok(trace)
    }

    pub fn with_potential(torus: Torus, v0: [Vec<f64>; 3], vh: [Vec<f64>; 2]) -> Result<Self> {
        check_fields(&torus, &v0)?;
        check_fields(&torus, &vh)?;
        let trace = Self { torus, v0, vh };
        trace.validate()?;
        Ok(trace)
    }

    pub fn spectra(&self) -> ([Vec<C64>; 3], [Vec<C64>; 2]) {
        let fft = Fft2::new(self.torus.n);
        (
            [fft.forward_real(&self.v0[0]), fft.forward_real(&self.v0[1]), fft.forward_real(&self.v0[2])],
            [fft.forward_real(&self.vh[0]), fft.forward_real(&self.vh[1])],
        )
    }

    /// Largest relative mismatch of v̂₀,₃ = iξ·V̂_h over the grid, and the mean of v₀,₃.
    pub fn compatibility_residual(&self) -> (f64, f64) {
        let (v, p) = self.spectra();
        let t = &self.torus;
        let n = t.n;
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let idx = a * n + b;
                let div = t.deriv_factor(a, b, 0) * p[0][idx] + t.deriv_factor(a, b, 1) * p[1][idx];
                worst = worst.max((v[2][idx] - div).norm());
                scale = scale.max(v[2][idx].norm()).max(div.norm());
            }
        }
        let mean = v[2][0].re / (n * n) as f64;
        let rel = if scale > 0.0 { worst / scale } else { 0.0 };
        (rel, mean)
    }

    pub fn validate(&self) -> Result<()> {
        let (rel, mean) = self.compatibility_residual();
        let size = self.v0.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if mean.abs() > TRACE_TOL * size.max(f64::MIN_POSITIVE) {
            return Err(Error::Compatibility { mean });
        }
        if rel > TRACE_TOL {
            return Err(Error::Input(format!("vertical data is not the divergence of V_h (relative mismatch {rel:.2e})")));
        }
        Ok(())
    }
}

pub(crate) fn check_fields(torus: &Torus, fields: &[Vec<f64>]) -> Result<()> {
    for f in fields {
        if f.len() != torus.len() {
            return Err(Error::Input(format!("field has {} samples, grid needs {}", f.len(), torus.len())));
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite sample in boundary data".into()));
        }
    }
    Ok(())
}

/// Velocity, pressure and their vertical derivatives of the half-space solution
/// at ξ, averaged over Nyquist aliases.
pub(crate) fn halfspace_column(
    torus: &Torus,
    a: usize,
    b: usize,
    v: &CVec3,
    levels: &[f64],
) -> Result<Vec<[C64; 4]>> {
    if a == 0 && b == 0 {
        // the caller has validated the mean of v₃ against the whole field
        let z = zero_mode_solution(&[v[0], v[1], c(0.0)])?;
        return Ok(levels
            .iter()
            .map(|&x| {
                let u = z.velocity(x);
                [u[0], u[1], u[2], c(0.0)]
            })
            .collect());
    }
    let aliases = torus.aliases(a, b);
    let wgt = 1.0 / aliases.len() as f64;
    let mut out = vec![[c(0.0); 4]; levels.len()];
    for xi in aliases {
        let roots = characteristic_roots(&xi);
        let co = solve_coefficients_with(&xi, &roots, v)?;
        for (o, &x) in out.iter_mut().zip(levels) {
            let u = evaluate_velocity(&xi, &co, &roots, x)?;
            let p = evaluate_pressure(&xi, &co, &roots, x)?;
            for i in 0..3 {
                o[i] += u[i] * wgt;
            }
            o[3] += p * wgt;
        }
    }
    Ok(out)
}

/// Dirichlet energy per unit horizontal area, Σ_ξ energy_density over the
/// Fourier-series coefficients v̂/n², with Nyquist aliases averaged.
pub fn trace_energy(trace: &BoundaryTrace) -> Result<f64> {
    trace.validate()?;
    let t = trace.torus;
    let n = t.n;
    let norm = 1.0 / (n * n) as f64;
    let (v, _) = trace.spectra();
    let mut total = 0.0;
    for idx in 0..n * n {
        let cv = [v[0][idx] * norm, v[1][idx] * norm, v[2][idx] * norm];
        let (a, b) = (idx / n, idx % n);
        if idx == 0 {
            total += zero_mode_solution(&[cv[0], cv[1], c(0.0)])?.energy();
            continue;
        }
        let al = t.aliases(a, b);
        for xi in &al {
            let roots = characteristic_roots(xi);
            let co = solve_coefficients_with(xi, &roots, &cv)?;
            total += energy_density(xi, &co, &roots)? / al.len() as f64;
        }
    }
    Ok(total)
}

/// Half-space solution sampled at the given heights; components u1, u2, u3, p.
pub fn solve_field(trace: &BoundaryTrace, x3_levels: &[f64]) -> Result<FieldGrid> {
    trace.validate()?;
    if let Some(x) = x3_levels.iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::Domain(format!("level {x} lies below the boundary")));
    }
    let t = trace.torus;
    let n = t.n;
    let (v, _) = trace.spectra();
    let rows: Vec<Vec<Vec<[C64; 4]>>> = (0..n)
        .into_par_iter()
        .map(|a| {
            (0..n)
                .map(|b| {
                    let idx = a * n + b;
                    halfspace_column(&t, a, b, &[v[0][idx], v[1][idx], v[2][idx]], x3_levels)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let fft = Fft2::new(n);
    let mut grid = FieldGrid::zeros(t, x3_levels.to_vec(), &["u1", "u2", "u3", "p"]);
    for l in 0..x3_levels.len() {
        for comp in 0..4 {
            let spec: Vec<C64> = (0..n * n).map(|idx| rows[idx / n][idx % n][l][comp]).collect();
            let (vals, _) = fft.inverse_real(spec);
            grid.level_slice_mut(comp, l).copy_from_slice(&vals);
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_data_gives_zero_coefficients() {
        let co = solve_coefficients(&Frequency::new(0.3, -1.2), &[c(0.0); 3]).unwrap();
        assert_eq!(co.a, [c(0.0); 3]);
    }

    #[test]
    fn zero_frequency_is_rejected() {
        assert_eq!(solve_coefficients(&Frequency::ZERO, &[c(1.0); 3]), Err(Error::SingularFrequency));
        let roots = characteristic_roots(&Frequency::ZERO);
        assert!(mode_matrix(&Frequency::ZERO, &roots).is_err());
    }

    #[test]
    fn negative_height_is_a_domain_error() {
        let xi = Frequency::new(1.0, 0.0);
        let roots = characteristic_roots(&xi);
        let co = solve_coefficients(&xi, &[c(1.0), c(0.0), c(0.0)]).unwrap();
        assert!(matches!(evaluate_velocity(&xi, &co, &roots, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn single_mode_pressure() {
        let xi = Frequency::new(0.4, 0.9);
        let roots = characteristic_roots(&xi);
        let co = ModeCoefficients::from_a([c(0.0), C64::new(0.5, -2.0), c(0.0)]);
        let p = evaluate_pressure(&xi, &co, &roots, 0.0).unwrap();
        assert!((p - co.a[1] * roots.w[1] / roots.lambda[1]).norm() < 1e-15);
    }

    #[test]
    fn b_map_is_the_discrete_fourier_matrix() {
        let co = ModeCoefficients::from_a([c(1.0), c(0.0), c(0.0)]);
        assert_eq!(co.b, [c(1.0); 3]);
        let co = ModeCoefficients::from_a([c(0.0), c(1.0), c(0.0)]);
        assert!((co.b[1] - j() * j()).norm() < 1e-16);
        assert!((co.b[2] - j()).norm() < 1e-16);
    }

    #[test]
    fn ekman_profile_for_unit_east_data() {
        let z = zero_mode_solution(&[c(1.0), c(0.0), c(0.0)]).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for x in [0.0, 0.3, 2.0, 7.5] {
            let u = z.velocity(x);
            let e = (-x * r).exp();
            assert!((u[0] - c(e * (x * r).cos())).norm() < 1e-15);
            assert!((u[1] - c(-e * (x * r).sin())).norm() < 1e-15);
            // −u'' + e₃×u = 0
            let d2 = z.second_derivative(x);
            assert!((-d2[0] - u[1]).norm() < 1e-15);
            assert!((-d2[1] + u[0]).norm() < 1e-15);
        }
    }

    #[test]
    fn ekman_traction_is_the_constant_matrix() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for v in [[c(1.0), c(0.0), c(0.0)], [c(0.0), c(1.0), c(0.0)]] {
            let t = zero_mode_solution(&v).unwrap().traction();
            let want = [(v[0] - v[1]) * r, (v[0] + v[1]) * r];
            assert!((t[0] - want[0]).norm() < 1e-15 && (t[1] - want[1]).norm() < 1e-15);
        }
    }

    #[test]
    fn nonzero_mean_vertical_data_is_incompatible() {
        assert!(matches!(zero_mode_solution(&[c(0.0), c(0.0), c(1.0)]), Err(Error::Compatibility { .. })));
    }
}
