//! Dirichlet-to-Neumann symbol of the half-space problem and its splitting.
//!
//! M_SC(ξ) maps boundary data v̂₀ to the traction −∂₃û + p̂e₃ at x₃ = 0.

use nalgebra::{Matrix2, Matrix3};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{Fft2, Torus};
use crate::halfspace_solver::{solve_coefficients_with, zero_mode_solution, BoundaryTrace, CVec3};
use crate::spectral_core::{characteristic_roots, Frequency, Regime};

pub type CMat3 = Matrix3<C64>;
pub type CMat2 = Matrix2<C64>;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const R2: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Symbol columns from M_SC e_j = (−iξv₃, iξ·v_h) + Σ_k A_k((i/|ξ|²)(w_k²ξ⊥ + w_kξ), w_k/λ_k),
/// which avoids the cancellation in Σ λ_k A_k b_k between the Stokes part and the rest.
pub fn dtn_symbol(xi: &Frequency) -> Result<CMat3> {
    if xi.is_zero() {
        return Err(Error::SingularFrequency);
    }
    let roots = characteristic_roots(xi);
    let s = xi.modulus_sq();
    let p = xi.perp();
    let mut m = CMat3::zeros();
    for col in 0..3 {
        let mut e = [c(0.0); 3];
        e[col] = c(1.0);
        let a = solve_coefficients_with(xi, &roots, &e)?.a;
        let mut t = [-I * xi.xi1 * e[2], -I * xi.xi2 * e[2], I * (xi.xi1 * e[0] + xi.xi2 * e[1])];
        for k in 0..3 {
            let w = roots.w[k];
            let h = I / s * a[k];
            t[0] += h * (w * w * p.xi1 + w * xi.xi1);
            t[1] += h * (w * w * p.xi2 + w * xi.xi2);
            t[2] += a[k] * w / roots.lambda[k];
        }
        for i in 0..3 {
            m[(i, col)] = t[i];
        }
    }
    Ok(m)
}

/// Stokes symbol: (|ξ|I + ξξᵀ/|ξ|, iξ; −iξᵀ, 2|ξ|).
pub fn dtn_symbol_stokes(xi: &Frequency) -> Result<CMat3> {
    if xi.is_zero() {
        return Err(Error::SingularFrequency);
    }
    let r = xi.modulus();
    let x = [xi.xi1, xi.xi2];
    Ok(CMat3::from_fn(|i, j| match (i, j) {
        (2, 2) => c(2.0 * r),
        (2, j) => -I * x[j],
        (i, 2) => I * x[i],
        (i, j) => c(if i == j { r } else { 0.0 } + x[i] * x[j] / r),
    }))
}

/// Symbol applied to v̂.
pub fn apply_symbol(m: &CMat3, v: &CVec3) -> CVec3 {
    std::array::from_fn(|i| m[(i, 0)] * v[0] + m[(i, 1)] * v[1] + m[(i, 2)] * v[2])
}

/// Ekman traction matrix M̄_h = (√2/2)((1,−1),(1,1)).
pub fn mbar_h() -> CMat2 {
    CMat2::new(c(R2), c(-R2), c(R2), c(R2))
}

pub fn mbar() -> CMat3 {
    let h = mbar_h();
    CMat3::from_fn(|i, j| if i < 2 && j < 2 { h[(i, j)] } else { c(0.0) })
}

/// Smooth radial cutoff: 1 on |ξ| ≤ 1, exp(1 − 1/(1 − (|ξ|−1)²)) on 1 < |ξ| < 2, 0 beyond.
pub fn standard_cutoff(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let t = r - 1.0;
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// Order-zero column (i√2/(2|ξ|))(ξ₁+ξ₂, ξ₂−ξ₁).
pub fn v1(xi: &Frequency) -> [C64; 2] {
    let k = I * R2 / xi.modulus();
    [k * (xi.xi1 + xi.xi2), k * (xi.xi2 - xi.xi1)]
}

/// Order-zero row (i√2/(2|ξ|))(ξ₂−ξ₁, −ξ₁−ξ₂).
pub fn v2(xi: &Frequency) -> [C64; 2] {
    let k = I * R2 / xi.modulus();
    [k * (xi.xi2 - xi.xi1), k * (-xi.xi1 - xi.xi2)]
}

/// Order-one horizontal part left after the Stokes block: (|ξ|/2)((−3,1),(−1,−3)).
pub fn m1(xi: &Frequency) -> CMat2 {
    let h = 0.5 * xi.modulus();
    CMat2::new(c(-3.0 * h), c(h), c(-h), c(-3.0 * h))
}

/// V₁ iξᵀ.
pub fn m2(xi: &Frequency) -> CMat2 {
    let v = v1(xi);
    let x = [xi.xi1, xi.xi2];
    CMat2::from_fn(|i, j| v[i] * I * x[j])
}

/// −iξ V₂ᵀ.
pub fn m3(xi: &Frequency) -> CMat2 {
    let v = v2(xi);
    let x = [xi.xi1, xi.xi2];
    CMat2::from_fn(|i, j| -I * x[i] * v[j])
}

/// ξξᵀ/|ξ|.
pub fn m4(xi: &Frequency) -> CMat2 {
    let x = [xi.xi1, xi.xi2];
    let r = xi.modulus();
    CMat2::from_fn(|i, j| c(x[i] * x[j] / r))
}

/// Singular low-frequency block (M₁, V₁; V₂ᵀ, 1/|ξ|).
pub fn lowfreq_block(xi: &Frequency) -> CMat3 {
    let (a, b, d) = (m1(xi), v1(xi), v2(xi));
    CMat3::from_fn(|i, j| match (i, j) {
        (2, 2) => c(1.0 / xi.modulus()),
        (2, j) => d[j],
        (i, 2) => b[i],
        (i, j) => a[(i, j)],
    })
}

/// The splitting M_SC = M_S + M̄ + (1−φ)(M_SC−M_S−M̄) + φ·lowfreq_block + φ·M^rem.
#[derive(Clone, Debug)]
pub struct DtNSymbol {
    pub xi: Frequency,
    pub full: CMat3,
    pub stokes: CMat3,
    pub mbar: CMat3,
    pub high_remainder: CMat3,
    pub lowfreq: CMat3,
    /// M^rem itself, finite wherever ξ ≠ 0; only φ·M^rem enters the sum.
    pub m_rem: CMat3,
    pub phi: f64,
}

impl DtNSymbol {
    pub fn m1(&self) -> CMat2 {
        m1(&self.xi)
    }
    pub fn m2(&self) -> CMat2 {
        m2(&self.xi)
    }
    pub fn m3(&self) -> CMat2 {
        m3(&self.xi)
    }
    pub fn m4(&self) -> CMat2 {
        m4(&self.xi)
    }

    pub fn recompose(&self) -> CMat3 {
        self.stokes + self.mbar + self.high_remainder + (self.lowfreq + self.m_rem) * c(self.phi)
    }

    /// ‖recompose − M_SC‖ / ‖M_SC‖.
    pub fn recomposition_error(&self) -> f64 {
        (self.recompose() - self.full).norm() / self.full.norm()
    }
}

pub fn dtn_decompose(xi: &Frequency, cutoff: impl Fn(f64) -> f64) -> Result<DtNSymbol> {
    let full = dtn_symbol(xi)?;
    let stokes = dtn_symbol_stokes(xi)?;
    let phi = cutoff(xi.modulus());
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::Precondition(format!("cutoff value {phi} outside [0, 1]")));
    }
    let mb = mbar();
    let lowfreq = lowfreq_block(xi);
    let rest = full - stokes - mb;
    Ok(DtNSymbol {
        xi: *xi,
        full,
        stokes,
        mbar: mb,
        high_remainder: rest * c(1.0 - phi),
        m_rem: rest - lowfreq,
        lowfreq,
        phi,
    })
}

/// Leading-order symbol in either regime.
pub fn dtn_asymptotic(xi: &Frequency, regime: Regime) -> Result<CMat3> {
    let r = xi.modulus();
    match regime {
        Regime::High => {
            if r < 1.0 {
                return Err(Error::Precondition(format!("high regime needs |xi| >= 1, got {r}")));
            }
            dtn_symbol_stokes(xi)
        }
        Regime::Low => {
            if r > 1.0 {
                return Err(Error::Precondition(format!("low regime needs |xi| <= 1, got {r}")));
            }
            if r == 0.0 {
                return Err(Error::SingularFrequency);
            }
            let mut m = mbar() + lowfreq_block(xi) - CMat3::from_fn(|i, j| if i < 2 && j < 2 { m1(xi)[(i, j)] } else { c(0.0) });
            m[(2, 2)] -= R2;
            Ok(m)
        }
    }
}

/// Magnitudes of directional derivatives of M_SC − M_S along a fixed direction.
///
/// Fourth-order central stencils with step 0.05|ξ|; the truncation error then
/// scales with the same power of |ξ| as the derivative itself.
pub fn dtn_remainder_derivatives(xi: &Frequency, order: usize) -> Result<Matrix3<f64>> {
    let r = xi.modulus();
    if r < 2.0 {
        return Err(Error::Precondition(format!("derivative estimates need |xi| >= 2, got {r}")));
    }
    if order > 3 {
        return Err(Error::Precondition(format!("derivative order {order} > 3")));
    }
    let h = 0.05 * r;
    if !(h.is_finite() && h > 1e3 * f64::MIN_POSITIVE) {
        return Err(Error::Numerical(format!("finite-difference step {h} underflows")));
    }
    let dir = Frequency::polar(h, 0.3);
    let f = |t: f64| -> Result<CMat3> {
        let p = Frequency::new(xi.xi1 + t * dir.xi1, xi.xi2 + t * dir.xi2);
        Ok(dtn_symbol(&p)? - dtn_symbol_stokes(&p)?)
    };
    let stencil: &[(f64, f64)] = match order {
        0 => &[(0.0, 1.0)],
        1 => &[(2.0, -1.0 / 12.0), (1.0, 8.0 / 12.0), (-1.0, -8.0 / 12.0), (-2.0, 1.0 / 12.0)],
        2 => &[(2.0, -1.0 / 12.0), (1.0, 16.0 / 12.0), (0.0, -30.0 / 12.0), (-1.0, 16.0 / 12.0), (-2.0, -1.0 / 12.0)],
        _ => &[
            (3.0, -1.0 / 8.0),
            (2.0, 1.0),
            (1.0, -13.0 / 8.0),
            (-1.0, 13.0 / 8.0),
            (-2.0, -1.0),
            (-3.0, 1.0 / 8.0),
        ],
    };
    let mut acc = CMat3::zeros();
    for &(t, w) in stencil {
        acc += f(t)? * c(w);
    }
    let scale = h.powi(order as i32);
    Ok(acc.map(|z| z.norm() / scale))
}

/// Symbol at a grid index, averaged over Nyquist aliases; M̄ at the zero mode.
pub fn grid_symbol(torus: &Torus, a: usize, b: usize) -> Result<CMat3> {
    if a == 0 && b == 0 {
        return Ok(mbar());
    }
    let al = torus.aliases(a, b);
    let mut m = CMat3::zeros();
    for xi in &al {
        m += dtn_symbol(xi)?;
    }
    Ok(m / c(al.len() as f64))
}

/// Fourier data of a trace with the vertical component rebuilt as iξ·V̂_h.
fn trace_modes(trace: &BoundaryTrace) -> Vec<CVec3> {
    let (v, p) = trace.spectra();
    let t = &trace.torus;
    let n = t.n;
    (0..n * n)
        .map(|idx| {
            let (a, b) = (idx / n, idx % n);
            let v3 = t.deriv_factor(a, b, 0) * p[0][idx] + t.deriv_factor(a, b, 1) * p[1][idx];
            [v[0][idx], v[1][idx], v3]
        })
        .collect()
}

/// DtN traction of a boundary trace on the torus.
pub fn dtn_apply(trace: &BoundaryTrace) -> Result<[Vec<f64>; 3]> {
    trace.validate()?;
    let t = trace.torus;
    let n = t.n;
    let modes = trace_modes(trace);
    zero_mode_solution(&[modes[0][0], modes[0][1], c(0.0)])?;
    let mut out = [vec![c(0.0); n * n], vec![c(0.0); n * n], vec![c(0.0); n * n]];
    for (idx, v) in modes.iter().enumerate() {
        let m = grid_symbol(&t, idx / n, idx % n)?;
        let r = apply_symbol(&m, v);
        for i in 0..3 {
            out[i][idx] = r[i];
        }
    }
    let fft = Fft2::new(n);
    let [o0, o1, o2] = out;
    Ok([fft.inverse_real(o0).0, fft.inverse_real(o1).0, fft.inverse_real(o2).0])
}

/// Re Σ_ξ conj(ĉ)·M_SC ĉ over Fourier-series coefficients ĉ = v̂/n²,
/// i.e. the torus average of DtN(v₀)·v₀.
pub fn dtn_quadratic_form(trace: &BoundaryTrace) -> Result<f64> {
    trace.validate()?;
    let t = trace.torus;
    let n = t.n;
    let norm = 1.0 / (n * n) as f64;
    let mut sum = 0.0;
    for (idx, v) in trace_modes(trace).iter().enumerate() {
        let cv = v.map(|z| z * norm);
        let m = grid_symbol(&t, idx / n, idx % n)?;
        let r = apply_symbol(&m, &cv);
        sum += (0..3).map(|i| (cv[i].conj() * r[i]).re).sum::<f64>();
    }
    Ok(sum)
}

/// Smallest eigenvalue of the Hermitian part of a symbol.
pub fn hermitian_min_eigenvalue(m: &CMat3) -> f64 {
    let h = (m + m.adjoint()) * c(0.5);
    h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stokes_symbol_at_unit_frequency() {
        let m = dtn_symbol_stokes(&Frequency::new(1.0, 0.0)).unwrap();
        let want = CMat3::new(c(2.0), c(0.0), I, c(0.0), c(1.0), c(0.0), -I, c(0.0), c(2.0));
        assert_eq!(m, want);
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(standard_cutoff(0.5), 1.0);
        assert_eq!(standard_cutoff(1.0), 1.0);
        assert_eq!(standard_cutoff(2.0), 0.0);
        let mid = standard_cutoff(1.5);
        assert!((mid - (1.0f64 - 1.0 / 0.75).exp()).abs() < 1e-15);
        assert!(standard_cutoff(1.999) < 1e-100);
    }

    #[test]
    fn zero_frequency_is_singular() {
        assert_eq!(dtn_symbol(&Frequency::ZERO), Err(Error::SingularFrequency));
        assert!(dtn_remainder_derivatives(&Frequency::new(1.0, 0.0), 1).is_err());
        assert!(dtn_remainder_derivatives(&Frequency::new(3.0, 0.0), 4).is_err());
    }

    #[test]
    fn order_one_parts_are_real() {
        let xi = Frequency::new(0.3, -0.7);
        for m in [m2(&xi), m3(&xi), m4(&xi), m1(&xi)] {
            assert!(m.iter().all(|z| z.im == 0.0));
        }
        let m4v = m4(&xi);
        assert!((m4v[(0, 1)].re - 0.3 * -0.7 / xi.modulus()).abs() < 1e-16);
    }

    #[test]
    fn regime_mismatch() {
        assert!(dtn_asymptotic(&Frequency::new(0.5, 0.0), Regime::High).is_err());
        assert!(dtn_asymptotic(&Frequency::new(1.5, 0.0), Regime::Low).is_err());
    }
}
