//! Characteristic exponents of the Stokes-Coriolis mode equation.
//!
//! For a horizontal frequency ξ with s = |ξ|², vertical modes e^{−λx₃} exist
//! when (λ² − s)³ + λ² = 0. Writing ν = λ² − s this is the depressed cubic
//! ν³ + ν + s = 0, whose Cardano radicands are real and positive for every s.

use nalgebra::Matrix3;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Horizontal wave vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frequency {
    pub xi1: f64,
    pub xi2: f64,
}

impl Frequency {
    pub const ZERO: Frequency = Frequency { xi1: 0.0, xi2: 0.0 };

    pub fn new(xi1: f64, xi2: f64) -> Self {
        Self { xi1, xi2 }
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        Self::new(r * theta.cos(), r * theta.sin())
    }

    pub fn modulus_sq(&self) -> f64 {
        self.xi1 * self.xi1 + self.xi2 * self.xi2
    }

    pub fn modulus(&self) -> f64 {
        self.modulus_sq().sqrt()
    }

    /// ξ⊥ = (−ξ₂, ξ₁).
    pub fn perp(&self) -> Frequency {
        Self::new(-self.xi2, self.xi1)
    }

    pub fn dot(&self, other: &Frequency) -> f64 {
        self.xi1 * other.xi1 + self.xi2 * other.xi2
    }

    pub fn scaled(&self, t: f64) -> Frequency {
        Self::new(t * self.xi1, t * self.xi2)
    }

    pub fn is_zero(&self) -> bool {
        self.xi1 == 0.0 && self.xi2 == 0.0
    }
}

/// j = e^{2iπ/3}.
pub fn j() -> C64 {
    C64::new(-0.5, 0.75f64.sqrt())
}

/// The three exponents with positive real part, together with w_k = |ξ|² − λ_k².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralRoots {
    pub lambda: [C64; 3],
    pub w: [C64; 3],
}

impl SpectralRoots {
    pub fn lambda1(&self) -> C64 {
        self.lambda[0]
    }
    pub fn lambda2(&self) -> C64 {
        self.lambda[1]
    }
    pub fn lambda3(&self) -> C64 {
        self.lambda[2]
    }

    /// Roots built from given exponents, with w recomputed as |ξ|² − λ².
    pub fn from_lambdas(lambda: [C64; 3], xi: &Frequency) -> Self {
        let s = xi.modulus_sq();
        Self { lambda, w: lambda.map(|l| C64::new(s, 0.0) - l * l) }
    }
}

fn principal_sqrt(z: C64) -> C64 {
    let r = z.sqrt();
    if r.re < 0.0 { -r } else { r }
}

/// Closed-form roots, stable across all frequencies.
///
/// With a = ∛((2/27)/t), b = ∛(t/2), t = s + √(s² + 4/27), one has ab = 1/3 and
/// the real root ν₁ = a − b = −s/(a² + b² + 1/3). Then λ₁² = −ν₁³, which keeps
/// full relative precision as |ξ| → 0 where s + ν₁ would cancel.
pub fn characteristic_roots(xi: &Frequency) -> SpectralRoots {
    let s = xi.modulus_sq();
    let t = s + (s * s + 4.0 / 27.0).sqrt();
    let a = ((2.0 / 27.0) / t).cbrt();
    let b = (t / 2.0).cbrt();
    let jj = j();
    let w1 = s / (a * a + b * b + 1.0 / 3.0);
    let nu2 = jj * a - jj * jj * b;
    let nu3 = jj * jj * a - jj * b;
    let l1 = w1 * w1.sqrt();
    let l2 = principal_sqrt(C64::new(s, 0.0) + nu2);
    let l3 = principal_sqrt(C64::new(s, 0.0) + nu3);
    SpectralRoots { lambda: [C64::new(l1, 0.0), l2, l3], w: [C64::new(w1, 0.0), -nu2, -nu3] }
}

/// All six roots via eigenvalues of the companion matrix of ν³ + ν + s,
/// polished by Newton steps on p(μ) = (μ − s)³ + μ with μ = λ².
pub fn characteristic_roots_oracle(xi: &Frequency) -> Vec<C64> {
    let s = xi.modulus_sq();
    let companion = Matrix3::new(0.0, 0.0, -s, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0);
    let eig = companion.complex_eigenvalues();
    let mut out = Vec::with_capacity(6);
    for nu in eig.iter() {
        let mut mu = C64::new(s, 0.0) + nu;
        for _ in 0..8 {
            let d = mu - s;
            let p = d * d * d + mu;
            let dp = 3.0 * d * d + 1.0;
            let step = p / dp;
            mu -= step;
            if step.norm() <= 1e-17 * mu.norm() {
                break;
            }
        }
        let r = mu.sqrt();
        out.push(r);
        out.push(-r);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Low,
    High,
}

/// Truncated expansions of the roots.
pub fn roots_asymptotic(xi: &Frequency, regime: Regime) -> Result<SpectralRoots> {
    let r = xi.modulus();
    let jj = j();
    let lambda = match regime {
        Regime::High => {
            if r < 1.0 {
                return Err(Error::Precondition(format!("high regime needs |xi| >= 1, got {r}")));
            }
            let c = [C64::new(1.0, 0.0), jj * jj, jj];
            c.map(|ck| C64::new(r, 0.0) - ck * 0.5 * r.powf(-1.0 / 3.0))
        }
        Regime::Low => {
            if r > 1.0 {
                return Err(Error::Precondition(format!("low regime needs |xi| <= 1, got {r}")));
            }
            let e = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
            let l2 = e * C64::new(1.0, -0.75 * r * r);
            [C64::new(r * r * r, 0.0), l2, l2.conj()]
        }
    };
    Ok(SpectralRoots::from_lambdas(lambda, xi))
}

/// Relative residuals of the root relations, each scaled by its largest term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootResiduals {
    /// λ₁λ₂λ₃ = |ξ|³
    pub product: f64,
    /// (|ξ|²−λ₁²)(|ξ|²−λ₂²)(|ξ|²−λ₃²) = |ξ|²
    pub shifted_product: f64,
    /// (λ²−|ξ|²)³ + λ² = 0, i.e. w³ = λ², worst k
    pub polynomial: f64,
    /// (|ξ|²−λ²)²/λ = λ/(|ξ|²−λ²), worst k
    pub third_row: f64,
}

impl RootResiduals {
    pub fn max(&self) -> f64 {
        self.product.max(self.shifted_product).max(self.polynomial).max(self.third_row)
    }
}

fn rel(a: C64, b: C64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 { 0.0 } else { (a - b).norm() / scale }
}

/// Residuals of the root relations.
///
/// Wherever |ξ|² − λ² appears the stored w is used: recomputing it from λ loses
/// about |ξ|^{4/3} digits of relative accuracy at high frequency.
pub fn validate_root_relations(roots: &SpectralRoots, xi: &Frequency) -> RootResiduals {
    let s = xi.modulus_sq();
    let [l1, l2, l3] = roots.lambda;
    let [w1, w2, w3] = roots.w;
    let product = rel(l1 * l2 * l3, C64::new(s * xi.modulus(), 0.0));
    let shifted_product = rel(w1 * w2 * w3, C64::new(s, 0.0));
    let mut polynomial = 0.0f64;
    let mut third_row = 0.0f64;
    for (l, w) in roots.lambda.iter().zip(&roots.w) {
        polynomial = polynomial.max(rel(w * w * w, l * l));
        if l.norm() > 0.0 && w.norm() > 0.0 {
            third_row = third_row.max(rel(w * w / l, l / w));
        }
    }
    RootResiduals { product, shifted_product, polynomial, third_row }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn zero_frequency_limit() {
        let r = characteristic_roots(&Frequency::ZERO);
        let e = C64::from_polar(1.0, FRAC_PI_4);
        assert_eq!(r.lambda[0], C64::new(0.0, 0.0));
        assert!((r.lambda[1] - e).norm() < 1e-15);
        assert!((r.lambda[2] - e.conj()).norm() < 1e-15);
        let res = validate_root_relations(&r, &Frequency::ZERO);
        assert_eq!(res.product, 0.0);
        assert!(res.max() < 1e-15);
    }

    #[test]
    fn branch_conventions() {
        for r in [1e-3, 0.1, 1.0, 7.0, 1e3] {
            let roots = characteristic_roots(&Frequency::polar(r, 0.4));
            assert!(roots.lambda.iter().all(|l| l.re > 0.0));
            assert_eq!(roots.lambda[0].im, 0.0);
            assert!(roots.lambda[1].im > 0.0);
            assert!((roots.lambda[2] - roots.lambda[1].conj()).norm() <= 1e-15 * roots.lambda[1].norm());
        }
    }

    #[test]
    fn high_frequency_first_root() {
        let roots = characteristic_roots(&Frequency::new(1000.0, 0.0));
        let approx = 1000.0 - 0.5 * 1000f64.powf(-1.0 / 3.0);
        assert!((roots.lambda[0].re - approx).abs() <= 1000f64.powf(-5.0 / 3.0));
    }

    #[test]
    fn product_at_moderate_frequency() {
        let roots = characteristic_roots(&Frequency::polar(0.7, 2.1));
        let p = roots.lambda[0] * roots.lambda[1] * roots.lambda[2];
        assert!((p - 0.343).norm() <= 1e-12 * 0.343);
    }

    #[test]
    fn oracle_at_zero_is_the_factored_sextic() {
        let mut got = characteristic_roots_oracle(&Frequency::ZERO);
        let e = C64::from_polar(1.0, FRAC_PI_4);
        let mut want = vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), e, -e, e.conj(), -e.conj()];
        let key = |z: &C64| (z.re * 1e6).round() as i64 * 10_000_000 + (z.im * 1e6).round() as i64;
        got.sort_by_key(key);
        want.sort_by_key(key);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn asymptotic_values() {
        let h = roots_asymptotic(&Frequency::new(1e3, 0.0), Regime::High).unwrap();
        assert!((h.lambda[0].re - (1000.0 - 0.05)).abs() < 1e-12);
        let l = roots_asymptotic(&Frequency::new(0.0, 1e-2), Regime::Low).unwrap();
        assert!((l.lambda[0].re - 1e-6).abs() < 1e-20);
        let want = C64::from_polar(1.0, FRAC_PI_4) * C64::new(1.0, -7.5e-5);
        assert!((l.lambda[1] - want).norm() < 1e-15);
        assert!(roots_asymptotic(&Frequency::new(0.5, 0.0), Regime::High).is_err());
        assert!(roots_asymptotic(&Frequency::new(2.0, 0.0), Regime::Low).is_err());
    }

    #[test]
    fn perturbation_shows_in_product_residual() {
        let xi = Frequency::polar(0.9, 1.0);
        let mut roots = characteristic_roots(&xi);
        let l1 = roots.lambda[0];
        roots.lambda[0] += 1e-6;
        let res = validate_root_relations(&roots, &xi);
        let expected = 1e-6 / l1.norm();
        assert!((res.product / expected - 1.0).abs() < 1e-3);
    }
}
