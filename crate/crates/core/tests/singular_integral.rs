use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotstokes::grid::Torus;
use rotstokes::singular_integral::*;
use rotstokes::spectral_core::Frequency;
use std::f64::consts::PI;
use std::sync::OnceLock;

const PAIRS: [(usize, usize); 3] = [(0, 0), (0, 1), (1, 1)];

fn torus() -> Torus {
    Torus::new(8.0 * PI, 32)
}

fn plan(k: f64) -> &'static SingularIntegralPlan {
    static PLANS: OnceLock<Vec<SingularIntegralPlan>> = OnceLock::new();
    let plans = PLANS.get_or_init(|| [0.5, 1.0, 2.0].iter().map(|&k| SingularIntegralPlan::new(torus(), k).unwrap()).collect());
    plans.iter().find(|p| p.k == k).unwrap()
}

fn gaussian(t: &Torus, centre: [f64; 2], width: f64, amp: f64) -> Vec<f64> {
    let n = t.n;
    let p = t.period;
    (0..n * n)
        .map(|q| {
            // nearest periodic image
            let wrap = |d: f64| d - p * (d / p).round();
            let dx = wrap(t.coord(q / n) - centre[0]);
            let dy = wrap(t.coord(q % n) - centre[1]);
            amp * (-(dx * dx + dy * dy) / (2.0 * width * width)).exp()
        })
        .collect()
}

fn mixture(t: &Torus, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut g = vec![0.0; t.n * t.n];
    for _ in 0..rng.gen_range(1..4) {
        let c = [rng.gen_range(0.0..t.period), rng.gen_range(0.0..t.period)];
        let part = gaussian(t, c, rng.gen_range(0.7..3.0), rng.gen_range(-1.0..1.0));
        g.iter_mut().zip(part).for_each(|(a, b)| *a += b);
    }
    g
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn shift(t: &Torus, v: &[f64], da: usize, db: usize) -> Vec<f64> {
    let n = t.n;
    (0..n * n).map(|p| v[((p / n + n - da) % n) * n + (p % n + n - db) % n]).collect()
}

#[test]
fn kernel_substitution_values() {
    assert!((kernel_gamma(0, 0, [1.0, 0.0]).unwrap() + 2.0 * C_I).abs() < 1e-16);
    assert!((kernel_gamma(1, 1, [1.0, 0.0]).unwrap() - C_I).abs() < 1e-16);
    assert!((kernel_gamma(0, 1, [1.0, 1.0]).unwrap() + 3.0 * C_I / 2f64.powf(2.5)).abs() < 1e-16);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let x: [f64; 2] = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let r: f64 = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let tr = kernel_gamma(0, 0, x).unwrap() + kernel_gamma(1, 1, x).unwrap();
        assert!((tr + C_I / r.powi(3)).abs() < 1e-13 * C_I / r.powi(3));
    }
    assert!(kernel_gamma(1, 1, [0.0, 0.0]).is_err());
}

#[test]
fn kernel_angular_means() {
    for r in [0.1, 1.0, 7.0] {
        let scale = C_I / (r * r * r);
        // the off-diagonal and trace-free parts average to zero
        assert!(gamma_angular_mean(0, 1, r, 64).unwrap().abs() < 1e-12 * scale);
        let tf = gamma_angular_mean(0, 0, r, 64).unwrap() - gamma_angular_mean(1, 1, r, 64).unwrap();
        assert!(tf.abs() < 1e-12 * scale);
        // the diagonal keeps the isotropic part δ/r³ − 3/(2r³)
        for i in 0..2 {
            assert!((gamma_angular_mean(i, i, r, 64).unwrap() + 0.5 * scale).abs() < 1e-12 * scale);
        }
        // first moments vanish, which is what makes the compensation radius irrelevant
        for (i, j) in PAIRS {
            for k in 0..2 {
                let m: f64 = (0..64)
                    .map(|s| {
                        let t = 2.0 * PI * s as f64 / 64.0;
                        let x = [r * t.cos(), r * t.sin()];
                        kernel_gamma(i, j, x).unwrap() * x[k]
                    })
                    .sum::<f64>()
                    / 64.0;
                assert!(m.abs() < 1e-12 * scale * r);
            }
        }
    }
}

#[test]
fn multiplier_symbol_and_flag() {
    // a₁₁ = a₂₂ leaves a₁₁|ξ|, which is not a polynomial; only the vanishing form is
    let m = OrderOneMultiplier::new([[1.0, 0.5], [-0.5, 1.0]]);
    assert!(!m.is_polynomial());
    assert!(OrderOneMultiplier::new([[0.0, 0.5], [-0.5, 0.0]]).is_polynomial());
    let xi = Frequency::new(0.6, 0.8);
    assert!((m.symbol(&xi) - 1.0).abs() < 1e-15);
    assert!(!OrderOneMultiplier::entry(1, 1).is_polynomial());
    assert!((OrderOneMultiplier::entry(0, 1).symbol(&xi) - 0.48).abs() < 1e-15);
}

#[test]
fn calibrated_constant() {
    let fine = calibrate_c_i(256.0, 1024, 0.5).unwrap();
    let coarse = calibrate_c_i(256.0, 512, 0.5).unwrap();
    assert!((fine.exponent + 1.0).abs() < 0.05, "exponent {}", fine.exponent);
    assert!(fine.residual < 0.05);
    assert!(((fine.c_i - coarse.c_i) / fine.c_i).abs() < 0.01);
    assert!((fine.c_i - C_I).abs() < 0.01 * C_I, "c_i {}", fine.c_i);
}

#[test]
fn constant_field_maps_to_zero() {
    let t = torus();
    let f = SmoothedField::new(t, &vec![2.5; t.n * t.n]).unwrap();
    for (i, j) in PAIRS {
        assert!(sup(&plan(1.0).apply(&OrderOneMultiplier::entry(i, j), &f).unwrap()) < 1e-14);
    }
}

#[test]
fn quadrature_matches_spectral_oracle() {
    let t = torus();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let f = SmoothedField::new(t, &mixture(&t, &mut rng)).unwrap();
        let a = [[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)], [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]];
        let m = OrderOneMultiplier::new(a);
        let q = plan(1.0).apply(&m, &f).unwrap();
        let s = apply_spectral(&m, &f);
        assert!(gap(&q, &s) <= 1e-3 * sup(&s), "gap {} scale {}", gap(&q, &s), sup(&s));
    }
}

#[test]
fn split_radius_does_not_matter() {
    let t = torus();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..5 {
        let f = SmoothedField::new(t, &mixture(&t, &mut rng)).unwrap();
        for (i, j) in PAIRS {
            let m = OrderOneMultiplier::entry(i, j);
            let base = plan(1.0).apply(&m, &f).unwrap();
            for k in [0.5, 2.0] {
                assert!(gap(&base, &plan(k).apply(&m, &f).unwrap()) < 1e-6);
            }
        }
    }
}

#[test]
fn split_parts_sum_to_total() {
    let t = torus();
    let f = SmoothedField::new(t, &gaussian(&t, [10.0, 12.0], 1.0, 1.0)).unwrap();
    let m = OrderOneMultiplier::entry(0, 0);
    let (a, b) = plan(0.5).apply_split(&m, &f).unwrap();
    let total = plan(0.5).apply(&m, &f).unwrap();
    let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    assert!(gap(&sum, &total) < 1e-14);
    assert!(plan(0.5).tail_bound(&m, &f) < 0.1 * sup(&total));
}

#[test]
fn quadrature_error_is_recorded() {
    for k in [0.5, 1.0, 2.0] {
        assert!(plan(k).quadrature_error <= plan(k).rule.tol);
    }
    // a rule too coarse to resolve the far-field oscillation is refused
    let t = torus();
    let rule = QuadratureRule { panel: 40.0, panel_nodes: 4, ..QuadratureRule::for_torus(&t) };
    assert!(matches!(
        SingularIntegralPlan::with_rule(t, 1.0, rule),
        Err(rotstokes::error::Error::NoConvergence { .. })
    ));
}

#[test]
fn under_resolved_grid_is_rejected() {
    let t = Torus::new(8.0 * PI, 8);
    assert!(SmoothedField::new(t, &vec![0.0; 64]).is_err());
}

#[test]
fn interpolation_bound_over_width_sweep() {
    let t = torus();
    let mut ratios = Vec::new();
    for w in [0.5, 1.0, 2.0, 4.0, 8.0] {
        let f = SmoothedField::new(t, &gaussian(&t, [12.0, 12.0], w, 1.0)).unwrap();
        let r = interpolation_bound_check(&f).unwrap();
        assert!(r.pass, "w = {w}: {r:?}");
        ratios.push(r.lhs / (f.sup * f.hessian_sup).sqrt());
        // each half stays under its own bound, and at K* the bounds differ by exactly 4
        assert!(r.inner_measured <= r.inner_bound && r.outer_measured <= r.outer_bound);
        assert!((r.outer_bound / r.inner_bound - 4.0).abs() < 1e-12);
        let bal = r.outer_measured / r.inner_measured;
        assert!((0.25..=4.0).contains(&bal), "w = {w}: inner {} outer {}", r.inner_measured, r.outer_measured);
    }
    assert!(ratios.iter().all(|&q| q <= INTERPOLATION_CONSTANT));
}

#[test]
fn interpolation_lhs_is_linear_in_amplitude() {
    let t = torus();
    let base = interpolation_bound_check(&SmoothedField::new(t, &gaussian(&t, [12.0, 12.0], 1.5, 1.0)).unwrap()).unwrap();
    for amp in [0.1, 3.0] {
        let r = interpolation_bound_check(&SmoothedField::new(t, &gaussian(&t, [12.0, 12.0], 1.5, amp)).unwrap()).unwrap();
        assert!((r.lhs - amp * base.lhs).abs() < 1e-10 * amp * base.lhs);
        assert!((r.rhs - amp * base.rhs).abs() < 1e-10 * amp * base.rhs);
    }
}

#[test]
fn adjoint_identities_on_gaussian_pairs() {
    let t = torus();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..4 {
        let g = mixture(&t, &mut rng);
        let psi = mixture(&t, &mut rng);
        for (i, j) in PAIRS {
            let r = adjointness_check(plan(1.0), &OrderOneMultiplier::entry(i, j), &g, &psi).unwrap();
            assert!(r.symmetry.abs() <= 1e-5 * r.scale.max(1.0));
            assert!(r.derivative.iter().all(|d| d.abs() <= 1e-5 * r.scale.max(1.0)), "{r:?}");
        }
    }
    // g = ψ: the symmetry residual vanishes outright
    let g = mixture(&t, &mut rng);
    let r = adjointness_check(plan(1.0), &OrderOneMultiplier::entry(0, 1), &g, &g).unwrap();
    assert!(r.symmetry.abs() < 1e-14 * r.scale.max(1.0));
}

#[test]
fn translating_both_fields_leaves_pairings_unchanged() {
    let t = torus();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let g = mixture(&t, &mut rng);
    let psi = mixture(&t, &mut rng);
    let m = OrderOneMultiplier::new([[0.4, -0.2], [0.9, 1.3]]);
    let a = adjointness_check(plan(2.0), &m, &g, &psi).unwrap();
    let b = adjointness_check(plan(2.0), &m, &shift(&t, &g, 5, 11), &shift(&t, &psi, 5, 11)).unwrap();
    assert!((a.symmetry - b.symmetry).abs() < 1e-10);
    for k in 0..2 {
        assert!((a.derivative[k] - b.derivative[k]).abs() < 1e-10);
    }
}

#[test]
fn translation_commutes_with_the_operator() {
    let t = torus();
    let g = gaussian(&t, [3.0, 20.0], 1.2, 1.0);
    let m = OrderOneMultiplier::entry(0, 1);
    let a = shift(&t, &plan(1.0).apply(&m, &SmoothedField::new(t, &g).unwrap()).unwrap(), 7, 3);
    let b = plan(1.0).apply(&m, &SmoothedField::new(t, &shift(&t, &g, 7, 3)).unwrap()).unwrap();
    assert!(gap(&a, &b) < 1e-12);
}

#[test]
fn nonpositive_split_radius_fails() {
    let t = torus();
    let f = SmoothedField::new(t, &gaussian(&t, [1.0, 1.0], 1.0, 1.0)).unwrap();
    assert!(apply_i(&OrderOneMultiplier::entry(0, 0), &f, -1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn operator_is_linear(seed in 0u64..1000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let t = torus();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = mixture(&t, &mut rng);
        let h = mixture(&t, &mut rng);
        let comb: Vec<f64> = g.iter().zip(&h).map(|(x, y)| a * x + b * y).collect();
        let m = OrderOneMultiplier::new([[1.0, 0.3], [-0.7, 0.2]]);
        let p = plan(1.0);
        let ig = p.apply(&m, &SmoothedField::new(t, &g).unwrap()).unwrap();
        let ih = p.apply(&m, &SmoothedField::new(t, &h).unwrap()).unwrap();
        let ic = p.apply(&m, &SmoothedField::new(t, &comb).unwrap()).unwrap();
        let lin: Vec<f64> = ig.iter().zip(&ih).map(|(x, y)| a * x + b * y).collect();
        prop_assert!(gap(&ic, &lin) < 1e-12 * (1.0 + sup(&lin)));
    }

    #[test]
    fn multiplier_is_one_homogeneous(x in -3.0f64..3.0, y in -3.0f64..3.0, s in 0.01f64..50.0) {
        prop_assume!(x.abs() + y.abs() > 1e-3);
        let m = OrderOneMultiplier::new([[0.3, -1.1], [0.8, 2.0]]);
        let xi = Frequency::new(x, y);
        prop_assert!((m.symbol(&xi.scaled(s)) - s * m.symbol(&xi)).abs() < 1e-13 * s * (1.0 + m.symbol(&xi).abs()));
    }
}
