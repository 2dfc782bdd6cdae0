use nalgebra::Matrix3;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotstokes::dtn_operator::*;
use rotstokes::grid::Torus;
use rotstokes::halfspace_solver::*;
use rotstokes::numerics::{loglog_slope, logspace};
use rotstokes::spectral_core::{characteristic_roots, Frequency, Regime};

const R2: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn norm3(v: &CVec3) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn diff3(a: &CVec3, b: &CVec3) -> f64 {
    norm3(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

// Tractions −∂₃û + p̂e₃ at x₃ = 0 for v̂₀ = (0.7−0.2i, −0.4+1.1i, 0.25+0.5i),
// from a 40-digit solve of the unreduced mode system.
#[test]
fn symbol_matches_high_precision_tractions() {
    let v = [C64::new(0.7, -0.2), C64::new(-0.4, 1.1), C64::new(0.25, 0.5)];
    let cases = [
        (0.03, -0.02, [C64::new(0.68660543891242232, -0.87103107405196819), C64::new(0.66808407402775795, 0.39758704372057982), C64::new(6.7801549499254416, 12.930542863666452)]),
        (0.6, 0.8, [C64::new(0.47195590986885154, 0.18281859722068645), C64::new(-0.49759302635358406, 1.8606451293893258), C64::new(1.5225065569809319, 1.1696838925503551)]),
        (-2.5, 4.0, [C64::new(6.3264052363846951, -4.212554355496165), C64::new(-6.7047816147546329, 10.340694532058864), C64::new(7.2372673016133273, 8.0881704189186193)]),
        (30.0, -11.0, [C64::new(31.219098383064785, -15.893559133300453), C64::new(-16.016154905727386, 38.626008571395832), C64::new(-2.115912410831415, 6.5541451399169708)]),
    ];
    for (x1, x2, want) in cases {
        let m = dtn_symbol(&Frequency::new(x1, x2)).unwrap();
        let got = apply_symbol(&m, &v);
        assert!(diff3(&got, &want) <= 1e-12 * norm3(&want), "at ({x1}, {x2})");
    }
}

#[test]
fn symbol_agrees_with_halfspace_traction() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..1000 {
        let r = 10f64.powf(rng.gen_range(-3.0..3.0));
        let xi = Frequency::polar(r, rng.gen_range(0.0..std::f64::consts::TAU));
        let v: CVec3 = std::array::from_fn(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let roots = characteristic_roots(&xi);
        let co = solve_coefficients_with(&xi, &roots, &v).unwrap();
        let (_, du) = evaluate_velocity_with_derivative(&xi, &co, &roots, 0.0).unwrap();
        let p = evaluate_pressure(&xi, &co, &roots, 0.0).unwrap();
        let t = [-du[0], -du[1], -du[2] + p];
        let m = dtn_symbol(&xi).unwrap();
        let got = apply_symbol(&m, &v);
        let scale = m.norm() * norm3(&v);
        assert!(diff3(&got, &t) <= 1e-10 * scale, "at |xi| = {r}");
    }
}

#[test]
fn high_frequency_limit_is_the_stokes_symbol() {
    let xi = Frequency::polar(1e3, 0.4);
    let gap = (dtn_symbol(&xi).unwrap() - dtn_symbol_stokes(&xi).unwrap()).norm();
    assert!(gap <= 3.0 * 1e3f64.powf(1.0 / 3.0), "gap {gap}");
    let s = dtn_symbol_stokes(&xi).unwrap();
    assert!((s[(0, 0)].re - (1e3 + xi.xi1 * xi.xi1 / 1e3)).abs() < 1e-12 * 1e3);
    let radii = logspace(1e2, 1e4, 13);
    let err: Vec<f64> = radii
        .iter()
        .map(|&r| {
            let x = Frequency::polar(r, 1.1);
            (dtn_symbol(&x).unwrap() - dtn_asymptotic(&x, Regime::High).unwrap()).norm()
        })
        .collect();
    let slope = loglog_slope(&radii, &err);
    assert!(slope <= 0.4, "slope {slope}");
}

#[test]
fn low_frequency_limit() {
    let r = 1e-3;
    let xi = Frequency::polar(r, 0.9);
    let m = dtn_symbol(&xi).unwrap();
    assert!((m[(2, 2)] - c(1.0 / r - R2)).norm() <= 5.0 * r);
    assert!((m[(0, 0)] - c(R2)).norm() <= 5.0 * r);
    assert!((m[(1, 1)] - c(R2)).norm() <= 5.0 * r);
    let radii = logspace(1e-4, 1e-1, 13);
    let err: Vec<f64> = radii
        .iter()
        .map(|&r| {
            let x = Frequency::polar(r, 2.0);
            (dtn_symbol(&x).unwrap() - dtn_asymptotic(&x, Regime::Low).unwrap()).norm()
        })
        .collect();
    let slope = loglog_slope(&radii, &err);
    assert!(slope >= 0.8, "slope {slope}");
}

#[test]
fn horizontal_block_along_the_first_axis() {
    for t in [1e-2, 1e-3, 1e-4] {
        let xi = Frequency::new(t, 0.0);
        let m = dtn_symbol(&xi).unwrap();
        let mb = mbar_h();
        for i in 0..2 {
            for j in 0..2 {
                assert!((m[(i, j)] - mb[(i, j)]).norm() <= 3.0 * t);
            }
        }
        // (√2/2) i(ξ − ξ⊥)/|ξ| = (√2/2)(i, −i) at ξ = (t, 0)
        assert!((m[(0, 2)] - C64::new(0.0, R2)).norm() <= 3.0 * t);
        assert!((m[(1, 2)] - C64::new(0.0, -R2)).norm() <= 3.0 * t);
    }
}

fn sweep() -> Vec<Frequency> {
    logspace(1e-3, 1e3, 2000).iter().enumerate().map(|(k, &r)| Frequency::polar(r, 0.61 * k as f64)).collect()
}

#[test]
fn hermitian_part_is_positive_semidefinite() {
    for xi in sweep() {
        let m = dtn_symbol(&xi).unwrap();
        let e = hermitian_min_eigenvalue(&m);
        assert!(e >= -1e-10 * m.norm(), "min eigenvalue {e} at {xi:?}");
        let s = dtn_symbol_stokes(&xi).unwrap();
        assert!(hermitian_min_eigenvalue(&s) >= -1e-12 * s.norm());
    }
}

#[test]
fn stokes_symbol_is_homogeneous() {
    let xi = Frequency::new(0.37, -1.91);
    let base = dtn_symbol_stokes(&xi).unwrap();
    for t in [0.25, 2.0, 8.0] {
        assert_eq!(dtn_symbol_stokes(&xi.scaled(t)).unwrap(), base * c(t));
    }
}

#[test]
fn decomposition_recomposes() {
    for xi in sweep() {
        let d = dtn_decompose(&xi, standard_cutoff).unwrap();
        assert!(d.recomposition_error() <= 1e-12, "at {xi:?}");
    }
}

#[test]
fn named_parts() {
    let xi = Frequency::new(0.3, 0.4);
    let d = dtn_decompose(&xi, standard_cutoff).unwrap();
    let mb = d.mbar;
    for (i, j, v) in [(0, 0, R2), (0, 1, -R2), (1, 0, R2), (1, 1, R2)] {
        assert_eq!(mb[(i, j)], c(v));
    }
    assert!((0..3).all(|k| mb[(2, k)] == c(0.0) && mb[(k, 2)] == c(0.0)));
    let m4 = d.m4();
    let want = [[0.09 / 0.5, 0.12 / 0.5], [0.12 / 0.5, 0.16 / 0.5]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((m4[(i, j)] - c(want[i][j])).norm() < 1e-15);
        }
    }
    assert_eq!(d.phi, 1.0);
    // outside supp φ the symbol is all high-frequency remainder
    let far = dtn_decompose(&Frequency::new(3.0, 0.0), standard_cutoff).unwrap();
    assert_eq!(far.phi, 0.0);
    assert!((far.high_remainder - (far.full - far.stokes - far.mbar)).norm() == 0.0);
}

fn horizontal(m: &Matrix3<C64>) -> f64 {
    m.fixed_view::<2, 2>(0, 0).norm()
}

#[test]
fn low_frequency_remainder_orders() {
    let radii = logspace(1e-4, 1e-1, 13);
    let mut hor = Vec::new();
    let mut col = Vec::new();
    let mut corner = Vec::new();
    for &r in &radii {
        let d = dtn_decompose(&Frequency::polar(r, 0.7), standard_cutoff).unwrap();
        hor.push(horizontal(&d.m_rem));
        col.push((0..2).map(|i| d.m_rem[(i, 2)].norm() + d.m_rem[(2, i)].norm()).sum::<f64>());
        corner.push(d.m_rem[(2, 2)].norm());
    }
    let s = loglog_slope(&radii, &hor);
    assert!(s >= 1.8, "horizontal remainder slope {s}");
    let s = loglog_slope(&radii, &col);
    assert!(s >= 0.8, "mixed remainder slope {s}");
    assert!(corner.iter().all(|v| *v < 1.0));
}

#[test]
fn remainder_derivative_rates() {
    let radii = logspace(1e2, 1e4, 9);
    let bounds = [(0, 0.4), (1, -0.5), (2, -1.5), (3, -2.5)];
    for (order, bound) in bounds {
        let mags: Vec<f64> = radii
            .iter()
            .map(|&r| dtn_remainder_derivatives(&Frequency::polar(r, 0.2), order).unwrap().max())
            .collect();
        let slope = loglog_slope(&radii, &mags);
        assert!(slope <= bound, "order {order}: slope {slope}");
    }
}

fn random_trace(seed: u64, torus: Torus) -> BoundaryTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = torus.n;
    let k = 2.0 * std::f64::consts::PI / torus.period;
    let mut v = [vec![0.0; n * n], vec![0.0; n * n], vec![0.0; n * n]];
    let mut vh = [vec![0.0; n * n], vec![0.0; n * n]];
    for _ in 0..6 {
        let (m1, m2) = (rng.gen_range(-3i32..=3) as f64, rng.gen_range(-3i32..=3) as f64);
        let amp: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let ph = rng.gen_range(0.0..6.0);
        for i in 0..n {
            for j in 0..n {
                let arg = k * (m1 * torus.coord(i) + m2 * torus.coord(j)) + ph;
                let idx = i * n + j;
                v[0][idx] += amp[0] * arg.cos();
                v[1][idx] += amp[1] * arg.sin();
                vh[0][idx] += amp[2] * arg.sin();
                vh[1][idx] += amp[3] * arg.sin();
                v[2][idx] += k * (m1 * amp[2] + m2 * amp[3]) * arg.cos();
            }
        }
    }
    BoundaryTrace::with_potential(torus, v, vh).unwrap()
}

#[test]
fn quadratic_form_equals_dirichlet_energy() {
    for seed in 0..8 {
        let trace = random_trace(seed, Torus::new(5.0, 12));
        let form = dtn_quadratic_form(&trace).unwrap();
        let energy = trace_energy(&trace).unwrap();
        assert!(form >= 0.0);
        assert!((form - energy).abs() <= 1e-8 * energy, "seed {seed}: {form} vs {energy}");
    }
}

#[test]
fn apply_matches_symbol_on_single_mode() {
    let torus = Torus::new(4.0, 8);
    let n = 8;
    let k = 2.0 * std::f64::consts::PI / 4.0;
    // v₀ = (cos(kx₁), 0, 0)
    let v0 = [(0..n * n).map(|p| (k * torus.coord(p / n)).cos()).collect(), vec![0.0; n * n], vec![0.0; n * n]];
    let trace = BoundaryTrace::from_velocity(torus, v0).unwrap();
    let out = dtn_apply(&trace).unwrap();
    let m = dtn_symbol(&Frequency::new(k, 0.0)).unwrap();
    for p in 0..n * n {
        let ph = C64::from_polar(1.0, k * torus.coord(p / n));
        for i in 0..3 {
            assert!((out[i][p] - (m[(i, 0)] * ph).re).abs() < 1e-13);
        }
    }
}

#[test]
fn apply_commutes_with_grid_translation() {
    let torus = Torus::new(3.0, 10);
    let n = 10;
    let trace = random_trace(4, torus);
    let shift = |f: &Vec<f64>| -> Vec<f64> { (0..n * n).map(|p| f[((p / n + n - 1) % n) * n + p % n]).collect() };
    let moved = BoundaryTrace::with_potential(
        torus,
        [shift(&trace.v0[0]), shift(&trace.v0[1]), shift(&trace.v0[2])],
        [shift(&trace.vh[0]), shift(&trace.vh[1])],
    )
    .unwrap();
    let a = dtn_apply(&trace).unwrap();
    let b = dtn_apply(&moved).unwrap();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..3 {
        for (x, y) in shift(&a[i]).iter().zip(&b[i]) {
            assert!((x - y).abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn zero_mode_traction_is_ekman() {
    let torus = Torus::new(2.0, 4);
    let trace = BoundaryTrace::from_velocity(torus, [vec![1.0; 16], vec![0.0; 16], vec![0.0; 16]]).unwrap();
    let out = dtn_apply(&trace).unwrap();
    assert!(out[0].iter().all(|v| (v - R2).abs() < 1e-15));
    assert!(out[1].iter().all(|v| (v - R2).abs() < 1e-15));
    assert!(out[2].iter().all(|v| v.abs() < 1e-15));
}

proptest! {
    #[test]
    fn symbol_is_hermitian_reflected(logr in -2.0f64..2.0, th in 0.0f64..6.3) {
        let xi = Frequency::polar(10f64.powf(logr), th);
        let m = dtn_symbol(&xi).unwrap();
        let mm = dtn_symbol(&xi.scaled(-1.0)).unwrap();
        prop_assert!((m.map(|z| z.conj()) - mm).norm() <= 1e-12 * m.norm());
    }

    #[test]
    fn symbol_is_rotation_covariant(logr in -2.0f64..2.0, th in 0.0f64..6.3, rot in 0.0f64..6.3) {
        let xi = Frequency::polar(10f64.powf(logr), th);
        let (cs, sn) = (rot.cos(), rot.sin());
        let rxi = Frequency::new(cs * xi.xi1 - sn * xi.xi2, sn * xi.xi1 + cs * xi.xi2);
        let q = Matrix3::new(c(cs), c(-sn), c(0.0), c(sn), c(cs), c(0.0), c(0.0), c(0.0), c(1.0));
        let lhs = dtn_symbol(&rxi).unwrap();
        let rhs = q * dtn_symbol(&xi).unwrap() * q.transpose();
        prop_assert!((lhs - rhs).norm() <= 1e-11 * lhs.norm());
    }

    #[test]
    fn positivity_at_random_frequency(logr in -3.0f64..3.0, th in 0.0f64..6.3) {
        let m = dtn_symbol(&Frequency::polar(10f64.powf(logr), th)).unwrap();
        prop_assert!(hermitian_min_eigenvalue(&m) >= -1e-10 * m.norm());
    }
}
