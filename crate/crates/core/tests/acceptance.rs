//! Acceptance criteria 1–12, one pass/fail line each.
//!
//! All suites run once in-process with seed 7 for the measurements and timings;
//! the binary then reruns `verify --all --seed 7` and the two output
//! directories must match byte for byte.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use rotstokes::cli::suites::{SuiteReport, SUITES};

const SEED: u64 = 7;

struct Criterion {
    id: usize,
    title: &'static str,
    parts: Vec<(String, Option<f64>, &'static str, bool)>,
}

impl Criterion {
    fn new(id: usize, title: &'static str) -> Self {
        Self { id, title, parts: Vec::new() }
    }

    fn at_most(mut self, label: &str, value: Option<f64>, bound: f64, text: &'static str) -> Self {
        let ok = value.is_some_and(|v| v <= bound);
        self.parts.push((label.into(), value, text, ok));
        self
    }

    fn at_least(mut self, label: &str, value: Option<f64>, bound: f64, text: &'static str) -> Self {
        let ok = value.is_some_and(|v| v >= bound);
        self.parts.push((label.into(), value, text, ok));
        self
    }

    fn within(mut self, label: &str, value: Option<f64>, lo: f64, hi: f64, text: &'static str) -> Self {
        let ok = value.is_some_and(|v| (lo..=hi).contains(&v));
        self.parts.push((label.into(), value, text, ok));
        self
    }

    fn flag(mut self, label: &str, ok: bool, text: &'static str) -> Self {
        self.parts.push((label.into(), None, text, ok));
        self
    }

    fn pass(&self) -> bool {
        self.parts.iter().all(|p| p.3)
    }

    fn line(&self) -> String {
        let detail: Vec<String> = self
            .parts
            .iter()
            .map(|(label, v, text, ok)| {
                let v = v.map(|x| format!(" {x:.3e}")).unwrap_or_default();
                format!("{label}{v} ({text}){}", if *ok { "" } else { " FAILED" })
            })
            .collect();
        format!("criterion {:>2} {}: {}: {}", self.id, if self.pass() { "PASS" } else { "FAIL" }, self.title, detail.join("; "))
    }
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .expect("output directory")
        .map(|e| {
            let p = e.expect("entry").path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).expect("read"))
        })
        .collect()
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let first = tmp.path().join("first");
    let reports: Vec<SuiteReport> = match rotstokes::cli::verify(&SUITES, SEED, &first) {
        Ok(r) => r,
        Err(e) => {
            println!("verification suites failed to run: {e}");
            std::process::exit(1);
        }
    };
    let suite = |n: &str| reports.iter().find(|r| r.name == n).expect("suite ran");
    let m = |s: &str, c: &str| suite(s).measured(c);
    let t = |s: &str, c: &str| suite(s).timing(c);

    let kernels = suite("kernels");
    let worst_exponent = kernels.checks.iter().filter(|c| c.name.ends_with("_exponent")).map(|c| c.measured).fold(f64::NEG_INFINITY, f64::max);
    let worst_change = kernels.checks.iter().filter(|c| c.name.ends_with("_refinement_change")).map(|c| c.measured).fold(0.0, f64::max);
    let kernel_fits = kernels.checks.iter().filter(|c| c.name.ends_with("_exponent")).count();

    let second = tmp.path().join("second");
    let status = Command::new(env!("CARGO_BIN_EXE_rotstokes"))
        .args(["verify", "--all", "--seed", &SEED.to_string(), "--out"])
        .arg(&second)
        .output()
        .expect("run rotstokes");
    let (a, b) = (files(&first), files(&second));
    let identical = !a.is_empty() && a == b;

    let criteria = vec![
        Criterion::new(1, "root identities over 1e4 frequencies")
            .at_most("max relative residual", m("roots", "relation_residual_max"), 1e-12, "<= 1e-12")
            .at_most("sweep seconds", t("roots", "relations_sweep"), 5.0, "< 5"),
        Criterion::new(2, "closed-form vs companion-matrix roots")
            .at_most("max relative gap", m("roots", "oracle_gap_max"), 1e-9, "<= 1e-9"),
        Criterion::new(3, "determinant identity and its limit")
            .at_most("max relative gap", m("halfspace", "determinant_identity_max"), 1e-10, "<= 1e-10")
            .at_most("|det + 2i| near 0", m("halfspace", "determinant_limit_gap"), 1e-6, "<= 1e-6"),
        Criterion::new(4, "asymptotic rates")
            .within("lambda1 high slope", m("roots", "lambda1_high_frequency_slope"), -1.8, -1.5, "rate -5/3")
            .within("lambda1 low slope", m("roots", "lambda1_low_frequency_slope"), 6.5, 7.5, "rate 7")
            .at_most("|M_SC - M_S| slope", m("dtn", "slope_symbol_minus_stokes_growth"), 0.4, "bound 1/3, accept <= 0.4")
            .at_most("first derivative slope", m("dtn", "slope_remainder_derivative_order1"), -0.5, "<= -0.5")
            .at_most("third derivative slope", m("dtn", "slope_remainder_derivative_order3"), -2.5, "<= -2.5"),
        Criterion::new(5, "half-space solve on random modes")
            .at_most("boundary recovery", m("halfspace", "boundary_recovery_max"), 1e-12, "<= 1e-12")
            .at_most("PDE residual", m("halfspace", "momentum_residual_max"), 1e-10, "<= 1e-10")
            .at_most("divergence residual", m("halfspace", "divergence_residual_max"), 1e-12, "<= 1e-12")
            .at_most("energy vs quadrature", m("halfspace", "energy_quadrature_gap_max"), 1e-8, "<= 1e-8"),
        Criterion::new(6, "DtN consistency")
            .at_most("symbol vs traction", m("dtn", "traction_consistency_max"), 1e-10, "<= 1e-10")
            .at_least("scaled min eigenvalue", m("dtn", "hermitian_min_eigenvalue_scaled"), -1e-10, ">= -1e-10")
            .at_most("recomposition", m("dtn", "decomposition_recomposition_max"), 1e-12, "<= 1e-12"),
        Criterion::new(7, "DtN quadratic form vs Dirichlet energy")
            .at_most("max relative gap", m("dtn", "quadratic_form_energy_gap_max"), 1e-8, "<= 1e-8"),
        Criterion::new(8, "singular integral")
            .at_most("vs multiplier oracle", m("singular", "spectral_oracle_gap_max"), 1e-3, "<= 1e-3")
            .at_most("split radius dependence", m("singular", "split_radius_dependence_max"), 1e-6, "<= 1e-6")
            .at_most("bound ratio, frozen constant", m("singular", "interpolation_bound_ratio_max"), 1.0, "<= 1"),
        Criterion::new(9, "kernel decay")
            .flag("all seven kernels fitted", kernel_fits >= 7, ">= 7 fits")
            .at_most("worst exponent", Some(worst_exponent), -2.7, "<= -2.7")
            .at_most("worst refinement change", Some(worst_change), 0.1, "<= 0.1"),
        Criterion::new(10, "flat channel transparency at n_h = 64")
            .at_most("vs half-space per frequency", m("channel", "flat_vs_halfspace_per_frequency"), 1e-10, "<= 1e-10")
            .at_most("glued field", m("channel", "glued_field_gap"), 1e-10, "<= 1e-10")
            .at_most("traction", m("channel", "traction_continuity_gap"), 1e-10, "<= 1e-10")
            .at_most("solve seconds", t("channel", "flat_solve"), 10.0, "< 10"),
        Criterion::new(11, "bumpy channel")
            .within("order 17 to 33", m("channel", "manufactured_order_17_33"), 1.7, 2.3, "2 +- 0.3")
            .within("order 33 to 65", m("channel", "manufactured_order_33_65"), 1.7, 2.3, "2 +- 0.3")
            .at_most("zero amplitude vs flat at n_v = 65", m("channel", "zero_amplitude_gap_n_v_65"), 1e-4, "<= 1e-4")
            .at_most("total seconds", t("channel", "bumpy_total"), 300.0, "< 300"),
        Criterion::new(12, "determinism of verify --all --seed 7")
            .flag("second run exit status 0", status.status.success(), "binary")
            .flag(&format!("{} files byte-identical", a.len()), identical, "two runs"),
    ];
    let mut failed = 0;
    for c in &criteria {
        println!("{}", c.line());
        if !c.pass() {
            failed += 1;
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
