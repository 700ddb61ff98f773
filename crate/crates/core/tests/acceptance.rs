//! Exit criteria. Each test writes one `PASS`/`FAIL` line to stdout (bypassing
//! the harness capture) and then asserts.

use std::io::Write;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polygin::kernels::{relative_discrepancy, Convention, KernelPath, KernelSpec, PreparedKernel};
use polygin::polyalg::Exact;
use polygin::sampler::{radial_chi_square, replicate_seeds, Sampler};
use polygin::statistics::{
    cumulant_exact_smalln, expected_trace, mc_cumulants, normality, variance_quadrature, QuadratureGrid,
    DEFAULT_ANGLES, DEFAULT_RADIAL_NODES, DEFAULT_TOLERANCE,
};
use polygin::theory::{predicted_variance, TestFunction};
use polygin::verify::run_suite;

fn report(name: &str, passed: bool, detail: &str) {
    let line = format!("{} {name}: {detail}\n", if passed { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(passed, "{name}: {detail}");
}

fn tf(s: &str) -> TestFunction {
    TestFunction::parse(s).unwrap()
}

fn spec(variant: &str, n: u32, q: u32) -> KernelSpec {
    match variant {
        "full" => KernelSpec::full(n, q).unwrap(),
        _ => KernelSpec::pure(n, q).unwrap(),
    }
}

fn quadrature_c2(s: &KernelSpec, g: &TestFunction) -> (f64, f64) {
    let grid = QuadratureGrid::for_spec(s, g, DEFAULT_RADIAL_NODES, DEFAULT_ANGLES).unwrap();
    let r = variance_quadrature(s, g, &grid, DEFAULT_TOLERANCE).unwrap();
    assert!(r.converged, "{s} {g}: grid gap {:?}", r.richardson_gap);
    (r.value, r.richardson_gap.unwrap())
}

#[test]
fn exact_identity_suite() {
    let t = Instant::now();
    let suite = run_suite("identities").unwrap();
    let elapsed = t.elapsed();
    let failed: Vec<String> = suite.failures().map(|c| format!("{} [{}]", c.identity, c.case)).collect();
    let crossterms = suite.checks.iter().filter(|c| c.identity == "crossterms").count();
    let passed = suite.passed && crossterms == 30 && elapsed < Duration::from_secs(120);
    report(
        "exact identity suite",
        passed,
        &format!(
            "{} checks ({crossterms} crossterm cases), max error {:e}, {:.2?}, failures {:?}",
            suite.checks.len(),
            suite.max_error(),
            elapsed,
            failed
        ),
    );
}

#[test]
fn kernel_path_agreement() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut worst = 0.0f64;
    let mut worst_case = String::new();
    let mut pairs = 0usize;
    for n in [10u32, 50, 100] {
        for q in 1..=4u32 {
            for variant in ["full", "pure"] {
                let s = spec(variant, n, q);
                let pk = PreparedKernel::new(s, true).unwrap();
                let point = |rng: &mut ChaCha8Rng| {
                    Complex64::from_polar(1.3 * rng.random::<f64>().sqrt(), std::f64::consts::TAU * rng.random::<f64>())
                };
                for _ in 0..1000 {
                    let z = point(&mut rng);
                    let w = point(&mut rng);
                    let b = pk.eval(z, w, KernelPath::Basis, Convention::Weighted).unwrap();
                    let e = pk.eval(z, w, KernelPath::Explicit, Convention::Weighted).unwrap();
                    let r = pk.eval(z, w, KernelPath::Raising, Convention::Weighted).unwrap();
                    let (dz, dw) = (pk.intensity(z.norm()), pk.intensity(w.norm()));
                    let d = relative_discrepancy(b, e, dz, dw)
                        .max(relative_discrepancy(b, r, dz, dw))
                        .max(relative_discrepancy(e, r, dz, dw));
                    if d > worst {
                        worst = d;
                        worst_case = format!("{s} z={z:.3} w={w:.3}");
                    }
                    pairs += 1;
                }
            }
        }
    }
    let elapsed = t.elapsed();
    report(
        "kernel path agreement",
        worst <= 1e-8 && elapsed < Duration::from_secs(60),
        &format!("{pairs} pairs, worst relative discrepancy {worst:e} at {worst_case}, {elapsed:.2?}"),
    );
}

#[test]
fn small_n_cumulant_oracle() {
    let mut worst_var = 0.0f64;
    let mut cases = 0;
    for n in 1..=6u32 {
        for q in 1..=3u32 {
            for variant in ["full", "pure"] {
                let s = spec(variant, n, q);
                for g in ["re", "abs2", "harm(2)"] {
                    let g = tf(g);
                    let exact = cumulant_exact_smalln(2, &s, &g.to_poly::<Exact>().unwrap()).unwrap().value;
                    let (quad, _) = quadrature_c2(&s, &g);
                    worst_var = worst_var.max((quad - exact).abs() / exact.abs());
                    cases += 1;
                }
            }
        }
    }
    let mut k3_lines = Vec::new();
    let mut k3_ok = true;
    let third = [
        (KernelSpec::ginibre(3).unwrap(), "abs2", 0x5eed_0301u64),
        (KernelSpec::full(4, 2).unwrap(), "abs2", 0x5eed_0302),
        (KernelSpec::pure(4, 2).unwrap(), "abs2 + re", 0x5eed_0303),
    ];
    for (s, g, seed) in third {
        let g = tf(g);
        let exact = cumulant_exact_smalln(3, &s, &g.to_poly::<Exact>().unwrap()).unwrap().value;
        let samples = Sampler::new(s).unwrap().sample_many(&replicate_seeds(seed, 5000)).unwrap();
        let mc = mc_cumulants(&samples, &g).unwrap();
        let (k3, se) = (mc.kstats.get(3), mc.kstats.se(3));
        let ok = (k3 - exact).abs() <= 3.0 * se;
        k3_ok &= ok;
        k3_lines.push(format!("{s} {g}: exact {exact:.5} mc {k3:.5} ± {se:.5}"));
    }
    report(
        "small-n cumulant oracle",
        worst_var <= 1e-6 && k3_ok,
        &format!("variance worst relative gap {worst_var:e} over {cases} cases; k3: {}", k3_lines.join("; ")),
    );
}

/// `∫_𝔻 g dA = ∫_0^1 2ρ g(ρ) dρ` by composite Simpson on 20000 panels.
fn disk_integral_radial(g: &TestFunction) -> f64 {
    let m = 20_000;
    let h = 1.0 / m as f64;
    let f = |r: f64| 2.0 * r * g.eval(Complex64::new(r, 0.0));
    let mut s = f(0.0) + f(1.0);
    for i in 1..m {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn circular_law() {
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for g in ["bump(0.5,0.2)", "bump(0.3,0.4)", "bump(0.6,0.3)"] {
        let g = tf(g);
        let disk = disk_integral_radial(&g);
        for q in 1..=3u32 {
            let s = KernelSpec::full(256, q).unwrap();
            let grid = QuadratureGrid::for_spec(&s, &g, DEFAULT_RADIAL_NODES, DEFAULT_ANGLES).unwrap();
            let mean = expected_trace(&s, &g, &grid).unwrap() / (256.0 * q as f64);
            let rel = (mean - disk).abs() / disk;
            worst = worst.max(rel);
            detail.push(format!("{g} q={q} {mean:.5}/{disk:.5}"));
        }
    }
    report(
        "circular law",
        worst <= 0.02,
        &format!("worst relative gap {worst:.4} ({}) in {:.2?}", detail.join(", "), t.elapsed()),
    );
}

#[test]
fn variance_convergence() {
    let t = Instant::now();
    let mut all_ok = true;
    let mut lines = Vec::new();
    for g in ["bump(0.5,0.2)*harm(1)", "bump(0.5,0.2)"] {
        let g = tf(g);
        for q in 1..=3u32 {
            for variant in ["pure", "full"] {
                let errors: Vec<f64> = [50u32, 100, 200, 400]
                    .iter()
                    .map(|&n| {
                        let s = spec(variant, n, q);
                        let pred = predicted_variance(&s, &g).unwrap().total;
                        (quadrature_c2(&s, &g).0 - pred).abs() / pred
                    })
                    .collect();
                let monotone = errors.windows(2).all(|w| w[1] <= w[0]);
                let ok = monotone && errors[3] <= 0.05;
                all_ok &= ok;
                lines.push(format!(
                    "{g} {variant} q={q}: [{}]{}",
                    errors.iter().map(|e| format!("{e:.4}")).collect::<Vec<_>>().join(", "),
                    if ok { "" } else { " *" }
                ));
            }
        }
    }
    let elapsed = t.elapsed();
    report(
        "variance convergence",
        all_ok && elapsed < Duration::from_secs(900),
        &format!("relative errors at n = 50, 100, 200, 400: {} ({elapsed:.2?})", lines.join("; ")),
    );
}

#[test]
fn bulk_averaging() {
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for g in ["bump(0.5,0.2)", "bump(0.5,0.2)*harm(1)"] {
        let g = tf(g);
        let pure: Vec<f64> = (1..=3).map(|r| quadrature_c2(&spec("pure", 400, r), &g).0).collect();
        for q in [2u32, 3] {
            let full = quadrature_c2(&spec("full", 400, q), &g).0;
            let avg = pure[..q as usize].iter().sum::<f64>() / q as f64;
            let rel = (full - avg).abs() / avg;
            worst = worst.max(rel);
            detail.push(format!("{g} q={q}: full {full:.5} mean pure {avg:.5}"));
        }
    }
    report("bulk averaging", worst <= 0.05, &format!("worst relative gap {worst:.4} ({})", detail.join("; ")));
}

#[test]
fn clt_normality() {
    let g = tf("bump(0.5,0.2)*harm(1)");
    let mut ok = true;
    let mut lines = Vec::new();
    for (variant, seed) in [("full", 0x5eed_0701u64), ("pure", 0x5eed_0702)] {
        let s = spec(variant, 64, 2);
        let (quad, _) = quadrature_c2(&s, &g);
        let samples = Sampler::new(s).unwrap().sample_many(&replicate_seeds(seed, 2000)).unwrap();
        let mc = mc_cumulants(&samples, &g).unwrap();
        let nrm = normality(&mc.values).unwrap().unwrap();
        let (k2, se2) = (mc.kstats.get(2), mc.kstats.se(2));
        let var_ok = (k2 - quad).abs() <= 3.0 * se2;
        let skew_ok = nrm.skewness.abs() <= 3.0 * nrm.skewness_se;
        let kurt_ok = nrm.excess_kurtosis.abs() <= 3.0 * nrm.kurtosis_se;
        let ks_ok = nrm.ks_distance < 0.035;
        ok &= var_ok && skew_ok && kurt_ok && ks_ok;
        lines.push(format!(
            "{s}: var {k2:.5} ± {se2:.5} vs {quad:.5}, skew {:.4} ± {:.4}, kurt {:.4} ± {:.4}, KS {:.4}",
            nrm.skewness, nrm.skewness_se, nrm.excess_kurtosis, nrm.kurtosis_se, nrm.ks_distance
        ));
    }
    report("clt normality", ok, &lines.join("; "));
}

#[test]
fn sampler_soundness() {
    let mut draws = 0usize;
    let mut cardinality_ok = true;
    let mut chi_ok = true;
    let mut lines = Vec::new();
    for q in 1..=3u32 {
        for (i, variant) in ["full", "pure"].into_iter().enumerate() {
            let s = spec(variant, 32, q);
            let seed = 0x5eed_0800 + 16 * q as u64 + i as u64;
            let samples = Sampler::new(s).unwrap().sample_many(&replicate_seeds(seed * 10_000, 2000)).unwrap();
            draws += samples.len();
            cardinality_ok &= samples.iter().all(|x| x.points.len() == s.dimension());
            let chi = radial_chi_square(&samples, 32).unwrap();
            chi_ok &= chi.statistic <= chi.critical_1pct;
            lines.push(format!("{s}: chi2 {:.2} (crit {:.2}, p {:.3})", chi.statistic, chi.critical_1pct, chi.p_value));
        }
    }
    report(
        "sampler soundness",
        cardinality_ok && chi_ok && draws >= 10_000,
        &format!("{draws} draws, cardinality exact: {cardinality_ok}; {}", lines.join("; ")),
    );
}
