use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use polygin::kernels::{relative_discrepancy, Convention, KernelPath, KernelSpec, PreparedKernel, Variant, RAW_MAX_N};
use polygin::kernels::MAX_RADIUS;
use polygin::sampler::{read_samples, write_samples, PointSample, Sampler};
use polygin::statistics::{
    fluctuations, mc_cumulants, variance_quadrature, Normality, QuadratureGrid, Report, MIN_REPLICATES,
};
use polygin::theory::{predicted_variance, VariancePrediction};
use polygin::verify::{run_suite, SuiteReport, SUITES};

use crate::config::ExperimentConfig;
use crate::CliError;

pub const REPORT_SCHEMA: &str = "polygin-report/1";

/// One pass/fail comparison recorded in a report.
#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    bound: f64,
    passed: bool,
}

#[derive(Serialize)]
struct VarianceDoc<'a> {
    schema: &'static str,
    command: &'static str,
    config: &'a ExperimentConfig,
    report: Report,
    prediction: VariancePrediction,
    relative_error: f64,
    checks: Vec<Check>,
}

#[derive(Serialize)]
struct CltDoc<'a> {
    schema: &'static str,
    command: &'static str,
    config: &'a ExperimentConfig,
    reports: Vec<Report>,
    quadrature: Report,
    prediction: VariancePrediction,
    normality: Option<Normality>,
    checks: Vec<Check>,
    /// `X_g` minus its sample mean, one value per replicate.
    fluctuations: Vec<f64>,
}

#[derive(Serialize)]
struct StatsDoc<'a> {
    schema: &'static str,
    command: &'static str,
    config: &'a ExperimentConfig,
    reports: Vec<Report>,
    normality: Option<Normality>,
}

#[derive(Serialize)]
struct VerifyDoc<'a> {
    schema: &'static str,
    command: &'static str,
    config: &'a ExperimentConfig,
    report: &'a SuiteReport,
}

pub fn marker_path(out: &Path) -> PathBuf {
    let mut s = OsString::from(out.as_os_str());
    s.push(".failed");
    PathBuf::from(s)
}

/// Runs `f`, clearing a stale `.failed` marker first and writing one if `f`
/// fails for any reason other than a tolerance check on a complete report.
fn with_marker(out: Option<&Path>, f: impl FnOnce() -> Result<(), CliError>) -> Result<(), CliError> {
    let marker = out.map(marker_path);
    if let Some(m) = &marker {
        if m.exists() {
            fs::remove_file(m).map_err(polygin::Error::from)?;
        }
    }
    let result = f();
    if let (Err(e), Some(m)) = (&result, &marker) {
        if !matches!(e, CliError::Tolerance(_)) {
            // best effort: the original error is what gets reported
            let _ = fs::write(m, format!("{e}\n"));
        }
    }
    result
}

/// Pretty JSON to `out` (written to a temporary file, then renamed) or stdout.
fn emit(out: Option<&Path>, doc: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(doc).map_err(polygin::Error::from)?;
    text.push('\n');
    match out {
        None => print!("{text}"),
        Some(p) => {
            let mut tmp = OsString::from(p.as_os_str());
            tmp.push(".tmp");
            fs::write(&tmp, text).map_err(polygin::Error::from)?;
            fs::rename(&tmp, p).map_err(polygin::Error::from)?;
        }
    }
    Ok(())
}

fn verdict(checks: &[Check]) -> Result<(), CliError> {
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} = {:e} exceeds {:e}", c.name, c.value, c.bound))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Tolerance(failed.join("; ")))
    }
}

fn positive(name: &str, v: Option<f64>) -> Result<(), CliError> {
    match v {
        Some(x) if !(x > 0.0) => Err(CliError::Usage(format!("{name} must be positive, got {x}"))),
        _ => Ok(()),
    }
}

fn enough_replicates(got: usize) -> Result<(), CliError> {
    if got < MIN_REPLICATES {
        return Err(polygin::Error::TooFewReplicates { got, need: MIN_REPLICATES }.into());
    }
    Ok(())
}

fn format_complex(v: Complex64) -> String {
    if v.im == 0.0 {
        format!("{}", v.re)
    } else {
        format!("{}{}{}i", v.re, if v.im < 0.0 { "-" } else { "+" }, v.im.abs())
    }
}

pub fn kernel(cfg: &ExperimentConfig, z: Complex64, w: Complex64, path: KernelPath, weighted: bool) -> Result<(), CliError> {
    let spec = cfg.kernel_spec()?;
    let conv = if weighted { Convention::Weighted } else { Convention::Raw };
    if conv == Convention::Raw && spec.n > RAW_MAX_N {
        return Err(polygin::Error::Capacity(format!(
            "raw kernel requested with n = {} > {RAW_MAX_N}; use --weighted true",
            spec.n
        ))
        .into());
    }
    let v = PreparedKernel::new(spec, path == KernelPath::Raising)?.eval(z, w, path, conv)?;
    println!("{}", format_complex(v));
    Ok(())
}

pub fn kernel_check(cfg: &ExperimentConfig, pairs: usize, seed: u64, radius: f64, tolerance: f64) -> Result<(), CliError> {
    let n = cfg.spec.n.ok_or_else(|| CliError::Usage("missing --n".into()))?;
    let q = cfg.spec.q.ok_or_else(|| CliError::Usage("missing --q".into()))?;
    let variants = match cfg.spec.variant {
        Some(v) => vec![v],
        None => vec![Variant::Full, Variant::Pure],
    };
    let specs = variants
        .into_iter()
        .map(|v| KernelSpec::new(n, q, v))
        .collect::<polygin::Result<Vec<_>>>()?;
    if pairs == 0 {
        return Err(CliError::Usage("--pairs must be positive".into()));
    }
    if !(radius > 0.0 && radius <= MAX_RADIUS) {
        return Err(CliError::Usage(format!("--radius must lie in (0, {MAX_RADIUS}]")));
    }
    positive("--tolerance", Some(tolerance))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for spec in &specs {
        let pk = PreparedKernel::new(*spec, true)?;
        for _ in 0..pairs {
            let mut point = || {
                Complex64::from_polar(radius * rng.random::<f64>().sqrt(), std::f64::consts::TAU * rng.random::<f64>())
            };
            let (z, w) = (point(), point());
            let b = pk.eval(z, w, KernelPath::Basis, Convention::Weighted)?;
            let e = pk.eval(z, w, KernelPath::Explicit, Convention::Weighted)?;
            let r = pk.eval(z, w, KernelPath::Raising, Convention::Weighted)?;
            let (dz, dw) = (pk.intensity(z.norm()), pk.intensity(w.norm()));
            worst = worst
                .max(relative_discrepancy(b, e, dz, dw))
                .max(relative_discrepancy(b, r, dz, dw))
                .max(relative_discrepancy(e, r, dz, dw));
        }
    }
    let names: Vec<String> = specs.iter().map(|s| s.to_string()).collect();
    println!(
        "max relative discrepancy {worst:e} over {} pairs ({})",
        pairs * specs.len(),
        names.join(", ")
    );
    verdict(&[Check { name: "max relative discrepancy", value: worst, bound: tolerance, passed: worst <= tolerance }])
}

pub fn sample(mut cfg: ExperimentConfig) -> Result<(), CliError> {
    let spec = cfg.resolve_spec()?;
    let seeds = cfg.resolve_seeds(1)?;
    let out = cfg.output_path(true)?.expect("required output");
    with_marker(Some(&out), || {
        let samples = Sampler::new(spec)?.sample_many(&seeds)?;
        let meta = write_samples(&out, &samples, seeds[0])?;
        println!(
            "wrote {} samples of {spec} to {} ({} rejections)",
            meta.samples,
            out.display(),
            meta.rejections
        );
        Ok(())
    })
}

pub fn stats(mut cfg: ExperimentConfig) -> Result<(), CliError> {
    let g = cfg.resolve_g()?;
    let k_max = *cfg.verify.k_max.get_or_insert(4);
    if !(1..=4).contains(&k_max) {
        return Err(CliError::Usage(format!("--k-max must lie in 1..=4, got {k_max}")));
    }
    let out = cfg.output_path(false)?;

    let (samples, rejections) = match cfg.output.input.clone() {
        Some(input) => {
            if cfg.seeds != Default::default() {
                return Err(CliError::Usage("seeds cannot be combined with --input".into()));
            }
            let (meta, points) = read_samples(&input)?;
            let spec = KernelSpec::new(meta.n, meta.q, meta.variant)?;
            let asked = (cfg.spec.n, cfg.spec.q, cfg.spec.variant);
            if asked.0.is_some_and(|n| n != spec.n)
                || asked.1.is_some_and(|q| q != spec.q)
                || asked.2.is_some_and(|v| v != spec.variant)
            {
                return Err(CliError::Usage(format!("{} holds {spec}, not the requested spec", input.display())));
            }
            cfg.spec.n = Some(spec.n);
            cfg.spec.q = Some(spec.q);
            cfg.spec.variant = Some(spec.variant);
            enough_replicates(points.len())?;
            let samples: Vec<PointSample> = points
                .into_iter()
                .enumerate()
                .map(|(i, points)| PointSample {
                    points,
                    spec,
                    seed: meta.seed.wrapping_add(i as u64),
                    rejection_count: 0,
                })
                .collect();
            (samples, Some(meta.rejections))
        }
        None => {
            let spec = cfg.resolve_spec()?;
            let seeds = cfg.resolve_seeds(1000)?;
            enough_replicates(seeds.len())?;
            let samples = Sampler::new(spec)?.sample_many(&seeds)?;
            let rejections = samples.iter().map(|s| s.rejection_count).sum();
            (samples, Some(rejections))
        }
    };

    with_marker(out.as_deref(), || {
        let mc = mc_cumulants(&samples, &g)?;
        let mut reports = Vec::with_capacity(k_max);
        for k in 1..=k_max {
            let mut r = Report::new(&mc.report(k)?);
            if let Some(rej) = rejections {
                r = r.with_rejections(rej);
            }
            reports.push(r);
        }
        let doc = StatsDoc { schema: REPORT_SCHEMA, command: "stats", config: &cfg, reports, normality: mc.normality };
        emit(out.as_deref(), &doc)
    })
}

pub fn variance(mut cfg: ExperimentConfig) -> Result<(), CliError> {
    let spec = cfg.resolve_spec()?;
    let g = cfg.resolve_g()?;
    let (nr, ntheta, tol) = cfg.resolve_grid()?;
    let max_rel = cfg.verify.max_relative_error;
    positive("--max-relative-error", max_rel)?;
    let out = cfg.output_path(false)?;
    let grid = QuadratureGrid::for_spec(&spec, &g, nr, ntheta)?;

    with_marker(out.as_deref(), || {
        let prediction = predicted_variance(&spec, &g)?;
        let c2 = variance_quadrature(&spec, &g, &grid, tol)?;
        let report = Report::new(&c2).with_grid(&grid).with_prediction(&prediction);
        let relative_error = report.relative_error().unwrap_or(f64::NAN);
        let mut checks = vec![Check {
            name: "richardson gap",
            value: c2.richardson_gap.unwrap_or(0.0),
            bound: tol,
            passed: c2.converged,
        }];
        if let Some(m) = max_rel {
            checks.push(Check { name: "relative error", value: relative_error, bound: m, passed: relative_error <= m });
        }
        if out.is_some() {
            println!(
                "C2 = {:.6e}, prediction = {:.6e}, relative error = {relative_error:.4}",
                report.value, prediction.total
            );
        }
        let doc = VarianceDoc {
            schema: REPORT_SCHEMA,
            command: "variance",
            config: &cfg,
            report,
            prediction,
            relative_error,
            checks,
        };
        emit(out.as_deref(), &doc)?;
        verdict(&doc.checks)
    })
}

pub fn clt(mut cfg: ExperimentConfig) -> Result<(), CliError> {
    let spec = cfg.resolve_spec()?;
    let g = cfg.resolve_g()?;
    let (nr, ntheta, tol) = cfg.resolve_grid()?;
    let seeds = cfg.resolve_seeds(2000)?;
    enough_replicates(seeds.len())?;
    let sigma = *cfg.verify.sigma.get_or_insert(3.0);
    positive("--sigma", Some(sigma))?;
    let out = cfg.output_path(false)?;
    let grid = QuadratureGrid::for_spec(&spec, &g, nr, ntheta)?;

    with_marker(out.as_deref(), || {
        let prediction = predicted_variance(&spec, &g)?;
        let samples = Sampler::new(spec)?.sample_many(&seeds)?;
        let mc = mc_cumulants(&samples, &g)?;
        let mut reports = Vec::with_capacity(3);
        for k in 2..=4 {
            let mut r = Report::new(&mc.report(k)?).with_rejections(mc.rejections);
            if k == 2 {
                r = r.with_prediction(&prediction);
            }
            reports.push(r);
        }
        let quadrature = Report::new(&variance_quadrature(&spec, &g, &grid, tol)?)
            .with_grid(&grid)
            .with_prediction(&prediction);
        let checks: Vec<Check> = [("k3 / std_error", &reports[1]), ("k4 / std_error", &reports[2])]
            .into_iter()
            .map(|(name, r)| {
                let z = if r.std_error > 0.0 { r.value.abs() / r.std_error } else { 0.0 };
                Check { name, value: z, bound: sigma, passed: z <= sigma }
            })
            .collect();
        if out.is_some() {
            println!(
                "k2 = {:.4} ± {:.4} (prediction {:.4}), k3 = {:.4} ± {:.4}, k4 = {:.4} ± {:.4}",
                reports[0].value,
                reports[0].std_error,
                prediction.total,
                reports[1].value,
                reports[1].std_error,
                reports[2].value,
                reports[2].std_error
            );
        }
        let doc = CltDoc {
            schema: REPORT_SCHEMA,
            command: "clt",
            config: &cfg,
            reports,
            quadrature,
            prediction,
            normality: mc.normality.clone(),
            checks,
            fluctuations: fluctuations(&samples, &g),
        };
        emit(out.as_deref(), &doc)?;
        verdict(&doc.checks)
    })
}

pub fn verify(mut cfg: ExperimentConfig) -> Result<(), CliError> {
    let suite = cfg.verify.suite.get_or_insert_with(|| "identities".into()).clone();
    if !SUITES.contains(&suite.as_str()) {
        return Err(CliError::Usage(format!("unknown suite `{suite}`; available: {}", SUITES.join(", "))));
    }
    let out = cfg.output_path(false)?;
    with_marker(out.as_deref(), || {
        let report = run_suite(&suite)?;
        let mut identities: Vec<&str> = report.checks.iter().map(|c| c.identity).collect();
        identities.dedup();
        for id in identities {
            let group: Vec<_> = report.checks.iter().filter(|c| c.identity == id).collect();
            let worst = group.iter().map(|c| c.error).fold(0.0, f64::max);
            let ok = group.iter().all(|c| c.passed);
            println!("{} {id}: {} cases, max error {worst:e}", if ok { "PASS" } else { "FAIL" }, group.len());
        }
        for c in report.failures() {
            println!("  failed: {} [{}] error {:e}", c.identity, c.case, c.error);
        }
        if out.is_some() {
            emit(out.as_deref(), &VerifyDoc { schema: REPORT_SCHEMA, command: "verify", config: &cfg, report: &report })?;
        }
        if report.passed {
            Ok(())
        } else {
            Err(CliError::Tolerance(format!("{} identity checks failed", report.failures().count())))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_formatting() {
        assert_eq!(format_complex(Complex64::new(2.0, 0.0)), "2");
        assert_eq!(format_complex(Complex64::new(0.5, -0.25)), "0.5-0.25i");
        assert_eq!(format_complex(Complex64::new(-1.0, 3.0)), "-1+3i");
    }

    #[test]
    fn marker_sits_next_to_output() {
        assert_eq!(marker_path(Path::new("a/b.json")), PathBuf::from("a/b.json.failed"));
    }
}
