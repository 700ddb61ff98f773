//! Monte Carlo cumulants from sampled configurations.
//!
//! Unbiased k-statistics from power sums of the centered values, with
//! delete-one jackknife standard errors.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use super::{linear_statistic, CumulantReport, Method};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::sampler::PointSample;
use crate::theory::TestFunction;

/// Fewest replicates accepted for a Monte Carlo cumulant report.
pub const MIN_REPLICATES: usize = 200;

/// `k_1..k_4` and their jackknife standard errors.
#[derive(Clone, Debug, Serialize)]
pub struct KStatistics {
    pub count: usize,
    pub k: [f64; 4],
    pub std_error: [f64; 4],
}

impl KStatistics {
    /// `k_j` for `j` in `1..=4`.
    pub fn get(&self, j: usize) -> f64 {
        self.k[j - 1]
    }

    pub fn se(&self, j: usize) -> f64 {
        self.std_error[j - 1]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Normality {
    pub skewness: f64,
    pub skewness_se: f64,
    pub excess_kurtosis: f64,
    pub kurtosis_se: f64,
    pub ks_distance: f64,
    pub ks_p_value: f64,
}

fn from_sums(n: f64, s: [f64; 4]) -> [f64; 4] {
    let [s1, s2, s3, s4] = s;
    let k1 = s1 / n;
    let k2 = (n * s2 - s1 * s1) / (n * (n - 1.0));
    let k3 = (2.0 * s1.powi(3) - 3.0 * n * s1 * s2 + n * n * s3) / (n * (n - 1.0) * (n - 2.0));
    let k4 = (-6.0 * s1.powi(4) + 12.0 * n * s1 * s1 * s2 - 3.0 * n * (n - 1.0) * s2 * s2
        - 4.0 * n * (n + 1.0) * s1 * s3
        + n * n * (n + 1.0) * s4)
        / (n * (n - 1.0) * (n - 2.0) * (n - 3.0));
    [k1, k2, k3, k4]
}

fn power_sums(x: &[f64]) -> [f64; 4] {
    let mut s = [0.0; 4];
    for &v in x {
        let v2 = v * v;
        s[0] += v;
        s[1] += v2;
        s[2] += v2 * v;
        s[3] += v2 * v2;
    }
    s
}

fn jackknife_se(full: f64, loo: &[f64]) -> f64 {
    let _ = full;
    let n = loo.len() as f64;
    let mean = loo.iter().sum::<f64>() / n;
    let ss: f64 = loo.iter().map(|t| (t - mean).powi(2)).sum();
    ((n - 1.0) / n * ss).sqrt()
}

/// Leave-one-out k-statistics, one row per dropped value.
fn leave_one_out(x: &[f64], shift: f64) -> (Vec<[f64; 4]>, [f64; 4]) {
    let centered: Vec<f64> = x.iter().map(|v| v - shift).collect();
    let s = power_sums(&centered);
    let m = (x.len() - 1) as f64;
    let rows = centered
        .iter()
        .map(|&v| {
            let v2 = v * v;
            let mut k = from_sums(m, [s[0] - v, s[1] - v2, s[2] - v2 * v, s[3] - v2 * v2]);
            k[0] += shift;
            k
        })
        .collect();
    let mut k = from_sums(x.len() as f64, s);
    k[0] += shift;
    (rows, k)
}

/// k-statistics of `x`; needs at least 5 values so the leave-one-out `k_4`
/// is defined.
pub fn k_statistics(x: &[f64]) -> Result<KStatistics> {
    if x.len() < 5 {
        return Err(Error::TooFewReplicates { got: x.len(), need: 5 });
    }
    let shift = x.iter().sum::<f64>() / x.len() as f64;
    let (rows, k) = leave_one_out(x, shift);
    let mut se = [0.0; 4];
    for j in 0..4 {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        se[j] = jackknife_se(k[j], &col);
    }
    Ok(KStatistics { count: x.len(), k, std_error: se })
}

/// Kolmogorov survival function `P(K > λ)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Skewness and excess kurtosis with jackknife errors, plus the
/// Kolmogorov–Smirnov distance to the normal law with the sample mean and
/// `k_2` as variance. `None` when the values do not vary.
pub fn normality(x: &[f64]) -> Result<Option<Normality>> {
    let ks = k_statistics(x)?;
    let k2 = ks.get(2);
    if !(k2 > 0.0) {
        return Ok(None);
    }
    let ratio = |k: &[f64; 4]| (k[2] / k[1].powf(1.5), k[3] / (k[1] * k[1]));
    let (skew, kurt) = ratio(&ks.k);
    let shift = ks.get(1);
    let (rows, _) = leave_one_out(x, shift);
    let (skews, kurts): (Vec<f64>, Vec<f64>) = rows.iter().map(ratio).unzip();

    let normal = Normal::new(ks.get(1), k2.sqrt()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        let f = normal.cdf(v);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sq = n.sqrt();
    Ok(Some(Normality {
        skewness: skew,
        skewness_se: jackknife_se(skew, &skews),
        excess_kurtosis: kurt,
        kurtosis_se: jackknife_se(kurt, &kurts),
        ks_distance: d,
        ks_p_value: kolmogorov_q((sq + 0.12 + 0.11 / sq) * d),
    }))
}

/// `X_g` minus its sample mean, one value per configuration.
pub fn fluctuations(samples: &[PointSample], g: &TestFunction) -> Vec<f64> {
    let values: Vec<f64> = samples.iter().map(|s| linear_statistic(s, g)).collect();
    let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
    values.into_iter().map(|v| v - mean).collect()
}

/// Everything a Monte Carlo run produces for one test function.
#[derive(Clone, Debug, Serialize)]
pub struct McCumulants {
    pub spec: KernelSpec,
    pub g: String,
    pub values: Vec<f64>,
    pub kstats: KStatistics,
    pub normality: Option<Normality>,
    pub rejections: u64,
}

impl McCumulants {
    /// Report for `k` in `1..=4`.
    pub fn report(&self, k: usize) -> Result<CumulantReport> {
        if !(1..=4).contains(&k) {
            return Err(Error::OrderOutOfRange(k));
        }
        Ok(CumulantReport {
            k,
            value: self.kstats.get(k),
            method: Method::Mc,
            std_error: self.kstats.se(k),
            spec: self.spec,
            g: self.g.clone(),
            richardson_gap: None,
            converged: true,
            replicates: Some(self.values.len()),
        })
    }
}

/// k-statistics of `X_g` over already drawn samples of one spec.
pub fn mc_cumulants(samples: &[PointSample], g: &TestFunction) -> Result<McCumulants> {
    let first = samples.first().ok_or(Error::Empty("samples"))?;
    if samples.iter().any(|s| s.spec != first.spec) {
        return Err(Error::MixedSpecs);
    }
    if samples.len() < MIN_REPLICATES {
        return Err(Error::TooFewReplicates { got: samples.len(), need: MIN_REPLICATES });
    }
    let values: Vec<f64> = samples.iter().map(|s| linear_statistic(s, g)).collect();
    Ok(McCumulants {
        spec: first.spec,
        g: g.to_string(),
        kstats: k_statistics(&values)?,
        normality: normality(&values)?,
        values,
        rejections: samples.iter().map(|s| s.rejection_count).sum(),
    })
}

/// Draws one configuration per seed and reports `C_1..C_{k_max}`.
pub fn mc_cumulant_report(
    spec: &KernelSpec,
    g: &TestFunction,
    seeds: &[u64],
    k_max: usize,
) -> Result<(Vec<CumulantReport>, McCumulants)> {
    if !(1..=4).contains(&k_max) {
        return Err(Error::OrderOutOfRange(k_max));
    }
    if seeds.len() < MIN_REPLICATES {
        return Err(Error::TooFewReplicates { got: seeds.len(), need: MIN_REPLICATES });
    }
    let samples = crate::sampler::Sampler::new(*spec)?.sample_many(seeds)?;
    let mc = mc_cumulants(&samples, g)?;
    let reports = (1..=k_max).map(|k| mc.report(k)).collect::<Result<Vec<_>>>()?;
    Ok((reports, mc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Cumulants from central moments, computed directly.
    fn moment_oracle(x: &[f64]) -> [f64; 4] {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let m = |p: i32| x.iter().map(|v| (v - mean).powi(p)).sum::<f64>() / n;
        let (m2, m3, m4) = (m(2), m(3), m(4));
        let k2 = n / (n - 1.0) * m2;
        let k3 = n * n / ((n - 1.0) * (n - 2.0)) * m3;
        let k4 = n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2) / ((n - 1.0) * (n - 2.0) * (n - 3.0));
        [mean, k2, k3, k4]
    }

    #[test]
    fn kstats_match_moment_formulas() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..50).map(|_| 1e3 + rng.random::<f64>().powi(3)).collect();
        let k = k_statistics(&x).unwrap();
        let o = moment_oracle(&x);
        for j in 0..4 {
            assert!((k.k[j] - o[j]).abs() <= 1e-8 * o[j].abs().max(1e-3), "j={j} {} {}", k.k[j], o[j]);
        }
    }

    #[test]
    fn jackknife_of_mean_is_standard_error() {
        let x = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0];
        let k = k_statistics(&x).unwrap();
        let n = x.len() as f64;
        let sd = (x.iter().map(|v| (v - k.k[0]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((k.std_error[0] - sd / n.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn exponential_cumulants() {
        // Exp(1): k_j = (j-1)!
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..200_000).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let k = k_statistics(&x).unwrap();
        for (j, want) in [1.0, 1.0, 2.0, 6.0].iter().enumerate() {
            assert!((k.k[j] - want).abs() < 4.0 * k.std_error[j], "j={j} {} ± {}", k.k[j], k.std_error[j]);
        }
        let nrm = normality(&x).unwrap().unwrap();
        assert!((nrm.skewness - 2.0).abs() < 4.0 * nrm.skewness_se);
        assert!(nrm.ks_distance > 0.05 && nrm.ks_p_value < 1e-6);
    }

    #[test]
    fn normal_sample_passes_ks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..2000).map(|_| normal.inverse_cdf(rng.random::<f64>())).collect();
        let nrm = normality(&x).unwrap().unwrap();
        assert!(nrm.ks_distance < 0.035, "{nrm:?}");
        assert!(nrm.skewness.abs() < 3.0 * nrm.skewness_se);
        assert!(nrm.excess_kurtosis.abs() < 3.0 * nrm.kurtosis_se);
    }

    #[test]
    fn constant_values_have_no_normality() {
        assert!(normality(&[2.0; 10]).unwrap().is_none());
        assert!(matches!(k_statistics(&[1.0, 2.0]), Err(Error::TooFewReplicates { .. })));
    }

    #[test]
    fn too_few_replicates_rejected() {
        let spec = KernelSpec::ginibre(2).unwrap();
        let g = TestFunction::parse("abs2").unwrap();
        let seeds: Vec<u64> = (0..10).collect();
        assert!(matches!(mc_cumulant_report(&spec, &g, &seeds, 2), Err(Error::TooFewReplicates { got: 10, .. })));
    }
}
