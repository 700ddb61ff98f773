//! Exact sampling of the projection determinantal point processes.
//!
//! Points are drawn one at a time from the conditional density
//! `‖P_t^⊥ v(x)‖² / (N - t)`, where `v(x)` is the weighted basis feature
//! vector at `x` and `P_t^⊥` projects off the span of the features of the
//! points already drawn. Proposals come from a piecewise-constant upper
//! envelope of the radial one-point density with a uniform angle, and are
//! accepted with probability `2ρ‖P_t^⊥ v‖² / env(ρ)`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{BasisTable, KernelSpec, Variant};
use crate::special::gauss_legendre;

/// Proposals allowed for a single point before giving up.
pub const REJECTION_BUDGET: u64 = 1_000_000;
/// Cells in the radial envelope.
pub const PROPOSAL_CELLS: usize = 8192;
const ENVELOPE_SLACK: f64 = 1e-3;

/// Tabulated radial proposal: a piecewise-constant envelope of
/// `ρ ↦ 2ρ K(z,z) e^{-n|z|^2}` on `[0, r_max]` and its cumulative
/// distribution.
#[derive(Clone, Debug)]
pub struct RadialProposal {
    knots: Vec<f64>,
    heights: Vec<f64>,
    cdf: Vec<f64>,
    r_max: f64,
}

impl RadialProposal {
    pub fn new(basis: &BasisTable, r_max: f64, cells: usize) -> Self {
        let h = r_max / cells as f64;
        let density = |r: f64| 2.0 * r * basis.intensity(r);
        let mut knots = Vec::with_capacity(cells + 1);
        let mut at_knot = Vec::with_capacity(cells + 1);
        for i in 0..=cells {
            let r = i as f64 * h;
            knots.push(r);
            at_knot.push(density(r));
        }
        let mut heights = Vec::with_capacity(cells);
        let mut cdf = Vec::with_capacity(cells + 1);
        cdf.push(0.0);
        let mut total = 0.0;
        for i in 0..cells {
            let mid = density(knots[i] + 0.5 * h);
            let top = at_knot[i].max(at_knot[i + 1]).max(mid) * (1.0 + ENVELOPE_SLACK);
            heights.push(top);
            total += top * h;
            cdf.push(total);
        }
        for c in &mut cdf {
            *c /= total;
        }
        Self {
            knots,
            heights,
            cdf,
            r_max,
        }
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// Envelope height on the cell containing `r`.
    pub fn envelope(&self, r: f64) -> f64 {
        let h = self.r_max / self.heights.len() as f64;
        let i = ((r / h) as usize).min(self.heights.len() - 1);
        self.heights[i]
    }

    /// Inverse CDF; exact for the piecewise-constant envelope.
    pub fn radius(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1) - 1;
        let (c0, c1) = (self.cdf[i], self.cdf[i + 1]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.knots[i] + t.clamp(0.0, 1.0) * (self.knots[i + 1] - self.knots[i])
    }
}

/// One configuration of unlabelled points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointSample {
    pub points: Vec<Complex64>,
    pub spec: KernelSpec,
    pub seed: u64,
    pub rejection_count: u64,
}

/// Prepared sampler for one spec; immutable, so replicates may share it.
#[derive(Clone, Debug)]
pub struct Sampler {
    spec: KernelSpec,
    basis: BasisTable,
    proposal: RadialProposal,
}

impl Sampler {
    pub fn new(spec: KernelSpec) -> Result<Self> {
        let basis = BasisTable::new(spec);
        let proposal = RadialProposal::new(&basis, spec.r_max(), PROPOSAL_CELLS);
        Ok(Self {
            spec,
            basis,
            proposal,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn proposal(&self) -> &RadialProposal {
        &self.proposal
    }

    pub fn sample(&self, seed: u64) -> Result<PointSample> {
        let dim = self.basis.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // row-major orthonormal panel of accepted feature directions
        let mut panel: Vec<Complex64> = Vec::with_capacity(dim * dim);
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        let mut coef = vec![Complex64::new(0.0, 0.0); dim];
        let mut points = Vec::with_capacity(dim);
        let mut rejections = 0u64;

        for t in 0..dim {
            // a fresh stream per point keeps later points independent of how
            // many proposals earlier points consumed
            rng.set_stream(t as u64);
            let mut proposals = 0u64;
            let accepted = loop {
                if proposals >= REJECTION_BUDGET {
                    return Err(Error::RejectionBudget {
                        point: t,
                        proposals,
                    });
                }
                proposals += 1;
                let rho = self.proposal.radius(rng.random::<f64>());
                let theta = std::f64::consts::TAU * rng.random::<f64>();
                let u: f64 = rng.random();
                if rho <= 0.0 {
                    continue;
                }
                let threshold = u * self.proposal.envelope(rho) / (2.0 * rho);
                let x = Complex64::from_polar(rho, theta);
                self.basis.feature_vector(x, &mut v);
                let mut remaining: f64 = v.iter().map(|c| c.norm_sqr()).sum();
                if remaining < threshold {
                    continue;
                }
                let mut ok = true;
                for i in 0..t {
                    let row = &panel[i * dim..(i + 1) * dim];
                    let c = dot_conj(row, &v);
                    coef[i] = c;
                    remaining -= c.norm_sqr();
                    if remaining < threshold {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    break x;
                }
            };
            rejections += proposals - 1;

            // residual with one re-orthogonalization pass
            for i in 0..t {
                let row = &panel[i * dim..(i + 1) * dim];
                let c = coef[i];
                for (a, b) in v.iter_mut().zip(row) {
                    *a -= c * b;
                }
            }
            for i in 0..t {
                let row = &panel[i * dim..(i + 1) * dim];
                let c = dot_conj(row, &v);
                for (a, b) in v.iter_mut().zip(row) {
                    *a -= c * b;
                }
            }
            let norm2: f64 = v.iter().map(|c| c.norm_sqr()).sum();
            if norm2 < 1e-12 * dim as f64 {
                return Err(Error::DegeneratePivot {
                    point: t,
                    residual: norm2,
                });
            }
            let inv = 1.0 / norm2.sqrt();
            panel.extend(v.iter().map(|c| c * inv));
            points.push(accepted);
        }

        Ok(PointSample {
            points,
            spec: self.spec,
            seed,
            rejection_count: rejections,
        })
    }

    /// Independent replicates, run in parallel; output order follows `seeds`.
    pub fn sample_many(&self, seeds: &[u64]) -> Result<Vec<PointSample>> {
        seeds.par_iter().map(|&s| self.sample(s)).collect()
    }
}

/// `Σ conj(a_i) b_i`.
fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re, im)
}

pub fn sample(spec: &KernelSpec, seed: u64) -> Result<PointSample> {
    Sampler::new(*spec)?.sample(seed)
}

/// Seeds `seed, seed+1, ...` for `count` replicates.
pub fn replicate_seeds(seed: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| seed.wrapping_add(i)).collect()
}

/// Radial histogram averaged over samples.
#[derive(Clone, Debug, Serialize)]
pub struct RadialHistogram {
    pub edges: Vec<f64>,
    /// Mean number of points per sample in each annulus.
    pub mean_counts: Vec<f64>,
    /// Standard error of each mean count (zero with a single sample).
    pub std_errors: Vec<f64>,
    /// Mean count divided by the annulus area in `dA = dx dy / π` units,
    /// directly comparable with the one-point intensity.
    pub density: Vec<f64>,
    pub samples: usize,
}

/// Bins `|λ|` into the annuli given by increasing `edges` (the last edge may
/// be infinite).
pub fn empirical_intensity(samples: &[PointSample], edges: &[f64]) -> Result<RadialHistogram> {
    let first = samples.first().ok_or(Error::Empty("sample list"))?;
    if samples.iter().any(|s| s.spec != first.spec) {
        return Err(Error::MixedSpecs);
    }
    if edges.len() < 2 || edges.windows(2).any(|w| w[1] <= w[0]) || edges[0] < 0.0 {
        return Err(Error::InvalidArgument("bin edges must be increasing and nonnegative".into()));
    }
    let bins = edges.len() - 1;
    let mut sum = vec![0.0; bins];
    let mut sum2 = vec![0.0; bins];
    let mut counts = vec![0.0; bins];
    for s in samples {
        counts.iter_mut().for_each(|c| *c = 0.0);
        for p in &s.points {
            let r = p.norm();
            if r < edges[0] || r >= edges[bins] {
                continue;
            }
            let i = edges.partition_point(|&e| e <= r) - 1;
            counts[i.min(bins - 1)] += 1.0;
        }
        for i in 0..bins {
            sum[i] += counts[i];
            sum2[i] += counts[i] * counts[i];
        }
    }
    let m = samples.len() as f64;
    let mean_counts: Vec<f64> = sum.iter().map(|s| s / m).collect();
    let std_errors = (0..bins)
        .map(|i| {
            if samples.len() < 2 {
                0.0
            } else {
                let var = (sum2[i] - m * mean_counts[i] * mean_counts[i]) / (m - 1.0);
                (var.max(0.0) / m).sqrt()
            }
        })
        .collect();
    let density = (0..bins)
        .map(|i| {
            let area = edges[i + 1] * edges[i + 1] - edges[i] * edges[i];
            if area.is_finite() {
                mean_counts[i] / area
            } else {
                0.0
            }
        })
        .collect();
    Ok(RadialHistogram {
        edges: edges.to_vec(),
        mean_counts,
        std_errors,
        density,
        samples: samples.len(),
    })
}

/// Expected number of points with `|λ| ∈ [a, b)`, by Gauss–Legendre
/// quadrature of `2ρ K(z,z) e^{-n|z|^2}`.
pub fn expected_count(basis: &BasisTable, a: f64, b: f64) -> f64 {
    let (x, w) = gauss_legendre(64);
    // split into short panels: the density varies on the scale 1/√n
    let panels = (((b - a) * (basis.spec().n as f64).sqrt() * 4.0).ceil() as usize).max(1);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            let r = lo + 0.5 * h * (xi + 1.0);
            total += 0.5 * h * wi * 2.0 * r * basis.intensity(r);
        }
    }
    total
}

/// Radii splitting `[0, r_max]` into `bins` annuli of equal expected count.
pub fn equal_probability_edges(spec: &KernelSpec, bins: usize) -> Vec<f64> {
    let basis = BasisTable::new(*spec);
    let r_max = spec.r_max();
    // fine tabulation of the cumulative count, then linear inversion
    let steps = 4096;
    let h = r_max / steps as f64;
    let mut cum = vec![0.0];
    for i in 0..steps {
        let prev = *cum.last().unwrap();
        cum.push(prev + expected_count(&basis, i as f64 * h, (i + 1) as f64 * h));
    }
    let total = cum[steps];
    let mut edges = vec![0.0];
    for k in 1..bins {
        let target = total * k as f64 / bins as f64;
        let i = cum.partition_point(|&c| c < target).max(1) - 1;
        let t = (target - cum[i]) / (cum[i + 1] - cum[i]);
        let lo = i as f64 * h;
        let mut r = lo + t * h;
        for _ in 0..3 {
            let f = cum[i] + expected_count(&basis, lo, r) - target;
            let slope = 2.0 * r * basis.intensity(r);
            if slope <= 0.0 {
                break;
            }
            r = (r - f / slope).clamp(lo, lo + h);
        }
        edges.push(r);
    }
    edges.push(f64::INFINITY);
    edges
}

/// Pearson χ² goodness-of-fit of pooled radii against the one-point
/// intensity over equal-probability annuli.
#[derive(Clone, Debug, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub critical_1pct: f64,
}

pub fn radial_chi_square(samples: &[PointSample], bins: usize) -> Result<ChiSquare> {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let first = samples.first().ok_or(Error::Empty("sample list"))?;
    let edges = equal_probability_edges(&first.spec, bins);
    let hist = empirical_intensity(samples, &edges)?;
    let total_points: f64 = hist.mean_counts.iter().sum::<f64>() * samples.len() as f64;
    let expected = total_points / bins as f64;
    let statistic = hist
        .mean_counts
        .iter()
        .map(|&m| {
            let o = m * samples.len() as f64;
            (o - expected).powi(2) / expected
        })
        .sum();
    let df = bins - 1;
    let dist = ChiSquared::new(df as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(ChiSquare {
        statistic,
        df,
        p_value: 1.0 - dist.cdf(statistic),
        critical_1pct: dist.inverse_cdf(0.99),
    })
}

/// Sidecar metadata written next to a sample CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMetadata {
    pub n: u32,
    pub q: u32,
    pub variant: Variant,
    pub seed: u64,
    pub samples: usize,
    pub rejections: u64,
}

/// Path of the JSON sidecar for a sample CSV.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Writes `sample_id,point_id,re,im` rows and the JSON sidecar.
pub fn write_samples(csv_path: &Path, samples: &[PointSample], base_seed: u64) -> Result<SampleMetadata> {
    let first = samples.first().ok_or(Error::Empty("sample list"))?;
    if samples.iter().any(|s| s.spec != first.spec) {
        return Err(Error::MixedSpecs);
    }
    let mut out = csv::Writer::from_writer(BufWriter::new(File::create(csv_path)?));
    out.write_record(["sample_id", "point_id", "re", "im"])
        .map_err(csv_error)?;
    for (sid, s) in samples.iter().enumerate() {
        for (pid, p) in s.points.iter().enumerate() {
            out.write_record([sid.to_string(), pid.to_string(), p.re.to_string(), p.im.to_string()])
                .map_err(csv_error)?;
        }
    }
    out.flush()?;
    let meta = SampleMetadata {
        n: first.spec.n,
        q: first.spec.q,
        variant: first.spec.variant,
        seed: base_seed,
        samples: samples.len(),
        rejections: samples.iter().map(|s| s.rejection_count).sum(),
    };
    let mut side = BufWriter::new(File::create(sidecar_path(csv_path))?);
    serde_json::to_writer_pretty(&mut side, &meta)?;
    side.write_all(b"\n")?;
    side.flush()?;
    Ok(meta)
}

/// Reads a sample CSV (and its sidecar) back into configurations.
pub fn read_samples(csv_path: &Path) -> Result<(SampleMetadata, Vec<Vec<Complex64>>)> {
    let meta: SampleMetadata = serde_json::from_reader(File::open(sidecar_path(csv_path))?)?;
    let mut rdr = csv::Reader::from_path(csv_path).map_err(csv_error)?;
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.iter().collect::<Vec<_>>() != ["sample_id", "point_id", "re", "im"] {
        return Err(Error::Malformed(format!("unexpected header {header:?}")));
    }
    let mut out: Vec<Vec<Complex64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let field = |i: usize| rec.get(i).ok_or_else(|| Error::Malformed("short row".into()));
        let sid: usize = field(0)?.parse().map_err(|_| Error::Malformed("sample_id".into()))?;
        let re: f64 = field(2)?.parse().map_err(|_| Error::Malformed("re".into()))?;
        let im: f64 = field(3)?.parse().map_err(|_| Error::Malformed("im".into()))?;
        if sid >= out.len() {
            out.resize(sid + 1, Vec::new());
        }
        out[sid].push(Complex64::new(re, im));
    }
    Ok((meta, out))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Malformed(e.to_string())
}
