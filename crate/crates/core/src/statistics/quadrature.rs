//! Polar quadrature for the expectation and variance of linear statistics.
//!
//! With the orthonormal basis `φ_m = R_m(ρ) e^{iℓ_m θ}` the variance of
//! `Σ g(λ_j)` is `Σ_m ⟨g² φ_m, φ_m⟩ - Σ_{m,m'} |⟨g φ_m, φ_{m'}⟩|²`. The inner
//! products reduce to radial integrals against the angular Fourier
//! coefficients of `g`, and vanish unless `|ℓ_m - ℓ_{m'}|` is a mode of `g`.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use super::{CumulantReport, Method};
use crate::error::{Error, Result};
use crate::kernels::{BasisTable, KernelSpec};
use crate::special::Neumaier;
use crate::theory::{composite_gl, TestFunction};

/// Gauss–Legendre nodes per panel.
const PANEL_NODES: usize = 16;
pub const DEFAULT_RADIAL_NODES: usize = 160;
pub const DEFAULT_ANGLES: usize = 512;
/// Largest acceptable relative gap between a grid and its refinement.
pub const DEFAULT_TOLERANCE: f64 = 2e-3;

/// Radial Gauss–Legendre panels on `[0, r_max]` (split at the breakpoints of
/// `g` and at the unit circle) with a uniform angular grid.
#[derive(Clone, Debug, Serialize)]
pub struct QuadratureGrid {
    pub nr: usize,
    pub ntheta: usize,
    pub r_max: f64,
    #[serde(skip)]
    pub nodes: Vec<f64>,
    #[serde(skip)]
    pub weights: Vec<f64>,
    #[serde(skip)]
    breaks: Vec<f64>,
}

impl QuadratureGrid {
    /// About `nr` radial nodes; `ntheta` must be a power of two.
    pub fn new(r_max: f64, nr: usize, ntheta: usize, breaks: &[f64]) -> Result<Self> {
        if !ntheta.is_power_of_two() || ntheta < 8 {
            return Err(Error::InvalidArgument(format!("ntheta must be a power of two >= 8, got {ntheta}")));
        }
        if nr < PANEL_NODES || !(r_max > 0.0) {
            return Err(Error::InvalidArgument(format!("need nr >= {PANEL_NODES} and r_max > 0")));
        }
        let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&b| b > 0.0 && b < r_max).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let segments = cuts.len() + 1;
        let panels = (nr / PANEL_NODES).max(segments);
        // panels per segment proportional to its length
        let mut edges = vec![0.0];
        edges.extend(&cuts);
        edges.push(r_max);
        let mut counts: Vec<usize> = edges
            .windows(2)
            .map(|w| (((w[1] - w[0]) / r_max * panels as f64).round() as usize).max(1))
            .collect();
        let total: usize = counts.iter().sum();
        if total < panels {
            let longest = (0..segments)
                .max_by(|&a, &b| (edges[a + 1] - edges[a]).total_cmp(&(edges[b + 1] - edges[b])))
                .unwrap();
            counts[longest] += panels - total;
        }
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for (w, &c) in edges.windows(2).zip(&counts) {
            let (x, wt) = composite_gl(w[0], w[1], &[], c, PANEL_NODES);
            nodes.extend(x);
            weights.extend(wt);
        }
        Ok(Self {
            nr: nodes.len(),
            ntheta,
            r_max,
            nodes,
            weights,
            breaks: cuts,
        })
    }

    /// Default grid for `spec` and `g`.
    pub fn for_spec(spec: &KernelSpec, g: &TestFunction, nr: usize, ntheta: usize) -> Result<Self> {
        let mut breaks = g.breakpoints();
        breaks.push(1.0);
        Self::new(spec.r_max(), nr, ntheta, &breaks)
    }

    /// Twice the radial panels and angles.
    pub fn refined(&self) -> Self {
        Self::new(self.r_max, 2 * self.nr, 2 * self.ntheta, &self.breaks).expect("refining a valid grid")
    }

    fn check(&self, spec: &KernelSpec) -> Result<()> {
        if self.r_max < spec.r_max() * (1.0 - 1e-12) {
            return Err(Error::GridMismatch(format!(
                "grid r_max {} below {} required for {spec}",
                self.r_max,
                spec.r_max()
            )));
        }
        Ok(())
    }
}

/// Angular Fourier coefficients `ĝ_k(ρ) = (1/2π) ∫ g(ρe^{iθ}) e^{-ikθ} dθ`,
/// indexed `k mod ntheta`.
fn angular_coeffs(f: impl Fn(Complex64) -> f64, rho: f64, ntheta: usize, fft: &dyn rustfft::Fft<f64>) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = (0..ntheta)
        .map(|j| Complex64::new(f(Complex64::from_polar(rho, std::f64::consts::TAU * j as f64 / ntheta as f64)), 0.0))
        .collect();
    fft.process(&mut buf);
    let inv = 1.0 / ntheta as f64;
    buf.iter_mut().for_each(|c| *c *= inv);
    buf
}

fn coeff_at(c: &[Complex64], k: i64) -> Complex64 {
    let m = c.len() as i64;
    c[k.rem_euclid(m) as usize]
}

/// `∫ g(z) K(z,z) e^{-n|z|^2} dA`.
pub fn expected_trace(spec: &KernelSpec, g: &TestFunction, grid: &QuadratureGrid) -> Result<f64> {
    grid.check(spec)?;
    let basis = BasisTable::new(*spec);
    Ok(expected_trace_with(&basis, g, grid))
}

pub(crate) fn expected_trace_with(basis: &BasisTable, g: &TestFunction, grid: &QuadratureGrid) -> f64 {
    let m = grid.ntheta;
    let mut acc = Neumaier::default();
    for (&r, &w) in grid.nodes.iter().zip(&grid.weights) {
        let mean: f64 = (0..m)
            .map(|j| g.eval(Complex64::from_polar(r, std::f64::consts::TAU * j as f64 / m as f64)))
            .sum::<f64>()
            / m as f64;
        acc.add(w * 2.0 * r * basis.intensity(r) * mean);
    }
    acc.value()
}

/// `∫ K(z,z) e^{-n|z|^2} dA`, which equals the dimension for a valid grid.
pub fn integrated_intensity(spec: &KernelSpec, grid: &QuadratureGrid) -> f64 {
    let basis = BasisTable::new(*spec);
    grid.nodes
        .iter()
        .zip(&grid.weights)
        .map(|(&r, &w)| w * 2.0 * r * basis.intensity(r))
        .sum()
}

/// Variance on a single grid; `tr(G²) - ‖G‖_F²`.
pub fn variance_on_grid(basis: &BasisTable, g: &TestFunction, grid: &QuadratureGrid) -> f64 {
    let nfun = basis.len();
    let nr = grid.nodes.len();
    let max_mode = g.max_mode() as i64;
    let ntheta = grid.ntheta.max((4 * (max_mode as usize + 1)).next_power_of_two());
    let fft = FftPlanner::new().plan_fft_forward(ntheta);

    // per node: 2ρ w, Fourier coefficients of g and the mean of g²
    let mut scaled_w = Vec::with_capacity(nr);
    let mut ghat = Vec::with_capacity(nr);
    let mut g2_mean = Vec::with_capacity(nr);
    for (&r, &w) in grid.nodes.iter().zip(&grid.weights) {
        scaled_w.push(2.0 * r * w);
        let c = angular_coeffs(|z| g.eval(z), r, ntheta, fft.as_ref());
        let m2 = (0..ntheta)
            .map(|j| g.eval(Complex64::from_polar(r, std::f64::consts::TAU * j as f64 / ntheta as f64)).powi(2))
            .sum::<f64>()
            / ntheta as f64;
        ghat.push(c);
        g2_mean.push(m2);
    }

    // radial profiles, function-major
    let mut radial = vec![0.0; nfun * nr];
    let mut col = vec![0.0; nfun];
    for i in 0..nr {
        basis.radial_values(grid.nodes[i], &mut col);
        for m in 0..nfun {
            radial[m * nr + i] = col[m];
        }
    }

    let momenta = basis.momenta();
    let by_momentum = basis.by_momentum();
    let per_function: Vec<(f64, f64)> = (0..nfun)
        .into_par_iter()
        .map(|m| {
            let rm = &radial[m * nr..(m + 1) * nr];
            let mut tr = Neumaier::default();
            for i in 0..nr {
                tr.add(scaled_w[i] * rm[i] * rm[i] * g2_mean[i]);
            }
            let mut frob = Neumaier::default();
            for dl in -max_mode..=max_mode {
                let Some(partners) = by_momentum.get(&(momenta[m] + dl)) else {
                    continue;
                };
                for &mp in partners {
                    let rp = &radial[mp * nr..(mp + 1) * nr];
                    let mut re = Neumaier::default();
                    let mut im = Neumaier::default();
                    for i in 0..nr {
                        let t = coeff_at(&ghat[i], dl) * (scaled_w[i] * rm[i] * rp[i]);
                        re.add(t.re);
                        im.add(t.im);
                    }
                    frob.add(re.value().powi(2) + im.value().powi(2));
                }
            }
            (tr.value(), frob.value())
        })
        .collect();
    let mut tr = Neumaier::default();
    let mut frob = Neumaier::default();
    for (t, f) in per_function {
        tr.add(t);
        frob.add(f);
    }
    tr.value() - frob.value()
}

/// Second cumulant by quadrature on `grid` and its refinement; the reported
/// value comes from the finer grid.
pub fn variance_quadrature(
    spec: &KernelSpec,
    g: &TestFunction,
    grid: &QuadratureGrid,
    tolerance: f64,
) -> Result<CumulantReport> {
    grid.check(spec)?;
    let basis = BasisTable::new(*spec);
    let coarse = variance_on_grid(&basis, g, grid);
    let fine_grid = grid.refined();
    let fine = variance_on_grid(&basis, g, &fine_grid);
    let gap = (fine - coarse).abs() / fine.abs().max(1e-300);
    Ok(CumulantReport {
        k: 2,
        value: fine,
        method: Method::Quadrature,
        std_error: 0.0,
        spec: *spec,
        g: g.to_string(),
        richardson_gap: Some(gap),
        converged: gap <= tolerance || (fine - coarse).abs() < 1e-13,
        replicates: None,
    })
}
