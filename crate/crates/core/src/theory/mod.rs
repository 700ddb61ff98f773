//! Limiting-variance predictions for linear statistics.
//!
//! For a test function `g` the predicted variances are
//! `(2q-1) ‖g‖²_{H¹} + ½ ‖g‖²_{H^{1/2}}` for the pure ensemble and
//! `q (‖g‖²_{H¹} + ½ ‖g‖²_{H^{1/2}})` for the full one, where
//! `‖g‖²_{H¹} = ∫_𝔻 |∂̄g|² dA` and `‖g‖²_{H^{1/2}} = Σ_k |k| |ĝ(k)|²` over the
//! Fourier coefficients of `g` on the unit circle.

mod expr;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

pub use expr::{parse, smooth_step, Expr, Jet, Leaf};

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, Variant};
use crate::polyalg::{Coeff, Poly};
use crate::special::gauss_legendre;

/// A parsed, validated real test function.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    expr: Expr,
    modes: BTreeSet<i64>,
}

impl TestFunction {
    pub fn parse(src: &str) -> Result<Self> {
        Self::from_expr(parse(src)?)
    }

    pub fn from_expr(expr: Expr) -> Result<Self> {
        let modes = expr.modes();
        let f = Self { expr, modes };
        f.check_real()?;
        Ok(f)
    }

    /// Every builtin is real, so this only guards against future leaves; it
    /// evaluates the full jet at fixed points and checks the value is real and
    /// `∂̄g = conj(∂g)`.
    fn check_real(&self) -> Result<()> {
        for k in 0..16 {
            let z = Complex64::from_polar(0.1 + 0.11 * k as f64, 0.7 + 1.3 * k as f64);
            let j = self.jet(z);
            let scale = 1.0 + j.value.norm() + j.d.norm();
            if j.value.im.abs() > 1e-12 * scale || (j.dbar - j.d.conj()).norm() > 1e-12 * scale {
                return Err(Error::NonReal(self.to_string()));
            }
        }
        Ok(())
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn eval(&self, z: Complex64) -> f64 {
        self.expr.eval(z)
    }

    pub fn jet(&self, z: Complex64) -> Jet {
        self.expr.jet(z)
    }

    pub fn dbar(&self, z: Complex64) -> Complex64 {
        self.expr.jet(z).dbar
    }

    /// `θ ↦ g(e^{iθ})`.
    pub fn boundary(&self, theta: f64) -> f64 {
        self.eval(Complex64::from_polar(1.0, theta))
    }

    pub fn modes(&self) -> &BTreeSet<i64> {
        &self.modes
    }

    pub fn max_mode(&self) -> u32 {
        self.modes.iter().map(|m| m.unsigned_abs() as u32).max().unwrap_or(0)
    }

    pub fn support_radius(&self) -> Option<f64> {
        self.expr.support_radius()
    }

    /// Sorted radii where the radial profile has limited smoothness.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = Vec::new();
        self.expr.breakpoints(&mut b);
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    pub fn is_polynomial(&self) -> bool {
        self.expr.is_polynomial()
    }

    pub fn to_poly<C: Coeff>(&self) -> Result<Poly<C>> {
        self.expr.to_poly()
    }

    /// `c·g`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            expr: Expr::Mul(Box::new(Expr::Num(c)), Box::new(self.expr.clone())),
            modes: self.modes.clone(),
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Composite Gauss–Legendre panels on `[a, b]` split at `breaks`, each panel
/// further divided into `sub` pieces with `nodes` points.
pub fn composite_gl(a: f64, b: f64, breaks: &[f64], sub: usize, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let mut cuts = vec![a];
    cuts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    cuts.push(b);
    let (x, w) = gauss_legendre(nodes);
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for pair in cuts.windows(2) {
        let h = (pair[1] - pair[0]) / sub as f64;
        for s in 0..sub {
            let lo = pair[0] + s as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                xs.push(lo + 0.5 * h * (xi + 1.0));
                ws.push(0.5 * h * wi);
            }
        }
    }
    (xs, ws)
}

/// Polar quadrature on the unit disk for the Dirichlet seminorm.
#[derive(Clone, Debug)]
pub struct DiskGrid {
    pub sub_panels: usize,
    pub nodes: usize,
    pub ntheta: usize,
}

impl DiskGrid {
    pub fn for_function(g: &TestFunction) -> Self {
        Self {
            sub_panels: 4,
            nodes: 32,
            ntheta: (4 * (g.max_mode() as usize + 2)).next_power_of_two().max(64),
        }
    }

    pub fn refined(&self) -> Self {
        Self {
            sub_panels: 2 * self.sub_panels,
            nodes: self.nodes,
            ntheta: 2 * self.ntheta,
        }
    }
}

/// `‖g‖²_{H¹(𝔻)} = ∫_𝔻 |∂̄g|² dA` with `dA = dx dy / π`.
pub fn h1_seminorm(g: &TestFunction, grid: &DiskGrid) -> f64 {
    let (rs, ws) = composite_gl(0.0, 1.0, &g.breakpoints(), grid.sub_panels, grid.nodes);
    let m = grid.ntheta;
    let mut total = 0.0;
    for (&r, &w) in rs.iter().zip(&ws) {
        let mut ring = 0.0;
        for k in 0..m {
            let z = Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / m as f64);
            ring += g.dbar(z).norm_sqr();
        }
        // (1/π) ∫ ρ dρ dθ, trapezoid in θ
        total += w * r * ring * 2.0 / m as f64;
    }
    total
}

/// `Σ_k |k| |ĝ(k)|²` for `g` on the unit circle, from `modes` samples.
pub fn h_half_seminorm(g: &TestFunction, modes: usize) -> Result<f64> {
    if !modes.is_power_of_two() || modes < 4 * g.max_mode().max(1) as usize {
        return Err(Error::InvalidArgument(format!(
            "modes must be a power of two >= 4 * max mode ({}), got {modes}",
            4 * g.max_mode().max(1)
        )));
    }
    let mut buf: Vec<Complex64> = (0..modes)
        .map(|j| Complex64::new(g.boundary(std::f64::consts::TAU * j as f64 / modes as f64), 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(modes).process(&mut buf);
    let inv = 1.0 / modes as f64;
    let mut total = 0.0;
    let mut energy = 0.0;
    let mut tail = 0.0;
    for (i, c) in buf.iter().enumerate() {
        let k = if i <= modes / 2 { i as i64 } else { i as i64 - modes as i64 };
        let p = (c * inv).norm_sqr();
        energy += p;
        if k.unsigned_abs() as usize > modes / 4 {
            tail += p;
        }
        total += k.unsigned_abs() as f64 * p;
    }
    if tail > 1e-20 + 1e-12 * energy {
        return Err(Error::Aliasing(format!(
            "boundary spectrum of {g} carries {:.3e} of its energy above |k| = {}",
            tail / energy,
            modes / 4
        )));
    }
    Ok(total)
}

/// Contribution of one Landau level `r` (pure ensemble) to the prediction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelPrediction {
    pub level: u32,
    pub bulk_coeff: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariancePrediction {
    pub bulk: f64,
    pub boundary: f64,
    pub total: f64,
    pub bulk_coeff: f64,
    pub boundary_coeff: f64,
    pub h1: f64,
    pub h_half: f64,
    /// Pure-level predictions `r = 1..=q`; their mean is the full prediction
    /// whenever the boundary term vanishes.
    pub levels: Vec<LevelPrediction>,
    /// Set when `g` is not compactly supported, which the limit theorem assumes.
    pub warning: Option<String>,
}

/// Combines precomputed seminorms into the prediction for `spec`.
pub fn prediction_from_seminorms(spec: &KernelSpec, h1: f64, h_half: f64, compact: bool) -> VariancePrediction {
    let q = spec.q as f64;
    let (bulk_coeff, boundary_coeff) = match spec.variant {
        Variant::Pure => (2.0 * q - 1.0, 1.0),
        Variant::Full => (q, q),
        Variant::Ginibre => (1.0, 1.0),
    };
    let bulk = bulk_coeff * h1;
    let boundary = boundary_coeff * 0.5 * h_half;
    let levels = (1..=spec.q)
        .map(|r| {
            let c = 2.0 * r as f64 - 1.0;
            LevelPrediction {
                level: r,
                bulk_coeff: c,
                total: c * h1 + 0.5 * h_half,
            }
        })
        .collect();
    VariancePrediction {
        bulk,
        boundary,
        total: bulk + boundary,
        bulk_coeff,
        boundary_coeff,
        h1,
        h_half,
        levels,
        warning: (!compact).then(|| "test function is not compactly supported".to_string()),
    }
}

pub fn predicted_variance(spec: &KernelSpec, g: &TestFunction) -> Result<VariancePrediction> {
    let h1 = h1_seminorm(g, &DiskGrid::for_function(g));
    let modes = (4 * g.max_mode().max(1) as usize).next_power_of_two().max(512);
    let hh = h_half_seminorm(g, modes)?;
    Ok(prediction_from_seminorms(spec, h1, hh, g.support_radius().is_some()))
}
