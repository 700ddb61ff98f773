//! Orthonormal eigenbasis `T_{n,r} e_j` of the polynomial spaces, evaluated in
//! log-polar form.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::KernelSpec;
use crate::error::{Error, Result};
use crate::polyalg::PolyPoly;
use crate::special::{ln_binomial, ln_factorial, ln_falling, pow_log, Neumaier};

/// One monomial `sign · exp(log_mag) · z^a z̄^b` of a basis function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisMonomial {
    pub a: u32,
    pub b: u32,
    pub log_mag: f64,
    pub sign: f64,
}

/// `T_{n,r} e_j = (-1)^r n^{-r/2} / √(r!) · T_n^r e_j`, expanded as
/// `Σ_k (-1)^{r+k} C(r,k) (j)_k n^{r-k} · n^{(j+1)/2 - r/2} / √(r! j!) · z^{j-k} z̄^{r-k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisFunction {
    pub level: u32,
    pub index: u32,
    pub n: u32,
    pub monomials: Vec<BasisMonomial>,
}

impl BasisFunction {
    pub fn new(n: u32, level: u32, index: u32) -> Self {
        let (r, j) = (level, index);
        let ln_n = (n as f64).ln();
        let base = 0.5 * (j as f64 + 1.0 - r as f64) * ln_n - 0.5 * (ln_factorial(r) + ln_factorial(j));
        let monomials = (0..=r.min(j))
            .map(|k| BasisMonomial {
                a: j - k,
                b: r - k,
                log_mag: base + ln_binomial(r, k) + ln_falling(j, k) + (r - k) as f64 * ln_n,
                sign: if (r + k) % 2 == 0 { 1.0 } else { -1.0 },
            })
            .collect();
        Self {
            level,
            index,
            n,
            monomials,
        }
    }

    /// Every monomial carries the same angular frequency `j - r`.
    pub fn angular_momentum(&self) -> i64 {
        self.index as i64 - self.level as i64
    }

    /// Radial profile with the Gaussian weight folded in:
    /// `|z| ↦ e^{-iℓθ} φ(z) e^{-n|z|^2/2}`.
    pub fn radial_weighted(&self, rho: f64) -> f64 {
        self.radial_with_shift(rho.ln(), -0.5 * self.n as f64 * rho * rho)
    }

    fn radial_with_shift(&self, ln_rho: f64, shift: f64) -> f64 {
        let mut max = f64::NEG_INFINITY;
        let mut logs = [0.0f64; 8];
        let small = self.monomials.len() <= logs.len();
        let exponent = |m: &BasisMonomial| m.log_mag + pow_log(m.a + m.b, ln_rho) + shift;
        for (i, m) in self.monomials.iter().enumerate() {
            let l = exponent(m);
            if small {
                logs[i] = l;
            }
            max = max.max(l);
        }
        if max == f64::NEG_INFINITY {
            return 0.0;
        }
        let mut acc = Neumaier::default();
        for (i, m) in self.monomials.iter().enumerate() {
            let l = if small { logs[i] } else { exponent(m) };
            acc.add(m.sign * (l - max).exp());
        }
        acc.value() * max.exp()
    }

    pub fn eval_weighted(&self, z: Complex64) -> Complex64 {
        let (rho, theta) = z.to_polar();
        Complex64::from_polar(1.0, self.angular_momentum() as f64 * theta) * self.radial_weighted(rho)
    }

    /// Unweighted value; overflows for large `n|z|^2`.
    pub fn eval_raw(&self, z: Complex64) -> Complex64 {
        let (rho, theta) = z.to_polar();
        Complex64::from_polar(1.0, self.angular_momentum() as f64 * theta)
            * self.radial_with_shift(rho.ln(), 0.0)
    }

    /// The basis function as an unweighted polynomial.
    pub fn to_poly(&self) -> Result<PolyPoly> {
        let mut p = PolyPoly::zero(1);
        for m in &self.monomials {
            let c = m.sign * m.log_mag.exp();
            if !c.is_finite() {
                return Err(Error::Capacity(format!(
                    "basis coefficient overflows at n={}, level={}, index={}",
                    self.n, self.level, self.index
                )));
            }
            let (a, b) = (m.a as u16, m.b as u16);
            p = p.add(&PolyPoly::term(1, &[(a, b)], Complex64::new(c, 0.0))?);
        }
        Ok(p)
    }
}

/// All basis functions of a spec, grouped for fast evaluation.
#[derive(Clone, Debug)]
pub struct BasisTable {
    spec: KernelSpec,
    functions: Vec<BasisFunction>,
    momenta: Vec<i64>,
    by_momentum: BTreeMap<i64, Vec<usize>>,
    min_momentum: i64,
}

impl BasisTable {
    pub fn new(spec: KernelSpec) -> Self {
        let functions = super::basis_functions(&spec);
        let momenta: Vec<i64> = functions.iter().map(|f| f.angular_momentum()).collect();
        let mut by_momentum: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (i, &l) in momenta.iter().enumerate() {
            by_momentum.entry(l).or_default().push(i);
        }
        let min_momentum = momenta.iter().copied().min().unwrap_or(0);
        Self {
            spec,
            functions,
            momenta,
            by_momentum,
            min_momentum,
        }
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn functions(&self) -> &[BasisFunction] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn momenta(&self) -> &[i64] {
        &self.momenta
    }

    /// Function indices grouped by angular momentum.
    pub fn by_momentum(&self) -> &BTreeMap<i64, Vec<usize>> {
        &self.by_momentum
    }

    /// Weighted radial profiles of every function at `rho`.
    pub fn radial_values(&self, rho: f64, out: &mut [f64]) {
        let ln_rho = rho.ln();
        let shift = -0.5 * self.spec.n as f64 * rho * rho;
        for (o, f) in out.iter_mut().zip(&self.functions) {
            *o = f.radial_with_shift(ln_rho, shift);
        }
    }

    /// Weighted feature vector `(φ_m(z) e^{-n|z|^2/2})_m`; the weighted kernel
    /// is `K(z, w) = Σ_m v_m(z) conj(v_m(w))`.
    pub fn feature_vector(&self, z: Complex64, out: &mut [Complex64]) {
        let (rho, theta) = z.to_polar();
        let ln_rho = rho.ln();
        let shift = -0.5 * self.spec.n as f64 * rho * rho;
        let max_l = self.momenta.iter().copied().max().unwrap_or(0);
        // phases e^{iℓθ} for ℓ in [min, max], built from exact powers at the ends
        let count = (max_l - self.min_momentum + 1) as usize;
        let unit = Complex64::from_polar(1.0, theta);
        let mut phases = Vec::with_capacity(count);
        let mut p = Complex64::from_polar(1.0, self.min_momentum as f64 * theta);
        for i in 0..count {
            if i % 64 == 0 {
                p = Complex64::from_polar(1.0, (self.min_momentum + i as i64) as f64 * theta);
            }
            phases.push(p);
            p *= unit;
        }
        for ((o, f), &l) in out.iter_mut().zip(&self.functions).zip(&self.momenta) {
            let r = f.radial_with_shift(ln_rho, shift);
            *o = phases[(l - self.min_momentum) as usize] * r;
        }
    }

    pub fn kernel_weighted(&self, z: Complex64, w: Complex64) -> Complex64 {
        let n = self.len();
        let mut a = vec![Complex64::new(0.0, 0.0); n];
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        self.feature_vector(z, &mut a);
        self.feature_vector(w, &mut b);
        let mut re = Neumaier::default();
        let mut im = Neumaier::default();
        for (x, y) in a.iter().zip(&b) {
            let t = x * y.conj();
            re.add(t.re);
            im.add(t.im);
        }
        Complex64::new(re.value(), im.value())
    }

    /// One-point intensity `K(z,z) e^{-n|z|^2}` at `|z| = rho`.
    pub fn intensity(&self, rho: f64) -> f64 {
        let ln_rho = rho.ln();
        let shift = -0.5 * self.spec.n as f64 * rho * rho;
        let mut acc = Neumaier::default();
        for f in &self.functions {
            let r = f.radial_with_shift(ln_rho, shift);
            acc.add(r * r);
        }
        acc.value()
    }
}
