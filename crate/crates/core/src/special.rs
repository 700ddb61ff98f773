//! Small numerical helpers shared by the kernel, sampler and quadrature code.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

const LN_FACT_TABLE: usize = 8192;

fn ln_fact_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACT_TABLE);
        let mut acc = 0.0f64;
        t.push(0.0);
        for k in 1..LN_FACT_TABLE {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// `ln(a!)`.
pub fn ln_factorial(a: u32) -> f64 {
    let t = ln_fact_table();
    if (a as usize) < t.len() {
        t[a as usize]
    } else {
        statrs::function::gamma::ln_gamma(a as f64 + 1.0)
    }
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `ln (r)_j` for `j <= r`.
pub fn ln_falling(r: u32, j: u32) -> f64 {
    if j > r {
        return f64::NEG_INFINITY;
    }
    ln_factorial(r) - ln_factorial(r - j)
}

/// `e * ln(x)` with the convention `0 * ln 0 = 0`.
#[inline]
pub fn pow_log(e: u32, ln_x: f64) -> f64 {
    if e == 0 {
        0.0
    } else {
        e as f64 * ln_x
    }
}

/// Neumaier-compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sum of complex terms given in log-polar form `exp(log_mag) * e^{i phase} * sign`.
///
/// All terms are rescaled by the largest log-magnitude before summing, so
/// terms whose individual magnitudes overflow still combine correctly.
#[derive(Clone, Debug, Default)]
pub struct LogPolarSum {
    terms: Vec<(f64, f64, f64)>,
}

impl LogPolarSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.terms.clear();
    }

    #[inline]
    pub fn push(&mut self, log_mag: f64, phase: f64, sign: f64) {
        if log_mag > f64::NEG_INFINITY && sign != 0.0 {
            self.terms.push((log_mag, phase, sign));
        }
    }

    /// Returns `(log of the common scale, scaled sum)`.
    pub fn scaled(&self) -> (f64, Complex64) {
        let m = self
            .terms
            .iter()
            .map(|t| t.0)
            .fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return (m, Complex64::new(0.0, 0.0));
        }
        let mut re = Neumaier::default();
        let mut im = Neumaier::default();
        for &(l, ph, s) in &self.terms {
            let a = s * (l - m).exp();
            re.add(a * ph.cos());
            im.add(a * ph.sin());
        }
        (m, Complex64::new(re.value(), im.value()))
    }

    pub fn value(&self) -> Complex64 {
        let (m, s) = self.scaled();
        if m == f64::NEG_INFINITY {
            return s;
        }
        s * m.exp()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// SplitMix64 step, used to derive replicate seeds from a base seed.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
