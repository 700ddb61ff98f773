//! Reproducing kernels `K_n`, `K_{n,q}` and `K_{δ;n,q}`.
//!
//! Three independent evaluation paths are provided:
//!
//! * **basis** (production): `Σ_m φ_m(z) conj(φ_m(w))` over the orthonormal
//!   functions `T_{n,r} e_j`, each evaluated in log-polar form;
//! * **explicit**: the double Laguerre sum for `K_{n,q}`, with the pure kernel
//!   taken as a difference of consecutive full kernels;
//! * **raising**: the raising operators applied symbolically to the Ginibre
//!   kernel polynomial, then evaluated term by term.
//!
//! Numerical work uses the weighted kernel `K(z,w) e^{-n(|z|^2+|w|^2)/2}`,
//! which stays `O(n)` where the raw kernel overflows.

mod basis;
mod explicit;
mod laguerre;
mod raising;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use basis::{BasisFunction, BasisMonomial, BasisTable};
pub use explicit::{full_kernel as explicit_full_kernel, pure_kernel as explicit_pure_kernel};
pub use laguerre::laguerre;
pub use raising::{ginibre_kernel_poly, gram_schmidt_kernel, kernel_poly, RaisingKernel, RAISING_MAX_N};

use crate::error::{Error, Result};
use crate::special::{ln_factorial, pow_log, LogPolarSum};

/// Largest `n` for which raw (unweighted) kernels are produced.
pub const RAW_MAX_N: u32 = 64;
/// Largest total particle count `n q`.
pub const MAX_DIMENSION: u32 = 4096;
/// Weighted evaluation is supported for `|z|, |w|` up to this radius.
pub const MAX_RADIUS: f64 = 8.0;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Ginibre,
    Full,
    Pure,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Ginibre => "ginibre",
            Variant::Full => "full",
            Variant::Pure => "pure",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ginibre" => Ok(Variant::Ginibre),
            "full" => Ok(Variant::Full),
            "pure" => Ok(Variant::Pure),
            other => Err(Error::InvalidSpec(format!("unknown variant `{other}`"))),
        }
    }
}

/// Ensemble selector: `n` particles per level (also the field strength) and
/// `q` Landau levels.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct KernelSpec {
    pub n: u32,
    pub q: u32,
    pub variant: Variant,
}

impl KernelSpec {
    pub fn new(n: u32, q: u32, variant: Variant) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpec("n must be positive".into()));
        }
        if q == 0 {
            return Err(Error::InvalidSpec("q must be positive".into()));
        }
        if variant == Variant::Ginibre && q != 1 {
            return Err(Error::InvalidSpec(format!("ginibre requires q = 1, got q = {q}")));
        }
        let spec = Self { n, q, variant };
        if spec.dimension() > MAX_DIMENSION as usize {
            return Err(Error::InvalidSpec(format!(
                "dimension {} exceeds {MAX_DIMENSION}",
                spec.dimension()
            )));
        }
        Ok(spec)
    }

    pub fn ginibre(n: u32) -> Result<Self> {
        Self::new(n, 1, Variant::Ginibre)
    }

    pub fn full(n: u32, q: u32) -> Result<Self> {
        Self::new(n, q, Variant::Full)
    }

    pub fn pure(n: u32, q: u32) -> Result<Self> {
        Self::new(n, q, Variant::Pure)
    }

    /// Number of points in a configuration.
    pub fn dimension(&self) -> usize {
        match self.variant {
            Variant::Full => (self.n * self.q) as usize,
            Variant::Pure | Variant::Ginibre => self.n as usize,
        }
    }

    /// Zero-based Landau levels `r` whose functions `T_{n,r} e_j` span the space.
    pub fn levels(&self) -> std::ops::Range<u32> {
        match self.variant {
            Variant::Full => 0..self.q,
            Variant::Pure => (self.q - 1)..self.q,
            Variant::Ginibre => 0..1,
        }
    }

    /// Radial cut-off `max(2, 1 + 8/√n)` beyond which the intensity is negligible.
    pub fn r_max(&self) -> f64 {
        (1.0 + 8.0 / (self.n as f64).sqrt()).max(2.0)
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(n={}, q={})", self.variant, self.n, self.q)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelPath {
    Basis,
    Explicit,
    Raising,
}

impl FromStr for KernelPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basis" => Ok(KernelPath::Basis),
            "explicit" => Ok(KernelPath::Explicit),
            "raising" => Ok(KernelPath::Raising),
            other => Err(Error::InvalidArgument(format!("unknown kernel path `{other}`"))),
        }
    }
}

/// Raw `K(z,w)` or weighted `K(z,w) e^{-n(|z|^2+|w|^2)/2}`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    Raw,
    Weighted,
}

/// A kernel value tagged with its convention.
#[derive(Clone, Copy, PartialEq, Debug, Serialize)]
pub struct WeightedValue {
    pub value: Complex64,
    pub convention: Convention,
}

/// The Ginibre kernel `K_n(z,w) = n Σ_{j<n} (n z w̄)^j / j!`, summed term-wise
/// in log space.
pub fn eval_ginibre(n: u32, z: Complex64, w: Complex64, conv: Convention) -> Result<Complex64> {
    if n == 0 || n > MAX_DIMENSION {
        return Err(Error::InvalidSpec(format!("n = {n} outside 1..={MAX_DIMENSION}")));
    }
    check_convention(n, z, w, conv)?;
    let nf = n as f64;
    let (rz, tz) = z.to_polar();
    let (rw, tw) = w.to_polar();
    let ln_cross = (nf * rz * rw).ln();
    let shift = match conv {
        Convention::Weighted => -0.5 * nf * (rz * rz + rw * rw),
        Convention::Raw => 0.0,
    };
    let mut sum = LogPolarSum::new();
    for j in 0..n {
        let log = nf.ln() + pow_log(j, ln_cross) - ln_factorial(j) + shift;
        sum.push(log, j as f64 * (tz - tw), 1.0);
    }
    finite(sum.value())
}

fn check_convention(n: u32, z: Complex64, w: Complex64, conv: Convention) -> Result<()> {
    match conv {
        Convention::Raw if n > RAW_MAX_N => Err(Error::Capacity(format!(
            "raw kernel requested with n = {n} > {RAW_MAX_N}; use the weighted kernel"
        ))),
        Convention::Weighted if z.norm() > MAX_RADIUS || w.norm() > MAX_RADIUS => Err(
            Error::InvalidArgument(format!("weighted evaluation needs |z|, |w| <= {MAX_RADIUS}")),
        ),
        _ => Ok(()),
    }
}

fn finite(v: Complex64) -> Result<Complex64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::Capacity("kernel value not representable".into()))
    }
}

/// Orthonormal basis `{T_{n,r} e_j : 0 <= j < n}` for each level of the spec.
pub fn basis_functions(spec: &KernelSpec) -> Vec<BasisFunction> {
    spec.levels()
        .flat_map(|r| (0..spec.n).map(move |j| BasisFunction::new(spec.n, r, j)))
        .collect()
}

/// Evaluates the kernel of `spec` along one path. Building the raising path is
/// expensive; use [`PreparedKernel`] for repeated evaluations.
pub fn eval_kernel(
    spec: &KernelSpec,
    z: Complex64,
    w: Complex64,
    path: KernelPath,
    conv: Convention,
) -> Result<Complex64> {
    PreparedKernel::new(*spec, path == KernelPath::Raising)?.eval(z, w, path, conv)
}

/// `K(z,z) e^{-n|z|^2}` at `|z| = radius`.
pub fn intensity(spec: &KernelSpec, radius: f64) -> Result<f64> {
    if !(0.0..=MAX_RADIUS).contains(&radius) {
        return Err(Error::InvalidArgument(format!("radius {radius} outside [0, {MAX_RADIUS}]")));
    }
    Ok(BasisTable::new(*spec).intensity(radius))
}

/// Basis table plus the optional raising-path polynomial, immutable after
/// construction and shareable across threads.
#[derive(Clone, Debug)]
pub struct PreparedKernel {
    spec: KernelSpec,
    basis: BasisTable,
    raising: Option<RaisingKernel>,
}

impl PreparedKernel {
    pub fn new(spec: KernelSpec, with_raising: bool) -> Result<Self> {
        let raising = if with_raising {
            Some(RaisingKernel::new(spec)?)
        } else {
            None
        };
        Ok(Self {
            spec,
            basis: BasisTable::new(spec),
            raising,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn basis(&self) -> &BasisTable {
        &self.basis
    }

    pub fn eval(&self, z: Complex64, w: Complex64, path: KernelPath, conv: Convention) -> Result<Complex64> {
        check_convention(self.spec.n, z, w, conv)?;
        let n = self.spec.n;
        let v = match path {
            KernelPath::Basis => {
                let k = self.basis.kernel_weighted(z, w);
                match conv {
                    Convention::Weighted => k,
                    Convention::Raw => k * (0.5 * n as f64 * (z.norm_sqr() + w.norm_sqr())).exp(),
                }
            }
            KernelPath::Explicit => match self.spec.variant {
                Variant::Ginibre => explicit::full_kernel(n, 1, z, w, conv),
                Variant::Full => explicit::full_kernel(n, self.spec.q, z, w, conv),
                Variant::Pure => explicit::pure_kernel(n, self.spec.q, z, w, conv),
            },
            KernelPath::Raising => match &self.raising {
                Some(r) => r.eval(z, w, conv),
                None => RaisingKernel::new(self.spec)?.eval(z, w, conv),
            },
        };
        finite(v)
    }

    pub fn value(&self, z: Complex64, w: Complex64, path: KernelPath, conv: Convention) -> Result<WeightedValue> {
        Ok(WeightedValue {
            value: self.eval(z, w, path, conv)?,
            convention: conv,
        })
    }

    pub fn intensity(&self, radius: f64) -> f64 {
        self.basis.intensity(radius)
    }
}

/// Discrepancy between two kernel values at `(z, w)`, scaled by the
/// Cauchy–Schwarz bound `√(K(z,z) K(w,w))` of the weighted kernel.
pub fn relative_discrepancy(a: Complex64, b: Complex64, diag_z: f64, diag_w: f64) -> f64 {
    let scale = (diag_z * diag_w).sqrt().max(a.norm()).max(b.norm());
    if scale == 0.0 {
        return (a - b).norm();
    }
    (a - b).norm() / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::{apply_t, basis_monomial, gaussian_inner, Coeff, Exact, ExactPoly};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn spec_validation() {
        assert!(KernelSpec::new(3, 2, Variant::Ginibre).is_err());
        assert!(KernelSpec::new(0, 1, Variant::Full).is_err());
        assert!(KernelSpec::new(2048, 3, Variant::Full).is_err());
        assert_eq!(KernelSpec::full(5, 3).unwrap().dimension(), 15);
        assert_eq!(KernelSpec::pure(5, 3).unwrap().dimension(), 5);
    }

    #[test]
    fn ginibre_examples() {
        let z = c(0.3, -0.7);
        let w = c(-1.1, 0.2);
        let k1 = eval_ginibre(1, z, w, Convention::Raw).unwrap();
        assert!((k1 - c(1.0, 0.0)).norm() < 1e-15);
        for n in [1u32, 5, 40, 300] {
            let k = eval_ginibre(n, c(0.0, 0.0), c(0.0, 0.0), Convention::Weighted).unwrap();
            assert!((k.re - n as f64).abs() < 1e-12 * n as f64);
            for &r in &[0.2, 0.9, 1.0, 1.3, 3.0] {
                let z = Complex64::from_polar(r, 0.4);
                let d = eval_ginibre(n, z, z, Convention::Weighted).unwrap();
                assert!(d.re <= n as f64 * (1.0 + 1e-12) && d.re >= 0.0);
                assert!(d.im.abs() < 1e-12 * n as f64);
            }
        }
        assert!(matches!(
            eval_ginibre(200, c(0.0, 0.0), c(0.0, 0.0), Convention::Raw),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn basis_counts() {
        assert_eq!(basis_functions(&KernelSpec::full(5, 3).unwrap()).len(), 15);
        let g = basis_functions(&KernelSpec::ginibre(3).unwrap());
        assert_eq!(g.len(), 3);
        for (j, f) in g.iter().enumerate() {
            let e = basis_monomial(j as u32, 3).unwrap();
            let p = f.to_poly().unwrap();
            assert!((p.coeff(&[(j as u16, 0)]) - e.coeff(&[(j as u16, 0)])).norm() < 1e-14);
        }
    }

    #[test]
    fn pure_level_two_single_function() {
        // n = 1, q = 2: T_{1,1} e_0 = -T_1 1 = -z̄
        let fs = basis_functions(&KernelSpec::pure(1, 2).unwrap());
        assert_eq!(fs.len(), 1);
        let via_polyalg = apply_t(&basis_monomial(0, 1).unwrap(), 1, 1).unwrap();
        let p = fs[0].to_poly().unwrap();
        assert!((p.coeff(&[(0, 1)]) + via_polyalg.coeff(&[(0, 1)])).norm() < 1e-15);
        let z = c(0.4, 0.9);
        let want = -z.conj() * (-z.norm_sqr() / 2.0).exp();
        assert!((fs[0].eval_weighted(z) - want).norm() < 1e-15);
    }

    #[test]
    fn basis_is_orthonormal_under_gaussian_inner() {
        for &(n, q) in &[(1u32, 3u32), (3, 3), (6, 2)] {
            let fs = basis_functions(&KernelSpec::full(n, q).unwrap());
            let polys: Vec<_> = fs.iter().map(|f| f.to_poly().unwrap()).collect();
            for (i, a) in polys.iter().enumerate() {
                for (j, b) in polys.iter().enumerate() {
                    let v = gaussian_inner(a, b, n).unwrap();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((v - c(want, 0.0)).norm() < 1e-12, "n={n} q={q} i={i} j={j}: {v}");
                }
            }
        }
    }

    #[test]
    fn full_kernel_at_origin() {
        for &(n, q) in &[(1u32, 2u32), (4, 3), (30, 4)] {
            let pk = PreparedKernel::new(KernelSpec::full(n, q).unwrap(), true).unwrap();
            for path in [KernelPath::Basis, KernelPath::Explicit, KernelPath::Raising] {
                let v = pk.eval(c(0.0, 0.0), c(0.0, 0.0), path, Convention::Weighted).unwrap();
                // only φ_{r,r} (r < min(n, q)) is nonzero at 0, with |φ|^2 = n
                let want = (n * n.min(q)) as f64;
                assert!((v.re - want).abs() < 1e-10, "{path:?} n={n} q={q}: {v}");
            }
        }
    }

    #[test]
    fn pure_level_two_kernel_is_zbar_w() {
        let spec = KernelSpec::pure(1, 2).unwrap();
        let pk = PreparedKernel::new(spec, true).unwrap();
        let z = c(0.3, 0.5);
        let w = c(-0.8, 0.1);
        let want = z.conj() * w;
        for path in [KernelPath::Basis, KernelPath::Explicit, KernelPath::Raising] {
            let v = pk.eval(z, w, path, Convention::Raw).unwrap();
            assert!((v - want).norm() < 1e-14, "{path:?}: {v} vs {want}");
        }
        // exact raising polynomial
        let kp = kernel_poly::<Exact>(&spec).unwrap();
        assert_eq!(kp.len(), 1);
        assert_eq!(kp.coeff(&[(0, 1), (1, 0)]), Exact::one());
    }

    #[test]
    fn paths_agree_small_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for variant in [Variant::Full, Variant::Pure] {
            for &(n, q) in &[(1u32, 3u32), (2, 2), (7, 3), (20, 4)] {
                let spec = KernelSpec::new(n, q, variant).unwrap();
                let pk = PreparedKernel::new(spec, true).unwrap();
                for _ in 0..50 {
                    let z = Complex64::from_polar(2.0 * rng.random::<f64>().sqrt(), 6.3 * rng.random::<f64>());
                    let w = Complex64::from_polar(2.0 * rng.random::<f64>().sqrt(), 6.3 * rng.random::<f64>());
                    let b = pk.eval(z, w, KernelPath::Basis, Convention::Weighted).unwrap();
                    let e = pk.eval(z, w, KernelPath::Explicit, Convention::Weighted).unwrap();
                    let r = pk.eval(z, w, KernelPath::Raising, Convention::Weighted).unwrap();
                    let dz = pk.intensity(z.norm());
                    let dw = pk.intensity(w.norm());
                    assert!(relative_discrepancy(b, e, dz, dw) < 1e-10, "{spec} explicit {b} {e}");
                    assert!(relative_discrepancy(b, r, dz, dw) < 1e-10, "{spec} raising {b} {r}");
                }
            }
        }
    }

    #[test]
    fn hermitian_and_diagonal_bound() {
        let spec = KernelSpec::full(12, 3).unwrap();
        let pk = PreparedKernel::new(spec, false).unwrap();
        let z = c(0.3, 0.4);
        let w = c(-0.5, 0.9);
        let a = pk.eval(z, w, KernelPath::Basis, Convention::Weighted).unwrap();
        let b = pk.eval(w, z, KernelPath::Basis, Convention::Weighted).unwrap();
        assert!((a - b.conj()).norm() < 1e-13);
        for i in 0..200 {
            let r = i as f64 * 0.02;
            let d = pk.intensity(r);
            assert!(d >= 0.0 && d <= 36.0 * (1.0 + 1e-9));
        }
    }

    #[test]
    fn decomposition_into_pure_kernels_exact() {
        for &(n, q) in &[(1u32, 3u32), (3, 2), (4, 3)] {
            let full = kernel_poly::<Exact>(&KernelSpec::full(n, q).unwrap()).unwrap();
            let gs = gram_schmidt_kernel(n, q).unwrap();
            assert_eq!(full, gs, "n={n} q={q}");
            let mut sum = ExactPoly::zero(2);
            for r in 1..=q {
                sum = sum.add(&kernel_poly::<Exact>(&KernelSpec::pure(n, r).unwrap()).unwrap());
            }
            assert_eq!(sum, gs);
        }
    }

    #[test]
    fn raw_guard() {
        let spec = KernelSpec::ginibre(200).unwrap();
        let r = eval_kernel(&spec, c(0.0, 0.0), c(0.0, 0.0), KernelPath::Basis, Convention::Raw);
        assert!(matches!(r, Err(Error::Capacity(_))));
    }
}
