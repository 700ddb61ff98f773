//! Kernels as bivariate polynomials, obtained by applying the raising
//! operators to the Ginibre kernel, plus an independent Gram–Schmidt
//! construction used as an exact oracle.

use num_complex::Complex64;

use super::{Convention, KernelSpec};
use crate::error::{Error, Result};
use crate::polyalg::{gaussian_inner, Coeff, ExactPoly, Poly, PolyPoly};
use crate::special::{pow_log, LogPolarSum, Neumaier};

/// Largest `n` for which the float raising path is built.
pub const RAISING_MAX_N: u32 = 256;

fn budget_for(n: u32, q: u32) -> Result<u16> {
    u16::try_from(n + q + 2).map_err(|_| Error::Capacity(format!("degree budget for n={n}")))
}

/// Ginibre kernel `K_n(z, w) = n Σ_{j<n} n^j/j! z^j w̄^j` with `z` in slot 0
/// and `w` in slot 1.
pub fn ginibre_kernel_poly<C: Coeff>(n: u32) -> Result<Poly<C>> {
    let budget = budget_for(n, 1)?;
    let mut k = Poly::<C>::zero(2).with_budget(budget);
    for j in 0..n {
        // n^{j+1}/j! is the reciprocal of the j-th Gaussian moment
        let c = C::gaussian_moment(j, n)?.recip();
        let j16 = j as u16;
        k = k.add(&Poly::term_with_budget(2, &[(j16, 0), (0, j16)], c, budget)?);
    }
    Ok(k)
}

/// `Σ_{r ∈ levels} n^{-r}/r! [T_n]^r_z [T̄_n]^r_w K_n(z, w)`.
pub fn kernel_poly<C: Coeff>(spec: &KernelSpec) -> Result<Poly<C>> {
    let n = spec.n;
    let budget = budget_for(n, spec.q)?;
    let kn = ginibre_kernel_poly::<C>(n)?.with_budget(budget);
    let mut out = Poly::<C>::zero(2).with_budget(budget);
    let mut r_fact: i64 = 1;
    let mut prev_r = 0;
    for r in spec.levels() {
        for i in (prev_r + 1)..=r {
            r_fact *= i as i64;
        }
        prev_r = prev_r.max(r);
        let raised = kn.raise(0, n, r)?.raise_conj(1, n, r)?;
        let scale = C::inv_pow(n, r)? * C::from_ratio(1, r_fact);
        out = out.add(&raised.scale(&scale));
    }
    Ok(out)
}

/// Reproducing kernel of `Pol_{n,q}` built directly from its definition:
/// Gram–Schmidt on `z̄^r z^j` (`r < q`, `j < n`) in exact arithmetic, then
/// `K = Σ u(z) conj(u(w)) / ‖u‖^2`.
pub fn gram_schmidt_kernel(n: u32, q: u32) -> Result<ExactPoly> {
    if n > 16 || q > 8 {
        return Err(Error::Capacity(format!(
            "exact Gram-Schmidt kernel limited to n <= 16, q <= 8 (got n={n}, q={q})"
        )));
    }
    let one = <crate::polyalg::Exact as Coeff>::one();
    let mut basis: Vec<(ExactPoly, crate::polyalg::Exact)> = Vec::new();
    for r in 0..q {
        for j in 0..n {
            let v = ExactPoly::term(1, &[(j as u16, r as u16)], one.clone())?;
            let mut u = v.clone();
            for (b, norm) in &basis {
                let c = gaussian_inner(&v, b, n)?;
                if !c.is_zero() {
                    u = u.sub(&b.scale(&(c * norm.recip())));
                }
            }
            let norm = gaussian_inner(&u, &u, n)?;
            basis.push((u, norm));
        }
    }
    let mut k = ExactPoly::zero(2);
    for (u, norm) in &basis {
        let left = u.remap(2, &[0]);
        let right = u.conj().remap(2, &[1]);
        k = k.add(&left.mul(&right)?.scale(&norm.recip()));
    }
    Ok(k)
}

/// Float kernel polynomial from the raising path, prepared for log-space
/// evaluation.
#[derive(Clone, Debug)]
pub struct RaisingKernel {
    spec: KernelSpec,
    poly: PolyPoly,
    // (deg z, deg z̄, deg w, deg w̄, ln|c|, arg c)
    terms: Vec<(u32, u32, u32, u32, f64, f64)>,
}

impl RaisingKernel {
    pub fn new(spec: KernelSpec) -> Result<Self> {
        if spec.n > RAISING_MAX_N {
            return Err(Error::Capacity(format!(
                "raising path limited to n <= {RAISING_MAX_N}"
            )));
        }
        let poly = kernel_poly::<Complex64>(&spec)?;
        let terms = poly
            .terms()
            .map(|(m, c)| {
                (
                    m.z(0) as u32,
                    m.zbar(0) as u32,
                    m.z(1) as u32,
                    m.zbar(1) as u32,
                    c.norm().ln(),
                    c.arg(),
                )
            })
            .collect();
        Ok(Self { spec, poly, terms })
    }

    pub fn poly(&self) -> &PolyPoly {
        &self.poly
    }

    pub fn eval(&self, z: Complex64, w: Complex64, conv: Convention) -> Complex64 {
        let (rz, tz) = z.to_polar();
        let (rw, tw) = w.to_polar();
        let (lz, lw) = (rz.ln(), rw.ln());
        let shift = match conv {
            Convention::Weighted => -0.5 * self.spec.n as f64 * (rz * rz + rw * rw),
            Convention::Raw => 0.0,
        };
        let max_log = self
            .terms
            .iter()
            .map(|&(a, b, c, d, lc, _)| lc + pow_log(a + b, lz) + pow_log(c + d, lw))
            .fold(f64::NEG_INFINITY, f64::max);
        if max_log < 650.0 && shift > -650.0 {
            // Plain products keep each term accurate to a few ulps; the
            // log-space route exponentiates arguments of size ~n|z|^2 and so
            // loses digits that the cancelling monomial sum then amplifies.
            return self.eval_direct(rz, tz, rw, tw) * shift.exp();
        }
        let mut sum = LogPolarSum::new();
        for &(a, b, c, d, lc, ac) in &self.terms {
            let log = lc + pow_log(a + b, lz) + pow_log(c + d, lw) + shift;
            let phase = ac + (a as f64 - b as f64) * tz + (c as f64 - d as f64) * tw;
            sum.push(log, phase, 1.0);
        }
        sum.value()
    }

    fn eval_direct(&self, rz: f64, tz: f64, rw: f64, tw: f64) -> Complex64 {
        let mut re = Neumaier::default();
        let mut im = Neumaier::default();
        for ((m, c), &(a, b, cc, d, _, _)) in self.poly.terms().zip(&self.terms) {
            debug_assert_eq!(m.z(0) as u32, a);
            let mag = rz.powi((a + b) as i32) * rw.powi((cc + d) as i32);
            let phase = Complex64::from_polar(1.0, (a as f64 - b as f64) * tz + (cc as f64 - d as f64) * tw);
            let t = c * phase * mag;
            re.add(t.re);
            im.add(t.im);
        }
        Complex64::new(re.value(), im.value())
    }
}
