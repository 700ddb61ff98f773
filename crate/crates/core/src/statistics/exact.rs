//! Exact cumulant oracles for small `n`.
//!
//! Cumulants of `X = Σ g(λ_j)` for a projection kernel `K` are
//! `C_k = ∫ G_k(z_1..z_k) K(z_1,z_2) K(z_2,z_3) ... K(z_k,z_1) dμ_n^k` with
//! `G_k = Σ_j (-1)^{j-1}/j Σ_{k_1+..+k_j=k} k!/(k_1!..k_j!) Π_{l≤j} g(z_l)^{k_l}`.
//! For polynomial `g` and the polynomial kernels every integral is a finite
//! sum of Gaussian moments, computed here in exact rational arithmetic.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::{CumulantReport, Method};
use crate::error::{Error, Result};
use crate::kernels::{ginibre_kernel_poly, kernel_poly, KernelSpec};
use crate::polyalg::{Coeff, DiffOpSpec, Exact, ExactPoly};

/// `Σ c Π_l g(z_l)^{e_l}` over `k` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct GkRepresentation {
    pub k: usize,
    pub terms: Vec<(BigRational, Vec<u32>)>,
}

fn factorial(k: usize) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * i)
}

fn compositions(k: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if parts == 0 {
        if k == 0 {
            out.push(prefix.clone());
        }
        return;
    }
    for first in 1..=k.saturating_sub(parts - 1) {
        prefix.push(first);
        compositions(k - first, parts - 1, prefix, out);
        prefix.pop();
    }
}

impl GkRepresentation {
    /// The composition-sum form; variables beyond `z_j` do not appear in the
    /// `j`-part terms.
    pub fn raw(k: usize) -> Result<Self> {
        if !(1..=4).contains(&k) {
            return Err(Error::OrderOutOfRange(k));
        }
        let kfact = factorial(k);
        let mut acc: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
        for j in 1..=k {
            let mut comps = Vec::new();
            compositions(k, j, &mut Vec::new(), &mut comps);
            let sign = if j % 2 == 1 { 1 } else { -1 };
            for c in comps {
                let denom = c.iter().fold(BigInt::one(), |a, &p| a * factorial(p)) * BigInt::from(j);
                let coeff = BigRational::new(kfact.clone() * sign, denom);
                let mut e = vec![0u32; k];
                for (l, &p) in c.iter().enumerate() {
                    e[l] = p as u32;
                }
                *acc.entry(e).or_insert_with(BigRational::zero) += coeff;
            }
        }
        Ok(Self::from_map(k, acc))
    }

    fn from_map(k: usize, acc: BTreeMap<Vec<u32>, BigRational>) -> Self {
        Self {
            k,
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).map(|(e, c)| (c, e)).collect(),
        }
    }

    /// Average over the `k` cyclic relabelings, which leave the cyclic kernel
    /// product unchanged.
    pub fn symmetrized(&self) -> Self {
        let mut acc: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
        let inv = BigRational::new(BigInt::one(), BigInt::from(self.k));
        for (c, e) in &self.terms {
            for s in 0..self.k {
                let rotated: Vec<u32> = (0..self.k).map(|l| e[(l + self.k - s) % self.k]).collect();
                *acc.entry(rotated).or_insert_with(BigRational::zero) += c * &inv;
            }
        }
        Self::from_map(self.k, acc)
    }

    /// Value at `g(z_l) = values[l]`.
    pub fn eval(&self, values: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| {
                c.to_f64().unwrap_or(f64::NAN) * e.iter().zip(values).map(|(&p, v)| v.powi(p as i32)).product::<f64>()
            })
            .sum()
    }

    /// Sum of coefficients: the value when all arguments are equal to 1, and
    /// up to the common factor `g^k` the value on the diagonal.
    pub fn diagonal_coefficient(&self) -> BigRational {
        self.terms.iter().fold(BigRational::zero(), |a, (c, _)| a + c)
    }

    /// `G_k` as an exact polynomial in `k` variables.
    pub fn to_poly(&self, g: &ExactPoly) -> Result<ExactPoly> {
        let powers = exact_powers(g, self.k as u32)?;
        let mut out = ExactPoly::zero(self.k).with_budget(g.budget());
        for (c, e) in &self.terms {
            let mut t = ExactPoly::constant(self.k, rational(c.clone())).with_budget(g.budget());
            for (l, &p) in e.iter().enumerate() {
                if p > 0 {
                    let mut map = vec![0; 1];
                    map[0] = l;
                    t = t.mul(&powers[p as usize].remap(self.k, &map))?;
                }
            }
            out = out.add(&t);
        }
        Ok(out)
    }
}

pub fn build_gk(k: usize) -> Result<GkRepresentation> {
    GkRepresentation::raw(k)
}

fn rational(c: BigRational) -> Exact {
    Exact::new(c, BigRational::zero())
}

fn exact_powers(g: &ExactPoly, k: u32) -> Result<Vec<ExactPoly>> {
    let mut out = vec![ExactPoly::constant(1, <Exact as Coeff>::one()).with_budget(g.budget())];
    for _ in 0..k {
        let next = out.last().unwrap().mul(g)?;
        out.push(next);
    }
    Ok(out)
}

/// The spec's kernel as an exact polynomial, `z` in slot 0 and `w` in slot 1.
pub fn exact_kernel(spec: &KernelSpec) -> Result<ExactPoly> {
    kernel_poly::<Exact>(spec)
}

/// `K(z_a, z_b)` embedded in `nvars` variables.
fn place(k: &ExactPoly, nvars: usize, a: usize, b: usize) -> ExactPoly {
    k.remap(nvars, &[a, b])
}

fn real_part(v: &Exact) -> Result<f64> {
    if !v.im.is_zero() {
        return Err(Error::NonReal(format!("cumulant has imaginary part {}", v.im)));
    }
    Ok(v.re.to_f64().unwrap_or(f64::NAN))
}

/// Exact cumulant `C_k`, `k ≤ 3`, of `Σ g(λ_j)` for polynomial real `g`.
pub fn cumulant_exact_smalln(k: usize, spec: &KernelSpec, g: &ExactPoly) -> Result<CumulantReport> {
    let v = cumulant_exact_value(k, spec, g, false)?;
    Ok(CumulantReport {
        k,
        value: real_part(&v)?,
        method: Method::ExactOracle,
        std_error: 0.0,
        spec: *spec,
        g: format!("{g}"),
        richardson_gap: None,
        converged: true,
        replicates: None,
    })
}

/// The exact value of `C_k`, using either the raw or the cyclically
/// symmetrized `G_k`.
pub fn cumulant_exact_value(k: usize, spec: &KernelSpec, g: &ExactPoly, symmetrize: bool) -> Result<Exact> {
    if !(1..=3).contains(&k) {
        return Err(Error::OrderOutOfRange(k));
    }
    if spec.n > 8 {
        return Err(Error::Capacity(format!("exact cumulants need n <= 8, got {}", spec.n)));
    }
    if g.nvars() != 1 || !g.is_real() {
        return Err(Error::NonReal("g must be a real polynomial in one variable".into()));
    }
    let n = spec.n;
    let kern = exact_kernel(spec)?;
    let budget = kern.budget().max(g.budget()).max(64);
    let kern = kern.with_budget(budget);
    let g = g.clone().with_budget(budget);
    let gk = GkRepresentation::raw(k)?;
    let gk = if symmetrize { gk.symmetrized() } else { gk };
    let powers = exact_powers(&g, k as u32)?;
    let mut total = <Exact as Coeff>::zero();
    match k {
        1 => {
            // K(z, z) g(z)
            let diag = kern.remap(1, &[0, 0]);
            total = diag.mul(&g)?.integrate(n)?;
        }
        2 => {
            let cyc = place(&kern, 2, 0, 1).mul(&place(&kern, 2, 1, 0))?;
            for (c, e) in &gk.terms {
                let f = powers[e[0] as usize]
                    .remap(2, &[0])
                    .mul(&powers[e[1] as usize].remap(2, &[1]))?;
                total = total + rational(c.clone()) * f.mul(&cyc)?.integrate(n)?;
            }
        }
        _ => {
            let k12 = place(&kern, 3, 0, 1);
            let k23 = place(&kern, 3, 1, 2);
            let k31 = place(&kern, 3, 2, 0);
            let chain = k12.mul(&k23)?;
            // integrate the middle variable once per exponent it carries
            let mut middle: BTreeMap<u32, ExactPoly> = BTreeMap::new();
            for (_, e) in &gk.terms {
                if !middle.contains_key(&e[1]) {
                    let p = chain.mul(&powers[e[1] as usize].remap(3, &[1]))?.integrate_slot(1, n)?;
                    middle.insert(e[1], p.mul(&k31)?);
                }
            }
            for (c, e) in &gk.terms {
                let outer = powers[e[0] as usize]
                    .remap(3, &[0])
                    .mul(&powers[e[2] as usize].remap(3, &[2]))?;
                // slot 1 is already integrated; integrating it again would add a factor 1/n
                let v = outer.mul(&middle[&e[1]])?.integrate_slot(0, n)?.integrate_slot(2, n)?.coeff(&[]);
                total = total + rational(c.clone()) * v;
            }
        }
    }
    Ok(total)
}

/// Both sides of the partial-integration identity for the two-point cyclic
/// integral with `F = f_1(z_1) f_2(z_2)`.
#[derive(Clone, Debug, Serialize)]
pub struct CrosstermCheck {
    pub n: u32,
    pub i1: u32,
    pub i2: u32,
    pub lhs: f64,
    pub rhs: f64,
    pub diff: f64,
    pub exact_equal: bool,
}

/// `lhs = ∫∫ F [T^{i1}_{z1} T̄^{i1}_{z2} K_n(z1,z2)] [T^{i2}_{z2} T̄^{i2}_{z1} K_n(z2,z1)] dμ²`,
/// `rhs = ∫∫ (D_{i2,i1,n})_{z1} (D_{i1,i2,n})_{z2} F · K_n(z1,z2) K_n(z2,z1) dμ²`.
pub fn verify_crossterms(n: u32, i1: u32, i2: u32, f1: &ExactPoly, f2: &ExactPoly) -> Result<CrosstermCheck> {
    if n == 0 || n > 6 || i1 > 3 || i2 > 3 {
        return Err(Error::InvalidArgument(format!(
            "crossterm check needs 1 <= n <= 6 and i1, i2 <= 3 (got n={n}, i1={i1}, i2={i2})"
        )));
    }
    let budget = 64;
    let kn = ginibre_kernel_poly::<Exact>(n)?.with_budget(budget);
    let k12 = kn.clone();
    let k21 = kn.remap(2, &[1, 0]);
    let f = f1
        .clone()
        .with_budget(budget)
        .remap(2, &[0])
        .mul(&f2.clone().with_budget(budget).remap(2, &[1]))?;

    let raised12 = k12.raise(0, n, i1)?.raise_conj(1, n, i1)?;
    let raised21 = k21.raise(1, n, i2)?.raise_conj(0, n, i2)?;
    let lhs = f.mul(&raised12)?.mul(&raised21)?.integrate(n)?;

    let df = f
        .apply_diffop(0, &DiffOpSpec::new(i2, i1, n)?)
        .apply_diffop(1, &DiffOpSpec::new(i1, i2, n)?);
    let rhs = df.mul(&k12)?.mul(&k21)?.integrate(n)?;

    let diff = lhs.clone() - rhs.clone();
    let exact_equal = Coeff::is_zero(&diff);
    let to_f = |v: &Exact| v.re.to_f64().unwrap_or(f64::NAN);
    Ok(CrosstermCheck {
        n,
        i1,
        i2,
        lhs: to_f(&lhs),
        rhs: to_f(&rhs),
        diff: diff.re.abs().to_f64().unwrap_or(f64::NAN).max(diff.im.abs().to_f64().unwrap_or(f64::NAN)),
        exact_equal,
    })
}

/// `C_2` of the pure ensemble from the Laguerre-operator form
/// `∫∫ L_{q-1}(-Δ_1/n) L_{q-1}(-Δ_2/n) G_2 · K_n(z1,z2) K_n(z2,z1) dμ²`.
pub fn pure_c2_via_laguerre(n: u32, q: u32, g: &ExactPoly) -> Result<Exact> {
    use crate::polyalg::laguerre_of_laplacian;
    let budget = 64;
    let g = g.clone().with_budget(budget);
    let g2 = GkRepresentation::raw(2)?.to_poly(&g)?;
    let r = q - 1;
    // n^r r! L_r^0(-Δ/n) = D_{r,r,n}; divide back by n^r r! per variable
    let mut op = laguerre_of_laplacian(&g2, 0, r, n)?;
    op = laguerre_of_laplacian(&op, 1, r, n)?;
    let kn = ginibre_kernel_poly::<Exact>(n)?.with_budget(budget);
    let cyc = kn.mul(&kn.remap(2, &[1, 0]))?;
    op.mul(&cyc)?.integrate(n)
}

/// `C_2` of the full ensemble from the double sum over levels with the
/// operators `D_{i2,i1,n} ⊗ D_{i1,i2,n}`.
pub fn full_c2_via_diffops(n: u32, q: u32, g: &ExactPoly) -> Result<Exact> {
    let budget = 64;
    let g = g.clone().with_budget(budget);
    let g2 = GkRepresentation::raw(2)?.to_poly(&g)?;
    let kn = ginibre_kernel_poly::<Exact>(n)?.with_budget(budget);
    let cyc = kn.mul(&kn.remap(2, &[1, 0]))?;
    let mut total = <Exact as Coeff>::zero();
    for i1 in 0..q {
        for i2 in 0..q {
            let d = g2
                .apply_diffop(0, &DiffOpSpec::new(i2, i1, n)?)
                .apply_diffop(1, &DiffOpSpec::new(i1, i2, n)?);
            let scale = Exact::inv_pow(n, i1 + i2)?
                * Exact::from_ratio(1, (factorial(i1 as usize) * factorial(i2 as usize)).to_i64().unwrap());
            total = total + scale * d.mul(&cyc)?.integrate(n)?;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::TestFunction;

    fn g(s: &str) -> ExactPoly {
        TestFunction::parse(s).unwrap().to_poly::<Exact>().unwrap()
    }

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn gk_forms() {
        let g1 = build_gk(1).unwrap();
        assert_eq!(g1.terms, vec![(q(1, 1), vec![1])]);
        let g2 = build_gk(2).unwrap();
        assert_eq!(g2.terms, vec![(q(-1, 1), vec![1, 1]), (q(1, 1), vec![2, 0])]);
        let s2 = g2.symmetrized();
        // ½(g1 - g2)^2
        assert_eq!(s2.terms, vec![(q(1, 2), vec![0, 2]), (q(-1, 1), vec![1, 1]), (q(1, 2), vec![2, 0])]);
        assert!((s2.eval(&[0.7, 0.7])).abs() < 1e-15);
        let g3 = build_gk(3).unwrap();
        let want = [
            (q(1, 1), vec![3, 0, 0]),
            (q(-3, 2), vec![1, 2, 0]),
            (q(-3, 2), vec![2, 1, 0]),
            (q(2, 1), vec![1, 1, 1]),
        ];
        for (c, e) in want {
            assert!(g3.terms.contains(&(c, e)));
        }
        assert_eq!(g3.terms.len(), 4);
        for k in 2..=4 {
            let gk = build_gk(k).unwrap();
            assert!(gk.diagonal_coefficient().is_zero(), "k={k}");
            assert!(gk.symmetrized().diagonal_coefficient().is_zero());
        }
        assert!(matches!(build_gk(5), Err(Error::OrderOutOfRange(5))));
    }

    #[test]
    fn exact_cumulant_examples() {
        let one = KernelSpec::ginibre(1).unwrap();
        assert_eq!(cumulant_exact_smalln(1, &one, &g("abs2")).unwrap().value, 1.0);
        assert_eq!(cumulant_exact_smalln(2, &one, &g("abs2")).unwrap().value, 1.0);
        // |λ|² ~ Exp(1): third cumulant 2
        assert_eq!(cumulant_exact_smalln(3, &one, &g("abs2")).unwrap().value, 2.0);
        // constant g: a deterministic count
        let spec = KernelSpec::full(3, 2).unwrap();
        assert_eq!(cumulant_exact_smalln(1, &spec, &g("1")).unwrap().value, 6.0);
        assert_eq!(cumulant_exact_smalln(2, &spec, &g("1")).unwrap().value, 0.0);
        assert_eq!(cumulant_exact_smalln(3, &spec, &g("1")).unwrap().value, 0.0);
    }

    #[test]
    fn third_cumulant_matches_independent_gamma_moduli() {
        // the squared moduli are independent Gamma(j + 1, rate n), j < n, whose
        // third cumulants sum to 2 Σ (j + 1) / n^3
        for n in 1..=4u32 {
            let spec = KernelSpec::ginibre(n).unwrap();
            let want = 2.0 * (n * (n + 1) / 2) as f64 / (n as f64).powi(3);
            let got = cumulant_exact_smalln(3, &spec, &g("abs2")).unwrap().value;
            assert!((got - want).abs() < 1e-14, "n={n}: {got} vs {want}");
            let var = cumulant_exact_smalln(2, &spec, &g("abs2")).unwrap().value;
            assert!((var - (n * (n + 1) / 2) as f64 / (n * n) as f64).abs() < 1e-14);
        }
    }

    /// `C_2`, `C_3` from `log det` of the Gram matrices `A_p = ⟨g^p f_i, f_j⟩`
    /// over the orthogonal spanning set `T_n^r z^j`:
    /// `C_2 = tr A_2 - tr A_1²`, `C_3 = tr A_3 - 3 tr A_1 A_2 + 2 tr A_1³`.
    fn gram_trace_cumulants(spec: &KernelSpec, g: &ExactPoly) -> (Exact, Exact) {
        use crate::polyalg::{apply_t, gaussian_inner};
        let n = spec.n;
        let mut f = Vec::new();
        for r in spec.levels() {
            for j in 0..n {
                let zj = ExactPoly::term(1, &[(j as u16, 0)], <Exact as Coeff>::one()).unwrap();
                f.push(apply_t(&zj, n, r).unwrap().with_budget(64));
            }
        }
        let gp: Vec<ExactPoly> = (0..=3).map(|p| g.clone().with_budget(64).pow(p).unwrap()).collect();
        let m = f.len();
        let gram = |p: usize| -> Vec<Vec<Exact>> {
            (0..m)
                .map(|i| (0..m).map(|j| gaussian_inner(&gp[p].mul(&f[i]).unwrap(), &f[j], n).unwrap()).collect())
                .collect()
        };
        let (a0, a1, a2, a3) = (gram(0), gram(1), gram(2), gram(3));
        let inv: Vec<Exact> = (0..m).map(|i| a0[i][i].recip()).collect();
        let zero = <Exact as Coeff>::zero;
        let (mut t2, mut t11, mut t3, mut t12, mut t111) = (zero(), zero(), zero(), zero(), zero());
        for i in 0..m {
            t2 = t2 + a2[i][i].clone() * inv[i].clone();
            t3 = t3 + a3[i][i].clone() * inv[i].clone();
            for j in 0..m {
                let w = inv[i].clone() * inv[j].clone();
                t11 = t11 + a1[i][j].clone() * a1[j][i].clone() * w.clone();
                t12 = t12 + a1[i][j].clone() * a2[j][i].clone() * w.clone();
                for l in 0..m {
                    t111 = t111 + a1[i][j].clone() * a1[j][l].clone() * a1[l][i].clone() * w.clone() * inv[l].clone();
                }
            }
        }
        (t2 - t11, t3 - Exact::from_u64(3) * t12 + Exact::from_u64(2) * t111)
    }

    #[test]
    fn cyclic_formula_matches_gram_determinant_route() {
        for (spec, src) in [
            (KernelSpec::full(4, 2).unwrap(), "abs2"),
            (KernelSpec::pure(4, 2).unwrap(), "abs2 + re"),
            (KernelSpec::pure(2, 3).unwrap(), "harm(2) + abs2"),
        ] {
            let gp = g(src);
            let (c2, c3) = gram_trace_cumulants(&spec, &gp);
            assert_eq!(cumulant_exact_value(2, &spec, &gp, false).unwrap(), c2, "{spec} {src}");
            assert_eq!(cumulant_exact_value(3, &spec, &gp, false).unwrap(), c3, "{spec} {src}");
        }
    }

    #[test]
    fn symmetrization_preserves_cumulants() {
        for spec in [KernelSpec::full(2, 2).unwrap(), KernelSpec::pure(3, 2).unwrap()] {
            for src in ["re", "abs2 + 0.5*harm(2)"] {
                for k in 2..=3 {
                    let a = cumulant_exact_value(k, &spec, &g(src), false).unwrap();
                    let b = cumulant_exact_value(k, &spec, &g(src), true).unwrap();
                    assert_eq!(a, b, "{spec} {src} k={k}");
                }
            }
        }
    }

    #[test]
    fn crossterm_examples() {
        let f = g("abs2");
        let c = verify_crossterms(2, 1, 1, &f, &f).unwrap();
        assert!(c.exact_equal, "{c:?}");
        let r = g("re");
        let c = verify_crossterms(3, 0, 1, &r, &r).unwrap();
        assert!(c.exact_equal, "{c:?}");
        let c0 = verify_crossterms(3, 0, 0, &r, &f).unwrap();
        assert!(c0.exact_equal);
    }

    #[test]
    fn level_sums_reproduce_cumulants() {
        for (n, qq) in [(2u32, 2u32), (3, 3)] {
            let gp = g("re + 0.5*abs2");
            let pure = cumulant_exact_value(2, &KernelSpec::pure(n, qq).unwrap(), &gp, false).unwrap();
            assert_eq!(pure, pure_c2_via_laguerre(n, qq, &gp).unwrap());
            let full = cumulant_exact_value(2, &KernelSpec::full(n, qq).unwrap(), &gp, false).unwrap();
            assert_eq!(full, full_c2_via_diffops(n, qq, &gp).unwrap());
        }
    }
}
