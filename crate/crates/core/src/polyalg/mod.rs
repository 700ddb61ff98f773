//! Exact algebra of polyanalytic polynomials against the Gaussian measure
//! `dμ_n = e^{-n|z|^2} dA`, `dA = dx dy / π`.
//!
//! A [`Poly`] is a sparse polynomial in up to [`MAX_VARS`] complex variables
//! and their conjugates. Every kernel and operator identity in the crate is
//! checked against this representation, either in double precision
//! ([`PolyPoly`]) or over exact complex rationals ([`ExactPoly`]).

mod coeff;

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

pub use coeff::{binomial, falling, pow_u, Coeff, Exact};

use crate::error::{Error, Result};

pub const MAX_VARS: usize = 4;
pub const DEFAULT_DEGREE_BUDGET: u16 = 64;

/// Univariate polynomial in `z, z̄` with double-precision coefficients.
pub type PolyPoly = Poly<Complex64>;
/// Polynomial with exact complex-rational coefficients.
pub type ExactPoly = Poly<Exact>;

/// Exponents `(a_1, b_1, ..., a_k, b_k)` of `∏ z_i^{a_i} z̄_i^{b_i}`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Monomial([u16; 2 * MAX_VARS]);

impl Monomial {
    #[inline]
    pub fn z(&self, slot: usize) -> u16 {
        self.0[2 * slot]
    }

    #[inline]
    pub fn zbar(&self, slot: usize) -> u16 {
        self.0[2 * slot + 1]
    }

    pub fn from_pairs(pairs: &[(u16, u16)]) -> Self {
        let mut e = [0u16; 2 * MAX_VARS];
        for (i, &(a, b)) in pairs.iter().enumerate() {
            e[2 * i] = a;
            e[2 * i + 1] = b;
        }
        Monomial(e)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Wirtinger {
    /// `∂ = (∂_x - i ∂_y) / 2`
    D,
    /// `∂̄ = (∂_x + i ∂_y) / 2`
    Dbar,
}

/// The operator `D_{α,β,n} = Σ_j C(m, j) (M)_j n^j ∂̄^{α-j} ∂^{β-j}`
/// with `m = min(α, β)`, `M = max(α, β)`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct DiffOpSpec {
    pub alpha: u32,
    pub beta: u32,
    pub n: u32,
}

impl DiffOpSpec {
    pub fn new(alpha: u32, beta: u32, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("D_{α,β,n} needs n >= 1".into()));
        }
        Ok(Self { alpha, beta, n })
    }

    /// Terms `(coefficient, ∂̄ power, ∂ power)`; exactly `min(α,β)+1` of them.
    pub fn expansion<C: Coeff>(&self) -> Vec<(C, u32, u32)> {
        let lo = self.alpha.min(self.beta);
        let hi = self.alpha.max(self.beta);
        (0..=lo)
            .map(|j| {
                let c = binomial::<C>(lo, j) * falling::<C>(hi, j) * pow_u::<C>(self.n, j);
                (c, self.alpha - j, self.beta - j)
            })
            .collect()
    }
}

/// Sparse polynomial `Σ c_m ∏ z_i^{a_i} z̄_i^{b_i}` in `nvars` complex variables.
#[derive(Clone, Debug)]
pub struct Poly<C> {
    nvars: usize,
    budget: u16,
    terms: BTreeMap<Monomial, C>,
}

// the degree budget is a resource limit, not part of the value
impl<C: PartialEq> PartialEq for Poly<C> {
    fn eq(&self, other: &Self) -> bool {
        self.nvars == other.nvars && self.terms == other.terms
    }
}

impl<C: Coeff> Poly<C> {
    pub fn zero(nvars: usize) -> Self {
        assert!((1..=MAX_VARS).contains(&nvars), "nvars out of range");
        Self {
            nvars,
            budget: DEFAULT_DEGREE_BUDGET,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        let mut p = Self::zero(nvars);
        p.insert(Monomial::default(), c);
        p
    }

    /// `c ∏ z_i^{a_i} z̄_i^{b_i}` from `(a_i, b_i)` pairs.
    pub fn term(nvars: usize, pairs: &[(u16, u16)], c: C) -> Result<Self> {
        Self::term_with_budget(nvars, pairs, c, DEFAULT_DEGREE_BUDGET)
    }

    pub fn term_with_budget(nvars: usize, pairs: &[(u16, u16)], c: C, budget: u16) -> Result<Self> {
        assert!(pairs.len() <= nvars);
        let mut p = Self::zero(nvars).with_budget(budget);
        for &(a, b) in pairs {
            p.check_degree(a as u32)?;
            p.check_degree(b as u32)?;
        }
        p.insert(Monomial::from_pairs(pairs), c);
        Ok(p)
    }

    /// The coordinate `z_slot`.
    pub fn z(nvars: usize, slot: usize) -> Self {
        let mut pairs = vec![(0, 0); slot + 1];
        pairs[slot] = (1, 0);
        Self::term(nvars, &pairs, C::one()).expect("degree 1 within budget")
    }

    /// The conjugate coordinate `z̄_slot`.
    pub fn zbar(nvars: usize, slot: usize) -> Self {
        let mut pairs = vec![(0, 0); slot + 1];
        pairs[slot] = (0, 1);
        Self::term(nvars, &pairs, C::one()).expect("degree 1 within budget")
    }

    /// Builds a univariate polynomial from `((a, b), c)` entries.
    pub fn from_terms(entries: impl IntoIterator<Item = ((u16, u16), C)>) -> Result<Self> {
        let mut p = Self::zero(1);
        for ((a, b), c) in entries {
            p = p.add(&Self::term(1, &[(a, b)], c)?);
        }
        Ok(p)
    }

    pub fn with_budget(mut self, budget: u16) -> Self {
        self.budget = budget;
        self
    }

    pub fn budget(&self) -> u16 {
        self.budget
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    /// Coefficient of the monomial given by `(a_i, b_i)` pairs.
    pub fn coeff(&self, pairs: &[(u16, u16)]) -> C {
        self.terms
            .get(&Monomial::from_pairs(pairs))
            .cloned()
            .unwrap_or_else(C::zero)
    }

    /// Largest exponent of any variable or conjugate.
    pub fn max_degree(&self) -> u16 {
        self.terms
            .keys()
            .flat_map(|m| m.0[..2 * self.nvars].iter().copied())
            .max()
            .unwrap_or(0)
    }

    fn check_degree(&self, d: u32) -> Result<()> {
        if d > self.budget as u32 {
            Err(Error::DegreeBudget {
                degree: d,
                budget: self.budget,
            })
        } else {
            Ok(())
        }
    }

    fn insert(&mut self, m: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&m) {
            Some(old) => {
                let s = old + c;
                if !s.is_zero() {
                    self.terms.insert(m, s);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    fn empty_like(&self) -> Self {
        Self {
            nvars: self.nvars,
            budget: self.budget,
            terms: BTreeMap::new(),
        }
    }

    fn assert_compatible(&self, other: &Self) {
        assert_eq!(self.nvars, other.nvars, "variable count mismatch");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_compatible(other);
        let mut out = self.clone();
        out.budget = self.budget.max(other.budget);
        for (m, c) in &other.terms {
            out.insert(*m, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let mut out = self.empty_like();
        for (m, c) in &self.terms {
            out.terms.insert(*m, -c.clone());
        }
        out
    }

    pub fn scale(&self, s: &C) -> Self {
        let mut out = self.empty_like();
        for (m, c) in &self.terms {
            out.insert(*m, c.clone() * s.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.assert_compatible(other);
        let mut out = self.empty_like();
        out.budget = self.budget.max(other.budget);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut e = [0u16; 2 * MAX_VARS];
                for i in 0..2 * self.nvars {
                    let d = ma.0[i] as u32 + mb.0[i] as u32;
                    out.check_degree(d)?;
                    e[i] = d as u16;
                }
                out.insert(Monomial(e), ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Result<Self> {
        let mut acc = Self::constant(self.nvars, C::one()).with_budget(self.budget);
        for _ in 0..k {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Complex conjugate: swaps `z ↔ z̄` exponents and conjugates coefficients.
    pub fn conj(&self) -> Self {
        let mut out = self.empty_like();
        for (m, c) in &self.terms {
            let mut e = m.0;
            for i in 0..self.nvars {
                e.swap(2 * i, 2 * i + 1);
            }
            out.terms.insert(Monomial(e), c.conj());
        }
        out
    }

    /// True when the polynomial equals its conjugate.
    pub fn is_real(&self) -> bool {
        *self == self.conj()
    }

    /// True when no `z̄_slot` appears.
    pub fn is_analytic_in(&self, slot: usize) -> bool {
        self.terms.keys().all(|m| m.zbar(slot) == 0)
    }

    /// Wirtinger derivative in variable `slot`.
    pub fn wirtinger(&self, slot: usize, which: Wirtinger) -> Self {
        let idx = match which {
            Wirtinger::D => 2 * slot,
            Wirtinger::Dbar => 2 * slot + 1,
        };
        let mut out = self.empty_like();
        for (m, c) in &self.terms {
            let p = m.0[idx];
            if p == 0 {
                continue;
            }
            let mut e = m.0;
            e[idx] = p - 1;
            out.insert(Monomial(e), c.clone() * C::from_u64(p as u64));
        }
        out
    }

    fn wirtinger_pow(&self, slot: usize, which: Wirtinger, k: u32) -> Self {
        let mut p = self.clone();
        for _ in 0..k {
            if p.is_zero() {
                break;
            }
            p = p.wirtinger(slot, which);
        }
        p
    }

    /// `Δ = ∂∂̄` (one quarter of the Euclidean Laplacian) in variable `slot`.
    pub fn laplacian(&self, slot: usize) -> Self {
        self.wirtinger(slot, Wirtinger::Dbar)
            .wirtinger(slot, Wirtinger::D)
    }

    fn mul_coordinate(&self, slot: usize, conjugate: bool) -> Result<Self> {
        let idx = if conjugate { 2 * slot + 1 } else { 2 * slot };
        let mut out = self.empty_like();
        for (m, c) in &self.terms {
            let mut e = m.0;
            let d = e[idx] as u32 + 1;
            self.check_degree(d)?;
            e[idx] = d as u16;
            out.terms.insert(Monomial(e), c.clone());
        }
        Ok(out)
    }

    /// `T_n^times` in variable `slot`, where `T_n p = n z̄ p - ∂p`.
    pub fn raise(&self, slot: usize, n: u32, times: u32) -> Result<Self> {
        let nc = C::from_u64(n as u64);
        let mut p = self.clone();
        for _ in 0..times {
            let a = p.mul_coordinate(slot, true)?.scale(&nc);
            p = a.sub(&p.wirtinger(slot, Wirtinger::D));
        }
        Ok(p)
    }

    /// The conjugated raising operator `p ↦ conj(T_n conj(p)) = n z p - ∂̄p`
    /// in variable `slot`; this is how `T̄_n` acts on the second argument of a kernel.
    pub fn raise_conj(&self, slot: usize, n: u32, times: u32) -> Result<Self> {
        let nc = C::from_u64(n as u64);
        let mut p = self.clone();
        for _ in 0..times {
            let a = p.mul_coordinate(slot, false)?.scale(&nc);
            p = a.sub(&p.wirtinger(slot, Wirtinger::Dbar));
        }
        Ok(p)
    }

    /// Applies `D_{α,β,n}` in variable `slot`.
    pub fn apply_diffop(&self, slot: usize, spec: &DiffOpSpec) -> Self {
        let mut out = self.empty_like();
        for (c, dbar, d) in spec.expansion::<C>() {
            let t = self
                .wirtinger_pow(slot, Wirtinger::D, d)
                .wirtinger_pow(slot, Wirtinger::Dbar, dbar)
                .scale(&c);
            out = out.add(&t);
        }
        out
    }

    /// Integrates variable `slot` against `dμ_n`; the result keeps the slot
    /// (now constant) so variable positions are unchanged.
    pub fn integrate_slot(&self, slot: usize, n: u32) -> Result<Self> {
        let mut out = self.empty_like();
        let mut moments: Vec<Option<C>> = Vec::new();
        for (m, c) in &self.terms {
            let a = m.z(slot);
            if a != m.zbar(slot) {
                continue;
            }
            let a = a as usize;
            if moments.len() <= a {
                moments.resize(a + 1, None);
            }
            if moments[a].is_none() {
                moments[a] = Some(C::gaussian_moment(a as u32, n)?);
            }
            let mut e = m.0;
            e[2 * slot] = 0;
            e[2 * slot + 1] = 0;
            out.insert(Monomial(e), c.clone() * moments[a].clone().unwrap());
        }
        Ok(out)
    }

    /// `∫ p dμ_n^{nvars}`.
    pub fn integrate(&self, n: u32) -> Result<C> {
        let mut p = self.clone();
        for s in 0..self.nvars {
            p = p.integrate_slot(s, n)?;
        }
        Ok(p.coeff(&[]))
    }

    /// Moves variable `i` to slot `map[i]` of a polynomial in `nvars` variables.
    pub fn remap(&self, nvars: usize, map: &[usize]) -> Self {
        assert_eq!(map.len(), self.nvars);
        let mut out = Self::zero(nvars).with_budget(self.budget);
        for (m, c) in &self.terms {
            let mut e = [0u16; 2 * MAX_VARS];
            for (i, &t) in map.iter().enumerate() {
                e[2 * t] += m.0[2 * i];
                e[2 * t + 1] += m.0[2 * i + 1];
            }
            out.insert(Monomial(e), c.clone());
        }
        out
    }

    /// Converts coefficients into another field.
    pub fn convert<D: Coeff>(&self, f: impl Fn(&C) -> Result<D>) -> Result<Poly<D>> {
        let mut out = Poly::<D>::zero(self.nvars).with_budget(self.budget);
        for (m, c) in &self.terms {
            out.insert(*m, f(c)?);
        }
        Ok(out)
    }

    pub fn to_float(&self) -> Poly<Complex64> {
        self.convert(|c| Ok(c.to_complex64()))
            .expect("float conversion is infallible")
    }

    /// Evaluates at the given points (one per variable).
    pub fn eval(&self, at: &[Complex64]) -> Complex64 {
        assert_eq!(at.len(), self.nvars);
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut t = c.to_complex64();
            for (i, z) in at.iter().enumerate() {
                t *= z.powu(m.z(i) as u32) * z.conj().powu(m.zbar(i) as u32);
            }
            acc += t;
        }
        acc
    }
}

impl Poly<Exact> {
    /// Exact evaluation at exact points.
    pub fn eval_exact(&self, at: &[Exact]) -> Exact {
        assert_eq!(at.len(), self.nvars);
        let mut acc = Exact::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, z) in at.iter().enumerate() {
                for _ in 0..m.z(i) {
                    t = t * z.clone();
                }
                let zb = Coeff::conj(z);
                for _ in 0..m.zbar(i) {
                    t = t * zb.clone();
                }
            }
            acc = acc + t;
        }
        acc
    }
}

impl<C: Coeff + fmt::Display> fmt::Display for Poly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for i in 0..self.nvars {
                let (a, b) = (m.z(i), m.zbar(i));
                if a > 0 {
                    write!(f, "·z{i}^{a}")?;
                }
                if b > 0 {
                    write!(f, "·z̄{i}^{b}")?;
                }
            }
        }
        Ok(())
    }
}

/// Univariate Wirtinger derivative.
pub fn wirtinger<C: Coeff>(p: &Poly<C>, which: Wirtinger) -> Poly<C> {
    p.wirtinger(0, which)
}

/// `T_n^times p` for a univariate polynomial.
pub fn apply_t<C: Coeff>(p: &Poly<C>, n: u32, times: u32) -> Result<Poly<C>> {
    p.raise(0, n, times)
}

/// `D_{α,β,n} p` for a univariate polynomial.
pub fn apply_diffop<C: Coeff>(spec: &DiffOpSpec, p: &Poly<C>) -> Poly<C> {
    p.apply_diffop(0, spec)
}

/// `⟨p, q⟩_{μ_n} = ∫ p q̄ dμ_n` for univariate polynomials.
pub fn gaussian_inner<C: Coeff>(p: &Poly<C>, q: &Poly<C>, n: u32) -> Result<C> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let qc = q.conj();
    let mut acc = C::zero();
    for (mp, cp) in p.terms() {
        for (mq, cq) in qc.terms() {
            let a = mp.z(0) as u32 + mq.z(0) as u32;
            let b = mp.zbar(0) as u32 + mq.zbar(0) as u32;
            if a == b {
                acc = acc + cp.clone() * cq.clone() * C::gaussian_moment(a, n)?;
            }
        }
    }
    Ok(acc)
}

/// Unweighted orthonormal monomial `e_j = n^{(j+1)/2} z^j / √(j!)`.
pub fn basis_monomial(j: u32, n: u32) -> Result<PolyPoly> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let ln_c = 0.5 * ((j as f64 + 1.0) * (n as f64).ln() - crate::special::ln_factorial(j));
    let c = ln_c.exp();
    if !c.is_finite() {
        return Err(Error::Capacity(format!("e_{j} coefficient overflows at n={n}")));
    }
    let j = u16::try_from(j).map_err(|_| Error::DegreeBudget {
        degree: j,
        budget: DEFAULT_DEGREE_BUDGET,
    })?;
    PolyPoly::term(1, &[(j, 0)], Complex64::new(c, 0.0))
}

/// Unnormalized exact basis monomial `z^j`; its squared norm is `j!/n^{j+1}`.
pub fn exact_monomial(j: u16) -> Result<ExactPoly> {
    ExactPoly::term(1, &[(j, 0)], Exact::one())
}

/// `L_r^0(-Δ/n) p` in variable `slot`; used to check the Laguerre form
/// `D_{r,r,n} = n^r r! L_r^0(-Δ/n)`.
pub fn laguerre_of_laplacian<C: Coeff>(p: &Poly<C>, slot: usize, r: u32, n: u32) -> Result<Poly<C>> {
    if r > 20 {
        return Err(Error::Capacity(format!("Laguerre degree {r} too large")));
    }
    // L_r^0(x) = Σ_j (-1)^j C(r, j) x^j / j!, and (-1)^j (-1/n)^j = n^{-j}
    let mut out = p.empty_like();
    let mut lap = p.clone();
    let mut jfact: i64 = 1;
    for j in 0..=r {
        if j > 0 {
            lap = lap.laplacian(slot);
            jfact *= j as i64;
        }
        let bin = binomial::<Complex64>(r, j).re as i64;
        let c = C::from_ratio(bin, jfact) * C::inv_pow(n, j)?;
        out = out.add(&lap.scale(&c));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn wirtinger_single_terms() {
        let p = PolyPoly::term(1, &[(2, 1)], c(1.0)).unwrap();
        let dbar = wirtinger(&p, Wirtinger::Dbar);
        assert_eq!(dbar, PolyPoly::term(1, &[(2, 0)], c(1.0)).unwrap());
        let d = wirtinger(&p, Wirtinger::D);
        assert_eq!(d, PolyPoly::term(1, &[(1, 1)], c(2.0)).unwrap());
        let z3 = PolyPoly::term(1, &[(3, 0)], c(1.0)).unwrap();
        assert!(wirtinger(&z3, Wirtinger::Dbar).is_zero());
        assert!(wirtinger(&PolyPoly::constant(1, c(4.0)), Wirtinger::D).is_zero());
    }

    #[test]
    fn raising_examples() {
        let one = ExactPoly::constant(1, Exact::one());
        for n in 1..5u32 {
            let t1 = apply_t(&one, n, 1).unwrap();
            assert_eq!(t1, ExactPoly::term(1, &[(0, 1)], Exact::from_u64(n as u64)).unwrap());
            let z = ExactPoly::z(1, 0);
            let tz = apply_t(&z, n, 1).unwrap();
            let expect = ExactPoly::term(1, &[(1, 1)], Exact::from_u64(n as u64))
                .unwrap()
                .sub(&ExactPoly::constant(1, Exact::one()));
            assert_eq!(tz, expect);
        }
    }

    #[test]
    fn lowering_on_z_cubed() {
        // ∂̄ T_n^2 z^3 = 2 n T_n z^3
        for n in 1..5u32 {
            let f = exact_monomial(3).unwrap();
            let lhs = apply_t(&f, n, 2).unwrap().wirtinger(0, Wirtinger::Dbar);
            let rhs = apply_t(&f, n, 1).unwrap().scale(&Exact::from_u64(2 * n as u64));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn inner_product_examples() {
        for n in 1..6u32 {
            let one = ExactPoly::constant(1, Exact::one());
            assert_eq!(gaussian_inner(&one, &one, n).unwrap(), Exact::from_ratio(1, n as i64));
            let z2 = exact_monomial(2).unwrap();
            assert_eq!(
                gaussian_inner(&z2, &z2, n).unwrap(),
                Exact::from_ratio(2, (n * n * n) as i64)
            );
            let z = ExactPoly::z(1, 0);
            let zb = ExactPoly::zbar(1, 0);
            assert!(Coeff::is_zero(&gaussian_inner(&z, &zb, n).unwrap()));
        }
    }

    #[test]
    fn inner_product_of_nonanalytic_pair() {
        // ⟨z z̄, 1⟩ = ∫|z|^2 dμ_n = 1/n^2
        let p = ExactPoly::term(1, &[(1, 1)], Exact::one()).unwrap();
        let one = ExactPoly::constant(1, Exact::one());
        assert_eq!(gaussian_inner(&p, &one, 3).unwrap(), Exact::from_ratio(1, 9));
    }

    #[test]
    fn basis_monomials_orthonormal() {
        for n in [1u32, 2, 5] {
            for j in 0..=8 {
                for k in 0..=8 {
                    let v = gaussian_inner(
                        &basis_monomial(j, n).unwrap(),
                        &basis_monomial(k, n).unwrap(),
                        n,
                    )
                    .unwrap();
                    let want = if j == k { 1.0 } else { 0.0 };
                    assert!((v - c(want)).norm() < 1e-13, "j={j} k={k} n={n} v={v}");
                }
            }
        }
        assert_eq!(basis_monomial(0, 1).unwrap(), PolyPoly::constant(1, c(1.0)));
        let e2 = basis_monomial(2, 1).unwrap();
        assert!((e2.coeff(&[(2, 0)]).re - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn diffop_expansion_counts_and_identity() {
        let s = DiffOpSpec::new(3, 5, 2).unwrap();
        let e = s.expansion::<Exact>();
        assert_eq!(e.len(), 4);
        // j = 2: C(3,2) (5)_2 2^2 = 3*20*4
        assert_eq!(e[2].0, Exact::from_u64(240));
        let p = ExactPoly::term(1, &[(3, 2)], Exact::from_ratio(3, 7)).unwrap();
        let id = DiffOpSpec::new(0, 0, 4).unwrap();
        assert_eq!(apply_diffop(&id, &p), p);
        let d11 = DiffOpSpec::new(1, 1, 4).unwrap();
        let want = p.laplacian(0).add(&p.scale(&Exact::from_u64(4)));
        assert_eq!(apply_diffop(&d11, &p), want);
    }

    #[test]
    fn diffop_matches_laguerre_form() {
        // D_{r,r,n} = n^r r! L_r^0(-Δ/n)
        let p = ExactPoly::term(1, &[(2, 2)], Exact::one()).unwrap();
        for n in 1..5u32 {
            for r in 0..4u32 {
                let lhs = apply_diffop(&DiffOpSpec::new(r, r, n).unwrap(), &p);
                let lag = laguerre_of_laplacian(&p, 0, r, n).unwrap();
                let scale = pow_u::<Exact>(n, r) * falling::<Exact>(r, r);
                assert_eq!(lhs, lag.scale(&scale), "n={n} r={r}");
            }
        }
    }

    #[test]
    fn degree_budget_is_an_error() {
        let p = PolyPoly::term(1, &[(40, 0)], c(1.0)).unwrap();
        assert!(matches!(p.mul(&p), Err(Error::DegreeBudget { .. })));
        assert!(p.clone().with_budget(100).mul(&p).is_ok());
        assert!(PolyPoly::term(1, &[(65, 0)], c(1.0)).is_err());
    }

    #[test]
    fn multivariate_integration() {
        // n = 2: ∫|z1|^2 dμ = 1/4, ∫|z2|^4 dμ = 2/8
        let p = ExactPoly::term(2, &[(1, 1), (2, 2)], Exact::one()).unwrap();
        assert_eq!(p.integrate(2).unwrap(), Exact::from_ratio(1, 16));
        let q = p.remap(3, &[2, 0]);
        assert_eq!(q.coeff(&[(2, 2), (0, 0), (1, 1)]), Exact::one());
    }
}
