//! Exact identity suites over small instances.
//!
//! Every check compares two exact polynomials (or rationals) and reports the
//! largest coefficient difference relative to the size of the reference.

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{gram_schmidt_kernel, kernel_poly, KernelSpec};
use crate::polyalg::{apply_t, falling, gaussian_inner, pow_u, Coeff, Exact, ExactPoly, Wirtinger};
use crate::statistics::verify_crossterms;
use crate::theory::TestFunction;

/// Relative tolerance every identity must meet; exact arithmetic gives zero.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub identity: &'static str,
    pub case: String,
    pub error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<IdentityCheck>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &IdentityCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn max_error(&self) -> f64 {
        self.checks.iter().map(|c| c.error).fold(0.0, f64::max)
    }
}

fn magnitude(c: &Exact) -> BigRational {
    c.re.abs().max(c.im.abs())
}

fn exact_error(diff: &Exact, reference: &Exact) -> f64 {
    let scale = magnitude(reference).max(BigRational::from_integer(1.into()));
    (magnitude(diff) / scale).to_f64().unwrap_or(f64::INFINITY)
}

fn poly_error(lhs: &ExactPoly, rhs: &ExactPoly) -> f64 {
    let diff = lhs.sub(rhs);
    let worst = diff.terms().map(|(_, c)| magnitude(c)).fold(BigRational::zero(), |a, b| a.max(b));
    let scale = rhs
        .terms()
        .map(|(_, c)| magnitude(c))
        .fold(BigRational::from_integer(1.into()), |a, b| a.max(b));
    (worst / scale).to_f64().unwrap_or(f64::INFINITY)
}

fn check(identity: &'static str, case: String, error: f64) -> IdentityCheck {
    IdentityCheck { identity, case, error, passed: error <= IDENTITY_TOLERANCE }
}

fn spec_list() -> Result<Vec<KernelSpec>> {
    let mut out = Vec::new();
    for n in 1..=4 {
        for q in 1..=3 {
            out.push(KernelSpec::full(n, q)?);
            out.push(KernelSpec::pure(n, q)?);
        }
    }
    Ok(out)
}

fn small_int(rng: &mut ChaCha8Rng) -> Exact {
    Exact::new(
        BigRational::from_integer(rng.random_range(-5i64..=5).into()),
        BigRational::from_integer(rng.random_range(-5i64..=5).into()),
    )
}

/// A random element of the spec's space: `Σ_r T_n^r f_r` with analytic
/// `f_r` of degree `< n`, over the levels the spec contains.
fn random_element(spec: &KernelSpec, rng: &mut ChaCha8Rng) -> Result<ExactPoly> {
    let mut p = ExactPoly::zero(1);
    for r in spec.levels() {
        let mut f = ExactPoly::zero(1);
        for j in 0..spec.n {
            f = f.add(&ExactPoly::term(1, &[(j as u16, 0)], small_int(rng))?);
        }
        p = p.add(&apply_t(&f, spec.n, r)?);
    }
    Ok(p)
}

/// `∫ K(z, u) p(u) dμ_n(u) = p(z)` for random `p` in the space.
pub fn reproducing_property(seed: u64) -> Result<Vec<IdentityCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for spec in spec_list()? {
        let k = kernel_poly::<Exact>(&spec)?;
        for trial in 0..3 {
            let p = random_element(&spec, &mut rng)?.with_budget(k.budget());
            let reproduced = k.mul(&p.remap(2, &[1]))?.integrate_slot(1, spec.n)?;
            let lhs = reproduced.remap(1, &[0, 0]);
            // remapping the integrated slot onto slot 0 is harmless: it carries no exponents
            out.push(check("reproducing", format!("{spec} trial {trial}"), poly_error(&lhs, &p)));
        }
    }
    Ok(out)
}

/// The functions `T_n^r z^j` spanning the spec's space are pairwise
/// orthogonal with squared norms `n^r r! j!/n^{j+1}`, so the basis normalized
/// by those closed-form norms is orthonormal.
pub fn orthonormality() -> Result<Vec<IdentityCheck>> {
    let mut out = Vec::new();
    for n in 1..=5u32 {
        for q in 1..=3u32 {
            let spec = KernelSpec::full(n, q)?;
            let mut funcs = Vec::new();
            for r in spec.levels() {
                for j in 0..n {
                    let f = apply_t(&ExactPoly::term(1, &[(j as u16, 0)], <Exact as Coeff>::one())?, n, r)?;
                    funcs.push((r, j, f));
                }
            }
            let mut worst: f64 = 0.0;
            for (a, (ra, ja, fa)) in funcs.iter().enumerate() {
                // squared norm used to normalize φ_{r,j}
                let norm_a = pow_u::<Exact>(n, *ra) * falling::<Exact>(*ra, *ra) * Exact::gaussian_moment(*ja, n)?;
                for (rb, jb, fb) in funcs.iter().skip(a) {
                    let ip = gaussian_inner(fa, fb, n)?;
                    let err = if (ra, ja) == (rb, jb) {
                        exact_error(&(ip - norm_a.clone()), &norm_a)
                    } else {
                        exact_error(&ip, &norm_a)
                    };
                    worst = worst.max(err);
                }
            }
            out.push(check("orthonormality", format!("{spec}"), worst));
        }
    }
    Ok(out)
}

/// `⟨T_n^r e_i, T_n^r e_j⟩ = n^r r! δ_ij` for the normalized monomials
/// `e_j = z^j (n^{j+1}/j!)^{1/2}`; checked as
/// `⟨T_n^r z^i, T_n^r z^j⟩ = n^r r! δ_ij j!/n^{j+1}`.
pub fn isometry() -> Result<Vec<IdentityCheck>> {
    let mut out = Vec::new();
    for n in 1..=4u32 {
        for r in 0..=3u32 {
            let mut worst: f64 = 0.0;
            for i in 0..=6u16 {
                let fi = apply_t(&ExactPoly::term(1, &[(i, 0)], <Exact as Coeff>::one())?, n, r)?;
                for j in 0..=6u16 {
                    let fj = apply_t(&ExactPoly::term(1, &[(j, 0)], <Exact as Coeff>::one())?, n, r)?;
                    let ip = gaussian_inner(&fi, &fj, n)?;
                    let want = if i == j {
                        pow_u::<Exact>(n, r) * falling::<Exact>(r, r) * Exact::gaussian_moment(j as u32, n)?
                    } else {
                        <Exact as Coeff>::zero()
                    };
                    worst = worst.max(exact_error(&(ip - want.clone()), &want));
                }
            }
            out.push(check("isometry", format!("n={n}, r={r}"), worst));
        }
    }
    Ok(out)
}

/// `∂̄^j T_n^r f = (r)_j n^j T_n^{r-j} f` for analytic `f`.
pub fn lowering(seed: u64) -> Result<Vec<IdentityCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for n in 1..=5u32 {
        let mut f = ExactPoly::zero(1);
        for d in 0..=8u16 {
            f = f.add(&ExactPoly::term(1, &[(d, 0)], small_int(&mut rng))?);
        }
        for r in 0..=4u32 {
            let tr = apply_t(&f, n, r)?;
            let mut worst: f64 = 0.0;
            let mut lowered = tr.clone();
            for j in 0..=r {
                if j > 0 {
                    lowered = lowered.wirtinger(0, Wirtinger::Dbar);
                }
                let rhs = apply_t(&f, n, r - j)?.scale(&(falling::<Exact>(r, j) * pow_u::<Exact>(n, j)));
                worst = worst.max(poly_error(&lowered, &rhs));
            }
            out.push(check("lowering", format!("n={n}, r={r}"), worst));
        }
    }
    Ok(out)
}

/// The full kernel equals the sum of the pure kernels and the kernel of a
/// Gram–Schmidt orthonormalization of `z̄^r z^j`.
pub fn kernel_decomposition() -> Result<Vec<IdentityCheck>> {
    let mut out = Vec::new();
    for n in 1..=4u32 {
        for q in 1..=3u32 {
            let full = kernel_poly::<Exact>(&KernelSpec::full(n, q)?)?;
            let mut sum = ExactPoly::zero(2).with_budget(full.budget());
            for r in 1..=q {
                sum = sum.add(&kernel_poly::<Exact>(&KernelSpec::pure(n, r)?)?);
            }
            let gs = gram_schmidt_kernel(n, q)?.with_budget(full.budget());
            let err = poly_error(&sum, &full).max(poly_error(&gs, &full));
            out.push(check("kernel-decomposition", format!("n={n}, q={q}"), err));
        }
    }
    Ok(out)
}

/// The 30-case lattice `n = 1..=6` times five `(i1, i2, f1, f2)` choices.
pub fn crossterm_lattice() -> Vec<(u32, u32, u32, &'static str, &'static str)> {
    let choices = [
        (0, 0, "re", "re"),
        (1, 1, "abs2", "abs2"),
        (0, 1, "re", "re"),
        (2, 1, "abs2 + re", "abs2 + re"),
        (3, 2, "im", "im*abs2"),
    ];
    (1..=6).flat_map(|n| choices.iter().map(move |&(a, b, f, g)| (n, a, b, f, g))).collect()
}

pub fn crossterms() -> Result<Vec<IdentityCheck>> {
    let mut out = Vec::new();
    for (n, i1, i2, f1, f2) in crossterm_lattice() {
        let p1 = TestFunction::parse(f1)?.to_poly::<Exact>()?;
        let p2 = TestFunction::parse(f2)?.to_poly::<Exact>()?;
        let c = verify_crossterms(n, i1, i2, &p1, &p2)?;
        let err = if c.exact_equal { 0.0 } else { c.diff / c.lhs.abs().max(1.0) };
        out.push(check("crossterms", format!("n={n}, i1={i1}, i2={i2}, F={f1}*{f2}"), err));
    }
    Ok(out)
}

/// Suite names accepted by [`run_suite`].
pub const SUITES: &[&str] = &["identities"];

pub fn run_suite(name: &str) -> Result<SuiteReport> {
    if name != "identities" {
        return Err(Error::InvalidArgument(format!("unknown suite `{name}` (known: {})", SUITES.join(", "))));
    }
    let mut checks = reproducing_property(17)?;
    checks.extend(orthonormality()?);
    checks.extend(isometry()?);
    checks.extend(lowering(29)?);
    checks.extend(kernel_decomposition()?);
    checks.extend(crossterms()?);
    let passed = checks.iter().all(|c| c.passed);
    Ok(SuiteReport { suite: name.to_string(), checks, passed })
}
