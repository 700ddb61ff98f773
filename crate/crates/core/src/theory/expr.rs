//! Test-function expressions.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! expr   := term ('+' term)*
//! term   := factor ('*' factor)*
//! factor := number | '(' expr ')' | ident ['(' number (',' number)* ')']
//! ident  := bump | re | im | abs2 | harm | rad
//! ```
//!
//! Numbers are signed decimal literals. `bump(r0,w)` is the smooth cutoff that
//! is 1 on `|z| ≤ r0` and 0 on `|z| ≥ r0+w`; `harm(k)` is `Re z^k`;
//! `rad(p0,p1,...)` is `Σ p_i |z|^{2i}`.

use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::polyalg::{Coeff, Poly};

#[derive(Clone, Debug, PartialEq)]
pub enum Leaf {
    Bump { r0: f64, w: f64 },
    Re,
    Im,
    Abs2,
    Harm(u32),
    Rad(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Leaf(Leaf),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
}

/// Value and first/second Wirtinger derivatives at a point; `lap` is `∂∂̄`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: Complex64,
    pub d: Complex64,
    pub dbar: Complex64,
    pub lap: Complex64,
}

impl Jet {
    fn constant(v: f64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self {
            value: Complex64::new(v, 0.0),
            d: zero,
            dbar: zero,
            lap: zero,
        }
    }

    fn add(self, o: Self) -> Self {
        Self {
            value: self.value + o.value,
            d: self.d + o.d,
            dbar: self.dbar + o.dbar,
            lap: self.lap + o.lap,
        }
    }

    fn mul(self, o: Self) -> Self {
        Self {
            value: self.value * o.value,
            d: self.value * o.d + o.value * self.d,
            dbar: self.value * o.dbar + o.value * self.dbar,
            lap: self.value * o.lap + o.value * self.lap + self.d * o.dbar + self.dbar * o.d,
        }
    }

    /// Jet of a radial function `h(|z|)` from `h, h', h''`.
    fn radial(z: Complex64, h: f64, h1: f64, h2: f64) -> Self {
        let rho = z.norm();
        if rho == 0.0 {
            // smooth radial functions have h'(0) = 0 and Δh = h''(0)/2 there
            return Self {
                value: Complex64::new(h, 0.0),
                d: Complex64::new(0.0, 0.0),
                dbar: Complex64::new(0.0, 0.0),
                lap: Complex64::new(0.5 * h2, 0.0),
            };
        }
        let s = h1 / (2.0 * rho);
        Self {
            value: Complex64::new(h, 0.0),
            d: z.conj() * s,
            dbar: z * s,
            lap: Complex64::new(0.25 * (h2 + h1 / rho), 0.0),
        }
    }
}

/// `e^{-1/x}` with its first two derivatives; zero for `x ≤ 0`.
fn flat(x: f64) -> (f64, f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let f = (-1.0 / x).exp();
    let x2 = x * x;
    (f, f / x2, f * (1.0 - 2.0 * x) / (x2 * x2))
}

/// Smooth step `s(t) = f(1-t) / (f(1-t) + f(t))`: 1 for `t ≤ 0`, 0 for `t ≥ 1`.
pub fn smooth_step(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (1.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let (a, a1, a2) = flat(1.0 - t);
    let (b, b1, b2) = flat(t);
    // d/dt f(1-t) = -f'(1-t), second derivative +f''(1-t)
    let (n, n1, n2) = (a, -a1, a2);
    let d = a + b;
    let d1 = -a1 + b1;
    let d2 = a2 + b2;
    let s = n / d;
    let s1 = (n1 * d - n * d1) / (d * d);
    let s2 = (n2 * d - n * d2) / (d * d) - 2.0 * s1 * d1 / d;
    (s, s1, s2)
}

impl Leaf {
    fn jet(&self, z: Complex64) -> Jet {
        let zero = Complex64::new(0.0, 0.0);
        match self {
            Leaf::Re => Jet {
                value: Complex64::new(z.re, 0.0),
                d: Complex64::new(0.5, 0.0),
                dbar: Complex64::new(0.5, 0.0),
                lap: zero,
            },
            Leaf::Im => Jet {
                value: Complex64::new(z.im, 0.0),
                d: Complex64::new(0.0, -0.5),
                dbar: Complex64::new(0.0, 0.5),
                lap: zero,
            },
            Leaf::Abs2 => Jet {
                value: Complex64::new(z.norm_sqr(), 0.0),
                d: z.conj(),
                dbar: z,
                lap: Complex64::new(1.0, 0.0),
            },
            Leaf::Harm(k) => {
                let k = *k;
                if k == 0 {
                    return Jet::constant(1.0);
                }
                let zk1 = z.powu(k - 1);
                let half_k = 0.5 * k as f64;
                Jet {
                    value: Complex64::new((zk1 * z).re, 0.0),
                    d: zk1 * half_k,
                    dbar: zk1.conj() * half_k,
                    lap: zero,
                }
            }
            Leaf::Rad(p) => {
                // h(s) with s = |z|^2: ∂ = h'(s) z̄, ∂̄ = h'(s) z, ∂∂̄ = s h''(s) + h'(s)
                let s = z.norm_sqr();
                let (mut h, mut h1, mut h2) = (0.0, 0.0, 0.0);
                for &c in p.iter().rev() {
                    h2 = h2 * s + 2.0 * h1;
                    h1 = h1 * s + h;
                    h = h * s + c;
                }
                Jet {
                    value: Complex64::new(h, 0.0),
                    d: z.conj() * h1,
                    dbar: z * h1,
                    lap: Complex64::new(s * h2 + h1, 0.0),
                }
            }
            Leaf::Bump { r0, w } => {
                let rho = z.norm();
                let (s, s1, s2) = smooth_step((rho - r0) / w);
                Jet::radial(z, s, s1 / w, s2 / (w * w))
            }
        }
    }

    fn modes(&self) -> BTreeSet<i64> {
        match self {
            Leaf::Re | Leaf::Im => [-1, 1].into(),
            Leaf::Harm(k) => [-(*k as i64), *k as i64].into(),
            Leaf::Abs2 | Leaf::Rad(_) | Leaf::Bump { .. } => [0].into(),
        }
    }
}

impl Expr {
    pub fn jet(&self, z: Complex64) -> Jet {
        match self {
            Expr::Num(v) => Jet::constant(*v),
            Expr::Leaf(l) => l.jet(z),
            Expr::Add(a, b) => a.jet(z).add(b.jet(z)),
            Expr::Mul(a, b) => a.jet(z).mul(b.jet(z)),
        }
    }

    pub fn eval(&self, z: Complex64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Leaf(l) => match l {
                Leaf::Re => z.re,
                Leaf::Im => z.im,
                Leaf::Abs2 => z.norm_sqr(),
                Leaf::Harm(k) => z.powu(*k).re,
                Leaf::Rad(p) => {
                    let s = z.norm_sqr();
                    p.iter().rev().fold(0.0, |acc, &c| acc * s + c)
                }
                Leaf::Bump { r0, w } => smooth_step((z.norm() - r0) / w).0,
            },
            Expr::Add(a, b) => a.eval(z) + b.eval(z),
            Expr::Mul(a, b) => a.eval(z) * b.eval(z),
        }
    }

    /// Angular Fourier modes that may be present.
    pub fn modes(&self) -> BTreeSet<i64> {
        match self {
            Expr::Num(_) => [0].into(),
            Expr::Leaf(l) => l.modes(),
            Expr::Add(a, b) => a.modes().union(&b.modes()).copied().collect(),
            Expr::Mul(a, b) => {
                let (ma, mb) = (a.modes(), b.modes());
                ma.iter().flat_map(|x| mb.iter().map(move |y| x + y)).collect()
            }
        }
    }

    /// Radius outside which the expression vanishes identically, if any.
    pub fn support_radius(&self) -> Option<f64> {
        match self {
            Expr::Num(v) if *v == 0.0 => Some(0.0),
            Expr::Num(_) => None,
            Expr::Leaf(Leaf::Bump { r0, w }) => Some(r0 + w),
            Expr::Leaf(_) => None,
            Expr::Add(a, b) => match (a.support_radius(), b.support_radius()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                _ => None,
            },
            Expr::Mul(a, b) => match (a.support_radius(), b.support_radius()) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (Some(x), None) | (None, Some(x)) => Some(x),
                (None, None) => None,
            },
        }
    }

    /// Radii where the expression stops being analytic in `|z|` (bump edges).
    pub fn breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            Expr::Leaf(Leaf::Bump { r0, w }) => {
                out.push(*r0);
                out.push(r0 + w);
            }
            Expr::Add(a, b) | Expr::Mul(a, b) => {
                a.breakpoints(out);
                b.breakpoints(out);
            }
            _ => {}
        }
    }

    pub fn is_polynomial(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::Leaf(Leaf::Bump { .. }) => false,
            Expr::Leaf(_) => true,
            Expr::Add(a, b) | Expr::Mul(a, b) => a.is_polynomial() && b.is_polynomial(),
        }
    }

    /// The expression as a polynomial in `z, z̄`; fails on `bump`.
    pub fn to_poly<C: Coeff>(&self) -> Result<Poly<C>> {
        let half = C::from_ratio(1, 2);
        Ok(match self {
            Expr::Num(v) => Poly::constant(1, C::from_f64(*v)?),
            Expr::Leaf(l) => match l {
                Leaf::Bump { .. } => {
                    return Err(Error::InvalidArgument("bump is not a polynomial".into()))
                }
                Leaf::Re => Poly::z(1, 0).add(&Poly::zbar(1, 0)).scale(&half),
                Leaf::Im => {
                    // (z - z̄) / 2i = -i/2 z + i/2 z̄
                    let i_half = C::from_complex64(Complex64::new(0.0, 0.5))?;
                    Poly::zbar(1, 0).sub(&Poly::z(1, 0)).scale(&i_half)
                }
                Leaf::Abs2 => Poly::term(1, &[(1, 1)], C::one())?,
                Leaf::Harm(k) => {
                    let k = u16::try_from(*k).map_err(|_| Error::InvalidArgument("harm degree".into()))?;
                    if k == 0 {
                        Poly::constant(1, C::one())
                    } else {
                        Poly::term(1, &[(k, 0)], half.clone())?.add(&Poly::term(1, &[(0, k)], half)?)
                    }
                }
                Leaf::Rad(p) => {
                    let mut out = Poly::zero(1);
                    for (i, &c) in p.iter().enumerate() {
                        let i = u16::try_from(i).map_err(|_| Error::InvalidArgument("rad degree".into()))?;
                        out = out.add(&Poly::term(1, &[(i, i)], C::from_f64(c)?)?);
                    }
                    out
                }
            },
            Expr::Add(a, b) => a.to_poly::<C>()?.add(&b.to_poly::<C>()?),
            Expr::Mul(a, b) => a.to_poly::<C>()?.mul(&b.to_poly::<C>()?)?,
        })
    }
}

fn fmt_num(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    // `{}` on f64 is the shortest representation that reads back exactly
    write!(f, "{v}")
}

impl fmt::Display for Leaf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Leaf::Bump { r0, w } => {
                f.write_str("bump(")?;
                fmt_num(f, *r0)?;
                f.write_str(",")?;
                fmt_num(f, *w)?;
                f.write_str(")")
            }
            Leaf::Re => f.write_str("re"),
            Leaf::Im => f.write_str("im"),
            Leaf::Abs2 => f.write_str("abs2"),
            Leaf::Harm(k) => write!(f, "harm({k})"),
            Leaf::Rad(p) => {
                f.write_str("rad(")?;
                for (i, c) in p.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    fmt_num(f, *c)?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => fmt_num(f, *v),
            Expr::Leaf(l) => write!(f, "{l}"),
            Expr::Add(a, b) => {
                write!(f, "{a} + ")?;
                // left-associative chains print flat; a right-nested sum needs parentheses
                if matches!(**b, Expr::Add(..)) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            Expr::Mul(a, b) => {
                if matches!(**a, Expr::Add(..)) {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                f.write_str("*")?;
                if matches!(**b, Expr::Add(..) | Expr::Mul(..)) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Syntax {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while self.peek() == Some('+') {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        while self.peek() == Some('*') {
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => Ok(Expr::Num(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => self.call(),
            Some(c) => Err(self.err(format!("unexpected `{c}`"))),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut i = self.pos;
        if i < bytes.len() && (bytes[i] == b'-' || bytes[i] == b'+') {
            i += 1;
        }
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'-' || bytes[j] == b'+') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = &self.src[start..i];
        let v: f64 = text.parse().map_err(|_| self.err(format!("invalid number `{text}`")))?;
        if !v.is_finite() {
            return Err(self.err(format!("non-finite number `{text}`")));
        }
        self.pos = i;
        Ok(v)
    }

    fn args(&mut self) -> Result<Vec<f64>> {
        self.expect('(')?;
        let mut out = vec![self.number()?];
        while self.peek() == Some(',') {
            self.pos += 1;
            out.push(self.number()?);
        }
        self.expect(')')?;
        Ok(out)
    }

    fn call(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut i = self.pos;
        while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
            i += 1;
        }
        let name = &self.src[start..i];
        self.pos = i;
        let leaf = match name {
            "re" => Leaf::Re,
            "im" => Leaf::Im,
            "abs2" => Leaf::Abs2,
            "bump" => {
                let a = self.args()?;
                if a.len() != 2 {
                    return Err(self.err("bump takes (r0, w)"));
                }
                if a[0] < 0.0 || a[1] <= 0.0 {
                    return Err(self.err("bump needs r0 >= 0 and w > 0"));
                }
                Leaf::Bump { r0: a[0], w: a[1] }
            }
            "harm" => {
                let a = self.args()?;
                if a.len() != 1 || a[0] < 0.0 || a[0].fract() != 0.0 || a[0] > 64.0 {
                    return Err(self.err("harm takes one integer 0..=64"));
                }
                Leaf::Harm(a[0] as u32)
            }
            "rad" => {
                let a = self.args()?;
                if a.len() > 32 {
                    return Err(self.err("rad takes at most 32 coefficients"));
                }
                Leaf::Rad(a)
            }
            _ => {
                return Err(Error::UnknownIdentifier {
                    name: name.to_string(),
                    pos: start,
                })
            }
        };
        Ok(Expr::Leaf(leaf))
    }
}

pub fn parse(src: &str) -> Result<Expr> {
    let mut p = Parser { src, pos: 0 };
    let e = p.expr()?;
    if let Some(c) = p.peek() {
        return Err(p.err(format!("trailing `{c}`")));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_prints() {
        for src in [
            "re",
            "bump(0.5,0.2)*harm(2)",
            "1.5*rad(0,1)",
            "-0.25*im + abs2*(re + 2)",
            "re + (im + abs2)",
            "re*(im*abs2)",
            "rad(1,-2,0.5) + 1e-3",
        ] {
            let e = parse(src).unwrap();
            let printed = e.to_string();
            assert_eq!(parse(&printed).unwrap(), e, "{src} -> {printed}");
        }
    }

    #[test]
    fn errors_carry_positions() {
        assert!(matches!(parse("re +"), Err(Error::Syntax { pos: 4, .. })));
        assert!(matches!(parse("foo"), Err(Error::UnknownIdentifier { pos: 0, .. })));
        assert!(matches!(parse("re )"), Err(Error::Syntax { pos: 3, .. })));
        assert!(parse("bump(0.5)").is_err());
        assert!(parse("harm(1.5)").is_err());
    }

    #[test]
    fn smooth_step_derivatives_match_differences() {
        for &t in &[0.1, 0.3, 0.5, 0.77, 0.95] {
            let h = 1e-5;
            let (s, s1, s2) = smooth_step(t);
            let (sp, s1p, _) = smooth_step(t + h);
            let (sm, s1m, _) = smooth_step(t - h);
            assert!((s1 - (sp - sm) / (2.0 * h)).abs() < 1e-6 * (1.0 + s1.abs()));
            assert!((s2 - (s1p - s1m) / (2.0 * h)).abs() < 1e-5 * (1.0 + s2.abs()));
            assert!((0.0..=1.0).contains(&s));
        }
        assert!((smooth_step(0.5).0 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn jets_match_finite_differences() {
        let exprs = ["re", "im", "abs2", "harm(3)", "rad(1,-2,0.5)", "bump(0.3,0.5)*harm(1) + 0.5*abs2*im"];
        let z = Complex64::new(0.31, 0.42);
        let h = 1e-4;
        for src in exprs {
            let e = parse(src).unwrap();
            let j = e.jet(z);
            let fx = (e.eval(z + h) - e.eval(z - h)) / (2.0 * h);
            let fy = (e.eval(z + Complex64::new(0.0, h)) - e.eval(z - Complex64::new(0.0, h))) / (2.0 * h);
            // ∂ = (∂x - i∂y)/2, ∂̄ = (∂x + i∂y)/2
            let d = Complex64::new(fx, -fy) * 0.5;
            let db = Complex64::new(fx, fy) * 0.5;
            assert!((j.d - d).norm() < 1e-6, "{src}: {} vs {d}", j.d);
            assert!((j.dbar - db).norm() < 1e-6, "{src}");
            let lap = (e.eval(z + h) + e.eval(z - h) + e.eval(z + Complex64::new(0.0, h))
                + e.eval(z - Complex64::new(0.0, h))
                - 4.0 * e.eval(z))
                / (h * h);
            assert!((j.lap.re - 0.25 * lap).abs() < 1e-5, "{src}: {} vs {}", j.lap, 0.25 * lap);
            assert!((j.value.re - e.eval(z)).abs() < 1e-15);
        }
    }

    #[test]
    fn modes_and_support() {
        let e = parse("bump(0.5,0.2)*harm(2)").unwrap();
        assert_eq!(e.modes(), [-2, 2].into());
        assert_eq!(e.support_radius(), Some(0.7));
        let f = parse("re*re + 1").unwrap();
        assert_eq!(f.modes(), [-2, 0, 2].into());
        assert_eq!(f.support_radius(), None);
    }

    #[test]
    fn polynomial_conversion() {
        let e = parse("1.5*rad(0,1) + harm(2)").unwrap();
        let p = e.to_poly::<Complex64>().unwrap();
        let z = Complex64::new(0.3, -0.8);
        assert!((p.eval(&[z]).re - e.eval(z)).abs() < 1e-14);
        assert!(p.is_real());
        assert!(parse("bump(0.5,0.2)").unwrap().to_poly::<Complex64>().is_err());
    }
}
