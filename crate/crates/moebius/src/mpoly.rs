//! Multivariate polynomials in `L₁..L_n` with [`BPoly`] coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::bpoly::BPoly;
use crate::error::{Error, Result};
use crate::rational::{fmt_q, Q};

/// Exponent vector of a monomial.
pub type Mono = Vec<u32>;

#[derive(Clone, PartialEq, Eq)]
pub struct MPoly {
    nvars: usize,
    terms: BTreeMap<Mono, BPoly>,
}

impl MPoly {
    pub fn zero(nvars: usize) -> Self {
        MPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: BPoly) -> Self {
        let mut p = MPoly::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn rational(nvars: usize, c: Q) -> Self {
        MPoly::constant(nvars, BPoly::constant(c))
    }

    pub fn int(nvars: usize, c: i64) -> Self {
        MPoly::rational(nvars, Q::from_integer(c.into()))
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = MPoly::zero(nvars);
        p.add_term(e, BPoly::one());
        p
    }

    /// Univariate polynomial `Σ c_k L_i^k`.
    pub fn univariate(nvars: usize, i: usize, coeffs: &[Q]) -> Self {
        let mut p = MPoly::zero(nvars);
        for (k, c) in coeffs.iter().enumerate() {
            let mut e = vec![0; nvars];
            e[i] = k as u32;
            p.add_term(e, BPoly::constant(c.clone()));
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &BTreeMap<Mono, BPoly> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, e: Mono, c: BPoly) {
        assert_eq!(e.len(), self.nvars, "monomial arity");
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e.clone()).or_insert_with(BPoly::zero);
        *slot += &c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    /// Largest power of `b` among the coefficients.
    pub fn b_degree(&self) -> Option<usize> {
        self.terms.values().filter_map(|c| c.degree()).max()
    }

    /// Homogeneous component of total degree `d`.
    pub fn homogeneous_part(&self, d: u32) -> MPoly {
        MPoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.iter().sum::<u32>() == d)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, s: &Q) -> MPoly {
        let mut p = MPoly::zero(self.nvars);
        for (e, c) in &self.terms {
            p.add_term(e.clone(), c.scale(s));
        }
        p
    }

    pub fn scale_bpoly(&self, s: &BPoly) -> MPoly {
        let mut p = MPoly::zero(self.nvars);
        for (e, c) in &self.terms {
            p.add_term(e.clone(), c * s);
        }
        p
    }

    pub fn pow(&self, k: u32) -> MPoly {
        let mut r = MPoly::int(self.nvars, 1);
        for _ in 0..k {
            r = &r * self;
        }
        r
    }

    pub fn eval(&self, x: &[Q]) -> BPoly {
        assert_eq!(x.len(), self.nvars, "evaluation arity");
        let mut acc = BPoly::zero();
        for (e, c) in &self.terms {
            let mut m = Q::from_integer(1.into());
            for (xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    m *= xi;
                }
            }
            acc.add_scaled(c, &m);
        }
        acc
    }

    /// Renames variables: the exponent at position `perm[i]` moves to position `i`.
    pub fn permute(&self, perm: &[usize]) -> MPoly {
        let mut p = MPoly::zero(self.nvars);
        for (e, c) in &self.terms {
            let f: Mono = (0..self.nvars).map(|i| e[perm[i]]).collect();
            p.add_term(f, c.clone());
        }
        p
    }

    /// Substitutes variable `i` by the polynomial `s` (same arity).
    pub fn substitute(&self, i: usize, s: &MPoly) -> MPoly {
        let mut out = MPoly::zero(self.nvars);
        let mut powers = vec![MPoly::int(self.nvars, 1)];
        for (e, c) in &self.terms {
            while powers.len() <= e[i] as usize {
                let next = powers.last().unwrap() * s;
                powers.push(next);
            }
            let mut rest = e.clone();
            rest[i] = 0;
            let mut m = MPoly::zero(self.nvars);
            m.add_term(rest, c.clone());
            out = &out + &(&m * &powers[e[i] as usize]);
        }
        out
    }
}

impl Add<&MPoly> for &MPoly {
    type Output = MPoly;
    fn add(self, o: &MPoly) -> MPoly {
        let mut p = self.clone();
        for (e, c) in &o.terms {
            p.add_term(e.clone(), c.clone());
        }
        p
    }
}

impl Sub<&MPoly> for &MPoly {
    type Output = MPoly;
    fn sub(self, o: &MPoly) -> MPoly {
        self + &(-o.clone())
    }
}

impl Neg for MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        let mut p = MPoly::zero(self.nvars);
        for (e, c) in self.terms {
            p.add_term(e, -c);
        }
        p
    }
}

impl Mul<&MPoly> for &MPoly {
    type Output = MPoly;
    fn mul(self, o: &MPoly) -> MPoly {
        assert_eq!(self.nvars, o.nvars, "arity mismatch");
        let mut p = MPoly::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e: Mono = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                p.add_term(e, c1 * c2);
            }
        }
        p
    }
}

macro_rules! owned_ops {
    ($($tr:ident $f:ident),*) => {$(
        impl $tr for MPoly {
            type Output = MPoly;
            fn $f(self, o: MPoly) -> MPoly {
                (&self).$f(&o)
            }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl fmt::Display for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "*L{}", i + 1)?,
                    _ => write!(f, "*L{}^{}", i + 1, k)?,
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MPoly({self})")
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    exp: Mono,
    coeffs: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct MPolyJson {
    nvars: usize,
    terms: Vec<TermJson>,
}

impl Serialize for MPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MPolyJson {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| TermJson {
                    exp: e.clone(),
                    coeffs: c.coeffs().iter().map(fmt_q).collect(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MPolyJson::deserialize(d)?;
        let mut p = MPoly::zero(j.nvars);
        for t in j.terms {
            if t.exp.len() != j.nvars {
                return Err(serde::de::Error::custom("monomial arity"));
            }
            let c = BPoly::from_strings(&t.coeffs).map_err(serde::de::Error::custom)?;
            p.add_term(t.exp, c);
        }
        Ok(p)
    }
}

/// Solves `V c = y` for the coefficients of a univariate polynomial through
/// the given distinct nodes (Newton divided differences, exact).
pub fn interpolate_univariate(xs: &[Q], ys: &[BPoly]) -> Result<Vec<BPoly>> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::Precondition("node/value count mismatch".into()));
    }
    let n = xs.len();
    let mut dd: Vec<BPoly> = ys.to_vec();
    for j in 1..n {
        for i in (j..n).rev() {
            let den = &xs[i] - &xs[i - j];
            if den == Q::from_integer(0.into()) {
                return Err(Error::Precondition("repeated interpolation node".into()));
            }
            let diff = &dd[i] - &dd[i - 1];
            dd[i] = diff.scale(&(Q::from_integer(1.into()) / den));
        }
    }
    // Expand the Newton form into monomial coefficients (Horner from the top).
    let mut c = vec![BPoly::zero(); n];
    for k in (0..n).rev() {
        // c <- c * (x - xs[k]) + dd[k]
        let mut next = vec![BPoly::zero(); n];
        for i in 0..n {
            if c[i].is_zero() {
                continue;
            }
            if i + 1 < n {
                next[i + 1] += &c[i];
            }
            next[i].add_scaled(&c[i], &-xs[k].clone());
        }
        next[0] += &dd[k];
        c = next;
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn arithmetic_and_eval() {
        let x = MPoly::var(2, 0);
        let y = MPoly::var(2, 1);
        let p = (&x + &y).pow(2);
        assert_eq!(p.total_degree(), Some(2));
        assert_eq!(p.eval(&[qi(2), qi(3)]), BPoly::constant(qi(25)));
        let sw = p.permute(&[1, 0]);
        assert_eq!(sw, p);
        let s = p.substitute(0, &MPoly::int(2, 1));
        assert_eq!(s.eval(&[qi(9), qi(3)]), BPoly::constant(qi(16)));
        assert_eq!((&p - &p), MPoly::zero(2));
        let j = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<MPoly>(&j).unwrap(), p);
        assert_eq!(p.homogeneous_part(2), p);
    }

    #[test]
    fn univariate_interpolation() {
        let xs: Vec<Q> = (0..4).map(|i| qi(2 * i + 3)).collect();
        let ys: Vec<BPoly> = xs
            .iter()
            .map(|x| BPoly::from_coeffs(vec![x * x - qi(1), q(1, 2) * x]))
            .collect();
        let c = interpolate_univariate(&xs, &ys).unwrap();
        assert_eq!(c[0], BPoly::constant(qi(-1)));
        assert_eq!(c[1], BPoly::from_coeffs(vec![qi(0), q(1, 2)]));
        assert_eq!(c[2], BPoly::one());
        assert!(c[3].is_zero());
    }
}
