//! Univariate polynomials in the refinement parameter `b` with exact rational
//! coefficients.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{fmt_q, parse_q, qi, Q};

/// Dense coefficient list, index = power of `b`. Always normalized: no trailing
/// zero coefficients, so the zero polynomial is the empty list.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BPoly {
    c: Vec<Q>,
}

impl BPoly {
    pub fn zero() -> Self {
        BPoly { c: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    /// The polynomial `b`.
    pub fn b() -> Self {
        Self::from_coeffs(vec![Q::zero(), Q::one()])
    }

    /// `1 + b`.
    pub fn one_plus_b() -> Self {
        Self::from_coeffs(vec![Q::one(), Q::one()])
    }

    pub fn constant(x: Q) -> Self {
        Self::from_coeffs(vec![x])
    }

    pub fn from_coeffs(c: Vec<Q>) -> Self {
        let mut p = BPoly { c };
        p.normalize();
        p
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Self::from_coeffs(c.iter().map(|&x| qi(x)).collect())
    }

    fn normalize(&mut self) {
        while self.c.last().is_some_and(|x| x.is_zero()) {
            self.c.pop();
        }
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.c
    }

    pub fn coeff(&self, k: usize) -> Q {
        self.c.get(k).cloned().unwrap_or_else(Q::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    pub fn eval(&self, b: &Q) -> Q {
        let mut acc = Q::zero();
        for x in self.c.iter().rev() {
            acc = acc * b + x;
        }
        acc
    }

    pub fn scale(&self, s: &Q) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        BPoly {
            c: self.c.iter().map(|x| x * s).collect(),
        }
    }

    pub fn scale_int(&self, s: i64) -> Self {
        self.scale(&qi(s))
    }

    /// `self += s * other` without intermediate allocation of the product.
    pub fn add_scaled(&mut self, other: &BPoly, s: &Q) {
        if s.is_zero() || other.is_zero() {
            return;
        }
        if self.c.len() < other.c.len() {
            self.c.resize(other.c.len(), Q::zero());
        }
        for (a, x) in self.c.iter_mut().zip(other.c.iter()) {
            *a += x * s;
        }
        self.normalize();
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Exact division by `(1+b)^k`; errors if the division leaves a remainder.
    pub fn div_one_plus_b_pow(&self, k: u32) -> Result<Self> {
        let mut cur = self.clone();
        for _ in 0..k {
            // synthetic division by (b + 1), root b = -1
            let n = cur.c.len();
            if n == 0 {
                return Ok(cur);
            }
            let mut quo = vec![Q::zero(); n.saturating_sub(1)];
            let mut carry = Q::zero();
            for i in (0..n).rev() {
                let v = &cur.c[i] - &carry;
                if i == 0 {
                    if !v.is_zero() {
                        return Err(Error::CrossCheck(
                            "polynomial not divisible by (1+b)".into(),
                        ));
                    }
                } else {
                    quo[i - 1] = v.clone();
                    carry = v;
                }
            }
            cur = BPoly::from_coeffs(quo);
        }
        Ok(cur)
    }

    /// True when every coefficient is non-negative.
    pub fn nonnegative(&self) -> bool {
        self.c.iter().all(|x| !x.is_negative())
    }

    /// Coefficients as `"p/q"` strings (index = power of `b`).
    pub fn to_strings(&self) -> Vec<String> {
        self.c.iter().map(fmt_q).collect()
    }

    pub fn from_strings<S: AsRef<str>>(v: &[S]) -> Result<Self> {
        let c = v
            .iter()
            .map(|s| parse_q(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_coeffs(c))
    }
}

impl fmt::Display for BPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.c.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, x) in self.c.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            let neg = x.is_negative();
            let mag = fmt_q(&x.abs());
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            match k {
                0 => write!(f, "{mag}")?,
                1 if mag == "1" => write!(f, "b")?,
                1 => write!(f, "{mag}*b")?,
                _ if mag == "1" => write!(f, "b^{k}")?,
                _ => write!(f, "{mag}*b^{k}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for BPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BPoly({self})")
    }
}

impl Serialize for BPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<String> = Vec::deserialize(d)?;
        BPoly::from_strings(&v).map_err(serde::de::Error::custom)
    }
}

impl Add<&BPoly> for &BPoly {
    type Output = BPoly;
    fn add(self, o: &BPoly) -> BPoly {
        let mut r = self.clone();
        r += o;
        r
    }
}

impl Add for BPoly {
    type Output = BPoly;
    fn add(mut self, o: BPoly) -> BPoly {
        self += &o;
        self
    }
}

impl AddAssign<&BPoly> for BPoly {
    fn add_assign(&mut self, o: &BPoly) {
        if self.c.len() < o.c.len() {
            self.c.resize(o.c.len(), Q::zero());
        }
        for (a, x) in self.c.iter_mut().zip(o.c.iter()) {
            *a += x;
        }
        self.normalize();
    }
}

impl Sub<&BPoly> for &BPoly {
    type Output = BPoly;
    fn sub(self, o: &BPoly) -> BPoly {
        let mut r = self.clone();
        r.add_scaled(o, &-Q::one());
        r
    }
}

impl Sub for BPoly {
    type Output = BPoly;
    fn sub(self, o: BPoly) -> BPoly {
        &self - &o
    }
}

impl Neg for BPoly {
    type Output = BPoly;
    fn neg(self) -> BPoly {
        BPoly {
            c: self.c.into_iter().map(|x| -x).collect(),
        }
    }
}

impl Mul<&BPoly> for &BPoly {
    type Output = BPoly;
    fn mul(self, o: &BPoly) -> BPoly {
        if self.is_zero() || o.is_zero() {
            return BPoly::zero();
        }
        let mut c = vec![Q::zero(); self.c.len() + o.c.len() - 1];
        for (i, x) in self.c.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in o.c.iter().enumerate() {
                c[i + j] += x * y;
            }
        }
        BPoly::from_coeffs(c)
    }
}

impl Mul for BPoly {
    type Output = BPoly;
    fn mul(self, o: BPoly) -> BPoly {
        &self * &o
    }
}

impl std::iter::Sum for BPoly {
    fn sum<I: Iterator<Item = BPoly>>(iter: I) -> BPoly {
        let mut acc = BPoly::zero();
        for x in iter {
            acc += &x;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::*;

    #[test]
    fn normalization_and_display() {
        let p = BPoly::from_ints(&[1, 0, 0]);
        assert_eq!(p.degree(), Some(0));
        assert_eq!(BPoly::from_ints(&[0, 0]).degree(), None);
        let r = BPoly::from_coeffs(vec![q(1, 8), q(1, 8), q(3, 8)]);
        assert_eq!(r.to_string(), "1/8 + 1/8*b + 3/8*b^2");
        assert_eq!(r.to_strings(), vec!["1/8", "1/8", "3/8"]);
        assert_eq!((-BPoly::b()).to_string(), "-b");
    }

    #[test]
    fn division_by_one_plus_b() {
        let p = BPoly::one_plus_b().pow(3) * BPoly::from_ints(&[2, 0, 5]);
        assert_eq!(p.div_one_plus_b_pow(3).unwrap(), BPoly::from_ints(&[2, 0, 5]));
        assert!(BPoly::b().div_one_plus_b_pow(1).is_err());
    }

    fn arb() -> impl Strategy<Value = BPoly> {
        proptest::collection::vec((-20i64..20, 1i64..6), 0..5)
            .prop_map(|v| BPoly::from_coeffs(v.into_iter().map(|(n, d)| q(n, d)).collect()))
    }

    proptest! {
        #[test]
        fn ring_laws(a in arb(), b in arb(), c in arb()) {
            prop_assert_eq!(&(&a + &b) * &c, &(&a * &c) + &(&b * &c));
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a - &b) + &b, a.clone());
            let x = q(3, 7);
            prop_assert_eq!((&a * &b).eval(&x), a.eval(&x) * b.eval(&x));
        }

        #[test]
        fn serde_round_trip(a in arb()) {
            let s = serde_json::to_string(&a).unwrap();
            let back: BPoly = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(back, a);
        }
    }
}
