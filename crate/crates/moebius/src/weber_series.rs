//! Power-series expansion of the base Weber correlators and extraction of
//! lattice counts under `𝔟 = -b/√(1+b)`.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::bpoly::BPoly;
use crate::error::{precondition, Error, Result};
use crate::rational::{qi, Q};

/// Default truncation order, enough for `ΣL ≤ 16`.
pub const DEFAULT_ORDER: u32 = 17;

/// `num / (1+b)^den`, kept with the smallest possible `den`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frac {
    pub num: BPoly,
    pub den: u32,
}

impl Frac {
    pub fn zero() -> Self {
        Frac { num: BPoly::zero(), den: 0 }
    }

    pub fn poly(p: BPoly) -> Self {
        Frac { num: p, den: 0 }.reduced()
    }

    pub fn rational(x: Q) -> Self {
        Frac::poly(BPoly::constant(x))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn reduced(mut self) -> Self {
        if self.num.is_zero() {
            self.den = 0;
            return self;
        }
        while self.den > 0 {
            match self.num.div_one_plus_b_pow(1) {
                Ok(q) => {
                    self.num = q;
                    self.den -= 1;
                }
                Err(_) => break,
            }
        }
        self
    }

    fn lift(&self, den: u32) -> BPoly {
        &self.num * &BPoly::one_plus_b().pow(den - self.den)
    }

    /// Multiplies by `(1+b)^k` for any integer `k`.
    pub fn times_one_plus_b(&self, k: i64) -> Self {
        if k >= 0 {
            let mut up = k as u32;
            let mut f = self.clone();
            let cancel = up.min(f.den);
            f.den -= cancel;
            up -= cancel;
            f.num = &f.num * &BPoly::one_plus_b().pow(up);
            f.reduced()
        } else {
            Frac { num: self.num.clone(), den: self.den + (-k) as u32 }.reduced()
        }
    }

    /// The polynomial value, or an error if a denominator survives.
    pub fn to_bpoly(&self) -> Result<BPoly> {
        if self.den == 0 {
            Ok(self.num.clone())
        } else {
            Err(Error::CrossCheck(format!("residual (1+b)^-{} in extracted count", self.den)))
        }
    }
}

impl Add<&Frac> for &Frac {
    type Output = Frac;
    fn add(self, o: &Frac) -> Frac {
        let den = self.den.max(o.den);
        Frac { num: &self.lift(den) + &o.lift(den), den }.reduced()
    }
}

impl Mul<&Frac> for &Frac {
    type Output = Frac;
    fn mul(self, o: &Frac) -> Frac {
        Frac { num: &self.num * &o.num, den: self.den + o.den }.reduced()
    }
}

impl Neg for &Frac {
    type Output = Frac;
    fn neg(self) -> Frac {
        Frac { num: self.num.scale(&qi(-1)), den: self.den }
    }
}

/// `a + c·𝔟` with the reduction `𝔟² = b²/(1+b)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffRing {
    pub a: Frac,
    pub c: Frac,
}

impl CoeffRing {
    pub fn zero() -> Self {
        CoeffRing { a: Frac::zero(), c: Frac::zero() }
    }

    pub fn rational(x: Q) -> Self {
        CoeffRing { a: Frac::rational(x), c: Frac::zero() }
    }

    /// The parameter `𝔟` itself.
    pub fn frak_b() -> Self {
        CoeffRing { a: Frac::zero(), c: Frac::rational(Q::one()) }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.c.is_zero()
    }

    /// `Some(0)` or `Some(1)` for elements of pure `𝔟`-parity.
    pub fn parity(&self) -> Option<u8> {
        match (self.a.is_zero(), self.c.is_zero()) {
            (_, true) => Some(0),
            (true, false) => Some(1),
            _ => None,
        }
    }

    /// A rational constant, if the element is one.
    pub fn as_rational(&self) -> Option<Q> {
        (self.c.is_zero() && self.a.den == 0 && self.a.num.degree().unwrap_or(0) == 0).then(|| self.a.num.coeff(0))
    }

    pub fn scale(&self, x: &Q) -> Self {
        CoeffRing {
            a: Frac { num: self.a.num.scale(x), den: self.a.den }.reduced(),
            c: Frac { num: self.c.num.scale(x), den: self.c.den }.reduced(),
        }
    }
}

impl Add<&CoeffRing> for &CoeffRing {
    type Output = CoeffRing;
    fn add(self, o: &CoeffRing) -> CoeffRing {
        CoeffRing { a: &self.a + &o.a, c: &self.c + &o.c }
    }
}

impl Sub<&CoeffRing> for &CoeffRing {
    type Output = CoeffRing;
    fn sub(self, o: &CoeffRing) -> CoeffRing {
        self + &(-o)
    }
}

impl Neg for &CoeffRing {
    type Output = CoeffRing;
    fn neg(self) -> CoeffRing {
        CoeffRing { a: -&self.a, c: -&self.c }
    }
}

impl Mul<&CoeffRing> for &CoeffRing {
    type Output = CoeffRing;
    fn mul(self, o: &CoeffRing) -> CoeffRing {
        let frak_b_sq = Frac { num: BPoly::b().pow(2), den: 1 };
        let cc = &(&self.c * &o.c) * &frak_b_sq;
        CoeffRing {
            a: &(&self.a * &o.a) + &cc,
            c: &(&self.a * &o.c) + &(&self.c * &o.a),
        }
    }
}

/// Power series in `z₁..z_n`, truncated at degree `order` in each variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedSeries {
    nvars: usize,
    order: u32,
    terms: BTreeMap<Vec<u32>, CoeffRing>,
}

impl TruncatedSeries {
    pub fn zero(nvars: usize, order: u32) -> Self {
        TruncatedSeries { nvars, order, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, order: u32, c: CoeffRing) -> Self {
        let mut s = TruncatedSeries::zero(nvars, order);
        s.add_term(vec![0; nvars], c);
        s
    }

    /// `c · z^e` for a single monomial.
    pub fn monomial(nvars: usize, order: u32, e: Vec<u32>, c: Q) -> Self {
        let mut s = TruncatedSeries::zero(nvars, order);
        s.add_term(e, CoeffRing::rational(c));
        s
    }

    /// A polynomial with rational coefficients given as `(exponents, coefficient)`.
    pub fn polynomial(nvars: usize, order: u32, terms: &[(&[u32], i64)]) -> Self {
        let mut s = TruncatedSeries::zero(nvars, order);
        for (e, c) in terms {
            s.add_term(e.to_vec(), CoeffRing::rational(qi(*c)));
        }
        s
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, CoeffRing> {
        &self.terms
    }

    pub fn coeff(&self, e: &[u32]) -> CoeffRing {
        self.terms.get(e).cloned().unwrap_or_else(CoeffRing::zero)
    }

    fn add_term(&mut self, e: Vec<u32>, c: CoeffRing) {
        if c.is_zero() || e.iter().any(|&k| k > self.order) {
            return;
        }
        let slot = self.terms.entry(e.clone()).or_insert_with(CoeffRing::zero);
        *slot = &*slot + &c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn scale(&self, c: &CoeffRing) -> Self {
        let mut s = TruncatedSeries::zero(self.nvars, self.order);
        for (e, v) in &self.terms {
            s.add_term(e.clone(), v * c);
        }
        s
    }

    /// Formal partial derivative in `z_i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut s = TruncatedSeries::zero(self.nvars, self.order);
        for (e, v) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut f = e.clone();
            f[i] -= 1;
            s.add_term(f, v.scale(&qi(e[i] as i64)));
        }
        s
    }

    /// Multiplicative inverse of a series whose constant term is a nonzero rational.
    pub fn inverse(&self) -> Result<Self> {
        let zero = vec![0; self.nvars];
        let c0 = match self.coeff(&zero).as_rational() {
            Some(c) if !c.is_zero() => c,
            _ => return precondition("series inverse needs a nonzero rational constant term"),
        };
        let inv0 = CoeffRing::rational(Q::one() / &c0);
        // 1/f = (1/c₀) Σ h^k with h = 1 - f/c₀
        let one = TruncatedSeries::constant(self.nvars, self.order, CoeffRing::rational(Q::one()));
        let h = &one - &self.scale(&inv0);
        let mut acc = one.clone();
        let mut power = one;
        loop {
            power = &power * &h;
            if power.terms.is_empty() {
                break;
            }
            acc = &acc + &power;
        }
        Ok(acc.scale(&inv0))
    }
}

impl Add<&TruncatedSeries> for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, o: &TruncatedSeries) -> TruncatedSeries {
        let mut s = self.clone();
        for (e, v) in &o.terms {
            s.add_term(e.clone(), v.clone());
        }
        s
    }
}

impl Sub<&TruncatedSeries> for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, o: &TruncatedSeries) -> TruncatedSeries {
        let mut s = self.clone();
        for (e, v) in &o.terms {
            s.add_term(e.clone(), -v);
        }
        s
    }
}

impl Mul<&TruncatedSeries> for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, o: &TruncatedSeries) -> TruncatedSeries {
        assert_eq!(self.nvars, o.nvars, "series arity");
        let order = self.order.min(o.order);
        let mut s = TruncatedSeries::zero(self.nvars, order);
        for (e1, v1) in &self.terms {
            for (e2, v2) in &o.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                if e.iter().all(|&k| k <= order) {
                    s.add_term(e, v1 * v2);
                }
            }
        }
        s
    }
}

fn is_base(two_g: u32, n: u32) -> bool {
    matches!((two_g, n), (0, 3) | (1, 2) | (2, 1))
}

/// `1 - z_i z_j` (or `1 - z_i²` when `i == j`).
fn one_minus(nvars: usize, order: u32, i: usize, j: usize) -> TruncatedSeries {
    let mut e = vec![0; nvars];
    e[i] += 1;
    e[j] += 1;
    let one = TruncatedSeries::monomial(nvars, order, vec![0; nvars], Q::one());
    &one - &TruncatedSeries::monomial(nvars, order, e, Q::one())
}

fn mono(nvars: usize, order: u32, e: &[u32], c: Q) -> TruncatedSeries {
    TruncatedSeries::monomial(nvars, order, e.to_vec(), c)
}

/// Applies `d₁ ⋯ d_n` and keeps the coefficient series of `dz₁ ⋯ dz_n`.
fn all_derivatives(mut f: TruncatedSeries) -> TruncatedSeries {
    for i in 0..f.nvars() {
        f = f.derivative(i);
    }
    f
}

/// The base correlator at a general `μ`; only `μ = -1` is exercised.
pub fn weber_base_series_mu(two_g: u32, n: u32, order: u32, mu: &Q) -> Result<TruncatedSeries> {
    if !is_base(two_g, n) {
        return precondition(format!("no printed correlator for 2g={two_g}, n={n}"));
    }
    // Derivatives lower the degree by one per variable, so expand one step further.
    let t = order + 1;
    let nv = n as usize;
    let f = match (two_g, n) {
        (0, 3) => {
            let num = &mono(3, t, &[1, 1, 1], Q::one())
                * &TruncatedSeries::polynomial(3, t, &[(&[1, 0, 0], 1), (&[0, 1, 0], 1), (&[0, 0, 1], 1), (&[1, 1, 1], 1)]);
            let den = &(&one_minus(3, t, 0, 0) * &one_minus(3, t, 1, 1)) * &one_minus(3, t, 2, 2);
            (&num * &den.inverse()?).scale(&CoeffRing::rational(qi(-1)))
        }
        (1, 2) => {
            let a1 = one_minus(2, t, 0, 0);
            let a2 = one_minus(2, t, 1, 1);
            let c = one_minus(2, t, 0, 1);
            let s = TruncatedSeries::polynomial(2, t, &[(&[1, 0], 1), (&[0, 1], 1)]);
            let p = mono(2, t, &[1, 1], Q::one());
            let num1 = &(&(&s * &s) * &(&c * &c)) - &(&(&p * &a1) * &a2);
            let den1 = &(&(&(&a1 * &a1) * &a2) * &a2) * &c;
            let second_num = &p
                * &(&p.scale(&CoeffRing::rational(mu.clone())) + &mono(2, t, &[0, 0], mu - Q::one()));
            let den2 = (&a1 * &a2).scale(&CoeffRing::rational(qi(2)));
            let inner = &(&num1 * &den1.inverse()?) + &(&second_num * &den2.inverse()?);
            inner.scale(&(-&CoeffRing::frak_b()))
        }
        _ => {
            let mu2 = mu * mu;
            let even = TruncatedSeries::polynomial(1, t, &[(&[2], 6), (&[0], -2)]);
            let c4 = qi(3) * (&mu2 - qi(4) * mu + qi(3));
            let c2 = qi(-6) * (&mu2 - qi(2) * mu - qi(2));
            let c0 = qi(3) * &mu2 - qi(1);
            let odd = &(&mono(1, t, &[4], c4) + &mono(1, t, &[2], c2)) + &mono(1, t, &[0], c0);
            let frak_sq = &CoeffRing::frak_b() * &CoeffRing::frak_b();
            let num = &even + &odd.scale(&frak_sq);
            let d = one_minus(1, t, 0, 0);
            let den = (&(&d * &d) * &d).scale(&CoeffRing::rational(qi(24)));
            (&num * &den.inverse()?).scale(&CoeffRing::rational(qi(-1)))
        }
    };
    let mut out = all_derivatives(f);
    out.order = order;
    out.terms.retain(|e, _| e.iter().all(|&k| k <= order));
    debug_assert_eq!(out.nvars(), nv);
    Ok(out)
}

/// The base correlator at `μ = -1`, coefficients of `dz₁ ⋯ dz_n`.
pub fn weber_base_series(two_g: u32, n: u32, order: u32) -> Result<TruncatedSeries> {
    weber_base_series_mu(two_g, n, order, &qi(-1))
}

/// Checks that every coefficient has `𝔟`-parity `2g mod 2`.
pub fn parity_consistent(series: &TruncatedSeries, two_g: u32) -> bool {
    series.terms().values().all(|c| c.is_zero() || c.parity() == Some((two_g % 2) as u8))
}

/// Reads `N_{g,n}(L)` off the coefficient of `∏ z_i^{L_i-1}`.
pub fn extract_counts(series: &TruncatedSeries, two_g: u32, n: u32) -> Result<BTreeMap<Vec<u32>, BPoly>> {
    if series.nvars() != n as usize {
        return precondition("series arity does not match n");
    }
    let sign = if n % 2 == 0 { qi(1) } else { qi(-1) };
    let mut out = BTreeMap::new();
    let order = series.order();
    let mut idx = vec![0u32; n as usize];
    loop {
        let c = series.coeff(&idx);
        let l: Vec<u32> = idx.iter().map(|k| k + 1).collect();
        let prod: i64 = l.iter().map(|&x| x as i64).product();
        let denom = Q::one() / (qi(2) * &sign * qi(prod));
        let value = if two_g % 2 == 0 {
            if !c.c.is_zero() {
                return Err(Error::CrossCheck(format!("odd b-parity at {l:?} for even 2g")));
            }
            // N = a (1+b)^g / (2 (-1)^n ∏L)
            Frac { num: c.a.num.scale(&denom), den: c.a.den }.times_one_plus_b((two_g / 2) as i64)
        } else {
            if !c.a.is_zero() {
                return Err(Error::CrossCheck(format!("even b-parity at {l:?} for odd 2g")));
            }
            // 𝔟 = -b (1+b)^{-1/2}; the half-integer powers cancel against (1+b)^g
            let base = Frac { num: &c.c.num * &BPoly::b().scale(&-denom), den: c.c.den };
            base.times_one_plus_b(((two_g - 1) / 2) as i64)
        };
        out.insert(l, value.to_bpoly()?);
        // odometer over [0, order]^n
        let mut i = 0;
        loop {
            if i == idx.len() {
                return Ok(out);
            }
            if idx[i] < order {
                idx[i] += 1;
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// Compares extracted counts with the printed base cases for every `L` with
/// `ΣL ≤ max_sum`.
pub fn check_against_base(two_g: u32, n: u32, max_sum: u32) -> Result<bool> {
    // the largest single exponent is max_sum - n
    let order = max_sum.saturating_sub(n);
    let series = weber_base_series(two_g, n, order)?;
    if !parity_consistent(&series, two_g) {
        return Ok(false);
    }
    let counts = extract_counts(&series, two_g, n)?;
    for (l, v) in &counts {
        if l.iter().sum::<u32>() > max_sum {
            continue;
        }
        if *v != crate::recursion::base_case(two_g, n, l)? {
            return Ok(false);
        }
    }
    Ok(true)
}
