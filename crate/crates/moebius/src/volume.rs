//! Refined volumes `V_{g,n}(L; b)`: the top-degree part of the lattice count,
//! their integral recursion evaluated by exact piecewise integration, and the
//! Laplace transforms at the base topologies.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::bpoly::BPoly;
use crate::cache::CountTable;
use crate::error::{precondition, Error, Result};
use crate::mpoly::interpolate_univariate;
use crate::quasipoly::{degree, evaluate, leading_part, reconstruct_with, Piece, QuasiConfig, QuasiPoly};
use crate::rational::{factorial, q, qi, Q};
use crate::recursion::{base_case, is_stable, kernel_d, kernel_e, kernel_r, level};

/// A univariate piecewise polynomial on `[breaks[0], breaks.last()]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewisePoly1 {
    pub breaks: Vec<Q>,
    /// Monomial coefficients (in the global variable) on each segment.
    pub segments: Vec<Vec<BPoly>>,
}

impl PiecewisePoly1 {
    /// Recovers a piecewise polynomial from `f`, which must be a polynomial of
    /// degree ≤ `deg` between consecutive breakpoints.
    pub fn sample(f: impl Fn(&Q) -> Result<BPoly>, breaks: &[Q], deg: usize) -> Result<Self> {
        let mut breaks = breaks.to_vec();
        breaks.sort();
        breaks.dedup();
        if breaks.len() < 2 {
            return precondition("need an interval with two endpoints");
        }
        let mut segments = Vec::with_capacity(breaks.len() - 1);
        for w in breaks.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let xs: Vec<Q> = (0..=deg).map(|k| a + (b - a) * q(k as i64 + 1, deg as i64 + 2)).collect();
            let ys = xs.iter().map(&f).collect::<Result<Vec<_>>>()?;
            segments.push(interpolate_univariate(&xs, &ys)?);
        }
        Ok(PiecewisePoly1 { breaks, segments })
    }

    fn eval_segment(c: &[BPoly], x: &Q) -> BPoly {
        let mut acc = BPoly::zero();
        for ck in c.iter().rev() {
            acc = acc.scale(x);
            acc += ck;
        }
        acc
    }

    pub fn eval(&self, x: &Q) -> Option<BPoly> {
        let i = (0..self.segments.len()).find(|&i| *x >= self.breaks[i] && *x <= self.breaks[i + 1])?;
        Some(Self::eval_segment(&self.segments[i], x))
    }

    pub fn is_continuous(&self) -> bool {
        (1..self.segments.len()).all(|i| {
            let x = &self.breaks[i];
            Self::eval_segment(&self.segments[i - 1], x) == Self::eval_segment(&self.segments[i], x)
        })
    }

    /// Exact integral over the whole range.
    pub fn integral(&self) -> BPoly {
        let mut acc = BPoly::zero();
        for (i, c) in self.segments.iter().enumerate() {
            let (a, b) = (&self.breaks[i], &self.breaks[i + 1]);
            let (mut pa, mut pb) = (a.clone(), b.clone());
            for (k, ck) in c.iter().enumerate() {
                // ∫ x^k = x^{k+1}/(k+1)
                let w = (&pb - &pa) / qi(k as i64 + 1);
                acc.add_scaled(ck, &w);
                pa *= a;
                pb *= b;
            }
        }
        acc
    }
}

/// Closed-form volumes of the three base topologies.
pub fn volume_base(two_g: u32, n: u32, l: &[Q]) -> Result<BPoly> {
    if l.len() != n as usize {
        return precondition(format!("expected {n} perimeters, got {}", l.len()));
    }
    match (two_g, n) {
        (0, 3) => Ok(BPoly::constant(q(1, 2))),
        (1, 2) => {
            let m = if l[0] > l[1] { &l[0] } else { &l[1] };
            Ok(BPoly::b().scale(&(m / qi(4))))
        }
        (2, 1) => {
            let s = &l[0] * &l[0] / qi(96);
            Ok(BPoly::from_ints(&[1, 1, 5]).scale(&s))
        }
        _ => precondition(format!("(2g, n) = ({two_g}, {n}) is not a base topology")),
    }
}

/// `V_{g,n} = 2^{2g-2+n}/2 · (top-degree part of N_{g,n})`.
pub fn volume_from_counts(qp: &QuasiPoly) -> Result<QuasiPoly> {
    let lead = leading_part(qp)?;
    let factor = qi(1i64 << level(qp.two_g, qp.n)) / qi(2);
    Ok(QuasiPoly {
        pieces: lead
            .pieces
            .into_iter()
            .map(|p| Piece {
                poly: p.poly.scale(&factor),
                chamber: p.chamber,
            })
            .collect(),
        ..lead
    })
}

/// Volumes extracted from reconstructed counts, computed once per topology.
pub struct VolumeBook<'a> {
    table: &'a CountTable,
    cfg: QuasiConfig,
    book: Mutex<HashMap<(u32, u32), Arc<QuasiPoly>>>,
}

impl<'a> VolumeBook<'a> {
    pub fn new(table: &'a CountTable, cfg: QuasiConfig) -> Self {
        VolumeBook {
            table,
            cfg,
            book: Mutex::new(HashMap::new()),
        }
    }

    pub fn get(&self, two_g: u32, n: u32) -> Result<Arc<QuasiPoly>> {
        if let Some(v) = self.book.lock().unwrap().get(&(two_g, n)) {
            return Ok(v.clone());
        }
        let qp = reconstruct_with(two_g, n, self.table, &self.cfg)?;
        let v = Arc::new(volume_from_counts(&qp)?);
        self.book.lock().unwrap().insert((two_g, n), v.clone());
        Ok(v)
    }

    /// `V_{g,n}(L)` at a rational point, from the base formulas or the reconstructed counts.
    pub fn value(&self, two_g: u32, l: &[Q]) -> Result<BPoly> {
        let n = l.len() as u32;
        if level(two_g, n) == 1 {
            return volume_base(two_g, n, l);
        }
        let v = self.get(two_g, n)?;
        evaluate(&v, l, &vec![0; l.len()])
    }
}

/// All values `Σ ε_j y_j` with `ε_j ∈ {-1, 0, 1}`.
fn signed_sums(y: &[Q]) -> Vec<Q> {
    let mut out = vec![Q::zero()];
    for v in y {
        let mut next = Vec::with_capacity(out.len() * 3);
        for s in &out {
            next.push(s.clone());
            next.push(s + v);
            next.push(s - v);
        }
        out = next;
    }
    out.sort();
    out.dedup();
    out
}

fn within(xs: impl IntoIterator<Item = Q>, lo: &Q, hi: &Q) -> Vec<Q> {
    let mut v: Vec<Q> = xs.into_iter().filter(|x| x > lo && x < hi).collect();
    v.push(lo.clone());
    v.push(hi.clone());
    v.sort();
    v.dedup();
    v
}

fn without(l: &[Q], skip: &[usize]) -> Vec<Q> {
    l.iter().enumerate().filter(|(i, _)| !skip.contains(i)).map(|(_, x)| x.clone()).collect()
}

fn prepend(first: &[Q], rest: &[Q]) -> Vec<Q> {
    let mut v = first.to_vec();
    v.extend_from_slice(rest);
    v
}

/// Right-hand side of the volume recursion at rational `L`, with `L₁ = l[0]`.
pub fn volume_rhs(book: &VolumeBook<'_>, two_g: u32, n: u32, l: &[Q]) -> Result<BPoly> {
    if l.len() != n as usize {
        return precondition(format!("expected {n} perimeters, got {}", l.len()));
    }
    if level(two_g, n) < 2 {
        return precondition("the volume recursion starts at 2g-2+n = 2");
    }
    if l.iter().any(|x| !x.is_positive()) {
        return precondition("perimeters must be positive");
    }
    let d = degree(two_g, n) as usize;
    let l1 = &l[0];
    let rest = &l[1..];
    let zero = Q::zero();
    let mut total = BPoly::zero();

    // reduction terms
    for m in 1..n as usize {
        let lm = &l[m];
        let others = without(l, &[0, m]);
        let hi = l1 + lm;
        let mut pts = signed_sums(&others);
        pts.push((l1 - lm).abs());
        let breaks = within(pts.into_iter().map(|x| x.abs()), &zero, &hi);
        let f = |p: &Q| -> Result<BPoly> {
            let k = kernel_r(l1, lm, p);
            let v = book.value(two_g, &prepend(std::slice::from_ref(p), &others))?;
            Ok(v.scale(&(p * k)))
        };
        total += &PiecewisePoly1::sample(f, &breaks, d)?.integral();
    }

    // cross-cap term
    if two_g >= 1 {
        let pts = signed_sums(rest);
        let breaks = within(pts.into_iter().map(|x| x.abs()), &zero, l1);
        let f = |p: &Q| -> Result<BPoly> {
            let k = kernel_e(l1, p);
            let v = book.value(two_g - 1, &prepend(std::slice::from_ref(p), rest))?;
            Ok(v.scale(&(p * l1 * k)))
        };
        let e = PiecewisePoly1::sample(f, &breaks, d)?.integral();
        total += &(&e * &BPoly::b());
    }

    // pair-of-pants term
    let k = rest.len();
    let mut splits = Vec::new();
    for two_g1 in 0..=two_g {
        for mask in 0u32..(1 << k) {
            let n1 = 1 + mask.count_ones();
            let n2 = 1 + k as u32 - mask.count_ones();
            if is_stable(two_g1, n1) && is_stable(two_g - two_g1, n2) {
                splits.push((two_g1, mask));
            }
        }
    }
    if two_g >= 2 || !splits.is_empty() {
        let h = |p: &Q, qq: &Q| -> Result<BPoly> {
            let mut acc = BPoly::zero();
            if two_g >= 2 {
                let v = book.value(two_g - 2, &prepend(&[p.clone(), qq.clone()], rest))?;
                acc += &(&v * &BPoly::one_plus_b()).scale(&q(1, 2));
            }
            for &(two_g1, mask) in &splits {
                let i1: Vec<Q> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| rest[i].clone()).collect();
                let i2: Vec<Q> = (0..k).filter(|i| mask >> i & 1 == 0).map(|i| rest[i].clone()).collect();
                let a = book.value(two_g1, &prepend(std::slice::from_ref(p), &i1))?;
                let c = book.value(two_g - two_g1, &prepend(std::slice::from_ref(qq), &i2))?;
                acc += &(&a * &c);
            }
            Ok(acc)
        };
        let cs = signed_sums(rest);
        // lines a·p + b·q + c = 0 of the integrand, plus p + q = L₁
        let mut lines: Vec<(i64, i64, Q)> = Vec::new();
        for (a, b) in [(1, 0), (0, 1), (1, 1), (1, -1)] {
            for c in &cs {
                lines.push((a, b, c.clone()));
            }
        }
        lines.push((1, 1, -l1.clone()));
        let mut pbreaks = Vec::new();
        for (i, (a1, b1, c1)) in lines.iter().enumerate() {
            for (a2, b2, c2) in &lines[i + 1..] {
                let det = a1 * b2 - a2 * b1;
                if det != 0 {
                    pbreaks.push((c2 * qi(*b1) - c1 * qi(*b2)) / qi(det));
                }
            }
        }
        let pbreaks = within(pbreaks, &zero, l1);
        let inner_deg = d.saturating_sub(4) + 2;
        let g_of_p = |p: &Q| -> Result<BPoly> {
            let top = l1 - p;
            let mut qs = Vec::new();
            for a in [-1i64, 0, 1] {
                for c in &cs {
                    qs.push(qi(a) * p + c);
                }
            }
            let qbreaks = within(qs, &zero, &top);
            let f = |qq: &Q| -> Result<BPoly> {
                let kd = kernel_d(l1, p, qq);
                Ok(h(p, qq)?.scale(&(qq * kd)))
            };
            Ok(PiecewisePoly1::sample(f, &qbreaks, inner_deg)?.integral().scale(p))
        };
        total += &PiecewisePoly1::sample(g_of_p, &pbreaks, d)?.integral();
    }
    Ok(total)
}

/// Checks the volume recursion at the given points against the extracted volume.
pub fn check_volume_recursion(book: &VolumeBook<'_>, two_g: u32, n: u32, points: &[Vec<Q>]) -> Result<()> {
    let v = book.get(two_g, n)?;
    let res: Vec<Result<()>> = points
        .par_iter()
        .map(|l| {
            let lhs = evaluate(&v, l, &vec![0; l.len()])?;
            let rhs = volume_rhs(book, two_g, n, l)?;
            if lhs == rhs {
                Ok(())
            } else {
                Err(Error::CrossCheck(format!(
                    "volume recursion fails at 2g={two_g} n={n} L={:?}: {lhs} vs {rhs}",
                    l.iter().map(crate::rational::fmt_q).collect::<Vec<_>>()
                )))
            }
        })
        .collect();
    res.into_iter().collect()
}

// ----- Laplace transforms ----------------------------------------------------

/// `Q[ε₁, ε₂]/(ε₁², ε₂²)`, for exact mixed partial derivatives.
#[derive(Clone, Debug, PartialEq)]
struct Dual2 {
    c: [Q; 4],
}

impl Dual2 {
    fn var(x: Q, slot: usize) -> Self {
        let mut c = [x, Q::zero(), Q::zero(), Q::zero()];
        c[slot] = Q::one();
        Dual2 { c }
    }
    fn cst(x: Q) -> Self {
        Dual2 {
            c: [x, Q::zero(), Q::zero(), Q::zero()],
        }
    }
    fn mul(&self, o: &Dual2) -> Dual2 {
        let (a, b) = (&self.c, &o.c);
        Dual2 {
            c: [
                &a[0] * &b[0],
                &a[0] * &b[1] + &a[1] * &b[0],
                &a[0] * &b[2] + &a[2] * &b[0],
                &a[0] * &b[3] + &a[1] * &b[2] + &a[2] * &b[1] + &a[3] * &b[0],
            ],
        }
    }
    fn add(&self, o: &Dual2) -> Dual2 {
        Dual2 {
            c: [&self.c[0] + &o.c[0], &self.c[1] + &o.c[1], &self.c[2] + &o.c[2], &self.c[3] + &o.c[3]],
        }
    }
    fn inv(&self) -> Dual2 {
        let a0 = &self.c[0];
        let i0 = Q::one() / a0;
        let i1 = -&self.c[1] * &i0 * &i0;
        let i2 = -&self.c[2] * &i0 * &i0;
        let i3 = (qi(2) * &self.c[1] * &self.c[2] / a0 - &self.c[3]) * &i0 * &i0;
        Dual2 { c: [i0, i1, i2, i3] }
    }
}

/// `∫₀^∞ L^k e^{-zL} dL = k!/z^{k+1}`.
fn laplace_monomial(k: u32, z: &Q) -> Q {
    let mut zp = Q::one();
    for _ in 0..=k {
        zp *= z;
    }
    factorial(k) / zp
}

/// Laplace transform of `max(L₁, L₂)·L₁L₂`.
fn laplace_max(z1: &Q, z2: &Q) -> Q {
    // ∫∫_{L₁>L₂} L₁²L₂ e^{-z₁L₁-z₂L₂} = 2/(z₁³z₂²) - 6/(z₂ s⁴) - 2/(z₂² s³), s = z₁ + z₂
    let half = |a: &Q, c: &Q| -> Q {
        let s = a + c;
        qi(2) / (a * a * a * c * c) - qi(6) / (c * &s * &s * &s * &s) - qi(2) / (c * c * &s * &s * &s)
    };
    half(z1, z2) + half(z2, z1)
}

/// Compares the Laplace transform of the base volumes with the Airy
/// correlators at the sample points, after clearing the common power of `√(1+b)`.
pub fn airy_laplace_check(two_g: u32, n: u32, samples: &[Vec<Q>]) -> Result<bool> {
    for z in samples {
        if z.len() != n as usize || z.iter().any(|x| !x.is_positive()) {
            return precondition("sample points need n positive coordinates");
        }
        let ok = match (two_g, n) {
            (0, 3) => {
                // 2·(1/2)·∏ 1/z_i² against -∂₁∂₂∂₃ (1/(z₁z₂z₃)) = ∏ 1/z_i²
                let lhs = qi(2) * q(1, 2) * z.iter().map(|x| laplace_monomial(1, x)).product::<Q>();
                let rhs: Q = z.iter().map(|x| Q::one() / (x * x)).product();
                lhs == rhs
            }
            (1, 2) => {
                // 2/√(1+b) · (b/4) · LT[max(L₁,L₂)L₁L₂] against (b/√(1+b)) ∂₁∂₂ F
                let lhs = BPoly::b().scale(&(qi(2) * q(1, 4) * laplace_max(&z[0], &z[1])));
                let a = Dual2::var(z[0].clone(), 1);
                let c = Dual2::var(z[1].clone(), 2);
                let num = a.mul(&a).add(&a.mul(&c)).add(&c.mul(&c));
                let den = Dual2::cst(qi(2)).mul(&a).mul(&a).mul(&c).mul(&c).mul(&a.add(&c));
                let f = num.mul(&den.inv());
                let rhs = BPoly::b().scale(&f.c[3]);
                lhs == rhs
            }
            (2, 1) => {
                // (1+b)·LHS = 2(1+b+5b²)/96 · 6/z⁴; (1+b)·RHS = (1+b+5b²)/(8z⁴)
                let z4 = laplace_monomial(3, &z[0]) / qi(6);
                let lhs = BPoly::from_ints(&[1, 1, 5]).scale(&(qi(2) * q(1, 96) * qi(6) * &z4));
                let rhs = BPoly::from_ints(&[1, 1, 5]).scale(&(q(1, 8) * &z4));
                lhs == rhs
            }
            _ => return precondition("Laplace check is only defined for base topologies"),
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One step of the mesh refinement: `λ^{6g-6+2n}·2^{2g-2+n}/2·N(L/λ)` at `λ = 1/scale`.
pub fn rescaled_count(two_g: u32, n: u32, l: &[u32], scale: u32, table: &CountTable) -> Result<BPoly> {
    let big: Vec<u32> = l.iter().map(|&x| x * scale).collect();
    let nval = if level(two_g, n) == 1 {
        base_case(two_g, n, &big)?
    } else {
        crate::recursion::count_recursive_in(two_g, n, &big, table)?
    };
    let d = degree(two_g, n);
    let lam = q(1, scale as i64);
    let mut f = qi(1i64 << level(two_g, n)) / qi(2);
    for _ in 0..d {
        f *= &lam;
    }
    Ok(nval.scale(&f))
}

/// Largest coefficientwise relative deviation `|a_k - b_k| / |b_k|` over the nonzero
/// coefficients of `b`; coefficients where `b_k = 0` must match exactly.
pub fn relative_error(a: &BPoly, b: &BPoly) -> Option<Q> {
    let top = a.coeffs().len().max(b.coeffs().len());
    let mut worst = Q::zero();
    for k in 0..top {
        let (x, y) = (a.coeff(k), b.coeff(k));
        if y.is_zero() {
            if !x.is_zero() {
                return None;
            }
            continue;
        }
        let r = ((&x - &y) / &y).abs();
        if r > worst {
            worst = r;
        }
    }
    Some(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_volumes() {
        assert_eq!(volume_base(0, 3, &[qi(7), qi(1), qi(3)]).unwrap(), BPoly::constant(q(1, 2)));
        assert_eq!(volume_base(1, 2, &[qi(3), qi(5)]).unwrap(), BPoly::b().scale(&q(5, 4)));
        assert_eq!(volume_base(2, 1, &[qi(1)]).unwrap(), BPoly::from_coeffs(vec![q(1, 96), q(1, 96), q(5, 96)]));
        assert!(volume_base(0, 4, &vec![qi(1); 4]).is_err());
    }

    #[test]
    fn piecewise_integration() {
        // |x - 1| on [0, 3]
        let f = |x: &Q| Ok(BPoly::constant((x - qi(1)).abs()));
        let pp = PiecewisePoly1::sample(f, &[qi(0), qi(1), qi(3)], 1).unwrap();
        assert!(pp.is_continuous());
        assert_eq!(pp.integral(), BPoly::constant(q(5, 2)));
        assert_eq!(pp.eval(&q(1, 2)), Some(BPoly::constant(q(1, 2))));
    }

    #[test]
    fn extraction_matches_base_volumes() {
        let t = CountTable::in_memory();
        let book = VolumeBook::new(&t, QuasiConfig::default());
        for (two_g, n, l) in [(0u32, 3u32, vec![q(7, 2), qi(1), qi(3)]), (1, 2, vec![qi(3), q(11, 2)]), (2, 1, vec![q(5, 3)])] {
            let v = book.get(two_g, n).unwrap();
            assert_eq!(evaluate(&v, &l, &vec![0; l.len()]).unwrap(), volume_base(two_g, n, &l).unwrap());
        }
    }

    #[test]
    fn four_holes_worked_example() {
        let t = CountTable::in_memory();
        let book = VolumeBook::new(&t, QuasiConfig::default());
        let l = vec![qi(10), qi(1), qi(2), qi(3)];
        assert_eq!(volume_rhs(&book, 0, 4, &l).unwrap(), BPoly::constant(q(57, 2)));
        assert!(volume_rhs(&book, 1, 2, &[qi(1), qi(2)]).is_err());
    }

    #[test]
    fn laplace_identities() {
        let pts: Vec<Vec<Q>> = (1..6).map(|i| vec![q(i, 3), q(2 * i + 1, 5), q(7, i + 1)]).collect();
        for (two_g, n) in [(0u32, 3u32), (1, 2), (2, 1)] {
            let s: Vec<Vec<Q>> = pts.iter().map(|p| p[..n as usize].to_vec()).collect();
            assert!(airy_laplace_check(two_g, n, &s).unwrap());
        }
    }

    #[test]
    fn mesh_refinement_errors() {
        let t = CountTable::in_memory();
        let v = volume_base(2, 1, &[qi(8)]).unwrap();
        let mut last = None;
        for s in [2u32, 4, 8] {
            let r = relative_error(&rescaled_count(2, 1, &[8], s, &t).unwrap(), &v).unwrap();
            if let Some(prev) = last {
                assert!(r < prev);
            }
            last = Some(r);
        }
        assert!(last.unwrap() < q(1, 20));
    }
}
