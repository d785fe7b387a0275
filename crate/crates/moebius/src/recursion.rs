//! Recursive evaluation of the refined lattice point counts `N_{g,n}(L; b)`.
//!
//! Two recursions are provided: an asymmetric one that peels off the first
//! boundary, and a symmetric one that sums over all boundaries and divides by
//! `2ΣL`. Both bottom out in the closed forms for `(0,3)`, `(½,2)`, `(1,1)`
//! and memoize through a [`CountTable`], each in its own namespace.
//!
//! Genus is passed doubled throughout (`two_g = 2g`).

use rayon::prelude::*;

use crate::bpoly::BPoly;
use crate::cache::{CountKey, CountTable, Method};
use crate::error::{precondition, Result};
use crate::rational::{q, Q};

fn ramp(x: i64) -> i64 {
    x.max(0)
}

/// Reduction kernel `R(L₁, L_m, p)`.
pub fn kernel_r(l1: &Q, lm: &Q, p: &Q) -> Q {
    let z = Q::from_integer(0.into());
    let r = |x: Q| if x > z { x } else { z.clone() };
    (r(l1 + lm - p) - r(lm - l1 - p) + r(l1 - lm - p)) / (Q::from_integer(2.into()) * l1)
}

/// Cross-cap excision kernel `E(L₁, p)`.
pub fn kernel_e(l1: &Q, p: &Q) -> Q {
    let z = Q::from_integer(0.into());
    let d = l1 - p;
    if d > z {
        d / (Q::from_integer(2.into()) * l1)
    } else {
        z
    }
}

/// Pair-of-pants excision kernel `D(L₁, p, q)`.
pub fn kernel_d(l1: &Q, p: &Q, q: &Q) -> Q {
    let z = Q::from_integer(0.into());
    let d = l1 - p - q;
    if d > z {
        d / l1
    } else {
        z
    }
}

/// Integer numerator `2L₁·R(L₁, L_m, p)`.
fn r_num(l1: i64, lm: i64, p: i64) -> i64 {
    ramp(l1 + lm - p) - ramp(lm - l1 - p) + ramp(l1 - lm - p)
}

/// `2g - 2 + n`.
pub fn level(two_g: u32, n: u32) -> i64 {
    two_g as i64 + n as i64 - 2
}

pub fn is_stable(two_g: u32, n: u32) -> bool {
    level(two_g, n) > 0
}

/// The three base topologies with `2g - 2 + n = 1`.
pub fn base_case(two_g: u32, n: u32, l: &[u32]) -> Result<BPoly> {
    if l.len() != n as usize {
        return precondition(format!("expected {n} perimeters, got {}", l.len()));
    }
    if l.contains(&0) {
        return precondition("perimeters must be positive");
    }
    let s: u64 = l.iter().map(|&x| x as u64).sum();
    let even = s % 2 == 0;
    match (two_g, n) {
        (0, 3) => Ok(if even { BPoly::constant(q(1, 2)) } else { BPoly::zero() }),
        (1, 2) => {
            if !even {
                return Ok(BPoly::zero());
            }
            let m = *l.iter().max().unwrap() as i64;
            Ok(BPoly::from_coeffs(vec![q(0, 1), q(m - 1, 4)]))
        }
        (2, 1) => {
            if !even {
                return Ok(BPoly::zero());
            }
            let x = l[0] as i64;
            let a = x * x - 4;
            let c = 5 * x * x - 12 * x + 4;
            Ok(BPoly::from_coeffs(vec![q(a, 96), q(a, 96), q(c, 96)]))
        }
        _ => precondition(format!("(2g, n) = ({two_g}, {n}) is not a base topology")),
    }
}

fn sorted_key(method: Method, two_g: u32, mut l: Vec<u32>) -> CountKey {
    l.sort_unstable();
    CountKey {
        method,
        two_g,
        n: l.len() as u32,
        l,
    }
}

fn check_request(two_g: u32, n: u32, l: &[u32]) -> Result<()> {
    if !is_stable(two_g, n) {
        return precondition(format!("2g-2+n must be positive, got 2g={two_g}, n={n}"));
    }
    if l.len() != n as usize {
        return precondition(format!("expected {n} perimeters, got {}", l.len()));
    }
    if l.contains(&0) {
        return precondition("perimeters must be positive");
    }
    Ok(())
}

struct Engine<'a> {
    table: &'a CountTable,
    method: Method,
}

impl Engine<'_> {
    /// Memoized value at a sorted perimeter vector.
    fn get(&self, two_g: u32, l: Vec<u32>) -> BPoly {
        let n = l.len() as u32;
        if !l.iter().map(|&x| x as u64).sum::<u64>().is_multiple_of(2) {
            return BPoly::zero();
        }
        if level(two_g, n) == 1 {
            return base_case(two_g, n, &l).expect("base topology");
        }
        let key = sorted_key(self.method, two_g, l);
        if let Some(v) = self.table.get(&key) {
            return v;
        }
        let v = match self.method {
            Method::Rec => self.asymmetric(two_g, &key.l),
            _ => self.symmetric(two_g, &key.l),
        };
        // Insertion only fails on disk errors; the value itself is still correct.
        let _ = self.table.insert(key, v.clone());
        v
    }

    fn with(&self, first: &[u32], rest: impl Iterator<Item = u32>) -> Vec<u32> {
        let mut v: Vec<u32> = first.to_vec();
        v.extend(rest);
        v.sort_unstable();
        v
    }

    /// Sum of `pq[L₁-p-q]₊ ((1+b)·N_{g-1,n+1} + 2·Σ_split N·N)` over admissible `p, q`.
    fn excise_pants(&self, two_g: u32, l1: u32, rest: &[u32]) -> BPoly {
        let k = rest.len();
        let rest_sum: u32 = rest.iter().sum();
        let mut acc = BPoly::zero();
        for p in 1..l1 {
            for qq in 1..l1 - p {
                if (p + qq + rest_sum) % 2 != 0 {
                    continue;
                }
                let w = (p * qq * (l1 - p - qq)) as i64;
                assert!(p + qq + 2 <= l1, "pants term out of support");
                let mut inner = BPoly::zero();
                if two_g >= 2 {
                    let sub = self.get(two_g - 2, self.with(&[p, qq], rest.iter().copied()));
                    inner += &(&BPoly::one_plus_b() * &sub);
                }
                let mut split = BPoly::zero();
                for two_g1 in 0..=two_g {
                    let two_g2 = two_g - two_g1;
                    for mask in 0u32..(1 << k) {
                        let n1 = 1 + mask.count_ones();
                        let n2 = 1 + k as u32 - mask.count_ones();
                        if !is_stable(two_g1, n1) || !is_stable(two_g2, n2) {
                            continue;
                        }
                        let s1: u32 = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| rest[i]).sum();
                        if (p + s1) % 2 != 0 {
                            continue;
                        }
                        let a = self.get(
                            two_g1,
                            self.with(&[p], (0..k).filter(|i| mask >> i & 1 == 1).map(|i| rest[i])),
                        );
                        if a.is_zero() {
                            continue;
                        }
                        let c = self.get(
                            two_g2,
                            self.with(&[qq], (0..k).filter(|i| mask >> i & 1 == 0).map(|i| rest[i])),
                        );
                        split += &(&a * &c);
                    }
                }
                inner += &split.scale_int(2);
                acc += &inner.scale_int(w);
            }
        }
        acc
    }

    /// Sum of `b·p(L₁-1)[L₁-p]₊ N_{g-½,n}` over admissible `p`.
    fn excise_crosscap(&self, two_g: u32, l1: u32, rest: &[u32]) -> BPoly {
        let mut acc = BPoly::zero();
        if two_g == 0 {
            return acc;
        }
        let rest_sum: u32 = rest.iter().sum();
        for p in 1..l1 {
            if (p + rest_sum) % 2 != 0 {
                continue;
            }
            assert!(p + 2 <= l1, "cross-cap term out of support");
            let w = (p * (l1 - 1) * (l1 - p)) as i64;
            let sub = self.get(two_g - 1, self.with(&[p], rest.iter().copied()));
            acc += &sub.scale_int(w);
        }
        &acc * &BPoly::b()
    }

    /// Asymmetric recursion with `L₁ = l[0]`; `l` need not be sorted.
    fn asymmetric(&self, two_g: u32, l: &[u32]) -> BPoly {
        let (l1, rest) = (l[0], &l[1..]);
        let mut acc = BPoly::zero();
        for m in 0..rest.len() {
            let lm = rest[m];
            let others: Vec<u32> = rest.iter().enumerate().filter(|&(i, _)| i != m).map(|(_, &x)| x).collect();
            let os: u32 = others.iter().sum();
            for p in 1..l1 + lm {
                if (p + os) % 2 != 0 {
                    continue;
                }
                let k = r_num(l1 as i64, lm as i64, p as i64);
                if k == 0 {
                    continue;
                }
                assert!(p < l1 + lm, "reduction term out of support");
                let sub = self.get(two_g, self.with(&[p], others.iter().copied()));
                acc += &sub.scale_int(p as i64 * k);
            }
        }
        acc += &self.excise_crosscap(two_g, l1, rest);
        acc += &self.excise_pants(two_g, l1, rest);
        acc.scale(&q(1, 2 * l1 as i64))
    }

    /// Symmetric recursion: every boundary plays the role of `L₁` in turn.
    fn symmetric(&self, two_g: u32, l: &[u32]) -> BPoly {
        let n = l.len();
        let mut acc = BPoly::zero();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let others: Vec<u32> = (0..n).filter(|&t| t != i && t != j).map(|t| l[t]).collect();
                let os: u32 = others.iter().sum();
                let top = l[i] + l[j];
                for p in 1..top {
                    if (p + os) % 2 != 0 {
                        continue;
                    }
                    let sub = self.get(two_g, self.with(&[p], others.iter().copied()));
                    acc += &sub.scale_int((p * (top - p)) as i64);
                }
            }
        }
        for i in 0..n {
            let rest: Vec<u32> = (0..n).filter(|&t| t != i).map(|t| l[t]).collect();
            acc += &self.excise_crosscap(two_g, l[i], &rest);
            acc += &self.excise_pants(two_g, l[i], &rest);
        }
        let s: u32 = l.iter().sum();
        acc.scale(&q(1, 2 * s as i64))
    }
}

fn count_with(method: Method, two_g: u32, l: &[u32], table: &CountTable) -> Result<BPoly> {
    let n = l.len() as u32;
    check_request(two_g, n, l)?;
    if !l.iter().map(|&x| x as u64).sum::<u64>().is_multiple_of(2) {
        return Ok(BPoly::zero());
    }
    let e = Engine { table, method };
    if level(two_g, n) == 1 {
        return base_case(two_g, n, l);
    }
    Ok(match method {
        // Evaluated with the caller's ordering so the distinguished boundary is `l[0]`.
        Method::Rec => e.asymmetric(two_g, l),
        _ => e.get(two_g, l.to_vec()),
    })
}

/// `N_{g,n}(L; b)` from the asymmetric recursion, with `L₁ = l[0]`.
pub fn count_recursive_in(two_g: u32, n: u32, l: &[u32], table: &CountTable) -> Result<BPoly> {
    if l.len() != n as usize {
        return precondition(format!("expected {n} perimeters, got {}", l.len()));
    }
    count_with(Method::Rec, two_g, l, table)
}

/// `N_{g,n}(L; b)` from the symmetric recursion.
pub fn count_recursive_symmetric_in(two_g: u32, n: u32, l: &[u32], table: &CountTable) -> Result<BPoly> {
    if l.len() != n as usize {
        return precondition(format!("expected {n} perimeters, got {}", l.len()));
    }
    count_with(Method::Sym, two_g, l, table)
}

pub fn count_recursive(two_g: u32, n: u32, l: &[u32]) -> Result<BPoly> {
    count_recursive_in(two_g, n, l, CountTable::global())
}

pub fn count_recursive_symmetric(two_g: u32, n: u32, l: &[u32]) -> Result<BPoly> {
    count_recursive_symmetric_in(two_g, n, l, CountTable::global())
}

/// All sorted perimeter vectors of length `n` with entries ≥ 1, even sum and sum ≤ `max_sum`.
pub fn sorted_keys(n: u32, max_sum: u32) -> Vec<Vec<u32>> {
    fn go(n: u32, lo: u32, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if n == 0 {
            if cur.iter().sum::<u32>() % 2 == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let mut x = lo;
        while x * n <= left {
            cur.push(x);
            go(n - 1, x, left - x, cur, out);
            cur.pop();
            x += 1;
        }
    }
    let mut out = Vec::new();
    go(n, 1, max_sum, &mut Vec::new(), &mut out);
    out
}

/// Values at every sorted key with even sum ≤ `max_sum`, computed in parallel.
pub fn count_table(
    method: Method,
    two_g: u32,
    n: u32,
    max_sum: u32,
    table: &CountTable,
) -> Result<Vec<(Vec<u32>, BPoly)>> {
    if !is_stable(two_g, n) {
        return precondition(format!("2g-2+n must be positive, got 2g={two_g}, n={n}"));
    }
    let keys = sorted_keys(n, max_sum);
    // Warm smaller sums first so parallel workers mostly share finished sub-results.
    let mut by_sum = keys.clone();
    by_sum.sort_by_key(|k| (k.iter().sum::<u32>(), k.clone()));
    let vals: Vec<Result<BPoly>> = by_sum
        .par_iter()
        .map(|k| match method {
            Method::Rec => count_recursive_in(two_g, n, k, table),
            Method::Sym => count_recursive_symmetric_in(two_g, n, k, table),
            Method::Direct => precondition("direct counts are tabulated by the lattice module"),
        })
        .collect();
    let mut out = Vec::with_capacity(keys.len());
    for (k, v) in by_sum.into_iter().zip(vals) {
        out.push((k, v?));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qi;

    #[test]
    fn kernels() {
        let (a, b, c) = (qi(5), qi(3), qi(2));
        assert_eq!(kernel_r(&a, &b, &c), q(3, 5));
        assert_eq!(kernel_e(&a, &c), q(3, 10));
        assert_eq!(kernel_d(&a, &c, &qi(1)), q(2, 5));
        assert_eq!(kernel_d(&a, &c, &b), qi(0));
        // degree 0 homogeneity
        let s = q(7, 3);
        assert_eq!(kernel_r(&(&a * &s), &(&b * &s), &(&c * &s)), kernel_r(&a, &b, &c));
        for p in 1..12i64 {
            assert_eq!(qi(2 * 5) * kernel_r(&a, &b, &qi(p)), qi(r_num(5, 3, p)));
        }
    }

    #[test]
    fn base_cases() {
        assert_eq!(base_case(0, 3, &[2, 4, 2]).unwrap(), BPoly::constant(q(1, 2)));
        assert_eq!(base_case(1, 2, &[5, 3]).unwrap(), BPoly::b());
        assert_eq!(base_case(2, 1, &[2]).unwrap(), BPoly::zero());
        assert_eq!(base_case(2, 1, &[4]).unwrap(), BPoly::from_coeffs(vec![q(1, 8), q(1, 8), q(3, 8)]));
        assert_eq!(base_case(0, 3, &[1, 1, 1]).unwrap(), BPoly::zero());
        assert!(base_case(0, 4, &[1, 1, 1, 1]).is_err());
    }

    #[test]
    fn examples() {
        let t = CountTable::in_memory();
        let b2 = BPoly::from_coeffs(vec![q(0, 1), q(1, 2)]);
        assert_eq!(count_recursive_in(1, 3, &[2, 2, 2], &t).unwrap(), b2);
        assert_eq!(count_recursive_symmetric_in(1, 3, &[2, 2, 2], &t).unwrap(), b2);
        assert_eq!(count_recursive_in(0, 4, &[1, 1, 2, 2], &t).unwrap(), BPoly::one());
        assert_eq!(count_recursive_in(0, 4, &[1, 1, 1, 2], &t).unwrap(), BPoly::zero());
        let a = count_recursive_in(0, 5, &[2, 2, 2, 2, 2], &t).unwrap();
        let s = count_recursive_symmetric_in(0, 5, &[2, 2, 2, 2, 2], &t).unwrap();
        assert_eq!(a, s);
        assert!(!a.is_zero());
        assert!(count_recursive_in(0, 2, &[1, 1], &t).is_err());
        assert!(count_recursive_in(0, 3, &[1, 1], &t).is_err());
    }

    #[test]
    fn four_hole_counts() {
        // (ΣL² - 4)/8 when zero or four entries are odd, (ΣL² - 2)/8 when two are
        let t = CountTable::in_memory();
        for l in sorted_keys(4, 12) {
            let s2: i64 = l.iter().map(|&x| (x * x) as i64).sum();
            let odd = l.iter().filter(|&&x| x % 2 == 1).count();
            let want = match odd {
                0 | 4 => q(s2 - 4, 8),
                2 => q(s2 - 2, 8),
                _ => unreachable!(),
            };
            assert_eq!(count_recursive_in(0, 4, &l, &t).unwrap(), BPoly::constant(want), "{l:?}");
        }
    }

    #[test]
    fn asymmetric_is_symmetric() {
        let t = CountTable::in_memory();
        for (two_g, n) in [(0u32, 4u32), (1, 3), (2, 2), (3, 1), (0, 5)] {
            for l in sorted_keys(n, 10) {
                let base = count_recursive_in(two_g, n, &l, &t).unwrap();
                let mut r = l.clone();
                r.reverse();
                assert_eq!(count_recursive_in(two_g, n, &r, &t).unwrap(), base);
                if n > 1 {
                    r.rotate_left(1);
                    assert_eq!(count_recursive_in(two_g, n, &r, &t).unwrap(), base);
                }
                assert!(base.degree().unwrap_or(0) <= two_g as usize);
            }
        }
    }
}
