//! Piecewise quasipolynomial structure of `N_{g,n}(L; b)`.
//!
//! For fixed parities of the `L_i` the count is a polynomial of degree
//! `6g - 6 + 2n` on each chamber cut out by the walls `Σ ε_i L_i = 0`,
//! `ε_i ∈ {-1, 0, 1}`. Because the count is symmetric, chambers are only
//! generated inside the sorted cone `L₁ > L₂ > … > L_n`; evaluation sorts
//! its argument (carrying the parities along) before locating a chamber.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bpoly::BPoly;
use crate::cache::CountTable;
use crate::error::{precondition, Error, Result};
use crate::lp::{solve, Lp, LpResult, Rel};
use crate::mpoly::{interpolate_univariate, MPoly};
use crate::rational::{qi, qzero, Q};
use crate::recursion::{count_recursive_in, level};

use num_traits::{One, Signed, ToPrimitive, Zero};

/// Linear form `Σ ε_i L_i`.
pub type Wall = Vec<i32>;

#[derive(Clone, Debug)]
pub struct QuasiConfig {
    /// Largest `2g - 2 + n` accepted by [`reconstruct_with`].
    pub max_level: i64,
    /// Seed for the choice of out-of-grid verification samples.
    pub seed: u64,
}

impl Default for QuasiConfig {
    fn default() -> Self {
        QuasiConfig { max_level: 2, seed: 0 }
    }
}

/// A chamber of the sorted cone with a certified interior point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cell {
    /// Sign of each wall form on the chamber.
    pub signs: Vec<i8>,
    #[serde(serialize_with = "ser_qs")]
    pub point: Vec<Q>,
}

/// A chamber together with a parity class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Chamber {
    pub parity: Vec<u8>,
    pub cell: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Piece {
    pub chamber: Chamber,
    pub poly: MPoly,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasiPoly {
    pub two_g: u32,
    pub n: u32,
    pub degree: u32,
    pub walls: Vec<Wall>,
    pub cells: Vec<Cell>,
    pub pieces: Vec<Piece>,
}

fn ser_qs<S: serde::Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&crate::rational::fmt_q(x))?;
    }
    seq.end()
}

/// Wall forms that can vanish on the positive orthant, normalized so that the
/// first nonzero coefficient is `+1`. The forms `L_i - L_{i+1}` come first.
pub fn walls(n: usize) -> Vec<Wall> {
    let mut out: Vec<Wall> = (0..n.saturating_sub(1))
        .map(|i| {
            let mut w = vec![0; n];
            w[i] = 1;
            w[i + 1] = -1;
            w
        })
        .collect();
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut w = vec![0i32; n];
        let mut c = code;
        for x in w.iter_mut() {
            *x = (c % 3) as i32 - 1;
            c /= 3;
        }
        let first = w.iter().find(|&&x| x != 0).copied();
        if first != Some(1) || !w.contains(&-1) || out.contains(&w) {
            continue;
        }
        out.push(w);
    }
    out
}

fn dot(w: &[i32], x: &[Q]) -> Q {
    w.iter().zip(x).filter(|(a, _)| **a != 0).map(|(&a, xi)| qi(a as i64) * xi).sum()
}

fn sign_of(x: &Q) -> i8 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

/// Maximizes the common slack `t` of `s·w(x) ≥ t‖w‖₁` over `Σx = 1`, plus
/// optional equalities. Returns the point when the slack is positive.
fn interior_point(n: usize, strict: &[(&Wall, i8)], equal: &[&Wall]) -> Option<Vec<Q>> {
    let mut rows = Vec::new();
    for (w, s) in strict {
        let norm: i64 = w.iter().map(|x| x.abs() as i64).sum();
        let mut a: Vec<Q> = w.iter().map(|&x| qi(x as i64 * *s as i64)).collect();
        a.push(qi(-norm));
        rows.push((a, Rel::Ge, qzero()));
    }
    for w in equal {
        let mut a: Vec<Q> = w.iter().map(|&x| qi(x as i64)).collect();
        a.push(qzero());
        rows.push((a, Rel::Eq, qzero()));
    }
    // positivity of the smallest coordinate
    let mut a = vec![qzero(); n + 1];
    a[n - 1] = Q::one();
    a[n] = -Q::one();
    rows.push((a, Rel::Ge, qzero()));
    let mut a = vec![Q::one(); n + 1];
    a[n] = qzero();
    rows.push((a, Rel::Eq, Q::one()));
    let mut a = vec![qzero(); n + 1];
    a[n] = Q::one();
    rows.push((a, Rel::Le, Q::one()));
    let mut objective = vec![qzero(); n + 1];
    objective[n] = Q::one();
    match solve(&Lp {
        nvars: n + 1,
        rows,
        objective,
    }) {
        LpResult::Optimal { value, mut point } if value.is_positive() => {
            point.truncate(n);
            Some(point)
        }
        _ => None,
    }
}

/// Chambers of the sorted cone, by successive refinement along each wall.
pub fn sorted_cells(n: usize) -> Result<(Vec<Wall>, Vec<Cell>)> {
    if n == 0 {
        return precondition("need at least one boundary");
    }
    let ws = walls(n);
    let fixed = n - 1;
    let strict: Vec<(&Wall, i8)> = ws[..fixed].iter().map(|w| (w, 1i8)).collect();
    let p0 = interior_point(n, &strict, &[]).ok_or_else(|| Error::CrossCheck("empty sorted cone".into()))?;
    let mut cells = vec![Cell {
        signs: vec![1; fixed],
        point: p0,
    }];
    for w in &ws[fixed..] {
        let mut next = Vec::with_capacity(cells.len() * 2);
        for c in cells {
            let current: Vec<(&Wall, i8)> = ws.iter().zip(&c.signs).map(|(w, &s)| (w, s)).collect();
            let s = sign_of(&dot(w, &c.point));
            let mut sides = Vec::new();
            for side in [1i8, -1] {
                if side == s {
                    sides.push((side, c.point.clone()));
                    continue;
                }
                let mut cons = current.clone();
                cons.push((w, side));
                if let Some(p) = interior_point(n, &cons, &[]) {
                    sides.push((side, p));
                }
            }
            for (side, p) in sides {
                let mut signs = c.signs.clone();
                signs.push(side);
                next.push(Cell { signs, point: p });
            }
        }
        cells = next;
    }
    Ok((ws, cells))
}

/// Degree `6g - 6 + 2n` of the count, with `two_g = 2g`.
pub fn degree(two_g: u32, n: u32) -> u32 {
    (3 * two_g + 2 * n) - 6
}

fn parities(n: usize) -> Vec<Vec<u8>> {
    (0..1u32 << n).map(|m| (0..n).map(|i| (m >> i & 1) as u8).collect()).collect()
}

/// Integer base point deep in a cell, with the given parities.
fn base_point(ws: &[Wall], cell: &Cell, parity: &[u8], reach: i64) -> Vec<i64> {
    let x = &cell.point;
    // scale so that every wall value clears the reach of the sample grid
    let mut s = Q::zero();
    for w in ws {
        let norm: i64 = w.iter().map(|a| a.abs() as i64).sum();
        let need = qi(norm * (reach + 2) + 1);
        let v = dot(w, x).abs();
        let f = need / v;
        if f > s {
            s = f;
        }
    }
    for xi in x {
        let f = qi(reach + 2) / xi;
        if f > s {
            s = f;
        }
    }
    let s = s.ceil();
    x.iter()
        .zip(parity)
        .map(|(xi, &d)| {
            let mut v = (xi * &s).round().to_integer().to_i64().expect("grid point fits i64");
            if v.rem_euclid(2) != d as i64 {
                v += 1;
            }
            v
        })
        .collect()
}

fn sample(two_g: u32, n: u32, desc: &[i64], table: &CountTable) -> Result<BPoly> {
    // the asymmetric recursion is cheapest with the shortest boundary first
    let asc: Vec<u32> = desc.iter().rev().map(|&v| v as u32).collect();
    count_recursive_in(two_g, n, &asc, table)
}

/// Tensor-grid interpolation of the count on one cell and parity class.
fn interpolate_piece(
    two_g: u32,
    n: usize,
    d: u32,
    base: &[i64],
    table: &CountTable,
    rng: &mut ChaCha8Rng,
) -> Result<MPoly> {
    let m = d as usize + 1;
    let total = m.pow(n as u32);
    let index = |k: usize| -> Vec<usize> { (0..n).map(|i| k / m.pow(i as u32) % m).collect() };
    let mut vals: Vec<BPoly> = Vec::with_capacity(total);
    for k in 0..total {
        let ks = index(k);
        let l: Vec<i64> = (0..n).map(|i| base[i] + 2 * ks[i] as i64).collect();
        vals.push(sample(two_g, n as u32, &l, table)?);
    }
    // one axis at a time: values along a line become monomial coefficients
    for axis in 0..n {
        let stride = m.pow(axis as u32);
        let xs: Vec<Q> = (0..m).map(|j| qi(base[axis] + 2 * j as i64)).collect();
        for k in 0..total {
            if index(k)[axis] != 0 {
                continue;
            }
            let line: Vec<BPoly> = (0..m).map(|j| vals[k + j * stride].clone()).collect();
            let c = interpolate_univariate(&xs, &line)?;
            for (j, cj) in c.into_iter().enumerate() {
                vals[k + j * stride] = cj;
            }
        }
    }
    let mut poly = MPoly::zero(n);
    for (k, c) in vals.into_iter().enumerate() {
        poly.add_term(index(k).iter().map(|&e| e as u32).collect(), c);
    }
    if poly.total_degree().unwrap_or(0) > d {
        return Err(Error::CrossCheck(format!(
            "interpolant has total degree {:?} > {d}; grid is not inside one chamber",
            poly.total_degree()
        )));
    }
    // residual check at out-of-grid points that stay in the chamber
    for _ in 0..d.max(1) {
        let mut ks: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=d as i64 + 2)).collect();
        let which = rng.gen_range(0..n);
        ks[which] = d as i64 + 1 + rng.gen_range(0..2);
        let l: Vec<i64> = (0..n).map(|i| base[i] + 2 * ks[i]).collect();
        let want = sample(two_g, n as u32, &l, table)?;
        let got = poly.eval(&l.iter().map(|&v| qi(v)).collect::<Vec<_>>());
        if want != got {
            return Err(Error::CrossCheck(format!("interpolation residual at {l:?}")));
        }
    }
    Ok(poly)
}

pub fn reconstruct_with(two_g: u32, n: u32, table: &CountTable, cfg: &QuasiConfig) -> Result<QuasiPoly> {
    let lv = level(two_g, n);
    if lv <= 0 {
        return precondition(format!("2g-2+n must be positive, got 2g={two_g}, n={n}"));
    }
    if lv > cfg.max_level {
        return Err(Error::Budget(format!(
            "2g-2+n = {lv} exceeds the reconstruction budget {}",
            cfg.max_level
        )));
    }
    let nn = n as usize;
    let d = degree(two_g, n);
    let (ws, cells) = sorted_cells(nn)?;
    let reach = 2 * (d as i64 + 2);
    let jobs: Vec<(usize, Vec<u8>)> = (0..cells.len())
        .flat_map(|c| parities(nn).into_iter().map(move |p| (c, p)))
        .collect();
    let polys: Vec<Result<MPoly>> = jobs
        .par_iter()
        .enumerate()
        .map(|(j, (c, parity))| {
            if parity.iter().map(|&x| x as u32).sum::<u32>() % 2 == 1 {
                // still sampled so the zero claim is checked, on a minimal grid
                let base = base_point(&ws, &cells[*c], parity, reach);
                let v = sample(two_g, n, &base, table)?;
                return if v.is_zero() {
                    Ok(MPoly::zero(nn))
                } else {
                    Err(Error::CrossCheck(format!("odd parity class is nonzero at {base:?}")))
                };
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let base = base_point(&ws, &cells[*c], parity, reach);
            interpolate_piece(two_g, nn, d, &base, table, &mut rng)
        })
        .collect();
    let mut pieces = Vec::with_capacity(jobs.len());
    for ((cell, parity), poly) in jobs.into_iter().zip(polys) {
        pieces.push(Piece {
            chamber: Chamber { parity, cell },
            poly: poly?,
        });
    }
    Ok(QuasiPoly {
        two_g,
        n,
        degree: d,
        walls: ws,
        cells,
        pieces,
    })
}

pub fn reconstruct(two_g: u32, n: u32) -> Result<QuasiPoly> {
    reconstruct_with(two_g, n, CountTable::global(), &QuasiConfig::default())
}

impl QuasiPoly {
    pub fn piece(&self, cell: usize, parity: &[u8]) -> Option<&MPoly> {
        self.pieces
            .iter()
            .find(|p| p.chamber.cell == cell && p.chamber.parity == parity)
            .map(|p| &p.poly)
    }

    /// Cells whose closure contains the sorted point `x`.
    pub fn locate_sorted(&self, x: &[Q]) -> Vec<usize> {
        let s: Vec<i8> = self.walls.iter().map(|w| sign_of(&dot(w, x))).collect();
        (0..self.cells.len())
            .filter(|&c| self.cells[c].signs.iter().zip(&s).all(|(a, b)| *b == 0 || a == b))
            .collect()
    }
}

/// Sorts descending, carrying parities along.
fn sort_with_parity(l: &[Q], parity: &[u8]) -> (Vec<Q>, Vec<u8>) {
    let mut idx: Vec<usize> = (0..l.len()).collect();
    idx.sort_by(|&a, &b| l[b].cmp(&l[a]).then(a.cmp(&b)));
    (idx.iter().map(|&i| l[i].clone()).collect(), idx.iter().map(|&i| parity[i]).collect())
}

/// Value of the piecewise polynomial attached to `parity` at the point `l`.
pub fn evaluate(qp: &QuasiPoly, l: &[Q], parity: &[u8]) -> Result<BPoly> {
    if l.len() != qp.n as usize || parity.len() != qp.n as usize {
        return precondition("arity mismatch");
    }
    if l.iter().any(|x| x.is_negative()) {
        return precondition("perimeters must be non-negative");
    }
    let (x, p) = sort_with_parity(l, parity);
    let c = *qp
        .locate_sorted(&x)
        .first()
        .ok_or_else(|| Error::Precondition(format!("no chamber contains {l:?}")))?;
    let poly = qp
        .piece(c, &p)
        .ok_or_else(|| Error::Precondition("missing parity class".into()))?;
    Ok(poly.eval(&x))
}

/// Parity vector of an integer point.
pub fn parity_of(l: &[u32]) -> Vec<u8> {
    l.iter().map(|&x| (x % 2) as u8).collect()
}

/// Top-degree homogeneous part, which must not depend on the parity class.
pub fn leading_part(qp: &QuasiPoly) -> Result<QuasiPoly> {
    let mut pieces = Vec::new();
    for (c, _) in qp.cells.iter().enumerate() {
        let mut top: Option<MPoly> = None;
        for p in qp.pieces.iter().filter(|p| p.chamber.cell == c) {
            if p.chamber.parity.iter().map(|&x| x as u32).sum::<u32>() % 2 == 1 {
                continue;
            }
            let h = p.poly.homogeneous_part(qp.degree);
            match &top {
                None => top = Some(h),
                Some(t) if *t == h => {}
                Some(_) => {
                    return Err(Error::CrossCheck(format!(
                        "parity classes disagree in top degree on chamber {c}"
                    )))
                }
            }
        }
        let top = top.unwrap_or_else(|| MPoly::zero(qp.n as usize));
        for parity in parities(qp.n as usize) {
            pieces.push(Piece {
                chamber: Chamber { parity, cell: c },
                poly: top.clone(),
            });
        }
    }
    Ok(QuasiPoly {
        pieces,
        ..qp.clone()
    })
}

/// Points in the relative interior of walls shared by two cells, with the two cells.
pub fn wall_points(qp: &QuasiPoly, count: usize, seed: u64) -> Vec<(Vec<Q>, usize, usize)> {
    let n = qp.n as usize;
    let fixed = n - 1;
    let mut pairs = Vec::new();
    for (a, ca) in qp.cells.iter().enumerate() {
        for (b, cb) in qp.cells.iter().enumerate().skip(a + 1) {
            let diff: Vec<usize> = (0..ca.signs.len()).filter(|&i| ca.signs[i] != cb.signs[i]).collect();
            if diff.len() == 1 && diff[0] >= fixed {
                pairs.push((a, b, diff[0]));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut tries = 0;
    while out.len() < count && !pairs.is_empty() && tries < 20 * count {
        tries += 1;
        let (a, b, j) = pairs[rng.gen_range(0..pairs.len())];
        let strict: Vec<(&Wall, i8)> = qp
            .walls
            .iter()
            .zip(&qp.cells[a].signs)
            .enumerate()
            .filter(|(i, _)| *i != j)
            .map(|(_, (w, &s))| (w, s))
            .collect();
        let Some(centre) = interior_point(n, &strict, &[&qp.walls[j]]) else { continue };
        // random direction inside the wall, then a random fraction of the longest admissible step
        let w = &qp.walls[j];
        let r: Vec<Q> = (0..n).map(|_| qi(rng.gen_range(-9..=9))).collect();
        let ww: i64 = w.iter().map(|&a| (a * a) as i64).sum();
        let proj = dot(w, &r) / qi(ww);
        let u: Vec<Q> = r.iter().zip(w).map(|(ri, &a)| ri - &proj * qi(a as i64)).collect();
        let mut step: Option<Q> = None;
        for (f, s) in &strict {
            let du = dot(f, &u) * qi(*s as i64);
            if du.is_negative() {
                let lim = dot(f, &centre) * qi(*s as i64) / -du;
                if step.as_ref().is_none_or(|m| lim < *m) {
                    step = Some(lim);
                }
            }
        }
        let frac = Q::new(rng.gen_range(1..=9).into(), 10.into());
        let lambda = step.map(|m| m * frac).unwrap_or_else(Q::one);
        let x: Vec<Q> = centre.iter().zip(&u).map(|(c, ui)| c + &lambda * ui).collect();
        let scale = Q::new(rng.gen_range(1..=97i64).into(), 7.into());
        out.push((x.iter().map(|v| v * &scale).collect(), a, b));
    }
    out
}

/// Value at zero of the all-even polynomial, read off along a ray.
///
/// On the ray `t·v` with `v = (2, 4, 8, …)` (which avoids every wall) the
/// all-even count is a polynomial in `t` of degree `6g - 6 + 2n`; its value
/// at `t = 0` is recovered by exact interpolation through `t = 1..=d+1`.
pub fn constant_term_by_ray(two_g: u32, n: u32, table: &CountTable) -> Result<BPoly> {
    if level(two_g, n) <= 0 {
        return precondition(format!("2g-2+n must be positive, got 2g={two_g}, n={n}"));
    }
    let d = degree(two_g, n);
    let v: Vec<u32> = (0..n).map(|i| 2u32 << i).collect();
    let ts: Vec<Q> = (1..=d as i64 + 2).map(qi).collect();
    let mut ys = Vec::with_capacity(ts.len());
    for t in 1..=d + 2 {
        let l: Vec<u32> = v.iter().map(|&x| x * t).collect();
        ys.push(count_recursive_in(two_g, n, &l, table)?);
    }
    let c = interpolate_univariate(&ts, &ys)?;
    if !c[d as usize + 1].is_zero() {
        return Err(Error::CrossCheck("ray samples are not polynomial of the expected degree".into()));
    }
    Ok(c[0].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn wall_lists() {
        assert_eq!(walls(1).len(), 0);
        assert_eq!(walls(2), vec![vec![1, -1]]);
        let w3 = walls(3);
        assert_eq!(w3.len(), 6);
        assert_eq!(walls(4).len(), 25);
        for w in &w3 {
            assert_eq!(w.iter().find(|&&x| x != 0), Some(&1));
        }
    }

    #[test]
    fn cells_have_interior_points() {
        for n in 1..=4 {
            let (ws, cells) = sorted_cells(n).unwrap();
            for c in &cells {
                for (w, &s) in ws.iter().zip(&c.signs) {
                    assert_eq!(sign_of(&dot(w, &c.point)), s);
                }
                assert!(c.point.iter().all(|x| x.is_positive()));
            }
            let mut seen: Vec<&Vec<i8>> = cells.iter().map(|c| &c.signs).collect();
            seen.sort();
            seen.dedup();
            assert_eq!(seen.len(), cells.len());
        }
        // n = 3: L1 > L2 > L3, split by L1 = L2 + L3 only
        assert_eq!(sorted_cells(3).unwrap().1.len(), 2);
    }

    #[test]
    fn base_reconstructions() {
        let t = CountTable::in_memory();
        let cfg = QuasiConfig::default();
        let qp = reconstruct_with(2, 1, &t, &cfg).unwrap();
        let l = MPoly::var(1, 0);
        let want = (&(&l * &l) - &MPoly::int(1, 4)).scale_bpoly(&BPoly::one_plus_b())
            + (&(&(&l * &l).scale(&qi(5)) - &l.scale(&qi(12))) + &MPoly::int(1, 4)).scale_bpoly(&BPoly::b().pow(2));
        assert_eq!(qp.piece(0, &[0]).unwrap(), &want.scale(&q(1, 96)));
        assert_eq!(
            evaluate(&qp, &[qzero()], &[0]).unwrap(),
            BPoly::from_coeffs(vec![q(-1, 24), q(-1, 24), q(1, 24)])
        );
        let lead = leading_part(&qp).unwrap();
        assert_eq!(
            lead.piece(0, &[0]).unwrap(),
            &(&l * &l).scale_bpoly(&BPoly::from_coeffs(vec![q(1, 96), q(1, 96), q(5, 96)]))
        );
        assert_eq!(
            constant_term_by_ray(2, 1, &t).unwrap(),
            BPoly::from_coeffs(vec![q(-1, 24), q(-1, 24), q(1, 24)])
        );

        let qp = reconstruct_with(1, 2, &t, &cfg).unwrap();
        let lead = leading_part(&qp).unwrap();
        assert_eq!(lead.cells.len(), 1);
        assert_eq!(lead.piece(0, &[0, 0]).unwrap(), &MPoly::var(2, 0).scale_bpoly(&BPoly::b()).scale(&q(1, 4)));
        assert_eq!(
            evaluate(&qp, &[qi(3), qi(7)], &[1, 1]).unwrap(),
            BPoly::from_coeffs(vec![qzero(), q(3, 2)])
        );
        assert!(reconstruct_with(1, 3, &t, &QuasiConfig { max_level: 1, seed: 0 }).is_err());
    }
}

/// Closed forms of the all-parity pieces for `2g - 2 + n ≤ 2`.
pub mod closed_forms {
    use super::*;

    /// The piece with `k` odd perimeters, written in variables `ys` (odd ones
    /// first) with `delta = max(2L_i - ΣL, 0)` already resolved on a chamber.
    /// `None` when no closed form is on record for that class.
    pub fn piece(two_g: u32, n: u32, k: usize, ys: &[MPoly], delta: &MPoly) -> Option<MPoly> {
        let nv = ys.first()?.nvars();
        let c = |a: i64| MPoly::int(nv, a);
        let s1 = ys.iter().fold(MPoly::zero(nv), |a, y| &a + y);
        let s2 = ys.iter().fold(MPoly::zero(nv), |a, y| &a + &(y * y));
        let pr = ys.iter().fold(c(1), |a, y| &a * y);
        let b = BPoly::b();
        let d = delta;
        let rq = |a: i64, den: i64| Q::new(a.into(), den.into());
        Some(match (two_g, n, k) {
            (0, 3, 0 | 2) => c(1).scale(&rq(1, 2)),
            (1, 2, 0 | 2) => {
                // max(L1, L2) = (ΣL + Δ) / 2 for two boundaries
                let m = (&s1 + d).scale(&rq(1, 2));
                (&m - &c(1)).scale_bpoly(&b).scale(&rq(1, 4))
            }
            (2, 1, 0) => {
                let l = &ys[0];
                let a = &(l * l) - &c(4);
                let e = &(&(l * l).scale(&qi(5)) - &l.scale(&qi(12))) + &c(4);
                (&a.scale_bpoly(&BPoly::one_plus_b()) + &e.scale_bpoly(&b.pow(2))).scale(&rq(1, 96))
            }
            (0, 4, 0 | 4) => (&s2 - &c(4)).scale(&rq(1, 8)),
            (0, 4, 2) => (&s2 - &c(2)).scale(&rq(1, 8)),
            (1, 3, 0 | 2) => {
                let mut t = &(&d.pow(3) - &d.scale(&qi(4))) + &(&(&s1 - &c(2)) * &(&s2 - &c(4))).scale(&qi(3));
                t = &t - &pr.scale(&qi(6));
                if k == 2 {
                    t = &t + &(&(&ys[0] + &ys[1]) - &c(2)).scale(&qi(6));
                }
                t.scale_bpoly(&b).scale(&rq(1, 96))
            }
            (2, 2, 0 | 2) => {
                let six = if k == 0 { c(6) } else { c(0) };
                let inner = &(&(&s2 + &pr.scale(&qi(2))) - &s1.scale(&qi(6))) + &six;
                let mut t = &d.pow(4) + &(&d.pow(3) * &(&s1 - &c(2))).scale(&qi(4));
                t = &t + &(&d.pow(2) * &inner).scale(&qi(2));
                t = &t - &(d * &(&s1 - &c(2))).scale(&qi(16));
                if k == 2 {
                    t = &t + &(&s1 - &c(2)).pow(2).scale(&qi(12));
                }
                let tail = &(&s2.scale(&qi(3)) + &pr.scale(&qi(6))) + &(&s1.scale(&qi(6)) - &c(8));
                t = &t + &(&(&(&s1 - &c(4)) * &(&s1 - &c(2))) * &tail);
                let (u, v) = if k == 0 { (8, 4) } else { (10, 2) };
                let rest = (&(&s2 - &c(u)) * &(&s2 - &c(v))).scale_bpoly(&BPoly::one_plus_b()).scale(&rq(1, 768));
                &t.scale_bpoly(&b.pow(2)).scale(&rq(1, 1536)) + &rest
            }
            (3, 1, 0) => {
                let l = &ys[0];
                let f = &(&(l * l) - &c(4)) * &(l - &c(4));
                let g1 = &(&(l * l).scale(&qi(17)) + &l.scale(&qi(38))) - &c(60);
                let g2 = (&(l * l) - l).scale(&qi(30));
                let g = &g1.scale_bpoly(&BPoly::one_plus_b()) + &g2.scale_bpoly(&b.pow(2));
                (&f * &g).scale_bpoly(&b).scale(&rq(1, 46080))
            }
            _ => return None,
        })
    }

    /// `max(2L_i - ΣL, 0)` in the sorted coordinates of a cell.
    pub fn delta_on(qp: &QuasiPoly, cell: usize) -> MPoly {
        let n = qp.n as usize;
        let x: Vec<MPoly> = (0..n).map(|i| MPoly::var(n, i)).collect();
        if n == 1 {
            return x[0].clone();
        }
        let mut w = vec![-1; n];
        w[0] = 1;
        let j = qp.walls.iter().position(|v| *v == w).expect("dominance wall present");
        if qp.cells[cell].signs[j] > 0 {
            let s1 = x.iter().fold(MPoly::zero(n), |a, y| &a + y);
            &x[0].scale(&qi(2)) - &s1
        } else {
            MPoly::zero(n)
        }
    }

    /// Compares every piece of `qp` that has a closed form on record.
    /// Returns the number of pieces compared, or the first mismatch.
    pub fn compare(qp: &QuasiPoly) -> Result<usize> {
        let n = qp.n as usize;
        let mut compared = 0;
        for p in &qp.pieces {
            let parity = &p.chamber.parity;
            let k = parity.iter().filter(|&&v| v == 1).count();
            let mut order: Vec<usize> = (0..n).filter(|&i| parity[i] == 1).collect();
            order.extend((0..n).filter(|&i| parity[i] == 0));
            let ys: Vec<MPoly> = order.iter().map(|&i| MPoly::var(n, i)).collect();
            let delta = delta_on(qp, p.chamber.cell);
            let Some(want) = piece(qp.two_g, qp.n, k, &ys, &delta) else { continue };
            if want != p.poly {
                return Err(Error::CrossCheck(format!(
                    "closed form mismatch for 2g={} n={} parity {:?} on chamber {}: got {}, want {}",
                    qp.two_g, qp.n, parity, p.chamber.cell, p.poly, want
                )));
            }
            compared += 1;
        }
        Ok(compared)
    }
}
