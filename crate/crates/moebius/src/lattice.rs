//! Direct lattice point counts: enumeration of integral metrics with given
//! perimeters, summed over graphs with measure and automorphism weights.
//! Also the count over ciliated graphs, which uses trimming.
//!
//! Counts are assembled from unlabelled classes. A labelled class sum
//! `Σ 1/|Aut_lab|` over all face labellings equals `n!/|Aut|` for the
//! underlying unlabelled graph, so each metric contributes to the sorted
//! perimeter vector with weight `∏ m_j! / |Aut|`, where `m_j` are the
//! multiplicities of equal perimeters.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::bpoly::BPoly;
use crate::enumerate::{enumerate_graphs_with, unlabelled_classes, EnumConfig, UnlabelledClass};
use crate::error::{Error, Result};
use crate::mon::{neighbours_off_edge, split_case, MonEngine};
use crate::rational::{factorial, qi, Q};
use crate::surface_graph::{state, state_dart, state_eps, MoebiusGraph, State};

/// Sorted perimeter vector used as a table key.
pub type LKey = Vec<u32>;

/// All positive integral metrics with perimeter vector `target` (rows of the
/// adjacency matrix in face-label order, or face-index order when unlabelled).
pub fn integral_metrics(g: &MoebiusGraph, target: &[u32]) -> Result<Vec<Vec<u32>>> {
    let a = g.adjacency_matrix();
    if target.len() != a.len() {
        return Err(Error::Precondition(format!(
            "{} perimeters for {} faces",
            target.len(),
            a.len()
        )));
    }
    if target.iter().any(|&x| x == 0) {
        return Err(Error::Precondition("perimeters must be positive".into()));
    }
    Ok(solve_metrics(&a, target))
}

fn solve_metrics(a: &[Vec<u8>], target: &[u32]) -> Vec<Vec<u32>> {
    let n = a.len();
    let m = a.first().map_or(0, |r| r.len());
    let total: u64 = target.iter().map(|&x| x as u64).sum();
    if total % 2 == 1 || m == 0 {
        return Vec::new();
    }
    // edges with a doubled incidence first (they consume budget fastest)
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&e| std::cmp::Reverse((0..n).map(|i| a[i][e]).max().unwrap()));
    // need[k][i]: minimal budget that edges order[k..] still take from face i
    let mut need = vec![vec![0i64; n]; m + 1];
    for k in (0..m).rev() {
        for i in 0..n {
            need[k][i] = need[k + 1][i] + a[i][order[k]] as i64;
        }
    }
    let mut rem: Vec<i64> = target.iter().map(|&x| x as i64).collect();
    let mut cur = vec![0u32; m];
    let mut out = Vec::new();
    fn rec(
        k: usize,
        a: &[Vec<u8>],
        order: &[usize],
        need: &[Vec<i64>],
        rem: &mut [i64],
        cur: &mut [u32],
        out: &mut Vec<Vec<u32>>,
    ) {
        let n = rem.len();
        if k == order.len() {
            if rem.iter().all(|&r| r == 0) {
                out.push(cur.to_vec());
            }
            return;
        }
        let e = order[k];
        let mut hi = i64::MAX;
        for i in 0..n {
            let c = a[i][e] as i64;
            if c > 0 {
                hi = hi.min((rem[i] - need[k + 1][i]) / c);
            }
        }
        for len in 1..=hi {
            for i in 0..n {
                rem[i] -= a[i][e] as i64 * len;
            }
            cur[e] = len as u32;
            if (0..n).all(|i| rem[i] >= need[k + 1][i]) {
                rec(k + 1, a, order, need, rem, cur, out);
            }
            for i in 0..n {
                rem[i] += a[i][e] as i64 * len;
            }
        }
    }
    rec(0, a, &order, &need, &mut rem, &mut cur, &mut out);
    out.sort();
    out
}

/// Compositions with `Σ ℓ ≤ max_total`, all parts positive.
fn metrics_up_to(m: usize, max_total: u32, f: &mut dyn FnMut(&[u32])) {
    fn rec(k: usize, left: u32, cur: &mut Vec<u32>, f: &mut dyn FnMut(&[u32])) {
        if k == cur.len() {
            f(cur);
            return;
        }
        let slots = (cur.len() - k - 1) as u32;
        if left < slots + 1 {
            return;
        }
        for x in 1..=left - slots {
            cur[k] = x;
            rec(k + 1, left - x, cur, f);
        }
    }
    if m == 0 || (max_total as usize) < m {
        return;
    }
    let mut cur = vec![0; m];
    rec(0, max_total, &mut cur, f);
}

fn multiplicity_weight(key: &[u32]) -> Q {
    let mut w = Q::one();
    let mut i = 0;
    while i < key.len() {
        let mut j = i;
        while j < key.len() && key[j] == key[i] {
            j += 1;
        }
        w *= factorial((j - i) as u32);
        i = j;
    }
    w
}

fn perimeters_int(a: &[Vec<u8>], l: &[u32]) -> Vec<u32> {
    a.iter()
        .map(|row| row.iter().zip(l).map(|(&c, &x)| c as u32 * x).sum())
        .collect()
}

fn to_q(l: &[u32]) -> Vec<Q> {
    l.iter().map(|&x| qi(x as i64)).collect()
}

fn check_type(two_g: u32, n: u32, l: &[u32]) -> Result<()> {
    if two_g as i64 + n as i64 - 2 <= 0 {
        return Err(Error::Precondition("need 2g-2+n > 0".into()));
    }
    if l.len() != n as usize || l.iter().any(|&x| x == 0) {
        return Err(Error::Precondition(format!("need {n} positive perimeters")));
    }
    Ok(())
}

/// Generic table builder: for every class and metric with `Σ ℓ ≤ max_sum/2`,
/// add `f(G, ℓ)` times the orbit weight to the sorted perimeter vector.
fn table_by_metrics<F>(classes: &[UnlabelledClass], max_sum: u32, f: F) -> BTreeMap<LKey, BPoly>
where
    F: Fn(&MoebiusGraph, &[u32]) -> BPoly + Sync,
{
    let parts: Vec<BTreeMap<LKey, BPoly>> = classes
        .par_iter()
        .map(|c| {
            let a = c.graph.adjacency_matrix();
            let inv_aut = Q::one() / qi(c.aut as i64);
            let mut local: BTreeMap<LKey, BPoly> = BTreeMap::new();
            metrics_up_to(c.graph.num_edges(), max_sum / 2, &mut |l| {
                let mut key = perimeters_int(&a, l);
                key.sort_unstable();
                let w = multiplicity_weight(&key) * &inv_aut;
                let v = f(&c.graph, l);
                local.entry(key).or_default().add_scaled(&v, &w);
            });
            local
        })
        .collect();
    let mut out: BTreeMap<LKey, BPoly> = BTreeMap::new();
    for p in parts {
        for (k, v) in p {
            *out.entry(k).or_default() += &v;
        }
    }
    out
}

fn single_by_metrics<F>(classes: &[UnlabelledClass], l: &[u32], f: F) -> BPoly
where
    F: Fn(&MoebiusGraph, &[u32]) -> BPoly + Sync,
{
    let mut key = l.to_vec();
    key.sort_unstable();
    let mult = multiplicity_weight(&key);
    let targets = distinct_permutations(&key);
    classes
        .par_iter()
        .map(|c| {
            let a = c.graph.adjacency_matrix();
            let mut acc = BPoly::zero();
            for t in &targets {
                for m in solve_metrics(&a, t) {
                    acc += &f(&c.graph, &m);
                }
            }
            acc.scale(&(&mult / qi(c.aut as i64)))
        })
        .reduce(BPoly::zero, |x, y| x + y)
}

fn distinct_permutations(sorted: &[u32]) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = sorted.to_vec();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (0..cur.len().saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            break;
        };
        let j = (i + 1..cur.len()).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    out
}

fn mon_at(g: &MoebiusGraph, l: &[u32]) -> BPoly {
    MonEngine::global().mon(g, &to_q(l)).expect("positive metric")
}

/// Refined lattice point count by direct enumeration.
pub fn count_direct_with(two_g: u32, n: u32, l: &[u32], cfg: &EnumConfig) -> Result<BPoly> {
    check_type(two_g, n, l)?;
    if l.iter().sum::<u32>() % 2 == 1 {
        return Ok(BPoly::zero());
    }
    let classes = unlabelled_classes(two_g, n, cfg)?;
    Ok(single_by_metrics(&classes, l, mon_at))
}

pub fn count_direct(two_g: u32, n: u32, l: &[u32]) -> Result<BPoly> {
    count_direct_with(two_g, n, l, &EnumConfig::default())
}

/// Direct counts for every sorted `L` with `Σ L ≤ max_sum` at which some graph
/// has a metric (absent keys are zero).
pub fn count_direct_table(two_g: u32, n: u32, max_sum: u32, cfg: &EnumConfig) -> Result<BTreeMap<LKey, BPoly>> {
    if two_g as i64 + n as i64 - 2 <= 0 {
        return Err(Error::Precondition("need 2g-2+n > 0".into()));
    }
    let classes = unlabelled_classes(two_g, n, cfg)?;
    Ok(table_by_metrics(&classes, max_sum, mon_at))
}

/// The same count summed over the face-labelled inventory, without the
/// orbit shortcut. Slower; used as a cross-check.
pub fn count_direct_labelled(two_g: u32, n: u32, l: &[u32], cfg: &EnumConfig) -> Result<BPoly> {
    check_type(two_g, n, l)?;
    let inv = enumerate_graphs_with(two_g, n, cfg)?;
    Ok(inv
        .entries
        .par_iter()
        .map(|e| {
            let mut acc = BPoly::zero();
            for m in integral_metrics(&e.graph, l).unwrap() {
                acc += &mon_at(&e.graph, &m);
            }
            acc.scale(&(Q::one() / qi(e.aut as i64)))
        })
        .reduce(BPoly::zero, |x, y| x + y))
}

// ----- trimming ----------------------------------------------------------------

/// Result of deleting an edge (or its lollipop) and smoothing 2-valent vertices.
#[derive(Clone, Debug)]
pub struct Trimmed {
    pub graph: MoebiusGraph,
    pub lengths: Vec<Q>,
    /// Original edges deleted in the first step.
    pub removed: Vec<usize>,
    /// Old state to new state for states on surviving edges.
    pub state_map: Vec<Option<State>>,
}

/// If `e` is the stick or the candy of a lollipop, returns `(stick, candy)`.
pub fn lollipop_of(g: &MoebiusGraph, e: usize) -> Option<(usize, usize)> {
    let [a, b] = g.pairing()[e];
    if g.is_loop(e) {
        let w = g.vertex_of(a);
        if g.degree(w) == 3 {
            let other = g.rotations()[w].iter().find(|&&d| d != a && d != b).copied()?;
            return Some((g.edge_of(other), e));
        }
        return None;
    }
    for d in [a, b] {
        let w = g.vertex_of(d);
        if g.degree(w) != 3 {
            continue;
        }
        let rest: Vec<usize> = g.rotations()[w].iter().copied().filter(|&x| x != d).collect();
        if g.edge_of(rest[0]) == g.edge_of(rest[1]) {
            return Some((e, g.edge_of(rest[0])));
        }
    }
    None
}

/// Trims `g` at edge `e` (metric `lengths`).
pub fn trim(g: &MoebiusGraph, e: usize, lengths: &[Q]) -> Result<Trimmed> {
    if e >= g.num_edges() || lengths.len() != g.num_edges() {
        return Err(Error::Precondition("edge or metric out of range".into()));
    }
    let removed = match lollipop_of(g, e) {
        Some((s, c)) => vec![s, c],
        None => vec![e],
    };
    let (h, dmap) = g.remove_edges(&removed);
    let mut smap: Vec<Option<State>> = (0..g.num_states())
        .map(|s| dmap[state_dart(s)].map(|d| state(d, state_eps(s))))
        .collect();
    let mut lens: Vec<Q> = (0..g.num_edges())
        .filter(|f| !removed.contains(f))
        .map(|f| lengths[f].clone())
        .collect();
    // dropping isolated vertices does not renumber darts
    let mut cur = h.drop_isolated_vertices();
    loop {
        let Some(v) = (0..cur.num_vertices()).find(|&v| {
            let r = &cur.rotations()[v];
            r.len() == 2 && cur.edge_of(r[0]) != cur.edge_of(r[1])
        }) else {
            break;
        };
        let (next, emap, m) = cur.smooth_vertex(v).expect("2-valent vertex smooths");
        let mut nl = vec![Q::zero(); next.num_edges()];
        for (old, &new) in emap.iter().enumerate() {
            nl[new] += &lens[old];
        }
        lens = nl;
        for x in smap.iter_mut() {
            if let Some(s) = x {
                *x = Some(m[*s]);
            }
        }
        cur = next;
    }
    Ok(Trimmed {
        graph: cur,
        lengths: lens,
        removed,
        state_map: smap,
    })
}

/// Removal types for ciliated roots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CiliatedCase {
    Reduce,
    Excise,
    SplitConnectedAligned,
    SplitConnectedReversed,
    SplitDisconnected,
}

impl CiliatedCase {
    pub fn weight(self) -> BPoly {
        match self {
            CiliatedCase::Excise | CiliatedCase::SplitConnectedReversed => BPoly::b(),
            _ => BPoly::one(),
        }
    }
}

/// Case, weight and trimmed measure for a root of a metric graph.
pub fn ciliated_root(g: &MoebiusGraph, r: State, lengths: &[Q]) -> Result<(CiliatedCase, BPoly)> {
    let e = g.state_edge(r);
    let t = trim(g, e, lengths)?;
    let case = if !t.graph.is_connected() {
        CiliatedCase::SplitDisconnected
    } else {
        match t.graph.face_count() as i64 - g.face_count() as i64 {
            -1 => CiliatedCase::Reduce,
            0 => CiliatedCase::Excise,
            1 => {
                let (mut nx, mut pv) = neighbours_off_edge(g, r, e);
                while t.removed.contains(&g.state_edge(nx)) {
                    nx = g.step(nx);
                }
                while t.removed.contains(&g.state_edge(pv)) {
                    pv = g.step_back(pv);
                }
                let nx = t.state_map[nx].expect("surviving state");
                let pv = t.state_map[pv].expect("surviving state");
                match split_case(&t.graph, nx, pv) {
                    crate::mon::WeightCase::FaceSplitAligned => CiliatedCase::SplitConnectedAligned,
                    _ => CiliatedCase::SplitConnectedReversed,
                }
            }
            d => {
                return Err(Error::CrossCheck(format!("trimming changed the face count by {d}")));
            }
        }
    };
    let rho = MonEngine::global().mon(&t.graph, &t.lengths)?;
    Ok((case, &case.weight() * &rho))
}

/// `Σ_r ℓ_{e_r} ρ′_r` for one metric graph.
pub fn ciliated_sum(g: &MoebiusGraph, lengths: &[Q]) -> Result<BPoly> {
    let mut acc = BPoly::zero();
    for r in 0..g.num_states() {
        let (_, v) = ciliated_root(g, r, lengths)?;
        acc.add_scaled(&v, &lengths[g.state_edge(r)]);
    }
    Ok(acc)
}

fn ciliated_at(g: &MoebiusGraph, l: &[u32]) -> BPoly {
    ciliated_sum(g, &to_q(l)).expect("trimming succeeds on valency-3 graphs")
}

/// Count over ciliated graphs.
pub fn ciliated_count_with(two_g: u32, n: u32, l: &[u32], cfg: &EnumConfig) -> Result<BPoly> {
    check_type(two_g, n, l)?;
    if l.iter().sum::<u32>() % 2 == 1 {
        return Ok(BPoly::zero());
    }
    let classes = unlabelled_classes(two_g, n, cfg)?;
    Ok(single_by_metrics(&classes, l, ciliated_at))
}

pub fn ciliated_count(two_g: u32, n: u32, l: &[u32]) -> Result<BPoly> {
    ciliated_count_with(two_g, n, l, &EnumConfig::default())
}

pub fn ciliated_count_table(two_g: u32, n: u32, max_sum: u32, cfg: &EnumConfig) -> Result<BTreeMap<LKey, BPoly>> {
    if two_g as i64 + n as i64 - 2 <= 0 {
        return Err(Error::Precondition("need 2g-2+n > 0".into()));
    }
    let classes = unlabelled_classes(two_g, n, cfg)?;
    Ok(table_by_metrics(&classes, max_sum, ciliated_at))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use crate::surface_graph::fixtures::*;

    #[test]
    fn metric_solutions() {
        let g = single_loop(true);
        assert_eq!(integral_metrics(&g, &[4]).unwrap(), vec![vec![2]]);
        assert!(integral_metrics(&g, &[3]).unwrap().is_empty());
        let t = theta([0, 0, 0]);
        // faces of the planar theta each use two edges once
        let sols = integral_metrics(&t, &[2, 2, 2]).unwrap();
        assert_eq!(sols, vec![vec![1, 1, 1]]);
        assert!(integral_metrics(&t, &[2, 2, 3]).unwrap().is_empty());
        for s in integral_metrics(&klein_one_hole(), &[12]).unwrap() {
            assert_eq!(s.iter().sum::<u32>(), 6);
        }
    }

    #[test]
    fn composition_generator() {
        let mut c = 0;
        metrics_up_to(3, 5, &mut |_| c += 1);
        // compositions of 3, 4, 5 into three parts: 1 + 3 + 6
        assert_eq!(c, 10);
        assert_eq!(distinct_permutations(&[1, 1, 2]).len(), 3);
    }

    #[test]
    fn base_counts() {
        assert_eq!(count_direct(0, 3, &[1, 1, 2]).unwrap(), BPoly::constant(q(1, 2)));
        assert_eq!(count_direct(0, 3, &[1, 1, 1]).unwrap(), BPoly::zero());
        assert_eq!(count_direct(1, 2, &[3, 1]).unwrap(), BPoly::from_coeffs(vec![q(0, 1), q(1, 2)]));
        assert_eq!(
            count_direct(2, 1, &[4]).unwrap(),
            BPoly::from_coeffs(vec![q(1, 8), q(1, 8), q(3, 8)])
        );
        assert_eq!(count_direct(0, 4, &[2, 2, 2, 2]).unwrap(), BPoly::constant(q(3, 2)));
    }

    #[test]
    fn orbit_sum_matches_labelled_sum() {
        let cfg = EnumConfig::default();
        for (tg, n, l) in [(0u32, 3u32, vec![2u32, 4, 2]), (1, 3, vec![1, 2, 3]), (2, 2, vec![3, 3]), (0, 4, vec![1, 1, 2, 2])] {
            assert_eq!(
                count_direct_with(tg, n, &l, &cfg).unwrap(),
                count_direct_labelled(tg, n, &l, &cfg).unwrap()
            );
        }
        let table = count_direct_table(1, 3, 8, &cfg).unwrap();
        for (k, v) in &table {
            assert_eq!(v, &count_direct_with(1, 3, k, &cfg).unwrap(), "L = {k:?}");
        }
    }

    #[test]
    fn trimming_merges_lengths() {
        // planar theta: deleting one edge leaves a 2-cycle that smooths to a loop
        let g = theta([0, 0, 0]);
        let t = trim(&g, 0, &[qi(1), qi(2), qi(3)]).unwrap();
        assert_eq!(t.graph.num_edges(), 1);
        assert_eq!(t.lengths, vec![qi(5)]);
        // dumbbell: the stick and one candy go
        let d = MoebiusGraph::new(vec![vec![0, 1, 2], vec![3, 4, 5]], vec![[0, 3], [1, 2], [4, 5]], vec![0, 0, 0]).unwrap();
        assert_eq!(lollipop_of(&d, 0), Some((0, 1)));
        assert_eq!(lollipop_of(&d, 2), Some((0, 2)));
        let t = trim(&d, 2, &[qi(1), qi(1), qi(1)]).unwrap();
        assert_eq!(t.graph.num_vertices(), 1);
        assert_eq!(t.graph.num_edges(), 1);
    }

    #[test]
    fn ciliated_identity_small() {
        let n = count_direct(0, 3, &[2, 2, 2]).unwrap();
        let c = ciliated_count(0, 3, &[2, 2, 2]).unwrap();
        assert_eq!(c, n.scale_int(12));
        assert_eq!(c, BPoly::constant(qi(6)));
        assert_eq!(ciliated_count(1, 2, &[2, 2]).unwrap(), BPoly::from_ints(&[0, 2]));
    }
}
