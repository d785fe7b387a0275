//! Measure of non-orientability of metric Möbius graphs.
//!
//! The value is an average over roots (oriented ribbon sides), weighted by
//! edge length, of a per-root weight times the value on the graph with the
//! root edge deleted. The weight depends on how the deletion changes the
//! face structure; in the face-splitting case it compares two orientations
//! of a boundary produced by the face-orientation algorithm.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use num_traits::{One, Signed, Zero};

use crate::bpoly::BPoly;
use crate::error::{Error, Result};
use crate::rational::{qi, Q};
use crate::surface_graph::{state, state_dart, state_eps, CanonicalCode, MoebiusGraph, State};

/// A root: an oriented side of an edge, i.e. a traversal state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Root(pub State);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WeightCase {
    Disconnecting,
    FaceMerge,
    FaceKeep,
    FaceSplitAligned,
    FaceSplitReversed,
}

impl WeightCase {
    /// The weight as `(coefficient of 1, coefficient of b)`.
    pub fn weight_pair(self) -> (i64, i64) {
        match self {
            WeightCase::Disconnecting | WeightCase::FaceMerge | WeightCase::FaceSplitAligned => (1, 0),
            WeightCase::FaceKeep | WeightCase::FaceSplitReversed => (0, 1),
        }
    }

    pub fn weight(self) -> BPoly {
        let (a, c) = self.weight_pair();
        BPoly::from_ints(&[a, c])
    }
}

/// All `4|E|` roots, in state order.
pub fn roots(g: &MoebiusGraph) -> Result<Vec<Root>> {
    if g.num_edges() == 0 {
        return Err(Error::Precondition("graph has no edges".into()));
    }
    Ok((0..g.num_states()).map(Root).collect())
}

/// Result of the face-orientation algorithm.
#[derive(Clone, Debug)]
pub struct OrientationOrder {
    /// Every half-edge once, as the state carrying its assigned orientation.
    pub order: Vec<State>,
    /// Indexed by side id (see [`MoebiusGraph::side_of`]); `usize::MAX` off sides.
    pub assigned: Vec<State>,
}

impl OrientationOrder {
    /// The orientation given to the side carrying `s`.
    pub fn orientation_of(&self, g: &MoebiusGraph, s: State) -> State {
        self.assigned[g.side_of(s)]
    }
}

/// Orders and orients all half-edges starting from `root`: its boundary walk
/// is listed first; the list is then scanned in order and whenever a listed
/// half-edge has an unlisted opposite, the walk of that opposite (oriented
/// against the current one) is appended.
pub fn face_orientation_order(g: &MoebiusGraph, root: Root) -> Result<OrientationOrder> {
    if !g.is_connected() {
        return Err(Error::Precondition("graph must be connected".into()));
    }
    Ok(orientation_from(g, root.0))
}

fn orientation_from(g: &MoebiusGraph, root: State) -> OrientationOrder {
    let ns = g.num_states();
    let mut assigned = vec![usize::MAX; ns];
    let mut order = Vec::with_capacity(ns / 2);
    let push_walk = |s: State, order: &mut Vec<State>, assigned: &mut Vec<State>| {
        let mut t = s;
        loop {
            assigned[g.side_of(t)] = t;
            order.push(t);
            t = g.step(t);
            if t == s {
                break;
            }
        }
    };
    push_walk(root, &mut order, &mut assigned);
    let mut i = 0;
    while i < order.len() {
        let o = g.opposite(order[i]);
        if assigned[g.side_of(o)] == usize::MAX {
            push_walk(o, &mut order, &mut assigned);
        }
        i += 1;
    }
    OrientationOrder { order, assigned }
}

/// Face-splitting case: compares the orientation along the old walk of the
/// state before the root with the one induced on `h` from the state after
/// it. `prev` and `next` are already expressed as states of `h`.
pub(crate) fn split_case(h: &MoebiusGraph, next: State, prev: State) -> WeightCase {
    let ord = orientation_from(h, next);
    if ord.orientation_of(h, prev) == prev {
        WeightCase::FaceSplitAligned
    } else {
        WeightCase::FaceSplitReversed
    }
}

fn map_state(dmap: &[Option<usize>], s: State) -> State {
    state(dmap[state_dart(s)].expect("state off the removed edge"), state_eps(s))
}

/// First state after `r` along its walk (resp. last before it) not on edge `e`.
pub(crate) fn neighbours_off_edge(g: &MoebiusGraph, r: State, e: usize) -> (State, State) {
    let mut nx = g.step(r);
    while g.state_edge(nx) == e {
        nx = g.step(nx);
    }
    let mut pv = g.step_back(r);
    while g.state_edge(pv) == e {
        pv = g.step_back(pv);
    }
    (nx, pv)
}

struct Removal {
    h: MoebiusGraph,
    dmap: Vec<Option<usize>>,
    connected: bool,
    faces: usize,
}

fn removal(g: &MoebiusGraph, e: usize) -> Removal {
    let (h, dmap) = g.remove_edges(&[e]);
    let connected = h.is_connected();
    let faces = if connected { h.face_count() } else { 0 };
    Removal {
        h,
        dmap,
        connected,
        faces,
    }
}

fn case_with(g: &MoebiusGraph, g_faces: usize, r: State, rm: &Removal) -> WeightCase {
    if !rm.connected {
        return WeightCase::Disconnecting;
    }
    match rm.faces as i64 - g_faces as i64 {
        -1 => WeightCase::FaceMerge,
        0 => WeightCase::FaceKeep,
        1 => {
            let e = g.state_edge(r);
            let (nx, pv) = neighbours_off_edge(g, r, e);
            split_case(&rm.h, map_state(&rm.dmap, nx), map_state(&rm.dmap, pv))
        }
        _ => unreachable!("deleting one edge changes the face count by at most one"),
    }
}

/// Removal case and weight of a root on a connected graph.
pub fn classify_root_removal(g: &MoebiusGraph, r: Root) -> Result<(WeightCase, BPoly)> {
    if !g.is_connected() {
        return Err(Error::Precondition("graph must be connected".into()));
    }
    if r.0 >= g.num_states() {
        return Err(Error::Precondition("root out of range".into()));
    }
    let rm = removal(g, g.state_edge(r.0));
    let c = case_with(g, g.face_count(), r.0, &rm);
    Ok((c, c.weight()))
}

// ----- the measure ------------------------------------------------------------

type MemoKey = (CanonicalCode, Vec<Q>);

/// Memoizing evaluator. Values are cached per isomorphism class of the
/// unlabelled graph together with its metric scaled to minimum length 1.
#[derive(Default)]
pub struct MonEngine {
    memo: RwLock<HashMap<MemoKey, BPoly>>,
}

impl MonEngine {
    pub fn new() -> Self {
        Self::default()
    }

    /// Process-wide shared engine.
    pub fn global() -> &'static MonEngine {
        static ENGINE: OnceLock<MonEngine> = OnceLock::new();
        ENGINE.get_or_init(MonEngine::new)
    }

    pub fn cached_entries(&self) -> usize {
        self.memo.read().unwrap().len()
    }

    pub fn mon(&self, g: &MoebiusGraph, lengths: &[Q]) -> Result<BPoly> {
        if lengths.len() != g.num_edges() {
            return Err(Error::Precondition(format!(
                "{} lengths for {} edges",
                lengths.len(),
                g.num_edges()
            )));
        }
        if lengths.iter().any(|l| !l.is_positive()) {
            return Err(Error::Precondition("edge lengths must be positive".into()));
        }
        Ok(self.rho(g, lengths))
    }

    fn rho(&self, g: &MoebiusGraph, lengths: &[Q]) -> BPoly {
        if g.num_edges() == 0 {
            return BPoly::one();
        }
        if g.is_connected() {
            return self.rho_connected(g, lengths);
        }
        let mut acc = BPoly::one();
        for (c, edges) in g.split_components() {
            if c.num_edges() == 0 {
                continue;
            }
            let l: Vec<Q> = edges.iter().map(|&e| lengths[e].clone()).collect();
            acc = &acc * &self.rho_connected(&c, &l);
        }
        acc
    }

    fn key(g: &MoebiusGraph, lengths: &[Q]) -> MemoKey {
        let min = lengths.iter().min().unwrap().clone();
        let mut distinct: Vec<Q> = lengths.iter().map(|l| l / &min).collect();
        distinct.sort();
        distinct.dedup();
        let ranks: Vec<u32> = lengths
            .iter()
            .map(|l| distinct.binary_search(&(l / &min)).unwrap() as u32)
            .collect();
        (g.keyed_code(&ranks).unwrap(), distinct)
    }

    fn rho_connected(&self, g: &MoebiusGraph, lengths: &[Q]) -> BPoly {
        let key = Self::key(g, lengths);
        if let Some(v) = self.memo.read().unwrap().get(&key) {
            return v.clone();
        }
        let g_faces = g.face_count();
        let total: Q = lengths.iter().sum();
        let mut acc = BPoly::zero();
        for e in 0..g.num_edges() {
            let rm = removal(g, e);
            let (mut a, mut c) = (0i64, 0i64);
            for eps in [1i8, -1] {
                for &d in &g.pairing()[e] {
                    let (x, y) = case_with(g, g_faces, state(d, eps), &rm).weight_pair();
                    a += x;
                    c += y;
                }
            }
            let rest: Vec<Q> = (0..g.num_edges())
                .filter(|&f| f != e)
                .map(|f| lengths[f].clone())
                .collect();
            let sub = self.rho(&rm.h, &rest);
            let w = BPoly::from_ints(&[a, c]);
            acc.add_scaled(&(&w * &sub), &lengths[e]);
        }
        let v = acc.scale(&(Q::one() / (qi(4) * total)));
        self.memo.write().unwrap().insert(key, v.clone());
        v
    }
}

/// Measure of non-orientability at the given edge lengths (any graph).
pub fn mon(g: &MoebiusGraph, lengths: &[Q]) -> Result<BPoly> {
    MonEngine::global().mon(g, lengths)
}

/// Value at the unit metric.
pub fn average_mon(g: &MoebiusGraph) -> Result<BPoly> {
    mon(g, &vec![Q::one(); g.num_edges()])
}

/// Checks that at `b = 0` the value is the orientability indicator.
pub fn b_zero_matches_orientability(g: &MoebiusGraph, rho: &BPoly) -> bool {
    let want = if g.is_orientable().unwrap_or(false) {
        Q::one()
    } else {
        Q::zero()
    };
    rho.eval(&Q::zero()) == want
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use crate::surface_graph::fixtures::*;

    fn b() -> BPoly {
        BPoly::b()
    }

    #[test]
    fn small_graphs() {
        let one = BPoly::one();
        assert_eq!(average_mon(&single_loop(false)).unwrap(), one);
        assert_eq!(average_mon(&single_loop(true)).unwrap(), b());
        assert_eq!(average_mon(&two_loops_apart(1, 1)).unwrap(), &b() * &b());
        assert_eq!(average_mon(&theta([0, 0, 0])).unwrap(), one);
        assert_eq!(average_mon(&theta([1, 1, 1])).unwrap(), one);
        assert_eq!(roots(&theta([0, 0, 0])).unwrap().len(), 12);
        assert!(roots(&MoebiusGraph::new(vec![vec![]], vec![], vec![]).unwrap()).is_err());
    }

    #[test]
    fn interleaved_loops() {
        // untwisted loop of length l1 interleaved with a twisted loop of length l2
        let g = two_loops_crossed(0, 1);
        for (l1, l2) in [(1, 1), (2, 5), (7, 3)] {
            let v = mon(&g, &[qi(l1), qi(l2)]).unwrap();
            let want = BPoly::from_ints(&[0, l2, l1]).scale(&q(1, l1 + l2));
            assert_eq!(v, want);
        }
        assert_eq!(average_mon(&two_loops_crossed(1, 1)).unwrap(), b());
        assert_eq!(average_mon(&two_loops_crossed(0, 0)).unwrap(), BPoly::one());
        assert_eq!(average_mon(&two_loops_apart(0, 1)).unwrap(), b());
        assert_eq!(average_mon(&digon(0, 1)).unwrap(), b());
    }

    #[test]
    fn orientation_order_covers_every_half_edge() {
        for g in [theta([0, 1, 0]), two_loops_crossed(1, 0), theta_crossed([1, 1, 0])] {
            for r in roots(&g).unwrap() {
                let o = face_orientation_order(&g, r).unwrap();
                assert_eq!(o.order.len(), 2 * g.num_edges());
                assert_eq!(o.order[0], r.0);
            }
        }
        // on an orientable graph the two sides of an edge get opposite directions
        let g = theta_crossed([0, 0, 0]);
        let o = face_orientation_order(&g, Root(0)).unwrap();
        for s in 0..g.num_states() {
            let a = o.orientation_of(&g, s);
            assert_eq!(o.orientation_of(&g, g.opposite(s)), g.opposite(a));
        }
    }

    #[test]
    fn klein_bottle_fixtures() {
        let g = klein_one_hole();
        assert_eq!(g.graph_type().unwrap(), (2, 1));
        assert_eq!(g.adjacency_matrix(), vec![vec![2, 2, 2]]);
        for l in [[1, 1, 1], [1, 2, 3], [5, 1, 4]] {
            let l: Vec<Q> = l.iter().map(|&x| qi(x)).collect();
            assert_eq!(mon(&g, &l).unwrap(), crate::verify::klein_one_hole_value(&l));
        }
        let h = klein_two_holes();
        assert_eq!(h.graph_type().unwrap(), (2, 2));
        assert_eq!(average_mon(&h).unwrap(), BPoly::from_coeffs(vec![qi(0), q(7, 30), q(23, 30)]));
        let l: Vec<Q> = [3, 1, 4, 1, 5, 9].iter().map(|&x| qi(x)).collect();
        assert_eq!(mon(&h, &l).unwrap(), crate::verify::klein_two_holes_value(&l));
    }

    #[test]
    fn rejects_bad_metrics() {
        let g = single_loop(true);
        assert!(mon(&g, &[qi(0)]).is_err());
        assert!(mon(&g, &[]).is_err());
    }
}
