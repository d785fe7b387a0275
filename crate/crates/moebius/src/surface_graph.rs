//! Signed rotation systems ("Möbius graphs") on half-edge ends.
//!
//! A graph stores, for every vertex, the cyclic order of the darts (half-edge
//! ends) around it, the fixed-point-free involution pairing darts into edges,
//! and a twist bit per edge. Boundary walks are traced over *states*: a state is
//! a dart together with a local orientation `ε = ±1`, i.e. one of the four
//! oriented ribbon sides of an edge. Twisted edges flip the orientation carried
//! by the walk.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Q;

/// Oriented ribbon side: `2 * dart + (ε == -1)`.
pub type State = usize;

#[inline]
pub fn state(dart: usize, eps: i8) -> State {
    2 * dart + usize::from(eps < 0)
}

#[inline]
pub fn state_dart(s: State) -> usize {
    s >> 1
}

#[inline]
pub fn state_eps(s: State) -> i8 {
    if s & 1 == 0 {
        1
    } else {
        -1
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct MoebiusGraph {
    rot: Vec<Vec<usize>>,
    pairing: Vec<[usize; 2]>,
    signs: Vec<u8>,
    /// Label of face `i` (index order of [`MoebiusGraph::faces`]); empty when unlabelled.
    face_labels: Vec<u32>,
    alpha: Vec<usize>,
    edge_of: Vec<usize>,
    vert_of: Vec<usize>,
    pos: Vec<usize>,
}

impl std::fmt::Debug for MoebiusGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MoebiusGraph")
            .field("rot", &self.rot)
            .field("pairing", &self.pairing)
            .field("signs", &self.signs)
            .field("face_labels", &self.face_labels)
            .finish()
    }
}

/// One boundary walk, stored in its canonical direction: the orbit containing
/// the smallest state among the walk and its reverse, starting at that state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Face {
    pub walk: Vec<State>,
}

/// Face structure of a graph: walks plus a lookup from every state to its face.
#[derive(Clone, Debug)]
pub struct FaceData {
    pub faces: Vec<Face>,
    pub face_of: Vec<usize>,
    /// Isolated vertices each bound one (empty) face; they are counted here.
    pub isolated: usize,
}

impl FaceData {
    pub fn count(&self) -> usize {
        self.faces.len() + self.isolated
    }
}

/// Canonical form of a connected graph under relabelling and flips.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalCode(pub Vec<u32>);

impl CanonicalCode {
    pub fn to_bytes(&self) -> Vec<u8> {
        self.0.iter().flat_map(|x| x.to_be_bytes()).collect()
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }
}

impl MoebiusGraph {
    /// Builds a graph from vertex rotations, the edge pairing and twist bits.
    pub fn new(rot: Vec<Vec<usize>>, pairing: Vec<[usize; 2]>, signs: Vec<u8>) -> Result<Self> {
        let nd = 2 * pairing.len();
        if signs.len() != pairing.len() {
            return Err(Error::InvalidGraph("one sign per edge required".into()));
        }
        if signs.iter().any(|&s| s > 1) {
            return Err(Error::InvalidGraph("signs must be 0 or 1".into()));
        }
        let mut alpha = vec![usize::MAX; nd];
        let mut edge_of = vec![usize::MAX; nd];
        for (e, &[a, b]) in pairing.iter().enumerate() {
            if a >= nd || b >= nd || a == b {
                return Err(Error::InvalidGraph(format!("bad pairing for edge {e}")));
            }
            if alpha[a] != usize::MAX || alpha[b] != usize::MAX {
                return Err(Error::InvalidGraph(format!("dart paired twice at edge {e}")));
            }
            alpha[a] = b;
            alpha[b] = a;
            edge_of[a] = e;
            edge_of[b] = e;
        }
        let mut vert_of = vec![usize::MAX; nd];
        let mut pos = vec![usize::MAX; nd];
        for (v, r) in rot.iter().enumerate() {
            for (i, &d) in r.iter().enumerate() {
                if d >= nd || vert_of[d] != usize::MAX {
                    return Err(Error::InvalidGraph(format!("dart {d} misplaced in rotations")));
                }
                vert_of[d] = v;
                pos[d] = i;
            }
        }
        if vert_of.iter().any(|&v| v == usize::MAX) {
            return Err(Error::InvalidGraph("every dart must sit at a vertex".into()));
        }
        Ok(MoebiusGraph {
            rot,
            pairing,
            signs,
            face_labels: Vec::new(),
            alpha,
            edge_of,
            vert_of,
            pos,
        })
    }

    /// Attaches face labels (face-index order); `labels` must be a permutation of `1..=n`.
    pub fn with_face_labels(mut self, labels: Vec<u32>) -> Result<Self> {
        let n = self.face_data().count();
        let mut seen = vec![false; n + 1];
        if labels.len() != n {
            return Err(Error::InvalidGraph(format!("{} labels for {n} faces", labels.len())));
        }
        for &l in &labels {
            let l = l as usize;
            if l == 0 || l > n || seen[l] {
                return Err(Error::InvalidGraph("face labels must be a permutation of 1..n".into()));
            }
            seen[l] = true;
        }
        self.face_labels = labels;
        Ok(self)
    }

    pub fn without_face_labels(&self) -> Self {
        let mut g = self.clone();
        g.face_labels.clear();
        g
    }

    // ----- accessors -------------------------------------------------------

    pub fn num_vertices(&self) -> usize {
        self.rot.len()
    }

    pub fn num_edges(&self) -> usize {
        self.pairing.len()
    }

    pub fn num_darts(&self) -> usize {
        2 * self.pairing.len()
    }

    pub fn rotations(&self) -> &[Vec<usize>] {
        &self.rot
    }

    pub fn pairing(&self) -> &[[usize; 2]] {
        &self.pairing
    }

    pub fn signs(&self) -> &[u8] {
        &self.signs
    }

    pub fn sign(&self, e: usize) -> u8 {
        self.signs[e]
    }

    pub fn face_labels(&self) -> &[u32] {
        &self.face_labels
    }

    pub fn is_labelled(&self) -> bool {
        !self.face_labels.is_empty()
    }

    pub fn alpha(&self, d: usize) -> usize {
        self.alpha[d]
    }

    pub fn edge_of(&self, d: usize) -> usize {
        self.edge_of[d]
    }

    pub fn vertex_of(&self, d: usize) -> usize {
        self.vert_of[d]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.rot[v].len()
    }

    pub fn is_loop(&self, e: usize) -> bool {
        let [a, b] = self.pairing[e];
        self.vert_of[a] == self.vert_of[b]
    }

    /// Successor of dart `d` in its vertex rotation, read in direction `eps`.
    #[inline]
    pub fn sigma(&self, d: usize, eps: i8) -> usize {
        let v = self.vert_of[d];
        let k = self.rot[v].len();
        let p = self.pos[d];
        if eps > 0 {
            self.rot[v][(p + 1) % k]
        } else {
            self.rot[v][(p + k - 1) % k]
        }
    }

    #[inline]
    fn twist(&self, d: usize) -> i8 {
        if self.signs[self.edge_of[d]] == 1 {
            -1
        } else {
            1
        }
    }

    // ----- states ----------------------------------------------------------

    pub fn num_states(&self) -> usize {
        4 * self.pairing.len()
    }

    /// Next state along the boundary walk.
    #[inline]
    pub fn step(&self, s: State) -> State {
        let d = state_dart(s);
        let eps = state_eps(s) * self.twist(d);
        state(self.sigma(self.alpha[d], eps), eps)
    }

    /// Inverse of [`MoebiusGraph::step`].
    #[inline]
    pub fn step_back(&self, s: State) -> State {
        let d2 = state_dart(s);
        let eps2 = state_eps(s);
        let ad = self.sigma(d2, -eps2);
        let d = self.alpha[ad];
        state(d, eps2 * self.twist(d))
    }

    /// Same ribbon side traversed in the opposite direction.
    #[inline]
    pub fn reverse(&self, s: State) -> State {
        let d = state_dart(s);
        state(self.alpha[d], -state_eps(s) * self.twist(d))
    }

    /// The other side of the same edge, traversed in the opposite direction.
    #[inline]
    pub fn opposite(&self, s: State) -> State {
        let d = state_dart(s);
        state(self.alpha[d], state_eps(s) * self.twist(d))
    }

    /// Identifier of the (unoriented) ribbon side carrying `s`.
    #[inline]
    pub fn side_of(&self, s: State) -> usize {
        s.min(self.reverse(s))
    }

    pub fn state_edge(&self, s: State) -> usize {
        self.edge_of[state_dart(s)]
    }

    /// The walk through `s`, starting at `s`.
    pub fn orbit(&self, s: State) -> Vec<State> {
        let mut out = vec![s];
        let mut t = self.step(s);
        while t != s {
            out.push(t);
            t = self.step(t);
        }
        out
    }

    // ----- faces -----------------------------------------------------------

    pub fn face_data(&self) -> FaceData {
        let ns = self.num_states();
        let mut face_of = vec![usize::MAX; ns];
        let mut faces = Vec::new();
        for s in 0..ns {
            if face_of[s] != usize::MAX {
                continue;
            }
            // s is the smallest unvisited state, hence the smallest of its
            // walk and of the reverse walk.
            let walk = self.orbit(s);
            let id = faces.len();
            for &t in &walk {
                face_of[t] = id;
                face_of[self.reverse(t)] = id;
            }
            faces.push(Face { walk });
        }
        let isolated = self.rot.iter().filter(|r| r.is_empty()).count();
        FaceData {
            faces,
            face_of,
            isolated,
        }
    }

    /// Boundary walks; each walk lists the oriented sides it visits.
    pub fn trace_faces(&self) -> Vec<Face> {
        self.face_data().faces
    }

    pub fn face_count(&self) -> usize {
        self.face_data().count()
    }

    /// Perimeters of the faces under a metric (face-index order).
    pub fn perimeters(&self, lengths: &[Q]) -> Vec<Q> {
        self.trace_faces()
            .iter()
            .map(|f| f.walk.iter().map(|&s| lengths[self.state_edge(s)].clone()).sum())
            .collect()
    }

    /// Edge-face adjacency matrix, rows indexed by face label (or face index when unlabelled).
    pub fn adjacency_matrix(&self) -> Vec<Vec<u8>> {
        let fd = self.face_data();
        let n = fd.count();
        let mut a = vec![vec![0u8; self.num_edges()]; n];
        for (i, f) in fd.faces.iter().enumerate() {
            let row = if self.is_labelled() {
                self.face_labels[i] as usize - 1
            } else {
                i
            };
            for &s in &f.walk {
                a[row][self.state_edge(s)] += 1;
            }
        }
        a
    }

    // ----- connectivity and type ------------------------------------------

    /// Vertex sets of the connected components, in order of smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let nv = self.rot.len();
        let mut comp = vec![usize::MAX; nv];
        let mut out = Vec::new();
        for v0 in 0..nv {
            if comp[v0] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut stack = vec![v0];
            comp[v0] = id;
            let mut members = vec![];
            while let Some(v) = stack.pop() {
                members.push(v);
                for &d in &self.rot[v] {
                    let w = self.vert_of[self.alpha[d]];
                    if comp[w] == usize::MAX {
                        comp[w] = id;
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.rot.len() <= 1 || self.components().len() == 1
    }

    fn require_connected(&self) -> Result<()> {
        if self.rot.is_empty() || !self.is_connected() {
            return Err(Error::Precondition("graph must be connected".into()));
        }
        Ok(())
    }

    /// Type `(2g, n)`; the genus is returned doubled.
    pub fn graph_type(&self) -> Result<(u32, u32)> {
        self.require_connected()?;
        let n = self.face_count() as i64;
        let two_g = 2 - self.num_vertices() as i64 + self.num_edges() as i64 - n;
        if two_g < 0 {
            return Err(Error::InvalidGraph("negative genus".into()));
        }
        Ok((two_g as u32, n as u32))
    }

    /// Orientability via a spanning tree: choose vertex orientations making
    /// tree edges untwisted and check the remaining edges.
    pub fn is_orientable(&self) -> Result<bool> {
        self.require_connected()?;
        let o = self.tree_orientation();
        Ok(self
            .pairing
            .iter()
            .enumerate()
            .all(|(e, &[a, b])| self.effective_sign(e, o[self.vert_of[a]], o[self.vert_of[b]]) == 0))
    }

    fn effective_sign(&self, e: usize, ou: i8, ow: i8) -> u8 {
        self.signs[e] ^ u8::from(ou != ow)
    }

    fn tree_orientation(&self) -> Vec<i8> {
        let mut o = vec![0i8; self.rot.len()];
        for v0 in 0..self.rot.len() {
            if o[v0] != 0 {
                continue;
            }
            o[v0] = 1;
            let mut stack = vec![v0];
            while let Some(v) = stack.pop() {
                for &d in &self.rot[v] {
                    let w = self.vert_of[self.alpha[d]];
                    if o[w] == 0 {
                        o[w] = o[v] * self.twist(d);
                        stack.push(w);
                    }
                }
            }
        }
        o
    }

    // ----- edits -----------------------------------------------------------

    /// Reverses the rotation at `v` and toggles every incident edge (loops twice).
    pub fn flip(&self, v: usize) -> Result<Self> {
        if v >= self.rot.len() {
            return Err(Error::Precondition(format!("unknown vertex {v}")));
        }
        let mut rot = self.rot.clone();
        rot[v].reverse();
        let mut signs = self.signs.clone();
        for &d in &self.rot[v] {
            signs[self.edge_of[d]] ^= 1;
        }
        let mut g = MoebiusGraph::new(rot, self.pairing.clone(), signs)?;
        if self.is_labelled() {
            // flipping conjugates the walk map by (d, e) -> (d, -e) on darts at v
            let fd = self.face_data();
            let gd = g.face_data();
            let mut labels = vec![0u32; gd.faces.len()];
            for (i, f) in fd.faces.iter().enumerate() {
                let s = f.walk[0];
                let d = state_dart(s);
                let eps = if self.vert_of[d] == v { -state_eps(s) } else { state_eps(s) };
                labels[gd.face_of[state(d, eps)]] = self.face_labels[i];
            }
            g.face_labels = labels;
        }
        Ok(g)
    }

    /// Renames darts by `perm` (old dart → new dart), keeping the structure.
    pub fn relabel_darts(&self, perm: &[usize]) -> Result<Self> {
        let rot = self.rot.iter().map(|r| r.iter().map(|&d| perm[d]).collect()).collect();
        let pairing = self.pairing.iter().map(|&[a, b]| [perm[a], perm[b]]).collect();
        let mut g = MoebiusGraph::new(rot, pairing, self.signs.clone())?;
        if self.is_labelled() {
            let fd = self.face_data();
            let gd = g.face_data();
            let mut labels = vec![0u32; gd.faces.len()];
            for (i, f) in fd.faces.iter().enumerate() {
                let s = f.walk[0];
                let t = state(perm[state_dart(s)], state_eps(s));
                labels[gd.face_of[t]] = self.face_labels[i];
            }
            g.face_labels = labels;
        }
        Ok(g)
    }

    /// The same graph with the twist of edge `e` set to `sign` (labels dropped).
    pub fn with_sign(&self, e: usize, sign: u8) -> Result<Self> {
        let mut signs = self.signs.clone();
        *signs.get_mut(e).ok_or_else(|| Error::Precondition(format!("unknown edge {e}")))? = sign;
        MoebiusGraph::new(self.rot.clone(), self.pairing.clone(), signs)
    }

    /// Inserts a two-valent vertex on edge `e`. The first half keeps index `e`
    /// with twist `first`; the second half is the new last edge and carries the
    /// remaining twist, so the total colour is unchanged. Labels are dropped.
    pub fn subdivide_edge(&self, e: usize, first: u8) -> Result<Self> {
        if e >= self.num_edges() || first > 1 {
            return Err(Error::Precondition(format!("cannot subdivide edge {e}")));
        }
        let (x, y) = (self.num_darts(), self.num_darts() + 1);
        let [a, c] = self.pairing[e];
        let mut pairing = self.pairing.clone();
        pairing[e] = [a, x];
        pairing.push([y, c]);
        let mut signs = self.signs.clone();
        signs[e] = first;
        signs.push(self.signs[e] ^ first);
        let mut rot = self.rot.clone();
        rot.push(vec![x, y]);
        MoebiusGraph::new(rot, pairing, signs)
    }

    /// Attaches a pendant edge at vertex `v`, inserted before position `p` in
    /// its rotation. The new edge is the last edge. Labels are dropped.
    pub fn attach_pendant(&self, v: usize, p: usize, sign: u8) -> Result<Self> {
        if v >= self.rot.len() || p > self.rot[v].len() || sign > 1 {
            return Err(Error::Precondition(format!("cannot attach at vertex {v}")));
        }
        let (x, y) = (self.num_darts(), self.num_darts() + 1);
        let mut rot = self.rot.clone();
        rot[v].insert(p, x);
        rot.push(vec![y]);
        let mut pairing = self.pairing.clone();
        pairing.push([x, y]);
        let mut signs = self.signs.clone();
        signs.push(sign);
        MoebiusGraph::new(rot, pairing, signs)
    }

    /// Deletes the given edges (darts renumbered compactly, vertices kept, even if
    /// they become isolated). Returns the new graph and the old→new dart map.
    pub fn remove_edges(&self, edges: &[usize]) -> (MoebiusGraph, Vec<Option<usize>>) {
        let mut drop = vec![false; self.num_edges()];
        for &e in edges {
            drop[e] = true;
        }
        let mut map = vec![None; self.num_darts()];
        let mut next = 0;
        for d in 0..self.num_darts() {
            if !drop[self.edge_of[d]] {
                map[d] = Some(next);
                next += 1;
            }
        }
        let rot = self
            .rot
            .iter()
            .map(|r| r.iter().filter_map(|&d| map[d]).collect())
            .collect();
        let mut pairing = Vec::new();
        let mut signs = Vec::new();
        for (e, &[a, b]) in self.pairing.iter().enumerate() {
            if !drop[e] {
                pairing.push([map[a].unwrap(), map[b].unwrap()]);
                signs.push(self.signs[e]);
            }
        }
        let g = MoebiusGraph::new(rot, pairing, signs).expect("edge removal keeps validity");
        (g, map)
    }

    /// Deletes isolated vertices.
    pub fn drop_isolated_vertices(&self) -> MoebiusGraph {
        let rot: Vec<Vec<usize>> = self.rot.iter().filter(|r| !r.is_empty()).cloned().collect();
        let mut g = MoebiusGraph::new(rot, self.pairing.clone(), self.signs.clone())
            .expect("dropping isolated vertices keeps validity");
        g.face_labels = self.face_labels.clone();
        g
    }

    /// Splits into connected components. Each component comes with its
    /// old→new dart map and the list of original edges it contains.
    pub fn split_components(&self) -> Vec<(MoebiusGraph, Vec<usize>)> {
        let comps = self.components();
        if comps.len() == 1 {
            return vec![(self.clone(), (0..self.num_edges()).collect())];
        }
        let mut out = Vec::new();
        for members in comps {
            let mut in_comp = vec![false; self.rot.len()];
            for &v in &members {
                in_comp[v] = true;
            }
            let mut dmap = vec![usize::MAX; self.num_darts()];
            let mut next = 0;
            for d in 0..self.num_darts() {
                if in_comp[self.vert_of[d]] {
                    dmap[d] = next;
                    next += 1;
                }
            }
            let rot = members
                .iter()
                .map(|&v| self.rot[v].iter().map(|&d| dmap[d]).collect())
                .collect();
            let mut pairing = Vec::new();
            let mut signs = Vec::new();
            let mut edges = Vec::new();
            for (e, &[a, b]) in self.pairing.iter().enumerate() {
                if in_comp[self.vert_of[a]] {
                    pairing.push([dmap[a], dmap[b]]);
                    signs.push(self.signs[e]);
                    edges.push(e);
                }
            }
            let g = MoebiusGraph::new(rot, pairing, signs).expect("component keeps validity");
            out.push((g, edges));
        }
        out
    }

    /// Smooths the 2-valent vertex `v` whose two darts lie on distinct edges.
    /// The merged edge keeps the outer darts, with twist equal to the sum of
    /// the two twists. Returns the graph, the map from old edges to the new
    /// edge index, and a map from old states to new states (`None` for none).
    pub fn smooth_vertex(&self, v: usize) -> Option<(MoebiusGraph, Vec<usize>, Vec<State>)> {
        if self.rot[v].len() != 2 {
            return None;
        }
        let (x, y) = (self.rot[v][0], self.rot[v][1]);
        let (e1, e2) = (self.edge_of[x], self.edge_of[y]);
        if e1 == e2 {
            return None;
        }
        let (xo, yo) = (self.alpha[x], self.alpha[y]);
        // new darts: keep everything except x and y
        let mut dmap = vec![usize::MAX; self.num_darts()];
        let mut next = 0;
        for d in 0..self.num_darts() {
            if d != x && d != y {
                dmap[d] = next;
                next += 1;
            }
        }
        let mut rot = Vec::new();
        for (w, r) in self.rot.iter().enumerate() {
            if w != v {
                rot.push(r.iter().map(|&d| dmap[d]).collect());
            }
        }
        let mut pairing = Vec::new();
        let mut signs = Vec::new();
        let mut emap = vec![usize::MAX; self.num_edges()];
        let merged_sign = self.signs[e1] ^ self.signs[e2];
        let lo = e1.min(e2);
        for (e, &[a, b]) in self.pairing.iter().enumerate() {
            if e == e1 || e == e2 {
                if e == lo {
                    emap[e1] = pairing.len();
                    emap[e2] = pairing.len();
                    pairing.push([dmap[xo], dmap[yo]]);
                    signs.push(merged_sign);
                }
                continue;
            }
            emap[e] = pairing.len();
            pairing.push([dmap[a], dmap[b]]);
            signs.push(self.signs[e]);
        }
        let g = MoebiusGraph::new(rot, pairing, signs).ok()?;
        let t1 = self.twist(x);
        let t2 = self.twist(y);
        let mut smap = vec![usize::MAX; self.num_states()];
        for s in 0..self.num_states() {
            let d = state_dart(s);
            let eps = state_eps(s);
            smap[s] = if d == x {
                // leaving v along e1 continues a walk that entered along e2
                state(dmap[yo], eps * t2)
            } else if d == y {
                state(dmap[xo], eps * t1)
            } else {
                state(dmap[d], eps)
            };
        }
        Some((g, emap, smap))
    }

    // ----- canonical form --------------------------------------------------

    /// Breadth-first encoding from a seed state. Vertex orientations are chosen
    /// on discovery so that search-tree edges are untwisted.
    fn encode(&self, seed: State, edge_key: Option<&[u32]>, fd: Option<&FaceData>, out: &mut Vec<u32>) {
        out.clear();
        let nd = self.num_darts();
        let mut lab = vec![u32::MAX; nd];
        let mut orient = vec![0i8; self.rot.len()];
        let mut order: Vec<usize> = Vec::with_capacity(nd);
        let visit = |v: usize, d: usize, eps: i8, lab: &mut Vec<u32>, order: &mut Vec<usize>, orient: &mut Vec<i8>| {
            orient[v] = eps;
            let k = self.rot[v].len();
            let p = self.pos[d];
            for t in 0..k {
                let idx = if eps > 0 { (p + t) % k } else { (p + k - t) % k };
                let x = self.rot[v][idx];
                lab[x] = order.len() as u32;
                order.push(x);
            }
        };
        let d0 = state_dart(seed);
        let v0 = self.vert_of[d0];
        visit(v0, d0, state_eps(seed), &mut lab, &mut order, &mut orient);
        out.push(self.rot[v0].len() as u32);
        let mut i = 0;
        while i < order.len() {
            let x = order[i];
            let y = self.alpha[x];
            let e = self.edge_of[x];
            let v = self.vert_of[x];
            let w = self.vert_of[y];
            if orient[w] == 0 {
                let ew = orient[v] * self.twist(x);
                visit(w, y, ew, &mut lab, &mut order, &mut orient);
                out.push(1000 + self.rot[w].len() as u32);
            }
            out.push(lab[y]);
            out.push(u32::from(self.effective_sign(e, orient[v], orient[w])));
            if let Some(k) = edge_key {
                out.push(k[e]);
            }
            if let Some(fd) = fd {
                let o = orient[v];
                out.push(self.face_labels[fd.face_of[state(x, o)]]);
                out.push(self.face_labels[fd.face_of[state(x, -o)]]);
            }
            i += 1;
        }
    }

    /// Minimum encoding over all seeds and the number of seeds attaining it.
    fn canonical_with(&self, edge_key: Option<&[u32]>, use_labels: bool) -> (CanonicalCode, usize) {
        if self.num_edges() == 0 {
            return (CanonicalCode(vec![0]), 1);
        }
        let fd = if use_labels && self.is_labelled() {
            Some(self.face_data())
        } else {
            None
        };
        let mut best: Option<Vec<u32>> = None;
        let mut count = 0;
        let mut buf = Vec::new();
        for s in 0..self.num_states() {
            self.encode(s, edge_key, fd.as_ref(), &mut buf);
            match &best {
                None => {
                    best = Some(buf.clone());
                    count = 1;
                }
                Some(b) => match buf.cmp(b) {
                    std::cmp::Ordering::Less => {
                        best = Some(buf.clone());
                        count = 1;
                    }
                    std::cmp::Ordering::Equal => count += 1,
                    std::cmp::Ordering::Greater => {}
                },
            }
        }
        (CanonicalCode(best.unwrap()), count)
    }

    /// Canonical code, sensitive to face labels when present.
    pub fn canonical_code(&self) -> Result<CanonicalCode> {
        self.require_connected()?;
        Ok(self.canonical_with(None, true).0)
    }

    /// Canonical code ignoring face labels.
    pub fn unlabelled_code(&self) -> Result<CanonicalCode> {
        self.require_connected()?;
        Ok(self.canonical_with(None, false).0)
    }

    /// Canonical code of an unlabelled graph whose edges carry keys (e.g. ranks
    /// of edge lengths). Used as a memo key by the MON module.
    pub fn keyed_code(&self, edge_key: &[u32]) -> Result<CanonicalCode> {
        self.require_connected()?;
        Ok(self.canonical_with(Some(edge_key), false).0)
    }

    /// Order of the automorphism group of the face-labelled graph, orientation
    /// reversal included.
    pub fn automorphism_order(&self) -> Result<usize> {
        self.require_connected()?;
        Ok(self.canonical_with(None, true).1)
    }

    /// Rebuilds the normalized graph described by a code produced without edge
    /// keys. Darts are numbered in discovery order and every vertex carries
    /// the orientation chosen by the encoding, so the result is a
    /// deterministic representative of the class.
    pub fn from_code(code: &CanonicalCode, labelled: bool) -> Result<Self> {
        let c = &code.0;
        let bad = || Error::Parse("malformed canonical code".into());
        if c == &[0] {
            return MoebiusGraph::new(vec![vec![]], vec![], vec![]);
        }
        let mut it = c.iter().copied().peekable();
        let d0 = it.next().ok_or_else(bad)? as usize;
        let mut rot: Vec<Vec<usize>> = vec![(0..d0).collect()];
        let mut next_dart = d0;
        let mut partner: Vec<usize> = Vec::new();
        let mut eff: Vec<u8> = Vec::new();
        let mut labels: Vec<(u32, u32)> = Vec::new();
        let mut i = 0;
        while i < next_dart {
            if let Some(&m) = it.peek() {
                if m >= 1000 {
                    it.next();
                    let k = (m - 1000) as usize;
                    rot.push((next_dart..next_dart + k).collect());
                    next_dart += k;
                }
            }
            let p = it.next().ok_or_else(bad)? as usize;
            let s = it.next().ok_or_else(bad)?;
            partner.push(p);
            eff.push(u8::try_from(s).map_err(|_| bad())?);
            if labelled {
                let a = it.next().ok_or_else(bad)?;
                let b = it.next().ok_or_else(bad)?;
                labels.push((a, b));
            }
            i += 1;
        }
        if it.next().is_some() {
            return Err(bad());
        }
        let mut pairing = Vec::new();
        let mut signs = Vec::new();
        for (x, &y) in partner.iter().enumerate() {
            if y >= partner.len() || partner[y] != x || eff[y] != eff[x] {
                return Err(bad());
            }
            if x < y {
                pairing.push([x, y]);
                signs.push(eff[x]);
            }
        }
        let g = MoebiusGraph::new(rot, pairing, signs)?;
        if !labelled {
            return Ok(g);
        }
        let fd = g.face_data();
        let mut fl = vec![0u32; fd.faces.len()];
        for (x, &(a, b)) in labels.iter().enumerate() {
            fl[fd.face_of[state(x, 1)]] = a;
            fl[fd.face_of[state(x, -1)]] = b;
        }
        g.with_face_labels(fl)
    }

    // ----- serialization ---------------------------------------------------

    pub fn to_json_value(&self) -> GraphJson {
        GraphJson {
            vertices: self.rot.clone(),
            pairing: self.pairing.clone(),
            signs: self
                .signs
                .iter()
                .enumerate()
                .map(|(e, &s)| (e as u32, s))
                .collect(),
            face_labels: self.face_labels.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_json_value()).expect("graph serializes")
    }

    pub fn from_json_value(j: &GraphJson) -> Result<Self> {
        let m = j.pairing.len();
        let mut signs = vec![0u8; m];
        for (&e, &s) in &j.signs {
            let e = e as usize;
            if e >= m {
                return Err(Error::InvalidGraph(format!("sign for unknown edge {e}")));
            }
            signs[e] = s;
        }
        let g = MoebiusGraph::new(j.vertices.clone(), j.pairing.clone(), signs)?;
        if j.face_labels.is_empty() {
            Ok(g)
        } else {
            g.with_face_labels(j.face_labels.clone())
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: GraphJson = serde_json::from_str(s)?;
        Self::from_json_value(&j)
    }
}

/// Wire format of a graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub vertices: Vec<Vec<usize>>,
    pub pairing: Vec<[usize; 2]>,
    pub signs: BTreeMap<u32, u8>,
    #[serde(rename = "faceLabels", default)]
    pub face_labels: Vec<u32>,
}

/// Small named graphs used by tests, examples and the verification suite.
pub mod fixtures {
    use super::MoebiusGraph;

    /// One vertex carrying one loop.
    pub fn single_loop(twisted: bool) -> MoebiusGraph {
        MoebiusGraph::new(vec![vec![0, 1]], vec![[0, 1]], vec![u8::from(twisted)]).unwrap()
    }

    /// One vertex with two loops whose ends interleave (`a b a b`).
    pub fn two_loops_crossed(s0: u8, s1: u8) -> MoebiusGraph {
        MoebiusGraph::new(vec![vec![0, 1, 2, 3]], vec![[0, 2], [1, 3]], vec![s0, s1]).unwrap()
    }

    /// One vertex with two loops side by side (`a a b b`).
    pub fn two_loops_apart(s0: u8, s1: u8) -> MoebiusGraph {
        MoebiusGraph::new(vec![vec![0, 1, 2, 3]], vec![[0, 1], [2, 3]], vec![s0, s1]).unwrap()
    }

    /// Two vertices joined by two parallel edges.
    pub fn digon(s0: u8, s1: u8) -> MoebiusGraph {
        MoebiusGraph::new(vec![vec![0, 2], vec![1, 3]], vec![[0, 1], [2, 3]], vec![s0, s1]).unwrap()
    }

    /// Theta graph: two trivalent vertices joined by three edges.
    pub fn theta(signs: [u8; 3]) -> MoebiusGraph {
        MoebiusGraph::new(
            vec![vec![0, 2, 4], vec![1, 5, 3]],
            vec![[0, 1], [2, 3], [4, 5]],
            signs.to_vec(),
        )
        .unwrap()
    }

    /// One-holed Klein bottle on the crossed theta graph: only the middle
    /// edge is twisted.
    pub fn klein_one_hole() -> MoebiusGraph {
        theta_crossed([0, 1, 0])
    }

    /// A trivalent two-holed Klein bottle with six edges, one of them twisted.
    /// Edge order matches the closed form used in the tests.
    pub fn klein_two_holes() -> MoebiusGraph {
        MoebiusGraph::new(
            vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8], vec![9, 10, 11]],
            vec![[1, 4], [5, 9], [2, 6], [0, 3], [8, 10], [7, 11]],
            vec![1, 0, 0, 0, 0, 0],
        )
        .unwrap()
    }

    /// Theta graph with the rotation at the second vertex in the same cyclic
    /// order as the first: with untwisted edges this is the one-holed torus.
    pub fn theta_crossed(signs: [u8; 3]) -> MoebiusGraph {
        MoebiusGraph::new(
            vec![vec![0, 2, 4], vec![1, 3, 5]],
            vec![[0, 1], [2, 3], [4, 5]],
            signs.to_vec(),
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::rational::qi;

    #[test]
    fn loops() {
        let u = single_loop(false);
        assert_eq!(u.face_count(), 2);
        assert_eq!(u.graph_type().unwrap(), (0, 2));
        assert!(u.is_orientable().unwrap());
        assert_eq!(u.adjacency_matrix(), vec![vec![1], vec![1]]);
        let t = single_loop(true);
        assert_eq!(t.face_count(), 1);
        assert_eq!(t.graph_type().unwrap(), (1, 1));
        assert!(!t.is_orientable().unwrap());
        assert_eq!(t.adjacency_matrix(), vec![vec![2]]);
    }

    #[test]
    fn flip_of_loops_keeps_signs() {
        let u = single_loop(false).flip(0).unwrap();
        assert_eq!(u.signs(), &[0]);
        let g = two_loops_apart(1, 0).flip(0).unwrap();
        assert_eq!(g.signs(), &[1, 0]);
        assert_eq!(g.rotations()[0], vec![3, 2, 1, 0]);
        assert!(single_loop(false).flip(3).is_err());
    }

    #[test]
    fn theta_flip() {
        let g = theta([0, 0, 0]);
        let f = g.flip(0).unwrap();
        assert_eq!(f.signs(), &[1, 1, 1]);
        assert!(f.is_orientable().unwrap());
        assert_eq!(f.unlabelled_code().unwrap(), g.unlabelled_code().unwrap());
        assert_eq!(g.graph_type().unwrap(), (0, 3));
        assert_eq!(theta_crossed([0, 0, 0]).graph_type().unwrap(), (2, 1));
    }

    #[test]
    fn states_are_consistent() {
        for g in [theta([0, 1, 0]), two_loops_crossed(1, 1), theta_crossed([1, 0, 1]), digon(0, 1)] {
            for s in 0..g.num_states() {
                assert_eq!(g.step_back(g.step(s)), s);
                assert_eq!(g.reverse(g.reverse(s)), s);
                assert_eq!(g.opposite(g.opposite(s)), s);
                assert_eq!(g.step(g.reverse(g.step(s))), g.reverse(s));
                assert_ne!(g.side_of(s), g.side_of(g.opposite(s)));
            }
            let fd = g.face_data();
            let total: usize = fd.faces.iter().map(|f| f.walk.len()).sum();
            assert_eq!(total, 2 * g.num_edges());
            for col in 0..g.num_edges() {
                let sum: u8 = g.adjacency_matrix().iter().map(|r| r[col]).sum();
                assert_eq!(sum, 2);
            }
            let ones = vec![qi(1); g.num_edges()];
            let per: Q = g.perimeters(&ones).into_iter().sum();
            assert_eq!(per, qi(2 * g.num_edges() as i64));
        }
    }

    #[test]
    fn json_round_trip() {
        let g = theta([0, 1, 0]).with_face_labels(vec![2, 1]).unwrap();
        assert_eq!(g.graph_type().unwrap(), (1, 2));
        let s = g.to_json();
        let back = MoebiusGraph::from_json(&s).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_json(), s);
        assert!(MoebiusGraph::from_json(r#"{"vertices":[[0]],"pairing":[[0,1]],"signs":{}}"#).is_err());
    }

    #[test]
    fn code_decodes_to_isomorphic_graph() {
        for g in [theta([0, 1, 0]), two_loops_crossed(1, 0), theta_crossed([0, 0, 1]), digon(1, 1)] {
            let c = g.unlabelled_code().unwrap();
            let h = MoebiusGraph::from_code(&c, false).unwrap();
            assert_eq!(h.unlabelled_code().unwrap(), c);
            let n = g.face_count() as u32;
            let lg = g.with_face_labels((1..=n).rev().collect()).unwrap();
            let lc = lg.canonical_code().unwrap();
            let lh = MoebiusGraph::from_code(&lc, true).unwrap();
            assert_eq!(lh.canonical_code().unwrap(), lc);
        }
    }

    #[test]
    fn smoothing_preserves_faces() {
        // a loop subdivided once: vertex 0 has darts 0,3 ; vertex 1 has 1,2
        let g = MoebiusGraph::new(vec![vec![0, 3, 4, 5], vec![1, 2]], vec![[0, 1], [2, 3], [4, 5]], vec![1, 0, 0])
            .unwrap();
        let (h, emap, smap) = g.smooth_vertex(1).unwrap();
        assert_eq!(h.num_edges(), 2);
        assert_eq!(emap[0], emap[1]);
        assert_eq!(h.face_count(), g.face_count());
        assert_eq!(h.graph_type().unwrap(), g.graph_type().unwrap());
        // walks map onto walks
        for s in 0..g.num_states() {
            let e = g.state_edge(s);
            if e == 2 {
                assert_eq!(h.step(smap[s]), smap[g.step(s)]);
            }
        }
    }
}
