//! Exhaustive generation of Möbius graphs of a given type.
//!
//! Graphs are generated level by level, where the level of a connected graph
//! is `|E| - |V| = 2g - 2 + n`. The first two levels are produced by brute
//! force over degree sequences and dart matchings. Every graph at level
//! `k >= 3` arises from a graph at level `k - 1` by adding one edge (possibly
//! between new subdivision points) or one lollipop, so higher levels are
//! grown from the previous pool and deduplicated by canonical code.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::{Arc, Mutex, OnceLock};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::surface_graph::{CanonicalCode, MoebiusGraph};

/// Resource limits for enumeration.
#[derive(Clone, Debug)]
pub struct EnumConfig {
    /// Largest admissible `2g - 2 + n`.
    pub max_level: u32,
    /// Refuse once a pool holds more unlabelled classes than this.
    pub max_classes: usize,
    /// When set, candidate generation order is shuffled with this seed.
    pub shuffle_seed: Option<u64>,
}

impl Default for EnumConfig {
    fn default() -> Self {
        EnumConfig {
            max_level: 4,
            max_classes: 2_000_000,
            shuffle_seed: None,
        }
    }
}

/// One isomorphism class of connected graphs without face labels.
#[derive(Clone, Debug)]
pub struct UnlabelledClass {
    pub graph: MoebiusGraph,
    pub code: CanonicalCode,
    /// Automorphisms ignoring face labels.
    pub aut: usize,
    pub two_g: u32,
    pub n: u32,
}

#[derive(Clone, Debug)]
pub struct InventoryEntry {
    pub graph: MoebiusGraph,
    pub code: CanonicalCode,
    pub aut: usize,
    pub edges: usize,
    pub orientable: bool,
}

#[derive(Clone, Debug)]
pub struct GraphInventory {
    pub two_g: u32,
    pub n: u32,
    pub entries: Vec<InventoryEntry>,
}

impl GraphInventory {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn level_of(two_g: u32, n: u32) -> Result<u32> {
    let lvl = two_g as i64 + n as i64 - 2;
    if n == 0 || lvl <= 0 {
        return Err(Error::Precondition(format!(
            "need 2g-2+n > 0 and n > 0, got 2g={two_g}, n={n}"
        )));
    }
    Ok(lvl as u32)
}

// ----- brute force -----------------------------------------------------------

/// Partitions of `total` into `parts` values, each at least 3, in
/// lexicographically decreasing order.
fn degree_sequences(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(total: usize, parts: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 0 {
            if total == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let hi = max.min(total.saturating_sub(3 * (parts - 1)));
        for d in (3..=hi).rev() {
            cur.push(d);
            rec(total - d, parts - 1, d, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, total, &mut Vec::new(), &mut out);
    out
}

fn matchings(nd: usize, f: &mut dyn FnMut(&[[usize; 2]])) {
    fn rec(used: &mut Vec<bool>, cur: &mut Vec<[usize; 2]>, f: &mut dyn FnMut(&[[usize; 2]])) {
        let Some(a) = used.iter().position(|&u| !u) else {
            f(cur);
            return;
        };
        used[a] = true;
        for b in a + 1..used.len() {
            if !used[b] {
                used[b] = true;
                cur.push([a, b]);
                rec(used, cur, f);
                cur.pop();
                used[b] = false;
            }
        }
        used[a] = false;
    }
    rec(&mut vec![false; nd], &mut Vec::new(), f);
}

/// All connected graphs of level `level` with every valency at least 3, by
/// brute force. Signs are normalized to 0 on a spanning tree.
pub fn brute_force_pool(level: u32) -> Vec<UnlabelledClass> {
    let mut found: HashMap<CanonicalCode, ()> = HashMap::new();
    let level = level as usize;
    // 2E >= 3V and E = V + level  =>  V <= 2 level
    for v in 1..=2 * level {
        let e = v + level;
        for degs in degree_sequences(2 * e, v) {
            let mut rot = Vec::new();
            let mut next = 0;
            for &d in &degs {
                rot.push((next..next + d).collect::<Vec<_>>());
                next += d;
            }
            let batch: Vec<CanonicalCode> = {
                let mut codes = Vec::new();
                matchings(2 * e, &mut |m| {
                    let g = match MoebiusGraph::new(rot.clone(), m.to_vec(), vec![0; e]) {
                        Ok(g) => g,
                        Err(_) => return,
                    };
                    if !g.is_connected() {
                        return;
                    }
                    let free = non_tree_edges(&g);
                    for mask in 0u32..(1 << free.len()) {
                        let mut signs = vec![0u8; e];
                        for (i, &edge) in free.iter().enumerate() {
                            signs[edge] = ((mask >> i) & 1) as u8;
                        }
                        let h = MoebiusGraph::new(rot.clone(), m.to_vec(), signs).unwrap();
                        codes.push(h.unlabelled_code().unwrap());
                    }
                });
                codes
            };
            for c in batch {
                found.insert(c, ());
            }
        }
    }
    finish_pool(found.into_keys().collect())
}

fn non_tree_edges(g: &MoebiusGraph) -> Vec<usize> {
    let mut seen = vec![false; g.num_vertices()];
    let mut tree = vec![false; g.num_edges()];
    seen[0] = true;
    let mut stack = vec![0];
    while let Some(v) = stack.pop() {
        for &d in &g.rotations()[v] {
            let w = g.vertex_of(g.alpha(d));
            if !seen[w] {
                seen[w] = true;
                tree[g.edge_of(d)] = true;
                stack.push(w);
            }
        }
    }
    (0..g.num_edges()).filter(|&e| !tree[e]).collect()
}

fn finish_pool(mut codes: Vec<CanonicalCode>) -> Vec<UnlabelledClass> {
    codes.sort();
    codes
        .into_par_iter()
        .map(|code| {
            let graph = MoebiusGraph::from_code(&code, false).expect("own codes decode");
            let aut = graph.automorphism_order().unwrap();
            let (two_g, n) = graph.graph_type().unwrap();
            UnlabelledClass {
                graph,
                code,
                aut,
                two_g,
                n,
            }
        })
        .collect()
}

// ----- growth by insertion ---------------------------------------------------

#[derive(Clone)]
struct Proto {
    rot: Vec<Vec<usize>>,
    pairs: Vec<[usize; 2]>,
    signs: Vec<u8>,
}

impl Proto {
    fn of(g: &MoebiusGraph) -> Self {
        Proto {
            rot: g.rotations().to_vec(),
            pairs: g.pairing().to_vec(),
            signs: g.signs().to_vec(),
        }
    }

    fn fresh_pair(&mut self) -> (usize, usize) {
        let x = 2 * self.pairs.len();
        (x, x + 1)
    }

    /// Splits edge `e` by a new 2-valent vertex; returns the vertex.
    fn subdivide(&mut self, e: usize) -> usize {
        let [a, b] = self.pairs[e];
        let (w1, w2) = self.fresh_pair();
        self.pairs[e] = [a, w1];
        self.pairs.push([w2, b]);
        self.signs.push(0);
        self.rot.push(vec![w1, w2]);
        self.rot.len() - 1
    }

    fn add_edge(&mut self, v1: usize, p1: usize, v2: usize, p2: usize, sign: u8) {
        let (x, y) = self.fresh_pair();
        self.rot[v1].insert(p1, x);
        self.rot[v2].insert(p2, y);
        self.pairs.push([x, y]);
        self.signs.push(sign);
    }

    fn add_lollipop(&mut self, v: usize, p: usize, candy: u8) {
        let (s_w, s_u) = self.fresh_pair();
        self.pairs.push([s_w, s_u]);
        self.signs.push(0);
        let (l1, l2) = self.fresh_pair();
        self.pairs.push([l1, l2]);
        self.signs.push(candy);
        self.rot[v].insert(p, s_w);
        self.rot.push(vec![s_u, l1, l2]);
    }

    fn build(self) -> MoebiusGraph {
        MoebiusGraph::new(self.rot, self.pairs, self.signs).expect("insertion keeps validity")
    }
}

fn positions(deg: usize) -> std::ops::Range<usize> {
    0..deg.max(1)
}

/// Every graph obtained from `h` by one edge or lollipop insertion.
fn insertions(h: &MoebiusGraph, out: &mut dyn FnMut(MoebiusGraph)) {
    let base = Proto::of(h);
    let m = h.num_edges();
    // subdivision plans: none, one edge, two distinct edges, one edge twice
    let mut plans: Vec<Vec<usize>> = vec![vec![]];
    for e in 0..m {
        plans.push(vec![e]);
        for f in e + 1..m {
            plans.push(vec![e, f]);
        }
        plans.push(vec![e, usize::MAX]);
    }
    for plan in &plans {
        let mut p = base.clone();
        let mut fresh = Vec::new();
        for &e in plan {
            // usize::MAX means: subdivide the half created by the previous step
            let target = if e == usize::MAX { p.pairs.len() - 1 } else { e };
            fresh.push(p.subdivide(target));
        }
        let nv = p.rot.len();
        let firsts: Vec<usize> = match fresh.len() {
            0 => (0..nv).collect(),
            _ => vec![fresh[0]],
        };
        for &v1 in &firsts {
            for p1 in positions(p.rot[v1].len()) {
                let seconds: Vec<usize> = match fresh.len() {
                    0 => (v1..nv).collect(),
                    1 => (0..nv).collect(),
                    _ => vec![fresh[1]],
                };
                for &v2 in &seconds {
                    let d2 = p.rot[v2].len() + usize::from(v1 == v2);
                    for p2 in positions(d2) {
                        for sign in 0..2 {
                            let mut q = p.clone();
                            q.add_edge(v1, p1, v2, p2, sign);
                            out(q.build());
                        }
                    }
                }
            }
        }
    }
    // lollipops at corners and at subdivision points
    for candy in 0..2 {
        for v in 0..h.num_vertices() {
            for pos in positions(h.degree(v)) {
                let mut q = base.clone();
                q.add_lollipop(v, pos, candy);
                out(q.build());
            }
        }
        for e in 0..m {
            for pos in 1..=2 {
                let mut q = base.clone();
                let w = q.subdivide(e);
                q.add_lollipop(w, pos, candy);
                out(q.build());
            }
        }
    }
}

/// Next level from the given pool by insertion.
pub fn grow_pool(prev: &[UnlabelledClass], cfg: &EnumConfig) -> Result<Vec<UnlabelledClass>> {
    let mut order: Vec<usize> = (0..prev.len()).collect();
    if let Some(seed) = cfg.shuffle_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let sets: Vec<HashSet<CanonicalCode>> = order
        .par_iter()
        .map(|&i| {
            let mut local = HashSet::new();
            insertions(&prev[i].graph, &mut |g| {
                debug_assert!(g.rotations().iter().all(|r| r.len() >= 3));
                local.insert(g.unlabelled_code().unwrap());
            });
            local
        })
        .collect();
    let mut all: HashSet<CanonicalCode> = HashSet::new();
    for s in sets {
        all.extend(s);
        if all.len() > cfg.max_classes {
            return Err(Error::Budget(format!("more than {} graph classes", cfg.max_classes)));
        }
    }
    Ok(finish_pool(all.into_iter().collect()))
}

fn pool_cache() -> &'static Mutex<HashMap<u32, Arc<Vec<UnlabelledClass>>>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Vec<UnlabelledClass>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// All unlabelled classes at a level (every type mixed), memoized per process.
pub fn pool(level: u32, cfg: &EnumConfig) -> Result<Arc<Vec<UnlabelledClass>>> {
    if level == 0 {
        return Err(Error::Precondition("level must be positive".into()));
    }
    if level > cfg.max_level {
        return Err(Error::Budget(format!(
            "2g-2+n = {level} exceeds the enumeration cap {}",
            cfg.max_level
        )));
    }
    if cfg.shuffle_seed.is_none() {
        if let Some(p) = pool_cache().lock().unwrap().get(&level) {
            return Ok(p.clone());
        }
    }
    let p = if level <= 2 {
        let mut v = brute_force_pool(level);
        if let Some(seed) = cfg.shuffle_seed {
            // the pool is sorted by code anyway; shuffling here only exercises finish_pool
            v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let codes = v.into_iter().map(|c| c.code).collect();
            finish_pool(codes)
        } else {
            v
        }
    } else {
        let prev = pool(level - 1, cfg)?;
        grow_pool(&prev, cfg)?
    };
    let p = Arc::new(p);
    if cfg.shuffle_seed.is_none() {
        pool_cache().lock().unwrap().insert(level, p.clone());
    }
    Ok(p)
}

/// Unlabelled classes of type `(2g, n)`.
pub fn unlabelled_classes(two_g: u32, n: u32, cfg: &EnumConfig) -> Result<Vec<UnlabelledClass>> {
    let level = level_of(two_g, n)?;
    Ok(pool(level, cfg)?
        .iter()
        .filter(|c| c.two_g == two_g && c.n == n)
        .cloned()
        .collect())
}

fn permutations(n: usize) -> Vec<Vec<u32>> {
    fn rec(cur: &mut Vec<u32>, used: &mut Vec<bool>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i as u32 + 1);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// All face-labelled graphs of type `(2g, n)`, sorted by canonical code.
pub fn enumerate_graphs_with(two_g: u32, n: u32, cfg: &EnumConfig) -> Result<GraphInventory> {
    let classes = unlabelled_classes(two_g, n, cfg)?;
    let perms = permutations(n as usize);
    let per: Vec<Vec<CanonicalCode>> = classes
        .par_iter()
        .map(|c| {
            let mut seen = HashSet::new();
            for p in &perms {
                let g = c.graph.clone().with_face_labels(p.clone()).unwrap();
                seen.insert(g.canonical_code().unwrap());
            }
            seen.into_iter().collect()
        })
        .collect();
    let mut codes: BTreeMap<CanonicalCode, ()> = BTreeMap::new();
    for v in per {
        for c in v {
            codes.insert(c, ());
        }
    }
    let entries = codes
        .into_keys()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|code| {
            let graph = MoebiusGraph::from_code(&code, true).expect("own codes decode");
            InventoryEntry {
                aut: graph.automorphism_order().unwrap(),
                edges: graph.num_edges(),
                orientable: graph.is_orientable().unwrap(),
                graph,
                code,
            }
        })
        .collect();
    Ok(GraphInventory { two_g, n, entries })
}

pub fn enumerate_graphs(two_g: u32, n: u32) -> Result<GraphInventory> {
    enumerate_graphs_with(two_g, n, &EnumConfig::default())
}

/// Entries whose vertices are all trivalent.
pub fn trivalent_subset(inv: &GraphInventory) -> GraphInventory {
    GraphInventory {
        two_g: inv.two_g,
        n: inv.n,
        entries: inv
            .entries
            .iter()
            .filter(|e| e.graph.rotations().iter().all(|r| r.len() == 3))
            .cloned()
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn auts(inv: &GraphInventory) -> Vec<usize> {
        let mut v: Vec<usize> = inv.entries.iter().map(|e| e.aut).collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn degree_sequences_are_decreasing() {
        assert_eq!(degree_sequences(6, 2), vec![vec![3, 3]]);
        assert_eq!(degree_sequences(10, 3), vec![vec![4, 3, 3]]);
        assert_eq!(degree_sequences(8, 2), vec![vec![5, 3], vec![4, 4]]);
    }

    #[test]
    fn base_level_inventories() {
        let i03 = enumerate_graphs(0, 3).unwrap();
        assert_eq!(auts(&i03), vec![2; 7]);
        let i12 = enumerate_graphs(1, 2).unwrap();
        assert_eq!(auts(&i12), vec![2, 2, 2, 2, 4, 4, 4]);
        assert!(i12.entries.iter().all(|e| !e.orientable));
        let i21 = enumerate_graphs(2, 1).unwrap();
        let mut ori: Vec<usize> = i21.entries.iter().filter(|e| e.orientable).map(|e| e.aut).collect();
        let mut non: Vec<usize> = i21.entries.iter().filter(|e| !e.orientable).map(|e| e.aut).collect();
        ori.sort_unstable();
        non.sort_unstable();
        assert_eq!(ori, vec![8, 12]);
        assert_eq!(non, vec![4, 4, 4, 4]);
    }

    #[test]
    fn growth_matches_brute_force_at_level_two() {
        let cfg = EnumConfig::default();
        let l1 = pool(1, &cfg).unwrap();
        let grown: Vec<CanonicalCode> = grow_pool(&l1, &cfg).unwrap().into_iter().map(|c| c.code).collect();
        let brute: Vec<CanonicalCode> = brute_force_pool(2).into_iter().map(|c| c.code).collect();
        assert_eq!(grown, brute);
    }

    #[test]
    fn shuffled_order_gives_same_inventory() {
        let a = enumerate_graphs(1, 3).unwrap();
        let cfg = EnumConfig {
            shuffle_seed: Some(7),
            ..EnumConfig::default()
        };
        let b = enumerate_graphs_with(1, 3, &cfg).unwrap();
        let ca: Vec<_> = a.entries.iter().map(|e| e.code.clone()).collect();
        let cb: Vec<_> = b.entries.iter().map(|e| e.code.clone()).collect();
        assert_eq!(ca, cb);
        assert_eq!(a.entries[0].graph, b.entries[0].graph);
    }

    #[test]
    fn trivalent_subset_properties() {
        for (tg, n) in [(0, 3), (2, 1), (0, 4), (1, 3)] {
            let inv = enumerate_graphs(tg, n).unwrap();
            let t = trivalent_subset(&inv);
            let top = 3 * tg as usize + 3 * n as usize - 6;
            assert!(t.entries.iter().all(|e| e.edges == top));
            assert_eq!(trivalent_subset(&t).len(), t.len());
            for e in &inv.entries {
                let level = tg as usize + n as usize - 2;
                assert_eq!(e.edges, e.graph.num_vertices() + level);
            }
        }
    }

    #[test]
    fn half_integer_genus_is_never_orientable() {
        for (tg, n) in [(1, 2), (1, 3), (3, 1)] {
            assert!(enumerate_graphs(tg, n).unwrap().entries.iter().all(|e| !e.orientable));
        }
        for (tg, n) in [(0, 4), (2, 2)] {
            assert!(enumerate_graphs(tg, n).unwrap().entries.iter().any(|e| e.orientable));
        }
    }

    #[test]
    fn budget_and_preconditions() {
        assert!(matches!(enumerate_graphs(0, 2), Err(Error::Precondition(_))));
        let cfg = EnumConfig {
            max_level: 1,
            ..EnumConfig::default()
        };
        assert!(matches!(enumerate_graphs_with(0, 4, &cfg), Err(Error::Budget(_))));
    }
}
