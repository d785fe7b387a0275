use std::sync::OnceLock;

use moebius::cache::{CountKey, CountTable, Method};
use moebius::enumerate::{unlabelled_classes, EnumConfig, UnlabelledClass};
use moebius::lattice::count_direct;
use moebius::mon::{classify_root_removal, mon, roots, Root, WeightCase};
use moebius::quasipoly::QuasiConfig;
use moebius::rational::{q, qi};
use moebius::recursion::{count_recursive, kernel_d, kernel_e, kernel_r};
use moebius::surface_graph::{state, state_dart, state_eps};
use moebius::volume::VolumeBook;
use moebius::{BPoly, Q};
use num_traits::{One, Zero};
use proptest::prelude::*;

/// Every connected graph class with 2g-2+n <= 2.
fn classes() -> &'static [UnlabelledClass] {
    static POOL: OnceLock<Vec<UnlabelledClass>> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut v = Vec::new();
        for (two_g, n) in [(0, 3), (1, 2), (2, 1), (0, 4), (1, 3), (2, 2), (3, 1)] {
            v.extend(unlabelled_classes(two_g, n, &EnumConfig::default()).unwrap());
        }
        v
    })
}

fn volumes() -> &'static VolumeBook<'static> {
    static BOOK: OnceLock<VolumeBook<'static>> = OnceLock::new();
    BOOK.get_or_init(|| VolumeBook::new(CountTable::global(), QuasiConfig::default()))
}

fn positive() -> impl Strategy<Value = Q> {
    (1i64..40, 1i64..7).prop_map(|(a, b)| q(a, b))
}

/// A graph class together with a positive metric on its edges.
fn metric_graph() -> impl Strategy<Value = (usize, Vec<Q>)> {
    (0..classes().len()).prop_flat_map(|i| {
        let e = classes()[i].graph.num_edges();
        (Just(i), proptest::collection::vec(positive(), e))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mon_is_flip_and_relabel_invariant(
        (i, l) in metric_graph(),
        v in any::<prop::sample::Index>(),
        shuffle in any::<u64>(),
    ) {
        let g = &classes()[i].graph;
        let rho = mon(g, &l).unwrap();
        let f = g.flip(v.index(g.num_vertices())).unwrap();
        prop_assert_eq!(mon(&f, &l).unwrap(), rho.clone());
        prop_assert_eq!(f.canonical_code().unwrap(), g.canonical_code().unwrap());
        prop_assert_eq!(f.is_orientable().unwrap(), g.is_orientable().unwrap());

        let mut perm: Vec<usize> = (0..g.num_darts()).collect();
        let mut s = shuffle;
        for k in (1..perm.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(k, (s >> 33) as usize % (k + 1));
        }
        prop_assert_eq!(mon(&g.relabel_darts(&perm).unwrap(), &l).unwrap(), rho);
    }

    #[test]
    fn mon_specializations_and_scaling((i, l) in metric_graph(), c in positive()) {
        let class = &classes()[i];
        let rho = mon(&class.graph, &l).unwrap();
        let indicator = if class.graph.is_orientable().unwrap() { Q::one() } else { Q::zero() };
        prop_assert_eq!(rho.eval(&Q::zero()), indicator);
        prop_assert_eq!(rho.eval(&Q::one()), Q::one());
        prop_assert!(rho.degree().unwrap_or(0) <= class.two_g as usize);
        prop_assert!(rho.nonnegative());
        let scaled: Vec<Q> = l.iter().map(|x| x * &c).collect();
        prop_assert_eq!(mon(&class.graph, &scaled).unwrap(), rho);
    }

    #[test]
    fn perimeters_come_from_the_adjacency_matrix((i, l) in metric_graph()) {
        let g = &classes()[i].graph;
        let a = g.adjacency_matrix();
        let p = g.perimeters(&l);
        prop_assert_eq!(a.len(), p.len());
        for (row, per) in a.iter().zip(&p) {
            let mut s = Q::zero();
            for (m, x) in row.iter().zip(&l) {
                s += x * qi(*m as i64);
            }
            prop_assert_eq!(&s, per);
        }
        for e in 0..g.num_edges() {
            prop_assert_eq!(a.iter().map(|r| r[e] as u32).sum::<u32>(), 2);
        }
    }

    #[test]
    fn split_roots_pair_up(i in 0..classes().len(), r in any::<prop::sample::Index>()) {
        let g = &classes()[i].graph;
        let all = roots(g).unwrap();
        let root = all[r.index(all.len())];
        let (case, w) = classify_root_removal(g, root).unwrap();
        if matches!(case, WeightCase::FaceSplitAligned | WeightCase::FaceSplitReversed) {
            let e = g.state_edge(root.0);
            let h = g.with_sign(e, g.sign(e) ^ 1).unwrap();
            let partner = Root(state(state_dart(root.0), -state_eps(root.0)));
            let (case2, w2) = classify_root_removal(&h, partner).unwrap();
            prop_assert!(matches!(case2, WeightCase::FaceSplitAligned | WeightCase::FaceSplitReversed));
            prop_assert_eq!(&w + &w2, BPoly::one_plus_b());
        }
    }

    #[test]
    fn kernels_are_scale_free(l1 in positive(), lm in positive(), p in positive(), p2 in positive(), c in positive()) {
        let s = |x: &Q| x * &c;
        prop_assert_eq!(kernel_r(&s(&l1), &s(&lm), &s(&p)), kernel_r(&l1, &lm, &p));
        prop_assert_eq!(kernel_e(&s(&l1), &s(&p)), kernel_e(&l1, &p));
        prop_assert_eq!(kernel_d(&s(&l1), &s(&p), &s(&p2)), kernel_d(&l1, &p, &p2));
    }

    #[test]
    fn counts_are_symmetric(
        ty in prop::sample::select(vec![(0u32, 4u32), (1, 3), (2, 2), (3, 2), (1, 4)]),
        raw in proptest::collection::vec(1u32..6, 4),
        rot in 0usize..4,
    ) {
        let (two_g, n) = ty;
        let mut l: Vec<u32> = raw[..n as usize].to_vec();
        if l.iter().sum::<u32>() % 2 == 1 {
            l[0] += 1;
        }
        let base = count_recursive(two_g, n, &l).unwrap();
        let mut m = l.clone();
        m.rotate_left(rot % n as usize);
        prop_assert_eq!(count_recursive(two_g, n, &m).unwrap(), base.clone());
        m.reverse();
        prop_assert_eq!(count_recursive(two_g, n, &m).unwrap(), base.clone());
        prop_assert!(base.degree().unwrap_or(0) <= two_g as usize);
    }

    #[test]
    fn odd_sums_count_nothing(ty in prop::sample::select(vec![(0u32, 3u32), (1, 2), (2, 1), (0, 4), (1, 3)]), raw in proptest::collection::vec(1u32..6, 4)) {
        let (two_g, n) = ty;
        let mut l: Vec<u32> = raw[..n as usize].to_vec();
        if l.iter().sum::<u32>() % 2 == 0 {
            l[0] += 1;
        }
        prop_assert!(count_direct(two_g, n, &l).unwrap().is_zero());
        prop_assert!(count_recursive(two_g, n, &l).unwrap().is_zero());
    }

    #[test]
    fn volumes_are_homogeneous(
        ty in prop::sample::select(vec![(0u32, 3u32), (1, 2), (2, 1), (0, 4), (1, 3), (2, 2), (3, 1)]),
        raw in proptest::collection::vec(positive(), 4),
        c in positive(),
    ) {
        let (two_g, n) = ty;
        let book = volumes();
        let l: Vec<Q> = raw[..n as usize].to_vec();
        let scaled: Vec<Q> = l.iter().map(|x| x * &c).collect();
        let d = 3 * two_g + 2 * n - 6;
        let mut factor = Q::one();
        for _ in 0..d {
            factor *= &c;
        }
        prop_assert_eq!(book.value(two_g, &scaled).unwrap(), book.value(two_g, &l).unwrap().scale(&factor));
    }
}

fn sample_key() -> impl Strategy<Value = CountKey> {
    (
        prop::sample::select(vec![Method::Rec, Method::Sym, Method::Direct]),
        0u32..5,
        proptest::collection::vec(0u32..9, 1..4),
    )
        .prop_map(|(method, two_g, mut l)| {
            l.sort_unstable();
            CountKey { method, two_g, n: l.len() as u32, l }
        })
}

fn sample_poly() -> impl Strategy<Value = BPoly> {
    proptest::collection::vec((-30i64..30, 1i64..9), 0..4)
        .prop_map(|v| BPoly::from_coeffs(v.into_iter().map(|(a, b)| q(a, b)).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn disk_store_round_trips(entries in proptest::collection::btree_map(sample_key(), sample_poly(), 1..20), victim in any::<prop::sample::Index>()) {
        let dir = tempfile::tempdir().unwrap();
        {
            let t = CountTable::open(dir.path()).unwrap();
            for (k, v) in &entries {
                t.insert(k.clone(), v.clone()).unwrap();
            }
        }
        let t = CountTable::open(dir.path()).unwrap();
        prop_assert_eq!(t.entries(), entries.clone());
        prop_assert!(t.scan().unwrap().corrupt.is_empty());

        // damage one record: it is reported and never loaded
        let (k, _) = entries.iter().nth(victim.index(entries.len())).unwrap();
        let file = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().path())
            .find(|p| {
                let name = p.file_name().unwrap().to_string_lossy().to_string();
                name == format!("{}-2g{}-n{}.jsonl", k.method.as_str(), k.two_g, k.n)
            })
            .unwrap();
        let text = std::fs::read_to_string(&file).unwrap();
        let needle = format!("\"L\":{}", serde_json::to_string(&k.l).unwrap());
        let damaged: Vec<String> = text
            .lines()
            .map(|line| if line.contains(&needle) { line.replacen("\"sha256\":\"", "\"sha256\":\"0", 1) } else { line.to_string() })
            .collect();
        std::fs::write(&file, damaged.join("\n") + "\n").unwrap();
        let t = CountTable::open(dir.path()).unwrap();
        prop_assert_eq!(t.scan().unwrap().corrupt.len(), 1);
        prop_assert!(t.get(k).is_none());
        prop_assert_eq!(t.len(), entries.len() - 1);
    }
}
