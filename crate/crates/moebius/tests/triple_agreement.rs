use moebius::cache::{CountTable, Method};
use moebius::enumerate::EnumConfig;
use moebius::lattice::count_direct_table;
use moebius::recursion::{count_table, sorted_keys};
use moebius::BPoly;

fn types(max_level: u32) -> Vec<(u32, u32)> {
    let mut v = Vec::new();
    for level in 1..=max_level {
        for n in 1..=level + 2 {
            let two_g = level + 2 - n;
            v.push((two_g, n));
        }
    }
    v
}

#[test]
fn direct_and_both_recursions_agree() {
    let cfg = EnumConfig::default();
    let table = CountTable::in_memory();
    let max_sum = 12;
    for (two_g, n) in types(3) {
        let direct = count_direct_table(two_g, n, max_sum, &cfg).unwrap();
        let rec = count_table(Method::Rec, two_g, n, max_sum, &table).unwrap();
        let sym = count_table(Method::Sym, two_g, n, max_sum, &table).unwrap();
        assert_eq!(rec.len(), sorted_keys(n, max_sum).len());
        for ((l, a), (l2, s)) in rec.iter().zip(&sym) {
            assert_eq!(l, l2);
            let d = direct.get(l).cloned().unwrap_or_else(BPoly::zero);
            assert_eq!(a, s, "rec vs sym at 2g={two_g} L={l:?}");
            assert_eq!(a, &d, "rec vs direct at 2g={two_g} L={l:?}");
        }
    }
}
