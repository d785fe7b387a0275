use moebius::cache::CountTable;
use moebius::enumerate::EnumConfig;
use moebius::euler::{chi_closed_form, chi_constant_term_with, chi_graph_sum_with, chi_specializations, s_series_check};
use moebius::quasipoly::QuasiConfig;
use moebius::rational::{q, qi};

#[test]
fn three_ways_through_level_three() {
    let table = CountTable::in_memory();
    let cfg = EnumConfig::default();
    let qcfg = QuasiConfig::default();
    for (two_g, n) in [(0u32, 5u32), (1, 4), (2, 3), (3, 2), (4, 1)] {
        let a = chi_graph_sum_with(two_g, n, &cfg).unwrap();
        let c = chi_constant_term_with(two_g, n, &table, &qcfg).unwrap();
        let d = chi_closed_form(two_g, n).unwrap();
        assert_eq!(a, d, "graph sum vs closed form at 2g={two_g} n={n}");
        assert_eq!(c, d, "constant term vs closed form at 2g={two_g} n={n}");
    }
}

#[test]
fn constant_term_from_every_chamber() {
    let table = CountTable::in_memory();
    let qcfg = QuasiConfig::default();
    for (two_g, n) in [(0u32, 3u32), (1, 2), (2, 1), (0, 4), (1, 3), (2, 2), (3, 1)] {
        assert_eq!(
            chi_constant_term_with(two_g, n, &table, &qcfg).unwrap(),
            chi_closed_form(two_g, n).unwrap()
        );
    }
}

#[test]
fn classical_specializations() {
    let chi = chi_closed_form(2, 1).unwrap();
    assert_eq!(chi_specializations(2, 1, &chi), (Some(q(-1, 12)), qi(0)));
    // χ(M_{g,1}) = ζ(1-2g)
    let chi = chi_closed_form(4, 1).unwrap();
    assert_eq!(chi_specializations(4, 1, &chi).0, Some(q(1, 120)));
}

#[test]
fn resummation_at_level_two() {
    let table = CountTable::in_memory();
    let cfg = EnumConfig::default();
    for (two_g, n) in [(0u32, 4u32), (1, 3), (2, 2), (3, 1)] {
        assert!(s_series_check(two_g, n, 12, &table, &cfg).unwrap(), "2g={two_g} n={n}");
    }
}
