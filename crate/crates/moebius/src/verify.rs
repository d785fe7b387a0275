//! The acceptance checks, shared by the test harness and the `verify` command.
//!
//! Every check recomputes its evidence from scratch and reports a one-line
//! verdict with the measured quantities; nothing here is cached across checks
//! except through the [`CountTable`] handed in.

use std::path::Path;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bpoly::BPoly;
use crate::cache::{CountTable, Method};
use crate::enumerate::{enumerate_graphs, unlabelled_classes, EnumConfig};
use crate::error::{Error, Result};
use crate::euler::{
    chi_closed_form, chi_constant_term_with, chi_graph_sum_with, chi_specializations, compare_printed,
    printed_rows_follow_gamma, s_series_check, PrintedMatch,
};
use crate::lattice::{ciliated_count_table, count_direct_table};
use crate::mon::{average_mon, b_zero_matches_orientability, classify_root_removal, mon, roots, Root, WeightCase};
use crate::quasipoly::{closed_forms, evaluate, reconstruct_with, walls, wall_points, QuasiConfig};
use crate::rational::{q, qi, Q};
use crate::recursion::{count_table, level, sorted_keys};
use crate::surface_graph::fixtures::*;
use crate::surface_graph::{state, state_dart, state_eps, MoebiusGraph};
use crate::volume::{
    airy_laplace_check, check_volume_recursion, relative_error, rescaled_count, volume_base, volume_rhs, VolumeBook,
};
use crate::weber_series::check_against_base;

/// Settings shared by all checks.
#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub seed: u64,
    pub enumeration: EnumConfig,
    pub quasi: QuasiConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 2024,
            enumeration: EnumConfig::default(),
            quasi: QuasiConfig::default(),
        }
    }
}

/// Verdict of one acceptance criterion.
#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    #[serde(skip)]
    pub elapsed: Duration,
    #[serde(skip)]
    pub budget: Duration,
}

impl Outcome {
    /// `PASS  4 triple count agreement (2.1s) ...`
    pub fn line(&self) -> String {
        format!(
            "{} {:>2} {} ({:.1}s) {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

pub const TITLES: [&str; 12] = [
    "enumeration fixtures",
    "MON fixtures",
    "MON property suite",
    "triple count agreement",
    "ciliated identity",
    "quasipolynomial reconstruction",
    "volume recursion",
    "mesh refinement",
    "Euler characteristic",
    "S-series resummation",
    "Weber and Airy series",
    "determinism",
];

const BUDGETS_SECS: [u64; 12] = [10, 10, 120, 900, 300, 1200, 300, 60, 300, 60, 120, 1800];

fn timed(id: u8, f: impl FnOnce() -> Result<(bool, String)>) -> Outcome {
    let t0 = Instant::now();
    let (mut pass, mut detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    let elapsed = t0.elapsed();
    let budget = Duration::from_secs(BUDGETS_SECS[id as usize - 1]);
    if elapsed > budget {
        pass = false;
        detail = format!("{detail}; over the {}s budget", budget.as_secs());
    }
    Outcome {
        id,
        title: TITLES[id as usize - 1],
        pass,
        detail,
        elapsed,
        budget,
    }
}

/// All types with `1 ≤ 2g - 2 + n ≤ max_level`, as `(2g, n)`.
pub fn types_up_to(max_level: u32) -> Vec<(u32, u32)> {
    let mut v = Vec::new();
    for lv in 1..=max_level {
        for n in 1..=lv + 2 {
            v.push((lv + 2 - n, n));
        }
    }
    v
}

fn fail_if(ok: bool, failures: &mut Vec<String>, what: impl FnOnce() -> String) {
    if !ok {
        failures.push(what());
    }
}

fn summary(failures: Vec<String>, ok_text: String) -> (bool, String) {
    if failures.is_empty() {
        (true, ok_text)
    } else {
        let n = failures.len();
        let mut shown: Vec<String> = failures.into_iter().take(3).collect();
        if n > 3 {
            shown.push(format!("... {} more", n - 3));
        }
        (false, shown.join("; "))
    }
}

// ----- 1 ------------------------------------------------------------------

pub fn check_enumeration() -> Outcome {
    timed(1, || {
        let mut failures = Vec::new();
        let sorted = |mut v: Vec<usize>| {
            v.sort_unstable();
            v
        };
        let inv = enumerate_graphs(0, 3)?;
        let a: Vec<usize> = inv.entries.iter().map(|e| e.aut).collect();
        fail_if(sorted(a.clone()) == vec![2; 7], &mut failures, || format!("(0,3) automorphisms {a:?}"));
        let inv = enumerate_graphs(1, 2)?;
        let a: Vec<usize> = inv.entries.iter().map(|e| e.aut).collect();
        fail_if(sorted(a.clone()) == vec![2, 2, 2, 2, 4, 4, 4], &mut failures, || {
            format!("(1/2,2) automorphisms {a:?}")
        });
        let inv = enumerate_graphs(2, 1)?;
        let or: Vec<usize> = inv.entries.iter().filter(|e| e.orientable).map(|e| e.aut).collect();
        let no: Vec<usize> = inv.entries.iter().filter(|e| !e.orientable).map(|e| e.aut).collect();
        fail_if(sorted(or.clone()) == vec![8, 12], &mut failures, || format!("(1,1) orientable {or:?}"));
        fail_if(sorted(no.clone()) == vec![4; 4], &mut failures, || format!("(1,1) non-orientable {no:?}"));
        Ok(summary(failures, "7 + 7 + 6 graphs with the printed automorphism orders".into()))
    })
}

// ----- 2 ------------------------------------------------------------------

/// ρ of the one-hole Klein bottle graph: `((ℓ₁+ℓ₃)b² + ℓ₂b)/(ℓ₁+ℓ₂+ℓ₃)`.
pub fn klein_one_hole_value(l: &[Q]) -> BPoly {
    let s: Q = l.iter().sum();
    BPoly::from_coeffs(vec![Q::zero(), l[1].clone(), &l[0] + &l[2]]).scale(&(Q::one() / s))
}

/// ρ of the six-edge two-hole Klein bottle graph.
pub fn klein_two_holes_value(l: &[Q]) -> BPoly {
    let b = BPoly::b();
    let b2 = &b * &b;
    let s6: Q = l.iter().sum();
    let s5: Q = l[..5].iter().sum();
    let s_no5: Q = &s6 - &l[4];
    let mut last = b.scale(&l[0]);
    for x in &l[1..5] {
        last = &last + &b2.scale(x);
    }
    let t1 = (&b2 - &b).scale(&(&l[0] / &s6));
    let t2 = (&b - &b2).scale(&(&l[0] / &s_no5));
    &(&t1 + &t2) + &last.scale(&(Q::one() / s5))
}

fn metrics(rng: &mut ChaCha8Rng, e: usize, count: usize) -> Vec<Vec<Q>> {
    (0..count)
        .map(|_| (0..e).map(|_| q(rng.gen_range(1..30), rng.gen_range(1..7))).collect())
        .collect()
}

pub fn check_mon_fixtures(cfg: &VerifyConfig) -> Outcome {
    timed(2, || {
        let mut failures = Vec::new();
        let one = BPoly::one();
        let b = BPoly::b();
        let point = MoebiusGraph::new(vec![vec![]], vec![], vec![])?;
        let segment = point.attach_pendant(0, 0, 0)?;
        let small: Vec<(&str, MoebiusGraph, BPoly)> = vec![
            ("point", point, one.clone()),
            ("segment", segment.clone(), one.clone()),
            ("untwisted loop", single_loop(false), one.clone()),
            ("twisted loop", single_loop(true), b.clone()),
            ("path", segment.attach_pendant(1, 1, 1)?, one.clone()),
            ("untwisted lollipop", single_loop(false).attach_pendant(0, 0, 0)?, one.clone()),
            ("twisted lollipop", single_loop(true).attach_pendant(0, 0, 0)?, b.clone()),
            ("two twisted loops apart", two_loops_apart(1, 1), &b * &b),
            ("one twisted loop apart", two_loops_apart(0, 1), b.clone()),
            ("two twisted interleaved loops", two_loops_crossed(1, 1), b.clone()),
            ("untwisted digon", digon(0, 0), one.clone()),
            ("twisted digon", digon(0, 1), b.clone()),
        ];
        for (name, g, want) in &small {
            let got = average_mon(g)?;
            fail_if(got == *want, &mut failures, || format!("{name}: {got}"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let crossed = two_loops_crossed(0, 1);
        for l in metrics(&mut rng, 2, 5) {
            let want = BPoly::from_coeffs(vec![Q::zero(), l[1].clone(), l[0].clone()]).scale(&(Q::one() / (&l[0] + &l[1])));
            fail_if(mon(&crossed, &l)? == want, &mut failures, || format!("interleaved loops at {l:?}"));
        }
        let k1 = klein_one_hole();
        for l in metrics(&mut rng, 3, 5) {
            fail_if(mon(&k1, &l)? == klein_one_hole_value(&l), &mut failures, || format!("one-hole Klein at {l:?}"));
        }
        let k2 = klein_two_holes();
        for l in metrics(&mut rng, 6, 5) {
            fail_if(mon(&k2, &l)? == klein_two_holes_value(&l), &mut failures, || {
                format!("two-hole Klein at {l:?}")
            });
        }
        Ok(summary(failures, format!("{} small graphs, 15 metric fixtures", small.len())))
    })
}

// ----- 3 ------------------------------------------------------------------

/// Property checks for one graph at one metric; returns the names of the
/// properties that fail.
pub fn mon_properties(g: &MoebiusGraph, two_g: u32, l: &[Q], rng: &mut ChaCha8Rng) -> Result<Vec<&'static str>> {
    let mut bad = Vec::new();
    let rho = mon(g, l)?;
    if !b_zero_matches_orientability(g, &rho) {
        bad.push("b=0 orientability");
    }
    if rho.eval(&Q::one()) != Q::one() {
        bad.push("b=1");
    }
    if rho.degree().unwrap_or(0) > two_g as usize {
        bad.push("b-degree");
    }
    if g.is_orientable()? && rho != BPoly::one() {
        bad.push("orientable is 1");
    }
    let lam = q(rng.gen_range(1..50), rng.gen_range(1..9));
    let scaled: Vec<Q> = l.iter().map(|x| x * &lam).collect();
    if mon(g, &scaled)? != rho {
        bad.push("homogeneity");
    }
    let v = rng.gen_range(0..g.num_vertices());
    if mon(&g.flip(v)?, l)? != rho {
        bad.push("flip");
    }
    let mut perm: Vec<usize> = (0..g.num_darts()).collect();
    for i in (1..perm.len()).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    if mon(&g.relabel_darts(&perm)?, l)? != rho {
        bad.push("relabelling");
    }
    // MON1: a pendant edge changes nothing
    let v = rng.gen_range(0..g.num_vertices());
    let p = rng.gen_range(0..=g.degree(v));
    let mut lp = l.to_vec();
    lp.push(q(rng.gen_range(1..20), rng.gen_range(1..5)));
    if mon(&g.attach_pendant(v, p, rng.gen_range(0..2))?, &lp)? != rho {
        bad.push("MON1");
    }
    // MON2: splitting an edge at a two-valent vertex changes nothing
    let e = rng.gen_range(0..g.num_edges());
    let t = &l[e] * q(rng.gen_range(1..10), 10);
    let mut ls = l.to_vec();
    ls[e] = &l[e] - &t;
    ls.push(t);
    if mon(&g.subdivide_edge(e, rng.gen_range(0..2))?, &ls)? != rho {
        bad.push("MON2");
    }
    Ok(bad)
}

/// MON4 on every face-splitting root of `g`.
pub fn partner_weights_sum(g: &MoebiusGraph) -> Result<bool> {
    let target = BPoly::one_plus_b();
    for r in roots(g)? {
        let (case, w) = classify_root_removal(g, r)?;
        if !matches!(case, WeightCase::FaceSplitAligned | WeightCase::FaceSplitReversed) {
            continue;
        }
        let e = g.state_edge(r.0);
        let h = g.with_sign(e, g.sign(e) ^ 1)?;
        // The partner leaves the tail on the other ribbon side, so that it
        // reaches the head on the same side as r and shares its successor.
        let partner = Root(state(state_dart(r.0), -state_eps(r.0)));
        let (case2, w2) = classify_root_removal(&h, partner)?;
        if !matches!(case2, WeightCase::FaceSplitAligned | WeightCase::FaceSplitReversed) || &w + &w2 != target {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn check_mon_properties(cfg: &VerifyConfig) -> Outcome {
    timed(3, || {
        let mut failures = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 3);
        let mut graphs = 0;
        for (two_g, n) in types_up_to(2) {
            for c in unlabelled_classes(two_g, n, &cfg.enumeration)? {
                graphs += 1;
                let g = &c.graph;
                for l in metrics(&mut rng, g.num_edges(), 20) {
                    for p in mon_properties(g, two_g, &l, &mut rng)? {
                        failures.push(format!("{p} on a ({two_g}/2,{n}) graph"));
                    }
                }
                fail_if(partner_weights_sum(g)?, &mut failures, || format!("MON4 on a ({two_g}/2,{n}) graph"));
            }
        }
        Ok(summary(failures, format!("{graphs} graphs x 20 metrics")))
    })
}

// ----- 4 ------------------------------------------------------------------

pub fn check_triple_agreement(cfg: &VerifyConfig, table: &CountTable) -> Outcome {
    timed(4, || {
        let mut failures = Vec::new();
        let max_sum = 12;
        let mut compared = 0;
        for (two_g, n) in types_up_to(3) {
            let direct = count_direct_table(two_g, n, max_sum, &cfg.enumeration)?;
            let rec = count_table(Method::Rec, two_g, n, max_sum, table)?;
            let sym = count_table(Method::Sym, two_g, n, max_sum, table)?;
            fail_if(rec.len() == sorted_keys(n, max_sum).len(), &mut failures, || "missing keys".into());
            for ((l, a), (_, s)) in rec.iter().zip(&sym) {
                compared += 1;
                let d = direct.get(l).cloned().unwrap_or_else(BPoly::zero);
                fail_if(a == s && *a == d, &mut failures, || format!("2g={two_g} L={l:?}"));
            }
        }
        Ok(summary(failures, format!("{compared} sorted L across 12 types")))
    })
}

// ----- 5 ------------------------------------------------------------------

pub fn check_ciliated(cfg: &VerifyConfig) -> Outcome {
    timed(5, || {
        let mut failures = Vec::new();
        let mut compared = 0;
        for (two_g, n) in types_up_to(2) {
            let plain = count_direct_table(two_g, n, 10, &cfg.enumeration)?;
            let cil = ciliated_count_table(two_g, n, 10, &cfg.enumeration)?;
            for l in sorted_keys(n, 10) {
                compared += 1;
                let s: u32 = l.iter().sum();
                let want = plain.get(&l).cloned().unwrap_or_else(BPoly::zero).scale_int(2 * s as i64);
                let got = cil.get(&l).cloned().unwrap_or_else(BPoly::zero);
                fail_if(got == want, &mut failures, || format!("2g={two_g} L={l:?}"));
            }
        }
        Ok(summary(failures, format!("{compared} sorted L across 7 types")))
    })
}

// ----- 6 ------------------------------------------------------------------

pub fn check_quasipolynomials(cfg: &VerifyConfig, table: &CountTable) -> Outcome {
    timed(6, || {
        let mut failures = Vec::new();
        let mut rows = 0;
        let mut wall_checks = 0;
        for (two_g, n) in types_up_to(2) {
            let qp = reconstruct_with(two_g, n, table, &cfg.quasi)?;
            match closed_forms::compare(&qp) {
                Ok(k) => rows += k,
                Err(e) => failures.push(format!("2g={two_g} n={n}: {e}")),
            }
            for p in &qp.pieces {
                let odd = p.chamber.parity.iter().map(|&x| x as u32).sum::<u32>() % 2 == 1;
                fail_if(!odd || p.poly.is_zero(), &mut failures, || format!("odd class nonzero at 2g={two_g} n={n}"));
            }
            for (x, a, b) in wall_points(&qp, 24, cfg.seed) {
                wall_checks += 1;
                for p in qp.pieces.iter().filter(|p| p.chamber.cell == a) {
                    let other = qp.piece(b, &p.chamber.parity).expect("every cell has every class");
                    let v = p.poly.eval(&x);
                    fail_if(v == other.eval(&x) && evaluate(&qp, &x, &p.chamber.parity)? == v, &mut failures, || {
                        format!("jump across a wall at 2g={two_g} n={n}")
                    });
                }
            }
        }
        fail_if(wall_checks >= 50, &mut failures, || format!("only {wall_checks} wall points"));
        Ok(summary(failures, format!("{rows} printed pieces, {wall_checks} wall points")))
    })
}

// ----- 7 ------------------------------------------------------------------

fn generic_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<Q> {
    let ws = walls(n);
    loop {
        let l: Vec<Q> = (0..n).map(|_| q(rng.gen_range(1..200), rng.gen_range(1..12))).collect();
        if ws.iter().all(|w| {
            let s: Q = w.iter().zip(&l).map(|(&a, x)| qi(a as i64) * x).sum();
            !s.is_zero()
        }) {
            return l;
        }
    }
}

pub fn check_volumes(cfg: &VerifyConfig, table: &CountTable) -> Outcome {
    timed(7, || {
        let mut failures = Vec::new();
        let book = VolumeBook::new(table, cfg.quasi.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 7);
        for (two_g, n) in types_up_to(2).into_iter().filter(|&(g, n)| level(g, n) == 2) {
            let pts: Vec<Vec<Q>> = (0..6).map(|_| generic_point(&mut rng, n as usize)).collect();
            if let Err(e) = check_volume_recursion(&book, two_g, n, &pts) {
                failures.push(format!("2g={two_g} n={n}: {e}"));
            }
        }
        // (0,4): on a 3^4 grid inside each chamber the right-hand side is ΣL²/4,
        // which determines the local quadratic exactly
        let v = book.get(0, 4)?;
        for cell in &v.cells {
            for first in 0..4 {
                for k in 0..81usize {
                    let ks = [k % 3, k / 3 % 3, k / 9 % 3, k / 27];
                    let mut l: Vec<Q> = (0..4).map(|i| &cell.point[i] * qi(100_000) + qi(ks[i] as i64)).collect();
                    let want: Q = l.iter().map(|x| x * x).sum::<Q>() / qi(4);
                    l.swap(0, first);
                    let got = volume_rhs(&book, 0, 4, &l)?;
                    fail_if(got == BPoly::constant(want), &mut failures, || format!("(0,4) at {l:?}"));
                }
            }
        }
        Ok(summary(failures, format!("6 points x 4 types, (0,4) on {} chambers", v.cells.len())))
    })
}

// ----- 8 ------------------------------------------------------------------

pub fn check_mesh(table: &CountTable) -> Outcome {
    timed(8, || {
        let mut parts = Vec::new();
        let mut pass = true;
        for l in [4u32, 8] {
            let v = volume_base(2, 1, &[qi(l as i64)])?;
            let r = relative_error(&rescaled_count(2, 1, &[l], 8, table)?, &v)
                .ok_or_else(|| Error::CrossCheck("support mismatch".into()))?;
            let ok = r < q(1, 20);
            pass &= ok;
            let pct = &r * qi(100);
            parts.push(format!(
                "L={l}: {:.2}% {}",
                num_traits::ToPrimitive::to_f64(&pct).unwrap_or(f64::NAN),
                if ok { "ok" } else { "over 5%" }
            ));
        }
        Ok((pass, parts.join(", ")))
    })
}

// ----- 9 ------------------------------------------------------------------

pub fn check_euler(cfg: &VerifyConfig, table: &CountTable) -> Outcome {
    timed(9, || {
        let mut failures = Vec::new();
        for (two_g, n) in types_up_to(3) {
            let a = chi_graph_sum_with(two_g, n, &cfg.enumeration)?;
            let c = chi_constant_term_with(two_g, n, table, &cfg.quasi)?;
            let d = chi_closed_form(two_g, n)?;
            fail_if(a == d && c == d, &mut failures, || format!("three ways disagree at 2g={two_g} n={n}"));
        }
        let chi = chi_closed_form(2, 1)?;
        fail_if(
            chi_specializations(2, 1, &chi) == (Some(q(-1, 12)), Q::zero()),
            &mut failures,
            || "specializations at (1,1)".into(),
        );
        fail_if(printed_rows_follow_gamma(), &mut failures, || "printed row ratios".into());
        let rows = compare_printed()?;
        let exact = rows.iter().filter(|r| r.status == PrintedMatch::Exact).count();
        let negated: Vec<String> = rows
            .iter()
            .filter(|r| r.status == PrintedMatch::Negated)
            .map(|r| format!("({}/2,{})", r.two_g, r.n))
            .collect();
        let differs = rows.iter().filter(|r| r.status == PrintedMatch::Differs).count();
        if exact != rows.len() {
            failures.push(format!(
                "printed table: {exact}/{} exact, {} negated {}, {differs} other",
                rows.len(),
                negated.len(),
                negated.join(" ")
            ));
        }
        Ok(summary(failures, format!("12 types three ways, {exact}/{} printed entries", rows.len())))
    })
}

// ----- 10 -----------------------------------------------------------------

pub fn check_s_series(cfg: &VerifyConfig, table: &CountTable) -> Outcome {
    timed(10, || {
        let mut failures = Vec::new();
        for (two_g, n) in [(0u32, 3u32), (1, 2), (2, 1)] {
            fail_if(s_series_check(two_g, n, 10, table, &cfg.enumeration)?, &mut failures, || {
                format!("2g={two_g} n={n}")
            });
        }
        Ok(summary(failures, "three base types to z^10".into()))
    })
}

// ----- 11 -----------------------------------------------------------------

pub fn check_weber_airy(cfg: &VerifyConfig) -> Outcome {
    timed(11, || {
        let mut failures = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 11);
        for (two_g, n) in [(0u32, 3u32), (1, 2), (2, 1)] {
            fail_if(check_against_base(two_g, n, 16)?, &mut failures, || format!("Weber 2g={two_g} n={n}"));
            let pts: Vec<Vec<Q>> = (0..20)
                .map(|_| (0..n).map(|_| q(rng.gen_range(1..40), rng.gen_range(1..9))).collect())
                .collect();
            fail_if(airy_laplace_check(two_g, n, &pts)?, &mut failures, || format!("Airy 2g={two_g} n={n}"));
        }
        Ok(summary(failures, "three base types, sum of L up to 16, 20 Laplace points each".into()))
    })
}

// ----- 12 -----------------------------------------------------------------

#[derive(Serialize)]
struct Artifacts {
    counts: Vec<(u32, u32, Vec<(Vec<u32>, BPoly)>)>,
    quasi: Vec<serde_json::Value>,
    chi: Vec<(u32, u32, BPoly)>,
    mesh: Vec<BPoly>,
}

/// Digest of the numeric results the checks depend on, computed against `table`.
pub fn fingerprint(cfg: &VerifyConfig, table: &CountTable) -> Result<String> {
    let mut a = Artifacts {
        counts: Vec::new(),
        quasi: Vec::new(),
        chi: Vec::new(),
        mesh: Vec::new(),
    };
    for (two_g, n) in types_up_to(3) {
        let rec = count_table(Method::Rec, two_g, n, 12, table)?;
        let sym = count_table(Method::Sym, two_g, n, 12, table)?;
        if rec != sym {
            return Err(Error::CrossCheck(format!("rec vs sym at 2g={two_g} n={n}")));
        }
        a.counts.push((two_g, n, rec));
        a.chi.push((two_g, n, chi_constant_term_with(two_g, n, table, &cfg.quasi)?));
    }
    for (two_g, n) in types_up_to(2) {
        let count = count_direct_table(two_g, n, 10, &cfg.enumeration)?;
        a.counts.push((two_g, n, count.into_iter().collect()));
        a.quasi.push(serde_json::to_value(reconstruct_with(two_g, n, table, &cfg.quasi)?)?);
    }
    for l in [4u32, 8] {
        a.mesh.push(rescaled_count(2, 1, &[l], 8, table)?);
    }
    let bytes = serde_json::to_vec(&a)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Precondition(format!("thread pool: {e}")))
}

/// Compares fingerprints across a cold and a warm disk cache with many threads
/// and a fresh cache with one thread. `scratch` must be an empty directory.
pub fn check_determinism(cfg: &VerifyConfig, scratch: &Path) -> Outcome {
    timed(12, || {
        let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(4).max(2);
        let many = pool(threads)?;
        let one = pool(1)?;
        let dir_a = scratch.join("many");
        let dir_b = scratch.join("one");
        let cold = many.install(|| fingerprint(cfg, &CountTable::open(&dir_a)?))?;
        let reopened = CountTable::open(&dir_a)?;
        let stored = reopened.len();
        let warm = many.install(|| fingerprint(cfg, &reopened))?;
        let single = one.install(|| fingerprint(cfg, &CountTable::open(&dir_b)?))?;
        let pass = cold == warm && cold == single && stored > 0;
        Ok((
            pass,
            format!(
                "{}-thread cold {}, warm ({stored} stored) {}, 1-thread {}",
                threads,
                &cold[..12],
                &warm[..12],
                &single[..12]
            ),
        ))
    })
}

/// Runs every check in order.
pub fn run_all(cfg: &VerifyConfig, table: &CountTable, scratch: &Path) -> Vec<Outcome> {
    vec![
        check_enumeration(),
        check_mon_fixtures(cfg),
        check_mon_properties(cfg),
        check_triple_agreement(cfg, table),
        check_ciliated(cfg),
        check_quasipolynomials(cfg, table),
        check_volumes(cfg, table),
        check_mesh(table),
        check_euler(cfg, table),
        check_s_series(cfg, table),
        check_weber_airy(cfg),
        check_determinism(cfg, scratch),
    ]
}
