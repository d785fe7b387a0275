use std::collections::BTreeMap;

use moebius::cache::{default_cache_dir, CountKey, CountTable, Method};
use moebius::enumerate::{enumerate_graphs_with, EnumConfig};
use moebius::euler::{chi_closed_form, compare_printed, PrintedMatch};
use moebius::lattice::count_direct_with;
use moebius::mon::mon;
use moebius::quasipoly::{reconstruct_with, QuasiConfig, QuasiPoly};
use moebius::rational::{fmt_q, parse_q};
use moebius::recursion::{count_recursive_in, count_recursive_symmetric_in, level};
use moebius::verify::{run_all, VerifyConfig};
use moebius::volume::VolumeBook;
use moebius::weber_series::check_against_base;
use moebius::{BPoly, Error, MoebiusGraph, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::args::{CacheAction, Command, GlobalOpts, MethodArg};
use crate::output::{Output, Table};

const COUNT_LEVEL: u32 = 4;
const RECONSTRUCTION_LEVEL: u32 = 2;

pub fn run(cmd: &Command, g: &GlobalOpts) -> Result<Output> {
    match cmd {
        Command::Enumerate { two_g, n } => enumerate(g, *two_g, *n),
        Command::Mon { graph, metric } => mon_at(graph, metric),
        Command::Count { two_g, n, l, method } => count(g, *two_g, *n, l, *method),
        Command::Table { two_g, n } => table(g, *two_g, *n),
        Command::Volume { two_g, n, l } => volume(g, *two_g, *n, l),
        Command::Euler { max_chi } => euler(max_chi[0], max_chi[1]),
        Command::WeberCheck { max_sum } => weber_check(*max_sum),
        Command::Verify => verify(g),
        Command::Cache { action } => cache(g, action),
    }
}

fn enum_config(g: &GlobalOpts) -> EnumConfig {
    EnumConfig {
        max_level: g.max_level.unwrap_or(COUNT_LEVEL),
        ..EnumConfig::default()
    }
}

fn quasi_config(g: &GlobalOpts) -> QuasiConfig {
    QuasiConfig {
        max_level: g.max_level.unwrap_or(RECONSTRUCTION_LEVEL) as i64,
        seed: g.seed,
    }
}

fn open_table(g: &GlobalOpts) -> Result<CountTable> {
    if g.no_cache {
        Ok(CountTable::in_memory())
    } else {
        CountTable::open(g.cache_dir.clone().unwrap_or_else(default_cache_dir))
    }
}

fn check_level(g: &GlobalOpts, two_g: u32, n: u32) -> Result<()> {
    let lv = level(two_g, n);
    if lv <= 0 {
        return Err(Error::Precondition(format!("2g-2+n must be positive, got 2g={two_g}, n={n}")));
    }
    let cap = g.max_level.unwrap_or(COUNT_LEVEL);
    if lv > cap as i64 {
        return Err(Error::Budget(format!("2g-2+n = {lv} exceeds --max-level {cap}")));
    }
    Ok(())
}

fn coeff_columns(prefix: Vec<String>, degree: usize) -> Vec<String> {
    let mut h = prefix;
    h.extend((0..=degree).map(|k| format!("b^{k}")));
    h
}

fn padded(p: &BPoly, degree: usize) -> Vec<String> {
    (0..=degree).map(|k| fmt_q(&p.coeff(k))).collect()
}

fn joined(v: &[u32]) -> String {
    v.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")
}

// ----- enumerate ----------------------------------------------------------

fn enumerate(g: &GlobalOpts, two_g: u32, n: u32) -> Result<Output> {
    check_level(g, two_g, n)?;
    let inv = enumerate_graphs_with(two_g, n, &enum_config(g))?;
    let mut t = Table::new(["index", "edges", "aut", "orientable", "code", "graph"]);
    let mut graphs = Vec::new();
    for (i, e) in inv.entries.iter().enumerate() {
        let code = e.code.to_hex();
        t.push([
            i.to_string(),
            e.edges.to_string(),
            e.aut.to_string(),
            e.orientable.to_string(),
            code.clone(),
            e.graph.to_json(),
        ]);
        graphs.push(json!({
            "edges": e.edges,
            "aut": e.aut,
            "orientable": e.orientable,
            "code": code,
            "graph": e.graph.to_json_value(),
        }));
    }
    Output::ok(json!({ "two_g": two_g, "n": n, "count": graphs.len(), "graphs": graphs }), t)
}

// ----- mon ----------------------------------------------------------------

fn mon_at(path: &std::path::Path, metric: &[String]) -> Result<Output> {
    let text = std::fs::read_to_string(path)?;
    let graph = MoebiusGraph::from_json(&text)?;
    let lengths = metric.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>>>()?;
    let rho = mon(&graph, &lengths)?;
    let degree = rho.degree().unwrap_or(0);
    let mut t = Table::new(coeff_columns(vec!["metric".into()], degree));
    let mut row = vec![metric.join(" ")];
    row.extend(padded(&rho, degree));
    t.push(row);
    Output::ok(json!({ "metric": metric, "rho": rho, "display": rho.to_string() }), t)
}

// ----- count --------------------------------------------------------------

fn method_of(m: MethodArg) -> Method {
    match m {
        MethodArg::Rec => Method::Rec,
        MethodArg::Sym => Method::Sym,
        MethodArg::Direct => Method::Direct,
    }
}

fn count_with(g: &GlobalOpts, table: &CountTable, two_g: u32, n: u32, l: &[u32], method: Method) -> Result<BPoly> {
    match method {
        Method::Rec => count_recursive_in(two_g, n, l, table),
        Method::Sym => count_recursive_symmetric_in(two_g, n, l, table),
        Method::Direct => {
            let mut sorted = l.to_vec();
            sorted.sort_unstable();
            let key = CountKey { method, two_g, n, l: sorted };
            if let Some(v) = table.get(&key) {
                return Ok(v);
            }
            let v = count_direct_with(two_g, n, l, &enum_config(g))?;
            table.insert(key, v.clone())?;
            Ok(v)
        }
    }
}

fn count(g: &GlobalOpts, two_g: u32, n: u32, l: &[u32], method: MethodArg) -> Result<Output> {
    check_level(g, two_g, n)?;
    if l.len() != n as usize {
        return Err(Error::Precondition(format!("expected {n} perimeters, got {}", l.len())));
    }
    let table = open_table(g)?;
    let v = count_with(g, &table, two_g, n, l, method_of(method))?;
    let degree = v.degree().unwrap_or(0);
    let mut t = Table::new(coeff_columns(vec!["L".into()], degree));
    let mut row = vec![joined(l)];
    row.extend(padded(&v, degree));
    t.push(row);
    Output::ok(json!({ "two_g": two_g, "n": n, "L": l, "N": v, "display": v.to_string() }), t)
}

// ----- table / volume -----------------------------------------------------

fn quasi_table(qp: &QuasiPoly) -> Table {
    let degree = qp
        .pieces
        .iter()
        .filter_map(|p| p.poly.b_degree())
        .max()
        .unwrap_or(0);
    let mut t = Table::new(coeff_columns(vec!["cell".into(), "parity".into(), "exponent".into()], degree));
    for p in &qp.pieces {
        let parity: Vec<u32> = p.chamber.parity.iter().map(|&x| x as u32).collect();
        for (e, c) in p.poly.terms() {
            let mut row = vec![p.chamber.cell.to_string(), joined(&parity), joined(e)];
            row.extend(padded(c, degree));
            t.push(row);
        }
    }
    t
}

fn table(g: &GlobalOpts, two_g: u32, n: u32) -> Result<Output> {
    let counts = open_table(g)?;
    let qp = reconstruct_with(two_g, n, &counts, &quasi_config(g))?;
    let t = quasi_table(&qp);
    Output::ok(&qp, t)
}

fn volume(g: &GlobalOpts, two_g: u32, n: u32, l: &[String]) -> Result<Output> {
    let counts = open_table(g)?;
    let book = VolumeBook::new(&counts, quasi_config(g));
    if l.is_empty() {
        let v = book.get(two_g, n)?;
        let t = quasi_table(&v);
        return Output::ok(&*v, t);
    }
    if l.len() != n as usize {
        return Err(Error::Precondition(format!("expected {n} perimeters, got {}", l.len())));
    }
    let x = l.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>>>()?;
    let v = book.value(two_g, &x)?;
    let degree = v.degree().unwrap_or(0);
    let mut t = Table::new(coeff_columns(vec!["L".into()], degree));
    let mut row = vec![l.join(" ")];
    row.extend(padded(&v, degree));
    t.push(row);
    Output::ok(json!({ "two_g": two_g, "n": n, "L": l, "V": v, "display": v.to_string() }), t)
}

// ----- euler --------------------------------------------------------------

fn genus_label(two_g: u32) -> String {
    if two_g % 2 == 0 {
        (two_g / 2).to_string()
    } else {
        format!("{two_g}/2")
    }
}

#[derive(Serialize)]
struct ChiCell {
    two_g: u32,
    n: u32,
    chi: BPoly,
    display: String,
    /// Agreement with the printed reference value, when there is one.
    printed: Option<PrintedMatch>,
}

fn euler(max_two_g: u32, max_n: u32) -> Result<Output> {
    let printed: BTreeMap<(u32, u32), PrintedMatch> = compare_printed()?
        .into_iter()
        .map(|r| ((r.two_g, r.n), r.status))
        .collect();
    let mut t = Table::new(std::iter::once("g".to_string()).chain((0..=max_n).map(|n| format!("n={n}"))));
    let mut cells = Vec::new();
    for two_g in 0..=max_two_g {
        let mut row = vec![genus_label(two_g)];
        for n in 0..=max_n {
            if level(two_g, n) <= 0 {
                row.push(String::new());
                continue;
            }
            let chi = chi_closed_form(two_g, n)?;
            row.push(chi.to_string());
            cells.push(ChiCell {
                two_g,
                n,
                display: chi.to_string(),
                chi,
                printed: printed.get(&(two_g, n)).copied(),
            });
        }
        t.push(row);
    }
    Output::ok(json!({ "cells": cells }), t)
}

// ----- weber-check --------------------------------------------------------

fn weber_check(max_sum: u32) -> Result<Output> {
    let mut t = Table::new(["two_g", "n", "max_sum", "agrees"]);
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for (two_g, n) in [(0, 3), (1, 2), (2, 1)] {
        let ok = check_against_base(two_g, n, max_sum)?;
        if !ok {
            bad.push(format!("({two_g},{n})"));
        }
        t.push([two_g.to_string(), n.to_string(), max_sum.to_string(), ok.to_string()]);
        rows.push(json!({ "two_g": two_g, "n": n, "max_sum": max_sum, "agrees": ok }));
    }
    let failed = !bad.is_empty();
    Ok(Output::ok(json!({ "types": rows }), t)?
        .failing_if(failed, || Error::CrossCheck(format!("series disagree with counts for {}", bad.join(" ")))))
}

// ----- verify -------------------------------------------------------------

fn verify(g: &GlobalOpts) -> Result<Output> {
    let counts = open_table(g)?;
    let scratch = tempfile::tempdir()?;
    let cfg = VerifyConfig {
        seed: g.seed,
        ..VerifyConfig::default()
    };
    let outcomes = run_all(&cfg, &counts, scratch.path());
    for o in &outcomes {
        eprintln!("{}", o.line());
    }
    let mut t = Table::new(["id", "title", "pass", "detail"]);
    for o in &outcomes {
        t.push([o.id.to_string(), o.title.to_string(), o.pass.to_string(), o.detail.clone()]);
    }
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id.to_string()).collect();
    let passed = outcomes.len() - failed.len();
    let summary = json!({ "passed": passed, "total": outcomes.len(), "criteria": outcomes });
    let any = !failed.is_empty();
    Ok(Output::ok(summary, t)?.failing_if(any, || Error::CrossCheck(format!("criteria {} failed", failed.join(", ")))))
}

// ----- cache --------------------------------------------------------------

fn cache(g: &GlobalOpts, action: &CacheAction) -> Result<Output> {
    if g.no_cache {
        return Err(Error::Precondition("cache commands need a cache directory".into()));
    }
    let dir = g.cache_dir.clone().unwrap_or_else(default_cache_dir);
    let counts = CountTable::open(&dir)?;
    match action {
        CacheAction::List => cache_list(&counts),
        CacheAction::Verify { fraction } => cache_verify(g, &counts, *fraction),
        CacheAction::Purge => {
            let files = counts.purge()?;
            let mut t = Table::new(["files_removed"]);
            t.push([files.to_string()]);
            Output::ok(json!({ "files_removed": files }), t)
        }
    }
}

fn corrupt_json(c: &[(String, usize)]) -> Vec<serde_json::Value> {
    c.iter().map(|(f, line)| json!({ "file": f, "line": line })).collect()
}

fn cache_list(counts: &CountTable) -> Result<Output> {
    let report = counts.scan()?;
    let mut groups: BTreeMap<(Method, u32, u32), (usize, u32)> = BTreeMap::new();
    for k in counts.stored()?.keys() {
        let e = groups.entry((k.method, k.two_g, k.n)).or_insert((0, 0));
        e.0 += 1;
        e.1 = e.1.max(k.l.iter().sum());
    }
    let mut t = Table::new(["method", "two_g", "n", "records", "max_sum"]);
    let mut rows = Vec::new();
    for ((m, two_g, n), (records, max_sum)) in &groups {
        t.push([m.as_str().to_string(), two_g.to_string(), n.to_string(), records.to_string(), max_sum.to_string()]);
        rows.push(json!({ "method": m, "two_g": two_g, "n": n, "records": records, "max_sum": max_sum }));
    }
    let corrupt = !report.corrupt.is_empty();
    let n_corrupt = report.corrupt.len();
    Ok(Output::ok(
        json!({
            "files": report.files,
            "records": report.records,
            "groups": rows,
            "corrupt": corrupt_json(&report.corrupt),
        }),
        t,
    )?
    .failing_if(corrupt, || Error::CrossCheck(format!("{n_corrupt} corrupt cache records"))))
}

fn cache_verify(g: &GlobalOpts, counts: &CountTable, fraction: f64) -> Result<Output> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Precondition(format!("fraction must lie in [0, 1], got {fraction}")));
    }
    let report = counts.scan()?;
    let stored: Vec<(CountKey, BPoly)> = counts.stored()?.into_iter().collect();
    let want = if stored.is_empty() {
        0
    } else {
        ((stored.len() as f64 * fraction).ceil() as usize).clamp(1, stored.len())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let mut sample: Vec<&(CountKey, BPoly)> = stored.choose_multiple(&mut rng, want).collect();
    sample.sort_by(|a, b| a.0.cmp(&b.0));
    // recompute from scratch so that no stored value feeds its own check
    let fresh = CountTable::in_memory();
    let mut mismatched = Vec::new();
    for (k, v) in &sample {
        let again = count_with(g, &fresh, k.two_g, k.n, &k.l, k.method)?;
        if &again != v {
            mismatched.push(json!({
                "method": k.method, "two_g": k.two_g, "n": k.n, "L": k.l,
                "stored": v, "recomputed": again,
            }));
        }
    }
    let mut t = Table::new(["kind", "file_or_method", "line_or_type", "detail"]);
    for (f, line) in &report.corrupt {
        t.push(["corrupt".to_string(), f.clone(), line.to_string(), String::new()]);
    }
    for m in &mismatched {
        t.push([
            "mismatch".to_string(),
            m["method"].as_str().unwrap_or_default().to_string(),
            format!("({},{})", m["two_g"], m["n"]),
            m["L"].to_string(),
        ]);
    }
    let bad = report.corrupt.len() + mismatched.len();
    Ok(Output::ok(
        json!({
            "records": report.records,
            "sampled": sample.len(),
            "corrupt": corrupt_json(&report.corrupt),
            "mismatched": mismatched,
        }),
        t,
    )?
    .failing_if(bad > 0, || Error::CrossCheck(format!("{bad} cache problems found, nothing repaired"))))
}
