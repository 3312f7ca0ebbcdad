//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

use std::process::ExitCode;
use std::time::Instant;

use ddr_core::geometry::Cell;
use ddr_core::mesh::shapes;
use ddr_core::par;
use ddr_core::verify::{self, CheckResult, Config, Sequence};

const TOL: f64 = 1e-10;
const L2_TOL: f64 = 1e-11;
const SAMPLES: usize = 20;
const RHS_SAMPLES: usize = 10;
const DEGREES: [usize; 4] = [0, 1, 2, 3];
const BUDGET_DOFS: f64 = 5.0;
const BUDGET_2D: f64 = 10.0;
const BUDGET_3D_LARGEST: f64 = 120.0;
const LOOSE_RANK_TOL: f64 = 1e-2;

const PLANAR: [&str; 4] = ["triangle", "square", "pentagon", "hexagon"];
const SOLID: [&str; 4] = ["tetra", "cube", "prism", "lprism"];

fn cell(name: &str) -> Cell {
    shapes::by_name(name).unwrap().cell(0).unwrap()
}

fn config() -> Config {
    Config { tol: TOL, l2_tol: L2_TOL, samples: SAMPLES, rhs_samples: RHS_SAMPLES, ..Config::default() }
}

struct Line {
    ok: bool,
    text: String,
}

fn verdict(n: usize, title: &str, checks: &[&CheckResult], extra_ok: bool, extra: String) -> Line {
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed()).take(5).map(|c| format!("cell {} k {} {} ({:e})", c.cell, c.k, c.name, c.residual)).collect();
    let worst = checks.iter().filter(|c| c.expected.is_none() && c.tolerance < 1.0).map(|c| c.residual).fold(0.0, f64::max);
    let ok = failed.is_empty() && extra_ok && !checks.is_empty();
    let mut text = format!("{n}. {title}: {} checks, worst residual {worst:.2e}; {extra}", checks.len());
    if !failed.is_empty() {
        text.push_str(&format!("; failing: {}", failed.join(", ")));
    }
    Line { ok, text }
}

fn select<'a>(all: &'a [CheckResult], pred: impl Fn(&str) -> bool) -> Vec<&'a CheckResult> {
    all.iter().filter(|c| pred(&c.name)).collect()
}

struct Built {
    seq: Sequence,
    seconds: f64,
}

fn build_all(names: &[&str]) -> Vec<Built> {
    let cfg = config();
    let tasks: Vec<(Cell, usize)> = names.iter().flat_map(|n| DEGREES.map(|k| (cell(n), k))).collect();
    par::map(&tasks, |(c, k)| {
        let t = Instant::now();
        let seq = Sequence::build(c, *k, &cfg.options).expect("sequence builds");
        Built { seq, seconds: t.elapsed().as_secs_f64() }
    })
}

fn run_suite(built: &[Built], f: fn(&Sequence, &Config) -> Vec<CheckResult>, cfg: &Config) -> Vec<CheckResult> {
    par::map(built, |b| f(&b.seq, cfg)).into_iter().flatten().collect()
}

fn main() -> ExitCode {
    let cfg = config();
    let mut lines = Vec::new();

    // 1. DOF counts.
    let t = Instant::now();
    let dof_cells = ["triangle", "rectangle", "tetra", "cube"];
    let dof_built = build_all(&dof_cells);
    let dof: Vec<CheckResult> = dof_built.iter().flat_map(|b| verify::run_dof_tables(&b.seq, &cfg).1).collect();
    let dt = t.elapsed().as_secs_f64();
    let golden = select(&dof, |n| !n.ends_with(".sum"));
    let entries = verify::golden_tables().len();
    let covered = golden.iter().filter(|c| c.name.ends_with(".total")).count();
    lines.push(verdict(
        1,
        "DOF-count reproduction",
        &dof.iter().collect::<Vec<_>>(),
        covered == entries && dt < BUDGET_DOFS,
        format!("{covered}/{entries} table rows compared, {dt:.2} s (budget {BUDGET_DOFS} s)"),
    ));

    // 2. Planar exactness.
    let t = Instant::now();
    let planar = build_all(&PLANAR);
    let planar_exact = run_suite(&planar, verify::run_exactness, &cfg);
    let dt = t.elapsed().as_secs_f64();
    let exact = |n: &str| n.starts_with("exact.");
    lines.push(verdict(
        2,
        "2D exactness",
        &select(&planar_exact, exact),
        dt < BUDGET_2D,
        format!("{dt:.2} s (budget {BUDGET_2D} s)"),
    ));

    // 3. Solid exactness.
    let solid = build_all(&SOLID);
    let t = Instant::now();
    let solid_exact = run_suite(&solid, verify::run_exactness, &cfg);
    let exact_time = t.elapsed().as_secs_f64();
    let largest = solid.iter().filter(|b| b.seq.k() == 3).max_by_key(|b| match &b.seq {
        Sequence::Solid(d) => d.curl_dim(),
        Sequence::Planar { .. } => 0,
    });
    let largest = largest.expect("k = 3 cells");
    let t = Instant::now();
    let _ = verify::run_exactness(&largest.seq, &cfg);
    let largest_time = largest.seconds + t.elapsed().as_secs_f64();
    lines.push(verdict(
        3,
        "3D exactness",
        &select(&solid_exact, exact),
        largest_time < BUDGET_3D_LARGEST,
        format!(
            "largest cell (k = 3, {} edges) {largest_time:.2} s (budget {BUDGET_3D_LARGEST} s), all exactness checks {exact_time:.2} s",
            largest.seq.cell().edges.len()
        ),
    ));

    let both: Vec<Built> = planar.into_iter().chain(solid).collect();

    // 4. Commutation.
    let comm = run_suite(&both, verify::run_commutation, &cfg);
    lines.push(verdict(4, "Commutative diagrams", &select(&comm, |n| n.starts_with("commute.")), true, format!("{SAMPLES} samples per diagram")));

    // 5 and 6. Consistency and L2 products.
    let cons = run_suite(&both, verify::run_consistency, &cfg);
    lines.push(verdict(5, "Consistency battery", &select(&cons, |n| !n.starts_with("l2.")), true, format!("{SAMPLES} samples per identity")));
    let l2 = select(&cons, |n| n.starts_with("l2."));
    let cond = l2.iter().filter(|c| c.name.ends_with(".definite")).map(|c| c.residual).fold(0.0, f64::max);
    lines.push(verdict(
        6,
        "L2 products",
        &l2,
        true,
        format!("consistency tolerance {L2_TOL:e}, largest Gram condition number {cond:.2e} (limit {:e})", 1.0 / verify::GRAM_RATIO),
    ));

    // 7. Surjectivity.
    let all_exact: Vec<CheckResult> = planar_exact.into_iter().chain(solid_exact).collect();
    let surj = select(&all_exact, |n| n.starts_with("surjectivity."));
    let necessary = surj.iter().filter(|c| c.name.ends_with("-necessary")).count();
    lines.push(verdict(
        7,
        "Surjectivity constructions",
        &surj,
        necessary >= both.len(),
        format!("{RHS_SAMPLES} right-hand sides per cell, {necessary} incompatible-data rejections"),
    ));

    // 8. Negative controls.
    let neg = select(&all_exact, |n| n.starts_with("negative."));
    let loose = Config { rank_tol: LOOSE_RANK_TOL, ..config() };
    let reported: Vec<CheckResult> = both
        .iter()
        .filter(|b| b.seq.k() == 1)
        .flat_map(|b| verify::run_exactness(&b.seq, &loose))
        .filter(|c| c.name == "rank-tolerance")
        .collect();
    let flagged = reported.iter().filter(|c| !c.passed()).count();
    lines.push(verdict(
        8,
        "Negative controls",
        &neg,
        flagged == reported.len() && !reported.is_empty(),
        format!("{} corrupted-orientation cells detected, rank tolerance {LOOSE_RANK_TOL:e} flagged on {flagged}/{} cells", neg.len(), reported.len()),
    ));

    let mut ok = true;
    for l in &lines {
        println!("{} {}", if l.ok { "PASS" } else { "FAIL" }, l.text);
        ok &= l.ok;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
