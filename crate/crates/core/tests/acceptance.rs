//! Acceptance suite. Each test checks one criterion and prints a single
//! `criterion N: PASS|FAIL` line straight to stdout, past the test harness
//! capture.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;
use tropical_mlbn::harness::{self, ExperimentConfig};
use tropical_mlbn::model::Innovation;
use tropical_mlbn::polytrope::{
    bounding_contains, catalan, cell_of_point, dual_subdivision, min_bounding_matrix,
    pseudovertices,
};
use tropical_mlbn::rng::stream;
use tropical_mlbn::set_cover::{
    census, complete_support, draw_generic, exact_cover_cells, is_strictly_closed, CensusOptions,
};
use tropical_mlbn::*;

fn report(n: u32, title: &str, ok: bool, detail: &str, elapsed: Duration) {
    let status = if ok { "PASS" } else { "FAIL" };
    let line = format!(
        "criterion {n}: {status} - {title} [{detail}] ({:.1}s)\n",
        elapsed.as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
}

fn point(x: &[f64]) -> TropicalPoint {
    TropicalPoint::new(x).unwrap()
}

fn cells_of(c: &TropicalMatrix, pts: &[[f64; 3]]) -> BTreeSet<Vec<String>> {
    pts.iter()
        .map(|p| cell_of_point(c, &point(p), 0.0).unwrap().labels())
        .collect()
}

fn labels(sets: &[&[&str]]) -> BTreeSet<Vec<String>> {
    sets.iter()
        .map(|s| s.iter().map(|l| l.to_string()).collect())
        .collect()
}

#[test]
fn criterion_01_worked_three_node_example() {
    let start = Instant::now();
    let dag = Dag::from_edges(3, &[(0, 1, 1.0), (0, 2, 2.0), (1, 2, 3.0)]).unwrap();
    let c = dag.weight_matrix();
    let s1 = [[0.0, -1.0, 2.0], [0.0, 1.0, 1.0]];
    let s2 = [[0.0, 0.0, 2.0], [0.0, 1.0, 1.0], [0.0, 0.0, 1.0]];

    let sample1 = Sample::from_rows(&s1.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap();
    let restricted = known_dag_estimate(&sample1, &dag).unwrap();
    let matrix_ok = restricted == c;

    let got1 = cells_of(&c, &s1);
    let want1 = labels(&[&["e12"], &["e13", "e23"]]);
    let got2 = cells_of(&c, &s2);
    let want2 = labels(&[&["e13"], &["e23"], &["e12"]]);

    let ok = matrix_ok && got1 == want1 && got2 == want2;
    let detail = format!(
        "restricted bounding matrix == C: {matrix_ok}; cells(S1) = {got1:?}; cells(S2) = {got2:?}, expected {want2:?}"
    );
    report(
        1,
        "worked example cells and bounding matrix",
        ok,
        &detail,
        start.elapsed(),
    );
    assert!(start.elapsed() < Duration::from_secs(1));
    assert!(matrix_ok);
    assert_eq!(got1, want1);
    assert_eq!(
        got2, want2,
        "the point (0,0,1) of S2 is tight on no constraint of C"
    );
}

#[test]
fn criterion_02_facets_and_pseudovertices() {
    let start = Instant::now();
    let opts = CensusOptions::default();
    let support = complete_support(4);
    let mut types = BTreeSet::new();
    let mut bad = Vec::new();
    for k in 0..600 {
        let (c, sub, _) = draw_generic(4, &support, &opts, &mut stream(2, k)).unwrap();
        let verts = pseudovertices(&c, &PolytropeOptions::default()).unwrap();
        if sub.universe().len() != 6 || verts.len() != 5 {
            bad.push(k);
        }
        types.insert(sub);
    }
    let mut max_counts = BTreeMap::new();
    for (d, draws) in [(3usize, 300u64), (5, 300), (6, 150)] {
        let support = complete_support(d);
        let mut worst = 0;
        for k in 0..draws {
            let (c, _, _) =
                draw_generic(d, &support, &opts, &mut stream(20 + d as u64, k)).unwrap();
            worst = worst.max(
                pseudovertices(&c, &PolytropeOptions::default())
                    .unwrap()
                    .len(),
            );
        }
        max_counts.insert(d, worst);
    }
    let catalan_ok = max_counts
        .iter()
        .all(|(&d, &m)| m as u64 <= catalan(d as u64 - 1));
    let ok = bad.is_empty() && types.len() == 2 && catalan_ok;
    let detail = format!(
        "600 draws on kappa_4: {} off-count, {} types; max pseudovertices {max_counts:?}",
        bad.len(),
        types.len()
    );
    report(
        2,
        "six facets, five pseudovertices, two types",
        ok,
        &detail,
        start.elapsed(),
    );
    assert!(ok, "{detail}");
    assert!(start.elapsed() < Duration::from_secs(120));
}

#[test]
fn criterion_03_minimum_cover_sizes() {
    let start = Instant::now();
    let opts = CensusOptions::default();
    let expected: [(usize, usize, &[usize]); 4] = [
        (3, 50, &[2]),
        (4, 200, &[2, 3]),
        (5, 2000, &[3]),
        (6, 3000, &[3, 4]),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (d, draws, sizes) in expected {
        let cen = census(d, draws, 3, &opts).unwrap();
        let got = cen.observed_sizes();
        let want: BTreeSet<usize> = sizes.iter().copied().collect();
        let agreement = cen.greedy_agreement();
        let exact_known = cen.types.values().all(|t| t.min_cover_exact.is_some());
        ok &= got == want && agreement >= 0.95 && exact_known;
        parts.push(format!(
            "d={d}: sizes {got:?} (want {want:?}), greedy agreement {:.1}%",
            100.0 * agreement
        ));
    }
    report(
        3,
        "minimum cover sizes by dimension",
        ok,
        &parts.join("; "),
        start.elapsed(),
    );
    assert!(ok, "{}", parts.join("; "));
    assert!(start.elapsed() < Duration::from_secs(1800));
}

/// Rows on the grid `k / 1024` within `[-8, 8]`: differences and sums of
/// such values are exact in `f64`.
fn dyadic_rows<R: Rng>(d: usize, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| rng.random_range(-8192..=8192) as f64 / 1024.0)
                .collect()
        })
        .collect()
}

fn bounding_is_tight_star(s: &Sample, tol: f64) -> bool {
    let c = min_bounding_matrix(s).unwrap();
    let d = s.dim();
    let star_ok = c.kleene_star().unwrap().approx_eq(&c, tol);
    let attained = (0..d).all(|i| {
        (0..d).all(|j| {
            i == j
                || s.points()
                    .iter()
                    .any(|p| (p.diff(i, j) - c.get(i, j)).abs() <= tol)
        })
    });
    star_ok && attained
}

#[test]
fn criterion_04_bounding_matrix_is_its_own_star() {
    let start = Instant::now();
    let mut rng = stream(4, 0);
    let mut exact_pass = 0;
    let mut float_pass = 0;
    let total = 10_000;
    for _ in 0..total {
        let d = rng.random_range(2..=8);
        let n = rng.random_range(1..=50);
        let s = Sample::from_rows(&dyadic_rows(d, n, &mut rng)).unwrap();
        exact_pass += bounding_is_tight_star(&s, 0.0) as usize;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-8.0..8.0)).collect())
            .collect();
        float_pass += bounding_is_tight_star(&Sample::from_rows(&rows).unwrap(), 1e-12) as usize;
    }
    let ok = exact_pass == total && float_pass == total;
    let detail = format!(
        "exact on dyadic samples {exact_pass}/{total}; within 1e-12 on continuous samples {float_pass}/{total}"
    );
    report(
        4,
        "bounding matrix is a Kleene star attained by the sample",
        ok,
        &detail,
        start.elapsed(),
    );
    assert!(ok, "{detail}");
}

#[test]
fn criterion_05_generated_samples_lie_in_the_polyhedron() {
    let start = Instant::now();
    let total = 10_000;
    let mut pass = 0;
    for k in 0..total {
        let mut rng = stream(5, k as u64);
        let d = rng.random_range(2..=8);
        let p = rng.random_range(0.2..=1.0);
        let permute = rng.random_bool(0.5);
        let model = MlbnModel::random(d, p, 1.0, permute, &mut rng).unwrap();
        let inn = if rng.random_bool(0.5) {
            Innovation::Gaussian { mean: 0.0, sd: 3.0 }
        } else {
            Innovation::Frechet { shape: 1.0 }
        };
        let s = model.generate_sample(20, &inn, &mut rng).unwrap();
        let star = model.observed_star();
        let inside = s.points().iter().all(|q| star.wdp_contains(q, 1e-9));
        if inside && bounding_contains(&s, &star, 1e-9).unwrap() {
            pass += 1;
        }
    }
    let ok = pass == total;
    report(
        5,
        "generated samples lie in wdp(C*)",
        ok,
        &format!("{pass}/{total} samples"),
        start.elapsed(),
    );
    assert!(ok);
}

/// Generic weights on `κ_d` from the grid `k / 1024`.
fn dyadic_generic<R: Rng>(d: usize, rng: &mut R) -> TropicalMatrix {
    let support = complete_support(d);
    loop {
        let mut c = TropicalMatrix::identity(d);
        for &(j, i) in &support {
            c.set(i, j, rng.random_range(-1024..=1024) as f64 / 1024.0);
        }
        if is_strictly_closed(&c, &support, 1e-9) {
            if let Ok(s) = dual_subdivision(&c, &PolytropeOptions::default()) {
                if s.is_triangulation() {
                    return c;
                }
            }
        }
    }
}

#[test]
fn criterion_06_exact_recovery_from_cover_samples() {
    let start = Instant::now();
    let total = 200;
    let mut pass = 0;
    for k in 0..total {
        let mut rng = stream(6, k as u64);
        let d = 3 + k % 3;
        let c = dyadic_generic(d, &mut rng);
        let dag = Dag::from_support(&c).unwrap();
        let model = MlbnModel::new(dag.clone(), None).unwrap();
        let sub = dual_subdivision(&c, &PolytropeOptions::default()).unwrap();
        let cover = exact_cover_cells(&sub, 5_000_000).unwrap().unwrap();
        let sample = model.atom_sample(&cover, &mut rng).unwrap();
        let est = known_dag_estimate(&sample, &dag).unwrap();
        let facets: Vec<Edge> = sub.universe().iter().copied().collect();
        let recovered = facets.iter().all(|&(j, i)| est.get(i, j) == c.get(i, j));
        let minimal = (0..cover.len()).all(|drop| {
            let mut partial = cover.clone();
            partial.remove(drop);
            let s = model.atom_sample(&partial, &mut rng).unwrap();
            let e = known_dag_estimate(&s, &dag).unwrap();
            facets.iter().any(|&(j, i)| e.get(i, j) < c.get(i, j))
        });
        pass += (recovered && minimal) as usize;
    }
    let ok = pass == total;
    report(
        6,
        "cover samples recover C* exactly and every cell is needed",
        ok,
        &format!("{pass}/{total} models"),
        start.elapsed(),
    );
    assert!(ok);
}

fn simulate(text: &str) -> harness::ResultTable {
    let cfg = ExperimentConfig::from_toml_str(text, &[]).unwrap();
    harness::run_simulation(&cfg).unwrap()
}

#[test]
fn criterion_07_fixed_ordering_simulation_table() {
    let start = Instant::now();
    let base = "seed = 7\nd = [5, 10, 30]\nn = 1000\nrepetitions = 50\np = 1.0\n";
    let gauss = simulate(&format!(
        "{base}[innovation]\nkind = \"gaussian\"\nmean = 0.0\nsd = 3.0\n"
    ));
    let frechet = simulate(&format!(
        "{base}[innovation]\nkind = \"frechet\"\nshape = 1.0\n"
    ));
    let tpr = |t: &harness::ResultTable, d| t.row(d).unwrap().mean.tpr;
    let nshd = |t: &harness::ResultTable, d| t.row(d).unwrap().mean.nshd;
    let checks = [
        ("gaussian d=5 TPR >= 99%", tpr(&gauss, 5) >= 0.99),
        ("gaussian d=5 nSHD <= 1%", nshd(&gauss, 5) <= 0.01),
        ("gaussian d=10 TPR >= 98%", tpr(&gauss, 10) >= 0.98),
        ("frechet d=5 TPR >= 99%", tpr(&frechet, 5) >= 0.99),
        ("frechet d=10 TPR >= 96%", tpr(&frechet, 10) >= 0.96),
        (
            "d=30 TPR gaussian >= frechet",
            tpr(&gauss, 30) >= tpr(&frechet, 30),
        ),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let all_completed = gauss
        .rows
        .iter()
        .chain(&frechet.rows)
        .all(|r| r.completed == 50);
    let ok = failed.is_empty() && all_completed;
    let detail = format!(
        "TPR gaussian d=5/10/30 {:.4}/{:.4}/{:.4}, nSHD d=5 {:.4}; TPR frechet d=5/10/30 {:.4}/{:.4}/{:.4}; failed: {failed:?}",
        tpr(&gauss, 5),
        tpr(&gauss, 10),
        tpr(&gauss, 30),
        nshd(&gauss, 5),
        tpr(&frechet, 5),
        tpr(&frechet, 10),
        tpr(&frechet, 30)
    );
    report(
        7,
        "fixed-ordering simulation table",
        ok,
        &detail,
        start.elapsed(),
    );
    assert!(ok, "{detail}");
    assert!(start.elapsed() < Duration::from_secs(1200));
}

#[test]
fn criterion_08_random_ordering_robustness() {
    let start = Instant::now();
    let t = simulate(
        "seed = 8\nd = 10\nn = 1000\nrepetitions = 50\np = 0.5\npermute = true\n\
         [innovation]\nkind = \"gaussian\"\nmean = 0.0\nsd = 3.0\n",
    );
    let row = t.row(10).unwrap();
    let ok = row.completed == 50 && row.mean.tpr >= 0.95 && row.mean.fdr <= 0.08;
    let detail = format!(
        "TPR {:.4}, FDR {:.4} over {} reps",
        row.mean.tpr, row.mean.fdr, row.completed
    );
    report(
        8,
        "random ordering, d=10, p=1/2",
        ok,
        &detail,
        start.elapsed(),
    );
    assert!(ok, "{detail}");
    assert!(start.elapsed() < Duration::from_secs(600));
}

/// Direct recount from the definitions, one unordered pair at a time.
fn brute_force_metrics(
    d: usize,
    t: &BTreeSet<Edge>,
    e: &BTreeSet<Edge>,
) -> (usize, f64, f64, f64, Option<f64>) {
    let mut shd = 0;
    let (mut tp, mut fp) = (0usize, 0usize);
    for a in 0..d {
        for b in 0..d {
            if a < b {
                let truth = (t.contains(&(a, b)), t.contains(&(b, a)));
                let est = (e.contains(&(a, b)), e.contains(&(b, a)));
                if truth != est {
                    shd += 1;
                }
            }
            if a != b && e.contains(&(a, b)) {
                if t.contains(&(a, b)) {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
        }
    }
    let div = |x: usize, y: usize| if y == 0 { 0.0 } else { x as f64 / y as f64 };
    let tpr = if t.is_empty() {
        e.is_empty().then_some(1.0)
    } else {
        Some(tp as f64 / t.len() as f64)
    };
    (
        shd,
        div(shd, t.len() + e.len()),
        div(fp, e.len()),
        div(fp, d * (d - 1) - t.len()),
        tpr,
    )
}

#[test]
fn criterion_09_metrics_oracle() {
    let start = Instant::now();
    let mut rng = stream(9, 0);
    let total = 10_000;
    let mut agree = 0;
    for _ in 0..total {
        let d = rng.random_range(1..=8);
        let dens_t = rng.random_range(0.0..0.6);
        let dens_e = rng.random_range(0.0..0.6);
        let mut t = BTreeSet::new();
        let mut e = BTreeSet::new();
        for a in 0..d {
            for b in 0..d {
                if a != b {
                    // the truth is a DAG, the estimate need not be
                    if a < b && rng.random_bool(dens_t) {
                        t.insert((a, b));
                    }
                    if rng.random_bool(dens_e) {
                        e.insert((a, b));
                    }
                }
            }
        }
        let r = evaluate(d, &t, &e).unwrap();
        if (r.shd, r.nshd, r.fdr, r.fpr, r.tpr) == brute_force_metrics(d, &t, &e) {
            agree += 1;
        }
    }
    let worked = evaluate(3, &[(0, 1)].into(), &[(1, 0)].into()).unwrap();
    let worked_ok = worked.shd == 1
        && worked.nshd == 0.5
        && worked.fdr == 1.0
        && worked.tpr == Some(0.0)
        && worked.fpr == 1.0 / 5.0;
    let ok = agree == total && worked_ok;
    let detail = format!("{agree}/{total} random pairs agree; reversal example {worked:?}");
    report(
        9,
        "metrics against a brute-force recount",
        ok,
        &detail,
        start.elapsed(),
    );
    assert!(ok, "{detail}");
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

#[test]
fn criterion_10_outputs_do_not_depend_on_threads() {
    let start = Instant::now();
    let configs = [
        "mode = \"simulate\"\nseed = 10\nd = [5, 8]\nn = 300\nrepetitions = 12\np = 0.5\npermute = true\n",
        "mode = \"simulate\"\nseed = 10\nd = 6\nn = 300\nrepetitions = 12\n[innovation]\nkind = \"frechet\"\nshape = 1.0\n",
        "mode = \"census\"\nseed = 10\nd = [4, 5]\n[census]\nsamples = 150\n",
    ];
    let mut ok = true;
    let mut files = 0;
    for text in configs {
        let cfg = ExperimentConfig::from_toml_str(text, &[]).unwrap();
        let mut outputs = Vec::new();
        for threads in [1, 3, 1] {
            let dir = tempfile::tempdir().unwrap();
            let report = harness::with_threads(Some(threads), || harness::run(&cfg, dir.path()))
                .unwrap()
                .unwrap();
            outputs.push((report, read_dir_bytes(dir.path())));
        }
        files += outputs[0].1.len();
        ok &= !outputs[0].1.is_empty() && outputs.iter().all(|o| o == &outputs[0]);
    }
    report(
        10,
        "identical outputs across thread counts",
        ok,
        &format!("{files} files compared over thread counts 1, 3, 1"),
        start.elapsed(),
    );
    assert!(ok);
}
