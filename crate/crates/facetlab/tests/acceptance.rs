//! End-to-end acceptance run: one line per criterion, all must pass.

use std::time::Instant;

use facetlab::suites::{
    suite_binomial_tail, suite_chernoff, suite_clt_gap, suite_constants,
    suite_curvature, suite_facet_trend, suite_hull_oracle, suite_local_limit,
    suite_tail_lower, suite_volume_trend, SuiteReport,
};

const SEED: u64 = 2026;

struct Criterion {
    label: &'static str,
    passed: bool,
    detail: String,
}

fn from_suites(label: &'static str, reports: &[SuiteReport], budget_s: Option<u64>, elapsed_s: u64) -> Criterion {
    let checked: usize = reports.iter().map(|r| r.checked).sum();
    let violations: usize = reports.iter().map(|r| r.violations).sum();
    let in_budget = budget_s.is_none_or(|b| elapsed_s <= b);
    Criterion {
        label,
        passed: violations == 0 && in_budget,
        detail: format!("{checked} checks, {violations} violations, {elapsed_s}s"),
    }
}

#[test]
fn acceptance() {
    let mut results: Vec<Criterion> = Vec::new();
    let mut timed = |label: &'static str,
                     budget_s: Option<u64>,
                     run: &dyn Fn() -> Vec<SuiteReport>|
     -> Criterion {
        let t0 = Instant::now();
        let reports = run();
        from_suites(label, &reports, budget_s, t0.elapsed().as_secs())
    };

    results.push(timed(
        "1 tangent certificate (exact, n in {8,12,16}, 200 samples each)",
        Some(300),
        &|| vec![suite_chernoff(&[8, 12, 16], 200, SEED).unwrap()],
    ));
    results.push(timed(
        "2 local-limit bracket + change-of-measure identity (n in {10,14,18})",
        None,
        &|| vec![suite_local_limit(&[10, 14, 18], 50, SEED).unwrap()],
    ));
    results.push(timed(
        "3 Rademacher tail lower bound (1000 admissible pairs, n <= 20)",
        None,
        &|| vec![suite_tail_lower(1000, SEED).unwrap()],
    ));
    results.push(timed(
        "4 binomial-tail lower bound (full m x gamma x form grid)",
        None,
        &|| vec![suite_binomial_tail().unwrap()],
    ));
    results.push(timed(
        "5 CLT gap bound (exact sup-distance, n in {10,14})",
        None,
        &|| vec![suite_clt_gap(&[10, 14], 50, SEED).unwrap()],
    ));
    results.push(timed(
        "6 hull oracle equivalence (100 random instances + fixed shapes)",
        None,
        &|| vec![suite_hull_oracle(100, SEED).unwrap()],
    ));
    results.push(timed(
        "7 frozen constants audit",
        None,
        &|| vec![suite_constants().unwrap()],
    ));
    results.push(timed(
        "8 level-surface curvature (n in 3..=8, 100 boundary points each)",
        None,
        &|| vec![suite_curvature(100, SEED).unwrap()],
    ));
    results.push(timed(
        "9 trend checks (volume sweep n=10; facet sweep n=7)",
        Some(600),
        &|| {
            // the facet sweep stays below N ~ 2^n/4: past that the hull
            // approaches the full cube and the facet count turns over
            let (volume, facets) = rayon::join(
                || suite_volume_trend(10, &[12, 24, 48, 96, 192], 50_000, SEED).unwrap(),
                || suite_facet_trend(7, &[12, 16, 24, 32], 30, SEED).unwrap(),
            );
            vec![volume, facets]
        },
    ));

    // 10: every suite byte-identical across thread counts (reduced sizes)
    {
        let t0 = Instant::now();
        let run_all = |threads: usize| -> Vec<String> {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                vec![
                    suite_chernoff(&[8, 12], 25, SEED).unwrap().csv(),
                    suite_local_limit(&[10], 10, SEED).unwrap().csv(),
                    suite_tail_lower(100, SEED).unwrap().csv(),
                    suite_binomial_tail().unwrap().csv(),
                    suite_clt_gap(&[10], 10, SEED).unwrap().csv(),
                    suite_hull_oracle(20, SEED).unwrap().csv(),
                    suite_constants().unwrap().csv(),
                    suite_curvature(10, SEED).unwrap().csv(),
                    suite_volume_trend(8, &[12, 24, 48], 20_000, SEED).unwrap().csv(),
                    suite_facet_trend(6, &[12, 24, 48], 10, SEED).unwrap().csv(),
                ]
            })
        };
        let single = run_all(1);
        let eight = run_all(8);
        results.push(Criterion {
            label: "10 determinism: identical CSV bodies for threads in {1,8}",
            passed: single == eight,
            detail: format!("{} suites compared, {}s", single.len(), t0.elapsed().as_secs()),
        });
    }

    let mut all_ok = true;
    for c in &results {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("criterion {:<68} {status}  ({})", c.label, c.detail);
        all_ok &= c.passed;
    }
    assert!(all_ok, "at least one acceptance criterion failed");
}
