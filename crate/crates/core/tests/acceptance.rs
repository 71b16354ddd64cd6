//! Acceptance criteria. Each test prints one `[PASS]`/`[FAIL]` line; run with
//! `cargo test -p chronoline --test acceptance -- --nocapture --test-threads 1`
//! to see them.

use std::time::{Duration, Instant};

use chronoline::metrics::{self, adjacent_swaps, kendall, mndl, ranking_scores, spearman, tai, TaiConfig};
use chronoline::probing::probe;
use chronoline::synthetic::{generate, CurveKind, SyntheticSpec};
use chronoline::timeline::{decasteljau, fit_timeline, InferenceMethod, TimelineConfig, TimelineSpace};
use chronoline::{EvalReport, Projector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(name: &str, ok: bool, detail: String) {
    println!("[{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            prefix.push(x);
            rec(prefix, rest, out);
            prefix.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out
}

fn brute_pairs(perm: &[usize]) -> f64 {
    let n = perm.len();
    let (mut c, mut d) = (0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            if perm[i] < perm[j] {
                c += 1;
            } else {
                d += 1;
            }
        }
    }
    (c - d) as f64 / (n * (n - 1) / 2) as f64
}

fn bubble_swaps(perm: &[usize]) -> usize {
    let mut v = perm.to_vec();
    let mut swaps = 0;
    loop {
        let mut changed = false;
        for i in 1..v.len() {
            if v[i - 1] > v[i] {
                v.swap(i - 1, i);
                swaps += 1;
                changed = true;
            }
        }
        if !changed {
            return swaps;
        }
    }
}

#[test]
fn metric_oracle_equivalence() {
    let start = Instant::now();
    let mut cases = 0;
    let mut mismatches = 0;
    for n in 2..=7 {
        let identity: Vec<usize> = (0..n).collect();
        let idf: Vec<f64> = identity.iter().map(|&x| x as f64).collect();
        let m = n * (n - 1) / 2;
        for perm in permutations(n) {
            cases += 1;
            let pf: Vec<f64> = perm.iter().map(|&x| x as f64).collect();
            let tau = kendall(&idf, &pf).unwrap();
            let delta = mndl(&perm, &identity).unwrap();
            let swaps = bubble_swaps(&perm);
            let swap_oracle = (m as i64 - 2 * swaps as i64) as f64 / m as f64;
            if tau != brute_pairs(&perm)
                || adjacent_swaps(&perm) != swaps as u64
                || delta != swap_oracle
                || tau != delta
            {
                mismatches += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        "metric oracle equivalence (N<=7)",
        mismatches == 0 && elapsed < Duration::from_secs(10),
        format!("{cases} permutations, {mismatches} mismatches, {elapsed:.2?}"),
    );
}

#[test]
fn spearman_fixture() {
    let half = spearman(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
    let mut ok = half == 0.5;
    for n in 2..=100 {
        let a: Vec<f64> = (0..n).map(f64::from).collect();
        let r: Vec<f64> = a.iter().rev().copied().collect();
        ok &= spearman(&a, &a).unwrap() == 1.0;
        ok &= spearman(&a, &r).unwrap() == -1.0;
    }
    report(
        "spearman fixture",
        ok,
        format!("[1,2,3] vs [1,3,2] = {half}; identity/reversal exact for N=2..100"),
    );
}

#[test]
fn tai_unit_suite() {
    let cfg = TaiConfig::default();
    let cases = [
        (1710.0, 1700.0, 1.0),
        (1735.0, 1700.0, 0.30),
        (2009.0, 2024.0, 0.0),
        (1874.0, 1862.0, 1.0),
    ];
    let mut worst: f64 = 0.0;
    for (pred, truth, want) in cases {
        worst = worst.max((tai(pred, truth, &cfg).unwrap() - want).abs());
    }
    let (t, i) = cfg.thresholds(1862.0);
    worst = worst.max((t - 12.5).abs()).max((i - 32.5).abs());
    report(
        "TAI unit suite (20/50/5/15)",
        worst <= 1e-12,
        format!("max deviation {worst:e}"),
    );
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[test]
fn decasteljau_matches_bernstein() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let degree = rng.gen_range(1..=10);
        let dim = rng.gen_range(1..=4);
        let pts: Vec<Vec<f64>> = (0..=degree)
            .map(|_| (0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect())
            .collect();
        for j in 0..=100 {
            let t = j as f64 / 100.0;
            let got = decasteljau(&pts, t).unwrap();
            for d in 0..dim {
                let want: f64 = (0..=degree)
                    .map(|i| {
                        binomial(degree, i)
                            * t.powi(i as i32)
                            * (1.0 - t).powi((degree - i) as i32)
                            * pts[i][d]
                    })
                    .sum();
                worst = worst.max((got[d] - want).abs());
            }
        }
    }
    report(
        "de Casteljau vs Bernstein (100 polygons x 101 t)",
        worst <= 1e-9,
        format!("max |delta| = {worst:e}"),
    );
}

fn helix(sigma: f64, per_year: usize) -> SyntheticSpec {
    SyntheticSpec {
        curve: CurveKind::Helix,
        noise_sigma: sigma,
        queries_per_year: per_year,
        seed: 7,
        ..SyntheticSpec::default()
    }
}

#[test]
fn chronology_recovery() {
    let start = Instant::now();
    let data = generate(&helix(0.0, 0)).unwrap();
    let projector = Projector::fit(&data.anchors, 13).unwrap();
    let model = fit_timeline(
        &data.anchors,
        TimelineSpace::Kpca(Box::new(projector)),
        TimelineConfig::default(),
    )
    .unwrap();
    let years: Vec<i32> = model.years().collect();
    let s = ranking_scores(&years, model.anchor_params()).unwrap();
    let elapsed = start.elapsed();
    report(
        "chronology recovery (helix, K=200, 1000 samples, S=13)",
        s.rho.abs() >= 0.99
            && s.tau.abs() >= 0.98
            && s.mndl.abs() >= 0.98
            && elapsed < Duration::from_secs(60),
        format!(
            "rho={:.5} tau={:.5} mndl={:.5} in {elapsed:.2?}",
            s.rho, s.tau, s.mndl
        ),
    );
}

fn timeline_mae(space: TimelineSpace, data: &chronoline::synthetic::SyntheticData) -> f64 {
    let model = fit_timeline(&data.anchors, space, TimelineConfig::default()).unwrap();
    let preds = model
        .predict_batch(&data.queries, InferenceMethod::Interp)
        .unwrap();
    metrics::evaluate(&preds, &data.queries, &TaiConfig::default())
        .unwrap()
        .mae
}

#[test]
fn dimension_sweep_shape() {
    let data = generate(&helix(0.05, 1)).unwrap();
    let kpca = |s: usize| {
        TimelineSpace::Kpca(Box::new(Projector::fit(&data.anchors, s).unwrap()))
    };
    let mae_1 = timeline_mae(kpca(1), &data);
    let mae_13 = timeline_mae(kpca(13), &data);
    let mae_full = timeline_mae(TimelineSpace::Ambient, &data);
    report(
        "dimension sweep shape (helix, sigma=0.05)",
        mae_13 <= 1.1 * mae_full && mae_1 >= mae_13,
        format!("MAE S=1: {mae_1:.3}, S=13: {mae_13:.3}, ambient: {mae_full:.3}"),
    );
}

fn noiseless_pipeline_report() -> EvalReport {
    let data = generate(&helix(0.0, 1)).unwrap();
    let projector = Projector::fit(&data.anchors, 13).unwrap();
    let model = fit_timeline(
        &data.anchors,
        TimelineSpace::Kpca(Box::new(projector)),
        TimelineConfig::default(),
    )
    .unwrap();
    let preds = model
        .predict_batch(&data.queries, InferenceMethod::Interp)
        .unwrap();
    let mut report = metrics::evaluate(&preds, &data.queries, &TaiConfig::default()).unwrap();
    let years: Vec<i32> = model.years().collect();
    report.ranking = Some(ranking_scores(&years, model.anchor_params()).unwrap());
    report
}

#[test]
fn end_to_end_noiseless() {
    let r = noiseless_pipeline_report();
    report(
        "end-to-end noiseless pipeline (interp)",
        r.mae <= 1.0 && r.tai >= 0.99,
        format!("MAE={:.4} TAI={:.5} over {} queries", r.mae, r.tai, r.n),
    );
}

#[test]
fn probing_identity() {
    let data = generate(&helix(0.0, 1)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut exact = 0;
    for (year, v) in data.anchors.iter() {
        if probe(v, &data.anchors, 1).unwrap().y_pred == year {
            exact += 1;
        }
    }
    let mut scale_failures = 0;
    for _ in 0..100 {
        let c: f64 = 10f64.powf(rng.gen_range(-3.0..3.0));
        let year = rng.gen_range(data.anchors.y_min()..=data.anchors.y_max());
        let q: Vec<f64> = data.anchors.get(year).unwrap().iter().map(|x| c * x).collect();
        let base = probe(data.anchors.get(year).unwrap(), &data.anchors, 1).unwrap();
        if probe(&q, &data.anchors, 1).unwrap().y_pred != base.y_pred {
            scale_failures += 1;
        }
    }
    report(
        "probing identity and scale invariance",
        exact == 325 && scale_failures == 0,
        format!("{exact}/325 exact, {scale_failures}/100 scale flips"),
    );
}

#[test]
fn determinism() {
    let a = serde_json::to_vec(&noiseless_pipeline_report()).unwrap();
    let b = serde_json::to_vec(&noiseless_pipeline_report()).unwrap();
    report(
        "determinism (seed 7 pipeline)",
        a == b,
        format!("{} report bytes, identical={}", a.len(), a == b),
    );
}
