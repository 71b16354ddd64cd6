use chronoline::kpca::{cosine_kernel, double_center, Projector};
use chronoline::metrics::{evaluate, ranking_scores, spearman, TaiConfig};
use chronoline::probing::probe;
use chronoline::synthetic::{generate, CurveKind, SyntheticSpec};
use chronoline::timeline::{fit_timeline, InferenceMethod, TimelineConfig, TimelineSpace};
use chronoline::vector::dot;
use chronoline::EmbeddingSet;
use nalgebra::SymmetricEigen;

fn spec(curve: CurveKind, dim: usize, y_max: i32, sigma: f64, per_year: usize, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        dim,
        y_min: 1700,
        y_max,
        curve,
        noise_sigma: sigma,
        queries_per_year: per_year,
        seed,
    }
}

#[test]
fn projector_eigenpairs_are_orthonormal() {
    let data = generate(&spec(CurveKind::Helix, 64, 1900, 0.0, 0, 5)).unwrap();
    let p = Projector::fit(&data.anchors, 13).unwrap();
    assert!(p.s_dim() <= 13);
    let vals = p.eigvals();
    assert!(vals.iter().all(|&l| l > 0.0));
    assert!(vals.windows(2).all(|w| w[0] >= w[1]));
    let vecs = p.eigvecs();
    for a in 0..p.s_dim() {
        for b in 0..p.s_dim() {
            let d: f64 = vecs.iter().map(|row| row[a] * row[b]).sum();
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((d - want).abs() < 1e-8, "u{a}.u{b} = {d}");
        }
    }
}

#[test]
fn centered_kernel_is_psd() {
    let data = generate(&spec(CurveKind::SCurve, 32, 1850, 0.0, 0, 9)).unwrap();
    let k = cosine_kernel(data.anchors.vectors()).unwrap();
    let (kc, _, _) = double_center(&k);
    assert!((kc.clone() - kc.transpose()).abs().max() < 1e-15);
    let eig = SymmetricEigen::new(kc);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    assert!(min >= -1e-8 * max, "min {min} max {max}");
}

#[test]
fn training_rows_transform_to_training_projections() {
    let data = generate(&spec(CurveKind::Helix, 48, 1800, 0.0, 0, 1)).unwrap();
    let p = Projector::fit(&data.anchors, 13).unwrap();
    let stored = p.training_projections();
    for (row, want) in data.anchors.vectors().iter().zip(&stored) {
        let got = p.transform(row).unwrap();
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-8);
        }
    }
}

#[test]
fn project_all_matches_transform_loop() {
    let data = generate(&spec(CurveKind::Helix, 32, 1760, 0.1, 2, 4)).unwrap();
    let p = Projector::fit(&data.anchors, 3).unwrap();
    let all = p.project_all(&data.queries).unwrap();
    assert_eq!(all.len(), data.queries.len());
    for (row, q) in all.iter().zip(data.queries.records()) {
        assert_eq!(row, &p.transform(&q.vec).unwrap());
    }
    assert!(p.project_all(&EmbeddingSet::default()).unwrap().is_empty());
}

#[test]
fn one_dimensional_kpca_orders_monotone_manifold() {
    for curve in [CurveKind::Line, CurveKind::SCurve] {
        let data = generate(&spec(curve, 128, 2024, 0.0, 0, 7)).unwrap();
        let p = Projector::fit(&data.anchors, 1).unwrap();
        let coords: Vec<f64> = p.training_projections().iter().map(|r| r[0]).collect();
        let years: Vec<f64> = data.anchors.years().map(f64::from).collect();
        let rho = spearman(&years, &coords).unwrap();
        assert!(rho.abs() >= 0.95, "{curve}: rho {rho}");
    }
}

#[test]
fn component_sign_flips_do_not_change_distances() {
    let data = generate(&spec(CurveKind::Helix, 32, 1780, 0.0, 0, 2)).unwrap();
    let p = Projector::fit(&data.anchors, 4).unwrap();
    let proj = p.training_projections();
    let flipped: Vec<Vec<f64>> = proj
        .iter()
        .map(|r| r.iter().enumerate().map(|(k, x)| if k % 2 == 1 { -x } else { *x }).collect())
        .collect();
    let dist = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum() };
    for i in 0..proj.len() {
        for j in 0..proj.len() {
            assert!((dist(&proj[i], &proj[j]) - dist(&flipped[i], &flipped[j])).abs() < 1e-12);
        }
    }
}

#[test]
fn anchors_map_back_to_their_own_parameter() {
    let data = generate(&spec(CurveKind::SCurve, 32, 1900, 0.0, 0, 3)).unwrap();
    let config = TimelineConfig {
        control_points: 60,
        samples: 500,
    };
    let step = 1.0 / 499.0;
    for space in [
        TimelineSpace::Ambient,
        TimelineSpace::Kpca(Box::new(Projector::fit(&data.anchors, 13).unwrap())),
    ] {
        let model = fit_timeline(&data.anchors, space, config).unwrap();
        for (year, v) in data.anchors.iter() {
            let t = model.map_to_curve(v).unwrap();
            assert!((t - model.anchor_param(year).unwrap()).abs() <= step + 1e-12);
        }
    }
}

#[test]
fn monotone_recovery_on_injective_curves() {
    for curve in [CurveKind::Line, CurveKind::SCurve, CurveKind::Helix] {
        let data = generate(&spec(curve, 64, 2024, 0.0, 0, 11)).unwrap();
        let model = fit_timeline(&data.anchors, TimelineSpace::Ambient, TimelineConfig::default()).unwrap();
        let years: Vec<i32> = model.years().collect();
        let s = ranking_scores(&years, model.anchor_params()).unwrap();
        assert_eq!(s.rho.abs(), 1.0, "{curve}: {s:?}");
    }
}

#[test]
fn full_range_model_builds() {
    let data = generate(&spec(CurveKind::Helix, 512, 2024, 0.0, 0, 7)).unwrap();
    assert_eq!(data.anchors.len(), 325);
    let model = fit_timeline(&data.anchors, TimelineSpace::Ambient, TimelineConfig::default()).unwrap();
    assert_eq!(model.anchor_params().len(), 325);
    assert_eq!(model.curve().control_points().len(), 200);
    assert_eq!(model.curve().n_samples(), 1000);
    assert!(model.anchor_params().iter().all(|t| (0.0..=1.0).contains(t)));
}

#[test]
fn predictions_stay_in_range() {
    let data = generate(&spec(CurveKind::Helix, 32, 1800, 0.5, 2, 8)).unwrap();
    let model = fit_timeline(
        &data.anchors,
        TimelineSpace::Ambient,
        TimelineConfig {
            control_points: 40,
            samples: 400,
        },
    )
    .unwrap();
    for method in [InferenceMethod::Nn, InferenceMethod::Interp] {
        for p in model.predict_batch(&data.queries, method).unwrap() {
            assert!((1700.0..=1800.0).contains(&p.y_pred));
            if method == InferenceMethod::Nn {
                assert_eq!(p.y_pred.fract(), 0.0);
            }
        }
    }
}

fn timeline_mae(sigma: f64, seed: u64) -> f64 {
    let data = generate(&spec(CurveKind::Helix, 32, 1800, sigma, 2, seed)).unwrap();
    let model = fit_timeline(
        &data.anchors,
        TimelineSpace::Ambient,
        TimelineConfig {
            control_points: 60,
            samples: 400,
        },
    )
    .unwrap();
    let preds = model.predict_batch(&data.queries, InferenceMethod::Interp).unwrap();
    evaluate(&preds, &data.queries, &TaiConfig::default()).unwrap().mae
}

#[test]
fn more_noise_never_helps() {
    let sigmas = [0.02, 0.1, 0.3];
    let seeds: Vec<u64> = (100..116).collect();
    let runs: Vec<Vec<f64>> = sigmas
        .iter()
        .map(|&s| seeds.iter().map(|&seed| timeline_mae(s, seed)).collect())
        .collect();
    for pair in runs.windows(2) {
        // paired differences across seeds, one-sided 95%
        let diffs: Vec<f64> = pair[1].iter().zip(&pair[0]).map(|(hi, lo)| hi - lo).collect();
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert!(mean - 1.645 * se > 0.0, "mean diff {mean}, se {se}");
    }
}

#[test]
fn top_ranked_year_beats_runner_up() {
    let data = generate(&spec(CurveKind::Helix, 64, 1800, 0.05, 3, 21)).unwrap();
    let (mut first, mut second) = (0, 0);
    for q in data.queries.records() {
        let r = probe(&q.vec, &data.anchors, 2).unwrap();
        let ranked = r.ranked_years.unwrap();
        let truth = q.year.unwrap();
        first += usize::from(ranked[0].0 == truth);
        second += usize::from(ranked[1].0 == truth);
    }
    assert!(first > second, "rank1 {first} rank2 {second}");
}

#[test]
fn noiseless_helix_interp_is_exact() {
    let data = generate(&spec(CurveKind::Helix, 128, 2024, 0.0, 1, 7)).unwrap();
    let p = Projector::fit(&data.anchors, 13).unwrap();
    let model = fit_timeline(&data.anchors, TimelineSpace::Kpca(Box::new(p)), TimelineConfig::default()).unwrap();
    let preds = model.predict_batch(&data.queries, InferenceMethod::Interp).unwrap();
    let report = evaluate(&preds, &data.queries, &TaiConfig::default()).unwrap();
    assert!(report.mae <= 1.0);
    assert!(report.tai >= 0.99);
    assert_eq!(report.per_label.keys().collect::<Vec<_>>(), vec!["helix"]);
}

#[test]
fn anchors_are_unit_and_queries_too() {
    let data = generate(&spec(CurveKind::Helix, 16, 1750, 0.2, 2, 6)).unwrap();
    for v in data.anchors.vectors() {
        assert!((dot(v, v).sqrt() - 1.0).abs() < 1e-9);
    }
    for q in data.queries.records() {
        assert!((dot(&q.vec, &q.vec).sqrt() - 1.0).abs() < 1e-9);
    }
}
