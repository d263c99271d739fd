use crpred_core::codec::{compress_predictive, decompress, encode_predictive, encode_rounding, CompressorId, Family, Registry, CANONICAL_EPS};
use crpred_core::evaluation::{cross_validate, evaluate_cv, kfold_split, Sample};
use crpred_core::field::{field_stats, load_raw, slice_stack, write_raw, ByteOrder, ElementType, ManifestEntry, ScalarField};
use crpred_core::predictors::{quantize, quantized_entropy, svd_trunc, value_entropy, PredictorVector};
use crpred_core::regression::{fit_linear, lasso_path, default_lambda_grid, predict_cr, FitOptions, FittedModel, ModelKind};
use crpred_core::synth::{corpus_specs, sample_multiscale, sample_single_scale, GaussianSpec, SampleType};
use crpred_core::usecases::{rank_predictions, search_with, RankedCompressor, TargetSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn field_strategy() -> impl Strategy<Value = ScalarField> {
    prop_oneof![
        (2usize..40).prop_map(|n| vec![n]),
        (1usize..24, 2usize..24).prop_map(|(a, b)| vec![a, b]),
        (1usize..8, 2usize..8, 2usize..8).prop_map(|(a, b, c)| vec![a, b, c]),
    ]
    .prop_flat_map(|shape| {
        let n: usize = shape.iter().product();
        (Just(shape), prop::collection::vec(-1e3f64..1e3, n), 1e-3f64..1e2)
    })
    .prop_map(|(shape, raw, scale)| {
        let values = raw.iter().map(|v| v / 1e3 * scale).collect();
        ScalarField::new(values, shape).unwrap()
    })
}

fn matrix_strategy() -> impl Strategy<Value = ScalarField> {
    (3usize..20, 3usize..20)
        .prop_flat_map(|(m, n)| (Just(vec![m, n]), prop::collection::vec(-10.0f64..10.0, m * n)))
        .prop_map(|(shape, v)| ScalarField::new(v, shape).unwrap())
}

fn pv(rng: &mut ChaCha8Rng) -> PredictorVector {
    PredictorVector::from_parts(rng.random_range(2.0..14.0), rng.random_range(0.01..0.6), rng.random_range(0.3..2.0), 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn slicing_then_restacking_is_exact(f in field_strategy()) {
        prop_assume!(f.dims() == 3);
        for axis in 0..3 {
            let back = slice_stack(&f, axis).unwrap().restack().unwrap();
            prop_assert_eq!(back.values(), f.values());
            prop_assert_eq!(back.shape(), f.shape());
        }
    }

    #[test]
    fn stats_ignore_value_order(f in field_strategy(), seed in any::<u64>()) {
        let mut v = f.values().to_vec();
        use rand::seq::SliceRandom;
        v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let g = ScalarField::new(v, f.shape().to_vec()).unwrap();
        let (a, b) = (field_stats(&f).unwrap(), field_stats(&g).unwrap());
        let tol = 1e-9 * (1.0 + a.value_range);
        prop_assert!((a.mean - b.mean).abs() <= tol);
        prop_assert!((a.stddev - b.stddev).abs() <= tol);
        prop_assert_eq!((a.min, a.max), (b.min, b.max));
    }

    #[test]
    fn raw_file_roundtrip(f in field_strategy(), wide in any::<bool>()) {
        let dtype = if wide { ElementType::F64 } else { ElementType::F32 };
        // f32 files hold f32 values
        let values = f.values().iter().map(|v| if wide { *v } else { *v as f32 as f64 }).collect();
        let f = ScalarField::with_dtype(values, f.shape().to_vec(), dtype).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.raw");
        write_raw(&f, &path).unwrap();
        let entry = ManifestEntry {
            path,
            element_type: dtype,
            shape: f.shape().to_vec(),
            byte_order: ByteOrder::Little,
            field_name: "x".into(),
        };
        let back = load_raw(&entry).unwrap();
        prop_assert_eq!(back.values(), f.values());
        prop_assert_eq!(back.dtype(), dtype);
    }

    #[test]
    fn quantized_entropy_bounds(f in field_strategy()) {
        let h: Vec<f64> = CANONICAL_EPS.iter().map(|&e| quantized_entropy(&f, e).unwrap()).collect();
        prop_assert!(h.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{:?}", h);
        let raw = value_entropy(&f).unwrap();
        prop_assert!(h.iter().all(|x| *x <= raw + 1e-12));
        for eps in CANONICAL_EPS {
            let q = quantize(&f, eps).unwrap();
            let worst = q.reconstruct().iter().zip(f.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(worst < eps);
        }
    }

    #[test]
    fn svd_trunc_ignores_scaling(f in matrix_strategy(), k in prop_oneof![-50.0f64..-0.01, 0.01f64..50.0]) {
        let g = ScalarField::new(f.values().iter().map(|v| v * k).collect(), f.shape().to_vec()).unwrap();
        prop_assert!((svd_trunc(&f, 0.99).unwrap() - svd_trunc(&g, 0.99).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn full_energy_trunc_is_numerical_rank(f in matrix_strategy(), rank in 1usize..3) {
        // sum of `rank` outer products plus mean-removal keeps rank <= `rank`
        let (m, n) = (f.shape()[0], f.shape()[1]);
        let v = f.values();
        let mut low = vec![0.0; m * n];
        for r in 0..rank {
            for i in 0..m {
                for j in 0..n {
                    low[i * n + j] += v[(i + r) % m * n] * v[r * n + j];
                }
            }
        }
        let g = ScalarField::new(low, vec![m, n]).unwrap();
        let mut centered = nalgebra::DMatrix::from_row_slice(m, n, g.values());
        for j in 0..n {
            let mean = centered.column(j).mean();
            centered.column_mut(j).add_scalar_mut(-mean);
        }
        let sv = centered.singular_values();
        let smax = sv.max();
        let expected_rank = sv.iter().filter(|s| **s > 1e-9 * smax.max(1e-300)).count().max(1);
        let got = svd_trunc(&g, 1.0).unwrap();
        prop_assert!((got - expected_rank as f64 / m.min(n) as f64).abs() < 1e-12, "{} vs {}", got, expected_rank);
    }

    #[test]
    fn codecs_respect_bound_and_are_deterministic(f in field_strategy(), e in 0usize..4) {
        let eps = CANONICAL_EPS[e];
        for enc in [encode_predictive(&f, eps).unwrap(), encode_rounding(&f, eps).unwrap()] {
            let back = decompress(&enc.bytes).unwrap();
            let worst = back.values().iter().zip(f.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(worst <= eps);
            for s in &enc.streams {
                prop_assert!(s.bits_per_symbol() >= s.entropy - 1e-9 && s.bits_per_symbol() < s.entropy + 1.0);
            }
        }
        prop_assert_eq!(encode_predictive(&f, eps).unwrap().bytes, encode_predictive(&f, eps).unwrap().bytes);
        prop_assert_eq!(encode_rounding(&f, eps).unwrap().bytes, encode_rounding(&f, eps).unwrap().bytes);
    }

    #[test]
    fn ols_residuals_are_orthogonal(seed in any::<u64>(), n in 6usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let c = fit_linear(&x, &y).unwrap();
        let mut g = [0.0; 4];
        for (z, t) in x.iter().zip(&y) {
            let r = t - c.eval(z);
            for (gj, dj) in g.iter_mut().zip([1.0, z[0], z[1], z[0] * z[1]]) {
                *gj += dj * r;
            }
        }
        prop_assert!(g.iter().all(|v| v.abs() < 1e-8), "{:?}", g);
    }

    #[test]
    fn rescaled_predictor_gives_same_predictions(seed in any::<u64>(), k in 0.01f64..100.0, kind in prop_oneof![Just(ModelKind::Linear), Just(ModelKind::Spline)]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<PredictorVector> = (0..30).map(|_| pv(&mut rng)).collect();
        let crs: Vec<f64> = rows.iter().map(|r| (1.0 - 0.5 * r.log_qent + 0.3 * r.log_ratio).exp() * rng.random_range(0.95..1.05)).collect();
        // scaling sigma by k shifts log_ratio by a constant, which standardization removes
        let scaled: Vec<PredictorVector> = rows.iter().map(|r| PredictorVector::from_parts(r.q_entropy, r.svd_trunc, r.sigma / k, r.eps_abs)).collect();
        let a = FittedModel::fit(kind, &rows, &crs, &FitOptions::default()).unwrap();
        let b = FittedModel::fit(kind, &scaled, &crs, &FitOptions::default()).unwrap();
        for (r, s) in rows.iter().zip(&scaled) {
            let (pa, pb) = (a.predict_log(r).unwrap(), b.predict_log(s).unwrap());
            prop_assert!((pa - pb).abs() < 1e-8, "{} vs {}", pa, pb);
        }
    }

    #[test]
    fn lasso_support_shrinks_along_path(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<[f64; 2]> = (0..50).map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
        let y: Vec<f64> = x.iter().map(|z| 0.3 * z[0] - 0.2 * z[1] + 0.1 * z[0] * z[1] + rng.random_range(-0.5..0.5)).collect();
        let grid = default_lambda_grid(&x, &y);
        let path = lasso_path(&x, &y, &grid).unwrap();
        let support: Vec<usize> = path.iter().map(|c| c[1..].iter().filter(|b| **b != 0.0).count()).collect();
        // grid descends, so support must not shrink
        prop_assert!(support.windows(2).all(|w| w[1] >= w[0]), "{:?}", support);
    }

    #[test]
    fn predictions_are_positive(seed in any::<u64>(), q in 0.0f64..40.0, t in 0.0f64..1.0, s in 0.0f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<PredictorVector> = (0..20).map(|_| pv(&mut rng)).collect();
        let crs: Vec<f64> = (0..20).map(|_| rng.random_range(1.0..100.0)).collect();
        for kind in [ModelKind::Linear, ModelKind::Spline, ModelKind::Lasso, ModelKind::Mean] {
            let m = FittedModel::fit(kind, &rows, &crs, &FitOptions::default()).unwrap();
            let p = predict_cr(&m, &PredictorVector::from_parts(q, t, s, 1e-3)).unwrap();
            prop_assert!(p.cr > 0.0);
        }
    }

    #[test]
    fn ranking_survives_monotone_transforms(crs in prop::collection::vec(1.0f64..100.0, 2..6)) {
        let ids: Vec<CompressorId> = (0..crs.len()).map(|i| CompressorId::new(format!("c{i}"), Family::External)).collect();
        let rank = |f: &dyn Fn(f64) -> f64| {
            rank_predictions(ids.iter().zip(&crs).map(|(id, c)| RankedCompressor { id: id.clone(), predicted_cr: f(*c) }).collect())
                .unwrap()
                .chosen
        };
        let base = rank(&|c| c);
        prop_assert_eq!(&base, &rank(&|c: f64| c.ln()));
        prop_assert_eq!(&base, &rank(&|c: f64| 3.0 * c + 7.0));
        prop_assert_eq!(&base, &rank(&|c: f64| c.powi(3)));
    }

    #[test]
    fn search_respects_real_budget(bias in 0.3f64..3.0, budget in 1usize..5, target in 2.0f64..30.0) {
        let truth = |e: f64| -> crpred_core::Result<f64> { Ok(10.0 * (e / 1e-4).powf(0.4)) };
        let mut spec = TargetSpec::new(target, 2.0);
        spec.max_real_evals = budget;
        let mut calls = 0;
        let res = search_with(|e| truth(e).map(|c| c * bias), |e| { calls += 1; truth(e) }, &spec);
        prop_assert!(calls <= budget);
        if let Ok(r) = res {
            prop_assert_eq!(r.real_evals, calls);
        }
        let mut exact = 0;
        if let Ok(r) = search_with(truth, |e| { exact += 1; truth(e) }, &spec) {
            prop_assert_eq!(r.real_evals, 1);
        }
    }
}

#[test]
fn sample_generation_is_deterministic() {
    for kind in [SampleType::SingleScale, SampleType::ScalarFixed, SampleType::SpatialFixed, SampleType::SpatialRandom] {
        let spec = &corpus_specs(kind, 3, (48, 40), (2.0, 16.0), 11)[1];
        assert_eq!(sample_multiscale(spec).unwrap().values(), sample_multiscale(spec).unwrap().values());
    }
}

#[test]
fn single_scale_mean_is_near_zero() {
    for a in [2.0, 4.0, 8.0] {
        let mean = (0..20u64)
            .map(|s| field_stats(&sample_single_scale(&GaussianSpec::new((128, 128), a, 500 + s)).unwrap()).unwrap().mean.abs())
            .sum::<f64>()
            / 20.0;
        assert!(mean < 0.2, "a = {a}: mean |grid mean| {mean}");
    }
}

#[test]
fn svd_trunc_falls_with_range() {
    let means: Vec<f64> = [2.0, 4.0, 8.0, 16.0]
        .iter()
        .map(|&a| (0..20u64).map(|s| svd_trunc(&sample_single_scale(&GaussianSpec::new((64, 64), a, s)).unwrap(), 0.99).unwrap()).sum::<f64>() / 20.0)
        .collect();
    assert!(means.windows(2).all(|w| w[1] <= w[0]), "{means:?}");
}

fn quadrant_truncs(f: &ScalarField) -> Vec<f64> {
    let (m, n) = (f.shape()[0], f.shape()[1]);
    let (hm, hn) = (m / 2, n / 2);
    let mut out = Vec::new();
    for (r0, c0) in [(0, 0), (0, hn), (hm, 0), (hm, hn)] {
        let v: Vec<f64> = (r0..r0 + hm).flat_map(|i| (c0..c0 + hn).map(move |j| (i, j))).map(|(i, j)| f.values()[i * n + j]).collect();
        out.push(svd_trunc(&ScalarField::new(v, vec![hm, hn]).unwrap(), 0.99).unwrap());
    }
    out
}

#[test]
fn scalar_mixtures_are_homogeneous_spatial_ones_are_not() {
    // spread of quadrant truncations relative to their mean, averaged over seeds
    let spread = |kind: SampleType| {
        let specs = corpus_specs(kind, 20, (128, 128), (8.0, 8.0), 3);
        specs
            .iter()
            .map(|s| {
                let q = quadrant_truncs(&sample_multiscale(s).unwrap());
                let lo = q.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = q.iter().copied().fold(0.0, f64::max);
                hi / lo
            })
            .sum::<f64>()
            / specs.len() as f64
    };
    let homogeneous = spread(SampleType::ScalarFixed);
    let heterogeneous = spread(SampleType::SpatialFixed);
    assert!(homogeneous < 2.0, "scalar mixture quadrant ratio {homogeneous}");
    assert!(heterogeneous > homogeneous, "{heterogeneous} vs {homogeneous}");
}

#[test]
fn predictive_ratio_grows_with_bound() {
    for s in 0..5u64 {
        let f = sample_single_scale(&GaussianSpec::new((64, 64), 4.0 + 4.0 * s as f64, s)).unwrap();
        let cr: Vec<f64> = [1e-4, 1e-3, 1e-2].iter().map(|&e| compress_predictive(&f, e).unwrap().1.cr).collect();
        assert!(cr.windows(2).all(|w| w[1] >= w[0]), "{cr:?}");
    }
}

fn noisy_samples(seed: u64, n: usize) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Sample { predictors: pv(&mut rng), cr: rng.random_range(2.0..20.0) }).collect()
}

#[test]
fn held_out_rows_do_not_touch_their_fold_model() {
    let samples = noisy_samples(1, 40);
    let folds = kfold_split(samples.len(), 8, 5).unwrap();
    let opts = FitOptions::default();
    for kind in [ModelKind::Linear, ModelKind::Spline, ModelKind::Lasso] {
        let base = cross_validate(&samples, kind, &folds, &opts).unwrap();
        let (_, test) = folds.split(3);
        let mut perturbed = samples.clone();
        for &i in &test {
            perturbed[i].cr *= 7.0;
            perturbed[i].predictors = PredictorVector::from_parts(30.0, 0.9, 0.1, 1e-3);
        }
        let other = cross_validate(&perturbed, kind, &folds, &opts).unwrap();
        assert_eq!(base.models[3].to_text(), other.models[3].to_text(), "{kind}");
    }
}

#[test]
fn medape_ignores_sample_order_within_folds() {
    let samples = noisy_samples(2, 40);
    let folds = kfold_split(samples.len(), 8, 5).unwrap();
    let base = cross_validate(&samples, ModelKind::Linear, &folds, &FitOptions::default()).unwrap();
    // reverse the sample list and carry fold labels along
    let rev: Vec<Sample> = samples.iter().rev().copied().collect();
    let mut rev_folds = folds.clone();
    rev_folds.folds.reverse();
    let other = cross_validate(&rev, ModelKind::Linear, &rev_folds, &FitOptions::default()).unwrap();
    for (a, b) in base.fold_medape.iter().zip(&other.fold_medape) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn spline_does_not_beat_the_mean_on_noise() {
    let mut ratios = 0.0;
    for seed in 0..20 {
        let samples = noisy_samples(100 + seed, 60);
        let spline = evaluate_cv(&samples, ModelKind::Spline, 8, seed).unwrap().medape_q50;
        let mean = evaluate_cv(&samples, ModelKind::Mean, 8, seed).unwrap().medape_q50;
        ratios += spline / mean;
    }
    assert!(ratios / 20.0 >= 0.8, "mean ratio {}", ratios / 20.0);
}

#[test]
fn ranking_rejects_single_compressor() {
    let f = sample_single_scale(&GaussianSpec::new((32, 32), 4.0, 1)).unwrap();
    let samples = noisy_samples(3, 20);
    let rows: Vec<PredictorVector> = samples.iter().map(|s| s.predictors).collect();
    let crs: Vec<f64> = samples.iter().map(|s| s.cr).collect();
    let m = FittedModel::fit(ModelKind::Linear, &rows, &crs, &FitOptions::default()).unwrap();
    let res = crpred_core::usecases::rank_compressors(&f, 1e-3, &[(CompressorId::predictive(), m)], &Registry::native(), false);
    assert!(res.unwrap_err().to_string().contains("need >= 2 compressors"));
}
