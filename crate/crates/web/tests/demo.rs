use crpred_web::demo::{analyze, forecast, grey_levels, sample, Forecast};

#[test]
fn sample_is_seeded_and_sized() {
    let a = sample(3, 48, 12.0, 5).unwrap();
    let b = sample(3, 48, 12.0, 5).unwrap();
    assert_eq!(a.shape(), &[48, 48]);
    assert_eq!(a.values(), b.values());
    assert_ne!(a.values(), sample(3, 48, 12.0, 6).unwrap().values());
    assert!(sample(5, 48, 12.0, 5).is_err());
    assert!(sample(1, 4096, 12.0, 5).is_err());
}

#[test]
fn coarser_bound_compresses_more() {
    let f = sample(1, 64, 16.0, 2).unwrap();
    let fine = analyze(&f, 1e-4).unwrap();
    let coarse = analyze(&f, 1e-2).unwrap();
    assert!(coarse.q_entropy < fine.q_entropy);
    assert!(coarse.cr_predictive > fine.cr_predictive);
    assert!(coarse.cr_rounding > fine.cr_rounding);
    assert_eq!(fine.sigma, coarse.sigma);
}

#[test]
fn forecast_tracks_measurement() {
    let f = sample(1, 64, 20.0, 9).unwrap();
    let r = forecast(&f, 1, 24, 1e-3, 1).unwrap();
    assert!(Forecast::ape(r.predicted_predictive, r.measured_predictive) < 25.0, "{r:?}");
    assert!(Forecast::ape(r.predicted_rounding, r.measured_rounding) < 25.0, "{r:?}");
    assert_eq!(r.chosen(), "predictive");
    assert!(forecast(&f, 1, 2, 1e-3, 1).is_err());
}

#[test]
fn grey_levels_span_full_range() {
    let f = sample(2, 32, 8.0, 1).unwrap();
    let g = grey_levels(&f);
    assert_eq!(g.len(), 32 * 32);
    assert_eq!(g.iter().min(), Some(&0));
    assert_eq!(g.iter().max(), Some(&255));
}
