use proptest::prelude::*;
use robext::bounds::{exact_bound, Direction};
use robext::divergence::DominatingMeasure;
use robext::inference::*;
use robext::numerics::RngState;
use robext::spectral::*;

fn hr(l: f64) -> SpectralModel {
    SpectralModel::husler_reiss(l).unwrap()
}

fn draws(m: &SpectralModel, k: usize, seed: u64) -> AngularSample {
    let ys = AngleSampler::new(m).unwrap().sample(k, RngState::new(seed, 0));
    AngularSample::from_angles(ys, 1e-12).unwrap()
}

#[test]
fn polar_examples() {
    let s = BivariateSample::new(vec![[3.0, 1.0], [0.1, 0.1], [1.0, 1.0]], MarginKind::Raw).unwrap();
    let a = polar_topk(&s, 1, RAW_ENDPOINT_TOL).unwrap();
    assert_eq!(a.angles, vec![0.75]);
    assert_eq!(a.threshold, 2.0);

    // k = n - 1 drops exactly the smallest radius
    let rows: Vec<[f64; 2]> = (1..=10).map(|i| [i as f64, (11 - i) as f64 * 0.5]).collect();
    let smallest = rows
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1[0] + a.1[1]).total_cmp(&(b.1[0] + b.1[1])))
        .unwrap()
        .0;
    let s = BivariateSample::new(rows.clone(), MarginKind::Raw).unwrap();
    let a = polar_topk(&s, 9, RAW_ENDPOINT_TOL).unwrap();
    let expect: Vec<f64> = rows
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != smallest)
        .map(|(_, r)| r[0] / (r[0] + r[1]))
        .collect();
    assert_eq!(a.angles, expect);

    assert!(polar_topk(&s, 10, RAW_ENDPOINT_TOL).is_err());
    let z = BivariateSample::new(vec![[0.0, 0.0], [1.0, 2.0]], MarginKind::Raw).unwrap();
    assert!(polar_topk(&z, 1, RAW_ENDPOINT_TOL).is_err());
}

#[test]
fn extreme_angles_have_mean_one_half() {
    let s = simulate_asym_logistic(0.4, 0.7, 1.0, 20_000, RngState::new(5, 0)).unwrap();
    let s = to_pareto_margins(&s).unwrap();
    let a = polar_topk(&s, 500, RAW_ENDPOINT_TOL).unwrap();
    assert!((a.mean() - 0.5).abs() < 0.03, "{}", a.mean());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn polar_is_scale_invariant(rows in prop::collection::vec((0.01f64..100.0, 0.01f64..100.0), 5..40), k in 1usize..4) {
        let rows: Vec<[f64; 2]> = rows.into_iter().map(|(a, b)| [a, b]).collect();
        let scaled: Vec<[f64; 2]> = rows.iter().map(|r| [7.0 * r[0], 7.0 * r[1]]).collect();
        let a = polar_topk(&BivariateSample::new(rows, MarginKind::Raw).unwrap(), k, RAW_ENDPOINT_TOL).unwrap();
        let b = polar_topk(&BivariateSample::new(scaled, MarginKind::Raw).unwrap(), k, RAW_ENDPOINT_TOL).unwrap();
        prop_assert_eq!(a.angles.len(), b.angles.len());
        for (x, y) in a.angles.iter().zip(&b.angles) {
            prop_assert!((x - y).abs() < 1e-15);
        }
    }
}

#[test]
fn husler_reiss_mle_is_consistent() {
    for seed in 0..3 {
        let s = draws(&hr(0.6), 100_000, seed);
        let fit = fit_mle(Family::HuslerReiss, &s).unwrap();
        let l = fit.model.params()[0];
        assert!((0.58..=0.62).contains(&l), "seed {seed}: {l}");
    }
}

#[test]
fn mle_beats_the_truth() {
    let truths = [
        hr(0.8),
        SpectralModel::asymmetric_logistic(0.5, 0.8, 0.6).unwrap(),
        SpectralModel::extremal_t(0.4, 2.0).unwrap(),
    ];
    for (i, m) in truths.iter().enumerate() {
        let s = draws(m, 2000, 40 + i as u64);
        let fit = fit_mle(m.family().unwrap(), &s).unwrap();
        let at_truth = log_likelihood(m, &s);
        assert!(fit.log_likelihood >= at_truth - 1e-9, "{m}: {} < {at_truth}", fit.log_likelihood);
        assert!((log_likelihood(&fit.model, &s) - fit.log_likelihood).abs() < 1e-9);
    }
}

#[test]
fn husler_reiss_rejects_endpoint_observations() {
    let mut ys = draws(&hr(0.6), 200, 1).angles;
    ys[0] = 0.0;
    let s = AngularSample::from_angles(ys, 1e-6).unwrap();
    assert!(fit_mle(Family::HuslerReiss, &s).is_err());
}

#[test]
fn bootstrap_envelopes() {
    let z: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
    let truth = SpectralModel::asymmetric_logistic(0.5, 0.9, 0.5).unwrap();
    let s = draws(&truth, 500, 9);
    let env = bootstrap_pickands(&s, Family::AsymmetricLogistic, 60, &z, RngState::new(9, 1)).unwrap();
    for j in 0..z.len() {
        assert!(env.lower[j] <= env.centre[j] && env.centre[j] <= env.upper[j]);
    }
    // a single resample is the sample itself
    let one = bootstrap_pickands(&s, Family::AsymmetricLogistic, 1, &z, RngState::new(9, 1)).unwrap();
    assert_eq!(one.lower, one.centre);
    assert_eq!(one.upper, one.centre);
    let fit = fit_mle(Family::AsymmetricLogistic, &s).unwrap();
    assert_eq!(one.centre, pickands_curve(&fit.model, &z).unwrap());

    // more data, narrower band
    let width = |k: usize| {
        let s = draws(&hr(0.6), k, 21);
        let e = bootstrap_pickands(&s, Family::HuslerReiss, 100, &[0.5], RngState::new(21, 1)).unwrap();
        e.upper[0] - e.lower[0]
    };
    let (w500, w2000) = (width(500), width(2000));
    assert!(w2000 < w500, "{w500} -> {w2000}");

    // identical seeds, identical bands
    let again = bootstrap_pickands(&s, Family::AsymmetricLogistic, 60, &z, RngState::new(9, 1)).unwrap();
    assert_eq!(again.lower, env.lower);
    assert_eq!(again.upper, env.upper);
}

#[test]
fn model_class_bounds_in_the_illustration() {
    let m = hr(0.6);
    let p = DominatingMeasure::ReferenceP;
    let leb = DominatingMeasure::Lebesgue;
    let up = model_class_bounds(&m, 0.4, &p, 0.4, Direction::Upper).unwrap();
    assert!((up.param - 0.737).abs() <= 0.01, "{}", up.param);
    let up = model_class_bounds(&m, 0.4, &leb, 0.4, Direction::Upper).unwrap();
    assert!((up.param - 0.844).abs() <= 0.01, "{}", up.param);
    let lo = model_class_bounds(&m, 0.4, &leb, 0.4, Direction::Lower).unwrap();
    assert!((lo.param - 0.366).abs() <= 0.01, "{}", lo.param);
    let lo = model_class_bounds(&m, 0.4, &p, 0.4, Direction::Lower).unwrap();
    assert!((lo.param - 0.367).abs() <= 0.01, "{}", lo.param);

    let own = model_class_bounds(&m, 0.4, &p, 0.0, Direction::Upper).unwrap();
    assert_eq!(own.param, 0.6);
    assert_eq!(own.value, m.pickands(0.4).unwrap());
}

#[test]
fn model_class_lies_inside_exact_bounds() {
    let m = hr(0.6);
    let a = m.pickands(0.4).unwrap();
    for mu in [DominatingMeasure::ReferenceP, DominatingMeasure::Lebesgue] {
        for delta in [0.1, 0.4, 1.0] {
            let cu = model_class_bounds(&m, 0.4, &mu, delta, Direction::Upper).unwrap().value;
            let cl = model_class_bounds(&m, 0.4, &mu, delta, Direction::Lower).unwrap().value;
            let eu = exact_bound(&m, 0.4, &mu, delta, Direction::Upper).unwrap().value();
            let el = exact_bound(&m, 0.4, &mu, delta, Direction::Lower).unwrap().value();
            assert!(el <= cl + 1e-9 && cl <= a && a <= cu && cu <= eu + 1e-9, "{} δ={delta}: {el} {cl} {a} {cu} {eu}", mu.label());
        }
    }
}

#[test]
fn model_class_needs_a_parametric_model() {
    let e = SpectralModel::from_grid(vec![1.0; 11], vec![]).unwrap();
    assert!(model_class_bounds(&e, 0.4, &DominatingMeasure::Lebesgue, 0.1, Direction::Upper).is_err());
}
