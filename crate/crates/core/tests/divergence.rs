mod common;

use common::{dens_al_pair, dens_hr_pair, graded_integral};
use proptest::prelude::*;
use robext::divergence::*;
use robext::inference::AngularSample;
use robext::numerics::{Atom, RngState};
use robext::spectral::{AngleSampler, SpectralModel};

fn p() -> DominatingMeasure {
    DominatingMeasure::ReferenceP
}

fn leb() -> DominatingMeasure {
    DominatingMeasure::Lebesgue
}

fn hr(l: f64) -> SpectralModel {
    SpectralModel::husler_reiss(l).unwrap()
}

#[test]
fn identical_models_have_zero_divergence() {
    let al = SpectralModel::asymmetric_logistic(0.4, 0.7, 0.7).unwrap();
    let et = SpectralModel::extremal_t(0.65, 1.21).unwrap();
    for m in [hr(0.6), al.clone(), et] {
        assert_eq!(divergence(&m, &m, &p()).unwrap(), 0.0, "{m}");
    }
    assert_eq!(divergence(&hr(0.6), &hr(0.6), &leb()).unwrap(), 0.0);
    // atoms of the reference but none in μ
    assert!(divergence(&al, &al, &leb()).is_err());
}

#[test]
fn two_valued_likelihood_ratio() {
    let pts = [0.2, 0.4, 0.6, 0.8];
    let base = SpectralModel::from_atoms(pts.iter().map(|&w| Atom::new(w, 0.25)).collect()).unwrap();
    // L' = 2 above the median, 0 below
    let q = SpectralModel::from_atoms(vec![Atom::new(0.6, 0.5), Atom::new(0.8, 0.5)]).unwrap();
    assert!((divergence(&q, &base, &p()).unwrap() - 1.0).abs() < 1e-15);
    // an atom where μ = P has none
    let r = SpectralModel::from_atoms(vec![Atom::new(0.5, 1.0)]).unwrap();
    assert_eq!(divergence(&r, &base, &p()).unwrap(), f64::INFINITY);
}

#[test]
fn lebesgue_divergence_is_squared_density_distance() {
    for (a, b) in [(0.6, 0.8), (0.6, 0.45), (1.2, 0.9)] {
        let lib = divergence(&hr(b), &hr(a), &leb()).unwrap();
        let orc = graded_integral(|w, wc| (dens_hr_pair(b, w, wc) - dens_hr_pair(a, w, wc)).powi(2));
        assert!((lib - orc).abs() < 1e-8, "{a} {b}: {lib} vs {orc}");
    }
}

#[test]
fn reference_divergence_is_second_moment_minus_one() {
    // finite as long as q's tails are not too heavy relative to p's
    for (a, b) in [(0.6, 0.7), (0.6, 0.55), (1.0, 1.3)] {
        let lib = divergence(&hr(b), &hr(a), &p()).unwrap();
        let orc = graded_integral(|w, wc| {
            let (q, pp) = (dens_hr_pair(b, w, wc), dens_hr_pair(a, w, wc));
            if pp > 0.0 {
                q * q / pp
            } else {
                0.0
            }
        }) - 1.0;
        assert!((lib - orc).abs() < 1e-8, "{a} {b}: {lib} vs {orc}");
    }
    let al_p = SpectralModel::asymmetric_logistic(0.5, 0.8, 0.8).unwrap();
    let al_q = SpectralModel::asymmetric_logistic(0.45, 0.8, 0.8).unwrap();
    let lib = divergence(&al_q, &al_p, &p()).unwrap();
    // both atoms carry mass 0.1 in each model
    let orc = graded_integral(|w, wc| {
        let (q, pp) = (dens_al_pair(0.45, 0.8, 0.8, w, wc), dens_al_pair(0.5, 0.8, 0.8, w, wc));
        if pp > 0.0 {
            q * q / pp
        } else {
            0.0
        }
    }) + 0.1 + 0.1
        - 1.0;
    assert!((lib - orc).abs() < 1e-8, "{lib} vs {orc}");
}

#[test]
fn logistic_against_husler_reiss() {
    let al = SpectralModel::asymmetric_logistic(0.5, 1.0, 1.0).unwrap();
    // the Hüsler–Reiss density vanishes faster than any power at the ends
    assert_eq!(divergence(&al, &hr(0.61), &p()).unwrap(), f64::INFINITY);
    let d = divergence(&al, &hr(0.61), &leb()).unwrap();
    assert!((d - 0.06).abs() <= 0.01, "{d}");
}

#[test]
fn class_edge_matches_radius() {
    // HR(0.7366) is on the boundary of the δ = 0.4 ball around HR(0.6)
    let d = divergence(&hr(0.7366), &hr(0.6), &p()).unwrap();
    assert!((d - 0.4).abs() < 2e-3, "{d}");
}

#[test]
fn renyi_radius_values() {
    assert_eq!(renyi2_radius(0.0), 0.0);
    assert!((renyi2_radius(1.0) - 0.69315).abs() < 1e-5);
    assert!((renyi2_radius(std::f64::consts::E - 1.0) - 1.0).abs() < 1e-14);
}

fn sample_of(m: &SpectralModel, k: usize, seed: u64) -> AngularSample {
    let ys = AngleSampler::new(m).unwrap().sample(k, RngState::new(seed, 0));
    AngularSample::from_angles(ys, 1e-12).unwrap()
}

#[test]
fn estimate_is_small_on_own_sample() {
    for seed in 0..3 {
        let s = sample_of(&hr(0.6), 500, seed);
        let d = estimate_divergence(&s, &hr(0.6), &leb(), None).unwrap();
        assert!(d < 0.05, "seed {seed}: {d}");
        let al = SpectralModel::asymmetric_logistic(0.5, 0.8, 0.8).unwrap();
        let s = sample_of(&al, 500, seed);
        let d = estimate_divergence(&s, &al, &p(), None).unwrap();
        assert!(d.is_finite() && d >= 0.0, "seed {seed}: {d}");
    }
}

#[test]
fn estimate_grows_as_bandwidth_shrinks() {
    // data far rougher than the reference: smoothing hides the difference
    let fixtures = [(0.2, 1.5, 10), (0.25, 1.2, 11), (0.3, 2.0, 12)];
    for (data, reference, seed) in fixtures {
        let s = sample_of(&hr(data), 500, seed);
        let vals: Vec<f64> = [0.4, 0.2, 0.1, 0.05]
            .iter()
            .map(|&h| estimate_divergence(&s, &hr(reference), &leb(), Some(h)).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]), "{data} vs {reference}: {vals:?}");
    }
}

#[test]
fn estimate_edge_cases() {
    let few = AngularSample::from_angles(vec![0.5; 49], 1e-6).unwrap();
    assert!(estimate_divergence(&few, &hr(0.6), &leb(), None).is_err());
    let ends: Vec<f64> = (0..100).map(|i| (i % 2) as f64).collect();
    let ends = AngularSample::from_angles(ends, 1e-6).unwrap();
    assert_eq!(estimate_divergence(&ends, &hr(0.6), &leb(), None).unwrap(), f64::INFINITY);
}

#[test]
fn kernel_model_is_a_spectral_law() {
    let al = SpectralModel::asymmetric_logistic(0.4, 0.7, 0.9).unwrap();
    let s = sample_of(&al, 2000, 3);
    let k = kernel_model(&s, None).unwrap();
    let (mass, _) = k.mass_and_mean().unwrap();
    assert!((mass - 1.0).abs() < 1e-9, "{mass}");
    let a0 = k.atom_mass_at(0.0);
    assert!((a0 - s.count0() as f64 / 2000.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn divergence_positive_off_the_diagonal(l in 0.3f64..1.5, e in 0.01f64..0.2) {
        let d = divergence(&hr(l + e), &hr(l), &leb()).unwrap();
        prop_assert!(d > 0.0);
        let d = divergence(&hr(l * (1.0 - 0.5 * e)), &hr(l), &p()).unwrap();
        prop_assert!(d > 0.0);
    }

    #[test]
    fn divergence_nonnegative(a in 0.3f64..0.9, b in 0.3f64..0.9, t1 in 0.3f64..1.0, t2 in 0.3f64..1.0) {
        let q = SpectralModel::asymmetric_logistic(a, t1, t2).unwrap();
        let pm = SpectralModel::asymmetric_logistic(b, t1, t2).unwrap();
        let d = divergence(&q, &pm, &p()).unwrap();
        prop_assert!(d >= 0.0);
    }
}
