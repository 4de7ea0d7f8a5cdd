use proptest::prelude::*;
use robext::numerics::*;

#[test]
fn integrate_examples() {
    let leb = AtomicMeasure::lebesgue();
    assert!((integrate(|_| 1.0, &leb, 1e-9).unwrap() - 1.0).abs() < 1e-9);
    assert!((integrate(|w| w, &leb, 1e-9).unwrap() - 0.5).abs() < 1e-9);
    let two = AtomicMeasure::atoms_only(vec![Atom::new(0.0, 0.5), Atom::new(1.0, 0.5)]).unwrap();
    assert_eq!(integrate(|w| w, &two, 1e-9).unwrap(), 0.5);
}

#[test]
fn invalid_measures_rejected() {
    assert!(AtomicMeasure::atoms_only(vec![Atom::new(0.2, -0.1)]).is_err());
    assert!(AtomicMeasure::atoms_only(vec![Atom::new(0.2, 0.5), Atom::new(0.2, 0.5)]).is_err());
    assert!(AtomicMeasure::atoms_only(vec![Atom::new(1.2, 0.5)]).is_err());
}

#[test]
fn solve_system_examples() {
    let x = solve_system(|x| vec![x[0] * x[0] - 2.0], &[1.0], 1e-8, 100).unwrap();
    assert!((x[0] - 1.41421).abs() < 1e-5);
    let x = solve_system(|x| vec![x[0] + x[1] - 1.0, x[0] - x[1]], &[0.0, 0.0], 1e-8, 100).unwrap();
    assert!((x[0] - 0.5).abs() < 1e-8 && (x[1] - 0.5).abs() < 1e-8);
}

fn laplace_mc(a: f64, t: f64, n: usize, seed: u64) -> (f64, f64) {
    let mut rng = RngState::new(seed, 0).rng();
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let v = (-t * sample_positive_stable(a, &mut rng)).exp();
        s += v;
        s2 += v * v;
    }
    let mean = s / n as f64;
    let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
    (mean, se)
}

#[test]
fn positive_stable_laplace_transform() {
    for (k, &a) in [0.3, 0.5, 0.8].iter().enumerate() {
        for &t in &[0.5, 1.0, 2.0] {
            let (m, se) = laplace_mc(a, t, 1_000_000, 11 + k as u64);
            let exact = (-(t as f64).powf(a)).exp();
            assert!((m - exact).abs() < 3.0 * se, "a={a} t={t}: {m} vs {exact} (se {se})");
        }
    }
}

#[test]
fn positive_stable_near_one() {
    let (m, _) = laplace_mc(0.99, 1.0, 200_000, 5);
    assert!((m - (-1f64).exp()).abs() < 0.01);
}

#[test]
fn positive_stable_deterministic() {
    let s = RngState::new(42, 9);
    assert_eq!(sample_positive_stable_at(0.5, s), sample_positive_stable_at(0.5, s));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integrate_is_linear(alpha in -3.0f64..3.0, beta in -3.0f64..3.0, k in 1.0f64..6.0, p in 0.0f64..0.5) {
        let tol = 1e-9;
        let m = AtomicMeasure::new(
            Some(std::sync::Arc::new(move |w: f64, _| (1.0 - 2.0 * p) * 6.0 * w * (1.0 - w))),
            vec![Atom::new(0.0, p), Atom::new(1.0, p)],
        ).unwrap();
        let f = move |w: f64| (k * w).sin();
        let g = |w: f64| w.sqrt();
        let lhs = integrate(|w| alpha * f(w) + beta * g(w), &m, tol).unwrap();
        let rhs = alpha * integrate(f, &m, tol).unwrap() + beta * integrate(g, &m, tol).unwrap();
        prop_assert!((lhs - rhs).abs() <= 3.0 * tol);
    }

    #[test]
    fn solve_identity_shift(c in prop::collection::vec(-1e3f64..1e3, 1..4)) {
        let cc = c.clone();
        let x = solve_system(move |x| x.iter().zip(&cc).map(|(a, b)| a - b).collect(), &vec![0.0; c.len()], 1e-8, 50).unwrap();
        prop_assert_eq!(x, c);
    }
}
