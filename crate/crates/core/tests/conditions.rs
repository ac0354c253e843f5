use hk_dichotomy::catalog::{ExampleSpec, ExampleSystem};
use hk_dichotomy::dichotomy::*;
use hk_dichotomy::estimate::{check_candidate, divergence_diagnostic, Trend};
use hk_dichotomy::{build_evolution, SplitSystem, Verdict};

fn example(name: &str, window: usize) -> ExampleSystem<f64> {
    ExampleSpec::by_name(name).unwrap().build(window).unwrap()
}

#[test]
fn example2_first_kind_is_uniform() {
    let ex = example("example2", 32);
    let e = build_evolution(&ex.system).unwrap();
    let hd1 = estimate_hd1(&e, &ex.projectors, &ex.h).unwrap();
    let kd1 = estimate_kd1(&e, &ex.projectors, &ex.k).unwrap();
    for r in hd1.envelope.iter().chain(&kd1.envelope) {
        assert!((r - 1.0).abs() < 1e-9, "{r}");
    }
    assert_eq!(hd1.verdict(), Verdict::HoldsOnWindow);
    assert_eq!(kd1.verdict(), Verdict::HoldsOnWindow);
    let d: Vec<f64> = (0..=32).map(|n| 1.0 + n as f64).collect();
    assert!(check_candidate(&hd1, &d, 1e-9).unwrap().pass);
    assert!(check_candidate(&kd1, &d, 1e-9).unwrap().pass);
}

#[test]
fn example2_kd1_ratio_matches_oracle() {
    let ex = example("example2", 12);
    let e = build_evolution(&ex.system).unwrap();
    let kd1 = estimate_kd1(&e, &ex.projectors, &ex.k).unwrap();
    // (k_m/k_n) / gain with gain = (k_m/k_n) e^{m-n} (1+n)/(1+m).
    for m in 0..=12 {
        let oracle = (0..=m)
            .map(|n| ((n as f64) - (m as f64)).exp() * (1.0 + m as f64) / (1.0 + n as f64))
            .fold(0.0, f64::max);
        assert!((kd1.raw[m] - oracle).abs() < 1e-9, "{m}");
    }
}

#[test]
fn example2_hd2_grows_with_projector_norm() {
    let ex = example("example2", 16);
    let split = SplitSystem::new(&ex.system, ex.projectors.clone(), 1e-10).unwrap();
    let (hd2, _) = estimate_hd2_kd2(&split, &ex.h, &ex.k);
    for n in 0..=16 {
        let oracle = 1.0 + (n as f64).exp();
        assert!((hd2.raw[n] - oracle).abs() < 1e-9 * oracle, "{n}: {}", hd2.raw[n]);
    }
}

#[test]
fn example6_refutes_dichotomy_and_keeps_growth() {
    let mut points = Vec::new();
    for window in [8usize, 16, 32] {
        let ex = example("example6", window);
        let e = build_evolution(&ex.system).unwrap();
        let hd1 = estimate_hd1(&e, &ex.projectors, &ex.h).unwrap();
        assert!((hd1.envelope[0] - (window as f64 + 1.0)).abs() < 1e-9);
        points.push((window, hd1.envelope[0]));
        let (hg1, kg1) = estimate_hg1_kg1(&e, &ex.projectors, &ex.h, &ex.k).unwrap();
        let g: Vec<f64> = (0..=window).map(|n| 1.0 + n as f64).collect();
        assert!(check_candidate(&hg1, &g, 1e-9).unwrap().pass);
        assert!(check_candidate(&kg1, &g, 1e-9).unwrap().pass);
        if window == 32 {
            assert_eq!(hd1.verdict(), Verdict::Diverging);
            assert!(!check_candidate(&hd1, &vec![1.0; 33], 1e-9).unwrap().pass);
            let split = SplitSystem::new(&ex.system, ex.projectors.clone(), 1e-10).unwrap();
            let (hg2, kg2) = estimate_hg2_kg2(&split, &ex.h, &ex.k);
            // ||P_n|| = 1 + e^n in the max norm, so 1 + n alone is too small;
            // the projector-weighted envelope of 1 + n is a valid witness.
            assert!(!check_candidate(&hg2, &g, 1e-9).unwrap().pass);
            let s = second_kind_from_first(&split, &g);
            assert!(check_candidate(&hg2, &s, 1e-9).unwrap().pass);
            assert!(check_candidate(&kg2, &s, 1e-9).unwrap().pass);
        }
    }
    let d = divergence_diagnostic(&points).unwrap();
    assert_eq!(d.trend, Trend::Diverging);
    assert!((d.slope - 1.0).abs() < 0.05, "{}", d.slope);
}

#[test]
fn first_and_second_kind_agree_on_builtins() {
    for name in ["example2", "uniform-exponential", "polynomial-diagonal", "perturbed-random"] {
        let ex = example(name, 16);
        let split = SplitSystem::new(&ex.system, ex.projectors.clone(), 1e-10).unwrap();
        let e = split.evolution();
        let hd1 = estimate_hd1(e, &ex.projectors, &ex.h).unwrap();
        let kd1 = estimate_kd1(e, &ex.projectors, &ex.k).unwrap();
        let d: Vec<f64> = hd1.envelope.iter().zip(&kd1.envelope).map(|(a, b)| a.max(*b).max(1.0)).collect();
        let s = second_kind_from_first(&split, &d);
        let (hd2, kd2) = estimate_hd2_kd2(&split, &ex.h, &ex.k);
        assert!(check_candidate(&hd2, &s, 1e-9).unwrap().pass, "{name} hd2");
        assert!(check_candidate(&kd2, &s, 1e-9).unwrap().pass, "{name} kd2");
    }
}

#[test]
fn first_kind_stays_accurate_under_conjugation() {
    // x = S_n y with ||S|| <= 1 + d and ||S^-1|| <= 1/(1 - d) in the max
    // norm, so every stable ratio is at most (1 + d)/(1 - d).
    let d = 0.1;
    let bound = (1.0 + d) / (1.0 - d);
    for seed in 0..4 {
        let spec = ExampleSpec::PerturbedRandom { seed, magnitude: d, alpha: 2f64.ln(), beta: 2f64.ln() };
        let ex: ExampleSystem<f64> = spec.build(32).unwrap();
        let split = SplitSystem::new(&ex.system, ex.projectors.clone(), 1e-10).unwrap();
        let hd1 = estimate_hd1(split.evolution(), &ex.projectors, &ex.h).unwrap();
        let (hd2, _) = estimate_hd2_kd2(&split, &ex.h, &ex.k);
        for n in 0..=32 {
            assert!(hd1.raw[n] <= bound + 1e-9, "seed {seed} n {n}: {}", hd1.raw[n]);
            assert!(hd1.raw[n] <= hd2.raw[n] * (1.0 + 1e-9), "seed {seed} n {n}");
        }
    }
}
