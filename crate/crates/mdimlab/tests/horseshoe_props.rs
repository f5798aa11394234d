mod common;

use common::{check_cylinder_word, cylinder_dynamics};
use mdimlab::horseshoe_map::HorseshoeMap;
use mdimlab::maps::IntervalMap;
use mdimlab::params::ParameterSpec;
use proptest::prelude::*;

fn p2() -> HorseshoeMap {
    HorseshoeMap::new(ParameterSpec::preset2(0.5)).unwrap()
}

fn maps() -> Vec<HorseshoeMap> {
    vec![
        p2(),
        HorseshoeMap::new(ParameterSpec::preset2(0.3)).unwrap(),
        HorseshoeMap::new(ParameterSpec::preset1()).unwrap(),
        HorseshoeMap::new(ParameterSpec::preset3()).unwrap(),
        HorseshoeMap::new(ParameterSpec::explicit(vec![0.5, 0.3, 0.2], vec![1, 3, 5])).unwrap(),
    ]
}

#[test]
fn operation_examples() {
    let m = p2();
    assert_eq!(m.eval(0.0).unwrap(), 0.0);
    assert_eq!(m.eval(1.0).unwrap(), 1.0);
    assert!((m.eval(0.5).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    assert_eq!(m.orbit(0.0, 4).unwrap(), vec![0.0; 4]);
    assert_eq!(m.orbit(1.0, 3).unwrap(), vec![1.0; 3]);
    let o = m.orbit(0.5, 2).unwrap();
    assert_eq!(o[0], 0.5);
    assert!((o[1] - 1.0 / 6.0).abs() < 1e-15);
    let c = m.cylinder(1, &[1]).unwrap().endpoints;
    assert!(c.0.abs() < 1e-15 && (c.1 - 2.0 / 9.0).abs() < 1e-15);
    assert!((m.cylinder(1, &[1, 1]).unwrap().length() - 2.0 / 27.0).abs() < 1e-15);
    let j2 = m.cylinder(2, &[]).unwrap().endpoints;
    assert!((j2.0 - m.boundary(1)).abs() < 1e-15 && (j2.1 - m.boundary(2)).abs() < 1e-15);
    assert!(m.cylinder(1, &[4]).is_err());
    assert!(m.cylinder(1, &[0]).is_err());
    assert!((m.holder_constant(2, 0.5).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    for k in 1..=40 {
        assert!((m.holder_constant(k, 0.5).unwrap() - 2f64.sqrt()).abs() < 1e-9, "k={k}");
    }
    assert!(m.eval(-0.1).is_err() && m.eval(1.1).is_err());
}

#[test]
fn holder_near_one_is_branch_count() {
    for m in maps() {
        let b1 = m.spec().branches(1).unwrap() as f64;
        let h = m.holder_constant(1, 1.0 - 1e-9).unwrap();
        assert!((h - b1).abs() < 1e-6 * b1, "{}: {h} vs {b1}", m.spec().label());
    }
}

#[test]
fn full_branches() {
    for m in maps() {
        let kmax = m.spec().horizon().min(8);
        for k in 1..=kmax {
            let b = m.spec().branches(k).unwrap();
            let (a0, a1) = (m.boundary(k - 1), m.boundary(k));
            if a1 - a0 < 1e-9 {
                continue;
            }
            for i in 1..=b {
                let (u, v) = m.cylinder(k, &[i]).unwrap().endpoints;
                let (fu, fv) = (m.apply(u), m.apply(v));
                let (lo, hi) = (fu.min(fv), fu.max(fv));
                assert!((lo - a0).abs() < 1e-12 && (hi - a1).abs() < 1e-12, "{} k={k} i={i}", m.spec().label());
            }
        }
    }
}

#[test]
fn cylinder_dynamics_all_words() {
    for m in maps() {
        let n = cylinder_dynamics(&m, 3.min(m.spec().horizon()), 5, 60_000, 3000).unwrap();
        assert!(n > 0);
    }
}

#[test]
fn holder_sup_identity() {
    // the tail window needs ten indices, which the short explicit list lacks
    for m in maps().into_iter().filter(|m| m.spec().horizon() >= 10) {
        let k = m.spec().horizon().min(1000);
        let r = m.mdim_formula(k).unwrap();
        assert_eq!(r.holder_sup, 1.0 - r.upper);
        assert!(0.0 <= r.lower && r.lower <= r.upper && r.upper <= 1.0);
    }
}

/// `H_k(α)` over `k <= kmax` peaks early and decreases strictly afterwards.
fn bounded_witness(m: &HorseshoeMap, alpha: f64, kmax: usize) -> (usize, bool) {
    let h: Vec<f64> = (1..=kmax).map(|k| m.holder_constant(k, alpha).unwrap()).collect();
    let arg = (0..h.len()).max_by(|&a, &b| h[a].total_cmp(&h[b])).unwrap();
    let decreasing = h[arg..].windows(2).all(|w| w[1] < w[0]);
    (arg + 1, decreasing)
}

#[test]
fn holder_threshold() {
    for beta in [0.3, 0.5, 0.7] {
        let m = HorseshoeMap::new(ParameterSpec::preset2(beta)).unwrap();
        let r = m.mdim_formula(1000).unwrap();
        let below = 1.0 - r.upper - 0.1;
        let (arg, dec) = bounded_witness(&m, below, 200);
        assert!(arg < 200 && dec, "beta={beta} alpha={below}");
        let above = 1.0 - r.lower + 0.1;
        assert!((1..=400).any(|k| m.holder_constant(k, above).unwrap() > 1e3), "beta={beta}");
    }
    let m = HorseshoeMap::new(ParameterSpec::preset3()).unwrap();
    let (arg, dec) = bounded_witness(&m, 0.9, 200);
    assert!(arg < 200 && dec);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn slope_is_branch_count(which in 0usize..5, k in 1usize..=3, i in 1u64..=50, at in 0.05f64..0.95, h in 1e-6f64..1e-3) {
        let m = &maps()[which];
        prop_assume!(k <= m.spec().horizon());
        let b = m.spec().branches(k).unwrap();
        let i = (i - 1) % b + 1;
        let (u, v) = m.cylinder(k, &[i]).unwrap().endpoints;
        let w = v - u;
        let x = u + at * w;
        let y = (x + h * w).min(v - 0.01 * w);
        prop_assume!(y > x);
        let ratio = ((m.apply(y) - m.apply(x)) / (y - x)).abs();
        prop_assert!((ratio - b as f64).abs() <= 1e-6 * b as f64, "ratio {} vs {}", ratio, b);
    }

    #[test]
    fn deep_cylinders(word in proptest::collection::vec(1u64..=27, 4..=5)) {
        let m = p2();
        check_cylinder_word(&m, 3, &word, 1e-9).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn nested_cylinders(s in 1usize..=3, word in proptest::collection::vec(1u64..=3, 0..5), last in 1u64..=3) {
        let m = p2();
        let outer = m.cylinder(s, &word).unwrap().endpoints;
        let mut w = word.clone();
        w.push(last);
        let inner = m.cylinder(s, &w).unwrap();
        prop_assert!(outer.0 - 1e-15 <= inner.endpoints.0 && inner.endpoints.1 <= outer.1 + 1e-15);
        let want = m.spec().gap(s).unwrap() / (m.spec().branches(s).unwrap() as f64).powi(w.len() as i32);
        // the length is a difference of endpoints near 1, each rounded once
        prop_assert!((inner.length() - want).abs() <= 1e-12 * want + 1e-15);
    }
}
