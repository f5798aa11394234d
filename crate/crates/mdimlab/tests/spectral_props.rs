use mdimlab::horseshoe_map::HorseshoeMap;
use mdimlab::maps::Identity;
use mdimlab::params::ParameterSpec;
use mdimlab::transition_spectral::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

const LOG3: f64 = 1.0986122886681098;

fn maps() -> Vec<HorseshoeMap> {
    vec![
        HorseshoeMap::zigzag(3).unwrap(),
        HorseshoeMap::zigzag(5).unwrap(),
        HorseshoeMap::new(ParameterSpec::preset1()).unwrap(),
        HorseshoeMap::new(ParameterSpec::preset2(0.5)).unwrap(),
        HorseshoeMap::new(ParameterSpec::preset3()).unwrap(),
        HorseshoeMap::new(ParameterSpec::explicit(vec![0.5, 0.3, 0.2], vec![1, 3, 5])).unwrap(),
    ]
}

fn value(m: &TransitionMatrix, method: BoundMethod) -> f64 {
    bound(m, method).unwrap().value
}

/// Spectral radius from a dense Schur decomposition.
fn oracle_radius(m: &TransitionMatrix) -> f64 {
    let a = DMatrix::from_fn(m.size, m.size, |i, j| if m.contains(i, j) { 1.0 } else { 0.0 });
    a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Random 0-1 matrix with nonempty rows.
fn matrix() -> impl Strategy<Value = TransitionMatrix> {
    (1usize..=12).prop_flat_map(|n| {
        (proptest::collection::vec(proptest::collection::vec(any::<bool>(), n), n), proptest::collection::vec(0..n, n))
            .prop_map(move |(bits, fallback)| {
                let dense: Vec<Vec<u8>> = bits
                    .iter()
                    .zip(&fallback)
                    .map(|(r, &f)| {
                        let mut r: Vec<u8> = r.iter().map(|&b| b as u8).collect();
                        r[f] = 1;
                        r
                    })
                    .collect();
                TransitionMatrix::dense(&dense).unwrap()
            })
    })
}

#[test]
fn cover_examples() {
    assert_eq!(build_cover(0.25).unwrap().centers, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    assert_eq!(build_cover(0.5).unwrap().centers, vec![0.0, 0.5, 1.0]);
    assert_eq!(build_cover(1.0).unwrap().centers, vec![0.5]);
    for eps in [0.3, 0.1, 0.07, 1.0 / 3.0] {
        let c = build_cover(eps).unwrap();
        assert!(c.centers.windows(2).all(|w| w[1] - w[0] >= eps - 1e-12));
        // every point of [0,1] is within ε of some center
        for i in 0..=1000 {
            let y = i as f64 / 1000.0;
            assert!(c.centers.iter().any(|&z| (z - y).abs() < eps), "eps={eps} y={y}");
        }
    }
}

#[test]
fn matrix_examples() {
    let z = HorseshoeMap::zigzag(3).unwrap();
    let cover = EpsCover::from_balls(vec![0.125, 0.375, 0.625, 0.875], 0.125).unwrap();
    let m = build_matrix_exact(&z, &cover).unwrap();
    let one_based: Vec<Vec<u32>> = m.rows.iter().map(|r| r.iter().map(|j| j + 1).collect()).collect();
    assert_eq!(one_based, vec![vec![1, 2, 3], vec![3, 4], vec![1, 2], vec![2, 3, 4]]);
    assert_eq!(build_matrix_sampled(&z, &cover, 64).unwrap().rows, m.rows);
    assert!((value(&m, BoundMethod::GershgorinRow) - LOG3).abs() < 1e-15);
    let p = bound(&m, BoundMethod::PowerIteration).unwrap();
    assert!(p.converged && p.certified);
    assert!((p.value - oracle_radius(&m).ln()).abs() < 1e-8, "{} vs {}", p.value, oracle_radius(&m).ln());

    let cover = build_cover(0.1).unwrap();
    let id = build_matrix_exact(&Identity, &cover).unwrap();
    for (i, r) in id.rows.iter().enumerate() {
        let want: Vec<u32> = (i.saturating_sub(1)..=(i + 1).min(cover.len() - 1)).map(|j| j as u32).collect();
        assert_eq!(r, &want);
    }
}

#[test]
fn bound_examples() {
    let id = TransitionMatrix::dense(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]).unwrap();
    let ones = TransitionMatrix::dense(&vec![vec![1; 3]; 3]).unwrap();
    for method in [BoundMethod::GershgorinRow, BoundMethod::GershgorinCol, BoundMethod::Knorm { k: 5 }, BoundMethod::PowerIteration] {
        assert!(value(&id, method).abs() < 1e-9, "{method:?}");
        assert!((value(&ones, method) - LOG3).abs() < 1e-9, "{method:?}");
    }
    let sampled = build_matrix_sampled(&HorseshoeMap::zigzag(3).unwrap(), &build_cover(0.1).unwrap(), 16).unwrap();
    for method in [BoundMethod::GershgorinRow, BoundMethod::Knorm { k: 5 }, BoundMethod::PowerIteration] {
        assert!(!bound(&sampled, method).unwrap().certified);
    }
    assert!(bound(&ones, BoundMethod::Knorm { k: 0 }).is_err());
}

#[test]
fn sampled_within_exact_on_horseshoes() {
    for m in maps() {
        for eps in [0.3, 0.1, 1.0 / 27.0, 2f64.powi(-6), 0.013] {
            for cover in [build_cover(eps).unwrap(), EpsCover::mesh(eps).unwrap()] {
                let exact = build_matrix_exact(&m, &cover).unwrap();
                assert!(exact.rows.iter().all(|r| !r.is_empty()));
                for s in [8, 33, 64] {
                    let sampled = build_matrix_sampled(&m, &cover, s).unwrap();
                    assert!(sampled.is_subset_of(&exact), "{} eps={eps} samples={s}", m.spec().label());
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bounds_are_ordered(m in matrix()) {
        let row = value(&m, BoundMethod::GershgorinRow);
        let col = value(&m, BoundMethod::GershgorinCol);
        let power = value(&m, BoundMethod::PowerIteration);
        prop_assert!(power <= row.min(col) + 1e-8, "power {} row {} col {}", power, row, col);
        let ks: Vec<f64> = [1, 2, 4, 8, 16, 32].iter().map(|&k| value(&m, BoundMethod::Knorm { k })).collect();
        for w in ks.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-8, "knorm {:?}", ks);
        }
        for k in [1, 3, 5, 12, 32] {
            let kn = value(&m, BoundMethod::Knorm { k });
            prop_assert!(kn >= power - 1e-6, "knorm({}) {} power {}", k, kn, power);
        }
        let k1 = value(&m, BoundMethod::Knorm { k: 1 });
        prop_assert!((row - k1).abs() < 1e-12, "row {} knorm(1) {}", row, k1);
    }

    #[test]
    fn power_matches_dense_oracle(m in matrix()) {
        let p = bound(&m, BoundMethod::PowerIteration).unwrap();
        let r = oracle_radius(&m);
        if p.converged {
            // a reducible matrix may converge slowly, so compare radii loosely
            prop_assert!((p.value.exp() - r).abs() <= 1e-4 * r.max(1.0), "power {} oracle {}", p.value.exp(), r);
        }
    }

    #[test]
    fn transpose_swaps_gershgorin(m in matrix()) {
        let t = m.transpose();
        prop_assert_eq!(value(&m, BoundMethod::GershgorinCol), value(&t, BoundMethod::GershgorinRow));
        prop_assert_eq!(value(&m, BoundMethod::GershgorinRow), value(&t, BoundMethod::GershgorinCol));
        prop_assert_eq!(t.transpose(), m);
    }

    #[test]
    fn sampled_within_exact(which in 0usize..6, eps in 0.01f64..0.5, samples in 8usize..80, mesh in any::<bool>()) {
        let m = &maps()[which];
        let cover = if mesh { EpsCover::mesh(eps).unwrap() } else { build_cover(eps).unwrap() };
        let exact = build_matrix_exact(m, &cover).unwrap();
        let sampled = build_matrix_sampled(m, &cover, samples).unwrap();
        prop_assert!(sampled.is_subset_of(&exact));
    }
}
