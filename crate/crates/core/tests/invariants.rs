//! Randomized invariants of the geometry, covering and reporting layers.

use fdlab::cli::RunManifest;
use fdlab::covering::{check_cover, parabolic_item, vitali_select, PARABOLIC_C1};
use fdlab::estimates::{regime_classify, RegimeLabel};
use fdlab::geometry::{build_profile, GeometryConstants};
use fdlab::grid::snapshot::{decode_snapshot, encode_snapshot};
use fdlab::grid::{cylinder_mean, point, Cylinder, FieldIntegrator, ModelParams, ScalarField, SpaceTimeGrid};
use fdlab::reduce::pairwise_sum;
use proptest::prelude::*;

/// Positive field built from a few smooth bumps.
fn bumps(grid: SpaceTimeGrid, amps: &[f64], floor: f64) -> ScalarField {
    let amps = amps.to_vec();
    ScalarField::from_fn(grid, "f", move |x, t| {
        floor
            + amps
                .iter()
                .enumerate()
                .map(|(k, a)| {
                    let c = -1.0 + 0.5 * k as f64;
                    a * (-((x[0] - c).powi(2) + (t - 2.0).powi(2)) / 0.1).exp()
                })
                .sum::<f64>()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn jensen_ordering(amps in prop::collection::vec(0.0f64..5.0, 4), floor in 0.01f64..1.0, m in 0.2f64..0.95,
                       x in -0.8f64..0.8, r in 0.1f64..0.9, tau in 0.05f64..0.8) {
        let g = SpaceTimeGrid::cube(1, 2.0, 64, (1.0, 3.0), 32).unwrap();
        let u = bumps(g, &amps, floor);
        let q = Cylinder::centered(point(&[x]), 2.0, tau, r);
        let lo = cylinder_mean(&u, &q, m).unwrap().powf(1.0 / m);
        let hi = cylinder_mean(&u, &q, m + 1.0).unwrap().powf(1.0 / (m + 1.0));
        prop_assert!(lo <= hi * (1.0 + 1e-12), "{lo} > {hi}");
    }

    #[test]
    fn regime_classifier_is_total(amps in prop::collection::vec(0.0f64..5.0, 4), floor in 0.01f64..1.0,
                                  eps in 1e-4f64..1.0, r in 0.1f64..0.9) {
        let g = SpaceTimeGrid::cube(1, 2.0, 64, (1.0, 3.0), 32).unwrap();
        let u = bumps(g, &amps, floor);
        let q = Cylinder::centered(point(&[0.1]), 2.0, 0.5, r);
        let reg = regime_classify(&u, &q, 0.5, eps).unwrap();
        let degenerate = reg.oscillation_ratio >= eps;
        prop_assert_eq!(reg.label == RegimeLabel::Degenerate, degenerate);
    }

    #[test]
    fn profile_identity_holds(amps in prop::collection::vec(0.0f64..5.0, 4), floor in 0.05f64..1.0, x in -0.5f64..0.5) {
        let g = SpaceTimeGrid::cube(1, 2.0, 64, (1.0, 3.0), 64).unwrap();
        let f = bumps(g, &amps, floor);
        let consts = GeometryConstants::new(&ModelParams::new(1, 0.5).unwrap(), 0.25, 0.25, 0.5, 4.0).unwrap();
        let prof = build_profile(&FieldIntegrator::new(&f), &point(&[x]), 2.0, &consts).unwrap();
        for i in 0..prof.len() {
            let rel = (prof.r[i] * prof.r[i] * prof.theta[i] - prof.s[i]).abs() / prof.s[i];
            prop_assert!(rel <= 4.0 * f64::EPSILON, "rel {rel}");
            prop_assert!(i == 0 || prof.r[i] >= prof.r[i - 1] * (1.0 - 1e-9));
        }
    }

    #[test]
    fn vitali_cores_disjoint_and_dilations_cover(seed in 0u64..1000, count in 1usize..60) {
        let g = SpaceTimeGrid::cube(1, 2.0, 64, (-2.0, 2.0), 64).unwrap();
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let items: Vec<_> = (0..count)
            .map(|_| parabolic_item(point(&[2.0 * next() - 1.0]), 2.0 * next() - 1.0, 0.005 + 0.2 * next(), PARABOLIC_C1))
            .collect();
        let sel = vitali_select(1, &items);
        let chk = check_cover(&g, &items, &sel);
        prop_assert!(chk.disjoint);
        prop_assert_eq!(chk.uncovered_nodes, 0);
    }

    #[test]
    fn pairwise_sum_is_thread_invariant(v in prop::collection::vec(-1e3f64..1e3, 0..5000)) {
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        prop_assert_eq!(one.install(|| pairwise_sum(&v)).to_bits(), many.install(|| pairwise_sum(&v)).to_bits());
    }

    #[test]
    fn snapshots_round_trip_bitwise(amps in prop::collection::vec(0.0f64..5.0, 4), floor in 0.0f64..1.0) {
        let g = SpaceTimeGrid::cube(1, 2.0, 16, (1.0, 3.0), 8).unwrap();
        let f = bumps(g, &amps, floor);
        let back = decode_snapshot(&encode_snapshot(&f)).unwrap();
        prop_assert_eq!(back.grid, f.grid);
        prop_assert!(back.values.iter().zip(&f.values).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn manifest_round_trips(seed in any::<u64>(), levels in 1usize..=4, m in 0.5f64..0.95, tol in 0.0f64..10.0) {
        let mut man = RunManifest::default();
        man.seed = seed;
        man.levels = levels;
        man.model.n = 1;
        man.model.m = m;
        man.tolerances.insert("probe.change".into(), tol);
        let back = RunManifest::from_toml(&man.to_toml().unwrap()).unwrap();
        prop_assert_eq!(back, man);
    }
}
