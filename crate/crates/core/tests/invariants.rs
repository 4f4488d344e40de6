use std::collections::HashSet;

use geoprob::functionals::{rsa_pack, rsa_pack_naive};
use geoprob::geometry::{Boundary, Window};
use geoprob::processes::{attach_marks, DensitySpec, MarkPlan, MarkedPoint, NestedCoupling, PointConfiguration};
use geoprob::SeedSpec;
use proptest::prelude::*;

fn random_config(d: usize, n: usize, side: f64, torus: bool, seed: u64) -> PointConfiguration {
    let mut window = Window::cube(d, side).unwrap();
    if torus {
        window = window.with_boundary(Boundary::Torus);
    }
    let s = SeedSpec::new(seed);
    let mut rng = s.child(0).rng();
    let pts = (0..n).map(|k| MarkedPoint::new(k as u64, window.uniform_point(&mut rng))).collect();
    attach_marks(&PointConfiguration::new(window, pts).unwrap(), &MarkPlan::times(), &s.child(1)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn packing_is_hard_core_and_saturated(d in 1usize..=3, n in 0usize..200, r in 0.05f64..0.6, torus: bool, seed: u64) {
        let c = random_config(d, n, 4.0, torus, seed);
        let packed = rsa_pack(&c, r).unwrap();
        prop_assert_eq!(&packed, &rsa_pack_naive(&c, r).unwrap());
        let w = c.window;
        for i in 0..c.len() {
            for j in 0..c.len() {
                let close = i != j && w.dist(&c.points[i].position, &c.points[j].position) < 2.0 * r;
                // Packed balls never overlap.
                prop_assert!(!(close && packed[i] && packed[j]));
            }
            if !packed[i] {
                // Rejection needs an earlier packed point in the way.
                let blocked = (0..c.len()).any(|j| {
                    packed[j]
                        && c.points[j].time < c.points[i].time
                        && w.dist(&c.points[i].position, &c.points[j].position) < 2.0 * r
                });
                prop_assert!(blocked);
            }
        }
    }

    #[test]
    fn nested_samples_grow_with_lambda(d in 1usize..=2, lo in 1.0f64..50.0, factor in 1.0f64..4.0, seed: u64) {
        let coupling = NestedCoupling::new(SeedSpec::new(seed), DensitySpec::uniform(d));
        let small = coupling.sample(lo).unwrap();
        let large = coupling.sample(lo * factor).unwrap();
        let ids: HashSet<u64> = large.points.iter().map(|p| p.id).collect();
        prop_assert!(small.points.iter().all(|p| ids.contains(&p.id)));
        prop_assert!(small.points.iter().all(|p| (0..d).all(|i| (0.0..=1.0).contains(&p.position[i]))));
    }

    #[test]
    fn seeds_are_reproducible(seed: u64, a: u64, b: u64) {
        let s = SeedSpec::new(seed);
        prop_assert_eq!(s.child(a).child(b).uniform_at(0), SeedSpec::new(seed).child(a).child(b).uniform_at(0));
    }
}
