mod common;

use flux_engine::background::{realize, SampledFlux};
use flux_engine::buscher::{buscher_dualize, compose_dualities, dualize_class};
use flux_engine::cohomology::{decompose, irreducible_kernel, is_in_parallel_stratum, r_sharp, ProductSpec};
use flux_engine::rational::{rat, Rational};
use flux_engine::reduction::{pullback_flux, pullback_many};
use flux_engine::tolerance::Tolerances;
use num_traits::Zero;
use proptest::prelude::*;

use common::*;

fn coeffs(len: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((-6i64..=6, 1i64..=4), len).prop_map(|v| v.into_iter().map(|(p, q)| rat(p, q)).collect())
}

fn nonzero_rational() -> impl Strategy<Value = Rational> {
    (1i64..=7, 1i64..=5, any::<bool>()).prop_map(|(p, q, neg)| rat(if neg { -p } else { p }, q))
}

/// A spec drawn from a seed, with a coefficient vector of matching length.
fn spec_and_beta(k: std::ops::RangeInclusive<usize>, p1_empty: bool) -> impl Strategy<Value = (ProductSpec, Vec<Rational>)> {
    (any::<u64>(), k).prop_flat_map(move |(seed, k)| {
        let spec = random_spec(&mut rng(seed), k, p1_empty);
        let len = spec.beta_len();
        (Just(spec), coeffs(len))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stratum_verdict_is_scale_invariant((spec, beta) in spec_and_beta(0..=3, false), q in nonzero_rational()) {
        let cls = decompose(&beta, &spec).unwrap();
        let scaled = cls.scaled(&q);
        prop_assert_eq!(r_sharp(&cls, &spec).unwrap(), r_sharp(&scaled, &spec).unwrap());
        let k = irreducible_kernel(&cls, &spec).unwrap();
        let ks = irreducible_kernel(&scaled, &spec).unwrap();
        let expected: Vec<Rational> = k.kernel.iter().map(|x| x * &q).collect();
        prop_assert_eq!(ks.kernel, expected);
    }

    #[test]
    fn parallel_stratum_is_a_subspace((spec, a) in spec_and_beta(0..=3, false), seed in any::<u64>(), q in nonzero_rational()) {
        let a = decompose(&a, &spec).unwrap();
        let b = random_class(&mut rng(seed), &spec);
        let project = |cls: &flux_engine::cohomology::MixedFluxClass| {
            let mut out = cls.clone();
            let kernel = irreducible_kernel(cls, &spec).unwrap().kernel;
            for (g, k) in out.gamma.iter_mut().zip(kernel) {
                *g -= k;
            }
            out
        };
        let (pa, pb) = (project(&a), project(&b));
        prop_assert!(is_in_parallel_stratum(&pa, &spec));
        prop_assert!(is_in_parallel_stratum(&pa.scaled(&q).add(&pb), &spec));
    }

    #[test]
    fn r_sharp_detects_the_kernel((spec, beta) in spec_and_beta(0..=3, true)) {
        let cls = decompose(&beta, &spec).unwrap();
        let v = r_sharp(&cls, &spec).unwrap();
        let kernel = irreducible_kernel(&cls, &spec).unwrap();
        prop_assert_eq!(v.r_sharp == 1, !kernel.is_zero());
        prop_assert_eq!(kernel.kernel, cls.gamma);
    }

    #[test]
    fn pullback_is_linear_and_drops_one_coefficient(
        (spec, x) in spec_and_beta(1..=4, false),
        seed in any::<u64>(),
        q in nonzero_rational(),
    ) {
        let x = decompose(&x, &spec).unwrap();
        let y = random_class(&mut rng(seed), &spec);
        let i = (seed % spec.k() as u64) as usize;
        let (px, py) = (pullback_flux(&x, &spec, i).unwrap(), pullback_flux(&y, &spec, i).unwrap());
        let pc = pullback_flux(&x.scaled(&q).add(&y), &spec, i).unwrap();
        prop_assert_eq!(&px.dropped, &x.c[i]);
        prop_assert_eq!(&px.restricted.gamma, &x.gamma);
        prop_assert_eq!(pc.restricted, px.restricted.scaled(&q).add(&py.restricted));
        prop_assert_eq!(px.vanished, px.restricted.is_zero());
    }

    #[test]
    fn collapsing_all_circles_keeps_gamma((spec, beta) in spec_and_beta(1..=4, false)) {
        let cls = decompose(&beta, &spec).unwrap();
        let all: Vec<usize> = (0..spec.k()).rev().collect();
        let p = pullback_many(&cls, &spec, &all).unwrap();
        prop_assert!(p.restricted.c.is_empty());
        prop_assert_eq!(p.restricted.gamma, cls.gamma);
        let total = cls.c.iter().fold(Rational::zero(), |acc, c| acc + c);
        prop_assert_eq!(p.dropped, total);
    }

    #[test]
    fn class_duality_removes_exactly_one_coefficient((spec, beta) in spec_and_beta(1..=3, false), pick in any::<prop::sample::Index>()) {
        let cls = decompose(&beta, &spec).unwrap();
        let circles = spec.flat_circles();
        let info = &circles[pick.index(circles.len())];
        let (dual, converted) = dualize_class(&cls, &spec, info.circle).unwrap();
        prop_assert_eq!(&converted, cls.coefficient(info.basis));
        prop_assert!(dual.coefficient(info.basis).is_zero());
        let again = dualize_class(&dual, &spec, info.circle).unwrap();
        prop_assert_eq!(again.0, dual.clone());
        for b in (0..spec.beta_len()).filter(|&b| b != info.basis) {
            prop_assert_eq!(dual.coefficient(b), cls.coefficient(b));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn double_duality_is_the_identity(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let bg = random_background(&mut rng, 5);
        let tol = Tolerances::default();
        for &coord in &bg.circle_coords {
            let (once, _) = buscher_dualize(&bg, coord, &tol).unwrap();
            let (twice, _) = buscher_dualize(&once, coord, &tol).unwrap();
            prop_assert!(twice.max_deviation(&bg).0 <= 1e-10);
        }
    }

    #[test]
    fn duality_leaves_other_circles_alone((spec, beta) in spec_and_beta(1..=3, false), seed in any::<u64>()) {
        let cls = decompose(&beta, &spec).unwrap();
        let real = realize(&spec, &cls, 9).unwrap();
        let tol = Tolerances::default();
        let set = random_dualize_set(&mut rng(seed), &spec, 2);
        let (bg, _, dual) = compose_dualities(&spec, &real.background, &cls, &set, &tol).unwrap();
        let coords: Vec<usize> = set.iter().map(|&c| spec.circle_info(c).unwrap().coord).collect();
        for info in spec.flat_circles() {
            if !coords.contains(&info.coord) {
                prop_assert!(bg.product_flag(info.coord, tol.zero));
                prop_assert_eq!(dual.coefficient(info.basis), cls.coefficient(info.basis));
            }
        }
        bg.check_positive_definite().unwrap();
    }

    #[test]
    fn dual_flux_has_no_legs_on_the_dualized_circle((spec, beta) in spec_and_beta(1..=3, false), pick in any::<prop::sample::Index>()) {
        let cls = decompose(&beta, &spec).unwrap();
        let real = realize(&spec, &cls, 17).unwrap();
        let circles = spec.flat_circles();
        let info = &circles[pick.index(circles.len())];
        let (bg, _, _) = compose_dualities(&spec, &real.background, &cls, &[info.circle], &Tolerances::default()).unwrap();
        let h = SampledFlux::from_background(&bg).unwrap();
        prop_assert!(h.max_abs_where(|idx| idx.contains(&info.coord)) <= 1e-8);
        prop_assert!(h.bidegree_violation() <= 1e-10);
    }
}
