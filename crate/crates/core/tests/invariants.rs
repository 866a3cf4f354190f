mod common;

use std::sync::Arc;

use fairdyn::audit::{
    self, check_conservation, check_recallable, envy_factor, proportionality_factor,
    proportionality_factor_live, ud_fairness_factor, Factor,
};
use fairdyn::harness::{self, RunConfig, Source};
use fairdyn::rat::{self, Rat};
use fairdyn::trace::Trace;
use fairdyn::{Algorithm, IntervalSet, PiecewiseConstant};
use num_traits::{One, Signed};
use proptest::prelude::*;

fn set_strategy() -> impl Strategy<Value = IntervalSet> {
    prop::collection::vec((0i64..=60, 1i64..=12, prop::sample::select(vec![60i64, 7, 13])), 0..6).prop_map(
        |raw| {
            let pieces = raw
                .into_iter()
                .filter_map(|(a, len, q)| {
                    let a = a.min(q - 1);
                    let b = (a + len).min(q);
                    (a < b).then(|| (rat::ratio(a, q), rat::ratio(b, q)))
                })
                .collect();
            IntervalSet::from_pieces(pieces).unwrap()
        },
    )
}

fn density_strategy() -> impl Strategy<Value = PiecewiseConstant> {
    any::<u64>().prop_map(|seed| common::density(&mut common::rng(seed), 30, 6))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn set_algebra(a in set_strategy(), b in set_strategy()) {
        let u = a.union(&b);
        let i = a.intersect(&b);
        prop_assert_eq!(&u, &b.union(&a));
        prop_assert_eq!(&i, &b.intersect(&a));
        prop_assert_eq!(u.measure() + i.measure(), a.measure() + b.measure());
        let d = a.subtract(&b);
        prop_assert!(d.is_disjoint(&b));
        prop_assert_eq!(d.union(&i), a.clone());
        prop_assert!(i.is_subset(&a) && a.is_subset(&u));
        prop_assert_eq!(a.complement().complement(), a.clone());
        prop_assert!(a.is_disjoint(&a.complement()));
        prop_assert_eq!(a.complement().measure(), Rat::one() - a.measure());
        // canonical: sorted, non-touching, non-empty pieces
        for w in u.pieces().windows(2) {
            prop_assert!(w[0].1 < w[1].0);
        }
        prop_assert!(u.pieces().iter().all(|(x, y)| x < y));
    }

    #[test]
    fn valuations_are_additive(v in density_strategy(), a in set_strategy(), b in set_strategy()) {
        let lhs = v.eval(&a.union(&b)) + v.eval(&a.intersect(&b));
        prop_assert_eq!(lhs, v.eval(&a) + v.eval(&b));
        prop_assert_eq!(v.eval(&IntervalSet::full()), v.total_mass());
        prop_assert!(v.eval(&a) <= v.total_mass());
        prop_assert!(v.eval(&v.zero_region()).is_zero());
    }

    #[test]
    fn rationals_round_trip(p in -10_000i64..10_000, q in 1i64..10_000) {
        let r = rat::ratio(p, q);
        prop_assert_eq!(rat::parse(&rat::format(&r)), Some(r.clone()));
        prop_assert!(rat::from_int(rat::floor_int(&r)) <= r);
        prop_assert!(rat::from_int(rat::ceil_int(&r)) >= r);
        prop_assert!((rat::to_f64(&r) - p as f64 / q as f64).abs() < 1e-12);
    }
}

fn step_checks(trace: &Trace) -> Result<(), TestCaseError> {
    let report = audit::audit(trace).unwrap();
    prop_assert!(check_recallable(trace, 1).unwrap().ok);
    prop_assert!(check_conservation(trace).unwrap().ok);
    prop_assert!(report.recallable_ok && report.conservation_ok);
    for (k, s) in report.per_step.iter().enumerate() {
        let step = k + 1;
        prop_assert_eq!(s.step, step);
        if trace.header.algorithm.is_interval() {
            prop_assert_eq!(&s.xi, &envy_factor(trace, step).unwrap());
            prop_assert_eq!(&s.sigma_arrivals, &proportionality_factor(trace, step).unwrap());
            prop_assert_eq!(&s.sigma, &proportionality_factor_live(trace, step).unwrap());
        } else {
            prop_assert_eq!(&s.eta, &ud_fairness_factor(trace, step).unwrap());
            let a = s.allocated.as_ref().unwrap();
            prop_assert!(!a.is_negative() && *a <= Rat::one());
        }
    }
    let bytes = trace.to_bytes();
    let back = Trace::from_bytes(&bytes).unwrap();
    prop_assert_eq!(back.to_bytes(), bytes.clone());
    prop_assert_eq!(harness::replay(&bytes).unwrap().to_json(), report.to_json());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn interval_runs_audit_consistently(
        seed in any::<u64>(),
        n in 1usize..9,
        leave in prop::sample::select(vec![0.0, 0.2, 0.4]),
        second in any::<bool>(),
    ) {
        let inst = common::density_instance(seed, n, leave);
        let alg = if second { Algorithm::Dfd2 } else { Algorithm::Dfd1 };
        let out = harness::run(&RunConfig::new(alg), Source::Instance(&inst)).unwrap();
        step_checks(&out.trace)?;
        // idle freed resource voids the guarantees once anyone has left
        if leave > 0.0 {
            return Ok(());
        }
        prop_assert!(out.report.passed());
        if alg == Algorithm::Dfd2 {
            for s in &out.report.per_step {
                let xi = s.xi.as_ref().and_then(Factor::finite).cloned();
                prop_assert!(xi.is_none_or(|x| x <= rat::int(s.arrivals as i64)));
            }
        }
    }

    #[test]
    fn demand_runs_audit_consistently(
        seed in any::<u64>(),
        n in 1usize..40,
        leave in prop::sample::select(vec![0.0, 0.3]),
        known in any::<bool>(),
    ) {
        let inst = common::demand_instance(seed, n, leave);
        let alg = if known { Algorithm::UdS } else { Algorithm::Ud };
        let out = harness::run(&RunConfig::new(alg), Source::Instance(&inst)).unwrap();
        step_checks(&out.trace)?;
        prop_assert!(out.report.passed());
    }
}

#[test]
fn ties_between_identical_players_are_exact() {
    // Uniform players make every cross value tie; the audit must still
    // report exact factors.
    let inst = fairdyn::instance::Instance::from_valuations(
        (0..12)
            .map(|_| fairdyn::Valuation::Density(Arc::new(PiecewiseConstant::uniform())))
            .collect(),
        Default::default(),
    );
    for alg in [Algorithm::Dfd1, Algorithm::Dfd2] {
        let out = harness::run(&RunConfig::new(alg), Source::Instance(&inst)).unwrap();
        for (k, s) in out.report.per_step.iter().enumerate() {
            assert_eq!(s.xi, envy_factor(&out.trace, k + 1).unwrap());
        }
    }
}

#[test]
fn empty_room_breaks_the_guarantee() {
    use fairdyn::instance::{Instance, InstanceEvent, InstanceMeta};
    use fairdyn::{PlayerId, Valuation};
    let u = || InstanceEvent::Arrival(Valuation::Density(Arc::new(PiecewiseConstant::uniform())));
    let inst = Instance {
        n_max: 3,
        events: vec![u(), InstanceEvent::Departure(PlayerId(1)), u(), u()],
        meta: InstanceMeta::default(),
    };
    for alg in [Algorithm::Dfd1, Algorithm::Dfd2] {
        let out = harness::run(&RunConfig::new(alg), Source::Instance(&inst)).unwrap();
        assert!(out.report.recallable_ok && out.report.conservation_ok);
        let last = out.report.per_step.last().unwrap();
        assert_eq!(last.sigma, Some(Factor::Unbounded), "{alg}");
        // holding nothing, nobody envies anybody
        assert_eq!(last.xi, Some(Factor::Finite(Rat::one())), "{alg}");
        assert_eq!(out.report.passed(), alg == Algorithm::Dfd2, "{alg}");
    }
}
