mod common;

use accrel_core::format::{parse_problem, print_problem};
use accrel_core::generators::{gen_random_instance, DependencyMix, RandomLimits};
use accrel_core::model::Configuration;
use accrel_core::query::{eval, to_dnf};
use accrel_core::reductions::{Lang, ProblemInstance};
use proptest::prelude::*;

fn limits(lang: bool, mix: u8) -> RandomLimits {
    let mix = match mix % 3 {
        0 => DependencyMix::Independent,
        1 => DependencyMix::Dependent,
        _ => DependencyMix::Mixed,
    };
    RandomLimits { lang: if lang { Lang::Cq } else { Lang::Pq }, mix, ..RandomLimits::default() }
}

fn instance(seed: u64, lang: bool, mix: u8) -> ProblemInstance {
    gen_random_instance(seed, &limits(lang, mix)).unwrap()
}

fn picks() -> impl Strategy<Value = Vec<common::Pick>> {
    prop::collection::vec((0usize..8, prop::collection::vec(0usize..8, 12), 0usize..3), 0..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn print_parse_round_trip(seed in any::<u64>(), lang in any::<bool>(), mix in any::<u8>()) {
        let inst = instance(seed, lang, mix);
        let text = print_problem(&inst);
        prop_assert_eq!(parse_problem(&text, false).unwrap(), inst);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn generator_is_deterministic_and_bounded(seed in any::<u64>(), lang in any::<bool>(), mix in any::<u8>()) {
        let l = limits(lang, mix);
        let inst = gen_random_instance(seed, &l).unwrap();
        prop_assert_eq!(&inst, &gen_random_instance(seed, &l).unwrap());
        inst.validate().unwrap();
        prop_assert!(inst.schema.relations.len() <= l.relations);
        prop_assert!(inst.schema.domains.len() <= l.domains);
        prop_assert!(inst.schema.relations.iter().all(|r| r.arity() <= l.arity));
        prop_assert!(inst.conf.len() <= l.facts);
        for q in &inst.queries {
            prop_assert!(q.body.atoms().len() <= l.atoms);
            if lang {
                prop_assert!(q.body.is_cq());
            }
        }
        if l.mix == DependencyMix::Independent {
            prop_assert!(inst.schema.all_independent());
        }
    }

    #[test]
    fn dnf_preserves_answers(seed in any::<u64>(), lang in any::<bool>(), mix in any::<u8>()) {
        let inst = instance(seed, lang, mix);
        for q in &inst.queries {
            let by_dnf = to_dnf(&q.body).iter().any(|d| eval(&d.to_query(), &inst.conf).is_some());
            prop_assert_eq!(eval(&q.body, &inst.conf).is_some(), by_dnf);
        }
    }

    #[test]
    fn queries_are_monotone(seed in any::<u64>(), mix in any::<u8>(), keep in prop::collection::vec(any::<bool>(), 8)) {
        let inst = instance(seed, false, mix);
        let mut sub = Configuration::new();
        for (i, f) in inst.conf.facts().enumerate() {
            if keep[i % keep.len()] {
                sub.insert(f);
            }
        }
        for q in &inst.queries {
            if eval(&q.body, &sub).is_some() {
                prop_assert!(eval(&q.body, &inst.conf).is_some());
            }
        }
    }

    #[test]
    fn truncation_is_a_subset(seed in any::<u64>(), mix in any::<u8>(), ps in picks()) {
        let inst = instance(seed, false, mix);
        let path = common::random_path(&inst, &ps);
        prop_assert_eq!(common::truncation_is_a_subset(&inst, &path), Ok(()));
    }

    #[test]
    fn singleton_responses_reach_the_same_configurations(seed in any::<u64>(), mix in any::<u8>(), ps in picks()) {
        let inst = instance(seed, false, mix);
        let path = common::random_path(&inst, &ps);
        prop_assert_eq!(common::singleton_responses_agree(&inst, &path), Ok(()));
    }

    #[test]
    fn immediate_relevance_implies_long_term(seed in any::<u64>(), mix in any::<u8>()) {
        let inst = instance(seed, false, mix);
        prop_assert!(common::ir_implies_ltr(&inst).is_ok());
    }

    /// A larger budget never flips a decided answer.
    #[test]
    fn budgets_are_monotone(seed in any::<u64>(), mix in any::<u8>()) {
        let inst = gen_random_instance(seed, &common::small(Lang::Pq, limits(false, mix).mix)).unwrap();
        prop_assert_eq!(common::budgets_are_monotone(&inst), Ok(()));
    }
}
