use proptest::prelude::*;

use layered_mcts::verify::VALUE_REL_TOL;
use layered_mcts::{
    make_bandit_env, make_bug_trap_env, make_slippery_chain_env, search, search_ref,
    search_unsorted, BugTrapParams, EnvSpec, Mdp, OverflowPolicy, SearchConfig, SearchError,
    UctParams,
};

fn env_strategy() -> impl Strategy<Value = EnvSpec> {
    prop_oneof![
        prop::collection::vec(-1.0f64..1.0, 1..5).prop_map(|arms| make_bandit_env(&arms).unwrap()),
        (2i32..7, 0.0f64..0.6).prop_map(|(len, slip)| make_slippery_chain_env(len, slip).unwrap()),
        (0.0f64..0.3).prop_map(|noise| {
            make_bug_trap_env(BugTrapParams {
                noise_scale: noise,
                ..Default::default()
            })
            .unwrap()
        }),
    ]
}

fn policy_strategy() -> impl Strategy<Value = OverflowPolicy> {
    prop_oneof![
        Just(OverflowPolicy::Fail),
        Just(OverflowPolicy::ClampToBestMatch)
    ]
}

// Index fields differ between layouts, so only the variant and depth count.
fn error_shape(e: &SearchError) -> String {
    match e {
        SearchError::BranchOverflow { depth, cap, .. } => {
            format!("overflow depth={depth} cap={cap}")
        }
        other => other.to_string(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn all_layouts_build_the_same_tree(
        env in env_strategy(),
        n in 1u32..150,
        depth in 1usize..7,
        cap in 1u32..4,
        seed in any::<u64>(),
        c in 0.1f64..5.0,
        policy in policy_strategy(),
    ) {
        let cfg = SearchConfig::new(n, depth, cap, seed)
            .with_exploration(UctParams::new(c).unwrap())
            .with_overflow(policy);
        let root = env.start();
        let tree = search_ref(root, &env, &cfg);
        let array = search(root, &env, &cfg);
        let flat = search_unsorted(root, &env, &cfg);
        match (tree, array, flat) {
            (Ok(t), Ok(a), Ok(u)) => {
                let reference = t.tree.snapshot();
                let (sa, su) = (a.store.snapshot(), u.store.snapshot());
                prop_assert_eq!(reference.diff(&sa, VALUE_REL_TOL), None);
                prop_assert_eq!(reference.diff(&su, VALUE_REL_TOL), None);
                prop_assert!(reference.check_conservation(n).is_ok());
                prop_assert!(a.store.check_layout().is_ok());
                prop_assert_eq!(t.best_action, a.best_action);
                prop_assert_eq!(t.best_action, u.best_action);
                prop_assert_eq!(t.draws, 2 * n as u64 * depth as u64);
                prop_assert_eq!(a.draws, t.draws);
                prop_assert_eq!(u.draws, t.draws);
                prop_assert_eq!(t.tree.overflow_events(), a.store.overflow_events());
                prop_assert_eq!(t.tree.overflow_events(), u.store.overflow_events());
                if policy == OverflowPolicy::Fail {
                    prop_assert_eq!(a.store.overflow_events(), 0);
                }
            }
            (Err(t), Err(a), Err(u)) => {
                prop_assert_eq!(policy, OverflowPolicy::Fail);
                prop_assert_eq!(error_shape(&t), error_shape(&a));
                prop_assert_eq!(error_shape(&t), error_shape(&u));
            }
            (t, a, u) => prop_assert!(
                false,
                "outcomes differ: tree ok={} array ok={} unsorted ok={}",
                t.is_ok(), a.is_ok(), u.is_ok()
            ),
        }
    }

    #[test]
    fn bug_trap_with_generous_caps_never_overflows(n in 1u32..300, depth in 1usize..9, seed in any::<u64>()) {
        let env = make_bug_trap_env(BugTrapParams::default()).unwrap();
        let cfg = SearchConfig::new(n, depth, env.max_branching(), seed);
        let out = search(env.start(), &env, &cfg).unwrap();
        prop_assert_eq!(out.store.overflow_events(), 0);
        prop_assert!(out.best_action < env.num_actions());
        prop_assert!(out.store.snapshot().check_conservation(n).is_ok());
    }
}

#[test]
fn clamp_runs_where_fail_stops() {
    let env = make_slippery_chain_env(4, 0.5).unwrap();
    let strict = SearchConfig::new(300, 5, 1, 11);
    assert!(matches!(
        search(env.start(), &env, &strict),
        Err(SearchError::BranchOverflow { cap: 1, .. })
    ));
    let lenient = strict
        .clone()
        .with_overflow(OverflowPolicy::ClampToBestMatch);
    let a = search(env.start(), &env, &lenient).unwrap();
    let t = search_ref(env.start(), &env, &lenient).unwrap();
    assert!(a.store.overflow_events() > 0);
    assert_eq!(a.store.overflow_events(), t.tree.overflow_events());
    assert_eq!(
        t.tree.snapshot().diff(&a.store.snapshot(), VALUE_REL_TOL),
        None
    );
}
