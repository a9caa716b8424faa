mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use aspplan_core::action::{closure, ClosureResult, LitSet, DEFAULT_MAX_FLUENTS};
use aspplan_core::corpus;
use aspplan_core::encoder::{closure_program, encode_problem, formula_program, EncodeOptions};
use aspplan_core::formula::{sat, CompiledFormula};
use aspplan_core::ground::parse_ground;
use aspplan_core::planner::{cross_check, plan_asp, plan_direct, verify_plan, PlannerConfig, PlanningProblem};
use aspplan_core::program::check_program;
use aspplan_core::solver::{enumerate, is_answer_set, ChoiceMode, SolveConfig, Strategy as SolveStrategy};
use aspplan_core::syntax::parse_problem;
use aspplan_core::Knowledge;

use common::*;

/// A normal program over `x0..x{atoms-1}` with constraints, as text.
fn normal_program(atoms: usize) -> impl Strategy<Value = String> {
    let lit = (0..atoms, any::<bool>()).prop_map(|(a, neg)| if neg { format!("not x{a}") } else { format!("x{a}") });
    let rule = (proptest::option::of(0..atoms), proptest::collection::vec(lit, 0..3)).prop_map(|(h, body)| {
        let head = h.map(|a| format!("x{a}")).unwrap_or_default();
        match (head.is_empty(), body.is_empty()) {
            (true, true) => String::new(),
            (false, true) => format!("{head}.\n"),
            (_, false) => format!("{head} :- {}.\n", body.join(", ")),
        }
    });
    proptest::collection::vec(rule, 1..10).prop_map(|rs| rs.concat())
}

fn shown(g: &aspplan_core::ground::GroundProgram, cfg: &SolveConfig) -> BTreeSet<Vec<String>> {
    enumerate(g, cfg).unwrap().iter().map(|m| m.show(g)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn search_matches_exhaustive(src in normal_program(7)) {
        prop_assume!(!src.is_empty());
        let g = parse_ground(&src).unwrap();
        let search = shown(&g, &SolveConfig::default());
        let ex = shown(&g, &SolveConfig { strategy: SolveStrategy::Exhaustive, ..SolveConfig::default() });
        prop_assert_eq!(search, ex);
    }

    #[test]
    fn enumerated_sets_are_stable(src in normal_program(8)) {
        prop_assume!(!src.is_empty());
        let g = parse_ground(&src).unwrap();
        let models = enumerate(&g, &SolveConfig::default()).unwrap();
        for m in &models {
            prop_assert!(is_answer_set(&g, &m.to_set()));
        }
        let again = enumerate(&g, &SolveConfig::default()).unwrap();
        prop_assert_eq!(models, again);
    }

    #[test]
    fn choice_expansion_preserves_models(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let atoms = rng.gen_range(2..=10);
        let g = parse_ground(&random_choice_program(&mut rng, atoms)).unwrap();
        let native = shown(&g, &SolveConfig::default());
        let expanded = shown(&g, &SolveConfig { choice_mode: ChoiceMode::Expand, ..SolveConfig::default() });
        let ex = shown(&g, &SolveConfig { strategy: SolveStrategy::Exhaustive, ..SolveConfig::default() });
        prop_assert_eq!(&native, &expanded);
        prop_assert_eq!(&native, &ex);
    }

    #[test]
    fn ground_text_round_trips(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let g = parse_ground(&random_choice_program(&mut rng, 8)).unwrap();
        let text = g.to_text();
        let g2 = parse_ground(&text).unwrap();
        prop_assert_eq!(&g2.to_text(), &text);
        prop_assert_eq!(shown(&g, &SolveConfig::default()), shown(&g2, &SolveConfig::default()));
    }

    #[test]
    fn closure_program_matches_closure(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let k = rng.gen_range(2..=4);
        let names: Vec<String> = (0..k).map(|i| format!("f{i}")).collect();
        let lit = |rng: &mut StdRng| {
            let f = &names[rng.gen_range(0..k)];
            if rng.gen() { f.clone() } else { format!("-{f}") }
        };
        let mut src = format!("%! aspplan problem v1\nfluent {}.\naction z.\n", names.join(", "));
        for _ in 0..rng.gen_range(1..=4) {
            let body: Vec<String> = (0..rng.gen_range(1..=2)).map(|_| lit(&mut rng)).collect();
            src.push_str(&format!("caused({{{}}}, {}).\n", body.join(", "), lit(&mut rng)));
        }
        let d = match parse_problem(&src) {
            Ok(p) => p.domain,
            Err(_) => return Ok(()),
        };
        let y_lits: Vec<_> = (0..rng.gen_range(0..=k))
            .map(|_| d.lit(&corpus::parse_literal(&lit(&mut rng))).unwrap())
            .collect();
        let y = LitSet::from_lits(d.fluent_count(), y_lits);
        let g = closure_program(&d, &y, 0);
        let models = enumerate(&g, &SolveConfig::default()).unwrap();
        match closure(d.statics(), &y) {
            ClosureResult::Undefined => prop_assert!(models.is_empty()),
            ClosureResult::Defined(cl) => {
                prop_assert_eq!(models.len(), 1);
                let holds: BTreeSet<String> =
                    models[0].show(&g).into_iter().filter(|a| a.starts_with("holds(")).collect();
                let want: BTreeSet<String> = cl
                    .iter()
                    .map(|l| aspplan_core::encoder::holds_term(&d.literal(l), 0).to_string())
                    .collect();
                prop_assert_eq!(holds, want);
            }
        }
    }

    #[test]
    fn sat_matches_compiled_table(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let d = free_domain(rng.gen_range(1..=3));
        let n = rng.gen_range(0..=4);
        let states: Vec<_> = (0..=n).map(|_| random_state(&mut rng, &d)).collect();
        let f = random_temporal_formula(&mut rng, &d, 3, false);
        let compiled = CompiledFormula::new(&d, &f, None).unwrap();
        prop_assert_eq!(compiled.eval(&states), sat(&d, &states, &f, None).unwrap());
        // the formula program has exactly one answer set and agrees at time 0
        let (g, names) = formula_program(&d, &states, std::slice::from_ref(&f), None, EncodeOptions::default()).unwrap();
        let models = enumerate(&g, &SolveConfig::default()).unwrap();
        prop_assert_eq!(models.len(), 1);
        let hf = aspplan_core::Term::app("hf", vec![names[0].clone(), aspplan_core::Term::int(0)]);
        let got = g.atom_id(&hf).is_some_and(|a| models[0].contains(a));
        prop_assert_eq!(got, compiled.eval(&states));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn golog_routes_agree_and_plans_verify(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = StdRng::seed_from_u64(seed);
        let pf = parse(&random_golog_problem(&mut rng, n));
        let Knowledge::Program(p) = &pf.knowledge else { unreachable!() };
        prop_assume!(check_program(p).is_coherent());
        let prob = PlanningProblem::from_file(pf, None).unwrap();
        let cfg = PlannerConfig::default();
        let r = cross_check(&prob, &cfg).unwrap();
        prop_assert!(r.agree(), "{:?}", r);
        for fp in plan_asp(&prob, &cfg).unwrap().plans {
            let v = verify_plan(&prob, &fp.trajectory, DEFAULT_MAX_FLUENTS).unwrap();
            prop_assert!(v.valid, "{:?}", v);
        }
    }

    #[test]
    fn pruning_keeps_the_plan_set(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = StdRng::seed_from_u64(seed);
        let pf = parse(&random_golog_problem(&mut rng, n));
        let Knowledge::Program(p) = &pf.knowledge else { unreachable!() };
        prop_assume!(check_program(p).is_coherent());
        let prob = PlanningProblem::from_file(pf, None).unwrap();
        let plain = plan_direct(&prob, &PlannerConfig::default()).unwrap();
        let pruned = plan_direct(&prob, &PlannerConfig { prune: true, ..Default::default() }).unwrap();
        prop_assert_eq!(plain.plans, pruned.plans);
    }

    #[test]
    fn htn_routes_agree(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let pf = parse(&random_htn_problem(&mut rng, 3));
        let Knowledge::Program(p) = &pf.knowledge else { unreachable!() };
        prop_assume!(check_program(p).is_coherent());
        let prob = PlanningProblem::from_file(pf, None).unwrap();
        let r = cross_check(&prob, &PlannerConfig::default()).unwrap();
        prop_assert!(r.agree(), "{:?}", r);
    }

    #[test]
    fn temporal_routes_agree(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = StdRng::seed_from_u64(seed);
        let src = format!("{SMALL_DOMAIN}{}goal({}).\nhorizon {n}.\n", small_initially(&mut rng), random_literal_text(&mut rng));
        let mut pf = parse(&src);
        let d = pf.domain.clone();
        pf.knowledge = Knowledge::Temporal(random_temporal_formula(&mut rng, &d, 3, true));
        let prob = PlanningProblem::from_file(pf, None).unwrap();
        let r = cross_check(&prob, &PlannerConfig::default()).unwrap();
        prop_assert!(r.agree(), "{:?}", r);
    }

    #[test]
    fn deterministic_domains_give_distinct_action_sequences(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = StdRng::seed_from_u64(seed);
        let src = format!("{SMALL_DOMAIN}{}horizon {n}.\n", small_initially(&mut rng));
        let prob = PlanningProblem::from_file(parse(&src), None).unwrap();
        let r = plan_direct(&prob, &PlannerConfig::default()).unwrap();
        let seqs: BTreeSet<Vec<usize>> = r.plans.iter().map(|p| p.trajectory.actions.clone()).collect();
        prop_assert_eq!(seqs.len(), r.plans.len());
    }

    #[test]
    fn occ_encodings_agree(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = StdRng::seed_from_u64(seed);
        let src = format!("{SMALL_DOMAIN}{}goal({}).\nhorizon {n}.\n", small_initially(&mut rng), random_literal_text(&mut rng));
        let prob = PlanningProblem::from_file(parse(&src), None).unwrap();
        let rules = plan_asp(&prob, &PlannerConfig::default()).unwrap().plans;
        let choice = PlannerConfig {
            encode: EncodeOptions { occ: aspplan_core::encoder::OccEncoding::Choice, ..Default::default() },
            ..Default::default()
        };
        prop_assert_eq!(rules, plan_asp(&prob, &choice).unwrap().plans);
    }
}

#[test]
fn translation_is_deterministic() {
    let prob = PlanningProblem::from_file(corpus::blocks(), None).unwrap();
    let enc = || {
        encode_problem(&prob.domain, &prob.initial, &prob.goal, prob.horizon, &prob.knowledge, EncodeOptions::default())
            .unwrap()
            .to_text()
    };
    assert_eq!(enc(), enc());
}
